mod diag;
mod docs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use awplan_core::adaptation::{
    compute_voa_settings, equalization_report, NodeEqualization, DEFAULT_FLATNESS_TOLERANCE_DB,
};
use awplan_core::fixtures::{self, REFERENCE_PATHS};
use awplan_core::iofmt::export_q_vs_distance;
use awplan_core::perfmodel::{calibrate, estimate_q_with, Modulation, QModel};
use awplan_core::planner::{plan_demands, Demand, PlanReport, PlannerPolicy};
use awplan_core::spectrum::{NeighborConfig, PlacementRequest, SpectrumGrid};
use awplan_core::topology::PathMetrics;
use clap::{Args, Parser, Subcommand, ValueEnum};

use diag::{Diagnostics, Failure};
use docs::{load, load_model, load_points, load_topology, write_output, Kind};

#[derive(Parser)]
#[command(
    name = "awplan",
    version,
    about = "Alien-wavelength planning over a legacy DWDM network"
)]
struct Cli {
    /// Emit diagnostics on stderr as JSON lines.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Wrap results in an envelope with tool version and creation time.
    #[arg(long, global = true)]
    stamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Q model from calibration points.
    Calibrate {
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Reference distance of the zero-neighbor points.
        #[arg(long, default_value_t = fixtures::TRIAL_DISTANCE_KM)]
        l_ref: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate Q for one distance, modulation and neighbor context.
    Estimate {
        #[arg(long, allow_negative_numbers = true)]
        distance: f64,
        #[arg(long, value_parser = parse_modulation)]
        modulation: Modulation,
        /// `none`, `dedicated`, or `G,U` guarded and unguarded native counts.
        #[arg(long, default_value = "none", value_parser = parse_neighbors)]
        neighbors: NeighborConfig,
        #[arg(long, default_value_t = 0)]
        roadms: u32,
        #[command(flatten)]
        model: ModelSource,
    },
    /// First-fit a batch of placement requests onto a grid.
    Allocate {
        /// Defaults to the shipped host spectrum snapshot.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        requests: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan alien super-channels for a list of demands.
    Plan {
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Defaults to the shipped RM-MI2 demand.
        #[arg(long)]
        demands: Option<PathBuf>,
        #[command(flatten)]
        model: ModelSource,
        /// Defaults to the shipped host spectrum snapshot.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export Q versus distance for plotting.
    ExportPlot {
        /// Comma-separated distances in km; defaults to the reference paths and the trial distance.
        #[arg(long, value_delimiter = ',')]
        distances: Vec<f64>,
        #[arg(long, default_value = "qpsk", value_parser = parse_modulation)]
        modulation: Modulation,
        #[arg(long, default_value = "dedicated", value_parser = parse_neighbors)]
        neighbors: NeighborConfig,
        #[arg(long, value_enum, default_value_t = PlotFormat::Csv)]
        format: PlotFormat,
        #[command(flatten)]
        model: ModelSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a document against its schema and invariants.
    Validate {
        file: PathBuf,
        /// Document kind; inferred from the file extension when omitted.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Grid that plan placements are checked against; defaults to an empty band.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Compute per-channel attenuator settings from power readings.
    Equalize {
        #[arg(long)]
        readings: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        target_dbm: f64,
        #[arg(long, default_value_t = DEFAULT_FLATNESS_TOLERANCE_DB)]
        tolerance_db: f64,
        /// Grid used to flag unknown channel refs.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelSource {
    /// Calibration points; defaults to the shipped field measurements.
    #[arg(long, conflicts_with = "model")]
    calib: Option<PathBuf>,
    /// A previously exported model.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Base policy document; the flags below override its fields.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    guard_band_slots: Option<usize>,
    #[arg(long)]
    qpsk_mixed_reach_limit_km: Option<f64>,
    #[arg(long)]
    hard_min_db: Option<f64>,
    #[arg(long)]
    design_min_db: Option<f64>,
    #[arg(long)]
    edge_carrier_sacrifice: Option<u8>,
    #[arg(long)]
    per_pair_modulation: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Csv,
    Json,
}

fn parse_modulation(s: &str) -> Result<Modulation, String> {
    s.parse()
        .map_err(|_| format!("unknown modulation `{s}`, expected bpsk or qpsk"))
}

fn parse_neighbors(s: &str) -> Result<NeighborConfig, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(NeighborConfig::NONE),
        "dedicated" => Ok(NeighborConfig::DEDICATED),
        other => {
            let (g, u) = other
                .split_once(',')
                .ok_or_else(|| format!("`{s}` is not none, dedicated or G,U"))?;
            let count = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("`{v}` is not a count"));
            Ok(NeighborConfig::mixed(count(g)?, count(u)?))
        }
    }
}

impl ModelSource {
    fn resolve(&self) -> Result<QModel, Failure> {
        match (&self.model, &self.calib) {
            (Some(path), _) => load_model(path),
            (None, calib) => {
                let points = load_points(calib.as_deref())?;
                calibrate(&points, fixtures::TRIAL_DISTANCE_KM).map_err(|e| Failure::input(calib.as_deref(), e))
            }
        }
    }
}

impl PolicyArgs {
    fn resolve(&self) -> Result<PlannerPolicy, Failure> {
        let mut policy = match &self.policy {
            Some(path) => load::<PlannerPolicy>(path)?,
            None => PlannerPolicy::default(),
        };
        if let Some(v) = self.guard_band_slots {
            policy.guard_band_slots = v;
        }
        if let Some(v) = self.qpsk_mixed_reach_limit_km {
            policy.qpsk_mixed_reach_limit_km = v;
        }
        if let Some(v) = self.hard_min_db {
            policy.thresholds.hard_min_db = v;
        }
        if let Some(v) = self.design_min_db {
            policy.thresholds.design_min_db = v;
        }
        if let Some(v) = self.edge_carrier_sacrifice {
            policy.dedicated_edge_carrier_sacrifice = v;
        }
        policy.per_pair_modulation |= self.per_pair_modulation;
        policy
            .validate()
            .map_err(|e| Failure::input(self.policy.as_deref(), e))?;
        Ok(policy)
    }
}

fn load_grid(path: Option<&Path>) -> Result<SpectrumGrid, Failure> {
    match path {
        Some(p) => load(p),
        None => Ok(fixtures::grid().expect("shipped grid parses")),
    }
}

fn run(cli: &Cli, diag: &Diagnostics) -> Result<ExitCode, Failure> {
    let stamp = cli.stamp;
    match &cli.command {
        Command::Calibrate { calib, l_ref, out } => {
            let points = load_points(calib.as_deref())?;
            let model = calibrate(&points, *l_ref).map_err(|e| Failure::input(calib.as_deref(), e))?;
            write_output(out.as_deref(), &model, stamp)?;
        }
        Command::Estimate {
            distance,
            modulation,
            neighbors,
            roadms,
            model,
        } => {
            if !distance.is_finite() || *distance < 0.0 {
                return Err(Failure::usage(format!(
                    "distance {distance} km must be finite and non-negative"
                )));
            }
            let model = model.resolve()?;
            let metrics = PathMetrics {
                roadm_count: *roadms,
                ..PathMetrics::with_distance(*distance)
            };
            let q = estimate_q_with(
                &model,
                &metrics,
                *modulation,
                *neighbors,
                &PlannerPolicy::default().thresholds,
            );
            println!("{:.2} {:?}", q.value_db, q.class);
        }
        Command::Allocate { grid, requests, out } => {
            let grid = load_grid(grid.as_deref())?;
            let requests: Vec<PlacementRequest> = load(requests)?;
            let allocation = grid.first_fit_allocate(&requests);
            for a in &allocation.assignments {
                if let awplan_core::spectrum::AllocationOutcome::Unplaced { reason } = &a.outcome {
                    diag.warning(&format!("request `{}` not placed: {reason}", a.id));
                }
            }
            write_output(out.as_deref(), &allocation, stamp)?;
        }
        Command::Plan {
            topology,
            demands,
            model,
            grid,
            policy,
            out,
        } => {
            let policy = policy.resolve()?;
            let topo = load_topology(topology.as_deref())?;
            let demands: Vec<Demand> = match demands {
                Some(p) => load(p)?,
                None => fixtures::demands(fixtures::RM_MI2_DEMANDS).expect("shipped demands parse"),
            };
            let model = model.resolve()?;
            let grid = load_grid(grid.as_deref())?;
            let mut reports: Vec<PlanReport> = Vec::with_capacity(demands.len());
            for (d, r) in demands
                .iter()
                .zip(plan_demands(&demands, &topo, &grid, &model, &policy))
            {
                let r = r.map_err(|e| Failure::input(None, format!("demand {}: {e}", d.label())))?;
                diag.note(&format!("{}: {} at Q {}", d.label(), r.chosen.describe(), r.chosen.q));
                for w in &r.warnings {
                    diag.warning(&format!("{}: {w}", d.label()));
                }
                reports.push(r);
            }
            write_output(out.as_deref(), &reports, stamp)?;
            if reports.iter().any(|r| !r.is_feasible()) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ExportPlot {
            distances,
            modulation,
            neighbors,
            format,
            model,
            out,
        } => {
            let model = model.resolve()?;
            let distances = if distances.is_empty() {
                let mut d: Vec<f64> = REFERENCE_PATHS.iter().map(|r| r.distance_km).collect();
                d.push(fixtures::TRIAL_DISTANCE_KM);
                d
            } else {
                distances.clone()
            };
            let series = export_q_vs_distance(&model, *modulation, *neighbors, &distances)
                .map_err(|e| Failure::usage(e.to_string()))?;
            match format {
                PlotFormat::Csv => docs::write_text(out.as_deref(), &series.to_csv())?,
                PlotFormat::Json => write_output(out.as_deref(), &series, stamp)?,
            }
        }
        Command::Validate { file, kind, grid } => {
            let kind = match kind {
                Some(k) => *k,
                None => Kind::from_path(file).ok_or_else(|| {
                    Failure::usage(format!("cannot infer the kind of `{}`; pass --kind", file.display()))
                })?,
            };
            let grid = match grid {
                Some(p) => load(p)?,
                None => SpectrumGrid::default(),
            };
            let summary = docs::validate(file, kind, &grid)?;
            println!("ok: {} ({summary})", file.display());
        }
        Command::Equalize {
            readings,
            target_dbm,
            tolerance_db,
            grid,
            out,
        } => {
            let nodes: Vec<awplan_core::adaptation::NodeReadings> = load(readings)?;
            let mut results = Vec::with_capacity(nodes.len());
            for n in nodes {
                let result = compute_voa_settings(&n.readings, *target_dbm)
                    .map_err(|e| Failure::input(Some(readings), format!("node {}: {e}", n.node)))?;
                results.push(NodeEqualization { node: n.node, result });
            }
            let summary = equalization_report(&load_grid(grid.as_deref())?, &results, *tolerance_db);
            for node in &summary.failing_nodes {
                diag.warning(&format!("node {node} is not flat within {tolerance_db} dB"));
            }
            let all_pass = summary.all_pass();
            write_output(out.as_deref(), &docs::EqualizeOutput { results, summary }, stamp)?;
            if !all_pass {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let diag = Diagnostics::from_env(cli.json_errors);
    match run(&cli, &diag) {
        Ok(code) => code,
        Err(failure) => {
            diag.failure(&failure);
            ExitCode::from(2)
        }
    }
}
