//! Reading, writing and validating the JSON documents the CLI exchanges.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use awplan_core::adaptation::{EqualizationSummary, NodeEqualization, NodeReadings};
use awplan_core::fixtures;
use awplan_core::iofmt::{from_json_str, to_canonical_json};
use awplan_core::perfmodel::{calibrate, CalibrationPoint, QModel};
use awplan_core::planner::{validate_plan, Demand, PlanReport, PlanViolationCode, PlannerPolicy};
use awplan_core::spectrum::{PlacementRequest, SpectrumGrid};
use awplan_core::topology::{validate_topology, NetworkTopology};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diag::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Topo,
    Grid,
    Calib,
    Model,
    Plan,
    Demands,
    Readings,
    Requests,
    Policy,
}

impl Kind {
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?;
        let stem = name.strip_suffix(".json")?;
        let ext = stem.rsplit_once('.')?.1;
        Self::from_str(ext, true).ok()
    }
}

#[derive(Serialize, Deserialize)]
struct Stamp {
    tool: String,
    version: String,
    created_unix_s: u64,
}

#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    stamp: Stamp,
    result: T,
}

fn is_stamped(text: &str) -> bool {
    matches!(
        serde_json::from_str::<serde_json::Value>(text),
        Ok(serde_json::Value::Object(map)) if map.contains_key("stamp") && map.contains_key("result")
    )
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

/// Parses a document, unwrapping a `--stamp` envelope if present.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    if is_stamped(&text) {
        from_json_str::<Stamped<T>>(&text).map(|s| s.result)
    } else {
        from_json_str::<T>(&text)
    }
    .map_err(|e| Failure::parse(path, &e))
}

pub fn load_topology(path: Option<&Path>) -> Result<NetworkTopology, Failure> {
    let Some(path) = path else {
        return Ok(fixtures::topology().expect("shipped topology parses"));
    };
    let topo: NetworkTopology = load(path)?;
    check_topology(path, &topo)?;
    Ok(topo)
}

fn check_topology(path: &Path, topo: &NetworkTopology) -> Result<(), Failure> {
    let violations = validate_topology(topo);
    if violations.is_empty() {
        return Ok(());
    }
    let details = violations
        .iter()
        .map(|v| format!("{}: {}", code_name(&v.code), v.message))
        .collect();
    Err(Failure::invalid(path, details))
}

pub fn load_points(path: Option<&Path>) -> Result<Vec<CalibrationPoint>, Failure> {
    match path {
        Some(p) => load(p),
        None => Ok(fixtures::calibration_points().expect("shipped calibration parses")),
    }
}

pub fn load_model(path: &Path) -> Result<QModel, Failure> {
    let model: QModel = load(path)?;
    model.validate().map_err(|e| Failure::input(Some(path), e))?;
    Ok(model)
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_output<T: Serialize>(out: Option<&Path>, value: &T, stamp: bool) -> Result<(), Failure> {
    let text = if stamp {
        let created_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        to_canonical_json(&Stamped {
            stamp: Stamp {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                created_unix_s,
            },
            result: value,
        })
    } else {
        to_canonical_json(value)
    };
    write_text(out, &text)
}

#[derive(Serialize)]
pub struct EqualizeOutput {
    pub results: Vec<NodeEqualization>,
    pub summary: EqualizationSummary,
}

fn code_name<T: Serialize>(code: &T) -> String {
    serde_json::to_value(code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Checks `path` as a document of `kind`; returns a one-line summary.
pub fn validate(path: &Path, kind: Kind, grid: &SpectrumGrid) -> Result<String, Failure> {
    let summary = match kind {
        Kind::Topo => {
            let topo: NetworkTopology = load(path)?;
            check_topology(path, &topo)?;
            format!("topology, {} nodes, {} spans", topo.nodes().len(), topo.spans().len())
        }
        Kind::Grid => {
            let g: SpectrumGrid = load(path)?;
            let violations = g.invariant_violations();
            if !violations.is_empty() {
                return Err(Failure::invalid(path, violations));
            }
            format!(
                "grid, {} natives, {} super-channels",
                g.natives().len(),
                g.superchannels().len()
            )
        }
        Kind::Calib => {
            let points: Vec<CalibrationPoint> = load(path)?;
            let l_ref = points
                .iter()
                .find(|p| p.neighbor_config.is_consistent() && !p.neighbor_config.in_dedicated_partition)
                .map_or(fixtures::TRIAL_DISTANCE_KM, |p| p.distance_km);
            calibrate(&points, l_ref).map_err(|e| Failure::invalid(path, vec![e.to_string()]))?;
            format!("calibration, {} points", points.len())
        }
        Kind::Model => {
            load_model(path)?;
            "model".into()
        }
        Kind::Plan => {
            let reports: Vec<PlanReport> = load(path)?;
            let mut details = Vec::new();
            for r in &reports {
                for v in validate_plan(r, grid, &r.thresholds) {
                    let expected = v.code == PlanViolationCode::QBelowHardMin && !r.is_feasible();
                    if !expected {
                        details.push(format!("{}: {}: {}", r.demand.label(), code_name(&v.code), v.message));
                    }
                }
            }
            if !details.is_empty() {
                return Err(Failure::invalid(path, details));
            }
            format!("plan, {} reports", reports.len())
        }
        Kind::Demands => {
            let demands: Vec<Demand> = load(path)?;
            let details: Vec<String> = demands
                .iter()
                .enumerate()
                .filter_map(|(i, d)| {
                    if d.path.is_empty() {
                        Some(format!("[{i}]: empty path"))
                    } else if !(d.required_capacity_gbps.is_finite() && d.required_capacity_gbps > 0.0) {
                        Some(format!("[{i}]: capacity must be positive"))
                    } else {
                        None
                    }
                })
                .collect();
            if !details.is_empty() {
                return Err(Failure::invalid(path, details));
            }
            format!("demands, {} entries", demands.len())
        }
        Kind::Readings => {
            let nodes: Vec<NodeReadings> = load(path)?;
            let details: Vec<String> = nodes
                .iter()
                .flat_map(|n| {
                    n.readings
                        .iter()
                        .filter(|r| !r.power_dbm.is_finite())
                        .map(move |r| format!("{}: `{}` is not finite", n.node, r.channel_ref))
                })
                .collect();
            if !details.is_empty() {
                return Err(Failure::invalid(path, details));
            }
            format!("readings, {} nodes", nodes.len())
        }
        Kind::Requests => {
            let requests: Vec<PlacementRequest> = load(path)?;
            format!("placement requests, {} entries", requests.len())
        }
        Kind::Policy => {
            let policy: PlannerPolicy = load(path)?;
            policy
                .validate()
                .map_err(|e| Failure::invalid(path, vec![e.to_string()]))?;
            "policy".into()
        }
    };
    Ok(summary)
}
