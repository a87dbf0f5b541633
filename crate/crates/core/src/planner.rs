//! Spectrum-strategy and modulation planning for one super-channel demand.
//!
//! A demand is evaluated as a small set of options: the super-channel in the
//! mixed native/alien spectrum with uniform BPSK or QPSK, and all-QPSK inside
//! a dedicated partition with one edge carrier given up to the grid
//! mismatch. Each option gets a Q estimate; the feasible option with the most
//! capacity wins.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perfmodel::{
    assess_native_impact, estimate_q_with, ModelProvenance, Modulation, QClass, QEstimate, QModel, Thresholds,
};
use crate::spectrum::{
    AllocationOutcome, DedicatedPartition, NeighborConfig, PlacementRequest, SpectrumError, SpectrumGrid, SuperChannel,
    CARRIER_PAIRS, DEFAULT_GUARD_BAND_SLOTS, MAX_CARRIERS,
};
use crate::topology::{NetworkTopology, PathError, PathMetrics};

pub type PairModulations = [Modulation; CARRIER_PAIRS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    pub path: Vec<String>,
    pub required_capacity_gbps: f64,
}

impl Demand {
    pub fn label(&self) -> String {
        match (self.path.first(), self.path.last()) {
            (Some(a), Some(b)) => format!("{a}-{b}"),
            _ => "<empty>".into(),
        }
    }
}

/// A measured Q value that replaces the model estimate for one option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QOverride {
    pub strategy: Strategy,
    pub pair_modulations: PairModulations,
    pub value_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerPolicy {
    pub guard_band_slots: usize,
    pub qpsk_mixed_reach_limit_km: f64,
    pub dedicated_edge_carrier_sacrifice: u8,
    pub thresholds: Thresholds,
    /// Also enumerate non-uniform per-pair modulation assignments.
    pub per_pair_modulation: bool,
    pub q_overrides: Vec<QOverride>,
}

impl Default for PlannerPolicy {
    fn default() -> Self {
        Self {
            guard_band_slots: DEFAULT_GUARD_BAND_SLOTS,
            qpsk_mixed_reach_limit_km: 1000.0,
            dedicated_edge_carrier_sacrifice: 1,
            thresholds: Thresholds::default(),
            per_pair_modulation: false,
            q_overrides: Vec::new(),
        }
    }
}

impl PlannerPolicy {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.dedicated_edge_carrier_sacrifice > 1 {
            return Err(PlanError::Policy(format!(
                "edge carrier sacrifice {} exceeds 1",
                self.dedicated_edge_carrier_sacrifice
            )));
        }
        if !self.qpsk_mixed_reach_limit_km.is_finite() || self.qpsk_mixed_reach_limit_km < 0.0 {
            return Err(PlanError::Policy(format!(
                "mixed QPSK reach limit {} km is invalid",
                self.qpsk_mixed_reach_limit_km
            )));
        }
        self.thresholds.validate().map_err(|e| PlanError::Policy(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    MixedSpectrum,
    DedicatedPartition,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::MixedSpectrum => "mixed spectrum",
            Strategy::DedicatedPartition => "dedicated partition",
        })
    }
}

/// Where an option's super-channel would sit, and the partition to carve
/// first if one is needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub start_slot: usize,
    pub width_slots: usize,
    pub carve_partition: Option<DedicatedPartition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOption {
    pub strategy: Strategy,
    pub pair_modulations: PairModulations,
    pub active_carriers: u8,
    pub capacity_gbps: f64,
    pub q: QEstimate,
    pub neighbors: NeighborConfig,
    pub feasible: bool,
    pub placement: Option<Placement>,
    pub infeasible_reasons: Vec<String>,
    pub warnings: Vec<String>,
}

impl PlanOption {
    pub fn describe(&self) -> String {
        format!(
            "{} {} ({} carriers, {} Gbps)",
            self.strategy,
            describe_modulations(&self.pair_modulations),
            self.active_carriers,
            self.capacity_gbps
        )
    }
}

fn describe_modulations(mods: &PairModulations) -> String {
    if mods.iter().all(|m| *m == mods[0]) {
        format!("all-{}", mods[0])
    } else {
        mods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("/")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanOutcome {
    Feasible,
    /// The best feasible option delivers less than the demand asked for.
    CapacityShortfall {
        shortfall_gbps: f64,
    },
    /// Nothing is deployable; `chosen` is the option with the highest Q.
    NoFeasibleOption {
        q_shortfall_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanReport {
    pub demand: Demand,
    pub metrics: PathMetrics,
    pub outcome: PlanOutcome,
    pub chosen: PlanOption,
    pub alternatives: Vec<PlanOption>,
    pub warnings: Vec<String>,
    pub rationale: String,
    pub native_impact_db: f64,
    pub model_provenance: ModelProvenance,
    /// Thresholds the option classes were assigned under.
    pub thresholds: Thresholds,
}

impl PlanReport {
    pub fn is_feasible(&self) -> bool {
        !matches!(self.outcome, PlanOutcome::NoFeasibleOption { .. })
    }

    /// Id used for the super-channel when the plan is committed to a grid.
    pub fn superchannel_id(&self) -> String {
        format!("aw:{}", self.demand.path.join("-"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid demand: {0}")]
    Demand(String),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("no options could be evaluated")]
    NoOptions,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{active} active carriers exceeds {MAX_CARRIERS}")]
pub struct CapacityError {
    pub active: u8,
}

/// Capacity of a super-channel whose first `active_carriers` carriers are
/// lit, filling pairs in order; a dropped edge carrier comes off the last
/// pair.
pub fn superchannel_capacity(pair_modulations: &PairModulations, active_carriers: u8) -> Result<f64, CapacityError> {
    if active_carriers > MAX_CARRIERS {
        return Err(CapacityError {
            active: active_carriers,
        });
    }
    Ok((0..usize::from(active_carriers))
        .map(|carrier| pair_modulations[carrier / 2].carrier_gbps())
        .sum())
}

/// Spectrum available to a demand: the best mixed-spectrum slot with its
/// native neighbors, and the dedicated placement, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridContext {
    pub width_slots: usize,
    pub mixed: Option<MixedSlot>,
    pub dedicated: Option<Placement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedSlot {
    pub start_slot: usize,
    pub neighbors: NeighborConfig,
}

impl GridContext {
    /// Clean spectrum with room for both strategies.
    pub fn clean(width_slots: usize) -> Self {
        Self {
            width_slots,
            mixed: Some(MixedSlot {
                start_slot: 0,
                neighbors: NeighborConfig::NONE,
            }),
            dedicated: Some(Placement {
                start_slot: 0,
                width_slots,
                carve_partition: Some(DedicatedPartition {
                    start_slot: 0,
                    width_slots,
                }),
            }),
        }
    }
}

const PROBE_ID: &str = "\u{0}probe";

/// Finds where each strategy would place a new super-channel on `grid`.
///
/// Mixed placement prefers the lowest window that keeps `guard_band_slots`
/// from every native and falls back to the lowest unguarded one. Dedicated
/// placement uses a free window in an existing partition, else the lowest
/// carvable region.
pub fn grid_context(grid: &SpectrumGrid, guard_band_slots: usize) -> GridContext {
    let width = grid.band().superchannel_width_slots;
    let mixed = [guard_band_slots, 0].into_iter().find_map(|guard| {
        let start = (0..=grid.band().slot_count.checked_sub(width)?).find(|&s| {
            let slots = s..s + width;
            let halo = s.saturating_sub(guard)..s + width + guard;
            grid.is_free(&slots)
                && !grid
                    .partitions()
                    .iter()
                    .any(|p| p.start_slot < slots.end && slots.start < p.start_slot + p.width_slots)
                && !grid
                    .natives()
                    .iter()
                    .any(|n| n.slots().start < halo.end && halo.start < n.slots().end)
        })?;
        let probe = grid
            .place_superchannel(SuperChannel::uniform(PROBE_ID, start, width, Modulation::Qpsk))
            .ok()?;
        Some(MixedSlot {
            start_slot: start,
            neighbors: probe.neighbor_context(PROBE_ID, guard_band_slots).ok()?,
        })
    });

    let in_partition =
        grid.first_fit_allocate(&[PlacementRequest::superchannel(PROBE_ID, Modulation::Qpsk).in_partition()]);
    let dedicated = match &in_partition.assignments[0].outcome {
        AllocationOutcome::Placed { start_slot } => Some(Placement {
            start_slot: *start_slot,
            width_slots: width,
            carve_partition: None,
        }),
        AllocationOutcome::Unplaced { .. } => grid.find_carvable_region(width).map(|start| {
            let region = width + width % 2;
            Placement {
                start_slot: start,
                width_slots: width,
                carve_partition: Some(DedicatedPartition {
                    start_slot: start,
                    width_slots: region,
                }),
            }
        }),
    };
    GridContext {
        width_slots: width,
        mixed,
        dedicated,
    }
}

fn all_assignments() -> Vec<PairModulations> {
    (0u32..1 << CARRIER_PAIRS)
        .map(|bits| {
            std::array::from_fn(|i| {
                if bits >> i & 1 == 1 {
                    Modulation::Qpsk
                } else {
                    Modulation::Bpsk
                }
            })
        })
        .collect()
}

/// Every option for `demand`, infeasible ones included and flagged.
pub fn enumerate_options(
    _demand: &Demand,
    metrics: &PathMetrics,
    context: &GridContext,
    model: &QModel,
    policy: &PlannerPolicy,
) -> Vec<PlanOption> {
    let uniform = |m| [m; CARRIER_PAIRS];
    let (mixed_sets, dedicated_sets) = if policy.per_pair_modulation {
        (all_assignments(), all_assignments())
    } else {
        (
            vec![uniform(Modulation::Bpsk), uniform(Modulation::Qpsk)],
            vec![uniform(Modulation::Qpsk)],
        )
    };

    let mut options = Vec::new();
    for mods in mixed_sets {
        let (placement, neighbors) = match context.mixed {
            Some(slot) => (
                Some(Placement {
                    start_slot: slot.start_slot,
                    width_slots: context.width_slots,
                    carve_partition: None,
                }),
                slot.neighbors,
            ),
            None => (None, NeighborConfig::NONE),
        };
        let mut option = evaluate(
            Strategy::MixedSpectrum,
            mods,
            MAX_CARRIERS,
            neighbors,
            placement,
            metrics,
            model,
            policy,
        );
        if context.mixed.is_none() {
            option
                .infeasible_reasons
                .push("no free window in the mixed spectrum".into());
        }
        if mods.contains(&Modulation::Qpsk) && metrics.distance_km > policy.qpsk_mixed_reach_limit_km {
            option.infeasible_reasons.push(format!(
                "{} km exceeds the {} km reach limit for QPSK beside native channels",
                metrics.distance_km, policy.qpsk_mixed_reach_limit_km
            ));
        }
        option.feasible = option.infeasible_reasons.is_empty();
        options.push(option);
    }
    if let Some(placement) = &context.dedicated {
        let active = MAX_CARRIERS - policy.dedicated_edge_carrier_sacrifice;
        for mods in dedicated_sets {
            let mut option = evaluate(
                Strategy::DedicatedPartition,
                mods,
                active,
                NeighborConfig::DEDICATED,
                Some(placement.clone()),
                metrics,
                model,
                policy,
            );
            option.feasible = option.infeasible_reasons.is_empty();
            options.push(option);
        }
    }
    options
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    strategy: Strategy,
    pair_modulations: PairModulations,
    active_carriers: u8,
    neighbors: NeighborConfig,
    placement: Option<Placement>,
    metrics: &PathMetrics,
    model: &QModel,
    policy: &PlannerPolicy,
) -> PlanOption {
    let thresholds = &policy.thresholds;
    let overridden = policy
        .q_overrides
        .iter()
        .find(|o| o.strategy == strategy && o.pair_modulations == pair_modulations);
    let q = match overridden {
        Some(o) => QEstimate::new(o.value_db, thresholds),
        None => {
            // The weakest lit pair bounds the super-channel.
            let lit = &pair_modulations[..usize::from(active_carriers).div_ceil(2)];
            lit.iter()
                .map(|&m| estimate_q_with(model, metrics, m, neighbors, thresholds))
                .min_by(|a, b| a.value_db.total_cmp(&b.value_db))
                .unwrap_or_else(|| QEstimate::new(f64::INFINITY, thresholds))
        }
    };
    let mut infeasible_reasons = Vec::new();
    let mut warnings = Vec::new();
    match q.class {
        QClass::Infeasible => infeasible_reasons.push(format!(
            "Q {:.2} dB is at or below the {} dB hard minimum",
            q.value_db, thresholds.hard_min_db
        )),
        QClass::Marginal => warnings.push(design_warning(&q, thresholds)),
        QClass::Ok => {}
    }
    PlanOption {
        strategy,
        pair_modulations,
        active_carriers,
        capacity_gbps: superchannel_capacity(&pair_modulations, active_carriers).expect("active carriers bounded"),
        q,
        neighbors,
        feasible: false,
        placement,
        infeasible_reasons,
        warnings,
    }
}

fn design_warning(q: &QEstimate, thresholds: &Thresholds) -> String {
    format!(
        "Q {:.2} dB is below the {} dB design threshold",
        q.value_db, thresholds.design_min_db
    )
}

/// True when `a` should be chosen over `b`: more capacity, then higher Q,
/// then mixed spectrum (no carving).
fn better(a: &PlanOption, b: &PlanOption) -> bool {
    let key = |o: &PlanOption| (o.capacity_gbps, o.q.value_db, o.strategy == Strategy::MixedSpectrum);
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.cmp(&kb.2))
        .is_gt()
}

/// Picks the best option and assembles the report.
pub fn choose(
    demand: &Demand,
    metrics: PathMetrics,
    options: Vec<PlanOption>,
    model: &QModel,
    policy: &PlannerPolicy,
) -> Result<PlanReport, PlanError> {
    let thresholds = &policy.thresholds;
    let best_feasible = options
        .iter()
        .enumerate()
        .filter(|(_, o)| o.feasible)
        .fold(None::<(usize, &PlanOption)>, |acc, (i, o)| match acc {
            Some((_, cur)) if !better(o, cur) => acc,
            _ => Some((i, o)),
        })
        .map(|(i, _)| i);
    let chosen_index = match best_feasible {
        Some(i) => i,
        None => options
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.q.value_db.total_cmp(&b.q.value_db).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .ok_or(PlanError::NoOptions)?,
    };
    let mut alternatives = options;
    let chosen = alternatives.remove(chosen_index);

    let mut warnings = Vec::new();
    let outcome = if best_feasible.is_none() {
        let q_shortfall_db = (thresholds.hard_min_db - chosen.q.value_db).max(0.0);
        warnings.push(format!(
            "no feasible option; best is {} at {}, {:.2} dB short of the {} dB hard minimum",
            chosen.describe(),
            chosen.q,
            q_shortfall_db,
            thresholds.hard_min_db
        ));
        PlanOutcome::NoFeasibleOption { q_shortfall_db }
    } else if chosen.capacity_gbps < demand.required_capacity_gbps {
        let shortfall_gbps = demand.required_capacity_gbps - chosen.capacity_gbps;
        warnings.push(format!(
            "demand of {} Gbps exceeds best feasible capacity of {} Gbps by {} Gbps",
            demand.required_capacity_gbps, chosen.capacity_gbps, shortfall_gbps
        ));
        PlanOutcome::CapacityShortfall { shortfall_gbps }
    } else {
        PlanOutcome::Feasible
    };
    if chosen.q.class == QClass::Marginal {
        warnings.push(design_warning(&chosen.q, thresholds));
    }

    let mut rationale = format!("Chose {} at Q {}.", chosen.describe(), chosen.q);
    for alt in &alternatives {
        let why = if !alt.feasible {
            alt.infeasible_reasons.join("; ")
        } else if alt.capacity_gbps < chosen.capacity_gbps {
            "lower capacity".to_string()
        } else if alt.q.value_db < chosen.q.value_db {
            "equal capacity, lower Q".to_string()
        } else {
            "equal capacity and Q; mixed spectrum avoids carving a partition".to_string()
        };
        rationale.push_str(&format!(" Rejected {}: {}.", alt.describe(), why));
    }

    Ok(PlanReport {
        demand: demand.clone(),
        metrics,
        outcome,
        chosen,
        alternatives,
        warnings,
        rationale,
        native_impact_db: assess_native_impact(1),
        model_provenance: model.provenance.clone(),
        thresholds: policy.thresholds,
    })
}

/// Plans `demand` against the current spectrum without modifying it.
pub fn plan_link(
    demand: &Demand,
    topology: &NetworkTopology,
    grid: &SpectrumGrid,
    model: &QModel,
    policy: &PlannerPolicy,
) -> Result<PlanReport, PlanError> {
    if demand.path.is_empty() {
        return Err(PlanError::Demand("path is empty".into()));
    }
    if !(demand.required_capacity_gbps.is_finite() && demand.required_capacity_gbps > 0.0) {
        return Err(PlanError::Demand(format!(
            "required capacity {} Gbps must be positive",
            demand.required_capacity_gbps
        )));
    }
    policy.validate()?;
    let metrics = topology.aggregate_path(&demand.path)?;
    let context = grid_context(grid, policy.guard_band_slots);
    let options = enumerate_options(demand, &metrics, &context, model, policy);
    choose(demand, metrics, options, model, policy)
}

/// Plans independent demands concurrently; results keep input order.
pub fn plan_demands(
    demands: &[Demand],
    topology: &NetworkTopology,
    grid: &SpectrumGrid,
    model: &QModel,
    policy: &PlannerPolicy,
) -> Vec<Result<PlanReport, PlanError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = demands
            .iter()
            .map(|d| scope.spawn(move || plan_link(d, topology, grid, model, policy)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("planning does not panic"))
            .collect()
    })
}

/// Applies the chosen option to `grid`: carves its partition if needed and
/// places the super-channel.
pub fn commit_plan(grid: &SpectrumGrid, report: &PlanReport) -> Result<SpectrumGrid, SpectrumError> {
    let Some(placement) = &report.chosen.placement else {
        return Err(SpectrumError::UnknownOccupant(report.superchannel_id()));
    };
    let grid = match &placement.carve_partition {
        Some(p) => grid.carve_dedicated_partition(p.start_slot, p.width_slots)?,
        None => grid.clone(),
    };
    let mut sc = SuperChannel::new(
        report.superchannel_id(),
        placement.start_slot,
        placement.width_slots,
        report.chosen.pair_modulations,
    );
    let full = 2 * CARRIER_PAIRS as u8;
    if report.chosen.active_carriers < full {
        // Disable pairs that carry no carrier at all.
        let lit_pairs = usize::from(report.chosen.active_carriers).div_ceil(2);
        for pair in &mut sc.pairs[lit_pairs..] {
            pair.enabled = false;
        }
    }
    grid.place_superchannel(sc.with_active_carriers(report.chosen.active_carriers))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanViolationCode {
    QBelowHardMin,
    ClassMismatch,
    CapacityMismatch,
    CarrierCount,
    PlacementConflict,
    MissingDesignWarning,
    NotMaximal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanViolation {
    pub code: PlanViolationCode,
    pub message: String,
}

/// Checks a (possibly hand-edited) report against the grid and thresholds.
pub fn validate_plan(report: &PlanReport, grid: &SpectrumGrid, thresholds: &Thresholds) -> Vec<PlanViolation> {
    use PlanViolationCode::*;
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(PlanViolation { code, message });
    let chosen = &report.chosen;

    if chosen.q.value_db.is_nan() || chosen.q.value_db <= thresholds.hard_min_db {
        push(
            QBelowHardMin,
            format!(
                "chosen Q {} dB is at or below {} dB",
                chosen.q.value_db, thresholds.hard_min_db
            ),
        );
    } else {
        let class = crate::perfmodel::classify_q(chosen.q.value_db, thresholds);
        if class != chosen.q.class {
            push(
                ClassMismatch,
                format!(
                    "Q {} dB classifies as {class}, report says {}",
                    chosen.q.value_db, chosen.q.class
                ),
            );
        }
        let design_warnings = report
            .warnings
            .iter()
            .filter(|w| w.contains("design threshold"))
            .count();
        if class == QClass::Marginal && design_warnings != 1 {
            push(
                MissingDesignWarning,
                format!("marginal plan carries {design_warnings} design-threshold warnings, expected 1"),
            );
        }
    }

    for option in std::iter::once(chosen).chain(&report.alternatives) {
        match superchannel_capacity(&option.pair_modulations, option.active_carriers) {
            Ok(cap) if (cap - option.capacity_gbps).abs() > 1e-9 => push(
                CapacityMismatch,
                format!(
                    "{} claims {} Gbps but its pairs give {cap} Gbps",
                    option.describe(),
                    option.capacity_gbps
                ),
            ),
            Ok(_) => {}
            Err(e) => push(CarrierCount, e.to_string()),
        }
    }

    if report.is_feasible() {
        if let Some(alt) = report
            .alternatives
            .iter()
            .find(|a| a.feasible && a.capacity_gbps > chosen.capacity_gbps)
        {
            push(
                NotMaximal,
                format!("feasible alternative {} beats the chosen capacity", alt.describe()),
            );
        }
    }

    match commit_plan(grid, report) {
        Ok(committed) => {
            for v in committed.invariant_violations() {
                push(PlacementConflict, v);
            }
        }
        Err(e) => push(PlacementConflict, e.to_string()),
    }
    out
}
