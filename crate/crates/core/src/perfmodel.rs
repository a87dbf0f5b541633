//! Empirical Q-value model.
//!
//! Q (dB) falls linearly with distance from a reference reach and loses a
//! fixed amount per adjacent native channel:
//!
//! ```text
//! q = q_ref[m] - slope[m]·(d - l_ref) - p_guard[m]·guarded - p_unguard[m]·unguarded
//!     - roadm_penalty·roadms
//! ```
//!
//! Every parameter is solved exactly from measured points, so the model
//! reproduces each calibration point. It is an interpolation of field data,
//! not a propagation model.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::iofmt::to_canonical_json;
use crate::spectrum::NeighborConfig;
use crate::topology::PathMetrics;

/// Tolerance used to decide that a point sits at the reference distance and
/// that an exactly-determined fit reproduces its inputs.
pub const CALIBRATION_TOLERANCE: f64 = 1e-9;

pub const MODEL_FORM: &str = "empirical-linear-db";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
}

impl Modulation {
    pub const ALL: [Modulation; 2] = [Modulation::Bpsk, Modulation::Qpsk];

    /// Line rate of one carrier.
    pub fn carrier_gbps(self) -> f64 {
        match self {
            Modulation::Bpsk => 25.0,
            Modulation::Qpsk => 50.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Modulation::Bpsk => Modulation::Qpsk,
            Modulation::Qpsk => Modulation::Bpsk,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
        })
    }
}

impl std::str::FromStr for Modulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            other => Err(format!("unknown modulation `{other}` (expected bpsk or qpsk)")),
        }
    }
}

/// One value per modulation format.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerModulation<T> {
    #[serde(rename = "BPSK")]
    pub bpsk: T,
    #[serde(rename = "QPSK")]
    pub qpsk: T,
}

impl<T: Copy> PerModulation<T> {
    pub fn get(&self, m: Modulation) -> T {
        match m {
            Modulation::Bpsk => self.bpsk,
            Modulation::Qpsk => self.qpsk,
        }
    }

    fn set(&mut self, m: Modulation, v: T) {
        match m {
            Modulation::Bpsk => self.bpsk = v,
            Modulation::Qpsk => self.qpsk = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub hard_min_db: f64,
    pub design_min_db: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hard_min_db: 6.5,
            design_min_db: 8.5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.hard_min_db.is_finite() && self.design_min_db.is_finite()) || self.hard_min_db >= self.design_min_db {
            return Err(ModelError(format!(
                "hard minimum {} dB must be below design minimum {} dB",
                self.hard_min_db, self.design_min_db
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QClass {
    Infeasible,
    Marginal,
    Ok,
}

impl fmt::Display for QClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QClass::Infeasible => "Infeasible",
            QClass::Marginal => "Marginal",
            QClass::Ok => "Ok",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QEstimate {
    pub value_db: f64,
    pub class: QClass,
}

impl QEstimate {
    pub fn new(value_db: f64, thresholds: &Thresholds) -> Self {
        Self {
            value_db,
            class: classify_q(value_db, thresholds),
        }
    }
}

impl fmt::Display for QEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} dB ({})", round_report(self.value_db), self.class)
    }
}

/// Q values are reported at 0.01 dB.
pub fn round_report(value_db: f64) -> f64 {
    (value_db * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPoint {
    pub distance_km: f64,
    pub modulation: Modulation,
    pub neighbor_config: NeighborConfig,
    pub measured_q_db: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProvenance {
    pub form: String,
    /// SHA-256 of the canonical JSON of the calibration points.
    pub calibration_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QModel {
    pub l_ref_km: f64,
    pub q_ref_db: PerModulation<f64>,
    pub slope_db_per_km: PerModulation<f64>,
    pub p_guard_db: PerModulation<f64>,
    pub p_unguard_db: PerModulation<f64>,
    #[serde(default)]
    pub roadm_penalty_db: f64,
    pub provenance: ModelProvenance,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid model: {0}")]
pub struct ModelError(pub String);

impl QModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let reals = [
            ("l_ref_km", self.l_ref_km),
            ("roadm_penalty_db", self.roadm_penalty_db),
            ("slope_db_per_km.BPSK", self.slope_db_per_km.bpsk),
            ("slope_db_per_km.QPSK", self.slope_db_per_km.qpsk),
            ("p_guard_db.BPSK", self.p_guard_db.bpsk),
            ("p_guard_db.QPSK", self.p_guard_db.qpsk),
            ("p_unguard_db.BPSK", self.p_unguard_db.bpsk),
            ("p_unguard_db.QPSK", self.p_unguard_db.qpsk),
        ];
        for (name, v) in reals {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if !(self.q_ref_db.bpsk.is_finite() && self.q_ref_db.qpsk.is_finite()) {
            return Err(ModelError("q_ref_db must be finite".into()));
        }
        if self.q_ref_db.bpsk <= self.q_ref_db.qpsk {
            return Err(ModelError(format!(
                "BPSK reference Q {} dB must exceed QPSK reference Q {} dB",
                self.q_ref_db.bpsk, self.q_ref_db.qpsk
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("insufficient calibration points: no {role} point for {modulation}")]
    InsufficientPoints { modulation: Modulation, role: &'static str },
    #[error("insufficient calibration points: no long-distance zero-neighbor point for either modulation")]
    NoSlopePoint,
    #[error("calibration point {index} is inconsistent with the fit (residual {residual:e} dB)")]
    Inconsistent { index: usize, residual: f64 },
    #[error("calibration point {index}: {message}")]
    InvalidPoint { index: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn is_clean(n: &NeighborConfig) -> bool {
    n.guarded_native_count == 0 && n.unguarded_native_count == 0
}

/// Solves a model exactly from measured points.
///
/// Per modulation this needs, at `l_ref_km`: a point with no neighbors, one
/// with guarded natives only, and one with unguarded natives (guarded ones
/// may also be present). One zero-neighbor point away from `l_ref_km` fixes
/// the distance slope; a modulation without one borrows the other's slope.
/// Any further points must agree with the fit to within
/// [`CALIBRATION_TOLERANCE`].
pub fn calibrate(points: &[CalibrationPoint], l_ref_km: f64) -> Result<QModel, CalibrationError> {
    if !l_ref_km.is_finite() || l_ref_km < 0.0 {
        return Err(ModelError(format!("reference distance {l_ref_km} km is invalid")).into());
    }
    for (index, p) in points.iter().enumerate() {
        let invalid = |message: String| Err(CalibrationError::InvalidPoint { index, message });
        if !p.measured_q_db.is_finite() || p.measured_q_db <= 0.0 {
            return invalid(format!("measured Q {} dB must be positive", p.measured_q_db));
        }
        if !p.distance_km.is_finite() || p.distance_km < 0.0 {
            return invalid(format!("distance {} km is invalid", p.distance_km));
        }
        if !p.neighbor_config.is_consistent() {
            return invalid("dedicated-partition point cannot have native neighbors".into());
        }
    }

    let at_ref = |p: &&CalibrationPoint| (p.distance_km - l_ref_km).abs() <= CALIBRATION_TOLERANCE;
    let mut q_ref = PerModulation::default();
    let mut p_guard = PerModulation::default();
    let mut p_unguard = PerModulation::default();
    let mut slope: PerModulation<Option<f64>> = PerModulation::default();

    for m in Modulation::ALL {
        let mine = || points.iter().filter(move |p| p.modulation == m);
        let missing = |role| CalibrationError::InsufficientPoints { modulation: m, role };

        let base = mine()
            .filter(at_ref)
            .find(|p| is_clean(&p.neighbor_config))
            .ok_or_else(|| missing("zero-neighbor reference-distance"))?;
        let guarded = mine()
            .filter(at_ref)
            .find(|p| p.neighbor_config.guarded_native_count > 0 && p.neighbor_config.unguarded_native_count == 0)
            .ok_or_else(|| missing("guarded-neighbor"))?;
        let unguarded = mine()
            .filter(at_ref)
            .find(|p| p.neighbor_config.unguarded_native_count > 0)
            .ok_or_else(|| missing("unguarded-neighbor"))?;

        let q0 = base.measured_q_db;
        let pg = (q0 - guarded.measured_q_db) / f64::from(guarded.neighbor_config.guarded_native_count);
        let g = f64::from(unguarded.neighbor_config.guarded_native_count);
        let u = f64::from(unguarded.neighbor_config.unguarded_native_count);
        let pu = (q0 - pg * g - unguarded.measured_q_db) / u;
        q_ref.set(m, q0);
        p_guard.set(m, pg);
        p_unguard.set(m, pu);

        if let Some(far) = mine().find(|p| !at_ref(p) && is_clean(&p.neighbor_config)) {
            slope.set(m, Some((q0 - far.measured_q_db) / (far.distance_km - l_ref_km)));
        }
    }

    let slope_db_per_km = match (slope.bpsk, slope.qpsk) {
        (Some(b), Some(q)) => PerModulation { bpsk: b, qpsk: q },
        (Some(b), None) => PerModulation { bpsk: b, qpsk: b },
        (None, Some(q)) => PerModulation { bpsk: q, qpsk: q },
        (None, None) => return Err(CalibrationError::NoSlopePoint),
    };

    let model = QModel {
        l_ref_km,
        q_ref_db: q_ref,
        slope_db_per_km,
        p_guard_db: p_guard,
        p_unguard_db: p_unguard,
        roadm_penalty_db: 0.0,
        provenance: ModelProvenance {
            form: MODEL_FORM.into(),
            calibration_sha256: calibration_digest(points),
        },
    };
    model.validate()?;

    for (index, p) in points.iter().enumerate() {
        let q = estimate_value(
            &model,
            &PathMetrics::with_distance(p.distance_km),
            p.modulation,
            p.neighbor_config,
        );
        let residual = q - p.measured_q_db;
        if residual.abs() > CALIBRATION_TOLERANCE {
            return Err(CalibrationError::Inconsistent { index, residual });
        }
    }
    Ok(model)
}

/// SHA-256 over the canonical serialization of `points`.
pub fn calibration_digest(points: &[CalibrationPoint]) -> String {
    hex::encode(Sha256::digest(to_canonical_json(points).as_bytes()))
}

/// Q loss from adjacent natives; zero inside a dedicated partition.
pub fn neighbor_penalty(model: &QModel, neighbors: &NeighborConfig, modulation: Modulation) -> f64 {
    if neighbors.in_dedicated_partition {
        return 0.0;
    }
    model.p_guard_db.get(modulation) * f64::from(neighbors.guarded_native_count)
        + model.p_unguard_db.get(modulation) * f64::from(neighbors.unguarded_native_count)
}

fn estimate_value(model: &QModel, metrics: &PathMetrics, modulation: Modulation, neighbors: NeighborConfig) -> f64 {
    model.q_ref_db.get(modulation)
        - model.slope_db_per_km.get(modulation) * (metrics.distance_km - model.l_ref_km)
        - neighbor_penalty(model, &neighbors, modulation)
        - model.roadm_penalty_db * f64::from(metrics.roadm_count)
}

/// Estimate classified against the default thresholds.
pub fn estimate_q(
    model: &QModel,
    metrics: &PathMetrics,
    modulation: Modulation,
    neighbors: NeighborConfig,
) -> QEstimate {
    estimate_q_with(model, metrics, modulation, neighbors, &Thresholds::default())
}

pub fn estimate_q_with(
    model: &QModel,
    metrics: &PathMetrics,
    modulation: Modulation,
    neighbors: NeighborConfig,
    thresholds: &Thresholds,
) -> QEstimate {
    QEstimate::new(estimate_value(model, metrics, modulation, neighbors), thresholds)
}

/// Infeasible at or below the hard minimum, Ok strictly above the design
/// minimum, Marginal in between.
pub fn classify_q(value_db: f64, thresholds: &Thresholds) -> QClass {
    if value_db.is_nan() || value_db <= thresholds.hard_min_db {
        QClass::Infeasible
    } else if value_db <= thresholds.design_min_db {
        QClass::Marginal
    } else {
        QClass::Ok
    }
}

/// Penalty that coherent neighbors impose on a native IM-DD channel, given
/// how many alien super-channels border it. No such penalty is modelled;
/// the value is always zero.
pub fn assess_native_impact(_alien_neighbors: u32) -> f64 {
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use Modulation::*;

    fn pt(d: f64, m: Modulation, n: NeighborConfig, q: f64) -> CalibrationPoint {
        CalibrationPoint {
            distance_km: d,
            modulation: m,
            neighbor_config: n,
            measured_q_db: q,
        }
    }

    fn table() -> Vec<CalibrationPoint> {
        vec![
            pt(345.0, Qpsk, NeighborConfig::NONE, 13.77),
            pt(345.0, Qpsk, NeighborConfig::mixed(2, 0), 13.32),
            pt(345.0, Qpsk, NeighborConfig::mixed(2, 3), 12.63),
            pt(345.0, Bpsk, NeighborConfig::NONE, 16.37),
            pt(345.0, Bpsk, NeighborConfig::mixed(2, 0), 16.31),
            pt(345.0, Bpsk, NeighborConfig::mixed(2, 3), 16.15),
            pt(1131.0, Qpsk, NeighborConfig::DEDICATED, 11.44),
        ]
    }

    #[test]
    fn solves_reference_and_penalties() {
        let m = calibrate(&table(), 345.0).unwrap();
        assert_eq!(
            m.q_ref_db,
            PerModulation {
                bpsk: 16.37,
                qpsk: 13.77
            }
        );
        assert!((m.p_guard_db.qpsk - 0.225).abs() < 1e-12);
        assert!((m.p_guard_db.bpsk - 0.03).abs() < 1e-12);
        assert!((m.p_unguard_db.qpsk - 0.23).abs() < 1e-12);
        assert!((m.p_unguard_db.bpsk - 0.16 / 3.0).abs() < 1e-12);
        assert!((m.slope_db_per_km.qpsk - 2.33 / 786.0).abs() < 1e-15);
        assert_eq!(m.slope_db_per_km.bpsk, m.slope_db_per_km.qpsk);
        assert_eq!(m.roadm_penalty_db, 0.0);
        assert_eq!(m.provenance.form, MODEL_FORM);
        assert_eq!(m.provenance.calibration_sha256.len(), 64);
    }

    #[test]
    fn missing_roles_are_named() {
        let mut pts = table();
        pts.retain(|p| {
            !(p.modulation == Bpsk
                && p.neighbor_config.guarded_native_count == 2
                && p.neighbor_config.unguarded_native_count == 0)
        });
        assert_eq!(
            calibrate(&pts, 345.0).unwrap_err(),
            CalibrationError::InsufficientPoints {
                modulation: Bpsk,
                role: "guarded-neighbor"
            }
        );
        let mut pts = table();
        pts.pop();
        assert_eq!(calibrate(&pts, 345.0).unwrap_err(), CalibrationError::NoSlopePoint);
    }

    #[test]
    fn inconsistent_duplicate_is_rejected() {
        let mut pts = table();
        pts.push(pt(345.0, Qpsk, NeighborConfig::NONE, 13.70));
        assert!(matches!(
            calibrate(&pts, 345.0).unwrap_err(),
            CalibrationError::Inconsistent { index: 7, .. }
        ));
        let mut pts = table();
        pts.push(pt(345.0, Qpsk, NeighborConfig::NONE, 13.77));
        assert!(calibrate(&pts, 345.0).is_ok());
    }

    #[test]
    fn rejects_bpsk_below_qpsk_and_bad_points() {
        let mut pts = table();
        pts[3].measured_q_db = 13.0;
        pts[4].measured_q_db = 12.9;
        pts[5].measured_q_db = 12.8;
        assert!(matches!(
            calibrate(&pts, 345.0).unwrap_err(),
            CalibrationError::Model(_)
        ));
        let mut pts = table();
        pts[0].measured_q_db = -1.0;
        assert!(matches!(
            calibrate(&pts, 345.0).unwrap_err(),
            CalibrationError::InvalidPoint { index: 0, .. }
        ));
    }

    #[test]
    fn estimates_match_examples() {
        let m = calibrate(&table(), 345.0).unwrap();
        let at = |d: f64, md, n| estimate_q(&m, &PathMetrics::with_distance(d), md, n);
        assert!((at(345.0, Qpsk, NeighborConfig::NONE).value_db - 13.77).abs() < 1e-12);
        assert!((at(345.0, Qpsk, NeighborConfig::mixed(2, 0)).value_db - 13.32).abs() < 1e-12);
        assert!((at(1131.0, Qpsk, NeighborConfig::DEDICATED).value_db - 11.44).abs() < 1e-12);
        assert!((at(345.0, Bpsk, NeighborConfig::mixed(2, 3)).value_db - 16.15).abs() < 1e-12);
        assert_eq!(at(1131.0, Qpsk, NeighborConfig::DEDICATED).class, QClass::Ok);
    }

    #[test]
    fn neighbor_penalty_examples() {
        let m = calibrate(&table(), 345.0).unwrap();
        assert!((neighbor_penalty(&m, &NeighborConfig::mixed(2, 0), Qpsk) - 0.45).abs() < 1e-12);
        assert!((neighbor_penalty(&m, &NeighborConfig::mixed(2, 3), Bpsk) - 0.22).abs() < 1e-12);
        assert_eq!(neighbor_penalty(&m, &NeighborConfig::DEDICATED, Bpsk), 0.0);
        assert_eq!(neighbor_penalty(&m, &NeighborConfig::DEDICATED, Qpsk), 0.0);
    }

    #[test]
    fn roadm_penalty_applies_per_node() {
        let mut m = calibrate(&table(), 345.0).unwrap();
        m.roadm_penalty_db = 0.1;
        let metrics = PathMetrics {
            distance_km: 345.0,
            roadm_count: 3,
            ..PathMetrics::default()
        };
        assert!((estimate_q(&m, &metrics, Qpsk, NeighborConfig::NONE).value_db - 13.47).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let t = Thresholds::default();
        assert_eq!(classify_q(6.4, &t), QClass::Infeasible);
        assert_eq!(classify_q(6.5, &t), QClass::Infeasible);
        assert_eq!(classify_q(7.0, &t), QClass::Marginal);
        assert_eq!(classify_q(8.5, &t), QClass::Marginal);
        assert_eq!(classify_q(11.44, &t), QClass::Ok);
        assert_eq!(classify_q(f64::NAN, &t), QClass::Infeasible);
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(Thresholds::default().validate().is_ok());
        assert!(Thresholds {
            hard_min_db: 9.0,
            design_min_db: 8.5
        }
        .validate()
        .is_err());
    }

    #[test]
    fn native_impact_is_zero() {
        for n in 0..3 {
            assert_eq!(assess_native_impact(n), 0.0);
        }
    }

    #[test]
    fn display_rounds_to_hundredths() {
        let e = QEstimate::new(11.439999999, &Thresholds::default());
        assert_eq!(e.to_string(), "11.44 dB (Ok)");
    }
}
