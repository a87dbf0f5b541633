//! Shipped reference data: the host network paths, the field calibration
//! points, a host spectrum snapshot, and one demand file per path.
//!
//! The files live under `fixtures/` in this crate and are embedded so the
//! CLI runs without them on disk.

use crate::iofmt::{from_json_str, ParseError};
use crate::perfmodel::{calibrate, CalibrationError, CalibrationPoint, QModel};
use crate::planner::Demand;
use crate::spectrum::SpectrumGrid;
use crate::topology::{parse_topology, NetworkTopology, TopologyError};

pub const GARR_TOPOLOGY: &str = include_str!("../fixtures/garr.topo.json");
pub const GARR_GRID: &str = include_str!("../fixtures/garr.grid.json");
pub const FIELD_CALIBRATION: &str = include_str!("../fixtures/table1.calib.json");
pub const GARR_DEMANDS: &str = include_str!("../fixtures/garr.demands.json");
pub const BO1_MI1_DEMANDS: &str = include_str!("../fixtures/bo1-mi1.demands.json");
pub const RM2_BO1_DEMANDS: &str = include_str!("../fixtures/rm2-bo1.demands.json");
pub const BA1_BO1_DEMANDS: &str = include_str!("../fixtures/ba1-bo1.demands.json");
pub const RM_MI2_DEMANDS: &str = include_str!("../fixtures/rm-mi2.demands.json");

/// Reference distance of the field-trial measurements.
pub const TRIAL_DISTANCE_KM: f64 = 345.0;

/// Every shipped file as `(file name, contents)`.
pub const ALL: [(&str, &str); 8] = [
    ("garr.topo.json", GARR_TOPOLOGY),
    ("garr.grid.json", GARR_GRID),
    ("table1.calib.json", FIELD_CALIBRATION),
    ("garr.demands.json", GARR_DEMANDS),
    ("bo1-mi1.demands.json", BO1_MI1_DEMANDS),
    ("rm2-bo1.demands.json", RM2_BO1_DEMANDS),
    ("ba1-bo1.demands.json", BA1_BO1_DEMANDS),
    ("rm-mi2.demands.json", RM_MI2_DEMANDS),
];

/// One production path and the metrics it aggregates to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePath {
    pub label: &'static str,
    pub nodes: &'static [&'static str],
    pub distance_km: f64,
    pub attenuation_db: f64,
    pub ola_count: u32,
    pub roadm_count: u32,
    pub raman_span_count: u32,
}

pub const REFERENCE_PATHS: [ReferencePath; 4] = [
    ReferencePath {
        label: "BO1-MI1",
        nodes: &["BO1", "MI1"],
        distance_km: 277.0,
        attenuation_db: 78.0,
        ola_count: 2,
        roadm_count: 2,
        raman_span_count: 1,
    },
    ReferencePath {
        label: "RM2-BO1",
        nodes: &["RM2", "Z1", "BO1"],
        distance_km: 495.0,
        attenuation_db: 105.0,
        ola_count: 4,
        roadm_count: 3,
        raman_span_count: 3,
    },
    ReferencePath {
        label: "BA1-BO1",
        nodes: &["BA1", "X1", "X2", "X3", "X4", "BO1"],
        distance_km: 813.0,
        attenuation_db: 232.0,
        ola_count: 10,
        roadm_count: 6,
        raman_span_count: 2,
    },
    ReferencePath {
        label: "RM-MI2",
        nodes: &["RM2", "Y1", "Y2", "Y3", "MI2"],
        distance_km: 1131.0,
        attenuation_db: 325.0,
        ola_count: 12,
        roadm_count: 5,
        raman_span_count: 3,
    },
];

pub fn topology() -> Result<NetworkTopology, TopologyError> {
    parse_topology(GARR_TOPOLOGY)
}

pub fn grid() -> Result<SpectrumGrid, ParseError> {
    from_json_str(GARR_GRID)
}

pub fn calibration_points() -> Result<Vec<CalibrationPoint>, ParseError> {
    from_json_str(FIELD_CALIBRATION)
}

/// Model calibrated from the shipped points at the trial distance.
pub fn model() -> Result<QModel, CalibrationError> {
    let points = calibration_points().map_err(|e| CalibrationError::InvalidPoint {
        index: 0,
        message: e.to_string(),
    })?;
    calibrate(&points, TRIAL_DISTANCE_KM)
}

pub fn demands(document: &str) -> Result<Vec<Demand>, ParseError> {
    from_json_str(document)
}
