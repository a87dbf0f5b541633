//! Adaptation layer: per-channel VOA settings that bring measured powers
//! down to a flat target, and per-node flatness verdicts.
//!
//! Attenuators can only remove power. A channel already below target keeps
//! zero attenuation and is reported as clipped.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::SpectrumGrid;

pub const DEFAULT_FLATNESS_TOLERANCE_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerReading {
    pub channel_ref: String,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoaSetting {
    pub channel_ref: String,
    pub attenuation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizationResult {
    pub settings: Vec<VoaSetting>,
    pub max_residual_db: f64,
    pub clipped_channels: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptationError {
    #[error("no power readings")]
    EmptyReadings,
    #[error("reading for `{0}` is not finite")]
    NonFinite(String),
    #[error("target power {0} dBm is not finite")]
    InvalidTarget(f64),
}

pub fn compute_voa_settings(readings: &[PowerReading], target_dbm: f64) -> Result<EqualizationResult, AdaptationError> {
    if readings.is_empty() {
        return Err(AdaptationError::EmptyReadings);
    }
    if !target_dbm.is_finite() {
        return Err(AdaptationError::InvalidTarget(target_dbm));
    }
    let mut settings = Vec::with_capacity(readings.len());
    let mut clipped_channels = Vec::new();
    let mut max_residual_db: f64 = 0.0;
    for r in readings {
        if !r.power_dbm.is_finite() {
            return Err(AdaptationError::NonFinite(r.channel_ref.clone()));
        }
        let excess = r.power_dbm - target_dbm;
        let attenuation_db = excess.max(0.0);
        if excess < 0.0 {
            clipped_channels.push(r.channel_ref.clone());
        }
        let achieved = r.power_dbm - attenuation_db;
        max_residual_db = max_residual_db.max((achieved - target_dbm).abs());
        settings.push(VoaSetting {
            channel_ref: r.channel_ref.clone(),
            attenuation_db,
        });
    }
    Ok(EqualizationResult {
        settings,
        max_residual_db,
        clipped_channels,
    })
}

/// Equalization outcome at one transit node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEqualization {
    pub node: String,
    pub result: EqualizationResult,
}

/// Readings taken at one node, as stored in a readings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeReadings {
    pub node: String,
    pub readings: Vec<PowerReading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVerdict {
    pub node: String,
    pub pass: bool,
    pub max_residual_db: f64,
    pub clipped_channels: Vec<String>,
    /// Channel refs that match no occupant of the grid.
    pub unknown_channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizationSummary {
    pub flatness_tolerance_db: f64,
    pub nodes: Vec<NodeVerdict>,
    pub failing_nodes: Vec<String>,
}

impl EqualizationSummary {
    pub fn all_pass(&self) -> bool {
        self.failing_nodes.is_empty()
    }
}

/// A node passes when its residual is within tolerance and nothing clipped.
pub fn equalization_report(
    grid: &SpectrumGrid,
    results: &[NodeEqualization],
    flatness_tolerance_db: f64,
) -> EqualizationSummary {
    let known: BTreeSet<&str> = grid
        .natives()
        .iter()
        .map(|n| n.id.as_str())
        .chain(grid.superchannels().iter().map(|s| s.id.as_str()))
        .collect();
    let nodes: Vec<NodeVerdict> = results
        .iter()
        .map(|r| NodeVerdict {
            node: r.node.clone(),
            pass: r.result.max_residual_db <= flatness_tolerance_db && r.result.clipped_channels.is_empty(),
            max_residual_db: r.result.max_residual_db,
            clipped_channels: r.result.clipped_channels.clone(),
            unknown_channels: r
                .result
                .settings
                .iter()
                .filter(|s| !known.contains(s.channel_ref.as_str()))
                .map(|s| s.channel_ref.clone())
                .collect(),
        })
        .collect();
    let failing_nodes = nodes.iter().filter(|v| !v.pass).map(|v| v.node.clone()).collect();
    EqualizationSummary {
        flatness_tolerance_db,
        nodes,
        failing_nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(id: &str, dbm: f64) -> PowerReading {
        PowerReading {
            channel_ref: id.into(),
            power_dbm: dbm,
        }
    }

    fn node(name: &str, residual: f64, clipped: &[&str]) -> NodeEqualization {
        NodeEqualization {
            node: name.into(),
            result: EqualizationResult {
                settings: Vec::new(),
                max_residual_db: residual,
                clipped_channels: clipped.iter().map(|c| c.to_string()).collect(),
            },
        }
    }

    #[test]
    fn readings_at_target_need_nothing() {
        let r = compute_voa_settings(&[reading("a", -4.0), reading("b", -4.0)], -4.0).unwrap();
        assert!(r.settings.iter().all(|s| s.attenuation_db == 0.0));
        assert_eq!(r.max_residual_db, 0.0);
        assert!(r.clipped_channels.is_empty());
    }

    #[test]
    fn attenuates_hot_channel() {
        let r = compute_voa_settings(&[reading("A", -1.0), reading("B", -4.0)], -4.0).unwrap();
        assert_eq!(r.settings[0].attenuation_db, 3.0);
        assert_eq!(r.settings[1].attenuation_db, 0.0);
        assert_eq!(r.max_residual_db, 0.0);
    }

    #[test]
    fn weak_channel_is_clipped() {
        let r = compute_voa_settings(&[reading("w", -10.0)], -4.0).unwrap();
        assert_eq!(r.settings[0].attenuation_db, 0.0);
        assert_eq!(r.max_residual_db, 6.0);
        assert_eq!(r.clipped_channels, vec!["w".to_string()]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            compute_voa_settings(&[], 0.0).unwrap_err(),
            AdaptationError::EmptyReadings
        );
        assert_eq!(
            compute_voa_settings(&[reading("x", f64::NAN)], 0.0).unwrap_err(),
            AdaptationError::NonFinite("x".into())
        );
    }

    #[test]
    fn node_verdicts() {
        let grid = SpectrumGrid::default();
        let all_zero = equalization_report(&grid, &[node("a", 0.0, &[]), node("b", 0.0, &[])], 1.0);
        assert!(all_zero.all_pass());

        let s = equalization_report(&grid, &[node("a", 0.2, &[]), node("b", 1.2, &[])], 1.0);
        assert_eq!(s.failing_nodes, vec!["b".to_string()]);

        let s = equalization_report(&grid, &[node("a", 0.0, &["x"])], 1.0);
        assert_eq!(s.failing_nodes, vec!["a".to_string()]);
    }

    #[test]
    fn flags_unknown_channels() {
        let grid = SpectrumGrid::default()
            .place_native(crate::spectrum::NativeChannel::new(
                "n0",
                0,
                crate::spectrum::NativeBitrate::G10,
            ))
            .unwrap();
        let result = compute_voa_settings(&[reading("n0", -3.0), reading("ghost", -3.0)], -3.0).unwrap();
        let s = equalization_report(
            &grid,
            &[NodeEqualization {
                node: "MI2".into(),
                result,
            }],
            1.0,
        );
        assert!(s.all_pass());
        assert_eq!(s.nodes[0].unknown_channels, vec!["ghost".to_string()]);
    }
}
