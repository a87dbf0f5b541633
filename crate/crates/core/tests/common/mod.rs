//! Test-only helpers: an independent slot-array first-fit oracle and a
//! random instance generator shared by the property and acceptance suites.

#![allow(dead_code)]

use awplan_core::perfmodel::Modulation;
use awplan_core::spectrum::{
    AllocationOutcome, BandConfig, NativeBitrate, NativeChannel, PlacementRequest, RequestKind, SpectrumGrid,
};
use rand::Rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Cell {
    Free,
    Native,
    Alien,
}

/// First-fit computed on a bare slot array: for each request, try every
/// start slot in ascending order and take the first that passes every
/// rule checked slot by slot.
pub fn oracle_first_fit(grid: &SpectrumGrid, requests: &[PlacementRequest]) -> Vec<Option<usize>> {
    let n = grid.band().slot_count;
    let sc_width = grid.band().superchannel_width_slots;
    let mut cells = vec![Cell::Free; n];
    let mut partition_of: Vec<Option<usize>> = vec![None; n];
    for (i, p) in grid.partitions().iter().enumerate() {
        partition_of[p.start_slot..p.start_slot + p.width_slots].fill(Some(i));
    }
    for nat in grid.natives() {
        cells[nat.start_slot] = Cell::Native;
        cells[nat.start_slot + 1] = Cell::Native;
    }
    for sc in grid.superchannels() {
        cells[sc.start_slot..sc.start_slot + sc.width_slots].fill(Cell::Alien);
    }

    let mut out = Vec::new();
    for req in requests {
        let (w, kind) = match req.kind {
            RequestKind::Native { .. } => (2, Cell::Native),
            RequestKind::Superchannel { .. } => (sc_width, Cell::Alien),
        };
        let mut found = None;
        if w <= n {
            for s in 0..=n - w {
                let slots = s..s + w;
                if slots.clone().any(|i| cells[i] != Cell::Free) {
                    continue;
                }
                let parts: Vec<Option<usize>> = slots.clone().map(|i| partition_of[i]).collect();
                let ok_partition = match kind {
                    Cell::Native => s % 2 == 0 && !req.partition_only && parts.iter().all(|p| p.is_none()),
                    _ => {
                        let same = parts.iter().all(|p| *p == parts[0]);
                        same && (!req.partition_only || parts[0].is_some())
                    }
                };
                if !ok_partition {
                    continue;
                }
                let lo = s.saturating_sub(req.guard_band_slots);
                let hi = (s + w + req.guard_band_slots).min(n);
                let clash = (lo..hi).any(|i| cells[i] != Cell::Free && cells[i] != kind);
                if clash {
                    continue;
                }
                found = Some(s);
                break;
            }
        }
        if let Some(s) = found {
            cells[s..s + w].fill(kind);
        }
        out.push(found);
    }
    out
}

pub fn outcome_starts(outcomes: &[AllocationOutcome]) -> Vec<Option<usize>> {
    outcomes
        .iter()
        .map(|o| match o {
            AllocationOutcome::Placed { start_slot } => Some(*start_slot),
            AllocationOutcome::Unplaced { .. } => None,
        })
        .collect()
}

/// A random small grid (≤ 32 slots) with partitions and natives already in
/// place, plus a batch of requests.
pub fn random_instance<R: Rng>(rng: &mut R) -> (SpectrumGrid, Vec<PlacementRequest>) {
    let slot_count = 2 * rng.gen_range(1..=16);
    let band = BandConfig {
        superchannel_width_slots: rng.gen_range(1..=8),
        ..BandConfig::with_slot_count(slot_count)
    };
    let mut grid = SpectrumGrid::new(band).unwrap();
    for _ in 0..rng.gen_range(0..=2) {
        let start = 2 * rng.gen_range(0..slot_count / 2);
        let width = 2 * rng.gen_range(1..=4);
        if let Ok(g) = grid.carve_dedicated_partition(start, width) {
            grid = g;
        }
    }
    for i in 0..rng.gen_range(0..=6) {
        let start = 2 * rng.gen_range(0..slot_count / 2);
        if let Ok(g) = grid.place_native(NativeChannel::new(format!("pre{i}"), start, NativeBitrate::G10)) {
            grid = g;
        }
    }
    let requests = (0..rng.gen_range(1..=8))
        .map(|i| {
            let mut req = if rng.gen_bool(0.5) {
                PlacementRequest::native(format!("r{i}"))
            } else {
                let m = if rng.gen_bool(0.5) {
                    Modulation::Qpsk
                } else {
                    Modulation::Bpsk
                };
                PlacementRequest::superchannel(format!("r{i}"), m)
            };
            req.partition_only = rng.gen_bool(0.25);
            req.guard_band_slots = rng.gen_range(0..=3);
            req
        })
        .collect();
    (grid, requests)
}

/// Number of slots owned by more than one occupant.
pub fn ownership_conflicts(grid: &SpectrumGrid) -> usize {
    let mut owners = vec![0usize; grid.band().slot_count];
    for n in grid.natives() {
        for s in n.slots() {
            owners[s] += 1;
        }
    }
    for sc in grid.superchannels() {
        for s in sc.slots() {
            owners[s] += 1;
        }
    }
    owners.iter().filter(|&&c| c > 1).count()
}
