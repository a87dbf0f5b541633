//! Shared C-band spectrum on a 25 GHz slot grid.
//!
//! Native IM-DD channels take two slots at even offsets, which embeds the
//! host's 50 GHz grid. Alien super-channels take one contiguous block of
//! `superchannel_width_slots`. Dedicated partitions are even-aligned regions
//! reserved for alien carriers; natives may not enter them and super-channels
//! may not straddle their boundaries.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perfmodel::Modulation;

pub const SLOT_WIDTH_GHZ: f64 = 25.0;
pub const NATIVE_WIDTH_SLOTS: usize = 2;
pub const CARRIER_PAIRS: usize = 5;
pub const MAX_CARRIERS: u8 = 2 * CARRIER_PAIRS as u8;

/// Default guard band between alien and native occupants: one native width.
pub const DEFAULT_GUARD_BAND_SLOTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub slot_width_ghz: f64,
    pub slot_count: usize,
    pub native_channel_width_slots: usize,
    pub superchannel_width_slots: usize,
}

impl Default for BandConfig {
    /// 80 native channels on 50 GHz, 200 GHz super-channel blocks.
    fn default() -> Self {
        Self {
            slot_width_ghz: SLOT_WIDTH_GHZ,
            slot_count: 160,
            native_channel_width_slots: NATIVE_WIDTH_SLOTS,
            superchannel_width_slots: 8,
        }
    }
}

impl BandConfig {
    pub fn with_slot_count(slot_count: usize) -> Self {
        Self {
            slot_count,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), SpectrumError> {
        let bad = |m: String| Err(SpectrumError::InvalidBand(m));
        if self.slot_width_ghz != SLOT_WIDTH_GHZ {
            return bad(format!(
                "slot width must be {SLOT_WIDTH_GHZ} GHz, got {}",
                self.slot_width_ghz
            ));
        }
        if self.native_channel_width_slots != NATIVE_WIDTH_SLOTS {
            return bad(format!(
                "native channels must be {NATIVE_WIDTH_SLOTS} slots wide, got {}",
                self.native_channel_width_slots
            ));
        }
        if self.slot_count == 0 || !self.slot_count.is_multiple_of(2) {
            return bad(format!("slot count must be positive and even, got {}", self.slot_count));
        }
        if self.superchannel_width_slots == 0 {
            return bad("super-channel width must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum NativeBitrate {
    G10,
    G40,
}

impl TryFrom<u32> for NativeBitrate {
    type Error = String;

    fn try_from(v: u32) -> Result<Self, String> {
        match v {
            10 => Ok(Self::G10),
            40 => Ok(Self::G40),
            other => Err(format!("native bitrate must be 10 or 40 Gbps, got {other}")),
        }
    }
}

impl From<NativeBitrate> for u32 {
    fn from(b: NativeBitrate) -> u32 {
        match b {
            NativeBitrate::G10 => 10,
            NativeBitrate::G40 => 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NativeFormat {
    #[default]
    #[serde(rename = "IM-DD")]
    ImDd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeChannel {
    pub id: String,
    pub start_slot: usize,
    pub bitrate_gbps: NativeBitrate,
    #[serde(default)]
    pub format: NativeFormat,
}

impl NativeChannel {
    pub fn new(id: impl Into<String>, start_slot: usize, bitrate_gbps: NativeBitrate) -> Self {
        Self {
            id: id.into(),
            start_slot,
            bitrate_gbps,
            format: NativeFormat::ImDd,
        }
    }

    pub fn slots(&self) -> Range<usize> {
        self.start_slot..self.start_slot + NATIVE_WIDTH_SLOTS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierPair {
    pub index: u8,
    pub modulation: Modulation,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperChannel {
    pub id: String,
    pub start_slot: usize,
    pub width_slots: usize,
    pub pairs: [CarrierPair; CARRIER_PAIRS],
    pub active_carriers: u8,
}

impl SuperChannel {
    /// All five pairs enabled, ten active carriers.
    pub fn new(
        id: impl Into<String>,
        start_slot: usize,
        width_slots: usize,
        modulations: [Modulation; CARRIER_PAIRS],
    ) -> Self {
        let mut index = 0u8;
        let pairs = modulations.map(|modulation| {
            let pair = CarrierPair {
                index,
                modulation,
                enabled: true,
            };
            index += 1;
            pair
        });
        Self {
            id: id.into(),
            start_slot,
            width_slots,
            pairs,
            active_carriers: MAX_CARRIERS,
        }
    }

    pub fn uniform(id: impl Into<String>, start_slot: usize, width_slots: usize, modulation: Modulation) -> Self {
        Self::new(id, start_slot, width_slots, [modulation; CARRIER_PAIRS])
    }

    pub fn with_active_carriers(mut self, active_carriers: u8) -> Self {
        self.active_carriers = active_carriers;
        self
    }

    pub fn slots(&self) -> Range<usize> {
        self.start_slot..self.start_slot + self.width_slots
    }

    pub fn enabled_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.enabled).count()
    }

    fn check(&self, band: &BandConfig, in_partition: bool) -> Result<(), SpectrumError> {
        let bad = |m: String| Err(SpectrumError::InvalidSuperChannel(self.id.clone(), m));
        if self.width_slots != band.superchannel_width_slots {
            return bad(format!(
                "width {} differs from the band's super-channel width {}",
                self.width_slots, band.superchannel_width_slots
            ));
        }
        if let Some((i, p)) = self.pairs.iter().enumerate().find(|(i, p)| usize::from(p.index) != *i) {
            return bad(format!("pair at position {i} carries index {}", p.index));
        }
        let full = 2 * self.enabled_pairs() as u8;
        let sacrificed = full > 0 && self.active_carriers == full - 1;
        if self.active_carriers > MAX_CARRIERS {
            return bad(format!(
                "{} active carriers exceeds {MAX_CARRIERS}",
                self.active_carriers
            ));
        }
        if self.active_carriers != full && !(sacrificed && in_partition) {
            return bad(format!(
                "{} active carriers with {} enabled pairs; an edge carrier may only be dropped inside a dedicated partition",
                self.active_carriers,
                self.enabled_pairs()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DedicatedPartition {
    pub start_slot: usize,
    pub width_slots: usize,
}

impl DedicatedPartition {
    pub fn slots(&self) -> Range<usize> {
        self.start_slot..self.start_slot + self.width_slots
    }
}

/// Natives adjacent to a super-channel, split by whether a guard band
/// separates them from the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborConfig {
    pub guarded_native_count: u32,
    pub unguarded_native_count: u32,
    pub in_dedicated_partition: bool,
}

impl NeighborConfig {
    pub const NONE: Self = Self {
        guarded_native_count: 0,
        unguarded_native_count: 0,
        in_dedicated_partition: false,
    };

    pub const DEDICATED: Self = Self {
        guarded_native_count: 0,
        unguarded_native_count: 0,
        in_dedicated_partition: true,
    };

    pub fn mixed(guarded: u32, unguarded: u32) -> Self {
        Self {
            guarded_native_count: guarded,
            unguarded_native_count: unguarded,
            in_dedicated_partition: false,
        }
    }

    /// False only when a dedicated placement claims native neighbors.
    pub fn is_consistent(&self) -> bool {
        !self.in_dedicated_partition || (self.guarded_native_count == 0 && self.unguarded_native_count == 0)
    }
}

impl fmt::Display for NeighborConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.in_dedicated_partition {
            write!(f, "dedicated partition")
        } else {
            write!(
                f,
                "{} guarded / {} unguarded natives",
                self.guarded_native_count, self.unguarded_native_count
            )
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectrumError {
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("`{id}` at slots {}..{} leaves the band of {slot_count} slots", .slots.start, .slots.end)]
    OutOfBand {
        id: String,
        slots: Range<usize>,
        slot_count: usize,
    },
    #[error("native `{id}` starts at odd slot {start}; natives sit on the 50 GHz grid")]
    MisalignedNative { id: String, start: usize },
    #[error("`{id}` overlaps `{other}` at slot {slot}")]
    Overlap { id: String, other: String, slot: usize },
    #[error("native `{id}` lies inside dedicated partition at slots {}..{}", .partition.start, .partition.end)]
    NativeInPartition { id: String, partition: Range<usize> },
    #[error("`{id}` straddles the boundary of dedicated partition at slots {}..{}", .partition.start, .partition.end)]
    StraddlesPartition { id: String, partition: Range<usize> },
    #[error("duplicate occupant id `{0}`")]
    DuplicateId(String),
    #[error("invalid super-channel `{0}`: {1}")]
    InvalidSuperChannel(String, String),
    #[error("partition boundary {start}..{end} is not aligned to the 50 GHz grid")]
    MisalignedPartition { start: usize, end: usize },
    #[error("partition region {}..{} is occupied by `{occupant}`", .region.start, .region.end)]
    RegionOccupied { region: Range<usize>, occupant: String },
    #[error("partition region {}..{} overlaps an existing partition", .region.start, .region.end)]
    PartitionOverlap { region: Range<usize> },
    #[error("unknown occupant `{0}`")]
    UnknownOccupant(String),
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

fn contains(outer: &Range<usize>, inner: &Range<usize>) -> bool {
    outer.start <= inner.start && inner.end <= outer.end
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupantKind {
    Native,
    Alien,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumGrid {
    band: BandConfig,
    natives: Vec<NativeChannel>,
    superchannels: Vec<SuperChannel>,
    partitions: Vec<DedicatedPartition>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    band: BandConfig,
    natives: Vec<NativeChannel>,
    superchannels: Vec<SuperChannel>,
    partitions: Vec<DedicatedPartition>,
}

impl<'de> Deserialize<'de> for SpectrumGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawGrid::deserialize(d)?;
        SpectrumGrid::from_parts(raw.band, raw.partitions, raw.natives, raw.superchannels)
            .map_err(serde::de::Error::custom)
    }
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self::new(BandConfig::default()).expect("default band is valid")
    }
}

impl SpectrumGrid {
    pub fn new(band: BandConfig) -> Result<Self, SpectrumError> {
        band.check()?;
        Ok(Self {
            band,
            natives: Vec::new(),
            superchannels: Vec::new(),
            partitions: Vec::new(),
        })
    }

    /// Rebuilds a grid by replaying partitions, then natives, then
    /// super-channels, so every invariant is re-checked.
    pub fn from_parts(
        band: BandConfig,
        partitions: Vec<DedicatedPartition>,
        natives: Vec<NativeChannel>,
        superchannels: Vec<SuperChannel>,
    ) -> Result<Self, SpectrumError> {
        let mut grid = Self::new(band)?;
        for p in partitions {
            grid.insert_partition(p.start_slot, p.width_slots)?;
        }
        for n in natives {
            grid.insert_native(n)?;
        }
        for s in superchannels {
            grid.insert_superchannel(s)?;
        }
        Ok(grid)
    }

    pub fn band(&self) -> &BandConfig {
        &self.band
    }

    pub fn natives(&self) -> &[NativeChannel] {
        &self.natives
    }

    pub fn superchannels(&self) -> &[SuperChannel] {
        &self.superchannels
    }

    pub fn partitions(&self) -> &[DedicatedPartition] {
        &self.partitions
    }

    pub fn superchannel(&self, id: &str) -> Option<&SuperChannel> {
        self.superchannels.iter().find(|s| s.id == id)
    }

    fn occupants(&self) -> impl Iterator<Item = (&str, Range<usize>, OccupantKind)> + '_ {
        let natives = self
            .natives
            .iter()
            .map(|n| (n.id.as_str(), n.slots(), OccupantKind::Native));
        let aliens = self
            .superchannels
            .iter()
            .map(|s| (s.id.as_str(), s.slots(), OccupantKind::Alien));
        natives.chain(aliens)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.occupants().any(|(o, _, _)| o == id)
    }

    /// Owner of each slot, by occupant id.
    pub fn occupancy_map(&self) -> Vec<Option<&str>> {
        let mut map = vec![None; self.band.slot_count];
        for (id, slots, _) in self.occupants() {
            for s in slots {
                if let Some(cell) = map.get_mut(s) {
                    *cell = Some(id);
                }
            }
        }
        map
    }

    pub fn is_free(&self, slots: &Range<usize>) -> bool {
        slots.end <= self.band.slot_count && !self.occupants().any(|(_, r, _)| overlaps(&r, slots))
    }

    pub fn partition_containing(&self, slots: &Range<usize>) -> Option<&DedicatedPartition> {
        self.partitions.iter().find(|p| contains(&p.slots(), slots))
    }

    fn check_common(&self, id: &str, slots: &Range<usize>) -> Result<(), SpectrumError> {
        if self.contains_id(id) {
            return Err(SpectrumError::DuplicateId(id.to_string()));
        }
        if slots.end > self.band.slot_count {
            return Err(SpectrumError::OutOfBand {
                id: id.to_string(),
                slots: slots.clone(),
                slot_count: self.band.slot_count,
            });
        }
        if let Some((other, r, _)) = self.occupants().find(|(_, r, _)| overlaps(r, slots)) {
            return Err(SpectrumError::Overlap {
                id: id.to_string(),
                other: other.to_string(),
                slot: slots.start.max(r.start),
            });
        }
        Ok(())
    }

    fn insert_native(&mut self, channel: NativeChannel) -> Result<(), SpectrumError> {
        let slots = channel.slots();
        self.check_common(&channel.id, &slots)?;
        if !channel.start_slot.is_multiple_of(2) {
            return Err(SpectrumError::MisalignedNative {
                id: channel.id,
                start: channel.start_slot,
            });
        }
        if let Some(p) = self.partitions.iter().find(|p| overlaps(&p.slots(), &slots)) {
            return Err(SpectrumError::NativeInPartition {
                id: channel.id,
                partition: p.slots(),
            });
        }
        self.natives.push(channel);
        Ok(())
    }

    fn insert_superchannel(&mut self, sc: SuperChannel) -> Result<(), SpectrumError> {
        let slots = sc.slots();
        self.check_common(&sc.id, &slots)?;
        if let Some(p) = self
            .partitions
            .iter()
            .find(|p| overlaps(&p.slots(), &slots) && !contains(&p.slots(), &slots))
        {
            return Err(SpectrumError::StraddlesPartition {
                id: sc.id,
                partition: p.slots(),
            });
        }
        sc.check(&self.band, self.partition_containing(&slots).is_some())?;
        self.superchannels.push(sc);
        Ok(())
    }

    fn insert_partition(&mut self, start_slot: usize, width_slots: usize) -> Result<(), SpectrumError> {
        let region = start_slot..start_slot + width_slots;
        if width_slots == 0 || !start_slot.is_multiple_of(2) || !region.end.is_multiple_of(2) {
            return Err(SpectrumError::MisalignedPartition {
                start: region.start,
                end: region.end,
            });
        }
        if region.end > self.band.slot_count {
            return Err(SpectrumError::OutOfBand {
                id: "partition".into(),
                slots: region,
                slot_count: self.band.slot_count,
            });
        }
        if self.partitions.iter().any(|p| overlaps(&p.slots(), &region)) {
            return Err(SpectrumError::PartitionOverlap { region });
        }
        if let Some(n) = self.natives.iter().find(|n| overlaps(&n.slots(), &region)) {
            return Err(SpectrumError::RegionOccupied {
                region,
                occupant: n.id.clone(),
            });
        }
        if let Some(s) = self
            .superchannels
            .iter()
            .find(|s| overlaps(&s.slots(), &region) && !contains(&region, &s.slots()))
        {
            return Err(SpectrumError::StraddlesPartition {
                id: s.id.clone(),
                partition: region,
            });
        }
        self.partitions.push(DedicatedPartition {
            start_slot,
            width_slots,
        });
        Ok(())
    }

    pub fn place_native(&self, channel: NativeChannel) -> Result<Self, SpectrumError> {
        let mut next = self.clone();
        next.insert_native(channel)?;
        Ok(next)
    }

    pub fn place_superchannel(&self, sc: SuperChannel) -> Result<Self, SpectrumError> {
        let mut next = self.clone();
        next.insert_superchannel(sc)?;
        Ok(next)
    }

    pub fn carve_dedicated_partition(&self, start_slot: usize, width_slots: usize) -> Result<Self, SpectrumError> {
        let mut next = self.clone();
        next.insert_partition(start_slot, width_slots)?;
        Ok(next)
    }

    /// Drops the native or super-channel named `id`.
    pub fn remove(&self, id: &str) -> Result<Self, SpectrumError> {
        let mut next = self.clone();
        if let Some(i) = next.natives.iter().position(|n| n.id == id) {
            next.natives.remove(i);
        } else if let Some(i) = next.superchannels.iter().position(|s| s.id == id) {
            next.superchannels.remove(i);
        } else {
            return Err(SpectrumError::UnknownOccupant(id.to_string()));
        }
        Ok(next)
    }

    /// Lowest even-aligned region of `width_slots` that could become a new
    /// dedicated partition right now.
    pub fn find_carvable_region(&self, width_slots: usize) -> Option<usize> {
        let width = width_slots + width_slots % 2;
        (0..self.band.slot_count.saturating_sub(width) + 1)
            .step_by(2)
            .find(|&start| {
                let region = start..start + width;
                self.is_free(&region) && !self.partitions.iter().any(|p| overlaps(&p.slots(), &region))
            })
    }

    /// Classifies the natives beside super-channel `sc_id`.
    ///
    /// On each side, the nearest native and every native stacked directly
    /// against it (no free slot between them) form one group. The group is
    /// unguarded when the nearest native is fewer than `guard_band_slots`
    /// away from the block edge, guarded otherwise. A super-channel inside a
    /// dedicated partition has no native neighbors by construction.
    pub fn neighbor_context(&self, sc_id: &str, guard_band_slots: usize) -> Result<NeighborConfig, SpectrumError> {
        let sc = self
            .superchannel(sc_id)
            .ok_or_else(|| SpectrumError::UnknownOccupant(sc_id.to_string()))?;
        let block = sc.slots();
        if self.partition_containing(&block).is_some() {
            return Ok(NeighborConfig::DEDICATED);
        }
        let mut others: Vec<(Range<usize>, OccupantKind)> = self
            .occupants()
            .filter(|(id, _, _)| *id != sc_id)
            .map(|(_, r, k)| (r, k))
            .collect();
        others.sort_by_key(|(r, _)| r.start);

        let mut config = NeighborConfig::NONE;
        let mut tally = |gap: usize, stacked: u32| {
            if gap < guard_band_slots {
                config.unguarded_native_count += stacked;
            } else {
                config.guarded_native_count += stacked;
            }
        };

        let right: Vec<_> = others.iter().filter(|(r, _)| r.start >= block.end).collect();
        if let Some((first, OccupantKind::Native)) = right.first() {
            let stacked = stack_len(right.iter().map(|(r, k)| (r.start, r.end, *k)));
            tally(first.start - block.end, stacked);
        }
        let left: Vec<_> = others.iter().rev().filter(|(r, _)| r.end <= block.start).collect();
        if let Some((first, OccupantKind::Native)) = left.first() {
            // Walk leftwards: mirror each range so the stack test is the same.
            let stacked = stack_len(left.iter().map(|(r, k)| (usize::MAX - r.end, usize::MAX - r.start, *k)));
            tally(block.start - first.end, stacked);
        }
        Ok(config)
    }

    /// Places each request at its lowest feasible start slot, in order.
    pub fn first_fit_allocate(&self, requests: &[PlacementRequest]) -> Allocation {
        let mut grid = self.clone();
        let mut assignments = Vec::with_capacity(requests.len());
        for req in requests {
            let outcome = match grid.first_fit_one(req) {
                Ok(start_slot) => AllocationOutcome::Placed { start_slot },
                Err(reason) => AllocationOutcome::Unplaced { reason },
            };
            assignments.push(Assignment {
                id: req.id.clone(),
                outcome,
            });
        }
        Allocation { grid, assignments }
    }

    fn first_fit_one(&mut self, req: &PlacementRequest) -> Result<usize, String> {
        if self.contains_id(&req.id) {
            return Err(format!("duplicate occupant id `{}`", req.id));
        }
        let (width, kind) = match &req.kind {
            RequestKind::Native { .. } => (NATIVE_WIDTH_SLOTS, OccupantKind::Native),
            RequestKind::Superchannel { .. } => (self.band.superchannel_width_slots, OccupantKind::Alien),
        };
        if kind == OccupantKind::Native && req.partition_only {
            return Err("natives cannot be placed in a dedicated partition".into());
        }
        let last = match self.band.slot_count.checked_sub(width) {
            Some(last) => last,
            None => return Err(NO_WINDOW.into()),
        };
        let start = (0..=last)
            .find(|&s| self.window_fits(s..s + width, kind, req))
            .ok_or_else(|| NO_WINDOW.to_string())?;
        let placed = match &req.kind {
            RequestKind::Native { bitrate_gbps } => {
                self.insert_native(NativeChannel::new(&req.id, start, *bitrate_gbps))
            }
            RequestKind::Superchannel {
                pair_modulations,
                active_carriers,
            } => {
                let sc = SuperChannel::new(&req.id, start, width, *pair_modulations)
                    .with_active_carriers(active_carriers.unwrap_or(MAX_CARRIERS));
                self.insert_superchannel(sc)
            }
        };
        placed.map(|_| start).map_err(|e| e.to_string())
    }

    fn window_fits(&self, slots: Range<usize>, kind: OccupantKind, req: &PlacementRequest) -> bool {
        if !self.is_free(&slots) {
            return false;
        }
        match kind {
            OccupantKind::Native => {
                if !slots.start.is_multiple_of(2) || self.partitions.iter().any(|p| overlaps(&p.slots(), &slots)) {
                    return false;
                }
            }
            OccupantKind::Alien => {
                let inside = self.partition_containing(&slots).is_some();
                if req.partition_only && !inside {
                    return false;
                }
                if !inside && self.partitions.iter().any(|p| overlaps(&p.slots(), &slots)) {
                    return false;
                }
            }
        }
        let g = req.guard_band_slots;
        let halo = slots.start.saturating_sub(g)..slots.end + g;
        !self.occupants().any(|(_, r, k)| k != kind && overlaps(&r, &halo))
    }

    /// Every invariant violation found by scanning the slot map directly.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut owners: Vec<Vec<&str>> = vec![Vec::new(); self.band.slot_count];
        let mut ids = BTreeSet::new();
        for (id, slots, _) in self.occupants() {
            if !ids.insert(id) {
                out.push(format!("duplicate id `{id}`"));
            }
            if slots.end > self.band.slot_count {
                out.push(format!("`{id}` leaves the band"));
            }
            for o in &mut owners[slots.start.min(self.band.slot_count)..slots.end.min(self.band.slot_count)] {
                o.push(id);
            }
        }
        for (slot, o) in owners.iter().enumerate() {
            if o.len() > 1 {
                out.push(format!("slot {slot} owned by {}", o.join(", ")));
            }
        }
        for n in &self.natives {
            if !n.start_slot.is_multiple_of(2) {
                out.push(format!("native `{}` misaligned", n.id));
            }
            if self.partitions.iter().any(|p| overlaps(&p.slots(), &n.slots())) {
                out.push(format!("native `{}` inside a partition", n.id));
            }
        }
        out
    }
}

const NO_WINDOW: &str = "no feasible window";

/// Length of the run of natives, starting at the first item, in which each
/// native begins exactly where the previous one ends.
fn stack_len(mut ranges: impl Iterator<Item = (usize, usize, OccupantKind)>) -> u32 {
    let Some((_, mut end, OccupantKind::Native)) = ranges.next() else {
        return 0;
    };
    let mut count = 1;
    for (start, next_end, kind) in ranges {
        if kind != OccupantKind::Native || start != end {
            break;
        }
        count += 1;
        end = next_end;
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RequestKind {
    Native {
        bitrate_gbps: NativeBitrate,
    },
    Superchannel {
        pair_modulations: [Modulation; CARRIER_PAIRS],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        active_carriers: Option<u8>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub id: String,
    #[serde(flatten)]
    pub kind: RequestKind,
    #[serde(default)]
    pub partition_only: bool,
    #[serde(default)]
    pub guard_band_slots: usize,
}

impl PlacementRequest {
    pub fn native(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: RequestKind::Native {
                bitrate_gbps: NativeBitrate::G10,
            },
            partition_only: false,
            guard_band_slots: 0,
        }
    }

    pub fn superchannel(id: impl Into<String>, modulation: Modulation) -> Self {
        Self {
            id: id.into(),
            kind: RequestKind::Superchannel {
                pair_modulations: [modulation; CARRIER_PAIRS],
                active_carriers: None,
            },
            partition_only: false,
            guard_band_slots: 0,
        }
    }

    pub fn guard(mut self, slots: usize) -> Self {
        self.guard_band_slots = slots;
        self
    }

    pub fn in_partition(mut self) -> Self {
        self.partition_only = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AllocationOutcome {
    Placed { start_slot: usize },
    Unplaced { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    #[serde(flatten)]
    pub outcome: AllocationOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub grid: SpectrumGrid,
    pub assignments: Vec<Assignment>,
}
