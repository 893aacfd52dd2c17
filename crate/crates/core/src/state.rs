//! Boolean region-preservation vectors.

use std::fmt;

use fixedbitset::FixedBitSet;

/// Marks which of the `M` regions of a partition are preserved (`1`) or
/// pruned (`0`).
///
/// Positions are 0-based internally; region ids exposed to users (JSON,
/// logic literals, rendered text) are 1-based.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateVector {
    bits: FixedBitSet,
}

impl StateVector {
    /// `1^M`, every region preserved.
    pub fn full(m: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(m);
        bits.insert_range(..);
        Self { bits }
    }

    /// `0^M`.
    pub fn empty(m: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(m),
        }
    }

    /// Builds a state from 1-based region ids. Returns `None` when an id is
    /// zero or larger than `m`.
    pub fn from_region_ids(m: usize, ids: &[u32]) -> Option<Self> {
        let mut state = Self::empty(m);
        for &id in ids {
            if id == 0 || id as usize > m {
                return None;
            }
            state.bits.insert(id as usize - 1);
        }
        Some(state)
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        let mut state = Self::empty(flags.len());
        for (i, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
            state.bits.insert(i);
        }
        state
    }

    /// Low `m` bits of `mask`, bit `i` standing for region `i + 1`.
    pub fn from_mask(m: usize, mask: u64) -> Self {
        debug_assert!(m <= 64);
        let mut state = Self::empty(m);
        for i in 0..m {
            if mask >> i & 1 == 1 {
                state.bits.insert(i);
            }
        }
        state
    }

    /// Number of regions `M` this state ranges over.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whether the region at 0-based `position` is preserved.
    pub fn contains(&self, position: usize) -> bool {
        self.bits.contains(position)
    }

    pub fn set(&mut self, position: usize, preserved: bool) {
        self.bits.set(position, preserved);
    }

    /// `‖v‖₀`.
    pub fn count_preserved(&self) -> usize {
        self.bits.count_ones(..)
    }

    /// 0-based positions of preserved regions, ascending.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// 1-based ids of preserved regions, ascending.
    pub fn region_ids(&self) -> Vec<u32> {
        self.bits.ones().map(|i| i as u32 + 1).collect()
    }

    /// Copy of `self` with the region at `position` pruned.
    pub fn without(&self, position: usize) -> Self {
        let mut child = self.clone();
        child.bits.set(position, false);
        child
    }

    pub fn is_superset(&self, other: &Self) -> bool {
        self.bits.is_superset(&other.bits)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            bits: &self.bits & &other.bits,
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.contains(i)).collect()
    }
}

impl fmt::Display for StateVector {
    /// Bit string in region order, e.g. `1100`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.contains(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateVector({self})")
    }
}
