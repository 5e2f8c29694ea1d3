//! Predictor subsets as bitmasks over a universe of at most
//! [`MAX_PREDICTORS`] predictors. Bit `j` stands for predictor `j`
//! (zero-based), so `{x1, x3}` in a three-predictor universe is `0b101`.

use std::fmt;

use crate::error::{Error, Result};

/// Exhaustive enumeration is capped here; 2^24 subsets is already a
/// desk-scale limit for per-fold fitting.
pub const MAX_PREDICTORS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredictorSet {
    bits: u32,
    p: u8,
}

impl PredictorSet {
    pub fn new(bits: u32, p: usize) -> Result<Self> {
        check_universe(p)?;
        if (bits as u64) >= (1u64 << p) {
            return Err(Error::Argument(format!(
                "bitmask {bits} does not fit a universe of {p} predictors"
            )));
        }
        Ok(PredictorSet { bits, p: p as u8 })
    }

    /// Caller guarantees `p <= MAX_PREDICTORS` and `bits < 2^p`.
    pub(crate) fn from_raw(bits: u32, p: usize) -> Self {
        debug_assert!(p <= MAX_PREDICTORS && (bits as u64) < (1u64 << p));
        PredictorSet { bits, p: p as u8 }
    }

    pub fn empty(p: usize) -> Result<Self> {
        Self::new(0, p)
    }

    pub fn full(p: usize) -> Result<Self> {
        check_universe(p)?;
        Ok(PredictorSet {
            bits: ((1u64 << p) - 1) as u32,
            p: p as u8,
        })
    }

    pub fn from_indices(indices: &[usize], p: usize) -> Result<Self> {
        check_universe(p)?;
        let mut bits = 0u32;
        for &j in indices {
            if j >= p {
                return Err(Error::Argument(format!("predictor index {j} outside universe of {p}")));
            }
            bits |= 1 << j;
        }
        Ok(PredictorSet { bits, p: p as u8 })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn universe(self) -> usize {
        self.p as usize
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn contains(self, j: usize) -> bool {
        j < self.p as usize && self.bits & (1 << j) != 0
    }

    pub fn is_subset_of(self, other: PredictorSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn intersects(self, other: PredictorSet) -> bool {
        self.bits & other.bits != 0
    }

    pub fn with(self, j: usize) -> Self {
        assert!(j < self.p as usize);
        PredictorSet {
            bits: self.bits | (1 << j),
            p: self.p,
        }
    }

    pub fn without(self, j: usize) -> Self {
        PredictorSet {
            bits: self.bits & !(1 << j),
            p: self.p,
        }
    }

    /// Member indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..self.p as usize).filter(move |&j| bits & (1 << j) != 0)
    }

    pub fn to_indices(self) -> Vec<usize> {
        self.indices().collect()
    }

    /// Every subset of `self` (including `∅` and `self`), in increasing
    /// bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = PredictorSet> {
        let mask = self.bits;
        let p = self.p;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            // Standard submask successor in increasing order.
            next = if cur == mask {
                None
            } else {
                Some(((cur | !mask).wrapping_add(1)) & mask)
            };
            Some(PredictorSet { bits: cur, p })
        })
    }

    pub fn member_names(self, names: &[String]) -> Vec<&str> {
        self.indices().map(|j| names[j].as_str()).collect()
    }

    pub fn label(self, names: &[String]) -> String {
        format!("({})", self.member_names(names).join(", "))
    }
}

impl fmt::Display for PredictorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.indices().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "x{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

fn check_universe(p: usize) -> Result<()> {
    if p > MAX_PREDICTORS {
        return Err(Error::Capacity(format!(
            "{p} predictors exceeds the exhaustive-enumeration cap of {MAX_PREDICTORS}"
        )));
    }
    Ok(())
}

/// All `2^p` subsets of a `p`-predictor universe in increasing bitmask order.
pub fn enumerate_subsets(p: usize) -> Result<impl Iterator<Item = PredictorSet>> {
    if p == 0 || p > MAX_PREDICTORS {
        return Err(Error::Capacity(format!(
            "universe size {p} outside 1..={MAX_PREDICTORS}"
        )));
    }
    Ok((0..(1u32 << p)).map(move |bits| PredictorSet::from_raw(bits, p)))
}
