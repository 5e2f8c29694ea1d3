//! Subset-lattice aggregation: for every set `S`, reduce a per-subset table
//! over all `γ ⊆ S` in `p · 2^p` combine steps (the zeta transform).

use crate::error::{Error, Result};
use crate::subset::MAX_PREDICTORS;

/// In-place zeta transform. `combine` must be associative and commutative.
pub fn zeta_transform<T, F>(values: &mut [T], combine: F) -> Result<()>
where
    F: Fn(&T, &T) -> T,
{
    let p = universe_of(values.len())?;
    for bit in 0..p {
        let step = 1usize << bit;
        for s in 0..values.len() {
            if s & step != 0 {
                values[s] = combine(&values[s], &values[s ^ step]);
            }
        }
    }
    Ok(())
}

/// Out-of-place variant of [`zeta_transform`].
pub fn fast_lattice_aggregate<T, F>(values: &[T], combine: F) -> Result<Vec<T>>
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    let mut out = values.to_vec();
    zeta_transform(&mut out, combine)?;
    Ok(out)
}

fn universe_of(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::shape("a table of length 2^p", len));
    }
    let p = len.trailing_zeros() as usize;
    if p > MAX_PREDICTORS {
        return Err(Error::Capacity(format!(
            "lattice over {p} predictors exceeds the cap of {MAX_PREDICTORS}"
        )));
    }
    Ok(p)
}

/// A weighted mean carried with its total weight in log space. Merging two
/// of them is associative and commutative, so it can ride the zeta
/// transform without ever leaving log space for the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeightedMean {
    pub log_weight: f64,
    pub mean: f64,
}

impl LogWeightedMean {
    pub const EMPTY: LogWeightedMean = LogWeightedMean {
        log_weight: f64::NEG_INFINITY,
        mean: 0.0,
    };

    pub fn new(log_weight: f64, mean: f64) -> Self {
        if log_weight == f64::NEG_INFINITY {
            Self::EMPTY
        } else {
            LogWeightedMean { log_weight, mean }
        }
    }

    pub fn merge(&self, other: &LogWeightedMean) -> LogWeightedMean {
        if other.log_weight == f64::NEG_INFINITY {
            return *self;
        }
        if self.log_weight == f64::NEG_INFINITY {
            return *other;
        }
        let (hi, lo) = if self.log_weight >= other.log_weight {
            (self, other)
        } else {
            (other, self)
        };
        let r = (lo.log_weight - hi.log_weight).exp();
        let total = 1.0 + r;
        LogWeightedMean {
            log_weight: hi.log_weight + r.ln_1p(),
            mean: (hi.mean + r * lo.mean) / total,
        }
    }
}

/// `log Σ exp(v)`; `-∞` for an empty or all-`-∞` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_predictor_sums() {
        let out = fast_lattice_aggregate(&[1.0, 10.0, 100.0, 1000.0], |a, b| a + b).unwrap();
        assert_eq!(out, vec![1.0, 11.0, 101.0, 1111.0]);
    }

    #[test]
    fn zeros_stay_zero() {
        let out = fast_lattice_aggregate(&[0.0f64; 16], |a, b| a + b).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(fast_lattice_aggregate(&[1.0, 2.0, 3.0], |a, b| a + b).is_err());
    }

    #[test]
    fn log_weighted_mean_matches_direct() {
        let parts = [(0.0, 1.0), (1.0, -2.0), (-700.0, 5.0), (2.5, 0.25)];
        let merged = parts
            .iter()
            .map(|&(w, m)| LogWeightedMean::new(w, m))
            .fold(LogWeightedMean::EMPTY, |acc, x| acc.merge(&x));
        let lw: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let lse = log_sum_exp(&lw);
        let mean: f64 = parts.iter().map(|&(w, m)| (w - lse).exp() * m).sum();
        assert!((merged.log_weight - lse).abs() < 1e-12);
        assert!((merged.mean - mean).abs() < 1e-12);
    }

    #[test]
    fn empty_is_identity() {
        let x = LogWeightedMean::new(-3.0, 7.0);
        assert_eq!(x.merge(&LogWeightedMean::EMPTY), x);
        assert_eq!(LogWeightedMean::EMPTY.merge(&x), x);
    }
}
