//! Costs of observing predictors and the decisions built on them: the
//! purchased set minimizing loss plus cost, price sweeps, and the
//! discounted choice of when to start buying a predictor.

use rayon::prelude::*;

use crate::bma::{CvLossTable, InclusionTable};
use crate::error::{Error, Result};
use crate::subset::PredictorSet;

/// A group of predictors sold together: the price is paid once if any
/// member is purchased.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGroup {
    pub members: PredictorSet,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    /// Every predictor costs the same.
    Uniform { price: f64 },
    /// One price per predictor; free predictors are priced 0.
    Itemized { prices: Vec<f64> },
    /// Group prices plus itemized prices for predictors outside every group.
    Grouped { groups: Vec<CostGroup>, prices: Vec<f64> },
}

impl CostModel {
    pub fn zero() -> Self {
        CostModel::Uniform { price: 0.0 }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let check = |v: f64| -> Result<()> {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("price {v} must be finite and nonnegative")));
            }
            Ok(())
        };
        match self {
            CostModel::Uniform { price } => check(*price),
            CostModel::Itemized { prices } => {
                if prices.len() != p {
                    return Err(Error::Config(format!(
                        "{} itemized prices for {p} predictors",
                        prices.len()
                    )));
                }
                prices.iter().try_for_each(|&v| check(v))
            }
            CostModel::Grouped { groups, prices } => {
                if prices.len() != p {
                    return Err(Error::Config(format!(
                        "{} itemized prices for {p} predictors",
                        prices.len()
                    )));
                }
                prices.iter().try_for_each(|&v| check(v))?;
                let mut seen = 0u32;
                for g in groups {
                    check(g.price)?;
                    if g.members.universe() != p {
                        return Err(Error::Config("group defined over a different universe".into()));
                    }
                    if g.members.bits() & seen != 0 {
                        return Err(Error::Config("cost groups overlap".into()));
                    }
                    seen |= g.members.bits();
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(&self, s: PredictorSet) -> f64 {
        match self {
            CostModel::Uniform { price } => price * s.len() as f64,
            CostModel::Itemized { prices } => s.indices().map(|j| prices[j]).sum(),
            CostModel::Grouped { groups, prices } => {
                let grouped = groups.iter().fold(0u32, |acc, g| acc | g.members.bits());
                let itemized: f64 = s
                    .indices()
                    .filter(|&j| grouped & (1 << j) == 0)
                    .map(|j| prices[j])
                    .sum();
                let group_part: f64 = groups.iter().filter(|g| g.members.intersects(s)).map(|g| g.price).sum();
                itemized + group_part
            }
        }
    }
}

pub fn evaluate_cost(cm: &CostModel, s: PredictorSet) -> f64 {
    cm.evaluate(s)
}

/// A cost structure with one scalar price knob, for sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily {
    /// `c · |S|`
    Uniform,
    /// Predictors in `free` cost nothing, every other one costs the knob.
    FreeSet { free: PredictorSet },
    /// Each group costs the knob; predictors outside the groups keep
    /// their base prices.
    Grouped {
        groups: Vec<PredictorSet>,
        base_prices: Vec<f64>,
    },
    /// Base itemized prices multiplied by the knob.
    Scaled { prices: Vec<f64> },
}

impl CostFamily {
    pub fn at(&self, price: f64, p: usize) -> CostModel {
        match self {
            CostFamily::Uniform => CostModel::Uniform { price },
            CostFamily::FreeSet { free } => CostModel::Itemized {
                prices: (0..p).map(|j| if free.contains(j) { 0.0 } else { price }).collect(),
            },
            CostFamily::Grouped { groups, base_prices } => CostModel::Grouped {
                groups: groups.iter().map(|&members| CostGroup { members, price }).collect(),
                prices: base_prices.clone(),
            },
            CostFamily::Scaled { prices } => CostModel::Itemized {
                prices: prices.iter().map(|v| v * price).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionEntry {
    pub set: PredictorSet,
    pub loss: f64,
    pub cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    /// Every purchased set, best total first.
    pub entries: Vec<SelectionEntry>,
    pub optimum: PredictorSet,
    /// Inclusion probabilities inside the optimum (all universe predictors,
    /// zero outside the optimum), when available.
    pub inclusion: Option<Vec<f64>>,
}

impl SelectionOutcome {
    pub fn best(&self) -> &SelectionEntry {
        &self.entries[0]
    }

    pub fn with_inclusion(mut self, table: &InclusionTable) -> Self {
        self.inclusion = Some(table.for_set(self.optimum).to_vec());
        self
    }
}

/// Minimize loss + cost. Ties go to lower cost, then fewer predictors,
/// then smaller bitmask.
pub fn optimal_set(table: &CvLossTable, cm: &CostModel) -> Result<SelectionOutcome> {
    if table.is_empty() {
        return Err(Error::Argument("empty loss table".into()));
    }
    cm.validate(table.p)?;
    let mut entries: Vec<SelectionEntry> = table
        .sets()
        .map(|set| {
            let loss = table.loss(set);
            let cost = cm.evaluate(set);
            SelectionEntry {
                set,
                loss,
                cost,
                total: loss + cost,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.total
            .total_cmp(&b.total)
            .then(a.cost.total_cmp(&b.cost))
            .then(a.set.len().cmp(&b.set.len()))
            .then(a.set.bits().cmp(&b.set.bits()))
    });
    Ok(SelectionOutcome {
        optimum: entries[0].set,
        entries,
        inclusion: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub price: f64,
    pub outcome: SelectionOutcome,
}

/// `optimal_set` at every price of an ascending grid.
pub fn cost_sweep(table: &CvLossTable, family: &CostFamily, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("sweep grid must be ascending".into()));
    }
    grid.par_iter()
        .map(|&price| {
            let outcome = optimal_set(table, &family.at(price, table.p))?;
            Ok(SweepPoint { price, outcome })
        })
        .collect()
}

/// Start-of-wave purchase decision for one predictor over `T` waves.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPurchaseProblem {
    /// Least loss per wave without the predictor (`l_s`).
    pub without: Vec<f64>,
    /// Least loss per wave with it available (`l*_s`).
    pub with: Vec<f64>,
    pub discount: f64,
    pub price: f64,
}

impl TimedPurchaseProblem {
    pub fn new(without: Vec<f64>, with: Vec<f64>, discount: f64, price: f64) -> Result<Self> {
        if without.is_empty() || without.len() != with.len() {
            return Err(Error::Argument(format!(
                "per-wave losses must be nonempty and of equal length ({} vs {})",
                without.len(),
                with.len()
            )));
        }
        if !(discount >= 0.0 && discount.is_finite()) || !(price >= 0.0 && price.is_finite()) {
            return Err(Error::Argument(format!(
                "discount {discount} and price {price} must be finite and nonnegative"
            )));
        }
        for (s, (l, ls)) in without.iter().zip(&with).enumerate() {
            if !l.is_finite() || !ls.is_finite() {
                return Err(Error::Argument(format!("non-finite loss at wave {}", s + 1)));
            }
            if *ls > l + 1e-9 {
                return Err(Error::Argument(format!(
                    "wave {}: loss with the predictor ({ls}) exceeds loss without it ({l})",
                    s + 1
                )));
            }
        }
        Ok(TimedPurchaseProblem {
            without,
            with,
            discount,
            price,
        })
    }

    pub fn waves(&self) -> usize {
        self.without.len()
    }
}

/// Purchase at the start of wave `t` (1-based); `t = T + 1` means never.
pub fn timed_objective(prob: &TimedPurchaseProblem, t: usize) -> Result<f64> {
    let waves = prob.waves();
    if t < 1 || t > waves + 1 {
        return Err(Error::Argument(format!("purchase wave {t} outside 1..={}", waves + 1)));
    }
    let base = 1.0 + prob.discount;
    let mut total = 0.0;
    for s in 1..=waves {
        let l = if s < t { prob.without[s - 1] } else { prob.with[s - 1] };
        total += l / base.powi(s as i32 - 1);
    }
    if t <= waves {
        total += prob.price / base.powi(t as i32 - 1);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurchaseWave {
    At(usize),
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingDecision {
    /// Earliest minimizer.
    pub wave: PurchaseWave,
    pub objective: f64,
    /// All minimizing `t` in `1..=T+1`.
    pub minimizers: Vec<usize>,
    /// Objective for `t = 1..=T+1`.
    pub curve: Vec<f64>,
}

/// Relative tolerance under which two objective values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub fn optimal_purchase_wave(prob: &TimedPurchaseProblem) -> Result<TimingDecision> {
    let waves = prob.waves();
    let curve = (1..=waves + 1)
        .map(|t| timed_objective(prob, t))
        .collect::<Result<Vec<_>>>()?;
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * min.abs().max(1.0);
    let minimizers: Vec<usize> = curve
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= min + tol)
        .map(|(i, _)| i + 1)
        .collect();
    let first = minimizers[0];
    Ok(TimingDecision {
        wave: if first == waves + 1 {
            PurchaseWave::Never
        } else {
            PurchaseWave::At(first)
        },
        objective: curve[first - 1],
        minimizers,
        curve,
    })
}
