//! Model averaging inside a purchased predictor set, and the
//! cross-validated loss of that average for every purchased set.
//!
//! For one purchased set `S` the averaging runs over the `2^|S|` submodels
//! `γ ⊆ S` with weights `∝ m(y | X_γ) p^|γ| (1−p)^(|S|−|γ|)`. The
//! `(1−p)^|S|` factor is shared by every model in the ensemble, so only
//! the odds `(p/(1−p))^|γ|` enter the weights.
//!
//! Per fold, all `2^p` subsets are fitted once on the training part; the
//! ensemble predictions for every `S` then come out of a single zeta
//! transform per validation case over (log weight, prediction) pairs.

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::{Dataset, FoldPlan, Standardizer};
use crate::error::{Error, Result};
use crate::gprior::{fit_from_stats, GPriorConfig, ModelFit, SufficientStats};
use crate::lattice::{log_sum_exp, zeta_transform, LogWeightedMean};
use crate::subset::{enumerate_subsets, PredictorSet};

/// Models whose normalized weight is below this are skipped when
/// predicting from explicit fits. They still count in the normalization.
pub const WEIGHT_FLOOR: f64 = 1e-15;

/// Posterior model weights inside one purchased set.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub purchased: PredictorSet,
    /// `(γ, weight)` for every usable `γ ⊆ S`, increasing bitmask order.
    pub weights: Vec<(PredictorSet, f64)>,
    /// `(j, P(β_j ≠ 0))` for every `j ∈ S`, increasing index order.
    pub inclusion: Vec<(usize, f64)>,
}

impl Ensemble {
    pub fn weight_of(&self, subset: PredictorSet) -> f64 {
        self.weights.iter().find(|(g, _)| *g == subset).map_or(0.0, |(_, w)| *w)
    }
}

/// Normalized weights over `γ ⊆ purchased`. `log_ml` is indexed by subset
/// bitmask over the whole universe; non-finite entries mark unusable
/// (collinear) subsets.
pub fn ensemble_for(purchased: PredictorSet, log_ml: &[f64], prior_p: f64) -> Result<Ensemble> {
    let p = purchased.universe();
    if log_ml.len() != 1usize << p {
        return Err(Error::shape(
            format!("{} log marginal likelihoods", 1usize << p),
            log_ml.len(),
        ));
    }
    if !(prior_p > 0.0 && prior_p < 1.0) {
        return Err(Error::Argument(format!("prior inclusion probability {prior_p}")));
    }
    let odds = (prior_p / (1.0 - prior_p)).ln();
    let members: Vec<(PredictorSet, f64)> = purchased
        .subsets()
        .filter_map(|g| {
            let l = log_ml[g.bits() as usize];
            l.is_finite().then(|| (g, l + odds * g.len() as f64))
        })
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyEnsemble(purchased.to_string()));
    }
    let lw: Vec<f64> = members.iter().map(|m| m.1).collect();
    let norm = log_sum_exp(&lw);
    let weights: Vec<(PredictorSet, f64)> = members.iter().map(|&(g, l)| (g, (l - norm).exp())).collect();
    let inclusion = purchased
        .indices()
        .map(|j| {
            let pr: f64 = weights.iter().filter(|(g, _)| g.contains(j)).map(|(_, w)| w).sum();
            (j, pr.min(1.0))
        })
        .collect();
    Ok(Ensemble {
        purchased,
        weights,
        inclusion,
    })
}

/// Weighted average of per-model posterior means. `fits` is indexed by
/// subset bitmask; `newx` has one column per universe predictor.
pub fn bma_predict(ens: &Ensemble, fits: &[Option<ModelFit>], newx: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = ens.purchased.universe();
    if newx.ncols() != p {
        return Err(Error::shape(format!("{p} columns"), newx.ncols()));
    }
    let mut out = vec![0.0; newx.nrows()];
    let mut row = vec![0.0; p];
    for &(g, w) in &ens.weights {
        if w < WEIGHT_FLOOR {
            continue;
        }
        let fit = fits
            .get(g.bits() as usize)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::MissingFit(g.to_string()))?;
        for (i, o) in out.iter_mut().enumerate() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = newx[(i, j)];
            }
            *o += w * fit.predict_full_row(&row);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CvSettings {
    pub prior: GPriorConfig,
    /// Re-standardize on each training split and carry its scaling to the
    /// validation split.
    pub per_fold_standardize: bool,
}

/// Everything fitted on one training split, evaluated on its validation
/// split.
#[derive(Debug, Clone)]
pub struct FoldFits {
    pub n_train: usize,
    pub valid_rows: Vec<usize>,
    pub y_valid: Vec<f64>,
    /// Indexed by subset bitmask; `-∞` for collinear subsets.
    pub log_ml: Vec<f64>,
    /// Case-major: `predictions[case * 2^p + bits]`, NaN where collinear.
    pub predictions: Vec<f64>,
}

impl FoldFits {
    pub fn prediction(&self, case: usize, subset: PredictorSet) -> f64 {
        self.predictions[(case << subset.universe()) + subset.bits() as usize]
    }
}

/// Per-fold, per-subset log marginal likelihoods and validation
/// predictions.
#[derive(Debug, Clone)]
pub struct LogMlTable {
    pub p: usize,
    pub folds: Vec<FoldFits>,
    /// Subsets that were collinear on at least one training split.
    pub excluded: Vec<bool>,
}

pub fn build_log_ml_table(d: &Dataset, plan: &FoldPlan, settings: &CvSettings) -> Result<LogMlTable> {
    settings.prior.validate()?;
    let p = d.p();
    if plan.n() != d.n() {
        return Err(Error::shape(format!("fold plan over {} cases", d.n()), plan.n()));
    }
    let subsets: Vec<PredictorSet> = enumerate_subsets(p)?.collect();
    let smallest_train = d.n() - plan.fold_sizes().into_iter().max().unwrap_or(0);
    if smallest_train <= p + 3 {
        return Err(Error::InsufficientData(format!(
            "training splits of {smallest_train} cases cannot fit all {p} predictors; need more than {}",
            p + 3
        )));
    }

    let mut folds = Vec::with_capacity(plan.fold_count());
    for fold in 0..plan.fold_count() {
        let (train_rows, valid_rows) = plan.split(fold);
        let mut train = d.select_rows(&train_rows);
        let mut valid = d.select_rows(&valid_rows);
        if settings.per_fold_standardize {
            let scaler = Standardizer::fit(&train)?;
            train = scaler.apply(&train)?;
            valid = scaler.apply(&valid)?;
        }
        let stats = SufficientStats::from_dataset(&train);
        let fits: Vec<Option<ModelFit>> = subsets
            .par_iter()
            .map(|&g| match fit_from_stats(&stats, g, &settings.prior) {
                Ok(f) => Ok(Some(f)),
                Err(Error::Collinear { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;

        let m = valid.n();
        let rows: Vec<Vec<f64>> = valid
            .predictors()
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        let width = subsets.len();
        let mut predictions = vec![f64::NAN; m * width];
        predictions
            .par_chunks_mut(width)
            .zip(rows.par_iter())
            .for_each(|(out, row)| {
                for (slot, fit) in out.iter_mut().zip(&fits) {
                    if let Some(f) = fit {
                        *slot = f.predict_full_row(row);
                    }
                }
            });
        let log_ml = fits
            .iter()
            .map(|f| f.as_ref().map_or(f64::NEG_INFINITY, |f| f.log_ml))
            .collect();
        folds.push(FoldFits {
            n_train: train.n(),
            valid_rows,
            y_valid: valid.response().to_vec(),
            log_ml,
            predictions,
        });
    }

    let mut excluded = vec![false; 1 << p];
    for f in &folds {
        for (e, l) in excluded.iter_mut().zip(&f.log_ml) {
            *e |= !l.is_finite();
        }
    }
    let n_excluded = excluded.iter().filter(|e| **e).count();
    if n_excluded > 0 {
        warn!("{n_excluded} collinear subsets excluded from every ensemble");
    }
    Ok(LogMlTable { p, folds, excluded })
}

/// Cross-validated squared predictive loss of the in-set model average,
/// for every purchased set.
#[derive(Debug, Clone, PartialEq)]
pub struct CvLossTable {
    pub p: usize,
    pub names: Vec<String>,
    pub fold_count: usize,
    /// `fold_losses[bits][fold]`
    pub fold_losses: Vec<Vec<f64>>,
    /// Mean over folds, indexed by bitmask.
    pub mean: Vec<f64>,
}

impl CvLossTable {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn loss(&self, set: PredictorSet) -> f64 {
        self.mean[set.bits() as usize]
    }

    pub fn sets(&self) -> impl Iterator<Item = PredictorSet> + '_ {
        let p = self.p;
        (0..self.mean.len() as u32).map(move |b| PredictorSet::from_raw(b, p))
    }

    /// Restrict to the sets avoiding predictor `j`, keeping the universe.
    pub fn min_loss_excluding(&self, j: usize) -> Option<(PredictorSet, f64)> {
        rank_sets(self).into_iter().find(|(s, _)| !s.contains(j))
    }
}

pub fn cv_loss_all_sets(d: &Dataset, plan: &FoldPlan, settings: &CvSettings) -> Result<CvLossTable> {
    let table = build_log_ml_table(d, plan, settings)?;
    cv_loss_from_table(&table, &settings.prior, d.names().to_vec())
}

pub fn cv_loss_from_table(table: &LogMlTable, prior: &GPriorConfig, names: Vec<String>) -> Result<CvLossTable> {
    let p = table.p;
    let width = 1usize << p;
    let fold_count = table.folds.len();
    let mut fold_losses = vec![vec![0.0; fold_count]; width];
    for (fi, fold) in table.folds.iter().enumerate() {
        let lw: Vec<f64> = (0..width)
            .map(|b| {
                if table.excluded[b] {
                    f64::NEG_INFINITY
                } else {
                    fold.log_ml[b] + prior.log_prior_odds((b as u32).count_ones() as usize)
                }
            })
            .collect();
        let per_case: Vec<Vec<f64>> = fold
            .y_valid
            .par_iter()
            .enumerate()
            .map(|(c, &y)| {
                let preds = &fold.predictions[c * width..(c + 1) * width];
                let mut cell: Vec<LogWeightedMean> = lw
                    .iter()
                    .zip(preds)
                    .map(|(&w, &pr)| LogWeightedMean::new(w, pr))
                    .collect();
                zeta_transform(&mut cell, LogWeightedMean::merge)
                    .map(|_| cell.iter().map(|v| (y - v.mean) * (y - v.mean)).collect())
            })
            .collect::<Result<_>>()?;
        let m = fold.y_valid.len() as f64;
        for (b, losses) in fold_losses.iter_mut().enumerate() {
            let ss: f64 = per_case.iter().map(|c| c[b]).sum();
            losses[fi] = ss / m;
        }
    }
    let mean = fold_losses
        .iter()
        .map(|l| l.iter().sum::<f64>() / fold_count as f64)
        .collect();
    Ok(CvLossTable {
        p,
        names,
        fold_count,
        fold_losses,
        mean,
    })
}

/// Ascending by loss; ties go to fewer predictors, then smaller bitmask.
pub fn rank_sets(table: &CvLossTable) -> Vec<(PredictorSet, f64)> {
    let mut v: Vec<(PredictorSet, f64)> = table.sets().map(|s| (s, table.loss(s))).collect();
    v.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.0.len().cmp(&b.0.len()))
            .then(a.0.bits().cmp(&b.0.bits()))
    });
    v
}

/// Fits of every subset on one (full) dataset.
#[derive(Debug, Clone)]
pub struct FullFits {
    pub p: usize,
    /// Indexed by bitmask; `None` for collinear subsets.
    pub fits: Vec<Option<ModelFit>>,
    pub log_ml: Vec<f64>,
}

pub fn fit_all_subsets(d: &Dataset, prior: &GPriorConfig) -> Result<FullFits> {
    prior.validate()?;
    let p = d.p();
    let stats = SufficientStats::from_dataset(d);
    let subsets: Vec<PredictorSet> = enumerate_subsets(p)?.collect();
    let fits: Vec<Option<ModelFit>> = subsets
        .par_iter()
        .map(|&g| match fit_from_stats(&stats, g, prior) {
            Ok(f) => Ok(Some(f)),
            Err(Error::Collinear { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let log_ml = fits
        .iter()
        .map(|f| f.as_ref().map_or(f64::NEG_INFINITY, |f| f.log_ml))
        .collect();
    Ok(FullFits { p, fits, log_ml })
}

/// Inclusion probabilities of every predictor inside every purchased set.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionTable {
    pub p: usize,
    /// `probs[bits * p + j]`; zero for `j ∉ S`.
    probs: Vec<f64>,
}

impl InclusionTable {
    pub fn for_set(&self, set: PredictorSet) -> &[f64] {
        let start = set.bits() as usize * self.p;
        &self.probs[start..start + self.p]
    }
}

/// `P(j ∈ γ | S)` for all `S` and `j` by one zeta transform per predictor.
pub fn inclusion_table(log_ml: &[f64], excluded: &[bool], prior: &GPriorConfig) -> Result<InclusionTable> {
    let width = log_ml.len();
    if width == 0 || !width.is_power_of_two() || excluded.len() != width {
        return Err(Error::shape("tables of length 2^p", width));
    }
    let p = width.trailing_zeros() as usize;
    let lw: Vec<f64> = (0..width)
        .map(|b| {
            if excluded[b] || !log_ml[b].is_finite() {
                f64::NEG_INFINITY
            } else {
                log_ml[b] + prior.log_prior_odds((b as u32).count_ones() as usize)
            }
        })
        .collect();
    let columns: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut cell: Vec<LogWeightedMean> = lw
                .iter()
                .enumerate()
                .map(|(b, &w)| LogWeightedMean::new(w, if b & (1 << j) != 0 { 1.0 } else { 0.0 }))
                .collect();
            zeta_transform(&mut cell, LogWeightedMean::merge)
                .map(|_| cell.iter().map(|v| v.mean.clamp(0.0, 1.0)).collect())
        })
        .collect::<Result<_>>()?;
    let mut probs = vec![0.0; width * p];
    for (j, col) in columns.iter().enumerate() {
        for b in 0..width {
            probs[b * p + j] = col[b];
        }
    }
    Ok(InclusionTable { p, probs })
}

/// Cross-validated losses plus full-data inclusion probabilities for
/// display.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub table: CvLossTable,
    pub inclusion: InclusionTable,
}

pub fn analyze(d: &Dataset, plan: &FoldPlan, settings: &CvSettings) -> Result<Analysis> {
    d.check_analyzable()?;
    let cv = build_log_ml_table(d, plan, settings)?;
    let table = cv_loss_from_table(&cv, &settings.prior, d.names().to_vec())?;
    let full = fit_all_subsets(d, &settings.prior)?;
    let excluded: Vec<bool> = cv
        .excluded
        .iter()
        .zip(&full.log_ml)
        .map(|(e, l)| *e || !l.is_finite())
        .collect();
    let inclusion = inclusion_table(&full.log_ml, &excluded, &settings.prior)?;
    Ok(Analysis { table, inclusion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn empty_purchase_is_single_model() {
        let ens = ensemble_for(PredictorSet::empty(2).unwrap(), &[-3.0, 0.0, 0.0, 0.0], 0.5).unwrap();
        assert_eq!(ens.weights.len(), 1);
        assert_eq!(ens.weights[0].1, 1.0);
        assert!(ens.inclusion.is_empty());
    }

    #[test]
    fn symmetric_pair() {
        let s = PredictorSet::new(0b01, 2).unwrap();
        let ens = ensemble_for(s, &[1.5, 1.5, 9.0, 9.0], 0.5).unwrap();
        assert!((ens.weights[0].1 - 0.5).abs() < 1e-15);
        assert!((ens.weights[1].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_log_sum_exp() {
        let s = PredictorSet::full(2).unwrap();
        let ens = ensemble_for(s, &[0.0, 1.0, 1.0, 2.0], 0.5).unwrap();
        let z = 1.0 + 2.0 * E + E * E;
        let expect = [1.0 / z, E / z, E / z, E * E / z];
        for ((_, w), e) in ens.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
        let incl = (E + E * E) / z;
        for (_, pr) in &ens.inclusion {
            assert!((pr - incl).abs() < 1e-15);
        }
    }

    #[test]
    fn prior_odds_enter_weights() {
        let s = PredictorSet::full(1).unwrap();
        let ens = ensemble_for(s, &[0.0, 0.0], 0.8).unwrap();
        // odds 4:1 for the one-predictor model
        assert!((ens.weight_of(s) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn all_collinear_is_error() {
        let s = PredictorSet::full(1).unwrap();
        let err = ensemble_for(s, &[f64::NEG_INFINITY, f64::NAN], 0.5).unwrap_err();
        assert!(matches!(err, Error::EmptyEnsemble(_)));
    }

    #[test]
    fn rank_tie_rule() {
        let t = CvLossTable {
            p: 2,
            names: vec!["a".into(), "b".into()],
            fold_count: 1,
            fold_losses: vec![vec![2.0], vec![1.0], vec![3.0], vec![1.0]],
            mean: vec![2.0, 1.0, 3.0, 1.0],
        };
        let r: Vec<u32> = rank_sets(&t).iter().map(|(s, _)| s.bits()).collect();
        assert_eq!(r, vec![1, 3, 0, 2]);
    }
}
