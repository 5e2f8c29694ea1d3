//! Averaging over models that use predictors not yet purchased, by
//! integrating them out under a known joint Gaussian law of all
//! predictors, plus a numerical check that this puts more weight on
//! higher-R² models than averaging inside the purchased set.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{gram_schmidt, Dataset};
use crate::error::{Error, Result};
use crate::gprior::{fit_from_stats, GPriorConfig, ModelFit, SufficientStats};
use crate::subset::PredictorSet;

/// Joint normal law of all `p` potential predictors, on the same scale as
/// the data the models were fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCovariateModel {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianCovariateModel {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::shape(
                format!("{p}×{p} covariance"),
                format!("{}×{}", cov.nrows(), cov.ncols()),
            ));
        }
        for i in 0..p {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Conditioning(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Conditioning("non-finite covariate law".into()));
        }
        let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::Conditioning(format!(
                "covariance is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(GaussianCovariateModel { mean, cov })
    }

    /// Mean vector file (one value per row, or one row) and a headerless
    /// `p × p` covariance CSV.
    pub fn from_csv_pair(mean_path: &Path, cov_path: &Path) -> Result<Self> {
        let mean = read_rows(mean_path)?;
        let rows = read_rows(cov_path)?;
        let flat: Vec<f64> = mean.iter().flatten().copied().collect();
        let p = flat.len();
        if rows.len() != p || rows.iter().any(|r| r.len() != p) {
            return Err(Error::Config(format!(
                "{}: covariance must be {p}×{p} to match the mean vector",
                cov_path.display()
            )));
        }
        let cov = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        Self::new(DVector::from_vec(flat), cov)
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    row: r + 1,
                    column: format!("{}", c + 1),
                    message: format!("'{v}' is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Law of the unpurchased predictors given the purchased ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    pub unpurchased: Vec<usize>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// `μ_w + Σ_wx Σ_xx⁻¹ (x − μ_x)` and `Σ_ww − Σ_wx Σ_xx⁻¹ Σ_xw`.
/// `x_values` lists the purchased predictors' values in index order.
pub fn conditional_law(
    cm: &GaussianCovariateModel,
    purchased: PredictorSet,
    x_values: &[f64],
) -> Result<ConditionalLaw> {
    let p = cm.p();
    if purchased.universe() != p {
        return Err(Error::shape(format!("set over {p} predictors"), purchased.universe()));
    }
    let obs = purchased.to_indices();
    let hid: Vec<usize> = (0..p).filter(|j| !purchased.contains(*j)).collect();
    if hid.is_empty() {
        return Err(Error::Argument(
            "every predictor is purchased; nothing to impute".into(),
        ));
    }
    if x_values.len() != obs.len() {
        return Err(Error::shape(format!("{} purchased values", obs.len()), x_values.len()));
    }
    let mu_w = cm.mean.select_rows(hid.iter());
    let s_ww = cm.cov.select_rows(hid.iter()).select_columns(hid.iter());
    if obs.is_empty() {
        return Ok(ConditionalLaw {
            unpurchased: hid,
            mean: mu_w,
            cov: s_ww,
        });
    }
    let s_xx = cm.cov.select_rows(obs.iter()).select_columns(obs.iter());
    let s_wx = cm.cov.select_rows(hid.iter()).select_columns(obs.iter());
    let chol = s_xx
        .cholesky()
        .ok_or_else(|| Error::Conditioning("purchased-block covariance is singular".into()))?;
    let dx = DVector::from_iterator(obs.len(), obs.iter().zip(x_values).map(|(&j, v)| v - cm.mean[j]));
    let mean = mu_w + &s_wx * chol.solve(&dx);
    let cov = s_ww - &s_wx * chol.solve(&s_wx.transpose());
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(ConditionalLaw {
        unpurchased: hid,
        mean,
        cov,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Imputation {
    /// Evaluate each model at the conditional mean. Exact, because every
    /// model's posterior mean is linear in the predictors.
    PlugIn,
    /// Average over `draws` samples from the conditional law.
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedPrediction {
    pub mean: f64,
    /// Monte Carlo standard error; zero for the plug-in path.
    pub std_error: f64,
}

/// Prediction averaged over all `2^p` models, with unpurchased predictors
/// integrated out. `fits` and `weights` are indexed by bitmask over the
/// full universe; `weights` must sum to one.
pub fn extended_predict(
    purchased: PredictorSet,
    x_values: &[f64],
    fits: &[Option<ModelFit>],
    weights: &[f64],
    cm: &GaussianCovariateModel,
    mode: Imputation,
) -> Result<ExtendedPrediction> {
    let p = cm.p();
    let width = 1usize << p;
    if fits.len() != width || weights.len() != width {
        return Err(Error::shape(
            format!("{width} fits and weights"),
            format!("{} / {}", fits.len(), weights.len()),
        ));
    }
    let obs = purchased.to_indices();
    if x_values.len() != obs.len() {
        return Err(Error::shape(format!("{} purchased values", obs.len()), x_values.len()));
    }
    let mut row = vec![0.0; p];
    for (&j, &v) in obs.iter().zip(x_values) {
        row[j] = v;
    }
    let active: Vec<(&ModelFit, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(b, &w)| {
            fits[b]
                .as_ref()
                .map(|f| (f, w))
                .ok_or_else(|| Error::MissingFit(PredictorSet::from_raw(b as u32, p).to_string()))
        })
        .collect::<Result<_>>()?;
    let bma_at = |row: &[f64]| -> f64 { active.iter().map(|(f, w)| w * f.predict_full_row(row)).sum() };

    if obs.len() == p {
        return Ok(ExtendedPrediction {
            mean: bma_at(&row),
            std_error: 0.0,
        });
    }
    let law = conditional_law(cm, purchased, x_values)?;
    match mode {
        Imputation::PlugIn => {
            for (k, &j) in law.unpurchased.iter().enumerate() {
                row[j] = law.mean[k];
            }
            Ok(ExtendedPrediction {
                mean: bma_at(&row),
                std_error: 0.0,
            })
        }
        Imputation::MonteCarlo { draws, seed } => {
            if draws == 0 {
                return Err(Error::Argument("Monte Carlo needs at least one draw".into()));
            }
            let q = law.unpurchased.len();
            let factor = law
                .cov
                .clone()
                .cholesky()
                .map(|c| c.l())
                .or_else(|| psd_factor(&law.cov))
                .ok_or_else(|| Error::Conditioning("conditional covariance is not factorizable".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut z = DVector::zeros(q);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..draws {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let w = &law.mean + &factor * &z;
                for (k, &j) in law.unpurchased.iter().enumerate() {
                    row[j] = w[k];
                }
                let h = bma_at(&row);
                sum += h;
                sum_sq += h * h;
            }
            let nd = draws as f64;
            let mean = sum / nd;
            let var = if draws > 1 {
                ((sum_sq - nd * mean * mean) / (nd - 1.0)).max(0.0)
            } else {
                0.0
            };
            Ok(ExtendedPrediction {
                mean,
                std_error: (var / nd).sqrt(),
            })
        }
    }
}

// Eigen square root for a conditional covariance that is PSD but not
// numerically PD (e.g. an exactly determined predictor).
fn psd_factor(cov: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().any(|v| *v < -1e-10) {
        return None;
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Some(&eig.eigenvectors * sqrt)
}

/// Normalized prior × marginal-likelihood weights over all `2^p` models.
pub fn full_space_weights(log_ml: &[f64], prior: &GPriorConfig) -> Result<Vec<f64>> {
    let width = log_ml.len();
    if width == 0 || !width.is_power_of_two() {
        return Err(Error::shape("2^p log marginal likelihoods", width));
    }
    let lw: Vec<f64> = log_ml
        .iter()
        .enumerate()
        .map(|(b, &l)| {
            if l.is_finite() {
                l + prior.log_prior_odds((b as u32).count_ones() as usize)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let norm = crate::lattice::log_sum_exp(&lw);
    if !norm.is_finite() {
        return Err(Error::EmptyEnsemble("full model space".into()));
    }
    Ok(lw.iter().map(|l| (l - norm).exp()).collect())
}

/// Whether the augmented predictors carry signal or are constructed to be
/// exactly uncorrelated with the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augmentation {
    Signal,
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Report {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub seed: u64,
    pub r2_b: f64,
    pub r2_s: f64,
    /// Increase in R² from the augmentation (the same for both bases).
    pub delta: f64,
    pub log_bf_base: f64,
    pub log_bf_augmented: f64,
    /// `log BF_{bs+q} − log BF_bs` from the four marginal likelihoods.
    pub difference: f64,
    /// `−((n−1)/2)[log(1 − Δ/(1+1/n−R²_b)) − log(1 − Δ/(1+1/n−R²_s))]`
    pub closed_form: f64,
    pub verdict: bool,
}

/// Agreement required between the computed and closed-form differences.
pub const PROP1_TOLERANCE: f64 = 1e-8;

impl Prop1Report {
    pub fn passes(&self) -> bool {
        let agree = (self.difference - self.closed_form).abs() <= PROP1_TOLERANCE;
        if self.delta > 0.0 && self.r2_b > self.r2_s {
            agree && self.verdict
        } else {
            agree
        }
    }
}

pub fn verify_proposition1(n: usize, m: usize, q: usize, seed: u64) -> Result<Prop1Report> {
    verify_proposition1_with(n, m, q, seed, Augmentation::Signal)
}

/// Two size-`m` bases `b`, `s` on an orthogonal standardized design with
/// `R²_b > R²_s`, each augmented by the same `q` predictors, compared with
/// `g = n`.
pub fn verify_proposition1_with(n: usize, m: usize, q: usize, seed: u64, aug: Augmentation) -> Result<Prop1Report> {
    if m == 0 || q == 0 {
        return Err(Error::Argument("base and augmentation sizes must be positive".into()));
    }
    let cols = 2 * m + q;
    if n <= cols + 3 {
        return Err(Error::Argument(format!(
            "{n} cases are too few for {cols} predictors; need more than {}",
            cols + 3
        )));
    }
    let d = prop1_design(n, m, q, seed, aug)?;
    let x = d.predictors();
    let gram = x.tr_mul(x);
    let scale = (n - 1) as f64;
    for i in 0..cols {
        for j in 0..i {
            if (gram[(i, j)] / scale).abs() > 1e-6 {
                return Err(Error::Design(format!(
                    "columns {} and {} are not orthogonal",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let stats = SufficientStats::from_dataset(&d);
    let prior = GPriorConfig::default();
    let mut base_b: Vec<usize> = (0..m).collect();
    let mut base_s: Vec<usize> = (m..2 * m).collect();
    let augment: Vec<usize> = (2 * m..cols).collect();
    let fit =
        |idx: &[usize]| -> Result<ModelFit> { fit_from_stats(&stats, PredictorSet::from_indices(idx, cols)?, &prior) };
    let joined = |a: &[usize]| -> Vec<usize> { a.iter().chain(&augment).copied().collect() };

    let (mut b, mut s) = (fit(&base_b)?, fit(&base_s)?);
    if b.r2 < s.r2 {
        std::mem::swap(&mut base_b, &mut base_s);
        std::mem::swap(&mut b, &mut s);
    }
    let (bq, sq) = (fit(&joined(&base_b))?, fit(&joined(&base_s))?);
    let log_bf_base = b.log_ml - s.log_ml;
    let log_bf_augmented = bq.log_ml - sq.log_ml;
    let difference = log_bf_augmented - log_bf_base;
    let delta = match aug {
        Augmentation::Null => (bq.r2 - b.r2).max(0.0),
        Augmentation::Signal => bq.r2 - b.r2,
    };
    let nf = n as f64;
    let closed_form =
        -(nf - 1.0) / 2.0 * ((-delta / (1.0 + 1.0 / nf - b.r2)).ln_1p() - (-delta / (1.0 + 1.0 / nf - s.r2)).ln_1p());
    Ok(Prop1Report {
        n,
        m,
        q,
        seed,
        r2_b: b.r2,
        r2_s: s.r2,
        delta,
        log_bf_base,
        log_bf_augmented,
        difference,
        closed_form,
        verdict: log_bf_augmented > log_bf_base,
    })
}

// Columns: b-base (m), s-base (m), augmentation (q). Standardized and
// mutually orthogonal; in the null case the augmentation is also
// orthogonal to the response.
fn prop1_design(n: usize, m: usize, q: usize, seed: u64, aug: Augmentation) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let scale = ((n - 1) as f64).sqrt();
    let ones = DVector::from_element(n, 1.0);
    let raw_base: Vec<DVector<f64>> = (0..2 * m).map(|_| DVector::from_fn(n, |_, _| normal())).collect();
    let base = gram_schmidt(std::slice::from_ref(&ones), raw_base)?;
    let coef_b: Vec<f64> = (0..m).map(|_| 0.8 + 0.4 * unit(normal())).collect();
    let coef_s: Vec<f64> = (0..m).map(|_| 0.3 + 0.2 * unit(normal())).collect();
    let coef_a: Vec<f64> = (0..q).map(|_| 0.2 + 0.2 * unit(normal())).collect();
    let noise = DVector::from_fn(n, |_, _| normal());
    let raw_aug: Vec<DVector<f64>> = (0..q).map(|_| DVector::from_fn(n, |_, _| normal())).collect();

    let mut y = noise;
    for (c, v) in coef_b.iter().chain(&coef_s).zip(&base) {
        y.axpy(*c * scale, v, 1.0);
    }
    let aug_cols = match aug {
        Augmentation::Signal => {
            let mut against = vec![ones.clone()];
            against.extend(base.iter().cloned());
            let a = gram_schmidt(&against, raw_aug)?;
            for (c, v) in coef_a.iter().zip(&a) {
                y.axpy(*c * scale, v, 1.0);
            }
            a
        }
        Augmentation::Null => {
            // Residualize against the intercept, the bases and the response
            // so the sample correlation with y is exactly zero.
            let mut against = vec![ones.clone()];
            against.extend(base.iter().cloned());
            let y_resid = gram_schmidt(&against, vec![y.clone()])?;
            against.extend(y_resid);
            gram_schmidt(&against, raw_aug)?
        }
    };
    let columns: Vec<DVector<f64>> = base.iter().chain(&aug_cols).map(|c| c * scale).collect();
    let x = DMatrix::from_columns(&columns);
    let names = (1..=columns.len()).map(|j| format!("x{j}")).collect();
    Dataset::new(y.iter().copied().collect(), x, names, None)
}

// Map a standard normal draw into (0, 1).
fn unit(z: f64) -> f64 {
    0.5 * (1.0 + (z / std::f64::consts::SQRT_2).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_cov_gives_marginal() {
        let cm = GaussianCovariateModel::new(
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0])),
        )
        .unwrap();
        let law = conditional_law(&cm, PredictorSet::from_indices(&[0], 3).unwrap(), &[10.0]).unwrap();
        assert_eq!(law.unpurchased, vec![1, 2]);
        assert_eq!(law.mean.as_slice(), &[2.0, 3.0]);
        assert_eq!(law.cov[(0, 0)], 4.0);
        assert_eq!(law.cov[(1, 1)], 9.0);
        assert_eq!(law.cov[(0, 1)], 0.0);
    }

    #[test]
    fn bivariate_textbook() {
        let rho = 0.6;
        let cm = GaussianCovariateModel::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
            .unwrap();
        let law = conditional_law(&cm, PredictorSet::from_indices(&[0], 2).unwrap(), &[1.5]).unwrap();
        assert!((law.mean[0] - rho * 1.5).abs() < 1e-15);
        assert!((law.cov[(0, 0)] - (1.0 - rho * rho)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_covariance() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(GaussianCovariateModel::new(DVector::zeros(2), asym).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(GaussianCovariateModel::new(DVector::zeros(2), singular).is_err());
    }

    #[test]
    fn full_purchase_has_nothing_to_condition() {
        let cm = GaussianCovariateModel::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(conditional_law(&cm, PredictorSet::full(2).unwrap(), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn null_augmentation_has_zero_difference() {
        let r = verify_proposition1_with(101, 2, 2, 3, Augmentation::Null).unwrap();
        assert!(r.delta < 1e-12);
        assert!(r.difference.abs() < 1e-8);
        assert!(r.passes());
    }

    #[test]
    fn closed_form_hand_value() {
        // R²_b = 0.5, R²_s = 0.3, Δ = 0.1, n = 101
        let n = 101.0f64;
        let v =
            -(n - 1.0) / 2.0 * ((1.0 - 0.1 / (1.0 + 1.0 / n - 0.5)).ln() - (1.0 - 0.1 / (1.0 + 1.0 / n - 0.3)).ln());
        let direct = -50.0 * ((1.0f64 - 0.1 / 0.509_900_990_099_01).ln() - (1.0f64 - 0.1 / 0.709_900_990_099_01).ln());
        assert!((v - direct).abs() < 1e-9);
        assert!(v > 0.0);
    }

    #[test]
    fn signal_augmentation_favours_higher_r2() {
        let r = verify_proposition1(101, 2, 1, 11).unwrap();
        assert!(r.r2_b > r.r2_s);
        assert!(r.delta > 1e-3);
        assert!(r.verdict && r.passes(), "{r:?}");
    }

    #[test]
    fn too_small_n_is_argument_error() {
        assert!(matches!(verify_proposition1(7, 2, 1, 0), Err(Error::Argument(_))));
    }
}
