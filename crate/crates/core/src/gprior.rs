//! Normal linear model with Zellner's g-prior on the slopes, a flat prior
//! on the intercept and `π(σ²) ∝ 1/σ²`.
//!
//! Everything needed by the decision problem is closed form: the posterior
//! mean `b`, the scale matrix `B`, the scale `S`, and the marginal
//! likelihood. Predictors are centered on the fitting sample, so the
//! intercept's posterior mean is exactly the sample mean of the response.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::subset::PredictorSet;

/// Designs whose Gram matrix has `λ_min / λ_max` below this are rejected.
pub const RCOND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GRule {
    Fixed(f64),
    /// `g` equals the number of cases the model is fitted on.
    SampleSize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPriorConfig {
    pub g_rule: GRule,
    /// Prior inclusion probability of each predictor.
    pub model_prior_p: f64,
}

impl Default for GPriorConfig {
    fn default() -> Self {
        GPriorConfig {
            g_rule: GRule::SampleSize,
            model_prior_p: 0.5,
        }
    }
}

impl GPriorConfig {
    pub fn fixed_g(g: f64) -> Self {
        GPriorConfig {
            g_rule: GRule::Fixed(g),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GRule::Fixed(g) = self.g_rule {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("g must be positive, got {g}")));
            }
        }
        let p = self.model_prior_p;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!(
                "model prior inclusion probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(())
    }

    pub fn g_for(&self, n_train: usize) -> f64 {
        match self.g_rule {
            GRule::Fixed(g) => g,
            GRule::SampleSize => n_train as f64,
        }
    }

    /// Log prior weight of a model of the given size, up to a constant
    /// shared by every model inside one purchased set.
    pub fn log_prior_odds(&self, size: usize) -> f64 {
        let p = self.model_prior_p;
        size as f64 * (p / (1.0 - p)).ln()
    }
}

/// Centered sufficient statistics of one fitting sample over the whole
/// predictor universe.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    pub n: usize,
    pub ybar: f64,
    /// `Σ (y − ȳ)²`
    pub dy2: f64,
    pub x_means: DVector<f64>,
    /// `Σ (x − x̄)(x − x̄)'`
    pub sxx: DMatrix<f64>,
    /// `Σ (x − x̄)(y − ȳ)`
    pub sxy: DVector<f64>,
}

impl SufficientStats {
    pub fn from_dataset(d: &Dataset) -> Self {
        Self::from_parts(d.predictors(), d.response())
    }

    pub fn from_parts(x: &DMatrix<f64>, y: &[f64]) -> Self {
        let n = y.len();
        let nf = n as f64;
        let ybar = y.iter().sum::<f64>() / nf;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
        let x_means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / nf));
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            let m = x_means[j];
            col.apply(|v| *v -= m);
        }
        SufficientStats {
            n,
            ybar,
            dy2: yc.dot(&yc),
            sxx: xc.tr_mul(&xc),
            sxy: xc.tr_mul(&yc),
            x_means,
        }
    }

    pub fn p(&self) -> usize {
        self.x_means.len()
    }
}

/// Closed-form posterior summary for one predictor subset.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub subset: PredictorSet,
    pub n_train: usize,
    pub g: f64,
    pub ybar: f64,
    pub dy2: f64,
    pub r2: f64,
    /// Fitting-sample means of the subset's predictors.
    pub center: DVector<f64>,
    /// Centered Gram matrix `X_γ'X_γ` of the subset.
    pub gram: DMatrix<f64>,
    pub ols_slopes: DVector<f64>,
    /// Posterior mean of the slopes, `g/(1+g)` times the OLS slopes.
    pub slopes: DVector<f64>,
    /// Scale of the generalized-t posterior.
    pub s: f64,
    pub log_ml: f64,
}

impl ModelFit {
    pub fn k(&self) -> usize {
        self.slopes.len()
    }

    pub fn shrinkage(&self) -> f64 {
        self.g / (1.0 + self.g)
    }

    /// Posterior mean `(β0, β1')'`, intercept first.
    pub fn b(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.k() + 1);
        b[0] = self.ybar;
        b.rows_mut(1, self.k()).copy_from(&self.slopes);
        b
    }

    /// Block-diagonal `B = diag(1/n, g/(1+g) (X'X)⁻¹)`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m[(0, 0)] = 1.0 / self.n_train as f64;
        if k > 0 {
            let inv = self
                .gram
                .clone()
                .cholesky()
                .map(|c| c.inverse())
                .unwrap_or_else(|| DMatrix::from_element(k, k, f64::NAN));
            m.view_mut((1, 1), (k, k)).copy_from(&(inv * self.shrinkage()));
        }
        m
    }

    /// `S/(n−3) · B`.
    pub fn posterior_covariance(&self) -> DMatrix<f64> {
        self.b_matrix() * (self.s / (self.n_train as f64 - 3.0))
    }

    /// Posterior predictive means for rows of the subset's own columns.
    pub fn predict_mean(&self, newx: &DMatrix<f64>) -> Result<Vec<f64>> {
        if newx.ncols() != self.k() {
            return Err(Error::shape(
                format!("{} columns", self.k()),
                format!("{} columns", newx.ncols()),
            ));
        }
        Ok(newx
            .row_iter()
            .map(|row| {
                let mut v = self.ybar;
                for j in 0..self.k() {
                    v += (row[j] - self.center[j]) * self.slopes[j];
                }
                v
            })
            .collect())
    }

    /// Prediction for one row over the full predictor universe.
    pub fn predict_full_row(&self, row: &[f64]) -> f64 {
        let mut v = self.ybar;
        for (pos, j) in self.subset.indices().enumerate() {
            v += (row[j] - self.center[pos]) * self.slopes[pos];
        }
        v
    }
}

/// Fit one subset on a (standardized) training dataset.
pub fn fit_model(train: &Dataset, subset: PredictorSet, cfg: &GPriorConfig) -> Result<ModelFit> {
    if subset.universe() != train.p() {
        return Err(Error::shape(
            format!("subset over {} predictors", train.p()),
            subset.universe(),
        ));
    }
    cfg.validate()?;
    fit_from_stats(&SufficientStats::from_dataset(train), subset, cfg)
}

pub fn fit_from_stats(stats: &SufficientStats, subset: PredictorSet, cfg: &GPriorConfig) -> Result<ModelFit> {
    let n = stats.n;
    let k = subset.len();
    if n <= k + 3 {
        return Err(Error::InsufficientData(format!(
            "{n} cases cannot fit subset {subset} of size {k}; need more than {}",
            k + 3
        )));
    }
    if !(stats.dy2 > 0.0) {
        return Err(Error::Data("response has zero variance".into()));
    }
    let g = cfg.g_for(n);
    let idx = subset.to_indices();
    let gram = stats.sxx.select_rows(idx.iter()).select_columns(idx.iter());
    let sxy = stats.sxy.select_rows(idx.iter());
    let center = stats.x_means.select_rows(idx.iter());

    let (ols, r2) = if k == 0 {
        (DVector::zeros(0), 0.0)
    } else {
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let max = eig.max();
        let min = eig.min();
        let rcond = if max > 0.0 { min / max } else { 0.0 };
        if !(rcond >= RCOND_FLOOR) {
            return Err(Error::Collinear {
                subset: subset.to_string(),
                rcond,
            });
        }
        let chol = gram.clone().cholesky().ok_or_else(|| Error::Collinear {
            subset: subset.to_string(),
            rcond,
        })?;
        let ols = chol.solve(&sxy);
        let r2 = (sxy.dot(&ols) / stats.dy2).clamp(0.0, 1.0);
        (ols, r2)
    };

    let shrink = g / (1.0 + g);
    let s = stats.dy2 / (1.0 + g) * (1.0 + g * (1.0 - r2));
    let log_ml = log_ml_formula(n, k, g, stats.dy2, r2);
    Ok(ModelFit {
        subset,
        n_train: n,
        g,
        ybar: stats.ybar,
        dy2: stats.dy2,
        r2,
        center,
        gram,
        slopes: &ols * shrink,
        ols_slopes: ols,
        s,
        log_ml,
    })
}

/// Log marginal likelihood recomputed from the stored summary.
pub fn log_marginal_likelihood(fit: &ModelFit) -> f64 {
    log_ml_formula(fit.n_train, fit.k(), fit.g, fit.dy2, fit.r2)
}

/// `log m(y | X)` for a model with `k` slopes:
///
/// `log Γ((n−1)/2) − ((n−1)/2) log π − ½ log n + ((n−k−1)/2) log(1+g)
///  − ((n−1)/2) log d_y² − ((n−1)/2) log(1 + g(1−R²))`
pub fn log_ml_formula(n: usize, k: usize, g: f64, dy2: f64, r2: f64) -> f64 {
    let half = (n as f64 - 1.0) / 2.0;
    let prior_fit = (n as f64 - k as f64 - 1.0) / 2.0 * g.ln_1p() - half * (g * (1.0 - r2)).ln_1p();
    null_log_marginal_likelihood(n, dy2) + prior_fit
}

/// Intercept-only model: the `(1+g)` factors cancel.
pub fn null_log_marginal_likelihood(n: usize, dy2: f64) -> f64 {
    let half = (n as f64 - 1.0) / 2.0;
    ln_gamma(half) - half * std::f64::consts::PI.ln() - 0.5 * (n as f64).ln() - half * dy2.ln()
}

/// `(1/m) Σ (y − ŷ)²`
pub fn squared_predictive_loss(y_valid: &[f64], yhat: &[f64]) -> Result<f64> {
    if y_valid.len() != yhat.len() {
        return Err(Error::shape(format!("{} predictions", y_valid.len()), yhat.len()));
    }
    if y_valid.is_empty() {
        return Err(Error::shape("at least one validation case", 0));
    }
    let ss: f64 = y_valid.iter().zip(yhat).map(|(y, h)| (y - h) * (y - h)).sum();
    Ok(ss / y_valid.len() as f64)
}
