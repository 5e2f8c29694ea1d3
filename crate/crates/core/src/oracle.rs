//! Numerical cross-check of the closed-form marginal likelihood.
//!
//! The slopes and intercept are integrated out analytically as Gaussian
//! integrals over dense `n × n` matrices; the remaining integral over `σ²`
//! is done by adaptive quadrature. Nothing here touches the closed-form
//! code in [`crate::gprior`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::subset::PredictorSet;

/// Log marginal likelihood of `subset` under the g-prior model, by
/// quadrature over `log σ²`.
pub fn quadrature_log_ml(d: &Dataset, subset: PredictorSet, g: f64) -> Result<f64> {
    let n = d.n();
    let y = DVector::from_column_slice(d.response());
    let idx = subset.to_indices();
    let mut sigma = DMatrix::<f64>::identity(n, n);
    if !idx.is_empty() {
        let mut xc = d.predictors().select_columns(idx.iter());
        for mut col in xc.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        let gram = xc.transpose() * &xc;
        let inv = gram.try_inverse().ok_or_else(|| Error::Collinear {
            subset: subset.to_string(),
            rcond: 0.0,
        })?;
        // y | β0, σ² ~ N(β0 1, σ² (I + g H)) once β1 is integrated out.
        let hat = &xc * inv * xc.transpose();
        sigma += hat * g;
    }
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Conditioning("marginal covariance is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let ones = DVector::from_element(n, 1.0);
    let si_one = chol.solve(&ones);
    let si_y = chol.solve(&y);
    let a = ones.dot(&si_one);
    let b = ones.dot(&si_y);
    let quad = y.dot(&si_y) - b * b / a;

    // Flat prior on β0 contributes sqrt(2πσ²/a); π(σ²) ∝ 1/σ² makes the
    // integral over u = log σ² unweighted.
    let half = (n as f64 - 1.0) / 2.0;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let log_integrand = |u: f64| -half * (ln_2pi + u) - quad / (2.0 * u.exp());
    let peak = (quad / (n as f64 - 1.0)).ln();
    let top = log_integrand(peak);
    let f = |u: f64| (log_integrand(u) - top).exp();
    let lo = peak - 8.0;
    let hi = peak + 45.0 / half + 8.0;
    let integral = adaptive_simpson(&f, lo, hi, 1e-14, 60);
    Ok(-0.5 * log_det - 0.5 * a.ln() + top + integral.ln())
}

/// Adaptive Simpson with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// One toy dataset compared against the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCase {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    /// Closed-form `log m(γ) − log m(∅)`.
    pub closed_form: f64,
    /// Quadrature `log m(γ) − log m(∅)`.
    pub quadrature: f64,
}

impl QuadratureCase {
    pub fn error(&self) -> f64 {
        (self.closed_form - self.quadrature).abs()
    }
}

/// Required agreement of log Bayes factors.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Seeded toy dataset: `n ∈ 8..=20` cases, three standardized predictors,
/// and a subset of size `k ∈ 1..=3`.
pub fn toy_case(seed: u64) -> Result<(Dataset, PredictorSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(8..=20usize);
    let k = rng.random_range(1..=3usize);
    let p = 3;
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            2.0 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + z
        })
        .collect();
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let d = standardize(&Dataset::new(y, x, names, None)?)?;
    let mut idx: Vec<usize> = (0..p).collect();
    while idx.len() > k {
        let drop = rng.random_range(0..idx.len());
        idx.remove(drop);
    }
    Ok((d, PredictorSet::from_indices(&idx, p)?))
}
