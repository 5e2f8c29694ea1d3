//! Slow, direct reimplementations used as test oracles. Nothing here calls
//! the fitting or aggregation code under test.

#![allow(dead_code)]

use ecoselect::nalgebra::{DMatrix, DVector};
use ecoselect::{Dataset, FoldPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use statrs::function::gamma::ln_gamma;

/// Correlated Gaussian predictors and a linear response with unit noise.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let mut x = z.clone();
    for j in 1..p {
        let prev = x.column(j - 1).clone_owned();
        x.column_mut(j).axpy(0.4, &prev, 1.0);
    }
    let coef = Normal::new(0.0, 1.0).unwrap();
    let beta: Vec<f64> = (0..p)
        .map(|j| if j % 2 == 0 { coef.sample(&mut rng) } else { 0.0 })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            0.5 + (0..p).map(|j| beta[j] * x[(i, j)]).sum::<f64>() + e
        })
        .collect();
    Dataset::new(y, x, (1..=p).map(|j| format!("x{j}")).collect(), None).unwrap()
}

struct NaiveModel {
    log_ml: f64,
    ybar: f64,
    xbar: Vec<f64>,
    slopes: Vec<f64>,
    shrink: f64,
    cols: Vec<usize>,
}

impl NaiveModel {
    fn predict(&self, row: &[f64]) -> f64 {
        self.ybar
            + self.shrink
                * self
                    .cols
                    .iter()
                    .zip(&self.slopes)
                    .zip(&self.xbar)
                    .map(|((&j, b), m)| b * (row[j] - m))
                    .sum::<f64>()
    }
}

// OLS with an explicit intercept column, solved by LU on the normal
// equations of the uncentered design.
fn naive_fit(x: &DMatrix<f64>, y: &[f64], cols: &[usize]) -> NaiveModel {
    let n = y.len();
    let k = cols.len();
    let nf = n as f64;
    let ybar = y.iter().sum::<f64>() / nf;
    let dy2: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let xbar: Vec<f64> = cols.iter().map(|&j| x.column(j).sum() / nf).collect();
    let (slopes, r2) = if k == 0 {
        (Vec::new(), 0.0)
    } else {
        let mut a = DMatrix::from_element(n, k + 1, 1.0);
        for (c, &j) in cols.iter().enumerate() {
            a.set_column(c + 1, &x.column(j));
        }
        let yv = DVector::from_column_slice(y);
        let coef = (a.transpose() * &a)
            .lu()
            .solve(&(a.transpose() * &yv))
            .expect("solvable");
        let fitted = &a * &coef;
        let rss: f64 = (&yv - fitted).iter().map(|v| v * v).sum();
        (coef.iter().skip(1).copied().collect(), 1.0 - rss / dy2)
    };
    let g = nf;
    let h = (nf - 1.0) / 2.0;
    let log_ml = ln_gamma(h) - h * std::f64::consts::PI.ln() - 0.5 * nf.ln()
        + ((nf - k as f64 - 1.0) / 2.0) * (1.0 + g).ln()
        - h * dy2.ln()
        - h * (1.0 + g * (1.0 - r2)).ln();
    NaiveModel {
        log_ml,
        ybar,
        xbar,
        slopes,
        shrink: g / (1.0 + g),
        cols: cols.to_vec(),
    }
}

/// Cross-validated BMA loss of every purchased set, g = n_train, prior
/// inclusion probability `prior_p`, by direct enumeration.
pub fn naive_cv_loss(d: &Dataset, plan: &FoldPlan, prior_p: f64) -> Vec<f64> {
    let p = d.p();
    let width = 1usize << p;
    let x = d.predictors();
    let y = d.response();
    let mut totals = vec![0.0; width];
    for fold in 0..plan.fold_count() {
        let (train, valid) = plan.split(fold);
        let xt = DMatrix::from_fn(train.len(), p, |i, j| x[(train[i], j)]);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let models: Vec<NaiveModel> = (0..width)
            .map(|b| {
                let cols: Vec<usize> = (0..p).filter(|j| b >> j & 1 == 1).collect();
                naive_fit(&xt, &yt, &cols)
            })
            .collect();
        for (s, total) in totals.iter_mut().enumerate() {
            let members: Vec<usize> = (0..width).filter(|b| b & !s == 0).collect();
            let lw: Vec<f64> = members
                .iter()
                .map(|&b| models[b].log_ml + (b.count_ones() as f64) * (prior_p / (1.0 - prior_p)).ln())
                .collect();
            let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
            let z: f64 = w.iter().sum();
            let mut sq = 0.0;
            for &i in &valid {
                let row: Vec<f64> = (0..p).map(|j| x[(i, j)]).collect();
                let pred: f64 = members
                    .iter()
                    .zip(&w)
                    .map(|(&b, wi)| wi * models[b].predict(&row))
                    .sum::<f64>()
                    / z;
                sq += (y[i] - pred).powi(2);
            }
            *total += sq / valid.len() as f64;
        }
    }
    totals.iter().map(|t| t / plan.fold_count() as f64).collect()
}

/// CV loss of predicting every validation case by its training mean.
pub fn training_mean_loss(d: &Dataset, plan: &FoldPlan) -> f64 {
    let y = d.response();
    let mut total = 0.0;
    for fold in 0..plan.fold_count() {
        let (train, valid) = plan.split(fold);
        let m = train.iter().map(|&i| y[i]).sum::<f64>() / train.len() as f64;
        total += valid.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>() / valid.len() as f64;
    }
    total / plan.fold_count() as f64
}

/// Subset-sum of `values` by enumerating, for every set, all its subsets.
pub fn naive_subset_sums(values: &[i64]) -> Vec<i64> {
    (0..values.len())
        .map(|s| (0..values.len()).filter(|b| b & !s == 0).map(|b| values[b]).sum())
        .collect()
}

/// Weighted mean and log total weight over the subsets of every set.
pub fn naive_weighted_means(log_w: &[f64], means: &[f64]) -> Vec<(f64, f64)> {
    (0..log_w.len())
        .map(|s| {
            let sub: Vec<usize> = (0..log_w.len()).filter(|b| b & !s == 0).collect();
            let top = sub.iter().map(|&b| log_w[b]).fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = sub.iter().map(|&b| (log_w[b] - top).exp()).collect();
            let z: f64 = w.iter().sum();
            let m = sub.iter().zip(&w).map(|(&b, wi)| wi * means[b]).sum::<f64>() / z;
            (top + z.ln(), m)
        })
        .collect()
}
