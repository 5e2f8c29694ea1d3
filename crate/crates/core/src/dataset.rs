//! Data ingestion, standardization, fold plans and synthetic designs.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::subset::MAX_PREDICTORS;

/// Response vector plus an `n × p` predictor matrix, with optional panel
/// wave labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    response: Vec<f64>,
    predictors: DMatrix<f64>,
    names: Vec<String>,
    waves: Option<Vec<u32>>,
}

impl Dataset {
    pub fn new(
        response: Vec<f64>,
        predictors: DMatrix<f64>,
        names: Vec<String>,
        waves: Option<Vec<u32>>,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::Data("dataset has no cases".into()));
        }
        if predictors.nrows() != n {
            return Err(Error::shape(format!("{n} predictor rows"), predictors.nrows()));
        }
        if names.len() != predictors.ncols() {
            return Err(Error::shape(
                format!("{} predictor names", predictors.ncols()),
                names.len(),
            ));
        }
        if predictors.ncols() > MAX_PREDICTORS {
            return Err(Error::Capacity(format!(
                "{} predictors exceeds the cap of {MAX_PREDICTORS}",
                predictors.ncols()
            )));
        }
        if let Some(w) = &waves {
            if w.len() != n {
                return Err(Error::shape(format!("{n} wave labels"), w.len()));
            }
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite response at case {}", i + 1)));
        }
        if let Some((idx, _)) = predictors.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (idx % n, idx / n);
            return Err(Error::Data(format!(
                "non-finite value for '{}' at case {}",
                names[col],
                row + 1
            )));
        }
        Ok(Dataset {
            response,
            predictors,
            names,
            waves,
        })
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn p(&self) -> usize {
        self.predictors.ncols()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn predictors(&self) -> &DMatrix<f64> {
        &self.predictors
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn waves(&self) -> Option<&[u32]> {
        self.waves.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Analysis needs `n ≥ p + 4`: the full model's coefficient posterior
    /// has `n − 1` degrees of freedom and a finite variance only above 2.
    pub fn check_analyzable(&self) -> Result<()> {
        if self.n() < self.p() + 4 {
            return Err(Error::InsufficientData(format!(
                "{} cases for {} predictors; need at least {}",
                self.n(),
                self.p(),
                self.p() + 4
            )));
        }
        Ok(())
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let response = rows.iter().map(|&i| self.response[i]).collect();
        let predictors = self.predictors.select_rows(rows.iter());
        let waves = self.waves.as_ref().map(|w| rows.iter().map(|&i| w[i]).collect());
        Dataset {
            response,
            predictors,
            names: self.names.clone(),
            waves,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            response: self.response.clone(),
            predictors: self.predictors.select_columns(cols.iter()),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            waves: self.waves.clone(),
        }
    }

    /// One dataset per distinct wave label, keyed by wave, row order kept.
    pub fn split_waves(&self) -> Result<BTreeMap<u32, Dataset>> {
        let waves = self
            .waves
            .as_ref()
            .ok_or_else(|| Error::Config("dataset has no wave column".into()))?;
        let mut rows: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &w) in waves.iter().enumerate() {
            rows.entry(w).or_default().push(i);
        }
        Ok(rows.into_iter().map(|(w, r)| (w, self.select_rows(&r))).collect())
    }
}

/// Per-column location and scale learned from one dataset and applicable
/// to another (e.g. a validation split).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Sample mean and standard deviation with divisor `n − 1`.
    pub fn fit(d: &Dataset) -> Result<Self> {
        let n = d.n();
        if n < 2 {
            return Err(Error::InsufficientData(
                "standardization needs at least two cases".into(),
            ));
        }
        let mut means = Vec::with_capacity(d.p());
        let mut sds = Vec::with_capacity(d.p());
        for (j, col) in d.predictors.column_iter().enumerate() {
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 0.0) || sd <= 1e-12 * mean.abs() {
                return Err(Error::DegeneratePredictor(d.names[j].clone()));
            }
            means.push(mean);
            sds.push(sd);
        }
        Ok(Standardizer { means, sds })
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.p() != self.means.len() {
            return Err(Error::shape(format!("{} predictors", self.means.len()), d.p()));
        }
        let mut x = d.predictors.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        Ok(Dataset {
            response: d.response.clone(),
            predictors: x,
            names: d.names.clone(),
            waves: d.waves.clone(),
        })
    }
}

/// Center every predictor and scale it to unit sample standard deviation
/// (divisor `n − 1`). The response is left untouched.
pub fn standardize(d: &Dataset) -> Result<Dataset> {
    Standardizer::fit(d)?.apply(d)
}

/// Read a comma-delimited UTF-8 file with a header row.
pub fn load_csv(
    path: &Path,
    response_column: &str,
    predictor_columns: &[String],
    wave_column: Option<&str>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column '{name}' not found in {}", path.display())))
    };
    let y_idx = find(response_column)?;
    let x_idx = predictor_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let w_idx = wave_column.map(find).transpose()?;

    let p = x_idx.len();
    let mut response = Vec::new();
    let mut flat = Vec::new();
    let mut waves = w_idx.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("'{raw}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.to_string(),
                    message: format!("'{raw}' is not finite"),
                });
            }
            Ok(v)
        };
        response.push(cell(y_idx, response_column)?);
        for (k, &j) in x_idx.iter().enumerate() {
            flat.push(cell(j, &predictor_columns[k])?);
        }
        if let (Some(wi), Some(ws)) = (w_idx, waves.as_mut()) {
            let name = wave_column.unwrap_or_default();
            let raw = record.get(wi).unwrap_or("");
            let w: u32 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("'{raw}' is not a positive integer wave label"),
            })?;
            if w == 0 {
                return Err(Error::Parse {
                    row,
                    column: name.to_string(),
                    message: "wave labels start at 1".into(),
                });
            }
            ws.push(w);
        }
    }
    if response.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let n = response.len();
    let predictors = DMatrix::from_row_slice(n, p, &flat);
    Dataset::new(response, predictors, predictor_columns.to_vec(), waves)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Data(format!("{}: {e}", path.display())),
    }
}

/// Assignment of cases to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    fold_count: usize,
    assignment: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// (training rows, validation rows) for one fold, each ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::with_capacity(self.n());
        let mut valid = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                valid.push(i);
            } else {
                train.push(i);
            }
        }
        (train, valid)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle of case indices dealt round-robin into `k` folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Fold(format!("fold count {k} is below 2")));
    }
    if n < k {
        return Err(Error::Fold(format!("{n} cases cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (pos, &case) in order.iter().enumerate() {
        assignment[case] = pos % k;
    }
    Ok(FoldPlan {
        fold_count: k,
        assignment,
        seed,
    })
}

/// Orthonormalize `cols` (in order) against `against` and each other by
/// modified Gram–Schmidt with one reorthogonalization pass.
pub(crate) fn gram_schmidt(against: &[DVector<f64>], cols: Vec<DVector<f64>>) -> Result<Vec<DVector<f64>>> {
    let mut basis: Vec<DVector<f64>> = against.iter().map(|v| v / v.norm()).collect();
    let fixed = basis.len();
    for mut v in cols {
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, 1.0);
            }
        }
        let norm = v.norm();
        if !(norm > 1e-10) {
            return Err(Error::Design("random design is rank deficient".into()));
        }
        basis.push(v / norm);
    }
    Ok(basis.split_off(fixed))
}

/// Centered orthogonal columns with sample sd 1 (so `X'X = (n−1)I`) and a
/// response `Xβ + σε`. Names are `x1..xp`.
pub fn synth_orthogonal(n: usize, p: usize, beta: &[f64], sigma: f64, seed: u64) -> Result<Dataset> {
    if p == 0 {
        return Err(Error::Design("need at least one predictor".into()));
    }
    if n <= p {
        return Err(Error::Design(format!(
            "{n} cases cannot hold {p} centered orthogonal predictors"
        )));
    }
    if beta.len() != p {
        return Err(Error::shape(format!("{p} coefficients"), beta.len()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Design(format!("noise sd {sigma} is negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<DVector<f64>> = (0..p)
        .map(|_| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let ones = DVector::from_element(n, 1.0);
    let scale = ((n - 1) as f64).sqrt();
    let cols: Vec<DVector<f64>> = gram_schmidt(&[ones], raw)?.into_iter().map(|c| c * scale).collect();
    let x = DMatrix::from_columns(&cols);
    let b = DVector::from_column_slice(beta);
    let noise = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    });
    let y = &x * b + noise;
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(y.iter().copied().collect(), x, names, None)
}
