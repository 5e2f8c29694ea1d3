//! Self-verification suites run by the `check` command.

use std::fmt::Write;

use rayon::prelude::*;

use crate::config::CheckSection;
use crate::error::{Error, Result};
use crate::extended::{verify_proposition1_with, Augmentation, Prop1Report};
use crate::gprior::{fit_model, GPriorConfig};
use crate::oracle::{quadrature_log_ml, toy_case, QuadratureCase, QUADRATURE_TOLERANCE};
use crate::subset::PredictorSet;

/// Closed-form and quadrature log Bayes factors against the empty model,
/// with `g = n`, for toy datasets seeded `0..count`.
pub fn quadrature_suite(count: u64) -> Result<Vec<QuadratureCase>> {
    (0..count)
        .into_par_iter()
        .map(|seed| {
            let (d, subset) = toy_case(seed)?;
            let prior = GPriorConfig::default();
            let g = prior.g_for(d.n());
            let empty = PredictorSet::empty(d.p())?;
            let closed_form = fit_model(&d, subset, &prior)?.log_ml - fit_model(&d, empty, &prior)?.log_ml;
            let quadrature = quadrature_log_ml(&d, subset, g)? - quadrature_log_ml(&d, empty, g)?;
            Ok(QuadratureCase {
                seed,
                n: d.n(),
                k: subset.len(),
                closed_form,
                quadrature,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Case {
    pub augmentation: Augmentation,
    pub report: Prop1Report,
    /// Whether positivity is judged (the R² increase is large enough).
    pub judged: bool,
}

impl Prop1Case {
    pub fn passes(&self) -> bool {
        let agree = (self.report.difference - self.report.closed_form).abs() <= crate::extended::PROP1_TOLERANCE;
        match self.augmentation {
            Augmentation::Null => agree && self.report.difference.abs() <= crate::extended::PROP1_TOLERANCE,
            Augmentation::Signal if self.judged => agree && self.report.verdict,
            Augmentation::Signal => agree,
        }
    }
}

/// The proposition grid: every `q` crossed with seeds `0..prop1_seeds`,
/// plus one null-augmentation case per `q` when requested.
pub fn prop1_suite(cfg: &CheckSection) -> Result<Vec<Prop1Case>> {
    let cols = 2 * cfg.prop1_m + cfg.prop1_q.iter().copied().max().unwrap_or(0);
    if cfg.prop1_n <= cols + 3 {
        return Err(Error::Config(format!(
            "check.prop1_n = {} is too small for {cols} predictors",
            cfg.prop1_n
        )));
    }
    let mut jobs: Vec<(usize, u64, Augmentation)> = Vec::new();
    for &q in &cfg.prop1_q {
        jobs.extend((0..cfg.prop1_seeds).map(|s| (q, s, Augmentation::Signal)));
        if cfg.null_case {
            jobs.push((q, 0, Augmentation::Null));
        }
    }
    jobs.into_par_iter()
        .map(|(q, seed, aug)| {
            let report = verify_proposition1_with(cfg.prop1_n, cfg.prop1_m, q, seed, aug).map_err(|e| match e {
                Error::Argument(m) => Error::Config(m),
                other => other,
            })?;
            let judged = aug == Augmentation::Signal && report.delta > cfg.min_delta;
            Ok(Prop1Case {
                augmentation: aug,
                report,
                judged,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub quadrature: Vec<QuadratureCase>,
    pub prop1: Vec<Prop1Case>,
}

impl CheckOutcome {
    pub fn quadrature_failures(&self) -> impl Iterator<Item = &QuadratureCase> {
        self.quadrature.iter().filter(|c| !(c.error() <= QUADRATURE_TOLERANCE))
    }

    pub fn prop1_failures(&self) -> impl Iterator<Item = &Prop1Case> {
        self.prop1.iter().filter(|c| !c.passes())
    }

    pub fn all_pass(&self) -> bool {
        self.quadrature_failures().next().is_none() && self.prop1_failures().next().is_none()
    }

    /// Human-readable pass/fail table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let q_fail = self.quadrature_failures().count();
        let worst = self.quadrature.iter().map(|c| c.error()).fold(0.0, f64::max);
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>6}  max |closed - quadrature| = {worst:.3e}",
            "marginal likelihood oracle",
            self.quadrature.len() - q_fail,
            self.quadrature.len()
        );
        let signal: Vec<&Prop1Case> = self
            .prop1
            .iter()
            .filter(|c| c.augmentation == Augmentation::Signal)
            .collect();
        let s_fail = signal.iter().filter(|c| !c.passes()).count();
        let unjudged = signal.iter().filter(|c| !c.judged).count();
        let worst = self
            .prop1
            .iter()
            .map(|c| (c.report.difference - c.report.closed_form).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>6}  max |difference - closed form| = {worst:.3e}, {unjudged} with small R² increase",
            "R² augmentation",
            signal.len() - s_fail,
            signal.len()
        );
        for c in self.prop1.iter().filter(|c| c.augmentation == Augmentation::Null) {
            let _ = writeln!(
                out,
                "{:<28} {:>6}        q = {}, difference = {:.3e}",
                "null augmentation",
                if c.passes() { "pass" } else { "FAIL" },
                c.report.q,
                c.report.difference
            );
        }
        for c in self.quadrature_failures() {
            let _ = writeln!(
                out,
                "FAIL oracle seed {} (n = {}, k = {}): closed {:.12} vs quadrature {:.12}",
                c.seed, c.n, c.k, c.closed_form, c.quadrature
            );
        }
        for c in self.prop1_failures() {
            let _ = writeln!(out, "FAIL {:?}", c.report);
        }
        out
    }
}

pub fn run_checks(cfg: &CheckSection) -> Result<CheckOutcome> {
    let prop1 = prop1_suite(cfg)?;
    let quadrature = quadrature_suite(cfg.quadrature_seeds)?;
    Ok(CheckOutcome { quadrature, prop1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_passes() {
        let cfg = CheckSection {
            quadrature_seeds: 3,
            prop1_seeds: 4,
            ..Default::default()
        };
        let out = run_checks(&cfg).unwrap();
        assert!(out.all_pass(), "{}", out.table());
        assert_eq!(out.prop1.len(), 10);
    }

    #[test]
    fn too_few_cases_is_a_config_error() {
        let cfg = CheckSection {
            prop1_n: 6,
            ..Default::default()
        };
        assert!(matches!(prop1_suite(&cfg), Err(Error::Config(_))));
    }
}
