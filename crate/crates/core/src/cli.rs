//! Command implementations behind the `ecoselect` binary.
//!
//! Each command reads a [`RunConfig`], writes its artifacts into the
//! output directory and returns the text to print on standard output.

use std::path::{Path, PathBuf};

use log::info;
use nalgebra::DMatrix;

use crate::bma::{analyze, rank_sets, Analysis};
use crate::check::{run_checks, CheckOutcome};
use crate::config::{RunConfig, StandardizeMode};
use crate::dataset::{load_csv, make_folds, standardize, Dataset, Standardizer};
use crate::econ::{cost_sweep, optimal_purchase_wave, optimal_set, PurchaseWave, SelectionEntry, TimedPurchaseProblem};
use crate::error::{Error, Result};
use crate::report::json::{SetRecord, SweepDocument, TimingDocument, TimingRecord, WaveRecord};
use crate::report::svg::{render_cost_sweep, render_selection_map, render_timing_curves, render_wave_selections};
use crate::report::{write_json, write_text, ResultsDocument, SelectionMapSpec, TimingSeries};

/// Run `f` on a worker pool of the configured size.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Load the configured dataset and standardize it as requested.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let d = load_csv(
        &cfg.data.path,
        &cfg.data.response,
        &cfg.data.predictors,
        cfg.data.wave.as_deref(),
    )?;
    match cfg.data.standardize {
        StandardizeMode::None => Ok(d),
        StandardizeMode::Global => standardize(&d),
        StandardizeMode::PerWave => standardize_per_wave(&d),
    }
}

/// Standardize each wave with its own means and deviations, keeping the
/// original row order.
pub fn standardize_per_wave(d: &Dataset) -> Result<Dataset> {
    let waves = d
        .waves()
        .ok_or_else(|| Error::Config("per-wave standardization needs data.wave".into()))?
        .to_vec();
    let mut x = DMatrix::zeros(d.n(), d.p());
    let mut labels: Vec<u32> = waves.clone();
    labels.sort_unstable();
    labels.dedup();
    for w in labels {
        let rows: Vec<usize> = (0..d.n()).filter(|&i| waves[i] == w).collect();
        let part = d.select_rows(&rows);
        let scaled = Standardizer::fit(&part)?.apply(&part)?;
        for (r, &i) in rows.iter().enumerate() {
            x.row_mut(i).copy_from(&scaled.predictors().row(r));
        }
    }
    Dataset::new(d.response().to_vec(), x, d.names().to_vec(), Some(waves))
}

fn run_analysis(cfg: &RunConfig, d: &Dataset) -> Result<Analysis> {
    let plan = make_folds(d.n(), cfg.cv.folds, cfg.cv.seed)?;
    info!(
        "analyzing {} cases, {} predictors, {} folds",
        d.n(),
        d.p(),
        cfg.cv.folds
    );
    analyze(d, &plan, &cfg.cv_settings()?)
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.join(name))
}

fn describe(entry: &SelectionEntry, names: &[String]) -> String {
    format!(
        "{} loss {:.6} cost {:.6} total {:.6}",
        entry.set.label(names),
        entry.loss,
        entry.cost,
        entry.total
    )
}

/// Files written by `analyze`.
pub fn analyze_outputs(top_k: usize) -> [String; 3] {
    [
        "selection_map.svg".into(),
        format!("selection_map_top{top_k}.svg"),
        "results.json".into(),
    ]
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<String> {
    cfg.cost_model()?;
    let d = load_dataset(cfg)?;
    let a = run_analysis(cfg, &d)?;
    let outcome = optimal_set(&a.table, &cfg.cost_model()?)?.with_inclusion(&a.inclusion);
    let names = d.names();

    let [full_name, top_name, json_name] = analyze_outputs(cfg.report.top_k);
    let spec = SelectionMapSpec::from_analysis(&a, None, cfg.report.gray_threshold);
    write_text(&out_path(cfg, &full_name)?, &render_selection_map(&spec))?;
    let top = SelectionMapSpec {
        top_k: Some(cfg.report.top_k),
        ..spec
    };
    write_text(&out_path(cfg, &top_name)?, &render_selection_map(&top))?;
    let doc = ResultsDocument::from_outcome(&outcome, names, Some(&a.inclusion));
    write_json(&out_path(cfg, &json_name)?, &doc)?;

    Ok(format!("optimum {}\n", describe(outcome.best(), names)))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let (family, grid) = cfg.cost_family()?;
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("sweep.grid must be nonempty and ascending".into()));
    }
    let d = load_dataset(cfg)?;
    let a = run_analysis(cfg, &d)?;
    let sweep: Vec<_> = cost_sweep(&a.table, &family, grid)?
        .into_iter()
        .map(|mut pt| {
            pt.outcome = pt.outcome.with_inclusion(&a.inclusion);
            pt
        })
        .collect();
    let names = d.names();
    write_text(&out_path(cfg, "cost_sweep.svg")?, &render_cost_sweep(names, &sweep))?;
    write_json(
        &out_path(cfg, "sweep.json")?,
        &SweepDocument::new(cfg.family_label(), &sweep, names),
    )?;
    let mut text = String::new();
    for pt in &sweep {
        text.push_str(&format!(
            "price {} optimum {}\n",
            pt.price,
            describe(pt.outcome.best(), names)
        ));
    }
    Ok(text)
}

pub fn cmd_timed(cfg: &RunConfig) -> Result<String> {
    let timed = cfg
        .timed
        .as_ref()
        .ok_or_else(|| Error::Config("missing [timed] section".into()))?;
    if cfg.data.wave.is_none() {
        return Err(Error::Config("timed analysis needs data.wave".into()));
    }
    if timed.deltas.is_empty() || timed.prices.is_empty() {
        return Err(Error::Config("timed.deltas and timed.prices must be nonempty".into()));
    }
    let target = cfg.target_index()?;
    let raw = load_csv(
        &cfg.data.path,
        &cfg.data.response,
        &cfg.data.predictors,
        cfg.data.wave.as_deref(),
    )?;
    let global = match cfg.data.standardize {
        StandardizeMode::Global => Some(Standardizer::fit(&raw)?),
        _ => None,
    };
    let names = raw.names().to_vec();

    let mut waves = Vec::new();
    let mut strip = Vec::new();
    for (w, part) in raw.split_waves()? {
        let part = match (&global, cfg.data.standardize) {
            (Some(s), _) => s.apply(&part)?,
            (None, StandardizeMode::PerWave) => standardize(&part)?,
            _ => part,
        };
        let a = run_analysis(cfg, &part).map_err(|e| annotate_wave(e, w))?;
        let ranked = rank_sets(&a.table);
        let (best, loss_with) = ranked[0];
        let (_, loss_without) = a
            .table
            .min_loss_excluding(target)
            .expect("the empty set avoids every predictor");
        let entry = SelectionEntry {
            set: best,
            loss: loss_with,
            cost: 0.0,
            total: loss_with,
        };
        let incl = a.inclusion.for_set(best).to_vec();
        waves.push(WaveRecord {
            wave: w,
            loss_with: crate::report::json::Real(loss_with),
            loss_without: crate::report::json::Real(loss_without),
            least_loss_set: SetRecord::new(&entry, &names, Some(&incl)),
        });
        strip.push((w, best, incl));
    }
    let without: Vec<f64> = waves.iter().map(|w| w.loss_without.0).collect();
    let with: Vec<f64> = waves.iter().map(|w| w.loss_with.0).collect();

    let mut series = Vec::new();
    let mut records = Vec::new();
    let mut text = String::new();
    for &delta in &timed.deltas {
        for &price in &timed.prices {
            let prob = TimedPurchaseProblem::new(without.clone(), with.clone(), delta, price)?;
            let decision = optimal_purchase_wave(&prob)?;
            let label = match decision.wave {
                PurchaseWave::At(t) => format!("wave {t}"),
                PurchaseWave::Never => "no purchase".to_string(),
            };
            text.push_str(&format!(
                "discount {delta} price {price}: {label} objective {:.6}\n",
                decision.objective
            ));
            records.push(TimingRecord::new(delta, price, &decision));
            series.push(TimingSeries {
                discount: delta,
                price,
                decision,
            });
        }
    }
    write_text(&out_path(cfg, "timing_curves.svg")?, &render_timing_curves(&series))?;
    write_text(
        &out_path(cfg, "wave_selections.svg")?,
        &render_wave_selections(&names, &strip),
    )?;
    write_json(
        &out_path(cfg, "timing.json")?,
        &TimingDocument {
            schema_version: crate::report::json::SCHEMA_VERSION,
            target: timed.target.clone(),
            waves,
            decisions: records,
        },
    )?;
    Ok(text)
}

fn annotate_wave(e: Error, wave: u32) -> Error {
    match e {
        Error::InsufficientData(m) => Error::InsufficientData(format!("wave {wave}: {m}")),
        Error::Fold(m) => Error::Fold(format!("wave {wave}: {m}")),
        other => other,
    }
}

pub fn cmd_check(cfg: &RunConfig) -> Result<CheckOutcome> {
    run_checks(&cfg.check)
}

/// Dispatch by command name; returns the text to print and whether every
/// verification passed.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<(String, bool)> {
    let threads = cfg.output.threads;
    with_pool(threads, || match command {
        "analyze" => cmd_analyze(cfg).map(|t| (t, true)),
        "sweep" => cmd_sweep(cfg).map(|t| (t, true)),
        "timed" => cmd_timed(cfg).map(|t| (t, true)),
        "check" => cmd_check(cfg).map(|o| (o.table(), o.all_pass())),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    })?
}

/// Load a config file and apply command-line overrides.
pub fn load_config(path: &Path, overrides: &crate::config::Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(overrides)?;
    Ok(cfg)
}
