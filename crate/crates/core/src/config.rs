//! Run configuration read from a TOML file.
//!
//! Relative paths are resolved against the directory containing the
//! configuration file, so a run is reproducible from the file alone.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bma::CvSettings;
use crate::econ::{CostFamily, CostGroup, CostModel};
use crate::error::{Error, Result};
use crate::gprior::{GPriorConfig, GRule};
use crate::subset::PredictorSet;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub timed: Option<TimedSection>,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    /// Standardize the whole dataset once.
    #[default]
    Global,
    /// Standardize each wave separately (panel data).
    PerWave,
    /// Use the columns as given.
    None,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub response: String,
    pub predictors: Vec<String>,
    #[serde(default)]
    pub wave: Option<String>,
    #[serde(default)]
    pub standardize: StandardizeMode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub folds: usize,
    pub seed: u64,
    pub per_fold_standardize: bool,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            folds: 10,
            seed: 1,
            per_fold_standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GSetting {
    Label(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub g: GSetting,
    pub p: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            g: GSetting::Label("n".into()),
            p: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    None,
    Uniform,
    Itemized,
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CostSection {
    pub kind: CostKind,
    /// Uniform price per predictor.
    pub price: f64,
    /// Itemized prices in predictor order.
    pub prices: Vec<f64>,
    /// Groups of predictor names sold together.
    pub groups: Vec<Vec<String>>,
    pub group_prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[default]
    Uniform,
    FreeSet,
    Grouped,
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub family: FamilyKind,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub free: Vec<String>,
    #[serde(default)]
    pub groups: Vec<Vec<String>>,
    #[serde(default)]
    pub base_prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedSection {
    pub target: String,
    pub deltas: Vec<f64>,
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    /// Number of toy datasets for the marginal-likelihood oracle.
    pub quadrature_seeds: u64,
    /// Seeds per augmentation size for the proposition check.
    pub prop1_seeds: u64,
    pub prop1_n: usize,
    pub prop1_m: usize,
    pub prop1_q: Vec<usize>,
    /// Also run the zero-increment (null augmentation) case.
    pub null_case: bool,
    /// Designs whose R² increase is at most this are reported but not
    /// judged on positivity.
    pub min_delta: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            quadrature_seeds: 50,
            prop1_seeds: 100,
            prop1_n: 101,
            prop1_m: 2,
            prop1_q: vec![1, 2],
            null_case: true,
            min_delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Worker threads; 0 means one per logical CPU.
    pub threads: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    pub top_k: usize,
    pub gray_threshold: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            top_k: 128,
            gray_threshold: 0.7,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a file and make its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.path = resolve(base, &cfg.data.path);
        cfg.output.dir = resolve(base, &cfg.output.dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(seed) = o.seed {
            self.cv.seed = seed;
        }
        if let Some(folds) = o.folds {
            self.cv.folds = folds;
        }
        if let Some(t) = o.threads {
            self.output.threads = t;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.predictors.is_empty() {
            return Err(Error::Config("data.predictors is empty".into()));
        }
        if self.cv.folds < 2 {
            return Err(Error::Config(format!(
                "cv.folds must be at least 2, got {}",
                self.cv.folds
            )));
        }
        if !(0.0..=1.0).contains(&self.report.gray_threshold) {
            return Err(Error::Config("report.gray_threshold must lie in [0, 1]".into()));
        }
        if self.report.top_k == 0 {
            return Err(Error::Config("report.top_k must be positive".into()));
        }
        self.g_rule()?;
        self.prior_config().validate()?;
        Ok(())
    }

    pub fn prior_config(&self) -> GPriorConfig {
        let g_rule = match &self.prior.g {
            GSetting::Value(v) => GRule::Fixed(*v),
            GSetting::Label(s) if s == "n" => GRule::SampleSize,
            // Caught by `g_rule`.
            GSetting::Label(_) => GRule::Fixed(f64::NAN),
        };
        GPriorConfig {
            g_rule,
            model_prior_p: self.prior.p,
        }
    }

    pub fn g_rule(&self) -> Result<GRule> {
        match &self.prior.g {
            GSetting::Label(s) if s != "n" => {
                Err(Error::Config(format!("prior.g must be \"n\" or a number, got {s:?}")))
            }
            _ => Ok(self.prior_config().g_rule),
        }
    }

    pub fn cv_settings(&self) -> Result<CvSettings> {
        self.g_rule()?;
        Ok(CvSettings {
            prior: self.prior_config(),
            per_fold_standardize: self.cv.per_fold_standardize,
        })
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.data
            .predictors
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::Config(format!("'{name}' is not among data.predictors")))
    }

    fn set_of(&self, names: &[String]) -> Result<PredictorSet> {
        let idx = names.iter().map(|n| self.index_of(n)).collect::<Result<Vec<_>>>()?;
        PredictorSet::from_indices(&idx, self.data.predictors.len())
    }

    pub fn target_index(&self) -> Result<usize> {
        let t = self
            .timed
            .as_ref()
            .ok_or_else(|| Error::Config("missing [timed] section".into()))?;
        self.index_of(&t.target)
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        let p = self.data.predictors.len();
        let c = &self.cost;
        let cm = match c.kind {
            CostKind::None => CostModel::zero(),
            CostKind::Uniform => CostModel::Uniform { price: c.price },
            CostKind::Itemized => CostModel::Itemized {
                prices: c.prices.clone(),
            },
            CostKind::Grouped => {
                if c.groups.len() != c.group_prices.len() {
                    return Err(Error::Config(
                        "cost.groups and cost.group_prices differ in length".into(),
                    ));
                }
                let groups = c
                    .groups
                    .iter()
                    .zip(&c.group_prices)
                    .map(|(g, &price)| {
                        Ok(CostGroup {
                            members: self.set_of(g)?,
                            price,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let prices = if c.prices.is_empty() {
                    vec![0.0; p]
                } else {
                    c.prices.clone()
                };
                CostModel::Grouped { groups, prices }
            }
        };
        cm.validate(p)?;
        Ok(cm)
    }

    pub fn cost_family(&self) -> Result<(CostFamily, &[f64])> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        let p = self.data.predictors.len();
        let family = match s.family {
            FamilyKind::Uniform => CostFamily::Uniform,
            FamilyKind::FreeSet => CostFamily::FreeSet {
                free: self.set_of(&s.free)?,
            },
            FamilyKind::Grouped => CostFamily::Grouped {
                groups: s.groups.iter().map(|g| self.set_of(g)).collect::<Result<_>>()?,
                base_prices: if s.base_prices.is_empty() {
                    vec![0.0; p]
                } else {
                    s.base_prices.clone()
                },
            },
            FamilyKind::Scaled => CostFamily::Scaled {
                prices: s.base_prices.clone(),
            },
        };
        // Validate the family's shape once at a unit price.
        family.at(1.0, p).validate(p)?;
        Ok((family, &s.grid))
    }

    pub fn family_label(&self) -> &'static str {
        match self.sweep.as_ref().map(|s| &s.family) {
            Some(FamilyKind::FreeSet) => "free_set",
            Some(FamilyKind::Grouped) => "grouped",
            Some(FamilyKind::Scaled) => "scaled",
            _ => "uniform",
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
