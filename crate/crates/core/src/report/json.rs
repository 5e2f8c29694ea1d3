//! JSON result documents.
//!
//! Floats are written with 17 significant digits so that re-reading a
//! document reproduces every value bit for bit. Non-finite values become
//! `null`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::bma::{rank_sets, InclusionTable};
use crate::econ::{PurchaseWave, SelectionEntry, SelectionOutcome, SweepPoint, TimingDecision};
use crate::error::{Error, Result};
use crate::subset::PredictorSet;

pub const SCHEMA_VERSION: u32 = 1;

/// A float that serializes with full round-trip precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Real(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN)))
    }
}

/// Name-to-value pairs that keep their order in both directions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderedReals(pub Vec<(String, f64)>);

impl Serialize for OrderedReals {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, &Real(*v))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for OrderedReals {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedReals;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of numbers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> std::result::Result<OrderedReals, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, Real>()? {
                    out.push((k, v.0));
                }
                Ok(OrderedReals(out))
            }
        }
        d.deserialize_map(V)
    }
}

/// One purchased set in a results document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetRecord {
    pub bits: u32,
    pub members: Vec<String>,
    pub loss: Real,
    pub cost: Real,
    pub total: Real,
    /// Inclusion probability of each member, in predictor order.
    pub inclusion: OrderedReals,
}

impl SetRecord {
    pub fn new(entry: &SelectionEntry, names: &[String], inclusion: Option<&[f64]>) -> Self {
        SetRecord {
            bits: entry.set.bits(),
            members: entry.set.member_names(names).into_iter().map(String::from).collect(),
            loss: Real(entry.loss),
            cost: Real(entry.cost),
            total: Real(entry.total),
            inclusion: OrderedReals(match inclusion {
                Some(probs) => entry.set.indices().map(|j| (names[j].clone(), probs[j])).collect(),
                None => Vec::new(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub sets: Vec<SetRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<SetRecord>,
}

impl ResultsDocument {
    /// Sets in rank order (ascending loss, then size, then bitmask), with
    /// the cost-aware optimum attached separately.
    pub fn from_outcome(outcome: &SelectionOutcome, names: &[String], inclusion: Option<&InclusionTable>) -> Self {
        let by_bits: std::collections::HashMap<u32, &SelectionEntry> =
            outcome.entries.iter().map(|e| (e.set.bits(), e)).collect();
        let mut ranked: Vec<&SelectionEntry> = outcome.entries.iter().collect();
        ranked.sort_by(|a, b| {
            a.loss
                .total_cmp(&b.loss)
                .then(a.set.len().cmp(&b.set.len()))
                .then(a.set.bits().cmp(&b.set.bits()))
        });
        let record = |e: &SelectionEntry| SetRecord::new(e, names, inclusion.map(|t| t.for_set(e.set)));
        ResultsDocument {
            schema_version: SCHEMA_VERSION,
            sets: ranked.into_iter().map(record).collect(),
            optimum: by_bits.get(&outcome.optimum.bits()).map(|e| record(e)),
        }
    }

    pub fn empty() -> Self {
        ResultsDocument {
            schema_version: SCHEMA_VERSION,
            sets: Vec::new(),
            optimum: None,
        }
    }
}

/// Rank order used by [`ResultsDocument`], exposed for consistency checks.
pub fn rank_order(table: &crate::bma::CvLossTable) -> Vec<u32> {
    rank_sets(table).into_iter().map(|(s, _)| s.bits()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub price: Real,
    pub optimum: SetRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub schema_version: u32,
    pub family: String,
    pub points: Vec<SweepRecord>,
}

impl SweepDocument {
    pub fn new(family: &str, sweep: &[SweepPoint], names: &[String]) -> Self {
        SweepDocument {
            schema_version: SCHEMA_VERSION,
            family: family.to_string(),
            points: sweep
                .iter()
                .map(|pt| SweepRecord {
                    price: Real(pt.price),
                    optimum: SetRecord::new(pt.outcome.best(), names, pt.outcome.inclusion.as_deref()),
                })
                .collect(),
        }
    }
}

/// Either a wave number or the literal `"no_purchase"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveChoice(pub PurchaseWave);

impl Serialize for WaveChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            PurchaseWave::At(t) => s.serialize_u64(t as u64),
            PurchaseWave::Never => s.serialize_str("no_purchase"),
        }
    }
}

impl<'de> Deserialize<'de> for WaveChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Wave(usize),
            Label(String),
        }
        match Raw::deserialize(d)? {
            Raw::Wave(t) => Ok(WaveChoice(PurchaseWave::At(t))),
            Raw::Label(s) if s == "no_purchase" => Ok(WaveChoice(PurchaseWave::Never)),
            Raw::Label(s) => Err(de::Error::custom(format!("unknown wave label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub discount: Real,
    pub price: Real,
    pub wave: WaveChoice,
    pub objective: Real,
    /// Minimizing positions in `1..=T+1`; `T+1` means no purchase.
    pub minimizers: Vec<usize>,
    pub curve: Vec<Real>,
}

impl TimingRecord {
    pub fn new(discount: f64, price: f64, d: &TimingDecision) -> Self {
        TimingRecord {
            discount: Real(discount),
            price: Real(price),
            wave: WaveChoice(d.wave),
            objective: Real(d.objective),
            minimizers: d.minimizers.clone(),
            curve: d.curve.iter().map(|v| Real(*v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub wave: u32,
    /// Least loss over sets containing the target.
    pub loss_with: Real,
    /// Least loss over sets avoiding the target.
    pub loss_without: Real,
    pub least_loss_set: SetRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingDocument {
    pub schema_version: u32,
    pub target: String,
    pub waves: Vec<WaveRecord>,
    pub decisions: Vec<TimingRecord>,
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string(doc).map_err(|e| Error::Data(format!("cannot serialize results: {e}")))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Data(format!("malformed results document: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = to_json(doc)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<ResultsDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

/// The set a record describes, within a universe of `p` predictors.
pub fn record_set(rec: &SetRecord, p: usize) -> Result<PredictorSet> {
    PredictorSet::new(rec.bits, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn empty_document() {
        assert_eq!(
            to_json(&ResultsDocument::empty()).unwrap(),
            r#"{"schema_version":1,"sets":[]}"#
        );
    }

    #[test]
    fn bits_follow_member_positions() {
        let entry = SelectionEntry {
            set: PredictorSet::from_indices(&[0, 2], 3).unwrap(),
            loss: 0.1,
            cost: 0.0,
            total: 0.1,
        };
        let rec = SetRecord::new(&entry, &names(3), Some(&[0.9, 0.0, 0.3]));
        assert_eq!(rec.bits, 5);
        assert_eq!(rec.members, vec!["x1", "x3"]);
        let text = to_json(&rec).unwrap();
        assert!(
            text.contains(r#""inclusion":{"x1":9.0000000000000002e-1,"x3":"#),
            "{text}"
        );
    }

    #[test]
    fn reals_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2.049586776859504, 1e-300, -7.25e12, f64::MIN_POSITIVE] {
            let text = to_json(&Real(v)).unwrap();
            let back: Real = from_json(&text).unwrap();
            assert_eq!(back.0.to_bits(), v.to_bits(), "{text}");
        }
        assert_eq!(to_json(&Real(f64::NAN)).unwrap(), "null");
    }

    #[test]
    fn no_purchase_label() {
        assert_eq!(to_json(&WaveChoice(PurchaseWave::Never)).unwrap(), "\"no_purchase\"");
        let w: WaveChoice = from_json("3").unwrap();
        assert_eq!(w.0, PurchaseWave::At(3));
        let n: WaveChoice = from_json("\"no_purchase\"").unwrap();
        assert_eq!(n.0, PurchaseWave::Never);
    }
}
