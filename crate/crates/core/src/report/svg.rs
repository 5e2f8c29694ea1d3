//! SVG renderers. Output is a pure function of the input: coordinates are
//! printed with fixed precision and gray levels are quantized.

use std::fmt::Write;

use crate::bma::{rank_sets, Analysis};
use crate::econ::{SweepPoint, TimingDecision};
use crate::subset::PredictorSet;

const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";
const WEAK_FILL: &str = "#9a9a9a";
const GRAY_STEPS: f64 = 7.0;

/// Fill for an inclusion probability on an 8-level ramp: probability 1 is
/// black, 0 is white.
pub fn gray_fill(prob: f64) -> String {
    let level = (prob.clamp(0.0, 1.0) * GRAY_STEPS).round() / GRAY_STEPS;
    let v = ((1.0 - level) * 255.0).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg version=\"1.1\" xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        num(width),
        num(height),
        num(width),
        num(height),
        num(width),
        num(height)
    );
}

/// One column of a selection map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub set: PredictorSet,
    pub loss: f64,
    /// One probability per universe predictor; zero outside `set`.
    pub inclusion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub set: PredictorSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMapSpec {
    pub names: Vec<String>,
    /// Ascending by loss.
    pub entries: Vec<MapEntry>,
    pub markers: Vec<Marker>,
    pub top_k: Option<usize>,
    /// Members of the least-loss set with inclusion below this are drawn
    /// in a separate gray.
    pub gray_threshold: f64,
}

impl SelectionMapSpec {
    /// Ranked sets of an analysis, with `N` (no predictors) and `F` (all
    /// predictors) markers.
    pub fn from_analysis(a: &Analysis, top_k: Option<usize>, gray_threshold: f64) -> Self {
        let p = a.table.p;
        let entries = rank_sets(&a.table)
            .into_iter()
            .map(|(set, loss)| MapEntry {
                set,
                loss,
                inclusion: a.inclusion.for_set(set).to_vec(),
            })
            .collect();
        let full = PredictorSet::from_raw(((1u64 << p) - 1) as u32, p);
        SelectionMapSpec {
            names: a.table.names.clone(),
            entries,
            markers: vec![
                Marker {
                    label: "N".into(),
                    set: PredictorSet::from_raw(0, p),
                },
                Marker {
                    label: "F".into(),
                    set: full,
                },
            ],
            top_k,
            gray_threshold,
        }
    }

    pub fn columns(&self) -> usize {
        self.top_k.map_or(self.entries.len(), |k| k.min(self.entries.len()))
    }
}

/// Loss curve over a grid of ranked sets, one column per set and one row
/// per predictor.
pub fn render_selection_map(spec: &SelectionMapSpec) -> String {
    let p = spec.names.len();
    let cols = spec.columns();
    let shown = &spec.entries[..cols];
    let cell_w = (720.0 / cols.max(1) as f64).clamp(0.5, 14.0);
    let row_h = 14.0;
    let left = 70.0;
    let top = 24.0;
    let plot_h = 150.0;
    let gap = 12.0;
    let grid_top = top + plot_h + gap;
    let grid_w = cell_w * cols as f64;
    let width = left + grid_w + 20.0;
    let height = grid_top + row_h * p as f64 + 30.0;

    let mut out = String::new();
    header(&mut out, width, height);

    // Loss panel.
    let (lo, hi) = shown.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.loss), hi.max(e.loss))
    });
    let y_of = |loss: f64| -> f64 {
        if hi > lo {
            top + plot_h * (1.0 - (loss - lo) / (hi - lo))
        } else {
            top + plot_h / 2.0
        }
    };
    let x_of = |i: usize| left + (i as f64 + 0.5) * cell_w;
    let _ = writeln!(
        out,
        "<g class=\"loss-panel\">\n<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.5\"/>",
        num(left),
        num(top),
        num(grid_w),
        num(plot_h)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"9\" text-anchor=\"end\">{:.4}</text>\n<text x=\"{}\" y=\"{}\" {FONT} font-size=\"9\" text-anchor=\"end\">{:.4}</text>",
        num(left - 4.0),
        num(top + 8.0),
        if hi.is_finite() { hi } else { 0.0 },
        num(left - 4.0),
        num(top + plot_h),
        if lo.is_finite() { lo } else { 0.0 }
    );
    let points: Vec<String> = shown
        .iter()
        .enumerate()
        .map(|(i, e)| format!("{},{}", num(x_of(i)), num(y_of(e.loss))))
        .collect();
    let _ = writeln!(
        out,
        "<polyline class=\"loss\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" points=\"{}\"/>",
        points.join(" ")
    );
    for m in &spec.markers {
        if let Some(i) = shown.iter().position(|e| e.set == m.set) {
            let x = x_of(i);
            let _ = writeln!(
                out,
                "<line class=\"marker\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"1\"/>\n<text x=\"{}\" y=\"{}\" {FONT} font-size=\"10\" text-anchor=\"middle\">{}</text>",
                num(x),
                num(top),
                num(x),
                num(top + plot_h),
                num(x),
                num(top - 4.0),
                esc(&m.label)
            );
        }
    }
    out.push_str("</g>\n");

    // Selection grid.
    out.push_str("<g class=\"grid\">\n");
    for (j, name) in spec.names.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"10\" text-anchor=\"end\">{}</text>",
            num(left - 4.0),
            num(grid_top + row_h * (j as f64 + 0.75)),
            esc(name)
        );
    }
    for (i, e) in shown.iter().enumerate() {
        let _ = writeln!(out, "<g class=\"col\" data-bits=\"{}\">", e.set.bits());
        for j in e.set.indices() {
            let prob = e.inclusion.get(j).copied().unwrap_or(0.0);
            let weak = i == 0 && prob < spec.gray_threshold;
            let (fill, class) = if weak {
                (WEAK_FILL.to_string(), " class=\"weak\"")
            } else {
                (gray_fill(prob), "")
            };
            let _ = writeln!(
                out,
                "<rect{class} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
                num(left + i as f64 * cell_w),
                num(grid_top + row_h * j as f64),
                num(cell_w),
                num(row_h)
            );
        }
        out.push_str("</g>\n");
    }
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.5\"/>",
        num(left),
        num(grid_top),
        num(grid_w),
        num(row_h * p as f64)
    );
    out.push_str("</g>\n</svg>\n");
    out
}

/// One labeled column of a column map (a sweep price or a wave).
#[derive(Debug, Clone, PartialEq)]
pub struct MapColumn {
    pub label: String,
    pub set: PredictorSet,
    pub inclusion: Vec<f64>,
}

/// Columns of selected sets with their labels along the x-axis.
pub fn render_column_map(names: &[String], columns: &[MapColumn], axis_label: &str) -> String {
    let p = names.len();
    let cell_w = 28.0;
    let row_h = 16.0;
    let left = 70.0;
    let top = 16.0;
    let width = left + cell_w * columns.len() as f64 + 20.0;
    let height = top + row_h * p as f64 + 70.0;
    let mut out = String::new();
    header(&mut out, width, height);
    for (j, name) in names.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"10\" text-anchor=\"end\">{}</text>",
            num(left - 4.0),
            num(top + row_h * (j as f64 + 0.75)),
            esc(name)
        );
    }
    for (i, c) in columns.iter().enumerate() {
        let x = left + cell_w * i as f64;
        let _ = writeln!(out, "<g class=\"col\" data-bits=\"{}\">", c.set.bits());
        for j in c.set.indices() {
            let prob = c.inclusion.get(j).copied().unwrap_or(1.0);
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                num(x),
                num(top + row_h * j as f64),
                num(cell_w),
                num(row_h),
                gray_fill(prob)
            );
        }
        let lx = x + cell_w / 2.0;
        let ly = top + row_h * p as f64 + 8.0;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-60 {} {})\">{}</text>\n</g>",
            num(lx),
            num(ly),
            num(lx),
            num(ly),
            esc(&c.label)
        );
    }
    let grid_w = cell_w * columns.len() as f64;
    for i in 0..=columns.len() {
        let x = left + cell_w * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>",
            num(x),
            num(top),
            num(x),
            num(top + row_h * p as f64)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n<text x=\"{}\" y=\"{}\" {FONT} font-size=\"11\" text-anchor=\"middle\">{}</text>\n</svg>",
        num(left),
        num(top),
        num(grid_w),
        num(row_h * p as f64),
        num(left + grid_w / 2.0),
        num(height - 6.0),
        esc(axis_label)
    );
    out
}

/// One column per grid price showing the optimum at that price.
pub fn render_cost_sweep(names: &[String], sweep: &[SweepPoint]) -> String {
    let columns: Vec<MapColumn> = sweep
        .iter()
        .map(|pt| MapColumn {
            label: format!("{}", pt.price),
            set: pt.outcome.optimum,
            inclusion: pt.outcome.inclusion.clone().unwrap_or_else(|| {
                (0..names.len())
                    .map(|j| f64::from(u8::from(pt.outcome.optimum.contains(j))))
                    .collect()
            }),
        })
        .collect();
    render_column_map(names, &columns, "price")
}

/// Least-loss set per wave.
pub fn render_wave_selections(names: &[String], waves: &[(u32, PredictorSet, Vec<f64>)]) -> String {
    let columns: Vec<MapColumn> = waves
        .iter()
        .map(|(w, set, incl)| MapColumn {
            label: w.to_string(),
            set: *set,
            inclusion: incl.clone(),
        })
        .collect();
    render_column_map(names, &columns, "wave")
}

/// One objective curve of the purchase-timing problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSeries {
    pub discount: f64,
    pub price: f64,
    pub decision: TimingDecision,
}

/// Small multiples, one panel per discount factor (in order of first
/// appearance), one curve per price, dots on minimizing waves. The last
/// x position is labeled `N` (no purchase).
pub fn render_timing_curves(series: &[TimingSeries]) -> String {
    let mut discounts: Vec<f64> = Vec::new();
    for s in series {
        if !discounts.iter().any(|d| d.to_bits() == s.discount.to_bits()) {
            discounts.push(s.discount);
        }
    }
    let panel_w = 300.0;
    let panel_h = 200.0;
    let pad = 48.0;
    let per_row = discounts.len().clamp(1, 2);
    let rows = discounts.len().div_ceil(per_row).max(1);
    let width = per_row as f64 * (panel_w + pad) + pad;
    let height = rows as f64 * (panel_h + pad) + pad;
    let mut out = String::new();
    header(&mut out, width, height);

    for (pi, &delta) in discounts.iter().enumerate() {
        let px = pad + (pi % per_row) as f64 * (panel_w + pad);
        let py = pad + (pi / per_row) as f64 * (panel_h + pad);
        let members: Vec<&TimingSeries> = series
            .iter()
            .filter(|s| s.discount.to_bits() == delta.to_bits())
            .collect();
        let positions = members.iter().map(|s| s.decision.curve.len()).max().unwrap_or(1);
        let (lo, hi) = members
            .iter()
            .flat_map(|s| s.decision.curve.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        let x_of = |t: usize| -> f64 {
            if positions > 1 {
                px + panel_w * (t - 1) as f64 / (positions - 1) as f64
            } else {
                px + panel_w / 2.0
            }
        };
        let y_of = |v: f64| -> f64 {
            if hi > lo {
                py + panel_h * (1.0 - (v - lo) / (hi - lo))
            } else {
                py + panel_h / 2.0
            }
        };
        let _ = writeln!(
            out,
            "<g class=\"panel\" data-discount=\"{delta}\">\n<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n<text x=\"{}\" y=\"{}\" {FONT} font-size=\"11\" text-anchor=\"middle\">discount {delta}</text>",
            num(px),
            num(py),
            num(panel_w),
            num(panel_h),
            num(px + panel_w / 2.0),
            num(py - 8.0)
        );
        for t in 1..=positions {
            let label = if t == positions { "N".to_string() } else { t.to_string() };
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"9\" text-anchor=\"middle\">{label}</text>",
                num(x_of(t)),
                num(py + panel_h + 12.0)
            );
        }
        for s in &members {
            let pts: Vec<String> = s
                .decision
                .curve
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{},{}", num(x_of(i + 1)), num(y_of(*v))))
                .collect();
            let _ = writeln!(
                out,
                "<polyline class=\"curve\" data-price=\"{}\" fill=\"none\" stroke=\"#8c8c8c\" stroke-width=\"1\" points=\"{}\"/>",
                s.price,
                pts.join(" ")
            );
            for &t in &s.decision.minimizers {
                let _ = writeln!(
                    out,
                    "<circle class=\"min\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#000000\"/>",
                    num(x_of(t)),
                    num(y_of(s.decision.curve[t - 1]))
                );
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
