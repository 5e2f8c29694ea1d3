mod common;

use ecoselect::econ::SweepPoint;
use ecoselect::report::json::{from_json, to_json};
use ecoselect::report::{
    render_cost_sweep, render_selection_map, render_timing_curves, ResultsDocument, SelectionMapSpec, TimingSeries,
};
use ecoselect::{
    analyze, cost_sweep, make_folds, optimal_purchase_wave, optimal_set, rank_sets, Analysis, CostFamily, CostModel,
    CvSettings, PredictorSet, TimedPurchaseProblem,
};

fn analysis(p: usize, seed: u64) -> Analysis {
    let d = common::random_dataset(60, p, seed);
    let plan = make_folds(60, 10, seed).unwrap();
    analyze(&d, &plan, &CvSettings::default()).unwrap()
}

fn parse(svg: &str) -> roxmltree::Document<'_> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert!(root.attribute("width").is_some() && root.attribute("height").is_some());
    doc
}

fn columns<'a>(doc: &'a roxmltree::Document<'a>) -> Vec<roxmltree::Node<'a, 'a>> {
    doc.descendants()
        .filter(|n| n.tag_name().name() == "g" && n.attribute("class") == Some("col"))
        .collect()
}

#[test]
fn selection_map_columns_and_markers() {
    let a = analysis(8, 1);
    let spec = SelectionMapSpec::from_analysis(&a, None, 0.7);
    let svg = render_selection_map(&spec);
    let doc = parse(&svg);
    let cols = columns(&doc);
    assert_eq!(cols.len(), 256);
    let ranked = rank_sets(&a.table);
    for (node, (set, _)) in cols.iter().zip(&ranked) {
        assert_eq!(node.attribute("data-bits").unwrap(), set.bits().to_string());
        let cells = node.children().filter(|c| c.tag_name().name() == "rect").count();
        assert_eq!(cells, set.len());
    }
    // N and F sit at the ranks of the empty and full sets.
    let markers: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("marker"))
        .collect();
    assert_eq!(markers.len(), 2);
    let rank_of = |bits: u32| ranked.iter().position(|(s, _)| s.bits() == bits).unwrap();
    let x_n: f64 = markers[0].attribute("x1").unwrap().parse().unwrap();
    let x_f: f64 = markers[1].attribute("x1").unwrap().parse().unwrap();
    assert_eq!(x_n < x_f, rank_of(0) < rank_of(255));
}

#[test]
fn top_k_truncates() {
    let a = analysis(8, 2);
    let spec = SelectionMapSpec::from_analysis(&a, Some(128), 0.7);
    let doc_text = render_selection_map(&spec);
    let doc = parse(&doc_text);
    assert_eq!(columns(&doc).len(), 128);
}

#[test]
fn rendering_is_pure() {
    let a = analysis(5, 3);
    let spec = SelectionMapSpec::from_analysis(&a, Some(16), 0.7);
    assert_eq!(render_selection_map(&spec), render_selection_map(&spec.clone()));
}

#[test]
fn weak_cells_only_in_best_column() {
    let a = analysis(6, 4);
    let spec = SelectionMapSpec::from_analysis(&a, None, 0.7);
    let best = &spec.entries[0];
    let expected = best.set.indices().filter(|&j| best.inclusion[j] < 0.7).count();
    let svg = render_selection_map(&spec);
    let doc = parse(&svg);
    let cols = columns(&doc);
    let weak_in = |n: &roxmltree::Node| n.children().filter(|c| c.attribute("class") == Some("weak")).count();
    assert_eq!(weak_in(&cols[0]), expected);
    assert!(cols[1..].iter().all(|c| weak_in(c) == 0));
}

#[test]
fn sweep_map_fills_shrink() {
    let a = analysis(6, 5);
    let grid: Vec<f64> = (0..12).map(|i| 0.01 * i as f64).collect();
    let sweep: Vec<SweepPoint> = cost_sweep(&a.table, &CostFamily::Uniform, &grid)
        .unwrap()
        .into_iter()
        .map(|mut s| {
            s.outcome = s.outcome.with_inclusion(&a.inclusion);
            s
        })
        .collect();
    let svg = render_cost_sweep(&a.table.names, &sweep);
    let doc = parse(&svg);
    let fills: Vec<usize> = columns(&doc)
        .iter()
        .map(|c| c.children().filter(|r| r.tag_name().name() == "rect").count())
        .collect();
    assert_eq!(fills.len(), grid.len());
    assert!(fills.windows(2).all(|w| w[0] >= w[1]), "{fills:?}");
}

#[test]
fn timing_panels_and_dots() {
    let flat = TimedPurchaseProblem::new(vec![1.0; 4], vec![1.0; 4], 0.0, 0.0).unwrap();
    let mut series = vec![TimingSeries {
        discount: 0.0,
        price: 0.0,
        decision: optimal_purchase_wave(&flat).unwrap(),
    }];
    for (delta, price) in [(0.0, 0.5), (0.2, 0.0), (0.2, 0.5)] {
        let prob = TimedPurchaseProblem::new(vec![1.0, 0.9, 0.8, 0.7], vec![0.5; 4], delta, price).unwrap();
        series.push(TimingSeries {
            discount: delta,
            price,
            decision: optimal_purchase_wave(&prob).unwrap(),
        });
    }
    let svg = render_timing_curves(&series);
    let doc = parse(&svg);
    let panels: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .collect();
    assert_eq!(panels.len(), 2);
    // A flat curve marks every position, including no purchase.
    let first_curve_dots = series[0].decision.minimizers.len();
    assert_eq!(first_curve_dots, 5);
    let labels: Vec<&str> = panels[0].descendants().filter_map(|n| n.text()).collect();
    assert!(labels.contains(&"N"));
    let dots = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("min"))
        .count();
    let expected: usize = series.iter().map(|s| s.decision.minimizers.len()).sum();
    assert_eq!(dots, expected);
}

#[test]
fn results_round_trip_bit_exact() {
    let a = analysis(5, 6);
    let outcome = optimal_set(&a.table, &CostModel::Uniform { price: 0.013 })
        .unwrap()
        .with_inclusion(&a.inclusion);
    let doc = ResultsDocument::from_outcome(&outcome, &a.table.names, Some(&a.inclusion));
    let text = to_json(&doc).unwrap();
    let back: ResultsDocument = from_json(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(to_json(&back).unwrap(), text);
    let ranked = rank_sets(&a.table);
    for (rec, (set, loss)) in back.sets.iter().zip(&ranked) {
        assert_eq!(rec.bits, set.bits());
        assert_eq!(rec.loss.0.to_bits(), loss.to_bits());
    }
    assert_eq!(back.optimum.unwrap().bits, outcome.optimum.bits());
    let full = PredictorSet::full(5).unwrap();
    assert!(back
        .sets
        .iter()
        .any(|r| r.bits == full.bits() && r.inclusion.0.len() == 5));
}
