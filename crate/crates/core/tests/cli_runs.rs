use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecoselect::report::json::{from_json, SweepDocument, TimingDocument};
use ecoselect::report::ResultsDocument;

fn write_panel(dir: &Path) -> PathBuf {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut text = String::from("wave,y,x1,x2,x3,x4\n");
    for w in 1..=5 {
        for _ in 0..40 {
            let x: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            let e: f64 = StandardNormal.sample(&mut rng);
            let y = 2.0 + x[0] + 0.3 * w as f64 * x[3] + e;
            text.push_str(&format!("{w},{y},{},{},{},{}\n", x[0], x[1], x[2], x[3]));
        }
    }
    let path = dir.join("panel.csv");
    std::fs::write(&path, text).unwrap();
    path
}

const BASE: &str = r#"
[data]
path = "panel.csv"
response = "y"
predictors = ["x1", "x2", "x3", "x4"]
wave = "wave"

[sweep]
grid = [0.0, 0.01, 0.05, 0.2, 1.0]

[timed]
target = "x4"
deltas = [0.0, 0.5]
prices = [0.0, 1000.0]

[check]
quadrature_seeds = 5
prop1_seeds = 5
"#;

fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_panel(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("{BASE}{extra}")).unwrap();
    (dir, cfg)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecoselect"))
        .args(args)
        .output()
        .unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn analyze_writes_contract_files_deterministically() {
    let (dir, cfg) = setup("");
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run(&[
        "analyze",
        "--config",
        cfg,
        "--out",
        a.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out2 = run(&["analyze", cfg, "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(out2.status.success());
    assert_eq!(out.stdout, out2.stdout);
    for f in ["selection_map.svg", "selection_map_top128.svg", "results.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs");
    }
    // With zero cost the printed optimum is the rank-1 set.
    let doc: ResultsDocument = from_json(&String::from_utf8(read(&a.join("results.json"))).unwrap()).unwrap();
    let first = &doc.sets[0];
    assert_eq!(doc.optimum.as_ref().unwrap().bits, first.bits);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with(&format!("optimum ({})", first.members.join(", "))),
        "{stdout}"
    );
}

#[test]
fn overrides_change_the_fold_seed() {
    let (dir, cfg) = setup("");
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["analyze", "--config", cfg, "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(run(&[
        "analyze",
        "--config",
        cfg,
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "77",
        "--folds",
        "5"
    ])
    .status
    .success());
    assert_ne!(read(&a.join("results.json")), read(&b.join("results.json")));
}

#[test]
fn sweep_and_timed_outputs() {
    let (dir, cfg) = setup("");
    let cfg = cfg.to_str().unwrap();
    let out = run(&["sweep", "--config", cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep: SweepDocument =
        from_json(&String::from_utf8(read(&dir.path().join("out/sweep.json"))).unwrap()).unwrap();
    assert_eq!(sweep.points.len(), 5);
    roxmltree::Document::parse(&String::from_utf8(read(&dir.path().join("out/cost_sweep.svg"))).unwrap()).unwrap();

    let out = run(&["timed", "--config", cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(read(&dir.path().join("out/timing.json"))).unwrap();
    let timing: TimingDocument = from_json(&text).unwrap();
    assert_eq!(timing.waves.len(), 5);
    assert_eq!(timing.decisions.len(), 4);
    assert!(text.contains("\"no_purchase\""));
    for f in ["timing_curves.svg", "wave_selections.svg"] {
        roxmltree::Document::parse(&String::from_utf8(read(&dir.path().join("out").join(f))).unwrap()).unwrap();
    }
}

#[test]
fn check_passes_on_small_grid() {
    let (_dir, cfg) = setup("");
    let out = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("null augmentation"));
}

fn error_line(out: &Output) -> String {
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(err.lines().count(), 1, "{err}");
    err
}

#[test]
fn error_classes_and_exit_codes() {
    let (dir, cfg) = setup("");
    let text = std::fs::read_to_string(&cfg).unwrap();

    let missing = dir.path().join("missing.toml");
    std::fs::write(&missing, text.replace("panel.csv", "nowhere.csv")).unwrap();
    let out = run(&["analyze", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_line(&out).starts_with("error[E_DATA]"));

    let desc = dir.path().join("desc.toml");
    std::fs::write(&desc, text.replace("[0.0, 0.01, 0.05, 0.2, 1.0]", "[1.0, 0.5]")).unwrap();
    let out = run(&["sweep", "--config", desc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error[E_CONFIG]"));

    let nowave = dir.path().join("nowave.toml");
    std::fs::write(&nowave, text.replace("wave = \"wave\"\n", "")).unwrap();
    let out = run(&["timed", "--config", nowave.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error[E_CONFIG]"));

    let badwave = dir.path().join("badwave.toml");
    std::fs::write(&badwave, text.replace("wave = \"wave\"", "wave = \"period\"")).unwrap();
    let out = run(&["timed", "--config", badwave.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let small = dir.path().join("small.toml");
    std::fs::write(&small, format!("{text}prop1_n = 7\n")).unwrap();
    let out = run(&["check", "--config", small.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out).starts_with("error[E_CONFIG]"));

    let out = run(&["analyze", "--config", cfg.to_str().unwrap(), "--folds", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
