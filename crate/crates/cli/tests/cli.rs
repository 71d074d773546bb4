use std::fs;
use std::path::{Path, PathBuf};

use netbandit_cli::config::ExperimentConfig;
use netbandit_cli::run::{cmd_run, RunOptions};
use netbandit_cli::sweep::{cmd_sweep, Axis};
use netbandit_cli::verify::cmd_verify;
use netbandit_cli::{main_with, CliError};

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn opts(out: &Path) -> RunOptions {
    RunOptions {
        out: Some(out.to_path_buf()),
        workers: 1,
        ..RunOptions::default()
    }
}

const MINIMAL: &str = r#"
schema_version = 1
horizon = 10
master_seed = 1
replications = 2

[env]
type = "stochastic"
means = [0.7, 0.4, 0.5]

[network]
topology = "single"

[agents]
policy = { kind = "fixed_arm", arm = 1 }
"#;

#[test]
fn minimal_config_regret_is_t_times_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.toml", MINIMAL);
    let out = cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let csv = fs::read_to_string(out.dir.join("trace.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",0,")).collect();
    let seed0: Vec<&str> = csv.lines().skip(1).filter(|l| l.starts_with("main,0,")).collect();
    assert_eq!(seed0.len(), 10);
    assert!(!rows.is_empty());
    let last: Vec<&str> = seed0[9].split(',').collect();
    let regret: f64 = last[6].parse().unwrap();
    assert!((regret - 10.0 * 0.3).abs() < 1e-9);
    assert!((out.summary.runs[0].mean_regret - 3.0).abs() < 1e-9);
    for f in ["trace.csv", "summary.toml", "regret.svg", "config.toml"] {
        assert!(out.dir.join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(out.dir.join("summary.toml")).unwrap();
    assert!(summary.contains("mean_regret"));
    // The copied config reproduces the run exactly.
    let copied = ExperimentConfig::load(&out.dir.join("config.toml")).unwrap();
    assert_eq!(copied.hash(), out.summary.config_hash);
}

const ADVERSARIAL: &str = r#"
schema_version = 1
horizon = 300
master_seed = 9
replications = 3

[env]
type = "adversarial"
arms = 4

[network]
topology = "complete"
nodes = 3

[agents]
policy = { kind = "expn_adaptive" }

[[variant]]
name = "exp3"
network = { topology = "single" }
agents = { policy = { kind = "exp3" } }
"#;

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "adv.toml", ADVERSARIAL);
    let a = cmd_run(&cfg, &opts(&tmp.path().join("a"))).unwrap();
    let mut parallel = opts(&tmp.path().join("b"));
    parallel.workers = 3;
    let b = cmd_run(&cfg, &parallel).unwrap();
    for f in ["trace.csv", "summary.toml", "regret.svg", "config.toml"] {
        assert_eq!(fs::read(a.dir.join(f)).unwrap(), fs::read(b.dir.join(f)).unwrap(), "{f}");
    }
    let names: Vec<&str> = a.summary.runs.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["main", "exp3"]);
    let summary = fs::read_to_string(a.dir.join("summary.toml")).unwrap();
    assert!(summary.contains("expn_adaptive_upper"));
    // Running again in place is a no-op.
    cmd_run(&cfg, &opts(&tmp.path().join("a"))).unwrap();
}

#[test]
fn refuses_to_overwrite_differing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.toml", MINIMAL);
    let out = cmd_run(&cfg, &opts(tmp.path())).unwrap();
    fs::write(out.dir.join("regret.svg"), "tampered").unwrap();
    let err = cmd_run(&cfg, &opts(tmp.path())).unwrap_err();
    assert!(matches!(err, CliError::WouldOverwrite { .. }));
    assert_eq!(err.exit_code(), 1);
    assert_eq!(fs::read_to_string(out.dir.join("regret.svg")).unwrap(), "tampered");
    let mut forced = opts(tmp.path());
    forced.force = true;
    cmd_run(&cfg, &forced).unwrap();
    assert_ne!(fs::read_to_string(out.dir.join("regret.svg")).unwrap(), "tampered");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &MINIMAL.replace("horizon = 10", "horizon = 10\nhorizont = 3"));
    assert_eq!(main_with(["netbandit", "run", "--config", bad.to_str().unwrap(), "--out", out]), 2);
    let missing_node = write_config(
        tmp.path(),
        "node.toml",
        &format!("{MINIMAL}\n[[agents.overrides]]\nnode = 4\npolicy = {{ kind = \"exp3\" }}\n"),
    );
    assert_eq!(main_with(["netbandit", "run", "--config", missing_node.to_str().unwrap(), "--out", out]), 2);
    assert_eq!(main_with(["netbandit", "run", "--config", "/nonexistent.toml"]), 2);
    assert_eq!(main_with(["netbandit", "frobnicate"]), 2);
    let good = write_config(tmp.path(), "good.toml", MINIMAL);
    let args = ["netbandit", "run", "--config", good.to_str().unwrap(), "--out", out, "--seeds", "0..3", "--workers", "1"];
    assert_eq!(main_with(args), 0);
}

#[test]
fn sweep_with_one_value_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "adv.toml", ADVERSARIAL);
    let run = cmd_run(&cfg, &opts(&tmp.path().join("run"))).unwrap();
    let (dir, points) = cmd_sweep(&cfg, Axis::T, &[300], &opts(&tmp.path().join("sweep"))).unwrap();
    assert_eq!(points.len(), 2);
    for f in ["trace.csv", "summary.toml", "regret.svg"] {
        assert_eq!(fs::read(run.dir.join(f)).unwrap(), fs::read(points[0].dir.join(f)).unwrap());
    }
    assert!(dir.join("sweep.csv").exists() && dir.join("ratio.svg").exists());
    // A lone EXP3 node is its own baseline.
    assert!((points[1].ratio - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_over_k_gives_a_point_per_value_and_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ADVERSARIAL.replace("[[variant]]\nname = \"exp3\"\nnetwork = { topology = \"single\" }\nagents = { policy = { kind = \"exp3\" } }", "[[variant]]\nname = \"exp3g\"\nagents = { policy = { kind = \"exp3g\" } }");
    let cfg = write_config(tmp.path(), "k.toml", &text);
    let (dir, points) = cmd_sweep(&cfg, Axis::K, &[10, 50], &opts(tmp.path())).unwrap();
    assert_eq!(points.len(), 4);
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(points.iter().all(|p| p.ratio.is_finite() && p.ratio > 0.0));
}

#[test]
fn more_neighbors_never_raise_the_ucbn_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
horizon = 20000
master_seed = 5
replications = 10
checkpoint = "geometric"

[env]
type = "stochastic"
means = [0.7, 0.5, 0.5, 0.5, 0.5]

[network]
topology = "complete"
nodes = 2

[agents]
policy = { kind = "ucbn" }
"#;
    let cfg = write_config(tmp.path(), "b.toml", text);
    let (_, points) = cmd_sweep(&cfg, Axis::N, &[2, 3, 4, 6], &opts(tmp.path())).unwrap();
    let ratios: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    for w in ratios.windows(2) {
        assert!(w[1] <= w[0], "{ratios:?}");
    }
    assert!(ratios[0] < 1.0, "{ratios:?}");
}

#[test]
fn sweep_rejects_axis_it_cannot_vary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.toml", MINIMAL);
    let err = cmd_sweep(&cfg, Axis::N, &[3], &opts(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = cmd_sweep(&cfg, Axis::K, &[3], &opts(tmp.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn verify_passes_and_negative_control_fails() {
    let outcomes = cmd_verify(300, 11, false).unwrap();
    assert_eq!(outcomes.len(), 4);
    assert!(outcomes.iter().all(|o| o.checked == 300));
    let err = cmd_verify(50, 11, true).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("p="), "{err}");
    assert_eq!(main_with(["netbandit", "verify", "--samples", "20", "--negate-estimator"]), 1);
}

#[test]
fn plot_from_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "adv.toml", ADVERSARIAL);
    let run = cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let csv = run.dir.join("trace.csv");
    let svg = tmp.path().join("plot.svg");
    let code = main_with([
        "netbandit",
        "plot",
        csv.to_str().unwrap(),
        "--output",
        svg.to_str().unwrap(),
        "--log-x",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains(">main</text>") && text.contains(">exp3</text>"));
    assert!(!text.contains("NaN"));

    let bogus = write_config(tmp.path(), "bogus.csv", "run,seed,t\nx,0,1\n");
    let code = main_with(["netbandit", "plot", bogus.to_str().unwrap(), "-o", svg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg, ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), "{}", path.display());
        cfg.runs().unwrap();
        seen += 1;
    }
    assert!(seen >= 3);
}
