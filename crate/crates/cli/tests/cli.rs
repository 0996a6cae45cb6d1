use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use asyncgl::gate::GateKind;
use asyncgl::glider::GliderDemoConfig;
use asyncgl::percolation::PercolationConfig;
use asyncgl::phase::SweepConfig;
use asyncgl_cli::config::{ConfigFile, DecayExperiment, GateExperiment, GliderExperiment};
use asyncgl_cli::{run_experiment, CliError, ExperimentConfig, RunManifest};
use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_asyncgl");

fn tiny_sweep() -> ExperimentConfig {
    ExperimentConfig::SweepPhase(SweepConfig {
        grid_side: 50,
        p_values: vec![0.05, 0.3],
        trials_per_p: 2,
        ..SweepConfig::default()
    })
}

fn tiny_configs() -> Vec<ExperimentConfig> {
    let mut decay = DecayExperiment::default();
    decay.decay.grid_side = 32;
    decay.decay.trials = 2;
    decay.decay.steps = 200;
    decay.fit_window = [10.0, 200.0];
    let mut gliders = GliderExperiment::default();
    gliders.occurrence.grid_side = 32;
    gliders.occurrence.trials = 2;
    gliders.occurrence.window_steps = 20;
    gliders.occurrence.p_values = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    gliders.export_detections = true;
    let mut gate = GateExperiment::published(GateKind::Or);
    gate.grid_side = 30;
    gate.horizon = 150;
    gate.trials = 3;
    vec![
        tiny_sweep(),
        ExperimentConfig::Decay(decay),
        ExperimentConfig::Gliders(gliders),
        ExperimentConfig::Gate(gate),
        ExperimentConfig::Percolate(PercolationConfig {
            side: 40,
            trials: 10,
            ..PercolationConfig::default()
        }),
        ExperimentConfig::GliderDemo(GliderDemoConfig {
            side: 30,
            steps: 300,
            ..GliderDemoConfig::default()
        }),
    ]
}

fn read_outputs(dir: &Path, manifest: &RunManifest) -> BTreeMap<String, Vec<u8>> {
    manifest
        .outputs
        .iter()
        .map(|f| (f.clone(), fs::read(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn minimal_sweep_writes_manifest_and_two_rows() {
    let dir = tempdir().unwrap();
    let manifest = run_experiment(&tiny_sweep(), 7, dir.path(), None).unwrap();
    assert!(dir.path().join("manifest.json").exists());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,trials,frozen_count,frozen_probability");
    assert_eq!(lines.len(), 3);
    assert_eq!(manifest.experiment, "sweep-phase");
    assert_eq!(manifest.master_seed, 7);
    assert!(manifest.outputs.contains(&"sweep.csv".to_string()));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let ma = run_experiment(&tiny_sweep(), 3, a.path(), None).unwrap();
    let mb = run_experiment(&tiny_sweep(), 3, b.path(), None).unwrap();
    assert_eq!(read_outputs(a.path(), &ma), read_outputs(b.path(), &mb));
}

#[test]
fn manifest_round_trip_reproduces_every_output() {
    for config in tiny_configs() {
        let first = tempdir().unwrap();
        let m1 = run_experiment(&config, 11, first.path(), None).unwrap();
        let parsed = RunManifest::load(&first.path().join("manifest.json")).unwrap();
        assert_eq!(parsed.config, m1.config);
        let second = tempdir().unwrap();
        let m2 = run_experiment(&parsed.config, parsed.master_seed, second.path(), None).unwrap();
        assert_eq!(m1.outputs, m2.outputs, "{}", config.name());
        assert_eq!(
            read_outputs(first.path(), &m1),
            read_outputs(second.path(), &m2),
            "{}",
            config.name()
        );
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    for config in tiny_configs() {
        let one = tempdir().unwrap();
        let three = tempdir().unwrap();
        let m1 = run_experiment(&config, 5, one.path(), Some(1)).unwrap();
        let m3 = run_experiment(&config, 5, three.path(), Some(3)).unwrap();
        assert_eq!(
            read_outputs(one.path(), &m1),
            read_outputs(three.path(), &m3),
            "{}",
            config.name()
        );
    }
}

#[test]
fn csv_outputs_match_headers_and_are_finite() {
    let headers = [
        ("sweep.csv", "p,trials,frozen_count,frozen_probability"),
        ("decay.csv", "step,mean_density,trials"),
        ("occurrence.csv", "p,total_detections,trials,window_steps,grid_side,rate"),
        ("detections_p00.csv", "step,template_id,row,col"),
        ("trials.csv", "gate,input_a,input_b,trial,cover,output"),
        ("histograms.csv", "gate,pair,bin,frequency,bin_width"),
        ("percolation.csv", "porosity,trials,success_count,success_rate"),
        ("live_count.csv", "step,live_count"),
    ];
    let mut seen = 0;
    for config in tiny_configs() {
        let dir = tempdir().unwrap();
        let manifest = run_experiment(&config, 2, dir.path(), None).unwrap();
        for file in manifest.outputs.iter().filter(|f| f.ends_with(".csv")) {
            let text = fs::read_to_string(dir.path().join(file)).unwrap();
            let mut lines = text.lines();
            let header = lines.next().unwrap();
            if let Some((_, expected)) = headers.iter().find(|(name, _)| name == file) {
                assert_eq!(header, *expected);
                seen += 1;
            }
            let width = header.split(',').count();
            for line in lines {
                let fields: Vec<&str> = line.split(',').collect();
                assert_eq!(fields.len(), width, "{file}: {line}");
                for field in fields {
                    if field == "and" || field == "or" {
                        continue;
                    }
                    let v: f64 = field.parse().unwrap_or_else(|_| panic!("{file}: {field}"));
                    assert!(v.is_finite());
                }
            }
        }
    }
    assert_eq!(seen, headers.len());
}

#[test]
fn gate_threshold_out_of_range_names_p1() {
    let mut gate = GateExperiment::published(GateKind::And);
    gate.p1 = 1.5;
    let dir = tempdir().unwrap();
    let err = run_experiment(&ExperimentConfig::Gate(gate), 1, dir.path(), None).unwrap_err();
    match &err {
        CliError::Validation { path, .. } => assert_eq!(path, "gate.p1"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(err.exit_code(), 2);
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn fit_reports_use_parameter_names() {
    let dir = tempdir().unwrap();
    let configs = tiny_configs();
    run_experiment(&configs[1], 4, dir.path(), None).unwrap();
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("power_law_fit.json")).unwrap()).unwrap();
    for key in ["a", "b", "c", "residual", "window"] {
        assert!(fit.get(key).is_some(), "{key}");
    }
    let gate = tempdir().unwrap();
    run_experiment(&configs[3], 4, gate.path(), None).unwrap();
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(gate.path().join("truth_table.json")).unwrap()).unwrap();
    for pair in ["00", "01", "10", "11"] {
        let row = &table["pairs"][pair];
        assert_eq!(row["trials"], 3);
        assert!(row["ones"].is_u64());
        assert!(row["probability_of_one"].is_f64());
    }
    let perc = tempdir().unwrap();
    run_experiment(&configs[4], 4, perc.path(), None).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(perc.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.get("estimated_threshold").is_some());
}

#[test]
fn gate_snapshots_follow_default_cadence() {
    let mut gate = GateExperiment::published(GateKind::And);
    gate.grid_side = 24;
    gate.horizon = 1500;
    gate.trials = 1;
    let dir = tempdir().unwrap();
    let manifest = run_experiment(&ExperimentConfig::Gate(gate), 1, dir.path(), None).unwrap();
    let snaps: Vec<&String> = manifest.outputs.iter().filter(|f| f.starts_with("snapshot_11_")).collect();
    assert_eq!(
        snaps,
        ["t0000", "t0100", "t0500", "t1000", "t1500"]
            .iter()
            .map(|t| format!("snapshot_11_{t}.svg"))
            .collect::<Vec<_>>()
            .iter()
            .collect::<Vec<_>>()
    );
}

#[test]
fn glider_demo_is_quiet_before_onset() {
    let dir = tempdir().unwrap();
    let config = ExperimentConfig::GliderDemo(GliderDemoConfig {
        side: 40,
        steps: 2000,
        ..GliderDemoConfig::default()
    });
    run_experiment(&config, 1, dir.path(), None).unwrap();
    let text = fs::read_to_string(dir.path().join("live_count.csv")).unwrap();
    let counts: Vec<usize> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 2001);
    assert!(counts[..=200].iter().all(|&n| n == 5));
}

#[test]
fn config_file_tables_and_defaults() {
    let file = ConfigFile::parse(
        r#"
[decay]
grid_side = 64
fit_window = [10.0, 500.0]

[gate]
kind = "or"
trials = 7

[percolate]
side = 100
"#,
    )
    .unwrap();
    let decay = file.decay.unwrap();
    assert_eq!(decay.decay.grid_side, 64);
    assert_eq!(decay.decay.p_hold, 0.13);
    assert_eq!(decay.decay.init_density, 0.59);
    assert_eq!(decay.fit_window, [10.0, 500.0]);
    let gate = file.gate.unwrap();
    assert_eq!(gate.trials, 7);
    assert_eq!(gate.gate_config().p_noise, 1e-3);
    assert_eq!(file.percolate.unwrap().trials, 200);
    assert!(file.sweep_phase.is_none());

    assert!(matches!(
        ConfigFile::parse("[nonsense]\nx = 1\n"),
        Err(CliError::Validation { .. })
    ));
    assert!(matches!(
        ConfigFile::parse("[gate]\np2 = 0.3\n"),
        Err(CliError::Validation { .. })
    ));
}

#[test]
fn published_defaults() {
    let and = GateExperiment::published(GateKind::And).gate_config();
    let or = GateExperiment::published(GateKind::Or).gate_config();
    assert_eq!((and.grid_side, and.horizon, and.threshold, and.p_hold), (100, 1500, 0.1, 0.13));
    assert_eq!(and.p_noise, 1e-4);
    assert_eq!(or.p_noise, 10.0 * and.p_noise);
    let decay = DecayExperiment::default();
    assert_eq!(decay.fit_window, [1e2, 1e4]);
    assert_eq!(GliderExperiment::default().degree, 4);
    assert_eq!(GliderDemoConfig::default().noise_onset, 200);
}

fn run_bin(args: &[&str], out_env: Option<&Path>) -> (i32, String, String) {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("ASYNCGL_OUT");
    if let Some(dir) = out_env {
        cmd.env("ASYNCGL_OUT", dir);
    }
    let output = cmd.output().unwrap();
    (
        output.status.code().unwrap(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

#[test]
fn binary_exit_codes() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("ok");
    let (code, stdout, _) = run_bin(
        &["percolate", "--side", "20", "--trials", "5", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("percolation.csv"));

    let (code, _, stderr) = run_bin(&["gate", "--p1", "1.5", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(stderr.contains("gate.p1"));

    let (code, _, _) = run_bin(&["gate", "--no-such-flag"], None);
    assert_eq!(code, 2);

    // A regular file where the output directory should go.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let (code, _, _) = run_bin(
        &["percolate", "--side", "20", "--trials", "2", "--out", blocker.join("sub").to_str().unwrap()],
        None,
    );
    assert_eq!(code, 1);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempdir().unwrap();
    let (code, _, _) = run_bin(&["glider-demo", "--side", "20", "--steps", "10"], Some(dir.path()));
    assert_eq!(code, 0);
    assert!(dir.path().join("live_count.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn rerun_from_manifest_via_binary() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let (code, _, _) = run_bin(
        &["--seed", "99", "sweep-phase", "--side", "30", "--p-values", "0.05,0.4", "--trials", "2", "--out", first.to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0);
    let manifest = first.join("manifest.json");
    let (code, _, _) = run_bin(
        &["sweep-phase", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0);
    assert_eq!(fs::read(first.join("sweep.csv")).unwrap(), fs::read(second.join("sweep.csv")).unwrap());
    let m2 = RunManifest::load(&second.join("manifest.json")).unwrap();
    assert_eq!(m2.master_seed, 99);

    let (code, _, stderr) = run_bin(&["decay", "--config", manifest.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(stderr.contains("sweep-phase"));
}

#[test]
fn toml_config_via_binary() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "[percolate]\nside = 16\ntrials = 4\nporosities = [0.5, 0.9]\n").unwrap();
    let out = dir.path().join("o");
    let (code, _, _) = run_bin(
        &["percolate", "--config", cfg.to_str().unwrap(), "--trials", "6", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("percolation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("0.5,6,"));
}

#[test]
fn render_subcommand() {
    let dir = tempdir().unwrap();
    let pattern = dir.path().join("one.txt");
    fs::write(&pattern, "3 3\n000\n010\n000\n").unwrap();
    let out = dir.path().join("svg");
    let (code, _, _) = run_bin(&["render", pattern.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0);
    let svg = fs::read_to_string(out.join("one.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="cell""#).count(), 1);

    let soup = dir.path().join("soup.txt");
    let rows: Vec<String> = (0..12).map(|_| "0".repeat(12)).collect();
    fs::write(&soup, rows.join("\n")).unwrap();
    let placements = dir.path().join("p.csv");
    fs::write(&placements, "step,template_id,row,col\n4,0,1,1\n4,3,6,6\n5,2,0,0\n").unwrap();
    let target = dir.path().join("overlay.svg");
    let (code, _, _) = run_bin(
        &[
            "render",
            soup.to_str().unwrap(),
            "--placements",
            placements.to_str().unwrap(),
            "--step",
            "4",
            "--output",
            target.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&target).unwrap().matches(r#"class="outline""#).count(), 2);

    let curve = dir.path().join("decay.csv");
    let mut text = String::from("step,mean_density,trials\n");
    for t in 1..=100 {
        text.push_str(&format!("{t},{},1\n", 0.5 * (t as f64).powf(-0.16)));
    }
    fs::write(&curve, text).unwrap();
    let target = dir.path().join("decay.svg");
    let (code, _, _) = run_bin(
        &["render", curve.to_str().unwrap(), "--log-x", "--log-y", "--output", target.to_str().unwrap()],
        None,
    );
    assert_eq!(code, 0);
    let svg = fs::read_to_string(&target).unwrap();
    let poly = svg.split("<polyline").nth(1).unwrap();
    let points = poly.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(points.split_whitespace().count(), 100);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "x,y\n").unwrap();
    let (code, _, _) = run_bin(&["render", empty.to_str().unwrap(), "--output", target.to_str().unwrap()], None);
    assert_eq!(code, 2);
}
