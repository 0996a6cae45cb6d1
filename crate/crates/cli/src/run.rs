//! Experiment dispatch and output emission.

use std::fs;
use std::path::{Path, PathBuf};

use asyncgl::gate::{self, CoverHistogram, InputPair, TrialRecord};
use asyncgl::glider::{self, GliderDemoConfig};
use asyncgl::percolation::{self, PercolationConfig};
use asyncgl::phase::{self, SweepConfig};
use asyncgl::render::{self, ChartStyle, GridStyle, Outline, Series, SeriesStyle};
use chrono::{SecondsFormat, Utc};
use serde_json::json;

use crate::config::{DecayExperiment, ExperimentConfig, GateExperiment, GliderExperiment};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_FILE};

const DATA_COLOR: &str = "#1f4e79";
const FIT_COLOR: &str = "#c0392b";

/// Files written into one output directory, in creation order.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    notes: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            notes: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        let write = || -> Result<Vec<u8>, Box<dyn std::error::Error>> {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            Ok(w.into_inner()?)
        };
        let bytes = write().map_err(|e| CliError::Runtime(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json value serialises");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn svg(&mut self, name: &str, doc: asyncgl::Result<String>) -> CliResult<()> {
        match doc {
            Ok(doc) => self.write(name, doc.as_bytes()),
            Err(e) => {
                self.notes.push(format!("{name} not rendered: {e}"));
                Ok(())
            }
        }
    }
}

fn num<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

fn chart(title: &str, x: &str, y: &str, log: bool) -> ChartStyle {
    ChartStyle {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_x: log,
        log_y: log,
        ..ChartStyle::default()
    }
}

/// Evenly spaced abscissae for drawing a fitted curve.
fn linspace(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            if log {
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            } else {
                lo + u * (hi - lo)
            }
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::validation("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Validates `config`, runs it, writes every output plus `manifest.json` into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    master_seed: u64,
    out_dir: &Path,
    threads: Option<usize>,
) -> CliResult<RunManifest> {
    let config = config.clone().resolved();
    config.validate()?;
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut out = Outputs::new(out_dir)?;
    let scope = config.name();
    let result = with_threads(threads, || match &config {
        ExperimentConfig::SweepPhase(c) => sweep_phase(c, master_seed, &mut out),
        ExperimentConfig::Decay(c) => decay(c, master_seed, &mut out),
        ExperimentConfig::Gliders(c) => gliders(c, master_seed, &mut out),
        ExperimentConfig::Gate(c) => gate(c, master_seed, &mut out),
        ExperimentConfig::Percolate(c) => percolate(c, master_seed, &mut out),
        ExperimentConfig::GliderDemo(c) => glider_demo(c, master_seed, &mut out),
    })?;
    result.map_err(|e| match e {
        Scoped::Core(e) => CliError::from_core(scope, e),
        Scoped::Cli(e) => e,
    })?;
    let mut notes = design_notes(&config);
    notes.append(&mut out.notes);
    let manifest = RunManifest {
        experiment: scope.to_string(),
        rule: config.rule(),
        boundary: config.boundary(),
        config,
        master_seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        started_at,
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        outputs: out.files.clone(),
        notes,
    };
    let path = out.dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

/// Conventions the outputs depend on, recorded alongside the parameters.
fn design_notes(config: &ExperimentConfig) -> Vec<String> {
    let step = "one step = per-cell hold-or-update, then independent noise inversion".to_string();
    match config {
        ExperimentConfig::SweepPhase(_) => vec![
            step,
            "frozen = configuration on a synchronous cycle of length <= 2, tested every check_interval steps".into(),
        ],
        ExperimentConfig::Decay(_) => vec![step, "density row 0 is the initial soup".into()],
        ExperimentConfig::Gliders(_) => vec![
            step,
            "a detection is an exact 3x3 glider phase with a dead margin ring, after every step".into(),
        ],
        ExperimentConfig::Gate(_) => vec![
            step,
            "regions: A = [1, floor(N/3)]^2, B = [ceil(2N/3), N]^2, C = [floor(N/3)+1, ceil(2N/3)-1]^2".into(),
            "output = 1 when cover > p1 * |C|".into(),
        ],
        ExperimentConfig::Percolate(_) => vec![
            "directed site percolation, descendants (i+1, j) and (i+1, j+1), top row wet where porous".into(),
            "threshold = midpoint of a logistic fit to the success rates".into(),
        ],
        ExperimentConfig::GliderDemo(_) => vec![step, "synchronous update (p_hold = 0), ConwayB3S23".into()],
    }
}

enum Scoped {
    Core(asyncgl::Error),
    Cli(CliError),
}

impl From<asyncgl::Error> for Scoped {
    fn from(e: asyncgl::Error) -> Self {
        Scoped::Core(e)
    }
}

impl From<CliError> for Scoped {
    fn from(e: CliError) -> Self {
        Scoped::Cli(e)
    }
}

type Step = Result<(), Scoped>;

fn fit_json<T: serde::Serialize>(out: &mut Outputs, name: &str, fit: &asyncgl::Result<T>) -> CliResult<()> {
    let value = match fit {
        Ok(f) => serde_json::to_value(f).expect("fit serialises"),
        Err(e) => {
            out.notes.push(format!("{name}: fit failed: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    out.json(name, &value)
}

fn sweep_phase(c: &SweepConfig, seed: u64, out: &mut Outputs) -> Step {
    let points = phase::sweep_frozen_probability(c, seed)?;
    out.csv(
        "sweep.csv",
        &["p", "trials", "frozen_count", "frozen_probability"],
        points
            .iter()
            .map(|p| vec![num(p.p), num(p.trials), num(p.frozen_count), num(p.frozen_probability)]),
    )?;
    let fit = phase::fit_sweep(&points);
    fit_json(out, "sigmoid_fit.json", &fit)?;
    let mut series = vec![Series::new(
        "frozen probability",
        points.iter().map(|p| (p.p, p.frozen_probability)).collect(),
        DATA_COLOR,
        SeriesStyle::Markers,
    )];
    if let (Ok(f), Some(first), Some(last)) = (&fit, points.first(), points.last()) {
        let xs = linspace(first.p, last.p, 200, false);
        series.push(Series::new(
            "sigmoid fit",
            xs.into_iter().map(|x| (x, f.eval(x))).collect(),
            FIT_COLOR,
            SeriesStyle::Line,
        ));
    }
    out.svg(
        "sweep.svg",
        render::render_chart(&series, &chart("Frozen probability", "p", "P(frozen)", false)),
    )?;
    Ok(())
}

fn decay(c: &DecayExperiment, seed: u64, out: &mut Outputs) -> Step {
    let curve = phase::measure_density_decay(&c.decay, seed)?;
    let trials = c.decay.trials;
    out.csv(
        "decay.csv",
        &["step", "mean_density", "trials"],
        curve.iter().map(|&(t, d)| vec![num(t), num(d), num(trials)]),
    )?;
    let fit = phase::fit_decay(&curve, c.fit_window);
    fit_json(out, "power_law_fit.json", &fit)?;
    let mut series = vec![Series::new(
        "mean density",
        curve.iter().filter(|&&(t, d)| t > 0 && d > 0.0).map(|&(t, d)| (t as f64, d)).collect(),
        DATA_COLOR,
        SeriesStyle::Line,
    )];
    if let Ok(f) = &fit {
        let xs = linspace(f.window[0], f.window[1], 200, true);
        series.push(Series::new(
            "power-law fit",
            xs.into_iter().map(|x| (x, f.a * (x - f.b).powf(f.c))).collect(),
            FIT_COLOR,
            SeriesStyle::Line,
        ));
    }
    out.svg(
        "decay.svg",
        render::render_chart(&series, &chart("Density decay", "step", "density", true)),
    )?;
    Ok(())
}

fn gliders(c: &GliderExperiment, seed: u64, out: &mut Outputs) -> Step {
    let cfg = &c.occurrence;
    let curve = glider::occurrence_sweep(cfg, seed)?;
    out.csv(
        "occurrence.csv",
        &["p", "total_detections", "trials", "window_steps", "grid_side", "rate"],
        curve.points.iter().map(|p| {
            vec![
                num(p.p),
                num(p.total_detections),
                num(curve.trials),
                num(curve.window_steps),
                num(curve.grid_side),
                num(p.rate),
            ]
        }),
    )?;
    let fit = glider::fit_occurrence(&curve, c.degree);
    fit_json(out, "polynomial_fit.json", &fit)?;
    let mut series = vec![Series::new(
        "glider rate",
        curve.points.iter().map(|p| (p.p, p.rate)).collect(),
        DATA_COLOR,
        SeriesStyle::LineAndMarkers,
    )];
    if let (Ok(f), Some(first), Some(last)) = (&fit, curve.points.first(), curve.points.last()) {
        let xs = linspace(first.p, last.p, 200, false);
        series.push(Series::new(
            "polynomial fit",
            xs.into_iter().map(|x| (x, f.eval(x))).collect(),
            FIT_COLOR,
            SeriesStyle::Line,
        ));
    }
    out.svg(
        "occurrence.svg",
        render::render_chart(&series, &chart("Glider occurrence", "p", "gliders per cell per step", false)),
    )?;
    if c.export_detections {
        let templates = glider::build_templates(cfg.margin);
        for (i, &p) in cfg.p_values.iter().enumerate() {
            let trace = glider::trace_trial(cfg, p, &templates, &glider::trial_stream(seed, i, 0))?;
            out.csv(
                &format!("detections_p{i:02}.csv"),
                &["step", "template_id", "row", "col"],
                trace.iter().flat_map(|(step, d)| {
                    d.placements
                        .iter()
                        .map(move |pl| vec![num(step), num(pl.template_id), num(pl.row), num(pl.col)])
                }),
            )?;
        }
    }
    Ok(())
}

fn region_outlines(regions: &gate::Regions) -> Vec<Outline> {
    vec![
        Outline::new(regions.input_a, "#2e86c1"),
        Outline::new(regions.input_b, "#2e86c1"),
        Outline::new(regions.output, "#c0392b"),
    ]
}

fn gate(c: &GateExperiment, seed: u64, out: &mut Outputs) -> Step {
    let config = c.gate_config();
    let report = gate::estimate_truth_table(&config, c.trials, seed)?;
    let name = config.kind.name();
    out.csv(
        "trials.csv",
        &["gate", "input_a", "input_b", "trial", "cover", "output"],
        report.records.iter().map(|r: &TrialRecord| {
            vec![
                name.to_string(),
                num(r.inputs.a as u8),
                num(r.inputs.b as u8),
                num(r.trial),
                num(r.cover),
                num(r.output as u8),
            ]
        }),
    )?;
    let mut pairs = serde_json::Map::new();
    for row in &report.table.rows {
        pairs.insert(
            row.inputs.label(),
            json!({ "trials": row.trials, "ones": row.ones, "probability_of_one": row.probability_of_one }),
        );
    }
    out.json(
        "truth_table.json",
        &json!({
            "gate": name,
            "pairs": pairs,
            "matches_truth_table": report.table.matches(config.kind),
        }),
    )?;
    let histograms: Vec<CoverHistogram> = InputPair::ALL
        .iter()
        .map(|&pair| {
            let covers = report.records.iter().filter(|r| r.inputs == pair).map(|r| r.cover);
            CoverHistogram::from_covers(pair, c.bin_width, covers)
        })
        .collect();
    out.csv(
        "histograms.csv",
        &["gate", "pair", "bin", "frequency", "bin_width"],
        histograms.iter().flat_map(|h| {
            h.bins
                .iter()
                .map(move |&(bin, f)| vec![name.to_string(), h.inputs.label(), num(bin), num(f), num(h.bin_width)])
        }),
    )?;
    let bars: Vec<(String, f64)> = report
        .table
        .rows
        .iter()
        .map(|r| (r.inputs.label(), r.probability_of_one))
        .collect();
    out.svg(
        "truth_table.svg",
        render::render_bars(
            &bars,
            &chart(&format!("{} gate", name.to_uppercase()), "input pair", "P(output = 1)", false),
            Some(0.5),
        ),
    )?;
    for h in &histograms {
        let bars: Vec<(String, f64)> = h
            .bins
            .iter()
            .map(|&(bin, f)| (num(bin * h.bin_width), f as f64))
            .collect();
        out.svg(
            &format!("histogram_{}.svg", h.inputs.label()),
            render::render_bars(
                &bars,
                &chart(&format!("Cover, input {}", h.inputs.label()), "cover", "frequency", false),
                None,
            ),
        )?;
    }
    let steps: Vec<u64> = c.snapshot_steps.iter().copied().filter(|&t| t <= config.horizon).collect();
    if !steps.is_empty() {
        let outlines = region_outlines(&config.regions()?);
        for pair in InputPair::ALL {
            let (_, snaps) = gate::run_gate_trial_traced(&config, pair, 0, seed, &steps)?;
            for (t, grid) in snaps {
                let style = GridStyle {
                    title: Some(format!("{} {} t={t}", name.to_uppercase(), pair.label())),
                    ..GridStyle::default()
                };
                out.write(
                    &format!("snapshot_{}_t{t:04}.svg", pair.label()),
                    render::render_grid(&grid, &style, &outlines).as_bytes(),
                )?;
            }
        }
    }
    Ok(())
}

fn percolate(c: &PercolationConfig, seed: u64, out: &mut Outputs) -> Step {
    let result = percolation::success_curve(c, seed)?;
    out.csv(
        "percolation.csv",
        &["porosity", "trials", "success_count", "success_rate"],
        result
            .points
            .iter()
            .map(|p| vec![num(p.porosity), num(p.trials), num(p.success_count), num(p.success_rate)]),
    )?;
    out.json(
        "summary.json",
        &json!({
            "estimated_threshold": result.estimated_threshold,
            "side": c.side,
            "trials": c.trials,
            "wrap": c.wrap,
        }),
    )?;
    let series = [Series::new(
        "success rate",
        result.points.iter().map(|p| (p.porosity, p.success_rate)).collect(),
        DATA_COLOR,
        SeriesStyle::LineAndMarkers,
    )];
    out.svg(
        "percolation.svg",
        render::render_chart(&series, &chart("Directed percolation", "porosity", "P(percolates)", false)),
    )?;
    Ok(())
}

fn glider_demo(c: &GliderDemoConfig, seed: u64, out: &mut Outputs) -> Step {
    let run = glider::glider_demo(c, seed)?;
    out.csv(
        "live_count.csv",
        &["step", "live_count"],
        run.live_counts.iter().enumerate().map(|(t, &n)| vec![num(t), num(n)]),
    )?;
    let series = [Series::new(
        "live cells",
        run.live_counts.iter().enumerate().map(|(t, &n)| (t as f64, n as f64)).collect(),
        DATA_COLOR,
        SeriesStyle::Line,
    )];
    out.svg(
        "live_count.svg",
        render::render_chart(&series, &chart("Glider under noise", "step", "live cells", false)),
    )?;
    for (t, grid) in &run.snapshots {
        let style = GridStyle {
            title: Some(format!("t={t}")),
            ..GridStyle::default()
        };
        out.write(&format!("snapshot_t{t:05}.svg"), render::render_grid(grid, &style, &[]).as_bytes())?;
    }
    Ok(())
}
