//! Command-line parsing and dispatch.

use std::path::{Path, PathBuf};

use asyncgl::gate::GateKind;
use asyncgl::{BoundaryMode, RuleVariant};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigFile, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::render_cmd::{self, RenderArgs};
use crate::run::run_experiment;

pub const OUT_ENV: &str = "ASYNCGL_OUT";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "asyncgl", version, about = "Asynchronous Game of Life experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    /// TOML file with experiment tables, or a manifest.json to rerun.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Conway,
    Literal,
}

impl From<RuleArg> for RuleVariant {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Conway => RuleVariant::ConwayB3S23,
            RuleArg::Literal => RuleVariant::LiteralB3S56,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    FixedZero,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Periodic => BoundaryMode::Periodic,
            BoundaryArg::FixedZero => BoundaryMode::FixedZero,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GateArg {
    And,
    Or,
}

impl From<GateArg> for GateKind {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::And => GateKind::And,
            GateArg::Or => GateKind::Or,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frozen-state probability over a range of hold probabilities.
    SweepPhase(SweepArgs),
    /// Mean density against time at a fixed hold probability.
    Decay(DecayArgs),
    /// Glider occurrence rate from random soups.
    Gliders(GliderArgs),
    /// Truth table of the noisy AND/OR gate.
    Gate(GateArgs),
    /// Directed percolation success curve.
    Percolate(PercolateArgs),
    /// One glider evolved under noise switched on after a quiet period.
    GliderDemo(DemoArgs),
    /// Draw a pattern file or a CSV curve as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub side: Option<usize>,
    /// Comma-separated hold probabilities.
    #[arg(long, value_delimiter = ',')]
    pub p_values: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub init_density: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub check_interval: Option<u64>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub init_density: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Fit window as t_min,t_max.
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Args)]
pub struct GliderArgs {
    #[arg(long, value_delimiter = ',')]
    pub p_values: Option<Vec<f64>>,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub margin: Option<usize>,
    /// Also write per-step placements for trial 0 of every p.
    #[arg(long)]
    pub export_detections: bool,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GateArg>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p_hold: Option<f64>,
    #[arg(long)]
    pub p_noise: Option<f64>,
    #[arg(long)]
    pub input_density: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<usize>,
    /// Comma-separated snapshot steps for trial 0 of each input pair.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
}

#[derive(Debug, Args)]
pub struct PercolateArgs {
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub porosities: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Clip at the side walls instead of wrapping columns.
    #[arg(long)]
    pub no_wrap: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub noise_onset: Option<u64>,
    #[arg(long)]
    pub p_noise: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

fn set<T>(slot: &mut T, value: Option<impl Into<T>>) {
    if let Some(v) = value {
        *slot = v.into();
    }
}

/// Base configuration for `command`: from a manifest, a TOML table, or the defaults.
fn base_config(command: &Command, source: Option<&Path>) -> CliResult<(ExperimentConfig, Option<u64>)> {
    let name = match command {
        Command::SweepPhase(_) => "sweep-phase",
        Command::Decay(_) => "decay",
        Command::Gliders(_) => "gliders",
        Command::Gate(_) => "gate",
        Command::Percolate(_) => "percolate",
        Command::GliderDemo(_) => "glider-demo",
        Command::Render(_) => unreachable!("render has no experiment config"),
    };
    let Some(path) = source else {
        return Ok((default_config(name, None), None));
    };
    if path.extension().is_some_and(|e| e == "json") {
        let manifest = RunManifest::load(path)?;
        if manifest.config.name() != name {
            return Err(CliError::validation(
                "config",
                format!("manifest is for `{}`, not `{name}`", manifest.config.name()),
            ));
        }
        return Ok((manifest.config, Some(manifest.master_seed)));
    }
    Ok((default_config(name, Some(ConfigFile::load(path)?)), None))
}

fn default_config(name: &str, file: Option<ConfigFile>) -> ExperimentConfig {
    let f = file.unwrap_or_default();
    match name {
        "sweep-phase" => ExperimentConfig::SweepPhase(f.sweep_phase.unwrap_or_default()),
        "decay" => ExperimentConfig::Decay(f.decay.unwrap_or_default()),
        "gliders" => ExperimentConfig::Gliders(f.gliders.unwrap_or_default()),
        "gate" => ExperimentConfig::Gate(f.gate.unwrap_or_default()),
        "percolate" => ExperimentConfig::Percolate(f.percolate.unwrap_or_default()),
        "glider-demo" => ExperimentConfig::GliderDemo(f.glider_demo.unwrap_or_default()),
        _ => unreachable!("unknown experiment {name}"),
    }
}

/// Applies command-line overrides on top of `config`.
fn apply_overrides(config: &mut ExperimentConfig, command: &Command) -> CliResult<()> {
    match (config, command) {
        (ExperimentConfig::SweepPhase(c), Command::SweepPhase(a)) => {
            set(&mut c.grid_side, a.side);
            set(&mut c.p_values, a.p_values.clone());
            set(&mut c.trials_per_p, a.trials);
            set(&mut c.init_density, a.init_density);
            set(&mut c.criterion.max_steps, a.max_steps);
            set(&mut c.criterion.check_interval, a.check_interval);
            set(&mut c.rule, a.rule);
            set(&mut c.boundary, a.boundary);
        }
        (ExperimentConfig::Decay(c), Command::Decay(a)) => {
            let d = &mut c.decay;
            set(&mut d.grid_side, a.side);
            set(&mut d.p_hold, a.p);
            set(&mut d.init_density, a.init_density);
            set(&mut d.trials, a.trials);
            set(&mut d.steps, a.steps);
            set(&mut d.rule, a.rule);
            set(&mut d.boundary, a.boundary);
            if let Some(w) = &a.window {
                c.fit_window = match w[..] {
                    [lo, hi] => [lo, hi],
                    _ => return Err(CliError::validation("decay.fit_window", "expected t_min,t_max")),
                };
            }
        }
        (ExperimentConfig::Gliders(c), Command::Gliders(a)) => {
            let o = &mut c.occurrence;
            set(&mut o.p_values, a.p_values.clone());
            set(&mut o.grid_side, a.side);
            set(&mut o.window_steps, a.window);
            set(&mut o.trials, a.trials);
            set(&mut o.margin, a.margin);
            set(&mut o.rule, a.rule);
            set(&mut o.boundary, a.boundary);
            set(&mut c.degree, a.degree);
            c.export_detections |= a.export_detections;
        }
        (ExperimentConfig::Gate(c), Command::Gate(a)) => {
            if let Some(kind) = a.kind {
                let kind = GateKind::from(kind);
                if kind != c.kind {
                    // Switching kind restores that kind's noise default unless given explicitly.
                    c.kind = kind;
                    c.p_noise = None;
                }
            }
            set(&mut c.trials, a.trials);
            set(&mut c.grid_side, a.side);
            set(&mut c.horizon, a.horizon);
            set(&mut c.p1, a.p1);
            set(&mut c.p_hold, a.p_hold);
            if a.p_noise.is_some() {
                c.p_noise = a.p_noise;
            }
            set(&mut c.input_density, a.input_density);
            set(&mut c.bin_width, a.bin_width);
            set(&mut c.snapshot_steps, a.snapshots.clone());
            set(&mut c.rule, a.rule);
        }
        (ExperimentConfig::Percolate(c), Command::Percolate(a)) => {
            set(&mut c.side, a.side);
            set(&mut c.porosities, a.porosities.clone());
            set(&mut c.trials, a.trials);
            if a.no_wrap {
                c.wrap = false;
            }
        }
        (ExperimentConfig::GliderDemo(c), Command::GliderDemo(a)) => {
            set(&mut c.side, a.side);
            set(&mut c.noise_onset, a.noise_onset);
            set(&mut c.p_noise, a.p_noise);
            set(&mut c.steps, a.steps);
            set(&mut c.snapshot_every, a.snapshot_every);
            set(&mut c.boundary, a.boundary);
        }
        _ => unreachable!("config variant always matches the subcommand"),
    }
    Ok(())
}

/// Builds the experiment a command line describes, with the seed to run it under.
pub fn resolve(cli: &Cli) -> CliResult<(ExperimentConfig, u64)> {
    let (mut config, manifest_seed) = base_config(&cli.command, cli.global.config.as_deref())?;
    apply_overrides(&mut config, &cli.command)?;
    let seed = cli.global.seed.or(manifest_seed).unwrap_or(DEFAULT_SEED);
    Ok((config, seed))
}

/// Runs a parsed command line; returns the lines to report on success.
pub fn execute(cli: &Cli) -> CliResult<Vec<String>> {
    if let Command::Render(args) = &cli.command {
        let path = render_cmd::render(args, &cli.global.out)?;
        return Ok(vec![path.display().to_string()]);
    }
    let (config, seed) = resolve(cli)?;
    let manifest = run_experiment(&config, seed, &cli.global.out, cli.global.threads)?;
    let mut lines: Vec<String> = manifest
        .outputs
        .iter()
        .map(|f| cli.global.out.join(f).display().to_string())
        .collect();
    lines.push(cli.global.out.join(crate::manifest::MANIFEST_FILE).display().to_string());
    lines.extend(manifest.notes.iter().filter(|n| n.contains("fit failed")).map(|n| format!("warning: {n}")));
    Ok(lines)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
