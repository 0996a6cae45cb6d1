//! Experiment configurations as read from TOML tables or a run manifest.

use std::path::Path;

use asyncgl::gate::{GateConfig, GateKind};
use asyncgl::glider::{GliderDemoConfig, OccurrenceConfig};
use asyncgl::percolation::PercolationConfig;
use asyncgl::phase::{DecayConfig, SweepConfig};
use asyncgl::{BoundaryMode, RuleVariant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const GATE_SNAPSHOT_STEPS: [u64; 5] = [0, 100, 500, 1000, 1500];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayExperiment {
    #[serde(flatten)]
    pub decay: DecayConfig,
    pub fit_window: [f64; 2],
}

impl Default for DecayExperiment {
    fn default() -> Self {
        DecayExperiment {
            decay: DecayConfig::default(),
            fit_window: [1e2, 1e4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GliderExperiment {
    #[serde(flatten)]
    pub occurrence: OccurrenceConfig,
    pub degree: usize,
    /// Write per-step placements of trial 0 for every p.
    pub export_detections: bool,
}

impl Default for GliderExperiment {
    fn default() -> Self {
        GliderExperiment {
            occurrence: OccurrenceConfig::default(),
            degree: 4,
            export_detections: false,
        }
    }
}

/// Gate parameters. `p_noise` falls back to the per-kind default when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateExperiment {
    pub kind: GateKind,
    pub grid_side: usize,
    pub horizon: u64,
    pub p1: f64,
    pub p_hold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_noise: Option<f64>,
    pub input_density: f64,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
    pub trials: usize,
    pub bin_width: usize,
    pub snapshot_steps: Vec<u64>,
}

impl Default for GateExperiment {
    fn default() -> Self {
        GateExperiment::published(GateKind::And)
    }
}

impl GateExperiment {
    pub fn published(kind: GateKind) -> Self {
        let g = GateConfig::published(kind);
        GateExperiment {
            kind,
            grid_side: g.grid_side,
            horizon: g.horizon,
            p1: g.threshold,
            p_hold: g.p_hold,
            p_noise: None,
            input_density: g.input_density,
            rule: g.rule,
            boundary: g.boundary,
            trials: 100,
            bin_width: asyncgl::gate::DEFAULT_BIN_WIDTH,
            snapshot_steps: GATE_SNAPSHOT_STEPS.to_vec(),
        }
    }

    pub fn gate_config(&self) -> GateConfig {
        GateConfig {
            kind: self.kind,
            grid_side: self.grid_side,
            horizon: self.horizon,
            threshold: self.p1,
            p_hold: self.p_hold,
            p_noise: self.p_noise.unwrap_or(GateConfig::published(self.kind).p_noise),
            input_density: self.input_density,
            rule: self.rule,
            boundary: self.boundary,
        }
    }
}

/// Exactly one experiment; serialised as a single-key table named after the subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentConfig {
    SweepPhase(SweepConfig),
    Decay(DecayExperiment),
    Gliders(GliderExperiment),
    Gate(GateExperiment),
    Percolate(PercolationConfig),
    GliderDemo(GliderDemoConfig),
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::SweepPhase(_) => "sweep-phase",
            ExperimentConfig::Decay(_) => "decay",
            ExperimentConfig::Gliders(_) => "gliders",
            ExperimentConfig::Gate(_) => "gate",
            ExperimentConfig::Percolate(_) => "percolate",
            ExperimentConfig::GliderDemo(_) => "glider-demo",
        }
    }

    pub fn rule(&self) -> RuleVariant {
        match self {
            ExperimentConfig::SweepPhase(c) => c.rule,
            ExperimentConfig::Decay(c) => c.decay.rule,
            ExperimentConfig::Gliders(c) => c.occurrence.rule,
            ExperimentConfig::Gate(c) => c.rule,
            ExperimentConfig::Percolate(_) | ExperimentConfig::GliderDemo(_) => RuleVariant::ConwayB3S23,
        }
    }

    /// Boundary of the simulated grid; percolation reports periodic when its columns wrap.
    pub fn boundary(&self) -> BoundaryMode {
        match self {
            ExperimentConfig::SweepPhase(c) => c.boundary,
            ExperimentConfig::Decay(c) => c.decay.boundary,
            ExperimentConfig::Gliders(c) => c.occurrence.boundary,
            ExperimentConfig::Gate(c) => c.boundary,
            ExperimentConfig::Percolate(c) if c.wrap => BoundaryMode::Periodic,
            ExperimentConfig::Percolate(_) => BoundaryMode::FixedZero,
            ExperimentConfig::GliderDemo(c) => c.boundary,
        }
    }

    /// Fills in defaults that depend on other fields so the manifest is explicit.
    pub fn resolved(mut self) -> Self {
        if let ExperimentConfig::Gate(g) = &mut self {
            g.p_noise = Some(g.gate_config().p_noise);
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let scope = self.name();
        let core = |r: asyncgl::Result<()>| r.map_err(|e| CliError::from_core(scope, e));
        match self {
            ExperimentConfig::SweepPhase(c) => core(c.validate()),
            ExperimentConfig::Decay(c) => {
                core(c.decay.validate())?;
                let [lo, hi] = c.fit_window;
                if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                    return Err(CliError::validation(
                        "decay.fit_window",
                        format!("need 0 < t_min < t_max, got [{lo}, {hi}]"),
                    ));
                }
                if hi > c.decay.steps as f64 {
                    return Err(CliError::validation(
                        "decay.fit_window",
                        format!("t_max {hi} exceeds the {} simulated steps", c.decay.steps),
                    ));
                }
                Ok(())
            }
            ExperimentConfig::Gliders(c) => {
                core(c.occurrence.validate())?;
                if c.degree == 0 {
                    return Err(CliError::validation("gliders.degree", "must be at least 1"));
                }
                Ok(())
            }
            ExperimentConfig::Gate(c) => {
                core(c.gate_config().validate())?;
                if c.trials == 0 {
                    return Err(CliError::validation("gate.trials", "must be at least 1"));
                }
                if c.bin_width == 0 {
                    return Err(CliError::validation("gate.bin_width", "must be at least 1"));
                }
                Ok(())
            }
            ExperimentConfig::Percolate(c) => core(c.validate()),
            ExperimentConfig::GliderDemo(c) => core(c.validate()),
        }
    }
}

/// A config file: any subset of the experiment tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub sweep_phase: Option<SweepConfig>,
    pub decay: Option<DecayExperiment>,
    pub gliders: Option<GliderExperiment>,
    pub gate: Option<GateExperiment>,
    pub percolate: Option<PercolationConfig>,
    pub glider_demo: Option<GliderDemoConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::validation("config", e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}
