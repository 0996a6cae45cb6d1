//! Probabilistic AND/OR gates on a noisy asynchronous life field.
//!
//! Inputs are seeded as random soups in the top-left and bottom-right
//! corners, the field evolves at the critical hold probability with noise,
//! and the output is read from the live-cell cover of the centre square at
//! the horizon. The same geometry acts as AND or OR depending only on the
//! noise level.

use serde::{Deserialize, Serialize};

use crate::engine::{random_fill_in_place, step_async_into, RuleVariant, UpdateParams};
use crate::error::{check_probability, Error, Result};
use crate::grid::{BoundaryMode, Grid, Rect};
use crate::par::map_indexed;
use crate::rng::RngStream;

/// Input, input and output squares of an `N x N` gate field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regions {
    pub input_a: Rect,
    pub input_b: Rect,
    pub output: Rect,
    pub grid_side: usize,
}

/// Splits an `N x N` field into thirds. With 1-based indices:
/// `A = [1, floor(N/3)]^2`, `B = [ceil(2N/3), N]^2`,
/// `C = [floor(N/3) + 1, ceil(2N/3) - 1]^2`.
pub fn make_regions(n: usize) -> Result<Regions> {
    if n < 9 {
        return Err(Error::invalid("grid_side", format!("gate field must be at least 9 cells wide, got {n}")));
    }
    let third = n / 3;
    let two_thirds = (2 * n).div_ceil(3);
    let square = |first: usize, last: usize| {
        let len = last + 1 - first;
        Rect::new(first - 1, first - 1, len, len)
    };
    Ok(Regions {
        input_a: square(1, third),
        input_b: square(two_thirds, n),
        output: square(third + 1, two_thirds - 1),
        grid_side: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    And,
    Or,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
        }
    }

    pub fn truth(self, inputs: InputPair) -> bool {
        match self {
            GateKind::And => inputs.a && inputs.b,
            GateKind::Or => inputs.a || inputs.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub kind: GateKind,
    pub grid_side: usize,
    /// Number of steps before readout.
    pub horizon: u64,
    /// Output is 1 when the cover exceeds this fraction of the output square.
    #[serde(rename = "p1")]
    pub threshold: f64,
    pub p_hold: f64,
    pub p_noise: f64,
    pub input_density: f64,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
}

impl GateConfig {
    /// N = 100, T = 1500, P1 = 0.1, p = 0.13, input density 0.5, all-dead
    /// boundary; noise 1e-4 for AND and 1e-3 for OR.
    pub fn published(kind: GateKind) -> Self {
        GateConfig {
            kind,
            grid_side: 100,
            horizon: 1500,
            threshold: 0.1,
            p_hold: 0.13,
            p_noise: match kind {
                GateKind::And => 1e-4,
                GateKind::Or => 1e-3,
            },
            input_density: 0.5,
            rule: RuleVariant::ConwayB3S23,
            boundary: BoundaryMode::FixedZero,
        }
    }

    pub fn regions(&self) -> Result<Regions> {
        make_regions(self.grid_side)
    }

    pub fn update_params(&self) -> UpdateParams {
        UpdateParams {
            p_hold: self.p_hold,
            p_noise: self.p_noise,
            rule: self.rule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        make_regions(self.grid_side)?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("p1", format!("must lie in (0, 1), got {}", self.threshold)));
        }
        check_probability("p_hold", self.p_hold)?;
        check_probability("p_noise", self.p_noise)?;
        check_probability("input_density", self.input_density)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputPair {
    pub a: bool,
    pub b: bool,
}

impl InputPair {
    pub const ALL: [InputPair; 4] = [
        InputPair { a: false, b: false },
        InputPair { a: false, b: true },
        InputPair { a: true, b: false },
        InputPair { a: true, b: true },
    ];

    pub fn new(a: bool, b: bool) -> Self {
        InputPair { a, b }
    }

    /// `"00"`, `"01"`, `"10"` or `"11"`, input A first.
    pub fn label(self) -> String {
        format!("{}{}", self.a as u8, self.b as u8)
    }

    pub fn code(self) -> u64 {
        (self.a as u64) << 1 | self.b as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub inputs: InputPair,
    pub trial: usize,
    /// Live cells in the output square at the horizon.
    pub cover: usize,
    pub output: bool,
}

/// Seeds the input squares whose bit is 1 at the configured density.
pub fn encode_inputs(grid: &Grid, inputs: InputPair, config: &GateConfig, rng: &RngStream) -> Result<Grid> {
    if grid.width() != config.grid_side || grid.height() != config.grid_side {
        return Err(Error::invalid("grid", "dimensions do not match the gate configuration"));
    }
    if !grid.is_empty() {
        return Err(Error::invalid("grid", "inputs must be encoded on an all-dead grid"));
    }
    let regions = config.regions()?;
    let mut out = grid.clone();
    if inputs.a {
        random_fill_in_place(&mut out, &regions.input_a, config.input_density, rng)?;
    }
    if inputs.b {
        random_fill_in_place(&mut out, &regions.input_b, config.input_density, rng)?;
    }
    Ok(out)
}

/// 1 iff `cover` strictly exceeds `threshold * region_size`.
pub fn readout(cover: usize, region_size: usize, threshold: f64) -> Result<bool> {
    if cover > region_size {
        return Err(Error::invalid("cover", format!("{cover} exceeds region size {region_size}")));
    }
    let limit = threshold * region_size as f64;
    // Products that are mathematically integral must not round below.
    Ok(cover as f64 > limit + 1e-9 * limit.abs().max(1.0))
}

/// Stream of one gate trial.
pub fn trial_stream(master_seed: u64, inputs: InputPair, trial: usize) -> RngStream {
    RngStream::new(master_seed).child(inputs.code()).child(trial as u64)
}

/// Runs one trial, also returning copies of the field at the requested steps.
pub fn run_gate_trial_traced(
    config: &GateConfig,
    inputs: InputPair,
    trial: usize,
    master_seed: u64,
    snapshot_steps: &[u64],
) -> Result<(TrialRecord, Vec<(u64, Grid)>)> {
    config.validate()?;
    let rng = trial_stream(master_seed, inputs, trial);
    let empty = Grid::square(config.grid_side, config.boundary)?;
    let mut grid = encode_inputs(&empty, inputs, config, &rng)?;
    let mut next = grid.clone();
    let params = config.update_params();
    let mut snapshots = Vec::new();
    for t in 0..=config.horizon {
        if snapshot_steps.contains(&t) {
            snapshots.push((t, grid.clone()));
        }
        if t == config.horizon {
            break;
        }
        step_async_into(&grid, &params, &rng, t, &mut next);
        std::mem::swap(&mut grid, &mut next);
    }
    let output_region = config.regions()?.output;
    let cover = grid.count_in(&output_region)?;
    let output = readout(cover, output_region.area(), config.threshold)?;
    Ok((
        TrialRecord {
            inputs,
            trial,
            cover,
            output,
        },
        snapshots,
    ))
}

pub fn run_gate_trial(config: &GateConfig, inputs: InputPair, trial: usize, master_seed: u64) -> Result<TrialRecord> {
    run_gate_trial_traced(config, inputs, trial, master_seed, &[]).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub inputs: InputPair,
    pub trials: usize,
    pub ones: usize,
    pub probability_of_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTableEstimate {
    pub rows: Vec<TruthRow>,
}

impl TruthTableEstimate {
    pub fn probability(&self, inputs: InputPair) -> Option<f64> {
        self.rows.iter().find(|r| r.inputs == inputs).map(|r| r.probability_of_one)
    }

    /// True when every pair's majority output matches the Boolean gate.
    pub fn matches(&self, kind: GateKind) -> bool {
        self.rows
            .iter()
            .all(|r| (r.probability_of_one > 0.5) == kind.truth(r.inputs) && r.probability_of_one != 0.5)
    }
}

/// Frequency of cover values in left-closed bins of `bin_width` cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverHistogram {
    pub inputs: InputPair,
    pub bin_width: usize,
    /// `(bin index, frequency)` for bins `0..=max`, where bin `k` holds
    /// covers in `[k * bin_width, (k + 1) * bin_width)`.
    pub bins: Vec<(usize, usize)>,
}

impl CoverHistogram {
    pub fn from_covers(inputs: InputPair, bin_width: usize, covers: impl IntoIterator<Item = usize>) -> Self {
        let bin_width = bin_width.max(1);
        let mut freq: Vec<usize> = Vec::new();
        for cover in covers {
            let bin = cover / bin_width;
            if freq.len() <= bin {
                freq.resize(bin + 1, 0);
            }
            freq[bin] += 1;
        }
        CoverHistogram {
            inputs,
            bin_width,
            bins: freq.into_iter().enumerate().collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.1).sum()
    }
}

pub const DEFAULT_BIN_WIDTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub table: TruthTableEstimate,
    pub histograms: Vec<CoverHistogram>,
    /// Ordered by input pair, then trial index.
    pub records: Vec<TrialRecord>,
}

/// Runs `trials` trials for each of the four input pairs.
pub fn estimate_truth_table(config: &GateConfig, trials: usize, master_seed: u64) -> Result<GateReport> {
    estimate_truth_table_pairs(config, &InputPair::ALL, trials, master_seed)
}

/// As [`estimate_truth_table`] restricted to the given pairs.
pub fn estimate_truth_table_pairs(
    config: &GateConfig,
    pairs: &[InputPair],
    trials: usize,
    master_seed: u64,
) -> Result<GateReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    config.validate()?;
    let records = map_indexed(pairs.len() * trials, |n| {
        run_gate_trial(config, pairs[n / trials], n % trials, master_seed)
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(pairs.len());
    let mut histograms = Vec::with_capacity(pairs.len());
    for (i, &inputs) in pairs.iter().enumerate() {
        let chunk = &records[i * trials..(i + 1) * trials];
        let ones = chunk.iter().filter(|r| r.output).count();
        rows.push(TruthRow {
            inputs,
            trials,
            ones,
            probability_of_one: ones as f64 / trials as f64,
        });
        histograms.push(CoverHistogram::from_covers(inputs, DEFAULT_BIN_WIDTH, chunk.iter().map(|r| r.cover)));
    }
    Ok(GateReport {
        table: TruthTableEstimate { rows },
        histograms,
        records,
    })
}
