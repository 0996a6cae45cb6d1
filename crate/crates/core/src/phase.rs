//! Phase transition of asynchronous life over the hold probability:
//! frozen-state detection, the frozen-probability sweep and the critical
//! density decay.

use serde::{Deserialize, Serialize};

use crate::engine::{random_soup, require_noise_free, step_async_into, virtual_next_into, RuleVariant, UpdateParams};
use crate::error::{check_probability, Error, Result};
use crate::grid::{BoundaryMode, Grid};
use crate::par::map_indexed;
use crate::rng::RngStream;

pub use crate::fit::{fit_power_law, fit_sigmoid, PowerLawFit, SigmoidFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrozenCriterion {
    pub max_steps: u64,
    pub check_interval: u64,
}

impl Default for FrozenCriterion {
    fn default() -> Self {
        FrozenCriterion {
            max_steps: 10_000,
            check_interval: 10,
        }
    }
}

impl FrozenCriterion {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be positive"));
        }
        if self.check_interval == 0 {
            return Err(Error::invalid("check_interval", "must be at least 1"));
        }
        Ok(())
    }
}

/// Grid set-up shared by the trials of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub side: usize,
    pub init_density: f64,
    pub boundary: BoundaryMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_side: usize,
    pub p_values: Vec<f64>,
    pub trials_per_p: usize,
    pub init_density: f64,
    pub criterion: FrozenCriterion,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
}

impl Default for SweepConfig {
    /// 500x500 periodic grids, p from 0.095 to 0.155 in steps of 0.005,
    /// 100 trials per point.
    fn default() -> Self {
        SweepConfig {
            grid_side: 500,
            p_values: (0..=12).map(|k| (95 + 5 * k) as f64 / 1000.0).collect(),
            trials_per_p: 100,
            init_density: 0.5,
            criterion: FrozenCriterion::default(),
            rule: RuleVariant::ConwayB3S23,
            boundary: BoundaryMode::Periodic,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_side < 3 {
            return Err(Error::invalid("grid_side", "must be at least 3"));
        }
        if self.p_values.is_empty() {
            return Err(Error::Empty("p_values"));
        }
        for &p in &self.p_values {
            check_probability("p_values", p)?;
        }
        if self.p_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("p_values", "must be strictly increasing"));
        }
        if self.trials_per_p == 0 {
            return Err(Error::invalid("trials_per_p", "must be positive"));
        }
        check_probability("init_density", self.init_density)?;
        self.criterion.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub frozen_probability: f64,
    pub trials: usize,
    pub frozen_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayConfig {
    pub grid_side: usize,
    pub p_hold: f64,
    pub init_density: f64,
    pub trials: usize,
    pub steps: u64,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            grid_side: 150,
            p_hold: 0.13,
            init_density: 0.590,
            trials: 20,
            steps: 10_000,
            rule: RuleVariant::ConwayB3S23,
            boundary: BoundaryMode::Periodic,
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_side < 3 {
            return Err(Error::invalid("grid_side", "must be at least 3"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be positive"));
        }
        check_probability("p_hold", self.p_hold)?;
        check_probability("init_density", self.init_density)
    }
}

/// True iff `grid` lies on a synchronous cycle of length 1 or 2.
pub fn is_quiescent(grid: &Grid, rule: RuleVariant) -> bool {
    let mut once = grid.clone();
    let mut twice = grid.clone();
    is_quiescent_with(grid, rule, &mut once, &mut twice)
}

fn is_quiescent_with(grid: &Grid, rule: RuleVariant, once: &mut Grid, twice: &mut Grid) -> bool {
    virtual_next_into(grid, rule, once);
    if once == grid {
        return true;
    }
    virtual_next_into(once, rule, twice);
    twice == grid
}

/// Runs one noise-free trial from a random soup and returns the first
/// checked step at which the grid is quiescent.
pub fn run_until_frozen(
    params: &UpdateParams,
    setup: &TrialSetup,
    criterion: &FrozenCriterion,
    rng: &RngStream,
) -> Result<Option<u64>> {
    params.validate()?;
    require_noise_free(params)?;
    criterion.validate()?;
    let mut grid = random_soup(setup.side, setup.side, setup.boundary, setup.init_density, rng)?;
    let mut next = grid.clone();
    let mut scratch = grid.clone();
    let mut t = 0;
    loop {
        if t % criterion.check_interval == 0 && is_quiescent_with(&grid, params.rule, &mut next, &mut scratch) {
            return Ok(Some(t));
        }
        if t == criterion.max_steps {
            return Ok(None);
        }
        step_async_into(&grid, params, rng, t, &mut next);
        std::mem::swap(&mut grid, &mut next);
        t += 1;
    }
}

/// Frozen probability at each hold probability of the sweep.
///
/// Trial `k` at point `i` uses stream path `(i, k)` under the master seed.
pub fn sweep_frozen_probability(config: &SweepConfig, master_seed: u64) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let setup = TrialSetup {
        side: config.grid_side,
        init_density: config.init_density,
        boundary: config.boundary,
    };
    let trials = config.trials_per_p;
    let root = RngStream::new(master_seed);
    let outcomes = map_indexed(config.p_values.len() * trials, |n| {
        let (i, k) = (n / trials, n % trials);
        let params = UpdateParams {
            p_hold: config.p_values[i],
            p_noise: 0.0,
            rule: config.rule,
        };
        run_until_frozen(&params, &setup, &config.criterion, &root.child(i as u64).child(k as u64))
    });
    let mut points = Vec::with_capacity(config.p_values.len());
    for (i, &p) in config.p_values.iter().enumerate() {
        let mut frozen_count = 0;
        for outcome in &outcomes[i * trials..(i + 1) * trials] {
            if outcome.clone()?.is_some() {
                frozen_count += 1;
            }
        }
        points.push(SweepPoint {
            p,
            frozen_probability: frozen_count as f64 / trials as f64,
            trials,
            frozen_count,
        });
    }
    Ok(points)
}

/// Fits the transition curve to sweep points.
pub fn fit_sweep(points: &[SweepPoint]) -> Result<SigmoidFit> {
    let data: Vec<(f64, f64)> = points.iter().map(|p| (p.p, p.frozen_probability)).collect();
    fit_sigmoid(&data)
}

/// Live-cell fraction after every step (step 0 is the initial soup),
/// averaged over trials. Trial `k` uses stream path `(k)`.
pub fn measure_density_decay(config: &DecayConfig, master_seed: u64) -> Result<Vec<(u64, f64)>> {
    config.validate()?;
    let params = UpdateParams {
        p_hold: config.p_hold,
        p_noise: 0.0,
        rule: config.rule,
    };
    let root = RngStream::new(master_seed);
    let side = config.grid_side;
    let per_trial = map_indexed(config.trials, |k| -> Result<Vec<usize>> {
        let rng = root.child(k as u64);
        let mut grid = random_soup(side, side, config.boundary, config.init_density, &rng)?;
        let mut next = grid.clone();
        let mut counts = Vec::with_capacity(config.steps as usize + 1);
        counts.push(grid.live_count());
        for t in 0..config.steps {
            step_async_into(&grid, &params, &rng, t, &mut next);
            std::mem::swap(&mut grid, &mut next);
            counts.push(grid.live_count());
        }
        Ok(counts)
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let cells = (side * side) as f64;
    let trials = config.trials as f64;
    Ok((0..=config.steps as usize)
        .map(|t| {
            let total: usize = per_trial.iter().map(|c| c[t]).sum();
            (t as u64, total as f64 / cells / trials)
        })
        .collect())
}

/// Fits the offset power law to a decay curve.
pub fn fit_decay(curve: &[(u64, f64)], window: [f64; 2]) -> Result<PowerLawFit> {
    let data: Vec<(f64, f64)> = curve.iter().map(|&(t, d)| (t as f64, d)).collect();
    fit_power_law(&data, window)
}
