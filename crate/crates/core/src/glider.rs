//! Glider detection by exact template matching and the occurrence sweep.

use serde::{Deserialize, Serialize};

use crate::engine::{random_soup, step_async_into, step_sync, RuleVariant, UpdateParams};
use crate::error::{check_probability, Error, Result};
use crate::fit::{fit_polynomial, PolynomialFit};
use crate::grid::{BoundaryMode, Grid};
use crate::par::map_indexed;
use crate::pattern::GLIDER;
use crate::rng::RngStream;

pub type Cells3 = [[u8; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub id: usize,
    pub cells: Cells3,
}

impl Template {
    pub fn code(&self) -> u16 {
        code_of(&self.cells)
    }
}

fn code_of(cells: &Cells3) -> u16 {
    let mut code = 0;
    for (i, row) in cells.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            code |= (v as u16) << (i * 3 + j);
        }
    }
    code
}

/// Quarter turn clockwise.
pub fn rotate3(c: &Cells3) -> Cells3 {
    let mut out = [[0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c[2 - j][i];
        }
    }
    out
}

/// Left-right mirror.
pub fn reflect3(c: &Cells3) -> Cells3 {
    let mut out = *c;
    for row in out.iter_mut() {
        row.reverse();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GliderTemplateSet {
    templates: Vec<Template>,
    margin: usize,
    lookup: Vec<Option<u16>>,
}

impl GliderTemplateSet {
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn contains(&self, cells: &Cells3) -> bool {
        self.lookup[code_of(cells) as usize].is_some()
    }
}

/// The four synchronous phases of the glider, each cropped to its 3x3 box.
pub fn glider_phases() -> Vec<Cells3> {
    let mut grid = Grid::square(12, BoundaryMode::FixedZero).expect("static size");
    crate::engine::place_pattern_in_place(&mut grid, &GLIDER, (2, 2)).expect("fits");
    let mut phases = Vec::with_capacity(4);
    for _ in 0..4 {
        let (r0, c0) = grid
            .live_cells()
            .fold((usize::MAX, usize::MAX), |(r, c), (i, j)| (r.min(i), c.min(j)));
        let mut cells = [[0; 3]; 3];
        for (i, j) in grid.live_cells() {
            cells[i - r0][j - c0] = 1;
        }
        phases.push(cells);
        grid = step_sync(&grid, RuleVariant::ConwayB3S23);
    }
    phases
}

/// All phases of the glider under all eight symmetries of the square,
/// without duplicates.
pub fn build_templates(margin: usize) -> GliderTemplateSet {
    let mut templates: Vec<Template> = Vec::new();
    let mut lookup = vec![None; 512];
    for phase in glider_phases() {
        let mut c = phase;
        for _ in 0..4 {
            for image in [c, reflect3(&c)] {
                let code = code_of(&image) as usize;
                if lookup[code].is_none() {
                    lookup[code] = Some(templates.len() as u16);
                    templates.push(Template {
                        id: templates.len(),
                        cells: image,
                    });
                }
            }
            c = rotate3(&c);
        }
    }
    GliderTemplateSet {
        templates,
        margin,
        lookup,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub template_id: usize,
    /// Top-left cell of the 3x3 box.
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetectionResult {
    pub placements: Vec<Placement>,
    pub count: usize,
}

/// Finds every 3x3 box that equals a template and whose surrounding ring of
/// `margin` cells is dead. On periodic grids boxes may straddle the edges.
pub fn detect_gliders(grid: &Grid, templates: &GliderTemplateSet) -> DetectionResult {
    let periodic = grid.boundary() == BoundaryMode::Periodic;
    let (h, w) = (grid.height(), grid.width());
    let m = templates.margin as isize;
    let mut placements = Vec::new();
    // Every template has a live cell in its top row, so a box origin shares
    // its row with a live cell at most two columns to its right. Each origin
    // is examined once, from the leftmost live cell of its top row.
    for (i, j) in grid.live_cells() {
        for dc in 0..3isize {
            let c = j as isize - dc;
            let r = i as isize;
            if !periodic && (c < 0 || c + 3 > w as isize || r + 3 > h as isize) {
                continue;
            }
            if (0..dc).any(|k| grid.get_wrapped(r, c + k) == 1) {
                continue;
            }
            let mut cells = [[0u8; 3]; 3];
            for (di, row) in cells.iter_mut().enumerate() {
                for (dj, v) in row.iter_mut().enumerate() {
                    *v = grid.get_wrapped(r + di as isize, c + dj as isize);
                }
            }
            let Some(id) = templates.lookup[code_of(&cells) as usize] else {
                continue;
            };
            let ring_dead = (-m..3 + m).all(|di| {
                (-m..3 + m).all(|dj| {
                    ((0..3).contains(&di) && (0..3).contains(&dj)) || grid.get_wrapped(r + di, c + dj) == 0
                })
            });
            if ring_dead {
                placements.push(Placement {
                    template_id: id as usize,
                    row: r.rem_euclid(h as isize) as usize,
                    col: c.rem_euclid(w as isize) as usize,
                });
            }
        }
    }
    placements.sort_by_key(|p| (p.row, p.col));
    let count = placements.len();
    DetectionResult { placements, count }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccurrenceConfig {
    pub p_values: Vec<f64>,
    pub grid_side: usize,
    pub window_steps: u64,
    pub trials: usize,
    pub init_density: f64,
    pub margin: usize,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
}

impl Default for OccurrenceConfig {
    /// Hold probabilities 0.00..0.40 in steps of 0.02, plus steps of 0.005
    /// over [0.09, 0.17].
    fn default() -> Self {
        OccurrenceConfig {
            p_values: default_p_grid(),
            grid_side: 150,
            window_steps: 100,
            trials: 20,
            init_density: 0.5,
            margin: 1,
            rule: RuleVariant::ConwayB3S23,
            boundary: BoundaryMode::Periodic,
        }
    }
}

pub fn default_p_grid() -> Vec<f64> {
    let mut milli: Vec<u32> = (0..=20).map(|k| 20 * k).chain((0..=16).map(|k| 90 + 5 * k)).collect();
    milli.sort_unstable();
    milli.dedup();
    milli.into_iter().map(|m| m as f64 / 1000.0).collect()
}

impl OccurrenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() {
            return Err(Error::Empty("p_values"));
        }
        for &p in &self.p_values {
            check_probability("p_values", p)?;
        }
        if self.grid_side < 3 {
            return Err(Error::invalid("grid_side", "must be at least 3"));
        }
        if self.window_steps == 0 {
            return Err(Error::invalid("window_steps", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        check_probability("init_density", self.init_density)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccurrencePoint {
    pub p: f64,
    pub total_detections: u64,
    /// Detections per cell per step.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceCurve {
    pub points: Vec<OccurrencePoint>,
    pub window_steps: u64,
    pub trials: usize,
    pub grid_side: usize,
}

/// Runs one trial and returns the detections after each step `1..=window`.
pub fn trace_trial(
    config: &OccurrenceConfig,
    p_hold: f64,
    templates: &GliderTemplateSet,
    rng: &RngStream,
) -> Result<Vec<(u64, DetectionResult)>> {
    let params = UpdateParams::new(p_hold, 0.0, config.rule)?;
    let side = config.grid_side;
    let mut grid = random_soup(side, side, config.boundary, config.init_density, rng)?;
    let mut next = grid.clone();
    let mut out = Vec::with_capacity(config.window_steps as usize);
    for t in 0..config.window_steps {
        step_async_into(&grid, &params, rng, t, &mut next);
        std::mem::swap(&mut grid, &mut next);
        out.push((t + 1, detect_gliders(&grid, templates)));
    }
    Ok(out)
}

/// Stream of trial `trial` at sweep point `p_index`.
pub fn trial_stream(master_seed: u64, p_index: usize, trial: usize) -> RngStream {
    RngStream::new(master_seed).child(p_index as u64).child(trial as u64)
}

/// Glider detections per cell per step as a function of the hold probability.
pub fn occurrence_sweep(config: &OccurrenceConfig, master_seed: u64) -> Result<OccurrenceCurve> {
    config.validate()?;
    let templates = build_templates(config.margin);
    let trials = config.trials;
    let counts = map_indexed(config.p_values.len() * trials, |n| -> Result<u64> {
        let (i, k) = (n / trials, n % trials);
        let trace = trace_trial(config, config.p_values[i], &templates, &trial_stream(master_seed, i, k))?;
        Ok(trace.iter().map(|(_, d)| d.count as u64).sum())
    });
    let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
    let norm = (trials as u64 * config.window_steps) as f64 * (config.grid_side * config.grid_side) as f64;
    let points = config
        .p_values
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let total: u64 = counts[i * trials..(i + 1) * trials].iter().sum();
            OccurrencePoint {
                p,
                total_detections: total,
                rate: total as f64 / norm,
            }
        })
        .collect();
    Ok(OccurrenceCurve {
        points,
        window_steps: config.window_steps,
        trials,
        grid_side: config.grid_side,
    })
}

pub fn fit_occurrence(curve: &OccurrenceCurve, degree: usize) -> Result<PolynomialFit> {
    let data: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.p, p.rate)).collect();
    fit_polynomial(&data, degree)
}

/// A lone glider evolved synchronously, with noise switched on at `noise_onset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GliderDemoConfig {
    pub side: usize,
    pub noise_onset: u64,
    pub p_noise: f64,
    pub steps: u64,
    /// Snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: u64,
    pub boundary: BoundaryMode,
}

impl Default for GliderDemoConfig {
    fn default() -> Self {
        GliderDemoConfig {
            side: 100,
            noise_onset: 200,
            p_noise: 1e-4,
            steps: 600,
            snapshot_every: 100,
            boundary: BoundaryMode::Periodic,
        }
    }
}

impl GliderDemoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.side < 5 {
            return Err(Error::invalid("side", "must be at least 5"));
        }
        check_probability("p_noise", self.p_noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GliderDemo {
    /// Live cells at steps `0..=steps`.
    pub live_counts: Vec<usize>,
    pub snapshots: Vec<(u64, Grid)>,
}

pub fn glider_demo(config: &GliderDemoConfig, master_seed: u64) -> Result<GliderDemo> {
    config.validate()?;
    let rng = RngStream::new(master_seed);
    let empty = Grid::square(config.side, config.boundary)?;
    let centre = config.side / 2 - 1;
    let mut grid = crate::engine::place_pattern(&empty, &GLIDER, (centre, centre))?;
    let mut next = grid.clone();
    let quiet = UpdateParams::new(0.0, 0.0, RuleVariant::ConwayB3S23)?;
    let noisy = UpdateParams::new(0.0, config.p_noise, RuleVariant::ConwayB3S23)?;
    let mut live_counts = Vec::with_capacity(config.steps as usize + 1);
    let mut snapshots = Vec::new();
    for t in 0..=config.steps {
        live_counts.push(grid.live_count());
        if config.snapshot_every > 0 && t % config.snapshot_every == 0 {
            snapshots.push((t, grid.clone()));
        }
        if t == config.steps {
            break;
        }
        let params = if t < config.noise_onset { &quiet } else { &noisy };
        step_async_into(&grid, params, &rng, t, &mut next);
        std::mem::swap(&mut grid, &mut next);
    }
    Ok(GliderDemo { live_counts, snapshots })
}
