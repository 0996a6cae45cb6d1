//! Browser bindings: a live asynchronous life field, single gate trials and
//! directed percolation curves.

use asyncgl::engine::{place_pattern_in_place, random_fill_in_place, step_async_into};
use asyncgl::gate::{run_gate_trial_traced, GateConfig, GateKind, InputPair};
use asyncgl::pattern::GLIDER;
use asyncgl::percolation::{success_curve, PercolationConfig};
use asyncgl::{BoundaryMode, Grid, Rect, RuleVariant, RngStream, UpdateParams};
use wasm_bindgen::prelude::*;

fn js_err(e: asyncgl::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn cells(grid: &Grid) -> Vec<u8> {
    let mut out = vec![0; grid.cell_count()];
    for (i, j) in grid.live_cells() {
        out[i * grid.width() + j] = 1;
    }
    out
}

/// A periodic field stepped on demand with adjustable hold and noise.
#[wasm_bindgen]
pub struct Field {
    grid: Grid,
    next: Grid,
    rng: RngStream,
    step: u64,
    p_hold: f64,
    p_noise: f64,
}

#[wasm_bindgen]
impl Field {
    #[wasm_bindgen(constructor)]
    pub fn new(side: usize, seed: u64) -> Result<Field, JsError> {
        let grid = Grid::square(side, BoundaryMode::Periodic).map_err(js_err)?;
        Ok(Field {
            next: grid.clone(),
            grid,
            rng: RngStream::new(seed),
            step: 0,
            p_hold: 0.0,
            p_noise: 0.0,
        })
    }

    pub fn side(&self) -> usize {
        self.grid.width()
    }

    #[wasm_bindgen(js_name = stepCount)]
    pub fn step_count(&self) -> u64 {
        self.step
    }

    #[wasm_bindgen(js_name = liveCount)]
    pub fn live_count(&self) -> usize {
        self.grid.live_count()
    }

    #[wasm_bindgen(js_name = setParams)]
    pub fn set_params(&mut self, p_hold: f64, p_noise: f64) -> Result<(), JsError> {
        UpdateParams::new(p_hold, p_noise, RuleVariant::ConwayB3S23).map_err(js_err)?;
        self.p_hold = p_hold;
        self.p_noise = p_noise;
        Ok(())
    }

    /// Clears the field and fills it at `density`.
    pub fn randomize(&mut self, density: f64) -> Result<(), JsError> {
        self.grid.clear();
        let side = self.side();
        let rng = self.rng.child(self.step);
        random_fill_in_place(&mut self.grid, &Rect::new(0, 0, side, side), density, &rng).map_err(js_err)
    }

    /// Clears the field and drops a glider in the middle.
    pub fn glider(&mut self) -> Result<(), JsError> {
        self.grid.clear();
        let mid = self.side() / 2 - 1;
        place_pattern_in_place(&mut self.grid, &GLIDER, (mid, mid)).map_err(js_err)
    }

    pub fn toggle(&mut self, row: usize, col: usize) {
        if row < self.side() && col < self.side() {
            let alive = self.grid.get(row, col) == 1;
            self.grid.set(row, col, !alive);
        }
    }

    pub fn advance(&mut self, steps: u32) {
        let params = UpdateParams {
            p_hold: self.p_hold,
            p_noise: self.p_noise,
            rule: RuleVariant::ConwayB3S23,
        };
        for _ in 0..steps {
            step_async_into(&self.grid, &params, &self.rng, self.step, &mut self.next);
            std::mem::swap(&mut self.grid, &mut self.next);
            self.step += 1;
        }
    }

    /// Row-major 0/1 cell states.
    pub fn cells(&self) -> Vec<u8> {
        cells(&self.grid)
    }
}

/// Outcome of one gate trial.
#[wasm_bindgen]
pub struct GateTrial {
    cover: usize,
    output: bool,
    output_area: usize,
    threshold: f64,
    side: usize,
    snapshots: Vec<(u64, Vec<u8>)>,
}

#[wasm_bindgen]
impl GateTrial {
    pub fn cover(&self) -> usize {
        self.cover
    }

    pub fn output(&self) -> bool {
        self.output
    }

    #[wasm_bindgen(js_name = outputArea)]
    pub fn output_area(&self) -> usize {
        self.output_area
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[wasm_bindgen(js_name = snapshotCount)]
    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    #[wasm_bindgen(js_name = snapshotStep)]
    pub fn snapshot_step(&self, i: usize) -> Option<u64> {
        self.snapshots.get(i).map(|s| s.0)
    }

    #[wasm_bindgen(js_name = snapshotCells)]
    pub fn snapshot_cells(&self, i: usize) -> Option<Vec<u8>> {
        self.snapshots.get(i).map(|s| s.1.clone())
    }
}

/// Runs one gate trial with the standard geometry and `snapshots` evenly
/// spaced field captures.
#[wasm_bindgen(js_name = runGate)]
pub fn run_gate(or: bool, a: bool, b: bool, p_noise: f64, seed: u64, trial: usize, snapshots: u32) -> Result<GateTrial, JsError> {
    let mut config = GateConfig::published(if or { GateKind::Or } else { GateKind::And });
    config.p_noise = p_noise;
    let every = (config.horizon / u64::from(snapshots.max(1))).max(1);
    let steps: Vec<u64> = (0..=config.horizon).step_by(every as usize).collect();
    let (record, snaps) = run_gate_trial_traced(&config, InputPair::new(a, b), trial, seed, &steps).map_err(js_err)?;
    Ok(GateTrial {
        cover: record.cover,
        output: record.output,
        output_area: config.regions().map_err(js_err)?.output.area(),
        threshold: config.threshold,
        side: config.grid_side,
        snapshots: snaps.into_iter().map(|(t, g)| (t, cells(&g))).collect(),
    })
}

/// Success rates at porosities `lo, lo + step, ..., hi`, followed by the
/// fitted threshold (NaN when the fit fails).
#[wasm_bindgen(js_name = percolationCurve)]
pub fn percolation_curve(side: usize, trials: usize, lo: f64, hi: f64, step: f64, wrap: bool, seed: u64) -> Result<Vec<f64>, JsError> {
    if !(step > 0.0) || hi < lo {
        return Err(JsError::new("porosity range must be increasing with a positive step"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let config = PercolationConfig {
        side,
        porosities: (0..count).map(|k| lo + k as f64 * step).collect(),
        trials,
        wrap,
    };
    let result = success_curve(&config, seed).map_err(js_err)?;
    let mut out: Vec<f64> = result.points.iter().map(|p| p.success_rate).collect();
    out.push(result.estimated_threshold.unwrap_or(f64::NAN));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_carries_a_glider() {
        let mut f = Field::new(20, 1).unwrap();
        f.glider().unwrap();
        f.advance(8);
        assert_eq!(f.live_count(), 5);
        assert_eq!(f.cells().iter().filter(|&&c| c == 1).count(), 5);
        f.toggle(0, 0);
        assert_eq!(f.live_count(), 6);
    }

    #[test]
    fn gate_snapshots_span_the_horizon() {
        let t = run_gate(false, false, false, 0.0, 3, 0, 15).unwrap();
        assert_eq!(t.cover(), 0);
        assert_eq!(t.snapshot_count(), 16);
        assert_eq!(t.snapshot_step(15), Some(1500));
    }

    #[test]
    fn percolation_curve_appends_threshold() {
        let out = percolation_curve(30, 10, 0.5, 0.9, 0.1, true, 1).unwrap();
        assert_eq!(out.len(), 6);
        assert!(out[..5].windows(2).all(|w| w[0] <= w[1]));
    }
}
