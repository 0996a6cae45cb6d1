//! Life rule, synchronous and alpha-asynchronous stepping, noise.
//!
//! The update works a row of 64-cell words at a time: the eight neighbour
//! masks are added with a bit-sliced adder tree, and hold/noise decisions are
//! drawn as whole Bernoulli masks. Every random mask is addressed by
//! `(draw kind, step, word index)` inside the caller's trial stream, so a
//! cell's fate never depends on the order in which cells are evaluated; see
//! [`async_cell`] for the cell-at-a-time equivalent.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::grid::{span_mask, BoundaryMode, Grid, Rect};
use crate::rng::{Bernoulli, DrawKind, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RuleVariant {
    /// Birth on 3, survival on 2 or 3.
    #[default]
    ConwayB3S23,
    /// Birth on 3, survival on 5 or 6.
    LiteralB3S56,
}

impl RuleVariant {
    /// Next virtual state of a cell with state `alive` and `sum` live neighbours.
    pub fn apply(self, alive: bool, sum: u8) -> bool {
        match (alive, self) {
            (false, _) => sum == 3,
            (true, RuleVariant::ConwayB3S23) => sum == 2 || sum == 3,
            (true, RuleVariant::LiteralB3S56) => sum == 5 || sum == 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateParams {
    /// Probability that a cell keeps its state instead of adopting the rule output.
    pub p_hold: f64,
    /// Probability that a cell is inverted after the update.
    pub p_noise: f64,
    #[serde(default)]
    pub rule: RuleVariant,
}

impl UpdateParams {
    pub fn new(p_hold: f64, p_noise: f64, rule: RuleVariant) -> Result<Self> {
        let params = UpdateParams { p_hold, p_noise, rule };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_hold", self.p_hold)?;
        check_probability("p_noise", self.p_noise)
    }
}

#[inline]
fn full_add(a: u64, b: u64, c: u64) -> (u64, u64) {
    let t = a ^ b;
    (t ^ c, (a & b) | (c & t))
}

/// West and east neighbour masks for word `k` of a row.
#[inline]
fn west_east(row: &[u64], k: usize, width: usize, periodic: bool) -> (u64, u64) {
    let last = row.len() - 1;
    let mut west = row[k] << 1;
    if k > 0 {
        west |= row[k - 1] >> 63;
    } else if periodic {
        west |= (row[last] >> ((width - 1) % 64)) & 1;
    }
    let mut east = row[k] >> 1;
    if k < last {
        east |= row[k + 1] << 63;
    } else if periodic {
        east |= (row[0] & 1) << ((width - 1) % 64);
    }
    (west, east)
}

/// Computes the virtual states of row `i` into `out`.
fn virtual_row(grid: &Grid, i: usize, rule: RuleVariant, zeros: &[u64], out: &mut [u64]) {
    let h = grid.height();
    let width = grid.width();
    let periodic = grid.boundary() == BoundaryMode::Periodic;
    let up = if i > 0 {
        grid.row_words(i - 1)
    } else if periodic {
        grid.row_words(h - 1)
    } else {
        zeros
    };
    let down = if i + 1 < h {
        grid.row_words(i + 1)
    } else if periodic {
        grid.row_words(0)
    } else {
        zeros
    };
    let mid = grid.row_words(i);
    let last = out.len() - 1;
    let tail = grid.tail_mask();
    for k in 0..out.len() {
        let (uw, ue) = west_east(up, k, width, periodic);
        let (mw, me) = west_east(mid, k, width, periodic);
        let (dw, de) = west_east(down, k, width, periodic);
        let (a0, a1) = full_add(uw, up[k], ue);
        let (b0, b1) = full_add(dw, down[k], de);
        let (c0, c1) = (mw ^ me, mw & me);
        let (s0, d1) = full_add(a0, b0, c0);
        let (e1, e2) = full_add(a1, b1, c1);
        let (s1, f2) = (e1 ^ d1, e1 & d1);
        let (s2, s3) = (e2 ^ f2, e2 & f2);
        let a = mid[k];
        let low_two = !s2 & !s3;
        let eq3 = s0 & s1 & low_two;
        let next = match rule {
            RuleVariant::ConwayB3S23 => eq3 | (a & !s0 & s1 & low_two),
            RuleVariant::LiteralB3S56 => {
                let eq5 = s0 & !s1 & s2 & !s3;
                let eq6 = !s0 & s1 & s2 & !s3;
                (!a & eq3) | (a & (eq5 | eq6))
            }
        };
        out[k] = if k == last { next & tail } else { next };
    }
}

/// The field of virtual states: the rule applied to every cell of `grid`.
pub fn virtual_next(grid: &Grid, rule: RuleVariant) -> Grid {
    let mut out = grid.clone();
    virtual_next_into(grid, rule, &mut out);
    out
}

/// As [`virtual_next`], writing into `out` (which must have the same shape).
pub fn virtual_next_into(grid: &Grid, rule: RuleVariant, out: &mut Grid) {
    assert_same_shape(grid, out);
    let wpr = grid.words_per_row();
    let zeros = vec![0u64; wpr];
    let words = out.words_mut();
    for i in 0..grid.height() {
        virtual_row(grid, i, rule, &zeros, &mut words[i * wpr..(i + 1) * wpr]);
    }
}

/// One synchronous step: every cell adopts its virtual state.
pub fn step_sync(grid: &Grid, rule: RuleVariant) -> Grid {
    virtual_next(grid, rule)
}

/// One alpha-asynchronous step followed by noise.
///
/// Each cell keeps its state with probability `p_hold`, otherwise adopts its
/// virtual state; afterwards each cell is inverted with probability
/// `p_noise`. `rng` is the trial stream.
pub fn step_async(grid: &Grid, params: &UpdateParams, rng: &RngStream, step: u64) -> Grid {
    let mut out = grid.clone();
    step_async_into(grid, params, rng, step, &mut out);
    out
}

/// As [`step_async`], writing into `out` (which must have the same shape).
pub fn step_async_into(grid: &Grid, params: &UpdateParams, rng: &RngStream, step: u64, out: &mut Grid) {
    assert_same_shape(grid, out);
    let hold = Bernoulli::new(params.p_hold);
    let wpr = grid.words_per_row();
    let zeros = vec![0u64; wpr];
    let hold_stream = rng.draws(DrawKind::Hold, step);
    let words = out.words_mut();
    for i in 0..grid.height() {
        let row_out = &mut words[i * wpr..(i + 1) * wpr];
        if hold == Bernoulli::Always {
            row_out.copy_from_slice(grid.row_words(i));
            continue;
        }
        virtual_row(grid, i, params.rule, &zeros, row_out);
        if hold == Bernoulli::Never {
            continue;
        }
        let old = grid.row_words(i);
        for k in 0..wpr {
            let m = hold.mask(&hold_stream, (i * wpr + k) as u64);
            row_out[k] = (old[k] & m) | (row_out[k] & !m);
        }
    }
    noise_in_place(out, params.p_noise, rng, step);
}

/// Inverts each cell independently with probability `p_noise`.
pub fn apply_noise(grid: &Grid, p_noise: f64, rng: &RngStream, step: u64) -> Grid {
    let mut out = grid.clone();
    noise_in_place(&mut out, p_noise, rng, step);
    out
}

pub fn noise_in_place(grid: &mut Grid, p_noise: f64, rng: &RngStream, step: u64) {
    let flip = Bernoulli::new(p_noise);
    if flip == Bernoulli::Never {
        return;
    }
    let stream = rng.draws(DrawKind::Noise, step);
    let wpr = grid.words_per_row();
    let tail = grid.tail_mask();
    for (g, w) in grid.words_mut().iter_mut().enumerate() {
        let mut m = flip.mask(&stream, g as u64);
        if g % wpr == wpr - 1 {
            m &= tail;
        }
        *w ^= m;
    }
}

/// Next state of one cell under [`step_async`], computed from scalar
/// neighbour sums and single-lane draws. Used to check that the word-parallel
/// update is independent of evaluation order.
pub fn async_cell(grid: &Grid, params: &UpdateParams, rng: &RngStream, step: u64, row: usize, col: usize) -> Result<u8> {
    let sum = grid.neighbor_sum(row, col)?;
    let a = grid.get(row, col) == 1;
    let b = params.rule.apply(a, sum);
    let slot = (row * grid.words_per_row() + col / 64) as u64;
    let lane = (col % 64) as u32;
    let held = Bernoulli::new(params.p_hold).lane(&rng.draws(DrawKind::Hold, step), slot, lane);
    let state = if held { a } else { b };
    let flipped = Bernoulli::new(params.p_noise).lane(&rng.draws(DrawKind::Noise, step), slot, lane);
    Ok((state ^ flipped) as u8)
}

/// Sets each cell of `region` alive with probability `density`; cells outside
/// the region are untouched.
pub fn random_fill(grid: &Grid, region: &Rect, density: f64, rng: &RngStream) -> Result<Grid> {
    let mut out = grid.clone();
    random_fill_in_place(&mut out, region, density, rng)?;
    Ok(out)
}

pub fn random_fill_in_place(grid: &mut Grid, region: &Rect, density: f64, rng: &RngStream) -> Result<()> {
    grid.check_rect(region)?;
    check_probability("density", density)?;
    let fill = Bernoulli::new(density);
    let stream = rng.draws(DrawKind::Fill, 0);
    let wpr = grid.words_per_row();
    let words = grid.words_mut();
    for i in region.row..region.row + region.rows {
        for k in 0..wpr {
            let span = span_mask(k, region.col, region.col + region.cols);
            if span == 0 {
                continue;
            }
            let g = i * wpr + k;
            let m = fill.mask(&stream, g as u64);
            words[g] = (words[g] & !span) | (m & span);
        }
    }
    Ok(())
}

/// A whole-grid random soup.
pub fn random_soup(width: usize, height: usize, boundary: BoundaryMode, density: f64, rng: &RngStream) -> Result<Grid> {
    let mut grid = Grid::new(width, height, boundary)?;
    random_fill_in_place(&mut grid, &Rect::new(0, 0, height, width), density, rng)?;
    Ok(grid)
}

/// Writes `pattern` (rows of 0/1) with its top-left cell at `origin`.
pub fn place_pattern<R: AsRef<[u8]>>(grid: &Grid, pattern: &[R], origin: (usize, usize)) -> Result<Grid> {
    let mut out = grid.clone();
    place_pattern_in_place(&mut out, pattern, origin)?;
    Ok(out)
}

pub fn place_pattern_in_place<R: AsRef<[u8]>>(grid: &mut Grid, pattern: &[R], origin: (usize, usize)) -> Result<()> {
    let rows = pattern.len();
    let cols = pattern.iter().map(|r| r.as_ref().len()).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Ok(());
    }
    grid.check_rect(&Rect::new(origin.0, origin.1, rows, cols))?;
    for (di, row) in pattern.iter().enumerate() {
        for (dj, &state) in row.as_ref().iter().enumerate() {
            grid.set(origin.0 + di, origin.1 + dj, state != 0);
        }
    }
    Ok(())
}

fn assert_same_shape(a: &Grid, b: &Grid) {
    assert!(
        a.width() == b.width() && a.height() == b.height() && a.boundary() == b.boundary(),
        "output grid shape mismatch"
    );
}

/// Reports invalid update parameters as an error rather than panicking later.
pub fn require_noise_free(params: &UpdateParams) -> Result<()> {
    if params.p_noise != 0.0 {
        return Err(Error::invalid("p_noise", "must be 0 for noise-free experiments"));
    }
    Ok(())
}
