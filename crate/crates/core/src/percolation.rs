//! Directed site percolation, used as a reference for the critical point.
//!
//! Water starts in every pore of the top row; a wet pore at `(i, j)` wets
//! the pores at `(i + 1, j)` and `(i + 1, j + 1)`. Percolation succeeds when
//! any pore of the bottom row is wet.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::fit::fit_sigmoid;
use crate::grid::span_mask;
use crate::par::map_indexed;
use crate::rng::{Bernoulli, DrawKind, RngStream};

/// Square field of pores, bit-packed by rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoreField {
    side: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl PoreField {
    pub fn sample(side: usize, porosity: f64, rng: &RngStream) -> Self {
        let words_per_row = side.div_ceil(64);
        let mut field = PoreField {
            side,
            words_per_row,
            words: vec![0; words_per_row * side],
        };
        let mut row = vec![0; words_per_row];
        for i in 0..side {
            pore_row(side, i, &Bernoulli::new(porosity), &rng.draws(DrawKind::Pore, 0), &mut row);
            field.words[i * words_per_row..(i + 1) * words_per_row].copy_from_slice(&row);
        }
        field
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let side = rows.len();
        let words_per_row = side.div_ceil(64).max(1);
        let mut words = vec![0; words_per_row * side];
        for (i, row) in rows.iter().enumerate() {
            for (j, &pore) in row.iter().enumerate() {
                if pore {
                    words[i * words_per_row + j / 64] |= 1 << (j % 64);
                }
            }
        }
        PoreField {
            side,
            words_per_row,
            words,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn is_pore(&self, row: usize, col: usize) -> bool {
        (self.words[row * self.words_per_row + col / 64] >> (col % 64)) & 1 == 1
    }

    /// Wet cells of every row.
    pub fn wet_rows(&self, wrap: bool) -> Vec<Vec<bool>> {
        let mut wet = self.words[..self.words_per_row].to_vec();
        let mut out = Vec::with_capacity(self.side);
        let unpack = |w: &[u64]| (0..self.side).map(|j| (w[j / 64] >> (j % 64)) & 1 == 1).collect::<Vec<_>>();
        out.push(unpack(&wet));
        for i in 1..self.side {
            let pores = &self.words[i * self.words_per_row..(i + 1) * self.words_per_row];
            wet = spread(&wet, pores, self.side, wrap);
            out.push(unpack(&wet));
        }
        out
    }

    pub fn percolates(&self, wrap: bool) -> bool {
        self.wet_rows(wrap).last().is_some_and(|row| row.iter().any(|&w| w))
    }
}

fn pore_row(side: usize, i: usize, pore: &Bernoulli, stream: &RngStream, out: &mut [u64]) {
    let wpr = out.len();
    for (k, w) in out.iter_mut().enumerate() {
        *w = pore.mask(stream, (i * wpr + k) as u64) & span_mask(k, 0, side);
    }
}

/// Wet cells of the next row given the wet cells above and its pores.
fn spread(wet: &[u64], pores: &[u64], side: usize, wrap: bool) -> Vec<u64> {
    let last = wet.len() - 1;
    let mut next = vec![0; wet.len()];
    for k in 0..wet.len() {
        // Bit j of `from_left` is the wet state of column j - 1.
        let mut from_left = wet[k] << 1;
        if k > 0 {
            from_left |= wet[k - 1] >> 63;
        } else if wrap {
            from_left |= (wet[last] >> ((side - 1) % 64)) & 1;
        }
        next[k] = (wet[k] | from_left) & pores[k];
    }
    next[last] &= span_mask(last, 0, side);
    next
}

/// One percolation trial on an `side x side` field.
///
/// Pore draws depend only on the stream and the cell, not on `porosity`,
/// so trials sharing a stream are coupled across porosities.
pub fn percolate_once(side: usize, porosity: f64, rng: &RngStream, wrap: bool) -> Result<bool> {
    if side < 2 {
        return Err(Error::invalid("side", "must be at least 2"));
    }
    check_probability("porosity", porosity)?;
    let pore = Bernoulli::new(porosity);
    let stream = rng.draws(DrawKind::Pore, 0);
    let wpr = side.div_ceil(64);
    let mut wet = vec![0; wpr];
    pore_row(side, 0, &pore, &stream, &mut wet);
    let mut pores = vec![0; wpr];
    for i in 1..side {
        if wet.iter().all(|&w| w == 0) {
            return Ok(false);
        }
        pore_row(side, i, &pore, &stream, &mut pores);
        wet = spread(&wet, &pores, side, wrap);
    }
    Ok(wet.iter().any(|&w| w != 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolationConfig {
    pub side: usize,
    pub porosities: Vec<f64>,
    pub trials: usize,
    /// Wrap the down-right descendant around the right edge.
    pub wrap: bool,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            side: 500,
            porosities: (60..=80).map(|k| k as f64 / 100.0).collect(),
            trials: 200,
            wrap: true,
        }
    }
}

impl PercolationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::invalid("side", "must be at least 2"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.porosities.is_empty() {
            return Err(Error::Empty("porosities"));
        }
        for &p in &self.porosities {
            check_probability("porosities", p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationPoint {
    pub porosity: f64,
    pub trials: usize,
    pub success_count: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationResult {
    pub points: Vec<PercolationPoint>,
    /// Porosity where a fitted logistic curve crosses 1/2; absent when the
    /// rates are all 0 or all 1.
    pub estimated_threshold: Option<f64>,
}

/// Success rate per porosity. Trial `k` uses stream path `(k)` at every
/// porosity, so the rates are exactly monotone in porosity.
pub fn success_curve(config: &PercolationConfig, master_seed: u64) -> Result<PercolationResult> {
    config.validate()?;
    let root = RngStream::new(master_seed);
    let outcomes = map_indexed(config.trials, |k| {
        let rng = root.child(k as u64);
        config
            .porosities
            .iter()
            .map(|&p| percolate_once(config.side, p, &rng, config.wrap))
            .collect::<Result<Vec<bool>>>()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let points: Vec<PercolationPoint> = config
        .porosities
        .iter()
        .enumerate()
        .map(|(i, &porosity)| {
            let success_count = outcomes.iter().filter(|o| o[i]).count();
            PercolationPoint {
                porosity,
                trials: config.trials,
                success_count,
                success_rate: success_count as f64 / config.trials as f64,
            }
        })
        .collect();
    let data: Vec<(f64, f64)> = points.iter().map(|p| (p.porosity, p.success_rate)).collect();
    let estimated_threshold = fit_sigmoid(&data).ok().map(|f| f.b);
    Ok(PercolationResult {
        points,
        estimated_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let rng = RngStream::new(1);
        assert!(percolate_once(50, 1.0, &rng, true).unwrap());
        assert!(!percolate_once(50, 0.0, &rng, true).unwrap());
        assert!(percolate_once(1, 0.5, &rng, true).is_err());
    }

    #[test]
    fn single_column_path() {
        // Pores straight down the first column only.
        let rows: Vec<Vec<bool>> = (0..5).map(|_| (0..5).map(|j| j == 0).collect()).collect();
        assert!(PoreField::from_rows(&rows).percolates(false));
        // A diagonal to the right also works; to the left does not.
        let right: Vec<Vec<bool>> = (0..5).map(|i| (0..5).map(|j| j == i).collect()).collect();
        assert!(PoreField::from_rows(&right).percolates(false));
        let left: Vec<Vec<bool>> = (0..5).map(|i| (0..5).map(|j| j == 4 - i).collect()).collect();
        assert!(!PoreField::from_rows(&left).percolates(true));
    }

    #[test]
    fn wrap_reaches_column_zero() {
        // Pore at the right edge of row 0, then column 0 below.
        let mut rows = vec![vec![false; 4]; 4];
        rows[0][3] = true;
        for row in rows.iter_mut().skip(1) {
            row[0] = true;
        }
        let field = PoreField::from_rows(&rows);
        assert!(field.percolates(true));
        assert!(!field.percolates(false));
    }

    #[test]
    fn sampled_field_agrees_with_fast_path() {
        for k in 0..50 {
            let rng = RngStream::new(9).child(k);
            for p in [0.6, 0.7, 0.8] {
                let field = PoreField::sample(70, p, &rng);
                assert_eq!(field.percolates(true), percolate_once(70, p, &rng, true).unwrap());
            }
        }
    }

    #[test]
    fn all_or_nothing_curves() {
        let config = PercolationConfig {
            side: 20,
            porosities: vec![1.0, 1.0],
            trials: 5,
            wrap: true,
        };
        let r = success_curve(&config, 3).unwrap();
        assert!(r.points.iter().all(|p| p.success_rate == 1.0));
        assert_eq!(r.estimated_threshold, None);
        let r = success_curve(&PercolationConfig { porosities: vec![0.0], ..config }, 3).unwrap();
        assert!(r.points.iter().all(|p| p.success_rate == 0.0));
    }
}
