//! Bit-packed binary grid.
//!
//! Cell `(row, col)` lives in bit `col % 64` of word `col / 64` of its row.
//! Bits beyond `width` in the last word of a row are always zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Indices wrap modulo width and height.
    #[default]
    Periodic,
    /// Out-of-range neighbours read as dead.
    FixedZero,
}

/// Axis-aligned rectangle of cells, 0-based, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Rect { row, col, rows, cols }
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.rows).contains(&row) && (self.col..self.col + self.cols).contains(&col)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.row < other.row + other.rows
            && other.row < self.row + self.rows
            && self.col < other.col + other.cols
            && other.col < self.col + self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    boundary: BoundaryMode,
    words_per_row: usize,
    words: Vec<u64>,
}

impl Grid {
    /// An all-dead grid.
    pub fn new(width: usize, height: usize, boundary: BoundaryMode) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::GridTooSmall { height, width });
        }
        let words_per_row = width.div_ceil(64);
        Ok(Grid {
            width,
            height,
            boundary,
            words_per_row,
            words: vec![0; words_per_row * height],
        })
    }

    pub fn square(side: usize, boundary: BoundaryMode) -> Result<Self> {
        Grid::new(side, side, boundary)
    }

    /// Builds a grid from rows of 0/1 states.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R], boundary: BoundaryMode) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut grid = Grid::new(width, height, boundary)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {width} cells, found {}", row.len()),
                });
            }
            for (j, &state) in row.iter().enumerate() {
                grid.set(i, j, state != 0);
            }
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    /// Mask of the valid bits in the last word of each row.
    pub fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => !0,
            r => (1u64 << r) - 1,
        }
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Raw word access. Callers must keep the bits past `width` zero.
    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row < self.height && col < self.width {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                row,
                col,
                height: self.height,
                width: self.width,
            })
        }
    }

    pub fn check_rect(&self, rect: &Rect) -> Result<()> {
        if rect.row + rect.rows <= self.height && rect.col + rect.cols <= self.width {
            Ok(())
        } else {
            Err(Error::RegionOutOfRange {
                row: rect.row,
                col: rect.col,
                rows: rect.rows,
                cols: rect.cols,
                height: self.height,
                width: self.width,
            })
        }
    }

    /// State of a cell. Panics if out of range.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        assert!(row < self.height && col < self.width, "cell ({row}, {col}) out of range");
        ((self.words[row * self.words_per_row + col / 64] >> (col % 64)) & 1) as u8
    }

    pub fn try_get(&self, row: usize, col: usize) -> Result<u8> {
        self.check_index(row, col)?;
        Ok(self.get(row, col))
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, alive: bool) {
        assert!(row < self.height && col < self.width, "cell ({row}, {col}) out of range");
        let word = &mut self.words[row * self.words_per_row + col / 64];
        let bit = 1u64 << (col % 64);
        if alive {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// State at a possibly out-of-range signed position, resolved through
    /// the boundary mode.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> u8 {
        match self.boundary {
            BoundaryMode::Periodic => self.get(
                row.rem_euclid(self.height as isize) as usize,
                col.rem_euclid(self.width as isize) as usize,
            ),
            BoundaryMode::FixedZero => {
                if row < 0 || col < 0 || row >= self.height as isize || col >= self.width as isize {
                    0
                } else {
                    self.get(row as usize, col as usize)
                }
            }
        }
    }

    pub fn live_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn density(&self) -> f64 {
        self.live_count() as f64 / self.cell_count() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    /// Live cells inside `rect`.
    pub fn count_in(&self, rect: &Rect) -> Result<usize> {
        self.check_rect(rect)?;
        let mut count = 0;
        for row in rect.row..rect.row + rect.rows {
            let words = self.row_words(row);
            for (k, &w) in words.iter().enumerate() {
                count += (w & span_mask(k, rect.col, rect.col + rect.cols)).count_ones() as usize;
            }
        }
        Ok(count)
    }

    /// Number of live Moore neighbours of `(row, col)`.
    pub fn neighbor_sum(&self, row: usize, col: usize) -> Result<u8> {
        self.check_index(row, col)?;
        let (r, c) = (row as isize, col as isize);
        let mut sum = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr != 0 || dc != 0 {
                    sum += self.get_wrapped(r + dr, c + dc);
                }
            }
        }
        Ok(sum)
    }

    /// Copies the cells of `rect` out as rows of states.
    pub fn extract(&self, rect: &Rect) -> Result<Vec<Vec<u8>>> {
        self.check_rect(rect)?;
        Ok((rect.row..rect.row + rect.rows)
            .map(|i| (rect.col..rect.col + rect.cols).map(|j| self.get(i, j)).collect())
            .collect())
    }

    /// Iterator over live cell coordinates in row-major order.
    pub fn live_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |i| {
            self.row_words(i).iter().enumerate().flat_map(move |(k, &w)| {
                BitIter(w).map(move |b| (i, k * 64 + b as usize))
            })
        })
    }

    fn map_cells(&self, width: usize, height: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Grid {
        let mut out = Grid::new(width, height, self.boundary).expect("dimensions come from a valid grid");
        for i in 0..height {
            for j in 0..width {
                let (si, sj) = src(i, j);
                if self.get(si, sj) == 1 {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    /// Mirror about the main diagonal.
    pub fn transposed(&self) -> Grid {
        self.map_cells(self.height, self.width, |i, j| (j, i))
    }

    /// Mirror left-right.
    pub fn flipped_horizontal(&self) -> Grid {
        let w = self.width;
        self.map_cells(w, self.height, |i, j| (i, w - 1 - j))
    }

    /// Quarter turn clockwise.
    pub fn rotated(&self) -> Grid {
        let h = self.height;
        self.map_cells(h, self.width, |i, j| (h - 1 - j, i))
    }

    /// Cyclic shift by `(dr, dc)`; cell `(i, j)` moves to `(i + dr, j + dc)`.
    pub fn translated(&self, dr: isize, dc: isize) -> Grid {
        let (h, w) = (self.height as isize, self.width as isize);
        self.map_cells(self.width, self.height, |i, j| {
            (
                (i as isize - dr).rem_euclid(h) as usize,
                (j as isize - dc).rem_euclid(w) as usize,
            )
        })
    }

    /// Applies all eight symmetries of the square (identity first).
    pub fn dihedral_images(&self) -> Vec<Grid> {
        let mut out = Vec::with_capacity(8);
        let mut g = self.clone();
        for _ in 0..4 {
            out.push(g.clone());
            out.push(g.flipped_horizontal());
            g = g.rotated();
        }
        out
    }
}

/// Bits of word `k` covering columns `[start, end)`.
#[inline]
pub(crate) fn span_mask(k: usize, start: usize, end: usize) -> u64 {
    let lo = k * 64;
    let hi = lo + 64;
    let s = start.max(lo);
    let e = end.min(hi);
    if s >= e {
        return 0;
    }
    let len = e - s;
    let bits = if len == 64 { !0 } else { (1u64 << len) - 1 };
    bits << (s - lo)
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(b)
    }
}
