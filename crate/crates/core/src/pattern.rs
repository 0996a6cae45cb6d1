//! Named patterns and the plain-text pattern format.
//!
//! The text format is one grid row per line made of `0`/`1` characters,
//! optionally preceded by a `width height` header line.

use crate::error::{Error, Result};
use crate::grid::{BoundaryMode, Grid};

/// Standard glider, travelling towards increasing row and column.
pub const GLIDER: [[u8; 3]; 3] = [[0, 1, 0], [0, 0, 1], [1, 1, 1]];

pub const BLINKER: [[u8; 3]; 1] = [[1, 1, 1]];

pub const BLOCK: [[u8; 2]; 2] = [[1, 1], [1, 1]];

pub const BEEHIVE: [[u8; 4]; 3] = [[0, 1, 1, 0], [1, 0, 0, 1], [0, 1, 1, 0]];

pub const LOAF: [[u8; 4]; 4] = [[0, 1, 1, 0], [1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 0]];

/// Parses the text format into rows of states.
pub fn parse_pattern(text: &str) -> Result<Vec<Vec<u8>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let mut header = None;
    if let Some(&(n, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if fields.len() == 2 {
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: n,
                    message: format!("bad header value {s:?}: {e}"),
                })
            };
            header = Some((parse(fields[0])?, parse(fields[1])?));
            lines.next();
        }
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let row = line
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse {
                    line: n,
                    message: format!("unexpected character {other:?}"),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse {
                    line: n,
                    message: format!("row has {} cells, expected {first}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    if let Some((width, height)) = header {
        let actual = (rows.first().map_or(0, Vec::len), rows.len());
        if actual != (width, height) {
            return Err(Error::Parse {
                line: 1,
                message: format!("header says {width}x{height}, body is {}x{}", actual.0, actual.1),
            });
        }
    }
    Ok(rows)
}

pub fn grid_from_text(text: &str, boundary: BoundaryMode) -> Result<Grid> {
    Grid::from_rows(&parse_pattern(text)?, boundary)
}

/// Serializes a grid in the text format, with a `width height` header.
pub fn grid_to_text(grid: &Grid) -> String {
    let mut out = String::with_capacity((grid.width() + 1) * (grid.height() + 1));
    out.push_str(&format!("{} {}\n", grid.width(), grid.height()));
    for i in 0..grid.height() {
        for j in 0..grid.width() {
            out.push(if grid.get(i, j) == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
