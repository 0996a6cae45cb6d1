//! The `render` subcommand: pattern files and CSV curves to SVG.

use std::fs;
use std::path::{Path, PathBuf};

use asyncgl::pattern::grid_from_text;
use asyncgl::render::{self, ChartStyle, GridStyle, Outline, Series, SeriesStyle};
use asyncgl::{BoundaryMode, Rect};
use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Pattern,
    Curve,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Pattern text file (0/1 rows) or CSV file with a header row.
    pub input: PathBuf,
    /// Input type; guessed from the extension when omitted (`.csv` is a curve).
    #[arg(long, value_enum)]
    pub kind: Option<InputKind>,
    /// SVG path; defaults to `<out>/<input stem>.svg`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Column for the x axis (curves).
    #[arg(long)]
    pub x: Option<String>,
    /// Column for the y axis (curves).
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub log_y: bool,
    /// Placement CSV (`step,template_id,row,col`) to outline on a pattern.
    #[arg(long)]
    pub placements: Option<PathBuf>,
    /// Only outline placements recorded at this step.
    #[arg(long)]
    pub step: Option<u64>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value_t = 4.0)]
    pub cell_size: f64,
}

/// Y columns preferred when `--y` is not given, in order.
const PREFERRED_Y: [&str; 6] = [
    "frozen_probability",
    "mean_density",
    "rate",
    "success_rate",
    "live_count",
    "frequency",
];

pub fn render(args: &RenderArgs, out_dir: &Path) -> CliResult<PathBuf> {
    let kind = args.kind.unwrap_or_else(|| {
        if args.input.extension().is_some_and(|e| e == "csv") {
            InputKind::Curve
        } else {
            InputKind::Pattern
        }
    });
    let text = fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let svg = match kind {
        InputKind::Pattern => render_pattern(args, &text)?,
        InputKind::Curve => render_curve(args, &text)?,
    };
    let output = match &args.output {
        Some(p) => p.clone(),
        None => {
            let stem = args.input.file_stem().map(|s| s.to_string_lossy().into_owned());
            out_dir.join(format!("{}.svg", stem.unwrap_or_else(|| "render".into())))
        }
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(&output, svg).map_err(|e| CliError::io(&output, e))?;
    Ok(output)
}

fn render_pattern(args: &RenderArgs, text: &str) -> CliResult<String> {
    let grid = grid_from_text(text, BoundaryMode::FixedZero).map_err(|e| CliError::from_core("input", e))?;
    let mut outlines = Vec::new();
    if let Some(path) = &args.placements {
        let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::validation("placements", e.to_string()))?;
        for (n, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::validation("placements", e.to_string()))?;
            let field = |i: usize| -> CliResult<u64> {
                record
                    .get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| CliError::validation("placements", format!("row {}: bad column {i}", n + 2)))
            };
            let (step, row, col) = (field(0)?, field(2)? as usize, field(3)? as usize);
            if args.step.is_some_and(|s| s != step) {
                continue;
            }
            outlines.push(Outline::new(Rect::new(row, col, 3, 3), "#e74c3c"));
        }
    }
    let style = GridStyle {
        cell_size: args.cell_size,
        title: args.title.clone(),
        ..GridStyle::default()
    };
    Ok(render::render_grid(&grid, &style, &outlines))
}

fn render_curve(args: &RenderArgs, text: &str) -> CliResult<String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::validation("input", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let column = |name: &str, flag: &str| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(flag, format!("no column `{name}` in {}", headers.join(","))))
    };
    let xi = match &args.x {
        Some(name) => column(name, "x")?,
        None => 0,
    };
    let yi = match &args.y {
        Some(name) => column(name, "y")?,
        None => PREFERRED_Y
            .iter()
            .find_map(|p| headers.iter().position(|h| h == p))
            .unwrap_or(1.min(headers.len().saturating_sub(1))),
    };
    let mut points = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::validation("input", e.to_string()))?;
        let value = |i: usize| -> CliResult<f64> {
            record
                .get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::validation("input", format!("row {}: column {i} is not a number", n + 2)))
        };
        let (x, y) = (value(xi)?, value(yi)?);
        if (args.log_x && x <= 0.0) || (args.log_y && y <= 0.0) {
            continue;
        }
        points.push((x, y));
    }
    let x_label = headers.get(xi).cloned().unwrap_or_default();
    let y_label = headers.get(yi).cloned().unwrap_or_default();
    let style = ChartStyle {
        title: args.title.clone().unwrap_or_default(),
        x_label,
        y_label: y_label.clone(),
        log_x: args.log_x,
        log_y: args.log_y,
        ..ChartStyle::default()
    };
    let series = [Series::new(&y_label, points, "#1f4e79", SeriesStyle::LineAndMarkers)];
    render::render_chart(&series, &style).map_err(|e| CliError::validation("input", e.to_string()))
}
