//! Standalone SVG output for grids, curves and bar charts.
//!
//! Output is plain text with fixed number formatting so identical inputs give
//! identical bytes.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, Rect};

/// A rectangle outline drawn over a grid, in cell coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Outline {
    pub rect: Rect,
    pub color: String,
}

impl Outline {
    pub fn new(rect: Rect, color: &str) -> Self {
        Outline {
            rect,
            color: color.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStyle {
    pub cell_size: f64,
    pub live_color: String,
    pub title: Option<String>,
}

impl Default for GridStyle {
    fn default() -> Self {
        GridStyle {
            cell_size: 4.0,
            live_color: "#000000".into(),
            title: None,
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Live cells as filled squares, plus outlines (e.g. detected gliders or gate
/// regions). Outlines that wrap past the grid edge are drawn clipped.
pub fn render_grid(grid: &Grid, style: &GridStyle, outlines: &[Outline]) -> String {
    let s = style.cell_size;
    let top = if style.title.is_some() { 16.0 } else { 0.0 };
    let w = grid.width() as f64 * s;
    let h = grid.height() as f64 * s + top;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"##
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="#ffffff"/>"##);
    if let Some(title) = &style.title {
        let _ = writeln!(out, r##"<text x="2" y="12" font-family="sans-serif" font-size="11">{}</text>"##, escape(title));
    }
    let _ = writeln!(out, r##"<g fill="{}">"##, style.live_color);
    for (i, j) in grid.live_cells() {
        let _ = writeln!(
            out,
            r##"<rect class="cell" x="{:.1}" y="{:.1}" width="{s:.1}" height="{s:.1}"/>"##,
            j as f64 * s,
            i as f64 * s + top
        );
    }
    out.push_str("</g>\n");
    for o in outlines {
        let r = &o.rect;
        let _ = writeln!(
            out,
            r##"<rect class="outline" x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="{}" stroke-width="1"/>"##,
            r.col as f64 * s,
            r.row as f64 * s + top,
            r.cols as f64 * s,
            r.rows as f64 * s,
            o.color
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Markers,
    LineAndMarkers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub style: SeriesStyle,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>, color: &str, style: SeriesStyle) -> Self {
        Series {
            label: label.into(),
            points,
            color: color.into(),
            style,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for ChartStyle {
    fn default() -> Self {
        ChartStyle {
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            log_y: false,
            width: 640.0,
            height: 420.0,
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Result<Axis> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return Err(Error::Empty("no plottable points"));
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Ok(Axis { lo, hi, log })
    }

    /// Maps a data value into `[0, 1]`; `None` for values a log axis cannot show.
    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let first = self.lo as i32;
            let last = self.hi as i32;
            return (first..=last).map(|e| (10f64.powi(e), format!("1e{e}"))).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 2.5, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let decimals = (-step.log10().floor()).max(0.0) as usize + 1;
        let mut ticks = Vec::new();
        let mut t = (self.lo / step).ceil() * step;
        while t <= self.hi + step * 1e-9 {
            ticks.push((t, format!("{t:.decimals$}")));
            t += step;
        }
        ticks
    }
}

fn chart_frame(out: &mut String, style: &ChartStyle, x: Option<&Axis>, y: &Axis) -> (f64, f64) {
    let pw = style.width - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = style.height - MARGIN_TOP - MARGIN_BOTTOM;
    let (w, h) = (style.width, style.height);
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}" font-family="sans-serif" font-size="11">"##
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"##,
        w / 2.0,
        escape(&style.title)
    );
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{MARGIN_LEFT:.1}" y="{MARGIN_TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#000000"/>"##
    );
    for (v, label) in x.map(Axis::ticks).unwrap_or_default() {
        let x = x.expect("ticks imply an axis");
        if let Some(u) = x.unit(v) {
            let px = MARGIN_LEFT + u * pw;
            let y0 = MARGIN_TOP + ph;
            let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000000"/>"##, y0 + 5.0);
            let _ = writeln!(out, r##"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##, y0 + 17.0);
        }
    }
    for (v, label) in y.ticks() {
        if let Some(u) = y.unit(v) {
            let py = MARGIN_TOP + (1.0 - u) * ph;
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT:.2}" y2="{py:.2}" stroke="#000000"/>"##,
                MARGIN_LEFT - 5.0
            );
            let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##, MARGIN_LEFT - 8.0, py + 4.0);
        }
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
        MARGIN_LEFT + pw / 2.0,
        h - 10.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r##"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"##,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );
    (pw, ph)
}

/// Line/marker chart. Points a log axis cannot show (non-positive values)
/// are skipped.
pub fn render_chart(series: &[Series], style: &ChartStyle) -> Result<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Empty("curve data"));
    }
    let x = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), style.log_x)?;
    let y = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), style.log_y)?;
    let mut out = String::new();
    let (pw, ph) = chart_frame(&mut out, style, Some(&x), &y);
    for (n, s) in series.iter().enumerate() {
        let coords: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter_map(|&(px, py)| Some((MARGIN_LEFT + x.unit(px)? * pw, MARGIN_TOP + (1.0 - y.unit(py)?) * ph)))
            .collect();
        if matches!(s.style, SeriesStyle::Line | SeriesStyle::LineAndMarkers) {
            let mut pts = String::new();
            for (i, (cx, cy)) in coords.iter().enumerate() {
                if i > 0 {
                    pts.push(' ');
                }
                let _ = write!(pts, "{cx:.2},{cy:.2}");
            }
            let _ = writeln!(out, r##"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="1.5"/>"##, s.color);
        }
        if matches!(s.style, SeriesStyle::Markers | SeriesStyle::LineAndMarkers) {
            for (cx, cy) in &coords {
                let _ = writeln!(out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="none" stroke="{}"/>"##, s.color);
            }
        }
        let ly = MARGIN_TOP + 14.0 + 14.0 * n as f64;
        let lx = MARGIN_LEFT + pw - 150.0;
        let _ = writeln!(out, r##"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}"/>"##, ly - 4.0, lx + 18.0, ly - 4.0, s.color);
        let _ = writeln!(out, r##"<text x="{:.1}" y="{ly:.1}">{}</text>"##, lx + 22.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Vertical bars at integer positions with an optional dashed reference line
/// at `marker` (in x units).
pub fn render_bars(bars: &[(String, f64)], style: &ChartStyle, marker: Option<f64>) -> Result<String> {
    if bars.is_empty() {
        return Err(Error::Empty("bar data"));
    }
    let x = Axis {
        lo: -0.5,
        hi: bars.len() as f64 - 0.5,
        log: false,
    };
    let y = Axis::fit(bars.iter().map(|b| b.1).chain([0.0]), false)?;
    let mut out = String::new();
    let (pw, ph) = chart_frame(&mut out, style, None, &y);
    let slot = pw / bars.len() as f64;
    let base = MARGIN_TOP + ph;
    for (i, (label, value)) in bars.iter().enumerate() {
        let u = y.unit(*value).unwrap_or(0.0);
        let top = MARGIN_TOP + (1.0 - u) * ph;
        let cx = MARGIN_LEFT + x.unit(i as f64).unwrap_or(0.0) * pw;
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#4a7bb7"/>"##,
            cx - slot * 0.4,
            slot * 0.8,
            base - top
        );
        let _ = writeln!(out, r##"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"##, base + 17.0, escape(label));
    }
    if let Some(m) = marker {
        if let Some(u) = x.unit(m) {
            let px = MARGIN_LEFT + u * pw;
            let _ = writeln!(
                out,
                r##"<line class="marker" x1="{px:.2}" y1="{MARGIN_TOP:.2}" x2="{px:.2}" y2="{base:.2}" stroke="#d62728" stroke-dasharray="4 3"/>"##
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryMode;

    #[test]
    fn one_live_cell_one_square() {
        let mut g = Grid::square(3, BoundaryMode::FixedZero).unwrap();
        g.set(1, 2, true);
        let svg = render_grid(&g, &GridStyle::default(), &[]);
        assert_eq!(svg.matches(r##"class="cell""##).count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn outlines_are_drawn() {
        let g = Grid::square(10, BoundaryMode::FixedZero).unwrap();
        let outlines = [Outline::new(Rect::new(1, 1, 3, 3), "red"), Outline::new(Rect::new(5, 5, 3, 3), "red")];
        let svg = render_grid(&g, &GridStyle::default(), &outlines);
        assert_eq!(svg.matches(r##"class="outline""##).count(), 2);
    }

    #[test]
    fn log_log_polyline_has_all_vertices() {
        let points: Vec<(f64, f64)> = (1..=100).map(|t| (t as f64, 0.5 * (t as f64).powf(-0.16))).collect();
        let style = ChartStyle {
            log_x: true,
            log_y: true,
            ..ChartStyle::default()
        };
        let svg = render_chart(&[Series::new("density", points, "#2ca02c", SeriesStyle::Line)], &style).unwrap();
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = poly.split('"').nth(1).unwrap();
        assert_eq!(pts.split(' ').count(), 100);
        assert!(svg.contains(">1e0<") && svg.contains(">1e2<"));
    }

    #[test]
    fn empty_chart_is_an_error() {
        assert!(render_chart(&[], &ChartStyle::default()).is_err());
        assert!(render_chart(&[Series::new("x", vec![], "#000", SeriesStyle::Line)], &ChartStyle::default()).is_err());
        assert!(render_bars(&[], &ChartStyle::default(), None).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let bars = vec![("00".to_string(), 0.1), ("11".to_string(), 0.9)];
        let a = render_bars(&bars, &ChartStyle::default(), Some(0.5)).unwrap();
        let b = render_bars(&bars, &ChartStyle::default(), Some(0.5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches(r##"class="bar""##).count(), 2);
    }
}
