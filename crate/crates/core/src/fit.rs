//! Least-squares fitters for the three curve families used by the
//! experiments: the logistic transition curve, the offset power law of the
//! density decay and the glider-occurrence polynomial.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = 1 / (1 + exp(a (x - b)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub a: f64,
    pub b: f64,
    /// Sum of squared errors over the fitted points.
    pub residual: f64,
}

impl SigmoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        sigmoid(self.a, self.b, x)
    }
}

fn sigmoid(a: f64, b: f64, x: f64) -> f64 {
    1.0 / (1.0 + (a * (x - b)).exp())
}

fn sigmoid_sse(a: f64, b: f64, points: &[(f64, f64)]) -> f64 {
    points.iter().map(|&(x, y)| (sigmoid(a, b, x) - y).powi(2)).sum()
}

/// Ordinary least squares line; returns `(slope, intercept)`.
fn linear_regression(points: impl Iterator<Item = (f64, f64)> + Clone) -> Option<(f64, f64)> {
    let n = points.clone().count() as f64;
    if n < 2.0 {
        return None;
    }
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points.fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Initial `(a, b)` when too few points lie strictly between 0 and 1 for the
/// logit regression: midpoint where the data crosses 1/2, slope from the span.
fn crossing_guess(points: &[(f64, f64)]) -> (f64, f64) {
    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let n = sorted.len();
    let half = n / 2;
    let left: f64 = sorted[..half.max(1)].iter().map(|p| p.1).sum::<f64>() / half.max(1) as f64;
    let right: f64 = sorted[half..].iter().map(|p| p.1).sum::<f64>() / (n - half) as f64;
    let decreasing = left >= right;
    let span = (sorted[n - 1].0 - sorted[0].0).max(f64::EPSILON);
    let mut b = 0.5 * (sorted[0].0 + sorted[n - 1].0);
    for w in sorted.windows(2) {
        let (above0, above1) = (w[0].1 >= 0.5, w[1].1 >= 0.5);
        if above0 != above1 {
            b = 0.5 * (w[0].0 + w[1].0);
            break;
        }
    }
    let a = 10.0 / span;
    (if decreasing { a } else { -a }, b)
}

/// Fits the logistic curve by logit regression followed by
/// Levenberg-damped Gauss-Newton on the untransformed residuals.
///
/// Points exactly at 0 or 1 are excluded from the logit stage only.
pub fn fit_sigmoid(points: &[(f64, f64)]) -> Result<SigmoidFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegenerateData("non-finite point".into()));
    }
    if points.iter().all(|p| p.1 <= 0.0) || points.iter().all(|p| p.1 >= 1.0) {
        return Err(Error::DegenerateData("all points saturated at 0 or all at 1".into()));
    }
    let interior = points
        .iter()
        .filter(|p| p.1 > 0.0 && p.1 < 1.0)
        .map(|&(x, y)| (x, (1.0 / y - 1.0).ln()));
    let (mut a, mut b) = match linear_regression(interior.clone()) {
        Some((slope, intercept)) if interior.count() >= 3 && slope != 0.0 => (slope, -intercept / slope),
        _ => crossing_guess(points),
    };

    let mut sse = sigmoid_sse(a, b, points);
    let mut lambda = 1e-3;
    for _ in 0..1000 {
        // Normal equations of the 2-parameter problem.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y) in points {
            let f = sigmoid(a, b, x);
            let d = f * (1.0 - f);
            let da = -d * (x - b);
            let db = d * a;
            let r = f - y;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (maa, mbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = maa * mbb - jab * jab;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(mbb * ga - jab * gb) / det;
            let step_b = -(maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let nsse = sigmoid_sse(na, nb, points);
            if nsse <= sse {
                let converged = step_a.abs() <= 1e-13 * (1.0 + a.abs()) && step_b.abs() <= 1e-13 * (1.0 + b.abs());
                a = na;
                b = nb;
                sse = nsse;
                lambda = (lambda * 0.1).max(1e-15);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateData("sigmoid fit diverged".into()));
    }
    Ok(SigmoidFit { a, b, residual: sse })
}

/// `y = a (x - b)^c`, fitted over `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sum of squared errors of `ln y` over the window.
    pub residual: f64,
    pub window: [f64; 2],
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * (x - self.b).powf(self.c)
    }
}

/// Log-log regression at a fixed offset; returns `(ln a, c, sse)`.
fn log_log_at(offset: f64, points: &[(f64, f64)]) -> (f64, f64, f64) {
    let logs = points.iter().map(|&(x, y)| ((x - offset).ln(), y.ln()));
    let (c, ln_a) = linear_regression(logs.clone()).unwrap_or((0.0, 0.0));
    let sse = logs.map(|(lx, ly)| (ly - ln_a - c * lx).powi(2)).sum();
    (ln_a, c, sse)
}

const OFFSET_SCAN_STEPS: usize = 200;

/// Fits the offset power law on the points of `curve` inside `window`.
///
/// The offset is scanned over `[0, t_min)` and refined by golden-section
/// search; for each candidate the amplitude and exponent come from linear
/// regression of `ln y` on `ln(x - b)`.
pub fn fit_power_law(curve: &[(f64, f64)], window: [f64; 2]) -> Result<PowerLawFit> {
    let [t_min, t_max] = window;
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::invalid("window", format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    let points: Vec<(f64, f64)> = curve.iter().copied().filter(|p| p.0 >= t_min && p.0 <= t_max).collect();
    if let Some(&(x, value)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NonPositive { x, value });
    }
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if distinct < 3 {
        return Err(Error::DegenerateData(format!(
            "need at least 3 distinct x values in the window, got {distinct}"
        )));
    }
    let x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let upper = x_min.min(t_min);
    let step = upper / OFFSET_SCAN_STEPS as f64;
    let sse_at = |b: f64| log_log_at(b, &points).2;
    let mut best = 0;
    let mut best_sse = f64::INFINITY;
    for k in 0..OFFSET_SCAN_STEPS {
        let s = sse_at(k as f64 * step);
        if s < best_sse {
            best_sse = s;
            best = k;
        }
    }
    // Golden-section refinement inside the neighbouring scan cells.
    let mut lo = best.saturating_sub(1) as f64 * step;
    let mut hi = ((best + 1) as f64 * step).min(upper * (1.0 - 1e-9));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (sse_at(x1), sse_at(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = sse_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = sse_at(x2);
        }
    }
    let mut b = 0.5 * (lo + hi);
    if sse_at(b) > best_sse {
        b = best as f64 * step;
    }
    let (ln_a, c, residual) = log_log_at(b, &points);
    Ok(PowerLawFit {
        a: ln_a.exp(),
        b,
        c,
        residual,
        window,
    })
}

/// Polynomial with coefficients ordered from the highest degree down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub coefficients: Vec<f64>,
    pub degree: usize,
    pub residual: f64,
}

impl PolynomialFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// Ordinary least-squares polynomial fit of the given degree.
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<PolynomialFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() <= degree {
        return Err(Error::Underdetermined {
            points: xs.len(),
            degree,
        });
    }
    let n = points.len();
    let vandermonde = DMatrix::from_fn(n, degree + 1, |i, j| points[i].0.powi((degree - j) as i32));
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let solution = vandermonde
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::DegenerateData(e.to_string()))?;
    let fit = PolynomialFit {
        coefficients: solution.iter().copied().collect(),
        degree,
        residual: 0.0,
    };
    let residual = points.iter().map(|&(x, y)| (fit.eval(x) - y).powi(2)).sum();
    Ok(PolynomialFit { residual, ..fit })
}
