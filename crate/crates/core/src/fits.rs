//! Deterministic curve fits for scrambling time, relaxation exponent, light
//! cone and early-time growth. Every fit records the data window it used.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::diffusion_prediction;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    /// Row-major covariance of the fitted parameters, in the order of
    /// `param_order`.
    pub covariance: Vec<Vec<f64>>,
    pub param_order: Vec<String>,
    pub residual_norm: f64,
    pub residuals: Vec<f64>,
    /// Inclusive range of the independent variable that entered the fit.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }
}

/// Ordinary least-squares line `y = a + b x`.
#[derive(Clone, Debug)]
struct Line {
    intercept: f64,
    slope: f64,
    cov: [[f64; 2]; 2],
    residuals: Vec<f64>,
    r_squared: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<Line> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::FitFailure(format!("need at least 2 points for a line, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - intercept - slope * x).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let tss: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let s2 = if n > 2 { rss / (nf - 2.0) } else { 0.0 };
    let var_b = s2 / sxx;
    let var_a = s2 * (1.0 / nf + mx * mx / sxx);
    let cov_ab = -mx * s2 / sxx;
    Ok(Line {
        intercept,
        slope,
        cov: [[var_a, cov_ab], [cov_ab, var_b]],
        residuals,
        r_squared,
    })
}

fn span(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Iteration cap for the arctan fit.
pub const ARCTAN_MAX_ITER: usize = 500;
/// Gradient norm at which the arctan fit counts as converged.
pub const ARCTAN_GRADIENT_TOL: f64 = 1e-8;

/// `D(t) = D_inf * atan(t / t_S)` by Levenberg-Marquardt with an analytic
/// Jacobian, started from `D_inf = max D` and `t_S` at half maximum.
pub fn fit_arctan(ts: &[f64], ds: &[f64]) -> Result<FitResult> {
    if ts.len() != ds.len() {
        return Err(Error::InvalidArgument("time and value series differ in length".into()));
    }
    if ts.len() < 6 {
        return Err(Error::FitFailure(format!("arctan fit needs at least 6 points, got {}", ts.len())));
    }
    if ts.iter().any(|&t| !(t > 0.0)) || ds.iter().any(|d| !d.is_finite()) {
        return Err(Error::FitFailure("arctan fit needs positive times and finite values".into()));
    }
    let dmax = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(dmax > 0.0) {
        return Err(Error::FitFailure("degenerate series: maximum is not positive".into()));
    }
    let half = half_max_time(ts, ds, dmax);
    let mut p = Vector2::new(dmax, half);

    let residuals = |p: &Vector2<f64>| -> DVector<f64> {
        DVector::from_iterator(ts.len(), ts.iter().zip(ds).map(|(&t, &d)| d - p[0] * (t / p[1]).atan()))
    };
    let jacobian = |p: &Vector2<f64>| -> DMatrix<f64> {
        // derivatives of the model, not of the residual
        DMatrix::from_fn(ts.len(), 2, |i, c| {
            let t = ts[i];
            if c == 0 {
                (t / p[1]).atan()
            } else {
                -p[0] * t / (p[1] * p[1] + t * t)
            }
        })
    };

    let mut r = residuals(&p);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..ARCTAN_MAX_ITER {
        iterations = it + 1;
        let j = jacobian(&p);
        let jtj: Matrix2<f64> = (j.transpose() * &j).fixed_view::<2, 2>(0, 0).into();
        let g: Vector2<f64> = (j.transpose() * &r).fixed_view::<2, 1>(0, 0).into();
        if g.norm() < ARCTAN_GRADIENT_TOL {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e20 {
            let mut a = jtj;
            a[(0, 0)] *= 1.0 + lambda;
            a[(1, 1)] *= 1.0 + lambda;
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            if trial[1] > 0.0 && trial.iter().all(|x| x.is_finite()) {
                let rt = residuals(&trial);
                let ct = rt.norm_squared();
                if ct <= cost {
                    let stalled = (trial - p).norm() <= f64::EPSILON * p.norm();
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = !stalled;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // no representable step lowers the cost: accept if at a stationary point
            let j = jacobian(&p);
            converged = (j.transpose() * &r).norm() < ARCTAN_GRADIENT_TOL;
            break;
        }
    }
    if !converged {
        return Err(Error::FitFailure(format!(
            "arctan fit did not reach gradient norm {ARCTAN_GRADIENT_TOL} within {ARCTAN_MAX_ITER} iterations"
        )));
    }

    let j = jacobian(&p);
    let n = ts.len() as f64;
    let s2 = cost / (n - 2.0);
    let cov = (j.transpose() * &j)
        .try_inverse()
        .map(|m| m * s2)
        .unwrap_or_else(|| DMatrix::from_element(2, 2, f64::NAN));
    let mean = ds.iter().sum::<f64>() / n;
    let tss: f64 = ds.iter().map(|d| (d - mean).powi(2)).sum();
    let mut params = BTreeMap::new();
    params.insert("D_inf".to_string(), p[0]);
    params.insert("t_S".to_string(), p[1]);
    Ok(FitResult {
        params,
        covariance: (0..2).map(|i| (0..2).map(|k| cov[(i, k)]).collect()).collect(),
        param_order: vec!["D_inf".into(), "t_S".into()],
        residual_norm: cost.sqrt(),
        residuals: r.iter().copied().collect(),
        window: span(ts),
        r_squared: if tss > 0.0 { 1.0 - cost / tss } else { 1.0 },
        points: ts.len(),
        iterations,
    })
}

// First time at which the series reaches half of its maximum, interpolated.
fn half_max_time(ts: &[f64], ds: &[f64], dmax: f64) -> f64 {
    let target = 0.5 * dmax;
    for i in 0..ts.len() {
        if ds[i] >= target {
            if i == 0 {
                return ts[0];
            }
            let (t0, t1, d0, d1) = (ts[i - 1], ts[i], ds[i - 1], ds[i]);
            return t0 + (target - d0) * (t1 - t0) / (d1 - d0);
        }
    }
    ts[ts.len() - 1]
}

/// Log-log regression `ln y = c + e ln t` over `t_min <= t <= t_max`, with
/// `t_r = exp(-c / e)` so that `y = (t_r / t)^{-e}`.
pub fn fit_powerlaw(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<FitResult> {
    if ts.len() != ys.len() {
        return Err(Error::InvalidArgument("time and value series differ in length".into()));
    }
    let picked: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, y)| (*t, *y))
        .collect();
    if picked.iter().any(|&(t, y)| !(t > 0.0) || !(y > 0.0)) {
        return Err(Error::FitFailure("power-law window contains non-positive values".into()));
    }
    let xs: Vec<f64> = picked.iter().map(|p| p.0.ln()).collect();
    let ls: Vec<f64> = picked.iter().map(|p| p.1.ln()).collect();
    let line = linear_fit(&xs, &ls)?;
    let mut params = BTreeMap::new();
    params.insert("exponent".to_string(), line.slope);
    params.insert("intercept".to_string(), line.intercept);
    if line.slope != 0.0 {
        params.insert("t_r".to_string(), (-line.intercept / line.slope).exp());
    }
    Ok(FitResult {
        params,
        covariance: vec![
            vec![line.cov[0][0], line.cov[0][1]],
            vec![line.cov[1][0], line.cov[1][1]],
        ],
        param_order: vec!["intercept".into(), "exponent".into()],
        residual_norm: line.residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        residuals: line.residuals,
        window: span(&picked.iter().map(|p| p.0).collect::<Vec<_>>()),
        r_squared: line.r_squared,
        points: picked.len(),
        iterations: 0,
    })
}

/// First time at which `series` reaches `threshold`, linearly interpolated
/// between grid points.
pub fn first_crossing(ts: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    for i in 0..ts.len() {
        if series[i] >= threshold {
            if i == 0 {
                return Some(ts[0]);
            }
            let (t0, t1, g0, g1) = (ts[i - 1], ts[i], series[i - 1], series[i]);
            return Some(t0 + (threshold - g0) * (t1 - t0) / (g1 - g0));
        }
    }
    None
}

/// Front speed from first-crossing times. `g[s][k]` is the signal at
/// `positions[s]` and time `ts[k]`; `v_B` is the least-squares slope of
/// position against crossing time.
pub fn extract_butterfly_velocity(ts: &[f64], positions: &[f64], g: &[Vec<f64>], threshold: f64) -> Result<FitResult> {
    if positions.len() != g.len() || g.iter().any(|row| row.len() != ts.len()) {
        return Err(Error::InvalidArgument("signal matrix shape does not match the grids".into()));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    let mut xs = Vec::new();
    let mut ds = Vec::new();
    for (row, &d) in g.iter().zip(positions) {
        if let Some(tc) = first_crossing(ts, row, threshold) {
            xs.push(tc);
            ds.push(d);
        }
    }
    if xs.len() < 3 {
        return Err(Error::FitFailure(format!("only {} sites cross the threshold", xs.len())));
    }
    let line = linear_fit(&xs, &ds)?;
    let mut params = BTreeMap::new();
    params.insert("v_B".to_string(), line.slope);
    params.insert("offset".to_string(), line.intercept);
    params.insert("threshold".to_string(), threshold);
    Ok(FitResult {
        params,
        covariance: vec![
            vec![line.cov[0][0], line.cov[0][1]],
            vec![line.cov[1][0], line.cov[1][1]],
        ],
        param_order: vec!["offset".into(), "v_B".into()],
        residual_norm: line.residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        residuals: line.residuals,
        window: span(&xs),
        r_squared: line.r_squared,
        points: xs.len(),
        iterations: 0,
    })
}

/// Default band of `G` values treated as early-time growth.
pub const LYAPUNOV_WINDOW: (f64, f64) = (1e-6, 1e-2);

/// Pooled slope of `log10 G` against `t - d / v_B` over all points with
/// `G` inside `band`. `distances[s]` is the distance of row `s` from the
/// perturbed site. The reported `lambda_L` is that base-10 slope;
/// `lambda_L_natural` is the same rate in natural-log units.
pub fn fit_lyapunov(ts: &[f64], distances: &[f64], g: &[Vec<f64>], v_b: f64, band: (f64, f64)) -> Result<FitResult> {
    if distances.len() != g.len() || g.iter().any(|row| row.len() != ts.len()) {
        return Err(Error::InvalidArgument("signal matrix shape does not match the grids".into()));
    }
    if !(v_b > 0.0) {
        return Err(Error::FitFailure(format!("butterfly velocity {v_b} is not positive")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, &d) in g.iter().zip(distances) {
        for (&t, &val) in ts.iter().zip(row) {
            if val >= band.0 && val <= band.1 {
                xs.push(t - d / v_b);
                ys.push(val.log10());
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::FitFailure("no points inside the growth window".into()));
    }
    let line = linear_fit(&xs, &ys)?;
    if !(line.slope > 0.0) {
        return Err(Error::FitFailure(format!("no growth inside the window (slope {})", line.slope)));
    }
    let mut params = BTreeMap::new();
    params.insert("lambda_L".to_string(), line.slope);
    params.insert("lambda_L_natural".to_string(), line.slope * std::f64::consts::LN_10);
    params.insert("intercept".to_string(), line.intercept);
    params.insert("v_B".to_string(), v_b);
    Ok(FitResult {
        params,
        covariance: vec![
            vec![line.cov[0][0], line.cov[0][1]],
            vec![line.cov[1][0], line.cov[1][1]],
        ],
        param_order: vec!["intercept".into(), "lambda_L".into()],
        residual_norm: line.residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        residuals: line.residuals,
        window: span(&xs),
        r_squared: line.r_squared,
        points: xs.len(),
        iterations: 0,
    })
}

/// Diffusion constant matching late-time site averages of `sqrt(<n_j>)` to
/// [`diffusion_prediction`], by golden-section search on `ln D` over
/// `[1e-6, 1e6]`.
pub fn fit_diffusion_constant(particles: usize, len: usize, ts: &[f64], values: &[f64]) -> Result<FitResult> {
    if ts.len() != values.len() || ts.is_empty() {
        return Err(Error::InvalidArgument("need matching, nonempty series".into()));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::FitFailure("diffusion fit needs positive times".into()));
    }
    let cost = |ln_d: f64| -> f64 {
        let d = ln_d.exp();
        ts.iter()
            .zip(values)
            .map(|(&t, &v)| (v - diffusion_prediction(particles, len, d, t)).powi(2))
            .sum()
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-6f64.ln(), 1e6f64.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    let mut iterations = 0;
    while b - a > 1e-10 {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = cost(d);
        }
    }
    let best = 0.5 * (a + b);
    let dc = best.exp();
    let residuals: Vec<f64> = ts
        .iter()
        .zip(values)
        .map(|(&t, &v)| v - diffusion_prediction(particles, len, dc, t))
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let tss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let mut params = BTreeMap::new();
    params.insert("D".to_string(), dc);
    Ok(FitResult {
        params,
        covariance: vec![vec![f64::NAN]],
        param_order: vec!["D".into()],
        residual_norm: rss.sqrt(),
        residuals,
        window: span(ts),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        points: ts.len(),
        iterations,
    })
}
