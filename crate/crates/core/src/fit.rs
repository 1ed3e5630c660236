//! Least-squares fits of the leading-order ACV / PSD templates.
//!
//! The parameters `θ = (r, α, λ, σ)` are optimized in log space with
//! Nelder–Mead: one descent from the initial guess, then a fixed schedule of
//! jittered restarts from the best point so far. α₀ does not enter the
//! templates and is reported equal to α.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{acv_formula, psd_unchecked, AcvEstimate, PsdEstimate};
use crate::error::{Error, Result};
use crate::hopf::HopfParams;
use crate::rng::NoiseStream;

/// Number of jittered restarts after the first descent.
pub const RESTARTS: usize = 5;

/// ACV fits stop at the lag where the empirical envelope first drops below
/// this fraction of ACV(0).
pub const ACV_ENVELOPE_CUTOFF: f64 = 0.05;

const JITTER_SEED: u64 = 0x5EED_F17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Acv,
    Psd,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acv" => Ok(Target::Acv),
            "psd" => Ok(Target::Psd),
            other => Err(Error::Config(format!("unknown fit target '{other}' (acv|psd)"))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Acv => "acv",
            Target::Psd => "psd",
        })
    }
}

/// Parameter box, each entry `(lower, upper)` in the order `r, α, λ, σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds(pub [(f64, f64); 4]);

impl Bounds {
    /// Wide box around a guess: α within a factor 5, everything else 1e3.
    pub fn around(guess: &HopfParams) -> Self {
        let sigma = guess.sigma.max(1e-3 * guess.r * guess.alpha.sqrt());
        Bounds([
            (guess.r * 1e-3, guess.r * 1e3),
            (guess.alpha / 5.0, guess.alpha * 5.0),
            (guess.lambda_ * 1e-3, guess.lambda_ * 1e3),
            (sigma * 1e-3, sigma * 1e3),
        ])
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in self.0 {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Config(format!("invalid parameter bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitProblem {
    pub target: Target,
    /// Lags (ACV) or angular frequencies (PSD).
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bounds: Option<Bounds>,
    pub initial: Option<HopfParams>,
}

impl FitProblem {
    pub fn acv(curve: &AcvEstimate) -> Self {
        Self {
            target: Target::Acv,
            grid: curve.lags.clone(),
            values: curve.values.clone(),
            bounds: None,
            initial: None,
        }
    }

    pub fn psd(curve: &PsdEstimate) -> Self {
        Self {
            target: Target::Psd,
            grid: curve.omegas.clone(),
            values: curve.values.clone(),
            bounds: None,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.len() != self.values.len() {
            return Err(Error::Config("fit curve is empty or ragged".into()));
        }
        if self.grid.iter().chain(&self.values).any(|v| !v.is_finite()) {
            return Err(Error::Config("fit curve contains non-finite values".into()));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        if let Some(p) = &self.initial {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub r: f64,
    pub alpha: f64,
    #[serde(rename = "lambda")]
    pub lambda_: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    /// σ²/ACV(0), ACV(0) from the fitted template.
    pub sigma_sq_over_acv0: f64,
    /// λ/2, the Lyapunov exponent of the focus.
    pub focal_lyapunov: f64,
    pub period: f64,
    pub nsr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FittedParams,
    /// Sum of squared errors on the fitted grid.
    pub residual: f64,
    pub derived: Derived,
    pub target: Target,
    pub n_points: usize,
    /// Best residual after the first descent and after each restart.
    #[serde(skip)]
    pub restart_residuals: Vec<f64>,
}

impl FitResult {
    /// Fitted parameters as [`HopfParams`] with α₀ = α.
    pub fn hopf_params(&self) -> HopfParams {
        let FittedParams {
            r,
            alpha,
            lambda_,
            sigma,
        } = self.params;
        HopfParams {
            alpha,
            alpha0: alpha,
            lambda_,
            r,
            sigma,
        }
    }
}

/// σ²/ACV(0), λ/2, 2π/α and NSR of a parameter set.
pub fn derived_quantities(params: &HopfParams) -> Derived {
    let acv0 = acv_formula(params, 0.0);
    Derived {
        sigma_sq_over_acv0: params.sigma * params.sigma / acv0,
        focal_lyapunov: params.lambda_ / 2.0,
        period: 2.0 * PI / params.alpha,
        nsr: (params.sigma * params.sigma / (2.0 * params.lambda_)).sqrt() / params.r,
    }
}

fn zero_crossings(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) {
            if b == 0.0 && k + 1 < values.len() && values[k + 1].signum() == a.signum() {
                continue;
            }
            let t = a / (a - b);
            out.push(grid[k - 1] + t * (grid[k] - grid[k - 1]));
        }
    }
    out
}

/// Least-squares slope and intercept.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Heuristic starting point. ACV: α from zero-crossing spacing, σ from the
/// log-envelope decay of the half-period peaks (`(σ/r)²/2`), r and NSR from
/// the envelope intercept against ACV(0). PSD: α at the peak, `(σ/r)²` from
/// twice the half width at half maximum, `r` from the area; λ defaults to α.
pub fn initial_guess(grid: &[f64], values: &[f64], target: Target) -> Result<HopfParams> {
    if grid.len() < 16 || grid.len() != values.len() {
        return Err(Error::GuessFailure(format!(
            "need at least 16 curve points, got {}",
            grid.len()
        )));
    }
    match target {
        Target::Acv => acv_guess(grid, values),
        Target::Psd => psd_guess(grid, values),
    }
}

fn acv_guess(lags: &[f64], values: &[f64]) -> Result<HopfParams> {
    let c0 = values[0];
    if !(c0 > 0.0) {
        return Err(Error::GuessFailure("ACV(0) is not positive".into()));
    }
    let zc = zero_crossings(lags, values);
    let alpha = match zc.len() {
        0 => {
            return Err(Error::GuessFailure(
                "no zero crossings: the autocovariance is not oscillatory".into(),
            ))
        }
        1 => PI / (2.0 * zc[0]),
        n => PI * (n - 1) as f64 / (zc[n - 1] - zc[0]),
    };
    // |ACV| maxima in windows of half a period centred on u = jπ/α.
    let half = PI / alpha;
    let mut us = Vec::new();
    let mut logs = Vec::new();
    for j in 1.. {
        let centre = j as f64 * half;
        let (lo, hi) = (centre - 0.5 * half, centre + 0.5 * half);
        if hi > *lags.last().unwrap() {
            break;
        }
        let best = lags
            .iter()
            .zip(values)
            .filter(|(u, _)| **u >= lo && **u < hi)
            .map(|(u, v)| (*u, v.abs()))
            .fold((0.0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        if best.1 < ACV_ENVELOPE_CUTOFF * c0 {
            break;
        }
        us.push(best.0);
        logs.push(best.1.ln());
    }
    let (decay, intercept) = if us.len() >= 2 {
        let (s, i) = line_fit(&us, &logs);
        ((-s).max(0.0), i.exp())
    } else {
        (0.0, c0)
    };
    let amp = intercept.min(c0);
    let r = (2.0 * amp).sqrt();
    let sigma = r * (2.0 * decay).sqrt();
    let nsr2 = (c0 / amp - 1.0).max(0.0);
    let lambda_ = if sigma > 0.0 && nsr2 > 1e-6 {
        (sigma * sigma / (2.0 * r * r * nsr2)).clamp(0.1 * alpha, 10.0 * alpha)
    } else {
        alpha
    };
    Ok(HopfParams {
        alpha,
        alpha0: alpha,
        lambda_,
        r,
        sigma,
    })
}

fn psd_guess(omegas: &[f64], values: &[f64]) -> Result<HopfParams> {
    let (kp, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if kp == 0 || kp == values.len() - 1 || !(peak > 0.0) {
        return Err(Error::GuessFailure(
            "no interior spectral peak: the spectrum is not oscillatory".into(),
        ));
    }
    let alpha = omegas[kp];
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = kp;
        for k in range {
            if values[k] <= 0.5 * peak {
                let t = (values[prev] - 0.5 * peak) / (values[prev] - values[k]);
                return Some(omegas[prev] + t * (omegas[k] - omegas[prev]));
            }
            prev = k;
        }
        None
    };
    let right = crossing(&mut (kp + 1..values.len()));
    let left = crossing(&mut (0..kp).rev());
    let hwhm = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => alpha - l,
        (None, Some(r)) => r - alpha,
        (None, None) => return Err(Error::GuessFailure("spectral peak has no half width".into())),
    }
    .abs()
    .max(1e-12);
    let area: f64 = omegas
        .windows(2)
        .zip(values.windows(2))
        .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
        .sum();
    let r = (2.0 * area.max(0.0) / PI).sqrt();
    let sigma = r * (2.0 * hwhm).sqrt();
    Ok(HopfParams {
        alpha,
        alpha0: alpha,
        lambda_: alpha,
        r,
        sigma,
    })
}

/// Index one past the last ACV lag kept: the first local maximum of `|ACV|`
/// below [`ACV_ENVELOPE_CUTOFF`]·ACV(0) ends the range.
pub fn acv_fit_range(values: &[f64]) -> usize {
    let c0 = values[0].abs();
    let a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    for k in 1..a.len().saturating_sub(1) {
        if a[k] >= a[k - 1] && a[k] >= a[k + 1] && a[k] < ACV_ENVELOPE_CUTOFF * c0 {
            return k + 1;
        }
    }
    values.len()
}

fn template(target: Target, p: &HopfParams, x: f64) -> f64 {
    match target {
        Target::Acv => acv_formula(p, x),
        Target::Psd => psd_unchecked(p, x),
    }
}

fn params_from(theta: &[f64; 4]) -> HopfParams {
    let [r, alpha, lambda_, sigma] = theta.map(f64::exp);
    HopfParams {
        alpha,
        alpha0: alpha,
        lambda_,
        r,
        sigma,
    }
}

struct Objective<'a> {
    target: Target,
    grid: &'a [f64],
    values: &'a [f64],
    log_bounds: [(f64, f64); 4],
    scale: f64,
}

impl Objective<'_> {
    fn clamp(&self, theta: &mut [f64; 4]) {
        for (t, (lo, hi)) in theta.iter_mut().zip(self.log_bounds) {
            *t = t.clamp(lo, hi);
        }
    }

    fn sse(&self, theta: &[f64; 4]) -> f64 {
        let p = params_from(theta);
        self.grid
            .iter()
            .zip(self.values)
            .map(|(x, y)| (template(self.target, &p, *x) - y).powi(2))
            .sum()
    }

    /// Objective normalized by `Σ y²` for scale-free tolerances.
    fn eval(&self, theta: &[f64; 4]) -> f64 {
        let v = self.sse(theta) / self.scale;
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    }
}

struct Descent {
    theta: [f64; 4],
    value: f64,
    converged: bool,
}

fn nelder_mead(obj: &Objective, start: [f64; 4], step: f64, max_iter: usize) -> Descent {
    const FTOL: f64 = 1e-15;
    const XTOL: f64 = 1e-11;
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    let mut s0 = start;
    obj.clamp(&mut s0);
    simplex.push((s0, obj.eval(&s0)));
    for i in 0..4 {
        let mut v = s0;
        v[i] += step;
        obj.clamp(&mut v);
        if v[i] == s0[i] {
            v[i] -= 2.0 * step;
            obj.clamp(&mut v);
        }
        simplex.push((v, obj.eval(&v)));
    }
    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[4].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (worst - best) <= FTOL * (best.abs() + 1e-300) || (diameter < XTOL && worst - best <= 1e-12 * (best + 1e-300)) || worst - best < 1e-30 {
            converged = true;
            break;
        }
        let mut centroid = [0.0; 4];
        for (v, _) in &simplex[..4] {
            for i in 0..4 {
                centroid[i] += v[i] / 4.0;
            }
        }
        let along = |t: f64| {
            let mut p = [0.0; 4];
            for i in 0..4 {
                p[i] = centroid[i] + t * (simplex[4].0[i] - centroid[i]);
            }
            obj.clamp(&mut p);
            let f = obj.eval(&p);
            (p, f)
        };
        let refl = along(-1.0);
        if refl.1 < simplex[0].1 {
            let exp = along(-2.0);
            simplex[4] = if exp.1 < refl.1 { exp } else { refl };
        } else if refl.1 < simplex[3].1 {
            simplex[4] = refl;
        } else {
            let contr = if refl.1 < simplex[4].1 { along(-0.5) } else { along(0.5) };
            if contr.1 < simplex[4].1.min(refl.1) {
                simplex[4] = contr;
            } else {
                let b = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let mut p = [0.0; 4];
                    for i in 0..4 {
                        p[i] = b[i] + 0.5 * (entry.0[i] - b[i]);
                    }
                    obj.clamp(&mut p);
                    *entry = (p, obj.eval(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Descent {
        theta: simplex[0].0,
        value: simplex[0].1,
        converged,
    }
}

/// Minimizes `Σ (template(θ, x_k) − y_k)²`. Deterministic for a given problem.
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let end = match problem.target {
        Target::Acv => acv_fit_range(&problem.values),
        Target::Psd => problem.values.len(),
    };
    let grid = &problem.grid[..end];
    let values = &problem.values[..end];
    let guess = match problem.initial {
        Some(p) => p,
        None => initial_guess(&problem.grid, &problem.values, problem.target)?,
    };
    let bounds = problem.bounds.unwrap_or_else(|| Bounds::around(&guess));
    bounds.validate()?;
    let log_bounds = bounds.0.map(|(lo, hi)| (lo.ln(), hi.ln()));
    let scale = values.iter().map(|y| y * y).sum::<f64>();
    if !(scale > 0.0) {
        return Err(Error::Config("fit curve is identically zero".into()));
    }
    let obj = Objective {
        target: problem.target,
        grid,
        values,
        log_bounds,
        scale,
    };
    let floor_sigma = guess.sigma.max(bounds.0[3].0);
    let start = [
        guess.r.ln(),
        guess.alpha.ln(),
        guess.lambda_.ln(),
        floor_sigma.ln(),
    ];

    let mut best = nelder_mead(&obj, start, 0.1, 4000);
    let mut converged = best.converged;
    let mut history = vec![best.value];
    let mut jitter = NoiseStream::new(JITTER_SEED);
    for _ in 0..RESTARTS {
        let mut s = best.theta;
        for t in s.iter_mut() {
            *t += 0.1 * jitter.normal();
        }
        let d = nelder_mead(&obj, s, 0.05, 4000);
        converged |= d.converged;
        if d.value < best.value {
            best = d;
        }
        history.push(best.value);
    }
    let polished = nelder_mead(&obj, best.theta, 0.01, 4000);
    if polished.value < best.value {
        converged |= polished.converged;
        best = polished;
        *history.last_mut().unwrap() = best.value;
    }

    let params = params_from(&best.theta);
    let result = FitResult {
        params: FittedParams {
            r: params.r,
            alpha: params.alpha,
            lambda_: params.lambda_,
            sigma: params.sigma,
        },
        residual: obj.sse(&best.theta),
        derived: derived_quantities(&params),
        target: problem.target,
        n_points: grid.len(),
        restart_residuals: history.iter().map(|v| v * scale).collect(),
    };
    if !converged {
        return Err(Error::Convergence {
            restarts: RESTARTS,
            best: Box::new(result),
        });
    }
    Ok(result)
}
