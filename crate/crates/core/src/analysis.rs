//! Estimators (autocovariance, averaged periodogram, kernel density,
//! kurtosis) and the leading-order Hopf templates.
//!
//! Spectral convention: `PSD(ω) = ∫ ACV(u) e^{−iωu} du` over all of ℝ, so that
//! `∫ PSD dω = 2π ACV(0)`. Estimates are reported for `ω ≥ 0` only; the
//! one-sided density in the `∫₀^∞ S₁ dω = ACV(0)` sense is `S₁ = PSD/π`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::HopfParams;
use crate::parallel::{map_indexed, Parallelism};

/// FFT is used for the autocovariance once `N · lags` exceeds this.
const DIRECT_ACV_WORK: usize = 1 << 22;

/// Relative envelope level at which Wiener–Khintchine quadrature is truncated.
const WK_TRUNCATION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcvEstimate {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

impl PsdEstimate {
    /// `(1/π) ∫₀^ω_max PSD dω`, i.e. the variance the spectrum accounts for.
    pub fn variance(&self) -> f64 {
        trapezoid(&self.omegas, &self.values) / PI
    }

    /// Location and value of the largest entry with `ω > 0`.
    pub fn peak(&self) -> (f64, f64) {
        self.omegas
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w > 0.0)
            .fold((0.0, f64::NEG_INFINITY), |best, (&w, &v)| {
                if v > best.1 {
                    (w, v)
                } else {
                    best
                }
            })
    }
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

/// Windowing applied before the periodogram.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Window {
    #[default]
    Rectangular,
    /// Hann taper, normalized so white noise keeps its level.
    Hann,
}

fn centered(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|x| x - mean).collect()
}

/// Biased sample autocovariance `(1/N) Σ (x_t − x̄)(x_{t+k} − x̄)` at lags
/// `k·dt ≤ max_lag`.
pub fn sample_acv(series: &[f64], dt: f64, max_lag: f64) -> Result<AcvEstimate> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Config("autocovariance needs at least 2 samples".into()));
    }
    if !(dt > 0.0) || !(max_lag >= 0.0) {
        return Err(Error::Config(format!(
            "need dt > 0 and max_lag >= 0 (got {dt}, {max_lag})"
        )));
    }
    if max_lag > n as f64 * dt / 2.0 {
        return Err(Error::Config(format!(
            "max_lag {max_lag} exceeds half the record length {}",
            n as f64 * dt / 2.0
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("series contains non-finite values".into()));
    }
    let lags = (max_lag / dt + 1e-9).floor() as usize;
    let x = centered(series);
    let values = if n.saturating_mul(lags + 1) <= DIRECT_ACV_WORK {
        (0..=lags)
            .map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
            .collect()
    } else {
        acv_fft(&x, lags)
    };
    Ok(AcvEstimate {
        lags: (0..=lags).map(|k| k as f64 * dt).collect(),
        values,
    })
}

fn acv_fft(x: &[f64], lags: usize) -> Vec<f64> {
    let n = x.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf[..=lags].iter().map(|c| c.re * scale).collect()
}

/// Mean over paths of `|DFT(x − x̄)|² dt / N` at `ω_k = 2πk/(N dt)`,
/// `k = 0..=N/2`.
pub fn averaged_periodogram(
    paths: &[Vec<f64>],
    dt: f64,
    window: Window,
    mode: Parallelism,
) -> Result<PsdEstimate> {
    let first = paths
        .first()
        .ok_or_else(|| Error::Config("periodogram of an empty ensemble".into()))?;
    let n = first.len();
    if n < 2 {
        return Err(Error::Config("paths need at least 2 samples".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if let Some(k) = paths.iter().position(|p| p.len() != n) {
        return Err(Error::Config(format!(
            "path {k} has {} samples, expected {n}",
            paths[k].len()
        )));
    }
    let taper: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
            .collect(),
    };
    let power: f64 = taper.iter().map(|w| w * w).sum();
    let half = n / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let spectra = map_indexed(paths.len(), mode, |k| {
        let x = centered(&paths[k]);
        let mut buf: Vec<Complex<f64>> = x
            .iter()
            .zip(&taper)
            .map(|(v, w)| Complex::new(v * w, 0.0))
            .collect();
        fft.process(&mut buf);
        buf[..=half]
            .iter()
            .map(|c| c.norm_sqr() * dt / power)
            .collect::<Vec<f64>>()
    });
    let mut values = vec![0.0; half + 1];
    for s in &spectra {
        for (acc, v) in values.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let m = paths.len() as f64;
    values.iter_mut().for_each(|v| *v /= m);
    Ok(PsdEstimate {
        omegas: (0..=half).map(|k| 2.0 * PI * k as f64 / (n as f64 * dt)).collect(),
        values,
    })
}

/// Leading-order autocovariance of `x`:
/// `(r²/2)[1 + NSR² e^{−λ|u|}] cos(αu) e^{−|u|(σ/r)²/2}`.
pub fn acv_formula(params: &HopfParams, u: f64) -> f64 {
    let u = u.abs();
    let s2 = (params.sigma / params.r).powi(2);
    let nsr2 = params.sigma * params.sigma / (2.0 * params.lambda_ * params.r * params.r);
    0.5 * params.r * params.r
        * (1.0 + nsr2 * (-params.lambda_ * u).exp())
        * (params.alpha * u).cos()
        * (-0.5 * u * s2).exp()
}

/// The non-oscillating factor of [`acv_formula`].
pub fn acv_envelope(params: &HopfParams, u: f64) -> f64 {
    let u = u.abs();
    let s2 = (params.sigma / params.r).powi(2);
    let nsr2 = params.sigma * params.sigma / (2.0 * params.lambda_ * params.r * params.r);
    0.5 * params.r * params.r * (1.0 + nsr2 * (-params.lambda_ * u).exp()) * (-0.5 * u * s2).exp()
}

/// Leading-order power spectral density, the Fourier transform of
/// [`acv_formula`]. With `s = σ/r` and `b = s² + 2λ`:
///
/// ```text
/// 2r²s² [4(α²+ω²) + s⁴] / ([4(α−ω)² + s⁴][4(α+ω)² + s⁴])
///   + NSR² 2r² b [4(α²+ω²) + b²] / ([4(α−ω)² + b²][4(α+ω)² + b²])
/// ```
pub fn psd_formula(params: &HopfParams, omega: f64) -> Result<f64> {
    if !(params.sigma > 0.0) {
        return Err(Error::DegenerateSpectrum(
            "sigma = 0: the spectrum is a pair of lines at ±alpha with weight pi r²/2 each"
                .into(),
        ));
    }
    Ok(psd_unchecked(params, omega))
}

pub(crate) fn psd_unchecked(params: &HopfParams, omega: f64) -> f64 {
    let HopfParams {
        alpha, lambda_, r, sigma, ..
    } = *params;
    let s2 = (sigma / r).powi(2);
    let s4 = s2 * s2;
    let b = s2 + 2.0 * lambda_;
    let b2 = b * b;
    let nsr2 = sigma * sigma / (2.0 * lambda_ * r * r);
    let sum = 4.0 * (alpha * alpha + omega * omega);
    let dm = 4.0 * (alpha - omega).powi(2);
    let dp = 4.0 * (alpha + omega).powi(2);
    let r2 = r * r;
    2.0 * r2 * s2 * (sum + s4) / ((dm + s4) * (dp + s4))
        + nsr2 * 2.0 * r2 * b * (sum + b2) / ((dm + b2) * (dp + b2))
}

/// OU autocovariance `(σ²/2λ) e^{−λ|u|}`.
pub fn ou_acv(sigma: f64, lambda_: f64, u: f64) -> f64 {
    sigma * sigma / (2.0 * lambda_) * (-lambda_ * u.abs()).exp()
}

/// OU spectrum `σ²/(λ² + ω²)` in the convention of this module.
pub fn ou_psd(sigma: f64, lambda_: f64, omega: f64) -> f64 {
    sigma * sigma / (lambda_ * lambda_ + omega * omega)
}

fn cosine_transform(lags: &[f64], values: &[f64], omegas: &[f64]) -> Vec<f64> {
    omegas
        .iter()
        .map(|&w| {
            let g: Vec<f64> = lags
                .iter()
                .zip(values)
                .map(|(u, v)| v * (w * u).cos())
                .collect();
            2.0 * trapezoid(lags, &g)
        })
        .collect()
}

/// `PSD(ω) = 2 ∫₀^U ACV(u) cos(ωu) du` by the trapezoid rule on the sampled lag
/// grid, with `U` the first lag beyond which `|ACV|` stays below 1e-6·ACV(0)
/// (the whole grid if it never does).
pub fn wk_transform(acv: &AcvEstimate, omegas: &[f64]) -> Result<PsdEstimate> {
    if acv.lags.len() < 2 || acv.lags.len() != acv.values.len() {
        return Err(Error::Config("autocovariance needs at least 2 lags".into()));
    }
    let c0 = acv.values[0];
    let mut end = acv.values.len();
    if c0 > 0.0 {
        // Suffix maximum of |ACV|: truncate once it is below the threshold.
        let mut tail = 0.0f64;
        for (k, v) in acv.values.iter().enumerate().rev() {
            tail = tail.max(v.abs());
            if tail >= WK_TRUNCATION * c0 {
                end = (k + 2).min(acv.values.len());
                break;
            }
        }
    }
    Ok(PsdEstimate {
        omegas: omegas.to_vec(),
        values: cosine_transform(&acv.lags[..end], &acv.values[..end], omegas),
    })
}

/// Wiener–Khintchine transform of an autocovariance given as a function.
/// `envelope` bounds `|acv|`; the lag grid `k·du` runs until it drops below
/// 1e-6 of its value at 0. Non-decaying envelopes are a divergence error.
pub fn wk_transform_fn<F, E>(acv: F, envelope: E, du: f64, omegas: &[f64]) -> Result<PsdEstimate>
where
    F: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    const MAX_LAGS: usize = 50_000_000;
    if !(du > 0.0) {
        return Err(Error::Config(format!("lag step must be positive, got {du}")));
    }
    let e0 = envelope(0.0);
    let mut lags = vec![0.0];
    let mut values = vec![acv(0.0)];
    if e0 > 0.0 {
        let mut k = 1usize;
        loop {
            let u = k as f64 * du;
            lags.push(u);
            values.push(acv(u));
            if envelope(u) < WK_TRUNCATION * e0 {
                break;
            }
            k += 1;
            if k > MAX_LAGS {
                return Err(Error::Divergent(
                    "autocovariance does not decay; the spectrum has line components".into(),
                ));
            }
        }
    } else {
        lags.push(du);
        values.push(acv(du));
    }
    Ok(PsdEstimate {
        omegas: omegas.to_vec(),
        values: cosine_transform(&lags, &values, omegas),
    })
}

/// [`wk_transform_fn`] applied to [`acv_formula`].
pub fn wk_transform_formula(params: &HopfParams, du: f64, omegas: &[f64]) -> Result<PsdEstimate> {
    if !(params.sigma > 0.0) {
        return Err(Error::Divergent(
            "sigma = 0: the template autocovariance does not decay".into(),
        ));
    }
    wk_transform_fn(
        |u| acv_formula(params, u),
        |u| acv_envelope(params, u),
        du,
        omegas,
    )
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = (x - mean) * (x - mean);
        (a + d, b + d * d)
    });
    (mean, m2 / n, m4 / n)
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < 30 {
        return Err(Error::Config(format!(
            "need at least 30 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("samples contain non-finite values".into()));
    }
    Ok(())
}

/// Silverman's rule `0.9 min(σ̂, IQR/1.34) N^{−1/5}`. Falls back to `σ̂` when
/// the IQR vanishes but the spread does not.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let (_, m2, _) = moments(samples);
    let sd = (m2 * n / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::DegenerateSample("samples have zero spread".into()));
    }
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Gaussian-kernel density at `points` with bandwidth `h`.
pub fn kde_at(samples: &[f64], h: f64, points: &[f64], mode: Parallelism) -> Vec<f64> {
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    let inv = 1.0 / h;
    map_indexed(points.len(), mode, |i| {
        let x = points[i];
        norm * samples
            .iter()
            .map(|s| {
                let z = (x - s) * inv;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
    })
}

/// Gaussian KDE with Silverman bandwidth on `grid_size` points spanning the
/// sample range padded by 4 bandwidths.
pub fn kde(samples: &[f64], grid_size: usize, mode: Parallelism) -> Result<DensityEstimate> {
    let h = silverman_bandwidth(samples)?;
    if grid_size < 2 {
        return Err(Error::Config("density grid needs at least 2 points".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (lo, hi) = (lo - 4.0 * h, hi + 4.0 * h);
    let step = (hi - lo) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| lo + i as f64 * step).collect();
    let density = kde_at(samples, h, &grid, mode);
    Ok(DensityEstimate {
        grid,
        density,
        bandwidth: h,
    })
}

/// Non-excess kurtosis `m₄ / m₂²`.
pub fn kurtosis(samples: &[f64]) -> Result<f64> {
    check_samples(samples)?;
    let (_, m2, m4) = moments(samples);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("samples have zero variance".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let (num, den) = a
        .iter()
        .zip(b)
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - y).powi(2), d + y * y));
    (num / den).sqrt()
}
