//! Additive-noise Itô SDE integration: `dy = f(y) dt + S dW`.
//!
//! Two schemes are provided:
//!
//! * Euler–Maruyama, strong order 1 for additive noise;
//! * [`Scheme::StrongRK15`], a derivative-free Runge–Kutta scheme of strong
//!   (mean-square) order 3/2 for constant noise matrices. Per step of length
//!   `h` with `Ȳ = Y + f(Y) h` and `Ȳ±ʲ = Ȳ ± bʲ √h` (`bʲ` the j-th column of
//!   `S`, `m` columns):
//!
//!   ```text
//!   Y' = Y + S ΔW + Σⱼ [f(Ȳ+ʲ) − f(Ȳ−ʲ)] ΔZⱼ / (2√h)
//!          + h/4 Σⱼ [f(Ȳ+ʲ) + f(Ȳ−ʲ)] + h/2 f(Y) − (m−1)/2 h f(Ȳ)
//!   ```
//!
//!   where `ΔZⱼ = ∫ (Wⱼ(s) − Wⱼ(t)) ds` over the step. The finite
//!   differences reproduce the order-3/2 Itô–Taylor terms `∇f·S ΔZ` and
//!   `h²/2 (∇f·f + ½ Σⱼ ∇²f[bʲ,bʲ])`; with `S = 0` it reduces to Heun's method.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{try_map_indexed, Parallelism};
use crate::rng::{sub_seed, NoiseStream};

/// Component magnitude beyond which a path is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Deterministic part `f` of the SDE.
pub trait Drift: Send + Sync {
    fn dimension(&self) -> usize;

    fn eval(&self, state: &[f64], out: &mut [f64]);

    /// Analytic Jacobian, if known. Callers fall back to central differences.
    fn jacobian(&self, _state: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

/// Adapter turning a closure into a [`Drift`].
pub struct FnDrift<F> {
    dimension: usize,
    f: F,
}

impl<F> FnDrift<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> Drift for FnDrift<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, state: &[f64], out: &mut [f64]) {
        (self.f)(state, out)
    }
}

/// Drift, constant noise matrix and dimension of an additive-noise SDE.
#[derive(Clone)]
pub struct SdeSystem {
    drift: Arc<dyn Drift>,
    noise: DMatrix<f64>,
    isotropic_sigma: Option<f64>,
    // Columns of `noise`, cached contiguously for the inner loop.
    columns: Vec<Vec<f64>>,
}

impl std::fmt::Debug for SdeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdeSystem")
            .field("dimension", &self.dimension())
            .field("noise", &self.noise)
            .field("isotropic_sigma", &self.isotropic_sigma)
            .finish()
    }
}

impl SdeSystem {
    /// `S = σ·Id`.
    pub fn isotropic(drift: Arc<dyn Drift>, sigma: f64) -> Result<Self> {
        let n = drift.dimension();
        if n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !sigma.is_finite() {
            return Err(Error::Config(format!("noise intensity {sigma} is not finite")));
        }
        let noise = DMatrix::identity(n, n) * sigma;
        Ok(Self::build(drift, noise, Some(sigma)))
    }

    /// The noiseless ODE `dy/dt = f(y)`.
    pub fn deterministic(drift: Arc<dyn Drift>) -> Result<Self> {
        Self::isotropic(drift, 0.0)
    }

    pub fn with_noise_matrix(drift: Arc<dyn Drift>, noise: DMatrix<f64>) -> Result<Self> {
        let n = drift.dimension();
        if n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if noise.nrows() != n || noise.ncols() != n {
            return Err(Error::Config(format!(
                "noise matrix is {}x{}, expected {n}x{n}",
                noise.nrows(),
                noise.ncols()
            )));
        }
        if noise.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("noise matrix has non-finite entries".into()));
        }
        let sigma = noise[(0, 0)];
        let iso = (&noise - DMatrix::identity(n, n) * sigma).amax() <= f64::EPSILON * sigma.abs();
        Ok(Self::build(drift, noise, iso.then_some(sigma)))
    }

    fn build(drift: Arc<dyn Drift>, noise: DMatrix<f64>, isotropic_sigma: Option<f64>) -> Self {
        let columns = noise
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        Self {
            drift,
            noise,
            isotropic_sigma,
            columns,
        }
    }

    pub fn dimension(&self) -> usize {
        self.drift.dimension()
    }

    pub fn noise_matrix(&self) -> &DMatrix<f64> {
        &self.noise
    }

    pub fn isotropic_sigma(&self) -> Option<f64> {
        self.isotropic_sigma
    }

    pub fn drift(&self) -> &Arc<dyn Drift> {
        &self.drift
    }

    /// Same drift, noise removed.
    pub fn without_noise(&self) -> Self {
        let n = self.dimension();
        Self::build(self.drift.clone(), DMatrix::zeros(n, n), Some(0.0))
    }

    pub fn eval_drift(&self, state: &[f64], out: &mut [f64]) {
        self.drift.eval(state, out)
    }

    pub fn drift_vector(&self, state: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(state.len());
        self.drift.eval(state.as_slice(), out.as_mut_slice());
        out
    }

    /// `∇f` at `state`: analytic when the drift provides it, otherwise central
    /// differences with step `1e-6 (1 + ‖state‖)`.
    pub fn jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        if let Some(j) = self.drift.jacobian(state) {
            return j;
        }
        let n = state.len();
        let norm = state.iter().map(|v| v * v).sum::<f64>().sqrt();
        let eps = 1e-6 * (1.0 + norm);
        let mut jac = DMatrix::zeros(n, n);
        let mut probe = state.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for k in 0..n {
            probe[k] = state[k] + eps;
            self.drift.eval(&probe, &mut fp);
            probe[k] = state[k] - eps;
            self.drift.eval(&probe, &mut fm);
            probe[k] = state[k];
            for i in 0..n {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * eps);
            }
        }
        jac
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    EulerMaruyama,
    #[default]
    StrongRK15,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "em" | "eulermaruyama" => Ok(Scheme::EulerMaruyama),
            "srk" | "srk15" | "strongrk15" => Ok(Scheme::StrongRK15),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Step size, length, scheme, seed and initial state of one integration.
///
/// `n_steps` counts *recorded* intervals; each is integrated with `substeps`
/// steps of length `dt`, so the trajectory has `n_steps + 1` rows spaced
/// `dt * substeps` apart.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub substeps: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub initial_state: Vec<f64>,
}

impl IntegratorConfig {
    pub fn new(dt: f64, n_steps: usize, initial_state: Vec<f64>) -> Self {
        Self {
            dt,
            n_steps,
            substeps: 1,
            scheme: Scheme::StrongRK15,
            seed: 0,
            initial_state,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.substeps as f64
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if self.initial_state.len() != dimension {
            return Err(Error::Config(format!(
                "initial state has {} components, system has {dimension}",
                self.initial_state.len()
            )));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial state is not finite".into()));
        }
        Ok(())
    }
}

/// Uniformly sampled multivariate time series, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t0: f64,
    pub channel_labels: Vec<String>,
    pub seed: u64,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn from_rows(
        dt: f64,
        channel_labels: Vec<String>,
        seed: u64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let width = channel_labels.len();
        if width == 0 || values.len() % width != 0 {
            return Err(Error::Config(format!(
                "{} values do not fill rows of {width} channels",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("trajectory contains non-finite values".into()));
        }
        Ok(Self {
            dt,
            t0: 0.0,
            channel_labels,
            seed,
            values,
        })
    }

    pub fn default_labels(n: usize) -> Vec<String> {
        match n {
            1 => vec!["x".into()],
            2 => vec!["x".into(), "y".into()],
            _ => (0..n).map(|i| format!("y{i}")).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.values[k * w..(k + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.channel_labels.iter().position(|l| l == label)?;
        Some(self.column(j))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Drops rows with `t < t_min` (burn-in); the time origin is kept.
    pub fn discard_before(&self, t_min: f64) -> Trajectory {
        let skip = (((t_min - self.t0) / self.dt).ceil().max(0.0) as usize).min(self.len());
        let w = self.width();
        Trajectory {
            dt: self.dt,
            t0: self.t0 + skip as f64 * self.dt,
            channel_labels: self.channel_labels.clone(),
            seed: self.seed,
            values: self.values[skip * w..].to_vec(),
        }
    }
}

/// Scratch buffers for one stepper.
pub(crate) struct Stepper<'a> {
    system: &'a SdeSystem,
    a0: Vec<f64>,
    ybar: Vec<f64>,
    abar: Vec<f64>,
    probe: Vec<f64>,
    ap: Vec<f64>,
    am: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(system: &'a SdeSystem) -> Self {
        let n = system.dimension();
        Self {
            system,
            a0: vec![0.0; n],
            ybar: vec![0.0; n],
            abar: vec![0.0; n],
            probe: vec![0.0; n],
            ap: vec![0.0; n],
            am: vec![0.0; n],
            next: vec![0.0; n],
        }
    }

    /// Advances `y` by one step of length `h` given the Wiener increments `dw`
    /// and (for the order-3/2 scheme) the area increments `dz`, one per noise
    /// column.
    pub(crate) fn step(&mut self, scheme: Scheme, y: &mut [f64], h: f64, dw: &[f64], dz: &[f64]) {
        let n = y.len();
        let sys = self.system;
        sys.eval_drift(y, &mut self.a0);
        match scheme {
            Scheme::EulerMaruyama => {
                for i in 0..n {
                    let mut noise = 0.0;
                    for (col, w) in sys.columns.iter().zip(dw) {
                        noise += col[i] * w;
                    }
                    y[i] += self.a0[i] * h + noise;
                }
            }
            Scheme::StrongRK15 => {
                let m = sys.columns.len();
                let sqh = h.sqrt();
                for i in 0..n {
                    self.ybar[i] = y[i] + self.a0[i] * h;
                }
                let bar_weight = 0.5 * (m as f64 - 1.0) * h;
                if m > 1 {
                    sys.eval_drift(&self.ybar, &mut self.abar);
                }
                for i in 0..n {
                    let mut noise = 0.0;
                    for (col, w) in sys.columns.iter().zip(dw) {
                        noise += col[i] * w;
                    }
                    let bar = if m > 1 { bar_weight * self.abar[i] } else { 0.0 };
                    self.next[i] = y[i] + noise + 0.5 * h * self.a0[i] - bar;
                }
                for (j, col) in sys.columns.iter().enumerate() {
                    for i in 0..n {
                        self.probe[i] = self.ybar[i] + col[i] * sqh;
                    }
                    sys.eval_drift(&self.probe, &mut self.ap);
                    for i in 0..n {
                        self.probe[i] = self.ybar[i] - col[i] * sqh;
                    }
                    sys.eval_drift(&self.probe, &mut self.am);
                    let zc = dz[j] / (2.0 * sqh);
                    for i in 0..n {
                        self.next[i] +=
                            (self.ap[i] - self.am[i]) * zc + 0.25 * h * (self.ap[i] + self.am[i]);
                    }
                }
                y.copy_from_slice(&self.next);
            }
        }
    }
}

/// Draws `(ΔW, ΔZ)` for one step of length `h` per noise column.
/// `ΔZ = ½ h^{3/2} (ξ₁ + ξ₂/√3)` so `Var ΔZ = h³/3`, `Cov(ΔW, ΔZ) = h²/2`.
#[inline]
pub(crate) fn draw_increments(
    noise: &mut NoiseStream,
    scheme: Scheme,
    h: f64,
    dw: &mut [f64],
    dz: &mut [f64],
) {
    let sqh = h.sqrt();
    match scheme {
        Scheme::EulerMaruyama => {
            for w in dw.iter_mut() {
                *w = sqh * noise.normal();
            }
        }
        Scheme::StrongRK15 => {
            let c = 0.5 * h * sqh;
            let inv_sqrt3 = 1.0 / 3f64.sqrt();
            for (w, z) in dw.iter_mut().zip(dz.iter_mut()) {
                let u1 = noise.normal();
                let u2 = noise.normal();
                *w = sqh * u1;
                *z = c * (u1 + u2 * inv_sqrt3);
            }
        }
    }
}

#[inline]
pub(crate) fn diverged(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}

/// Integrates one sample path. Bit-reproducible for identical inputs.
pub fn integrate_path(system: &SdeSystem, config: &IntegratorConfig) -> Result<Trajectory> {
    let n = system.dimension();
    config.validate(n)?;
    let m = system.columns.len();
    let mut noise = NoiseStream::new(config.seed);
    let mut stepper = Stepper::new(system);
    let mut y = config.initial_state.clone();
    let mut dw = vec![0.0; m];
    let mut dz = vec![0.0; m];
    let mut values = Vec::with_capacity((config.n_steps + 1) * n);
    values.extend_from_slice(&y);
    let mut step = 0usize;
    for _ in 0..config.n_steps {
        for _ in 0..config.substeps {
            draw_increments(&mut noise, config.scheme, config.dt, &mut dw, &mut dz);
            stepper.step(config.scheme, &mut y, config.dt, &dw, &dz);
            step += 1;
            if diverged(&y) {
                return Err(Error::Divergence { step, path: None });
            }
        }
        values.extend_from_slice(&y);
    }
    Ok(Trajectory {
        dt: config.sample_interval(),
        t0: 0.0,
        channel_labels: Trajectory::default_labels(n),
        seed: config.seed,
        values,
    })
}

/// `n_paths` independent paths; path `k` is `integrate_path` with seed
/// [`sub_seed`]`(config.seed, k)`.
pub fn integrate_ensemble(
    system: &SdeSystem,
    config: &IntegratorConfig,
    n_paths: usize,
    mode: Parallelism,
) -> Result<Vec<Trajectory>> {
    if n_paths == 0 {
        return Err(Error::Config("n_paths must be at least 1".into()));
    }
    config.validate(system.dimension())?;
    try_map_indexed(n_paths, mode, |k| {
        let cfg = config.clone().with_seed(sub_seed(config.seed, k as u64));
        integrate_path(system, &cfg).map_err(|e| match e {
            Error::Divergence { step, .. } => Error::Divergence {
                step,
                path: Some(k),
            },
            other => other,
        })
    })
}

/// Scalar OU process `dz = −rate·z dt + σ dW`, the reference problem of the
/// strong-order harness: its exact solution can be sampled jointly with the
/// increments driving the schemes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuProcess {
    pub rate: f64,
    pub sigma: f64,
    pub z0: f64,
    pub horizon: f64,
}

impl OuProcess {
    pub fn system(&self) -> SdeSystem {
        let rate = self.rate;
        let drift = FnDrift::new(1, move |z: &[f64], out: &mut [f64]| out[0] = -rate * z[0]);
        SdeSystem::isotropic(Arc::new(drift), self.sigma).expect("valid OU system")
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.rate)
    }

    /// Lower-triangular factor of the covariance of `(ΔW, ΔZ, ΔI)` over a step
    /// `h`, with `ΔI = ∫ e^{−rate (h−s)} dW(s)` the exact stochastic convolution.
    fn increment_factor(&self, h: f64) -> [[f64; 3]; 3] {
        let l = self.rate;
        let e = (-l * h).exp();
        let c = [
            [h, h * h / 2.0, -(-l * h).exp_m1() / l],
            [
                h * h / 2.0,
                h * h * h / 3.0,
                (1.0 - e * (1.0 + l * h)) / (l * l),
            ],
            [
                -(-l * h).exp_m1() / l,
                (1.0 - e * (1.0 + l * h)) / (l * l),
                -(-2.0 * l * h).exp_m1() / (2.0 * l),
            ],
        ];
        let mut f = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = c[i][j];
                for k in 0..j {
                    s -= f[i][k] * f[j][k];
                }
                f[i][j] = if i == j { s.max(0.0).sqrt() } else if f[j][j] > 0.0 { s / f[j][j] } else { 0.0 };
            }
        }
        f
    }
}

/// Log–log regression of RMS endpoint error against step size.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderEstimate {
    pub slope: f64,
    pub dts: Vec<f64>,
    pub rms_errors: Vec<f64>,
}

/// Strong convergence order of `scheme` on an OU process.
///
/// Each path samples `(ΔW, ΔZ, ΔI)` exactly on the finest grid `min(dts)`;
/// coarse steps use the exactly aggregated increments
/// `ΔW = Σ δW`, `ΔZ = Σ (δZ + (W_k − W_0) δt)`, so all step sizes see the same
/// Brownian path and the exact solution `z ← e^{−rate δt} z + σ ΔI`.
pub fn strong_order_estimate(
    ou: &OuProcess,
    scheme: Scheme,
    dts: &[f64],
    n_paths: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<OrderEstimate> {
    if dts.len() < 3 {
        return Err(Error::Config(format!(
            "need at least 3 step sizes, got {}",
            dts.len()
        )));
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) || dts.iter().any(|&d| d <= 0.0) {
        return Err(Error::Config("step sizes must be positive and strictly decreasing".into()));
    }
    if n_paths == 0 || !(ou.rate > 0.0) || !(ou.horizon > 0.0) {
        return Err(Error::Config("invalid OU reference problem".into()));
    }
    let fine = *dts.last().unwrap();
    let ratios: Vec<usize> = dts
        .iter()
        .map(|&d| {
            let r = d / fine;
            let k = r.round();
            if (r - k).abs() > 1e-9 * r {
                Err(Error::Config(format!("step {d} is not a multiple of {fine}")))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;
    let coarsest = ratios[0];
    let n_fine = {
        let n = (ou.horizon / fine).round() as usize;
        n.div_ceil(coarsest) * coarsest
    };
    let factor = ou.increment_factor(fine);
    let decay = (-ou.rate * fine).exp();
    let system = ou.system();

    let sq_errors: Vec<Vec<f64>> = try_map_indexed(n_paths, mode, |p| -> Result<Vec<f64>> {
        let mut noise = NoiseStream::new(sub_seed(seed, p as u64));
        let mut dw = vec![0.0; n_fine];
        let mut dz = vec![0.0; n_fine];
        let mut exact = ou.z0;
        for k in 0..n_fine {
            let g = [noise.normal(), noise.normal(), noise.normal()];
            dw[k] = factor[0][0] * g[0];
            dz[k] = factor[1][0] * g[0] + factor[1][1] * g[1];
            let di = factor[2][0] * g[0] + factor[2][1] * g[1] + factor[2][2] * g[2];
            exact = decay * exact + ou.sigma * di;
        }
        let mut out = Vec::with_capacity(dts.len());
        let mut stepper = Stepper::new(&system);
        for (&h, &ratio) in dts.iter().zip(&ratios) {
            let mut y = [ou.z0];
            for block in 0..n_fine / ratio {
                let mut w_acc = 0.0;
                let mut z_acc = 0.0;
                for k in block * ratio..(block + 1) * ratio {
                    z_acc += dz[k] + w_acc * fine;
                    w_acc += dw[k];
                }
                stepper.step(scheme, &mut y, h, &[w_acc], &[z_acc]);
                if diverged(&y) {
                    return Err(Error::Divergence { step: block, path: Some(p) });
                }
            }
            out.push((y[0] - exact).powi(2));
        }
        Ok(out)
    })?;

    let rms_errors: Vec<f64> = (0..dts.len())
        .map(|i| (sq_errors.iter().map(|e| e[i]).sum::<f64>() / n_paths as f64).sqrt())
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = rms_errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(OrderEstimate {
        slope: regression_slope(&xs, &ys),
        dts: dts.to_vec(),
        rms_errors,
    })
}

pub(crate) fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
