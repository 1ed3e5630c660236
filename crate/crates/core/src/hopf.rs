//! Supercritical Hopf normal form with isotropic additive noise,
//!
//! ```text
//! d(x,y) = [λ/2 −α₀; α₀ λ/2](x,y) dt
//!        + (x²+y²)/r² (−λx/2 − (α−α₀)y, −λy/2 + (α−α₀)x) dt + σ dW,
//! ```
//!
//! whose deterministic part has the limit cycle `(r cos αt, r sin αt)`, and
//! its phase–deviation approximation `(x,y) ≈ (r+z)(cos ατ, sin ατ)` with
//!
//! ```text
//! dz = −λz dt + σ dW_d,
//! dτ = dt + 2z(α−α₀)/(α(r+z)) dt + σ dW_p / (α(r+z)).
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::NoiseStream;
use crate::sde::{integrate_path, Drift, IntegratorConfig, Scheme, SdeSystem, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfParams {
    /// Limit-cycle angular frequency α.
    pub alpha: f64,
    /// Angular frequency near the focus α₀.
    pub alpha0: f64,
    /// Magnitude λ of the cycle's Lyapunov exponent.
    #[serde(rename = "lambda")]
    pub lambda_: f64,
    /// Cycle radius.
    pub r: f64,
    /// Noise intensity σ.
    pub sigma: f64,
}

impl HopfParams {
    pub fn new(alpha: f64, alpha0: f64, lambda_: f64, r: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            alpha,
            alpha0,
            lambda_,
            r,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with σ chosen so that the noise-to-signal ratio equals `nsr`.
    pub fn with_nsr(alpha: f64, alpha0: f64, lambda_: f64, r: f64, nsr: f64) -> Result<Self> {
        if !(nsr >= 0.0) {
            return Err(Error::Domain(format!("NSR must be non-negative, got {nsr}")));
        }
        Self::new(alpha, alpha0, lambda_, r, sigma_for_nsr(lambda_, r, nsr))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("alpha0", self.alpha0),
            ("lambda", self.lambda_),
            ("r", self.r),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.alpha
    }

    pub fn nsr(&self) -> f64 {
        nsr(self).expect("validated parameters")
    }

    /// Stationary variance of the radial deviation, σ²/(2λ).
    pub fn deviation_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.lambda_)
    }

    pub fn system(&self) -> SdeSystem {
        SdeSystem::isotropic(Arc::new(HopfDrift(*self)), self.sigma).expect("valid Hopf system")
    }
}

/// σ with `√(σ²/(2λ))/r = nsr`.
pub fn sigma_for_nsr(lambda_: f64, r: f64, nsr: f64) -> f64 {
    (2.0 * lambda_ * r * r * nsr * nsr).sqrt()
}

/// Noise-to-signal ratio `√(σ²/(2λ))/r`.
pub fn nsr(params: &HopfParams) -> Result<f64> {
    if !(params.lambda_ > 0.0) || !(params.r > 0.0) {
        return Err(Error::Domain(format!(
            "NSR needs lambda > 0 and r > 0 (got {}, {})",
            params.lambda_, params.r
        )));
    }
    Ok((params.sigma * params.sigma / (2.0 * params.lambda_)).sqrt() / params.r)
}

/// Deterministic drift of the normal form.
#[inline]
pub fn hopf_drift(p: &HopfParams, state: [f64; 2]) -> [f64; 2] {
    let [x, y] = state;
    let q = (x * x + y * y) / (p.r * p.r);
    let c = p.alpha - p.alpha0;
    let h = 0.5 * p.lambda_;
    [
        h * x - p.alpha0 * y + q * (-h * x - c * y),
        p.alpha0 * x + h * y + q * (-h * y + c * x),
    ]
}

#[derive(Clone, Copy, Debug)]
pub struct HopfDrift(pub HopfParams);

impl Drift for HopfDrift {
    fn dimension(&self) -> usize {
        2
    }

    #[inline]
    fn eval(&self, state: &[f64], out: &mut [f64]) {
        let f = hopf_drift(&self.0, [state[0], state[1]]);
        out[0] = f[0];
        out[1] = f[1];
    }

    fn jacobian(&self, state: &[f64]) -> Option<DMatrix<f64>> {
        let p = &self.0;
        let (x, y) = (state[0], state[1]);
        let r2 = p.r * p.r;
        let q = (x * x + y * y) / r2;
        let c = p.alpha - p.alpha0;
        let h = 0.5 * p.lambda_;
        let gx = -h * x - c * y;
        let gy = -h * y + c * x;
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[
                h + 2.0 * x / r2 * gx - q * h,
                -p.alpha0 + 2.0 * y / r2 * gx - q * c,
                p.alpha0 + 2.0 * x / r2 * gy + q * c,
                h + 2.0 * y / r2 * gy - q * h,
            ],
        ))
    }
}

/// Start on the cycle at phase 0: `(r, 0)`.
pub fn on_cycle_start(params: &HopfParams) -> Vec<f64> {
    vec![params.r, 0.0]
}

/// Burn-in discarded before stationary statistics, `10/λ`.
pub fn burn_in(params: &HopfParams) -> f64 {
    10.0 / params.lambda_
}

/// Sample path of the full normal form.
pub fn simulate_hopf_exact(params: &HopfParams, config: &IntegratorConfig) -> Result<Trajectory> {
    params.validate()?;
    integrate_path(&params.system(), config)
}

/// What to do when `r + z` reaches zero in the linear approximation, where
/// the phase-noise coefficient `σ/(α(r+z))` blows up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SingularityPolicy {
    #[default]
    Error,
    /// Keep integrating; the phase takes a large random kick while the
    /// reconstructed amplitude `r + z` passes through zero.
    Continue,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinearOptions {
    /// Drop the `2z(α−α₀)` drift term and use `σ/(αr)` as phase noise: the
    /// randomized-harmonic model `x = (r+z) cos(αt + (σ/r) W_p)`.
    pub leading_order: bool,
    pub singularity: SingularityPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDeviationPath {
    pub dt: f64,
    pub tau: Vec<f64>,
    pub z: Vec<f64>,
    /// `((r+z) cos ατ, (r+z) sin ατ)` per sample.
    pub reconstructed: Vec<[f64; 2]>,
}

impl PhaseDeviationPath {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn x(&self) -> Vec<f64> {
        self.reconstructed.iter().map(|p| p[0]).collect()
    }

    pub fn y(&self) -> Vec<f64> {
        self.reconstructed.iter().map(|p| p[1]).collect()
    }

    pub fn to_trajectory(&self, seed: u64) -> Trajectory {
        let values = self.reconstructed.iter().flat_map(|p| *p).collect();
        Trajectory::from_rows(self.dt, Trajectory::default_labels(2), seed, values)
            .expect("finite reconstruction")
    }

    /// Rows with `t >= t_min`.
    pub fn discard_before(&self, t_min: f64) -> PhaseDeviationPath {
        let skip = ((t_min / self.dt).ceil().max(0.0) as usize).min(self.len());
        PhaseDeviationPath {
            dt: self.dt,
            tau: self.tau[skip..].to_vec(),
            z: self.z[skip..].to_vec(),
            reconstructed: self.reconstructed[skip..].to_vec(),
        }
    }
}

/// Integrates the coupled `(z, τ)` system. `config.initial_state` is
/// `[z(0), τ(0)]`.
///
/// `z` is advanced with the exact OU transition. `τ` uses left-point
/// coefficients for [`Scheme::EulerMaruyama`] and trapezoidal averages of the
/// drift and noise coefficients over the step for [`Scheme::StrongRK15`];
/// since `W_p` is independent of `z`, both are consistent Itô discretizations.
pub fn simulate_hopf_linear(
    params: &HopfParams,
    config: &IntegratorConfig,
    options: LinearOptions,
) -> Result<PhaseDeviationPath> {
    params.validate()?;
    config.validate(2)?;
    let HopfParams {
        alpha,
        alpha0,
        lambda_,
        r,
        sigma,
    } = *params;
    let h = config.dt;
    let decay = (-lambda_ * h).exp();
    let ou_sd = sigma * (-(-2.0 * lambda_ * h).exp_m1() / (2.0 * lambda_)).sqrt();
    let sqh = h.sqrt();
    let coeffs = |z: f64| -> (f64, f64) {
        if options.leading_order {
            (1.0, sigma / (alpha * r))
        } else {
            let a = r + z;
            (1.0 + 2.0 * z * (alpha - alpha0) / (alpha * a), sigma / (alpha * a))
        }
    };

    let mut noise = NoiseStream::new(config.seed);
    let mut z = config.initial_state[0];
    let mut tau = config.initial_state[1];
    let rows = config.n_steps + 1;
    let mut out = PhaseDeviationPath {
        dt: config.sample_interval(),
        tau: Vec::with_capacity(rows),
        z: Vec::with_capacity(rows),
        reconstructed: Vec::with_capacity(rows),
    };
    let record = |tau: f64, z: f64, out: &mut PhaseDeviationPath| {
        let (s, c) = (alpha * tau).sin_cos();
        out.tau.push(tau);
        out.z.push(z);
        out.reconstructed.push([(r + z) * c, (r + z) * s]);
    };
    if !options.leading_order && r + z <= 0.0 && options.singularity == SingularityPolicy::Error {
        return Err(Error::Singularity { step: 0 });
    }
    record(tau, z, &mut out);
    let mut step = 0usize;
    for _ in 0..config.n_steps {
        for _ in 0..config.substeps {
            step += 1;
            let z_next = decay * z + ou_sd * noise.normal();
            let dwp = sqh * noise.normal();
            if !options.leading_order
                && options.singularity == SingularityPolicy::Error
                && (r + z_next <= 0.0)
            {
                return Err(Error::Singularity { step });
            }
            let (d0, g0) = coeffs(z);
            match config.scheme {
                Scheme::EulerMaruyama => tau += d0 * h + g0 * dwp,
                Scheme::StrongRK15 => {
                    let (d1, g1) = coeffs(z_next);
                    tau += 0.5 * (d0 + d1) * h + 0.5 * (g0 + g1) * dwp;
                }
            }
            z = z_next;
            if !tau.is_finite() || !z.is_finite() {
                return Err(Error::Divergence { step, path: None });
            }
        }
        record(tau, z, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(alpha0: f64, nsr: f64) -> HopfParams {
        HopfParams::with_nsr(2.0 * PI, alpha0, 2.0 * PI, 1.0, nsr).unwrap()
    }

    #[test]
    fn drift_at_focus_and_on_cycle() {
        let p = HopfParams::new(3.0, 1.5, 2.0, 2.0, 0.1).unwrap();
        assert_eq!(hopf_drift(&p, [0.0, 0.0]), [0.0, 0.0]);
        let f = hopf_drift(&p, [2.0, 0.0]);
        assert!(f[0].abs() < 1e-15);
        assert_relative_eq!(f[1], 3.0 * 2.0, max_relative = 1e-15);
    }

    #[test]
    fn drift_matches_polar_form_outside_cycle() {
        let p = unit(2.0 * PI, 0.0);
        let f = hopf_drift(&p, [2.0, 0.0]);
        assert_relative_eq!(f[0], -6.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(f[1], 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn drift_polar_consistency_everywhere() {
        let p = HopfParams::new(2.0, 0.7, 1.3, 1.5, 0.0).unwrap();
        for &(rho, phi) in &[(0.3, 0.2), (1.5, 2.0), (2.7, -1.1)] {
            let (s, c) = f64::sin_cos(phi);
            let f = hopf_drift(&p, [rho * c, rho * s]);
            let radial = f[0] * c + f[1] * s;
            let angular = (-f[0] * s + f[1] * c) / rho;
            let r2 = p.r * p.r;
            assert_relative_eq!(radial, p.lambda_ * rho / 2.0 - p.lambda_ * rho.powi(3) / (2.0 * r2), epsilon = 1e-13);
            assert_relative_eq!(angular, p.alpha0 + (p.alpha - p.alpha0) * rho * rho / r2, epsilon = 1e-13);
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let p = HopfParams::new(2.0, 0.7, 1.3, 1.5, 0.0).unwrap();
        let sys = p.system();
        let x = [0.4, -1.9];
        let analytic = HopfDrift(p).jacobian(&x).unwrap();
        let fd = crate::sde::SdeSystem::deterministic(Arc::new(crate::sde::FnDrift::new(2, move |s: &[f64], o: &mut [f64]| {
            let f = hopf_drift(&p, [s[0], s[1]]);
            o.copy_from_slice(&f);
        })))
        .unwrap()
        .jacobian(&x);
        assert!((analytic - fd).amax() < 1e-7);
        assert_eq!(sys.dimension(), 2);
    }

    #[test]
    fn nsr_definitions() {
        assert_eq!(unit(2.0 * PI, 0.0).nsr(), 0.0);
        let p = HopfParams::new(1.0, 1.0, 0.8, 1.7, (2.0f64 * 0.8 * 1.7 * 1.7).sqrt()).unwrap();
        assert_relative_eq!(p.nsr(), 1.0, max_relative = 1e-14);
        let p = unit(2.0 * PI, 0.1);
        assert_relative_eq!(p.sigma * p.sigma, 0.04 * PI, max_relative = 1e-14);
        let bad = HopfParams {
            lambda_: 0.0,
            ..p
        };
        assert!(matches!(nsr(&bad), Err(Error::Domain(_))));
        let bad = HopfParams { r: 0.0, ..p };
        assert!(matches!(nsr(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn params_are_validated() {
        assert!(HopfParams::new(0.0, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(HopfParams::new(1.0, 1.0, -1.0, 1.0, 0.1).is_err());
        assert!(HopfParams::new(1.0, 1.0, 1.0, 1.0, -0.1).is_err());
        assert!(HopfParams::new(1.0, 1.0, 1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn deterministic_cycle_closes_after_one_period() {
        let p = unit(2.0 * PI, 0.0);
        let steps = 1000;
        // Heun phase error is ~ (αh)³/6 per step: 4e-7 over the period here.
        let cfg = IntegratorConfig::new(p.period() / (10 * steps) as f64, steps, on_cycle_start(&p))
            .with_substeps(10);
        let tr = simulate_hopf_exact(&p, &cfg).unwrap();
        for (k, row) in tr.rows().enumerate() {
            let t = tr.time(k);
            assert!((row[0] - (p.alpha * t).cos()).abs() < 1e-6);
            assert!((row[1] - (p.alpha * t).sin()).abs() < 1e-6);
        }
        let end = tr.row(steps);
        assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6);
    }

    #[test]
    fn linear_deterministic_relaxation() {
        let p = unit(2.0 * PI, 0.0);
        let cfg = IntegratorConfig::new(1e-3, 2000, vec![0.3, 0.0]);
        let path = simulate_hopf_linear(&p, &cfg, LinearOptions::default()).unwrap();
        for k in 0..path.len() {
            let t = k as f64 * path.dt;
            assert_relative_eq!(path.z[k], 0.3 * (-p.lambda_ * t).exp(), max_relative = 1e-12);
            assert_relative_eq!(path.tau[k], t, epsilon = 1e-12);
            let a = 1.0 + path.z[k];
            let (s, c) = (p.alpha * path.tau[k]).sin_cos();
            assert_eq!(path.reconstructed[k], [a * c, a * s]);
        }
    }

    #[test]
    fn linear_deterministic_phase_speed_with_detuning() {
        // dτ/dt = 1 + 2z(α−α₀)/(α(r+z)) with z = z₀e^{−λt}; compare against quadrature.
        let p = HopfParams::new(2.0 * PI, PI, 2.0 * PI, 1.0, 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-4, 10_000, vec![0.2, 0.0]);
        let path = simulate_hopf_linear(&p, &cfg, LinearOptions::default()).unwrap();
        let n = 200_000;
        let dt = 1.0 / n as f64;
        let mut tau = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) * dt;
            let z = 0.2 * (-p.lambda_ * t).exp();
            tau += dt * (1.0 + 2.0 * z * (p.alpha - p.alpha0) / (p.alpha * (1.0 + z)));
        }
        assert_relative_eq!(*path.tau.last().unwrap(), tau, max_relative = 1e-8);
    }

    #[test]
    fn singularity_is_reported() {
        let p = unit(2.0 * PI, 0.0);
        let cfg = IntegratorConfig::new(1e-3, 10, vec![-1.5, 0.0]);
        assert!(matches!(
            simulate_hopf_linear(&p, &cfg, LinearOptions::default()),
            Err(Error::Singularity { step: 0 })
        ));
        let p = unit(2.0 * PI, 1.5);
        let cfg = IntegratorConfig::new(1e-3, 100_000, vec![0.0, 0.0]).with_seed(3);
        assert!(matches!(
            simulate_hopf_linear(&p, &cfg, LinearOptions::default()),
            Err(Error::Singularity { .. })
        ));
        let opts = LinearOptions {
            singularity: SingularityPolicy::Continue,
            ..Default::default()
        };
        let path = simulate_hopf_linear(&p, &cfg, opts).unwrap();
        assert!(path.z.iter().any(|&z| z < -1.0));
        assert!(path.reconstructed.iter().all(|v| v[0].is_finite() && v[1].is_finite()));
    }

    #[test]
    fn leading_order_phase_is_brownian_with_drift() {
        // Var[ατ − αt] = (σ/r)² t across an ensemble.
        let p = unit(2.0 * PI, 0.1);
        let opts = LinearOptions {
            leading_order: true,
            ..Default::default()
        };
        let horizon = 100.0 / p.lambda_;
        let steps = 200;
        let paths = 400;
        let mut sums = vec![0.0; steps + 1];
        for s in 0..paths {
            let cfg = IntegratorConfig::new(horizon / (steps * 20) as f64, steps, vec![0.0, 0.0])
                .with_substeps(20)
                .with_seed(crate::rng::sub_seed(99, s));
            let path = simulate_hopf_linear(&p, &cfg, opts).unwrap();
            for k in 0..=steps {
                let d = p.alpha * (path.tau[k] - k as f64 * path.dt);
                sums[k] += d * d;
            }
        }
        let ts: Vec<f64> = (0..=steps).map(|k| k as f64 * horizon / steps as f64).collect();
        let vars: Vec<f64> = sums.iter().map(|s| s / paths as f64).collect();
        let slope = ts.iter().zip(&vars).map(|(t, v)| t * v).sum::<f64>() / ts.iter().map(|t| t * t).sum::<f64>();
        let expected = (p.sigma / p.r).powi(2);
        assert_relative_eq!(slope, expected, max_relative = 0.1);
    }
}
