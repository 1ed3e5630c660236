use nalgebra::{Complex, DMatrix, DVector};

use super::{ComovingFrame, CycleParameterization, GridHermite};
use crate::error::{Error, Result};
use crate::rng::NoiseStream;
use crate::sde::{diverged, IntegratorConfig, Trajectory};

/// Leading-order phase/deviation SDE of a cycle under isotropic noise.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub period: f64,
    pub sigma: f64,
    /// `J₀` at each grid sample, `(n−1) × (n−1)`.
    pub j0: Vec<DMatrix<f64>>,
    /// `‖f(L)‖` at each grid sample.
    pub speed: Vec<f64>,
    /// `H₀ = Bᵀ U(P) B`, the holonomy restricted to `P₀`.
    pub holonomy0: DMatrix<f64>,
    /// Time-ordered propagator of `dz₀/dt = J₀ z₀` over `[0, P]`.
    pub propagator: DMatrix<f64>,
    /// Eigenvalues of `H₀ Φ(P)`: the nontrivial Floquet multipliers.
    pub multipliers: Vec<Complex<f64>>,
    pub spectral_radius: f64,
    /// `∮ tr J₀ dτ`.
    pub trace_integral: f64,
    j0_interp: GridHermite,
    speed_interp: GridHermite,
}

impl ReducedModel {
    /// Dimension of the deviation `z₀`.
    pub fn deviation_dim(&self) -> usize {
        self.holonomy0.nrows()
    }

    /// `J₀(s)` for `s ∈ [0, P]`.
    pub fn j0_at(&self, s: f64) -> DMatrix<f64> {
        let d = self.deviation_dim();
        let mut out = DMatrix::zeros(d, d);
        self.j0_interp.eval(s, out.as_mut_slice());
        out
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        self.speed_interp.eval_scalar(s)
    }
}

/// Samples `J₀(τ) = Bᵀ Uᵀ(τ) ℙ(τ) J(τ) U(τ) B` and checks that the cycle is
/// attracting in the reduced dynamics.
pub fn reduce(
    cycle: &CycleParameterization,
    frame: &ComovingFrame,
    sigma: f64,
) -> Result<ReducedModel> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
    }
    let n = cycle.dimension();
    let d = n - 1;
    let m = cycle.grid_size();
    let b = &frame.basis_p0;
    let id = DMatrix::<f64>::identity(n, n);
    let compose = |u: &DMatrix<f64>, t: &DVector<f64>, j: &DMatrix<f64>| {
        let proj = &id - t * t.transpose();
        let ub = u * b;
        ub.transpose() * proj * j * ub
    };
    let j0: Vec<DMatrix<f64>> = (0..m)
        .map(|k| compose(&frame.u[k], &cycle.tangent[k], &cycle.jacobian[k]))
        .collect();
    let sys = cycle.system();
    let f_end = sys.drift_vector(&cycle.l_end);
    let jac_end = sys.jacobian(cycle.l_end.as_slice());
    let j0_end = compose(&frame.holonomy, &(&f_end / f_end.norm()), &jac_end);

    let h = cycle.grid_step();
    let mut flat = Vec::with_capacity((m + 1) * d * d);
    for j in j0.iter().chain(std::iter::once(&j0_end)) {
        flat.extend_from_slice(j.as_slice());
    }
    let j0_interp = GridHermite::with_fd_slopes(h, d * d, flat);

    // Propagator Φ via RK4 on the grid with interpolated midpoints.
    let mut phi = DMatrix::<f64>::identity(d, d);
    let mut mid = DMatrix::<f64>::zeros(d, d);
    for k in 0..m {
        let a = &j0[k];
        let c = if k + 1 < m { &j0[k + 1] } else { &j0_end };
        j0_interp.eval((k as f64 + 0.5) * h, mid.as_mut_slice());
        let k1 = a * &phi;
        let k2 = &mid * (&phi + &k1 * (0.5 * h));
        let k3 = &mid * (&phi + &k2 * (0.5 * h));
        let k4 = c * (&phi + &k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    let holonomy0 = b.transpose() * &frame.holonomy * b;
    let monodromy = &holonomy0 * &phi;
    let multipliers: Vec<Complex<f64>> = monodromy.complex_eigenvalues().iter().copied().collect();
    let spectral_radius = multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(spectral_radius < 1.0) {
        return Err(Error::UnstableCycle { spectral_radius });
    }

    let traces: Vec<f64> = j0.iter().chain(std::iter::once(&j0_end)).map(|j| j.trace()).collect();
    let trace_integral =
        h * (traces[1..m].iter().sum::<f64>() + 0.5 * (traces[0] + traces[m]));

    Ok(ReducedModel {
        period: cycle.period,
        sigma,
        j0,
        speed: cycle.speed.clone(),
        holonomy0,
        propagator: phi,
        multipliers,
        spectral_radius,
        trace_integral,
        j0_interp,
        speed_interp: cycle.speed_interp().clone(),
    })
}

/// Phase and deviation samples of the reduced SDE.
#[derive(Clone, Debug)]
pub struct ReducedPath {
    pub dt: f64,
    pub tau: Vec<f64>,
    /// Row-major `z₀` samples, `deviation_dim` per row.
    pub z0: Vec<f64>,
    pub deviation_dim: usize,
    pub seed: u64,
}

impl ReducedPath {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn z0_row(&self, k: usize) -> &[f64] {
        &self.z0[k * self.deviation_dim..(k + 1) * self.deviation_dim]
    }

    /// Columns `tau, z0_1, …`.
    pub fn to_trajectory(&self) -> Trajectory {
        let d = self.deviation_dim;
        let mut labels = vec!["tau".to_string()];
        labels.extend((1..=d).map(|i| format!("z0_{i}")));
        let mut rows = Vec::with_capacity(self.len() * (d + 1));
        for k in 0..self.len() {
            rows.push(self.tau[k]);
            rows.extend_from_slice(self.z0_row(k));
        }
        Trajectory::from_rows(self.dt, labels, self.seed, rows).expect("consistent widths")
    }
}

fn lap(tau: f64, period: f64) -> (i64, f64) {
    let k = (tau / period).floor();
    let mut s = tau - k * period;
    if s >= period {
        s -= period;
    }
    (k as i64, s.max(0.0))
}

fn matrix_power(h: &DMatrix<f64>, k: i64) -> DMatrix<f64> {
    let d = h.nrows();
    let mut base = if k < 0 { h.transpose() } else { h.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = DMatrix::identity(d, d);
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Euler–Maruyama integration of
///
/// ```text
/// dz₀ = J₀(τ) z₀ dt + σ dW_d,   dτ = dt + σ dW_p / ‖f(L(τ))‖
/// ```
///
/// with `config.initial_state = [τ(0), z₀(0)…]`. The dynamics are stepped in
/// lap-local coordinates `ζ = H₀ᵏ z₀` (k = ⌊τ/P⌋), in which `J₀` is
/// evaluated at `τ mod P`; `ζ` is rotated by `H₀` whenever τ wraps.
/// Per step the `n − 1` deviation increments are drawn before the phase one.
pub fn simulate_reduced(model: &ReducedModel, config: &IntegratorConfig) -> Result<ReducedPath> {
    let d = model.deviation_dim();
    config.validate(d + 1)?;
    let p = model.period;
    let h = config.dt;
    let sqh = h.sqrt();
    let sigma = model.sigma;
    let mut noise = NoiseStream::new(config.seed);

    let mut tau = config.initial_state[0];
    let (mut k, mut s) = lap(tau, p);
    let mut hk = matrix_power(&model.holonomy0, k);
    let mut zeta = &hk * DVector::from_column_slice(&config.initial_state[1..]);
    let mut j = DMatrix::zeros(d, d);
    let mut dw = DVector::zeros(d);

    let rows = config.n_steps + 1;
    let mut taus = Vec::with_capacity(rows);
    let mut zs = Vec::with_capacity(rows * d);
    let mut record = |tau: f64, hk: &DMatrix<f64>, zeta: &DVector<f64>| {
        taus.push(tau);
        zs.extend_from_slice((hk.transpose() * zeta).as_slice());
    };
    record(tau, &hk, &zeta);
    let mut step = 0usize;
    for _ in 0..config.n_steps {
        for _ in 0..config.substeps {
            for w in dw.iter_mut() {
                *w = sqh * noise.normal();
            }
            let wp = sqh * noise.normal();
            model.j0_interp.eval(s, j.as_mut_slice());
            let speed = model.speed_interp.eval_scalar(s);
            zeta = &zeta + (&j * &zeta) * h + &dw * sigma;
            tau += h + sigma * wp / speed;
            step += 1;
            if !tau.is_finite() || diverged(zeta.as_slice()) {
                return Err(Error::Divergence { step, path: None });
            }
            let (k_new, s_new) = lap(tau, p);
            while k < k_new {
                zeta = &model.holonomy0 * zeta;
                hk = &model.holonomy0 * &hk;
                k += 1;
            }
            while k > k_new {
                zeta = model.holonomy0.transpose() * zeta;
                hk = model.holonomy0.transpose() * &hk;
                k -= 1;
            }
            s = s_new;
        }
        record(tau, &hk, &zeta);
    }
    Ok(ReducedPath {
        dt: config.sample_interval(),
        tau: taus,
        z0: zs,
        deviation_dim: d,
        seed: config.seed,
    })
}

/// `y = L(τ mod P) + U(τ mod P) B H₀ᵏ z₀` with `k = ⌊τ/P⌋`.
pub fn reconstruct(
    cycle: &CycleParameterization,
    frame: &ComovingFrame,
    path: &ReducedPath,
) -> Result<Trajectory> {
    let n = cycle.dimension();
    if path.deviation_dim + 1 != n {
        return Err(Error::Config(format!(
            "path has {} deviation components, cycle needs {}",
            path.deviation_dim,
            n - 1
        )));
    }
    if path.z0.len() != path.len() * path.deviation_dim {
        return Err(Error::Config("ragged reduced path".into()));
    }
    let p = cycle.period;
    let h0 = {
        let b = &frame.basis_p0;
        b.transpose() * &frame.holonomy * b
    };
    let mut cached: Option<(i64, DMatrix<f64>)> = None;
    let mut l = vec![0.0; n];
    let mut u = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(path.len() * n);
    for (i, &tau) in path.tau.iter().enumerate() {
        if !tau.is_finite() {
            return Err(Error::Config(format!("non-finite phase at sample {i}")));
        }
        let (k, s) = lap(tau, p);
        let hk = match &cached {
            Some((kc, m)) if *kc == k => m.clone(),
            _ => {
                let m = matrix_power(&h0, k);
                cached = Some((k, m.clone()));
                m
            }
        };
        cycle.point_into(s, &mut l);
        frame.u_into(s, u.as_mut_slice());
        let z = DVector::from_column_slice(path.z0_row(i));
        let dev = &u * (&frame.basis_p0 * (hk * z));
        values.extend(l.iter().zip(dev.iter()).map(|(a, b)| a + b));
    }
    Trajectory::from_rows(path.dt, Trajectory::default_labels(n), path.seed, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sample_acv;
    use crate::frame::{build_frame, find_limit_cycle, CycleSearch};
    use crate::hopf::{simulate_hopf_linear, HopfParams, LinearOptions};
    use crate::presets;
    use crate::sde::Scheme;
    use std::f64::consts::PI;

    fn hopf(sigma: f64) -> (HopfParams, CycleParameterization, ComovingFrame) {
        let p = HopfParams::new(2.0 * PI, 2.0 * PI, 2.0 * PI, 1.0, sigma).unwrap();
        let search = CycleSearch {
            anchor: Some(vec![1.0, 0.0]),
            ..Default::default()
        };
        let c = find_limit_cycle(&p.system(), &[1.0, 0.0], &search).unwrap();
        let f = build_frame(&c).unwrap();
        (p, c, f)
    }

    #[test]
    fn hopf_reduction_is_minus_lambda() {
        let (p, c, f) = hopf(0.3);
        let r = reduce(&c, &f, p.sigma).unwrap();
        for j in &r.j0 {
            assert!((j[(0, 0)] + p.lambda_).abs() < 1e-6, "{}", j[(0, 0)]);
        }
        assert!((r.trace_integral + p.lambda_ * c.period).abs() < 1e-6);
        assert!((r.spectral_radius - (-p.lambda_ * c.period).exp()).abs() < 1e-8);
    }

    /// Multipliers of the full variational equation `dΦ/dt = J(L(t)) Φ`.
    fn full_multipliers(c: &CycleParameterization) -> Vec<f64> {
        let n = c.dimension();
        let sys = c.system().clone();
        let steps = c.grid_size() * c.substeps;
        let h = c.period / steps as f64;
        let mut y = DVector::from_column_slice(c.l[0].as_slice());
        let mut phi = DMatrix::<f64>::identity(n, n);
        for _ in 0..steps {
            let j1 = sys.jacobian(y.as_slice());
            let f1 = sys.drift_vector(&y);
            let y2 = &y + &f1 * (0.5 * h);
            let j2 = sys.jacobian(y2.as_slice());
            let f2 = sys.drift_vector(&y2);
            let y3 = &y + &f2 * (0.5 * h);
            let j3 = sys.jacobian(y3.as_slice());
            let f3 = sys.drift_vector(&y3);
            let y4 = &y + &f3 * h;
            let j4 = sys.jacobian(y4.as_slice());
            let f4 = sys.drift_vector(&y4);
            let k1 = &j1 * &phi;
            let k2 = &j2 * (&phi + &k1 * (0.5 * h));
            let k3 = &j3 * (&phi + &k2 * (0.5 * h));
            let k4 = &j4 * (&phi + &k3 * h);
            phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            y += (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0);
        }
        let mut mods: Vec<f64> = phi.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mods
    }

    #[test]
    fn van_der_pol_trace_matches_floquet_multiplier() {
        let c = find_limit_cycle(&presets::van_der_pol(1.0), &[2.0, 0.0], &CycleSearch::default())
            .unwrap();
        let f = build_frame(&c).unwrap();
        let r = reduce(&c, &f, 0.1).unwrap();
        let full = full_multipliers(&c);
        assert!((full[1] - 1.0).abs() < 1e-6, "trivial multiplier {}", full[1]);
        assert!((r.trace_integral - full[0].ln()).abs() < 1e-5);
        assert!((r.spectral_radius - full[0]).abs() < 1e-6 * (1.0 + full[0]));
    }

    #[test]
    fn three_dimensional_multipliers_match_variational_equation() {
        let sys = presets::coupled_hopf(2.0 * PI, 1.0, 1.0, 0.5);
        let c = find_limit_cycle(&sys, &[1.0, 0.0, 0.0], &CycleSearch::default()).unwrap();
        let f = build_frame(&c).unwrap();
        let r = reduce(&c, &f, 0.1).unwrap();
        let full = full_multipliers(&c);
        let mut red: Vec<f64> = r.multipliers.iter().map(|z| z.norm()).collect();
        red.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((full[2] - 1.0).abs() < 1e-6);
        for (a, b) in red.iter().zip(&full[..2]) {
            assert!((a - b).abs() < 1e-5 * (1.0 + b), "{red:?} vs {full:?}");
        }
    }

    #[test]
    fn deterministic_reduced_path() {
        let (p, c, f) = hopf(0.0);
        let r = reduce(&c, &f, 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 3000, vec![0.25, 0.5]);
        let path = simulate_reduced(&r, &cfg).unwrap();
        for k in 0..path.len() {
            let t = k as f64 * 1e-3;
            assert!((path.tau[k] - 0.25 - t).abs() < 1e-9);
        }
        let z_end = path.z0_row(path.len() - 1)[0];
        let exact = 0.5 * (-p.lambda_ * 3.0).exp();
        assert!((z_end - exact).abs() < 1e-4);
    }

    #[test]
    fn reduced_deviation_is_ou() {
        let (p, c, f) = hopf(0.5);
        let r = reduce(&c, &f, p.sigma).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 200_000, vec![0.0, 0.0])
            .with_substeps(10)
            .with_seed(11);
        let path = simulate_reduced(&r, &cfg).unwrap();
        let z: Vec<f64> = (0..path.len()).map(|k| path.z0_row(k)[0]).collect();
        let acv = sample_acv(&z, path.dt, 0.5).unwrap();
        let var = p.sigma.powi(2) / (2.0 * p.lambda_);
        let mut num = 0.0;
        let mut den = 0.0;
        for (u, v) in acv.lags.iter().zip(&acv.values) {
            let e = var * (-p.lambda_ * u).exp();
            num += (v - e).powi(2);
            den += e * e;
        }
        assert!((num / den).sqrt() < 0.1, "rel L2 {}", (num / den).sqrt());
    }

    #[test]
    fn phase_diffuses_at_sigma_over_speed() {
        let (p, c, f) = hopf(0.5);
        let r = reduce(&c, &f, p.sigma).unwrap();
        // Relative standard error of the variance estimate is √(2/n) ≈ 2%.
        let horizon = 2.0;
        let n_paths = 4000;
        let mut sq = 0.0;
        for k in 0..n_paths {
            let cfg = IntegratorConfig::new(1e-3, 1, vec![0.0, 0.0])
                .with_substeps((horizon / 1e-3) as usize)
                .with_seed(1000 + k);
            let path = simulate_reduced(&r, &cfg).unwrap();
            sq += (path.tau[1] - horizon).powi(2);
        }
        let slope = sq / n_paths as f64 / horizon;
        let expect = (p.sigma / (p.alpha * p.r)).powi(2);
        assert!((slope / expect - 1.0).abs() < 0.1, "{slope} vs {expect}");
    }

    #[test]
    fn reconstruction_matches_polar_hopf_formula() {
        let (p, c, f) = hopf(0.3);
        let cfg = IntegratorConfig::new(1e-3, 5000, vec![0.0, 0.0])
            .with_scheme(Scheme::EulerMaruyama)
            .with_seed(3);
        let lin = simulate_hopf_linear(&p, &cfg, LinearOptions::default()).unwrap();
        let path = ReducedPath {
            dt: lin.dt,
            tau: lin.tau.clone(),
            z0: lin.z.clone(),
            deviation_dim: 1,
            seed: 3,
        };
        let y = reconstruct(&c, &f, &path).unwrap();
        for k in 0..y.len() {
            let row = y.row(k);
            assert!((row[0] - lin.reconstructed[k][0]).abs() < 1e-6);
            assert!((row[1] - lin.reconstructed[k][1]).abs() < 1e-6);
        }
    }

    #[test]
    fn deviation_is_normal_to_the_tangent() {
        let sys = presets::coupled_hopf(2.0 * PI, 1.0, 1.0, 0.5);
        let c = find_limit_cycle(&sys, &[1.0, 0.0, 0.0], &CycleSearch::default()).unwrap();
        let f = build_frame(&c).unwrap();
        let r = reduce(&c, &f, 0.2).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 500, vec![0.0, 0.0, 0.0])
            .with_substeps(5)
            .with_seed(5);
        let path = simulate_reduced(&r, &cfg).unwrap();
        let y = reconstruct(&c, &f, &path).unwrap();
        for k in 0..y.len() {
            let tau = path.tau[k];
            let l = c.point_at(tau);
            let dev = DVector::from_column_slice(y.row(k)) - l;
            let fl = sys.drift_vector(&c.point_at(tau));
            let t = &fl / fl.norm();
            assert!(t.dot(&dev).abs() < 1e-6, "sample {k}: {}", t.dot(&dev));
        }
    }

    #[test]
    fn zero_deviation_reconstructs_the_cycle() {
        let (_, c, f) = hopf(0.0);
        let path = ReducedPath {
            dt: 0.01,
            tau: (0..300).map(|k| k as f64 * 0.01).collect(),
            z0: vec![0.0; 300],
            deviation_dim: 1,
            seed: 0,
        };
        let y = reconstruct(&c, &f, &path).unwrap();
        for k in 0..300 {
            let t = k as f64 * 0.01;
            assert!((y.row(k)[0] - (2.0 * PI * t).cos()).abs() < 1e-8);
            assert!((y.row(k)[1] - (2.0 * PI * t).sin()).abs() < 1e-8);
        }
    }
}
