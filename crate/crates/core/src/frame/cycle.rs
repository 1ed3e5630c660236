use nalgebra::{DMatrix, DVector};

use super::{tangent_and_rate, GridHermite, Rk4};
use crate::error::{Error, Result};
use crate::sde::{diverged, SdeSystem};

/// Settings for [`find_limit_cycle`].
#[derive(Clone, Debug)]
pub struct CycleSearch {
    /// Closure tolerance: `‖L(P) − L(0)‖ < tol·‖L(0)‖ + tol`.
    pub tol: f64,
    /// RK4 step for transient and section search.
    pub dt: f64,
    /// Samples per period `m`.
    pub grid_size: usize,
    /// Time integrated before the section is placed.
    pub warmup_time: f64,
    pub max_crossings: usize,
    /// Search horizon for one return to the section.
    pub max_return_time: f64,
    /// Drift norm (relative to `1 + ‖y‖`) below which the flow is taken to
    /// have reached a fixed point.
    pub fixed_point_tol: f64,
    /// Place the section through this point (normal to the drift there), so
    /// that `L(0)` is the cycle point on it. Defaults to the state after warm-up.
    pub anchor: Option<Vec<f64>>,
}

impl Default for CycleSearch {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            dt: 1e-3,
            grid_size: 1024,
            warmup_time: 100.0,
            max_crossings: 500,
            max_return_time: 1e3,
            fixed_point_tol: 1e-8,
            anchor: None,
        }
    }
}

/// One period of the deterministic cycle sampled on `m` uniform times.
#[derive(Clone, Debug)]
pub struct CycleParameterization {
    pub period: f64,
    pub grid: Vec<f64>,
    pub l: Vec<DVector<f64>>,
    pub f_on_l: Vec<DVector<f64>>,
    pub tangent: Vec<DVector<f64>>,
    /// `dT/dt` per sample.
    pub tangent_rate: Vec<DVector<f64>>,
    pub jacobian: Vec<DMatrix<f64>>,
    /// Curvature `‖dT/ds‖`.
    pub kappa: Vec<f64>,
    pub speed: Vec<f64>,
    pub closure_error: f64,
    pub(crate) system: SdeSystem,
    pub(crate) substeps: usize,
    pub(crate) l_end: DVector<f64>,
    l_interp: GridHermite,
    speed_interp: GridHermite,
}

impl CycleParameterization {
    pub fn dimension(&self) -> usize {
        self.l[0].len()
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    pub fn grid_step(&self) -> f64 {
        self.period / self.grid.len() as f64
    }

    pub fn system(&self) -> &SdeSystem {
        &self.system
    }

    /// `L(τ)` for any τ (taken modulo the period).
    pub fn point_at(&self, tau: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dimension());
        self.l_interp
            .eval(tau.rem_euclid(self.period), out.as_mut_slice());
        out
    }

    pub(crate) fn point_into(&self, tau_mod: f64, out: &mut [f64]) {
        self.l_interp.eval(tau_mod, out)
    }

    /// `‖f(L(τ))‖`.
    pub fn speed_at(&self, tau: f64) -> f64 {
        self.speed_interp.eval_scalar(tau.rem_euclid(self.period))
    }

    pub(crate) fn speed_interp(&self) -> &GridHermite {
        &self.speed_interp
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Locates the attracting cycle reached from `initial_guess`.
///
/// After a warm-up the flow is iterated through the Poincaré section through
/// the anchor, normal to the drift there; each crossing is refined by
/// bisection/secant on the partial RK4 step. Once successive crossing points
/// and return times agree to ~1e-10 the cycle is resampled on a uniform grid.
pub fn find_limit_cycle(
    system: &SdeSystem,
    initial_guess: &[f64],
    search: &CycleSearch,
) -> Result<CycleParameterization> {
    let n = system.dimension();
    if n < 2 {
        return Err(Error::Config("limit cycles need dimension >= 2".into()));
    }
    if initial_guess.len() != n {
        return Err(Error::Config(format!(
            "initial guess has {} components, system has {n}",
            initial_guess.len()
        )));
    }
    if !(search.dt > 0.0) || search.grid_size < 8 || !(search.tol > 0.0) {
        return Err(Error::Config("invalid cycle search settings".into()));
    }
    let sys = system.without_noise();
    let mut rk = Rk4::new(&sys);
    let dt = search.dt;
    let is_fixed = |f: &[f64], y: &[f64]| norm(f) < search.fixed_point_tol * (1.0 + norm(y));

    let mut y = initial_guess.to_vec();
    let warm_steps = (search.warmup_time / dt).ceil() as usize;
    for step in 0..warm_steps {
        rk.step(&mut y, dt);
        if diverged(&y) {
            return Err(Error::Divergence { step, path: None });
        }
        if is_fixed(rk.last_slope(), &y) {
            return Err(Error::FixedPoint { state: y });
        }
    }

    let anchor = match &search.anchor {
        Some(a) if a.len() != n => {
            return Err(Error::Config("anchor dimension mismatch".into()));
        }
        Some(a) => a.clone(),
        None => y.clone(),
    };
    let mut normal = vec![0.0; n];
    sys.eval_drift(&anchor, &mut normal);
    if is_fixed(&normal, &anchor) {
        return Err(Error::FixedPoint { state: anchor });
    }
    let nn = norm(&normal);
    normal.iter_mut().for_each(|v| *v /= nn);
    let section = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&anchor)
            .zip(&normal)
            .map(|((p, a), n)| (p - a) * n)
            .sum()
    };

    let mut prev = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut fbuf = vec![0.0; n];
    let mut last_cross: Option<(Vec<f64>, f64)> = None;
    let mut crossings = 0usize;
    let mut t = 0.0;
    let mut max_dist = 0.0f64;
    let mut g_prev = section(&y);
    let mut total_steps = 0usize;
    let (x0, period) = loop {
        prev.copy_from_slice(&y);
        rk.step(&mut y, dt);
        t += dt;
        total_steps += 1;
        if diverged(&y) {
            return Err(Error::Divergence {
                step: warm_steps + total_steps,
                path: None,
            });
        }
        if is_fixed(rk.last_slope(), &prev) {
            return Err(Error::FixedPoint { state: prev });
        }
        max_dist = max_dist.max(dist(&y, &anchor));
        let g_new = section(&y);
        if g_prev < 0.0 && g_new >= 0.0 {
            // Refine the crossing time within the step.
            let (mut lo, mut hi) = (0.0, dt);
            let (mut glo, mut ghi) = (g_prev, g_new);
            for _ in 0..200 {
                let secant = lo - glo * (hi - lo) / (ghi - glo);
                let mid = if secant > lo && secant < hi {
                    // Guard against one-sided secant stagnation.
                    0.5 * (secant + 0.5 * (lo + hi))
                } else {
                    0.5 * (lo + hi)
                };
                trial.copy_from_slice(&prev);
                rk.step(&mut trial, mid);
                let gm = section(&trial);
                if gm < 0.0 {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                    ghi = gm;
                }
                if hi - lo < 1e-15 * (1.0 + t) || gm.abs() < 1e-15 {
                    break;
                }
            }
            let s = hi;
            trial.copy_from_slice(&prev);
            rk.step(&mut trial, s);
            sys.eval_drift(&trial, &mut fbuf);
            let outward: f64 = fbuf.iter().zip(&normal).map(|(a, b)| a * b).sum();
            if outward > 0.0 && dist(&trial, &anchor) < 0.5 * max_dist {
                let tc = t - dt + s;
                crossings += 1;
                if let Some((xp, pp)) = &last_cross {
                    let point_change = dist(&trial, xp);
                    if (tc - pp).abs() <= 1e-10 * tc
                        && point_change <= 1e-9 * (1.0 + norm(&trial))
                    {
                        break (trial.clone(), tc);
                    }
                }
                if crossings > search.max_crossings {
                    return Err(Error::NoCycle(format!(
                        "section returns did not converge after {} crossings",
                        search.max_crossings
                    )));
                }
                last_cross = Some((trial.clone(), tc));
                // Restart the loop from the crossing point.
                y.copy_from_slice(&trial);
                t = 0.0;
                max_dist = 0.0;
                g_prev = 0.0;
                continue;
            }
        }
        g_prev = g_new;
        if t > search.max_return_time {
            return Err(Error::NoCycle(format!(
                "no return to the Poincaré section within {}",
                search.max_return_time
            )));
        }
    };

    sample_cycle(&sys, &x0, period, search)
}

fn sample_cycle(
    sys: &SdeSystem,
    x0: &[f64],
    period: f64,
    search: &CycleSearch,
) -> Result<CycleParameterization> {
    let n = x0.len();
    let m = search.grid_size;
    let substeps = ((period / (m as f64 * search.dt)).ceil() as usize).max(1);
    let h = period / (m * substeps) as f64;
    let mut rk = Rk4::new(sys);
    let mut y = x0.to_vec();
    let mut l = Vec::with_capacity(m);
    for _ in 0..m {
        l.push(DVector::from_column_slice(&y));
        for _ in 0..substeps {
            rk.step(&mut y, h);
        }
    }
    let l_end = DVector::from_column_slice(&y);
    let closure_error = (&l_end - &l[0]).norm();
    if closure_error >= search.tol * l[0].norm() + search.tol {
        return Err(Error::NoCycle(format!(
            "cycle does not close: |L(P) - L(0)| = {closure_error:.3e}"
        )));
    }

    let mut f_on_l = Vec::with_capacity(m);
    let mut tangent = Vec::with_capacity(m);
    let mut tangent_rate = Vec::with_capacity(m);
    let mut jacobian = Vec::with_capacity(m);
    let mut kappa = Vec::with_capacity(m);
    let mut speed = Vec::with_capacity(m);
    for p in &l {
        let f = sys.drift_vector(p);
        let j = sys.jacobian(p.as_slice());
        let (t, td, s) = tangent_and_rate(&f, &j);
        kappa.push(td.norm() / s);
        speed.push(s);
        tangent.push(t);
        tangent_rate.push(td);
        jacobian.push(j);
        f_on_l.push(f);
    }

    let dt_grid = period / m as f64;
    let f_end = sys.drift_vector(&l_end);
    let j_end = sys.jacobian(l_end.as_slice());
    let mut lv = Vec::with_capacity((m + 1) * n);
    let mut ls = Vec::with_capacity((m + 1) * n);
    let mut sv = Vec::with_capacity(m + 1);
    let mut ss = Vec::with_capacity(m + 1);
    let mut push = |p: &DVector<f64>, f: &DVector<f64>, j: &DMatrix<f64>| {
        lv.extend_from_slice(p.as_slice());
        ls.extend_from_slice(f.as_slice());
        let s = f.norm();
        sv.push(s);
        // d‖f‖/dt = fᵀ J f / ‖f‖
        ss.push(f.dot(&(j * f)) / s);
    };
    for k in 0..m {
        push(&l[k], &f_on_l[k], &jacobian[k]);
    }
    push(&l_end, &f_end, &j_end);

    Ok(CycleParameterization {
        period,
        grid: (0..m).map(|k| k as f64 * dt_grid).collect(),
        l,
        f_on_l,
        tangent,
        tangent_rate,
        jacobian,
        kappa,
        speed,
        closure_error,
        system: sys.clone(),
        substeps,
        l_end,
        l_interp: GridHermite::new(dt_grid, n, lv, ls),
        speed_interp: GridHermite::new(dt_grid, 1, sv, ss),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::HopfParams;
    use crate::presets;
    use std::f64::consts::PI;

    #[test]
    fn hopf_cycle_period_and_radius() {
        let p = HopfParams::new(2.0 * PI, 2.0 * PI, 2.0 * PI, 1.0, 0.0).unwrap();
        let search = CycleSearch {
            anchor: Some(vec![1.0, 0.0]),
            ..Default::default()
        };
        let c = find_limit_cycle(&p.system(), &[0.5, 0.2], &search).unwrap();
        assert!((c.period - 1.0).abs() < 1e-6, "period {}", c.period);
        for (k, pt) in c.l.iter().enumerate() {
            assert!((pt.norm() - 1.0).abs() < 1e-8);
            let t = c.grid[k];
            assert!((pt[0] - (2.0 * PI * t).cos()).abs() < 1e-7);
            assert!((pt[1] - (2.0 * PI * t).sin()).abs() < 1e-7);
            assert!((c.kappa[k] - 1.0).abs() < 1e-7);
            assert!((c.tangent[k].norm() - 1.0).abs() < 1e-12);
            assert!(c.tangent[k].dot(&c.f_on_l[k]) > 0.0);
        }
        assert!((c.speed_at(0.37) - 2.0 * PI).abs() < 1e-7);
        let q = c.point_at(1.25);
        assert!((q[0]).abs() < 1e-7 && (q[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn van_der_pol_period() {
        let sys = presets::van_der_pol(1.0);
        let c = find_limit_cycle(&sys, &[0.5, 0.0], &CycleSearch::default()).unwrap();
        assert!((c.period - 6.6633).abs() < 1e-3, "period {}", c.period);
        assert!(c.closure_error < 1e-8);
    }

    #[test]
    fn stable_focus_is_a_fixed_point() {
        let sys = presets::linear_spiral(0.5, 1.0);
        match find_limit_cycle(&sys, &[1.0, 0.0], &CycleSearch::default()) {
            Err(Error::FixedPoint { .. }) => {}
            other => panic!("expected fixed point, got {other:?}"),
        }
    }

    #[test]
    fn no_recurrence_is_reported() {
        // Constant drift: no fixed point, never returns.
        let drift = crate::sde::FnDrift::new(2, |_: &[f64], o: &mut [f64]| {
            o[0] = 1.0;
            o[1] = 0.0;
        });
        let sys = SdeSystem::deterministic(std::sync::Arc::new(drift)).unwrap();
        let search = CycleSearch {
            warmup_time: 1.0,
            max_return_time: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            find_limit_cycle(&sys, &[0.0, 0.0], &search),
            Err(Error::NoCycle(_))
        ));
    }
}
