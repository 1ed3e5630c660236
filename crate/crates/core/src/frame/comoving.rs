use nalgebra::{DMatrix, DVector};

use super::{tangent_and_rate, CycleParameterization, GridHermite};
use crate::error::{Error, Result};

/// Orthogonality loss per RK4 substep beyond which the grid is too coarse.
const MAX_STEP_DEFECT: f64 = 1e-6;

/// The rotation family `U(t)` along one period of a cycle.
#[derive(Clone, Debug)]
pub struct ComovingFrame {
    /// `U` at each grid sample.
    pub u: Vec<DMatrix<f64>>,
    /// `dU/dt` at each grid sample.
    pub v: Vec<DMatrix<f64>>,
    /// Orthonormal basis `B` (n × (n−1)) of the initial normal hyperplane.
    pub basis_p0: DMatrix<f64>,
    /// `U(P)`; the identity for planar cycles.
    pub holonomy: DMatrix<f64>,
    /// Largest `‖UᵀU − Id‖_F` seen before re-projection.
    pub max_step_defect: f64,
    t0: DVector<f64>,
    u_interp: GridHermite,
}

/// Completes `t0` to an orthonormal basis: the coordinate with the largest
/// `|t0ᵢ|` is skipped, the remaining unit vectors are Gram–Schmidt
/// orthonormalized against `t0` in index order.
pub(crate) fn normal_basis(t0: &DVector<f64>) -> DMatrix<f64> {
    let n = t0.len();
    let skip = t0.iamax();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for i in (0..n).filter(|&i| i != skip) {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        // Two passes of modified Gram–Schmidt for stability.
        for _ in 0..2 {
            let c = t0.dot(&e);
            e.axpy(-c, t0, 1.0);
            for q in &cols {
                let c = q.dot(&e);
                e.axpy(-c, q, 1.0);
            }
        }
        let nrm = e.norm();
        cols.push(e / nrm);
    }
    DMatrix::from_columns(&cols)
}

fn frame_rate(
    t: &DVector<f64>,
    t_dot: &DVector<f64>,
    u: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    t0: &DVector<f64>,
) -> DMatrix<f64> {
    // −T (Ṫᵀ U ℙ₀) + Ṫ T₀ᵀ
    let row = t_dot.transpose() * u * p0;
    -(t * row) + t_dot * t0.transpose()
}

fn nearest_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    w * vt
}

fn orthogonality_defect(u: &DMatrix<f64>) -> f64 {
    let n = u.nrows();
    (u.transpose() * u - DMatrix::identity(n, n)).norm()
}

/// Integrates `dU/dt = −T Ṫᵀ U ℙ₀ + Ṫ T₀ᵀ`, `U(0) = Id`, jointly with the
/// cycle using the same RK4 substeps that produced the grid. `U` is projected
/// to the nearest orthogonal matrix (SVD polar factor) after every substep.
pub fn build_frame(cycle: &CycleParameterization) -> Result<ComovingFrame> {
    let n = cycle.dimension();
    let m = cycle.grid_size();
    let sys = cycle.system();
    let t0 = cycle.tangent[0].clone();
    let p0 = DMatrix::identity(n, n) - &t0 * t0.transpose();
    let h = cycle.period / (m * cycle.substeps) as f64;

    let rates = |l: &DVector<f64>| {
        let f = sys.drift_vector(l);
        let j = sys.jacobian(l.as_slice());
        let (t, td, _) = tangent_and_rate(&f, &j);
        (f, t, td)
    };

    let mut l = cycle.l[0].clone();
    let mut u = DMatrix::<f64>::identity(n, n);
    let mut us = Vec::with_capacity(m);
    let mut vs = Vec::with_capacity(m);
    let mut max_defect = 0.0f64;
    let mut last_v = DMatrix::zeros(n, n);
    for sample in 0..=m {
        let (_, t, td) = rates(&l);
        last_v = frame_rate(&t, &td, &u, &p0, &t0);
        if sample == m {
            break;
        }
        us.push(u.clone());
        vs.push(last_v.clone());
        for _ in 0..cycle.substeps {
            let (f1, t1, d1) = rates(&l);
            let k1 = frame_rate(&t1, &d1, &u, &p0, &t0);
            let l2 = &l + &f1 * (0.5 * h);
            let u2 = &u + &k1 * (0.5 * h);
            let (f2, t2, d2) = rates(&l2);
            let k2 = frame_rate(&t2, &d2, &u2, &p0, &t0);
            let l3 = &l + &f2 * (0.5 * h);
            let u3 = &u + &k2 * (0.5 * h);
            let (f3, t3, d3) = rates(&l3);
            let k3 = frame_rate(&t3, &d3, &u3, &p0, &t0);
            let l4 = &l + &f3 * h;
            let u4 = &u + &k3 * h;
            let (f4, t4, d4) = rates(&l4);
            let k4 = frame_rate(&t4, &d4, &u4, &p0, &t0);
            l += (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0);
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let defect = orthogonality_defect(&u);
            if defect > MAX_STEP_DEFECT {
                return Err(Error::StepSize { sample, defect });
            }
            max_defect = max_defect.max(defect);
            u = nearest_orthogonal(&u);
        }
    }
    let holonomy = u;

    let dt_grid = cycle.grid_step();
    let nn = n * n;
    let mut vals = Vec::with_capacity((m + 1) * nn);
    let mut slopes = Vec::with_capacity((m + 1) * nn);
    for (uk, vk) in us.iter().zip(&vs) {
        vals.extend_from_slice(uk.as_slice());
        slopes.extend_from_slice(vk.as_slice());
    }
    vals.extend_from_slice(holonomy.as_slice());
    slopes.extend_from_slice(last_v.as_slice());

    Ok(ComovingFrame {
        u: us,
        v: vs,
        basis_p0: normal_basis(&t0),
        holonomy,
        max_step_defect: max_defect,
        t0,
        u_interp: GridHermite::new(dt_grid, nn, vals, slopes),
    })
}

impl ComovingFrame {
    pub fn dimension(&self) -> usize {
        self.t0.len()
    }

    /// `U(τ)` for `τ ∈ [0, P]` (cubic Hermite between samples, not re-projected).
    pub fn u_at(&self, tau: f64) -> DMatrix<f64> {
        let n = self.dimension();
        let mut out = DMatrix::zeros(n, n);
        self.u_interp.eval(tau, out.as_mut_slice());
        out
    }

    pub(crate) fn u_into(&self, tau: f64, out: &mut [f64]) {
        self.u_interp.eval(tau, out)
    }

    /// Whether `U(P)` is the identity to within `tol` (always so for `n = 2`).
    pub fn is_periodic(&self, tol: f64) -> bool {
        let n = self.dimension();
        (&self.holonomy - DMatrix::<f64>::identity(n, n)).norm() < tol
    }

    /// `max ‖UᵀU − Id‖_F` over the grid.
    pub fn max_orthogonality_defect(&self) -> f64 {
        self.u.iter().map(orthogonality_defect).fold(0.0, f64::max)
    }

    /// `max ‖U T₀ − T(t)‖` over the grid.
    pub fn max_tangent_error(&self, cycle: &CycleParameterization) -> f64 {
        self.u
            .iter()
            .zip(&cycle.tangent)
            .map(|(u, t)| (u * &self.t0 - t).norm())
            .fold(0.0, f64::max)
    }

    /// `max ‖(Id − T Tᵀ) V b‖` over the grid and the basis vectors `b` of `P₀`.
    pub fn max_v_perpendicularity(&self, cycle: &CycleParameterization) -> f64 {
        let mut worst = 0.0f64;
        for (v, t) in self.v.iter().zip(&cycle.tangent) {
            let vb = v * &self.basis_p0;
            for c in vb.column_iter() {
                let c = c.into_owned();
                let lateral = &c - t * t.dot(&c);
                worst = worst.max(lateral.norm());
            }
        }
        worst
    }

    /// `max |‖V‖₂ − ‖dT/dt‖|` over the grid, `dT/dt` taken from `tangent_rate`.
    pub fn max_norm_identity_error(&self, cycle: &CycleParameterization) -> f64 {
        self.v
            .iter()
            .zip(&cycle.tangent_rate)
            .map(|(v, td)| (spectral_norm(v) - td.norm()).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{find_limit_cycle, CycleSearch};
    use crate::hopf::HopfParams;
    use crate::presets;
    use std::f64::consts::PI;

    fn hopf_cycle() -> CycleParameterization {
        let p = HopfParams::new(2.0 * PI, 2.0 * PI, 2.0 * PI, 1.0, 0.0).unwrap();
        let search = CycleSearch {
            anchor: Some(vec![1.0, 0.0]),
            ..Default::default()
        };
        find_limit_cycle(&p.system(), &[1.0, 0.0], &search).unwrap()
    }

    #[test]
    fn circle_frame_is_the_planar_rotation() {
        let c = hopf_cycle();
        let fr = build_frame(&c).unwrap();
        assert_eq!(fr.u[0], DMatrix::identity(2, 2));
        for (k, u) in fr.u.iter().enumerate() {
            let a = 2.0 * PI * c.grid[k] / c.period;
            let rot = DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
            assert!((u - rot).norm() < 1e-7, "sample {k}");
        }
        let quarter = fr.u_at(c.period / 4.0) * DVector::from_vec(vec![1.0, 0.0]);
        assert!((quarter[0]).abs() < 1e-6 && (quarter[1] - 1.0).abs() < 1e-6);
        assert!(fr.is_periodic(1e-6));
    }

    #[test]
    fn frame_invariants_on_van_der_pol() {
        let c = find_limit_cycle(&presets::van_der_pol(1.0), &[2.0, 0.0], &CycleSearch::default())
            .unwrap();
        let fr = build_frame(&c).unwrap();
        assert!(fr.max_orthogonality_defect() < 1e-8);
        assert!(fr.max_tangent_error(&c) < 1e-6);
        assert!(fr.max_v_perpendicularity(&c) < 1e-6);
        assert!(fr.max_norm_identity_error(&c) < 1e-6);
    }

    #[test]
    fn analytic_tangent_rate_matches_differences() {
        let c = find_limit_cycle(&presets::van_der_pol(1.0), &[2.0, 0.0], &CycleSearch::default())
            .unwrap();
        let m = c.grid_size();
        let h = c.grid_step();
        let mut worst = 0.0f64;
        for k in 2..m - 2 {
            let fd = (&c.tangent[k - 2] - &c.tangent[k - 1] * 8.0 + &c.tangent[k + 1] * 8.0
                - &c.tangent[k + 2])
                / (12.0 * h);
            worst = worst.max((fd - &c.tangent_rate[k]).norm() / (1.0 + c.tangent_rate[k].norm()));
            // κ·speed = ‖dT/dt‖
            assert!((c.kappa[k] * c.speed[k] - c.tangent_rate[k].norm()).abs() < 1e-9);
        }
        assert!(worst < 1e-5, "worst {worst}");
    }

    #[test]
    fn refining_the_grid_barely_moves_u() {
        let sys = presets::coupled_hopf(2.0 * PI, 1.0, 1.0, 0.5);
        let coarse = CycleSearch {
            grid_size: 256,
            ..Default::default()
        };
        let fine = CycleSearch {
            grid_size: 512,
            anchor: None,
            ..coarse.clone()
        };
        let c1 = find_limit_cycle(&sys, &[1.0, 0.0, 0.0], &coarse).unwrap();
        let fine = CycleSearch {
            anchor: Some(c1.l[0].as_slice().to_vec()),
            ..fine
        };
        let c2 = find_limit_cycle(&sys, c1.l[0].as_slice(), &fine).unwrap();
        let f1 = build_frame(&c1).unwrap();
        let f2 = build_frame(&c2).unwrap();
        for k in 0..256 {
            assert!(spectral_norm(&(&f1.u[k] - &f2.u[2 * k])) < 1e-6, "sample {k}");
        }
    }

    #[test]
    fn three_dimensional_frame_invariants() {
        let sys = presets::coupled_hopf(2.0 * PI, 1.0, 1.0, 0.5);
        let c = find_limit_cycle(&sys, &[1.0, 0.0, 0.0], &CycleSearch::default()).unwrap();
        let fr = build_frame(&c).unwrap();
        assert!(fr.max_orthogonality_defect() < 1e-8);
        assert!(fr.max_tangent_error(&c) < 1e-6);
        assert!(fr.max_v_perpendicularity(&c) < 1e-6);
        assert!(fr.max_norm_identity_error(&c) < 1e-6);
        let b = &fr.basis_p0;
        assert!((b.transpose() * b - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((b.transpose() * &c.tangent[0]).norm() < 1e-12);
    }
}
