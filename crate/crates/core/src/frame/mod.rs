//! Comoving-frame decomposition of noisy limit cycles in `n` dimensions.
//!
//! A state near the cycle is written `y = L(τ) + U(τ) z` where `L` is the
//! deterministic cycle, `U(t)` the orthogonal frame carrying the initial
//! tangent `T₀` to `T(t)` and the normal hyperplane `P₀` to `P(t)`, and `z ∈ P₀`
//! the deviation. `U` solves
//!
//! ```text
//! dU/dt = −T Ṫᵀ U ℙ₀ + Ṫ T₀ᵀ,   U(0) = Id,
//! ```
//!
//! and to leading order the deviation coordinates `z₀` (components of `z` in a
//! fixed basis of `P₀`) and the phase follow
//!
//! ```text
//! dz₀ = J₀(τ) z₀ dt + σ dW_d,   dτ = dt + σ dW_p / ‖f(L(τ))‖,
//! J₀(τ) = Bᵀ Uᵀ(τ) ℙ(τ) ∇f(L(τ)) U(τ) B.
//! ```
//!
//! For `n > 2` the frame is generally not periodic: `U(t + P) = U(t) U(P)`.
//! The holonomy `U(P)` is kept and applied whenever τ wraps.

mod comoving;
mod cycle;
mod interp;
mod reduced;

pub use comoving::{build_frame, ComovingFrame};
pub use cycle::{find_limit_cycle, CycleParameterization, CycleSearch};
pub use reduced::{reconstruct, reduce, simulate_reduced, ReducedModel, ReducedPath};

pub(crate) use interp::GridHermite;

use nalgebra::DVector;

use crate::sde::SdeSystem;

/// Classical RK4 with reusable buffers.
pub(crate) struct Rk4<'a> {
    system: &'a SdeSystem,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    pub(crate) fn new(system: &'a SdeSystem) -> Self {
        let n = system.dimension();
        Self {
            system,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// Drift at the start of the last step.
    pub(crate) fn last_slope(&self) -> &[f64] {
        &self.k[0]
    }

    pub(crate) fn step(&mut self, y: &mut [f64], h: f64) {
        let n = y.len();
        self.system.eval_drift(y, &mut self.k[0]);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[0][i];
        }
        self.system.eval_drift(&self.tmp, &mut self.k[1]);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[1][i];
        }
        self.system.eval_drift(&self.tmp, &mut self.k[2]);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k[2][i];
        }
        self.system.eval_drift(&self.tmp, &mut self.k[3]);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }
}

/// Unit tangent `T = f/‖f‖` and its time derivative
/// `Ṫ = (J f − T (T·J f)) / ‖f‖` at a point of the cycle.
pub(crate) fn tangent_and_rate(
    f: &DVector<f64>,
    jac: &nalgebra::DMatrix<f64>,
) -> (DVector<f64>, DVector<f64>, f64) {
    let speed = f.norm();
    let t = f / speed;
    let jf = jac * f;
    let t_dot = (&jf - &t * t.dot(&jf)) / speed;
    (t, t_dot, speed)
}
