//! Built-in ODEs with attracting limit cycles (and one without), used by the
//! `decompose` workflow and the tests.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hopf::{HopfDrift, HopfParams};
use crate::sde::{Drift, SdeSystem};

/// `ẍ − μ(1 − x²)ẋ + x = 0` as `(x, ẋ)`.
#[derive(Clone, Copy, Debug)]
pub struct VanDerPol {
    pub mu: f64,
}

impl Drift for VanDerPol {
    fn dimension(&self) -> usize {
        2
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        out[0] = s[1];
        out[1] = self.mu * (1.0 - s[0] * s[0]) * s[1] - s[0];
    }

    fn jacobian(&self, s: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, -2.0 * self.mu * s[0] * s[1] - 1.0, self.mu * (1.0 - s[0] * s[0])],
        ))
    }
}

/// Linear stable focus `ẋ = −a x − ω y`, `ẏ = ω x − a y`.
#[derive(Clone, Copy, Debug)]
pub struct LinearSpiral {
    pub decay: f64,
    pub omega: f64,
}

impl Drift for LinearSpiral {
    fn dimension(&self) -> usize {
        2
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        out[0] = -self.decay * s[0] - self.omega * s[1];
        out[1] = self.omega * s[0] - self.decay * s[1];
    }

    fn jacobian(&self, _: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[-self.decay, -self.omega, self.omega, -self.decay],
        ))
    }
}

/// Unit-radius Hopf oscillator `(x, y)` (α₀ = α) driving a slave variable
/// `ẇ = −γ w + c x²`. The cycle leaves the `w = 0` plane, so its comoving
/// frame is genuinely three-dimensional.
#[derive(Clone, Copy, Debug)]
pub struct CoupledHopf {
    pub alpha: f64,
    pub lambda_: f64,
    pub gamma: f64,
    pub coupling: f64,
}

impl Drift for CoupledHopf {
    fn dimension(&self) -> usize {
        3
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        let (x, y, w) = (s[0], s[1], s[2]);
        let q = 0.5 * self.lambda_ * (1.0 - x * x - y * y);
        out[0] = q * x - self.alpha * y;
        out[1] = self.alpha * x + q * y;
        out[2] = -self.gamma * w + self.coupling * x * x;
    }

    fn jacobian(&self, s: &[f64]) -> Option<DMatrix<f64>> {
        let (x, y) = (s[0], s[1]);
        let l = self.lambda_;
        let q = 0.5 * l * (1.0 - x * x - y * y);
        Some(DMatrix::from_row_slice(
            3,
            3,
            &[
                q - l * x * x,
                -l * x * y - self.alpha,
                0.0,
                -l * x * y + self.alpha,
                q - l * y * y,
                0.0,
                2.0 * self.coupling * x,
                0.0,
                -self.gamma,
            ],
        ))
    }
}

pub fn van_der_pol(mu: f64) -> SdeSystem {
    SdeSystem::deterministic(Arc::new(VanDerPol { mu })).expect("valid preset")
}

pub fn linear_spiral(decay: f64, omega: f64) -> SdeSystem {
    SdeSystem::deterministic(Arc::new(LinearSpiral { decay, omega })).expect("valid preset")
}

pub fn coupled_hopf(alpha: f64, lambda_: f64, gamma: f64, coupling: f64) -> SdeSystem {
    SdeSystem::deterministic(Arc::new(CoupledHopf {
        alpha,
        lambda_,
        gamma,
        coupling,
    }))
    .expect("valid preset")
}

/// Named presets selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Hopf,
    VanDerPol,
    CoupledHopf,
    LinearSpiral,
}

impl Preset {
    pub const NAMES: [&'static str; 4] = ["hopf", "van-der-pol", "coupled-hopf", "linear-spiral"];

    /// Drift with default parameters; `mu` only applies to van der Pol.
    pub fn drift(self, mu: f64) -> Arc<dyn Drift> {
        use std::f64::consts::PI;
        match self {
            Preset::Hopf => Arc::new(HopfDrift(
                HopfParams::new(2.0 * PI, 2.0 * PI, 2.0 * PI, 1.0, 0.0).expect("valid"),
            )),
            Preset::VanDerPol => Arc::new(VanDerPol { mu }),
            Preset::CoupledHopf => Arc::new(CoupledHopf {
                alpha: 2.0 * PI,
                lambda_: 1.0,
                gamma: 1.0,
                coupling: 0.5,
            }),
            Preset::LinearSpiral => Arc::new(LinearSpiral {
                decay: 0.5,
                omega: 1.0,
            }),
        }
    }

    pub fn initial_guess(self) -> Vec<f64> {
        match self {
            Preset::Hopf => vec![1.0, 0.0],
            Preset::VanDerPol => vec![2.0, 0.0],
            Preset::CoupledHopf => vec![1.0, 0.0, 0.0],
            Preset::LinearSpiral => vec![1.0, 0.0],
        }
    }

    pub fn system(self, mu: f64, sigma: f64) -> Result<SdeSystem> {
        let drift = self.drift(mu);
        if sigma == 0.0 {
            SdeSystem::deterministic(drift)
        } else {
            SdeSystem::isotropic(drift, sigma)
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hopf" => Ok(Preset::Hopf),
            "van-der-pol" | "vdp" => Ok(Preset::VanDerPol),
            "coupled-hopf" => Ok(Preset::CoupledHopf),
            "linear-spiral" => Ok(Preset::LinearSpiral),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                Preset::NAMES.join(", ")
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(d: &dyn Drift, s: &[f64]) -> DMatrix<f64> {
        let n = d.dimension();
        let mut j = DMatrix::zeros(n, n);
        let (mut p, mut m) = (vec![0.0; n], vec![0.0; n]);
        for c in 0..n {
            let mut a = s.to_vec();
            let mut b = s.to_vec();
            a[c] += 1e-6;
            b[c] -= 1e-6;
            d.eval(&a, &mut p);
            d.eval(&b, &mut m);
            for r in 0..n {
                j[(r, c)] = (p[r] - m[r]) / 2e-6;
            }
        }
        j
    }

    #[test]
    fn analytic_jacobians_agree_with_differences() {
        let state3 = [0.7, -0.4, 0.3];
        for name in Preset::NAMES {
            let p: Preset = name.parse().unwrap();
            let d = p.drift(1.3);
            let s = &state3[..d.dimension()];
            let exact = d.jacobian(s).unwrap();
            assert!((exact - fd_jacobian(d.as_ref(), s)).norm() < 1e-6, "{name}");
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(matches!("lorenz".parse::<Preset>(), Err(Error::Config(_))));
    }
}
