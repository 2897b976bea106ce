//! Brute-force reference integrator for the master equation.
//!
//! Dense fixed-step RK4 on `ρ`, deliberately independent of the
//! eigenbasis machinery. Small systems only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, I};

/// Largest matrix dimension the oracle accepts.
pub const MAX_DIM: usize = 32;

/// Trace drift at which integration is abandoned.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Record every `stride`-th step; `0` keeps only the endpoints.
    #[serde(default)]
    pub stride: usize,
}

impl IntegratorConfig {
    /// Largest step allowed for `h`: `10⁻³ · 2π / ρ(H)`.
    pub fn max_dt(h: &CMat) -> Result<f64> {
        let radius = linalg::hermitian_eigenvalues(h)?.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Ok(if radius == 0.0 { f64::INFINITY } else { 1e-3 * 2.0 * PI / radius })
    }

    /// Uniform steps that land exactly on `t_max` and respect [`max_dt`](Self::max_dt).
    pub fn for_hamiltonian(h: &CMat, t_max: f64) -> Result<Self> {
        let cap = Self::max_dt(h)?;
        let steps = if cap.is_finite() { (t_max / cap).ceil().max(1.0) } else { 1.0 };
        Ok(Self { dt: t_max / steps, t_max, stride: 0 })
    }

    pub fn validate(&self, h: &CMat) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > 0.0) {
            return Err(Error::Validation("dt and t_max must be positive".into()));
        }
        let cap = Self::max_dt(h)?;
        if self.dt > cap * (1.0 + 1e-12) {
            return Err(Error::Validation(format!("dt = {} exceeds the resolution limit {cap}", self.dt)));
        }
        Ok(())
    }
}

/// `−i[H, ρ] − (γ/2)[H, [H, ρ]]`.
pub fn rhs_milburn(h: &CMat, rho: &CMat, gamma: f64) -> CMat {
    let c = linalg::commutator(h, rho);
    let cc = linalg::commutator(h, &c);
    linalg::scale(&c, -I) + linalg::scale(&cc, C64::new(-0.5 * gamma, 0.0))
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
}

impl Trajectory {
    pub fn last(&self) -> &CMat {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Classical RK4 from `t = 0` to `cfg.t_max`.
pub fn integrate_rk4(h: &CMat, rho0: &CMat, gamma: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let d = h.nrows();
    if d > MAX_DIM {
        return Err(Error::Validation(format!("oracle is limited to dimension {MAX_DIM}, got {d}")));
    }
    if rho0.nrows() != d {
        return Err(Error::Validation("state and Hamiltonian dimensions differ".into()));
    }
    cfg.validate(h)?;
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    let trace0 = linalg::trace(rho0);
    let half = C64::new(0.5 * cfg.dt, 0.0);
    let full = C64::new(cfg.dt, 0.0);
    let sixth = C64::new(cfg.dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut rho = rho0.clone();
    let mut traj = Trajectory { times: vec![0.0], states: vec![rho.clone()] };
    for step in 1..=steps {
        let k1 = rhs_milburn(h, &rho, gamma);
        let k2 = rhs_milburn(h, &(&rho + linalg::scale(&k1, half)), gamma);
        let k3 = rhs_milburn(h, &(&rho + linalg::scale(&k2, half)), gamma);
        let k4 = rhs_milburn(h, &(&rho + linalg::scale(&k3, full)), gamma);
        let incr = k1 + linalg::scale(&k2, two) + linalg::scale(&k3, two) + k4;
        rho = &rho + linalg::scale(&incr, sixth);

        let t = step as f64 * cfg.dt;
        let drift = (linalg::trace(&rho) - trace0).norm();
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::Step { drift, t });
        }
        if step == steps || (cfg.stride > 0 && step % cfg.stride == 0) {
            traj.times.push(t);
            traj.states.push(rho.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use faer::Mat;

    use super::*;
    use crate::linalg::{max_abs_diff, ZERO};

    fn diag(v: &[f64]) -> CMat {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { C64::new(v[i], 0.0) } else { ZERO })
    }

    #[test]
    fn commuting_state_is_fixed_point() {
        let h = diag(&[0.3, -1.0, 2.0]);
        let rho = diag(&[0.2, 0.5, 0.3]);
        let r = rhs_milburn(&h, &rho, 0.7);
        assert!(max_abs_diff(&r, &linalg::zeros(3)) == 0.0);
    }

    #[test]
    fn two_level_hand_derivative() {
        // H = σz/2, ρ = |+><+|: dρ01/dt = −i(1/2 + 1/2)ρ01 = −i/2, dρ10/dt = +i/2
        let h = diag(&[0.5, -0.5]);
        let rho = Mat::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
        let r = rhs_milburn(&h, &rho, 0.0);
        assert!((r[(0, 1)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((r[(1, 0)] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!(r[(0, 0)].norm() < 1e-15 && r[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn derivative_is_traceless() {
        let h = Mat::from_fn(4, 4, |i, j| C64::new((i + j) as f64 * 0.3, i as f64 - j as f64));
        let h = &h + h.adjoint();
        let rho = Mat::from_fn(4, 4, |i, j| C64::new(1.0 / (1.0 + (i + j) as f64), 0.1 * (i as f64 - j as f64)));
        let rho = linalg::scale(&(&rho + rho.adjoint()), C64::new(0.5, 0.0));
        let r = rhs_milburn(&h, &rho, 0.2);
        assert!(linalg::trace(&r).norm() < 1e-13);
    }

    #[test]
    fn diagonal_problem_stays_put() {
        let h = diag(&[1.0, -0.5, 0.25]);
        let rho = diag(&[0.6, 0.3, 0.1]);
        let cfg = IntegratorConfig::for_hamiltonian(&h, 2.0).unwrap();
        let traj = integrate_rk4(&h, &rho, 0.1, &cfg).unwrap();
        assert!(max_abs_diff(traj.last(), &rho) < 1e-15);
    }

    #[test]
    fn resonant_block_rabi_period() {
        // [[0, κ], [κ, 0]] from |e>: populations return after π/κ = 2π/(2κ)
        let kappa = 0.37;
        let h = Mat::from_fn(2, 2, |i, j| if i != j { C64::new(kappa, 0.0) } else { ZERO });
        let rho = diag(&[1.0, 0.0]);
        let period = 2.0 * PI / (2.0 * kappa);
        let cfg = IntegratorConfig::for_hamiltonian(&h, period).unwrap();
        let traj = integrate_rk4(&h, &rho, 0.0, &cfg).unwrap();
        assert!((traj.last()[(0, 0)].re - 1.0).abs() < 1e-6);
        let cfg = IntegratorConfig::for_hamiltonian(&h, period / 2.0).unwrap();
        let traj = integrate_rk4(&h, &rho, 0.0, &cfg).unwrap();
        assert!(traj.last()[(0, 0)].re.abs() < 1e-6);
    }

    #[test]
    fn rejects_coarse_steps_and_large_systems() {
        let h = diag(&[1.0, -1.0]);
        let cfg = IntegratorConfig { dt: 0.1, t_max: 1.0, stride: 0 };
        assert!(matches!(integrate_rk4(&h, &diag(&[1.0, 0.0]), 0.0, &cfg), Err(Error::Validation(_))));
        let big = linalg::identity(MAX_DIM + 1);
        let cfg = IntegratorConfig { dt: 1e-4, t_max: 1e-3, stride: 0 };
        assert!(integrate_rk4(&big, &big, 0.0, &cfg).is_err());
    }

    #[test]
    fn stride_records_intermediate_states() {
        let h = diag(&[1.0, -1.0]);
        let mut cfg = IntegratorConfig::for_hamiltonian(&h, 1.0).unwrap();
        let steps = (cfg.t_max / cfg.dt).round() as usize;
        cfg.stride = steps / 4;
        let traj = integrate_rk4(&h, &diag(&[0.5, 0.5]), 0.0, &cfg).unwrap();
        assert!(traj.times.len() >= 5);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }
}
