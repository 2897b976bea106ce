//! Wigner function of the field on a rectangular phase-space grid.
//!
//! Quadratures are `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so the vacuum is
//! `exp(−x² − p²)/π` and `∫∫ W dx dp = 1`. Values come from the Fock-basis
//! expansion `W = Σ ρ_mn W_{|m><n|}`, evaluated with the Laguerre
//! recurrence in `A = (x + ip)/√2`, which equals the displaced-parity sum
//! `(1/π) Σ_n (−1)^n <n|D†ρD|n>` exactly for a truncated `ρ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Population in the highest retained Fock level above which the grid is
/// flagged as possibly truncated.
pub const TRUNCATION_WARNING_LEVEL: f64 = 1e-8;

/// Largest imaginary residue tolerated before the input is rejected.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, p_min: -half_width, p_max: half_width, nx: points, np: points }
    }

    /// `±(|α|√2 + 5)` with 201 points per axis.
    pub fn for_amplitude(alpha_abs: f64) -> Self {
        Self::symmetric(alpha_abs * std::f64::consts::SQRT_2 + 5.0, 201)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 || !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::Validation("Wigner grid needs at least 2 points and a positive extent per axis".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub grid: GridSpec,
    /// `values[i * np + j] = W(x_i, p_j)`.
    pub values: Vec<f64>,
    /// `|Σ W Δx Δp − 1|`.
    pub normalization_defect: f64,
    /// Largest discarded imaginary part.
    pub imaginary_residue: f64,
    /// Population of the highest Fock level in the input.
    pub top_level_population: f64,
    pub truncation_warning: bool,
}

impl WignerGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Complex Wigner sum at one phase-space point; the imaginary part is the
/// anti-Hermitian residue of `rho`.
fn wigner_point(rho: &CMat, x: f64, p: f64, work: &mut [C64]) -> C64 {
    let m_dim = rho.nrows();
    let a = C64::new(x, p) / std::f64::consts::SQRT_2;
    let two_a = a * 2.0;
    let two_a_conj = two_a.conj();

    work[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut w = rho[(0, 0)] * work[0];
    for n in 1..m_dim {
        work[n] = two_a * work[n - 1] / (n as f64).sqrt();
        w += rho[(0, n)] * work[n] + rho[(n, 0)] * work[n].conj();
    }
    for m in 1..m_dim {
        let sm = (m as f64).sqrt();
        let mut temp = work[m];
        // work[m] becomes the function of |m><m|
        work[m] = (two_a_conj * temp - sm * work[m - 1]) / sm;
        w += rho[(m, m)] * work[m];
        for n in m + 1..m_dim {
            // work[n] becomes the function of |m><n|
            let next = (two_a * work[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = work[n];
            work[n] = next;
            w += rho[(m, n)] * work[n] + rho[(n, m)] * work[n].conj();
        }
    }
    w
}

pub fn wigner_from_fock(rho_f: &CMat, grid: &GridSpec) -> Result<WignerGrid> {
    grid.validate()?;
    let m_dim = rho_f.nrows();
    if m_dim == 0 || rho_f.ncols() != m_dim {
        return Err(Error::Validation("field density matrix must be square and non-empty".into()));
    }
    let trace = linalg::trace(rho_f);
    if (trace - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidState(format!("field trace {trace} differs from 1")));
    }
    let herm = linalg::hermiticity_defect(rho_f);
    if herm > 1e-10 {
        return Err(Error::InvalidState(format!("field matrix is not Hermitian (defect {herm:e})")));
    }

    let rows: Vec<(Vec<f64>, f64)> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut work = vec![C64::new(0.0, 0.0); m_dim];
            let mut residue = 0.0f64;
            let row = (0..grid.np)
                .map(|j| {
                    let w = wigner_point(rho_f, grid.x(i), grid.p(j), &mut work);
                    residue = residue.max(w.im.abs());
                    w.re
                })
                .collect();
            (row, residue)
        })
        .collect();

    let imaginary_residue = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    if imaginary_residue > IMAGINARY_RESIDUE_LIMIT {
        return Err(Error::InvalidState(format!("Wigner imaginary residue {imaginary_residue:e}")));
    }
    let values: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
    let integral: f64 = values.iter().sum::<f64>() * grid.dx() * grid.dp();
    let top_level_population = rho_f[(m_dim - 1, m_dim - 1)].re;
    Ok(WignerGrid {
        grid: *grid,
        values,
        normalization_defect: (integral - 1.0).abs(),
        imaginary_residue,
        top_level_population,
        truncation_warning: top_level_population > TRUNCATION_WARNING_LEVEL,
    })
}

/// `Σ max(0, −W) Δx Δp`.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    w.values.iter().map(|&v| (-v).max(0.0)).sum::<f64>() * w.grid.dx() * w.grid.dp()
}
