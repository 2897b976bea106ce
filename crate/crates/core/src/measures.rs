//! Scalar observables: inversion, entropies, mutual information, tangle
//! and two-qubit concurrence. Entropies use the natural logarithm.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Branch;
use crate::hilbert::{self, CompositeIndex, DensityMatrix, Keep};
use crate::linalg::{self, CMat, C64};

/// Eigenvalues below this are treated as a broken state, not roundoff.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-6;

/// Smallest projection weight for which the concurrence is attempted.
pub const MIN_PROJECTION_WEIGHT: f64 = 1e-6;

/// One observable sampled on a time grid (scaled time λt).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = Self { label: label.into(), times, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::Validation(format!(
                "series {}: {} times but {} values",
                self.label,
                self.times.len(),
                self.values.len()
            )));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!("series {}: times must increase strictly", self.label)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("series {}: non-finite value", self.label)));
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(time, value)` of the first global maximum.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        best
    }
}

/// `Tr[ρ (σ_z ⊗ 1)]`.
pub fn inversion(rho: &DensityMatrix) -> f64 {
    (0..rho.dim())
        .map(|a| CompositeIndex::from_flat(a).qubit.sigma_z() * rho.matrix()[(a, a)].re)
        .sum()
}

/// `−Σ λ ln λ` over a spectrum, clipping roundoff into `[0, 1]`.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < NEGATIVE_EIGENVALUE_LIMIT {
            return Err(Error::InvalidState(format!("eigenvalue {l:e} is negative")));
        }
        let l = l.clamp(0.0, 1.0);
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

pub fn von_neumann_entropy(reduced: &CMat) -> Result<f64> {
    entropy_of_spectrum(&linalg::hermitian_eigenvalues(reduced)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualInformation {
    pub qubit_entropy: f64,
    pub field_entropy: f64,
    pub joint_entropy: f64,
}

impl MutualInformation {
    pub fn value(&self) -> f64 {
        self.qubit_entropy + self.field_entropy - self.joint_entropy
    }
}

/// `S(ρ_A) + S(ρ_F) − S(ρ)`, the relative entropy of ρ to the product of
/// its marginals.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    Ok(mutual_information_parts(rho, &rho.eigenvalues()?)?.value())
}

/// As [`mutual_information`] with the joint spectrum supplied by the caller.
pub fn mutual_information_parts(rho: &DensityMatrix, joint_spectrum: &[f64]) -> Result<MutualInformation> {
    Ok(MutualInformation {
        qubit_entropy: von_neumann_entropy(&hilbert::partial_trace(rho, Keep::Qubit))?,
        field_entropy: von_neumann_entropy(&hilbert::partial_trace(rho, Keep::Field))?,
        joint_entropy: entropy_of_spectrum(joint_spectrum)?,
    })
}

/// `2 Σ_i w_i (1 − Tr[(ρ_a^{(i)})²])` over an ensemble of pure branches.
///
/// For a single branch this is the pure-state tangle; for a mixture it is
/// the value on this particular decomposition, an upper bound on the
/// minimum over decompositions.
pub fn tangle(branches: &[Branch]) -> f64 {
    branches
        .iter()
        .map(|b| {
            let m = hilbert::qubit_marginal_of_vector(&b.state);
            let norm = (m[0][0] + m[1][1]).re;
            let purity: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / (norm * norm);
            2.0 * b.weight * (1.0 - purity)
        })
        .sum()
}

/// Four basis states `|g,n>, |e,n>, |g,n+1>, |e,n+1>` read as two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTwoQubitBasis {
    pub n: usize,
    pub projection_weight: f64,
}

impl EffectiveTwoQubitBasis {
    /// Flat indices in the order `|00>, |01>, |10>, |11>`.
    pub fn indices(&self) -> [usize; 4] {
        let base = 2 * self.n;
        [base, base + 1, base + 2, base + 3]
    }
}

/// Anchor `n` capturing the most trace; ties go to the smaller `n`.
pub fn effective_basis(rho: &DensityMatrix) -> Result<EffectiveTwoQubitBasis> {
    let nf = rho.fock_dim();
    if nf < 2 {
        return Err(Error::Validation("effective two-qubit basis needs at least two Fock states".into()));
    }
    let diag: Vec<f64> = (0..rho.dim()).map(|a| rho.matrix()[(a, a)].re).collect();
    let mut best = EffectiveTwoQubitBasis { n: 0, projection_weight: f64::NEG_INFINITY };
    for n in 0..nf - 1 {
        let w: f64 = diag[2 * n..2 * n + 4].iter().sum();
        if w > best.projection_weight {
            best = EffectiveTwoQubitBasis { n, projection_weight: w };
        }
    }
    Ok(best)
}

/// Concurrence of `ρ` projected onto `basis` and renormalized.
pub fn concurrence(rho: &DensityMatrix, basis: &EffectiveTwoQubitBasis) -> Result<f64> {
    if basis.n + 1 >= rho.fock_dim() {
        return Err(Error::Validation(format!("anchor n = {} out of range", basis.n)));
    }
    let idx = basis.indices();
    let weight: f64 = idx.iter().map(|&a| rho.matrix()[(a, a)].re).sum();
    if weight <= MIN_PROJECTION_WEIGHT {
        return Err(Error::NegligibleSupport(weight));
    }
    let sub = Mat::from_fn(4, 4, |i, j| rho.matrix()[(idx[i], idx[j])] / weight);
    wootters_concurrence(&sub)
}

/// `max(0, λ₁ − λ₂ − λ₃ − λ₄)` with `λ_i` the square roots of the
/// eigenvalues of `√ρ ρ̃ √ρ`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
///
/// The `λ_i` are taken as singular values of `√ρ √ρ̃`, which avoids the
/// square root of roundoff-sized eigenvalues.
pub fn wootters_concurrence(rho: &CMat) -> Result<f64> {
    let (vals, vecs) = linalg::hermitian_eigen(rho)?;
    let floor = 16.0 * f64::EPSILON * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let roots: Vec<f64> = vals.iter().map(|&v| if v > floor { v.sqrt() } else { 0.0 }).collect();
    let root = Mat::from_fn(4, 4, |i, j| (0..4).map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)].conj()).sum::<C64>());
    // σ_y ⊗ σ_y is the antidiagonal (−1, 1, 1, −1)
    let flip = [-1.0, 1.0, 1.0, -1.0];
    let root_tilde = Mat::from_fn(4, 4, |i, j| root[(3 - i, 3 - j)].conj() * (flip[i] * flip[j]));
    let mut lambdas = (&root * &root_tilde)
        .singular_values()
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Reduced field matrix of `ρ`.
pub fn field_marginal(rho: &DensityMatrix) -> CMat {
    hilbert::partial_trace(rho, Keep::Field)
}
