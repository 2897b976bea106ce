//! Truncated Fock space, qubit ⊗ field indexing and initial states.
//!
//! Composite basis states are ordered with the qubit index varying fastest:
//! `flat = 2 * photon + q` where `q = 0` for `|g>` and `q = 1` for `|e>`.
//! Two-by-two qubit matrices use the same `(g, e)` row order.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};

/// Probability allowed outside a truncated Fock basis.
pub const TRUNCATION_TAIL_BOUND: f64 = 1e-12;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_FLOOR: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasis {
    dim: usize,
}

impl FockBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("Fock dimension must be positive".into()));
        }
        Ok(Self { dim })
    }

    /// Default truncation for `field` with photon process order `k`:
    /// `ceil(n̄ + 10 √n̄ + 20)`, enlarged for thermal fields until the
    /// geometric tail drops below [`TRUNCATION_TAIL_BOUND`].
    pub fn for_field(field: &FieldStateSpec, k: u32) -> Self {
        let nbar = field.mean_photons();
        let mut dim = (nbar + 10.0 * nbar.sqrt() + 20.0).ceil() as usize;
        if let FieldStateSpec::Thermal { mean_photons } = *field {
            if mean_photons > 0.0 {
                let ratio = mean_photons / (1.0 + mean_photons);
                let needed = (TRUNCATION_TAIL_BOUND.ln() / ratio.ln()).ceil() as usize;
                dim = dim.max(needed);
            }
        }
        if let FieldStateSpec::Fock { n } = *field {
            dim = dim.max(n + k as usize + 1);
        }
        Self { dim: dim.max(k as usize + 1) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the qubit ⊗ field space.
    pub fn composite_dim(&self) -> usize {
        2 * self.dim
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    G,
    E,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::G => 0,
            Qubit::E => 1,
        }
    }

    /// Eigenvalue of `σ_z`.
    pub fn sigma_z(self) -> f64 {
        match self {
            Qubit::G => -1.0,
            Qubit::E => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeIndex {
    pub qubit: Qubit,
    pub photon: usize,
}

impl CompositeIndex {
    pub fn new(qubit: Qubit, photon: usize) -> Self {
        Self { qubit, photon }
    }

    pub fn flat(self) -> usize {
        2 * self.photon + self.qubit.index()
    }

    pub fn from_flat(flat: usize) -> Self {
        let qubit = if flat % 2 == 1 { Qubit::E } else { Qubit::G };
        Self { qubit, photon: flat / 2 }
    }
}

/// Initial junction state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QubitStateSpec {
    /// `cos²θ |e><e| + sin²θ |g><g|`
    MixedDiagonal { theta: f64 },
    /// `cos(θ/2) |e> + sin(θ/2) |g>`
    PureSuperposition { theta: f64 },
}

impl QubitStateSpec {
    /// Mixed state with the given excited-state weight ς₁.
    pub fn mixed_with_excited_weight(weight: f64) -> Self {
        QubitStateSpec::MixedDiagonal { theta: weight.clamp(0.0, 1.0).sqrt().acos() }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            QubitStateSpec::MixedDiagonal { theta } | QubitStateSpec::PureSuperposition { theta } => theta,
        }
    }

    pub fn is_pure(&self) -> bool {
        match *self {
            QubitStateSpec::PureSuperposition { .. } => true,
            QubitStateSpec::MixedDiagonal { theta } => {
                let c = theta.cos().powi(2);
                c == 0.0 || c == 1.0
            }
        }
    }

    /// `(ς₂, ς₁)`: ground and excited weights of the mixed form.
    pub fn diagonal_weights(&self) -> [f64; 2] {
        match *self {
            QubitStateSpec::MixedDiagonal { theta } => [theta.sin().powi(2), theta.cos().powi(2)],
            QubitStateSpec::PureSuperposition { theta } => {
                [(theta / 2.0).sin().powi(2), (theta / 2.0).cos().powi(2)]
            }
        }
    }

    /// Amplitudes `(g, e)` for the pure superposition.
    pub fn amplitudes(&self) -> Option<[C64; 2]> {
        match *self {
            QubitStateSpec::PureSuperposition { theta } => Some([
                C64::new((theta / 2.0).sin(), 0.0),
                C64::new((theta / 2.0).cos(), 0.0),
            ]),
            QubitStateSpec::MixedDiagonal { .. } => None,
        }
    }

    /// 2×2 density matrix in `(g, e)` order.
    pub fn density(&self) -> CMat {
        match self.amplitudes() {
            Some(a) => Mat::from_fn(2, 2, |i, j| a[i] * a[j].conj()),
            None => {
                let w = self.diagonal_weights();
                Mat::from_fn(2, 2, |i, j| if i == j { C64::new(w[i], 0.0) } else { ZERO })
            }
        }
    }
}

/// Initial cavity field state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldStateSpec {
    Coherent {
        #[serde(with = "complex_pair")]
        alpha: C64,
    },
    Thermal { mean_photons: f64 },
    Fock { n: usize },
}

impl FieldStateSpec {
    /// Coherent state with real amplitude `√n̄`.
    pub fn coherent_with_mean(nbar: f64) -> Self {
        FieldStateSpec::Coherent { alpha: C64::new(nbar.sqrt(), 0.0) }
    }

    pub fn mean_photons(&self) -> f64 {
        match *self {
            FieldStateSpec::Coherent { alpha } => alpha.norm_sqr(),
            FieldStateSpec::Thermal { mean_photons } => mean_photons,
            FieldStateSpec::Fock { n } => n as f64,
        }
    }

    pub fn is_pure(&self) -> bool {
        !matches!(self, FieldStateSpec::Thermal { mean_photons } if *mean_photons > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldStateSpec::Coherent { alpha } if !(alpha.re.is_finite() && alpha.im.is_finite()) => {
                Err(Error::Validation("coherent amplitude must be finite".into()))
            }
            FieldStateSpec::Thermal { mean_photons } if !(mean_photons >= 0.0 && mean_photons.is_finite()) => {
                Err(Error::Validation("thermal occupation must be finite and non-negative".into()))
            }
            _ => Ok(()),
        }
    }

    /// Fock amplitudes `b_n` for pure fields, unnormalized after truncation.
    pub fn amplitudes(&self, basis: FockBasis) -> Option<Vec<C64>> {
        let dim = basis.dim();
        match *self {
            FieldStateSpec::Coherent { alpha } => Some(coherent_amplitudes(alpha, dim)),
            FieldStateSpec::Fock { n } => Some((0..dim).map(|m| if m == n { ONE } else { ZERO }).collect()),
            FieldStateSpec::Thermal { mean_photons } if mean_photons == 0.0 => {
                Some((0..dim).map(|m| if m == 0 { ONE } else { ZERO }).collect())
            }
            FieldStateSpec::Thermal { .. } => None,
        }
    }

    /// Photon-number distribution inside the basis.
    pub fn populations(&self, basis: FockBasis) -> Vec<f64> {
        match *self {
            FieldStateSpec::Thermal { mean_photons } => thermal_populations(mean_photons, basis.dim()),
            _ => self.amplitudes(basis).unwrap().iter().map(|b| b.norm_sqr()).collect(),
        }
    }

    /// Probability carried by photon numbers `n ≥ dim`.
    pub fn truncation_tail(&self, basis: FockBasis) -> f64 {
        let dim = basis.dim();
        match *self {
            FieldStateSpec::Coherent { alpha } => coherent_tail(alpha, dim),
            FieldStateSpec::Thermal { mean_photons } => {
                if mean_photons == 0.0 {
                    0.0
                } else {
                    (mean_photons / (1.0 + mean_photons)).powi(dim as i32)
                }
            }
            FieldStateSpec::Fock { n } => {
                if n < dim {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn density(&self, basis: FockBasis) -> CMat {
        let dim = basis.dim();
        match self.amplitudes(basis) {
            Some(b) => Mat::from_fn(dim, dim, |i, j| b[i] * b[j].conj()),
            None => {
                let p = self.populations(basis);
                Mat::from_fn(dim, dim, |i, j| if i == j { C64::new(p[i], 0.0) } else { ZERO })
            }
        }
    }
}

mod complex_pair {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(re) => C64::new(re, 0.0),
            Repr::Pair([re, im]) => C64::new(re, im),
        })
    }
}

/// `b_{n+1} = b_n α / √(n+1)` starting from `b_0 = exp(-|α|²/2)`.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut b = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        out.push(b);
        b = b * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

fn coherent_tail(alpha: C64, dim: usize) -> f64 {
    let nbar = alpha.norm_sqr();
    // continue the amplitude recurrence past the cutoff until the terms die out
    let mut p = (-nbar).exp();
    for n in 0..dim {
        p *= nbar / (n + 1) as f64;
    }
    let mut tail = 0.0;
    let mut n = dim;
    loop {
        tail += p;
        n += 1;
        p *= nbar / n as f64;
        if (n as f64 > nbar && p < tail * 1e-17) || p == 0.0 || n > dim + 100_000 {
            break;
        }
    }
    tail
}

fn thermal_populations(nbar: f64, dim: usize) -> Vec<f64> {
    if nbar == 0.0 {
        return (0..dim).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect();
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p = 1.0 / (1.0 + nbar);
    (0..dim)
        .map(|_| {
            let out = p;
            p *= ratio;
            out
        })
        .collect()
}

/// Field annihilation operator: `A[n-1, n] = √n`.
pub fn make_annihilation(basis: FockBasis) -> CMat {
    let d = basis.dim();
    Mat::from_fn(d, d, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { ZERO })
}

/// Worst-case invariant defects of one or more density matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl Default for InvariantReport {
    fn default() -> Self {
        Self { trace_defect: 0.0, hermiticity_defect: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

impl InvariantReport {
    pub fn merge(self, other: Self) -> Self {
        Self {
            trace_defect: self.trace_defect.max(other.trace_defect),
            hermiticity_defect: self.hermiticity_defect.max(other.hermiticity_defect),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.trace_defect <= TRACE_TOL
            && self.hermiticity_defect <= HERMITICITY_TOL
            && self.min_eigenvalue >= POSITIVITY_FLOOR
    }
}

/// Density matrix on the qubit ⊗ field space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    fock_dim: usize,
    data: CMat,
}

impl DensityMatrix {
    pub fn new(fock_dim: usize, data: CMat) -> Result<Self> {
        if data.nrows() != 2 * fock_dim || data.ncols() != 2 * fock_dim {
            return Err(Error::Validation(format!(
                "density matrix is {}x{}, expected {}x{}",
                data.nrows(),
                data.ncols(),
                2 * fock_dim,
                2 * fock_dim
            )));
        }
        Ok(Self { fock_dim, data })
    }

    pub fn from_pure(fock_dim: usize, psi: &[C64]) -> Result<Self> {
        let d = psi.len();
        Self::new(fock_dim, Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn get(&self, row: CompositeIndex, col: CompositeIndex) -> C64 {
        self.data[(row.flat(), col.flat())]
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.data).re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        let d = self.dim();
        let mut s = 0.0;
        for j in 0..d {
            for i in 0..d {
                s += self.data[(i, j)].norm_sqr();
            }
        }
        s
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.data)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.data)
    }

    /// Measures all three invariants with a dense eigensolve.
    pub fn check(&self) -> Result<InvariantReport> {
        let eig = self.eigenvalues()?;
        Ok(self.check_with_spectrum(&eig))
    }

    /// Like [`check`](Self::check) but reuses an already computed spectrum
    /// of a unitarily equivalent matrix.
    pub fn check_with_spectrum(&self, spectrum: &[f64]) -> InvariantReport {
        InvariantReport {
            trace_defect: (linalg::trace(&self.data) - ONE).norm(),
            hermiticity_defect: self.hermiticity_defect(),
            min_eigenvalue: spectrum.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// ρ_A(0) ⊗ ρ_F(0).
pub fn make_initial_state(qubit: &QubitStateSpec, field: &FieldStateSpec, basis: FockBasis) -> Result<DensityMatrix> {
    field.validate()?;
    let tail = field.truncation_tail(basis);
    if tail > TRUNCATION_TAIL_BOUND {
        return Err(Error::Truncation { dim: basis.dim(), tail, bound: TRUNCATION_TAIL_BOUND });
    }
    let rho = linalg::kron(&field.density(basis), &qubit.density());
    DensityMatrix::new(basis.dim(), rho)
}

/// Pure composite vector `|qubit> ⊗ |field>` when both factors are pure.
pub fn product_vector(qubit: [C64; 2], field: &[C64]) -> Vec<C64> {
    let mut psi = Vec::with_capacity(2 * field.len());
    for b in field {
        psi.push(qubit[0] * b);
        psi.push(qubit[1] * b);
    }
    psi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    Qubit,
    Field,
}

pub fn partial_trace(rho: &DensityMatrix, keep: Keep) -> CMat {
    let m = rho.matrix();
    let nf = rho.fock_dim();
    match keep {
        Keep::Qubit => Mat::from_fn(2, 2, |a, b| (0..nf).map(|n| m[(2 * n + a, 2 * n + b)]).sum()),
        Keep::Field => Mat::from_fn(nf, nf, |n, k| m[(2 * n, 2 * k)] + m[(2 * n + 1, 2 * k + 1)]),
    }
}

/// Qubit marginal of a pure composite vector, `(g, e)` order.
pub fn qubit_marginal_of_vector(psi: &[C64]) -> [[C64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for pair in psi.chunks_exact(2) {
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] += pair[a] * pair[b].conj();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::linalg::max_abs_diff;

    fn basis(d: usize) -> FockBasis {
        FockBasis::new(d).unwrap()
    }

    #[test]
    fn annihilation_dim1_is_zero() {
        let a = make_annihilation(basis(1));
        assert_eq!(a[(0, 0)], ZERO);
    }

    #[test]
    fn annihilation_dim3_entries() {
        let a = make_annihilation(basis(3));
        for i in 0..3 {
            for j in 0..3 {
                let want = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert!((a[(i, j)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn truncated_commutator_defect_sits_in_last_level() {
        let a = make_annihilation(basis(4));
        let ad = linalg::adjoint(&a);
        let c = &a * &ad - &ad * &a;
        let want = [1.0, 1.0, 1.0, -3.0];
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { want[i] } else { 0.0 };
                assert!((c[(i, j)] - C64::new(w, 0.0)).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn flat_index_round_trips() {
        for flat in 0..40 {
            assert_eq!(CompositeIndex::from_flat(flat).flat(), flat);
        }
        assert_eq!(CompositeIndex::new(Qubit::E, 3).flat(), 7);
    }

    #[test]
    fn excited_fock_vacuum() {
        let rho = make_initial_state(
            &QubitStateSpec::MixedDiagonal { theta: 0.0 },
            &FieldStateSpec::Fock { n: 0 },
            basis(4),
        )
        .unwrap();
        let e0 = CompositeIndex::new(Qubit::E, 0);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == e0.flat() && j == e0.flat() { 1.0 } else { 0.0 };
                assert!((rho.matrix()[(i, j)].re - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equal_mixture_on_vacuum() {
        let rho = make_initial_state(
            &QubitStateSpec::MixedDiagonal { theta: PI / 4.0 },
            &FieldStateSpec::Fock { n: 0 },
            basis(3),
        )
        .unwrap();
        assert!((rho.get(CompositeIndex::new(Qubit::E, 0), CompositeIndex::new(Qubit::E, 0)).re - 0.5).abs() < 1e-15);
        assert!((rho.get(CompositeIndex::new(Qubit::G, 0), CompositeIndex::new(Qubit::G, 0)).re - 0.5).abs() < 1e-15);
        assert!(rho.get(CompositeIndex::new(Qubit::E, 0), CompositeIndex::new(Qubit::G, 0)).norm() < 1e-15);
    }

    /// Poisson pmf through logarithms, independent of the amplitude recurrence.
    fn poisson_pmf(nbar: f64, n: usize) -> f64 {
        let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        (n as f64 * nbar.ln() - nbar - ln_fact).exp()
    }

    #[test]
    fn coherent_population_at_mean() {
        let field = FieldStateSpec::coherent_with_mean(25.0);
        let b = FockBasis::for_field(&field, 1);
        let rho = make_initial_state(&QubitStateSpec::MixedDiagonal { theta: 0.0 }, &field, b).unwrap();
        let p25 = rho.get(CompositeIndex::new(Qubit::E, 25), CompositeIndex::new(Qubit::E, 25)).re;
        assert!((p25 - poisson_pmf(25.0, 25)).abs() < 1e-14);
        assert!((p25 - 0.0795).abs() < 5e-5);
    }

    #[test]
    fn default_dim_formula_and_thermal_extension() {
        let coh = FieldStateSpec::coherent_with_mean(25.0);
        assert_eq!(FockBasis::for_field(&coh, 1).dim(), 95);
        assert!(coh.truncation_tail(FockBasis::for_field(&coh, 1)) < TRUNCATION_TAIL_BOUND);
        let th = FieldStateSpec::Thermal { mean_photons: 25.0 };
        let b = FockBasis::for_field(&th, 1);
        assert!(th.truncation_tail(b) <= TRUNCATION_TAIL_BOUND);
        assert!(th.truncation_tail(FockBasis::new(b.dim() - 1).unwrap()) > TRUNCATION_TAIL_BOUND);
    }

    #[test]
    fn truncation_error_when_dim_too_small() {
        let err = make_initial_state(
            &QubitStateSpec::MixedDiagonal { theta: 0.0 },
            &FieldStateSpec::coherent_with_mean(25.0),
            basis(30),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Truncation { dim: 30, .. }));
    }

    #[test]
    fn purity_only_for_pure_products() {
        let b = basis(30);
        let coh = FieldStateSpec::coherent_with_mean(2.0);
        let pure = make_initial_state(&QubitStateSpec::PureSuperposition { theta: 1.0 }, &coh, b).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-10);
        let mixed = make_initial_state(&QubitStateSpec::MixedDiagonal { theta: 1.0 }, &coh, b).unwrap();
        assert!(mixed.purity() < 0.99);
        let thermal = make_initial_state(
            &QubitStateSpec::PureSuperposition { theta: 1.0 },
            &FieldStateSpec::Thermal { mean_photons: 0.5 },
            FockBasis::for_field(&FieldStateSpec::Thermal { mean_photons: 0.5 }, 1),
        )
        .unwrap();
        assert!(thermal.purity() < 0.99);
    }

    #[test]
    fn product_state_partial_trace_recovers_factors() {
        let q = QubitStateSpec::MixedDiagonal { theta: 0.7 };
        let f = FieldStateSpec::Coherent { alpha: C64::new(0.8, -0.3) };
        let b = basis(25);
        let rho = make_initial_state(&q, &f, b).unwrap();
        assert!(max_abs_diff(&partial_trace(&rho, Keep::Qubit), &q.density()) < 1e-12);
        assert!(max_abs_diff(&partial_trace(&rho, Keep::Field), &f.density(b)) < 1e-12);
    }

    #[test]
    fn bell_like_state_has_maximally_mixed_qubit() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![ZERO; 6];
        psi[CompositeIndex::new(Qubit::E, 0).flat()] = C64::new(s, 0.0);
        psi[CompositeIndex::new(Qubit::G, 1).flat()] = C64::new(s, 0.0);
        let rho = DensityMatrix::from_pure(3, &psi).unwrap();
        let q = partial_trace(&rho, Keep::Qubit);
        assert!((q[(0, 0)].re - 0.5).abs() < 1e-15 && (q[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(q[(0, 1)].norm() < 1e-15);
    }

    fn random_state(seed: u64, nf: usize) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = 2 * nf;
        let a = Mat::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p = &a * linalg::adjoint(&a);
        let tr = linalg::trace(&p).re;
        DensityMatrix::new(nf, linalg::scale(&p, C64::new(1.0 / tr, 0.0))).unwrap()
    }

    proptest! {
        #[test]
        fn partial_traces_preserve_trace(seed in any::<u64>()) {
            let rho = random_state(seed, 3);
            let q = partial_trace(&rho, Keep::Qubit);
            let f = partial_trace(&rho, Keep::Field);
            prop_assert!((linalg::trace(&q).re - 1.0).abs() < 1e-10);
            prop_assert!((linalg::trace(&f).re - 1.0).abs() < 1e-10);
            prop_assert!(linalg::hermiticity_defect(&q) < 1e-12);
            let report = rho.check().unwrap();
            prop_assert!(report.is_physical());
        }

        #[test]
        fn kron_trace_factorizes(theta in 0.0..PI, re in -2.0..2.0f64, im in -2.0..2.0f64) {
            let q = QubitStateSpec::MixedDiagonal { theta };
            let f = FieldStateSpec::Coherent { alpha: C64::new(re, im) };
            let b = FockBasis::for_field(&f, 1);
            let rho = linalg::kron(&f.density(b), &q.density());
            let want = linalg::trace(&f.density(b)).re * linalg::trace(&q.density()).re;
            prop_assert!((linalg::trace(&rho).re - want).abs() < 1e-12);
        }

        #[test]
        fn growing_dim_keeps_amplitudes(re in -4.0..4.0f64, im in -4.0..4.0f64, d in 1usize..60, extra in 1usize..40) {
            let f = FieldStateSpec::Coherent { alpha: C64::new(re, im) };
            let small = f.amplitudes(basis(d)).unwrap();
            let large = f.amplitudes(basis(d + extra)).unwrap();
            prop_assert_eq!(&small[..], &large[..d]);
        }

        #[test]
        fn pure_superposition_is_normalized(theta in -10.0..10.0f64) {
            let a = QubitStateSpec::PureSuperposition { theta }.amplitudes().unwrap();
            prop_assert!((a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs() < 1e-15);
            let w = QubitStateSpec::MixedDiagonal { theta }.diagonal_weights();
            prop_assert!((w[0] + w[1] - 1.0).abs() < 1e-15 && w[0] >= 0.0 && w[1] >= 0.0);
        }
    }
}
