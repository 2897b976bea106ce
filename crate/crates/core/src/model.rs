//! Hamiltonian of a charge qubit coupled to one cavity mode via a k-photon
//! process, and its analytic diagonalization.
//!
//! Energies are in units of ħλ and time in units of 1/λ, with ħ = 1.
//!
//! The interaction only couples `|e,n>` to `|g,n+k>`, so the spectrum
//! splits into 2×2 blocks plus `2k` uncoupled states (`|g,m>` for `m < k`
//! and `|e,n>` for `n ≥ dim − k`, whose partner lies outside the basis).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{make_annihilation, CompositeIndex, FockBasis, Qubit};
use crate::linalg::{self, CMat, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cavity angular frequency ω.
    #[serde(default = "one")]
    pub omega: f64,
    /// Qubit splitting E; `None` means resonance, `E = kω`.
    #[serde(default)]
    pub energy: Option<f64>,
    /// Bare Josephson energy E_J0.
    #[serde(default = "one")]
    pub ej0: f64,
    /// Mixing angle ξ.
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Dimensionless flux φ = π|Φ_λ|/Φ₀.
    #[serde(default = "default_phi")]
    pub phi: f64,
    /// External flux in units of Φ₀.
    #[serde(default = "default_flux")]
    pub flux_ratio: f64,
    /// Photon process order.
    #[serde(default = "default_k")]
    pub k: u32,
    /// Intrinsic decoherence rate γ.
    #[serde(default)]
    pub gamma: f64,
    /// Number of series terms kept in g_k and f; `None` keeps every known term.
    #[serde(default)]
    pub series_order: Option<u32>,
}

fn one() -> f64 {
    1.0
}
fn default_xi() -> f64 {
    FRAC_PI_2
}
fn default_phi() -> f64 {
    0.1
}
fn default_flux() -> f64 {
    0.5
}
fn default_k() -> u32 {
    1
}

/// φ = 0.1, ξ = π/2, E_J0 = 1, k = 1, half a flux quantum, ω = 1, resonant, γ = 0.
impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            energy: None,
            ej0: 1.0,
            xi: default_xi(),
            phi: default_phi(),
            flux_ratio: default_flux(),
            k: 1,
            gamma: 0.0,
            series_order: None,
        }
    }
}

impl ModelParams {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn qubit_splitting(&self) -> f64 {
        self.energy.unwrap_or(self.k as f64 * self.omega)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k) {
            return Err(Error::UnsupportedOrder(self.k));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::Validation(format!("phi = {} must lie in (0, 1)", self.phi)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation(format!("gamma = {} must be finite and >= 0", self.gamma)));
        }
        if self.series_order == Some(0) {
            return Err(Error::Validation("series_order must be positive".into()));
        }
        let finite = [self.omega, self.qubit_splitting(), self.ej0, self.xi, self.flux_ratio];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("model parameters must be finite".into()));
        }
        Ok(())
    }

    /// Number of series terms actually kept in `g_k` and `f`.
    pub fn series_terms(&self) -> SeriesTerms {
        let known_g = if self.k == 1 { 3 } else { 2 };
        let keep = |known: usize| self.series_order.map_or(known, |o| (o as usize).min(known));
        SeriesTerms { coupling: keep(known_g), stark: keep(2) }
    }

    /// `(sin πΦ, cos πΦ)` for the external flux.
    fn flux_sin_cos(&self) -> (f64, f64) {
        let (s, c) = (PI * self.flux_ratio).sin_cos();
        (snap(s), snap(c))
    }

    /// `sin 2ξ · cos πΦ`, the Stark prefactor without `E_J0`.
    fn stark_factor(&self) -> f64 {
        snap((2.0 * self.xi).sin()) * self.flux_sin_cos().1
    }

    /// `cos 2ξ · E_J0`.
    fn interaction_factor(&self) -> f64 {
        snap((2.0 * self.xi).cos()) * self.ej0
    }

    fn terms(&self, series: &[f64]) -> f64 {
        let keep = self.series_order.map_or(series.len(), |o| (o as usize).min(series.len()));
        series[..keep].iter().sum()
    }
}

/// Trig values at multiples of π/2 come out as ~1e-16 instead of 0; treat
/// those as exact zeros so that e.g. ξ = π/4 really decouples the qubit.
fn snap(v: f64) -> f64 {
    if v.abs() < 8.0 * f64::EPSILON {
        0.0
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerms {
    pub coupling: usize,
    pub stark: usize,
}

/// Photon-mediated coupling g_k(n).
pub fn coupling_g(params: &ModelParams, n: usize) -> Result<f64> {
    let p = params.phi;
    let n = n as f64;
    let (s, c) = params.flux_sin_cos();
    Ok(match params.k {
        1 => s * params.terms(&[p, -p.powi(3) * n / 2.0, p.powi(5) * (2.0 * n * n + 1.0) / 24.0]),
        2 => c * params.terms(&[p * p / 2.0, -2.0 * p.powi(4) * (2.0 * n - 1.0) / 24.0]),
        3 => s * params.terms(&[-p.powi(3) / 6.0, 5.0 * p.powi(5) * (n - 1.0) / 120.0]),
        k => return Err(Error::UnsupportedOrder(k)),
    })
}

/// Flux-dependent Stark term f(n).
pub fn stark_f(params: &ModelParams, n: usize) -> f64 {
    let p = params.phi;
    let n = n as f64;
    params.terms(&[
        p * p * (2.0 * n + 1.0) / 2.0,
        -3.0 * p.powi(4) * (2.0 * n * n + 2.0 * n + 1.0) / 24.0,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Charging energy E_c.
    pub e_c: f64,
    /// Gate charge C_g V_g / e.
    pub gate_charge: f64,
    /// Level index n entering ε.
    pub level_index: u32,
    /// Effective Josephson energy E_J.
    pub e_j: f64,
}

impl DeviceParams {
    /// ε = 2 E_c (C_g V_g / e − (2n + 1)).
    pub fn epsilon(&self) -> f64 {
        2.0 * self.e_c * (self.gate_charge - (2.0 * self.level_index as f64 + 1.0))
    }
}

/// ξ = ½ arctan(E_J / 2ε) on the principal branch; the degeneracy point
/// ε = 0 maps to π/4.
pub fn derive_mixing_angle(dev: &DeviceParams) -> Result<f64> {
    let eps = dev.epsilon();
    if !eps.is_finite() || !dev.e_j.is_finite() {
        return Err(Error::Validation("device parameters must be finite".into()));
    }
    if eps == 0.0 {
        if dev.e_j == 0.0 {
            return Err(Error::Degenerate);
        }
        return Ok(FRAC_PI_4);
    }
    Ok(0.5 * (dev.e_j / (2.0 * eps)).atan())
}

/// Diagonal energy of a composite basis state.
pub fn diagonal_energy(params: &ModelParams, state: CompositeIndex) -> f64 {
    let n = state.photon;
    let z = params.qubit_splitting() / 2.0
        - params.ej0 * params.stark_factor() * stark_f(params, n);
    params.omega * (n as f64 + 0.5) + state.qubit.sigma_z() * z
}

/// `<e,n|H|g,n+k> = cos 2ξ · E_J0 · g_k(n+k) · √((n+k)!/n!)`.
pub fn block_coupling(params: &ModelParams, n: usize) -> Result<f64> {
    let k = params.k as usize;
    let ladder: f64 = (n + 1..=n + k).map(|m| (m as f64).sqrt()).product();
    Ok(params.interaction_factor() * coupling_g(params, n + k)? * ladder)
}

fn check_basis(params: &ModelParams, basis: FockBasis) -> Result<()> {
    params.validate()?;
    if basis.dim() < params.k as usize + 1 {
        return Err(Error::Validation(format!(
            "Fock dimension {} is below k + 1 = {}",
            basis.dim(),
            params.k + 1
        )));
    }
    Ok(())
}

/// Dense H assembled from field operators and Pauli matrices, in the
/// printed operator order `a^k g_k(n̂) σ₊ + g_k(n̂) a†^k σ₋`.
pub fn build_hamiltonian(params: &ModelParams, basis: FockBasis) -> Result<CMat> {
    check_basis(params, basis)?;
    let d = basis.dim();
    let real_diag = |f: &dyn Fn(usize) -> f64| Mat::from_fn(d, d, |i, j| if i == j { C64::new(f(i), 0.0) } else { ZERO });

    let g_vals: Vec<f64> = (0..d).map(|n| coupling_g(params, n)).collect::<Result<_>>()?;
    let number_term = real_diag(&|n| params.omega * (n as f64 + 0.5));
    let z_term = real_diag(&|n| {
        params.qubit_splitting() / 2.0
            - params.ej0 * params.stark_factor() * stark_f(params, n)
    });
    let g_op = real_diag(&|n| g_vals[n]);

    let a = make_annihilation(basis);
    let mut a_k = linalg::identity(d);
    for _ in 0..params.k {
        a_k = &a_k * &a;
    }
    let ad_k = linalg::adjoint(&a_k);

    // (g, e) ordering: σ₊ = |e><g|
    let pauli = |m: [[f64; 2]; 2]| Mat::from_fn(2, 2, |i, j| C64::new(m[i][j], 0.0));
    let id2 = linalg::identity(2);
    let sz = pauli([[-1.0, 0.0], [0.0, 1.0]]);
    let sp = pauli([[0.0, 0.0], [1.0, 0.0]]);
    let sm = pauli([[0.0, 1.0], [0.0, 0.0]]);

    let strength = C64::new(params.interaction_factor(), 0.0);
    let raising = linalg::kron(&(&a_k * &g_op), &sp);
    let lowering = linalg::kron(&(&g_op * &ad_k), &sm);
    let h = linalg::kron(&number_term, &id2)
        + linalg::kron(&z_term, &sz)
        + linalg::scale(&(raising + lowering), strength);
    Ok(h)
}

/// Up to two nonzero real entries of a sparse vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sparse2 {
    idx: [usize; 2],
    val: [f64; 2],
    len: u8,
}

impl Sparse2 {
    fn one(i: usize, v: f64) -> Self {
        Self { idx: [i, 0], val: [v, 0.0], len: 1 }
    }

    fn two(i: usize, a: f64, j: usize, b: f64) -> Self {
        Self { idx: [i, j], val: [a, b], len: 2 }
    }

    fn push(&mut self, i: usize, v: f64) {
        let l = self.len as usize;
        self.idx[l] = i;
        self.val[l] = v;
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(move |s| (self.idx[s], self.val[s]))
    }
}

/// One 2×2 block on `{|e,n>, |g,n+k>}`.
///
/// Eigenvector 0 is `cos θ |e,n> + sin θ |g,n+k>` with energy `energies[0]`,
/// eigenvector 1 is `−sin θ |e,n> + cos θ |g,n+k>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub photon: usize,
    pub energies: [f64; 2],
    pub cos: f64,
    pub sin: f64,
}

impl Block {
    /// Diagonalizes `[[a, c], [c, b]]`. A vanishing coupling keeps the
    /// identity rotation.
    pub fn diagonalize(photon: usize, a: f64, b: f64, c: f64) -> Self {
        if c == 0.0 {
            return Self { photon, energies: [a, b], cos: 1.0, sin: 0.0 };
        }
        let mean = 0.5 * (a + b);
        let delta = 0.5 * (a - b);
        let r = delta.hypot(c);
        let theta = 0.5 * c.atan2(delta);
        Self { photon, energies: [mean + r, mean - r], cos: theta.cos(), sin: theta.sin() }
    }

    /// Level splitting `E₊ − E₋`, the vacuum-dressed Rabi frequency of the block.
    pub fn splitting(&self) -> f64 {
        (self.energies[0] - self.energies[1]).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uncoupled {
    pub state: CompositeIndex,
    pub energy: f64,
}

/// Exact eigensystem of H in block form.
///
/// Eigenstates are numbered block by block (`2b`, `2b + 1`) followed by the
/// uncoupled states.
#[derive(Clone, Debug)]
pub struct BlockEigensystem {
    fock_dim: usize,
    k: usize,
    blocks: Vec<Block>,
    uncoupled: Vec<Uncoupled>,
    energies: Vec<f64>,
    vectors: Vec<Sparse2>,
    inverse: Vec<Sparse2>,
}

pub fn block_eigensystem(params: &ModelParams, basis: FockBasis) -> Result<BlockEigensystem> {
    check_basis(params, basis)?;
    let d = basis.dim();
    let k = params.k as usize;
    let mut blocks = Vec::with_capacity(d - k);
    for n in 0..d - k {
        let a = diagonal_energy(params, CompositeIndex::new(Qubit::E, n));
        let b = diagonal_energy(params, CompositeIndex::new(Qubit::G, n + k));
        blocks.push(Block::diagonalize(n, a, b, block_coupling(params, n)?));
    }
    let mut uncoupled = Vec::with_capacity(2 * k);
    for m in 0..k {
        let state = CompositeIndex::new(Qubit::G, m);
        uncoupled.push(Uncoupled { state, energy: diagonal_energy(params, state) });
    }
    for n in d - k..d {
        let state = CompositeIndex::new(Qubit::E, n);
        uncoupled.push(Uncoupled { state, energy: diagonal_energy(params, state) });
    }
    Ok(BlockEigensystem::assemble(d, k, blocks, uncoupled))
}

impl BlockEigensystem {
    fn assemble(fock_dim: usize, k: usize, blocks: Vec<Block>, uncoupled: Vec<Uncoupled>) -> Self {
        let mut energies = Vec::with_capacity(2 * fock_dim);
        let mut vectors = Vec::with_capacity(2 * fock_dim);
        for b in &blocks {
            let e = CompositeIndex::new(Qubit::E, b.photon).flat();
            let g = CompositeIndex::new(Qubit::G, b.photon + k).flat();
            energies.extend(b.energies);
            vectors.push(Sparse2::two(e, b.cos, g, b.sin));
            vectors.push(Sparse2::two(e, -b.sin, g, b.cos));
        }
        for u in &uncoupled {
            energies.push(u.energy);
            vectors.push(Sparse2::one(u.state.flat(), 1.0));
        }
        let mut inverse = vec![Sparse2 { idx: [0; 2], val: [0.0; 2], len: 0 }; 2 * fock_dim];
        for (j, v) in vectors.iter().enumerate() {
            for (a, u) in v.iter() {
                inverse[a].push(j, u);
            }
        }
        Self { fock_dim, k, blocks, uncoupled, energies, vectors, inverse }
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn uncoupled(&self) -> &[Uncoupled] {
        &self.uncoupled
    }

    /// Eigenvalues in eigenstate order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Components `(flat index, amplitude)` of eigenstate `j`.
    pub fn eigenvector(&self, j: usize) -> &Sparse2 {
        &self.vectors[j]
    }

    /// Eigenstates `j` with their amplitude on basis state `flat`.
    pub fn eigen_components_of(&self, flat: usize) -> &Sparse2 {
        &self.inverse[flat]
    }

    /// Unitary whose columns are the eigenvectors.
    pub fn unitary(&self) -> CMat {
        let d = self.dim();
        let mut u = linalg::zeros(d);
        for (j, v) in self.vectors.iter().enumerate() {
            for (a, x) in v.iter() {
                u[(a, j)] = C64::new(x, 0.0);
            }
        }
        u
    }

    /// `U diag(E) U†`.
    pub fn reassemble(&self) -> CMat {
        let diag = Mat::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                C64::new(self.energies[i], 0.0)
            } else {
                ZERO
            }
        });
        self.from_eigenbasis(&diag)
    }

    /// `U† m U`.
    pub fn to_eigenbasis(&self, m: &CMat) -> CMat {
        sandwich(&self.vectors, m)
    }

    /// `U m U†`.
    pub fn from_eigenbasis(&self, m: &CMat) -> CMat {
        sandwich(&self.inverse, m)
    }

    /// `U† ψ`.
    pub fn vector_to_eigenbasis(&self, psi: &[C64]) -> Vec<C64> {
        self.vectors.iter().map(|v| v.iter().map(|(a, u)| psi[a] * u).sum()).collect()
    }

    /// `U c`.
    pub fn vector_from_eigenbasis(&self, c: &[C64]) -> Vec<C64> {
        self.inverse.iter().map(|v| v.iter().map(|(j, u)| c[j] * u).sum()).collect()
    }
}

/// `out[p, q] = Σ_{(a,u) ∈ rows[p]} Σ_{(b,v) ∈ rows[q]} u v m[a, b]` for real sparse rows.
fn sandwich(rows: &[Sparse2], m: &CMat) -> CMat {
    let d = rows.len();
    let mut out = linalg::zeros(d);
    for (q, rq) in rows.iter().enumerate() {
        for (p, rp) in rows.iter().enumerate() {
            let mut acc = ZERO;
            for (b, v) in rq.iter() {
                for (a, u) in rp.iter() {
                    acc += m[(a, b)] * (u * v);
                }
            }
            out[(p, q)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::linalg::max_abs_diff;

    fn fig2() -> ModelParams {
        ModelParams::default()
    }

    fn basis(d: usize) -> FockBasis {
        FockBasis::new(d).unwrap()
    }

    #[test]
    fn g2_vanishes_at_half_flux() {
        let p = ModelParams { k: 2, ..fig2() };
        for n in 0..40 {
            assert!(coupling_g(&p, n).unwrap().abs() < 1e-16);
        }
    }

    #[test]
    fn g1_hand_sums() {
        let p = fig2();
        // 0.1 + 0.1^5 / 24
        assert!((coupling_g(&p, 0).unwrap() - 0.100_000_416_666_666_7).abs() < 1e-15);
        // 0.1 - 0.0125 + 0.1^5 * 1251 / 24
        assert!((coupling_g(&p, 25).unwrap() - 0.088_021_25).abs() < 1e-14);
    }

    #[test]
    fn stark_hand_sums() {
        let p = fig2();
        assert!((stark_f(&p, 0) - 0.004_987_5).abs() < 1e-15);
        // 0.01 * 51 / 2 - 3e-4 * 1301 / 24
        assert!((stark_f(&p, 25) - 0.238_737_5).abs() < 1e-14);
        let tiny = ModelParams { phi: 1e-9, ..fig2() };
        assert!(stark_f(&tiny, 10).abs() < 1e-16);
    }

    #[test]
    fn series_order_keeps_leading_terms() {
        let p = ModelParams { series_order: Some(1), ..fig2() };
        assert_eq!(coupling_g(&p, 25).unwrap(), 0.1);
        assert_eq!(stark_f(&p, 25), 0.1 * 0.1 * 51.0 / 2.0);
        let p = ModelParams { series_order: Some(9), ..fig2() };
        assert_eq!(coupling_g(&p, 25).unwrap(), coupling_g(&fig2(), 25).unwrap());
    }

    #[test]
    fn unsupported_order() {
        let p = ModelParams { k: 4, ..fig2() };
        assert!(matches!(coupling_g(&p, 0), Err(Error::UnsupportedOrder(4))));
        assert!(matches!(build_hamiltonian(&p, basis(8)), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn mixing_angles() {
        let dev = |eps_half: f64, e_j: f64| DeviceParams {
            e_c: 1.0,
            gate_charge: 1.0 + eps_half,
            level_index: 0,
            e_j,
        };
        assert_eq!(derive_mixing_angle(&dev(0.5, 0.0)).unwrap(), 0.0);
        assert!((derive_mixing_angle(&dev(0.5, 2.0)).unwrap() - PI / 8.0).abs() < 1e-15);
        assert_eq!(derive_mixing_angle(&dev(0.0, 3.0)).unwrap(), FRAC_PI_4);
        assert!((derive_mixing_angle(&dev(1e-12, 3.0)).unwrap() - FRAC_PI_4).abs() < 1e-9);
        assert!(matches!(derive_mixing_angle(&dev(0.0, 0.0)), Err(Error::Degenerate)));
        assert_eq!(dev(0.5, 0.0).epsilon(), 1.0);
    }

    #[test]
    fn no_interaction_at_quarter_pi() {
        let p = ModelParams { xi: FRAC_PI_4, ..fig2() };
        let h = build_hamiltonian(&p, basis(6)).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    assert!(h[(i, j)].norm() < 1e-15);
                }
            }
        }
        let es = block_eigensystem(&ModelParams { xi: FRAC_PI_4, ..fig2() }, basis(6)).unwrap();
        for b in es.blocks() {
            assert!(b.cos == 1.0 && b.sin == 0.0);
        }
    }

    #[test]
    fn off_diagonal_uses_shifted_coupling() {
        let p = ModelParams { xi: 0.3, flux_ratio: 0.4, ..fig2() };
        let h = build_hamiltonian(&p, basis(10)).unwrap();
        for n in 0..9 {
            let e = CompositeIndex::new(Qubit::E, n).flat();
            let g = CompositeIndex::new(Qubit::G, n + 1).flat();
            let want = (0.6f64).cos() * coupling_g(&p, n + 1).unwrap() * ((n + 1) as f64).sqrt();
            let other_order = (0.6f64).cos() * coupling_g(&p, n).unwrap() * ((n + 1) as f64).sqrt();
            assert!((h[(e, g)].re - want).abs() < 1e-14);
            assert!((h[(e, g)].re - other_order).abs() > 1e-6);
        }
    }

    #[test]
    fn reference_point_sigma_z_coefficient() {
        let p = fig2();
        let h = build_hamiltonian(&p, basis(5)).unwrap();
        for n in 0..5 {
            let e = CompositeIndex::new(Qubit::E, n).flat();
            let g = CompositeIndex::new(Qubit::G, n).flat();
            let half_diff = 0.5 * (h[(e, e)].re - h[(g, g)].re);
            assert!((half_diff - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_detuning_block_is_symmetric() {
        let b = Block::diagonalize(0, 2.0, 2.0, 0.3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.cos - s).abs() < 1e-15 && (b.sin - s).abs() < 1e-15);
        assert!((b.energies[0] - 2.3).abs() < 1e-15 && (b.energies[1] - 1.7).abs() < 1e-15);
    }

    fn arb_params() -> impl Strategy<Value = ModelParams> {
        (1u32..=3, 0.01..0.5f64, -1.5..1.5f64, 0.0..1.0f64, 0.5..2.0f64, -0.5..0.5f64, 0.1..2.0f64).prop_map(
            |(k, phi, xi, flux_ratio, omega, detune, ej0)| ModelParams {
                omega,
                energy: Some(k as f64 * omega + detune),
                ej0,
                xi,
                phi,
                flux_ratio,
                k,
                gamma: 0.0,
                series_order: None,
            },
        )
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian_and_block_sparse(p in arb_params(), d in 4usize..12) {
            let h = build_hamiltonian(&p, basis(d)).unwrap();
            prop_assert!(linalg::hermiticity_defect(&h) < 1e-12);
            let k = p.k as usize;
            for i in 0..2 * d {
                for j in 0..2 * d {
                    if i == j { continue; }
                    let (a, b) = (CompositeIndex::from_flat(i), CompositeIndex::from_flat(j));
                    let allowed = match (a.qubit, b.qubit) {
                        (Qubit::E, Qubit::G) => b.photon == a.photon + k,
                        (Qubit::G, Qubit::E) => a.photon == b.photon + k,
                        _ => false,
                    };
                    if !allowed {
                        prop_assert!(h[(i, j)].norm() == 0.0, "({}, {})", i, j);
                    }
                }
            }
        }

        #[test]
        fn blocks_reassemble_dense_hamiltonian(p in arb_params(), d in 4usize..14) {
            let h = build_hamiltonian(&p, basis(d)).unwrap();
            let es = block_eigensystem(&p, basis(d)).unwrap();
            prop_assert!(max_abs_diff(&es.reassemble(), &h) < 1e-10);
            let u = es.unitary();
            prop_assert!(max_abs_diff(&(linalg::adjoint(&u) * &u), &linalg::identity(2 * d)) < 1e-12);
        }

        #[test]
        fn block_spectrum_matches_dense_solver(p in arb_params(), d in 4usize..14) {
            let h = build_hamiltonian(&p, basis(d)).unwrap();
            let dense = linalg::hermitian_eigenvalues(&h).unwrap();
            let mut ours = block_eigensystem(&p, basis(d)).unwrap().energies().to_vec();
            ours.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&dense) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn every_basis_state_covered_once(p in arb_params(), d in 4usize..14) {
            let es = block_eigensystem(&p, basis(d)).unwrap();
            let mut seen = vec![0; 2 * d];
            for b in es.blocks() {
                seen[CompositeIndex::new(Qubit::E, b.photon).flat()] += 1;
                seen[CompositeIndex::new(Qubit::G, b.photon + es.k()).flat()] += 1;
            }
            for u in es.uncoupled() {
                seen[u.state.flat()] += 1;
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
