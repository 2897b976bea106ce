//! Exact propagation under the intrinsic-decoherence master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] − (γ/2)[H, [H, ρ]]
//! ```
//!
//! In the energy eigenbasis every coherence evolves independently:
//! `ρ_jl(t) = ρ_jl(0) exp(−i ω_jl t − γ ω_jl² t / 2)` with `ω_jl = E_j − E_l`.
//! [`Propagator`] implements that closed form. [`KrausSet`] is the
//! equivalent operator-sum form, `M_k = (γt)^{k/2}/√k! H^k e^{−iHt} e^{−γtH²/2}`,
//! truncated at a certified Poisson tail.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, DensityMatrix, FieldStateSpec, FockBasis, QubitStateSpec, TRUNCATION_TAIL_BOUND};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::{block_eigensystem, BlockEigensystem, ModelParams};

/// Largest Kraus truncation attempted before giving up.
pub const KRAUS_CAP: usize = 500;

/// Default Kraus completeness tolerance.
pub const KRAUS_TOL: f64 = 1e-10;

/// Immutable eigensystem plus decoherence rate. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Propagator {
    eig: Arc<BlockEigensystem>,
    gamma: f64,
}

impl Propagator {
    pub fn new(params: &ModelParams, basis: FockBasis) -> Result<Self> {
        Self::from_eigensystem(block_eigensystem(params, basis)?, params.gamma)
    }

    pub fn from_eigensystem(eig: BlockEigensystem, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Validation(format!("gamma = {gamma} must be finite and >= 0")));
        }
        Ok(Self { eig: Arc::new(eig), gamma })
    }

    /// Same eigensystem, different decoherence rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Validation(format!("gamma = {gamma} must be finite and >= 0")));
        }
        Ok(Self { eig: self.eig.clone(), gamma })
    }

    pub fn eigensystem(&self) -> &BlockEigensystem {
        &self.eig
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn fock_basis(&self) -> FockBasis {
        FockBasis::new(self.eig.fock_dim()).expect("eigensystem has a positive dimension")
    }

    /// Transforms `rho0` to the eigenbasis once so that later samples cost
    /// one elementwise pass plus the inverse transform.
    pub fn prepare(&self, rho0: &DensityMatrix) -> Result<PreparedState> {
        if rho0.fock_dim() != self.eig.fock_dim() {
            return Err(Error::Validation(format!(
                "state has Fock dimension {}, propagator {}",
                rho0.fock_dim(),
                self.eig.fock_dim()
            )));
        }
        let rho_eig = self.eig.to_eigenbasis(rho0.matrix());
        let components = support_components(&rho_eig);
        let mut prepared = PreparedState { prop: self.clone(), rho_eig, components, static_spectrum: None };
        if self.gamma == 0.0 {
            // unitary evolution leaves the spectrum unchanged
            prepared.static_spectrum = Some(prepared.spectrum_of(&prepared.rho_eig)?);
        }
        Ok(prepared)
    }

    pub fn kraus_set(&self, t: f64, tol: f64) -> Result<KrausSet> {
        check_time(t)?;
        if !(tol > 0.0) {
            return Err(Error::Validation(format!("Kraus tolerance {tol} must be positive")));
        }
        let energies = self.eig.energies();
        let gt = self.gamma * t;
        let mu_max = gt * self.eig.spectral_radius().powi(2);
        // Poisson tails grow with μ, so the largest |E| fixes K.
        let worst = PoissonTable::new(mu_max, KRAUS_CAP);
        let truncation_k = (0..=KRAUS_CAP)
            .find(|&k| worst.tail[k] + roundoff_allowance(k) <= tol)
            .ok_or(Error::Convergence { cap: KRAUS_CAP, mu: mu_max })?;
        let tail_bound = worst.tail[truncation_k] + roundoff_allowance(truncation_k);

        let mut diagonals = vec![Vec::with_capacity(energies.len()); truncation_k + 1];
        for &e in energies {
            let table = PoissonTable::new(gt * e * e, truncation_k);
            let phase = C64::from_polar(1.0, -e * t);
            for (k, diag) in diagonals.iter_mut().enumerate() {
                let sign = if e < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                diag.push(phase * (sign * table.pmf[k].sqrt()));
            }
        }
        Ok(KrausSet { eig: self.eig.clone(), diagonals, truncation_k, tail_bound })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Validation(format!("time {t} must be finite and >= 0")));
    }
    Ok(())
}

fn roundoff_allowance(k: usize) -> f64 {
    64.0 * f64::EPSILON * (k + 1) as f64
}

/// `ρ(t)` from a single call; prefer [`Propagator::prepare`] for many samples.
pub fn evolve_closed_form(prop: &Propagator, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    prop.prepare(rho0)?.at(t)
}

/// An initial state already expressed in the eigenbasis.
#[derive(Clone, Debug)]
pub struct PreparedState {
    prop: Propagator,
    rho_eig: CMat,
    components: Vec<Vec<usize>>,
    static_spectrum: Option<Vec<f64>>,
}

impl PreparedState {
    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    fn factor(&self, j: usize, l: usize, t: f64) -> C64 {
        let e = self.prop.eig.energies();
        let w = e[j] - e[l];
        C64::from_polar((-0.5 * self.prop.gamma * w * w * t).exp(), -w * t)
    }

    /// `ρ(t)` in the energy eigenbasis.
    pub fn eigen_matrix_at(&self, t: f64) -> Result<CMat> {
        check_time(t)?;
        let d = self.rho_eig.nrows();
        let mut out = linalg::zeros(d);
        for l in 0..d {
            for j in 0..d {
                let r = self.rho_eig[(j, l)];
                if r != ZERO {
                    out[(j, l)] = r * self.factor(j, l, t);
                }
            }
        }
        Ok(out)
    }

    pub fn at(&self, t: f64) -> Result<DensityMatrix> {
        let m = self.prop.eig.from_eigenbasis(&self.eigen_matrix_at(t)?);
        DensityMatrix::new(self.prop.eig.fock_dim(), m)
    }

    /// `<σ_z>(t)` touching only the entries that feed the diagonal.
    pub fn inversion_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let eig = &self.prop.eig;
        let mut acc = 0.0;
        for a in 0..eig.dim() {
            let sign = if a % 2 == 1 { 1.0 } else { -1.0 };
            let comps = eig.eigen_components_of(a);
            for (j, u) in comps.iter() {
                for (l, v) in comps.iter() {
                    let r = self.rho_eig[(j, l)];
                    if r != ZERO {
                        acc += sign * u * v * (r * self.factor(j, l, t)).re;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Eigenvalues of `ρ(t)`, ascending.
    ///
    /// The dephasing factors never create coherences, so the nonzero
    /// pattern of `ρ(0)` in the eigenbasis splits the problem into
    /// independent components.
    pub fn spectrum_at(&self, t: f64) -> Result<Vec<f64>> {
        if let Some(s) = &self.static_spectrum {
            return Ok(s.clone());
        }
        self.spectrum_of(&self.eigen_matrix_at(t)?)
    }

    fn spectrum_of(&self, m: &CMat) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(m.nrows());
        for comp in &self.components {
            let sub = CMat::from_fn(comp.len(), comp.len(), |i, j| m[(comp[i], comp[j])]);
            out.extend(linalg::hermitian_eigenvalues(&sub)?);
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

/// Connected components of the graph with an edge wherever `m[j, l] != 0`.
fn support_components(m: &CMat) -> Vec<Vec<usize>> {
    let d = m.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for l in 0..d {
        for j in 0..l {
            if m[(j, l)] != ZERO || m[(l, j)] != ZERO {
                let (a, b) = (root(&mut parent, j), root(&mut parent, l));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); d];
    for x in 0..d {
        let r = root(&mut parent, x);
        groups[r].push(x);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Poisson weights `P(k; μ)` and upper tails `Σ_{m>k} P(m; μ)` for `k ≤ kmax`.
struct PoissonTable {
    pmf: Vec<f64>,
    tail: Vec<f64>,
}

impl PoissonTable {
    fn new(mu: f64, kmax: usize) -> Self {
        if mu == 0.0 {
            let mut pmf = vec![0.0; kmax + 1];
            pmf[0] = 1.0;
            return Self { pmf, tail: vec![0.0; kmax + 1] };
        }
        // far enough past the mode that the remaining mass is below 1e-300
        let kend = kmax.max((mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize);
        let ln_mu = mu.ln();
        let mut ln_fact = 0.0;
        let mut all = Vec::with_capacity(kend + 1);
        for k in 0..=kend {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            all.push((k as f64 * ln_mu - mu - ln_fact).exp());
        }
        let mut tail = vec![0.0; kend + 1];
        let mut acc = 0.0;
        for k in (0..kend).rev() {
            acc += all[k + 1];
            tail[k] = acc;
        }
        all.truncate(kmax + 1);
        tail.truncate(kmax + 1);
        Self { pmf: all, tail }
    }
}

/// Truncated operator-sum representation at a fixed time.
///
/// Operators are stored as their eigenbasis diagonals; [`KrausSet::operator`]
/// builds the dense matrix on demand.
#[derive(Clone, Debug)]
pub struct KrausSet {
    eig: Arc<BlockEigensystem>,
    diagonals: Vec<Vec<C64>>,
    truncation_k: usize,
    tail_bound: f64,
}

impl KrausSet {
    /// Highest retained index K; the set holds `K + 1` operators.
    pub fn truncation_k(&self) -> usize {
        self.truncation_k
    }

    /// Upper bound on the completeness defect.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn len(&self) -> usize {
        self.diagonals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonals.is_empty()
    }

    /// Eigenvalues of `M_k` in eigenstate order.
    pub fn diagonal(&self, k: usize) -> &[C64] {
        &self.diagonals[k]
    }

    pub fn operator(&self, k: usize) -> CMat {
        let d = self.eig.dim();
        let diag = &self.diagonals[k];
        let m = CMat::from_fn(d, d, |i, j| if i == j { diag[i] } else { ZERO });
        self.eig.from_eigenbasis(&m)
    }

    pub fn operators(&self) -> Vec<CMat> {
        (0..self.len()).map(|k| self.operator(k)).collect()
    }

    /// `max |Σ_k M_k† M_k − I|` from the dense operators.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.eig.dim();
        let mut sum = linalg::zeros(d);
        for k in 0..self.len() {
            let m = self.operator(k);
            sum += m.adjoint() * &m;
        }
        linalg::max_abs_diff(&sum, &linalg::identity(d))
    }
}

/// `Σ_k M_k ρ₀ M_k†` with dense operators.
pub fn evolve_kraus(ks: &KrausSet, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if rho0.fock_dim() != ks.eig.fock_dim() {
        return Err(Error::Validation("state and Kraus set dimensions differ".into()));
    }
    let d = rho0.dim();
    let mut out = linalg::zeros(d);
    for k in 0..ks.len() {
        let m = ks.operator(k);
        out += &m * rho0.matrix() * m.adjoint();
    }
    DensityMatrix::new(rho0.fock_dim(), out)
}

/// One pure member of the Kraus ensemble.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub state: Vec<C64>,
}

#[derive(Clone, Debug, Default)]
pub struct Ensemble {
    pub branches: Vec<Branch>,
    /// Highest Kraus index retained.
    pub truncation_k: usize,
    /// Weight discarded with the Kraus tail.
    pub tail_bound: f64,
}

impl Ensemble {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub truncation_k: usize,
    pub tail_bound: f64,
}

/// Pure initial families `(weight, vector)` for a pure field.
pub fn initial_families(
    qs: &QubitStateSpec,
    fs: &FieldStateSpec,
    basis: FockBasis,
) -> Result<Vec<(f64, Vec<C64>)>> {
    fs.validate()?;
    let field = fs.amplitudes(basis).ok_or_else(|| {
        Error::Validation("the Kraus ensemble needs a pure (coherent or Fock) field".into())
    })?;
    let tail = fs.truncation_tail(basis);
    if tail > TRUNCATION_TAIL_BOUND {
        return Err(Error::Truncation { dim: basis.dim(), tail, bound: TRUNCATION_TAIL_BOUND });
    }
    if let Some(q) = qs.amplitudes() {
        return Ok(vec![(1.0, hilbert::product_vector(q, &field))]);
    }
    let [w_g, w_e] = qs.diagonal_weights();
    let one = C64::new(1.0, 0.0);
    let mut families = Vec::new();
    if w_e > 0.0 {
        families.push((w_e, hilbert::product_vector([ZERO, one], &field)));
    }
    if w_g > 0.0 {
        families.push((w_g, hilbert::product_vector([one, ZERO], &field)));
    }
    Ok(families)
}

/// Branches `M_k |ψ_i>` normalized, weighted by `ς_i ‖M_k ψ_i‖²`.
///
/// K is the smallest index whose discarded weight on the actual state is
/// below `tol`, so it follows the state's energy spread rather than the
/// spectral radius.
pub fn ensemble_branches(
    prop: &Propagator,
    qs: &QubitStateSpec,
    fs: &FieldStateSpec,
    t: f64,
    tol: f64,
) -> Result<Ensemble> {
    check_time(t)?;
    let families = initial_families(qs, fs, prop.fock_basis())?;
    let eig = prop.eigensystem();
    let gt = prop.gamma() * t;

    let coeffs: Vec<Vec<C64>> = families.iter().map(|(_, psi)| eig.vector_to_eigenbasis(psi)).collect();
    let populated: Vec<usize> = (0..eig.dim())
        .filter(|&j| coeffs.iter().any(|c| c[j] != ZERO))
        .collect();
    let tables: Vec<PoissonTable> = populated
        .iter()
        .map(|&j| PoissonTable::new(gt * eig.energies()[j].powi(2), KRAUS_CAP))
        .collect();

    let discarded = |k: usize| -> f64 {
        families
            .iter()
            .zip(&coeffs)
            .map(|((w, _), c)| w * populated.iter().zip(&tables).map(|(&j, tb)| c[j].norm_sqr() * tb.tail[k]).sum::<f64>())
            .sum()
    };
    let truncation_k = (0..=KRAUS_CAP)
        .find(|&k| discarded(k) <= tol)
        .ok_or_else(|| Error::Convergence {
            cap: KRAUS_CAP,
            mu: gt * populated.iter().map(|&j| eig.energies()[j].powi(2)).fold(0.0, f64::max),
        })?;

    let mut branches = Vec::new();
    for ((w, _), c) in families.iter().zip(&coeffs) {
        for k in 0..=truncation_k {
            let mut amp = vec![ZERO; eig.dim()];
            for (&j, tb) in populated.iter().zip(&tables) {
                let e = eig.energies()[j];
                let sign = if e < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                amp[j] = c[j] * C64::from_polar(sign * tb.pmf[k].sqrt(), -e * t);
            }
            let norm_sqr: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
            if norm_sqr == 0.0 {
                continue;
            }
            let scale = 1.0 / norm_sqr.sqrt();
            let state = eig.vector_from_eigenbasis(&amp).into_iter().map(|z| z * scale).collect();
            branches.push(Branch { weight: w * norm_sqr, state });
        }
    }
    Ok(Ensemble { branches, truncation_k, tail_bound: discarded(truncation_k) })
}
