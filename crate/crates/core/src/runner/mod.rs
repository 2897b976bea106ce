//! Declarative scenarios: parse, validate, run, and collect every requested
//! observable plus a manifest of resolved parameters and invariant checks.
//!
//! Scenarios are TOML files with `version = 1`; see the embedded builtins
//! under `scenarios/` for the full set of keys.

mod emit;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use emit::{emit, Format};

use crate::analysis::{self, Onset};
use crate::error::{Error, Result};
use crate::evolve::{ensemble_branches, EnsembleSummary, PreparedState, Propagator, KRAUS_TOL};
use crate::hilbert::{make_initial_state, FieldStateSpec, FockBasis, InvariantReport, QubitStateSpec};
use crate::measures::{self, TimeSeries};
use crate::model::{block_eigensystem, ModelParams, SeriesTerms};
use crate::wigner::{self, GridSpec, WignerGrid};

pub const SCENARIO_VERSION: u32 = 1;

/// A run whose worst trace defect exceeds this is reported as failed.
pub const RUN_TRACE_LIMIT: f64 = 1e-8;

/// Concurrence below this counts as zero when locating the onset.
pub const CONCURRENCE_ZERO: f64 = 1e-6;

/// Concurrence above this marks the onset as real.
pub const CONCURRENCE_RISE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Inversion,
    Tangle,
    MutualInformation,
    Concurrence,
    Wigner,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Inversion => "inversion",
            Observable::Tangle => "tangle",
            Observable::MutualInformation => "mutual_information",
            Observable::Concurrence => "concurrence",
            Observable::Wigner => "wigner",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub samples: usize,
}

/// Overrides applied on top of the base scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Replaces θ in the qubit state, keeping its kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Variant {
    fn base() -> Self {
        Variant { label: "base".into(), gamma: None, theta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wigner_times: Vec<f64>,
    /// Fock dimension; chosen from the field state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Output path prefix; the scenario name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub model: ModelParams,
    pub qubit: QubitStateSpec,
    pub field: FieldStateSpec,
    pub times: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../../scenarios/fig2a.toml")),
    ("fig2b", include_str!("../../scenarios/fig2b.toml")),
    ("fig2c", include_str!("../../scenarios/fig2c.toml")),
    ("fig3a", include_str!("../../scenarios/fig3a.toml")),
    ("fig3b", include_str!("../../scenarios/fig3b.toml")),
    ("fig4a", include_str!("../../scenarios/fig4a.toml")),
    ("fig4b", include_str!("../../scenarios/fig4b.toml")),
    ("fig5", include_str!("../../scenarios/fig5.toml")),
    ("fig5a", include_str!("../../scenarios/fig5a.toml")),
    ("fig5b", include_str!("../../scenarios/fig5b.toml")),
];

/// Names of the embedded scenarios, in a stable order.
pub fn list_builtins() -> Vec<&'static str> {
    BUILTINS.iter().map(|(name, _)| *name).collect()
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml_str(text).expect("embedded scenarios are valid"))
    }

    /// An existing file path, otherwise a builtin name.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.is_file() {
            return Self::from_path(path);
        }
        Self::builtin(spec).ok_or_else(|| {
            Error::Config(format!("`{spec}` is neither a scenario file nor a builtin ({})", list_builtins().join(", ")))
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::Config(format!(
                "scenario version {} is not supported (expected {SCENARIO_VERSION})",
                self.version
            )));
        }
        if self.name.is_empty() {
            return Err(Error::Validation("scenario name must not be empty".into()));
        }
        if self.times.samples < 2 {
            return Err(Error::Validation(format!("samples = {} must be at least 2", self.times.samples)));
        }
        if !(self.times.t_max > 0.0 && self.times.t_max.is_finite()) {
            return Err(Error::Validation(format!("t_max = {} must be positive and finite", self.times.t_max)));
        }
        if self.observables.is_empty() {
            return Err(Error::Validation("no observables requested".into()));
        }
        let distinct: BTreeSet<_> = self.observables.iter().collect();
        if distinct.len() != self.observables.len() {
            return Err(Error::Validation("observables are listed more than once".into()));
        }
        if self.observables.contains(&Observable::Wigner) {
            if self.wigner_times.is_empty() {
                return Err(Error::Validation("the wigner observable needs wigner_times".into()));
            }
            if self.wigner_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(Error::Validation("wigner_times must be finite and >= 0".into()));
            }
        }
        if let Some(grid) = &self.wigner_grid {
            grid.validate()?;
        }
        if self.observables.contains(&Observable::Tangle) && !self.field.is_pure() {
            return Err(Error::Validation("tangle needs a pure (coherent or Fock) field".into()));
        }
        self.model.validate()?;
        self.field.validate()?;
        if let Some(dim) = self.dim {
            if dim < self.model.k as usize + 1 {
                return Err(Error::Validation(format!("dim = {dim} is below k + 1")));
            }
        }
        let mut labels = BTreeSet::new();
        for v in &self.variants {
            let safe = !v.label.is_empty()
                && v.label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if !safe {
                return Err(Error::Validation(format!("variant label `{}` must be [A-Za-z0-9_.-]+", v.label)));
            }
            if !labels.insert(v.label.as_str()) {
                return Err(Error::Validation(format!("variant label `{}` is repeated", v.label)));
            }
            if let Some(g) = v.gamma {
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::Validation(format!("variant `{}`: gamma must be finite and >= 0", v.label)));
                }
            }
            if let Some(t) = v.theta {
                if !t.is_finite() {
                    return Err(Error::Validation(format!("variant `{}`: theta must be finite", v.label)));
                }
            }
        }
        Ok(())
    }

    /// The listed variants, or a single unmodified `base`.
    pub fn resolved_variants(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            vec![Variant::base()]
        } else {
            self.variants.clone()
        }
    }

    pub fn fock_basis(&self) -> Result<FockBasis> {
        match self.dim {
            Some(d) => FockBasis::new(d),
            None => Ok(FockBasis::for_field(&self.field, self.model.k)),
        }
    }

    pub fn output_prefix(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        analysis::linspace(self.times.t_max, self.times.samples)
    }

    fn series_observables(&self) -> Vec<Observable> {
        self.observables.iter().copied().filter(|o| *o != Observable::Wigner).collect()
    }

    fn grid(&self) -> GridSpec {
        self.wigner_grid
            .unwrap_or_else(|| GridSpec::for_amplitude(self.field.mean_photons().sqrt()))
    }
}

fn variant_qubit(base: QubitStateSpec, v: &Variant) -> QubitStateSpec {
    match (base, v.theta) {
        (_, None) => base,
        (QubitStateSpec::MixedDiagonal { .. }, Some(theta)) => QubitStateSpec::MixedDiagonal { theta },
        (QubitStateSpec::PureSuperposition { .. }, Some(theta)) => QubitStateSpec::PureSuperposition { theta },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    /// Smallest trace captured by the effective two-qubit subspace.
    pub min_projection_weight: f64,
    /// End of the initial zero plateau, if there is one.
    pub onset: Option<Onset>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerReport {
    pub time: f64,
    pub min: f64,
    pub max: f64,
    pub negativity_volume: f64,
    pub normalization_defect: f64,
    pub imaginary_residue: f64,
    pub top_level_population: f64,
    pub truncation_warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub label: String,
    pub gamma: f64,
    pub qubit: QubitStateSpec,
    /// States checked, time samples plus Wigner times.
    pub states_checked: usize,
    pub invariants: InvariantReport,
    /// Largest Kraus truncation used for the tangle ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<EnsembleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concurrence: Option<ConcurrenceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wigner: Vec<WignerReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub scenario: Scenario,
    pub fock_dim: usize,
    pub truncation_tail: f64,
    pub qubit_splitting: f64,
    pub series_terms: SeriesTerms,
    pub spectral_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revival_time_estimate: Option<f64>,
    pub variants: Vec<VariantReport>,
}

impl Manifest {
    /// Worst defects over every variant.
    pub fn invariants(&self) -> InvariantReport {
        self.variants.iter().fold(InvariantReport::default(), |acc, v| acc.merge(v.invariants))
    }

    /// Whether the run meets the trace limit that decides the exit status.
    pub fn passed(&self) -> bool {
        self.invariants().trace_defect <= RUN_TRACE_LIMIT
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub variant: String,
    pub observable: Observable,
    pub series: TimeSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerRecord {
    pub variant: String,
    pub time: f64,
    pub grid: WignerGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub series: Vec<SeriesRecord>,
    pub wigner: Vec<WignerRecord>,
}

impl RunOutput {
    pub fn series(&self, variant: &str, observable: Observable) -> Option<&TimeSeries> {
        self.series
            .iter()
            .find(|r| r.variant == variant && r.observable == observable)
            .map(|r| &r.series)
    }

    pub fn variant(&self, label: &str) -> Option<&VariantReport> {
        self.manifest.variants.iter().find(|v| v.label == label)
    }
}

struct Sample {
    values: Vec<f64>,
    report: InvariantReport,
    kraus: Option<EnsembleSummary>,
    projection_weight: Option<f64>,
}

struct VariantContext<'a> {
    prepared: PreparedState,
    qubit: QubitStateSpec,
    field: &'a FieldStateSpec,
}

fn sample(ctx: &VariantContext<'_>, t: f64, observables: &[Observable]) -> Result<Sample> {
    let rho = ctx.prepared.at(t)?;
    let spectrum = ctx.prepared.spectrum_at(t)?;
    let report = rho.check_with_spectrum(&spectrum);
    let mut out = Sample { values: Vec::with_capacity(observables.len()), report, kraus: None, projection_weight: None };
    for obs in observables {
        let v = match obs {
            Observable::Inversion => measures::inversion(&rho),
            Observable::Tangle => {
                let prop = ctx.prepared.propagator();
                let ens = ensemble_branches(prop, &ctx.qubit, ctx.field, t, KRAUS_TOL)?;
                out.kraus = Some(EnsembleSummary { truncation_k: ens.truncation_k, tail_bound: ens.tail_bound });
                measures::tangle(&ens.branches)
            }
            Observable::MutualInformation => measures::mutual_information_parts(&rho, &spectrum)?.value(),
            Observable::Concurrence => {
                let basis = measures::effective_basis(&rho)?;
                out.projection_weight = Some(basis.projection_weight);
                measures::concurrence(&rho, &basis)?
            }
            Observable::Wigner => unreachable!("wigner is sampled separately"),
        };
        out.values.push(v);
    }
    Ok(out)
}

fn run_variant(
    s: &Scenario,
    prop: &Propagator,
    basis: FockBasis,
    variant: &Variant,
) -> Result<(VariantReport, Vec<SeriesRecord>, Vec<WignerRecord>)> {
    let gamma = variant.gamma.unwrap_or(s.model.gamma);
    let qubit = variant_qubit(s.qubit, variant);
    let prop = prop.with_gamma(gamma)?;
    let rho0 = make_initial_state(&qubit, &s.field, basis)?;
    let ctx = VariantContext { prepared: prop.prepare(&rho0)?, qubit, field: &s.field };

    let observables = s.series_observables();
    let mut report = VariantReport {
        label: variant.label.clone(),
        gamma,
        qubit,
        states_checked: 0,
        invariants: InvariantReport::default(),
        kraus: None,
        concurrence: None,
        wigner: Vec::new(),
    };
    let mut records = Vec::new();

    if !observables.is_empty() {
        let times = s.sample_times();
        let samples: Vec<Sample> =
            times.par_iter().map(|&t| sample(&ctx, t, &observables)).collect::<Result<_>>()?;
        report.states_checked += samples.len();
        for smp in &samples {
            report.invariants = report.invariants.merge(smp.report);
            if let Some(k) = smp.kraus {
                report.kraus = Some(match report.kraus {
                    Some(prev) => EnsembleSummary {
                        truncation_k: prev.truncation_k.max(k.truncation_k),
                        tail_bound: prev.tail_bound.max(k.tail_bound),
                    },
                    None => k,
                });
            }
        }
        for (i, obs) in observables.iter().enumerate() {
            let values = samples.iter().map(|smp| smp.values[i]).collect();
            let series = TimeSeries::new(obs.name(), times.clone(), values)?;
            if *obs == Observable::Concurrence {
                let min_projection_weight = samples
                    .iter()
                    .filter_map(|smp| smp.projection_weight)
                    .fold(f64::INFINITY, f64::min);
                report.concurrence = Some(ConcurrenceReport {
                    min_projection_weight,
                    onset: analysis::delayed_onset(&series, CONCURRENCE_ZERO, CONCURRENCE_RISE),
                });
            }
            records.push(SeriesRecord { variant: variant.label.clone(), observable: *obs, series });
        }
    }

    let mut grids = Vec::new();
    if s.observables.contains(&Observable::Wigner) {
        let spec = s.grid();
        for &t in &s.wigner_times {
            let rho = ctx.prepared.at(t)?;
            report.invariants = report.invariants.merge(rho.check_with_spectrum(&ctx.prepared.spectrum_at(t)?));
            report.states_checked += 1;
            let grid = wigner::wigner_from_fock(&measures::field_marginal(&rho), &spec)?;
            report.wigner.push(WignerReport {
                time: t,
                min: grid.min(),
                max: grid.max(),
                negativity_volume: wigner::negativity_volume(&grid),
                normalization_defect: grid.normalization_defect,
                imaginary_residue: grid.imaginary_residue,
                top_level_population: grid.top_level_population,
                truncation_warning: grid.truncation_warning,
            });
            grids.push(WignerRecord { variant: variant.label.clone(), time: t, grid });
        }
    }
    Ok((report, records, grids))
}

/// Runs every variant of `s`. Errors carry the scenario and variant names.
pub fn run_scenario(s: &Scenario) -> Result<RunOutput> {
    let scope = |e: Error| e.context(format!("scenario `{}`", s.name));
    s.validate().map_err(scope)?;
    let basis = s.fock_basis().map_err(scope)?;
    let eig = block_eigensystem(&s.model, basis).map_err(scope)?;
    let spectral_radius = eig.spectral_radius();
    let prop = Propagator::from_eigensystem(eig, s.model.gamma).map_err(scope)?;

    let nbar = s.field.mean_photons();
    let revival_time_estimate =
        if nbar >= 1.0 { analysis::revival_time_estimate(&s.model, nbar).ok() } else { None };
    let mut resolved = s.clone();
    resolved.dim = Some(basis.dim());
    let mut manifest = Manifest {
        generator: format!("cpbox-core {}", env!("CARGO_PKG_VERSION")),
        scenario: resolved,
        fock_dim: basis.dim(),
        truncation_tail: s.field.truncation_tail(basis),
        qubit_splitting: s.model.qubit_splitting(),
        series_terms: s.model.series_terms(),
        spectral_radius,
        revival_time_estimate,
        variants: Vec::new(),
    };
    let mut series = Vec::new();
    let mut wigner = Vec::new();
    for v in s.resolved_variants() {
        let (report, recs, grids) = run_variant(s, &prop, basis, &v)
            .map_err(|e| e.context(format!("scenario `{}`, variant `{}`", s.name, v.label)))?;
        manifest.variants.push(report);
        series.extend(recs);
        wigner.extend(grids);
    }
    Ok(RunOutput { manifest, series, wigner })
}
