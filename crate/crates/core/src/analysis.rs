//! Post-processing of sampled series: Rabi scales, envelopes, collapse and
//! revival landmarks, entanglement onset.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CompositeIndex, Qubit};
use crate::measures::TimeSeries;
use crate::model::{block_coupling, diagonal_energy, Block, ModelParams};

/// Splitting `E₊ − E₋` of the block anchored at `|e,n>`.
pub fn block_frequency(params: &ModelParams, n: usize) -> Result<f64> {
    let k = params.k as usize;
    let a = diagonal_energy(params, CompositeIndex::new(Qubit::E, n));
    let b = diagonal_energy(params, CompositeIndex::new(Qubit::G, n + k));
    Ok(Block::diagonalize(n, a, b, block_coupling(params, n)?).splitting())
}

/// Rabi frequency at the photon number closest to `nbar`.
pub fn rabi_frequency(params: &ModelParams, nbar: f64) -> Result<f64> {
    block_frequency(params, nbar.round() as usize)
}

/// `t_rev = 2π / |dΩ_n/dn|` at `n̄`, with a central difference over the
/// block splittings. For a resonant k = 1 coupling `Ω_n ≈ 2ḡ√n`, so this
/// is the familiar `2π √n̄ / ḡ`.
pub fn revival_time_estimate(params: &ModelParams, nbar: f64) -> Result<f64> {
    let n = nbar.round() as usize;
    if n < 1 {
        return Err(Error::Validation("revival estimate needs a mean photon number of at least 1".into()));
    }
    let slope = 0.5 * (block_frequency(params, n + 1)? - block_frequency(params, n - 1)?);
    if slope == 0.0 {
        return Err(Error::Validation("block frequencies do not depend on n; no revival".into()));
    }
    Ok(2.0 * PI / slope.abs())
}

/// Running maximum of `|v|` over a centred window of `±half_window` in time.
pub fn envelope(series: &TimeSeries, half_window: f64) -> Vec<f64> {
    let t = &series.times;
    let v = &series.values;
    let mut out = Vec::with_capacity(v.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..v.len() {
        while t[lo] < t[i] - half_window {
            lo += 1;
        }
        while hi + 1 < v.len() && t[hi + 1] <= t[i] + half_window {
            hi += 1;
        }
        out.push(v[lo..=hi].iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

/// First stretch where `env < threshold` lasts at least `min_duration`.
/// The window extends until the envelope rises back to the threshold or
/// the series ends.
pub fn first_quiet_window(times: &[f64], env: &[f64], threshold: f64, min_duration: f64) -> Option<Window> {
    let mut i = 0;
    while i < env.len() {
        if env[i] < threshold {
            let mut j = i;
            while j + 1 < env.len() && env[j + 1] < threshold {
                j += 1;
            }
            if times[j] - times[i] >= min_duration {
                return Some(Window { start: times[i], end: times[j] });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub collapse: Window,
    /// First time after the collapse with envelope above the threshold.
    pub onset: f64,
    pub peak_time: f64,
    pub peak_value: f64,
}

/// Collapse: envelope below `quiet` for at least `min_duration`.
/// Revival: envelope back above `loud` afterwards; the peak is the largest
/// `|v|` until the envelope falls below `loud` again.
pub fn detect_revival(
    series: &TimeSeries,
    half_window: f64,
    quiet: f64,
    loud: f64,
    min_duration: f64,
) -> Option<Revival> {
    let env = envelope(series, half_window);
    let collapse = first_quiet_window(&series.times, &env, quiet, min_duration)?;
    let start = series.times.iter().position(|&t| t > collapse.end)?;
    let onset_idx = (start..env.len()).find(|&i| env[i] > loud)?;
    let mut end = onset_idx;
    while end + 1 < env.len() && env[end + 1] > loud {
        end += 1;
    }
    let (peak_idx, peak_value) = (onset_idx..=end)
        .map(|i| (i, series.values[i].abs()))
        .fold((onset_idx, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Some(Revival { collapse, onset: series.times[onset_idx], peak_time: series.times[peak_idx], peak_value })
}

/// Largest `|v|` with `t` in `[from, to]`.
pub fn peak_abs_in(series: &TimeSeries, from: f64, to: f64) -> f64 {
    series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| (from..=to).contains(*t))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}

/// Whether the envelope, once below `level`, ever climbs above it again.
pub fn re_exceeds_after_drop(env: &[f64], level: f64) -> bool {
    match env.iter().position(|&e| e < level) {
        Some(i) => env[i..].iter().any(|&e| e > level),
        None => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Onset {
    /// End of the leading stretch with values below `zero_tol`.
    pub quiet_until: f64,
    /// First time the value exceeds `rise`.
    pub rise_time: f64,
}

/// Leading interval `[0, t₁]` with `v < zero_tol`, followed by a sample
/// with `v > rise`. `None` when either part is missing or `t₁ = 0`.
pub fn delayed_onset(series: &TimeSeries, zero_tol: f64, rise: f64) -> Option<Onset> {
    let first_nonzero = series.values.iter().position(|&v| v >= zero_tol)?;
    if first_nonzero == 0 {
        return None;
    }
    let quiet_until = series.times[first_nonzero - 1];
    if quiet_until <= 0.0 {
        return None;
    }
    let rise_idx = series.values.iter().position(|&v| v > rise)?;
    Some(Onset { quiet_until, rise_time: series.times[rise_idx] })
}

/// `samples` evenly spaced points on `[0, t_max]`.
pub fn linspace(t_max: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![0.0];
    }
    (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
}
