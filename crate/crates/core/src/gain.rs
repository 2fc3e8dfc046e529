//! Exact information gain.
//!
//! The gain of a candidate vantage `x` given the state `Psi_k` is the volume
//! of free space that `x` sees and no earlier vantage saw:
//! `dx^d * #{n : psi_x(n) > 0 and Psi_k(n) <= 0}`.
//!
//! [`exact_gain_at`] evaluates it from a full visibility field.
//! [`exact_gain_field`] evaluates every candidate, casting rays only towards
//! unseen free nodes and answering each with the sign-only ray test; the
//! per-node counts are identical to the pointwise routine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{OccupancyMap, ScalarField};
use crate::raycast::{segment_is_clear, Clearance, GridView};
use crate::visibility::{visibility_field, ExplorationState, Vantage};

/// Which nodes may host the next vantage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    /// Known map: any free node (`phi > 0`).
    Surveillance,
    /// Unknown map: only nodes seen so far (`Psi_k > 0`).
    Exploration,
}

/// Per-node gain with the candidate mask applied.
#[derive(Clone, Debug, PartialEq)]
pub struct GainField {
    values: ScalarField,
    candidates: Vec<bool>,
}

impl GainField {
    pub fn new(values: ScalarField, candidates: Vec<bool>) -> Result<Self> {
        if candidates.len() != values.values().len() {
            return Err(Error::InvalidArgument(
                "candidate mask does not match the field".into(),
            ));
        }
        for (i, (&v, &c)) in values.values().iter().zip(&candidates).enumerate() {
            if v < 0.0 || (!c && v != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gain {v} at node {i} violates the mask or sign"
                )));
            }
        }
        Ok(Self { values, candidates })
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn candidates(&self) -> &[bool] {
        &self.candidates
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.iter().filter(|&&c| c).count()
    }

    /// Largest value over candidates, if there are any.
    pub fn max_value(&self) -> Option<f64> {
        self.values
            .values()
            .iter()
            .zip(&self.candidates)
            .filter(|(_, &c)| c)
            .map(|(&v, _)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }

    /// Zeroes a node and drops it from the candidates.
    pub fn suppress(&mut self, flat: usize) {
        if flat < self.candidates.len() {
            self.candidates[flat] = false;
            self.values.values_mut()[flat] = 0.0;
        }
    }

    /// Restricts the candidates to `mask`, zeroing everything else.
    pub fn restrict(&mut self, mask: &[bool]) {
        let values = self.values.values_mut();
        for ((v, c), &keep) in values.iter_mut().zip(self.candidates.iter_mut()).zip(mask) {
            if !keep {
                *c = false;
                *v = 0.0;
            }
        }
    }
}

/// Exact gain of a single free vantage.
pub fn exact_gain_at(map: &OccupancyMap, state: &ExplorationState, x: &Vantage) -> Result<f64> {
    state.psi_cum().same_geometry(map.phi())?;
    let psi = visibility_field(map, x)?;
    let uncovered = psi
        .values()
        .iter()
        .zip(state.psi_cum().values())
        .filter(|(&new, &old)| new > 0.0 && old <= 0.0)
        .count();
    Ok(uncovered as f64 * map.geometry().cell_volume())
}

/// Candidate mask for a mode: free nodes, further restricted to seen nodes
/// when exploring.
pub fn candidate_mask(map: &OccupancyMap, state: &ExplorationState, mode: GainMode) -> Vec<bool> {
    map.phi()
        .values()
        .iter()
        .zip(state.psi_cum().values())
        .map(|(&phi, &psi)| {
            phi > 0.0
                && match mode {
                    GainMode::Surveillance => true,
                    GainMode::Exploration => psi > 0.0,
                }
        })
        .collect()
}

/// Exact gain at every candidate node, computed on `workers` threads
/// (`0` uses every available core). The output does not depend on `workers`.
pub fn exact_gain_field(
    map: &OccupancyMap,
    state: &ExplorationState,
    mode: GainMode,
    workers: usize,
) -> Result<GainField> {
    state.psi_cum().same_geometry(map.phi())?;
    let candidates = candidate_mask(map, state, mode);
    let unseen: Vec<usize> = map
        .phi()
        .values()
        .iter()
        .zip(state.psi_cum().values())
        .enumerate()
        .filter(|(_, (&phi, &psi))| phi > 0.0 && psi <= 0.0)
        .map(|(i, _)| i)
        .collect();

    let clearance = map.clearance();
    let counts = with_workers(workers, || match map.geometry().dim() {
        2 => count_visible::<2>(map, clearance, &candidates, &unseen),
        _ => count_visible::<3>(map, clearance, &candidates, &unseen),
    })?;

    let volume = map.geometry().cell_volume();
    let values = counts.into_iter().map(|c| c as f64 * volume).collect();
    Ok(GainField {
        values: ScalarField::from_parts(map.geometry().clone(), values),
        candidates,
    })
}

fn count_visible<const D: usize>(
    map: &OccupancyMap,
    clearance: &Clearance,
    candidates: &[bool],
    unseen: &[usize],
) -> Vec<usize> {
    let view = GridView::<D>::of(map.phi());
    let targets: Vec<[f64; D]> = unseen.iter().map(|&y| view.node_point(y)).collect();
    candidates
        .par_iter()
        .enumerate()
        .map(|(x, &is_candidate)| {
            if !is_candidate {
                return 0;
            }
            let a = view.node_point(x);
            targets
                .iter()
                .filter(|&&b| segment_is_clear(&view, clearance, a, b))
                .count()
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
