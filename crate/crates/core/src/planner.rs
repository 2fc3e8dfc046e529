//! Greedy vantage selection.
//!
//! Each step asks a [`GainEstimator`] for a gain field over the candidate
//! nodes, removes every vantage already visited, moves to the argmax (ties go
//! to the node closest to the current vantage, then to the smallest row-major
//! index), and folds the new view into the cumulative state. The episode ends
//! when the residual, the gain or the shadow boundary vanish, or when the step
//! budget runs out.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::rfa;
use crate::error::{Error, Result};
use crate::gain::{exact_gain_field, GainField, GainMode};
use crate::grid::{GridGeometry, OccupancyMap, ScalarField};
use crate::visibility::{free_vantage, ExplorationState, Vantage};

/// Relative tolerance under which two gains count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The shadow boundary counts as gone once its maximum drops below this.
pub const BOUNDARY_FLOOR: f64 = 1e-12;

/// Source of gain fields for the greedy loop.
#[derive(Clone, Debug, PartialEq)]
pub enum GainEstimator {
    /// Exact gain; the mode fixes the candidate set.
    Exact(GainMode),
    /// Random walker: a unit spike at a uniformly drawn, not yet visited
    /// node of the visible region.
    Random,
    /// A subprocess that reads `Psi_k` and `b_k` as RFA files and writes a
    /// normalized gain field. Invoked as
    /// `<program> <args..> --psi <in> --boundary <in> --out <out>`.
    External {
        command: Vec<String>,
        exchange_dir: Option<PathBuf>,
    },
}

impl GainEstimator {
    /// Parses `exact`, `random` or `external:<command line>`.
    pub fn parse(spec: &str, mode: GainMode) -> Result<Self> {
        match spec {
            "exact" => Ok(Self::Exact(mode)),
            "random" => Ok(Self::Random),
            _ => match spec.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External {
                    command: cmd.split_whitespace().map(str::to_owned).collect(),
                    exchange_dir: None,
                }),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown estimator {spec:?}; expected exact, random or external:<cmd>"
                ))),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Exact(GainMode::Surveillance) => "exact-surveillance".into(),
            Self::Exact(GainMode::Exploration) => "exact-exploration".into(),
            Self::Random => "random".into(),
            Self::External { command, .. } => format!("external:{}", command.join(" ")),
        }
    }

    /// Gain field for the current state, candidates already masked.
    pub fn estimate(
        &self,
        map: &OccupancyMap,
        state: &ExplorationState,
        rng: &mut ChaCha8Rng,
        workers: usize,
    ) -> Result<GainField> {
        match self {
            Self::Exact(mode) => exact_gain_field(map, state, *mode, workers),
            Self::Random => random_estimator(state, map, rng),
            Self::External {
                command,
                exchange_dir,
            } => external_estimate(command, exchange_dir.as_deref(), state),
        }
    }

    /// Maximum gain in dimensionless units, compared against `eps_gain`.
    /// Exact gains are volumes and get divided by the seen volume `|Omega_k|`;
    /// the other estimators already produce values in `[0, 1]`.
    pub fn normalize(&self, raw_max: f64, state: &ExplorationState) -> f64 {
        match self {
            Self::Exact(_) => raw_max / state.seen_volume(),
            _ => raw_max,
        }
    }
}

/// Unit spike at a uniformly drawn node of `{Psi_k > 0}` that is not a
/// previous vantage.
pub fn random_estimator(
    state: &ExplorationState,
    map: &OccupancyMap,
    rng: &mut ChaCha8Rng,
) -> Result<GainField> {
    state.psi_cum().same_geometry(map.phi())?;
    let geometry = state.geometry();
    let mut visible: Vec<bool> = state.psi_cum().values().iter().map(|&v| v > 0.0).collect();
    for v in state.vantages() {
        if let Some(flat) = geometry.flat_index(v.node()) {
            visible[flat] = false;
        }
    }
    let pool: Vec<usize> = (0..visible.len()).filter(|&i| visible[i]).collect();
    if pool.is_empty() {
        return Err(Error::NoCandidate("visible region is exhausted".into()));
    }
    let pick = pool[rng.gen_range(0..pool.len())];
    let mut values = vec![0.0; visible.len()];
    values[pick] = 1.0;
    let candidates = state.psi_cum().values().iter().map(|&v| v > 0.0).collect();
    GainField::new(ScalarField::new(geometry.clone(), values)?, candidates)
}

fn external_estimate(
    command: &[String],
    exchange_dir: Option<&std::path::Path>,
    state: &ExplorationState,
) -> Result<GainField> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::Estimator("empty command".into()))?;
    let scratch;
    let dir = match exchange_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            dir.to_path_buf()
        }
        None => {
            scratch = std::env::temp_dir().join(format!(
                "vantage-exchange-{}-{}",
                std::process::id(),
                state.step()
            ));
            std::fs::create_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
            scratch.clone()
        }
    };
    let psi_path = dir.join("psi.rfa");
    let boundary_path = dir.join("boundary.rfa");
    let out_path = dir.join("gain.rfa");
    let _ = std::fs::remove_file(&out_path);
    rfa::write(state.psi_cum(), &psi_path)?;
    rfa::write(state.boundary(), &boundary_path)?;

    let output = Command::new(program)
        .args(args)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--boundary")
        .arg(&boundary_path)
        .arg("--out")
        .arg(&out_path)
        .output()
        .map_err(|e| Error::Estimator(format!("cannot run {program:?}: {e}")))?;
    if !output.status.success() {
        return Err(Error::Estimator(format!(
            "{program:?} exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let predicted = rfa::read(&out_path)
        .map_err(|e| Error::Estimator(format!("unreadable prediction: {e}")))?;
    if predicted.geometry().shape() != state.geometry().shape() {
        return Err(Error::Estimator(format!(
            "prediction shape {:?} does not match {:?}",
            predicted.geometry().shape(),
            state.geometry().shape()
        )));
    }
    if let Some(v) = predicted.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Estimator(format!(
            "prediction value {v} outside [0, 1]"
        )));
    }
    if exchange_dir.is_none() {
        let _ = std::fs::remove_dir_all(&dir);
    }
    let candidates: Vec<bool> = state.psi_cum().values().iter().map(|&v| v > 0.0).collect();
    let values = predicted
        .values()
        .iter()
        .zip(&candidates)
        .map(|(&v, &c)| if c { v } else { 0.0 })
        .collect();
    GainField::new(ScalarField::new(state.geometry().clone(), values)?, candidates)
}

/// Argmax of the field with the distance-to-current tie break.
pub fn select_next(gain: &GainField, current: &Vantage) -> Result<Vantage> {
    let geometry = gain.values().geometry();
    let here = current.flat(geometry)?;
    let best = gain
        .max_value()
        .ok_or_else(|| Error::NoCandidate("gain field has no candidates".into()))?;
    let floor = best - TIE_TOLERANCE * best.abs();
    let chosen = gain
        .values()
        .values()
        .iter()
        .zip(gain.candidates())
        .enumerate()
        .filter(|(_, (&v, &c))| c && v >= floor)
        .map(|(i, _)| i)
        .min_by_key(|&i| (geometry.node_distance_sq(here, i), i))
        .expect("the maximum is attained by a candidate");
    Ok(Vantage::from_flat(geometry, chosen))
}

/// Termination thresholds for an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop once the normalized maximum gain falls below this (or is zero).
    pub eps_gain: f64,
    /// Stop once the residual falls below this.
    pub delta_residual: f64,
    /// Upper bound on the number of vantages, the initial one included.
    pub max_steps: usize,
    /// Stop when the shadow boundary has vanished.
    pub stop_on_clear_boundary: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            eps_gain: 1e-3,
            delta_residual: 1e-3,
            max_steps: 100,
            stop_on_clear_boundary: true,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_gain.is_finite() && self.eps_gain >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_gain must be a nonnegative number, got {}",
                self.eps_gain
            )));
        }
        if !(0.0..=1.0).contains(&self.delta_residual) {
            return Err(Error::InvalidArgument(format!(
                "delta_residual must lie in [0, 1], got {}",
                self.delta_residual
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualBelow,
    GainBelow,
    NoShadowBoundary,
    MaxSteps,
    NoCandidates,
}

/// Record of one episode. `residuals[i]` and `wall_ms[i]` belong to
/// `vantages[i]`; `max_gains[k]` is the estimate evaluated at state `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTrace {
    pub geometry: GridGeometry,
    pub estimator: String,
    pub seed: u64,
    pub vantages: Vec<Vantage>,
    pub residuals: Vec<f64>,
    pub max_gains: Vec<f64>,
    pub max_gains_normalized: Vec<f64>,
    pub wall_ms: Vec<f64>,
    pub stop_reason: StopReason,
}

impl PlanTrace {
    pub fn len(&self) -> usize {
        self.vantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vantages.is_empty()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("a trace holds the initial vantage")
    }

    /// Residual after `step` selections; finished episodes hold their last
    /// value.
    pub fn residual_at(&self, step: usize) -> f64 {
        self.residuals[step.min(self.residuals.len() - 1)]
    }
}

/// Greedy loop configuration bound to a map.
pub struct Planner<'a> {
    map: &'a OccupancyMap,
    estimator: &'a GainEstimator,
    stop: StopRule,
    workers: usize,
}

impl<'a> Planner<'a> {
    pub fn new(map: &'a OccupancyMap, estimator: &'a GainEstimator, stop: StopRule) -> Self {
        Self {
            map,
            estimator,
            stop,
            workers: 0,
        }
    }

    /// Threads for exact gain evaluation; `0` uses every core.
    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn run(&self, x0: &Vantage, seed: u64) -> Result<PlanTrace> {
        self.run_observed(x0, seed, |_, _| Ok(()))
    }

    /// Like [`Self::run`], calling `observer` with every state and the gain
    /// field estimated for it (after repeat suppression).
    pub fn run_observed(
        &self,
        x0: &Vantage,
        seed: u64,
        mut observer: impl FnMut(&ExplorationState, &GainField) -> Result<()>,
    ) -> Result<PlanTrace> {
        self.stop.validate()?;
        free_vantage(self.map, x0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geometry = self.map.geometry().clone();

        let clock = Instant::now();
        let mut state = ExplorationState::initial(self.map, x0)?;
        let mut trace = PlanTrace {
            geometry: geometry.clone(),
            estimator: self.estimator.label(),
            seed,
            vantages: vec![x0.clone()],
            residuals: vec![state.residual(self.map)?],
            max_gains: Vec::new(),
            max_gains_normalized: Vec::new(),
            wall_ms: vec![clock.elapsed().as_secs_f64() * 1e3],
            stop_reason: StopReason::MaxSteps,
        };

        trace.stop_reason = loop {
            if trace.final_residual() < self.stop.delta_residual {
                break StopReason::ResidualBelow;
            }
            if self.stop.stop_on_clear_boundary && state.boundary().max() < BOUNDARY_FLOOR {
                break StopReason::NoShadowBoundary;
            }
            if trace.len() >= self.stop.max_steps {
                break StopReason::MaxSteps;
            }

            let clock = Instant::now();
            let mut gain = self
                .estimator
                .estimate(self.map, &state, &mut rng, self.workers)?;
            for v in state.vantages() {
                gain.suppress(v.flat(&geometry)?);
            }
            observer(&state, &gain)?;
            let Some(raw) = gain.max_value() else {
                break StopReason::NoCandidates;
            };
            let normalized = self.estimator.normalize(raw, &state);
            trace.max_gains.push(raw);
            trace.max_gains_normalized.push(normalized);
            if normalized <= 0.0 || normalized < self.stop.eps_gain {
                break StopReason::GainBelow;
            }

            let next = select_next(&gain, state.current())?;
            state = state.observe(self.map, &next)?;
            trace.vantages.push(next);
            trace.residuals.push(state.residual(self.map)?);
            trace.wall_ms.push(clock.elapsed().as_secs_f64() * 1e3);
        };
        Ok(trace)
    }
}

/// Runs one greedy episode from `x0` using every available core.
pub fn run_episode(
    map: &OccupancyMap,
    estimator: &GainEstimator,
    x0: &Vantage,
    stop: &StopRule,
    seed: u64,
) -> Result<PlanTrace> {
    Planner::new(map, estimator, stop.clone()).run(x0, seed)
}

/// Overlays a unit Gaussian of width `sigma` (world units) on every vantage
/// of every trace. Contributions below `exp(-36)` are dropped.
pub fn frequency_map(traces: &[PlanTrace], sigma: f64) -> Result<ScalarField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let geometry = &traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("no traces to aggregate".into()))?
        .geometry;
    if let Some(t) = traces.iter().find(|t| &t.geometry != geometry) {
        return Err(Error::InvalidArgument(format!(
            "trace geometry {:?} differs from {:?}",
            t.geometry.shape(),
            geometry.shape()
        )));
    }

    let dx = geometry.spacing();
    let reach = (8.5 * sigma / dx).ceil() as isize;
    let shape = geometry.shape();
    let strides = geometry.strides();
    let mut values = vec![0.0; geometry.node_count()];
    for v in traces.iter().flat_map(|t| &t.vantages) {
        let center = v.node();
        let lo: Vec<usize> = center
            .iter()
            .map(|&c| (c as isize - reach).max(0) as usize)
            .collect();
        let hi: Vec<usize> = center
            .iter()
            .zip(shape)
            .map(|(&c, &m)| ((c as isize + reach) as usize).min(m - 1))
            .collect();
        let mut node = lo.clone();
        'walk: loop {
            let r2: f64 = node
                .iter()
                .zip(center)
                .map(|(&a, &b)| ((a as f64 - b as f64) * dx).powi(2))
                .sum();
            let flat: usize = node.iter().zip(&strides).map(|(a, s)| a * s).sum();
            values[flat] += (-r2 / (2.0 * sigma * sigma)).exp();
            for axis in (0..node.len()).rev() {
                if node[axis] < hi[axis] {
                    node[axis] += 1;
                    continue 'walk;
                }
                node[axis] = lo[axis];
            }
            break;
        }
    }
    ScalarField::new(geometry.clone(), values)
}
