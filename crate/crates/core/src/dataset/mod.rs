//! Training data for learned gain estimators.
//!
//! A training pair couples the inputs an estimator sees, the cumulative
//! visibility `Psi_k` and the shadow boundary `b_k`, with the exploration
//! gain it should predict, scaled so the pair's maximum is 1. Episodes
//! follow the exact greedy planner; every state along the way becomes one
//! pair.

pub mod rfa;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::{exact_gain_field, with_workers, GainMode};
use crate::grid::{OccupancyMap, ScalarField};
use crate::planner::select_next;
use crate::scenes::{generate_scene, SceneRecipe};
use crate::visibility::{ExplorationState, Vantage};

pub const MANIFEST: &str = "manifest.json";
pub const PAIR_DIR: &str = "pairs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub map_id: usize,
    pub episode: usize,
    pub step: usize,
    /// Seed of the map recipe the pair came from.
    pub seed: u64,
    /// Raw gain volume that maps to a target of 1; zero when nothing is
    /// left to gain.
    pub normalization: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub psi: ScalarField,
    pub boundary: ScalarField,
    pub target: ScalarField,
    pub normalization: f64,
}

/// Builds the pair for `state`: exploration gain divided by its maximum,
/// zero wherever `Psi_k <= 0`.
pub fn emit_pair(map: &OccupancyMap, state: &ExplorationState, workers: usize) -> Result<TrainingPair> {
    let gain = exact_gain_field(map, state, GainMode::Exploration, workers)?;
    Ok(pair_from_gain(state, gain.values()))
}

fn pair_from_gain(state: &ExplorationState, gain: &ScalarField) -> TrainingPair {
    let norm = gain.max().max(0.0);
    let target: Vec<f64> = gain
        .values()
        .iter()
        .zip(state.psi_cum().values())
        .map(|(&g, &psi)| {
            if norm > 0.0 && psi > 0.0 {
                (g / norm).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    TrainingPair {
        psi: state.psi_cum().clone(),
        boundary: state.boundary().clone(),
        target: ScalarField::new(state.geometry().clone(), target).expect("finite target"),
        normalization: norm,
    }
}

/// What to generate. Map `i` uses `recipes[i % recipes.len()]` reseeded
/// from the global seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub recipes: Vec<SceneRecipe>,
    pub maps: usize,
    pub episodes_per_map: usize,
    pub steps_per_episode: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub psi: String,
    pub boundary: String,
    pub target: String,
    #[serde(flatten)]
    pub meta: PairMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub n: usize,
    pub shape: Vec<usize>,
    pub config: DatasetConfig,
    pub pairs: Vec<PairEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(Some(&path), e.to_string()))
    }
}

/// SplitMix64 step; derives independent per-map and per-episode seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn map_seed(global: u64, map: usize) -> u64 {
    splitmix64(global ^ splitmix64(map as u64))
}

/// Generates the dataset into `out_dir` using `workers` threads across maps
/// and returns the manifest, which is written last. An episode ends early
/// once no seen node has positive gain, so `n` can fall short of
/// `maps * episodes * steps`. On error everything written so far is removed.
pub fn generate_dataset(config: &DatasetConfig, out_dir: &Path, workers: usize) -> Result<Manifest> {
    if config.recipes.is_empty() {
        return Err(Error::InvalidArgument("no scene recipes given".into()));
    }
    for r in &config.recipes {
        r.validate()?;
    }
    let shape = config.recipes[0].shape.clone();
    if config.recipes.iter().any(|r| r.shape != shape) {
        return Err(Error::InvalidArgument("all recipes must share one grid shape".into()));
    }
    let pair_dir = out_dir.join(PAIR_DIR);
    std::fs::create_dir_all(&pair_dir).map_err(|e| Error::io(&pair_dir, e))?;

    let result = with_workers(workers, || {
        (0..config.maps)
            .into_par_iter()
            .map(|m| run_map(config, m, &pair_dir))
            .collect::<Result<Vec<_>>>()
    })
    .and_then(|r| r)
    .and_then(|per_map| {
        let pairs: Vec<PairEntry> = per_map.into_iter().flatten().collect();
        let manifest = Manifest {
            format: "rfa".into(),
            seed: config.seed,
            n: pairs.len(),
            shape,
            config: config.clone(),
            pairs,
        };
        let path = out_dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    });
    if result.is_err() {
        let _ = std::fs::remove_dir_all(&pair_dir);
        let _ = std::fs::remove_file(out_dir.join(MANIFEST));
    }
    result
}

fn run_map(config: &DatasetConfig, map_id: usize, pair_dir: &Path) -> Result<Vec<PairEntry>> {
    let seed = map_seed(config.seed, map_id);
    let recipe = config.recipes[map_id % config.recipes.len()].with_seed(seed);
    let geometry = recipe.geometry()?;
    let map = OccupancyMap::from_mask(&generate_scene(&recipe)?, &geometry)?;
    let free: Vec<usize> = (0..geometry.node_count()).filter(|&i| map.is_free(i)).collect();

    let mut entries = Vec::new();
    for episode in 0..config.episodes_per_map {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ episode as u64));
        let x0 = Vantage::from_flat(&geometry, free[rng.gen_range(0..free.len())]);
        let mut state = ExplorationState::initial(&map, &x0)?;
        for step in 0..config.steps_per_episode {
            let mut gain = exact_gain_field(&map, &state, GainMode::Exploration, 1)?;
            let pair = pair_from_gain(&state, gain.values());
            entries.push(write_pair(pair_dir, &pair, PairMeta {
                map_id,
                episode,
                step,
                seed,
                normalization: pair.normalization,
            })?);

            if step + 1 == config.steps_per_episode {
                break;
            }
            for v in state.vantages() {
                gain.suppress(v.flat(&geometry)?);
            }
            match gain.max_value() {
                Some(g) if g > 0.0 => {}
                _ => break,
            }
            let next = select_next(&gain, state.current())?;
            state = state.observe(&map, &next)?;
        }
    }
    Ok(entries)
}

fn write_pair(dir: &Path, pair: &TrainingPair, meta: PairMeta) -> Result<PairEntry> {
    let stem = format!("m{:04}_e{:03}_s{:03}", meta.map_id, meta.episode, meta.step);
    let rel = |kind: &str| format!("{PAIR_DIR}/{stem}_{kind}.rfa");
    let entry = PairEntry {
        psi: rel("psi"),
        boundary: rel("boundary"),
        target: rel("target"),
        meta,
    };
    let root: PathBuf = dir.parent().map(Path::to_path_buf).unwrap_or_default();
    rfa::write(&pair.psi, &root.join(&entry.psi))?;
    rfa::write(&pair.boundary, &root.join(&entry.boundary))?;
    rfa::write(&pair.target, &root.join(&entry.target))?;
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{signed_distance, GridGeometry, Mask};

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn fully_seen_map_has_zero_target() {
        let g = GridGeometry::new(&[12, 12], 1.0).unwrap();
        let map = signed_distance(&Mask::all_free(&[12, 12]), &g).unwrap();
        let state = ExplorationState::initial(&map, &Vantage::new(vec![5, 5])).unwrap();
        let pair = emit_pair(&map, &state, 1).unwrap();
        assert!(pair.target.values().iter().all(|&t| t == 0.0));
        assert_eq!(pair.normalization, 0.0);
    }
}
