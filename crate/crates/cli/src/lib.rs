//! The `vantage` command-line tool.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 when the run fails, 2 on a usage error.

mod args;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use vantage_core::dataset::{generate_dataset, rfa, splitmix64, DatasetConfig};
use vantage_core::planner::{frequency_map, Planner};
use vantage_core::scenes::{
    comb_gallery, fitting_geometry, gallery_bounds, generate_scene, load_mask, rasterize_gallery,
    write_field_image, write_mask, PolygonGallery, SceneRecipe,
};
use vantage_core::{
    exact_gain_field, Error, ExplorationState, GainEstimator, GainMode, GridGeometry, Mask,
    OccupancyMap, PlanTrace, Result, StopRule, Vantage,
};

pub use args::{Cli, Command};
use args::*;

/// Polygons without an explicit `--dx` get this many spacings across their
/// longer side.
const POLYGON_RESOLUTION: f64 = 200.0;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Survey(a) => plan(a, GainMode::Surveillance),
        Command::Explore(a) => plan(a, GainMode::Exploration),
        Command::Gainmap(a) => gainmap(a),
        Command::Dataset(a) => dataset(a),
        Command::Frequency(a) => frequency(a),
        Command::Gallery(a) => gallery(a),
        Command::Scene(a) => scene(a),
        Command::Topgm(a) => {
            let field = rfa::read(&a.input)?;
            write_field_image(&field, &a.out)
        }
    }
}

/// A loaded map together with a JSON description of where it came from.
struct Loaded {
    mask: Mask,
    geometry: GridGeometry,
    source: Value,
    polygon: Option<PolygonGallery>,
}

impl Loaded {
    fn occupancy(&self) -> Result<OccupancyMap> {
        OccupancyMap::from_mask(&self.mask, &self.geometry)
    }
}

fn load_map(a: &MapArgs) -> Result<Loaded> {
    if let Some(dx) = a.dx.filter(|dx| !(dx.is_finite() && *dx > 0.0)) {
        return Err(Error::InvalidArgument(format!("--dx must be positive, got {dx}")));
    }
    let src = &a.source;
    if let Some(path) = &src.map {
        let dx = a.dx.unwrap_or(1.0);
        let mask = load_mask(path, a.threshold)?;
        let geometry = GridGeometry::new(mask.shape(), dx)?;
        let source = json!({"map": path, "threshold": a.threshold, "dx": dx});
        return Ok(Loaded { mask, geometry, source, polygon: None });
    }
    if let Some(family) = src.recipe {
        let recipe = SceneRecipe {
            dx: a.dx.unwrap_or(1.0),
            ..SceneRecipe::new(family.into(), &a.shape.0, a.seed)
        };
        let mask = generate_scene(&recipe)?;
        let geometry = recipe.geometry()?;
        let source = json!({"recipe": recipe});
        return Ok(Loaded { mask, geometry, source, polygon: None });
    }
    let (poly, name) = match &src.polygon {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            (PolygonGallery::from_json(&text)?, json!(path))
        }
        None => (comb_gallery(), json!("comb")),
    };
    let dx = a.dx.unwrap_or_else(|| {
        let (lo, hi) = poly.bounds();
        (hi[0] - lo[0]).max(hi[1] - lo[1]) / POLYGON_RESOLUTION
    });
    let geometry = fitting_geometry(&poly, dx, 3)?;
    let mask = rasterize_gallery(&poly, &geometry)?;
    let source = json!({"polygon": name, "dx": dx});
    Ok(Loaded { mask, geometry, source, polygon: Some(poly) })
}

/// Free node farthest from the obstacles; the first one in row-major order
/// on ties.
fn deepest_node(map: &OccupancyMap) -> Vantage {
    let phi = map.phi().values();
    let best = (0..phi.len()).fold(0, |best, i| if phi[i] > phi[best] { i } else { best });
    Vantage::from_flat(map.geometry(), best)
}

fn start_node(map: &OccupancyMap, x0: &Option<Node>) -> Vantage {
    match x0 {
        Some(node) => Vantage::new(node.0.clone()),
        None => deepest_node(map),
    }
}

fn stop_rule(s: &StopArgs) -> StopRule {
    StopRule {
        eps_gain: s.eps_gain,
        delta_residual: s.delta_res,
        max_steps: s.max_steps,
        stop_on_clear_boundary: !s.ignore_boundary,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn trace_json(trace: &PlanTrace, config: Value, timing: bool) -> Value {
    let mut doc = json!({
        "config": config,
        "vantages": trace.vantages,
        "residuals": trace.residuals,
        "max_gains": trace.max_gains,
        "max_gains_normalized": trace.max_gains_normalized,
        "stop_reason": trace.stop_reason,
    });
    if timing {
        doc["wall_ms"] = json!(trace.wall_ms);
    }
    doc
}

fn plan(a: PlanArgs, mode: GainMode) -> Result<()> {
    let loaded = load_map(&a.map)?;
    let map = loaded.occupancy()?;
    let estimator = GainEstimator::parse(&a.estimator, mode)?;
    let stop = stop_rule(&a.stop);
    let x0 = start_node(&map, &a.x0);
    create_dir(&a.out_dir)?;
    let snapshots = a.out_dir.join("snapshots");
    if a.snapshot_every > 0 {
        create_dir(&snapshots)?;
    }

    let trace = Planner::new(&map, &estimator, stop.clone())
        .workers(a.workers)
        .run_observed(&x0, a.map.seed, |state, gain| {
            let k = state.step();
            if a.snapshot_every > 0 && k % a.snapshot_every == 0 {
                rfa::write(state.psi_cum(), &snapshots.join(format!("step_{k:04}_psi.rfa")))?;
                rfa::write(state.boundary(), &snapshots.join(format!("step_{k:04}_boundary.rfa")))?;
                rfa::write(gain.values(), &snapshots.join(format!("step_{k:04}_gain.rfa")))?;
            }
            Ok(())
        })?;

    let config = json!({
        "command": if mode == GainMode::Surveillance { "survey" } else { "explore" },
        "source": loaded.source,
        "shape": loaded.geometry.shape(),
        "dx": loaded.geometry.spacing(),
        "estimator": estimator.label(),
        "stop": stop,
        "x0": x0,
        "seed": a.map.seed,
    });
    let doc = trace_json(&trace, config, a.timing);
    let text = serde_json::to_string_pretty(&doc).expect("trace serializes") + "\n";
    write_text(&a.out_dir.join("trace.json"), &text)?;
    println!(
        "vantages={} residual={:.6} stop={}",
        trace.len(),
        trace.final_residual(),
        doc["stop_reason"].as_str().unwrap_or_default()
    );
    Ok(())
}

fn gainmap(a: GainmapArgs) -> Result<()> {
    let map = load_map(&a.map)?.occupancy()?;
    let mut state = ExplorationState::initial(&map, &start_node(&map, &a.x0))?;
    for v in &a.visits {
        state = state.observe(&map, &Vantage::new(v.0.clone()))?;
    }
    let mode = match a.mode {
        Mode::Surveillance => GainMode::Surveillance,
        Mode::Exploration => GainMode::Exploration,
    };
    let gain = exact_gain_field(&map, &state, mode, a.workers)?;
    rfa::write(gain.values(), &a.out)?;
    println!(
        "max_gain={} candidates={}",
        gain.max_value().unwrap_or(0.0),
        gain.candidate_count()
    );
    Ok(())
}

fn dataset(a: DatasetArgs) -> Result<()> {
    let recipes = a
        .recipes
        .iter()
        .map(|&f| SceneRecipe {
            dx: a.dx,
            ..SceneRecipe::new(f.into(), &a.shape.0, 0)
        })
        .collect();
    let config = DatasetConfig {
        recipes,
        maps: a.maps,
        episodes_per_map: a.episodes,
        steps_per_episode: a.steps,
        seed: a.seed,
    };
    create_dir(&a.out_dir)?;
    let manifest = generate_dataset(&config, &a.out_dir, a.workers)?;
    println!("pairs={}", manifest.n);
    Ok(())
}

fn frequency(a: FrequencyArgs) -> Result<()> {
    let map = load_map(&a.map)?.occupancy()?;
    let g = map.geometry();
    let estimator = GainEstimator::parse(&a.estimator, GainMode::Exploration)?;
    let stop = stop_rule(&a.stop);
    let free: Vec<usize> = (0..g.node_count()).filter(|&i| map.is_free(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(a.map.seed);
    let planner = Planner::new(&map, &estimator, stop).workers(a.workers);
    let traces = (0..a.runs)
        .map(|run| {
            let x0 = Vantage::from_flat(g, free[rng.gen_range(0..free.len())]);
            planner.run(&x0, splitmix64(a.map.seed ^ run as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let field = frequency_map(&traces, a.sigma)?;
    rfa::write(&field, &a.out)?;
    let vantages: usize = traces.iter().map(PlanTrace::len).sum();
    println!("runs={} vantages={} peak={:.6}", traces.len(), vantages, field.max());
    Ok(())
}

fn gallery(a: GalleryArgs) -> Result<()> {
    let loaded = load_map(&a.map)?;
    let poly = loaded
        .polygon
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("gallery needs --polygon or --comb".into()))?;
    let bounds = gallery_bounds(poly)?;
    let map = loaded.occupancy()?;
    let stop = StopRule {
        eps_gain: 0.0,
        delta_residual: a.delta_res,
        max_steps: a.max_steps,
        stop_on_clear_boundary: false,
    };
    let trace = Planner::new(&map, &GainEstimator::Exact(GainMode::Surveillance), stop)
        .workers(a.workers)
        .run(&start_node(&map, &a.x0), 0)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "n={} h={} r={} chvatal={} frontier={}",
        bounds.n, bounds.h, bounds.r, bounds.chvatal, bounds.frontier
    );
    let _ = writeln!(
        out,
        "greedy={} residual={:.6} grid={:?}",
        trace.len(),
        trace.final_residual(),
        map.geometry().shape()
    );
    Ok(())
}

fn scene(a: SceneArgs) -> Result<()> {
    let loaded = load_map(&a.map)?;
    write_mask(&loaded.mask, &a.out)?;
    println!(
        "shape={:?} obstacle_fraction={:.4}",
        loaded.mask.shape(),
        loaded.mask.obstacle_fraction()
    );
    Ok(())
}
