//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p vantage-cli --test acceptance`. A single failing
//! criterion does not stop the others; the summary at the end lists every
//! failure.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use vantage_core::gain::candidate_mask;
use vantage_core::grid::{signed_distance, smeared_delta};
use vantage_core::scenes::{
    comb_gallery, fitting_geometry, gallery_bounds, generate_scene, rasterize_gallery,
    PolygonGallery, SceneFamily, SceneRecipe,
};
use vantage_core::visibility::{unseen_count, visibility_field, EPS_SPACINGS};
use vantage_core::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scene(family: SceneFamily, shape: &[usize], seed: u64) -> OccupancyMap {
    let recipe = SceneRecipe::new(family, shape, seed);
    OccupancyMap::from_mask(&generate_scene(&recipe).unwrap(), &recipe.geometry().unwrap()).unwrap()
}

fn free_nodes(map: &OccupancyMap) -> Vec<usize> {
    (0..map.geometry().node_count()).filter(|&i| map.is_free(i)).collect()
}

fn random_free(map: &OccupancyMap, rng: &mut ChaCha8Rng) -> Vantage {
    let free = free_nodes(map);
    Vantage::from_flat(map.geometry(), free[rng.gen_range(0..free.len())])
}

fn deepest(map: &OccupancyMap) -> Vantage {
    let phi = map.phi().values();
    let best = (0..phi.len()).fold(0, |b, i| if phi[i] > phi[b] { i } else { b });
    Vantage::from_flat(map.geometry(), best)
}

/// Field routine against the single-point routine on every candidate.
fn gain_oracle() -> Outcome {
    let clock = Instant::now();
    let mut jobs: Vec<OccupancyMap> = (0..25)
        .map(|s| {
            let family = if s % 2 == 0 { SceneFamily::Disks } else { SceneFamily::Blocks };
            scene(family, &[32, 32], 100 + s)
        })
        .collect();
    jobs.extend((0..5).map(|s| scene(SceneFamily::Primitives3d, &[16, 16, 16], 200 + s)));

    let mut compared = 0usize;
    let mut mismatches = 0usize;
    for (k, map) in jobs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let state = ExplorationState::initial(map, &random_free(map, &mut rng))
            .unwrap()
            .observe(map, &random_free(map, &mut rng))
            .unwrap();
        for mode in [GainMode::Surveillance, GainMode::Exploration] {
            let field = exact_gain_field(map, &state, mode, 0).unwrap();
            let allowed = candidate_mask(map, &state, mode);
            let g = map.geometry();
            for i in 0..g.node_count() {
                let expected = if allowed[i] {
                    exact_gain_at(map, &state, &Vantage::from_flat(g, i)).unwrap()
                } else {
                    0.0
                };
                compared += 1;
                if field.values().at(i).to_bits() != expected.to_bits() {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    check(
        mismatches == 0 && secs < 300.0,
        format!("30 scenes x 2 modes, {compared} nodes, {mismatches} mismatches, {secs:.1} s (limit 300 s)"),
    )
}

/// Residual drop times free volume equals the selected gain at every step.
fn gain_residual_identity() -> Outcome {
    let families = [SceneFamily::Radial, SceneFamily::Disks, SceneFamily::Blocks];
    let mut steps = 0usize;
    let mut bad = 0usize;
    for s in 0..10u64 {
        let map = scene(families[s as usize % 3], &[64, 64], 300 + s);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x0 = random_free(&map, &mut rng);
        let stop = StopRule {
            eps_gain: 0.0,
            delta_residual: 0.0,
            max_steps: 200,
            stop_on_clear_boundary: false,
        };
        let trace = run_episode(&map, &GainEstimator::Exact(GainMode::Exploration), &x0, &stop, 0).unwrap();
        let cell = map.geometry().cell_volume();
        let mut state = ExplorationState::initial(&map, &x0).unwrap();
        let mut before = unseen_count(state.psi_cum(), &map).unwrap();
        for (k, v) in trace.vantages.iter().enumerate().skip(1) {
            state = state.observe(&map, v).unwrap();
            let after = unseen_count(state.psi_cum(), &map).unwrap();
            let residual_drop = trace.residuals[k - 1] - trace.residuals[k];
            let counted = (residual_drop * map.free_count() as f64).round() as usize;
            steps += 1;
            if before - after != counted || (before - after) as f64 * cell != trace.max_gains[k - 1] {
                bad += 1;
            }
            before = after;
        }
    }
    check(bad == 0, format!("10 maps, {steps} greedy steps, {bad} mismatches"))
}

fn convex_gallery() -> Outcome {
    let heptagon: Vec<[f64; 2]> = (0..7)
        .map(|k| {
            let a = 0.2 + k as f64 * std::f64::consts::TAU / 7.0;
            [3.0 + 2.5 * a.cos(), 3.0 + 2.5 * a.sin()]
        })
        .collect();
    let poly = PolygonGallery::new(heptagon, vec![]).unwrap();
    let g = fitting_geometry(&poly, 0.05, 3).unwrap();
    let map = OccupancyMap::from_mask(&rasterize_gallery(&poly, &g).unwrap(), &g).unwrap();
    let x0 = deepest(&map);
    let mut details = Vec::new();
    let mut ok = true;
    for mode in [GainMode::Surveillance, GainMode::Exploration] {
        let trace = run_episode(&map, &GainEstimator::Exact(mode), &x0, &StopRule::default(), 0).unwrap();
        ok &= trace.len() == 1 && trace.final_residual() == 0.0;
        details.push(format!(
            "{mode:?}: {} vantage(s), residual {}",
            trace.len(),
            trace.final_residual()
        ));
    }
    check(ok, format!("heptagon on {:?} grid; {}", g.shape(), details.join("; ")))
}

fn art_gallery() -> Outcome {
    let comb = comb_gallery();
    let bounds = gallery_bounds(&comb).unwrap();
    let g = fitting_geometry(&comb, 0.1, 3).unwrap();
    let map = OccupancyMap::from_mask(&rasterize_gallery(&comb, &g).unwrap(), &g).unwrap();
    let stop = StopRule {
        eps_gain: 0.0,
        delta_residual: 1e-3,
        max_steps: 100,
        stop_on_clear_boundary: false,
    };
    let trace = run_episode(&map, &GainEstimator::Exact(GainMode::Surveillance), &deepest(&map), &stop, 0).unwrap();
    check(
        bounds.n == 58 && bounds.r == 19 && trace.final_residual() < 1e-3 && trace.len() <= bounds.frontier,
        format!(
            "n={} r={} chvatal={} frontier={}; greedy used {} vantages, residual {:.2e}",
            bounds.n,
            bounds.r,
            bounds.chvatal,
            bounds.frontier,
            trace.len(),
            trace.final_residual()
        ),
    )
}

fn greedy_vs_random() -> Outcome {
    const SEEDS: u64 = 20;
    const HORIZON: usize = 30;
    let mut greedy_sum = [0.0f64; HORIZON + 1];
    let mut random_sum = [0.0f64; HORIZON + 1];
    let mut reached = 0usize;
    let mut runs = 0usize;
    let mut worst_len = 0usize;
    for m in 0..5u64 {
        let map = scene(SceneFamily::Blocks, &[128, 128], 400 + m);
        for seed in 0..SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * m + seed);
            let x0 = random_free(&map, &mut rng);
            let greedy_stop = StopRule { eps_gain: 0.0, max_steps: 41, ..Default::default() };
            let random_stop = StopRule { eps_gain: 0.0, max_steps: HORIZON + 1, ..Default::default() };
            let greedy =
                run_episode(&map, &GainEstimator::Exact(GainMode::Exploration), &x0, &greedy_stop, seed).unwrap();
            let random = run_episode(&map, &GainEstimator::Random, &x0, &random_stop, seed).unwrap();
            for step in 1..=HORIZON {
                greedy_sum[step] += greedy.residual_at(step);
                random_sum[step] += random.residual_at(step);
            }
            runs += 1;
            if greedy.final_residual() < 1e-3 && greedy.len() - 1 <= 40 {
                reached += 1;
            }
            worst_len = worst_len.max(greedy.len() - 1);
        }
    }
    let violations: Vec<usize> = (1..=HORIZON).filter(|&k| greedy_sum[k] > random_sum[k]).collect();
    let share = reached as f64 / runs as f64;
    let n = runs as f64;
    check(
        violations.is_empty() && share >= 0.9,
        format!(
            "{runs} runs; mean residual at step 1/10/30: greedy {:.4}/{:.4}/{:.4}, random {:.4}/{:.4}/{:.4}; \
             steps where greedy is worse: {violations:?}; reached 1e-3 within 40 steps: {:.0}% (most steps {worst_len})",
            greedy_sum[1] / n,
            greedy_sum[10] / n,
            greedy_sum[30] / n,
            random_sum[1] / n,
            random_sum[10] / n,
            random_sum[30] / n,
            100.0 * share
        ),
    )
}

fn delta_calibration() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for dx in [1.0, 0.5, 0.1] {
        let eps = EPS_SPACINGS * dx;
        let h = eps / 20_000.0;
        let mass: f64 = (-20_000..=20_000)
            .map(|i| smeared_delta(i as f64 * h, eps).unwrap() * h)
            .sum();
        let peak = smeared_delta(0.0, eps).unwrap();
        let support = smeared_delta(eps / 2.0, eps).unwrap() == 0.0
            && smeared_delta(-eps / 2.0, eps).unwrap() == 0.0
            && smeared_delta(eps / 2.0 * (1.0 - 1e-9), eps).unwrap() > 0.0
            && smeared_delta(3.0 * eps, eps).unwrap() == 0.0;
        ok &= (mass - 1.0).abs() <= 0.01 && peak == 2.0 / eps && support;
        notes.push(format!("eps={eps}: mass {mass:.6}, peak {}", if peak == 2.0 / eps { "exact" } else { "off" }));
    }

    let mut scenes: Vec<OccupancyMap> = Vec::new();
    for s in 0..6u64 {
        for family in [SceneFamily::Radial, SceneFamily::Disks, SceneFamily::Blocks] {
            scenes.push(scene(family, &[64, 64], 500 + s));
        }
    }
    scenes.push(scene(SceneFamily::Primitives3d, &[24, 24, 24], 7));
    let mut band_nodes = 0usize;
    let mut leaks = 0usize;
    for (k, map) in scenes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut state = ExplorationState::initial(map, &random_free(map, &mut rng)).unwrap();
        for _ in 0..3 {
            let eps = state.eps();
            for (i, &b) in state.boundary().values().iter().enumerate() {
                if map.phi().at(i).abs() <= eps / 2.0 {
                    band_nodes += 1;
                    if b != 0.0 {
                        leaks += 1;
                    }
                }
            }
            state = state.observe(map, &random_free(map, &mut rng)).unwrap();
        }
    }
    ok &= leaks == 0;
    check(
        ok,
        format!(
            "{}; boundary on obstacle bands: {leaks} nonzero of {band_nodes} band nodes over {} scenes",
            notes.join(", "),
            scenes.len()
        ),
    )
}

/// Minimum of bilinearly interpolated phi along the segment, sampled every
/// `dx/8`, endpoints included.
fn reference_visibility(phi: &[f64], m: usize, x: [usize; 2]) -> Vec<f64> {
    let at = |r: usize, c: usize| phi[r * m + c];
    let interp = |p: [f64; 2]| {
        let r0 = (p[0].floor() as usize).min(m - 2);
        let c0 = (p[1].floor() as usize).min(m - 2);
        let (fr, fc) = (p[0] - r0 as f64, p[1] - c0 as f64);
        let top = at(r0, c0) * (1.0 - fc) + at(r0, c0 + 1) * fc;
        let bottom = at(r0 + 1, c0) * (1.0 - fc) + at(r0 + 1, c0 + 1) * fc;
        top * (1.0 - fr) + bottom * fr
    };
    (0..m * m)
        .map(|i| {
            let y = [(i / m) as f64, (i % m) as f64];
            let a = [x[0] as f64, x[1] as f64];
            let len = (y[0] - a[0]).hypot(y[1] - a[1]);
            let n = (len * 8.0).ceil().max(1.0) as usize;
            (0..=n)
                .map(|j| {
                    let t = j as f64 / n as f64;
                    interp([a[0] + t * (y[0] - a[0]), a[1] + t * (y[1] - a[1])])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn visibility_oracle() -> Outcome {
    let families = [SceneFamily::Radial, SceneFamily::Disks, SceneFamily::Blocks];
    let mut worst = 1.0f64;
    for s in 0..20u64 {
        let map = scene(families[s as usize % 3], &[64, 64], 600 + s);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x = random_free(&map, &mut rng);
        let ours = visibility_field(&map, &x).unwrap();
        let reference = reference_visibility(map.phi().values(), 64, [x.node()[0], x.node()[1]]);
        let agree = ours
            .values()
            .iter()
            .zip(&reference)
            .filter(|(&a, &b)| (a > 0.0) == (b > 0.0))
            .count();
        worst = worst.min(agree as f64 / reference.len() as f64);
    }

    let g = GridGeometry::new(&[64, 64], 1.0).unwrap();
    let empty = signed_distance(&Mask::all_free(&[64, 64]), &g).unwrap();
    let x = Vantage::new(vec![17, 40]);
    let ours = visibility_field(&empty, &x).unwrap();
    let reference = reference_visibility(empty.phi().values(), 64, [17, 40]);
    let empty_exact = ours.values().iter().zip(&reference).all(|(&a, &b)| a == b && a > 0.0);

    check(
        worst >= 0.99 && empty_exact,
        format!(
            "worst sign agreement over 20 scenes {:.4}% (need 99%); empty scene exact: {empty_exact}",
            100.0 * worst
        ),
    )
}

fn performance_scaling() -> Outcome {
    let map = scene(SceneFamily::Blocks, &[128, 128], 700);
    let state = ExplorationState::initial(&map, &deepest(&map)).unwrap();
    // The first evaluation on a map also builds its per-map ray-skipping
    // table; keep that out of the timings.
    exact_gain_field(&map, &state, GainMode::Exploration, 1).unwrap();
    let timed = |workers: usize| {
        let clock = Instant::now();
        let field = exact_gain_field(&map, &state, GainMode::Surveillance, workers).unwrap();
        (clock.elapsed().as_secs_f64(), field)
    };
    let (t1, f1) = timed(1);
    let mut ok = t1 < 60.0;
    let mut notes = vec![format!("1 worker {t1:.2} s (limit 60 s)")];
    for w in [2usize, 4] {
        let (tw, fw) = timed(w);
        let speedup = t1 / tw;
        let same = fw == f1;
        ok &= same && speedup >= 0.6 * w as f64;
        notes.push(format!(
            "{w} workers {tw:.2} s, speedup {speedup:.2} (need {:.1}), identical output {same}",
            0.6 * w as f64
        ));
    }
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    check(ok, format!("{}; {cores} core(s) available", notes.join("; ")))
}

fn digest_tree(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
                out.insert(path.strip_prefix(dir).unwrap().display().to_string(), hex);
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let runs: [(&str, Vec<&str>); 4] = [
        ("explore-random", vec!["explore", "--recipe", "blocks", "--shape", "64x64", "--seed", "7", "--estimator", "random", "--max-steps", "25"]),
        ("explore-exact", vec!["explore", "--recipe", "disks", "--shape", "64x64", "--seed", "3", "--snapshot-every", "2"]),
        ("survey-comb", vec!["survey", "--comb", "--dx", "0.2"]),
        ("dataset", vec!["dataset", "--recipe", "radial", "--recipe", "blocks", "--shape", "48x48", "--maps", "3", "--steps", "4", "--seed", "11"]),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, args) in runs {
        let mut digests = Vec::new();
        for copy in 0..2 {
            let out = work.path().join(format!("{name}-{copy}"));
            let status = Command::new(env!("CARGO_BIN_EXE_vantage"))
                .args(&args)
                .arg("--out-dir")
                .arg(&out)
                .output()
                .unwrap();
            if !status.status.success() {
                return Err(format!("{name} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            digests.push(digest_tree(&out));
        }
        let same = digests[0] == digests[1] && !digests[0].is_empty();
        ok &= same;
        notes.push(format!("{name}: {} file(s) {}", digests[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gain-oracle equivalence", gain_oracle),
        ("gain-residual identity", gain_residual_identity),
        ("convex gallery", convex_gallery),
        ("art-gallery bound", art_gallery),
        ("greedy vs random dominance", greedy_vs_random),
        ("smeared-delta calibration", delta_calibration),
        ("visibility oracle", visibility_oracle),
        ("performance scaling", performance_scaling),
        ("determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} [{secs:.0} s]"),
            Err(detail) => {
                println!("[FAIL] {name}: {detail} [{secs:.0} s]");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
