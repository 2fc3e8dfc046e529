//! Seeded random scene families.

use std::collections::VecDeque;

use nalgebra::{Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Mask};

/// Attempts before a recipe is declared unsatisfiable.
pub const MAX_ATTEMPTS: usize = 100;

/// Smallest share of nodes the free region must keep.
pub const MIN_FREE_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneFamily {
    /// Star-shaped obstacles with a random harmonic radius profile.
    Radial,
    /// Non-overlapping disks.
    Disks,
    /// A city-like grid of rectangular blocks separated by streets, with
    /// some lots left empty.
    Blocks,
    /// Randomly posed tetrahedra, cylinders, ellipsoids and cuboids.
    Primitives3d,
}

impl std::str::FromStr for SceneFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(Self::Radial),
            "disks" => Ok(Self::Disks),
            "blocks" => Ok(Self::Blocks),
            "primitives3d" => Ok(Self::Primitives3d),
            _ => Err(Error::InvalidArgument(format!("unknown scene family {s:?}"))),
        }
    }
}

/// Parameters of a random scene. Sizes are in node units. The meaning of
/// `count` depends on the family: obstacles for radial, disks and
/// primitives3d, empty lots for blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecipe {
    pub family: SceneFamily,
    pub seed: u64,
    pub shape: Vec<usize>,
    pub dx: f64,
    pub count: [usize; 2],
    pub size: [f64; 2],
    pub obstacle_fraction: [f64; 2],
}

impl SceneRecipe {
    /// Family defaults scaled to the grid extent.
    pub fn new(family: SceneFamily, shape: &[usize], seed: u64) -> Self {
        let extent = shape.iter().copied().min().unwrap_or(0) as f64;
        let (count, size) = match family {
            SceneFamily::Radial => ([1, 3], [0.08 * extent, 0.2 * extent]),
            SceneFamily::Disks => ([2, 8], [0.05 * extent, 0.12 * extent]),
            SceneFamily::Blocks => ([1, 4], [0.12 * extent, 0.25 * extent]),
            SceneFamily::Primitives3d => ([3, 6], [0.08 * extent, 0.18 * extent]),
        };
        Self {
            family,
            seed,
            shape: shape.to_vec(),
            dx: 1.0,
            count,
            size,
            obstacle_fraction: [0.0, 0.9],
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(&self.shape, self.dx)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let dim = match self.family {
            SceneFamily::Primitives3d => 3,
            _ => 2,
        };
        if self.shape.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{:?} scenes are {dim}D, got shape {:?}",
                self.family, self.shape
            )));
        }
        if self.count[0] > self.count[1] {
            return Err(Error::InvalidArgument(format!("empty count range {:?}", self.count)));
        }
        if !(self.size[0] > 0.0 && self.size[0] <= self.size[1] && self.size[1].is_finite()) {
            return Err(Error::InvalidArgument(format!("bad size range {:?}", self.size)));
        }
        let [lo, hi] = self.obstacle_fraction;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "bad obstacle fraction range {:?}",
                self.obstacle_fraction
            )));
        }
        Ok(())
    }
}

/// Draws a mask from the recipe. Free pockets cut off from the largest free
/// component are filled in, so the free region is always connected; a draw
/// is rejected when less than a tenth of the nodes stay free or the
/// obstacle fraction leaves the configured range.
pub fn generate_scene(recipe: &SceneRecipe) -> Result<Mask> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let [lo, hi] = recipe.obstacle_fraction;
    for _ in 0..MAX_ATTEMPTS {
        let mut mask = match recipe.family {
            SceneFamily::Radial => radial(recipe, &mut rng),
            SceneFamily::Disks => disks(recipe, &mut rng),
            SceneFamily::Blocks => blocks(recipe, &mut rng),
            SceneFamily::Primitives3d => primitives(recipe, &mut rng),
        };
        keep_largest_free_component(&mut mask);
        let fraction = mask.obstacle_fraction();
        if mask.free_count() as f64 >= MIN_FREE_FRACTION * mask.len() as f64
            && (lo..=hi).contains(&fraction)
        {
            return Ok(mask);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no {:?} scene with obstacle fraction in [{lo}, {hi}] and a connected free region after {MAX_ATTEMPTS} attempts",
        recipe.family
    )))
}

fn draw_count(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(recipe.count[0]..=recipe.count[1])
}

fn draw_size(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> f64 {
    if recipe.size[0] == recipe.size[1] {
        recipe.size[0]
    } else {
        rng.gen_range(recipe.size[0]..recipe.size[1])
    }
}

fn paint_2d(mask: &mut Mask, inside: impl Fn(f64, f64) -> bool) {
    let cols = mask.shape()[1];
    for (i, b) in mask.blocked_mut().iter_mut().enumerate() {
        if inside((i / cols) as f64, (i % cols) as f64) {
            *b = true;
        }
    }
}

fn radial(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> Mask {
    let (rows, cols) = (recipe.shape[0] as f64, recipe.shape[1] as f64);
    let mut mask = Mask::all_free(&recipe.shape);
    for _ in 0..draw_count(recipe, rng) {
        let r0 = draw_size(recipe, rng);
        let c = [rng.gen_range(0.0..rows), rng.gen_range(0.0..cols)];
        let harmonics: Vec<(f64, f64)> = (1..=5)
            .map(|k| (rng.gen_range(0.0..0.5) / k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        paint_2d(&mut mask, |r, q| {
            let (dr, dq) = (r - c[0], q - c[1]);
            let theta = dq.atan2(dr);
            let profile: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, &(a, phase))| a * ((k + 1) as f64 * theta + phase).cos())
                .sum();
            dr.hypot(dq) <= r0 * (1.0 + profile).max(0.2)
        });
    }
    mask
}

fn disks(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> Mask {
    let (rows, cols) = (recipe.shape[0] as f64, recipe.shape[1] as f64);
    let want = draw_count(recipe, rng);
    let mut placed: Vec<([f64; 2], f64)> = Vec::with_capacity(want);
    // Rejection sampling keeps a gap of two nodes between disks.
    for _ in 0..want * 50 {
        if placed.len() == want {
            break;
        }
        let r = draw_size(recipe, rng);
        let c = [rng.gen_range(0.0..rows), rng.gen_range(0.0..cols)];
        if placed
            .iter()
            .all(|(p, s)| (p[0] - c[0]).hypot(p[1] - c[1]) > r + s + 2.0)
        {
            placed.push((c, r));
        }
    }
    let mut mask = Mask::all_free(&recipe.shape);
    paint_2d(&mut mask, |r, q| {
        placed
            .iter()
            .any(|(c, s)| (r - c[0]).hypot(q - c[1]) <= *s)
    });
    mask
}

/// Alternating street and block intervals along one axis.
fn block_intervals(len: usize, recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut at = rng.gen_range(1..=6);
    while at < len {
        let block = draw_size(recipe, rng).round().max(1.0) as usize;
        let end = (at + block).min(len);
        out.push((at, end));
        at = end + rng.gen_range(3..=6);
    }
    out
}

fn blocks(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> Mask {
    let row_spans = block_intervals(recipe.shape[0], recipe, rng);
    let col_spans = block_intervals(recipe.shape[1], recipe, rng);
    let mut lots: Vec<((usize, usize), (usize, usize))> = row_spans
        .iter()
        .flat_map(|&r| col_spans.iter().map(move |&c| (r, c)))
        .collect();
    lots.shuffle(rng);
    let empty = draw_count(recipe, rng).min(lots.len());
    let cols = recipe.shape[1];
    let mut mask = Mask::all_free(&recipe.shape);
    let blocked = mask.blocked_mut();
    for &((r0, r1), (c0, c1)) in &lots[empty..] {
        for r in r0..r1 {
            blocked[r * cols + c0..r * cols + c1].fill(true);
        }
    }
    mask
}

#[derive(Clone, Copy)]
enum Primitive {
    Tetrahedron,
    Cylinder,
    Ellipsoid,
    Cuboid,
}

impl Primitive {
    /// Membership in the local frame, for a body of unit scale.
    fn contains(self, p: Vector3<f64>, axes: Vector3<f64>) -> bool {
        let q = p.component_div(&axes);
        match self {
            // Regular tetrahedron inscribed in the cube [-1, 1]^3.
            Self::Tetrahedron => {
                q.x + q.y + q.z <= 1.0
                    && q.x - q.y - q.z <= 1.0
                    && -q.x + q.y - q.z <= 1.0
                    && -q.x - q.y + q.z <= 1.0
            }
            Self::Cylinder => q.x * q.x + q.y * q.y <= 1.0 && q.z.abs() <= 1.0,
            Self::Ellipsoid => q.norm_squared() <= 1.0,
            Self::Cuboid => q.amax() <= 1.0,
        }
    }
}

fn primitives(recipe: &SceneRecipe, rng: &mut ChaCha8Rng) -> Mask {
    let shape = &recipe.shape;
    let mut mask = Mask::all_free(shape);
    let kinds = [
        Primitive::Tetrahedron,
        Primitive::Cylinder,
        Primitive::Ellipsoid,
        Primitive::Cuboid,
    ];
    for _ in 0..draw_count(recipe, rng) {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let axes = Vector3::new(
            draw_size(recipe, rng),
            draw_size(recipe, rng),
            draw_size(recipe, rng),
        );
        let rotation = Rotation3::from_euler_angles(
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..std::f64::consts::PI),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let center = Vector3::new(
            rng.gen_range(0.0..shape[0] as f64),
            rng.gen_range(0.0..shape[1] as f64),
            rng.gen_range(0.0..shape[2] as f64),
        );
        // Every body fits in the ball bounding its scaled unit cube.
        let reach = axes.norm();
        let span = |a: usize| {
            let lo = (center[a] - reach).floor().max(0.0) as usize;
            let hi = ((center[a] + reach).ceil() as usize).min(shape[a] - 1);
            lo..=hi
        };
        let inverse = rotation.inverse();
        let blocked = mask.blocked_mut();
        for i in span(0) {
            for j in span(1) {
                for k in span(2) {
                    let local = inverse * (Vector3::new(i as f64, j as f64, k as f64) - center);
                    if kind.contains(local, axes) {
                        blocked[(i * shape[1] + j) * shape[2] + k] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Labels free components under axis-neighbor connectivity and blocks every
/// free node outside the largest one.
pub fn keep_largest_free_component(mask: &mut Mask) {
    let label = free_components(mask);
    let mut sizes = vec![0usize; label.iter().flatten().max().map_or(0, |m| m + 1)];
    for l in label.iter().flatten() {
        sizes[*l] += 1;
    }
    let Some(largest) = (0..sizes.len()).max_by_key(|&l| (sizes[l], std::cmp::Reverse(l))) else {
        return;
    };
    for (b, l) in mask.blocked_mut().iter_mut().zip(&label) {
        if l.is_some_and(|l| l != largest) {
            *b = true;
        }
    }
}

/// Component label of every free node, `None` on obstacles.
pub fn free_components(mask: &Mask) -> Vec<Option<usize>> {
    let shape = mask.shape();
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    let mut label = vec![None; mask.len()];
    let mut queue = VecDeque::new();
    let mut next = 0;
    for seed in 0..mask.len() {
        if mask.is_blocked(seed) || label[seed].is_some() {
            continue;
        }
        label[seed] = Some(next);
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            for (a, &s) in strides.iter().enumerate() {
                let coord = (i / s) % shape[a];
                let mut visit = |j: usize| {
                    if !mask.is_blocked(j) && label[j].is_none() {
                        label[j] = Some(next);
                        queue.push_back(j);
                    }
                };
                if coord > 0 {
                    visit(i - s);
                }
                if coord + 1 < shape[a] {
                    visit(i + s);
                }
            }
        }
        next += 1;
    }
    label
}
