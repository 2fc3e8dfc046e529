#![allow(dead_code)]

use vantage_core::grid::signed_distance;
use vantage_core::scenes::{generate_scene, SceneFamily, SceneRecipe};
use vantage_core::{GridGeometry, Mask, OccupancyMap, Vantage};

/// Two disks of radius `m/8` on an `m x m` grid, offset so each hides part
/// of the room from the other side.
pub fn two_disks(m: usize) -> OccupancyMap {
    let g = GridGeometry::new(&[m, m], 1.0).unwrap();
    let s = m as f64 / 64.0;
    let disks = [(24.0 * s, 26.0 * s, 8.0 * s), (40.0 * s, 38.0 * s, 8.0 * s)];
    let blocked = (0..m * m)
        .map(|i| {
            let (r, c) = ((i / m) as f64, (i % m) as f64);
            disks
                .iter()
                .any(|&(cr, cc, rad)| (r - cr).powi(2) + (c - cc).powi(2) <= rad * rad)
        })
        .collect();
    signed_distance(&Mask::new(&[m, m], blocked).unwrap(), &g).unwrap()
}

pub fn random_map(family: SceneFamily, shape: &[usize], seed: u64) -> OccupancyMap {
    let recipe = SceneRecipe::new(family, shape, seed);
    let mask = generate_scene(&recipe).unwrap();
    OccupancyMap::from_mask(&mask, &recipe.geometry().unwrap()).unwrap()
}

/// First free node in row-major order at least `depth` spacings from any
/// obstacle.
pub fn deep_free_node(map: &OccupancyMap, depth: f64) -> Vantage {
    let g = map.geometry();
    let flat = (0..g.node_count())
        .find(|&i| map.phi().at(i) >= depth * g.spacing())
        .expect("map has a deep free node");
    Vantage::from_flat(g, flat)
}
