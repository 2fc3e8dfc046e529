//! Exact Euclidean distance transform and signed-distance embedding.
//!
//! Squared distances are computed with the separable lower-envelope-of-
//! parabolas method, one axis at a time. All intermediate values are integers
//! held in `f64`, so the transform is exact for any grid that fits in memory.

use super::{GridGeometry, Mask, OccupancyMap, ScalarField};
use crate::error::{Error, Result};

/// Free-space level set of an empty scene, as a multiple of the domain diameter.
pub const EMPTY_SCENE_SCALE: f64 = 10.0;

/// Embeds a binary mask as a signed distance level set.
///
/// Free nodes get `+d` where `d` is the distance to the nearest obstacle node,
/// obstacle nodes get `-d` with `d` the distance to the nearest free node. A
/// mask without obstacles is the empty scene and gets a constant
/// `10 * diameter`; a mask without free nodes is rejected.
pub fn signed_distance(mask: &Mask, geometry: &GridGeometry) -> Result<OccupancyMap> {
    if mask.shape() != geometry.shape() {
        return Err(Error::InvalidArgument(format!(
            "mask shape {:?} does not match grid shape {:?}",
            mask.shape(),
            geometry.shape()
        )));
    }
    let free = mask.free_count();
    if free == 0 {
        return Err(Error::DegenerateMap("every node is an obstacle".into()));
    }
    if free == mask.len() {
        let phi = ScalarField::filled(
            geometry.clone(),
            EMPTY_SCENE_SCALE * geometry.diameter(),
        )?;
        return OccupancyMap::from_phi(phi);
    }

    let to_obstacle = squared_edt(geometry.shape(), |i| mask.is_blocked(i));
    let to_free = squared_edt(geometry.shape(), |i| !mask.is_blocked(i));
    let dx = geometry.spacing();
    let values = (0..mask.len())
        .map(|i| {
            if mask.is_blocked(i) {
                -to_free[i].sqrt() * dx
            } else {
                to_obstacle[i].sqrt() * dx
            }
        })
        .collect();
    OccupancyMap::from_phi(ScalarField::from_parts(geometry.clone(), values))
}

/// Squared distance (node units) from every node to the nearest feature node.
/// Non-feature nodes with no feature anywhere stay at infinity.
pub(crate) fn squared_edt(shape: &[usize], is_feature: impl Fn(usize) -> bool) -> Vec<f64> {
    let n: usize = shape.iter().product();
    let mut dist: Vec<f64> = (0..n)
        .map(|i| if is_feature(i) { 0.0 } else { f64::INFINITY })
        .collect();

    let longest = shape.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut sites = vec![0usize; longest];
    let mut bounds = vec![0.0; longest + 1];

    for axis in 0..shape.len() {
        let len = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        for start in (0..n).filter(|i| (i / stride) % len == 0) {
            for (k, slot) in line[..len].iter_mut().enumerate() {
                *slot = dist[start + k * stride];
            }
            lower_envelope(&line[..len], &mut out[..len], &mut sites, &mut bounds);
            for (k, &v) in out[..len].iter().enumerate() {
                dist[start + k * stride] = v;
            }
        }
    }
    dist
}

/// One-dimensional squared distance transform of a sampled function `f`:
/// `out[q] = min_p (q - p)^2 + f[p]`. Infinite samples are not sites.
fn lower_envelope(f: &[f64], out: &mut [f64], sites: &mut [usize], bounds: &mut [f64]) {
    let mut k: isize = -1;
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            if k < 0 {
                k = 0;
                sites[0] = q;
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                break;
            }
            let p = sites[k as usize];
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= bounds[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            sites[k as usize] = q;
            bounds[k as usize] = s;
            bounds[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while bounds[j + 1] < qf {
            j += 1;
        }
        let p = sites[j] as f64;
        *slot = (qf - p) * (qf - p) + f[sites[j]];
    }
}
