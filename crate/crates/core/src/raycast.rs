//! Line-of-sight kernels over multilinearly interpolated level sets.
//!
//! A segment from `a` to `b` (node coordinates, length `L`) is sampled at
//! `n = ceil(L * density)` equal steps, endpoints included, with sample `i`
//! at `(1 - t) a + t b`, `t = i / n`. The visibility value of the segment is
//! the minimum of the interpolated level set over those samples.
//!
//! [`segment_is_clear`] answers only the sign question (`min > 0`) and skips
//! samples that provably land in cells whose corner values are all positive.
//! A skipped sample lies within the precomputed box distance of the current
//! sample's cell to the nearest cell with a nonpositive corner, so it would
//! have interpolated to a positive value. The answer is therefore identical
//! to `segment_min(..) > 0`.

use crate::grid::ScalarField;

/// Samples per node length used by the visibility reference semantics.
pub(crate) const REFERENCE_DENSITY: f64 = 2.0;

#[derive(Clone, Copy)]
pub(crate) struct GridView<'a, const D: usize> {
    values: &'a [f64],
    shape: [usize; D],
    strides: [usize; D],
}

impl<'a, const D: usize> GridView<'a, D> {
    pub(crate) fn of(field: &'a ScalarField) -> Self {
        Self::from_slice(field.values(), field.geometry().shape())
    }

    pub(crate) fn from_slice(values: &'a [f64], shape_slice: &[usize]) -> Self {
        assert_eq!(shape_slice.len(), D);
        let mut shape = [0; D];
        shape.copy_from_slice(shape_slice);
        let mut strides = [1; D];
        for axis in (0..D.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * shape[axis + 1];
        }
        Self {
            values,
            shape,
            strides,
        }
    }

    pub(crate) fn node_point(&self, mut flat: usize) -> [f64; D] {
        let mut p = [0.0; D];
        for axis in (0..D).rev() {
            p[axis] = (flat % self.shape[axis]) as f64;
            flat /= self.shape[axis];
        }
        p
    }

    /// Lower corner of the cell containing `p` and the fractional offsets.
    /// Points on the upper faces of the grid use the last cell with offset 1.
    #[inline(always)]
    fn locate(&self, p: [f64; D]) -> ([usize; D], [f64; D]) {
        let mut base = [0usize; D];
        let mut frac = [0.0; D];
        for axis in 0..D {
            let c = (p[axis].floor() as usize).min(self.shape[axis] - 2);
            base[axis] = c;
            frac[axis] = p[axis] - c as f64;
        }
        (base, frac)
    }

    /// Nested one-dimensional lerps, last axis first. Constant data is
    /// reproduced exactly and nodes return their stored value.
    #[inline(always)]
    fn blend(&self, base: [usize; D], frac: [f64; D]) -> f64 {
        let origin: usize = (0..D).map(|a| base[a] * self.strides[a]).sum();
        let mut buf = [0.0f64; 8];
        for (corner, slot) in buf.iter_mut().enumerate().take(1 << D) {
            let mut idx = origin;
            for axis in 0..D {
                if corner >> (D - 1 - axis) & 1 == 1 {
                    idx += self.strides[axis];
                }
            }
            *slot = self.values[idx];
        }
        let mut width = 1usize << D;
        for axis in (0..D).rev() {
            width /= 2;
            for k in 0..width {
                buf[k] = lerp1(buf[2 * k], buf[2 * k + 1], frac[axis]);
            }
        }
        buf[0]
    }

    #[inline(always)]
    pub(crate) fn interpolate(&self, p: [f64; D]) -> f64 {
        let (base, frac) = self.locate(p);
        self.blend(base, frac)
    }

    fn cell_index(&self, base: [usize; D]) -> usize {
        let mut idx = 0;
        for axis in 0..D {
            idx = idx * (self.shape[axis] - 1) + base[axis];
        }
        idx
    }
}

#[inline(always)]
fn lerp1(lo: f64, hi: f64, f: f64) -> f64 {
    if f == 1.0 {
        hi
    } else {
        lo + f * (hi - lo)
    }
}

#[inline(always)]
fn sample_count<const D: usize>(a: [f64; D], b: [f64; D], density: f64) -> (usize, f64) {
    let len = (0..D).map(|k| (b[k] - a[k]).powi(2)).sum::<f64>().sqrt();
    ((len * density).ceil() as usize, len)
}

#[inline(always)]
fn lerp<const D: usize>(a: [f64; D], b: [f64; D], t: f64) -> [f64; D] {
    let mut p = [0.0; D];
    for k in 0..D {
        p[k] = (1.0 - t) * a[k] + t * b[k];
    }
    p
}

/// Minimum of the interpolated field over the segment samples.
pub(crate) fn segment_min<const D: usize>(
    view: &GridView<'_, D>,
    a: [f64; D],
    b: [f64; D],
    density: f64,
) -> f64 {
    let (n, _) = sample_count(a, b, density);
    if n == 0 {
        return view.interpolate(a);
    }
    let inv = n as f64;
    (0..=n)
        .map(|i| view.interpolate(lerp(a, b, i as f64 / inv)))
        .fold(f64::INFINITY, f64::min)
}

/// Box distance (node units) from each cell to the nearest "danger" cell;
/// negative for danger cells themselves.
///
/// A cell is safe when every corner is positive and the smallest corner is at
/// least `SAFE_RATIO` times the largest, which keeps the interpolant of every
/// point in the closed cell strictly positive despite rounding.
const SAFE_RATIO: f64 = 1e-9;

#[derive(Debug)]
pub(crate) struct Clearance {
    radius: Vec<f64>,
}

impl Clearance {
    pub(crate) fn build(phi: &ScalarField) -> Self {
        let shape = phi.geometry().shape();
        let cells: Vec<usize> = shape.iter().map(|&m| m - 1).collect();
        let n_cells: usize = cells.iter().product();
        let values = phi.values();
        let strides = phi.geometry().strides();

        let mut dist: Vec<u64> = vec![0; n_cells];
        let mut cell = vec![0usize; shape.len()];
        for (ci, slot) in dist.iter_mut().enumerate() {
            let mut rem = ci;
            for axis in (0..cells.len()).rev() {
                cell[axis] = rem % cells[axis];
                rem /= cells[axis];
            }
            let origin: usize = cell.iter().zip(&strides).map(|(c, s)| c * s).sum();
            *slot = if corners_unsafe(origin, &strides, values) {
                0
            } else {
                u64::MAX / 4
            };
        }

        // Separable min-plus convolution with the per-axis cost
        // max(0, |t| - 1)^2, the squared gap between two unit boxes.
        let longest = cells.iter().copied().max().unwrap_or(0);
        let mut line = vec![0u64; longest];
        for axis in 0..cells.len() {
            let len = cells[axis];
            let stride: usize = cells[axis + 1..].iter().product();
            for start in (0..n_cells).filter(|i| (i / stride) % len == 0) {
                for (k, slot) in line[..len].iter_mut().enumerate() {
                    *slot = dist[start + k * stride];
                }
                for q in 0..len {
                    let best = line[..len]
                        .iter()
                        .enumerate()
                        .map(|(p, &f)| {
                            let gap = q.abs_diff(p).saturating_sub(1) as u64;
                            f.saturating_add(gap * gap)
                        })
                        .min()
                        .unwrap_or(u64::MAX / 4);
                    dist[start + q * stride] = best;
                }
            }
        }

        let radius = dist
            .into_iter()
            .enumerate()
            .map(|(ci, d)| {
                if d >= u64::MAX / 4 {
                    f64::INFINITY
                } else if d == 0 && Self::is_danger_cell(ci, &cells, &strides, values) {
                    -1.0
                } else {
                    (d as f64).sqrt()
                }
            })
            .collect();
        Self { radius }
    }

    fn is_danger_cell(ci: usize, cells: &[usize], strides: &[usize], values: &[f64]) -> bool {
        let d = cells.len();
        let mut rem = ci;
        let mut origin = 0;
        for axis in (0..d).rev() {
            origin += (rem % cells[axis]) * strides[axis];
            rem /= cells[axis];
        }
        corners_unsafe(origin, strides, values)
    }
}

fn corners_unsafe(origin: usize, strides: &[usize], values: &[f64]) -> bool {
    let d = strides.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for corner in 0..(1usize << d) {
        let idx: usize = origin
            + (0..d)
                .filter(|&axis| corner >> axis & 1 == 1)
                .map(|axis| strides[axis])
                .sum::<usize>();
        lo = lo.min(values[idx]);
        hi = hi.max(values[idx]);
    }
    lo <= 0.0 || lo < SAFE_RATIO * hi
}

/// `segment_min(view, a, b, REFERENCE_DENSITY) > 0`, computed with skipping.
pub(crate) fn segment_is_clear<const D: usize>(
    view: &GridView<'_, D>,
    clearance: &Clearance,
    a: [f64; D],
    b: [f64; D],
) -> bool {
    let (n, len) = sample_count(a, b, REFERENCE_DENSITY);
    if n == 0 {
        return view.interpolate(a) > 0.0;
    }
    let inv = n as f64;
    let step = len / inv;
    let mut i = 0usize;
    while i <= n {
        let (base, frac) = view.locate(lerp(a, b, i as f64 / inv));
        let r = clearance.radius[view.cell_index(base)];
        if r < 0.0 {
            if view.blend(base, frac) <= 0.0 {
                return false;
            }
            i += 1;
        } else {
            // Samples strictly closer than `reach` to this one are safe.
            let reach = r * (1.0 - 1e-9) - 1e-9;
            let skip = if reach > step {
                ((reach / step).ceil() as usize).saturating_sub(1)
            } else {
                0
            };
            i = i.saturating_add(skip + 1);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{signed_distance, GridGeometry, Mask};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let g = GridGeometry::new(&[5, 6], 1.0).unwrap();
        let f = ScalarField::from_world_fn(g, |p| (p[0] * 7.0 + p[1]).sin()).unwrap();
        let view = GridView::<2>::of(&f);
        for flat in 0..30 {
            assert_eq!(view.interpolate(view.node_point(flat)), f.at(flat));
        }
    }

    #[test]
    fn constant_fields_interpolate_exactly() {
        let g = GridGeometry::new(&[7, 5, 6], 0.3).unwrap();
        let f = ScalarField::filled(g, 0.1 + 0.2).unwrap();
        let view = GridView::<3>::of(&f);
        for p in [[0.5, 1.25, 3.3], [6.0, 4.0, 5.0], [0.999, 0.001, 2.5]] {
            assert_eq!(view.interpolate(p), 0.1 + 0.2);
        }
    }

    #[test]
    fn clear_test_agrees_with_full_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..12 {
            let shape = if trial % 3 == 2 {
                vec![10, 12, 9]
            } else {
                vec![40, 33]
            };
            let g = GridGeometry::new(&shape, 1.0).unwrap();
            let n: usize = shape.iter().product();
            let blocked: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.08)).collect();
            let map = signed_distance(&Mask::new(&shape, blocked).unwrap(), &g).unwrap();
            let clearance = Clearance::build(map.phi());
            for _ in 0..2000 {
                let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let agree = if shape.len() == 2 {
                    let v = GridView::<2>::of(map.phi());
                    let (a, b) = (v.node_point(i), v.node_point(j));
                    (segment_min(&v, a, b, REFERENCE_DENSITY) > 0.0)
                        == segment_is_clear(&v, &clearance, a, b)
                } else {
                    let v = GridView::<3>::of(map.phi());
                    let (a, b) = (v.node_point(i), v.node_point(j));
                    (segment_min(&v, a, b, REFERENCE_DENSITY) > 0.0)
                        == segment_is_clear(&v, &clearance, a, b)
                };
                assert!(agree, "trial {trial}: nodes {i} -> {j}");
            }
        }
    }

    #[test]
    fn clearance_matches_brute_force_box_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = [14usize, 11];
        let g = GridGeometry::new(&shape, 1.0).unwrap();
        let blocked: Vec<bool> = (0..154).map(|_| rng.gen_bool(0.05)).collect();
        let map = signed_distance(&Mask::new(&shape, blocked).unwrap(), &g).unwrap();
        let clearance = Clearance::build(map.phi());
        let v = map.phi().values();
        let danger = |r: usize, c: usize| {
            [(0, 0), (0, 1), (1, 0), (1, 1)]
                .iter()
                .any(|(dr, dc)| v[(r + dr) * 11 + c + dc] <= 0.0)
        };
        for r in 0..13 {
            for c in 0..10 {
                let got = clearance.radius[r * 10 + c];
                if danger(r, c) {
                    assert_eq!(got, -1.0);
                    continue;
                }
                let mut best = f64::INFINITY;
                for r2 in 0..13 {
                    for c2 in 0..10 {
                        if danger(r2, c2) {
                            let gr = (r.abs_diff(r2).saturating_sub(1)) as f64;
                            let gc = (c.abs_diff(c2).saturating_sub(1)) as f64;
                            best = best.min((gr * gr + gc * gc).sqrt());
                        }
                    }
                }
                assert_eq!(got, best, "cell {r},{c}");
            }
        }
    }
}
