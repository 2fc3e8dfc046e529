//! Polygon galleries: validation, rasterization and guard-count bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Mask};

pub type Point = [f64; 2];

/// A simple polygon with optional holes, in world coordinates. Point
/// components follow the grid axes: `p[0]` along axis 0, `p[1]` along axis 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonGallery {
    pub outer: Vec<Point>,
    #[serde(default)]
    pub holes: Vec<Vec<Point>>,
}

/// Combinatorial guard counts of a gallery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalleryBounds {
    /// Total vertex count over the outer loop and all holes.
    pub n: usize,
    /// Number of holes.
    pub h: usize,
    /// Reflex vertices (interior angle above pi).
    pub r: usize,
    /// `floor((n + h) / 3)` point guards always suffice.
    pub chvatal: usize,
    /// Views needed by a frontier sweep, `r + 1`.
    pub frontier: usize,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection, touching included.
fn segments_meet(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Even-odd crossing test against one ring.
fn crossings(p: Point, ring: &[Point]) -> bool {
    let mut inside = false;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + n - 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl PolygonGallery {
    pub fn new(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let poly = Self { outer, holes };
        poly.validate()?;
        Ok(poly)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let poly: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPolygon(format!("malformed polygon JSON: {e}")))?;
        poly.validate()?;
        Ok(poly)
    }

    fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Checks loop sizes, simplicity of every loop, disjointness of all
    /// edges, and that holes sit strictly inside the outer loop and outside
    /// each other.
    pub fn validate(&self) -> Result<()> {
        for (k, ring) in self.rings().enumerate() {
            if ring.len() < 3 {
                return Err(Error::InvalidPolygon(format!(
                    "loop {k} has {} vertices, need at least 3",
                    ring.len()
                )));
            }
            if ring.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPolygon(format!("loop {k} has a non-finite vertex")));
            }
            if signed_area(ring) == 0.0 {
                return Err(Error::InvalidPolygon(format!("loop {k} has zero area")));
            }
        }

        let edges: Vec<(usize, usize, Point, Point)> = self
            .rings()
            .enumerate()
            .flat_map(|(k, ring)| {
                let n = ring.len();
                (0..n).map(move |i| (k, i, ring[i], ring[(i + 1) % n]))
            })
            .collect();
        for (x, &(k1, i1, a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(Error::InvalidPolygon(format!(
                    "loop {k1} repeats vertex {i1}"
                )));
            }
            for &(k2, i2, c, d) in &edges[x + 1..] {
                let n = self.ring_len(k1);
                let adjacent = k1 == k2 && (i2 == (i1 + 1) % n || i1 == (i2 + 1) % n);
                let hit = if adjacent {
                    // Consecutive edges share one vertex; they may only
                    // overlap if the polygon doubles back on itself.
                    let (shared, p, q) = if b == c { (b, a, d) } else { (a, b, c) };
                    cross(shared, p, q) == 0.0
                        && (p[0] - shared[0]) * (q[0] - shared[0])
                            + (p[1] - shared[1]) * (q[1] - shared[1])
                            > 0.0
                } else {
                    segments_meet(a, b, c, d)
                };
                if hit {
                    return Err(Error::InvalidPolygon(format!(
                        "edge {i1} of loop {k1} meets edge {i2} of loop {k2}"
                    )));
                }
            }
        }

        for (k, hole) in self.holes.iter().enumerate() {
            if !crossings(hole[0], &self.outer) {
                return Err(Error::InvalidPolygon(format!("hole {k} lies outside the outer loop")));
            }
            for (j, other) in self.holes.iter().enumerate() {
                if j != k && crossings(hole[0], other) {
                    return Err(Error::InvalidPolygon(format!("hole {k} lies inside hole {j}")));
                }
            }
        }
        Ok(())
    }

    fn ring_len(&self, k: usize) -> usize {
        if k == 0 {
            self.outer.len()
        } else {
            self.holes[k - 1].len()
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(<[Point]>::len).sum()
    }

    /// Area enclosed by the outer loop minus the holes.
    pub fn area(&self) -> f64 {
        signed_area(&self.outer).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    /// Even-odd membership over all loops.
    pub fn contains(&self, p: Point) -> bool {
        self.rings().fold(false, |inside, ring| inside ^ crossings(p, ring))
    }

    /// Axis-aligned bounding box of the outer loop.
    pub fn bounds(&self) -> (Point, Point) {
        self.outer.iter().fold(
            ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
            |(lo, hi), p| {
                (
                    [lo[0].min(p[0]), lo[1].min(p[1])],
                    [hi[0].max(p[0]), hi[1].max(p[1])],
                )
            },
        )
    }

    /// Reflex vertex count. Loops are oriented so the interior lies to the
    /// left (outer counter-clockwise, holes clockwise); a right turn is then
    /// a reflex vertex.
    pub fn reflex_count(&self) -> usize {
        self.rings()
            .enumerate()
            .map(|(k, ring)| {
                let ccw = signed_area(ring) > 0.0;
                let want_ccw = k == 0;
                let n = ring.len();
                (0..n)
                    .filter(|&i| {
                        let turn = cross(ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
                        if ccw == want_ccw {
                            turn < 0.0
                        } else {
                            turn > 0.0
                        }
                    })
                    .count()
            })
            .sum()
    }
}

pub fn gallery_bounds(poly: &PolygonGallery) -> Result<GalleryBounds> {
    poly.validate()?;
    let n = poly.vertex_count();
    let h = poly.holes.len();
    let r = poly.reflex_count();
    Ok(GalleryBounds {
        n,
        h,
        r,
        chvatal: (n + h) / 3,
        frontier: r + 1,
    })
}

/// A node is free iff its world position lies inside the gallery. The
/// polygon must keep a margin of two spacings from the grid box.
pub fn rasterize_gallery(poly: &PolygonGallery, geometry: &GridGeometry) -> Result<Mask> {
    poly.validate()?;
    if geometry.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "galleries rasterize onto 2D grids, got {}D",
            geometry.dim()
        )));
    }
    let (lo, hi) = poly.bounds();
    let margin = 2.0 * geometry.spacing();
    for axis in 0..2 {
        let start = geometry.origin()[axis];
        let end = start + (geometry.shape()[axis] - 1) as f64 * geometry.spacing();
        if lo[axis] < start + margin || hi[axis] > end - margin {
            return Err(Error::InvalidPolygon(format!(
                "polygon spans [{}, {}] on axis {axis}, grid box with margin is [{}, {}]",
                lo[axis],
                hi[axis],
                start + margin,
                end - margin
            )));
        }
    }
    let blocked: Vec<bool> = (0..geometry.node_count())
        .map(|i| {
            let w = geometry.world_of(&geometry.node_of(i));
            !poly.contains([w[0], w[1]])
        })
        .collect();
    if blocked.iter().all(|&b| b) {
        return Err(Error::InvalidPolygon("no grid node falls inside the polygon".into()));
    }
    Mask::new(geometry.shape(), blocked)
}

/// Smallest grid with spacing `dx` that holds `poly` with a margin of
/// `margin` spacings on every side.
pub fn fitting_geometry(poly: &PolygonGallery, dx: f64, margin: usize) -> Result<GridGeometry> {
    let (lo, hi) = poly.bounds();
    let pad = margin as f64 * dx;
    let shape: Vec<usize> = (0..2)
        .map(|a| ((hi[a] - lo[a] + 2.0 * pad) / dx).ceil() as usize + 1)
        .collect();
    GridGeometry::with_origin(&shape, dx, &[lo[0] - pad, lo[1] - pad])
}

/// A comb: a rectangular body with 20 teeth along one side, separated by 19
/// V-shaped valleys. Seventeen teeth are flat-topped and three are pointed,
/// giving 58 vertices of which the 19 valley bottoms are reflex.
pub fn comb_gallery() -> PolygonGallery {
    const TEETH: usize = 20;
    const POINTED: [usize; 3] = [4, 10, 15];
    const BODY: f64 = 2.0;
    const TIP: f64 = 4.0;
    // Walk along the base, then back across the tips; reversed at the end
    // to make the loop counter-clockwise.
    let mut outer = vec![[0.0, 0.0], [0.0, TEETH as f64]];
    for t in (0..TEETH).rev() {
        let left = t as f64;
        if POINTED.contains(&t) {
            outer.push([TIP, left + 0.5]);
        } else {
            outer.push([TIP, left + 0.7]);
            outer.push([TIP, left + 0.3]);
        }
        if t > 0 {
            outer.push([BODY, left]);
        }
    }
    outer.reverse();
    PolygonGallery {
        outer,
        holes: Vec::new(),
    }
}
