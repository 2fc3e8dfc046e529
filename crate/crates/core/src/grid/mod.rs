//! Uniform node-centered grids in two or three dimensions.
//!
//! Node `i` (a multi-index) sits at world coordinate `origin + i * spacing`.
//! Values are stored row-major: the last axis varies fastest, so for 2D images
//! axis 0 is the row (top to bottom) and axis 1 the column.

mod calculus;
mod edt;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::{self, Clearance};

pub use calculus::{heaviside, smeared_delta};
pub use edt::signed_distance;

pub(crate) use calculus::smeared_delta_unchecked;

/// Smallest admissible extent along any axis.
pub const MIN_EXTENT: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    shape: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
}

impl GridGeometry {
    /// Geometry with its origin at the world origin.
    pub fn new(shape: &[usize], spacing: f64) -> Result<Self> {
        Self::with_origin(shape, spacing, &vec![0.0; shape.len()])
    }

    pub fn with_origin(shape: &[usize], spacing: f64, origin: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&shape.len()) {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 2 or 3, got {}",
                shape.len()
            )));
        }
        if let Some(m) = shape.iter().find(|&&m| m < MIN_EXTENT) {
            return Err(Error::InvalidArgument(format!(
                "every axis needs at least {MIN_EXTENT} nodes, got {m}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive and finite, got {spacing}"
            )));
        }
        if origin.len() != shape.len() || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument(
                "origin must be finite with one entry per axis".into(),
            ));
        }
        Ok(Self {
            shape: shape.to_vec(),
            spacing,
            origin: origin.to_vec(),
        })
    }

    /// Builds a geometry from per-axis spacings, which must all agree.
    pub fn from_spacings(shape: &[usize], spacings: &[f64], origin: &[f64]) -> Result<Self> {
        let first = *spacings
            .first()
            .ok_or_else(|| Error::InvalidArgument("no spacing given".into()))?;
        if spacings.len() != shape.len() || spacings.iter().any(|&s| s != first) {
            return Err(Error::InvalidArgument(format!(
                "anisotropic spacing {spacings:?} is not supported"
            )));
        }
        Self::with_origin(shape, first, origin)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Volume (area in 2D) carried by a single node: `spacing^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Euclidean length of the box diagonal in world units.
    pub fn diameter(&self) -> f64 {
        self.spacing
            * self
                .shape
                .iter()
                .map(|&m| ((m - 1) * (m - 1)) as f64)
                .sum::<f64>()
                .sqrt()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for axis in (0..self.dim() - 1).rev() {
            strides[axis] = strides[axis + 1] * self.shape[axis + 1];
        }
        strides
    }

    pub fn flat_index(&self, node: &[usize]) -> Option<usize> {
        if node.len() != self.dim() || node.iter().zip(&self.shape).any(|(&i, &m)| i >= m) {
            return None;
        }
        Some(
            node.iter()
                .zip(self.strides())
                .map(|(&i, stride)| i * stride)
                .sum(),
        )
    }

    pub fn node_of(&self, mut flat: usize) -> Vec<usize> {
        let mut node = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            node[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        node
    }

    pub fn world_of(&self, node: &[usize]) -> Vec<f64> {
        node.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.spacing)
            .collect()
    }

    /// Converts a world point to fractional node coordinates.
    pub fn to_index_space(&self, world: &[f64]) -> Vec<f64> {
        world
            .iter()
            .zip(&self.origin)
            .map(|(&p, &o)| (p - o) / self.spacing)
            .collect()
    }

    /// Squared distance between two nodes in node units.
    pub(crate) fn node_distance_sq(&self, a: usize, b: usize) -> u64 {
        let (na, nb) = (self.node_of(a), self.node_of(b));
        na.iter()
            .zip(&nb)
            .map(|(&x, &y)| {
                let d = x.abs_diff(y) as u64;
                d * d
            })
            .sum()
    }
}

/// Real values on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.node_count() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                geometry.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn filled(geometry: GridGeometry, value: f64) -> Result<Self> {
        let n = geometry.node_count();
        Self::new(geometry, vec![value; n])
    }

    /// Field built from a function of the node's world coordinates.
    pub fn from_world_fn(geometry: GridGeometry, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..geometry.node_count())
            .map(|i| f(&geometry.world_of(&geometry.node_of(i))))
            .collect();
        Self::new(geometry, values)
    }

    /// Constructor for values that are finite by construction.
    pub(crate) fn from_parts(geometry: GridGeometry, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geometry.node_count());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes must keep every value finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn get(&self, node: &[usize]) -> Option<f64> {
        self.geometry.flat_index(node).map(|i| self.values[i])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multilinear interpolation at a world point inside the bounding box.
    pub fn sample(&self, world: &[f64]) -> Result<f64> {
        if world.len() != self.geometry.dim() || world.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample point {world:?} does not match a {}-d grid",
                self.geometry.dim()
            )));
        }
        let mut q = self.geometry.to_index_space(world);
        const SLACK: f64 = 1e-9;
        for (c, &m) in q.iter_mut().zip(self.geometry.shape()) {
            let hi = (m - 1) as f64;
            if *c < -SLACK || *c > hi + SLACK {
                return Err(Error::OutOfDomain(format!("{world:?}")));
            }
            *c = c.clamp(0.0, hi);
        }
        Ok(match self.geometry.dim() {
            2 => raycast::GridView::<2>::of(self).interpolate([q[0], q[1]]),
            _ => raycast::GridView::<3>::of(self).interpolate([q[0], q[1], q[2]]),
        })
    }

    pub(crate) fn same_geometry(&self, other: &ScalarField) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::InvalidArgument(format!(
                "geometry mismatch: {:?} vs {:?}",
                self.geometry.shape(),
                other.geometry.shape()
            )));
        }
        Ok(())
    }
}

/// Binary occupancy on a grid; `true` marks an obstacle node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    shape: Vec<usize>,
    blocked: Vec<bool>,
}

impl Mask {
    pub fn new(shape: &[usize], blocked: Vec<bool>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || blocked.len() != n {
            return Err(Error::InvalidArgument(format!(
                "mask of {} entries does not match shape {shape:?}",
                blocked.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            blocked,
        })
    }

    pub fn all_free(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            blocked: vec![false; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    pub fn blocked(&self) -> &[bool] {
        &self.blocked
    }

    pub fn blocked_mut(&mut self) -> &mut [bool] {
        &mut self.blocked
    }

    pub fn is_blocked(&self, flat: usize) -> bool {
        self.blocked[flat]
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| !b).count()
    }

    pub fn obstacle_fraction(&self) -> f64 {
        (self.len() - self.free_count()) as f64 / self.len() as f64
    }
}

/// The environment level set: `phi > 0` exactly on free space.
#[derive(Debug)]
pub struct OccupancyMap {
    phi: ScalarField,
    free_nodes: usize,
    clearance: OnceLock<Clearance>,
}

impl Clone for OccupancyMap {
    fn clone(&self) -> Self {
        Self {
            phi: self.phi.clone(),
            free_nodes: self.free_nodes,
            clearance: OnceLock::new(),
        }
    }
}

impl OccupancyMap {
    /// Wraps an existing level set; free space must be nonempty.
    pub fn from_phi(phi: ScalarField) -> Result<Self> {
        let free_nodes = phi.values().iter().filter(|&&v| v > 0.0).count();
        if free_nodes == 0 {
            return Err(Error::DegenerateMap("map has no free space".into()));
        }
        Ok(Self {
            phi,
            free_nodes,
            clearance: OnceLock::new(),
        })
    }

    pub fn from_mask(mask: &Mask, geometry: &GridGeometry) -> Result<Self> {
        signed_distance(mask, geometry)
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.phi.geometry()
    }

    pub fn is_free(&self, flat: usize) -> bool {
        self.phi.at(flat) > 0.0
    }

    /// Number of free nodes, `|Omega|` in node units.
    pub fn free_count(&self) -> usize {
        self.free_nodes
    }

    /// `|Omega|` in world volume units.
    pub fn free_volume(&self) -> f64 {
        self.free_nodes as f64 * self.geometry().cell_volume()
    }

    pub fn to_mask(&self) -> Mask {
        Mask {
            shape: self.geometry().shape().to_vec(),
            blocked: self.phi.values().iter().map(|&v| v <= 0.0).collect(),
        }
    }

    pub(crate) fn clearance(&self) -> &Clearance {
        self.clearance.get_or_init(|| Clearance::build(&self.phi))
    }
}
