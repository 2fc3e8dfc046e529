//! Visibility level sets, cumulative visibility and shadow boundaries.
//!
//! For a vantage `x`, `psi_x(y)` is the minimum of the interpolated map level
//! set over the samples of the segment `[x, y]` taken every half node or
//! closer, endpoints included. `y` is visible exactly when `psi_x(y) > 0`.
//! Sensors have unlimited range.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{smeared_delta_unchecked, GridGeometry, OccupancyMap, ScalarField};
use crate::raycast::{segment_min, GridView, REFERENCE_DENSITY};

/// Default smeared-delta width in units of grid spacing.
pub const EPS_SPACINGS: f64 = 3.0;

/// A sensing location on a grid node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vantage {
    node: Vec<usize>,
}

impl Vantage {
    pub fn new(node: Vec<usize>) -> Self {
        Self { node }
    }

    pub fn from_flat(geometry: &GridGeometry, flat: usize) -> Self {
        Self {
            node: geometry.node_of(flat),
        }
    }

    pub fn node(&self) -> &[usize] {
        &self.node
    }

    pub fn flat(&self, geometry: &GridGeometry) -> Result<usize> {
        geometry.flat_index(&self.node).ok_or_else(|| {
            Error::InvalidVantage(format!(
                "node {:?} lies outside grid {:?}",
                self.node,
                geometry.shape()
            ))
        })
    }

    pub fn world(&self, geometry: &GridGeometry) -> Vec<f64> {
        geometry.world_of(&self.node)
    }
}

/// Flat index of a vantage that must lie in free space.
pub(crate) fn free_vantage(map: &OccupancyMap, x: &Vantage) -> Result<usize> {
    let flat = x.flat(map.geometry())?;
    if !map.is_free(flat) {
        return Err(Error::InvalidVantage(format!(
            "vantage {:?} is inside an obstacle (phi = {})",
            x.node(),
            map.phi().at(flat)
        )));
    }
    Ok(flat)
}

/// Visibility level set `psi_x` of a free vantage.
pub fn visibility_field(map: &OccupancyMap, x: &Vantage) -> Result<ScalarField> {
    let origin = free_vantage(map, x)?;
    let values = visibility_values(map.phi(), origin, REFERENCE_DENSITY);
    Ok(ScalarField::from_parts(map.geometry().clone(), values))
}

/// Segment-minimum visibility from node `origin` at a given sampling density.
pub(crate) fn visibility_values(phi: &ScalarField, origin: usize, density: f64) -> Vec<f64> {
    let n = phi.geometry().node_count();
    match phi.geometry().dim() {
        2 => {
            let view = GridView::<2>::of(phi);
            let a = view.node_point(origin);
            (0..n)
                .into_par_iter()
                .map(|y| segment_min(&view, a, view.node_point(y), density))
                .collect()
        }
        _ => {
            let view = GridView::<3>::of(phi);
            let a = view.node_point(origin);
            (0..n)
                .into_par_iter()
                .map(|y| segment_min(&view, a, view.node_point(y), density))
                .collect()
        }
    }
}

/// Shadow-boundary field `b = delta(Psi) * (1 - H(delta(phi)))`.
///
/// The obstacle band is taken as the closed set `|phi| <= eps/2`, so `b`
/// vanishes there including the band edge.
pub fn shadow_boundary(psi_cum: &ScalarField, map: &OccupancyMap, eps: f64) -> Result<ScalarField> {
    psi_cum.same_geometry(map.phi())?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "boundary width must be positive, got {eps}"
        )));
    }
    let values = psi_cum
        .values()
        .iter()
        .zip(map.phi().values())
        .map(|(&psi, &phi)| {
            if phi.abs() <= 0.5 * eps {
                0.0
            } else {
                smeared_delta_unchecked(psi, eps)
            }
        })
        .collect();
    Ok(ScalarField::from_parts(psi_cum.geometry().clone(), values))
}

/// Free nodes not yet seen: `phi > 0` and `Psi <= 0`.
pub fn unseen_count(psi_cum: &ScalarField, map: &OccupancyMap) -> Result<usize> {
    psi_cum.same_geometry(map.phi())?;
    Ok(psi_cum
        .values()
        .iter()
        .zip(map.phi().values())
        .filter(|(&psi, &phi)| phi > 0.0 && psi <= 0.0)
        .count())
}

/// Fraction of free space not yet seen, `|Omega \ Omega_k| / |Omega|`.
pub fn residual(psi_cum: &ScalarField, map: &OccupancyMap) -> Result<f64> {
    let unseen = unseen_count(psi_cum, map)?;
    if map.free_count() == 0 {
        return Err(Error::DegenerateMap("map has no free space".into()));
    }
    Ok(unseen as f64 / map.free_count() as f64)
}

/// Cumulative visibility after a sequence of vantages.
#[derive(Clone, Debug)]
pub struct ExplorationState {
    psi_cum: ScalarField,
    boundary: ScalarField,
    vantages: Vec<Vantage>,
    eps: f64,
}

impl ExplorationState {
    /// `Psi_0 = psi_{x0}` with the default boundary width `3 dx`.
    pub fn initial(map: &OccupancyMap, x0: &Vantage) -> Result<Self> {
        Self::initial_with_eps(map, x0, EPS_SPACINGS * map.geometry().spacing())
    }

    pub fn initial_with_eps(map: &OccupancyMap, x0: &Vantage, eps: f64) -> Result<Self> {
        let psi = visibility_field(map, x0)?;
        let boundary = shadow_boundary(&psi, map, eps)?;
        Ok(Self {
            psi_cum: psi,
            boundary,
            vantages: vec![x0.clone()],
            eps,
        })
    }

    /// Assembles a state from precomputed fields.
    pub fn from_parts(
        psi_cum: ScalarField,
        boundary: ScalarField,
        vantages: Vec<Vantage>,
        eps: f64,
    ) -> Result<Self> {
        psi_cum.same_geometry(&boundary)?;
        if vantages.is_empty() {
            return Err(Error::InvalidArgument("a state needs at least one vantage".into()));
        }
        if boundary.values().iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidArgument("boundary field must be nonnegative".into()));
        }
        Ok(Self {
            psi_cum,
            boundary,
            vantages,
            eps,
        })
    }

    /// Pointwise maximum with a new visibility field; appends the vantage.
    /// The boundary field is carried over unchanged; [`Self::observe`]
    /// recomputes it.
    pub fn accumulate(&self, vantage: Vantage, psi_new: &ScalarField) -> Result<Self> {
        self.psi_cum.same_geometry(psi_new)?;
        let values = self
            .psi_cum
            .values()
            .iter()
            .zip(psi_new.values())
            .map(|(&a, &b)| a.max(b))
            .collect();
        let mut vantages = self.vantages.clone();
        vantages.push(vantage);
        Ok(Self {
            psi_cum: ScalarField::from_parts(self.psi_cum.geometry().clone(), values),
            boundary: self.boundary.clone(),
            vantages,
            eps: self.eps,
        })
    }

    /// Takes a measurement from `vantage`: visibility, accumulation and a
    /// fresh shadow boundary.
    pub fn observe(&self, map: &OccupancyMap, vantage: &Vantage) -> Result<Self> {
        let psi = visibility_field(map, vantage)?;
        let mut next = self.accumulate(vantage.clone(), &psi)?;
        next.boundary = shadow_boundary(&next.psi_cum, map, self.eps)?;
        Ok(next)
    }

    pub fn psi_cum(&self) -> &ScalarField {
        &self.psi_cum
    }

    pub fn boundary(&self) -> &ScalarField {
        &self.boundary
    }

    pub fn vantages(&self) -> &[Vantage] {
        &self.vantages
    }

    /// Step index `k`; the initial state is step 0.
    pub fn step(&self) -> usize {
        self.vantages.len() - 1
    }

    pub fn current(&self) -> &Vantage {
        self.vantages.last().expect("state always holds a vantage")
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.psi_cum.geometry()
    }

    pub fn is_seen(&self, flat: usize) -> bool {
        self.psi_cum.at(flat) > 0.0
    }

    /// Cumulatively visible volume `|Omega_k|`.
    pub fn seen_volume(&self) -> f64 {
        let seen = self.psi_cum.values().iter().filter(|&&v| v > 0.0).count();
        seen as f64 * self.geometry().cell_volume()
    }

    pub fn residual(&self, map: &OccupancyMap) -> Result<f64> {
        residual(&self.psi_cum, map)
    }
}
