//! Brute-force sectioning: cylinders with parallel axes are scattered through
//! a box and cut by a plane parallel to the axes.
//!
//! Only the center coordinate normal to the plane matters. A cylinder of
//! radius `r` is hit when its center lies within `r` of the plane, and the
//! profile it leaves is a rectangle of half-width `√(r² − d²)` and height `h`.

use rand::Rng;
use serde::Serialize;

use super::sampler::{draw_cylinder, replicate_rng, SimulationSpec};
use crate::error::Result;
use crate::geometry::{CylinderSample, Observation, ObservationSet};
use crate::numeric::solve_increasing;

/// Cylinders drawn per batch while streaming.
const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacedCylinder {
    /// Center coordinate along the plane normal.
    pub center: f64,
    pub cylinder: CylinderSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceWorld {
    pub box_side: f64,
    pub plane: f64,
    pub cylinders: Vec<PlacedCylinder>,
}

/// 99.9% quantile of the radius `√X` with `X ~ Gamma(3)`.
pub fn radius_quantile_999() -> f64 {
    let cdf = |x: f64| (1.0 - (-x).exp() * (1.0 + x + 0.5 * x * x), 0.5 * x * x * (-x).exp());
    solve_increasing(cdf, 0.999, 0.0, 10.0).expect("gamma quantile brackets").sqrt()
}

/// Default box side: 20 times the 99.9% radius quantile.
pub fn default_box_side() -> f64 {
    20.0 * radius_quantile_999()
}

impl SliceWorld {
    /// Scatters the given cylinders uniformly along the normal of a plane
    /// through the middle of the box.
    pub fn place<R: Rng + ?Sized>(box_side: f64, cylinders: Vec<CylinderSample>, rng: &mut R) -> Self {
        let cylinders = cylinders
            .into_iter()
            .map(|cylinder| PlacedCylinder {
                center: rng.random::<f64>() * box_side,
                cylinder,
            })
            .collect();
        Self {
            box_side,
            plane: 0.5 * box_side,
            cylinders,
        }
    }

    /// `count` cylinders from the reference model.
    pub fn populate<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        let side = default_box_side();
        let cylinders = (0..count).map(|_| draw_cylinder(rng)).collect();
        Self::place(side, cylinders, rng)
    }

    /// Indices of cylinders crossing the plane.
    pub fn hits(&self) -> Vec<usize> {
        self.cylinders
            .iter()
            .enumerate()
            .filter(|(_, c)| cut(c, self.plane).is_some())
            .map(|(i, _)| i)
            .collect()
    }

    /// Section profiles, in cylinder order.
    pub fn cut(&self) -> Vec<Observation> {
        self.cylinders.iter().filter_map(|c| cut(c, self.plane)).collect()
    }
}

fn cut(c: &PlacedCylinder, plane: f64) -> Option<Observation> {
    let d = (c.center - plane).abs();
    let r = c.cylinder.radius();
    if d >= r {
        return None;
    }
    let z = c.cylinder.x - d * d;
    Observation::new(z, c.cylinder.h).ok()
}

/// Observations from sectioning until `spec.n` profiles are collected.
pub fn slice_oracle(spec: &SimulationSpec) -> Result<ObservationSet> {
    spec.check()?;
    let mut rng = replicate_rng(spec.seed, 0);
    slice_with_rng(spec.n, &mut rng)
}

pub(crate) fn slice_with_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ObservationSet> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let world = SliceWorld::populate(BATCH, rng);
        out.extend(world.cut().into_iter().take(n - out.len()));
    }
    ObservationSet::new(out)
}
