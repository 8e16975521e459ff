//! Observations on the cut plane and the transforms linking them to the
//! cylinder quantities.
//!
//! A cylinder with squared radius `x` and height `h` is cut by a plane
//! parallel to its axis. The cut is a rectangle with squared half-width
//! `z <= x` and the full height `h`. For every quantity `T` of interest
//! there is a threshold `q(h; t)` with `T > t` exactly when `X > q(H; t)`;
//! `p(h; u)` is its inverse in the second argument.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One rectangle on the cut plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Squared half-width (length²).
    pub z: f64,
    /// Height (length).
    pub h: f64,
}

impl Observation {
    pub fn new(z: f64, h: f64) -> Result<Self> {
        if z.is_finite() && h.is_finite() && z > 0.0 && h > 0.0 {
            Ok(Self { z, h })
        } else {
            Err(Error::Domain(format!("observation (z = {z}, h = {h})")))
        }
    }

    #[inline]
    pub fn inv_sqrt_z(&self) -> f64 {
        1.0 / self.z.sqrt()
    }
}

/// A cylinder in the medium: squared radius and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSample {
    pub x: f64,
    pub h: f64,
}

impl CylinderSample {
    pub fn radius(&self) -> f64 {
        self.x.sqrt()
    }

    pub fn volume(&self) -> f64 {
        PI * self.x * self.h
    }
}

/// Mean radius `E[√X]` of a collection of cylinders.
pub fn mean_radius(cylinders: &[CylinderSample]) -> f64 {
    crate::numeric::compensated_mean(cylinders.iter().map(CylinderSample::radius))
}

/// Which rejected rows were dropped while building an [`ObservationSet`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Zero-based positions of rejected input pairs.
    pub rejected: Vec<usize>,
}

impl ValidationReport {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

/// Non-empty, immutable sample of validated observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    items: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(items: Vec<Observation>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyObservationSet { rejected: 0 });
        }
        for o in &items {
            Observation::new(o.z, o.h)?;
        }
        Ok(Self { items })
    }

    /// Keeps the pairs with positive finite `z` and `h` and reports the rest.
    pub fn validate<I>(raw: I) -> Result<(Self, ValidationReport)>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut items = Vec::new();
        let mut report = ValidationReport::default();
        for (i, (z, h)) in raw.into_iter().enumerate() {
            match Observation::new(z, h) {
                Ok(o) => items.push(o),
                Err(_) => report.rejected.push(i),
            }
        }
        if items.is_empty() {
            return Err(Error::EmptyObservationSet {
                rejected: report.rejected_count(),
            });
        }
        Ok((Self { items }, report))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.items.iter()
    }

    /// Quantity value `p(Hᵢ; Zᵢ)` at which each observation stops
    /// contributing to the plug-in estimator (its pole), sorted ascending.
    pub fn sorted_poles(&self, kind: QuantityKind) -> Vec<f64> {
        let mut poles: Vec<f64> = self.items.iter().map(|o| kind.p_raw(o.h, o.z)).collect();
        poles.sort_by(f64::total_cmp);
        poles
    }
}

impl<'a> IntoIterator for &'a ObservationSet {
    type Item = &'a Observation;
    type IntoIter = std::slice::Iter<'a, Observation>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// The cylinder quantity whose distribution is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    /// `X`
    SquaredRadius,
    /// `√X / H`
    AspectRatio,
    /// `2π(X + √X H)`
    SurfaceArea,
    /// `π X H`
    Volume,
}

impl QuantityKind {
    pub const ALL: [QuantityKind; 4] = [
        QuantityKind::SquaredRadius,
        QuantityKind::AspectRatio,
        QuantityKind::SurfaceArea,
        QuantityKind::Volume,
    ];

    /// Short tag used on the command line and in output file names.
    pub fn tag(self) -> &'static str {
        match self {
            QuantityKind::SquaredRadius => "sqradius",
            QuantityKind::AspectRatio => "ratio",
            QuantityKind::SurfaceArea => "surf",
            QuantityKind::Volume => "vol",
        }
    }

    /// Value of the quantity for a cylinder.
    pub fn of_cylinder(self, c: &CylinderSample) -> f64 {
        self.p_raw(c.h, c.x)
    }

    /// Squared half-width threshold `q(h; t)`.
    pub fn q(self, h: f64, t: f64) -> Result<f64> {
        check_arg("h", h, false)?;
        check_arg("t", t, true)?;
        Ok(self.q_raw(h, t))
    }

    /// Inverse of [`q`](Self::q) in its second argument.
    pub fn p(self, h: f64, u: f64) -> Result<f64> {
        check_arg("h", h, false)?;
        check_arg("u", u, true)?;
        Ok(self.p_raw(h, u))
    }

    /// `∂q/∂t`.
    pub fn q_dot(self, h: f64, t: f64) -> Result<f64> {
        check_arg("h", h, false)?;
        check_arg("t", t, true)?;
        Ok(match self {
            QuantityKind::SquaredRadius => 1.0,
            QuantityKind::AspectRatio => 2.0 * h * h * t,
            QuantityKind::SurfaceArea => {
                let r = 0.5 * h;
                let root = (r * r + t / (2.0 * PI)).sqrt();
                surface_sqrt_diff(h, t) / (2.0 * PI * root)
            }
            QuantityKind::Volume => 1.0 / (PI * h),
        })
    }

    /// `∂p/∂u`. Singular at `u = 0` for the aspect ratio and surface area.
    pub fn p_dot(self, h: f64, u: f64) -> Result<f64> {
        check_arg("h", h, false)?;
        check_arg("u", u, true)?;
        match self {
            QuantityKind::SquaredRadius => Ok(1.0),
            QuantityKind::Volume => Ok(PI * h),
            QuantityKind::AspectRatio | QuantityKind::SurfaceArea if u == 0.0 => {
                Err(Error::Singularity { kind: self })
            }
            QuantityKind::AspectRatio => Ok(1.0 / (2.0 * h * u.sqrt())),
            QuantityKind::SurfaceArea => Ok(2.0 * PI * (1.0 + h / (2.0 * u.sqrt()))),
        }
    }

    /// Unchecked `q(h; t)` for validated inputs.
    #[inline]
    pub(crate) fn q_raw(self, h: f64, t: f64) -> f64 {
        match self {
            QuantityKind::SquaredRadius => t,
            QuantityKind::AspectRatio => {
                let ht = h * t;
                ht * ht
            }
            QuantityKind::SurfaceArea => {
                let d = surface_sqrt_diff(h, t);
                d * d
            }
            QuantityKind::Volume => t / (PI * h),
        }
    }

    /// Unchecked `p(h; u)` for validated inputs.
    #[inline]
    pub(crate) fn p_raw(self, h: f64, u: f64) -> f64 {
        match self {
            QuantityKind::SquaredRadius => u,
            QuantityKind::AspectRatio => u.sqrt() / h,
            QuantityKind::SurfaceArea => 2.0 * PI * (u + h * u.sqrt()),
            QuantityKind::Volume => PI * h * u,
        }
    }
}

/// `√(h²/4 + t/2π) − h/2`, the surface-area branch before squaring.
///
/// Evaluated literally unless `t/2π` is below `h²/4`, where the literal
/// difference cancels; there the rationalised quotient of the same
/// expression is used.
#[inline]
fn surface_sqrt_diff(h: f64, t: f64) -> f64 {
    let r = 0.5 * h;
    let a = t / (2.0 * PI);
    let root = (r * r + a).sqrt();
    if a < r * r {
        a / (root + r)
    } else {
        root - r
    }
}

fn check_arg(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v}")))
    }
}

impl fmt::Display for QuantityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            QuantityKind::SquaredRadius => "squared radius",
            QuantityKind::AspectRatio => "aspect ratio",
            QuantityKind::SurfaceArea => "surface area",
            QuantityKind::Volume => "volume",
        };
        f.write_str(name)
    }
}

impl FromStr for QuantityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sqradius" | "squared_radius" | "x" => Ok(QuantityKind::SquaredRadius),
            "ratio" | "aspect_ratio" | "r" => Ok(QuantityKind::AspectRatio),
            "surf" | "surface_area" | "s" => Ok(QuantityKind::SurfaceArea),
            "vol" | "volume" | "v" => Ok(QuantityKind::Volume),
            other => Err(Error::Config(format!("unknown quantity `{other}`"))),
        }
    }
}
