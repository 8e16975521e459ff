//! Seeded samplers for the reference model.
//!
//! Every replicate gets its own `ChaCha8Rng` whose seed is
//! `splitmix64(master + index · 0x9E3779B97F4A7C15)`, so replicates can run
//! in any order and still reproduce bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::model::{cdf_z, g_z, survival_z, tail_kernel};
use super::slice::slice_with_rng;
use crate::error::{Error, Result};
use crate::geometry::{CylinderSample, Observation, ObservationSet};
use crate::numeric::solve_increasing;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Proposals allowed per draw before the tail sampler gives up. The
/// acceptance rate is 3/4, so this is never reached in practice.
const MAX_TRIES: usize = 10_000;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for replicate `index` of a run seeded with `master`.
pub fn replicate_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(master.wrapping_add(index.wrapping_mul(GOLDEN))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Draw `(Z, H)` from the observable law directly.
    Direct2D,
    /// Place cylinders in a box and cut them with a plane.
    Slice3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub seed: u64,
    pub mode: SimulationMode,
    pub replicates: usize,
}

impl SimulationSpec {
    pub fn new(n: usize, seed: u64, mode: SimulationMode, replicates: usize) -> Result<Self> {
        let spec = Self {
            n,
            seed,
            mode,
            replicates,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        Ok(())
    }

    /// Observations for replicate `index`, in the configured mode.
    pub fn replicate(&self, index: u64) -> Result<ObservationSet> {
        self.check()?;
        let mut rng = replicate_rng(self.seed, index);
        match self.mode {
            SimulationMode::Direct2D => sample_2d_with_rng(self.n, &mut rng),
            SimulationMode::Slice3D => slice_with_rng(self.n, &mut rng),
        }
    }
}

/// Cylinders from the 3D model: `X ~ Gamma(3)`, `H | X` triangular with mode 0.
pub fn sample_3d(spec: &SimulationSpec) -> Result<Vec<CylinderSample>> {
    spec.check()?;
    let mut rng = replicate_rng(spec.seed, 0);
    Ok(sample_3d_with_rng(spec.n, &mut rng))
}

pub fn sample_3d_with_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<CylinderSample> {
    (0..n).map(|_| draw_cylinder(rng)).collect()
}

pub(crate) fn draw_cylinder<R: Rng + ?Sized>(rng: &mut R) -> CylinderSample {
    let gamma = Gamma::new(3.0, 1.0).expect("valid gamma parameters");
    let x = gamma.sample(rng);
    // H / x has CDF 1 − (1 − y)², so y = 1 − √V.
    let v: f64 = rng.random();
    CylinderSample { x, h: x * (1.0 - v.sqrt()) }
}

/// Observations drawn from the observable law without any geometry.
pub fn sample_2d_direct(spec: &SimulationSpec) -> Result<ObservationSet> {
    spec.check()?;
    let mut rng = replicate_rng(spec.seed, 0);
    sample_2d_with_rng(spec.n, &mut rng)
}

pub fn sample_2d_with_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ObservationSet> {
    let items = (0..n)
        .map(|_| {
            let z = draw_z(rng)?;
            let h = draw_h_given_z(z, rng)?;
            Observation::new(z, h)
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationSet::new(items)
}

/// Inverts `G_Z` by safeguarded Newton. Upper quantiles are solved on
/// `−ln(1 − G_Z)` to keep tail resolution.
pub fn draw_z<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    // (0, 1]: keeps both inversions finite.
    let u = 1.0 - rng.random::<f64>();
    if u <= 0.5 {
        solve_increasing(|z| (cdf_z(z), g_z(z)), u, 0.0, 4.0)
    } else {
        let target = -(1.0 - u).ln();
        if target == 0.0 {
            return Ok(f64::MIN_POSITIVE);
        }
        solve_increasing(|z| (-survival_z(z).ln(), g_z(z) / survival_z(z)), target, 0.0, 4.0)
    }
    .map(|z| z.max(f64::MIN_POSITIVE))
}

/// Draws `H` given `Z = z`.
///
/// With probability `(3/4) / (z² + z + 3/4)` the height exceeds `z`. Below
/// `z` the density is linear, `∝ 1/2 + z − h`, and is inverted exactly.
/// Above `z`, `H − z` has density `∝ k(a)`, sampled by rejection from the
/// envelope `k(0) e^{-a}` (acceptance rate 3/4).
pub fn draw_h_given_z<R: Rng + ?Sized>(z: f64, rng: &mut R) -> Result<f64> {
    let p_above = 0.75 / (z * z + z + 0.75);
    if rng.random::<f64>() < p_above {
        Ok(z + draw_tail_offset(rng)?)
    } else {
        let c = 0.5 + z;
        let v: f64 = rng.random();
        let w = v * (c * z - 0.5 * z * z);
        // c − √(c² − 2w), rationalised
        let h = 2.0 * w / (c + (c * c - 2.0 * w).max(0.0).sqrt());
        Ok(h.clamp(0.0, z).max(f64::MIN_POSITIVE))
    }
}

/// Offset `a = H − z` on the upper branch.
pub fn draw_tail_offset<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    let k0 = tail_kernel(0.0);
    for _ in 0..MAX_TRIES {
        let a = -(1.0 - rng.random::<f64>()).ln();
        let accept: f64 = rng.random();
        if accept * k0 * (-a).exp() <= tail_kernel(a) {
            return Ok(a);
        }
    }
    Err(Error::RejectionFloor { tries: MAX_TRIES })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, seed: u64) -> SimulationSpec {
        SimulationSpec::new(n, seed, SimulationMode::Direct2D, 1).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SimulationSpec::new(0, 1, SimulationMode::Direct2D, 1).is_err());
        assert!(SimulationSpec::new(1, 1, SimulationMode::Direct2D, 0).is_err());
    }

    #[test]
    fn reproducible() {
        let a = sample_2d_direct(&spec(500, 42)).unwrap();
        let b = sample_2d_direct(&spec(500, 42)).unwrap();
        let c = sample_2d_direct(&spec(500, 43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s = SimulationSpec::new(200, 7, SimulationMode::Slice3D, 3).unwrap();
        assert_eq!(s.replicate(2).unwrap(), s.replicate(2).unwrap());
        assert_ne!(s.replicate(1).unwrap(), s.replicate(2).unwrap());
    }

    #[test]
    fn streams_differ_by_index() {
        let a: u64 = replicate_rng(1, 0).random();
        let b: u64 = replicate_rng(1, 1).random();
        let c: u64 = replicate_rng(2, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn three_d_moments() {
        let cyl = sample_3d(&spec(100_000, 3)).unwrap();
        let n = cyl.len() as f64;
        let mean_x = cyl.iter().map(|c| c.x).sum::<f64>() / n;
        // Var X = 3
        assert!((mean_x - 3.0).abs() < 3.0 * (3.0 / n).sqrt());
        assert!(cyl.iter().all(|c| c.h <= c.x && c.h >= 0.0));
        // E[H − X/3] = 0, with Var(H − X/3) = E[X²]/18 = 2/3
        let resid = cyl.iter().map(|c| c.h - c.x / 3.0).sum::<f64>() / n;
        assert!(resid.abs() < 3.0 * (2.0 / 3.0 / n).sqrt());
    }

    #[test]
    fn z_density_near_zero() {
        let obs = sample_2d_direct(&spec(1_000_000, 11)).unwrap();
        let n = obs.len() as f64;
        let p = crate::simulation::model::cdf_z(0.05);
        let hits = obs.iter().filter(|o| o.z <= 0.05).count() as f64 / n;
        assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(), "{hits} vs {p}");
        // g_Z(0) · 0.05 to first order
        assert!((p - 0.2 * 0.05).abs() < 1e-4);
    }

    #[test]
    fn inverse_square_root_mean() {
        // E[Z^{-1/2}] = π / (2 E[√X]); its sample variance is infinite, so use
        // a generous log-rate band.
        let obs = sample_2d_direct(&spec(100_000, 5)).unwrap();
        let n = obs.len() as f64;
        let mean = obs.iter().map(|o| o.inv_sqrt_z()).sum::<f64>() / n;
        let truth = std::f64::consts::PI / (2.0 * crate::simulation::model::mean_radius());
        let sd = (0.2 * n.ln() / n).sqrt();
        assert!((mean - truth).abs() < 3.0 * sd, "{mean} vs {truth}");
    }

    #[test]
    fn tail_offset_matches_gamma_construction() {
        // a = S(1 − √U) with S ~ Gamma(5/2) has density ∝ k(a).
        let mut rng = replicate_rng(9, 0);
        let n = 20_000;
        let mut a: Vec<f64> = (0..n).map(|_| draw_tail_offset(&mut rng).unwrap()).collect();
        let g = Gamma::new(2.5, 1.0).unwrap();
        let mut b: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = g.sample(&mut rng);
                let u: f64 = rng.random();
                s * (1.0 - u.sqrt())
            })
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let d = ks_two_sample(&a, &b);
        assert!(d < 1.628 * (2.0 / n as f64).sqrt(), "{d}");
    }

    fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }
}
