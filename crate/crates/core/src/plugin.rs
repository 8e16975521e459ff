//! Plug-in (empirical) estimators.
//!
//! Every expectation over the cylinder population can be written as a ratio
//! of sample means of powers of `Z` and `H`, each weighted by `Z^{-1/2}` to
//! undo the size bias of the cut. The same weighting gives the plug-in
//! estimate `Ñₙ(t)` of the function whose normalisation is `1 − F_T(t)`.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ObservationSet, QuantityKind};
use crate::numeric::{compensated_sum, NeumaierSum};

/// Sample means of the observable functionals the estimators are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableMeans {
    pub n: usize,
    /// mean of `Z^{-1/2}`
    pub inv_sqrt_z: f64,
    /// mean of `Z^{1/2}`
    pub sqrt_z: f64,
    /// mean of `H`
    pub h: f64,
    /// mean of `Z^{-1/2} H`
    pub inv_sqrt_z_h: f64,
    /// mean of `Z^{1/2} H`
    pub sqrt_z_h: f64,
}

impl ObservableMeans {
    pub fn of(obs: &ObservationSet) -> Self {
        let mut acc = [NeumaierSum::new(); 5];
        for o in obs {
            let rz = o.z.sqrt();
            let irz = 1.0 / rz;
            acc[0].add(irz);
            acc[1].add(rz);
            acc[2].add(o.h);
            acc[3].add(irz * o.h);
            acc[4].add(rz * o.h);
        }
        let n = obs.len();
        let nf = n as f64;
        Self {
            n,
            inv_sqrt_z: acc[0].total() / nf,
            sqrt_z: acc[1].total() / nf,
            h: acc[2].total() / nf,
            inv_sqrt_z_h: acc[3].total() / nf,
            sqrt_z_h: acc[4].total() / nf,
        }
    }
}

/// `Ñₙ(t) = n⁻¹ Σ (Zᵢ − q(Hᵢ; t))^{-1/2} 1[Zᵢ > q(Hᵢ; t)]`.
///
/// Fails with [`Error::Pole`] when some `Zᵢ` equals `q(Hᵢ; t)` exactly.
pub fn n_tilde(obs: &ObservationSet, kind: QuantityKind, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t = {t}")));
    }
    let mut acc = NeumaierSum::new();
    for (index, o) in obs.iter().enumerate() {
        let gap = o.z - kind.q_raw(o.h, t);
        if gap > 0.0 {
            acc.add(1.0 / gap.sqrt());
        } else if gap == 0.0 {
            return Err(Error::Pole { index, t });
        }
    }
    Ok(acc.total() / obs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluginCdfPoint {
    pub t: f64,
    /// `1 − Ñₙ(t)/Ñₙ(0)`; not guaranteed monotone in `t`.
    pub f: f64,
    pub n_tilde: f64,
}

/// Plug-in CDF `F̃ₙ(t) = 1 − Ñₙ(t)/Ñₙ(0)` on an ascending grid.
pub fn plugin_cdf(obs: &ObservationSet, kind: QuantityKind, grid: &[f64]) -> Result<Vec<PluginCdfPoint>> {
    check_grid(grid)?;
    let n0 = n_tilde(obs, kind, 0.0)?;
    grid.iter()
        .map(|&t| {
            let n_t = n_tilde(obs, kind, t)?;
            Ok(PluginCdfPoint {
                t,
                f: 1.0 - n_t / n0,
                n_tilde: n_t,
            })
        })
        .collect()
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("grid values must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Moves every grid point to the midpoint of the inter-pole interval that
/// contains it, so `Ñₙ` is evaluated away from its poles.
///
/// Points below the first pole go to half of it; points at or past the last
/// pole are left alone (`Ñₙ` is zero there).
pub fn pole_free_grid(obs: &ObservationSet, kind: QuantityKind, grid: &[f64]) -> Vec<f64> {
    let mut poles = obs.sorted_poles(kind);
    poles.dedup();
    grid.iter()
        .map(|&t| {
            let k = poles.partition_point(|&p| p <= t);
            if k == 0 {
                0.5 * poles[0]
            } else if k == poles.len() {
                if t == poles[k - 1] {
                    poles[k - 1] * (1.0 + 1e-9)
                } else {
                    t
                }
            } else {
                0.5 * (poles[k - 1] + poles[k])
            }
        })
        .collect()
}

/// Size-bias corrected height CDF `Σ Zᵢ^{-1/2} 1[Hᵢ < h] / Σ Zᵢ^{-1/2}`.
pub fn height_cdf_weighted(obs: &ObservationSet, h: f64) -> f64 {
    let mut below = NeumaierSum::new();
    let mut total = NeumaierSum::new();
    for o in obs {
        let w = o.inv_sqrt_z();
        total.add(w);
        if o.h < h {
            below.add(w);
        }
    }
    below.total() / total.total()
}

/// Ordinary empirical CDF of the observed heights.
///
/// Only consistent for the cylinder heights when height and radius are
/// independent; otherwise it inherits the size bias of the cut.
pub fn height_cdf_unweighted(obs: &ObservationSet, h: f64) -> f64 {
    obs.iter().filter(|o| o.h <= h).count() as f64 / obs.len() as f64
}

/// Estimated expectations of the cylinder quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    /// `E[√X]`
    pub radius: f64,
    /// `E[X]`
    pub squared_radius: f64,
    /// `E[H]`
    pub height: f64,
    /// `E[πXH]`
    pub volume: f64,
    /// `E[2π(X + √X H)]`
    pub surface_area: f64,
    /// Sample mean of `Z^{-1/2}`, the estimate of `m_G⁻ = N(0)`.
    pub m_g_minus: f64,
}

/// Ratio estimators of the cylinder moments.
///
/// The volume and surface-area rows follow from the cross-moment identity
/// `E_g[Z^α H^β] ∝ E_f[X^{α+1/2} H^β]`:
/// `E[V] = 2π ΣZᵢ^{1/2}Hᵢ / ΣZᵢ^{-1/2}` and
/// `E[S] = 2π [2ΣZᵢ^{1/2} + (π/2)ΣHᵢ] / ΣZᵢ^{-1/2}`.
pub fn moments(obs: &ObservationSet) -> MomentSet {
    let m = ObservableMeans::of(obs);
    moments_from_means(&m)
}

pub(crate) fn moments_from_means(m: &ObservableMeans) -> MomentSet {
    let u = m.inv_sqrt_z;
    MomentSet {
        radius: FRAC_PI_2 / u,
        squared_radius: 2.0 * m.sqrt_z / u,
        height: m.inv_sqrt_z_h / u,
        volume: 2.0 * PI * m.sqrt_z_h / u,
        surface_area: 2.0 * PI * (2.0 * m.sqrt_z + FRAC_PI_2 * m.h) / u,
        m_g_minus: u,
    }
}

/// Estimate of `Cov(√X, H)` for the cylinders:
/// `(π/2) ΣHᵢ / ΣZᵢ^{-1/2} − (π/2) / (n⁻¹ΣZᵢ^{-1/2}) · ΣHᵢZᵢ^{-1/2} / ΣZᵢ^{-1/2}`.
pub fn covariance_hat(obs: &ObservationSet) -> Result<f64> {
    if obs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: obs.len(),
        });
    }
    let n = obs.len() as f64;
    let sum_w = compensated_sum(obs.iter().map(|o| o.inv_sqrt_z()));
    let sum_h = compensated_sum(obs.iter().map(|o| o.h));
    let sum_wh = compensated_sum(obs.iter().map(|o| o.inv_sqrt_z() * o.h));
    Ok(FRAC_PI_2 * sum_h / sum_w - FRAC_PI_2 / (sum_w / n) * (sum_wh / sum_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(pairs: &[(f64, f64)]) -> ObservationSet {
        ObservationSet::validate(pairs.iter().copied()).unwrap().0
    }

    #[test]
    fn single_term_values() {
        let obs = set(&[(4.0, 1.0)]);
        let k = QuantityKind::SquaredRadius;
        assert_eq!(n_tilde(&obs, k, 0.0).unwrap(), 0.5);
        assert_eq!(n_tilde(&obs, k, 5.0).unwrap(), 0.0);
        assert!(matches!(n_tilde(&obs, k, 4.0), Err(Error::Pole { index: 0, .. })));
    }

    #[test]
    fn value_at_zero_is_mean_inverse_half_width() {
        let obs = set(&[(4.0, 1.0), (0.25, 3.0), (9.0, 0.5)]);
        let expected = (0.5 + 2.0 + 1.0 / 3.0) / 3.0;
        for kind in QuantityKind::ALL {
            assert!((n_tilde(&obs, kind, 0.0).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn plugin_cdf_endpoints() {
        let obs = set(&[(4.0, 1.0), (0.25, 3.0), (9.0, 0.5)]);
        for kind in QuantityKind::ALL {
            let last = *obs.sorted_poles(kind).last().unwrap();
            let pts = plugin_cdf(&obs, kind, &[0.0, 2.0 * last]).unwrap();
            assert_eq!(pts[0].f, 0.0);
            assert_eq!(pts[1].f, 1.0);
            assert_eq!(pts[1].n_tilde, 0.0);
        }
    }

    #[test]
    fn plugin_cdf_rejects_unsorted_grid() {
        let obs = set(&[(4.0, 1.0)]);
        assert!(plugin_cdf(&obs, QuantityKind::Volume, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn pole_free_grid_avoids_every_pole() {
        let obs = set(&[(4.0, 1.0), (0.25, 3.0), (9.0, 0.5), (1.0, 1.0)]);
        for kind in QuantityKind::ALL {
            let poles = obs.sorted_poles(kind);
            let grid: Vec<f64> = poles.clone();
            let safe = pole_free_grid(&obs, kind, &grid);
            for &t in &safe {
                assert!(!poles.contains(&t));
                assert!(n_tilde(&obs, kind, t).is_ok());
            }
            assert!(safe.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn weighted_height_cdf_edges() {
        let obs = set(&[(4.0, 1.0), (0.25, 3.0), (9.0, 0.5)]);
        assert_eq!(height_cdf_weighted(&obs, 0.0), 0.0);
        assert_eq!(height_cdf_weighted(&obs, 3.5), 1.0);
    }

    #[test]
    fn equal_half_widths_reduce_to_plain_ecdf() {
        let obs = set(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)]);
        for h in [0.5, 1.5, 2.5, 3.5, 4.5] {
            let plain = obs.iter().filter(|o| o.h < h).count() as f64 / 4.0;
            assert!((height_cdf_weighted(&obs, h) - plain).abs() < 1e-15);
        }
    }

    #[test]
    fn unweighted_height_cdf_examples() {
        let obs = set(&[(1.0, 1.0), (5.0, 2.0), (0.1, 3.0)]);
        assert!((height_cdf_unweighted(&obs, 2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(height_cdf_unweighted(&obs, 0.0), 0.0);
    }

    #[test]
    fn single_observation_moments() {
        let m = moments(&set(&[(1.0, 1.0)]));
        assert!((m.radius - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(m.height, 1.0);
        assert_eq!(m.squared_radius, 2.0);
        assert!((m.volume - 2.0 * PI).abs() < 1e-14);
        assert!((m.surface_area - 2.0 * PI * (2.0 + FRAC_PI_2)).abs() < 1e-13);
    }

    #[test]
    fn moments_scale_with_units() {
        let pairs = [(4.0, 1.0), (0.25, 3.0), (9.0, 0.5), (1.3, 2.2)];
        let c = 3.0;
        let a = moments(&set(&pairs));
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(z, h)| (z * c * c, h * c)).collect();
        let b = moments(&set(&scaled));
        assert!((b.radius - c * a.radius).abs() < 1e-13);
        assert!((b.height - c * a.height).abs() < 1e-13);
        assert!((b.squared_radius - c * c * a.squared_radius).abs() < 1e-12);
        assert!((b.volume - c.powi(3) * a.volume).abs() < 1e-11);
    }

    #[test]
    fn covariance_vanishes_for_constant_height() {
        let obs = set(&[(4.0, 2.5), (0.25, 2.5), (9.0, 2.5), (0.01, 2.5)]);
        assert!(covariance_hat(&obs).unwrap().abs() < 1e-14);
    }

    #[test]
    fn covariance_needs_two_observations() {
        assert!(matches!(
            covariance_hat(&set(&[(1.0, 1.0)])),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    proptest! {
        #[test]
        fn n_tilde_nonnegative_and_zero_past_last_pole(
            pairs in prop::collection::vec((0.01f64..10.0, 0.01f64..10.0), 1..30),
            frac in 0f64..1.5,
            k in 0usize..4,
        ) {
            let obs = set(&pairs);
            let kind = QuantityKind::ALL[k];
            let last = *obs.sorted_poles(kind).last().unwrap();
            let t = frac * last;
            if let Ok(v) = n_tilde(&obs, kind, t) {
                prop_assert!(v >= 0.0);
                if t > last {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }

        #[test]
        fn weighted_height_cdf_is_monotone(
            pairs in prop::collection::vec((0.01f64..10.0, 0.01f64..10.0), 1..30),
            mut hs in prop::collection::vec(0f64..12.0, 2..20),
        ) {
            let obs = set(&pairs);
            hs.sort_by(f64::total_cmp);
            let vals: Vec<f64> = hs.iter().map(|&h| height_cdf_weighted(&obs, h)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-15));
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn covariance_permutation_invariant(
            pairs in prop::collection::vec((0.01f64..10.0, 0.01f64..10.0), 2..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = covariance_hat(&set(&pairs)).unwrap();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = covariance_hat(&set(&shuffled)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
