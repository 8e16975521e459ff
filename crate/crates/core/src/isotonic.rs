//! Continuous isotonic regression of the plug-in estimator.
//!
//! `Uₙ(t) = ∫₀ᵗ Ñₙ` is evaluated exactly: with the substitution `u = q(h; y)`
//! each observation contributes `∫ (z − u)^{-1/2} ṗ(h; u) du`, which has an
//! elementary antiderivative for every quantity. The monotone estimate `N̂ₙ`
//! is the right derivative of the least concave majorant of `Uₙ`.
//!
//! Between two consecutive poles every term of `Ñₙ` is increasing in `t`,
//! so `Uₙ` is convex there and the majorant can only touch `Uₙ` at `0` or at
//! a pole. The hull over `{0} ∪ poles` is therefore exact; extra refinement
//! points are accepted but never become hull vertices.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ObservationSet, QuantityKind};
use crate::numeric::{integrate, NeumaierSum, QuadOptions};
use crate::plugin::check_grid;

/// How the per-observation integrals in `Uₙ` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    #[default]
    ClosedForm,
    /// Adaptive Gauss–Kronrod, absolute tolerance 1e-10 per observation.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsotonicConfig {
    /// Geometric refinement points added inside each inter-pole interval.
    pub refinement: usize,
    pub integration: Integration,
}

impl Default for IsotonicConfig {
    fn default() -> Self {
        Self {
            refinement: 0,
            integration: Integration::ClosedForm,
        }
    }
}

/// `∫₀^upper (z − u)^{-1/2} ṗ(h; u) du` for `0 ≤ upper ≤ z`, in closed form.
fn term_closed_form(kind: QuantityKind, z: f64, h: f64, upper: f64) -> f64 {
    let upper = upper.clamp(0.0, z);
    let rest = (z - upper).sqrt();
    // √z − √(z − upper) without cancellation.
    let diff = upper / (z.sqrt() + rest);
    // arcsin(√(upper / z))
    let angle = upper.sqrt().atan2(rest);
    match kind {
        QuantityKind::SquaredRadius => 2.0 * diff,
        QuantityKind::Volume => 2.0 * PI * h * diff,
        QuantityKind::AspectRatio => angle / h,
        QuantityKind::SurfaceArea => 4.0 * PI * diff + 2.0 * PI * h * angle,
    }
}

/// Complete integral of one observation's term, reached at its pole.
fn term_full(kind: QuantityKind, z: f64, h: f64) -> f64 {
    let rz = z.sqrt();
    match kind {
        QuantityKind::SquaredRadius => 2.0 * rz,
        QuantityKind::Volume => 2.0 * PI * h * rz,
        QuantityKind::AspectRatio => FRAC_PI_2 / h,
        QuantityKind::SurfaceArea => 4.0 * PI * rz + PI * PI * h,
    }
}

/// Same integral by adaptive quadrature. The range is split at `z/2`; the
/// lower part uses `u = w²` and the upper part `u = z − s²`, which removes
/// both endpoint singularities.
fn term_quadrature(kind: QuantityKind, z: f64, h: f64, upper: f64) -> Result<f64> {
    let upper = upper.clamp(0.0, z);
    let opts = QuadOptions::with_tolerances(1e-10, 1e-12);
    let split = upper.min(0.5 * z);
    let lower = integrate(
        |w| {
            let u = w * w;
            kind.p_dot(h, u).map_or(0.0, |pd| 2.0 * w * pd / (z - u).sqrt())
        },
        0.0,
        split.sqrt(),
        opts,
    )?;
    let upper_part = if upper > split {
        integrate(
            |s| kind.p_dot(h, z - s * s).map_or(0.0, |pd| 2.0 * pd),
            (z - upper).sqrt(),
            (z - split).sqrt(),
            opts,
        )?
        .value
    } else {
        0.0
    };
    Ok(lower.value + upper_part)
}

/// One observation, ordered by its pole `p(h; z)`.
#[derive(Debug, Clone, Copy)]
struct Term {
    pole: f64,
    z: f64,
    h: f64,
    full: f64,
}

/// `Uₙ` for one data set, ready for evaluation at arbitrary `t`.
#[derive(Debug, Clone)]
struct TermTable {
    kind: QuantityKind,
    integration: Integration,
    terms: Vec<Term>,
    /// `prefix[k]` = sum of `full` over the first `k` terms.
    prefix: Vec<f64>,
    linear: Option<LinearTerms>,
}

/// Column layout for kinds whose threshold is linear in `t`, `q = t · slope`.
/// The term is then `weight · q / (√z + √(z − q))`.
#[derive(Debug, Clone)]
struct LinearTerms {
    slope: Vec<f64>,
    z: Vec<f64>,
    sqrt_z: Vec<f64>,
    weight: Vec<f64>,
}

impl LinearTerms {
    fn new(kind: QuantityKind, terms: &[Term]) -> Option<Self> {
        let (slope, weight): (Vec<f64>, Vec<f64>) = match kind {
            QuantityKind::SquaredRadius => terms.iter().map(|_| (1.0, 2.0)).unzip(),
            QuantityKind::Volume => terms.iter().map(|t| (1.0 / (PI * t.h), 2.0 * PI * t.h)).unzip(),
            _ => return None,
        };
        Some(Self {
            slope,
            z: terms.iter().map(|t| t.z).collect(),
            sqrt_z: terms.iter().map(|t| t.z.sqrt()).collect(),
            weight,
        })
    }

    fn open_sum(&self, from: usize, t: f64) -> f64 {
        let (slope, z, sqrt_z, weight) = (&self.slope[from..], &self.z[from..], &self.sqrt_z[from..], &self.weight[from..]);
        let mut sum = 0.0;
        for i in 0..slope.len() {
            let u = t * slope[i];
            let rest = (z[i] - u).max(0.0).sqrt();
            sum += weight[i] * u / (sqrt_z[i] + rest);
        }
        sum
    }
}

impl TermTable {
    fn new(obs: &ObservationSet, kind: QuantityKind, integration: Integration) -> Result<Self> {
        let mut terms = obs
            .iter()
            .map(|o| {
                let full = match integration {
                    Integration::ClosedForm => Ok(term_full(kind, o.z, o.h)),
                    Integration::Quadrature => term_quadrature(kind, o.z, o.h, o.z),
                }?;
                Ok(Term {
                    pole: kind.p_raw(o.h, o.z),
                    z: o.z,
                    h: o.h,
                    full,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        terms.sort_by(|a, b| a.pole.total_cmp(&b.pole));
        let mut prefix = Vec::with_capacity(terms.len() + 1);
        let mut acc = NeumaierSum::new();
        prefix.push(0.0);
        for term in &terms {
            acc.add(term.full);
            prefix.push(acc.total());
        }
        let linear = match integration {
            Integration::ClosedForm => LinearTerms::new(kind, &terms),
            Integration::Quadrature => None,
        };
        Ok(Self {
            kind,
            integration,
            terms,
            prefix,
            linear,
        })
    }

    fn n(&self) -> f64 {
        self.terms.len() as f64
    }

    /// `Uₙ(t)`. Terms whose pole is at or below `t` contribute their full
    /// integral; the rest are integrated up to `q(h; t)`.
    fn value(&self, t: f64) -> Result<f64> {
        let k = self.terms.partition_point(|term| term.pole <= t);
        if let Some(lin) = &self.linear {
            return Ok((self.prefix[k] + lin.open_sum(k, t)) / self.n());
        }
        let mut acc = NeumaierSum::new();
        acc.add(self.prefix[k]);
        let open = &self.terms[k..];
        match self.integration {
            Integration::ClosedForm => accumulate_open(self.kind, open, t, &mut acc),
            Integration::Quadrature => {
                for term in open {
                    let upper = self.kind.q_raw(term.h, t);
                    acc.add(term_quadrature(self.kind, term.z, term.h, upper)?);
                }
            }
        }
        Ok(acc.total() / self.n())
    }
}

#[inline]
fn accumulate_open(kind: QuantityKind, open: &[Term], t: f64, acc: &mut NeumaierSum) {
    for term in open {
        let upper = kind.q_raw(term.h, t);
        acc.add(term_closed_form(kind, term.z, term.h, upper));
    }
}

/// `Uₙ(t) = ∫₀ᵗ Ñₙ(y) dy`, exact up to rounding.
pub fn u_n(obs: &ObservationSet, kind: QuantityKind, t: f64) -> Result<f64> {
    u_n_with(obs, kind, t, Integration::ClosedForm)
}

pub fn u_n_with(obs: &ObservationSet, kind: QuantityKind, t: f64, integration: Integration) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t = {t}")));
    }
    TermTable::new(obs, kind, integration)?.value(t)
}

/// `Uₙ` tabulated on a grid that contains `0` and every pole.
#[derive(Debug, Clone)]
pub struct IntegratedCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    is_pole: Vec<bool>,
}

impl IntegratedCurve {
    /// Tabulates `Uₙ` at `0`, at every distinct pole and at
    /// `config.refinement` geometric points inside each interval.
    pub fn build(obs: &ObservationSet, kind: QuantityKind, config: IsotonicConfig) -> Result<Self> {
        let table = TermTable::new(obs, kind, config.integration)?;
        let mut poles: Vec<f64> = table.terms.iter().map(|t| t.pole).collect();
        poles.dedup();

        let k = config.refinement;
        let mut breakpoints = Vec::with_capacity(1 + poles.len() * (k + 1));
        let mut is_pole = Vec::with_capacity(breakpoints.capacity());
        breakpoints.push(0.0);
        is_pole.push(false);
        let mut left = 0.0;
        for &pole in &poles {
            for j in 1..=k {
                let t = if left > 0.0 {
                    left * (pole / left).powf(j as f64 / (k + 1) as f64)
                } else {
                    pole * 0.5f64.powi((k + 1 - j) as i32)
                };
                if t > left && t < pole {
                    breakpoints.push(t);
                    is_pole.push(false);
                }
            }
            breakpoints.push(pole);
            is_pole.push(true);
            left = pole;
        }
        let values = breakpoints
            .iter()
            .map(|&t| if t == 0.0 { Ok(0.0) } else { table.value(t) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            breakpoints,
            values,
            is_pole,
        })
    }

    /// A curve from explicit samples, for majorants of arbitrary data.
    /// Requires strictly increasing finite breakpoints and finite values.
    pub fn from_points(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::Domain("breakpoints and values must be non-empty and equally long".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite curve sample".into()));
        }
        let is_pole = vec![false; breakpoints.len()];
        Ok(Self {
            breakpoints,
            values,
            is_pole,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether each breakpoint is a pole of `Ñₙ`.
    pub fn pole_flags(&self) -> &[bool] {
        &self.is_pole
    }
}

/// A nonincreasing step function, stored as the right derivative of a
/// concave piecewise-linear function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCurve {
    knots: Vec<f64>,
    /// Majorant value at each knot.
    values: Vec<f64>,
    /// Slope on `[knots[i], knots[i + 1])`; the last entry is the slope past
    /// the final knot and is always zero.
    slopes: Vec<f64>,
}

impl MonotoneCurve {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> usize {
        self.knots.partition_point(|&k| k <= t).saturating_sub(1)
    }

    /// Right derivative of the majorant at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.slopes[self.segment(t)]
    }

    /// Value of the majorant at `t` (constant past the last knot).
    pub fn majorant(&self, t: f64) -> f64 {
        let i = self.segment(t);
        if t <= self.knots[0] {
            return self.values[0];
        }
        self.values[i] + self.slopes[i] * (t - self.knots[i])
    }
}

/// Least concave majorant of the tabulated curve, by a monotone-chain upper
/// hull over the samples. Past the last sample the majorant is flat.
pub fn least_concave_majorant(curve: &IntegratedCurve) -> MonotoneCurve {
    let ts = &curve.breakpoints;
    let vs = &curve.values;
    let slope = |a: usize, b: usize| (vs[b] - vs[a]) / (ts[b] - ts[a]);
    let mut hull: Vec<usize> = Vec::with_capacity(ts.len());
    for c in 0..ts.len() {
        while hull.len() >= 2 {
            let b = hull[hull.len() - 1];
            let a = hull[hull.len() - 2];
            if slope(a, b) <= slope(b, c) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    let knots: Vec<f64> = hull.iter().map(|&i| ts[i]).collect();
    let values: Vec<f64> = hull.iter().map(|&i| vs[i]).collect();
    let mut slopes: Vec<f64> = hull.windows(2).map(|w| slope(w[0], w[1])).collect();
    slopes.push(0.0);
    MonotoneCurve { knots, values, slopes }
}

/// The isotonic estimate `N̂ₙ` for one quantity.
#[derive(Debug, Clone)]
pub struct IsotonicEstimate {
    kind: QuantityKind,
    n: usize,
    curve: MonotoneCurve,
}

impl IsotonicEstimate {
    pub fn fit(obs: &ObservationSet, kind: QuantityKind, config: IsotonicConfig) -> Result<Self> {
        let integrated = IntegratedCurve::build(obs, kind, config)?;
        Ok(Self {
            kind,
            n: obs.len(),
            curve: least_concave_majorant(&integrated),
        })
    }

    pub fn kind(&self) -> QuantityKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn curve(&self) -> &MonotoneCurve {
        &self.curve
    }

    pub fn n_hat(&self, t: f64) -> f64 {
        self.curve.eval(t)
    }

    pub fn n_hat_zero(&self) -> f64 {
        self.curve.slopes[0]
    }

    /// `F̂(t) = 1 − N̂ₙ(t) / N̂ₙ(0)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let n0 = self.n_hat_zero();
        if n0 > 0.0 {
            1.0 - self.n_hat(t) / n0
        } else {
            1.0
        }
    }
}

pub fn n_hat(obs: &ObservationSet, kind: QuantityKind, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t = {t}")));
    }
    Ok(IsotonicEstimate::fit(obs, kind, IsotonicConfig::default())?.n_hat(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotonicCdfPoint {
    pub t: f64,
    pub f: f64,
    pub n_hat: f64,
}

/// Isotonic CDF estimate on an ascending grid.
pub fn isotonic_cdf(obs: &ObservationSet, kind: QuantityKind, grid: &[f64]) -> Result<Vec<IsotonicCdfPoint>> {
    check_grid(grid)?;
    let est = IsotonicEstimate::fit(obs, kind, IsotonicConfig::default())?;
    Ok(grid
        .iter()
        .map(|&t| IsotonicCdfPoint {
            t,
            f: est.cdf(t),
            n_hat: est.n_hat(t),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plugin::n_tilde;

    fn set(pairs: &[(f64, f64)]) -> ObservationSet {
        ObservationSet::validate(pairs.iter().copied()).unwrap().0
    }

    #[test]
    fn single_observation_squared_radius() {
        let obs = set(&[(4.0, 1.0)]);
        let k = QuantityKind::SquaredRadius;
        assert_eq!(u_n(&obs, k, 4.0).unwrap(), 4.0);
        assert_eq!(u_n(&obs, k, 9.0).unwrap(), 4.0);
        // 2(√4 − √(4 − 3)) = 2
        assert!((u_n(&obs, k, 3.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_at_origin() {
        let obs = set(&[(4.0, 1.0), (0.3, 2.0)]);
        for kind in QuantityKind::ALL {
            assert_eq!(u_n(&obs, kind, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn full_integral_matches_closed_form_limit() {
        for kind in QuantityKind::ALL {
            let (z, h) = (2.7, 1.3);
            let near = term_closed_form(kind, z, h, z);
            assert!((near - term_full(kind, z, h)).abs() < 1e-14 * near, "{kind}");
        }
    }

    #[test]
    fn quadrature_fallback_agrees_with_closed_form() {
        let obs = set(&[(4.0, 1.0), (0.3, 2.0), (1.7, 0.4)]);
        for kind in QuantityKind::ALL {
            let last = *obs.sorted_poles(kind).last().unwrap();
            for frac in [0.1, 0.5, 0.9, 1.2] {
                let t = frac * last;
                let a = u_n_with(&obs, kind, t, Integration::ClosedForm).unwrap();
                let b = u_n_with(&obs, kind, t, Integration::Quadrature).unwrap();
                assert!((a - b).abs() < 1e-9 * a.max(1e-300), "{kind} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn concave_input_is_its_own_majorant() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let vs: Vec<f64> = ts.iter().map(|t| 1.0 - (-t).exp()).collect();
        let curve = IntegratedCurve::from_points(ts.clone(), vs.clone()).unwrap();
        let lcm = least_concave_majorant(&curve);
        assert_eq!(lcm.knots(), &ts[..]);
        for (t, v) in ts.iter().zip(&vs) {
            assert!((lcm.majorant(*t) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn convex_kink_becomes_chord() {
        // Flat then steep: the majorant is the chord from first to last point.
        let curve = IntegratedCurve::from_points(vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 2.0]).unwrap();
        let lcm = least_concave_majorant(&curve);
        assert_eq!(lcm.knots(), &[0.0, 2.0]);
        assert_eq!(lcm.eval(0.0), 1.0);
        assert_eq!(lcm.eval(1.5), 1.0);
        assert_eq!(lcm.eval(2.5), 0.0);
        assert_eq!(lcm.majorant(1.0), 1.0);
    }

    #[test]
    fn isotonic_cdf_endpoints() {
        let obs = set(&[(4.0, 1.0), (0.3, 2.0), (1.7, 0.4), (2.2, 3.1)]);
        for kind in QuantityKind::ALL {
            let last = *obs.sorted_poles(kind).last().unwrap();
            let pts = isotonic_cdf(&obs, kind, &[0.0, 1.01 * last]).unwrap();
            assert_eq!(pts[0].f, 0.0);
            assert_eq!(pts[1].n_hat, 0.0);
            assert_eq!(pts[1].f, 1.0);
        }
    }

    #[test]
    fn slope_at_zero_dominates_plugin_value() {
        // Uₙ is convex up to the first pole, so the first chord is at least Ñₙ(0).
        let obs = set(&[(4.0, 1.0), (0.3, 2.0), (1.7, 0.4)]);
        for kind in QuantityKind::ALL {
            let est = IsotonicEstimate::fit(&obs, kind, IsotonicConfig::default()).unwrap();
            assert!(est.n_hat_zero() >= n_tilde(&obs, kind, 0.0).unwrap() - 1e-15);
        }
    }

    #[test]
    fn refinement_does_not_move_the_estimate() {
        let pairs: Vec<(f64, f64)> = (1..40)
            .map(|i| {
                let x = i as f64;
                (0.1 + (x * 0.37).sin().abs() * 3.0, 0.2 + (x * 0.71).cos().abs() * 2.0)
            })
            .collect();
        let obs = set(&pairs);
        for kind in QuantityKind::ALL {
            let coarse = IsotonicEstimate::fit(&obs, kind, IsotonicConfig::default()).unwrap();
            let fine = IsotonicEstimate::fit(
                &obs,
                kind,
                IsotonicConfig {
                    refinement: 16,
                    ..Default::default()
                },
            )
            .unwrap();
            let finer = IsotonicEstimate::fit(
                &obs,
                kind,
                IsotonicConfig {
                    refinement: 32,
                    ..Default::default()
                },
            )
            .unwrap();
            let scale = coarse.n_hat_zero();
            let last = *obs.sorted_poles(kind).last().unwrap();
            for i in 0..=50 {
                let t = last * i as f64 / 50.0;
                assert!((coarse.n_hat(t) - fine.n_hat(t)).abs() < 1e-6 * scale, "{kind} t={t}");
                assert!((fine.n_hat(t) - finer.n_hat(t)).abs() < 1e-6 * scale, "{kind} t={t}");
            }
        }
    }

    #[test]
    fn estimate_minimises_discretised_criterion() {
        // Criterion over step functions on the grid: Σ N_k² Δt_k − 2 Σ N_k ΔU_k.
        let obs = set(&[(4.0, 1.0), (0.3, 2.0), (1.7, 0.4), (2.2, 3.1), (0.9, 0.8)]);
        let kind = QuantityKind::Volume;
        let curve = IntegratedCurve::build(&obs, kind, IsotonicConfig { refinement: 3, ..Default::default() }).unwrap();
        let est = least_concave_majorant(&curve);
        let ts = curve.breakpoints();
        let us = curve.values();
        let steps: Vec<f64> = ts.windows(2).map(|w| est.eval(w[0])).collect();
        let criterion = |n: &[f64]| -> f64 {
            n.iter()
                .enumerate()
                .map(|(k, nk)| nk * nk * (ts[k + 1] - ts[k]) - 2.0 * nk * (us[k + 1] - us[k]))
                .sum()
        };
        let best = criterion(&steps);
        for k in 0..steps.len() {
            for delta in [-1e-3, 1e-3, -0.1, 0.1] {
                let mut cand = steps.clone();
                cand[k] += delta;
                let monotone = cand.windows(2).all(|w| w[0] >= w[1]) && cand.iter().all(|v| *v >= 0.0);
                if monotone {
                    assert!(criterion(&cand) >= best - 1e-12, "k={k} delta={delta}");
                }
            }
        }
    }
}
