//! Boundary functionals, asymptotic variances and confidence intervals.
//!
//! All estimators converge at rate `δₙ = √(ln n / n)`. Variances are
//! assembled from empirical means of the observables and from window
//! estimates of the observable density at `z = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ObservationSet, QuantityKind};
use crate::isotonic::IsotonicEstimate;
use crate::plugin::{height_cdf_weighted, n_tilde, ObservableMeans};

/// Windows holding fewer observations than this are flagged.
pub const LOW_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthScale {
    /// `bₙ = c_b · median(Z) · n^{-1/3}`.
    MedianZ,
    /// `bₙ = c_b · n^{-1/3}` in the units of `Z`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthConfig {
    pub c_b: f64,
    pub scale: BandwidthScale,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        Self {
            c_b: 1.0,
            scale: BandwidthScale::MedianZ,
        }
    }
}

impl BandwidthConfig {
    pub fn new(c_b: f64, scale: BandwidthScale) -> Result<Self> {
        if !(c_b.is_finite() && c_b > 0.0) {
            return Err(Error::Config(format!("bandwidth constant must be positive, got {c_b}")));
        }
        Ok(Self { c_b, scale })
    }

    pub fn bandwidth(&self, obs: &ObservationSet) -> f64 {
        let n = obs.len() as f64;
        let scale = match self.scale {
            BandwidthScale::Absolute => 1.0,
            BandwidthScale::MedianZ => median(obs.iter().map(|o| o.z).collect()),
        };
        self.c_b * scale * n.powf(-1.0 / 3.0)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A window estimate together with the number of observations it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEstimate {
    pub value: f64,
    pub window_count: usize,
    pub bandwidth: f64,
}

impl BoundaryEstimate {
    pub fn low_count(&self) -> bool {
        self.window_count < LOW_COUNT
    }

    fn warn_if_low(self, what: &str) -> Self {
        if self.low_count() {
            warn!(
                "{what}: only {} observations in window of width {:.4e}",
                self.window_count, self.bandwidth
            );
        }
        self
    }
}

fn require_two(obs: &ObservationSet) -> Result<()> {
    if obs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: obs.len(),
        });
    }
    Ok(())
}

/// `ξ̂ʲ = (bₙ n)^{-1} Σ Hᵢʲ 1[Zᵢ ≤ bₙ]`, estimating `∫ hʲ g(0, h) dh`.
pub fn xi_hat(obs: &ObservationSet, j: u32, bw: &BandwidthConfig) -> Result<BoundaryEstimate> {
    require_two(obs)?;
    if j > 2 {
        return Err(Error::Domain(format!("ξ index must be 0, 1 or 2, got {j}")));
    }
    let b = bw.bandwidth(obs);
    let mut count = 0;
    let mut sum = 0.0;
    for o in obs.iter().filter(|o| o.z <= b) {
        count += 1;
        sum += o.h.powi(j as i32);
    }
    Ok(BoundaryEstimate {
        value: sum / (b * obs.len() as f64),
        window_count: count,
        bandwidth: b,
    }
    .warn_if_low("boundary moment"))
}

/// `τ̂_q(0) = (2bₙ n)^{-1} Σ 1[|Zᵢ − q(Hᵢ; t)| ≤ bₙ]`, the density of
/// `Z − q(H; t)` at zero.
pub fn tau_hat(obs: &ObservationSet, kind: QuantityKind, t: f64, bw: &BandwidthConfig) -> Result<BoundaryEstimate> {
    require_two(obs)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t = {t}")));
    }
    let b = bw.bandwidth(obs);
    let count = obs.iter().filter(|o| (o.z - kind.q_raw(o.h, t)).abs() <= b).count();
    Ok(BoundaryEstimate {
        value: count as f64 / (2.0 * b * obs.len() as f64),
        window_count: count,
        bandwidth: b,
    }
    .warn_if_low("threshold density"))
}

/// The boundary window split by height: `below` estimates `∫₀ʰ g(0, y) dy`
/// (observations with `H < h`), `above` the remainder. The two add up to `ξ̂⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightWindows {
    pub below: BoundaryEstimate,
    pub above: BoundaryEstimate,
}

pub fn height_windows(obs: &ObservationSet, h: f64, bw: &BandwidthConfig) -> Result<HeightWindows> {
    require_two(obs)?;
    let b = bw.bandwidth(obs);
    let scale = 1.0 / (b * obs.len() as f64);
    let (below, above) = obs
        .iter()
        .filter(|o| o.z <= b)
        .fold((0usize, 0usize), |(lo, hi), o| if o.h < h { (lo + 1, hi) } else { (lo, hi + 1) });
    let est = |count: usize| BoundaryEstimate {
        value: count as f64 * scale,
        window_count: count,
        bandwidth: b,
    };
    if below + above < LOW_COUNT {
        warn!("height windows: only {} observations near z = 0", below + above);
    }
    Ok(HeightWindows {
        below: est(below),
        above: est(above),
    })
}

/// Which algebraic form of a variance to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceForm {
    /// The published expression.
    #[default]
    AsPrinted,
    /// First-order expansion of the estimator, re-derived.
    DeltaMethod,
}

/// Population-level inputs to the covariance variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMoments {
    /// `E_g[Z^{-1/2}]`
    pub inv_sqrt_z: f64,
    /// `E_g[Z^{-1/2} H]`
    pub inv_sqrt_z_h: f64,
    /// `E_g[H]`
    pub h: f64,
    /// `ξ⁰, ξ¹, ξ²`
    pub xi: [f64; 3],
}

/// `ν²` for the covariance estimator as a function of observable moments.
pub fn covariance_nu2(m: &CovarianceMoments, form: VarianceForm) -> f64 {
    let (u, v, eh) = (m.inv_sqrt_z, m.inv_sqrt_z_h, m.h);
    let [x0, x1, x2] = m.xi;
    let r = v / u;
    let cross = match form {
        VarianceForm::AsPrinted => eh - r,
        VarianceForm::DeltaMethod => eh - 2.0 * r,
    };
    let braces = x0 * (4.0 * r * r - 4.0 * r * eh + eh * eh) + 2.0 * x1 * cross + x2;
    FRAC_PI_2 * FRAC_PI_2 * braces / u.powi(4)
}

fn xi_triplet(obs: &ObservationSet, bw: &BandwidthConfig) -> Result<[f64; 3]> {
    Ok([
        xi_hat(obs, 0, bw)?.value,
        xi_hat(obs, 1, bw)?.value,
        xi_hat(obs, 2, bw)?.value,
    ])
}

/// Plug-in `ν̂²` for the covariance between radius and height.
pub fn var_covariance(obs: &ObservationSet, bw: &BandwidthConfig) -> Result<f64> {
    var_covariance_with(obs, bw, VarianceForm::AsPrinted)
}

pub fn var_covariance_with(obs: &ObservationSet, bw: &BandwidthConfig, form: VarianceForm) -> Result<f64> {
    require_two(obs)?;
    let means = ObservableMeans::of(obs);
    let m = CovarianceMoments {
        inv_sqrt_z: means.inv_sqrt_z,
        inv_sqrt_z_h: means.inv_sqrt_z_h,
        h: means.h,
        xi: xi_triplet(obs, bw)?,
    };
    Ok(covariance_nu2(&m, form))
}

/// Moments with a tabulated asymptotic variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRow {
    Radius,
    SquaredRadius,
    Height,
    Volume,
    SurfaceArea,
}

impl MomentRow {
    pub const ALL: [MomentRow; 5] = [
        MomentRow::Radius,
        MomentRow::SquaredRadius,
        MomentRow::Height,
        MomentRow::Volume,
        MomentRow::SurfaceArea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MomentRow::Radius => "radius",
            MomentRow::SquaredRadius => "squared_radius",
            MomentRow::Height => "height",
            MomentRow::Volume => "volume",
            MomentRow::SurfaceArea => "surface_area",
        }
    }
}

/// `ν̂²` for the moment estimator of `row`.
pub fn var_moment(obs: &ObservationSet, row: MomentRow, bw: &BandwidthConfig) -> Result<f64> {
    require_two(obs)?;
    let m = ObservableMeans::of(obs);
    let xi = match row {
        MomentRow::Height => xi_triplet(obs, bw)?,
        _ => [xi_hat(obs, 0, bw)?.value, 0.0, 0.0],
    };
    Ok(moment_nu2(&m, row, xi))
}

pub(crate) fn moment_nu2(m: &ObservableMeans, row: MomentRow, xi: [f64; 3]) -> f64 {
    let u = m.inv_sqrt_z;
    let u4 = u.powi(4);
    let [x0, x1, x2] = xi;
    match row {
        MomentRow::Radius => FRAC_PI_2 * FRAC_PI_2 * x0 / u4,
        MomentRow::SquaredRadius => 4.0 * x0 * m.sqrt_z * m.sqrt_z / u4,
        MomentRow::Height => {
            let v = m.inv_sqrt_z_h;
            (x0 * v * v - 2.0 * x1 * v * u + x2 * u * u) / u4
        }
        MomentRow::Volume => 4.0 * PI * PI * x0 * m.sqrt_z_h * m.sqrt_z_h / u4,
        MomentRow::SurfaceArea => {
            let c = 4.0 * PI * m.sqrt_z + PI * PI * m.h;
            x0 * c * c / u4
        }
    }
}

/// `(N(0)² τ + N(t)² ξ⁰) / N(0)⁴`, the plug-in CDF variance. The isotonic
/// variance is half of this.
pub fn cdf_variance(n0: f64, nt: f64, tau: f64, xi0: f64) -> f64 {
    (n0 * n0 * tau + nt * nt * xi0) / n0.powi(4)
}

/// `ν̂²` of the plug-in CDF at `t`, using `Ñₙ(0)` and `Ñₙ(t)`.
pub fn var_cdf_plugin(obs: &ObservationSet, kind: QuantityKind, t: f64, bw: &BandwidthConfig) -> Result<f64> {
    let n0 = n_tilde(obs, kind, 0.0)?;
    let nt = n_tilde(obs, kind, t)?;
    let tau = tau_hat(obs, kind, t, bw)?.value;
    let xi0 = xi_hat(obs, 0, bw)?.value;
    Ok(cdf_variance(n0, nt, tau, xi0))
}

/// `ν̂²` of the isotonic CDF at `t`, using `N̂ₙ(0)` and `N̂ₙ(t)`.
pub fn var_cdf_isotonic(est: &IsotonicEstimate, obs: &ObservationSet, t: f64, bw: &BandwidthConfig) -> Result<f64> {
    let tau = tau_hat(obs, est.kind(), t, bw)?.value;
    let xi0 = xi_hat(obs, 0, bw)?.value;
    Ok(0.5 * cdf_variance(est.n_hat_zero(), est.n_hat(t), tau, xi0))
}

/// `ν̂²` of the weighted height CDF at `h`.
pub fn var_height_cdf(obs: &ObservationSet, h: f64, bw: &BandwidthConfig) -> Result<f64> {
    var_height_cdf_with(obs, h, bw, VarianceForm::AsPrinted)
}

pub fn var_height_cdf_with(obs: &ObservationSet, h: f64, bw: &BandwidthConfig, form: VarianceForm) -> Result<f64> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::Domain(format!("h = {h}")));
    }
    let w = height_windows(obs, h, bw)?;
    let f = height_cdf_weighted(obs, h);
    let m = ObservableMeans::of(obs).inv_sqrt_z;
    let (a, b) = match form {
        VarianceForm::AsPrinted => (f, 1.0 - f),
        VarianceForm::DeltaMethod => (f * f, (1.0 - f) * (1.0 - f)),
    };
    Ok((a * w.above.value + b * w.below.value) / (m * m))
}

/// `√(ln n / n)`.
pub fn rate(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub nu2: f64,
    pub half_width: f64,
    pub n: usize,
}

impl EstimateWithCI {
    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }
}

/// 95% interval `estimate ± 1.96 √(ν̂² ln n / n)`. A negative `ν̂²` is
/// clamped to zero with a warning.
pub fn ci(estimate: f64, nu2: f64, n: usize) -> Result<EstimateWithCI> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if nu2.is_nan() {
        return Err(Error::Domain("variance is NaN".into()));
    }
    let nu2 = if nu2 < 0.0 {
        warn!("negative variance estimate {nu2:.3e} clamped to 0");
        0.0
    } else {
        nu2
    };
    Ok(EstimateWithCI {
        estimate,
        nu2,
        half_width: 1.96 * nu2.sqrt() * rate(n),
        n,
    })
}

/// Pointwise 95% band for the isotonic CDF, clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub t: f64,
    pub f: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn isotonic_band(est: &IsotonicEstimate, obs: &ObservationSet, grid: &[f64], bw: &BandwidthConfig) -> Result<Vec<BandPoint>> {
    let xi0 = xi_hat(obs, 0, bw)?.value;
    let b = bw.bandwidth(obs);
    let n = obs.len();
    let n0 = est.n_hat_zero();
    grid.iter()
        .map(|&t| {
            let count = obs.iter().filter(|o| (o.z - est.kind().q_raw(o.h, t)).abs() <= b).count();
            let tau = count as f64 / (2.0 * b * n as f64);
            let nu2 = 0.5 * cdf_variance(n0, est.n_hat(t), tau, xi0);
            let f = est.cdf(t);
            let c = ci(f, nu2, n)?;
            Ok(BandPoint {
                t,
                f,
                lower: c.lower().max(0.0),
                upper: c.upper().min(1.0),
            })
        })
        .collect()
}
