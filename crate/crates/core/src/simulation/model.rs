//! The reference model: `X ~ Gamma(3, 1)` and, given `X = x`, `H` triangular
//! on `[0, x]` with density `2(x − h)/x²`. Joint density `f(x, h) = (x − h)e^{-x}`.
//!
//! Its observable law on the section is
//!
//! ```text
//! g(z, h) = (8/15) e^{-z} (1/2 + z − h)            for h < z
//! g(z, h) = 8/(15√π) e^{-z} k(h − z)               for h ≥ z
//! k(a)    = (1/2 − a) Γ(1/2, a) + √a e^{-a}
//! g_Z(z)  = (4/15)(z² + z + 3/4) e^{-z}
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotics::{covariance_nu2, CovarianceMoments, VarianceForm};
use crate::error::Result;
use crate::numeric::{exp_integral_e1, integrate, integrate_to_infinity, upper_gamma_half, QuadOptions};

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-13,
    rel_tol: 1e-12,
    max_segments: 4000,
};

/// `E_f[√X] = Γ(7/2)/Γ(3)`.
pub fn mean_radius() -> f64 {
    15.0 * PI.sqrt() / 16.0
}

/// Marginal density of `Z` on the section.
pub fn g_z(z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    4.0 / 15.0 * (z * z + z + 0.75) * (-z).exp()
}

/// `1 − G_Z(z)`.
pub fn survival_z(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    4.0 / 15.0 * (-z).exp() * (z * z + 3.0 * z + 3.75)
}

pub fn cdf_z(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    // 1 − S(z) loses digits near 0; expand e^{-z}(z² + 3z + 15/4) there.
    if z < 0.5 {
        let em1 = (-z).exp_m1();
        -4.0 / 15.0 * (em1 * (z * z + 3.0 * z + 3.75) + z * z + 3.0 * z)
    } else {
        1.0 - survival_z(z)
    }
}

/// `k(a) = (1/2 − a) Γ(1/2, a) + √a e^{-a}`, the shape of the `h ≥ z` branch.
pub fn tail_kernel(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.5 * PI.sqrt();
    }
    (0.5 - a) * upper_gamma_half(a) + a.sqrt() * (-a).exp()
}

/// Joint density of `(Z, H)` on the section.
pub fn g_joint(z: f64, h: f64) -> f64 {
    if z <= 0.0 || h < 0.0 {
        return 0.0;
    }
    if h < z {
        8.0 / 15.0 * (-z).exp() * (0.5 + z - h)
    } else {
        8.0 / (15.0 * PI.sqrt()) * (-z).exp() * tail_kernel(h - z)
    }
}

/// Joint density of `(X, H)`.
pub fn f_joint(x: f64, h: f64) -> f64 {
    if h < 0.0 || h > x {
        return 0.0;
    }
    (x - h) * (-x).exp()
}

/// CDF of the volume `πXH` under `f`.
pub fn analytic_f_v(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let s = (v / PI).sqrt();
    let bracket = 1.0 + s - 0.5 * s * s + 0.5 * s * s * s;
    let ei = exp_integral_e1(s);
    let tail = 0.5 * s.powi(4) * ei;
    (1.0 - bracket * (-s).exp() + if tail.is_finite() { tail } else { 0.0 }).clamp(0.0, 1.0)
}

/// `∫₀^∞ aᵏ k(a) da`, with `a = s²` to smooth the origin.
fn tail_kernel_moment(k: i32) -> Result<f64> {
    let r = integrate_to_infinity(|s| 2.0 * s.powi(2 * k + 1) * tail_kernel(s * s), 0.0, QUAD)?;
    Ok(r.value)
}

/// `∫ hʲ g(0, h) dh` under the reference model.
pub fn true_xi(j: u32) -> Result<f64> {
    Ok(8.0 / (15.0 * PI.sqrt()) * tail_kernel_moment(j as i32)?)
}

/// Moments of the observable law that enter the covariance variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableTruth {
    /// `E_g[Z^{-1/2}]`
    pub inv_sqrt_z: f64,
    /// `E_g[Z^{-1/2} H]`
    pub inv_sqrt_z_h: f64,
    /// `E_g[H]`
    pub h: f64,
    pub xi: [f64; 3],
}

fn binomial(j: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (j - i) as f64 / (i + 1) as f64)
}

impl ObservableTruth {
    pub fn compute() -> Result<Self> {
        let kk = [tail_kernel_moment(0)?, tail_kernel_moment(1)?];
        // ∫ hʲ g(z, h) dh for j ≤ 1: the h < z branch is a polynomial, the
        // h ≥ z branch shifts the kernel moments.
        let inner = |z: f64, j: u32| -> f64 {
            let c = 0.5 + z;
            let jf = j as f64;
            let below = c * z.powf(jf + 1.0) / (jf + 1.0) - z.powf(jf + 2.0) / (jf + 2.0);
            let above: f64 = (0..=j).map(|k| binomial(j, k) * z.powi((j - k) as i32) * kk[k as usize]).sum();
            (-z).exp() * (8.0 / 15.0 * below + 8.0 / (15.0 * PI.sqrt()) * above)
        };
        // z = w² absorbs the z^{-1/2} weight.
        let inv_sqrt_z = integrate_to_infinity(|w| 2.0 * inner(w * w, 0), 0.0, QUAD)?.value;
        let inv_sqrt_z_h = integrate_to_infinity(|w| 2.0 * inner(w * w, 1), 0.0, QUAD)?.value;
        let h = integrate_to_infinity(|w| 2.0 * w * inner(w * w, 1), 0.0, QUAD)?.value;
        Ok(Self {
            inv_sqrt_z,
            inv_sqrt_z_h,
            h,
            xi: [true_xi(0)?, true_xi(1)?, true_xi(2)?],
        })
    }
}

/// `E_f[X^a H^b]` by quadrature over `f`; the inner `h` integral is exact.
pub fn f_moment(a: f64, b: i32) -> Result<f64> {
    let bf = b as f64;
    let scale = 1.0 / ((bf + 1.0) * (bf + 2.0));
    // x = w²
    let r = integrate_to_infinity(
        |w| {
            let x = w * w;
            2.0 * w * x.powf(a + bf + 2.0) * (-x).exp()
        },
        0.0,
        QUAD,
    )?;
    Ok(scale * r.value)
}

/// `Cov_f(√X, H)`.
pub fn true_covariance() -> Result<f64> {
    Ok(f_moment(0.5, 1)? - f_moment(0.5, 0)? * f_moment(0.0, 1)?)
}

/// Asymptotic variance of the covariance estimator from the observable law.
pub fn true_nu2() -> Result<f64> {
    true_nu2_with(VarianceForm::AsPrinted)
}

pub fn true_nu2_with(form: VarianceForm) -> Result<f64> {
    let t = ObservableTruth::compute()?;
    Ok(covariance_nu2(
        &CovarianceMoments {
            inv_sqrt_z: t.inv_sqrt_z,
            inv_sqrt_z_h: t.inv_sqrt_z_h,
            h: t.h,
            xi: t.xi,
        },
        form,
    ))
}

/// The same variance written through moments of `f`.
pub fn true_nu2_f_side() -> Result<f64> {
    let m = f_moment(0.5, 0)?;
    let eh = f_moment(0.0, 1)?;
    let a = f_moment(0.5, 1)?;
    let e0 = f_moment(-0.5, 0)?;
    let e1 = f_moment(-0.5, 1)?;
    let e2 = f_moment(-0.5, 2)?;
    let braces = e0 * (4.0 * m * m * eh * eh - 4.0 * eh * a * m + a * a) + 2.0 * e1 * (a * m - eh * m * m) + e2 * m * m;
    Ok((2.0 / PI).powi(2) * 0.5 * m * braces)
}

/// `τ_q(0) = ∫ g(q(h; t), h) dh` for the volume threshold `q = t/(πh)`.
pub fn true_tau_volume(t: f64) -> Result<f64> {
    // Split where the branch changes: q(h) = h  ⟺  h = √(t/π).
    let kink = (t / PI).sqrt();
    let f = |h: f64| if h > 0.0 { g_joint(t / (PI * h), h) } else { 0.0 };
    Ok(integrate(f, 0.0, kink, QUAD)?.value + integrate_to_infinity(f, kink, QUAD)?.value)
}
