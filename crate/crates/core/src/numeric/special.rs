use libm::erfc;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-u} / u du` for `x > 0`.
///
/// Power series below 1, Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = -x.ln() - EULER_GAMMA;
        let mut fact = 1.0;
        for i in 1..200 {
            let i = i as f64;
            fact *= -x / i;
            let term = -fact / i;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < f64::EPSILON {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma function at shape 1/2: `Γ(1/2, x) = √π erfc(√x)`.
pub fn upper_gamma_half(x: f64) -> f64 {
    std::f64::consts::PI.sqrt() * erfc(x.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integrate_to_infinity, QuadOptions};

    #[test]
    fn e1_matches_quadrature_on_both_branches() {
        for &x in &[0.01, 0.3, 0.999, 1.0, 1.5, 4.0, 20.0] {
            let oracle = integrate_to_infinity(|u| (-u).exp() / u, x, QuadOptions::with_tolerances(1e-30, 1e-14))
                .unwrap()
                .value;
            let got = exp_integral_e1(x);
            assert!((got - oracle).abs() <= 1e-12 * oracle, "x={x}: {got} vs {oracle}");
        }
    }

    #[test]
    fn e1_reference_value() {
        // E1(1) = 0.219383934395520...
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
    }

    #[test]
    fn gamma_half_limits() {
        assert!((upper_gamma_half(0.0) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        let oracle = integrate_to_infinity(|t| t.powf(-0.5) * (-t).exp(), 2.0, QuadOptions::with_tolerances(1e-16, 1e-14))
            .unwrap()
            .value;
        assert!((upper_gamma_half(2.0) - oracle).abs() < 1e-12, "{} vs {oracle}", upper_gamma_half(2.0));
    }
}
