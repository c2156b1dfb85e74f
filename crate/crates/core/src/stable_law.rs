//! The totally skewed stable law with index `β < 1`.
//!
//! The standard variable `S` has Laplace transform `E[e^{-sS}] = e^{-s^β}`.
//! Its cdf comes from the Zolotarev/Kanter angular representation
//!
//! ```text
//! P(S ≤ x) = (1/π) ∫_0^π exp(-A(φ) x^{-β/(1-β)}) dφ,
//! A(φ) = sin(βφ)^{β/(1-β)} sin((1-β)φ) / sin(φ)^{1/(1-β)}.
//! ```
//!
//! `A` increases from `A(0) = (1-β) β^{β/(1-β)}` to infinity, so the
//! integrand is smooth, bounded and free of oscillation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{FppError, Result};
use crate::numerics::Quadrature;
use crate::special_functions::FractionalOrder;

/// Exponent past which `exp(-A(0) z)` is below the cdf noise floor.
const ZERO_CUTOFF: f64 = 33.0;

/// One-sided stable law with skewness 1, location 0 and the given scale
/// in the usual (S1) parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableSpec {
    beta: FractionalOrder,
    scale: f64,
}

impl StableSpec {
    pub fn new(beta: FractionalOrder, scale: f64) -> Result<Self> {
        if beta.is_exponential() {
            return Err(FppError::Domain(
                "the one-sided stable law needs beta < 1".into(),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FppError::Domain(format!("scale must be positive, got {scale}")));
        }
        Ok(StableSpec { beta, scale })
    }

    /// The law of the subordinator at operational time `u`, with Laplace
    /// transform `e^{-u s^β}`: scale `(u cos(πβ/2))^{1/β}`.
    pub fn for_weight(beta: FractionalOrder, u: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(FppError::Domain(format!("weight must be positive, got {u}")));
        }
        let b = beta.value();
        StableSpec::new(beta, (u * (0.5 * PI * b).cos()).powf(1.0 / b))
    }

    pub fn beta(&self) -> FractionalOrder {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn skewness(&self) -> f64 {
        1.0
    }

    pub fn location(&self) -> f64 {
        0.0
    }

    /// Scale of the standard variable with transform `e^{-s^β}`.
    fn unit_scale(beta: f64) -> f64 {
        (0.5 * PI * beta).cos().powf(1.0 / beta)
    }
}

fn ln_a0(beta: f64) -> f64 {
    (1.0 - beta).ln() + beta / (1.0 - beta) * beta.ln()
}

fn ln_kanter(beta: f64, phi: f64) -> f64 {
    let r = 1.0 / (1.0 - beta);
    beta * r * (beta * phi).sin().ln() + ((1.0 - beta) * phi).sin().ln() - r * phi.sin().ln()
}

/// `P(S ≤ x)` for the standard variable.
pub(crate) fn unit_cdf(beta: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let ln_z = -beta / (1.0 - beta) * x.ln();
    if ln_a0(beta) + ln_z > ZERO_CUTOFF.ln() {
        return Ok(0.0);
    }
    // Break the angle range where A(φ) z crosses a few levels so the
    // transition layer cannot hide between quadrature nodes. For small z it
    // sits close to φ = π and is very thin.
    let mut points = vec![0.0, PI];
    for level in [-30.0f64, -20.0, -12.0, -7.0, -3.0, 0.0, 1.5, 3.7] {
        if let Some(phi) = kanter_level(beta, level - ln_z) {
            points.push(phi);
        }
    }
    points.sort_by(|a, b| a.total_cmp(b));
    let rule = Quadrature::new(1e-13).with_max_subdivisions(400);
    let r = if ln_a0(beta) + ln_z < 0.0 {
        // mostly near 1: integrate the deficit 1 - exp(-A z)
        let d = rule.try_integrate_pieces(
            |phi| {
                let e = ln_kanter(beta, phi) + ln_z;
                Ok(if e > 700.0 { 1.0 } else { -(-e.exp()).exp_m1() })
            },
            &points,
        )?;
        1.0 - d.value / PI
    } else {
        let g = rule.try_integrate_pieces(
            |phi| {
                let e = ln_kanter(beta, phi) + ln_z;
                Ok(if e > 700.0 { 0.0 } else { (-e.exp()).exp() })
            },
            &points,
        )?;
        g.value / PI
    };
    Ok(r.clamp(0.0, 1.0))
}

// Angle where ln A(φ) equals `target`, if inside (0, π). ln A increases.
fn kanter_level(beta: f64, target: f64) -> Option<f64> {
    if target <= ln_a0(beta) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ln_kanter(beta, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi = 0.5 * (lo + hi);
    (phi > 0.0 && phi < PI).then_some(phi)
}

/// Weights `u` above this give `F_S(t; u) = 0` under the cutoff.
pub(crate) fn zero_weight_threshold(beta: f64, t: f64) -> f64 {
    ((ZERO_CUTOFF.ln() - ln_a0(beta)) * (1.0 - beta)).exp() * t.powf(beta)
}

/// `P(S ≤ t)` for the law described by `spec`.
pub fn stable_cdf(spec: &StableSpec, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(FppError::Domain(format!("t must be finite, got {t}")));
    }
    let b = spec.beta.value();
    unit_cdf(b, t * StableSpec::unit_scale(b) / spec.scale)
}

/// `F_S(t; u)`: the cdf of the stable subordinator at operational time `u`.
pub fn stable_cdf_for_weight(beta: FractionalOrder, u: f64, t: f64) -> Result<f64> {
    stable_cdf(&StableSpec::for_weight(beta, u)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    fn order(b: f64) -> FractionalOrder {
        FractionalOrder::new(b).unwrap()
    }

    #[test]
    fn levy_closed_form() {
        // β = 1/2 with transform e^{-u √s}: P(S ≤ t) = erfc(u / (2√t))
        let cases = [
            (1.0, 4.0, 0.723_673_609_831_763_067_0),
            (1.0, 1.0, 0.479_500_122_186_953_462_3),
            (2.0, 0.3, 0.009_823_274_507_519_247_990),
            (0.5, 10.0, 0.910_979_292_510_633_981_9),
        ];
        for (u, t, exact) in cases {
            let v = stable_cdf_for_weight(order(0.5), u, t).unwrap();
            assert!((v - exact).abs() < 1e-12, "u={u} t={t}: {v} vs {exact}");
        }
    }

    #[test]
    fn support_and_limits() {
        assert_eq!(stable_cdf_for_weight(order(0.9), 5.0, 0.0).unwrap(), 0.0);
        assert!(stable_cdf_for_weight(order(0.5), 1.0, 1e-9).unwrap() < 1e-14);
        assert!(stable_cdf_for_weight(order(0.5), 1e-8, 1.0).unwrap() > 1.0 - 1e-8);
        // the upper tail decays like u t^{-β} / Γ(1-β)
        let tail = 1.0 - stable_cdf_for_weight(order(0.75), 2.0, 1e4).unwrap();
        let law = 2.0 * 1e4f64.powf(-0.75) / gamma(0.25);
        assert!((tail / law - 1.0).abs() < 0.02, "{tail} vs {law}");
        assert!(stable_cdf_for_weight(order(0.75), 2.0, 1e12).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn thin_layer_near_one() {
        // reference values from the convergent tail series at 30 digits
        let beta = order(0.9);
        let cases = [
            (0.001, 0.999_975_301_481_725_839_8),
            (0.01, 0.999_752_581_188_048_847_5),
            (1.0, 0.969_469_604_811_905_298_1),
        ];
        for (u, want) in cases {
            let v = stable_cdf_for_weight(beta, u, 5.0).unwrap();
            assert!((v - want).abs() < 1e-12, "u={u}: {v} vs {want}");
        }
    }

    #[test]
    fn rejects_exponential_order() {
        assert!(StableSpec::for_weight(order(1.0), 1.0).is_err());
        assert!(StableSpec::new(order(0.5), 0.0).is_err());
    }

    #[test]
    fn cutoff_is_below_noise() {
        for &b in &[0.25, 0.5, 0.75, 0.9] {
            let t = 1.0;
            let u = zero_weight_threshold(b, t);
            let just_inside = unit_cdf(b, t * (0.999 * u).powf(-1.0 / b)).unwrap();
            assert!(just_inside < 1e-13, "beta={b}: {just_inside}");
        }
    }

    proptest! {
        #[test]
        fn monotone_in_t(b in 0.1f64..0.95, u in 0.05f64..5.0, t0 in 0.01f64..3.0) {
            let beta = order(b);
            let mut prev = 0.0;
            for i in 0..12 {
                let t = t0 * 1.6f64.powi(i);
                let v = stable_cdf_for_weight(beta, u, t).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }

        #[test]
        fn self_similar(b in 0.1f64..0.95, gamma in 0.1f64..10.0, t in 0.01f64..20.0) {
            let beta = order(b);
            let scaled = stable_cdf(&StableSpec::new(beta, gamma).unwrap(), t).unwrap();
            let unit = stable_cdf(&StableSpec::new(beta, 1.0).unwrap(), t / gamma).unwrap();
            prop_assert!((scaled - unit).abs() < 1e-8);
        }
    }
}
