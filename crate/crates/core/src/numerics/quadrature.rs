//! Adaptive Gauss–Kronrod quadrature.
//!
//! The 21-point Kronrod extension of the 10-point Gauss rule is applied on
//! each subinterval; the interval with the largest error estimate is bisected
//! until the global estimate meets the tolerance. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `x = a + s / (1 - s)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{FppError, Result};

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub est_abs_error: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub(crate) fn zero() -> Self {
        QuadratureResult {
            value: 0.0,
            est_abs_error: 0.0,
            evaluations: 0,
        }
    }

    pub(crate) fn accumulate(&mut self, other: QuadratureResult) {
        self.value += other.value;
        self.est_abs_error += other.est_abs_error;
        self.evaluations += other.evaluations;
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (the embedded 10-point rule).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gauss_kronrod_21<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FppError::NonFiniteIntegrand(x))
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let abs_half = half.abs();
    Ok((
        res_k * half,
        rescale_error(err, res_abs * abs_half, res_asc * abs_half),
    ))
}

/// Settings for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_subdivisions: 400,
        }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Integrate a fallible integrand over a finite interval.
    pub fn try_integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if a == b {
            return Ok(QuadratureResult::zero());
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(FppError::Domain(format!(
                "finite integration bounds expected, got [{a}, {b}]"
            )));
        }
        let (v, e) = gauss_kronrod_21(&mut f, a, b)?;
        let mut evaluations = 21;
        let mut total = v;
        let mut total_err = e;
        let mut heap = BinaryHeap::new();
        heap.push(Segment {
            a,
            b,
            value: v,
            error: e,
        });
        let mut subdivisions = 0;
        while total_err > self.target(total) {
            if subdivisions >= self.max_subdivisions {
                return Err(FppError::Quadrature {
                    value: total,
                    est_abs_error: total_err,
                    evaluations,
                });
            }
            let worst = heap.pop().expect("heap holds at least one segment");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
                // interval exhausted at machine precision
                return Err(FppError::Quadrature {
                    value: total,
                    est_abs_error: total_err,
                    evaluations,
                });
            }
            let (v1, e1) = gauss_kronrod_21(&mut f, worst.a, mid)?;
            let (v2, e2) = gauss_kronrod_21(&mut f, mid, worst.b)?;
            evaluations += 42;
            subdivisions += 1;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Segment {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
            if subdivisions % 64 == 0 {
                // refresh the running sums to shed accumulated rounding
                total = heap.iter().map(|s| s.value).sum();
                total_err = heap.iter().map(|s| s.error).sum();
            }
        }
        Ok(QuadratureResult {
            value: total,
            est_abs_error: total_err.max(0.0),
            evaluations,
        })
    }

    /// Integrate over `[a, +inf)` through the map `x = a + s / (1 - s)`.
    pub fn try_integrate_to_infinity<F>(&self, mut f: F, a: f64) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        check_tail_decay(&mut f, a)?;
        self.try_integrate(
            |s| {
                let one_minus = 1.0 - s;
                let x = a + s / one_minus;
                if !x.is_finite() {
                    return Ok(0.0);
                }
                Ok(f(x)? / (one_minus * one_minus))
            },
            0.0,
            1.0,
        )
    }

    /// Integrate over `[a, b]` with graded substitutions at both ends.
    ///
    /// The halves are mapped with `x = a + (m - a) w^p` and
    /// `x = b - (b - m) w^q`, which flattens integrable power-law
    /// singularities and cusps sitting at the endpoints. The integrand
    /// receives `(x, x - a, b - x)`; the distance to the nearer endpoint is
    /// exact even where `x` itself rounds onto that endpoint.
    pub fn try_integrate_graded<F>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        p_left: u32,
        p_right: u32,
    ) -> Result<QuadratureResult>
    where
        F: FnMut(f64, f64, f64) -> Result<f64>,
    {
        if a == b {
            return Ok(QuadratureResult::zero());
        }
        let len = b - a;
        let half = 0.5 * len;
        let half_tol = Quadrature {
            abs_tol: 0.5 * self.abs_tol,
            ..*self
        };
        let mut out = QuadratureResult::zero();
        let left = half_tol.try_integrate(
            |w| {
                let (d, jac) = graded(half, w, p_left);
                if jac == 0.0 {
                    return Ok(0.0);
                }
                Ok(f(a + d, d, len - d)? * jac)
            },
            0.0,
            1.0,
        )?;
        out.accumulate(left);
        let right = half_tol.try_integrate(
            |w| {
                let (d, jac) = graded(half, w, p_right);
                if jac == 0.0 {
                    return Ok(0.0);
                }
                Ok(f(b - d, len - d, d)? * jac)
            },
            0.0,
            1.0,
        )?;
        out.accumulate(right);
        Ok(out)
    }

    /// Integrate across consecutive breakpoints, which must be sorted.
    /// Empty or reversed pieces are skipped.
    pub fn try_integrate_pieces<F>(&self, mut f: F, points: &[f64]) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut out = QuadratureResult::zero();
        for w in points.windows(2) {
            if w[1] > w[0] {
                out.accumulate(self.try_integrate(&mut f, w[0], w[1])?);
            }
        }
        Ok(out)
    }

    /// Infallible convenience wrapper around [`Quadrature::try_integrate`].
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> f64,
    {
        self.try_integrate(|x| Ok(f(x)), a, b)
    }
}

// Offset `span w^p` from the anchor and its Jacobian.
#[inline]
fn graded(span: f64, w: f64, p: u32) -> (f64, f64) {
    if p <= 1 {
        return (span * w, span);
    }
    let wp1 = w.powi(p as i32 - 1);
    (span * wp1 * w, span * p as f64 * wp1)
}

// The integrand times x must not grow along a geometric sweep of the tail.
fn check_tail_decay<F>(f: &mut F, a: f64) -> Result<()>
where
    F: FnMut(f64) -> Result<f64>,
{
    let base = a.abs().max(1.0);
    let probes: Vec<f64> = [1e4, 1e6, 1e8]
        .iter()
        .map(|s| {
            let x = a + base * s;
            f(x).map(|v| (v * x).abs())
        })
        .collect::<Result<_>>()?;
    if probes[2] > probes[1] && probes[1] > probes[0] && probes[2] > 1e-6 {
        return Err(FppError::Domain(
            "integrand does not decay on the semi-infinite range".into(),
        ));
    }
    Ok(())
}

/// Integrate `f` over `[a, b]`, where `b` may be `f64::INFINITY`, to an
/// absolute tolerance `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(FppError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(a < b) {
        return Err(FppError::Domain(format!("expected a < b, got [{a}, {b}]")));
    }
    let rule = Quadrature::new(tol).with_max_subdivisions(1000);
    if b == f64::INFINITY {
        rule.try_integrate_to_infinity(|x| Ok(f(x)), a)
    } else {
        rule.try_integrate(|x| Ok(f(x)), a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        for deg in 0..=20 {
            let r = integrate(|x| x.powi(deg), 0.0, 1.0, 1e-13).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((r.value - exact).abs() <= 1e-12, "degree {deg}: {}", r.value);
            assert_eq!(r.evaluations, 21);
        }
    }

    #[test]
    fn square_on_unit_interval() {
        let r = integrate(|x| x * x, 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_to_infinity() {
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn graded_rule_handles_inverse_square_root() {
        let q = Quadrature::new(1e-12);
        let r = q
            .try_integrate_graded(|x, _, _| Ok(1.0 / x.sqrt()), 0.0, 1.0, 4, 1)
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-11, "{}", r.value);
        // x^{-3/4} needs p >= 4 for a bounded transformed integrand
        let r = q
            .try_integrate_graded(|_, _, r| Ok(r.powf(-0.75)), 0.0, 1.0, 1, 4)
            .unwrap();
        assert!((r.value - 4.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn non_decaying_tail_is_rejected() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-8).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let q = Quadrature::new(1e-15).with_max_subdivisions(3);
        let err = q
            .integrate(|x| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0)
            .unwrap_err();
        match err {
            FppError::Quadrature { est_abs_error, .. } => assert!(est_abs_error > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_integrand_is_an_error() {
        let q = Quadrature::default();
        assert!(matches!(
            q.integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0),
            Err(FppError::NonFiniteIntegrand(_))
        ));
    }
}
