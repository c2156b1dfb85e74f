//! One-point laws: inter-arrival distribution, epoch densities and the
//! counting distribution `P(N(t) = n)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{FppError, Result};
use crate::numerics::{gauss_legendre_5, Quadrature};
use crate::special_functions::{FractionalOrder, MittagLeffler, MlMethod};

/// Tail mass above which a [`CountingPmf`] is flagged as truncated too early.
pub const TAIL_WARNING: f64 = 1e-3;

// Below this argument the integrated-survival series is used for cell
// integrals; above it the survival function is smooth enough for Gauss.
const CELL_SERIES_LIMIT: f64 = 1.0;

/// Mittag-Leffler inter-arrival law `P(τ > t) = E_β(-t^β)`.
///
/// Cloning is cheap; the coefficient tables are shared.
#[derive(Debug, Clone)]
pub struct InterArrivalLaw {
    ml: Arc<MittagLeffler>,
}

impl InterArrivalLaw {
    pub fn new(beta: FractionalOrder) -> Self {
        InterArrivalLaw {
            ml: Arc::new(MittagLeffler::new(beta)),
        }
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        Ok(InterArrivalLaw::new(FractionalOrder::new(beta)?))
    }

    pub fn beta(&self) -> FractionalOrder {
        self.ml.order()
    }

    pub fn evaluator(&self) -> &MittagLeffler {
        &self.ml
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0) || t.is_nan() {
            return Err(FppError::Domain(format!("time must be >= 0, got {t}")));
        }
        Ok(())
    }

    /// `P(τ > t) = E_β(-t^β)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if t == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(self.ml.one_param(-t.powf(self.ml.beta()))?.value)
    }

    /// `P(τ ≤ t) = 1 - E_β(-t^β)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(t)?)
    }

    /// `f_τ(t) = t^{β-1} E_{β,β}(-t^β)`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let b = self.ml.beta();
        if self.beta().is_exponential() {
            return Ok((-t).exp());
        }
        if t == 0.0 {
            return Err(FppError::Domain(
                "the inter-arrival density diverges at t = 0 for beta < 1".into(),
            ));
        }
        if t == f64::INFINITY {
            return Ok(0.0);
        }
        let e = self.ml.two_param(-t.powf(b))?;
        Ok(t.powf(b - 1.0) * e.value)
    }

    /// Density of the `n`-th epoch `T_n`, the `n`-fold convolution of `f_τ`.
    pub fn epoch_pdf(&self, n: usize, t: f64) -> Result<f64> {
        if n == 0 {
            return Err(FppError::Domain(
                "T_0 = 0 is a point mass without a density".into(),
            ));
        }
        if n == 1 {
            return self.pdf(t);
        }
        Self::check_time(t)?;
        if t == 0.0 {
            let nb = n as f64 * self.ml.beta();
            return if nb > 1.0 {
                Ok(0.0)
            } else {
                Err(FppError::Domain(format!(
                    "the density of T_{n} diverges at t = 0"
                )))
            };
        }
        // f^{*n}(t) = (nβ / t) P(N(t) = n)
        let p = self.ml.poisson_weight(n, t)?;
        Ok(n as f64 * self.ml.beta() / t * p.value)
    }

    /// `P(T_n ≤ t) = P(N(t) ≥ n)`.
    pub fn epoch_cdf(&self, n: usize, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if n == 0 {
            return Ok(1.0);
        }
        let mut below = 0.0;
        for j in 0..n {
            below += self.pmf(j, t)?;
        }
        Ok((1.0 - below).clamp(0.0, 1.0))
    }

    /// `P(N(t) = n)`.
    pub fn pmf(&self, n: usize, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(self.ml.poisson_weight(n, t)?.value.max(0.0))
    }

    /// `(∫ S, ∫ (w_b + h - w) S(w) dw)` over the cell `[w_b, w_b + h]`, where
    /// `S` is the survival function.
    pub(crate) fn survival_cell(&self, w_b: f64, h: f64) -> Result<(f64, f64)> {
        let w_a = w_b + h;
        if w_a <= CELL_SERIES_LIMIT {
            if let (Some((ia, ja)), Some((ib, jb))) = (
                self.ml.integrated_survival(w_a),
                self.ml.integrated_survival(w_b),
            ) {
                return Ok((ia - ib, (ja - jb) - h * ib));
            }
        }
        let first = gauss_legendre_5(|w| self.survival(w), w_b, w_a)?;
        let second = gauss_legendre_5(|w| Ok::<_, FppError>((w_a - w) * self.survival(w)?), w_b, w_a)?;
        Ok((first, second))
    }
}

/// The distribution of `N(t)` truncated at `n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingPmf {
    pub t: f64,
    pub probabilities: Vec<f64>,
    /// `P(N(t) > n_max)`, summed from the further pmf entries.
    pub tail_mass: f64,
    /// Largest error estimate among the entries.
    pub max_abs_error: f64,
    /// Representation used for each entry.
    pub methods: Vec<MlMethod>,
}

impl CountingPmf {
    /// `1 - Σ probabilities - tail_mass`.
    pub fn normalization_defect(&self) -> f64 {
        1.0 - self.probabilities.iter().sum::<f64>() - self.tail_mass
    }

    /// True when `n_max` leaves more than [`TAIL_WARNING`] of the mass out.
    pub fn tail_warning(&self) -> bool {
        self.tail_mass > TAIL_WARNING
    }

    pub fn n_max(&self) -> usize {
        self.probabilities.len() - 1
    }
}

/// `F_τ(t) = 1 - E_β(-t^β)`.
pub fn interarrival_cdf(law: &InterArrivalLaw, t: f64) -> Result<f64> {
    law.cdf(t)
}

/// `f_τ(t) = t^{β-1} E_{β,β}(-t^β)`.
pub fn interarrival_pdf(law: &InterArrivalLaw, t: f64) -> Result<f64> {
    law.pdf(t)
}

/// `f_{T_n}(t) = β t^{nβ-1} / (n-1)! · E_β^{(n)}(-t^β)`.
pub fn epoch_pdf(n: usize, law: &InterArrivalLaw, t: f64) -> Result<f64> {
    law.epoch_pdf(n, t)
}

/// `P(N(t) = n) = t^{nβ}/n! · E_β^{(n)}(-t^β)` for `n ≤ n_max`.
pub fn counting_pmf(law: &InterArrivalLaw, t: f64, n_max: usize) -> Result<CountingPmf> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FppError::Domain(format!("time must be positive, got {t}")));
    }
    let ml = law.evaluator();
    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut methods = Vec::with_capacity(n_max + 1);
    let mut max_abs_error: f64 = 0.0;
    for n in 0..=n_max {
        let e = ml.poisson_weight(n, t)?;
        probabilities.push(e.value.max(0.0));
        methods.push(e.method);
        max_abs_error = max_abs_error.max(e.est_abs_error);
    }
    let tail_mass = tail_beyond(law, t, n_max, &probabilities)?;
    Ok(CountingPmf {
        t,
        probabilities,
        tail_mass,
        max_abs_error,
        methods,
    })
}

// Sums further pmf entries until they are negligible past the mode. Falls
// back to the complement when that would take too long.
fn tail_beyond(law: &InterArrivalLaw, t: f64, n_max: usize, head: &[f64]) -> Result<f64> {
    const CAP: usize = 4000;
    let ml = law.evaluator();
    let mut tail = 0.0;
    let mut prev = head[n_max];
    for n in n_max + 1..n_max + CAP {
        let p = ml.poisson_weight(n, t)?.value.max(0.0);
        tail += p;
        if p <= prev && p < 1e-18 {
            return Ok(tail);
        }
        prev = p;
    }
    Ok((1.0 - head.iter().sum::<f64>()).max(0.0))
}

/// `P(N(t) = n)` from the renewal integral `∫_0^t f^{*n}(u) P(τ > t - u) du`.
pub fn counting_pmf_renewal(law: &InterArrivalLaw, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FppError::Domain(format!("time must be positive, got {t}")));
    }
    if n == 0 {
        return law.survival(t);
    }
    let b = law.beta().value();
    let p_left = grading_power(n as f64 * b);
    let p_right = grading_power(b);
    let rule = Quadrature::new(1e-13).with_max_subdivisions(300);
    let r = rule.try_integrate_graded(
        |_, u, rest| {
            if u == 0.0 {
                return Ok(0.0);
            }
            Ok(law.epoch_pdf(n, u)? * law.survival(rest)?)
        },
        0.0,
        t,
        p_left,
        p_right,
    )?;
    Ok(r.value)
}

/// Substitution power that smooths an endpoint behaviour `x^{a-1}` or `x^a`.
pub(crate) fn grading_power(a: f64) -> u32 {
    if a >= 2.0 {
        1
    } else {
        ((2.0 / a).ceil() as u32).clamp(2, 8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn law(b: f64) -> InterArrivalLaw {
        InterArrivalLaw::from_beta(b).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(law(0.5).cdf(0.0).unwrap(), 0.0);
        assert!((law(1.0).cdf(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
        assert!((law(0.5).cdf(1.0).unwrap() - 0.572_416_423_844_192_995_6).abs() < 1e-12);
    }

    #[test]
    fn pdf_examples() {
        assert!((law(1.0).pdf(2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        let l = law(0.5);
        let h = 1e-4;
        let fd = (l.cdf(1.0 + h).unwrap() - l.cdf(1.0 - h).unwrap()) / (2.0 * h);
        assert!((l.pdf(1.0).unwrap() - fd).abs() < 1e-6);
        let t: f64 = 1e-4;
        // t^{-1/2} (1/Γ(1/2) - t^{1/2}/Γ(1) + ...), the second term is 1.8%
        let lead = t.powf(-0.5) * (1.0 / std::f64::consts::PI.sqrt() - t.sqrt());
        assert!((l.pdf(t).unwrap() / lead - 1.0).abs() < 1e-3);
        assert!(l.pdf(0.0).is_err());
    }

    #[test]
    fn epoch_examples() {
        let l = law(0.7);
        assert!((l.epoch_pdf(1, 1.0).unwrap() - l.pdf(1.0).unwrap()).abs() < 1e-15);
        let e = law(1.0).epoch_pdf(3, 2.0).unwrap();
        assert!((e - 2.0 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn poisson_reduction() {
        let pmf = counting_pmf(&law(1.0), 3.0, 30).unwrap();
        let mut p = (-3.0f64).exp();
        for (n, &v) in pmf.probabilities.iter().enumerate() {
            if n > 0 {
                p *= 3.0 / n as f64;
            }
            assert!((v - p).abs() < 1e-15);
        }
        assert!(pmf.normalization_defect().abs() < 1e-12);
        assert!(!pmf.tail_warning());
    }

    #[test]
    fn first_entry_is_survival() {
        let pmf = counting_pmf(&law(0.5), 1.0, 5).unwrap();
        assert!((pmf.probabilities[0] - 0.427_583_576_155_807_0).abs() < 1e-13);
        assert!(pmf.tail_warning());
        assert!(pmf.normalization_defect().abs() < 1e-10);
    }

    #[test]
    fn renewal_route_agrees() {
        for &b in &[0.25, 0.5, 0.75, 0.9] {
            let l = law(b);
            for &t in &[0.5, 1.0, 5.0] {
                let pmf = counting_pmf(&l, t, 10).unwrap();
                for n in 0..=10 {
                    let r = counting_pmf_renewal(&l, t, n).unwrap();
                    assert!(
                        (r - pmf.probabilities[n]).abs() < 1e-9,
                        "beta={b} t={t} n={n}: {r} vs {}",
                        pmf.probabilities[n]
                    );
                }
            }
        }
        let p = counting_pmf_renewal(&law(1.0), 1.0, 2).unwrap();
        assert!((p - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn cell_integrals_match_quadrature() {
        for &b in &[0.25, 0.5, 0.9, 1.0] {
            let l = law(b);
            for &(w, h) in &[(0.0, 1e-3), (2e-3, 1e-3), (0.7, 0.01), (1.5, 0.01)] {
                let (i0, i1) = l.survival_cell(w, h).unwrap();
                let q = Quadrature::new(1e-15);
                let r0 = q
                    .try_integrate_graded(|x, _, _| l.survival(x), w, w + h, 4, 1)
                    .unwrap()
                    .value;
                let r1 = q
                    .try_integrate_graded(|x, _, r| Ok(r * l.survival(x)?), w, w + h, 4, 1)
                    .unwrap()
                    .value;
                assert!((i0 - r0).abs() < 1e-14, "beta={b} w={w}: {i0} vs {r0}");
                assert!((i1 - r1).abs() < 1e-14, "beta={b} w={w}: {i1} vs {r1}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cdf_increasing_pdf_positive(b in 0.1f64..1.0, t in 0.01f64..20.0, dt in 0.01f64..1.0) {
            let l = law(b);
            prop_assert!(l.cdf(t + dt).unwrap() > l.cdf(t).unwrap());
            prop_assert!(l.pdf(t).unwrap() > 0.0);
        }

        #[test]
        fn pmf_normalized(b in 0.1f64..1.0, t in 0.05f64..10.0) {
            let pmf = counting_pmf(&law(b), t, 20).unwrap();
            prop_assert!(pmf.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!(pmf.normalization_defect().abs() < 1e-6);
        }
    }
}
