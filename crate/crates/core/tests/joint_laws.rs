use fracpoisson::fidi::{
    conditional_increment_pmf, joint_pmf, joint_pmf_oracle, memory_kernel_update, residual_lifetime_pdf,
    ObservationSchedule,
};
use fracpoisson::montecarlo::estimate_joint_pmf;
use fracpoisson::{FppError, InterArrivalLaw};
use proptest::prelude::*;

fn law(b: f64) -> InterArrivalLaw {
    InterArrivalLaw::from_beta(b).unwrap()
}

fn sched(t: &[f64], n: &[usize]) -> ObservationSchedule {
    ObservationSchedule::new(t.to_vec(), n.to_vec()).unwrap()
}

#[test]
fn marginals_are_consistent() {
    for b in [0.5, 0.9] {
        let l = law(b);
        for n1 in 0..=2 {
            let total: f64 = (n1..n1 + 40)
                .map(|n2| joint_pmf(&sched(&[1.0, 2.0], &[n1, n2]), &l).unwrap().value)
                .sum();
            let want = l.pmf(n1, 1.0).unwrap();
            assert!((total - want).abs() < 1e-4, "beta={b} n1={n1}: {total} vs {want}");
        }
    }
}

#[test]
fn recursion_oracle_and_simulation_agree() {
    let l = law(0.5);
    let s = sched(&[1.0, 2.0], &[0, 1]);
    let j = joint_pmf(&s, &l).unwrap();
    let o = joint_pmf_oracle(&s, &l).unwrap();
    assert!((j.value - o).abs() < 1e-4);
    let mc = estimate_joint_pmf(&s, &l, 1_000_000, 17).unwrap();
    assert!((mc.value - j.value).abs() < 3.0 * mc.std_error, "{} vs {}", mc.value, j.value);
}

#[test]
fn three_point_regression_value() {
    // pinned against the nested quadrature and a 10^6-path simulation
    let l = law(0.75);
    let s = sched(&[0.5, 1.5], &[1, 3]);
    let o = joint_pmf_oracle(&s, &l).unwrap();
    assert!((o - 0.042_066_902_4).abs() < 1e-9, "{o}");
    let mc = estimate_joint_pmf(&s, &l, 1_000_000, 3).unwrap();
    assert!((mc.value - o).abs() < 3.0 * mc.std_error);
}

#[test]
fn unit_order_update_stays_exponential() {
    let l = law(1.0);
    let mut k = residual_lifetime_pdf(&l, 1.0, 1).unwrap();
    for (t_prev, t_next, dn) in [(1.0, 1.5, 1), (1.5, 2.5, 2), (2.5, 3.0, 0)] {
        k = memory_kernel_update(&k, &l, t_prev, t_next, dn).unwrap();
        let d = k.density();
        let err = (0..d.len())
            .map(|i| (d.values()[i] - (-d.x(i)).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "after t={t_next}: {err:e}");
    }
}

#[test]
fn update_needs_support() {
    let l = law(0.5);
    let k = residual_lifetime_pdf(&l, 1.0, 1).unwrap();
    let e = memory_kernel_update(&k, &l, 1.0, 1.0 + 2.0 * k.extent(), 1).unwrap_err();
    assert!(matches!(e, FppError::SupportExhausted { .. }), "{e}");
    let e = memory_kernel_update(&k, &l, 0.5, 2.0, 1).unwrap_err();
    assert!(matches!(e, FppError::InvalidSchedule(_)));
}

#[test]
fn oracle_is_limited_to_three_points() {
    let s = sched(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 2]);
    assert!(joint_pmf_oracle(&s, &law(0.5)).is_err());
    assert!(joint_pmf(&s, &law(0.5)).is_ok());
}

#[test]
fn kernel_from_another_law_is_rejected() {
    let k = residual_lifetime_pdf(&law(0.5), 1.0, 1).unwrap();
    assert!(conditional_increment_pmf(&k, &law(0.7), 1.0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_is_a_probability_below_its_marginal(
        b in 0.3f64..1.0,
        t1 in 0.3f64..2.0,
        dt in 0.1f64..1.5,
        n1 in 0usize..3,
        dn in 0usize..3,
    ) {
        let l = law(b);
        let j = joint_pmf(&sched(&[t1, t1 + dt], &[n1, n1 + dn]), &l).unwrap();
        prop_assert!((0.0..=1.0).contains(&j.value));
        prop_assert!(j.value <= l.pmf(n1, t1).unwrap() + 1e-9);
        prop_assert!(j.error_bound >= 0.0);
    }
}
