use super::*;
use proptest::prelude::*;

fn order(b: f64) -> FractionalOrder {
    FractionalOrder::new(b).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (diff {:e})", (a - b).abs());
}

#[test]
fn order_validation() {
    assert!(FractionalOrder::new(0.0).is_err());
    assert!(FractionalOrder::new(1.5).is_err());
    assert!(FractionalOrder::new(f64::NAN).is_err());
    assert!(FractionalOrder::new(1.0).unwrap().is_exponential());
}

#[test]
fn domain_errors() {
    let ml = MittagLeffler::new(order(0.5));
    assert!(ml.one_param(0.1).is_err());
    assert!(ml.one_param(f64::NEG_INFINITY).is_err());
    assert!(ml.two_param(1.0).is_err());
    assert!(ml_derivative_stable(1, order(1.0), 1.0).is_err());
    assert!(ml_derivative_stable(0, order(0.5), -1.0).is_err());
}

#[test]
fn one_param_reference_values() {
    let cases = [
        (0.5, 1.0, 0.427_583_576_155_807_004_4),
        (0.7, 1.0, 0.399_611_978_115_599_384_4),
        (0.5, 3.0, 0.179_001_151_181_389_950_4),
        (0.75, 3.0, 0.125_855_136_911_841_527_0),
        (0.9, 3.0, 0.083_888_354_033_773_269_0),
        (0.25, 2.0, 0.298_101_793_693_657_603_7),
        (0.25, 3.0, 0.219_004_427_560_406_799_3),
        (0.5, 10.0, 0.056_140_992_743_822_585_86),
        (0.75, 10.0, 0.030_643_250_976_059_637_77),
        (0.9, 10.0, 0.012_820_606_051_102_102_71),
        (0.75, 20.0, 0.014_527_522_154_459_504_20),
        (0.5, 30.0, 0.018_795_888_861_416_751_50),
        (0.9, 30.0, 0.003_713_707_698_459_852_958),
        (0.5, 50.0, 0.011_281_536_265_323_772_5),
    ];
    for (b, x, want) in cases {
        let e = ml_one_param(order(b), -x).unwrap();
        assert!(e.est_abs_error <= 1e-10);
        close(e.value, want, 1e-11);
    }
}

#[test]
fn two_param_reference_values() {
    let cases = [
        (0.75, 2.0, 0.084_363_572_245_660_564_02),
        (0.75, 10.0, 0.002_543_443_152_966_819_893),
        (0.9, 20.0, 0.000_284_025_957_411_926_443_3),
        (0.5, 8.0, 0.004_308_253_940_708_865_166),
        (0.25, 3.0, 0.014_567_819_940_323_703_35),
    ];
    for (b, x, want) in cases {
        let e = ml_two_param(order(b), -x).unwrap();
        assert!(e.est_abs_error <= 1e-10);
        close(e.value, want, 1e-11);
    }
    close(
        ml_two_param(order(0.5), 0.0).unwrap().value,
        1.0 / std::f64::consts::PI.sqrt(),
        1e-14,
    );
    close(ml_two_param(order(1.0), -3.0).unwrap().value, (-3.0f64).exp(), 1e-15);
}

#[test]
fn regimes_are_reported() {
    let ml = MittagLeffler::new(order(0.5));
    assert_eq!(ml.one_param(-1.0).unwrap().method, MlMethod::Series);
    assert_eq!(ml.one_param(-10.0).unwrap().method, MlMethod::Spectral);
    assert_eq!(ml.one_param(-50.0).unwrap().method, MlMethod::Asymptotic);
    let exp = MittagLeffler::new(order(1.0));
    assert_eq!(exp.one_param(-2.0).unwrap().method, MlMethod::ClosedForm);
}

#[test]
fn exponential_reduction() {
    let ml = MittagLeffler::new(order(1.0));
    for i in 0..=300 {
        let x = 0.1 * i as f64;
        close(ml.one_param(-x).unwrap().value, (-x).exp(), 1e-12);
    }
    close(ml_derivative_series(3, order(1.0), 2.0).unwrap().value, (-2.0f64).exp(), 1e-15);
}

#[test]
fn derivative_reference_values() {
    let cases = [
        (2, 0.5, 0.8, 0.364_373_300_903_455_088_5),
        (1, 0.5, 1.0, 0.273_212_014_783_898_565_1),
        (2, 0.9, 0.5, 0.629_729_165_361_987_717_5),
        (1, 0.5, 0.001, 1.067_328_600_147_342_813),
        (5, 0.25, 0.3, 5.013_800_412_384_794_280),
        (3, 0.75, 1.0, 0.472_738_221_654_958_500_7),
    ];
    for (n, b, t, want) in cases {
        let s = ml_derivative_series(n, order(b), t).unwrap();
        close(s.value, want, 1e-11 * want.abs().max(1.0));
        let st = ml_derivative_stable(n, order(b), t).unwrap();
        assert_eq!(st.method, MlMethod::StableIntegral);
        close(st.value, want, 1e-7 * want.abs().max(1.0));
    }
    close(
        ml_derivative_series(0, order(0.7), 1.0).unwrap().value,
        ml_one_param(order(0.7), -1.0).unwrap().value,
        0.0,
    );
}

#[test]
fn poisson_weights_at_half() {
    let want = [
        0.427_583_576_155_807_0,
        0.273_212_014_783_898_565_1,
        0.154_371_561_371_908_439_3,
        0.079_226_968_941_326_750_49,
        0.037_572_296_215_290_844_42,
        0.016_661_869_090_414_362_43,
    ];
    let ml = MittagLeffler::new(order(0.5));
    for (n, w) in want.iter().enumerate() {
        close(ml.poisson_weight(n, 1.0).unwrap().value, *w, 1e-12);
        close(ml.poisson_weight_stable(n, 1.0).unwrap().value, *w, 1e-9);
    }
}

#[test]
fn large_time_poisson_weights_sum_to_one() {
    for &b in &[0.25, 0.5, 0.9] {
        let ml = MittagLeffler::new(order(b));
        let t = 200.0;
        let total: f64 = (0..400).map(|n| ml.poisson_weight(n, t).unwrap().value).sum();
        assert!((total - 1.0).abs() < 1e-6, "beta={b}: {total}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decreasing_and_positive(b in 0.05f64..1.0, x0 in 0.0f64..49.0, dx in 0.05f64..1.0) {
        let ml = MittagLeffler::new(order(b));
        let a = ml.one_param(-x0).unwrap().value;
        let c = ml.one_param(-(x0 + dx)).unwrap().value;
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(c > 0.0);
        prop_assert!(c < a);
    }

    #[test]
    fn two_param_positive(b in 0.05f64..1.0, x in 0.0f64..50.0) {
        let e = ml_two_param(order(b), -x).unwrap();
        prop_assert!(e.value > 0.0);
        prop_assert!(e.est_abs_error.is_finite());
    }
}
