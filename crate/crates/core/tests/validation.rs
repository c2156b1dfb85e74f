use fracpoisson::validation::{run_all, run_criterion, ValidationConfig, CRITERIA};

#[test]
fn tight_tolerance_fails() {
    let cfg = ValidationConfig {
        tol_scale: 1e-30,
        ..Default::default()
    };
    for id in [1, 2, 7, 8] {
        let r = run_criterion(id, &cfg).unwrap();
        assert!(!r.passed, "criterion {id}: {}", r.detail);
    }
}

#[test]
fn selected_criteria_only() {
    let cfg = ValidationConfig {
        quick: true,
        only: Some(vec![1, 8]),
        ..Default::default()
    };
    let reports = run_all(&cfg).unwrap();
    assert_eq!(reports.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 8]);
    assert!(reports.iter().all(|r| r.passed && r.seconds <= r.runtime_limit));
}

#[test]
fn bad_requests() {
    assert!(run_criterion(9, &ValidationConfig::default()).is_err());
    let cfg = ValidationConfig {
        tol_scale: 0.0,
        ..Default::default()
    };
    assert!(run_all(&cfg).is_err());
    assert_eq!(CRITERIA.len(), 8);
}
