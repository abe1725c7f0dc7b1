use eggcount_kit::classical::{
    classify_waavp, fecr_approx_ci, fecr_bootstrap_ci, fecr_point, PairedEpgSample, ResistanceLevel,
};
use eggcount_kit::rng::RngStream;
use eggcount_kit::Error;
use proptest::prelude::*;

fn counts(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(1u32..60, n), prop::collection::vec(0u32..20, n)).prop_map(|(a, b)| {
        (
            a.into_iter().map(|x| 50.0 * x as f64).collect(),
            b.into_iter().map(|x| 50.0 * x as f64).collect(),
        )
    })
}

#[test]
fn zero_pre_mean_is_undefined() {
    let s = PairedEpgSample::new(vec![0.0, 0.0], vec![0.0, 50.0]).unwrap();
    assert!(matches!(fecr_point(&s), Err(Error::UndefinedEstimate(_))));
}

#[test]
fn rejects_bad_samples() {
    assert!(PairedEpgSample::new(vec![1.0], vec![0.0]).is_err());
    assert!(PairedEpgSample::new(vec![1.0, 2.0], vec![0.0]).is_err());
    assert!(PairedEpgSample::new(vec![1.0, -2.0], vec![0.0, 0.0]).is_err());
}

#[test]
fn missing_lower_limit_never_meets_criterion_b() {
    let v = classify_waavp(80.0, None);
    assert_eq!(v.level, ResistanceLevel::Suspected);
    assert!(v.lower_limit_absent && !v.criterion_b_met);
    assert_eq!(classify_waavp(100.0, None).level, ResistanceLevel::Absent);
}

#[test]
fn thresholds_are_strict() {
    assert_eq!(classify_waavp(95.0, Some(90.0)).level, ResistanceLevel::Absent);
    assert_eq!(classify_waavp(94.999, Some(90.0)).level, ResistanceLevel::Suspected);
    assert_eq!(classify_waavp(94.999, Some(89.999)).level, ResistanceLevel::Present);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn estimate_is_scale_invariant((pre, post) in counts(12), k in 0.1f64..20.0) {
        let a = PairedEpgSample::new(pre.clone(), post.clone()).unwrap();
        let b = PairedEpgSample::new(pre.iter().map(|x| x * k).collect(), post.iter().map(|x| x * k).collect()).unwrap();
        let (ra, rb) = (fecr_approx_ci(&a, 0.95).unwrap(), fecr_approx_ci(&b, 0.95).unwrap());
        prop_assert!((ra.estimate - rb.estimate).abs() < 1e-9);
        match (ra.ci_lower, rb.ci_lower) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-8),
            (None, None) => {}
            _ => prop_assert!(false, "interval presence changed under scaling"),
        }
    }

    #[test]
    fn approximate_interval_brackets_estimate((pre, post) in counts(10)) {
        let s = PairedEpgSample::new(pre, post).unwrap();
        let r = fecr_approx_ci(&s, 0.95).unwrap();
        if let (Some(l), Some(u)) = (r.ci_lower, r.ci_upper) {
            prop_assert!(l <= r.estimate && r.estimate <= u && u <= 100.0);
            let wider = fecr_approx_ci(&s, 0.99).unwrap();
            prop_assert!(wider.ci_lower.unwrap() <= l);
        } else {
            prop_assert!(s.post().iter().all(|&x| x == s.post()[0]));
        }
    }

    #[test]
    fn bootstrap_interval_is_ordered((pre, post) in counts(8), seed in any::<u64>()) {
        let s = PairedEpgSample::new(pre, post).unwrap();
        let r = fecr_bootstrap_ci(&s, 199, 0.95, &mut RngStream::new(seed)).unwrap();
        if let (Some(l), Some(u)) = (r.ci_lower, r.ci_upper) {
            prop_assert!(l <= u && u <= 100.0);
        }
    }

    #[test]
    fn verdict_partitions(est in 0.0f64..=100.0, lower in prop::option::of(0.0f64..=100.0)) {
        let v = classify_waavp(est, lower);
        let expected = match (v.criterion_a_met, v.criterion_b_met) {
            (true, true) => ResistanceLevel::Present,
            (false, false) => ResistanceLevel::Absent,
            _ => ResistanceLevel::Suspected,
        };
        prop_assert_eq!(v.level, expected);
        prop_assert_eq!(v.criterion_a_met, est < 95.0);
    }
}
