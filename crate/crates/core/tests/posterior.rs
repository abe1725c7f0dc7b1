use eggcount_kit::posterior::{
    denwood_from_probability, effective_sample_size, hpd_interval, prob_reduction_below, DenwoodThresholds,
    DenwoodVerdict,
};
use eggcount_kit::rng::RngStream;
use proptest::prelude::*;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed);
    (0..n)
        .map(|_| {
            let (u, v) = (rng.uniform(), rng.uniform());
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect()
}

#[test]
fn hpd_of_normal_is_near_central() {
    let xs = normals(40_000, 1);
    let h = hpd_interval(&xs, 0.95).unwrap();
    assert!((h.lower + 1.96).abs() < 0.05 && (h.upper - 1.96).abs() < 0.05, "{h:?}");
    assert!(!h.multimodal);
}

#[test]
fn hpd_hugs_the_boundary_for_skewed_mass() {
    let mut rng = RngStream::new(2);
    let xs: Vec<f64> = (0..20_000).map(|_| -rng.uniform().ln()).collect();
    let h = hpd_interval(&xs, 0.95).unwrap();
    assert!(h.lower < 0.01);
    assert!((h.upper - 20f64.ln()).abs() < 0.1);
}

#[test]
fn too_few_samples() {
    assert!(hpd_interval(&[1.0; 50], 0.95).is_err());
    assert!(effective_sample_size(&[1.0; 50]).is_err());
}

#[test]
fn ess_reflects_autocorrelation() {
    let iid = normals(5000, 3);
    let e = effective_sample_size(&iid).unwrap().value;
    assert!(e > 4000.0 && e < 6000.0, "iid ESS {e}");
    let mut ar = vec![0.0; 5000];
    for i in 1..ar.len() {
        ar[i] = 0.9 * ar[i - 1] + iid[i];
    }
    let e = effective_sample_size(&ar).unwrap().value;
    // (1 - 0.9) / (1 + 0.9) * 5000 ≈ 263
    assert!(e > 150.0 && e < 450.0, "AR(1) ESS {e}");
    let flat = effective_sample_size(&[2.0; 200]).unwrap();
    assert!(flat.zero_variance);
}

#[test]
fn denwood_cutoffs() {
    let t = DenwoodThresholds::default();
    assert_eq!(denwood_from_probability(0.98, t), DenwoodVerdict::ConfirmedResistance);
    assert_eq!(denwood_from_probability(0.975, t), DenwoodVerdict::Inconclusive);
    assert_eq!(
        denwood_from_probability(0.01, t),
        DenwoodVerdict::ConfirmedSusceptibility
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hpd_lies_within_range_and_grows_with_level(xs in prop::collection::vec(-1e3f64..1e3, 100..400), lvl in 0.5f64..0.9) {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let h = hpd_interval(&xs, lvl).unwrap();
        prop_assert!(lo <= h.lower && h.lower <= h.upper && h.upper <= hi);
        let w = hpd_interval(&xs, lvl + 0.09).unwrap();
        prop_assert!(w.upper - w.lower >= h.upper - h.lower);
        let inside = xs.iter().filter(|&&x| h.lower <= x && x <= h.upper).count();
        prop_assert!(inside as f64 >= (lvl * xs.len() as f64).ceil());
    }

    #[test]
    fn tail_probability_is_monotone(ds in prop::collection::vec(0.0f64..1.0, 1..200), t1 in 0.0f64..100.0, t2 in 0.0f64..100.0) {
        let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (pa, pb) = (prob_reduction_below(&ds, a), prob_reduction_below(&ds, b));
        prop_assert!((0.0..=1.0).contains(&pa) && pa <= pb);
    }
}
