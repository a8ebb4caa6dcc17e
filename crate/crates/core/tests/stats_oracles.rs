mod support;

use eegnet_core::rng::stream;
use eegnet_core::stats::{auc, fdr_correct, signrank_test, signrank_test_with, SignRankMethod};
use rand::seq::SliceRandom;
use rand::Rng;
use support::{auc_brute, signrank_enumerated};

#[test]
fn auc_equals_brute_force_on_1000_instances() {
    let mut rng = stream(8, "auc", &[]);
    for case in 0..1000 {
        let n = rng.gen_range(2..80);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        // coarse scores so ties are common
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..12u8)) / 4.0).collect();
        assert_eq!(
            auc(&scores, &labels).unwrap(),
            auc_brute(&scores, &labels),
            "case {case}"
        );
    }
}

#[test]
fn exact_signrank_matches_enumeration() {
    assert_eq!(signrank_test(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap().p, 0.25);
    let mut rng = stream(9, "signrank", &[]);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let mut mags: Vec<f64> = (1..=40).map(f64::from).collect();
        mags.shuffle(&mut rng);
        let d: Vec<f64> = mags[..n]
            .iter()
            .map(|&m| if rng.gen_bool(0.5) { m } else { -m })
            .collect();
        let got = signrank_test_with(&d, &vec![0.0; n], SignRankMethod::Exact).unwrap();
        assert!(got.exact);
        assert!((got.p - signrank_enumerated(&d)).abs() < 1e-12, "{d:?}");
    }
}

#[test]
fn uniform_shift_of_ten_folds() {
    let a: Vec<f64> = (0..10).map(|i| 0.6 + 0.01 * f64::from(i)).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 0.1).collect();
    let t = signrank_test(&b, &a).unwrap();
    assert!((t.p - 2.0 / 1024.0).abs() < 1e-12, "{}", t.p);
}

#[test]
fn normal_approximation_tracks_exact_at_ten() {
    let mut rng = stream(10, "probe", &[]);
    for _ in 0..100 {
        let d: Vec<f64> = (1..=10)
            .map(|m| if rng.gen_bool(0.5) { f64::from(m) } else { -f64::from(m) })
            .collect();
        let z = vec![0.0; 10];
        let exact = signrank_test_with(&d, &z, SignRankMethod::Exact).unwrap().p;
        let normal = signrank_test_with(&d, &z, SignRankMethod::Normal).unwrap().p;
        assert!((exact - normal).abs() < 0.05, "{exact} vs {normal}");
    }
}

#[test]
fn step_up_matches_sorted_threshold_oracle() {
    let mut rng = stream(11, "fdr", &[]);
    for _ in 0..500 {
        let m = rng.gen_range(1..25);
        let p: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powi(3)).collect();
        let q = 0.05;
        let mut sorted = p.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cut = (0..m)
            .rev()
            .find(|&i| sorted[i] <= (i + 1) as f64 / m as f64 * q)
            .map(|i| sorted[i]);
        let got = fdr_correct(&p, q).unwrap();
        for (pi, r) in p.iter().zip(&got.rejected) {
            assert_eq!(*r, cut.is_some_and(|c| *pi <= c), "{p:?}");
        }
    }
}
