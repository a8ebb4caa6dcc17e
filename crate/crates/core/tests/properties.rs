mod support;

use eegnet_core::ops::{batchnorm_batch, maxpool2d_batch, softmax, Mode, RunningStats, BN_EPSILON};
use eegnet_core::stats::{auc, average_ranks, fdr_correct, rank_models, signrank_test};
use eegnet_core::{count_parameters, enumerate_configs, ModelSpec, Tensor};
use proptest::prelude::*;
use support::auc_brute;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one(logits in prop::collection::vec(-50.0f64..50.0, 2..8)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn pooling_divides_element_count_by_eight(b in 1usize..3, f in 1usize..4, h2 in 1usize..5, w4 in 1usize..6, seed in 0u64..1000) {
        let shape = [b, f, 2 * h2, 4 * w4];
        let x = support::random_tensor(&shape, seed, "pool");
        let (y, argmax) = maxpool2d_batch(&x, (2, 4)).unwrap();
        prop_assert_eq!(y.len() * 8, x.len());
        prop_assert_eq!(argmax.len(), y.len());
        // each output is the max of its window
        for (o, &i) in argmax.iter().enumerate() {
            prop_assert_eq!(y.data()[o], x.data()[i]);
        }
    }

    #[test]
    fn batchnorm_standardizes_each_feature(b in 2usize..6, f in 1usize..4, t in 1usize..10, seed in 0u64..1000, scale in 0.5f64..20.0) {
        let mut x = support::random_tensor(&[b, f, 1, t], seed, "bn");
        x.data_mut().iter_mut().for_each(|v| *v = *v * scale + 3.0);
        let (y, _, _) = batchnorm_batch(&x, &Tensor::full(&[f], 1.0), &Tensor::zeros(&[f]), &RunningStats::new(f), Mode::Train, BN_EPSILON).unwrap();
        for fi in 0..f {
            let vals: Vec<f64> = (0..b).flat_map(|n| (0..t).map(move |k| (n, k))).map(|(n, k)| y.get(&[n, fi, 0, k])).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            // epsilon pulls the variance slightly below one for small inputs
            let raw_var = {
                let xs: Vec<f64> = (0..b).flat_map(|n| (0..t).map(move |k| (n, k))).map(|(n, k)| x.get(&[n, fi, 0, k])).collect();
                let m = xs.iter().sum::<f64>() / n;
                xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
            };
            prop_assert!((var - raw_var / (raw_var + BN_EPSILON)).abs() < 1e-9);
        }
    }

    #[test]
    fn parameter_count_closed_form(c in 1usize..130, t16 in 1usize..33, n in 2usize..6) {
        let t = 16 * t16;
        let spec = ModelSpec::new(c, t, n);
        let expected = 16 * c + n * (t + 1) + 840;
        prop_assert_eq!(count_parameters(&spec).unwrap().total, expected);
        for k in enumerate_configs() {
            prop_assert_eq!(count_parameters(&spec.clone().with_kernels(k)).unwrap().total, expected);
        }
    }

    #[test]
    fn ranks_sum_to_triangular_number(perf in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 2..14)) {
        let m = perf.len() as f64;
        let table = rank_models(&perf, true).unwrap();
        for d in 0..3 {
            let s: f64 = table.ranks.iter().map(|r| r[d]).sum();
            prop_assert!((s - m * (m + 1.0) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn average_ranks_sum(values in prop::collection::vec(0u8..5, 1..30)) {
        let v: Vec<f64> = values.iter().map(|&x| f64::from(x)).collect();
        let r = average_ranks(&v);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn fdr_rejections_grow_with_q(p in prop::collection::vec(0.0f64..1.0, 1..30), q1 in 0.001f64..0.5, dq in 0.0f64..0.4) {
        let lo = fdr_correct(&p, q1).unwrap();
        let hi = fdr_correct(&p, q1 + dq).unwrap();
        for (a, b) in lo.rejected.iter().zip(&hi.rejected) {
            prop_assert!(!a || *b);
        }
        for (adj, raw) in lo.adjusted.iter().zip(&p) {
            prop_assert!(adj >= raw && *adj <= 1.0, "adjusted {} raw {} for {:?}", adj, raw, p);
        }
    }

    #[test]
    fn auc_matches_pairwise_count(scores in prop::collection::vec(0u8..10, 2..60), labels in prop::collection::vec(0usize..2, 2..60)) {
        let n = scores.len().min(labels.len());
        let (s, l): (Vec<f64>, Vec<usize>) = (scores[..n].iter().map(|&v| f64::from(v)).collect(), labels[..n].to_vec());
        prop_assume!(l.contains(&0) && l.contains(&1));
        prop_assert_eq!(auc(&s, &l).unwrap(), auc_brute(&s, &l));
    }

    #[test]
    fn signrank_invariant_to_monotone_magnitude_maps(d in prop::collection::vec(1u32..1000, 3..12), signs in prop::collection::vec(any::<bool>(), 12)) {
        let diffs: Vec<f64> = d.iter().zip(&signs).map(|(&m, &s)| if s { f64::from(m) } else { -f64::from(m) }).collect();
        let zeros = vec![0.0; diffs.len()];
        let a = signrank_test(&diffs, &zeros).unwrap();
        let warped: Vec<f64> = diffs.iter().map(|v| v.signum() * v.abs().powf(1.7)).collect();
        let b = signrank_test(&warped, &zeros).unwrap();
        prop_assert_eq!(a.w_plus, b.w_plus);
        prop_assert_eq!(a.p, b.p);
    }
}
