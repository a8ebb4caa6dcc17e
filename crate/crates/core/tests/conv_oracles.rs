mod support;

use eegnet_core::ops::{conv2d_same_batch, spatial_conv_batch};
use eegnet_core::rng::stream;
use rand::Rng;
use support::{conv2d_oracle, random_tensor, spatial_oracle};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn spatial_conv_matches_nested_loops_on_100_shapes() {
    let mut rng = stream(11, "shapes", &[]);
    for case in 0..100u64 {
        let (bs, c, t, f) = (
            rng.gen_range(1..4),
            rng.gen_range(1..9),
            rng.gen_range(1..40),
            rng.gen_range(1..6),
        );
        let x = random_tensor(&[bs, c, t], case, "x");
        let w = random_tensor(&[f, c], case, "w");
        let b = random_tensor(&[f], case, "b");
        let got = spatial_conv_batch(&x, &w, &b).unwrap();
        let want = spatial_oracle(&x, &w, &b);
        assert_eq!(got.shape(), want.shape());
        let d = max_abs_diff(got.data(), want.data());
        assert!(d <= 1e-12, "case {case} ({bs},{c},{t},{f}): diff {d}");
    }
}

#[test]
fn conv2d_same_matches_nested_loops_on_100_shapes() {
    let mut rng = stream(12, "shapes", &[]);
    for case in 0..100u64 {
        let (bs, fin, h, w) = (
            rng.gen_range(1..3),
            rng.gen_range(1..4),
            rng.gen_range(1..12),
            rng.gen_range(1..24),
        );
        // kernel extents include even sizes and sizes beyond the input
        let (fout, kh, kw) = (rng.gen_range(1..4), rng.gen_range(1..14), rng.gen_range(1..30));
        let x = random_tensor(&[bs, fin, h, w], case, "x");
        let k = random_tensor(&[fout, fin, kh, kw], case, "k");
        let b = random_tensor(&[fout], case, "b");
        let got = conv2d_same_batch(&x, &k, &b).unwrap();
        let want = conv2d_oracle(&x, &k, &b);
        assert_eq!(got.shape(), [bs, fout, h, w]);
        let d = max_abs_diff(got.data(), want.data());
        assert!(d <= 1e-12, "case {case} x {:?} k {:?}: diff {d}", x.shape(), k.shape());
    }
}

#[test]
fn paper_kernel_grid_matches_oracle() {
    for (kh, kw) in eegnet_core::model::LAYER2_KERNELS
        .iter()
        .chain(&eegnet_core::model::LAYER3_KERNELS)
    {
        let fin = if kh * kw == 64 { 1 } else { 4 };
        let x = random_tensor(&[2, fin, 16, 32], 5, "x");
        let k = random_tensor(&[4, fin, *kh, *kw], 5, "k");
        let b = random_tensor(&[4], 5, "b");
        let d = max_abs_diff(
            conv2d_same_batch(&x, &k, &b).unwrap().data(),
            conv2d_oracle(&x, &k, &b).data(),
        );
        assert!(d <= 1e-12, "kernel {kh}x{kw}: {d}");
    }
}
