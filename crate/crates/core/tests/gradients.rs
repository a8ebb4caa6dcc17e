mod support;

use eegnet_core::graph::{Graph, NodeId};
use eegnet_core::ops::{Mode, RunningStats, BN_EPSILON};
use eegnet_core::{Ablation, ModelSpec, Tensor};
use support::gradcheck::{check_op, full_network_check, TOL};
use support::random_tensor;

fn assert_op(name: &str, inputs: &[Tensor], op: impl Fn(&mut Graph, &[NodeId]) -> NodeId) {
    let e = check_op(name, inputs, op);
    assert!(e < TOL, "{name}: worst relative error {e:e}");
}

#[test]
fn spatial_conv_gradients() {
    let x = random_tensor(&[3, 5, 17], 1, "x");
    let w = random_tensor(&[4, 5], 1, "w");
    let b = random_tensor(&[4], 1, "b");
    assert_op("spatial", &[x, w, b], |g, id| {
        g.spatial_conv(id[0], id[1], id[2]).unwrap()
    });
}

#[test]
fn conv2d_gradients() {
    for (kh, kw) in [(2, 32), (8, 4), (3, 5), (16, 4)] {
        let x = random_tensor(&[2, 3, 8, 20], 2, "x");
        let k = random_tensor(&[2, 3, kh, kw], 2, "k");
        let b = random_tensor(&[2], 2, "b");
        assert_op("conv2d", &[x, k, b], |g, id| {
            g.conv2d_same(id[0], id[1], id[2]).unwrap()
        });
    }
}

#[test]
fn batchnorm_train_mode_gradients() {
    let x = random_tensor(&[4, 3, 2, 5], 3, "x");
    let gamma = random_tensor(&[3], 3, "gamma");
    let beta = random_tensor(&[3], 3, "beta");
    assert_op("batchnorm", &[x, gamma, beta], |g, id| {
        g.batchnorm(id[0], id[1], id[2], &RunningStats::new(3), Mode::Train, BN_EPSILON)
            .unwrap()
            .0
    });
}

#[test]
fn batchnorm_infer_mode_gradients() {
    let x = random_tensor(&[2, 3, 2, 5], 4, "x");
    let gamma = random_tensor(&[3], 4, "gamma");
    let beta = random_tensor(&[3], 4, "beta");
    let running = RunningStats {
        mean: vec![0.1, -0.2, 0.3],
        var: vec![0.5, 1.5, 2.0],
    };
    assert_op("batchnorm-infer", &[x, gamma, beta], |g, id| {
        g.batchnorm(id[0], id[1], id[2], &running, Mode::Infer, BN_EPSILON)
            .unwrap()
            .0
    });
}

#[test]
fn elu_gradients() {
    let x = random_tensor(&[2, 3, 4, 5], 5, "x");
    assert_op("elu", &[x], |g, id| g.elu(id[0], 1.0).unwrap());
}

#[test]
fn maxpool_gradients() {
    let x = random_tensor(&[2, 2, 4, 16], 6, "x");
    assert_op("maxpool", &[x], |g, id| g.maxpool(id[0], (2, 4)).unwrap());
}

#[test]
fn dropout_gradients() {
    let x = random_tensor(&[2, 3, 4], 7, "x");
    let mask: Vec<f64> = (0..x.len()).map(|i| if i % 3 == 0 { 0.0 } else { 4.0 / 3.0 }).collect();
    assert_op("dropout", &[x], |g, id| g.dropout(id[0], mask.clone()).unwrap());
}

#[test]
fn affine_gradients() {
    let x = random_tensor(&[3, 7], 8, "x");
    let w = random_tensor(&[4, 7], 8, "w");
    let b = random_tensor(&[4], 8, "b");
    assert_op("affine", &[x, w, b], |g, id| g.affine(id[0], id[1], id[2]).unwrap());
}

#[test]
fn softmax_cross_entropy_gradients() {
    let z = random_tensor(&[5, 3], 9, "z");
    assert_op("xent", &[z], |g, id| {
        g.softmax_cross_entropy(id[0], &[0, 2, 1, 1, 0]).unwrap()
    });
}

#[test]
fn elastic_net_gradients() {
    // keep weights away from the L1 kink at zero
    let w = Tensor::from_fn(&[4, 6], |i| {
        if i % 2 == 0 {
            0.3 + 0.01 * i as f64
        } else {
            -0.2 - 0.02 * i as f64
        }
    });
    assert_op("elastic", &[w], |g, id| g.elastic_net(id[0], 0.01, 0.02).unwrap());
}

#[test]
fn full_network_gradients_all_ablations() {
    let errs: Vec<(Ablation, (f64, usize))> = Ablation::ALL
        .into_iter()
        .map(|ab| (ab, full_network_check(&ModelSpec::new(6, 32, 3).with_ablation(ab), 21)))
        .collect();
    assert!(
        errs.iter().all(|(_, (e, _))| *e < TOL),
        "worst relative errors {errs:?}"
    );
    // kinks are rare; a large skip count would hide a systematic error
    assert!(errs.iter().all(|(_, (_, s))| *s < 20), "skipped coordinates {errs:?}");
}

#[test]
fn full_network_gradients_table_geometry() {
    let (e, skipped) = full_network_check(&ModelSpec::new(64, 128, 2), 4);
    assert!(e < TOL, "worst relative error {e:e}");
    assert!(skipped < 20, "{skipped} coordinates straddled a kink");
}
