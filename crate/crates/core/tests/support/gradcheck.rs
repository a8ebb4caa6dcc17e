use super::{numeric_grad, random_tensor, rel_err};
use eegnet_core::graph::{Graph, NodeId};
use eegnet_core::model::DropoutSource;
use eegnet_core::ops::Mode;
use eegnet_core::rng::stream;
use eegnet_core::{EegNet, ModelSpec, Tensor};
use rand::seq::index::sample;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-5;
/// Denominator floor for near-zero gradients, where central differences
/// carry absolute error around 1e-10.
pub const FLOOR: f64 = 1e-4;

/// Up to `want` coordinates of a `len`-element tensor whose `+-STEP`
/// perturbations keep the graph's branch signature; central differences
/// across a kink measure the kink, not the derivative. Also returns how many
/// candidates were rejected.
fn smooth_coords(len: usize, want: usize, seed: u64, signature: impl Fn(usize, f64) -> u64) -> (Vec<usize>, usize) {
    let base = signature(0, 0.0);
    let order = sample(&mut stream(seed, "coords", &[]), len, len).into_vec();
    let mut picked = Vec::with_capacity(want);
    let mut rejected = 0;
    for c in order {
        if picked.len() == want {
            break;
        }
        if signature(c, STEP) == base && signature(c, -STEP) == base {
            picked.push(c);
        } else {
            rejected += 1;
        }
    }
    (picked, rejected)
}

/// `sum(y * r)` as a scalar node: flatten, then a one-unit affine map with weights `r`.
fn readout(g: &mut Graph, y: NodeId, r: &Tensor) -> NodeId {
    let flat = g.reshape(y, &[1, r.len()]).unwrap();
    let w = g.input(Tensor::new(vec![1, r.len()], r.data().to_vec()).unwrap());
    let b = g.input(Tensor::zeros(&[1]));
    g.affine(flat, w, b).unwrap()
}

/// Worst relative error between tape gradients of `<op(inputs), r>` and
/// central differences at up to 20 coordinates of every input.
pub fn check_op(name: &str, inputs: &[Tensor], op: impl Fn(&mut Graph, &[NodeId]) -> NodeId) -> f64 {
    let build = |vals: &[Tensor]| {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = vals.iter().enumerate().map(|(i, v)| g.param(i, v.clone())).collect();
        let y = op(&mut g, &ids);
        (g, y)
    };
    let r = {
        let (g, y) = build(inputs);
        random_tensor(g.value(y).unwrap().shape(), 99, name)
    };
    let loss_of = |vals: &[Tensor]| -> f64 {
        let (g, y) = build(vals);
        g.value(y)
            .unwrap()
            .data()
            .iter()
            .zip(r.data())
            .map(|(a, b)| a * b)
            .sum()
    };
    let (mut g, y) = build(inputs);
    let loss = readout(&mut g, y, &r);
    let grads = g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (slot, t) in inputs.iter().enumerate() {
        let an = grads
            .param(slot)
            .unwrap_or_else(|| panic!("{name}: no gradient for input {slot}"));
        let (coords, _) = smooth_coords(t.len(), 20, slot as u64, |c, d| {
            let mut vals = inputs.to_vec();
            vals[slot].data_mut()[c] += d;
            build(&vals).0.branch_signature()
        });
        let num = numeric_grad(t, &coords, STEP, |p| {
            let mut vals = inputs.to_vec();
            vals[slot] = p.clone();
            loss_of(&vals)
        });
        for (&c, n) in coords.iter().zip(num) {
            worst = worst.max(rel_err(an.data()[c], n, FLOOR));
        }
    }
    worst
}

fn network_loss(net: &EegNet, batch: &Tensor, labels: &[usize]) -> (f64, u64) {
    let mut g = Graph::new();
    let fwd = net
        .forward_graph(&mut g, batch.clone(), Mode::Train, DropoutSource::Disabled)
        .unwrap();
    let loss = g.softmax_cross_entropy(fwd.logits, labels).unwrap();
    (g.value(loss).unwrap().data()[0], g.branch_signature())
}

/// Full network, train mode, dropout off, batch of 4, 20 coordinates per
/// tensor. Returns the worst relative error and the number of candidate
/// coordinates skipped for straddling a kink.
pub fn full_network_check(spec: &ModelSpec, seed: u64) -> (f64, usize) {
    let net = EegNet::with_seed(spec, seed).unwrap();
    let batch = random_tensor(&[4, spec.channels, spec.samples], seed, "batch");
    let labels: Vec<usize> = (0..4).map(|i| i % spec.classes).collect();
    let mut g = Graph::new();
    let fwd = net
        .forward_graph(&mut g, batch.clone(), Mode::Train, DropoutSource::Disabled)
        .unwrap();
    let loss = g.softmax_cross_entropy(fwd.logits, &labels).unwrap();
    let grads = g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (slot, p) in net.params().iter().enumerate() {
        let an = grads.param(slot).expect("every parameter reaches the loss");
        let (coords, rejected) = smooth_coords(p.len(), 20, seed * 1000 + slot as u64, |c, d| {
            let mut m = net.clone();
            m.params_mut()[slot].data_mut()[c] += d;
            network_loss(&m, &batch, &labels).1
        });
        skipped += rejected;
        let num = numeric_grad(p, &coords, STEP, |q| {
            let mut m = net.clone();
            m.params_mut()[slot] = q.clone();
            network_loss(&m, &batch, &labels).0
        });
        for (&c, n) in coords.iter().zip(num) {
            worst = worst.max(rel_err(an.data()[c], n, FLOOR));
        }
    }
    (worst, skipped)
}
