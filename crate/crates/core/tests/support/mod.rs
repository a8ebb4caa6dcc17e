//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

pub mod gradcheck;

use eegnet_core::rng::stream;
use eegnet_core::Tensor;
use rand::Rng;

pub fn random_tensor(shape: &[usize], seed: u64, label: &str) -> Tensor {
    let mut rng = stream(seed, label, &[]);
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// `[B, C, T] x [F, C] + [F] -> [B, F, 1, T]` by direct summation.
pub fn spatial_oracle(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let (bs, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let f = w.shape()[0];
    let mut out = Tensor::zeros(&[bs, f, 1, t]);
    for n in 0..bs {
        for fi in 0..f {
            for k in 0..t {
                let mut s = b.get(&[fi]);
                for ci in 0..c {
                    s += w.get(&[fi, ci]) * x.get(&[n, ci, k]);
                }
                out.set(&[n, fi, 0, k], s);
            }
        }
    }
    out
}

/// Same-padded cross-correlation with `(k-1)/2` leading zeros per axis,
/// written as the textbook six-deep loop over explicit padded coordinates.
pub fn conv2d_oracle(x: &Tensor, k: &Tensor, b: &Tensor) -> Tensor {
    let (bs, fin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (fout, kh, kw) = (k.shape()[0], k.shape()[2], k.shape()[3]);
    let (pt, pl) = (((kh - 1) / 2) as i64, ((kw - 1) / 2) as i64);
    let mut out = Tensor::zeros(&[bs, fout, h, w]);
    for n in 0..bs {
        for o in 0..fout {
            for i in 0..h {
                for j in 0..w {
                    let mut s = b.get(&[o]);
                    for ci in 0..fin {
                        for u in 0..kh {
                            for v in 0..kw {
                                let r = i as i64 + u as i64 - pt;
                                let c = j as i64 + v as i64 - pl;
                                if r >= 0 && r < h as i64 && c >= 0 && c < w as i64 {
                                    s += k.get(&[o, ci, u, v]) * x.get(&[n, ci, r as usize, c as usize]);
                                }
                            }
                        }
                    }
                    out.set(&[n, o, i, j], s);
                }
            }
        }
    }
    out
}

/// Central difference of `f` at every coordinate listed in `coords`.
pub fn numeric_grad(t: &Tensor, coords: &[usize], h: f64, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    coords
        .iter()
        .map(|&i| {
            let mut plus = t.clone();
            plus.data_mut()[i] += h;
            let mut minus = t.clone();
            minus.data_mut()[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counting half.
pub fn auc_brute(scores: &[f64], labels: &[usize]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

/// Two-sided exact sign-rank p by walking all 2^n sign assignments.
/// Assumes distinct nonzero magnitudes.
pub fn signrank_enumerated(d: &[f64]) -> f64 {
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].abs().partial_cmp(&d[b].abs()).unwrap());
    let mut rank = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = (r + 1) as f64;
    }
    let total: f64 = rank.iter().sum();
    let w: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let observed = (w - total / 2.0).abs();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let wm: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum();
        if (wm - total / 2.0).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

use eegnet_core::pipeline::{FoldPlan, Portion, Unit};
use std::collections::BTreeSet;

fn subjects_of(units: &[Unit]) -> BTreeSet<u32> {
    units.iter().map(|u| u.subject).collect()
}

/// Random subject-level plan: every fold has the given role sizes, roles are
/// disjoint, and together they cover `subjects` exactly.
pub fn check_random_plan(
    plan: &FoldPlan,
    subjects: &[u32],
    sizes: (usize, usize, usize),
    folds: usize,
) -> Result<(), String> {
    if plan.len() != folds {
        return Err(format!("{} folds, expected {folds}", plan.len()));
    }
    let all: BTreeSet<u32> = subjects.iter().copied().collect();
    for (k, f) in plan.folds.iter().enumerate() {
        if (f.train.len(), f.validation.len(), f.test.len()) != sizes {
            return Err(format!(
                "fold {k} sizes {:?}",
                (f.train.len(), f.validation.len(), f.test.len())
            ));
        }
        if f.train
            .iter()
            .chain(&f.validation)
            .chain(&f.test)
            .any(|u| u.portion != Portion::Whole)
        {
            return Err(format!("fold {k} refers to session portions"));
        }
        f.check_disjoint().map_err(|e| format!("fold {k}: {e}"))?;
        let (tr, va, te) = (subjects_of(&f.train), subjects_of(&f.validation), subjects_of(&f.test));
        let union: BTreeSet<u32> = tr.union(&va).chain(te.iter()).copied().collect();
        if union != all {
            return Err(format!("fold {k} covers {union:?}"));
        }
    }
    Ok(())
}

/// Fixed-test plan: the test set is `fixed` in every fold.
pub fn check_fixed_test_plan(plan: &FoldPlan, fixed: &[u32]) -> Result<(), String> {
    let fixed: BTreeSet<u32> = fixed.iter().copied().collect();
    for (k, f) in plan.folds.iter().enumerate() {
        if subjects_of(&f.test) != fixed {
            return Err(format!("fold {k} tests on {:?}", subjects_of(&f.test)));
        }
        if !subjects_of(&f.train).is_disjoint(&fixed) || !subjects_of(&f.validation).is_disjoint(&fixed) {
            return Err(format!("fold {k} trains or validates on a fixed test subject"));
        }
    }
    Ok(())
}

/// Leave-one-subject-out over sessions: fold `k` validates on subject k's
/// training session, tests on its test session and trains on every other
/// subject's training session.
pub fn check_smr_plan(plan: &FoldPlan, subjects: &[u32]) -> Result<(), String> {
    if plan.len() != subjects.len() {
        return Err(format!("{} folds for {} subjects", plan.len(), subjects.len()));
    }
    for (f, &s) in plan.folds.iter().zip(subjects) {
        f.check_disjoint().map_err(|e| e.to_string())?;
        if f.validation
            != [Unit {
                subject: s,
                portion: Portion::Train,
            }]
        {
            return Err(format!("fold for {s} validates on {:?}", f.validation));
        }
        if f.test
            != [Unit {
                subject: s,
                portion: Portion::Test,
            }]
        {
            return Err(format!("fold for {s} tests on {:?}", f.test));
        }
        let want: Vec<Unit> = subjects
            .iter()
            .filter(|&&o| o != s)
            .map(|&o| Unit {
                subject: o,
                portion: Portion::Train,
            })
            .collect();
        if f.train != want {
            return Err(format!("fold for {s} trains on {:?}", f.train));
        }
    }
    Ok(())
}
