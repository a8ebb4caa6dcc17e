//! One function per CLI verb. Each writes its artifacts under `out` and
//! returns the in-memory results.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eegnet_core::model::{decode_model, enumerate_configs, Ablation, ModelSpec};
use eegnet_core::pipeline::{decode_epochs, Manifest};
use eegnet_core::rng::derive_seed;
use eegnet_core::stats::{
    default_sizes, fdr_correct_with, learning_curve, rank_models, signrank_test, FdrMethod, RankTable,
};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::data::{build_plan, fold_sets, load_dataset, synthesize, write_dataset, Dataset};
use crate::error::CliError;
use crate::experiment::{run_model, train_and_score, ModelRun};
use crate::output::{self, Bundle, CurveEntry, StatRow};

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn base_spec(cfg: &ExperimentConfig, ds: &Dataset) -> ModelSpec {
    cfg.model.spec(ds.channels, ds.samples, ds.classes)
}

fn check_metric(cfg: &ExperimentConfig, ds: &Dataset) -> Result<()> {
    if cfg.metric == eegnet_core::Metric::Auc && ds.classes != 2 {
        return Err(CliError::Config(vec![format!(
            "metric: auc needs exactly 2 classes, the data has {}",
            ds.classes
        )])
        .into());
    }
    Ok(())
}

fn run_label(spec: &ModelSpec) -> String {
    if spec.ablation == Ablation::Model5 {
        spec.kernels.label()
    } else {
        format!("{} {}", spec.ablation, spec.kernels.label())
    }
}

fn write_run_outputs(out: &Path, cfg: &ExperimentConfig, bundle: &Bundle) -> Result<()> {
    let fp = &bundle.fingerprint;
    output::write_summary(out, fp, cfg.metric.tag(), &bundle.runs)?;
    output::write_folds(out, fp, &bundle.plan, &bundle.runs)?;
    output::write_loss_curves(out, fp, &bundle.runs)?;
    bundle.write(out)?;
    Ok(())
}

/// Trains the configured model on every fold.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, save_models: bool) -> Result<Bundle> {
    prepare_out(out)?;
    let ds = load_dataset(cfg)?;
    check_metric(cfg, &ds)?;
    let plan = build_plan(cfg, &ds)?;
    let spec = base_spec(cfg, &ds);
    let models = if save_models {
        let dir = out.join("models");
        std::fs::create_dir_all(&dir)?;
        Some(dir)
    } else {
        None
    };
    let run = run_model(cfg, &ds, &plan, &spec, &run_label(&spec), models.as_deref())?;
    let bundle = Bundle::new("run", cfg, &ds.paradigm, plan, vec![run]);
    write_run_outputs(out, cfg, &bundle)?;
    Ok(bundle)
}

/// Trains all twelve kernel configurations on shared folds and seeds.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<(Bundle, RankTable)> {
    prepare_out(out)?;
    let ds = load_dataset(cfg)?;
    check_metric(cfg, &ds)?;
    let plan = build_plan(cfg, &ds)?;
    let base = base_spec(cfg, &ds);
    let specs: Vec<ModelSpec> = enumerate_configs()
        .into_iter()
        .map(|k| base.clone().with_kernels(k))
        .collect();
    let counts = specs
        .iter()
        .map(|s| Ok(eegnet_core::count_parameters(s)?.total))
        .collect::<Result<Vec<_>>>()?;
    if let Some((i, &c)) = counts.iter().enumerate().find(|(_, &c)| c != counts[0]) {
        return Err(CliError::Invariant(format!(
            "configuration {} has {c} parameters, {} has {}",
            specs[i].kernels, specs[0].kernels, counts[0]
        ))
        .into());
    }
    let mut runs = Vec::with_capacity(specs.len());
    for s in &specs {
        runs.push(run_model(cfg, &ds, &plan, s, &s.kernels.label(), None)?);
    }
    let perf: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| Ok(vec![r.summaries()?.test_best.mean]))
        .collect::<Result<_>>()?;
    let table = rank_models(&perf, true)?;
    let bundle = Bundle::new("sweep", cfg, &ds.paradigm, plan, runs);
    write_run_outputs(out, cfg, &bundle)?;
    output::write_ranks(out, &bundle.fingerprint, &ds.paradigm, &bundle.runs, &table)?;
    Ok((bundle, table))
}

/// Trains the five regularization variants on shared folds and seeds.
pub fn cmd_ablation(cfg: &ExperimentConfig, out: &Path) -> Result<Bundle> {
    prepare_out(out)?;
    let ds = load_dataset(cfg)?;
    check_metric(cfg, &ds)?;
    let plan = build_plan(cfg, &ds)?;
    let base = base_spec(cfg, &ds);
    let mut runs: Vec<ModelRun> = Vec::with_capacity(Ablation::ALL.len());
    for ab in Ablation::ALL {
        let spec = base.clone().with_ablation(ab);
        runs.push(run_model(cfg, &ds, &plan, &spec, ab.tag(), None)?);
    }
    let bundle = Bundle::new("ablation", cfg, &ds.paradigm, plan, runs);
    write_run_outputs(out, cfg, &bundle)?;
    Ok(bundle)
}

/// Test metric against training-set size on one fold of the plan.
pub fn cmd_learning_curve(cfg: &ExperimentConfig, out: &Path) -> Result<Bundle> {
    prepare_out(out)?;
    let ds = load_dataset(cfg)?;
    check_metric(cfg, &ds)?;
    let plan = build_plan(cfg, &ds)?;
    let k_fold = cfg.curve.fold;
    let fold = plan.folds.get(k_fold).ok_or_else(|| {
        CliError::Config(vec![format!(
            "curve.fold: {k_fold} but the plan has {} folds",
            plan.len()
        )])
    })?;
    let sets = fold_sets(cfg, &ds, fold, k_fold)?;
    let ks = if cfg.curve.sizes.is_empty() {
        default_sizes(sets.train.len(), cfg.curve.step)
    } else {
        cfg.curve.sizes.clone()
    };
    if ks.is_empty() {
        return Err(CliError::Config(vec![format!(
            "curve.step: {} exceeds the {} training trials",
            cfg.curve.step,
            sets.train.len()
        )])
        .into());
    }
    let spec = base_spec(cfg, &ds);
    let points = learning_curve(
        |subset, k, rep| {
            let mut sub = sets.clone();
            sub.train = subset.clone();
            let idx = [k as u64, rep as u64];
            let init = derive_seed(cfg.seed, "init", &idx);
            let tr = derive_seed(cfg.seed, "train", &idx);
            let (res, _) =
                train_and_score(cfg, &spec, &sub, init, tr).map_err(|e| match e.downcast::<eegnet_core::Error>() {
                    Ok(e) => e,
                    Err(e) => eegnet_core::Error::Data(e.to_string()),
                })?;
            Ok(res.test_metric_best)
        },
        &sets.train,
        &ks,
        cfg.curve.reps,
        cfg.seed,
    )?;
    let entries: Vec<CurveEntry> = points
        .into_iter()
        .map(|p| CurveEntry {
            k: p.k,
            mean: p.summary.mean,
            stderr: p.summary.stderr,
            values: p.summary.values,
        })
        .collect();
    let mut bundle = Bundle::new("learn-curve", cfg, &ds.paradigm, plan, Vec::new());
    bundle.curve = entries;
    output::write_learning_curve(out, &bundle.fingerprint, &run_label(&spec), &bundle.curve)?;
    bundle.write(out)?;
    Ok(bundle)
}

fn verified(path: &Path) -> Result<Bundle> {
    let b = Bundle::load(path)?;
    let fp = b.config.fingerprint();
    if fp != b.fingerprint {
        return Err(CliError::Comparison(format!(
            "{}: stored fingerprint {} does not match its config ({fp})",
            path.display(),
            b.fingerprint
        ))
        .into());
    }
    if b.runs.is_empty() {
        return Err(CliError::Comparison(format!("{} holds no per-fold results", path.display())).into());
    }
    Ok(b)
}

/// Paired sign-rank tests of every run in `model_path` against every run in
/// `reference_path`, FDR-corrected at `q`.
pub fn cmd_compare(
    reference_path: &Path,
    model_path: &Path,
    q: f64,
    method: FdrMethod,
    out: &Path,
) -> Result<Vec<StatRow>> {
    let reference = verified(reference_path)?;
    let model = verified(model_path)?;
    if reference.plan.len() != model.plan.len() {
        return Err(CliError::Comparison(format!(
            "fold counts differ ({} vs {})",
            reference.plan.len(),
            model.plan.len()
        ))
        .into());
    }
    for (k, (a, b)) in reference.plan.folds.iter().zip(&model.plan.folds).enumerate() {
        if a.test != b.test {
            return Err(CliError::Comparison(format!("fold {k} tests on different subjects")).into());
        }
    }
    if reference.config.metric != model.config.metric {
        return Err(CliError::Comparison("bundles report different metrics".into()).into());
    }
    let mut rows = Vec::new();
    for m in &model.runs {
        for r in &reference.runs {
            let (x, y) = (m.test_best(), r.test_best());
            let t = signrank_test(&x, &y).with_context(|| format!("comparing `{}` with `{}`", m.label, r.label))?;
            let (ms, rs) = (m.summaries()?, r.summaries()?);
            rows.push(StatRow {
                model: m.label.clone(),
                reference: r.label.clone(),
                dataset: model.paradigm.clone(),
                metric: model.config.metric.tag().to_string(),
                model_mean: ms.test_best.mean,
                model_stderr: ms.test_best.stderr,
                reference_mean: rs.test_best.mean,
                reference_stderr: rs.test_best.stderr,
                n: t.n,
                w_plus: t.w_plus,
                p: t.p,
                p_adjusted: f64::NAN,
                rejected: false,
            });
        }
    }
    let pvals: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let fdr = fdr_correct_with(&pvals, q, method)?;
    for (row, (adj, rej)) in rows.iter_mut().zip(fdr.adjusted.iter().zip(&fdr.rejected)) {
        row.p_adjusted = *adj;
        row.rejected = *rej;
    }
    let tag = match method {
        FdrMethod::Independent => "independent",
        FdrMethod::Dependent => "dependent",
    };
    let fp = hex::encode(Sha256::digest(
        format!("{}:{}:{}:{tag}", reference.fingerprint, model.fingerprint, output::f(q)).as_bytes(),
    ));
    prepare_out(out)?;
    output::write_stats(out, &fp, &rows)?;
    Ok(rows)
}

/// Writes the configured synthetic dataset as epoch files plus a manifest.
pub fn cmd_gen_synth(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let spec = cfg
        .data
        .synthetic
        .as_ref()
        .ok_or_else(|| CliError::Config(vec!["data.synthetic: required by gen-synth".into()]))?;
    let trials = cfg.data.trials.context("data.trials missing")?;
    let units = synthesize(spec, trials, cfg.data.split_sessions)?;
    write_dataset(out, &cfg.paradigm_name(), &units, None)
}

/// Human-readable description of an epoch file, model file, bundle,
/// manifest or experiment config.
pub fn inspect(path: &Path) -> Result<String> {
    use std::fmt::Write;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut s = String::new();
    if bytes.starts_with(b"EEGE") {
        let set = decode_epochs(&bytes)?;
        writeln!(
            s,
            "epoch file: {} trials of {} channels x {} samples",
            set.len(),
            set.channels,
            set.samples
        )?;
        writeln!(
            s,
            "rate {} Hz, window {:?} s, {} classes",
            set.rate, set.window, set.classes
        )?;
        writeln!(s, "class counts {:?}", set.class_counts())?;
        writeln!(s, "subjects {:?}", set.subject_ids())?;
        return Ok(s);
    }
    if bytes.starts_with(b"EEGM") {
        let net = decode_model(&bytes)?;
        let spec = net.spec();
        writeln!(s, "model file: {} {}", spec.ablation, spec.kernels)?;
        writeln!(
            s,
            "input {} x {}, {} classes",
            spec.channels, spec.samples, spec.classes
        )?;
        write_counts(&mut s, spec)?;
        for e in net.shape_trace()? {
            writeln!(s, "  {:<12} {:?}", e.stage, e.shape)?;
        }
        return Ok(s);
    }
    let text = String::from_utf8(bytes).context("file is neither binary nor UTF-8 text")?;
    if let Ok(b) = serde_json::from_str::<Bundle>(&text) {
        writeln!(s, "bundle: `{}` from {} {}", b.command, b.tool, b.version)?;
        writeln!(s, "fingerprint {}", b.fingerprint)?;
        let ok = b.config.fingerprint() == b.fingerprint;
        writeln!(s, "fingerprint matches config: {ok}")?;
        writeln!(s, "{} folds on `{}`", b.plan.len(), b.paradigm)?;
        for r in &b.runs {
            let sm = r.summaries()?;
            writeln!(
                s,
                "  {:<16} params {:>6}  test {} {:.4} ± {:.4}",
                r.label, r.param_count, b.config.metric, sm.test_best.mean, sm.test_best.stderr
            )?;
        }
        for c in &b.curve {
            writeln!(s, "  K={:<6} {:.4} ± {:.4}", c.k, c.mean, c.stderr)?;
        }
        return Ok(s);
    }
    if let Ok(m) = Manifest::from_toml(&text) {
        writeln!(
            s,
            "manifest: paradigm `{}`, {} Hz, window {:?} s, {} classes",
            m.paradigm.name, m.paradigm.rate, m.paradigm.window, m.paradigm.classes
        )?;
        writeln!(s, "{} subjects: {:?}", m.subjects.len(), m.subject_ids())?;
        return Ok(s);
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = ExperimentConfig::from_toml(&text, base)?;
    writeln!(s, "experiment config, fingerprint {}", cfg.fingerprint())?;
    if let Some(syn) = &cfg.data.synthetic {
        let spec = cfg.model.spec(syn.channels, syn.samples, syn.classes);
        write_counts(&mut s, &spec)?;
    }
    Ok(s)
}

fn write_counts(s: &mut String, spec: &ModelSpec) -> Result<()> {
    use std::fmt::Write;
    let pc = eegnet_core::count_parameters(spec)?;
    writeln!(s, "parameters: {}", pc.total)?;
    for (name, n) in &pc.layers {
        writeln!(s, "  {name:<12} {n}")?;
    }
    Ok(())
}
