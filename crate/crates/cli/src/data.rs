//! Dataset loading and per-fold role sets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eegnet_core::pipeline::{
    balance_classes, make_random_folds, make_smr_folds, write_epochs, EpochSet, Fold, FoldPlan, Manifest, Paradigm,
    Portion, Role, RoleSizes, SubjectEntry, Unit,
};
use eegnet_core::rng::stream;
use eegnet_core::synth::{generate, SyntheticSpec};

use crate::config::{ExperimentConfig, FoldConfig};

/// Every epoch set of an experiment keyed by subject portion.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub paradigm: String,
    pub units: BTreeMap<Unit, EpochSet>,
    pub subjects: Vec<u32>,
    pub channels: usize,
    pub samples: usize,
    pub classes: usize,
}

impl Dataset {
    fn from_units(paradigm: String, units: BTreeMap<Unit, EpochSet>) -> Result<Self> {
        let first = units.values().next().context("dataset holds no epoch sets")?;
        let (channels, samples, classes) = (first.channels, first.samples, first.classes);
        if let Some((u, _)) = units
            .iter()
            .find(|(_, s)| (s.channels, s.samples, s.classes) != (channels, samples, classes))
        {
            anyhow::bail!(eegnet_core::Error::Data(format!(
                "unit {u} has a different trial geometry"
            )));
        }
        let mut subjects: Vec<u32> = units.keys().map(|u| u.subject).collect();
        subjects.dedup();
        Ok(Dataset {
            paradigm,
            units,
            subjects,
            channels,
            samples,
            classes,
        })
    }

    pub fn get(&self, u: &Unit) -> Option<&EpochSet> {
        self.units.get(u)
    }

    pub fn total_trials(&self) -> usize {
        self.units.values().map(EpochSet::len).sum()
    }
}

/// Synthetic trials split into per-subject units.
pub fn synthesize(spec: &SyntheticSpec, trials: usize, split_sessions: bool) -> Result<BTreeMap<Unit, EpochSet>> {
    let mut rng = stream(spec.seed, "synthetic", &[trials as u64]);
    let all = generate(spec, trials, &mut rng)?;
    let mut units = BTreeMap::new();
    for id in all.subject_ids() {
        let set = all.filter_subjects(&[id]);
        if split_sessions {
            let half = set.len() / 2;
            let first: Vec<usize> = (0..half).collect();
            let second: Vec<usize> = (half..set.len()).collect();
            units.insert(
                Unit {
                    subject: id,
                    portion: Portion::Train,
                },
                set.select(&first),
            );
            units.insert(
                Unit {
                    subject: id,
                    portion: Portion::Test,
                },
                set.select(&second),
            );
        } else {
            units.insert(Unit::whole(id), set);
        }
    }
    Ok(units)
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let d = &cfg.data;
    match (&d.manifest, &d.synthetic) {
        (Some(path), _) => {
            let m = Manifest::load(path)?;
            let base = path.parent().unwrap_or(Path::new("."));
            let units = m.load_data(base)?;
            Dataset::from_units(m.paradigm.name.clone(), units)
        }
        (None, Some(spec)) => {
            let trials = d.trials.context("synthetic data needs a trial count")?;
            Dataset::from_units(cfg.paradigm_name(), synthesize(spec, trials, d.split_sessions)?)
        }
        (None, None) => anyhow::bail!("no data source configured"),
    }
}

pub fn build_plan(cfg: &ExperimentConfig, ds: &Dataset) -> Result<FoldPlan> {
    let plan = match &cfg.folds {
        FoldConfig::Random {
            train,
            validation,
            test,
            folds,
            fixed_test,
        } => {
            let sizes = RoleSizes {
                train: *train,
                validation: *validation,
                test: *test,
            };
            let mut rng = stream(cfg.seed, "folds", &[]);
            let plan = make_random_folds(&ds.subjects, sizes, *folds, fixed_test, &mut rng)?;
            // Random plans address whole subjects; split data pools both sessions.
            if ds.units.keys().any(|u| u.portion != Portion::Whole) {
                merge_sessions_plan(plan)
            } else {
                plan
            }
        }
        FoldConfig::Smr => make_smr_folds(&ds.subjects, |s, p| {
            ds.units.contains_key(&Unit { subject: s, portion: p })
        })?,
    };
    for f in &plan.folds {
        f.check_disjoint()?;
    }
    Ok(plan)
}

fn merge_sessions_plan(plan: FoldPlan) -> FoldPlan {
    let expand = |units: &[Unit]| -> Vec<Unit> {
        units
            .iter()
            .flat_map(|u| {
                [Portion::Train, Portion::Test].map(|portion| Unit {
                    subject: u.subject,
                    portion,
                })
            })
            .collect()
    };
    FoldPlan {
        folds: plan
            .folds
            .iter()
            .map(|f| Fold {
                train: expand(&f.train),
                validation: expand(&f.validation),
                test: expand(&f.test),
            })
            .collect(),
    }
}

/// Balanced train, validation and test sets of one fold.
#[derive(Debug, Clone)]
pub struct FoldSets {
    pub train: EpochSet,
    pub validation: EpochSet,
    pub test: EpochSet,
}

pub fn fold_sets(cfg: &ExperimentConfig, ds: &Dataset, fold: &Fold, k: usize) -> Result<FoldSets> {
    let role_set = |role: Role, idx: u64| -> Result<EpochSet> {
        let set = fold.gather(role, |u| ds.get(u))?;
        if cfg.preprocess.balance {
            Ok(balance_classes(
                &set,
                &mut stream(cfg.seed, "balance", &[k as u64, idx]),
            )?)
        } else {
            Ok(set)
        }
    };
    Ok(FoldSets {
        train: role_set(Role::Train, 0)?,
        validation: role_set(Role::Validation, 1)?,
        test: role_set(Role::Test, 2)?,
    })
}

/// Writes one epoch file per unit plus a manifest next to them.
pub fn write_dataset(
    dir: &Path,
    paradigm: &str,
    units: &BTreeMap<Unit, EpochSet>,
    band: Option<(f64, f64)>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let first = units.values().next().context("nothing to write")?;
    let mut subjects: BTreeMap<u32, SubjectEntry> = BTreeMap::new();
    for (u, set) in units {
        let name = match u.portion {
            Portion::Whole => format!("subject_{:02}.eege", u.subject),
            Portion::Train => format!("subject_{:02}_train.eege", u.subject),
            Portion::Test => format!("subject_{:02}_test.eege", u.subject),
        };
        write_epochs(set, dir.join(&name))?;
        let e = subjects.entry(u.subject).or_insert(SubjectEntry {
            id: u.subject,
            path: None,
            train: None,
            test: None,
        });
        let slot = match u.portion {
            Portion::Whole => &mut e.path,
            Portion::Train => &mut e.train,
            Portion::Test => &mut e.test,
        };
        *slot = Some(PathBuf::from(name));
    }
    let manifest = Manifest {
        paradigm: Paradigm {
            name: paradigm.to_string(),
            rate: first.rate,
            window: first.window,
            band,
            classes: first.classes,
        },
        subjects: subjects.into_values().collect(),
    };
    manifest.validate()?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, manifest.to_toml()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
