//! Subject-level train / validation / test assignments.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::epochs::EpochSet;

/// Number of subjects in the leave-one-subject-out oscillatory scheme.
pub const SMR_SUBJECTS: usize = 9;

/// Which part of a subject's data a fold refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Portion {
    Whole,
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub subject: u32,
    pub portion: Portion,
}

impl Unit {
    pub fn whole(subject: u32) -> Self {
        Unit {
            subject,
            portion: Portion::Whole,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.portion {
            Portion::Whole => write!(f, "{}", self.subject),
            Portion::Train => write!(f, "{}:train", self.subject),
            Portion::Test => write!(f, "{}:test", self.subject),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<Unit>,
    pub validation: Vec<Unit>,
    pub test: Vec<Unit>,
}

impl Fold {
    pub fn units(&self, role: Role) -> &[Unit] {
        match role {
            Role::Train => &self.train,
            Role::Validation => &self.validation,
            Role::Test => &self.test,
        }
    }

    /// Errors unless the three role sets are pairwise disjoint (and free of duplicates).
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for u in self.train.iter().chain(&self.validation).chain(&self.test) {
            if !seen.insert(*u) {
                return Err(Error::Data(format!("unit {u} appears in more than one role")));
            }
        }
        Ok(())
    }

    /// Concatenates the data of every unit in `role`, in listed order.
    pub fn gather<'a>(&self, role: Role, source: impl Fn(&Unit) -> Option<&'a EpochSet>) -> Result<EpochSet> {
        let sets = self
            .units(role)
            .iter()
            .map(|u| source(u).ok_or_else(|| Error::Data(format!("no data for unit {u}"))))
            .collect::<Result<Vec<_>>>()?;
        EpochSet::concat(&sets)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    /// Role-set sizes of every fold must equal `(train, validation, test)`.
    pub fn check_sizes(&self, sizes: (usize, usize, usize)) -> Result<()> {
        for (k, f) in self.folds.iter().enumerate() {
            let got = (f.train.len(), f.validation.len(), f.test.len());
            if got != sizes {
                return Err(Error::Data(format!(
                    "fold {k} has role sizes {got:?}, expected {sizes:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Role-set sizes for random subject partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

/// Independent random partitions of `subjects`, one per fold.
///
/// With a non-empty `fixed_test` every fold tests on exactly those subjects
/// and only the remaining ones are split into train and validation.
pub fn make_random_folds(
    subjects: &[u32],
    sizes: RoleSizes,
    n_folds: usize,
    fixed_test: &[u32],
    rng: &mut impl Rng,
) -> Result<FoldPlan> {
    let unique: BTreeSet<u32> = subjects.iter().copied().collect();
    if unique.len() != subjects.len() {
        return Err(Error::Parameter("subject list contains duplicates".into()));
    }
    if sizes.train + sizes.validation + sizes.test != subjects.len() {
        return Err(Error::Parameter(format!(
            "{}/{}/{} split does not cover {} subjects",
            sizes.train,
            sizes.validation,
            sizes.test,
            subjects.len()
        )));
    }
    if sizes.train == 0 || sizes.validation == 0 || sizes.test == 0 {
        return Err(Error::Parameter("every role needs at least one subject".into()));
    }
    if n_folds == 0 {
        return Err(Error::Parameter("need at least one fold".into()));
    }
    if !fixed_test.is_empty() {
        if fixed_test.len() != sizes.test {
            return Err(Error::Parameter(format!(
                "{} fixed test subjects but test size {}",
                fixed_test.len(),
                sizes.test
            )));
        }
        if let Some(s) = fixed_test.iter().find(|s| !unique.contains(s)) {
            return Err(Error::Parameter(format!(
                "fixed test subject {s} is not in the subject list"
            )));
        }
    }
    let pool: Vec<u32> = subjects.iter().copied().filter(|s| !fixed_test.contains(s)).collect();
    let whole = |ids: &[u32]| ids.iter().map(|&s| Unit::whole(s)).collect::<Vec<_>>();
    let mut folds = Vec::with_capacity(n_folds);
    for _ in 0..n_folds {
        let mut order = pool.clone();
        order.shuffle(rng);
        let (test, rest) = if fixed_test.is_empty() {
            order.split_at(sizes.test)
        } else {
            (fixed_test, &order[..])
        };
        let (validation, train) = rest.split_at(sizes.validation);
        folds.push(Fold {
            train: whole(train),
            validation: whole(validation),
            test: whole(test),
        });
    }
    Ok(FoldPlan { folds })
}

/// Leave-one-subject-out plan for subjects that each have a train and a
/// test portion. Fold `k` trains on every other subject's train portion,
/// validates on subject `k`'s train portion and tests on its test portion.
pub fn make_smr_folds(subjects: &[u32], has_portion: impl Fn(u32, Portion) -> bool) -> Result<FoldPlan> {
    if subjects.len() != SMR_SUBJECTS {
        return Err(Error::Parameter(format!(
            "scheme needs exactly {SMR_SUBJECTS} subjects, got {}",
            subjects.len()
        )));
    }
    let unique: BTreeSet<u32> = subjects.iter().copied().collect();
    if unique.len() != subjects.len() {
        return Err(Error::Parameter("subject list contains duplicates".into()));
    }
    for &s in subjects {
        for p in [Portion::Train, Portion::Test] {
            if !has_portion(s, p) {
                return Err(Error::Data(format!("subject {s} has no {p:?} portion").to_lowercase()));
            }
        }
    }
    let unit = |subject, portion| Unit { subject, portion };
    let folds = subjects
        .iter()
        .map(|&k| Fold {
            train: subjects
                .iter()
                .filter(|&&s| s != k)
                .map(|&s| unit(s, Portion::Train))
                .collect(),
            validation: vec![unit(k, Portion::Train)],
            test: vec![unit(k, Portion::Test)],
        })
        .collect();
    Ok(FoldPlan { folds })
}
