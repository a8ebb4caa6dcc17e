//! Dataset manifest: paradigm metadata plus subject -> epoch-file mapping.
//!
//! ```toml
//! [paradigm]
//! name = "p300"
//! rate = 128.0
//! window = [0.0, 1.0]
//! band = [1.0, 40.0]
//! classes = 2
//!
//! [[subjects]]
//! id = 1
//! path = "s01.eege"
//!
//! [[subjects]]           # subjects with separate train / test sessions
//! id = 2
//! train = "s02_train.eege"
//! test = "s02_test.eege"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::epochs::EpochSet;
use super::folds::{Portion, Unit};
use super::format::read_epochs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paradigm {
    pub name: String,
    pub rate: f64,
    pub window: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<(f64, f64)>,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub paradigm: Paradigm,
    pub subjects: Vec<SubjectEntry>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.subjects {
            if !seen.insert(s.id) {
                return Err(Error::Format(format!("manifest lists subject {} twice", s.id)));
            }
            let split = s.train.is_some() || s.test.is_some();
            if s.path.is_some() == split {
                return Err(Error::Format(format!(
                    "subject {} needs either `path` or `train`/`test`, not both or neither",
                    s.id
                )));
            }
        }
        if self.paradigm.classes < 2 {
            return Err(Error::Format("paradigm needs at least 2 classes".into()));
        }
        Ok(())
    }

    pub fn subject_ids(&self) -> Vec<u32> {
        self.subjects.iter().map(|s| s.id).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::from_toml(&text)
    }

    /// Reads every referenced epoch file, keyed by subject portion, and
    /// checks each against the paradigm metadata.
    pub fn load_data(&self, base: &Path) -> Result<BTreeMap<Unit, EpochSet>> {
        let mut out = BTreeMap::new();
        for s in &self.subjects {
            for (portion, rel) in [
                (Portion::Whole, &s.path),
                (Portion::Train, &s.train),
                (Portion::Test, &s.test),
            ] {
                let Some(rel) = rel else { continue };
                let file = base.join(rel);
                let set = read_epochs(&file)?;
                let p = &self.paradigm;
                if set.rate != p.rate || set.window != p.window || set.classes != p.classes {
                    return Err(Error::Data(format!(
                        "{} does not match paradigm `{}` (rate, window or class count)",
                        file.display(),
                        p.name
                    )));
                }
                if set.subjects.iter().any(|&id| id != s.id) {
                    return Err(Error::Data(format!(
                        "{} holds trials of subjects other than {}",
                        file.display(),
                        s.id
                    )));
                }
                out.insert(Unit { subject: s.id, portion }, set);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[paradigm]
name = "smr"
rate = 128.0
window = [0.5, 2.5]
band = [4.0, 40.0]
classes = 4

[[subjects]]
id = 1
train = "a.eege"
test = "b.eege"

[[subjects]]
id = 2
path = "c.eege"
"#;

    #[test]
    fn parse_and_round_trip() {
        let m = Manifest::from_toml(TEXT).unwrap();
        assert_eq!(m.subject_ids(), vec![1, 2]);
        assert_eq!(m.paradigm.window, (0.5, 2.5));
        assert_eq!(Manifest::from_toml(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn path_and_split_are_exclusive() {
        let bad = TEXT.replace("id = 2\npath", "id = 2\ntrain = \"x\"\npath");
        assert!(Manifest::from_toml(&bad).is_err());
    }
}
