//! Preprocessing, epoching, fold construction and the epoch file format.

mod epochs;
mod filter;
mod folds;
mod format;
mod manifest;
mod recording;

pub use epochs::{balance_classes, extract_epochs, subsample_training, window_samples, EpochSet};
pub use filter::{butter_bandpass, filtfilt, sosfilt, Biquad, Sos};
pub use folds::{make_random_folds, make_smr_folds, Fold, FoldPlan, Portion, Role, RoleSizes, Unit, SMR_SUBJECTS};
pub use format::{decode_epochs, encode_epochs, read_epochs, write_epochs};
pub use manifest::{Manifest, Paradigm, SubjectEntry};
pub use recording::{bandpass, downsample, ContinuousRecording, Event, BANDPASS_ORDER};
