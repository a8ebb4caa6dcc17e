//! Epoched trial sets: extraction, class balancing and subsampling.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::recording::ContinuousRecording;

/// Trials x channels x samples, with a label and subject id per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub channels: usize,
    pub samples: usize,
    pub rate: f64,
    /// Window (start, end) in seconds relative to the event.
    pub window: (f64, f64),
    pub classes: usize,
    /// Trial-major `(trial, channel, sample)` payload.
    pub data: Vec<f32>,
    pub labels: Vec<usize>,
    pub subjects: Vec<u32>,
}

/// `round((end - start) * rate)` with halves rounded up.
pub fn window_samples(window: (f64, f64), rate: f64) -> usize {
    round_half_up((window.1 - window.0) * rate).max(0) as usize
}

pub(crate) fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

impl EpochSet {
    pub fn empty(channels: usize, samples: usize, rate: f64, window: (f64, f64), classes: usize) -> Self {
        EpochSet {
            channels,
            samples,
            rate,
            window,
            classes,
            data: Vec::new(),
            labels: Vec::new(),
            subjects: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn trial_len(&self) -> usize {
        self.channels * self.samples
    }

    pub fn trial(&self, i: usize) -> &[f32] {
        let n = self.trial_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn push(&mut self, trial: &[f32], label: usize, subject: u32) {
        assert_eq!(trial.len(), self.trial_len(), "trial length");
        self.data.extend_from_slice(trial);
        self.labels.push(label);
        self.subjects.push(subject);
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.subjects.len() != n {
            return Err(Error::Data(format!(
                "{} labels but {} subject ids",
                n,
                self.subjects.len()
            )));
        }
        if self.data.len() != n * self.trial_len() {
            return Err(Error::Data(format!(
                "payload holds {} values, expected {n} x {} x {}",
                self.data.len(),
                self.channels,
                self.samples
            )));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::Data(format!("label {l} outside [0, {})", self.classes)));
        }
        if !(self.rate > 0.0) {
            return Err(Error::Data(format!("sample rate {} must be positive", self.rate)));
        }
        let t = window_samples(self.window, self.rate);
        if t != self.samples {
            return Err(Error::Data(format!(
                "window {:?} at {} Hz spans {t} samples but trials have {}",
                self.window, self.rate, self.samples
            )));
        }
        Ok(())
    }

    /// New set holding the given trials in the given order.
    pub fn select(&self, indices: &[usize]) -> EpochSet {
        let mut out = EpochSet::empty(self.channels, self.samples, self.rate, self.window, self.classes);
        out.data.reserve(indices.len() * self.trial_len());
        for &i in indices {
            out.push(self.trial(i), self.labels[i], self.subjects[i]);
        }
        out
    }

    /// Trials whose subject id is in `subjects`, in original order.
    pub fn filter_subjects(&self, subjects: &[u32]) -> EpochSet {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| subjects.contains(&self.subjects[i]))
            .collect();
        self.select(&idx)
    }

    pub fn subject_ids(&self) -> Vec<u32> {
        let mut ids = self.subjects.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Concatenates sets sharing one geometry.
    pub fn concat(sets: &[&EpochSet]) -> Result<EpochSet> {
        let first = sets
            .first()
            .ok_or_else(|| Error::Data("nothing to concatenate".into()))?;
        let mut out = EpochSet::empty(first.channels, first.samples, first.rate, first.window, first.classes);
        for s in sets {
            if (s.channels, s.samples, s.classes) != (first.channels, first.samples, first.classes)
                || s.rate != first.rate
                || s.window != first.window
            {
                return Err(Error::Data(
                    "cannot concatenate epoch sets of different geometry".into(),
                ));
            }
            out.data.extend_from_slice(&s.data);
            out.labels.extend_from_slice(&s.labels);
            out.subjects.extend_from_slice(&s.subjects);
        }
        Ok(out)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// `[B, C, T]` batch of the selected trials.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let n = self.trial_len();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend(self.trial(i).iter().map(|&v| f64::from(v)));
        }
        Tensor::new(vec![indices.len(), self.channels, self.samples], data).expect("batch shape")
    }
}

/// One trial per event, covering `window` seconds around it.
pub fn extract_epochs(rec: &ContinuousRecording, window: (f64, f64), classes: usize) -> Result<EpochSet> {
    if !(window.1 > window.0) {
        return Err(Error::Parameter(format!("empty epoch window {window:?}")));
    }
    let t = window_samples(window, rec.rate);
    let offset = round_half_up(window.0 * rec.rate);
    let mut bad = Vec::new();
    for (k, ev) in rec.events.iter().enumerate() {
        let start = ev.sample as i64 + offset;
        if start < 0 || start + t as i64 > rec.samples as i64 {
            bad.push(k);
        }
    }
    if !bad.is_empty() {
        return Err(Error::WindowBounds { events: bad });
    }
    let mut out = EpochSet::empty(rec.channels, t, rec.rate, window, classes);
    let mut trial = vec![0f32; rec.channels * t];
    for ev in &rec.events {
        if ev.label >= classes {
            return Err(Error::Data(format!("event label {} outside [0, {classes})", ev.label)));
        }
        let start = (ev.sample as i64 + offset) as usize;
        for c in 0..rec.channels {
            let src = &rec.channel(c)[start..start + t];
            for (d, &s) in trial[c * t..(c + 1) * t].iter_mut().zip(src) {
                *d = s as f32;
            }
        }
        out.push(&trial, ev.label, rec.subject);
    }
    Ok(out)
}

/// Downsamples every over-represented class, uniformly without replacement,
/// to the smallest class count. Surviving trials keep their relative order.
pub fn balance_classes(epochs: &EpochSet, rng: &mut impl Rng) -> Result<EpochSet> {
    let counts = epochs.class_counts();
    if counts.len() < 2 {
        return Err(Error::Data("class balancing needs at least 2 classes".into()));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!("class {c} has no trials")));
    }
    let target = *counts.iter().min().expect("non-empty");
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in epochs.labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut keep = Vec::with_capacity(target * counts.len());
    for members in by_class.values() {
        if members.len() == target {
            keep.extend_from_slice(members);
        } else {
            keep.extend(
                index::sample(rng, members.len(), target)
                    .into_iter()
                    .map(|j| members[j]),
            );
        }
    }
    keep.sort_unstable();
    Ok(epochs.select(&keep))
}

/// Exactly `k` distinct trials drawn uniformly without replacement.
pub fn subsample_training(epochs: &EpochSet, k: usize, rng: &mut impl Rng) -> Result<EpochSet> {
    if k > epochs.len() {
        return Err(Error::Parameter(format!(
            "cannot draw {k} trials from a set of {}",
            epochs.len()
        )));
    }
    let idx = index::sample(rng, epochs.len(), k).into_vec();
    Ok(epochs.select(&idx))
}
