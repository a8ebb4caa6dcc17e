//! Labeled synthetic EEG: ERP bumps or band-power suppression on 1/f noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::EpochSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthParadigm {
    Erp,
    Oscillatory,
}

/// Generator parameters. Noise has unit RMS per channel; `snr` is the signal
/// peak (ERP) relative to that, and an infinite `snr` means noise-free trials
/// with unit peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub paradigm: SynthParadigm,
    pub channels: usize,
    pub samples: usize,
    pub rate: f64,
    pub classes: usize,
    pub snr: f64,
    /// Number of simulated subjects; trials are split into contiguous blocks.
    pub subjects: usize,
    /// ERP peak latency in seconds from the start of the epoch.
    pub latency: f64,
    /// Full support of the raised-cosine bump in seconds.
    pub width: f64,
    /// +1 for a positive deflection, -1 for a negative one.
    pub sign: f64,
    /// Channels carrying the ERP.
    pub erp_channels: Vec<usize>,
    /// Band whose power is suppressed (oscillatory paradigm).
    pub band: (f64, f64),
    /// RMS of the ongoing band-limited rhythm relative to the noise.
    pub rhythm_rms: f64,
    /// Class index -> channels where the rhythm is suppressed.
    pub lateralization: Vec<Vec<usize>>,
    /// Subject gains are drawn uniformly from `1 +- gain_spread`.
    pub gain_spread: f64,
    /// Subject latency offsets are drawn uniformly from `+- jitter` seconds.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            paradigm: SynthParadigm::Erp,
            channels: 16,
            samples: 128,
            rate: 128.0,
            classes: 2,
            snr: 2.0,
            subjects: 6,
            latency: 0.3,
            width: 0.25,
            sign: 1.0,
            erp_channels: vec![7, 8],
            band: (8.0, 12.0),
            rhythm_rms: 1.0,
            lateralization: vec![(0..4).collect(), (12..16).collect()],
            gain_spread: 0.3,
            jitter: 0.03,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Default four-class oscillatory set: one channel quadrant per class.
    pub fn oscillatory() -> Self {
        SyntheticSpec {
            paradigm: SynthParadigm::Oscillatory,
            classes: 4,
            samples: 256,
            lateralization: (0..4).map(|k| (4 * k..4 * k + 4).collect()).collect(),
            ..SyntheticSpec::default()
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (0.0, self.samples as f64 / self.rate)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Spec(m));
        if self.channels == 0 || self.samples < 16 || !self.samples.is_multiple_of(16) {
            return err(format!(
                "need channels >= 1 and samples a positive multiple of 16, got {} x {}",
                self.channels, self.samples
            ));
        }
        if !(self.rate > 0.0) || self.classes < 2 || self.subjects == 0 {
            return err("rate, class count and subject count must be positive (classes >= 2)".into());
        }
        if !(self.snr >= 0.0) {
            return err(format!("snr {} must be nonnegative", self.snr));
        }
        if !(0.0..1.0).contains(&self.gain_spread) || !(self.jitter >= 0.0) {
            return err("gain spread must lie in [0, 1) and jitter must be nonnegative".into());
        }
        let check_channels = |chs: &[usize], what: &str| -> Result<()> {
            if chs.is_empty() {
                return Err(Error::Spec(format!("{what} channel subset is empty")));
            }
            if let Some(c) = chs.iter().find(|&&c| c >= self.channels) {
                return Err(Error::Spec(format!("{what} channel {c} >= {}", self.channels)));
            }
            Ok(())
        };
        match self.paradigm {
            SynthParadigm::Erp => {
                if self.classes != 2 {
                    return err(format!("ERP paradigm is two-class, got {}", self.classes));
                }
                let dur = self.samples as f64 / self.rate;
                let half = self.width / 2.0;
                if !(self.width > 0.0)
                    || self.latency - half - self.jitter < 0.0
                    || self.latency + half + self.jitter > dur
                {
                    return err(format!(
                        "bump at {} s of width {} s (jitter {} s) leaves the {dur} s epoch",
                        self.latency, self.width, self.jitter
                    ));
                }
                check_channels(&self.erp_channels, "ERP")?;
            }
            SynthParadigm::Oscillatory => {
                let (lo, hi) = self.band;
                if !(lo > 0.0 && hi > lo && hi < self.rate / 2.0) {
                    return err(format!("band {:?} must satisfy 0 < lo < hi < rate/2", self.band));
                }
                if self.lateralization.len() != self.classes {
                    return err(format!(
                        "lateralization map covers {} classes, expected {}",
                        self.lateralization.len(),
                        self.classes
                    ));
                }
                for (k, chs) in self.lateralization.iter().enumerate() {
                    check_channels(chs, &format!("class {k}"))?;
                }
            }
        }
        Ok(())
    }

    fn levels(&self) -> (f64, f64) {
        if self.snr.is_infinite() {
            (1.0, 0.0)
        } else {
            (self.snr, 1.0)
        }
    }
}

/// Zero-mean, unit-RMS noise per channel with power spectral density
/// proportional to 1/f, shaped in the frequency domain.
pub fn pink_noise(channels: usize, samples: usize, rng: &mut impl Rng) -> Tensor {
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(samples);
    let inv = planner.plan_fft_inverse(samples);
    let gain: Vec<f64> = (0..samples)
        .map(|k| {
            let f = k.min(samples - k);
            if f == 0 {
                0.0
            } else {
                1.0 / (f as f64).sqrt()
            }
        })
        .collect();
    let mut out = Vec::with_capacity(channels * samples);
    let mut buf = vec![Complex64::new(0.0, 0.0); samples];
    for _ in 0..channels {
        for b in buf.iter_mut() {
            *b = Complex64::new(rng.sample(StandardNormal), 0.0);
        }
        fwd.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&gain) {
            *b *= g;
        }
        inv.process(&mut buf);
        out.extend(normalize(buf.iter().map(|c| c.re).collect()));
    }
    Tensor::new(vec![channels, samples], out).expect("noise shape")
}

/// Zero-mean, unit-RMS noise confined to `band` Hz.
pub fn band_noise(channels: usize, samples: usize, rate: f64, band: (f64, f64), rng: &mut impl Rng) -> Tensor {
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(samples);
    let inv = planner.plan_fft_inverse(samples);
    let mask: Vec<f64> = (0..samples)
        .map(|k| {
            let f = k.min(samples - k) as f64 * rate / samples as f64;
            if f >= band.0 && f <= band.1 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut out = Vec::with_capacity(channels * samples);
    let mut buf = vec![Complex64::new(0.0, 0.0); samples];
    for _ in 0..channels {
        for b in buf.iter_mut() {
            *b = Complex64::new(rng.sample(StandardNormal), 0.0);
        }
        fwd.process(&mut buf);
        for (b, m) in buf.iter_mut().zip(&mask) {
            *b *= m;
        }
        inv.process(&mut buf);
        out.extend(normalize(buf.iter().map(|c| c.re).collect()));
    }
    Tensor::new(vec![channels, samples], out).expect("noise shape")
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let rms = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let scale = if rms > 0.0 { 1.0 / rms } else { 0.0 };
    for v in x.iter_mut() {
        *v = (*v - mean) * scale;
    }
    x
}

/// Raised-cosine bump of unit peak centered at `center` samples with full
/// support `width` samples.
fn bump(samples: usize, center: f64, width: f64) -> Vec<f64> {
    (0..samples)
        .map(|t| {
            let d = t as f64 - center;
            if d.abs() < width / 2.0 {
                0.5 * (1.0 + (2.0 * PI * d / width).cos())
            } else {
                0.0
            }
        })
        .collect()
}

struct SubjectDraw {
    gain: f64,
    shift: f64,
}

fn draw_subjects(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<SubjectDraw> {
    (0..spec.subjects)
        .map(|_| SubjectDraw {
            gain: 1.0 + spec.gain_spread * (2.0 * rng.gen::<f64>() - 1.0),
            shift: spec.jitter * (2.0 * rng.gen::<f64>() - 1.0),
        })
        .collect()
}

/// Subject index (0-based) owning trial `i` of `n` when split into contiguous blocks.
fn subject_of(i: usize, n: usize, subjects: usize) -> usize {
    i * subjects / n
}

fn check_trials(spec: &SyntheticSpec, n_trials: usize) -> Result<()> {
    if n_trials == 0 || !n_trials.is_multiple_of(spec.classes) {
        return Err(Error::Spec(format!(
            "{n_trials} trials cannot be balanced over {} classes",
            spec.classes
        )));
    }
    Ok(())
}

fn labels_for(n: usize, classes: usize, subjects: usize) -> Vec<usize> {
    // alternate within each subject block so blocks stay balanced
    let mut labels = Vec::with_capacity(n);
    let mut start = 0;
    for s in 0..subjects {
        let end = (0..n).find(|&i| subject_of(i, n, subjects) > s).unwrap_or(n);
        labels.extend((start..end).map(|i| (i - start) % classes));
        start = end;
    }
    // blocks of odd length over-represent class 0; move the excess to keep totals exact
    let mut counts = vec![0usize; classes];
    for &l in &labels {
        counts[l] += 1;
    }
    let target = n / classes;
    for i in (0..n).rev() {
        let l = labels[i];
        if counts[l] > target {
            if let Some(k) = (0..classes).find(|&k| counts[k] < target) {
                labels[i] = k;
                counts[l] -= 1;
                counts[k] += 1;
            }
        }
    }
    labels
}

/// Two-class ERP set: class 1 trials add a raised-cosine bump on the ERP
/// channels, class 0 trials are noise only.
pub fn gen_erp_dataset(spec: &SyntheticSpec, n_trials: usize, rng: &mut impl Rng) -> Result<EpochSet> {
    if spec.paradigm != SynthParadigm::Erp {
        return Err(Error::Spec("spec describes an oscillatory paradigm".into()));
    }
    spec.validate()?;
    check_trials(spec, n_trials)?;
    let (peak, noise) = spec.levels();
    let draws = draw_subjects(spec, rng);
    let templates: Vec<Vec<f64>> = draws
        .iter()
        .map(|d| {
            bump(
                spec.samples,
                (spec.latency + d.shift) * spec.rate,
                spec.width * spec.rate,
            )
        })
        .collect();
    let labels = labels_for(n_trials, spec.classes, spec.subjects);
    let mut out = EpochSet::empty(spec.channels, spec.samples, spec.rate, spec.window(), spec.classes);
    let t = spec.samples;
    let mut trial = vec![0f32; spec.channels * t];
    for (i, &label) in labels.iter().enumerate() {
        let s = subject_of(i, n_trials, spec.subjects);
        let bg = pink_noise(spec.channels, t, rng);
        let amp = spec.sign * peak * draws[s].gain;
        for c in 0..spec.channels {
            let carries = label == 1 && spec.erp_channels.contains(&c);
            for k in 0..t {
                let mut v = noise * bg.data()[c * t + k];
                if carries {
                    v += amp * templates[s][k];
                }
                trial[c * t + k] = v as f32;
            }
        }
        out.push(&trial, label, s as u32 + 1);
    }
    Ok(out)
}

/// Multi-class set where class `k` suppresses an ongoing in-band rhythm on
/// its mapped channels by `snr / (1 + snr)`.
pub fn gen_oscillatory_dataset(spec: &SyntheticSpec, n_trials: usize, rng: &mut impl Rng) -> Result<EpochSet> {
    if spec.paradigm != SynthParadigm::Oscillatory {
        return Err(Error::Spec("spec describes an ERP paradigm".into()));
    }
    spec.validate()?;
    check_trials(spec, n_trials)?;
    let depth = if spec.snr.is_infinite() {
        1.0
    } else {
        spec.snr / (1.0 + spec.snr)
    };
    let noise = if spec.snr.is_infinite() { 0.0 } else { 1.0 };
    let draws = draw_subjects(spec, rng);
    let labels = labels_for(n_trials, spec.classes, spec.subjects);
    let mut out = EpochSet::empty(spec.channels, spec.samples, spec.rate, spec.window(), spec.classes);
    let t = spec.samples;
    let mut trial = vec![0f32; spec.channels * t];
    for (i, &label) in labels.iter().enumerate() {
        let s = subject_of(i, n_trials, spec.subjects);
        let bg = pink_noise(spec.channels, t, rng);
        let rhythm = band_noise(spec.channels, t, spec.rate, spec.band, rng);
        let mapped = &spec.lateralization[label];
        for c in 0..spec.channels {
            let mut level = spec.rhythm_rms * draws[s].gain;
            if mapped.contains(&c) {
                level *= 1.0 - depth;
            }
            for k in 0..t {
                let v = noise * bg.data()[c * t + k] + level * rhythm.data()[c * t + k];
                trial[c * t + k] = v as f32;
            }
        }
        out.push(&trial, label, s as u32 + 1);
    }
    Ok(out)
}

/// Dispatches on the spec's paradigm.
pub fn generate(spec: &SyntheticSpec, n_trials: usize, rng: &mut impl Rng) -> Result<EpochSet> {
    match spec.paradigm {
        SynthParadigm::Erp => gen_erp_dataset(spec, n_trials, rng),
        SynthParadigm::Oscillatory => gen_oscillatory_dataset(spec, n_trials, rng),
    }
}
