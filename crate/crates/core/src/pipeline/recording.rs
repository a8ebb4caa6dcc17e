use crate::error::{Error, Result};

use super::epochs::round_half_up;
use super::filter::{butter_bandpass, filtfilt};

/// Prototype order of the band-pass design used by [`bandpass`].
pub const BANDPASS_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub sample: usize,
    pub label: usize,
}

/// Multichannel continuous signal with time-stamped events.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRecording {
    pub channels: usize,
    pub samples: usize,
    pub rate: f64,
    /// Channel-major `(channel, sample)` values in microvolts.
    pub data: Vec<f64>,
    pub events: Vec<Event>,
    pub subject: u32,
}

impl ContinuousRecording {
    pub fn new(
        channels: usize,
        samples: usize,
        rate: f64,
        data: Vec<f64>,
        events: Vec<Event>,
        subject: u32,
    ) -> Result<Self> {
        let rec = ContinuousRecording {
            channels,
            samples,
            rate,
            data,
            events,
            subject,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.channels * self.samples {
            return Err(Error::Data(format!(
                "recording holds {} values for {} x {}",
                self.data.len(),
                self.channels,
                self.samples
            )));
        }
        if !(self.rate > 0.0) {
            return Err(Error::Data(format!("sample rate {} must be positive", self.rate)));
        }
        for w in self.events.windows(2) {
            if w[1].sample <= w[0].sample {
                return Err(Error::Data(format!(
                    "event samples must strictly increase ({} then {})",
                    w[0].sample, w[1].sample
                )));
            }
        }
        if let Some(e) = self.events.iter().find(|e| e.sample >= self.samples) {
            return Err(Error::Data(format!(
                "event at sample {} beyond recording length {}",
                e.sample, self.samples
            )));
        }
        Ok(())
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.samples..(c + 1) * self.samples]
    }
}

/// Zero-phase Butterworth band-pass of every channel.
pub fn bandpass(rec: &ContinuousRecording, lo_hz: f64, hi_hz: f64) -> Result<ContinuousRecording> {
    let sos = butter_bandpass(BANDPASS_ORDER, lo_hz, hi_hz, rec.rate)?;
    let mut data = Vec::with_capacity(rec.data.len());
    for c in 0..rec.channels {
        data.extend(filtfilt(&sos, rec.channel(c)));
    }
    Ok(ContinuousRecording { data, ..rec.clone() })
}

/// Integer decimation: keeps every `rate / target_hz`-th sample and rescales
/// event indices (rounded half up) by the same factor.
pub fn downsample(rec: &ContinuousRecording, target_hz: f64) -> Result<ContinuousRecording> {
    let ratio = rec.rate / target_hz;
    let factor = ratio.round();
    if !(target_hz > 0.0) || factor < 1.0 || (ratio - factor).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "{} Hz -> {target_hz} Hz is not an integer decimation",
            rec.rate
        )));
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(rec.clone());
    }
    let samples = rec.samples.div_ceil(factor);
    let mut data = Vec::with_capacity(rec.channels * samples);
    for c in 0..rec.channels {
        data.extend(rec.channel(c).iter().step_by(factor));
    }
    let mut events: Vec<Event> = rec
        .events
        .iter()
        .map(|e| Event {
            sample: (round_half_up(e.sample as f64 / factor as f64) as usize).min(samples - 1),
            label: e.label,
        })
        .collect();
    events.dedup_by_key(|e| e.sample);
    if events.len() != rec.events.len() {
        return Err(Error::Data(format!("events collide after decimation by {factor}")));
    }
    ContinuousRecording::new(rec.channels, samples, target_hz, data, events, rec.subject)
}
