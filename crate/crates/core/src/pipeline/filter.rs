//! Butterworth band-pass design as second-order sections, and zero-phase
//! forward-backward filtering.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// One biquad `b0 + b1 z^-1 + b2 z^-2 / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Frequency response at normalized angular frequency `w` (radians/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (self.a[0] + z1 * self.a[1] + z2 * self.a[2])
    }
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Magnitude response at `freq` Hz for sample rate `rate`.
    pub fn magnitude(&self, freq: f64, rate: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / rate;
        self.sections
            .iter()
            .map(|s| s.response(w))
            .product::<Complex64>()
            .norm()
    }

    /// Order of the digital filter (twice the number of sections).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }
}

/// Digital Butterworth band-pass from an analog prototype of `order` poles,
/// via the low-pass to band-pass transform and the bilinear map with
/// pre-warped band edges. The resulting filter has `2 * order` poles.
pub fn butter_bandpass(order: usize, lo_hz: f64, hi_hz: f64, rate: f64) -> Result<Sos> {
    if order == 0 {
        return Err(Error::Parameter("filter order must be positive".into()));
    }
    if !(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < rate / 2.0) {
        return Err(Error::Parameter(format!(
            "band [{lo_hz}, {hi_hz}] Hz must satisfy 0 < lo < hi < {} (Nyquist)",
            rate / 2.0
        )));
    }
    use std::f64::consts::PI;
    let fs2 = 2.0 * rate;
    let w1 = fs2 * (PI * lo_hz / rate).tan();
    let w2 = fs2 * (PI * hi_hz / rate).tan();
    let bw = w2 - w1;
    let w0sq = w1 * w2;

    let to_bandpass = |p: Complex64| -> [Complex64; 2] {
        let half = p * bw / 2.0;
        let root = (half * half - w0sq).sqrt();
        [half + root, half - root]
    };
    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

    // prototype poles in the upper half plane (plus the real pole for odd orders)
    let mut analog_poles = Vec::with_capacity(2 * order);
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..order {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let bp = to_bandpass(p);
        analog_poles.extend_from_slice(&bp);
        if p.im > 1e-12 {
            for s in bp {
                let z = bilinear(s);
                groups.push(vec![z, z.conj()]);
            }
        } else if p.im.abs() <= 1e-12 {
            groups.push(vec![bilinear(bp[0]), bilinear(bp[1])]);
        }
        // lower-half prototype poles are covered by their conjugates
    }
    // band-pass gain bw^order with `order` analog zeros at the origin
    let num = Complex64::new(fs2, 0.0).powu(order as u32);
    let den: Complex64 = analog_poles.iter().map(|p| fs2 - p).product();
    let gain = bw.powi(order as i32) * (num / den).re;

    let mut sections: Vec<Biquad> = groups
        .into_iter()
        .map(|pair| {
            let (p, q) = (pair[0], pair[1]);
            Biquad {
                // one zero at z = 1 and one at z = -1
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(p + q).re, (p * q).re],
            }
        })
        .collect();
    if let Some(first) = sections.first_mut() {
        first.b.iter_mut().for_each(|v| *v *= gain);
    }
    Ok(Sos { sections })
}

/// Steady-state initial conditions for a unit step input, per section.
fn sos_zi(sos: &Sos) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sos.sections
        .iter()
        .map(|s| {
            let g = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
            let z2 = s.b[2] - s.a[2] * g;
            let z1 = s.b[1] - s.a[1] * g + z2;
            let zi = [z1 * scale, z2 * scale];
            scale *= g;
            zi
        })
        .collect()
}

/// Transposed direct form II cascade, with optional per-section initial state.
pub fn sosfilt(sos: &Sos, x: &[f64], zi: Option<&[[f64; 2]]>) -> Vec<f64> {
    let mut y = x.to_vec();
    for (k, s) in sos.sections.iter().enumerate() {
        let [b0, b1, b2] = s.b;
        let [_, a1, a2] = s.a;
        let [mut z1, mut z2] = zi.map(|z| z[k]).unwrap_or([0.0, 0.0]);
        for v in y.iter_mut() {
            let xin = *v;
            let out = b0 * xin + z1;
            z1 = b1 * xin - a1 * out + z2;
            z2 = b2 * xin - a2 * out;
            *v = out;
        }
    }
    y
}

/// Zero-phase filtering: odd reflection padding of `3 * order` samples at each
/// end, forward and backward passes started from steady state, then trimming.
pub fn filtfilt(sos: &Sos, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = (3 * sos.order()).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let zi = sos_zi(sos);
    let scaled = |z: &[[f64; 2]], v: f64| -> Vec<[f64; 2]> { z.iter().map(|s| [s[0] * v, s[1] * v]).collect() };
    let mut y = sosfilt(sos, &ext, Some(&scaled(&zi, ext[0])));
    y.reverse();
    let mut y = sosfilt(sos, &y, Some(&scaled(&zi, y[0])));
    y.reverse();
    y[pad..pad + n].to_vec()
}
