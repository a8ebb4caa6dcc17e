//! Binary epoch file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "EEGE" | version u16 | rate f64 | window_start f64 | window_end f64
//! channels u32 | samples u32 | trials u32 | classes u32
//! subject u32*trials | label u16*trials | payload f32*(trials*channels*samples)
//! crc32 u32   (over every preceding byte)
//! ```

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::codec::Cursor;
use crate::error::{Error, Result};

use super::epochs::EpochSet;

const MAGIC: &[u8; 4] = b"EEGE";
const VERSION: u16 = 1;

pub fn encode_epochs(epochs: &EpochSet) -> Result<Vec<u8>> {
    epochs.validate()?;
    let n = epochs.len();
    let narrow = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in 32 bits")))
    };
    let mut out = Vec::with_capacity(64 + n * (6 + 4 * epochs.trial_len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&epochs.rate.to_le_bytes());
    out.extend_from_slice(&epochs.window.0.to_le_bytes());
    out.extend_from_slice(&epochs.window.1.to_le_bytes());
    for (v, what) in [
        (epochs.channels, "channel count"),
        (epochs.samples, "sample count"),
        (n, "trial count"),
        (epochs.classes, "class count"),
    ] {
        out.extend_from_slice(&narrow(v, what)?.to_le_bytes());
    }
    for s in &epochs.subjects {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for &l in &epochs.labels {
        let l = u16::try_from(l).map_err(|_| Error::Format(format!("label {l} does not fit in 16 bits")))?;
        out.extend_from_slice(&l.to_le_bytes());
    }
    for v in &epochs.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_epochs(bytes: &[u8]) -> Result<EpochSet> {
    let mut c = Cursor::new(bytes, "epoch file");
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format("not an epoch file (bad magic)".into()));
    }
    let version = c.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported epoch format version {version}")));
    }
    let rate = c.f64("rate")?;
    let window = (c.f64("window")?, c.f64("window")?);
    let channels = c.u32("channel count")? as usize;
    let samples = c.u32("sample count")? as usize;
    let trials = c.u32("trial count")? as usize;
    let classes = c.u32("class count")? as usize;
    // Check the declared extents against what is left before reading them,
    // so a corrupted count cannot trigger a huge allocation.
    let body = trials
        .checked_mul(6)
        .and_then(|h| {
            trials
                .checked_mul(channels)?
                .checked_mul(samples)?
                .checked_mul(4)?
                .checked_add(h)
        })
        .and_then(|b| b.checked_add(4))
        .ok_or_else(|| Error::Format("declared extents overflow".into()))?;
    if c.remaining() < body {
        return Err(Error::Truncated(format!(
            "epoch file declares {body} more bytes but holds {}",
            c.remaining()
        )));
    }
    let subjects = c
        .take(4 * trials, "subject ids")?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let labels = c
        .take(2 * trials, "labels")?
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes(b.try_into().unwrap()) as usize)
        .collect();
    let data = c
        .take(4 * trials * channels * samples, "payload")?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let covered = c.pos;
    let stored = c.u32("checksum")?;
    if c.remaining() != 0 {
        return Err(Error::Format(format!("{} trailing bytes", c.remaining())));
    }
    let computed = crc32fast::hash(&bytes[..covered]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let epochs = EpochSet {
        channels,
        samples,
        rate,
        window,
        classes,
        data,
        labels,
        subjects,
    };
    epochs
        .validate()
        .map_err(|e| Error::Format(format!("inconsistent epoch file: {e}")))?;
    Ok(epochs)
}

/// Writes `epochs` to `path` holding an exclusive lock while writing.
pub fn write_epochs(epochs: &EpochSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_epochs(epochs)?;
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.lock().map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    file.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_epochs(path: impl AsRef<Path>) -> Result<EpochSet> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    file.lock().map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    decode_epochs(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> EpochSet {
        let mut e = EpochSet::empty(2, 4, 4.0, (0.0, 1.0), 3);
        e.push(&[1.0, -2.5, 3.25, f32::MIN_POSITIVE, 0.0, -0.0, 7.0, 1e-30], 2, 11);
        e.push(&[0.1; 8], 0, 12);
        e
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let e = sample_set();
        let back = decode_epochs(&encode_epochs(&e).unwrap()).unwrap();
        assert_eq!(back.labels, e.labels);
        assert_eq!(back.subjects, e.subjects);
        let bits = |s: &EpochSet| s.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&e));
    }

    #[test]
    fn empty_round_trip() {
        let e = EpochSet::empty(3, 16, 16.0, (0.0, 1.0), 2);
        assert_eq!(decode_epochs(&encode_epochs(&e).unwrap()).unwrap(), e);
    }

    #[test]
    fn corrupted_trial_count_is_truncation() {
        let mut bytes = encode_epochs(&sample_set()).unwrap();
        // trial count sits after magic, version, three f64s and two u32s
        let off = 4 + 2 + 24 + 8;
        bytes[off..off + 4].copy_from_slice(&1000u32.to_le_bytes());
        assert!(matches!(decode_epochs(&bytes), Err(Error::Truncated(_))));
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = encode_epochs(&sample_set()).unwrap();
        let n = bytes.len();
        bytes[n - 10] ^= 0x01;
        assert!(matches!(decode_epochs(&bytes), Err(Error::Checksum { .. })));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_epochs(&sample_set()).unwrap();
        bytes[4] = 9;
        assert!(matches!(decode_epochs(&bytes), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(decode_epochs(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.eege");
        write_epochs(&sample_set(), &path).unwrap();
        assert_eq!(read_epochs(&path).unwrap(), sample_set());
    }
}
