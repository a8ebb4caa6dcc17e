//! Binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "EEGM" | version u16 | spec_len u32 | spec (TOML, UTF-8)
//! entry_count u32
//! entry*: name_len u16 | name | rank u8 | dims u32*rank | payload f64*prod(dims)
//! ```
//!
//! Trainable tensors come first in slot order, then the running batch-norm
//! statistics as `lN.bn.running_mean` / `lN.bn.running_var`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::codec::Cursor;
use crate::error::{Error, Result};
use crate::ops::RunningStats;
use crate::tensor::Tensor;

use super::network::EegNet;
use super::spec::ModelSpec;

const MAGIC: &[u8; 4] = b"EEGM";
const VERSION: u16 = 1;

pub fn encode_model(model: &EegNet) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let spec = model.spec().to_toml();
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(spec.as_bytes());

    let mut entries: Vec<(String, Vec<usize>, &[f64])> = model
        .decls()
        .iter()
        .zip(model.params())
        .map(|(d, p)| (d.name.clone(), p.shape().to_vec(), p.data()))
        .collect();
    for (i, rs) in model.running_stats().iter().enumerate() {
        let n = rs.mean.len();
        entries.push((format!("l{}.bn.running_mean", i + 1), vec![n], &rs.mean));
        entries.push((format!("l{}.bn.running_var", i + 1), vec![n], &rs.var));
    }
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, shape, data) in entries {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<EegNet> {
    let mut c = Cursor::new(bytes, "model file");
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = c.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model format version {version}")));
    }
    let spec_len = c.u32("spec length")? as usize;
    let spec_text =
        std::str::from_utf8(c.take(spec_len, "spec")?).map_err(|_| Error::Format("model spec is not UTF-8".into()))?;
    let spec = ModelSpec::from_toml(spec_text)?;
    let count = c.u32("entry count")? as usize;
    let mut entries = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let name_len = c.u16("entry name length")? as usize;
        let name = std::str::from_utf8(c.take(name_len, "entry name")?)
            .map_err(|_| Error::Format("entry name is not UTF-8".into()))?
            .to_string();
        let rank = c.u8("entry rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(c.u32("entry dims")? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = c.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Format("entry too large".into()))?,
            "payload",
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        entries.push((name, Tensor::new(shape, data)?));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let n_bn = if spec.ablation.batchnorm() { 3 } else { 0 };
    if entries.len() < 2 * n_bn {
        return Err(Error::Format("missing running statistics".into()));
    }
    let split = entries.len() - 2 * n_bn;
    let stats = entries.split_off(split);
    let running = stats
        .chunks_exact(2)
        .enumerate()
        .map(|(i, pair)| {
            let (mn, mv) = (
                format!("l{}.bn.running_mean", i + 1),
                format!("l{}.bn.running_var", i + 1),
            );
            if pair[0].0 != mn || pair[1].0 != mv {
                return Err(Error::Format(format!("expected `{mn}` and `{mv}`")));
            }
            Ok(RunningStats {
                mean: pair[0].1.data().to_vec(),
                var: pair[1].1.data().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = EegNet::from_parts(spec, entries.iter().map(|(_, t)| t.clone()).collect(), running)?;
    for ((name, _), decl) in entries.iter().zip(model.decls()) {
        if *name != decl.name {
            return Err(Error::Format(format!(
                "entry `{name}` where `{}` was expected",
                decl.name
            )));
        }
    }
    Ok(model)
}

pub fn save_model(model: &EegNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.lock().map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(&file);
    w.write_all(&encode_model(model)).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EegNet> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    file.lock_shared().map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
