//! Versioned little-endian checkpoint format.
//!
//! ```text
//! "VSEG" | u32 version | u32 len + config JSON | u64 seed
//! u32 n_params { u16 len + name | u8 ndim | u32 dims[ndim] | f32 values }
//! u32 n_stats  { u16 len + name | u8 initialized | u32 channels | f32 mean | f32 var }
//! ```

use std::path::Path;

use crate::bytes::{put_f32s, Reader};
use crate::error::{Error, Result};

use super::{Network, NetworkConfig};

pub const MAGIC: &[u8; 4] = b"VSEG";
pub const VERSION: u32 = 1;

const MAX_ENTRIES: u32 = 1 << 16;

/// Number of parameter values a network built from `config` holds, or
/// `None` on overflow.
fn value_count(config: &NetworkConfig) -> Option<usize> {
    let k3 = config.kernel_size.checked_pow(3)?;
    let mut total = 0usize;
    let mut cin = config.path_input_channels();
    for (i, &w) in config.conv_widths().ok()?.iter().enumerate() {
        let pre = if i > 0 { 3 * cin } else { 0 };
        total = total.checked_add(w.checked_mul(cin)?.checked_mul(k3)?.checked_add(w + pre)?)?;
        cin = w;
    }
    total = total.checked_mul(config.paths())?;
    let mut cin = config.concat_channels().ok()?;
    for w in config.fc_widths().ok()?.into_iter().chain([config.num_classes]) {
        total = total.checked_add(w.checked_mul(cin)?.checked_add(w + 3 * cin)?)?;
        cin = w;
    }
    Some(total)
}

fn put_name(out: &mut Vec<u8>, name: &str) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
}

fn read_name(r: &mut Reader<'_>) -> Result<String> {
    let n = r.u16()? as usize;
    String::from_utf8(r.take(n)?.to_vec()).map_err(|_| Error::malformed("checkpoint", "name is not UTF-8"))
}

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let config = serde_json::to_vec(net.config()).expect("config serializes");
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&net.seed().to_le_bytes());

    let params = net.params();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params.iter() {
        put_name(&mut out, &p.name);
        out.push(p.value.shape().len() as u8);
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        put_f32s(&mut out, p.value.data());
    }

    let stats = net.running_stats();
    out.extend_from_slice(&(stats.len() as u32).to_le_bytes());
    for s in stats {
        put_name(&mut out, &s.name);
        out.push(s.initialized as u8);
        out.extend_from_slice(&(s.mean.len() as u32).to_le_bytes());
        put_f32s(&mut out, &s.mean);
        put_f32s(&mut out, &s.var);
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::malformed("checkpoint", "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::malformed("checkpoint", format!("unsupported version {version}")));
    }
    let config_len = r.u32()? as usize;
    let config: NetworkConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| Error::malformed("checkpoint", format!("config: {e}")))?;
    config.validate()?;
    let needed = value_count(&config)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::malformed("checkpoint", "config too large"))?;
    if needed > r.remaining() {
        return Err(Error::Truncated {
            expected: bytes.len() - r.remaining() + needed,
            actual: bytes.len(),
        });
    }
    let seed = r.u64()?;
    let mut net = Network::build(config, seed)?;

    let n_params = r.u32()?;
    if n_params as usize != net.params().len() || n_params > MAX_ENTRIES {
        return Err(Error::malformed(
            "checkpoint",
            format!("{n_params} parameters, expected {}", net.params().len()),
        ));
    }
    for _ in 0..n_params {
        let name = read_name(&mut r)?;
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let id = net
            .params()
            .find(&name)
            .ok_or_else(|| Error::malformed("checkpoint", format!("unknown parameter {name}")))?;
        let p = net.params_mut().get_mut(id);
        if p.value.shape() != shape.as_slice() {
            return Err(Error::malformed(
                "checkpoint",
                format!("{name}: shape {shape:?}, expected {:?}", p.value.shape()),
            ));
        }
        let values = r.f32s(p.value.len())?;
        p.value.data_mut().copy_from_slice(&values);
    }

    let n_stats = r.u32()?;
    if n_stats as usize != net.stats.len() {
        return Err(Error::malformed(
            "checkpoint",
            format!("{n_stats} statistics entries, expected {}", net.stats.len()),
        ));
    }
    for _ in 0..n_stats {
        let name = read_name(&mut r)?;
        let initialized = r.u8()? != 0;
        let channels = r.u32()? as usize;
        let s = net
            .stats
            .iter_mut()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::malformed("checkpoint", format!("unknown statistics {name}")))?;
        if s.mean.len() != channels {
            return Err(Error::malformed("checkpoint", format!("{name}: channel count mismatch")));
        }
        s.mean = r.f32s(channels)?;
        s.var = r.f32s(channels)?;
        s.initialized = initialized;
    }
    if r.remaining() != 0 {
        return Err(Error::malformed("checkpoint", "trailing bytes"));
    }
    Ok(net)
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
