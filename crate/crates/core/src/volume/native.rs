//! Native volume format: a `<name>.vjson` header next to a `<name>.vraw`
//! little-endian payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{decode_payload, AnyVolume, Datatype, HeaderExtras};
use crate::error::{Error, Result};

pub const FORMAT: &str = "isoseg-volume";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub dims: [usize; 3],
    pub spacing: [f32; 3],
    pub datatype: Datatype,
    /// File name of the payload, resolved next to the header.
    pub payload: String,
    #[serde(default)]
    pub extras: HeaderExtras,
}

impl Header {
    pub fn parse(json: &[u8]) -> Result<Self> {
        let h: Header = serde_json::from_slice(json)?;
        if h.format != FORMAT {
            return Err(Error::malformed("volume header", format!("format {:?} is not {FORMAT:?}", h.format)));
        }
        if h.version != VERSION {
            return Err(Error::malformed(
                "volume header",
                format!("version {} is not supported (expected {VERSION})", h.version),
            ));
        }
        let name = Path::new(&h.payload);
        if h.payload.is_empty() || name.file_name().map(|n| n != name.as_os_str()).unwrap_or(true) {
            return Err(Error::malformed(
                "volume header",
                format!("payload {:?} must be a plain file name", h.payload),
            ));
        }
        Ok(h)
    }
}

/// Decodes a volume from its header JSON and payload bytes.
pub fn from_parts(header_json: &[u8], payload: &[u8]) -> Result<AnyVolume> {
    let h = Header::parse(header_json)?;
    let mut volume = decode_payload(h.datatype, h.dims, h.spacing, payload, false)?;
    let used = volume.dims().iter().product::<usize>() * h.datatype.size();
    if payload.len() != used {
        return Err(Error::malformed(
            "volume payload",
            format!("{} bytes present, {used} expected", payload.len()),
        ));
    }
    match &mut volume {
        AnyVolume::U8(v) => v.extras = h.extras,
        AnyVolume::I16(v) => v.extras = h.extras,
        AnyVolume::F32(v) => v.extras = h.extras,
    }
    Ok(volume)
}

pub fn header_for(volume: &AnyVolume, payload_name: &str) -> Header {
    Header {
        format: FORMAT.into(),
        version: VERSION,
        dims: volume.dims(),
        spacing: volume.spacing(),
        datatype: volume.datatype(),
        payload: payload_name.into(),
        extras: volume.extras().clone(),
    }
}

pub fn read(path: &Path) -> Result<AnyVolume> {
    let json = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let h = Header::parse(&json)?;
    let raw = path.with_file_name(&h.payload);
    let payload = std::fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    from_parts(&json, &payload)
}

pub fn write(volume: &AnyVolume, path: &Path) -> Result<()> {
    let raw = path.with_extension("vraw");
    let name = raw
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::UnsupportedFormat(format!("{}: payload name is not valid UTF-8", path.display())))?;
    let header = header_for(volume, name);
    let mut json = serde_json::to_vec_pretty(&header)?;
    json.push(b'\n');
    std::fs::write(&raw, volume.payload()).map_err(|e| Error::io(&raw, e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}
