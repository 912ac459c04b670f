//! Uncompressed single-file NIfTI-1 (`.nii`) for 3D volumes of `uint8`,
//! `int16` and `float32`.
//!
//! Both byte orders are read; files are always written little-endian with the
//! payload at offset 352 and no header extensions.

use std::path::Path;

use super::{decode_payload, AnyVolume, Datatype, HeaderExtras};
use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const QOFFSET_X: usize = 268;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

struct Fields<'a> {
    buf: &'a [u8],
    big_endian: bool,
}

impl Fields<'_> {
    fn bytes<const N: usize>(&self, at: usize) -> [u8; N] {
        self.buf[at..at + N].try_into().unwrap()
    }

    fn i16(&self, at: usize) -> i16 {
        let b = self.bytes(at);
        if self.big_endian {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn i32(&self, at: usize) -> i32 {
        let b = self.bytes(at);
        if self.big_endian {
            i32::from_be_bytes(b)
        } else {
            i32::from_le_bytes(b)
        }
    }

    fn f32(&self, at: usize) -> f32 {
        let b = self.bytes(at);
        if self.big_endian {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }

    fn f32s<const N: usize>(&self, at: usize) -> [f32; N] {
        std::array::from_fn(|i| self.f32(at + 4 * i))
    }
}

/// Parses a complete `.nii` file image.
pub fn from_bytes(buf: &[u8]) -> Result<AnyVolume> {
    if buf.starts_with(&[0x1f, 0x8b]) {
        return Err(Error::UnsupportedFormat("gzip-compressed NIfTI is not supported".into()));
    }
    if buf.len() < HEADER_SIZE {
        return Err(Error::Truncated {
            expected: HEADER_SIZE,
            actual: buf.len(),
        });
    }
    let size = i32::from_le_bytes(buf[0..4].try_into().unwrap());
    let big_endian = match size {
        348 => false,
        _ if i32::from_be_bytes(buf[0..4].try_into().unwrap()) == 348 => true,
        _ => return Err(Error::malformed("NIfTI header", format!("sizeof_hdr is {size}, expected 348"))),
    };
    let f = Fields { buf, big_endian };
    if &buf[offset::MAGIC..offset::MAGIC + 4] != MAGIC {
        return Err(Error::malformed(
            "NIfTI header",
            format!("magic {:?} is not \"n+1\\0\"", &buf[offset::MAGIC..offset::MAGIC + 4]),
        ));
    }
    debug_assert_eq!(f.i32(offset::SIZEOF_HDR), 348);

    let dim: [i16; 8] = std::array::from_fn(|i| f.i16(offset::DIM + 2 * i));
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::malformed("NIfTI header", format!("dim[0] = {ndim} is outside 1..=7")));
    }
    let mut dims = [1usize; 3];
    for i in 1..=ndim as usize {
        if dim[i] < 1 {
            return Err(Error::malformed("NIfTI header", format!("dim[{i}] = {} is not positive", dim[i])));
        }
        if i <= 3 {
            dims[i - 1] = dim[i] as usize;
        } else if dim[i] != 1 {
            return Err(Error::UnsupportedFormat(format!(
                "NIfTI volume has {} > 1 samples along dimension {i}; only 3D volumes are supported",
                dim[i]
            )));
        }
    }

    let datatype = Datatype::from_nifti_code(f.i16(offset::DATATYPE))?;
    let bitpix = f.i16(offset::BITPIX);
    if bitpix as usize != 8 * datatype.size() {
        return Err(Error::malformed(
            "NIfTI header",
            format!("bitpix {bitpix} does not match datatype code {}", datatype.nifti_code()),
        ));
    }

    let pixdim: [f32; 8] = f.f32s(offset::PIXDIM);
    let mut spacing = [1.0f32; 3];
    for i in 0..3 {
        let p = pixdim[i + 1];
        // zero or unset spacing on a degenerate axis defaults to 1 mm
        spacing[i] = if i + 1 > ndim as usize && !(p > 0.0) { 1.0 } else { p };
        if !(spacing[i].is_finite() && spacing[i] > 0.0) {
            return Err(Error::malformed("NIfTI header", format!("pixdim[{}] = {p} is not positive", i + 1)));
        }
    }

    let vox_offset = f.f32(offset::VOX_OFFSET);
    if !(vox_offset >= VOX_OFFSET as f32 && vox_offset.fract() == 0.0 && vox_offset < u32::MAX as f32) {
        return Err(Error::malformed("NIfTI header", format!("vox_offset {vox_offset} is invalid")));
    }
    let start = vox_offset as usize;
    let payload = buf.get(start..).unwrap_or(&[]);
    let expected = super::voxel_count(dims)?
        .checked_mul(datatype.size())
        .and_then(|n| n.checked_add(start))
        .ok_or_else(|| Error::malformed("NIfTI header", "payload size overflows"))?;
    if buf.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: buf.len(),
        });
    }

    let descrip = &buf[offset::DESCRIP..offset::DESCRIP + 80];
    let descrip = &descrip[..descrip.iter().position(|&b| b == 0).unwrap_or(80)];
    let extras = HeaderExtras {
        qform_code: f.i16(offset::QFORM_CODE),
        sform_code: f.i16(offset::SFORM_CODE),
        quatern: f.f32s(offset::QUATERN_B),
        qoffset: f.f32s(offset::QOFFSET_X),
        srow: std::array::from_fn(|r| f.f32s(offset::SROW_X + 16 * r)),
        qfac: pixdim[0],
        xyzt_units: buf[offset::XYZT_UNITS],
        scl_slope: f.f32(offset::SCL_SLOPE),
        scl_inter: f.f32(offset::SCL_INTER),
        descrip: String::from_utf8_lossy(descrip).into_owned(),
    };

    let mut volume = decode_payload(datatype, dims, spacing, payload, big_endian)?;
    match &mut volume {
        AnyVolume::U8(v) => v.extras = extras,
        AnyVolume::I16(v) => v.extras = extras,
        AnyVolume::F32(v) => v.extras = extras,
    }
    Ok(volume)
}

/// Serializes to a little-endian `.nii` file image.
pub fn to_bytes(volume: &AnyVolume) -> Result<Vec<u8>> {
    let dims = volume.dims();
    for (i, &d) in dims.iter().enumerate() {
        if d > i16::MAX as usize {
            return Err(Error::UnsupportedFormat(format!(
                "dimension {} of size {d} exceeds the NIfTI-1 limit of {}",
                i + 1,
                i16::MAX
            )));
        }
    }
    let extras = volume.extras();
    let datatype = volume.datatype();
    let mut h = vec![0u8; VOX_OFFSET];
    let put = |h: &mut Vec<u8>, at: usize, b: &[u8]| h[at..at + b.len()].copy_from_slice(b);
    put(&mut h, offset::SIZEOF_HDR, &348i32.to_le_bytes());
    // dim_info left 0 (unknown)
    let ndim: i16 = 3;
    let dim = [ndim, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        put(&mut h, offset::DIM + 2 * i, &d.to_le_bytes());
    }
    put(&mut h, offset::DATATYPE, &datatype.nifti_code().to_le_bytes());
    put(&mut h, offset::BITPIX, &((8 * datatype.size()) as i16).to_le_bytes());
    let spacing = volume.spacing();
    let pixdim = [extras.qfac, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0];
    for (i, p) in pixdim.iter().enumerate() {
        put(&mut h, offset::PIXDIM + 4 * i, &p.to_le_bytes());
    }
    put(&mut h, offset::VOX_OFFSET, &(VOX_OFFSET as f32).to_le_bytes());
    put(&mut h, offset::SCL_SLOPE, &extras.scl_slope.to_le_bytes());
    put(&mut h, offset::SCL_INTER, &extras.scl_inter.to_le_bytes());
    h[offset::XYZT_UNITS] = extras.xyzt_units;
    let descrip = extras.descrip.as_bytes();
    put(&mut h, offset::DESCRIP, &descrip[..descrip.len().min(79)]);
    put(&mut h, offset::QFORM_CODE, &extras.qform_code.to_le_bytes());
    put(&mut h, offset::SFORM_CODE, &extras.sform_code.to_le_bytes());
    for i in 0..3 {
        put(&mut h, offset::QUATERN_B + 4 * i, &extras.quatern[i].to_le_bytes());
        put(&mut h, offset::QOFFSET_X + 4 * i, &extras.qoffset[i].to_le_bytes());
    }
    for (r, row) in extras.srow.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            put(&mut h, offset::SROW_X + 16 * r + 4 * c, &v.to_le_bytes());
        }
    }
    put(&mut h, offset::MAGIC, MAGIC);
    h.extend_from_slice(&volume.payload());
    Ok(h)
}

pub fn read(path: &Path) -> Result<AnyVolume> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}

pub fn write(volume: &AnyVolume, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(volume)?).map_err(|e| Error::io(path, e))
}
