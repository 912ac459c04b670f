//! Scalar 3D grids with spacing metadata, their file formats, and the
//! synthetic phantom generator.
//!
//! Voxel `(x, y, z)` of a volume with dims `[nx, ny, nz]` lives at index
//! `x + nx * (y + ny * z)`, the NIfTI ordering. Read as a row-major tensor the
//! same buffer has shape `(nz, ny, nx)`.

pub mod native;
pub mod nifti;
mod phantom;

use std::fmt::Debug;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use phantom::{generate_phantom, nearest_mean_labels, PhantomConfig};

/// Element type stored in a volume file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    U8,
    I16,
    F32,
}

impl Datatype {
    pub fn nifti_code(self) -> i16 {
        match self {
            Datatype::U8 => 2,
            Datatype::I16 => 4,
            Datatype::F32 => 16,
        }
    }

    pub fn from_nifti_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(Datatype::U8),
            4 => Ok(Datatype::I16),
            16 => Ok(Datatype::F32),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Datatype::U8 => 1,
            Datatype::I16 => 2,
            Datatype::F32 => 4,
        }
    }
}

pub trait Voxel: Copy + Default + PartialEq + Debug + Send + Sync + 'static {
    const DATATYPE: Datatype;

    fn to_f32(self) -> f32;
    fn read(bytes: &[u8], big_endian: bool) -> Self;
    fn write(self, out: &mut Vec<u8>);
}

impl Voxel for u8 {
    const DATATYPE: Datatype = Datatype::U8;

    fn to_f32(self) -> f32 {
        self as f32
    }

    fn read(bytes: &[u8], _: bool) -> Self {
        bytes[0]
    }

    fn write(self, out: &mut Vec<u8>) {
        out.push(self);
    }
}

impl Voxel for i16 {
    const DATATYPE: Datatype = Datatype::I16;

    fn to_f32(self) -> f32 {
        self as f32
    }

    fn read(bytes: &[u8], big_endian: bool) -> Self {
        let b = [bytes[0], bytes[1]];
        if big_endian {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn write(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Voxel for f32 {
    const DATATYPE: Datatype = Datatype::F32;

    fn to_f32(self) -> f32 {
        self
    }

    fn read(bytes: &[u8], big_endian: bool) -> Self {
        let b = [bytes[0], bytes[1], bytes[2], bytes[3]];
        if big_endian {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }

    fn write(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

/// Header fields carried through reads and writes without interpretation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeaderExtras {
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    /// `pixdim[0]`, the qform handedness factor.
    pub qfac: f32,
    pub xyzt_units: u8,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub descrip: String,
}

impl Default for HeaderExtras {
    fn default() -> Self {
        Self {
            qform_code: 0,
            sform_code: 0,
            quatern: [0.0; 3],
            qoffset: [0.0; 3],
            srow: [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
            qfac: 1.0,
            // millimetres
            xyzt_units: 2,
            scl_slope: 0.0,
            scl_inter: 0.0,
            descrip: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    dims: [usize; 3],
    spacing: [f32; 3],
    data: Vec<T>,
    pub extras: HeaderExtras,
}

impl<T: Voxel> Volume<T> {
    pub fn new(dims: [usize; 3], spacing: [f32; 3], data: Vec<T>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Data(format!("volume dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Data(format!("volume spacing must be positive, got {spacing:?}")));
        }
        let n = voxel_count(dims)?;
        if data.len() != n {
            return Err(Error::Data(format!("volume {dims:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self {
            dims,
            spacing,
            data,
            extras: HeaderExtras::default(),
        })
    }

    pub fn filled(dims: [usize; 3], spacing: [f32; 3], value: T) -> Result<Self> {
        Self::new(dims, spacing, vec![value; voxel_count(dims)?])
    }

    /// A volume on the same grid and header as `self` holding `data`.
    pub fn like<U: Voxel>(&self, data: Vec<U>) -> Result<Volume<U>> {
        let mut v = Volume::new(self.dims, self.spacing, data)?;
        v.extras = self.extras.clone();
        Ok(v)
    }

    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|&v| f(v)).collect(),
            extras: self.extras.clone(),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f32; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    pub fn get(&self, p: [usize; 3]) -> T {
        self.data[self.index(p)]
    }

    pub fn set(&mut self, p: [usize; 3], value: T) {
        let i = self.index(p);
        self.data[i] = value;
    }

    pub fn same_grid<U>(&self, other: &Volume<U>) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub fn check_same_grid<U>(&self, other: &Volume<U>, what: &str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Data(format!(
                "{what}: dims {:?} and {:?} differ",
                self.dims, other.dims
            )));
        }
        if self.spacing != other.spacing {
            return Err(Error::Data(format!(
                "{what}: spacing {:?} and {:?} differ",
                self.spacing, other.spacing
            )));
        }
        Ok(())
    }
}

pub(crate) fn voxel_count(dims: [usize; 3]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Data(format!("volume dims {dims:?} overflow")))
}

/// A volume of any supported element type, as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyVolume {
    U8(Volume<u8>),
    I16(Volume<i16>),
    F32(Volume<f32>),
}

macro_rules! any_dispatch {
    ($self:expr, $v:ident => $body:expr) => {
        match $self {
            AnyVolume::U8($v) => $body,
            AnyVolume::I16($v) => $body,
            AnyVolume::F32($v) => $body,
        }
    };
}

impl AnyVolume {
    pub fn datatype(&self) -> Datatype {
        match self {
            AnyVolume::U8(_) => Datatype::U8,
            AnyVolume::I16(_) => Datatype::I16,
            AnyVolume::F32(_) => Datatype::F32,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        any_dispatch!(self, v => v.dims())
    }

    pub fn spacing(&self) -> [f32; 3] {
        any_dispatch!(self, v => v.spacing())
    }

    pub fn extras(&self) -> &HeaderExtras {
        any_dispatch!(self, v => &v.extras)
    }

    pub fn to_f32(&self) -> Volume<f32> {
        any_dispatch!(self, v => v.map(Voxel::to_f32))
    }

    /// Label volume; any value outside `0..=255` or non-integral is rejected.
    pub fn to_labels(&self) -> Result<Volume<u8>> {
        let convert = |x: f32| -> Result<u8> {
            if x.fract() == 0.0 && (0.0..=255.0).contains(&x) {
                Ok(x as u8)
            } else {
                Err(Error::Data(format!("label value {x} is not in 0..=255")))
            }
        };
        match self {
            AnyVolume::U8(v) => Ok(v.clone()),
            other => {
                let f = other.to_f32();
                let data = f.data().iter().map(|&x| convert(x)).collect::<Result<Vec<_>>>()?;
                f.like(data)
            }
        }
    }

    /// Voxel values as little-endian bytes in storage order.
    pub fn payload(&self) -> Vec<u8> {
        let size = self.datatype().size();
        any_dispatch!(self, v => {
            let mut out = Vec::with_capacity(v.len() * size);
            for &x in v.data() {
                x.write(&mut out);
            }
            out
        })
    }
}

impl From<Volume<u8>> for AnyVolume {
    fn from(v: Volume<u8>) -> Self {
        AnyVolume::U8(v)
    }
}

impl From<Volume<i16>> for AnyVolume {
    fn from(v: Volume<i16>) -> Self {
        AnyVolume::I16(v)
    }
}

impl From<Volume<f32>> for AnyVolume {
    fn from(v: Volume<f32>) -> Self {
        AnyVolume::F32(v)
    }
}

pub(crate) fn decode_payload(
    datatype: Datatype,
    dims: [usize; 3],
    spacing: [f32; 3],
    bytes: &[u8],
    big_endian: bool,
) -> Result<AnyVolume> {
    fn decode<T: Voxel>(dims: [usize; 3], spacing: [f32; 3], bytes: &[u8], be: bool) -> Result<Volume<T>> {
        let size = T::DATATYPE.size();
        Volume::new(dims, spacing, bytes.chunks_exact(size).map(|c| T::read(c, be)).collect())
    }
    let n = voxel_count(dims)?;
    let expected = n
        .checked_mul(datatype.size())
        .ok_or_else(|| Error::Data(format!("volume dims {dims:?} overflow")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let bytes = &bytes[..expected];
    Ok(match datatype {
        Datatype::U8 => AnyVolume::U8(decode(dims, spacing, bytes, big_endian)?),
        Datatype::I16 => AnyVolume::I16(decode(dims, spacing, bytes, big_endian)?),
        Datatype::F32 => AnyVolume::F32(decode(dims, spacing, bytes, big_endian)?),
    })
}

fn is_gzip(path: &Path) -> bool {
    path.to_string_lossy().to_ascii_lowercase().ends_with(".gz")
}

/// Reads `.nii` (NIfTI-1 single file) or `.vjson` (native header + payload).
pub fn read_volume(path: impl AsRef<Path>) -> Result<AnyVolume> {
    let path = path.as_ref();
    if is_gzip(path) {
        return Err(Error::UnsupportedFormat(format!(
            "{}: gzip-compressed volumes are not supported",
            path.display()
        )));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("nii") => nifti::read(path),
        Some("vjson") => native::read(path),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected a .nii or .vjson file",
            path.display()
        ))),
    }
}

pub fn write_volume(volume: &AnyVolume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_gzip(path) {
        return Err(Error::UnsupportedFormat(format!(
            "{}: gzip-compressed volumes are not supported",
            path.display()
        )));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("nii") => nifti::write(volume, path),
        Some("vjson") => native::write(volume, path),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected a .nii or .vjson file",
            path.display()
        ))),
    }
}
