//! Minimal NIfTI-1 reader/writer.
//!
//! Only single-file (`n+1`), uncompressed, little-endian images are
//! supported. Labels are stored as uint8 (datatype 2), scalar images as
//! float32 (datatype 16) and region probabilities as a 4D float32 image whose
//! fourth axis holds the WT, TC and ET channels in that order.
//!
//! Written files always have a 348-byte header, four zero extension bytes and
//! the payload at offset 352, so identical volumes give identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Geometry, LabelVolume, Orientation, RegionProbVolume, ScalarVolume};

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";
pub const DT_UINT8: i16 = 2;
pub const DT_FLOAT32: i16 = 16;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

// Byte offsets inside the 348-byte header.
const OFF_SIZEOF_HDR: usize = 0;
const OFF_REGULAR: usize = 38;
const OFF_DIM: usize = 40;
const OFF_DATATYPE: usize = 70;
const OFF_BITPIX: usize = 72;
const OFF_PIXDIM: usize = 76;
const OFF_VOX_OFFSET: usize = 108;
const OFF_SCL_SLOPE: usize = 112;
const OFF_XYZT_UNITS: usize = 123;
const OFF_QFORM_CODE: usize = 252;
const OFF_SFORM_CODE: usize = 254;
const OFF_QUATERN: usize = 256;
const OFF_QOFFSET: usize = 268;
const OFF_SROW: usize = 280;
const OFF_MAGIC: usize = 344;

const UNITS_MM: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    Label,
    Scalar,
    RegionProb,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Label(LabelVolume),
    Scalar(ScalarVolume),
    RegionProb(RegionProbVolume),
}

/// Result of reading a label file.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRead {
    pub volume: LabelVolume,
    /// Number of voxels that carried the legacy enhancing label 4 and were
    /// rewritten to 3.
    pub remapped: usize,
}

impl LabelRead {
    pub fn was_remapped(&self) -> bool {
        self.remapped > 0
    }
}

/// Reads a volume of the requested kind. Label remapping is reported through
/// [`read_label`]; this wrapper drops the count.
pub fn read_volume(path: impl AsRef<Path>, kind: VolumeKind) -> Result<Volume> {
    Ok(match kind {
        VolumeKind::Label => Volume::Label(read_label(path)?.volume),
        VolumeKind::Scalar => Volume::Scalar(read_scalar(path)?),
        VolumeKind::RegionProb => Volume::RegionProb(read_region_prob(path)?),
    })
}

pub fn write_volume(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let bytes = match volume {
        Volume::Label(v) => encode_label(v),
        Volume::Scalar(v) => encode_scalar(v)?,
        Volume::RegionProb(v) => encode_region_prob(v)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_label(path: impl AsRef<Path>) -> Result<LabelRead> {
    let path = path.as_ref();
    decode_label(&read_file(path)?).map_err(|e| with_path(e, path))
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    let path = path.as_ref();
    decode_scalar(&read_file(path)?).map_err(|e| with_path(e, path))
}

pub fn read_region_prob(path: impl AsRef<Path>) -> Result<RegionProbVolume> {
    let path = path.as_ref();
    decode_region_prob(&read_file(path)?).map_err(|e| with_path(e, path))
}

pub fn write_label(volume: &LabelVolume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_label(volume))?;
    Ok(())
}

pub fn write_scalar(volume: &ScalarVolume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_scalar(volume)?)?;
    Ok(())
}

pub fn write_region_prob(volume: &RegionProbVolume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_region_prob(volume)?)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(&GZIP_MAGIC) {
        return Err(Error::CompressedInput(path.to_path_buf()));
    }
    Ok(bytes)
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::CompressedInput(_) => Error::CompressedInput(path.to_path_buf()),
        other => other,
    }
}

pub fn encode_label(volume: &LabelVolume) -> Vec<u8> {
    let g = volume.geometry();
    let mut out = header(g, None, DT_UINT8, 8);
    out.extend_from_slice(volume.voxels());
    out
}

pub fn encode_scalar(volume: &ScalarVolume) -> Result<Vec<u8>> {
    volume.ensure_finite()?;
    let g = volume.geometry();
    let mut out = header(g, None, DT_FLOAT32, 32);
    out.reserve(volume.voxels().len() * 4);
    for v in volume.voxels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_region_prob(volume: &RegionProbVolume) -> Result<Vec<u8>> {
    let g = volume.geometry();
    let mut out = header(g, Some(3), DT_FLOAT32, 32);
    out.reserve(g.len() * 12);
    for ch in volume.channels() {
        for v in ch {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Validation(format!("probability {v} outside [0, 1]")));
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_label(bytes: &[u8]) -> Result<LabelRead> {
    let h = parse_header(bytes)?;
    h.expect_datatype(DT_UINT8)?;
    let geometry = h.geometry(1)?;
    let payload = h.payload(bytes, geometry.len(), 1)?;
    let mut remapped = 0;
    let mut voxels = Vec::with_capacity(payload.len());
    for (i, &v) in payload.iter().enumerate() {
        voxels.push(match v {
            0..=3 => v,
            4 => {
                remapped += 1;
                3
            }
            other => {
                return Err(Error::Validation(format!(
                    "label {other} at voxel {i} is not a tumour label"
                )))
            }
        });
    }
    Ok(LabelRead {
        volume: LabelVolume::new(geometry, voxels)?,
        remapped,
    })
}

pub fn decode_scalar(bytes: &[u8]) -> Result<ScalarVolume> {
    let h = parse_header(bytes)?;
    h.expect_datatype(DT_FLOAT32)?;
    let geometry = h.geometry(1)?;
    let payload = h.payload(bytes, geometry.len(), 4)?;
    ScalarVolume::new(geometry, f32s(payload))
}

pub fn decode_region_prob(bytes: &[u8]) -> Result<RegionProbVolume> {
    let h = parse_header(bytes)?;
    h.expect_datatype(DT_FLOAT32)?;
    let geometry = h.geometry(3)?;
    let n = geometry.len();
    let payload = h.payload(bytes, n * 3, 4)?;
    let all = f32s(payload);
    let channels = [
        all[..n].to_vec(),
        all[n..2 * n].to_vec(),
        all[2 * n..].to_vec(),
    ];
    RegionProbVolume::new(geometry, channels)
}

fn f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

fn header(g: &Geometry, channels: Option<usize>, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    put_i32(&mut h, OFF_SIZEOF_HDR, HEADER_SIZE as i32);
    h[OFF_REGULAR] = b'r';
    let d = g.dims();
    let mut dim = [0i16; 8];
    dim[0] = if channels.is_some() { 4 } else { 3 };
    for a in 0..3 {
        dim[a + 1] = d[a] as i16;
    }
    dim[4] = channels.unwrap_or(1) as i16;
    for k in 5..8 {
        dim[k] = 1;
    }
    for (k, v) in dim.iter().enumerate() {
        put_i16(&mut h, OFF_DIM + 2 * k, *v);
    }
    put_i16(&mut h, OFF_DATATYPE, datatype);
    put_i16(&mut h, OFF_BITPIX, bitpix);
    let o = &g.orientation;
    let s = g.spacing();
    let mut pixdim = [1.0f32; 8];
    pixdim[0] = o.qfac;
    pixdim[1..4].copy_from_slice(&s);
    for (k, v) in pixdim.iter().enumerate() {
        put_f32(&mut h, OFF_PIXDIM + 4 * k, *v);
    }
    put_f32(&mut h, OFF_VOX_OFFSET, VOX_OFFSET as f32);
    put_f32(&mut h, OFF_SCL_SLOPE, 1.0);
    h[OFF_XYZT_UNITS] = UNITS_MM;
    put_i16(&mut h, OFF_QFORM_CODE, o.qform_code);
    put_i16(&mut h, OFF_SFORM_CODE, o.sform_code);
    for k in 0..3 {
        put_f32(&mut h, OFF_QUATERN + 4 * k, o.quatern[k]);
        put_f32(&mut h, OFF_QOFFSET + 4 * k, o.qoffset[k]);
    }
    for (r, row) in o.srow.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            put_f32(&mut h, OFF_SROW + 16 * r + 4 * c, *v);
        }
    }
    h[OFF_MAGIC..OFF_MAGIC + 4].copy_from_slice(MAGIC);
    h
}

struct Header {
    dim: [i16; 8],
    pixdim: [f32; 8],
    datatype: i16,
    bitpix: i16,
    vox_offset: usize,
    orientation: Orientation,
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset,
        reason: reason.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.starts_with(&GZIP_MAGIC) {
        return Err(Error::CompressedInput(Default::default()));
    }
    if bytes.len() < HEADER_SIZE {
        return Err(format_err(
            bytes.len(),
            format!("file is {} bytes, shorter than the 348-byte header", bytes.len()),
        ));
    }
    let sizeof_hdr = get_i32(bytes, OFF_SIZEOF_HDR);
    if sizeof_hdr != HEADER_SIZE as i32 {
        let reason = if i32::from_be_bytes(bytes[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
            "big-endian files are not supported".to_string()
        } else {
            format!("sizeof_hdr is {sizeof_hdr}, expected 348")
        };
        return Err(format_err(OFF_SIZEOF_HDR, reason));
    }
    if &bytes[OFF_MAGIC..OFF_MAGIC + 4] != MAGIC {
        return Err(format_err(
            OFF_MAGIC,
            format!("magic {:?} is not \"n+1\\0\"", &bytes[OFF_MAGIC..OFF_MAGIC + 4]),
        ));
    }
    let mut dim = [0i16; 8];
    for (k, d) in dim.iter_mut().enumerate() {
        *d = get_i16(bytes, OFF_DIM + 2 * k);
    }
    let mut pixdim = [0f32; 8];
    for (k, p) in pixdim.iter_mut().enumerate() {
        *p = get_f32(bytes, OFF_PIXDIM + 4 * k);
    }
    let vox = get_f32(bytes, OFF_VOX_OFFSET);
    if !(vox.is_finite() && vox >= HEADER_SIZE as f32 && vox.fract() == 0.0) {
        return Err(format_err(OFF_VOX_OFFSET, format!("invalid vox_offset {vox}")));
    }
    let mut orientation = Orientation {
        qform_code: get_i16(bytes, OFF_QFORM_CODE),
        sform_code: get_i16(bytes, OFF_SFORM_CODE),
        qfac: pixdim[0],
        ..Orientation::default()
    };
    for k in 0..3 {
        orientation.quatern[k] = get_f32(bytes, OFF_QUATERN + 4 * k);
        orientation.qoffset[k] = get_f32(bytes, OFF_QOFFSET + 4 * k);
    }
    for r in 0..3 {
        for c in 0..4 {
            orientation.srow[r][c] = get_f32(bytes, OFF_SROW + 16 * r + 4 * c);
        }
    }
    Ok(Header {
        dim,
        pixdim,
        datatype: get_i16(bytes, OFF_DATATYPE),
        bitpix: get_i16(bytes, OFF_BITPIX),
        vox_offset: vox as usize,
        orientation,
    })
}

impl Header {
    fn expect_datatype(&self, expected: i16) -> Result<()> {
        if self.datatype != expected {
            return Err(Error::UnsupportedDatatype {
                code: self.datatype,
                expected,
            });
        }
        let bits = if expected == DT_UINT8 { 8 } else { 32 };
        if self.bitpix != bits {
            return Err(format_err(
                OFF_BITPIX,
                format!("bitpix {} does not match datatype {}", self.bitpix, self.datatype),
            ));
        }
        Ok(())
    }

    /// `channels` is the required size of the fourth axis; 1 means a plain 3D
    /// image (trailing unit axes are accepted).
    fn geometry(&self, channels: usize) -> Result<Geometry> {
        let ndim = self.dim[0];
        if !(1..=7).contains(&ndim) {
            return Err(format_err(OFF_DIM, format!("dim[0] = {ndim} is not in 1..=7")));
        }
        let ndim = ndim as usize;
        let axis = |k: usize| -> Result<usize> {
            if k > ndim {
                return Ok(1);
            }
            let d = self.dim[k];
            if d < 1 {
                return Err(format_err(OFF_DIM + 2 * k, format!("dim[{k}] = {d} must be >= 1")));
            }
            Ok(d as usize)
        };
        let dims = [axis(1)?, axis(2)?, axis(3)?];
        let fourth = axis(4)?;
        if fourth != channels {
            return Err(format_err(
                OFF_DIM + 8,
                format!("dim[4] = {fourth}, expected {channels}"),
            ));
        }
        for k in 5..=ndim {
            if axis(k)? != 1 {
                return Err(format_err(OFF_DIM + 2 * k, format!("dim[{k}] must be 1")));
            }
        }
        let spacing = [self.pixdim[1], self.pixdim[2], self.pixdim[3]];
        for (a, s) in spacing.iter().enumerate() {
            if !(s.is_finite() && *s > 0.0) {
                return Err(format_err(
                    OFF_PIXDIM + 4 * (a + 1),
                    format!("pixdim[{}] = {s} must be > 0", a + 1),
                ));
            }
        }
        let mut g = Geometry::new(dims, spacing)?;
        g.orientation = self.orientation;
        Ok(g)
    }

    fn payload<'a>(&self, bytes: &'a [u8], count: usize, width: usize) -> Result<&'a [u8]> {
        let end = self.vox_offset + count * width;
        if bytes.len() < end {
            return Err(format_err(
                bytes.len(),
                format!("payload truncated: need {end} bytes, file has {}", bytes.len()),
            ));
        }
        Ok(&bytes[self.vox_offset..end])
    }
}

fn put_i16(h: &mut [u8], off: usize, v: i16) {
    h[off..off + 2].copy_from_slice(&v.to_le_bytes());
}

fn put_i32(h: &mut [u8], off: usize, v: i32) {
    h[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

fn put_f32(h: &mut [u8], off: usize, v: f32) {
    h[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

fn get_i16(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn get_i32(b: &[u8], off: usize) -> i32 {
    i32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn get_f32(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}
