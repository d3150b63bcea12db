//! Minimal NIfTI-1 reader/writer for single-frame 3D volumes.
//!
//! Reads either byte order and gzip-compressed or plain files. Writes
//! little-endian with a 352-byte prefix (348 header + 4 extension bytes).
//! Labels are written as `u8`, intensities as `f32`. Gzip output uses a zero
//! mtime so repeated writes of the same volume are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Dims, LabelMap, Result, ScalarVolume, Spacing, VolumeError, MAX_LABEL};

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;
const DT_UINT32: i16 = 768;

// Labels stored as floats must lie this close to an integer.
const LABEL_INTEGRAL_TOL: f64 = 1e-3;

/// Spatial orientation fields carried through load/save untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct Orientation {
    pub qform_code: i16,
    pub sform_code: i16,
    /// quatern_b, quatern_c, quatern_d, qoffset_x, qoffset_y, qoffset_z
    pub quatern: [f32; 6],
    pub qfac: f32,
    pub srow: [[f32; 4]; 3],
}

impl Orientation {
    /// Axis-aligned scanner frame with the given voxel size.
    pub fn from_spacing(s: Spacing) -> Self {
        Self {
            qform_code: 1,
            sform_code: 1,
            quatern: [0.0; 6],
            qfac: 1.0,
            srow: [
                [s.dx as f32, 0.0, 0.0, 0.0],
                [0.0, s.dy as f32, 0.0, 0.0],
                [0.0, 0.0, s.dz as f32, 0.0],
            ],
        }
    }

    pub(crate) fn to_floats(&self) -> Vec<f32> {
        let mut v = self.quatern.to_vec();
        v.push(self.qfac);
        v.extend(self.srow.iter().flatten());
        v
    }

    pub(crate) fn from_floats(codes: [i16; 2], f: &[f32]) -> Self {
        let mut quatern = [0.0; 6];
        quatern.copy_from_slice(&f[..6]);
        let mut srow = [[0.0; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            row.copy_from_slice(&f[7 + 4 * r..11 + 4 * r]);
        }
        Self {
            qform_code: codes[0],
            sform_code: codes[1],
            quatern,
            qfac: f[6],
            srow,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    Label,
    Scalar,
}

/// A loaded grid of either kind.
#[derive(Clone, Debug)]
pub enum Volume {
    Label(LabelMap),
    Scalar(ScalarVolume),
}

pub fn load_nifti(path: impl AsRef<Path>, kind: VolumeKind) -> Result<Volume> {
    Ok(match kind {
        VolumeKind::Label => Volume::Label(read_label_map(path)?),
        VolumeKind::Scalar => Volume::Scalar(read_scalar_volume(path)?),
    })
}

pub fn read_scalar_volume(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    let raw = RawVolume::read(path.as_ref())?;
    let values = raw.values_f64()?;
    let data = values.into_iter().map(|v| v as f32).collect();
    Ok(ScalarVolume::new(raw.dims, raw.spacing, data)?.with_orientation(raw.orientation))
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let raw = RawVolume::read(path.as_ref())?;
    let labels = if raw.datatype == DT_UINT8 && !raw.scaled() {
        let data = raw.payload().to_vec();
        if let Some(index) = data.iter().position(|&v| v > MAX_LABEL) {
            return Err(VolumeError::LabelOutOfRange {
                value: data[index] as f64,
                index,
            });
        }
        data
    } else {
        raw.values_f64()?
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                let r = v.round();
                if (v - r).abs() > LABEL_INTEGRAL_TOL || !(0.0..=MAX_LABEL as f64).contains(&r) {
                    Err(VolumeError::LabelOutOfRange { value: v, index })
                } else {
                    Ok(r as u8)
                }
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(LabelMap::new(raw.dims, raw.spacing, labels)?.with_orientation(&raw.orientation))
}

pub(super) fn save_label(map: &LabelMap, path: &Path) -> Result<()> {
    let header = build_header(map.dims(), map.spacing(), &map.orientation(), DT_UINT8, 8);
    write_file(path, &header, map.data())
}

pub(super) fn save_scalar(vol: &ScalarVolume, path: &Path) -> Result<()> {
    let header = build_header(vol.dims(), vol.spacing(), vol.orientation(), DT_FLOAT32, 32);
    let mut payload = Vec::with_capacity(vol.data().len() * 4);
    for v in vol.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &header, &payload)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VolumeError + '_ {
    move |source| VolumeError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, header: &[u8], payload: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let mut out: Box<dyn Write> = if gz {
        Box::new(GzEncoder::new(BufWriter::new(file), Compression::new(6)))
    } else {
        Box::new(BufWriter::new(file))
    };
    out.write_all(header).map_err(io_err(path))?;
    out.write_all(&[0u8; DATA_OFFSET - HEADER_SIZE]).map_err(io_err(path))?;
    out.write_all(payload).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))?;
    Ok(())
}

fn build_header(dims: Dims, spacing: Spacing, o: &Orientation, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut h = vec![0u8; HEADER_SIZE];
    let put_i16 = |h: &mut [u8], at: usize, v: i16| h[at..at + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |h: &mut [u8], at: usize, v: f32| h[at..at + 4].copy_from_slice(&v.to_le_bytes());

    h[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    h[38] = b'r';
    let dim = [3, dims.nx as i16, dims.ny as i16, dims.nz as i16, 1, 1, 1, 1];
    for (n, d) in dim.iter().enumerate() {
        put_i16(&mut h, 40 + 2 * n, *d);
    }
    put_i16(&mut h, 70, datatype);
    put_i16(&mut h, 72, bitpix);
    let pixdim = [o.qfac, spacing.dx as f32, spacing.dy as f32, spacing.dz as f32, 1.0, 1.0, 1.0, 1.0];
    for (n, p) in pixdim.iter().enumerate() {
        put_f32(&mut h, 76 + 4 * n, *p);
    }
    put_f32(&mut h, 108, DATA_OFFSET as f32);
    put_f32(&mut h, 112, 1.0);
    h[123] = 2; // xyzt_units: mm
    put_i16(&mut h, 252, o.qform_code);
    put_i16(&mut h, 254, o.sform_code);
    for (n, q) in o.quatern.iter().enumerate() {
        put_f32(&mut h, 256 + 4 * n, *q);
    }
    for (r, row) in o.srow.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            put_f32(&mut h, 280 + 16 * r + 4 * c, *v);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    h
}

/// Header fields plus the raw voxel payload.
struct RawVolume {
    dims: Dims,
    spacing: Spacing,
    orientation: Orientation,
    datatype: i16,
    little_endian: bool,
    slope: f64,
    inter: f64,
    bytes: Vec<u8>,
    offset: usize,
    voxel_bytes: usize,
}

impl RawVolume {
    fn read(path: &Path) -> Result<Self> {
        let mut bytes = std::fs::read(path).map_err(io_err(path))?;
        if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
            let mut out = Vec::new();
            GzDecoder::new(&bytes[..]).read_to_end(&mut out).map_err(io_err(path))?;
            bytes = out;
        }
        Self::parse(bytes)
    }

    fn parse(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(VolumeError::Header(format!("file too small ({} bytes)", bytes.len())));
        }
        let le = match i32::from_le_bytes(bytes[0..4].try_into().unwrap()) {
            348 => true,
            _ if i32::from_be_bytes(bytes[0..4].try_into().unwrap()) == 348 => false,
            n => return Err(VolumeError::Header(format!("sizeof_hdr is {n}, expected 348"))),
        };
        let magic = &bytes[344..348];
        if magic != b"n+1\0" && magic != b"ni1\0" {
            return Err(VolumeError::Header("missing NIfTI-1 magic".into()));
        }
        let i16_at = |at: usize| {
            let b: [u8; 2] = bytes[at..at + 2].try_into().unwrap();
            if le {
                i16::from_le_bytes(b)
            } else {
                i16::from_be_bytes(b)
            }
        };
        let f32_at = |at: usize| {
            let b: [u8; 4] = bytes[at..at + 4].try_into().unwrap();
            if le {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        };

        let ndim = i16_at(40);
        if !(1..=7).contains(&ndim) {
            return Err(VolumeError::Header(format!("dim[0] = {ndim}")));
        }
        let mut extent = [1usize; 7];
        for (n, e) in extent.iter_mut().enumerate().take(ndim as usize) {
            let d = i16_at(42 + 2 * n);
            if d < 1 {
                return Err(VolumeError::Header(format!("dim[{}] = {d}", n + 1)));
            }
            *e = d as usize;
        }
        if extent[3..].iter().any(|&e| e != 1) {
            return Err(VolumeError::Header("only single-frame 3D volumes are supported".into()));
        }
        let dims = Dims::new(extent[0], extent[1], extent[2]);

        let datatype = i16_at(70);
        let voxel_bytes = match datatype {
            DT_UINT8 | DT_INT8 => 1,
            DT_INT16 | DT_UINT16 => 2,
            DT_INT32 | DT_UINT32 | DT_FLOAT32 => 4,
            DT_FLOAT64 => 8,
            other => return Err(VolumeError::UnsupportedDatatype(other)),
        };

        let pix = |n: usize| f32_at(76 + 4 * n) as f64;
        // pixdim for axes beyond dim[0] may legitimately be zero.
        let axis_spacing = |n: usize| if n as i16 <= ndim { pix(n) } else { 1.0 };
        let spacing = Spacing::new(axis_spacing(1), axis_spacing(2), axis_spacing(3))?;
        let qfac = if pix(0) < 0.0 { -1.0 } else { 1.0 };

        let vox_offset = f32_at(108);
        let offset = if vox_offset >= HEADER_SIZE as f32 {
            vox_offset as usize
        } else {
            DATA_OFFSET
        };
        let needed = offset + dims.len() * voxel_bytes;
        if bytes.len() < needed {
            return Err(VolumeError::Header(format!(
                "truncated data: need {needed} bytes, have {}",
                bytes.len()
            )));
        }

        let mut floats: Vec<f32> = (0..6).map(|n| f32_at(256 + 4 * n)).collect();
        floats.push(qfac);
        floats.extend((0..12).map(|n| f32_at(280 + 4 * n)));
        let orientation = Orientation::from_floats([i16_at(252), i16_at(254)], &floats);

        Ok(Self {
            dims,
            spacing,
            orientation,
            datatype,
            little_endian: le,
            slope: f32_at(112) as f64,
            inter: f32_at(116) as f64,
            bytes,
            offset,
            voxel_bytes,
        })
    }

    fn payload(&self) -> &[u8] {
        &self.bytes[self.offset..self.offset + self.dims.len() * self.voxel_bytes]
    }

    fn scaled(&self) -> bool {
        self.slope != 0.0 && (self.slope != 1.0 || self.inter != 0.0)
    }

    fn values_f64(&self) -> Result<Vec<f64>> {
        let le = self.little_endian;
        let decode = |c: &[u8]| -> f64 {
            macro_rules! num {
                ($t:ty) => {{
                    let b = c.try_into().unwrap();
                    (if le { <$t>::from_le_bytes(b) } else { <$t>::from_be_bytes(b) }) as f64
                }};
            }
            match self.datatype {
                DT_UINT8 => c[0] as f64,
                DT_INT8 => c[0] as i8 as f64,
                DT_INT16 => num!(i16),
                DT_UINT16 => num!(u16),
                DT_INT32 => num!(i32),
                DT_UINT32 => num!(u32),
                DT_FLOAT32 => num!(f32),
                DT_FLOAT64 => num!(f64),
                _ => unreachable!("datatype validated at parse"),
            }
        };
        let scaled = self.scaled();
        let mut out = Vec::with_capacity(self.dims.len());
        for (idx, chunk) in self.payload().chunks_exact(self.voxel_bytes).enumerate() {
            let mut v = decode(chunk);
            if scaled {
                v = v * self.slope + self.inter;
            }
            if !v.is_finite() {
                return Err(VolumeError::NonFinite(idx));
            }
            out.push(v);
        }
        Ok(out)
    }
}
