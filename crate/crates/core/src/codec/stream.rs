use rayon::prelude::*;

use super::entropy::CodedPlane;
use super::geometry::{decode_geometry, encode_geometry};
use super::raht::RahtPlan;
use super::voxel::{voxelize, VoxelCloud};
use super::{dequantize, quantize};
use crate::basis::BasisSpec;
use crate::error::{Result, SlfError};
use crate::fitting::SlfCoefficients;
use crate::mapping::PointCloud;

pub const MAGIC: &[u8; 4] = b"SLF1";
pub const VERSION: u8 = 1;
/// Fixed header bytes before the geometry payload, including its length field.
pub const HEADER_BYTES: usize = 4 + 1 + 1 + 4 + 1 + 1 + 1 + 1 + 4 + 4;
/// Per-plane framing: order byte and payload length.
pub const PLANE_HEADER_BYTES: usize = 1 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub depth: u32,
    pub voxel_count: u32,
    pub spec: BasisSpec,
    pub channels: u8,
    pub q: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlfBitstream {
    pub header: StreamHeader,
    pub geometry: Vec<u8>,
    /// Planes in basis-major order: index `i * channels + channel`.
    pub planes: Vec<CodedPlane>,
}

impl SlfBitstream {
    pub fn plane_count(&self) -> usize {
        self.header.spec.count() * self.header.channels as usize
    }

    pub fn geometry_bits(&self) -> usize {
        8 * self.geometry.len()
    }

    /// Bits spent on coefficient planes, framing included.
    pub fn coefficient_bits(&self) -> usize {
        8 * self
            .planes
            .iter()
            .map(|p| PLANE_HEADER_BYTES + p.payload.len())
            .sum::<usize>()
    }

    pub fn total_bytes(&self) -> usize {
        HEADER_BYTES + self.geometry.len() + self.coefficient_bits() / 8
    }

    pub fn total_bits(&self) -> usize {
        8 * self.total_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.total_bytes());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(h.depth as u8);
        out.extend_from_slice(&h.voxel_count.to_le_bytes());
        out.push(h.spec.order as u8);
        out.push(h.spec.scale_theta as u8);
        out.push(h.spec.scale_gamma as u8);
        out.push(h.channels);
        out.extend_from_slice(&h.q.to_le_bytes());
        out.extend_from_slice(&(self.geometry.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.geometry);
        for p in &self.planes {
            out.push(p.k);
            out.extend_from_slice(&(p.payload.len() as u32).to_le_bytes());
            out.extend_from_slice(&p.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(SlfError::UnsupportedStream("bad magic".into()));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(SlfError::UnsupportedStream(format!("version {version}")));
        }
        let depth = r.u8()? as u32;
        let voxel_count = r.u32()?;
        let (order, s0, s1) = (r.u8()?, r.u8()?, r.u8()?);
        let spec = BasisSpec::with_scales(order as u32, s0 as u32, s1 as u32)
            .map_err(|e| SlfError::corrupt(format!("basis fields: {e}")))?;
        let channels = r.u8()?;
        if channels == 0 {
            return Err(SlfError::corrupt("zero channels"));
        }
        let q = r.f32()?;
        if !(q.is_finite() && q > 0.0) {
            return Err(SlfError::corrupt(format!("quantization step {q}")));
        }
        let geometry_len = r.u32()? as usize;
        let geometry = r.take(geometry_len)?.to_vec();
        let plane_count = spec.count() * channels as usize;
        let mut planes = Vec::with_capacity(plane_count);
        for _ in 0..plane_count {
            let k = r.u8()?;
            let len = r.u32()? as usize;
            planes.push(CodedPlane {
                k,
                payload: r.take(len)?.to_vec(),
            });
        }
        if r.pos != bytes.len() {
            return Err(SlfError::corrupt("trailing bytes after last plane"));
        }
        Ok(Self {
            header: StreamHeader {
                depth,
                voxel_count,
                spec,
                channels,
                q,
            },
            geometry,
            planes,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| SlfError::corrupt("stream truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Encoder result: the stream plus what a decoder will reconstruct from it.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub stream: SlfBitstream,
    pub voxels: VoxelCloud,
    /// Per-voxel coefficients after quantization and inverse transform.
    pub reconstructed: SlfCoefficients,
}

/// Voxelizes, averages coefficients per voxel and codes every plane.
pub fn encode_stream(
    cloud: &PointCloud,
    coeffs: &SlfCoefficients,
    spec: BasisSpec,
    q: f64,
    depth: u32,
) -> Result<Encoded> {
    if coeffs.points() != cloud.len() {
        return Err(SlfError::invalid(format!(
            "{} coefficient vectors for {} points",
            coeffs.points(),
            cloud.len()
        )));
    }
    if coeffs.count() != spec.count() {
        return Err(SlfError::invalid(format!(
            "coefficients have {} basis functions, basis has {}",
            coeffs.count(),
            spec.count()
        )));
    }
    if coeffs.channels() == 0 || coeffs.channels() > u8::MAX as usize {
        return Err(SlfError::invalid(format!("unsupported channel count {}", coeffs.channels())));
    }
    let q32 = q as f32;
    if !(q.is_finite() && q > 0.0 && q32 > 0.0 && q32.is_finite()) {
        return Err(SlfError::invalid(format!("quantization step {q} must be a positive f32")));
    }
    let q_used = q32 as f64;
    let voxels = voxelize(cloud, depth)?;
    if voxels.len() > u32::MAX as usize {
        return Err(SlfError::invalid("too many voxels"));
    }
    let merged = voxels.average_coefficients(coeffs);
    let plan = RahtPlan::new(&voxels);
    let channels = coeffs.channels();
    let coded: Vec<(CodedPlane, Vec<f64>)> = (0..spec.count() * channels)
        .into_par_iter()
        .map(|p| {
            let (i, ch) = (p / channels, p % channels);
            let f = plan.forward(&merged.plane(ch, i))?;
            let levels = f.iter().map(|&x| quantize(x, q_used)).collect::<Result<Vec<_>>>()?;
            let rec = levels.iter().map(|&l| dequantize(l, q_used)).collect::<Result<Vec<_>>>()?;
            Ok((CodedPlane::encode(&levels), plan.inverse(&rec)?))
        })
        .collect::<Result<_>>()?;
    let mut reconstructed = SlfCoefficients::zeros(voxels.len(), channels, spec.count());
    let mut planes = Vec::with_capacity(coded.len());
    for (p, (plane, rec)) in coded.into_iter().enumerate() {
        reconstructed.set_plane(p % channels, p / channels, &rec);
        planes.push(plane);
    }
    let stream = SlfBitstream {
        header: StreamHeader {
            depth,
            voxel_count: voxels.len() as u32,
            spec,
            channels: channels as u8,
            q: q32,
        },
        geometry: encode_geometry(&voxels),
        planes,
    };
    Ok(Encoded {
        stream,
        voxels,
        reconstructed,
    })
}

pub fn decode_stream(stream: &SlfBitstream) -> Result<(VoxelCloud, SlfCoefficients)> {
    let h = &stream.header;
    if stream.planes.len() != stream.plane_count() {
        return Err(SlfError::corrupt(format!(
            "{} planes, header implies {}",
            stream.planes.len(),
            stream.plane_count()
        )));
    }
    let voxels = decode_geometry(&stream.geometry, h.depth)?;
    if voxels.len() != h.voxel_count as usize {
        return Err(SlfError::corrupt(format!(
            "octree holds {} voxels, header says {}",
            voxels.len(),
            h.voxel_count
        )));
    }
    let q = h.q as f64;
    let plan = RahtPlan::new(&voxels);
    let channels = h.channels as usize;
    let planes: Vec<Vec<f64>> = stream
        .planes
        .par_iter()
        .map(|coded| {
            let levels = coded.decode(voxels.len())?;
            let rec = levels.iter().map(|&l| dequantize(l, q)).collect::<Result<Vec<_>>>()?;
            plan.inverse(&rec)
        })
        .collect::<Result<_>>()?;
    let mut coeffs = SlfCoefficients::zeros(voxels.len(), channels, h.spec.count());
    for (p, plane) in planes.iter().enumerate() {
        coeffs.set_plane(p % channels, p / channels, plane);
    }
    Ok((voxels, coeffs))
}

pub fn decode_bytes(bytes: &[u8]) -> Result<(VoxelCloud, SlfCoefficients)> {
    decode_stream(&SlfBitstream::from_bytes(bytes)?)
}
