//! Geometry and coefficient compression into the `SLF1` stream.

pub mod entropy;
pub mod geometry;
pub mod raht;
pub mod stream;
pub mod voxel;

pub use entropy::{entropy_decode, entropy_encode, unzigzag, zigzag, CodedPlane};
pub use geometry::{decode_geometry, encode_geometry};
pub use raht::{raht_forward, raht_inverse, RahtPlan};
pub use stream::{
    decode_bytes, decode_stream, encode_stream, Encoded, SlfBitstream, StreamHeader, HEADER_BYTES, MAGIC,
    PLANE_HEADER_BYTES, VERSION,
};
pub use voxel::{morton_decode, morton_encode, voxelize, VoxelCloud, VoxelFrame};

use crate::error::{Result, SlfError};

pub const DEFAULT_DEPTH: u32 = 10;

fn check_step(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(SlfError::invalid(format!("quantization step {q} must be positive")))
    }
}

/// Uniform scalar quantization, rounding half away from zero.
pub fn quantize(f: f64, q: f64) -> Result<i64> {
    check_step(q)?;
    let level = (f / q).round();
    if !level.is_finite() || level.abs() >= i64::MAX as f64 {
        return Err(SlfError::invalid(format!("coefficient {f} not representable at step {q}")));
    }
    Ok(level as i64)
}

pub fn dequantize(level: i64, q: f64) -> Result<f64> {
    check_step(q)?;
    Ok(level as f64 * q)
}
