//! File formats and atomic output.

pub mod coeffs;
pub mod ply;
pub mod ppm;
pub mod rig;
pub mod spec;

use std::io::Write;
use std::path::Path;

use crate::error::{Result, SlfError};

pub use coeffs::{coefficients_to_string, load_coefficients, parse_coefficients};
pub use ply::{load_ply, ply_bytes, read_ply, write_ply, PlyEncoding};
pub use ppm::{load_ppm, ppm_bytes, read_ppm};
pub use rig::{load_rig, parse_rig, rig_to_string};
pub use spec::{load_toml, parse_scene, parse_sweep, parse_toml, SweepAxis, SweepSpec};

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let wrap = |e: std::io::Error| SlfError::from(e).context(path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

/// Writes several files so that either all of them land or none does.
///
/// Every file is staged first; a failure before the renames leaves no output behind.
pub fn write_all_atomic(files: &[(std::path::PathBuf, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let wrap = |e: std::io::Error| SlfError::from(e).context(path.display());
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
        tmp.write_all(bytes).map_err(wrap)?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path)
            .map_err(|e| SlfError::from(e.error).context(path.display()))?;
    }
    Ok(())
}
