//! Camera rig text format.
//!
//! One camera per line, whitespace separated:
//! `id K00 K01 .. K22 R00 R01 .. R22 t0 t1 t2 width height`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Result, SlfError};
use crate::mapping::{CameraModel, RigCamera};

const FIELDS: usize = 1 + 9 + 9 + 3 + 2;

pub fn rig_to_string(cameras: &[RigCamera]) -> String {
    let mut s = String::from("# id K(3x3, row-major) R(3x3, row-major) t(3) width height\n");
    for c in cameras {
        let m = &c.model;
        write!(s, "{}", c.id).unwrap();
        for v in m.intrinsics.transpose().iter().chain(m.rotation.transpose().iter()) {
            write!(s, " {v:?}").unwrap();
        }
        for v in m.translation.iter() {
            write!(s, " {v:?}").unwrap();
        }
        writeln!(s, " {} {}", m.width, m.height).unwrap();
    }
    s
}

pub fn parse_rig(text: &str) -> Result<Vec<RigCamera>> {
    let mut cameras: Vec<RigCamera> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| SlfError::Format(format!("rig line {}: {msg}", lineno + 1));
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != FIELDS {
            return Err(at(format!("expected {FIELDS} fields, found {}", tokens.len())));
        }
        let id: u32 = tokens[0].parse().map_err(|_| at(format!("bad id `{}`", tokens[0])))?;
        let reals = tokens[1..22]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| at(format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let dims = tokens[22..]
            .iter()
            .map(|t| t.parse::<u32>().map_err(|_| at(format!("bad size `{t}`"))))
            .collect::<Result<Vec<u32>>>()?;
        let model = CameraModel::new(
            Matrix3::from_row_slice(&reals[0..9]),
            Matrix3::from_row_slice(&reals[9..18]),
            Vector3::from_column_slice(&reals[18..21]),
            dims[0],
            dims[1],
        )
        .map_err(|e| e.context(format!("rig line {}", lineno + 1)))?;
        if cameras.iter().any(|c| c.id == id) {
            return Err(at(format!("duplicate camera id {id}")));
        }
        cameras.push(RigCamera { id, model });
    }
    Ok(cameras)
}

pub fn load_rig(path: &Path) -> Result<Vec<RigCamera>> {
    let text = std::fs::read_to_string(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    parse_rig(&text).map_err(|e| e.context(path.display()))
}
