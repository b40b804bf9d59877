use std::io::{BufReader, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyAccess, PropertyDef, PropertyType,
    ScalarType,
};
use ply_rs::writer::Writer;

use crate::error::{Result, SlfError};
use crate::mapping::PointCloud;

/// Payload encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyEncoding {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn triple(e: &DefaultElement, keys: [&str; 3], index: usize) -> Result<Option<Vector3<f64>>> {
    let mut out = [0.0; 3];
    let mut found = 0;
    for (slot, k) in out.iter_mut().zip(keys) {
        if let Some(p) = e.get(k) {
            *slot = scalar(p).ok_or_else(|| SlfError::Format(format!("vertex {index}: `{k}` is a list")))?;
            found += 1;
        }
    }
    match found {
        0 => Ok(None),
        3 => Ok(Some(Vector3::from(out))),
        _ => Err(SlfError::Format(format!("vertex {index}: incomplete {keys:?}"))),
    }
}

/// Reads `x, y, z` and, when present, `nx, ny, nz` from the `vertex` element.
///
/// Normals are renormalized; a zero normal is a format error.
pub fn read_ply<R: Read>(reader: R) -> Result<PointCloud> {
    let mut reader = BufReader::new(reader);
    let ply = Parser::<DefaultElement>::new()
        .read_ply(&mut reader)
        .map_err(|e| SlfError::Format(format!("ply: {e}")))?;
    let vertices = ply
        .payload
        .get("vertex")
        .ok_or_else(|| SlfError::Format("ply has no vertex element".into()))?;
    let mut positions = Vec::with_capacity(vertices.len());
    let mut normals = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let p = triple(v, ["x", "y", "z"], i)?
            .ok_or_else(|| SlfError::Format(format!("vertex {i} has no position")))?;
        if !p.iter().all(|c| c.is_finite()) {
            return Err(SlfError::Format(format!("vertex {i} has a non-finite position")));
        }
        positions.push(p);
        if let Some(n) = triple(v, ["nx", "ny", "nz"], i)? {
            let n = n
                .try_normalize(1e-12)
                .ok_or_else(|| SlfError::Format(format!("vertex {i} has a zero normal")))?;
            normals.push(n);
        }
    }
    let normals = match normals.len() {
        0 => None,
        n if n == positions.len() => Some(normals),
        _ => return Err(SlfError::Format("only some vertices carry normals".into())),
    };
    PointCloud::new(positions, normals)
}

pub fn load_ply(path: &Path) -> Result<PointCloud> {
    let file = std::fs::File::open(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    read_ply(file).map_err(|e| e.context(path.display()))
}

/// Writes positions (and normals, if any) as double-precision vertex properties.
pub fn write_ply<W: Write>(cloud: &PointCloud, encoding: PlyEncoding, out: &mut W) -> Result<()> {
    cloud.validate()?;
    let mut ply = Ply::<DefaultElement>::new();
    ply.header.encoding = match encoding {
        PlyEncoding::Ascii => Encoding::Ascii,
        PlyEncoding::BinaryLittleEndian => Encoding::BinaryLittleEndian,
    };
    let mut names = vec!["x", "y", "z"];
    if cloud.normals.is_some() {
        names.extend(["nx", "ny", "nz"]);
    }
    let mut def = ElementDef::new("vertex".to_string());
    for n in &names {
        def.properties
            .add(PropertyDef::new(n.to_string(), PropertyType::Scalar(ScalarType::Double)));
    }
    ply.header.elements.add(def);

    let rows = cloud
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut e = DefaultElement::new();
            let mut values = vec![p.x, p.y, p.z];
            if let Some(ns) = &cloud.normals {
                values.extend(ns[i].iter());
            }
            for (n, v) in names.iter().zip(values) {
                e.set_property(n.to_string(), Property::Double(v));
            }
            e
        })
        .collect();
    ply.payload.insert("vertex".to_string(), rows);
    Writer::new()
        .write_ply(out, &mut ply)
        .map_err(|e| SlfError::Format(format!("ply: {e}")))?;
    Ok(())
}

pub fn ply_bytes(cloud: &PointCloud, encoding: PlyEncoding) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_ply(cloud, encoding, &mut buf)?;
    Ok(buf)
}
