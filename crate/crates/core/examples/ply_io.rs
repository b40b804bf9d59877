//! Writes a cloud as ASCII and binary PLY, reads both back and estimates normals for a bare copy.

use slf_codec::evaluation::fibonacci_sphere;
use slf_codec::io::{ply_bytes, read_ply, PlyEncoding};
use slf_codec::mapping::{estimate_normals, PointCloud};

fn main() -> slf_codec::error::Result<()> {
    let cloud = fibonacci_sphere(2000);
    for enc in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
        let bytes = ply_bytes(&cloud, enc)?;
        let back = read_ply(&mut bytes.as_slice())?;
        let drift = back
            .positions
            .iter()
            .zip(&cloud.positions)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!("{enc:?}: {} bytes, {} points, max position drift {drift:.1e}", bytes.len(), back.len());
    }

    let bare = PointCloud::new(cloud.positions.clone(), None)?;
    let bytes = ply_bytes(&bare, PlyEncoding::Ascii)?;
    let read = read_ply(&mut bytes.as_slice())?;
    let normals = estimate_normals(&read.positions, 10)?;
    let worst = normals
        .iter()
        .zip(cloud.normals()?)
        .map(|(a, b)| a.dot(b))
        .fold(1.0, f64::min);
    println!("estimated normals: worst cosine to the true normal {worst:.4}");
    Ok(())
}
