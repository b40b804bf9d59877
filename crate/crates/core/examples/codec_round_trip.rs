//! Encodes random coefficients on a sphere at several step sizes and decodes them back.

use rand::{Rng, SeedableRng};
use slf_codec::basis::BasisSpec;
use slf_codec::codec::{decode_bytes, encode_stream};
use slf_codec::evaluation::fibonacci_sphere;
use slf_codec::fitting::SlfCoefficients;

fn main() -> slf_codec::error::Result<()> {
    let cloud = fibonacci_sphere(20_000);
    let spec = BasisSpec::new(2, 2, 1)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let data = (0..cloud.len() * 3)
        .flat_map(|_| {
            let dc = rng.gen_range(40.0..220.0);
            let mut row = vec![dc * (spec.count() as f64).sqrt()];
            row.extend((1..spec.count()).map(|_| rng.gen_range(-8.0..8.0)));
            row
        })
        .collect();
    let coeffs = SlfCoefficients::from_vec(cloud.len(), 3, spec.count(), data)?;
    for q in [1.0, 4.0, 16.0, 64.0] {
        let enc = encode_stream(&cloud, &coeffs, spec, q, 9)?;
        let bytes = enc.stream.to_bytes();
        let (voxels, decoded) = decode_bytes(&bytes)?;
        assert_eq!(decoded, enc.reconstructed);
        println!(
            "Q = {q:>4}: {} voxels, geometry {} bits, coefficients {} bits ({:.2} bits per voxel)",
            voxels.len(),
            enc.stream.geometry_bits(),
            enc.stream.coefficient_bits(),
            enc.stream.coefficient_bits() as f64 / voxels.len() as f64
        );
    }
    Ok(())
}
