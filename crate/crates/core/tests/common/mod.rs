#![allow(dead_code)]

pub mod oracles;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slf_codec::codec::{morton_encode, VoxelCloud};
use slf_codec::evaluation::scene::{RigLayout, SyntheticScene};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small scene that fits and renders in well under a second.
pub fn small_scene() -> SyntheticScene {
    SyntheticScene {
        points: 400,
        rig: RigLayout {
            circles: 5,
            per_circle: 12,
            width: 64,
            height: 64,
            ..RigLayout::default()
        },
        ..SyntheticScene::default()
    }
}

/// `count` distinct random voxels of a `2^depth` grid, Morton sorted.
pub fn random_voxels(rng: &mut ChaCha8Rng, depth: u32, count: usize) -> VoxelCloud {
    let side = 1u32 << depth;
    let mut codes: Vec<u64> = (0..count)
        .map(|_| morton_encode([rng.gen_range(0..side), rng.gen_range(0..side), rng.gen_range(0..side)]))
        .collect();
    codes.sort_unstable();
    codes.dedup();
    let coords = codes.into_iter().map(slf_codec::codec::morton_decode).collect();
    VoxelCloud::from_coords(depth, coords).unwrap()
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}
