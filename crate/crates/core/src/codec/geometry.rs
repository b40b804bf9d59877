//! Octree occupancy coding: one byte per occupied internal node, breadth
//! first, with bit `c` of the mask set when child `c = x + 2y + 4z` is occupied.

use super::voxel::{morton_decode, VoxelCloud};
use crate::error::{Result, SlfError};

pub fn encode_geometry(vox: &VoxelCloud) -> Vec<u8> {
    let codes = vox.codes();
    let mut out = Vec::new();
    for level in 1..=vox.depth {
        let shift = 3 * (vox.depth - level);
        let mut prefixes: Vec<u64> = codes.iter().map(|c| c >> shift).collect();
        prefixes.dedup();
        let mut i = 0;
        while i < prefixes.len() {
            let parent = prefixes[i] >> 3;
            let mut mask = 0u8;
            while i < prefixes.len() && prefixes[i] >> 3 == parent {
                mask |= 1 << (prefixes[i] & 7);
                i += 1;
            }
            out.push(mask);
        }
    }
    out
}

pub fn decode_geometry(bytes: &[u8], depth: u32) -> Result<VoxelCloud> {
    if !(1..=super::voxel::MAX_DEPTH).contains(&depth) {
        return Err(SlfError::corrupt(format!("octree depth {depth} out of range")));
    }
    let mut masks = bytes.iter();
    let mut nodes = vec![0u64];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for parent in &nodes {
            let mask = *masks
                .next()
                .ok_or_else(|| SlfError::corrupt("octree occupancy truncated"))?;
            if mask == 0 {
                return Err(SlfError::corrupt("empty octree occupancy mask"));
            }
            for child in 0..8 {
                if mask & (1 << child) != 0 {
                    next.push(parent << 3 | child);
                }
            }
        }
        nodes = next;
    }
    if masks.next().is_some() {
        return Err(SlfError::corrupt("trailing bytes after octree occupancy"));
    }
    VoxelCloud::from_coords(depth, nodes.into_iter().map(morton_decode).collect())
}
