use nalgebra::Vector3;

use crate::error::{Result, SlfError};
use crate::fitting::SlfCoefficients;
use crate::mapping::PointCloud;

pub const MAX_DEPTH: u32 = 21;

/// Interleaves the low `depth` bits of a voxel coordinate; x lands on the lowest bit.
pub fn morton_encode(c: [u32; 3]) -> u64 {
    let mut code = 0u64;
    for bit in 0..MAX_DEPTH {
        for (axis, v) in c.iter().enumerate() {
            code |= (((*v >> bit) & 1) as u64) << (3 * bit as usize + axis);
        }
    }
    code
}

pub fn morton_decode(code: u64) -> [u32; 3] {
    let mut c = [0u32; 3];
    for bit in 0..MAX_DEPTH {
        for (axis, v) in c.iter_mut().enumerate() {
            *v |= (((code >> (3 * bit as usize + axis)) & 1) as u32) << bit;
        }
    }
    c
}

/// Maps voxel coordinates back to world space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelFrame {
    pub origin: Vector3<f64>,
    /// World size of one voxel edge.
    pub cell: f64,
}

impl VoxelFrame {
    /// The frame `voxelize` uses for `cloud` at `depth`.
    pub fn of_cloud(cloud: &PointCloud, depth: u32) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(SlfError::invalid(format!("voxel depth {depth} outside [1, {MAX_DEPTH}]")));
        }
        let (lo, hi) = cloud
            .bounds()
            .ok_or_else(|| SlfError::invalid("cannot voxelize an empty cloud"))?;
        let extent = (hi - lo).max();
        let extent = if extent > 0.0 { extent } else { 1.0 };
        Ok(Self {
            origin: lo,
            cell: extent / (1u64 << depth) as f64,
        })
    }

    pub fn center(&self, c: [u32; 3]) -> Vector3<f64> {
        self.origin + Vector3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.cell
    }
}

/// Occupied voxels of a `2^D` grid in ascending Morton order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelCloud {
    pub depth: u32,
    pub coords: Vec<[u32; 3]>,
    /// For every source point, the index of the voxel it fell into.
    pub point_map: Vec<usize>,
    /// World placement; only known on the encoder side.
    pub frame: Option<VoxelFrame>,
}

impl VoxelCloud {
    /// Builds from Morton-sorted unique coordinates; each voxel maps to itself.
    pub fn from_coords(depth: u32, coords: Vec<[u32; 3]>) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(SlfError::invalid(format!("voxel depth {depth} outside [1, {MAX_DEPTH}]")));
        }
        let limit = 1u32 << depth;
        if coords.iter().any(|c| c.iter().any(|&v| v >= limit)) {
            return Err(SlfError::invalid("voxel coordinate outside the grid"));
        }
        if coords.windows(2).any(|w| morton_encode(w[0]) >= morton_encode(w[1])) {
            return Err(SlfError::invalid("voxel coordinates not strictly Morton sorted"));
        }
        let point_map = (0..coords.len()).collect();
        Ok(Self {
            depth,
            coords,
            point_map,
            frame: None,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn codes(&self) -> Vec<u64> {
        self.coords.iter().map(|c| morton_encode(*c)).collect()
    }

    /// Per-voxel mean of a per-point attribute.
    pub fn average(&self, per_point: &[f64]) -> Vec<f64> {
        let mut sum = vec![0.0; self.len()];
        let mut count = vec![0usize; self.len()];
        for (p, v) in per_point.iter().enumerate() {
            sum[self.point_map[p]] += v;
            count[self.point_map[p]] += 1;
        }
        sum.iter().zip(count).map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
    }

    /// Per-voxel mean of every coefficient vector.
    pub fn average_coefficients(&self, coeffs: &SlfCoefficients) -> SlfCoefficients {
        let mut out = SlfCoefficients::zeros(self.len(), coeffs.channels(), coeffs.count());
        let mut count = vec![0usize; self.len()];
        for p in 0..coeffs.points() {
            let v = self.point_map[p];
            count[v] += 1;
            for (o, x) in out.point_mut(v).iter_mut().zip(coeffs.point(p)) {
                *o += x;
            }
        }
        for (v, c) in count.iter().enumerate() {
            if *c > 1 {
                let inv = 1.0 / *c as f64;
                out.point_mut(v).iter_mut().for_each(|x| *x *= inv);
            }
        }
        out
    }

    /// Coefficients of each source point, read from its voxel.
    pub fn scatter_to_points(&self, voxel_coeffs: &SlfCoefficients) -> SlfCoefficients {
        let mut out = SlfCoefficients::zeros(self.point_map.len(), voxel_coeffs.channels(), voxel_coeffs.count());
        for (p, v) in self.point_map.iter().enumerate() {
            out.point_mut(p).copy_from_slice(voxel_coeffs.point(*v));
        }
        out
    }

    /// World-space voxel centers, if the frame is known.
    pub fn centers(&self) -> Option<Vec<Vector3<f64>>> {
        let frame = self.frame?;
        Some(self.coords.iter().map(|c| frame.center(*c)).collect())
    }
}

/// Min-max normalizes positions onto a `2^depth` grid (one isotropic scale),
/// merges duplicates and sorts by Morton code.
pub fn voxelize(cloud: &PointCloud, depth: u32) -> Result<VoxelCloud> {
    let frame = VoxelFrame::of_cloud(cloud, depth)?;
    let max_cell = (1u32 << depth) - 1;
    let cell_of = |p: &Vector3<f64>| -> [u32; 3] {
        let mut c = [0u32; 3];
        for (axis, v) in c.iter_mut().enumerate() {
            let t = ((p[axis] - frame.origin[axis]) / frame.cell).floor();
            *v = (t.max(0.0) as u32).min(max_cell);
        }
        c
    };
    let point_codes: Vec<u64> = cloud.positions.iter().map(|p| morton_encode(cell_of(p))).collect();
    let mut codes = point_codes.clone();
    codes.sort_unstable();
    codes.dedup();
    let point_map = point_codes
        .iter()
        .map(|c| codes.binary_search(c).expect("code present"))
        .collect();
    Ok(VoxelCloud {
        depth,
        coords: codes.iter().map(|&c| morton_decode(c)).collect(),
        point_map,
        frame: Some(frame),
    })
}
