//! Mapping multi-view images onto a point cloud.
//!
//! For every point and every camera an observation is kept when the point
//! projects inside the image, wins the per-pixel depth test, and the camera
//! lies inside the validity cone around the point normal. Colors are fetched
//! with bilinear interpolation and stored with the equal-area direction
//! parameters of the camera center as seen from the point.

pub mod camera;
pub mod knn;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

pub use camera::{project_point, CameraModel, Projection, RigCamera};
pub use knn::KnnIndex;

use crate::basis::DirectionParam;
use crate::error::{Result, SlfError};

const UNIT_TOLERANCE: f64 = 1e-6;

/// Default validity cone, in degrees.
pub const DEFAULT_DELTA: f64 = 10.0;

/// Point positions with (optionally) unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vector3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vector3<f64>>, normals: Option<Vec<Vector3<f64>>>) -> Result<Self> {
        let cloud = Self { positions, normals };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(normals) = &self.normals {
            if normals.len() != self.positions.len() {
                return Err(SlfError::invalid(format!(
                    "{} normals for {} positions",
                    normals.len(),
                    self.positions.len()
                )));
            }
            if let Some(i) = normals
                .iter()
                .position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE)
            {
                return Err(SlfError::invalid(format!("normal {i} is not unit length")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn normals(&self) -> Result<&[Vector3<f64>]> {
        self.normals
            .as_deref()
            .ok_or_else(|| SlfError::invalid("point cloud has no normals"))
    }

    /// Axis-aligned bounding box `(min, max)`; `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.positions.first()?;
        Some(self.positions.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }

    pub fn diameter(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// Depth tolerance used by the occlusion test: `1e-4` of the scene diameter.
    pub fn default_depth_eps(&self) -> f64 {
        1e-4 * self.diameter()
    }
}

/// An RGB image with real-valued channels in `[0, 255]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&fill);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        let o = 3 * (y * self.width + x);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [f64; 3]) {
        let o = 3 * (y * self.width + x);
        self.data[o..o + 3].copy_from_slice(&c);
    }
}

/// One directional color sample of a point's view map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub direction: DirectionParam,
    pub color: [f64; 3],
    pub camera_id: u32,
}

/// Per-point lists of valid observations, each sorted by camera id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSet {
    pub per_point: Vec<Vec<Observation>>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.per_point.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_point.is_empty()
    }

    pub fn total(&self) -> usize {
        self.per_point.iter().map(Vec::len).sum()
    }
}

/// Z-buffer visibility at the camera's pixel resolution.
pub fn visibility_mask(cloud: &PointCloud, cam: &CameraModel, depth_eps: f64) -> Vec<bool> {
    let projections: Vec<Projection> = cloud.positions.iter().map(|p| cam.project(p)).collect();
    visibility_from_projections(&projections, cam.width, cam.height, depth_eps)
}

fn visibility_from_projections(
    projections: &[Projection],
    width: u32,
    height: u32,
    depth_eps: f64,
) -> Vec<bool> {
    let w = width as usize;
    let mut zbuf = vec![f64::INFINITY; w * height as usize];
    let cells: Vec<Option<usize>> = projections
        .iter()
        .map(|p| p.pixel(width, height).map(|(x, y)| y * w + x))
        .collect();
    for (p, cell) in projections.iter().zip(&cells) {
        if let Some(c) = cell {
            zbuf[*c] = zbuf[*c].min(p.depth);
        }
    }
    projections
        .iter()
        .zip(&cells)
        .map(|(p, cell)| cell.is_some_and(|c| p.depth <= zbuf[c] + depth_eps))
        .collect()
}

/// True iff `view_dir` lies within `90 - delta` degrees of `normal`.
pub fn cone_valid(normal: &Vector3<f64>, view_dir: &Vector3<f64>, delta: f64) -> Result<bool> {
    if !(0.0..90.0).contains(&delta) {
        return Err(SlfError::invalid(format!("cone angle {delta} outside [0, 90)")));
    }
    if (normal.norm() - 1.0).abs() > UNIT_TOLERANCE || (view_dir.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(SlfError::invalid("cone test needs unit vectors"));
    }
    Ok(normal.dot(view_dir) >= delta.to_radians().sin())
}

/// Bilinear blend of the four pixels enclosing `(u, v)`; pixel centers sit on integers.
pub fn sample_bilinear(image: &Image, u: f64, v: f64) -> Result<[f64; 3]> {
    let max_u = image.width as f64 - 1.0;
    let max_v = image.height as f64 - 1.0;
    if !(0.0..=max_u).contains(&u) || !(0.0..=max_v).contains(&v) {
        return Err(SlfError::OutOfBounds(format!(
            "({u}, {v}) outside [0, {max_u}] x [0, {max_v}]"
        )));
    }
    let x0 = u.floor() as usize;
    let y0 = v.floor() as usize;
    let x1 = (x0 + 1).min(image.width - 1);
    let y1 = (y0 + 1).min(image.height - 1);
    let fx = u - x0 as f64;
    let fy = v - y0 as f64;
    let (a, b, c, d) = (image.get(x0, y0), image.get(x1, y0), image.get(x0, y1), image.get(x1, y1));
    let mut out = [0.0; 3];
    for ch in 0..3 {
        let top = a[ch] * (1.0 - fx) + b[ch] * fx;
        let bottom = c[ch] * (1.0 - fx) + d[ch] * fx;
        out[ch] = top * (1.0 - fy) + bottom * fy;
    }
    Ok(out)
}

/// Unit direction from `p` toward `toward`.
pub fn unit_direction(p: &Vector3<f64>, toward: &Vector3<f64>) -> Result<Vector3<f64>> {
    (toward - p)
        .try_normalize(0.0)
        .filter(|w| w.iter().all(|c| c.is_finite()))
        .ok_or_else(|| SlfError::invalid("zero-length viewing direction"))
}

/// Equal-area parameters of a unit direction. At the poles theta is 0.
pub fn direction_from_unit(w: &Vector3<f64>) -> DirectionParam {
    let theta = if w.x == 0.0 && w.y == 0.0 {
        0.0
    } else {
        w.y.atan2(w.x)
    };
    DirectionParam {
        theta,
        gamma: w.z.clamp(-1.0, 1.0),
    }
}

pub fn direction_params(p: &Vector3<f64>, cam_center: &Vector3<f64>) -> Result<DirectionParam> {
    Ok(direction_from_unit(&unit_direction(p, cam_center)?))
}

/// Normals from the smallest eigenvector of each point's k-neighborhood
/// covariance (the point itself included), oriented away from the centroid.
pub fn estimate_normals(positions: &[Vector3<f64>], k: usize) -> Result<Vec<Vector3<f64>>> {
    if k < 3 {
        return Err(SlfError::invalid(format!("normal estimation needs k >= 3, got {k}")));
    }
    if positions.len() < k {
        return Err(SlfError::invalid(format!(
            "normal estimation needs at least {k} points, got {}",
            positions.len()
        )));
    }
    let index = KnnIndex::new(positions);
    let centroid = positions.iter().sum::<Vector3<f64>>() / positions.len() as f64;
    let normals = positions
        .par_iter()
        .map(|p| {
            let nbrs = index.nearest(p, k, None);
            let mean = nbrs.iter().map(|&j| positions[j]).sum::<Vector3<f64>>() / k as f64;
            let cov = nbrs.iter().fold(Matrix3::zeros(), |acc, &j| {
                let d = positions[j] - mean;
                acc + d * d.transpose()
            });
            let eig = SymmetricEigen::new(cov);
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("3 eigenvalues");
            let mut n: Vector3<f64> = eig.eigenvectors.column(imin).normalize();
            if n.dot(&(p - centroid)) < 0.0 {
                n = -n;
            }
            n
        })
        .collect();
    Ok(normals)
}

/// Collects every valid observation of every point.
pub fn build_observations(
    cloud: &PointCloud,
    cameras: &[RigCamera],
    images: &[Image],
    delta: f64,
    depth_eps: f64,
) -> Result<ObservationSet> {
    if cameras.len() != images.len() {
        return Err(SlfError::invalid(format!(
            "{} cameras but {} images",
            cameras.len(),
            images.len()
        )));
    }
    if !(0.0..90.0).contains(&delta) {
        return Err(SlfError::invalid(format!("cone angle {delta} outside [0, 90)")));
    }
    let normals = cloud.normals()?;
    for (cam, img) in cameras.iter().zip(images) {
        if img.width != cam.model.width as usize || img.height != cam.model.height as usize {
            return Err(SlfError::invalid(format!(
                "camera {} is {}x{} but its image is {}x{}",
                cam.id, cam.model.width, cam.model.height, img.width, img.height
            )));
        }
    }
    let min_dot = delta.to_radians().sin();

    let per_camera: Vec<Vec<(usize, Observation)>> = cameras
        .par_iter()
        .zip(images.par_iter())
        .map(|(cam, img)| {
            let projections: Vec<Projection> =
                cloud.positions.iter().map(|p| cam.model.project(p)).collect();
            let visible =
                visibility_from_projections(&projections, cam.model.width, cam.model.height, depth_eps);
            let center = cam.model.center();
            let mut out = Vec::new();
            for (i, proj) in projections.iter().enumerate() {
                if !visible[i] {
                    continue;
                }
                let Ok(w) = unit_direction(&cloud.positions[i], &center) else {
                    continue;
                };
                if normals[i].dot(&w) < min_dot {
                    continue;
                }
                // Projections in the last half pixel have no right/bottom neighbor.
                let Ok(color) = sample_bilinear(img, proj.u, proj.v) else {
                    continue;
                };
                out.push((
                    i,
                    Observation {
                        direction: direction_from_unit(&w),
                        color,
                        camera_id: cam.id,
                    },
                ));
            }
            out
        })
        .collect();

    let mut per_point = vec![Vec::new(); cloud.len()];
    for list in per_camera {
        for (i, obs) in list {
            per_point[i].push(obs);
        }
    }
    for list in &mut per_point {
        list.sort_by_key(|o| o.camera_id);
    }
    Ok(ObservationSet { per_point })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cam_at_origin(w: u32, h: u32) -> CameraModel {
        let k = CameraModel::intrinsics_from(10.0, w as f64 / 2.0, h as f64 / 2.0);
        CameraModel::new(k, Matrix3::identity(), Vector3::zeros(), w, h).unwrap()
    }

    #[test]
    fn nearest_point_wins_the_cell() {
        let cloud = PointCloud::new(
            vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 2.0)],
            None,
        )
        .unwrap();
        assert_eq!(visibility_mask(&cloud, &cam_at_origin(8, 8), 0.0), vec![true, false]);
        // A tolerance wider than the gap keeps both.
        assert_eq!(visibility_mask(&cloud, &cam_at_origin(8, 8), 1.5), vec![true, true]);
    }

    #[test]
    fn out_of_view_is_invisible() {
        let cam = cam_at_origin(8, 8);
        // u = 10 * x / z + 4 = 8 + 3 for x = 0.7.
        let cloud = PointCloud::new(
            vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.7, 0.0, 1.0), Vector3::new(0.0, 0.0, -1.0)],
            None,
        )
        .unwrap();
        assert_eq!(visibility_mask(&cloud, &cam, 0.0), vec![true, false, false]);
    }

    #[test]
    fn cone_threshold_at_eighty_degrees() {
        let n = Vector3::z();
        assert!(cone_valid(&n, &n, 10.0).unwrap());
        assert!(!cone_valid(&n, &Vector3::x(), 10.0).unwrap());
        let at = |deg: f64| Vector3::new(deg.to_radians().sin(), 0.0, deg.to_radians().cos());
        assert!(!cone_valid(&n, &at(85.0), 10.0).unwrap());
        assert!(cone_valid(&n, &at(75.0), 10.0).unwrap());
        assert!(cone_valid(&n, &Vector3::new(2.0, 0.0, 0.0), 10.0).is_err());
        assert!(cone_valid(&n, &n, 90.0).is_err());
    }

    #[test]
    fn bilinear_sampling() {
        let mut img = Image::new(2, 2, [0.0; 3]);
        img.set(1, 0, [100.0, 50.0, 10.0]);
        img.set(1, 1, [100.0, 50.0, 10.0]);
        assert_eq!(sample_bilinear(&img, 1.0, 0.0).unwrap(), [100.0, 50.0, 10.0]);
        assert_eq!(sample_bilinear(&img, 0.5, 0.0).unwrap(), [50.0, 25.0, 5.0]);
        assert_eq!(sample_bilinear(&img, 1.0, 1.0).unwrap(), [100.0, 50.0, 10.0]);
        assert!(matches!(sample_bilinear(&img, 1.5, 0.0), Err(SlfError::OutOfBounds(_))));
        assert!(sample_bilinear(&img, -0.1, 0.0).is_err());
    }

    #[test]
    fn direction_parameterization() {
        let p = Vector3::zeros();
        let d = direction_params(&p, &Vector3::new(3.0, 0.0, 0.0)).unwrap();
        assert_eq!((d.theta, d.gamma), (0.0, 0.0));
        let d = direction_params(&p, &Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((d.theta, d.gamma), (0.0, 1.0));
        let d = direction_params(&p, &Vector3::new(0.0, 5.0, 0.0)).unwrap();
        assert!((d.theta - PI / 2.0).abs() < 1e-15 && d.gamma == 0.0);
        assert!(direction_params(&p, &p).is_err());
    }

    #[test]
    fn plane_normals() {
        let pts: Vec<_> = (0..49)
            .map(|i| Vector3::new((i % 7) as f64 * 0.1, (i / 7) as f64 * 0.13, 0.0))
            .collect();
        for n in estimate_normals(&pts, 8).unwrap() {
            assert!((n.z.abs() - 1.0).abs() < 1e-9, "{n:?}");
        }
        assert!(estimate_normals(&pts, 2).is_err());
        assert!(estimate_normals(&pts[..4], 5).is_err());
    }

    #[test]
    fn single_camera_single_point() {
        let cloud = PointCloud::new(vec![Vector3::new(0.0, 0.0, 2.0)], Some(vec![-Vector3::z()])).unwrap();
        let cam = RigCamera { id: 3, model: cam_at_origin(9, 9) };
        let img = Image::new(9, 9, [10.0, 20.0, 30.0]);
        let obs = build_observations(&cloud, &[cam.clone()], &[img.clone()], 10.0, 0.0).unwrap();
        assert_eq!(obs.per_point[0].len(), 1);
        let o = obs.per_point[0][0];
        assert_eq!(o.camera_id, 3);
        assert_eq!(o.color, [10.0, 20.0, 30.0]);
        assert_eq!(o.direction.gamma, -1.0);
        // Facing away: the cone rejects it.
        let away = PointCloud::new(vec![Vector3::new(0.0, 0.0, 2.0)], Some(vec![Vector3::z()])).unwrap();
        assert_eq!(build_observations(&away, &[cam.clone()], &[img.clone()], 10.0, 0.0).unwrap().total(), 0);
        assert!(build_observations(&cloud, &[cam], &[], 10.0, 0.0).is_err());
    }
}
