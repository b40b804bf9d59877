//! Analytic Phong scenes with a ring camera rig and ground-truth renders.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, SlfError};
use crate::mapping::{CameraModel, Image, PointCloud, RigCamera};
use crate::renderer::{render_with, RenderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Unit sphere at the origin.
    Sphere,
    /// Radius 1, height 2, centered at the origin, lateral surface only.
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Material {
    pub kd: f64,
    pub ks: f64,
    pub shininess: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            kd: 0.8,
            ks: 0.5,
            shininess: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Light {
    /// Direction toward the light; normalized on use.
    pub direction: [f64; 3],
    pub intensity: [f64; 3],
}

/// Cameras on horizontal circles around the origin, all aimed at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigLayout {
    pub circles: usize,
    pub per_circle: usize,
    /// Distance from the origin to every camera center.
    pub distance: f64,
    /// Circle heights span `[-elevation, elevation] * distance`.
    pub elevation: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for RigLayout {
    fn default() -> Self {
        Self {
            circles: 11,
            per_circle: 50,
            distance: 4.0,
            elevation: 0.8,
            width: 256,
            height: 256,
        }
    }
}

impl RigLayout {
    pub fn len(&self) -> usize {
        self.circles * self.per_circle
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Camera centers, circle after circle, counterclockwise within a circle.
    pub fn centers(&self) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.circles {
            let t = if self.circles == 1 {
                0.0
            } else {
                2.0 * j as f64 / (self.circles - 1) as f64 - 1.0
            };
            let z = t * self.elevation * self.distance;
            let ring = (self.distance * self.distance - z * z).sqrt();
            for k in 0..self.per_circle {
                let phi = 2.0 * PI * k as f64 / self.per_circle as f64;
                out.push(Vector3::new(ring * phi.cos(), ring * phi.sin(), z));
            }
        }
        out
    }

    /// Cameras whose focal length fits a sphere of `radius` into 70% of the width.
    pub fn cameras(&self, radius: f64) -> Result<Vec<RigCamera>> {
        let focal = focal_for(radius, self.distance, self.width)?;
        self.centers()
            .into_iter()
            .enumerate()
            .map(|(id, eye)| {
                let model = CameraModel::look_at(eye, Vector3::zeros(), Vector3::z(), focal, self.width, self.height)?;
                Ok(RigCamera { id: id as u32, model })
            })
            .collect()
    }
}

impl RigLayout {
    /// `count` cameras at the rig distance, azimuth uniform and height uniform
    /// within the rig's elevation span. Ids continue after the rig's own.
    pub fn novel_cameras(&self, radius: f64, count: usize, seed: u64) -> Result<Vec<RigCamera>> {
        let focal = focal_for(radius, self.distance, self.width)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zmax = self.elevation * self.distance;
        (0..count)
            .map(|k| {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let z = if zmax > 0.0 { rng.gen_range(-zmax..=zmax) } else { 0.0 };
                let ring = (self.distance * self.distance - z * z).sqrt();
                let eye = Vector3::new(ring * phi.cos(), ring * phi.sin(), z);
                let model = CameraModel::look_at(eye, Vector3::zeros(), Vector3::z(), focal, self.width, self.height)?;
                Ok(RigCamera {
                    id: (self.len() + k) as u32,
                    model,
                })
            })
            .collect()
    }
}

/// Focal length that maps an object of angular radius `asin(radius / distance)` to `0.35 * width` pixels.
pub fn focal_for(radius: f64, distance: f64, width: u32) -> Result<f64> {
    if !(distance > radius && radius > 0.0) {
        return Err(SlfError::invalid("cameras must sit outside the object"));
    }
    Ok(0.35 * width as f64 / (radius / distance).asin().tan())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticScene {
    pub shape: Shape,
    pub points: usize,
    pub material: Material,
    pub lights: Vec<Light>,
    pub rig: RigLayout,
    pub splat_radius: u32,
}

impl Default for SyntheticScene {
    fn default() -> Self {
        Self {
            shape: Shape::Sphere,
            points: 2000,
            material: Material::default(),
            lights: vec![
                Light {
                    direction: [1.0, 0.5, 0.8],
                    intensity: [0.9, 0.8, 0.7],
                },
                Light {
                    direction: [-1.0, -0.6, 0.3],
                    intensity: [0.3, 0.35, 0.45],
                },
            ],
            rig: RigLayout::default(),
            splat_radius: 1,
        }
    }
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        let m = &self.material;
        if !(m.kd >= 0.0) {
            return Err(SlfError::config("material.kd", "must be >= 0"));
        }
        if !(m.ks >= 0.0) {
            return Err(SlfError::config("material.ks", "must be >= 0"));
        }
        if !(m.shininess >= 0.0) {
            return Err(SlfError::config("material.shininess", "must be >= 0"));
        }
        if self.points == 0 {
            return Err(SlfError::config("points", "must be >= 1"));
        }
        for (i, l) in self.lights.iter().enumerate() {
            let d = Vector3::from(l.direction);
            if !(d.norm() > 0.0) || d.iter().any(|v| !v.is_finite()) {
                return Err(SlfError::config(format!("lights[{i}].direction"), "must be a nonzero vector"));
            }
            if l.intensity.iter().any(|v| !(*v >= 0.0)) {
                return Err(SlfError::config(format!("lights[{i}].intensity"), "must be >= 0"));
            }
        }
        let r = &self.rig;
        if r.circles == 0 || r.per_circle == 0 {
            return Err(SlfError::config("rig", "needs at least one circle and one camera per circle"));
        }
        if !(r.distance > self.bounding_radius()) {
            return Err(SlfError::config("rig.distance", "cameras must sit outside the object"));
        }
        if !(0.0..1.0).contains(&r.elevation) {
            return Err(SlfError::config("rig.elevation", "must be in [0, 1)"));
        }
        if r.width == 0 || r.height == 0 {
            return Err(SlfError::config("rig.width", "image size must be at least 1x1"));
        }
        Ok(())
    }

    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            Shape::Sphere => 1.0,
            Shape::Cylinder => 2f64.sqrt(),
        }
    }

    pub fn oracle(&self) -> PhongOracle {
        PhongOracle {
            material: self.material,
            lights: self
                .lights
                .iter()
                .map(|l| (Vector3::from(l.direction).normalize(), l.intensity))
                .collect(),
        }
    }
}

/// Closed-form Phong color, scaled to `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhongOracle {
    pub material: Material,
    /// Unit direction toward each light with its RGB intensity.
    pub lights: Vec<(Vector3<f64>, [f64; 3])>,
}

pub fn reflect(l: &Vector3<f64>, n: &Vector3<f64>) -> Vector3<f64> {
    2.0 * n.dot(l) * n - l
}

impl PhongOracle {
    /// Color at a surface with unit normal `n` seen from unit direction `w`.
    pub fn color(&self, n: &Vector3<f64>, w: &Vector3<f64>) -> [f64; 3] {
        let m = &self.material;
        let mut c = [0.0; 3];
        for (l, intensity) in &self.lights {
            let nl = n.dot(l);
            if nl <= 0.0 {
                continue;
            }
            let spec = reflect(l, n).dot(w).max(0.0).powf(m.shininess);
            let s = m.kd * nl + m.ks * spec;
            for ch in 0..3 {
                c[ch] += s * intensity[ch];
            }
        }
        c.map(|v| (255.0 * v).clamp(0.0, 255.0))
    }
}

/// A generated scene: cloud, rig, ground-truth images and the color oracle.
#[derive(Debug, Clone)]
pub struct SceneData {
    pub cloud: PointCloud,
    pub cameras: Vec<RigCamera>,
    pub images: Vec<Image>,
    pub oracle: PhongOracle,
    pub render: RenderConfig,
}

impl SceneData {
    /// Ground-truth render of the oracle from any camera.
    pub fn ground_truth(&self, cam: &CameraModel, cfg: &RenderConfig) -> Result<crate::renderer::Rendered> {
        ground_truth(&self.cloud, &self.oracle, cam, cfg)
    }
}

pub fn ground_truth(
    cloud: &PointCloud,
    oracle: &PhongOracle,
    cam: &CameraModel,
    cfg: &RenderConfig,
) -> Result<crate::renderer::Rendered> {
    let normals = cloud.normals()?;
    render_with(&cloud.positions, cam, cfg, |i, w| oracle.color(&normals[i], w))
}

/// Points on a Fibonacci lattice with outward normals.
pub fn fibonacci_sphere(n: usize) -> PointCloud {
    let golden = PI * (3.0 - 5f64.sqrt());
    let (pos, nor): (Vec<_>, Vec<_>) = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            let p = Vector3::new(r * a.cos(), r * a.sin(), z);
            (p, p)
        })
        .unzip();
    PointCloud {
        positions: pos,
        normals: Some(nor),
    }
}

/// A regular grid on the lateral surface with about `n` points.
pub fn cylinder_grid(n: usize) -> PointCloud {
    let spacing = (4.0 * PI / n as f64).sqrt();
    let cols = ((2.0 * PI / spacing).round() as usize).max(3);
    let rows = ((n as f64 / cols as f64).round() as usize).max(1);
    let mut positions = Vec::with_capacity(rows * cols);
    let mut normals = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let z = -1.0 + 2.0 * (r as f64 + 0.5) / rows as f64;
        for c in 0..cols {
            let a = 2.0 * PI * (c as f64 + 0.5) / cols as f64;
            positions.push(Vector3::new(a.cos(), a.sin(), z));
            normals.push(Vector3::new(a.cos(), a.sin(), 0.0));
        }
    }
    PointCloud {
        positions,
        normals: Some(normals),
    }
}

pub fn synth_scene(spec: &SyntheticScene) -> Result<SceneData> {
    spec.validate()?;
    let cloud = match spec.shape {
        Shape::Sphere => fibonacci_sphere(spec.points),
        Shape::Cylinder => cylinder_grid(spec.points),
    };
    let cameras = spec.rig.cameras(spec.bounding_radius())?;
    let oracle = spec.oracle();
    let render = RenderConfig {
        width: spec.rig.width,
        height: spec.rig.height,
        splat_radius: spec.splat_radius,
        background: [0.0; 3],
    };
    let images = cameras
        .par_iter()
        .map(|c| ground_truth(&cloud, &oracle, &c.model, &render).map(|r| r.image))
        .collect::<Result<_>>()?;
    Ok(SceneData {
        cloud,
        cameras,
        images,
        oracle,
        render,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambert(direction: [f64; 3]) -> PhongOracle {
        SyntheticScene {
            material: Material {
                kd: 0.8,
                ks: 0.0,
                shininess: 1.0,
            },
            lights: vec![Light {
                direction,
                intensity: [1.0, 0.5, 0.25],
            }],
            ..Default::default()
        }
        .oracle()
    }

    #[test]
    fn lambertian_light_along_normal() {
        let o = lambert([0.0, 0.0, 1.0]);
        let n = Vector3::z();
        for w in [Vector3::z(), Vector3::new(0.6, 0.0, 0.8), Vector3::new(0.0, -0.8, 0.6)] {
            let c = o.color(&n, &w);
            assert!((c[0] - 0.8 * 255.0).abs() < 1e-9);
            assert!((c[1] - 0.4 * 255.0).abs() < 1e-9);
            assert!((c[2] - 0.2 * 255.0).abs() < 1e-9);
        }
    }

    #[test]
    fn light_behind_is_dark() {
        let o = lambert([0.0, 0.0, -1.0]);
        assert_eq!(o.color(&Vector3::z(), &Vector3::z()), [0.0; 3]);
    }

    #[test]
    fn specular_peak_at_mirror_direction() {
        let o = SyntheticScene {
            lights: vec![Light {
                direction: [0.3, 0.1, 1.0],
                intensity: [1.0; 3],
            }],
            material: Material {
                kd: 0.1,
                ks: 0.5,
                shininess: 30.0,
            },
            ..Default::default()
        }
        .oracle();
        let n = Vector3::new(0.2, -0.1, 1.0).normalize();
        let r = reflect(&o.lights[0].0, &n);
        let mut best = (f64::MIN, Vector3::zeros());
        for i in 0..200 {
            for j in 0..100 {
                let (a, b) = (2.0 * PI * i as f64 / 200.0, PI * (j as f64 + 0.5) / 100.0);
                let w = Vector3::new(b.sin() * a.cos(), b.sin() * a.sin(), b.cos());
                let c = o.color(&n, &w)[0];
                if c > best.0 {
                    best = (c, w);
                }
            }
        }
        assert!(best.1.dot(&r) > 0.999);
    }

    #[test]
    fn lattices() {
        let s = fibonacci_sphere(500);
        assert_eq!(s.len(), 500);
        s.validate().unwrap();
        let c = cylinder_grid(2000);
        c.validate().unwrap();
        assert!((c.len() as f64 - 2000.0).abs() < 100.0);
    }

    #[test]
    fn rig_geometry() {
        let rig = RigLayout::default();
        let cams = rig.cameras(1.0).unwrap();
        assert_eq!(cams.len(), 550);
        for c in &cams {
            assert!((c.model.center().norm() - 4.0).abs() < 1e-9);
            let p = c.model.project(&Vector3::zeros());
            assert!((p.u - 128.0).abs() < 1e-9 && (p.v - 128.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut s = SyntheticScene::default();
        s.material.kd = -1.0;
        match s.validate() {
            Err(SlfError::Config { field, .. }) => assert_eq!(field, "material.kd"),
            other => panic!("{other:?}"),
        }
    }
}
