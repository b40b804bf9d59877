use nalgebra::{Matrix3, Vector3};

use crate::error::{Result, SlfError};

/// Pinhole camera: `p' = K [R | t] p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub intrinsics: Matrix3<f64>,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub width: u32,
    pub height: u32,
}

/// Result of projecting a world point into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl Projection {
    pub fn behind_camera(&self) -> bool {
        self.depth <= 0.0
    }

    /// Integer pixel cell, if the projection lands in `[0, w) x [0, h)` in front of the camera.
    pub fn pixel(&self, width: u32, height: u32) -> Option<(usize, usize)> {
        if self.behind_camera() || !self.u.is_finite() || !self.v.is_finite() {
            return None;
        }
        if self.u < 0.0 || self.v < 0.0 || self.u >= width as f64 || self.v >= height as f64 {
            return None;
        }
        Some((self.u.floor() as usize, self.v.floor() as usize))
    }
}

impl CameraModel {
    pub fn new(
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let cam = Self {
            intrinsics,
            rotation,
            translation,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 {
            return Err(SlfError::invalid("camera resolution must be at least 1x1"));
        }
        if !(self.intrinsics[(0, 0)] > 0.0 && self.intrinsics[(1, 1)] > 0.0) {
            return Err(SlfError::invalid("focal lengths must be positive"));
        }
        let r = &self.rotation;
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(SlfError::invalid("rotation is not a proper orthonormal matrix"));
        }
        Ok(())
    }

    /// Simple intrinsics with square pixels, zero skew.
    pub fn intrinsics_from(focal: f64, cx: f64, cy: f64) -> Matrix3<f64> {
        Matrix3::new(focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0)
    }

    /// Camera at `eye` looking at `target`; image x right, y down, z forward.
    pub fn look_at(
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        focal: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| SlfError::invalid("eye and target coincide"))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-9)
            .or_else(|| forward.cross(&Vector3::x()).try_normalize(1e-9))
            .ok_or_else(|| SlfError::invalid("degenerate up vector"))?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let k = Self::intrinsics_from(focal, width as f64 / 2.0, height as f64 / 2.0);
        Self::new(k, rotation, -(rotation * eye), width, height)
    }

    /// Center of projection in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn project(&self, p: &Vector3<f64>) -> Projection {
        let q = self.to_camera(p);
        let h = self.intrinsics * q;
        Projection {
            u: h.x / h.z,
            v: h.y / h.z,
            depth: q.z,
        }
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }
}

pub fn project_point(cam: &CameraModel, p: &Vector3<f64>) -> Projection {
    cam.project(p)
}

/// A camera together with its identifier in a rig.
#[derive(Debug, Clone, PartialEq)]
pub struct RigCamera {
    pub id: u32,
    pub model: CameraModel,
}
