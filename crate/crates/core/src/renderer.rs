//! View-map reconstruction and square-splat point rendering.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::basis::{Basis, DirectionParam};
use crate::error::{Result, SlfError};
use crate::fitting::SlfCoefficients;
use crate::mapping::camera::CameraModel;
use crate::mapping::{direction_from_unit, unit_direction, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub splat_radius: u32,
    pub background: [f64; 3],
}

impl RenderConfig {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            splat_radius: 1,
            background: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(SlfError::invalid("render size must be at least 1x1"));
        }
        Ok(())
    }
}

/// Unclamped color of one point's view map in direction `d`.
///
/// `alpha` holds the coefficients channel after channel.
pub fn reconstruct_raw(alpha: &[f64], basis: &Basis, d: DirectionParam) -> Result<Vec<f64>> {
    let n = basis.count();
    if alpha.is_empty() || alpha.len() % n != 0 {
        return Err(SlfError::invalid(format!(
            "{} coefficients do not split into channels of {n}",
            alpha.len()
        )));
    }
    let mut g = vec![0.0; n];
    basis.eval_row(d, &mut g);
    Ok(alpha
        .chunks(n)
        .map(|a| a.iter().zip(&g).map(|(x, y)| x * y).sum())
        .collect())
}

/// RGB color clamped to `[0, 255]`.
pub fn reconstruct_color(alpha: &[f64], basis: &Basis, d: DirectionParam) -> Result<[f64; 3]> {
    if alpha.len() != 3 * basis.count() {
        return Err(SlfError::invalid(format!(
            "expected {} coefficients, got {}",
            3 * basis.count(),
            alpha.len()
        )));
    }
    let raw = reconstruct_raw(alpha, basis, d)?;
    Ok([raw[0].clamp(0.0, 255.0), raw[1].clamp(0.0, 255.0), raw[2].clamp(0.0, 255.0)])
}

/// A rendered frame plus, for every pixel, the point that won its z-test.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: Image,
    pub winners: Vec<Option<usize>>,
}

impl Rendered {
    pub fn winner(&self, x: usize, y: usize) -> Option<usize> {
        self.winners[y * self.image.width + x]
    }

    pub fn covered(&self) -> usize {
        self.winners.iter().filter(|w| w.is_some()).count()
    }
}

/// Splats every point with a color chosen from its unit direction toward the camera.
///
/// Pixel centers sit on integer coordinates. Nearer points win; equal depths
/// go to the lower point index.
pub fn render_with<F>(positions: &[Vector3<f64>], cam: &CameraModel, cfg: &RenderConfig, color: F) -> Result<Rendered>
where
    F: Fn(usize, &Vector3<f64>) -> [f64; 3] + Sync,
{
    cfg.validate()?;
    let (w, h) = (cfg.width as i64, cfg.height as i64);
    let center = cam.center();
    let splats: Vec<Option<(i64, i64, f64, [f64; 3])>> = positions
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let proj = cam.project(p);
            if proj.behind_camera() || !proj.u.is_finite() || !proj.v.is_finite() {
                return None;
            }
            let (x, y) = ((proj.u + 0.5).floor(), (proj.v + 0.5).floor());
            if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                return None;
            }
            let dir = unit_direction(p, &center).ok()?;
            Some((x as i64, y as i64, proj.depth, color(i, &dir)))
        })
        .collect();

    let mut image = Image::new(cfg.width as usize, cfg.height as usize, cfg.background);
    let mut depth = vec![f64::INFINITY; (w * h) as usize];
    let mut winners = vec![None; (w * h) as usize];
    let r = cfg.splat_radius as i64;
    for (i, s) in splats.iter().enumerate() {
        let Some((cx, cy, z, c)) = *s else { continue };
        for y in (cy - r).max(0)..=(cy + r).min(h - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(w - 1) {
                let k = (y * w + x) as usize;
                // Points arrive in index order, so strict comparison keeps the lower index on ties.
                if z < depth[k] {
                    depth[k] = z;
                    winners[k] = Some(i);
                    image.set(x as usize, y as usize, c);
                }
            }
        }
    }
    Ok(Rendered { image, winners })
}

/// Renders reconstructed view maps; one coefficient vector per position.
pub fn render(
    positions: &[Vector3<f64>],
    coeffs: &SlfCoefficients,
    basis: &Basis,
    cam: &CameraModel,
    cfg: &RenderConfig,
) -> Result<Rendered> {
    if coeffs.points() != positions.len() {
        return Err(SlfError::invalid(format!(
            "{} coefficient vectors for {} points",
            coeffs.points(),
            positions.len()
        )));
    }
    if coeffs.count() != basis.count() || coeffs.channels() != 3 {
        return Err(SlfError::invalid("coefficients do not match the basis"));
    }
    render_with(positions, cam, cfg, |i, dir| {
        reconstruct_color(coeffs.point(i), basis, direction_from_unit(dir)).expect("length checked")
    })
}
