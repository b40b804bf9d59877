//! Point-wise PSNR, camera splits, rate-distortion sweeps and synthetic scenes.

pub mod scene;
pub mod split;

pub use scene::{
    cylinder_grid, fibonacci_sphere, ground_truth, synth_scene, Light, Material, PhongOracle, RigLayout, SceneData,
    Shape, SyntheticScene,
};
pub use split::{split_cameras, split_proportional, Split};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::basis::{Basis, BasisSpec};
use crate::codec::{decode_stream, encode_stream, DEFAULT_DEPTH};
use crate::error::{Result, SlfError};
use crate::fitting::{FitConfig, SlfCoefficients, SlfSolver};
use crate::mapping::{build_observations, Image, ObservationSet, PointCloud, RigCamera, DEFAULT_DELTA};
use crate::renderer::reconstruct_color;

/// Evaluation cones, in degrees.
pub const DELTA_PRIME_GRID: [f64; 4] = [0.0, 10.0, 20.0, 30.0];
/// Reported for an exact reconstruction.
pub const PSNR_CAP: f64 = 100.0;

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrReport {
    pub psnr: f64,
    pub mse: f64,
    /// Number of (point, camera, channel) samples.
    pub samples: usize,
}

/// PSNR of reconstructed view maps against observed colors.
pub fn observation_psnr(coeffs: &SlfCoefficients, basis: &Basis, obs: &ObservationSet) -> Result<PsnrReport> {
    if coeffs.points() != obs.len() {
        return Err(SlfError::invalid(format!(
            "{} coefficient vectors for {} points",
            coeffs.points(),
            obs.len()
        )));
    }
    let (sum, count) = obs
        .per_point
        .par_iter()
        .enumerate()
        .map(|(p, list)| {
            let mut sum = 0.0;
            for o in list {
                let c = reconstruct_color(coeffs.point(p), basis, o.direction)?;
                sum += c.iter().zip(&o.color).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            Ok::<_, SlfError>((sum, 3 * list.len()))
        })
        .try_reduce(|| (0.0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    if count == 0 {
        return Err(SlfError::invalid("no valid (point, camera) pairs to evaluate"));
    }
    let mse = sum / count as f64;
    Ok(PsnrReport {
        psnr: psnr_from_mse(mse),
        mse,
        samples: count,
    })
}

/// PSNR over every valid (point, evaluation camera) pair under cone `delta_prime`.
pub fn slf_psnr(
    coeffs: &SlfCoefficients,
    basis: &Basis,
    cloud: &PointCloud,
    cameras: &[RigCamera],
    images: &[Image],
    delta_prime: f64,
) -> Result<PsnrReport> {
    let obs = build_observations(cloud, cameras, images, delta_prime, cloud.default_depth_eps())?;
    observation_psnr(coeffs, basis, &obs)
}

/// Pixel PSNR between two images, optionally restricted to a mask.
pub fn image_psnr(a: &Image, b: &Image, mask: Option<&[bool]>) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(SlfError::invalid("image sizes differ"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 0..a.width * a.height {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        sum += (0..3).map(|c| (a.data[3 * k + c] - b.data[3 * k + c]).powi(2)).sum::<f64>();
        count += 3;
    }
    if count == 0 {
        return Err(SlfError::invalid("no pixels to compare"));
    }
    Ok(psnr_from_mse(sum / count as f64))
}

/// Cameras and their images, selected by index.
pub fn select_views(cameras: &[RigCamera], images: &[Image], indices: &[usize]) -> (Vec<RigCamera>, Vec<Image>) {
    indices.iter().map(|&i| (cameras[i].clone(), images[i].clone())).unzip()
}

/// Parameters of one fit, encode, decode and evaluate run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub order: u32,
    pub scale_theta: u32,
    pub scale_gamma: u32,
    pub lambda: f64,
    pub beta: f64,
    pub iters: usize,
    pub neighbors: usize,
    pub delta: f64,
    pub q: f64,
    pub depth: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let spec = BasisSpec::default();
        let fit = FitConfig::default();
        Self {
            order: spec.order,
            scale_theta: spec.scale_theta,
            scale_gamma: spec.scale_gamma,
            lambda: fit.lambda,
            beta: fit.beta,
            iters: fit.max_iters,
            neighbors: fit.neighbor_count,
            delta: DEFAULT_DELTA,
            q: 8.0,
            depth: DEFAULT_DEPTH,
        }
    }
}

impl PipelineConfig {
    pub fn spec(&self) -> Result<BasisSpec> {
        BasisSpec::with_scales(self.order, self.scale_theta, self.scale_gamma)
    }

    pub fn fit(&self) -> FitConfig {
        FitConfig {
            lambda: self.lambda,
            beta: self.beta,
            max_iters: self.iters,
            neighbor_count: self.neighbors,
            ..FitConfig::default()
        }
    }
}

/// Builds observations from the input views and fits every point.
pub fn fit_views(
    cloud: &PointCloud,
    cameras: &[RigCamera],
    images: &[Image],
    spec: BasisSpec,
    fit: FitConfig,
    delta: f64,
) -> Result<SlfCoefficients> {
    let obs = build_observations(cloud, cameras, images, delta, cloud.default_depth_eps())?;
    Ok(SlfSolver::new(&obs, cloud, spec, fit)?.run().coefficients)
}

/// Evaluation observations for every cone of [`DELTA_PRIME_GRID`], built once.
pub struct Evaluator {
    sets: Vec<ObservationSet>,
}

impl Evaluator {
    pub fn new(cloud: &PointCloud, cameras: &[RigCamera], images: &[Image]) -> Result<Self> {
        let eps = cloud.default_depth_eps();
        let sets = DELTA_PRIME_GRID
            .iter()
            .map(|&d| build_observations(cloud, cameras, images, d, eps))
            .collect::<Result<_>>()?;
        Ok(Self { sets })
    }

    pub fn psnr(&self, coeffs: &SlfCoefficients, basis: &Basis) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, set) in out.iter_mut().zip(&self.sets) {
            *o = observation_psnr(coeffs, basis, set)?.psnr;
        }
        Ok(out)
    }
}

/// Coded size and quality of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub total_bits: usize,
    pub coefficient_bits: usize,
    /// Decoded coefficients, one vector per input point.
    pub decoded: SlfCoefficients,
}

/// Encodes, decodes and maps the decoded voxels back onto the points.
pub fn code_coefficients(
    cloud: &PointCloud,
    coeffs: &SlfCoefficients,
    spec: BasisSpec,
    q: f64,
    depth: u32,
) -> Result<RdPoint> {
    let enc = encode_stream(cloud, coeffs, spec, q, depth)?;
    let (_, voxel_coeffs) = decode_stream(&enc.stream)?;
    Ok(RdPoint {
        total_bits: enc.stream.total_bits(),
        coefficient_bits: enc.stream.coefficient_bits(),
        decoded: enc.voxels.scatter_to_points(&voxel_coeffs),
    })
}

/// The parameter varied by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Q(Vec<f64>),
    N(Vec<usize>),
    Depth(Vec<u32>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Q(v) => v.len(),
            Sweep::N(v) => v.len(),
            Sweep::Depth(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdRow {
    pub setting: String,
    pub total_bits: usize,
    /// One value per entry of [`DELTA_PRIME_GRID`].
    pub psnr: [f64; 4],
}

/// Views used for fitting and for scoring.
pub struct SweepInputs<'a> {
    pub cloud: &'a PointCloud,
    pub input_cameras: &'a [RigCamera],
    pub input_images: &'a [Image],
    pub eval_cameras: &'a [RigCamera],
    pub eval_images: &'a [Image],
}

pub fn rd_sweep(inputs: &SweepInputs, cfg: &PipelineConfig, sweep: &Sweep) -> Result<Vec<RdRow>> {
    if sweep.is_empty() {
        return Err(SlfError::invalid("empty sweep"));
    }
    let evaluator = Evaluator::new(inputs.cloud, inputs.eval_cameras, inputs.eval_images)?;
    let fit = |spec: BasisSpec| {
        fit_views(
            inputs.cloud,
            inputs.input_cameras,
            inputs.input_images,
            spec,
            cfg.fit(),
            cfg.delta,
        )
    };
    let row = |setting: String, coeffs: &SlfCoefficients, spec: BasisSpec, q: f64, depth: u32| -> Result<RdRow> {
        let coded = code_coefficients(inputs.cloud, coeffs, spec, q, depth)?;
        Ok(RdRow {
            psnr: evaluator.psnr(&coded.decoded, &spec.compile())?,
            total_bits: coded.total_bits,
            setting,
        })
    };
    let with_ctx = |what: &str, v: &dyn std::fmt::Display, r: Result<RdRow>| r.map_err(|e| e.context(format!("{what}={v}")));
    match sweep {
        Sweep::Q(qs) => {
            let spec = cfg.spec()?;
            let coeffs = fit(spec)?;
            qs.iter()
                .map(|&q| with_ctx("q", &q, row(q.to_string(), &coeffs, spec, q, cfg.depth)))
                .collect()
        }
        Sweep::Depth(ds) => {
            let spec = cfg.spec()?;
            let coeffs = fit(spec)?;
            ds.iter()
                .map(|&d| with_ctx("depth", &d, row(d.to_string(), &coeffs, spec, cfg.q, d)))
                .collect()
        }
        Sweep::N(ns) => ns
            .iter()
            .map(|&n| {
                let r = BasisSpec::from_count(cfg.order, n)
                    .and_then(|spec| row(n.to_string(), &fit(spec)?, spec, cfg.q, cfg.depth));
                with_ctx("n", &n, r)
            })
            .collect(),
    }
}

pub const CSV_HEADER: &str = "setting,total_bits,psnr_d0,psnr_d10,psnr_d20,psnr_d30";

pub fn rows_to_csv(rows: &[RdRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.setting, r.total_bits);
        for p in r.psnr {
            let _ = write!(out, ",{p:.4}");
        }
        out.push('\n');
    }
    out
}
