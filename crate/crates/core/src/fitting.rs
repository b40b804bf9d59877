//! Per-point view-map fitting.
//!
//! Each point solves `min ||c - G a||^2 + lambda ||a||^2 + beta ||a - a_bar||^2`
//! where `a_bar` is the mean coefficient vector of its nearest neighbors.
//! The first pass has no neighbor information and uses `beta = 0`; later
//! passes are Jacobi sweeps, reading neighbors only from the previous pass.
//!
//! With fewer observations than basis functions the normal matrix is rank
//! deficient, so the solver factors the small `M x M` system
//! `G G^T + mu I` instead and maps back through `G^T`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::basis::{Basis, BasisSpec, DirectionParam};
use crate::error::{Result, SlfError};
use crate::mapping::{KnnIndex, ObservationSet, PointCloud};

pub const CHANNELS: usize = 3;

/// Coefficient vectors for every point and color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SlfCoefficients {
    count: usize,
    channels: usize,
    data: Vec<f64>,
}

impl SlfCoefficients {
    pub fn zeros(points: usize, channels: usize, count: usize) -> Self {
        Self {
            count,
            channels,
            data: vec![0.0; points * channels * count],
        }
    }

    pub fn from_vec(points: usize, channels: usize, count: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != points * channels * count {
            return Err(SlfError::invalid(format!(
                "{} values for {points} points x {channels} channels x {count} coefficients",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(SlfError::invalid("coefficients must be finite"));
        }
        Ok(Self {
            count,
            channels,
            data,
        })
    }

    /// Basis count `N`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn points(&self) -> usize {
        if self.count * self.channels == 0 {
            0
        } else {
            self.data.len() / (self.count * self.channels)
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// All channels of one point, channel-major.
    pub fn point(&self, p: usize) -> &[f64] {
        let stride = self.count * self.channels;
        &self.data[p * stride..(p + 1) * stride]
    }

    pub fn point_mut(&mut self, p: usize) -> &mut [f64] {
        let stride = self.count * self.channels;
        &mut self.data[p * stride..(p + 1) * stride]
    }

    pub fn get(&self, p: usize, channel: usize) -> &[f64] {
        let o = (p * self.channels + channel) * self.count;
        &self.data[o..o + self.count]
    }

    pub fn get_mut(&mut self, p: usize, channel: usize) -> &mut [f64] {
        let o = (p * self.channels + channel) * self.count;
        &mut self.data[o..o + self.count]
    }

    /// The values of basis member `i` of `channel` across all points.
    pub fn plane(&self, channel: usize, i: usize) -> Vec<f64> {
        (0..self.points()).map(|p| self.get(p, channel)[i]).collect()
    }

    pub fn set_plane(&mut self, channel: usize, i: usize, values: &[f64]) {
        for (p, v) in values.iter().enumerate() {
            self.get_mut(p, channel)[i] = *v;
        }
    }

    /// Keeps only the first `count` members of every vector.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.count);
        let mut out = Self::zeros(self.points(), self.channels, count);
        for p in 0..self.points() {
            for ch in 0..self.channels {
                out.get_mut(p, ch).copy_from_slice(&self.get(p, ch)[..count]);
            }
        }
        out
    }
}

/// Fitting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub lambda: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub neighbor_count: usize,
    pub convergence_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.8,
            beta: 1.3,
            max_iters: 10,
            neighbor_count: 8,
            convergence_tol: 1e-4,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.beta >= 0.0) {
            return Err(SlfError::invalid("lambda and beta must be >= 0"));
        }
        if self.neighbor_count < 1 {
            return Err(SlfError::invalid("neighbor count must be >= 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(SlfError::invalid("convergence tolerance must be > 0"));
        }
        Ok(())
    }
}

enum Factor {
    /// `G G^T + mu I`, used when `M < N`.
    Dual(Cholesky<f64, Dyn>),
    /// `G^T G + mu I`.
    Primal(Cholesky<f64, Dyn>),
    /// No observations: the solution is `(beta / mu) a_bar`.
    Empty,
}

/// Factored system for one point: `(G^T G + (lambda + beta) I) a = G^T c + beta a_bar`.
pub struct PointSolver {
    g: DMatrix<f64>,
    lambda: f64,
    beta: f64,
    factor: Factor,
}

impl PointSolver {
    pub fn new(g: DMatrix<f64>, lambda: f64, beta: f64) -> Result<Self> {
        let (m, n) = g.shape();
        let mu = lambda + beta;
        let singular = || SlfError::numerical(None, "normal matrix is not positive definite");
        let factor = if m == 0 {
            if mu <= 0.0 {
                return Err(SlfError::numerical(None, "no observations and lambda + beta = 0"));
            }
            Factor::Empty
        } else if m < n {
            if mu <= 0.0 {
                return Err(singular());
            }
            let mut k = &g * g.transpose();
            for j in 0..m {
                k[(j, j)] += mu;
            }
            Factor::Dual(Cholesky::new(k).ok_or_else(singular)?)
        } else {
            let mut k = g.transpose() * &g;
            for j in 0..n {
                k[(j, j)] += mu;
            }
            Factor::Primal(Cholesky::new(k).ok_or_else(singular)?)
        };
        Ok(Self {
            g,
            lambda,
            beta,
            factor,
        })
    }

    pub fn observations(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Solves for one channel. `alpha_bar` may be `None` when `beta = 0`.
    pub fn solve(&self, c: &DVector<f64>, alpha_bar: Option<&DVector<f64>>) -> DVector<f64> {
        let n = self.g.ncols();
        let mu = self.lambda + self.beta;
        let pull = alpha_bar.filter(|_| self.beta != 0.0);
        match &self.factor {
            Factor::Empty => match pull {
                Some(ab) => ab * (self.beta / mu),
                None => DVector::zeros(n),
            },
            Factor::Dual(chol) => {
                // (G^T G + mu I)^-1 G^T = G^T (G G^T + mu I)^-1
                let mut a = self.g.tr_mul(&chol.solve(c));
                if let Some(ab) = pull {
                    // (G^T G + mu I)^-1 = (I - G^T (G G^T + mu I)^-1 G) / mu
                    let z = chol.solve(&(&self.g * ab));
                    a += (ab - self.g.tr_mul(&z)) * (self.beta / mu);
                }
                a
            }
            Factor::Primal(chol) => {
                let mut rhs = self.g.tr_mul(c);
                if let Some(ab) = pull {
                    rhs += ab * self.beta;
                }
                chol.solve(&rhs)
            }
        }
    }
}

/// `(G^T G + lambda I)^-1 G^T c`.
pub fn fit_ridge(c: &DVector<f64>, g: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_shapes(c, g, None)?;
    Ok(PointSolver::new(g.clone(), lambda, 0.0)?.solve(c, None))
}

/// `(G^T G + (lambda + beta) I)^-1 (G^T c + beta a_bar)`.
pub fn fit_smoothed(
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    lambda: f64,
    beta: f64,
    alpha_bar: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_shapes(c, g, Some(alpha_bar))?;
    Ok(PointSolver::new(g.clone(), lambda, beta)?.solve(c, Some(alpha_bar)))
}

fn check_shapes(c: &DVector<f64>, g: &DMatrix<f64>, ab: Option<&DVector<f64>>) -> Result<()> {
    if c.len() != g.nrows() {
        return Err(SlfError::invalid(format!(
            "{} observations for a {}-row matrix",
            c.len(),
            g.nrows()
        )));
    }
    if let Some(ab) = ab {
        if ab.len() != g.ncols() {
            return Err(SlfError::invalid("neighbor average length differs from N"));
        }
    }
    Ok(())
}

/// Precomputed k-nearest-neighbor lists, excluding each point itself.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    lists: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn new(cloud: &PointCloud, k: usize) -> Result<Self> {
        if k >= cloud.len() {
            return Err(SlfError::invalid(format!(
                "neighbor count {k} needs more than {} points",
                cloud.len()
            )));
        }
        let index = KnnIndex::new(&cloud.positions);
        let lists = (0..cloud.len())
            .into_par_iter()
            .map(|i| index.nearest(&cloud.positions[i], k, Some(i)))
            .collect();
        Ok(Self { lists })
    }

    pub fn neighbors(&self, p: usize) -> &[usize] {
        &self.lists[p]
    }

    /// Unweighted mean of the neighbors' coefficients (all channels).
    pub fn average(&self, coeffs: &SlfCoefficients, p: usize) -> Vec<f64> {
        let nbrs = &self.lists[p];
        let mut mean = vec![0.0; coeffs.count() * coeffs.channels()];
        for &j in nbrs {
            for (m, v) in mean.iter_mut().zip(coeffs.point(j)) {
                *m += v;
            }
        }
        let inv = 1.0 / nbrs.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }
}

/// Mean coefficient vector of the `k` nearest neighbors of `point_index`.
pub fn neighbor_average(
    cloud: &PointCloud,
    coeffs: &SlfCoefficients,
    point_index: usize,
    k: usize,
) -> Result<Vec<f64>> {
    if point_index >= cloud.len() {
        return Err(SlfError::invalid("point index out of range"));
    }
    if k >= cloud.len() {
        return Err(SlfError::invalid(format!(
            "neighbor count {k} needs more than {} points",
            cloud.len()
        )));
    }
    let index = KnnIndex::new(&cloud.positions);
    let nbrs = index.nearest(&cloud.positions[point_index], k, Some(point_index));
    let graph = NeighborGraph {
        lists: vec![Vec::new(); point_index].into_iter().chain([nbrs]).collect(),
    };
    Ok(graph.average(coeffs, point_index))
}

/// Per-point observation matrix and per-channel color vectors.
pub struct PointData {
    pub g: DMatrix<f64>,
    pub colors: [DVector<f64>; CHANNELS],
}

pub fn point_data(basis: &Basis, obs: &[crate::mapping::Observation]) -> PointData {
    let dirs: Vec<DirectionParam> = obs.iter().map(|o| o.direction).collect();
    let g = basis.matrix(&dirs);
    let colors = std::array::from_fn(|ch| DVector::from_iterator(obs.len(), obs.iter().map(|o| o.color[ch])));
    PointData { g, colors }
}

/// Iterative solver state: per-point factored systems plus the neighbor graph.
pub struct SlfSolver {
    spec: BasisSpec,
    cfg: FitConfig,
    colors: Vec<[DVector<f64>; CHANNELS]>,
    ridge: Vec<PointSolver>,
    smoothed: Option<Vec<PointSolver>>,
    graph: Option<NeighborGraph>,
}

impl SlfSolver {
    pub fn new(obs: &ObservationSet, cloud: &PointCloud, spec: BasisSpec, cfg: FitConfig) -> Result<Self> {
        cfg.validate()?;
        if obs.len() != cloud.len() {
            return Err(SlfError::invalid(format!(
                "{} observation lists for {} points",
                obs.len(),
                cloud.len()
            )));
        }
        let basis = spec.compile();
        let data: Vec<PointData> = obs.per_point.par_iter().map(|o| point_data(&basis, o)).collect();
        let colors = data.iter().map(|d| d.colors.clone()).collect();
        let build = |lambda: f64, beta: f64| -> Result<Vec<PointSolver>> {
            data.par_iter()
                .enumerate()
                .map(|(p, d)| {
                    PointSolver::new(d.g.clone(), lambda, beta).map_err(|e| match e {
                        SlfError::NumericalFailure { reason, .. } => SlfError::numerical(Some(p), reason),
                        other => other,
                    })
                })
                .collect()
        };
        let ridge = build(cfg.lambda, 0.0)?;
        let (smoothed, graph) = if cfg.max_iters > 0 {
            (Some(build(cfg.lambda, cfg.beta)?), Some(NeighborGraph::new(cloud, cfg.neighbor_count)?))
        } else {
            (None, None)
        };
        Ok(Self {
            spec,
            cfg,
            colors,
            ridge,
            smoothed,
            graph,
        })
    }

    pub fn points(&self) -> usize {
        self.colors.len()
    }

    pub fn graph(&self) -> Option<&NeighborGraph> {
        self.graph.as_ref()
    }

    /// Ridge-only initialization.
    pub fn initialize(&self) -> SlfCoefficients {
        let n = self.spec.count();
        let per_point: Vec<Vec<f64>> = (0..self.points())
            .into_par_iter()
            .map(|p| {
                let mut out = Vec::with_capacity(CHANNELS * n);
                for ch in 0..CHANNELS {
                    out.extend(self.ridge[p].solve(&self.colors[p][ch], None).iter());
                }
                out
            })
            .collect();
        assemble(per_point, n)
    }

    /// Neighbor averages of `prev` for every point.
    pub fn neighbor_averages(&self, prev: &SlfCoefficients) -> SlfCoefficients {
        let graph = self.graph.as_ref().expect("iterations need a neighbor graph");
        let per_point: Vec<Vec<f64>> = (0..self.points())
            .into_par_iter()
            .map(|p| graph.average(prev, p))
            .collect();
        assemble(per_point, self.spec.count())
    }

    /// One Jacobi sweep. Returns `(a_bar, next)`.
    pub fn step(&self, prev: &SlfCoefficients) -> (SlfCoefficients, SlfCoefficients) {
        let n = self.spec.count();
        let solvers = self.smoothed.as_ref().expect("iterations need smoothed solvers");
        let bars = self.neighbor_averages(prev);
        let per_point: Vec<Vec<f64>> = (0..self.points())
            .into_par_iter()
            .map(|p| {
                let mut out = Vec::with_capacity(CHANNELS * n);
                for ch in 0..CHANNELS {
                    let ab = DVector::from_column_slice(bars.get(p, ch));
                    out.extend(solvers[p].solve(&self.colors[p][ch], Some(&ab)).iter());
                }
                out
            })
            .collect();
        (bars, assemble(per_point, n))
    }

    /// Initialization followed by up to `max_iters` sweeps.
    pub fn run(&self) -> FitReport {
        let mut coeffs = self.initialize();
        let mut changes = Vec::new();
        for _ in 0..self.cfg.max_iters {
            let (_, next) = self.step(&coeffs);
            let change = max_relative_change(&coeffs, &next);
            changes.push(change);
            coeffs = next;
            if change < self.cfg.convergence_tol {
                break;
            }
        }
        FitReport {
            coefficients: coeffs,
            changes,
        }
    }
}

fn assemble(per_point: Vec<Vec<f64>>, n: usize) -> SlfCoefficients {
    let points = per_point.len();
    let data: Vec<f64> = per_point.into_iter().flatten().collect();
    debug_assert_eq!(data.len(), points * CHANNELS * n);
    SlfCoefficients {
        count: n,
        channels: CHANNELS,
        data,
    }
}

/// Largest per-point `||next - prev|| / ||prev||` (absolute when `prev` is zero).
pub fn max_relative_change(prev: &SlfCoefficients, next: &SlfCoefficients) -> f64 {
    (0..prev.points())
        .map(|p| {
            let (a, b) = (prev.point(p), next.point(p));
            let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let base = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if base > 0.0 {
                diff / base
            } else {
                diff
            }
        })
        .fold(0.0, f64::max)
}

/// Output of [`SlfSolver::run`].
#[derive(Debug, Clone)]
pub struct FitReport {
    pub coefficients: SlfCoefficients,
    /// Max relative change after each sweep.
    pub changes: Vec<f64>,
}

/// Fits coefficients for every point of the cloud.
pub fn solve_slf(
    obs: &ObservationSet,
    cloud: &PointCloud,
    spec: BasisSpec,
    cfg: FitConfig,
) -> Result<SlfCoefficients> {
    Ok(SlfSolver::new(obs, cloud, spec, cfg)?.run().coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn zero_colors_give_zero() {
        let g = DMatrix::from_fn(3, 5, |i, j| (i + 2 * j) as f64 * 0.1 + 1.0);
        let a = fit_ridge(&DVector::zeros(3), &g, 0.8).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_system() {
        let c = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let a = fit_ridge(&c, &DMatrix::identity(3, 3), 0.0).unwrap();
        assert!((a - c).norm() < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let g = DMatrix::from_element(4, 2, 1.0);
        assert!(matches!(
            fit_ridge(&DVector::from_element(4, 1.0), &g, 0.0),
            Err(SlfError::NumericalFailure { .. })
        ));
        let wide = DMatrix::from_element(1, 3, 1.0);
        assert!(fit_ridge(&DVector::from_element(1, 1.0), &wide, 0.0).is_err());
    }

    #[test]
    fn beta_zero_reduces_to_ridge() {
        let g = DMatrix::from_fn(3, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let c = DVector::from_vec(vec![1.0, 4.0, -2.0]);
        let ab = DVector::from_element(6, 9.0);
        let r = fit_ridge(&c, &g, 0.8).unwrap();
        let s = fit_smoothed(&c, &g, 0.8, 0.0, &ab).unwrap();
        assert!((r - s).amax() < 1e-12);
    }

    #[test]
    fn empty_observations_pull_to_neighbors() {
        let g = DMatrix::zeros(0, 4);
        let ab = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let a = fit_smoothed(&DVector::zeros(0), &g, 0.8, 1.3, &ab).unwrap();
        assert!((a - &ab * (1.3 / 2.1)).amax() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let g = DMatrix::zeros(2, 4);
        assert!(fit_ridge(&DVector::zeros(3), &g, 1.0).is_err());
        assert!(fit_smoothed(&DVector::zeros(2), &g, 1.0, 1.0, &DVector::zeros(3)).is_err());
    }

    fn line_cloud() -> (PointCloud, SlfCoefficients) {
        let xs = [0.0, 1.0, 3.0, 3.5, 7.0];
        let cloud = PointCloud::new(xs.iter().map(|&x| Vector3::new(x, 0.0, 0.0)).collect(), None).unwrap();
        let mut c = SlfCoefficients::zeros(5, 1, 2);
        for p in 0..5 {
            c.get_mut(p, 0).copy_from_slice(&[p as f64, 10.0 * p as f64]);
        }
        (cloud, c)
    }

    #[test]
    fn neighbor_average_cases() {
        let (cloud, c) = line_cloud();
        // Point at x=3: nearest are 3.5 (idx 3) and 1.0 (idx 1).
        assert_eq!(neighbor_average(&cloud, &c, 2, 2).unwrap(), vec![2.0, 20.0]);
        assert_eq!(neighbor_average(&cloud, &c, 4, 1).unwrap(), vec![3.0, 30.0]);
        assert!(neighbor_average(&cloud, &c, 0, 5).is_err());
        let mut same = SlfCoefficients::zeros(5, 1, 2);
        for p in 0..5 {
            same.get_mut(p, 0).copy_from_slice(&[4.0, -1.0]);
        }
        assert_eq!(neighbor_average(&cloud, &same, 0, 3).unwrap(), vec![4.0, -1.0]);
    }

    #[test]
    fn ties_break_to_lower_index() {
        // Point 1 sits between 0 and 2 at equal distance.
        let cloud = PointCloud::new(
            vec![Vector3::new(-1.0, 0.0, 0.0), Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)],
            None,
        )
        .unwrap();
        let mut c = SlfCoefficients::zeros(3, 1, 1);
        for p in 0..3 {
            c.get_mut(p, 0)[0] = p as f64;
        }
        assert_eq!(neighbor_average(&cloud, &c, 1, 1).unwrap(), vec![0.0]);
    }
}
