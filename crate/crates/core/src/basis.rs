//! Periodic separable B-spline wavelet basis over viewing directions.
//!
//! A viewing direction is parameterized by azimuth `theta` in `[-pi, pi]` and
//! `gamma = sin(elevation)` in `[-1, 1]`, which makes equal areas in the
//! `(theta, gamma)` plane equal areas on the sphere. Each axis carries a
//! period-1 multiresolution family: one constant scaling member followed by
//! the periodized wavelets of scales `0..s`, for `2^s` members in total. The
//! 2D basis is the tensor product of the two families, indexed theta-major:
//! `i = i0 + 2^s0 * i1`.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Result, SlfError};

/// Wavelet order and per-axis scales. Fully determines the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    /// 1 = Haar, 2 = linear, 3 = quadratic, 4 = cubic.
    pub order: u32,
    pub scale_theta: u32,
    pub scale_gamma: u32,
}

/// Largest per-axis scale accepted; keeps `2^s` members addressable.
pub const MAX_SCALE: u32 = 16;

impl BasisSpec {
    /// Builds a spec that satisfies `scale_theta = scale_gamma + 1`.
    pub fn new(order: u32, scale_theta: u32, scale_gamma: u32) -> Result<Self> {
        if scale_theta != scale_gamma + 1 {
            return Err(SlfError::invalid(format!(
                "scale_theta ({scale_theta}) must equal scale_gamma + 1 ({})",
                scale_gamma + 1
            )));
        }
        Self::with_scales(order, scale_theta, scale_gamma)
    }

    /// Builds a spec without the `s0 = s1 + 1` coupling.
    pub fn with_scales(order: u32, scale_theta: u32, scale_gamma: u32) -> Result<Self> {
        if order < 1 {
            return Err(SlfError::invalid("wavelet order must be >= 1"));
        }
        if scale_theta > MAX_SCALE || scale_gamma > MAX_SCALE {
            return Err(SlfError::invalid(format!("scales must be <= {MAX_SCALE}")));
        }
        Ok(Self {
            order,
            scale_theta,
            scale_gamma,
        })
    }

    /// Picks scales for a power-of-two basis count. Odd exponents split as
    /// `s0 = s1 + 1`; even exponents split evenly (an override of the
    /// coupling, needed for counts such as 1 or 16).
    pub fn from_count(order: u32, count: usize) -> Result<Self> {
        if count == 0 || !count.is_power_of_two() {
            return Err(SlfError::invalid(format!(
                "basis count {count} is not a power of two"
            )));
        }
        let exp = count.trailing_zeros();
        let s1 = exp / 2;
        let s0 = exp - s1;
        Self::with_scales(order, s0, s1)
    }

    /// `N = 2^(s0 + s1)`.
    pub fn count(&self) -> usize {
        1usize << (self.scale_theta + self.scale_gamma)
    }

    pub fn theta_members(&self) -> usize {
        1usize << self.scale_theta
    }

    pub fn gamma_members(&self) -> usize {
        1usize << self.scale_gamma
    }

    /// Splits a flat basis index into `(i0, i1)`.
    pub fn split_index(&self, i: usize) -> (usize, usize) {
        (i % self.theta_members(), i / self.theta_members())
    }

    pub fn compile(&self) -> Basis {
        Basis::new(*self)
    }
}

impl Default for BasisSpec {
    /// Linear wavelets, `N = 128`.
    fn default() -> Self {
        Self {
            order: 2,
            scale_theta: 4,
            scale_gamma: 3,
        }
    }
}

/// A viewing direction in the equal-area `(theta, gamma)` parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionParam {
    pub theta: f64,
    pub gamma: f64,
}

impl DirectionParam {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&theta) || !(-1.0..=1.0).contains(&gamma) {
            return Err(SlfError::invalid(format!(
                "direction ({theta}, {gamma}) outside [-pi, pi] x [-1, 1]"
            )));
        }
        Ok(Self { theta, gamma })
    }

    /// Periodic-domain coordinates in `[0, 1]` for the theta and gamma axes.
    pub fn unit_coords(&self) -> (f64, f64) {
        ((self.theta + PI) / (2.0 * PI), (self.gamma + 1.0) / 2.0)
    }
}

/// Cardinal B-spline of the given order, supported on `[0, order]`.
pub fn cardinal_bspline(order: u32, x: f64) -> Result<f64> {
    if order < 1 {
        return Err(SlfError::invalid("B-spline order must be >= 1"));
    }
    Ok(bspline(order, x))
}

fn bspline(order: u32, x: f64) -> f64 {
    if !(0.0..order as f64).contains(&x) {
        return 0.0;
    }
    if order == 1 {
        return 1.0;
    }
    let k = (order - 1) as f64;
    (x / k) * bspline(order - 1, x) + ((order as f64 - x) / k) * bspline(order - 1, x - 1.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Two-scale B-spline wavelet of one order, with its sequence `q_n` cached.
#[derive(Debug, Clone)]
pub struct WaveletKernel {
    order: u32,
    q: Vec<f64>,
}

impl WaveletKernel {
    pub fn new(order: u32) -> Result<Self> {
        if order < 1 {
            return Err(SlfError::invalid("wavelet order must be >= 1"));
        }
        let sign_scale = 1.0 / 2f64.powi(order as i32 - 1);
        let q = (0..=(3 * order - 2))
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let sum: f64 = (0..=order)
                    .map(|j| {
                        binomial(order, j) * bspline(2 * order, n as f64 - j as f64 + 1.0)
                    })
                    .sum();
                sign * sign_scale * sum
            })
            .collect();
        Ok(Self { order, q })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Right end of the wavelet support, `2o - 1`.
    pub fn support(&self) -> f64 {
        (2 * self.order - 1) as f64
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..self.support()).contains(&x) {
            return 0.0;
        }
        let t = 2.0 * x;
        self.q
            .iter()
            .enumerate()
            .map(|(n, q)| q * bspline(self.order, t - n as f64))
            .sum()
    }
}

/// Mother wavelet `psi_o(x)`.
pub fn mother_wavelet(order: u32, x: f64) -> Result<f64> {
    Ok(WaveletKernel::new(order)?.eval(x))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// The period-1 family of `2^scale` members on one axis, unit L2 norm each.
#[derive(Debug, Clone)]
pub struct PeriodicFamily {
    scale: u32,
    kernel: WaveletKernel,
    /// `1 / ||w||` for the wavelets of level `t`, indexed by `t`.
    inv_norms: Vec<f64>,
}

impl PeriodicFamily {
    pub fn new(order: u32, scale: u32) -> Result<Self> {
        let kernel = WaveletKernel::new(order)?;
        let gl = gauss_legendre(order as usize + 1);
        let inv_norms = (0..scale)
            .map(|t| {
                // Members are piecewise polynomials with knots on 2^-(t+1).
                let pieces = 1usize << (t + 1);
                let h = 1.0 / pieces as f64;
                let mut energy = 0.0;
                for k in 0..pieces {
                    let mid = (k as f64 + 0.5) * h;
                    for &(node, weight) in &gl {
                        let v = raw_wavelet(&kernel, t, 0, mid + 0.5 * h * node);
                        energy += 0.5 * h * weight * v * v;
                    }
                }
                1.0 / energy.sqrt()
            })
            .collect();
        Ok(Self {
            scale,
            kernel,
            inv_norms,
        })
    }

    pub fn len(&self) -> usize {
        1usize << self.scale
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn order(&self) -> u32 {
        self.kernel.order
    }

    /// Member `index` at `x` (reduced modulo 1). Panics if `index` is out of range.
    pub fn eval(&self, index: usize, x: f64) -> f64 {
        assert!(index < self.len(), "member index out of range");
        if index == 0 {
            return 1.0;
        }
        let t = usize::BITS - 1 - index.leading_zeros();
        let shift = index - (1usize << t);
        raw_wavelet(&self.kernel, t, shift, x) * self.inv_norms[t as usize]
    }

    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.len()) {
            *o = self.eval(i, x);
        }
    }
}

/// Periodized, unnormalized wavelet at level `t` and translation `shift`.
fn raw_wavelet(kernel: &WaveletKernel, t: u32, shift: usize, x: f64) -> f64 {
    let period = (1u64 << t) as f64;
    let mut y = (period * x.rem_euclid(1.0) - shift as f64).rem_euclid(period);
    let support = kernel.support();
    let mut sum = 0.0;
    while y < support {
        sum += kernel.eval(y);
        y += period;
    }
    sum
}

/// The `index`-th member of the periodic family of size `2^scale`.
pub fn periodic_basis_1d(order: u32, scale: u32, index: usize, x: f64) -> Result<f64> {
    if scale > MAX_SCALE || index >= (1usize << scale) {
        return Err(SlfError::invalid(format!(
            "member index {index} out of range for scale {scale}"
        )));
    }
    Ok(PeriodicFamily::new(order, scale)?.eval(index, x))
}

/// A compiled basis: both axis families with their normalization tables.
#[derive(Debug, Clone)]
pub struct Basis {
    spec: BasisSpec,
    theta: PeriodicFamily,
    gamma: PeriodicFamily,
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Self {
        // Orders are validated by BasisSpec constructors.
        let theta = PeriodicFamily::new(spec.order.max(1), spec.scale_theta)
            .expect("validated order");
        let gamma = PeriodicFamily::new(spec.order.max(1), spec.scale_gamma)
            .expect("validated order");
        Self { spec, theta, gamma }
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn count(&self) -> usize {
        self.spec.count()
    }

    /// `g_i(theta, gamma)`. Panics if `i` is out of range.
    pub fn eval(&self, d: DirectionParam, i: usize) -> f64 {
        let (i0, i1) = self.spec.split_index(i);
        let (u, v) = d.unit_coords();
        self.theta.eval(i0, u) * self.gamma.eval(i1, v)
    }

    /// Fills `row` with all `N` basis values at `d`.
    pub fn eval_row(&self, d: DirectionParam, row: &mut [f64]) {
        let (u, v) = d.unit_coords();
        let n0 = self.theta.len();
        let mut tv = vec![0.0; n0];
        let mut gv = vec![0.0; self.gamma.len()];
        self.theta.eval_all(u, &mut tv);
        self.gamma.eval_all(v, &mut gv);
        for (i1, g) in gv.iter().enumerate() {
            for (i0, t) in tv.iter().enumerate() {
                row[i0 + n0 * i1] = t * g;
            }
        }
    }

    /// The `M x N` observation matrix, `G[j, i] = g_i(directions[j])`.
    pub fn matrix(&self, directions: &[DirectionParam]) -> DMatrix<f64> {
        let n = self.count();
        let mut g = DMatrix::zeros(directions.len(), n);
        let mut row = vec![0.0; n];
        for (j, d) in directions.iter().enumerate() {
            self.eval_row(*d, &mut row);
            for (i, v) in row.iter().enumerate() {
                g[(j, i)] = *v;
            }
        }
        g
    }
}

pub fn evaluate_basis_2d(spec: &BasisSpec, d: DirectionParam, i: usize) -> Result<f64> {
    if i >= spec.count() {
        return Err(SlfError::invalid(format!(
            "basis index {i} out of range for N = {}",
            spec.count()
        )));
    }
    Ok(Basis::new(*spec).eval(d, i))
}

pub fn basis_matrix(spec: &BasisSpec, directions: &[DirectionParam]) -> DMatrix<f64> {
    Basis::new(*spec).matrix(directions)
}
