//! Brute-force reference implementations. None of these call into the code
//! they check beyond evaluating basis members.

use slf_codec::basis::{Basis, BasisSpec, DirectionParam};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            max_abs_error: 0.0,
            max_rel_error: 0.0,
            tolerance,
        }
    }

    /// Records `got` against `want`; the relative error uses the norm of `want`.
    pub fn compare(&mut self, got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len(), "{}: length mismatch", self.name);
        let diff = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = want.iter().map(|b| b * b).sum::<f64>().sqrt();
        let abs = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.max_abs_error = self.max_abs_error.max(abs);
        self.max_rel_error = self.max_rel_error.max(if scale > 0.0 { diff / scale } else { diff });
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// `(G^T G + (lambda + beta) I) a = G^T c + beta a_bar` by Gaussian elimination
/// with partial pivoting on the explicitly formed normal equations.
pub fn normal_equations(
    c: &[f64],
    g: &[Vec<f64>],
    lambda: f64,
    beta: f64,
    alpha_bar: &[f64],
) -> Result<Vec<f64>, String> {
    let n = alpha_bar.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = g.iter().map(|row| row[i] * row[j]).sum();
        }
        a[i][i] += lambda + beta;
        a[i][n] = g.iter().zip(c).map(|(row, cj)| row[i] * cj).sum::<f64>() + beta * alpha_bar[i];
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err("singular system".into());
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..=n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Ok(x)
}

fn midpoint_directions(spec: &BasisSpec, refine: u32) -> Vec<DirectionParam> {
    let nu = 1usize << (spec.scale_theta + refine);
    let nv = 1usize << (spec.scale_gamma + refine);
    let mut out = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let u = (i as f64 + 0.5) / nu as f64;
            let v = (j as f64 + 0.5) / nv as f64;
            out.push(DirectionParam {
                theta: 2.0 * PI * u - PI,
                gamma: 2.0 * v - 1.0,
            });
        }
    }
    out
}

/// Gram matrix of the basis by the midpoint rule on a grid refined `refine`
/// times beyond the finest knot spacing of each axis. The domain is the unit
/// square of periodic coordinates, which is equal-area on the sphere.
pub fn quadrature_gram(spec: &BasisSpec, refine: u32) -> Vec<Vec<f64>> {
    assert!(refine >= 3, "needs at least 2^(s0 + s1 + 6) samples");
    let basis = Basis::new(*spec);
    let n = basis.count();
    let dirs = midpoint_directions(spec, refine);
    let weight = 1.0 / dirs.len() as f64;
    let mut gram = vec![vec![0.0; n]; n];
    let mut row = vec![0.0; n];
    for d in &dirs {
        basis.eval_row(*d, &mut row);
        for i in 0..n {
            for j in i..n {
                gram[i][j] += weight * row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    gram
}

/// Squared norm of every member, by the same quadrature (cheaper than the full Gram).
pub fn quadrature_norms(spec: &BasisSpec, refine: u32) -> Vec<f64> {
    let basis = Basis::new(*spec);
    let n = basis.count();
    let dirs = midpoint_directions(spec, refine);
    let mut norms = vec![0.0; n];
    let mut row = vec![0.0; n];
    for d in &dirs {
        basis.eval_row(*d, &mut row);
        for (s, v) in norms.iter_mut().zip(&row) {
            *s += v * v;
        }
    }
    norms.iter().map(|s| s / dirs.len() as f64).collect()
}

/// Row-major camera, kept apart from the library's camera type.
pub struct RawCamera {
    pub k: [f64; 9],
    pub r: [f64; 9],
    pub t: [f64; 3],
    pub width: u32,
    pub height: u32,
}

impl RawCamera {
    /// `(u, v, depth)` of a world point.
    pub fn project(&self, p: [f64; 3]) -> (f64, f64, f64) {
        let mut q = [0.0; 3];
        for (i, qi) in q.iter_mut().enumerate() {
            *qi = (0..3).map(|j| self.r[3 * i + j] * p[j]).sum::<f64>() + self.t[i];
        }
        let mut h = [0.0; 3];
        for (i, hi) in h.iter_mut().enumerate() {
            *hi = (0..3).map(|j| self.k[3 * i + j] * q[j]).sum();
        }
        (h[0] / h[2], h[1] / h[2], q[2])
    }

    fn cell(&self, p: [f64; 3]) -> Option<(i64, i64, f64)> {
        let (u, v, z) = self.project(p);
        if z <= 0.0 || !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        Some((u.floor() as i64, v.floor() as i64, z))
    }
}

/// A point is visible iff it lands in the image in front of the camera and no
/// point in the same pixel cell is nearer by more than `depth_eps`.
/// Quadratic in the number of points.
pub fn visibility(points: &[[f64; 3]], cam: &RawCamera, depth_eps: f64) -> Vec<bool> {
    let cells: Vec<Option<(i64, i64, f64)>> = points.iter().map(|p| cam.cell(*p)).collect();
    cells
        .iter()
        .map(|ci| {
            let Some((x, y, z)) = *ci else { return false };
            cells.iter().all(|cj| match *cj {
                Some((x2, y2, z2)) if x2 == x && y2 == y => z <= z2 + depth_eps,
                _ => true,
            })
        })
        .collect()
}

/// `sum_v w_v f_v^2`, the energy an orthonormal weighted transform must keep.
pub fn weighted_energy(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(f, w)| w * f * f).sum()
}

/// Root DC of a unit-weight transform: `sum f / sqrt(n)`.
pub fn root_dc(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / (values.len() as f64).sqrt()
}

fn bit_length(mut x: u128) -> u64 {
    let mut n = 0;
    while x > 0 {
        x >>= 1;
        n += 1;
    }
    n
}

/// Length of the order-`k` Exp-Golomb codeword of `u`.
pub fn exp_golomb_bits(u: u64, k: u8) -> u64 {
    let n = bit_length(u as u128 + (1u128 << k));
    2 * n - 1 - k as u64
}

/// Signed level to the nonnegative code index: 0, -1, 1, -2, 2, ... map to 0, 1, 2, 3, 4, ...
pub fn zigzag(v: i64) -> u64 {
    if v >= 0 {
        2 * v as u64
    } else {
        2 * v.unsigned_abs() - 1
    }
}

/// Smallest total Exp-Golomb bit count of a plane over `k` in `0..=31`, and that `k`.
pub fn best_plane_bits(levels: &[i64]) -> (u8, u64) {
    (0..=31u8)
        .map(|k| (k, levels.iter().map(|&l| exp_golomb_bits(zigzag(l), k)).sum()))
        .min_by_key(|&(k, bits)| (bits, k))
        .unwrap()
}

/// `||c - G a||^2 + lambda ||a||^2 + beta ||a - a_bar||^2`, summed directly.
pub fn frozen_objective(c: &[f64], g: &[Vec<f64>], a: &[f64], lambda: f64, beta: f64, alpha_bar: &[f64]) -> f64 {
    let fit: f64 = g
        .iter()
        .zip(c)
        .map(|(row, cj)| (cj - row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>()).powi(2))
        .sum();
    let ridge: f64 = a.iter().map(|x| x * x).sum();
    let smooth: f64 = a.iter().zip(alpha_bar).map(|(x, y)| (x - y).powi(2)).sum();
    fit + lambda * ridge + beta * smooth
}
