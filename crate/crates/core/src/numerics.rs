//! Quadrature and small-matrix complex linear algebra shared by the
//! higher-level modules.
//!
//! The segment integrator uses the tanh-sinh (double exponential) node map,
//! which converges geometrically even when the integrand blows up like
//! `(t - a)^{-1/2}` at an endpoint. That is exactly the behaviour of the
//! abelian integrands at branch points, so every period and Abel integral
//! in the crate funnels through here.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("quadrature did not contract below tolerance {tol:e} after {levels} levels (last delta {delta:e})")]
    NonConvergence { tol: f64, levels: usize, delta: f64 },
    #[error("matrix is numerically singular (pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("matrix is not symmetric within tolerance (max asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
}

/// Settings for the segment/path integrators and the 2-D kernel integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Absolute error goal per segment.
    pub target_abs_tol: f64,
    /// Cap on tanh-sinh refinement levels (node count doubles per level).
    pub max_levels: usize,
    /// Radius of the disc removed around an integrable diagonal singularity.
    pub excision_radius: f64,
    /// Density multiplier for the 2-D meshes; 2.0 halves every step.
    pub mesh_refine: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            // Endpoint-singular integrands hit a roundoff floor near 1e-11
            // because the map can only hand the integrand z itself, not the
            // distance to the endpoint. 1e-11 keeps every downstream
            // tolerance (1e-8 at the tightest) comfortably satisfied.
            target_abs_tol: 1e-11,
            max_levels: 12,
            excision_radius: 1e-2,
            mesh_refine: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> bool {
        self.target_abs_tol > 0.0
            && self.max_levels >= 3
            && self.excision_radius >= 0.0
            && self.mesh_refine > 0.0
    }
}

// Tanh-sinh node on the reference interval (-1, 1).
//
// `delta` is the distance from the nearer endpoint, computed without
// cancellation so endpoint singularities keep full relative accuracy.
struct DeNode {
    /// Distance to the endpoint the node clusters against.
    delta: f64,
    /// Positive t side (clusters at +1) when true.
    upper: bool,
    weight: f64,
}

fn de_node(t: f64) -> Option<DeNode> {
    let u = std::f64::consts::FRAC_PI_2 * t.sinh();
    let au = u.abs();
    // 1 - tanh(|u|) = 2 / (e^{2|u|} + 1)
    let delta = 2.0 / ((2.0 * au).exp() + 1.0);
    if delta == 0.0 {
        return None;
    }
    // sech(u) without overflow
    let sech = 2.0 * (-au).exp() / (1.0 + (-2.0 * au).exp());
    let weight = std::f64::consts::FRAC_PI_2 * t.cosh() * sech * sech;
    if weight == 0.0 || !weight.is_finite() {
        return None;
    }
    Some(DeNode { delta, upper: t > 0.0, weight })
}

const T_MAX: f64 = 6.5;

/// Fixed-step tanh-sinh nodes and weights on the open interval (a, b).
///
/// Non-adaptive companion to `integrate_segment_multi` for tensor-product
/// grids, where each axis needs a concrete node list instead of a
/// convergence loop. Weights include the step and the interval half-width.
pub fn de_fixed_nodes(a: f64, b: f64, h: f64) -> Vec<(f64, f64)> {
    de_fixed_nodes_unit(h)
        .into_iter()
        .map(|(t, _, w)| (a + (b - a) * t, (b - a) * w))
        .collect()
}

/// Fixed-step tanh-sinh nodes on (0, 1), returning `(t, 1 - t, weight)`
/// with both distances held at full relative precision. Callers mapping a
/// node to an unbounded interval via t/(1-t) need the exact complement.
pub fn de_fixed_nodes_unit(h: f64) -> Vec<(f64, f64, f64)> {
    assert!(h > 0.0);
    let mut out = Vec::new();
    let mut push = |t: f64| {
        if let Some(node) = de_node(t) {
            let half = 0.5 * node.delta;
            let (x, comp) = if node.upper { (1.0 - half, half) } else { (half, 1.0 - half) };
            out.push((x, comp, 0.5 * h * node.weight));
        }
    };
    push(0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        push(t);
        push(-t);
        k += 1;
    }
    out
}

/// Quadrature node handed to segment integrands.
///
/// `z` rounds to the nearer segment endpoint once the node gets within
/// machine epsilon of it, which destroys integrands with endpoint
/// singularities. `anchor` and `offset` carry the same point as an exact
/// displacement from that endpoint, so `dist` keeps full relative accuracy
/// arbitrarily close to it.
#[derive(Debug, Clone, Copy)]
pub struct SegPoint {
    pub z: Complex64,
    /// The segment endpoint this node clusters against.
    pub anchor: Complex64,
    /// Exact displacement of the node from `anchor`.
    pub offset: Complex64,
}

impl SegPoint {
    /// `z - x` at full relative precision even when `x` is the anchor.
    pub fn dist(&self, x: Complex64) -> Complex64 {
        (self.anchor - x) + self.offset
    }
}

/// Integrate a vector-valued integrand along the straight segment `a -> b`.
///
/// All components share one set of nodes, so an Abel integrand with g
/// monomials costs the same traversal as a scalar.
pub fn integrate_segment_multi<F>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    dim: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>, NumericsError>
where
    F: FnMut(&SegPoint, &mut [Complex64]),
{
    let half = 0.5 * (b - a);
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut eval_at = |t: f64, acc: &mut [Complex64], f: &mut F| {
        if let Some(node) = de_node(t) {
            let (anchor, offset) = if node.upper {
                (b, -half * node.delta)
            } else {
                (a, half * node.delta)
            };
            let p = SegPoint { z: anchor + offset, anchor, offset };
            f(&p, &mut buf);
            for (s, v) in acc.iter_mut().zip(buf.iter()) {
                let term = *v * node.weight;
                if term.re.is_finite() && term.im.is_finite() {
                    *s += term;
                }
            }
        }
    };

    let mut h = 1.0;
    // level 0: t = 0, ±1, ±2, ...
    let mut sum = vec![Complex64::new(0.0, 0.0); dim];
    eval_at(0.0, &mut sum, &mut f);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        eval_at(t, &mut sum, &mut f);
        eval_at(-t, &mut sum, &mut f);
        k += 1;
    }
    let mut prev: Vec<Complex64> = sum.iter().map(|s| *s * h * half).collect();

    let mut last_delta = f64::INFINITY;
    for level in 1..=cfg.max_levels {
        h *= 0.5;
        // only the new (odd) nodes
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            eval_at(t, &mut sum, &mut f);
            eval_at(-t, &mut sum, &mut f);
            k += 2;
        }
        let cur: Vec<Complex64> = sum.iter().map(|s| *s * h * half).collect();
        let delta: f64 = cur
            .iter()
            .zip(prev.iter())
            .map(|(c, p)| (c - p).norm())
            .fold(0.0, f64::max);
        let scale: f64 = cur.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if level >= 3 && delta <= cfg.target_abs_tol.max(1e-15 * scale) {
            return Ok(cur);
        }
        last_delta = delta;
        prev = cur;
    }
    Err(NumericsError::NonConvergence {
        tol: cfg.target_abs_tol,
        levels: cfg.max_levels,
        delta: last_delta,
    })
}

/// Integrate a complex-valued integrand along the straight segment `a -> b`.
pub fn integrate_segment<F>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    cfg: &QuadratureConfig,
) -> Result<Complex64, NumericsError>
where
    F: FnMut(Complex64) -> Complex64,
{
    let out = integrate_segment_multi(|p, buf| buf[0] = f(p.z), a, b, 1, cfg)?;
    Ok(out[0])
}

/// Integrate along the polyline through `waypoints`.
pub fn integrate_path<F>(
    mut f: F,
    waypoints: &[Complex64],
    cfg: &QuadratureConfig,
) -> Result<Complex64, NumericsError>
where
    F: FnMut(Complex64) -> Complex64,
{
    assert!(waypoints.len() >= 2, "need at least two waypoints");
    let mut total = Complex64::new(0.0, 0.0);
    for pair in waypoints.windows(2) {
        total += integrate_segment(&mut f, pair[0], pair[1], cfg)?;
    }
    Ok(total)
}

/// Vector-valued polyline integral.
pub fn integrate_path_multi<F>(
    mut f: F,
    waypoints: &[Complex64],
    dim: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>, NumericsError>
where
    F: FnMut(&SegPoint, &mut [Complex64]),
{
    assert!(waypoints.len() >= 2, "need at least two waypoints");
    let mut total = vec![Complex64::new(0.0, 0.0); dim];
    for pair in waypoints.windows(2) {
        let part = integrate_segment_multi(&mut f, pair[0], pair[1], dim, cfg)?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

/// Dense square complex matrix, row-major. Sized for g <= ~6, so plain
/// partial-pivot LU is all we need.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        ComplexMatrix { dim, data }
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Inverse via partial-pivot LU on an augmented identity.
    pub fn invert(&self) -> Result<ComplexMatrix, NumericsError> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut inv = ComplexMatrix::identity(n);
        let scale = self.max_abs().max(1.0);
        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, a[r * n + col].norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if pivot_abs < 1e-13 * scale {
                return Err(NumericsError::Singular { pivot: pivot_abs });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                    inv.data.swap(col * n + j, pivot_row * n + j);
                }
            }
            let p = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let t = a[col * n + j];
                    a[r * n + j] -= factor * t;
                    let t = inv.data[col * n + j];
                    inv.data[r * n + j] -= factor * t;
                }
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Lower Cholesky factor of a real symmetric positive definite matrix,
/// or `None` when a pivot fails.
pub fn cholesky_real(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = m[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// True iff the real symmetric matrix is positive definite
/// (Cholesky succeeds). Symmetry is enforced to 1e-10 relative.
pub fn is_positive_definite(m: &[f64], dim: usize) -> Result<bool, NumericsError> {
    assert_eq!(m.len(), dim * dim);
    let scale = m.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let mut asym: f64 = 0.0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            asym = asym.max((m[i * dim + j] - m[j * dim + i]).abs());
        }
    }
    if asym > 1e-10 * scale {
        return Err(NumericsError::NotSymmetric { asym });
    }
    Ok(cholesky_real(m, dim).is_some())
}
