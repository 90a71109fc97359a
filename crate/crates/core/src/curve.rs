//! Hyperelliptic curve data over real branch points: the two-sheeted cover
//! w^2 = prod (z - x_i), its normalized holomorphic differentials, period
//! matrix, Abel map, half-period table and Riemann constants.
//!
//! The genus-g curve has 2g+1 finite branch points x_1 < ... < x_{2g+1} and
//! one more over infinity. Cuts run along [x_1,x_2], ..., [x_{2g-1},x_{2g}]
//! and [x_{2g+1}, inf); the a-cycle a_k encircles the k-th cut. All period
//! data is obtained from boundary values of the integrands just above the
//! real axis, where the branch of w is pinned by continuity from the upper
//! half plane.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{
    integrate_path_multi, integrate_segment_multi, ComplexMatrix, NumericsError,
    QuadratureConfig, SegPoint,
};
use crate::theta::{theta_gradient, theta, PeriodMatrix, ThetaError};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("need an odd number >= 3 of strictly increasing finite branch points")]
    InvalidBranchPoints,
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] NumericsError),
    #[error("frame invariant violated: {what} off by {magnitude:e}")]
    FrameInvariantViolation { what: &'static str, magnitude: f64 },
    #[error("period matrix rejected: {0}")]
    BadPeriodMatrix(#[from] ThetaError),
    #[error("Riemann constants closed form disagrees with half-period sum by {0:e}")]
    MismatchError(f64),
    #[error("half period is a singular theta zero (gradient norm {0:e})")]
    SingularHalfPeriod(f64),
    #[error("Moebius images collide (separation {0:e})")]
    DegenerateTransform(f64),
}

/// Real branch points of w^2 = prod_{i=1}^{2g+1} (z - x_i).
#[derive(Debug, Clone)]
pub struct BranchData {
    pub g: usize,
    pub x: Vec<f64>,
}

impl BranchData {
    pub fn new(x: Vec<f64>) -> Result<Self, CurveError> {
        if x.len() < 3 || x.len() % 2 == 0 {
            return Err(CurveError::InvalidBranchPoints);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CurveError::InvalidBranchPoints);
        }
        if x.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CurveError::InvalidBranchPoints);
        }
        let g = (x.len() - 1) / 2;
        Ok(BranchData { g, x })
    }

    pub fn span(&self) -> f64 {
        self.x[self.x.len() - 1] - self.x[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Plus,
    Minus,
}

/// A point of the curve lying over the closed upper half plane, or the
/// branch point over infinity.
#[derive(Debug, Clone, Copy)]
pub struct SheetedPoint {
    pub z: Complex64,
    pub sheet: Sheet,
    pub at_infinity: bool,
}

impl SheetedPoint {
    /// Point on the upper sheet over z (Im z >= 0).
    pub fn upper(z: Complex64) -> Self {
        SheetedPoint { z, sheet: Sheet::Plus, at_infinity: false }
    }

    pub fn lower(z: Complex64) -> Self {
        SheetedPoint { z, sheet: Sheet::Minus, at_infinity: false }
    }

    pub fn infinity() -> Self {
        SheetedPoint { z: Complex64::new(f64::INFINITY, 0.0), sheet: Sheet::Plus, at_infinity: true }
    }
}

// Principal square root with the boundary value from above: a negative real
// argument (even with a -0.0 imaginary part) maps to +i sqrt|.|.
fn sqrt_upper(c: Complex64) -> Complex64 {
    let c = if c.im == 0.0 { Complex64::new(c.re, 0.0) } else { c };
    c.sqrt()
}

/// The branch of sqrt(prod (z - x_i)) continuous on the closed upper half
/// plane approached from above, real and positive on (x_{2g+1}, inf).
pub fn w_eval(p: &SheetedPoint, branch: &BranchData) -> Complex64 {
    assert!(!p.at_infinity, "w grows like z^{{g+1/2}} at infinity");
    let mut w = Complex64::new(1.0, 0.0);
    for &xi in &branch.x {
        w *= sqrt_upper(p.z - xi);
    }
    match p.sheet {
        Sheet::Plus => w,
        Sheet::Minus => -w,
    }
}

// Same branch of w, evaluated at a quadrature node with full relative
// accuracy near branch points (the node carries its exact displacement
// from the segment endpoint it clusters against).
fn w_plus_at_node(p: &SegPoint, x: &[f64]) -> Complex64 {
    let mut w = Complex64::new(1.0, 0.0);
    for &xi in x {
        w *= sqrt_upper(p.dist(Complex64::new(xi, 0.0)));
    }
    w
}

// Fill buf[j] = z^j / w(z) for j = 0..g-1 at a quadrature node.
fn monomials_over_w(p: &SegPoint, x: &[f64], buf: &mut [Complex64]) {
    let inv_w = 1.0 / w_plus_at_node(p, x);
    let mut pow = Complex64::new(1.0, 0.0);
    for slot in buf.iter_mut() {
        *slot = pow * inv_w;
        pow *= p.z;
    }
}

/// Everything the kernel formulas need from a fixed curve: normalization
/// coefficients, period matrix, half-period table, Riemann constants and a
/// default non-singular odd half period.
#[derive(Debug, Clone)]
pub struct PeriodFrame {
    pub branch: BranchData,
    /// Normalization: omega_j = sum_k i_mat[j][k] z^{k-1} / w dz has unit
    /// a_j-periods. Real up to quadrature error.
    pub i_mat: ComplexMatrix,
    pub omega: PeriodMatrix,
    /// Abel images of P_1, ..., P_{2g+2} (last entry is the point over
    /// infinity), from the closed-form table.
    pub half_periods: Vec<Vec<Complex64>>,
    /// Vector of Riemann constants.
    pub k: Vec<Complex64>,
    /// phi(P_3): the default non-singular odd half period.
    pub a_default: Vec<Complex64>,
}

fn zeros(g: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); g]
}

fn add_assign(a: &mut [Complex64], b: &[Complex64], s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

impl PeriodFrame {
    pub fn g(&self) -> usize {
        self.branch.g
    }

    /// Column tau^{(j)} of the period matrix, 1-based j.
    pub fn tau(&self, j: usize) -> Vec<Complex64> {
        self.omega.column(j - 1)
    }

    /// Half lattice vector e^{(j)}/2 ... actually e^{(j)} itself: the j-th
    /// unit vector (1-based).
    pub fn e(&self, j: usize) -> Vec<Complex64> {
        let mut v = zeros(self.g());
        v[j - 1] = Complex64::new(1.0, 0.0);
        v
    }

    /// Coefficients of the normalized differentials at z on the upper
    /// sheet: component j is sum_k i_mat[j][k] z^{k-1} / w(z), so that
    /// omega_j = holo_diff(z)[j] dz.
    pub fn holo_diff(&self, z: Complex64) -> Vec<Complex64> {
        let g = self.g();
        let w = w_eval(&SheetedPoint::upper(z), &self.branch);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut mono = zeros(g);
        for m in mono.iter_mut() {
            *m = pow / w;
            pow *= z;
        }
        self.i_mat.mul_vec(&mono)
    }
}

/// Reduce v modulo the lattice Z^g + Omega Z^g, bringing both coordinate
/// vectors into [-1/2, 1/2).
pub fn reduce_mod_lattice(v: &[Complex64], omega: &PeriodMatrix) -> Vec<Complex64> {
    let g = omega.g;
    // v = p + Omega q with p, q real: q from the imaginary part, then p.
    let mut q = vec![0.0; g];
    for i in 0..g {
        for j in 0..g {
            q[i] += omega.im_inv_entry(i, j) * v[j].im;
        }
    }
    let mut out = v.to_vec();
    for j in 0..g {
        let n = q[j].round();
        if n != 0.0 {
            let col = omega.column(j);
            for i in 0..g {
                out[i] -= n * col[i];
            }
        }
    }
    for i in 0..g {
        let n = out[i].re.round();
        out[i] -= n;
    }
    out
}

/// Distance of a - b from the period lattice.
pub fn lattice_distance(a: &[Complex64], b: &[Complex64], omega: &PeriodMatrix) -> f64 {
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    reduce_mod_lattice(&diff, omega)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

// Integral of the monomial vector (z^{j-1}/w)_{j=1..g} over a real segment
// on the boundary branch of w.
fn raw_segment(
    x: &[f64],
    a: f64,
    b: f64,
    g: usize,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>, CurveError> {
    Ok(integrate_segment_multi(
        |p, buf| monomials_over_w(p, x, buf),
        Complex64::new(a, 0.0),
        Complex64::new(b, 0.0),
        g,
        cfg,
    )?)
}

// Integral of the monomial vector from x_{2g+1} out to infinity along the
// real axis. Split at x_{2g+1} + L; the far part is compactified with
// z = b0 + u/(1-u), whose endpoint u = 1 leaves at worst an integrable
// inverse-square-root singularity for the top monomial.
fn raw_tail(x: &[f64], g: usize, cfg: &QuadratureConfig) -> Result<Vec<Complex64>, CurveError> {
    let xl = x[x.len() - 1];
    let span = (xl - x[0]).max(1.0);
    let b0 = xl + span;
    let mut total = raw_segment(x, xl, b0, g, cfg)?;
    let one = Complex64::new(1.0, 0.0);
    let far = integrate_segment_multi(
        |p, buf| {
            let omu = -p.dist(one); // 1 - u, exact near u = 1
            let z = b0 + p.z / omu;
            let mut w = Complex64::new(1.0, 0.0);
            for &xi in x {
                w *= sqrt_upper(z - xi);
            }
            let jac = 1.0 / (omu * omu);
            let mut pow = Complex64::new(1.0, 0.0);
            for slot in buf.iter_mut() {
                *slot = pow / w * jac;
                pow *= z;
            }
        },
        Complex64::new(0.0, 0.0),
        one,
        g,
        cfg,
    )?;
    for (t, f) in total.iter_mut().zip(far) {
        *t += f;
    }
    Ok(total)
}

/// Build the full period frame: normalization, period matrix, half-period
/// table (verified against direct Abel integration), Riemann constants and
/// the default odd half period.
pub fn build_frame(branch: &BranchData, cfg: &QuadratureConfig) -> Result<PeriodFrame, CurveError> {
    let g = branch.g;
    let x = &branch.x;

    // a-periods: a_k encircles the cut [x_{2k-1}, x_{2k}]; the loop is twice
    // the boundary-value integral from above.
    let mut a_mat = ComplexMatrix::zeros(g);
    for k in 0..g {
        let col = raw_segment(x, x[2 * k], x[2 * k + 1], g, cfg)?;
        for j in 0..g {
            a_mat[(j, k)] = 2.0 * col[j];
        }
    }
    let im_a = a_mat.data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let scale_a = a_mat.max_abs().max(1.0);
    if im_a > 1e-8 * scale_a {
        return Err(CurveError::FrameInvariantViolation {
            what: "a-periods must be real",
            magnitude: im_a,
        });
    }
    let i_mat = a_mat.invert()?;

    // Gap integrals of the normalized differentials; purely imaginary.
    let mut gaps: Vec<Vec<Complex64>> = Vec::with_capacity(g);
    for k in 0..g {
        let raw = raw_segment(x, x[2 * k + 1], x[2 * k + 2], g, cfg)?;
        let v = i_mat.mul_vec(&raw);
        let re = v.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let scale = v.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if re > 1e-8 * scale {
            return Err(CurveError::FrameInvariantViolation {
                what: "gap integrals must be purely imaginary",
                magnitude: re,
            });
        }
        gaps.push(v);
    }

    // Columns tau^{(k)} of the period matrix. The b_k cycle runs on the
    // first sheet from cut k to the last cut [x_{2g+1}, inf) and back on the
    // second sheet, which doubles the real-axis integral from x_{2k} to
    // x_{2g+1}; subtracting the trailing a-cycles removes the real
    // half-integer part and leaves tau^{(k)} = 2 (G_k + ... + G_g). The
    // cumulative Abel images then reproduce the half-period table mod the
    // lattice, since sum_{m<=k} G_m = (tau^{(1)} - tau^{(k+1)}) / 2.
    let mut tau: Vec<Vec<Complex64>> = vec![zeros(g); g];
    tau[g - 1] = gaps[g - 1].iter().map(|c| 2.0 * c).collect();
    for k in (0..g.saturating_sub(1)).rev() {
        let mut t = tau[k + 1].clone();
        add_assign(&mut t, &gaps[k], 2.0);
        tau[k] = t;
    }

    let mut omega_raw = ComplexMatrix::zeros(g);
    for j in 0..g {
        for i in 0..g {
            omega_raw[(i, j)] = tau[j][i];
        }
    }
    let scale_o = omega_raw.max_abs().max(1.0);
    let mut asym: f64 = 0.0;
    let mut re_max: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            re_max = re_max.max(omega_raw[(i, j)].re.abs());
            if j > i {
                asym = asym.max((omega_raw[(i, j)] - omega_raw[(j, i)]).norm());
            }
        }
    }
    if asym > 1e-8 * scale_o {
        return Err(CurveError::FrameInvariantViolation {
            what: "period matrix must be symmetric",
            magnitude: asym,
        });
    }
    if re_max > 1e-8 * scale_o {
        return Err(CurveError::FrameInvariantViolation {
            what: "period matrix must be purely imaginary",
            magnitude: re_max,
        });
    }
    // Symmetrize the quadrature noise away before the strict constructor.
    let mut omega_sym = ComplexMatrix::zeros(g);
    for i in 0..g {
        for j in 0..g {
            omega_sym[(i, j)] = 0.5 * (omega_raw[(i, j)] + omega_raw[(j, i)]);
        }
    }
    let omega = PeriodMatrix::new(omega_sym)?;

    // Closed-form half-period table; entries are Abel images of the branch
    // points P_1..P_{2g+2} along the real axis.
    let e = |j: usize| -> Vec<Complex64> {
        let mut v = zeros(g);
        v[j - 1] = Complex64::new(1.0, 0.0);
        v
    };
    let tau_col = |j: usize| -> Vec<Complex64> { omega.column(j - 1) };
    let half = |v: Vec<Complex64>| -> Vec<Complex64> { v.iter().map(|c| 0.5 * c).collect() };
    let mut half_periods: Vec<Vec<Complex64>> = Vec::with_capacity(2 * g + 2);
    half_periods.push(zeros(g));
    half_periods.push(half(e(1)));
    for k in 1..g {
        // P_{2k+1} = e1+..+ek + tau1 + tau_{k+1}, all halved
        let mut v = zeros(g);
        for j in 1..=k {
            let ej = e(j);
            for i in 0..g {
                v[i] += ej[i];
            }
        }
        let t1 = tau_col(1);
        let tk = tau_col(k + 1);
        for i in 0..g {
            v[i] += t1[i] + tk[i];
        }
        half_periods.push(half(v.clone()));
        // P_{2k+2} adds e_{k+1}
        let ek1 = e(k + 1);
        for i in 0..g {
            v[i] += ek1[i];
        }
        half_periods.push(half(v));
    }
    {
        // P_{2g+1} = (e1+..+eg + tau1)/2
        let mut v = zeros(g);
        for j in 1..=g {
            let ej = e(j);
            for i in 0..g {
                v[i] += ej[i];
            }
        }
        let t1 = tau_col(1);
        for i in 0..g {
            v[i] += t1[i];
        }
        half_periods.push(half(v));
    }
    half_periods.push(half(tau_col(1)));

    let k_vec = riemann_constants_closed_form(g, &omega);
    let a_default = half_periods[2].clone(); // phi(P_3)

    let frame = PeriodFrame {
        branch: branch.clone(),
        i_mat,
        omega,
        half_periods,
        k: k_vec,
        a_default,
    };

    // Verify the table against direct Abel integration through the upper
    // half plane (finite branch points) and the compactified tail (P at
    // infinity). This exercises a completely different set of paths than
    // the real-axis data the table was assembled from.
    for m in 0..(2 * g + 1) {
        let p = SheetedPoint::upper(Complex64::new(x[m], 0.0));
        let img = abel(&p, &frame, cfg)?;
        let d = lattice_distance(&img, &frame.half_periods[m], &frame.omega);
        if d > 1e-8 {
            return Err(CurveError::FrameInvariantViolation {
                what: "half-period table vs Abel integration",
                magnitude: d,
            });
        }
    }
    let img_inf = abel(&SheetedPoint::infinity(), &frame, cfg)?;
    let d = lattice_distance(&img_inf, &frame.half_periods[2 * g + 1], &frame.omega);
    if d > 1e-8 {
        return Err(CurveError::FrameInvariantViolation {
            what: "half period over infinity vs tail integration",
            magnitude: d,
        });
    }

    Ok(frame)
}

fn riemann_constants_closed_form(g: usize, omega: &PeriodMatrix) -> Vec<Complex64> {
    // K = 1/2 (g e1 + (g-1) e2 + ... + eg + g tau1 + tau2 + ... + taug)
    let mut v = zeros(g);
    for j in 1..=g {
        v[j - 1] += Complex64::new((g - j + 1) as f64, 0.0);
        let col = omega.column(j - 1);
        let weight = if j == 1 { g as f64 } else { 1.0 };
        for i in 0..g {
            v[i] += weight * col[i];
        }
    }
    v.iter().map(|c| 0.5 * c).collect()
}

/// Vector of Riemann constants, cross-checked against the sum of the odd
/// half periods phi(P_3) + phi(P_5) + ... + phi(P_{2g+1}).
pub fn riemann_constants(frame: &PeriodFrame) -> Result<Vec<Complex64>, CurveError> {
    let g = frame.g();
    let closed = riemann_constants_closed_form(g, &frame.omega);
    let mut summed = zeros(g);
    for j in 1..=g {
        let hp = &frame.half_periods[2 * j]; // phi(P_{2j+1})
        for i in 0..g {
            summed[i] += hp[i];
        }
    }
    let d = lattice_distance(&closed, &summed, &frame.omega);
    if d > 1e-8 {
        return Err(CurveError::MismatchError(d));
    }
    Ok(closed)
}

/// Non-singular odd half period phi(P_{2j+1}), validated against theta:
/// the value must vanish there and the gradient must not.
pub fn odd_half_period(frame: &PeriodFrame, j: usize) -> Result<Vec<Complex64>, CurveError> {
    let g = frame.g();
    assert!((1..=g).contains(&j), "j out of range");
    let a = reduce_mod_lattice(&frame.half_periods[2 * j], &frame.omega);
    let v = theta(&a, &frame.omega, 1e-12)?;
    if v.norm() >= 1e-8 {
        return Err(CurveError::FrameInvariantViolation {
            what: "theta must vanish at an odd half period",
            magnitude: v.norm(),
        });
    }
    let gr = theta_gradient(&a, &frame.omega, 1e-12)?;
    let gn = gr.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if gn < 1e-6 {
        return Err(CurveError::SingularHalfPeriod(gn));
    }
    Ok(a)
}

/// Abel-Jacobi map with base point P_1 = x_1, along a path through the
/// upper half plane: straight up from x_1, across at a safe height, then
/// straight to z. Any positive arch height gives the same value because the
/// integrand is holomorphic on the open upper half plane.
pub fn abel(
    p: &SheetedPoint,
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>, CurveError> {
    let g = frame.g();
    let x = &frame.branch.x;
    if p.at_infinity {
        // Integrate to x_{2g+1} and append the real tail out to infinity.
        let last = SheetedPoint::upper(Complex64::new(x[2 * g], 0.0));
        let mut img = abel(&last, frame, cfg)?;
        let tail = frame.i_mat.mul_vec(&raw_tail(x, g, cfg)?);
        for (a, t) in img.iter_mut().zip(tail) {
            *a += t;
        }
        return Ok(img);
    }
    assert!(p.z.im >= 0.0, "points live on the closed upper half plane");
    let raw = abel_raw_arch(x, g, p.z, None, cfg)?;
    let mut img = frame.i_mat.mul_vec(&raw);
    if p.sheet == Sheet::Minus {
        for c in img.iter_mut() {
            *c = -*c;
        }
    }
    Ok(img)
}

// Unnormalized Abel integral along the arch path, with an optional height
// override (used by the path-independence test).
pub(crate) fn abel_raw_arch(
    x: &[f64],
    g: usize,
    z: Complex64,
    height: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>, CurveError> {
    let span = (x[x.len() - 1] - x[0]).max(1.0);
    let h = height.unwrap_or(0.5 * span);
    let x1 = Complex64::new(x[0], 0.0);
    let top1 = Complex64::new(x[0], h);
    let top2 = Complex64::new(z.re, h);
    let waypoints = [x1, top1, top2, z];
    Ok(integrate_path_multi(
        |p, buf| monomials_over_w(p, x, buf),
        &waypoints,
        g,
        cfg,
    )?)
}

/// Moebius reduction for the odd-brane-count case: given 2g finite branch
/// points, send x_k (k even, 1-based) to infinity via z -> (z-x_j)/(z-x_k)
/// and return the remaining images as a sorted odd-length configuration.
pub fn moebius_reduce(x: &[f64], j: usize, k: usize) -> Result<BranchData, CurveError> {
    assert!(x.len() >= 4 && x.len() % 2 == 0, "need an even number of points");
    assert!(j >= 1 && j <= x.len() && k >= 1 && k <= x.len() && j != k);
    assert!(k % 2 == 0, "the point sent to infinity must have even index");
    let xj = x[j - 1];
    let xk = x[k - 1];
    let mut images: Vec<f64> = x
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k - 1)
        .map(|(_, &v)| (v - xj) / (v - xk))
        .collect();
    images.sort_by(|a, b| a.total_cmp(b));
    let min_sep = images
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::INFINITY, f64::min);
    if min_sep < 1e-12 {
        return Err(CurveError::DegenerateTransform(min_sep));
    }
    BranchData::new(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::agm_complete_k;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn frame_for(x: &[f64]) -> PeriodFrame {
        let branch = BranchData::new(x.to_vec()).unwrap();
        build_frame(&branch, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn branch_data_validation() {
        assert!(BranchData::new(vec![0.0, 1.0]).is_err());
        assert!(BranchData::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(BranchData::new(vec![0.0, 2.0, 1.0]).is_err());
        assert_eq!(BranchData::new(vec![0.0, 1.0, 2.0]).unwrap().g, 1);
        assert_eq!(BranchData::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap().g, 2);
    }

    #[test]
    fn w_vanishes_at_branch_points_and_is_positive_far_right() {
        let b = BranchData::new(vec![0.0, 1.0, 2.0]).unwrap();
        let at_x1 = w_eval(&SheetedPoint::upper(c(0.0, 0.0)), &b);
        assert_eq!(at_x1, c(0.0, 0.0));
        let right = w_eval(&SheetedPoint::upper(c(3.0, 0.0)), &b);
        assert!((right - c(6.0_f64.sqrt(), 0.0)).norm() < 1e-14, "got {right}");
        let lower = w_eval(&SheetedPoint::lower(c(3.0, 0.0)), &b);
        assert!((lower + right).norm() < 1e-14);
    }

    #[test]
    fn w_squares_to_the_polynomial() {
        let b = BranchData::new(vec![-1.0, 0.5, 2.0, 3.0, 5.0]).unwrap();
        for z in [c(0.3, 0.8), c(-2.0, 0.1), c(4.0, 2.5), c(1.0, 0.0)] {
            let w = w_eval(&SheetedPoint::upper(z), &b);
            let mut poly = c(1.0, 0.0);
            for &xi in &b.x {
                poly *= z - xi;
            }
            assert!((w * w - poly).norm() < 1e-12 * poly.norm().max(1.0), "z={z}");
        }
    }

    #[test]
    fn w_is_continuous_from_above() {
        let b = BranchData::new(vec![0.0, 1.0, 2.0]).unwrap();
        for re in [-0.5, 0.5, 1.5, 2.5] {
            let lim = w_eval(&SheetedPoint::upper(c(re, 1e-9)), &b);
            let on = w_eval(&SheetedPoint::upper(c(re, 0.0)), &b);
            assert!((lim - on).norm() < 1e-7, "re={re}: {lim} vs {on}");
        }
    }

    #[test]
    fn symmetric_genus_one_frame_has_period_i() {
        // cross ratio 1/2: the lemniscatic-symmetric case, tau = i
        let f = frame_for(&[0.0, 1.0, 2.0]);
        assert!((f.omega.omega[(0, 0)] - c(0.0, 1.0)).norm() < 1e-9, "{}", f.omega.omega[(0, 0)]);
    }

    #[test]
    fn genus_one_frame_matches_agm_ratio() {
        // branch points 0,1,3: m = 1/3, tau = i K(1-m)/K(m)
        let f = frame_for(&[0.0, 1.0, 3.0]);
        let expect = agm_complete_k(2.0 / 3.0) / agm_complete_k(1.0 / 3.0);
        assert!(
            (f.omega.omega[(0, 0)] - c(0.0, expect)).norm() < 1e-9,
            "omega {} vs i*{expect}",
            f.omega.omega[(0, 0)]
        );
    }

    #[test]
    fn genus_two_frames_build_cleanly() {
        for x in [vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![-2.0, -1.0, 0.0, 1.0, 3.0]] {
            let f = frame_for(&x);
            assert_eq!(f.g(), 2);
            // internal invariants already checked; spot-check table anchors
            assert!(f.half_periods[0].iter().all(|c| c.norm() == 0.0));
            let p2 = &f.half_periods[1];
            assert!((p2[0] - c(0.5, 0.0)).norm() < 1e-12 && p2[1].norm() < 1e-12);
            let last = &f.half_periods[5];
            let t1 = f.omega.column(0);
            for i in 0..2 {
                assert!((last[i] - 0.5 * t1[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn genus_three_frame_builds() {
        let f = frame_for(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(f.g(), 3);
    }

    #[test]
    fn abel_base_point_is_zero_and_table_holds() {
        let f = frame_for(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let cfg = QuadratureConfig::default();
        let at_base = abel(&SheetedPoint::upper(c(0.0, 0.0)), &f, &cfg).unwrap();
        assert!(at_base.iter().all(|v| v.norm() < 1e-10));
        let at_x3 = abel(&SheetedPoint::upper(c(2.0, 0.0)), &f, &cfg).unwrap();
        assert!(lattice_distance(&at_x3, &f.half_periods[2], &f.omega) < 1e-9);
    }

    #[test]
    fn abel_path_independence() {
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        let z = c(1.3, 0.7);
        let a = f.i_mat.mul_vec(&abel_raw_arch(&f.branch.x, 1, z, Some(1.0), &cfg).unwrap());
        let b = f.i_mat.mul_vec(&abel_raw_arch(&f.branch.x, 1, z, Some(3.7), &cfg).unwrap());
        assert!((a[0] - b[0]).norm() < 1e-9, "{} vs {}", a[0], b[0]);
    }

    #[test]
    fn abel_negates_on_the_lower_sheet() {
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        let z = c(0.4, 1.1);
        let up = abel(&SheetedPoint::upper(z), &f, &cfg).unwrap();
        let dn = abel(&SheetedPoint::lower(z), &f, &cfg).unwrap();
        assert!((up[0] + dn[0]).norm() < 1e-12);
    }

    #[test]
    fn riemann_constants_match_table_sum() {
        let f1 = frame_for(&[0.0, 1.0, 2.0]);
        let k1 = riemann_constants(&f1).unwrap();
        let t1 = f1.omega.column(0);
        assert!((k1[0] - 0.5 * (c(1.0, 0.0) + t1[0])).norm() < 1e-10);

        let f2 = frame_for(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let k2 = riemann_constants(&f2).unwrap();
        let ta = f2.omega.column(0);
        let tb = f2.omega.column(1);
        let expect0 = 0.5 * (c(2.0, 0.0) + 2.0 * ta[0] + tb[0]);
        let expect1 = 0.5 * (c(1.0, 0.0) + 2.0 * ta[1] + tb[1]);
        assert!((k2[0] - expect0).norm() < 1e-10);
        assert!((k2[1] - expect1).norm() < 1e-10);
    }

    #[test]
    fn odd_half_periods_are_nonsingular_theta_zeros() {
        let f1 = frame_for(&[0.0, 1.0, 2.0]);
        let a = odd_half_period(&f1, 1).unwrap();
        assert!(lattice_distance(&a, &f1.half_periods[2], &f1.omega) < 1e-10);

        let f2 = frame_for(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        odd_half_period(&f2, 1).unwrap();
        odd_half_period(&f2, 2).unwrap();
    }

    #[test]
    fn moebius_reduce_examples() {
        let out = moebius_reduce(&[0.0, 1.0, 2.0, 3.0], 1, 2).unwrap();
        assert_eq!(out.x.len(), 3);
        assert!(out.x.windows(2).all(|p| p[0] < p[1]));
        // x_j maps to 0
        assert!(out.x.iter().any(|&v| v.abs() < 1e-15));
        // direct images of {0,2,3} under z/(z-1): {0, 2, 1.5}
        let expect = [0.0, 1.5, 2.0];
        for (a, b) in out.x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn moebius_reduce_rejects_collisions() {
        // two images within 1e-12 of each other
        let eps = 1e-14;
        let res = moebius_reduce(&[0.0, 1.0, 1e7, 1e7 + eps], 1, 2);
        assert!(matches!(res, Err(CurveError::DegenerateTransform(_))));
    }
}
