//! Mirror-charge kernels on the polygon P_n (upper half plane in the
//! z-chart) with alternating boundary conditions on its sides.
//!
//! Every kernel is the angular form (1/2pi) d arg chi(u, v) of a mirror
//! ratio chi, minus a zero-mode correction once the polygon has nontrivial
//! cohomology (n >= 4). The ratio is a product of four factors: linear in u
//! for two branes, sin(i pi .) for three, and first order Riemann thetas
//! shifted by an odd non-singular half period for n = 2g+2. The derivative
//! d arg is always computed analytically as Im(d log chi); no argument
//! unwrapping enters kernel values.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{abel, BranchData, CurveError, PeriodFrame, SheetedPoint};
use crate::numerics::{integrate_path_multi, NumericsError, QuadratureConfig};
use crate::theta::{theta_with_gradient, ThetaError};

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("point pair is on (or too close to) the diagonal")]
    DiagonalSingularity,
    #[error("mirror-ratio denominator vanishes off the diagonal (|theta| = {magnitude:e})")]
    ZeroDenominator { magnitude: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which kernel: the two relevant index-set kernels S1/S2, or the two
/// space-filling reductions A1/A2 available for n = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    S1,
    S2,
    A1,
    A2,
}

impl std::str::FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Which::S1),
            "s2" => Ok(Which::S2),
            "a1" => Ok(Which::A1),
            "a2" => Ok(Which::A2),
            other => Err(format!("unknown kernel selector '{other}'")),
        }
    }
}

// ---------------------------------------------------------------------------
// Index-set algebra
// ---------------------------------------------------------------------------

/// Brane index sets I_1..I_n inside {1..m} and the derived alternating
/// intersections S1, S2.
#[derive(Debug, Clone)]
pub struct IndexSets {
    pub m: usize,
    pub i_sets: Vec<BTreeSet<usize>>,
    pub s1: BTreeSet<usize>,
    pub s2: BTreeSet<usize>,
}

/// S1 intersects the complements at odd positions and the sets at even
/// positions; S2 does the opposite. The same rule covers even and odd n.
pub fn relevant_sets(i_sets: &[BTreeSet<usize>], m: usize) -> IndexSets {
    let full: BTreeSet<usize> = (1..=m).collect();
    let mut s1 = full.clone();
    let mut s2 = full.clone();
    for (idx, set) in i_sets.iter().enumerate() {
        let complement: BTreeSet<usize> = full.difference(set).copied().collect();
        let odd_position = idx % 2 == 0; // I_1 is at idx 0
        if odd_position {
            s1 = s1.intersection(&complement).copied().collect();
            s2 = s2.intersection(set).copied().collect();
        } else {
            s1 = s1.intersection(set).copied().collect();
            s2 = s2.intersection(&complement).copied().collect();
        }
    }
    IndexSets { m, i_sets: i_sets.to_vec(), s1, s2 }
}

// ---------------------------------------------------------------------------
// Polygon sides
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A side of P_n, identified with the boundary interval C_k between
/// consecutive branch points on the real axis (C_1 opens to -infinity,
/// C_n to +infinity).
#[derive(Debug, Clone, Copy)]
pub struct BraneSide {
    pub n: usize,
    pub side_index: usize,
}

impl BraneSide {
    pub fn new(n: usize, side_index: usize) -> Self {
        assert!((1..=n).contains(&side_index));
        BraneSide { n, side_index }
    }

    pub fn parity(&self) -> Parity {
        if self.side_index % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Endpoints of C_k on the extended real line. `branch` is required for
    /// n >= 4; n = 2 uses the single corner 0, n = 3 the corners 0 and 1.
    pub fn interval(&self, branch: Option<&BranchData>) -> (f64, f64) {
        let corners: Vec<f64> = match self.n {
            2 => vec![0.0],
            3 => vec![0.0, 1.0],
            _ => branch.expect("n >= 4 needs branch data").x.clone(),
        };
        assert_eq!(corners.len(), self.n - 1);
        let lo = if self.side_index == 1 {
            f64::NEG_INFINITY
        } else {
            corners[self.side_index - 2]
        };
        let hi = if self.side_index == self.n {
            f64::INFINITY
        } else {
            corners[self.side_index - 1]
        };
        (lo, hi)
    }

    /// `count` sample points strictly inside the interval; infinite ends are
    /// clipped at a span-sized distance from the nearest corner.
    pub fn sample_points(&self, branch: Option<&BranchData>, count: usize) -> Vec<f64> {
        let (lo, hi) = self.interval(branch);
        let span = match self.n {
            2 => 1.0,
            3 => 1.0,
            _ => branch.unwrap().span(),
        };
        let (a, b) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo, hi),
            (false, true) => (hi - 2.0 * span, hi),
            (true, false) => (lo, lo + 2.0 * span),
            (false, false) => unreachable!("every side has at least one corner"),
        };
        (0..count)
            .map(|i| a + (b - a) * (i as f64 + 0.5) / count as f64)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Uniformizing maps
// ---------------------------------------------------------------------------

fn sqrt_upper(c: Complex64) -> Complex64 {
    let c = if c.im == 0.0 { Complex64::new(c.re, 0.0) } else { c };
    c.sqrt()
}

/// Two branes: u(z) = sqrt(z) maps the upper half plane to the first
/// quadrant.
pub fn map_u2(z: Complex64) -> Complex64 {
    sqrt_upper(z)
}

/// Three branes: u(z) = (1/2pi) int_1^z ds / sqrt(s(s-1)) maps the upper
/// half plane to the half strip {Re u > 0, 0 < Im u < 1/2}, with
/// u((1,inf)) on the positive real axis and u((0,1)) on [0, i/2].
pub fn map_u3(z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64, KernelError> {
    let one = Complex64::new(1.0, 0.0);
    if (z - one).norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = 2.0_f64.max(z.im);
    let waypoints = [one, Complex64::new(1.0, h), Complex64::new(z.re, h), z];
    let zero = Complex64::new(0.0, 0.0);
    let out = integrate_path_multi(
        |p, buf| {
            buf[0] = 1.0 / (TWO_PI * sqrt_upper(p.dist(zero)) * sqrt_upper(p.dist(one)));
        },
        &waypoints,
        1,
        cfg,
    )?;
    Ok(out[0])
}

// ---------------------------------------------------------------------------
// Mirror ratios as factor lists
// ---------------------------------------------------------------------------

// How a variable enters a factor argument: directly or conjugated, with a
// sign.
#[derive(Debug, Clone, Copy)]
enum Occ {
    Plain(f64),
    Conj(f64),
}

// Shift of the factor argument by the odd half period (theta case only):
// sign and whether the half period is conjugated.
#[derive(Debug, Clone, Copy)]
struct Shift {
    sign: f64,
    conj: bool,
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    sigma: f64, // +1 numerator, -1 denominator
    u: Occ,
    v: Occ,
    shift: Shift,
}

fn f(sigma: f64, u: Occ, v: Occ, sign: f64, conj: bool) -> Factor {
    Factor { sigma, u, v, shift: Shift { sign, conj } }
}

// chi_S1 = th(u-v+A) th(ub-v+Ab) / [th(u+v-Ab) th(ub+v-A)]
fn s1_factors() -> Vec<Factor> {
    use Occ::*;
    vec![
        f(1.0, Plain(1.0), Plain(-1.0), 1.0, false),
        f(1.0, Conj(1.0), Plain(-1.0), 1.0, true),
        f(-1.0, Plain(1.0), Plain(1.0), -1.0, true),
        f(-1.0, Conj(1.0), Plain(1.0), -1.0, false),
    ]
}

// chi_S2 = th(u-v+A) th(ub+v+Ab) / [th(u+v+Ab) th(ub-v+A)]
fn s2_factors() -> Vec<Factor> {
    use Occ::*;
    vec![
        f(1.0, Plain(1.0), Plain(-1.0), 1.0, false),
        f(1.0, Conj(1.0), Plain(1.0), 1.0, true),
        f(-1.0, Plain(1.0), Plain(1.0), 1.0, true),
        f(-1.0, Conj(1.0), Plain(-1.0), 1.0, false),
    ]
}

// (u-v)(u+v) / [(u+vb)(u-vb)]  -- reduces to d arg (z-w)/(z-wb)
fn a1_factors() -> Vec<Factor> {
    use Occ::*;
    vec![
        f(1.0, Plain(1.0), Plain(-1.0), 0.0, false),
        f(1.0, Plain(1.0), Plain(1.0), 0.0, false),
        f(-1.0, Plain(1.0), Conj(1.0), 0.0, false),
        f(-1.0, Plain(1.0), Conj(-1.0), 0.0, false),
    ]
}

// (u-v)(u+v) / [(ub-v)(ub+v)]  -- reduces to d arg (z-w)/(zb-w)
fn a2_factors() -> Vec<Factor> {
    use Occ::*;
    vec![
        f(1.0, Plain(1.0), Plain(-1.0), 0.0, false),
        f(1.0, Plain(1.0), Plain(1.0), 0.0, false),
        f(-1.0, Conj(1.0), Plain(-1.0), 0.0, false),
        f(-1.0, Conj(1.0), Plain(1.0), 0.0, false),
    ]
}

// The sine-based maps for three branes swap the S1/S2 factor patterns
// relative to two branes, because the odd sides move from the image of
// z < 0 alone to the images of z < 0 and z > 1.
fn factors(which: Which, n: usize) -> Vec<Factor> {
    match (which, n) {
        (Which::A1, 2) => a1_factors(),
        (Which::A2, 2) => a2_factors(),
        (Which::A1 | Which::A2, _) => panic!("A1/A2 exist only for n = 2"),
        (Which::S1, 3) => s2_factors(),
        (Which::S2, 3) => s1_factors(),
        (Which::S1, _) => s1_factors(),
        (Which::S2, _) => s2_factors(),
    }
}

fn occ_apply(occ: Occ, x: &[Complex64], out: &mut [Complex64]) {
    match occ {
        Occ::Plain(s) => {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += s * xi;
            }
        }
        Occ::Conj(s) => {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += s * xi.conj();
            }
        }
    }
}

// Argument vector of one factor.
fn factor_arg(
    fac: &Factor,
    u: &[Complex64],
    v: &[Complex64],
    a: Option<&[Complex64]>,
) -> Vec<Complex64> {
    let g = u.len();
    let mut arg = vec![Complex64::new(0.0, 0.0); g];
    occ_apply(fac.u, u, &mut arg);
    occ_apply(fac.v, v, &mut arg);
    if let Some(a) = a {
        for (o, ai) in arg.iter_mut().zip(a) {
            let shifted = if fac.shift.conj { ai.conj() } else { *ai };
            *o += fac.shift.sign * shifted;
        }
    }
    arg
}

// Value and logarithmic derivative (per argument component) of one factor
// base function.
fn factor_value_dlog(
    n: usize,
    frame: Option<&PeriodFrame>,
    arg: &[Complex64],
) -> Result<(Complex64, Vec<Complex64>), KernelError> {
    match n {
        2 => Ok((arg[0], vec![1.0 / arg[0]])),
        3 => {
            let x = Complex64::new(0.0, PI) * arg[0];
            let val = x.sin();
            Ok((val, vec![Complex64::new(0.0, PI) * x.cos() / val]))
        }
        _ => {
            let frame = frame.expect("theta factors need a frame");
            let (val, grad) = theta_with_gradient(arg, &frame.omega, 1e-13)?;
            let dlog = grad.iter().map(|gj| gj / val).collect();
            Ok((val, dlog))
        }
    }
}

/// The complex mirror ratio chi(u, v) from its factor list. For n >= 4 the
/// half period is `frame.a_default` unless `a_override` is given.
pub fn ratio_uv(
    u: &[Complex64],
    v: &[Complex64],
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
    a_override: Option<&[Complex64]>,
) -> Result<Complex64, KernelError> {
    let a_store;
    let a: Option<&[Complex64]> = if n >= 4 {
        match a_override {
            Some(a) => Some(a),
            None => {
                a_store = frame.expect("theta ratios need a frame").a_default.clone();
                Some(&a_store)
            }
        }
    } else {
        None
    };
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    let mut den_min = f64::INFINITY;
    for fac in factors(which, n) {
        let arg = factor_arg(&fac, u, v, a);
        let (val, _) = factor_value_dlog(n, frame, &arg)?;
        if fac.sigma > 0.0 {
            num *= val;
        } else {
            den *= val;
            if n >= 4 {
                // normalize away the quasi-periodic growth exp(pi y Y^-1 y)
                // before deciding the factor is a genuine theta zero
                let om = &frame.unwrap().omega;
                let g = arg.len();
                let mut q = 0.0;
                for i in 0..g {
                    for j in 0..g {
                        q += arg[i].im * om.im_inv_entry(i, j) * arg[j].im;
                    }
                }
                den_min = den_min.min(val.norm() * (-PI * q).exp());
            }
        }
    }
    if n >= 4 && den_min < 1e-10 {
        return Err(KernelError::ZeroDenominator { magnitude: den_min });
    }
    Ok(num / den)
}

/// Generalized angle: psi = arg chi, single determination in (-pi, pi].
pub fn psi_uv(
    u: &[Complex64],
    v: &[Complex64],
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
) -> Result<f64, KernelError> {
    Ok(ratio_uv(u, v, which, n, frame, None)?.arg())
}

/// Two-brane mirror ratio in the u-chart.
pub fn mirror2(u: Complex64, v: Complex64, which: Which) -> Result<Complex64, KernelError> {
    if (u - v).norm() < 1e-9 {
        return Err(KernelError::DiagonalSingularity);
    }
    ratio_uv(&[u], &[v], which, 2, None, None)
}

/// Three-brane mirror ratio in the strip chart.
pub fn mirror3(u: Complex64, v: Complex64, which: Which) -> Result<Complex64, KernelError> {
    if (u - v).norm() < 1e-9 {
        return Err(KernelError::DiagonalSingularity);
    }
    ratio_uv(&[u], &[v], which, 3, None, None)
}

/// Hyperelliptic mirror ratio at a pair of polygon points.
pub fn mirror_g(
    p: &SheetedPoint,
    q: &SheetedPoint,
    which: Which,
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
) -> Result<Complex64, KernelError> {
    if (p.z - q.z).norm() < 1e-9 {
        return Err(KernelError::DiagonalSingularity);
    }
    let u = abel(p, frame, cfg)?;
    let v = abel(q, frame, cfg)?;
    ratio_uv(&u, &v, which, 2 * frame.g() + 2, Some(frame), None)
}

// ---------------------------------------------------------------------------
// Kernel forms
// ---------------------------------------------------------------------------

/// Value of a kernel 1-form at a point pair: the real form is
/// 2 Re(aQ dz_Q) + 2 Re(aP dz_P).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelForm {
    pub a_q: Complex64,
    pub a_p: Complex64,
}

impl KernelForm {
    pub fn zero() -> Self {
        KernelForm { a_q: Complex64::new(0.0, 0.0), a_p: Complex64::new(0.0, 0.0) }
    }

    pub fn sub(&self, other: &KernelForm) -> KernelForm {
        KernelForm { a_q: self.a_q - other.a_q, a_p: self.a_p - other.a_p }
    }
}

/// A polygon point together with its chart image u and the derivative
/// du_j/dz, ready for kernel assembly. Computing this once per point lets
/// grid and suite loops reuse the quadrature-heavy Abel map.
#[derive(Debug, Clone)]
pub struct MappedPoint {
    pub z: Complex64,
    pub u: Vec<Complex64>,
    pub du: Vec<Complex64>,
}

/// Chart data for a point: u2/u3 closed forms for n = 2, 3; the Abel map
/// and normalized differentials for n = 2g+2.
pub fn map_point(
    p: &SheetedPoint,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<MappedPoint, KernelError> {
    match n {
        2 => {
            let u = map_u2(p.z);
            Ok(MappedPoint { z: p.z, u: vec![u], du: vec![1.0 / (2.0 * u)] })
        }
        3 => {
            let u = map_u3(p.z, cfg)?;
            let w3 = sqrt_upper(p.z) * sqrt_upper(p.z - 1.0);
            Ok(MappedPoint { z: p.z, u: vec![u], du: vec![1.0 / (TWO_PI * w3)] })
        }
        _ => {
            let frame = frame.expect("n >= 4 needs a frame");
            assert_eq!(n, 2 * frame.g() + 2, "n must match the frame genus");
            let u = abel(p, frame, cfg)?;
            let du = frame.holo_diff(p.z);
            Ok(MappedPoint { z: p.z, u, du })
        }
    }
}

/// Zero-mode correction of Theorem-4 kernels, with the full multiplicity
/// housed in O = 4 (Im Omega)^{-1}:
/// S1: Im phi_i(Q) O_{ij} d Re phi_j(P); S2 swaps the roles of P and Q.
pub fn zero_mode_mapped(
    q: &MappedPoint,
    p: &MappedPoint,
    which: Which,
    frame: &PeriodFrame,
) -> KernelForm {
    let g = frame.g();
    let (src, tgt) = match which {
        Which::S1 => (q, p),
        Which::S2 => (p, q),
        _ => return KernelForm::zero(),
    };
    let mut coeff = Complex64::new(0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            // d Re phi_j = 2 Re((du_j / 2) dz)
            coeff += src.u[i].im * 4.0 * frame.omega.im_inv_entry(i, j) * tgt.du[j] * 0.5;
        }
    }
    match which {
        Which::S1 => KernelForm { a_q: Complex64::new(0.0, 0.0), a_p: coeff },
        Which::S2 => KernelForm { a_q: coeff, a_p: Complex64::new(0.0, 0.0) },
        _ => unreachable!(),
    }
}

pub fn zero_mode_term(
    q: &SheetedPoint,
    p: &SheetedPoint,
    which: Which,
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
) -> Result<KernelForm, KernelError> {
    let n = 2 * frame.g() + 2;
    let mq = map_point(q, n, Some(frame), cfg)?;
    let mp = map_point(p, n, Some(frame), cfg)?;
    Ok(zero_mode_mapped(&mq, &mp, which, frame))
}

/// Kernel assembly from pre-mapped points. The angular part is
/// (1/2pi) Im(d log chi); writing d log chi = L_P dz_P + M_P dzb_P +
/// L_Q dz_Q + M_Q dzb_Q, the doubled-real coefficients are
/// a = (L - conj(M)) / (4 pi i) in each variable.
pub fn kernel_mapped(
    q: &MappedPoint,
    p: &MappedPoint,
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
) -> Result<KernelForm, KernelError> {
    let a_store;
    let a: Option<&[Complex64]> = if n >= 4 {
        a_store = frame.expect("theta kernels need a frame").a_default.clone();
        Some(&a_store)
    } else {
        None
    };
    let zero = Complex64::new(0.0, 0.0);
    let (mut l_p, mut m_p, mut l_q, mut m_q) = (zero, zero, zero, zero);
    for fac in factors(which, n) {
        let arg = factor_arg(&fac, &p.u, &q.u, a);
        let (_, dlog) = factor_value_dlog(n, frame, &arg)?;
        match fac.u {
            Occ::Plain(s) => {
                for (dl, du) in dlog.iter().zip(&p.du) {
                    l_p += fac.sigma * s * dl * du;
                }
            }
            Occ::Conj(s) => {
                for (dl, du) in dlog.iter().zip(&p.du) {
                    m_p += fac.sigma * s * dl * du.conj();
                }
            }
        }
        match fac.v {
            Occ::Plain(s) => {
                for (dl, dv) in dlog.iter().zip(&q.du) {
                    l_q += fac.sigma * s * dl * dv;
                }
            }
            Occ::Conj(s) => {
                for (dl, dv) in dlog.iter().zip(&q.du) {
                    m_q += fac.sigma * s * dl * dv.conj();
                }
            }
        }
    }
    let four_pi_i = Complex64::new(0.0, 4.0 * PI);
    let mut form = KernelForm {
        a_q: (l_q - m_q.conj()) / four_pi_i,
        a_p: (l_p - m_p.conj()) / four_pi_i,
    };
    if n >= 4 && matches!(which, Which::S1 | Which::S2) {
        let frame = frame.unwrap();
        form = form.sub(&zero_mode_mapped(q, p, which, frame));
    }
    Ok(form)
}

/// The superpropagator kernel theta(Q, P) at a point pair.
pub fn kernel(
    q: &SheetedPoint,
    p: &SheetedPoint,
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<KernelForm, KernelError> {
    if (q.z - p.z).norm() < 1e-9 {
        return Err(KernelError::DiagonalSingularity);
    }
    let mq = map_point(q, n, frame, cfg)?;
    let mp = map_point(p, n, frame, cfg)?;
    kernel_mapped(&mq, &mp, which, n, frame)
}

/// Difference between the kernel's angular coefficients and the pure
/// diagonal singularity (1/2pi) d arg(z_P - z_Q), for a sequence of P
/// approaching Q. The remainder must stay bounded.
pub fn near_diagonal_check(
    q: &SheetedPoint,
    ps: &[SheetedPoint],
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, KernelError> {
    let mq = map_point(q, n, frame, cfg)?;
    let four_pi_i = Complex64::new(0.0, 4.0 * PI);
    let mut out = Vec::with_capacity(ps.len());
    for p in ps {
        let mp = map_point(p, n, frame, cfg)?;
        let form = kernel_mapped(&mq, &mp, which, n, frame)?;
        let s = 1.0 / (four_pi_i * (p.z - q.z));
        out.push((form.a_p - s).norm().max((form.a_q + s).norm()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

fn wrap_mod_2pi(x: f64) -> f64 {
    let mut y = x % TWO_PI;
    if y > PI {
        y -= TWO_PI;
    }
    if y < -PI {
        y += TWO_PI;
    }
    y.abs()
}

fn conj_vec(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|c| c.conj()).collect()
}

fn neg_conj_vec(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|c| -c.conj()).collect()
}

/// Residuals of the full reflection list for one (u, v) pair: the mirror
/// map is odd under each polygon-side reflection, with the lattice-shifted
/// reflections picking up 8 pi Re v_1 (and 8 pi Re v_j) corrections.
pub fn reflection_residuals(
    u: &[Complex64],
    v: &[Complex64],
    which: Which,
    frame: &PeriodFrame,
) -> Result<Vec<f64>, KernelError> {
    let g = frame.g();
    let n = 2 * g + 2;
    let psi = |uu: &[Complex64], vv: &[Complex64]| psi_uv(uu, vv, which, n, Some(frame));
    let base = psi(u, v)?;
    let tau1 = frame.omega.column(0);
    let mut expect: Vec<f64> = Vec::new();
    let mut got: Vec<f64> = Vec::new();

    let mut push = |lhs: f64, rhs: f64| {
        expect.push(lhs);
        got.push(rhs);
    };

    match which {
        Which::S2 => {
            push(base, -psi(&conj_vec(u), v)?);
            push(base, -psi(u, &neg_conj_vec(v))?);
            let mut tu = conj_vec(u);
            for i in 0..g {
                tu[i] += tau1[i];
            }
            push(base, -psi(&tu, v)? + 8.0 * PI * v[0].re);
            let mut rv = neg_conj_vec(v);
            rv[0] += 1.0;
            push(base, -psi(u, &rv)?);
            for j in 2..=g {
                let tauj = frame.omega.column(j - 1);
                let mut tu = conj_vec(u);
                for i in 0..g {
                    tu[i] += tau1[i] + tauj[i];
                }
                push(base, -psi(&tu, v)? + 8.0 * PI * v[0].re + 8.0 * PI * v[j - 1].re);
                let mut rv = neg_conj_vec(v);
                for e in rv.iter_mut().take(j) {
                    *e += 1.0;
                }
                push(base, -psi(u, &rv)?);
            }
        }
        Which::S1 => {
            push(base, -psi(u, &conj_vec(v))?);
            push(base, -psi(&neg_conj_vec(u), v)?);
            let mut tv = conj_vec(v);
            for i in 0..g {
                tv[i] += tau1[i];
            }
            push(base, -psi(u, &tv)? + 8.0 * PI * u[0].re);
            let mut ru = neg_conj_vec(u);
            ru[0] += 1.0;
            push(base, -psi(&ru, v)?);
            for j in 2..=g {
                let tauj = frame.omega.column(j - 1);
                let mut tv = conj_vec(v);
                for i in 0..g {
                    tv[i] += tau1[i] + tauj[i];
                }
                push(base, -psi(u, &tv)? + 8.0 * PI * u[0].re + 8.0 * PI * u[j - 1].re);
                let mut ru = neg_conj_vec(u);
                for e in ru.iter_mut().take(j) {
                    *e += 1.0;
                }
                push(base, -psi(&ru, v)?);
            }
        }
        _ => panic!("reflections are stated for S1/S2 only"),
    }
    Ok(expect
        .iter()
        .zip(&got)
        .map(|(a, b)| wrap_mod_2pi(a - b))
        .collect())
}

// Seeded interior points of the chart, kept a safe distance above the
// boundary so partner points never collide with side samples.
fn random_interior(
    n: usize,
    frame: Option<&PeriodFrame>,
    count: usize,
    rng: &mut impl rand::Rng,
) -> Vec<SheetedPoint> {
    let (lo, hi, span) = match frame {
        Some(f) => {
            let x = &f.branch.x;
            (x[0], x[x.len() - 1], f.branch.span())
        }
        None => (0.0, if n == 2 { 0.0 } else { 1.0 }, 1.0),
    };
    (0..count)
        .map(|_| {
            let re = rng.gen_range((lo - span)..(hi + span));
            let im = rng.gen_range((0.1 * span)..(1.5 * span));
            SheetedPoint::upper(Complex64::new(re, im))
        })
        .collect()
}

/// Max boundary-condition residual of the S1/S2 kernel: the P pullback must
/// vanish on the sides of one parity (odd for S1, even for S2) and the Q
/// pullback on the sides of the other, each tested against random interior
/// partner points.
pub fn boundary_suite_residual(
    n: usize,
    which: Which,
    frame: Option<&PeriodFrame>,
    pts_per_side: usize,
    partner_count: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<f64, KernelError> {
    use rand::SeedableRng;
    let p_parity = match which {
        Which::S1 => Parity::Odd,
        Which::S2 => Parity::Even,
        _ => panic!("boundary conditions are stated for S1/S2 only"),
    };
    let branch = frame.map(|f| &f.branch);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let partners: Vec<MappedPoint> = random_interior(n, frame, partner_count, &mut rng)
        .iter()
        .map(|p| map_point(p, n, frame, cfg))
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let side = BraneSide::new(n, k);
        let side_pts: Vec<MappedPoint> = side
            .sample_points(branch, pts_per_side)
            .iter()
            .map(|&x| map_point(&SheetedPoint::upper(Complex64::new(x, 0.0)), n, frame, cfg))
            .collect::<Result<_, _>>()?;
        for sp in &side_pts {
            for partner in &partners {
                if side.parity() == p_parity {
                    let form = kernel_mapped(partner, sp, which, n, frame)?;
                    worst = worst.max(form.a_q.norm()).max(form.a_p.re.abs());
                } else {
                    let form = kernel_mapped(sp, partner, which, n, frame)?;
                    worst = worst.max(form.a_p.norm()).max(form.a_q.re.abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Max residual of the swap antisymmetry theta_S1(Q, P) = theta_S2(P, Q)
/// over random interior pairs.
pub fn swap_suite_residual(
    n: usize,
    frame: Option<&PeriodFrame>,
    pair_count: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<f64, KernelError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts = random_interior(n, frame, 2 * pair_count, &mut rng);
    let mapped: Vec<MappedPoint> = pts
        .iter()
        .map(|p| map_point(p, n, frame, cfg))
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for pair in mapped.chunks_exact(2) {
        let (q, p) = (&pair[0], &pair[1]);
        let k1 = kernel_mapped(q, p, Which::S1, n, frame)?;
        let k2 = kernel_mapped(p, q, Which::S2, n, frame)?;
        worst = worst.max((k1.a_q - k2.a_p).norm()).max((k1.a_p - k2.a_q).norm());
    }
    Ok(worst)
}

/// Max residual of the full reflection list over random argument pairs
/// (u, v) drawn near the fundamental domain.
pub fn reflection_suite_max(
    frame: &PeriodFrame,
    which: Which,
    pair_count: usize,
    seed: u64,
) -> Result<f64, KernelError> {
    use rand::{Rng, SeedableRng};
    let g = frame.g();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
        (0..g)
            .map(|_| Complex64::new(rng.gen_range(-0.45..0.45), rng.gen_range(-0.45..0.45)))
            .collect()
    };
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < pair_count {
        attempts += 1;
        assert!(attempts < 10 * pair_count, "too many singular draws");
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        match reflection_residuals(&u, &v, which, frame) {
            Ok(res) => {
                worst = worst.max(res.into_iter().fold(0.0, f64::max));
                done += 1;
            }
            // a draw can land on the theta zero set; redraw
            Err(KernelError::ZeroDenominator { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}

/// Off-diagonal floor of |chi| over a grid of point pairs, and the value at
/// a near-diagonal pair for comparison. The ratio vanishes only as the pair
/// approaches the diagonal, so the floor must dominate the near value.
pub fn zero_set_probe(
    frame: &PeriodFrame,
    which: Which,
    grid: usize,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), KernelError> {
    let n = 2 * frame.g() + 2;
    let x = &frame.branch.x;
    let span = frame.branch.span();
    let (lo, hi) = (x[0] - 0.5 * span, x[x.len() - 1] + 0.5 * span);
    let zs: Vec<Complex64> = (0..grid)
        .map(|i| {
            let t = (i as f64 + 0.5) / grid as f64;
            // slanted sweep through the chart; incommensurate slopes keep
            // the points pairwise distinct
            let im = span * (0.15 + 0.9 * ((0.37 + 2.417 * t) % 1.0));
            Complex64::new(lo + (hi - lo) * t, im)
        })
        .collect();
    let us: Vec<Vec<Complex64>> = zs
        .iter()
        .map(|z| abel(&SheetedPoint::upper(*z), frame, cfg))
        .collect::<Result<_, _>>()?;
    let mut min_off = f64::INFINITY;
    for (i, u) in us.iter().enumerate() {
        for (j, v) in us.iter().enumerate() {
            if i == j {
                continue;
            }
            min_off = min_off.min(ratio_uv(u, v, which, n, Some(frame), None)?.norm());
        }
    }
    let mid = grid / 2;
    let v = abel(
        &SheetedPoint::upper(zs[mid] + Complex64::new(1e-5 * span, 0.0)),
        frame,
        cfg,
    )?;
    let near = ratio_uv(&us[mid], &v, which, n, Some(frame), None)?.norm();
    Ok((min_off, near))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_frame;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    fn frame_for(x: &[f64]) -> PeriodFrame {
        let branch = BranchData::new(x.to_vec()).unwrap();
        build_frame(&branch, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn relevant_sets_examples() {
        let r = relevant_sets(&[set(&[1, 2]), set(&[2, 3])], 3);
        assert_eq!(r.s1, set(&[3]));
        assert_eq!(r.s2, set(&[1]));

        let r = relevant_sets(&[set(&[1, 2]), set(&[2, 3]), set(&[3, 4])], 4);
        assert!(r.s1.is_empty());
        assert!(r.s2.is_empty());

        // all equal sets at even n: I^c cap I forces emptiness
        let r = relevant_sets(&[set(&[1]), set(&[1])], 2);
        assert!(r.s1.is_empty());
        assert!(r.s2.is_empty());
    }

    #[test]
    fn side_intervals_and_parity() {
        let s1 = BraneSide::new(2, 1);
        assert_eq!(s1.parity(), Parity::Odd);
        assert_eq!(s1.interval(None), (f64::NEG_INFINITY, 0.0));
        assert_eq!(BraneSide::new(2, 2).interval(None), (0.0, f64::INFINITY));
        assert_eq!(BraneSide::new(3, 2).interval(None), (0.0, 1.0));
        let b = BranchData::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(BraneSide::new(4, 3).interval(Some(&b)), (1.0, 2.0));
        assert_eq!(BraneSide::new(4, 4).interval(Some(&b)), (2.0, f64::INFINITY));
        for p in BraneSide::new(4, 1).sample_points(Some(&b), 8) {
            assert!(p < 0.0);
        }
    }

    #[test]
    fn map_u2_and_u3_anchors() {
        assert!((map_u2(c(-1.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
        let cfg = QuadratureConfig::default();
        assert_eq!(map_u3(c(1.0, 0.0), &cfg).unwrap(), c(0.0, 0.0));
        let at0 = map_u3(c(0.0, 0.0), &cfg).unwrap();
        assert!((at0 - c(0.0, 0.5)).norm() < 1e-10, "u3(0) = {at0}");
        let right = map_u3(c(5.0, 0.0), &cfg).unwrap();
        assert!(right.re > 0.0 && right.im.abs() < 1e-10, "u3(5) = {right}");
        let left = map_u3(c(-2.0, 0.0), &cfg).unwrap();
        assert!(left.re > 0.0 && (left.im - 0.5).abs() < 1e-10, "u3(-2) = {left}");
    }

    #[test]
    fn mirror2_boundary_values() {
        // u imaginary: P on the odd side, ratio is 1
        let r = mirror2(c(0.0, 0.7), c(0.4, 0.3), Which::S1).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-14);
        // v real: Q on the even side, ratio is positive real
        let r = mirror2(c(0.3, 0.8), c(0.9, 0.0), Which::S1).unwrap();
        assert!(r.im.abs() < 1e-14 && r.re > 0.0);
        assert!(matches!(
            mirror2(c(0.5, 0.5), c(0.5, 0.5), Which::S1),
            Err(KernelError::DiagonalSingularity)
        ));
    }

    #[test]
    fn mirror_swap_is_an_argument_identity() {
        let (u, v) = (c(0.5, 0.5), c(1.0, 0.2));
        for n in [2usize, 3] {
            let mir = |a, b, w| if n == 2 { mirror2(a, b, w) } else { mirror3(a, b, w) };
            let lhs = mir(u, v, Which::S2).unwrap().arg();
            let rhs = mir(v, u, Which::S1).unwrap().arg();
            assert!(wrap_mod_2pi(lhs - rhs) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn mirror3_boundary_values() {
        // u real: P on the bottom odd side for S1
        let r = mirror3(c(0.8, 0.0), c(0.3, 0.2), Which::S1).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-12);
        // Im u = 1/2: the top odd side; each sine shifts by pi and signs cancel
        let r = mirror3(c(0.6, 0.5), c(0.3, 0.2), Which::S1).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kontsevich_reduction_n2_a1() {
        // theta_A1 in the u-chart must equal (1/2pi) d arg (z-w)/(z-wb) in z
        let cfg = QuadratureConfig::default();
        let z = c(0.7, 1.3);
        let w = c(-0.4, 0.6);
        let form = kernel(
            &SheetedPoint::upper(w),
            &SheetedPoint::upper(z),
            Which::A1,
            2,
            None,
            &cfg,
        )
        .unwrap();
        let four_pi_i = Complex64::new(0.0, 4.0 * PI);
        let a_p = (1.0 / (z - w) - 1.0 / (z - w.conj())) / four_pi_i;
        let a_q = (-1.0 / (z - w) - 1.0 / (z.conj() - w)) / four_pi_i;
        assert!((form.a_p - a_p).norm() < 1e-12, "{} vs {a_p}", form.a_p);
        assert!((form.a_q - a_q).norm() < 1e-12, "{} vs {a_q}", form.a_q);
    }

    #[test]
    fn closed_form_kernels_are_closed() {
        // curl of the P-part of the 1-form vanishes away from the diagonal
        let cfg = QuadratureConfig::default();
        let q = SheetedPoint::upper(c(-0.3, 0.9));
        let z0 = c(0.8, 0.7);
        let h = 1e-5;
        for (which, n) in [(Which::S1, 2usize), (Which::S2, 2), (Which::S1, 3)] {
            let ap = |z: Complex64| {
                kernel(&q, &SheetedPoint::upper(z), which, n, None, &cfg).unwrap().a_p
            };
            // F = 2 Re(aP dz): F_x = 2 Re aP, F_y = -2 Im aP
            let fy = |z| -2.0 * ap(z).im;
            let fx = |z| 2.0 * ap(z).re;
            let curl = (fy(z0 + h) - fy(z0 - h)) / (2.0 * h)
                - (fx(z0 + c(0.0, h)) - fx(z0 - c(0.0, h))) / (2.0 * h);
            assert!(curl.abs() < 1e-6, "which={which:?} n={n} curl={curl}");
        }
    }

    #[test]
    fn boundary_conditions_n2_n3() {
        let cfg = QuadratureConfig::default();
        let q = SheetedPoint::upper(c(0.4, 1.1));
        // n=2, S1: P on the odd side (z < 0)
        for zp in [-2.0, -0.5, -0.01] {
            let f = kernel(&q, &SheetedPoint::upper(c(zp, 0.0)), Which::S1, 2, None, &cfg)
                .unwrap();
            assert!(f.a_q.norm() < 1e-12, "aQ = {}", f.a_q);
            assert!(f.a_p.re.abs() < 1e-12, "Re aP = {}", f.a_p.re);
        }
        // n=2, S2: P on the even side (z > 0)
        for zp in [0.3, 1.7] {
            let f = kernel(&q, &SheetedPoint::upper(c(zp, 0.0)), Which::S2, 2, None, &cfg)
                .unwrap();
            assert!(f.a_q.norm() < 1e-12);
            assert!(f.a_p.re.abs() < 1e-12);
        }
        // n=3, S1: P on either odd side (z < 0 or z > 1)
        for zp in [-1.5, 2.5] {
            let f = kernel(&q, &SheetedPoint::upper(c(zp, 0.0)), Which::S1, 3, None, &cfg)
                .unwrap();
            assert!(f.a_q.norm() < 1e-10, "zp={zp} aQ={}", f.a_q);
            assert!(f.a_p.re.abs() < 1e-10, "zp={zp} Re aP={}", f.a_p.re);
        }
        // n=3, S1: Q on the even side (0 < z < 1)
        let p = SheetedPoint::upper(c(-0.8, 0.6));
        for zq in [0.2, 0.7] {
            let f = kernel(&SheetedPoint::upper(c(zq, 0.0)), &p, Which::S1, 3, None, &cfg)
                .unwrap();
            assert!(f.a_p.norm() < 1e-10, "zq={zq} aP={}", f.a_p);
            assert!(f.a_q.re.abs() < 1e-10, "zq={zq} Re aQ={}", f.a_q.re);
        }
    }

    #[test]
    fn swap_antisymmetry_closed_forms() {
        let cfg = QuadratureConfig::default();
        let pairs = [
            (c(0.5, 0.8), c(-0.7, 1.2)),
            (c(2.0, 0.3), c(0.1, 0.05)),
            (c(-1.0, 2.0), c(3.0, 1.0)),
        ];
        for n in [2usize, 3] {
            for (zq, zp) in pairs {
                let q = SheetedPoint::upper(zq);
                let p = SheetedPoint::upper(zp);
                let k1 = kernel(&q, &p, Which::S1, n, None, &cfg).unwrap();
                let k2 = kernel(&p, &q, Which::S2, n, None, &cfg).unwrap();
                assert!((k1.a_q - k2.a_p).norm() < 1e-11, "n={n}");
                assert!((k1.a_p - k2.a_q).norm() < 1e-11, "n={n}");
            }
        }
    }

    #[test]
    fn zero_mode_examples() {
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        // g=1, Omega = i: O = 4
        assert!((4.0 * f.omega.im_inv_entry(0, 0) - 4.0).abs() < 1e-8);
        // Q on the first cut: phi(Q) real, S1 zero mode vanishes
        let q = SheetedPoint::upper(c(0.5, 0.0));
        let p = SheetedPoint::upper(c(0.3, 0.9));
        let z = zero_mode_term(&q, &p, Which::S1, &f, &cfg).unwrap();
        assert!(z.a_p.norm() < 1e-9 && z.a_q.norm() == 0.0);
        // generic Q: aQ stays exactly zero for S1
        let q = SheetedPoint::upper(c(1.4, 0.7));
        let z = zero_mode_term(&q, &p, Which::S1, &f, &cfg).unwrap();
        assert!(z.a_q.norm() == 0.0 && z.a_p.norm() > 0.0);
    }

    #[test]
    fn theta_kernel_boundary_conditions_n4() {
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        let q = SheetedPoint::upper(c(0.6, 0.9));
        // S1: P on odd sides C_1 (z<0) and C_3 (gap (1,2))
        for zp in [-0.8, 1.3, 1.9] {
            let form =
                kernel(&q, &SheetedPoint::upper(c(zp, 0.0)), Which::S1, 4, Some(&f), &cfg)
                    .unwrap();
            assert!(form.a_q.norm() < 1e-8, "zp={zp} aQ={}", form.a_q);
            assert!(form.a_p.re.abs() < 1e-8, "zp={zp} Re aP={}", form.a_p.re);
        }
        // S1: Q on even sides C_2 (cut (0,1)) and C_4 (z>2)
        let p = SheetedPoint::upper(c(-0.5, 1.2));
        for zq in [0.4, 2.8] {
            let form =
                kernel(&SheetedPoint::upper(c(zq, 0.0)), &p, Which::S1, 4, Some(&f), &cfg)
                    .unwrap();
            assert!(form.a_p.norm() < 1e-8, "zq={zq} aP={}", form.a_p);
            assert!(form.a_q.re.abs() < 1e-8, "zq={zq} Re aQ={}", form.a_q.re);
        }
        // S2: opposite parities
        for zp in [0.4, 2.8] {
            let form =
                kernel(&q, &SheetedPoint::upper(c(zp, 0.0)), Which::S2, 4, Some(&f), &cfg)
                    .unwrap();
            assert!(form.a_q.norm() < 1e-8, "S2 zp={zp} aQ={}", form.a_q);
            assert!(form.a_p.re.abs() < 1e-8, "S2 zp={zp} Re aP={}", form.a_p.re);
        }
    }

    #[test]
    fn theta_kernel_swap_antisymmetry() {
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        let q = SheetedPoint::upper(c(0.3, 0.8));
        let p = SheetedPoint::upper(c(1.6, 0.4));
        let k1 = kernel(&q, &p, Which::S1, 4, Some(&f), &cfg).unwrap();
        let k2 = kernel(&p, &q, Which::S2, 4, Some(&f), &cfg).unwrap();
        assert!((k1.a_q - k2.a_p).norm() < 1e-9, "{} vs {}", k1.a_q, k2.a_p);
        assert!((k1.a_p - k2.a_q).norm() < 1e-9);
    }

    #[test]
    fn theta_kernel_independent_of_half_period_choice() {
        let f = frame_for(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let mut f_alt = f.clone();
        f_alt.a_default = crate::curve::odd_half_period(&f, 2).unwrap();
        let cfg = QuadratureConfig::default();
        let q = SheetedPoint::upper(c(0.7, 0.9));
        let p = SheetedPoint::upper(c(2.4, 0.5));
        for which in [Which::S1, Which::S2] {
            let k1 = kernel(&q, &p, which, 6, Some(&f), &cfg).unwrap();
            let k2 = kernel(&q, &p, which, 6, Some(&f_alt), &cfg).unwrap();
            assert!((k1.a_q - k2.a_q).norm() < 1e-7, "{which:?} {} vs {}", k1.a_q, k2.a_q);
            assert!((k1.a_p - k2.a_p).norm() < 1e-7, "{which:?}");
        }
    }

    #[test]
    fn reflection_suite_genus_one_and_two() {
        for x in [vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0, 3.0, 4.0]] {
            let f = frame_for(&x);
            let g = f.g();
            let u: Vec<Complex64> = (0..g).map(|i| c(0.21 + 0.07 * i as f64, 0.33)).collect();
            let v: Vec<Complex64> = (0..g).map(|i| c(-0.12, 0.18 + 0.05 * i as f64)).collect();
            for which in [Which::S1, Which::S2] {
                let res = reflection_residuals(&u, &v, which, &f).unwrap();
                let max = res.iter().copied().fold(0.0, f64::max);
                assert!(max < 1e-7, "g={g} {which:?} residuals {res:?}");
            }
        }
    }

    #[test]
    fn near_diagonal_remainder_is_bounded() {
        let cfg = QuadratureConfig::default();
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let zq = c(0.8, 0.9);
        let q = SheetedPoint::upper(zq);
        let ps: Vec<SheetedPoint> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d| SheetedPoint::upper(zq + c(d, 0.7 * d)))
            .collect();
        for (which, n, fr) in [
            (Which::S1, 2usize, None),
            (Which::S1, 3, None),
            (Which::S1, 4, Some(&f)),
        ] {
            let res = near_diagonal_check(&q, &ps, which, n, fr, &cfg).unwrap();
            // smooth remainder: residuals bounded by the first, largest offset
            let cap = 10.0 * res[0].max(1.0);
            assert!(res.iter().all(|r| *r < cap), "n={n} residuals {res:?}");
            assert!(res[2] <= res[0] * 1.5 + 1e-9, "n={n} not settling: {res:?}");
        }
    }

    #[test]
    fn zero_set_only_near_diagonal_probe() {
        // coarse version of the dedicated acceptance probe
        let f = frame_for(&[0.0, 1.0, 2.0]);
        let cfg = QuadratureConfig::default();
        let zs: Vec<Complex64> =
            (0..8).map(|i| c(-1.0 + 0.55 * i as f64, 0.4 + 0.11 * i as f64)).collect();
        let us: Vec<Vec<Complex64>> = zs
            .iter()
            .map(|z| abel(&SheetedPoint::upper(*z), &f, &cfg).unwrap())
            .collect();
        let mut min_off = f64::INFINITY;
        for (i, u) in us.iter().enumerate() {
            for (j, v) in us.iter().enumerate() {
                if i == j {
                    continue;
                }
                let r = ratio_uv(u, v, Which::S1, 4, Some(&f), None).unwrap();
                min_off = min_off.min(r.norm());
            }
        }
        // near-diagonal pair for comparison
        let u = &us[3];
        let v = abel(&SheetedPoint::upper(zs[3] + c(1e-4, 0.0)), &f, &cfg).unwrap();
        let near = ratio_uv(u, &v, Which::S1, 4, Some(&f), None).unwrap().norm();
        assert!(min_off > 1e3 * near, "min_off={min_off} near={near}");
    }
}
