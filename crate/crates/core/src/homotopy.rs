//! The homotopy operator G as a quadrature operator, the projection onto
//! the harmonic zero modes, and the verification of the splitting
//! dG + Gd = I - P together with the cohomology bookkeeping behind it.
//!
//! All 2-D integrals run in the z-chart of the polygon (the upper half
//! plane). Tensor tanh-sinh grids cover the chart panel by panel, with the
//! panel edges on the branch points so the algebraic corner singularities
//! of the differentials sit exactly where the nodes cluster; unbounded
//! directions are compactified with t/(1-t) tail maps instead of being
//! truncated. The kernel's diagonal singularity is integrable, and is
//! handled by excising a small square around the evaluation point from the
//! tensor grid and integrating it exactly in polar coordinates, where the
//! radial measure cancels the 1/r growth.
//!
//! Orientation convention: interior wedge densities use dz ^ dzb =
//! -2i dx dy. With that choice G(df) = f and the zero-mode projection
//! fixes its modes. The closed-form value of int omega_j ^ conj(omega_k)
//! quoted for the bilinear check carries the opposite (boundary-symbol)
//! orientation, so that comparison flips the sign once, explicitly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::curve::{PeriodFrame, SheetedPoint};
use crate::kernels::{kernel_mapped, map_point, KernelError, MappedPoint, Parity, Which};
use crate::numerics::{de_fixed_nodes, de_fixed_nodes_unit, NumericsError, QuadratureConfig};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum HomotopyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

type Scalar = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;
type Coeff = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A differential form given by evaluators in the z-chart.
///
/// Degree 0: scalar value. Degree 1: complex coefficient b in the
/// doubled-real convention, the form being 2 Re(b dz). Degree 2: density
/// with respect to dx dy. Closed probes leave the analytic-derivative
/// slots empty.
#[derive(Clone)]
pub struct SampledForm {
    pub name: String,
    pub degree: u8,
    /// Side parity the form satisfies Dirichlet conditions on.
    pub vanishes_on: Option<Parity>,
    /// Bounding box [re0, re1, im0, im1] of the support; None covers the
    /// whole chart.
    pub support: Option<[f64; 4]>,
    f0: Option<Scalar>,
    f1: Option<Coeff>,
    f2: Option<Scalar>,
    /// Coefficient of d(degree-0 value), when known analytically.
    d_coeff: Option<Coeff>,
    /// Density of d(degree-1 form), when known analytically (None = closed).
    d_density: Option<Scalar>,
}

impl std::fmt::Debug for SampledForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledForm")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("support", &self.support)
            .finish()
    }
}

// Smooth compact bump profile: exp(1 - 1/(1 - s)) of s = |z-c|^2/R^2,
// identically zero for s >= 1. Returns (f, df/ds).
fn bump_profile(s: f64) -> (f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0);
    }
    let f = (1.0 - 1.0 / (1.0 - s)).exp();
    (f, -f / ((1.0 - s) * (1.0 - s)))
}

fn bump_value(z: Complex64, c: Complex64, r: f64) -> f64 {
    bump_profile((z - c).norm_sqr() / (r * r)).0
}

// Gradient (f_x, f_y) of the bump.
fn bump_grad(z: Complex64, c: Complex64, r: f64) -> (f64, f64) {
    let s = (z - c).norm_sqr() / (r * r);
    let (_, dfds) = bump_profile(s);
    let sx = 2.0 * (z.re - c.re) / (r * r);
    let sy = 2.0 * (z.im - c.im) / (r * r);
    (dfds * sx, dfds * sy)
}

fn support_box(c: Complex64, r: f64) -> [f64; 4] {
    [c.re - r, c.re + r, c.im - r, c.im + r]
}

impl SampledForm {
    pub fn value0(&self, z: Complex64) -> f64 {
        self.f0.as_ref().map_or(0.0, |f| f(z))
    }

    pub fn value1(&self, z: Complex64) -> Complex64 {
        self.f1.as_ref().map_or(Complex64::new(0.0, 0.0), |f| f(z))
    }

    pub fn value2(&self, z: Complex64) -> f64 {
        self.f2.as_ref().map_or(0.0, |f| f(z))
    }

    /// Smooth bump of the given center and radius, degree 0, with its
    /// analytic differential attached.
    pub fn bump(center: Complex64, radius: f64, name: &str) -> Self {
        let (c, r) = (center, radius);
        SampledForm {
            name: name.into(),
            degree: 0,
            vanishes_on: None,
            support: Some(support_box(c, r)),
            f0: Some(Arc::new(move |z| bump_value(z, c, r))),
            f1: None,
            f2: None,
            d_coeff: Some(Arc::new(move |z| {
                let (fx, fy) = bump_grad(z, c, r);
                Complex64::new(fx, -fy) * 0.5
            })),
            d_density: None,
        }
    }

    /// The exact one form df of a bump; closed by construction.
    pub fn exact_one_form(center: Complex64, radius: f64, name: &str) -> Self {
        let b = Self::bump(center, radius, "");
        SampledForm {
            name: name.into(),
            degree: 1,
            vanishes_on: None,
            support: b.support,
            f0: None,
            f1: b.d_coeff,
            f2: None,
            d_coeff: None,
            d_density: None,
        }
    }

    /// Harmonic zero mode: d Im phi_k for S1 (Dirichlet on even sides),
    /// d Re phi_k for S2 (Dirichlet on odd sides). k is 1-based.
    pub fn zero_mode(frame: &PeriodFrame, k: usize, which: Which, name: &str) -> Self {
        assert!((1..=frame.g()).contains(&k));
        let fr = frame.clone();
        let (coeff, parity): (Coeff, Parity) = match which {
            Which::S1 => (
                Arc::new(move |z| fr.holo_diff(z)[k - 1] * Complex64::new(0.0, -0.5)),
                Parity::Even,
            ),
            Which::S2 => {
                (Arc::new(move |z| fr.holo_diff(z)[k - 1] * 0.5), Parity::Odd)
            }
            _ => panic!("zero modes exist for S1/S2 only"),
        };
        SampledForm {
            name: name.into(),
            degree: 1,
            vanishes_on: Some(parity),
            support: None,
            f0: None,
            f1: Some(coeff),
            f2: None,
            d_coeff: None,
            d_density: None,
        }
    }

    /// Exact two form d(f dx) of a bump f; its density -f_y has zero total
    /// integral, as any exact compactly supported two form must.
    pub fn curl_bump(center: Complex64, radius: f64, name: &str) -> Self {
        let (c, r) = (center, radius);
        SampledForm {
            name: name.into(),
            degree: 2,
            vanishes_on: None,
            support: Some(support_box(c, r)),
            f0: None,
            f1: None,
            f2: Some(Arc::new(move |z| -bump_grad(z, c, r).1)),
            d_coeff: None,
            d_density: None,
        }
    }

    /// Degree-1 form from an explicit coefficient (used for projection
    /// outputs and custom probes). `d_density` of None marks it closed.
    pub fn one_form(name: &str, coeff: Coeff, support: Option<[f64; 4]>) -> Self {
        SampledForm {
            name: name.into(),
            degree: 1,
            vanishes_on: None,
            support,
            f0: None,
            f1: Some(coeff),
            f2: None,
            d_coeff: None,
            d_density: None,
        }
    }

    /// df as a standalone degree-1 form (degree-0 inputs only).
    pub fn differential(&self) -> Self {
        assert_eq!(self.degree, 0, "differential() is wired for degree-0 probes");
        let d = self.d_coeff.clone().expect("probe lacks an analytic differential");
        SampledForm {
            name: format!("d({})", self.name),
            degree: 1,
            vanishes_on: None,
            support: self.support,
            f0: None,
            f1: Some(d),
            f2: None,
            d_coeff: None,
            d_density: None,
        }
    }

    /// Density of the exterior derivative for degree-1 forms; None means
    /// closed.
    pub fn d_density(&self, z: Complex64) -> Option<f64> {
        self.d_density.as_ref().map(|f| f(z))
    }
}

// ---------------------------------------------------------------------------
// 2-D grids over the chart
// ---------------------------------------------------------------------------

fn corners_of(n: usize, frame: Option<&PeriodFrame>) -> Vec<f64> {
    match n {
        2 => vec![0.0],
        3 => vec![0.0, 1.0],
        _ => frame.expect("n >= 4 needs a frame").branch.x.clone(),
    }
}

fn chart_span(n: usize, frame: Option<&PeriodFrame>) -> f64 {
    let c = corners_of(n, frame);
    ((c[c.len() - 1] - c[0]).abs()).max(1.0)
}

// Tail nodes beyond this multiple of the span contribute below roundoff
// for every integrand in the crate (all decay at least like |z|^-2).
const TAIL_CUTOFF: f64 = 1e6;

// One quadrature axis: node/weight pairs from finite tanh-sinh panels
// between consecutive edges plus optional compactified tails.
fn axis_nodes(
    edges: &[f64],
    tail_left: Option<f64>,
    tail_right: Option<f64>,
    h: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in edges.windows(2) {
        if w[1] > w[0] {
            out.extend(de_fixed_nodes(w[0], w[1], h));
        }
    }
    let unit = de_fixed_nodes_unit(h);
    if let Some(scale) = tail_left {
        let a = edges[0];
        for &(t, comp, w) in &unit {
            let u = t / comp;
            if u > TAIL_CUTOFF {
                continue;
            }
            out.push((a - scale * u, w * scale / (comp * comp)));
        }
    }
    if let Some(scale) = tail_right {
        let b = edges[edges.len() - 1];
        for &(t, comp, w) in &unit {
            let u = t / comp;
            if u > TAIL_CUTOFF {
                continue;
            }
            out.push((b + scale * u, w * scale / (comp * comp)));
        }
    }
    out
}

fn insert_edge(edges: &mut Vec<f64>, v: f64) {
    if v > edges[0] && v < edges[edges.len() - 1] && edges.iter().all(|e| (e - v).abs() > 1e-12)
    {
        edges.push(v);
        edges.sort_by(f64::total_cmp);
    }
}

// Raw tensor grid over the chart (or the form's support box), with an
// optional square of half-side `s` around `exclude` removed exactly: the
// square edges become panel edges, and the nodes of the interior panels
// are dropped wholesale.
fn chart_grid(
    n: usize,
    frame: Option<&PeriodFrame>,
    support: Option<[f64; 4]>,
    exclude: Option<(Complex64, f64)>,
    h: f64,
) -> Vec<(Complex64, f64)> {
    let corners = corners_of(n, frame);
    let span = chart_span(n, frame);
    let (mut x_edges, x_tails, mut y_edges, y_tail) = match support {
        Some([x0, x1, y0, y1]) => {
            let mut xe = vec![x0, x1];
            for c in &corners {
                insert_edge(&mut xe, *c);
            }
            (xe, (None, None), vec![y0.max(0.0), y1], None)
        }
        None => {
            (corners.clone(), (Some(span), Some(span)), vec![0.0, span], Some(2.0 * span))
        }
    };
    let mut square = None;
    if let Some((c, s)) = exclude {
        insert_edge(&mut x_edges, c.re - s);
        insert_edge(&mut x_edges, c.re + s);
        insert_edge(&mut y_edges, c.im - s);
        insert_edge(&mut y_edges, c.im + s);
        square = Some((c, s));
    }
    let xs = axis_nodes(&x_edges, x_tails.0, x_tails.1, h);
    let ys = axis_nodes(&y_edges, None, y_tail, h);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &(y, wy) in &ys {
        for &(x, wx) in &xs {
            if let Some((c, s)) = square {
                if (x - c.re).abs() < s && (y - c.im).abs() < s {
                    continue;
                }
            }
            out.push((Complex64::new(x, y), wx * wy));
        }
    }
    out
}

// Distance from q (inside the square around c with half-side s) to the
// square boundary along the direction (cos a, sin a).
fn ray_to_square(q: Complex64, c: Complex64, s: f64, angle: f64) -> f64 {
    let (dx, dy) = (angle.cos(), angle.sin());
    let mut r = f64::INFINITY;
    if dx.abs() > 1e-300 {
        for edge in [c.re - s, c.re + s] {
            let t = (edge - q.re) / dx;
            if t > 0.0 && (q.im + t * dy - c.im).abs() <= s + 1e-12 {
                r = r.min(t);
            }
        }
    }
    if dy.abs() > 1e-300 {
        for edge in [c.im - s, c.im + s] {
            let t = (edge - q.im) / dy;
            if t > 0.0 && (q.re + t * dx - c.re).abs() <= s + 1e-12 {
                r = r.min(t);
            }
        }
    }
    r
}

// Polar nodes covering the excision square around `center`, centered on
// the actual singular point q (which may sit slightly off `center` during
// finite-difference sweeps). Angular panels break at the corner
// directions; the radial dx dy factor r is folded into the weight.
fn polar_nodes(q: Complex64, center: Complex64, s: f64, h: f64) -> Vec<(Complex64, f64)> {
    let mut angles: Vec<f64> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|(sx, sy)| {
            let corner = Complex64::new(center.re + sx * s, center.im + sy * s);
            (corner - q).arg()
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let first = angles[0];
    angles.push(first + 2.0 * PI);
    let mut out = Vec::new();
    for seg in angles.windows(2) {
        if seg[1] - seg[0] < 1e-12 {
            continue;
        }
        for (a, wa) in de_fixed_nodes(seg[0], seg[1], h) {
            let rmax = ray_to_square(q, center, s, a);
            for (r, wr) in de_fixed_nodes(0.0, rmax, h) {
                out.push((q + Complex64::from_polar(r, a), wa * wr * r));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The G operator
// ---------------------------------------------------------------------------

/// Output of G: a scalar for degree-1 input, a 1-form coefficient for
/// degree-2 input.
#[derive(Debug, Clone, Copy)]
pub enum GValue {
    Scalar(f64),
    Coefficient(Complex64),
}

impl GValue {
    pub fn scalar(&self) -> f64 {
        match self {
            GValue::Scalar(v) => *v,
            _ => panic!("expected a scalar G value"),
        }
    }
    pub fn coefficient(&self) -> Complex64 {
        match self {
            GValue::Coefficient(v) => *v,
            _ => panic!("expected a 1-form G value"),
        }
    }
}

// Wedge density of two doubled-real 1-forms, 2Re(a dz) ^ 2Re(b dz) =
// 4 Im(a conj(b)) dx dy under the interior orientation.
fn wedge_density(a: Complex64, b: Complex64) -> f64 {
    4.0 * (a * b.conj()).im
}

/// Reusable G evaluator: the tensor grid (minus the excision square around
/// `center`) is mapped through the uniformization once and frozen, so the
/// finite-difference sweeps of the splitting suite pay only for kernel
/// evaluations and the small fresh polar patch per call.
pub struct GEvaluator<'a> {
    form: &'a SampledForm,
    which: Which,
    n: usize,
    frame: Option<&'a PeriodFrame>,
    cfg: &'a QuadratureConfig,
    center: Complex64,
    half_side: f64,
    polar_h: f64,
    mesh: Vec<(Complex64, f64, MappedPoint)>,
}

fn map_grid(
    grid: Vec<(Complex64, f64)>,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<Vec<(Complex64, f64, MappedPoint)>, HomotopyError> {
    let mut out = Vec::with_capacity(grid.len());
    for (z, w) in grid {
        let mp = map_point(&SheetedPoint::upper(z), n, frame, cfg)?;
        out.push((z, w, mp));
    }
    Ok(out)
}

impl<'a> GEvaluator<'a> {
    pub fn new(
        form: &'a SampledForm,
        center: Complex64,
        which: Which,
        n: usize,
        frame: Option<&'a PeriodFrame>,
        cfg: &'a QuadratureConfig,
    ) -> Result<Self, HomotopyError> {
        assert!(form.degree >= 1, "G lowers the degree; feed it degree 1 or 2");
        let span = chart_span(n, frame);
        let half_side = cfg.excision_radius.max(0.1 * span);
        assert!(
            center.im > half_side,
            "evaluation point must clear the excision square above the boundary"
        );
        let (mesh_h, polar_h) = if n <= 3 { (0.2, 0.35) } else { (0.4, 0.8) };
        let (mesh_h, polar_h) = (mesh_h / cfg.mesh_refine, polar_h / cfg.mesh_refine);
        let grid =
            chart_grid(n, frame, form.support, Some((center, half_side)), mesh_h);
        let mesh = map_grid(grid, n, frame, cfg)?;
        Ok(GEvaluator { form, which, n, frame, cfg, center, half_side, polar_h, mesh })
    }

    pub fn excision_radius(&self) -> f64 {
        self.half_side
    }

    fn accumulate(
        &self,
        qm: &MappedPoint,
        nodes: &[(Complex64, f64, MappedPoint)],
        scalar: &mut f64,
        coeff: &mut Complex64,
    ) -> Result<(), HomotopyError> {
        for (z, w, mp) in nodes {
            match self.form.degree {
                1 => {
                    let b = self.form.value1(*z);
                    if b.norm_sqr() == 0.0 {
                        continue;
                    }
                    let kf = kernel_mapped(qm, mp, self.which, self.n, self.frame)?;
                    let term = w * wedge_density(kf.a_p, b);
                    if term.is_finite() {
                        *scalar += term;
                    }
                }
                2 => {
                    let rho = self.form.value2(*z);
                    if rho == 0.0 {
                        continue;
                    }
                    let kf = kernel_mapped(qm, mp, self.which, self.n, self.frame)?;
                    let term = kf.a_q * rho * *w;
                    if term.re.is_finite() && term.im.is_finite() {
                        *coeff += term;
                    }
                }
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    /// (G form)(q). `q` must stay within the excision square of `center`.
    pub fn eval(&self, q: Complex64) -> Result<GValue, HomotopyError> {
        assert!(
            (q.re - self.center.re).abs() < self.half_side
                && (q.im - self.center.im).abs() < self.half_side,
            "finite-difference stencil left the excision square"
        );
        let qm = map_point(&SheetedPoint::upper(q), self.n, self.frame, self.cfg)?;
        let mut scalar = 0.0;
        let mut coeff = Complex64::new(0.0, 0.0);
        self.accumulate(&qm, &self.mesh, &mut scalar, &mut coeff)?;
        let patch = map_grid(
            polar_nodes(q, self.center, self.half_side, self.polar_h),
            self.n,
            self.frame,
            self.cfg,
        )?;
        self.accumulate(&qm, &patch, &mut scalar, &mut coeff)?;
        Ok(match self.form.degree {
            1 => GValue::Scalar(scalar),
            _ => GValue::Coefficient(coeff),
        })
    }
}

/// (G form)(q) for a degree-1 or degree-2 form.
pub fn apply_g(
    form: &SampledForm,
    q: Complex64,
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<GValue, HomotopyError> {
    GEvaluator::new(form, q, which, n, frame, cfg)?.eval(q)
}

// ---------------------------------------------------------------------------
// Zero-mode projection
// ---------------------------------------------------------------------------

/// The g moment integrals the projection contracts against:
/// S1: m_j = int Im(w_j conj(b)) dx dy, S2: m_j = int Re(w_j conj(b)).
pub fn projection_moments(
    form: &SampledForm,
    which: Which,
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
    h: f64,
) -> Result<Vec<f64>, HomotopyError> {
    assert_eq!(form.degree, 1, "the projection acts on degree-1 forms");
    let _ = cfg;
    let g = frame.g();
    let n = 2 * g + 2;
    let grid = chart_grid(n, Some(frame), form.support, None, h);
    let mut m = vec![0.0; g];
    for (z, w) in grid {
        let b = form.value1(z);
        if b.norm_sqr() == 0.0 {
            continue;
        }
        let diffs = frame.holo_diff(z);
        for (mj, wj) in m.iter_mut().zip(&diffs) {
            let pair = wj * b.conj();
            let term = w * match which {
                Which::S1 => pair.im,
                Which::S2 => pair.re,
                _ => panic!("projection is defined for S1/S2 only"),
            };
            if term.is_finite() {
                *mj += term;
            }
        }
    }
    Ok(m)
}

/// Coefficient of (P form)(q). Identically zero below n = 4, where the
/// cohomology is trivial. The contraction is arranged so that P fixes its
/// own zero modes; for S2 this absorbs the orientation flip between the
/// interior wedge convention and the boundary-symbol one.
pub fn project_p(
    form: &SampledForm,
    q: Complex64,
    which: Which,
    n: usize,
    frame: Option<&PeriodFrame>,
    cfg: &QuadratureConfig,
) -> Result<Complex64, HomotopyError> {
    if n < 4 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let frame = frame.expect("n >= 4 needs a frame");
    let m = projection_moments(form, which, frame, cfg, 0.125)?;
    Ok(project_from_moments(&m, q, which, frame))
}

/// Assemble the projection value at q from precomputed moments.
pub fn project_from_moments(
    m: &[f64],
    q: Complex64,
    which: Which,
    frame: &PeriodFrame,
) -> Complex64 {
    let g = frame.g();
    let diffs = frame.holo_diff(q);
    let mut c = Complex64::new(0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            let y_inv = frame.omega.im_inv_entry(i, j);
            c += match which {
                Which::S1 => Complex64::new(0.0, -4.0) * diffs[i] * y_inv * m[j],
                Which::S2 => Complex64::new(4.0, 0.0) * m[i] * y_inv * diffs[j],
                _ => panic!("projection is defined for S1/S2 only"),
            };
        }
    }
    c
}

/// The projection output as a standalone (closed) one form, for
/// idempotence checks.
pub fn projected_form(
    form: &SampledForm,
    which: Which,
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
) -> Result<SampledForm, HomotopyError> {
    let m = projection_moments(form, which, frame, cfg, 0.125)?;
    let fr = frame.clone();
    Ok(SampledForm::one_form(
        &format!("P({})", form.name),
        Arc::new(move |z| project_from_moments(&m, z, which, &fr)),
        None,
    ))
}

// ---------------------------------------------------------------------------
// Cohomology and bilinear relations
// ---------------------------------------------------------------------------

/// Betti numbers of the relative complexes: only h1 is nonzero, equal to
/// the genus of the doubling.
pub fn cohomology_dims(n: usize) -> (usize, usize, usize) {
    assert!(n >= 2);
    let h1 = if n % 2 == 0 { (n - 2) / 2 } else { (n - 3) / 2 };
    (0, h1, 0)
}

/// Quadrature value of int omega_j ^ conj(omega_k) over the chart, in the
/// boundary-symbol orientation whose closed form is tau_jk / 2.
pub fn bilinear_matrix(
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
    h: f64,
) -> Result<Vec<Vec<Complex64>>, HomotopyError> {
    let _ = cfg;
    let g = frame.g();
    let n = 2 * g + 2;
    let grid = chart_grid(n, Some(frame), None, None, h);
    let mut b = vec![vec![Complex64::new(0.0, 0.0); g]; g];
    for (z, w) in grid {
        let diffs = frame.holo_diff(z);
        for j in 0..g {
            for k in 0..g {
                let term = Complex64::new(0.0, 2.0) * diffs[j] * diffs[k].conj() * w;
                if term.re.is_finite() && term.im.is_finite() {
                    b[j][k] += term;
                }
            }
        }
    }
    Ok(b)
}

/// Entrywise residual of the quadrature bilinear matrix against tau / 2.
///
/// The comparison symmetrizes in (j, k) first. Over the half plane the
/// complex integral also carries a real part antisymmetric in (j, k)
/// (already visible for unnormalized differentials, where the j < k
/// imaginary integrand is -y / |w|^2 < 0); the closed form tau_jk / 2 is
/// the symmetric part, and the antisymmetric remainder is exactly the
/// piece that cancels out of the zero-mode projection.
pub fn bilinear_check(
    frame: &PeriodFrame,
    cfg: &QuadratureConfig,
) -> Result<Vec<Vec<f64>>, HomotopyError> {
    let b = bilinear_matrix(frame, cfg, 0.0625)?;
    let g = frame.g();
    let mut res = vec![vec![0.0; g]; g];
    for j in 0..g {
        for k in 0..g {
            let sym = 0.5 * (b[j][k] + b[k][j]);
            res[j][k] = (sym - 0.5 * frame.omega.column(k)[j]).norm();
        }
    }
    Ok(res)
}

// ---------------------------------------------------------------------------
// Splitting suite
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct PointSample {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct ProbeReport {
    pub name: String,
    pub max_residual: f64,
    pub points: Vec<PointSample>,
}

#[derive(Debug, Serialize)]
pub struct QuadratureDiag {
    pub levels: usize,
    pub excision_radii: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SplittingReport {
    pub suite: String,
    pub n: usize,
    pub which: String,
    pub probes: Vec<ProbeReport>,
    pub quadrature: QuadratureDiag,
}

// Central difference with one Richardson step: (4 D(h/2) - D(h)) / 3.
fn fd_derivative<F>(mut eval: F, h: f64) -> Result<f64, HomotopyError>
where
    F: FnMut(f64) -> Result<f64, HomotopyError>,
{
    let d1 = (eval(h)? - eval(-h)?) / (2.0 * h);
    let d2 = (eval(0.5 * h)? - eval(-0.5 * h)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

// d of the scalar q -> G(phi)(q), as a 1-form coefficient.
fn fd_exterior_of_scalar(ev: &GEvaluator, q: Complex64, h: f64) -> Result<Complex64, HomotopyError> {
    let ux = fd_derivative(|d| Ok(ev.eval(q + Complex64::new(d, 0.0))?.scalar()), h)?;
    let uy = fd_derivative(|d| Ok(ev.eval(q + Complex64::new(0.0, d))?.scalar()), h)?;
    Ok(Complex64::new(ux, -uy) * 0.5)
}

// d of the 1-form q -> G(phi)(q) (coefficient c), as a 2-form density:
// curl of (F_x, F_y) = (2 Re c, -2 Im c).
fn fd_exterior_of_one_form(
    ev: &GEvaluator,
    q: Complex64,
    h: f64,
) -> Result<f64, HomotopyError> {
    let dfy_dx = fd_derivative(
        |d| Ok(-2.0 * ev.eval(q + Complex64::new(d, 0.0))?.coefficient().im),
        h,
    )?;
    let dfx_dy = fd_derivative(
        |d| Ok(2.0 * ev.eval(q + Complex64::new(0.0, d))?.coefficient().re),
        h,
    )?;
    Ok(dfy_dx - dfx_dy)
}

/// Residuals of dG + Gd = I - P for each probe at each point.
///
/// Degree 0: G(df) - f (P vanishes, h0 = 0). Degree 1: dG(phi) + G(d phi)
/// against phi - P(phi), with the outer d by Richardson-extrapolated
/// central differences. Degree 2: dG(phi) against phi (h2 = 0).
pub fn splitting_suite(
    n: usize,
    which: Which,
    frame: Option<&PeriodFrame>,
    probes: &[SampledForm],
    points: &[Complex64],
    cfg: &QuadratureConfig,
) -> Result<SplittingReport, HomotopyError> {
    let span = chart_span(n, frame);
    let fd_h = 1e-4 * span;
    let mut reports = Vec::new();
    let mut radii = Vec::new();
    for probe in probes {
        let mut samples = Vec::new();
        let mut max_res: f64 = 0.0;
        for &q in points {
            let residual = match probe.degree {
                0 => {
                    let df = probe.differential();
                    let ev = GEvaluator::new(&df, q, which, n, frame, cfg)?;
                    radii.push(ev.excision_radius());
                    (ev.eval(q)?.scalar() - probe.value0(q)).abs()
                }
                1 => {
                    let ev = GEvaluator::new(probe, q, which, n, frame, cfg)?;
                    radii.push(ev.excision_radius());
                    let dg = fd_exterior_of_scalar(&ev, q, fd_h)?;
                    let gd = match &probe.d_density {
                        // closed probes: G(d phi) = 0 exactly
                        None => Complex64::new(0.0, 0.0),
                        Some(f) => {
                            let rho = f.clone();
                            let dphi = SampledForm {
                                name: format!("d({})", probe.name),
                                degree: 2,
                                vanishes_on: None,
                                support: probe.support,
                                f0: None,
                                f1: None,
                                f2: Some(rho),
                                d_coeff: None,
                                d_density: None,
                            };
                            GEvaluator::new(&dphi, q, which, n, frame, cfg)?
                                .eval(q)?
                                .coefficient()
                        }
                    };
                    let p = project_p(probe, q, which, n, frame, cfg)?;
                    (dg + gd - (probe.value1(q) - p)).norm()
                }
                2 => {
                    let ev = GEvaluator::new(probe, q, which, n, frame, cfg)?;
                    radii.push(ev.excision_radius());
                    let dg = fd_exterior_of_one_form(&ev, q, fd_h)?;
                    (dg - probe.value2(q)).abs()
                }
                _ => unreachable!(),
            };
            max_res = max_res.max(residual);
            samples.push(PointSample { re: q.re, im: q.im, residual });
        }
        reports.push(ProbeReport {
            name: probe.name.clone(),
            max_residual: max_res,
            points: samples,
        });
    }
    radii.dedup();
    Ok(SplittingReport {
        suite: "splitting".into(),
        n,
        which: format!("{which:?}"),
        probes: reports,
        quadrature: QuadratureDiag { levels: cfg.max_levels, excision_radii: radii },
    })
}

/// Max tangential magnitude of the form on the sides it claims Dirichlet
/// conditions on (sampled check).
pub fn boundary_flag_residual(
    form: &SampledForm,
    n: usize,
    frame: Option<&PeriodFrame>,
) -> f64 {
    let Some(parity) = form.vanishes_on else { return 0.0 };
    let branch = frame.map(|f| &f.branch);
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let side = crate::kernels::BraneSide::new(n, k);
        if side.parity() != parity {
            continue;
        }
        for x in side.sample_points(branch, 16) {
            let z = Complex64::new(x, 0.0);
            let v = match form.degree {
                0 => form.value0(z).abs(),
                1 => (2.0 * form.value1(z).re).abs(),
                _ => form.value2(z).abs(),
            };
            worst = worst.max(v);
        }
    }
    worst
}
