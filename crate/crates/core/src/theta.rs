//! Riemann theta functions on C^g for a fixed period matrix in the Siegel
//! upper half space: values, gradients and integer characteristics.
//!
//! The lattice sum is truncated to an ellipsoid aligned with the Gaussian
//! decay of the summand. Terms are accumulated in (N, -N) pairs so that the
//! evenness of the plain theta function, and the parity of a characteristic,
//! hold exactly for the truncated sum and not just up to the tail bound.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{cholesky_real, ComplexMatrix};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error("period matrix is not symmetric (max asymmetry {asym:e})")]
    NotSymmetric { asym: f64 },
    #[error("imaginary part of the period matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("truncation radius needs about {terms} lattice terms, above the cap")]
    TailBoundFailure { terms: usize },
}

/// A point of the Siegel upper half space with the derived real data the
/// lattice sum needs: Im Omega, its Cholesky factor and its inverse.
#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    pub g: usize,
    pub omega: ComplexMatrix,
    im: Vec<f64>,
    im_chol: Vec<f64>,
    im_inv: Vec<f64>,
}

impl PeriodMatrix {
    pub fn new(omega: ComplexMatrix) -> Result<Self, ThetaError> {
        let g = omega.dim;
        let scale = omega.max_abs().max(1.0);
        let mut asym: f64 = 0.0;
        for i in 0..g {
            for j in (i + 1)..g {
                asym = asym.max((omega[(i, j)] - omega[(j, i)]).norm());
            }
        }
        if asym > 1e-10 * scale {
            return Err(ThetaError::NotSymmetric { asym });
        }
        let im: Vec<f64> = omega.data.iter().map(|c| c.im).collect();
        let im_chol = cholesky_real(&im, g).ok_or(ThetaError::NotPositiveDefinite)?;
        let im_mat = ComplexMatrix {
            dim: g,
            data: im.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        let im_inv = im_mat
            .invert()
            .map_err(|_| ThetaError::NotPositiveDefinite)?
            .data
            .iter()
            .map(|c| c.re)
            .collect();
        Ok(PeriodMatrix { g, omega, im, im_chol, im_inv })
    }

    /// j-th column of Omega (0-based).
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.g).map(|i| self.omega[(i, j)]).collect()
    }

    pub fn im_entry(&self, i: usize, j: usize) -> f64 {
        self.im[i * self.g + j]
    }

    pub fn im_inv_entry(&self, i: usize, j: usize) -> f64 {
        self.im_inv[i * self.g + j]
    }
}

/// Integer theta characteristic (eps, eps').
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characteristic {
    pub eps: Vec<i64>,
    pub eps_prime: Vec<i64>,
}

impl Characteristic {
    pub fn new(eps: Vec<i64>, eps_prime: Vec<i64>) -> Self {
        assert_eq!(eps.len(), eps_prime.len());
        Characteristic { eps, eps_prime }
    }

    /// t(eps') eps mod 2; 1 means the characteristic is odd.
    pub fn parity(&self) -> u8 {
        let s: i64 = self.eps.iter().zip(&self.eps_prime).map(|(a, b)| a * b).sum();
        (s.rem_euclid(2)) as u8
    }
}

// Hard cap on lattice terms per evaluation; generous for g <= 6 at desk
// tolerances, and small enough to fail fast on pathological Im Omega.
const MAX_TERMS: usize = 4_000_000;

// Core lattice sum: value and gradient of
//   sum over N of exp(2 pi i (1/2 t(N+a) Omega (N+a) + t(N+a) (z+b)))
// with a = eps/2, b = eps'/2. Terms are paired (M, -M), M = N + a, so the
// sum is exactly symmetric under z -> -z.
fn theta_core(
    z: &[Complex64],
    omega: &PeriodMatrix,
    a: &[f64],
    b: &[f64],
    tol: f64,
) -> Result<(Complex64, Vec<Complex64>), ThetaError> {
    let g = omega.g;
    assert_eq!(z.len(), g);
    let tol = tol.clamp(1e-16, 1e-1);

    // Gaussian peak sits at M = -c, c = (Im Omega)^{-1} Im z.
    let mut c = vec![0.0; g];
    for i in 0..g {
        for j in 0..g {
            c[i] += omega.im_inv[i * g + j] * z[j].im;
        }
    }
    // |term| = exp(pi tc Y c) exp(-pi || L^T (M + c) ||^2); keep terms whose
    // magnitude relative to the peak exceeds tol, with margin.
    let r = (tol.recip().ln() / std::f64::consts::PI).sqrt() + 1.5;

    let quad_form = |x: &[f64]| -> f64 {
        // || L^T x ||^2 = tx Y x via the stored Cholesky factor
        let mut s = 0.0;
        for j in 0..g {
            let mut comp = 0.0;
            for i in j..g {
                comp += omega.im_chol[i * g + j] * x[i];
            }
            s += comp * comp;
        }
        s
    };
    let r2 = r * r;
    let in_region = |m: &[f64]| -> bool {
        let plus: Vec<f64> = m.iter().zip(&c).map(|(x, y)| x + y).collect();
        if quad_form(&plus) <= r2 {
            return true;
        }
        let minus: Vec<f64> = m.iter().zip(&c).map(|(x, y)| x - y).collect();
        quad_form(&minus) <= r2
    };

    // Bounding box from the ellipsoid axes: |M_i| <= |c_i| + r sqrt((Y^-1)_ii).
    let mut lo = vec![0i64; g];
    let mut hi = vec![0i64; g];
    let mut total: f64 = 1.0;
    for i in 0..g {
        let extent = c[i].abs() + r * omega.im_inv[i * g + i].max(0.0).sqrt();
        // N = M - a
        lo[i] = (-extent - a[i]).floor() as i64;
        hi[i] = (extent - a[i]).ceil() as i64;
        total *= (hi[i] - lo[i] + 1) as f64;
        if total > MAX_TERMS as f64 {
            return Err(ThetaError::TailBoundFailure { terms: total as usize });
        }
    }

    let mut value = Complex64::new(0.0, 0.0);
    let mut grad = vec![Complex64::new(0.0, 0.0); g];
    let zb: Vec<Complex64> = z.iter().zip(b).map(|(zi, bi)| zi + bi).collect();
    let term_at = |m: &[f64]| -> Complex64 {
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..g {
            let mut row = 0.0;
            for j in 0..g {
                row += omega.im[i * g + j] * m[j];
            }
            // Omega may have a (tiny) real part; use it exactly
            let mut row_re = 0.0;
            for j in 0..g {
                row_re += omega.omega[(i, j)].re * m[j];
            }
            q += 0.5 * m[i] * Complex64::new(row_re, row);
            q += m[i] * zb[i];
        }
        (Complex64::new(0.0, TWO_PI) * q).exp()
    };

    let mut n = lo.clone();
    let mut m = vec![0.0; g];
    let mut neg = vec![0.0; g];
    'outer: loop {
        for i in 0..g {
            m[i] = n[i] as f64 + a[i];
        }
        // pair representative: first nonzero component of M positive
        let lead = m.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(0.0);
        if lead > 0.0 && in_region(&m) {
            for i in 0..g {
                neg[i] = -m[i];
            }
            let tp = term_at(&m);
            let tm = term_at(&neg);
            value += tp + tm;
            for j in 0..g {
                grad[j] += Complex64::new(0.0, TWO_PI) * m[j] * (tp - tm);
            }
        } else if lead == 0.0 {
            // M = 0 can only happen for the zero characteristic
            value += term_at(&m);
        }
        let mut k = 0;
        loop {
            if k == g {
                break 'outer;
            }
            n[k] += 1;
            if n[k] <= hi[k] {
                break;
            }
            n[k] = lo[k];
            k += 1;
        }
    }
    Ok((value, grad))
}

/// Riemann theta value.
pub fn theta(z: &[Complex64], omega: &PeriodMatrix, tol: f64) -> Result<Complex64, ThetaError> {
    let zeros = vec![0.0; omega.g];
    theta_core(z, omega, &zeros, &zeros, tol).map(|(v, _)| v)
}

/// Gradient of theta with respect to z.
pub fn theta_gradient(
    z: &[Complex64],
    omega: &PeriodMatrix,
    tol: f64,
) -> Result<Vec<Complex64>, ThetaError> {
    let zeros = vec![0.0; omega.g];
    theta_core(z, omega, &zeros, &zeros, tol).map(|(_, gr)| gr)
}

/// Value and gradient in one lattice pass.
pub fn theta_with_gradient(
    z: &[Complex64],
    omega: &PeriodMatrix,
    tol: f64,
) -> Result<(Complex64, Vec<Complex64>), ThetaError> {
    let zeros = vec![0.0; omega.g];
    theta_core(z, omega, &zeros, &zeros, tol)
}

/// First order theta with an integer characteristic: the lattice is shifted
/// by eps/2 and the argument by eps'/2.
pub fn theta_with_characteristic(
    c: &Characteristic,
    z: &[Complex64],
    omega: &PeriodMatrix,
    tol: f64,
) -> Result<Complex64, ThetaError> {
    assert_eq!(c.eps.len(), omega.g);
    let a: Vec<f64> = c.eps.iter().map(|&e| e as f64 / 2.0).collect();
    let b: Vec<f64> = c.eps_prime.iter().map(|&e| e as f64 / 2.0).collect();
    theta_core(z, omega, &a, &b, tol).map(|(v, _)| v)
}

/// Random point of the Siegel upper half space: Im Omega = A^T A + I with
/// uniform A stays comfortably positive definite, Re Omega = 0.
pub fn random_siegel<R: rand::Rng>(g: usize, rng: &mut R) -> PeriodMatrix {
    let a: Vec<f64> = (0..g * g).map(|_| rng.gen_range(-0.7..0.7)).collect();
    let mut m = ComplexMatrix::zeros(g);
    for i in 0..g {
        for j in 0..g {
            let mut y = if i == j { 1.0 } else { 0.0 };
            for k in 0..g {
                y += a[k * g + i] * a[k * g + j];
            }
            m[(i, j)] = Complex64::new(0.0, y);
        }
    }
    PeriodMatrix::new(m).expect("A^T A + I is symmetric positive definite")
}

/// Relative residual of the lattice translation law
/// theta(z + mu' + Omega mu) = exp(-2 pi i (1/2 t mu Omega mu + t mu z)) theta(z).
pub fn quasi_periodicity_residual(
    z: &[Complex64],
    omega: &PeriodMatrix,
    mu: &[i64],
    mu_prime: &[i64],
    tol: f64,
) -> Result<f64, ThetaError> {
    let g = omega.g;
    assert_eq!(z.len(), g);
    let mut zs = z.to_vec();
    let mut phase = Complex64::new(0.0, 0.0);
    for i in 0..g {
        zs[i] += mu_prime[i] as f64;
        phase -= mu[i] as f64 * z[i];
        for j in 0..g {
            zs[i] += omega.omega[(i, j)] * mu[j] as f64;
            phase -= 0.5 * (mu[i] * mu[j]) as f64 * omega.omega[(i, j)];
        }
    }
    let lhs = theta(&zs, omega, tol)?;
    let rhs = (Complex64::new(0.0, TWO_PI) * phase).exp() * theta(z, omega, tol)?;
    Ok((lhs - rhs).norm() / rhs.norm().max(1e-6))
}

/// Half period (t eps' I + t eps Omega) / 2 as a point of C^g.
pub fn half_period(c: &Characteristic, omega: &PeriodMatrix) -> Vec<Complex64> {
    let g = omega.g;
    (0..g)
        .map(|i| {
            let mut v = Complex64::new(c.eps_prime[i] as f64 / 2.0, 0.0);
            for j in 0..g {
                v += omega.omega[(i, j)] * (c.eps[j] as f64 / 2.0);
            }
            v
        })
        .collect()
}
