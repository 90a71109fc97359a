//! Independent reference computations used by the test suites.
//!
//! Everything here is deliberately naive: brute-force lattice sums and the
//! arithmetic-geometric mean. These implementations share no code with the
//! production paths in `theta` and `curve`, so agreement between the two is
//! meaningful evidence rather than a tautology.

use num_complex::Complex64;

/// Complete elliptic integral K as a function of the parameter m = k^2,
/// via the arithmetic-geometric mean: K(m) = pi / (2 agm(1, sqrt(1-m))).
pub fn agm_complete_k(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "parameter out of range");
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() < 1e-17 * an {
            a = an;
            break;
        }
        a = an;
        b = bn;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// Riemann theta by direct summation over the box |N_i| <= range.
/// Only sensible for well-conditioned Omega and small genus; used to pin
/// the fast ellipsoid-truncated evaluator.
pub fn brute_force_theta(z: &[Complex64], omega: &[Vec<Complex64>], range: i64) -> Complex64 {
    let g = z.len();
    let mut n = vec![-range; g];
    let mut sum = Complex64::new(0.0, 0.0);
    loop {
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..g {
            for j in 0..g {
                quad += 0.5 * omega[i][j] * (n[i] as f64) * (n[j] as f64);
            }
            quad += z[i] * (n[i] as f64);
        }
        sum += (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * quad).exp();
        // odometer increment
        let mut k = 0;
        loop {
            if k == g {
                return sum;
            }
            n[k] += 1;
            if n[k] <= range {
                break;
            }
            n[k] = -range;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_at_zero_is_half_pi() {
        assert!((agm_complete_k(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn k_at_half_matches_lemniscatic_value() {
        // K(1/2) = Gamma(1/4)^2 / (4 sqrt(pi))
        let gamma_quarter = 3.625_609_908_221_908_3_f64;
        let expected = gamma_quarter * gamma_quarter / (4.0 * std::f64::consts::PI.sqrt());
        assert!((agm_complete_k(0.5) - expected).abs() < 1e-12);
    }

    #[test]
    fn theta_constant_g1() {
        let z = [Complex64::new(0.0, 0.0)];
        let omega = vec![vec![Complex64::new(0.0, 1.0)]];
        let v = brute_force_theta(&z, &omega, 10);
        // sum of exp(-pi n^2) over all integers n
        let direct: f64 = (-10..=10)
            .map(|n| (-std::f64::consts::PI * (n * n) as f64).exp())
            .sum();
        assert!((v.re - direct).abs() < 1e-15);
        assert!(v.im.abs() < 1e-15);
    }
}
