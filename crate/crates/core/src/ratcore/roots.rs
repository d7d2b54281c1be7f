use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{RatError, RatPoly};

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

const MAX_ABERTH_ITERS: usize = 500;
const POLISH_ITERS: usize = 3;

/// All complex roots of `p`, with multiplicity.
///
/// Aberth-Ehrlich simultaneous iteration, falling back to the eigenvalues of
/// the companion matrix. Every returned root satisfies
/// `|p(z)| < tol * (1 + |z|)^deg` (for the monic normalization of `p`).
/// Real roots come first in ascending order, followed by complex conjugate
/// pairs ordered by real part, each pair written `(a - bi, a + bi)`.
pub fn roots_numeric(p: &RatPoly, tol: f64) -> Result<Vec<Complex64>, RatError> {
    let Some(deg) = p.degree() else {
        return Err(RatError::ZeroPolynomial);
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let monic = p.monic();
    let coeffs = monic.to_f64_coeffs();

    let mut roots = aberth(&coeffs, tol);
    if worst_residual(&coeffs, &roots) >= tol {
        roots = companion_roots(&coeffs);
    }
    for z in roots.iter_mut() {
        *z = polish(&coeffs, *z);
    }
    let worst = worst_residual(&coeffs, &roots);
    if worst >= tol {
        return Err(RatError::NoConvergence { residual: worst });
    }
    Ok(pair_conjugates(&coeffs, roots, tol))
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn scaled_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let deg = coeffs.len() - 1;
    horner(coeffs, z).0.norm() / (1.0 + z.norm()).powi(deg as i32)
}

fn worst_residual(coeffs: &[f64], roots: &[Complex64]) -> f64 {
    roots
        .iter()
        .map(|&z| scaled_residual(coeffs, z))
        .fold(0.0, f64::max)
}

fn aberth(coeffs: &[f64], tol: f64) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    // Cauchy bound on root moduli.
    let bound = 1.0
        + coeffs[..deg]
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max);
    let radius = 0.5 * bound;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = std::f64::consts::TAU * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = horner(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom.norm() == 0.0 || !denom.is_finite() {
                ratio
            } else {
                ratio / denom
            };
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < tol * 1e-3 {
            break;
        }
    }
    z
}

fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i];
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..POLISH_ITERS {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if !next.is_finite() || scaled_residual(coeffs, next) > scaled_residual(coeffs, z) {
            break;
        }
        z = next;
    }
    z
}

/// Snaps near-real roots onto the real axis (when the real part alone still
/// meets the residual bound) and symmetrizes conjugate pairs.
fn pair_conjugates(coeffs: &[f64], mut roots: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    const IMAG_SNAP: f64 = 1e-6;
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots.drain(..) {
        let near_axis = z.im.abs() <= IMAG_SNAP * (1.0 + z.norm());
        if near_axis && scaled_residual(coeffs, Complex64::new(z.re, 0.0)) < tol {
            real.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    real.sort_by(f64::total_cmp);
    let mut out: Vec<Complex64> = real.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut pairs = Vec::new();
    for z in upper {
        let partner = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (**a - z.conj()).norm().total_cmp(&(**b - z.conj()).norm()))
            .map(|(i, _)| i);
        let mid = match partner {
            Some(i) => {
                let w = lower.swap_remove(i);
                Complex64::new(0.5 * (z.re + w.re), 0.5 * (z.im - w.im))
            }
            None => z,
        };
        pairs.push(mid.conj());
        pairs.push(mid);
    }
    out.extend(pairs);
    // Unpaired lower-half roots can only come from non-real coefficients.
    out.extend(lower);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratcore::rat_int;

    #[test]
    fn quadratic_examples() {
        let r = roots_numeric(&RatPoly::from_i64(&[4, -6, 1]), DEFAULT_ROOT_TOL).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r[0].re - (3.0 - s5)).abs() < 1e-12);
        assert!((r[1].re - (3.0 + s5)).abs() < 1e-12);
        assert!((r[0].re - 0.76393).abs() < 1e-5);

        let r = roots_numeric(&RatPoly::from_i64(&[-2, 1]), DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 2.0).abs() < 1e-14);

        let r = roots_numeric(&RatPoly::from_i64(&[1, -3, 1]), DEFAULT_ROOT_TOL).unwrap();
        assert!((r[0].re - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((r[1].re - (3.0 + s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pairs_and_repeated_roots() {
        // (x^2 + 1)(x - 1)^2
        let p = &RatPoly::from_i64(&[1, 0, 1]) * &RatPoly::from_i64(&[1, -2, 1]);
        let r = roots_numeric(&p, DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[0].re - 1.0).abs() < 1e-6 && r[0].im == 0.0);
        assert!((r[1].re - 1.0).abs() < 1e-6 && r[1].im == 0.0);
        assert_eq!(r[2], r[3].conj());
        assert!((r[3].im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn root_sum_matches_trace_coefficient() {
        // x^5 - 3x^4 + 7x^2 - x + 11
        let p = RatPoly::new(
            [11, -1, 7, 0, -3, 1].iter().map(|&c| rat_int(c)).collect(),
        );
        let r = roots_numeric(&p, DEFAULT_ROOT_TOL).unwrap();
        let sum: Complex64 = r.iter().sum();
        assert!((sum.re - 3.0).abs() < 1e-9 * 3.0);
        assert!(sum.im.abs() < 1e-9);
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert!(roots_numeric(&RatPoly::zero(), 1e-12).is_err());
    }
}
