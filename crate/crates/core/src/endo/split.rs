use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{AutoMap, EndoError, LayeredEigenvalue};
use crate::liealg::LieAlgebra;

/// Numerical hyperbolic splitting `n = n^s ⊕ n^u` of a linear part.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    stable: DMatrix<f64>,
    unstable: DMatrix<f64>,
    eigenvalues: Vec<LayeredEigenvalue>,
    stable_modulus: f64,
    unstable_min_modulus: f64,
    proj_stable: DMatrix<f64>,
    residual: f64,
}

impl SpectralSplit {
    pub(super) fn compute(map: &AutoMap, tol: f64) -> Result<Self, EndoError> {
        let eigenvalues = map.eigenvalues()?;
        let m = map.matrix().to_f64();
        let d = m.nrows();
        let (stable_roots, unstable_roots): (Vec<Complex64>, Vec<Complex64>) = eigenvalues
            .iter()
            .map(|e| e.value)
            .partition(|z| z.norm() < 1.0);

        let stable = kernel(&annihilator(&m, &stable_roots), stable_roots.len());
        let unstable = kernel(&annihilator(&m, &unstable_roots), unstable_roots.len());

        let scale = m.norm().max(1.0);
        let residual = invariance_residual(&m, &stable).max(invariance_residual(&m, &unstable));
        if residual > tol * scale {
            return Err(EndoError::Splitting { residual });
        }

        let mut basis = DMatrix::zeros(d, d);
        basis.columns_mut(0, stable.ncols()).copy_from(&stable);
        basis.columns_mut(stable.ncols(), unstable.ncols()).copy_from(&unstable);
        let basis_inv = basis
            .clone()
            .try_inverse()
            .ok_or(EndoError::Splitting { residual: f64::INFINITY })?;
        let mut select = DMatrix::zeros(d, d);
        for i in 0..stable.ncols() {
            select[(i, i)] = 1.0;
        }
        let proj_stable = &basis * select * basis_inv;

        let stable_modulus = stable_roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let unstable_min_modulus =
            unstable_roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        Ok(SpectralSplit {
            stable,
            unstable,
            eigenvalues,
            stable_modulus,
            unstable_min_modulus,
            proj_stable,
            residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.proj_stable.nrows()
    }

    pub fn stable_dim(&self) -> usize {
        self.stable.ncols()
    }

    pub fn unstable_dim(&self) -> usize {
        self.unstable.ncols()
    }

    /// Orthonormal columns spanning `n^s`.
    pub fn stable_basis(&self) -> &DMatrix<f64> {
        &self.stable
    }

    /// Orthonormal columns spanning `n^u`.
    pub fn unstable_basis(&self) -> &DMatrix<f64> {
        &self.unstable
    }

    pub fn eigenvalues(&self) -> &[LayeredEigenvalue] {
        &self.eigenvalues
    }

    /// `μ^s`: largest modulus below 1 (0 when there is no stable direction).
    pub fn stable_modulus(&self) -> f64 {
        self.stable_modulus
    }

    /// `μ^u_-`: smallest modulus above 1.
    pub fn unstable_min_modulus(&self) -> f64 {
        self.unstable_min_modulus
    }

    /// Largest invariance residual `|ψv - Π(ψv)|` over the basis vectors.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Projection onto `n^s` along `n^u`.
    pub fn stable_projection(&self) -> &DMatrix<f64> {
        &self.proj_stable
    }

    /// Projection onto `n^u` along `n^s`.
    pub fn unstable_projection(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.proj_stable
    }

    /// `(v^s, v^u)` with `v = v^s + v^u`.
    pub fn components(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = DVector::from_column_slice(v);
        let s = &self.proj_stable * &x;
        let u = x - &s;
        (s.as_slice().to_vec(), u.as_slice().to_vec())
    }

    /// Largest stable component of `[s, u]` over basis pairs; zero iff `n^u` is an ideal.
    pub fn u_ideal_defect(&self, alg: &LieAlgebra) -> f64 {
        let mut worst: f64 = 0.0;
        for s in self.stable.column_iter() {
            for u in self.unstable.column_iter() {
                let b = alg.bracket_fast(s.as_slice(), u.as_slice());
                let (bs, _) = self.components(&b);
                worst = worst.max(bs.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
        }
        worst
    }
}

/// Real polynomial `Π (m - λ)` over the given roots, conjugate pairs merged.
fn annihilator(m: &DMatrix<f64>, roots: &[Complex64]) -> DMatrix<f64> {
    let d = m.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let mut acc = id.clone();
    for z in roots {
        let factor = if z.im == 0.0 {
            m - &id * z.re
        } else if z.im > 0.0 {
            m * m - m * (2.0 * z.re) + &id * z.norm_sqr()
        } else {
            continue;
        };
        acc = factor * acc;
        let n = acc.norm();
        if n > 0.0 {
            acc /= n;
        }
    }
    acc
}

/// Orthonormal basis of the `k`-dimensional numerical kernel.
fn kernel(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = a.ncols();
    if k == 0 {
        return DMatrix::zeros(d, 0);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut out = DMatrix::zeros(d, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

fn invariance_residual(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    if basis.ncols() == 0 {
        return 0.0;
    }
    let image = m * basis;
    let proj = basis * (basis.transpose() * &image);
    (image - proj)
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Sine of the largest principal angle between two subspaces of equal dimension,
/// given by column bases (not necessarily orthonormal).
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let resid = &qb - &qa * (qa.transpose() * &qb);
    resid.singular_values().iter().copied().fold(0.0, f64::max)
}
