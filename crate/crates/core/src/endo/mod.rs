//! Linear parts `ψ ∈ Aut(n)` of nilmanifold endomorphisms.
//!
//! The matrix acts on coordinate column vectors: column `j` holds the
//! coordinates of `ψ(X_j)`.

mod split;

pub use split::{subspace_gap, SpectralSplit};

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::liealg::{BracketScalar, LieAlgebra};
use crate::nilgroup::{GroupError, GroupPoint, NilGroup};
use crate::ratcore::{
    factor_over_q, is_cyclotomic, rat_to_f64, roots_numeric, Factorization, IntMatrix, Rat,
    RatError, RatMatrix, RatPoly, DEFAULT_ROOT_TOL,
};

/// Default tolerance of the floating-point predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndoError {
    #[error(transparent)]
    Rat(#[from] RatError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("matrix is {rows}x{cols}, algebra has dimension {dim}")]
    Dimension { rows: usize, cols: usize, dim: usize },
    #[error("matrix is not a Lie algebra automorphism: {0}")]
    NotAutomorphism(String),
    #[error("induced block on layer {layer} is not integral")]
    NonIntegralBlock { layer: usize },
    #[error("eigenvalue modulus {modulus} is within the tolerance band of 1; hyperbolicity is indeterminate")]
    Indeterminate { modulus: f64 },
    #[error("map is not hyperbolic")]
    NotHyperbolic,
    #[error("stable space has dimension {dim}, expected 1")]
    StableDimension { dim: usize },
    #[error("invariant subspace residual {residual:e} exceeds tolerance")]
    Splitting { residual: f64 },
}

/// An eigenvalue tagged with the layer whose induced block produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayeredEigenvalue {
    pub value: Complex64,
    pub layer: usize,
}

#[doc(hidden)]
#[derive(Clone, Debug)]
pub struct Dense {
    rat: Vec<Vec<Rat>>,
    float: Vec<Vec<f64>>,
}

impl Dense {
    fn from_matrix(m: &RatMatrix) -> Self {
        let rat: Vec<Vec<Rat>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let float = rat.iter().map(|row| row.iter().map(rat_to_f64).collect()).collect();
        Dense { rat, float }
    }
}

/// Scalars for which an [`AutoMap`] keeps a matching copy of its matrix.
pub trait MapScalar: BracketScalar {
    #[doc(hidden)]
    fn rows(d: &Dense) -> &[Vec<Self>];
}

impl MapScalar for Rat {
    fn rows(d: &Dense) -> &[Vec<Rat>] {
        &d.rat
    }
}

impl MapScalar for f64 {
    fn rows(d: &Dense) -> &[Vec<f64>] {
        &d.float
    }
}

fn apply_rows<S: MapScalar>(rows: &[Vec<S>], x: &[S]) -> Vec<S> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .fold(S::zero(), |acc, (a, b)| acc.add_ref(&a.mul_ref(b)))
        })
        .collect()
}

/// A rational matrix acting on an algebra, together with its group.
#[derive(Clone, Debug)]
pub struct AutoMap {
    group: NilGroup,
    matrix: RatMatrix,
    fwd: Dense,
    inv: Option<Dense>,
}

impl AutoMap {
    /// Checks the shape only; see [`validate_automorphism`](Self::validate_automorphism).
    pub fn new(alg: Arc<LieAlgebra>, matrix: RatMatrix) -> Result<Self, EndoError> {
        let dim = alg.dim();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(EndoError::Dimension { rows: matrix.rows(), cols: matrix.cols(), dim });
        }
        let group = NilGroup::new(alg)?;
        let fwd = Dense::from_matrix(&matrix);
        let inv = matrix.inverse().ok().map(|m| Dense::from_matrix(&m));
        Ok(AutoMap { group, matrix, fwd, inv })
    }

    /// Like [`new`](Self::new) but rejects anything that is not an automorphism.
    pub fn new_validated(alg: Arc<LieAlgebra>, matrix: RatMatrix) -> Result<Self, EndoError> {
        let map = Self::new(alg, matrix)?;
        map.check_automorphism()?;
        Ok(map)
    }

    pub fn group(&self) -> &NilGroup {
        &self.group
    }

    pub fn algebra(&self) -> &LieAlgebra {
        self.group.algebra()
    }

    pub fn algebra_arc(&self) -> &Arc<LieAlgebra> {
        self.group.algebra_arc()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `ψ(x)` in coordinates.
    pub fn apply<S: MapScalar>(&self, x: &[S]) -> Vec<S> {
        apply_rows(S::rows(&self.fwd), x)
    }

    /// `ψ^{-1}(x)`; panics for a singular matrix.
    pub fn apply_inverse<S: MapScalar>(&self, x: &[S]) -> Vec<S> {
        let inv = self.inv.as_ref().expect("map is not invertible");
        apply_rows(S::rows(inv), x)
    }

    /// The group endomorphism `Ψ(exp X) = exp(ψ X)`.
    pub fn apply_group<S: MapScalar>(&self, x: &GroupPoint<S>) -> GroupPoint<S> {
        GroupPoint::new(self.apply(&x.coords))
    }

    pub fn apply_group_inverse<S: MapScalar>(&self, x: &GroupPoint<S>) -> GroupPoint<S> {
        GroupPoint::new(self.apply_inverse(&x.coords))
    }

    pub fn inverse_matrix(&self) -> Result<RatMatrix, EndoError> {
        Ok(self.matrix.inverse()?)
    }

    /// `ψ^n` as a map on the same algebra.
    pub fn power(&self, n: u32) -> AutoMap {
        AutoMap::new(self.algebra_arc().clone(), self.matrix.pow(n)).expect("same shape")
    }

    fn check_automorphism(&self) -> Result<(), EndoError> {
        if self.inv.is_none() {
            return Err(EndoError::NotAutomorphism("matrix is singular".into()));
        }
        let alg = self.algebra();
        let d = self.dim();
        let columns: Vec<Vec<Rat>> = (0..d).map(|j| self.matrix.column(j)).collect();
        for i in 0..d {
            for j in i + 1..d {
                let mut ei = vec![Rat::zero(); d];
                ei[i] = Rat::one();
                let mut ej = vec![Rat::zero(); d];
                ej[j] = Rat::one();
                let lhs = self.apply(&alg.bracket_fast(&ei, &ej));
                let rhs = alg.bracket_fast(&columns[i], &columns[j]);
                if lhs != rhs {
                    return Err(EndoError::NotAutomorphism(format!(
                        "psi[X{}, X{}] differs from [psi X{}, psi X{}]",
                        i + 1,
                        j + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Invertible and bracket preserving, decided exactly.
    pub fn validate_automorphism(&self) -> bool {
        self.check_automorphism().is_ok()
    }

    /// `Ψ(Γ) ⊆ Γ`, tested on the generators `exp(X_j)`.
    pub fn preserves_lattice(&self) -> bool {
        (0..self.dim()).all(|j| {
            let image = GroupPoint::new(self.matrix.column(j));
            self.group.in_lattice(&image).unwrap_or(false)
        })
    }

    /// Diagonal blocks `ψ_i` on the layers, as exact rational matrices.
    pub fn rational_blocks(&self) -> Vec<RatMatrix> {
        let alg = self.algebra();
        (1..=alg.step())
            .map(|layer| {
                let r = alg.layer_range(layer);
                self.matrix.submatrix(r.start, r.end, r.start, r.end)
            })
            .collect()
    }

    /// Integer blocks `ψ_1, ..., ψ_s` induced on `n_i / n_{i+1}`.
    pub fn induced_blocks(&self) -> Result<Vec<IntMatrix>, EndoError> {
        self.rational_blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_int().map_err(|_| EndoError::NonIntegralBlock { layer: i + 1 }))
            .collect()
    }

    pub fn char_poly(&self) -> RatPoly {
        self.matrix.char_poly().expect("square matrix")
    }

    /// Characteristic polynomials of the blocks; their product is [`char_poly`](Self::char_poly).
    pub fn block_char_polys(&self) -> Vec<RatPoly> {
        self.rational_blocks()
            .iter()
            .map(|b| b.char_poly().expect("square block"))
            .collect()
    }

    pub fn block_factorizations(&self) -> Result<Vec<Factorization>, EndoError> {
        self.block_char_polys()
            .iter()
            .map(|p| factor_over_q(p).map_err(EndoError::from))
            .collect()
    }

    /// Eigenvalues block by block, with multiplicity, tagged by layer.
    pub fn eigenvalues(&self) -> Result<Vec<LayeredEigenvalue>, EndoError> {
        let mut out = Vec::new();
        for (i, fac) in self.block_factorizations()?.iter().enumerate() {
            for (f, m) in &fac.factors {
                for z in roots_numeric(f, DEFAULT_ROOT_TOL)? {
                    for _ in 0..*m {
                        out.push(LayeredEigenvalue { value: z, layer: i + 1 });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every eigenvalue of `ψ_i` is a product of `i` eigenvalues of `ψ_1`
    /// (repetition allowed), within `tol`.
    pub fn check_eigenvalue_product_law(&self, tol: f64) -> Result<bool, EndoError> {
        let eig = self.eigenvalues()?;
        let base: Vec<Complex64> = eig.iter().filter(|e| e.layer == 1).map(|e| e.value).collect();
        for e in eig.iter().filter(|e| e.layer > 1) {
            let products = products_with_repetition(&base, e.layer);
            if !products.iter().any(|p| (p - e.value).norm() < tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// No eigenvalue on the unit circle. Roots of unity are detected exactly;
    /// a remaining modulus within `tol` of 1 is reported as indeterminate.
    pub fn is_hyperbolic(&self, tol: f64) -> Result<bool, EndoError> {
        for fac in self.block_factorizations()? {
            if fac.factors.iter().any(|(f, _)| is_cyclotomic(f)) {
                return Ok(false);
            }
        }
        for e in self.eigenvalues()? {
            let m = e.value.norm();
            if (m - 1.0).abs() <= tol {
                return Err(EndoError::Indeterminate { modulus: m });
            }
        }
        Ok(true)
    }

    /// No eigenvalue is an algebraic unit: every irreducible factor of the
    /// characteristic polynomial has constant term of absolute value other than 1.
    pub fn is_totally_non_invertible(&self) -> Result<bool, EndoError> {
        let facs = self.block_factorizations()?;
        Ok(facs.iter().all(no_unit_factor))
    }

    /// The same test restricted to the horizontal block `ψ_1`.
    pub fn is_horizontally_totally_non_invertible(&self) -> Result<bool, EndoError> {
        let facs = self.block_factorizations()?;
        Ok(facs.first().is_none_or(no_unit_factor))
    }

    /// Characteristic polynomial of `ψ_1` is irreducible over Q.
    pub fn is_horizontally_irreducible(&self) -> Result<bool, EndoError> {
        let facs = self.block_factorizations()?;
        Ok(facs.first().is_some_and(Factorization::is_irreducible))
    }

    pub fn hyperbolic_splitting(&self, tol: f64) -> Result<SpectralSplit, EndoError> {
        if !self.is_hyperbolic(tol)? {
            return Err(EndoError::NotHyperbolic);
        }
        SpectralSplit::compute(self, tol)
    }

    /// `[n^s, n^u] ⊆ n^u`: the stable component of every bracket of a stable
    /// and an unstable basis vector is below `tol`.
    pub fn is_u_ideal(&self, tol: f64) -> Result<bool, EndoError> {
        let split = self.hyperbolic_splitting(tol)?;
        Ok(split.u_ideal_defect(self.algebra()) < tol)
    }

    /// `ln μ^s` for a one-dimensional stable space.
    pub fn stable_exponent(&self, tol: f64) -> Result<f64, EndoError> {
        let split = self.hyperbolic_splitting(tol)?;
        if split.stable_dim() != 1 {
            return Err(EndoError::StableDimension { dim: split.stable_dim() });
        }
        Ok(split.stable_modulus().ln())
    }

    /// `|det ψ|` exactly.
    pub fn abs_det(&self) -> Rat {
        self.matrix.det().expect("square matrix").abs()
    }
}

fn no_unit_factor(fac: &Factorization) -> bool {
    fac.factors.iter().all(|(f, _)| !f.coeff(0).abs().is_one())
}

fn products_with_repetition(values: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    let mut idx = vec![0usize];
    // Nondecreasing index sequences enumerate multisets once.
    for _ in 0..k {
        let mut next = Vec::new();
        let mut next_idx = Vec::new();
        for (p, &start) in out.iter().zip(&idx) {
            for (j, v) in values.iter().enumerate().skip(start) {
                next.push(p * v);
                next_idx.push(j);
            }
        }
        out = next;
        idx = next_idx;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::heisenberg;
    use crate::ratcore::{rat, rat_int};

    fn heis_map() -> AutoMap {
        let m = RatMatrix::from_i64_rows(&[[4, 2, 0], [2, 2, 0], [0, 0, 4]]);
        AutoMap::new(Arc::new(heisenberg()), m).unwrap()
    }

    fn torus(rows: &[[i64; 2]]) -> AutoMap {
        AutoMap::new(Arc::new(LieAlgebra::abelian(2)), RatMatrix::from_i64_rows(rows)).unwrap()
    }

    #[test]
    fn validation() {
        assert!(heis_map().validate_automorphism());
        let id = AutoMap::new(Arc::new(heisenberg()), RatMatrix::identity(3)).unwrap();
        assert!(id.validate_automorphism());
        let bad = RatMatrix::from_i64_rows(&[[4, 2, 0], [2, 2, 0], [0, 0, 5]]);
        assert!(!AutoMap::new(Arc::new(heisenberg()), bad).unwrap().validate_automorphism());
    }

    #[test]
    fn lattice_preservation() {
        assert!(heis_map().preserves_lattice());
        let half = heis_map().matrix().scale(&rat(1, 2));
        let m = AutoMap::new(Arc::new(heisenberg()), half).unwrap();
        assert!(!m.preserves_lattice());
    }

    #[test]
    fn blocks_and_product_law() {
        let m = heis_map();
        let b = m.induced_blocks().unwrap();
        assert_eq!(b[0], IntMatrix::from_i64_rows(&[[4, 2], [2, 2]]));
        assert_eq!(b[1], IntMatrix::from_i64_rows(&[[4]]));
        assert!(m.check_eigenvalue_product_law(1e-9).unwrap());
        assert!(torus(&[[2, 0], [0, 2]]).check_eigenvalue_product_law(1e-9).unwrap());
        let prod: Rat = b.iter().map(|x| x.to_rat().det().unwrap().abs()).product();
        assert_eq!(m.abs_det(), prod);
    }

    #[test]
    fn predicates() {
        let m = heis_map();
        assert!(m.is_hyperbolic(1e-9).unwrap());
        assert!(m.is_totally_non_invertible().unwrap());
        assert!(m.is_horizontally_irreducible().unwrap());
        assert!(m.is_u_ideal(1e-9).unwrap());
        let s5 = 5f64.sqrt();
        assert!((m.stable_exponent(1e-9).unwrap() - (3.0 - s5).ln()).abs() < 1e-12);

        let id = AutoMap::new(Arc::new(heisenberg()), RatMatrix::identity(3)).unwrap();
        assert!(!id.is_hyperbolic(1e-9).unwrap());

        let t = torus(&[[2, 0], [0, 2]]);
        assert!(t.is_totally_non_invertible().unwrap());
        assert!(!t.is_horizontally_irreducible().unwrap());
        assert!(matches!(t.stable_exponent(1e-9), Err(EndoError::StableDimension { dim: 0 })));

        let d = AutoMap::new(
            Arc::new(LieAlgebra::abelian(2)),
            RatMatrix::diagonal(&[rat(1, 2), rat_int(2)]),
        )
        .unwrap();
        assert!((d.stable_exponent(1e-9).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(d.is_u_ideal(1e-9).unwrap());

        let cat = torus(&[[2, 1], [1, 1]]);
        assert!(!cat.is_totally_non_invertible().unwrap());
        assert!(cat.is_hyperbolic(1e-9).unwrap());
    }

    #[test]
    fn rotation_like_map_is_indeterminate_or_not_hyperbolic() {
        // [[0,-1],[1,0]] has eigenvalues ±i: cyclotomic, so exactly non-hyperbolic.
        let r = torus(&[[0, -1], [1, 0]]);
        assert!(!r.is_hyperbolic(1e-9).unwrap());
    }

    #[test]
    fn multiset_products() {
        let v = [Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)];
        let mut p: Vec<f64> = products_with_repetition(&v, 2).iter().map(|z| z.re).collect();
        p.sort_by(f64::total_cmp);
        assert_eq!(p, vec![4.0, 6.0, 9.0]);
    }
}
