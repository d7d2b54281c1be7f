//! Nilpotent Lie algebras given by rational structure constants in a fixed
//! basis `X_1, ..., X_d` (indices are 0-based in the API).

mod scalar;

pub use scalar::Scalar;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::ratcore::{rat, rat_to_f64, Rat, RatMatrix};

/// Largest nilpotency step supported by [`LieAlgebra::bch`].
pub const MAX_BCH_STEP: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("vector has length {got}, algebra has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("structure constant index ({i}, {j}, {k}) out of range for dimension {dim} (indices are 1-based)")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },
    #[error("antisymmetry violated: c[{i},{j}]^{k} = {a} but c[{j},{i}]^{k} = {b}")]
    Antisymmetry { i: usize, j: usize, k: usize, a: String, b: String },
    #[error("conflicting values for c[{i},{j}]^{k}: {a} and {b}")]
    Conflict { i: usize, j: usize, k: usize, a: String, b: String },
    #[error("Jacobi identity fails on basis triple (X{i}, X{j}, X{l})")]
    Jacobi { i: usize, j: usize, l: usize },
    #[error("algebra is not nilpotent")]
    NotNilpotent,
    #[error("basis is not adapted to the lower central series: term {layer} is not spanned by the trailing {dim} basis vectors")]
    NotAdapted { layer: usize, dim: usize },
    #[error("nilpotency step {step} exceeds the supported maximum {max}")]
    UnsupportedStep { step: usize, max: usize },
    #[error("invalid layer splitting: {0}")]
    InvalidSplitting(String),
}

type Table<S> = Vec<Vec<Vec<(usize, S)>>>;

/// A nilpotent Lie algebra with a basis adapted to its lower central series.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    dim: usize,
    constants: Vec<(usize, usize, usize, Rat)>,
    table_rat: Table<Rat>,
    table_f64: Table<f64>,
    series: Vec<RatMatrix>,
    layer_dims: Vec<usize>,
    layer_of: Vec<usize>,
}

/// Access to the bracket table in the matching scalar type.
pub trait BracketScalar: Scalar {
    #[doc(hidden)]
    fn table(alg: &LieAlgebra) -> &Table<Self>;
}

impl BracketScalar for Rat {
    fn table(alg: &LieAlgebra) -> &Table<Rat> {
        &alg.table_rat
    }
}

impl BracketScalar for f64 {
    fn table(alg: &LieAlgebra) -> &Table<f64> {
        &alg.table_f64
    }
}

impl LieAlgebra {
    /// Builds the algebra from triples `(i, j, k, c)` meaning `[X_i, X_j]` has
    /// `X_k`-coefficient `c` (0-based). Triples may be given for either order of
    /// `(i, j)`; missing entries are filled by antisymmetry.
    pub fn new(dim: usize, triples: &[(usize, usize, usize, Rat)]) -> Result<Self, LieError> {
        let mut full: Vec<Vec<Vec<Rat>>> = vec![vec![vec![Rat::zero(); dim]; dim]; dim];
        let mut given: Vec<Vec<Vec<Option<Rat>>>> = vec![vec![vec![None; dim]; dim]; dim];
        for (i, j, k, c) in triples {
            let (i, j, k) = (*i, *j, *k);
            if i >= dim || j >= dim || k >= dim {
                return Err(LieError::IndexOutOfRange { i: i + 1, j: j + 1, k: k + 1, dim });
            }
            if i == j && !c.is_zero() {
                return Err(antisymmetry_error(i, i, k, c, c));
            }
            if let Some(prev) = &given[i][j][k] {
                if prev != c {
                    return Err(LieError::Conflict {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        a: prev.to_string(),
                        b: c.to_string(),
                    });
                }
            }
            if let Some(other) = &given[j][i][k] {
                if *other != -c {
                    return Err(antisymmetry_error(i, j, k, c, other));
                }
            }
            full[i][j][k] = c.clone();
            full[j][i][k] = -c;
            given[i][j][k] = Some(c.clone());
        }

        let mut constants = Vec::new();
        let mut table_rat: Table<Rat> = vec![vec![Vec::new(); dim]; dim];
        let mut table_f64: Table<f64> = vec![vec![Vec::new(); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let c = &full[i][j][k];
                    if c.is_zero() {
                        continue;
                    }
                    if i < j {
                        constants.push((i, j, k, c.clone()));
                    }
                    table_rat[i][j].push((k, c.clone()));
                    table_f64[i][j].push((k, rat_to_f64(c)));
                }
            }
        }

        let mut alg = LieAlgebra {
            dim,
            constants,
            table_rat,
            table_f64,
            series: Vec::new(),
            layer_dims: Vec::new(),
            layer_of: Vec::new(),
        };
        alg.check_jacobi()?;
        alg.compute_series()?;
        Ok(alg)
    }

    pub fn abelian(dim: usize) -> Self {
        Self::new(dim, &[]).expect("abelian algebra is always valid")
    }

    fn check_jacobi(&self) -> Result<(), LieError> {
        let d = self.dim;
        for i in 0..d {
            for j in i + 1..d {
                for l in j + 1..d {
                    let (xi, xj, xl) = (unit::<Rat>(d, i), unit::<Rat>(d, j), unit::<Rat>(d, l));
                    let a = self.bracket_fast(&xi, &self.bracket_fast(&xj, &xl));
                    let b = self.bracket_fast(&xj, &self.bracket_fast(&xl, &xi));
                    let c = self.bracket_fast(&xl, &self.bracket_fast(&xi, &xj));
                    if a.iter().zip(&b).zip(&c).any(|((a, b), c)| !(a + b + c).is_zero()) {
                        return Err(LieError::Jacobi { i: i + 1, j: j + 1, l: l + 1 });
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_series(&mut self) -> Result<(), LieError> {
        let d = self.dim;
        let mut series = vec![RatMatrix::identity(d)];
        loop {
            let current = series.last().unwrap();
            if current.rows() == 0 {
                break;
            }
            let mut rows = Vec::new();
            for a in 0..d {
                let xa = unit::<Rat>(d, a);
                for r in 0..current.rows() {
                    let v = self.bracket_fast(&xa, current.row(r));
                    if v.iter().any(|c| !c.is_zero()) {
                        rows.push(v);
                    }
                }
            }
            let next = span_basis(d, rows);
            if next.rows() == current.rows() {
                return Err(LieError::NotNilpotent);
            }
            series.push(next);
        }
        // Adaptedness: n_i is spanned by the trailing dim(n_i) basis vectors.
        for (idx, term) in series.iter().enumerate() {
            let m = term.rows();
            let lead = d - m;
            let ok = (0..m).all(|r| term.row(r)[..lead].iter().all(Zero::is_zero));
            if !ok {
                return Err(LieError::NotAdapted { layer: idx + 1, dim: m });
            }
        }
        let dims: Vec<usize> = series.iter().map(RatMatrix::rows).collect();
        self.layer_dims = dims.windows(2).map(|w| w[0] - w[1]).collect();
        self.layer_of = Vec::with_capacity(d);
        for (layer, &n) in self.layer_dims.iter().enumerate() {
            self.layer_of.extend(std::iter::repeat_n(layer + 1, n));
        }
        self.series = series;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nilpotency step `s` (0 for the zero algebra).
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Layer (1-based) of basis index `idx`.
    pub fn layer_of(&self, idx: usize) -> usize {
        self.layer_of[idx]
    }

    /// Basis indices belonging to layer `layer` (1-based).
    pub fn layer_range(&self, layer: usize) -> Range<usize> {
        let start: usize = self.layer_dims[..layer - 1].iter().sum();
        start..start + self.layer_dims[layer - 1]
    }

    /// Dimension of the first layer `n / [n, n]`.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims.first().copied().unwrap_or(0)
    }

    /// Nonzero structure constants `(i, j, k, c_ij^k)` with `i < j`.
    pub fn structure_constants(&self) -> &[(usize, usize, usize, Rat)] {
        &self.constants
    }

    /// Row bases of `n_1, ..., n_s, n_{s+1} = 0` (reduced echelon form).
    pub fn lower_central_series(&self) -> &[RatMatrix] {
        &self.series
    }

    fn check_len(&self, v: usize) -> Result<(), LieError> {
        if v != self.dim {
            return Err(LieError::DimensionMismatch { expected: self.dim, got: v });
        }
        Ok(())
    }

    pub fn bracket<S: BracketScalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>, LieError> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.bracket_fast(x, y))
    }

    /// Unchecked bracket; panics on length mismatch.
    pub fn bracket_fast<S: BracketScalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let table = S::table(self);
        let mut out = vec![S::zero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                let entries = &table[i][j];
                if entries.is_empty() || yj.is_zero() {
                    continue;
                }
                let w = xi.mul_ref(yj);
                for (k, c) in entries {
                    out[*k] = out[*k].add_ref(&w.mul_ref(c));
                }
            }
        }
        out
    }

    /// Exact product `log(exp(x) exp(y))`, truncated at the nilpotency step.
    pub fn bch<S: BracketScalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>, LieError> {
        if self.step() > MAX_BCH_STEP {
            return Err(LieError::UnsupportedStep { step: self.step(), max: MAX_BCH_STEP });
        }
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.bch_fast(x, y))
    }

    /// Unchecked [`bch`](Self::bch); assumes step <= 4 and matching lengths.
    pub fn bch_fast<S: BracketScalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let mut out: Vec<S> = x.iter().zip(y).map(|(a, b)| a.add_ref(b)).collect();
        let step = self.step();
        if step < 2 {
            return out;
        }
        let xy = self.bracket_fast(x, y);
        axpy(&mut out, &S::from_rat(&rat(1, 2)), &xy);
        if step < 3 {
            return out;
        }
        let xxy = self.bracket_fast(x, &xy);
        let yyx = self.bracket_fast(y, &xy).iter().map(S::neg_ref).collect::<Vec<_>>();
        let twelfth = S::from_rat(&rat(1, 12));
        axpy(&mut out, &twelfth, &xxy);
        axpy(&mut out, &twelfth, &yyx);
        if step < 4 {
            return out;
        }
        let yxxy = self.bracket_fast(y, &xxy);
        axpy(&mut out, &S::from_rat(&rat(-1, 24)), &yxxy);
        out
    }

    /// Homogeneous quasi-norm `max_i |p_i(x)|^(1/i)` for the given layer splitting.
    pub fn quasi_norm<S: Scalar>(&self, split: &LayerSplitting, x: &[S]) -> Result<f64, LieError> {
        self.check_len(x.len())?;
        if split.dim() != self.dim {
            return Err(LieError::DimensionMismatch { expected: self.dim, got: split.dim() });
        }
        Ok(split.quasi_norm(x))
    }
}

fn antisymmetry_error(i: usize, j: usize, k: usize, a: &Rat, b: &Rat) -> LieError {
    LieError::Antisymmetry {
        i: i + 1,
        j: j + 1,
        k: k + 1,
        a: a.to_string(),
        b: b.to_string(),
    }
}

fn axpy<S: Scalar>(out: &mut [S], a: &S, v: &[S]) {
    for (o, vi) in out.iter_mut().zip(v) {
        if !vi.is_zero() {
            *o = o.add_ref(&a.mul_ref(vi));
        }
    }
}

/// Standard basis vector `e_i` of length `d`.
pub fn unit<S: Scalar>(d: usize, i: usize) -> Vec<S> {
    let mut v = vec![S::zero(); d];
    v[i] = S::one();
    v
}

/// Reduced echelon basis of the span of `rows` (possibly empty).
fn span_basis(d: usize, rows: Vec<Vec<Rat>>) -> RatMatrix {
    if rows.is_empty() {
        return RatMatrix::zeros(0, d);
    }
    let m = RatMatrix::from_rows(rows).expect("rows have equal length");
    let (r, pivots) = m.row_echelon();
    RatMatrix::from_rows((0..pivots.len()).map(|i| r.row(i).to_vec()).collect())
        .expect("rows have equal length")
}

/// Complements `n_(i)` with `n_i = n_(i) + n_{i+1}` used by the quasi-norm.
#[derive(Clone, Debug)]
pub struct LayerSplitting {
    dim: usize,
    /// Column ranges of each layer inside `basis`.
    blocks: Vec<Range<usize>>,
    /// Columns are the complement vectors, layer by layer; `None` for coordinate blocks.
    basis: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl LayerSplitting {
    /// Complements spanned by the basis vectors of each layer.
    pub fn coordinate(alg: &LieAlgebra) -> Self {
        let blocks = (1..=alg.step()).map(|i| alg.layer_range(i)).collect();
        LayerSplitting { dim: alg.dim(), blocks, basis: None }
    }

    /// Custom complements: `complements[i]` holds vectors spanning `n_(i+1)`.
    pub fn new(alg: &LieAlgebra, complements: &[Vec<Vec<Rat>>]) -> Result<Self, LieError> {
        let d = alg.dim();
        let s = alg.step();
        if complements.len() != s {
            return Err(LieError::InvalidSplitting(format!(
                "expected {s} layers, got {}",
                complements.len()
            )));
        }
        for (i, layer) in complements.iter().enumerate() {
            if layer.len() != alg.layer_dims()[i] {
                return Err(LieError::InvalidSplitting(format!(
                    "layer {} needs {} vectors, got {}",
                    i + 1,
                    alg.layer_dims()[i],
                    layer.len()
                )));
            }
            if let Some(v) = layer.iter().find(|v| v.len() != d) {
                return Err(LieError::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        let series = alg.lower_central_series();
        for i in 0..s {
            let tail: Vec<Vec<Rat>> = complements[i..].iter().flatten().cloned().collect();
            let span = span_basis(d, tail.clone());
            if span.rows() != series[i].rows() {
                return Err(LieError::InvalidSplitting(format!(
                    "layers {}.. are not independent",
                    i + 1
                )));
            }
            let mut joint = tail;
            joint.extend((0..series[i].rows()).map(|r| series[i].row(r).to_vec()));
            if span_basis(d, joint).rows() != series[i].rows() {
                return Err(LieError::InvalidSplitting(format!(
                    "complement {} is not contained in term {} of the lower central series",
                    i + 1,
                    i + 1
                )));
            }
        }
        let cols: Vec<Vec<f64>> = complements
            .iter()
            .flatten()
            .map(|v| v.iter().map(rat_to_f64).collect())
            .collect();
        let b = DMatrix::from_fn(d, d, |r, c| cols[c][r]);
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| LieError::InvalidSplitting("complement basis is singular".into()))?;
        let mut blocks = Vec::new();
        let mut start = 0;
        for layer in complements {
            blocks.push(start..start + layer.len());
            start += layer.len();
        }
        Ok(LayerSplitting { dim: d, blocks, basis: Some((b, b_inv)) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean norms of the layer projections `p_i(x)`.
    pub fn layer_norms<S: Scalar>(&self, x: &[S]) -> Vec<f64> {
        let xf: Vec<f64> = x.iter().map(S::to_f64).collect();
        match &self.basis {
            None => self
                .blocks
                .iter()
                .map(|r| xf[r.clone()].iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
            Some((b, b_inv)) => {
                let c = b_inv * DVector::from_vec(xf);
                self.blocks
                    .iter()
                    .map(|r| {
                        let part = b.columns(r.start, r.len()) * c.rows(r.start, r.len());
                        part.norm()
                    })
                    .collect()
            }
        }
    }

    pub fn quasi_norm<S: Scalar>(&self, x: &[S]) -> f64 {
        self.layer_norms(x)
            .iter()
            .enumerate()
            .map(|(i, n)| if i == 0 { *n } else { n.powf(1.0 / (i + 1) as f64) })
            .fold(0.0, f64::max)
    }
}

/// Heisenberg algebra `[X_1, X_2] = X_3`.
pub fn heisenberg() -> LieAlgebra {
    LieAlgebra::new(3, &[(0, 1, 2, Rat::one())]).expect("valid algebra")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratcore::rat_int;
    use proptest::prelude::*;

    fn five_dim() -> LieAlgebra {
        // E12, E23, E24, E13, E14 with [E12, E23] = E13 and [E12, E24] = E14.
        LieAlgebra::new(5, &[(0, 1, 3, rat_int(1)), (0, 2, 4, rat_int(1))]).unwrap()
    }

    fn v(c: &[i64]) -> Vec<Rat> {
        c.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn brackets_of_fixtures() {
        let h = heisenberg();
        assert_eq!(h.bracket(&v(&[1, 0, 0]), &v(&[0, 1, 0])).unwrap(), v(&[0, 0, 1]));
        assert_eq!(h.bracket(&v(&[1, 0, 0]), &v(&[1, 0, 0])).unwrap(), v(&[0, 0, 0]));
        assert_eq!(h.bracket(&v(&[0, 1, 0]), &v(&[1, 0, 0])).unwrap(), v(&[0, 0, -1]));
        let f = five_dim();
        assert_eq!(
            f.bracket(&v(&[1, 0, 0, 0, 0]), &v(&[0, 1, 0, 0, 0])).unwrap(),
            v(&[0, 0, 0, 1, 0])
        );
        assert!(matches!(
            h.bracket(&v(&[1, 0]), &v(&[0, 1, 0])),
            Err(LieError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn series_and_layers() {
        let h = heisenberg();
        let lcs = h.lower_central_series();
        assert_eq!(lcs.iter().map(RatMatrix::rows).collect::<Vec<_>>(), vec![3, 1, 0]);
        assert_eq!(lcs[1].row(0), v(&[0, 0, 1]).as_slice());
        assert_eq!(h.step(), 2);
        assert_eq!(h.layer_dims(), &[2, 1]);

        let a = LieAlgebra::abelian(2);
        assert_eq!(a.step(), 1);
        assert_eq!(a.lower_central_series()[1].rows(), 0);

        let f = five_dim();
        assert_eq!(f.step(), 2);
        assert_eq!(f.layer_dims(), &[3, 2]);
        assert_eq!(f.layer_range(2), 3..5);
    }

    #[test]
    fn invalid_tensors_rejected() {
        let e = LieAlgebra::new(3, &[(0, 1, 2, rat_int(1)), (1, 0, 2, rat_int(1))]).unwrap_err();
        assert!(matches!(e, LieError::Antisymmetry { .. }));

        // sl2-like relations are not nilpotent.
        let e = LieAlgebra::new(
            3,
            &[(0, 1, 2, rat_int(1)), (2, 0, 0, rat_int(2)), (2, 1, 1, rat_int(-2))],
        )
        .unwrap_err();
        assert!(matches!(e, LieError::NotNilpotent | LieError::Jacobi { .. }));

        // [X1,X2] = X3, [X3,X4] = X5 breaks Jacobi on (X1, X2, X4).
        let e = LieAlgebra::new(5, &[(0, 1, 2, rat_int(1)), (2, 3, 4, rat_int(1))]).unwrap_err();
        assert_eq!(e, LieError::Jacobi { i: 1, j: 2, l: 4 });

        // Centre listed first: basis not adapted.
        let e = LieAlgebra::new(3, &[(1, 2, 0, rat_int(1))]).unwrap_err();
        assert!(matches!(e, LieError::NotAdapted { layer: 2, .. }));
    }

    #[test]
    fn bch_small_cases() {
        let h = heisenberg();
        let x = v(&[1, 0, 0]);
        let y = v(&[0, 1, 0]);
        assert_eq!(
            h.bch(&x, &y).unwrap(),
            vec![rat_int(1), rat_int(1), rat(1, 2)]
        );
        assert_eq!(h.bch(&x, &v(&[0, 0, 0])).unwrap(), x);
        assert_eq!(h.bch(&x, &v(&[-1, 0, 0])).unwrap(), v(&[0, 0, 0]));
    }

    #[test]
    fn step_five_bch_rejected() {
        // Filiform: [X1, X_k] = X_{k+1}, k = 2..5 has step 5.
        let triples: Vec<_> = (1..5).map(|k| (0, k, k + 1, rat_int(1))).collect();
        let f = LieAlgebra::new(6, &triples).unwrap();
        assert_eq!(f.step(), 5);
        let z = v(&[0; 6]);
        assert!(matches!(f.bch(&z, &z), Err(LieError::UnsupportedStep { step: 5, .. })));
    }

    #[test]
    fn quasi_norm_examples() {
        let h = heisenberg();
        let split = LayerSplitting::coordinate(&h);
        assert_eq!(h.quasi_norm(&split, &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((h.quasi_norm(&split, &[0.0, 0.0, -0.25]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(h.quasi_norm(&split, &[0.0, 0.0, 0.0]).unwrap(), 0.0);

        // A skewed complement: n_(1) = span{X + Z, Y}.
        let skew = LayerSplitting::new(&h, &[vec![v(&[1, 0, 1]), v(&[0, 1, 0])], vec![v(&[0, 0, 1])]])
            .unwrap();
        let r2 = 2f64.sqrt();
        assert!((skew.quasi_norm(&[1.0, 0.0, 1.0]) - r2).abs() < 1e-12);
        // X = (X + Z) - Z projects to X + Z on the first layer.
        assert!((skew.quasi_norm(&[1.0, 0.0, 0.0]) - r2).abs() < 1e-12);
        assert!((skew.quasi_norm(&[0.0, 0.0, 4.0]) - 2.0).abs() < 1e-12);

        let bad = LayerSplitting::new(&h, &[vec![v(&[1, 0, 0]), v(&[0, 0, 1])], vec![v(&[0, 0, 1])]]);
        assert!(matches!(bad, Err(LieError::InvalidSplitting(_))));
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-20i64..=20, 1i64..=6).prop_map(|(n, d)| rat(n, d))
    }

    fn step3() -> LieAlgebra {
        // Engel-type algebra: [X1,X2]=X3, [X1,X3]=X4.
        LieAlgebra::new(4, &[(0, 1, 2, rat_int(1)), (0, 2, 3, rat_int(1))]).unwrap()
    }

    fn step4() -> LieAlgebra {
        LieAlgebra::new(5, &[(0, 1, 2, rat_int(1)), (0, 2, 3, rat_int(1)), (0, 3, 4, rat_int(1))])
            .unwrap()
    }

    proptest! {
        #[test]
        fn bch_is_associative(xs in proptest::collection::vec(small_rat(), 15)) {
            for alg in [heisenberg(), step3(), step4(), five_dim()] {
                let d = alg.dim();
                let (x, y, w) = (&xs[..d], &xs[5..5 + d], &xs[10..10 + d]);
                let left = alg.bch(&alg.bch(x, y).unwrap(), w).unwrap();
                let right = alg.bch(x, &alg.bch(y, w).unwrap()).unwrap();
                prop_assert_eq!(left, right);
            }
        }

        #[test]
        fn quasi_norm_scales_per_layer(t in -5.0f64..5.0, c in -3.0f64..3.0) {
            let alg = step3();
            let split = LayerSplitting::coordinate(&alg);
            for (idx, layer) in [(0usize, 1i32), (2, 2), (3, 3)] {
                let mut x = vec![0.0; 4];
                x[idx] = c;
                let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
                let expected = t.abs().powf(1.0 / layer as f64) * split.quasi_norm(&x);
                prop_assert!((split.quasi_norm(&tx) - expected).abs() < 1e-12);
            }
        }
    }
}
