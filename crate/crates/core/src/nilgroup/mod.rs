//! The simply connected group `N = exp(n)` in first-kind coordinates, its
//! lattice `Γ` of integer second-kind points, and the quotient `M = N/Γ`.

use std::sync::Arc;

use thiserror::Error;

use crate::liealg::{BracketScalar, LayerSplitting, LieAlgebra, LieError, MAX_BCH_STEP};
use crate::ratcore::Rat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("lattice membership needs exact coordinates")]
    Inexact,
    #[error("search radius must be at least 1")]
    SearchRadius,
}

/// `exp(coords)` for a vector of first-kind coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupPoint<S> {
    pub coords: Vec<S>,
}

impl<S> GroupPoint<S> {
    pub fn new(coords: Vec<S>) -> Self {
        GroupPoint { coords }
    }
}

impl GroupPoint<Rat> {
    pub fn to_f64(&self) -> GroupPoint<f64> {
        GroupPoint::new(self.coords.iter().map(crate::ratcore::rat_to_f64).collect())
    }
}

/// Canonical representative of a coset `xΓ`: second-kind coordinates in `[0, 1)^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ManifoldPoint<S> {
    rep: GroupPoint<S>,
    second_kind: Vec<S>,
}

impl<S> ManifoldPoint<S> {
    pub fn rep(&self) -> &GroupPoint<S> {
        &self.rep
    }

    pub fn second_kind(&self) -> &[S] {
        &self.second_kind
    }
}

impl ManifoldPoint<Rat> {
    pub fn to_f64(&self) -> ManifoldPoint<f64> {
        ManifoldPoint {
            rep: self.rep.to_f64(),
            second_kind: self.second_kind.iter().map(crate::ratcore::rat_to_f64).collect(),
        }
    }
}

/// Group operations for a fixed algebra of step at most four.
#[derive(Clone, Debug)]
pub struct NilGroup {
    alg: Arc<LieAlgebra>,
}

impl NilGroup {
    pub fn new(alg: Arc<LieAlgebra>) -> Result<Self, GroupError> {
        if alg.step() > MAX_BCH_STEP {
            return Err(LieError::UnsupportedStep { step: alg.step(), max: MAX_BCH_STEP }.into());
        }
        Ok(NilGroup { alg })
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.alg
    }

    pub fn algebra_arc(&self) -> &Arc<LieAlgebra> {
        &self.alg
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    pub fn identity<S: BracketScalar>(&self) -> GroupPoint<S> {
        GroupPoint::new(vec![S::zero(); self.dim()])
    }

    /// Validates the coordinate length.
    pub fn point<S: BracketScalar>(&self, coords: Vec<S>) -> Result<GroupPoint<S>, GroupError> {
        if coords.len() != self.dim() {
            return Err(LieError::DimensionMismatch { expected: self.dim(), got: coords.len() }.into());
        }
        Ok(GroupPoint::new(coords))
    }

    /// `exp(t X_j)`.
    pub fn generator<S: BracketScalar>(&self, j: usize, t: S) -> GroupPoint<S> {
        let mut c = vec![S::zero(); self.dim()];
        c[j] = t;
        GroupPoint::new(c)
    }

    /// Product; panics if the coordinate lengths differ from the dimension.
    pub fn mul<S: BracketScalar>(&self, x: &GroupPoint<S>, y: &GroupPoint<S>) -> GroupPoint<S> {
        assert!(
            x.coords.len() == self.dim() && y.coords.len() == self.dim(),
            "group point of wrong dimension"
        );
        GroupPoint::new(self.alg.bch_fast(&x.coords, &y.coords))
    }

    pub fn try_mul<S: BracketScalar>(
        &self,
        x: &GroupPoint<S>,
        y: &GroupPoint<S>,
    ) -> Result<GroupPoint<S>, GroupError> {
        Ok(GroupPoint::new(self.alg.bch(&x.coords, &y.coords)?))
    }

    pub fn inv<S: BracketScalar>(&self, x: &GroupPoint<S>) -> GroupPoint<S> {
        GroupPoint::new(x.coords.iter().map(S::neg_ref).collect())
    }

    /// `(t_1, ..., t_d)` with `x = exp(t_1 X_1) ... exp(t_d X_d)`.
    pub fn to_second_kind<S: BracketScalar>(&self, x: &GroupPoint<S>) -> Vec<S> {
        let d = self.dim();
        let mut residual = x.coords.clone();
        let mut t = Vec::with_capacity(d);
        for j in 0..d {
            let tj = residual[j].clone();
            // Once only central coordinates remain, stripping is a subtraction.
            if self.alg.layer_of(j) == self.alg.step() {
                t.extend(residual[j..].iter().cloned());
                break;
            }
            if !tj.is_zero() {
                let mut g = vec![S::zero(); d];
                g[j] = tj.neg_ref();
                residual = self.alg.bch_fast(&g, &residual);
            }
            t.push(tj);
        }
        t
    }

    pub fn from_second_kind<S: BracketScalar>(&self, t: &[S]) -> GroupPoint<S> {
        let d = self.dim();
        assert_eq!(t.len(), d, "second-kind vector of wrong dimension");
        let mut acc = vec![S::zero(); d];
        for (j, tj) in t.iter().enumerate() {
            if tj.is_zero() {
                continue;
            }
            if self.alg.layer_of(j) == self.alg.step() {
                // Central factors commute with everything and add.
                for (a, b) in acc[j..].iter_mut().zip(&t[j..]) {
                    *a = a.add_ref(b);
                }
                break;
            }
            let mut g = vec![S::zero(); d];
            g[j] = tj.clone();
            acc = self.alg.bch_fast(&acc, &g);
        }
        GroupPoint::new(acc)
    }

    /// True iff every second-kind coordinate is an integer; exact points only.
    pub fn in_lattice<S: BracketScalar>(&self, x: &GroupPoint<S>) -> Result<bool, GroupError> {
        if !S::EXACT {
            return Err(GroupError::Inexact);
        }
        Ok(self.to_second_kind(x).iter().all(S::is_integer))
    }

    /// Canonical representative `r = x γ` of `xΓ` together with the lattice element `γ`.
    pub fn reduce<S: BracketScalar>(&self, x: &GroupPoint<S>) -> (ManifoldPoint<S>, GroupPoint<S>) {
        let d = self.dim();
        let mut r = x.clone();
        let mut gamma = self.identity::<S>();
        let mut t = self.to_second_kind(&r);
        for j in 0..d {
            let f = t[j].floor_i64();
            if f == 0 {
                continue;
            }
            let g = self.generator(j, S::from_i64(-f));
            r = self.mul(&r, &g);
            gamma = self.mul(&gamma, &g);
            t = self.to_second_kind(&r);
        }
        if !S::EXACT {
            // Rounding can leave a coordinate at 1.0 or a hair below 0; clamping
            // moves the point by at most one ulp and keeps the coset.
            let mut clamped = false;
            for tj in t.iter_mut() {
                let v = tj.to_f64();
                if v < 0.0 {
                    *tj = S::zero();
                    clamped = true;
                } else if v >= 1.0 {
                    *tj = S::from_f64_lossy(1.0 - f64::EPSILON / 2.0);
                    clamped = true;
                }
            }
            if clamped {
                r = self.from_second_kind(&t);
            }
        }
        (ManifoldPoint { rep: r, second_kind: t }, gamma)
    }

    /// Canonical point with the given second-kind coordinates, which must lie in `[0, 1)`.
    pub fn manifold_point<S: BracketScalar>(&self, t: Vec<S>) -> ManifoldPoint<S> {
        debug_assert!(t.iter().all(|c| c.floor_i64() == 0));
        ManifoldPoint { rep: self.from_second_kind(&t), second_kind: t }
    }

    /// `ρ(x, y) = q(log(y x^{-1}))`.
    pub fn rho<S: BracketScalar>(
        &self,
        split: &LayerSplitting,
        x: &GroupPoint<S>,
        y: &GroupPoint<S>,
    ) -> f64 {
        split.quasi_norm(&self.mul(y, &self.inv(x)).coords)
    }

    /// Lattice elements with integer second-kind coordinates in `[-radius, radius]^d`.
    pub fn lattice_box<S: BracketScalar>(&self, radius: i64) -> Vec<GroupPoint<S>> {
        let d = self.dim();
        let side = (2 * radius + 1) as usize;
        let total = side.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                let t: Vec<S> = (0..d)
                    .map(|_| {
                        let v = (idx % side) as i64 - radius;
                        idx /= side;
                        S::from_i64(v)
                    })
                    .collect();
                self.from_second_kind(&t)
            })
            .collect()
    }

    /// `min_γ ρ(p, q γ)` over the translates of [`lattice_box`](Self::lattice_box).
    pub fn manifold_dist<S: BracketScalar>(
        &self,
        split: &LayerSplitting,
        p: &ManifoldPoint<S>,
        q: &ManifoldPoint<S>,
        search_radius: i64,
    ) -> Result<f64, GroupError> {
        if search_radius < 1 {
            return Err(GroupError::SearchRadius);
        }
        Ok(self
            .lattice_box::<S>(search_radius)
            .iter()
            .map(|g| self.rho(split, &p.rep, &self.mul(&q.rep, g)))
            .fold(f64::INFINITY, f64::min))
    }
}
