//! Perturbed Anosov maps with a prescribed linear part: lifts, derivatives,
//! stable directions, periodic orbits and the conjugacy to the linear part.
//!
//! Every map here has the form `F(x) = K(x)·Ψ(x)` where the left factor `K`
//! only depends on the horizontal coordinates of `x` modulo `Z^{d_1}`, so
//! `F(xγ) = F(x)Ψ(γ)` holds identically.
//!
//! Tangent vectors are right-trivialized: `ξ ∈ n` at `x` stands for the
//! velocity of `s ↦ exp(sξ)·x`. In this frame the derivative of `Ψ` is `ψ`
//! at every point and the algebraic stable bundle is the constant `n^s`.

mod conjugacy;
mod periodic;

pub use conjugacy::{
    run_conjugacy, solve_conjugacy, su_decompose, ConjugacyConfig, ConjugacyField, SweepStats,
};
pub use periodic::{
    linear_fixed_points, linear_orbits, periodic_points, periodic_points_up_to,
    rigidity_experiment, LinearOrbit, PeriodicConfig, PeriodicGap, PeriodicOrbitReport,
    PeriodicScan, RigidityConfig, RigiditySummary,
};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::density::DensityError;
use crate::endo::{AutoMap, EndoError, SpectralSplit, DEFAULT_TOL};
use crate::nilgroup::{GroupError, GroupPoint, ManifoldPoint, NilGroup};

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Smallest step accepted by [`PerturbedMap::jacobian_with`].
pub const MIN_FD_STEP: f64 = 1e-12;
/// Tolerance on the angle between successive stable-direction estimates.
pub const DIRECTION_TOL: f64 = 1e-9;

const FIXED_POINT_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error(transparent)]
    Endo(#[from] EndoError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid direction: {0}")]
    Direction(String),
    #[error("invalid bump: {0}")]
    Bump(String),
    #[error("invalid amplitude {0}")]
    Amplitude(f64),
    #[error("perturbation budget {budget:.4} breaks the hyperbolicity margin (stable modulus {stable:.4}, unstable modulus {unstable:.4})")]
    Budget { budget: f64, stable: f64, unstable: f64 },
    #[error("finite-difference step {step:e} underflows")]
    StepUnderflow { step: f64 },
    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("period must be at least 1")]
    Period,
    #[error("psi^P - I is singular on layer {layer}; periodic points are not isolated")]
    DegenerateFixedSet { layer: usize },
    #[error("{count} periodic points exceed the budget of {limit}")]
    TooManyPoints { count: String, limit: u64 },
    #[error("found {found} periodic points, expected {expected}")]
    SeedCount { found: usize, expected: String },
    #[error("grid of {nodes} nodes is too large for this system")]
    GridTooLarge { nodes: usize },
    #[error("no periodic orbit could be refined")]
    NoOrbits,
    #[error("exponent spread {spread:e} exceeds {tol:e} for a smoothly conjugated map")]
    RigidityViolation { spread: f64, tol: f64 },
}

/// One term `c cos(2π m·h) + s sin(2π m·h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpTerm {
    pub freq: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// A trigonometric polynomial on the horizontal torus `T^{d_1}`, rescaled so
/// that `sup|φ| ≤ 1` and `sup‖∇φ‖ ≤ 1`.
///
/// Only horizontal frequencies are allowed: the horizontal coordinates are the
/// only second-kind coordinates that are well defined modulo the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    hdim: usize,
    terms: Vec<BumpTerm>,
}

impl Bump {
    pub fn new(hdim: usize, terms: Vec<BumpTerm>) -> Result<Self, DynError> {
        let mut sup = 0.0;
        let mut lip = 0.0;
        for t in &terms {
            if t.freq.len() != hdim {
                return Err(DynError::Bump(format!(
                    "frequency {:?} has length {}, horizontal dimension is {hdim}",
                    t.freq,
                    t.freq.len()
                )));
            }
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(DynError::Bump("non-finite coefficient".into()));
            }
            let amp = t.cos.hypot(t.sin);
            let m = t.freq.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
            sup += amp;
            lip += 2.0 * PI * m * amp;
        }
        let scale = sup.max(lip);
        if scale == 0.0 {
            return Err(DynError::Bump("all coefficients vanish".into()));
        }
        let terms = terms
            .into_iter()
            .map(|t| BumpTerm { freq: t.freq, cos: t.cos / scale, sin: t.sin / scale })
            .collect();
        Ok(Bump { hdim, terms })
    }

    /// `Σ_j sin(2π h_j) + ½ cos(2π Σ_j h_j)`, normalized.
    pub fn standard(hdim: usize) -> Self {
        let mut terms: Vec<BumpTerm> = (0..hdim)
            .map(|j| {
                let mut freq = vec![0; hdim];
                freq[j] = 1;
                BumpTerm { freq, cos: 0.0, sin: 1.0 }
            })
            .collect();
        terms.push(BumpTerm { freq: vec![1; hdim], cos: 0.5, sin: 0.0 });
        Bump::new(hdim, terms).expect("nonzero standard bump")
    }

    pub fn hdim(&self) -> usize {
        self.hdim
    }

    /// Normalized terms.
    pub fn terms(&self) -> &[BumpTerm] {
        &self.terms
    }

    pub fn value(&self, h: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = 2.0 * PI * dot_i(&t.freq, h);
                t.cos * a.cos() + t.sin * a.sin()
            })
            .sum()
    }

    pub fn gradient(&self, h: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.hdim];
        for t in &self.terms {
            let a = 2.0 * PI * dot_i(&t.freq, h);
            let c = 2.0 * PI * (t.sin * a.cos() - t.cos * a.sin());
            for (gj, &m) in g.iter_mut().zip(&t.freq) {
                *gj += c * m as f64;
            }
        }
        g
    }
}

fn dot_i(m: &[i64], h: &[f64]) -> f64 {
    m.iter().zip(h).map(|(&a, b)| a as f64 * b).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationKind {
    /// `F(x) = exp(εφ(x)v)·Ψ(x)`.
    Shear,
    /// `F = G∘Ψ∘G^{-1}` with `G(x) = exp(εφ(x)v)·x`.
    Conjugated,
}

/// A map `F(x) = K(x)·Ψ(x)` on `N` covering an Anosov map of `N/Γ`.
#[derive(Clone, Debug)]
pub struct PerturbedMap {
    linear: AutoMap,
    split: SpectralSplit,
    kind: PerturbationKind,
    direction: Vec<f64>,
    psi_direction: Vec<f64>,
    amplitude: f64,
    bump: Bump,
    hdim: usize,
    psi1_inv: DMatrix<f64>,
    psi1_norm: f64,
}

impl PerturbedMap {
    /// Shear along `direction`, by default the first stable basis vector.
    pub fn shear(
        linear: AutoMap,
        direction: Option<Vec<f64>>,
        amplitude: f64,
        bump: Bump,
    ) -> Result<Self, DynError> {
        Self::build(PerturbationKind::Shear, linear, direction, amplitude, bump)
    }

    /// Smooth conjugate `G∘Ψ∘G^{-1}`.
    pub fn conjugated(
        linear: AutoMap,
        direction: Option<Vec<f64>>,
        amplitude: f64,
        bump: Bump,
    ) -> Result<Self, DynError> {
        Self::build(PerturbationKind::Conjugated, linear, direction, amplitude, bump)
    }

    /// The unperturbed map, as a shear of amplitude zero.
    pub fn unperturbed(linear: AutoMap) -> Result<Self, DynError> {
        let hdim = linear.algebra().horizontal_dim();
        let d = linear.dim();
        Self::shear(linear, Some(crate::liealg::unit(d, 0)), 0.0, Bump::standard(hdim))
    }

    fn build(
        kind: PerturbationKind,
        linear: AutoMap,
        direction: Option<Vec<f64>>,
        amplitude: f64,
        bump: Bump,
    ) -> Result<Self, DynError> {
        let d = linear.dim();
        let hdim = linear.algebra().horizontal_dim();
        let split = linear.hyperbolic_splitting(DEFAULT_TOL)?;
        let direction = match direction {
            Some(v) => v,
            None => stable_direction_of(&split)?,
        };
        if direction.len() != d {
            return Err(DynError::Direction(format!("length {}, expected {d}", direction.len())));
        }
        let n = norm(&direction);
        if !n.is_finite() || n == 0.0 {
            return Err(DynError::Direction("zero or non-finite vector".into()));
        }
        let direction: Vec<f64> = direction.iter().map(|x| x / n).collect();
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(DynError::Amplitude(amplitude));
        }
        if bump.hdim() != hdim {
            return Err(DynError::Bump(format!(
                "bump is on a {}-torus, horizontal dimension is {hdim}",
                bump.hdim()
            )));
        }
        let psi1 = linear.rational_blocks()[0].to_f64();
        let psi1_inv = psi1.clone().try_inverse().ok_or(DynError::Endo(EndoError::NotHyperbolic))?;
        let psi1_norm = psi1.singular_values().max();
        let psi_direction = linear.apply(&direction);
        let map = PerturbedMap {
            linear,
            split,
            kind,
            direction,
            psi_direction,
            amplitude,
            bump,
            hdim,
            psi1_inv,
            psi1_norm,
        };
        let budget = map.budget();
        let stable = map.split.stable_modulus();
        let unstable = map.split.unstable_min_modulus();
        if !(stable + budget < 1.0 && 1.0 < unstable - budget) {
            return Err(DynError::Budget { budget, stable, unstable });
        }
        Ok(map)
    }

    pub fn linear_part(&self) -> &AutoMap {
        &self.linear
    }

    pub fn group(&self) -> &NilGroup {
        self.linear.group()
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }

    pub fn kind(&self) -> PerturbationKind {
        self.kind
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    /// First-order bound on the `C^1` size of `log K`; must leave
    /// `μ^s + budget < 1 < μ^u_- - budget`.
    pub fn budget(&self) -> f64 {
        let eps = self.amplitude;
        match self.kind {
            PerturbationKind::Shear => eps,
            PerturbationKind::Conjugated => {
                let vh = norm(&self.direction[..self.hdim]);
                let contraction = 1.0 - eps * vh;
                if contraction <= 0.0 {
                    return f64::INFINITY;
                }
                let pv = norm(&self.psi_direction);
                let amp = eps * (1.0 + pv);
                let lip = eps * (self.psi1_norm + pv) / contraction;
                amp.max(lip)
            }
        }
    }

    fn phi(&self, h: &[f64]) -> f64 {
        self.amplitude * self.bump.value(h)
    }

    /// Horizontal part of `G^{-1}`: solves `y + εφ(y) v_h = h`.
    fn conjugator_inverse_horizontal(&self, h: &[f64]) -> Vec<f64> {
        let vh = &self.direction[..self.hdim];
        let mut y = h.to_vec();
        for _ in 0..FIXED_POINT_ITERS {
            let p = self.phi(&y);
            let next: Vec<f64> = h.iter().zip(vh).map(|(a, v)| a - p * v).collect();
            let change = dist(&next, &y);
            y = next;
            if change <= 1e-17 * (1.0 + norm(&y)) {
                break;
            }
        }
        y
    }

    /// `log K(x)` from the horizontal coordinates `h` of `x`.
    pub fn left_factor(&self, h: &[f64]) -> Vec<f64> {
        match self.kind {
            PerturbationKind::Shear => {
                let p = self.phi(h);
                self.direction.iter().map(|v| p * v).collect()
            }
            PerturbationKind::Conjugated => {
                let y = self.conjugator_inverse_horizontal(h);
                let psi_y = self.linear.apply(&pad(&y, self.dim()));
                let a = self.phi(&psi_y[..self.hdim]);
                let b = self.phi(&y);
                let left: Vec<f64> = self.direction.iter().map(|v| a * v).collect();
                let right: Vec<f64> = self.psi_direction.iter().map(|v| -b * v).collect();
                self.linear.algebra().bch_fast(&left, &right)
            }
        }
    }

    /// `G(x) = exp(εφ(x)v)·x` for the conjugated construction.
    pub fn conjugator(&self, x: &GroupPoint<f64>) -> Option<GroupPoint<f64>> {
        (self.kind == PerturbationKind::Conjugated).then(|| {
            let p = self.phi(&x.coords[..self.hdim]);
            let g: Vec<f64> = self.direction.iter().map(|v| p * v).collect();
            self.group().mul(&GroupPoint::new(g), x)
        })
    }

    /// `G^{-1}(x)` for the conjugated construction.
    pub fn conjugator_inverse(&self, x: &GroupPoint<f64>) -> Option<GroupPoint<f64>> {
        (self.kind == PerturbationKind::Conjugated).then(|| {
            let y = self.conjugator_inverse_horizontal(&x.coords[..self.hdim]);
            let p = self.phi(&y);
            let g: Vec<f64> = self.direction.iter().map(|v| -p * v).collect();
            self.group().mul(&GroupPoint::new(g), x)
        })
    }

    /// The lift `F(x) = K(x)·Ψ(x)`.
    pub fn lift_eval(&self, x: &GroupPoint<f64>) -> GroupPoint<f64> {
        let k = self.left_factor(&x.coords[..self.hdim]);
        self.group().mul(&GroupPoint::new(k), &self.linear.apply_group(x))
    }

    /// The unique `x` with `F(x) = z`.
    pub fn lift_inverse(&self, z: &GroupPoint<f64>) -> Result<GroupPoint<f64>, DynError> {
        let zh = &z.coords[..self.hdim];
        let solve = |rhs: Vec<f64>| -> Vec<f64> {
            let v = &self.psi1_inv * nalgebra::DVector::from_vec(rhs);
            v.as_slice().to_vec()
        };
        let mut xh = solve(zh.to_vec());
        let mut change = f64::INFINITY;
        for _ in 0..FIXED_POINT_ITERS {
            let k = self.left_factor(&xh);
            let next = solve(zh.iter().zip(&k).map(|(a, b)| a - b).collect());
            change = dist(&next, &xh);
            xh = next;
            if change <= 1e-15 * (1.0 + norm(&xh)) {
                change = 0.0;
                break;
            }
        }
        if change > 1e-12 * (1.0 + norm(&xh)) {
            return Err(DynError::NoConvergence { what: "lift inverse", residual: change });
        }
        let k: Vec<f64> = self.left_factor(&xh).iter().map(|v| -v).collect();
        let w = self.group().mul(&GroupPoint::new(k), z);
        Ok(self.linear.apply_group_inverse(&w))
    }

    /// The induced map `f` on `N/Γ`.
    pub fn apply(&self, p: &ManifoldPoint<f64>) -> ManifoldPoint<f64> {
        self.group().reduce(&self.lift_eval(p.rep())).0
    }

    /// Right-trivialized derivative at `x`, by 4th-order central differences
    /// with the default step and one Richardson step.
    pub fn jacobian(&self, x: &GroupPoint<f64>) -> Result<DMatrix<f64>, DynError> {
        self.jacobian_with(x, DEFAULT_FD_STEP, true)
    }

    /// Column `j` differentiates `s ↦ log(F(exp(s e_j)x)·F(x)^{-1})
    /// = log(K(exp(s e_j)x)·exp(sψe_j)·K(x)^{-1})` at `s = 0`.
    pub fn jacobian_with(
        &self,
        x: &GroupPoint<f64>,
        step: f64,
        richardson: bool,
    ) -> Result<DMatrix<f64>, DynError> {
        let smallest = if richardson { step / 2.0 } else { step };
        if !(step.is_finite() && smallest >= MIN_FD_STEP) {
            return Err(DynError::StepUnderflow { step: smallest });
        }
        Ok(self.jacobian_at(&x.coords[..self.hdim], step, richardson))
    }

    pub(crate) fn jacobian_at(&self, h: &[f64], step: f64, richardson: bool) -> DMatrix<f64> {
        let d = self.dim();
        let alg = self.linear.algebra();
        let k0_inv: Vec<f64> = self.left_factor(h).iter().map(|v| -v).collect();
        let k0 = self.left_factor(h);
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let psi_e = self.linear.apply(&crate::liealg::unit::<f64>(d, j));
            let q = |s: f64| -> Vec<f64> {
                let k = if j < self.hdim {
                    let mut hs = h.to_vec();
                    hs[j] += s;
                    self.left_factor(&hs)
                } else {
                    k0.clone()
                };
                let moved: Vec<f64> = psi_e.iter().map(|v| s * v).collect();
                alg.bch_fast(&alg.bch_fast(&k, &moved), &k0_inv)
            };
            let d4 = |hh: f64| -> Vec<f64> {
                let (a, b, c, e) = (q(2.0 * hh), q(hh), q(-hh), q(-2.0 * hh));
                (0..d).map(|i| (-a[i] + 8.0 * b[i] - 8.0 * c[i] + e[i]) / (12.0 * hh)).collect()
            };
            let col = if richardson {
                let coarse = d4(step);
                let fine = d4(step / 2.0);
                (0..d).map(|i| (16.0 * fine[i] - coarse[i]) / 15.0).collect()
            } else {
                d4(step)
            };
            for i in 0..d {
                jac[(i, j)] = col[i];
            }
        }
        jac
    }

    /// Stable direction at `p` by pulling a generic line back along the
    /// forward orbit `p, f(p), ..., f^n(p)`.
    pub fn stable_direction(
        &self,
        p: &ManifoldPoint<f64>,
        n_iter: usize,
    ) -> Result<StableDirection, DynError> {
        if self.split.stable_dim() == 0 {
            return Err(DynError::Direction("the linear part has no stable directions".into()));
        }
        let n_iter = n_iter.max(2);
        let mut orbit = vec![p.clone()];
        for _ in 0..n_iter {
            let next = self.apply(orbit.last().expect("nonempty"));
            orbit.push(next);
        }
        let lus: Vec<_> = orbit[..n_iter]
            .iter()
            .map(|q| self.jacobian_at(&q.rep().coords[..self.hdim], DEFAULT_FD_STEP, true).lu())
            .collect();
        let start = generic_vector(self.dim());
        let pull = |from: usize| -> Result<Vec<f64>, DynError> {
            let mut u = nalgebra::DVector::from_vec(start.clone());
            for lu in lus[..from].iter().rev() {
                u = lu.solve(&u).ok_or(DynError::NoConvergence {
                    what: "stable direction (singular derivative)",
                    residual: f64::INFINITY,
                })?;
                u /= u.norm();
            }
            Ok(u.as_slice().to_vec())
        };
        let e = pull(n_iter)?;
        let e_prev = pull(n_iter - 1)?;
        let gap = line_gap(&e, &e_prev);
        if gap > DIRECTION_TOL {
            return Err(DynError::NoConvergence { what: "stable direction", residual: gap });
        }
        let e = canonical_sign(e);
        let j0 = self.jacobian_at(&p.rep().coords[..self.hdim], DEFAULT_FD_STEP, true);
        let contraction = (&j0 * nalgebra::DVector::from_column_slice(&e)).norm();
        Ok(StableDirection { direction: e, contraction, gap })
    }
}

/// Unit vector spanning the stable line at a point, with `‖DF e^s‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct StableDirection {
    pub direction: Vec<f64>,
    pub contraction: f64,
    /// Angle between the last two pull-back estimates.
    pub gap: f64,
}

/// First stable basis vector of the splitting, sign-normalized.
pub fn stable_direction_of(split: &SpectralSplit) -> Result<Vec<f64>, DynError> {
    if split.stable_dim() == 0 {
        return Err(DynError::Direction("the linear part has no stable directions".into()));
    }
    Ok(canonical_sign(split.stable_basis().column(0).iter().copied().collect()))
}

/// First unstable basis vector of the splitting, sign-normalized.
pub fn unstable_direction_of(split: &SpectralSplit) -> Result<Vec<f64>, DynError> {
    if split.unstable_dim() == 0 {
        return Err(DynError::Direction("the linear part has no unstable directions".into()));
    }
    Ok(canonical_sign(split.unstable_basis().column(0).iter().copied().collect()))
}

/// Makes the largest-magnitude entry positive.
pub fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Distance between the lines through two unit vectors, ≈ the angle between them.
pub fn line_gap(a: &[f64], b: &[f64]) -> f64 {
    let minus = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let plus = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    minus.min(plus)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn pad(h: &[f64], d: usize) -> Vec<f64> {
    let mut v = h.to_vec();
    v.resize(d, 0.0);
    v
}

pub(crate) fn generic_vector(d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|i| 1.0 + ((i + 2) as f64).sqrt().fract()).collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::heisenberg;
    use crate::ratcore::RatMatrix;
    use std::sync::Arc;

    fn heis() -> AutoMap {
        let m = RatMatrix::from_i64_rows(&[[4, 2, 0], [2, 2, 0], [0, 0, 4]]);
        AutoMap::new(Arc::new(heisenberg()), m).unwrap()
    }

    fn shear(eps: f64) -> PerturbedMap {
        PerturbedMap::shear(heis(), None, eps, Bump::standard(2)).unwrap()
    }

    /// `J ξ = (∇φ·ξ_h) v + Ad_{exp(φv)} ψξ` for a shear.
    fn exact_jacobian(f: &PerturbedMap, h: &[f64]) -> DMatrix<f64> {
        let d = f.dim();
        let alg = f.linear_part().algebra();
        let p = f.phi(h);
        let grad: Vec<f64> = f.bump.gradient(h).iter().map(|g| f.amplitude * g).collect();
        let a: Vec<f64> = f.direction.iter().map(|v| p * v).collect();
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let xi = crate::liealg::unit::<f64>(d, j);
            let mut term = f.linear_part().apply(&xi);
            let mut col = term.clone();
            for k in 1..=alg.step() {
                term = alg.bracket_fast(&a, &term).iter().map(|x| x / k as f64).collect();
                col.iter_mut().zip(&term).for_each(|(c, t)| *c += t);
            }
            let dphi: f64 = grad.iter().zip(&xi[..f.hdim]).map(|(g, x)| g * x).sum();
            for i in 0..d {
                jac[(i, j)] = col[i] + dphi * f.direction[i];
            }
        }
        jac
    }

    #[test]
    fn bump_is_normalized() {
        let b = Bump::standard(2);
        let mut sup: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for i in 0..50 {
            for j in 0..50 {
                let h = [i as f64 / 50.0, j as f64 / 50.0];
                sup = sup.max(b.value(&h).abs());
                lip = lip.max(norm(&b.gradient(&h)));
            }
        }
        assert!(sup <= 1.0 + 1e-12 && lip <= 1.0 + 1e-12);
        assert!(Bump::new(2, vec![BumpTerm { freq: vec![1], cos: 1.0, sin: 0.0 }]).is_err());
        assert!(Bump::new(1, vec![]).is_err());
    }

    #[test]
    fn unperturbed_lift_is_psi() {
        let f = shear(0.0);
        let x = GroupPoint::new(vec![0.3, -1.2, 0.7]);
        assert_eq!(f.lift_eval(&x), f.linear_part().apply_group(&x));
    }

    #[test]
    fn lift_at_identity_is_the_shear() {
        let f = shear(0.01);
        let e = f.group().identity::<f64>();
        let got = f.lift_eval(&e);
        let p = 0.01 * f.bump().value(&[0.0, 0.0]);
        for (g, v) in got.coords.iter().zip(f.direction()) {
            assert!((g - p * v).abs() < 1e-15);
        }
        let s5 = 5f64.sqrt();
        let vs = [1.0, (-1.0 - s5) / 2.0, 0.0];
        let n = norm(&vs);
        let vs: Vec<f64> = vs.iter().map(|x| x / n).collect();
        assert!(line_gap(f.direction(), &vs) < 1e-12);
    }

    #[test]
    fn equivariance_of_lifts() {
        for f in [shear(0.05), PerturbedMap::conjugated(heis(), None, 0.02, Bump::standard(2)).unwrap()] {
            let g = f.group();
            let x = GroupPoint::new(vec![0.37, 0.81, 0.12]);
            for t in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [2, -1, 3]] {
                let gamma = g.from_second_kind(&t.map(|v| v as f64));
                let lhs = f.lift_eval(&g.mul(&x, &gamma));
                let rhs = g.mul(&f.lift_eval(&x), &f.linear_part().apply_group(&gamma));
                assert!(dist(&lhs.coords, &rhs.coords) < 1e-10);
            }
        }
    }

    #[test]
    fn lift_inverse_roundtrip() {
        for f in [shear(0.05), PerturbedMap::conjugated(heis(), None, 0.02, Bump::standard(2)).unwrap()] {
            let x = GroupPoint::new(vec![0.2, 0.9, -0.4]);
            let back = f.lift_inverse(&f.lift_eval(&x)).unwrap();
            assert!(dist(&back.coords, &x.coords) < 1e-12);
        }
    }

    #[test]
    fn conjugated_map_is_g_psi_g_inverse() {
        let f = PerturbedMap::conjugated(heis(), None, 0.02, Bump::standard(2)).unwrap();
        let x = GroupPoint::new(vec![0.61, 0.27, 0.5]);
        let ginv = f.conjugator_inverse(&x).unwrap();
        assert!(dist(&f.conjugator(&ginv).unwrap().coords, &x.coords) < 1e-14);
        let expected = f.conjugator(&f.linear_part().apply_group(&ginv)).unwrap();
        assert!(dist(&f.lift_eval(&x).coords, &expected.coords) < 1e-13);
    }

    #[test]
    fn jacobian_of_psi_is_psi() {
        let f = shear(0.0);
        let psi = f.linear_part().matrix().to_f64();
        for x in [vec![0.0; 3], vec![0.4, 0.7, 0.2]] {
            let j = f.jacobian(&GroupPoint::new(x)).unwrap();
            assert!((j - &psi).abs().max() < 1e-8);
        }
    }

    #[test]
    fn jacobian_matches_closed_form() {
        let f = shear(0.05);
        let h = [0.31, 0.77];
        let exact = exact_jacobian(&f, &h);
        let fd = f.jacobian(&GroupPoint::new(vec![0.31, 0.77, 0.5])).unwrap();
        assert!((fd - &exact).abs().max() < 1e-9);
    }

    #[test]
    fn fourth_order_error_ratio() {
        let f = shear(0.05);
        let h = [0.31, 0.77];
        let exact = exact_jacobian(&f, &h);
        let e1 = (f.jacobian_at(&h, 2e-2, false) - &exact).abs().max();
        let e2 = (f.jacobian_at(&h, 1e-2, false) - &exact).abs().max();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_underflow_rejected() {
        let f = shear(0.01);
        let x = f.group().identity();
        assert!(matches!(f.jacobian_with(&x, 1e-13, false), Err(DynError::StepUnderflow { .. })));
        assert!(matches!(f.jacobian_with(&x, f64::NAN, true), Err(DynError::StepUnderflow { .. })));
    }

    #[test]
    fn budget_enforced() {
        let err = PerturbedMap::shear(heis(), None, 0.3, Bump::standard(2)).unwrap_err();
        assert!(matches!(err, DynError::Budget { .. }));
    }

    #[test]
    fn stable_direction_of_psi_is_algebraic() {
        let f = shear(0.0);
        let p = f.group().manifold_point(vec![0.3, 0.6, 0.1]);
        let sd = f.stable_direction(&p, 40).unwrap();
        let s5 = 5f64.sqrt();
        let vs = [1.0, (-1.0 - s5) / 2.0, 0.0];
        let n = norm(&vs);
        let vs: Vec<f64> = vs.iter().map(|x| x / n).collect();
        assert!(line_gap(&sd.direction, &vs) < 1e-6);
        assert!((sd.contraction - (3.0 - s5)).abs() < 1e-6);
    }

    #[test]
    fn stable_direction_is_invariant() {
        let f = shear(0.01);
        let p = f.group().manifold_point(vec![0.13, 0.52, 0.9]);
        let here = f.stable_direction(&p, 40).unwrap();
        let there = f.stable_direction(&f.apply(&p), 40).unwrap();
        let j = f.jacobian(p.rep()).unwrap();
        let pushed = &j * nalgebra::DVector::from_column_slice(&here.direction);
        let pushed: Vec<f64> = (pushed.clone() / pushed.norm()).as_slice().to_vec();
        assert!(line_gap(&pushed, &there.direction) < 1e-6);
    }
}
