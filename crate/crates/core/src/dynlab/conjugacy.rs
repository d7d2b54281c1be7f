use rayon::prelude::*;

use super::{norm, DynError, PerturbedMap};
use crate::density::coset_representatives;
use crate::endo::SpectralSplit;
use crate::liealg::LieAlgebra;
use crate::nilgroup::{GroupPoint, NilGroup};

/// Cap on stored interpolation entries.
const MAX_STENCIL_ENTRIES: usize = 40_000_000;

/// `x = x^s x^u` with `x^s ∈ exp(n^s)`, `x^u ∈ exp(n^u)`; returns both logarithms.
pub fn su_decompose(alg: &LieAlgebra, split: &SpectralSplit, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut s, _) = split.components(x);
    let scale = 1.0 + norm(x);
    let mut u = x.to_vec();
    for _ in 0..64 {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        u = alg.bch_fast(&neg, x);
        let (e, _) = split.components(&u);
        if norm(&e) <= 1e-16 * scale {
            break;
        }
        s = alg.bch_fast(&s, &e);
    }
    (s, u)
}

#[derive(Clone, Debug)]
pub struct ConjugacyConfig {
    /// Cells per axis; nodes sit at `i / grid_n`, `i = 0..=grid_n`.
    pub grid_n: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        ConjugacyConfig { grid_n: 17, tol: 1e-6, max_iter: 500 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepStats {
    pub iter: usize,
    /// `max ‖log(Ψ(H(x))^{-1} H(F(x)))‖` over the nodes.
    pub residual: f64,
    /// `max ‖log D(x)‖` over the nodes.
    pub sup_displacement: f64,
}

/// Displacement field `D` with `H(x) = D(x)·x` on a grid of second-kind
/// coordinates, multilinearly interpolated.
#[derive(Clone, Debug)]
pub struct ConjugacyField {
    grid_n: usize,
    dim: usize,
    values: Vec<f64>,
    pub history: Vec<SweepStats>,
    pub converged: bool,
}

impl ConjugacyField {
    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn residual(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |h| h.residual)
    }

    pub fn sup_displacement(&self) -> f64 {
        self.history.last().map_or(0.0, |h| h.sup_displacement)
    }

    /// `log D` at canonical second-kind coordinates `t ∈ [0, 1)^d`.
    pub fn displacement(&self, t: &[f64]) -> Vec<f64> {
        interpolate(&self.values, self.dim, &stencil(t, self.grid_n))
    }

    /// `H(x) = D(x)·x`.
    pub fn conjugacy(&self, group: &NilGroup, x: &GroupPoint<f64>) -> GroupPoint<f64> {
        let (r, _) = group.reduce(x);
        group.mul(&GroupPoint::new(self.displacement(r.second_kind())), x)
    }

    /// `iter,residual,sup_displacement`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,residual,sup_displacement\n");
        for h in &self.history {
            s.push_str(&format!("{},{:e},{:e}\n", h.iter, h.residual, h.sup_displacement));
        }
        s
    }
}

/// Corner nodes and weights for multilinear interpolation.
fn stencil(t: &[f64], n: usize) -> Vec<(usize, f64)> {
    let d = t.len();
    let side = n + 1;
    let mut base = Vec::with_capacity(d);
    let mut frac = Vec::with_capacity(d);
    for &tj in t {
        let x = (tj * n as f64).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        base.push(i);
        frac.push(x - i as f64);
    }
    let mut out = Vec::with_capacity(1 << d);
    for corner in 0..(1usize << d) {
        let mut idx = 0;
        let mut w = 1.0;
        for j in (0..d).rev() {
            let up = corner >> j & 1;
            idx = idx * side + base[j] + up;
            w *= if up == 1 { frac[j] } else { 1.0 - frac[j] };
        }
        if w != 0.0 {
            out.push((idx, w));
        }
    }
    out
}

fn interpolate(values: &[f64], d: usize, st: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for &(idx, w) in st {
        for (o, v) in out.iter_mut().zip(&values[idx * d..(idx + 1) * d]) {
            *o += w * v;
        }
    }
    out
}

struct Node {
    psi_x: Vec<f64>,
    log_k: Vec<f64>,
    image: Vec<(usize, f64)>,
    /// Stencils and `log K` at the preimages `F^{-1}(x γ_i)`.
    preimages: Vec<(Vec<(usize, f64)>, Vec<f64>)>,
}

/// Iterates the displacement equation `D(F(x)) = Ψ(D(x))·K(x)^{-1}` from
/// `D ≡ e`: the unstable part of `D` is updated backward,
/// `D(x) ← Ψ^{-1}(D(F(x))·K(x))`, the stable part forward, averaged over the
/// preimages `y` of `x`: `D(x) ← Ψ(D(y))·K(y)^{-1}`. Returns the field whether
/// or not the residual reached `tol`.
pub fn run_conjugacy(map: &PerturbedMap, cfg: &ConjugacyConfig) -> Result<ConjugacyField, DynError> {
    let group = map.group();
    let alg = group.algebra();
    let linear = map.linear_part();
    let split = map.split();
    let d = group.dim();
    let hdim = alg.horizontal_dim();
    let n = cfg.grid_n.max(1);
    let side = n + 1;
    let nodes = side
        .checked_pow(d as u32)
        .ok_or(DynError::GridTooLarge { nodes: usize::MAX })?;

    let stable = split.stable_dim() > 0;
    let cosets: Vec<GroupPoint<f64>> = if stable {
        coset_representatives(linear)?.representatives.iter().map(GroupPoint::to_f64).collect()
    } else {
        Vec::new()
    };
    let entries = nodes.saturating_mul(1 + cosets.len()).saturating_mul(1 << d);
    if entries > MAX_STENCIL_ENTRIES {
        return Err(DynError::GridTooLarge { nodes });
    }

    let setup: Vec<Result<Node, DynError>> = (0..nodes)
        .into_par_iter()
        .map(|idx| {
            let t = node_coords(idx, side, n, d);
            let x = group.from_second_kind(&t);
            let fx = map.lift_eval(&x);
            let image = stencil(group.reduce(&fx).0.second_kind(), n);
            let mut preimages = Vec::with_capacity(cosets.len());
            for gamma in &cosets {
                let y = map.lift_inverse(&group.mul(&x, gamma))?;
                let (ry, _) = group.reduce(&y);
                preimages.push((stencil(ry.second_kind(), n), map.left_factor(&y.coords[..hdim])));
            }
            Ok(Node {
                psi_x: linear.apply(&x.coords),
                log_k: map.left_factor(&x.coords[..hdim]),
                image,
                preimages,
            })
        })
        .collect();
    let setup: Vec<Node> = setup.into_iter().collect::<Result<_, _>>()?;

    let mut values = vec![0.0; nodes * d];
    let mut history = Vec::new();
    let mut converged = false;
    for iter in 1..=cfg.max_iter.max(1) {
        let next: Vec<f64> = setup
            .par_iter()
            .flat_map_iter(|node| {
                let dfx = interpolate(&values, d, &node.image);
                let back = linear.apply_inverse(&alg.bch_fast(&dfx, &node.log_k));
                let (_, bu) = su_decompose(alg, split, &back);
                let mut s = vec![0.0; d];
                if !node.preimages.is_empty() {
                    for (st, log_k) in &node.preimages {
                        let dy = interpolate(&values, d, st);
                        let neg_k: Vec<f64> = log_k.iter().map(|v| -v).collect();
                        let fwd = alg.bch_fast(&linear.apply(&dy), &neg_k);
                        let (fs, _) = su_decompose(alg, split, &fwd);
                        s.iter_mut().zip(&fs).for_each(|(a, b)| *a += b);
                    }
                    let m = node.preimages.len() as f64;
                    s.iter_mut().for_each(|a| *a /= m);
                }
                alg.bch_fast(&s, &bu)
            })
            .collect();
        values = next;

        let (residual, sup_displacement) = setup
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                let dx = &values[i * d..(i + 1) * d];
                let dfx = interpolate(&values, d, &node.image);
                let psi_d: Vec<f64> = linear.apply(dx).iter().map(|v| -v).collect();
                let inner = alg.bch_fast(&alg.bch_fast(&psi_d, &dfx), &node.log_k);
                let neg_psi_x: Vec<f64> = node.psi_x.iter().map(|v| -v).collect();
                let r = alg.bch_fast(&alg.bch_fast(&neg_psi_x, &inner), &node.psi_x);
                (norm(&r), norm(dx))
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        log::debug!("sweep {iter}: residual {residual:e}, sup displacement {sup_displacement:e}");
        history.push(SweepStats { iter, residual, sup_displacement });
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ConjugacyField { grid_n: n, dim: d, values, history, converged })
}

/// [`run_conjugacy`], failing when the iteration cap is reached first.
pub fn solve_conjugacy(map: &PerturbedMap, cfg: &ConjugacyConfig) -> Result<ConjugacyField, DynError> {
    let field = run_conjugacy(map, cfg)?;
    if !field.converged {
        return Err(DynError::NoConvergence { what: "conjugacy solver", residual: field.residual() });
    }
    Ok(field)
}

fn node_coords(mut idx: usize, side: usize, n: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let i = idx % side;
            idx /= side;
            i as f64 / n as f64
        })
        .collect()
}
