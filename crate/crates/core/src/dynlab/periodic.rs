use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::{norm, DynError, PerturbationKind, PerturbedMap, DEFAULT_FD_STEP};
use crate::density::cosets::layer_residues;
use crate::density::max_points_from_env;
use crate::endo::AutoMap;
use crate::nilgroup::{GroupPoint, ManifoldPoint};
use crate::ratcore::{Rat, RatMatrix};

/// Canonical points of `Fix(Ψ^P)` on `N/Γ`, sorted by second-kind coordinates.
///
/// Solved exactly layer by layer: once `x^{-1}Ψ^P(x)` has integral
/// coordinates below layer `i`, right-multiplying `x` by `exp(Z)` with `Z` in
/// layer `i` shifts the layer-`i` coordinates by `(ψ_i^P - I)Z`, and the
/// integral targets modulo the image of `ψ_i^P - I` give the distinct points.
/// The count is `|det(ψ^P - I)|`.
pub fn linear_fixed_points(
    map: &AutoMap,
    period: usize,
    max_points: u64,
) -> Result<Vec<ManifoldPoint<Rat>>, DynError> {
    if period == 0 {
        return Err(DynError::Period);
    }
    let power = map.power(period as u32);
    let group = map.group();
    let alg = map.algebra();
    let mut layers = Vec::new();
    let mut expected = BigInt::one();
    for (i, block) in power.rational_blocks().iter().enumerate() {
        let m = block.sub(&RatMatrix::identity(block.rows()));
        let det = m.det().expect("square block");
        if det.is_zero() {
            return Err(DynError::DegenerateFixedSet { layer: i + 1 });
        }
        expected *= det.numer().clone() / det.denom().clone();
        let int = m.to_int().map_err(|_| DynError::Endo(crate::endo::EndoError::NonIntegralBlock { layer: i + 1 }))?;
        let residues: Vec<Vec<Rat>> = layer_residues(&int)?
            .into_iter()
            .map(|r| r.into_iter().map(Rat::from_integer).collect())
            .collect();
        layers.push((m.inverse().expect("nonzero determinant"), residues));
    }
    let expected = num_traits::Signed::abs(&expected);
    match expected.to_u64() {
        Some(c) if c <= max_points => {}
        _ => return Err(DynError::TooManyPoints { count: expected.to_string(), limit: max_points }),
    }

    let mut partial = vec![group.identity::<Rat>()];
    for (i, (inv, residues)) in layers.iter().enumerate() {
        let range = alg.layer_range(i + 1);
        partial = partial
            .par_iter()
            .flat_map_iter(|x| {
                let u = group.mul(&group.inv(x), &power.apply_group(x));
                let ti = group.to_second_kind(&u)[range.clone()].to_vec();
                let range = range.clone();
                residues.iter().map(move |delta| {
                    let rhs: Vec<Rat> = delta.iter().zip(&ti).map(|(a, b)| a - b).collect();
                    let z = inv.mul_vec(&rhs);
                    let mut shift = vec![Rat::zero(); group.dim()];
                    shift[range.clone()].clone_from_slice(&z);
                    group.mul(x, &GroupPoint::new(shift))
                })
            })
            .collect();
    }
    let mut points: Vec<ManifoldPoint<Rat>> = partial
        .par_iter()
        .map(|x| {
            let r = group.reduce(x).0;
            let u = group.mul(&group.inv(r.rep()), &power.apply_group(r.rep()));
            debug_assert!(group.in_lattice(&u).unwrap_or(false));
            (group.in_lattice(&u).unwrap_or(false), r)
        })
        .filter_map(|(ok, r)| ok.then_some(r))
        .collect();
    points.sort_by(|a, b| a.second_kind().cmp(b.second_kind()));
    points.dedup_by(|a, b| a.second_kind() == b.second_kind());
    if BigInt::from(points.len()) != expected {
        return Err(DynError::SeedCount { found: points.len(), expected: expected.to_string() });
    }
    Ok(points)
}

/// A `Ψ`-orbit of least period `P` on `N/Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOrbit {
    pub points: Vec<ManifoldPoint<Rat>>,
    /// Lattice words with `Ψ(points[k])·words[k] = points[k+1]`, indices mod `P`.
    pub words: Vec<GroupPoint<Rat>>,
}

impl LinearOrbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }
}

/// All `Ψ`-orbits of least period exactly `P`.
pub fn linear_orbits(
    map: &AutoMap,
    period: usize,
    max_points: u64,
) -> Result<Vec<LinearOrbit>, DynError> {
    let points = linear_fixed_points(map, period, max_points)?;
    let group = map.group();
    let mut visited: HashSet<Vec<Rat>> = HashSet::with_capacity(points.len());
    let mut orbits = Vec::new();
    for start in &points {
        if visited.contains(start.second_kind()) {
            continue;
        }
        let mut orbit = LinearOrbit { points: Vec::with_capacity(period), words: Vec::with_capacity(period) };
        let mut cur = start.clone();
        let mut least = period;
        for k in 0..period {
            let (next, word) = group.reduce(&map.apply_group(cur.rep()));
            visited.insert(cur.second_kind().to_vec());
            orbit.points.push(cur);
            orbit.words.push(word);
            cur = next;
            if cur.second_kind() == start.second_kind() {
                least = k + 1;
                break;
            }
        }
        debug_assert_eq!(cur.second_kind(), start.second_kind());
        if least == period {
            orbits.push(orbit);
        }
    }
    Ok(orbits)
}

#[derive(Clone, Debug)]
pub struct PeriodicConfig {
    /// Largest accepted `‖log(F^P(p)·p^{-1})‖` after Newton.
    pub tol: f64,
    pub max_newton: usize,
    /// Largest accepted distance between a refined point and its seed.
    pub max_drift: f64,
    pub max_points: u64,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig { tol: 1e-9, max_newton: 50, max_drift: 0.25, max_points: max_points_from_env() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbitReport {
    pub period: usize,
    /// Canonical points of the orbit in order.
    pub points: Vec<ManifoldPoint<f64>>,
    /// `(1/P) Σ ln‖DF e^s_k‖` along the cycle.
    pub lambda_s: f64,
    pub residual: f64,
    pub newton_iterations: usize,
}

/// A seed that could not be refined.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGap {
    pub period: usize,
    pub seed: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeriodicScan {
    pub orbits: Vec<PeriodicOrbitReport>,
    pub gaps: Vec<PeriodicGap>,
}

impl PeriodicScan {
    /// `period,t1..td,lambda_s,residual`, one row per orbit (its first point).
    pub fn to_csv(&self, dim: usize) -> String {
        let mut s = String::from("period");
        for i in 1..=dim {
            s.push_str(&format!(",t{i}"));
        }
        s.push_str(",lambda_s,residual\n");
        for o in &self.orbits {
            s.push_str(&o.period.to_string());
            for t in o.points[0].second_kind() {
                s.push_str(&format!(",{t:.15}"));
            }
            s.push_str(&format!(",{:.15},{:e}\n", o.lambda_s, o.residual));
        }
        s
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.orbits.iter().map(|o| o.lambda_s).collect()
    }

    fn extend(&mut self, other: PeriodicScan) {
        self.orbits.extend(other.orbits);
        self.gaps.extend(other.gaps);
    }
}

/// Periodic orbits of `f` of least period `P`, continued from the orbits of
/// `Ψ` by Newton's method on the shooting equation
/// `z_{k+1} = F(z_k)·γ_k`, `z_P = z_0`.
pub fn periodic_points(
    map: &PerturbedMap,
    period: usize,
    cfg: &PeriodicConfig,
) -> Result<PeriodicScan, DynError> {
    let seeds = linear_orbits(map.linear_part(), period, cfg.max_points)?;
    let results: Vec<Result<PeriodicOrbitReport, PeriodicGap>> =
        seeds.par_iter().map(|orbit| refine(map, orbit, cfg)).collect();
    let mut scan = PeriodicScan::default();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    for r in results {
        match r {
            Ok(report) => {
                let keys: Vec<Vec<i64>> = report.points.iter().map(|p| rounded_key(p.second_kind())).collect();
                if keys.iter().any(|k| seen.contains(k)) {
                    scan.gaps.push(PeriodicGap {
                        period,
                        seed: report.points[0].second_kind().to_vec(),
                        reason: "converged onto an orbit already found".into(),
                    });
                } else {
                    seen.extend(keys);
                    scan.orbits.push(report);
                }
            }
            Err(gap) => {
                log::warn!("period {period}: seed {:?} not refined: {}", gap.seed, gap.reason);
                scan.gaps.push(gap);
            }
        }
    }
    Ok(scan)
}

/// [`periodic_points`] for every period `1..=p_max`.
pub fn periodic_points_up_to(
    map: &PerturbedMap,
    p_max: usize,
    cfg: &PeriodicConfig,
) -> Result<PeriodicScan, DynError> {
    if p_max == 0 {
        return Err(DynError::Period);
    }
    let mut scan = PeriodicScan::default();
    for p in 1..=p_max {
        scan.extend(periodic_points(map, p, cfg)?);
    }
    Ok(scan)
}

fn rounded_key(t: &[f64]) -> Vec<i64> {
    t.iter().map(|v| ((v * 1e7).round() as i64).rem_euclid(10_000_000)).collect()
}

fn refine(map: &PerturbedMap, orbit: &LinearOrbit, cfg: &PeriodicConfig) -> Result<PeriodicOrbitReport, PeriodicGap> {
    let group = map.group();
    let alg = map.linear_part().algebra();
    let hdim = alg.horizontal_dim();
    let d = map.dim();
    let period = orbit.period();
    let seed = orbit.points[0].rep().to_f64();
    let words: Vec<GroupPoint<f64>> = orbit.words.iter().map(GroupPoint::to_f64).collect();
    let gap = |reason: String| PeriodicGap { period, seed: orbit.points[0].to_f64().second_kind().to_vec(), reason };

    let shoot = |x: &GroupPoint<f64>| -> (Vec<GroupPoint<f64>>, Vec<f64>) {
        let mut z = vec![x.clone()];
        for w in &words {
            let next = group.mul(&map.lift_eval(z.last().expect("nonempty")), w);
            z.push(next);
        }
        let r = group.mul(&z[period], &group.inv(x)).coords;
        z.pop();
        (z, r)
    };

    let mut x = seed.clone();
    let (mut z, mut r) = shoot(&x);
    let mut rn = norm(&r);
    let mut iterations = 0;
    while rn > 1e-14 && iterations < cfg.max_newton {
        let jp = cycle_jacobians(map, &z, hdim)
            .iter()
            .fold(DMatrix::<f64>::identity(d, d), |acc, j| j * acc);
        let lhs = jp - DMatrix::<f64>::identity(d, d);
        let rhs = DVector::from_iterator(d, r.iter().map(|v| -v));
        let Some(eta) = lhs.lu().solve(&rhs) else {
            return Err(gap("singular Newton system".into()));
        };
        let candidate = group.mul(&GroupPoint::new(eta.as_slice().to_vec()), &x);
        let (cz, cr) = shoot(&candidate);
        let cn = norm(&cr);
        iterations += 1;
        if !(cn < rn) {
            break;
        }
        x = candidate;
        z = cz;
        r = cr;
        rn = cn;
    }
    if !(rn < cfg.tol) {
        return Err(gap(format!("Newton stalled at residual {rn:e}")));
    }
    let drift = norm(&group.mul(&x, &group.inv(&seed)).coords);
    if drift > cfg.max_drift {
        return Err(gap(format!("refined point drifted {drift:.3} from its seed")));
    }

    let jacs = cycle_jacobians(map, &z, hdim);
    let lambda_s = cycle_exponent(&jacs).ok_or_else(|| gap("singular derivative along the cycle".into()))?;
    let points = z.iter().map(|p| group.reduce(p).0).collect();
    Ok(PeriodicOrbitReport { period, points, lambda_s, residual: rn, newton_iterations: iterations })
}

fn cycle_jacobians(map: &PerturbedMap, z: &[GroupPoint<f64>], hdim: usize) -> Vec<DMatrix<f64>> {
    z.iter().map(|p| map.jacobian_at(&p.coords[..hdim], DEFAULT_FD_STEP, true)).collect()
}

/// Most contracted direction at the start of the cycle by inverse iteration,
/// then `(1/P) Σ ln‖J_k e_k‖` with `e_{k+1} = J_k e_k / ‖J_k e_k‖`.
fn cycle_exponent(jacs: &[DMatrix<f64>]) -> Option<f64> {
    let d = jacs[0].nrows();
    let lus: Vec<_> = jacs.iter().map(|j| j.clone().lu()).collect();
    let mut u = DVector::from_vec(super::generic_vector(d));
    for _ in 0..200 {
        let before = u.clone();
        for lu in lus.iter().rev() {
            u = lu.solve(&u)?;
            u /= u.norm();
        }
        if super::line_gap(u.as_slice(), before.as_slice()) < 1e-15 {
            break;
        }
    }
    let mut total = 0.0;
    for j in jacs {
        let w = j * &u;
        let n = w.norm();
        total += n.ln();
        u = w / n;
    }
    Some(total / jacs.len() as f64)
}

#[derive(Clone, Debug)]
pub struct RigidityConfig {
    pub periodic: PeriodicConfig,
    /// Spread allowed for conjugated constructions.
    pub spread_tol: f64,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig { periodic: PeriodicConfig::default(), spread_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigiditySummary {
    pub period_max: usize,
    pub orbits: usize,
    pub gaps: usize,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub mean: f64,
    /// `λ^s(Ψ) = ln μ^s`.
    pub reference: f64,
    /// `max |λ^s(p) - λ^s(Ψ)|`.
    pub max_deviation: f64,
    pub warnings: Vec<String>,
}

impl RigiditySummary {
    pub fn to_csv(&self) -> String {
        format!(
            "period_max,orbits,gaps,min,max,spread,mean,reference,max_deviation\n{},{},{},{:.15},{:.15},{:e},{:.15},{:.15},{:e}\n",
            self.period_max, self.orbits, self.gaps, self.min, self.max, self.spread, self.mean,
            self.reference, self.max_deviation
        )
    }
}

/// Stable exponents over all periodic orbits of period `≤ p_max`, compared
/// with `λ^s(Ψ)`. For a conjugated construction a spread above
/// `spread_tol` is an error; for shears it is only reported.
pub fn rigidity_experiment(
    map: &PerturbedMap,
    p_max: usize,
    cfg: &RigidityConfig,
) -> Result<(RigiditySummary, PeriodicScan), DynError> {
    let linear = map.linear_part();
    let mut warnings = Vec::new();
    if !linear.is_totally_non_invertible()? {
        warnings.push("linear part is not totally non-invertible".to_string());
    }
    if !linear.is_horizontally_irreducible()? {
        warnings.push("linear part is not horizontally irreducible".to_string());
    }
    if map.split().stable_dim() != 1 {
        warnings.push(format!("stable dimension is {}, not 1", map.split().stable_dim()));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let scan = periodic_points_up_to(map, p_max, &cfg.periodic)?;
    let ex = scan.exponents();
    if ex.is_empty() {
        return Err(DynError::NoOrbits);
    }
    let reference = if map.split().stable_dim() > 0 {
        map.split().stable_modulus().ln()
    } else {
        f64::NAN
    };
    let min = ex.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ex.iter().sum::<f64>() / ex.len() as f64;
    let max_deviation = ex.iter().map(|e| (e - reference).abs()).fold(0.0, f64::max);
    let summary = RigiditySummary {
        period_max: p_max,
        orbits: ex.len(),
        gaps: scan.gaps.len(),
        min,
        max,
        spread: max - min,
        mean,
        reference,
        max_deviation,
        warnings,
    };
    if map.kind() == PerturbationKind::Conjugated && !(summary.spread < cfg.spread_tol) {
        return Err(DynError::RigidityViolation { spread: summary.spread, tol: cfg.spread_tol });
    }
    Ok((summary, scan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynlab::Bump;
    use crate::liealg::{heisenberg, LieAlgebra};
    use std::sync::Arc;

    fn heis() -> AutoMap {
        let m = RatMatrix::from_i64_rows(&[[4, 2, 0], [2, 2, 0], [0, 0, 4]]);
        AutoMap::new(Arc::new(heisenberg()), m).unwrap()
    }

    #[test]
    fn fixed_point_counts_match_determinants() {
        let map = heis();
        for (p, count) in [(1, 3), (2, 165), (3, 4977)] {
            let pts = linear_fixed_points(&map, p, 1_000_000).unwrap();
            assert_eq!(pts.len(), count);
        }
        let torus = AutoMap::new(Arc::new(LieAlgebra::abelian(2)), RatMatrix::from_i64_rows(&[[2, 0], [0, 2]])).unwrap();
        let pts = linear_fixed_points(&torus, 1, 10).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].second_kind().iter().all(|t| t.is_zero()));
        assert_eq!(linear_fixed_points(&torus, 2, 10).unwrap().len(), 9);
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let pts = linear_fixed_points(&heis(), 1, 100).unwrap();
        assert!(pts.iter().any(|p| p.second_kind().iter().all(|t| t.is_zero())));
    }

    #[test]
    fn orbits_partition_by_least_period() {
        let map = heis();
        let total: usize = [1, 2].iter().map(|&p| linear_orbits(&map, p, 1000).unwrap().len() * p).sum();
        assert_eq!(total, 165);
        for o in linear_orbits(&map, 2, 1000).unwrap() {
            let g = map.group();
            for k in 0..2 {
                let lhs = g.mul(&map.apply_group(o.points[k].rep()), &o.words[k]);
                assert_eq!(&lhs, o.points[(k + 1) % 2].rep());
            }
        }
    }

    #[test]
    fn degenerate_and_budget_errors() {
        let id = AutoMap::new(Arc::new(heisenberg()), RatMatrix::identity(3)).unwrap();
        assert!(matches!(linear_fixed_points(&id, 1, 100), Err(DynError::DegenerateFixedSet { layer: 1 })));
        assert!(matches!(linear_fixed_points(&heis(), 3, 100), Err(DynError::TooManyPoints { .. })));
        assert!(matches!(linear_fixed_points(&heis(), 0, 100), Err(DynError::Period)));
    }

    #[test]
    fn unperturbed_exponents_are_constant() {
        let f = PerturbedMap::unperturbed(heis()).unwrap();
        let scan = periodic_points_up_to(&f, 2, &PeriodicConfig::default()).unwrap();
        assert!(scan.gaps.is_empty());
        assert_eq!(scan.orbits.len(), 3 + 81);
        let target = (3.0 - 5f64.sqrt()).ln();
        for o in &scan.orbits {
            assert!((o.lambda_s - target).abs() < 1e-9, "{}", o.lambda_s);
        }
    }

    #[test]
    fn shear_orbits_are_periodic_for_f() {
        let f = PerturbedMap::shear(heis(), None, 0.05, Bump::standard(2)).unwrap();
        let scan = periodic_points(&f, 2, &PeriodicConfig::default()).unwrap();
        assert!(scan.gaps.is_empty());
        for o in &scan.orbits {
            let back = f.apply(&f.apply(&o.points[0]));
            for (a, b) in back.second_kind().iter().zip(o.points[0].second_kind()) {
                let gap = (a - b).rem_euclid(1.0);
                assert!(gap.min(1.0 - gap) < 1e-10);
            }
        }
    }

    #[test]
    fn conjugated_map_is_rigid() {
        let f = PerturbedMap::conjugated(heis(), None, 0.02, Bump::standard(2)).unwrap();
        let (summary, _) = rigidity_experiment(&f, 2, &RigidityConfig::default()).unwrap();
        assert!(summary.spread < 1e-6 && summary.max_deviation < 1e-6);
        assert!(summary.warnings.is_empty());
    }

    #[test]
    fn csv_layout() {
        let f = PerturbedMap::unperturbed(heis()).unwrap();
        let scan = periodic_points(&f, 1, &PeriodicConfig::default()).unwrap();
        let csv = scan.to_csv(3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "period,t1,t2,t3,lambda_s,residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
    }
}
