//! Preimage sets `Ψ^{-k}(x)` on `M = N/Γ` and how densely they fill `M`.

pub(crate) mod cosets;
mod covering;

pub use cosets::{coset_representatives, equivalent, CosetSystem};
pub use covering::{covering_radius, effective_grid, MAX_SAMPLES};

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::endo::{AutoMap, EndoError};
use crate::liealg::LayerSplitting;
use crate::nilgroup::{GroupError, ManifoldPoint};
use crate::ratcore::Rat;

/// Environment variable capping the number of enumerated preimages.
pub const MAX_POINTS_ENV: &str = "NILFLOW_MAX_POINTS";
pub const DEFAULT_MAX_POINTS: u64 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error(transparent)]
    Endo(#[from] EndoError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("an induced block is singular")]
    SingularBlock,
    #[error("covering degree too large to enumerate")]
    IndexTooLarge,
    #[error("transversal has {found} elements, expected {expected}")]
    CosetCount { found: usize, expected: String },
    #[error("{requested} preimages exceed the budget of {limit} points (set {MAX_POINTS_ENV} to raise it)")]
    Budget { requested: u64, limit: u64 },
    #[error("preimage set has {found} points, expected {expected}")]
    PreimageCount { found: usize, expected: u64 },
    #[error("covering radius of an empty point set")]
    EmptySet,
    #[error("depth must be at least {min}, got {got}")]
    Depth { min: usize, got: usize },
}

/// Point budget from `NILFLOW_MAX_POINTS`, or the default.
pub fn max_points_from_env() -> u64 {
    std::env::var(MAX_POINTS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_POINTS)
}

/// One level `Ψ^{-1}(S)` of the preimage tree, deduplicated by canonical representative.
pub fn preimage_step(
    map: &AutoMap,
    cosets: &CosetSystem,
    level: &[ManifoldPoint<Rat>],
) -> Vec<ManifoldPoint<Rat>> {
    let g = map.group();
    let raw: Vec<ManifoldPoint<Rat>> = level
        .par_iter()
        .flat_map_iter(|y| {
            cosets.representatives.iter().map(move |gamma| {
                let lifted = g.mul(y.rep(), gamma);
                g.reduce(&map.apply_group_inverse(&lifted)).0
            })
        })
        .collect();
    let mut seen = HashSet::with_capacity(raw.len());
    raw.into_iter()
        .filter(|p| seen.insert(p.second_kind().to_vec()))
        .collect()
}

/// All levels `Ψ^{-1}(x), ..., Ψ^{-k}(x)`, each of exact size `index^j`.
pub fn preimage_levels(
    map: &AutoMap,
    x: &ManifoldPoint<Rat>,
    k: usize,
    max_points: u64,
) -> Result<Vec<Vec<ManifoldPoint<Rat>>>, DensityError> {
    if k < 1 {
        return Err(DensityError::Depth { min: 1, got: k });
    }
    let cosets = coset_representatives(map)?;
    let expected = checked_count(&cosets.index, k, max_points)?;
    let mut levels = Vec::with_capacity(k);
    let mut current = vec![x.clone()];
    for j in 1..=k {
        current = preimage_step(map, &cosets, &current);
        let want = expected[j - 1];
        if current.len() as u64 != want {
            return Err(DensityError::PreimageCount { found: current.len(), expected: want });
        }
        levels.push(current.clone());
    }
    Ok(levels)
}

/// `Ψ^{-k}(x)` as canonical points.
pub fn preimages(
    map: &AutoMap,
    x: &ManifoldPoint<Rat>,
    k: usize,
    max_points: u64,
) -> Result<Vec<ManifoldPoint<Rat>>, DensityError> {
    Ok(preimage_levels(map, x, k, max_points)?.pop().unwrap_or_default())
}

fn checked_count(index: &BigInt, k: usize, max_points: u64) -> Result<Vec<u64>, DensityError> {
    let mut out = Vec::with_capacity(k);
    let mut c = BigInt::one();
    for _ in 0..k {
        c *= index;
        match c.to_u64() {
            Some(v) if v <= max_points => out.push(v),
            other => {
                return Err(DensityError::Budget {
                    requested: other.unwrap_or(u64::MAX),
                    limit: max_points,
                })
            }
        }
    }
    Ok(out)
}

/// `reduce(Ψ^k(y)) = x`, decided exactly.
pub fn maps_forward_to(map: &AutoMap, y: &ManifoldPoint<Rat>, k: usize, x: &ManifoldPoint<Rat>) -> bool {
    let g = map.group();
    let mut p = y.rep().clone();
    for _ in 0..k {
        p = map.apply_group(&p);
    }
    g.reduce(&p).0.second_kind() == x.second_kind()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub k: usize,
    pub count: u64,
    pub covering_radius: f64,
    /// `ε_k / ε_{k-1}`; absent for the first row.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    /// `exp` of the least-squares slope of `ln ε_k` against `k`.
    pub fitted_mu: f64,
    /// Covering radii strictly decreasing in `k`.
    pub monotone_decay: bool,
    pub grid_resolution: usize,
    pub search_radius: i64,
}

impl DensityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,count,covering_radius,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| format!("{v:.12}")).unwrap_or_default();
            s.push_str(&format!("{},{},{:.12},{}\n", r.k, r.count, r.covering_radius, ratio));
        }
        s.push_str(&format!("fitted_mu,{:.12},,\n", self.fitted_mu));
        s
    }
}

/// Least-squares slope of `ln y` against `x`, exponentiated.
pub fn fit_rate(ks: &[usize], eps: &[f64]) -> f64 {
    let n = ks.len() as f64;
    if ks.len() < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxy / sxx).exp()
}

#[derive(Clone, Debug)]
pub struct DensityConfig {
    pub k_max: usize,
    pub grid_n: usize,
    pub search_radius: i64,
    pub max_points: u64,
    /// Leave out `k = 1` when fitting the rate (needs at least three levels).
    pub drop_first: bool,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            k_max: 4,
            grid_n: 33,
            search_radius: 1,
            max_points: max_points_from_env(),
            drop_first: true,
        }
    }
}

/// Preimage counts and covering radii for `k = 1..k_max`, with a fitted decay rate.
pub fn density_experiment(
    map: &AutoMap,
    x: &ManifoldPoint<Rat>,
    config: &DensityConfig,
) -> Result<DensityReport, DensityError> {
    if config.k_max < 2 {
        return Err(DensityError::Depth { min: 2, got: config.k_max });
    }
    let levels = preimage_levels(map, x, config.k_max, config.max_points)?;
    let g = map.group();
    let split = LayerSplitting::coordinate(g.algebra());
    let mut rows: Vec<DensityRow> = Vec::with_capacity(levels.len());
    for (i, level) in levels.iter().enumerate() {
        let pts: Vec<ManifoldPoint<f64>> = level.iter().map(ManifoldPoint::to_f64).collect();
        let eps = covering_radius(g, &split, &pts, config.grid_n, config.search_radius)?;
        log::info!("k = {}: {} points, covering radius {eps:.6}", i + 1, level.len());
        let ratio = rows.last().map(|prev| eps / prev.covering_radius);
        rows.push(DensityRow { k: i + 1, count: level.len() as u64, covering_radius: eps, ratio });
    }
    let skip = usize::from(config.drop_first && rows.len() >= 3);
    let ks: Vec<usize> = rows[skip..].iter().map(|r| r.k).collect();
    let eps: Vec<f64> = rows[skip..].iter().map(|r| r.covering_radius).collect();
    let monotone_decay = rows.windows(2).all(|w| w[1].covering_radius < w[0].covering_radius);
    Ok(DensityReport {
        rows,
        fitted_mu: fit_rate(&ks, &eps),
        monotone_decay,
        grid_resolution: effective_grid(config.grid_n, g.dim()),
        search_radius: config.search_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{heisenberg, LieAlgebra};
    use crate::ratcore::{rat, RatMatrix};
    use std::sync::Arc;

    fn torus_map(rows: &[[i64; 2]]) -> AutoMap {
        AutoMap::new(Arc::new(LieAlgebra::abelian(2)), RatMatrix::from_i64_rows(rows)).unwrap()
    }

    fn heis_map() -> AutoMap {
        let m = RatMatrix::from_i64_rows(&[[4, 2, 0], [2, 2, 0], [0, 0, 4]]);
        AutoMap::new(Arc::new(heisenberg()), m).unwrap()
    }

    fn origin(map: &AutoMap) -> ManifoldPoint<Rat> {
        map.group().reduce(&map.group().identity()).0
    }

    #[test]
    fn transversal_sizes() {
        assert_eq!(coset_representatives(&heis_map()).unwrap().len(), 16);
        assert_eq!(coset_representatives(&torus_map(&[[2, 0], [0, 2]])).unwrap().len(), 4);
        let id = AutoMap::new(Arc::new(heisenberg()), RatMatrix::identity(3)).unwrap();
        let c = coset_representatives(&id).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.representatives[0], id.group().identity());
    }

    #[test]
    fn torus_preimages_closed_form() {
        let map = torus_map(&[[2, 0], [0, 2]]);
        let pts = preimages(&map, &origin(&map), 2, 1000).unwrap();
        let mut got: Vec<Vec<Rat>> = pts.iter().map(|p| p.second_kind().to_vec()).collect();
        got.sort();
        let mut want: Vec<Vec<Rat>> = (0..16).map(|i| vec![rat(i / 4, 4), rat(i % 4, 4)]).collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn invertible_map_has_one_preimage() {
        let map = torus_map(&[[2, 1], [1, 1]]);
        for k in 1..4 {
            assert_eq!(preimages(&map, &origin(&map), k, 10).unwrap().len(), 1);
        }
    }

    #[test]
    fn heisenberg_preimages_map_forward() {
        let map = heis_map();
        let x = map.group().reduce(&map.group().point(vec![rat(1, 3), rat(2, 7), rat(5, 11)]).unwrap()).0;
        let levels = preimage_levels(&map, &x, 2, 1000).unwrap();
        assert_eq!(levels[0].len(), 16);
        assert_eq!(levels[1].len(), 256);
        for y in &levels[1] {
            assert!(maps_forward_to(&map, y, 2, &x));
        }
        // Nesting: level 2 maps onto level 1.
        let first: HashSet<Vec<Rat>> = levels[0].iter().map(|p| p.second_kind().to_vec()).collect();
        let images: HashSet<Vec<Rat>> = levels[1]
            .iter()
            .map(|y| map.group().reduce(&map.apply_group(y.rep())).0.second_kind().to_vec())
            .collect();
        assert_eq!(images, first);
    }

    #[test]
    fn budget_enforced() {
        let map = heis_map();
        let err = preimages(&map, &origin(&map), 3, 1000).unwrap_err();
        assert_eq!(err, DensityError::Budget { requested: 4096, limit: 1000 });
    }

    #[test]
    fn rate_fit_recovers_geometric_sequence() {
        let ks = [2, 3, 4, 5];
        let eps: Vec<f64> = ks.iter().map(|&k| 3.0 * 0.5f64.powi(k as i32)).collect();
        assert!((fit_rate(&ks, &eps) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let map = torus_map(&[[2, 0], [0, 2]]);
        let cfg = DensityConfig { k_max: 2, grid_n: 17, search_radius: 1, max_points: 100, drop_first: true };
        let report = density_experiment(&map, &origin(&map), &cfg).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,count,covering_radius,ratio");
        assert!(lines[1].starts_with("1,4,"));
        assert!(lines[2].starts_with("2,16,"));
        assert!(lines[3].starts_with("fitted_mu,"));
    }
}
