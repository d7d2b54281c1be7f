//! Density and dynamics commands.

use std::fmt::Write as _;

use nilflow_core::density::{density_experiment, max_points_from_env, DensityConfig, DensityReport};
use nilflow_core::dynlab::{
    periodic_points_up_to, rigidity_experiment, run_conjugacy, stable_direction_of,
    unstable_direction_of, ConjugacyConfig, ConjugacyField, PeriodicConfig, PeriodicScan,
    PerturbedMap, RigidityConfig, RigiditySummary,
};
use nilflow_core::ratcore::Rat;

use crate::schema::{DirectionSpec, KindSpec, NamedDirection, SystemDefinition};
use crate::CliError;

pub const DEFAULT_K_MAX: usize = 4;
pub const DEFAULT_DENSITY_GRID: usize = 33;
pub const DEFAULT_PERIOD_MAX: usize = 3;
pub const DEFAULT_CONJUGACY_GRID: usize = 17;
pub const DEFAULT_CONJUGACY_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_SWEEPS: usize = 500;

pub fn density(def: &SystemDefinition, k_max: Option<usize>, grid_n: Option<usize>) -> Result<DensityReport, CliError> {
    let cfg = DensityConfig {
        k_max: k_max.or(def.experiment.k_max).unwrap_or(DEFAULT_K_MAX),
        grid_n: grid_n.or(def.experiment.grid_n).unwrap_or(DEFAULT_DENSITY_GRID),
        max_points: max_points_from_env(),
        ..DensityConfig::default()
    };
    let g = def.map.group();
    let base = g.reduce(&g.identity::<Rat>()).0;
    Ok(density_experiment(&def.map, &base, &cfg)?)
}

/// Command-line overrides of the perturbation in the file.
#[derive(Clone, Debug, Default)]
pub struct PerturbationOverrides {
    pub kind: Option<KindSpec>,
    pub direction: Option<NamedDirection>,
    pub amplitude: Option<f64>,
}

/// Builds the perturbed map. Without any perturbation data the linear map is used.
pub fn perturbed_map(
    def: &SystemDefinition,
    overrides: &PerturbationOverrides,
    default_direction: NamedDirection,
) -> Result<PerturbedMap, CliError> {
    let spec = def.perturbation.as_ref();
    let amplitude = overrides.amplitude.or(spec.map(|p| p.amplitude)).unwrap_or(0.0);
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(CliError::Validation(format!("amplitude {amplitude} is not a non-negative number")));
    }
    let kind = overrides.kind.or(spec.map(|p| p.kind)).unwrap_or_default();
    let direction = match (overrides.direction, spec.and_then(|p| p.direction.clone())) {
        (Some(n), _) | (None, Some(DirectionSpec::Named(n))) => DirectionSpec::Named(n),
        (None, Some(v)) => v,
        (None, None) => DirectionSpec::Named(default_direction),
    };
    let linear = def.map.clone();
    let split = linear.hyperbolic_splitting(nilflow_core::endo::DEFAULT_TOL)?;
    let v = match direction {
        DirectionSpec::Named(NamedDirection::Stable) => stable_direction_of(&split)?,
        DirectionSpec::Named(NamedDirection::Unstable) => unstable_direction_of(&split)?,
        DirectionSpec::Vector(v) => v,
    };
    let bump = def.bump()?;
    let map = match kind {
        KindSpec::Shear => PerturbedMap::shear(linear, Some(v), amplitude, bump)?,
        KindSpec::Conjugated => PerturbedMap::conjugated(linear, Some(v), amplitude, bump)?,
    };
    Ok(map)
}

pub fn periodic(map: &PerturbedMap, def: &SystemDefinition, period_max: Option<usize>) -> Result<PeriodicScan, CliError> {
    let p = period_max.or(def.experiment.period_max).unwrap_or(DEFAULT_PERIOD_MAX);
    Ok(periodic_points_up_to(map, p, &PeriodicConfig::default())?)
}

pub fn rigidity(
    map: &PerturbedMap,
    def: &SystemDefinition,
    period_max: Option<usize>,
) -> Result<(RigiditySummary, PeriodicScan), CliError> {
    let p = period_max.or(def.experiment.period_max).unwrap_or(DEFAULT_PERIOD_MAX);
    Ok(rigidity_experiment(map, p, &RigidityConfig::default())?)
}

/// Runs the solver and returns the field whether or not it met the tolerance.
pub fn conjugacy(
    map: &PerturbedMap,
    def: &SystemDefinition,
    grid_n: Option<usize>,
    tol: Option<f64>,
    max_sweeps: Option<usize>,
) -> Result<ConjugacyField, CliError> {
    let cfg = ConjugacyConfig {
        grid_n: grid_n.or(def.experiment.grid_n).unwrap_or(DEFAULT_CONJUGACY_GRID),
        tol: tol.or(def.experiment.tol).unwrap_or(DEFAULT_CONJUGACY_TOL),
        max_iter: max_sweeps.or(def.experiment.max_sweeps).unwrap_or(DEFAULT_MAX_SWEEPS),
    };
    Ok(run_conjugacy(map, &cfg)?)
}

pub fn density_summary(r: &DensityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>3} {:>10} {:>16} {:>10}", "k", "count", "covering radius", "ratio");
    for row in &r.rows {
        let ratio = row.ratio.map_or("-".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(s, "{:>3} {:>10} {:>16.8} {:>10}", row.k, row.count, row.covering_radius, ratio);
    }
    let _ = writeln!(s, "fitted mu: {:.6}", r.fitted_mu);
    let _ = writeln!(s, "monotone decay: {}", r.monotone_decay);
    let _ = write!(s, "grid: {} per axis, search radius {}", r.grid_resolution, r.search_radius);
    s
}

pub fn periodic_summary(scan: &PeriodicScan) -> String {
    let mut s = String::new();
    let max_p = scan.orbits.iter().map(|o| o.period).max().unwrap_or(0);
    for p in 1..=max_p {
        let ex: Vec<f64> = scan.orbits.iter().filter(|o| o.period == p).map(|o| o.lambda_s).collect();
        let lo = ex.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, "period {p}: {} orbits, lambda_s in [{lo:.12}, {hi:.12}]", ex.len());
    }
    let _ = write!(s, "gaps: {}", scan.gaps.len());
    for g in &scan.gaps {
        let _ = write!(s, "\n  period {} seed {:?}: {}", g.period, g.seed, g.reason);
    }
    s
}

pub fn rigidity_summary(r: &RigiditySummary) -> String {
    let mut s = String::new();
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "orbits: {} (periods <= {}), gaps: {}", r.orbits, r.period_max, r.gaps);
    let _ = writeln!(s, "lambda_s range: [{:.12}, {:.12}]", r.min, r.max);
    let _ = writeln!(s, "spread: {:.3e}", r.spread);
    let _ = writeln!(s, "mean: {:.12}", r.mean);
    let _ = writeln!(s, "ln mu^s of the linear part: {:.12}", r.reference);
    let _ = write!(s, "max deviation: {:.3e}", r.max_deviation);
    s
}

pub fn conjugacy_summary(f: &ConjugacyField) -> String {
    format!(
        "sweeps: {}\nresidual: {:.3e}\nsup displacement: {:.6e}\nconverged: {}",
        f.iterations(),
        f.residual(),
        f.sup_displacement(),
        f.converged
    )
}
