//! Acceptance criteria, one test each. Every test writes a single
//! `criterion NN: PASS|FAIL ...` line to stderr before asserting.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use nilflow::analyze::analyze;
use nilflow::run::{self, PerturbationOverrides};
use nilflow::schema::{parse_system, KindSpec, NamedDirection, SystemDefinition};
use nilflow::selfcheck::{group_law_check, lattice_check};
use nilflow_core::density::{maps_forward_to, preimage_levels};
use nilflow_core::dynlab::{
    line_gap, periodic_points_up_to, stable_direction_of, PeriodicConfig, PerturbedMap,
};
use nilflow_core::endo::subspace_gap;
use nilflow_core::ratcore::Rat;

const SAMPLES: usize = 1000;
const SEED: u64 = 20240917;

fn fixture(name: &str) -> SystemDefinition {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_system(&path).unwrap()
}

fn lambda_s() -> f64 {
    (3.0 - 5f64.sqrt()).ln()
}

/// Writes past the test harness capture so the line lands in the log.
fn verdict(n: u32, ok: bool, detail: String) {
    let line = format!("criterion {n:02}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let d = cols[0].len();
    DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r])
}

#[test]
fn criterion_01_heisenberg_analysis() {
    let def = fixture("heisenberg.json");
    let start = Instant::now();
    let r = analyze(&def, SEED).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let s = r.splitting.as_ref().unwrap();
    let lam_err = (r.lambda_s().unwrap() - lambda_s()).abs();
    let e1: Vec<f64> = r.eigenvalues.iter().filter(|e| e.layer == 1).map(|e| e.re).collect();
    let e2: Vec<f64> = r.eigenvalues.iter().filter(|e| e.layer == 2).map(|e| e.re).collect();
    let product_err = (e1[0] * e1[1] - 4.0).abs().max((e2[0] - 4.0).abs());
    let ok = r.hyperbolic == Some(true)
        && r.totally_non_invertible
        && r.horizontally_irreducible
        && r.u_ideal() == Some(true)
        && s.stable_dim == 1
        && lam_err < 1e-9
        && r.product_law
        && product_err < 1e-9
        && elapsed < 1.0;
    verdict(
        1,
        ok,
        format!(
            "hyperbolic={:?} tni={} h-irreducible={} u-ideal={:?} stable_dim={} |lambda_s err|={lam_err:.1e} \
             |product law err|={product_err:.1e} time={elapsed:.3}s",
            r.hyperbolic,
            r.totally_non_invertible,
            r.horizontally_irreducible,
            r.u_ideal(),
            s.stable_dim
        ),
    );
}

#[test]
fn criterion_02_five_dim_analysis() {
    let def = fixture("example5d.json");
    let start = Instant::now();
    let r = analyze(&def, SEED).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let sq5 = 5f64.sqrt();
    let mut want = [2.0, (3.0 - sq5) / 2.0, (3.0 + sq5) / 2.0, 3.0 - sq5, 3.0 + sq5];
    let mut got: Vec<f64> = r.eigenvalues.iter().map(|e| e.re).collect();
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    let imag = r.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let eig_err = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(imag, f64::max);

    // Basis E12, E23, E24, E13, E14.
    let a = (sq5 - 1.0) / 2.0;
    let ns = vec![vec![0.0, -a, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, -a, 1.0]];
    let nu = vec![
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, a, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, a],
    ];
    let s = r.splitting.as_ref().unwrap();
    let gap_s = subspace_gap(&matrix(&s.stable_basis), &matrix(&ns));
    let gap_u = subspace_gap(&matrix(&s.unstable_basis), &matrix(&nu));
    let ok = got.len() == 5
        && eig_err < 1e-9
        && gap_s < 1e-6
        && gap_u < 1e-6
        && r.u_ideal() == Some(false)
        && !r.totally_non_invertible
        && elapsed < 1.0;
    verdict(
        2,
        ok,
        format!(
            "eigenvalue err={eig_err:.1e} angle(n^s)={gap_s:.1e} angle(n^u)={gap_u:.1e} u-ideal={:?} tni={} \
             time={elapsed:.3}s",
            r.u_ideal(),
            r.totally_non_invertible
        ),
    );
}

#[test]
fn criterion_03_torus_density() {
    let def = fixture("torus2.json");
    let start = Instant::now();
    let rep = run::density(&def, Some(6), Some(257)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst_rel: f64 = 0.0;
    let mut counts_ok = rep.rows.len() == 6;
    for row in &rep.rows {
        counts_ok &= row.count == 4u64.pow(row.k as u32);
        let want = 2f64.sqrt() / 2.0 * 0.5f64.powi(row.k as i32);
        worst_rel = worst_rel.max((row.covering_radius - want).abs() / want);
    }
    let ok = counts_ok
        && worst_rel <= 0.05
        && (0.48..=0.52).contains(&rep.fitted_mu)
        && elapsed < 30.0;
    verdict(
        3,
        ok,
        format!(
            "counts 4^k={counts_ok} max rel radius err={worst_rel:.4} mu={:.4} time={elapsed:.2}s",
            rep.fitted_mu
        ),
    );
}

#[test]
fn criterion_04_heisenberg_density() {
    let def = fixture("heisenberg.json");
    let start = Instant::now();
    let rep = run::density(&def, Some(4), None).unwrap();
    let map = &def.map;
    let g = map.group();
    let base = g.reduce(&g.identity::<Rat>()).0;
    let levels = preimage_levels(map, &base, 4, 1 << 20).unwrap();
    let forward_ok = levels
        .iter()
        .enumerate()
        .all(|(i, lvl)| lvl.iter().all(|p| maps_forward_to(map, p, i + 1, &base)));
    let elapsed = start.elapsed().as_secs_f64();
    let counts_ok =
        rep.rows.len() == 4 && rep.rows.iter().all(|r| r.count == 16u64.pow(r.k as u32));
    let eps: Vec<f64> = rep.rows.iter().map(|r| r.covering_radius).collect();
    let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = (2..eps.len()).map(|k| eps[k] / eps[k - 1]).collect();
    let ratio_ok = ratios.iter().all(|&q| q <= 0.8);
    let ok = counts_ok
        && forward_ok
        && decreasing
        && ratio_ok
        && rep.fitted_mu < 1.0
        && elapsed < 60.0;
    verdict(
        4,
        ok,
        format!(
            "counts 16^k={counts_ok} forward-exact={forward_ok} radii={eps:.5?} ratios(k>=2)={ratios:.4?} \
             mu={:.4} time={elapsed:.2}s",
            rep.fitted_mu
        ),
    );
}

#[test]
fn criterion_05_density_negative_controls() {
    let cat = fixture("cat.json");
    let c = run::density(&cat, Some(4), None).unwrap();
    let cat_counts = c.rows.iter().all(|r| r.count == 1);
    let cat_const = c.rows.iter().all(|r| r.covering_radius == c.rows[0].covering_radius);

    let five = fixture("example5d.json");
    let f = run::density(&five, Some(4), None).unwrap();
    let eps: Vec<f64> = f.rows.iter().map(|r| r.covering_radius).collect();
    let floor = eps.iter().copied().fold(f64::INFINITY, f64::min);
    // Geometric decay at any rate <= 0.8 would leave at most 0.8^3 of the first radius.
    let no_decay = floor >= 0.25 && eps[3] / eps[0] > 0.8f64.powi(3);
    let ok = cat_counts && cat_const && f.rows.len() == 4 && no_decay;
    verdict(
        5,
        ok,
        format!(
            "cat: counts=1 {cat_counts}, constant radius {cat_const} ({:.5}); 5-dim radii={eps:.5?} floor={floor:.4}",
            c.rows[0].covering_radius
        ),
    );
}

#[test]
fn criterion_06_group_law_exactness() {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["heisenberg.json", "example5d.json", "torus2.json", "cat.json"] {
        let c = group_law_check(&fixture(name), SAMPLES, SEED);
        ok &= c.samples == SAMPLES && c.passed();
        parts.push(format!("{name}: {c}"));
    }
    verdict(6, ok, parts.join("; "));
}

#[test]
fn criterion_07_lattice_reduction() {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["heisenberg.json", "example5d.json", "torus2.json", "cat.json"] {
        let c = lattice_check(&fixture(name), SAMPLES, SEED);
        ok &= c.samples == SAMPLES && c.passed();
        parts.push(format!("{name}: {c}"));
    }
    verdict(7, ok, parts.join("; "));
}

#[test]
fn criterion_08_unperturbed_periodic_exponents() {
    let def = fixture("heisenberg.json");
    let map = PerturbedMap::unperturbed(def.map.clone()).unwrap();
    let scan = periodic_points_up_to(&map, 4, &PeriodicConfig::default()).unwrap();
    let target = lambda_s();
    let dev = scan.orbits.iter().map(|o| (o.lambda_s - target).abs()).fold(0.0, f64::max);
    let mut per_period = [0usize; 4];
    for o in &scan.orbits {
        per_period[o.period - 1] += 1;
    }
    let vs = stable_direction_of(map.split()).unwrap();
    let mut dir_gap: f64 = 0.0;
    for o in scan.orbits.iter().step_by(997).take(40) {
        let sd = map.stable_direction(&o.points[0], 40).unwrap();
        dir_gap = dir_gap.max(line_gap(&sd.direction, &vs));
    }
    let ok = scan.gaps.is_empty()
        && per_period == [3, 81, 1658, 31515]
        && dev < 1e-9
        && dir_gap < 1e-6;
    verdict(
        8,
        ok,
        format!(
            "orbits per period={per_period:?} gaps={} max |lambda_s(p) - ln(3-sqrt5)|={dev:.1e} \
             stable direction gap={dir_gap:.1e}",
            scan.gaps.len()
        ),
    );
}

#[test]
fn criterion_09_conjugacy_solver() {
    let def = fixture("heisenberg.json");
    let start = Instant::now();
    let eps = 0.01;
    let over = PerturbationOverrides {
        kind: Some(KindSpec::Shear),
        direction: Some(NamedDirection::Unstable),
        amplitude: Some(eps),
    };
    let map = run::perturbed_map(&def, &over, NamedDirection::Unstable).unwrap();
    let field = run::conjugacy(&map, &def, Some(17), Some(1e-6), Some(500)).unwrap();

    let zero = PerturbationOverrides { amplitude: Some(0.0), ..over };
    let map0 = run::perturbed_map(&def, &zero, NamedDirection::Unstable).unwrap();
    let field0 = run::conjugacy(&map0, &def, Some(17), Some(1e-6), Some(500)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let first0 = field0.history[0].residual;

    let ok = field.converged
        && field.residual() < 1e-6
        && field.iterations() <= 500
        && field.sup_displacement() <= 10.0 * eps
        && first0 == 0.0
        && elapsed < 120.0;
    verdict(
        9,
        ok,
        format!(
            "eps=0.01 unstable shear: residual={:.2e} after {} sweeps, sup displacement={:.3e}; \
             eps=0 first-sweep residual={first0:e}; time={elapsed:.1}s",
            field.residual(),
            field.iterations(),
            field.sup_displacement()
        ),
    );
}

#[test]
fn criterion_10_rigidity_control() {
    let def = fixture("heisenberg.json");
    let conj = PerturbationOverrides {
        kind: Some(KindSpec::Conjugated),
        direction: Some(NamedDirection::Stable),
        amplitude: Some(0.02),
    };
    let map = run::perturbed_map(&def, &conj, NamedDirection::Stable).unwrap();
    let (summary, _) = run::rigidity(&map, &def, Some(3)).unwrap();
    let mean_err = (summary.mean - lambda_s()).abs();

    let shear = PerturbationOverrides {
        kind: Some(KindSpec::Shear),
        direction: Some(NamedDirection::Stable),
        amplitude: Some(0.05),
    };
    let generic = run::perturbed_map(&def, &shear, NamedDirection::Stable).unwrap();
    let generic_note = match run::rigidity(&generic, &def, Some(3)) {
        Ok((s, _)) => format!("spread={:.3e} over {} orbits", s.spread, s.orbits),
        Err(e) => format!("not computed: {e}"),
    };
    let ok = summary.spread < 1e-3 && mean_err < 1e-3 && summary.gaps == 0;
    verdict(
        10,
        ok,
        format!(
            "conjugated eps=0.02: {} orbits, spread={:.3e}, |mean - lambda_s|={mean_err:.1e}; \
             generic stable shear eps=0.05 (reported only): {generic_note}",
            summary.orbits, summary.spread
        ),
    );
}
