use std::fmt::{self, Write as _};
use std::time::Instant;

use nilflow_core::endo::{AutoMap, EndoError, DEFAULT_TOL};
use nilflow_core::ratcore::{Factorization, RatPoly};
use serde::Serialize;

use crate::schema::SystemDefinition;
use crate::selfcheck::{group_law_check, lattice_check, CheckSummary};
use crate::CliError;

/// Samples used by the randomized self-checks inside `analyze`.
pub const ANALYZE_SAMPLES: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct Eigenvalue {
    pub layer: usize,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub layer: usize,
    pub matrix: String,
    pub char_poly: String,
    pub factorization: String,
    pub irreducible: bool,
}

/// Hyperbolic splitting data; absent when the map is not hyperbolic.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingReport {
    pub stable_dim: usize,
    pub unstable_dim: usize,
    /// Columns span `n^s`.
    pub stable_basis: Vec<Vec<f64>>,
    pub unstable_basis: Vec<Vec<f64>>,
    pub stable_modulus: f64,
    pub unstable_min_modulus: f64,
    pub residual: f64,
    pub u_ideal: bool,
    pub u_ideal_defect: f64,
    /// `ln μ^s`, only for a one-dimensional stable space.
    pub lambda_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub name: String,
    pub dimension: usize,
    pub step: usize,
    pub layer_dims: Vec<usize>,
    pub char_poly: String,
    pub blocks: Vec<BlockReport>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub abs_det: String,
    /// `None` when some eigenvalue modulus is too close to 1 to decide.
    pub hyperbolic: Option<bool>,
    pub totally_non_invertible: bool,
    pub horizontally_totally_non_invertible: bool,
    pub horizontally_irreducible: bool,
    pub product_law: bool,
    pub splitting: Option<SplittingReport>,
    pub group_law: CheckSummary,
    pub lattice_reduction: CheckSummary,
    pub elapsed_ms: f64,
}

impl AnalysisReport {
    pub fn u_ideal(&self) -> Option<bool> {
        self.splitting.as_ref().map(|s| s.u_ideal)
    }

    pub fn lambda_s(&self) -> Option<f64> {
        self.splitting.as_ref().and_then(|s| s.lambda_s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        let opt = |b: Option<bool>| b.map_or("indeterminate".to_string(), |b| b.to_string());
        let mut push = |k: &str, v: String| {
            let _ = writeln!(out, "{k},{v}");
        };
        push("name", self.name.clone());
        push("dimension", self.dimension.to_string());
        push("step", self.step.to_string());
        push(
            "layer_dims",
            self.layer_dims.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
        );
        push("hyperbolic", opt(self.hyperbolic));
        push("totally_non_invertible", self.totally_non_invertible.to_string());
        push("horizontally_irreducible", self.horizontally_irreducible.to_string());
        push("u_ideal", opt(self.u_ideal()));
        push("product_law", self.product_law.to_string());
        if let Some(s) = &self.splitting {
            push("stable_dim", s.stable_dim.to_string());
            push("unstable_dim", s.unstable_dim.to_string());
            if s.stable_dim > 0 {
                push("stable_modulus", format!("{:.15}", s.stable_modulus));
            }
            if let Some(l) = s.lambda_s {
                push("lambda_s", format!("{l:.15}"));
            }
        }
        push("abs_det", self.abs_det.clone());
        out
    }
}

fn poly_string(p: &RatPoly) -> String {
    p.to_string()
}

fn factor_string(f: &Factorization) -> String {
    let mut s = String::new();
    if !num_traits::One::is_one(&f.leading) {
        let _ = write!(s, "{} * ", f.leading);
    }
    let parts: Vec<String> = f
        .factors
        .iter()
        .map(|(p, m)| if *m == 1 { format!("({p})") } else { format!("({p})^{m}") })
        .collect();
    s.push_str(&parts.join(" "));
    s
}

fn columns(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn splitting(map: &AutoMap) -> Result<Option<SplittingReport>, EndoError> {
    let split = match map.hyperbolic_splitting(DEFAULT_TOL) {
        Ok(s) => s,
        Err(EndoError::NotHyperbolic | EndoError::Indeterminate { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let defect = split.u_ideal_defect(map.algebra());
    let lambda_s = (split.stable_dim() == 1).then(|| split.stable_modulus().ln());
    Ok(Some(SplittingReport {
        stable_dim: split.stable_dim(),
        unstable_dim: split.unstable_dim(),
        stable_basis: columns(split.stable_basis()),
        unstable_basis: columns(split.unstable_basis()),
        stable_modulus: split.stable_modulus(),
        unstable_min_modulus: split.unstable_min_modulus(),
        residual: split.residual(),
        u_ideal: defect < DEFAULT_TOL,
        u_ideal_defect: defect,
        lambda_s,
    }))
}

pub fn analyze(def: &SystemDefinition, seed: u64) -> Result<AnalysisReport, CliError> {
    let start = Instant::now();
    let map = &def.map;
    let alg = def.algebra();
    let blocks = map.induced_blocks()?;
    let polys = map.block_char_polys();
    let facs = map.block_factorizations()?;
    let block_reports = blocks
        .iter()
        .zip(&polys)
        .zip(&facs)
        .enumerate()
        .map(|(i, ((b, p), f))| BlockReport {
            layer: i + 1,
            matrix: b.to_string(),
            char_poly: poly_string(p),
            factorization: factor_string(f),
            irreducible: f.is_irreducible(),
        })
        .collect();
    let eigenvalues = map
        .eigenvalues()?
        .iter()
        .map(|e| Eigenvalue { layer: e.layer, re: e.value.re, im: e.value.im, modulus: e.value.norm() })
        .collect();
    let hyperbolic = match map.is_hyperbolic(DEFAULT_TOL) {
        Ok(h) => Some(h),
        Err(EndoError::Indeterminate { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let splitting = splitting(map)?;
    let group_law = group_law_check(def, ANALYZE_SAMPLES, seed);
    let lattice_reduction = lattice_check(def, ANALYZE_SAMPLES, seed);
    Ok(AnalysisReport {
        name: def.name.clone(),
        dimension: def.dim(),
        step: alg.step(),
        layer_dims: alg.layer_dims().to_vec(),
        char_poly: poly_string(&map.char_poly()),
        blocks: block_reports,
        eigenvalues,
        abs_det: map.abs_det().to_string(),
        hyperbolic,
        totally_non_invertible: map.is_totally_non_invertible()?,
        horizontally_totally_non_invertible: map.is_horizontally_totally_non_invertible()?,
        horizontally_irreducible: map.is_horizontally_irreducible()?,
        product_law: map.check_eigenvalue_product_law(DEFAULT_TOL)?,
        splitting,
        group_law,
        lattice_reduction,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn yes_no(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "indeterminate",
    }
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:+.9}")).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system: {}", self.name)?;
        writeln!(f, "dimension: {}", self.dimension)?;
        writeln!(f, "step: {}", self.step)?;
        writeln!(f, "layer dims: {:?}", self.layer_dims)?;
        writeln!(f, "char poly: {}", self.char_poly)?;
        writeln!(f, "|det|: {}", self.abs_det)?;
        for b in &self.blocks {
            writeln!(f, "block {}:", b.layer)?;
            for line in b.matrix.lines() {
                writeln!(f, "    {line}")?;
            }
            writeln!(f, "  char poly: {}", b.char_poly)?;
            writeln!(f, "  factors: {}", b.factorization)?;
        }
        writeln!(f, "eigenvalues:")?;
        for e in &self.eigenvalues {
            writeln!(f, "  layer {}: {:.12} {:+.12}i  |.| = {:.12}", e.layer, e.re, e.im, e.modulus)?;
        }
        writeln!(f, "hyperbolic: {}", yes_no(self.hyperbolic))?;
        writeln!(f, "totally non-invertible: {}", self.totally_non_invertible)?;
        writeln!(f, "horizontally totally non-invertible: {}", self.horizontally_totally_non_invertible)?;
        writeln!(f, "horizontally irreducible: {}", self.horizontally_irreducible)?;
        writeln!(f, "u-ideal: {}", yes_no(self.u_ideal()))?;
        writeln!(f, "eigenvalue product law: {}", self.product_law)?;
        if let Some(s) = &self.splitting {
            writeln!(f, "stable dim: {}", s.stable_dim)?;
            writeln!(f, "unstable dim: {}", s.unstable_dim)?;
            for v in &s.stable_basis {
                writeln!(f, "  n^s: {}", vector(v))?;
            }
            for v in &s.unstable_basis {
                writeln!(f, "  n^u: {}", vector(v))?;
            }
            if s.stable_dim > 0 {
                writeln!(f, "mu^s: {:.15}", s.stable_modulus)?;
            }
            match s.lambda_s {
                Some(l) => writeln!(f, "lambda^s: {l:.15}")?,
                None => writeln!(f, "lambda^s: undefined (stable dim {})", s.stable_dim)?,
            }
            writeln!(f, "splitting residual: {:.3e}", s.residual)?;
        }
        writeln!(f, "group law self-check: {}", self.group_law)?;
        writeln!(f, "lattice reduction self-check: {}", self.lattice_reduction)?;
        write!(f, "elapsed: {:.1} ms", self.elapsed_ms)
    }
}
