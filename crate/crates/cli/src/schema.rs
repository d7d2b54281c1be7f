//! JSON system definitions.
//!
//! ```json
//! {
//!   "name": "heisenberg",
//!   "dimension": 3,
//!   "structure_constants": [[1, 2, 3, "1"]],
//!   "automorphism": [["4", "2", "0"], ["2", "2", "0"], ["0", "0", "4"]],
//!   "perturbation": { "kind": "shear", "direction": "stable", "amplitude": 0.01 },
//!   "experiment": { "k_max": 4, "grid_n": 33 }
//! }
//! ```
//!
//! Indices in `structure_constants` are 1-based. The automorphism is given row by
//! row and acts on coordinate column vectors.

use std::path::Path;
use std::sync::Arc;

use nilflow_core::dynlab::{Bump, BumpTerm};
use nilflow_core::endo::AutoMap;
use nilflow_core::liealg::LieAlgebra;
use nilflow_core::ratcore::{format_rat, parse_rat, Rat, RatMatrix};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub structure_constants: Vec<(usize, usize, usize, String)>,
    pub automorphism: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default, skip_serializing_if = "ExperimentParams::is_empty")]
    pub experiment: ExperimentParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindSpec {
    #[default]
    Shear,
    Conjugated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NamedDirection {
    Stable,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Named(NamedDirection),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpTermSpec {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub kind: KindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionSpec>,
    pub amplitude: f64,
    /// Empty means the standard bump.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bump: Vec<BumpTermSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
}

impl ExperimentParams {
    fn is_empty(&self) -> bool {
        *self == ExperimentParams::default()
    }
}

/// A validated system: algebra, linear part and optional perturbation data.
#[derive(Clone, Debug)]
pub struct SystemDefinition {
    pub name: String,
    pub map: AutoMap,
    pub perturbation: Option<PerturbationSpec>,
    pub experiment: ExperimentParams,
}

impl SystemDefinition {
    pub fn algebra(&self) -> &LieAlgebra {
        self.map.algebra()
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Canonical file form: constants with `i < j`, rationals in lowest terms.
    pub fn to_file(&self) -> SystemFile {
        let m = self.map.matrix();
        SystemFile {
            name: self.name.clone(),
            dimension: self.dim(),
            structure_constants: self
                .algebra()
                .structure_constants()
                .iter()
                .map(|(i, j, k, c)| (i + 1, j + 1, k + 1, format_rat(c)))
                .collect(),
            automorphism: (0..m.rows()).map(|r| m.row(r).iter().map(format_rat).collect()).collect(),
            perturbation: self.perturbation.clone(),
            experiment: self.experiment.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("system files always serialize")
    }

    /// Bump from the spec, or the standard one.
    pub fn bump(&self) -> Result<Bump, CliError> {
        let hdim = self.algebra().horizontal_dim();
        let terms = match &self.perturbation {
            Some(p) if !p.bump.is_empty() => &p.bump,
            _ => return Ok(Bump::standard(hdim)),
        };
        let terms = terms
            .iter()
            .map(|t| BumpTerm { freq: t.freq.clone(), cos: t.cos, sin: t.sin })
            .collect();
        Bump::new(hdim, terms).map_err(|e| CliError::Validation(format!("perturbation.bump: {e}")))
    }
}

pub fn parse_system(path: &Path) -> Result<SystemDefinition, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_system_str(&text).map_err(|e| e.with_context(&path.display().to_string()))
}

pub fn parse_system_str(text: &str) -> Result<SystemDefinition, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SystemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() && path != "." {
            CliError::Parse(format!(
                "schema violation at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        } else if inner.is_data() {
            CliError::Parse(format!("schema violation: {inner}"))
        } else {
            CliError::Parse(format!("syntax error: {inner}"))
        }
    })?;
    build(file)
}

pub fn build(file: SystemFile) -> Result<SystemDefinition, CliError> {
    let d = file.dimension;
    if d == 0 {
        return Err(CliError::Validation("dimension: must be positive".into()));
    }
    let mut triples = Vec::with_capacity(file.structure_constants.len());
    for (n, (i, j, k, c)) in file.structure_constants.iter().enumerate() {
        for (slot, idx) in [(0, i), (1, j), (2, k)] {
            if *idx == 0 || *idx > d {
                return Err(CliError::Validation(format!(
                    "structure_constants[{n}][{slot}]: index {idx} outside 1..={d}"
                )));
            }
        }
        let c = parse_rat(c)
            .map_err(|e| CliError::Validation(format!("structure_constants[{n}][3]: {e}")))?;
        triples.push((i - 1, j - 1, k - 1, c));
    }
    let alg = LieAlgebra::new(d, &triples)
        .map_err(|e| CliError::Validation(format!("structure_constants: {e}")))?;

    if file.automorphism.len() != d {
        return Err(CliError::Validation(format!(
            "automorphism: {} rows, expected {d}",
            file.automorphism.len()
        )));
    }
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(d);
    for (r, row) in file.automorphism.iter().enumerate() {
        if row.len() != d {
            return Err(CliError::Validation(format!(
                "automorphism[{r}]: {} entries, expected {d}",
                row.len()
            )));
        }
        let parsed = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                parse_rat(s).map_err(|e| CliError::Validation(format!("automorphism[{r}][{c}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(parsed);
    }
    let matrix = RatMatrix::from_rows(rows).map_err(|e| CliError::Validation(format!("automorphism: {e}")))?;
    let map = AutoMap::new_validated(Arc::new(alg), matrix)
        .map_err(|e| CliError::Validation(format!("automorphism: {e}")))?;

    if let Some(p) = &file.perturbation {
        if !p.amplitude.is_finite() || p.amplitude < 0.0 {
            return Err(CliError::Validation(format!(
                "perturbation.amplitude: {} is not a non-negative number",
                p.amplitude
            )));
        }
        if let Some(DirectionSpec::Vector(v)) = &p.direction {
            if v.len() != d {
                return Err(CliError::Validation(format!(
                    "perturbation.direction: {} entries, expected {d}",
                    v.len()
                )));
            }
        }
    }
    Ok(SystemDefinition {
        name: file.name,
        map,
        perturbation: file.perturbation,
        experiment: file.experiment,
    })
}
