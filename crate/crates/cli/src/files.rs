//! Ensemble and measurement files. Matrices are row-major nested arrays of
//! `[re, im]` pairs.

use std::fmt;
use std::path::Path;

use qexcl::linalg::{ComplexMatrix, HermitianMatrix, C64};
use qexcl::{Ensemble, Measurement, WeightedOperators};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub label: String,
    pub prob: f64,
    pub matrix: MatrixJson,
}

/// A list of states with priors, or of already weighted operators when
/// `subnormalized` is set (then `prob` records the operator's trace).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dim: usize,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub subnormalized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub matrix: MatrixJson,
}

/// Conclusive elements in state order, plus an optional inconclusive element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    pub dim: usize,
    pub elements: Vec<ElementEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<MatrixJson>,
}

/// A parse or validation failure, located by file and field.
#[derive(Debug)]
pub struct InputError {
    pub file: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}: field `{}`: {}", self.file, self.field, self.message)
        }
    }
}

impl std::error::Error for InputError {}

fn input_error(file: &Path, field: impl Into<String>, message: impl fmt::Display) -> InputError {
    InputError {
        file: file.display().to_string(),
        field: field.into(),
        message: message.to_string(),
    }
}

/// Reads JSON, reporting the failing field path together with line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, "", e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        input_error(path, field, e.into_inner())
    })?;
    de.end().map_err(|e| input_error(path, "", e))?;
    Ok(value)
}

pub fn encode_matrix(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn decode_matrix(json: &MatrixJson, dim: usize, path: &Path, field: &str) -> Result<HermitianMatrix, InputError> {
    if json.len() != dim {
        return Err(input_error(
            path,
            field,
            format!("expected {dim} rows, found {}", json.len()),
        ));
    }
    let mut rows = Vec::with_capacity(dim);
    for (i, row) in json.iter().enumerate() {
        if row.len() != dim {
            return Err(input_error(
                path,
                format!("{field}[{i}]"),
                format!("expected {dim} entries, found {}", row.len()),
            ));
        }
        rows.push(row.iter().map(|&[re, im]| C64::new(re, im)).collect());
    }
    let m = ComplexMatrix::from_rows(&rows).map_err(|e| input_error(path, field, e))?;
    HermitianMatrix::new(m).map_err(|e| input_error(path, field, e))
}

/// Contents of an ensemble file: the weighted operators, and the ensemble
/// of normalized states with priors.
pub struct LoadedEnsemble {
    pub operators: WeightedOperators,
    pub ensemble: Ensemble,
}

pub fn load_ensemble(path: &Path) -> Result<LoadedEnsemble, InputError> {
    let file: EnsembleFile = read_json(path)?;
    if file.dim == 0 {
        return Err(input_error(path, "dim", "must be at least 1"));
    }
    if file.states.is_empty() {
        return Err(input_error(path, "states", "at least one state is required"));
    }
    let mut matrices = Vec::with_capacity(file.states.len());
    for (i, s) in file.states.iter().enumerate() {
        matrices.push(decode_matrix(
            &s.matrix,
            file.dim,
            path,
            &format!("states[{i}].matrix"),
        )?);
    }
    let labels: Vec<String> = file.states.iter().map(|s| s.label.clone()).collect();
    let invalid = |e: qexcl::Error| {
        let field = match &e {
            qexcl::Error::NotDensity { index, .. } => format!("states[{index}]"),
            _ => "states".to_string(),
        };
        input_error(path, field, e)
    };
    if file.subnormalized {
        let operators = WeightedOperators::new(matrices, Some(labels.clone())).map_err(invalid)?;
        let total = operators.total_trace();
        let mut states = Vec::new();
        let mut probs = Vec::new();
        for (i, op) in operators.operators().iter().enumerate() {
            let tr = op.trace_re();
            if tr <= 0.0 {
                return Err(input_error(
                    path,
                    format!("states[{i}].matrix"),
                    "operator has zero trace",
                ));
            }
            states.push(op.scale(1.0 / tr));
            probs.push(tr / total);
        }
        let ensemble = Ensemble::new(states, probs, Some(labels)).map_err(invalid)?;
        Ok(LoadedEnsemble { operators, ensemble })
    } else {
        let probs = file.states.iter().map(|s| s.prob).collect();
        let ensemble = Ensemble::new(matrices, probs, Some(labels)).map_err(invalid)?;
        Ok(LoadedEnsemble {
            operators: ensemble.weighted(),
            ensemble,
        })
    }
}

pub fn load_measurement(path: &Path) -> Result<Measurement, InputError> {
    let file: MeasurementFile = read_json(path)?;
    if file.dim == 0 {
        return Err(input_error(path, "dim", "must be at least 1"));
    }
    let mut elements = Vec::with_capacity(file.elements.len() + 1);
    for (i, e) in file.elements.iter().enumerate() {
        elements.push(decode_matrix(
            &e.matrix,
            file.dim,
            path,
            &format!("elements[{i}].matrix"),
        )?);
    }
    if let Some(m) = &file.inconclusive {
        elements.push(decode_matrix(m, file.dim, path, "inconclusive")?);
    }
    Measurement::new(elements, file.inconclusive.is_some()).map_err(|e| input_error(path, "elements", e))
}

pub fn operators_file(ops: &WeightedOperators) -> EnsembleFile {
    EnsembleFile {
        dim: ops.dim(),
        states: ops
            .operators()
            .iter()
            .zip(ops.labels())
            .map(|(op, label)| StateEntry {
                label: label.clone(),
                prob: op.trace_re(),
                matrix: encode_matrix(op.as_matrix()),
            })
            .collect(),
        subnormalized: true,
    }
}

pub fn measurement_file(
    labels: &[String],
    elements: &[HermitianMatrix],
    inconclusive: Option<&HermitianMatrix>,
) -> MeasurementFile {
    MeasurementFile {
        dim: elements.first().map_or(0, HermitianMatrix::dim),
        elements: labels
            .iter()
            .zip(elements)
            .map(|(l, m)| ElementEntry {
                label: Some(l.clone()),
                matrix: encode_matrix(m.as_matrix()),
            })
            .collect(),
        inconclusive: inconclusive.map(|m| encode_matrix(m.as_matrix())),
    }
}
