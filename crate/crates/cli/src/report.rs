//! Report files. Every real number is written with 17 significant digits so
//! that a report re-parses to the same doubles.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::files::{MatrixJson, MeasurementFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    /// Arguments exactly as given.
    pub args: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pbr: Option<PbrSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub status: String,
    pub alpha: f64,
    pub beta: f64,
    pub gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub primal_margin: f64,
    pub dual_residual: f64,
    pub dual_margin: f64,
    pub measurement: MeasurementFile,
    pub dual_n: MatrixJson,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    pub is_optimal: bool,
    pub alpha: f64,
    pub trace_n: f64,
    pub n: MatrixJson,
    pub margins: Vec<f64>,
    pub hermiticity_residual: f64,
    pub objective_match: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub kind: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_trace: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbrSection {
    pub n: usize,
    pub theta: f64,
    pub mode: String,
    pub threshold_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<PbrAnalytic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdp: Option<PbrSdp>,
    /// `|alpha_sdp - alpha_analytic|` in `both` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbrAnalytic {
    pub criterion_met: bool,
    pub p_win_global: f64,
    pub p_win_separable: f64,
    pub alpha_analytic: f64,
    pub c_theta: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbrSdp {
    pub status: String,
    pub alpha_sdp: f64,
    pub beta: f64,
    pub gap: f64,
    pub iterations: usize,
    pub p_win_global: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub elapsed_seconds: f64,
}

/// Compact JSON with `{:.16e}` floats.
struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let bytes = to_json(value).map_err(io::Error::other)?;
    std::fs::write(path, bytes)
}
