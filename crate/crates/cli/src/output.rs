//! Number formatting and the JSON report schema (version 1).

use serde::Serialize;
use torus_split::fixtures::Discrepancy;
use torus_split::galerkin::ValidationReport;

pub const SCHEMA: u32 = 1;

/// Six significant digits, switching to exponent form for very small or
/// large magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Full-precision CSV line.
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct LatticeReport {
    pub schema: u32,
    pub lambda: u64,
    pub n: usize,
    pub multiplicity: u64,
    pub representations: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize)]
pub struct Level {
    pub lambda: u64,
    pub multiplicity: u64,
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub schema: u32,
    pub n: usize,
    pub max: u64,
    pub levels: Vec<Level>,
}

#[derive(Debug, Serialize)]
pub struct PotentialInfo {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub subtract_constant: bool,
    pub formal: bool,
}

#[derive(Debug, Serialize)]
pub struct SecondOrderReport {
    pub cutoff: u32,
    /// Branch indices the values belong to (isolated branches only).
    pub branches: Vec<usize>,
    pub values: Vec<f64>,
    pub tail_bound: Option<f64>,
    /// `beta[j][i]`, present when every branch is isolated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize)]
pub struct SplitReport {
    pub schema: u32,
    pub lambda0: u64,
    pub potential: PotentialInfo,
    pub multiplicity: usize,
    pub basis: Vec<Vec<i64>>,
    pub matrix: Vec<Vec<f64>>,
    pub gap_tolerance: f64,
    pub corrections: Vec<f64>,
    pub min_gap: Option<f64>,
    pub verdict: &'static str,
    pub clusters: Vec<Vec<usize>>,
    /// Coefficients of each branch in the basis order above.
    pub eigenvectors: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_order: Option<SecondOrderReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport<'a> {
    pub schema: u32,
    pub potential: PotentialInfo,
    #[serde(flatten)]
    pub validation: &'a ValidationReport,
}

#[derive(Debug, Serialize)]
pub struct ReferenceEntry {
    pub name: String,
    pub lambda0: u64,
    pub potential: PotentialInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    /// Published eigenvalues, ascending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancies: Option<Vec<Discrepancy>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_rows: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct ReferenceReport {
    pub schema: u32,
    pub mode: &'static str,
    pub matrices: Vec<ReferenceEntry>,
}
