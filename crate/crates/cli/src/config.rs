//! Flat TOML run configuration.
//!
//! ```toml
//! n = 2
//! lambda = 5
//! alpha = [1, 2]
//! subtract_constant = false
//! eval_truncation = 12
//! gap_tolerance = 1e-9
//! eps = [1e-2, 1e-3]
//! cutoff = 8
//! formal = false
//! ```

use std::path::Path;

use serde::Deserialize;
use torus_split::perturbation::DEFAULT_GAP_TOLERANCE;
use torus_split::PotentialSpec;

use crate::args::{Diag, ProblemArgs};
use crate::CliError;

/// TOML integers and floats both read as `f64`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn get(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    n: Option<usize>,
    lambda: Option<u64>,
    alpha: Option<Vec<Number>>,
    subtract_constant: Option<bool>,
    eval_truncation: Option<u32>,
    gap_tolerance: Option<Number>,
    eps: Option<Vec<Number>>,
    cutoff: Option<u32>,
    formal: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            CliError::usage(format!(
                "invalid config {}: {}",
                path.display(),
                e.message()
            ))
        })
    }

    pub fn eps(&self) -> Option<Vec<f64>> {
        self.eps
            .as_ref()
            .map(|v| v.iter().map(|x| x.get()).collect())
    }

    pub fn cutoff(&self) -> Option<u32> {
        self.cutoff
    }
}

/// A validated problem: potential, eigenvalue and gap tolerance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: PotentialSpec,
    pub lambda0: u64,
    pub gap_tolerance: f64,
}

pub fn resolve(args: &ProblemArgs) -> Result<(Problem, FileConfig), CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let alpha = args
        .alpha
        .clone()
        .or_else(|| {
            file.alpha
                .as_ref()
                .map(|v| v.iter().map(|x| x.get()).collect())
        })
        .ok_or_else(|| CliError::usage("--alpha is required"))?;
    let n = args.n.or(file.n).unwrap_or(alpha.len());
    if n != alpha.len() {
        return Err(CliError::usage(format!(
            "--n {n} does not match the {} weights given in --alpha",
            alpha.len()
        )));
    }
    let lambda0 = args
        .lambda
        .or(file.lambda)
        .ok_or_else(|| CliError::usage("--lambda is required"))?;
    let subtract = match args.diag {
        Some(Diag::Zero) => true,
        Some(Diag::One) => false,
        None => file.subtract_constant.unwrap_or(true),
    };
    let formal = args.formal || file.formal.unwrap_or(false);
    let gap_tolerance = args
        .gap_tol
        .or(file.gap_tolerance.map(Number::get))
        .unwrap_or(DEFAULT_GAP_TOLERANCE);
    if !(gap_tolerance.is_finite() && gap_tolerance >= 0.0) {
        return Err(CliError::usage(format!(
            "gap tolerance {gap_tolerance} must be finite and non-negative"
        )));
    }

    let mut spec = if formal {
        PotentialSpec::new_formal(alpha)?
    } else {
        PotentialSpec::new(alpha)?
    };
    spec = spec.with_subtract_constant(subtract);
    if let Some(t) = args.eval_truncation.or(file.eval_truncation) {
        spec = spec.with_eval_truncation(t)?;
    }
    Ok((
        Problem {
            spec,
            lambda0,
            gap_tolerance,
        },
        file,
    ))
}
