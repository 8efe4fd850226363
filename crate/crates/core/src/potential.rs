//! Gaussian trigonometric potential
//!
//! ```text
//! V(x) = Σ_{t ∈ Zⁿ} exp(-‖t‖²_α) exp(i t·x)  [- 1],    ‖t‖²_α = Σ_j α_j t_j²
//! ```
//!
//! The Fourier coefficients are real and even in `t`, so `V` is a real cosine
//! series and every matrix `⟨e_k, V e_l⟩ = V̂(k - l)` built from it is real
//! symmetric. The optional `- 1` zeroes the `t = 0` coefficient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{check_dimension, LatticeVector};

pub const DEFAULT_EVAL_TRUNCATION: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    alpha: Vec<f64>,
    subtract_constant: bool,
    eval_truncation: u32,
    formal: bool,
}

impl PotentialSpec {
    /// Spec with weights `alpha`, the constant subtracted and the default
    /// evaluation truncation.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        let spec = Self {
            alpha,
            subtract_constant: true,
            eval_truncation: DEFAULT_EVAL_TRUNCATION,
            formal: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Like [`new`](Self::new) but every weight may be zero. Such a spec
    /// only has coefficient queries and finite truncations.
    pub fn new_formal(alpha: Vec<f64>) -> Result<Self> {
        let spec = Self {
            alpha,
            subtract_constant: true,
            eval_truncation: DEFAULT_EVAL_TRUNCATION,
            formal: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_subtract_constant(mut self, subtract: bool) -> Self {
        self.subtract_constant = subtract;
        self
    }

    pub fn with_eval_truncation(mut self, t_max: u32) -> Result<Self> {
        self.eval_truncation = t_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.alpha.len())?;
        for (j, &a) in self.alpha.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(invalid(format!(
                    "alpha[{j}] = {a} must be a finite non-negative weight"
                )));
            }
        }
        if !self.formal && self.alpha.iter().all(|&a| a == 0.0) {
            return Err(invalid(
                "all weights are zero; mark the spec formal to allow this",
            ));
        }
        if self.eval_truncation == 0 {
            return Err(invalid("eval_truncation must be at least 1"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn subtract_constant(&self) -> bool {
        self.subtract_constant
    }

    pub fn eval_truncation(&self) -> u32 {
        self.eval_truncation
    }

    /// True when some direction carries no decay, so the real-space series
    /// diverges.
    pub fn is_formal(&self) -> bool {
        self.alpha.contains(&0.0)
    }

    pub fn min_alpha(&self) -> f64 {
        self.alpha.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖t‖²_α = Σ α_j t_j²`.
    pub fn weighted_norm_sq(&self, t: &[i64]) -> f64 {
        self.alpha
            .iter()
            .zip(t)
            .map(|(&a, &c)| a * (c * c) as f64)
            .sum()
    }

    /// `V̂(t)` without dimension checks.
    pub(crate) fn coefficient(&self, t: &[i64]) -> f64 {
        if t.iter().all(|&c| c == 0) {
            return if self.subtract_constant { 0.0 } else { 1.0 };
        }
        (-self.weighted_norm_sq(t)).exp()
    }

    /// `V̂(k - l)` for two frequencies of matching dimension.
    pub(crate) fn coupling(&self, k: &[i64], l: &[i64]) -> f64 {
        let mut zero = true;
        let mut w = 0.0;
        for ((&a, &x), &y) in self.alpha.iter().zip(k).zip(l) {
            let d = x - y;
            if d != 0 {
                zero = false;
                w += a * (d * d) as f64;
            }
        }
        if zero {
            if self.subtract_constant {
                0.0
            } else {
                1.0
            }
        } else {
            (-w).exp()
        }
    }

    /// Fourier coefficient `V̂(t)`, always in `[0, 1]`.
    pub fn fourier_coefficient(&self, t: &LatticeVector) -> Result<f64> {
        self.check_dim(t.dim())?;
        Ok(self.coefficient(t.coords()))
    }

    /// Coefficient at `t = 0`.
    pub fn constant_term(&self) -> f64 {
        if self.subtract_constant {
            0.0
        } else {
            1.0
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(invalid(format!(
                "dimension mismatch: potential has n = {}, argument has n = {n}",
                self.n()
            )));
        }
        Ok(())
    }

    fn check_evaluable(&self) -> Result<()> {
        if let Some(j) = self.alpha.iter().position(|&a| a == 0.0) {
            return Err(Error::UnsupportedEvaluation(format!(
                "alpha[{j}] = 0: the coefficients do not decay along direction {j}, \
                 so the real-space series diverges"
            )));
        }
        Ok(())
    }

    /// `V(x)` by summing all `|t_j| ≤ eval_truncation` with even pairing:
    /// `V̂(0) + 2 Σ_{t in upper half-space} V̂(t) cos(t·x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_evaluable()?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("evaluation point must be finite"));
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// [`evaluate`](Self::evaluate) over a batch of points, in parallel.
    pub fn evaluate_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_evaluable()?;
        for x in points {
            self.check_dim(x.len())?;
        }
        Ok(points
            .par_iter()
            .map(|x| self.evaluate_unchecked(x))
            .collect())
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let r = self.eval_truncation as i64;
        let mut t = vec![-r; n];
        let mut sum = 0.0;
        loop {
            // upper half-space: first nonzero coordinate positive
            if t.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                let phase: f64 = t.iter().zip(x).map(|(&c, &xi)| c as f64 * xi).sum();
                sum += self.coefficient(&t) * phase.cos();
            }
            let mut j = n;
            loop {
                if j == 0 {
                    return self.constant_term() + 2.0 * sum;
                }
                j -= 1;
                if t[j] < r {
                    t[j] += 1;
                    break;
                }
                t[j] = -r;
            }
        }
    }

    /// Estimate of the neglected tail `e^{-α_min T²} (2T+1)^{n-1}` of
    /// [`evaluate`](Self::evaluate).
    pub fn tail_estimate(&self) -> f64 {
        let t = self.eval_truncation as f64;
        (-self.min_alpha() * t * t).exp() * (2.0 * t + 1.0).powi(self.n() as i32 - 1)
    }
}
