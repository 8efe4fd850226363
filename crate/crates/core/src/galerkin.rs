//! Fourier–Galerkin truncation of `H(ε) = Δ + εV`.
//!
//! On the box `{m ∈ Zⁿ : max_j |m_j| ≤ R}` the operator is the dense matrix
//! `H_{m m'} = |m|² δ_{m m'} + ε V̂(m - m')`. Its eigenvalues near `λ0` are an
//! independent check on the first-order corrections: `(μ_i(ε) - λ0)/ε`
//! approaches `λ_i^{(1)}` with an `O(ε)` error.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, Eigendecomposition};
use crate::error::{invalid, Error, Result};
use crate::lattice::{box_modes, LatticeVector};
use crate::perturbation::{self, SplittingReport};
use crate::potential::PotentialSpec;

/// Largest admissible basis size `(2R+1)ⁿ`.
pub const MAX_BASIS: usize = 20_000;

/// Cluster eigenvalue drift between `R` and `R + 2` considered converged.
pub const CUTOFF_CHANGE_LIMIT: f64 = 1e-12;

/// Errors below this are treated as exact and excluded from trend checks.
pub const ERROR_FLOOR: f64 = 1e-12;

pub const FORMAL_WARNING: &str =
    "formal potential: some weight is zero, the truncated operator has no continuum limit";

#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    pub spec: PotentialSpec,
    pub epsilon: f64,
    pub cutoff: u32,
    /// Box modes in lexicographic order; rows and columns of [`matrix`](Self::matrix).
    pub basis: Vec<LatticeVector>,
    /// `V̂(t)` for `t ∈ [0, 2R]ⁿ`, indexed by `Σ_j t_j (2R+1)^j`.
    coefficients: Vec<f64>,
}

fn basis_size(n: usize, cutoff: u32) -> Option<usize> {
    (2 * cutoff as usize + 1).checked_pow(n as u32)
}

pub fn assemble_galerkin(
    spec: &PotentialSpec,
    epsilon: f64,
    cutoff: u32,
) -> Result<GalerkinOperator> {
    spec.validate()?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon = {epsilon} must lie in [0, 1)")));
    }
    let n = spec.n();
    let dimension = basis_size(n, cutoff).unwrap_or(usize::MAX);
    if dimension > MAX_BASIS {
        return Err(Error::ResourceLimit {
            dimension,
            cap: MAX_BASIS,
        });
    }
    let side = 2 * cutoff as usize + 1;
    let coefficients = (0..dimension)
        .map(|mut idx| {
            let t: Vec<i64> = (0..n)
                .map(|_| {
                    let c = (idx % side) as i64;
                    idx /= side;
                    c
                })
                .collect();
            spec.coefficient(&t)
        })
        .collect();
    Ok(GalerkinOperator {
        spec: spec.clone(),
        epsilon,
        cutoff,
        basis: box_modes(n, cutoff),
        coefficients,
    })
}

impl GalerkinOperator {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn warning(&self) -> Option<&'static str> {
        self.spec.is_formal().then_some(FORMAL_WARNING)
    }

    fn entry(&self, a: &[i64], b: &[i64]) -> f64 {
        let side = 2 * self.cutoff as usize + 1;
        let mut idx = 0;
        for (&x, &y) in a.iter().zip(b).rev() {
            idx = idx * side + x.abs_diff(y) as usize;
        }
        let coupling = self.epsilon * self.coefficients[idx];
        if a == b {
            a.iter().map(|&x| (x * x) as f64).sum::<f64>() + coupling
        } else {
            coupling
        }
    }

    /// The dense matrix `|m|² δ_{m m'} + ε V̂(m - m')` on [`basis`](Self::basis).
    pub fn matrix(&self) -> DMatrix<f64> {
        let columns: Vec<Vec<f64>> = self
            .basis
            .par_iter()
            .map(|mj| {
                self.basis
                    .iter()
                    .map(|mi| self.entry(mi.coords(), mj.coords()))
                    .collect()
            })
            .collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| columns[j][i])
    }

    /// Diagonal blocks of the matrix in the basis of coordinate-parity
    /// eigenfunctions, one block per set of odd coordinates (bit `j` of the
    /// index). `V̂` depends only on `t_j²`, so the operator commutes with
    /// every sign flip `m_j ↦ -m_j` and the blocks carry the whole spectrum.
    pub fn parity_blocks(&self) -> Vec<DMatrix<f64>> {
        let n = self.spec.n();
        (0..1usize << n)
            .into_par_iter()
            .map(|odd| self.parity_block(odd))
            .collect()
    }

    fn parity_block(&self, odd: usize) -> DMatrix<f64> {
        let n = self.spec.n();
        // one representative per sign orbit; odd coordinates cannot vanish
        let reps: Vec<&LatticeVector> = self
            .basis
            .iter()
            .filter(|m| {
                m.coords()
                    .iter()
                    .enumerate()
                    .all(|(j, &c)| c > 0 || (c == 0 && odd >> j & 1 == 0))
            })
            .collect();
        let zeros = |m: &LatticeVector| m.coords().iter().filter(|&&c| c == 0).count() as i32;
        // upper triangle only; row i holds columns i..
        let rows: Vec<Vec<f64>> = reps
            .par_iter()
            .enumerate()
            .map(|(i, a)| {
                let mut flipped = vec![0i64; n];
                reps[i..]
                    .iter()
                    .map(|b| {
                        let mut sum = 0.0;
                        for flips in 0..1usize << n {
                            for (j, f) in flipped.iter_mut().enumerate() {
                                let c = b.coords()[j];
                                *f = if flips >> j & 1 == 1 { -c } else { c };
                            }
                            let h = self.entry(a.coords(), &flipped);
                            if (flips & odd).count_ones() % 2 == 1 {
                                sum -= h;
                            } else {
                                sum += h;
                            }
                        }
                        sum / 2f64.powi(zeros(a) + zeros(b)).sqrt()
                    })
                    .collect()
            })
            .collect();
        let size = reps.len();
        DMatrix::from_fn(size, size, |i, j| {
            if i <= j {
                rows[i][j - i]
            } else {
                rows[j][i - j]
            }
        })
    }

    /// All eigenvalues, ascending, from the parity blocks.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let per_block = self
            .parity_blocks()
            .par_iter()
            .filter(|b| b.nrows() > 0)
            .map(eigen::symmetric_eigenvalues)
            .collect::<Result<Vec<_>>>()?;
        let mut values: Vec<f64> = per_block.into_iter().flatten().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// The `count` eigenvalues nearest `target`, ascending, refined as in
    /// [`eigen::symmetric_eigenvalues_near`].
    pub fn eigenvalues_near(&self, target: f64, count: usize) -> Result<Vec<f64>> {
        if count > self.dim() {
            return Err(invalid(format!(
                "requested {count} eigenvalues from a {}-dimensional operator",
                self.dim()
            )));
        }
        let per_block = self
            .parity_blocks()
            .par_iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| eigen::symmetric_eigenvalues_near(b, target, count.min(b.nrows())))
            .collect::<Result<Vec<_>>>()?;
        let mut values: Vec<f64> = per_block.into_iter().flatten().collect();
        values.sort_by(f64::total_cmp);
        Ok(nearest(&values, target, count))
    }

    /// Full eigendecomposition of the dense matrix.
    pub fn eigen(&self) -> Result<Eigendecomposition> {
        eigen::symmetric_eigen(&self.matrix(), eigen::DEFAULT_TOLERANCE)
    }

    /// The `count` eigenvalues closest to `lambda0`, ascending.
    pub fn eigen_near(&self, lambda0: f64, count: usize) -> Result<Vec<f64>> {
        self.eigenvalues_near(lambda0, count)
    }

    /// Index of `m` in the basis, if it lies inside the cutoff box.
    pub fn index_of(&self, m: &LatticeVector) -> Option<usize> {
        self.basis.binary_search(m).ok()
    }
}

/// `count` entries of ascending `values` nearest `target`, ties toward the
/// smaller value, returned ascending.
pub fn nearest(values: &[f64], target: f64, count: usize) -> Vec<f64> {
    let mut idx = nearest_indices(values, target, count);
    idx.sort_unstable();
    idx.into_iter().map(|i| values[i]).collect()
}

fn nearest_indices(values: &[f64], target: f64, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        (values[a] - target)
            .abs()
            .total_cmp(&(values[b] - target).abs())
            .then(values[a].total_cmp(&values[b]))
    });
    idx.truncate(count);
    idx
}

/// Distance from `lambda0` to the nearest other unperturbed eigenvalue in the
/// cutoff box.
fn unperturbed_gap(n: usize, cutoff: u32, lambda0: u64) -> Option<f64> {
    let mut levels: Vec<u64> = box_modes(n, cutoff)
        .iter()
        .map(|m| m.squared_norm())
        .collect();
    levels.sort_unstable();
    levels.dedup();
    levels
        .iter()
        .filter(|&&l| l != lambda0)
        .map(|&l| (l as f64 - lambda0 as f64).abs())
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOptions {
    pub gap_tolerance: f64,
    /// Repeat the largest coupling at `R + 2` to measure truncation drift.
    pub check_cutoff: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: perturbation::DEFAULT_GAP_TOLERANCE,
            check_cutoff: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub epsilon: f64,
    /// The `m` eigenvalues attributed to the cluster, ascending.
    pub cluster: Vec<f64>,
    /// `d_i = (μ_i - λ0)/ε`; for `ε = 0` the first-order values themselves.
    pub scaled: Vec<f64>,
    /// `max_i |d_i - λ_i^{(1)}|`, or `max_i |μ_i - λ0|` at `ε = 0`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffCheck {
    pub epsilon: f64,
    pub cutoff: u32,
    pub extended_cutoff: u32,
    pub max_change: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub lambda0: u64,
    pub n: usize,
    pub cutoff: u32,
    pub first_order: Vec<f64>,
    pub rows: Vec<ValidationRow>,
    /// `error[k+1] / error[k]` for consecutive positive couplings; `None`
    /// when either error is below [`ERROR_FLOOR`].
    pub ratios: Vec<Option<f64>>,
    /// Every ratio lies within `[0.2 r, 5 r]`, `r = ε_{k+1}/ε_k`.
    pub trend_ok: bool,
    pub cutoff_check: Option<CutoffCheck>,
    pub warnings: Vec<String>,
}

/// Compare the Galerkin cluster around `lambda0` with first-order theory for
/// each coupling in `epsilons` (descending, each in `[0, 1)`).
pub fn validate_first_order(
    spec: &PotentialSpec,
    lambda0: u64,
    epsilons: &[f64],
    cutoff: u32,
    options: &ValidationOptions,
) -> Result<ValidationReport> {
    if epsilons.is_empty() {
        return Err(invalid("at least one epsilon is required"));
    }
    if epsilons.iter().any(|e| !(0.0..1.0).contains(e)) {
        return Err(invalid("every epsilon must lie in [0, 1)"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("epsilons must be strictly descending"));
    }
    let report = perturbation::first_order_corrections(spec, lambda0, options.gap_tolerance)?;
    let n = spec.n();
    if report
        .basis()
        .frequencies()
        .iter()
        .any(|k| k.sup_norm() > cutoff as u64)
    {
        return Err(invalid(format!(
            "cutoff {cutoff} does not contain the eigenspace of {lambda0}"
        )));
    }
    let m = report.corrections.len();
    let half_gap = unperturbed_gap(n, cutoff, lambda0).map_or(f64::INFINITY, |g| g / 2.0);

    let mut rows = Vec::with_capacity(epsilons.len());
    let mut cutoff_check = None;
    for (step, &epsilon) in epsilons.iter().enumerate() {
        let op = assemble_galerkin(spec, epsilon, cutoff)?;
        let values = op.eigenvalues_near(lambda0 as f64, (m + 1).min(op.dim()))?;
        let cluster = identify_cluster(&values, lambda0, m, half_gap, epsilon)?;
        rows.push(scaled_row(&report, lambda0, epsilon, cluster));

        if step == 0 && options.check_cutoff && epsilon > 0.0 {
            let extended = cutoff + 2;
            if basis_size(n, extended).is_some_and(|d| d <= MAX_BASIS) {
                let wide = assemble_galerkin(spec, epsilon, extended)?
                    .eigenvalues_near(lambda0 as f64, m + 1)?;
                let wide_gap =
                    unperturbed_gap(n, extended, lambda0).map_or(f64::INFINITY, |g| g / 2.0);
                let wide_cluster = identify_cluster(&wide, lambda0, m, wide_gap, epsilon)?;
                let max_change = rows[0]
                    .cluster
                    .iter()
                    .zip(&wide_cluster)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                cutoff_check = Some(CutoffCheck {
                    epsilon,
                    cutoff,
                    extended_cutoff: extended,
                    max_change,
                    converged: max_change < CUTOFF_CHANGE_LIMIT,
                });
            }
        }
    }

    let mut ratios = Vec::new();
    let mut trend_ok = true;
    for w in rows.windows(2) {
        if w[0].epsilon == 0.0 || w[1].epsilon == 0.0 {
            continue;
        }
        if w[0].error < ERROR_FLOOR || w[1].error < ERROR_FLOOR {
            ratios.push(None);
            continue;
        }
        let ratio = w[1].error / w[0].error;
        let expected = w[1].epsilon / w[0].epsilon;
        if !(0.2 * expected..=5.0 * expected).contains(&ratio) {
            trend_ok = false;
        }
        ratios.push(Some(ratio));
    }

    let mut warnings = Vec::new();
    if spec.is_formal() {
        warnings.push(FORMAL_WARNING.to_string());
    }
    Ok(ValidationReport {
        lambda0,
        n,
        cutoff,
        first_order: report.corrections,
        rows,
        ratios,
        trend_ok,
        cutoff_check,
        warnings,
    })
}

/// The `m` eigenvalues nearest `lambda0`, provided they sit strictly inside
/// the half-gap window and nothing else does.
fn identify_cluster(
    values: &[f64],
    lambda0: u64,
    m: usize,
    half_gap: f64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let target = lambda0 as f64;
    let idx = nearest_indices(values, target, m + 1);
    for (rank, &i) in idx.iter().enumerate() {
        let distance = (values[i] - target).abs();
        let inside = distance < half_gap;
        if (rank < m) != inside {
            return Err(Error::CouplingTooLarge {
                epsilon,
                lambda0,
                half_gap,
                offending: values[i],
            });
        }
    }
    Ok(nearest(values, target, m))
}

fn scaled_row(
    report: &SplittingReport,
    lambda0: u64,
    epsilon: f64,
    cluster: Vec<f64>,
) -> ValidationRow {
    let target = lambda0 as f64;
    if epsilon == 0.0 {
        let error = cluster
            .iter()
            .map(|mu| (mu - target).abs())
            .fold(0.0, f64::max);
        return ValidationRow {
            epsilon,
            scaled: report.corrections.clone(),
            cluster,
            error,
        };
    }
    let scaled: Vec<f64> = cluster.iter().map(|mu| (mu - target) / epsilon).collect();
    let error = scaled
        .iter()
        .zip(&report.corrections)
        .map(|(d, l)| (d - l).abs())
        .fold(0.0, f64::max);
    ValidationRow {
        epsilon,
        cluster,
        scaled,
        error,
    }
}

/// Fan-plot rows `(ε, branch, μ)` for CSV export.
pub fn fan_plot_rows(report: &ValidationReport) -> Vec<(f64, usize, f64)> {
    report
        .rows
        .iter()
        .flat_map(|row| {
            row.cluster
                .iter()
                .enumerate()
                .map(move |(i, &mu)| (row.epsilon, i, mu))
        })
        .collect()
}
