//! Degenerate Rayleigh–Schrödinger perturbation theory on one eigenspace.
//!
//! For an eigenvalue `λ0` of Δ with eigenspace basis `{e_k : |k|² = λ0}` the
//! first-order problem is the `m × m` secular matrix
//! `A_{μν} = ⟨e_{k_μ}, V e_{k_ν}⟩ = V̂(k_μ - k_ν)`; its eigenvalues are the
//! first-order corrections `λ_i^{(1)}` and its eigenvectors `a^{(i)}` fix the
//! zeroth-order branches `y_i = Σ_ν a_ν^{(i)} e_{k_ν}`.
//!
//! Second order uses the Fourier-diagonal resolvent of Δ:
//!
//! ```text
//! g_i(m)     = ⟨e_m, V y_i⟩ = Σ_ν a_ν^{(i)} V̂(m - k_ν)
//! ŷ_i(m)     = g_i(m) / (λ0 - |m|²)                      |m|² ≠ λ0
//! λ_i^{(2)}  = Σ_m g_i(m)² / (λ0 - |m|²)
//! β_{j}^{(i)} = ⟨y_j, V ŷ_i⟩ / (λ_i^{(1)} - λ_j^{(1)})     j ≠ i
//! ```
//!
//! with the sum truncated to `max_j |m_j| ≤ R`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, max_abs};
use crate::error::{invalid, Error, Result};
use crate::lattice::{self, box_modes, EigenspaceBasis, LatticeVector};
use crate::potential::PotentialSpec;

/// Default absolute tolerance separating distinct first-order corrections.
/// The Gaussian coefficients never exceed 1, so `1e-9·max(1, max V̂)` is this
/// constant.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-9;

/// Largest resolvent box `(2R+1)^n` the second-order sums will enumerate.
pub const MAX_RESOLVENT_MODES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationMatrix {
    pub lambda0: u64,
    pub basis: EigenspaceBasis,
    pub entries: DMatrix<f64>,
    pub subtract_constant: bool,
}

impl PerturbationMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.entries)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FullySplit,
    PartiallySplit,
    Unsplit,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FullySplit => "fully_split",
            Verdict::PartiallySplit => "partially_split",
            Verdict::Unsplit => "unsplit",
        }
    }
}

/// Gap structure of a sorted list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    /// Smallest adjacent difference; `None` for a single value.
    pub min_gap: Option<f64>,
    pub gap_tolerance: f64,
    pub verdict: Verdict,
    /// Runs of sorted indices whose adjacent gaps are `≤ gap_tolerance`.
    pub clusters: Vec<Vec<usize>>,
}

/// Classify ascending `values` into clusters joined by gaps `≤ gap_tolerance`.
pub fn classify(values: &[f64], gap_tolerance: f64) -> SplitSummary {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut min_gap: Option<f64> = None;
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            clusters.push(vec![0]);
            continue;
        }
        let gap = v - values[i - 1];
        min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
        if gap <= gap_tolerance {
            clusters.last_mut().expect("non-empty").push(i);
        } else {
            clusters.push(vec![i]);
        }
    }
    let verdict = if clusters.iter().all(|c| c.len() == 1) {
        Verdict::FullySplit
    } else if clusters.len() == 1 {
        Verdict::Unsplit
    } else {
        Verdict::PartiallySplit
    };
    SplitSummary {
        min_gap,
        gap_tolerance,
        verdict,
        clusters,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingReport {
    pub lambda0: u64,
    pub matrix: PerturbationMatrix,
    /// First-order corrections, ascending.
    pub corrections: Vec<f64>,
    /// Columns `a^{(i)}` in the basis order of `matrix.basis`.
    pub eigenvectors: DMatrix<f64>,
    pub summary: SplitSummary,
}

impl SplittingReport {
    pub fn verdict(&self) -> Verdict {
        self.summary.verdict
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.summary.min_gap
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.summary.clusters
    }

    pub fn basis(&self) -> &EigenspaceBasis {
        &self.matrix.basis
    }

    /// Branch `i` as coefficients over the eigenspace basis.
    pub fn branch(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    pub fn branches(&self) -> Vec<Vec<f64>> {
        (0..self.corrections.len())
            .map(|i| self.branch(i))
            .collect()
    }
}

fn check_spec_dim(spec: &PotentialSpec, n: usize) -> Result<()> {
    spec.validate()?;
    if spec.n() != n {
        return Err(invalid(format!(
            "dimension mismatch: potential has n = {}, eigenspace has n = {n}",
            spec.n()
        )));
    }
    Ok(())
}

/// `A_{μν} = V̂(k_μ - k_ν)` in the stored basis order.
pub fn assemble_first_order(
    spec: &PotentialSpec,
    basis: &EigenspaceBasis,
) -> Result<PerturbationMatrix> {
    check_spec_dim(spec, basis.dim())?;
    let k = basis.frequencies();
    let m = k.len();
    if m == 0 {
        return Err(invalid("empty eigenspace basis"));
    }
    let entries = DMatrix::from_fn(m, m, |i, j| spec.coupling(k[i].coords(), k[j].coords()));
    Ok(PerturbationMatrix {
        lambda0: basis.lambda0(),
        basis: basis.clone(),
        entries,
        subtract_constant: spec.subtract_constant(),
    })
}

/// Diagonalize an assembled secular matrix and classify its splitting.
pub fn split_matrix(matrix: PerturbationMatrix, gap_tolerance: f64) -> Result<SplittingReport> {
    if !(gap_tolerance.is_finite() && gap_tolerance >= 0.0) {
        return Err(invalid("gap tolerance must be finite and non-negative"));
    }
    let eig = eigen::symmetric_eigen(&matrix.entries, eigen::DEFAULT_TOLERANCE)?;
    let summary = classify(&eig.values, gap_tolerance);
    Ok(SplittingReport {
        lambda0: matrix.lambda0,
        matrix,
        corrections: eig.values,
        eigenvectors: eig.vectors,
        summary,
    })
}

/// First-order corrections and splitting verdict for `lambda0` on `T^n`,
/// `n = spec.n()`.
pub fn first_order_corrections(
    spec: &PotentialSpec,
    lambda0: u64,
    gap_tolerance: f64,
) -> Result<SplittingReport> {
    spec.validate()?;
    let basis = lattice::eigenspace(lambda0, spec.n())?;
    split_matrix(assemble_first_order(spec, &basis)?, gap_tolerance)
}

/// Default resolvent cutoff `max(⌈3√λ0⌉, 8)`.
pub fn default_resolvent_cutoff(lambda0: u64) -> u32 {
    let r = (3.0 * (lambda0 as f64).sqrt()).ceil() as u32;
    r.max(8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    pub cutoff: u32,
    /// `λ_i^{(2)}` per supplied branch.
    pub values: Vec<f64>,
    /// Bound on the part of the resolvent sum outside the cutoff box;
    /// `None` when some weight is zero and no bound exists.
    pub tail_bound: Option<f64>,
}

/// Out-of-eigenspace couplings `g_i(m)` for every `m` in the cutoff box.
struct Resolvent {
    modes: Vec<LatticeVector>,
    denominators: Vec<f64>,
    /// `couplings[(row = mode, col = branch)]`
    couplings: DMatrix<f64>,
}

impl Resolvent {
    fn new(
        spec: &PotentialSpec,
        basis: &EigenspaceBasis,
        branches: &[Vec<f64>],
        cutoff: u32,
    ) -> Self {
        let lambda0 = basis.lambda0();
        let modes: Vec<LatticeVector> = box_modes(basis.dim(), cutoff)
            .into_iter()
            .filter(|m| m.squared_norm() != lambda0)
            .collect();
        let k = basis.frequencies();
        let rows: Vec<Vec<f64>> = modes
            .par_iter()
            .map(|m| {
                let v: Vec<f64> = k
                    .iter()
                    .map(|kv| spec.coupling(m.coords(), kv.coords()))
                    .collect();
                branches
                    .iter()
                    .map(|a| a.iter().zip(&v).map(|(x, y)| x * y).sum())
                    .collect()
            })
            .collect();
        let couplings = DMatrix::from_fn(modes.len(), branches.len(), |r, c| rows[r][c]);
        let denominators = modes
            .iter()
            .map(|m| lambda0 as f64 - m.squared_norm() as f64)
            .collect();
        Self {
            modes,
            denominators,
            couplings,
        }
    }

    fn second_order(&self, branch: usize) -> f64 {
        self.couplings
            .column(branch)
            .iter()
            .zip(&self.denominators)
            .map(|(g, d)| g * g / d)
            .sum()
    }

    /// `⟨y_j, V ŷ_i⟩`.
    fn cross(&self, j: usize, i: usize) -> f64 {
        self.couplings
            .column(j)
            .iter()
            .zip(self.couplings.column(i).iter())
            .zip(&self.denominators)
            .map(|((gj, gi), d)| gj * gi / d)
            .sum()
    }
}

fn check_cutoff(basis: &EigenspaceBasis, cutoff: u32) -> Result<()> {
    let lambda0 = basis.lambda0();
    if (cutoff as f64) < (lambda0 as f64).sqrt() + 1.0 {
        return Err(invalid(format!(
            "resolvent cutoff {cutoff} must be at least sqrt(lambda0) + 1 = {:.3}",
            (lambda0 as f64).sqrt() + 1.0
        )));
    }
    let dimension = (2 * cutoff as usize + 1)
        .checked_pow(basis.dim() as u32)
        .unwrap_or(usize::MAX);
    if dimension > MAX_RESOLVENT_MODES {
        return Err(Error::ResourceLimit {
            dimension,
            cap: MAX_RESOLVENT_MODES,
        });
    }
    Ok(())
}

/// Cauchy–Schwarz bound on `Σ_{‖m‖∞ > R} g(m)² / |λ0 - |m|²|` for a unit branch.
fn resolvent_tail_bound(spec: &PotentialSpec, basis: &EigenspaceBasis, cutoff: u32) -> Option<f64> {
    let alpha_min = spec.min_alpha();
    if alpha_min <= 0.0 {
        return None;
    }
    let n = basis.dim() as i32;
    let r = cutoff as f64;
    let lambda0 = basis.lambda0() as f64;
    let denominator = (r + 1.0) * (r + 1.0) - lambda0;
    // ‖m - k‖∞ ≥ R + 1 - √λ0 for every m outside the box
    let start = ((r + 1.0 - lambda0.sqrt()).ceil()).max(1.0) as i64;
    let mut shells = 0.0;
    let mut s = start;
    loop {
        let sf = s as f64;
        let count = (2.0 * sf + 1.0).powi(n) - (2.0 * sf - 1.0).powi(n);
        let term = count * (-2.0 * alpha_min * sf * sf).exp();
        shells += term;
        if term <= shells * f64::EPSILON || term == 0.0 {
            break;
        }
        s += 1;
    }
    Some(basis.multiplicity() as f64 * shells / denominator)
}

fn validate_branches(basis: &EigenspaceBasis, branches: &[Vec<f64>]) -> Result<()> {
    if branches.is_empty() {
        return Err(invalid("at least one branch vector is required"));
    }
    for (i, b) in branches.iter().enumerate() {
        if b.len() != basis.multiplicity() {
            return Err(invalid(format!(
                "branch {i} has {} coefficients, eigenspace has {}",
                b.len(),
                basis.multiplicity()
            )));
        }
        let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!(
                "branch {i} is not normalized (norm {norm})"
            )));
        }
    }
    Ok(())
}

/// Second-order corrections `λ_i^{(2)}` for the supplied branch vectors.
///
/// Branches must carry pairwise distinct first-order values `aᵀ A a`; a pair
/// closer than `gap_tolerance` is reported as [`Error::DegenerateBranch`].
pub fn second_order_corrections(
    spec: &PotentialSpec,
    basis: &EigenspaceBasis,
    branches: &[Vec<f64>],
    cutoff: u32,
    gap_tolerance: f64,
) -> Result<SecondOrder> {
    let matrix = assemble_first_order(spec, basis)?;
    check_cutoff(basis, cutoff)?;
    validate_branches(basis, branches)?;

    let first: Vec<f64> = branches
        .iter()
        .map(|a| rayleigh_quotient(&matrix.entries, a))
        .collect();
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.sort_by(|&i, &j| first[i].total_cmp(&first[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| first[i]).collect();
    let summary = classify(&sorted, gap_tolerance);
    if let Some(c) = summary.clusters.iter().find(|c| c.len() > 1) {
        return Err(Error::DegenerateBranch {
            cluster: c.iter().map(|&s| order[s]).collect(),
            tolerance: gap_tolerance,
        });
    }

    let resolvent = Resolvent::new(spec, basis, branches, cutoff);
    Ok(SecondOrder {
        cutoff,
        values: (0..branches.len())
            .map(|i| resolvent.second_order(i))
            .collect(),
        tail_bound: resolvent_tail_bound(spec, basis, cutoff),
    })
}

/// `aᵀ A a`.
pub fn rayleigh_quotient(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += v[i] * a[(i, j)] * v[j];
        }
    }
    acc
}

/// First-order eigenvector corrections
/// `y_i^{(1)} = ŷ_i + Σ_j β_j^{(i)} y_j` for a fully split eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorCorrection {
    pub cutoff: u32,
    /// Modes outside the eigenspace within the cutoff box, lexicographic.
    pub modes: Vec<LatticeVector>,
    /// `out_of_space[(r, i)]` = coefficient of `e_{modes[r]}` in `ŷ_i`.
    pub out_of_space: DMatrix<f64>,
    /// `beta[(j, i)] = β_{j,1}^{(i)}`; zero diagonal.
    pub beta: DMatrix<f64>,
    /// `λ_i^{(2)} = ⟨y_i, V ŷ_i⟩`, a by-product of the same sums.
    pub second_order: Vec<f64>,
}

pub fn eigenvector_correction_coefficients(
    spec: &PotentialSpec,
    report: &SplittingReport,
    cutoff: u32,
) -> Result<EigenvectorCorrection> {
    let basis = report.basis();
    check_spec_dim(spec, basis.dim())?;
    check_cutoff(basis, cutoff)?;
    if let Some(c) = report.clusters().iter().find(|c| c.len() > 1) {
        return Err(Error::DegenerateBranch {
            cluster: c.clone(),
            tolerance: report.summary.gap_tolerance,
        });
    }
    let branches = report.branches();
    let resolvent = Resolvent::new(spec, basis, &branches, cutoff);
    let m = branches.len();
    let lam = &report.corrections;
    let beta = DMatrix::from_fn(m, m, |j, i| {
        if i == j {
            0.0
        } else {
            resolvent.cross(j, i) / (lam[i] - lam[j])
        }
    });
    let out_of_space = DMatrix::from_fn(resolvent.modes.len(), m, |r, i| {
        resolvent.couplings[(r, i)] / resolvent.denominators[r]
    });
    Ok(EigenvectorCorrection {
        cutoff,
        second_order: (0..m).map(|i| resolvent.second_order(i)).collect(),
        modes: resolvent.modes,
        out_of_space,
        beta,
    })
}

/// Largest off-diagonal magnitude of `QᵀAQ` relative to `max|A|`.
pub fn offdiagonal_after_rotation(a: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let d = q.transpose() * a * q;
    let mut worst = 0.0f64;
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            if i != j {
                worst = worst.max(d[(i, j)].abs());
            }
        }
    }
    worst / max_abs(a).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> PotentialSpec {
        PotentialSpec::new(vec![1.0]).unwrap()
    }

    #[test]
    fn circle_lambda_one_matrix() {
        let basis = lattice::eigenspace(1, 1).unwrap();
        let pm = assemble_first_order(&s1(), &basis).unwrap();
        let e4 = (-4.0f64).exp();
        assert_eq!(pm.rows(), vec![vec![0.0, e4], vec![e4, 0.0]]);
    }

    #[test]
    fn two_torus_lambda_one_pattern() {
        let spec = PotentialSpec::new(vec![1.0, 2.0])
            .unwrap()
            .with_subtract_constant(false);
        let pm = assemble_first_order(&spec, &lattice::eigenspace(1, 2).unwrap()).unwrap();
        let e = |p: f64| (-p).exp();
        let expected = [
            [1.0, e(3.0), e(3.0), e(4.0)],
            [e(3.0), 1.0, e(8.0), e(3.0)],
            [e(3.0), e(8.0), 1.0, e(3.0)],
            [e(4.0), e(3.0), e(3.0), 1.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(pm.entries[(i, j)], v);
            }
        }
    }

    #[test]
    fn simple_eigenvalue_gives_one_by_one() {
        let spec = PotentialSpec::new(vec![0.3, 0.7])
            .unwrap()
            .with_subtract_constant(false);
        let report = first_order_corrections(&spec, 0, DEFAULT_GAP_TOLERANCE).unwrap();
        assert_eq!(report.corrections, vec![1.0]);
        assert_eq!(report.verdict(), Verdict::FullySplit);
        assert_eq!(report.min_gap(), None);
    }

    #[test]
    fn dimension_mismatch_and_empty() {
        let basis = lattice::eigenspace(1, 2).unwrap();
        assert!(matches!(
            assemble_first_order(&s1(), &basis),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            first_order_corrections(&s1(), 2, DEFAULT_GAP_TOLERANCE),
            Err(Error::EmptyEigenspace { lambda0: 2, n: 1 })
        ));
    }

    #[test]
    fn classify_clusters() {
        let s = classify(&[0.0, 1e-12, 2e-12, 1.0, 2.0], 1e-9);
        assert_eq!(s.verdict, Verdict::PartiallySplit);
        assert_eq!(s.clusters, vec![vec![0, 1, 2], vec![3], vec![4]]);
        let s = classify(&[1.0, 1.0, 1.0], 1e-9);
        assert_eq!(s.verdict, Verdict::Unsplit);
        assert_eq!(s.min_gap, Some(0.0));
        let s = classify(&[-1.0, 1.0], 1e-9);
        assert_eq!(s.verdict, Verdict::FullySplit);
        assert_eq!(s.min_gap, Some(2.0));
        // a chain of small gaps is one cluster even when its ends are far apart
        let s = classify(&[0.0, 0.6, 1.2], 0.7);
        assert_eq!(s.clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn second_order_ground_state_is_non_positive() {
        for alpha in [0.2, 1.0, 3.0] {
            let spec = PotentialSpec::new(vec![alpha, 2.0 * alpha]).unwrap();
            let basis = lattice::eigenspace(0, 2).unwrap();
            let so =
                second_order_corrections(&spec, &basis, &[vec![1.0]], 8, DEFAULT_GAP_TOLERANCE)
                    .unwrap();
            assert!(so.values[0] <= 0.0);
            assert!(so.tail_bound.unwrap() >= 0.0);
        }
    }

    #[test]
    fn second_order_vanishes_without_coupling() {
        let spec = PotentialSpec::new(vec![800.0]).unwrap();
        let basis = lattice::eigenspace(1, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // branches are not split either; pass a single one
        let so = second_order_corrections(&spec, &basis, &[vec![h, h]], 10, DEFAULT_GAP_TOLERANCE)
            .unwrap();
        assert_eq!(so.values, vec![0.0]);
    }

    #[test]
    fn degenerate_branches_are_rejected() {
        let spec = PotentialSpec::new(vec![800.0]).unwrap();
        let basis = lattice::eigenspace(1, 1).unwrap();
        let err = second_order_corrections(
            &spec,
            &basis,
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            10,
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::DegenerateBranch { ref cluster, .. } if cluster == &vec![0, 1])
        );
    }

    #[test]
    fn cutoff_must_reach_beyond_the_shell() {
        let basis = lattice::eigenspace(25, 2).unwrap();
        let spec = PotentialSpec::new(vec![1.0, 2.0]).unwrap();
        let report = first_order_corrections(&spec, 25, DEFAULT_GAP_TOLERANCE).unwrap();
        assert!(second_order_corrections(&spec, &basis, &[report.branch(0)], 5, 1e-9).is_err());
        assert!(eigenvector_correction_coefficients(&spec, &report, 5).is_err());
        assert_eq!(default_resolvent_cutoff(25), 15);
        assert_eq!(default_resolvent_cutoff(1), 8);
    }

    #[test]
    fn beta_requires_full_splitting() {
        let spec = PotentialSpec::new(vec![1.0, 2.0, 0.0, 0.0])
            .unwrap()
            .with_subtract_constant(false);
        let report = first_order_corrections(&spec, 1, DEFAULT_GAP_TOLERANCE).unwrap();
        assert_eq!(report.verdict(), Verdict::PartiallySplit);
        assert!(matches!(
            eigenvector_correction_coefficients(&spec, &report, 3),
            Err(Error::DegenerateBranch { .. })
        ));
    }

    #[test]
    fn beta_is_zero_between_decoupled_parity_sectors() {
        // on S¹ the two branches are cos and sin; V is even, so they never mix
        let report = first_order_corrections(&s1(), 1, DEFAULT_GAP_TOLERANCE).unwrap();
        let corr = eigenvector_correction_coefficients(&s1(), &report, 10).unwrap();
        assert_eq!(corr.beta[(0, 0)], 0.0);
        assert_eq!(corr.beta[(1, 1)], 0.0);
        assert!(corr.beta[(0, 1)].abs() < 1e-14);
        assert!(corr.beta[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn tail_bound_decays_with_cutoff() {
        let spec = PotentialSpec::new(vec![1.0]).unwrap();
        let basis = lattice::eigenspace(1, 1).unwrap();
        let a = resolvent_tail_bound(&spec, &basis, 3).unwrap();
        let b = resolvent_tail_bound(&spec, &basis, 6).unwrap();
        assert!(b < a * 1e-10);
        let formal = PotentialSpec::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            resolvent_tail_bound(&formal, &lattice::eigenspace(1, 2).unwrap(), 4),
            None
        );
    }
}
