//! Dense real symmetric eigensolver (cyclic Jacobi).
//!
//! Rotations are applied in a fixed row-cyclic order and a pair `(p, q)` is
//! skipped only once `|a_pq| ≤ ε·sqrt(|a_pp a_qq|)`. That threshold keeps
//! relative accuracy for off-diagonal entries many orders of magnitude below
//! the diagonal (the secular matrices carry entries down to `e^{-36}`).

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::tridiagonal;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Relative asymmetry accepted on input.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Above this order [`symmetric_eigenvalues`] switches from Jacobi to
/// Householder tridiagonalization + implicit QR.
pub const JACOBI_DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigendecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

impl Eigendecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_input(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(invalid(format!(
            "matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(invalid("matrix must be at least 1x1"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let limit = SYMMETRY_TOLERANCE * max_abs(a).max(1.0);
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let asym = (a[(i, j)] - a[(j, i)]).abs();
            if asym > limit {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    asymmetry: asym,
                });
            }
        }
    }
    Ok(())
}

/// Column-major working copy, symmetrized from the upper triangle.
fn working_copy(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            w[i + j * n] = if i <= j { a[(i, j)] } else { a[(j, i)] };
        }
    }
    w
}

fn jacobi(a: &mut [f64], n: usize, mut vectors: Option<&mut [f64]>) -> Result<()> {
    let floor = f64::MIN_POSITIVE / f64::EPSILON;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p + q * n];
                let app = a[p + p * n];
                let aqq = a[q + q * n];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r + p * n];
                    let arq = a[r + q * n];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r + p * n] = new_rp;
                    a[p + r * n] = new_rp;
                    a[r + q * n] = new_rq;
                    a[q + r * n] = new_rq;
                }
                a[p + p * n] = app - t * apq;
                a[q + q * n] = aqq + t * apq;
                a[p + q * n] = 0.0;
                a[q + p * n] = 0.0;

                if let Some(v) = vectors.as_deref_mut() {
                    let (head, tail) = v.split_at_mut(q * n);
                    let col_p = &mut head[p * n..(p + 1) * n];
                    let col_q = &mut tail[..n];
                    for (vp, vq) in col_p.iter_mut().zip(col_q.iter_mut()) {
                        let x = *vp;
                        let y = *vq;
                        *vp = c * x - s * y;
                        *vq = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    let off_norm = (0..n)
        .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
        .map(|(i, j)| a[i + j * n] * a[i + j * n])
        .sum::<f64>()
        .sqrt();
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_norm,
    })
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric
/// matrix.
///
/// Each eigenvector is signed so that its largest-magnitude component (first
/// one on ties) is positive. The result is checked against
/// `max|A q - μ q| ≤ tol·max(1, max|A|)` and `max|QᵀQ - I| ≤ tol`.
pub fn symmetric_eigen(a: &DMatrix<f64>, tol: f64) -> Result<Eigendecomposition> {
    check_input(a)?;
    let n = a.nrows();
    let mut work = working_copy(a);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i + i * n] = 1.0;
    }
    jacobi(&mut work, n, Some(&mut v))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[i + i * n].total_cmp(&work[j + j * n]));

    let values: Vec<f64> = order.iter().map(|&i| work[i + i * n]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let column = &v[src * n..(src + 1) * n];
        let peak = column.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = column
            .iter()
            .position(|x| x.abs() >= peak * (1.0 - 1e-10))
            .unwrap_or(0);
        let sign = if column[lead] < 0.0 { -1.0 } else { 1.0 };
        for (row, &x) in column.iter().enumerate() {
            vectors[(row, col)] = sign * x;
        }
    }

    let eig = Eigendecomposition { values, vectors };
    let (residual, orthogonality) = decomposition_errors(a, &eig);
    let scale = max_abs(a).max(1.0);
    if residual > tol * scale || orthogonality > tol {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: residual.max(orthogonality),
        });
    }
    Ok(eig)
}

/// Eigenvalues only, ascending. Jacobi up to [`JACOBI_DENSE_LIMIT`], nalgebra's
/// tridiagonal QR beyond it.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_input(a)?;
    let n = a.nrows();
    let mut values = if n <= JACOBI_DENSE_LIMIT {
        jacobi_values(a)?
    } else {
        symmetrized(a)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// The `count` eigenvalues nearest `target` (ties toward the smaller value),
/// ascending, to an absolute accuracy of order `eps·|μ|` rather than
/// `eps·max|A|` when their eigenvectors are concentrated on small diagonal
/// entries.
///
/// Above [`JACOBI_DENSE_LIMIT`] the matrix is reduced to tridiagonal form,
/// the candidates are bisected from Sturm counts, and each selected value is
/// replaced by the Rayleigh quotient `xᵀAx / xᵀx` of its eigenvector,
/// obtained by inverse iteration and back-transformed to the original basis.
pub fn symmetric_eigenvalues_near(a: &DMatrix<f64>, target: f64, count: usize) -> Result<Vec<f64>> {
    check_input(a)?;
    let n = a.nrows();
    if count > n {
        return Err(invalid(format!(
            "requested {count} eigenvalues of a {n}x{n} matrix"
        )));
    }
    if n <= JACOBI_DENSE_LIMIT {
        let mut values = jacobi_values(a)?;
        values.sort_by(f64::total_cmp);
        return Ok(nearest_sorted(&values, target, count));
    }
    let sym = symmetrized(a);
    let (q, d, e) = SymmetricTridiagonal::new(sym.clone()).unpack();
    let (d, e): (Vec<f64>, Vec<f64>) = (d.iter().copied().collect(), e.iter().copied().collect());
    // the nearest `count` lie within `count` positions of the crossing index
    let split = tridiagonal::count_below(&d, &e, target);
    let range = split.saturating_sub(count)..(split + count).min(n);
    let candidates = tridiagonal::eigenvalues(&d, &e, range);
    let mut values: Vec<f64> = nearest_sorted(&candidates, target, count)
        .into_iter()
        .map(|mu| {
            let y = DVector::from_vec(tridiagonal::inverse_iteration(&d, &e, mu));
            let x = &q * y;
            x.dot(&(&sym * &x)) / x.norm_squared()
        })
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `count` entries of ascending `values` nearest `target`, ascending.
fn nearest_sorted(values: &[f64], target: f64, count: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        (values[i] - target)
            .abs()
            .total_cmp(&(values[j] - target).abs())
            .then(i.cmp(&j))
    });
    idx.truncate(count);
    idx.sort_unstable();
    idx.into_iter().map(|i| values[i]).collect()
}

fn jacobi_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut work = working_copy(a);
    jacobi(&mut work, n, None)?;
    Ok((0..n).map(|i| work[i + i * n]).collect())
}

fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] })
}

/// `(max |A q_i - μ_i q_i|, max |QᵀQ - I|)`.
pub fn decomposition_errors(a: &DMatrix<f64>, eig: &Eigendecomposition) -> (f64, f64) {
    let q = &eig.vectors;
    let aq = a * q;
    let mut residual = 0.0f64;
    for (j, &mu) in eig.values.iter().enumerate() {
        for i in 0..q.nrows() {
            residual = residual.max((aq[(i, j)] - mu * q[(i, j)]).abs());
        }
    }
    let gram = q.transpose() * q;
    let mut orth = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((gram[(i, j)] - target).abs());
        }
    }
    (residual, orth)
}
