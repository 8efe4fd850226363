//! Symmetric tridiagonal helpers: Sturm-count bisection and inverse
//! iteration. `d` is the diagonal, `e[i]` couples rows `i` and `i + 1`.

/// Pivots smaller than this are replaced in Sturm counts.
fn pivot_floor(e: &[f64]) -> f64 {
    let emax = e.iter().fold(1.0f64, |m, x| m.max(x * x));
    f64::MIN_POSITIVE * emax
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64, floor: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
        }
        if q.abs() < floor {
            q = -floor;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues with ascending indices `range`, each bisected to working
/// precision.
pub(crate) fn eigenvalues(d: &[f64], e: &[f64], range: std::ops::Range<usize>) -> Vec<f64> {
    let (lo, hi) = gershgorin(d, e);
    let floor = pivot_floor(e);
    range
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(d, e, mid, floor) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Number of eigenvalues strictly below `x`.
pub(crate) fn count_below(d: &[f64], e: &[f64], x: f64) -> usize {
    sturm_count(d, e, x, pivot_floor(e))
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) * n as f64;
    (lo - pad, hi + pad)
}

/// Eigenvector of `T` for the eigenvalue approximation `mu`, unit length.
pub(crate) fn inverse_iteration(d: &[f64], e: &[f64], mu: f64) -> Vec<f64> {
    let n = d.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = d
        .iter()
        .chain(e)
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;

    // LU of T - mu I with partial pivoting (rows i and i+1 may swap)
    let mut diag: Vec<f64> = d.iter().map(|x| x - mu).collect();
    let mut upper: Vec<f64> = e.to_vec();
    let mut upper2 = vec![0.0; n.saturating_sub(2)];
    let mut lower: Vec<f64> = e.to_vec();
    let mut swapped = vec![false; n - 1];
    for i in 0..n - 1 {
        if diag[i].abs() >= lower[i].abs() {
            if diag[i] == 0.0 {
                diag[i] = tiny;
            }
            let fact = lower[i] / diag[i];
            lower[i] = fact;
            diag[i + 1] -= fact * upper[i];
        } else {
            let fact = diag[i] / lower[i];
            diag[i] = lower[i];
            lower[i] = fact;
            let temp = upper[i];
            upper[i] = diag[i + 1];
            diag[i + 1] = temp - fact * diag[i + 1];
            if i + 2 < n {
                upper2[i] = upper[i + 1];
                upper[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    for v in diag.iter_mut() {
        if v.abs() < tiny {
            *v = if *v < 0.0 { -tiny } else { tiny };
        }
    }

    let solve = |b: &mut [f64]| {
        for i in 0..n - 1 {
            if swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - lower[i] * b[i];
            } else {
                b[i + 1] -= lower[i] * b[i];
            }
        }
        b[n - 1] /= diag[n - 1];
        b[n - 2] = (b[n - 2] - upper[n - 2] * b[n - 1]) / diag[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - upper[i] * b[i + 1] - upper2[i] * b[i + 2]) / diag[i];
        }
    };

    // fixed, non-symmetric start so no eigenvector is missed by construction
    let mut y: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64) * 0.618_033_988_749_895).fract())
        .collect();
    for _ in 0..4 {
        solve(&mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
    }
    y
}
