//! Integer frequency lattice `Zⁿ` and the eigenspaces of Δ on the flat torus.
//!
//! The Laplacian on `Tⁿ = (R / 2πZ)ⁿ` is diagonal in the Fourier basis
//! `e_k(x) = (2π)^{-n/2} exp(i k·x)` with eigenvalue `|k|²`. The eigenspace
//! for `λ` is therefore spanned by every `k ∈ Zⁿ` with `Σ k_j² = λ`, and its
//! dimension is the representation number `r_n(λ)`.
//!
//! Two counting conventions appear side by side:
//!
//! * [`multiplicity`] counts signed, ordered tuples (the eigenspace dimension);
//! * [`representations`] lists canonical tuples `0 ≤ a_1 ≤ … ≤ a_n`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIMENSION: usize = 8;

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(invalid(format!(
            "dimension n = {n} is outside the supported range [1, {MAX_DIMENSION}]"
        )));
    }
    Ok(())
}

/// Integer square root, `floor(sqrt(v))`.
pub(crate) fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// A Fourier frequency `k ∈ Zⁿ`. Ordered lexicographically on coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        check_dimension(coords.len())?;
        Ok(Self(coords))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn squared_norm(&self) -> u64 {
        squared_norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `max_j |k_j|`.
    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

pub(crate) fn squared_norm(coords: &[i64]) -> u64 {
    coords.iter().map(|&c| (c * c) as u64).sum()
}

impl PartialOrd for LatticeVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticeVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl Neg for &LatticeVector {
    type Output = LatticeVector;

    fn neg(self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|c| -c).collect())
    }
}

impl Sub for &LatticeVector {
    type Output = LatticeVector;

    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "lattice vectors of different dimension"
        );
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// All frequencies of one eigenvalue, in ascending lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenspaceBasis {
    lambda0: u64,
    n: usize,
    frequencies: Vec<LatticeVector>,
}

impl EigenspaceBasis {
    pub fn lambda0(&self) -> u64 {
        self.lambda0
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn frequencies(&self) -> &[LatticeVector] {
        &self.frequencies
    }

    pub fn multiplicity(&self) -> usize {
        self.frequencies.len()
    }

    /// Index permutation `P` with `frequencies[P[i]] = -frequencies[i]`.
    pub fn negation_permutation(&self) -> Vec<usize> {
        self.frequencies
            .iter()
            .map(|k| {
                let neg = -k;
                self.frequencies
                    .iter()
                    .position(|v| v == &neg)
                    .expect("eigenspace is closed under negation")
            })
            .collect()
    }

    /// Same eigenspace with its frequencies listed in a caller-chosen order.
    ///
    /// `order` must be a permutation of `0..multiplicity`. Canonical order is
    /// not required by [`crate::perturbation::assemble_first_order`], which
    /// makes this useful for basis-invariance checks.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let m = self.multiplicity();
        let mut seen = vec![false; m];
        if order.len() != m {
            return Err(invalid("permutation length does not match multiplicity"));
        }
        for &i in order {
            if i >= m || seen[i] {
                return Err(invalid("not a permutation of the eigenspace indices"));
            }
            seen[i] = true;
        }
        Ok(Self {
            lambda0: self.lambda0,
            n: self.n,
            frequencies: order.iter().map(|&i| self.frequencies[i].clone()).collect(),
        })
    }
}

/// Number of `k ∈ Zⁿ` (signed, ordered) with `Σ k_j² = lambda0`.
pub fn multiplicity(lambda0: u64, n: usize) -> Result<u64> {
    check_dimension(n)?;
    Ok(count_signed(lambda0, n))
}

fn count_signed(remaining: u64, coords_left: usize) -> u64 {
    if coords_left == 1 {
        let r = isqrt(remaining);
        return match (r * r == remaining, remaining) {
            (false, _) => 0,
            (true, 0) => 1,
            (true, _) => 2,
        };
    }
    let bound = isqrt(remaining);
    let mut total = count_signed(remaining, coords_left - 1);
    for a in 1..=bound {
        total += 2 * count_signed(remaining - a * a, coords_left - 1);
    }
    total
}

/// Canonical tuples `0 ≤ a_1 ≤ … ≤ a_n` with `Σ a_j² = lambda0`, sorted
/// lexicographically.
pub fn representations(lambda0: u64, n: usize) -> Result<Vec<Vec<u64>>> {
    check_dimension(n)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    descend_canonical(lambda0, n, 0, &mut current, &mut out);
    Ok(out)
}

fn descend_canonical(
    remaining: u64,
    coords_left: usize,
    floor: u64,
    current: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    if coords_left == 0 {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    // every later coordinate is at least `a`, so coords_left * a² ≤ remaining
    let mut a = floor;
    while (coords_left as u64) * a * a <= remaining {
        current.push(a);
        descend_canonical(remaining - a * a, coords_left - 1, a, current, out);
        current.pop();
        a += 1;
    }
}

/// The eigenspace of Δ on `Tⁿ` for `lambda0`, in canonical order.
pub fn eigenspace(lambda0: u64, n: usize) -> Result<EigenspaceBasis> {
    check_dimension(n)?;
    let mut frequencies = Vec::new();
    let mut current = Vec::with_capacity(n);
    descend_signed(lambda0, n, &mut current, &mut frequencies);
    if frequencies.is_empty() {
        return Err(Error::EmptyEigenspace { lambda0, n });
    }
    Ok(EigenspaceBasis {
        lambda0,
        n,
        frequencies,
    })
}

// Ascending iteration per coordinate yields lexicographic order directly.
fn descend_signed(
    remaining: u64,
    coords_left: usize,
    current: &mut Vec<i64>,
    out: &mut Vec<LatticeVector>,
) {
    if coords_left == 1 {
        let r = isqrt(remaining);
        if r * r == remaining {
            let r = r as i64;
            let candidates: &[i64] = if r == 0 { &[0] } else { &[-r, r] };
            for &c in candidates {
                let mut v = current.clone();
                v.push(c);
                out.push(LatticeVector(v));
            }
        }
        return;
    }
    let bound = isqrt(remaining) as i64;
    for a in -bound..=bound {
        current.push(a);
        descend_signed(remaining - (a * a) as u64, coords_left - 1, current, out);
        current.pop();
    }
}

/// Every eigenvalue `λ ≤ lambda_max` of Δ on `Tⁿ` with its multiplicity.
pub fn spectrum_up_to(lambda_max: u64, n: usize) -> Result<Vec<(u64, u64)>> {
    check_dimension(n)?;
    let len = usize::try_from(lambda_max)
        .ok()
        .and_then(|l| l.checked_add(1))
        .ok_or_else(|| invalid("lambda_max too large"))?;
    // r_1 table, then convolve with the one-dimensional counts n-1 times
    let mut one_dim = vec![0u64; len];
    let mut a = 0usize;
    while a * a < len {
        one_dim[a * a] += if a == 0 { 1 } else { 2 };
        a += 1;
    }
    let mut counts = one_dim.clone();
    for _ in 1..n {
        let mut next = vec![0u64; len];
        for (lam, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (sq, &w) in one_dim.iter().enumerate().take(len - lam) {
                if w != 0 {
                    next[lam + sq] += c * w;
                }
            }
        }
        counts = next;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, m)| m > 0)
        .map(|(lam, m)| (lam as u64, m))
        .collect())
}

/// All `m ∈ Zⁿ` with `max_j |m_j| ≤ cutoff`, in lexicographic order.
pub fn box_modes(n: usize, cutoff: u32) -> Vec<LatticeVector> {
    let side = 2 * cutoff as usize + 1;
    let total = side.pow(n as u32);
    let r = cutoff as i64;
    (0..total)
        .map(|mut idx| {
            let mut coords = vec![0i64; n];
            for slot in coords.iter_mut().rev() {
                *slot = (idx % side) as i64 - r;
                idx /= side;
            }
            LatticeVector(coords)
        })
        .collect()
}
