//! Small dense kernels shared by every engine.
//!
//! Vectors are plain `f64` slices: likelihood vectors (λ, π) are nonnegative
//! and unnormalized, belief vectors sum to one. Matrices are row-major and
//! value-semantic; an engine that changes a matrix replaces it wholesale.
//!
//! [`EdgeMatrix`] abstracts over how an edge's conditional matrix is stored so
//! that the same contraction machinery runs on dense `k×k` matrices and on the
//! factored join-tree form.

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vectors and derived matrices whose largest entry falls below this value
/// are rescaled so that their largest entry is 1.
pub const UNDERFLOW_FLOOR: f64 = 1e-100;

/// Row tolerance for stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension { expected: cols, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    /// True when every entry lies in [0,1] and every row sums to 1 within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| (0.0..=1.0 + tol).contains(&v))
            && self.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Scales the matrix so its largest entry is 1 when that entry has
    /// dropped below [`UNDERFLOW_FLOOR`]. Zero matrices are left alone.
    pub fn rescale_if_tiny(&mut self) {
        let max = self.max_entry();
        if max > 0.0 && max < UNDERFLOW_FLOOR {
            for v in &mut self.data {
                *v /= max;
            }
        }
    }
}

/// Component-wise product `u ⊛ v`.
pub fn hadamard(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_len(u.len(), v.len())?;
    Ok(u.iter().zip(v).map(|(a, b)| a * b).collect())
}

/// `m · v`, with `result[x] = Σ_y m[x][y]·v[y]`.
pub fn apply(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len(m.cols, v.len())?;
    Ok(apply_unchecked(m, v))
}

/// `mᵀ · v` without materializing the transpose.
pub fn apply_transpose(m: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len(m.rows, v.len())?;
    Ok(apply_transpose_unchecked(m, v))
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_len(a.cols, b.rows)?;
    Ok(matmul_unchecked(a, b))
}

pub fn diag(v: &[f64]) -> Matrix {
    let n = v.len();
    let mut m = Matrix::zeros(n, n);
    for (i, &x) in v.iter().enumerate() {
        m.data[i * n + i] = x;
    }
    m
}

/// `m · diag(v)`, i.e. column `j` scaled by `v[j]`.
pub fn scale_columns(m: &Matrix, v: &[f64]) -> Result<Matrix> {
    check_len(m.cols, v.len())?;
    Ok(scale_columns_unchecked(m, v))
}

/// Divides by the sum. A zero (or non-finite) sum means the evidence has zero
/// joint probability.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::InconsistentEvidence { node: None });
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

/// In-place guard: rescales to max entry 1 when the max drops below
/// [`UNDERFLOW_FLOOR`]. Beliefs are invariant under this scaling.
pub fn rescale_if_tiny(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, &x| m.max(x));
    if max > 0.0 && max < UNDERFLOW_FLOOR {
        for x in v.iter_mut() {
            *x /= max;
        }
    }
}

pub fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

pub fn indicator(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Index of the largest entry; the first one wins on exact ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

pub(crate) fn apply_unchecked(m: &Matrix, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.cols, v.len());
    (0..m.rows)
        .map(|r| m.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub(crate) fn apply_transpose_unchecked(m: &Matrix, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.rows, v.len());
    let mut out = vec![0.0; m.cols];
    for (r, &w) in v.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(m.row(r)) {
            *o += a * w;
        }
    }
    out
}

pub(crate) fn matmul_unchecked(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, b.rows);
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (t, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in orow.iter_mut().zip(b.row(t)) {
                *o += aik * bkj;
            }
        }
    }
    out
}

pub(crate) fn scale_columns_unchecked(m: &Matrix, v: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..m.rows {
        for (x, s) in out.data[r * m.cols..(r + 1) * m.cols].iter_mut().zip(v) {
            *x *= s;
        }
    }
    out
}

/// Snapshot of instrumented operation counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Matrix-vector products.
    pub mat_vec: u64,
    /// Matrix-matrix products (diagonal scalings excluded).
    pub mat_mat: u64,
    /// Scalar multiply-adds across all kernels.
    pub flops: u64,
}

impl OpCounts {
    pub fn matrix_ops(&self) -> u64 {
        self.mat_vec + self.mat_mat
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mat_vec: self.mat_vec + rhs.mat_vec,
            mat_mat: self.mat_mat + rhs.mat_mat,
            flops: self.flops + rhs.flops,
        }
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mat_vec: self.mat_vec - rhs.mat_vec,
            mat_mat: self.mat_mat - rhs.mat_mat,
            flops: self.flops - rhs.flops,
        }
    }
}

/// Thread-safe operation counters. Queries take `&self`, so counting goes
/// through relaxed atomics.
#[derive(Debug, Default)]
pub struct OpCounter {
    mat_vec: AtomicU64,
    mat_mat: AtomicU64,
    flops: AtomicU64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mat_vec(&self, flops: usize) {
        self.mat_vec.fetch_add(1, Ordering::Relaxed);
        self.flops.fetch_add(flops as u64, Ordering::Relaxed);
    }

    #[inline]
    pub fn mat_mat(&self, flops: usize) {
        self.mat_mat.fetch_add(1, Ordering::Relaxed);
        self.flops.fetch_add(flops as u64, Ordering::Relaxed);
    }

    #[inline]
    pub fn flops(&self, flops: usize) {
        self.flops.fetch_add(flops as u64, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            mat_vec: self.mat_vec.load(Ordering::Relaxed),
            mat_mat: self.mat_mat.load(Ordering::Relaxed),
            flops: self.flops.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.mat_vec.store(0, Ordering::Relaxed);
        self.mat_mat.store(0, Ordering::Relaxed);
        self.flops.store(0, Ordering::Relaxed);
    }
}

impl Clone for OpCounter {
    fn clone(&self) -> Self {
        let s = self.snapshot();
        OpCounter {
            mat_vec: AtomicU64::new(s.mat_vec),
            mat_mat: AtomicU64::new(s.mat_mat),
            flops: AtomicU64::new(s.flops),
        }
    }
}

/// Storage for the conditional matrix on a tree edge.
///
/// `rake` evaluates `outer · diag(toward_leaf · λ(e)) · toward_rest`, the
/// matrix that replaces `outer` when leaf `e` and its parent are removed.
pub trait EdgeMatrix: Clone + fmt::Debug + Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn identity(n: usize) -> Self;
    /// Row-stochastic matrix for edges to padding leaves whose λ is always all-ones.
    fn vacuous(n: usize) -> Self;
    fn apply(&self, v: &[f64], ops: &OpCounter) -> Vec<f64>;
    fn apply_transpose(&self, v: &[f64], ops: &OpCounter) -> Vec<f64>;
    fn rake(outer: &Self, toward_leaf: &Self, toward_rest: &Self, leaf: &[f64], ops: &OpCounter) -> Self;
    fn to_dense(&self) -> Matrix;
    fn bit_eq(&self, other: &Self) -> bool;
}

impl EdgeMatrix for Matrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn identity(n: usize) -> Self {
        Matrix::identity(n)
    }

    fn vacuous(n: usize) -> Self {
        Matrix::identity(n)
    }

    fn apply(&self, v: &[f64], ops: &OpCounter) -> Vec<f64> {
        ops.mat_vec(self.rows * self.cols);
        apply_unchecked(self, v)
    }

    fn apply_transpose(&self, v: &[f64], ops: &OpCounter) -> Vec<f64> {
        ops.mat_vec(self.rows * self.cols);
        apply_transpose_unchecked(self, v)
    }

    fn rake(outer: &Self, toward_leaf: &Self, toward_rest: &Self, leaf: &[f64], ops: &OpCounter) -> Self {
        let t = toward_leaf.apply(leaf, ops);
        ops.flops(outer.rows * outer.cols);
        let scaled = scale_columns_unchecked(outer, &t);
        ops.mat_mat(scaled.rows * scaled.cols * toward_rest.cols);
        let mut out = matmul_unchecked(&scaled, toward_rest);
        out.rescale_if_tiny();
        out
    }

    fn to_dense(&self) -> Matrix {
        self.clone()
    }

    fn bit_eq(&self, other: &Self) -> bool {
        Matrix::bit_eq(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent scalar-loop oracles.
    fn oracle_apply(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for x in 0..2 {
            for y in 0..2 {
                out[x] += m[x][y] * v[y];
            }
        }
        out
    }

    fn oracle_matmul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for t in 0..2 {
                    out[i][j] += a[i][t] * b[t][j];
                }
            }
        }
        out
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard(&[1.0, 1.0], &[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        assert_eq!(hadamard(&[0.0, 0.0], &[0.3, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(hadamard(&[0.9, 0.2], &[1.0, 1.0]).unwrap(), vec![0.9, 0.2]);
        assert!(matches!(hadamard(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn apply_examples() {
        let raw = [[0.9, 0.1], [0.2, 0.8]];
        let expected = oracle_apply(&raw, [1.0, 0.0]);
        assert_eq!(expected, [0.9, 0.2]);
        let m = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_eq!(apply(&m, &[1.0, 0.0]).unwrap(), expected.to_vec());
        assert_eq!(apply(&Matrix::identity(3), &[0.1, 0.2, 0.3]).unwrap(), vec![0.1, 0.2, 0.3]);
        let ones_out = apply(&m, &[1.0, 1.0]).unwrap();
        assert!(ones_out.iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert!(apply(&m, &[1.0]).is_err());
    }

    #[test]
    fn matmul_examples() {
        let a = [[1.0, 2.0], [3.0, 4.0]];
        let b = [[0.0, 1.0], [1.0, 0.0]];
        let expected = oracle_matmul(&a, &b);
        assert_eq!(expected, [[2.0, 1.0], [4.0, 3.0]]);
        let ma = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mb = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let got = matmul(&ma, &mb).unwrap();
        assert_eq!(got.data(), &[2.0, 1.0, 4.0, 3.0]);
        assert_eq!(matmul(&ma, &Matrix::identity(2)).unwrap(), ma);
        assert_eq!(matmul(&Matrix::identity(2), &ma).unwrap(), ma);
        assert!(matmul(&ma, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn diag_examples() {
        assert_eq!(diag(&[1.0, 1.0]), Matrix::identity(2));
        assert_eq!(diag(&[0.0, 0.0]), Matrix::zeros(2, 2));
    }

    #[test]
    fn normalize_examples() {
        let b = normalize(&[0.45, 0.1]).unwrap();
        assert!((b[0] - 9.0 / 11.0).abs() < 1e-15);
        assert!((b[1] - 2.0 / 11.0).abs() < 1e-15);
        let u = normalize(&[1.0, 1.0, 1.0]).unwrap();
        assert!(u.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert!(normalize(&[0.0, 0.0]).unwrap_err().is_inconsistent());
        assert!(normalize(&[f64::NAN, 1.0]).unwrap_err().is_inconsistent());
    }

    #[test]
    fn rescale_guard() {
        let mut v = vec![1e-120, 5e-121];
        rescale_if_tiny(&mut v);
        assert_eq!(v, vec![1.0, 0.5]);
        let mut z = vec![0.0, 0.0];
        rescale_if_tiny(&mut z);
        assert_eq!(z, vec![0.0, 0.0]);
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..1.0f64, n)
    }

    fn mat_strategy(r: usize, c: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(0.0..1.0f64, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    }

    proptest! {
        #[test]
        fn hadamard_commutes_and_associates(u in vec_strategy(4), v in vec_strategy(4), w in vec_strategy(4)) {
            let uv = hadamard(&u, &v).unwrap();
            let vu = hadamard(&v, &u).unwrap();
            prop_assert_eq!(&uv, &vu);
            let left = hadamard(&uv, &w).unwrap();
            let right = hadamard(&u, &hadamard(&v, &w).unwrap()).unwrap();
            for (a, b) in left.iter().zip(&right) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn diag_lifts_hadamard(u in vec_strategy(3), v in vec_strategy(3), m in mat_strategy(3, 3)) {
            let dv = apply(&diag(&u), &v).unwrap();
            let h = hadamard(&u, &v).unwrap();
            for (a, b) in dv.iter().zip(&h) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let lhs = apply(&matmul(&diag(&u), &m).unwrap(), &v).unwrap();
            let rhs = hadamard(&u, &apply(&m, &v).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn matmul_associates(a in mat_strategy(3, 4), b in mat_strategy(4, 2), c in mat_strategy(2, 3)) {
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn normalize_sums_to_one(v in proptest::collection::vec(1e-3..1.0f64, 1..8)) {
            let b = normalize(&v).unwrap();
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn transpose_apply_matches(m in mat_strategy(3, 2), v in vec_strategy(3)) {
            let a = apply_transpose(&m, &v).unwrap();
            let b = apply(&m.transpose(), &v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
