//! Vectorization, block realignment, and the exact rank-one Kronecker
//! factorization test. A matrix is a Kronecker product U (x) V exactly when
//! its realignment has rank one, and in that case the factors fall out of a
//! single nonzero row, no singular values needed.

use crate::error::{Error, Result};
use crate::exact::ExactMatrix;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RealignmentShape {
    pub m1: usize,
    pub m2: usize,
    pub n1: usize,
    pub n2: usize,
}

impl RealignmentShape {
    pub fn square(m: usize, n: usize) -> Self {
        RealignmentShape { m1: m, m2: n, n1: m, n2: n }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KroneckerFactors {
    /// m1 x n1; its first nonzero entry (row-major) is normalized to 1.
    pub left: ExactMatrix,
    /// m2 x n2.
    pub right: ExactMatrix,
}

/// Column-stacking: (a_11, ..., a_m1, a_12, ..., a_mn)^T.
pub fn vec(m: &ExactMatrix) -> ExactMatrix {
    let mut out = ExactMatrix::zeros(m.rows * m.cols, 1);
    for c in 0..m.cols {
        for r in 0..m.rows {
            *out.at_mut(c * m.rows + r, 0) = m.at(r, c).clone();
        }
    }
    out
}

/// Row r of the result is vec(A_ij)^T where A is split into an m1 x n1 grid
/// of m2 x n2 blocks and (i, j) runs through the grid row by row.
pub fn realign(m: &ExactMatrix, shape: RealignmentShape) -> Result<ExactMatrix> {
    let RealignmentShape { m1, m2, n1, n2 } = shape;
    if m.rows != m1 * m2 || m.cols != n1 * n2 {
        return Err(Error::DimensionMismatch(format!(
            "realigning a {}x{} matrix as ({m1}*{m2})x({n1}*{n2})",
            m.rows, m.cols
        )));
    }
    let mut out = ExactMatrix::zeros(m1 * n1, m2 * n2);
    for i in 0..m1 {
        for j in 0..n1 {
            let row = i * n1 + j;
            for c in 0..n2 {
                for r in 0..m2 {
                    *out.at_mut(row, c * m2 + r) = m.at(i * m2 + r, j * n2 + c).clone();
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`realign`]: rebuilds the (m1*m2)x(n1*n2) matrix whose
/// realignment is `y`.
pub fn unrealign(y: &ExactMatrix, shape: RealignmentShape) -> Result<ExactMatrix> {
    let RealignmentShape { m1, m2, n1, n2 } = shape;
    if y.rows != m1 * n1 || y.cols != m2 * n2 {
        return Err(Error::DimensionMismatch(format!(
            "unrealigning a {}x{} matrix as ({m1}*{n1})x({m2}*{n2})",
            y.rows, y.cols
        )));
    }
    Ok(ExactMatrix::from_fn(m1 * m2, n1 * n2, |rr, cc| {
        let (i, r) = (rr / m2, rr % m2);
        let (j, c) = (cc / n2, cc % n2);
        y.at(i * n1 + j, c * m2 + r).clone()
    }))
}

fn unvec(col: &ExactMatrix, rows: usize, cols: usize) -> ExactMatrix {
    debug_assert_eq!(col.rows, rows * cols);
    ExactMatrix::from_fn(rows, cols, |r, c| col.at(c * rows + r, 0).clone())
}

/// Exact Kronecker split of an (M*N)x(M*N) matrix into M x M and N x N
/// factors. Absent when the realignment rank is not one. On success the
/// reconstruction is verified, and invertibility of the factors is checked
/// whenever the input is invertible.
pub fn rank_one_factor(m: &ExactMatrix, big: usize, small: usize) -> Option<KroneckerFactors> {
    let shape = RealignmentShape::square(big, small);
    let re = realign(m, shape).ok()?;
    if re.rank() != 1 {
        return None;
    }
    // First nonzero row r* = vec(V)^T for the normalized left factor, since
    // row r of the realignment is left[r] * vec(V)^T.
    let (rstar, kstar) = (0..re.rows)
        .find_map(|r| (0..re.cols).find(|&k| !re.at(r, k).is_zero()).map(|k| (r, k)))?;
    let pivot = re.at(rstar, kstar);
    let mut left = ExactMatrix::zeros(big, big);
    for r in 0..re.rows {
        *left.at_mut(r / big, r % big) = re.at(r, kstar) / pivot;
    }
    let vrow = re.submatrix(rstar, rstar + 1, 0, re.cols);
    let right = unvec(&vrow.transpose(), small, small);
    if left.kron(&right) != *m {
        return None;
    }
    if !m.det().is_zero() && (left.det().is_zero() || right.det().is_zero()) {
        return None;
    }
    Some(KroneckerFactors { left, right })
}
