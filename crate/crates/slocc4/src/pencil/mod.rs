//! Canonical forms of matrix pairs under left/right multiplication by
//! invertible operators: Jordan reduction for the square regular case and
//! the full Kronecker form with singular blocks.

pub mod jordan;
pub mod kcf;

pub use jordan::{jordan_form, JordanBlock};
pub use kcf::{kcf, kcf_of_matrices, PencilBlock, PencilCanon};

use crate::exact::{ExactMatrix, Gaussian};

/// Identity of size n with `sub` written at diagonal offset `off`.
pub(crate) fn embed_at(n: usize, off: usize, sub: &ExactMatrix) -> ExactMatrix {
    debug_assert_eq!(sub.rows, sub.cols);
    debug_assert!(off + sub.rows <= n);
    let mut m = ExactMatrix::identity(n);
    for r in 0..sub.rows {
        for c in 0..sub.cols {
            *m.at_mut(off + r, off + c) = sub.at(r, c).clone();
        }
    }
    m
}

pub(crate) fn from_columns(n: usize, cols: &[ExactMatrix]) -> ExactMatrix {
    let mut m = ExactMatrix::zeros(n, cols.len());
    for (c, v) in cols.iter().enumerate() {
        debug_assert_eq!((v.rows, v.cols), (n, 1));
        for r in 0..n {
            *m.at_mut(r, c) = v.at(r, 0).clone();
        }
    }
    m
}

/// Jordan block J_n(lambda): lambda on the diagonal, 1 on the superdiagonal.
pub(crate) fn jordan_matrix(lambda: &Gaussian, n: usize) -> ExactMatrix {
    let mut m = ExactMatrix::zeros(n, n);
    for k in 0..n {
        *m.at_mut(k, k) = lambda.clone();
        if k + 1 < n {
            *m.at_mut(k, k + 1) = Gaussian::one();
        }
    }
    m
}
