//! Exact Jordan form over Q(i) via kernel filtrations of (M - lambda I).

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Gaussian};

use super::{from_columns, jordan_matrix};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct JordanBlock {
    pub eigenvalue: Gaussian,
    pub size: usize,
}

impl JordanBlock {
    pub fn new(eigenvalue: Gaussian, size: usize) -> Self {
        debug_assert!(size >= 1);
        JordanBlock { eigenvalue, size }
    }
}

/// Canonical order: eigenvalue ascending in the (re, im) lexicographic
/// order, then size descending.
pub fn block_order(a: &JordanBlock, b: &JordanBlock) -> Ordering {
    a.eigenvalue
        .cmp(&b.eigenvalue)
        .then(b.size.cmp(&a.size))
}

pub fn jordan_blocks_matrix(blocks: &[JordanBlock]) -> ExactMatrix {
    let n: usize = blocks.iter().map(|b| b.size).sum();
    let mut j = ExactMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let blk = jordan_matrix(&b.eigenvalue, b.size);
        for r in 0..b.size {
            for c in 0..b.size {
                *j.at_mut(off + r, off + c) = blk.at(r, c).clone();
            }
        }
        off += b.size;
    }
    j
}

/// Columns of `cands` that are independent of the span of `base`; appends
/// accepted columns to `base` as it goes.
fn independent_extension(n: usize, base: &mut Vec<ExactMatrix>, cands: &ExactMatrix) -> Vec<ExactMatrix> {
    let mut accepted = Vec::new();
    for c in 0..cands.cols {
        let v = cands.submatrix(0, n, c, c + 1);
        let mut trial = base.clone();
        trial.push(v.clone());
        if from_columns(n, &trial).rank() == trial.len() {
            base.push(v.clone());
            accepted.push(v);
        }
    }
    accepted
}

/// Exact Jordan form: returns blocks in canonical order and an invertible
/// similarity S with S^-1 * m * S block-diagonal Jordan. Errors with
/// IrreducibleFactor when the characteristic polynomial does not split.
pub fn jordan_form(m: &ExactMatrix) -> Result<(Vec<JordanBlock>, ExactMatrix)> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch(format!(
            "jordan form needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if n == 0 {
        return Ok((vec![], ExactMatrix::identity(0)));
    }
    let roots = m.char_poly().factor_linear()?;

    // Chains per eigenvalue: (eigenvalue, vectors from eigenvector up).
    let mut chains: Vec<(Gaussian, Vec<ExactMatrix>)> = Vec::new();
    for (lambda, alg_mult) in &roots {
        let mut shifted = m.clone();
        for d in 0..n {
            *shifted.at_mut(d, d) -= lambda;
        }
        // Kernel filtration of powers until the algebraic multiplicity fills.
        let mut powers = vec![ExactMatrix::identity(n)];
        let mut kernels: Vec<ExactMatrix> = Vec::new();
        loop {
            let next = powers.last().unwrap().matmul(&shifted);
            let ker = next.nullspace();
            let dim = ker.cols;
            powers.push(next);
            kernels.push(ker);
            if dim == *alg_mult {
                break;
            }
            if powers.len() > n + 1 {
                return Err(Error::Internal("kernel filtration failed to saturate".into()));
            }
        }
        let s = kernels.len();
        // Walk heights top-down, starting new chains where the filtration
        // jumps are not yet covered by existing chains.
        let mut lambda_chains: Vec<Vec<ExactMatrix>> = Vec::new();
        for j in (1..=s).rev() {
            let mut base: Vec<ExactMatrix> = Vec::new();
            if j >= 2 {
                let lower = &kernels[j - 2];
                for c in 0..lower.cols {
                    base.push(lower.submatrix(0, n, c, c + 1));
                }
            }
            for chain in &lambda_chains {
                if chain.len() >= j {
                    base.push(chain[j - 1].clone());
                }
            }
            let tops = independent_extension(n, &mut base, &kernels[j - 1]);
            for top in tops {
                let mut chain = vec![top];
                for _ in 1..j {
                    let prev = chain.last().unwrap();
                    chain.push(shifted.matmul(prev));
                }
                chain.reverse(); // eigenvector first
                lambda_chains.push(chain);
            }
        }
        let found: usize = lambda_chains.iter().map(|c| c.len()).sum();
        if found != *alg_mult {
            return Err(Error::Internal(format!(
                "jordan chains cover {found} of multiplicity {alg_mult}"
            )));
        }
        for chain in lambda_chains {
            chains.push((lambda.clone(), chain));
        }
    }

    let mut blocks: Vec<(JordanBlock, Vec<ExactMatrix>)> = chains
        .into_iter()
        .map(|(l, ch)| (JordanBlock::new(l, ch.len()), ch))
        .collect();
    blocks.sort_by(|a, b| block_order(&a.0, &b.0));

    let mut cols = Vec::with_capacity(n);
    for (_, chain) in &blocks {
        cols.extend(chain.iter().cloned());
    }
    let s_mat = from_columns(n, &cols);
    let block_list: Vec<JordanBlock> = blocks.into_iter().map(|(b, _)| b).collect();
    let j = jordan_blocks_matrix(&block_list);
    if s_mat.det().is_zero() || m.matmul(&s_mat) != s_mat.matmul(&j) {
        return Err(Error::Internal("jordan similarity failed verification".into()));
    }
    Ok((block_list, s_mat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    fn assert_jordan(m: &ExactMatrix, expect: &[(&str, usize)]) {
        let (blocks, s) = jordan_form(m).unwrap();
        let got: Vec<(String, usize)> =
            blocks.iter().map(|b| (b.eigenvalue.to_string(), b.size)).collect();
        let want: Vec<(String, usize)> =
            expect.iter().map(|(e, n)| (e.to_string(), *n)).collect();
        assert_eq!(got, want);
        let j = jordan_blocks_matrix(&blocks);
        assert_eq!(m.matmul(&s), s.matmul(&j));
        assert!(!s.det().is_zero());
    }

    #[test]
    fn diagonal_matrix() {
        let m = ExactMatrix::from_i64(&[&[2, 0, 0, 0], &[0, 3, 0, 0], &[0, 0, 5, 0], &[0, 0, 0, 0]]);
        assert_jordan(&m, &[("0", 1), ("2", 1), ("3", 1), ("5", 1)]);
    }

    #[test]
    fn nilpotent_block() {
        let m = ExactMatrix::from_i64(&[&[0, 1], &[0, 0]]);
        assert_jordan(&m, &[("0", 2)]);
    }

    #[test]
    fn mixed_sizes_recovered_under_conjugation() {
        // J = J_2(1) + J_1(1) + J_1(i), conjugated by a dense S0.
        let blocks = vec![
            JordanBlock::new(g("1"), 2),
            JordanBlock::new(g("1"), 1),
            JordanBlock::new(g("i"), 1),
        ];
        let j = jordan_blocks_matrix(&blocks);
        let s0 = ExactMatrix::from_i64(&[
            &[1, 2, 0, 1],
            &[0, 1, 1, 1],
            &[1, 0, 1, 0],
            &[2, 1, 0, 1],
        ]);
        let m = s0.matmul(&j).matmul(&s0.invert().unwrap());
        // (re, im) order puts i = (0, 1) before 1 = (1, 0).
        assert_jordan(&m, &[("i", 1), ("1", 2), ("1", 1)]);
    }

    #[test]
    fn gaussian_integer_spectrum() {
        let m = ExactMatrix::from_i64(&[&[0, -1], &[1, 0]]);
        assert_jordan(&m, &[("-i", 1), ("i", 1)]);
    }

    #[test]
    fn irreducible_spectrum_is_rejected() {
        let m = ExactMatrix::from_i64(&[&[0, 2], &[1, 0]]);
        match jordan_form(&m).unwrap_err() {
            Error::IrreducibleFactor { degree, .. } => assert_eq!(degree, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defective_rational_eigenvalue() {
        // (M - I/2)^2 = 0 with one 2-chain: J_2(1/2).
        let m = ExactMatrix::from_rows(vec![
            vec![g("1/2"), g("1")],
            vec![g("0"), g("1/2")],
        ])
        .unwrap();
        assert_jordan(&m, &[("1/2", 2)]);
    }
}
