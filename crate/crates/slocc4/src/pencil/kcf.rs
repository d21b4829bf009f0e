//! Kronecker canonical form of a matrix pair (A, B): the complete set of
//! strict-equivalence invariants (minimal indices and elementary divisors)
//! together with exact invertible witnesses P, Q such that P*A*Q and P*B*Q
//! are the canonical block-diagonal pair.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Gaussian};
use crate::state::MatrixPair;

use super::jordan::{jordan_form, JordanBlock};
use super::{embed_at, from_columns, jordan_matrix};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PencilBlock {
    /// (I_n, J_n(lambda)): generalized eigenvalue lambda.
    Finite(JordanBlock),
    /// (N_n, I_n): eigenvalue at infinity.
    Infinite(usize),
    /// L_eps of size eps x (eps+1); eps = 0 is a zero column.
    RightSingular(usize),
    /// Transposed L_eta of size (eta+1) x eta; eta = 0 is a zero row.
    LeftSingular(usize),
}

impl PencilBlock {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            PencilBlock::Finite(b) => (b.size, b.size),
            PencilBlock::Infinite(n) => (*n, *n),
            PencilBlock::RightSingular(e) => (*e, e + 1),
            PencilBlock::LeftSingular(e) => (e + 1, *e),
        }
    }
}

/// Left singular ascending, right singular ascending, infinite descending,
/// finite by (eigenvalue lex, size descending).
pub fn canonical_block_order(a: &PencilBlock, b: &PencilBlock) -> Ordering {
    use PencilBlock::*;
    let rank = |p: &PencilBlock| match p {
        LeftSingular(_) => 0,
        RightSingular(_) => 1,
        Infinite(_) => 2,
        Finite(_) => 3,
    };
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (LeftSingular(x), LeftSingular(y)) => x.cmp(y),
        (RightSingular(x), RightSingular(y)) => x.cmp(y),
        (Infinite(x), Infinite(y)) => y.cmp(x),
        (Finite(x), Finite(y)) => super::jordan::block_order(x, y),
        _ => Ordering::Equal,
    })
}

/// The deterministic block-diagonal layout of the given blocks.
pub fn build_canonical(blocks: &[PencilBlock]) -> (ExactMatrix, ExactMatrix) {
    let rows: usize = blocks.iter().map(|b| b.dims().0).sum();
    let cols: usize = blocks.iter().map(|b| b.dims().1).sum();
    let mut a = ExactMatrix::zeros(rows, cols);
    let mut b = ExactMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0usize, 0usize);
    for blk in blocks {
        match blk {
            PencilBlock::Finite(jb) => {
                let j = jordan_matrix(&jb.eigenvalue, jb.size);
                for k in 0..jb.size {
                    *a.at_mut(r0 + k, c0 + k) = Gaussian::one();
                    for c in 0..jb.size {
                        *b.at_mut(r0 + k, c0 + c) = j.at(k, c).clone();
                    }
                }
            }
            PencilBlock::Infinite(n) => {
                for k in 0..*n {
                    *b.at_mut(r0 + k, c0 + k) = Gaussian::one();
                    if k + 1 < *n {
                        *a.at_mut(r0 + k, c0 + k + 1) = Gaussian::one();
                    }
                }
            }
            PencilBlock::RightSingular(e) => {
                for k in 0..*e {
                    *a.at_mut(r0 + k, c0 + k) = Gaussian::one();
                    *b.at_mut(r0 + k, c0 + k + 1) = Gaussian::one();
                }
            }
            PencilBlock::LeftSingular(e) => {
                for k in 0..*e {
                    *a.at_mut(r0 + k, c0 + k) = Gaussian::one();
                    *b.at_mut(r0 + k + 1, c0 + k) = Gaussian::one();
                }
            }
        }
        r0 += blk.dims().0;
        c0 += blk.dims().1;
    }
    (a, b)
}

#[derive(Clone, Debug)]
pub struct PencilCanon {
    pub blocks: Vec<PencilBlock>,
    pub p_witness: ExactMatrix,
    pub q_witness: ExactMatrix,
    pub canon1: ExactMatrix,
    pub canon2: ExactMatrix,
}

pub fn kcf(pair: &MatrixPair) -> Result<PencilCanon> {
    kcf_of_matrices(&pair.gamma1, &pair.gamma2)
}

/// Smallest degree eps with a polynomial right kernel vector
/// v(x) = v_0 + ... + v_eps x^eps of A + xB, together with its chunks.
fn min_right_kernel(a: &ExactMatrix, b: &ExactMatrix) -> Option<(usize, Vec<ExactMatrix>)> {
    let (p, q) = (a.rows, a.cols);
    if q == 0 {
        return None;
    }
    for k in 0..q {
        // Block rows: A v_0 = 0; B v_j + A v_{j+1} = 0; B v_k = 0.
        let t = ExactMatrix::from_fn((k + 2) * p, (k + 1) * q, |r, c| {
            let (br, bc) = (r / p, c / q);
            if br == bc {
                a.at(r % p, c % q).clone()
            } else if br == bc + 1 {
                b.at(r % p, c % q).clone()
            } else {
                Gaussian::zero()
            }
        });
        let ns = t.nullspace();
        if ns.cols > 0 {
            let chunks = (0..=k).map(|j| ns.submatrix(j * q, (j + 1) * q, 0, 1)).collect();
            return Some((k, chunks));
        }
    }
    None
}

/// Extends the given independent columns to an invertible n x n matrix
/// using unit vectors.
fn complete_basis(n: usize, lead: &[ExactMatrix]) -> ExactMatrix {
    let mut cols: Vec<ExactMatrix> = lead.to_vec();
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = ExactMatrix::zeros(n, 1);
        *e.at_mut(k, 0) = Gaussian::one();
        let mut trial = cols.clone();
        trial.push(e.clone());
        if from_columns(n, &trial).rank() == trial.len() {
            cols.push(e);
        }
    }
    debug_assert_eq!(cols.len(), n);
    from_columns(n, &cols)
}

/// Strict equivalence peeling one L_eps block (eps >= 1) to the top-left:
/// returns (R, C) with R*(A,B)*C = (L_eps pair) + (rest pair).
fn peel_right_block(
    a: &ExactMatrix,
    b: &ExactMatrix,
    eps: usize,
    v: &[ExactMatrix],
) -> Result<(ExactMatrix, ExactMatrix)> {
    let (p, q) = (a.rows, a.cols);
    debug_assert_eq!(v.len(), eps + 1);
    // Structure relations of a minimal kernel polynomial.
    if !a.matmul(&v[0]).is_zero() || !b.matmul(&v[eps]).is_zero() {
        return Err(Error::Internal("kernel polynomial end relations violated".into()));
    }
    let w: Vec<ExactMatrix> = (1..=eps).map(|j| a.matmul(&v[j])).collect();
    for j in 1..=eps {
        if w[j - 1] != b.matmul(&v[j - 1]).neg() {
            return Err(Error::Internal("kernel polynomial chain relation violated".into()));
        }
    }
    if from_columns(q, v).rank() != eps + 1 || from_columns(p, &w).rank() != eps {
        return Err(Error::Internal("minimal kernel vectors are not independent".into()));
    }

    let s_col = complete_basis(q, v);
    let s_row = complete_basis(p, &w).invert()?;
    let a1 = s_row.matmul(a).matmul(&s_col);
    let b1 = s_row.matmul(b).matmul(&s_col);

    // Inside the block: reverse with alternating signs so the pair reads
    // ([I|0], [0|I]) exactly.
    let mut r_blk = ExactMatrix::zeros(eps, eps);
    for k in 0..eps {
        *r_blk.at_mut(k, eps - 1 - k) = Gaussian::from_i64(if k % 2 == 0 { 1 } else { -1 }, 0);
    }
    let mut c_blk = ExactMatrix::zeros(eps + 1, eps + 1);
    for j in 0..=eps {
        *c_blk.at_mut(eps - j, j) = Gaussian::from_i64(if j % 2 == 0 { 1 } else { -1 }, 0);
    }
    let r2 = embed_at(p, 0, &r_blk);
    let c2 = embed_at(q, 0, &c_blk);
    let a2 = r2.matmul(&a1).matmul(&c2);
    let b2 = r2.matmul(&b1).matmul(&c2);

    // Decouple: find X, Z with L_A X - Z A22 = A12 and L_B X - Z B22 = B12,
    // where L_A = [I|0], L_B = [0|I] act by row selection on X.
    let m = q - eps - 1;
    let kk = p - eps;
    let a12 = a2.submatrix(0, eps, eps + 1, q);
    let b12 = b2.submatrix(0, eps, eps + 1, q);
    let a22 = a2.submatrix(eps, p, eps + 1, q);
    let b22 = b2.submatrix(eps, p, eps + 1, q);
    let nx = (eps + 1) * m;
    let nz = eps * kk;
    let mut sys = ExactMatrix::zeros(2 * eps * m, nx + nz);
    let mut rhs = ExactMatrix::zeros(2 * eps * m, 1);
    let xi = |row: usize, col: usize| row * m + col; // vec(X) index
    let zi = |row: usize, col: usize| nx + row * kk + col;
    for r in 0..eps {
        for c in 0..m {
            // (L_A X)[r][c] = X[r][c]; (L_B X)[r][c] = X[r+1][c].
            let e1 = r * m + c;
            *sys.at_mut(e1, xi(r, c)) = Gaussian::one();
            for t in 0..kk {
                *sys.at_mut(e1, zi(r, t)) = -a22.at(t, c);
            }
            *rhs.at_mut(e1, 0) = a12.at(r, c).clone();
            let e2 = eps * m + r * m + c;
            *sys.at_mut(e2, xi(r + 1, c)) = Gaussian::one();
            for t in 0..kk {
                *sys.at_mut(e2, zi(r, t)) = -b22.at(t, c);
            }
            *rhs.at_mut(e2, 0) = b12.at(r, c).clone();
        }
    }
    let sol = sys
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("singular-block decoupling system unsolvable".into()))?;
    let mut r3 = ExactMatrix::identity(p);
    let mut c3 = ExactMatrix::identity(q);
    for r in 0..eps {
        for t in 0..kk {
            *r3.at_mut(r, eps + t) = sol.at(zi(r, t), 0).clone();
        }
    }
    for r in 0..=eps {
        for c in 0..m {
            *c3.at_mut(r, eps + 1 + c) = -sol.at(xi(r, c), 0);
        }
    }

    let r_full = r3.matmul(&r2).matmul(&s_row);
    let c_full = s_col.matmul(&c2).matmul(&c3);
    Ok((r_full, c_full))
}

/// Similarity sending a nilpotent g (index = size) to the shift block N.
fn nilpotent_chain(g: &ExactMatrix) -> Result<ExactMatrix> {
    let n = g.rows;
    if n == 0 {
        return Ok(ExactMatrix::identity(0));
    }
    let mut pow = ExactMatrix::identity(n);
    let mut powers = vec![pow.clone()];
    for _ in 0..n - 1 {
        pow = pow.matmul(g);
        powers.push(pow.clone());
    }
    for k in 0..n {
        let mut e = ExactMatrix::zeros(n, 1);
        *e.at_mut(k, 0) = Gaussian::one();
        if powers[n - 1].matmul(&e).is_zero() {
            continue;
        }
        let cols: Vec<ExactMatrix> = (0..n).rev().map(|j| powers[j].matmul(&e)).collect();
        let s = from_columns(n, &cols);
        if !s.det().is_zero() {
            return Ok(s);
        }
    }
    Err(Error::Internal("nilpotent block has no full chain".into()))
}

const COMBO_SCAN: [(i64, i64, i64, i64); 34] = [
    (1, 0, 0, 0),
    (0, 0, 1, 0),
    (1, 0, 1, 0),
    (1, 0, -1, 0),
    (1, 0, 0, 1),
    (1, 0, 0, -1),
    (1, 0, 2, 0),
    (2, 0, 1, 0),
    (1, 0, -2, 0),
    (2, 0, -1, 0),
    (1, 0, 1, 1),
    (1, 0, 1, -1),
    (1, 0, -1, 1),
    (1, 0, -1, -1),
    (1, 0, 0, 2),
    (1, 0, 0, -2),
    (1, 0, 3, 0),
    (3, 0, 1, 0),
    (1, 0, -3, 0),
    (3, 0, -1, 0),
    (1, 0, 2, 1),
    (1, 0, 2, -1),
    (1, 0, 1, 2),
    (1, 0, 1, -2),
    (1, 0, 3, 1),
    (1, 0, 1, 3),
    (1, 0, 4, 0),
    (1, 0, -4, 0),
    (1, 0, 4, 1),
    (1, 0, 1, 4),
    (1, 0, 5, 0),
    (2, 0, 3, 0),
    (3, 0, 2, 0),
    (1, 0, 5, 1),
];

/// Reduces a regular square pair: R*(A,B)*C is block diagonal with
/// (I, J(lambda)) and (N, I) blocks left in Jordan discovery order.
fn regular_reduce(
    a: &ExactMatrix,
    b: &ExactMatrix,
) -> Result<(Vec<PencilBlock>, ExactMatrix, ExactMatrix)> {
    let n = a.rows;
    if n == 0 {
        return Ok((vec![], ExactMatrix::identity(0), ExactMatrix::identity(0)));
    }
    // Scan small (a, b) until a*A + b*B is invertible; the list holds more
    // than n+1 distinct ratios, so a regular pencil must hit one.
    let mut found = None;
    for (are, aim, bre, bim) in COMBO_SCAN {
        let ca = Gaussian::from_i64(are, aim);
        let cb = Gaussian::from_i64(bre, bim);
        let g = a.scale(&ca).add(&b.scale(&cb));
        if !g.det().is_zero() {
            found = Some((ca, cb, g));
            break;
        }
    }
    let Some((ca, cb, g)) = found else {
        return Err(Error::Internal("no invertible combination in a regular pencil".into()));
    };
    // Companion direction (cc, cd) with ca*cd - cb*cc != 0.
    let (cc, cd) = if ca.is_zero() {
        (Gaussian::one(), Gaussian::zero())
    } else {
        (Gaussian::zero(), Gaussian::one())
    };
    let delta = &(&ca * &cd) - &(&cb * &cc);
    let h = a.scale(&cc).add(&b.scale(&cd));
    let ginv = g.invert()?;
    let w = ginv.matmul(&h);
    let (jblocks, s) = jordan_form(&w)?;
    let base_r = s.invert()?.matmul(&ginv);
    let base_c = s;

    let mut blocks = Vec::new();
    let mut r_fix = ExactMatrix::identity(n);
    let mut c_fix = ExactMatrix::identity(n);
    let mut off = 0usize;
    let dinv = delta.inv()?;
    for jb in &jblocks {
        let nk = jb.size;
        let mu = &jb.eigenvalue;
        let jmat = jordan_matrix(mu, nk);
        let id = ExactMatrix::identity(nk);
        // In the (I, J) frame the original pair reads per block:
        // A -> (cd*I - cb*J)/delta, B -> (ca*J - cc*I)/delta.
        let m1 = id.scale(&cd).sub(&jmat.scale(&cb)).scale(&dinv);
        let m2 = jmat.scale(&ca).sub(&id.scale(&cc)).scale(&dinv);
        let alpha = &cd - &(&cb * mu);
        let (blk, r_blk, c_blk) = if !alpha.is_zero() {
            let lambda = (&(&ca * mu) - &cc) / alpha;
            let m1inv = m1.invert()?;
            let wb = m1inv.matmul(&m2);
            let mut gnil = wb.clone();
            for d in 0..nk {
                *gnil.at_mut(d, d) -= &lambda;
            }
            let sb = nilpotent_chain(&gnil)?;
            let r_blk = sb.invert()?.matmul(&m1inv);
            (
                PencilBlock::Finite(JordanBlock::new(lambda, nk)),
                r_blk,
                sb,
            )
        } else {
            let m2inv = m2.invert()?;
            let wb = m2inv.matmul(&m1); // nilpotent
            let sb = nilpotent_chain(&wb)?;
            let r_blk = sb.invert()?.matmul(&m2inv);
            (PencilBlock::Infinite(nk), r_blk, sb)
        };
        // Check the block lands exactly on its canonical pair.
        let (t1, t2) = build_canonical(std::slice::from_ref(&blk));
        if r_blk.matmul(&m1).matmul(&c_blk) != t1 || r_blk.matmul(&m2).matmul(&c_blk) != t2 {
            return Err(Error::Internal("regular block normalization failed".into()));
        }
        r_fix = embed_at(n, off, &r_blk).matmul(&r_fix);
        c_fix = c_fix.matmul(&embed_at(n, off, &c_blk));
        blocks.push(blk);
        off += nk;
    }
    Ok((blocks, r_fix.matmul(&base_r), base_c.matmul(&c_fix)))
}

/// Full Kronecker reduction with exact, verified witnesses.
pub fn kcf_of_matrices(a: &ExactMatrix, b: &ExactMatrix) -> Result<PencilCanon> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.is_zero() && b.is_zero() {
        return Err(Error::ZeroPencil);
    }
    let (p0, q0) = (a.rows, a.cols);
    let mut pw = ExactMatrix::identity(p0);
    let mut qw = ExactMatrix::identity(q0);
    let mut blocks: Vec<PencilBlock> = Vec::new();
    let (mut done_r, mut done_c) = (0usize, 0usize);

    loop {
        let a_cur = pw.matmul(a).matmul(&qw);
        let b_cur = pw.matmul(b).matmul(&qw);
        let a_s = a_cur.submatrix(done_r, p0, done_c, q0);
        let b_s = b_cur.submatrix(done_r, p0, done_c, q0);
        let (pr, qc) = (a_s.rows, a_s.cols);
        if pr == 0 && qc == 0 {
            break;
        }

        if let Some((eps, v)) = min_right_kernel(&a_s, &b_s) {
            if eps == 0 {
                // All common-kernel columns peel at once as zero columns.
                let stacked = a_s.vstack(&b_s);
                let common = stacked.nullspace();
                let c = common.cols;
                debug_assert!(c >= 1);
                let lead: Vec<ExactMatrix> =
                    (0..c).map(|k| common.submatrix(0, qc, k, k + 1)).collect();
                let c_sub = complete_basis(qc, &lead);
                qw = qw.matmul(&embed_at(q0, done_c, &c_sub));
                for _ in 0..c {
                    blocks.push(PencilBlock::RightSingular(0));
                }
                done_c += c;
            } else {
                let (r_sub, c_sub) = peel_right_block(&a_s, &b_s, eps, &v)?;
                pw = embed_at(p0, done_r, &r_sub).matmul(&pw);
                qw = qw.matmul(&embed_at(q0, done_c, &c_sub));
                blocks.push(PencilBlock::RightSingular(eps));
                done_r += eps;
                done_c += eps + 1;
            }
            continue;
        }

        let at = a_s.transpose();
        let bt = b_s.transpose();
        if let Some((eta, v)) = min_right_kernel(&at, &bt) {
            if eta == 0 {
                let stacked = at.vstack(&bt);
                let common = stacked.nullspace();
                let c = common.cols;
                debug_assert!(c >= 1);
                let lead: Vec<ExactMatrix> =
                    (0..c).map(|k| common.submatrix(0, pr, k, k + 1)).collect();
                let r_sub = complete_basis(pr, &lead).transpose();
                pw = embed_at(p0, done_r, &r_sub).matmul(&pw);
                for _ in 0..c {
                    blocks.push(PencilBlock::LeftSingular(0));
                }
                done_r += c;
            } else {
                let (r_t, c_t) = peel_right_block(&at, &bt, eta, &v)?;
                pw = embed_at(p0, done_r, &c_t.transpose()).matmul(&pw);
                qw = qw.matmul(&embed_at(q0, done_c, &r_t.transpose()));
                blocks.push(PencilBlock::LeftSingular(eta));
                done_r += eta + 1;
                done_c += eta;
            }
            continue;
        }

        // No singular structure left: the core must be regular square.
        if pr != qc {
            return Err(Error::Internal(format!(
                "singular reduction left a non-square {pr}x{qc} core"
            )));
        }
        let (core_blocks, r_sub, c_sub) = regular_reduce(&a_s, &b_s)?;
        pw = embed_at(p0, done_r, &r_sub).matmul(&pw);
        qw = qw.matmul(&embed_at(q0, done_c, &c_sub));
        blocks.extend(core_blocks);
        break;
    }

    // Reorder the block-diagonal layout into the canonical order.
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&x, &y| canonical_block_order(&blocks[x], &blocks[y]));
    let mut row_off = vec![0usize; blocks.len()];
    let mut col_off = vec![0usize; blocks.len()];
    let (mut r_acc, mut c_acc) = (0usize, 0usize);
    for (k, blk) in blocks.iter().enumerate() {
        row_off[k] = r_acc;
        col_off[k] = c_acc;
        r_acc += blk.dims().0;
        c_acc += blk.dims().1;
    }
    let mut perm_r = ExactMatrix::zeros(p0, p0);
    let mut perm_c = ExactMatrix::zeros(q0, q0);
    let (mut nr, mut nc) = (0usize, 0usize);
    for &k in &order {
        let (h, w) = blocks[k].dims();
        for d in 0..h {
            *perm_r.at_mut(nr + d, row_off[k] + d) = Gaussian::one();
        }
        for d in 0..w {
            *perm_c.at_mut(col_off[k] + d, nc + d) = Gaussian::one();
        }
        nr += h;
        nc += w;
    }
    let pw = perm_r.matmul(&pw);
    let qw = qw.matmul(&perm_c);
    let sorted: Vec<PencilBlock> = order.into_iter().map(|k| blocks[k].clone()).collect();

    let (canon1, canon2) = build_canonical(&sorted);
    if pw.matmul(a).matmul(&qw) != canon1 || pw.matmul(b).matmul(&qw) != canon2 {
        return Err(Error::Internal("pencil witnesses failed final verification".into()));
    }
    if pw.det().is_zero() || qw.det().is_zero() {
        return Err(Error::Internal("pencil witnesses are singular".into()));
    }
    Ok(PencilCanon { blocks: sorted, p_witness: pw, q_witness: qw, canon1, canon2 })
}
