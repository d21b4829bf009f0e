//! Bounded direct search for an equivalence witness between two arranged
//! matrix pairs. Candidate qubit operators and small-factor operators are
//! scanned from finite boxes; for each candidate the remaining operators
//! satisfy a linear system, prefiltered modulo a large prime and then
//! solved exactly. The search can only produce witnesses, never rule them
//! out.

use std::time::Instant;

use crate::exact::modular::{ModField, ModMatrix};
use crate::exact::{ExactMatrix, Gaussian};
use crate::state::{CompositeSide, LocalOperatorQuad, MatrixPair};

#[derive(Clone, Debug, Default)]
pub struct SearchReport {
    pub candidates_tried: usize,
    pub exact_solves: usize,
    pub timed_out: bool,
}

#[derive(Debug)]
pub struct SearchOutcome {
    /// Operators in arranged axis order (qubit, single, factor M, factor N).
    pub witness: Option<LocalOperatorQuad>,
    pub report: SearchReport,
}

/// Pair-level check that `quad` maps `a` onto `b` exactly.
pub fn quad_moves_pair(a: &MatrixPair, quad: &LocalOperatorQuad, b: &MatrixPair) -> bool {
    let kron = quad.a3.kron(&quad.a4);
    let moved = match a.composite_side {
        CompositeSide::Columns => a.transform(&quad.a1, &quad.a2, &kron.transpose()),
        CompositeSide::Rows => a.transform(&quad.a1, &kron, &quad.a2.transpose()),
    };
    matches!(moved, Ok(p) if p == *b)
}

/// All invertible 2x2 matrices with entries in {-1, 0, 1}, first nonzero
/// entry normalized to +1 (scale is absorbed by the linear solve).
pub fn qubit_box() -> Vec<ExactMatrix> {
    let vals = [-1i64, 0, 1];
    let mut out = Vec::new();
    for a in vals {
        for b in vals {
            for c in vals {
                for d in vals {
                    let first = [a, b, c, d].into_iter().find(|&x| x != 0);
                    if first != Some(1) {
                        continue;
                    }
                    if a * d - b * c == 0 {
                        continue;
                    }
                    out.push(ExactMatrix::from_i64(&[&[a, b], &[c, d]]));
                }
            }
        }
    }
    out
}

/// All invertible 2x2 matrices over {0, 1, -1, i, -i}, one representative
/// per unit-scale ray: the first nonzero entry is normalized to +1. Scaling
/// a qubit operator is always absorbed by the other side of a witness, so
/// rays are the right granularity for scanning.
pub fn unit_qubit_box() -> Vec<ExactMatrix> {
    let vals = [
        Gaussian::from_i64(0, 0),
        Gaussian::from_i64(1, 0),
        Gaussian::from_i64(-1, 0),
        Gaussian::from_i64(0, 1),
        Gaussian::from_i64(0, -1),
    ];
    let mut out = Vec::new();
    for a in &vals {
        for b in &vals {
            for c in &vals {
                for d in &vals {
                    let first = [a, b, c, d].into_iter().find(|x| !x.is_zero());
                    if !matches!(first, Some(g) if g.is_one()) {
                        continue;
                    }
                    if (a * d - b * c).is_zero() {
                        continue;
                    }
                    let m = ExactMatrix::from_rows(vec![
                        vec![a.clone(), b.clone()],
                        vec![c.clone(), d.clone()],
                    ])
                    .expect("2x2 literal");
                    out.push(m);
                }
            }
        }
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for shorter in permutations(k - 1) {
        for pos in 0..k {
            let mut p: Vec<usize> = shorter.iter().map(|&x| x + 1).collect();
            p.insert(pos, 0);
            out.push(p);
        }
    }
    out
}

fn perm_matrix(p: &[usize], signs: &[i64]) -> ExactMatrix {
    let k = p.len();
    ExactMatrix::from_fn(k, k, |r, c| {
        if p[r] == c { Gaussian::from_i64(signs[r], 0) } else { Gaussian::zero() }
    })
}

/// Candidate operators for the second composite factor, dimension n. Small
/// dimensions get a genuinely dense box; from dimension 3 up the box thins
/// to signed or plain permutations so the scan stays bounded.
pub fn factor_box(n: usize) -> Vec<ExactMatrix> {
    match n {
        0 => Vec::new(),
        1 => vec![ExactMatrix::identity(1)],
        2 => qubit_box(),
        3 => {
            // Signed permutations, global sign normalized away: 24.
            let mut out = Vec::new();
            for p in permutations(3) {
                for s1 in [-1i64, 1] {
                    for s2 in [-1i64, 1] {
                        out.push(perm_matrix(&p, &[1, s1, s2]));
                    }
                }
            }
            out
        }
        4 => {
            // Plain permutations plus sign diagonals (normalized): 24 + 8,
            // minus the shared identity.
            let mut out: Vec<ExactMatrix> =
                permutations(4).iter().map(|p| perm_matrix(p, &[1; 4])).collect();
            let id: Vec<usize> = (0..4).collect();
            for s1 in [-1i64, 1] {
                for s2 in [-1i64, 1] {
                    for s3 in [-1i64, 1] {
                        let m = perm_matrix(&id, &[1, s1, s2, s3]);
                        if !out.contains(&m) {
                            out.push(m);
                        }
                    }
                }
            }
            out
        }
        _ => {
            let mut rev: Vec<usize> = (0..n).rev().collect();
            let shift: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            let ones = vec![1i64; n];
            let mut out = vec![ExactMatrix::identity(n)];
            out.push(perm_matrix(&rev, &ones));
            rev.rotate_left(1);
            out.push(perm_matrix(&shift, &ones));
            out
        }
    }
}

/// The linear system tying the remaining operators to a (T, B) candidate.
/// Unknowns: an LxL block (R = A2^-1 on the Columns side, Y = (A2^T)^-1 on
/// the Rows side) then an MxM block G. Entry (r,c) of the first block sits
/// at r*L+c; entry (r,c) of G at L*L + r*M+c.
struct CandidateSystem {
    rows: usize,
    cols: usize,
    entries: Vec<Gaussian>,
}

impl CandidateSystem {
    fn build(a: &MatrixPair, b: &MatrixPair, t: &ExactMatrix, bt: &ExactMatrix) -> Self {
        let l = a.single_dim;
        let (m, n) = a.factor_dims;
        let cols = l * l + m * m;
        let rows = 2 * l * m * n;
        let mut entries = vec![Gaussian::zero(); rows * cols];

        // Delta_i = sum_j T[i][j] * Gamma_j.
        let deltas: Vec<ExactMatrix> = (0..2)
            .map(|i| {
                a.gamma1.scale(t.at(i, 0)).add(&a.gamma2.scale(t.at(i, 1)))
            })
            .collect();
        let primes = [&b.gamma1, &b.gamma2];

        let mut eq = 0;
        match a.composite_side {
            CompositeSide::Columns => {
                // R * Gamma'_i = Delta_i * (G kron B).
                for i in 0..2 {
                    for r in 0..l {
                        for mi in 0..m {
                            for ni in 0..n {
                                let base = eq * cols;
                                for k in 0..l {
                                    entries[base + r * l + k] =
                                        primes[i].at(k, mi * n + ni).clone();
                                }
                                for mp in 0..m {
                                    let mut acc = Gaussian::zero();
                                    for np in 0..n {
                                        let w = bt.at(np, ni);
                                        if !w.is_zero() {
                                            acc = &acc + &(deltas[i].at(r, mp * n + np) * w);
                                        }
                                    }
                                    entries[base + l * l + mp * m + mi] = -&acc;
                                }
                                eq += 1;
                            }
                        }
                    }
                }
            }
            CompositeSide::Rows => {
                // Gamma'_i * Y = (G kron B) * Delta_i.
                for i in 0..2 {
                    for mi in 0..m {
                        for ni in 0..n {
                            for c in 0..l {
                                let base = eq * cols;
                                for k in 0..l {
                                    entries[base + k * l + c] =
                                        primes[i].at(mi * n + ni, k).clone();
                                }
                                for mp in 0..m {
                                    let mut acc = Gaussian::zero();
                                    for np in 0..n {
                                        let w = bt.at(ni, np);
                                        if !w.is_zero() {
                                            acc = &acc + &(deltas[i].at(mp * n + np, c) * w);
                                        }
                                    }
                                    entries[base + l * l + mi * m + mp] = -&acc;
                                }
                                eq += 1;
                            }
                        }
                    }
                }
            }
        }
        debug_assert_eq!(eq, rows);
        CandidateSystem { rows, cols, entries }
    }

    fn to_exact(&self) -> ExactMatrix {
        ExactMatrix::from_fn(self.rows, self.cols, |r, c| {
            self.entries[r * self.cols + c].clone()
        })
    }

    fn to_mod(&self, fld: &ModField) -> Option<ModMatrix> {
        let mut out = ModMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, fld.reduce(&self.entries[r * self.cols + c])?);
            }
        }
        Some(out)
    }
}

fn reshape(u: &ExactMatrix, l: usize, m: usize) -> (ExactMatrix, ExactMatrix) {
    let first = ExactMatrix::from_fn(l, l, |r, c| u.at(r * l + c, 0).clone());
    let second = ExactMatrix::from_fn(m, m, |r, c| u.at(l * l + r * m + c, 0).clone());
    (first, second)
}

/// Candidate kernel vectors worth testing for joint invertibility: the
/// basis itself, pairwise sums and differences, the total sum, and a few
/// deterministic small-integer mixes.
fn kernel_candidates(basis: &ExactMatrix) -> Vec<ExactMatrix> {
    let d = basis.cols;
    let col = |j: usize| basis.submatrix(0, basis.rows, j, j + 1);
    let mut out: Vec<ExactMatrix> = (0..d).map(col).collect();
    if d > 1 {
        for i in 0..d {
            for j in i + 1..d {
                out.push(col(i).add(&col(j)));
                out.push(col(i).sub(&col(j)));
                if out.len() > 48 {
                    break;
                }
            }
        }
        let total = (1..d).fold(col(0), |acc, j| acc.add(&col(j)));
        out.push(total);
        // Weighted mixes separate components a plain sum keeps degenerate.
        for w in [2i64, 3, 5] {
            let mut acc = col(0);
            let mut scale = Gaussian::one();
            let g = Gaussian::from_i64(w, 0);
            for j in 1..d {
                scale = &scale * &g;
                acc = acc.add(&col(j).scale(&scale));
            }
            out.push(acc);
        }
    }
    out
}

fn assemble(
    side: CompositeSide,
    t: &ExactMatrix,
    bt: &ExactMatrix,
    first: &ExactMatrix,
    g: &ExactMatrix,
) -> Option<LocalOperatorQuad> {
    if g.det().is_zero() {
        return None;
    }
    match side {
        CompositeSide::Columns => {
            let a2 = first.invert().ok()?;
            Some(LocalOperatorQuad {
                a1: t.clone(),
                a2,
                a3: g.transpose(),
                a4: bt.transpose(),
            })
        }
        CompositeSide::Rows => {
            let a2 = first.transpose().invert().ok()?;
            Some(LocalOperatorQuad { a1: t.clone(), a2, a3: g.clone(), a4: bt.clone() })
        }
    }
}

/// Pick a prime field in which every entry of both pairs reduces; gives up
/// after a few shifts (the prefilter is then skipped entirely).
fn prefilter_field(a: &MatrixPair, b: &MatrixPair) -> Option<ModField> {
    'skip: for skip in 0..6 {
        let fld = ModField::new(skip);
        for m in [&a.gamma1, &a.gamma2, &b.gamma1, &b.gamma2] {
            for r in 0..m.rows {
                for c in 0..m.cols {
                    if fld.reduce(m.at(r, c)).is_none() {
                        continue 'skip;
                    }
                }
            }
        }
        return Some(fld);
    }
    None
}

pub fn search_witness(
    a: &MatrixPair,
    b: &MatrixPair,
    deadline: Option<Instant>,
) -> SearchOutcome {
    let mut report = SearchReport::default();
    if a.composite_side != b.composite_side
        || a.factor_dims != b.factor_dims
        || a.single_dim != b.single_dim
    {
        return SearchOutcome { witness: None, report };
    }
    let l = a.single_dim;
    let (m, n) = a.factor_dims;
    let fld = prefilter_field(a, b);
    let ts = qubit_box();
    let bs = factor_box(n);

    for t in &ts {
        for bt in &bs {
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    report.timed_out = true;
                    return SearchOutcome { witness: None, report };
                }
            }
            report.candidates_tried += 1;
            let system = CandidateSystem::build(a, b, t, bt);
            if let Some(fld) = &fld {
                match system.to_mod(fld) {
                    Some(modsys) => {
                        if modsys.nullspace(fld).cols == 0 {
                            continue;
                        }
                    }
                    None => {}
                }
            }
            report.exact_solves += 1;
            let kernel = system.to_exact().nullspace();
            if kernel.cols == 0 {
                continue;
            }
            for u in kernel_candidates(&kernel) {
                let (first, g) = reshape(&u, l, m);
                if first.det().is_zero() {
                    continue;
                }
                let Some(quad) = assemble(a.composite_side, t, bt, &first, &g) else {
                    continue;
                };
                if quad_moves_pair(a, &quad, b) {
                    return SearchOutcome { witness: Some(quad), report };
                }
            }
        }
    }
    SearchOutcome { witness: None, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{composite_side_for, CompositeSide};

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    fn pair(l: usize, m: usize, n: usize, g1: &[&[i64]], g2: &[&[i64]]) -> MatrixPair {
        let side = composite_side_for(l, m, n);
        MatrixPair {
            gamma1: ExactMatrix::from_i64(g1),
            gamma2: ExactMatrix::from_i64(g2),
            composite_side: side,
            factor_dims: (m, n),
            single_dim: l,
        }
    }

    #[test]
    fn boxes_have_the_advertised_shape() {
        let q = qubit_box();
        assert_eq!(q.len(), 24);
        assert!(q.iter().all(|t| !t.det().is_zero()));
        // Global scale is normalized: no matrix and its negation together.
        for t in &q {
            assert!(!q.contains(&t.scale(&g("-1"))));
        }
        assert_eq!(factor_box(1).len(), 1);
        assert_eq!(factor_box(3).len(), 24);
        assert!(factor_box(3).iter().all(|b| !b.det().is_zero()));
        let f4 = factor_box(4);
        assert_eq!(f4.len(), 31);
        assert!(f4.iter().all(|b| !b.det().is_zero()));
    }

    #[test]
    fn unit_box_holds_one_representative_per_ray() {
        let rays = unit_qubit_box();
        assert!(rays.iter().all(|t| !t.det().is_zero()));
        // Exactly a quarter of the invertible matrices over the five values:
        // each unit-scale orbit {t, -t, it, -it} contributes once.
        let units = [g("1"), g("-1"), g("i"), g("-i")];
        for t in &rays {
            for u in &units[1..] {
                assert!(!rays.contains(&t.scale(u)));
            }
        }
        // The plain integer box sits inside, up to its own normalization.
        for t in qubit_box() {
            assert!(rays.contains(&t));
        }
        assert_eq!(rays.len(), 120);
    }

    #[test]
    fn identity_pair_is_matched_immediately() {
        let p = pair(
            2,
            2,
            2,
            &[&[1, 0, 0, 1], &[0, 2, 1, 0]],
            &[&[1, 1, 0, 0], &[0, 0, 3, 1]],
        );
        let out = search_witness(&p, &p, None);
        let quad = out.witness.expect("self-search must succeed");
        assert!(quad_moves_pair(&p, &quad, &p));
    }

    #[test]
    fn planted_witness_on_columns_side_is_recovered() {
        let p = pair(
            2,
            2,
            2,
            &[&[1, 0, 0, 1], &[0, 2, 1, 0]],
            &[&[1, 1, 0, 0], &[0, 0, 3, 1]],
        );
        assert_eq!(p.composite_side, CompositeSide::Columns);
        // Plant a quad whose qubit and small-factor parts live in the boxes
        // up to scale, with dense invertible A2, A3.
        let quad = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[2, 2], &[0, -2]]),
            a2: ExactMatrix::from_i64(&[&[1, 2], &[1, 3]]),
            a3: ExactMatrix::from_i64(&[&[3, 1], &[2, 1]]),
            a4: ExactMatrix::from_i64(&[&[0, -3], &[3, 0]]),
        };
        let kron = quad.a3.kron(&quad.a4);
        let moved = p.transform(&quad.a1, &quad.a2, &kron.transpose()).unwrap();
        let out = search_witness(&p, &moved, None);
        let found = out.witness.expect("planted witness must be found");
        assert!(quad_moves_pair(&p, &found, &moved));
    }

    #[test]
    fn planted_witness_on_rows_side_is_recovered() {
        // L = 4 = M*N puts the composite index on the rows.
        let p = pair(
            4,
            2,
            2,
            &[&[1, 0, 0, 0], &[0, 2, 0, 0], &[0, 0, 3, 0], &[1, 0, 0, 4]],
            &[&[0, 1, 0, 0], &[0, 0, 1, 0], &[2, 0, 0, 1], &[0, 0, 0, 1]],
        );
        assert_eq!(p.composite_side, CompositeSide::Rows);
        let quad = LocalOperatorQuad {
            a1: ExactMatrix::from_i64(&[&[1, 1], &[-1, 1]]),
            a2: ExactMatrix::from_i64(&[&[1, 0, 0, 0], &[2, 1, 0, 0], &[0, 0, 1, 3], &[0, 0, 0, 1]]),
            a3: ExactMatrix::from_i64(&[&[1, 4], &[1, 5]]),
            a4: ExactMatrix::from_i64(&[&[1, 1], &[-1, 1]]),
        };
        let kron = quad.a3.kron(&quad.a4);
        let moved = p.transform(&quad.a1, &kron, &quad.a2.transpose()).unwrap();
        let out = search_witness(&p, &moved, None);
        let found = out.witness.expect("planted witness must be found");
        assert!(quad_moves_pair(&p, &found, &moved));
    }

    #[test]
    fn unrelated_pairs_produce_no_witness() {
        let p = pair(
            2,
            2,
            2,
            &[&[1, 0, 0, 1], &[0, 0, 0, 0]],
            &[&[0, 0, 0, 0], &[1, 0, 0, -1]],
        );
        // Rank profile differs: gamma1 of q has rank 2 in a way no local op
        // can reach from p's rank-1 slice layout.
        let q = pair(
            2,
            2,
            2,
            &[&[1, 0, 0, 0], &[0, 0, 0, 1]],
            &[&[0, 1, 0, 0], &[0, 0, 1, 0]],
        );
        let out = search_witness(&p, &q, None);
        assert!(out.witness.is_none());
        assert!(out.report.candidates_tried > 0);
    }

    #[test]
    fn deadline_stops_the_scan() {
        let p = pair(
            2,
            2,
            2,
            &[&[1, 0, 0, 1], &[0, 2, 1, 0]],
            &[&[1, 1, 0, 0], &[0, 0, 3, 1]],
        );
        let q = pair(
            2,
            2,
            2,
            &[&[1, 2, 3, 4], &[5, 6, 7, 8]],
            &[&[8, 7, 6, 5], &[4, 3, 2, 1]],
        );
        let out = search_witness(&p, &q, Some(Instant::now()));
        assert!(out.report.timed_out);
        assert_eq!(out.report.candidates_tried, 0);
    }
}
