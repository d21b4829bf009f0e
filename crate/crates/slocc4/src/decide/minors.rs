//! Rank-one feasibility as polynomials: realign the symbolic composite-side
//! operator and collect every 2x2 minor. A parameter point makes the
//! operator a Kronecker product exactly when all minors vanish while the
//! invertibility side conditions stay nonzero.

use crate::error::{Error, Result};
use crate::realign::RealignmentShape;
use crate::symbolic::{MultiPoly, SymMatrix};

#[derive(Clone, Debug)]
pub struct MinorSystem {
    pub parameters: Vec<String>,
    pub polynomials: Vec<MultiPoly>,
    pub side_conditions: Vec<MultiPoly>,
}

impl MinorSystem {
    /// True at `vals` iff every minor vanishes and every side condition is
    /// nonzero: exactly the solution predicate.
    pub fn satisfied_at(&self, vals: &[crate::exact::Gaussian]) -> bool {
        self.polynomials.iter().all(|p| p.eval(vals).is_zero())
            && self.side_conditions.iter().all(|p| !p.eval(vals).is_zero())
    }
}

/// Entrywise copy of the exact realignment: row (i, j) of the block grid
/// becomes vec(A_ij)^T.
pub fn realign_sym(m: &SymMatrix, shape: RealignmentShape) -> Result<SymMatrix> {
    let RealignmentShape { m1, m2, n1, n2 } = shape;
    if m.rows != m1 * m2 || m.cols != n1 * n2 {
        return Err(Error::DimensionMismatch(format!(
            "realigning a {}x{} symbolic matrix as ({m1}*{m2})x({n1}*{n2})",
            m.rows, m.cols
        )));
    }
    let mut out = SymMatrix::zeros(m1 * n1, m2 * n2);
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

/// All 2x2 minors, deduplicated, zero polynomials dropped.
pub fn two_by_two_minors(m: &SymMatrix) -> Vec<MultiPoly> {
    let mut out: Vec<MultiPoly> = Vec::new();
    for r0 in 0..m.rows {
        for r1 in r0 + 1..m.rows {
            for c0 in 0..m.cols {
                for c1 in c0 + 1..m.cols {
                    let det = m.at(r0, c0).mul(m.at(r1, c1)).sub(&m.at(r0, c1).mul(m.at(r1, c0)));
                    if det.is_zero() || out.contains(&det) {
                        continue;
                    }
                    out.push(det);
                }
            }
        }
    }
    out
}

/// Minor system for a composite-side operator `op(s)` that must factor as a
/// Kronecker product with factor sizes (mm, nn); `x_fam`/`z_fam` are the
/// row- and column-side commutant families whose invertibility keeps the
/// instantiation inside the group.
pub fn build_minor_system(
    op: &SymMatrix,
    mm: usize,
    nn: usize,
    x_fam: &SymMatrix,
    z_fam: &SymMatrix,
    param_count: usize,
) -> Result<MinorSystem> {
    let realigned = realign_sym(op, RealignmentShape::square(mm, nn))?;
    let polynomials = two_by_two_minors(&realigned);
    let side_conditions = vec![x_fam.det(), z_fam.det()];
    let parameters = (0..param_count).map(|k| format!("s{k}")).collect();
    Ok(MinorSystem { parameters, polynomials, side_conditions })
}

/// True when the commutant families are diagonal with single-parameter
/// entries covering every parameter: invertibility then forces every
/// parameter nonzero, so torus reasoning is complete.
pub fn torus_forced(x_fam: &SymMatrix, z_fam: &SymMatrix, param_count: usize) -> bool {
    let mut seen = vec![false; param_count];
    for fam in [x_fam, z_fam] {
        for r in 0..fam.rows {
            for c in 0..fam.cols {
                let p = fam.at(r, c);
                if p.is_zero() {
                    continue;
                }
                if r != c || p.num_terms() != 1 {
                    return false;
                }
                let (mono, _) = p.terms().next().unwrap();
                if mono.degree() != 1 {
                    return false;
                }
                let (&k, _) = mono.0.iter().next().unwrap();
                if k < param_count {
                    seen[k] = true;
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ExactMatrix, Gaussian};
    use crate::realign::realign;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    #[test]
    fn symbolic_realign_matches_exact_realign() {
        let m = ExactMatrix::from_i64(&[
            &[1, 2, 3, 4],
            &[5, 6, 7, 8],
            &[9, 10, 11, 12],
            &[13, 14, 15, 16],
        ]);
        let shape = RealignmentShape::square(2, 2);
        let exact = realign(&m, shape).unwrap();
        let sym = realign_sym(&SymMatrix::from_exact(&m), shape).unwrap();
        assert_eq!(sym.eval(&[]), exact);
    }

    #[test]
    fn kronecker_family_has_vanishing_minors_on_the_right_line() {
        // op(s) = s0 * (A (x) B) + s1 * (A (x) C): realign rows are
        // vec-transposes of s0*B + s1*C scaled by entries of A, so the
        // realigned matrix has rank one for every (s0, s1): all minors zero.
        let a = ExactMatrix::from_i64(&[&[1, 2], &[3, -1]]);
        let b = ExactMatrix::from_i64(&[&[0, 1], &[1, 1]]);
        let c = ExactMatrix::from_i64(&[&[2, 0], &[0, 3]]);
        let fam = SymMatrix::linear_family(&[a.kron(&b), a.kron(&c)], 0);
        let realigned = realign_sym(&fam, RealignmentShape::square(2, 2)).unwrap();
        assert!(two_by_two_minors(&realigned).is_empty());
    }

    #[test]
    fn mixed_kronecker_directions_leave_binomial_minors() {
        // op(s) = s0 * (A (x) B) + s1 * (C (x) D) with independent products:
        // minors are binomial in (s0, s1) and vanish only on s0*s1 = 0.
        let a = ExactMatrix::from_i64(&[&[1, 0], &[0, 1]]);
        let b = ExactMatrix::from_i64(&[&[1, 1], &[0, 1]]);
        let c = ExactMatrix::from_i64(&[&[0, 1], &[1, 0]]);
        let d = ExactMatrix::from_i64(&[&[1, 0], &[1, 1]]);
        let fam = SymMatrix::linear_family(&[a.kron(&b), c.kron(&d)], 0);
        let realigned = realign_sym(&fam, RealignmentShape::square(2, 2)).unwrap();
        let minors = two_by_two_minors(&realigned);
        assert!(!minors.is_empty());
        for m in &minors {
            assert!(m.num_terms() <= 2);
        }
        // s0 = 1, s1 = 0 kills the second summand: rank one again.
        for m in &minors {
            assert!(m.eval(&[g("1"), g("0")]).is_zero());
        }
    }

    #[test]
    fn torus_forced_recognizes_diagonal_families() {
        let e = |k: usize, n: usize| {
            ExactMatrix::from_fn(n, n, |r, c| {
                if r == k && c == k {
                    Gaussian::one()
                } else {
                    Gaussian::zero()
                }
            })
        };
        let xs: Vec<ExactMatrix> = (0..3).map(|k| e(k, 3)).collect();
        let x_fam = SymMatrix::linear_family(&xs, 0);
        assert!(torus_forced(&x_fam, &x_fam, 3));

        let dense = SymMatrix::linear_family(&[ExactMatrix::from_i64(&[&[1, 1], &[0, 1]])], 0);
        assert!(!torus_forced(&dense, &dense, 1));
    }

    #[test]
    fn satisfaction_respects_side_conditions() {
        let x = SymMatrix::linear_family(&[ExactMatrix::identity(2)], 0);
        let sys = MinorSystem {
            parameters: vec!["s0".into()],
            polynomials: vec![],
            side_conditions: vec![x.det()],
        };
        assert!(sys.satisfied_at(&[g("2")]));
        assert!(!sys.satisfied_at(&[g("0")]));
    }
}
