//! Exact feasibility for binomial minor systems on the parameter torus
//! (all parameters nonzero). Each two-term minor c1*s^a + c2*s^b = 0
//! becomes a multiplicative constraint s^(a-b) = -c2/c1; Smith reduction
//! of the exponent lattice settles consistency over the complex torus and
//! produces a rational witness when the required roots exist in Q(i).

use crate::exact::Gaussian;
use crate::symbolic::MultiPoly;

#[derive(Clone, Debug)]
pub enum TorusOutcome {
    /// A torus point satisfying every equation, ready to instantiate.
    Point(Vec<Gaussian>),
    /// No solution with all parameters nonzero, valid over the complex
    /// numbers; the string names the violated lattice relation.
    Infeasible(String),
    /// Feasible over the complex torus, but the witness needs a root that
    /// does not exist in Q(i).
    Unresolved(String),
}

/// One multiplicative equation s^diff = value.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusEq {
    diff: Vec<i128>,
    value: Gaussian,
}

/// None when some minor has more than two terms (not a binomial system).
pub fn torus_equations(minors: &[MultiPoly], params: usize) -> Option<Vec<TorusEqOrUnsat>> {
    let mut out = Vec::new();
    for p in minors {
        match p.num_terms() {
            0 => continue,
            1 => {
                // c * s^a = 0 has no torus solution when c != 0.
                out.push(TorusEqOrUnsat::Monomial(format!("{p}")));
            }
            2 => {
                let mut it = p.terms();
                let (ma, ca) = it.next().unwrap();
                let (mb, cb) = it.next().unwrap();
                let mut diff = vec![0i128; params];
                for (&k, &e) in &ma.0 {
                    diff[k] += e as i128;
                }
                for (&k, &e) in &mb.0 {
                    diff[k] -= e as i128;
                }
                // ca*s^ma + cb*s^mb = 0  <=>  s^(ma-mb) = -cb/ca.
                let value = -&(cb / ca);
                out.push(TorusEqOrUnsat::Eq(TorusEq { diff, value }));
            }
            _ => return None,
        }
    }
    Some(out)
}

#[derive(Clone, Debug)]
pub enum TorusEqOrUnsat {
    Eq(TorusEq),
    /// A single-term minor with nonzero coefficient: unsatisfiable on the
    /// torus outright.
    Monomial(String),
}

/// value^exp for integer exp (negative allowed; value must be nonzero).
fn gpow(value: &Gaussian, exp: i128) -> Gaussian {
    let base = if exp < 0 { value.inv().expect("torus value is nonzero") } else { value.clone() };
    let mut e = exp.unsigned_abs();
    let mut acc = Gaussian::one();
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &sq;
        }
        sq = &sq * &sq;
        e >>= 1;
    }
    acc
}

fn product_pow(values: &[Gaussian], exps: &[i128]) -> Gaussian {
    let mut acc = Gaussian::one();
    for (v, &e) in values.iter().zip(exps) {
        if e != 0 {
            acc = &acc * &gpow(v, e);
        }
    }
    acc
}

/// Smith reduction of `d` (r x k) tracking P (row ops on I_r) and Q (col ops
/// on I_k) so that P * d_original * Q = smith.
struct Smith {
    smith: Vec<Vec<i128>>,
    p: Vec<Vec<i128>>,
    q: Vec<Vec<i128>>,
    rank: usize,
}

fn smith_normal_form(d: &[Vec<i128>]) -> Smith {
    let r = d.len();
    let k = if r == 0 { 0 } else { d[0].len() };
    let mut m: Vec<Vec<i128>> = d.to_vec();
    let mut p: Vec<Vec<i128>> = (0..r).map(|i| (0..r).map(|j| i128::from(i == j)).collect()).collect();
    let mut q: Vec<Vec<i128>> = (0..k).map(|i| (0..k).map(|j| i128::from(i == j)).collect()).collect();

    let mut t = 0;
    while t < r.min(k) {
        // Find a nonzero pivot in the remaining block.
        let mut pivot = None;
        'scan: for i in t..r {
            for j in t..k {
                if m[i][j] != 0 {
                    pivot = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(t, pi);
        p.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        for row in q.iter_mut() {
            row.swap(t, pj);
        }
        // Clear column and row below/right of the pivot; repeat until clean
        // (remainders can reintroduce entries).
        loop {
            let mut dirty = false;
            for i in t + 1..r {
                if m[i][t] != 0 {
                    let f = m[i][t].div_euclid(m[t][t]);
                    if f != 0 {
                        for j in 0..k {
                            m[i][j] -= f * m[t][j];
                        }
                        for j in 0..r {
                            p[i][j] -= f * p[t][j];
                        }
                    }
                    if m[i][t] != 0 {
                        m.swap(t, i);
                        p.swap(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..k {
                if m[t][j] != 0 {
                    let f = m[t][j].div_euclid(m[t][t]);
                    if f != 0 {
                        for i in 0..r {
                            m[i][j] -= f * m[i][t];
                        }
                        for i in 0..k {
                            q[i][j] -= f * q[i][t];
                        }
                    }
                    if m[t][j] != 0 {
                        for row in m.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in q.iter_mut() {
                            row.swap(t, j);
                        }
                        dirty = true;
                    }
                }
            }
            if !dirty {
                break;
            }
        }
        if m[t][t] < 0 {
            for j in 0..k {
                m[t][j] = -m[t][j];
            }
            for j in 0..r {
                p[t][j] = -p[t][j];
            }
        }
        t += 1;
    }
    let rank = (0..r.min(k)).take_while(|&i| m[i][i] != 0).count();
    Smith { smith: m, p, q, rank }
}

/// Decide s^diff_i = value_i over the torus; construct a Q(i) witness when
/// possible. Monomial rows are immediately infeasible.
pub fn solve_torus(eqs: &[TorusEqOrUnsat], params: usize) -> TorusOutcome {
    for e in eqs {
        if let TorusEqOrUnsat::Monomial(text) = e {
            return TorusOutcome::Infeasible(format!(
                "minor {text} is a single monomial with nonzero coefficient"
            ));
        }
    }
    let mut rows: Vec<Vec<i128>> = Vec::new();
    let mut values: Vec<Gaussian> = Vec::new();
    for e in eqs {
        let TorusEqOrUnsat::Eq(eq) = e else { unreachable!() };
        if eq.diff.iter().all(|&x| x == 0) {
            // s^0 = v: consistent iff v = 1.
            if !eq.value.is_one() {
                return TorusOutcome::Infeasible(
                    "constant-exponent equation with value != 1".into(),
                );
            }
            continue;
        }
        // Skip exact duplicates; same exponent with a different value stays
        // and the lattice check resolves the clash.
        let dup = rows
            .iter()
            .zip(&values)
            .any(|(d, v)| d == &eq.diff && v == &eq.value);
        if dup {
            continue;
        }
        rows.push(eq.diff.clone());
        values.push(eq.value.clone());
    }
    if rows.is_empty() {
        return TorusOutcome::Point(vec![Gaussian::one(); params]);
    }

    let snf = smith_normal_form(&rows);
    let r = rows.len();

    // Rows of P beyond the rank span the left kernel: the corresponding
    // product of values must collapse to 1 or the system has no solution
    // over the complex torus at all.
    for l in snf.rank..r {
        let prod = product_pow(&values, &snf.p[l]);
        if !prod.is_one() {
            return TorusOutcome::Infeasible(format!(
                "lattice relation {:?} forces 1 = {prod}",
                snf.p[l]
            ));
        }
    }

    // Diagonal equations z_l^sigma_l = v'_l.
    let mut z = vec![Gaussian::one(); params];
    for l in 0..snf.rank {
        let vp = product_pow(&values, &snf.p[l]);
        let sigma = snf.smith[l][l];
        debug_assert!(sigma > 0);
        z[l] = match sigma {
            1 => vp,
            2 => match vp.sqrt() {
                Some(root) => root,
                None => {
                    return TorusOutcome::Unresolved(format!(
                        "needs a square root of {vp} outside Q(i)"
                    ))
                }
            },
            _ => {
                if vp.is_one() {
                    Gaussian::one()
                } else {
                    return TorusOutcome::Unresolved(format!(
                        "needs a {sigma}-th root of {vp}"
                    ));
                }
            }
        };
    }

    // x = Q-powered z.
    let mut x = Vec::with_capacity(params);
    for j in 0..params {
        x.push(product_pow(&z, &snf.q[j]));
    }
    TorusOutcome::Point(x)
}

/// End-to-end: classify and solve. None when the system is not binomial.
pub fn solve_binomial(minors: &[MultiPoly], params: usize) -> Option<TorusOutcome> {
    let eqs = torus_equations(minors, params)?;
    let outcome = solve_torus(&eqs, params);
    if let TorusOutcome::Point(x) = &outcome {
        // The construction is exact, but verify anyway: every minor must
        // vanish at the point.
        if !minors.iter().all(|m| m.eval(x).is_zero()) {
            return Some(TorusOutcome::Unresolved(
                "constructed point failed re-verification".into(),
            ));
        }
    }
    Some(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::MultiPoly;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    /// c1 * s^e1 + c2 * s^e2 as a MultiPoly, exponents per parameter.
    fn binom(c1: &str, e1: &[u32], c2: &str, e2: &[u32]) -> MultiPoly {
        let term = |c: &str, e: &[u32]| {
            let mut p = MultiPoly::constant(g(c));
            for (k, &exp) in e.iter().enumerate() {
                for _ in 0..exp {
                    p = p.mul(&MultiPoly::param(k));
                }
            }
            p
        };
        term(c1, e1).add(&term(c2, e2))
    }

    #[test]
    fn snf_diagonalizes_with_correct_transforms() {
        let d = vec![vec![2i128, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]];
        let snf = smith_normal_form(&d);
        // P * D * Q must equal the smith matrix.
        let r = 3;
        for i in 0..r {
            for j in 0..r {
                let mut acc = 0i128;
                for a in 0..r {
                    for b in 0..r {
                        acc += snf.p[i][a] * d[a][b] * snf.q[b][j];
                    }
                }
                assert_eq!(acc, snf.smith[i][j], "entry ({i},{j})");
            }
        }
        // Diagonal, with each entry dividing the next.
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    assert_eq!(snf.smith[i][j], 0);
                }
            }
        }
        for i in 0..snf.rank.saturating_sub(1) {
            assert_eq!(snf.smith[i + 1][i + 1] % snf.smith[i][i], 0);
        }
    }

    #[test]
    fn solvable_system_yields_verified_point() {
        // s0 = 2*s1 and s1^2 = 4  ->  s1 = +-2, s0 = 2*s1.
        let minors = vec![
            binom("1", &[1, 0], "-2", &[0, 1]),
            binom("1", &[0, 2], "-4", &[0, 0]),
        ];
        match solve_binomial(&minors, 2).unwrap() {
            TorusOutcome::Point(x) => {
                assert!(minors.iter().all(|m| m.eval(&x).is_zero()));
                assert!(!x[0].is_zero() && !x[1].is_zero());
            }
            other => panic!("expected a point, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_ratios_are_certified() {
        // s0/s1 = 1 and s0/s1 = 2 cannot hold together.
        let minors = vec![
            binom("1", &[1, 0], "-1", &[0, 1]),
            binom("1", &[1, 0], "-2", &[0, 1]),
        ];
        match solve_binomial(&minors, 2).unwrap() {
            TorusOutcome::Infeasible(_) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn monomial_minor_is_infeasible_on_the_torus() {
        let m = binom("3", &[1, 1], "0", &[0, 0]);
        // The zero half cancels away, leaving a true monomial.
        assert_eq!(m.num_terms(), 1);
        match solve_binomial(&[m], 2).unwrap() {
            TorusOutcome::Infeasible(_) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn square_root_in_qi_is_found() {
        // s0^2 = -4 has the Q(i) solution s0 = 2i.
        let minors = vec![binom("1", &[2], "4", &[0])];
        match solve_binomial(&minors, 1).unwrap() {
            TorusOutcome::Point(x) => {
                assert_eq!(&x[0] * &x[0], g("-4"));
            }
            other => panic!("expected a point, got {other:?}"),
        }
    }

    #[test]
    fn rootless_requirement_is_unresolved_not_infeasible() {
        // s0^2 = 2: no square root of 2 in Q(i).
        let minors = vec![binom("1", &[2], "-2", &[0])];
        match solve_binomial(&minors, 1).unwrap() {
            TorusOutcome::Unresolved(_) => {}
            other => panic!("expected unresolved, got {other:?}"),
        }
    }

    #[test]
    fn non_binomial_is_rejected() {
        let three = binom("1", &[1, 0], "1", &[0, 1]).add(&MultiPoly::one());
        assert!(solve_binomial(&[three], 2).is_none());
    }

    #[test]
    fn scalar_relation_infeasibility_uses_lattice_combination() {
        // s0*s1 = 2, s0 = s1, s1^2 = 3: combination forces 2 = 3.
        let minors = vec![
            binom("1", &[1, 1], "-2", &[0, 0]),
            binom("1", &[1, 0], "-1", &[0, 1]),
            binom("1", &[0, 2], "-3", &[0, 0]),
        ];
        match solve_binomial(&minors, 2).unwrap() {
            TorusOutcome::Infeasible(_) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}
