//! Sparse multivariate polynomials over the Gaussian rationals, plus
//! matrices with polynomial entries. Parameters are identified by index and
//! printed as s0, s1, ...

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::exact::{ExactMatrix, Gaussian};

/// Sparse exponent vector: parameter index -> exponent (never 0).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default, Hash)]
pub struct Monomial(pub BTreeMap<usize, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn param(i: usize) -> Self {
        Monomial(BTreeMap::from([(i, 1)]))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (&i, &e) in &other.0 {
            *out.entry(i).or_insert(0) += e;
        }
        Monomial(out)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn eval(&self, vals: &[Gaussian]) -> Gaussian {
        let mut acc = Gaussian::one();
        for (&i, &e) in &self.0 {
            for _ in 0..e {
                acc = &acc * &vals[i];
            }
        }
        acc
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MultiPoly {
    /// Nonzero coefficients only.
    terms: BTreeMap<Monomial, Gaussian>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn constant(c: Gaussian) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        MultiPoly { terms }
    }

    pub fn one() -> Self {
        MultiPoly::constant(Gaussian::one())
    }

    pub fn param(i: usize) -> Self {
        MultiPoly { terms: BTreeMap::from([(Monomial::param(i), Gaussian::one())]) }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) iff the polynomial has no parameter dependence.
    pub fn as_constant(&self) -> Option<Gaussian> {
        match self.terms.len() {
            0 => Some(Gaussian::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Gaussian)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest parameter index appearing, if any.
    pub fn max_param(&self) -> Option<usize> {
        self.terms.keys().flat_map(|m| m.0.keys().copied()).max()
    }

    fn insert(&mut self, m: Monomial, c: Gaussian) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = &*o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = MultiPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, k: &Gaussian) -> Self {
        if k.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn eval(&self, vals: &[Gaussian]) -> Gaussian {
        let mut acc = Gaussian::zero();
        for (m, c) in &self.terms {
            acc = &acc + &(c * &m.eval(vals));
        }
        acc
    }

    /// Replace parameter i by a constant.
    pub fn substitute(&self, i: usize, val: &Gaussian) -> Self {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let e = m.0.get(&i).copied().unwrap_or(0);
            let mut rest = m.clone();
            rest.0.remove(&i);
            let mut coeff = c.clone();
            for _ in 0..e {
                coeff = &coeff * val;
            }
            out.insert(rest, coeff);
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (&i, &e) in &m.0 {
                if e == 1 {
                    write!(f, "*s{i}")?;
                } else {
                    write!(f, "*s{i}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<MultiPoly>,
}

impl SymMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SymMatrix { rows, cols, data: vec![MultiPoly::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> MultiPoly) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        SymMatrix { rows, cols, data }
    }

    pub fn from_exact(m: &ExactMatrix) -> Self {
        SymMatrix::from_fn(m.rows, m.cols, |r, c| MultiPoly::constant(m.at(r, c).clone()))
    }

    /// sum_k s_{offset+k} * bases[k], entrywise linear in fresh parameters.
    pub fn linear_family(bases: &[ExactMatrix], offset: usize) -> Self {
        assert!(!bases.is_empty());
        let (rows, cols) = (bases[0].rows, bases[0].cols);
        SymMatrix::from_fn(rows, cols, |r, c| {
            let mut p = MultiPoly::zero();
            for (k, b) in bases.iter().enumerate() {
                p = p.add(&MultiPoly::param(offset + k).scale(b.at(r, c)));
            }
            p
        })
    }

    pub fn at(&self, r: usize, c: usize) -> &MultiPoly {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut MultiPoly {
        &mut self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        SymMatrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).add(other.at(r, c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).sub(other.at(r, c)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        SymMatrix::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = MultiPoly::zero();
            for k in 0..self.cols {
                let (a, b) = (self.at(r, k), other.at(k, c));
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            acc
        })
    }

    pub fn eval(&self, vals: &[Gaussian]) -> ExactMatrix {
        ExactMatrix::from_fn(self.rows, self.cols, |r, c| self.at(r, c).eval(vals))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(MultiPoly::is_zero)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        SymMatrix::from_fn(rows.len(), cols.len(), |r, c| self.at(rows[r], cols[c]).clone())
    }

    /// Determinant by Laplace expansion memoized on the set of unused
    /// columns; fine for the small orders this crate needs.
    pub fn det(&self) -> MultiPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        assert!(n <= 16, "symbolic determinant limited to order 16");
        if n == 0 {
            return MultiPoly::one();
        }
        let mut memo: HashMap<u32, MultiPoly> = HashMap::new();
        self.det_rec(0, (1u32 << n) - 1, &mut memo)
    }

    fn det_rec(&self, row: usize, mask: u32, memo: &mut HashMap<u32, MultiPoly>) -> MultiPoly {
        if mask == 0 {
            return MultiPoly::one();
        }
        if let Some(hit) = memo.get(&mask) {
            return hit.clone();
        }
        let mut acc = MultiPoly::zero();
        let mut sign = false;
        for c in 0..self.cols {
            if mask & (1 << c) == 0 {
                continue;
            }
            let entry = self.at(row, c);
            if !entry.is_zero() {
                let sub = self.det_rec(row + 1, mask & !(1 << c), memo);
                let term = entry.mul(&sub);
                acc = if sign { acc.sub(&term) } else { acc.add(&term) };
            }
            sign = !sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> MultiPoly {
        self.submatrix(rows, cols).det()
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    #[test]
    fn arithmetic_and_eval_agree() {
        let p = MultiPoly::param(0).mul(&MultiPoly::param(1)).add(&MultiPoly::constant(g("2")));
        let q = MultiPoly::param(0).sub(&MultiPoly::constant(g("i")));
        let prod = p.mul(&q);
        let vals = [g("3"), g("-1/2")];
        let want = &p.eval(&vals) * &q.eval(&vals);
        assert_eq!(prod.eval(&vals), want);
        assert_eq!(prod.degree(), 3);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = MultiPoly::param(2).add(&MultiPoly::one());
        let diff = p.sub(&p);
        assert!(diff.is_zero());
        assert_eq!(diff.num_terms(), 0);
    }

    #[test]
    fn substitution_is_partial_eval() {
        // s0^2 * s1 + 3 s0 at s0 = 2 -> 4 s1 + 6.
        let p = MultiPoly::param(0)
            .mul(&MultiPoly::param(0))
            .mul(&MultiPoly::param(1))
            .add(&MultiPoly::param(0).scale(&g("3")));
        let q = p.substitute(0, &g("2"));
        assert_eq!(q, MultiPoly::param(1).scale(&g("4")).add(&MultiPoly::constant(g("6"))));
        assert_eq!(q.max_param(), Some(1));
    }

    #[test]
    fn symbolic_det_matches_numeric() {
        // Entries linear in 3 params; compare det-then-eval with eval-then-det.
        let bases = [
            ExactMatrix::from_i64(&[&[1, 2, 0], &[0, 1, 1], &[1, 0, 1]]),
            ExactMatrix::from_i64(&[&[0, 1, 0], &[1, 0, 2], &[0, 1, 0]]),
            ExactMatrix::from_i64(&[&[1, 0, 1], &[0, 1, 0], &[2, 0, 1]]),
        ];
        let fam = SymMatrix::linear_family(&bases, 0);
        let d = fam.det();
        let vals = [g("1+i"), g("-2"), g("1/3")];
        assert_eq!(d.eval(&vals), fam.eval(&vals).det());
    }

    #[test]
    fn det_of_constant_matrix_is_constant() {
        let m = ExactMatrix::from_i64(&[&[2, 1], &[7, 4]]);
        let d = SymMatrix::from_exact(&m).det();
        assert_eq!(d.as_constant().unwrap(), g("1"));
    }

    #[test]
    fn matmul_then_eval_commutes() {
        let a = SymMatrix::from_fn(2, 2, |r, c| {
            MultiPoly::param(r * 2 + c).add(&MultiPoly::constant(g("1")))
        });
        let b = SymMatrix::from_exact(&ExactMatrix::from_i64(&[&[0, 1], &[1, 1]]));
        let prod = a.matmul(&b);
        let vals = [g("2"), g("i"), g("0"), g("-1")];
        assert_eq!(prod.eval(&vals), a.eval(&vals).matmul(&b.eval(&vals)));
    }

    #[test]
    fn minor_picks_submatrix() {
        let m = SymMatrix::from_exact(&ExactMatrix::from_i64(&[
            &[1, 2, 3],
            &[4, 5, 6],
            &[7, 8, 10],
        ]));
        // Rows {0,2} x cols {1,2}: [[2,3],[8,10]], det 20 - 24.
        assert_eq!(m.minor(&[0, 2], &[1, 2]).as_constant().unwrap(), g("-4"));
    }
}
