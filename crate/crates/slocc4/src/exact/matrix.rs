use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use super::gaussian::Gaussian;
use super::poly::ExactPoly;
use crate::error::{Error, Result};

/// Dense matrix over Q(i), row-major. All arithmetic is exact.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Gaussian>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![Gaussian::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            *m.at_mut(k, k) = Gaussian::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Gaussian) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ExactMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Gaussian>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("matrix with no rows".into()));
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged or empty matrix rows".into()));
        }
        Ok(ExactMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Small-integer literal, handy in tests and canonical constructions.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), cols, |r, c| Gaussian::from_i64(rows[r][c], 0))
    }

    pub fn at(&self, r: usize, c: usize) -> &Gaussian {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Gaussian {
        &mut self.data[r * self.cols + c]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    if r == c {
                        self.at(r, c).is_one()
                    } else {
                        self.at(r, c).is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self.at(r, c) + other.at(r, c))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self.at(r, c) - other.at(r, c))
    }

    pub fn neg(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| -self.at(r, c))
    }

    pub fn scale(&self, k: &Gaussian) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self.at(r, c) * k)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.at(k, c);
                    if !b.is_zero() {
                        let t = a * b;
                        *out.at_mut(r, c) += &t;
                    }
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(
            self.rows * other.rows,
            self.cols * other.cols,
            |r, c| {
                let (r1, r2) = (r / other.rows, r % other.rows);
                let (c1, c2) = (c / other.cols, c % other.cols);
                self.at(r1, c1) * other.at(r2, c2)
            },
        )
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        Self::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.at(r, c).clone()
            } else {
                other.at(r - self.rows, c).clone()
            }
        })
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        Self::from_fn(r1 - r0, c1 - c0, |r, c| self.at(r0 + r, c0 + c).clone())
    }

    pub fn column(&self, c: usize) -> Vec<Gaussian> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn row_vec(&self, r: usize) -> Vec<Gaussian> {
        (0..self.cols).map(|c| self.at(r, c).clone()).collect()
    }

    pub fn trace(&self) -> Gaussian {
        assert_eq!(self.rows, self.cols);
        let mut t = Gaussian::zero();
        for k in 0..self.rows {
            t += self.at(k, k);
        }
        t
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    pub fn scale_row(&mut self, r: usize, k: &Gaussian) {
        for c in 0..self.cols {
            let v = self.at(r, c) * k;
            *self.at_mut(r, c) = v;
        }
    }

    /// row[dst] += k * row[src]
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, k: &Gaussian) {
        for c in 0..self.cols {
            if !self.at(src, c).is_zero() {
                let t = self.at(src, c) * k;
                *self.at_mut(dst, c) += &t;
            }
        }
    }

    /// col[dst] += k * col[src]
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, k: &Gaussian) {
        for r in 0..self.rows {
            if !self.at(r, src).is_zero() {
                let t = self.at(r, src) * k;
                *self.at_mut(r, dst) += &t;
            }
        }
    }

    /// Reduced row echelon form. Returns (rref, pivot column indices).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.at(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m.at(row, col).inv().expect("nonzero pivot");
            m.scale_row(row, &inv);
            for r in 0..m.rows {
                if r != row && !m.at(r, col).is_zero() {
                    let k = -m.at(r, col);
                    m.add_row_multiple(r, row, &k);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> Gaussian {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = Gaussian::one();
        for col in 0..m.cols {
            let Some(p) = (col..m.rows).find(|&r| !m.at(r, col).is_zero()) else {
                return Gaussian::zero();
            };
            if p != col {
                m.swap_rows(col, p);
                det = -det;
            }
            det *= m.at(col, col);
            let inv = m.at(col, col).inv().expect("nonzero pivot");
            for r in col + 1..m.rows {
                if !m.at(r, col).is_zero() {
                    let k = -(m.at(r, col) * &inv);
                    m.add_row_multiple(r, col, &k);
                }
            }
        }
        det
    }

    pub fn invert(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let (r, pivots) = self.hstack(&Self::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular(format!("{}x{} matrix has rank < {}", n, n, n)));
        }
        Ok(r.submatrix(0, n, n, 2 * n))
    }

    /// Basis of the right nullspace, one vector per column.
    /// Deterministic: free columns ascending, unit at the free coordinate.
    pub fn nullspace(&self) -> Self {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Self::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            *basis.at_mut(f, k) = Gaussian::one();
            for (j, &p) in pivots.iter().enumerate() {
                *basis.at_mut(p, k) = -r.at(j, f);
            }
        }
        basis
    }

    /// One exact solution X of self * X = rhs with free variables set to zero,
    /// or None when the system is inconsistent.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        assert_eq!(self.rows, rhs.rows);
        let (r, pivots) = self.hstack(rhs).rref();
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, rhs.cols);
        for (j, &p) in pivots.iter().enumerate() {
            for c in 0..rhs.cols {
                *x.at_mut(p, c) = r.at(j, self.cols + c).clone();
            }
        }
        Some(x)
    }

    /// Characteristic polynomial det(xI - A), monic, exact.
    pub fn char_poly(&self) -> ExactPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        // Iterate M <- A*M + c*I, c_k = -tr(A*M_k)/k; coefficients of
        // x^n + c_1 x^(n-1) + ... + c_n collected highest-first, stored lowest-first.
        let mut coeffs_high_first = vec![Gaussian::one()];
        let mut m = Self::identity(n);
        for k in 1..=n {
            let am = self.matmul(&m);
            let kk = Gaussian::new(
                BigRational::from_integer(k.into()),
                BigRational::zero(),
            );
            let c = -(am.trace() / kk);
            coeffs_high_first.push(c.clone());
            if k < n {
                m = am;
                for d in 0..n {
                    *m.at_mut(d, d) += &c;
                }
            }
        }
        coeffs_high_first.reverse();
        ExactPoly::new(coeffs_high_first)
    }

    /// Entry-size magnitude proxy used to prefer small pivots and witnesses.
    pub fn complexity(&self) -> usize {
        self.data
            .iter()
            .map(|z| {
                z.re.numer().magnitude().bits() as usize
                    + z.re.denom().magnitude().bits() as usize
                    + z.im.numer().magnitude().bits() as usize
                    + z.im.denom().magnitude().bits() as usize
            })
            .sum()
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            if r > 0 {
                writeln!(f)?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{}:", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

/// Parse whitespace-separated scalar literals, one matrix row per line.
pub fn parse_matrix(text: &str) -> Result<ExactMatrix> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<Gaussian>> = line.split_whitespace().map(|t| t.parse()).collect();
        rows.push(row?);
    }
    ExactMatrix::from_rows(rows)
}

impl serde::Serialize for ExactMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c).to_string()).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> serde::Deserialize<'de> for ExactMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(de)?;
        let parsed: std::result::Result<Vec<Vec<Gaussian>>, _> = rows
            .iter()
            .map(|r| r.iter().map(|s| s.parse::<Gaussian>()).collect())
            .collect();
        ExactMatrix::from_rows(parsed.map_err(serde::de::Error::custom)?)
            .map_err(serde::de::Error::custom)
    }
}
