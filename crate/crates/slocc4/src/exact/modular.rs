//! Arithmetic modulo a 61-bit prime p = 1 (mod 4), used to prefilter
//! candidate witnesses before exact verification. i maps to a fourth
//! root of unity, so Q(i) values with p-regular denominators reduce
//! homomorphically.

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use super::gaussian::Gaussian;
use super::matrix::ExactMatrix;

#[derive(Clone, Copy, Debug)]
pub struct ModField {
    pub p: u64,
    /// Square root of -1 mod p.
    pub i_root: u64,
}

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all u64.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &MR_BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

impl ModField {
    /// The (skip+1)-th prime p = 1 (mod 4) above 2^61. Different skips give
    /// independent reduction maps for retrying a prefilter.
    pub fn new(skip: usize) -> Self {
        // 2^61 + 1 = 1 (mod 4); step by 4 to stay in the residue class.
        let mut n = (1u64 << 61) + 1;
        let mut remaining = skip;
        loop {
            if is_prime(n) {
                if remaining == 0 {
                    break;
                }
                remaining -= 1;
            }
            n += 4;
        }
        let p = n;
        // Smallest quadratic nonresidue gives a primitive fourth root.
        let mut a = 2u64;
        let i_root = loop {
            if powmod(a, (p - 1) / 2, p) == p - 1 {
                break powmod(a, (p - 1) / 4, p);
            }
            a += 1;
        };
        debug_assert_eq!(mulmod(i_root, i_root, p), p - 1);
        ModField { p, i_root }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mulmod(a, b, self.p)
    }

    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        powmod(a, self.p - 2, self.p)
    }

    fn reduce_big(&self, n: &num_bigint::BigInt) -> u64 {
        let m = n.mod_floor(&num_bigint::BigInt::from(self.p));
        debug_assert!(!m.is_negative());
        m.to_u64().unwrap()
    }

    /// None when a denominator vanishes mod p.
    pub fn reduce(&self, z: &Gaussian) -> Option<u64> {
        let dr = self.reduce_big(z.re.denom());
        let di = self.reduce_big(z.im.denom());
        if dr == 0 || di == 0 {
            return None;
        }
        let re = self.mul(self.reduce_big(z.re.numer()), self.inv(dr));
        let im = self.mul(self.reduce_big(z.im.numer()), self.inv(di));
        Some(self.add(re, self.mul(self.i_root, im)))
    }
}

/// Dense matrix over F_p, row-major.
#[derive(Clone, Debug)]
pub struct ModMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

impl ModMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ModMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    /// None when any entry has a denominator divisible by p.
    pub fn from_exact(m: &ExactMatrix, fld: &ModField) -> Option<Self> {
        let mut out = Self::zeros(m.rows, m.cols);
        for r in 0..m.rows {
            for c in 0..m.cols {
                out.data[r * out.cols + c] = fld.reduce(m.at(r, c))?;
            }
        }
        Some(out)
    }

    pub fn at(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn matmul(&self, other: &Self, fld: &ModField) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.at(k, c);
                    if b != 0 {
                        let v = fld.add(out.at(r, c), fld.mul(a, b));
                        out.set(r, c, v);
                    }
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self, fld: &ModField) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = Self::zeros(self.rows, self.cols);
        for k in 0..self.data.len() {
            out.data[k] = fld.sub(self.data[k], other.data[k]);
        }
        out
    }

    /// Reduced row echelon form; returns pivot column indices.
    pub fn rref(mut self, fld: &ModField) -> (Self, Vec<usize>) {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| self.at(r, col) != 0) else {
                continue;
            };
            for c in 0..self.cols {
                let t = self.at(row, c);
                let v = self.at(pr, c);
                self.set(row, c, v);
                self.set(pr, c, t);
            }
            let inv = fld.inv(self.at(row, col));
            for c in col..self.cols {
                let v = fld.mul(self.at(row, c), inv);
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && self.at(r, col) != 0 {
                    let f = self.at(r, col);
                    for c in col..self.cols {
                        let v = fld.sub(self.at(r, c), fld.mul(f, self.at(row, c)));
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (self, pivots)
    }

    pub fn rank(&self, fld: &ModField) -> usize {
        self.clone().rref(fld).1.len()
    }

    /// Columns form a basis of the right kernel.
    pub fn nullspace(&self, fld: &ModField) -> Self {
        let (r, pivots) = self.clone().rref(fld);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(self.cols, free.len());
        for (k, &fc) in free.iter().enumerate() {
            out.set(fc, k, 1);
            for (pr, &pc) in pivots.iter().enumerate() {
                out.set(pc, k, fld.neg(r.at(pr, fc)));
            }
        }
        out
    }

    /// One solution of self * x = rhs (free variables zero), or None.
    pub fn solve(&self, rhs: &Self, fld: &ModField) -> Option<Self> {
        assert_eq!(self.rows, rhs.rows);
        let mut aug = Self::zeros(self.rows, self.cols + rhs.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.at(r, c));
            }
            for c in 0..rhs.cols {
                aug.set(r, self.cols + c, rhs.at(r, c));
            }
        }
        let (red, pivots) = aug.rref(fld);
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, rhs.cols);
        for (pr, &pc) in pivots.iter().enumerate() {
            for c in 0..rhs.cols {
                x.set(pc, c, red.at(pr, self.cols + c));
            }
        }
        Some(x)
    }
}
