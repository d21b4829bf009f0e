use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use super::gaussian::Gaussian;
use super::gint::{self, GInt};
use crate::error::{Error, Result};

/// Polynomial over Q(i), coefficients lowest-degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactPoly {
    coeffs: Vec<Gaussian>,
}

impl ExactPoly {
    pub fn new(mut coeffs: Vec<Gaussian>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPoly { coeffs }
    }

    pub fn zero() -> Self {
        ExactPoly { coeffs: vec![] }
    }

    pub fn constant(c: Gaussian) -> Self {
        Self::new(vec![c])
    }

    pub fn from_roots(lead: Gaussian, roots: &[Gaussian]) -> Self {
        let mut p = Self::constant(lead);
        for r in roots {
            p = p.mul(&Self::new(vec![-r, Gaussian::one()]));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Gaussian] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Gaussian {
        self.coeffs.get(k).cloned().unwrap_or_else(Gaussian::zero)
    }

    pub fn leading(&self) -> Gaussian {
        self.coeffs.last().cloned().unwrap_or_else(Gaussian::zero)
    }

    pub fn eval(&self, x: &Gaussian) -> Gaussian {
        let mut acc = Gaussian::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| &self.coeff(k) - &other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Gaussian::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    let t = a * b;
                    out[i + j] += &t;
                }
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: &Gaussian) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let n = Gaussian::from_i64((k + 1) as i64, 0);
                    c * &n
                })
                .collect(),
        )
    }

    /// Exact division with remainder; divisor must be nonzero.
    pub fn divmod(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dl = divisor.leading();
        let dd = divisor.degree().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Gaussian::zero(); rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            if rem[k].is_zero() {
                continue;
            }
            let q = &rem[k] / &dl;
            quot[k - dd] = q.clone();
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                let t = dc * &q;
                rem[k - dd + j] -= &t;
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic gcd via the Euclidean algorithm.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let inv = a.leading().inv().unwrap();
            a.scale(&inv)
        }
    }

    pub fn is_squarefree(&self) -> bool {
        match self.degree() {
            None | Some(0) => true,
            _ => self.gcd(&self.derivative()).degree() == Some(0),
        }
    }

    /// Complete splitting into linear factors over Q(i).
    ///
    /// Returns roots with multiplicities, sorted by the (re, im) order.
    /// Errors with IrreducibleFactor when any factor of degree >= 2 has no
    /// root in the field; the reported degree is the unsplit remainder's.
    pub fn factor_linear(&self) -> Result<Vec<(Gaussian, usize)>> {
        if self.is_zero() {
            return Err(Error::Internal("factoring the zero polynomial".into()));
        }
        let mut roots: Vec<(Gaussian, usize)> = Vec::new();
        let add_root = |roots: &mut Vec<(Gaussian, usize)>, r: Gaussian, m: usize| {
            if let Some(e) = roots.iter_mut().find(|(x, _)| *x == r) {
                e.1 += m;
            } else {
                roots.push((r, m));
            }
        };

        let mut p = self.clone();
        // Zero roots first.
        let k = p.coeffs.iter().take_while(|c| c.is_zero()).count();
        if k > 0 {
            add_root(&mut roots, Gaussian::zero(), k);
            p = Self::new(p.coeffs[k..].to_vec());
        }

        while p.degree().unwrap_or(0) >= 1 {
            let d = p.degree().unwrap();
            let root = match d {
                1 => -(&p.coeff(0) / &p.coeff(1)),
                2 => {
                    let (a, b, c) = (p.coeff(2), p.coeff(1), p.coeff(0));
                    let disc = &(&b * &b) - &(&Gaussian::from_i64(4, 0) * &(&a * &c));
                    let Some(s) = disc.sqrt() else {
                        return Err(Error::IrreducibleFactor {
                            degree: 2,
                            context: "quadratic discriminant has no square root in Q(i)".into(),
                        });
                    };
                    (&s - &b) / (&Gaussian::from_i64(2, 0) * &a)
                }
                _ => match rational_root(&p) {
                    Some(r) => r,
                    None => {
                        return Err(Error::IrreducibleFactor {
                            degree: d,
                            context: "no linear factor over Q(i)".into(),
                        })
                    }
                },
            };
            // Deflate to full multiplicity.
            let lin = Self::new(vec![-&root, Gaussian::one()]);
            let mut mult = 0usize;
            loop {
                let (q, r) = p.divmod(&lin);
                if r.is_zero() {
                    p = q;
                    mult += 1;
                } else {
                    break;
                }
            }
            debug_assert!(mult > 0);
            add_root(&mut roots, root, mult);
        }

        // Re-expand and compare: the factorization must be exact.
        let mut expanded = Self::constant(self.leading());
        for (r, m) in &roots {
            for _ in 0..*m {
                expanded = expanded.mul(&Self::new(vec![-r, Gaussian::one()]));
            }
        }
        if expanded != *self {
            return Err(Error::Internal("root factorization failed verification".into()));
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(roots)
    }
}

/// A root in Q(i) of p (degree >= 3, p(0) != 0), by divisor search over Z[i].
fn rational_root(p: &ExactPoly) -> Option<Gaussian> {
    // Clear denominators to get Z[i] coefficients.
    let mut den = BigInt::one();
    for c in p.coeffs() {
        den = den.lcm(c.re.denom()).lcm(c.im.denom());
    }
    let zi: Vec<GInt> = p
        .coeffs()
        .iter()
        .map(|c| {
            GInt::new(
                (&c.re * num_rational::BigRational::from_integer(den.clone())).to_integer(),
                (&c.im * num_rational::BigRational::from_integer(den.clone())).to_integer(),
            )
        })
        .collect();
    let a0 = zi.first().cloned().unwrap();
    let an = zi.last().cloned().unwrap();
    debug_assert!(!a0.is_zero() && !an.is_zero());

    let mut tried: HashSet<Gaussian> = HashSet::new();
    for u in gint::divisors(&a0) {
        for v in gint::divisors(&an) {
            let base = u.to_gaussian() / v.to_gaussian();
            for (ure, uim) in gint::UNITS {
                let cand = &base * &Gaussian::from_i64(ure, uim);
                if tried.insert(cand.clone()) && p.eval(&cand).is_zero() {
                    return Some(cand);
                }
            }
        }
    }
    None
}

impl fmt::Display for ExactPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExactPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
