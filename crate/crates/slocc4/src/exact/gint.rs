use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::gaussian::Gaussian;

/// Gaussian integer, used for divisor enumeration during root finding.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct GInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GInt {
    pub fn new(re: BigInt, im: BigInt) -> Self {
        GInt { re, im }
    }

    pub fn from_i64(re: i64, im: i64) -> Self {
        GInt::new(BigInt::from(re), BigInt::from(im))
    }

    pub fn zero() -> Self {
        GInt::from_i64(0, 0)
    }

    pub fn one() -> Self {
        GInt::from_i64(1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_unit(&self) -> bool {
        self.norm().is_one()
    }

    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn conj(&self) -> Self {
        GInt::new(self.re.clone(), -self.im.clone())
    }

    pub fn neg(&self) -> Self {
        GInt::new(-self.re.clone(), -self.im.clone())
    }

    pub fn mul(&self, other: &GInt) -> Self {
        GInt::new(
            &self.re * &other.re - &self.im * &other.im,
            &self.re * &other.im + &self.im * &other.re,
        )
    }

    pub fn mul_i(&self) -> Self {
        GInt::new(-self.im.clone(), self.re.clone())
    }

    pub fn add(&self, other: &GInt) -> Self {
        GInt::new(&self.re + &other.re, &self.im + &other.im)
    }

    pub fn sub(&self, other: &GInt) -> Self {
        GInt::new(&self.re - &other.re, &self.im - &other.im)
    }

    /// Nearest-integer Euclidean division: q with N(self - q*other) <= N(other)/2.
    pub fn div_rem(&self, other: &GInt) -> (GInt, GInt) {
        assert!(!other.is_zero(), "division by zero");
        let n = other.norm();
        let t = self.mul(&other.conj());
        let q = GInt::new(round_div(&t.re, &n), round_div(&t.im, &n));
        let r = self.sub(&q.mul(other));
        (q, r)
    }

    pub fn divides(&self, other: &GInt) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.div_rem(self).1.is_zero()
    }

    pub fn gcd(&self, other: &GInt) -> GInt {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.unit_normalize()
    }

    /// Canonical associate: rotate by units into re > 0, im >= 0 (zero stays zero).
    pub fn unit_normalize(&self) -> GInt {
        if self.is_zero() {
            return self.clone();
        }
        let mut z = self.clone();
        for _ in 0..3 {
            if z.re.is_positive() && !z.im.is_negative() {
                return z;
            }
            z = z.mul_i();
        }
        z
    }

    pub fn to_gaussian(&self) -> Gaussian {
        Gaussian::new(
            BigRational::from_integer(self.re.clone()),
            BigRational::from_integer(self.im.clone()),
        )
    }
}

/// Round a/b to the nearest integer (ties toward +inf; any tie rule works
/// for Euclidean division since N(r) <= N(b)/2 either way).
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let (num, den) = if b.is_negative() {
        (-a.clone(), -b.clone())
    } else {
        (a.clone(), b.clone())
    };
    (&(&num * &two) + &den).div_floor(&(&den * &two))
}

/// Prime factorization of a nonzero Gaussian integer, up to units.
/// Returns (unit, [(prime, exponent)]) with primes unit-normalized.
pub fn factor(z: &GInt) -> (GInt, Vec<(GInt, u32)>) {
    assert!(!z.is_zero());
    let mut rest = z.clone();
    let mut out: Vec<(GInt, u32)> = Vec::new();
    let push = |p: GInt, rest: &mut GInt, out: &mut Vec<(GInt, u32)>| {
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&p);
            if r.is_zero() {
                *rest = q;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            out.push((p, e));
        }
    };

    let norm = z.norm();
    for p in trial_primes(&norm) {
        if p == BigInt::from(2) {
            push(GInt::from_i64(1, 1), &mut rest, &mut out);
        } else if (&p % BigInt::from(4)) == BigInt::one() {
            // Split prime: p = pi * conj(pi).
            let pi = split_prime(&p);
            push(pi.clone(), &mut rest, &mut out);
            push(pi.conj().unit_normalize(), &mut rest, &mut out);
        } else {
            // Inert prime.
            push(GInt::new(p.clone(), BigInt::zero()).unit_normalize(), &mut rest, &mut out);
        }
    }
    debug_assert!(rest.is_unit(), "unfactored remainder {rest:?} of {z:?}");
    (rest, out)
}

/// Rational primes dividing n (n > 0), by trial division.
fn trial_primes(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &(&p * &p) <= &n {
        if (&n % &p).is_zero() {
            out.push(p.clone());
            while (&n % &p).is_zero() {
                n = &n / &p;
            }
        }
        p += if p == BigInt::from(2) { BigInt::one() } else { BigInt::from(2) };
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

/// For p = 1 mod 4, a Gaussian prime above p via gcd(p, k+i) with k^2 = -1 mod p.
fn split_prime(p: &BigInt) -> GInt {
    let exp = (p - BigInt::one()) / BigInt::from(4);
    let mut a = BigInt::from(2);
    loop {
        let k = a.modpow(&exp, p);
        // k^2 = -1 mod p iff a is a quadratic nonresidue.
        if (&k * &k % p) == (p - BigInt::one()) {
            let g = GInt::new(p.clone(), BigInt::zero()).gcd(&GInt::new(k, BigInt::one()));
            debug_assert_eq!(g.norm(), *p);
            return g;
        }
        a += BigInt::one();
    }
}

/// All divisors of z up to units (one representative per associate class).
pub fn divisors(z: &GInt) -> Vec<GInt> {
    let (_, primes) = factor(z);
    let mut out = vec![GInt::one()];
    for (p, e) in &primes {
        let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
        for d in &out {
            let mut acc = d.clone();
            next.push(acc.clone());
            for _ in 0..*e {
                acc = acc.mul(p);
                next.push(acc.clone());
            }
        }
        out = next;
    }
    out
}

pub const UNITS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_division_shrinks() {
        let a = GInt::from_i64(27, -23);
        let b = GInt::from_i64(8, 1);
        let (q, r) = a.div_rem(&b);
        assert_eq!(a, q.mul(&b).add(&r));
        assert!(r.norm() < b.norm());
    }

    #[test]
    fn gcd_of_associates_is_normalized() {
        let a = GInt::from_i64(0, 5);
        let g = a.gcd(&GInt::from_i64(5, 0));
        assert_eq!(g, GInt::from_i64(5, 0).unit_normalize());
    }

    #[test]
    fn factor_small() {
        // 5 = (2+i)(2-i) up to units.
        let (_, f) = factor(&GInt::from_i64(5, 0));
        assert_eq!(f.len(), 2);
        for (p, e) in &f {
            assert_eq!(*e, 1);
            assert_eq!(p.norm(), BigInt::from(5));
        }
        // 2 = -i (1+i)^2.
        let (_, f2) = factor(&GInt::from_i64(2, 0));
        assert_eq!(f2, vec![(GInt::from_i64(1, 1), 2)]);
        // Inert: 3.
        let (_, f3) = factor(&GInt::from_i64(9, 0));
        assert_eq!(f3, vec![(GInt::from_i64(3, 0), 2)]);
    }

    #[test]
    fn divisor_counts() {
        // 5+5i = (1+i) * 5 up to units: divisor classes 1,(1+i),(2+i),(2-i),... 2*2*2 = 8.
        let d = divisors(&GInt::from_i64(5, 5));
        assert_eq!(d.len(), 8);
        for x in &d {
            assert!(x.divides(&GInt::from_i64(5, 5)));
        }
    }
}
