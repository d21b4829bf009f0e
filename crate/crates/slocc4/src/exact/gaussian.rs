use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact element of Q(i): re + im*i with rational parts.
///
/// Total order is lexicographic on (re, im); it is used for deterministic
/// tie-breaking and serialization, not as a field-compatible order.
#[derive(Clone, PartialEq, Eq)]
pub struct Gaussian {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gaussian {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Gaussian { re, im }
    }

    pub fn from_i64(re: i64, im: i64) -> Self {
        Gaussian {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Gaussian {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::from_i64(0, 0)
    }

    pub fn one() -> Self {
        Self::from_i64(1, 0)
    }

    pub fn i() -> Self {
        Self::from_i64(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Gaussian {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// |z|^2 = re^2 + im^2, a nonnegative rational.
    pub fn norm(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Singular("division by zero".into()));
        }
        let n = self.norm();
        Ok(Gaussian {
            re: &self.re / &n,
            im: -&self.im / &n,
        })
    }

    /// True when both parts are integers.
    pub fn is_gaussian_integer(&self) -> bool {
        self.re.is_integer() && self.im.is_integer()
    }

    /// A square root in Q(i), if one exists in the field.
    ///
    /// Complete: z has a root in Q(i) iff this returns Some. The principal
    /// choice has re > 0, or re = 0 and im >= 0.
    pub fn sqrt(&self) -> Option<Gaussian> {
        if self.is_zero() {
            return Some(Gaussian::zero());
        }
        if self.im.is_zero() {
            // Real case: sqrt(a) or i*sqrt(-a).
            return if self.re.is_negative() {
                rational_sqrt(&(-self.re.clone())).map(|y| Gaussian {
                    re: BigRational::zero(),
                    im: y,
                })
            } else {
                rational_sqrt(&self.re).map(|x| Gaussian {
                    re: x,
                    im: BigRational::zero(),
                })
            };
        }
        // (x+yi)^2 = a+bi with b != 0 requires s = sqrt(a^2+b^2) rational,
        // x^2 = (a+s)/2 a rational square, y = b/(2x).
        let s = rational_sqrt(&self.norm())?;
        let two = BigRational::from_integer(BigInt::from(2));
        let x2 = (&self.re + &s) / &two;
        let x = rational_sqrt(&x2)?;
        if x.is_zero() {
            return None;
        }
        let y = &self.im / &(&x * &two);
        let root = Gaussian { re: x, im: y };
        debug_assert_eq!(&root * &root, *self);
        Some(root)
    }
}

/// sqrt of a nonnegative rational when it is rational; None otherwise.
pub fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(BigRational::zero());
    }
    let ns = q.numer().sqrt();
    let ds = q.denom().sqrt();
    if &(&ns * &ns) == q.numer() && &(&ds * &ds) == q.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

impl Hash for Gaussian {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.re.hash(state);
        self.im.hash(state);
    }
}

impl PartialOrd for Gaussian {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gaussian {
    fn cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

macro_rules! binop {
    ($trait:ident, $fn:ident, $op:tt) => {
        impl $trait for &Gaussian {
            type Output = Gaussian;
            fn $fn(self, rhs: &Gaussian) -> Gaussian {
                Gaussian {
                    re: &self.re $op &rhs.re,
                    im: &self.im $op &rhs.im,
                }
            }
        }
        impl $trait for Gaussian {
            type Output = Gaussian;
            fn $fn(self, rhs: Gaussian) -> Gaussian {
                (&self).$fn(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl AddAssign<&Gaussian> for Gaussian {
    fn add_assign(&mut self, rhs: &Gaussian) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&Gaussian> for Gaussian {
    fn sub_assign(&mut self, rhs: &Gaussian) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl Mul for &Gaussian {
    type Output = Gaussian;
    fn mul(self, rhs: &Gaussian) -> Gaussian {
        Gaussian {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Mul for Gaussian {
    type Output = Gaussian;
    fn mul(self, rhs: Gaussian) -> Gaussian {
        (&self) * (&rhs)
    }
}

impl MulAssign<&Gaussian> for Gaussian {
    fn mul_assign(&mut self, rhs: &Gaussian) {
        *self = (&*self) * rhs;
    }
}

impl Div for &Gaussian {
    type Output = Gaussian;
    fn div(self, rhs: &Gaussian) -> Gaussian {
        self * &rhs.inv().expect("division by zero")
    }
}

impl Div for Gaussian {
    type Output = Gaussian;
    fn div(self, rhs: Gaussian) -> Gaussian {
        (&self) / (&rhs)
    }
}

impl Neg for &Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        Gaussian {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl Neg for Gaussian {
    type Output = Gaussian;
    fn neg(self) -> Gaussian {
        -(&self)
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        let mag = self.im.abs();
        let unit = mag.is_one();
        if self.re.is_zero() {
            return match (self.im.is_negative(), unit) {
                (false, true) => write!(f, "i"),
                (true, true) => write!(f, "-i"),
                (false, false) => write!(f, "{}i", mag),
                (true, false) => write!(f, "-{}i", mag),
            };
        }
        let sign = if self.im.is_negative() { "-" } else { "+" };
        if unit {
            write!(f, "{}{}i", self.re, sign)
        } else {
            write!(f, "{}{}{}i", self.re, sign, mag)
        }
    }
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Gaussian {
    type Err = Error;

    /// Accepts "3", "-1/2", "2+1/3i", "i", "-i", "2-i", "3i", "0".
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::Parse("empty scalar literal".into()));
        }
        if let Some(body) = t.strip_suffix('i') {
            // Find the sign separating real and imaginary parts: the last
            // '+'/'-' not at the start and not immediately after '/'.
            let bytes = body.as_bytes();
            let mut split = None;
            for (k, &b) in bytes.iter().enumerate().skip(1) {
                if (b == b'+' || b == b'-') && bytes[k - 1] != b'/' {
                    split = Some(k);
                }
            }
            match split {
                Some(k) => {
                    let re = parse_rational(&body[..k])?;
                    let imtext = &body[k..];
                    let im = match imtext {
                        "+" => BigRational::one(),
                        "-" => -BigRational::one(),
                        _ => parse_rational(imtext)?,
                    };
                    Ok(Gaussian { re, im })
                }
                None => {
                    let im = match body {
                        "" => BigRational::one(),
                        "-" => -BigRational::one(),
                        "+" => BigRational::one(),
                        _ => parse_rational(body)?,
                    };
                    Ok(Gaussian {
                        re: BigRational::zero(),
                        im,
                    })
                }
            }
        } else {
            Ok(Gaussian {
                re: parse_rational(t)?,
                im: BigRational::zero(),
            })
        }
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational literal".into()));
    }
    let (num_text, den_text) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t, None),
    };
    let num: BigInt = num_text
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {num_text:?}")))?;
    let den: BigInt = match den_text {
        Some(d) => d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator {d:?}")))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {t:?}")));
    }
    Ok(BigRational::new(num, den))
}

impl serde::Serialize for Gaussian {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Gaussian {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    #[test]
    fn literal_round_trips() {
        for text in ["3", "-1/2", "2+1/3i", "i", "-i", "0", "2-i", "-2/3+i", "5i", "-5/7i"] {
            let z = g(text);
            assert_eq!(z.to_string(), text, "round trip of {text}");
            assert_eq!(g(&z.to_string()), z);
        }
    }

    #[test]
    fn lenient_parse_strict_emit() {
        assert_eq!(g(" 1+2i "), g("1+2i"));
        assert_eq!(g("+3"), g("3"));
        assert_eq!(g("2/4"), g("1/2"));
        assert_eq!(g("-0"), g("0"));
        assert_eq!(g("1/2i"), Gaussian::new(BigRational::zero(), BigRational::new(1.into(), 2.into())));
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in ["", "x", "1//2", "1/0", "i2", "++1", "2+3j", "1 + 2i"] {
            assert!(bad.parse::<Gaussian>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn field_ops() {
        let a = g("2-i");
        let b = g("1+3i");
        assert_eq!(&a + &b, g("3+2i"));
        assert_eq!(&a * &b, g("5+5i"));
        let q = &a / &b;
        assert_eq!(&q * &b, a);
        assert_eq!(a.conj(), g("2+i"));
        assert_eq!(g("i").inv().unwrap(), g("-i"));
    }

    #[test]
    fn order_is_lex_re_then_im() {
        assert!(g("-1") < g("0"));
        assert!(g("1-i") < g("1"));
        assert!(g("1") < g("1+i"));
        assert!(g("-2") < g("-1/2"));
    }

    #[test]
    fn sqrt_complete_cases() {
        assert_eq!(g("9/4").sqrt().unwrap(), g("3/2"));
        assert_eq!(g("-4").sqrt().unwrap(), g("2i"));
        assert_eq!(g("2i").sqrt().unwrap(), g("1+i"));
        // -5+12i = (2+3i)^2.
        let r = g("-5+12i").sqrt().unwrap();
        assert_eq!(&r * &r, g("-5+12i"));
        assert!(g("2").sqrt().is_none());
        assert!(g("1+i").sqrt().is_none());
        assert!(g("3+4i").sqrt().is_some());
    }

    #[test]
    fn serde_as_string() {
        let z = g("2+1/3i");
        let json = serde_json::to_string(&z).unwrap();
        assert_eq!(json, "\"2+1/3i\"");
        let back: Gaussian = serde_json::from_str(&json).unwrap();
        assert_eq!(back, z);
    }
}
