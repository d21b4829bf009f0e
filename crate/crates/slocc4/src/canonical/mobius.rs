//! Fractional-linear maps on the projective eigenvalue line. The qubit-side
//! operator [[a,b],[c,d]] mixing a matrix pair moves each generalized
//! eigenvalue by lambda -> (c + d*lambda)/(a + b*lambda); this module keeps
//! the two pictures in sync.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Gaussian};

/// Point of the projective line: a generalized eigenvalue.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExtEig {
    Infinite,
    Finite(Gaussian),
}

impl ExtEig {
    pub fn finite(&self) -> Option<&Gaussian> {
        match self {
            ExtEig::Infinite => None,
            ExtEig::Finite(g) => Some(g),
        }
    }
}

/// Infinity sorts before every finite value; finite values use field order.
impl Ord for ExtEig {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtEig::Infinite, ExtEig::Infinite) => Ordering::Equal,
            (ExtEig::Infinite, ExtEig::Finite(_)) => Ordering::Less,
            (ExtEig::Finite(_), ExtEig::Infinite) => Ordering::Greater,
            (ExtEig::Finite(x), ExtEig::Finite(y)) => x.cmp(y),
        }
    }
}

impl PartialOrd for ExtEig {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtEig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtEig::Infinite => write!(f, "inf"),
            ExtEig::Finite(g) => write!(f, "{g}"),
        }
    }
}

/// lambda -> (c + d*lambda)/(a + b*lambda) with ad - bc != 0.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MobiusMap {
    pub a: Gaussian,
    pub b: Gaussian,
    pub c: Gaussian,
    pub d: Gaussian,
}

impl MobiusMap {
    pub fn new(a: Gaussian, b: Gaussian, c: Gaussian, d: Gaussian) -> Result<Self> {
        let m = MobiusMap { a, b, c, d };
        if m.det().is_zero() {
            return Err(Error::Singular("Mobius map with vanishing determinant".into()));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        MobiusMap {
            a: Gaussian::one(),
            b: Gaussian::zero(),
            c: Gaussian::zero(),
            d: Gaussian::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        // Projectively: b = c = 0 and a = d.
        self.b.is_zero() && self.c.is_zero() && self.a == self.d
    }

    pub fn det(&self) -> Gaussian {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    /// The 2x2 operator whose pair-mixing action realizes this map.
    pub fn induced_t(&self) -> ExactMatrix {
        ExactMatrix::from_rows(vec![
            vec![self.a.clone(), self.b.clone()],
            vec![self.c.clone(), self.d.clone()],
        ])
        .unwrap()
    }

    pub fn from_t(t: &ExactMatrix) -> Result<Self> {
        if t.rows != 2 || t.cols != 2 {
            return Err(Error::DimensionMismatch("Mobius operator must be 2x2".into()));
        }
        MobiusMap::new(t.at(0, 0).clone(), t.at(0, 1).clone(), t.at(1, 0).clone(), t.at(1, 1).clone())
    }

    pub fn apply(&self, x: &ExtEig) -> ExtEig {
        match x {
            ExtEig::Infinite => {
                if self.b.is_zero() {
                    ExtEig::Infinite
                } else {
                    ExtEig::Finite(self.d.clone() / self.b.clone())
                }
            }
            ExtEig::Finite(l) => {
                let den = &self.a + &(&self.b * l);
                if den.is_zero() {
                    ExtEig::Infinite
                } else {
                    ExtEig::Finite((&self.c + &(&self.d * l)) / den)
                }
            }
        }
    }

    /// self after other.
    pub fn compose(&self, other: &Self) -> Self {
        MobiusMap {
            a: &(&self.a * &other.a) + &(&self.b * &other.c),
            b: &(&self.a * &other.b) + &(&self.b * &other.d),
            c: &(&self.c * &other.a) + &(&self.d * &other.c),
            d: &(&self.c * &other.b) + &(&self.d * &other.d),
        }
    }

    pub fn inverse(&self) -> Self {
        MobiusMap { a: self.d.clone(), b: -self.b.clone(), c: -self.c.clone(), d: self.a.clone() }
    }

    /// The unique map sending (x, y, z) to (inf, 0, 1); inputs must be
    /// pairwise distinct.
    pub fn three_point_map(x: &ExtEig, y: &ExtEig, z: &ExtEig) -> Result<Self> {
        use ExtEig::*;
        if x == y || y == z || x == z {
            return Err(Error::Singular("coincident anchor points".into()));
        }
        let m = match (x, y, z) {
            (Finite(x), Finite(y), Finite(z)) => {
                // lambda -> ((lambda - y)(z - x)) / ((lambda - x)(z - y))
                let zx = z - x;
                let zy = z - y;
                MobiusMap { a: -&(x * &zy), b: zy, c: -&(y * &zx), d: zx }
            }
            (Infinite, Finite(y), Finite(z)) => MobiusMap {
                a: z - y,
                b: Gaussian::zero(),
                c: -y.clone(),
                d: Gaussian::one(),
            },
            (Finite(x), Infinite, Finite(z)) => MobiusMap {
                a: -x.clone(),
                b: Gaussian::one(),
                c: z - x,
                d: Gaussian::zero(),
            },
            (Finite(x), Finite(y), Infinite) => MobiusMap {
                a: -x.clone(),
                b: Gaussian::one(),
                c: -y.clone(),
                d: Gaussian::one(),
            },
            _ => unreachable!("distinct points cannot repeat infinity"),
        };
        debug_assert!(!m.det().is_zero());
        Ok(m)
    }

    /// Sends (x, y) to (inf, 0), the partial normalization used when only
    /// two distinct eigenvalues exist.
    pub fn two_point_map(x: &ExtEig, y: &ExtEig) -> Result<Self> {
        use ExtEig::*;
        if x == y {
            return Err(Error::Singular("coincident anchor points".into()));
        }
        Ok(match (x, y) {
            (Finite(x), Finite(y)) => MobiusMap {
                a: -x.clone(),
                b: Gaussian::one(),
                c: -y.clone(),
                d: Gaussian::one(),
            },
            (Infinite, Finite(y)) => MobiusMap {
                a: Gaussian::one(),
                b: Gaussian::zero(),
                c: -y.clone(),
                d: Gaussian::one(),
            },
            (Finite(x), Infinite) => MobiusMap {
                a: -x.clone(),
                b: Gaussian::one(),
                c: Gaussian::one(),
                d: Gaussian::zero(),
            },
            _ => unreachable!(),
        })
    }

    /// Sends x to inf; identity when x already is.
    pub fn one_point_map(x: &ExtEig) -> Self {
        match x {
            ExtEig::Infinite => MobiusMap::identity(),
            ExtEig::Finite(x) => MobiusMap {
                a: -x.clone(),
                b: Gaussian::one(),
                c: Gaussian::one(),
                d: Gaussian::zero(),
            },
        }
    }
}

/// The orbit of a free invariant under the residual symmetry group
/// {lambda, 1/lambda, 1-lambda, lambda/(lambda-1), 1/(1-lambda),
/// (lambda-1)/lambda}, as a sorted deduplicated list.
pub fn residual_orbit(lambda: &Gaussian) -> Result<Vec<Gaussian>> {
    if lambda.is_zero() || *lambda == Gaussian::one() {
        return Err(Error::DegenerateLambda(lambda.to_string()));
    }
    let one = Gaussian::one();
    let lm1 = lambda - &one;
    let mut orbit = vec![
        lambda.clone(),
        one.clone() / lambda.clone(),
        -lm1.clone(),
        lambda / &lm1,
        -&(one / lm1.clone()),
        lm1.clone() / lambda.clone(),
    ];
    orbit.sort();
    orbit.dedup();
    Ok(orbit)
}

/// Canonical representative stored in signatures.
pub fn orbit_min(lambda: &Gaussian) -> Result<Gaussian> {
    Ok(residual_orbit(lambda)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    fn fin(s: &str) -> ExtEig {
        ExtEig::Finite(g(s))
    }

    #[test]
    fn three_point_map_hits_anchors() {
        let cases = [
            (fin("3"), fin("-1"), fin("1/2")),
            (ExtEig::Infinite, fin("0"), fin("5")),
            (fin("2"), ExtEig::Infinite, fin("i")),
            (fin("2"), fin("i"), ExtEig::Infinite),
        ];
        for (x, y, z) in cases {
            let m = MobiusMap::three_point_map(&x, &y, &z).unwrap();
            assert_eq!(m.apply(&x), ExtEig::Infinite);
            assert_eq!(m.apply(&y), fin("0"));
            assert_eq!(m.apply(&z), fin("1"));
        }
    }

    #[test]
    fn compose_and_inverse() {
        let m = MobiusMap::three_point_map(&fin("2"), &fin("3"), &fin("5")).unwrap();
        let inv = m.inverse();
        let id = m.compose(&inv);
        assert!(id.is_identity());
        // compose(m1, m2) applies m2 first.
        let n = MobiusMap::two_point_map(&fin("0"), &fin("1")).unwrap();
        let both = n.compose(&m);
        let x = fin("7");
        assert_eq!(both.apply(&x), n.apply(&m.apply(&x)));
    }

    #[test]
    fn induced_t_round_trip() {
        let m = MobiusMap::new(g("1"), g("2"), g("i"), g("0")).unwrap();
        let back = MobiusMap::from_t(&m.induced_t()).unwrap();
        assert_eq!(back, m);
        assert!(MobiusMap::new(g("1"), g("2"), g("2"), g("4")).is_err());
    }

    #[test]
    fn apply_handles_poles() {
        // lambda -> 1/lambda: a=0, b=1, c=1, d=0.
        let inv = MobiusMap::new(g("0"), g("1"), g("1"), g("0")).unwrap();
        assert_eq!(inv.apply(&fin("0")), ExtEig::Infinite);
        assert_eq!(inv.apply(&ExtEig::Infinite), fin("0"));
        assert_eq!(inv.apply(&fin("2")), fin("1/2"));
    }

    #[test]
    fn orbit_of_two_collapses_to_three() {
        let o = residual_orbit(&g("2")).unwrap();
        assert_eq!(o, vec![g("-1"), g("1/2"), g("2")]);
        assert_eq!(residual_orbit(&g("-1")).unwrap(), o);
        assert_eq!(orbit_min(&g("1/2")).unwrap(), g("-1"));
    }

    #[test]
    fn orbit_of_i_has_six_members_and_is_closed() {
        let o = residual_orbit(&g("i")).unwrap();
        assert_eq!(o.len(), 6);
        for member in &o {
            let inv = Gaussian::one() / member.clone();
            let refl = &Gaussian::one() - member;
            assert!(o.contains(&inv));
            assert!(o.contains(&refl));
        }
    }

    #[test]
    fn orbit_min_is_orbit_invariant() {
        for s in ["-1/2", "3", "i", "2+i"] {
            let base = orbit_min(&g(s)).unwrap();
            for member in residual_orbit(&g(s)).unwrap() {
                assert_eq!(orbit_min(&member).unwrap(), base);
            }
        }
    }

    #[test]
    fn degenerate_values_rejected() {
        assert!(matches!(residual_orbit(&g("0")), Err(Error::DegenerateLambda(_))));
        assert!(matches!(residual_orbit(&g("1")), Err(Error::DegenerateLambda(_))));
    }
}
