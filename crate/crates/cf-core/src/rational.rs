//! Exact scalars: arbitrary-precision rationals extended with ±∞.
//!
//! Every bound endpoint in the system is an [`ExtendedRational`]. Finite
//! values are kept in lowest terms with a positive denominator (the
//! underlying `Ratio<BigInt>` maintains that), infinities are explicit
//! variants ordered below/above every finite value. No rounding happens
//! anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendedRational {
    NegInf,
    Finite(BigRational),
    PosInf,
}

pub use ExtendedRational::{NegInf, PosInf};

impl ExtendedRational {
    pub fn integer(n: impl Into<BigInt>) -> Self {
        ExtendedRational::Finite(BigRational::from_integer(n.into()))
    }

    /// Exact p/q. Panics if q = 0; q may be negative (the sign moves up).
    pub fn ratio(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Self {
        ExtendedRational::Finite(BigRational::new(p.into(), q.into()))
    }

    pub fn from_big(r: BigRational) -> Self {
        ExtendedRational::Finite(r)
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedRational::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            ExtendedRational::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtendedRational::Finite(r) if r.is_zero())
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, ExtendedRational::Finite(r) if r.is_integer())
    }

    /// ⌊x⌋ for finite x.
    pub fn floor(&self) -> Option<BigInt> {
        self.as_finite().map(|r| r.floor().to_integer())
    }

    pub fn signum(&self) -> i8 {
        match self {
            NegInf => -1,
            PosInf => 1,
            ExtendedRational::Finite(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// 1/x with the stream conventions 1/±∞ = 0 and 1/0 = +∞.
    pub fn recip(&self) -> Self {
        match self {
            NegInf | PosInf => Self::zero(),
            ExtendedRational::Finite(r) => {
                if r.is_zero() {
                    PosInf
                } else {
                    ExtendedRational::Finite(r.recip())
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        match self {
            NegInf | PosInf => PosInf,
            ExtendedRational::Finite(r) => ExtendedRational::Finite(r.abs()),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Parses "p/q", "p", "inf" or "-inf".
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        match s {
            "inf" | "+inf" => return Some(PosInf),
            "-inf" => return Some(NegInf),
            _ => {}
        }
        match s.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().ok()?;
                let q: BigInt = q.trim().parse().ok()?;
                if q.is_zero() {
                    return None;
                }
                Some(Self::ratio(p, q))
            }
            None => {
                let p: BigInt = s.parse().ok()?;
                Some(Self::integer(p))
            }
        }
    }
}

impl PartialOrd for ExtendedRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedRational {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedRational::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (PosInf, _) | (_, NegInf) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for ExtendedRational {
    type Output = ExtendedRational;
    /// Panics on ∞ − ∞ (an internal invariant violation, never user input).
    fn add(self, rhs: Self) -> Self {
        use ExtendedRational::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PosInf, NegInf) | (NegInf, PosInf) => panic!("∞ - ∞ in endpoint arithmetic"),
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
        }
    }
}

impl Neg for ExtendedRational {
    type Output = ExtendedRational;
    fn neg(self) -> Self {
        use ExtendedRational::*;
        match self {
            NegInf => PosInf,
            PosInf => NegInf,
            Finite(r) => Finite(-r),
        }
    }
}

impl Sub for ExtendedRational {
    type Output = ExtendedRational;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for ExtendedRational {
    type Output = ExtendedRational;
    /// Panics on 0 · ∞.
    fn mul(self, rhs: Self) -> Self {
        use ExtendedRational::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a * b),
            (a, b) => {
                let s = a.signum() * b.signum();
                match s {
                    1 => PosInf,
                    -1 => NegInf,
                    _ => panic!("0 · ∞ in endpoint arithmetic"),
                }
            }
        }
    }
}

impl Div for ExtendedRational {
    type Output = ExtendedRational;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => write!(f, "-inf"),
            PosInf => write!(f, "inf"),
            ExtendedRational::Finite(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl From<i64> for ExtendedRational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl From<BigInt> for ExtendedRational {
    fn from(n: BigInt) -> Self {
        Self::integer(n)
    }
}

impl From<BigRational> for ExtendedRational {
    fn from(r: BigRational) -> Self {
        Self::Finite(r)
    }
}
