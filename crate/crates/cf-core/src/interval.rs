//! Half-open intervals [lo, hi) over extended rationals.
//!
//! An explicit CF term a is encoded as [a, a+1); anything else is an
//! ambiguous bound on a tail. A degenerate interval with lo = hi is used
//! internally for exactly-known constants and is treated as the closed
//! point {lo}; such points are produced while draining exhausted rational
//! inputs and are never emitted into streams.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{ExtendedRational, NegInf, PosInf};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: ExtendedRational,
    hi: ExtendedRational,
}

impl Interval {
    /// Requires lo ≤ hi; lo = hi is the point case.
    pub fn new(lo: ExtendedRational, hi: ExtendedRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi})");
        Interval { lo, hi }
    }

    /// The no-information bound (−∞, +∞).
    pub fn full() -> Self {
        Interval { lo: NegInf, hi: PosInf }
    }

    /// The explicit term a, i.e. [a, a+1).
    pub fn term(a: impl Into<BigInt>) -> Self {
        let a = a.into();
        Interval {
            lo: ExtendedRational::integer(a.clone()),
            hi: ExtendedRational::integer(a + BigInt::one()),
        }
    }

    pub fn point(v: ExtendedRational) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    /// The a-priori domain of a CF tail after a term: [1, +∞).
    pub fn tail_domain() -> Self {
        Interval { lo: ExtendedRational::one(), hi: PosInf }
    }

    pub fn lo(&self) -> &ExtendedRational {
        &self.lo
    }

    pub fn hi(&self) -> &ExtendedRational {
        &self.hi
    }

    pub fn is_full(&self) -> bool {
        self.lo == NegInf && self.hi == PosInf
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> ExtendedRational {
        self.hi.clone() - self.lo.clone()
    }

    pub fn has_finite_width(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Some(a) iff this is the explicit term encoding [a, a+1).
    pub fn as_term(&self) -> Option<BigInt> {
        let lo = self.lo.as_finite()?;
        if !lo.is_integer() {
            return None;
        }
        let hi = self.hi.as_finite()?;
        let a = lo.to_integer();
        if hi.is_integer() && hi.to_integer() == &a + BigInt::one() {
            Some(a)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &ExtendedRational) -> bool {
        if self.is_point() {
            return x == &self.lo;
        }
        &self.lo <= x && x < &self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Closure overlap: two sound bounds on the same value always satisfy
    /// this, even when they merely touch (the value then sits exactly on
    /// the shared endpoint, which half-open emission cannot express).
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Intersection of the closures; touching intervals give the shared
    /// endpoint as a point. Panics when genuinely disjoint: overlapping
    /// bounds on the same value are a structural invariant, so that is a
    /// bug, not a user error.
    pub fn intersect(&self, other: &Interval) -> Interval {
        assert!(
            self.intersects(other),
            "empty interval intersection: {self} ∩ {other}"
        );
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        Interval::new(lo, hi)
    }

    /// Outward rounding of both endpoints to dyadic rationals, inflating
    /// the width by at most 1/32 of itself. This caps the size of the
    /// numerators and denominators at roughly the precision the interval
    /// actually carries, which keeps the corner arithmetic of nested
    /// engines from compounding endpoint complexity level over level.
    pub fn coarsen(&self) -> Interval {
        use num_rational::BigRational;
        let (ExtendedRational::Finite(lo), ExtendedRational::Finite(hi)) = (&self.lo, &self.hi)
        else {
            return self.clone();
        };
        let width = hi - lo;
        if width.is_zero() {
            return self.clone();
        }
        // 2^k ≥ 64/width, so the two roundings add at most width/32.
        let inv = width.recip() * BigRational::from_integer(64.into());
        let k = (inv.ceil().to_integer().bits() + 1) as u32;
        if k >= 4096 {
            // Absurd precision: leave the interval alone.
            return self.clone();
        }
        let scale = BigInt::from(1) << k;
        let scale_r = BigRational::from_integer(scale.clone());
        let lo2 = BigRational::new((lo * &scale_r).floor().to_integer(), scale.clone());
        let hi2 = BigRational::new((hi * &scale_r).ceil().to_integer(), scale);
        Interval::new(
            ExtendedRational::Finite(lo2),
            ExtendedRational::Finite(hi2),
        )
    }

    /// The single integer k with ⌊v⌋ = k for every v in the interval, when
    /// it exists. For a half-open upper end an integral hi is reached only
    /// from below, so its adjusted floor is hi − 1.
    pub fn pinned_floor(&self) -> Option<BigInt> {
        if self.is_point() {
            return self.lo.floor();
        }
        let f_lo = self.lo.floor()?;
        let hi = self.hi.as_finite()?;
        let f_hi = if hi.is_integer() {
            hi.to_integer() - BigInt::one()
        } else {
            hi.floor().to_integer()
        };
        (f_lo == f_hi).then_some(f_lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = self.as_term() {
            write!(f, "[{a}, {})", &a + 1)
        } else {
            write!(f, "[{}, {})", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(
            ExtendedRational::ratio(a.0, a.1),
            ExtendedRational::ratio(b.0, b.1),
        )
    }

    #[test]
    fn intersect_overlap() {
        // [1, 3) ∩ [2, 5) = [2, 3)
        assert_eq!(iv((1, 1), (3, 1)).intersect(&iv((2, 1), (5, 1))), iv((2, 1), (3, 1)));
    }

    #[test]
    fn intersect_with_full_is_identity() {
        let b = iv((16, 9), (9, 4));
        assert_eq!(b.intersect(&Interval::full()), b);
        assert_eq!(Interval::full().intersect(&b), b);
    }

    #[test]
    fn intersect_nested_upper() {
        // [1, 1 + 4/7) ∩ [1, 25/24) = [1, 25/24): 25/24 < 11/7
        let a = iv((1, 1), (11, 7));
        let b = iv((1, 1), (25, 24));
        assert_eq!(a.intersect(&b), b);
    }

    #[test]
    #[should_panic(expected = "empty interval intersection")]
    fn intersect_empty_panics() {
        let _ = iv((1, 1), (2, 1)).intersect(&iv((3, 1), (4, 1)));
    }

    #[test]
    fn term_detection() {
        assert_eq!(Interval::term(3).as_term(), Some(BigInt::from(3)));
        assert_eq!(iv((16, 9), (9, 4)).as_term(), None);
        assert_eq!(iv((2, 1), (5, 2)).as_term(), None);
        assert_eq!(Interval::term(-2).as_term(), Some(BigInt::from(-2)));
    }

    #[test]
    fn pinned_floor_adjusts_open_end() {
        // [3/2, 2): every value has floor 1 even though ⌊2⌋ = 2.
        assert_eq!(iv((3, 2), (2, 1)).pinned_floor(), Some(BigInt::from(1)));
        // [3/2, 5/2) straddles 2.
        assert_eq!(iv((3, 2), (5, 2)).pinned_floor(), None);
        // [1, 2) is the term 1.
        assert_eq!(Interval::term(1).pinned_floor(), Some(BigInt::from(1)));
        assert_eq!(Interval::full().pinned_floor(), None);
        let p = Interval::point(ExtendedRational::ratio(7, 2));
        assert_eq!(p.pinned_floor(), Some(BigInt::from(3)));
    }

    #[test]
    fn width_and_containment() {
        let b = iv((16, 9), (9, 4));
        assert_eq!(b.width(), ExtendedRational::ratio(17, 36));
        assert!(b.contains(&ExtendedRational::integer(2)));
        assert!(!b.contains(&ExtendedRational::ratio(9, 4)));
        assert!(b.contains(&ExtendedRational::ratio(16, 9)));
        assert!(Interval::full().contains(&ExtendedRational::integer(-5)));
    }
}
