//! Single-input arithmetic M(x) = (px+q)/(rx+s) on one stream.
//!
//! The matrix carries the current bound on the unread tail of its input.
//! Ingesting a term substitutes x ← k + 1/x, producing a term k transforms
//! M ← 1/(M − k); both preserve |det M| and keep the entries coprime.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::CfError;
use crate::interval::Interval;
use crate::rational::{ExtendedRational, NegInf, PosInf};
use crate::stream::{Cf, Element};
use crate::trace::EngineOpts;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homographic {
    /// Numerator coefficients (px + q).
    pub p: BigInt,
    pub q: BigInt,
    /// Denominator coefficients (rx + s).
    pub r: BigInt,
    pub s: BigInt,
    /// Current bound on the unread tail of x.
    pub input_bound: Interval,
}

impl Homographic {
    /// A fresh matrix; rejects zero determinants. Entries are reduced to
    /// gcd 1, which ingest/produce then maintain on their own.
    pub fn new(
        p: impl Into<BigInt>,
        q: impl Into<BigInt>,
        r: impl Into<BigInt>,
        s: impl Into<BigInt>,
    ) -> Result<Homographic, CfError> {
        let m = Homographic::raw(p.into(), q.into(), r.into(), s.into(), Interval::full());
        if m.det().is_zero() {
            return Err(CfError::DegenerateMatrix);
        }
        Ok(m.reduced())
    }

    pub fn identity() -> Homographic {
        Homographic::new(1, 0, 0, 1).unwrap()
    }

    pub(crate) fn raw(p: BigInt, q: BigInt, r: BigInt, s: BigInt, bound: Interval) -> Homographic {
        Homographic { p, q, r, s, input_bound: bound }
    }

    pub fn det(&self) -> BigInt {
        &self.p * &self.s - &self.q * &self.r
    }

    pub fn entries_gcd(&self) -> BigInt {
        self.p.gcd(&self.q).gcd(&self.r).gcd(&self.s)
    }

    fn reduced(mut self) -> Homographic {
        let g = self.entries_gcd();
        if !g.is_zero() && !g.is_one() {
            self.p /= &g;
            self.q /= &g;
            self.r /= &g;
            self.s /= &g;
        }
        self
    }

    /// x ← k + 1/x; the tail bound resets to [1, ∞). Ingest and produce
    /// preserve entry coprimality, so no reduction happens here.
    pub fn ingest(&self, k: &BigInt) -> Homographic {
        Homographic::raw(
            &self.q + k * &self.p,
            self.p.clone(),
            &self.s + k * &self.r,
            self.r.clone(),
            Interval::tail_domain(),
        )
    }

    /// The limit matrix after the input emitted its ∞ marker: the constant
    /// p/r. Errors when p = r = 0 (the limit would be 0/0).
    pub fn ingest_end(&self) -> Result<Homographic, CfError> {
        if self.p.is_zero() && self.r.is_zero() {
            return Err(CfError::DivisionByZero);
        }
        Ok(Homographic::raw(
            BigInt::zero(),
            self.p.clone(),
            BigInt::zero(),
            self.r.clone(),
            self.input_bound.clone(),
        )
        .reduced())
    }

    /// Emit k: M ← 1/(M − k). The input bound does not change.
    pub fn produce(&self, k: &BigInt) -> Homographic {
        Homographic::raw(
            self.r.clone(),
            self.s.clone(),
            &self.p - k * &self.r,
            &self.q - k * &self.s,
            self.input_bound.clone(),
        )
    }

    pub fn with_bound(mut self, bound: Interval) -> Homographic {
        self.input_bound = bound;
        self
    }

    fn is_constant(&self) -> bool {
        self.p.is_zero() && self.r.is_zero()
    }

    /// The range of M over the current input bound, as [min, max) of the
    /// two corner fractions; (−∞, +∞) whenever the denominator may change
    /// sign inside the bound.
    pub fn range(&self) -> Interval {
        self.range_info().interval
    }

    pub(crate) fn range_info(&self) -> RangeInfo {
        if self.is_constant() {
            if self.s.is_zero() {
                // q/0: the value is infinite; the engine resolves this
                // before consulting the range.
                return RangeInfo::full();
            }
            return RangeInfo::point(ExtendedRational::ratio(self.q.clone(), self.s.clone()));
        }
        let lo = match self.input_bound.lo() {
            ExtendedRational::Finite(r) => r,
            _ => return RangeInfo::full(),
        };
        // Corners as projective pairs (value num/den, with ∞ = 1/0):
        // M(px/qx) = (p·px + q·qx)/(r·px + s·qx). The closed lower end is
        // attainable; a finite upper end is open; the ∞ end is reached at
        // a terminal marker.
        let corner = |px: &BigInt, qx: &BigInt, attainable: bool| {
            (
                &self.p * px + &self.q * qx,
                &self.r * px + &self.s * qx,
                attainable,
            )
        };
        let c0 = corner(lo.numer(), lo.denom(), true);
        let c1 = match self.input_bound.hi() {
            ExtendedRational::Finite(u) => corner(u.numer(), u.denom(), false),
            PosInf => corner(&BigInt::from(1), &BigInt::zero(), true),
            NegInf => unreachable!("interval invariant"),
        };
        corner_range(&[c0, c1])
    }

    /// The stream of M(x), built with the interval representation.
    pub fn apply(self, x: Cf) -> Cf {
        self.apply_with(x, EngineOpts::default())
    }

    pub fn apply_with(self, x: Cf, opts: EngineOpts) -> Cf {
        let engine = HomographicEngine {
            m: self,
            input: x,
            cursor: 0,
            input_done: false,
            pending: Interval::full(),
            must_read: false,
            silent: 0,
            result: None,
            opts,
        };
        Cf::from_producer(engine)
    }
}

impl fmt::Display for Homographic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]] x in {}",
            self.p, self.q, self.r, self.s, self.input_bound
        )
    }
}

/// A computed range together with whether its supremum is actually
/// attainable. A corner at a closed lower end is attainable, and so is an
/// ∞ corner (a finite CF reaches tail = ∞ at its terminal marker); only
/// corners at an open finite upper end are not. The floor of an interval
/// whose supremum is attained must be tested closed, otherwise the engine
/// would emit a term one too low exactly on rational boundaries.
#[derive(Clone, Debug)]
pub(crate) struct RangeInfo {
    pub interval: Interval,
    pub sup_attained: bool,
}

impl RangeInfo {
    pub fn full() -> RangeInfo {
        RangeInfo { interval: Interval::full(), sup_attained: false }
    }

    pub fn point(v: ExtendedRational) -> RangeInfo {
        RangeInfo { interval: Interval::point(v), sup_attained: true }
    }

    pub fn pinned_floor(&self) -> Option<BigInt> {
        if !self.sup_attained {
            return self.interval.pinned_floor();
        }
        if self.interval.is_point() {
            return self.interval.lo().floor();
        }
        let f_lo = self.interval.lo().floor()?;
        let f_hi = self.interval.hi().floor()?;
        (f_lo == f_hi).then_some(f_lo)
    }

    /// The interval as something safe to hand out: when the supremum is
    /// attained at an integer, the half-open form would exclude the very
    /// value the next pinned term may equal, so the upper end moves past
    /// it.
    pub fn emittable(&self) -> Interval {
        if !self.sup_attained || self.interval.is_point() {
            return self.interval.clone();
        }
        match self.interval.hi() {
            ExtendedRational::Finite(hi) if hi.is_integer() => Interval::new(
                self.interval.lo().clone(),
                ExtendedRational::Finite(hi + BigRational::from_integer(1.into())),
            ),
            _ => self.interval.clone(),
        }
    }
}

/// One corner fraction: integer numerator and denominator (not reduced),
/// and whether the corner point itself is attainable.
pub(crate) type Corner = (BigInt, BigInt, bool);

/// Min/max over corner fractions with a shared-denominator-sign check.
/// Works on raw integer pairs; fractions only get reduced once, for the
/// two endpoints of the result. Shared with the two-variable engine.
pub(crate) fn corner_range(corners: &[Corner]) -> RangeInfo {
    let mut sigma = 0i8;
    for (_, d, _) in corners {
        let s = match d.sign() {
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
            num_bigint::Sign::Minus => -1,
        };
        if s != 0 {
            if sigma == 0 {
                sigma = s;
            } else if sigma != s {
                return RangeInfo::full();
            }
        }
    }
    if sigma == 0 {
        // Denominator identically zero at every corner.
        return RangeInfo::full();
    }
    // Normalize so denominators are ≥ 0; then n1/d1 < n2/d2 ⟺ n1·d2 < n2·d1
    // (infinite corners get a ±∞ class of their own).
    #[derive(Clone)]
    enum V {
        NegInf,
        Fin(BigInt, BigInt),
        PosInf,
    }
    let mut values: Vec<(V, bool)> = Vec::with_capacity(corners.len());
    for (n, d, attainable) in corners {
        let (n, d) = if sigma < 0 { (-n, -d) } else { (n.clone(), d.clone()) };
        if d.is_zero() {
            if n.is_zero() {
                continue; // 0/0 corners carry no information
            }
            let v = if n.is_positive() { V::PosInf } else { V::NegInf };
            values.push((v, *attainable));
        } else {
            values.push((V::Fin(n, d), *attainable));
        }
    }
    if values.is_empty() {
        return RangeInfo::full();
    }
    let cmp = |a: &V, b: &V| -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (a, b) {
            (V::NegInf, V::NegInf) | (V::PosInf, V::PosInf) => Equal,
            (V::NegInf, _) | (_, V::PosInf) => Less,
            (V::PosInf, _) | (_, V::NegInf) => Greater,
            (V::Fin(n1, d1), V::Fin(n2, d2)) => (n1 * d2).cmp(&(n2 * d1)),
        }
    };
    let (mut lo, mut hi) = (values[0].clone(), values[0].clone());
    for v in values.into_iter().skip(1) {
        match cmp(&v.0, &lo.0) {
            std::cmp::Ordering::Less => lo = v.clone(),
            _ => {}
        }
        match cmp(&v.0, &hi.0) {
            std::cmp::Ordering::Greater => hi = v,
            std::cmp::Ordering::Equal => {
                if v.1 {
                    hi = v;
                }
            }
            _ => {}
        }
    }
    let to_er = |v: V| match v {
        V::NegInf => NegInf,
        V::PosInf => PosInf,
        V::Fin(n, d) => ExtendedRational::Finite(BigRational::new(n, d)),
    };
    let sup_attained = hi.1;
    RangeInfo {
        interval: Interval::new(to_er(lo.0), to_er(hi.0)),
        sup_attained,
    }
}

/// How often an ambiguous state may stay silent before the engine emits
/// its current range anyway, so downstream iteration caps can fire.
/// Streams that narrow emit long before this; streams that cannot decide
/// anything (dividing by a value indistinguishable from zero, say) emit
/// their unchanged bound at this cadence, and every forced emission costs
/// its consumer one counted pull.
pub(crate) const FORCED_EMIT_EVERY: u32 = 8;

struct HomographicEngine {
    m: Homographic,
    input: Cf,
    cursor: usize,
    input_done: bool,
    /// Last emitted bound (or the a-priori domain) of the current position.
    pending: Interval,
    /// Deferred lockstep read belonging to the element just emitted.
    must_read: bool,
    silent: u32,
    result: Option<Element>,
    opts: EngineOpts,
}

impl crate::stream::Producer for HomographicEngine {
    fn next_element(&mut self) -> Element {
        loop {
            if let Some(el) = &self.result {
                return el.clone();
            }
            if self.must_read {
                self.must_read = false;
                self.read_input();
                continue;
            }
            if self.m.is_constant() && self.m.s.is_zero() {
                // Constant with zero denominator: the remaining value is
                // 0/0 (a division by zero) or ±∞ (the tail is exhausted).
                let el = if self.m.q.is_zero() {
                    Element::Fault(CfError::DivisionByZero)
                } else {
                    Element::End
                };
                self.result = Some(el.clone());
                return el;
            }
            let info = self.m.range_info();
            if let Some(k) = info.pinned_floor() {
                self.m = self.m.produce(&k);
                self.opts.emit(|| format!("produce {k} -> {}", self.m));
                self.pending = Interval::tail_domain();
                self.silent = 0;
                return Element::term(k);
            }
            // Emit whenever the range properly narrows the previously
            // emitted bound (initially the a-priori domain). A bound
            // shaped exactly like [a, a+1) would read as an explicit term,
            // so it stays silent until the floor is actually pinned.
            let range = info.emittable();
            let emit = if range.is_full() || range.as_term().is_some() {
                false
            } else {
                let candidate = range.intersect(&self.pending);
                if candidate != self.pending
                    && candidate.as_term().is_none()
                    && !candidate.is_point()
                {
                    self.pending = candidate;
                    true
                } else {
                    false
                }
            };
            let forced =
                !emit && self.silent >= FORCED_EMIT_EVERY && self.pending.as_term().is_none();
            if emit || forced {
                let out = self.pending.clone();
                self.silent = 0;
                self.must_read = true;
                return Element::Bound(out);
            }
            self.silent += 1;
            self.read_input();
        }
    }
}

impl HomographicEngine {
    fn read_input(&mut self) {
        if self.input_done {
            return;
        }
        let el = self.input.get(self.cursor);
        self.cursor += 1;
        match el {
            Element::Bound(b) => match b.as_term() {
                Some(k) => {
                    self.m = self.m.ingest(&k);
                    self.opts.emit(|| format!("ingest {k} -> {}", self.m));
                }
                None => {
                    self.m.input_bound = b;
                }
            },
            Element::End => {
                self.input_done = true;
                match self.m.ingest_end() {
                    Ok(m) => {
                        self.m = m;
                        self.opts.emit(|| format!("ingest inf -> {}", self.m));
                    }
                    Err(e) => self.result = Some(Element::Fault(e)),
                }
            }
            Element::Fault(e) => {
                self.input_done = true;
                self.result = Some(Element::Fault(e));
            }
        }
    }
}
