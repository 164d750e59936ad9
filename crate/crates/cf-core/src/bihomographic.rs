//! Two-input arithmetic z = M(x, y) on interval streams.
//!
//! M is (axy + bx + cy + d)/(exy + fx + gy + h) with the current bounds
//! I_x, I_y on the unread input tails. Each ambiguous iteration reads one
//! element from each input in lockstep; when the range of M over
//! I_x × I_y pins a floor, a term is produced without reading. Ambiguous
//! ranges are emitted under a narrowing policy so the output always keeps
//! shrinking, and ∞ ingestion follows the limit rules, flagging anomalous
//! limits as division by zero.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::CfError;
use crate::homographic::{corner_range, Corner, RangeInfo, FORCED_EMIT_EVERY};
use crate::interval::Interval;
use crate::rational::{ExtendedRational, NegInf, PosInf};
use crate::stream::{Cf, Element};
use crate::trace::EngineOpts;

/// Coefficient order within each row: (xy, x, y, 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bihomographic {
    pub num: [BigInt; 4],
    pub den: [BigInt; 4],
    pub x_bound: Interval,
    pub y_bound: Interval,
}

impl Bihomographic {
    pub fn new(num: [i64; 4], den: [i64; 4]) -> Result<Bihomographic, CfError> {
        let m = Bihomographic {
            num: num.map(BigInt::from),
            den: den.map(BigInt::from),
            x_bound: Interval::full(),
            y_bound: Interval::full(),
        };
        if m.num.iter().chain(&m.den).all(Zero::is_zero) {
            return Err(CfError::DegenerateMatrix);
        }
        Ok(m.reduced())
    }

    /// Initial matrices for the four arithmetic operations.
    pub fn add_matrix() -> Bihomographic {
        Bihomographic::new([0, 1, 1, 0], [0, 0, 0, 1]).unwrap()
    }

    pub fn sub_matrix() -> Bihomographic {
        Bihomographic::new([0, 1, -1, 0], [0, 0, 0, 1]).unwrap()
    }

    pub fn mul_matrix() -> Bihomographic {
        Bihomographic::new([1, 0, 0, 0], [0, 0, 0, 1]).unwrap()
    }

    pub fn div_matrix() -> Bihomographic {
        Bihomographic::new([0, 1, 0, 0], [0, 0, 1, 0]).unwrap()
    }

    /// Entries are reduced here once; ingest and produce preserve entry
    /// coprimality on their own (any common divisor of the new entries
    /// divides all of the old ones), so the engine's hot path never
    /// recomputes the gcd. Collapses take entry subsets and reduce again.
    pub(crate) fn from_rows(num: [BigInt; 4], den: [BigInt; 4]) -> Bihomographic {
        Bihomographic { num, den, x_bound: Interval::full(), y_bound: Interval::full() }
            .reduced()
    }

    fn raw(&self, num: [BigInt; 4], den: [BigInt; 4]) -> Bihomographic {
        Bihomographic {
            num,
            den,
            x_bound: self.x_bound.clone(),
            y_bound: self.y_bound.clone(),
        }
    }

    fn reduced(mut self) -> Bihomographic {
        let mut g = BigInt::zero();
        for e in self.num.iter().chain(&self.den) {
            g = num_integer::gcd(g, e.clone());
        }
        if !g.is_zero() && !g.is_one() {
            for e in self.num.iter_mut().chain(self.den.iter_mut()) {
                *e /= &g;
            }
        }
        self
    }

    pub fn entries_gcd(&self) -> BigInt {
        let mut g = BigInt::zero();
        for e in self.num.iter().chain(&self.den) {
            g = num_integer::gcd(g, e.clone());
        }
        g
    }

    pub fn depends_on_x(&self) -> bool {
        !self.num[0].is_zero()
            || !self.num[1].is_zero()
            || !self.den[0].is_zero()
            || !self.den[1].is_zero()
    }

    pub fn depends_on_y(&self) -> bool {
        !self.num[0].is_zero()
            || !self.num[2].is_zero()
            || !self.den[0].is_zero()
            || !self.den[2].is_zero()
    }

    /// x ← s + 1/x; I_x resets to [1, ∞).
    pub fn ingest_x(&self, s: &BigInt) -> Bihomographic {
        let [a, b, c, d] = &self.num;
        let [e, f, g, h] = &self.den;
        let mut m = self.raw(
            [s * a + c, s * b + d, a.clone(), b.clone()],
            [s * e + g, s * f + h, e.clone(), f.clone()],
        );
        m.x_bound = Interval::tail_domain();
        m
    }

    /// y ← s + 1/y; I_y resets to [1, ∞).
    pub fn ingest_y(&self, s: &BigInt) -> Bihomographic {
        let [a, b, c, d] = &self.num;
        let [e, f, g, h] = &self.den;
        let mut m = self.raw(
            [s * a + b, a.clone(), s * c + d, c.clone()],
            [s * e + f, e.clone(), s * g + h, g.clone()],
        );
        m.y_bound = Interval::tail_domain();
        m
    }

    /// Emit k: M ← 1/(M − k). Neither input bound changes.
    pub fn produce(&self, k: &BigInt) -> Bihomographic {
        let [a, b, c, d] = &self.num;
        let [e, f, g, h] = &self.den;
        self.raw(
            [e.clone(), f.clone(), g.clone(), h.clone()],
            [a - k * e, b - k * f, c - k * g, d - k * h],
        )
    }

    /// What ingesting the ∞ marker on the x side means for this matrix.
    pub fn classify_x_end(&self) -> EndAction {
        self.classify_end(Var::X)
    }

    pub fn classify_y_end(&self) -> EndAction {
        self.classify_end(Var::Y)
    }

    fn classify_end(&self, var: Var) -> EndAction {
        let (num_has, den_has) = match var {
            Var::X => (
                !self.num[0].is_zero() || !self.num[1].is_zero(),
                !self.den[0].is_zero() || !self.den[1].is_zero(),
            ),
            Var::Y => (
                !self.num[0].is_zero() || !self.num[2].is_zero(),
                !self.den[0].is_zero() || !self.den[2].is_zero(),
            ),
        };
        match (num_has, den_has) {
            (true, true) => EndAction::Collapse,
            (false, false) => EndAction::Noop,
            (true, false) => {
                // The limit is ±∞ if its sign is certain over the other
                // bound; an anomalous (sign-ambiguous) limit reveals a
                // division by zero.
                let (num_lead, den_const, other) = match var {
                    Var::X => (
                        (&self.num[0], &self.num[1]),
                        (&self.den[2], &self.den[3]),
                        &self.y_bound,
                    ),
                    Var::Y => (
                        (&self.num[0], &self.num[2]),
                        (&self.den[1], &self.den[3]),
                        &self.x_bound,
                    ),
                };
                let sn = linear_sign(num_lead.0, num_lead.1, other);
                let sd = linear_sign(den_const.0, den_const.1, other);
                if sn != 0 && sd != 0 {
                    EndAction::InfiniteValue
                } else {
                    EndAction::DivisionByZero
                }
            }
            (false, true) => {
                // Numerator stays finite while the denominator grows: the
                // limit is the constant 0, provided the denominator really
                // does grow (its leading pair keeps one sign).
                let (den_lead, other) = match var {
                    Var::X => ((&self.den[0], &self.den[1]), &self.y_bound),
                    Var::Y => ((&self.den[0], &self.den[2]), &self.x_bound),
                };
                if linear_sign(den_lead.0, den_lead.1, other) != 0 {
                    EndAction::Zero
                } else {
                    EndAction::DivisionByZero
                }
            }
        }
    }

    /// Applies a collapse decided by [`classify_x_end`]: zero the x-bearing
    /// columns (the limit of the substitution). Collapses keep an entry subset,
    /// so coprimality must be re-established.
    pub fn collapse_x(&self) -> Bihomographic {
        let [a, b, ..] = &self.num;
        let [e, f, ..] = &self.den;
        self.raw(
            [BigInt::zero(), BigInt::zero(), a.clone(), b.clone()],
            [BigInt::zero(), BigInt::zero(), e.clone(), f.clone()],
        )
        .reduced()
    }

    pub fn collapse_y(&self) -> Bihomographic {
        let [a, _, c, _] = &self.num;
        let [e, _, g, _] = &self.den;
        self.raw(
            [BigInt::zero(), a.clone(), BigInt::zero(), c.clone()],
            [BigInt::zero(), e.clone(), BigInt::zero(), g.clone()],
        )
        .reduced()
    }

    fn collapse_to_zero(&self) -> Bihomographic {
        self.raw(
            [BigInt::zero(), BigInt::zero(), BigInt::zero(), BigInt::zero()],
            [BigInt::zero(), BigInt::zero(), BigInt::zero(), BigInt::from(1)],
        )
    }

    /// ρ(M, I_x, I_y): the range of M over the input bounds, as
    /// [min, max) of the corner fractions after mapping both bounds onto
    /// [0, ∞); (−∞, +∞) whenever the denominator may change sign.
    pub fn rho(&self) -> Interval {
        self.rho_info().interval
    }

    pub(crate) fn rho_info(&self) -> RangeInfo {
        let on_x = self.depends_on_x();
        let on_y = self.depends_on_y();
        if !on_x && !on_y {
            if self.den[3].is_zero() {
                return RangeInfo::full();
            }
            return RangeInfo::point(ExtendedRational::ratio(
                self.num[3].clone(),
                self.den[3].clone(),
            ));
        }
        let xs = match corner_ends(&self.x_bound, on_x) {
            Some(ends) => ends,
            None => return RangeInfo::full(),
        };
        let ys = match corner_ends(&self.y_bound, on_y) {
            Some(ends) => ends,
            None => return RangeInfo::full(),
        };
        let mut corners: Vec<Corner> = Vec::with_capacity(4);
        for (xe, xa) in &xs {
            for (ye, ya) in &ys {
                let (n, d) = self.corner(xe, ye);
                corners.push((n, d, *xa && *ya));
            }
        }
        corner_range(&corners)
    }

    /// Corner value as a raw fraction, in projective coordinates
    /// (a point is num/den, ∞ is 1/0):
    /// N = a·px·py + b·px·qy + c·py·qx + d·qx·qy and likewise for D.
    fn corner(&self, xe: &End, ye: &End) -> (BigInt, BigInt) {
        let [a, b, c, d] = &self.num;
        let [e, f, g, h] = &self.den;
        let (px, qx) = xe.projective();
        let (py, qy) = ye.projective();
        let pp = px * py;
        let pq = px * qy;
        let qp = py * qx;
        let qq = qx * qy;
        (
            a * &pp + b * &pq + c * &qp + d * &qq,
            e * &pp + f * &pq + g * &qp + h * &qq,
        )
    }

}

impl fmt::Display for Bihomographic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}, {}, {}], [{}, {}, {}, {}]] x in {} y in {}",
            self.num[0],
            self.num[1],
            self.num[2],
            self.num[3],
            self.den[0],
            self.den[1],
            self.den[2],
            self.den[3],
            self.x_bound,
            self.y_bound,
        )
    }
}

#[derive(Clone, Copy)]
enum Var {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndAction {
    /// Zero out the columns of the exhausted variable.
    Collapse,
    /// The matrix no longer mentions the variable.
    Noop,
    /// The denominator outgrows the numerator: the limit is the constant 0.
    Zero,
    /// The remaining value is a determinate ±∞: the output terminates.
    InfiniteValue,
    /// Anomalous limit: the computation divided by zero.
    DivisionByZero,
}

enum End {
    At(BigRational),
    Inf,
}

impl End {
    fn projective(&self) -> (&BigInt, &BigInt) {
        static ONE_ZERO: std::sync::OnceLock<(BigInt, BigInt)> = std::sync::OnceLock::new();
        match self {
            End::At(r) => (r.numer(), r.denom()),
            End::Inf => {
                let (one, zero) = ONE_ZERO.get_or_init(|| (BigInt::from(1), BigInt::zero()));
                (one, zero)
            }
        }
    }
}

fn rat(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Corner descriptors (end, attainable) for one bound, or None when the
/// bound gives no usable information for a variable the matrix uses. The
/// closed lower end and the ∞ end are attainable; a finite upper end is
/// open.
fn corner_ends(bound: &Interval, relevant: bool) -> Option<Vec<(End, bool)>> {
    if !relevant {
        return Some(vec![(End::At(BigRational::zero()), true)]);
    }
    let lo = match bound.lo() {
        ExtendedRational::Finite(r) => r.clone(),
        _ => return None,
    };
    let hi = match bound.hi() {
        ExtendedRational::Finite(r) => (End::At(r.clone()), false),
        PosInf => (End::Inf, true),
        NegInf => unreachable!("interval invariant"),
    };
    Some(vec![(End::At(lo), true), hi])
}

/// Sign of αt + β over an interval: 1 / -1 when strictly that sign at both
/// ends, 0 otherwise.
fn linear_sign(alpha: &BigInt, beta: &BigInt, iv: &Interval) -> i8 {
    let end_sign = |e: &ExtendedRational, toward_neg: bool| -> i8 {
        match e {
            ExtendedRational::Finite(t) => {
                let v = rat(alpha) * t + rat(beta);
                if v.is_zero() {
                    0
                } else if v.is_positive() {
                    1
                } else {
                    -1
                }
            }
            _ => {
                let s = if alpha.is_zero() {
                    if beta.is_zero() {
                        0
                    } else if beta.is_positive() {
                        1
                    } else {
                        -1
                    }
                } else if alpha.is_positive() {
                    1
                } else {
                    -1
                };
                if toward_neg && !alpha.is_zero() {
                    -s
                } else {
                    s
                }
            }
        }
    };
    let s_lo = end_sign(iv.lo(), true);
    let s_hi = end_sign(iv.hi(), false);
    if s_lo > 0 && s_hi > 0 {
        1
    } else if s_lo < 0 && s_hi < 0 {
        -1
    } else {
        0
    }
}

/// The interval-stream representation of M0(x, y).
pub fn arith(x: Cf, y: Cf, m0: Bihomographic) -> Cf {
    arith_with(x, y, m0, EngineOpts::default())
}

pub fn arith_with(x: Cf, y: Cf, m0: Bihomographic, opts: EngineOpts) -> Cf {
    arith_seeded(x, y, m0, None, Interval::full(), false, opts)
}

/// Like [`arith_with`], with an initial pending bound that every first-
/// position emission is intersected into, the a-priori domain of the
/// starting position, and an `eager` switch that emits the first
/// informative bound of a position instead of seeding it silently. The
/// series evaluator needs eager emission: a level must hand its consumer
/// something after reading only the head of the next level, otherwise the
/// recursion never bottoms out.
pub(crate) fn arith_seeded(
    x: Cf,
    y: Cf,
    m0: Bihomographic,
    pending: Option<Interval>,
    fresh_domain: Interval,
    eager: bool,
    opts: EngineOpts,
) -> Cf {
    Cf::from_producer(ArithEngine {
        m: m0,
        x,
        y,
        xi: 0,
        yi: 0,
        x_done: false,
        y_done: false,
        pending,
        fresh_domain,
        eager,
        must_read: false,
        silent: 0,
        result: None,
        opts,
    })
}

pub fn add(x: Cf, y: Cf) -> Cf {
    arith(x, y, Bihomographic::add_matrix())
}

pub fn sub(x: Cf, y: Cf) -> Cf {
    arith(x, y, Bihomographic::sub_matrix())
}

pub fn mul(x: Cf, y: Cf) -> Cf {
    arith(x, y, Bihomographic::mul_matrix())
}

pub fn div(x: Cf, y: Cf) -> Cf {
    arith(x, y, Bihomographic::div_matrix())
}

struct ArithEngine {
    m: Bihomographic,
    x: Cf,
    y: Cf,
    xi: usize,
    yi: usize,
    x_done: bool,
    y_done: bool,
    /// Last emitted (or silently seeded) bound for the current position.
    pending: Option<Interval>,
    /// A-priori domain of the current position: full before the first
    /// term, [1, ∞) for every tail after a produce.
    fresh_domain: Interval,
    /// Emit every informative rho (series levels need an element per
    /// iteration) instead of only proper refinements of a silent seed.
    eager: bool,
    /// The lockstep read that belongs to the element just emitted; it is
    /// deferred to the next pull so an emission never recurses into the
    /// inputs first.
    must_read: bool,
    silent: u32,
    result: Option<Element>,
    opts: EngineOpts,
}

impl crate::stream::Producer for ArithEngine {
    fn next_element(&mut self) -> Element {
        loop {
            if let Some(el) = &self.result {
                return el.clone();
            }
            if self.must_read {
                self.must_read = false;
                self.read_inputs(false);
                continue;
            }
            if self.m.den.iter().all(Zero::is_zero) {
                // 1/(M − k) after an exactly attained k: the remaining
                // tail is infinite (End) unless nothing is left at all.
                let el = if self.m.num.iter().all(Zero::is_zero) {
                    Element::Fault(CfError::DivisionByZero)
                } else {
                    Element::End
                };
                self.result = Some(el.clone());
                return el;
            }
            let info = self.m.rho_info();
            if let Some(k) = info.pinned_floor() {
                self.m = self.m.produce(&k);
                self.opts.emit(|| format!("produce {k} -> {}", self.m));
                self.pending = None;
                self.fresh_domain = Interval::tail_domain();
                self.silent = 0;
                return Element::term(k);
            }
            // Narrowing policy. In eager mode every informative rho is
            // emitted (as the intersection with the pending bound, so the
            // output stays nested); a nested level must hand its consumer
            // an element per iteration or the recursion through the levels
            // never bottoms out. In seeded mode the first informative
            // bound of a position is adopted silently and only proper
            // refinements are emitted. Either way, a bound shaped exactly
            // like [a, a+1) would read as an explicit term, so it stays
            // silent until the floor is actually pinned.
            let rho = info.emittable();
            let emit = if rho.is_full() {
                false
            } else {
                match &self.pending {
                    None => {
                        let mut seed = rho.intersect(&self.fresh_domain);
                        if self.eager {
                            seed = seed.coarsen().intersect(&self.fresh_domain);
                        }
                        // A term-shaped seed cannot be emitted, and a
                        // point seed means the value sits exactly on a
                        // previous bound's endpoint; keep reading instead.
                        let informative = seed.as_term().is_none() && !seed.is_point();
                        if informative {
                            self.pending = Some(seed);
                        }
                        self.eager && informative
                    }
                    Some(prev) => {
                        let mut candidate = rho.intersect(prev);
                        if self.eager {
                            candidate = candidate.coarsen().intersect(prev);
                        }
                        if candidate.as_term().is_some() || candidate.is_point() {
                            false
                        } else if self.eager || &candidate != prev {
                            self.pending = Some(candidate);
                            true
                        } else {
                            false
                        }
                    }
                }
            };
            let forced = !emit
                && self.silent >= FORCED_EMIT_EVERY
                && self
                    .pending
                    .as_ref()
                    .map_or(true, |p| p.as_term().is_none());
            if forced && self.pending.is_none() {
                // Nothing informative yet: fall back to the a-priori
                // domain of this position so downstream caps can count.
                self.pending = Some(self.fresh_domain.clone());
            }
            if emit || forced {
                let out = self.pending.clone().expect("pending bound set on emission");
                self.silent = 0;
                self.must_read = true;
                return Element::Bound(out);
            }
            self.silent += 1;
            self.read_inputs(rho.is_full());
        }
    }
}

impl ArithEngine {
    fn read_inputs(&mut self, rho_was_full: bool) {
        let ex = if self.x_done {
            None
        } else {
            let el = self.x.get(self.xi);
            self.xi += 1;
            Some(el)
        };

        // Demand-driven reading for the series engines: while rho is
        // completely uninformative (usually a transient straddling bound
        // on the argument), refine only the x side. Recursing into the y
        // side (the next, lazily built level) cannot help then, and in a
        // nested series it would deepen the recursion without bound.
        if self.eager && rho_was_full && (self.y_done || !self.m.y_bound.is_full()) {
            if let Some(Element::Bound(b)) = &ex {
                let progressed = b.as_term().is_some() || b != &self.m.x_bound;
                if progressed {
                    self.apply_x(ex.unwrap());
                    return;
                }
            }
        }

        let ey = if self.y_done {
            None
        } else {
            let el = self.y.get(self.yi);
            self.yi += 1;
            Some(el)
        };

        if let Some(Element::Fault(e)) = &ex {
            self.result = Some(Element::Fault(e.clone()));
            return;
        }
        if let Some(Element::Fault(e)) = &ey {
            self.result = Some(Element::Fault(e.clone()));
            return;
        }

        // When both ends arrive in the same step, a zero-limit collapse on
        // the x side is only sound if it holds jointly as y → ∞ as well:
        // the denominator must keep its xy term, or the numerator must not
        // grow with y. Otherwise the value is a genuine 0/0 (e.g. x/y at
        // x = y = 0) and the computation divided by zero.
        if matches!(ex, Some(Element::End))
            && matches!(ey, Some(Element::End))
            && self.m.classify_x_end() == EndAction::Zero
            && self.m.den[0].is_zero()
            && !(self.m.num[0].is_zero() && self.m.num[2].is_zero())
        {
            self.result = Some(Element::Fault(CfError::DivisionByZero));
            return;
        }

        if let Some(el) = ex {
            self.apply_x(el);
            if self.result.is_some() {
                return;
            }
        }
        if let Some(el) = ey {
            self.apply_y(el);
        }
    }

    fn apply_x(&mut self, el: Element) {
        match el {
            Element::Bound(b) => match b.as_term() {
                Some(s) => {
                    self.m = self.m.ingest_x(&s);
                    self.opts.emit(|| format!("ingest_x {s} -> {}", self.m));
                }
                None => self.m.x_bound = b,
            },
            Element::End => {
                self.x_done = true;
                match self.m.classify_x_end() {
                    EndAction::Collapse => {
                        self.m = self.m.collapse_x();
                        self.opts.emit(|| format!("ingest_x inf -> {}", self.m));
                    }
                    EndAction::Zero => {
                        self.m = self.m.collapse_to_zero();
                        self.opts.emit(|| format!("ingest_x inf (zero limit) -> {}", self.m));
                    }
                    EndAction::Noop => {}
                    EndAction::InfiniteValue => self.result = Some(Element::End),
                    EndAction::DivisionByZero => {
                        self.result = Some(Element::Fault(CfError::DivisionByZero))
                    }
                }
            }
            Element::Fault(e) => self.result = Some(Element::Fault(e)),
        }
    }

    fn apply_y(&mut self, el: Element) {
        match el {
            Element::Bound(b) => match b.as_term() {
                Some(s) => {
                    self.m = self.m.ingest_y(&s);
                    self.opts.emit(|| format!("ingest_y {s} -> {}", self.m));
                }
                None => self.m.y_bound = b,
            },
            Element::End => {
                self.y_done = true;
                match self.m.classify_y_end() {
                    EndAction::Collapse => {
                        self.m = self.m.collapse_y();
                        self.opts.emit(|| format!("ingest_y inf -> {}", self.m));
                    }
                    EndAction::Zero => {
                        self.m = self.m.collapse_to_zero();
                        self.opts.emit(|| format!("ingest_y inf (zero limit) -> {}", self.m));
                    }
                    EndAction::Noop => {}
                    EndAction::InfiniteValue => self.result = Some(Element::End),
                    EndAction::DivisionByZero => {
                        self.result = Some(Element::Fault(CfError::DivisionByZero))
                    }
                }
            }
            Element::Fault(e) => self.result = Some(Element::Fault(e)),
        }
    }
}
