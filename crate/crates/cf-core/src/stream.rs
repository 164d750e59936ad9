//! Pull-based, memoizing interval streams: the representation of a real.
//!
//! A [`Cf`] is a shared handle to a lazily extended sequence of
//! [`Element`]s. All consumers see the identical sequence; extending it is
//! serialized behind the producer lock while the memoized prefix stays
//! readable concurrently.

use std::sync::{Arc, Mutex, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::CfError;
use crate::interval::Interval;
use crate::rational::{ExtendedRational, PosInf};

/// One element of a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    /// An explicit term [a, a+1) or an ambiguous bound on the current tail.
    Bound(Interval),
    /// The terminal ∞ marker of a finite (rational) expansion.
    End,
    /// A sticky error discovered while producing (division by zero etc.).
    Fault(CfError),
}

impl Element {
    pub fn term(a: impl Into<BigInt>) -> Element {
        Element::Bound(Interval::term(a))
    }

    pub fn as_term(&self) -> Option<BigInt> {
        match self {
            Element::Bound(b) => b.as_term(),
            _ => None,
        }
    }

    pub fn is_end(&self) -> bool {
        matches!(self, Element::End)
    }
}

/// Anything that can lazily produce the next stream element.
pub trait Producer: Send {
    fn next_element(&mut self) -> Element;
}

impl<F: FnMut() -> Element + Send> Producer for F {
    fn next_element(&mut self) -> Element {
        self()
    }
}

struct Inner {
    memo: RwLock<Vec<Element>>,
    producer: Mutex<Box<dyn Producer>>,
}

/// A continued fraction (more generally, a real number) as a shared
/// memoized stream of intervals.
#[derive(Clone)]
pub struct Cf {
    inner: Arc<Inner>,
}

impl Cf {
    pub fn from_producer(p: impl Producer + 'static) -> Cf {
        Cf {
            inner: Arc::new(Inner {
                memo: RwLock::new(Vec::new()),
                producer: Mutex::new(Box::new(p)),
            }),
        }
    }

    pub fn from_fn(f: impl FnMut() -> Element + Send + 'static) -> Cf {
        Cf::from_producer(f)
    }

    /// Defers building the underlying stream until the first pull. Used for
    /// the recursive tails of nested series.
    pub fn lazy(make: impl FnOnce() -> Cf + Send + 'static) -> Cf {
        let mut state: LazyState = LazyState::Pending(Box::new(make));
        let mut idx = 0usize;
        Cf::from_fn(move || {
            let cf = match &mut state {
                LazyState::Ready(cf) => cf,
                LazyState::Pending(_) => {
                    let LazyState::Pending(make) =
                        std::mem::replace(&mut state, LazyState::Poisoned)
                    else {
                        unreachable!()
                    };
                    state = LazyState::Ready(make());
                    let LazyState::Ready(cf) = &mut state else { unreachable!() };
                    cf
                }
                LazyState::Poisoned => unreachable!(),
            };
            let el = cf.get(idx);
            idx += 1;
            el
        })
    }

    /// The i-th element, produced on demand. Pulling past an `End` or
    /// `Fault` repeats that element forever.
    pub fn get(&self, idx: usize) -> Element {
        {
            let memo = self.inner.memo.read().unwrap();
            if let Some(el) = fetch(&memo, idx) {
                return el;
            }
        }
        let mut producer = self.inner.producer.lock().unwrap();
        loop {
            {
                let memo = self.inner.memo.read().unwrap();
                if let Some(el) = fetch(&memo, idx) {
                    return el;
                }
            }
            let el = producer.next_element();
            self.inner.memo.write().unwrap().push(el);
        }
    }

    /// The memoized prefix pulled so far (no production happens).
    pub fn pulled(&self) -> Vec<Element> {
        self.inner.memo.read().unwrap().clone()
    }

    /// First n elements, stopping early after End/Fault (which is included).
    pub fn prefix(&self, n: usize) -> Vec<Element> {
        let mut out = Vec::new();
        for i in 0..n {
            let el = self.get(i);
            let stop = matches!(el, Element::End | Element::Fault(_));
            out.push(el);
            if stop {
                break;
            }
        }
        out
    }

    /// A stream with one fixed element sequence, then End.
    pub fn from_elements(els: Vec<Element>) -> Cf {
        let mut it = els.into_iter();
        Cf::from_fn(move || it.next().unwrap_or(Element::End))
    }

    /// A stream that is just a sticky fault.
    pub fn fault(err: CfError) -> Cf {
        Cf::from_fn(move || Element::Fault(err.clone()))
    }

    /// Explicit terms from a possibly infinite iterator; if the iterator
    /// finishes the stream ends with the ∞ marker.
    pub fn from_term_iter(it: impl Iterator<Item = BigInt> + Send + 'static) -> Cf {
        let mut it = it;
        Cf::from_fn(move || match it.next() {
            Some(a) => Element::term(a),
            None => Element::End,
        })
    }

    /// CF literal: a0 then `rest`, then `period` cycled forever (if given).
    /// Terms after the first must be ≥ 1; a period must be non-empty.
    pub fn from_terms_big(
        a0: BigInt,
        rest: Vec<BigInt>,
        period: Option<Vec<BigInt>>,
    ) -> Result<Cf, CfError> {
        for t in rest.iter().chain(period.iter().flatten()) {
            if !t.is_positive() {
                return Err(CfError::InvalidTerm(format!(
                    "term {t} after the first must be >= 1"
                )));
            }
        }
        if let Some(p) = &period {
            if p.is_empty() {
                return Err(CfError::InvalidTerm("empty period".into()));
            }
        }
        let head = std::iter::once(a0).chain(rest);
        Ok(match period {
            Some(p) => Cf::from_term_iter(head.chain(p.into_iter().cycle())),
            None => Cf::from_term_iter(head),
        })
    }

    pub fn from_terms(a0: i64, rest: &[i64], period: Option<&[i64]>) -> Result<Cf, CfError> {
        Cf::from_terms_big(
            BigInt::from(a0),
            rest.iter().map(|&t| BigInt::from(t)).collect(),
            period.map(|p| p.iter().map(|&t| BigInt::from(t)).collect()),
        )
    }

    /// The regular CF of p/q (q > 0) by the floor/reciprocal recurrence.
    /// The result is canonical: terms after the first are ≥ 1 and the last
    /// finite term is ≥ 2 whenever there is more than one term.
    pub fn from_rational(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Cf {
        let mut p = p.into();
        let mut q = q.into();
        assert!(q.is_positive(), "from_rational requires q > 0");
        Cf::from_fn(move || {
            if q.is_zero() {
                return Element::End;
            }
            let (f, r) = p.div_mod_floor(&q);
            p = std::mem::replace(&mut q, r);
            Element::term(f)
        })
    }
}

enum LazyState {
    Pending(Box<dyn FnOnce() -> Cf + Send>),
    Ready(Cf),
    Poisoned,
}

fn fetch(memo: &[Element], idx: usize) -> Option<Element> {
    if idx < memo.len() {
        return Some(memo[idx].clone());
    }
    // Past a terminal element the stream repeats it.
    match memo.last() {
        Some(el @ (Element::End | Element::Fault(_))) => Some(el.clone()),
        _ => None,
    }
}

/// Checks the validity rules on a finite prefix: ambiguous bounds nest,
/// an explicit term is consistent with the pending bound, bounds and terms
/// after a term live in the tail domain [1, ∞), and the ∞ marker appears
/// only where the pending bound admits ∞. Test-facing.
pub fn validate_prefix(elements: &[Element]) -> bool {
    let mut pending = Interval::full();
    let mut ended = false;
    for el in elements {
        if ended {
            if el.is_end() {
                continue; // sticky End
            }
            return false;
        }
        match el {
            Element::Fault(_) => return false,
            Element::End => {
                if pending.hi() != &PosInf {
                    return false;
                }
                ended = true;
            }
            Element::Bound(b) => match b.as_term() {
                Some(a) => {
                    // The term must overlap the pending bound; touching is
                    // only consistent at the bound's upper end (the value
                    // sat exactly there).
                    let a = ExtendedRational::integer(a);
                    let a1 = a.clone() + ExtendedRational::one();
                    let strict = &a < pending.hi() && pending.lo() < &a1;
                    if !(strict || &a == pending.hi()) {
                        return false;
                    }
                    pending = Interval::tail_domain();
                }
                None => {
                    if b.is_point() || !b.subset_of(&pending) {
                        return false;
                    }
                    pending = b.clone();
                }
            },
        }
    }
    true
}

/// Exact value of [terms..., tail] by bottom-up evaluation, allowing a
/// rational (or ±∞) final tail; tail = +∞ gives the plain convergent.
pub fn eval_prefix_with_tail(terms: &[BigInt], tail: ExtendedRational) -> ExtendedRational {
    let mut v = tail;
    for t in terms.iter().rev() {
        v = ExtendedRational::integer(t.clone()) + v.recip();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn terms_of(cf: &Cf, n: usize) -> Vec<i64> {
        (0..n)
            .map_while(|i| cf.get(i).as_term())
            .map(|t| i64::try_from(&t).unwrap())
            .collect()
    }

    #[test]
    fn from_terms_periodic() {
        let sqrt7 = Cf::from_terms(2, &[], Some(&[1, 1, 1, 4])).unwrap();
        assert_eq!(terms_of(&sqrt7, 9), vec![2, 1, 1, 1, 4, 1, 1, 1, 4]);
        let sqrt2 = Cf::from_terms(1, &[], Some(&[2])).unwrap();
        assert_eq!(terms_of(&sqrt2, 4), vec![1, 2, 2, 2]);
    }

    #[test]
    fn from_terms_finite_ends() {
        let five = Cf::from_terms(5, &[], None).unwrap();
        assert_eq!(five.get(0).as_term(), Some(BigInt::from(5)));
        assert!(five.get(1).is_end());
        assert!(five.get(7).is_end());
    }

    #[test]
    fn from_terms_rejects_nonpositive() {
        assert!(Cf::from_terms(2, &[0], None).is_err());
        assert!(Cf::from_terms(2, &[], Some(&[3, -1])).is_err());
        assert!(Cf::from_terms(2, &[], Some(&[])).is_err());
        assert!(Cf::from_terms(-2, &[5], None).is_ok());
    }

    #[test]
    fn from_rational_examples() {
        let cf = Cf::from_rational(7, 2);
        assert_eq!(terms_of(&cf, 5), vec![3, 2]);
        assert!(cf.get(2).is_end());

        // -1/2 = -1 + 1/2
        assert_eq!(terms_of(&Cf::from_rational(-1, 2), 5), vec![-1, 2]);

        // Euclidean algorithm on 355/113
        assert_eq!(terms_of(&Cf::from_rational(355, 113), 5), vec![3, 7, 16]);
    }

    #[test]
    fn from_rational_is_canonical_and_exact() {
        // Never a trailing 1, and re-evaluation reproduces p/q exactly.
        for (p, q) in [(7i64, 3i64), (1, 2), (-22, 7), (100, 1), (617, 642)] {
            let cf = Cf::from_rational(p, q);
            let mut ts = Vec::new();
            let mut i = 0;
            loop {
                match cf.get(i) {
                    Element::Bound(b) => ts.push(b.as_term().unwrap()),
                    Element::End => break,
                    Element::Fault(e) => panic!("fault: {e}"),
                }
                i += 1;
            }
            if ts.len() > 1 {
                assert!(ts.last().unwrap() > &BigInt::one());
            }
            assert_eq!(
                eval_prefix_with_tail(&ts, PosInf),
                ExtendedRational::ratio(p, q)
            );
        }
    }

    #[test]
    fn memoization_runs_generator_once() {
        static CALLS: AtomicUsize = AtomicUsize::new(0);
        let mut k = 0i64;
        let cf = Cf::from_fn(move || {
            CALLS.fetch_add(1, Ordering::SeqCst);
            k += 1;
            Element::term(k)
        });
        let first: Vec<_> = (0..10).map(|i| cf.get(i)).collect();
        let again: Vec<_> = (0..10).map(|i| cf.get(i)).collect();
        assert_eq!(first, again);
        assert_eq!(CALLS.load(Ordering::SeqCst), 10);

        let other = cf.clone();
        let third: Vec<_> = (0..10).map(|i| other.get(i)).collect();
        assert_eq!(first, third);
        assert_eq!(CALLS.load(Ordering::SeqCst), 10);
    }

    #[test]
    fn validate_prefix_examples() {
        let t = |a: i64| Element::term(a);
        let b = |p: (i64, i64), q: (i64, i64)| {
            Element::Bound(Interval::new(
                ExtendedRational::ratio(p.0, p.1),
                ExtendedRational::ratio(q.0, q.1),
            ))
        };
        // Two explicit terms.
        assert!(validate_prefix(&[t(3), t(7)]));
        // Nested bounds from squaring √2.
        assert!(validate_prefix(&[b((16, 9), (9, 4)), b((49, 25), (100, 49))]));
        // Un-nested successor bound.
        assert!(!validate_prefix(&[b((16, 9), (9, 4)), b((3, 2), (5, 2))]));
        // A bound below 1 cannot describe a tail after a term.
        assert!(!validate_prefix(&[t(2), b((4, 9), (9, 16))]));
        // A term must land inside a pending bound.
        assert!(validate_prefix(&[b((3, 2), (5, 2)), t(2)]));
        assert!(!validate_prefix(&[b((3, 2), (5, 2)), t(4)]));
        // Terms after the first must be ≥ 1.
        assert!(!validate_prefix(&[t(3), t(0)]));
        assert!(validate_prefix(&[t(-3), t(1)]));
        // End only where ∞ is admissible.
        assert!(validate_prefix(&[t(3), Element::End, Element::End]));
        assert!(!validate_prefix(&[b((3, 2), (5, 2)), Element::End]));
        assert!(!validate_prefix(&[Element::End, t(1)]));
    }

    #[test]
    fn eval_prefix_examples() {
        let ts = [BigInt::one(), BigInt::one(), BigInt::one()];
        // 1 + 1/(1 + 1/(1 + 1/3)) = 11/7
        assert_eq!(
            eval_prefix_with_tail(&ts, ExtendedRational::integer(3)),
            ExtendedRational::ratio(11, 7)
        );
        assert_eq!(
            eval_prefix_with_tail(&[BigInt::from(3)], PosInf),
            ExtendedRational::integer(3)
        );
        assert_eq!(
            eval_prefix_with_tail(&[], ExtendedRational::ratio(5, 2)),
            ExtendedRational::ratio(5, 2)
        );
    }

    #[test]
    fn concurrent_consumers_see_one_sequence() {
        let mut k = 0i64;
        let cf = Cf::from_fn(move || {
            k += 1;
            Element::term(k)
        });
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let cf = cf.clone();
                std::thread::spawn(move || (0..200).map(|i| cf.get(i)).collect::<Vec<_>>())
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results[1..] {
            assert_eq!(r, &results[0]);
        }
    }

    #[test]
    fn lazy_streams_defer_construction() {
        static BUILT: AtomicUsize = AtomicUsize::new(0);
        let cf = Cf::lazy(|| {
            BUILT.fetch_add(1, Ordering::SeqCst);
            Cf::from_rational(3, 2)
        });
        assert_eq!(BUILT.load(Ordering::SeqCst), 0);
        assert_eq!(cf.get(0).as_term(), Some(BigInt::from(1)));
        assert_eq!(cf.get(1).as_term(), Some(BigInt::from(2)));
        assert_eq!(BUILT.load(Ordering::SeqCst), 1);
    }
}
