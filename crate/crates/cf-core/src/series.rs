//! Spigot-style evaluation of exp, log, cos/sin/tan, arcsin and π as
//! infinitely nested homographic/bihomographic maps.
//!
//! A function is described level by level: level n is a bihomographic
//! template M_n in (w, y) where w is the (squared or reduced) argument and
//! y stands for the tail y_{n+1}, plus a rational interval that encloses
//! the true tail value at that level. The stream for level n starts with
//! that interval (or, when the interval already pins a floor, with the
//! produced term), and continues with the two-input engine running on
//! (w, level n+1); the recursion only deepens when the engine actually
//! reads its y input, so no level is ever built eagerly.

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bihomographic::{arith_seeded, div, mul, sub, Bihomographic};
use crate::error::CfError;
use crate::extract::{approximate, PrefixWalker};
use crate::homographic::Homographic;
use crate::interval::Interval;
use crate::rational::{ExtendedRational, PosInf};
use crate::stream::{Cf, Element};
use crate::trace::EngineOpts;

/// Pull budget for the bound refinements and domain certifications in this
/// module (sign of the argument, positivity for log, |x| ≤ 1 for arcsin,
/// the cos range-reduction branch). Streams that never narrow hit this and
/// surface a domain error.
const REFINE_CAP: usize = 100_000;

/// One nested-series description. `level_matrix(n)` is the template in
/// (w, y); `tail_bound(n, w_lo, w_hi)` must enclose the true level value
/// given the current rational bounds on w.
#[derive(Clone)]
pub struct NestedSeries {
    pub start_level: u64,
    pub level_matrix: Arc<dyn Fn(u64) -> Bihomographic + Send + Sync>,
    pub tail_bound: Arc<dyn Fn(u64, &BigRational, &BigRational) -> Interval + Send + Sync>,
    /// Extra requirement on the w enclosure before a level starts (e.g.
    /// log needs w_hi < 1 to bound the geometric tail).
    bounds_ready: Option<Arc<dyn Fn(&BigRational, &BigRational) -> bool + Send + Sync>>,
}

impl NestedSeries {
    pub fn new(
        start_level: u64,
        level_matrix: impl Fn(u64) -> Bihomographic + Send + Sync + 'static,
        tail_bound: impl Fn(u64, &BigRational, &BigRational) -> Interval + Send + Sync + 'static,
    ) -> NestedSeries {
        NestedSeries {
            start_level,
            level_matrix: Arc::new(level_matrix),
            tail_bound: Arc::new(tail_bound),
            bounds_ready: None,
        }
    }

    fn with_bounds_ready(
        mut self,
        ready: impl Fn(&BigRational, &BigRational) -> bool + Send + Sync + 'static,
    ) -> NestedSeries {
        self.bounds_ready = Some(Arc::new(ready));
        self
    }
}

/// The stream of the series value at `start_level`, evaluated at w.
pub fn nested_eval(series: &NestedSeries, w: Cf) -> Cf {
    let spec: Arc<dyn LevelSpec> = Arc::new(series.clone());
    level_stream(spec, series.start_level, w)
}

/// What one level of a nested series looks like: a few fixed elements
/// (the initial bound, or terms it already pins), then the engine.
struct LevelPlan {
    prelude: Vec<Element>,
    matrix: Bihomographic,
    seed: Option<Interval>,
    /// A-priori domain of the engine's starting position: full when the
    /// prelude emitted no terms, the tail domain after produced terms.
    fresh: Interval,
}

trait LevelSpec: Send + Sync {
    fn plan(&self, n: u64, w: &Cf) -> Result<LevelPlan, CfError>;
}

impl LevelSpec for NestedSeries {
    fn plan(&self, n: u64, w: &Cf) -> Result<LevelPlan, CfError> {
        let (w_lo, w_hi) = match &self.bounds_ready {
            Some(ready) => finite_bounds_until(w, REFINE_CAP, ready.as_ref())?,
            None => finite_bounds(w, REFINE_CAP)?,
        };
        let i0 = (self.tail_bound)(n, &w_lo, &w_hi);
        Ok(default_plan(i0, (self.level_matrix)(n)))
    }
}

fn default_plan(i0: Interval, matrix: Bihomographic) -> LevelPlan {
    match i0.pinned_floor() {
        Some(a) => LevelPlan {
            prelude: vec![Element::term(a.clone())],
            matrix: matrix.produce(&a),
            seed: None,
            fresh: Interval::tail_domain(),
        },
        None => LevelPlan {
            prelude: vec![Element::Bound(i0.clone())],
            matrix,
            seed: Some(i0),
            fresh: Interval::full(),
        },
    }
}

fn level_stream(spec: Arc<dyn LevelSpec>, n: u64, w: Cf) -> Cf {
    enum State {
        Start,
        Running { queue: std::vec::IntoIter<Element>, engine: Cf, idx: usize },
    }
    let mut state = State::Start;
    Cf::from_fn(move || loop {
        match &mut state {
            State::Start => {
                let plan = match spec.plan(n, &w) {
                    Ok(p) => p,
                    Err(e) => return Element::Fault(e),
                };
                let next = {
                    let spec = spec.clone();
                    let w = w.clone();
                    Cf::lazy(move || level_stream(spec, n + 1, w))
                };
                let engine = arith_seeded(
                    w.clone(),
                    next,
                    plan.matrix,
                    plan.seed,
                    plan.fresh,
                    true,
                    EngineOpts::default(),
                );
                state = State::Running { queue: plan.prelude.into_iter(), engine, idx: 0 };
            }
            State::Running { queue, engine, idx } => {
                if let Some(el) = queue.next() {
                    return el;
                }
                let el = engine.get(*idx);
                *idx += 1;
                return el;
            }
        }
    })
}

/// Closed finite rational bounds on a stream from a finite prefix.
fn finite_bounds(cf: &Cf, cap: usize) -> Result<(BigRational, BigRational), CfError> {
    finite_bounds_until(cf, cap, &|_, _| true)
}

fn finite_bounds_until(
    cf: &Cf,
    cap: usize,
    ready: &(dyn Fn(&BigRational, &BigRational) -> bool + '_),
) -> Result<(BigRational, BigRational), CfError> {
    let mut walker = PrefixWalker::new();
    for i in 0..cap {
        walker.feed(&cf.get(i))?;
        let (lo, hi) = walker.enclosure();
        if let (ExtendedRational::Finite(lo), ExtendedRational::Finite(hi)) = (lo, hi) {
            if ready(&lo, &hi) {
                return Ok((lo, hi));
            }
        }
        if walker.exact {
            break;
        }
    }
    Err(CfError::Domain(
        "cannot obtain tight enough rational bounds on the argument".into(),
    ))
}

/// Refines until the enclosure width is below 1/den (or the value is
/// exact); returns the closed enclosure.
fn refine_to_width(
    cf: &Cf,
    den: u32,
    cap: usize,
) -> Result<(BigRational, BigRational), CfError> {
    let target = BigRational::new(BigInt::one(), BigInt::from(den));
    finite_bounds_until(cf, cap, &move |lo: &BigRational, hi: &BigRational| {
        hi - lo <= target
    })
}

fn rat_i(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn bih(num: [BigInt; 4], den: [BigInt; 4]) -> Bihomographic {
    Bihomographic::from_rows(num, den)
}

fn interval_rat(lo: BigRational, hi: BigRational) -> Interval {
    Interval::new(ExtendedRational::from_big(lo), ExtendedRational::from_big(hi))
}

// ---------------------------------------------------------------------
// exp

/// Series for e^w on w ∈ (−1, 1): level n is y ↦ 1 + wy/n with the tail
/// enclosure [1 + w_lo/n, 1 + (3^max(⌈w_hi⌉,1) − 1)/n); exactly-zero w
/// collapses every level to the point 1.
pub fn exp_series() -> NestedSeries {
    NestedSeries::new(
        1,
        |n| {
            let n = BigInt::from(n);
            bih(
                [BigInt::one(), BigInt::zero(), BigInt::zero(), n.clone()],
                [BigInt::zero(), BigInt::zero(), BigInt::zero(), n],
            )
        },
        |n, w_lo, w_hi| {
            if w_lo.is_zero() && w_hi.is_zero() {
                return Interval::point(ExtendedRational::one());
            }
            let n = rat_i(n as i64);
            let lo = BigRational::one() + w_lo / &n;
            let exponent = w_hi.ceil().to_integer().max(BigInt::one());
            let exponent = u32::try_from(&exponent).expect("argument already range-reduced");
            let hi = BigRational::one()
                + (BigRational::from_integer(BigInt::from(3).pow(exponent)) - BigRational::one())
                    / &n;
            interval_rat(lo, hi)
        },
    )
    .with_bounds_ready(|_, hi| hi < &rat_i(2))
}

/// e^x for any real x: splits off an integer part (e^n via the pattern
/// constant), optionally a half (via √e), and runs the series on the
/// remaining fragment; negative arguments go through e^−x = 1/e^x.
pub fn exp_cf(x: Cf) -> Cf {
    deferred(move || {
        let (lo, hi) = refine_to_width(&x, 4, REFINE_CAP)?;
        if hi.is_negative() {
            // e^x = 1 / e^(−x)
            let neg = Homographic::new(-1, 0, 0, 1).unwrap().apply(x.clone());
            return Ok(Homographic::new(0, 1, 1, 0).unwrap().apply(exp_cf(neg)));
        }
        if lo.is_negative() {
            // The bounds straddle zero (within ±1/4): run the series
            // directly; its tail enclosures stay sound on (−1, 1).
            return Ok(nested_eval(&exp_series(), x.clone()));
        }
        // x ≥ 0 certified: split off n = ⌊lo⌋ ≥ 0, leaving a certified
        // nonnegative fragment (possibly straddling 1, which the series
        // tolerates).
        let n = lo.floor().to_integer();
        let (frac, frac_lo) = if n.is_zero() {
            (x.clone(), lo.clone())
        } else {
            (
                Homographic::new(BigInt::one(), -n.clone(), BigInt::zero(), BigInt::one())
                    .unwrap()
                    .apply(x.clone()),
                &lo - BigRational::from_integer(n.clone()),
            )
        };
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let use_sqrt_e = frac_lo >= half;
        let series_arg = if use_sqrt_e {
            // e^x = e^n · √e · e^(x − n − 1/2)
            Homographic::new(
                BigInt::from(2),
                -(BigInt::from(2) * &n + BigInt::one()),
                BigInt::zero(),
                BigInt::from(2),
            )
            .unwrap()
            .apply(x.clone())
        } else {
            frac
        };
        let mut result = nested_eval(&exp_series(), series_arg);
        if use_sqrt_e {
            result = mul(result, sqrt_e_cf());
        }
        if !n.is_zero() {
            result = mul(result, int_power(e_cf(), &n));
        }
        Ok(result)
    })
}

/// base^n for n ≥ 1 by binary exponentiation over stream multiplication.
fn int_power(base: Cf, n: &BigInt) -> Cf {
    assert!(n.is_positive());
    let bits = n.bits();
    let mut acc: Option<Cf> = None;
    let mut sq = base;
    for i in 0..bits {
        if n.bit(i) {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => mul(a, sq.clone()),
            });
        }
        if i + 1 < bits {
            sq = mul(sq.clone(), sq);
        }
    }
    acc.expect("n >= 1")
}

// ---------------------------------------------------------------------
// log

/// Series for g(w) = 1 + w/3 + w²/5 + ⋯ on 0 ≤ w < 1: level n is
/// y ↦ 1 + (2n−1)/(2n+1)·wy, with the geometric tail bound
/// [1, 1 + (2n−1)/(2n+1)·w_hi/(1−w_hi)).
pub fn log_series() -> NestedSeries {
    NestedSeries::new(
        1,
        |n| {
            let n = i64::try_from(n).unwrap();
            bih(
                [
                    BigInt::from(2 * n - 1),
                    BigInt::zero(),
                    BigInt::zero(),
                    BigInt::from(2 * n + 1),
                ],
                [BigInt::zero(), BigInt::zero(), BigInt::zero(), BigInt::from(2 * n + 1)],
            )
        },
        |n, w_lo, w_hi| {
            let w_lo = if w_lo.is_negative() { BigRational::zero() } else { w_lo.clone() };
            if w_lo.is_zero() && w_hi.is_zero() {
                return Interval::point(ExtendedRational::one());
            }
            let n = rat_i(n as i64);
            let ratio = (&n + &n - BigRational::one()) / (&n + &n + BigRational::one());
            let b = w_hi / (BigRational::one() - w_hi);
            interval_rat(BigRational::one(), BigRational::one() + ratio * b)
        },
    )
    .with_bounds_ready(|lo, hi| !lo.is_negative() && hi < &BigRational::one())
}

/// log x for x > 0 (certified by bound refinement): computes
/// z = (x−1)/(x+1), w = z², and returns 2z·g(w) + k after dividing out
/// e^k while the argument is certifiably ≥ 3 (> e). Arguments certified
/// below 1/2 go through log(x) = −log(1/x) first, which keeps w ≤ 1/4 and
/// the series recursion shallow.
pub fn log_cf(x: Cf) -> Cf {
    deferred(move || {
        let mut walker = PrefixWalker::new();
        let mut certified_positive = false;
        for i in 0..REFINE_CAP {
            walker.feed(&x.get(i))?;
            let (lo, hi) = walker.enclosure();
            if hi <= ExtendedRational::zero() {
                return Err(CfError::Domain("log of a nonpositive number".into()));
            }
            if lo > ExtendedRational::zero() {
                certified_positive = true;
                break;
            }
            if walker.exact {
                break;
            }
        }
        if !certified_positive {
            return Err(CfError::Domain(
                "cannot certify that the log argument is positive".into(),
            ));
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let two_fifths = BigRational::new(BigInt::from(2), BigInt::from(5));
        let (mut lo, mut hi) = {
            let (half, two_fifths) = (half.clone(), two_fifths.clone());
            finite_bounds_until(&x, REFINE_CAP, &move |lo: &BigRational, hi: &BigRational| {
                lo.is_positive() && (hi < &half || lo >= &two_fifths)
            })?
        };
        if hi < half {
            // log(x) = −log(1/x)
            let inv = Homographic::new(0, 1, 1, 0).unwrap().apply(x.clone());
            return Ok(Homographic::new(-1, 0, 0, 1).unwrap().apply(log_cf(inv)));
        }
        // Count how often e divides out, on rational bounds alone.
        let three = BigRational::from_integer(BigInt::from(3));
        let (e_lo, e_hi) = {
            let (a, b) = crate::extract::enclosure_after(&e_cf(), 8)?;
            match (a, b) {
                (ExtendedRational::Finite(a), ExtendedRational::Finite(b)) => (a, b),
                _ => unreachable!("constant stream has finite bounds"),
            }
        };
        let mut shift = 0i64;
        while lo >= three {
            lo /= &e_hi;
            hi /= &e_lo;
            shift += 1;
        }
        let arg = if shift == 0 {
            x.clone()
        } else {
            // x ≥ 3 > e: log(x) = k + log(x/e^k)
            div(x.clone(), int_power(e_cf(), &BigInt::from(shift)))
        };
        let z = Homographic::new(1, -1, 1, 1).unwrap().apply(arg);
        let w = mul(z.clone(), z.clone());
        let g = nested_eval(&log_series(), w);
        let t = mul(z, g);
        Ok(Homographic::new(2, shift, 0, 1).unwrap().apply(t))
    })
}

// ---------------------------------------------------------------------
// cos / sin / tan

/// Levels of cos via w = x²: c_n(w) = 1 − w·c_{n+1}(w)/(2n(2n−1)),
/// valid as an alternating series for w < 5/2 (guaranteed by range
/// reduction). Level 1 uses the partial-sum enclosure; levels n ≥ 2
/// immediately produce the terms 0 and 1 and hand the engine
/// (D − wy)/(wy) with the tail bound [(D−5)/5, ∞), D = 2n(2n−1).
struct CosLevels;

impl LevelSpec for CosLevels {
    fn plan(&self, n: u64, w: &Cf) -> Result<LevelPlan, CfError> {
        let d_int = {
            let n = BigInt::from(n);
            BigInt::from(2) * &n * (BigInt::from(2) * &n - BigInt::one())
        };
        let matrix = bih(
            [BigInt::from(-1), BigInt::zero(), BigInt::zero(), d_int.clone()],
            [BigInt::zero(), BigInt::zero(), BigInt::zero(), d_int.clone()],
        );
        // Pull a little extra looking for a positive lower bound on w: the
        // transformed tail below needs w bounded away from zero.
        let mut bounds = finite_bounds(w, REFINE_CAP)?;
        if !bounds.0.is_positive() {
            for pulls in 1..=16usize {
                bounds = match finite_bounds(w, pulls) {
                    Ok(b) => b,
                    Err(_) => continue,
                };
                if bounds.0.is_positive() || bounds.1.is_zero() {
                    break;
                }
            }
        }
        let (w_lo, w_hi) = bounds;
        if w_hi.is_zero() {
            return Ok(default_plan(Interval::point(ExtendedRational::one()), matrix));
        }
        if n >= 2 && w_lo.is_positive() {
            // c_n ∈ (0, 1): produce 0, then 1; the remaining tail
            // (1/M − 1)⁻¹ = (D − wy)/(wy) is bounded below by (D−5)/5.
            let m = matrix.produce(&BigInt::zero()).produce(&BigInt::one());
            let d = BigRational::from_integer(d_int);
            let tail_lo = (&d - rat_i(5)) / rat_i(5);
            let seed = Interval::new(ExtendedRational::from_big(tail_lo), PosInf);
            return Ok(LevelPlan {
                prelude: vec![
                    Element::term(0),
                    Element::term(1),
                    Element::Bound(seed.clone()),
                ],
                matrix: m,
                seed: Some(seed),
                fresh: Interval::tail_domain(),
            });
        }
        Ok(default_plan(cos_tail_bound(n, &w_lo, &w_hi), matrix))
    }
}

/// Alternating-series enclosure of the cos level value c_n(w) (used at
/// level 1, and at any level while w may still be 0, where the produced
/// tail transform would divide by zero): 1 − w/D ≤ c_n(w) ≤
/// 1 − w/D + w²/(D·D₂) with D = 2n(2n−1), D₂ = (2n+2)(2n+1); the upper
/// end is opened by a fraction of the w-slack so the supremum at w = 0
/// stays inside.
pub fn cos_tail_bound(n: u64, w_lo: &BigRational, w_hi: &BigRational) -> Interval {
    let w_lo = if w_lo.is_negative() { BigRational::zero() } else { w_lo.clone() };
    if w_hi.is_zero() {
        return Interval::point(ExtendedRational::one());
    }
    let d = {
        let n = BigInt::from(n);
        BigRational::from_integer(BigInt::from(2) * &n * (BigInt::from(2) * &n - BigInt::one()))
    };
    let d2 = {
        let n = BigInt::from(n);
        BigRational::from_integer(
            (BigInt::from(2) * &n + BigInt::from(2)) * (BigInt::from(2) * &n + BigInt::one()),
        )
    };
    let lo = BigRational::one() - w_hi / &d;
    let hi = BigRational::one() - &w_lo / &d + &w_lo * &w_lo / (&d * &d2)
        + (w_hi - &w_lo) / (rat_i(4) * &d);
    interval_rat(lo, hi)
}

/// Rewrites x as r (+ fold data) with |r| ≤ π/2 + 1/100 certified.
fn cos_reduce(x: Cf) -> Result<(Cf, bool), CfError> {
    let two_pi = Homographic::new(2, 0, 0, 1).unwrap().apply(pi_cf());
    let turns = approximate(
        &div(x.clone(), two_pi.clone()),
        &BigRational::new(BigInt::one(), BigInt::from(8)),
        REFINE_CAP,
    )?;
    let (lo, hi) = turns.enclosure();
    let q = match (&lo, &hi) {
        (ExtendedRational::Finite(l), ExtendedRational::Finite(h)) => {
            let mid = (l + h) / rat_i(2);
            (mid + BigRational::new(BigInt::one(), BigInt::from(2)))
                .floor()
                .to_integer()
        }
        _ => unreachable!("approximate returned a finite enclosure"),
    };
    let r = if q.is_zero() {
        x
    } else {
        let q2 = BigInt::from(2) * &q;
        sub(
            x,
            Homographic::new(q2, BigInt::zero(), BigInt::zero(), BigInt::one())
                .unwrap()
                .apply(pi_cf()),
        )
    };

    // Certify one of: |r| ≤ π/2 + 1/100 (direct), r ≥ π/2 − 1/100 (fold to
    // −cos(π − r)), r ≤ −(π/2 − 1/100) (fold to −cos(π + r)). The zones
    // overlap by 1/50, so refinement settles on one.
    let hundredth = BigRational::new(BigInt::one(), BigInt::from(100));
    let mut rw = PrefixWalker::new();
    let mut ri = 0usize;
    for pulls in 2..REFINE_CAP {
        while ri < pulls {
            rw.feed(&r.get(ri))?;
            ri += 1;
            if rw.exact {
                break;
            }
        }
        let (pi_lo, pi_hi) = crate::extract::enclosure_after(&pi_cf(), pulls)?;
        let (ExtendedRational::Finite(pi_lo), ExtendedRational::Finite(pi_hi)) = (pi_lo, pi_hi)
        else {
            continue;
        };
        let (r_lo, r_hi) = rw.enclosure();
        let (ExtendedRational::Finite(r_lo), ExtendedRational::Finite(r_hi)) = (r_lo, r_hi)
        else {
            continue;
        };
        let direct_cap = pi_lo / rat_i(2) + &hundredth;
        if r_hi <= direct_cap && r_lo >= -&direct_cap {
            return Ok((r, false));
        }
        let fold_floor = pi_hi / rat_i(2) - &hundredth;
        if r_lo >= fold_floor {
            return Ok((sub(pi_cf(), r), true));
        }
        if r_hi <= -fold_floor {
            return Ok((crate::bihomographic::add(pi_cf(), r), true));
        }
        if rw.exact {
            // An exact rational never sits in no zone once π is refined
            // enough; keep refining π only.
            continue;
        }
    }
    Err(CfError::Domain(
        "cannot range-reduce the trigonometric argument".into(),
    ))
}

pub fn cos_cf(x: Cf) -> Cf {
    deferred(move || {
        let (r, folded) = cos_reduce(x.clone())?;
        let w = mul(r.clone(), r);
        let spec: Arc<dyn LevelSpec> = Arc::new(CosLevels);
        let c = level_stream(spec, 1, w);
        Ok(if folded {
            Homographic::new(-1, 0, 0, 1).unwrap().apply(c)
        } else {
            c
        })
    })
}

pub fn sin_cf(x: Cf) -> Cf {
    // sin(x) = cos(x − π/2)
    let shifted = sub(x, Homographic::new(1, 0, 0, 2).unwrap().apply(pi_cf()));
    cos_cf(shifted)
}

pub fn tan_cf(x: Cf) -> Cf {
    div(sin_cf(x.clone()), cos_cf(x))
}

// ---------------------------------------------------------------------
// arcsin

/// Series for a(w) = arcsin(√w)/√w on 0 ≤ w ≤ 1: level n is
/// y ↦ 1 + (2n−1)²/(2n(2n+1))·wy with the tail bound
/// [1, 1 + 4·w_hi/(7·t_{n−1})), t_k = (2k)!/(4^k (k!)² (2k+1)).
pub fn arcsin_series() -> NestedSeries {
    NestedSeries::new(
        1,
        |n| {
            let n = BigInt::from(n);
            let odd = BigInt::from(2) * &n - BigInt::one();
            let den = BigInt::from(2) * &n * (BigInt::from(2) * &n + BigInt::one());
            bih(
                [&odd * &odd, BigInt::zero(), BigInt::zero(), den.clone()],
                [BigInt::zero(), BigInt::zero(), BigInt::zero(), den],
            )
        },
        |n, w_lo, w_hi| {
            let w_lo = if w_lo.is_negative() { BigRational::zero() } else { w_lo.clone() };
            if w_lo.is_zero() && w_hi.is_zero() {
                return Interval::point(ExtendedRational::one());
            }
            let t_prev = catalan_like(n - 1);
            let hi = BigRational::one() + rat_i(4) * w_hi / (rat_i(7) * t_prev);
            interval_rat(BigRational::one(), hi)
        },
    )
}

/// t_k = (2k)!/(4^k (k!)² (2k+1)), computed by the ratio recurrence.
fn catalan_like(k: u64) -> BigRational {
    let mut t = BigRational::one();
    for j in 1..=k {
        let j = i64::try_from(j).unwrap();
        t *= BigRational::new(
            BigInt::from((2 * j - 1) * (2 * j - 1)),
            BigInt::from(2 * j * (2 * j + 1)),
        );
    }
    t
}

pub fn arcsin_cf(x: Cf) -> Cf {
    deferred(move || {
        let one = ExtendedRational::one();
        let minus_one = ExtendedRational::integer(-1);
        let mut walker = PrefixWalker::new();
        let mut inside = false;
        for i in 0..REFINE_CAP {
            walker.feed(&x.get(i))?;
            let (lo, hi) = walker.enclosure();
            if lo > one || hi < minus_one {
                return Err(CfError::Domain("arcsin argument outside [-1, 1]".into()));
            }
            if walker.exact {
                if lo == one {
                    // Exactly 1: the series cannot contract there, but the
                    // value is π/2.
                    return Ok(Homographic::new(1, 0, 0, 2).unwrap().apply(pi_cf()));
                }
                if lo == minus_one {
                    return Ok(Homographic::new(-1, 0, 0, 2).unwrap().apply(pi_cf()));
                }
                inside = minus_one <= lo && hi <= one;
                break;
            }
            // Strictly inside: safe for the series. Exact ±1 can only be
            // ruled in or out by reaching the end of a rational input.
            if lo > minus_one && hi < one {
                inside = true;
                break;
            }
        }
        if !inside {
            return Err(CfError::Domain(
                "cannot certify that the arcsin argument is within [-1, 1]".into(),
            ));
        }
        let w = mul(x.clone(), x.clone());
        let a = nested_eval(&arcsin_series(), w);
        Ok(mul(x.clone(), a))
    })
}

// ---------------------------------------------------------------------
// π and the pattern constants

/// Levels of the accelerated π series: p_i = 5i−2 + i(2i−1)/(3(3i+1)(3i+2))·p_{i+1},
/// with (27i−12)/5 ≤ p_i < 27i/5 − 216/125. There is no real argument;
/// the w slot is fed the constant zero stream.
pub fn pi_series() -> NestedSeries {
    NestedSeries::new(
        1,
        |i| {
            let i = BigInt::from(i);
            let num_y = &i * (BigInt::from(2) * &i - BigInt::one());
            let den = BigInt::from(3)
                * (BigInt::from(3) * &i + BigInt::one())
                * (BigInt::from(3) * &i + BigInt::from(2));
            let head = BigInt::from(5) * &i - BigInt::from(2);
            bih(
                [BigInt::zero(), BigInt::zero(), num_y, &den * &head],
                [BigInt::zero(), BigInt::zero(), BigInt::zero(), den],
            )
        },
        |i, _, _| {
            let i = rat_i(i as i64);
            let lo = (rat_i(27) * &i - rat_i(12)) / rat_i(5);
            let hi = rat_i(27) * &i / rat_i(5) - BigRational::new(216.into(), 125.into());
            interval_rat(lo, hi)
        },
    )
}

/// π as a process-wide memoized constant stream.
pub fn pi_cf() -> Cf {
    static PI: OnceLock<Cf> = OnceLock::new();
    PI.get_or_init(|| nested_eval(&pi_series(), Cf::from_rational(0, 1)))
        .clone()
}

/// e = [2; 1, 2, 1, 1, 4, 1, 1, 6, …] as a pattern stream.
pub fn e_cf() -> Cf {
    static E: OnceLock<Cf> = OnceLock::new();
    E.get_or_init(|| {
        Cf::from_term_iter((0u64..).map(|i| match i {
            0 => BigInt::from(2),
            _ => match (i - 1) % 3 {
                1 => BigInt::from(2 * ((i - 1) / 3 + 1)),
                _ => BigInt::one(),
            },
        }))
    })
    .clone()
}

/// √e = [1; 1, 1, 1, 5, 1, 1, 9, …] as a pattern stream.
pub fn sqrt_e_cf() -> Cf {
    static SQRT_E: OnceLock<Cf> = OnceLock::new();
    SQRT_E
        .get_or_init(|| {
            Cf::from_term_iter((0u64..).map(|i| match i {
                0 => BigInt::one(),
                _ => match (i - 1) % 3 {
                    0 => BigInt::from(4 * ((i - 1) / 3) + 1),
                    _ => BigInt::one(),
                },
            }))
        })
        .clone()
}

/// Defers a fallible stream construction to the first pull, surfacing
/// errors as stream faults.
fn deferred(make: impl FnOnce() -> Result<Cf, CfError> + Send + 'static) -> Cf {
    let mut make = Some(make);
    let mut built: Option<Cf> = None;
    let mut idx = 0usize;
    Cf::from_fn(move || {
        if built.is_none() {
            match (make.take().expect("deferred init runs once"))() {
                Ok(cf) => built = Some(cf),
                Err(e) => {
                    built = Some(Cf::fault(e));
                }
            }
        }
        let el = built.as_ref().unwrap().get(idx);
        idx += 1;
        el
    })
}
