//! Turning interval streams into answers: ε-accurate term prefixes with
//! exact rational enclosures, and certified decimal digit strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::CfError;
use crate::homographic::Homographic;
use crate::interval::Interval;
use crate::rational::{ExtendedRational, PosInf};
use crate::stream::{eval_prefix_with_tail, Cf, Element};

/// Default pull budget for extraction; hitting it is an error, never a
/// silent truncation.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Streams that never provide any finite enclosure (dividing by a value
/// indistinguishable from zero, say) fail after this many pulls instead of
/// burning the whole budget: every healthy stream turns finite within a
/// handful of elements, and each fruitless pull of a nested stream forces
/// progressively deeper (more expensive) refinement of its inputs.
const NEVER_FINITE_PULLS: usize = 128;

/// Walks a stream prefix, tracking the certified terms and the current
/// tail bound (closed endpoints, conservative). Convergent numerators and
/// denominators accumulate incrementally, so each enclosure evaluation is
/// a single linear-fractional map instead of a walk over all terms:
/// [z_0 … z_{k−1}, t] = (P_{k−1} t + P_{k−2}) / (Q_{k−1} t + Q_{k−2}).
#[derive(Clone, Debug)]
pub(crate) struct PrefixWalker {
    pub terms: Vec<BigInt>,
    pub tail_lo: ExtendedRational,
    pub tail_hi: ExtendedRational,
    pub exact: bool,
    p1: BigInt,
    p0: BigInt,
    q1: BigInt,
    q0: BigInt,
}

impl PrefixWalker {
    pub fn new() -> Self {
        PrefixWalker {
            terms: Vec::new(),
            tail_lo: ExtendedRational::NegInf,
            tail_hi: PosInf,
            exact: false,
            p1: BigInt::one(),
            p0: BigInt::zero(),
            q1: BigInt::zero(),
            q0: BigInt::one(),
        }
    }

    pub fn feed(&mut self, el: &Element) -> Result<(), CfError> {
        match el {
            Element::Fault(e) => return Err(e.clone()),
            Element::End => {
                self.exact = true;
                self.tail_lo = PosInf;
                self.tail_hi = PosInf;
            }
            Element::Bound(b) => match b.as_term() {
                Some(a) => {
                    let p = &a * &self.p1 + &self.p0;
                    let q = &a * &self.q1 + &self.q0;
                    self.p0 = std::mem::replace(&mut self.p1, p);
                    self.q0 = std::mem::replace(&mut self.q1, q);
                    self.terms.push(a);
                    self.tail_lo = ExtendedRational::one();
                    self.tail_hi = PosInf;
                }
                None => {
                    self.tail_lo = b.lo().clone();
                    self.tail_hi = b.hi().clone();
                }
            },
        }
        Ok(())
    }

    fn eval_tail(&self, tail: &ExtendedRational) -> ExtendedRational {
        match tail.as_finite() {
            None => {
                if self.q1.is_zero() {
                    // No terms yet: the map is the identity.
                    return tail.clone();
                }
                // tail = ∞ gives the plain convergent.
                ExtendedRational::ratio(self.p1.clone(), self.q1.clone())
            }
            Some(t) => {
                let num = BigRational::from_integer(self.p1.clone()) * t
                    + BigRational::from_integer(self.p0.clone());
                let den = BigRational::from_integer(self.q1.clone()) * t
                    + BigRational::from_integer(self.q0.clone());
                if den.is_zero() {
                    return PosInf;
                }
                ExtendedRational::from_big(num / den)
            }
        }
    }

    /// Conservative closed enclosure of the represented value.
    pub fn enclosure(&self) -> (ExtendedRational, ExtendedRational) {
        let a = self.eval_tail(&self.tail_lo);
        let b = self.eval_tail(&self.tail_hi);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn width(&self) -> ExtendedRational {
        let (lo, hi) = self.enclosure();
        hi - lo
    }
}

/// The result of extracting a prefix: certified terms [z_0 … z_{k−1}]
/// plus the final bound [ℓ_k, u_k) on the remaining tail (both +∞ when
/// the stream ended and the value is exactly the convergent).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximation {
    pub terms: Vec<BigInt>,
    pub tail_lo: ExtendedRational,
    pub tail_hi: ExtendedRational,
    pub exact: bool,
}

impl Approximation {
    fn from_walker(w: PrefixWalker) -> Self {
        Approximation {
            terms: w.terms,
            tail_lo: w.tail_lo,
            tail_hi: w.tail_hi,
            exact: w.exact,
        }
    }

    /// Closed exact enclosure of the value.
    pub fn enclosure(&self) -> (ExtendedRational, ExtendedRational) {
        let a = eval_prefix_with_tail(&self.terms, self.tail_lo.clone());
        let b = eval_prefix_with_tail(&self.terms, self.tail_hi.clone());
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn width(&self) -> ExtendedRational {
        let (lo, hi) = self.enclosure();
        hi - lo
    }

    /// The canonical last term z'_k = ⌊u_k⌋, if the tail bound pins one.
    pub fn final_term(&self) -> Option<BigInt> {
        if self.exact {
            return None;
        }
        self.tail_hi.floor()
    }

    /// Certified terms completed with z'_k; exact results are folded so
    /// they never end in a trailing 1.
    pub fn canonical_terms(&self) -> Vec<BigInt> {
        let mut ts = self.terms.clone();
        if self.exact {
            while ts.len() >= 2 && ts.last().unwrap().is_one() {
                ts.pop();
                *ts.last_mut().unwrap() += 1;
            }
            return ts;
        }
        if let Some(z) = self.final_term() {
            ts.push(z);
        }
        ts
    }

    /// {"terms": […], "tail_lo": "p/q", "tail_hi": "p/q", "decimal": "…"}
    pub fn to_json(&self, decimal: &str) -> String {
        let terms: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        format!(
            "{{\"terms\": [{}], \"tail_lo\": \"{}\", \"tail_hi\": \"{}\", \"decimal\": \"{}\"}}",
            terms.join(", "),
            self.tail_lo,
            self.tail_hi,
            decimal
        )
    }
}

/// Pulls z until the enclosure width is ≤ eps (or the stream ends).
pub fn approximate(z: &Cf, eps: &BigRational, max_iters: usize) -> Result<Approximation, CfError> {
    assert!(eps.is_positive(), "eps must be positive");
    let eps = ExtendedRational::from_big(eps.clone());
    let mut walker = PrefixWalker::new();
    for i in 0..max_iters {
        walker.feed(&z.get(i))?;
        if walker.exact {
            if walker.terms.is_empty() {
                return Err(CfError::NotFinite);
            }
            return Ok(Approximation::from_walker(walker));
        }
        let width = walker.width();
        if width <= eps {
            return Ok(Approximation::from_walker(walker));
        }
        if !width.is_finite() && i + 1 >= NEVER_FINITE_PULLS.min(max_iters) {
            return Err(CfError::IterationCap { cap: i + 1 });
        }
    }
    Err(CfError::IterationCap { cap: max_iters })
}

/// Pulls z until n terms are certified (or the stream ends sooner).
pub fn first_terms(z: &Cf, n: usize, max_iters: usize) -> Result<Approximation, CfError> {
    let mut walker = PrefixWalker::new();
    if n == 0 {
        return Ok(Approximation::from_walker(walker));
    }
    for i in 0..max_iters {
        walker.feed(&z.get(i))?;
        if walker.exact {
            if walker.terms.is_empty() {
                return Err(CfError::NotFinite);
            }
            return Ok(Approximation::from_walker(walker));
        }
        if walker.terms.len() >= n {
            return Ok(Approximation::from_walker(walker));
        }
        if walker.terms.is_empty()
            && !walker.width().is_finite()
            && i + 1 >= NEVER_FINITE_PULLS.min(max_iters)
        {
            return Err(CfError::IterationCap { cap: i + 1 });
        }
    }
    Err(CfError::IterationCap { cap: max_iters })
}

/// Closed rational enclosure after pulling at most `pulls` elements.
pub fn enclosure_after(z: &Cf, pulls: usize) -> Result<(ExtendedRational, ExtendedRational), CfError> {
    let mut walker = PrefixWalker::new();
    for i in 0..pulls {
        walker.feed(&z.get(i))?;
        if walker.exact {
            break;
        }
    }
    Ok(walker.enclosure())
}

/// Sign + digit string of z with n fractional digits. Digits are certified
/// through the homographic engine with the base-10 produce transformation
/// M ← 10(M − d); when a digit stays undecided but the enclosure width has
/// dropped below 10^−(n+2), the remaining digits are rounded to nearest
/// and the string is marked with a trailing "~".
pub fn to_decimal(z: &Cf, n_digits: usize, max_iters: usize) -> Result<String, CfError> {
    let threshold = pow10_recip(n_digits + 2);

    // Certify the sign first (or bail out to the rounded form).
    let mut walker = PrefixWalker::new();
    let mut pulls = 0usize;
    let negative = loop {
        if pulls >= max_iters {
            return Err(CfError::IterationCap { cap: max_iters });
        }
        walker.feed(&z.get(pulls))?;
        pulls += 1;
        if walker.exact && walker.terms.is_empty() {
            return Err(CfError::NotFinite);
        }
        let (lo, hi) = walker.enclosure();
        if lo >= ExtendedRational::zero() {
            break false;
        }
        if hi < ExtendedRational::zero() {
            break true;
        }
        match (&lo, &hi) {
            (ExtendedRational::Finite(l), ExtendedRational::Finite(h)) => {
                if h - l < threshold {
                    // Straddling zero with a tiny enclosure: everything
                    // rounds to zero.
                    return Ok(format!("{}~", format_fixed(&BigRational::zero(), n_digits)));
                }
            }
            _ => {
                if pulls >= NEVER_FINITE_PULLS.min(max_iters) {
                    return Err(CfError::IterationCap { cap: pulls });
                }
            }
        }
    };

    let start = if negative {
        Homographic::raw(BigInt::from(-1), BigInt::zero(), BigInt::zero(), BigInt::one(), Interval::full())
    } else {
        Homographic::identity()
    };
    let digits = DigitEngine {
        m: start,
        input: z.clone(),
        cursor: 0,
        input_done: false,
        budget: max_iters,
        cap: max_iters,
    }
    .run(n_digits, &threshold)?;
    Ok(if negative { format!("-{digits}") } else { digits })
}

struct DigitEngine {
    m: Homographic,
    input: Cf,
    cursor: usize,
    input_done: bool,
    budget: usize,
    cap: usize,
}

impl DigitEngine {
    fn run(mut self, n_digits: usize, threshold: &BigRational) -> Result<String, CfError> {
        let ten = BigInt::from(10);
        let mut int_part: Option<BigInt> = None;
        let mut frac = String::new();
        // Exact value of the emitted prefix, and the scale 10^-j.
        let mut prefix = BigRational::zero();
        let mut scale = BigRational::one();

        loop {
            if int_part.is_some() && frac.len() >= n_digits {
                let head = int_part.unwrap().to_string();
                return Ok(if n_digits == 0 {
                    head
                } else {
                    format!("{head}.{frac}")
                });
            }
            if self.m.p.is_zero() && self.m.r.is_zero() && self.m.s.is_zero() {
                return if self.m.q.is_zero() {
                    Err(CfError::DivisionByZero)
                } else {
                    Err(CfError::NotFinite)
                };
            }
            let range = self.m.range_info();
            if let Some(k) = range.pinned_floor() {
                match &int_part {
                    None => {
                        assert!(!k.is_negative(), "sign was certified before digits");
                        int_part = Some(k.clone());
                    }
                    Some(_) if k == ten => {
                        // The previous stage pinned one low because its
                        // upper endpoint was actually attained (the value
                        // sits exactly on a half-open boundary): carry one
                        // into the emitted digits and keep going with the
                        // zero remainder.
                        carry_one(int_part.as_mut().unwrap(), &mut frac);
                    }
                    Some(_) => {
                        let d = k.to_u8().filter(|d| *d <= 9).expect("certified digit in 0..=9");
                        frac.push(char::from(b'0' + d));
                    }
                }
                // M ← 10(M − k): the represented value is now at the next
                // scale down.
                prefix += BigRational::from_integer(k.clone()) * &scale;
                scale /= &ten;
                self.m = digit_produce(&self.m, &k);
                continue;
            }
            let range = range.interval;
            // Undecided: see whether the remaining enclosure is already
            // below the rounding threshold.
            if range.has_finite_width() {
                if let (ExtendedRational::Finite(lo), ExtendedRational::Finite(hi)) =
                    (range.lo(), range.hi())
                {
                    let width = (hi - lo) * &scale;
                    if &width < threshold {
                        let mid = &prefix + (lo + hi) / BigRational::from_integer(2.into()) * &scale;
                        let mid = if mid.is_negative() { BigRational::zero() } else { mid };
                        return Ok(format!("{}~", format_fixed(&mid, n_digits)));
                    }
                }
            }
            self.read_input()?;
        }
    }

    fn read_input(&mut self) -> Result<(), CfError> {
        if self.budget == 0 {
            return Err(CfError::IterationCap { cap: self.cap });
        }
        self.budget -= 1;
        if self.input_done {
            // The matrix is a constant with a nonzero denominator here, so
            // every remaining digit pins without further input.
            unreachable!("digit engine stalled after input end");
        }
        let el = self.input.get(self.cursor);
        self.cursor += 1;
        match el {
            Element::Bound(b) => match b.as_term() {
                Some(k) => self.m = self.m.ingest(&k),
                None => self.m.input_bound = b,
            },
            Element::End => {
                self.input_done = true;
                self.m = self.m.ingest_end()?;
            }
            Element::Fault(e) => return Err(e),
        }
        Ok(())
    }
}

/// Adds one to the last emitted digit, cascading through trailing 9s.
fn carry_one(int_part: &mut BigInt, frac: &mut String) {
    let mut digits: Vec<u8> = frac.bytes().collect();
    let mut carried = false;
    for b in digits.iter_mut().rev() {
        if *b == b'9' {
            *b = b'0';
        } else {
            *b += 1;
            carried = true;
            break;
        }
    }
    if !carried {
        *int_part += 1;
    }
    *frac = String::from_utf8(digits).unwrap();
}

/// M ← base(M − k): after this the floor of M is the next digit.
fn digit_produce(m: &Homographic, k: &BigInt) -> Homographic {
    let ten = BigInt::from(10);
    Homographic::raw(
        (&m.p - k * &m.r) * &ten,
        (&m.q - k * &m.s) * &ten,
        m.r.clone(),
        m.s.clone(),
        m.input_bound.clone(),
    )
}

fn pow10_recip(n: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10).pow(n as u32))
}

/// v ≥ 0 rendered with exactly n fractional digits, rounding half up.
fn format_fixed(v: &BigRational, n: usize) -> String {
    let scale = BigInt::from(10).pow(n as u32);
    let scaled = v * BigRational::from_integer(scale.clone())
        + BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = scaled.floor().to_integer();
    let (int, frac) = (rounded.clone() / &scale, rounded % &scale);
    if n == 0 {
        return int.to_string();
    }
    format!("{}.{:0>width$}", int, frac.to_string(), width = n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bihomographic::{add, div, mul, sub};

    fn eps(num: i64, pow: u32) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(10).pow(pow))
    }

    fn sqrt2() -> Cf {
        Cf::from_terms(1, &[], Some(&[2])).unwrap()
    }

    #[test]
    fn approximate_squared_sqrt2_is_two_for_any_eps() {
        let z = mul(sqrt2(), sqrt2());
        for e in [eps(1, 0), eps(1, 10), eps(1, 30)] {
            let a = approximate(&z, &e, DEFAULT_MAX_ITERS).unwrap();
            assert!(a.terms.is_empty());
            assert_eq!(a.canonical_terms(), vec![BigInt::from(2)]);
            let (lo, hi) = a.enclosure();
            assert!(lo <= ExtendedRational::integer(2) && ExtendedRational::integer(2) <= hi);
        }
    }

    #[test]
    fn approximate_rational_is_exact() {
        let z = Cf::from_rational(355, 113);
        let a = approximate(&z, &eps(1, 6), DEFAULT_MAX_ITERS).unwrap();
        assert!(a.exact);
        assert_eq!(a.canonical_terms(), vec![BigInt::from(3), BigInt::from(7), BigInt::from(16)]);
        assert!(a.width().is_zero());
    }

    #[test]
    fn approximate_sub_self_gives_zero() {
        let s = sqrt2();
        let z = sub(s.clone(), s);
        let a = approximate(&z, &eps(1, 20), DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(a.canonical_terms(), vec![BigInt::zero()]);
    }

    #[test]
    fn approximate_div_self_gives_one() {
        let s = sqrt2();
        let z = div(s.clone(), s);
        for e in [eps(1, 0), eps(1, 12)] {
            let a = approximate(&z, &e, DEFAULT_MAX_ITERS).unwrap();
            assert_eq!(a.canonical_terms(), vec![BigInt::one()]);
        }
    }

    #[test]
    fn approximate_division_by_zero_is_reported() {
        let z = div(Cf::from_rational(3, 1), Cf::from_rational(0, 1));
        assert_eq!(
            approximate(&z, &eps(1, 2), DEFAULT_MAX_ITERS).unwrap_err(),
            CfError::NotFinite
        );
    }

    #[test]
    fn iteration_cap_fires() {
        let s = sqrt2();
        let z = sub(s.clone(), s);
        // 10^-30 within 20 pulls is not achievable here.
        assert_eq!(
            approximate(&z, &eps(1, 30), 20).unwrap_err(),
            CfError::IterationCap { cap: 20 }
        );
    }

    #[test]
    fn first_terms_collects_explicit_terms() {
        let z = add(Cf::from_rational(1, 2), Cf::from_rational(1, 3));
        let a = first_terms(&z, 10, DEFAULT_MAX_ITERS).unwrap();
        assert!(a.exact);
        assert_eq!(
            a.terms,
            vec![BigInt::zero(), BigInt::one(), BigInt::from(5)]
        );
    }

    #[test]
    fn to_decimal_rational() {
        let z = Cf::from_rational(1, 4);
        assert_eq!(to_decimal(&z, 3, DEFAULT_MAX_ITERS).unwrap(), "0.250");
        let z = Cf::from_rational(-1, 2);
        assert_eq!(to_decimal(&z, 4, DEFAULT_MAX_ITERS).unwrap(), "-0.5000");
        let z = Cf::from_rational(1234, 1);
        assert_eq!(to_decimal(&z, 0, DEFAULT_MAX_ITERS).unwrap(), "1234");
    }

    #[test]
    fn to_decimal_sqrt2() {
        let z = sqrt2();
        assert_eq!(
            to_decimal(&z, 15, DEFAULT_MAX_ITERS).unwrap(),
            "1.414213562373095"
        );
    }

    #[test]
    fn to_decimal_marks_undecidable_floor() {
        // (√2)² never certifies whether it is 1.999… or 2.000…; the
        // rounded form with the marker appears instead.
        let z = mul(sqrt2(), sqrt2());
        let s = to_decimal(&z, 6, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(s, "2.000000~");
    }

    #[test]
    fn to_decimal_carries_on_attained_boundary() {
        // [1; 1] = 2 exactly: the tail sits on the half-open boundary, so
        // the integer part pins one low at first and the carry repairs it.
        let z = Cf::from_terms(1, &[1], None).unwrap();
        assert_eq!(to_decimal(&z, 3, DEFAULT_MAX_ITERS).unwrap(), "2.000");
        let z = Cf::from_terms(0, &[1, 1], None).unwrap(); // [0;1,1] = 1/2... = 0 + 1/(1 + 1/1)
        assert_eq!(to_decimal(&z, 2, DEFAULT_MAX_ITERS).unwrap(), "0.50");
    }

    #[test]
    fn to_decimal_near_zero_difference() {
        let s = sqrt2();
        let z = sub(s.clone(), s);
        assert_eq!(to_decimal(&z, 4, DEFAULT_MAX_ITERS).unwrap(), "0.0000~");
    }

    #[test]
    fn monotone_refinement_extends_terms() {
        let z = add(sqrt2(), Cf::from_rational(22, 7));
        let coarse = approximate(&z, &eps(1, 4), DEFAULT_MAX_ITERS).unwrap();
        let fine = approximate(&z, &eps(1, 12), DEFAULT_MAX_ITERS).unwrap();
        assert!(fine.terms.len() >= coarse.terms.len());
        assert_eq!(&fine.terms[..coarse.terms.len()], &coarse.terms[..]);
    }

    #[test]
    fn json_shape() {
        let z = Cf::from_rational(7, 2);
        let a = approximate(&z, &eps(1, 2), DEFAULT_MAX_ITERS).unwrap();
        let j = a.to_json("3.50");
        assert_eq!(
            j,
            "{\"terms\": [3, 2], \"tail_lo\": \"inf\", \"tail_hi\": \"inf\", \"decimal\": \"3.50\"}"
        );
    }

    #[test]
    fn format_fixed_rounds_half_up() {
        assert_eq!(format_fixed(&BigRational::new(1.into(), 3.into()), 4), "0.3333");
        assert_eq!(format_fixed(&BigRational::new(1.into(), 2.into()), 0), "1");
        assert_eq!(format_fixed(&BigRational::new(19999.into(), 10000.into()), 3), "2.000");
    }
}
