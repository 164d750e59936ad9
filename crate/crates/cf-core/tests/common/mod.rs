//! Independent big-rational oracles with proven remainder bounds, plus
//! small sampling helpers. Everything here is deliberately computed by a
//! different route than the library under test (plain truncated series
//! with explicit tail estimates).

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Deeply nested streams recurse one frame chain per level; run on a
/// thread with a roomy stack.
pub fn on_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(f)
        .unwrap()
        .join()
        .unwrap()
}

pub fn pow10(n: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(10).pow(n))
}

pub fn eps10(n: u32) -> BigRational {
    pow10(n).recip()
}

/// Enclosure of arctan(1/x) for integer x ≥ 2 by the alternating series;
/// the error is at most the first omitted term.
fn atan_inv_bounds(x: i64, eps: &BigRational) -> (BigRational, BigRational) {
    let x2 = BigRational::from_integer(BigInt::from(x * x));
    let mut term = BigRational::new(BigInt::one(), BigInt::from(x));
    let mut sum = BigRational::zero();
    let mut k = 0u32;
    loop {
        sum += if k % 2 == 0 { term.clone() } else { -term.clone() };
        k += 1;
        term = term / &x2 * BigRational::from_integer(BigInt::from(2 * k as i64 - 1))
            / BigRational::from_integer(BigInt::from(2 * k as i64 + 1));
        if &term < eps {
            break;
        }
    }
    (sum.clone() - &term, sum + &term)
}

/// Machin's formula: π = 16·arctan(1/5) − 4·arctan(1/239).
pub fn pi_bounds(eps: &BigRational) -> (BigRational, BigRational) {
    let e = eps / BigRational::from_integer(BigInt::from(64));
    let (a_lo, a_hi) = atan_inv_bounds(5, &e);
    let (b_lo, b_hi) = atan_inv_bounds(239, &e);
    let sixteen = BigRational::from_integer(BigInt::from(16));
    let four = BigRational::from_integer(BigInt::from(4));
    (
        &sixteen * &a_lo - &four * &b_hi,
        &sixteen * &a_hi - &four * &b_lo,
    )
}

/// Enclosure of e^x: truncated series plus the geometric tail estimate
/// |R_m| ≤ |x|^{m+1}/(m+1)! · 1/(1 − |x|/(m+2)) once m + 2 > 2|x|.
pub fn exp_bounds(x: &BigRational, eps: &BigRational) -> (BigRational, BigRational) {
    let mut sum = BigRational::one();
    let mut term = BigRational::one(); // x^k / k!
    let mut k = 0i64;
    loop {
        k += 1;
        term = term * x / BigRational::from_integer(BigInt::from(k));
        sum += &term;
        let next = term.abs() * x.abs() / BigRational::from_integer(BigInt::from(k + 1));
        if BigRational::from_integer(BigInt::from(k + 2)) > x.abs() + x.abs() {
            let bound = &next / (BigRational::one() - x.abs() / BigRational::from_integer(BigInt::from(k + 2)));
            if &bound < eps {
                return (sum.clone() - &bound, sum + &bound);
            }
        }
    }
}

/// Enclosure of ln(x) for x > 0 via the atanh series in z = (x−1)/(x+1):
/// ln x = 2·Σ z^(2k+1)/(2k+1), |R| ≤ 2|z|^(2m+3)/((2m+3)(1−z²)).
pub fn ln_bounds(x: &BigRational, eps: &BigRational) -> (BigRational, BigRational) {
    assert!(x.is_positive());
    let z = (x - BigRational::one()) / (x + BigRational::one());
    let z2 = &z * &z;
    let mut sum = BigRational::zero();
    let mut zpow = z.clone(); // z^(2k+1)
    let mut k = 0i64;
    loop {
        sum += &zpow / BigRational::from_integer(BigInt::from(2 * k + 1));
        zpow *= &z2;
        k += 1;
        let rem = zpow.abs() / BigRational::from_integer(BigInt::from(2 * k + 1))
            / (BigRational::one() - &z2);
        if &(rem.clone() + rem.clone()) < eps {
            let two = BigRational::from_integer(BigInt::from(2));
            let s = &two * sum;
            let r = two * rem;
            return (s.clone() - &r, s + r);
        }
    }
}

/// Enclosure of cos(x) by the alternating series; the remainder is taken
/// only once the term ratio has dropped below 1.
pub fn cos_bounds(x: &BigRational, eps: &BigRational) -> (BigRational, BigRational) {
    let x2 = x * x;
    let mut sum = BigRational::one();
    let mut term = BigRational::one(); // |x^(2k)/(2k)!|
    let mut k = 0i64;
    loop {
        k += 1;
        term = term * &x2
            / BigRational::from_integer(BigInt::from((2 * k - 1) * 2 * k));
        sum += if k % 2 == 0 { term.clone() } else { -term.clone() };
        let ratio = &x2 / BigRational::from_integer(BigInt::from((2 * k + 1) * (2 * k + 2)));
        if ratio < BigRational::one() {
            let next = term.abs() * ratio;
            if &next < eps {
                return (sum.clone() - &next, sum + &next);
            }
        }
    }
}

pub fn sin_bounds(x: &BigRational, eps: &BigRational) -> (BigRational, BigRational) {
    let x2 = x * x;
    let mut sum = x.clone();
    let mut term = x.clone();
    let mut k = 0i64;
    loop {
        k += 1;
        term = term * &x2
            / BigRational::from_integer(BigInt::from(2 * k * (2 * k + 1)));
        sum += if k % 2 == 0 { term.clone() } else { -term.clone() };
        let ratio = &x2 / BigRational::from_integer(BigInt::from((2 * k + 2) * (2 * k + 3)));
        if ratio < BigRational::one() {
            let next = term.abs() * ratio;
            if &next < eps {
                return (sum.clone() - &next, sum + &next);
            }
        }
    }
}

/// t_k = (2k)!/(4^k (k!)² (2k+1)), the arcsin series coefficients.
pub fn arcsin_coeff(k: u64) -> BigRational {
    let mut t = BigRational::one();
    for j in 1..=k as i64 {
        t *= BigRational::new(
            BigInt::from((2 * j - 1) * (2 * j - 1)),
            BigInt::from(2 * j * (2 * j + 1)),
        );
    }
    t
}

/// Enclosure of arcsin(x) for |x| < 1: Σ t_k x^(2k+1) with the geometric
/// tail |R| ≤ t_(m+1)|x|^(2m+3)/(1 − x²) (the t_k are decreasing).
pub fn arcsin_bounds(x: &BigRational, eps: &BigRational) -> (BigRational, BigRational) {
    assert!(x.abs() < BigRational::one());
    let x2 = x * x;
    let mut sum = BigRational::zero();
    let mut xpow = x.clone(); // x^(2k+1)
    let mut t = BigRational::one();
    let mut k = 0i64;
    loop {
        sum += &t * &xpow;
        k += 1;
        t *= BigRational::new(
            BigInt::from((2 * k - 1) * (2 * k - 1)),
            BigInt::from(2 * k * (2 * k + 1)),
        );
        xpow *= &x2;
        let rem = (&t * xpow.abs()) / (BigRational::one() - &x2);
        if &rem < eps {
            return (sum.clone() - &rem, sum + &rem);
        }
    }
}

#[cfg(test)]
mod selfcheck {
    use super::*;

    #[test]
    fn oracle_sanity() {
        let eps = eps10(12);
        let (lo, hi) = pi_bounds(&eps);
        let pi_ref = rat(3_141_592_653_589_793_238, 1_000_000_000_000_000_000);
        assert!(lo <= pi_ref && pi_ref <= hi);

        let (lo, hi) = exp_bounds(&rat(1, 1), &eps);
        let e_ref = rat(2_718_281_828_459_045_235, 1_000_000_000_000_000_000);
        assert!(lo <= e_ref && e_ref <= hi);

        let (lo, hi) = ln_bounds(&rat(2, 1), &eps);
        let ln2 = rat(693_147_180_559_945_309, 1_000_000_000_000_000_000);
        assert!(lo <= ln2 && ln2 <= hi);

        let (lo, hi) = cos_bounds(&rat(1, 1), &eps);
        let c1 = rat(540_302_305_868_139_717, 1_000_000_000_000_000_000);
        assert!(lo <= c1 && c1 <= hi);

        let (lo, hi) = sin_bounds(&rat(1, 1), &eps);
        let s1 = rat(841_470_984_807_896_507, 1_000_000_000_000_000_000);
        assert!(lo <= s1 && s1 <= hi);

        let (lo, hi) = arcsin_bounds(&rat(1, 2), &eps);
        let a_half = rat(523_598_775_598_298_873, 1_000_000_000_000_000_000);
        assert!(lo <= a_half && a_half <= hi);
    }
}
