//! Property tests for the matrix engines: determinant and coprimality
//! preservation, identity and rational totality of the single-input
//! engine, symbolic correctness of the two-input substitutions, and
//! monotone refinement of extraction.

mod common;

use cf_core::*;
use common::on_big_stack;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn nondegenerate() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    (-20i64..=20, -20i64..=20, -20i64..=20, -20i64..=20)
        .prop_filter("det != 0", |(p, q, r, s)| p * s - q * r != 0)
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-999i64..=999, 1i64..=999)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ingest_and_produce_preserve_abs_det_and_gcd(
        (p, q, r, s) in nondegenerate(),
        k in -50i64..=50,
    ) {
        let m = Homographic::new(p, q, r, s).unwrap();
        let d = m.det().abs();
        let gi = m.ingest(&BigInt::from(k));
        prop_assert_eq!(gi.det().abs(), d.clone());
        prop_assert!(gi.entries_gcd().is_one());
        let gp = m.produce(&BigInt::from(k));
        prop_assert_eq!(gp.det().abs(), d);
        prop_assert!(gp.entries_gcd().is_one());
    }

    #[test]
    fn bihomographic_transforms_keep_entries_coprime(
        num in proptest::array::uniform4(-9i64..=9),
        den in proptest::array::uniform4(-9i64..=9),
        s in 0i64..=20,
        k in -20i64..=20,
    ) {
        prop_assume!(num.iter().any(|v| *v != 0) || den.iter().any(|v| *v != 0));
        let m = Bihomographic::new(num, den).unwrap();
        for t in [m.ingest_x(&BigInt::from(s)), m.ingest_y(&BigInt::from(s)), m.produce(&BigInt::from(k))] {
            prop_assert!(t.entries_gcd().is_one());
        }
    }

    #[test]
    fn identity_reproduces_terms(
        a0 in -9i64..=9,
        rest in proptest::collection::vec(1i64..=12, 0..6),
    ) {
        let x = Cf::from_terms(a0, &rest, None).unwrap();
        let y = Homographic::identity().apply(x);
        let a = first_terms(&y, 64, DEFAULT_MAX_ITERS).unwrap();
        // Identity output folds any trailing 1 of non-canonical input.
        let mut want: Vec<BigInt> = std::iter::once(a0)
            .chain(rest.iter().copied())
            .map(BigInt::from)
            .collect();
        while want.len() >= 2 && want.last().unwrap().is_one() {
            want.pop();
            *want.last_mut().unwrap() += 1;
        }
        prop_assert_eq!(a.canonical_terms(), want);
    }

    #[test]
    fn rational_totality_of_homographic(
        (p, q, r, s) in nondegenerate(),
        (a, b) in rational(),
    ) {
        let x = BigRational::new(BigInt::from(a), BigInt::from(b));
        let den = BigRational::from_integer(BigInt::from(r)) * &x
            + BigRational::from_integer(BigInt::from(s));
        prop_assume!(!den.is_zero());
        let expect = (BigRational::from_integer(BigInt::from(p)) * &x
            + BigRational::from_integer(BigInt::from(q)))
            / den;

        let m = Homographic::new(p, q, r, s).unwrap();
        let z = m.apply(Cf::from_rational(a, b));
        let got = first_terms(&z, 10_000, DEFAULT_MAX_ITERS).unwrap();
        prop_assert!(got.exact);
        let reference = Cf::from_rational(expect.numer().clone(), expect.denom().clone());
        let want = first_terms(&reference, 10_000, DEFAULT_MAX_ITERS).unwrap();
        prop_assert_eq!(got.canonical_terms(), want.canonical_terms());
    }

    #[test]
    fn ingest_substitution_is_symbolically_correct(
        num in proptest::array::uniform4(-9i64..=9),
        den in proptest::array::uniform4(-9i64..=9),
        s in 0i64..=9,
        (xa, xb) in (1i64..=40, 1i64..=9),
        (ya, yb) in (1i64..=40, 1i64..=9),
    ) {
        prop_assume!(num.iter().any(|v| *v != 0) || den.iter().any(|v| *v != 0));
        let m = Bihomographic::new(num, den).unwrap();
        let x = BigRational::new(BigInt::from(xa), BigInt::from(xb));
        let y = BigRational::new(BigInt::from(ya), BigInt::from(yb));

        let eval = |m: &Bihomographic, x: &BigRational, y: &BigRational| {
            let term = |c: &[BigInt; 4]| {
                BigRational::from_integer(c[0].clone()) * x * y
                    + BigRational::from_integer(c[1].clone()) * x
                    + BigRational::from_integer(c[2].clone()) * y
                    + BigRational::from_integer(c[3].clone())
            };
            let d = term(&m.den);
            if d.is_zero() { None } else { Some(term(&m.num) / d) }
        };

        // ingest_x(s, M)(x, y) = M(s + 1/x, y)
        let shifted = BigRational::from_integer(BigInt::from(s)) + x.recip();
        if let (Some(l), Some(r)) = (eval(&m.ingest_x(&BigInt::from(s)), &x, &y), eval(&m, &shifted, &y)) {
            prop_assert_eq!(l, r);
        }
        // ingest_y(s, M)(x, y) = M(x, s + 1/y)
        let shifted = BigRational::from_integer(BigInt::from(s)) + y.recip();
        if let (Some(l), Some(r)) = (eval(&m.ingest_y(&BigInt::from(s)), &x, &y), eval(&m, &x, &shifted)) {
            prop_assert_eq!(l, r);
        }
        // produce(k, M)(x, y) = 1/(M(x, y) − k)
        let k = BigInt::from(s);
        if let (Some(l), Some(v)) = (eval(&m.produce(&k), &x, &y), eval(&m, &x, &y)) {
            let shifted = v - BigRational::from_integer(k);
            if !shifted.is_zero() {
                prop_assert_eq!(l, shifted.recip());
            }
        }
    }

    #[test]
    fn arith_outputs_validate(
        (p1, q1) in rational(),
        (p2, q2) in rational(),
        op in 0usize..4,
    ) {
        prop_assume!(!(op == 3 && p2 == 0));
        let x = Cf::from_rational(p1, q1);
        let y = Cf::from_rational(p2, q2);
        let z = match op {
            0 => add(x, y),
            1 => sub(x, y),
            2 => mul(x, y),
            _ => div(x, y),
        };
        prop_assert!(validate_prefix(&z.prefix(40)));
    }

    #[test]
    fn monotone_refinement(
        (p, q) in rational(),
        period in proptest::collection::vec(1i64..=9, 1..3),
    ) {
        let x = Cf::from_terms(1, &[], Some(&period)).unwrap();
        let z = add(x, Cf::from_rational(p, q));
        let eps1 = BigRational::new(BigInt::one(), BigInt::from(10).pow(4));
        let eps2 = BigRational::new(BigInt::one(), BigInt::from(10).pow(12));
        let coarse = approximate(&z, &eps1, DEFAULT_MAX_ITERS).unwrap();
        let fine = approximate(&z, &eps2, DEFAULT_MAX_ITERS).unwrap();
        prop_assert!(fine.terms.len() >= coarse.terms.len());
        prop_assert_eq!(&fine.terms[..coarse.terms.len()], &coarse.terms[..]);
    }
}

#[test]
fn from_rational_reproduces_a_thousand_random_rationals() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    for _ in 0..1000 {
        let p: i64 = rng.gen_range(-100_000..=100_000);
        let q: i64 = rng.gen_range(1..=100_000);
        let cf = Cf::from_rational(p, q);
        let a = first_terms(&cf, 200, DEFAULT_MAX_ITERS).unwrap();
        assert!(a.exact);
        let v = eval_prefix_with_tail(&a.terms, ExtendedRational::PosInf);
        assert_eq!(v, ExtendedRational::ratio(p, q));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rho_endpoints_come_from_corner_fractions_for_positive_entries(
        num in proptest::array::uniform4(1i64..=20),
        den in proptest::array::uniform4(1i64..=20),
    ) {
        // With all entries positive and both bounds [1, ∞), the mediant
        // inequality makes the four corner fractions the extremes.
        let mut m = Bihomographic::new(num, den).unwrap();
        m.x_bound = Interval::tail_domain();
        m.y_bound = Interval::tail_domain();
        let g = m.entries_gcd();
        let reduce = |v: i64| BigInt::from(v) / &g;
        let (a, b, c, d) = (reduce(num[0]), reduce(num[1]), reduce(num[2]), reduce(num[3]));
        let (e, f, gg, h) = (reduce(den[0]), reduce(den[1]), reduce(den[2]), reduce(den[3]));
        let corner = |n: BigInt, d: BigInt| ExtendedRational::ratio(n, d);
        let corners = [
            corner(a.clone(), e.clone()),
            corner(&a + &b, &e + &f),
            corner(&a + &c, &e + &gg),
            corner(&a + &b + &c + &d, &e + &f + &gg + &h),
        ];
        let r = m.rho();
        prop_assert!(corners.contains(r.lo()), "lo {} not a corner", r.lo());
        prop_assert!(corners.contains(r.hi()), "hi {} not a corner", r.hi());
    }
}

#[test]
fn decimal_agrees_with_term_extraction_midpoint() {
    on_big_stack(|| {
        let n = 10usize;
        let eps = BigRational::new(BigInt::one(), BigInt::from(10).pow(n as u32 + 2));
        let cases = [
            add(
                Cf::from_terms(1, &[], Some(&[2])).unwrap(),
                Cf::from_rational(3, 7),
            ),
            mul(
                Cf::from_terms(1, &[], Some(&[1, 2])).unwrap(),
                Cf::from_rational(-5, 9),
            ),
            add(Cf::from_rational(1, 4), Cf::from_rational(0, 1)),
            div(Cf::from_rational(22, 7), Cf::from_terms(2, &[], Some(&[4])).unwrap()),
        ];
        for z in cases {
            let decimal = to_decimal(&z, n, DEFAULT_MAX_ITERS).unwrap();
            assert!(!decimal.ends_with('~'), "unexpected undecided digits");
            let a = approximate(&z, &eps, DEFAULT_MAX_ITERS).unwrap();
            let (lo, hi) = a.enclosure();
            let (ExtendedRational::Finite(lo), ExtendedRational::Finite(hi)) = (lo, hi) else {
                panic!("finite enclosure expected");
            };
            let mid = (lo + hi) / BigRational::from_integer(2.into());
            // Truncate |mid| to n digits and compare, sign handled apart.
            let neg = mid.is_negative();
            let scaled = (mid.abs() * BigRational::from_integer(BigInt::from(10).pow(n as u32)))
                .floor()
                .to_integer();
            let digits = format!("{:0>width$}", scaled.to_string(), width = n + 1);
            let (int_part, frac_part) = digits.split_at(digits.len() - n);
            let formatted = format!(
                "{}{}.{}",
                if neg { "-" } else { "" },
                int_part.parse::<BigInt>().unwrap(),
                frac_part
            );
            assert_eq!(decimal, formatted);
        }
    });
}

#[test]
fn inner_loop_progress_is_bounded_on_irrationals() {
    // Between two produced terms the engine performs finitely many reads;
    // assert a generous cap and report the observed mean.
    on_big_stack(|| {
        let sqrt2 = Cf::from_terms(1, &[], Some(&[2])).unwrap();
        let sqrt3 = Cf::from_terms(1, &[], Some(&[1, 2])).unwrap();
        let z = add(sqrt2, sqrt3);
        let mut reads_between = 0usize;
        let mut max_between = 0usize;
        let mut terms = 0usize;
        for i in 0..400 {
            match z.get(i) {
                Element::Bound(b) => {
                    if b.as_term().is_some() {
                        terms += 1;
                        max_between = max_between.max(reads_between);
                        reads_between = 0;
                    } else {
                        reads_between += 1;
                    }
                }
                _ => break,
            }
        }
        assert!(terms > 10, "expected plenty of terms, got {terms}");
        assert!(
            max_between < 1000,
            "an unbounded ambiguous stretch appeared: {max_between}"
        );
        println!("progress: max {max_between} ambiguous elements between terms over {terms} terms");
    });
}

#[test]
fn enclosures_contain_known_values() {
    // Soundness spot-check on closed forms: every walker enclosure along
    // the way contains the exact value.
    on_big_stack(|| {
        let cases: Vec<(Cf, BigRational)> = vec![
            (
                add(Cf::from_rational(22, 7), Cf::from_rational(-1, 3)),
                BigRational::new(59.into(), 21.into()),
            ),
            (
                mul(Cf::from_rational(-3, 4), Cf::from_rational(8, 5)),
                BigRational::new((-6).into(), 5.into()),
            ),
        ];
        for (z, value) in cases {
            let value = ExtendedRational::from_big(value);
            for n in 1..20 {
                let a = first_terms(&z, n, DEFAULT_MAX_ITERS).unwrap();
                let (lo, hi) = a.enclosure();
                assert!(lo <= value && value <= hi);
                if a.exact {
                    break;
                }
            }
        }
    });
}
