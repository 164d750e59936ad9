//! Exact real arithmetic on continued fractions.
//!
//! A real number is represented as a lazy, memoized stream of nested
//! half-open rational intervals: explicit CF terms appear as [a, a+1) and
//! everything else is a shrinking bound on the current tail. Arithmetic is
//! homographic/bihomographic matrix arithmetic on those streams, and the
//! transcendental functions are evaluated spigot-style as infinitely
//! nested matrix maps. All endpoint arithmetic is exact; nothing in this
//! crate rounds.
//!
//! The usual entry points:
//!
//! ```
//! use cf_core::{add, approximate, pi_cf, Cf};
//! use num_rational::BigRational;
//!
//! let z = add(pi_cf(), Cf::from_rational(1, 2));
//! let eps = BigRational::new(1.into(), 1_000_000.into());
//! let a = approximate(&z, &eps, cf_core::DEFAULT_MAX_ITERS).unwrap();
//! assert_eq!(a.terms[0], 3.into());
//! ```

pub mod bihomographic;
pub mod error;
pub mod extract;
pub mod homographic;
pub mod interval;
pub mod rational;
pub mod series;
pub mod stream;
pub mod trace;

pub use bihomographic::{add, arith, arith_with, div, mul, sub, Bihomographic};
pub use error::CfError;
pub use extract::{approximate, first_terms, to_decimal, Approximation, DEFAULT_MAX_ITERS};
pub use homographic::Homographic;
pub use interval::Interval;
pub use rational::ExtendedRational;
pub use series::{arcsin_cf, cos_cf, e_cf, exp_cf, log_cf, nested_eval, pi_cf, sin_cf,
    sqrt_e_cf, tan_cf, NestedSeries};
pub use stream::{eval_prefix_with_tail, validate_prefix, Cf, Element};
pub use trace::{EngineOpts, TraceSink};
