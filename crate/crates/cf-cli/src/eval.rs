//! Turns parsed expressions into engine streams. Shared subexpressions
//! are not deduplicated structurally, but every named binding refers to
//! one memoized stream, so REPL reuse costs nothing.

use std::collections::HashMap;
use std::fmt;

use cf_core::{
    arcsin_cf, arith_with, cos_cf, e_cf, exp_cf, log_cf, pi_cf, sin_cf, tan_cf, Bihomographic,
    Cf, EngineOpts, Homographic,
};
use num_traits::{Signed, Zero};

use crate::parser::{BinOp, Expr, Func};

#[derive(Debug)]
pub enum EvalError {
    UnknownName(String),
    ZeroDenominator,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnknownName(n) => write!(f, "unknown name '{n}'"),
            EvalError::ZeroDenominator => write!(f, "rational literal with zero denominator"),
        }
    }
}

impl std::error::Error for EvalError {}

#[derive(Default)]
pub struct Context {
    pub vars: HashMap<String, Cf>,
    pub opts: EngineOpts,
}

impl Context {
    pub fn eval(&self, expr: &Expr) -> Result<Cf, EvalError> {
        Ok(match expr {
            Expr::Rational(p, q) => {
                if q.is_zero() {
                    return Err(EvalError::ZeroDenominator);
                }
                let (p, q) = if q.is_negative() { (-p, -q) } else { (p.clone(), q.clone()) };
                Cf::from_rational(p, q)
            }
            Expr::CfLiteral { a0, rest, period } => {
                Cf::from_terms_big(a0.clone(), rest.clone(), period.clone())
                    .unwrap_or_else(Cf::fault)
            }
            Expr::Pi => pi_cf(),
            Expr::E => e_cf(),
            Expr::Name(name) => self
                .vars
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UnknownName(name.clone()))?,
            Expr::Neg(inner) => {
                let x = self.eval(inner)?;
                Homographic::new(-1, 0, 0, 1)
                    .unwrap()
                    .apply_with(x, self.opts.clone())
            }
            Expr::Bin(op, lhs, rhs) => {
                let x = self.eval(lhs)?;
                let y = self.eval(rhs)?;
                let m0 = match op {
                    BinOp::Add => Bihomographic::add_matrix(),
                    BinOp::Sub => Bihomographic::sub_matrix(),
                    BinOp::Mul => Bihomographic::mul_matrix(),
                    BinOp::Div => Bihomographic::div_matrix(),
                };
                arith_with(x, y, m0, self.opts.clone())
            }
            Expr::Call(f, arg) => {
                let x = self.eval(arg)?;
                match f {
                    Func::Exp => exp_cf(x),
                    Func::Log => log_cf(x),
                    Func::Sin => sin_cf(x),
                    Func::Cos => cos_cf(x),
                    Func::Tan => tan_cf(x),
                    Func::Arcsin => arcsin_cf(x),
                    // sqrt(x) = exp(log(x)/2)
                    Func::Sqrt => {
                        let half_log = Homographic::new(1, 0, 0, 2)
                            .unwrap()
                            .apply_with(log_cf(x), self.opts.clone());
                        exp_cf(half_log)
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;
    use cf_core::{approximate, first_terms, DEFAULT_MAX_ITERS};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn eval(src: &str) -> Cf {
        Context::default().eval(&parse_expr(src).unwrap()).unwrap()
    }

    #[test]
    fn rational_expression() {
        let z = eval("1/2 + 1/3");
        let a = first_terms(&z, 16, DEFAULT_MAX_ITERS).unwrap();
        let want: Vec<BigInt> = [0, 1, 5].map(BigInt::from).into();
        assert_eq!(a.canonical_terms(), want);
    }

    #[test]
    fn cf_literal_square_extracts_to_two() {
        let z = eval("[1;(2)] * [1;(2)]");
        let eps = BigRational::new(BigInt::from(1), BigInt::from(10).pow(30));
        let a = approximate(&z, &eps, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(a.canonical_terms(), vec![BigInt::from(2)]);
    }

    #[test]
    fn unknown_name_is_an_error() {
        let ctx = Context::default();
        assert!(matches!(
            ctx.eval(&parse_expr("x + 1").unwrap()),
            Err(EvalError::UnknownName(_))
        ));
    }

    #[test]
    fn named_bindings_resolve() {
        let mut ctx = Context::default();
        ctx.vars.insert("a".into(), Cf::from_rational(7, 2));
        let z = ctx.eval(&parse_expr("a - 3").unwrap()).unwrap();
        let a = first_terms(&z, 8, DEFAULT_MAX_ITERS).unwrap();
        let want: Vec<BigInt> = [0, 2].map(BigInt::from).into();
        assert_eq!(a.canonical_terms(), want);
    }
}
