//! Expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := literal | name '(' expr ')' | name | '(' expr ')' | '-' factor
//! ```
//!
//! Literals are integers, exact decimals ("0.5" is 1/2, never a float),
//! and CF literals "[a0; a1, a2, (p1, p2)]" with an optional parenthesized
//! period as the last entry.

use std::fmt;

use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Exact rational literal (integers and decimals both land here).
    Rational(BigInt, BigInt),
    CfLiteral {
        a0: BigInt,
        rest: Vec<BigInt>,
        period: Option<Vec<BigInt>>,
    },
    Pi,
    E,
    /// A REPL binding.
    Name(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Arcsin,
    Sqrt,
}

#[derive(Debug)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b'[') => self.cf_literal(),
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        let func = match word.as_str() {
            "pi" => return Ok(Expr::Pi),
            "e" => return Ok(Expr::E),
            "exp" => Some(Func::Exp),
            "log" | "ln" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "arcsin" | "asin" => Some(Func::Arcsin),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        };
        match func {
            Some(f) => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Call(f, Box::new(arg)))
            }
            None => {
                if self.peek() == Some(b'(') {
                    self.pos = start;
                    return Err(self.error(format!("unknown function '{word}'")));
                }
                Ok(Expr::Name(word))
            }
        }
    }

    /// Integer or exact decimal.
    fn number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fstart = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == fstart {
                return Err(self.error("expected digits after the decimal point"));
            }
            let frac = std::str::from_utf8(&self.src[fstart..self.pos]).unwrap();
            let mantissa: BigInt = format!("{int_part}{frac}").parse().unwrap();
            let scale = BigInt::from(10).pow(frac.len() as u32);
            return Ok(Expr::Rational(mantissa, scale));
        }
        Ok(Expr::Rational(int_part.parse().unwrap(), BigInt::from(1)))
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && self.src[self.pos] == b'-' {
            self.pos += 1;
        }
        let dstart = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == dstart {
            return Err(self.error("expected an integer"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap().parse().unwrap())
    }

    /// "[a0]", "[a0; t1, t2, …]", optionally ending with "(p1, p2, …)".
    fn cf_literal(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'[')?;
        let a0 = self.integer()?;
        let mut rest = Vec::new();
        let mut period = None;
        if self.eat(b';') {
            loop {
                if self.eat(b'(') {
                    let mut p = vec![self.integer()?];
                    while self.eat(b',') {
                        p.push(self.integer()?);
                    }
                    self.expect(b')')?;
                    period = Some(p);
                    break;
                }
                rest.push(self.integer()?);
                if !self.eat(b',') {
                    break;
                }
            }
        }
        self.expect(b']')?;
        Ok(Expr::CfLiteral { a0, rest, period })
    }
}
