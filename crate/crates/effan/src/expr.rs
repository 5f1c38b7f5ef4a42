//! A small expression language over computable reals: integer literals,
//! `+ - * /`, `sqrt`, `abs`, `min`, `max`, parentheses. Division requires a
//! divisor that folds to an exact nonzero rational (no `sqrt` inside), so
//! `1/3 + 1/6` is exact scaling while `1/sqrt(2)` is rejected.

use num_bigint::BigInt;

use crate::creal::CReal;
use crate::rat::Rational;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("division requires an exact rational divisor")]
    NonRationalDivisor,
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

pub fn parse(input: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { input: input.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self
                    .input
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_digit())
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
                Ok(Expr::Int(text.parse().unwrap()))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .input
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphabetic())
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
                match name {
                    "sqrt" | "abs" => {
                        self.eat(b'(')?;
                        let e = self.expr()?;
                        self.eat(b')')?;
                        Ok(if name == "sqrt" {
                            Expr::Sqrt(Box::new(e))
                        } else {
                            Expr::Abs(Box::new(e))
                        })
                    }
                    "min" | "max" => {
                        self.eat(b'(')?;
                        let a = self.expr()?;
                        self.eat(b',')?;
                        let b = self.expr()?;
                        self.eat(b')')?;
                        Ok(if name == "min" {
                            Expr::Min(Box::new(a), Box::new(b))
                        } else {
                            Expr::Max(Box::new(a), Box::new(b))
                        })
                    }
                    _ => Err(self.err(&format!("unknown function `{name}`"))),
                }
            }
            _ => Err(self.err("expected a value")),
        }
    }
}

/// Fold a subexpression to an exact rational where possible (`sqrt` blocks
/// folding; everything else is exact on rationals).
fn fold_rational(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Int(n) => Some(Rational::from_bigint(n.clone())),
        Expr::Neg(a) => Some(-fold_rational(a)?),
        Expr::Add(a, b) => Some(&fold_rational(a)? + &fold_rational(b)?),
        Expr::Sub(a, b) => Some(&fold_rational(a)? - &fold_rational(b)?),
        Expr::Mul(a, b) => Some(&fold_rational(a)? * &fold_rational(b)?),
        Expr::Div(a, b) => {
            let d = fold_rational(b)?;
            if d.is_zero() {
                return None;
            }
            Some(&fold_rational(a)? / &d)
        }
        Expr::Abs(a) => Some(fold_rational(a)?.abs()),
        Expr::Min(a, b) => Some(fold_rational(a)?.min(fold_rational(b)?)),
        Expr::Max(a, b) => Some(fold_rational(a)?.max(fold_rational(b)?)),
        Expr::Sqrt(_) => None,
    }
}

/// Evaluate to a computable real. Sqrt-of-negative surfaces later, at query
/// time, as the stream's domain error.
pub fn eval(e: &Expr) -> Result<CReal, ExprError> {
    if let Some(r) = fold_rational(e) {
        return Ok(CReal::from_rational(r));
    }
    match e {
        Expr::Int(n) => Ok(CReal::from_rational(Rational::from_bigint(n.clone()))),
        Expr::Neg(a) => Ok(eval(a)?.neg()),
        Expr::Add(a, b) => Ok(eval(a)?.add(&eval(b)?)),
        Expr::Sub(a, b) => Ok(eval(a)?.sub(&eval(b)?)),
        Expr::Mul(a, b) => Ok(eval(a)?.mul(&eval(b)?)),
        Expr::Div(a, b) => {
            let d = fold_rational(b).ok_or(ExprError::NonRationalDivisor)?;
            if d.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            Ok(eval(a)?.scale(&d.recip().expect("nonzero")))
        }
        Expr::Sqrt(a) => Ok(eval(a)?.sqrt()),
        Expr::Abs(a) => Ok(eval(a)?.abs()),
        Expr::Min(a, b) => Ok(eval(a)?.min(&eval(b)?)),
        Expr::Max(a, b) => Ok(eval(a)?.max(&eval(b)?)),
    }
}

pub fn eval_str(input: &str) -> Result<CReal, ExprError> {
    eval(&parse(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::creal::QueryError;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn arithmetic_and_precedence() {
        let x = eval_str("1/3 + 1/6").unwrap();
        assert_eq!(x.expect_approx(4), r(1, 2));
        let x = eval_str("2 * 3 + 4").unwrap();
        assert_eq!(x.expect_approx(10), r(10, 1));
        let x = eval_str("2 * (3 + 4)").unwrap();
        assert_eq!(x.expect_approx(10), r(14, 1));
        let x = eval_str("-(5 - 8)").unwrap();
        assert_eq!(x.expect_approx(10), r(3, 1));
        let x = eval_str("min(3, max(1, 2))").unwrap();
        assert_eq!(x.expect_approx(10), r(2, 1));
        let x = eval_str("abs(1 - 2)").unwrap();
        assert_eq!(x.expect_approx(10), r(1, 1));
    }

    #[test]
    fn sqrt_paths() {
        let x = eval_str("sqrt(2)").unwrap();
        let q = x.expect_approx(30);
        assert!((&(&q * &q) - &r(2, 1)).abs() <= Rational::pow2(-28));
        // sqrt(4)/2 - 1 is near zero.
        let x = eval_str("sqrt(4)/2 - 1").unwrap();
        assert!(x.expect_approx(20).abs() <= Rational::pow2(-18));
        // Domain error surfaces at query time.
        let x = eval_str("sqrt(0 - 1)").unwrap();
        assert!(matches!(x.approx(5), Err(QueryError::NegativeSqrt { .. })));
    }

    #[test]
    fn division_rules() {
        assert!(matches!(eval_str("1/0"), Err(ExprError::DivisionByZero)));
        assert!(matches!(
            eval_str("sqrt(2)/sqrt(2)"),
            Err(ExprError::NonRationalDivisor)
        ));
        // Dividing BY a rational-folding expression is fine.
        let x = eval_str("sqrt(2) / (1/2 + 1/2)").unwrap();
        let q = x.expect_approx(20);
        assert!((&(&q * &q) - &r(2, 1)).abs() <= Rational::pow2(-17));
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "1 +", "(1", "foo(1)", "1)", "min(1)", "2 2"] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }
}
