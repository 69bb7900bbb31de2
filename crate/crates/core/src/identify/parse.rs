//! Parser for the printed expression notation.
//!
//! Accepts exactly what `Display for Expr` produces, plus `sum_{..}` as an
//! ASCII spelling of `Σ_{..}`. Primes on bound variables are dropped.

use thiserror::Error;

use super::expr::{Expr, Source};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("expression parse error at byte {pos}: {msg}")]
pub struct ExprParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

pub fn parse_expr(src: &str) -> Result<Expr, ExprParseError> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    p.ws();
    if p.pos != src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ExprParseError {
        ExprParseError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ExprParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn at_unit_start(&mut self) -> bool {
        self.ws();
        let r = self.rest();
        r.starts_with('[')
            || r.starts_with("P(")
            || r.starts_with("P_{")
            || r.starts_with("Q[")
            || r.starts_with('Σ')
            || r.starts_with("sum_{")
            || r.starts_with("norm_{")
            || (r.starts_with('1') && !r[1..].starts_with(|c: char| is_ident_char(c)))
    }

    fn expr(&mut self) -> Result<Expr, ExprParseError> {
        let mut units = Vec::new();
        while self.at_unit_start() {
            units.push(self.unit()?);
        }
        match units.len() {
            0 => Err(self.err("expected an expression")),
            1 => Ok(units.pop().unwrap()),
            _ => Ok(Expr::product(units)),
        }
    }

    fn unit(&mut self) -> Result<Expr, ExprParseError> {
        if self.eat("[") {
            let inner = self.expr()?;
            self.expect("]")?;
            if self.eat("/") {
                self.expect("[")?;
                let den = self.expr()?;
                self.expect("]")?;
                return Ok(Expr::quotient(inner, den));
            }
            return Ok(inner);
        }
        if self.eat("P_{") {
            let intervene = self.vars()?;
            self.expect("}")?;
            self.expect("(")?;
            let (over, given) = self.kernel_args(")")?;
            return Ok(Expr::Kernel {
                over,
                given,
                source: Source::Interventional { intervene },
            });
        }
        if self.eat("P(") {
            let (over, given) = self.kernel_args(")")?;
            return Ok(Expr::Kernel {
                over,
                given,
                source: Source::Observational,
            });
        }
        if self.eat("Q[") {
            let (over, given) = self.kernel_args("]")?;
            self.expect("{")?;
            let inner = self.expr()?;
            self.expect("}")?;
            return Ok(Expr::Kernel {
                over,
                given,
                source: Source::Derived {
                    expr: Box::new(inner),
                },
            });
        }
        if self.eat("Σ_{") || self.eat("sum_{") {
            let sum_out = self.vars()?;
            self.expect("}")?;
            self.expect("[")?;
            let of = self.expr()?;
            self.expect("]")?;
            return Ok(Expr::marginal(sum_out, of));
        }
        if self.eat("norm_{") {
            let target = self.var()?;
            self.expect("}")?;
            self.expect("[")?;
            let of = self.expr()?;
            self.expect("]")?;
            return Ok(Expr::normalize(target, of));
        }
        if self.eat("1") {
            return Ok(Expr::one());
        }
        Err(self.err("expected an expression"))
    }

    fn kernel_args(&mut self, close: &str) -> Result<(Vec<String>, Vec<String>), ExprParseError> {
        let over = self.vars()?;
        let given = if self.eat("|") { self.vars()? } else { vec![] };
        self.expect(close)?;
        Ok((over, given))
    }

    fn vars(&mut self) -> Result<Vec<String>, ExprParseError> {
        let mut out = vec![self.var()?];
        while self.eat(",") {
            out.push(self.var()?);
        }
        Ok(out)
    }

    fn var(&mut self) -> Result<String, ExprParseError> {
        self.ws();
        let len: usize = self
            .rest()
            .chars()
            .take_while(|&c| is_ident_char(c))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return Err(self.err("expected a variable name"));
        }
        let name = self.rest()[..len].to_string();
        self.pos += len;
        if self.rest().starts_with('\'') {
            self.pos += 1;
        }
        Ok(name)
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.' || c == '-' || c == '~'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(e: &Expr) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap_or_else(|err| panic!("{text}: {err}"));
        assert_eq!(&back, e, "{text}");
    }

    #[test]
    fn parses_printed_forms() {
        let fd = Expr::marginal(
            vec!["M".into()],
            Expr::product(vec![Expr::atom(&["M"], &[]), Expr::atom(&["T"], &["M", "Z"])]),
        );
        roundtrip(&fd);
        roundtrip(&Expr::product(vec![
            Expr::atom(&["T"], &[]),
            Expr::atom(&["C"], &["T", "A"]),
        ]));
        roundtrip(&Expr::normalize(
            "T",
            Expr::quotient(Expr::atom(&["C", "T"], &["A"]), Expr::atom(&["A"], &[])),
        ));
        roundtrip(&Expr::product(vec![
            Expr::quotient(Expr::atom(&["A"], &[]), Expr::one()),
            Expr::product(vec![Expr::atom(&["B"], &[]), Expr::atom(&["C"], &[])]),
            fd,
        ]));
        roundtrip(&Expr::one());
    }

    #[test]
    fn ascii_sum_and_unprimed_names() {
        let a = parse_expr("sum_{M} [P(M) P(T|M,Z)]").unwrap();
        let b = parse_expr("Σ_{M'} [P(M') P(T|M',Z)]").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_expr("P(").is_err());
        assert!(parse_expr("P(A) )").is_err());
        assert!(parse_expr("").is_err());
    }
}
