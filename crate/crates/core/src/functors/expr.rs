//! Functor expressions and their parser.
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' nat)?
//! atom   := 'X' | nat | NAME ('[' arg ']')? '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::functors::monoid::MonoidRegistry;

/// The elementary (non-polynomial) functors of the registry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseFunctor {
    /// `P`, full powerset.
    Powerset,
    /// `Pn[k]`, subsets with at most `k` elements.
    BoundedPowerset(usize),
    /// `M[name]`, monoid-valued functor.
    MonoidValued(String),
    /// `Nb`, neighbourhood systems.
    Neighbourhood,
    /// `Mono`, upward-closed neighbourhood systems.
    Monotone,
    /// `Filt`, filters (including the improper one).
    Filter,
    /// `Ultra`, ultrafilters.
    Ultrafilter,
    /// `T32`, triples with at most two distinct entries.
    Triples,
    /// `D[d]`, distributions with weights in multiples of `1/d`.
    Distribution(usize),
}

impl BaseFunctor {
    fn name(&self) -> &'static str {
        match self {
            BaseFunctor::Powerset => "P",
            BaseFunctor::BoundedPowerset(_) => "Pn",
            BaseFunctor::MonoidValued(_) => "M",
            BaseFunctor::Neighbourhood => "Nb",
            BaseFunctor::Monotone => "Mono",
            BaseFunctor::Filter => "Filt",
            BaseFunctor::Ultrafilter => "Ultra",
            BaseFunctor::Triples => "T32",
            BaseFunctor::Distribution(_) => "D",
        }
    }

    /// True for the four functors whose elements are systems of subsets.
    pub fn is_neighbourhood_type(&self) -> bool {
        matches!(
            self,
            BaseFunctor::Neighbourhood | BaseFunctor::Monotone | BaseFunctor::Filter | BaseFunctor::Ultrafilter
        )
    }
}

impl fmt::Display for BaseFunctor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseFunctor::BoundedPowerset(k) => write!(f, "Pn[{k}]"),
            BaseFunctor::MonoidValued(m) => write!(f, "M[{m}]"),
            BaseFunctor::Distribution(d) => write!(f, "D[{d}]"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FunctorExpr {
    Var,
    Const(usize),
    Sum(Vec<FunctorExpr>),
    Product(Vec<FunctorExpr>),
    Power(Box<FunctorExpr>, usize),
    Apply(BaseFunctor, Box<FunctorExpr>),
}

impl FunctorExpr {
    pub fn apply(base: BaseFunctor, inner: FunctorExpr) -> Self {
        FunctorExpr::Apply(base, Box::new(inner))
    }

    fn precedence(&self) -> u8 {
        match self {
            FunctorExpr::Sum(_) => 0,
            FunctorExpr::Product(_) => 1,
            FunctorExpr::Power(..) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            FunctorExpr::Var => write!(f, "X"),
            FunctorExpr::Const(k) => write!(f, "{k}"),
            FunctorExpr::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    t.fmt_at(f, 1)?;
                }
                Ok(())
            }
            FunctorExpr::Product(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    t.fmt_at(f, 2)?;
                }
                Ok(())
            }
            FunctorExpr::Power(b, k) => {
                b.fmt_at(f, 3)?;
                write!(f, "^{k}")
            }
            FunctorExpr::Apply(base, inner) => {
                write!(f, "{base}(")?;
                inner.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for FunctorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    monoids: &'a MonoidRegistry,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn nat(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a natural number");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().or_else(|_| self.err("number too large"))
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn expr(&mut self) -> Result<FunctorExpr> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            FunctorExpr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<FunctorExpr> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(b'*') {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            FunctorExpr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<FunctorExpr> {
        let atom = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.nat()?;
            return Ok(FunctorExpr::Power(Box::new(atom), k));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<FunctorExpr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(FunctorExpr::Const(self.nat()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                if name == "X" {
                    return Ok(FunctorExpr::Var);
                }
                let arg = if self.peek() == Some(b'[') {
                    self.pos += 1;
                    let a = self.ident();
                    if a.is_empty() {
                        return self.err("expected an argument inside `[...]`");
                    }
                    self.expect(b']')?;
                    Some(a)
                } else {
                    None
                };
                let base = self.base(&name, arg, start)?;
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(FunctorExpr::apply(base, inner))
            }
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
        }
    }

    fn base(&self, name: &str, arg: Option<String>, at: usize) -> Result<BaseFunctor> {
        let nat_arg = |arg: Option<String>| -> Result<usize> {
            match arg.as_deref().map(str::parse::<usize>) {
                Some(Ok(k)) => Ok(k),
                _ => Err(Error::Syntax {
                    pos: at,
                    msg: format!("`{name}` needs a natural argument `{name}[k]`"),
                }),
            }
        };
        let no_arg = |arg: &Option<String>| -> Result<()> {
            match arg {
                None => Ok(()),
                Some(_) => Err(Error::Syntax {
                    pos: at,
                    msg: format!("`{name}` takes no `[...]` argument"),
                }),
            }
        };
        Ok(match name {
            "P" => {
                no_arg(&arg)?;
                BaseFunctor::Powerset
            }
            "Pn" => BaseFunctor::BoundedPowerset(nat_arg(arg)?),
            "D" => {
                let d = nat_arg(arg)?;
                if d == 0 {
                    return Err(Error::Syntax {
                        pos: at,
                        msg: "D[d] needs d ≥ 1".into(),
                    });
                }
                BaseFunctor::Distribution(d)
            }
            "M" => {
                let Some(m) = arg else {
                    return Err(Error::Syntax {
                        pos: at,
                        msg: "`M` needs a monoid argument `M[name]`".into(),
                    });
                };
                self.monoids.get(&m)?;
                BaseFunctor::MonoidValued(m)
            }
            "Nb" | "Mono" | "Filt" | "Ultra" | "T32" => {
                no_arg(&arg)?;
                match name {
                    "Nb" => BaseFunctor::Neighbourhood,
                    "Mono" => BaseFunctor::Monotone,
                    "Filt" => BaseFunctor::Filter,
                    "Ultra" => BaseFunctor::Ultrafilter,
                    _ => BaseFunctor::Triples,
                }
            }
            _ => return Err(Error::UnknownFunctor(name.to_string())),
        })
    }
}

/// Parse a functor expression; monoid names are resolved against `monoids`.
pub fn parse_functor(text: &str, monoids: &MonoidRegistry) -> Result<FunctorExpr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        monoids,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<FunctorExpr> {
        parse_functor(s, &MonoidRegistry::default())
    }

    #[test]
    fn polynomial() {
        let e = parse("2*X^2+1").unwrap();
        assert_eq!(
            e,
            FunctorExpr::Sum(vec![
                FunctorExpr::Product(vec![
                    FunctorExpr::Const(2),
                    FunctorExpr::Power(Box::new(FunctorExpr::Var), 2)
                ]),
                FunctorExpr::Const(1),
            ])
        );
        assert_eq!(e.to_string(), "2*X^2+1");
    }

    #[test]
    fn named() {
        assert_eq!(parse("P(X)").unwrap(), FunctorExpr::apply(BaseFunctor::Powerset, FunctorExpr::Var));
        assert_eq!(
            parse(" M[Z2]( X ) ").unwrap(),
            FunctorExpr::apply(BaseFunctor::MonoidValued("Z2".into()), FunctorExpr::Var)
        );
        assert_eq!(parse("P(Pn[2](X))").unwrap().to_string(), "P(Pn[2](X))");
        assert_eq!(parse("(X+1)^2").unwrap().to_string(), "(X+1)^2");
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("M[Z9](X)"), Err(Error::UnknownMonoid(_))));
        assert!(matches!(parse("Q(X)"), Err(Error::UnknownFunctor(_))));
        assert!(matches!(parse("X+"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse("P(X"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("Pn(X)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("X X"), Err(Error::Syntax { .. })));
    }
}
