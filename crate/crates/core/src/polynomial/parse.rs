//! Recursive-descent parser for the polynomial text format.
//!
//! ```text
//! poly   := sign? term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' INT)?
//! atom   := INT | VAR | '(' poly ')'
//! VAR    := 'x' INT
//! ```
//!
//! An optional first line `vars=K` fixes the variable count. Whitespace is
//! insignificant. Error offsets are byte offsets into the full input.

use num_bigint::BigInt;

use super::{DiophantinePolynomial, PolynomialLimits};
use crate::error::{Error, Result};

/// How variable tokens map onto polynomial slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariableNaming {
    /// Only `x0 … x{K-1}`.
    Plain,
    /// Parameters `p0 … p{params-1}` occupy the leading slots, followed by
    /// the unknowns `x0 …`.
    Family { params: usize },
}

impl VariableNaming {
    fn params(self) -> usize {
        match self {
            VariableNaming::Plain => 0,
            VariableNaming::Family { params } => params,
        }
    }
}

pub fn parse_polynomial(text: &str) -> Result<DiophantinePolynomial> {
    parse_polynomial_with(text, &PolynomialLimits::default())
}

pub fn parse_polynomial_with(
    text: &str,
    limits: &PolynomialLimits,
) -> Result<DiophantinePolynomial> {
    parse_with_naming(text, limits, VariableNaming::Plain)
}

/// Parses with the given naming scheme. For [`VariableNaming::Family`] the
/// `vars=K` header counts unknowns only; the result has `params + K`
/// variables.
pub fn parse_with_naming(
    text: &str,
    limits: &PolynomialLimits,
    naming: VariableNaming,
) -> Result<DiophantinePolynomial> {
    let (header_vars, body_start) = read_header(text, limits)?;
    let width = naming.params() + limits.max_vars;
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: body_start,
        width,
        naming,
        limits,
        max_unknown: None,
    };
    parser.skip_ws();
    if parser.peek().is_none() {
        return Err(parser.error("empty polynomial"));
    }
    let poly = parser.poly()?;
    parser.skip_ws();
    if let Some(c) = parser.peek() {
        return Err(parser.error(format!("unexpected character '{}'", c as char)));
    }

    let mentioned = parser.max_unknown.map_or(1, |m| m + 1);
    let unknowns = match header_vars {
        Some(k) if k < mentioned => {
            return Err(Error::Syntax {
                offset: 0,
                message: format!("header declares vars={k} but x{} is used", mentioned - 1),
            })
        }
        Some(k) => k,
        None => mentioned,
    };
    let degree = poly.total_degree();
    if degree > limits.max_degree as u64 {
        return Err(Error::LimitExceeded {
            what: "total degree",
            value: degree as u128,
            limit: limits.max_degree as u128,
        });
    }
    poly.with_num_vars(naming.params() + unknowns)
}

fn read_header(text: &str, limits: &PolynomialLimits) -> Result<(Option<usize>, usize)> {
    let lead = text.len() - text.trim_start().len();
    let rest = &text[lead..];
    if !rest.starts_with("vars") {
        return Ok((None, 0));
    }
    let line_end = rest.find('\n').map_or(text.len(), |i| lead + i);
    let line = &text[lead..line_end];
    let Some(value) = line
        .strip_prefix("vars")
        .and_then(|r| r.trim_start().strip_prefix('='))
    else {
        return Err(Error::Syntax {
            offset: lead,
            message: "malformed header, expected `vars=K`".into(),
        });
    };
    let value_offset = line_end - value.len();
    let k: usize = value.trim().parse().map_err(|_| Error::Syntax {
        offset: value_offset,
        message: format!("invalid variable count '{}'", value.trim()),
    })?;
    if k == 0 {
        return Err(Error::Syntax {
            offset: value_offset,
            message: "variable count must be positive".into(),
        });
    }
    if k > limits.max_vars {
        return Err(Error::LimitExceeded {
            what: "variable count",
            value: k as u128,
            limit: limits.max_vars as u128,
        });
    }
    Ok((Some(k), line_end))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    width: usize,
    naming: VariableNaming,
    limits: &'a PolynomialLimits,
    max_unknown: Option<usize>,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn poly(&mut self) -> Result<DiophantinePolynomial> {
        self.skip_ws();
        let negate_first = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let mut acc = self.term()?;
        if negate_first {
            acc = acc.neg();
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(&t)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.sub(&t)?;
                }
                _ => return Ok(acc),
            }
            self.check_terms(&acc)?;
        }
    }

    fn term(&mut self) -> Result<DiophantinePolynomial> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.peek() != Some(b'*') {
                return Ok(acc);
            }
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul_with_limit(&f, self.limits.max_terms)?;
        }
    }

    fn factor(&mut self) -> Result<DiophantinePolynomial> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        if self.peek() == Some(b'-') {
            return Err(Error::NegativeExponent { offset: self.pos });
        }
        let digits = self.digits()?;
        let exponent: u64 = digits.parse().unwrap_or(u64::MAX);
        if exponent > self.limits.max_degree as u64 {
            return Err(Error::LimitExceeded {
                what: "exponent",
                value: digits.parse::<u128>().unwrap_or(u128::MAX),
                limit: self.limits.max_degree as u128,
            });
        }
        let mut result = DiophantinePolynomial::constant(self.width, 1)?;
        for _ in 0..exponent {
            result = result.mul_with_limit(&base, self.limits.max_terms)?;
        }
        Ok(result)
    }

    fn atom(&mut self) -> Result<DiophantinePolynomial> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.poly()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let digits = self.digits()?;
                let value: BigInt = digits.parse().expect("digit run parses");
                DiophantinePolynomial::constant(self.width, value)
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let idx = self.index(start)?;
                if idx >= self.limits.max_vars {
                    return Err(Error::LimitExceeded {
                        what: "variable index",
                        value: idx as u128,
                        limit: self.limits.max_vars as u128 - 1,
                    });
                }
                self.max_unknown = Some(self.max_unknown.map_or(idx, |m| m.max(idx)));
                DiophantinePolynomial::variable(self.width, self.naming.params() + idx)
            }
            Some(b'p') if self.naming.params() > 0 => {
                let start = self.pos;
                self.pos += 1;
                let idx = self.index(start)?;
                if idx >= self.naming.params() {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!(
                            "parameter p{idx} out of range (p0..p{})",
                            self.naming.params() - 1
                        ),
                    });
                }
                DiophantinePolynomial::variable(self.width, idx)
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn index(&mut self, start: usize) -> Result<usize> {
        if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(Error::Syntax {
                offset: start,
                message: "variable name must be followed by an index".into(),
            });
        }
        let digits = self.digits()?;
        Ok(digits.parse().unwrap_or(usize::MAX))
    }

    fn digits(&mut self) -> Result<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn check_terms(&self, p: &DiophantinePolynomial) -> Result<()> {
        if p.terms().len() > self.limits.max_terms {
            return Err(Error::LimitExceeded {
                what: "term count",
                value: p.terms().len() as u128,
                limit: self.limits.max_terms as u128,
            });
        }
        Ok(())
    }
}
