//! Infix expression text parser.
//!
//! Grammar: `+ - * / ^` with usual precedence, `^` right-associative and
//! binding tighter than unary minus; function calls `fn(expr)`; state
//! references `y(i)`; delayed references `y(i, time-expr)`; bare `t` is the
//! time symbol; any other bare identifier becomes a parameter reference
//! (callers rewrite known helper names afterwards). Whitespace-insensitive.

use super::{Expression, Func};
use crate::error::ParseError;

/// Parses an expression. `line` and `column` give the position of `src`
/// within an enclosing file, so that reported locations are absolute.
pub fn parse_expression(src: &str, line: usize, column: usize) -> Result<Expression, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, line, column };
    p.skip_ws();
    let e = p.parse_sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected character '{}'", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: String) -> ParseError {
        ParseError { line: self.line, column: self.column + self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", b as char)))
        }
    }

    fn parse_sum(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.parse_term()?;
                acc = acc + rhs;
            } else if self.eat(b'-') {
                let rhs = self.parse_term()?;
                acc = acc - rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.parse_unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.parse_unary()?;
                acc = acc * rhs;
            } else if self.eat(b'/') {
                let rhs = self.parse_unary()?;
                acc = acc / rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(-self.parse_unary()?)
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> Result<Expression, ParseError> {
        let base = self.parse_atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            // Right-associative; the exponent may carry a sign.
            let exponent = self.parse_unary_power()?;
            Ok(base.pow(exponent))
        } else {
            Ok(base)
        }
    }

    fn parse_unary_power(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(-self.parse_unary_power()?)
        } else {
            self.parse_power()
        }
    }

    fn parse_atom(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_sum()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of expression".into())),
        }
    }

    fn parse_number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2*exp(t)` tokenized oddly).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expression::constant)
            .map_err(|_| self.error(format!("invalid number '{text}'")))
    }

    fn parse_ident(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        self.skip_ws();
        if name == "y" {
            self.expect(b'(')?;
            self.skip_ws();
            let idx_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let idx_text = std::str::from_utf8(&self.src[idx_start..self.pos]).unwrap();
            let index: usize = idx_text
                .parse()
                .map_err(|_| self.error("state reference needs a nonnegative index".into()))?;
            self.skip_ws();
            if self.eat(b',') {
                let at = self.parse_sum()?;
                self.skip_ws();
                self.expect(b')')?;
                if super::uses_past(&at) {
                    return Err(self
                        .error("a delay argument must not contain another delayed state".into()));
                }
                Ok(Expression::past(index, at))
            } else {
                self.expect(b')')?;
                Ok(Expression::state(index))
            }
        } else if name == "t" {
            Ok(Expression::time())
        } else if self.peek() == Some(b'(') {
            let func = Func::from_name(&name)
                .ok_or_else(|| self.error(format!("unknown function '{name}'")))?;
            self.pos += 1;
            let arg = self.parse_sum()?;
            self.skip_ws();
            self.expect(b')')?;
            Ok(Expression::call(func, arg))
        } else if name.starts_with('_') {
            Err(self.error("identifiers starting with '_' are reserved".into()))
        } else {
            // Parameter or helper; callers resolve helper names afterwards.
            Ok(Expression::parameter(&name))
        }
    }
}
