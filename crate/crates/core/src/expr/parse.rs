//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number | 'z' uint | 'i'
//!         | ('re' | 'im' | 'abs2' | 'conj') '(' expr ')'
//!         | 'psi' '(' expr ',' number ')'
//!         | '(' expr ')' | '-' base
//! ```
//!
//! `-z1^2` parses as `(-z1)^2` because the unary minus belongs to `base`.
//! Error columns are 1-based.

use num_complex::Complex64;

use super::{ExprError, Node};

pub(super) struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
    aliases: &'a [(&'a str, usize)],
}

impl<'a> Parser<'a> {
    pub(super) fn new(text: &'a str, nvars: usize, aliases: &'a [(&'a str, usize)]) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            nvars,
            aliases,
        }
    }

    pub(super) fn parse(mut self) -> Result<Node, ExprError> {
        let node = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.syntax(format!("unexpected `{}`", self.src[self.pos] as char)));
        }
        Ok(node)
    }

    fn syntax(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            column: self.pos + 1,
            message: message.into(),
        }
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.syntax(format!("expected `{}`, found `{}`", c as char, x as char))),
            None => Err(self.syntax(format!("expected `{}`, found end of input", c as char))),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected a nonnegative integer exponent"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let k: u32 = text.parse().map_err(|_| ExprError::Syntax {
                column: start + 1,
                message: format!("exponent `{}` too large", text),
            })?;
            return Ok(Node::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.base()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.number()?;
                Ok(Node::Const(Complex64::new(x, 0.0)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.word(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| ExprError::Syntax {
            column: start + 1,
            message: format!("malformed number `{}`", text),
        })
    }

    fn word(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let unary = |p: &mut Self, mk: fn(Box<Node>) -> Node| -> Result<Node, ExprError> {
            p.expect(b'(')?;
            let e = p.expr()?;
            p.expect(b')')?;
            Ok(mk(Box::new(e)))
        };
        match name {
            "re" => unary(self, Node::Re),
            "im" => unary(self, Node::Im),
            "abs2" => unary(self, Node::Abs2),
            "conj" => unary(self, Node::Conj),
            "psi" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b',')?;
                let col = self.pos + 1;
                let radius = self.number()?;
                if radius <= 0.0 {
                    return Err(ExprError::Syntax {
                        column: col,
                        message: "psi radius must be positive".into(),
                    });
                }
                self.expect(b')')?;
                Ok(Node::Psi {
                    arg: Box::new(arg),
                    radius,
                })
            }
            "smax" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b',')?;
                let col = self.pos + 1;
                let radius = self.number()?;
                if radius <= 0.0 {
                    return Err(ExprError::Syntax {
                        column: col,
                        message: "smax radius must be positive".into(),
                    });
                }
                self.expect(b')')?;
                Ok(Node::SmoothMax {
                    a: Box::new(a),
                    b: Box::new(b),
                    radius,
                })
            }
            "i" => Ok(Node::Const(Complex64::new(0.0, 1.0))),
            _ => {
                if let Some(&(_, j)) = self.aliases.iter().find(|(a, _)| *a == name) {
                    return Ok(Node::Var(j));
                }
                if let Some(digits) = name.strip_prefix('z') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let index: usize = digits.parse().unwrap_or(usize::MAX);
                        if index == 0 || index > self.nvars {
                            return Err(ExprError::VariableOutOfRange {
                                index,
                                nvars: self.nvars,
                            });
                        }
                        return Ok(Node::Var(index - 1));
                    }
                }
                Err(ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    column: start + 1,
                })
            }
        }
    }
}
