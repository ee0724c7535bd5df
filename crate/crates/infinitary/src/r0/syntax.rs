//! Text syntax for R0 types: `o`, `o'`, `[σ1, σ2] -> τ`, `[] -> o`.

use super::RType;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("type syntax error at offset {at}: {msg}")]
pub struct RTypeParseError {
    pub at: usize,
    pub msg: String,
}

struct P<'a> {
    s: &'a [u8],
    i: usize,
}

impl P<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, RTypeParseError> {
        Err(RTypeParseError { at: self.i, msg: msg.into() })
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(tok.as_bytes()) {
            self.i += tok.len();
            true
        } else {
            false
        }
    }

    fn arrow(&mut self) -> bool {
        self.eat("->") || self.eat("→")
    }

    fn ty(&mut self) -> Result<RType, RTypeParseError> {
        self.ws();
        if self.eat("[") {
            let mut dom = Vec::new();
            if !self.eat("]") {
                loop {
                    dom.push(self.ty()?);
                    if self.eat("]") {
                        break;
                    }
                    if !self.eat(",") {
                        return self.err("expected `,` or `]`");
                    }
                }
            }
            if !self.arrow() {
                return self.err("a multiset must be followed by `->`");
            }
            let cod = self.ty()?;
            return Ok(RType::arrow(dom, cod));
        }
        if self.eat("(") {
            let t = self.ty()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            return Ok(t);
        }
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || b"_'".contains(&self.s[self.i])) {
            self.i += 1;
        }
        if start == self.i {
            return self.err("expected a type");
        }
        Ok(RType::Atom(String::from_utf8_lossy(&self.s[start..self.i]).into_owned()))
    }
}

pub fn parse_rtype(src: &str) -> Result<RType, RTypeParseError> {
    let mut p = P { s: src.as_bytes(), i: 0 };
    let t = p.ty()?;
    p.ws();
    if p.i != p.s.len() {
        return p.err("trailing input");
    }
    Ok(t)
}
