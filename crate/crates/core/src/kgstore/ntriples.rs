//! Line-oriented N-Triples reader.

use super::term::{is_absolute_iri, Literal, LiteralTag, Term, Triple};

/// Parses one line. `Ok(None)` for blank and comment-only lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { src: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::Blank(cur.blank()?),
        _ => return Err("expected IRI or blank node as subject".into()),
    };
    cur.require_ws("after subject")?;
    let predicate = match cur.peek() {
        Some('<') => cur.iri()?,
        _ => return Err("expected IRI as predicate".into()),
    };
    cur.require_ws("after predicate")?;
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::Blank(cur.blank()?),
        Some('"') => Term::Literal(cur.literal()?),
        None => return Err("missing object".into()),
        _ => return Err("expected IRI, blank node or literal as object".into()),
    };
    cur.skip_ws();
    if cur.bump() != Some('.') {
        return Err("missing terminating '.'".into());
    }
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err("trailing content after '.'".into());
    }
    Triple::new(subject, predicate, object).map(Some)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn require_ws(&mut self, ctx: &str) -> Result<(), String> {
        if self.skip_ws() && !self.at_end() {
            Ok(())
        } else if self.at_end() {
            Err(format!("unexpected end of line {ctx}"))
        } else {
            Err(format!("expected whitespace {ctx}"))
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        self.bump(); // '<'
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".into()),
                Some('>') => break,
                Some('\\') => out.push(self.uchar()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => {
                    return Err(format!("invalid character {c:?} in IRI"))
                }
                Some(c) => out.push(c),
            }
        }
        if !is_absolute_iri(&out) {
            return Err(format!("not an absolute IRI: <{out}>"));
        }
        Ok(out)
    }

    fn uchar(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape in IRI".into()),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> Result<char, String> {
        let end = self.pos + width;
        let digits = self.src.get(self.pos..end).ok_or("truncated unicode escape")?;
        let cp = u32::from_str_radix(digits, 16).map_err(|_| "invalid unicode escape")?;
        self.pos = end;
        char::from_u32(cp).ok_or_else(|| format!("invalid code point U+{cp:X}"))
    }

    fn blank(&mut self) -> Result<String, String> {
        self.bump();
        if self.bump() != Some(':') {
            return Err("expected '_:' blank node prefix".into());
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // A label may not end in '.', which belongs to the statement terminator.
        while self.pos > start && self.src.as_bytes()[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err("empty blank node label".into());
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.bump(); // '"'
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".into()),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex(4)?,
                        Some('U') => self.hex(8)?,
                        _ => return Err("invalid escape in literal".into()),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        let tag = match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let lang = &self.src[start..self.pos];
                let valid = !lang.is_empty()
                    && lang.split('-').all(|p| !p.is_empty())
                    && lang.split('-').next().is_some_and(|p| p.chars().all(|c| c.is_ascii_alphabetic()));
                if !valid {
                    return Err(format!("invalid language tag @{lang}"));
                }
                LiteralTag::Lang(lang.to_string())
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err("expected '^^<datatype>'".into());
                }
                LiteralTag::Datatype(self.iri()?)
            }
            _ => LiteralTag::Plain,
        };
        Ok(Literal { lexical, tag })
    }
}
