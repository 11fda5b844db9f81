use std::fmt;

/// An RDF term as it appears in an N-Triples statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    /// Blank node label without the `_:` prefix.
    Blank(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// Unescaped lexical form.
    pub lexical: String,
    pub tag: LiteralTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralTag {
    Plain,
    Lang(String),
    Datatype(String),
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Self {
        Term::Iri(value.into())
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// Stable catalog name: the bare IRI, `_:label` for blank nodes, and the
    /// escaped N-Triples form for literals. The three shapes cannot collide
    /// because IRIs need a letter-initial scheme and never contain `"`.
    pub fn catalog_key(&self) -> String {
        match self {
            Term::Iri(iri) => iri.clone(),
            Term::Blank(label) => format!("_:{label}"),
            Term::Literal(_) => self.to_string(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write_iri(f, iri),
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        '\u{8}' => f.write_str("\\b")?,
                        '\u{c}' => f.write_str("\\f")?,
                        c if (c as u32) < 0x20 || c == '\u{7f}' => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                match &lit.tag {
                    LiteralTag::Plain => Ok(()),
                    LiteralTag::Lang(lang) => write!(f, "@{lang}"),
                    LiteralTag::Datatype(dt) => {
                        f.write_str("^^")?;
                        write_iri(f, dt)
                    }
                }
            }
        }
    }
}

fn write_iri(f: &mut fmt::Formatter<'_>, iri: &str) -> fmt::Result {
    f.write_str("<")?;
    for c in iri.chars() {
        if needs_iri_escape(c) {
            let cp = c as u32;
            if cp <= 0xFFFF {
                write!(f, "\\u{cp:04X}")?;
            } else {
                write!(f, "\\U{cp:08X}")?;
            }
        } else {
            write!(f, "{c}")?;
        }
    }
    f.write_str(">")
}

pub(crate) fn needs_iri_escape(c: char) -> bool {
    matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') || (c as u32) <= 0x20
}

/// `scheme ":" rest` with an ASCII-letter-initial scheme and a non-empty rest.
pub fn is_absolute_iri(iri: &str) -> bool {
    let Some((scheme, rest)) = iri.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
    first_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.is_empty()
        && !iri.chars().any(needs_iri_escape)
}

/// One `(subject, predicate, object)` statement.
///
/// The subject is an IRI or blank node and the predicate an absolute IRI;
/// [`Triple::new`] enforces this.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: String,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: impl Into<String>, object: Term) -> Result<Self, String> {
        let predicate = predicate.into();
        match &subject {
            Term::Iri(iri) if !is_absolute_iri(iri) => {
                return Err(format!("subject is not an absolute IRI: {iri}"))
            }
            Term::Literal(_) => return Err("subject may not be a literal".into()),
            _ => {}
        }
        if !is_absolute_iri(&predicate) {
            return Err(format!("predicate is not an absolute IRI: {predicate}"));
        }
        if let Term::Iri(iri) = &object {
            if !is_absolute_iri(iri) {
                return Err(format!("object is not an absolute IRI: {iri}"));
            }
        }
        Ok(Self { subject, predicate, object })
    }

    /// Convenience for IRI-only triples; panics on invalid IRIs.
    pub fn iris(subject: &str, predicate: &str, object: &str) -> Self {
        Self::new(Term::iri(subject), predicate, Term::iri(object)).expect("valid IRIs")
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.subject)?;
        write_iri(f, &self.predicate)?;
        write!(f, " {} .", self.object)
    }
}
