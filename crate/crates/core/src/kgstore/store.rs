use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use indexmap::IndexSet;

use super::ntriples::parse_line;
use super::term::Triple;
use super::KgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId(pub usize);

/// Catalog ids of one triple. `tail` is `None` for literal objects that were
/// not catalogued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodedTriple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: Option<EntityId>,
}

/// Bijection between names and dense ids, assigned in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Catalog(IndexSet<String>);

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> usize {
        match self.0.get_index_of(name) {
            Some(id) => id,
            None => self.0.insert_full(name.to_string()).0,
        }
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.0.get_index_of(name)
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.0.get_index(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl FromIterator<String> for Catalog {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

// IndexSet equality ignores order; catalogs must compare id-for-id.
impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().eq(other.0.iter())
    }
}

impl Eq for Catalog {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Count and report malformed lines instead of failing on the first.
    pub lenient: bool,
    /// Catalogue literal objects as opaque entities so they join molecules.
    pub include_literals: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub lines: usize,
    pub statements: usize,
    pub duplicates: usize,
    /// `(line number, reason)` of every skipped line in lenient mode.
    pub malformed: Vec<(usize, String)>,
}

/// Immutable indexed triple collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleStore {
    triples: Vec<Triple>,
    encoded: Vec<EncodedTriple>,
    entities: Catalog,
    relations: Catalog,
    subject_index: Vec<Vec<usize>>,
    object_index: Vec<Vec<usize>>,
    include_literals: bool,
}

impl TripleStore {
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I, include_literals: bool) -> Self {
        let mut builder = StoreBuilder::new(include_literals);
        for t in triples {
            builder.insert(t);
        }
        builder.finish()
    }

    pub fn parse_ntriples<R: BufRead>(input: R) -> Result<Self, KgError> {
        Ok(Self::parse_ntriples_with(input, ParseOptions::default())?.0)
    }

    pub fn parse_ntriples_with<R: BufRead>(
        input: R,
        options: ParseOptions,
    ) -> Result<(Self, ParseReport), KgError> {
        let mut builder = StoreBuilder::new(options.include_literals);
        let mut report = ParseReport::default();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| KgError::Io(e.to_string()))?;
            report.lines = line_no;
            match parse_line(&line) {
                Ok(None) => {}
                Ok(Some(triple)) => {
                    report.statements += 1;
                    if !builder.insert(triple) {
                        report.duplicates += 1;
                    }
                }
                Err(reason) if options.lenient => report.malformed.push((line_no, reason)),
                Err(reason) => return Err(KgError::MalformedLine { line: line_no, reason }),
            }
        }
        Ok((builder.finish(), report))
    }

    pub fn parse_str(input: &str) -> Result<Self, KgError> {
        Self::parse_ntriples(input.as_bytes())
    }

    pub fn write_ntriples<W: Write>(&self, mut out: W) -> io::Result<()> {
        for t in &self.triples {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn to_ntriples(&self) -> String {
        let mut buf = Vec::new();
        self.write_ntriples(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("N-Triples output is UTF-8")
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn encoded(&self) -> &[EncodedTriple] {
        &self.encoded
    }

    pub fn entities(&self) -> &Catalog {
        &self.entities
    }

    pub fn relations(&self) -> &Catalog {
        &self.relations
    }

    pub fn includes_literals(&self) -> bool {
        self.include_literals
    }

    pub fn entity_id(&self, key: &str) -> Option<EntityId> {
        self.entities.id(key).map(EntityId)
    }

    pub fn subject_positions(&self, entity: EntityId) -> &[usize] {
        self.subject_index.get(entity.0).map_or(&[], Vec::as_slice)
    }

    pub fn object_positions(&self, entity: EntityId) -> &[usize] {
        self.object_index.get(entity.0).map_or(&[], Vec::as_slice)
    }
}

pub(crate) struct StoreBuilder {
    seen: HashSet<Triple>,
    store: TripleStore,
}

impl StoreBuilder {
    pub(crate) fn new(include_literals: bool) -> Self {
        Self {
            seen: HashSet::new(),
            store: TripleStore {
                triples: Vec::new(),
                encoded: Vec::new(),
                entities: Catalog::new(),
                relations: Catalog::new(),
                subject_index: Vec::new(),
                object_index: Vec::new(),
                include_literals,
            },
        }
    }

    /// Returns false if the triple was already present.
    pub(crate) fn insert(&mut self, triple: Triple) -> bool {
        if self.seen.contains(&triple) {
            return false;
        }
        let s = &mut self.store;
        let pos = s.triples.len();
        let head = EntityId(intern_entity(s, &triple.subject().catalog_key()));
        let relation = RelationId(s.relations.intern(triple.predicate()));
        let tail = if triple.object().is_literal() && !s.include_literals {
            None
        } else {
            Some(EntityId(intern_entity(s, &triple.object().catalog_key())))
        };
        s.subject_index[head.0].push(pos);
        if let Some(tail) = tail {
            s.object_index[tail.0].push(pos);
        }
        s.encoded.push(EncodedTriple { head, relation, tail });
        self.seen.insert(triple.clone());
        s.triples.push(triple);
        true
    }

    pub(crate) fn finish(self) -> TripleStore {
        self.store
    }
}

fn intern_entity(store: &mut TripleStore, key: &str) -> usize {
    let id = store.entities.intern(key);
    if id == store.subject_index.len() {
        store.subject_index.push(Vec::new());
        store.object_index.push(Vec::new());
    }
    id
}
