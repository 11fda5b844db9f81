//! N-Triples ingestion, the triple store, and RDF molecule extraction.

mod molecules;
mod ntriples;
mod remote;
mod store;
mod term;

use thiserror::Error;

pub use molecules::{MoleculeSet, DEFAULT_MOLECULE_LIMIT};
pub use ntriples::parse_line;
pub use remote::{select_molecules, MoleculeCache, RemoteMolecules};
pub use store::{Catalog, EncodedTriple, EntityId, ParseOptions, ParseReport, RelationId, TripleStore};
pub use term::{is_absolute_iri, Literal, LiteralTag, Term, Triple};

use crate::net::NetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("malformed N-Triples at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("unknown entity id {0}")]
    UnknownEntity(usize),
    #[error("molecule limit must be at least 1")]
    InvalidLimit,
    #[error("I/O error: {0}")]
    Io(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Where molecules come from: an in-memory store or a remote endpoint.
pub enum MoleculeSource<'a> {
    Local(&'a TripleStore),
    Remote(&'a RemoteMolecules),
}

impl MoleculeSource<'_> {
    pub fn fetch(&self, entity: &str, limit: usize) -> Result<MoleculeSet, KgError> {
        match self {
            MoleculeSource::Local(store) => store.molecules_for_key(entity, limit),
            MoleculeSource::Remote(client) => client.fetch(entity, limit),
        }
    }
}
