use super::store::{EntityId, TripleStore};
use super::term::Triple;
use super::KgError;

/// The paper-default cap on molecules fetched per entity.
pub const DEFAULT_MOLECULE_LIMIT: usize = 500;

/// Triples that mention one reference entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoleculeSet {
    /// Catalog key of the reference entity.
    pub entity: String,
    pub molecules: Vec<Triple>,
    /// Set when more matches existed than the limit allowed.
    pub truncated: bool,
}

impl MoleculeSet {
    pub fn empty(entity: impl Into<String>) -> Self {
        Self { entity: entity.into(), molecules: Vec::new(), truncated: false }
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }
}

impl TripleStore {
    /// Subject-position matches first, then object-position matches, each in
    /// store order. Self-loops appear once. Triples with uncatalogued literal
    /// objects never qualify.
    pub fn molecules_for(&self, entity: EntityId, limit: usize) -> Result<MoleculeSet, KgError> {
        if limit == 0 {
            return Err(KgError::InvalidLimit);
        }
        let name = self
            .entities()
            .name(entity.0)
            .ok_or(KgError::UnknownEntity(entity.0))?
            .to_string();
        let encoded = self.encoded();
        let as_subject = self
            .subject_positions(entity)
            .iter()
            .copied()
            .filter(|&p| encoded[p].tail.is_some());
        let as_object = self
            .object_positions(entity)
            .iter()
            .copied()
            .filter(|&p| encoded[p].head != entity);
        let mut matches = as_subject.chain(as_object);
        let molecules: Vec<Triple> =
            matches.by_ref().take(limit).map(|p| self.triples()[p].clone()).collect();
        let truncated = matches.next().is_some();
        Ok(MoleculeSet { entity: name, molecules, truncated })
    }

    /// Unknown keys give an empty set rather than an error.
    pub fn molecules_for_key(&self, key: &str, limit: usize) -> Result<MoleculeSet, KgError> {
        match self.entity_id(key) {
            Some(id) => self.molecules_for(id, limit),
            None if limit == 0 => Err(KgError::InvalidLimit),
            None => Ok(MoleculeSet::empty(key)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(lines: &[(&str, &str, &str)]) -> TripleStore {
        TripleStore::from_triples(lines.iter().map(|(s, p, o)| Triple::iris(s, p, o)), false)
    }

    #[test]
    fn subject_matches_precede_object_matches() {
        let st = store(&[
            ("urn:x", "urn:p", "urn:e"),
            ("urn:e", "urn:p", "urn:a"),
            ("urn:y", "urn:q", "urn:z"),
            ("urn:e", "urn:q", "urn:b"),
        ]);
        let e = st.entity_id("urn:e").unwrap();
        let set = st.molecules_for(e, DEFAULT_MOLECULE_LIMIT).unwrap();
        assert_eq!(set.len(), 3);
        assert!(!set.truncated);
        assert_eq!(set.molecules[0], Triple::iris("urn:e", "urn:p", "urn:a"));
        assert_eq!(set.molecules[1], Triple::iris("urn:e", "urn:q", "urn:b"));
        assert_eq!(set.molecules[2], Triple::iris("urn:x", "urn:p", "urn:e"));
    }

    #[test]
    fn truncates_at_limit() {
        let triples = (0..600).map(|i| Triple::iris("urn:hub", "urn:p", &format!("urn:n{i}")));
        let st = TripleStore::from_triples(triples, false);
        let hub = st.entity_id("urn:hub").unwrap();
        let set = st.molecules_for(hub, DEFAULT_MOLECULE_LIMIT).unwrap();
        assert_eq!(set.len(), 500);
        assert!(set.truncated);
        assert_eq!(set.molecules[499].object(), &super::super::Term::iri("urn:n499"));

        let exact = st.molecules_for(hub, 600).unwrap();
        assert_eq!(exact.len(), 600);
        assert!(!exact.truncated);
    }

    #[test]
    fn self_loop_counted_once() {
        let st = store(&[("urn:e", "urn:p", "urn:e")]);
        let set = st.molecules_for(EntityId(0), 10).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn entity_without_molecules_and_unknown_entity() {
        let input = "<urn:a> <urn:name> \"lit\" .\n";
        let st = TripleStore::parse_str(input).unwrap();
        let set = st.molecules_for(EntityId(0), 10).unwrap();
        assert!(set.is_empty());
        assert!(matches!(st.molecules_for(EntityId(7), 10), Err(KgError::UnknownEntity(7))));
        assert!(st.molecules_for_key("urn:nowhere", 10).unwrap().is_empty());
        assert!(matches!(st.molecules_for(EntityId(0), 0), Err(KgError::InvalidLimit)));
    }
}
