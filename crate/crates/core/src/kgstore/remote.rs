//! Remote molecule fetch with a hermetic on-disk cache.
//!
//! Protocol: `GET <endpoint>?entity=<IRI>&limit=<n>` answering N-Triples.
//! One extra row beyond the caller's limit is requested so truncation can be
//! detected.
//!
//! Cache layout: one file per request, `<cache_dir>/<key>.nt`, holding the raw
//! response body. `<key>` is the lowercase hex SHA-256 of
//! `"<endpoint>\n<entity>\n<limit>"` where `limit` is the value sent on the
//! wire. A directory of recorded responses in the same layout doubles as a
//! replay fixture.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::molecules::MoleculeSet;
use super::store::TripleStore;
use super::KgError;
use crate::net::{self, NetError};

#[derive(Debug, Clone)]
pub struct MoleculeCache {
    dir: PathBuf,
}

impl MoleculeCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(endpoint: &str, entity: &str, wire_limit: usize) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{endpoint}\n{entity}\n{wire_limit}").as_bytes());
        hex::encode(hasher.finalize())
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.nt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path_for(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(tmp, self.path_for(key))
    }
}

/// Client for the remote molecule endpoint.
pub struct RemoteMolecules {
    endpoint: String,
    cache: Option<MoleculeCache>,
    /// Fail on cache misses instead of touching the network.
    offline: bool,
    agent: ureq::Agent,
    requests: AtomicUsize,
}

impl RemoteMolecules {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            cache: None,
            offline: false,
            agent: net::agent(Duration::from_secs(30)),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self, cache: MoleculeCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Number of HTTP requests issued so far.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn fetch(&self, entity: &str, limit: usize) -> Result<MoleculeSet, KgError> {
        if limit == 0 {
            return Err(KgError::InvalidLimit);
        }
        let wire_limit = limit + 1;
        let key = MoleculeCache::key(&self.endpoint, entity, wire_limit);
        let body = match self.cache.as_ref().and_then(|c| c.get(&key)) {
            Some(body) => body,
            None => {
                let body = self.request(entity, wire_limit)?;
                // Validate before caching so a bad body is never replayed.
                select_molecules(&body, entity, limit)?;
                if let Some(cache) = &self.cache {
                    cache.put(&key, &body).map_err(|e| KgError::Io(e.to_string()))?;
                }
                body
            }
        };
        select_molecules(&body, entity, limit)
    }

    fn request(&self, entity: &str, wire_limit: usize) -> Result<String, KgError> {
        if self.offline {
            return Err(KgError::Net(NetError::Network {
                message: format!("cache miss for {entity} in offline mode"),
                retryable: false,
            }));
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let response = self
            .agent
            .get(&self.endpoint)
            .query("entity", entity)
            .query("limit", &wire_limit.to_string())
            .set("Accept", "application/n-triples")
            .call()
            .map_err(NetError::from)?;
        Ok(net::read_body(response)?)
    }
}

/// Applies local molecule selection to a response body.
pub fn select_molecules(body: &str, entity: &str, limit: usize) -> Result<MoleculeSet, KgError> {
    let graph = TripleStore::parse_str(body).map_err(|e| match e {
        KgError::MalformedLine { line, reason } => {
            KgError::Net(NetError::Protocol(format!("line {line}: {reason}")))
        }
        other => other,
    })?;
    graph.molecules_for_key(entity, limit)
}
