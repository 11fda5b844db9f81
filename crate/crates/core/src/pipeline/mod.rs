//! End-to-end rescoring driver.
//!
//! Stages: (1) load the N-best lists and other inputs, (2) annotate entity
//! mentions, (3) fetch RDF molecules, (4) train or load TransE embeddings and
//! compute relatedness costs, (5) rescore. The building blocks are public so
//! the CLI subcommands can run a single stage.

mod config;
mod report;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;

pub use config::{ConfigError, ModelScope, PipelineConfig, KEYS};
pub use report::{
    read_cost_csv, wer_summary, write_cost_csv, write_wer_summary, CorpusWer, CostRow, WerSummary, COST_HEADER,
};

use crate::annotate::{self, AnnotateError, Annotation, AnnotationSource, Gazetteer, SpotlightClient};
use crate::kgstore::{KgError, MoleculeCache, MoleculeSet, MoleculeSource, ParseOptions, RemoteMolecules, TripleStore};
use crate::nbest::{self, CostSummary, HypothesisScore, NBestError, NBestList, RescoredList};
use crate::net::NetError;
use crate::par::Executor;
use crate::relatedness::{embed_molecules, score_sentence, MoleculeEmbedding, RelatednessError};
use crate::transe::{self, EmbeddingModel, EpochStats, TransEError};

pub const RESCORED_FILE: &str = "rescored.nbest";
pub const COSTS_FILE: &str = "costs.csv";
pub const LOSS_TRACE_FILE: &str = "loss_trace.csv";
pub const CONFIG_FILE: &str = "config.resolved";
pub const WER_FILE: &str = "wer_summary.csv";
pub const MODEL_FILE: &str = "model.transe";
/// Written instead of the artifacts when a run fails.
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Inputs,
    Annotate,
    Molecules,
    Relatedness,
    Rescore,
    Output,
}

impl Stage {
    pub fn number(self) -> usize {
        match self {
            Stage::Config => 0,
            Stage::Inputs => 1,
            Stage::Annotate => 2,
            Stage::Molecules => 3,
            Stage::Relatedness => 4,
            Stage::Rescore => 5,
            Stage::Output => 6,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "configuration",
            Stage::Inputs => "inputs",
            Stage::Annotate => "annotation",
            Stage::Molecules => "molecule fetch",
            Stage::Relatedness => "embedding and relatedness",
            Stage::Rescore => "rescoring",
            Stage::Output => "output",
        };
        write!(f, "stage {} ({name})", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Parse,
    Network,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Parse => 3,
            ErrorKind::Network => 4,
            ErrorKind::Internal => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { stage, kind, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

fn net_kind(e: &NetError) -> ErrorKind {
    match e {
        NetError::Network { .. } | NetError::Protocol(_) => ErrorKind::Network,
    }
}

impl From<(Stage, KgError)> for PipelineError {
    fn from((stage, e): (Stage, KgError)) -> Self {
        let kind = match &e {
            KgError::Net(n) => net_kind(n),
            KgError::MalformedLine { .. } | KgError::Io(_) => ErrorKind::Parse,
            KgError::UnknownEntity(_) | KgError::InvalidLimit => ErrorKind::Internal,
        };
        Self::new(stage, kind, e.to_string())
    }
}

impl From<(Stage, AnnotateError)> for PipelineError {
    fn from((stage, e): (Stage, AnnotateError)) -> Self {
        let kind = match &e {
            AnnotateError::Net(n) => net_kind(n),
            AnnotateError::Gazetteer { .. } => ErrorKind::Parse,
            AnnotateError::EmptyText => ErrorKind::Internal,
        };
        Self::new(stage, kind, e.to_string())
    }
}

impl From<(Stage, NBestError)> for PipelineError {
    fn from((stage, e): (Stage, NBestError)) -> Self {
        let kind = match &e {
            NBestError::Misaligned { .. } | NBestError::EmptyReference => ErrorKind::Internal,
            _ => ErrorKind::Parse,
        };
        Self::new(stage, kind, e.to_string())
    }
}

impl From<(Stage, TransEError)> for PipelineError {
    fn from((stage, e): (Stage, TransEError)) -> Self {
        let kind = match &e {
            TransEError::ModelFormat { .. } => ErrorKind::Parse,
            TransEError::InvalidConfig(_) | TransEError::InvalidDimension => ErrorKind::Config,
            _ => ErrorKind::Internal,
        };
        Self::new(stage, kind, e.to_string())
    }
}

impl From<(Stage, RelatednessError)> for PipelineError {
    fn from((stage, e): (Stage, RelatednessError)) -> Self {
        Self::new(stage, ErrorKind::Internal, e.to_string())
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        Self::new(Stage::Config, ErrorKind::Config, e.to_string())
    }
}

fn open(stage: Stage, path: &Path) -> Result<BufReader<fs::File>, PipelineError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::new(stage, ErrorKind::Parse, format!("cannot open {}: {e}", path.display())))
}

/// The knowledge-graph side of the pipeline.
pub enum KnowledgeGraph {
    Local(TripleStore),
    Remote(RemoteMolecules),
}

impl KnowledgeGraph {
    pub fn load(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let stage = Stage::Inputs;
        if let Some(path) = &config.kg {
            let options = ParseOptions { lenient: config.lenient, include_literals: config.include_literals };
            let (store, _) = TripleStore::parse_ntriples_with(open(stage, path)?, options)
                .map_err(|e| PipelineError::from((stage, e)))?;
            return Ok(KnowledgeGraph::Local(store));
        }
        let endpoint = config
            .kg_endpoint
            .clone()
            .ok_or_else(|| PipelineError::new(Stage::Config, ErrorKind::Config, "no knowledge graph configured"))?;
        let mut client = RemoteMolecules::new(endpoint).offline(config.offline);
        if let Some(dir) = &config.cache_dir {
            client = client.with_cache(MoleculeCache::new(dir));
        }
        Ok(KnowledgeGraph::Remote(client))
    }

    pub fn source(&self) -> MoleculeSource<'_> {
        match self {
            KnowledgeGraph::Local(store) => MoleculeSource::Local(store),
            KnowledgeGraph::Remote(client) => MoleculeSource::Remote(client),
        }
    }

    pub fn network_requests(&self) -> usize {
        match self {
            KnowledgeGraph::Local(_) => 0,
            KnowledgeGraph::Remote(client) => client.network_requests(),
        }
    }
}

pub enum Annotator {
    Offline(Gazetteer),
    Remote(SpotlightClient),
}

impl Annotator {
    pub fn load(config: &PipelineConfig) -> Result<Self, PipelineError> {
        if let Some(path) = &config.gazetteer {
            let g = Gazetteer::from_tsv(open(Stage::Inputs, path)?)
                .map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
            return Ok(Annotator::Offline(g));
        }
        let endpoint = config.annotation_endpoint.clone().ok_or_else(|| {
            PipelineError::new(Stage::Config, ErrorKind::Config, "no annotation source configured")
        })?;
        Ok(Annotator::Remote(SpotlightClient::new(endpoint).with_confidence(config.confidence)))
    }

    pub fn source(&self) -> AnnotationSource<'_> {
        match self {
            Annotator::Offline(g) => AnnotationSource::Offline(g),
            Annotator::Remote(c) => AnnotationSource::Remote(c),
        }
    }
}

pub fn load_nbest(config: &PipelineConfig) -> Result<Vec<NBestList>, PipelineError> {
    let stage = Stage::Inputs;
    let path = config
        .nbest
        .as_ref()
        .ok_or_else(|| PipelineError::new(Stage::Config, ErrorKind::Config, "no N-best file configured"))?;
    let mut lists =
        nbest::parse_nbest_with(open(stage, path)?, config.n_max).map_err(|e| PipelineError::from((stage, e)))?;
    if let Some(refs) = load_references(config)? {
        for list in &mut lists {
            list.reference = refs.get(&list.utterance).cloned();
        }
    }
    Ok(lists)
}

pub fn load_references(config: &PipelineConfig) -> Result<Option<HashMap<String, String>>, PipelineError> {
    let Some(path) = &config.references else {
        return Ok(None);
    };
    nbest::parse_references(open(Stage::Inputs, path)?)
        .map(Some)
        .map_err(|e| PipelineError::from((Stage::Inputs, e)))
}

/// Filtered annotations, indexed `[utterance][hypothesis]`.
pub type LinkedLists = Vec<Vec<Vec<Annotation>>>;

pub fn annotate_lists(
    lists: &[NBestList],
    annotator: &Annotator,
    threshold: f64,
    exec: &Executor,
) -> Result<LinkedLists, PipelineError> {
    let source = annotator.source();
    // A remote annotator is called sequentially to keep request order stable.
    let annotate_list = |list: &NBestList| -> Result<Vec<Vec<Annotation>>, PipelineError> {
        list.hypotheses
            .iter()
            .map(|h| {
                annotate::annotate_text(&h.text, &source)
                    .map(|a| annotate::filter_annotations(&a, threshold))
                    .map_err(|e| PipelineError::from((Stage::Annotate, e)))
            })
            .collect()
    };
    match annotator {
        Annotator::Offline(_) => exec.try_map(lists, annotate_list),
        Annotator::Remote(_) => lists.iter().map(annotate_list).collect(),
    }
}

/// Molecule sets for every distinct linked IRI, in first-mention order.
pub fn fetch_molecules(
    linked: &LinkedLists,
    kg: &KnowledgeGraph,
    limit: usize,
    exec: &Executor,
) -> Result<IndexMap<String, MoleculeSet>, PipelineError> {
    let mut iris: IndexMap<String, ()> = IndexMap::new();
    for ann in linked.iter().flatten().flatten() {
        iris.entry(ann.iri.clone()).or_default();
    }
    let keys: Vec<String> = iris.into_keys().collect();
    let source = kg.source();
    let sets = exec.try_map(&keys, |iri| {
        source.fetch(iri, limit).map_err(|e| PipelineError::from((Stage::Molecules, e)))
    })?;
    Ok(keys.into_iter().zip(sets).collect())
}

/// Union of the molecule sets of `iris`, deduplicated in order.
fn molecule_graph<'a>(
    iris: impl IntoIterator<Item = &'a str>,
    molecules: &IndexMap<String, MoleculeSet>,
    include_literals: bool,
) -> TripleStore {
    let triples = iris
        .into_iter()
        .filter_map(|iri| molecules.get(iri))
        .flat_map(|set| set.molecules.iter().cloned());
    TripleStore::from_triples(triples, include_literals)
}

/// `Ok(None)` when the graph has nothing trainable.
fn train_on(
    graph: &TripleStore,
    config: &PipelineConfig,
) -> Result<Option<(EmbeddingModel, Vec<EpochStats>)>, PipelineError> {
    match transe::train(graph, &config.train_config()) {
        Ok(out) => Ok(Some((out.model, out.trace))),
        Err(TransEError::EmptyGraph | TransEError::Degenerate) => Ok(None),
        Err(e) => Err(PipelineError::from((Stage::Relatedness, e))),
    }
}

/// Per-utterance scores plus the loss traces of every model trained.
pub struct ScoredLists {
    pub scores: Vec<Vec<HypothesisScore>>,
    /// Usable entities per hypothesis, same indexing as `scores`.
    pub entity_counts: Vec<Vec<usize>>,
    pub traces: Vec<Vec<EpochStats>>,
    pub global_model: Option<EmbeddingModel>,
}

fn score_list(
    linked: &[Vec<Annotation>],
    molecules: &IndexMap<String, MoleculeSet>,
    model: Option<&EmbeddingModel>,
    config: &PipelineConfig,
) -> Result<(Vec<HypothesisScore>, Vec<usize>), PipelineError> {
    let mut scores = Vec::with_capacity(linked.len());
    let mut counts = Vec::with_capacity(linked.len());
    for anns in linked {
        let sets: Vec<Vec<MoleculeEmbedding>> = match model {
            Some(model) => anns
                .iter()
                .map(|a| molecules.get(&a.iri).map(|s| embed_molecules(model, s)).unwrap_or_default())
                .collect(),
            None => Vec::new(),
        };
        counts.push(sets.iter().filter(|s| !s.is_empty()).count());
        let score = score_sentence(&sets, config.scoring()).map_err(|e| PipelineError::from((Stage::Relatedness, e)))?;
        scores.push(match score {
            Some(s) => HypothesisScore::Scored(CostSummary::from(&s)),
            None => HypothesisScore::Unscored,
        });
    }
    Ok((scores, counts))
}

/// Trains (or loads) embeddings and scores every hypothesis.
pub fn score_lists(
    lists: &[NBestList],
    linked: &LinkedLists,
    molecules: &IndexMap<String, MoleculeSet>,
    config: &PipelineConfig,
    exec: &Executor,
) -> Result<ScoredLists, PipelineError> {
    let iris_of = |utt: &[Vec<Annotation>]| -> Vec<String> { utt.iter().flatten().map(|a| a.iri.clone()).collect() };
    let shared: Option<(EmbeddingModel, Vec<EpochStats>)> = if let Some(path) = &config.model {
        let model = transe::read_model(open(Stage::Inputs, path)?)
            .map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
        Some((model, Vec::new()))
    } else if config.model_scope == ModelScope::Global {
        let all: Vec<String> = linked.iter().flat_map(|u| iris_of(u)).collect();
        let graph = molecule_graph(all.iter().map(String::as_str), molecules, config.include_literals);
        train_on(&graph, config)?
    } else {
        None
    };
    let use_shared = config.model.is_some() || config.model_scope == ModelScope::Global;

    let indices: Vec<usize> = (0..lists.len()).collect();
    let per_utt = exec.try_map(&indices, |&u| {
        if use_shared {
            let (scores, counts) = score_list(&linked[u], molecules, shared.as_ref().map(|s| &s.0), config)?;
            Ok((scores, counts, None))
        } else {
            let iris = iris_of(&linked[u]);
            let graph = molecule_graph(iris.iter().map(String::as_str), molecules, config.include_literals);
            let trained = train_on(&graph, config)?;
            let (scores, counts) = score_list(&linked[u], molecules, trained.as_ref().map(|t| &t.0), config)?;
            Ok::<_, PipelineError>((scores, counts, trained.map(|t| t.1)))
        }
    })?;

    let mut out = ScoredLists { scores: Vec::new(), entity_counts: Vec::new(), traces: Vec::new(), global_model: None };
    for (scores, counts, trace) in per_utt {
        out.scores.push(scores);
        out.entity_counts.push(counts);
        out.traces.extend(trace);
    }
    if let Some((model, trace)) = shared {
        if !trace.is_empty() {
            out.traces.push(trace);
        }
        if config.model.is_none() {
            out.global_model = Some(model);
        }
    }
    Ok(out)
}

pub fn rescore_lists(
    lists: &[NBestList],
    scores: &[Vec<HypothesisScore>],
    config: &PipelineConfig,
) -> Result<Vec<RescoredList>, PipelineError> {
    lists
        .iter()
        .zip(scores)
        .map(|(list, s)| match config.alpha {
            Some(alpha) => nbest::rescore_interpolated(list, s, config.cost_field, alpha),
            None => nbest::rescore(list, s, config.cost_field),
        })
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::from((Stage::Rescore, e)))
}

/// Epoch-wise mean of several loss traces of equal length.
pub fn mean_trace(traces: &[Vec<EpochStats>]) -> Vec<EpochStats> {
    let Some(len) = traces.iter().map(Vec::len).max() else {
        return Vec::new();
    };
    (0..len)
        .map(|i| {
            let rows: Vec<&EpochStats> = traces.iter().filter_map(|t| t.get(i)).collect();
            EpochStats {
                epoch: i + 1,
                mean_loss: rows.iter().map(|r| r.mean_loss).sum::<f64>() / rows.len() as f64,
                max_norm_deviation: rows.iter().map(|r| r.max_norm_deviation).fold(0.0, f64::max),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub utterances: usize,
    pub hypotheses: usize,
    pub scored: usize,
    pub network_requests: usize,
    pub wer: Option<WerSummary>,
    pub artifacts: Vec<PathBuf>,
    pub rescored: Vec<RescoredList>,
}

fn artifact_names() -> [&'static str; 7] {
    [RESCORED_FILE, COSTS_FILE, LOSS_TRACE_FILE, CONFIG_FILE, WER_FILE, MODEL_FILE, FAILURE_MARKER]
}

/// Runs every stage and writes the artifacts into `config.output_dir`.
///
/// Stale artifacts from an earlier run are removed first. On failure nothing
/// but a `FAILED` marker naming the stage is left in the output directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    let out_dir = &config.output_dir;
    let io_err = |e: std::io::Error| PipelineError::new(Stage::Output, ErrorKind::Internal, e.to_string());
    fs::create_dir_all(out_dir).map_err(io_err)?;
    for name in artifact_names() {
        let path = out_dir.join(name);
        if path.exists() {
            fs::remove_file(&path).map_err(io_err)?;
        }
    }
    let result = run_stages(config);
    if let Err(e) = &result {
        let _ = fs::write(out_dir.join(FAILURE_MARKER), format!("{e}\n"));
    }
    result
}

fn run_stages(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let exec = Executor::new(config.jobs);
    let lists = load_nbest(config)?;
    let kg = KnowledgeGraph::load(config)?;
    let annotator = Annotator::load(config)?;
    let references = load_references(config)?;

    let linked = annotate_lists(&lists, &annotator, config.confidence, &exec)?;
    let molecules = fetch_molecules(&linked, &kg, config.molecule_limit, &exec)?;
    let scored = score_lists(&lists, &linked, &molecules, config, &exec)?;
    let rescored = rescore_lists(&lists, &scored.scores, config)?;
    let wer = match &references {
        Some(refs) => Some(wer_summary(&lists, &rescored, refs).map_err(|e| PipelineError::from((Stage::Rescore, e)))?),
        None => None,
    };

    let mut cost_rows = Vec::new();
    for (u, list) in lists.iter().enumerate() {
        for (h, hyp) in list.hypotheses.iter().enumerate() {
            cost_rows.push(CostRow {
                utterance: list.utterance.clone(),
                rank: hyp.asr_rank,
                score: scored.scores[u][h],
                n_entities: scored.entity_counts[u][h],
            });
        }
    }

    // Render everything before touching the disk so a failure leaves no partial output.
    let io_err = |e: std::io::Error| PipelineError::new(Stage::Output, ErrorKind::Internal, e.to_string());
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut buf = Vec::new();
    nbest::write_nbest(
        &mut buf,
        rescored.iter().flat_map(|r| r.entries.iter().map(|e| (e.new_rank, &e.hypothesis))),
    )
    .map_err(io_err)?;
    files.push((RESCORED_FILE, std::mem::take(&mut buf)));
    write_cost_csv(&mut buf, &cost_rows, config.aggregation, config.pairing).map_err(io_err)?;
    files.push((COSTS_FILE, std::mem::take(&mut buf)));
    transe::write_loss_trace(&mean_trace(&scored.traces), &mut buf).map_err(io_err)?;
    files.push((LOSS_TRACE_FILE, std::mem::take(&mut buf)));
    files.push((CONFIG_FILE, config.to_text().into_bytes()));
    if let Some(w) = &wer {
        write_wer_summary(&mut buf, w).map_err(io_err)?;
        files.push((WER_FILE, std::mem::take(&mut buf)));
    }
    if let Some(model) = &scored.global_model {
        transe::write_model(model, &mut buf).map_err(io_err)?;
        files.push((MODEL_FILE, std::mem::take(&mut buf)));
    }

    let mut artifacts = Vec::new();
    for (name, bytes) in files {
        let path = config.output_dir.join(name);
        fs::write(&path, bytes).map_err(io_err)?;
        artifacts.push(path);
    }

    Ok(PipelineReport {
        utterances: lists.len(),
        hypotheses: lists.iter().map(|l| l.hypotheses.len()).sum(),
        scored: scored.scores.iter().flatten().filter(|s| s.summary().is_some()).count(),
        network_requests: kg.network_requests(),
        wer,
        artifacts,
        rescored,
    })
}
