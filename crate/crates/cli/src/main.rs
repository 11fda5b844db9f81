//! `kgrescore` command-line driver.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use kgrescore::annotate;
use kgrescore::kgstore::{ParseOptions, TripleStore};
use kgrescore::nbest::{self, HypothesisScore, RescoredEntry, RescoredList};
use kgrescore::pipeline::{
    self, annotate_lists, fetch_molecules, load_nbest, load_references, read_cost_csv, rescore_lists, score_lists,
    write_cost_csv, write_wer_summary, Annotator, CostRow, ErrorKind, KnowledgeGraph, PipelineConfig, PipelineError,
    Stage, KEYS,
};
use kgrescore::transe::{self, IdTriple};
use kgrescore::Executor;

const BOOL_KEYS: &[&str] = &["offline", "include_literals", "lenient"];

fn help_for(key: &str) -> &'static str {
    match key {
        "nbest" => "N-best file: utt_id, rank, asr_score, text (tab separated)",
        "references" => "Reference transcripts: utt_id, text (tab separated)",
        "kg" => "Local N-Triples knowledge graph",
        "kg_endpoint" => "Remote molecule endpoint URL",
        "cache_dir" => "Directory for cached remote molecule responses",
        "offline" => "Serve remote molecules from the cache only",
        "gazetteer" => "Offline gazetteer TSV: surface, iri, confidence",
        "annotation_endpoint" => "Spotlight-compatible annotation endpoint URL",
        "confidence" => "Minimum annotation confidence [default: 0.3]",
        "molecule_limit" => "Molecules per entity [default: 500]",
        "n_max" => "Hypotheses kept per utterance [default: 30]",
        "include_literals" => "Keep literal-valued triples as entities",
        "lenient" => "Skip malformed N-Triples lines instead of failing",
        "dim" => "Embedding dimension [default: 50]",
        "margin" => "Hinge margin [default: 1]",
        "learning_rate" => "SGD learning rate [default: 0.01]",
        "epochs" => "Training epochs [default: 100]",
        "batch_size" => "Minibatch size [default: 128]",
        "seed" => "Random seed [default: 0]",
        "embed_norm" => "Training dissimilarity norm: l1 or l2 [default: l2]",
        "model_scope" => "utterance (one model per utterance) or global [default: utterance]",
        "model" => "Pre-trained model file; skips training",
        "aggregation" => "Pair cost aggregation: min or sum [default: sum]",
        "pairing" => "Molecule pairing: cross or aligned [default: cross]",
        "norm" => "Molecule distance norm: l1 or l2 [default: l1]",
        "cost_field" => "Ranking cost: total, subject, object or viterbi [default: total]",
        "alpha" => "Interpolate SRC with the recognizer score using this weight",
        "output_dir" => "Artifact directory [default: out]",
        "jobs" => "Worker threads, 0 for all cores [default: 1]",
        _ => "",
    }
}

fn config_args(cmd: Command) -> Command {
    let mut cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value config file; flags override it"),
    );
    for key in KEYS {
        let mut arg = Arg::new(*key).long(key.replace('_', "-")).help(help_for(key));
        if BOOL_KEYS.contains(key) {
            arg = arg.num_args(0..=1).default_missing_value("true").value_name("BOOL");
        } else {
            arg = arg.value_name("VALUE");
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

fn out_arg(help: &'static str) -> Arg {
    Arg::new("out").long("out").short('o').value_name("FILE").help(help)
}

fn cli() -> Command {
    Command::new("kgrescore")
        .about("Rescore ASR N-best lists by knowledge-graph relatedness")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .subcommand(
            Command::new("kg").about("Knowledge-graph utilities").subcommand_required(true).subcommand(
                config_args(Command::new("parse").about("Parse an N-Triples file and report statistics"))
                    .arg(out_arg("Write the parsed store back as N-Triples"))
                    .arg(
                        Arg::new("entity")
                            .long("entity")
                            .value_name("IRI")
                            .help("Print the molecules of this entity"),
                    ),
            ),
        )
        .subcommand(
            Command::new("embed").about("Embedding utilities").subcommand_required(true).subcommand(
                config_args(Command::new("train").about("Train TransE embeddings on a local knowledge graph"))
                    .arg(out_arg("Model file [default: <output-dir>/model.transe]"))
                    .arg(
                        Arg::new("evaluate")
                            .long("evaluate")
                            .action(ArgAction::SetTrue)
                            .help("Report filtered tail prediction on the training triples"),
                    ),
            ),
        )
        .subcommand(
            config_args(Command::new("annotate").about("Link entity mentions in text or an N-best file"))
                .arg(Arg::new("text").long("text").value_name("TEXT").help("Annotate this text instead of --nbest")),
        )
        .subcommand(
            config_args(Command::new("score").about("Compute relatedness costs for every hypothesis"))
                .arg(out_arg("Cost CSV [default: <output-dir>/costs.csv]")),
        )
        .subcommand(
            config_args(Command::new("rescore").about("Reorder N-best lists using a cost CSV"))
                .arg(Arg::new("costs").long("costs").value_name("FILE").required(true).help("Cost CSV from `score`"))
                .arg(out_arg("Rescored N-best [default: <output-dir>/rescored.nbest]")),
        )
        .subcommand(
            config_args(Command::new("eval").about("Compare original, rescored and oracle WER"))
                .arg(
                    Arg::new("rescored")
                        .long("rescored")
                        .value_name("FILE")
                        .required(true)
                        .help("Rescored N-best file"),
                ),
        )
        .subcommand(config_args(Command::new("pipeline").about("Run every stage and write all artifacts")))
}

fn config_error(message: impl Into<String>) -> PipelineError {
    PipelineError::new(Stage::Config, ErrorKind::Config, message)
}

fn resolve_config(m: &ArgMatches) -> Result<PipelineConfig, PipelineError> {
    let mut config = PipelineConfig::default();
    if let Some(path) = m.get_one::<String>("config") {
        config.apply_file(Path::new(path))?;
    }
    for key in KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            config.set(key, value)?;
        }
    }
    Ok(config)
}

fn output_error(e: io::Error) -> PipelineError {
    PipelineError::new(Stage::Output, ErrorKind::Internal, e.to_string())
}

fn output_path(m: &ArgMatches, config: &PipelineConfig, default: &str) -> Result<PathBuf, PipelineError> {
    let path = match m.get_one::<String>("out") {
        Some(p) => PathBuf::from(p),
        None => config.output_dir.join(default),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(output_error)?;
    }
    Ok(path)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(output_error)
}

fn open(path: &Path) -> Result<BufReader<fs::File>, PipelineError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::new(Stage::Inputs, ErrorKind::Parse, format!("cannot open {}: {e}", path.display())))
}

fn local_store(config: &PipelineConfig) -> Result<TripleStore, PipelineError> {
    let path = config.kg.as_ref().ok_or_else(|| config_error("--kg is required"))?;
    let options = ParseOptions { lenient: config.lenient, include_literals: config.include_literals };
    let (store, report) = TripleStore::parse_ntriples_with(open(path)?, options)
        .map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
    for (line, reason) in &report.malformed {
        eprintln!("skipped line {line}: {reason}");
    }
    Ok(store)
}

fn cmd_kg_parse(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let path = config.kg.as_ref().ok_or_else(|| config_error("--kg is required"))?;
    let options = ParseOptions { lenient: config.lenient, include_literals: config.include_literals };
    let (store, report) = TripleStore::parse_ntriples_with(open(path)?, options)
        .map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
    println!("lines\t{}", report.lines);
    println!("statements\t{}", report.statements);
    println!("duplicates\t{}", report.duplicates);
    println!("malformed\t{}", report.malformed.len());
    for (line, reason) in &report.malformed {
        eprintln!("line {line}: {reason}");
    }
    println!("triples\t{}", store.len());
    println!("entities\t{}", store.entities().len());
    println!("relations\t{}", store.relations().len());
    if let Some(entity) = m.get_one::<String>("entity") {
        let set = store
            .molecules_for_key(entity, config.molecule_limit)
            .map_err(|e| PipelineError::from((Stage::Molecules, e)))?;
        println!("molecules\t{}\ttruncated={}", set.len(), set.truncated);
        for t in &set.molecules {
            println!("{t}");
        }
    }
    if let Some(out) = m.get_one::<String>("out") {
        write_file(Path::new(out), store.to_ntriples().as_bytes())?;
    }
    Ok(())
}

fn cmd_embed_train(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let store = local_store(config)?;
    let exec = Executor::new(config.jobs);
    let outcome = transe::train_with(&store, &config.train_config(), &exec)
        .map_err(|e| PipelineError::from((Stage::Relatedness, e)))?;
    let model_path = output_path(m, config, pipeline::MODEL_FILE)?;
    let mut buf = Vec::new();
    transe::write_model(&outcome.model, &mut buf).map_err(output_error)?;
    write_file(&model_path, &buf)?;
    let trace_path = model_path.with_file_name(pipeline::LOSS_TRACE_FILE);
    let mut buf = Vec::new();
    transe::write_loss_trace(&outcome.trace, &mut buf).map_err(output_error)?;
    write_file(&trace_path, &buf)?;
    if let Some(last) = outcome.trace.last() {
        println!("epochs\t{}\nfinal_loss\t{}", last.epoch, last.mean_loss);
    }
    if m.get_flag("evaluate") {
        let queries = transe::training_triples(&store);
        let known: HashSet<IdTriple> = queries.iter().copied().collect();
        let report = transe::evaluate_tails(&outcome.model, &queries, &known, &exec);
        let n = outcome.model.n_entities();
        println!("queries\t{}", report.queries);
        println!("mean_rank\t{}\t(random {})", report.mean_rank, transe::LinkPredictionReport::random_mean_rank(n));
        println!("mrr\t{}", report.mean_reciprocal_rank);
        println!(
            "hits_at_10\t{}\t(random {})",
            report.hits_at_10,
            transe::LinkPredictionReport::random_hits_at_10(n)
        );
    }
    Ok(())
}

fn cmd_annotate(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let annotator = Annotator::load(config)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let print = |out: &mut dyn Write, utt: &str, rank: usize, anns: &[annotate::Annotation]| {
        for a in anns {
            writeln!(out, "{utt}\t{rank}\t{}\t{}\t{}\t{}", a.offset, a.surface, a.iri, a.confidence)?;
        }
        Ok::<_, io::Error>(())
    };
    if let Some(text) = m.get_one::<String>("text") {
        let anns = annotate::annotate_text(text, &annotator.source())
            .map_err(|e| PipelineError::from((Stage::Annotate, e)))?;
        let anns = annotate::filter_annotations(&anns, config.confidence);
        print(&mut out, "-", 0, &anns).map_err(output_error)?;
        return Ok(());
    }
    let lists = load_nbest(config)?;
    let linked = annotate_lists(&lists, &annotator, config.confidence, &Executor::new(config.jobs))?;
    for (list, per_hyp) in lists.iter().zip(&linked) {
        for (h, anns) in list.hypotheses.iter().zip(per_hyp) {
            print(&mut out, &list.utterance, h.asr_rank, anns).map_err(output_error)?;
        }
    }
    Ok(())
}

fn cmd_score(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let exec = Executor::new(config.jobs);
    let lists = load_nbest(config)?;
    let kg = KnowledgeGraph::load(config)?;
    let annotator = Annotator::load(config)?;
    let linked = annotate_lists(&lists, &annotator, config.confidence, &exec)?;
    let molecules = fetch_molecules(&linked, &kg, config.molecule_limit, &exec)?;
    let scored = score_lists(&lists, &linked, &molecules, config, &exec)?;
    let mut rows = Vec::new();
    for (u, list) in lists.iter().enumerate() {
        for (h, hyp) in list.hypotheses.iter().enumerate() {
            rows.push(CostRow {
                utterance: list.utterance.clone(),
                rank: hyp.asr_rank,
                score: scored.scores[u][h],
                n_entities: scored.entity_counts[u][h],
            });
        }
    }
    let path = output_path(m, config, pipeline::COSTS_FILE)?;
    let mut buf = Vec::new();
    write_cost_csv(&mut buf, &rows, config.aggregation, config.pairing).map_err(output_error)?;
    write_file(&path, &buf)
}

fn cmd_rescore(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let lists = load_nbest(config)?;
    let costs_path = PathBuf::from(m.get_one::<String>("costs").expect("required"));
    let costs = read_cost_csv(open(&costs_path)?).map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
    let scores: Vec<Vec<HypothesisScore>> = lists
        .iter()
        .map(|list| {
            list.hypotheses
                .iter()
                .map(|h| costs.get(&(list.utterance.clone(), h.asr_rank)).copied().unwrap_or(HypothesisScore::Unscored))
                .collect()
        })
        .collect();
    let rescored = rescore_lists(&lists, &scores, config)?;
    let path = output_path(m, config, pipeline::RESCORED_FILE)?;
    let mut buf = Vec::new();
    nbest::write_nbest(&mut buf, rescored.iter().flat_map(|r| r.entries.iter().map(|e| (e.new_rank, &e.hypothesis))))
        .map_err(output_error)?;
    write_file(&path, &buf)
}

fn cmd_eval(m: &ArgMatches, config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut lists = load_nbest(config)?;
    let refs = load_references(config)?.ok_or_else(|| config_error("--references is required"))?;
    let rescored_path = PathBuf::from(m.get_one::<String>("rescored").expect("required"));
    let rescored = nbest::parse_nbest_with(open(&rescored_path)?, usize::MAX)
        .map_err(|e| PipelineError::from((Stage::Inputs, e)))?;
    let mut by_utt: HashMap<String, RescoredList> = rescored
        .into_iter()
        .map(|l| {
            let entries = l
                .hypotheses
                .into_iter()
                .map(|h| RescoredEntry { new_rank: h.asr_rank, hypothesis: h, score: HypothesisScore::Unscored })
                .collect();
            (l.utterance.clone(), RescoredList { utterance: l.utterance, entries })
        })
        .collect();
    lists.retain(|l| by_utt.contains_key(&l.utterance));
    let aligned: Vec<RescoredList> = lists.iter().filter_map(|l| by_utt.remove(&l.utterance)).collect();
    let summary =
        pipeline::wer_summary(&lists, &aligned, &refs).map_err(|e| PipelineError::from((Stage::Rescore, e)))?;
    write_wer_summary(io::stdout().lock(), &summary).map_err(output_error)
}

fn cmd_pipeline(config: &PipelineConfig) -> Result<(), PipelineError> {
    let report = pipeline::run_pipeline(config)?;
    eprintln!(
        "{} utterances, {} hypotheses, {} scored, {} network requests",
        report.utterances, report.hypotheses, report.scored, report.network_requests
    );
    if let Some(w) = &report.wer {
        eprintln!(
            "WER original {:.4} rescored {:.4} oracle {:.4}",
            w.original.wer(),
            w.rescored.wer(),
            w.oracle.wer()
        );
    }
    for path in &report.artifacts {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(matches: &ArgMatches) -> Result<(), PipelineError> {
    match matches.subcommand() {
        Some(("kg", sub)) => {
            let (_, m) = sub.subcommand().expect("subcommand required");
            cmd_kg_parse(m, &resolve_config(m)?)
        }
        Some(("embed", sub)) => {
            let (_, m) = sub.subcommand().expect("subcommand required");
            cmd_embed_train(m, &resolve_config(m)?)
        }
        Some(("annotate", m)) => cmd_annotate(m, &resolve_config(m)?),
        Some(("score", m)) => cmd_score(m, &resolve_config(m)?),
        Some(("rescore", m)) => cmd_rescore(m, &resolve_config(m)?),
        Some(("eval", m)) => cmd_eval(m, &resolve_config(m)?),
        Some(("pipeline", m)) => cmd_pipeline(&resolve_config(m)?),
        _ => unreachable!("clap enforces a subcommand"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_mirror_config_keys_and_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "dim = 8\nseed = 3\noffline = false\n").unwrap();
        let m = cli()
            .try_get_matches_from([
                "kgrescore",
                "pipeline",
                "--config",
                file.to_str().unwrap(),
                "--seed",
                "9",
                "--offline",
                "--molecule-limit",
                "7",
            ])
            .unwrap();
        let (_, sub) = m.subcommand().unwrap();
        let config = resolve_config(sub).unwrap();
        assert_eq!(config.dim, 8);
        assert_eq!(config.seed, 9);
        assert!(config.offline);
        assert_eq!(config.molecule_limit, 7);
    }
}
