use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(name).display().to_string()
}

fn kgrescore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgrescore")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn inputs() -> Vec<String> {
    vec![
        "--nbest".into(),
        toy("nbest.tsv"),
        "--references".into(),
        toy("refs.tsv"),
        "--kg".into(),
        toy("kg.nt"),
        "--gazetteer".into(),
        toy("gazetteer.tsv"),
        "--dim".into(),
        "16".into(),
        "--epochs".into(),
        "40".into(),
        "--seed".into(),
        "7".into(),
    ]
}

fn run_with(sub: &[&str], extra: &[&str]) -> Output {
    let owned = inputs();
    let mut args: Vec<&str> = sub.to_vec();
    args.extend(owned.iter().map(String::as_str));
    args.extend_from_slice(extra);
    kgrescore(&args)
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn kg_parse_reports_counts_and_molecules() {
    let out = kgrescore(&["kg", "parse", "--kg", &toy("kg.nt"), "--entity", "http://dbpedia.org/resource/Arkansas"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("triples\t24\n"), "{text}");
    assert!(text.contains("molecules\t4\ttruncated=false"), "{text}");

    let out = kgrescore(&["kg", "parse", "--kg", &toy("kg.nt"), "--molecule-limit", "2", "--entity", "http://dbpedia.org/resource/Arkansas"]);
    assert!(stdout(&out).contains("molecules\t2\ttruncated=true"));
}

#[test]
fn step_by_step_matches_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let all = d.join("all");
    assert!(run_with(&["pipeline"], &["--output-dir", all.to_str().unwrap()]).status.success());

    let costs = path(d, "costs.csv");
    let out = run_with(&["score"], &["--out", costs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&costs).unwrap(), fs::read(all.join("costs.csv")).unwrap());

    let rescored = path(d, "rescored.nbest");
    let out = run_with(&["rescore"], &["--costs", costs.to_str().unwrap(), "--out", rescored.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&rescored).unwrap(), fs::read(all.join("rescored.nbest")).unwrap());

    let out = run_with(&["eval"], &["--rescored", rescored.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), fs::read_to_string(all.join("wer_summary.csv")).unwrap());
}

#[test]
fn embed_train_writes_model_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy.transe");
    let out = kgrescore(&[
        "embed", "train", "--kg", &toy("kg.nt"), "--dim", "8", "--epochs", "20", "--out", model.to_str().unwrap(), "--evaluate",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("mean_rank\t"));
    assert!(fs::read_to_string(&model).unwrap().starts_with("transe 8 "));
    let trace = fs::read_to_string(dir.path().join("loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);
}

#[test]
fn annotate_text_and_lists() {
    let out = kgrescore(&["annotate", "--gazetteer", &toy("gazetteer.tsv"), "--text", "Bill Clinton loved Hope"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\t0\tBill Clinton\thttp://dbpedia.org/resource/Bill_Clinton\t0.98"), "{text}");
    assert!(!text.contains("Hope"), "hope is below the 0.3 threshold: {text}");
    let out = kgrescore(&["annotate", "--gazetteer", &toy("gazetteer.tsv"), "--confidence", "0.2", "--text", "Hope"]);
    assert!(stdout(&out).contains("Hope,_Arkansas"));

    let out = kgrescore(&["annotate", "--gazetteer", &toy("gazetteer.tsv"), "--nbest", &toy("nbest.tsv")]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().next().unwrap().starts_with("utt01\t1\t0\tbill clinton\t"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let body = format!(
        "nbest = {}\nkg = {}\ngazetteer = {}\ndim = 8\nepochs = 10\noutput_dir = {}\n",
        toy("nbest.tsv"),
        toy("kg.nt"),
        toy("gazetteer.tsv"),
        dir.path().join("out").display()
    );
    fs::write(&conf, body).unwrap();
    let out = kgrescore(&["pipeline", "--config", conf.to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = fs::read_to_string(dir.path().join("out/config.resolved")).unwrap();
    assert!(resolved.contains("seed = 99\n"));
    assert!(resolved.contains("dim = 8\n"));
    assert!(!dir.path().join("out/wer_summary.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_flag = out_dir.to_str().unwrap();

    let out = run_with(&["pipeline"], &["--aggregation", "median", "--output-dir", out_flag]);
    assert_eq!(out.status.code(), Some(2));
    let out = kgrescore(&["pipeline", "--nbest", &toy("nbest.tsv"), "--gazetteer", &toy("gazetteer.tsv"), "--output-dir", out_flag]);
    assert_eq!(out.status.code(), Some(2));
    let out = kgrescore(&["pipeline", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.nt");
    let out = kgrescore(&[
        "pipeline", "--nbest", &toy("nbest.tsv"), "--gazetteer", &toy("gazetteer.tsv"),
        "--kg", missing.to_str().unwrap(), "--output-dir", out_flag,
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 1"));
    assert!(!out_dir.join("rescored.nbest").exists());
    assert!(out_dir.join("FAILED").exists());

    let bad = dir.path().join("bad.nt");
    fs::write(&bad, "<http://ex/a> <http://ex/p>\n").unwrap();
    let out = kgrescore(&["kg", "parse", "--kg", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = kgrescore(&["kg", "parse", "--kg", bad.to_str().unwrap(), "--lenient"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("malformed\t1"));

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let dead = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let out = kgrescore(&[
        "pipeline", "--nbest", &toy("nbest.tsv"), "--gazetteer", &toy("gazetteer.tsv"),
        "--kg-endpoint", &dead, "--output-dir", out_flag,
    ]);
    assert_eq!(out.status.code(), Some(4));
}
