//! Text model files and loss-trace CSV.
//!
//! Model layout: a header `transe <k> <n_entities> <n_relations> <norm>`
//! followed by tab-separated rows `E <key> v1 .. vk` for every entity, then
//! `R <iri> v1 .. vk` for every relation, in catalog order. Values use the
//! shortest representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use super::model::{EmbeddingModel, NormKind};
use super::train::EpochStats;
use super::TransEError;
use crate::kgstore::Catalog;

pub fn write_model<W: Write>(model: &EmbeddingModel, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "transe {} {} {} {}",
        model.dim(),
        model.n_entities(),
        model.n_relations(),
        model.norm_kind()
    )?;
    for (id, name) in model.entities().iter().enumerate() {
        write_row(&mut out, 'E', name, model.entity(id))?;
    }
    for (id, name) in model.relations().iter().enumerate() {
        write_row(&mut out, 'R', name, model.relation(id))?;
    }
    Ok(())
}

fn write_row<W: Write>(out: &mut W, tag: char, name: &str, values: &[f64]) -> std::io::Result<()> {
    write!(out, "{tag}\t{name}")?;
    for v in values {
        write!(out, "\t{v}")?;
    }
    writeln!(out)
}

pub fn read_model<R: BufRead>(input: R) -> Result<EmbeddingModel, TransEError> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, msg: &str| TransEError::ModelFormat { line, reason: msg.to_string() };
    let io = |e: std::io::Error| TransEError::ModelFormat { line: 0, reason: e.to_string() };

    let header = match lines.next() {
        Some((_, l)) => l.map_err(io)?,
        None => return Err(bad(1, "empty model file")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "transe" {
        return Err(bad(1, "expected header `transe <k> <n_entities> <n_relations> <norm>`"));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(1, "invalid size in header"));
    let dim = parse_usize(fields[1])?;
    let n_entities = parse_usize(fields[2])?;
    let n_relations = parse_usize(fields[3])?;
    let norm: NormKind = fields[4].parse().map_err(|e: String| bad(1, &e))?;
    if dim == 0 || n_entities == 0 || n_relations == 0 {
        return Err(TransEError::InvalidDimension);
    }

    let mut entities = Vec::with_capacity(n_entities);
    let mut relations = Vec::with_capacity(n_relations);
    let mut entity_vectors = Vec::with_capacity(n_entities * dim);
    let mut relation_vectors = Vec::with_capacity(n_relations * dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(io)?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let tag = parts.next().unwrap_or_default();
        let name = parts.next().ok_or_else(|| bad(line_no, "missing name"))?.to_string();
        let values = parts
            .map(|v| v.parse::<f64>().map_err(|_| bad(line_no, "invalid number")))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() != dim {
            return Err(bad(line_no, &format!("expected {dim} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad(line_no, "non-finite value"));
        }
        match tag {
            "E" if relations.is_empty() => {
                entities.push(name);
                entity_vectors.extend(values);
            }
            "R" => {
                relations.push(name);
                relation_vectors.extend(values);
            }
            "E" => return Err(bad(line_no, "entity row after relation rows")),
            _ => return Err(bad(line_no, "row tag must be E or R")),
        }
    }
    if entities.len() != n_entities || relations.len() != n_relations {
        return Err(bad(0, "row counts do not match header"));
    }
    let entities: Catalog = entities.into_iter().collect();
    let relations: Catalog = relations.into_iter().collect();
    if entities.len() != n_entities || relations.len() != n_relations {
        return Err(bad(0, "duplicate names"));
    }
    Ok(EmbeddingModel::from_parts(dim, norm, entities, relations, entity_vectors, relation_vectors))
}

pub fn write_loss_trace<W: Write>(trace: &[EpochStats], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,mean_loss")?;
    for s in trace {
        writeln!(out, "{},{}", s.epoch, s.mean_loss)?;
    }
    Ok(())
}
