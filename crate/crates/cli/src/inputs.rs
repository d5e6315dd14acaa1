//! JSON-lines inputs other than the manifest itself.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use gakit::manifest::{decode_f32_base64, parse_line, read_manifest, ManifestDoc};
use gakit::{EvalCase, InterleavedSequence, Query, QueryShape, RepresentationVector};
use serde::Deserialize;

use crate::failure::{CmdResult, Failure};

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::user(format!("cannot open {}: {e}", path.display())))
}

/// Non-blank lines with their 1-based numbers.
fn lines(path: &Path) -> CmdResult<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line =
            line.map_err(|e| Failure::format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn bad_line(path: &Path, line: usize, msg: impl std::fmt::Display) -> Failure {
    Failure::format(format!("{}:{line}: {msg}", path.display()))
}

pub fn manifest(path: &Path) -> CmdResult<Vec<ManifestDoc>> {
    Ok(read_manifest(open(path)?)?)
}

pub fn manifest_by_id(docs: &[ManifestDoc]) -> HashMap<&str, &InterleavedSequence> {
    docs.iter()
        .map(|d| (d.sequence.doc_id(), &d.sequence))
        .collect()
}

pub fn find_doc<'a>(
    by_id: &HashMap<&str, &'a InterleavedSequence>,
    id: &str,
) -> CmdResult<&'a InterleavedSequence> {
    by_id
        .get(id)
        .copied()
        .ok_or_else(|| gakit::Error::UnknownDocId(id.to_string()).into())
}

pub fn decode_vector(b64: &str) -> Result<Vec<f64>, String> {
    let v = decode_f32_base64(b64)?;
    if v.is_empty() {
        return Err("empty vector".into());
    }
    Ok(v)
}

#[derive(Deserialize)]
struct VectorRecord {
    doc_id: String,
    vector: String,
    #[serde(default)]
    meta: String,
}

/// `{"doc_id", "vector": <b64 f32>, "meta"?}` per line.
pub fn vectors(path: &Path) -> CmdResult<Vec<(String, Vec<f64>, String)>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let r: VectorRecord = serde_json::from_str(&line).map_err(|e| bad_line(path, n, e))?;
            let v = decode_vector(&r.vector).map_err(|e| bad_line(path, n, e))?;
            Ok((r.doc_id, v, r.meta))
        })
        .collect()
}

#[derive(Deserialize)]
struct HiddenRecord {
    doc_id: String,
    #[serde(default)]
    cut: Option<usize>,
    hidden: String,
}

pub struct HiddenState {
    pub doc_id: String,
    pub cut: Option<usize>,
    pub hidden: Vec<f64>,
}

/// `{"doc_id", "cut"?, "hidden": <b64 f32>}` per line.
pub fn hidden(path: &Path) -> CmdResult<Vec<HiddenState>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let r: HiddenRecord = serde_json::from_str(&line).map_err(|e| bad_line(path, n, e))?;
            let hidden = decode_f32_base64(&r.hidden).map_err(|e| bad_line(path, n, e))?;
            Ok(HiddenState {
                doc_id: r.doc_id,
                cut: r.cut,
                hidden,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct CaseRecord {
    gold_doc_ids: Vec<String>,
    #[serde(default)]
    vector: Option<String>,
    #[serde(default)]
    slices: Option<serde_json::Value>,
}

/// Cases carry `gold_doc_ids` and either a `vector` or manifest-style
/// `doc_id` + `slices`. `shape` narrows sequence queries.
pub fn cases(path: &Path, shape: Option<&QueryShape>) -> CmdResult<Vec<EvalCase>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let r: CaseRecord = serde_json::from_str(&line).map_err(|e| bad_line(path, n, e))?;
            let query = match (&r.vector, &r.slices) {
                (Some(b64), None) => {
                    let v = decode_vector(b64).map_err(|e| bad_line(path, n, e))?;
                    Query::Vector(RepresentationVector::new(format!("case{n}"), 1, &v)?)
                }
                (None, Some(_)) => {
                    let seq = parse_line(&line, n)
                        .map_err(|e| bad_line(path, n, e))?
                        .sequence;
                    Query::Sequence(match shape {
                        Some(s) => s.select(&seq)?,
                        None => seq,
                    })
                }
                _ => return Err(bad_line(path, n, "expected exactly one of vector or slices")),
            };
            Ok(EvalCase {
                query,
                gold_doc_ids: r.gold_doc_ids,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct WinoRecord {
    s: Vec<Vec<f64>>,
}

/// `{"s": [[s00, s01], [s10, s11]]}` per line.
pub fn winoground(path: &Path) -> CmdResult<Vec<gakit::WinogroundExample>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let r: WinoRecord = serde_json::from_str(&line).map_err(|e| bad_line(path, n, e))?;
            gakit::WinogroundExample::from_rows(&r.s).map_err(|e| bad_line(path, n, e))
        })
        .collect()
}
