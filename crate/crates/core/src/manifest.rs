//! JSON-lines manifest of interleaved documents.
//!
//! One object per line:
//!
//! ```json
//! {"doc_id": "d1", "slices": [
//!     {"modality": "image", "form": "composite", "specialist": "<b64>", "shared": "<b64>"},
//!     {"modality": "text", "form": "atomic", "whole": "<b64>"}
//! ]}
//! ```
//!
//! Vectors are base64 of little-endian `f32` arrays. An optional `meta`
//! string is carried into indexes. Blank lines are skipped.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    InterleavedSequence, Modality, SliceEmbedding, SliceForm, SliceShape, NORM_TOLERANCE,
};
use crate::vecmath::{all_finite, norm, DEGENERATE_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FormTag {
    Composite,
    Atomic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SliceRecord {
    modality: Modality,
    form: FormTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    specialist: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shared: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    whole: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    doc_id: String,
    slices: Vec<SliceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<String>,
}

/// A parsed manifest document.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestDoc {
    pub sequence: InterleavedSequence,
    pub meta: String,
}

/// Encodes values as base64 little-endian `f32`.
pub fn encode_f32_base64(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f32_base64(s: &str) -> std::result::Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(s.trim()).map_err(|e| format!("base64: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!("{} bytes is not a whole number of f32", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect())
}

/// Renormalizes vectors that drift beyond tolerance; rejects degenerate ones.
fn load_vector(field: &str, raw: Option<&String>) -> std::result::Result<Vec<f64>, String> {
    let raw = raw.ok_or_else(|| format!("missing field {field:?}"))?;
    let v = decode_f32_base64(raw)?;
    if v.is_empty() {
        return Err(format!("{field} is empty"));
    }
    if !all_finite(&v) {
        return Err(format!("{field} contains a non-finite value"));
    }
    let n = norm(&v);
    if n < DEGENERATE_NORM {
        return Err(format!("{field} has degenerate norm {n}"));
    }
    if (n - 1.0).abs() > NORM_TOLERANCE {
        warn!("{field} has norm {n}; renormalizing");
    }
    Ok(v.iter().map(|x| x / n).collect())
}

fn to_slice(rec: &SliceRecord) -> std::result::Result<SliceEmbedding, String> {
    let form = match rec.form {
        FormTag::Atomic => SliceForm::Atomic {
            whole: load_vector("whole", rec.whole.as_ref())?,
        },
        FormTag::Composite => SliceForm::Composite {
            specialist: load_vector("specialist", rec.specialist.as_ref())?,
            shared: load_vector("shared", rec.shared.as_ref())?,
        },
    };
    Ok(SliceEmbedding::from_raw(rec.modality, form))
}

/// Parses one manifest line.
pub fn parse_line(line: &str, line_no: usize) -> Result<ManifestDoc> {
    let err = |message: String| Error::Manifest {
        line: line_no,
        message,
    };
    let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    let slices = rec
        .slices
        .iter()
        .map(to_slice)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(err)?;
    let sequence = InterleavedSequence::new(rec.doc_id, slices).map_err(|e| err(e.to_string()))?;
    Ok(ManifestDoc {
        sequence,
        meta: rec.meta.unwrap_or_default(),
    })
}

/// Reads a whole manifest, checking id uniqueness and a single slice shape.
pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestDoc>> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    let mut shape: Option<SliceShape> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Manifest {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_line(&line, line_no)?;
        if !ids.insert(doc.sequence.doc_id().to_string()) {
            return Err(Error::DuplicateDocId(doc.sequence.doc_id().to_string()));
        }
        let s = doc.sequence.shape();
        match shape {
            None => shape = Some(s),
            Some(expected) if expected != s => {
                return Err(Error::Manifest {
                    line: line_no,
                    message: format!("slice shape {s} differs from corpus shape {expected}"),
                })
            }
            _ => {}
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn to_record(seq: &InterleavedSequence, meta: &str) -> Record {
    let slices = seq
        .slices()
        .iter()
        .map(|s| match s.form() {
            SliceForm::Atomic { whole } => SliceRecord {
                modality: s.modality(),
                form: FormTag::Atomic,
                specialist: None,
                shared: None,
                whole: Some(encode_f32_base64(whole)),
            },
            SliceForm::Composite { specialist, shared } => SliceRecord {
                modality: s.modality(),
                form: FormTag::Composite,
                specialist: Some(encode_f32_base64(specialist)),
                shared: Some(encode_f32_base64(shared)),
                whole: None,
            },
        })
        .collect();
    Record {
        doc_id: seq.doc_id().to_string(),
        slices,
        meta: (!meta.is_empty()).then(|| meta.to_string()),
    }
}

/// Writes one line per document.
pub fn write_manifest<W: Write>(docs: &[ManifestDoc], mut out: W) -> std::io::Result<()> {
    for d in docs {
        let line = serde_json::to_string(&to_record(&d.sequence, &d.meta))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}
