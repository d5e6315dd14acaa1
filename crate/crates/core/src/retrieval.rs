//! Exact cosine top-k retrieval over representation vectors, and the
//! evaluation metrics run on top of it (Recall@k, Winoground text/image/group).

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::gak::gak_forward;
use crate::model::{
    sequence_representation, InterleavedSequence, KernelConfig, Modality, PoolingPolicy,
    PrefixView, RepresentationVector, SliceEmbedding,
};
use crate::vecmath::{all_finite, normalized};

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub doc_id: String,
    /// Unit-norm vector, stored at the on-disk precision.
    pub rep: Vec<f32>,
    pub meta: String,
}

/// An immutable set of entries searched exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
    created_at: u64,
    config_fingerprint: u64,
}

impl RetrievalIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Seconds since the Unix epoch at build time.
    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn config_fingerprint(&self) -> u64 {
        self.config_fingerprint
    }

    pub fn with_created_at(mut self, created_at: u64) -> Self {
        self.created_at = created_at;
        self
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.entries.iter().any(|e| e.doc_id == doc_id)
    }

    pub(crate) fn from_parts(
        dim: usize,
        entries: Vec<IndexEntry>,
        created_at: u64,
        config_fingerprint: u64,
    ) -> Self {
        Self {
            dim,
            entries,
            created_at,
            config_fingerprint,
        }
    }
}

/// A document handed to [`build_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndexInput {
    pub doc_id: String,
    pub rep: Vec<f64>,
    pub meta: String,
}

impl IndexInput {
    pub fn new(doc_id: impl Into<String>, rep: Vec<f64>, meta: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            rep,
            meta: meta.into(),
        }
    }
}

/// Normalizes every vector and fingerprints the config the vectors came from.
pub fn build_index(inputs: Vec<IndexInput>, cfg: &KernelConfig) -> Result<RetrievalIndex> {
    let dim = inputs.first().ok_or(Error::EmptyIndex)?.rep.len();
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut seen = HashSet::with_capacity(inputs.len());
    let mut entries = Vec::with_capacity(inputs.len());
    for input in inputs {
        if input.rep.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: input.rep.len(),
            });
        }
        if !seen.insert(input.doc_id.clone()) {
            return Err(Error::DuplicateDocId(input.doc_id));
        }
        if !all_finite(&input.rep) {
            return Err(Error::NonFinite);
        }
        let unit = normalized(&input.rep).ok_or(Error::ZeroVector)?;
        entries.push(IndexEntry {
            doc_id: input.doc_id,
            rep: unit.iter().map(|&x| x as f32).collect(),
            meta: input.meta,
        });
    }
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(RetrievalIndex {
        dim,
        entries,
        created_at,
        config_fingerprint: cfg.fingerprint(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

fn rank_order(a: &Hit, b: &Hit) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Every entry scored against `q`, best first, ties by ascending doc id.
pub fn rank_all(index: &RetrievalIndex, q: &[f64]) -> Result<Vec<Hit>> {
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    if q.len() != index.dim {
        return Err(Error::DimensionMismatch {
            expected: index.dim,
            found: q.len(),
        });
    }
    let q = normalized(q).ok_or(Error::ZeroVector)?;
    let mut hits: Vec<Hit> = index
        .entries
        .iter()
        .map(|e| {
            let dot: f64 = e.rep.iter().zip(&q).map(|(&a, b)| a as f64 * b).sum();
            Hit {
                doc_id: e.doc_id.clone(),
                score: dot.clamp(-1.0, 1.0),
            }
        })
        .collect();
    hits.sort_by(rank_order);
    Ok(hits)
}

/// The `k` best entries by cosine; fewer when the index is smaller than `k`.
pub fn query_topk(index: &RetrievalIndex, q: &RepresentationVector, k: usize) -> Result<Vec<Hit>> {
    query_topk_vector(index, q.values(), k)
}

pub fn query_topk_vector(index: &RetrievalIndex, q: &[f64], k: usize) -> Result<Vec<Hit>> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut hits = rank_all(index, q)?;
    hits.truncate(k);
    Ok(hits)
}

/// Slow path: ranks whole sequences by alignment kernel instead of by
/// pooled vectors.
pub fn rank_by_gak(
    query: &[SliceEmbedding],
    corpus: &[InterleavedSequence],
    cfg: &KernelConfig,
    k: usize,
) -> Result<Vec<Hit>> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if corpus.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut hits = corpus
        .iter()
        .map(|doc| {
            Ok(Hit {
                doc_id: doc.doc_id().to_string(),
                score: gak_forward(query, doc.slices(), cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    hits.sort_by(rank_order);
    hits.truncate(k);
    Ok(hits)
}

/// What an evaluation query is made of.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Vector(RepresentationVector),
    Sequence(InterleavedSequence),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub query: Query,
    pub gold_doc_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ks: Vec<usize>,
    /// Recall for each entry of `ks`.
    pub recall: Vec<f64>,
    /// 1-based rank of the best-ranked gold document per case.
    pub ranks: Vec<usize>,
}

/// Fraction of cases with at least one gold id among the top `k`, for each `k`.
///
/// Sequence queries are reduced to one vector with `policy`.
pub fn recall_at_k(
    cases: &[EvalCase],
    index: &RetrievalIndex,
    ks: &[usize],
    policy: PoolingPolicy,
) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::EmptyCaseList);
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidK);
    }
    let mut ranks = Vec::with_capacity(cases.len());
    for case in cases {
        if case.gold_doc_ids.is_empty() {
            return Err(Error::MalformedExample("case without gold ids".into()));
        }
        if let Some(missing) = case.gold_doc_ids.iter().find(|g| !index.contains(g)) {
            return Err(Error::MissingGoldId(missing.clone()));
        }
        let owned;
        let q: &[f64] = match &case.query {
            Query::Vector(v) => v.values(),
            Query::Sequence(s) => {
                owned = sequence_representation(s.doc_id(), s.slices(), policy)?;
                owned.values()
            }
        };
        let hits = rank_all(index, q)?;
        let gold: HashSet<&str> = case.gold_doc_ids.iter().map(String::as_str).collect();
        let rank = hits
            .iter()
            .position(|h| gold.contains(h.doc_id.as_str()))
            .expect("gold ids are present in the index")
            + 1;
        ranks.push(rank);
    }
    let recall = ks
        .iter()
        .map(|&k| ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
        .collect();
    Ok(EvalReport {
        ks: ks.to_vec(),
        recall,
        ranks,
    })
}

/// Which slices of an interleaved document form a query, e.g. "5c" (five
/// captions) or "5c+4i" (five captions and four images).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryShape {
    pub captions: usize,
    pub images: usize,
}

impl QueryShape {
    /// Parses `"<n>c"`, `"<n>i"` or `"<n>c+<m>i"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut shape = QueryShape {
            captions: 0,
            images: 0,
        };
        for part in s.split('+') {
            let part = part.trim();
            let bad = || Error::ShapeMismatch(format!("bad query shape {s:?}"));
            let (count, kind) = part.split_at(part.len().checked_sub(1).ok_or_else(bad)?);
            let count: usize = count.parse().map_err(|_| bad())?;
            match kind {
                "c" => shape.captions += count,
                "i" => shape.images += count,
                _ => return Err(bad()),
            }
        }
        Ok(shape)
    }

    /// Keeps the first `captions` text slices and the first `images` image
    /// slices, in document order.
    pub fn select(&self, seq: &InterleavedSequence) -> Result<InterleavedSequence> {
        let (mut c, mut i) = (0, 0);
        let mut picked = Vec::new();
        for s in seq.slices() {
            if c == self.captions && i == self.images {
                break;
            }
            match s.modality() {
                Modality::Text if c < self.captions => {
                    c += 1;
                    picked.push(s.clone());
                }
                Modality::Image if i < self.images => {
                    i += 1;
                    picked.push(s.clone());
                }
                _ => {}
            }
        }
        if c < self.captions || i < self.images {
            return Err(Error::ShapeMismatch(format!(
                "{} has {c} captions and {i} images, fewer than requested",
                seq.doc_id()
            )));
        }
        InterleavedSequence::new(seq.doc_id(), picked)
    }

    /// The shortest prefix view holding the requested slices.
    pub fn prefix(&self, seq: &InterleavedSequence) -> Result<PrefixView> {
        let (mut c, mut i) = (0, 0);
        for (pos, s) in seq.slices().iter().enumerate() {
            match s.modality() {
                Modality::Text => c += 1,
                Modality::Image => i += 1,
            }
            if c >= self.captions && i >= self.images {
                let cut = pos + 1;
                return Ok(crate::model::make_prefix_views(seq, &[cut])?.remove(0));
            }
        }
        Err(Error::ShapeMismatch(format!(
            "{} is too short for the requested query shape",
            seq.doc_id()
        )))
    }
}

/// A 2x2 similarity table: `s[c][i]` = similarity of caption `c` to image `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinogroundExample {
    pub s: [[f64; 2]; 2],
}

impl WinogroundExample {
    pub fn new(s: [[f64; 2]; 2]) -> Result<Self> {
        if s.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::MalformedExample("non-finite similarity".into()));
        }
        Ok(Self { s })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(Error::MalformedExample("expected a 2x2 matrix".into()));
        }
        Self::new([[rows[0][0], rows[0][1]], [rows[1][0], rows[1][1]]])
    }

    pub fn text_correct(&self) -> bool {
        let s = &self.s;
        s[0][0] > s[1][0] && s[1][1] > s[0][1]
    }

    pub fn image_correct(&self) -> bool {
        let s = &self.s;
        s[0][0] > s[0][1] && s[1][1] > s[1][0]
    }

    pub fn group_correct(&self) -> bool {
        self.text_correct() && self.image_correct()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinogroundScores {
    pub text: f64,
    pub image: f64,
    pub group: f64,
}

/// Strict inequalities throughout; ties count as failures.
pub fn winoground_scores(examples: &[WinogroundExample]) -> Result<WinogroundScores> {
    if examples.is_empty() {
        return Err(Error::EmptyCaseList);
    }
    let n = examples.len() as f64;
    let frac = |f: fn(&WinogroundExample) -> bool| examples.iter().filter(|e| f(e)).count() as f64 / n;
    Ok(WinogroundScores {
        text: frac(WinogroundExample::text_correct),
        image: frac(WinogroundExample::image_correct),
        group: frac(WinogroundExample::group_correct),
    })
}
