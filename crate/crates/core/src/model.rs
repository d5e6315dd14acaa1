//! Domain types shared by every other module: slice embeddings, interleaved
//! sequences, prefix views, pooled representations and kernel configuration.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vecmath::{all_finite, norm, normalized};

/// Tolerance on unit norms.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Image => f.write_str("image"),
            Modality::Text => f.write_str("text"),
        }
    }
}

/// Vector payload of a slice.
///
/// `Composite` slices carry a modality-specialist sub-embedding and a shared
/// cross-modal sub-embedding, each unit-normalized on its own. `Atomic`
/// slices carry one unit vector.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceForm {
    Atomic { whole: Vec<f64> },
    Composite { specialist: Vec<f64>, shared: Vec<f64> },
}

/// Dimensions of a slice, used to check that a corpus is homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceShape {
    Atomic(usize),
    Composite(usize, usize),
}

impl fmt::Display for SliceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceShape::Atomic(d) => write!(f, "atomic({d})"),
            SliceShape::Composite(d1, d2) => write!(f, "composite({d1}+{d2})"),
        }
    }
}

/// One image or sentence embedded as a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceEmbedding {
    modality: Modality,
    form: SliceForm,
}

impl SliceEmbedding {
    /// Builds an atomic slice, normalizing `whole` to unit length.
    pub fn atomic(modality: Modality, whole: &[f64]) -> Result<Self> {
        let whole = unit(whole)?;
        Ok(Self {
            modality,
            form: SliceForm::Atomic { whole },
        })
    }

    /// Builds a composite slice, normalizing both halves independently.
    pub fn composite(modality: Modality, specialist: &[f64], shared: &[f64]) -> Result<Self> {
        if specialist.is_empty() || shared.is_empty() {
            return Err(Error::ShapeMismatch(
                "composite sub-embeddings must be non-empty".into(),
            ));
        }
        Ok(Self {
            modality,
            form: SliceForm::Composite {
                specialist: unit(specialist)?,
                shared: unit(shared)?,
            },
        })
    }

    /// Wraps vectors as-is. Used by loaders and tests that need to observe
    /// invalid input through [`validate_slice`].
    pub fn from_raw(modality: Modality, form: SliceForm) -> Self {
        Self { modality, form }
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn form(&self) -> &SliceForm {
        &self.form
    }

    pub fn shape(&self) -> SliceShape {
        match &self.form {
            SliceForm::Atomic { whole } => SliceShape::Atomic(whole.len()),
            SliceForm::Composite { specialist, shared } => {
                SliceShape::Composite(specialist.len(), shared.len())
            }
        }
    }

    /// The vector this slice contributes to a cross-modal space: the shared
    /// sub-embedding for composite slices, the whole vector otherwise.
    pub fn cross_modal_vector(&self) -> &[f64] {
        match &self.form {
            SliceForm::Atomic { whole } => whole,
            SliceForm::Composite { shared, .. } => shared,
        }
    }
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::ShapeMismatch("empty vector".into()));
    }
    if !all_finite(v) {
        return Err(Error::NonFinite);
    }
    normalized(v).ok_or(Error::ZeroVector)
}

/// Which part of a slice a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlicePart {
    Whole,
    Specialist,
    Shared,
}

impl fmt::Display for SlicePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlicePart::Whole => "whole",
            SlicePart::Specialist => "specialist",
            SlicePart::Shared => "shared",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NormDeviation { part: SlicePart, deviation: f64 },
    NonFinite { part: SlicePart, index: usize },
    ShapeMismatch { expected: SliceShape, found: SliceShape },
    EmptyVector { part: SlicePart },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NormDeviation { part, deviation } => {
                write!(f, "norm deviation {deviation} ({part})")
            }
            Violation::NonFinite { part, index } => {
                write!(f, "non-finite value at index {index} ({part})")
            }
            Violation::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Violation::EmptyVector { part } => write!(f, "empty vector ({part})"),
        }
    }
}

/// All invariant violations found on one slice. Empty iff the slice is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks unit norms and finiteness of a slice.
pub fn validate_slice(s: &SliceEmbedding) -> ValidationReport {
    validate_slice_with_shape(s, None)
}

/// As [`validate_slice`], additionally checking the slice against the shape
/// expected for its corpus.
pub fn validate_slice_with_shape(
    s: &SliceEmbedding,
    expected: Option<SliceShape>,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut check = |part: SlicePart, v: &[f64]| {
        if v.is_empty() {
            violations.push(Violation::EmptyVector { part });
            return;
        }
        let mut finite = true;
        for (index, x) in v.iter().enumerate() {
            if !x.is_finite() {
                violations.push(Violation::NonFinite { part, index });
                finite = false;
            }
        }
        if finite {
            let deviation = (norm(v) - 1.0).abs();
            if deviation > NORM_TOLERANCE {
                violations.push(Violation::NormDeviation { part, deviation });
            }
        }
    };
    match &s.form {
        SliceForm::Atomic { whole } => check(SlicePart::Whole, whole),
        SliceForm::Composite { specialist, shared } => {
            check(SlicePart::Specialist, specialist);
            check(SlicePart::Shared, shared);
        }
    }
    if let Some(expected) = expected {
        let found = s.shape();
        if found != expected {
            violations.push(Violation::ShapeMismatch { expected, found });
        }
    }
    ValidationReport { violations }
}

/// An ordered image/text document.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedSequence {
    doc_id: String,
    slices: Vec<SliceEmbedding>,
}

impl InterleavedSequence {
    /// Requires at least one slice and a single embedding shape across slices.
    pub fn new(doc_id: impl Into<String>, slices: Vec<SliceEmbedding>) -> Result<Self> {
        let first = slices.first().ok_or(Error::EmptySequence)?.shape();
        if let Some(bad) = slices.iter().find(|s| s.shape() != first) {
            return Err(Error::ShapeMismatch(format!(
                "sequence mixes {first} and {}",
                bad.shape()
            )));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            slices,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn slices(&self) -> &[SliceEmbedding] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn shape(&self) -> SliceShape {
        self.slices[0].shape()
    }
}

/// The first `cut` slices of a source document.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixView {
    source_doc_id: String,
    cut: usize,
    slices: Vec<SliceEmbedding>,
}

impl PrefixView {
    pub fn source_doc_id(&self) -> &str {
        &self.source_doc_id
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn slices(&self) -> &[SliceEmbedding] {
        &self.slices
    }

    /// A view covering the entire sequence.
    pub fn full(seq: &InterleavedSequence) -> Self {
        Self {
            source_doc_id: seq.doc_id.clone(),
            cut: seq.len(),
            slices: seq.slices.clone(),
        }
    }
}

/// One prefix view per cut, in cut order.
pub fn make_prefix_views(seq: &InterleavedSequence, cuts: &[usize]) -> Result<Vec<PrefixView>> {
    let n = seq.len();
    let mut seen = HashSet::with_capacity(cuts.len());
    for &cut in cuts {
        if cut == 0 || cut > n {
            return Err(Error::OutOfRangeCut { cut, len: n });
        }
        if !seen.insert(cut) {
            return Err(Error::DuplicateCut(cut));
        }
    }
    Ok(cuts
        .iter()
        .map(|&cut| PrefixView {
            source_doc_id: seq.doc_id.clone(),
            cut,
            slices: seq.slices[..cut].to_vec(),
        })
        .collect())
}

/// Draws `count` distinct cuts uniformly from `1..=n`, sorted ascending.
pub fn sample_cuts(n: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > n {
        return Err(Error::OutOfRangeCut { cut: count, len: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<usize> = sample(&mut rng, n, count).into_iter().map(|i| i + 1).collect();
    cuts.sort_unstable();
    Ok(cuts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolingPolicy {
    LastToken,
    AveragePool,
}

/// Reduces a token stream to one unit vector.
pub fn pool_representation(tokens: &[Vec<f64>], policy: PoolingPolicy) -> Result<Vec<f64>> {
    let last = tokens.last().ok_or(Error::EmptyTokenList)?;
    let dim = tokens[0].len();
    if let Some(bad) = tokens.iter().find(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let pooled = match policy {
        PoolingPolicy::LastToken => last.clone(),
        PoolingPolicy::AveragePool => {
            let mut acc = vec![0.0; dim];
            for t in tokens {
                for (a, x) in acc.iter_mut().zip(t) {
                    *a += x;
                }
            }
            let k = tokens.len() as f64;
            acc.iter_mut().for_each(|a| *a /= k);
            acc
        }
    };
    unit(&pooled)
}

/// A unit-norm vector standing for a whole (prefix of a) document.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationVector {
    source_doc_id: String,
    cut: usize,
    values: Vec<f64>,
}

impl RepresentationVector {
    /// Normalizes `values`; fails on empty, non-finite or zero vectors.
    pub fn new(source_doc_id: impl Into<String>, cut: usize, values: &[f64]) -> Result<Self> {
        Ok(Self {
            source_doc_id: source_doc_id.into(),
            cut,
            values: unit(values)?,
        })
    }

    pub fn source_doc_id(&self) -> &str {
        &self.source_doc_id
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Pools the cross-modal vectors of a sequence's slices into one representation.
pub fn sequence_representation(
    doc_id: &str,
    slices: &[SliceEmbedding],
    policy: PoolingPolicy,
) -> Result<RepresentationVector> {
    let tokens: Vec<Vec<f64>> = slices.iter().map(|s| s.cross_modal_vector().to_vec()).collect();
    let values = pool_representation(&tokens, policy)?;
    Ok(RepresentationVector {
        source_doc_id: doc_id.to_string(),
        cut: slices.len(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Specialist sub-embeddings within a modality, shared ones across.
    Triple,
    /// Always the shared sub-embedding (the "no triple kernel" ablation).
    SharedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    Cosine,
    ClosedForm,
}

/// Default cap on `n * m` alignment cells.
pub const DEFAULT_CELL_CAP: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub delta: f64,
    pub normalize_gak: bool,
    pub label_single_slice_mode: LabelMode,
    pub kernel_mode: KernelMode,
    pub cell_cap: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            normalize_gak: false,
            label_single_slice_mode: LabelMode::Cosine,
            kernel_mode: KernelMode::Triple,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::NonPositiveDelta(self.delta));
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of every field.
    pub fn fingerprint(&self) -> u64 {
        let canonical = format!(
            "delta={:016x};normalize_gak={};label={:?};mode={:?};cap={}",
            self.delta.to_bits(),
            self.normalize_gak,
            self.label_single_slice_mode,
            self.kernel_mode,
            self.cell_cap
        );
        let digest = Sha256::digest(canonical.as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }
}
