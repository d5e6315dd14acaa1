//! Similarity matrices and the mean-squared discrepancy between a
//! representation matrix and a label matrix.
//!
//! The label matrix is built from input sequences (alignment kernel, or
//! cosine for single-slice pairs, with pairs from the same source pinned to
//! 1). The representation matrix holds cosines of projected vectors. The
//! loss is
//!
//! ```text
//! L = (1/n) * sum_ij (mr_ij - ml_ij)^2
//! ```
//!
//! with `1/n`, not `1/n^2`. The diagonal is included; under the same-source
//! override it contributes zero.

use crate::error::{Error, Result};
use crate::gak::{gak_forward, single_slice_gak};
use crate::kernel::slice_cosine;
use crate::model::{KernelConfig, LabelMode, PrefixView, RepresentationVector};
use crate::vecmath::{dot, norm, DEGENERATE_NORM};

/// Symmetry tolerance for [`SimilarityMatrix`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Label,
    Representation,
}

/// Square, symmetric, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
    kind: SimilarityKind,
}

impl SimilarityMatrix {
    /// Checks squareness, finiteness and symmetry.
    pub fn from_entries(n: usize, entries: Vec<f64>, kind: SimilarityKind) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::SizeMismatch(n * n, entries.len()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (entries[i * n + j] - entries[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::MalformedExample(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries, kind })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: SimilarityKind) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::SizeMismatch(n, r.len()));
        }
        Self::from_entries(n, rows.concat(), kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Reorders rows and columns together: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                entries.push(self.get(pi, pj));
            }
        }
        Self {
            n,
            entries,
            kind: self.kind,
        }
    }
}

/// Pairwise similarities of the input views.
///
/// Views of one source document get exactly 1. Two single-slice views use
/// `cfg.label_single_slice_mode`. Everything else uses the normalized GAK
/// whatever `cfg.normalize_gak` says, so labels share the `(0, 1]` scale of
/// the cosines they are compared with.
pub fn label_matrix(views: &[PrefixView], cfg: &KernelConfig) -> Result<SimilarityMatrix> {
    if views.is_empty() {
        return Err(Error::EmptySequence);
    }
    cfg.validate()?;
    let normalized = KernelConfig {
        normalize_gak: true,
        ..*cfg
    };
    let n = views.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let (a, b) = (&views[i], &views[j]);
            let value = if a.source_doc_id() == b.source_doc_id() {
                1.0
            } else if a.slices().len() == 1 && b.slices().len() == 1 {
                let cos = slice_cosine(&a.slices()[0], &b.slices()[0], cfg.kernel_mode)?;
                match cfg.label_single_slice_mode {
                    LabelMode::Cosine => cos,
                    LabelMode::ClosedForm => single_slice_gak(cos, cfg.delta)?,
                }
            } else {
                gak_forward(a.slices(), b.slices(), &normalized)?
            };
            entries[i * n + j] = value;
            entries[j * n + i] = value;
        }
    }
    Ok(SimilarityMatrix {
        n,
        entries,
        kind: SimilarityKind::Label,
    })
}

fn check_vectors<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(Error::EmptySequence)?.as_ref().len();
    let mut norms = Vec::with_capacity(vectors.len());
    for v in vectors {
        let v = v.as_ref();
        if v.len() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                found: v.len(),
            });
        }
        let nv = norm(v);
        if !nv.is_finite() {
            return Err(Error::NonFinite);
        }
        if nv < DEGENERATE_NORM {
            return Err(Error::ZeroVector);
        }
        norms.push(nv);
    }
    Ok(norms)
}

fn cosine_matrix<V: AsRef<[f64]>>(vectors: &[V], norms: &[f64]) -> Vec<f64> {
    let n = vectors.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let c = dot(vectors[i].as_ref(), vectors[j].as_ref()) / (norms[i] * norms[j]);
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    entries
}

/// Pairwise cosines of representation vectors.
pub fn representation_matrix(reps: &[RepresentationVector]) -> Result<SimilarityMatrix> {
    let vectors: Vec<&[f64]> = reps.iter().map(|r| r.values()).collect();
    representation_matrix_from_vectors(&vectors)
}

/// As [`representation_matrix`] for plain vectors of any nonzero norm.
pub fn representation_matrix_from_vectors<V: AsRef<[f64]>>(
    vectors: &[V],
) -> Result<SimilarityMatrix> {
    let norms = check_vectors(vectors)?;
    Ok(SimilarityMatrix {
        n: vectors.len(),
        entries: cosine_matrix(vectors, &norms),
        kind: SimilarityKind::Representation,
    })
}

pub fn mse_loss(mr: &SimilarityMatrix, ml: &SimilarityMatrix) -> Result<f64> {
    if mr.kind != SimilarityKind::Representation {
        return Err(Error::KindMismatch {
            expected: "representation",
        });
    }
    if ml.kind != SimilarityKind::Label {
        return Err(Error::KindMismatch { expected: "label" });
    }
    if mr.n != ml.n {
        return Err(Error::SizeMismatch(mr.n, ml.n));
    }
    let sum: f64 = mr
        .entries
        .iter()
        .zip(&ml.entries)
        .map(|(r, l)| (r - l) * (r - l))
        .sum();
    Ok(sum / mr.n as f64)
}

/// Gradient of the loss with respect to each representation vector.
pub fn loss_gradient(
    reps: &[RepresentationVector],
    ml: &SimilarityMatrix,
) -> Result<Vec<Vec<f64>>> {
    let vectors: Vec<&[f64]> = reps.iter().map(|r| r.values()).collect();
    Ok(loss_and_gradient(&vectors, ml)?.1)
}

/// Loss and its gradient with respect to each (not necessarily unit) vector.
///
/// Uses `d cos(u, v) / du = (v/|v| - cos(u, v) u/|u|) / |u|`. Diagonal cosines
/// are constant and contribute nothing. Every gradient is orthogonal to its
/// vector.
pub fn loss_and_gradient<V: AsRef<[f64]>>(
    vectors: &[V],
    ml: &SimilarityMatrix,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if ml.kind != SimilarityKind::Label {
        return Err(Error::KindMismatch { expected: "label" });
    }
    let n = vectors.len();
    if n != ml.n {
        return Err(Error::SizeMismatch(n, ml.n));
    }
    let norms = check_vectors(vectors)?;
    let cos = cosine_matrix(vectors, &norms);
    let loss = cos
        .iter()
        .zip(&ml.entries)
        .map(|(r, l)| (r - l) * (r - l))
        .sum::<f64>()
        / n as f64;

    let dim = vectors[0].as_ref().len();
    let scale = 2.0 / n as f64;
    let mut grads = vec![vec![0.0; dim]; n];
    for i in 0..n {
        let ui = vectors[i].as_ref();
        let grad = &mut grads[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            let c = cos[i * n + j];
            let w = scale * ((c - ml.get(i, j)) + (cos[j * n + i] - ml.get(j, i)));
            if w == 0.0 {
                continue;
            }
            let uj = vectors[j].as_ref();
            let a = w / (norms[i] * norms[j]);
            let b = w * c / (norms[i] * norms[i]);
            for k in 0..dim {
                grad[k] += a * uj[k] - b * ui[k];
            }
        }
    }
    Ok((loss, grads))
}

/// Removes the component of `grad` along `r`.
pub fn project_to_tangent(grad: &[f64], r: &[f64]) -> Vec<f64> {
    let rr = dot(r, r);
    if rr == 0.0 {
        return grad.to_vec();
    }
    let t = dot(grad, r) / rr;
    grad.iter().zip(r).map(|(g, x)| g - t * x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_prefix_views, InterleavedSequence, Modality, SliceEmbedding};

    fn rep(id: &str, v: &[f64]) -> RepresentationVector {
        RepresentationVector::new(id, 1, v).unwrap()
    }

    fn seq(id: &str, vs: &[&[f64]]) -> InterleavedSequence {
        let slices = vs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let m = if i % 2 == 0 { Modality::Image } else { Modality::Text };
                SliceEmbedding::atomic(m, v).unwrap()
            })
            .collect();
        InterleavedSequence::new(id, slices).unwrap()
    }

    #[test]
    fn hand_computed_loss() {
        let mr = SimilarityMatrix::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            SimilarityKind::Representation,
        )
        .unwrap();
        let ml = SimilarityMatrix::from_rows(
            &[vec![1.0, 0.5], vec![0.5, 1.0]],
            SimilarityKind::Label,
        )
        .unwrap();
        assert_eq!(mse_loss(&mr, &ml).unwrap(), 0.25);
        let ml2 = SimilarityMatrix::from_rows(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            SimilarityKind::Label,
        )
        .unwrap();
        assert_eq!(mse_loss(&mr, &ml2).unwrap(), 4.0 * 0.25);
    }

    #[test]
    fn loss_errors() {
        let a = SimilarityMatrix::from_rows(&[vec![1.0]], SimilarityKind::Representation).unwrap();
        let b = SimilarityMatrix::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            SimilarityKind::Label,
        )
        .unwrap();
        assert!(matches!(mse_loss(&a, &b), Err(Error::SizeMismatch(1, 2))));
        assert!(matches!(mse_loss(&b, &b), Err(Error::KindMismatch { .. })));
        assert!(SimilarityMatrix::from_rows(
            &[vec![1.0, 0.2], vec![0.3, 1.0]],
            SimilarityKind::Label
        )
        .is_err());
    }

    #[test]
    fn representation_examples() {
        let m = representation_matrix(&[rep("a", &[1.0, 0.0]), rep("b", &[0.0, 1.0])]).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        let m = representation_matrix(&[rep("a", &[1.0, 2.0]), rep("b", &[1.0, 2.0])]).unwrap();
        assert!((m.get(0, 1) - 1.0).abs() < 1e-15);
        let m = representation_matrix(&[rep("a", &[1.0, 2.0]), rep("b", &[-1.0, -2.0])]).unwrap();
        assert!((m.get(0, 1) + 1.0).abs() < 1e-15);
        assert_eq!(m.get(0, 0), 1.0);
        assert!(matches!(
            representation_matrix_from_vectors(&[vec![1.0, 0.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            representation_matrix_from_vectors(&[vec![0.0, 0.0]]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn label_same_source_is_one() {
        let s = seq("d", &[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8]]);
        let views = make_prefix_views(&s, &[1, 3]).unwrap();
        let m = label_matrix(&views, &KernelConfig::default()).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn label_singleton_and_cosine_modes() {
        let s = seq("d", &[&[1.0, 0.0]]);
        let views = make_prefix_views(&s, &[1]).unwrap();
        let m = label_matrix(&views, &KernelConfig::default()).unwrap();
        assert_eq!(m.entries(), &[1.0]);

        let a = make_prefix_views(&seq("a", &[&[0.6, 0.8]]), &[1]).unwrap();
        let b = make_prefix_views(&seq("b", &[&[0.6, 0.8]]), &[1]).unwrap();
        let both = [a[0].clone(), b[0].clone()];
        let m = label_matrix(&both, &KernelConfig::default()).unwrap();
        assert!((m.get(0, 1) - 1.0).abs() < 1e-15);

        let c = make_prefix_views(&seq("c", &[&[0.0, 1.0]]), &[1]).unwrap();
        let pair = [a[0].clone(), c[0].clone()];
        let cos_m = label_matrix(&pair, &KernelConfig::default()).unwrap();
        assert!((cos_m.get(0, 1) - 0.8).abs() < 1e-15);
        let closed = KernelConfig {
            label_single_slice_mode: LabelMode::ClosedForm,
            ..KernelConfig::default()
        };
        let cf = label_matrix(&pair, &closed).unwrap();
        assert!((cf.get(0, 1) - single_slice_gak(0.8, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn label_uses_gak_for_longer_views() {
        let a = PrefixView::full(&seq("a", &[&[1.0, 0.0], &[0.0, 1.0]]));
        let b = PrefixView::full(&seq("b", &[&[0.6, 0.8]]));
        let m = label_matrix(&[a.clone(), b.clone()], &KernelConfig::default()).unwrap();
        let cfg = KernelConfig {
            normalize_gak: true,
            ..KernelConfig::default()
        };
        let k = gak_forward(a.slices(), b.slices(), &cfg).unwrap();
        assert_eq!(m.get(0, 1), k);
        assert!(k > 0.0 && k <= 1.0);
    }

    #[test]
    fn label_permutation_equivariance() {
        let docs = [
            seq("a", &[&[1.0, 0.0], &[0.0, 1.0]]),
            seq("b", &[&[0.6, 0.8], &[0.8, 0.6]]),
            seq("c", &[&[0.0, 1.0]]),
            seq("d", &[&[-0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]]),
        ];
        let views: Vec<_> = docs.iter().map(PrefixView::full).collect();
        let cfg = KernelConfig::default();
        let m = label_matrix(&views, &cfg).unwrap();
        let perm = [2, 0, 3, 1];
        let permuted: Vec<_> = perm.iter().map(|&i| views[i].clone()).collect();
        let mp = label_matrix(&permuted, &cfg).unwrap();
        let expected = m.permuted(&perm);
        for (x, y) in mp.entries().iter().zip(expected.entries()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_at_target() {
        let reps = vec![rep("a", &[1.0, 0.2, 0.0]), rep("b", &[0.1, 1.0, 0.3])];
        let mr = representation_matrix(&reps).unwrap();
        let ml = SimilarityMatrix::from_entries(2, mr.entries().to_vec(), SimilarityKind::Label)
            .unwrap();
        let g = loss_gradient(&reps, &ml).unwrap();
        assert!(g.iter().flatten().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn gradient_is_tangent() {
        let reps = vec![
            rep("a", &[1.0, 0.2, 0.0]),
            rep("b", &[0.1, 1.0, 0.3]),
            rep("c", &[-0.5, 0.4, 0.9]),
        ];
        let ml = SimilarityMatrix::from_rows(
            &[
                vec![1.0, 0.3, 0.1],
                vec![0.3, 1.0, 0.7],
                vec![0.1, 0.7, 1.0],
            ],
            SimilarityKind::Label,
        )
        .unwrap();
        let g = loss_gradient(&reps, &ml).unwrap();
        for (gi, r) in g.iter().zip(&reps) {
            assert!(dot(gi, r.values()).abs() <= 1e-12);
            let t = project_to_tangent(gi, r.values());
            assert!(dot(&t, r.values()).abs() <= 1e-9);
        }
    }
}
