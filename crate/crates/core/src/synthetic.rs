//! Seeded synthetic corpora: random slices for property checks, and a
//! clustered document task for exercising the projector trainer end to end.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{InterleavedSequence, Modality, PrefixView, SliceEmbedding};

pub fn gaussian_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// A composite slice with Gaussian-random (then normalized) halves.
pub fn random_composite<R: Rng>(
    rng: &mut R,
    modality: Modality,
    specialist_dim: usize,
    shared_dim: usize,
) -> SliceEmbedding {
    loop {
        let spec = gaussian_vector(rng, specialist_dim);
        let shared = gaussian_vector(rng, shared_dim);
        if let Ok(s) = SliceEmbedding::composite(modality, &spec, &shared) {
            return s;
        }
    }
}

pub fn random_modality<R: Rng>(rng: &mut R) -> Modality {
    if rng.random_bool(0.5) {
        Modality::Image
    } else {
        Modality::Text
    }
}

/// A random composite sequence of mixed modalities.
pub fn random_sequence<R: Rng>(
    rng: &mut R,
    doc_id: &str,
    len: usize,
    specialist_dim: usize,
    shared_dim: usize,
) -> InterleavedSequence {
    let slices = (0..len)
        .map(|_| {
            let m = random_modality(rng);
            random_composite(rng, m, specialist_dim, shared_dim)
        })
        .collect();
    InterleavedSequence::new(doc_id, slices).expect("homogeneous non-empty sequence")
}

/// Parameters of the clustered task.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTaskSpec {
    pub docs: usize,
    pub clusters: usize,
    pub slices_per_doc: usize,
    pub specialist_dim: usize,
    pub shared_dim: usize,
    pub hidden_dim: usize,
    /// Per-coordinate noise added to slice centroids, relative to unit centroids.
    pub slice_noise: f64,
    /// Norm of the per-document noise in hidden vectors.
    pub hidden_noise: f64,
    /// Norm of the offset shared by every hidden vector.
    pub hidden_offset: f64,
    pub seed: u64,
}

impl Default for ClusterTaskSpec {
    fn default() -> Self {
        Self {
            docs: 64,
            clusters: 2,
            slices_per_doc: 4,
            specialist_dim: 8,
            shared_dim: 8,
            hidden_dim: 32,
            slice_noise: 0.35,
            hidden_noise: 1.5,
            hidden_offset: 4.0,
            seed: 42,
        }
    }
}

/// Documents drawn around per-cluster centroids, with hidden vectors that
/// carry the cluster signal under a common offset and per-document noise.
#[derive(Debug, Clone)]
pub struct ClusterTask {
    pub docs: Vec<InterleavedSequence>,
    pub cluster_of: Vec<usize>,
    pub hidden: Vec<Vec<f64>>,
}

impl ClusterTask {
    pub fn generate(spec: &ClusterTaskSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let unit = |rng: &mut ChaCha8Rng, d: usize| {
            let v = gaussian_vector(rng, d);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        // [cluster] -> (image specialist, text specialist, shared, hidden signal)
        let centroids: Vec<_> = (0..spec.clusters)
            .map(|_| {
                (
                    unit(&mut rng, spec.specialist_dim),
                    unit(&mut rng, spec.specialist_dim),
                    unit(&mut rng, spec.shared_dim),
                    unit(&mut rng, spec.hidden_dim),
                )
            })
            .collect();
        let offset: Vec<f64> = unit(&mut rng, spec.hidden_dim)
            .into_iter()
            .map(|x| x * spec.hidden_offset)
            .collect();

        let jitter = |rng: &mut ChaCha8Rng, base: &[f64], scale: f64| -> Vec<f64> {
            let s = scale / (base.len() as f64).sqrt();
            base.iter()
                .map(|b| {
                    let z: f64 = StandardNormal.sample(rng);
                    b + s * z
                })
                .collect()
        };

        let mut docs = Vec::with_capacity(spec.docs);
        let mut cluster_of = Vec::with_capacity(spec.docs);
        let mut hidden = Vec::with_capacity(spec.docs);
        for d in 0..spec.docs {
            let c = d % spec.clusters;
            let (img, txt, shared, signal) = &centroids[c];
            let slices = (0..spec.slices_per_doc)
                .map(|k| {
                    let (modality, spec_centroid) = if k % 2 == 0 {
                        (Modality::Image, img)
                    } else {
                        (Modality::Text, txt)
                    };
                    let a = jitter(&mut rng, spec_centroid, spec.slice_noise);
                    let b = jitter(&mut rng, shared, spec.slice_noise);
                    SliceEmbedding::composite(modality, &a, &b).expect("non-degenerate")
                })
                .collect();
            docs.push(
                InterleavedSequence::new(format!("doc{d:03}"), slices).expect("valid sequence"),
            );
            cluster_of.push(c);
            let noise = jitter(&mut rng, &vec![0.0; spec.hidden_dim], spec.hidden_noise);
            hidden.push(
                signal
                    .iter()
                    .zip(&offset)
                    .zip(&noise)
                    .map(|((s, o), n)| s + o + n)
                    .collect(),
            );
        }
        Self {
            docs,
            cluster_of,
            hidden,
        }
    }

    /// One full-length view per document.
    pub fn views(&self) -> Vec<PrefixView> {
        self.docs.iter().map(PrefixView::full).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let spec = ClusterTaskSpec::default();
        let a = ClusterTask::generate(&spec);
        let b = ClusterTask::generate(&spec);
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.hidden, b.hidden);
        assert_eq!(a.docs.len(), 64);
        assert_eq!(a.hidden[0].len(), 32);
        assert_eq!(a.cluster_of.iter().filter(|&&c| c == 1).count(), 32);
    }
}
