//! Full-batch training of a linear retrieval projector against a label matrix.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{label_matrix, loss_and_gradient, SimilarityMatrix};
use crate::model::{KernelConfig, PrefixView};

/// Step halvings tried before a step is given up as non-improving.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Weight of this loss next to a generative loss. Not used here; kept so
    /// configurations can carry it alongside.
    pub alpha: f64,
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidTrainerConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidTrainerConfig("steps must be at least 1".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidTrainerConfig(
                "projector dimensions must be non-zero".into(),
            ));
        }
        Ok(())
    }
}

/// Linear map `output_dim x input_dim`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projector {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weights: Vec<f64>,
}

impl Projector {
    /// Gaussian init with variance `1 / input_dim`.
    pub fn random(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (input_dim as f64).sqrt()).expect("valid std");
        let weights = (0..input_dim * output_dim)
            .map(|_| normal.sample(&mut rng))
            .collect();
        Self {
            input_dim,
            output_dim,
            weights,
        }
    }

    /// `P h`, not normalized.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        debug_assert_eq!(h.len(), self.input_dim);
        self.weights
            .chunks_exact(self.input_dim)
            .map(|row| row.iter().zip(h).map(|(w, x)| w * x).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub projector: Projector,
    /// Loss before the first step, then after every accepted step.
    pub trace: Vec<f64>,
    pub labels: SimilarityMatrix,
}

fn objective(
    p: &Projector,
    hidden: &[Vec<f64>],
    labels: &SimilarityMatrix,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let projected: Vec<Vec<f64>> = hidden.iter().map(|h| p.apply(h)).collect();
    loss_and_gradient(&projected, labels)
}

/// Trains `P` so that cosines of `P h_i` match the label matrix of `views`.
///
/// Each step starts from `tcfg.learning_rate` and halves it until the loss
/// does not increase, up to [`MAX_HALVINGS`] times; if no halving helps the
/// run stops early. The returned trace is therefore non-increasing.
pub fn train_projector(
    hidden: &[Vec<f64>],
    views: &[PrefixView],
    cfg: &KernelConfig,
    tcfg: &TrainerConfig,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    if hidden.len() != views.len() {
        return Err(Error::SizeMismatch(hidden.len(), views.len()));
    }
    if let Some(h) = hidden.iter().find(|h| h.len() != tcfg.input_dim) {
        return Err(Error::DimensionMismatch {
            expected: tcfg.input_dim,
            found: h.len(),
        });
    }
    let labels = label_matrix(views, cfg)?;
    let projector = Projector::random(tcfg.input_dim, tcfg.output_dim, tcfg.seed);
    train_from(projector, hidden, labels, tcfg)
}

/// As [`train_projector`] with a precomputed label matrix and initial projector.
pub fn train_from(
    mut projector: Projector,
    hidden: &[Vec<f64>],
    labels: SimilarityMatrix,
    tcfg: &TrainerConfig,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    let (mut loss, mut grads) = objective(&projector, hidden, &labels)?;
    let mut trace = vec![loss];
    if !loss.is_finite() {
        return Err(Error::DivergenceDetected { step: 0, trace });
    }
    let (rows, cols) = (projector.output_dim, projector.input_dim);
    for step in 1..=tcfg.steps {
        // dL/dP = sum_i g_i h_i^T
        let mut grad_p = vec![0.0; rows * cols];
        for (g, h) in grads.iter().zip(hidden) {
            for (r, gr) in g.iter().enumerate() {
                let row = &mut grad_p[r * cols..(r + 1) * cols];
                for (w, x) in row.iter_mut().zip(h) {
                    *w += gr * x;
                }
            }
        }
        let mut lr = tcfg.learning_rate;
        let mut accepted = None;
        let mut all_non_finite = true;
        for _ in 0..=MAX_HALVINGS {
            let candidate = Projector {
                weights: projector
                    .weights
                    .iter()
                    .zip(&grad_p)
                    .map(|(w, g)| w - lr * g)
                    .collect(),
                ..projector.clone()
            };
            if let Ok((l, g)) = objective(&candidate, hidden, &labels) {
                if l.is_finite() {
                    all_non_finite = false;
                    if l <= loss {
                        accepted = Some((candidate, l, g));
                        break;
                    }
                }
            }
            lr *= 0.5;
        }
        match accepted {
            Some((p, l, g)) => {
                projector = p;
                loss = l;
                grads = g;
                trace.push(loss);
            }
            None if all_non_finite => return Err(Error::DivergenceDetected { step, trace }),
            None => break,
        }
    }
    Ok(TrainOutcome {
        projector,
        trace,
        labels,
    })
}

/// Writes `step<TAB>loss` lines, starting at step 0.
pub fn write_loss_trace<W: Write>(trace: &[f64], mut out: W) -> io::Result<()> {
    for (step, loss) in trace.iter().enumerate() {
        writeln!(out, "{step}\t{loss:.12e}")?;
    }
    Ok(())
}
