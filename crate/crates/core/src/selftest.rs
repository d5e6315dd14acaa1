//! Runtime oracle suites: each checks an optimized routine against an
//! independent computation and reports the worst error seen.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gak::{
    enumerate_alignments, gak_bruteforce, gak_forward, gak_forward_with, single_slice_gak,
    Boundary,
};
use crate::kernel::{local_kernel, sigma};
use crate::loss::{loss_and_gradient, SimilarityKind, SimilarityMatrix};
use crate::model::{KernelConfig, Modality, SliceEmbedding};
use crate::synthetic::{gaussian_vector, random_composite, random_modality, random_sequence};

pub const SUITES: [&str; 5] = [
    "dp-vs-enumeration",
    "alignment-counts",
    "single-slice-monotonicity",
    "gradient-finite-difference",
    "gram-spectrum",
];

/// Deliberate defects for checking that the suites catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Sets `M[1][0] = 1` in the forward recursion.
    DpBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub worst_error: f64,
    pub tolerance: f64,
    pub checks: usize,
}

#[derive(Debug, Clone)]
pub struct SelfTestOptions {
    pub seed: u64,
    pub delta: f64,
    pub fault: Fault,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            delta: 1.0,
            fault: Fault::None,
        }
    }
}

fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Raw DP against the alignment enumeration on `(n, m) in {1..5}^2`.
pub fn dp_vs_enumeration(opts: &SelfTestOptions, instances: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cfg = KernelConfig {
        delta: opts.delta,
        ..KernelConfig::default()
    };
    let boundary = match opts.fault {
        Fault::DpBoundary => Boundary::CorruptedRow,
        Fault::None => Boundary::Standard,
    };
    let mut worst = 0.0f64;
    let mut checks = 0;
    for n in 1..=5 {
        for m in 1..=5 {
            for _ in 0..instances {
                let x = random_sequence(&mut rng, "x", n, 6, 5);
                let y = random_sequence(&mut rng, "y", m, 6, 5);
                let dp = gak_forward_with(x.slices(), y.slices(), &cfg, boundary)?;
                let bf = gak_bruteforce(x.slices(), y.slices(), &cfg)?;
                worst = worst.max(relative_error(dp, bf));
                checks += 1;
            }
        }
    }
    Ok(SuiteReport {
        name: SUITES[0],
        passed: worst <= 1e-10,
        worst_error: worst,
        tolerance: 1e-10,
        checks,
    })
}

/// Enumeration sizes against the Delannoy recurrence for `n, m <= 6`.
pub fn alignment_counts() -> Result<SuiteReport> {
    const MAX: usize = 6;
    let mut table = [[1u64; MAX]; MAX];
    for a in 1..MAX {
        for b in 1..MAX {
            table[a][b] = table[a - 1][b] + table[a][b - 1] + table[a - 1][b - 1];
        }
    }
    let mut worst = 0.0f64;
    let mut checks = 0;
    for n in 1..=MAX {
        for m in 1..=MAX {
            let got = enumerate_alignments(n, m)?.len() as f64;
            worst = worst.max((got - table[n - 1][m - 1] as f64).abs());
            checks += 1;
        }
    }
    Ok(SuiteReport {
        name: SUITES[1],
        passed: worst == 0.0,
        worst_error: worst,
        tolerance: 0.0,
        checks,
    })
}

fn pair_with_cosine(cos: f64) -> (Vec<SliceEmbedding>, Vec<SliceEmbedding>) {
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let a = SliceEmbedding::atomic(Modality::Image, &[1.0, 0.0]).expect("unit");
    let b = SliceEmbedding::atomic(Modality::Text, &[cos, sin]).expect("unit");
    (vec![a], vec![b])
}

/// Strict increase over a 201-point cosine sweep and agreement of the closed
/// form with the recursion on single-slice sequences.
pub fn single_slice_monotonicity(deltas: &[f64]) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut checks = 0;
    for &delta in deltas {
        let cfg = KernelConfig {
            delta,
            ..KernelConfig::default()
        };
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let cos = -1.0 + i as f64 / 100.0;
            let closed = single_slice_gak(cos, delta)?;
            if closed <= prev {
                monotone = false;
            }
            prev = closed;
            let (x, y) = pair_with_cosine(cos);
            let dp = gak_forward(&x, &y, &cfg)?;
            worst = worst.max((dp - closed).abs());
            checks += 1;
        }
        if single_slice_gak(1.0, delta)? != 1.0 {
            monotone = false;
        }
    }
    Ok(SuiteReport {
        name: SUITES[2],
        passed: monotone && worst <= 1e-12,
        worst_error: worst,
        tolerance: 1e-12,
        checks,
    })
}

/// Analytic loss gradient against central differences with step `1e-5`.
pub fn gradient_finite_difference(seed: u64, instances: usize) -> Result<SuiteReport> {
    const STEP: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=8);
        let dim = rng.random_range(2..=16);
        let vectors: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vector(&mut rng, dim)).collect();
        let labels = random_label_matrix(&mut rng, n);
        let (_, grads) = loss_and_gradient(&vectors, &labels)?;
        let mut diff2 = 0.0;
        let mut ref2 = 0.0;
        for i in 0..n {
            for k in 0..dim {
                let mut plus = vectors.clone();
                plus[i][k] += STEP;
                let mut minus = vectors.clone();
                minus[i][k] -= STEP;
                let fd = (loss_and_gradient(&plus, &labels)?.0
                    - loss_and_gradient(&minus, &labels)?.0)
                    / (2.0 * STEP);
                diff2 += (grads[i][k] - fd).powi(2);
                ref2 += fd * fd;
            }
        }
        worst = worst.max(diff2.sqrt() / ref2.sqrt().max(1e-12));
    }
    Ok(SuiteReport {
        name: SUITES[3],
        passed: worst <= 1e-5,
        worst_error: worst,
        tolerance: 1e-5,
        checks: instances,
    })
}

/// Symmetric, unit diagonal, off-diagonal entries in `(0, 1)`.
pub fn random_label_matrix<R: Rng>(rng: &mut R, n: usize) -> SimilarityMatrix {
    let mut e = vec![0.0; n * n];
    for i in 0..n {
        e[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = rng.random_range(0.05..0.95);
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    }
    SimilarityMatrix::from_entries(n, e, SimilarityKind::Label).expect("symmetric")
}

/// Width of each composite half in the Gram check, matching 768-wide encoders.
pub const GRAM_HALF_DIM: usize = 768;

/// Minimum eigenvalue of local-kernel Gram matrices on random composite
/// slices with `half_dim`-wide specialist and shared halves.
///
/// The triple kernel switches sub-vectors per pair, so it is not positive
/// definite for every input; with narrow halves and large `delta` random
/// sets do go negative.
pub fn gram_spectrum(
    opts: &SelfTestOptions,
    sets: usize,
    size: usize,
    half_dim: usize,
) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let cfg = KernelConfig {
        delta: opts.delta,
        ..KernelConfig::default()
    };
    let s = sigma(1, 1, cfg.delta)?;
    let mut min_eig = f64::INFINITY;
    for _ in 0..sets {
        let slices: Vec<SliceEmbedding> = (0..size)
            .map(|_| {
                let m = random_modality(&mut rng);
                random_composite(&mut rng, m, half_dim, half_dim)
            })
            .collect();
        let gram = gram_matrix(&slices, s, &cfg)?;
        min_eig = min_eig.min(min_eigenvalue(&gram));
    }
    // reported error is how far the spectrum dips below zero
    let dip = (-min_eig).max(0.0);
    Ok(SuiteReport {
        name: SUITES[4],
        passed: min_eig >= -1e-8,
        worst_error: dip,
        tolerance: 1e-8,
        checks: sets,
    })
}

pub fn gram_matrix(slices: &[SliceEmbedding], s: f64, cfg: &KernelConfig) -> Result<DMatrix<f64>> {
    let n = slices.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = local_kernel(&slices[i], &slices[j], s, cfg.kernel_mode)?.get();
        }
    }
    Ok(g)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Runs every suite with the standard sizes.
pub fn run_all(opts: &SelfTestOptions) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        dp_vs_enumeration(opts, 100)?,
        alignment_counts()?,
        single_slice_monotonicity(&[0.5, 1.0, 2.0])?,
        gradient_finite_difference(opts.seed, 50)?,
        gram_spectrum(opts, 200, 8, GRAM_HALF_DIM)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_by_default() {
        let opts = SelfTestOptions::default();
        for r in run_all(&opts).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn boundary_fault_is_caught() {
        let opts = SelfTestOptions {
            fault: Fault::DpBoundary,
            ..SelfTestOptions::default()
        };
        let r = dp_vs_enumeration(&opts, 2).unwrap();
        assert!(!r.passed);
        assert!(r.worst_error > 0.1);
    }

    #[test]
    fn triple_kernel_gram_can_be_indefinite() {
        // two images agree on shared and differ on specialist; a text matches both
        let s = [0.0, 1.0];
        let a = SliceEmbedding::composite(Modality::Image, &[1.0, 0.0], &s).unwrap();
        let b = SliceEmbedding::composite(Modality::Image, &[-1.0, 0.0], &s).unwrap();
        let c = SliceEmbedding::composite(Modality::Text, &[0.0, 1.0], &s).unwrap();
        let cfg = KernelConfig::default();
        let g = gram_matrix(&[a, b, c], 1.0, &cfg).unwrap();
        assert!(min_eigenvalue(&g) < -0.25);

        let shared_only = KernelConfig {
            kernel_mode: crate::model::KernelMode::SharedOnly,
            ..cfg
        };
        let a = SliceEmbedding::composite(Modality::Image, &[1.0, 0.0], &s).unwrap();
        let b = SliceEmbedding::composite(Modality::Image, &[-1.0, 0.0], &s).unwrap();
        let c = SliceEmbedding::composite(Modality::Text, &[0.0, 1.0], &s).unwrap();
        let g = gram_matrix(&[a, b, c], 1.0, &shared_only).unwrap();
        assert!(min_eigenvalue(&g) >= -1e-12);
    }

    #[test]
    fn narrow_halves_break_the_gram_check() {
        let opts = SelfTestOptions {
            delta: 2.0,
            ..SelfTestOptions::default()
        };
        assert!(!gram_spectrum(&opts, 200, 8, 4).unwrap().passed);
    }
}
