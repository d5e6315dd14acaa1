//! Global alignment kernel over slice sequences.
//!
//! The kernel sums, over every monotone alignment of two sequences, the
//! product of local kernel values along the alignment. [`gak_forward`]
//! evaluates it with the sum-product recursion
//!
//! ```text
//! M[0][0] = 1,  M[i][0] = M[0][j] = 0,
//! M[i][j] = (M[i][j-1] + M[i-1][j-1] + M[i-1][j]) * k(x_i, y_j)
//! ```
//!
//! in `O(nm)` after an `O(nmd)` distance pass. [`gak_bruteforce`] evaluates
//! the same sum literally by enumerating alignments and is kept as an oracle.

use log::debug;

use crate::error::{Error, Result};
use crate::kernel::{local_kernel, local_kernel_from_distance, sigma, triple_distance};
use crate::model::{KernelConfig, KernelMode, SliceEmbedding};

/// Largest sequence length accepted by the enumeration routines.
pub const MAX_ENUMERATION_LEN: usize = 7;

/// A monotone alignment between two sequences, as 1-based `(i, j)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignmentPath {
    pairs: Vec<(usize, usize)>,
}

impl AlignmentPath {
    /// Accepts `pairs` only if they form a valid alignment for lengths `(n, m)`.
    pub fn new(pairs: Vec<(usize, usize)>, n: usize, m: usize) -> Result<Self> {
        let path = Self { pairs };
        if path.is_valid_for(n, m) {
            Ok(path)
        } else {
            Err(Error::PathShapeMismatch { n, m })
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Starts at `(1, 1)`, ends at `(n, m)`, and every step advances one or
    /// both indices by exactly one.
    pub fn is_valid_for(&self, n: usize, m: usize) -> bool {
        if self.pairs.first() != Some(&(1, 1)) || self.pairs.last() != Some(&(n, m)) {
            return false;
        }
        self.pairs.windows(2).all(|w| {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            i1 >= i0 && j1 >= j0 && i1 - i0 <= 1 && j1 - j0 <= 1 && (i1 - i0) + (j1 - j0) >= 1
        })
    }
}

/// The `(n+1) x (m+1)` forward table.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DpTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `M[n][m]`, the raw kernel value.
    pub fn value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Test hook for the self-test's fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) enum Boundary {
    #[default]
    Standard,
    /// Sets `M[1][0] = 1` instead of 0.
    CorruptedRow,
}

fn check_pair(x: &[SliceEmbedding], y: &[SliceEmbedding], cap: usize) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    let cells = x.len().saturating_mul(y.len());
    if cells > cap {
        return Err(Error::SequenceTooLong { cells, cap });
    }
    Ok(())
}

/// Row-major `n x m` matrix of local kernel values.
fn kernel_grid(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    sigma: f64,
    mode: KernelMode,
) -> Result<Vec<f64>> {
    let mut grid = Vec::with_capacity(x.len() * y.len());
    for a in x {
        for b in y {
            grid.push(local_kernel_from_distance(triple_distance(a, b, mode)?, sigma));
        }
    }
    Ok(grid)
}

fn fill_table(grid: &[f64], n: usize, m: usize, boundary: Boundary) -> DpTable {
    let cols = m + 1;
    let mut values = vec![0.0; (n + 1) * cols];
    values[0] = 1.0;
    if boundary == Boundary::CorruptedRow {
        values[cols] = 1.0;
    }
    for i in 1..=n {
        for j in 1..=m {
            let acc = values[i * cols + j - 1]
                + values[(i - 1) * cols + j - 1]
                + values[(i - 1) * cols + j];
            values[i * cols + j] = acc * grid[(i - 1) * m + (j - 1)];
        }
    }
    DpTable {
        rows: n + 1,
        cols,
        values,
    }
}

/// Raw forward table at an explicit bandwidth.
pub fn forward_table(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    sigma: f64,
    mode: KernelMode,
    cell_cap: usize,
) -> Result<DpTable> {
    forward_table_with(x, y, sigma, mode, cell_cap, Boundary::Standard)
}

pub(crate) fn forward_table_with(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    sigma: f64,
    mode: KernelMode,
    cell_cap: usize,
    boundary: Boundary,
) -> Result<DpTable> {
    check_pair(x, y, cell_cap)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let grid = kernel_grid(x, y, sigma, mode)?;
    Ok(fill_table(&grid, x.len(), y.len(), boundary))
}

/// Global alignment kernel between two sequences.
///
/// The bandwidth is `sigma(n, m, cfg.delta)`. With `cfg.normalize_gak` the
/// result is `K(x,y) / sqrt(K(x,x) K(y,y))`, where both self-similarities are
/// taken at the same bandwidth as the cross term.
pub fn gak_forward(x: &[SliceEmbedding], y: &[SliceEmbedding], cfg: &KernelConfig) -> Result<f64> {
    gak_forward_with(x, y, cfg, Boundary::Standard)
}

pub(crate) fn gak_forward_with(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    cfg: &KernelConfig,
    boundary: Boundary,
) -> Result<f64> {
    check_pair(x, y, cfg.cell_cap)?;
    let s = sigma(x.len(), y.len(), cfg.delta)?;
    let raw = |a: &[SliceEmbedding], b: &[SliceEmbedding]| {
        forward_table_with(a, b, s, cfg.kernel_mode, cfg.cell_cap, boundary).map(|t| t.value())
    };
    let kxy = raw(x, y)?;
    if !cfg.normalize_gak {
        if kxy > 1.0 {
            debug!("raw alignment kernel {kxy} exceeds 1");
        }
        return Ok(kxy);
    }
    let kxx = raw(x, x)?;
    let kyy = raw(y, y)?;
    Ok(kxy / (kxx * kyy).sqrt())
}

/// Every alignment between sequences of lengths `n` and `m`, each once.
///
/// The count is the Delannoy number `D(n-1, m-1)`.
pub fn enumerate_alignments(n: usize, m: usize) -> Result<Vec<AlignmentPath>> {
    if n == 0 || m == 0 {
        return Err(Error::ZeroLength(n, m));
    }
    if n > MAX_ENUMERATION_LEN || m > MAX_ENUMERATION_LEN {
        return Err(Error::TooLargeForEnumeration {
            n,
            m,
            max: MAX_ENUMERATION_LEN,
        });
    }
    fn walk(
        n: usize,
        m: usize,
        prefix: &mut Vec<(usize, usize)>,
        out: &mut Vec<AlignmentPath>,
    ) {
        let (i, j) = *prefix.last().expect("non-empty prefix");
        if (i, j) == (n, m) {
            out.push(AlignmentPath {
                pairs: prefix.clone(),
            });
            return;
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni <= n && nj <= m {
                prefix.push((ni, nj));
                walk(n, m, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(n, m, &mut vec![(1, 1)], &mut out);
    Ok(out)
}

/// Sum of triple distances along a path.
pub fn alignment_score(
    path: &AlignmentPath,
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    mode: KernelMode,
) -> Result<f64> {
    if !path.is_valid_for(x.len(), y.len()) {
        return Err(Error::PathShapeMismatch {
            n: x.len(),
            m: y.len(),
        });
    }
    path.pairs
        .iter()
        .map(|&(i, j)| triple_distance(&x[i - 1], &y[j - 1], mode))
        .sum()
}

/// The kernel computed literally as a sum over enumerated alignments.
///
/// Exponential in the sequence lengths; limited to [`MAX_ENUMERATION_LEN`].
pub fn gak_bruteforce(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    cfg: &KernelConfig,
) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    let s = sigma(x.len(), y.len(), cfg.delta)?;
    let raw = |a: &[SliceEmbedding], b: &[SliceEmbedding]| -> Result<f64> {
        let mut total = 0.0;
        for path in enumerate_alignments(a.len(), b.len())? {
            let mut product = 1.0;
            for &(i, j) in path.pairs() {
                product *= local_kernel(&a[i - 1], &b[j - 1], s, cfg.kernel_mode)?.get();
            }
            total += product;
        }
        Ok(total)
    };
    let kxy = raw(x, y)?;
    if !cfg.normalize_gak {
        return Ok(kxy);
    }
    Ok(kxy / (raw(x, x)? * raw(y, y)?).sqrt())
}

/// Closed form of the kernel between two single-slice sequences whose
/// compared vectors have cosine `cos`: `s / (2 - s)` with
/// `s = exp(-(1 - cos) / delta^2)`.
pub fn single_slice_gak(cos: f64, delta: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&cos) {
        return Err(Error::CosineOutOfRange(cos));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let s = (-(1.0 - cos) / (delta * delta)).exp();
    Ok(s / (2.0 - s))
}

/// Mean of local kernel values over all slice pairs, ignoring order.
pub fn mean_pairwise_similarity(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    cfg: &KernelConfig,
) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySequence);
    }
    let s = sigma(x.len(), y.len(), cfg.delta)?;
    let grid = kernel_grid(x, y, s, cfg.kernel_mode)?;
    Ok(grid.iter().sum::<f64>() / grid.len() as f64)
}

/// Highest-product alignment, for display only. Ties prefer the diagonal
/// predecessor, then `(i-1, j)`, then `(i, j-1)`.
pub fn best_path(
    x: &[SliceEmbedding],
    y: &[SliceEmbedding],
    cfg: &KernelConfig,
) -> Result<AlignmentPath> {
    check_pair(x, y, cfg.cell_cap)?;
    let (n, m) = (x.len(), y.len());
    let s = sigma(n, m, cfg.delta)?;
    let grid = kernel_grid(x, y, s, cfg.kernel_mode)?;
    let cols = m + 1;
    let mut best = vec![0.0f64; (n + 1) * cols];
    best[0] = 1.0;
    for i in 1..=n {
        for j in 1..=m {
            let prev = best[(i - 1) * cols + j - 1]
                .max(best[(i - 1) * cols + j])
                .max(best[i * cols + j - 1]);
            best[i * cols + j] = prev * grid[(i - 1) * m + j - 1];
        }
    }
    let mut pairs = vec![(n, m)];
    let (mut i, mut j) = (n, m);
    while (i, j) != (1, 1) {
        let diag = best[(i - 1) * cols + j - 1];
        let down = best[(i - 1) * cols + j];
        let right = best[i * cols + j - 1];
        (i, j) = if i > 1 && j > 1 && diag >= down && diag >= right {
            (i - 1, j - 1)
        } else if i > 1 && (j == 1 || down >= right) {
            (i - 1, j)
        } else {
            (i, j - 1)
        };
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(AlignmentPath { pairs })
}
