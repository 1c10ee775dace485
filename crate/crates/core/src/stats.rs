//! Gaussian summaries of embedding datasets and the closed-form Fréchet
//! distance between them.
//!
//! A dataset is an `n × d` row-major matrix of embeddings. Its summary is the
//! empirical mean and the population covariance (divisor `n`). The distance
//! between two summaries `(μ1, Σ1)` and `(μ2, Σ2)` is
//!
//! ```text
//! ‖μ1 − μ2‖² + Tr(Σ1) + Tr(Σ2) − 2·Tr((Σ1 Σ2)^{1/2})
//! ```
//!
//! The cross term is evaluated through the symmetric sandwich
//! `Σ1^{1/2} Σ2 Σ1^{1/2}`, whose eigenvalues equal those of `Σ1 Σ2` but can
//! be extracted with a symmetric eigendecomposition.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::scalar::{real, to_f64, Real};

/// Relative tolerance for "PSD within noise": a symmetric matrix passes if
/// its smallest eigenvalue is at least `-TOL_PSD_REL` times its spectral
/// radius. The same threshold decides which sandwich eigenvalues count as
/// zero before square-rooting.
pub const TOL_PSD_REL: f64 = 1.0e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square: {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("symmetric eigendecomposition failed to converge")]
    EigenFailure,
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    #[error("row index {index} out of bounds for {rows} rows")]
    RowOutOfBounds { index: usize, rows: usize },
}

/// Row-major embedding dataset: every row is one sample, validated finite on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<F: Real> {
    data: DMatrix<F>,
}

impl<F: Real> EmbeddingMatrix<F> {
    /// Wraps a matrix whose rows are samples. Rejects zero-dimensional
    /// embeddings and non-finite entries; zero rows are allowed (an empty
    /// dataset of known dimension).
    pub fn new(data: DMatrix<F>) -> Result<Self, StatsError> {
        if data.ncols() == 0 {
            return Err(StatsError::ZeroDimension);
        }
        for row in 0..data.nrows() {
            for col in 0..data.ncols() {
                if !data[(row, col)].is_finite() {
                    return Err(StatsError::NonFinite { row, col });
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds a dataset from sample slices, all of the same dimension.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self, StatsError> {
        let first = rows.first().ok_or(StatsError::EmptyDataset)?;
        let dim = first.len();
        if dim == 0 {
            return Err(StatsError::ZeroDimension);
        }
        for r in rows {
            if r.len() != dim {
                return Err(StatsError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
        }
        let data = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(data)
    }

    /// An empty dataset of known dimension.
    pub fn empty(dim: usize) -> Result<Self, StatsError> {
        if dim == 0 {
            return Err(StatsError::ZeroDimension);
        }
        Ok(Self {
            data: DMatrix::zeros(0, dim),
        })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<F> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<F> {
        self.data
    }

    /// Row `i` as an owned column vector.
    pub fn sample(&self, i: usize) -> Result<DVector<F>, StatsError> {
        if i >= self.rows() {
            return Err(StatsError::RowOutOfBounds {
                index: i,
                rows: self.rows(),
            });
        }
        Ok(self.data.row(i).transpose())
    }

    /// Concatenates datasets of equal dimension, preserving row order.
    pub fn stack(parts: &[&EmbeddingMatrix<F>]) -> Result<Self, StatsError> {
        let first = parts.first().ok_or(StatsError::EmptyDataset)?;
        let dim = first.dim();
        let mut total = 0;
        for p in parts {
            if p.dim() != dim {
                return Err(StatsError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            total += p.rows();
        }
        let mut data = DMatrix::zeros(total, dim);
        let mut at = 0;
        for p in parts {
            data.rows_mut(at, p.rows()).copy_from(&p.data);
            at += p.rows();
        }
        Ok(Self { data })
    }

    /// The sub-dataset given by `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, StatsError> {
        let mut data = DMatrix::zeros(indices.len(), self.dim());
        for (out, &i) in indices.iter().enumerate() {
            if i >= self.rows() {
                return Err(StatsError::RowOutOfBounds {
                    index: i,
                    rows: self.rows(),
                });
            }
            data.row_mut(out).copy_from(&self.data.row(i));
        }
        Ok(Self { data })
    }
}

/// Mean and population covariance of a dataset, with the sample count it was
/// computed from. The covariance is stored exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary<F: Real> {
    pub mean: DVector<F>,
    pub cov: DMatrix<F>,
    pub count: usize,
}

impl<F: Real> GaussianSummary<F> {
    /// Validates dimensions and symmetrizes the covariance.
    pub fn new(mean: DVector<F>, cov: DMatrix<F>, count: usize) -> Result<Self, StatsError> {
        if cov.nrows() != cov.ncols() {
            return Err(StatsError::NotSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(StatsError::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        if mean.is_empty() {
            return Err(StatsError::ZeroDimension);
        }
        let cov = symmetrize(&cov);
        Ok(Self { mean, cov, count })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Fréchet distance between two Gaussian summaries, with its breakdown.
///
/// `raw` is the closed-form value as computed (it can dip slightly below
/// zero through rounding); `clamped` is `max(raw, 0)` and is what reports
/// surface as "the distance".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetValue<F: Real> {
    pub raw: F,
    pub clamped: F,
    pub mean_term: F,
    pub trace_term: F,
}

/// Empirical mean and population covariance (divisor `n`) of a dataset.
pub fn empirical_summary<F: Real>(
    data: &EmbeddingMatrix<F>,
) -> Result<GaussianSummary<F>, StatsError> {
    let n = data.rows();
    if n == 0 {
        return Err(StatsError::EmptyDataset);
    }
    let m = data.matrix();
    let inv_n = F::one() / real::<F>(n as f64);
    let mean: DVector<F> = m.row_sum().transpose() * inv_n;
    let mut centered = m.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = symmetrize(&(centered.transpose() * &centered * inv_n));
    GaussianSummary::new(mean, cov, n)
}

/// `(m + mᵀ) / 2`, making symmetry exact in floating point.
pub fn symmetrize<F: Real>(m: &DMatrix<F>) -> DMatrix<F> {
    let half = real::<F>(0.5);
    (m + m.transpose()) * half
}

fn symmetric_eigen<F: Real>(m: DMatrix<F>) -> Result<SymmetricEigen<F, nalgebra::Dyn>, StatsError> {
    SymmetricEigen::try_new(m, F::default_epsilon(), 0).ok_or(StatsError::EigenFailure)
}

fn spectral_radius<F: Real>(eigenvalues: &DVector<F>) -> f64 {
    eigenvalues
        .iter()
        .map(|v| to_f64(*v).abs())
        .fold(0.0, f64::max)
}

/// Checks a symmetric matrix is PSD within the relative tolerance, returning
/// its eigendecomposition for reuse.
fn psd_eigen<F: Real>(m: &DMatrix<F>) -> Result<SymmetricEigen<F, nalgebra::Dyn>, StatsError> {
    if m.nrows() != m.ncols() {
        return Err(StatsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let eig = symmetric_eigen(symmetrize(m))?;
    let radius = spectral_radius(&eig.eigenvalues);
    let tol = TOL_PSD_REL * radius;
    let min = eig
        .eigenvalues
        .iter()
        .map(|v| to_f64(*v))
        .fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(StatsError::NotPsd {
            eigenvalue: min,
            tolerance: tol,
        });
    }
    Ok(eig)
}

/// Validates that a symmetric matrix is PSD within the relative tolerance.
pub fn check_psd<F: Real>(m: &DMatrix<F>) -> Result<(), StatsError> {
    psd_eigen(m).map(|_| ())
}

/// Symmetric square root `Q·√Λ·Qᵀ` of a PSD matrix. Eigenvalues inside the
/// negative tolerance band are treated as zero.
pub fn psd_sqrt<F: Real>(m: &DMatrix<F>) -> Result<DMatrix<F>, StatsError> {
    let eig = psd_eigen(m)?;
    let mut roots = eig.eigenvalues;
    for v in roots.iter_mut() {
        *v = if *v > F::zero() { v.sqrt() } else { F::zero() };
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Projects a square matrix to its nearest (Frobenius) positive semidefinite
/// neighbour: symmetrize, eigendecompose, clamp negative eigenvalues to
/// zero, reconstruct.
pub fn nearest_psd<F: Real>(m: &DMatrix<F>) -> Result<DMatrix<F>, StatsError> {
    if m.nrows() != m.ncols() {
        return Err(StatsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let eig = symmetric_eigen(symmetrize(m))?;
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
    let q = eig.eigenvectors;
    let rec = &q * DMatrix::from_diagonal(&vals) * q.transpose();
    Ok(symmetrize(&rec))
}

/// `Tr(S1) + Tr(S2) − 2·Tr((S1 S2)^{1/2})` for PSD `S1`, `S2`.
///
/// The matrix square root of the product is evaluated through the sandwich
/// `S1^{1/2} S2 S1^{1/2}`, which shares its spectrum with `S1 S2` but stays
/// symmetric. Sandwich eigenvalues below the relative tolerance are treated
/// as zero before square-rooting so rounding dust cannot turn into NaN.
pub fn sqrt_trace_term<F: Real>(s1: &DMatrix<F>, s2: &DMatrix<F>) -> Result<F, StatsError> {
    if s1.nrows() != s2.nrows() || s1.ncols() != s2.ncols() {
        return Err(StatsError::DimensionMismatch {
            expected: s1.nrows(),
            got: s2.nrows(),
        });
    }
    let s1_half = psd_sqrt(s1)?;
    check_psd(s2)?;

    let sandwich = symmetrize(&(&s1_half * s2 * &s1_half));
    let eig_s = symmetric_eigen(sandwich)?;
    let tol = real::<F>(TOL_PSD_REL * spectral_radius(&eig_s.eigenvalues));
    let mut cross = F::zero();
    for v in eig_s.eigenvalues.iter() {
        if *v > tol {
            cross += v.sqrt();
        }
    }
    let two = real::<F>(2.0);
    Ok(s1.trace() + s2.trace() - two * cross)
}

/// Closed-form Fréchet distance between two Gaussian summaries.
pub fn frechet_distance<F: Real>(
    a: &GaussianSummary<F>,
    b: &GaussianSummary<F>,
) -> Result<FrechetValue<F>, StatsError> {
    if a.dim() != b.dim() {
        return Err(StatsError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let diff = &a.mean - &b.mean;
    let mean_term = diff.dot(&diff);
    let trace_term = sqrt_trace_term(&a.cov, &b.cov)?;
    let raw = mean_term + trace_term;
    let clamped = if raw < F::zero() { F::zero() } else { raw };
    Ok(FrechetValue {
        raw,
        clamped,
        mean_term,
        trace_term,
    })
}
