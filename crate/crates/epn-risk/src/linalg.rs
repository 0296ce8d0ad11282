//! Small dense symmetric-matrix kernels. Problem sizes here are tens of rows,
//! so plain row-major `Vec<f64>` storage is enough.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// Row-major lower triangle, including the diagonal.
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Factor a row-major symmetric matrix. Only the lower triangle is read.
    pub fn new(matrix: &[f64], n: usize) -> Result<Self, FactorError> {
        assert_eq!(matrix.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = matrix[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(FactorError::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * n + j] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// y = L x (for sampling: maps iid standard normals to correlated ones).
    pub fn lower_times(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.l[i * n + k] * x[k];
            }
            y[i] = acc;
        }
        y
    }

    /// Solve A x = b with A = L L^T, in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.l[i * n + k] * b[k];
            }
            b[i] = acc / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in (i + 1)..n {
                acc -= self.l[k * n + i] * b[k];
            }
            b[i] = acc / self.l[i * n + i];
        }
    }
}

/// Factor with a diagonal-jitter ladder: retries with `base_jitter`, 10x per
/// step, up to `max_jitter`, for matrices that are PSD up to rounding.
pub fn cholesky_with_jitter(
    matrix: &[f64],
    n: usize,
    base_jitter: f64,
    max_jitter: f64,
) -> Result<CholeskyFactor, FactorError> {
    match CholeskyFactor::new(matrix, n) {
        Ok(f) => Ok(f),
        Err(first) => {
            let mut jitter = base_jitter;
            let mut work = matrix.to_vec();
            while jitter <= max_jitter {
                let mut jittered = work.clone();
                for i in 0..n {
                    jittered[i * n + i] += jitter;
                }
                if let Ok(f) = CholeskyFactor::new(&jittered, n) {
                    return Ok(f);
                }
                jitter *= 10.0;
                work = matrix.to_vec();
            }
            Err(first)
        }
    }
}
