use crate::error::{Error, Result};
use crate::real::Real;

/// Cholesky factor `L Lᵀ` of a symmetric positive definite band matrix.
/// Row `i` stores `L[i][i - bw ..= i]`.
#[derive(Clone, Debug)]
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    band: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    /// Factors the matrix whose lower-triangle entries are produced by
    /// `entries`, a list of `(row, col, value)` with `col ≤ row`; duplicates
    /// are summed.
    pub fn factor(n: usize, entries: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let entries: Vec<(usize, usize, T)> = entries.into_iter().collect();
        let bw = entries.iter().map(|&(r, c, _)| r - c).max().unwrap_or(0);
        let w = bw + 1;
        let mut band = vec![T::zero(); n * w];
        for (r, c, v) in entries {
            debug_assert!(c <= r && r < n);
            band[r * w + (bw - (r - c))] += v;
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // L[i][j] = (A[i][j] - Σ_k L[i][k] L[j][k]) / L[j][j]
                let start = lo.max(j.saturating_sub(bw));
                let mut s = band[i * w + (bw - (i - j))];
                for k in start..j {
                    s -= band[i * w + (bw - (i - k))] * band[j * w + (bw - (j - k))];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::SingularSystem { pivot: i, value: s.as_f64() });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (bw - (i - j))] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (bw - (i - k))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.band[k * w + (bw - (k - i))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        x
    }
}
