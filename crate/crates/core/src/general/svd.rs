use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::SizeMismatch { max: rows, found: col.len() });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn tmul_vec(&self, y: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * y[i]).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = Σ_j s_j u_j v_jᵀ` with `s` non-increasing.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub values: Vec<T>,
    /// Left vectors, length `rows` each.
    pub left: Vec<Vec<T>>,
    /// Right vectors, length `cols` each.
    pub right: Vec<Vec<T>>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// One-sided Jacobi SVD.
pub fn jacobi_svd<T: Real>(a: &DenseMatrix<T>) -> Result<Svd<T>> {
    if !a.is_finite() {
        return Err(Error::SvdFailure("matrix has non-finite entries".into()));
    }
    if a.rows < a.cols {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(Svd { values: t.values, left: t.right, right: t.left });
    }
    let (m, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let tol = T::epsilon() * T::of_usize(m);
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for vecs in [&mut cols, &mut v] {
                    let (lo, hi) = vecs.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (xp, xq) = (*x, *y);
                        *x = c * xp - s * xq;
                        *y = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdFailure("Jacobi sweeps did not converge".into()));
    }
    let mut triples: Vec<(T, Vec<T>, Vec<T>)> = cols
        .into_iter()
        .zip(v)
        .map(|(c, r)| {
            let s = norm(&c);
            let u = if s > T::zero() { c.iter().map(|&x| x / s).collect() } else { c };
            (s, u, r)
        })
        .collect();
    triples.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
    let mut out = Svd { values: Vec::with_capacity(n), left: Vec::with_capacity(n), right: Vec::with_capacity(n) };
    for (s, u, r) in triples {
        out.values.push(s);
        out.left.push(u);
        out.right.push(r);
    }
    Ok(out)
}

impl<T: Real> Svd<T> {
    /// `max_j max(‖A v_j - s_j u_j‖, ‖Aᵀ u_j - s_j v_j‖)` over triples with
    /// `s_j > 0`.
    pub fn residual(&self, a: &DenseMatrix<T>) -> T {
        let mut worst = T::zero();
        for ((s, u), v) in self.values.iter().zip(&self.left).zip(&self.right) {
            if *s == T::zero() {
                continue;
            }
            let av = a.mul_vec(v);
            let atu = a.tmul_vec(u);
            let r1 = norm(&av.iter().zip(u).map(|(&x, &y)| x - *s * y).collect::<Vec<_>>());
            let r2 = norm(&atu.iter().zip(v).map(|(&x, &y)| x - *s * y).collect::<Vec<_>>());
            worst = worst.max(r1).max(r2);
        }
        worst
    }

    /// `max |⟨v_i, v_j⟩ - δ_ij|`.
    pub fn right_orthogonality_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.right.len() {
            for j in 0..self.right.len() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot(&self.right[i], &self.right[j]) - target).abs());
            }
        }
        worst
    }
}
