//! Exact rational linear algebra: a dense matrix with reduced row echelon
//! form, and a sparse row-echelon solver used by the contraction builder.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar. Overflow of the underlying `i128` panics (the
/// workspace builds every profile with overflow checks).
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn floor(x: &Q) -> i128 {
    x.floor().to_integer()
}

pub fn ceil(x: &Q) -> i128 {
    x.ceil().to_integer()
}

pub fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Q::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    /// Pivots are taken left to right, using the first row with a nonzero
    /// entry in the pivot column.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            for j in c..self.cols {
                let v = self[(r, j)];
                self[(r, j)] = v * inv;
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self[(i, c)];
                if f.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = self[(r, j)];
                    if !v.is_zero() {
                        self[(i, j)] -= f * v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the null space, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(r, free)];
            }
            basis.push(v);
        }
        basis
    }

    /// Particular solution of `self * x = b` with all free variables zero,
    /// or `None` if the system is inconsistent.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, self.cols)] = b[i];
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)];
        }
        Some(x)
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-reduced basis of the span of the given vectors.
pub fn span_basis(vectors: &[Vec<Q>], dim: usize) -> Vec<Vec<Q>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let mut m = Matrix::from_rows(vectors);
    debug_assert_eq!(m.cols(), dim);
    let r = m.rref().len();
    (0..r).map(|i| m.row(i).to_vec()).collect()
}

/// Coordinates of `v` in terms of `basis` (rows), if `v` lies in the span.
pub fn coordinates(basis: &[Vec<Q>], v: &[Q]) -> Option<Vec<Q>> {
    if basis.is_empty() {
        return v.iter().all(Zero::is_zero).then(Vec::new);
    }
    Matrix::from_rows(basis).transpose().solve(v)
}

/// Sparse system `A y = b` solved by row echelon elimination with pivot
/// columns chosen left to right. The returned solution sets every free
/// variable to zero, so it depends only on the column order.
pub fn sparse_solve(
    ncols: usize,
    rows: Vec<Vec<(usize, Q)>>,
    rhs: Vec<Q>,
) -> Option<Vec<Q>> {
    // Rows bucketed by leading column.
    let mut buckets: BTreeMap<usize, Vec<(Vec<(usize, Q)>, Q)>> = BTreeMap::new();
    for (mut row, b) in rows.into_iter().zip(rhs) {
        row.retain(|(_, v)| !v.is_zero());
        row.sort_by_key(|(c, _)| *c);
        match row.first() {
            Some(&(c, _)) => buckets.entry(c).or_default().push((row, b)),
            None if b.is_zero() => {}
            None => return None,
        }
    }
    let mut echelon: Vec<(Vec<(usize, Q)>, Q)> = Vec::new();
    while let Some((col, mut group)) = buckets.pop_first() {
        let (pivot, pb) = group.remove(0);
        let lead = pivot[0].1;
        for (row, b) in group {
            let f = row[0].1 / lead;
            let reduced = axpy_sparse(&row, &pivot, -f);
            let nb = b - f * pb;
            match reduced.first() {
                Some(&(c, _)) => {
                    debug_assert!(c > col);
                    buckets.entry(c).or_default().push((reduced, nb));
                }
                None if nb.is_zero() => {}
                None => return None,
            }
        }
        echelon.push((pivot, pb));
    }
    let mut y = vec![Q::zero(); ncols];
    for (row, b) in echelon.iter().rev() {
        let (pc, lead) = row[0];
        let acc = row[1..].iter().fold(*b, |acc, (c, v)| acc - *v * y[*c]);
        y[pc] = acc / lead;
    }
    Some(y)
}

/// `a + f * b` for sorted sparse rows, dropping cancelled entries.
fn axpy_sparse(a: &[(usize, Q)], b: &[(usize, Q)], f: Q) -> Vec<(usize, Q)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&(ca, va)), Some(&(cb, vb))) => {
                if ca < cb {
                    i += 1;
                    (ca, va)
                } else if cb < ca {
                    j += 1;
                    (cb, f * vb)
                } else {
                    i += 1;
                    j += 1;
                    (ca, va + f * vb)
                }
            }
            (Some(&(ca, va)), None) => {
                i += 1;
                (ca, va)
            }
            (None, Some(&(cb, vb))) => {
                j += 1;
                (cb, f * vb)
            }
            (None, None) => unreachable!(),
        };
        if !next.1.is_zero() {
            out.push(next);
        }
    }
    out
}

pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a Q>) -> Q {
    values.into_iter().fold(Q::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
}
