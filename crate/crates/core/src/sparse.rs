//! Compressed sparse row storage for complex matrices.
//!
//! Operators in this crate are small (a few hundred rows) but superoperators
//! reach ~10^5 rows, so everything is kept sparse and assembled from
//! Kronecker products.

use crate::C64;

/// Complex CSR matrix with sorted, duplicate-free column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut trips: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<C64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indptr[r + 1] += 1;
                indices.push(c);
                data.push(v);
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
        .pruned()
    }

    /// Row-major dense input.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[C64]) -> Self {
        assert_eq!(dense.len(), nrows * ncols);
        Self::from_triplets(
            nrows,
            ncols,
            dense
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != C64::new(0.0, 0.0))
                .map(|(k, &v)| (k / ncols, k % ncols, v)),
        )
    }

    fn pruned(mut self) -> Self {
        if self.data.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return self;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut w = 0;
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k] != C64::new(0.0, 0.0) {
                    self.indices[w] = self.indices[k];
                    self.data[w] = self.data[k];
                    w += 1;
                }
            }
            indptr[r + 1] = w;
        }
        self.indices.truncate(w);
        self.data.truncate(w);
        self.indptr = indptr;
        self
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.data[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.iter().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out.pruned()
    }

    /// `self + s * other`, merged row by row.
    pub fn add_scaled(&self, other: &CsrMatrix, s: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (mut i, ie) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, je) = (other.indptr[r], other.indptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.indices[i] } else { usize::MAX };
                let cj = if j < je { other.indices[j] } else { usize::MAX };
                let (c, v) = if ci < cj {
                    i += 1;
                    (ci, self.data[i - 1])
                } else if cj < ci {
                    j += 1;
                    (cj, s * other.data[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (ci, self.data[i - 1] + s * other.data[j - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        let mut trips = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &cols {
                trips.push((r, c, acc[c]));
            }
        }
        Self::from_triplets(self.nrows, other.ncols, trips)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CsrMatrix) -> Self {
        let (m, n) = (other.nrows, other.ncols);
        let mut indptr = Vec::with_capacity(self.nrows * m + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut data = Vec::with_capacity(self.nnz() * other.nnz());
        for r1 in 0..self.nrows {
            for r2 in 0..m {
                for (c1, a) in self.row(r1) {
                    for (c2, b) in other.row(r2) {
                        let v = a * b;
                        if v != C64::new(0.0, 0.0) {
                            indices.push(c1 * n + c2);
                            data.push(v);
                        }
                    }
                }
                indptr.push(indices.len());
            }
        }
        CsrMatrix {
            nrows: self.nrows * m,
            ncols: self.ncols * n,
            indptr,
            indices,
            data,
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows * self.ncols];
        for (r, c, v) in self.iter() {
            out[r * self.ncols + c] = v;
        }
        out
    }

    /// Restriction to the given rows and columns (both sorted ascending).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for &r in rows {
            for (c, v) in self.row(r) {
                let k = col_map[c];
                if k != usize::MAX {
                    indices.push(k);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            indptr,
            indices,
            data,
        }
    }

    /// Replaces row `r` by the given sorted `(col, value)` entries.
    pub fn with_row_replaced(&self, r: usize, entries: &[(usize, C64)]) -> Self {
        let mut trips: Vec<(usize, usize, C64)> =
            self.iter().filter(|&(i, _, _)| i != r).collect();
        trips.extend(entries.iter().map(|&(c, v)| (r, c, v)));
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (_, c, v) in self.iter() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
        assert_eq!(m.get(1, 0), c(0.0));
    }

    #[test]
    fn kron_matches_definition() {
        let a = CsrMatrix::from_dense(2, 2, &[c(1.0), c(2.0), c(0.0), c(3.0)]);
        let b = CsrMatrix::from_dense(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let k = a.kron(&b);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        assert_eq!(k.get(i1 * 2 + i2, j1 * 2 + j2), a.get(i1, j1) * b.get(i2, j2));
                    }
                }
            }
        }
    }

    #[test]
    fn matmul_and_add_agree_with_dense() {
        let a = CsrMatrix::from_dense(2, 3, &[c(1.0), c(0.0), c(2.0), c(0.0), c(1.0), c(1.0)]);
        let b = CsrMatrix::from_dense(3, 2, &[c(1.0), c(1.0), c(0.0), c(2.0), c(3.0), c(0.0)]);
        let p = a.matmul(&b);
        assert_eq!(p.to_dense(), vec![c(7.0), c(1.0), c(3.0), c(2.0)]);
        let s = p.add_scaled(&p, c(-1.0));
        assert_eq!(s.nnz(), 0);
    }

    #[test]
    fn submatrix_and_row_replacement() {
        let m = CsrMatrix::from_dense(3, 3, &(0..9).map(|k| c(k as f64)).collect::<Vec<_>>());
        let s = m.submatrix(&[0, 2], &[1, 2]);
        assert_eq!(s.to_dense(), vec![c(1.0), c(2.0), c(7.0), c(8.0)]);
        let r = m.with_row_replaced(1, &[(0, c(9.0))]);
        assert_eq!(r.get(1, 0), c(9.0));
        assert_eq!(r.get(1, 1), c(0.0));
    }
}
