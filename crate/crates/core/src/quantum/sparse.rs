use std::collections::BTreeMap;

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Compressed sparse row complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for ((r, c), v) in map {
            if v != C64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: vec![],
            values: vec![],
        }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut t = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if m[(r, c)] != C64::new(0.0, 0.0) {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &t).expect("indices in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(col, value)` over row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, &t).expect("indices in range")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("sparse add".into()));
        }
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.rows, self.cols, &t)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("sparse matmul".into()));
        }
        let mut t = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, &t)
    }

    /// Kronecker product, `self` most significant.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                t.push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, &t).expect("indices in range")
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch("sparse mul_vec".into()));
        }
        Ok((0..self.rows).map(|r| self.row(r).map(|(c, a)| a * v[c]).sum()).collect())
    }

    /// `self * m` with `m` dense.
    pub fn mul_dense(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != m.rows() {
            return Err(Error::DimensionMismatch("sparse mul_dense".into()));
        }
        let n = m.cols();
        let mut out = ComplexMatrix::zeros(self.rows, n);
        self.mul_dense_into(m.as_slice(), n, out.as_mut_slice());
        Ok(out)
    }

    /// Row-major kernel: `out = self * m` where `m` has `n` columns.
    pub(crate) fn mul_dense_into(&self, m: &[C64], n: usize, out: &mut [C64]) {
        for r in 0..self.rows {
            let dst = &mut out[r * n..(r + 1) * n];
            dst.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for (k, a) in self.row(r) {
                let src = &m[k * n..(k + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows == self.cols && self.triplets().iter().all(|(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let n = self.rows.min(self.cols);
        let mut d = vec![C64::new(0.0, 0.0); n];
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    /// For matrices with at most one entry per row, the `(col, value)` of each row.
    pub fn single_entry_rows(&self) -> Option<Vec<Option<(usize, C64)>>> {
        (0..self.rows)
            .map(|r| match self.indptr[r + 1] - self.indptr[r] {
                0 => Some(None),
                1 => Some(Some((self.indices[self.indptr[r]], self.values[self.indptr[r]]))),
                _ => None,
            })
            .collect()
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        let d = self.dagger();
        let diff = self.add(&d.scale(C64::new(-1.0, 0.0))).expect("square");
        diff.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}
