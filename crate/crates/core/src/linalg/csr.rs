use crate::scalar::Real;

use super::{LinalgError, LinearOperator};

/// Compressed sparse row matrix.
///
/// Column indices are sorted and unique within each row. Explicit zeros are
/// allowed: operators that share a sparsity pattern are stored on the same
/// pattern so linear combinations reduce to a pass over `values`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from raw CSR arrays, validating the layout.
    pub fn try_from_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self, LinalgError> {
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return Err(LinalgError::InvalidStructure(
                "row offsets must have length nrows + 1 and start at 0".into(),
            ));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(LinalgError::InvalidStructure("row offsets not monotone".into()));
        }
        let nnz = row_offsets[nrows];
        if col_indices.len() != nnz || values.len() != nnz {
            return Err(LinalgError::InvalidStructure(
                "column and value arrays must have length nnz".into(),
            ));
        }
        for i in 0..nrows {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidStructure(format!(
                    "row {i}: column indices not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(LinalgError::InvalidStructure(format!(
                    "row {i}: column index out of range"
                )));
            }
        }
        Ok(Self { nrows, ncols, row_offsets, col_indices, values })
    }

    /// Zero matrix on the given per-row column pattern (each row sorted, unique).
    pub fn from_pattern(ncols: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        let values = vec![T::zero(); col_indices.len()];
        Self { nrows: rows.len(), ncols, row_offsets, col_indices, values }
    }

    /// Assembles from `(row, col, value)` triplets, summing duplicates in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self { nrows, ncols, row_offsets, col_indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Dense row-major input, dropping exact zeros. Mostly for tests and small systems.
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense input");
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Storage position of entry `(i, j)` if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        let cols = &self.col_indices[start..self.row_offsets[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |k| self.values[k])
    }

    /// Adds `v` to entry `(i, j)`; the entry must exist in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
    }

    /// `Σ cᵢ·Aᵢ` over matrices sharing one sparsity pattern.
    pub fn linear_combination(terms: &[(T, &Self)]) -> Self {
        let (_, first) = terms.first().expect("at least one term");
        let mut out = (*first).clone();
        out.values.iter_mut().for_each(|v| *v = T::zero());
        for &(c, m) in terms {
            assert!(out.same_pattern(m), "linear combination needs a shared pattern");
            for (o, &v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        out
    }

    pub fn scale(&mut self, c: T) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x`
    pub fn mul_vec_transpose(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                y[self.col_indices[k]] += self.values[k] * xi;
            }
        }
        y
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[T]) -> T {
        crate::scalar::dot(x, &self.mul_vec(x))
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let c = self.col_indices[k];
                col_indices[next[c]] = i;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_offsets, col_indices, values }
    }

    /// Replaces each listed row by the corresponding identity row.
    ///
    /// The diagonal must be part of the pattern for square matrices.
    pub fn set_identity_rows(&mut self, rows: &[usize]) {
        for &i in rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                self.values[k] = if self.col_indices[k] == i { T::one() } else { T::zero() };
            }
            assert!(self.position(i, i).is_some(), "row {i} lacks a diagonal entry");
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> T {
        let t = self.transpose();
        let mut worst = T::zero();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            let (tcols, tvals) = t.row(i);
            for (&j, &v) in tcols.iter().zip(tvals) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in dense.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        dense
    }

    /// Stacks `[[a, b], [c, d]]` into one matrix; `None` blocks are empty.
    pub fn block_2x2(
        a: &Self,
        b: Option<&Self>,
        c: Option<&Self>,
        d: Option<&Self>,
    ) -> Self {
        let (n0, m0) = a.shape();
        let n1 = c.map(Self::nrows).or(d.map(Self::nrows)).unwrap_or(0);
        let m1 = b.map(Self::ncols).or(d.map(Self::ncols)).unwrap_or(0);
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut push_row = |left: Option<(&Self, usize)>, right: Option<(&Self, usize)>| {
            if let Some((m, i)) = left {
                let (cols, vals) = m.row(i);
                col_indices.extend_from_slice(cols);
                values.extend_from_slice(vals);
            }
            if let Some((m, i)) = right {
                let (cols, vals) = m.row(i);
                col_indices.extend(cols.iter().map(|&j| j + m0));
                values.extend_from_slice(vals);
            }
            row_offsets.push(col_indices.len());
        };
        for i in 0..n0 {
            push_row(Some((a, i)), b.map(|m| (m, i)));
        }
        for i in 0..n1 {
            push_row(c.map(|m| (m, i)), d.map(|m| (m, i)));
        }
        Self { nrows: n0 + n1, ncols: m0 + m1, row_offsets, col_indices, values }
    }
}

impl<T: Real> LinearOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows, self.ncols, "operator must be square");
        self.nrows
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::<f64>::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 2.0), (0, 1, 3.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn rejects_unsorted_columns() {
        let err = CsrMatrix::<f64>::try_from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn transpose_matches_dense() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 4.0]]);
        let t = m.transpose();
        assert_eq!(t.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(m.mul_vec_transpose(&[1.0, 1.0]), t.mul_vec(&[1.0, 1.0]));
    }

    #[test]
    fn identity_rows_and_blocks() {
        let mut a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        a.set_identity_rows(&[1]);
        assert_eq!(a.to_dense(), vec![vec![2.0, 1.0], vec![0.0, 1.0]]);
        let b = CsrMatrix::from_dense(&[vec![5.0], vec![6.0]]);
        let c = b.transpose();
        let k = CsrMatrix::block_2x2(&a, Some(&b), Some(&c), None);
        assert_eq!(
            k.to_dense(),
            vec![vec![2.0, 1.0, 5.0], vec![0.0, 1.0, 6.0], vec![5.0, 6.0, 0.0]]
        );
    }

    #[test]
    fn linear_combination_on_shared_pattern() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let c = CsrMatrix::linear_combination(&[(2.0, &a), (-1.0, &b)]);
        assert_eq!(c.to_dense(), vec![vec![1.0, 3.0], vec![5.0, 7.0]]);
    }
}
