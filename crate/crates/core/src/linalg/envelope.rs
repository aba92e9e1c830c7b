use std::collections::VecDeque;

use super::{CsrMatrix, LinalgError, Preconditioner};
use crate::scalar::Real;

/// Reverse Cuthill-McKee ordering of the nonzero structure of `a`
/// (symmetrized). `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v != T::zero() {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nb in &mut adj {
        nb.sort_by_key(|&j| (degree[j], j));
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, &degree, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if !visited[u] {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Breadth-first levels from `root`: (eccentricity, last level).
fn bfs_levels(adj: &[Vec<usize>], root: usize) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut last = vec![root];
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                if dist[u] > depth {
                    depth = dist[u];
                    last.clear();
                }
                last.push(u);
                queue.push_back(u);
            }
        }
    }
    (depth, last)
}

/// George-Liu style search for a node of (nearly) maximal eccentricity in
/// the component of `seed`.
fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(adj, root);
    loop {
        let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).expect("nonempty level");
        let (e, l) = bfs_levels(adj, candidate);
        if e <= ecc {
            return root;
        }
        root = candidate;
        ecc = e;
        last = l;
    }
}

/// Envelope (skyline) Cholesky factorization `P A Pᵀ = L Lᵀ` of a symmetric
/// positive definite matrix under a reverse Cuthill-McKee ordering.
///
/// Row `i` of `L` is stored densely from its first nonzero column to the
/// diagonal; the ordering keeps that envelope narrow for mesh matrices.
pub struct EnvelopeCholesky<T> {
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> EnvelopeCholesky<T> {
    /// Factors `a`, reading only its lower triangle (after permutation).
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(LinalgError::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if v != T::zero() {
                    let (hi, lo) = if j > i { (j, i) } else { (i, j) };
                    first[hi] = first[hi].min(lo);
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for i in 0..n {
            offsets.push(offsets[i] + i - first[i] + 1);
        }
        let mut values = vec![T::zero(); offsets[n]];
        for old in 0..n {
            let i = inv[old];
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i && v != T::zero() {
                    values[offsets[i] + j - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let row_j = offsets[j];
                let mut s = values[row_i + j - fi];
                let a_seg = &values[row_i + start - fi..row_i + j - fi];
                let b_seg = &values[row_j + start - fj..row_j + j - fj];
                for (&x, &y) in a_seg.iter().zip(b_seg) {
                    s -= x * y;
                }
                let pivot = values[row_j + j - fj];
                values[row_i + j - fi] = s / pivot;
            }
            let mut d = values[row_i + i - fi];
            for &x in &values[row_i..row_i + i - fi] {
                d -= x * x;
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite(perm[i]));
            }
            values[row_i + i - fi] = d.sqrt();
        }
        Ok(Self { perm, first, offsets, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); b.len()];
        self.apply(b, &mut x);
        x
    }
}

impl<T: Real> Preconditioner<T> for EnvelopeCholesky<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = self.perm.len();
        let mut y: Vec<T> = self.perm.iter().map(|&old| r[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let mut acc = y[i];
            for (&l, &yk) in row[..i - fi].iter().zip(&y[fi..i]) {
                acc -= l * yk;
            }
            y[i] = acc / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, &l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            z[old] = y[new];
        }
    }
}
