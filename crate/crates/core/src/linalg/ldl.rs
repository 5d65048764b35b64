//! Sparse `LDLᵀ` factorization of the regularized Gram matrix `A_B A_Bᵀ + σI`.
//!
//! The numeric kernels follow the classic up-looking scheme: an elimination
//! tree is computed symbolically, then each row of `L` is obtained by a
//! sparse triangular solve restricted to the row's reach in that tree.
//! Rows are reordered by a greedy minimum-degree heuristic first.

use std::collections::BTreeSet;

use super::{CsrMatrix, LinalgError};

/// `P (A_B A_Bᵀ + σI) Pᵀ = L D Lᵀ` for a row subset `B` of some constraint
/// matrix. `L` is unit lower triangular and stored by columns without its
/// diagonal.
#[derive(Debug, Clone)]
pub struct RegularizedFactorization {
    row_subset: Vec<usize>,
    sigma: f64,
    /// `perm[k]` is the Gram row placed at pivot position `k`.
    perm: Vec<usize>,
    iperm: Vec<usize>,
    l_colptr: Vec<usize>,
    l_rowind: Vec<usize>,
    l_values: Vec<f64>,
    diag: Vec<f64>,
    /// Unregularized Gram matrix, full symmetric pattern, original order.
    gram: CsrMatrix,
}

impl RegularizedFactorization {
    /// Factors `A_B A_Bᵀ + σI` where the rows of `a_b` are the rows of `B`.
    /// `row_subset` records which constraint rows these are and is carried
    /// along for the caller's bookkeeping.
    pub fn factor(a_b: &CsrMatrix, row_subset: Vec<usize>, sigma: f64) -> Result<Self, LinalgError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(LinalgError::InvalidSigma(sigma));
        }
        if row_subset.len() != a_b.nrows() {
            return Err(LinalgError::DimensionMismatch {
                expected: a_b.nrows(),
                found: row_subset.len(),
            });
        }
        for i in 0..a_b.nrows() {
            if a_b.row(i).1.iter().any(|v| !v.is_finite()) {
                return Err(LinalgError::NonFinite);
            }
        }

        let gram = gram_matrix(a_b);
        let dim = gram.nrows();
        let perm = minimum_degree_ordering(&gram);
        let mut iperm = vec![0; dim];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        // Upper triangle of the permuted matrix, by columns.
        let mut up_colptr = Vec::with_capacity(dim + 1);
        let mut up_rowind = Vec::new();
        let mut up_values = Vec::new();
        up_colptr.push(0);
        for k in 0..dim {
            let (cols, vals) = gram.row(perm[k]);
            let mut has_diag = false;
            for (&j, &v) in cols.iter().zip(vals) {
                let i = iperm[j];
                if i < k {
                    up_rowind.push(i);
                    up_values.push(v);
                } else if i == k {
                    up_rowind.push(k);
                    up_values.push(v + sigma);
                    has_diag = true;
                }
            }
            if !has_diag {
                up_rowind.push(k);
                up_values.push(sigma);
            }
            up_colptr.push(up_rowind.len());
        }

        let (parent, l_colptr) = symbolic(dim, &up_colptr, &up_rowind);
        let nnz_l = l_colptr[dim];
        let mut l_rowind = vec![0usize; nnz_l];
        let mut l_values = vec![0.0; nnz_l];
        let mut diag = vec![0.0; dim];
        numeric(
            dim,
            &up_colptr,
            &up_rowind,
            &up_values,
            &parent,
            &l_colptr,
            &mut l_rowind,
            &mut l_values,
            &mut diag,
        )?;

        Ok(Self {
            row_subset,
            sigma,
            perm,
            iperm,
            l_colptr,
            l_rowind,
            l_values,
            diag,
            gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn row_subset(&self) -> &[usize] {
        &self.row_subset
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Entries of the unit lower factor `L` as `(row, col, value)` in pivot
    /// order, diagonal excluded.
    pub fn l_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |j| {
            let span = self.l_colptr[j]..self.l_colptr[j + 1];
            self.l_rowind[span.clone()]
                .iter()
                .zip(&self.l_values[span])
                .map(move |(&i, &v)| (i, j, v))
        })
    }

    /// Number of stored off-diagonal entries of `L`.
    pub fn nnz_l(&self) -> usize {
        self.l_values.len()
    }

    /// Solves `(A_B A_Bᵀ + σI) s = r`.
    pub fn solve_gram(&self, r: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if r.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), found: r.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| r[p]).collect();
        for j in 0..self.dim() {
            let xj = x[j];
            for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                x[self.l_rowind[p]] -= self.l_values[p] * xj;
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.diag) {
            *xj /= dj;
        }
        for j in (0..self.dim()).rev() {
            let mut xj = x[j];
            for p in self.l_colptr[j]..self.l_colptr[j + 1] {
                xj -= self.l_values[p] * x[self.l_rowind[p]];
            }
            x[j] = xj;
        }
        Ok((0..self.dim()).map(|i| x[self.iperm[i]]).collect())
    }

    /// Approximately solves the unregularized system `A_B A_Bᵀ s = r` by
    /// iterative refinement with the regularized factor as preconditioner.
    /// Converges to the exact solution when `A_B` has full row rank, and to
    /// a solution of the consistent part otherwise.
    pub fn solve_gram_unregularized(&self, r: &[f64], max_steps: usize) -> Result<Vec<f64>, LinalgError> {
        let mut s = self.solve_gram(r)?;
        let scale = r.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        for _ in 0..max_steps {
            let gs = self.gram.mul_vec(&s);
            let resid: Vec<f64> = r.iter().zip(&gs).map(|(a, b)| a - b).collect();
            let rn = resid.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if rn <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            let ds = self.solve_gram(&resid)?;
            for (si, di) in s.iter_mut().zip(&ds) {
                *si += di;
            }
        }
        Ok(s)
    }

    /// `(A_B A_Bᵀ + σI) v`
    pub fn apply_regularized(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.gram.mul_vec(v);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += self.sigma * vi;
        }
        out
    }

    pub fn gram(&self) -> &CsrMatrix {
        &self.gram
    }
}

/// Symmetric Gram matrix `A Aᵀ` with its full pattern stored by rows.
fn gram_matrix(a: &CsrMatrix) -> CsrMatrix {
    let k = a.nrows();
    let csc = a.csc();
    let mut acc = vec![0.0; k];
    let mut mark = vec![usize::MAX; k];
    let mut touched: Vec<usize> = Vec::new();
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        touched.clear();
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            for p in csc.colptr[c]..csc.colptr[c + 1] {
                let j = csc.rowind[p];
                if mark[j] != i {
                    mark[j] = i;
                    acc[j] = 0.0;
                    touched.push(j);
                }
                acc[j] += v * csc.values[p];
            }
        }
        touched.sort_unstable();
        let row: Vec<(usize, f64)> = touched
            .iter()
            .filter(|&&j| acc[j] != 0.0 || j == i)
            .map(|&j| (j, acc[j]))
            .collect();
        rows.push(row);
    }
    CsrMatrix::from_sorted_rows(k, rows)
}

/// Greedy minimum-degree elimination order on the graph of a symmetric
/// pattern. Ties go to the smallest index.
pub fn minimum_degree_ordering(pattern: &CsrMatrix) -> Vec<usize> {
    let n = pattern.nrows();
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| pattern.row(i).0.iter().copied().filter(|&j| j != i).collect())
        .collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .expect("vertex left to eliminate");
        done[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (a, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
    }
    order
}

/// Elimination tree and column pointers of `L`.
fn symbolic(n: usize, colptr: &[usize], rowind: &[usize]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut parent = vec![None; n];
    let mut flag = vec![0usize; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for &i0 in &rowind[colptr[k]..colptr[k + 1]] {
            let mut i = i0;
            if i >= k {
                continue;
            }
            while flag[i] != k {
                if parent[i].is_none() {
                    parent[i] = Some(k);
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i].expect("parent set above");
            }
        }
    }
    let mut lp = vec![0usize; n + 1];
    for k in 0..n {
        lp[k + 1] = lp[k] + lnz[k];
    }
    (parent, lp)
}

#[allow(clippy::too_many_arguments)]
fn numeric(
    n: usize,
    colptr: &[usize],
    rowind: &[usize],
    values: &[f64],
    parent: &[Option<usize>],
    lp: &[usize],
    li: &mut [usize],
    lx: &mut [f64],
    d: &mut [f64],
) -> Result<(), LinalgError> {
    let mut y = vec![0.0; n];
    let mut pattern = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        y[k] = 0.0;
        let mut top = n;
        flag[k] = k;
        for p in colptr[k]..colptr[k + 1] {
            let mut i = rowind[p];
            if i > k {
                continue;
            }
            y[i] += values[p];
            let mut len = 0;
            while flag[i] != k {
                pattern[len] = i;
                len += 1;
                flag[i] = k;
                i = parent[i].expect("reach follows the elimination tree");
            }
            while len > 0 {
                top -= 1;
                len -= 1;
                pattern[top] = pattern[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for &i in &pattern[top..n] {
            let yi = y[i];
            y[i] = 0.0;
            let end = lp[i] + lnz[i];
            for p in lp[i]..end {
                y[li[p]] -= lx[p] * yi;
            }
            let l_ki = yi / d[i];
            d[k] -= l_ki * yi;
            li[end] = k;
            lx[end] = l_ki;
            lnz[i] += 1;
        }
        if !(d[k] > 0.0 && d[k].is_finite()) {
            return Err(LinalgError::NotPositiveDefinite { pivot: k });
        }
    }
    Ok(())
}
