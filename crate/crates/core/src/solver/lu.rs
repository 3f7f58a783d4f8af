//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Column `k` of the factors is obtained by a sparse triangular solve with
//! the columns already computed, whose nonzero pattern is found by a
//! depth-first search in the graph of `L`. The pivot is the diagonal entry
//! of the symmetrically permuted matrix whenever it is within `tol` of the
//! largest candidate, so a good symmetric ordering is mostly preserved.

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// `P A Q = L U` with unit lower `L`.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    /// `pinv[row] = k`: row pivoted at step `k`.
    pinv: Vec<usize>,
    /// Column eliminated at step `k`.
    q: Vec<usize>,
    off_diagonal: usize,
}

const NONE: usize = usize::MAX;

/// A late row wins a pivot only against candidates this much smaller.
const LATE_WEIGHT: f64 = 1e-6;

impl SparseLu {
    /// Factorises the square matrix whose columns are given by `a`
    /// (compressed columns, i.e. the CSR storage of `Aᵀ`). Rows flagged in
    /// `late` (dense constraint rows) are pivoted on only when the column
    /// offers nothing else, since they would fill every later column.
    pub fn factor(at: &CsrMatrix, q: &[usize], tol: f64, late: &[bool]) -> Result<SparseLu> {
        let n = at.nrows;
        assert_eq!(at.ncols, n);
        assert_eq!(q.len(), n);
        assert_eq!(late.len(), n);
        let guess = 4 * at.nnz() + n;
        let mut lu = SparseLu {
            n,
            lp: Vec::with_capacity(n + 1),
            li: Vec::with_capacity(guess),
            lx: Vec::with_capacity(guess),
            up: Vec::with_capacity(n + 1),
            ui: Vec::with_capacity(guess),
            ux: Vec::with_capacity(guess),
            pinv: vec![NONE; n],
            q: q.to_vec(),
            off_diagonal: 0,
        };
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];

        for k in 0..n {
            lu.lp.push(lu.li.len());
            lu.up.push(lu.ui.len());
            let col = q[k];

            let top = lu.reach(at, col, k, &mut xi, &mut stack, &mut pstack, &mut mark);
            for &i in &xi[top..] {
                x[i] = 0.0;
            }
            for (i, v) in at.row(col) {
                x[i] = v;
            }
            for &j in &xi[top..] {
                let jk = lu.pinv[j];
                if jk == NONE {
                    continue;
                }
                let xj = x[j];
                if xj == 0.0 {
                    continue;
                }
                // skip the unit diagonal stored first
                for p in lu.lp[jk] + 1..lu.lp[jk + 1] {
                    x[lu.li[p]] -= lu.lx[p] * xj;
                }
            }

            let mut ipiv = NONE;
            let mut best = -1.0;
            for &i in &xi[top..] {
                if lu.pinv[i] == NONE {
                    let t = if late[i] { LATE_WEIGHT * x[i].abs() } else { x[i].abs() };
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    lu.ui.push(lu.pinv[i]);
                    lu.ux.push(x[i]);
                }
            }
            if ipiv == NONE || best <= 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { step: k, n });
            }
            let diag = if late[col] { LATE_WEIGHT * x[col].abs() } else { x[col].abs() };
            if lu.pinv[col] == NONE && diag >= tol * best {
                ipiv = col;
            } else {
                lu.off_diagonal += 1;
            }
            let pivot = x[ipiv];
            lu.ui.push(k);
            lu.ux.push(pivot);
            lu.pinv[ipiv] = k;
            lu.li.push(ipiv);
            lu.lx.push(1.0);
            for &i in &xi[top..] {
                if lu.pinv[i] == NONE {
                    let v = x[i] / pivot;
                    if v != 0.0 {
                        lu.li.push(i);
                        lu.lx.push(v);
                    }
                }
                x[i] = 0.0;
            }
        }
        lu.lp.push(lu.li.len());
        lu.up.push(lu.ui.len());
        for i in lu.li.iter_mut() {
            *i = lu.pinv[*i];
        }
        Ok(lu)
    }

    /// Nonzero pattern of `L \ A(:, col)` in topological order, returned as
    /// `xi[top..]`.
    #[allow(clippy::too_many_arguments)]
    fn reach(
        &self,
        at: &CsrMatrix,
        col: usize,
        k: usize,
        xi: &mut [usize],
        stack: &mut [usize],
        pstack: &mut [usize],
        mark: &mut [usize],
    ) -> usize {
        let n = self.n;
        let mut top = n;
        for (start, _) in at.row(col) {
            if mark[start] == k {
                continue;
            }
            // iterative depth-first search from `start`
            let mut head = 0usize;
            stack[0] = start;
            loop {
                let j = stack[head];
                let jk = self.pinv[j];
                if mark[j] != k {
                    mark[j] = k;
                    pstack[head] = if jk == NONE { 0 } else { self.lp[jk] + 1 };
                }
                let end = if jk == NONE { 0 } else { self.lp[jk + 1] };
                let mut done = true;
                let mut p = pstack[head];
                while p < end {
                    let i = self.li[p];
                    p += 1;
                    if mark[i] != k {
                        pstack[head] = p;
                        head += 1;
                        stack[head] = i;
                        done = false;
                        break;
                    }
                }
                if done {
                    top -= 1;
                    xi[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }
        top
    }

    /// Steps where the diagonal pivot was rejected.
    pub fn off_diagonal_pivots(&self) -> usize {
        self.off_diagonal
    }

    pub fn nnz(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            y[j] /= self.ux[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..last {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.q[k]] = y[k];
        }
        x
    }
}
