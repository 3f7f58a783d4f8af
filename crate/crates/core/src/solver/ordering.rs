//! Fill-reducing ordering on the symmetric pattern.
//!
//! Only nodes with a nonzero diagonal are ordered by approximate minimum
//! degree. A node with a structurally zero diagonal (a Lagrange multiplier
//! such as a cell value of `u_h`) is eliminated right after the last of its
//! neighbours, when its pivot is a nonzero Schur complement entry. Rows much
//! denser than the rest (a global constraint) go last.

use faer::sparse::linalg::amd;

use crate::sparse::CsrMatrix;

/// Rows with many more entries than a sparse row of a mesh problem.
pub(crate) fn dense_rows(m: &CsrMatrix) -> Vec<bool> {
    let limit = 16usize.max((10.0 * (m.nrows as f64).sqrt()) as usize);
    (0..m.nrows).map(|i| m.indptr[i + 1] - m.indptr[i] > limit).collect()
}

/// Pattern of the nodes taking part in the ordering: nonzero diagonal and
/// not dense. Includes the fill every multiplier node will create between
/// its neighbours.
struct Reduced {
    dense: Vec<bool>,
    zero_diag: Vec<bool>,
    /// Sorted neighbours including the node itself; empty for other nodes.
    pattern: Vec<Vec<usize>>,
}

impl Reduced {
    fn new(m: &CsrMatrix) -> Reduced {
        let n = m.nrows;
        let dense = dense_rows(m);
        let zero_diag: Vec<bool> = (0..n).map(|i| m.get(i, i) == 0.0).collect();
        let primary = |i: usize| !dense[i] && !zero_diag[i];
        let mut pattern = vec![Vec::new(); n];
        for i in (0..n).filter(|&i| !dense[i]) {
            if primary(i) {
                for (j, _) in m.row(i) {
                    if j != i && primary(j) {
                        pattern[i].push(j);
                        pattern[j].push(i);
                    }
                }
            } else {
                let nb: Vec<usize> = m.row(i).map(|(j, _)| j).filter(|&j| primary(j)).collect();
                for &a in &nb {
                    pattern[a].extend(nb.iter().copied().filter(|&b| b != a));
                }
            }
        }
        for (i, p) in pattern.iter_mut().enumerate() {
            if primary(i) {
                p.push(i);
            }
            p.sort_unstable();
            p.dedup();
        }
        Reduced {
            dense,
            zero_diag,
            pattern,
        }
    }

    fn is_primary(&self, i: usize) -> bool {
        !self.dense[i] && !self.zero_diag[i]
    }

    /// Full order from an order of the primary nodes: each multiplier node
    /// follows its last primary neighbour, dense nodes go last.
    fn complete(&self, m: &CsrMatrix, primary_order: Vec<usize>) -> Vec<usize> {
        let n = m.nrows;
        let mut position = vec![0usize; n];
        for (k, &i) in primary_order.iter().enumerate() {
            position[i] = k;
        }
        let mut after: Vec<Vec<usize>> = vec![Vec::new(); primary_order.len() + 1];
        for i in (0..n).filter(|&i| self.zero_diag[i] && !self.dense[i]) {
            let slot = m
                .row(i)
                .map(|(j, _)| j)
                .filter(|&j| self.is_primary(j))
                .map(|j| position[j] + 1)
                .max()
                .unwrap_or(primary_order.len());
            after[slot].push(i);
        }
        let mut order = Vec::with_capacity(n);
        order.extend(after[0].iter().copied());
        for (k, &i) in primary_order.iter().enumerate() {
            order.push(i);
            order.extend(after[k + 1].iter().copied());
        }
        order.extend((0..n).filter(|&i| self.dense[i]));
        debug_assert_eq!(order.len(), n);
        order
    }
}

/// Approximate minimum degree order: `order[k]` is the node eliminated at
/// step `k`.
pub fn minimum_degree(m: &CsrMatrix) -> Vec<usize> {
    let n = m.nrows;
    let red = Reduced::new(m);
    let nodes: Vec<usize> = (0..n).filter(|&i| red.is_primary(i)).collect();
    let mut local = vec![usize::MAX; n];
    for (k, &i) in nodes.iter().enumerate() {
        local[i] = k;
    }
    let np = nodes.len();
    let mut col_ptr = Vec::with_capacity(np + 1);
    let mut row_idx = Vec::new();
    col_ptr.push(0);
    for &i in &nodes {
        row_idx.extend(red.pattern[i].iter().map(|&j| local[j]));
        col_ptr.push(row_idx.len());
    }
    let pattern = faer::sparse::SymbolicSparseColMatRef::new_checked(np, np, &col_ptr, None, &row_idx);
    let mut perm = vec![0usize; np];
    let mut perm_inv = vec![0usize; np];
    let mut mem = faer::dyn_stack::MemBuffer::new(amd::order_scratch::<usize>(np, row_idx.len()));
    let primary_order = match amd::order(
        &mut perm,
        &mut perm_inv,
        pattern,
        amd::Control::default(),
        faer::dyn_stack::MemStack::new(&mut mem),
    ) {
        Ok(_) => perm.iter().map(|&k| nodes[k]).collect(),
        Err(_) => nodes,
    };
    red.complete(m, primary_order)
}
