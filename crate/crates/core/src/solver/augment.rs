//! Augmented Lagrangian form of a saddle-point system.
//!
//! A row `z` with a structurally zero diagonal is a constraint on the
//! unknowns it touches. Adding `w_z M_zj` times row `z` to every such row
//! `j` turns `[[A, Bᵀ], [B, 0]]` into `[[A + BᵀWB, Bᵀ], [B, 0]]`. This is a
//! row operation `E`, so `E M x = E b` has the same solution, but the first
//! block is definite on far more of the space and diagonal pivots survive
//! the elimination. The weight `w_z` scales `BᵀWB` to the size of the
//! diagonal it is added to.

use crate::sparse::{CsrMatrix, TripletMatrix};

pub(crate) struct Augmentation {
    /// `(target, source, factor)`: row `target` += `factor` * row `source`.
    ops: Vec<(usize, usize, f64)>,
}

impl Augmentation {
    /// Row operations for every non-dense zero-diagonal row of `m`.
    pub(crate) fn new(m: &CsrMatrix, dense: &[bool]) -> Augmentation {
        let diag = m.diagonal();
        let mut ops = Vec::new();
        for z in (0..m.nrows).filter(|&z| diag[z] == 0.0 && !dense[z]) {
            let (mut scale, mut sq) = (0.0f64, 0.0);
            for (j, v) in m.row(z) {
                if diag[j] != 0.0 {
                    scale = scale.max(diag[j].abs());
                    sq += v * v;
                }
            }
            if sq == 0.0 {
                continue;
            }
            let w = scale / sq;
            ops.extend(m.row(z).filter(|&(j, _)| diag[j] != 0.0).map(|(j, v)| (j, z, w * v)));
        }
        Augmentation { ops }
    }

    /// `E M`.
    pub(crate) fn matrix(&self, m: &CsrMatrix) -> CsrMatrix {
        let extra: usize = self.ops.iter().map(|&(_, z, _)| m.indptr[z + 1] - m.indptr[z]).sum();
        let mut t = TripletMatrix::with_capacity(m.nrows, m.ncols, m.nnz() + extra);
        for i in 0..m.nrows {
            for (j, v) in m.row(i) {
                t.push(i, j, v);
            }
        }
        for &(j, z, c) in &self.ops {
            for (k, v) in m.row(z) {
                t.push(j, k, c * v);
            }
        }
        t.to_csr()
    }

    /// `v <- E v`. Sources have zero diagonal and targets do not, so no row
    /// is both and the order of the operations does not matter.
    pub(crate) fn apply(&self, v: &mut [f64]) {
        for &(j, z, c) in &self.ops {
            v[j] += c * v[z];
        }
    }
}
