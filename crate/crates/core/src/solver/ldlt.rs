//! Symmetric indefinite factorisation `P A Pᵀ = L B Lᵀ`.
//!
//! A supernodal factorisation whose dense kernels use Bunch-Kaufman 1x1 and
//! 2x2 pivots inside each supernode, under a fill-reducing order fixed in
//! advance. Pivots never leave a supernode, so the order must already make
//! every leading block solvable; zero-diagonal rows placed after their
//! neighbours and constraint rows placed last do that.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub struct SymmetricFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl SymmetricFactor {
    /// Factorises the symmetric matrix `m` (only its lower triangle is read)
    /// with `order[k]` eliminated at step `k`.
    pub fn factor(m: &CsrMatrix, order: &[usize]) -> Result<SymmetricFactor> {
        let n = m.nrows;
        // CSR of a symmetric matrix is its CSC
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &m.indptr, None, &m.indices);
        let a = SparseColMatRef::new(pattern, &m.data);
        let mut inverse = vec![0usize; n];
        for (k, &i) in order.iter().enumerate() {
            inverse[i] = k;
        }
        let perm = PermRef::new_checked(order, &inverse, n);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let symbolic = factorize_symbolic_cholesky(pattern, Side::Lower, SymmetricOrdering::Custom(perm), params)
            .map_err(|_| Error::OutOfMemory { n })?;

        let par = Par::Seq;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut forward = vec![0usize; n];
        let mut inv = vec![0usize; n];
        let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()))
            .map_err(|_| Error::OutOfMemory { n })?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut forward,
            &mut inv,
            a,
            Side::Lower,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        );
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { step: i, n });
        }
        Ok(SymmetricFactor {
            symbolic,
            values,
            subdiag,
            forward,
            inverse: inv,
        })
    }

    /// Stored entries of `L`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = b.to_vec();
        let perm = PermRef::new_checked(&self.forward, &self.inverse, n);
        let lblt = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        lblt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(&mut x, n, 1),
            Par::Seq,
            MemStack::new(&mut mem),
        );
        x
    }
}
