//! Preconditioned MINRES for symmetric (indefinite) systems.
//!
//! The recurrences follow Paige and Saunders; the preconditioner is a
//! positive diagonal. The estimate of the residual produced by the
//! recurrences is in the preconditioner norm, so the true residual is
//! checked before stopping and the iteration is restarted from the current
//! iterate if it is still too large.

use crate::sparse::{dot, norm2, CsrMatrix};

pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn minres(m: &CsrMatrix, b: &[f64], inv_diag: &[f64], tol: f64, max_iter: usize) -> MinresOutcome {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return MinresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut total = 0;
    let mut inner_tol = 0.1 * tol;
    while total < max_iter {
        let r = residual(m, b, &x);
        let rnorm = norm2(&r);
        if rnorm <= tol * bnorm {
            break;
        }
        let (dx, its) = minres_cycle(m, &r, inv_diag, inner_tol * bnorm / rnorm, max_iter - total);
        total += its;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        if its == 0 {
            break;
        }
        inner_tol *= 0.5;
    }
    let relative_residual = norm2(&residual(m, b, &x)) / bnorm;
    MinresOutcome {
        x,
        iterations: total,
        relative_residual,
    }
}

fn residual(m: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mx = m.matvec(x);
    b.iter().zip(&mx).map(|(bi, ai)| bi - ai).collect()
}

/// One MINRES run for `M x = r` from `x = 0`, stopping when the recurrence
/// estimate drops below `rtol` relative to the initial preconditioned norm.
fn minres_cycle(m: &CsrMatrix, rhs: &[f64], inv_diag: &[f64], rtol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(inv_diag).map(|(a, d)| a * d).collect() };

    let mut r1 = rhs.to_vec();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 || !beta1.is_finite() {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        y = m.matvec(&v);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        y = precond(&r2);
        oldb = beta;
        beta = dot(&r2, &y);
        if beta < 0.0 {
            return (x, itn);
        }
        beta = beta.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= rtol * beta1 || beta == 0.0 {
            return (x, itn);
        }
    }
    (x, max_iter)
}
