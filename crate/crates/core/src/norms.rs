//! Error norms of discrete solutions against manufactured fields.
//!
//! All volume norms are computed element by element with a triangle rule
//! whose points are strictly inside the elements, so exact fields are
//! evaluated away from edges and singular corners.

use crate::mesh::{Mesh, Point};
use crate::poisson::jump_trace;
use crate::quadrature::TriangleRule;
use crate::space::{FieldCR, FieldP0};
use crate::stokes::deviator;
use crate::{Error, Result};

/// `‖f - f_h‖_{L²(Ω)}` for a CR field with `N` components.
pub fn l2_error_cr<const N: usize, F>(mesh: &Mesh, rule: &TriangleRule, exact: F, field: &FieldCR) -> f64
where
    F: Fn(Point, Point) -> [f64; N],
{
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        for (p, w, bary) in rule.map(mesh.triangle_points(t)) {
            let e = exact(p, p);
            let h: [f64; N] = field.value(mesh, t, bary);
            acc += w * e.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// `‖f - f_h‖_{L²(Ω)}` for a piecewise-constant field with `N` components.
pub fn l2_error_p0<const N: usize, F>(mesh: &Mesh, rule: &TriangleRule, exact: F, field: &FieldP0) -> f64
where
    F: Fn(Point, Point) -> [f64; N],
{
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        for (p, w, _) in rule.map(mesh.triangle_points(t)) {
            let e = exact(p, p);
            acc += w * (0..N).map(|c| (e[c] - field.value(t, c)).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// Divergence error together with the best approximation of the exact
/// divergence by piecewise constants, both per triangle.
#[derive(Clone, Debug)]
pub struct DivergenceError {
    pub global: f64,
    /// `‖div(σ - σ_h)‖_T`.
    pub local: Vec<f64>,
    /// `‖div σ - Π₀ div σ‖_T`.
    pub best: Vec<f64>,
}

impl DivergenceError {
    /// Largest `|local - best|` and the triangle where it occurs.
    pub fn worst_deviation(&self) -> (usize, f64) {
        self.local
            .iter()
            .zip(&self.best)
            .map(|(a, b)| (a - b).abs())
            .enumerate()
            .fold((0, 0.0), |acc, (t, d)| if d > acc.1 { (t, d) } else { acc })
    }

    /// Errors unless every triangle satisfies `|local - best| <= tol`.
    pub fn check_identity(&self, tol: f64) -> Result<()> {
        let (triangle, deviation) = self.worst_deviation();
        if deviation > tol || !deviation.is_finite() {
            return Err(Error::DivergenceIdentity {
                triangle,
                deviation,
                tol,
            });
        }
        Ok(())
    }
}

/// Row-wise divergence error of a CR field with `2R` components against the
/// exact divergence `div_exact` (`R = 1` for vectors, `R = 2` for tensors).
pub fn divergence_error<const R: usize, F>(
    mesh: &Mesh,
    rule: &TriangleRule,
    div_exact: F,
    field: &FieldCR,
) -> DivergenceError
where
    F: Fn(Point) -> [f64; R],
{
    let nt = mesh.num_triangles();
    let mut local = Vec::with_capacity(nt);
    let mut best = Vec::with_capacity(nt);
    let mut vals: Vec<(f64, [f64; R])> = Vec::with_capacity(rule.weights.len());
    for t in 0..nt {
        let area = mesh.triangles()[t].area;
        vals.clear();
        vals.extend(rule.map(mesh.triangle_points(t)).map(|(p, w, _)| (w, div_exact(p))));
        let mut mean = [0.0; R];
        for (w, v) in &vals {
            for r in 0..R {
                mean[r] += w * v[r];
            }
        }
        let div_h: [f64; R] = std::array::from_fn(|r| field.divergence(mesh, t, r));
        let (mut e, mut b) = (0.0, 0.0);
        for (w, v) in &vals {
            for r in 0..R {
                e += w * (v[r] - div_h[r]).powi(2);
                b += w * (v[r] - mean[r] / area).powi(2);
            }
        }
        local.push(e.sqrt());
        best.push(b.sqrt());
    }
    let global = local.iter().map(|v| v * v).sum::<f64>().sqrt();
    DivergenceError { global, local, best }
}

/// `(Σ_e ∫_e γ_e |⟦σ_h⟧|²)^{1/2}` over interior edges, with the normal jump
/// taken row-wise for tensor fields.
pub fn jump_seminorm(mesh: &Mesh, field: &FieldCR, gamma: &[f64]) -> f64 {
    let rows = field.dofs.ncomp / 2;
    let mut acc = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !edge.is_interior() || gamma[e] == 0.0 {
            continue;
        }
        let (trace, w) = jump_trace(mesh, e);
        let nu = edge.normal;
        for r in 0..rows {
            let mut jump = [0.0; 2];
            for &(ek, vals) in &trace {
                let flux = field.coeff(ek, 2 * r) * nu.x + field.coeff(ek, 2 * r + 1) * nu.y;
                jump[0] += vals[0] * flux;
                jump[1] += vals[1] * flux;
            }
            acc += gamma[e] * (w[0] * jump[0] * jump[0] + w[1] * jump[1] * jump[1]);
        }
    }
    acc.sqrt()
}

/// `‖p - p_h‖` with `p_h = -½ tr σ_h`.
pub fn pressure_error<F>(mesh: &Mesh, rule: &TriangleRule, pressure: F, sigma_h: &FieldCR) -> f64
where
    F: Fn(Point, Point) -> f64,
{
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        for (p, w, bary) in rule.map(mesh.triangle_points(t)) {
            let s: [f64; 4] = sigma_h.value(mesh, t, bary);
            let ph = -0.5 * (s[0] + s[3]);
            acc += w * (pressure(p, p) - ph).powi(2);
        }
    }
    acc.sqrt()
}

/// `‖(σ - σ_h)^d‖`.
pub fn deviatoric_error<F>(mesh: &Mesh, rule: &TriangleRule, sigma: F, sigma_h: &FieldCR) -> f64
where
    F: Fn(Point, Point) -> [f64; 4],
{
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        for (p, w, bary) in rule.map(mesh.triangle_points(t)) {
            let s = sigma(p, p);
            let h: [f64; 4] = sigma_h.value(mesh, t, bary);
            let d = deviator(std::array::from_fn(|i| s[i] - h[i]));
            acc += w * d.iter().map(|v| v * v).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// `e_p <= (√2/2) e_σ`, which holds pointwise since `|tr τ| <= √2 |τ|`.
pub fn check_pressure_bound(e_p: f64, e_sigma: f64) -> Result<()> {
    let bound = std::f64::consts::FRAC_1_SQRT_2 * e_sigma;
    if e_p > bound * (1.0 + 1e-12) || !e_p.is_finite() {
        return Err(Error::PressureBound { e_p, bound });
    }
    Ok(())
}

/// `-2 log(e_k / e_{k-1}) / log(N_k / N_{k-1})`, undefined for non-positive
/// errors.
pub fn eoc(e_prev: f64, e: f64, dofs_prev: usize, dofs: usize) -> Option<f64> {
    if !(e_prev > 0.0 && e > 0.0) || dofs == dofs_prev {
        return None;
    }
    let r = -2.0 * (e / e_prev).ln() / (dofs as f64 / dofs_prev as f64).ln();
    r.is_finite().then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainTag};
    use crate::quadrature::{edge_rule, tri_rule};
    use crate::space::{interp_cr, DofMap};

    #[test]
    fn eoc_examples() {
        let r = eoc(3.708e-1, 8.427e-2, 212, 808).unwrap();
        assert!((r - 2.21).abs() < 5e-3, "{r}");
        assert!((eoc(1.0, 0.5, 100, 400).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(eoc(0.3, 0.3, 100, 400).unwrap(), 0.0);
        assert!(eoc(0.0, 0.1, 100, 400).is_none());
    }

    #[test]
    fn affine_interpolant_has_no_error() {
        let mesh = build_initial_mesh(DomainTag::MShape).unwrap().refine_uniform();
        let f = |p: Point, _: Point| [1.0 + 2.0 * p.x - p.y, 0.5 * p.y];
        let field = interp_cr(&mesh, edge_rule(3).unwrap(), f).unwrap();
        assert!(l2_error_cr(&mesh, tri_rule(4).unwrap(), f, &field) < 1e-13);
    }

    #[test]
    fn zero_exact_gives_field_norm() {
        let mesh = build_initial_mesh(DomainTag::CrackDiamond).unwrap();
        let field = FieldCR::new(DofMap::cr(&mesh, 2), vec![1.0; 2 * mesh.num_edges()]).unwrap();
        let e = l2_error_cr(&mesh, tri_rule(2).unwrap(), |_, _| [0.0, 0.0], &field);
        assert!((e - 2.0).abs() < 1e-13);
    }

    #[test]
    fn continuous_fields_have_no_jump() {
        let mesh = build_initial_mesh(DomainTag::MShape).unwrap().refine_uniform();
        let gamma = crate::poisson::penalty_table(&mesh, 1.0);
        let affine = interp_cr(&mesh, edge_rule(2).unwrap(), |p, _| [p.x - 3.0 * p.y, 2.0 * p.x]).unwrap();
        assert!(jump_seminorm(&mesh, &affine, &gamma) < 1e-13);
        let mut noisy = affine.clone();
        for (i, c) in noisy.coeffs.iter_mut().enumerate() {
            *c += ((i * 37) % 11) as f64 * 0.1;
        }
        assert!(jump_seminorm(&mesh, &noisy, &gamma) > 1e-3);
    }

    #[test]
    fn pressure_bound() {
        assert!(check_pressure_bound(0.7, 1.0).is_ok());
        assert!(check_pressure_bound(0.71, 1.0).is_err());
    }
}
