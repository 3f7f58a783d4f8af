//! Practical pseudostress scheme for Stokes with a trace multiplier.
//!
//! Unknowns: the tensor CR pseudostress `σ_h` (four DOFs per edge, row-major),
//! the piecewise-constant velocity `u_h` (two DOFs per triangle) and one
//! scalar multiplier `φ` enforcing `∫_Ω tr σ_h = 0`:
//!
//! ```text
//! [ A_ν  Bᵀ  tᵀ ] [σ]   [G]
//! [ B    0   0  ] [u] = [F]
//! [ t    0   0  ] [φ]   [0]
//! ```
//!
//! `A_ν` is `(1/ν)` times the deviatoric mass plus the penalty on the vector
//! normal jump, `B` the row-wise divergence and `t τ = (1/ν) ∫_Ω tr τ`.

use log::warn;

use crate::exact::StokesCase;
use crate::mesh::Mesh;
use crate::poisson::{add_penalty, boundary_moments, cell_integrals, penalty_table, AssemblyOptions};
use crate::quadrature::{edge_rule, MAX_EDGE_DEGREE};
use crate::space::{inward_probe, DofMap, SpaceKind};
use crate::sparse::{CsrMatrix, TripletMatrix};
use crate::{Error, Result};

/// `τ - ½ tr(τ) I` for a row-major 2x2 tensor.
pub fn deviator(t: [f64; 4]) -> [f64; 4] {
    let h = 0.5 * (t[0] + t[3]);
    [t[0] - h, t[1], t[2], t[3] - h]
}

#[derive(Clone, Debug)]
pub struct StokesSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_sigma: usize,
    pub n_u: usize,
    pub nu: f64,
    /// `γ_e` per edge; zero on boundary edges.
    pub penalty: Vec<f64>,
    /// `∫_Γ g·n` as computed by the edge quadrature.
    pub flux_defect: f64,
}

impl StokesSystem {
    pub fn len(&self) -> usize {
        self.n_sigma + self.n_u + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multiplier_index(&self) -> usize {
        self.n_sigma + self.n_u
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidViscosity(nu))
    }
}

/// Deviatoric mass plus vector-jump penalty, both scaled by `1/ν`.
pub fn assemble_a_h(mesh: &Mesh, dofs: &DofMap, nu: f64, penalty_scale: f64) -> Result<CsrMatrix> {
    check_nu(nu)?;
    dofs.check(mesh, SpaceKind::Cr, 4)?;
    let inv = 1.0 / nu;
    let mut out = TripletMatrix::with_capacity(dofs.len(), dofs.len(), 18 * mesh.num_triangles() + 128 * mesh.num_edges());
    for tri in mesh.triangles() {
        let m = inv * tri.area / 3.0;
        for &e in &tri.edges {
            let (d11, d12, d21, d22) = (dofs.index(e, 0), dofs.index(e, 1), dofs.index(e, 2), dofs.index(e, 3));
            out.push(d11, d11, 0.5 * m);
            out.push(d11, d22, -0.5 * m);
            out.push(d22, d11, -0.5 * m);
            out.push(d22, d22, 0.5 * m);
            out.push(d12, d12, m);
            out.push(d21, d21, m);
        }
    }
    add_penalty(mesh, dofs, &penalty_table(mesh, penalty_scale), 2, inv, &mut out);
    Ok(out.to_csr())
}

/// `B[(T, i), (e, ij)] = |e| n_{T,e,j}`.
pub fn assemble_b_h(mesh: &Mesh, cr: &DofMap, p0: &DofMap) -> Result<CsrMatrix> {
    cr.check(mesh, SpaceKind::Cr, 4)?;
    p0.check(mesh, SpaceKind::P0, 2)?;
    let mut out = TripletMatrix::with_capacity(p0.len(), cr.len(), 12 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (k, &e) in tri.edges.iter().enumerate() {
            let n = mesh.outward_normal(t, k);
            let len = mesh.edges()[e].length;
            for i in 0..2 {
                out.push(p0.index(t, i), cr.index(e, 2 * i), len * n.x);
                out.push(p0.index(t, i), cr.index(e, 2 * i + 1), len * n.y);
            }
        }
    }
    Ok(out.to_csr())
}

/// Coefficients of `τ ↦ (1/ν) ∫_Ω tr τ` on the tensor CR DOFs.
pub fn trace_row(mesh: &Mesh, dofs: &DofMap, nu: f64) -> Result<Vec<f64>> {
    check_nu(nu)?;
    dofs.check(mesh, SpaceKind::Cr, 4)?;
    let mut row = vec![0.0; dofs.len()];
    for tri in mesh.triangles() {
        let m = tri.area / (3.0 * nu);
        for &e in &tri.edges {
            row[dofs.index(e, 0)] += m;
            row[dofs.index(e, 3)] += m;
        }
    }
    Ok(row)
}

/// `∫_Γ g·n` and `(∫_Γ |g|²)^{1/2}`.
pub fn boundary_flux(mesh: &Mesh, case: &StokesCase, degree: usize) -> Result<(f64, f64)> {
    let rule = edge_rule(degree.clamp(1, MAX_EDGE_DEGREE))?;
    let (mut flux, mut norm2) = (0.0, 0.0);
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_interior() {
            continue;
        }
        let [a, b] = mesh.edge_points(e);
        for (p, w, _) in rule.map(a, b) {
            let g = case.g(p, inward_probe(mesh, edge.neighbors[0], p));
            flux += w * (g[0] * edge.normal.x + g[1] * edge.normal.y);
            norm2 += w * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    Ok((flux, norm2.sqrt()))
}

/// `[G; F; 0]` with `G(τ) = ∫_Γ (τn)·g` and `F(v) = -∫_Ω f·v`.
pub fn assemble_stokes_rhs(mesh: &Mesh, case: &StokesCase, degree: usize) -> Result<Vec<f64>> {
    let cr = DofMap::cr(mesh, 4);
    let p0 = DofMap::p0(mesh, 2);
    let mut rhs = vec![0.0; cr.len() + p0.len() + 1];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_interior() {
            continue;
        }
        let m = boundary_moments(mesh, e, degree, |p, side| case.g(p, side))?;
        let tri = &mesh.triangles()[edge.neighbors[0]];
        for (k, &ek) in tri.edges.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    rhs[cr.index(ek, 2 * i + j)] += m[k][i][j];
                }
            }
        }
    }
    let f = cell_integrals(mesh, degree, |p| case.f(p))?;
    for (t, v) in f.iter().enumerate() {
        for i in 0..2 {
            rhs[cr.len() + p0.index(t, i)] = -v[i];
        }
    }
    Ok(rhs)
}

pub fn assemble_stokes_system(
    mesh: &Mesh,
    case: &StokesCase,
    nu: f64,
    opts: &AssemblyOptions,
) -> Result<StokesSystem> {
    check_nu(nu)?;
    let cr = DofMap::cr(mesh, 4);
    let p0 = DofMap::p0(mesh, 2);
    let a = assemble_a_h(mesh, &cr, nu, opts.penalty_scale)?;
    let b = assemble_b_h(mesh, &cr, &p0)?;
    let t = trace_row(mesh, &cr, nu)?;
    let n = cr.len() + p0.len() + 1;
    let last = n - 1;
    let mut m = TripletMatrix::with_capacity(n, n, a.nnz() + 2 * b.nnz() + 2 * t.len());
    m.add_block(&a, 0, 0, 1.0);
    m.add_block_transposed(&b, 0, cr.len(), 1.0);
    m.add_block(&b, cr.len(), 0, 1.0);
    for (j, &v) in t.iter().enumerate() {
        if v != 0.0 {
            m.push(j, last, v);
            m.push(last, j, v);
        }
    }
    let (flux, gnorm) = boundary_flux(mesh, case, opts.data_degree)?;
    if flux.abs() > 1e-8 * gnorm {
        warn!(
            "boundary data of {} is not compatible: ∫ g·n = {flux:.3e} on level {}",
            case.tag,
            mesh.level()
        );
    }
    Ok(StokesSystem {
        matrix: m.to_csr(),
        rhs: assemble_stokes_rhs(mesh, case, opts.data_degree)?,
        n_sigma: cr.len(),
        n_u: p0.len(),
        nu,
        penalty: penalty_table(mesh, opts.penalty_scale),
        flux_defect: flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainTag};
    use crate::space::interp_cr;

    #[test]
    fn deviator_examples() {
        assert_eq!(deviator([1.0, 0.0, 0.0, 1.0]), [0.0; 4]);
        assert_eq!(deviator([1.0, 2.0, 3.0, 4.0]), [-1.5, 2.0, 3.0, 1.5]);
    }

    #[test]
    fn identity_is_in_the_kernel() {
        let mesh = build_initial_mesh(DomainTag::MShape).unwrap();
        let cr = DofMap::cr(&mesh, 4);
        let a = assemble_a_h(&mesh, &cr, 1.0, 1.0).unwrap();
        let id: Vec<f64> = (0..mesh.num_edges()).flat_map(|_| [1.0, 0.0, 0.0, 1.0]).collect();
        assert!(a.matvec(&id).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn viscosity_scaling() {
        let mesh = build_initial_mesh(DomainTag::CrackDiamond).unwrap();
        let cr = DofMap::cr(&mesh, 4);
        let a1 = assemble_a_h(&mesh, &cr, 1.0, 1.0).unwrap();
        let a10 = assemble_a_h(&mesh, &cr, 10.0, 1.0).unwrap();
        assert_eq!(a1.indices, a10.indices);
        for (x, y) in a1.data.iter().zip(&a10.data) {
            assert!((x / 10.0 - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
        assert!(matches!(assemble_a_h(&mesh, &cr, 0.0, 1.0), Err(Error::InvalidViscosity(_))));
    }

    #[test]
    fn row_divergence_of_affine_tensor() {
        let mesh = build_initial_mesh(DomainTag::MShape).unwrap();
        let cr = DofMap::cr(&mesh, 4);
        let p0 = DofMap::p0(&mesh, 2);
        let b = assemble_b_h(&mesh, &cr, &p0).unwrap();
        let f = interp_cr(&mesh, edge_rule(2).unwrap(), |p, _| [p.x, 0.0, 0.0, p.y]).unwrap();
        let d = b.matvec(&f.coeffs);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            assert!((d[2 * t] - tri.area).abs() < 1e-14);
            assert!((d[2 * t + 1] - tri.area).abs() < 1e-14);
        }
    }

    #[test]
    fn multiplier_column() {
        let mesh = build_initial_mesh(DomainTag::CrackDiamond).unwrap();
        let sys = assemble_stokes_system(&mesh, &StokesCase::s3(), 1.0, &AssemblyOptions::default()).unwrap();
        assert_eq!(sys.len(), 153);
        let last = sys.multiplier_index();
        let nonzeros: Vec<_> = sys.matrix.row(last).collect();
        assert_eq!(nonzeros.len(), 2 * mesh.num_edges());
        assert!(nonzeros.iter().all(|&(j, _)| j < sys.n_sigma && (j % 4 == 0 || j % 4 == 3)));
        assert!(sys.matrix.symmetry_defect() <= 1e-14 * sys.matrix.max_abs());
        assert_eq!(sys.rhs[last], 0.0);
    }
}
