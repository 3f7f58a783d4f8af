//! Saddle-point system of the dual-mixed Poisson scheme.
//!
//! Unknowns are the vector CR flux `σ_h` (two DOFs per edge) followed by the
//! piecewise-constant `u_h` (one DOF per triangle). The assembled matrix is
//!
//! ```text
//! [  A  -Bᵀ ] [σ]   [-G]
//! [ -B   0  ] [u] = [-F]
//! ```
//!
//! with `A` the CR mass matrix plus the penalty `Σ_e ∫_e γ_e ⟦σ⟧⟦τ⟧` over
//! interior edges, `γ_e = 1/|e|`, and `B τ = ∫_T div τ`.

use crate::exact::PoissonCase;
use crate::mesh::{Mesh, Point};
use crate::quadrature::{edge_rule, tri_rule, MAX_EDGE_DEGREE};
use crate::space::{inward_probe, DofMap, SpaceKind};
use crate::sparse::{CsrMatrix, TripletMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    /// Multiplies the default penalty `1/|e|`.
    pub penalty_scale: f64,
    /// Quadrature degree for the data functionals `F` and `G`.
    pub data_degree: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            penalty_scale: 1.0,
            data_degree: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_sigma: usize,
    pub n_u: usize,
    /// `γ_e` per edge; zero on boundary edges.
    pub penalty: Vec<f64>,
}

impl SaddleSystem {
    pub fn len(&self) -> usize {
        self.n_sigma + self.n_u
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `γ_e = scale / |e|` on interior edges, zero elsewhere.
pub fn penalty_table(mesh: &Mesh, scale: f64) -> Vec<f64> {
    mesh.edges()
        .iter()
        .map(|e| if e.is_interior() { scale / e.length } else { 0.0 })
        .collect()
}

/// Barycentric coordinates in triangle `t` of the point at parameter `s`
/// along edge `e` (from its first to its second vertex).
pub(crate) fn edge_point_bary(mesh: &Mesh, t: usize, e: usize, s: f64) -> [f64; 3] {
    let [a, b] = mesh.edges()[e].vertices;
    mesh.triangles()[t].vertices.map(|v| {
        if v == a {
            1.0 - s
        } else if v == b {
            s
        } else {
            0.0
        }
    })
}

/// Scalar jump operator on an interior edge: the four CR basis functions
/// of the two neighbours that do not belong to `e` itself (the shared one
/// cancels), each with its neighbour's sign (`+` for `neighbors[0]`), and
/// their values at the two Gauss points of `e`.
/// Returns `(edge id, values)` and the Gauss weights scaled by `|e|`.
pub(crate) fn jump_trace(mesh: &Mesh, e: usize) -> ([(usize, [f64; 2]); 4], [f64; 2]) {
    let rule = edge_rule(2).expect("degree 2 edge rule");
    let edge = &mesh.edges()[e];
    let mut out = [(0usize, [0.0; 2]); 4];
    let mut k = 0;
    for (side, sign) in [(0usize, 1.0), (1, -1.0)] {
        let t = edge.neighbors[side];
        let tri = &mesh.triangles()[t];
        for (i, &ei) in tri.edges.iter().enumerate() {
            if ei == e {
                continue;
            }
            let mut vals = [0.0; 2];
            for (q, &s) in rule.points.iter().enumerate() {
                let bary = edge_point_bary(mesh, t, e, s);
                vals[q] = sign * (1.0 - 2.0 * bary[i]);
            }
            out[k] = (ei, vals);
            k += 1;
        }
    }
    debug_assert_eq!(k, 4);
    let w = [rule.weights[0] * edge.length, rule.weights[1] * edge.length];
    (out, w)
}

/// Adds `Σ_e ∫_e γ_e ⟦σ⟧⟦τ⟧` for the vector rows `rows` of a CR field with
/// `ncomp` components per edge; row `r` consists of components
/// `(2r, 2r + 1)`.
pub(crate) fn add_penalty(
    mesh: &Mesh,
    dofs: &DofMap,
    gamma: &[f64],
    rows: usize,
    factor: f64,
    out: &mut TripletMatrix,
) {
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !edge.is_interior() || gamma[e] == 0.0 {
            continue;
        }
        let (trace, w) = jump_trace(mesh, e);
        let nu = [edge.normal.x, edge.normal.y];
        for &(ea, va) in &trace {
            for &(eb, vb) in &trace {
                let k = factor * gamma[e] * (w[0] * va[0] * vb[0] + w[1] * va[1] * vb[1]);
                for r in 0..rows {
                    for ca in 0..2 {
                        for cb in 0..2 {
                            out.push(
                                dofs.index(ea, 2 * r + ca),
                                dofs.index(eb, 2 * r + cb),
                                k * nu[ca] * nu[cb],
                            );
                        }
                    }
                }
            }
        }
    }
}

/// Vector CR mass matrix plus interior-edge penalty.
pub fn assemble_a_s(mesh: &Mesh, dofs: &DofMap, penalty_scale: f64) -> Result<CsrMatrix> {
    dofs.check(mesh, SpaceKind::Cr, 2)?;
    let mut out = TripletMatrix::with_capacity(dofs.len(), dofs.len(), 6 * mesh.num_triangles() + 64 * mesh.num_edges());
    for tri in mesh.triangles() {
        let m = tri.area / 3.0;
        for &e in &tri.edges {
            for c in 0..2 {
                let i = dofs.index(e, c);
                out.push(i, i, m);
            }
        }
    }
    add_penalty(mesh, dofs, &penalty_table(mesh, penalty_scale), 1, 1.0, &mut out);
    Ok(out.to_csr())
}

/// `B[T, (e, c)] = ∫_T ∂_c φ_e = |e| n_{T,e,c}`.
pub fn assemble_b(mesh: &Mesh, cr: &DofMap, p0: &DofMap) -> Result<CsrMatrix> {
    cr.check(mesh, SpaceKind::Cr, 2)?;
    p0.check(mesh, SpaceKind::P0, 1)?;
    let mut out = TripletMatrix::with_capacity(p0.len(), cr.len(), 6 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (i, &e) in tri.edges.iter().enumerate() {
            let n = mesh.outward_normal(t, i);
            let len = mesh.edges()[e].length;
            out.push(p0.index(t, 0), cr.index(e, 0), len * n.x);
            out.push(p0.index(t, 0), cr.index(e, 1), len * n.y);
        }
    }
    Ok(out.to_csr())
}

/// `∫_e g φ_k ν` for every local basis function `k` of the triangle owning
/// boundary edge `e`, with `g` taking `N` components. Entry `[k][c][j]` is
/// `∫_e g_c φ_k ν_j`.
pub(crate) fn boundary_moments<const N: usize, F>(
    mesh: &Mesh,
    e: usize,
    degree: usize,
    g: F,
) -> Result<[[[f64; 2]; N]; 3]>
where
    F: Fn(Point, Point) -> [f64; N],
{
    let rule = edge_rule(degree.clamp(1, MAX_EDGE_DEGREE))?;
    let edge = &mesh.edges()[e];
    let t = edge.neighbors[0];
    let [a, b] = mesh.edge_points(e);
    let nu = [edge.normal.x, edge.normal.y];
    let mut out = [[[0.0; 2]; N]; 3];
    for (p, w, s) in rule.map(a, b) {
        let gv = g(p, inward_probe(mesh, t, p));
        if gv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "boundary data",
                entity: "edge",
                id: e,
            });
        }
        let bary = edge_point_bary(mesh, t, e, s);
        for (k, row) in out.iter_mut().enumerate() {
            let phi = 1.0 - 2.0 * bary[k];
            for c in 0..N {
                for j in 0..2 {
                    row[c][j] += w * gv[c] * phi * nu[j];
                }
            }
        }
    }
    Ok(out)
}

/// `∫_T f` per triangle with the rule of the given degree.
pub(crate) fn cell_integrals<const N: usize, F>(mesh: &Mesh, degree: usize, f: F) -> Result<Vec<[f64; N]>>
where
    F: Fn(Point) -> [f64; N],
{
    let rule = tri_rule(degree)?;
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let mut acc = [0.0; N];
        for (p, w, _) in rule.map(mesh.triangle_points(t)) {
            let v = f(p);
            for c in 0..N {
                acc[c] += w * v[c];
            }
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "source term",
                entity: "triangle",
                id: t,
            });
        }
        out.push(acc);
    }
    Ok(out)
}

/// `[-G; -F]` with `G(τ) = ∫_Γ g τ·ν` and `F(v) = ∫_Ω f v`.
pub fn assemble_rhs(mesh: &Mesh, case: &PoissonCase, degree: usize) -> Result<Vec<f64>> {
    let cr = DofMap::cr(mesh, 2);
    let p0 = DofMap::p0(mesh, 1);
    let mut rhs = vec![0.0; cr.len() + p0.len()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.is_interior() {
            continue;
        }
        let m = boundary_moments(mesh, e, degree, |p, side| [case.g(p, side)])?;
        let tri = &mesh.triangles()[edge.neighbors[0]];
        for (k, &ek) in tri.edges.iter().enumerate() {
            for j in 0..2 {
                rhs[cr.index(ek, j)] -= m[k][0][j];
            }
        }
    }
    let f = cell_integrals(mesh, degree, |p| [case.f(p)])?;
    for (t, v) in f.iter().enumerate() {
        rhs[cr.len() + p0.index(t, 0)] = -v[0];
    }
    Ok(rhs)
}

pub fn assemble_system(mesh: &Mesh, case: &PoissonCase, opts: &AssemblyOptions) -> Result<SaddleSystem> {
    let cr = DofMap::cr(mesh, 2);
    let p0 = DofMap::p0(mesh, 1);
    let a = assemble_a_s(mesh, &cr, opts.penalty_scale)?;
    let b = assemble_b(mesh, &cr, &p0)?;
    let n = cr.len() + p0.len();
    let mut m = TripletMatrix::with_capacity(n, n, a.nnz() + 2 * b.nnz());
    m.add_block(&a, 0, 0, 1.0);
    m.add_block_transposed(&b, 0, cr.len(), -1.0);
    m.add_block(&b, cr.len(), 0, -1.0);
    Ok(SaddleSystem {
        matrix: m.to_csr(),
        rhs: assemble_rhs(mesh, case, opts.data_degree)?,
        n_sigma: cr.len(),
        n_u: p0.len(),
        penalty: penalty_table(mesh, opts.penalty_scale),
    })
}
