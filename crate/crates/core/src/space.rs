//! Degree-of-freedom maps and discrete fields.
//!
//! A Crouzeix-Raviart coefficient is the mean of a field component over an
//! edge. On a triangle with barycentric coordinates `λ`, the basis function
//! dual to local edge `i` is `φ_i = 1 - 2 λ_i`; it is identically one on edge
//! `i` and has zero mean on the other two. Its gradient is `|e_i| n_i / |T|`
//! with `n_i` the outward unit normal of edge `i`.
//!
//! Multi-component fields interleave components per entity: the DOF of
//! component `c` on entity `k` is `k * ncomp + c`. Tensor fields use the
//! row-major order `(11, 12, 21, 22)`.

use crate::mesh::{Mesh, Point};
use crate::quadrature::{EdgeRule, TriangleRule};
use crate::{Error, Result};

/// Relative distance (in units of `h_T`) by which edge points are moved into
/// their owning triangle to select the branch of two-valued exact fields.
pub const SIDE_PROBE_OFFSET: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// One DOF per edge per component.
    Cr,
    /// One DOF per triangle per component.
    P0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub ncomp: usize,
    pub entities: usize,
}

impl DofMap {
    pub fn cr(mesh: &Mesh, ncomp: usize) -> DofMap {
        DofMap {
            kind: SpaceKind::Cr,
            ncomp,
            entities: mesh.num_edges(),
        }
    }

    pub fn p0(mesh: &Mesh, ncomp: usize) -> DofMap {
        DofMap {
            kind: SpaceKind::P0,
            ncomp,
            entities: mesh.num_triangles(),
        }
    }

    #[inline]
    pub fn index(&self, entity: usize, comp: usize) -> usize {
        debug_assert!(entity < self.entities && comp < self.ncomp);
        entity * self.ncomp + comp
    }

    pub fn len(&self) -> usize {
        self.entities * self.ncomp
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Errors unless the map was built for `mesh` with the given layout.
    pub fn check(&self, mesh: &Mesh, kind: SpaceKind, ncomp: usize) -> Result<()> {
        let entities = match kind {
            SpaceKind::Cr => mesh.num_edges(),
            SpaceKind::P0 => mesh.num_triangles(),
        };
        if self.kind != kind || self.ncomp != ncomp || self.entities != entities {
            return Err(Error::DimensionMismatch(format!(
                "dof map {:?}x{} over {} entities, expected {:?}x{} over {}",
                self.kind, self.ncomp, self.entities, kind, ncomp, entities
            )));
        }
        Ok(())
    }
}

/// Value and gradient of the CR basis function of local edge `local` of
/// triangle `t` at the point with barycentric coordinates `bary`.
pub fn cr_basis_eval(mesh: &Mesh, t: usize, local: usize, bary: [f64; 3]) -> (f64, Point) {
    (1.0 - 2.0 * bary[local], cr_basis_gradient(mesh, t, local))
}

#[inline]
pub fn cr_basis_gradient(mesh: &Mesh, t: usize, local: usize) -> Point {
    let tri = &mesh.triangles()[t];
    let len = mesh.edges()[tri.edges[local]].length;
    (len / tri.area) * mesh.outward_normal(t, local)
}

/// Point slightly inside triangle `t` next to `p`, used only to pick the
/// branch of exact fields that are two-valued across a crack.
pub fn inward_probe(mesh: &Mesh, t: usize, p: Point) -> Point {
    let c = mesh.centroid(t);
    let d = c - p;
    let n = d.norm();
    if n == 0.0 {
        return p;
    }
    p + (SIDE_PROBE_OFFSET * mesh.triangles()[t].diameter / n) * d
}

/// Crouzeix-Raviart field with `ncomp` components.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCR {
    pub dofs: DofMap,
    pub coeffs: Vec<f64>,
}

impl FieldCR {
    pub fn new(dofs: DofMap, coeffs: Vec<f64>) -> Result<FieldCR> {
        if dofs.kind != SpaceKind::Cr || coeffs.len() != dofs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {:?} map of length {}",
                coeffs.len(),
                dofs.kind,
                dofs.len()
            )));
        }
        Ok(FieldCR { dofs, coeffs })
    }

    pub fn zeros(mesh: &Mesh, ncomp: usize) -> FieldCR {
        let dofs = DofMap::cr(mesh, ncomp);
        FieldCR {
            dofs,
            coeffs: vec![0.0; dofs.len()],
        }
    }

    #[inline]
    pub fn coeff(&self, edge: usize, comp: usize) -> f64 {
        self.coeffs[self.dofs.index(edge, comp)]
    }

    /// Value of the restriction to triangle `t` at barycentric `bary`.
    pub fn value<const N: usize>(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> [f64; N] {
        debug_assert_eq!(N, self.dofs.ncomp);
        let edges = mesh.triangles()[t].edges;
        let mut out = [0.0; N];
        for i in 0..3 {
            let phi = 1.0 - 2.0 * bary[i];
            for (c, o) in out.iter_mut().enumerate() {
                *o += phi * self.coeff(edges[i], c);
            }
        }
        out
    }

    /// Constant divergence on `t` of the vector made of components
    /// `(2 row, 2 row + 1)`; `row = 0` for vector fields, `0..2` for tensors.
    pub fn divergence(&self, mesh: &Mesh, t: usize, row: usize) -> f64 {
        let edges = mesh.triangles()[t].edges;
        (0..3)
            .map(|i| {
                let g = cr_basis_gradient(mesh, t, i);
                self.coeff(edges[i], 2 * row) * g.x + self.coeff(edges[i], 2 * row + 1) * g.y
            })
            .sum()
    }
}

/// Piecewise-constant field with `ncomp` components.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldP0 {
    pub dofs: DofMap,
    pub coeffs: Vec<f64>,
}

impl FieldP0 {
    pub fn new(dofs: DofMap, coeffs: Vec<f64>) -> Result<FieldP0> {
        if dofs.kind != SpaceKind::P0 || coeffs.len() != dofs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {:?} map of length {}",
                coeffs.len(),
                dofs.kind,
                dofs.len()
            )));
        }
        Ok(FieldP0 { dofs, coeffs })
    }

    #[inline]
    pub fn value(&self, t: usize, comp: usize) -> f64 {
        self.coeffs[self.dofs.index(t, comp)]
    }
}

/// CR interpolant: every coefficient is the edge mean of `f`, computed with
/// `rule`. `f` receives the evaluation point and a probe point inside the
/// triangle that owns the edge.
pub fn interp_cr<const N: usize, F>(mesh: &Mesh, rule: &EdgeRule, f: F) -> Result<FieldCR>
where
    F: Fn(Point, Point) -> [f64; N],
{
    let dofs = DofMap::cr(mesh, N);
    let mut coeffs = vec![0.0; dofs.len()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = mesh.edge_points(e);
        let owner = edge.neighbors[0];
        let mut mean = [0.0; N];
        for (p, w, _) in rule.map(a, b) {
            let v = f(p, inward_probe(mesh, owner, p));
            for c in 0..N {
                mean[c] += w * v[c];
            }
        }
        for c in 0..N {
            let m = mean[c] / edge.length;
            if !m.is_finite() {
                return Err(Error::NonFinite {
                    what: "interpolated field",
                    entity: "edge",
                    id: e,
                });
            }
            coeffs[dofs.index(e, c)] = m;
        }
    }
    Ok(FieldCR { dofs, coeffs })
}

/// L2 projection onto piecewise constants: `(1/|T|) ∫_T f` by `rule`.
pub fn project_p0<const N: usize, F>(mesh: &Mesh, rule: &TriangleRule, f: F) -> Result<FieldP0>
where
    F: Fn(Point, Point) -> [f64; N],
{
    let dofs = DofMap::p0(mesh, N);
    let mut coeffs = vec![0.0; dofs.len()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut acc = [0.0; N];
        for (p, w, _) in rule.map(mesh.triangle_points(t)) {
            let v = f(p, p);
            for c in 0..N {
                acc[c] += w * v[c];
            }
        }
        for c in 0..N {
            let m = acc[c] / tri.area;
            if !m.is_finite() {
                return Err(Error::NonFinite {
                    what: "projected field",
                    entity: "triangle",
                    id: t,
                });
            }
            coeffs[dofs.index(t, c)] = m;
        }
    }
    Ok(FieldP0 { dofs, coeffs })
}

/// Lowest-order Raviart-Thomas field given by one normal flux per edge,
/// measured along the edge's stored normal.
#[derive(Clone, Debug)]
pub struct RtField {
    pub fluxes: Vec<f64>,
}

impl RtField {
    /// Value inside triangle `t`: `Σ_i F_i (x - v_i) / (2|T|)` with `F_i` the
    /// outward flux through local edge `i`.
    pub fn value(&self, mesh: &Mesh, t: usize, x: Point) -> Point {
        let tri = &mesh.triangles()[t];
        let verts = mesh.triangle_points(t);
        let mut out = Point::default();
        for i in 0..3 {
            let flux = mesh.normal_sign(t, i) * self.fluxes[tri.edges[i]];
            out = out + (flux / (2.0 * tri.area)) * (x - verts[i]);
        }
        out
    }

    /// Constant divergence on `t`.
    pub fn divergence(&self, mesh: &Mesh, t: usize) -> f64 {
        let tri = &mesh.triangles()[t];
        (0..3)
            .map(|i| mesh.normal_sign(t, i) * self.fluxes[tri.edges[i]])
            .sum::<f64>()
            / tri.area
    }
}

/// RT interpolant of a vector CR field: flux `∫_e {τ}·ν`. Both traces have
/// the same edge mean, so this is `|e|` times the coefficient vector dotted
/// with the edge normal.
pub fn interp_rt(mesh: &Mesh, field: &FieldCR) -> Result<RtField> {
    field.dofs.check(mesh, SpaceKind::Cr, 2)?;
    let fluxes = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| edge.length * (field.coeff(e, 0) * edge.normal.x + field.coeff(e, 1) * edge.normal.y))
        .collect();
    Ok(RtField { fluxes })
}
