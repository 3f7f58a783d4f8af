//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's basis evaluation, assembly loops or solvers; the
//! library is only used for mesh topology and, where stated, quadrature
//! points.

#![allow(dead_code)]

use crmixed::mesh::{Mesh, Point};
use crmixed::space::DofMap;

/// Three-point Gauss-Legendre rule on `[0, 1]`, exact up to degree 5.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

pub fn lerp(a: Point, b: Point, s: f64) -> Point {
    Point::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y))
}

pub fn midpoint(mesh: &Mesh, e: usize) -> Point {
    let [a, b] = mesh.edges()[e].vertices.map(|v| mesh.vertices()[v]);
    lerp(a, b, 0.5)
}

pub fn area(mesh: &Mesh, t: usize) -> f64 {
    let [a, b, c] = mesh.triangles()[t].vertices.map(|v| mesh.vertices()[v]);
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs()
}

pub fn centroid(mesh: &Mesh, t: usize) -> Point {
    let [a, b, c] = mesh.triangles()[t].vertices.map(|v| mesh.vertices()[v]);
    Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
}

/// Unit normal of edge `e` pointing out of triangle `t`.
pub fn outward(mesh: &Mesh, t: usize, e: usize) -> Point {
    let [a, b] = mesh.edges()[e].vertices.map(|v| mesh.vertices()[v]);
    let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
    let n = Point::new((b.y - a.y) / len, -(b.x - a.x) / len);
    let c = centroid(mesh, t);
    let m = lerp(a, b, 0.5);
    if n.x * (m.x - c.x) + n.y * (m.y - c.y) > 0.0 {
        n
    } else {
        Point::new(-n.x, -n.y)
    }
}

pub fn edge_length(mesh: &Mesh, e: usize) -> f64 {
    let [a, b] = mesh.edges()[e].vertices.map(|v| mesh.vertices()[v]);
    ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt()
}

/// Affine CR basis of triangle `t` as `(edge, [a, b, c])` with
/// `φ(x, y) = a + b x + c y`, equal to one at the midpoint of its own edge
/// and zero at the other two.
pub fn cr_basis(mesh: &Mesh, t: usize) -> [(usize, [f64; 3]); 3] {
    let edges = mesh.triangles()[t].edges;
    let m = edges.map(|e| midpoint(mesh, e));
    std::array::from_fn(|k| {
        let (pi, pj) = (m[(k + 1) % 3], m[(k + 2) % 3]);
        // line through the other two midpoints, normalised to one at m_k
        let (dx, dy) = (pj.x - pi.x, pj.y - pi.y);
        let line = |x: f64, y: f64| (x - pi.x) * dy - (y - pi.y) * dx;
        let s = line(m[k].x, m[k].y);
        (edges[k], [line(0.0, 0.0) / s, dy / s, -dx / s])
    })
}

/// Evaluates component `c` of a CR coefficient vector on triangle `t`.
pub fn cr_eval(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], t: usize, c: usize, x: Point) -> f64 {
    cr_basis(mesh, t)
        .iter()
        .map(|(e, [a, b, cc])| coeffs[dofs.index(*e, c)] * (a + b * x.x + cc * x.y))
        .sum()
}

/// Constant gradient of component `c` on triangle `t`.
pub fn cr_grad(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64], t: usize, c: usize) -> [f64; 2] {
    cr_basis(mesh, t).iter().fold([0.0; 2], |g, (e, [_, b, cc])| {
        let v = coeffs[dofs.index(*e, c)];
        [g[0] + v * b, g[1] + v * cc]
    })
}

/// `Σ_T ∫_T |τ|²` (or `|τ^d|²` for tensors when `deviatoric`) plus
/// `Σ_e (1/|e|) ∫_e |⟦τ ν⟧|²` over interior edges, by edge-midpoint and
/// Gauss-Legendre loops.
pub fn energy(mesh: &Mesh, coeffs: &[f64], ncomp: usize, deviatoric: bool) -> f64 {
    let dofs = DofMap::cr(mesh, ncomp);
    let mut mass = 0.0;
    for t in 0..mesh.num_triangles() {
        let w = area(mesh, t) / 3.0;
        for &e in &mesh.triangles()[t].edges {
            let x = midpoint(mesh, e);
            let mut v: Vec<f64> = (0..ncomp).map(|c| cr_eval(mesh, &dofs, coeffs, t, c, x)).collect();
            if deviatoric {
                let h = 0.5 * (v[0] + v[3]);
                v[0] -= h;
                v[3] -= h;
            }
            mass += w * v.iter().map(|a| a * a).sum::<f64>();
        }
    }
    let mut pen = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let Some(t1) = edge.second_neighbor() else { continue };
        let t0 = edge.neighbors[0];
        let n = outward(mesh, t0, e);
        let len = edge_length(mesh, e);
        let gamma = 1.0 / len;
        let [a, b] = edge.vertices.map(|v| mesh.vertices()[v]);
        for (s, w) in gauss3() {
            let x = lerp(a, b, s);
            for r in 0..ncomp / 2 {
                let flux = |t: usize| {
                    cr_eval(mesh, &dofs, coeffs, t, 2 * r, x) * n.x + cr_eval(mesh, &dofs, coeffs, t, 2 * r + 1, x) * n.y
                };
                let j = flux(t0) - flux(t1);
                pen += gamma * w * len * j * j;
            }
        }
    }
    mass + pen
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        assert!(a[p][k] != 0.0, "singular dense matrix at column {k}");
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Central-difference gradient of a scalar field.
pub fn fd_grad<F: Fn(Point) -> f64>(f: F, p: Point, h: f64) -> [f64; 2] {
    [
        (f(Point::new(p.x + h, p.y)) - f(Point::new(p.x - h, p.y))) / (2.0 * h),
        (f(Point::new(p.x, p.y + h)) - f(Point::new(p.x, p.y - h))) / (2.0 * h),
    ]
}

/// Five-point Laplacian.
pub fn fd_laplacian<F: Fn(Point) -> f64>(f: F, p: Point, h: f64) -> f64 {
    (f(Point::new(p.x + h, p.y)) + f(Point::new(p.x - h, p.y)) + f(Point::new(p.x, p.y + h)) + f(Point::new(p.x, p.y - h))
        - 4.0 * f(p))
        / (h * h)
}
