//! Conforming triangulations with edge topology.
//!
//! Triangles are stored counter-clockwise with their newest vertex first;
//! local edge `i` of a triangle is the edge opposite its local vertex `i`. Every edge carries one fixed unit
//! normal: the outward normal of its first (lower-id) neighbour, which for
//! boundary edges is the outward normal of the domain.
//!
//! The crack domain is the diamond `|x| + |y| < 1` slit along `[0, 1] x {0}`.
//! Every vertex on the slit except the crack tip exists twice, once per lip,
//! so the two copies of each slit edge are distinct boundary edges with
//! independent degrees of freedom.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Sub};
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

#[derive(Clone, Debug)]
pub struct Triangle {
    /// Counter-clockwise vertex ids, newest vertex first.
    pub vertices: [usize; 3],
    /// `edges[i]` is opposite `vertices[i]`.
    pub edges: [usize; 3],
    pub area: f64,
    /// Longest side.
    pub diameter: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKind::Interior => f.write_str("interior"),
            EdgeKind::Boundary => f.write_str("boundary"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints in the counter-clockwise order of the first neighbour.
    pub vertices: [usize; 2],
    pub length: f64,
    /// Unit normal pointing out of `neighbors[0]`.
    pub normal: Point,
    /// `neighbors[0] < neighbors[1]` for interior edges.
    pub neighbors: [usize; 2],
    pub kind: EdgeKind,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.kind == EdgeKind::Interior
    }

    pub fn second_neighbor(&self) -> Option<usize> {
        self.is_interior().then_some(self.neighbors[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    /// `{|x| + |y| < 1} ∩ {x < 0 or y > 0}`, reentrant corner at the origin.
    MShape,
    /// `{|x| + |y| < 1}` minus the slit `[0, 1] x {0}`.
    CrackDiamond,
    /// `(-1/2, 3/2) x (0, 2)`.
    KovasznayRect,
    Custom,
}

impl DomainTag {
    pub fn name(self) -> &'static str {
        match self {
            DomainTag::MShape => "m_shape",
            DomainTag::CrackDiamond => "crack_diamond",
            DomainTag::KovasznayRect => "kovasznay_rect",
            DomainTag::Custom => "custom",
        }
    }

    /// Exact area, `None` for custom meshes.
    pub fn area(self) -> Option<f64> {
        match self {
            DomainTag::MShape => Some(1.5),
            DomainTag::CrackDiamond => Some(2.0),
            DomainTag::KovasznayRect => Some(4.0),
            DomainTag::Custom => None,
        }
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m_shape" | "mshape" => Ok(DomainTag::MShape),
            "crack_diamond" | "crack" => Ok(DomainTag::CrackDiamond),
            "kovasznay_rect" | "kovasznay" => Ok(DomainTag::KovasznayRect),
            _ => Err(Error::UnknownDomain(s.to_string())),
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    domain: DomainTag,
    level: usize,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise triangles.
    ///
    /// Edges are identified by vertex ids, never by coordinates, so vertices
    /// that coincide geometrically but carry different ids (crack lips) give
    /// distinct edges.
    pub fn from_triangles(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Mesh> {
        Mesh::build(vertices, cells, DomainTag::Custom, 0)
    }

    fn build(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        domain: DomainTag,
        level: usize,
    ) -> Result<Mesh> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        let mut triangles = Vec::with_capacity(cells.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(cells.len() * 3 / 2 + 2);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);

        for (t, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} of {}",
                        vertices.len()
                    )));
                }
            }
            let [a, b, c] = cell.map(|v| vertices[v]);
            let signed = 0.5 * (b - a).cross(c - a);
            if !(signed > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not counter-clockwise (signed area {signed:e})"
                )));
            }
            let diameter = (b - a).norm().max((c - b).norm()).max((a - c).norm());

            let mut local = [0usize; 3];
            for i in 0..3 {
                let (p, q) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
                let key = (p.min(q), p.max(q));
                match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.is_interior() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({p}, {q}) shared by more than two triangles"
                            )));
                        }
                        if edge.vertices != [q, p] {
                            return Err(Error::InvalidMesh(format!(
                                "triangles {} and {t} traverse edge ({p}, {q}) in the same direction",
                                edge.neighbors[0]
                            )));
                        }
                        edge.neighbors[1] = t;
                        edge.kind = EdgeKind::Interior;
                        local[i] = e;
                    }
                    None => {
                        let d = vertices[q] - vertices[p];
                        let length = d.norm();
                        edges.push(Edge {
                            vertices: [p, q],
                            length,
                            normal: Point::new(d.y / length, -d.x / length),
                            neighbors: [t, t],
                            kind: EdgeKind::Boundary,
                        });
                        lookup.insert(key, edges.len() - 1);
                        local[i] = edges.len() - 1;
                    }
                }
            }
            triangles.push(Triangle {
                vertices: *cell,
                edges: local,
                area: signed,
                diameter,
            });
        }

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            domain,
            level,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn triangle(&self, t: usize) -> Result<&Triangle> {
        self.triangles.get(t).ok_or(Error::InvalidId {
            kind: "triangle",
            id: t,
            len: self.triangles.len(),
        })
    }

    pub fn edge(&self, e: usize) -> Result<&Edge> {
        self.edges.get(e).ok_or(Error::InvalidId {
            kind: "edge",
            id: e,
            len: self.edges.len(),
        })
    }

    /// The triangles adjacent to `e`; the stored normal points from the first
    /// to the second.
    pub fn edge_neighbors(&self, e: usize) -> Result<(usize, Option<usize>)> {
        let edge = self.edge(e)?;
        Ok((edge.neighbors[0], edge.second_neighbor()))
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].vertices.map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        (1.0 / 3.0) * (a + b + c)
    }

    /// Unit outward normal of triangle `t` on its local edge `i`.
    pub fn outward_normal(&self, t: usize, i: usize) -> Point {
        let e = &self.edges[self.triangles[t].edges[i]];
        if e.neighbors[0] == t {
            e.normal
        } else {
            -1.0 * e.normal
        }
    }

    /// `+1` if the stored normal of local edge `i` points out of `t`, else `-1`.
    pub fn normal_sign(&self, t: usize, i: usize) -> f64 {
        if self.edges[self.triangles[t].edges[i]].neighbors[0] == t {
            1.0
        } else {
            -1.0
        }
    }

    /// Local index of edge `e` inside triangle `t`.
    pub fn local_edge_index(&self, t: usize, e: usize) -> Option<usize> {
        self.triangles[t].edges.iter().position(|&x| x == e)
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.edges.iter().filter(|e| !e.is_interior()).map(|e| e.length).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.triangles.iter().map(|t| t.diameter).fold(0.0, f64::max)
    }

    /// `V - E + T`; equals 1 for every simply connected domain, including the
    /// crack domain whose slit is cut open by duplicated vertices.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Bisects every triangle twice by newest-vertex bisection. Each
    /// triangle stores its newest vertex first, so `edges[0]` is its
    /// refinement edge. After two passes every edge of the parent is halved,
    /// which keeps the mesh conforming and gives four children per triangle.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|e| {
            let [a, b] = e.vertices.map(|v| self.vertices[v]);
            0.5 * (a + b)
        }));
        let mut cells = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let [a, b, c] = tri.vertices;
            let [m0, m1, m2] = tri.edges.map(|e| nv + e);
            cells.push([m2, m0, a]);
            cells.push([m2, b, m0]);
            cells.push([m1, m0, c]);
            cells.push([m1, a, m0]);
        }
        Mesh::build(vertices, cells, self.domain, self.level + 1)
            .expect("bisection of a valid mesh is valid")
    }

    /// `k` successive uniform refinements.
    pub fn refined(&self, k: usize) -> Mesh {
        let mut mesh = self.clone();
        for _ in 0..k {
            mesh = mesh.refine_uniform();
        }
        mesh
    }

    /// Checks conformity, orientation and normal consistency.
    pub fn validate(&self) -> Result<()> {
        let mut counts = vec![0usize; self.edges.len()];
        for t in &self.triangles {
            for &e in &t.edges {
                counts[e] += 1;
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            if (edge.normal.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMesh(format!("edge {e} normal is not unit")));
            }
            let count = counts[e];
            let expected = if edge.is_interior() { 2 } else { 1 };
            if count != expected {
                return Err(Error::InvalidMesh(format!(
                    "edge {e} has {count} adjacent triangles, expected {expected}"
                )));
            }
            if edge.is_interior() && edge.neighbors[0] >= edge.neighbors[1] {
                return Err(Error::InvalidMesh(format!("edge {e} neighbours out of order")));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let e = &self.edges[tri.edges[i]];
                let opposite = tri.vertices[i];
                if e.vertices.contains(&opposite) {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t}: local edge {i} not opposite vertex {i}"
                    )));
                }
                let n = self.outward_normal(t, i);
                let to_opposite = self.vertices[opposite] - self.vertices[e.vertices[0]];
                if n.dot(to_opposite) >= 0.0 {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t}: normal of local edge {i} points inward"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: `vertices`, `triangles` and `edges` sections, one
    /// record per line (`id x y`, `id v0 v1 v2`, `id v0 v1 kind`).
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# domain {} level {}", self.domain, self.level)?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(w, "{i} {:.17e} {:.17e}", p.x, p.y)?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for (i, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.vertices;
            writeln!(w, "{i} {a} {b} {c}")?;
        }
        writeln!(w, "edges {}", self.edges.len())?;
        for (i, e) in self.edges.iter().enumerate() {
            writeln!(w, "{i} {} {} {}", e.vertices[0], e.vertices[1], e.kind)?;
        }
        Ok(())
    }

    pub fn save_dump(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_dump(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Level-0 mesh of one of the built-in domains.
///
/// * `MShape`: the three quarter-diamonds outside the fourth quadrant, each
///   quadrisected (12 triangles, 23 edges).
/// * `CrackDiamond`: all four quarter-diamonds, quadrisected, with the slit
///   vertices duplicated (16 triangles, 30 edges).
/// * `KovasznayRect`: a 4 x 4 grid of squares of side 1/2, each cut along its
///   rising diagonal (32 triangles).
pub fn build_initial_mesh(domain: DomainTag) -> Result<Mesh> {
    let o = Point::new(0.0, 0.0);
    let east = Point::new(1.0, 0.0);
    let north = Point::new(0.0, 1.0);
    let west = Point::new(-1.0, 0.0);
    let south = Point::new(0.0, -1.0);
    match domain {
        DomainTag::MShape => {
            let vertices = vec![o, east, north, west, south];
            let cells = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4]];
            let coarse = Mesh::build(vertices, cells, domain, 0)?;
            Ok(relabel_level(coarse.refine_uniform(), 0))
        }
        DomainTag::CrackDiamond => {
            // vertex 1 is the upper lip end of the slit, vertex 5 the lower
            let vertices = vec![o, east, north, west, south, east];
            let cells = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]];
            let coarse = Mesh::build(vertices, cells, domain, 0)?;
            Ok(relabel_level(coarse.refine_uniform(), 0))
        }
        DomainTag::KovasznayRect => {
            let n = 4;
            let h = 2.0 / n as f64;
            let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push(Point::new(-0.5 + i as f64 * h, j as f64 * h));
                }
            }
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let mut cells = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    // right-angle vertex first, so the diagonal is bisected
                    cells.push([id(i + 1, j), id(i + 1, j + 1), id(i, j)]);
                    cells.push([id(i, j + 1), id(i, j), id(i + 1, j + 1)]);
                }
            }
            Mesh::build(vertices, cells, domain, 0)
        }
        DomainTag::Custom => Err(Error::UnknownDomain(
            "custom meshes are built with Mesh::from_triangles".into(),
        )),
    }
}

fn relabel_level(mut mesh: Mesh, level: usize) -> Mesh {
    mesh.level = level;
    mesh
}
