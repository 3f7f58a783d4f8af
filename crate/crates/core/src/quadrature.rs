//! Gauss quadrature on the reference edge `[0, 1]` and the reference
//! triangle `{(x, y) : x, y >= 0, x + y <= 1}`.
//!
//! Edge rules are Gauss-Legendre. Triangle rules of degree 1 and 2 are the
//! classical centroid and three-point rules; higher degrees use the collapsed
//! (Duffy) product of two Gauss-Legendre rules, which has positive weights
//! and strictly interior points.

use std::sync::OnceLock;

use crate::mesh::Point;
use crate::{Error, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 10;
pub const MAX_EDGE_DEGREE: usize = 15;

/// Rule on the reference triangle, points in barycentric coordinates.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    /// Sum to 1/2.
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule on the reference edge `[0, 1]`.
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    /// Sum to 1.
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl EdgeRule {
    fn build(degree: usize) -> EdgeRule {
        let n = (degree + 2) / 2;
        let (x, w) = gauss_legendre(n);
        EdgeRule {
            points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
            degree,
        }
    }

    /// Physical points, weights (summing to `|e|`) and edge parameters
    /// `s in [0, 1]` measured from `a` to `b`.
    pub fn map(&self, a: Point, b: Point) -> impl Iterator<Item = (Point, f64, f64)> + '_ {
        let len = (b - a).norm();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&s, &w)| (a + s * (b - a), w * len, s))
    }
}

impl TriangleRule {
    fn build(degree: usize) -> TriangleRule {
        match degree {
            1 => TriangleRule {
                points: vec![[1.0 / 3.0; 3]],
                weights: vec![0.5],
                degree,
            },
            2 => TriangleRule {
                points: vec![
                    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
                    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
                ],
                weights: vec![1.0 / 6.0; 3],
                degree,
            },
            _ => {
                // x = s, y = t (1 - s), Jacobian (1 - s): degree + 1 in s,
                // degree in t.
                let (xs, ws) = gauss_legendre((degree + 3) / 2);
                let (xt, wt) = gauss_legendre((degree + 2) / 2);
                let mut points = Vec::with_capacity(xs.len() * xt.len());
                let mut weights = Vec::with_capacity(xs.len() * xt.len());
                for (s, ws) in xs.iter().zip(&ws) {
                    let s = 0.5 * (s + 1.0);
                    for (t, wt) in xt.iter().zip(&wt) {
                        let t = 0.5 * (t + 1.0);
                        let x = s;
                        let y = t * (1.0 - s);
                        points.push([1.0 - x - y, x, y]);
                        weights.push(0.25 * ws * wt * (1.0 - s));
                    }
                }
                TriangleRule {
                    points,
                    weights,
                    degree,
                }
            }
        }
    }

    /// Physical points, weights (summing to `|T|`) and barycentric coordinates
    /// with respect to the given vertices.
    pub fn map(&self, v: [Point; 3]) -> impl Iterator<Item = (Point, f64, [f64; 3])> + '_ {
        let jac = (v[1] - v[0]).cross(v[2] - v[0]).abs();
        self.points.iter().zip(&self.weights).map(move |(&l, &w)| {
            let p = Point::new(
                l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
                l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y,
            );
            (p, w * jac, l)
        })
    }
}

static TRIANGLE_RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
static EDGE_RULES: OnceLock<Vec<EdgeRule>> = OnceLock::new();

/// Rule exact for bivariate polynomials of total degree `degree`.
pub fn tri_rule(degree: usize) -> Result<&'static TriangleRule> {
    if !(1..=MAX_TRIANGLE_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    let rules = TRIANGLE_RULES
        .get_or_init(|| (1..=MAX_TRIANGLE_DEGREE).map(TriangleRule::build).collect());
    Ok(&rules[degree - 1])
}

/// Rule exact for univariate polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<&'static EdgeRule> {
    if !(1..=MAX_EDGE_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_EDGE_DEGREE,
        });
    }
    let rules = EDGE_RULES.get_or_init(|| (1..=MAX_EDGE_DEGREE).map(EdgeRule::build).collect());
    Ok(&rules[degree - 1])
}
