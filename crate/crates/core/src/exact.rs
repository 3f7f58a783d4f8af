//! Manufactured solutions.
//!
//! Poisson cases provide `u`, `σ = -∇u`, `f = -Δu = div σ` and `g = u|_Γ`.
//! Stokes cases provide the velocity `u`, the zero-mean pressure `p`, the
//! pseudostress `σ = ν∇u - pI` (row-major `11, 12, 21, 22`) and
//! `f = -div σ`.
//!
//! Singular fields are written in polar coordinates with the angle in
//! `[0, 2π)` measured from the positive x-axis. Evaluators take the point and
//! a probe point inside the owning triangle; the probe only decides the
//! branch for points lying exactly on the positive x-axis, which is the
//! crack (or the boundary ray of the M-shaped domain).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::mesh::{DomainTag, Point};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseTag {
    P1,
    P2,
    P3,
    S1,
    S2,
    S3,
}

impl CaseTag {
    pub const ALL: [CaseTag; 6] = [
        CaseTag::P1,
        CaseTag::P2,
        CaseTag::P3,
        CaseTag::S1,
        CaseTag::S2,
        CaseTag::S3,
    ];

    pub fn is_stokes(self) -> bool {
        matches!(self, CaseTag::S1 | CaseTag::S2 | CaseTag::S3)
    }

    pub fn domain(self) -> DomainTag {
        match self {
            CaseTag::P1 | CaseTag::P2 | CaseTag::S2 => DomainTag::MShape,
            CaseTag::P3 | CaseTag::S3 => DomainTag::CrackDiamond,
            CaseTag::S1 => DomainTag::KovasznayRect,
        }
    }

    /// Singular cases get the higher error quadrature.
    pub fn is_singular(self) -> bool {
        !matches!(self, CaseTag::P1 | CaseTag::S1)
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::P1 => "p1",
            CaseTag::P2 => "p2",
            CaseTag::P3 => "p3",
            CaseTag::S1 => "s1",
            CaseTag::S2 => "s2",
            CaseTag::S3 => "s3",
        }
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseTag::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Angle in `[0, 2π)`; points on the positive x-axis take the branch of
/// `side` (upper lip `0`, lower lip `2π`).
pub fn polar(p: Point, side: Point) -> (f64, f64) {
    let r = p.norm();
    let mut theta = p.y.atan2(p.x);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    if p.y == 0.0 && p.x > 0.0 && side.y < 0.0 {
        theta = 2.0 * PI;
    }
    (r, theta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManufacturedCase {
    Poisson(PoissonCase),
    Stokes(StokesCase),
}

impl ManufacturedCase {
    pub fn new(tag: CaseTag, nu: f64) -> Result<ManufacturedCase> {
        Ok(match tag {
            CaseTag::P1 => ManufacturedCase::Poisson(PoissonCase::p1()),
            CaseTag::P2 => ManufacturedCase::Poisson(PoissonCase::p2()),
            CaseTag::P3 => ManufacturedCase::Poisson(PoissonCase::p3()),
            CaseTag::S1 => ManufacturedCase::Stokes(StokesCase::s1(nu)?),
            CaseTag::S2 => ManufacturedCase::Stokes(StokesCase::s2()),
            CaseTag::S3 => ManufacturedCase::Stokes(StokesCase::s3()),
        })
    }

    pub fn tag(&self) -> CaseTag {
        match self {
            ManufacturedCase::Poisson(c) => c.tag,
            ManufacturedCase::Stokes(c) => c.tag,
        }
    }

    pub fn domain(&self) -> DomainTag {
        self.tag().domain()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PoissonKind {
    Gaussian,
    /// `r^a sin(a θ) - c r²` with `-Δu = 4c`.
    Corner { a: f64, c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonCase {
    pub tag: CaseTag,
    kind: PoissonKind,
}

impl PoissonCase {
    /// `u = exp(-10 (x² + y²))` on the M-shaped domain.
    pub fn p1() -> Self {
        PoissonCase {
            tag: CaseTag::P1,
            kind: PoissonKind::Gaussian,
        }
    }

    /// `u = r^{2/3} sin(2θ/3) - r²/4`, `-Δu = 1`, on the M-shaped domain.
    pub fn p2() -> Self {
        PoissonCase {
            tag: CaseTag::P2,
            kind: PoissonKind::Corner { a: 2.0 / 3.0, c: 0.25 },
        }
    }

    /// `u = r^{1/2} sin(θ/2)`, harmonic, on the crack domain.
    pub fn p3() -> Self {
        PoissonCase {
            tag: CaseTag::P3,
            kind: PoissonKind::Corner { a: 0.5, c: 0.0 },
        }
    }

    pub fn u(&self, p: Point, side: Point) -> f64 {
        match self.kind {
            PoissonKind::Gaussian => (-10.0 * (p.x * p.x + p.y * p.y)).exp(),
            PoissonKind::Corner { a, c } => {
                let (r, th) = polar(p, side);
                r.powf(a) * (a * th).sin() - c * r * r
            }
        }
    }

    /// `σ = -∇u`.
    pub fn sigma(&self, p: Point, side: Point) -> [f64; 2] {
        match self.kind {
            PoissonKind::Gaussian => {
                let u = self.u(p, side);
                [20.0 * p.x * u, 20.0 * p.y * u]
            }
            PoissonKind::Corner { a, c } => {
                // ∇(r^a sin aθ) = a r^{a-1} (sin((a-1)θ), cos((a-1)θ))
                let (r, th) = polar(p, side);
                let s = a * r.powf(a - 1.0);
                let b = (a - 1.0) * th;
                [-(s * b.sin()) + 2.0 * c * p.x, -(s * b.cos()) + 2.0 * c * p.y]
            }
        }
    }

    /// `f = -Δu`.
    pub fn f(&self, p: Point) -> f64 {
        match self.kind {
            PoissonKind::Gaussian => {
                let r2 = p.x * p.x + p.y * p.y;
                (40.0 - 400.0 * r2) * (-10.0 * r2).exp()
            }
            PoissonKind::Corner { c, .. } => 4.0 * c,
        }
    }

    pub fn g(&self, p: Point, side: Point) -> f64 {
        self.u(p, side)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum StokesKind {
    Kovasznay {
        lambda: f64,
        /// Mean of `-e^{2λx}/2` over the rectangle.
        p0: f64,
    },
    Corner(CornerFlow),
}

/// Corner flow `u = r^λ [(1+λ) sinθ Ψ + cosθ Ψ', sinθ Ψ' - (1+λ) cosθ Ψ]`,
/// `p = -r^{λ-1} ((1+λ)² Ψ' + Ψ''') / (1-λ) - p_mean`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerFlow {
    pub lambda: f64,
    pub omega: f64,
    pub kind: StreamProfile,
    /// Mean of the unnormalised pressure over the domain.
    pub p_mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StreamProfile {
    /// Reentrant corner of angle `ω`.
    Wedge,
    /// `Ψ = 3 sin(θ/2) - sin(3θ/2)`.
    Crack,
}

impl CornerFlow {
    /// `[Ψ, Ψ', Ψ'', Ψ''']`.
    pub fn psi(&self, th: f64) -> [f64; 4] {
        let l = self.lambda;
        match self.kind {
            StreamProfile::Wedge => {
                let cw = (l * self.omega).cos();
                let (a, b) = (1.0 + l, 1.0 - l);
                let (sa, ca) = (a * th).sin_cos();
                let (sb, cb) = (b * th).sin_cos();
                [
                    sa * cw / a - ca - sb * cw / b + cb,
                    ca * cw + a * sa - cb * cw - b * sb,
                    -a * sa * cw + a * a * ca + b * sb * cw - b * b * cb,
                    -a * a * ca * cw - a * a * a * sa + b * b * cb * cw + b * b * b * sb,
                ]
            }
            StreamProfile::Crack => {
                let (s1, c1) = (0.5 * th).sin_cos();
                let (s3, c3) = (1.5 * th).sin_cos();
                [
                    3.0 * s1 - s3,
                    1.5 * c1 - 1.5 * c3,
                    -0.75 * s1 + 2.25 * s3,
                    -0.375 * c1 + 3.375 * c3,
                ]
            }
        }
    }

    /// Angular profile of the velocity, `u = r^λ w(θ)`, and `w'(θ)`.
    fn velocity_profile(&self, th: f64) -> ([f64; 2], [f64; 2]) {
        let a = 1.0 + self.lambda;
        let [ps, d1, d2, _] = self.psi(th);
        let (s, c) = th.sin_cos();
        let w = [a * s * ps + c * d1, s * d1 - a * c * ps];
        let dw = [
            a * (c * ps + s * d1) - s * d1 + c * d2,
            c * d1 + s * d2 + a * (s * ps - c * d1),
        ];
        (w, dw)
    }

    /// Angular profile of the unnormalised pressure, `p = r^{λ-1} q(θ)`.
    pub fn pressure_profile(&self, th: f64) -> f64 {
        let l = self.lambda;
        let [_, d1, _, d3] = self.psi(th);
        -((1.0 + l) * (1.0 + l) * d1 + d3) / (1.0 - l)
    }

    fn velocity(&self, r: f64, th: f64) -> [f64; 2] {
        let (w, _) = self.velocity_profile(th);
        let s = r.powf(self.lambda);
        [s * w[0], s * w[1]]
    }

    /// Row-major velocity gradient.
    fn gradient(&self, r: f64, th: f64) -> [f64; 4] {
        let l = self.lambda;
        let (w, dw) = self.velocity_profile(th);
        let (s, c) = th.sin_cos();
        let k = r.powf(l - 1.0);
        // ∂x = cos ∂r - sin/r ∂θ, ∂y = sin ∂r + cos/r ∂θ
        [
            k * (l * c * w[0] - s * dw[0]),
            k * (l * s * w[0] + c * dw[0]),
            k * (l * c * w[1] - s * dw[1]),
            k * (l * s * w[1] + c * dw[1]),
        ]
    }

    fn pressure(&self, r: f64, th: f64) -> f64 {
        r.powf(self.lambda - 1.0) * self.pressure_profile(th) - self.p_mean
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesCase {
    pub tag: CaseTag,
    pub nu: f64,
    kind: StokesKind,
}

/// Kovasznay parameter `λ = -8π² / (ν⁻¹ + sqrt(ν⁻² + 16π²))`.
pub fn kovasznay_lambda(nu: f64) -> f64 {
    let inv = 1.0 / nu;
    -8.0 * PI * PI / (inv + (inv * inv + 16.0 * PI * PI).sqrt())
}

/// Smallest positive root of `sin(λω) + λ sin(ω) = 0` for `ω = 3π/2`, by
/// bisection on `(0.5, 0.6)`.
pub fn wedge_exponent() -> f64 {
    let omega = 1.5 * PI;
    let h = |l: f64| (l * omega).sin() + l * omega.sin();
    let (mut lo, mut hi) = (0.5, 0.6);
    debug_assert!(h(lo) * h(hi) < 0.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if h(lo) * h(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫_Ω r^{λ-1} q(θ)` over the part of the diamond `|x| + |y| < 1` with
/// `θ ∈ (0, ω)`, reduced to a 1-D angular integral: the radial extent is
/// `R(θ) = 1 / (|cos θ| + |sin θ|)`, so the integral is
/// `∫ q(θ) R(θ)^{λ+1} / (λ+1) dθ`. `ω` must be a multiple of `π/2`.
fn diamond_sector_integral(flow: &CornerFlow) -> f64 {
    let (x, w) = gauss_legendre(20);
    let quarters = (flow.omega / FRAC_PI_2).round() as usize;
    let pieces = 16;
    let mut total = 0.0;
    for q in 0..quarters {
        for k in 0..pieces {
            let a = q as f64 * FRAC_PI_2 + k as f64 * FRAC_PI_2 / pieces as f64;
            let h = FRAC_PI_2 / pieces as f64;
            for (xi, wi) in x.iter().zip(&w) {
                let th = a + 0.5 * h * (xi + 1.0);
                let big_r = 1.0 / (th.cos().abs() + th.sin().abs());
                total += 0.5 * h * wi * flow.pressure_profile(th) * big_r.powf(flow.lambda + 1.0)
                    / (flow.lambda + 1.0);
            }
        }
    }
    total
}

impl StokesCase {
    /// Kovasznay velocity and pressure on `(-1/2, 3/2) x (0, 2)` with the
    /// Stokes body force `f = -νΔu + ∇p`.
    pub fn s1(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidViscosity(nu));
        }
        let lambda = kovasznay_lambda(nu);
        let p0 = -((3.0 * lambda).exp() - (-lambda).exp()) / (8.0 * lambda);
        Ok(StokesCase {
            tag: CaseTag::S1,
            nu,
            kind: StokesKind::Kovasznay { lambda, p0 },
        })
    }

    /// Corner singularity at the reentrant corner of the M-shaped domain.
    pub fn s2() -> Self {
        Self::corner(CaseTag::S2, wedge_exponent(), 1.5 * PI, StreamProfile::Wedge)
    }

    /// Corner singularity at the tip of the crack.
    pub fn s3() -> Self {
        Self::corner(CaseTag::S3, 0.5, 2.0 * PI, StreamProfile::Crack)
    }

    fn corner(tag: CaseTag, lambda: f64, omega: f64, kind: StreamProfile) -> Self {
        let mut flow = CornerFlow {
            lambda,
            omega,
            kind,
            p_mean: 0.0,
        };
        let area = tag.domain().area().expect("built-in domain");
        flow.p_mean = diamond_sector_integral(&flow) / area;
        StokesCase {
            tag,
            nu: 1.0,
            kind: StokesKind::Corner(flow),
        }
    }

    pub fn lambda(&self) -> f64 {
        match self.kind {
            StokesKind::Kovasznay { lambda, .. } => lambda,
            StokesKind::Corner(c) => c.lambda,
        }
    }

    pub fn corner_flow(&self) -> Option<&CornerFlow> {
        match &self.kind {
            StokesKind::Corner(c) => Some(c),
            StokesKind::Kovasznay { .. } => None,
        }
    }

    pub fn u(&self, p: Point, side: Point) -> [f64; 2] {
        match self.kind {
            StokesKind::Kovasznay { lambda, .. } => {
                let e = (lambda * p.x).exp();
                let (s, c) = (2.0 * PI * p.y).sin_cos();
                [1.0 - e * c, lambda / (2.0 * PI) * e * s]
            }
            StokesKind::Corner(flow) => {
                let (r, th) = polar(p, side);
                flow.velocity(r, th)
            }
        }
    }

    /// Row-major `∇u`, row `i` is `∇u_i`.
    pub fn grad_u(&self, p: Point, side: Point) -> [f64; 4] {
        match self.kind {
            StokesKind::Kovasznay { lambda, .. } => {
                let e = (lambda * p.x).exp();
                let (s, c) = (2.0 * PI * p.y).sin_cos();
                [
                    -lambda * e * c,
                    2.0 * PI * e * s,
                    lambda * lambda / (2.0 * PI) * e * s,
                    lambda * e * c,
                ]
            }
            StokesKind::Corner(flow) => {
                let (r, th) = polar(p, side);
                flow.gradient(r, th)
            }
        }
    }

    /// Zero-mean pressure.
    pub fn p(&self, p: Point, side: Point) -> f64 {
        match self.kind {
            StokesKind::Kovasznay { lambda, p0 } => -0.5 * (2.0 * lambda * p.x).exp() - p0,
            StokesKind::Corner(flow) => {
                let (r, th) = polar(p, side);
                flow.pressure(r, th)
            }
        }
    }

    /// `σ = ν∇u - pI`.
    pub fn sigma(&self, p: Point, side: Point) -> [f64; 4] {
        let g = self.grad_u(p, side);
        let q = self.p(p, side);
        let nu = self.nu;
        [nu * g[0] - q, nu * g[1], nu * g[2], nu * g[3] - q]
    }

    /// `f = -div σ = -νΔu + ∇p`.
    pub fn f(&self, p: Point) -> [f64; 2] {
        match self.kind {
            StokesKind::Kovasznay { lambda, .. } => {
                let e = (lambda * p.x).exp();
                let (s, c) = (2.0 * PI * p.y).sin_cos();
                let k = lambda * lambda - 4.0 * PI * PI;
                let lap = [-k * e * c, lambda / (2.0 * PI) * k * e * s];
                let grad_p = [-lambda * (2.0 * lambda * p.x).exp(), 0.0];
                [-self.nu * lap[0] + grad_p[0], -self.nu * lap[1] + grad_p[1]]
            }
            StokesKind::Corner(_) => [0.0, 0.0],
        }
    }

    pub fn g(&self, p: Point, side: Point) -> [f64; 2] {
        self.u(p, side)
    }
}
