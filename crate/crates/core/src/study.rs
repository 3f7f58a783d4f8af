//! Convergence studies: refine uniformly, assemble, solve, measure errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use crate::exact::{CaseTag, ManufacturedCase, PoissonCase, StokesCase};
use crate::mesh::{build_initial_mesh, Mesh};
use crate::norms::{
    check_pressure_bound, deviatoric_error, divergence_error, eoc, jump_seminorm, l2_error_cr, l2_error_p0,
    pressure_error,
};
use crate::poisson::{assemble_system, AssemblyOptions};
use crate::quadrature::{tri_rule, MAX_TRIANGLE_DEGREE};
use crate::solver::{solve, SolveOptions, SolveReport};
use crate::space::{DofMap, FieldCR, FieldP0};
use crate::sparse::norm2;
use crate::stokes::assemble_stokes_system;
use crate::vtk::save_vtk;
use crate::{Error, Result};

/// Viscosities of the Kovasznay study when none are given.
pub const DEFAULT_VISCOSITIES: [f64; 6] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

/// Bound on the multiplier and on `∫ tr σ_h`, relative to `‖rhs‖`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExportFlags {
    pub table: bool,
    pub csv: bool,
    pub vtk: bool,
}

impl ExportFlags {
    pub fn parse(s: &str) -> Result<ExportFlags> {
        let mut flags = ExportFlags::default();
        for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.to_ascii_lowercase().as_str() {
                "table" => flags.table = true,
                "csv" => flags.csv = true,
                "vtk" => flags.vtk = true,
                "none" => {}
                other => return Err(Error::Config(format!("unknown export `{other}`"))),
            }
        }
        Ok(flags)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub case: CaseTag,
    /// Last refinement level; levels `0..=kmax` are computed.
    pub kmax: usize,
    /// Viscosities for the Kovasznay case; ignored elsewhere.
    pub nus: Vec<f64>,
    /// Triangle rule degree for error norms and data; `None` picks 8 for
    /// smooth and 10 for singular cases.
    pub quad_err: Option<usize>,
    pub solver: SolveOptions,
    pub out_dir: Option<PathBuf>,
    pub export: ExportFlags,
    pub penalty_scale: f64,
}

impl StudyConfig {
    pub fn new(case: CaseTag) -> StudyConfig {
        StudyConfig {
            case,
            kmax: 3,
            nus: DEFAULT_VISCOSITIES.to_vec(),
            quad_err: None,
            solver: SolveOptions::default(),
            out_dir: None,
            export: ExportFlags::default(),
            penalty_scale: 1.0,
        }
    }

    /// Flat `key = value` file; `#` starts a comment.
    pub fn parse(text: &str) -> Result<StudyConfig> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let case = pairs
            .iter()
            .find(|(k, _)| k == "case")
            .ok_or_else(|| Error::Config("missing key `case`".into()))?
            .1
            .parse()?;
        let mut cfg = StudyConfig::new(case);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<StudyConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        StudyConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} `{value}`"));
        match key {
            "case" => self.case = value.parse()?,
            "kmax" => self.kmax = value.parse().map_err(|_| bad("kmax"))?,
            "nu" => {
                self.nus = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("nu")))
                    .collect::<Result<_>>()?
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "solver" => self.solver.method = value.parse()?,
            "tol" => self.solver.tol = value.parse().map_err(|_| bad("tol"))?,
            "quad_err" | "quad-err" => self.quad_err = Some(value.parse().map_err(|_| bad("quad_err"))?),
            "export" => self.export = ExportFlags::parse(value)?,
            "penalty_scale" => self.penalty_scale = value.parse().map_err(|_| bad("penalty_scale"))?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kmax < 1 {
            return Err(Error::Config("kmax must be at least 1".into()));
        }
        if self.case == CaseTag::S1 && self.nus.is_empty() {
            return Err(Error::Config("no viscosity given".into()));
        }
        if let Some(nu) = self.nus.iter().find(|nu| !(**nu > 0.0 && nu.is_finite())) {
            return Err(Error::InvalidViscosity(*nu));
        }
        if let Some(d) = self.quad_err {
            if !(1..=MAX_TRIANGLE_DEGREE).contains(&d) {
                return Err(Error::UnsupportedDegree {
                    degree: d,
                    max: MAX_TRIANGLE_DEGREE,
                });
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config(format!("invalid tol {}", self.solver.tol)));
        }
        if !(self.penalty_scale > 0.0) {
            return Err(Error::Config(format!("invalid penalty_scale {}", self.penalty_scale)));
        }
        Ok(())
    }

    pub fn error_degree(&self) -> usize {
        self.quad_err
            .unwrap_or(if self.case.is_singular() { 10 } else { 8 })
    }

    /// Viscosities to run: the configured list for the Kovasznay case, `1`
    /// for the other Stokes cases, none for Poisson.
    pub fn viscosities(&self) -> Vec<Option<f64>> {
        match self.case {
            CaseTag::S1 => self.nus.iter().map(|&nu| Some(nu)).collect(),
            CaseTag::S2 | CaseTag::S3 => vec![Some(1.0)],
            _ => vec![None],
        }
    }

    fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions {
            penalty_scale: self.penalty_scale,
            data_degree: self.error_degree(),
        }
    }
}

/// Error columns of one refinement level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyRecord {
    pub iter: usize,
    pub dofs: usize,
    pub h: f64,
    pub e_sigma: f64,
    pub e_div: f64,
    pub e_jump: f64,
    pub e_u: f64,
    /// Stokes only.
    pub e_p: Option<f64>,
    /// `‖(σ - σ_h)^d‖`, Stokes only.
    pub e_dev: Option<f64>,
    /// Root of the (viscosity-weighted) sum of squares of the components.
    pub e_total: f64,
    pub eoc_sigma: Option<f64>,
    pub eoc_div: Option<f64>,
    pub eoc_jump: Option<f64>,
    pub eoc_u: Option<f64>,
    pub eoc_p: Option<f64>,
    pub eoc_total: Option<f64>,
    pub residual: f64,
    pub solve_seconds: f64,
    /// Largest per-triangle `|‖div(σ - σ_h)‖_T - ‖f - Π₀f‖_T|`.
    pub div_identity_deviation: f64,
    /// Stokes multiplier `φ`.
    pub multiplier: Option<f64>,
    /// `∫_Ω tr σ_h`.
    pub trace_integral: Option<f64>,
    /// `‖rhs‖`, the reference for the constraint checks.
    pub rhs_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub case: CaseTag,
    pub nu: Option<f64>,
    pub records: Vec<StudyRecord>,
    /// Why the study stopped early, if it did.
    pub failure: Option<String>,
    pub seconds: f64,
}

impl StudyResult {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    /// File stem used for exports, e.g. `p1` or `s1_nu1e-3`.
    pub fn stem(&self) -> String {
        match (self.case, self.nu) {
            (CaseTag::S1, Some(nu)) => format!("{}_nu{:e}", self.case, nu),
            _ => self.case.to_string(),
        }
    }
}

/// Discrete solution on one mesh.
#[derive(Clone, Debug)]
pub struct LevelSolution {
    pub sigma_h: FieldCR,
    pub u_h: FieldP0,
    pub report: SolveReport,
    pub multiplier: Option<f64>,
    pub rhs_norm: f64,
    pub gamma: Vec<f64>,
    pub dofs: usize,
    /// `t·σ_h = (1/ν) ∫ tr σ_h` for Stokes.
    trace_row_value: Option<f64>,
}

fn split_solution(mesh: &Mesh, x: &[f64], ncomp_sigma: usize, ncomp_u: usize) -> Result<(FieldCR, FieldP0)> {
    let cr = DofMap::cr(mesh, ncomp_sigma);
    let p0 = DofMap::p0(mesh, ncomp_u);
    let sigma = FieldCR::new(cr, x[..cr.len()].to_vec())?;
    let u = FieldP0::new(p0, x[cr.len()..cr.len() + p0.len()].to_vec())?;
    Ok((sigma, u))
}

/// Assembles and solves the discrete problem of `case` on `mesh`.
pub fn solve_level(mesh: &Mesh, case: &ManufacturedCase, cfg: &StudyConfig) -> Result<LevelSolution> {
    match case {
        ManufacturedCase::Poisson(c) => {
            let sys = assemble_system(mesh, c, &cfg.assembly())?;
            let report = solve(&sys.matrix, &sys.rhs, &cfg.solver)?;
            let (sigma_h, u_h) = split_solution(mesh, &report.solution, 2, 1)?;
            Ok(LevelSolution {
                sigma_h,
                u_h,
                multiplier: None,
                rhs_norm: norm2(&sys.rhs),
                gamma: sys.penalty,
                dofs: sys.n_sigma + sys.n_u,
                trace_row_value: None,
                report,
            })
        }
        ManufacturedCase::Stokes(c) => {
            let sys = assemble_stokes_system(mesh, c, c.nu, &cfg.assembly())?;
            let report = solve(&sys.matrix, &sys.rhs, &cfg.solver)?;
            let (sigma_h, u_h) = split_solution(mesh, &report.solution, 4, 2)?;
            let last = sys.multiplier_index();
            let t_sigma: f64 = sys
                .matrix
                .row(last)
                .map(|(j, v)| v * report.solution[j])
                .sum();
            Ok(LevelSolution {
                sigma_h,
                u_h,
                multiplier: Some(report.solution[last]),
                rhs_norm: norm2(&sys.rhs),
                dofs: sys.len(),
                gamma: sys.penalty,
                trace_row_value: Some(t_sigma),
                report,
            })
        }
    }
}

/// Error columns of a solved level, with the local divergence identity and
/// the pressure bound enforced.
pub fn evaluate_level(mesh: &Mesh, case: &ManufacturedCase, sol: &LevelSolution, cfg: &StudyConfig) -> Result<StudyRecord> {
    let rule = tri_rule(cfg.error_degree())?;
    let id_tol = 1e-10f64.max(10.0 * sol.report.relative_residual);
    let mut rec = StudyRecord {
        dofs: sol.dofs,
        h: mesh.max_diameter(),
        residual: sol.report.relative_residual,
        solve_seconds: sol.report.wall_time.as_secs_f64(),
        multiplier: sol.multiplier,
        rhs_norm: sol.rhs_norm,
        ..Default::default()
    };
    rec.e_jump = jump_seminorm(mesh, &sol.sigma_h, &sol.gamma);
    match case {
        ManufacturedCase::Poisson(c) => {
            rec.e_sigma = l2_error_cr(mesh, rule, |p, s| c.sigma(p, s), &sol.sigma_h);
            let div = divergence_error(mesh, rule, |p| [c.f(p)], &sol.sigma_h);
            rec.e_div = div.global;
            rec.div_identity_deviation = div.worst_deviation().1;
            div.check_identity(id_tol)?;
            rec.e_u = l2_error_p0(mesh, rule, |p, s| [c.u(p, s)], &sol.u_h);
            rec.e_total = (rec.e_sigma.powi(2) + rec.e_div.powi(2) + rec.e_jump.powi(2) + rec.e_u.powi(2)).sqrt();
        }
        ManufacturedCase::Stokes(c) => {
            rec.e_sigma = l2_error_cr(mesh, rule, |p, s| c.sigma(p, s), &sol.sigma_h);
            let div = divergence_error(mesh, rule, |p| c.f(p).map(|v| -v), &sol.sigma_h);
            rec.e_div = div.global;
            rec.div_identity_deviation = div.worst_deviation().1;
            div.check_identity(id_tol)?;
            rec.e_u = l2_error_p0(mesh, rule, |p, s| c.u(p, s), &sol.u_h);
            let e_p = pressure_error(mesh, rule, |p, s| c.p(p, s), &sol.sigma_h);
            check_pressure_bound(e_p, rec.e_sigma)?;
            rec.e_p = Some(e_p);
            let e_dev = deviatoric_error(mesh, rule, |p, s| c.sigma(p, s), &sol.sigma_h);
            rec.e_dev = Some(e_dev);
            let nu = c.nu;
            rec.e_total = ((e_dev.powi(2) + rec.e_jump.powi(2) + rec.e_div.powi(2)) / nu + nu * rec.e_u.powi(2)).sqrt();
            rec.trace_integral = sol.trace_row_value.map(|t| t * nu);
            let scale = sol.rhs_norm.max(f64::MIN_POSITIVE);
            let phi = sol.multiplier.unwrap_or(0.0);
            if phi.abs() > CONSTRAINT_TOL * scale {
                warn!("{}: multiplier {phi:.3e} exceeds {CONSTRAINT_TOL:e} * ‖rhs‖ on level {}", c.tag, mesh.level());
            }
        }
    }
    Ok(rec)
}

/// Fills the EOC columns from consecutive records.
pub fn fill_eoc(records: &mut [StudyRecord]) {
    for k in 1..records.len() {
        let (prev, cur) = records.split_at_mut(k);
        let (a, b) = (&prev[k - 1], &mut cur[0]);
        let r = |x: f64, y: f64| eoc(x, y, a.dofs, b.dofs);
        b.eoc_sigma = r(a.e_sigma, b.e_sigma);
        b.eoc_div = r(a.e_div, b.e_div);
        b.eoc_jump = r(a.e_jump, b.e_jump);
        b.eoc_u = r(a.e_u, b.e_u);
        b.eoc_total = r(a.e_total, b.e_total);
        b.eoc_p = match (a.e_p, b.e_p) {
            (Some(x), Some(y)) => r(x, y),
            _ => None,
        };
    }
}

fn run_single(cfg: &StudyConfig, nu: Option<f64>) -> Result<StudyResult> {
    let case = match (cfg.case, nu) {
        (CaseTag::P1, _) => ManufacturedCase::Poisson(PoissonCase::p1()),
        (CaseTag::P2, _) => ManufacturedCase::Poisson(PoissonCase::p2()),
        (CaseTag::P3, _) => ManufacturedCase::Poisson(PoissonCase::p3()),
        (CaseTag::S1, nu) => ManufacturedCase::Stokes(StokesCase::s1(nu.unwrap_or(1.0))?),
        (CaseTag::S2, _) => ManufacturedCase::Stokes(StokesCase::s2()),
        (CaseTag::S3, _) => ManufacturedCase::Stokes(StokesCase::s3()),
    };
    let start = Instant::now();
    let mut result = StudyResult {
        case: cfg.case,
        nu,
        records: Vec::new(),
        failure: None,
        seconds: 0.0,
    };
    let mut mesh = build_initial_mesh(case.domain())?;
    for k in 0..=cfg.kmax {
        if k > 0 {
            mesh = mesh.refine_uniform();
        }
        let level = solve_level(&mesh, &case, cfg).and_then(|sol| {
            let rec = evaluate_level(&mesh, &case, &sol, cfg)?;
            Ok((sol, rec))
        });
        match level {
            Ok((sol, mut rec)) => {
                rec.iter = k;
                info!(
                    "{} level {k}: {} dofs, e_sigma {:.3e}, residual {:.1e}, solve {:.2} s",
                    result.stem(),
                    rec.dofs,
                    rec.e_sigma,
                    rec.residual,
                    rec.solve_seconds
                );
                if cfg.export.vtk {
                    if let Some(dir) = &cfg.out_dir {
                        let path = dir.join(format!("{}_level{k}.vtk", result.stem()));
                        let title = format!("{} level {k}", result.stem());
                        save_vtk(&path, &mesh, &title, &sol.sigma_h, &sol.u_h)?;
                    }
                }
                result.records.push(rec);
            }
            Err(e) => {
                warn!("{} level {k} failed: {e}", result.stem());
                result.failure = Some(format!("level {k}: {e}"));
                break;
            }
        }
    }
    fill_eoc(&mut result.records);
    result.seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Runs the study of `cfg`, one result per viscosity (a single one outside
/// the Kovasznay case). A failing level ends its study; the levels before it
/// are kept and the failure is recorded in the result.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyResult>> {
    cfg.validate()?;
    if let Some(dir) = &cfg.out_dir {
        if cfg.export.csv || cfg.export.vtk {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    cfg.viscosities().into_iter().map(|nu| run_single(cfg, nu)).collect()
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn fixed(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

/// Aligned table in the layout of the usual convergence tables.
pub fn format_table(result: &StudyResult) -> String {
    let stokes = result.records.iter().any(|r| r.e_p.is_some());
    let mut header = vec!["iter", "DOFs", "|s-s_h|", "EOC", "|div(s-s_h)|", "EOC", "|jump|", "EOC", "|u-u_h|", "EOC"];
    if stokes {
        header.extend(["|p-p_h|", "EOC"]);
    }
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &result.records {
        let mut row = vec![
            r.iter.to_string(),
            r.dofs.to_string(),
            sci(r.e_sigma),
            fixed(r.eoc_sigma),
            sci(r.e_div),
            fixed(r.eoc_div),
            sci(r.e_jump),
            fixed(r.eoc_jump),
            sci(r.e_u),
            fixed(r.eoc_u),
        ];
        if stokes {
            row.push(r.e_p.map(sci).unwrap_or_default());
            row.push(fixed(r.eoc_p));
        }
        rows.push(row);
    }
    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let title = match result.nu {
        Some(nu) => format!("case {} (nu = {nu:e})", result.case),
        None => format!("case {}", result.case),
    };
    let _ = writeln!(out, "{title}");
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if let Some(f) = &result.failure {
        let _ = writeln!(out, "stopped early: {f}");
    }
    out
}

fn csv_num(v: f64) -> String {
    format!("{v:.5e}")
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_num).unwrap_or_default()
}

pub fn format_csv(result: &StudyResult) -> String {
    let stokes = result.records.iter().any(|r| r.e_p.is_some());
    let mut out = String::from("iter,dofs,e_sigma,eoc_sigma,e_div,eoc_div,e_jump,eoc_jump,e_u,eoc_u");
    if stokes {
        out.push_str(",e_p,eoc_p");
    }
    out.push('\n');
    for r in &result.records {
        let mut cols = vec![
            r.iter.to_string(),
            r.dofs.to_string(),
            csv_num(r.e_sigma),
            csv_opt(r.eoc_sigma),
            csv_num(r.e_div),
            csv_opt(r.eoc_div),
            csv_num(r.e_jump),
            csv_opt(r.eoc_jump),
            csv_num(r.e_u),
            csv_opt(r.eoc_u),
        ];
        if stokes {
            cols.push(csv_opt(r.e_p));
            cols.push(csv_opt(r.eoc_p));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Writes the CSV files requested by `cfg` and returns the text tables.
pub fn emit_outputs(results: &[StudyResult], cfg: &StudyConfig) -> Result<String> {
    let mut tables = String::new();
    for r in results {
        tables.push_str(&format_table(r));
        tables.push('\n');
        if cfg.export.csv {
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let path = dir.join(format!("{}.csv", r.stem()));
            std::fs::write(&path, format_csv(r)).map_err(|e| Error::io(&path, e))?;
        }
        if cfg.export.table {
            if let Some(dir) = &cfg.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join(format!("{}.txt", r.stem()));
                std::fs::write(&path, format_table(r)).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(tables)
}

impl std::fmt::Display for StudyResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_table(self))
    }
}
