use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;

use crmixed::study::{emit_outputs, ExportFlags, CONSTRAINT_TOL};
use crmixed::{run_study, CaseTag, Error, Result, SolverMethod, StudyConfig, StudyResult};

/// Convergence studies for the dual-mixed Crouzeix-Raviart scheme.
#[derive(Parser, Debug)]
#[command(name = "crmixed", version, about)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// p1, p2, p3, s1, s2 or s3.
    #[arg(long)]
    case: Option<CaseTag>,

    /// Last refinement level.
    #[arg(long)]
    kmax: Option<usize>,

    /// Viscosities for s1, comma separated.
    #[arg(long, value_delimiter = ',')]
    nu: Option<Vec<f64>>,

    /// Output directory for CSV, table and VTK files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// direct or iterative.
    #[arg(long)]
    solver: Option<SolverMethod>,

    /// Triangle rule degree for error norms.
    #[arg(long = "quad-err")]
    quad_err: Option<usize>,

    /// Comma separated subset of table, csv, vtk.
    #[arg(long)]
    export: Option<String>,

    /// Exit with an error unless every level passes the runtime checks.
    #[arg(long)]
    assert: bool,
}

fn build_config(cli: &Cli) -> Result<StudyConfig> {
    let mut cfg = match (&cli.config, cli.case) {
        (Some(path), _) => StudyConfig::from_file(path)?,
        (None, Some(case)) => StudyConfig::new(case),
        (None, None) => return Err(Error::Config("either --case or --config is required".into())),
    };
    if let Some(case) = cli.case {
        cfg.case = case;
    }
    if let Some(k) = cli.kmax {
        cfg.kmax = k;
    }
    if let Some(nu) = &cli.nu {
        cfg.nus = nu.clone();
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(m) = cli.solver {
        cfg.solver.method = m;
    }
    if let Some(d) = cli.quad_err {
        cfg.quad_err = Some(d);
    }
    if let Some(e) = &cli.export {
        cfg.export = ExportFlags::parse(e)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check(results: &[StudyResult]) -> Result<()> {
    for r in results {
        if let Some(f) = &r.failure {
            return Err(Error::Assertion(format!("{}: {f}", r.stem())));
        }
        for rec in &r.records {
            let scale = CONSTRAINT_TOL * rec.rhs_norm;
            if r.case == CaseTag::S1 {
                if let Some(phi) = rec.multiplier.filter(|phi| phi.abs() > scale) {
                    return Err(Error::Assertion(format!("{} level {}: multiplier {phi:.3e}", r.stem(), rec.iter)));
                }
                if let Some(tr) = rec.trace_integral.filter(|tr| tr.abs() > scale) {
                    return Err(Error::Assertion(format!("{} level {}: ∫ tr σ_h = {tr:.3e}", r.stem(), rec.iter)));
                }
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = build_config(cli)?;
    let results = run_study(&cfg)?;
    print!("{}", emit_outputs(&results, &cfg)?);
    if cli.assert {
        check(&results)?;
    }
    Ok(results.iter().all(StudyResult::is_ok))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
