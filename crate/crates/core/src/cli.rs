//! Command-line driver. `main.rs` only forwards to [`main_with_args`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::certify::{extract_certificate, verify_certificate, Certificate};
use crate::ensemble::{run_ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::gallery::{entry, gallery};
use crate::hierarchy::{run_hierarchy, HierarchyOptions, HierarchyRun};
use crate::instance::{InstanceFile, PopInstance};
use crate::localopt::{audit, AuditOptions};
use crate::relaxation::{augment_archimedean, build_sos_relaxation, min_level};
use crate::sdp::{read_sdp, solve, trace_csv, write_sdp, SdpSolution, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_UNVERIFIED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "polyopt", version, about = "Polynomial optimization: local audits, Lasserre relaxations, certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one relaxation level of an instance, or an SDP text file.
    Solve(SolveArgs),
    /// Run the hierarchy until flat truncation, stagnation or the level cap.
    Hierarchy(HierarchyArgs),
    /// Audit KKT, CQC, SCC, SONC and SOSC at a point.
    CheckLocal(CheckLocalArgs),
    /// Solve one level and write its certificate.
    Certify(CertifyArgs),
    /// Re-verify a certificate file with exact arithmetic.
    Verify(VerifyArgs),
    /// Random-instance experiment on the local conditions and flatness.
    RandomEnsemble(EnsembleArgs),
    /// Bundled examples (Motzkin over the ball and friends).
    Gallery(GalleryArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Relative duality-gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_gap: f64,
    /// Relative feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol_feas: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

impl SolverFlags {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol_gap: self.tol_gap,
            tol_feas: self.tol_feas,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceFlags {
    /// Instance JSON file.
    pub instance: PathBuf,
    /// Append the ball constraint `R - |x|^2 >= 0`.
    #[arg(long = "ball", value_name = "R")]
    pub ball: Option<f64>,
}

impl InstanceFlags {
    fn load(&self) -> Result<PopInstance> {
        let inst = InstanceFile::read(&self.instance)?.to_instance()?;
        match self.ball {
            Some(r) => augment_archimedean(&inst, r),
            None => Ok(inst),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON, or an SDP text file (first record `sdp`).
    pub input: PathBuf,
    #[arg(long = "ball", value_name = "R")]
    pub ball: Option<f64>,
    /// Relaxation level (defaults to the minimum admissible level).
    #[arg(long)]
    pub level: Option<usize>,
    /// Write the relaxation in SDP text form here.
    #[arg(long)]
    pub write_sdp: Option<PathBuf>,
    /// Write per-iteration residuals as CSV here.
    #[arg(long)]
    pub solver_trace: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub inst: InstanceFlags,
    /// First level (defaults to the minimum admissible level).
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub max_level: usize,
    /// Directory for one certificate file per level.
    #[arg(long)]
    pub cert_dir: Option<PathBuf>,
    /// Write the `k, f_k` sequence as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckLocalArgs {
    pub instance: PathBuf,
    /// Comma-separated coordinates, e.g. `0.5,-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long = "ball", value_name = "R")]
    pub ball: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_active: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_stationarity: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_rank: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_eig: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub inst: InstanceFlags,
    #[arg(long)]
    pub level: Option<usize>,
    /// Certificate output file (default: print it).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub certificate: PathBuf,
    /// Check against this instance instead of the one stored in the certificate.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, short = 'n', default_value_t = 2)]
    pub nvars: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1)]
    pub equalities: usize,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "ball", value_name = "R", default_value_t = 1.0)]
    pub ball: f64,
    /// Levels tried above the minimum one.
    #[arg(long, default_value_t = 2)]
    pub level_slack: usize,
    /// Write failing records as JSON here.
    #[arg(long)]
    pub dump_failures: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GalleryArgs {
    /// Entry to run; lists the entries when omitted.
    pub name: Option<String>,
    /// Override the entry's level cap.
    #[arg(long)]
    pub max_level: Option<usize>,
    /// Write the entry's instance file here instead of running it.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::LevelTooLow { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidProblem(_)
        | Error::Infeasible { .. } => EXIT_INPUT,
        Error::Solver(_) | Error::DegenerateDual(_) => EXIT_SOLVER,
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Hierarchy(a) => cmd_hierarchy(a, out),
        Command::CheckLocal(a) => cmd_check_local(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::RandomEnsemble(a) => cmd_random_ensemble(a, out),
        Command::Gallery(a) => cmd_gallery(a, out),
    }
}

fn is_sdp_text(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.split_whitespace().next() == Some("sdp")))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    level: Option<usize>,
    value: f64,
    status: crate::sdp::SolveStatus,
    iterations: usize,
    primal_objective: f64,
    dual_objective: f64,
    residuals: crate::sdp::Residuals,
    message: &'a Option<String>,
}

fn write_trace(path: &Option<PathBuf>, sol: &SdpSolution) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, trace_csv(&sol.trace))?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = a.solver.options();
    let (level, value, sol) = if is_sdp_text(&a.input)? {
        let prob = read_sdp(&std::fs::read_to_string(&a.input)?)?;
        if let Some(p) = &a.write_sdp {
            std::fs::write(p, write_sdp(&prob))?;
        }
        let sol = solve(&prob, &opts)?;
        (None, sol.primal_objective, sol)
    } else {
        let flags = InstanceFlags {
            instance: a.input.clone(),
            ball: a.ball,
        };
        let inst = flags.load()?;
        let k = a.level.unwrap_or_else(|| min_level(&inst));
        let rel = build_sos_relaxation(&inst, k)?;
        if let Some(p) = &a.write_sdp {
            std::fs::write(p, write_sdp(&rel.problem))?;
        }
        let sol = solve(&rel.problem, &opts)?;
        (Some(k), rel.value(&sol), sol)
    };
    write_trace(&a.solver_trace, &sol)?;
    let report = SolveReport {
        level,
        value,
        status: sol.status,
        iterations: sol.iterations,
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        residuals: sol.residuals,
        message: &sol.message,
    };
    if a.json {
        emit_json(out, &report)?;
    } else {
        if let Some(k) = level {
            writeln!(out, "level       {k}")?;
            writeln!(out, "f_k         {value:.10e}")?;
        } else {
            writeln!(out, "objective   {value:.10e}")?;
        }
        writeln!(out, "status      {:?}", sol.status)?;
        writeln!(out, "iterations  {}", sol.iterations)?;
        writeln!(
            out,
            "residuals   primal {:.2e}  dual {:.2e}  gap {:.2e}",
            sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
        )?;
        if let Some(m) = &sol.message {
            writeln!(out, "note        {m}")?;
        }
    }
    Ok(if sol.status.is_usable() { EXIT_OK } else { EXIT_SOLVER })
}

fn print_run(run: &HierarchyRun, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "{:<6} {:<18} {:<13} {:<6} {:<28} certificate",
        "level", "f_k", "status", "flat", "minimizer"
    )?;
    for l in &run.levels {
        let f = l.f_k.map_or("-".to_string(), |f| format!("{f:.10e}"));
        let st = l.status.map_or("error".to_string(), |s| format!("{s:?}").to_lowercase());
        let flat = match l.flat.as_ref().and_then(|r| r.flat_at) {
            Some(t) => format!("t={t}"),
            None => "no".into(),
        };
        let u = match l.minimizer.as_ref() {
            Some(m) if m.accepted() => format!("{:.6?}", m.point.as_ref().expect("accepted")),
            Some(_) => "none".into(),
            None => "-".into(),
        };
        let cert = match (l.certificate_status, l.certificate_residual) {
            (Some(s), Some(r)) => format!("{} (residual {r:.1e})", format!("{s:?}").to_uppercase()),
            _ => "-".into(),
        };
        writeln!(out, "{:<6} {f:<18} {st:<13} {flat:<6} {u:<28} {cert}", l.k)?;
        if let Some(d) = l.minimizer.as_ref().and_then(|m| m.diagnostic.as_ref()) {
            writeln!(out, "       no minimizer: {d}")?;
        }
        if let Some(e) = &l.error {
            writeln!(out, "       note: {e}")?;
        }
    }
    writeln!(out, "stop reason: {}", serde_json::to_string(&run.stop_reason)?.trim_matches('"'))?;
    if let Some(r) = run.levels.last().and_then(|l| l.flat.as_ref()) {
        writeln!(out, "flat truncation: {}", r.note)?;
    }
    Ok(())
}

fn run_exit_code(run: &HierarchyRun) -> i32 {
    if run.levels.iter().all(|l| l.f_k.is_none()) {
        EXIT_SOLVER
    } else if !run.all_certificates_verified() {
        EXIT_UNVERIFIED
    } else {
        EXIT_OK
    }
}

fn cmd_hierarchy(a: &HierarchyArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = a.inst.load()?;
    let opts = HierarchyOptions {
        k_min: a.level,
        k_max: a.max_level,
        solver: a.solver.options(),
        certificate_dir: a.cert_dir.clone(),
    };
    let run = run_hierarchy(&inst, &opts)?;
    if let Some(p) = &a.csv {
        std::fs::write(p, run.to_csv())?;
    }
    if a.json {
        emit_json(out, &run)?;
    } else {
        print_run(&run, out)?;
    }
    Ok(run_exit_code(&run))
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("point coordinate {t:?}: {e}")))
        })
        .collect()
}

fn cmd_check_local(a: &CheckLocalArgs, out: &mut dyn Write) -> Result<i32> {
    let flags = InstanceFlags {
        instance: a.instance.clone(),
        ball: a.ball,
    };
    let inst = flags.load()?;
    let u = parse_point(&a.point)?;
    let opts = AuditOptions {
        active: a.tol_active,
        feasibility: a.tol_active,
        rank: a.tol_rank,
        stationarity: a.tol_stationarity,
        eig: a.tol_eig,
        ..Default::default()
    };
    let report = audit(&inst, &u, &opts)?;
    if a.json {
        emit_json(out, &report)?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(EXIT_OK)
}

fn cmd_certify(a: &CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = a.inst.load()?;
    let k = a.level.unwrap_or_else(|| min_level(&inst));
    let rel = build_sos_relaxation(&inst, k)?;
    let sol = solve(&rel.problem, &a.solver.options())?;
    if !sol.status.is_usable() {
        return Err(Error::Solver(format!(
            "level {k}: status {:?}{}",
            sol.status,
            sol.message.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()
        )));
    }
    let cert = extract_certificate(&rel, &sol, &inst)?;
    match &a.out {
        Some(p) => cert.write(p)?,
        None if a.json => writeln!(out, "{}", cert.to_json())?,
        None => {}
    }
    if !a.json || a.out.is_some() {
        writeln!(out, "level      {k}")?;
        writeln!(out, "gamma      {:.10e}", cert.gamma)?;
        writeln!(out, "residual   {:.3e}", cert.identity_residual)?;
        writeln!(out, "status     {}", status_word(&cert))?;
    }
    Ok(if cert.is_verified() { EXIT_OK } else { EXIT_UNVERIFIED })
}

fn status_word(cert: &Certificate) -> &'static str {
    if cert.is_verified() {
        "VERIFIED"
    } else {
        "UNVERIFIED"
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let cert = Certificate::read(&a.certificate)?;
    let inst = match &a.instance {
        Some(p) => InstanceFile::read(p)?.to_instance()?,
        None => cert.instance()?,
    };
    let v = verify_certificate(&cert, &inst);
    if a.json {
        emit_json(out, &v)?;
    } else {
        writeln!(out, "gamma              {:.10e}", cert.gamma)?;
        writeln!(out, "gram residual      {:.3e}", v.gram_residual)?;
        writeln!(out, "squares residual   {:.3e}", v.decomposition_residual)?;
        writeln!(out, "min Gram eigenvalue {:.3e}", v.min_gram_eigenvalue)?;
        writeln!(out, "threshold          {:.3e}", v.threshold)?;
        writeln!(out, "{}", if v.passed { "PASS" } else { "FAIL" })?;
    }
    Ok(if v.passed { EXIT_OK } else { EXIT_UNVERIFIED })
}

fn cmd_random_ensemble(a: &EnsembleArgs, out: &mut dyn Write) -> Result<i32> {
    if a.nvars == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    if a.equalities >= a.nvars {
        return Err(Error::InvalidArgument(format!(
            "{} random equalities leave no freedom in {} variables",
            a.equalities, a.nvars
        )));
    }
    let cfg = EnsembleConfig {
        nvars: a.nvars,
        degree: a.degree,
        equalities: a.equalities,
        ball_r: a.ball,
        count: a.count,
        seed: a.seed,
        level_slack: a.level_slack,
    };
    if !(cfg.ball_r > 0.0 && cfg.ball_r.is_finite()) {
        return Err(Error::InvalidArgument(format!("ball constant must be positive, got {}", cfg.ball_r)));
    }
    let summary = run_ensemble(&cfg);
    if let Some(p) = &a.dump_failures {
        let failures: Vec<_> = summary.failures().collect();
        std::fs::write(p, serde_json::to_string_pretty(&failures)?)?;
    }
    if a.json {
        emit_json(out, &summary)?;
    } else {
        write!(out, "{}", summary.table())?;
        let failures: Vec<usize> = summary.failures().map(|r| r.index).collect();
        if !failures.is_empty() {
            writeln!(out, "  failing instances: {failures:?}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_gallery(a: &GalleryArgs, out: &mut dyn Write) -> Result<i32> {
    let Some(name) = &a.name else {
        for e in gallery() {
            writeln!(out, "{:<22} levels {}..={}  {}", e.name, e.k_min, e.k_max, e.description)?;
        }
        return Ok(EXIT_OK);
    };
    let mut e = entry(name).ok_or_else(|| {
        let names: Vec<_> = gallery().iter().map(|e| e.name).collect();
        Error::InvalidArgument(format!("unknown gallery entry {name:?}; one of {names:?}"))
    })?;
    if let Some(p) = &a.export {
        e.instance_file().write(p)?;
        return Ok(EXIT_OK);
    }
    if let Some(k) = a.max_level {
        e.k_max = k.max(e.k_min);
    }
    let run = e.run()?;
    if a.json {
        emit_json(out, &run)?;
    } else {
        writeln!(out, "{}: {}", e.name, e.description)?;
        print_run(&run, out)?;
    }
    Ok(run_exit_code(&run))
}
