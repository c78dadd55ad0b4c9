//! Command-line front end: `assemble`, `spectrum`, `verify`, `report`.
//!
//! Exit codes: 0 success, 1 configuration, 2 numerical, 3 IO, 4 failed checks.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{canonical_hash, RunConfig};
use crate::error::Result;
use crate::export::{self, MatrixFile};
use crate::sigop::{self, OperatorMatrix};
use crate::symmetry;
use crate::verify::{self, CheckReport};

pub const EXIT_CHECKS_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sigop", version, about = "Signature operators and their symmetries on truncated Dirac mode spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Dotted `key=value` override, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble an operator matrix and write it as sigop-matrix/1 JSON.
    Assemble {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Operator to export instead of the signature operator:
        /// parity | time-reflection | translate:<a> | hamiltonian.
        #[arg(long)]
        sym: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of a matrix file as CSV.
    Spectrum {
        matrix: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the check suite; JSON lines on stdout or `--out`.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Symmetries to check (repeatable).
        #[arg(long)]
        sym: Vec<String>,
        /// Corrupt the signature operator; the suite must then fail.
        #[arg(long)]
        inject_fault: bool,
        /// Override every upper-bound tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// CSV summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Summarize a JSON-lines report.
    Report {
        report: PathBuf,
    },
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &args.overrides {
        cfg.set(o)?;
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn build_operator(cfg: &RunConfig, sym: Option<&str>) -> Result<(crate::solutions::Basis, OperatorMatrix)> {
    let basis = cfg.basis()?;
    let op = match sym {
        None | Some("signature") => sigop::assemble_signature(&basis, basis.quad())?,
        Some("hamiltonian") => symmetry::hamiltonian_matrix(&basis)?,
        Some(name) => symmetry::unitary_matrix(&symmetry::make_action(basis.model(), name)?, &basis)?,
    };
    Ok((basis, op))
}

/// Builds (or fetches from the cache) the matrix file text.
/// Returns the text and whether it came from the cache.
pub fn assemble(cfg: &RunConfig, sym: Option<&str>) -> Result<(String, bool)> {
    let operator = sym.unwrap_or("signature");
    let key = canonical_hash(&serde_json::json!({ "assembly": cfg.assembly_hash()?, "operator": operator }));
    let dir = cfg.cache_dir();
    let cached = dir.join(format!("{key}.json"));
    if let Ok(text) = std::fs::read_to_string(&cached) {
        if MatrixFile::from_json(&text).is_ok_and(|f| f.content_hash == key) {
            return Ok((text, true));
        }
    }
    let (basis, op) = build_operator(cfg, sym)?;
    let text = MatrixFile::new(&basis, operator, &op, key).to_json()?;
    std::fs::create_dir_all(&dir)?;
    let tmp = dir.join(format!(".{}.tmp", std::process::id()));
    std::fs::write(&tmp, &text)?;
    std::fs::rename(&tmp, &cached)?;
    Ok((text, false))
}

/// Runs the suite with the config hash recorded in every report.
pub fn verify_reports(cfg: &RunConfig) -> Vec<CheckReport> {
    let hash = cfg.content_hash();
    verify::run_suite(cfg)
        .into_iter()
        .map(|r| r.with_context("config_hash", &hash))
        .collect()
}

fn summary_table(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "{} {:<58} value={:<12.4e} tol={:.1e}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tol
        ));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {failed} failed\n", reports.len()));
    out
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Assemble { cfg, sym, out } => {
            let cfg = load_config(&cfg)?;
            let (text, hit) = assemble(&cfg, sym.as_deref())?;
            eprintln!("{}", if hit { "cache hit" } else { "cache miss" });
            emit(out.as_deref().or(cfg.outputs.matrix.as_deref()), &text)?;
            Ok(0)
        }
        Command::Spectrum { matrix, out } => {
            let file = MatrixFile::load(&matrix)?;
            emit(out.as_deref(), &export::spectrum_csv(&file)?)?;
            Ok(0)
        }
        Command::Verify {
            cfg,
            sym,
            inject_fault,
            tol,
            out,
            summary,
        } => {
            let mut cfg = load_config(&cfg)?;
            if !sym.is_empty() {
                cfg.symmetries = sym;
            }
            cfg.inject_fault |= inject_fault;
            if tol.is_some() {
                cfg.tol = tol;
            }
            let reports = verify_reports(&cfg);
            emit(out.as_deref().or(cfg.outputs.report.as_deref()), &export::reports_jsonl(&reports)?)?;
            if let Some(p) = summary.as_deref().or(cfg.outputs.summary.as_deref()) {
                emit(Some(p), &export::reports_csv(&reports, &cfg.content_hash()))?;
            }
            eprint!("{}", summary_table(&reports));
            if let Some(code) = reports.iter().find_map(|r| r.context.get("exit_code").and_then(|c| c.as_i64())) {
                return Ok(code as i32);
            }
            Ok(if verify::all_pass(&reports) { 0 } else { EXIT_CHECKS_FAILED })
        }
        Command::Report { report } => {
            let reports = export::parse_reports_jsonl(&std::fs::read_to_string(&report)?)?;
            print!("{}", summary_table(&reports));
            Ok(if verify::all_pass(&reports) { 0 } else { EXIT_CHECKS_FAILED })
        }
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
