//! Command-line front end for `raytrap-core`: scene files, JSON and CSV
//! records, and the acceptance runner.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod config;
pub mod record;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};
use config::{RunConfig, SceneSpec, OUT_ENV};
use record::ResultRecord;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] raytrap_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parses `argv`, runs the command and writes to `out`/`err`.
/// Returns the process exit code: 0 ok, 1 computation error or failed
/// acceptance, 2 usage error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "raytrap: {e}");
            e.exit_code()
        }
    }
}

pub fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let scene = match &cli.global.scene {
        Some(p) => SceneSpec::load(p)?,
        None => SceneSpec::default(),
    };
    let out_dir = cli.global.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
    Ok(RunConfig {
        // the debug form carries every argument value into the digest
        command: format!("{:?}", cli.command),
        scene,
        scene_path: cli.global.scene.clone(),
        seed: cli.global.seed,
        tolerances: RunConfig::parse_tolerances(&cli.global.tol)?,
        out_dir,
    })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = build_config(cli)?;
    let scene = cfg.scene.build::<f64>()?;
    if let Command::Acceptance(a) = &cli.command {
        let ids: Vec<u8> = if a.only.is_empty() { acceptance::ALL.to_vec() } else { a.only.clone() };
        if let Some(bad) = ids.iter().find(|i| !acceptance::ALL.contains(i)) {
            return Err(CliError::Usage(format!("--only: no criterion {bad}")));
        }
        let start = Instant::now();
        let mut outcomes = Vec::new();
        for id in ids {
            let o = acceptance::run_one(id, &cfg);
            writeln!(out, "{}", o.line())?;
            outcomes.push(o);
        }
        let failed = outcomes.iter().filter(|o| !o.pass).count();
        if let Some(dir) = &cfg.out_dir {
            let mut rec = ResultRecord::new(&cfg, "acceptance");
            rec.scalar("failed", failed).report(&outcomes);
            rec.wall_clock_s = start.elapsed().as_secs_f64();
            rec.emit(&mut std::io::sink(), Some(dir))?;
        }
        return Ok(if failed == 0 { 0 } else { 1 });
    }
    let start = Instant::now();
    let mut rec = commands::run(&cli.command, &cfg, &scene)?;
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.emit(out, cfg.out_dir.as_ref())?;
    Ok(0)
}
