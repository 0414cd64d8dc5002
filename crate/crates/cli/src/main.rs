//! `graphkdv <task> --config <path> [--Z <real>] [--L <real>] [--N <int>] [--out <dir>]`
//!
//! Exit status: 0 when every check passes, 2 when a numerical check fails,
//! 1 on usage or configuration errors.

mod config;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::Parser;
use graphkdv::Error;
use serde_json::json;

use config::RunConfig;
use tasks::{run_task, Ctx, Task, TaskOutcome};

#[derive(Parser, Debug)]
#[command(
    name = "graphkdv",
    version,
    about = "Stationary KdV profiles on star graphs: spectra, resolvent, instability"
)]
struct Cli {
    task: Task,
    /// TOML configuration; every field has a default.
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "Z", allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GRAPHKDV_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| anyhow!("GRAPHKDV_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(z) = cli.z {
        cfg.vertex.z = z;
    }
    if let Some(l) = cli.l {
        cfg.discretization.l = l;
    }
    if let Some(n) = cli.n {
        cfg.discretization.n = n;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> std::result::Result<bool, Failure> {
    configure_threads().map_err(Failure::Usage)?;
    let cfg = load(cli).map_err(Failure::Usage)?;
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(Failure::Io)?;
    let ctx = Ctx {
        cfg: &cfg,
        z: cfg.vertex.z,
        out: &out,
    };
    let mut outcomes: Vec<TaskOutcome> = Vec::new();
    for r in run_task(cli.task, &ctx) {
        match r {
            Ok(o) => outcomes.push(o),
            Err(Error::InvalidArgument(m)) => return Err(Failure::Usage(anyhow!(m))),
            Err(e) => {
                let mut o = TaskOutcome {
                    task: "error".into(),
                    passed: false,
                    checks: vec![],
                    data: serde_json::Value::Null,
                    notes: vec![e.to_string()],
                    files: vec![],
                };
                if let Some(prev) = outcomes.last() {
                    o.task = format!("after {}", prev.task);
                }
                outcomes.push(o);
            }
        }
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let report = json!({
        "tool": "graphkdv",
        "version": env!("CARGO_PKG_VERSION"),
        "task": cli.task,
        "Z": cfg.vertex.z,
        "config": cfg,
        "passed": passed,
        "tasks": outcomes,
    });
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Io(e.into()))?;
    std::fs::write(&path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Io)?;
    for o in &outcomes {
        println!("{:<10} {}", o.task, if o.passed { "pass" } else { "FAIL" });
        for c in o.checks.iter().filter(|c| !c.passed) {
            println!("    {} = {:e} (want {})", c.name, c.value, c.limit);
        }
        for n in &o.notes {
            println!("    {n}");
        }
    }
    println!("report: {}", path.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
