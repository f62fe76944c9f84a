use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wordlab::error::Error;
use wordlab::pipeline::{report, Outcome, Pipeline, RunConfig, Stage, Verdict};

const STAGES: &str = "gen, train-illiterate, train-literate, select, rsa, encode, probe, census, circuit, vismax, report";

#[derive(Parser, Debug)]
#[command(name = "wordlab", version, about = "Run the word-reading experiment stage by stage")]
struct Args {
    /// Stage to run, `all` for every stage in order, or `config` to print
    /// the effective configuration.
    #[arg(value_name = "STAGE", long_help = format!("One of: {STAGES}, all, config"))]
    stage: String,

    /// TOML configuration; defaults are used for missing keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Rerun even when outputs are current, overwriting results from a
    /// different configuration.
    #[arg(long)]
    stage_force: bool,

    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    #[arg(short, long)]
    quiet: bool,
}

fn run(args: Args) -> wordlab::error::Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.stage == "config" {
        print!("{}", cfg.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let stages: Vec<Stage> = if args.stage == "all" { Stage::ALL.to_vec() } else { vec![args.stage.parse()?] };
    let mut pipeline = Pipeline::new(cfg)?;
    pipeline.force = args.stage_force;
    pipeline.verbose = !args.quiet;
    for stage in stages {
        let outcome = pipeline.run_stage(stage)?;
        if outcome == Outcome::UpToDate && !args.quiet {
            eprintln!("{stage}: outputs are current");
        }
        if stage == Stage::Report {
            let report = pipeline.report()?;
            println!("{}", report.to_text());
            let timing = report::timing_checks(&pipeline);
            println!("training time");
            for c in &timing {
                println!("      {}", c.line());
            }
            let slow = timing.iter().any(|c| !c.advisory && c.verdict == Verdict::Fail);
            if report.overall == Verdict::Fail || slow {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MissingDependency { .. } | Error::ConfigMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
