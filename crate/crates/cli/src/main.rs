mod args;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;
use tourneylab::*;

use args::{Cli, Command, OutFormat, Plan, RunArgs};
use output::{Comparison, Document};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: ModelError },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} verification checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification { .. } => 3,
            _ => 2,
        }
    }
}

fn simulate_or_sweep(command: &str, args: &RunArgs) -> Result<(), CliError> {
    let plan = Plan::build(command, args, None)?;
    let mut rows = Vec::new();
    let mut hists = Vec::new();
    for cfg in &plan.runs {
        let summary = run(cfg)?;
        rows.push(output::result_row(cfg, &summary));
        hists.extend(output::histograms(cfg, &summary));
    }
    if let Some(path) = &args.hist_out {
        output::emit(Some(path), &output::histogram_csv(&hists)?)?;
    }
    let bytes = match args.out_format {
        OutFormat::Csv => output::sweep_csv(&rows)?,
        OutFormat::Json => output::json_bytes(&Document {
            config: plan.config,
            results: rows,
            histograms: hists,
        })?,
    };
    output::emit(args.out.as_deref(), &bytes)
}

fn compare(args: &args::CompareArgs) -> Result<(), CliError> {
    let plan = Plan::build("compare", &args.run, Some((args.versus, args.metric)))?;
    let (a_cfg, b_cfg) = (
        &plan.runs[0],
        plan.versus
            .as_ref()
            .expect("compare plans carry an opponent"),
    );
    let (a, b) = (run(a_cfg)?, run(b_cfg)?);
    let d = dominance(&a, &b, args.metric)?;
    let result = Comparison {
        a: a_cfg.format.label(),
        b: b_cfg.format.label(),
        metric: args.metric.to_string(),
        p_strictly_less: d.p_strictly_less,
        p_tie: d.p_tie,
        samples: d.samples,
        mean_a: a.mean(args.metric).unwrap_or(f64::NAN),
        mean_b: b.mean(args.metric).unwrap_or(f64::NAN),
    };
    let bytes = match args.run.out_format {
        OutFormat::Csv => output::compare_csv(&result)?,
        OutFormat::Json => {
            let mut hists = output::histograms(a_cfg, &a);
            hists.extend(output::histograms(b_cfg, &b));
            output::json_bytes(&Document {
                config: plan.config,
                results: result,
                histograms: hists,
            })?
        }
    };
    output::emit(args.run.out.as_deref(), &bytes)
}

fn verify(args: &args::VerifyArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let rows = verify::verify(args.reps, args.seed, args.sigmas);
    let bytes = match args.out_format {
        OutFormat::Csv => output::verify_csv(&rows)?,
        OutFormat::Json => {
            let config = args::CliConfig {
                command: "verify".into(),
                formats: Vec::new(),
                players: 32,
                model: "skill and coin-flip".into(),
                replications: args.reps,
                seed: args.seed,
                metrics: vec!["inversions".into(), "avg_rank_top_1".into()],
                log_base: "e".into(),
                out_format: args.out_format,
                versus: None,
            };
            output::json_bytes(&Document {
                config,
                results: &rows,
                histograms: Vec::new(),
            })?
        }
    };
    output::emit(args.out.as_deref(), &bytes)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Verification {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate_or_sweep("simulate", a),
        Command::Sweep(a) => simulate_or_sweep("sweep", a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tourneylab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
