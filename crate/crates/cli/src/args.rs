use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tourneylab::engine::Execution;
use tourneylab::*;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tourneylab",
    version,
    about = "Compare how well tournament formats recover the true ranking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one format and summarise its metrics.
    Simulate(RunArgs),
    /// Simulate several formats (and Swiss round counts) into one table.
    Sweep(RunArgs),
    /// Probability that one format's metric is strictly below another's.
    Compare(CompareArgs),
    /// Check match counts and Monte Carlo means against exact enumeration.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Format code, or a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub format: Vec<FormatKind>,
    /// Swiss round count; `sweep` also accepts a range `A..B` (inclusive).
    #[arg(long)]
    pub rounds: Option<Rounds>,
    /// Field size. Defaults to 32, or the size of a rating/matrix file.
    #[arg(long)]
    pub players: Option<usize>,
    /// `skill:FLOAT`, `elo:PATH` (CSV `name,rating`) or `matrix:PATH` (CSV n x n).
    #[arg(long, default_value = "skill:5")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Top-k cut-offs for the average-rank metric.
    #[arg(long, value_delimiter = ',', default_value = "1,8")]
    pub topk: Vec<usize>,
    /// Logarithm base for weighted inversions: `e`, `2`, `10` or any base > 1.
    #[arg(long, default_value = "e")]
    pub log_base: LogBase,
    /// Metrics to report; `avg_rank_top` expands to every `--topk`, `none` reports nothing.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "inversions,weighted_inversions,avg_rank_top"
    )]
    pub metrics: Vec<String>,
    #[arg(long, value_enum, default_value_t = SeedingArg::Random)]
    pub seeding: SeedingArg,
    #[arg(long, value_enum, default_value_t = TieRuleArg::Replay)]
    pub tie_rule: TieRuleArg,
    #[arg(long, value_enum, default_value_t = GroupDrawArg::Separated)]
    pub group_draw: GroupDrawArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub out_format: OutFormat,
    /// `simulate` only: also write a `metric,value,count` histogram CSV.
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
    /// Run replications on one thread (results are identical either way).
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Format to compare against, e.g. `ko` or `swiss-5`.
    #[arg(long)]
    pub versus: FormatLabel,
    #[arg(long, default_value = "inversions")]
    pub metric: Metric,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Allowed distance from the exact mean, in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub out_format: OutFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeedingArg {
    Random,
    Standard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieRuleArg {
    Replay,
    HeadToHead,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupDrawArg {
    Separated,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounds {
    One(usize),
    Range(usize, usize),
}

impl Rounds {
    fn values(self) -> Vec<usize> {
        match self {
            Rounds::One(r) => vec![r],
            Rounds::Range(a, b) => (a..=b).collect(),
        }
    }
}

impl FromStr for Rounds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let int = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("{t:?} is not a round count"))
        };
        match s.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (int(a)?, int(b)?);
                if a > b {
                    return Err(format!("empty range {s}"));
                }
                Ok(Rounds::Range(a, b))
            }
            None => int(s).map(Rounds::One),
        }
    }
}

impl fmt::Display for Rounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounds::One(r) => write!(f, "{r}"),
            Rounds::Range(a, b) => write!(f, "{a}..{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelArg {
    Skill(f64),
    Elo(PathBuf),
    Matrix(PathBuf),
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("skill", v)) => v
                .parse()
                .map(ModelArg::Skill)
                .map_err(|_| format!("{v:?} is not a skill level")),
            Some(("elo", p)) if !p.is_empty() => Ok(ModelArg::Elo(p.into())),
            Some(("matrix", p)) if !p.is_empty() => Ok(ModelArg::Matrix(p.into())),
            _ => Err(format!(
                "expected skill:FLOAT, elo:PATH or matrix:PATH, got {s:?}"
            )),
        }
    }
}

impl fmt::Display for ModelArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelArg::Skill(s) => write!(f, "skill:{s}"),
            ModelArg::Elo(p) => write!(f, "elo:{}", p.display()),
            ModelArg::Matrix(p) => write!(f, "matrix:{}", p.display()),
        }
    }
}

/// `ko`, `swiss-5` and so on.
#[derive(Debug, Clone, Copy)]
pub struct FormatLabel {
    pub kind: FormatKind,
    pub rounds: Option<usize>,
}

impl FromStr for FormatLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (code, rounds) = match s.split_once('-') {
            Some((c, r)) => (
                c,
                Some(
                    r.parse::<usize>()
                        .map_err(|_| format!("bad round count in {s:?}"))?,
                ),
            ),
            None => (s, None),
        };
        let kind = code.parse::<FormatKind>().map_err(|e| e.to_string())?;
        Ok(Self { kind, rounds })
    }
}

/// The validated, serialisable form of the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliConfig {
    pub command: String,
    pub formats: Vec<String>,
    pub players: usize,
    pub model: String,
    pub replications: usize,
    pub seed: u64,
    pub metrics: Vec<String>,
    pub log_base: String,
    pub out_format: OutFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub versus: Option<String>,
}

/// Everything needed to execute a simulate/sweep/compare command.
pub struct Plan {
    pub config: CliConfig,
    pub runs: Vec<RunConfig>,
    pub versus: Option<RunConfig>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn input(path: &std::path::Path, source: ModelError) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

fn load_model(
    model: &ModelArg,
    players: Option<usize>,
) -> Result<(Arc<WinMatrix>, usize), CliError> {
    let m = match model {
        ModelArg::Skill(s) => {
            let n = players.unwrap_or(32);
            let skill = SkillModel::new(*s).map_err(|e| usage(format!("--model: {e}")))?;
            return Ok((
                Arc::new(skill_matrix(skill, n).map_err(|e| usage(format!("--players: {e}")))?),
                n,
            ));
        }
        ModelArg::Elo(path) => {
            elo_matrix(&RatingTable::load_csv(path).map_err(|e| input(path, e))?).0
        }
        ModelArg::Matrix(path) => WinMatrix::load_csv(path).map_err(|e| input(path, e))?,
    };
    let n = m.n();
    if let Some(p) = players {
        if p != n {
            return Err(usage(format!(
                "--players {p} conflicts with the {n} players in {model}"
            )));
        }
    }
    Ok((Arc::new(m), n))
}

fn metric_set(args: &RunArgs, n: usize) -> Result<MetricSet, CliError> {
    let mut metrics = Vec::new();
    for name in &args.metrics {
        match name.trim() {
            "none" => {}
            "avg_rank_top" | "top" => {
                metrics.extend(args.topk.iter().map(|&k| Metric::AvgRankTop(k)))
            }
            other => metrics.push(
                other
                    .parse::<Metric>()
                    .map_err(|e| usage(format!("--metrics: {e}")))?,
            ),
        }
    }
    let mut seen = std::collections::HashSet::new();
    metrics.retain(|m| seen.insert(*m));
    let set = MetricSet {
        metrics,
        log_base: args.log_base,
    };
    set.validate(n).map_err(|e| usage(format!("--topk: {e}")))?;
    Ok(set)
}

fn specs(args: &RunArgs, n: usize) -> Result<Vec<FormatSpec>, CliError> {
    let has_swiss = args.format.contains(&FormatKind::Swiss);
    if args.rounds.is_some() && !has_swiss {
        return Err(usage("--rounds is only valid with --format swiss"));
    }
    let mut out = Vec::new();
    for &kind in &args.format {
        if kind == FormatKind::Swiss {
            let rounds = args
                .rounds
                .ok_or_else(|| usage("--format swiss needs --rounds"))?;
            out.extend(rounds.values().into_iter().map(|r| FormatSpec::swiss(n, r)));
        } else {
            out.push(FormatSpec::new(kind, n));
        }
    }
    Ok(out
        .into_iter()
        .map(|s| {
            s.with_seeding(match args.seeding {
                SeedingArg::Random => Seeding::Random,
                SeedingArg::Standard => Seeding::Standard,
            })
            .with_tie_rule(match args.tie_rule {
                TieRuleArg::Replay => TieRule::Replay,
                TieRuleArg::HeadToHead => TieRule::HeadToHead,
            })
            .with_group_draw(match args.group_draw {
                GroupDrawArg::Separated => GroupDraw::Separated,
                GroupDrawArg::Unconstrained => GroupDraw::Unconstrained,
            })
        })
        .collect())
}

fn run_config(
    spec: FormatSpec,
    matrix: &Arc<WinMatrix>,
    args: &RunArgs,
    metrics: &MetricSet,
) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::new(spec, matrix.clone(), args.reps, args.seed)
        .with_model_label(args.model.to_string())
        .with_metrics(metrics.clone())
        .with_execution(if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        });
    cfg.validate()
        .map_err(|e| usage(format!("{}: {e}", spec.label())))?;
    Ok(cfg)
}

impl Plan {
    pub fn build(
        command: &str,
        args: &RunArgs,
        versus: Option<(FormatLabel, Metric)>,
    ) -> Result<Plan, CliError> {
        if args.reps == 0 {
            return Err(usage("--reps must be at least 1"));
        }
        if command != "simulate" && args.hist_out.is_some() {
            return Err(usage("--hist-out is only valid with simulate"));
        }
        if command != "sweep" {
            if args.format.len() != 1 {
                return Err(usage(format!("{command} takes exactly one --format")));
            }
            if matches!(args.rounds, Some(Rounds::Range(..))) {
                return Err(usage(format!(
                    "--rounds ranges are only valid with sweep, not {command}"
                )));
            }
        }
        let (matrix, n) = load_model(&args.model, args.players)?;
        let metrics = match versus {
            Some((_, m)) => MetricSet {
                metrics: vec![m],
                log_base: args.log_base,
            },
            None => metric_set(args, n)?,
        };
        metrics
            .validate(n)
            .map_err(|e| usage(format!("--metric: {e}")))?;
        let runs = specs(args, n)?
            .into_iter()
            .map(|s| run_config(s, &matrix, args, &metrics))
            .collect::<Result<Vec<_>, _>>()?;
        let versus_run = match versus {
            Some((label, _)) => {
                let base = runs[0].format;
                let spec = match (label.kind, label.rounds) {
                    (FormatKind::Swiss, Some(r)) => FormatSpec {
                        kind: label.kind,
                        swiss_rounds: r,
                        ..base
                    },
                    (FormatKind::Swiss, None) => {
                        return Err(usage("--versus swiss needs a round count, e.g. swiss-5"))
                    }
                    (_, Some(_)) => return Err(usage("--versus takes rounds only for swiss")),
                    (kind, None) => FormatSpec {
                        kind,
                        swiss_rounds: 0,
                        ..base
                    },
                };
                // A different stream so the two samples are independent.
                let mut cfg = run_config(spec, &matrix, args, &metrics)?;
                cfg.master_seed = args.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
                Some(cfg)
            }
            None => None,
        };
        let config = CliConfig {
            command: command.to_string(),
            formats: runs.iter().map(|r| r.format.label()).collect(),
            players: n,
            model: args.model.to_string(),
            replications: args.reps,
            seed: args.seed,
            metrics: metrics.metrics.iter().map(|m| m.to_string()).collect(),
            log_base: args.log_base.to_string(),
            out_format: args.out_format,
            versus: versus_run.as_ref().map(|v| v.format.label()),
        };
        Ok(Plan {
            config,
            runs,
            versus: versus_run,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(argv: &[&str]) -> Result<Plan, CliError> {
        let cli =
            Cli::try_parse_from(std::iter::once("tourneylab").chain(argv.iter().copied())).unwrap();
        match &cli.command {
            Command::Simulate(a) => Plan::build("simulate", a, None),
            Command::Sweep(a) => Plan::build("sweep", a, None),
            Command::Compare(c) => Plan::build("compare", &c.run, Some((c.versus, c.metric))),
            Command::Verify(_) => unreachable!(),
        }
    }

    #[test]
    fn swiss_simulation_is_valid() {
        let p = plan(&[
            "simulate", "--format", "swiss", "--rounds", "5", "--model", "skill:5", "--reps",
            "100000", "--seed", "42",
        ])
        .unwrap();
        assert_eq!(p.runs.len(), 1);
        assert_eq!(p.runs[0].format, FormatSpec::swiss(32, 5));
        assert_eq!(p.runs[0].replications, 100_000);
        assert_eq!(p.runs[0].master_seed, 42);
    }

    #[test]
    fn rounds_need_swiss() {
        let err = plan(&["simulate", "--format", "ko", "--rounds", "5"])
            .err()
            .unwrap();
        assert!(matches!(err, CliError::Usage(ref m) if m.contains("--rounds")));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn swiss_range_sweep_has_ten_rows() {
        let p = plan(&[
            "sweep", "--format", "swiss", "--rounds", "5..14", "--model", "skill:1",
        ])
        .unwrap();
        let rounds: Vec<usize> = p.runs.iter().map(|r| r.format.swiss_rounds).collect();
        assert_eq!(rounds, (5..=14).collect::<Vec<_>>());
    }

    #[test]
    fn defaults_describe_the_standard_field() {
        let p = plan(&["simulate", "--format", "dp"]).unwrap();
        assert_eq!(p.config.players, 32);
        assert_eq!(p.config.replications, 100_000);
        assert_eq!(
            p.config.metrics,
            [
                "inversions",
                "weighted_inversions",
                "avg_rank_top_1",
                "avg_rank_top_8"
            ]
        );
    }

    #[test]
    fn inconsistent_combinations_are_usage_errors() {
        for argv in [
            &["simulate", "--format", "swiss"][..],
            &["simulate", "--format", "ko,rr"],
            &["simulate", "--format", "swiss", "--rounds", "5..6"],
            &["simulate", "--format", "ko", "--topk", "40"],
            &["simulate", "--format", "ko", "--reps", "0"],
            &["sweep", "--format", "ko", "--hist-out", "x.csv"],
            &["simulate", "--format", "swiss", "--rounds", "32"],
            &["compare", "--format", "ko", "--versus", "swiss"],
        ] {
            assert!(matches!(plan(argv), Err(CliError::Usage(_))), "{argv:?}");
        }
    }

    #[test]
    fn value_parsers() {
        assert_eq!("5..14".parse::<Rounds>().unwrap(), Rounds::Range(5, 14));
        assert!("14..5".parse::<Rounds>().is_err());
        assert_eq!(
            "skill:2.5".parse::<ModelArg>().unwrap(),
            ModelArg::Skill(2.5)
        );
        assert!("skill".parse::<ModelArg>().is_err());
        assert!("elo:".parse::<ModelArg>().is_err());
        let l: FormatLabel = "swiss-5".parse().unwrap();
        assert_eq!((l.kind, l.rounds), (FormatKind::Swiss, Some(5)));
    }

    #[test]
    fn unknown_flags_are_rejected_by_the_parser() {
        assert!(
            Cli::try_parse_from(["tourneylab", "simulate", "--format", "ko", "--bogus"]).is_err()
        );
        assert!(Cli::try_parse_from(["tourneylab", "simulate", "--format", "xx"]).is_err());
    }
}
