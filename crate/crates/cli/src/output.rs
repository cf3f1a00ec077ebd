//! CSV and JSON emitters. Every document is built in memory, then written
//! in one go to a file or standard output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tourneylab::*;

use crate::args::CliConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub format: String,
    /// Swiss round count, empty otherwise.
    pub param: String,
    pub counted_matches: usize,
    pub counted_range: (usize, usize),
    pub replications: usize,
    pub seed: u64,
    pub metrics: Vec<MetricRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub value: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramOut {
    pub format: String,
    pub param: String,
    pub metric: String,
    /// Bin width; `value` is the integer value or the lower bin edge.
    pub width: f64,
    pub bins: Vec<Bin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: String,
    pub p_strictly_less: f64,
    pub p_tie: f64,
    pub samples: (u64, u64),
    pub mean_a: f64,
    pub mean_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub expected: f64,
    pub observed: f64,
    /// Distance in standard errors; zero for exact checks.
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<R> {
    pub config: CliConfig,
    pub results: R,
    pub histograms: Vec<HistogramOut>,
}

fn param(spec: &FormatSpec) -> String {
    match spec.kind {
        FormatKind::Swiss => spec.swiss_rounds.to_string(),
        _ => String::new(),
    }
}

pub fn result_row(cfg: &RunConfig, s: &RunSummary) -> ResultRow {
    ResultRow {
        format: cfg.format.kind.code().to_string(),
        param: param(&cfg.format),
        counted_matches: s.counted_matches,
        counted_range: s.counted_range,
        replications: s.replications,
        seed: s.master_seed,
        metrics: s
            .metrics
            .iter()
            .map(|m| MetricRow {
                metric: m.metric.to_string(),
                mean: m.mean,
                stderr: m.stderr,
                std_dev: m.std_dev,
                min: m.min,
                max: m.max,
                skewness: m.skewness,
            })
            .collect(),
    }
}

pub fn histograms(cfg: &RunConfig, s: &RunSummary) -> Vec<HistogramOut> {
    s.metrics
        .iter()
        .map(|m| HistogramOut {
            format: cfg.format.kind.code().to_string(),
            param: param(&cfg.format),
            metric: m.metric.to_string(),
            width: m.histogram.width,
            bins: m
                .histogram
                .points()
                .into_iter()
                .map(|(value, count)| Bin { value, count })
                .collect(),
        })
        .collect()
}

fn csv_bytes(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))
}

pub fn sweep_csv(rows: &[ResultRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &[
            "format",
            "param",
            "counted_matches",
            "metric",
            "mean",
            "stderr",
        ],
        rows.iter().flat_map(|r| {
            r.metrics.iter().map(|m| {
                vec![
                    r.format.clone(),
                    r.param.clone(),
                    r.counted_matches.to_string(),
                    m.metric.clone(),
                    m.mean.to_string(),
                    m.stderr.to_string(),
                ]
            })
        }),
    )
}

pub fn histogram_csv(hists: &[HistogramOut]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["metric", "value", "count"],
        hists.iter().flat_map(|h| {
            h.bins
                .iter()
                .map(|b| vec![h.metric.clone(), b.value.to_string(), b.count.to_string()])
        }),
    )
}

pub fn compare_csv(c: &Comparison) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &[
            "a",
            "b",
            "metric",
            "p_strictly_less",
            "p_tie",
            "samples_a",
            "samples_b",
            "mean_a",
            "mean_b",
        ],
        [vec![
            c.a.clone(),
            c.b.clone(),
            c.metric.clone(),
            c.p_strictly_less.to_string(),
            c.p_tie.to_string(),
            c.samples.0.to_string(),
            c.samples.1.to_string(),
            c.mean_a.to_string(),
            c.mean_b.to_string(),
        ]],
    )
}

pub fn verify_csv(rows: &[VerifyRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &["check", "expected", "observed", "z", "pass"],
        rows.iter().map(|r| {
            vec![
                r.check.clone(),
                r.expected.to_string(),
                r.observed.to_string(),
                r.z.to_string(),
                r.pass.to_string(),
            ]
        }),
    )
}

pub fn json_bytes<R: Serialize>(doc: &Document<R>) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(doc)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::OutFormat;

    fn config() -> CliConfig {
        CliConfig {
            command: "simulate".into(),
            formats: vec!["ko".into()],
            players: 32,
            model: "skill:5".into(),
            replications: 10,
            seed: 1,
            metrics: vec![],
            log_base: "e".into(),
            out_format: OutFormat::Json,
            versus: None,
        }
    }

    #[test]
    fn empty_metrics_give_a_header_only_csv() {
        let row = ResultRow {
            format: "ko".into(),
            param: String::new(),
            counted_matches: 80,
            counted_range: (80, 80),
            replications: 10,
            seed: 1,
            metrics: vec![],
        };
        let bytes = sweep_csv(&[row]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "format,param,counted_matches,metric,mean,stderr\n"
        );
        assert_eq!(histogram_csv(&[]).unwrap(), b"metric,value,count\n");
    }

    #[test]
    fn json_round_trips_every_number() {
        let row = ResultRow {
            format: "swiss".into(),
            param: "5".into(),
            counted_matches: 80,
            counted_range: (80, 80),
            replications: 3,
            seed: u64::MAX,
            metrics: vec![MetricRow {
                metric: "weighted_inversions".into(),
                mean: 0.1 + 0.2,
                stderr: 1.0 / 3.0,
                std_dev: std::f64::consts::PI,
                min: 1e-300,
                max: 123456789.12345679,
                skewness: -0.0,
            }],
        };
        let doc = Document {
            config: config(),
            results: vec![row],
            histograms: vec![],
        };
        let back: Document<Vec<ResultRow>> =
            serde_json::from_slice(&json_bytes(&doc).unwrap()).unwrap();
        assert_eq!(back.results, doc.results);
        assert_eq!(
            back.results[0].metrics[0].mean.to_bits(),
            (0.1f64 + 0.2).to_bits()
        );
    }

    #[test]
    fn csv_numbers_use_plain_decimal_notation() {
        let c = Comparison {
            a: "swiss-5".into(),
            b: "ko".into(),
            metric: "inversions".into(),
            p_strictly_less: 0.9044,
            p_tie: 0.0084,
            samples: (100000, 100000),
            mean_a: 70.19,
            mean_b: 96.74,
        };
        let text = String::from_utf8(compare_csv(&c).unwrap()).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "swiss-5,ko,inversions,0.9044,0.0084,100000,100000,70.19,96.74"
        );
    }
}
