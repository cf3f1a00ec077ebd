//! Monte Carlo runs, format comparison and sweeps.
//!
//! Replication `i` draws from `ChaCha8Rng::seed_from_u64(master_seed)` with
//! its stream set to `i`, so every tournament has its own independent stream
//! and results do not depend on scheduling. Replications are evaluated in
//! parallel in fixed-size blocks; aggregation always walks them in index
//! order, which makes parallel and sequential runs bit-identical.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{run_format, FormatError, FormatSpec};
use crate::metrics::{Metric, MetricError, MetricSet};
use crate::prob::WinMatrix;

/// Replications evaluated per parallel block.
const BLOCK: usize = 1 << 14;

/// Default histogram bin width for real-valued metrics.
pub const REAL_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("win matrix has {matrix} players but the format needs {format}")]
    SizeMismatch { matrix: usize, format: usize },
    #[error("summary has no histogram for {0}")]
    MissingMetric(Metric),
    #[error("histograms for {0} use different bin widths")]
    BinMismatch(Metric),
    #[error("sweep needs at least one configuration")]
    EmptySweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub format: FormatSpec,
    #[serde(skip)]
    pub matrix: Arc<WinMatrix>,
    /// Free-form description of where the matrix came from.
    pub model: String,
    pub replications: usize,
    pub master_seed: u64,
    pub metrics: MetricSet,
    pub execution: Execution,
    pub real_bin_width: f64,
}

impl RunConfig {
    pub fn new(
        format: FormatSpec,
        matrix: Arc<WinMatrix>,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            format,
            matrix,
            model: String::from("matrix"),
            replications,
            master_seed,
            metrics: MetricSet::default(),
            execution: Execution::Parallel,
            real_bin_width: REAL_BIN_WIDTH,
        }
    }

    pub fn with_model_label(mut self, label: impl Into<String>) -> Self {
        self.model = label.into();
        self
    }

    pub fn with_metrics(mut self, metrics: MetricSet) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.replications == 0 {
            return Err(EngineError::NoReplications);
        }
        self.format.validate()?;
        if self.matrix.n() != self.format.n {
            return Err(EngineError::SizeMismatch {
                matrix: self.matrix.n(),
                format: self.format.n,
            });
        }
        self.metrics.validate(self.format.n)?;
        Ok(())
    }
}

/// The random stream of replication `index`.
pub fn replication_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Counts per bin. Integer metrics use unit bins keyed by value; real
/// metrics use bins `[k·w, (k+1)·w)` keyed by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub width: f64,
    pub integer: bool,
    pub counts: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn new(integer: bool, width: f64) -> Self {
        Self {
            width: if integer { 1.0 } else { width },
            integer,
            counts: BTreeMap::new(),
        }
    }

    pub fn bin(&self, value: f64) -> i64 {
        if self.integer {
            value.round() as i64
        } else {
            (value / self.width).floor() as i64
        }
    }

    pub fn add(&mut self, value: f64) {
        *self.counts.entry(self.bin(value)).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `(value, count)` pairs: the integer value, or the lower bin edge.
    pub fn points(&self) -> Vec<(f64, u64)> {
        self.counts
            .iter()
            .map(|(&k, &c)| (k as f64 * self.width, c))
            .collect()
    }

    /// Coarsens to bins of `factor` original bins.
    pub fn rebin(&self, factor: i64) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        for (&k, &c) in &self.counts {
            *out.entry(k.div_euclid(factor)).or_insert(0) += c;
        }
        out
    }

    /// Whether the histogram is unimodal up to sampling noise.
    ///
    /// Counts are pooled into bins of about a quarter standard deviation and
    /// must not rise, moving away from the mode, by more than three Poisson
    /// standard errors above the lowest bin passed so far.
    pub fn is_unimodal(&self, std_dev: f64) -> bool {
        let factor = ((std_dev / 4.0 / self.width).round() as i64).max(1);
        let bins = self.rebin(factor);
        let lo = *bins.keys().next().unwrap_or(&0);
        let hi = *bins.keys().next_back().unwrap_or(&0);
        let dense: Vec<u64> = (lo..=hi)
            .map(|k| bins.get(&k).copied().unwrap_or(0))
            .collect();
        let Some(mode) = (0..dense.len()).max_by_key(|&i| dense[i]) else {
            return true;
        };
        let monotone = |iter: &mut dyn Iterator<Item = u64>| {
            let mut floor = u64::MAX;
            for c in iter {
                if floor != u64::MAX
                    && c > floor
                    && (c - floor) as f64 > 3.0 * ((c + floor) as f64).sqrt()
                {
                    return false;
                }
                floor = floor.min(c);
            }
            true
        };
        monotone(&mut dense[mode..].iter().copied())
            && monotone(&mut dense[..=mode].iter().rev().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
    pub histogram: Histogram,
}

impl MetricSummary {
    pub fn is_unimodal(&self) -> bool {
        self.histogram.is_unimodal(self.std_dev)
    }
}

/// Streaming mean and central moments, updated in index order.
#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    min: f64,
    max: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        if self.n == 0.0 {
            self.min = x;
            self.max = x;
        }
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        let n1 = self.n;
        self.n += 1.0;
        let delta = x - self.mean;
        let delta_n = delta / self.n;
        let term = delta * delta_n * n1;
        self.mean += delta_n;
        self.m3 += term * delta_n * (self.n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
    }

    fn std_dev(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).sqrt()
        } else {
            0.0
        }
    }

    fn skewness(&self) -> f64 {
        if self.m2 == 0.0 {
            0.0
        } else {
            self.n.sqrt() * self.m3 / self.m2.powf(1.5)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub model: String,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    /// Counted matches of the first replication; see `counted_range`.
    pub counted_matches: usize,
    pub counted_range: (usize, usize),
    pub metrics: Vec<MetricSummary>,
    /// `place_counts[i][j]`: replications where true rank `i + 1` finished
    /// in place `j + 1`.
    pub place_counts: Vec<Vec<u64>>,
}

impl RunSummary {
    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.metric(metric).map(|m| m.mean)
    }
}

struct Replication {
    values: Vec<f64>,
    counted: usize,
    ranking: Vec<u16>,
}

/// Runs `config.replications` tournaments and aggregates their metrics.
pub fn run(config: &RunConfig) -> Result<RunSummary, EngineError> {
    config.validate()?;
    let n = config.format.n;
    let metrics = &config.metrics;
    let mut moments: Vec<Moments> = metrics.metrics.iter().map(|_| Moments::default()).collect();
    let mut histograms: Vec<Histogram> = metrics
        .metrics
        .iter()
        .map(|m| Histogram::new(m.is_integer(), config.real_bin_width))
        .collect();
    let mut place_counts = vec![vec![0u64; n]; n];
    let mut counted_range = (usize::MAX, 0);
    let mut counted_first = None;

    let one = |i: usize| -> Result<Replication, FormatError> {
        let mut rng = replication_rng(config.master_seed, i as u64);
        let result = run_format(&config.format, &config.matrix, &mut rng)?;
        Ok(Replication {
            values: metrics.evaluate(&result.ranking),
            counted: result.counted_matches,
            ranking: result
                .ranking
                .as_slice()
                .iter()
                .map(|p| p.rank() as u16)
                .collect(),
        })
    };

    let mut start = 0;
    while start < config.replications {
        let end = (start + BLOCK).min(config.replications);
        let block: Vec<Replication> = match config.execution {
            Execution::Parallel => (start..end)
                .into_par_iter()
                .map(one)
                .collect::<Result<_, _>>()?,
            Execution::Sequential => (start..end).map(one).collect::<Result<_, _>>()?,
        };
        for rep in block {
            for ((mo, h), &v) in moments.iter_mut().zip(&mut histograms).zip(&rep.values) {
                mo.push(v);
                h.add(v);
            }
            for (place, &rank) in rep.ranking.iter().enumerate() {
                place_counts[rank as usize - 1][place] += 1;
            }
            counted_first.get_or_insert(rep.counted);
            counted_range = (
                counted_range.0.min(rep.counted),
                counted_range.1.max(rep.counted),
            );
        }
        start = end;
    }

    let reps = config.replications as f64;
    let summaries = metrics
        .metrics
        .iter()
        .zip(moments)
        .zip(histograms)
        .map(|((&metric, mo), histogram)| MetricSummary {
            metric,
            mean: mo.mean,
            stderr: mo.std_dev() / reps.sqrt(),
            std_dev: mo.std_dev(),
            min: mo.min,
            max: mo.max,
            skewness: mo.skewness(),
            histogram,
        })
        .collect();
    Ok(RunSummary {
        format: config.format.label(),
        model: config.model.clone(),
        n,
        replications: config.replications,
        master_seed: config.master_seed,
        counted_matches: counted_first.unwrap_or(0),
        counted_range,
        metrics: summaries,
        place_counts,
    })
}

/// Probability that one draw from `a` is strictly below one from `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceEstimate {
    pub p_strictly_less: f64,
    pub p_tie: f64,
    pub samples: (u64, u64),
}

/// All-pairs comparison of two independent runs on `metric`, from their
/// histograms. Real metrics compare bins, so ties mean "same bin".
pub fn dominance(
    a: &RunSummary,
    b: &RunSummary,
    metric: Metric,
) -> Result<DominanceEstimate, EngineError> {
    let ha = &a
        .metric(metric)
        .ok_or(EngineError::MissingMetric(metric))?
        .histogram;
    let hb = &b
        .metric(metric)
        .ok_or(EngineError::MissingMetric(metric))?
        .histogram;
    if ha.width != hb.width || ha.integer != hb.integer {
        return Err(EngineError::BinMismatch(metric));
    }
    Ok(histogram_dominance(&ha.counts, &hb.counts))
}

/// U-statistic over two sorted count maps in one merged pass.
pub fn histogram_dominance(a: &BTreeMap<i64, u64>, b: &BTreeMap<i64, u64>) -> DominanceEstimate {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut b_above: u64 = nb;
    let mut less = 0u128;
    let mut tie = 0u128;
    let mut bi = b.iter().peekable();
    for (&x, &ca) in a {
        while let Some((&y, &cb)) = bi.peek() {
            if y < x {
                b_above -= cb;
                bi.next();
            } else {
                break;
            }
        }
        let same = b.get(&x).copied().unwrap_or(0);
        less += ca as u128 * (b_above - same) as u128;
        tie += ca as u128 * same as u128;
    }
    let pairs = na as f64 * nb as f64;
    DominanceEstimate {
        p_strictly_less: if pairs > 0.0 {
            less as f64 / pairs
        } else {
            0.0
        },
        p_tie: if pairs > 0.0 { tie as f64 / pairs } else { 0.0 },
        samples: (na, nb),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
}

/// One row of a format-vs-match-count table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub format: String,
    /// Swiss round count, empty for other formats.
    pub param: String,
    pub counted_matches: usize,
    pub cells: Vec<SweepCell>,
}

/// Runs every configuration and tabulates counted matches and metric means.
pub fn sweep(configs: &[RunConfig]) -> Result<Vec<SweepRow>, EngineError> {
    if configs.is_empty() {
        return Err(EngineError::EmptySweep);
    }
    configs
        .iter()
        .map(|c| {
            let s = run(c)?;
            Ok(SweepRow {
                format: c.format.kind.code().to_string(),
                param: match c.format.kind {
                    crate::formats::FormatKind::Swiss => c.format.swiss_rounds.to_string(),
                    _ => String::new(),
                },
                counted_matches: s.counted_matches,
                cells: s
                    .metrics
                    .iter()
                    .map(|m| SweepCell {
                        metric: m.metric,
                        mean: m.mean,
                        stderr: m.stderr,
                    })
                    .collect(),
            })
        })
        .collect()
}
