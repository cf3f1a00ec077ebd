//! Ranking efficacy measures against the true order `1..n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ObservedRanking;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("unknown metric `{0}` (expected inversions, weighted, or top:K)")]
    Unknown(String),
    #[error("log base must be a finite number above 1, got `{0}`")]
    LogBase(String),
    #[error("top-k needs 1 <= k <= n, got k={k} for n={n}")]
    TopK { k: usize, n: usize },
}

/// Base of the logarithm in the weighted inversion count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBase(f64);

impl LogBase {
    pub const E: LogBase = LogBase(std::f64::consts::E);

    pub fn new(base: f64) -> Result<Self, MetricError> {
        if base.is_finite() && base > 1.0 {
            Ok(Self(base))
        } else {
            Err(MetricError::LogBase(base.to_string()))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> f64 {
        self.0.ln()
    }
}

impl Default for LogBase {
    fn default() -> Self {
        Self::E
    }
}

impl FromStr for LogBase {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "e" => Ok(Self::E),
            other => other
                .parse::<f64>()
                .map_err(|_| MetricError::LogBase(other.to_string()))
                .and_then(Self::new),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::E {
            f.write_str("e")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Kendall distance from the identity: pairs where the weaker player finishes
/// above the stronger one. O(n log n) with a Fenwick tree.
pub fn inversions(r: &ObservedRanking) -> u64 {
    let n = r.len();
    let mut tree = vec![0u32; n + 1];
    let mut count = 0u64;
    for (seen, p) in r.as_slice().iter().enumerate() {
        // Players already placed with a larger rank than p overtook p.
        let mut i = p.rank();
        let mut below = 0u32;
        while i > 0 {
            below += tree[i];
            i &= i - 1;
        }
        count += (seen as u32 - below) as u64;
        let mut i = p.rank();
        while i <= n {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    count
}

/// Sum over inverted pairs of `1 / log(i + 1)`, `i` being the true rank of the
/// stronger (overtaken) player.
pub fn weighted_inversions(r: &ObservedRanking, base: LogBase) -> f64 {
    let ln_b = base.ln();
    let n = r.len();
    let mut tree = vec![0u32; n + 1];
    let mut total = 0.0;
    for (seen, p) in r.as_slice().iter().enumerate() {
        let mut i = p.rank();
        let mut below = 0u32;
        while i > 0 {
            below += tree[i];
            i &= i - 1;
        }
        let overtaken_by = seen as u32 - below;
        if overtaken_by > 0 {
            total += overtaken_by as f64 * ln_b / ((p.rank() + 1) as f64).ln();
        }
        let mut i = p.rank();
        while i <= n {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    total
}

/// Sum of the true ranks of the observed top `k`, over `k(k+1)/2`.
pub fn avg_rank_top(r: &ObservedRanking, k: usize) -> f64 {
    assert!(k >= 1 && k <= r.len(), "top-k out of range");
    let sum: usize = r.as_slice()[..k].iter().map(|p| p.rank()).sum();
    sum as f64 / (k * (k + 1) / 2) as f64
}

/// One named metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Inversions,
    WeightedInversions,
    AvgRankTop(usize),
}

impl Metric {
    pub fn is_integer(self) -> bool {
        matches!(self, Metric::Inversions)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Inversions => f.write_str("inversions"),
            Metric::WeightedInversions => f.write_str("weighted_inversions"),
            Metric::AvgRankTop(k) => write!(f, "avg_rank_top_{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let top = s
            .strip_prefix("avg_rank_top_")
            .or_else(|| s.strip_prefix("top:"))
            .or_else(|| s.strip_prefix("top"));
        match (s, top) {
            ("inversions", _) => Ok(Metric::Inversions),
            ("weighted_inversions" | "weighted", _) => Ok(Metric::WeightedInversions),
            (_, Some(k)) => k
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .map(Metric::AvgRankTop)
                .ok_or_else(|| MetricError::Unknown(s.to_string())),
            _ => Err(MetricError::Unknown(s.to_string())),
        }
    }
}

/// Which metrics to compute and with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub metrics: Vec<Metric>,
    pub log_base: LogBase,
}

impl MetricSet {
    /// Inversions, weighted inversions (natural log), and top-k for `ks`.
    pub fn standard(ks: &[usize]) -> Self {
        let mut metrics = vec![Metric::Inversions, Metric::WeightedInversions];
        metrics.extend(ks.iter().map(|&k| Metric::AvgRankTop(k)));
        Self {
            metrics,
            log_base: LogBase::E,
        }
    }

    pub fn empty() -> Self {
        Self {
            metrics: Vec::new(),
            log_base: LogBase::E,
        }
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<(), MetricError> {
        for m in &self.metrics {
            if let Metric::AvgRankTop(k) = *m {
                if k == 0 || k > n {
                    return Err(MetricError::TopK { k, n });
                }
            }
        }
        Ok(())
    }

    /// Values in the order of `self.metrics`.
    pub fn evaluate(&self, r: &ObservedRanking) -> Vec<f64> {
        self.metrics
            .iter()
            .map(|m| match *m {
                Metric::Inversions => inversions(r) as f64,
                Metric::WeightedInversions => weighted_inversions(r, self.log_base),
                Metric::AvgRankTop(k) => avg_rank_top(r, k),
            })
            .collect()
    }
}

impl Default for MetricSet {
    fn default() -> Self {
        Self::standard(&[1, 8])
    }
}

/// All three measures for one ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub inversions: u64,
    pub weighted_inversions: f64,
    /// `(k, avg_rank_top(k))` in ascending `k`.
    pub avg_rank_top: Vec<(usize, f64)>,
}

impl MetricVector {
    pub fn compute(r: &ObservedRanking, ks: &[usize], base: LogBase) -> Self {
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        Self {
            inversions: inversions(r),
            weighted_inversions: weighted_inversions(r, base),
            avg_rank_top: ks.into_iter().map(|k| (k, avg_rank_top(r, k))).collect(),
        }
    }

    pub fn top(&self, k: usize) -> Option<f64> {
        self.avg_rank_top.iter().find(|e| e.0 == k).map(|e| e.1)
    }
}
