//! Python bindings: win matrices, format specs, single tournaments, Monte
//! Carlo runs, metrics, dominance and the exact oracle.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use tourneylab as tl;
use tourneylab::engine::replication_rng;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ranking(ranks: Vec<usize>) -> PyResult<tl::ObservedRanking> {
    if ranks.contains(&0) || ranks.iter().any(|&r| r > u16::MAX as usize) {
        return Err(value_error("ranks are 1-based"));
    }
    tl::ObservedRanking::from_ranks(&ranks).map_err(value_error)
}

fn metric(name: &str) -> PyResult<tl::Metric> {
    name.parse().map_err(value_error)
}

fn log_base(base: &str) -> PyResult<tl::LogBase> {
    base.parse().map_err(value_error)
}

/// Pairwise win probabilities; player `i` (1-based) has true rank `i`.
#[pyclass(name = "WinMatrix", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWinMatrix {
    inner: Arc<tl::WinMatrix>,
}

#[pymethods]
impl PyWinMatrix {
    #[staticmethod]
    fn skill(skill: f64, n: usize) -> PyResult<Self> {
        let model = tl::SkillModel::new(skill).map_err(value_error)?;
        Ok(Self {
            inner: Arc::new(tl::skill_matrix(model, n).map_err(value_error)?),
        })
    }

    #[staticmethod]
    fn uniform(n: usize) -> Self {
        Self {
            inner: Arc::new(tl::WinMatrix::uniform(n)),
        }
    }

    #[staticmethod]
    fn deterministic(n: usize) -> Self {
        Self {
            inner: Arc::new(tl::WinMatrix::deterministic(n)),
        }
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(tl::WinMatrix::from_rows(rows).map_err(value_error)?),
        })
    }

    /// Loads a `name,rating` CSV; returns the matrix and names in rank order.
    #[staticmethod]
    fn elo(path: PathBuf) -> PyResult<(Self, Vec<String>)> {
        let table = tl::RatingTable::load_csv(&path).map_err(value_error)?;
        let (m, names) = tl::elo_matrix(&table);
        Ok((Self { inner: Arc::new(m) }, names))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn p(&self, a: usize, b: usize) -> PyResult<f64> {
        let n = self.inner.n();
        if a == 0 || b == 0 || a > n || b > n {
            return Err(value_error(format!("players are 1..={n}")));
        }
        Ok(self.inner.p_idx(a - 1, b - 1))
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    fn __repr__(&self) -> String {
        format!("WinMatrix(n={})", self.inner.n())
    }
}

#[pyclass(name = "FormatSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFormatSpec {
    inner: tl::FormatSpec,
}

#[pymethods]
impl PyFormatSpec {
    #[new]
    #[pyo3(signature = (format, n = 32, rounds = None, seeding = "random", tie_rule = "replay", group_draw = "separated"))]
    fn new(
        format: &str,
        n: usize,
        rounds: Option<usize>,
        seeding: &str,
        tie_rule: &str,
        group_draw: &str,
    ) -> PyResult<Self> {
        let kind: tl::FormatKind = format.parse().map_err(value_error)?;
        let spec = match (kind, rounds) {
            (tl::FormatKind::Swiss, Some(r)) => tl::FormatSpec::swiss(n, r),
            (tl::FormatKind::Swiss, None) => return Err(value_error("swiss needs rounds")),
            (_, Some(_)) => return Err(value_error("rounds is only valid for swiss")),
            (k, None) => tl::FormatSpec::new(k, n),
        };
        let spec = spec
            .with_seeding(match seeding {
                "random" => tl::Seeding::Random,
                "standard" => tl::Seeding::Standard,
                s => return Err(value_error(format!("unknown seeding {s:?}"))),
            })
            .with_tie_rule(match tie_rule {
                "replay" => tl::TieRule::Replay,
                "head_to_head" => tl::TieRule::HeadToHead,
                s => return Err(value_error(format!("unknown tie rule {s:?}"))),
            })
            .with_group_draw(match group_draw {
                "separated" => tl::GroupDraw::Separated,
                "unconstrained" => tl::GroupDraw::Unconstrained,
                s => return Err(value_error(format!("unknown group draw {s:?}"))),
            });
        spec.validate().map_err(value_error)?;
        Ok(Self { inner: spec })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn counted_matches(&self) -> usize {
        self.inner.counted_matches()
    }

    fn __repr__(&self) -> String {
        format!("FormatSpec({:?}, n={})", self.inner.label(), self.inner.n)
    }
}

/// One simulated tournament.
#[pyclass(name = "TournamentResult", frozen, get_all)]
struct PyTournamentResult {
    /// True ranks in finishing order.
    ranking: Vec<usize>,
    counted_matches: usize,
    total_matches: usize,
}

#[pyclass(name = "RunSummary", frozen)]
struct PyRunSummary {
    inner: tl::RunSummary,
}

impl PyRunSummary {
    fn summary(&self, name: &str) -> PyResult<&tl::engine::MetricSummary> {
        let m = metric(name)?;
        self.inner
            .metric(m)
            .ok_or_else(|| value_error(format!("metric {m} was not computed")))
    }
}

#[pymethods]
impl PyRunSummary {
    #[getter]
    fn format(&self) -> &str {
        &self.inner.format
    }

    #[getter]
    fn replications(&self) -> usize {
        self.inner.replications
    }

    #[getter]
    fn counted_matches(&self) -> usize {
        self.inner.counted_matches
    }

    /// Metric name to mean.
    #[getter]
    fn means(&self) -> HashMap<String, f64> {
        self.inner
            .metrics
            .iter()
            .map(|m| (m.metric.to_string(), m.mean))
            .collect()
    }

    fn mean(&self, metric: &str) -> PyResult<f64> {
        Ok(self.summary(metric)?.mean)
    }

    fn stderr(&self, metric: &str) -> PyResult<f64> {
        Ok(self.summary(metric)?.stderr)
    }

    fn skewness(&self, metric: &str) -> PyResult<f64> {
        Ok(self.summary(metric)?.skewness)
    }

    fn is_unimodal(&self, metric: &str) -> PyResult<bool> {
        Ok(self.summary(metric)?.is_unimodal())
    }

    /// `(value, count)` pairs; real metrics report lower bin edges.
    fn histogram(&self, metric: &str) -> PyResult<Vec<(f64, u64)>> {
        Ok(self.summary(metric)?.histogram.points())
    }

    /// `place_counts[i][j]`: runs where true rank `i + 1` finished `j + 1`.
    #[getter]
    fn place_counts(&self) -> Vec<Vec<u64>> {
        self.inner.place_counts.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunSummary({:?}, replications={})",
            self.inner.format, self.inner.replications
        )
    }
}

/// Plays replication `index` of the stream seeded by `seed`.
#[pyfunction]
#[pyo3(signature = (spec, matrix, seed = 42, index = 0))]
fn simulate(
    spec: &PyFormatSpec,
    matrix: &PyWinMatrix,
    seed: u64,
    index: u64,
) -> PyResult<PyTournamentResult> {
    let r = tl::run_format(
        &spec.inner,
        &matrix.inner,
        &mut replication_rng(seed, index),
    )
    .map_err(value_error)?;
    Ok(PyTournamentResult {
        ranking: r.ranking.as_slice().iter().map(|p| p.rank()).collect(),
        counted_matches: r.counted_matches,
        total_matches: r.matches.len(),
    })
}

/// Monte Carlo run; the GIL is released while replications execute.
#[pyfunction]
#[pyo3(signature = (spec, matrix, reps = 100_000, seed = 42, topk = vec![1, 8], log_base = "e"))]
fn run(
    py: Python<'_>,
    spec: &PyFormatSpec,
    matrix: &PyWinMatrix,
    reps: usize,
    seed: u64,
    topk: Vec<usize>,
    log_base: &str,
) -> PyResult<PyRunSummary> {
    let metrics = tl::MetricSet::standard(&topk).with_log_base(self::log_base(log_base)?);
    let cfg =
        tl::RunConfig::new(spec.inner, matrix.inner.clone(), reps, seed).with_metrics(metrics);
    let summary = py.detach(|| tl::run(&cfg)).map_err(value_error)?;
    Ok(PyRunSummary { inner: summary })
}

/// `(P(a < b), P(a == b))` on `metric` for two independent runs.
#[pyfunction]
#[pyo3(signature = (a, b, metric = "inversions"))]
fn dominance(a: &PyRunSummary, b: &PyRunSummary, metric: &str) -> PyResult<(f64, f64)> {
    let d = tl::dominance(&a.inner, &b.inner, self::metric(metric)?).map_err(value_error)?;
    Ok((d.p_strictly_less, d.p_tie))
}

/// Exact expectation of `metric` by enumerating every outcome.
#[pyfunction]
#[pyo3(signature = (spec, matrix, metric = "inversions", log_base = "e"))]
fn exact_expectation(
    spec: &PyFormatSpec,
    matrix: &PyWinMatrix,
    metric: &str,
    log_base: &str,
) -> PyResult<f64> {
    let e = tl::enumerate(&spec.inner, &matrix.inner).map_err(value_error)?;
    Ok(e.expected_metric(self::metric(metric)?, self::log_base(log_base)?))
}

#[pyfunction]
fn inversions(ranks: Vec<usize>) -> PyResult<u64> {
    Ok(tl::inversions(&ranking(ranks)?))
}

#[pyfunction]
#[pyo3(signature = (ranks, log_base = "e"))]
fn weighted_inversions(ranks: Vec<usize>, log_base: &str) -> PyResult<f64> {
    Ok(tl::weighted_inversions(
        &ranking(ranks)?,
        self::log_base(log_base)?,
    ))
}

#[pyfunction]
fn avg_rank_top(ranks: Vec<usize>, k: usize) -> PyResult<f64> {
    let r = ranking(ranks)?;
    if k == 0 || k > r.len() {
        return Err(value_error(format!("k must be in 1..={}", r.len())));
    }
    Ok(tl::avg_rank_top(&r, k))
}

#[pymodule]
fn tourneylab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWinMatrix>()?;
    m.add_class::<PyFormatSpec>()?;
    m.add_class::<PyTournamentResult>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(dominance, m)?)?;
    m.add_function(wrap_pyfunction!(exact_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(inversions, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_inversions, m)?)?;
    m.add_function(wrap_pyfunction!(avg_rank_top, m)?)?;
    Ok(())
}
