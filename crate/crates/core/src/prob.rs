//! Pairwise winning probabilities and match sampling.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::PlayerId;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("need at least 2 players, got {0}")]
    TooFewPlayers(usize),
    #[error("skill must be positive and finite, got {0}")]
    InvalidSkill(f64),
    #[error("duplicate player name {0:?}")]
    DuplicateName(String),
    #[error("rating for {name:?} is not finite")]
    NonFiniteRating { name: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("matrix is not {n}x{n}: row {row} has {len} entries")]
    NotSquare { n: usize, row: usize, len: usize },
    #[error("p[{i}][{j}] = {value} is outside [0, 1]")]
    OutOfUnit { i: usize, j: usize, value: f64 },
    #[error("p[{i}][{j}] + p[{j}][{i}] = {sum}, expected 1")]
    NotComplementary { i: usize, j: usize, sum: f64 },
    #[error("probabilities are not monotone in strength at ({i}, {j}, {k})")]
    NotMonotone { i: usize, j: usize, k: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Pairwise winning probabilities indexed by true rank.
///
/// `p(a, b)` is the chance that `a` beats `b`; `p(a, b) + p(b, a) = 1` and the
/// diagonal is fixed at 0.5.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinMatrix {
    n: usize,
    p: Vec<f64>,
}

impl WinMatrix {
    /// Builds a matrix from the strict upper triangle `upper(i, j)` (0-based,
    /// `i < j`); the lower triangle is filled with complements.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut p = vec![0.5; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = upper(i, j);
                p[i * n + j] = v;
                p[j * n + i] = 1.0 - v;
            }
        }
        Self { n, p }
    }

    /// Every match is a coin flip.
    pub fn uniform(n: usize) -> Self {
        Self::from_upper(n, |_, _| 0.5)
    }

    /// The stronger player always wins.
    pub fn deterministic(n: usize) -> Self {
        Self::from_upper(n, |_, _| 1.0)
    }

    /// Validates a full matrix given as rows. The diagonal is ignored.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        if n < 2 {
            return Err(ModelError::TooFewPlayers(n));
        }
        let mut p = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::NotSquare {
                    n,
                    row: i + 1,
                    len: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                if i == j {
                    p.push(0.5);
                } else if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::OutOfUnit {
                        i: i + 1,
                        j: j + 1,
                        value: v,
                    });
                } else {
                    p.push(v);
                }
            }
        }
        let m = Self { n, p };
        m.check()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self, a: PlayerId, b: PlayerId) -> f64 {
        self.p[a.index() * self.n + b.index()]
    }

    /// Probability by 0-based indices.
    #[inline]
    pub fn p_idx(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Checks complementarity and strength monotonicity: for `i < j < k`,
    /// `p[i][k] >= p[i][j]` and `p[i][k] >= p[j][k]`.
    pub fn check(&self) -> Result<(), ModelError> {
        const TOL: f64 = 1e-9;
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let sum = self.p_idx(i, j) + self.p_idx(j, i);
                if (sum - 1.0).abs() > TOL {
                    return Err(ModelError::NotComplementary {
                        i: i + 1,
                        j: j + 1,
                        sum,
                    });
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let pik = self.p_idx(i, k);
                    if pik + TOL < self.p_idx(i, j) || pik + TOL < self.p_idx(j, k) {
                        return Err(ModelError::NotMonotone {
                            i: i + 1,
                            j: j + 1,
                            k: k + 1,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads an `n x n` matrix from headerless CSV.
    pub fn read_csv(reader: impl Read) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = rec
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| ModelError::Parse {
                        line,
                        message: format!("{field:?} is not a probability"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn load_csv(path: &Path) -> Result<Self, ModelError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// The linear model: a uniform roll decides each match against a threshold
/// that moves by `skill / 100` per rank of difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkillModel {
    skill: f64,
}

impl SkillModel {
    pub fn new(skill: f64) -> Result<Self, ModelError> {
        if skill.is_finite() && skill > 0.0 {
            Ok(Self { skill })
        } else {
            Err(ModelError::InvalidSkill(skill))
        }
    }

    pub fn skill(&self) -> f64 {
        self.skill
    }

    /// Probability that the player of rank `a` beats the player of rank `b`.
    pub fn win_probability(&self, a: usize, b: usize) -> f64 {
        let threshold = self.skill * (a as f64 - b as f64) / 100.0 + 0.5;
        (1.0 - threshold).clamp(0.0, 1.0)
    }
}

pub fn skill_matrix(model: SkillModel, n: usize) -> Result<WinMatrix, ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewPlayers(n));
    }
    Ok(WinMatrix::from_upper(n, |i, j| {
        model.win_probability(i + 1, j + 1)
    }))
}

/// Logistic Elo expectation with the conventional 400-point scale.
pub fn elo_win_probability(rating_a: f64, rating_b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-(rating_a - rating_b) / 400.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingEntry {
    pub name: String,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingTable {
    entries: Vec<RatingEntry>,
}

impl RatingTable {
    pub fn new(entries: Vec<RatingEntry>) -> Result<Self, ModelError> {
        if entries.len() < 2 {
            return Err(ModelError::TooFewPlayers(entries.len()));
        }
        let mut names = HashSet::new();
        for e in &entries {
            if !e.rating.is_finite() {
                return Err(ModelError::NonFiniteRating {
                    name: e.name.clone(),
                });
            }
            if !names.insert(e.name.as_str()) {
                return Err(ModelError::DuplicateName(e.name.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[RatingEntry] {
        &self.entries
    }

    /// Parses `name,rating` CSV with a header line.
    pub fn read_csv(reader: impl Read) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.len() != 2 || &headers[0] != "name" || &headers[1] != "rating" {
            return Err(ModelError::Parse {
                line: 1,
                message: "expected header `name,rating`".into(),
            });
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            let name = rec[0].to_string();
            if name.is_empty() {
                return Err(ModelError::Parse {
                    line,
                    message: "empty name".into(),
                });
            }
            let rating = rec[1].parse::<f64>().map_err(|_| ModelError::Parse {
                line,
                message: format!("{:?} is not a rating", &rec[1]),
            })?;
            if !rating.is_finite() {
                return Err(ModelError::Parse {
                    line,
                    message: "rating is not finite".into(),
                });
            }
            entries.push(RatingEntry { name, rating });
        }
        Self::new(entries)
    }

    pub fn load_csv(path: &Path) -> Result<Self, ModelError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn csv_error(e: csv::Error) -> ModelError {
    let line = e.position().map_or(0, |p| p.line());
    ModelError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Builds the Elo matrix. Players are ranked by rating (descending, ties by
/// name); the returned names are in rank order, so `names[r - 1]` is the
/// player with id `r`.
pub fn elo_matrix(table: &RatingTable) -> (WinMatrix, Vec<String>) {
    let mut sorted: Vec<&RatingEntry> = table.entries.iter().collect();
    sorted.sort_by(|a, b| {
        b.rating
            .total_cmp(&a.rating)
            .then_with(|| a.name.cmp(&b.name))
    });
    let ratings: Vec<f64> = sorted.iter().map(|e| e.rating).collect();
    let m = WinMatrix::from_upper(ratings.len(), |i, j| {
        elo_win_probability(ratings[i], ratings[j])
    });
    (m, sorted.into_iter().map(|e| e.name.clone()).collect())
}

/// Plays one match: `a` wins with probability `p(a, b)`. Consumes exactly one
/// uniform draw.
#[inline]
pub fn sample_match<R: Rng + ?Sized>(
    m: &WinMatrix,
    a: PlayerId,
    b: PlayerId,
    rng: &mut R,
) -> PlayerId {
    let roll: f64 = rng.random();
    if roll < m.p(a, b) {
        a
    } else {
        b
    }
}
