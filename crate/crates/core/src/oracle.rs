//! Exact ranking distributions for small tournaments.
//!
//! The oracle shares no code with the format engines beyond the domain
//! types. It iterates match-outcome vectors (one bit per deciding match),
//! weighs each by its probability, and accumulates the resulting rankings.
//!
//! Knockouts average over bracket shapes: a placement bracket is unchanged
//! by swapping the two halves of any block, so it is enough to enumerate
//! nested unordered splits (3 shapes at n=4, 315 at n=8) instead of all `n!`
//! slot orders. Best-of-three series enter as one bit with the majority
//! probability `p³ + 3p²(1−p)`.
//!
//! Round-robin ties are resolved exactly. One mini round-robin among a tie
//! set either reproduces the full tie (probability `q`) or yields a partial
//! order whose subgroups recurse (unnormalised distribution `R`). With at
//! most [`TIEBREAK_REPLAY_CAP`] attempts before a uniform lot,
//!
//! ```text
//! P = (1 − q^cap) / (1 − q) · R + q^cap / k!
//! ```

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::formats::{FormatKind, FormatSpec, Seeding, TIEBREAK_REPLAY_CAP};
use crate::metrics::{avg_rank_top, inversions, weighted_inversions, LogBase, Metric};
use crate::model::ObservedRanking;
use crate::prob::WinMatrix;

/// Largest number of (bracket, outcome vector) pairs the oracle will visit.
pub const MAX_WORK: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("the oracle does not cover {0}")]
    Unsupported(String),
    #[error("{format} at n={n} needs {work} enumeration steps, above the limit of {limit}")]
    TooLarge {
        format: String,
        n: usize,
        work: u64,
        limit: u64,
    },
    #[error("win matrix has {matrix} players but the format needs {format}")]
    SizeMismatch { matrix: usize, format: usize },
}

/// Exact distribution over final rankings.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeEnumeration {
    n: usize,
    format: String,
    /// Rankings as 1-based true ranks, winner first.
    distribution: Vec<(Vec<u8>, f64)>,
}

impl OutcomeEnumeration {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn format(&self) -> &str {
        &self.format
    }

    pub fn support_size(&self) -> usize {
        self.distribution.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObservedRanking, f64)> + '_ {
        self.distribution.iter().map(|(r, p)| (to_ranking(r), *p))
    }

    pub fn total_probability(&self) -> f64 {
        self.distribution.iter().map(|e| e.1).sum()
    }

    pub fn probability(&self, r: &ObservedRanking) -> f64 {
        let key: Vec<u8> = r.as_slice().iter().map(|p| p.rank() as u8).collect();
        self.distribution
            .iter()
            .find(|e| e.0 == key)
            .map_or(0.0, |e| e.1)
    }

    /// `p[i][j]`: probability that true rank `i + 1` finishes in place `j + 1`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut p = vec![vec![0.0; self.n]; self.n];
        for (r, prob) in &self.distribution {
            for (place, &rank) in r.iter().enumerate() {
                p[rank as usize - 1][place] += prob;
            }
        }
        p
    }

    pub fn expected_metric(&self, metric: Metric, base: LogBase) -> f64 {
        self.moments(metric, base).0
    }

    pub fn variance(&self, metric: Metric, base: LogBase) -> f64 {
        self.moments(metric, base).1
    }

    fn moments(&self, metric: Metric, base: LogBase) -> (f64, f64) {
        let values: Vec<(f64, f64)> = self
            .distribution
            .iter()
            .map(|(r, p)| {
                let r = to_ranking(r);
                let v = match metric {
                    Metric::Inversions => inversions(&r) as f64,
                    Metric::WeightedInversions => weighted_inversions(&r, base),
                    Metric::AvgRankTop(k) => avg_rank_top(&r, k.min(self.n)),
                };
                (v, *p)
            })
            .collect();
        let mean: f64 = values.iter().map(|(v, p)| v * p).sum();
        let var: f64 = values.iter().map(|(v, p)| p * (v - mean).powi(2)).sum();
        (mean, var)
    }
}

fn to_ranking(r: &[u8]) -> ObservedRanking {
    let ranks: Vec<usize> = r.iter().map(|&x| x as usize).collect();
    ObservedRanking::from_ranks(&ranks).expect("oracle rankings are permutations")
}

/// Exact ranking distribution of `spec` under `m`.
///
/// Covers round-robin, double round-robin, knockout and triple knockout.
pub fn enumerate(spec: &FormatSpec, m: &WinMatrix) -> Result<OutcomeEnumeration, OracleError> {
    let n = spec.n;
    if m.n() != n {
        return Err(OracleError::SizeMismatch {
            matrix: m.n(),
            format: n,
        });
    }
    spec.validate()
        .map_err(|e| OracleError::Unsupported(e.to_string()))?;
    let too_large = |work: u64| OracleError::TooLarge {
        format: spec.label(),
        n,
        work,
        limit: MAX_WORK,
    };
    let distribution = match spec.kind {
        FormatKind::RoundRobin | FormatKind::DoubleRoundRobin => {
            let legs = if spec.kind == FormatKind::DoubleRoundRobin {
                2
            } else {
                1
            };
            let bits = legs * n * (n - 1) / 2;
            let work = 1u64.checked_shl(bits as u32).unwrap_or(u64::MAX);
            if bits >= 63 || work > MAX_WORK {
                return Err(too_large(work));
            }
            RoundRobinOracle::new(m, legs).distribution(n)
        }
        FormatKind::Knockout | FormatKind::TripleKnockout => {
            let shape_count = match spec.seeding {
                Seeding::Random => shape_count(n),
                Seeding::Standard => 1,
            };
            let bits = (n / 2) * n.trailing_zeros() as usize;
            let work =
                shape_count.saturating_mul(1u64.checked_shl(bits as u32).unwrap_or(u64::MAX));
            if bits >= 63 || work > MAX_WORK {
                return Err(too_large(work));
            }
            let shapes = match spec.seeding {
                Seeding::Random => bracket_shapes(&(1..=n as u8).collect::<Vec<_>>()),
                Seeding::Standard => vec![standard_bracket(n)],
            };
            let series = if spec.kind == FormatKind::TripleKnockout {
                3
            } else {
                1
            };
            knockout_distribution(m, &shapes, series, bits)
        }
        _ => return Err(OracleError::Unsupported(spec.label())),
    };
    Ok(OutcomeEnumeration {
        n,
        format: spec.label(),
        distribution,
    })
}

fn sorted(map: HashMap<Vec<u8>, f64>) -> Vec<(Vec<u8>, f64)> {
    let mut v: Vec<(Vec<u8>, f64)> = map.into_iter().filter(|e| e.1 > 0.0).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Probability that true rank `a` beats true rank `b` in one game.
fn game(m: &WinMatrix, a: u8, b: u8) -> f64 {
    m.p_idx(a as usize - 1, b as usize - 1)
}

fn series(m: &WinMatrix, a: u8, b: u8, games: u32) -> f64 {
    let p = game(m, a, b);
    match games {
        1 => p,
        3 => p * p * p + 3.0 * p * p * (1.0 - p),
        _ => unreachable!("only single games and best-of-three"),
    }
}

/// Number of shapes [`bracket_shapes`] yields, saturating.
fn shape_count(n: usize) -> u64 {
    if n <= 1 {
        return 1;
    }
    let mut choose = 1u64;
    for i in 0..n / 2 - 1 {
        choose = choose.saturating_mul((n - 1 - i) as u64) / (i as u64 + 1);
    }
    let half = shape_count(n / 2);
    choose.saturating_mul(half).saturating_mul(half)
}

/// All bracket shapes up to swapping block halves, as slot lists.
fn bracket_shapes(players: &[u8]) -> Vec<Vec<u8>> {
    if players.len() == 1 {
        return vec![players.to_vec()];
    }
    let half = players.len() / 2;
    let first = players[0];
    let rest = &players[1..];
    let mut out = Vec::new();
    // Choose the other members of the half that holds `first`.
    for combo in combinations(rest, half - 1) {
        let mut left = vec![first];
        left.extend(&combo);
        let right: Vec<u8> = rest
            .iter()
            .copied()
            .filter(|p| !combo.contains(p))
            .collect();
        for l in bracket_shapes(&left) {
            for r in bracket_shapes(&right) {
                let mut slots = l.clone();
                slots.extend(&r);
                out.push(slots);
            }
        }
    }
    out
}

fn combinations(items: &[u8], k: usize) -> Vec<Vec<u8>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with: Vec<Vec<u8>> = combinations(&items[1..], k - 1)
        .into_iter()
        .map(|mut c| {
            c.insert(0, items[0]);
            c
        })
        .collect();
    with.extend(combinations(&items[1..], k));
    with
}

/// Seed `s` goes to slot `bitreverse(s − 1)`, so the top seeds can only
/// meet late.
fn standard_bracket(n: usize) -> Vec<u8> {
    let bits = n.trailing_zeros();
    let mut out = vec![0u8; n];
    for seed in 1..=n {
        out[(seed - 1).reverse_bits() >> (usize::BITS - bits)] = seed as u8;
    }
    out
}

/// Placement knockout driven by an outcome vector: bit `t` set means the
/// first-listed player of the `t`-th series loses.
fn knockout_distribution(
    m: &WinMatrix,
    shapes: &[Vec<u8>],
    games: u32,
    bits: usize,
) -> Vec<(Vec<u8>, f64)> {
    let weight = 1.0 / shapes.len() as f64;
    let mut dist: HashMap<Vec<u8>, f64> = HashMap::new();
    for slots in shapes {
        for outcome in 0u64..1 << bits {
            let mut cursor = 0;
            let mut prob = weight;
            let ranking = place(slots, outcome, &mut cursor, &mut prob, m, games);
            if prob > 0.0 {
                *dist.entry(ranking).or_insert(0.0) += prob;
            }
        }
    }
    sorted(dist)
}

fn place(
    slots: &[u8],
    outcome: u64,
    cursor: &mut usize,
    prob: &mut f64,
    m: &WinMatrix,
    games: u32,
) -> Vec<u8> {
    if slots.len() == 1 {
        return slots.to_vec();
    }
    let mut winners = Vec::with_capacity(slots.len() / 2);
    let mut losers = Vec::with_capacity(slots.len() / 2);
    for pair in slots.chunks(2) {
        let p = series(m, pair[0], pair[1], games);
        if outcome >> *cursor & 1 == 0 {
            *prob *= p;
            winners.push(pair[0]);
            losers.push(pair[1]);
        } else {
            *prob *= 1.0 - p;
            winners.push(pair[1]);
            losers.push(pair[0]);
        }
        *cursor += 1;
    }
    let mut ranking = place(&winners, outcome, cursor, prob, m, games);
    ranking.extend(place(&losers, outcome, cursor, prob, m, games));
    ranking
}

struct RoundRobinOracle<'a> {
    m: &'a WinMatrix,
    legs: usize,
    memo: HashMap<Vec<u8>, Vec<(Vec<u8>, f64)>>,
}

impl<'a> RoundRobinOracle<'a> {
    fn new(m: &'a WinMatrix, legs: usize) -> Self {
        Self {
            m,
            legs,
            memo: HashMap::new(),
        }
    }

    fn distribution(&mut self, n: usize) -> Vec<(Vec<u8>, f64)> {
        let players: Vec<u8> = (1..=n as u8).collect();
        let mut dist = HashMap::new();
        for (wins, prob) in self.score_vectors(&players) {
            for (ranking, p) in self.order_by_wins(&players, &wins) {
                *dist.entry(ranking).or_insert(0.0) += prob * p;
            }
        }
        sorted(dist)
    }

    /// Distribution of win vectors of a (double) round-robin among `players`.
    fn score_vectors(&self, players: &[u8]) -> Vec<(Vec<u32>, f64)> {
        let k = players.len();
        let mut games = Vec::new();
        for _ in 0..self.legs {
            for i in 0..k {
                for j in i + 1..k {
                    games.push((i, j, game(self.m, players[i], players[j])));
                }
            }
        }
        let mut by_wins: HashMap<Vec<u32>, f64> = HashMap::new();
        for outcome in 0u64..1 << games.len() {
            let mut wins = vec![0u32; k];
            let mut prob = 1.0;
            for (t, &(i, j, p)) in games.iter().enumerate() {
                if outcome >> t & 1 == 0 {
                    wins[i] += 1;
                    prob *= p;
                } else {
                    wins[j] += 1;
                    prob *= 1.0 - p;
                }
            }
            if prob > 0.0 {
                *by_wins.entry(wins).or_insert(0.0) += prob;
            }
        }
        by_wins.into_iter().collect()
    }

    /// Orders `players` by `wins` descending; each tied group is replaced by
    /// its exact tie-break distribution. Returns the product distribution.
    fn order_by_wins(&mut self, players: &[u8], wins: &[u32]) -> Vec<(Vec<u8>, f64)> {
        let mut levels: Vec<u32> = wins.to_vec();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        levels.dedup();
        let mut acc: Vec<(Vec<u8>, f64)> = vec![(Vec::new(), 1.0)];
        for level in levels {
            let mut group: Vec<u8> = players
                .iter()
                .zip(wins)
                .filter(|(_, &w)| w == level)
                .map(|(&p, _)| p)
                .collect();
            group.sort_unstable();
            let part = if group.len() == 1 {
                vec![(group, 1.0)]
            } else {
                self.tie_break(&group)
            };
            let mut next = Vec::with_capacity(acc.len() * part.len());
            for (prefix, p) in &acc {
                for (tail, q) in &part {
                    let mut r = prefix.clone();
                    r.extend(tail);
                    next.push((r, p * q));
                }
            }
            acc = next;
        }
        acc
    }

    fn tie_break(&mut self, group: &[u8]) -> Vec<(Vec<u8>, f64)> {
        if let Some(d) = self.memo.get(group) {
            return d.clone();
        }
        let k = group.len();
        let mut q = 0.0;
        let mut partial: HashMap<Vec<u8>, f64> = HashMap::new();
        for (wins, prob) in self.score_vectors(group) {
            if wins.iter().all(|&w| w == wins[0]) {
                q += prob;
                continue;
            }
            for (r, p) in self.order_by_wins(group, &wins) {
                *partial.entry(r).or_insert(0.0) += prob * p;
            }
        }
        let cap = TIEBREAK_REPLAY_CAP as i32;
        let repeat = if q < 1.0 {
            (1.0 - q.powi(cap)) / (1.0 - q)
        } else {
            cap as f64
        };
        let lot = q.powi(cap) / factorial(k);
        let mut dist: HashMap<Vec<u8>, f64> =
            partial.into_iter().map(|(r, p)| (r, repeat * p)).collect();
        if lot > 0.0 {
            for perm in permutations(group) {
                *dist.entry(perm).or_insert(0.0) += lot;
            }
        }
        let d = sorted(dist);
        self.memo.insert(group.to_vec(), d.clone());
        d
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
