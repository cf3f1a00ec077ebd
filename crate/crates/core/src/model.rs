//! Core domain types shared by every format engine.
//!
//! Players carry no names inside a tournament: a [`PlayerId`] *is* the
//! player's position in the true strength order, with 1 the strongest.
//! Rating files map external names onto ids once, at load time.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A player, identified by true strength rank (1 = strongest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(u16);

impl PlayerId {
    /// Builds an id from a 1-based rank.
    ///
    /// Panics if `rank` is zero or does not fit the id width.
    pub fn new(rank: usize) -> Self {
        assert!(rank >= 1, "player ranks are 1-based");
        Self(u16::try_from(rank).expect("player rank out of range"))
    }

    /// Builds an id from a 0-based strength index.
    pub fn from_index(index: usize) -> Self {
        Self::new(index + 1)
    }

    pub fn rank(self) -> usize {
        self.0 as usize
    }

    /// 0-based index, for addressing per-player arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// All players `1..=n` in strength order.
pub fn field(n: usize) -> Vec<PlayerId> {
    (1..=n).map(PlayerId::new).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("ranking is empty")]
    Empty,
    #[error("player {0} is outside 1..={1}")]
    OutOfRange(PlayerId, usize),
    #[error("player {0} appears more than once")]
    Duplicate(PlayerId),
}

/// A strict final order produced by a tournament; position 1 is the winner.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<PlayerId>", into = "Vec<PlayerId>")]
pub struct ObservedRanking(Vec<PlayerId>);

impl ObservedRanking {
    /// Validates that `order` is a permutation of `1..=order.len()`.
    pub fn new(order: Vec<PlayerId>) -> Result<Self, RankingError> {
        check_permutation(&order)?;
        Ok(Self(order))
    }

    /// The true ranking `1, 2, ..., n`.
    pub fn identity(n: usize) -> Self {
        Self(field(n))
    }

    pub fn from_ranks(ranks: &[usize]) -> Result<Self, RankingError> {
        let order = ranks
            .iter()
            .map(|&r| {
                if r == 0 || r > u16::MAX as usize {
                    Err(RankingError::OutOfRange(PlayerId(0), ranks.len()))
                } else {
                    Ok(PlayerId::new(r))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[PlayerId] {
        &self.0
    }

    /// 0-based finishing position of every player, indexed by player index.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (place, p) in self.0.iter().enumerate() {
            pos[p.index()] = place;
        }
        pos
    }

    pub fn into_inner(self) -> Vec<PlayerId> {
        self.0
    }
}

impl TryFrom<Vec<PlayerId>> for ObservedRanking {
    type Error = RankingError;

    fn try_from(order: Vec<PlayerId>) -> Result<Self, Self::Error> {
        Self::new(order)
    }
}

impl From<ObservedRanking> for Vec<PlayerId> {
    fn from(r: ObservedRanking) -> Self {
        r.0
    }
}

fn check_permutation(order: &[PlayerId]) -> Result<(), RankingError> {
    let n = order.len();
    if n == 0 {
        return Err(RankingError::Empty);
    }
    let mut seen = vec![false; n];
    for &p in order {
        if p.0 == 0 || p.rank() > n {
            return Err(RankingError::OutOfRange(p, n));
        }
        if std::mem::replace(&mut seen[p.index()], true) {
            return Err(RankingError::Duplicate(p));
        }
    }
    Ok(())
}

/// Where in a tournament a match was played.
///
/// Only [`Stage::Tiebreak`] and [`Stage::MergeTiebreak`] are uncounted: they
/// exist to order tied players and are kept in the log for audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String")]
pub enum Stage {
    RoundRobin {
        leg: u8,
    },
    Group {
        phase: u8,
        group: u8,
    },
    Knockout {
        round: u8,
    },
    Draw {
        round: u8,
    },
    Process {
        round: u8,
    },
    Swiss {
        round: u8,
    },
    /// Replay among players tied in a round-robin table.
    Tiebreak,
    /// Decider between the two knockouts of draw-and-process.
    MergeTiebreak,
}

impl Stage {
    pub fn is_counted(self) -> bool {
        !matches!(self, Stage::Tiebreak | Stage::MergeTiebreak)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = |g: u8| char::from(b'A' + g % 26);
        match *self {
            Stage::RoundRobin { leg } => write!(f, "round-robin-leg-{leg}"),
            Stage::Group { phase: 1, group } => write!(f, "group-{}", letter(group)),
            Stage::Group { phase, group } => write!(f, "group{phase}-{}", letter(group)),
            Stage::Knockout { round } => write!(f, "ko-round-{round}"),
            Stage::Draw { round } => write!(f, "draw-round-{round}"),
            Stage::Process { round } => write!(f, "process-round-{round}"),
            Stage::Swiss { round } => write!(f, "swiss-round-{round}"),
            Stage::Tiebreak => f.write_str("tiebreak"),
            Stage::MergeTiebreak => f.write_str("merge-tiebreak"),
        }
    }
}

impl From<Stage> for String {
    fn from(s: Stage) -> Self {
        s.to_string()
    }
}

/// One simulated comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchRecord {
    pub stage: Stage,
    pub white: PlayerId,
    pub black: PlayerId,
    pub winner: PlayerId,
    pub counted: bool,
}

impl MatchRecord {
    pub fn new(stage: Stage, white: PlayerId, black: PlayerId, winner: PlayerId) -> Self {
        debug_assert!(white != black);
        debug_assert!(winner == white || winner == black);
        Self {
            stage,
            white,
            black,
            winner,
            counted: stage.is_counted(),
        }
    }

    pub fn loser(&self) -> PlayerId {
        if self.winner == self.white {
            self.black
        } else {
            self.white
        }
    }

    pub fn involves(&self, p: PlayerId) -> bool {
        self.white == p || self.black == p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TournamentResult {
    pub ranking: ObservedRanking,
    pub matches: Vec<MatchRecord>,
    pub counted_matches: usize,
}

impl TournamentResult {
    pub fn new(ranking: ObservedRanking, matches: Vec<MatchRecord>) -> Self {
        let counted_matches = matches.iter().filter(|m| m.counted).count();
        Self {
            ranking,
            matches,
            counted_matches,
        }
    }

    /// Counted matches played by each player, indexed by player index.
    pub fn matches_per_player(&self) -> Vec<usize> {
        let mut per = vec![0; self.ranking.len()];
        for m in self.matches.iter().filter(|m| m.counted) {
            per[m.white.index()] += 1;
            per[m.black.index()] += 1;
        }
        per
    }
}

/// True iff the ranking is a permutation of `1..=n`, every match record is
/// well formed, and `counted_matches` agrees with the log.
pub fn validate_result(result: &TournamentResult, n: usize) -> bool {
    let order = result.ranking.as_slice();
    if order.len() != n || check_permutation(order).is_err() {
        return false;
    }
    let mut counted = 0;
    for m in &result.matches {
        if m.white == m.black || (m.winner != m.white && m.winner != m.black) {
            return false;
        }
        if m.counted != m.stage.is_counted() {
            return false;
        }
        if m.white.rank() > n || m.black.rank() > n {
            return false;
        }
        counted += usize::from(m.counted);
    }
    counted == result.counted_matches
}
