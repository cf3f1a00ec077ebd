//! Tournament format engines.
//!
//! Every engine consumes a [`WinMatrix`] and a random stream and returns a
//! [`TournamentResult`] with a strict ranking of the whole field. Knockout
//! stages are full placement brackets: losers keep playing in their own
//! sub-brackets, so every player receives a unique place.

mod draw_process;
mod groups;
mod knockout;
mod round_robin;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MatchRecord, PlayerId, Stage, TournamentResult};
use crate::prob::{sample_match, WinMatrix};

pub use draw_process::{merge_rankings, process_bracket, run_draw_and_process};
pub use groups::{run_double_group, run_multistage, STAGE_TWO_CROSSING};
pub use knockout::{run_placement_knockout, run_triple_knockout};
pub use round_robin::{run_round_robin, TIEBREAK_REPLAY_CAP};

/// How players level on round-robin wins are separated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// The tied players play a fresh mini round-robin (uncounted), recursively.
    #[default]
    Replay,
    /// First rank the tied players by the results they already had against
    /// each other, recursively; fall back to replays only when that table is
    /// level too.
    HeadToHead,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid format: {0}")]
    InvalidSpec(String),
    #[error("win matrix has {matrix} players but the format needs {format}")]
    SizeMismatch { matrix: usize, format: usize },
    #[error("swiss round {round}: no perfect matching without rematches exists")]
    Unpairable { round: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    RoundRobin,
    DoubleRoundRobin,
    Knockout,
    TripleKnockout,
    DrawAndProcess,
    MultiStage8,
    MultiStage4,
    DoubleGroup,
    Swiss,
}

impl FormatKind {
    pub const ALL: [FormatKind; 9] = [
        FormatKind::RoundRobin,
        FormatKind::DoubleRoundRobin,
        FormatKind::Knockout,
        FormatKind::TripleKnockout,
        FormatKind::DrawAndProcess,
        FormatKind::MultiStage8,
        FormatKind::MultiStage4,
        FormatKind::DoubleGroup,
        FormatKind::Swiss,
    ];

    /// Short command-line code.
    pub fn code(self) -> &'static str {
        match self {
            FormatKind::RoundRobin => "rr",
            FormatKind::DoubleRoundRobin => "drr",
            FormatKind::Knockout => "ko",
            FormatKind::TripleKnockout => "ko3",
            FormatKind::DrawAndProcess => "dp",
            FormatKind::MultiStage8 => "ms8",
            FormatKind::MultiStage4 => "ms4",
            FormatKind::DoubleGroup => "dg",
            FormatKind::Swiss => "swiss",
        }
    }

    fn uses_bracket(self) -> bool {
        !matches!(
            self,
            FormatKind::RoundRobin | FormatKind::DoubleRoundRobin | FormatKind::Swiss
        )
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FormatKind {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormatKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| FormatError::InvalidSpec(format!("unknown format {s:?}")))
    }
}

/// How initial brackets, groups and Swiss round-1 pairings are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Uniformly random draws.
    #[default]
    Random,
    /// Deterministic draws by true rank, arranged so that upset-free play
    /// reproduces the true ranking wherever the format allows it. A test hook.
    Standard,
}

/// Draw rule for knockout brackets fed by round-robin groups.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDraw {
    /// Random, but players from the same group never meet in round 1.
    #[default]
    Separated,
    /// Plain random draw.
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormatSpec {
    pub kind: FormatKind,
    pub n: usize,
    /// Number of rounds; only meaningful for [`FormatKind::Swiss`].
    pub swiss_rounds: usize,
    #[serde(default)]
    pub seeding: Seeding,
    #[serde(default)]
    pub group_draw: GroupDraw,
    #[serde(default)]
    pub tie_rule: TieRule,
}

impl FormatSpec {
    pub fn new(kind: FormatKind, n: usize) -> Self {
        Self {
            kind,
            n,
            swiss_rounds: 0,
            seeding: Seeding::Random,
            group_draw: GroupDraw::Separated,
            tie_rule: TieRule::Replay,
        }
    }

    pub fn swiss(n: usize, rounds: usize) -> Self {
        Self {
            swiss_rounds: rounds,
            ..Self::new(FormatKind::Swiss, n)
        }
    }

    pub fn with_seeding(mut self, seeding: Seeding) -> Self {
        self.seeding = seeding;
        self
    }

    pub fn with_group_draw(mut self, draw: GroupDraw) -> Self {
        self.group_draw = draw;
        self
    }

    pub fn with_tie_rule(mut self, rule: TieRule) -> Self {
        self.tie_rule = rule;
        self
    }

    /// Short label such as `ko` or `swiss-5`.
    pub fn label(&self) -> String {
        match self.kind {
            FormatKind::Swiss => format!("swiss-{}", self.swiss_rounds),
            k => k.code().to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        let n = self.n;
        let bad = |msg: String| Err(FormatError::InvalidSpec(msg));
        if n < 2 {
            return bad(format!("need at least 2 players, got {n}"));
        }
        if self.kind.uses_bracket() && !n.is_power_of_two() {
            return bad(format!("{} needs a power-of-two field, got {n}", self.kind));
        }
        match self.kind {
            FormatKind::RoundRobin | FormatKind::DoubleRoundRobin => {}
            FormatKind::Knockout | FormatKind::TripleKnockout => {}
            FormatKind::DrawAndProcess if n < 8 => {
                return bad(format!("dp needs at least 8 players, got {n}"))
            }
            FormatKind::DrawAndProcess => {}
            FormatKind::MultiStage8 if n < 16 => {
                return bad(format!("ms8 needs at least 16 players, got {n}"))
            }
            FormatKind::MultiStage4 if n < 8 => {
                return bad(format!("ms4 needs at least 8 players, got {n}"))
            }
            FormatKind::MultiStage8 | FormatKind::MultiStage4 => {}
            FormatKind::DoubleGroup if n != 16 && n != 32 => {
                return bad(format!("dg supports 16 or 32 players, got {n}"))
            }
            FormatKind::DoubleGroup => {}
            FormatKind::Swiss => {
                if !n.is_multiple_of(2) {
                    return bad(format!("swiss needs an even field, got {n}"));
                }
                if n > 64 {
                    return bad(format!("swiss supports at most 64 players, got {n}"));
                }
                if self.swiss_rounds < 1 || self.swiss_rounds > n - 1 {
                    return bad(format!(
                        "swiss rounds must be in 1..={}, got {}",
                        n - 1,
                        self.swiss_rounds
                    ));
                }
            }
        }
        if self.kind != FormatKind::Swiss && self.swiss_rounds != 0 {
            return bad(format!("rounds only apply to swiss, not {}", self.kind));
        }
        Ok(())
    }

    /// Number of counted matches every replication of this format plays.
    pub fn counted_matches(&self) -> usize {
        let n = self.n;
        let pairs = |k: usize| k * k.saturating_sub(1) / 2;
        let ko = |k: usize| k * k.trailing_zeros() as usize / 2;
        match self.kind {
            FormatKind::RoundRobin => pairs(n),
            FormatKind::DoubleRoundRobin => 2 * pairs(n),
            FormatKind::Knockout => ko(n),
            FormatKind::TripleKnockout => 3 * ko(n),
            FormatKind::DrawAndProcess => 2 * ko(n),
            FormatKind::MultiStage8 => 8 * pairs(n / 8) + 2 * ko(n / 2),
            FormatKind::MultiStage4 => 4 * pairs(n / 4) + 2 * ko(n / 2),
            FormatKind::DoubleGroup => 4 * pairs(n / 4) + 8 * pairs(n / 8) + 4 * ko(n / 4),
            FormatKind::Swiss => n / 2 * self.swiss_rounds,
        }
    }
}

/// Runs one replication of `spec`.
pub fn run_format<R: Rng + ?Sized>(
    spec: &FormatSpec,
    m: &WinMatrix,
    rng: &mut R,
) -> Result<TournamentResult, FormatError> {
    spec.validate()?;
    if m.n() != spec.n {
        return Err(FormatError::SizeMismatch {
            matrix: m.n(),
            format: spec.n,
        });
    }
    let n = spec.n;
    let players = crate::model::field(n);
    let result = match spec.kind {
        FormatKind::RoundRobin => run_round_robin(m, &players, false, spec.tie_rule, rng),
        FormatKind::DoubleRoundRobin => run_round_robin(m, &players, true, spec.tie_rule, rng),
        FormatKind::Knockout => {
            run_placement_knockout(m, &Bracket::draw(&players, spec.seeding, rng), rng)
        }
        FormatKind::TripleKnockout => {
            run_triple_knockout(m, &Bracket::draw(&players, spec.seeding, rng), rng)
        }
        FormatKind::DrawAndProcess => {
            run_draw_and_process(m, &Bracket::draw(&players, spec.seeding, rng), rng)
        }
        FormatKind::MultiStage8 => {
            run_multistage(m, 8, spec.seeding, spec.group_draw, spec.tie_rule, rng)
        }
        FormatKind::MultiStage4 => {
            run_multistage(m, 4, spec.seeding, spec.group_draw, spec.tie_rule, rng)
        }
        FormatKind::DoubleGroup => {
            run_double_group(m, spec.seeding, spec.group_draw, spec.tie_rule, rng)
        }
        FormatKind::Swiss => {
            return crate::swiss::run_swiss(m, n, spec.swiss_rounds, spec.seeding, rng)
        }
    };
    Ok(result)
}

/// A knockout draw: slot `2k` meets slot `2k + 1` in round 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bracket {
    slots: Vec<PlayerId>,
}

impl Bracket {
    pub fn new(slots: Vec<PlayerId>) -> Result<Self, FormatError> {
        if slots.len() < 2 || !slots.len().is_power_of_two() {
            return Err(FormatError::InvalidSpec(format!(
                "bracket size {} is not a power of two",
                slots.len()
            )));
        }
        let mut sorted = slots.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(FormatError::InvalidSpec("bracket repeats a player".into()));
        }
        Ok(Self { slots })
    }

    /// Uniformly random bracket.
    pub fn random<R: Rng + ?Sized>(players: &[PlayerId], rng: &mut R) -> Self {
        let mut slots = players.to_vec();
        slots.shuffle(rng);
        Self { slots }
    }

    /// Bit-reversal layout by strength: the k-th strongest sits in slot
    /// `bitreverse(k)`, so round 1 pairs the top half against the bottom half
    /// and an upset-free bracket places everyone at their true rank.
    pub fn standard(players: &[PlayerId]) -> Self {
        let mut sorted = players.to_vec();
        sorted.sort_unstable();
        let bits = sorted.len().trailing_zeros();
        let slots = (0..sorted.len())
            .map(|s| sorted[bit_reverse(s, bits)])
            .collect();
        Self { slots }
    }

    pub fn draw<R: Rng + ?Sized>(players: &[PlayerId], seeding: Seeding, rng: &mut R) -> Self {
        match seeding {
            Seeding::Random => Self::random(players, rng),
            Seeding::Standard => Self::standard(players),
        }
    }

    pub fn slots(&self) -> &[PlayerId] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn rounds(&self) -> u32 {
        self.slots.len().trailing_zeros()
    }
}

/// Reverses the low `bits` bits of `x`.
pub fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Plays matches and keeps the log for one tournament.
pub(crate) struct Referee<'a, R: ?Sized> {
    matrix: &'a WinMatrix,
    pub(crate) rng: &'a mut R,
    log: Vec<MatchRecord>,
    tie_rule: TieRule,
}

impl<'a, R: Rng + ?Sized> Referee<'a, R> {
    pub(crate) fn new(matrix: &'a WinMatrix, rng: &'a mut R, capacity: usize) -> Self {
        Self {
            matrix,
            rng,
            log: Vec::with_capacity(capacity),
            tie_rule: TieRule::Replay,
        }
    }

    pub(crate) fn with_tie_rule(mut self, rule: TieRule) -> Self {
        self.tie_rule = rule;
        self
    }

    pub(crate) fn play(&mut self, stage: Stage, white: PlayerId, black: PlayerId) -> PlayerId {
        let winner = sample_match(self.matrix, white, black, self.rng);
        self.log.push(MatchRecord::new(stage, white, black, winner));
        winner
    }

    pub(crate) fn n(&self) -> usize {
        self.matrix.n()
    }

    pub(crate) fn into_log(self) -> Vec<MatchRecord> {
        self.log
    }
}
