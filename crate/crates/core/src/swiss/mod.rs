//! Swiss-system engine.
//!
//! Each round orders the field by score (random order inside a score group)
//! and pairs greedily: the first unpaired player takes the earliest
//! compatible opponent that still leaves a perfect matching of the rest in
//! the no-rematch graph. Final standings use wins, then Buchholz, then
//! head-to-head results inside the tied group, then lot.

mod matching;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::formats::{FormatError, Seeding};
use crate::model::{MatchRecord, ObservedRanking, PlayerId, Stage, TournamentResult};
use crate::prob::{sample_match, WinMatrix};

pub(crate) use matching::has_perfect_matching;

/// Largest field the bitmask pairing supports.
pub const MAX_PLAYERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwissState {
    n: usize,
    round: usize,
    scores: Vec<u32>,
    /// `played[i]` has bit `j` set when players `i` and `j` have met.
    played: Vec<u64>,
    /// `beaten[i]` has bit `j` set when `i` beat `j`.
    beaten: Vec<u64>,
    history: Vec<MatchRecord>,
}

impl SwissState {
    pub fn new(n: usize) -> Self {
        assert!(
            n <= MAX_PLAYERS,
            "swiss supports at most {MAX_PLAYERS} players"
        );
        Self {
            n,
            round: 0,
            scores: vec![0; n],
            played: vec![0; n],
            beaten: vec![0; n],
            history: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn score(&self, p: PlayerId) -> u32 {
        self.scores[p.index()]
    }

    pub fn scores(&self) -> &[u32] {
        &self.scores
    }

    pub fn history(&self) -> &[MatchRecord] {
        &self.history
    }

    pub fn has_played(&self, a: PlayerId, b: PlayerId) -> bool {
        self.played[a.index()] >> b.index() & 1 == 1
    }

    /// Every pair that has met, smaller id first.
    pub fn played_pairs(&self) -> Vec<(PlayerId, PlayerId)> {
        let mut pairs = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.played[i] >> j & 1 == 1 {
                    pairs.push((PlayerId::from_index(i), PlayerId::from_index(j)));
                }
            }
        }
        pairs
    }

    /// Records a finished match.
    pub fn record(&mut self, rec: MatchRecord) {
        let (w, l) = (rec.winner.index(), rec.loser().index());
        debug_assert!(self.played[w] >> l & 1 == 0, "rematch");
        self.played[w] |= 1 << l;
        self.played[l] |= 1 << w;
        self.beaten[w] |= 1 << l;
        self.scores[w] += 1;
        self.history.push(rec);
    }

    /// Closes the current round.
    pub fn finish_round(&mut self) {
        self.round += 1;
    }

    /// Adjacency of the no-rematch compatibility graph.
    fn compatibility(&self) -> Vec<u64> {
        let all = full_mask(self.n);
        (0..self.n)
            .map(|i| all & !self.played[i] & !(1u64 << i))
            .collect()
    }

    /// Buchholz maintained from the adjacency bitmasks.
    pub fn buchholz(&self) -> BuchholzTable {
        let values = (0..self.n)
            .map(|i| {
                let mut opp = self.played[i];
                let mut sum = 0;
                while opp != 0 {
                    let j = opp.trailing_zeros() as usize;
                    opp &= opp - 1;
                    sum += self.scores[j];
                }
                sum
            })
            .collect();
        BuchholzTable { values }
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Sum of final opponent scores per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuchholzTable {
    values: Vec<u32>,
}

impl BuchholzTable {
    pub fn get(&self, p: PlayerId) -> u32 {
        self.values[p.index()]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Recomputes Buchholz from a match log and final scores (indexed by player
/// index).
pub fn buchholz(history: &[MatchRecord], scores: &[u32]) -> BuchholzTable {
    let mut values = vec![0; scores.len()];
    for m in history.iter().filter(|m| m.counted) {
        values[m.white.index()] += scores[m.black.index()];
        values[m.black.index()] += scores[m.white.index()];
    }
    BuchholzTable { values }
}

/// One round's pairing and the player order it was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SwissPairing {
    pub pairs: Vec<(PlayerId, PlayerId)>,
    pub order: Vec<PlayerId>,
}

/// Pairs the next round with a random order inside each score group.
pub fn pair_round<R: Rng + ?Sized>(
    state: &SwissState,
    rng: &mut R,
) -> Result<SwissPairing, FormatError> {
    let order = round_order(state, Seeding::Random, rng);
    let pairs = pair_in_order(state, &order)?;
    Ok(SwissPairing { pairs, order })
}

/// The pairing order for the next round: score descending, ties in random
/// order (or by id under standard seeding). Standard seeding opens by
/// interleaving the two halves of the field so round 1 pits `k` against
/// `k + n/2`.
pub fn round_order<R: Rng + ?Sized>(
    state: &SwissState,
    seeding: Seeding,
    rng: &mut R,
) -> Vec<PlayerId> {
    let n = state.n;
    let mut order: Vec<PlayerId> = (0..n).map(PlayerId::from_index).collect();
    match seeding {
        Seeding::Random => order.shuffle(rng),
        Seeding::Standard if state.round == 0 => {
            order = (0..n / 2)
                .flat_map(|k| [PlayerId::from_index(k), PlayerId::from_index(k + n / 2)])
                .collect();
        }
        Seeding::Standard => {}
    }
    order.sort_by_key(|&p| std::cmp::Reverse(state.score(p)));
    order
}

/// The normative greedy pairing for a fixed player order.
///
/// Walks `order`; each unpaired player is matched with the earliest unpaired
/// compatible opponent whose removal keeps the remaining players perfectly
/// matchable without rematches.
pub fn pair_in_order(
    state: &SwissState,
    order: &[PlayerId],
) -> Result<Vec<(PlayerId, PlayerId)>, FormatError> {
    let unpairable = FormatError::Unpairable {
        round: state.round + 1,
    };
    let adj = state.compatibility();
    let mut unpaired = full_mask(state.n);
    if !has_perfect_matching(&adj, unpaired) {
        return Err(unpairable);
    }
    let mut pairs = Vec::with_capacity(state.n / 2);
    for &p in order {
        let pi = p.index();
        if unpaired >> pi & 1 == 0 {
            continue;
        }
        unpaired &= !(1u64 << pi);
        let partner = order.iter().find(|q| {
            let qi = q.index();
            unpaired >> qi & 1 == 1
                && adj[pi] >> qi & 1 == 1
                && has_perfect_matching(&adj, unpaired & !(1u64 << qi))
        });
        let q = *partner.ok_or_else(|| unpairable.clone())?;
        unpaired &= !(1u64 << q.index());
        pairs.push((p, q));
    }
    Ok(pairs)
}

/// Plays a Swiss-system tournament of `rounds` rounds over `1..=n`.
pub fn run_swiss<R: Rng + ?Sized>(
    m: &WinMatrix,
    n: usize,
    rounds: usize,
    seeding: Seeding,
    rng: &mut R,
) -> Result<TournamentResult, FormatError> {
    if n > MAX_PLAYERS || n % 2 == 1 || m.n() != n {
        return Err(FormatError::InvalidSpec(format!(
            "swiss needs an even field of at most {MAX_PLAYERS} matching the matrix"
        )));
    }
    let mut state = SwissState::new(n);
    for round in 1..=rounds {
        let order = round_order(&state, seeding, rng);
        let pairs = pair_in_order(&state, &order)?;
        for (white, black) in pairs {
            let winner = sample_match(m, white, black, rng);
            state.record(MatchRecord::new(
                Stage::Swiss { round: round as u8 },
                white,
                black,
                winner,
            ));
        }
        state.finish_round();
    }
    let ranking = final_standings(&state, rng);
    Ok(TournamentResult::new(ranking, state.history))
}

/// Orders by (wins, Buchholz); remaining ties by head-to-head wins inside the
/// tied group, then by lot.
pub fn final_standings<R: Rng + ?Sized>(state: &SwissState, rng: &mut R) -> ObservedRanking {
    let bh = state.buchholz();
    let mut order: Vec<PlayerId> = (0..state.n).map(PlayerId::from_index).collect();
    let key = |p: &PlayerId| (state.score(*p), bh.get(*p));
    order.sort_by_key(|p| std::cmp::Reverse(key(p)));
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && key(&order[end]) == key(&order[start]) {
            end += 1;
        }
        if end - start > 1 {
            let group = &mut order[start..end];
            let members = group.iter().fold(0u64, |acc, p| acc | 1 << p.index());
            group.shuffle(rng);
            group.sort_by_key(|p| {
                std::cmp::Reverse((state.beaten[p.index()] & members).count_ones())
            });
        }
        start = end;
    }
    ObservedRanking::new(order).expect("standings cover every player once")
}
