use rand::seq::SliceRandom;
use rand::Rng;

use super::{Referee, TieRule};
use crate::model::{ObservedRanking, PlayerId, Stage, TournamentResult};
use crate::prob::WinMatrix;

/// Replays of an unchanged tie set before the rest is settled by lot.
///
/// A mini round-robin can reproduce the same tie forever when outcomes are
/// cyclic and deterministic; the cap guarantees termination.
pub const TIEBREAK_REPLAY_CAP: usize = 10;

/// Single or double round-robin over `players`, ties settled by recursive
/// mini round-robins among the tied players.
pub fn run_round_robin<R: Rng + ?Sized>(
    m: &WinMatrix,
    players: &[PlayerId],
    double: bool,
    tie_rule: TieRule,
    rng: &mut R,
) -> TournamentResult {
    let k = players.len();
    let legs = if double { 2 } else { 1 };
    let mut referee =
        Referee::new(m, rng, legs * k * k.saturating_sub(1) / 2 + 16).with_tie_rule(tie_rule);
    let mut order = players.to_vec();
    referee.rank_round_robin(&mut order, double, |leg| Stage::RoundRobin { leg });
    let ranking = ObservedRanking::new(order).expect("round-robin covers every player once");
    TournamentResult::new(ranking, referee.into_log())
}

impl<R: Rng + ?Sized> Referee<'_, R> {
    /// Plays a round-robin among `players` and reorders them into the final
    /// standing. Ties on wins are broken by mini round-robins that only count
    /// results inside the tied set.
    pub(crate) fn rank_round_robin(
        &mut self,
        players: &mut [PlayerId],
        double: bool,
        stage: impl Fn(u8) -> Stage,
    ) {
        let start = self.log.len();
        let wins = self.play_all_pairs(players, double, &stage);
        let table = match self.tie_rule {
            TieRule::Replay => None,
            TieRule::HeadToHead => Some(HeadToHead::from_log(&self.log[start..], self.n())),
        };
        self.sort_and_break_ties(players, &wins, double, table.as_ref());
    }

    /// Wins per position of `players`.
    fn play_all_pairs(
        &mut self,
        players: &[PlayerId],
        double: bool,
        stage: &impl Fn(u8) -> Stage,
    ) -> Vec<u32> {
        let k = players.len();
        let mut wins = vec![0u32; k];
        for leg in 1..=if double { 2u8 } else { 1 } {
            let st = stage(leg);
            for i in 0..k {
                for j in i + 1..k {
                    let (white, black) = if leg == 1 { (i, j) } else { (j, i) };
                    let w = self.play(st, players[white], players[black]);
                    wins[if w == players[white] { white } else { black }] += 1;
                }
            }
        }
        wins
    }

    fn sort_and_break_ties(
        &mut self,
        players: &mut [PlayerId],
        wins: &[u32],
        double: bool,
        table: Option<&HeadToHead>,
    ) {
        let mut keyed: Vec<(u32, PlayerId)> =
            wins.iter().copied().zip(players.iter().copied()).collect();
        keyed.sort_by_key(|k| std::cmp::Reverse(k.0));
        for (slot, (_, p)) in players.iter_mut().zip(&keyed) {
            *slot = *p;
        }
        let mut start = 0;
        while start < keyed.len() {
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == keyed[start].0 {
                end += 1;
            }
            if end - start > 1 {
                self.break_ties(&mut players[start..end], double, table);
            }
            start = end;
        }
    }

    fn break_ties(&mut self, tied: &mut [PlayerId], double: bool, table: Option<&HeadToHead>) {
        if let Some(table) = table {
            let wins: Vec<u32> = tied.iter().map(|&p| table.wins_against(p, tied)).collect();
            if wins.iter().any(|&w| w != wins[0]) {
                self.sort_and_break_ties(tied, &wins, double, Some(table));
                return;
            }
        }
        for _ in 0..TIEBREAK_REPLAY_CAP {
            let wins = self.play_all_pairs(tied, double, &|_| Stage::Tiebreak);
            if wins.iter().any(|&w| w != wins[0]) {
                self.sort_and_break_ties(tied, &wins, double, None);
                return;
            }
        }
        tied.shuffle(self.rng);
    }
}

/// Counted results inside one round-robin.
struct HeadToHead {
    n: usize,
    beats: Vec<u8>,
}

impl HeadToHead {
    fn from_log(log: &[crate::model::MatchRecord], n: usize) -> Self {
        let mut beats = vec![0u8; n * n];
        for m in log {
            beats[m.winner.index() * n + m.loser().index()] += 1;
        }
        Self { n, beats }
    }

    fn wins_against(&self, p: PlayerId, group: &[PlayerId]) -> u32 {
        group
            .iter()
            .map(|q| self.beats[p.index() * self.n + q.index()] as u32)
            .sum()
    }
}
