use rand::Rng;

use super::{Bracket, Referee};
use crate::model::{ObservedRanking, PlayerId, Stage, TournamentResult};
use crate::prob::WinMatrix;

/// Full placement knockout: every round, winners and losers of each
/// sub-bracket split into two sub-brackets that keep their bracket order, the
/// winners' side ranking above the losers' side. Each player plays
/// `log2(n)` matches.
pub fn run_placement_knockout<R: Rng + ?Sized>(
    m: &WinMatrix,
    bracket: &Bracket,
    rng: &mut R,
) -> TournamentResult {
    run_best_of(m, bracket, 1, rng)
}

/// Placement knockout where every pairing is a best-of-three. All three
/// matches are played even after a 2-0 start.
pub fn run_triple_knockout<R: Rng + ?Sized>(
    m: &WinMatrix,
    bracket: &Bracket,
    rng: &mut R,
) -> TournamentResult {
    run_best_of(m, bracket, 3, rng)
}

fn run_best_of<R: Rng + ?Sized>(
    m: &WinMatrix,
    bracket: &Bracket,
    games: u32,
    rng: &mut R,
) -> TournamentResult {
    let n = bracket.len();
    let mut referee = Referee::new(m, rng, games as usize * n * bracket.rounds() as usize / 2);
    let order =
        referee.placement_knockout(bracket.slots(), games, |round| Stage::Knockout { round });
    let ranking = ObservedRanking::new(order).expect("knockout places every player once");
    TournamentResult::new(ranking, referee.into_log())
}

impl<R: Rng + ?Sized> Referee<'_, R> {
    /// Returns the placement order of `slots` (a power-of-two bracket).
    pub(crate) fn placement_knockout(
        &mut self,
        slots: &[PlayerId],
        games: u32,
        stage: impl Fn(u8) -> Stage,
    ) -> Vec<PlayerId> {
        let mut order = slots.to_vec();
        let mut scratch = Vec::with_capacity(order.len());
        let mut block = order.len();
        let mut round = 1u8;
        while block >= 2 {
            let st = stage(round);
            for sub in order.chunks_mut(block) {
                scratch.clear();
                let half = block / 2;
                scratch.resize(block, sub[0]);
                for (k, pair) in sub.chunks(2).enumerate() {
                    let (w, l) = self.best_of(st, pair[0], pair[1], games);
                    scratch[k] = w;
                    scratch[half + k] = l;
                }
                sub.copy_from_slice(&scratch);
            }
            block /= 2;
            round += 1;
        }
        order
    }

    /// Plays all `games` and returns (winner, loser) by majority.
    fn best_of(
        &mut self,
        stage: Stage,
        a: PlayerId,
        b: PlayerId,
        games: u32,
    ) -> (PlayerId, PlayerId) {
        let a_wins = (0..games).filter(|_| self.play(stage, a, b) == a).count() as u32;
        if 2 * a_wins > games {
            (a, b)
        } else {
            (b, a)
        }
    }
}
