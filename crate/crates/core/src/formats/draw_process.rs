use rand::Rng;

use super::{bit_reverse, Bracket, FormatError, Referee};
use crate::model::{MatchRecord, ObservedRanking, PlayerId, Stage, TournamentResult};
use crate::prob::WinMatrix;

/// Process layout for a draw bracket: the player in draw slot `s` moves to
/// process slot `bitreverse(s)`.
///
/// Round-1 opponents in the draw differ in the lowest slot bit, which becomes
/// the highest bit, so they sit in opposite halves and can only meet in the
/// final. Round-2 opponents can meet no earlier than the semi-final.
pub fn process_bracket(draw: &Bracket) -> Bracket {
    let bits = draw.rounds();
    let slots = draw.slots();
    let mut process = slots.to_vec();
    for (s, &p) in slots.iter().enumerate() {
        process[bit_reverse(s, bits)] = p;
    }
    Bracket::new(process).expect("permuting a valid bracket keeps it valid")
}

/// Two placement knockouts over the same field, merged position by position.
pub fn run_draw_and_process<R: Rng + ?Sized>(
    m: &WinMatrix,
    draw: &Bracket,
    rng: &mut R,
) -> TournamentResult {
    let n = draw.len();
    let process = process_bracket(draw);
    let mut referee = Referee::new(m, rng, n * draw.rounds() as usize + n / 2);
    let draw_order = referee.placement_knockout(draw.slots(), 1, |round| Stage::Draw { round });
    let process_order =
        referee.placement_knockout(process.slots(), 1, |round| Stage::Process { round });
    let merged = referee.merge(&draw_order, &process_order);
    let ranking = ObservedRanking::new(merged).expect("merge ranks every player once");
    TournamentResult::new(ranking, referee.into_log())
}

/// Merges the draw and process rankings into one strict ranking, playing an
/// uncounted decider whenever both players at a position are still unranked.
pub fn merge_rankings<R: Rng + ?Sized>(
    draw: &ObservedRanking,
    process: &ObservedRanking,
    m: &WinMatrix,
    rng: &mut R,
) -> Result<(ObservedRanking, Vec<MatchRecord>), FormatError> {
    if draw.len() != process.len() || draw.len() > m.n() {
        return Err(FormatError::InvalidSpec(
            "rankings must cover the same field".into(),
        ));
    }
    let mut referee = Referee::new(m, rng, draw.len() / 2);
    let merged = referee.merge(draw.as_slice(), process.as_slice());
    let ranking =
        ObservedRanking::new(merged).map_err(|e| FormatError::InvalidSpec(e.to_string()))?;
    Ok((ranking, referee.into_log()))
}

impl<R: Rng + ?Sized> Referee<'_, R> {
    pub(crate) fn merge(&mut self, draw: &[PlayerId], process: &[PlayerId]) -> Vec<PlayerId> {
        let n = draw.len();
        let mut ranked = vec![false; self.n()];
        let mut merged = Vec::with_capacity(n);
        for (&a, &b) in draw.iter().zip(process) {
            if merged.len() == n {
                break;
            }
            if a == b {
                if !ranked[a.index()] {
                    ranked[a.index()] = true;
                    merged.push(a);
                }
                continue;
            }
            match (ranked[a.index()], ranked[b.index()]) {
                (true, true) => {}
                (true, false) => {
                    ranked[b.index()] = true;
                    merged.push(b);
                }
                (false, true) => {
                    ranked[a.index()] = true;
                    merged.push(a);
                }
                (false, false) => {
                    let winner = self.play(Stage::MergeTiebreak, a, b);
                    let loser = if winner == a { b } else { a };
                    ranked[a.index()] = true;
                    ranked[b.index()] = true;
                    merged.push(winner);
                    merged.push(loser);
                }
            }
        }
        merged
    }
}
