use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bracket, GroupDraw, Referee, Seeding, TieRule};
use crate::model::{field, ObservedRanking, PlayerId, Stage, TournamentResult};
use crate::prob::WinMatrix;

/// Double-group stage-2 composition: stage-2 group `j` takes its `q`-th
/// member from stage-1 group `STAGE_TWO_CROSSING[j][q]` at finishing
/// position `q`, i.e. {A1,B2,C3,D4}, {B1,A2,D3,C4}, {C1,D2,A3,B4},
/// {D1,C2,B3,A4}.
pub const STAGE_TWO_CROSSING: [[usize; 4]; 4] =
    [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];

/// Round-robin groups feeding an upper and a lower placement knockout.
///
/// The top half of every group plays for the upper places, the bottom half
/// for the lower ones.
pub fn run_multistage<R: Rng + ?Sized>(
    m: &WinMatrix,
    groups: usize,
    seeding: Seeding,
    draw: GroupDraw,
    tie_rule: TieRule,
    rng: &mut R,
) -> TournamentResult {
    let n = m.n();
    let spec_count =
        groups * (n / groups) * (n / groups - 1) / 2 + n * (n / 2).trailing_zeros() as usize / 2;
    let mut referee = Referee::new(m, rng, spec_count + 32).with_tie_rule(tie_rule);
    let mut dealt = deal_groups(&field(n), groups, seeding, referee.rng);
    for (g, group) in dealt.iter_mut().enumerate() {
        referee.rank_round_robin(group, false, |_| Stage::Group {
            phase: 1,
            group: g as u8,
        });
    }
    let half = n / groups / 2;
    let mut order = Vec::with_capacity(n);
    for tier in [0..half, half..2 * half] {
        let qualifiers: Vec<(PlayerId, usize)> = dealt
            .iter()
            .enumerate()
            .flat_map(|(g, group)| group[tier.clone()].iter().map(move |&p| (p, g)))
            .collect();
        let bracket = group_fed_bracket(&qualifiers, seeding, draw, referee.rng);
        order.extend(
            referee.placement_knockout(bracket.slots(), 1, |round| Stage::Knockout { round }),
        );
    }
    let ranking = ObservedRanking::new(order).expect("multi-stage places every player once");
    TournamentResult::new(ranking, referee.into_log())
}

/// Two round-robin group stages followed by four placement knockouts.
///
/// Stage 1 plays four groups of `n/4`. The top half of each group is crossed
/// into four stage-2 groups (see [`STAGE_TWO_CROSSING`]), the bottom half
/// likewise into four more. The top and bottom halves of the upper stage-2
/// groups play knockouts for places `1..n/4` and `n/4+1..n/2`, and the lower
/// stage-2 groups mirror this for the remaining places.
pub fn run_double_group<R: Rng + ?Sized>(
    m: &WinMatrix,
    seeding: Seeding,
    draw: GroupDraw,
    tie_rule: TieRule,
    rng: &mut R,
) -> TournamentResult {
    let n = m.n();
    let per_half = n / 8;
    assert!(
        (1..=4).contains(&per_half) && n == 8 * per_half,
        "double group needs 4 stage-1 groups whose halves fit the crossing"
    );
    let mut referee = Referee::new(m, rng, 256).with_tie_rule(tie_rule);
    let mut stage_one = deal_groups(&field(n), 4, seeding, referee.rng);
    for (g, group) in stage_one.iter_mut().enumerate() {
        referee.rank_round_robin(group, false, |_| Stage::Group {
            phase: 1,
            group: g as u8,
        });
    }

    let mut stage_two: Vec<Vec<PlayerId>> = Vec::with_capacity(8);
    for offset in [0, per_half] {
        for crossing in &STAGE_TWO_CROSSING {
            stage_two.push(
                (0..per_half)
                    .map(|q| stage_one[crossing[q]][offset + q])
                    .collect(),
            );
        }
    }
    for (g, group) in stage_two.iter_mut().enumerate() {
        referee.rank_round_robin(group, false, |_| Stage::Group {
            phase: 2,
            group: g as u8,
        });
    }

    let top = per_half / 2;
    let mut order = Vec::with_capacity(n);
    for tier in stage_two.chunks(4) {
        for range in [0..top, top..per_half] {
            let qualifiers: Vec<(PlayerId, usize)> = tier
                .iter()
                .enumerate()
                .flat_map(|(g, group)| group[range.clone()].iter().map(move |&p| (p, g)))
                .collect();
            let bracket = group_fed_bracket(&qualifiers, seeding, draw, referee.rng);
            order.extend(
                referee.placement_knockout(bracket.slots(), 1, |round| Stage::Knockout { round }),
            );
        }
    }
    let ranking = ObservedRanking::new(order).expect("double group places every player once");
    TournamentResult::new(ranking, referee.into_log())
}

/// Splits `players` into `groups` equal groups.
///
/// Standard seeding deals strength pots in serpentine order, so with
/// upset-free play the top half of every group is exactly the top half of
/// the field.
fn deal_groups<R: Rng + ?Sized>(
    players: &[PlayerId],
    groups: usize,
    seeding: Seeding,
    rng: &mut R,
) -> Vec<Vec<PlayerId>> {
    let size = players.len() / groups;
    let mut pool = players.to_vec();
    match seeding {
        Seeding::Random => {
            pool.shuffle(rng);
            pool.chunks(size).map(<[PlayerId]>::to_vec).collect()
        }
        Seeding::Standard => {
            pool.sort_unstable();
            let mut dealt = vec![Vec::with_capacity(size); groups];
            for (pot, chunk) in pool.chunks(groups).enumerate() {
                for (i, &p) in chunk.iter().enumerate() {
                    let g = if pot % 2 == 0 { i } else { groups - 1 - i };
                    dealt[g].push(p);
                }
            }
            dealt
        }
    }
}

/// Draws a knockout bracket for group qualifiers tagged with their group.
fn group_fed_bracket<R: Rng + ?Sized>(
    qualifiers: &[(PlayerId, usize)],
    seeding: Seeding,
    draw: GroupDraw,
    rng: &mut R,
) -> Bracket {
    let players: Vec<PlayerId> = qualifiers.iter().map(|q| q.0).collect();
    match (seeding, draw) {
        (Seeding::Standard, _) => Bracket::standard(&players),
        (Seeding::Random, GroupDraw::Unconstrained) => Bracket::random(&players, rng),
        (Seeding::Random, GroupDraw::Separated) => {
            let mut counts = std::collections::HashMap::new();
            for &(_, g) in qualifiers {
                *counts.entry(g).or_insert(0usize) += 1;
            }
            if counts.values().any(|&c| 2 * c > qualifiers.len()) {
                // No separated draw exists.
                return Bracket::random(&players, rng);
            }
            let mut slots = qualifiers.to_vec();
            loop {
                slots.shuffle(rng);
                if slots.chunks(2).all(|pair| pair[0].1 != pair[1].1) {
                    return Bracket::new(slots.into_iter().map(|q| q.0).collect())
                        .expect("qualifier sets are power-of-two sized");
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_result;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    /// Maps each player to its stage-1 group from the log.
    fn stage_groups(r: &TournamentResult, phase: u8) -> HashMap<PlayerId, u8> {
        let mut map = HashMap::new();
        for x in &r.matches {
            if let Stage::Group { phase: p, group } = x.stage {
                if p == phase {
                    map.insert(x.white, group);
                    map.insert(x.black, group);
                }
            }
        }
        map
    }

    #[test]
    fn multistage_counts() {
        let m = WinMatrix::uniform(32);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (groups, count) in [(8, 112), (4, 176)] {
            let r = run_multistage(
                &m,
                groups,
                Seeding::Random,
                GroupDraw::Separated,
                TieRule::Replay,
                &mut rng,
            );
            assert_eq!(r.counted_matches, count);
            assert!(validate_result(&r, 32));
        }
    }

    #[test]
    fn separated_draw_keeps_group_mates_apart_in_round_one() {
        let m = WinMatrix::uniform(32);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for groups in [4, 8] {
            for _ in 0..100 {
                let r = run_multistage(
                    &m,
                    groups,
                    Seeding::Random,
                    GroupDraw::Separated,
                    TieRule::Replay,
                    &mut rng,
                );
                let g = stage_groups(&r, 1);
                for x in r
                    .matches
                    .iter()
                    .filter(|x| x.stage == Stage::Knockout { round: 1 })
                {
                    assert_ne!(g[&x.white], g[&x.black]);
                }
            }
        }
    }

    #[test]
    fn deterministic_group_stage_sends_top_of_group_up() {
        // Upset-free groups: each group's top half finishes in the upper places.
        let m = WinMatrix::deterministic(32);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for groups in [4usize, 8] {
            for _ in 0..50 {
                let r = run_multistage(
                    &m,
                    groups,
                    Seeding::Random,
                    GroupDraw::Separated,
                    TieRule::Replay,
                    &mut rng,
                );
                let g = stage_groups(&r, 1);
                let upper = &r.ranking.as_slice()[..16];
                for &p in upper {
                    let stronger_mates = g.iter().filter(|(q, &gq)| gq == g[&p] && **q < p).count();
                    assert!(stronger_mates < 32 / groups / 2);
                }
            }
        }
    }

    #[test]
    fn standard_seeding_is_a_fixed_point_under_deterministic_play() {
        let m = WinMatrix::deterministic(32);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for groups in [4, 8] {
            let r = run_multistage(
                &m,
                groups,
                Seeding::Standard,
                GroupDraw::Separated,
                TieRule::Replay,
                &mut rng,
            );
            assert_eq!(r.ranking, ObservedRanking::identity(32));
        }
        let r = run_double_group(
            &m,
            Seeding::Standard,
            GroupDraw::Separated,
            TieRule::Replay,
            &mut rng,
        );
        assert_eq!(r.ranking, ObservedRanking::identity(32));
    }

    #[test]
    fn double_group_counts_and_per_player_load() {
        let m = WinMatrix::uniform(32);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let r = run_double_group(
                &m,
                Seeding::Random,
                GroupDraw::Separated,
                TieRule::Replay,
                &mut rng,
            );
            assert_eq!(r.counted_matches, 208);
            assert!(r.matches_per_player().iter().all(|&c| c == 13));
            assert!(validate_result(&r, 32));
        }
        let m16 = WinMatrix::uniform(16);
        let r = run_double_group(
            &m16,
            Seeding::Random,
            GroupDraw::Separated,
            TieRule::Replay,
            &mut rng,
        );
        assert_eq!(r.counted_matches, 4 * 6 + 8 + 4 * 4);
    }

    #[test]
    fn stage_two_groups_never_repeat_a_stage_one_group() {
        for crossing in &STAGE_TWO_CROSSING {
            let mut seen = *crossing;
            seen.sort();
            assert_eq!(seen, [0, 1, 2, 3]);
        }
        let m = WinMatrix::uniform(32);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let r = run_double_group(
                &m,
                Seeding::Random,
                GroupDraw::Separated,
                TieRule::Replay,
                &mut rng,
            );
            let first = stage_groups(&r, 1);
            let second = stage_groups(&r, 2);
            let mut members: HashMap<u8, Vec<u8>> = HashMap::new();
            for (p, g2) in &second {
                members.entry(*g2).or_default().push(first[p]);
            }
            assert_eq!(members.len(), 8);
            for (_, mut origins) in members {
                assert_eq!(origins.len(), 4);
                origins.sort();
                origins.dedup();
                assert_eq!(origins.len(), 4);
            }
        }
    }

    #[test]
    fn serpentine_deal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dealt = deal_groups(&field(16), 4, Seeding::Standard, &mut rng);
        let ranks: Vec<Vec<usize>> = dealt
            .iter()
            .map(|g| g.iter().map(|p| p.rank()).collect())
            .collect();
        assert_eq!(ranks[0], vec![1, 8, 9, 16]);
        assert_eq!(ranks[3], vec![4, 5, 12, 13]);
    }
}
