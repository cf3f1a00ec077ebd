use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use tourneylab::engine::{replication_rng, Execution};
use tourneylab::formats::{process_bracket, run_draw_and_process};
use tourneylab::model::field;
use tourneylab::*;

fn skill(s: f64, n: usize) -> WinMatrix {
    skill_matrix(SkillModel::new(s).unwrap(), n).unwrap()
}

fn all_formats(n: usize) -> Vec<FormatSpec> {
    let mut specs: Vec<FormatSpec> = FormatKind::ALL
        .iter()
        .filter(|&&k| k != FormatKind::Swiss)
        .map(|&k| FormatSpec::new(k, n))
        .collect();
    specs.push(FormatSpec::swiss(n, 5));
    specs.push(FormatSpec::swiss(n, 14));
    specs
}

#[test]
fn every_format_emits_a_valid_permutation() {
    let m = skill(5.0, 32);
    for spec in all_formats(32) {
        for i in 0..200 {
            let mut rng = replication_rng(11, i);
            let r = run_format(&spec, &m, &mut rng).unwrap();
            assert!(validate_result(&r, 32), "{}", spec.label());
            assert_eq!(
                r.counted_matches,
                spec.counted_matches(),
                "{}",
                spec.label()
            );
        }
    }
}

#[test]
fn swiss_pairings_are_perfect_and_rematch_free() {
    let m = skill(5.0, 32);
    for rounds in [5, 14] {
        let spec = FormatSpec::swiss(32, rounds);
        for i in 0..1000 {
            let mut rng = replication_rng(12, i);
            let r = run_format(&spec, &m, &mut rng).unwrap();
            let mut met = HashSet::new();
            for round in 1..=rounds as u8 {
                let mut seen = HashSet::new();
                for x in r
                    .matches
                    .iter()
                    .filter(|x| x.stage == Stage::Swiss { round })
                {
                    assert!(seen.insert(x.white) && seen.insert(x.black));
                    assert!(
                        met.insert((x.white.min(x.black), x.white.max(x.black))),
                        "rematch"
                    );
                }
                assert_eq!(seen.len(), 32, "round {round} is not a perfect matching");
            }
        }
    }
}

#[test]
fn draw_and_process_separation_audit() {
    for n in [8usize, 16, 32] {
        let mut rng = replication_rng(13, n as u64);
        for _ in 0..50 {
            let draw = Bracket::random(&field(n), &mut rng);
            let process = process_bracket(&draw);
            let pos = |b: &Bracket, p: PlayerId| b.slots().iter().position(|&q| q == p).unwrap();
            let meet = |s: usize, t: usize| {
                (1..=n.trailing_zeros())
                    .find(|&r| s >> r == t >> r)
                    .unwrap()
            };
            for pair in draw.slots().chunks(2) {
                assert_eq!(
                    meet(pos(&process, pair[0]), pos(&process, pair[1])),
                    n.trailing_zeros()
                );
            }
            for quad in draw.slots().chunks(4) {
                for &a in &quad[..2] {
                    for &b in &quad[2..] {
                        assert!(meet(pos(&process, a), pos(&process, b)) >= n.trailing_zeros() - 1);
                    }
                }
            }
        }
    }
}

#[test]
fn standard_seeding_is_a_fixed_point_of_deterministic_play() {
    let m = WinMatrix::deterministic(32);
    let mut rng = replication_rng(14, 0);
    for kind in [
        FormatKind::RoundRobin,
        FormatKind::DoubleRoundRobin,
        FormatKind::Knockout,
        FormatKind::TripleKnockout,
        FormatKind::MultiStage8,
        FormatKind::MultiStage4,
        FormatKind::DoubleGroup,
    ] {
        let spec = FormatSpec::new(kind, 32).with_seeding(Seeding::Standard);
        let r = run_format(&spec, &m, &mut rng).unwrap();
        assert_eq!(r.ranking, ObservedRanking::identity(32), "{kind}");
    }
    // Round-robin needs no seeding at all.
    for kind in [FormatKind::RoundRobin, FormatKind::DoubleRoundRobin] {
        let r = run_format(&FormatSpec::new(kind, 32), &m, &mut rng).unwrap();
        assert_eq!(inversions(&r.ranking), 0);
    }
}

#[test]
fn deterministic_play_always_crowns_the_strongest() {
    let m = WinMatrix::deterministic(32);
    for spec in all_formats(32) {
        for i in 0..50 {
            let mut rng = replication_rng(15, i);
            let r = run_format(&spec, &m, &mut rng).unwrap();
            assert_eq!(
                r.ranking.as_slice()[0],
                PlayerId::new(1),
                "{}",
                spec.label()
            );
        }
    }
}

#[test]
fn draw_and_process_has_fixed_point_draws() {
    // A draw under which upset-free play merges into the true order.
    let draw = [
        1, 20, 27, 12, 26, 11, 30, 17, 24, 6, 21, 31, 7, 10, 16, 28, 19, 32, 9, 4, 18, 13, 8, 25,
        14, 5, 22, 23, 15, 29, 2, 3,
    ];
    let bracket = Bracket::new(draw.iter().map(|&r| PlayerId::new(r)).collect()).unwrap();
    let mut rng = replication_rng(16, 0);
    let r = run_draw_and_process(&WinMatrix::deterministic(32), &bracket, &mut rng);
    assert_eq!(r.ranking, ObservedRanking::identity(32));
}

#[test]
fn parallel_and_sequential_runs_are_identical() {
    let matrix = Arc::new(skill(5.0, 32));
    for spec in [
        FormatSpec::new(FormatKind::DrawAndProcess, 32),
        FormatSpec::swiss(32, 5),
    ] {
        let cfg = RunConfig::new(spec, matrix.clone(), 3000, 99);
        let par = run(&cfg.clone().with_execution(Execution::Parallel)).unwrap();
        let seq = run(&cfg.with_execution(Execution::Sequential)).unwrap();
        assert_eq!(par, seq);
    }
}

#[test]
fn equal_configs_give_equal_summaries_and_seeds_matter() {
    let matrix = Arc::new(skill(1.0, 16));
    let cfg = RunConfig::new(
        FormatSpec::new(FormatKind::MultiStage4, 16),
        matrix,
        2000,
        5,
    );
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    let mut other = cfg.clone();
    other.master_seed = 6;
    assert_ne!(run(&cfg).unwrap().metrics, run(&other).unwrap().metrics);
}

#[test]
fn summaries_are_internally_consistent() {
    let matrix = Arc::new(skill(5.0, 32));
    let s = run(&RunConfig::new(
        FormatSpec::new(FormatKind::Knockout, 32),
        matrix,
        5000,
        3,
    ))
    .unwrap();
    for m in &s.metrics {
        assert_eq!(m.histogram.total(), 5000);
        assert!(m.min <= m.mean && m.mean <= m.max);
    }
    for row in &s.place_counts {
        assert_eq!(row.iter().sum::<u64>(), 5000);
    }
    assert_eq!(s.counted_range, (80, 80));
}

#[test]
fn coin_flip_fields_are_symmetric() {
    // Every player's mean place is (n+1)/2. 32 players x 9 formats are
    // tested at once, so the bound is Bonferroni-adjusted to 4.5 SE.
    let matrix = Arc::new(WinMatrix::uniform(32));
    let reps = 4000u64;
    for spec in all_formats(32) {
        let s = run(&RunConfig::new(spec, matrix.clone(), reps as usize, 17)).unwrap();
        let sd = ((32.0f64 * 32.0 - 1.0) / 12.0).sqrt();
        for (i, row) in s.place_counts.iter().enumerate() {
            let mean = row
                .iter()
                .enumerate()
                .map(|(j, &c)| (j + 1) as f64 * c as f64)
                .sum::<f64>()
                / reps as f64;
            let z = (mean - 16.5) / (sd / (reps as f64).sqrt());
            assert!(
                z.abs() < 4.5,
                "{}: player {} mean place {mean}",
                spec.label(),
                i + 1
            );
        }
    }
}

#[test]
fn standard_error_shrinks_with_the_square_root_of_n() {
    // Spread of the mean over independent seeds at N and 4N.
    let matrix = Arc::new(skill(5.0, 8));
    let spec = FormatSpec::new(FormatKind::Knockout, 8);
    let spread = |reps: usize| {
        let means: Vec<f64> = (0..40)
            .map(|seed| {
                run(&RunConfig::new(spec, matrix.clone(), reps, seed))
                    .unwrap()
                    .mean(Metric::Inversions)
                    .unwrap()
            })
            .collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        (means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
    };
    let ratio = spread(500) / spread(2000);
    assert!((ratio - 2.0).abs() < 0.6, "ratio {ratio}");
}

#[test]
fn small_fields_agree_with_the_oracle() {
    for (spec, s) in [
        (FormatSpec::new(FormatKind::Knockout, 4), 5.0),
        (FormatSpec::new(FormatKind::TripleKnockout, 4), 10.0),
        (FormatSpec::new(FormatKind::RoundRobin, 5), 1.0),
        (FormatSpec::new(FormatKind::DoubleRoundRobin, 4), 5.0),
    ] {
        let matrix = skill(s, spec.n);
        let exact = enumerate(&spec, &matrix).unwrap();
        let summary = run(&RunConfig::new(spec, Arc::new(matrix), 40_000, 21)
            .with_metrics(MetricSet::standard(&[1, 2])))
        .unwrap();
        for metric in [
            Metric::Inversions,
            Metric::WeightedInversions,
            Metric::AvgRankTop(1),
            Metric::AvgRankTop(2),
        ] {
            let mean = exact.expected_metric(metric, LogBase::E);
            let se = (exact.variance(metric, LogBase::E) / 40_000.0).sqrt();
            let got = summary.mean(metric).unwrap();
            assert!(
                (got - mean).abs() <= 4.0 * se,
                "{} {metric}: {got} vs {mean}",
                spec.label()
            );
        }
        let marginals = exact.marginals();
        for (i, row) in summary.place_counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let p = marginals[i][j];
                let se = (p * (1.0 - p) / 40_000.0).sqrt().max(1e-9);
                assert!((c as f64 / 40_000.0 - p).abs() <= 4.5 * se + 1e-9);
            }
        }
    }
}

#[test]
fn dominance_of_a_run_against_itself_is_symmetric() {
    let matrix = Arc::new(skill(5.0, 16));
    let s = run(&RunConfig::new(
        FormatSpec::new(FormatKind::Knockout, 16),
        matrix,
        4000,
        8,
    ))
    .unwrap();
    let d = dominance(&s, &s, Metric::Inversions).unwrap();
    assert!((2.0 * d.p_strictly_less + d.p_tie - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_reports_swiss_match_counts() {
    let matrix = Arc::new(skill(5.0, 32));
    let configs: Vec<RunConfig> = (5..=14)
        .map(|r| {
            RunConfig::new(FormatSpec::swiss(32, r), matrix.clone(), 20, 1)
                .with_metrics(MetricSet::empty())
        })
        .collect();
    let rows = sweep(&configs).unwrap();
    let counts: Vec<usize> = rows.iter().map(|r| r.counted_matches).collect();
    assert_eq!(counts, (5..=14).map(|r| 16 * r).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r.cells.is_empty()));
    assert_eq!(rows[0].param, "5");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_seed_any_format_gives_a_permutation(seed: u64, idx in 0usize..10, s in 0.1f64..10.0) {
        let spec = all_formats(16)[idx.min(all_formats(16).len() - 1)];
        let m = skill(s, 16);
        let mut rng = replication_rng(seed, 0);
        let r = run_format(&spec, &m, &mut rng).unwrap();
        prop_assert!(validate_result(&r, 16));
        prop_assert_eq!(r.counted_matches, spec.counted_matches());
    }
}
