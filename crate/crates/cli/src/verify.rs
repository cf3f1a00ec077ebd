use std::sync::Arc;

use tourneylab::*;

use crate::output::VerifyRow;

/// Counted matches at n = 32, written out independently of the formats.
const MATCH_COUNTS: [(&str, usize); 8] = [
    ("rr", 496),
    ("drr", 992),
    ("ko", 80),
    ("ko3", 240),
    ("dp", 160),
    ("ms8", 112),
    ("ms4", 176),
    ("dg", 208),
];

fn match_count_checks(reps: usize, seed: u64) -> Vec<VerifyRow> {
    let matrix = Arc::new(skill_matrix(SkillModel::new(5.0).unwrap(), 32).unwrap());
    let mut specs: Vec<(FormatSpec, usize)> = MATCH_COUNTS
        .iter()
        .map(|&(code, count)| (FormatSpec::new(code.parse().unwrap(), 32), count))
        .collect();
    specs.extend((5..=14).map(|r| (FormatSpec::swiss(32, r), 16 * r)));
    specs
        .into_iter()
        .map(|(spec, want)| {
            let s =
                run(&RunConfig::new(spec, matrix.clone(), reps, seed)
                    .with_metrics(MetricSet::empty()));
            let (lo, hi) = s.map(|s| s.counted_range).unwrap_or((0, 0));
            VerifyRow {
                check: format!("matches/{}", spec.label()),
                expected: want as f64,
                observed: if lo == hi { lo as f64 } else { f64::NAN },
                z: 0.0,
                pass: lo == want && hi == want,
            }
        })
        .collect()
}

fn oracle_checks(reps: usize, seed: u64, sigmas: f64) -> Vec<VerifyRow> {
    let mut rows = Vec::new();
    let specs = [
        FormatSpec::new(FormatKind::Knockout, 4),
        FormatSpec::new(FormatKind::RoundRobin, 4),
        FormatSpec::new(FormatKind::Knockout, 8),
    ];
    for spec in specs {
        for skill in [0.0, 1.0, 5.0, 10.0] {
            let m = if skill == 0.0 {
                WinMatrix::uniform(spec.n)
            } else {
                skill_matrix(SkillModel::new(skill).unwrap(), spec.n).unwrap()
            };
            let exact = enumerate(&spec, &m).expect("small fields are enumerable");
            let summary = run(&RunConfig::new(spec, Arc::new(m), reps, seed)
                .with_metrics(MetricSet::standard(&[1])))
            .expect("valid configuration");
            for metric in [Metric::Inversions, Metric::AvgRankTop(1)] {
                let expected = exact.expected_metric(metric, LogBase::E);
                let se = (exact.variance(metric, LogBase::E) / reps as f64).sqrt();
                let observed = summary.mean(metric).unwrap();
                let z = if se > 0.0 {
                    (observed - expected) / se
                } else {
                    0.0
                };
                let model = if skill == 0.0 {
                    "coin".to_string()
                } else {
                    format!("skill{skill}")
                };
                rows.push(VerifyRow {
                    check: format!("oracle/{}{}/{model}/{metric}", spec.label(), spec.n),
                    expected,
                    observed,
                    z,
                    pass: if se > 0.0 {
                        z.abs() <= sigmas
                    } else {
                        observed == expected
                    },
                });
            }
        }
    }
    rows
}

pub fn verify(reps: usize, seed: u64, sigmas: f64) -> Vec<VerifyRow> {
    let mut rows = match_count_checks(reps.min(10_000), seed);
    rows.extend(oracle_checks(reps, seed, sigmas));
    rows
}
