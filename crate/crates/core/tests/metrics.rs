use hybridcast::ensemble::{EnsembleConfig, EnsembleRun, MemberRun, Scheme};
use hybridcast::metrics::{
    ensemble_mean_rmse, fair_crps, metric_table, spread, spread_skill_ratio, ForecastCase, VerificationSet,
};
use hybridcast::rng::rng_from_seed;
use hybridcast::sphere::SphericalGrid;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn set<'a>(members: &'a [Vec<f64>], truth: &'a [f64], w: &'a [f64]) -> VerificationSet<'a> {
    VerificationSet::new(members.iter().map(Vec::as_slice).collect(), truth, w).unwrap()
}

#[test]
fn crps_prefers_the_true_distribution() {
    const N: usize = 10_000;
    const K: usize = 8;
    let mut rng = rng_from_seed(1);
    let truth: Vec<f64> = (0..N).map(|_| rng.sample(StandardNormal)).collect();
    let draws: Vec<Vec<f64>> = (0..K)
        .map(|_| (0..N).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let weights = vec![1.0; N];
    let score = |shift: f64| {
        let members: Vec<Vec<f64>> = draws.iter().map(|d| d.iter().map(|x| x + shift).collect()).collect();
        fair_crps(&set(&members, &truth, &weights)).unwrap()
    };
    let (right, shifted) = (score(0.0), score(1.0));
    assert!(right < shifted, "calibrated {right}, shifted {shifted}");
}

#[test]
fn spread_is_the_root_mean_two_pass_variance() {
    let mut rng = rng_from_seed(2);
    let members: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..12).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let truth = vec![0.0; 12];
    let w: Vec<f64> = (0..12).map(|i| 0.5 + (i % 4) as f64 * 0.25).collect();
    let mut num = 0.0;
    for i in 0..12 {
        let mean = members.iter().map(|m| m[i]).sum::<f64>() / 5.0;
        let var = members.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / 4.0;
        num += w[i] * var;
    }
    let expected = num / w.iter().sum::<f64>();
    let vs = set(&members, &truth, &w);
    assert!((spread(&vs).unwrap().powi(2) - expected).abs() < 1e-14);
}

#[test]
fn two_member_examples() {
    let members = vec![vec![0.0], vec![2.0]];
    let vs = set(&members, &[1.0], &[1.0]);
    assert!((spread(&vs).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    // Zero ensemble-mean error leaves the ratio undefined.
    assert!(spread_skill_ratio(&vs).is_err());
    let vs = set(&members, &[3.0], &[1.0]);
    let expected = (1.5f64).sqrt() * 2f64.sqrt() / 2.0;
    assert!((spread_skill_ratio(&vs).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn underdispersed_members_give_ssr_below_one() {
    const N: usize = 5_000;
    const K: usize = 10;
    let mut rng = rng_from_seed(3);
    let truth: Vec<f64> = (0..N).map(|_| rng.sample(StandardNormal)).collect();
    let members: Vec<Vec<f64>> = (0..K)
        .map(|_| (0..N).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let ssr = spread_skill_ratio(&set(&members, &truth, &vec![1.0; N])).unwrap();
    assert!(ssr < 1.0, "SSR {ssr}");
}

#[test]
fn identical_members_score_their_absolute_error() {
    let members = vec![vec![1.5, -2.0]; 4];
    let truth = [0.5, 1.0];
    let w = [1.0, 3.0];
    let crps = fair_crps(&set(&members, &truth, &w)).unwrap();
    assert!((crps - (1.0 + 3.0 * 3.0) / 4.0).abs() < 1e-12);
}

/// Rotate each latitude row of a row-major field by `shift` longitudes.
fn roll(values: &[f64], n_lon: usize, shift: usize) -> Vec<f64> {
    values
        .chunks(n_lon)
        .flat_map(|row| (0..n_lon).map(move |w| row[(w + shift) % n_lon]))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crps_never_exceeds_the_member_error(
        members in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 2..7),
        truth in prop::collection::vec(-5.0f64..5.0, 6),
        w in prop::collection::vec(0.1f64..2.0, 6),
    ) {
        let vs = set(&members, &truth, &w);
        let k = members.len() as f64;
        let err = (0..6)
            .map(|i| w[i] * members.iter().map(|m| (m[i] - truth[i]).abs()).sum::<f64>() / k)
            .sum::<f64>()
            / w.iter().sum::<f64>();
        prop_assert!(fair_crps(&vs).unwrap() <= err + 1e-12);
    }

    #[test]
    fn scores_ignore_member_order_and_longitude_rotation(
        members in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 16), 2..6),
        truth in prop::collection::vec(-5.0f64..5.0, 16),
        seed in 0u64..1000,
        shift in 0usize..8,
    ) {
        let grid = SphericalGrid::new(2, 8).unwrap();
        let w = grid.point_weights();
        let scores = |ms: &[Vec<f64>], t: &[f64]| {
            let vs = set(ms, t, &w);
            [ensemble_mean_rmse(&vs), fair_crps(&vs).unwrap(), spread(&vs).unwrap()]
        };
        let base = scores(&members, &truth);
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng_from_seed(seed));
        let rolled: Vec<Vec<f64>> = members.iter().map(|m| roll(m, 8, shift)).collect();
        for other in [scores(&shuffled, &truth), scores(&rolled, &roll(&truth, 8, shift))] {
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}

fn run(scheme: Scheme, members: &[f64]) -> EnsembleRun {
    EnsembleRun {
        config: EnsembleConfig {
            m: members.len(),
            p: 1,
            horizon: 2,
            mode: scheme,
        },
        master_seed: 0,
        members: members
            .iter()
            .enumerate()
            .map(|(i, &v)| MemberRun {
                theta_index: i,
                field_index: 0,
                theta_seed: 0,
                field_seed: 0,
                states: vec![vec![v; 8], vec![2.0 * v; 8]],
            })
            .collect(),
        failures: Vec::new(),
    }
}

#[test]
fn table_averages_squared_errors_before_the_root() {
    let grid = SphericalGrid::new(2, 4).unwrap();
    let vars = vec!["z".to_string()];
    let (a, b) = (run(Scheme::Deterministic, &[1.0]), run(Scheme::Deterministic, &[3.0]));
    let truth = vec![vec![0.0; 8], vec![0.0; 8]];
    let cases = [
        ForecastCase { run: &a, truth: &truth },
        ForecastCase { run: &b, truth: &truth },
    ];
    let table = metric_table(&cases, &vars, &grid, &[1], 6.0).unwrap();
    assert_eq!(table.len(), 1);
    let r = &table[0];
    assert!((r.rmse - 5f64.sqrt()).abs() < 1e-14);
    assert_eq!(r.mae, Some(2.0));
    assert_eq!((r.crps, r.spread, r.ssr), (None, None, None));
    assert_eq!((r.k, r.n_inits, r.lead_hours), (1, 2, 6.0));
    let names: Vec<String> = r.rows().into_iter().map(|row| row.metric).collect();
    assert_eq!(names, ["rmse", "mae"]);
}

#[test]
fn ensemble_rows_carry_every_score() {
    let grid = SphericalGrid::new(2, 4).unwrap();
    let vars = vec!["z".to_string()];
    let e = run(Scheme::Hybrid, &[0.0, 2.0]);
    let truth = vec![vec![3.0; 8], vec![0.0; 8]];
    let table = metric_table(&[ForecastCase { run: &e, truth: &truth }], &vars, &grid, &[1, 2], 6.0).unwrap();
    assert_eq!(table.iter().map(|r| r.lead_hours).collect::<Vec<_>>(), [6.0, 12.0]);
    let r = &table[0];
    assert!((r.rmse - 2.0).abs() < 1e-14);
    assert!((r.spread.unwrap() - 2f64.sqrt()).abs() < 1e-14);
    // (|0-3| + |2-3|)/2 - (2 + 2)/(2·2·1)
    assert!((r.crps.unwrap() - 1.0).abs() < 1e-14);
    let names: Vec<String> = r.rows().into_iter().map(|row| row.metric).collect();
    assert_eq!(names, ["rmse", "crps", "spread", "ssr"]);
    assert!(r
        .rows()
        .iter()
        .all(|row| row.scheme == "hybrid" && row.n_members == 2 && row.n_inits == 1));
}

#[test]
fn table_edge_cases() {
    let grid = SphericalGrid::new(2, 4).unwrap();
    let vars = vec!["z".to_string()];
    let e = run(Scheme::Hybrid, &[0.0, 2.0]);
    let truth = vec![vec![1.0; 8], vec![2.0; 8]];
    let cases = [ForecastCase { run: &e, truth: &truth }];
    assert!(metric_table(&cases, &vars, &grid, &[], 6.0).unwrap().is_empty());
    assert!(metric_table(&cases, &vars, &grid, &[3], 6.0).is_err());
    // Ensemble mean equals the truth at lead 1: zero skill leaves the ratio
    // out rather than reporting infinity.
    let table = metric_table(&cases, &vars, &grid, &[1], 6.0).unwrap();
    assert_eq!(table[0].rmse, 0.0);
    assert_eq!(table[0].ssr, None);
    assert!(table[0].rows().iter().all(|row| row.metric != "ssr"));
}
