use pathinf::summarize::{
    enumerate_candidates, fit, gradient, objective, project_simplex, prune, row_likelihood, Init,
    LikelihoodTable, MissingnessPrior, SolverOptions, SummaryDistribution,
};
use pathinf::{Cell, Error, ObservationMatrix, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Cell::{Missing as M, Negative as N, Positive as P};

fn matrix(rows: Vec<Vec<Cell>>) -> ObservationMatrix {
    let n = rows[0].len();
    ObservationMatrix::new(ObservationMatrix::default_labels(n), rows).unwrap()
}

fn random_cell(rng: &mut impl Rng, p_missing: f64) -> Cell {
    if rng.random_bool(p_missing) {
        M
    } else {
        Cell::from_bool(rng.random_bool(0.5))
    }
}

/// Per-entry product straight from the model description.
fn naive_likelihood(row: &[Cell], bits: &[bool], p_pos: f64, p_neg: f64) -> f64 {
    row.iter()
        .zip(bits)
        .map(|(c, &b)| match (c, b) {
            (P, true) => 1.0 - p_pos,
            (M, true) => p_pos,
            (N, false) => 1.0 - p_neg,
            (M, false) => p_neg,
            _ => 0.0,
        })
        .product()
}

fn bools(state: &State) -> Vec<bool> {
    (0..state.width()).map(|k| state.get(k)).collect()
}

/// Threshold `tau` found by bisection on `sum max(v - tau, 0) = 1`.
fn bisection_projection(v: &[f64]) -> Vec<f64> {
    let mass = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>();
    let hi0 = v.iter().cloned().fold(f64::MIN, f64::max);
    let (mut lo, mut hi) = (hi0 - 1.0 - 1e-9, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).max(0.0)).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn random_simplex_point(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_lands_on_simplex_and_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let p = project_simplex(&v).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let again = project_simplex(&p).unwrap();
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_matches_bisection(v in prop::collection::vec(-3.0f64..3.0, 1..10)) {
        let p = project_simplex(&v).unwrap();
        let oracle = bisection_projection(&v);
        for (a, b) in p.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-9, "{:?} vs {:?}", p, oracle);
        }
    }
}

#[test]
fn projection_beats_random_simplex_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let k = rng.random_range(1..8);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = project_simplex(&v).unwrap();
        let best = dist2(&p, &v);
        for _ in 0..1000 {
            let z = random_simplex_point(&mut rng, k);
            assert!(best <= dist2(&z, &v) + 1e-12);
        }
    }
}

#[test]
fn projection_examples() {
    assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    let third = project_simplex(&[0.5, 0.5, 0.5]).unwrap();
    assert!(third.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    assert!(matches!(project_simplex(&[]), Err(Error::Dimension(_))));
}

#[test]
fn likelihood_matches_per_entry_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let n = rng.random_range(1..7);
        let p_pos = rng.random_range(0.01..0.49);
        let p_neg = rng.random_range(0.05..0.95);
        let prior = MissingnessPrior::with_negative(p_pos, p_neg).unwrap();
        let row: Vec<Cell> = (0..n).map(|_| random_cell(&mut rng, 0.4)).collect();
        let state = State::from_bits(rng.random_range(0..1u64 << n), n).unwrap();
        let got = row_likelihood(&row, &state, &prior).unwrap();
        let want = naive_likelihood(&row, &bools(&state), p_pos, p_neg);
        assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "{got} vs {want}");
    }
}

/// Every observation pattern over {0, 1, NA}^n, in a fixed order.
fn all_patterns(n: usize) -> Vec<Vec<Cell>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|r: Vec<Cell>| {
                [N, P, M].into_iter().map(move |c| {
                    let mut r = r.clone();
                    r.push(c);
                    r
                })
            })
            .collect();
    }
    out
}

#[test]
fn likelihood_normalizes_over_observation_patterns() {
    for n in 1..=4 {
        for &(pp, pn) in &[(0.1, 0.5), (0.25, 0.5), (0.4, 0.5), (0.3, 0.2), (0.05, 0.9)] {
            let prior = MissingnessPrior::with_negative(pp, pn).unwrap();
            for bits in 0..1u64 << n {
                let state = State::from_bits(bits, n).unwrap();
                let total: f64 = all_patterns(n)
                    .iter()
                    .map(|o| row_likelihood(o, &state, &prior).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "n={n} state={state} total={total}");
            }
        }
    }
}

#[test]
fn sum_over_states_for_all_missing_row_is_not_one() {
    // The per-state model normalizes over observations, not over states:
    // for an all-missing row the state sum is (0.5 + p)^n.
    for n in 1..=4 {
        for &p in &[0.1, 0.25, 0.4] {
            let prior = MissingnessPrior::new(p).unwrap();
            let row = vec![M; n];
            let total: f64 = (0..1u64 << n)
                .map(|b| row_likelihood(&row, &State::from_bits(b, n).unwrap(), &prior).unwrap())
                .sum();
            assert!((total - (0.5f64 + p).powi(n as i32)).abs() < 1e-12);
        }
    }
}

#[test]
fn non_conforming_pairs_have_zero_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let prior = MissingnessPrior::new(0.2).unwrap();
    for _ in 0..500 {
        let n = rng.random_range(1..6);
        let row: Vec<Cell> = (0..n).map(|_| random_cell(&mut rng, 0.3)).collect();
        let state = State::from_bits(rng.random_range(0..1u64 << n), n).unwrap();
        let conforming = row.iter().zip(bools(&state)).all(|(c, b)| match c {
            M => true,
            c => *c == Cell::from_bool(b),
        });
        let l = row_likelihood(&row, &state, &prior).unwrap();
        assert_eq!(l > 0.0, conforming);
    }
}

fn random_instance(rng: &mut impl Rng) -> (ObservationMatrix, MissingnessPrior) {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=20);
    let rows = (0..m)
        .map(|_| (0..n).map(|_| random_cell(rng, 0.4)).collect())
        .collect();
    let prior = MissingnessPrior::with_negative(
        rng.random_range(0.05..0.45),
        rng.random_range(0.2..0.8),
    )
    .unwrap();
    (matrix(rows), prior)
}

fn naive_objective(obs: &ObservationMatrix, states: &[State], probs: &[f64], prior: &MissingnessPrior) -> f64 {
    obs.rows()
        .iter()
        .map(|row| {
            let p: f64 = states
                .iter()
                .zip(probs)
                .map(|(s, w)| w * naive_likelihood(row, &bools(s), prior.p_miss_pos(), prior.p_miss_neg()))
                .sum();
            -p.max(1e-300).ln()
        })
        .sum()
}

#[test]
fn objective_matches_naive_sum_and_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 1e-6;
    for _ in 0..100 {
        let (obs, prior) = random_instance(&mut rng);
        let cand = enumerate_candidates(&obs, 1 << 20).unwrap();
        let table = LikelihoodTable::new(&obs, &cand, &prior).unwrap();
        let k = cand.len();
        // Interior point: every coordinate at least 0.2 / k.
        let probs: Vec<f64> = random_simplex_point(&mut rng, k)
            .into_iter()
            .map(|x| 0.8 * x + 0.2 / k as f64)
            .collect();
        let f = table.objective(&probs).unwrap();
        let naive = naive_objective(&obs, cand.states(), &probs, &prior);
        assert!((f - naive).abs() <= 1e-10 * naive.abs().max(1.0));

        let g = table.gradient(&probs).unwrap();
        for j in 0..k {
            let mut up = probs.clone();
            let mut down = probs.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (table.objective(&up).unwrap() - table.objective(&down).unwrap()) / (2.0 * h);
            let scale = g[j].abs().max(fd.abs());
            assert!(scale == 0.0 || (g[j] - fd).abs() / scale <= 1e-5, "g={} fd={}", g[j], fd);
        }
    }
}

#[test]
fn objective_and_gradient_examples() {
    let prior = MissingnessPrior::new(0.4).unwrap();
    // Single row, two candidates.
    let obs = matrix(vec![vec![P, M]]);
    let cand = enumerate_candidates(&obs, 16).unwrap();
    let l: Vec<f64> = cand
        .states()
        .iter()
        .map(|s| row_likelihood(&obs.rows()[0], s, &prior).unwrap())
        .collect();
    let dist = SummaryDistribution {
        labels: obs.labels().to_vec(),
        candidates: cand,
        probs: vec![0.5, 0.5],
        objective: 0.0,
        iterations: 0,
        converged: false,
        history: vec![],
    };
    let g = gradient(&dist, &obs, &prior).unwrap();
    let denom = 0.5 * l[0] + 0.5 * l[1];
    assert!((g[0] + l[0] / denom).abs() < 1e-12);
    assert!((g[1] + l[1] / denom).abs() < 1e-12);
    let f = objective(&dist, &obs, &prior).unwrap();
    assert!((f + denom.ln()).abs() < 1e-12);
}

#[test]
fn two_row_objective_example() {
    let f: f64 = -(0.3f64.ln()) - 0.25f64.ln();
    assert!((f - 2.5903).abs() < 1e-4);
    let prior = MissingnessPrior::new(0.4).unwrap();
    let states = [State::parse("10").unwrap(), State::parse("00").unwrap()];
    // Point masses reproduce the two factors exactly.
    let one = naive_objective(&matrix(vec![vec![P, M]]), &states[..1], &[1.0], &prior);
    let two = naive_objective(&matrix(vec![vec![M, M]]), &states[1..], &[1.0], &prior);
    assert!((one + two - f).abs() < 1e-12);
}

#[test]
fn fit_recovers_empirical_frequencies_on_complete_data() {
    let mut rows = vec![vec![P, N]; 7];
    rows.extend(vec![vec![N, P]; 3]);
    let obs = matrix(rows);
    let dist = fit(&obs, &MissingnessPrior::new(0.2).unwrap(), &SolverOptions::default()).unwrap();
    let sm = prune(&dist, 1e-6).unwrap();
    let get = |s: &str| {
        let st = State::parse(s).unwrap();
        sm.iter().find(|(x, _)| **x == st).map(|(_, p)| p).unwrap()
    };
    assert!((get("10") - 0.7).abs() < 1e-4);
    assert!((get("01") - 0.3).abs() < 1e-4);
}

#[test]
fn single_candidate_fits_to_one() {
    let obs = matrix(vec![vec![P, N, P]; 4]);
    let dist = fit(&obs, &MissingnessPrior::new(0.3).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(dist.probs, vec![1.0]);
    assert!(dist.converged);
}

#[test]
fn fit_is_monotone_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for i in 0..30 {
        let (obs, prior) = random_instance(&mut rng);
        let opts = SolverOptions {
            init: if i % 2 == 0 { Init::Uniform } else { Init::Random },
            seed: i,
            ..Default::default()
        };
        let a = fit(&obs, &prior, &opts).unwrap();
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.objective <= a.history[0]);
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let b = fit(&obs, &prior, &opts).unwrap();
        assert_eq!(a, b);
        let serial = pathinf::par::sequential(|| fit(&obs, &prior, &opts).unwrap());
        assert_eq!(a, serial);
    }
}

/// Minimum of `table` over the simplex grid with step `1 / steps`.
pub fn grid_minimum(table: &LikelihoodTable, k: usize, steps: usize) -> f64 {
    fn rec(table: &LikelihoodTable, point: &mut Vec<f64>, left: usize, k: usize, steps: usize, best: &mut f64) {
        if point.len() == k - 1 {
            point.push(left as f64 / steps as f64);
            *best = best.min(table.objective(point).unwrap());
            point.pop();
            return;
        }
        for a in 0..=left {
            point.push(a as f64 / steps as f64);
            rec(table, point, left - a, k, steps, best);
            point.pop();
        }
    }
    let mut best = f64::INFINITY;
    rec(table, &mut Vec::with_capacity(k), steps, k, steps, &mut best);
    best
}

#[test]
fn fit_matches_grid_search_on_small_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut done = 0;
    while done < 10 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=6);
        let rows: Vec<Vec<Cell>> = (0..m)
            .map(|_| (0..n).map(|_| random_cell(&mut rng, 0.3)).collect())
            .collect();
        let obs = matrix(rows);
        let cand = enumerate_candidates(&obs, 1 << 10).unwrap();
        if cand.len() > 4 {
            continue;
        }
        let prior = MissingnessPrior::new(rng.random_range(0.05..0.45)).unwrap();
        let table = LikelihoodTable::new(&obs, &cand, &prior).unwrap();
        let dist = fit(&obs, &prior, &SolverOptions::default()).unwrap();
        let grid = grid_minimum(&table, cand.len(), 100);
        assert!((dist.objective - grid).abs() <= 1e-3, "fit {} grid {}", dist.objective, grid);
        done += 1;
    }
}

#[test]
fn dominated_superset_state_is_pruned() {
    // 1010 and 1011 conform to every row; 1011 pays an extra missing positive.
    let obs = matrix(vec![
        vec![P, N, P, M],
        vec![P, M, P, M],
        vec![P, N, M, M],
        vec![M, N, P, M],
    ]);
    let prior = MissingnessPrior::new(0.2).unwrap();
    let dist = fit(&obs, &prior, &SolverOptions::default()).unwrap();
    let sm = prune(&dist, 1e-6).unwrap();
    let a = State::parse("1010").unwrap();
    let b = State::parse("1011").unwrap();
    let pa = sm.iter().find(|(s, _)| **s == a).map(|(_, p)| p).unwrap_or(0.0);
    assert!(pa >= 0.999, "P(1010) = {pa}");
    assert!(sm.iter().all(|(s, _)| *s != b));
}

/// Distribution over the four 2-bit states, padded with zeros.
fn dist_with(probs: Vec<f64>) -> SummaryDistribution {
    let obs = matrix(vec![vec![M, M]]);
    let cand = enumerate_candidates(&obs, 16).unwrap();
    let mut full = probs;
    full.resize(cand.len(), 0.0);
    SummaryDistribution {
        labels: obs.labels().to_vec(),
        candidates: cand,
        probs: full,
        objective: 0.0,
        iterations: 0,
        converged: true,
        history: vec![],
    }
}

#[test]
fn prune_examples() {
    let sm = prune(&dist_with(vec![0.7, 0.3, 0.0]), 1e-6).unwrap();
    assert_eq!(sm.probs(), &[0.7, 0.3]);

    let sm = prune(&dist_with(vec![0.6999, 0.2999, 0.0002]), 1e-3).unwrap();
    assert_eq!(sm.len(), 2);
    assert!((sm.probs()[0] - 0.6999 / 0.9998).abs() < 1e-12);
    // 0.6999 / 0.9998 = 0.700040..., 0.2999 / 0.9998 = 0.299960...
    assert!((sm.probs()[0] - 0.70004).abs() < 1e-5);
    assert!((sm.probs()[1] - 0.29996).abs() < 1e-5);

    let sm = prune(&dist_with(vec![1.0]), 0.999).unwrap();
    assert_eq!(sm.probs(), &[1.0]);

    assert!(matches!(prune(&dist_with(vec![0.25; 4]), 0.5), Err(Error::Degenerate(_))));
    assert!(matches!(prune(&dist_with(vec![1.0]), 1.0), Err(Error::Config(_))));
}

#[test]
fn all_missing_column_never_turns_positive_without_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<Cell>> = (0..40)
        .map(|_| vec![Cell::from_bool(rng.random_bool(0.5)), Cell::from_bool(rng.random_bool(0.5)), M])
        .collect();
    let obs = matrix(rows);
    let dist = fit(&obs, &MissingnessPrior::new(0.2).unwrap(), &SolverOptions::default()).unwrap();
    let sm = prune(&dist, 1e-6).unwrap();
    // A positive in the unobserved column costs a factor p < 0.5 per row.
    assert!(sm.states().iter().all(|s| !s.get(2)));
}
