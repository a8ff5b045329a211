use pathinf::evaluate::{cross_validate, diff, grid, sweep, SweepOptions};
use pathinf::infer::PathGraph;
use pathinf::pipeline::PipelineConfig;
use pathinf::simulate::{random_dag, GroundTruthDag, SimulationConfig, WeightedEdge};
use pathinf::summarize::MissingnessPrior;
use pathinf::{Cell, ObservationMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(n: usize) -> Vec<String> {
    ObservationMatrix::default_labels(n)
}

fn random_graph(rng: &mut impl Rng, n: usize) -> PathGraph {
    let mut g = PathGraph::empty(labels(n));
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.3) {
                g.add_edge(a, b).unwrap();
            }
        }
    }
    g
}

#[test]
fn accounting_identity_and_relabel_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let max = n * (n - 1) / 2;
        let truth = random_dag(n, rng.random_range(1..=max), &mut rng).unwrap();
        let inferred = random_graph(&mut rng, n);
        let d = diff(&inferred, &truth).unwrap();
        assert_eq!(d.recovered + d.false_neg, d.true_edges);
        assert_eq!(d.recovered + d.false_pos, d.inferred_edges);
        assert!((0.0..=1.0).contains(&d.fn_rate) && d.fp_rate >= 0.0);

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let truth2 = GroundTruthDag::new(
            n,
            truth
                .edges()
                .iter()
                .map(|e| WeightedEdge { from: perm[e.from], to: perm[e.to], weight: e.weight })
                .collect(),
        )
        .unwrap();
        let inferred2 =
            PathGraph::from_edges(labels(n), inferred.edges().iter().map(|&(a, b)| (perm[a], perm[b])))
                .unwrap();
        assert_eq!(diff(&inferred2, &truth2).unwrap(), d);
    }
}

#[test]
fn perfect_recovery_scores_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let truth = random_dag(8, 12, &mut rng).unwrap();
    let g = PathGraph::from_edges(labels(8), truth.skeleton()).unwrap();
    let d = diff(&g, &truth).unwrap();
    assert_eq!((d.fp_rate, d.fn_rate), (0.0, 0.0));
}

fn two_state_data() -> ObservationMatrix {
    use Cell::{Negative as N, Positive as P};
    let mut rows = vec![vec![P, P, N]; 600];
    rows.extend(vec![vec![N, P, P]; 400]);
    ObservationMatrix::new(vec!["a".into(), "b".into(), "c".into()], rows).unwrap()
}

fn cfg() -> PipelineConfig {
    PipelineConfig::new(MissingnessPrior::new(0.1).unwrap())
}

#[test]
fn cross_validation_examples() {
    let obs = two_state_data();
    let report = cross_validate(&obs, 0.85, 100, &cfg(), 3).unwrap();
    assert_eq!(report.subsample_rows, 850);
    let full: Vec<_> = report.full_graph.edges().iter().copied().collect();
    assert_eq!(full, vec![(0, 1), (1, 2)]);
    assert_eq!(report.min_full_frequency(), Some(1.0));

    let report = cross_validate(&obs, 1.0, 5, &cfg(), 3).unwrap();
    assert!(report.edges.iter().filter(|e| e.in_full).all(|e| e.frequency == 1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noisy = ObservationMatrix::new(
        labels(4),
        (0..60)
            .map(|_| {
                (0..4)
                    .map(|_| match rng.random_range(0..3) {
                        0 => Cell::Negative,
                        1 => Cell::Positive,
                        _ => Cell::Missing,
                    })
                    .collect()
            })
            .collect(),
    )
    .unwrap();
    let report = cross_validate(&noisy, 0.5, 1, &cfg(), 9).unwrap();
    assert!(report.edges.iter().all(|e| e.frequency == 0.0 || e.frequency == 1.0));
    let sorted = report.edges.windows(2).all(|w| w[0].frequency >= w[1].frequency);
    assert!(sorted);

    assert!(cross_validate(&obs, 0.0, 5, &cfg(), 3).is_err());
    assert!(cross_validate(&obs, 0.5, 0, &cfg(), 3).is_err());
}

#[test]
fn cross_validation_is_reproducible() {
    let obs = two_state_data();
    let a = cross_validate(&obs, 0.5, 10, &cfg(), 11).unwrap();
    let b = pathinf::par::sequential(|| cross_validate(&obs, 0.5, 10, &cfg(), 11).unwrap());
    assert_eq!(a, b);
}

#[test]
fn sweep_is_reproducible() {
    let base = SimulationConfig { n_samples: 200, ..Default::default() };
    let cells = grid(&base, &[10, 15], &[0.1, 0.4]);
    assert_eq!(cells.len(), 4);
    let opts = SweepOptions { repeats: 2, ..Default::default() };
    let a = sweep(&cells, &opts, 5).unwrap();
    let b = sweep(&cells, &opts, 5).unwrap();
    let c = pathinf::par::sequential(|| sweep(&cells, &opts, 5).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a[1].n_edges, 10);
    assert_eq!(a[1].p_miss_pos, 0.4);
    for cell in &a {
        let mean = cell.runs.iter().map(|d| d.fn_rate).sum::<f64>() / 2.0;
        assert_eq!(mean, cell.mean_fn_rate);
    }

    let single = sweep(&cells[..1], &SweepOptions { repeats: 1, ..Default::default() }, 5).unwrap();
    assert_eq!(single[0].runs.len(), 1);
    assert_eq!(single[0].var_fn_rate, 0.0);
    assert!(sweep(&[], &opts, 5).is_err());
}
