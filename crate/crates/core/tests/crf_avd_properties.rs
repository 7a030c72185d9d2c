use emotrans_core::avd::{self, TransferMode};
use emotrans_core::crf::{self, TransitionModel};
use emotrans_core::oracle;
use emotrans_core::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = (Matrix, TransitionModel)> {
    (1usize..=6, 1usize..=4, any::<u64>()).prop_map(|(len, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        oracle::random_instance(len, n, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_matches_enumeration((s, tm) in instance()) {
        let truth = oracle::enumerate(&s, &tm);
        let z = crf::log_partition(&s, &tm).unwrap();
        prop_assert!((z - truth.log_partition).abs() <= 1e-8);
    }

    #[test]
    fn marginals_match_enumeration_and_normalize((s, tm) in instance()) {
        let truth = oracle::enumerate(&s, &tm);
        let m = crf::marginals(&s, &tm).unwrap();
        for (a, b) in m.as_slice().iter().zip(truth.marginals.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        for row in m.iter_rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn partition_dominates_every_sequence((s, tm) in instance()) {
        let z = crf::log_partition(&s, &tm).unwrap();
        for y in oracle::all_sequences(s.rows(), s.cols()) {
            prop_assert!(z >= crf::sequence_score(&s, &tm, &y).unwrap() - 1e-12);
        }
    }

    #[test]
    fn nll_is_non_negative_and_zero_only_for_one_label((s, tm) in instance(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold: Vec<usize> = (0..s.rows()).map(|_| rand::Rng::gen_range(&mut rng, 0..s.cols())).collect();
        let loss = crf::nll_loss(&s, &tm, &gold).unwrap();
        prop_assert!(loss >= 0.0);
        if s.cols() == 1 {
            prop_assert_eq!(loss, 0.0);
        } else {
            prop_assert!(loss > 0.0);
        }
    }

    #[test]
    fn best_path_attains_enumerated_maximum((s, tm) in instance()) {
        let truth = oracle::enumerate(&s, &tm);
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        let score = crf::sequence_score(&s, &tm, &path).unwrap();
        prop_assert!((score - truth.best_score).abs() <= 1e-8);
        for (a, b) in table.scores.as_slice().iter().zip(truth.prefix_max.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn best_path_minimizes_nll((s, tm) in instance()) {
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        let best = crf::nll_loss(&s, &tm, &path).unwrap();
        for y in oracle::all_sequences(s.rows(), s.cols()) {
            prop_assert!(best <= crf::nll_loss(&s, &tm, &y).unwrap() + 1e-9);
        }
    }

    #[test]
    fn final_column_is_maximal_at_path_end((s, tm) in instance()) {
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        let last = s.rows() - 1;
        let finals: Vec<f64> = (0..s.cols()).map(|j| table.scores[(last, j)] + tm.end(j)).collect();
        let chosen = finals[path[last]];
        prop_assert!(finals.iter().all(|&v| v <= chosen));
    }

    #[test]
    fn transfer_rows_are_stochastic((s, tm) in instance()) {
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        for mode in [TransferMode::Raw, TransferMode::Clamped] {
            match avd::transfer_probabilities(&table.scores, &path, mode) {
                Ok(p) => {
                    for row in p.iter_rows() {
                        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    }
                }
                Err(e) => {
                    let degenerate = matches!(e, emotrans_core::Error::DegenerateRow { .. });
                    prop_assert!(degenerate);
                }
            }
        }
    }

    #[test]
    fn transfer_argmax_follows_scores_when_denominators_positive((s, tm) in instance()) {
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        let c = &table.scores;
        let positive = (0..c.rows()).all(|i| {
            let b = if i == 0 { 0.0 } else { c[(i - 1, path[i - 1])] };
            c.row(i).iter().map(|x| x - b).sum::<f64>() > 1e-9
        });
        prop_assume!(positive);
        let p = avd::transfer_probabilities(c, &path, TransferMode::Raw).unwrap();
        for i in 0..c.rows() {
            prop_assert_eq!(
                emotrans_core::math::argmax(p.row(i)),
                emotrans_core::math::argmax(c.row(i))
            );
        }
    }
}

/// Central differences of the NLL with respect to emissions and transitions
/// on a random 5-utterance, 3-label instance.
#[test]
fn crf_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (s, tm) = oracle::random_instance(5, 3, &mut rng);
    let gold = [2, 0, 0, 1, 2];
    let g = crf::crf_gradients(&s, &tm, &gold).unwrap();
    let h = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let mut worst = 0.0f64;

    for i in 0..s.rows() {
        for j in 0..s.cols() {
            let mut up = s.clone();
            up[(i, j)] += h;
            let mut down = s.clone();
            down[(i, j)] -= h;
            let num = (crf::nll_loss(&up, &tm, &gold).unwrap()
                - crf::nll_loss(&down, &tm, &gold).unwrap())
                / (2.0 * h);
            worst = worst.max(rel(g.emissions[(i, j)], num));
        }
    }
    for a in 0..tm.num_states() {
        for b in 0..tm.num_states() {
            if tm.is_masked(a, b) {
                assert_eq!(g.transitions[(a, b)], 0.0);
                continue;
            }
            let mut up = tm.scores().clone();
            up[(a, b)] += h;
            let mut down = tm.scores().clone();
            down[(a, b)] -= h;
            let up = TransitionModel::from_scores(up).unwrap();
            let down = TransitionModel::from_scores(down).unwrap();
            let num = (crf::nll_loss(&s, &up, &gold).unwrap()
                - crf::nll_loss(&s, &down, &gold).unwrap())
                / (2.0 * h);
            worst = worst.max(rel(g.transitions[(a, b)], num));
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

#[test]
fn oracle_suite_two_hundred_trials() {
    let report = oracle::run_suite(200, 6, 4, 7, 1e-8).unwrap();
    assert_eq!(report.trials, 200);
    assert!(report.passed(), "{report:?}");
}
