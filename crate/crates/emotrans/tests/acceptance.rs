//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use emotrans::synthetic::{ToyConfig, ToyCorpus};
use emotrans_core::gradcheck::{gradient_check, GradCheckInstance, DEFAULT_STEP};
use emotrans_core::gsa::{self, AttentionMode, GsaConfig};
use emotrans_core::similarity::{self, SimConfig};
use emotrans_core::trainer::{self, TrainData, TrainOutcome, ValidationData};
use emotrans_core::{avd, oracle, Matrix, TrainConfig, TransferMode, TransitionModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-8;
const GRAD_TOL: f64 = 1e-4;
const GSA_TOL: f64 = 1e-6;
const ROW_SUM_TOL: f64 = 1e-9;
const ABLATION_SEEDS: u64 = 5;
/// Two-sided 95% quantile of Student's t with 4 degrees of freedom.
const T_975_DF4: f64 = 2.776_445_105_2;

type Check = fn() -> Outcome;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        name,
        passed,
        detail,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for x in m.as_mut_slice() {
        *x = rng.gen_range(-2.0..2.0);
    }
    m
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn crf_oracle() -> Outcome {
    let started = Instant::now();
    let r = oracle::run_suite(200, 6, 4, 7, ORACLE_TOL).expect("oracle suite");
    let elapsed = started.elapsed();
    let err = r.max_partition_error.max(r.max_marginal_error);
    outcome(
        "CRF oracle",
        r.trials >= 200 && err <= ORACLE_TOL && elapsed < Duration::from_secs(60),
        format!(
            "{} instances, max |logZ| error {:.2e}, max marginal error {:.2e}, {:.2?}",
            r.trials, r.max_partition_error, r.max_marginal_error, elapsed
        ),
    )
}

fn viterbi_oracle() -> Outcome {
    let r = oracle::run_suite(200, 6, 4, 7, ORACLE_TOL).expect("oracle suite");
    outcome(
        "Viterbi oracle",
        r.trials >= 200 && r.max_best_path_error <= ORACLE_TOL && r.max_prefix_error <= ORACLE_TOL,
        format!(
            "{} instances, max best-path error {:.2e}, max prefix-table error {:.2e}",
            r.trials, r.max_best_path_error, r.max_prefix_error
        ),
    )
}

fn gradient_check_suite() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let inst = GradCheckInstance::random(seed, 6, 4, 8, true);
        let report = gradient_check(&inst, DEFAULT_STEP).expect("gradient check");
        worst = worst.max(report.max_relative_error());
    }
    outcome(
        "Gradient check",
        worst <= GRAD_TOL,
        format!("20 instances over T, W, b, max relative error {worst:.2e}"),
    )
}

fn gsa_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_limit = 0.0f64;
    for _ in 0..200 {
        let (n, d) = (rng.gen_range(1..=8), rng.gen_range(1..=6));
        let h = random_matrix(&mut rng, n, d);
        let wide = gsa::gsa_update(
            &h,
            &GsaConfig {
                sigma: 1e6,
                mode: AttentionMode::Gaussian,
            },
        )
        .unwrap();
        let plain = gsa::gsa_update(
            &h,
            &GsaConfig {
                sigma: 1e6,
                mode: AttentionMode::Plain,
            },
        )
        .unwrap();
        worst_limit = worst_limit.max(max_abs_diff(&wide, &plain));
    }

    // h1 = [1, 0], h2 = [0, 1], d = 2: logits [1/2, 0], kernel [1, e^-2].
    let h = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let got = gsa::gsa_update(&h, &GsaConfig::default()).unwrap();
    let near = 1.0 / (1.0 + (-0.5f64).exp());
    let far = (-2.0f64).exp() / (1.0 + 0.5f64.exp());
    let expected = Matrix::from_rows(&[[1.0 + near, far], [far, 1.0 + near]]).unwrap();
    let fixture = max_abs_diff(&got, &expected);

    outcome(
        "GSA limit",
        worst_limit <= GSA_TOL && fixture <= GSA_TOL,
        format!(
            "sigma=1e6 vs plain max diff {worst_limit:.2e}; 2-utterance fixture max diff {fixture:.2e} \
             (h_utte_1 = [{:.6}, {:.6}])",
            got[(0, 0)],
            got[(0, 1)]
        ),
    )
}

fn stochasticity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut worst_s, mut worst_p) = (0.0f64, 0.0f64);
    let (mut rows_s, mut rows_p, mut degenerate) = (0usize, 0usize, 0usize);
    for trial in 0..500 {
        let (len, n, d) = (
            rng.gen_range(1..=8),
            rng.gen_range(1..=5),
            rng.gen_range(2..=8),
        );
        let u = random_matrix(&mut rng, len, d);
        let protos = random_matrix(&mut rng, n, d);
        let tau = if trial % 2 == 0 {
            0.02
        } else {
            rng.gen_range(0.05..2.0)
        };
        let s = similarity::contrastive_similarity(&u, &protos, &SimConfig { tau }).unwrap();
        for row in s.iter_rows() {
            worst_s = worst_s.max((row.iter().sum::<f64>() - 1.0).abs());
            rows_s += 1;
        }

        let mut tm = TransitionModel::zeros(n).unwrap();
        for a in 0..n + 2 {
            for b in 0..n + 2 {
                if !tm.is_masked(a, b) {
                    tm.scores_mut()[(a, b)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let table = avd::viterbi_scores(&s, &tm).unwrap();
        let path = avd::best_path(&table, &tm);
        for mode in [TransferMode::Raw, TransferMode::Clamped] {
            match avd::transfer_probabilities(&table.scores, &path, mode) {
                Ok(p) => {
                    for row in p.iter_rows() {
                        worst_p = worst_p.max((row.iter().sum::<f64>() - 1.0).abs());
                        rows_p += 1;
                    }
                }
                Err(emotrans_core::Error::DegenerateRow { .. }) => degenerate += 1,
                Err(e) => panic!("transfer: {e}"),
            }
        }
    }
    outcome(
        "Stochasticity",
        worst_s <= ROW_SUM_TOL && worst_p <= ROW_SUM_TOL,
        format!(
            "{rows_s} S rows max |sum-1| {worst_s:.2e}; {rows_p} P rows max |sum-1| {worst_p:.2e} \
             ({degenerate} decodes with a zero denominator skipped)"
        ),
    )
}

fn toy_config(seed: u64, crf: bool) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        epochs: 40,
        warmup_steps: 10,
        seed,
        crf_enabled: crf,
        ..TrainConfig::default()
    }
}

struct ToyRun {
    outcome: TrainOutcome,
    test_unseen_wf1: f64,
}

fn toy_run(toy: &ToyCorpus, cfg: &TrainConfig) -> ToyRun {
    let (train, valid, test) = (toy.encoded_train(), toy.encoded_valid(), toy.encoded_test());
    let data = TrainData {
        conversations: &train,
        seen_prototypes: &toy.seen_prototypes,
    };
    let validation = ValidationData {
        conversations: &valid,
        unseen_prototypes: &toy.unseen_prototypes,
    };
    let outcome = trainer::train(&data, Some(&validation), cfg, |_| {}).expect("training");
    let test_unseen_wf1 = trainer::unseen_wf1(
        &outcome.checkpoint.model,
        &test,
        &toy.seen_prototypes,
        &toy.unseen_prototypes,
        &cfg.pipeline(),
    )
    .expect("evaluation");
    ToyRun {
        outcome,
        test_unseen_wf1,
    }
}

fn toy_transfer() -> Outcome {
    let started = Instant::now();
    let tc = ToyConfig::default();
    let toy = ToyCorpus::generate(&tc).expect("toy corpus");
    let run = toy_run(&toy, &toy_config(0, true));
    let elapsed = started.elapsed();
    let reached = run
        .outcome
        .history
        .iter()
        .find(|h| h.train_seen_wf1 >= 0.95)
        .map(|h| h.epoch);
    let baseline = 1.0 / tc.unseen as f64;
    outcome(
        "End-to-end toy transfer",
        reached.is_some_and(|e| e <= 200)
            && run.test_unseen_wf1 > baseline
            && elapsed < Duration::from_secs(300),
        format!(
            "seen train wF1 >= 0.95 at epoch {}, unseen test wF1 {:.4} vs baseline {baseline:.2}, {:.2?}",
            reached.map_or_else(|| "never".to_string(), |e| e.to_string()),
            run.test_unseen_wf1,
            elapsed
        ),
    )
}

fn ablation_direction() -> Outcome {
    let mut diffs = Vec::new();
    let mut lines = Vec::new();
    for seed in 0..ABLATION_SEEDS {
        let toy = ToyCorpus::generate(&ToyConfig {
            seed,
            ..ToyConfig::default()
        })
        .expect("toy corpus");
        let full = toy_run(&toy, &toy_config(seed, true)).test_unseen_wf1;
        let no_crf = toy_run(&toy, &toy_config(seed, false)).test_unseen_wf1;
        diffs.push(no_crf - full);
        lines.push(format!("{full:.3}/{no_crf:.3}"));
    }
    let k = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / k;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let se = sd / k.sqrt();
    // Noise: a paired two-sided t-test at the 5% level over the seeds.
    let t = if se > 0.0 {
        mean / se
    } else if mean > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    outcome(
        "Ablation direction (CRF disabled)",
        t <= T_975_DF4,
        format!(
            "full/no-CRF unseen wF1 per seed [{}]; mean gain without CRF {mean:+.4}, se {se:.4}, \
             t {t:.2} vs {T_975_DF4:.3}",
            lines.join(" ")
        ),
    )
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_emotrans"))
        .args(args)
        .env_remove("EMOTRANS_SEED")
        .output()
        .expect("running emotrans");
    assert!(
        out.status.success(),
        "emotrans {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let data = root.join("toy");
    cli(&[
        "synth",
        "--out",
        &s(&data),
        "--seed",
        "3",
        "--train",
        "20",
        "--test",
        "10",
    ]);
    let mut checkpoints = Vec::new();
    let mut predictions = Vec::new();
    for run in ["a", "b"] {
        let ckpt = root.join(format!("ckpt_{run}"));
        let preds = root.join(format!("pred_{run}.jsonl"));
        cli(&[
            "train",
            "--corpus",
            &s(&data.join("train.tsv")),
            "--valid-corpus",
            &s(&data.join("valid.tsv")),
            "--embeddings",
            &s(&data.join("embeddings")),
            "--descriptions",
            &s(&data.join("descriptions.jsonl")),
            "--out",
            &s(&ckpt),
            "--lr",
            "0.01",
            "--epochs",
            "4",
            "--warmup",
            "5",
            "--seed",
            "9",
        ]);
        cli(&[
            "predict",
            "--checkpoint",
            &s(&ckpt),
            "--corpus",
            &s(&data.join("test.tsv")),
            "--embeddings",
            &s(&data.join("embeddings")),
            "--descriptions",
            &s(&data.join("descriptions.jsonl")),
            "--out",
            &s(&preds),
        ]);
        checkpoints.push(dir_bytes(&ckpt));
        predictions.push(fs::read(&preds).unwrap());
    }
    let files = checkpoints[0].len();
    outcome(
        "Determinism",
        files > 0 && checkpoints[0] == checkpoints[1] && predictions[0] == predictions[1],
        format!(
            "{files} checkpoint files and {} prediction bytes compared across two seeded runs",
            predictions[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("crf", crf_oracle),
        ("viterbi", viterbi_oracle),
        ("gradcheck", gradient_check_suite),
        ("gsa", gsa_limits),
        ("stochastic", stochasticity),
        ("toy", toy_transfer),
        ("ablation", ablation_direction),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (key, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let o = check();
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
