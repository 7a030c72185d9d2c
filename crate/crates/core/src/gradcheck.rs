//! Central finite-difference check of the analytic gradients of the full
//! training loss with respect to the transitions and the adapter.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::pipeline::{Gradients, Model, PipelineConfig};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative errors are taken against `max(|analytic|, |numeric|, FLOOR)`.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// One conversation plus the parameters to differentiate.
#[derive(Debug, Clone)]
pub struct GradCheckInstance {
    pub embeddings: Matrix,
    pub gold: Vec<usize>,
    pub seen_prototypes: Matrix,
    pub model: Model,
    pub config: PipelineConfig,
}

impl GradCheckInstance {
    /// Random instance with `N ≤ max_len`, `n ≤ max_labels`, `d ≤ max_dim`.
    pub fn random(
        seed: u64,
        max_len: usize,
        max_labels: usize,
        max_dim: usize,
        adapter: bool,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.gen_range(1..=max_len);
        let n = rng.gen_range(1..=max_labels);
        let d = rng.gen_range(2..=max_dim.max(2));
        Self::random_with_shape(&mut rng, len, n, d, adapter)
    }

    pub fn random_with_shape<R: Rng + ?Sized>(
        rng: &mut R,
        len: usize,
        n: usize,
        d: usize,
        adapter: bool,
    ) -> Self {
        let uniform = |rows: usize, cols: usize, r: &mut R| {
            let mut m = Matrix::zeros(rows, cols);
            for x in m.as_mut_slice() {
                *x = r.gen_range(-1.0..1.0);
            }
            m
        };
        let embeddings = uniform(len, d, rng);
        let seen_prototypes = uniform(n, d, rng);
        let gold = (0..len).map(|_| rng.gen_range(0..n)).collect();
        let mut model = Model::new(n, d, adapter, rng).expect("n >= 1");
        let states = n + 2;
        for a in 0..states {
            for b in 0..states {
                if !model.transitions.is_masked(a, b) {
                    model.transitions.scores_mut()[(a, b)] = rng.gen_range(-0.5..0.5);
                }
            }
        }
        if adapter {
            for w in model.adapter.weight.as_mut_slice() {
                *w += rng.gen_range(-0.1..0.1);
            }
            for b in model.adapter.bias.iter_mut() {
                *b = rng.gen_range(-0.1..0.1);
            }
        }
        GradCheckInstance {
            embeddings,
            gold,
            seen_prototypes,
            model,
            config: PipelineConfig::default(),
        }
    }

    fn loss(&self, model: &Model) -> Result<f64> {
        model.loss(
            &self.embeddings,
            &self.gold,
            &self.seen_prototypes,
            &self.config,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: &'static str,
    pub entries: usize,
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.blocks
            .iter()
            .fold(0.0, |m, b| m.max(b.max_relative_error))
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error() <= tolerance
    }

    pub fn block(&self, name: &str) -> Option<&BlockReport> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

#[derive(Clone, Copy)]
enum Param {
    Transition(usize, usize),
    Weight(usize, usize),
    Bias(usize),
}

fn param_mut(model: &mut Model, p: Param) -> &mut f64 {
    match p {
        Param::Transition(a, b) => &mut model.transitions.scores_mut()[(a, b)],
        Param::Weight(a, b) => &mut model.adapter.weight[(a, b)],
        Param::Bias(a) => &mut model.adapter.bias[a],
    }
}

fn check_block(
    inst: &GradCheckInstance,
    name: &'static str,
    params: &[(Param, f64)],
    step: f64,
) -> Result<BlockReport> {
    let mut report = BlockReport {
        name,
        entries: params.len(),
        max_relative_error: 0.0,
        max_abs_error: 0.0,
        max_abs_analytic: 0.0,
        max_abs_numeric: 0.0,
    };
    let mut model = inst.model.clone();
    for &(p, analytic) in params {
        let orig = *param_mut(&mut model, p);
        *param_mut(&mut model, p) = orig + step;
        let up = inst.loss(&model)?;
        *param_mut(&mut model, p) = orig - step;
        let down = inst.loss(&model)?;
        *param_mut(&mut model, p) = orig;
        let numeric = (up - down) / (2.0 * step);
        let abs_err = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        report.max_abs_error = report.max_abs_error.max(abs_err);
        report.max_relative_error = report.max_relative_error.max(abs_err / scale);
        report.max_abs_analytic = report.max_abs_analytic.max(analytic.abs());
        report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
    }
    Ok(report)
}

/// Compares analytic and central-difference gradients block by block.
/// Adapter blocks are omitted when the adapter is disabled; masked
/// transition cells are skipped.
pub fn gradient_check(inst: &GradCheckInstance, step: f64) -> Result<GradCheckReport> {
    let mut grads = Gradients::zeros_like(&inst.model);
    inst.model.loss_and_grad(
        &inst.embeddings,
        &inst.gold,
        &inst.seen_prototypes,
        &inst.config,
        &mut grads,
    )?;
    let mut blocks = Vec::new();
    let tm = &inst.model.transitions;
    let states = tm.num_states();
    let trans: Vec<(Param, f64)> = (0..states * states)
        .map(|idx| (idx / states, idx % states))
        .filter(|&(a, b)| !tm.is_masked(a, b))
        .map(|(a, b)| (Param::Transition(a, b), grads.transitions[(a, b)]))
        .collect();
    blocks.push(check_block(inst, "transitions", &trans, step)?);
    if inst.model.adapter.enabled {
        let d = inst.model.dim();
        let weight: Vec<(Param, f64)> = (0..d * d)
            .map(|idx| {
                (
                    Param::Weight(idx / d, idx % d),
                    grads.adapter_weight[(idx / d, idx % d)],
                )
            })
            .collect();
        blocks.push(check_block(inst, "adapter.weight", &weight, step)?);
        let bias: Vec<(Param, f64)> = (0..d)
            .map(|a| (Param::Bias(a), grads.adapter_bias[a]))
            .collect();
        blocks.push(check_block(inst, "adapter.bias", &bias, step)?);
    }
    Ok(GradCheckReport { blocks })
}
