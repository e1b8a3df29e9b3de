//! Stochastic SQP training under fairness constraints.
//!
//! Each iteration linearizes the constraints at the current weights, solves
//! the small step QP in [`qp`] with an Adagrad-style diagonal curvature,
//! updates the merit parameter, steps with the current learning rate, and
//! then applies the nonmonotone learning-rate reduction.

pub mod qp;

pub use qp::{solve_kkt, solve_qp, solve_qp_exhaustive, KktSolution, QpMode, QpSolution, QpSubproblem};

use serde::{Deserialize, Serialize};

use crate::data::{BatchMode, Dataset, StratifiedSampler};
use crate::error::{FairError, Result};
use crate::fairness::{dp_regularizer_seeds, ConstraintSet, EvalContext};
use crate::model::{bce, ModelParams};
use crate::surrogate::SurrogateSpec;

pub const CURVATURE_FLOOR: f64 = 1e-8;
pub const MERIT_SIGMA: f64 = 0.5;
pub const MERIT_THETA: f64 = 1e-12;
pub const DEFAULT_LR: f64 = 0.5;
pub const DEFAULT_EPOCHS: usize = 500;
/// The cascade enumerates subsets, so keep the row count small.
pub const MAX_QP_ROWS: usize = 4;

/// Constants of the nonmonotone learning-rate reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub min_lr: f64,
    pub min_iterations: usize,
    pub adjustment_interval: usize,
    pub lr_reduction_factor: f64,
    /// Weight of the newest merit value in the moving average.
    pub eta: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            min_lr: 1e-7,
            min_iterations: 200,
            adjustment_interval: 5,
            lr_reduction_factor: 10.0,
            eta: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqpConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Regularization weight; `None` means no regularizer.
    pub lambda: Option<f64>,
    /// Step approximation inside the demographic-parity regularizer.
    pub regularizer_surrogate: SurrogateSpec,
    pub qp_mode: QpMode,
    pub batch: BatchMode,
    pub seed: u64,
    pub schedule: LrSchedule,
    pub initial_merit_param: f64,
}

impl Default for SqpConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            lambda: None,
            regularizer_surrogate: SurrogateSpec::default(),
            qp_mode: QpMode::Cascade,
            batch: BatchMode::Full,
            seed: 0,
            schedule: LrSchedule::default(),
            initial_merit_param: 1.0,
        }
    }
}

impl SqpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(FairError::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(FairError::invalid(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.initial_merit_param > 0.0) {
            return Err(FairError::invalid("initial merit parameter must be positive"));
        }
        self.regularizer_surrogate.validate()
    }

    fn regularizer_weight(&self) -> f64 {
        match self.lambda {
            Some(l) if l.is_finite() => 1.0 / l,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqpState {
    pub accumulator: Vec<f64>,
    pub merit_param: f64,
    pub base_lr: f64,
    pub lr: f64,
    pub merit_avg: Option<f64>,
    pub iters_since_adjust: usize,
    pub iteration: usize,
    pub epoch: usize,
}

impl SqpState {
    pub fn new(n_params: usize, lr: f64, merit_param: f64) -> Self {
        Self {
            accumulator: vec![0.0; n_params],
            merit_param,
            base_lr: lr,
            lr,
            merit_avg: None,
            iters_since_adjust: 0,
            iteration: 0,
            epoch: 0,
        }
    }
}

/// Accumulates `g * g` and returns `sqrt(acc) + floor`.
pub fn update_curvature(state: &mut SqpState, g: &[f64]) -> Vec<f64> {
    state
        .accumulator
        .iter_mut()
        .zip(g)
        .map(|(a, gi)| {
            *a += gi * gi;
            a.sqrt() + CURVATURE_FLOOR
        })
        .collect()
}

/// Ratio test on the predicted reduction in l1 violation. The parameter only
/// decreases, and stays put when the step predicts no violation reduction.
pub fn update_merit_param(state: &mut SqpState, qp: &QpSubproblem, d: &[f64]) -> f64 {
    let linearized: f64 = qp.residuals(d).iter().map(|v| v.max(0.0)).sum();
    let reduction = qp.violation_l1() - linearized;
    let hd: f64 = d.iter().zip(&qp.h_diag).map(|(x, h)| h * x * x).sum();
    let denom = qp::dot(&qp.g, d) + hd.max(0.0);
    if denom > 0.0 && reduction > 0.0 {
        let trial = (1.0 - MERIT_SIGMA) * reduction / denom.max(MERIT_THETA);
        state.merit_param = state.merit_param.min(trial);
    }
    state.merit_param
}

/// Moving-average merit test for iteration `state.iteration`; returns the merit value.
pub fn adjust_learning_rate(state: &mut SqpState, schedule: &LrSchedule, f_val: f64, violation_l1: f64) -> f64 {
    let merit = state.merit_param * f_val + violation_l1;
    let avg = match state.merit_avg {
        None => merit,
        Some(prev) => schedule.eta * merit + (1.0 - schedule.eta) * prev,
    };
    state.merit_avg = Some(avg);
    if state.iteration >= schedule.min_iterations && state.lr >= schedule.min_lr {
        if avg <= merit && state.iters_since_adjust >= schedule.adjustment_interval {
            state.lr /= schedule.lr_reduction_factor;
            state.iters_since_adjust = 0;
        }
        state.iters_since_adjust += 1;
    }
    merit
}

/// One line of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub epoch: usize,
    /// Objective on the batch: mean BCE plus the weighted regularizer.
    pub f: f64,
    pub viol_l1: f64,
    pub merit: f64,
    pub tau: f64,
    pub lr: f64,
    pub active: Vec<usize>,
    pub constraints: Vec<f64>,
}

/// One SQP iteration on `batch`, updating `params` and `state` in place.
pub fn sqp_step(
    state: &mut SqpState,
    params: &mut ModelParams,
    data: &Dataset,
    constraints: &ConstraintSet,
    batch: &[usize],
    config: &SqpConfig,
) -> Result<TraceRecord> {
    if batch.is_empty() {
        return Err(FairError::invalid("empty batch"));
    }
    let ctx = EvalContext::new(params, data, batch)?;
    let n = batch.len() as f64;
    let outputs = ctx.outputs();
    let labels = ctx.labels();
    let mut f = outputs.iter().zip(labels).map(|(&p, &y)| bce(p, y as f64)).sum::<f64>() / n;
    let mut logit_seed: Vec<f64> = outputs.iter().zip(labels).map(|(&p, &y)| (p - y as f64) / n).collect();
    let weight = config.regularizer_weight();
    if weight > 0.0 {
        let (q, seeds) = dp_regularizer_seeds(&ctx, &config.regularizer_surrogate)?;
        f += weight * q * q;
        for ((ls, s), &p) in logit_seed.iter_mut().zip(&seeds).zip(outputs) {
            *ls += weight * s * p * (1.0 - p);
        }
    }
    let g = ctx.params().backward_logit(ctx.pass(), &logit_seed);
    let eval = constraints.evaluate(&ctx)?;
    drop(ctx);
    if !f.is_finite() || g.iter().chain(eval.values.iter()).any(|v| !v.is_finite()) {
        return Err(FairError::Divergence {
            iteration: state.iteration,
            detail: format!("non-finite objective or gradient (objective {f})"),
        });
    }

    let h = update_curvature(state, &g);
    let (qp, _) = QpSubproblem::from_constraints(g, h, &eval)?;
    let sol = solve_qp(&qp, config.qp_mode)?;
    let tau = update_merit_param(state, &qp, &sol.d);
    let lr = state.lr;
    for (w, d) in params.weights.iter_mut().zip(&sol.d) {
        *w += lr * d;
    }
    let viol = eval.violation_l1();
    if !f.is_finite() || params.weights.iter().any(|w| !w.is_finite()) {
        return Err(FairError::Divergence {
            iteration: state.iteration,
            detail: format!("objective {f}, step norm {}", qp::dot(&sol.d, &sol.d).sqrt()),
        });
    }
    let merit = adjust_learning_rate(state, &config.schedule, f, viol);
    let record = TraceRecord {
        iteration: state.iteration,
        epoch: state.epoch,
        f,
        viol_l1: viol,
        merit,
        tau,
        lr,
        active: sol.active,
        constraints: eval.values,
    };
    state.iteration += 1;
    Ok(record)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub state: SqpState,
    /// Last record of every epoch.
    pub epoch_trace: Vec<TraceRecord>,
}

/// Runs `config.epochs` epochs from `params`. Every iteration's record is
/// passed to `on_record` as soon as it exists, so a failing run still
/// leaves its trace behind.
pub fn train(
    mut params: ModelParams,
    data: &Dataset,
    constraints: &ConstraintSet,
    config: &SqpConfig,
    on_record: &mut dyn FnMut(&TraceRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    constraints.validate()?;
    if constraints.row_count() > MAX_QP_ROWS {
        return Err(FairError::invalid(format!(
            "{} constraint rows exceed the solver limit of {MAX_QP_ROWS}",
            constraints.row_count()
        )));
    }
    if params.input_width() != data.width() {
        return Err(FairError::Shape {
            expected: data.width(),
            actual: params.input_width(),
        });
    }
    let mut state = SqpState::new(params.len(), config.lr, config.initial_merit_param);
    let mut epoch_trace = Vec::with_capacity(config.epochs);
    let full = data.all_indices();
    let mut sampler = match config.batch {
        BatchMode::Full => None,
        BatchMode::Stratified { n0, n1 } => Some(StratifiedSampler::new(data, n0, n1, config.seed)?),
    };
    let per_epoch = sampler.as_ref().map_or(1, StratifiedSampler::batches_per_epoch);
    for epoch in 0..config.epochs {
        state.epoch = epoch;
        let mut last = None;
        for _ in 0..per_epoch {
            let record = match sampler.as_mut() {
                None => sqp_step(&mut state, &mut params, data, constraints, &full, config)?,
                Some(s) => {
                    let batch = s.next_batch();
                    sqp_step(&mut state, &mut params, data, constraints, &batch, config)?
                }
            };
            on_record(&record)?;
            last = Some(record);
        }
        epoch_trace.extend(last);
    }
    Ok(TrainOutcome {
        params,
        state,
        epoch_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_hand_accumulation() {
        let mut s = SqpState::new(2, 0.5, 1.0);
        let h0 = update_curvature(&mut s, &[0.0, 0.0]);
        assert_eq!(h0, vec![CURVATURE_FLOOR; 2]);
        update_curvature(&mut s, &[3.0, 4.0]);
        let h = update_curvature(&mut s, &[3.0, 4.0]);
        assert_eq!(s.accumulator, vec![18.0, 32.0]);
        assert_eq!(h, vec![18f64.sqrt() + CURVATURE_FLOOR, 32f64.sqrt() + CURVATURE_FLOOR]);
    }

    #[test]
    fn merit_param_unchanged_for_feasible_descent() {
        let mut s = SqpState::new(2, 0.5, 0.7);
        let qp = QpSubproblem::new(vec![1.0, 0.0], vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![-1.0]).unwrap();
        let sol = solve_qp(&qp, QpMode::Strict).unwrap();
        assert_eq!(update_merit_param(&mut s, &qp, &sol.d), 0.7);
    }

    #[test]
    fn merit_param_ratio_by_hand() {
        // g = (1, 0), H = I, row d1 <= -1 violated by 1 at d = 0
        let mut s = SqpState::new(2, 0.5, 1.0);
        let qp = QpSubproblem::new(vec![1.0, 0.0], vec![1.0, 1.0], vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        // d = (-2, 0): g'd = -2, d'Hd = 4, violation 1 -> 0
        let tau = update_merit_param(&mut s, &qp, &[-2.0, 0.0]);
        assert_eq!(tau, 0.5 * 1.0 / 2.0);
        // a smaller trial never raises it back
        let again = update_merit_param(&mut s, &qp, &[-1.0, 0.0]);
        assert_eq!(again, 0.25);
    }

    #[test]
    fn lr_unchanged_before_min_iterations() {
        let sched = LrSchedule::default();
        let mut s = SqpState::new(1, 0.5, 1.0);
        for k in 0..200 {
            s.iteration = k;
            adjust_learning_rate(&mut s, &sched, 1.0 + (k % 3) as f64, 0.0);
        }
        assert_eq!(s.lr, 0.5);
        assert_eq!(s.iters_since_adjust, 0);
    }

    #[test]
    fn constant_merit_reduces_every_five() {
        let sched = LrSchedule::default();
        let mut s = SqpState::new(1, 0.5, 1.0);
        let mut cuts = Vec::new();
        for k in 0..230 {
            s.iteration = k;
            let before = s.lr;
            adjust_learning_rate(&mut s, &sched, 1.0, 0.0);
            if s.lr < before {
                cuts.push(k);
            }
        }
        assert_eq!(cuts, vec![205, 210, 215, 220, 225]);
        assert!((s.lr - 0.5e-5).abs() < 1e-20);
    }

    #[test]
    fn decreasing_merit_never_reduces() {
        let sched = LrSchedule::default();
        let mut s = SqpState::new(1, 0.5, 1.0);
        for k in 0..1000 {
            s.iteration = k;
            adjust_learning_rate(&mut s, &sched, 1000.0 - k as f64, 0.0);
        }
        assert_eq!(s.lr, 0.5);
    }

    #[test]
    fn lr_floor() {
        let sched = LrSchedule::default();
        let mut s = SqpState::new(1, 0.5, 1.0);
        for k in 0..2000 {
            s.iteration = k;
            adjust_learning_rate(&mut s, &sched, 1.0, 0.0);
        }
        assert!(s.lr < sched.min_lr);
        assert!(s.lr >= sched.min_lr / sched.lr_reduction_factor);
    }
}
