//! Group-rate fairness measures, their smooth surrogates, and the
//! constraint functions handed to the trainer.
//!
//! For a sample set and a step approximation `phi`, the group positive
//! rate is `p_s = (1/N_s) sum_{i: s_i = s} phi(alpha * (out_i - tau))`. With
//! the Heaviside step these are the empirical rates of the hard predictions
//! `1{out_i > tau}`. Everything below is a function of the two rates, except
//! the covariance surrogate `(1/N) sum (s_i - mean(s)) out_i`.

use serde::{Deserialize, Serialize};

use crate::data::disparate_impact_level;
use crate::data::Dataset;
use crate::error::{FairError, Result};
use crate::model::{ForwardPass, ModelParams};
use crate::surrogate::SurrogateSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `delta * p0 <= p1` and `delta * p1 <= p0`.
    DisparateImpact,
    /// Disparate impact restricted to samples with `y = 1`.
    EqualImpact,
    /// `-eps <= p1 - p0 <= eps`.
    DemographicParityBand,
    /// `-eps <= c_cov <= eps`.
    CovarianceBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub kind: ConstraintKind,
    /// `delta` in `[0, 1]` for the ratio kinds, `eps > 0` for the bands.
    pub threshold: f64,
    pub surrogate: SurrogateSpec,
}

impl ConstraintEntry {
    pub fn disparate_impact(delta: f64, surrogate: SurrogateSpec) -> Self {
        Self {
            kind: ConstraintKind::DisparateImpact,
            threshold: delta,
            surrogate,
        }
    }

    pub fn equal_impact(delta: f64, surrogate: SurrogateSpec) -> Self {
        Self {
            kind: ConstraintKind::EqualImpact,
            threshold: delta,
            surrogate,
        }
    }

    pub fn demographic_parity_band(eps: f64, surrogate: SurrogateSpec) -> Self {
        Self {
            kind: ConstraintKind::DemographicParityBand,
            threshold: eps,
            surrogate,
        }
    }

    pub fn covariance_band(eps: f64) -> Self {
        Self {
            kind: ConstraintKind::CovarianceBand,
            threshold: eps,
            surrogate: SurrogateSpec::linear(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            ConstraintKind::DisparateImpact | ConstraintKind::EqualImpact => check_delta(self.threshold)?,
            ConstraintKind::DemographicParityBand | ConstraintKind::CovarianceBand => {
                if !(self.threshold.is_finite() && self.threshold > 0.0) {
                    return Err(FairError::invalid(format!(
                        "band half-width must be positive, got {}",
                        self.threshold
                    )));
                }
            }
        }
        self.surrogate.validate()?;
        if self.kind != ConstraintKind::CovarianceBand && !self.surrogate.is_differentiable() {
            return Err(FairError::Unsupported(
                "constraints need a differentiable surrogate".into(),
            ));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(FairError::invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

/// One scalar constraint function `lower <= c(w) <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFunction {
    pub name: String,
    pub entry: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub entries: Vec<ConstraintEntry>,
}

/// Values and gradients of every constraint function at one iterate.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    pub functions: Vec<ConstraintFunction>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec<f64>>,
}

impl ConstraintEval {
    /// `sum_j max(c_j - u_j, 0) + max(l_j - c_j, 0)`.
    pub fn violation_l1(&self) -> f64 {
        self.functions
            .iter()
            .zip(&self.values)
            .map(|(f, &c)| (c - f.upper).max(0.0) + (f.lower - c).max(0.0))
            .sum()
    }
}

impl ConstraintSet {
    pub fn new(entries: Vec<ConstraintEntry>) -> Result<Self> {
        let set = Self { entries };
        set.validate()?;
        Ok(set)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.entries.iter().try_for_each(ConstraintEntry::validate)
    }

    pub fn functions(&self) -> Vec<ConstraintFunction> {
        let mut out = Vec::new();
        for (k, e) in self.entries.iter().enumerate() {
            let f = |name: &str, lower: f64, upper: f64| ConstraintFunction {
                name: name.to_string(),
                entry: k,
                lower,
                upper,
            };
            match e.kind {
                ConstraintKind::DisparateImpact => {
                    out.push(f("c_di_1", f64::NEG_INFINITY, 0.0));
                    out.push(f("c_di_2", f64::NEG_INFINITY, 0.0));
                }
                ConstraintKind::EqualImpact => {
                    out.push(f("c_ei_1", f64::NEG_INFINITY, 0.0));
                    out.push(f("c_ei_2", f64::NEG_INFINITY, 0.0));
                }
                ConstraintKind::DemographicParityBand => out.push(f("c_dp", -e.threshold, e.threshold)),
                ConstraintKind::CovarianceBand => out.push(f("c_cov", -e.threshold, e.threshold)),
            }
        }
        out
    }

    /// Number of QP rows, i.e. finite bounds over all functions.
    pub fn row_count(&self) -> usize {
        self.functions()
            .iter()
            .map(|f| f.lower.is_finite() as usize + f.upper.is_finite() as usize)
            .sum()
    }

    /// Values only; no backward passes.
    pub fn values(&self, ctx: &EvalContext<'_>) -> Result<Vec<f64>> {
        Ok(self.evaluate_inner(ctx, false)?.values)
    }

    pub fn evaluate(&self, ctx: &EvalContext<'_>) -> Result<ConstraintEval> {
        self.evaluate_inner(ctx, true)
    }

    fn evaluate_inner(&self, ctx: &EvalContext<'_>, with_grad: bool) -> Result<ConstraintEval> {
        let mut values = Vec::new();
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        for e in &self.entries {
            match e.kind {
                ConstraintKind::DisparateImpact | ConstraintKind::EqualImpact => {
                    let subset = if e.kind == ConstraintKind::DisparateImpact {
                        Subset::All
                    } else {
                        Subset::PositiveLabel
                    };
                    let r = ctx.rates(&e.surrogate, subset, with_grad)?;
                    let d = e.threshold;
                    values.push(d * r.p[0] - r.p[1]);
                    values.push(d * r.p[1] - r.p[0]);
                    if with_grad {
                        seeds.push(combine(d, &r.seeds[0], -1.0, &r.seeds[1]));
                        seeds.push(combine(-1.0, &r.seeds[0], d, &r.seeds[1]));
                    }
                }
                ConstraintKind::DemographicParityBand => {
                    let r = ctx.rates(&e.surrogate, Subset::All, with_grad)?;
                    values.push(r.p[1] - r.p[0]);
                    if with_grad {
                        seeds.push(combine(-1.0, &r.seeds[0], 1.0, &r.seeds[1]));
                    }
                }
                ConstraintKind::CovarianceBand => {
                    let (v, s) = ctx.covariance();
                    values.push(v);
                    if with_grad {
                        seeds.push(s);
                    }
                }
            }
        }
        let gradients = seeds.iter().map(|s| ctx.gradient(s)).collect();
        Ok(ConstraintEval {
            functions: self.functions(),
            values,
            gradients,
        })
    }
}

fn combine(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    All,
    /// Only samples with `y = 1`.
    PositiveLabel,
}

/// Group rates together with the per-sample output seeds of their gradients.
#[derive(Debug, Clone)]
pub struct Rates {
    pub p: [f64; 2],
    /// `seeds[s][i] = d p_s / d out_i`; empty when gradients were not requested.
    pub seeds: [Vec<f64>; 2],
}

/// One forward evaluation over a sample set, reused by every measure.
pub struct EvalContext<'a> {
    params: &'a ModelParams,
    pass: ForwardPass,
    sensitive: Vec<u8>,
    labels: Vec<u8>,
}

impl<'a> EvalContext<'a> {
    pub fn new(params: &'a ModelParams, data: &Dataset, indices: &[usize]) -> Result<Self> {
        let x = data.features_for(indices)?;
        let pass = params.forward_pass(x.view())?;
        Ok(Self {
            params,
            pass,
            sensitive: indices.iter().map(|&i| data.sensitive[i]).collect(),
            labels: indices.iter().map(|&i| data.labels[i]).collect(),
        })
    }

    pub fn full(params: &'a ModelParams, data: &Dataset) -> Result<Self> {
        Self::new(params, data, &data.all_indices())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn outputs(&self) -> &[f64] {
        &self.pass.outputs
    }

    pub fn pass(&self) -> &ForwardPass {
        &self.pass
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    /// Gradient of `sum_i seed_i * out_i`.
    pub fn gradient(&self, output_seeds: &[f64]) -> Vec<f64> {
        self.params.backward_output(&self.pass, output_seeds)
    }

    pub fn rates(&self, surrogate: &SurrogateSpec, subset: Subset, with_grad: bool) -> Result<Rates> {
        if with_grad && !surrogate.is_differentiable() {
            return Err(FairError::Unsupported("the Heaviside step has no derivative".into()));
        }
        let member = |i: usize| subset == Subset::All || self.labels[i] == 1;
        let mut counts = [0usize; 2];
        let mut sums = [0.0f64; 2];
        for (i, (&out, &s)) in self.pass.outputs.iter().zip(&self.sensitive).enumerate() {
            if member(i) {
                counts[s as usize] += 1;
                sums[s as usize] += surrogate.at_output(out);
            }
        }
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                let what = match subset {
                    Subset::All => "",
                    Subset::PositiveLabel => " with y = 1",
                };
                return Err(FairError::dataset(format!("no samples in group s={s}{what}")));
            }
        }
        let p = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
        let seeds = if with_grad {
            let mut seeds = [vec![0.0; self.len()], vec![0.0; self.len()]];
            for (i, (&out, &s)) in self.pass.outputs.iter().zip(&self.sensitive).enumerate() {
                if member(i) {
                    let s = s as usize;
                    seeds[s][i] = surrogate.derivative(out - surrogate.tau) / counts[s] as f64;
                }
            }
            seeds
        } else {
            [Vec::new(), Vec::new()]
        };
        Ok(Rates { p, seeds })
    }

    /// `(1/N) sum_i (s_i - mean(s)) out_i` and its output seeds.
    pub fn covariance(&self) -> (f64, Vec<f64>) {
        let n = self.len() as f64;
        let s_bar = self.sensitive.iter().map(|&s| s as f64).sum::<f64>() / n;
        let seeds: Vec<f64> = self.sensitive.iter().map(|&s| (s as f64 - s_bar) / n).collect();
        let value = seeds.iter().zip(&self.pass.outputs).map(|(w, o)| w * o).sum();
        (value, seeds)
    }
}

/// Surrogate group positive rates `(p0, p1)` over the whole dataset.
pub fn soft_group_rates(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec) -> Result<(f64, f64)> {
    let r = EvalContext::full(params, data)?.rates(surrogate, Subset::All, false)?;
    Ok((r.p[0], r.p[1]))
}

/// `c_dp = p1 - p0` with surrogate rates.
pub fn c_dp(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec) -> Result<f64> {
    let (p0, p1) = soft_group_rates(data, params, surrogate)?;
    Ok(p1 - p0)
}

pub fn c_dp_grad(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec) -> Result<Vec<f64>> {
    let ctx = EvalContext::full(params, data)?;
    let r = ctx.rates(surrogate, Subset::All, true)?;
    Ok(ctx.gradient(&combine(-1.0, &r.seeds[0], 1.0, &r.seeds[1])))
}

/// Covariance between the sensitive attribute and the raw network output.
pub fn c_cov(data: &Dataset, params: &ModelParams) -> Result<f64> {
    Ok(EvalContext::full(params, data)?.covariance().0)
}

pub fn c_cov_grad(data: &Dataset, params: &ModelParams) -> Result<Vec<f64>> {
    let ctx = EvalContext::full(params, data)?;
    let (_, seeds) = ctx.covariance();
    Ok(ctx.gradient(&seeds))
}

fn ratio_rows(
    data: &Dataset,
    params: &ModelParams,
    surrogate: &SurrogateSpec,
    delta: f64,
    subset: Subset,
) -> Result<[f64; 2]> {
    check_delta(delta)?;
    let r = EvalContext::full(params, data)?.rates(surrogate, subset, false)?;
    Ok([delta * r.p[0] - r.p[1], delta * r.p[1] - r.p[0]])
}

fn ratio_jacobian(
    data: &Dataset,
    params: &ModelParams,
    surrogate: &SurrogateSpec,
    delta: f64,
    subset: Subset,
) -> Result<[Vec<f64>; 2]> {
    check_delta(delta)?;
    let ctx = EvalContext::full(params, data)?;
    let r = ctx.rates(surrogate, subset, true)?;
    Ok([
        ctx.gradient(&combine(delta, &r.seeds[0], -1.0, &r.seeds[1])),
        ctx.gradient(&combine(-1.0, &r.seeds[0], delta, &r.seeds[1])),
    ])
}

/// `(delta * p0 - p1, delta * p1 - p0)`; both nonpositive iff the
/// disparate-impact constraint holds.
pub fn c_di_rows(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec, delta: f64) -> Result<[f64; 2]> {
    ratio_rows(data, params, surrogate, delta, Subset::All)
}

pub fn c_di_jacobian(
    data: &Dataset,
    params: &ModelParams,
    surrogate: &SurrogateSpec,
    delta: f64,
) -> Result<[Vec<f64>; 2]> {
    ratio_jacobian(data, params, surrogate, delta, Subset::All)
}

/// Disparate-impact rows over the samples with `y = 1`.
pub fn c_ei_rows(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec, delta: f64) -> Result<[f64; 2]> {
    ratio_rows(data, params, surrogate, delta, Subset::PositiveLabel)
}

pub fn c_ei_jacobian(
    data: &Dataset,
    params: &ModelParams,
    surrogate: &SurrogateSpec,
    delta: f64,
) -> Result<[Vec<f64>; 2]> {
    ratio_jacobian(data, params, surrogate, delta, Subset::PositiveLabel)
}

/// `r(w) = q(w)^2` with `q = c_dp`, and its gradient `2 q grad q`.
pub fn dp_regularizer(data: &Dataset, params: &ModelParams, surrogate: &SurrogateSpec) -> Result<(f64, Vec<f64>)> {
    let ctx = EvalContext::full(params, data)?;
    dp_regularizer_in(&ctx, surrogate)
}

pub(crate) fn dp_regularizer_in(ctx: &EvalContext<'_>, surrogate: &SurrogateSpec) -> Result<(f64, Vec<f64>)> {
    let (q, seeds) = dp_regularizer_seeds(ctx, surrogate)?;
    Ok((q * q, ctx.gradient(&seeds)))
}

/// Regularizer value and the output seeds of its gradient.
pub(crate) fn dp_regularizer_seeds(ctx: &EvalContext<'_>, surrogate: &SurrogateSpec) -> Result<(f64, Vec<f64>)> {
    let r = ctx.rates(surrogate, Subset::All, true)?;
    let q = r.p[1] - r.p[0];
    Ok((q, combine(-2.0 * q, &r.seeds[0], 2.0 * q, &r.seeds[1])))
}

/// Surrogate and hard fairness measures of a model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub delta: f64,
    pub c_dp_surrogate: f64,
    pub c_dp_hard: f64,
    pub c_di_surrogate: f64,
    pub c_di_hard: f64,
    pub delta_hat_surrogate: f64,
    pub delta_hat_hard: f64,
    pub c_cov: f64,
    pub group_positive_rates: [f64; 2],
    pub surrogate_positive_rates: [f64; 2],
    pub c_ei_surrogate: Option<f64>,
    pub c_ei_hard: Option<f64>,
    pub delta_hat_ei_surrogate: Option<f64>,
    pub delta_hat_ei_hard: Option<f64>,
    pub group_true_positive_rates: Option<[f64; 2]>,
}

/// Evaluates every measure at one iterate. Hard predictions are
/// `1{out > surrogate.tau}`; the ratio rows use `delta`.
pub fn fairness_report(
    data: &Dataset,
    params: &ModelParams,
    surrogate: &SurrogateSpec,
    delta: f64,
) -> Result<FairnessReport> {
    check_delta(delta)?;
    let ctx = EvalContext::full(params, data)?;
    let hard = surrogate.hard();
    let soft = ctx.rates(surrogate, Subset::All, false)?.p;
    let hard_rates = ctx.rates(&hard, Subset::All, false)?.p;
    let rows_max = |p: [f64; 2]| (delta * p[0] - p[1]).max(delta * p[1] - p[0]);

    let ei_soft = ctx.rates(surrogate, Subset::PositiveLabel, false).ok().map(|r| r.p);
    let ei_hard = ctx.rates(&hard, Subset::PositiveLabel, false).ok().map(|r| r.p);

    Ok(FairnessReport {
        delta,
        c_dp_surrogate: soft[1] - soft[0],
        c_dp_hard: hard_rates[1] - hard_rates[0],
        c_di_surrogate: rows_max(soft),
        c_di_hard: rows_max(hard_rates),
        delta_hat_surrogate: disparate_impact_level(soft[0], soft[1]),
        delta_hat_hard: disparate_impact_level(hard_rates[0], hard_rates[1]),
        c_cov: ctx.covariance().0,
        group_positive_rates: hard_rates,
        surrogate_positive_rates: soft,
        c_ei_surrogate: ei_soft.map(rows_max),
        c_ei_hard: ei_hard.map(rows_max),
        delta_hat_ei_surrogate: ei_soft.map(|p| disparate_impact_level(p[0], p[1])),
        delta_hat_ei_hard: ei_hard.map(|p| disparate_impact_level(p[0], p[1])),
        group_true_positive_rates: ei_hard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    /// Linear model `out = sigmoid(x0)`, so outputs are chosen through the feature.
    fn with_outputs(outputs: &[f64], sensitive: Vec<u8>, labels: Vec<u8>) -> (Dataset, ModelParams) {
        let logits: Vec<f64> = outputs.iter().map(|p| (p / (1.0 - p)).ln()).collect();
        let features = Array2::from_shape_vec((outputs.len(), 1), logits).unwrap();
        let d = Dataset::new("hand", features, sensitive, labels).unwrap();
        let m = ModelParams::from_weights(vec![1, 1], 0.01, vec![1.0, 0.0]).unwrap();
        (d, m)
    }

    #[test]
    fn four_point_sigmoid_rates_by_hand() {
        let outs = [0.9, 0.2, 0.6, 0.4];
        let (d, m) = with_outputs(&outs, vec![0, 0, 1, 1], vec![1, 0, 1, 0]);
        let s = SurrogateSpec::sigmoid(1.0);
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let p0 = (sig(0.9 - 0.5) + sig(0.2 - 0.5)) / 2.0;
        let p1 = (sig(0.6 - 0.5) + sig(0.4 - 0.5)) / 2.0;
        let (a, b) = soft_group_rates(&d, &m, &s).unwrap();
        assert_relative_eq!(a, p0, epsilon = 1e-12);
        assert_relative_eq!(b, p1, epsilon = 1e-12);
        assert_relative_eq!(c_dp(&d, &m, &s).unwrap(), p1 - p0, epsilon = 1e-12);
    }

    #[test]
    fn identical_groups_have_zero_dp() {
        let (d, m) = with_outputs(&[0.3, 0.7, 0.3, 0.7], vec![0, 0, 1, 1], vec![1, 1, 1, 1]);
        let s = SurrogateSpec::default();
        assert_eq!(c_dp(&d, &m, &s).unwrap(), 0.0);
        let (v, g) = dp_regularizer(&d, &m, &s).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
        for delta in [0.0, 0.5, 1.0] {
            assert!(c_ei_rows(&d, &m, &s, delta).unwrap().iter().all(|&r| r <= 0.0));
        }
    }

    #[test]
    fn three_point_covariance_by_hand() {
        let outs = [0.2, 0.5, 0.8];
        let (d, m) = with_outputs(&outs, vec![0, 1, 1], vec![0, 1, 1]);
        let s_bar = 2.0 / 3.0;
        let expected = ((0.0 - s_bar) * 0.2 + (1.0 - s_bar) * 0.5 + (1.0 - s_bar) * 0.8) / 3.0;
        assert_relative_eq!(c_cov(&d, &m).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn delta_zero_rows_are_vacuous() {
        let (d, m) = with_outputs(&[0.9, 0.2, 0.6, 0.4], vec![0, 0, 1, 1], vec![1, 0, 1, 1]);
        let s = SurrogateSpec::sigmoid(1.0);
        let (p0, p1) = soft_group_rates(&d, &m, &s).unwrap();
        let rows = c_di_rows(&d, &m, &s, 0.0).unwrap();
        assert_eq!(rows, [-p1, -p0]);
        assert!(c_di_rows(&d, &m, &s, 1.2).is_err());
        assert!(c_di_rows(&d, &m, &s, -0.1).is_err());
    }

    #[test]
    fn equal_impact_needs_positive_labels_in_both_groups() {
        let (d, m) = with_outputs(&[0.9, 0.2, 0.6, 0.4], vec![0, 0, 1, 1], vec![0, 0, 1, 1]);
        let s = SurrogateSpec::sigmoid(1.0);
        assert!(matches!(c_ei_rows(&d, &m, &s, 0.5), Err(FairError::InvalidDataset(_))));
        let rep = fairness_report(&d, &m, &s, 0.5).unwrap();
        assert_eq!(rep.c_ei_hard, None);
    }

    #[test]
    fn heaviside_gradient_rejected() {
        let (d, m) = with_outputs(&[0.9, 0.2, 0.6, 0.4], vec![0, 0, 1, 1], vec![1, 0, 1, 1]);
        assert!(matches!(
            c_dp_grad(&d, &m, &SurrogateSpec::heaviside()),
            Err(FairError::Unsupported(_))
        ));
    }

    #[test]
    fn equal_hard_rates_give_full_delta_hat() {
        let (d, m) = with_outputs(&[0.9, 0.2, 0.6, 0.4], vec![0, 0, 1, 1], vec![1, 0, 1, 1]);
        let rep = fairness_report(&d, &m, &SurrogateSpec::default(), 0.8).unwrap();
        assert_eq!(rep.group_positive_rates, [0.5, 0.5]);
        assert_eq!(rep.delta_hat_hard, 1.0);
        assert_eq!(rep.c_dp_hard, 0.0);
    }

    #[test]
    fn constraint_set_layout() {
        let s = SurrogateSpec::default();
        let set = ConstraintSet::new(vec![
            ConstraintEntry::disparate_impact(0.8, s),
            ConstraintEntry::equal_impact(0.8, s),
        ])
        .unwrap();
        assert_eq!(set.functions().len(), 4);
        assert_eq!(set.row_count(), 4);
        let band = ConstraintSet::new(vec![ConstraintEntry::demographic_parity_band(0.05, s)]).unwrap();
        assert_eq!(band.row_count(), 2);
        assert!(ConstraintSet::new(vec![ConstraintEntry::disparate_impact(0.8, SurrogateSpec::heaviside())]).is_err());
        assert!(ConstraintSet::new(vec![ConstraintEntry::covariance_band(0.0)]).is_err());
    }
}
