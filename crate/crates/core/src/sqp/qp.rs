//! The per-iteration step subproblem
//!
//! ```text
//! min_d  g'd + 1/2 d'Hd   s.t.  J d <= -r
//! ```
//!
//! with diagonal positive `H` and a handful of rows, solved by enumerating
//! candidate active sets and solving the equality-constrained KKT system
//! for each through its Schur complement.

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::fairness::ConstraintEval;

/// Tolerance for `J d + r <= tol`.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Schur complements with a larger 1-norm condition estimate are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Multipliers above `-DUAL_TOL` count as nonnegative in strict mode.
pub const DUAL_TOL: f64 = 1e-10;
/// Jacobian rows with no entry above this are treated as zero by the fallback.
pub const ZERO_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSubproblem {
    pub g: Vec<f64>,
    pub h_diag: Vec<f64>,
    /// One row per finite bound, each of length `g.len()`.
    pub j: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

impl QpSubproblem {
    pub fn new(g: Vec<f64>, h_diag: Vec<f64>, j: Vec<Vec<f64>>, r: Vec<f64>) -> Result<Self> {
        let n = g.len();
        if h_diag.len() != n {
            return Err(FairError::Shape {
                expected: n,
                actual: h_diag.len(),
            });
        }
        if j.len() != r.len() {
            return Err(FairError::Shape {
                expected: j.len(),
                actual: r.len(),
            });
        }
        if let Some(row) = j.iter().find(|row| row.len() != n) {
            return Err(FairError::Shape {
                expected: n,
                actual: row.len(),
            });
        }
        if h_diag.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(FairError::invalid("H diagonal must be positive and finite"));
        }
        let finite = g.iter().chain(&r).chain(j.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(FairError::invalid("non-finite QP data"));
        }
        Ok(Self { g, h_diag, j, r })
    }

    /// Rows for `l <= c + grad c' d <= u`: a lower row `(-grad c, l - c)` and an
    /// upper row `(grad c, c - u)` per function, skipping infinite bounds.
    /// Also returns, per row, `(function index, is_upper)`.
    pub fn from_constraints(
        g: Vec<f64>,
        h_diag: Vec<f64>,
        eval: &ConstraintEval,
    ) -> Result<(Self, Vec<(usize, bool)>)> {
        let mut j = Vec::new();
        let mut r = Vec::new();
        let mut origin = Vec::new();
        for (k, f) in eval.functions.iter().enumerate() {
            let c = eval.values[k];
            let grad = &eval.gradients[k];
            if f.lower.is_finite() {
                j.push(grad.iter().map(|v| -v).collect());
                r.push(f.lower - c);
                origin.push((k, false));
            }
            if f.upper.is_finite() {
                j.push(grad.clone());
                r.push(c - f.upper);
                origin.push((k, true));
            }
        }
        Ok((Self::new(g, h_diag, j, r)?, origin))
    }

    pub fn vars(&self) -> usize {
        self.g.len()
    }

    pub fn rows(&self) -> usize {
        self.r.len()
    }

    pub fn objective(&self, d: &[f64]) -> f64 {
        self.g
            .iter()
            .zip(&self.h_diag)
            .zip(d)
            .map(|((g, h), x)| g * x + 0.5 * h * x * x)
            .sum()
    }

    /// `J d + r`; feasible where every entry is nonpositive.
    pub fn residuals(&self, d: &[f64]) -> Vec<f64> {
        self.j.iter().zip(&self.r).map(|(row, r)| dot(row, d) + r).collect()
    }

    pub fn is_feasible(&self, d: &[f64], tol: f64) -> bool {
        self.residuals(d).iter().all(|&v| v <= tol)
    }

    /// `sum_i max(r_i, 0)`, the l1 violation at `d = 0`.
    pub fn violation_l1(&self) -> f64 {
        self.r.iter().map(|r| r.max(0.0)).sum()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub d: Vec<f64>,
    /// Multipliers of the active rows, in the order given.
    pub y: Vec<f64>,
}

/// Solves `H d + J_A' y = -g`, `J_A d = -r_A`.
pub fn solve_kkt(qp: &QpSubproblem, active: &[usize]) -> Result<KktSolution> {
    if let Some(&bad) = active.iter().find(|&&i| i >= qp.rows()) {
        return Err(FairError::invalid(format!("active row {bad} out of range")));
    }
    let h_inv_g: Vec<f64> = qp.g.iter().zip(&qp.h_diag).map(|(g, h)| g / h).collect();
    if active.is_empty() {
        return Ok(KktSolution {
            d: h_inv_g.iter().map(|v| -v).collect(),
            y: Vec::new(),
        });
    }
    let k = active.len();
    let mut s = vec![vec![0.0; k]; k];
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate().skip(a) {
            let v: f64 = qp.j[i]
                .iter()
                .zip(&qp.j[j])
                .zip(&qp.h_diag)
                .map(|((x, y), h)| x * y / h)
                .sum();
            s[a][b] = v;
            s[b][a] = v;
        }
    }
    let rhs: Vec<f64> = active.iter().map(|&i| qp.r[i] - dot(&qp.j[i], &h_inv_g)).collect();
    let degenerate = |condition: f64| FairError::DegenerateActiveSet {
        active: active.to_vec(),
        condition,
    };
    let inv = invert(&s).ok_or_else(|| degenerate(f64::INFINITY))?;
    let condition = norm1(&s) * norm1(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(degenerate(condition));
    }
    let y: Vec<f64> = inv.iter().map(|row| dot(row, &rhs)).collect();
    let mut d: Vec<f64> = qp.g.clone();
    for (&i, &yi) in active.iter().zip(&y) {
        for (dv, jv) in d.iter_mut().zip(&qp.j[i]) {
            *dv += yi * jv;
        }
    }
    for (dv, h) in d.iter_mut().zip(&qp.h_diag) {
        *dv = -*dv / h;
    }
    Ok(KktSolution { d, y })
}

fn norm1(m: &[Vec<f64>]) -> f64 {
    (0..m.len())
        .map(|c| m.iter().map(|row| row[c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[row][j] -= f * a[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpMode {
    /// Cardinality cascade choosing the cheapest primal-feasible candidate
    /// at the first level that has one.
    #[default]
    Cascade,
    /// Same cascade, but candidates must also have nonnegative multipliers,
    /// so the result is the exact QP minimizer.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub d: Vec<f64>,
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
}

/// Subsets of `0..m` with exactly `k` elements, in lexicographic order.
fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn candidate(qp: &QpSubproblem, active: Vec<usize>) -> Option<QpSolution> {
    let sol = solve_kkt(qp, &active).ok()?;
    Some(QpSolution {
        objective: qp.objective(&sol.d),
        d: sol.d,
        active,
        multipliers: sol.y,
    })
}

fn best(cands: impl Iterator<Item = QpSolution>) -> Option<QpSolution> {
    cands.fold(None, |acc: Option<QpSolution>, c| match acc {
        Some(a) if a.objective <= c.objective => Some(a),
        _ => Some(c),
    })
}

/// Active-set cascade: the unconstrained step, then every single row, then
/// every pair, and so on, stopping at the first cardinality that yields an
/// acceptable candidate and returning the one with the lowest model objective.
/// Degenerate active sets are skipped.
///
/// When no candidate is feasible, rows whose Jacobian is numerically zero
/// (no first-order influence, e.g. saturated outputs) are dropped and the
/// cascade is repeated on the remaining rows.
pub fn solve_qp(qp: &QpSubproblem, mode: QpMode) -> Result<QpSolution> {
    let all: Vec<usize> = (0..qp.rows()).collect();
    if let Some(sol) = cascade(qp, &all, mode) {
        return Ok(sol);
    }
    let live: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| qp.j[i].iter().any(|v| v.abs() > ZERO_ROW_TOL))
        .collect();
    if live.len() < all.len() {
        if let Some(sol) = cascade(qp, &live, mode) {
            return Ok(sol);
        }
    }
    let unconstrained = solve_kkt(qp, &[])?;
    Err(FairError::QpInfeasible {
        residuals: qp.residuals(&unconstrained.d),
    })
}

fn cascade(qp: &QpSubproblem, rows: &[usize], mode: QpMode) -> Option<QpSolution> {
    let acceptable = |c: &QpSolution| {
        let res = qp.residuals(&c.d);
        rows.iter().all(|&i| res[i] <= FEASIBILITY_TOL)
            && (mode == QpMode::Cascade || c.multipliers.iter().all(|&y| y >= -DUAL_TOL))
    };
    (0..=rows.len()).find_map(|k| {
        let sets = subsets(rows.len(), k)
            .into_iter()
            .map(|a| a.into_iter().map(|i| rows[i]).collect());
        best(sets.filter_map(|a| candidate(qp, a)).filter(|c| acceptable(c)))
    })
}

/// Reference solver: every subset of rows, keeping KKT points (primal
/// feasible, nonnegative multipliers), minimal objective.
pub fn solve_qp_exhaustive(qp: &QpSubproblem) -> Result<QpSolution> {
    let m = qp.rows();
    let all = (0..=m).flat_map(|k| subsets(m, k));
    best(
        all.filter_map(|a| candidate(qp, a))
            .filter(|c| qp.is_feasible(&c.d, FEASIBILITY_TOL) && c.multipliers.iter().all(|&y| y >= -DUAL_TOL)),
    )
    .ok_or_else(|| FairError::QpInfeasible {
        residuals: qp.r.clone(),
    })
}
