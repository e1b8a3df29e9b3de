#![allow(dead_code)]

use std::path::PathBuf;

use fairsqp::data::Dataset;
use fairsqp::model::ModelParams;
use fairsqp::sqp::QpSubproblem;
use ndarray::Array2;
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// `n` rows, `width` standard-uniform features, both groups and both labels present.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, width: usize) -> Dataset {
    assert!(n >= 4);
    let features = Array2::from_shape_fn((n, width), |_| rng.gen_range(-2.0..2.0));
    let mut sensitive: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.4) as u8).collect();
    let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
    // pin one positive in each group
    sensitive[0] = 0;
    sensitive[1] = 1;
    labels[0] = 1;
    labels[1] = 1;
    Dataset::new("random", features, sensitive, labels).unwrap()
}

/// Random layer sizes `[width, hidden..., 1]` with at most `max_hidden` units per layer.
pub fn random_layers<R: Rng>(rng: &mut R, width: usize, max_depth: usize, max_hidden: usize) -> Vec<usize> {
    let depth = rng.gen_range(0..=max_depth);
    let mut sizes = vec![width];
    sizes.extend((0..depth).map(|_| rng.gen_range(1..=max_hidden)));
    sizes.push(1);
    sizes
}

pub fn random_model<R: Rng>(rng: &mut R, sizes: Vec<usize>) -> ModelParams {
    ModelParams::init(sizes, 0.01, rng).unwrap()
}

/// Central differences of a scalar function of the weights.
pub fn fd_gradient(params: &ModelParams, h: f64, f: impl Fn(&ModelParams) -> f64) -> Vec<f64> {
    let mut p = params.clone();
    (0..params.len())
        .map(|k| {
            let w = params.weights[k];
            p.weights[k] = w + h;
            let up = f(&p);
            p.weights[k] = w - h;
            let down = f(&p);
            p.weights[k] = w;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b||_2 / max(||b||_2, floor)`.
pub fn rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(floor);
    diff / scale
}

pub fn random_qp<R: Rng>(rng: &mut R, max_rows: usize, max_vars: usize) -> QpSubproblem {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(0..=max_rows);
    let g = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = (0..n).map(|_| rng.gen_range(0.05..5.0)).collect();
    let j = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let r = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    QpSubproblem::new(g, h, j, r).unwrap()
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[p][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Exhaustive active-set oracle built on the full `(n + |A|)` KKT matrix:
/// keeps primal-feasible candidates with nonnegative multipliers and
/// returns the smallest objective, or `None` when no candidate qualifies.
pub fn dense_oracle(qp: &QpSubproblem) -> Option<(Vec<f64>, f64)> {
    let (n, m) = (qp.vars(), qp.rows());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        let mut a = vec![vec![0.0; n + k]; n + k];
        let mut b = vec![0.0; n + k];
        for i in 0..n {
            a[i][i] = qp.h_diag[i];
            b[i] = -qp.g[i];
        }
        for (c, &row) in active.iter().enumerate() {
            for i in 0..n {
                a[i][n + c] = qp.j[row][i];
                a[n + c][i] = qp.j[row][i];
            }
            b[n + c] = -qp.r[row];
        }
        let Some(x) = dense_solve(a, b) else { continue };
        let (d, y) = x.split_at(n);
        let feasible = qp.residuals(d).iter().all(|&v| v <= 1e-8);
        if feasible && y.iter().all(|&v| v >= -1e-10) {
            let obj = qp.objective(d);
            if best.as_ref().is_none_or(|(_, o)| obj < *o) {
                best = Some((d.to_vec(), obj));
            }
        }
    }
    best
}
