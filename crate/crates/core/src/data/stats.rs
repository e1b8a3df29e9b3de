use serde::{Deserialize, Serialize};

use super::Dataset;

/// Cell counts and the fairness statistics of a predictor that reproduces
/// the labels exactly. Ratios whose conditioning event is empty are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "# S = 1")]
    pub n_s1: usize,
    #[serde(rename = "# S = 0")]
    pub n_s0: usize,
    #[serde(rename = "# Y = 1")]
    pub n_y1: usize,
    #[serde(rename = "# Y = 0")]
    pub n_y0: usize,
    #[serde(rename = "# Y = 1 and S = 1")]
    pub n_y1_s1: usize,
    #[serde(rename = "# Y = 1 and S = 0")]
    pub n_y1_s0: usize,
    #[serde(rename = "# Y = 0 and S = 1")]
    pub n_y0_s1: usize,
    #[serde(rename = "# Y = 0 and S = 0")]
    pub n_y0_s0: usize,
    #[serde(rename = "P(Y = 1 | S = 1)")]
    pub p_y1_given_s1: Option<f64>,
    #[serde(rename = "P(Y = 1 | S = 0)")]
    pub p_y1_given_s0: Option<f64>,
    #[serde(rename = "P(S = 1 | Y = 1)")]
    pub p_s1_given_y1: Option<f64>,
    #[serde(rename = "P(S = 0 | Y = 1)")]
    pub p_s0_given_y1: Option<f64>,
    #[serde(rename = "Demographic Parity Violation with Rote Learning")]
    pub dp_rote: Option<f64>,
    #[serde(rename = "Equal Opportunity Violation with Rote Learning")]
    pub eo_rote: Option<f64>,
    #[serde(rename = "Disparate Impact with Rote Learning")]
    pub di_rote: Option<f64>,
    #[serde(rename = "All-Zero Prediction Accuracy")]
    pub all_zero_acc: Option<f64>,
    #[serde(rename = "All-One Prediction Accuracy")]
    pub all_one_acc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Two-group disparate-impact level `min{a/b, b/a}` of two rates.
///
/// Both zero counts as no disparity (1); exactly one zero gives 0.
pub fn disparate_impact_level(a: f64, b: f64) -> f64 {
    if a <= 0.0 && b <= 0.0 {
        1.0
    } else if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        (a / b).min(b / a)
    }
}

pub fn stats(data: &Dataset) -> DatasetStats {
    let mut cells = [[0usize; 2]; 2]; // [y][s]
    for (&y, &s) in data.labels.iter().zip(&data.sensitive) {
        cells[y as usize][s as usize] += 1;
    }
    let n = data.len();
    let n_s1 = cells[0][1] + cells[1][1];
    let n_s0 = cells[0][0] + cells[1][0];
    let n_y1 = cells[1][0] + cells[1][1];
    let n_y0 = cells[0][0] + cells[0][1];

    let p_y1_s1 = ratio(cells[1][1], n_s1);
    let p_y1_s0 = ratio(cells[1][0], n_s0);
    let p_s1_y1 = ratio(cells[1][1], n_y1);
    let p_s0_y1 = ratio(cells[1][0], n_y1);
    let both = |a: Option<f64>, b: Option<f64>| a.zip(b);

    DatasetStats {
        n,
        n_s1,
        n_s0,
        n_y1,
        n_y0,
        n_y1_s1: cells[1][1],
        n_y1_s0: cells[1][0],
        n_y0_s1: cells[0][1],
        n_y0_s0: cells[0][0],
        p_y1_given_s1: p_y1_s1,
        p_y1_given_s0: p_y1_s0,
        p_s1_given_y1: p_s1_y1,
        p_s0_given_y1: p_s0_y1,
        dp_rote: both(p_y1_s1, p_y1_s0).map(|(a, b)| (a - b).abs()),
        eo_rote: both(p_s1_y1, p_s0_y1).map(|(a, b)| (a - b).abs()),
        di_rote: both(p_y1_s1, p_y1_s0).map(|(a, b)| disparate_impact_level(a, b)),
        all_zero_acc: ratio(n_y0, n),
        all_one_acc: ratio(n_y1, n),
    }
}
