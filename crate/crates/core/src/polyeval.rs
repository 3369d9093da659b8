//! Log-domain evaluation of weight enumerators on grids of bias values.
//!
//! Every term `A_w δ^w` is handled as `ln A_w + w ln δ`, and sums are taken
//! with a max-shifted log-sum-exp. `W(δ) − 1` has its own path that sums the
//! `w ≥ 1` terms only; forming `W(δ)` first and subtracting one loses every
//! digit once `A_d δ^d` drops below machine epsilon.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::weights::WeightDistribution;

/// Ascending bias magnitudes in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaGrid {
    values: Vec<f64>,
}

impl DeltaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::InvalidParams(format!(
                "bias magnitude {bad} outside [0, 1]"
            )));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "grid values must be strictly ascending".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn single(delta: f64) -> Result<Self> {
        Self::new(vec![delta])
    }

    /// `count` evenly spaced points from `min` to `max` inclusive.
    pub fn linear(min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(spaced(min, max, count, |t| min + t * (max - min)))
    }

    /// `count` log-spaced points from `min` to `max` inclusive (`min > 0`).
    pub fn log(min: f64, max: f64, count: usize) -> Result<Self> {
        if min <= 0.0 {
            return Err(Error::InvalidParams(
                "log-spaced grid needs a positive lower end".into(),
            ));
        }
        let (lo, hi) = (min.ln(), max.ln());
        Self::new(spaced(min, max, count, |t| (lo + t * (hi - lo)).exp()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ln δ` per point (`-inf` at `δ = 0`).
    pub fn ln_values(&self) -> Vec<f64> {
        self.values.iter().map(|d| d.ln()).collect()
    }
}

fn spaced(min: f64, max: f64, count: usize, at: impl Fn(f64) -> f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| {
                if i == 0 {
                    min
                } else if i == count - 1 {
                    max
                } else {
                    at(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

/// `ln Σ exp(t_i)`, max-shifted. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, &t) in terms.iter().enumerate() {
        if t > max {
            max = t;
            arg = i;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let rest: f64 = terms
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg)
        .map(|(_, &t)| (t - max).exp())
        .sum();
    max + rest.ln_1p()
}

/// A weight enumerator prepared for log-domain evaluation.
#[derive(Clone, Debug)]
pub struct WeightPolynomial {
    weights: Vec<f64>,
    ln_coeffs: Vec<f64>,
}

impl WeightPolynomial {
    pub fn new(dist: &WeightDistribution) -> Self {
        let (weights, ln_coeffs) = dist
            .log_counts()
            .iter()
            .map(|&(w, ln_a)| (w as f64, ln_a))
            .unzip();
        Self { weights, ln_coeffs }
    }

    fn term(&self, i: usize, ln_delta: f64) -> f64 {
        if self.weights[i] == 0.0 {
            self.ln_coeffs[i]
        } else {
            self.ln_coeffs[i] + self.weights[i] * ln_delta
        }
    }

    /// True when some `w ≥ 1` coefficient is present.
    pub fn has_nonzero_terms(&self) -> bool {
        self.weights.iter().any(|&w| w > 0.0)
    }

    /// `ln W(δ)` given `ln δ`.
    pub fn ln_eval(&self, ln_delta: f64) -> f64 {
        let terms: Vec<f64> = (0..self.weights.len())
            .map(|i| self.term(i, ln_delta))
            .collect();
        log_sum_exp(&terms)
    }

    /// `ln (W(δ) − 1)` given `ln δ`, summing only the `w ≥ 1` terms.
    /// `-inf` at `δ = 0` or for the zero code.
    pub fn ln_eval_minus_one(&self, ln_delta: f64) -> f64 {
        if ln_delta == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let terms: Vec<f64> = (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .map(|i| self.term(i, ln_delta))
            .collect();
        log_sum_exp(&terms)
    }

    /// Log-terms matrix for a batch of `ln δ` values.
    pub fn terms(&self, ln_deltas: &[f64]) -> TermsMatrix {
        let cols = ln_deltas.len();
        let mut data = Vec::with_capacity(self.weights.len() * cols);
        for i in 0..self.weights.len() {
            data.extend(ln_deltas.iter().map(|&l| self.term(i, l)));
        }
        TermsMatrix {
            weights: self.weights.clone(),
            ln_deltas: ln_deltas.to_vec(),
            data,
        }
    }
}

/// `T[w, j] = ln A_w + w ln δ_j`, one row per nonzero coefficient.
#[derive(Clone, Debug)]
pub struct TermsMatrix {
    weights: Vec<f64>,
    ln_deltas: Vec<f64>,
    data: Vec<f64>,
}

impl TermsMatrix {
    fn column(&self, j: usize, skip_constant: bool) -> Vec<f64> {
        let cols = self.ln_deltas.len();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| !(skip_constant && w == 0.0))
            .map(|(i, _)| self.data[i * cols + j])
            .collect()
    }

    /// `ln W(δ_j)` for every column.
    pub fn ln_w(&self) -> Vec<f64> {
        (0..self.ln_deltas.len())
            .map(|j| log_sum_exp(&self.column(j, false)))
            .collect()
    }

    /// `ln (W(δ_j) − 1)` for every column, without the constant term.
    pub fn ln_w_minus_one(&self) -> Vec<f64> {
        (0..self.ln_deltas.len())
            .map(|j| {
                if self.ln_deltas[j] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    log_sum_exp(&self.column(j, true))
                }
            })
            .collect()
    }
}

/// `W(δ)` and `log2(W(δ) − 1)` over a grid.
#[derive(Clone, Debug)]
pub struct PolyEvaluation {
    pub grid: DeltaGrid,
    pub w: Vec<f64>,
    pub w_log2: Vec<f64>,
    pub w_minus_1_log2: Vec<f64>,
}

/// `W(δ)` at every grid point.
pub fn eval_w(dist: &WeightDistribution, grid: &DeltaGrid) -> Vec<f64> {
    eval_w_log2(dist, grid).into_iter().map(f64::exp2).collect()
}

/// `log2 W(δ)` at every grid point.
pub fn eval_w_log2(dist: &WeightDistribution, grid: &DeltaGrid) -> Vec<f64> {
    let terms = WeightPolynomial::new(dist).terms(&grid.ln_values());
    terms.ln_w().into_iter().map(|x| x / LN_2).collect()
}

/// `log2(W(δ) − 1)` at every grid point; `-inf` at `δ = 0`.
pub fn eval_w_minus_1_log2(dist: &WeightDistribution, grid: &DeltaGrid) -> Result<Vec<f64>> {
    let poly = WeightPolynomial::new(dist);
    if !poly.has_nonzero_terms() {
        return Err(Error::EmptyCode);
    }
    let terms = poly.terms(&grid.ln_values());
    Ok(terms.ln_w_minus_one().into_iter().map(|x| x / LN_2).collect())
}

/// Both evaluations from one log-terms matrix.
pub fn evaluate(dist: &WeightDistribution, grid: &DeltaGrid) -> Result<PolyEvaluation> {
    let poly = WeightPolynomial::new(dist);
    if !poly.has_nonzero_terms() {
        return Err(Error::EmptyCode);
    }
    let terms = poly.terms(&grid.ln_values());
    let w_log2: Vec<f64> = terms.ln_w().into_iter().map(|x| x / LN_2).collect();
    Ok(PolyEvaluation {
        grid: grid.clone(),
        w: w_log2.iter().map(|x| x.exp2()).collect(),
        w_log2,
        w_minus_1_log2: terms
            .ln_w_minus_one()
            .into_iter()
            .map(|x| x / LN_2)
            .collect(),
    })
}

/// Security level `s` of a bound `2^b`.
pub fn security_bits_from_log2(log2_bound: f64) -> f64 {
    -log2_bound
}
