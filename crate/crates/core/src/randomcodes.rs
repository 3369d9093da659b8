//! Random linear correctors: closed-form moments of `Z = ‖P_Y − U‖₂²` and a
//! reproducible Monte-Carlo estimate.
//!
//! Sampling draws the code as the kernel of a uniform `(n−k) × n`
//! parity-check matrix by default, which makes `E[A_j] = 2^{k−n} C(n, j)`
//! hold exactly. Drawing a uniform `k × n` generator instead is available as
//! [`Ensemble::Generator`]; its occasional rank drops bias `A_j` slightly low.

use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::BoundValue;
use crate::error::{Error, Result};
use crate::gf2::GeneratorMatrix;
use crate::polyeval::WeightPolynomial;
use crate::weights::WeightDistribution;

pub const MAX_SAMPLE_N: usize = 24;
pub const MAX_SAMPLE_K: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ensemble {
    /// Kernel of a uniformly random `(n−k) × n` matrix.
    #[default]
    ParityCheck,
    /// Row space of a uniformly random `k × n` matrix.
    Generator,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomCodeParams {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl RandomCodeParams {
    pub fn new(n: usize, k: usize, delta: f64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParams(format!("bias magnitude {delta} outside [0, 1]")));
        }
        Ok(Self {
            n,
            k,
            delta,
            samples: 1000,
            seed: 0,
            ensemble: Ensemble::default(),
        })
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_ensemble(mut self, ensemble: Ensemble) -> Self {
        self.ensemble = ensemble;
        self
    }
}

/// `log2(e^x − 1)` for `x ≥ 0`, accurate for tiny and huge `x`.
fn log2_expm1(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x < 30.0 {
        x.exp_m1().ln() / LN_2
    } else {
        (x + (-(-x).exp()).ln_1p()) / LN_2
    }
}

/// `E[Z] = 2^{-n} ((1 + δ²)^n − 1)`.
pub fn expected_l2_sq(p: &RandomCodeParams) -> BoundValue {
    let n = p.n as f64;
    BoundValue::from_log2(log2_expm1(n * (p.delta * p.delta).ln_1p()) - n)
}

/// `Var[Z] ≤ 2^{-(n+k)} ((1 + δ⁴)^n − 1)`.
pub fn variance_bound_l2_sq(p: &RandomCodeParams) -> BoundValue {
    let n = p.n as f64;
    BoundValue::from_log2(log2_expm1(n * p.delta.powi(4).ln_1p()) - n - p.k as f64)
}

/// Chebyshev bound on `P(Z ≥ (1 + ε) E[Z])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevTail {
    /// `Var / (ε E)²` clamped to `[0, 1]`.
    pub probability: f64,
    /// Unclamped ratio in log2 form.
    pub log2_ratio: f64,
    /// `1 − log2((1 + δ²)² / (1 + δ⁴))`.
    pub rate_threshold: f64,
    pub rate: f64,
}

impl ChebyshevTail {
    /// `k/n` is below the rate threshold.
    pub fn below_threshold(&self) -> bool {
        self.rate < self.rate_threshold
    }

    /// The ratio scales as `2^{n (threshold − k/n)}`, so it shrinks
    /// exponentially in `n` exactly when the rate exceeds the threshold.
    pub fn decays(&self) -> bool {
        self.rate > self.rate_threshold
    }
}

pub fn chebyshev_tail(p: &RandomCodeParams, eps: f64) -> Result<ChebyshevTail> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParams(format!("ε must be positive, got {eps}")));
    }
    let d2 = p.delta * p.delta;
    let rate_threshold = 1.0 - (2.0 * d2.ln_1p() - (d2 * d2).ln_1p()) / LN_2;
    let rate = p.k as f64 / p.n as f64;
    let var = variance_bound_l2_sq(p).log2;
    let mean = expected_l2_sq(p).log2;
    let log2_ratio = var - 2.0 * (eps.log2() + mean);
    // δ = 0 makes Z ≡ 0 and the tail event certain only in the degenerate
    // sense 0 ≥ 0; the deviation probability is 0.
    let probability = if p.delta == 0.0 || log2_ratio.is_nan() {
        0.0
    } else {
        log2_ratio.exp2().clamp(0.0, 1.0)
    };
    Ok(ChebyshevTail {
        probability,
        log2_ratio: if p.delta == 0.0 { f64::NEG_INFINITY } else { log2_ratio },
        rate_threshold,
        rate,
    })
}

/// `E[A_j] = 2^{k−n} C(n, j)` for `j ≥ 1`.
pub fn expected_weight(n: usize, k: usize, j: usize) -> f64 {
    if j == 0 || j > n {
        return 0.0;
    }
    let ln_binom: f64 = (0..j).map(|i| ((n - i) as f64 / (j - i) as f64).ln()).sum();
    (ln_binom / LN_2 + k as f64 - n as f64).exp2()
}

/// Sample statistics of `Z` and of the weight counts `A_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloSummary {
    pub samples: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator; 0 for one sample).
    pub stddev: f64,
    pub stderr: f64,
    /// Mean `A_j`, indexed by `j = 0..=n`.
    pub weight_means: Vec<f64>,
    pub weight_stderrs: Vec<f64>,
    /// Fraction of sampled codes whose dimension differed from `k`.
    pub dimension_mismatch_fraction: f64,
}

struct Sample {
    z: f64,
    weights: Vec<u64>,
    dim: usize,
}

fn draw(p: &RandomCodeParams, index: u64) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(index);
    let code = match p.ensemble {
        Ensemble::Generator => Some(GeneratorMatrix::random(p.k, p.n, &mut rng)),
        Ensemble::ParityCheck if p.k == p.n => Some(GeneratorMatrix::identity(p.n)),
        Ensemble::ParityCheck => GeneratorMatrix::random(p.n - p.k, p.n, &mut rng).null_space(),
    };
    let Some(code) = code else {
        return Ok(Sample {
            z: 0.0,
            weights: {
                let mut w = vec![0; p.n + 1];
                w[0] = 1;
                w
            },
            dim: 0,
        });
    };
    let weights = code.span_weight_counts(MAX_SAMPLE_N)?;
    let dim = code.rank();
    let dist = WeightDistribution::from_matrix(&code, MAX_SAMPLE_N)?;
    let poly = WeightPolynomial::new(&dist);
    let z = (poly.ln_eval_minus_one(2.0 * p.delta.ln()) / LN_2 - dim as f64).exp2();
    Ok(Sample { z, weights, dim })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64, f64) {
    let c = count as f64;
    let mean = values.clone().sum::<f64>() / c;
    if count < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (c - 1.0);
    let sd = var.sqrt();
    (mean, sd, sd / c.sqrt())
}

/// Draws `samples` codes. Each draw has its own ChaCha stream keyed by the
/// sample index, and reductions run in index order, so the result does not
/// depend on the number of worker threads.
pub fn monte_carlo_l2_sq(p: &RandomCodeParams) -> Result<MonteCarloSummary> {
    if p.samples == 0 {
        return Err(Error::InvalidParams("at least one sample is required".into()));
    }
    if p.n > MAX_SAMPLE_N {
        return Err(Error::InputTooLarge { what: "n", value: p.n, limit: MAX_SAMPLE_N });
    }
    if p.k > MAX_SAMPLE_K {
        return Err(Error::InputTooLarge { what: "k", value: p.k, limit: MAX_SAMPLE_K });
    }
    let draws = (0..p.samples as u64)
        .into_par_iter()
        .map(|i| draw(p, i))
        .collect::<Result<Vec<_>>>()?;

    let (mean, stddev, stderr) = mean_and_stderr(draws.iter().map(|s| s.z), draws.len());
    let (weight_means, weight_stderrs) = (0..=p.n)
        .map(|j| {
            let (m, _, se) = mean_and_stderr(draws.iter().map(|s| s.weights[j] as f64), draws.len());
            (m, se)
        })
        .unzip();
    let mismatched = draws.iter().filter(|s| s.dim != p.k).count();
    Ok(MonteCarloSummary {
        samples: p.samples,
        mean,
        stddev,
        stderr,
        weight_means,
        weight_stderrs,
        dimension_mismatch_fraction: mismatched as f64 / draws.len() as f64,
    })
}
