//! Security bounds for `Y = G·X` with independent input bits of bias at
//! most `δ`, all expressed through the weight enumerator `W` of `rowspan(G)`.
//!
//! Every quantity is computed as a base-2 logarithm first; the linear value
//! is derived from it. Security bits are `-log2` of the ℓ1 upper bound.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::polyeval::{DeltaGrid, WeightPolynomial};
use crate::weights::WeightDistribution;

/// Input bias specification. `δ_i = 1 − 2 p_i` where `p_i = P(X_i = 1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum BiasModel {
    /// Every bit has bias exactly `δ ≥ 0`.
    Uniform(f64),
    /// Signed per-bit biases.
    PerBit(Vec<f64>),
}

impl BiasModel {
    pub fn uniform(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self::Uniform(delta))
    }

    pub fn per_bit(deltas: Vec<f64>) -> Result<Self> {
        if let Some(d) = deltas.iter().find(|d| !(-1.0..=1.0).contains(*d)) {
            return Err(Error::InvalidParams(format!(
                "per-bit bias {d} outside [-1, 1]"
            )));
        }
        Ok(Self::PerBit(deltas))
    }

    /// The `n` signed biases this model assigns to a length-`n` input.
    pub fn deltas(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            BiasModel::Uniform(d) => Ok(vec![*d; n]),
            BiasModel::PerBit(v) if v.len() == n => Ok(v.clone()),
            BiasModel::PerBit(v) => Err(Error::InvalidParams(format!(
                "per-bit bias vector has length {}, generator has n = {n}",
                v.len()
            ))),
        }
    }

    /// Largest `|δ_i|`.
    pub fn max_magnitude(&self) -> f64 {
        match self {
            BiasModel::Uniform(d) => d.abs(),
            BiasModel::PerBit(v) => v.iter().fold(0.0, |m, d| m.max(d.abs())),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "bias magnitude {delta} outside [0, 1]"
        )))
    }
}

/// A nonnegative quantity in linear and base-2 log form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub log2: f64,
}

impl BoundValue {
    pub fn from_log2(log2: f64) -> Self {
        let value = log2.exp2();
        Self {
            value: if value.is_finite() { value } else { f64::MAX },
            log2,
        }
    }

    /// `-log2`, i.e. `s` such that the bound equals `2^{-s}`.
    pub fn security_bits(&self) -> f64 {
        -self.log2
    }
}

/// Denominator used for the ℓ1 lower bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LowerBoundForm {
    /// `(W(δ²) − 1) / W(δ)`, from `‖x‖₁ ≥ ‖x‖₂² / ‖x‖_∞` with
    /// `‖P_Y − U‖_∞ ≤ 2^{-k} W(δ)`.
    #[default]
    Conservative,
    /// `(W(δ²) − 1) / (W(δ) − 1)`.
    Sharp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Bounds {
    pub lower: BoundValue,
    pub upper: BoundValue,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorBounds {
    /// Sum of nonzero Fourier biases, `W(δ) − 1`.
    pub l1: BoundValue,
    /// Largest nonzero Fourier bias, `δ^d`.
    pub linf_bias: BoundValue,
}

/// All bounds at one bias level.
#[derive(Clone, Debug, PartialEq)]
pub struct SecurityReport {
    pub delta: f64,
    pub linf_norm: BoundValue,
    pub l2_dist: BoundValue,
    pub l1_lower: BoundValue,
    pub l1_upper: BoundValue,
    pub prior_l1: BoundValue,
    pub prior_linf_bias: BoundValue,
    pub lower_form: LowerBoundForm,
    /// Computed from a truncated weight table: every value is an
    /// underestimate of the true bound.
    pub partial: bool,
}

impl SecurityReport {
    pub fn security_bits(&self) -> f64 {
        self.l1_upper.security_bits()
    }

    /// Total-variation form of the ℓ1 upper bound.
    pub fn tv_upper(&self) -> f64 {
        self.l1_upper.value / 2.0
    }
}

/// Log-domain evaluation at a single `δ`, shared by the scalar entry points.
struct Point {
    log2_w: f64,
    log2_w_minus_1: f64,
    log2_w_sq_minus_1: f64,
}

fn point(dist: &WeightDistribution, delta: f64) -> Result<Point> {
    check_delta(delta)?;
    let poly = WeightPolynomial::new(dist);
    let ln_d = delta.ln();
    Ok(Point {
        log2_w: poly.ln_eval(ln_d) / LN_2,
        log2_w_minus_1: poly.ln_eval_minus_one(ln_d) / LN_2,
        log2_w_sq_minus_1: poly.ln_eval_minus_one(2.0 * ln_d) / LN_2,
    })
}

fn require_full_rank(dist: &WeightDistribution) -> Result<()> {
    if dist.is_full_rank() {
        Ok(())
    } else {
        Err(Error::RankDeficient {
            rows: dist.rows(),
            rank: dist.rank(),
        })
    }
}

/// Largest output probability over inputs with `|bias| ≤ δ`:
/// `2^{-rank} W(δ)`.
pub fn linf_norm(dist: &WeightDistribution, delta: f64) -> Result<BoundValue> {
    let p = point(dist, delta)?;
    Ok(BoundValue::from_log2(p.log2_w - dist.rank() as f64))
}

/// Largest ℓ2 distance to uniform: `sqrt(2^{-rank} (W(δ²) − 1))`.
pub fn l2_distance(dist: &WeightDistribution, delta: f64) -> Result<BoundValue> {
    let p = point(dist, delta)?;
    Ok(BoundValue::from_log2(
        0.5 * (p.log2_w_sq_minus_1 - dist.rank() as f64),
    ))
}

/// ℓ1 sandwich for a full-rank corrector.
pub fn l1_bounds(dist: &WeightDistribution, delta: f64, form: LowerBoundForm) -> Result<L1Bounds> {
    require_full_rank(dist)?;
    let p = point(dist, delta)?;
    Ok(l1_from_logs(p.log2_w, p.log2_w_minus_1, p.log2_w_sq_minus_1, form))
}

fn l1_from_logs(
    log2_w: f64,
    log2_w_minus_1: f64,
    log2_w_sq_minus_1: f64,
    form: LowerBoundForm,
) -> L1Bounds {
    let upper = 0.5 * log2_w_sq_minus_1;
    let lower = match form {
        LowerBoundForm::Conservative => log2_w_sq_minus_1 - log2_w,
        // 0/0 at δ = 0: the distance is zero there
        LowerBoundForm::Sharp if log2_w_minus_1 == f64::NEG_INFINITY => f64::NEG_INFINITY,
        LowerBoundForm::Sharp => log2_w_sq_minus_1 - log2_w_minus_1,
    };
    L1Bounds {
        lower: BoundValue::from_log2(lower.min(upper)),
        upper: BoundValue::from_log2(upper),
    }
}

/// Earlier bounds: `Σ_{S≠∅} |bias| = W(δ) − 1` and `max_{S≠∅} |bias| = δ^d`.
pub fn prior_bounds(dist: &WeightDistribution, delta: f64) -> Result<PriorBounds> {
    let d = dist.min_distance().ok_or(Error::EmptyCode)?;
    let p = point(dist, delta)?;
    Ok(prior_from_logs(p.log2_w_minus_1, d, delta))
}

fn prior_from_logs(log2_w_minus_1: f64, d: usize, delta: f64) -> PriorBounds {
    PriorBounds {
        l1: BoundValue::from_log2(log2_w_minus_1),
        linf_bias: BoundValue::from_log2(d as f64 * delta.log2()),
    }
}

/// One [`SecurityReport`] per grid point, from two log-terms matrices
/// (arguments `δ` and `δ²`).
pub fn report(
    dist: &WeightDistribution,
    grid: &DeltaGrid,
    form: LowerBoundForm,
) -> Result<Vec<SecurityReport>> {
    require_full_rank(dist)?;
    let d = dist.min_distance().ok_or(Error::EmptyCode)?;
    let poly = WeightPolynomial::new(dist);
    let ln_d = grid.ln_values();
    let ln_d_sq: Vec<f64> = ln_d.iter().map(|l| 2.0 * l).collect();
    let at_delta = poly.terms(&ln_d);
    let at_delta_sq = poly.terms(&ln_d_sq);
    let ln_w = at_delta.ln_w();
    let ln_w_m1 = at_delta.ln_w_minus_one();
    let ln_w_sq_m1 = at_delta_sq.ln_w_minus_one();
    let rank = dist.rank() as f64;

    Ok(grid
        .values()
        .iter()
        .enumerate()
        .map(|(j, &delta)| {
            let log2_w = ln_w[j] / LN_2;
            let log2_w_m1 = ln_w_m1[j] / LN_2;
            let log2_w_sq_m1 = ln_w_sq_m1[j] / LN_2;
            let l1 = l1_from_logs(log2_w, log2_w_m1, log2_w_sq_m1, form);
            let prior = prior_from_logs(log2_w_m1, d, delta);
            SecurityReport {
                delta,
                linf_norm: BoundValue::from_log2(log2_w - rank),
                l2_dist: BoundValue::from_log2(0.5 * (log2_w_sq_m1 - rank)),
                l1_lower: l1.lower,
                l1_upper: l1.upper,
                prior_l1: prior.l1,
                prior_linf_bias: prior.linf_bias,
                lower_form: form,
                partial: dist.is_partial(),
            }
        })
        .collect())
}

/// Security bits `-0.5 log2(W(δ²) − 1)` of the ℓ1 upper bound at `δ`.
pub fn security_at(dist: &WeightDistribution, delta: f64) -> Result<f64> {
    let p = point(dist, delta)?;
    Ok(-0.5 * p.log2_w_sq_minus_1)
}

const SOLVER_MAX_ITERATIONS: usize = 200;
/// Bracket width in `ln δ`, i.e. relative resolution in `δ`.
const SOLVER_LN_TOLERANCE: f64 = 1e-12;

/// Largest `δ ∈ [0, 1]` whose ℓ1 upper bound `sqrt(W(δ²) − 1)` is at most
/// `2^{-s}`.
///
/// Bisection runs on `ln δ`, where the objective is smooth and monotone. The
/// bracket starts from the dominant-term estimate `(2^{-2s} / A_d)^{1/2d}`
/// and widens downwards until feasible, so targets far below `δ = 1e-12`
/// are still resolved. The returned `δ` is always on the feasible side.
/// Targets `s ≤ 0` are met by every bias and return 1.
pub fn max_bias_for_security(dist: &WeightDistribution, security_bits: f64) -> Result<f64> {
    if dist.is_partial() {
        return Err(Error::PartialDistribution(
            "a truncated weight table understates W and would overstate the tolerable bias",
        ));
    }
    require_full_rank(dist)?;
    if security_bits.is_nan() || security_bits == f64::INFINITY {
        return Err(Error::InvalidParams(format!(
            "security target must be finite, got {security_bits}"
        )));
    }
    let d = dist
        .min_distance()
        .ok_or_else(|| Error::TargetUnreachable("the zero code has no bias to bound".into()))?;
    if security_bits <= 0.0 {
        return Ok(1.0);
    }
    let poly = WeightPolynomial::new(dist);
    // ln sqrt(W(δ²) − 1) + s ln 2, increasing in ln δ
    let excess = |ln_delta: f64| 0.5 * poly.ln_eval_minus_one(2.0 * ln_delta) + security_bits * LN_2;

    let mut hi = 0.0;
    if excess(hi) <= 0.0 {
        return Ok(1.0);
    }
    let ln_a_d = dist.log_counts()[1].1;
    let estimate = (-2.0 * security_bits * LN_2 - ln_a_d) / (2.0 * d as f64);
    let mut lo = estimate.min(0.0) - 1.0;
    let mut step = 1.0;
    while excess(lo) > 0.0 {
        hi = lo;
        step *= 2.0;
        lo -= step;
    }
    if excess(estimate.min(0.0)) > 0.0 {
        hi = hi.min(estimate.min(0.0));
    }
    for _ in 0..SOLVER_MAX_ITERATIONS {
        if hi - lo <= SOLVER_LN_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}
