//! Exact output distributions of `Y = G·X` for small `n` and `k`, computed
//! independently of the weight enumerator.
//!
//! Two routes are available: direct enumeration of the `2^n` inputs, and the
//! Fourier expansion `P(y) = 2^{-k} Σ_S b(S) (−1)^{<c_S, x>}` where `c_S` is
//! the codeword of `S`, `b(S) = Π_{i ∈ supp c_S} δ_i` and `x` is any
//! preimage of `y`.

use crate::bounds::BiasModel;
use crate::error::{Error, Result};
use crate::gf2::{gray, BitVec, GeneratorMatrix};

/// Largest `n` accepted by direct enumeration and largest `k` overall.
pub const MAX_ORACLE_BITS: usize = 24;
/// Up to this `k` the Fourier route sums the series literally for every
/// output; above it a fast Walsh–Hadamard transform is used.
pub const LITERAL_FOURIER_MAX_K: usize = 10;
/// Agreement required between the direct ℓ2² and its Plancherel counterpart.
pub const PLANCHEREL_TOLERANCE: f64 = 1e-10;

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// `P(Y = y)` for every `y ∈ {0,1}^k`, indexed by `y` read as an integer
/// with output bit `i` at position `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    k: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, y: u64) -> f64 {
        self.probs[y as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<Neumaier>().total()
    }
}

fn check_k(g: &GeneratorMatrix) -> Result<()> {
    if g.k() > MAX_ORACLE_BITS {
        return Err(Error::InputTooLarge {
            what: "k",
            value: g.k(),
            limit: MAX_ORACLE_BITS,
        });
    }
    Ok(())
}

/// Probabilities `(P(x_i = 0), P(x_i = 1))` for each input bit.
fn bit_probs(bias: &BiasModel, n: usize) -> Result<Vec<(f64, f64)>> {
    Ok(bias
        .deltas(n)?
        .into_iter()
        .map(|d| ((1.0 + d) / 2.0, (1.0 - d) / 2.0))
        .collect())
}

/// Exhaustive sum over all `2^n` inputs, split into two half tables of
/// `(probability, partial output)` pairs.
pub fn exact_distribution_direct(g: &GeneratorMatrix, bias: &BiasModel) -> Result<ExactDistribution> {
    check_k(g)?;
    if g.n() > MAX_ORACLE_BITS {
        return Err(Error::InputTooLarge {
            what: "n",
            value: g.n(),
            limit: MAX_ORACLE_BITS,
        });
    }
    let n = g.n();
    let p = bit_probs(bias, n)?;
    let cols: Vec<u64> = (0..n).map(|j| g.column(j)).collect();
    let half = |range: std::ops::Range<usize>| -> Vec<(f64, u64)> {
        let bits = range.len();
        (0u64..1 << bits)
            .map(|mask| {
                let mut prob = 1.0;
                let mut y = 0u64;
                for (t, j) in range.clone().enumerate() {
                    if mask >> t & 1 == 1 {
                        prob *= p[j].1;
                        y ^= cols[j];
                    } else {
                        prob *= p[j].0;
                    }
                }
                (prob, y)
            })
            .collect()
    };
    let lo = half(0..n / 2);
    let hi = half(n / 2..n);
    let mut acc = vec![Neumaier::default(); 1 << g.k()];
    for &(ph, yh) in &hi {
        for &(pl, yl) in &lo {
            acc[(yh ^ yl) as usize].add(ph * pl);
        }
    }
    Ok(ExactDistribution {
        k: g.k(),
        probs: acc.iter().map(Neumaier::total).collect(),
    })
}

/// Solves `G·x = y` using a column echelon basis built once per generator.
/// Each basis vector remembers which input bits combine into it.
pub struct PreimageSolver {
    n: usize,
    basis: Vec<(u32, u64, BitVec)>,
}

impl PreimageSolver {
    pub fn new(g: &GeneratorMatrix) -> Self {
        let n = g.n();
        let mut basis: Vec<(u32, u64, BitVec)> = Vec::new();
        for j in 0..n {
            let mut v = g.column(j);
            let mut combo = BitVec::zeros(n);
            combo.set(j, true);
            for (p, bv, bc) in &basis {
                if v >> p & 1 == 1 {
                    v ^= bv;
                    combo.xor_assign(bc);
                }
            }
            if v != 0 {
                basis.push((v.trailing_zeros(), v, combo));
            }
        }
        Self { n, basis }
    }

    /// Some `x` with `G·x = y`, or `None` when `y` is outside the image.
    pub fn solve(&self, y: u64) -> Option<BitVec> {
        let mut v = y;
        let mut x = BitVec::zeros(self.n);
        for (p, bv, bc) in &self.basis {
            if v >> p & 1 == 1 {
                v ^= bv;
                x.xor_assign(bc);
            }
        }
        (v == 0).then_some(x)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Fourier biases `b(S)` indexed by the subset mask `S`, optionally with
/// the codewords `c_S` themselves.
fn fourier_biases(g: &GeneratorMatrix, deltas: &[f64], keep_words: bool) -> (Vec<BitVec>, Vec<f64>) {
    let size = 1usize << g.k();
    let mut words = if keep_words { vec![BitVec::zeros(g.n()); size] } else { Vec::new() };
    let mut b = vec![0.0; size];
    b[0] = 1.0;
    let mut c = BitVec::zeros(g.n());
    for step in 1..size as u64 {
        c.xor_assign(&g.rows()[step.trailing_zeros() as usize]);
        let s = gray(step) as usize;
        b[s] = c.iter_ones().map(|i| deltas[i]).product();
        if keep_words {
            words[s] = c.clone();
        }
    }
    (words, b)
}

/// Fourier route. Outputs outside the image of `G` get probability 0.
pub fn exact_distribution_fourier(g: &GeneratorMatrix, bias: &BiasModel) -> Result<ExactDistribution> {
    check_k(g)?;
    if g.k() <= LITERAL_FOURIER_MAX_K {
        fourier_literal(g, bias)
    } else {
        fourier_transform(g, bias)
    }
}

pub(crate) fn fourier_literal(g: &GeneratorMatrix, bias: &BiasModel) -> Result<ExactDistribution> {
    let deltas = bias.deltas(g.n())?;
    let (words, b) = fourier_biases(g, &deltas, true);
    let solver = PreimageSolver::new(g);
    let scale = (-(g.k() as f64)).exp2();
    let probs = (0u64..1 << g.k())
        .map(|y| match solver.solve(y) {
            None => 0.0,
            Some(x) => {
                let sum: Neumaier = words
                    .iter()
                    .zip(&b)
                    .map(|(c, bs)| if c.dot(&x) { -bs } else { *bs })
                    .collect();
                scale * sum.total()
            }
        })
        .collect();
    Ok(ExactDistribution { k: g.k(), probs })
}

pub(crate) fn fourier_transform(g: &GeneratorMatrix, bias: &BiasModel) -> Result<ExactDistribution> {
    let deltas = bias.deltas(g.n())?;
    let (_, mut b) = fourier_biases(g, &deltas, false);
    // (−1)^{<c_S, x>} = (−1)^{<S, G x>} = (−1)^{<S, y>}, so P = 2^{-k} WHT(b)
    walsh_hadamard(&mut b);
    let scale = (-(g.k() as f64)).exp2();
    let solver = PreimageSolver::new(g);
    let full = solver.rank() == g.k();
    let probs = b
        .into_iter()
        .enumerate()
        .map(|(y, v)| {
            if full || solver.solve(y as u64).is_some() {
                scale * v
            } else {
                0.0
            }
        })
        .collect();
    Ok(ExactDistribution { k: g.k(), probs })
}

/// In-place unnormalised Walsh–Hadamard transform,
/// `F(S) = Σ_y f(y) (−1)^{popcount(S & y)}`. Length must be a power of two.
pub fn walsh_hadamard(f: &mut [f64]) {
    assert!(f.len().is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < f.len() {
        for block in f.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, t) = (*x + *y, *x - *y);
                *x = s;
                *y = t;
            }
        }
        h *= 2;
    }
}

/// Distances of an exact distribution from uniform on `{0,1}^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactNorms {
    pub linf: f64,
    pub l2: f64,
    pub l1: f64,
    pub tv: f64,
    /// `‖P − U‖₂²` recomputed as `2^k Σ_{S≠∅} f̂(S)²`.
    pub plancherel_l2_sq: f64,
}

/// Computes the norms and cross-checks ℓ2 against Plancherel.
pub fn exact_norms(dist: &ExactDistribution) -> Result<ExactNorms> {
    let u = (-(dist.k as f64)).exp2();
    let linf = dist.probs.iter().fold(0.0f64, |m, &p| m.max(p));
    let l1: Neumaier = dist.probs.iter().map(|p| (p - u).abs()).collect();
    let l2_sq: Neumaier = dist.probs.iter().map(|p| (p - u) * (p - u)).collect();

    let mut coeffs = dist.probs.clone();
    walsh_hadamard(&mut coeffs);
    // f̂(S) = F(S) / 2^k, so 2^k Σ f̂² = 2^{-k} Σ F²
    let planch: Neumaier = coeffs.iter().skip(1).map(|c| c * c).collect();
    let plancherel_l2_sq = u * planch.total();

    let l2_sq = l2_sq.total();
    if (l2_sq - plancherel_l2_sq).abs() > PLANCHEREL_TOLERANCE {
        return Err(Error::InternalCheck(format!(
            "ℓ2² = {l2_sq:e} but Plancherel gives {plancherel_l2_sq:e}"
        )));
    }
    let l1 = l1.total();
    Ok(ExactNorms {
        linf,
        l2: l2_sq.sqrt(),
        l1,
        tv: l1 / 2.0,
        plancherel_l2_sq,
    })
}

/// Input `x*` with each bit set to its more likely value; `G·x*` attains
/// the maximum output probability under a product distribution.
pub fn linf_maximizer(g: &GeneratorMatrix, bias: &BiasModel) -> Result<u64> {
    let deltas = bias.deltas(g.n())?;
    let x: Vec<bool> = deltas.iter().map(|d| *d < 0.0).collect();
    Ok(g.apply(&BitVec::from_bools(&x)))
}

/// Outcome of checking that a rank-deficient corrector is far from uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankDeficiencyCheck {
    pub k: usize,
    pub rank: usize,
    pub tv: f64,
    /// `TV ≥ 1/2`, the distance any distribution supported on half the
    /// outputs keeps from uniform.
    pub passed: bool,
}

/// Exact total-variation distance of a rank-deficient corrector's output.
pub fn check_rank_deficiency_claim(g: &GeneratorMatrix, bias: &BiasModel) -> Result<RankDeficiencyCheck> {
    let rank = g.rank();
    if rank == g.k() {
        return Err(Error::NotRankDeficient { rank });
    }
    let dist = exact_distribution_fourier(g, bias)?;
    let norms = exact_norms(&dist)?;
    Ok(RankDeficiencyCheck {
        k: g.k(),
        rank,
        tv: norms.tv,
        passed: norms.tv >= 0.5 - 1e-12,
    })
}
