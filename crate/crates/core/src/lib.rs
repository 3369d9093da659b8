//! Security bounds for linear TRNG correctors `Y = G·X` over GF(2).
//!
//! Under independent input bits with biases bounded by `δ`, the output
//! distance from uniform is governed by the weight enumerator
//! `W(x) = Σ A_w x^w` of the row space of `G`:
//!
//! * `‖P_Y‖_∞ = 2^{-rank} W(δ)`
//! * `‖P_Y − U‖_2 = sqrt(2^{-rank} (W(δ²) − 1))`
//! * `(W(δ²) − 1) / W(δ) ≤ ‖P_Y − U‖_1 ≤ sqrt(W(δ²) − 1)` for full-rank `G`
//!
//! The [`oracle`] module computes exact output distributions by brute force
//! so every closed form can be checked on small instances.

pub mod bounds;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod polyeval;
pub mod randomcodes;
pub mod scanner;
pub mod weights;

pub use error::{Error, Result};
pub use gf2::{reed_muller_generator, BitVec, Codeword, GeneratorMatrix};
pub use weights::WeightDistribution;
