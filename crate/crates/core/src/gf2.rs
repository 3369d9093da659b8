//! Binary linear algebra for correctors `Y = G·X`.
//!
//! Rows are packed into `u64` words; bit `j` of a row lives in word `j / 64`
//! at position `j % 64`. Rank and span computations run on a row-reduced
//! basis, and the span is walked in Gray-code order so that consecutive
//! codewords differ by exactly one basis vector.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest rank whose span is enumerated by default (2^28 codewords).
pub const DEFAULT_ENUMERATION_LIMIT: usize = 28;

/// Hard ceiling for any enumeration limit; span indices are `u64`.
pub const MAX_ENUMERATION_LIMIT: usize = 62;

/// Spans at or below this rank are counted on a single thread.
const SERIAL_SPAN_BITS: usize = 16;

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                v.set(j, true);
            }
        }
        v
    }

    /// Builds a vector from the low `len` bits of `value` (`len <= 64`).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits, got {len}");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = value & low_mask(len);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range (len={})", self.len);
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.len, "bit index {j} out of range (len={})", self.len);
        let mask = 1u64 << (j % 64);
        if value {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// Index of the lowest set bit.
    pub fn lowest_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * 64 + bit)
            })
        })
    }

    /// The vector as an integer, bit `j` at position `j` (`len <= 64`).
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 on a {}-bit vector", self.len);
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// A codeword together with its Hamming weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    bits: BitVec,
    weight: usize,
}

impl Codeword {
    pub fn new(bits: BitVec) -> Self {
        let weight = bits.weight();
        Self { bits, weight }
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn into_bits(self) -> BitVec {
        self.bits
    }
}

/// A `k × n` generator matrix over GF(2). Rows may be linearly dependent
/// and `k` may exceed `n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GeneratorMatrix {
    rows: Vec<BitVec>,
    n: usize,
}

impl GeneratorMatrix {
    pub fn new(rows: Vec<BitVec>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidParams("generator needs at least one row".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidParams("generator rows must be non-empty".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch {
                line: i + 1,
                expected: n,
                found: r.len(),
            });
        }
        Ok(Self { rows, n })
    }

    /// Convenience constructor from `'0'/'1'` strings, one per row.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let mut text = rows.join("\n");
        text.push('\n');
        text.parse()
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| {
                let mut r = BitVec::zeros(k);
                r.set(i, true);
                r
            })
            .collect();
        Self::new(rows).expect("identity of positive size")
    }

    /// The single-row all-ones generator: output is the parity of all inputs.
    pub fn parity(n: usize) -> Self {
        Self::new(vec![BitVec::from_bools(&vec![true; n])]).expect("parity of positive length")
    }

    /// A `k × n` matrix with i.i.d. uniform entries.
    pub fn random<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Self {
        let rows = (0..k)
            .map(|_| {
                let mut r = BitVec::zeros(n);
                let full = n / 64;
                for w in 0..r.words.len() {
                    let word: u64 = rng.random();
                    r.words[w] = if w < full { word } else { word & low_mask(n % 64) };
                }
                r
            })
            .collect();
        Self::new(rows).expect("random matrix of positive size")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    /// A linearly independent basis of the row space in echelon form
    /// (distinct lowest-set-bit pivots).
    pub fn basis(&self) -> Vec<BitVec> {
        let mut basis: Vec<(usize, BitVec)> = Vec::new();
        for row in &self.rows {
            let mut v = row.clone();
            for (pivot, b) in &basis {
                if v.get(*pivot) {
                    v.xor_assign(b);
                }
            }
            if let Some(p) = v.lowest_one() {
                basis.push((p, v));
            }
        }
        basis.into_iter().map(|(_, b)| b).collect()
    }

    /// Dimension of the row space.
    pub fn rank(&self) -> usize {
        self.basis().len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.k()
    }

    /// Walks every codeword of the row space once, zero codeword first.
    pub fn rowspan(&self, enumeration_limit: usize) -> Result<RowSpan> {
        let basis = self.basis();
        check_limit(basis.len(), enumeration_limit)?;
        Ok(RowSpan::new(basis, self.n))
    }

    /// Histogram of codeword weights over the row space (index = weight).
    pub fn span_weight_counts(&self, enumeration_limit: usize) -> Result<Vec<u64>> {
        let basis = self.basis();
        check_limit(basis.len(), enumeration_limit)?;
        Ok(span_weight_counts(&basis, self.n))
    }

    /// Column `j` packed as an integer: bit `i` is `G[i][j]` (`k <= 64`).
    pub fn column(&self, j: usize) -> u64 {
        assert!(self.k() <= 64, "column packing needs k <= 64");
        self.rows
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, r)| acc | (u64::from(r.get(j)) << i))
    }

    /// `G·x` as an integer, output bit `i` at position `i` (`k <= 64`).
    pub fn apply(&self, x: &BitVec) -> u64 {
        assert!(self.k() <= 64, "apply needs k <= 64");
        self.rows
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, r)| acc | (u64::from(r.dot(x)) << i))
    }

    /// Basis of `{x : G·x = 0}` as the rows of a new matrix, or `None` when
    /// the kernel is trivial. Reading `self` as a parity-check matrix, the
    /// result generates the code it defines.
    pub fn null_space(&self) -> Option<GeneratorMatrix> {
        let n = self.n;
        // Reduced row echelon form with pivots on the lowest set bit.
        let mut rref: Vec<(usize, BitVec)> = Vec::new();
        for row in &self.rows {
            let mut v = row.clone();
            for (p, b) in &rref {
                if v.get(*p) {
                    v.xor_assign(b);
                }
            }
            if let Some(p) = v.lowest_one() {
                for (_, b) in rref.iter_mut() {
                    if b.get(p) {
                        b.xor_assign(&v);
                    }
                }
                rref.push((p, v));
            }
        }
        let pivots: Vec<usize> = rref.iter().map(|(p, _)| *p).collect();
        let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
        if free.is_empty() {
            return None;
        }
        let rows = free
            .iter()
            .map(|&f| {
                let mut v = BitVec::zeros(n);
                v.set(f, true);
                for (p, b) in &rref {
                    if b.get(f) {
                        v.set(*p, true);
                    }
                }
                v
            })
            .collect();
        Some(GeneratorMatrix::new(rows).expect("kernel rows share length n"))
    }

    /// Text form: one `0`/`1` line per row, trailing newline.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.k() * (self.n + 1));
        for r in &self.rows {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for GeneratorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GeneratorMatrix {}x{}", self.k(), self.n)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

impl FromStr for GeneratorMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_generator(text)
    }
}

/// Parses the generator file format: one row per line of `0`/`1`
/// characters, `#` comment lines and blank lines ignored.
pub fn parse_generator(text: &str) -> Result<GeneratorMatrix> {
    let mut rows: Vec<BitVec> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut bits = Vec::with_capacity(line.len());
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::parse(
                        line_no,
                        col + 1,
                        format!("unexpected character {other:?}, expected '0' or '1'"),
                    ))
                }
            }
        }
        match width {
            None => width = Some(bits.len()),
            Some(w) if w != bits.len() => {
                return Err(Error::DimensionMismatch {
                    line: line_no,
                    expected: w,
                    found: bits.len(),
                })
            }
            Some(_) => {}
        }
        rows.push(BitVec::from_bools(&bits));
    }
    if rows.is_empty() {
        return Err(Error::parse(1, 1, "generator file contains no rows"));
    }
    GeneratorMatrix::new(rows)
}

/// Generator of the Reed-Muller code RM(r, m): evaluations of all monomials
/// of degree at most `r` in `m` variables over the points of F_2^m.
///
/// Rows are ordered by degree, then lexicographically by variable set.
/// Column `j` is the point whose `i`-th coordinate is bit `i` of `j`.
pub fn reed_muller_generator(r: usize, m: usize) -> Result<GeneratorMatrix> {
    if m == 0 {
        return Err(Error::InvalidParams("Reed-Muller needs m >= 1".into()));
    }
    if r > m {
        return Err(Error::InvalidParams(format!(
            "Reed-Muller order r = {r} exceeds m = {m}"
        )));
    }
    if m > 20 {
        return Err(Error::InvalidParams(format!(
            "Reed-Muller length 2^{m} is too large"
        )));
    }
    let n = 1usize << m;
    let mut rows = Vec::new();
    for degree in 0..=r {
        for vars in combinations(m, degree) {
            let mask = vars.iter().fold(0usize, |acc, &v| acc | (1 << v));
            let mut row = BitVec::zeros(n);
            for point in 0..n {
                if point & mask == mask {
                    row.set(point, true);
                }
            }
            rows.push(row);
        }
    }
    GeneratorMatrix::new(rows)
}

/// All `size`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..size).collect();
    if size > m {
        return out;
    }
    loop {
        out.push(current.clone());
        let Some(i) = (0..size).rev().find(|&i| current[i] != i + m - size) else {
            break;
        };
        current[i] += 1;
        for j in i + 1..size {
            current[j] = current[j - 1] + 1;
        }
    }
    out
}

fn check_limit(rank: usize, limit: usize) -> Result<()> {
    let limit = limit.min(MAX_ENUMERATION_LIMIT);
    if rank > limit {
        Err(Error::RankTooLarge { rank, limit })
    } else {
        Ok(())
    }
}

/// Binary-reflected Gray code of `i`.
#[inline]
pub fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Gray-code walk over the span of an independent basis.
#[derive(Clone, Debug)]
pub struct RowSpan {
    basis: Vec<BitVec>,
    current: BitVec,
    step: u64,
    total: u64,
}

impl RowSpan {
    fn new(basis: Vec<BitVec>, n: usize) -> Self {
        let total = 1u64 << basis.len();
        Self {
            basis,
            current: BitVec::zeros(n),
            step: 0,
            total,
        }
    }

    /// Number of codewords the walk produces (`2^rank`).
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for RowSpan {
    type Item = Codeword;

    fn next(&mut self) -> Option<Codeword> {
        if self.step >= self.total {
            return None;
        }
        if self.step > 0 {
            let flip = self.step.trailing_zeros() as usize;
            self.current.xor_assign(&self.basis[flip]);
        }
        self.step += 1;
        Some(Codeword::new(self.current.clone()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.step) as usize;
        (left, Some(left))
    }
}

/// Weight histogram of the span of an independent `basis` of length-`n`
/// vectors. Large spans are split into Gray-code chunks counted in parallel;
/// integer merging keeps the result independent of scheduling.
pub fn span_weight_counts(basis: &[BitVec], n: usize) -> Vec<u64> {
    let rank = basis.len();
    let chunk_bits = rank.min(SERIAL_SPAN_BITS);
    let chunks = 1u64 << (rank - chunk_bits);
    let chunk_len = 1u64 << chunk_bits;

    let count_chunk = |c: u64| -> Vec<u64> {
        let start = c * chunk_len;
        let mut counts = vec![0u64; n + 1];
        if n <= 64 {
            let words: Vec<u64> = basis.iter().map(|b| b.words[0]).collect();
            let g = gray(start);
            let mut state = words
                .iter()
                .enumerate()
                .filter(|(i, _)| (g >> i) & 1 == 1)
                .fold(0u64, |acc, (_, w)| acc ^ w);
            counts[state.count_ones() as usize] += 1;
            for j in start + 1..start + chunk_len {
                state ^= words[j.trailing_zeros() as usize];
                counts[state.count_ones() as usize] += 1;
            }
        } else {
            let g = gray(start);
            let mut state = BitVec::zeros(n);
            for (i, b) in basis.iter().enumerate() {
                if (g >> i) & 1 == 1 {
                    state.xor_assign(b);
                }
            }
            counts[state.weight()] += 1;
            for j in start + 1..start + chunk_len {
                state.xor_assign(&basis[j.trailing_zeros() as usize]);
                counts[state.weight()] += 1;
            }
        }
        counts
    };

    if chunks == 1 {
        return count_chunk(0);
    }
    (0..chunks)
        .into_par_iter()
        .map(count_chunk)
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}
