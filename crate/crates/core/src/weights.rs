//! Weight distributions `A_w` of a code's row space.
//!
//! Counts are exact big integers (they overflow `u64` for codes such as
//! RM(3,8)); bound evaluation reads the cached natural logs instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gf2::GeneratorMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    n: usize,
    rank: usize,
    rows: usize,
    counts: BTreeMap<usize, BigUint>,
    log_counts: Vec<(usize, f64)>,
    partial: bool,
}

impl WeightDistribution {
    /// Builds a validated distribution of a rank-`rank` code of length `n`.
    /// Zero counts are dropped; `Σ A_w` must equal `2^rank` exactly.
    pub fn from_counts<I>(n: usize, rank: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, BigUint)>,
    {
        Self::build(n, rank, counts, false)
    }

    /// Like [`from_counts`](Self::from_counts) but tolerates a truncated table
    /// (`Σ A_w < 2^rank`). The result is flagged partial.
    pub fn from_counts_partial<I>(n: usize, rank: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, BigUint)>,
    {
        Self::build(n, rank, counts, true)
    }

    fn build<I>(n: usize, rank: usize, counts: I, allow_partial: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, BigUint)>,
    {
        let mut map = BTreeMap::new();
        for (w, a) in counts {
            if w > n {
                return Err(Error::Validation(format!(
                    "weight {w} exceeds block length n = {n}"
                )));
            }
            if a.is_zero() {
                continue;
            }
            if map.insert(w, a).is_some() {
                return Err(Error::Validation(format!("weight {w} listed twice")));
            }
        }
        match map.get(&0) {
            Some(a0) if a0.is_one() => {}
            Some(a0) => {
                return Err(Error::Validation(format!(
                    "A_0 must be 1 (the zero codeword), found {a0}"
                )))
            }
            None => return Err(Error::Validation("A_0 must be 1, found no entry".into())),
        }
        let total: BigUint = map.values().sum();
        let expected = BigUint::one() << rank;
        let partial = if total == expected {
            false
        } else if allow_partial && total < expected {
            true
        } else {
            return Err(Error::Validation(format!(
                "counts sum to {total}, expected 2^{rank} = {expected}"
            )));
        };
        let log_counts = map.iter().map(|(&w, a)| (w, ln_biguint(a))).collect();
        Ok(Self {
            n,
            rank,
            rows: rank,
            counts: map,
            log_counts,
            partial,
        })
    }

    /// Exhaustive weight distribution of `rowspan(G)`. Keeps `G`'s row count
    /// so that rank deficiency stays visible to the bound routines.
    pub fn from_matrix(g: &GeneratorMatrix, enumeration_limit: usize) -> Result<Self> {
        let hist = g.span_weight_counts(enumeration_limit)?;
        let rank = g.rank();
        let mut dist = Self::from_counts(
            g.n(),
            rank,
            hist.into_iter()
                .enumerate()
                .map(|(w, a)| (w, BigUint::from(a))),
        )?;
        dist.rows = g.k();
        Ok(dist)
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the code (`log2 Σ A_w`).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of corrector output bits `k`. Equals the rank unless the
    /// distribution came from a rank-deficient generator.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_full_rank(&self) -> bool {
        self.rows == self.rank
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    pub fn count(&self, w: usize) -> BigUint {
        self.counts.get(&w).cloned().unwrap_or_default()
    }

    /// Nonzero entries in ascending weight order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigUint)> {
        self.counts.iter().map(|(&w, a)| (w, a))
    }

    /// `(w, ln A_w)` in ascending weight order.
    pub fn log_counts(&self) -> &[(usize, f64)] {
        &self.log_counts
    }

    pub fn total(&self) -> BigUint {
        self.counts.values().sum()
    }

    /// Smallest nonzero weight, `None` for the zero code.
    pub fn min_distance(&self) -> Option<usize> {
        self.counts.keys().copied().find(|&w| w > 0)
    }

    /// Serializes to the weight file format (ascending `w`, no comments).
    pub fn to_text(&self) -> String {
        let mut out = format!("n={} k={}\n", self.n, self.rank);
        for (w, a) in &self.counts {
            let _ = writeln!(out, "{w} {a}");
        }
        out
    }
}

impl FromStr for WeightDistribution {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_weights(text, false)
    }
}

/// Parses the weight file format:
///
/// ```text
/// # comment
/// n=7 k=4
/// 0 1
/// 3 7
/// ```
///
/// With `allow_partial`, tables whose counts fall short of `2^k` are accepted
/// and flagged.
pub fn parse_weights(text: &str, allow_partial: bool) -> Result<WeightDistribution> {
    let mut header: Option<(usize, usize)> = None;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        if header.is_none() {
            header = Some(parse_header(trimmed, line_no, indent)?);
            continue;
        }
        let mut fields = tokens(raw);
        let (wcol, wtok) = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, 1, "missing weight"))?;
        let (ccol, ctok) = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, raw.len() + 1, "missing count after weight"))?;
        if let Some((col, extra)) = fields.next() {
            return Err(Error::parse(
                line_no,
                col,
                format!("unexpected trailing field {extra:?}"),
            ));
        }
        let w: usize = wtok
            .parse()
            .map_err(|_| Error::parse(line_no, wcol, format!("invalid weight {wtok:?}")))?;
        let a = BigUint::parse_bytes(ctok.as_bytes(), 10)
            .ok_or_else(|| Error::parse(line_no, ccol, format!("invalid count {ctok:?}")))?;
        pairs.push((w, a));
    }
    let (n, k) = header.ok_or_else(|| Error::parse(1, 1, "missing `n=<int> k=<int>` header"))?;
    if allow_partial {
        WeightDistribution::from_counts_partial(n, k, pairs)
    } else {
        WeightDistribution::from_counts(n, k, pairs)
    }
}

fn parse_header(line: &str, line_no: usize, indent: usize) -> Result<(usize, usize)> {
    let mut n = None;
    let mut k = None;
    for (col, tok) in tokens(line) {
        let col = col + indent;
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, col, format!("expected key=value, got {tok:?}")))?;
        let parsed: usize = value
            .parse()
            .map_err(|_| Error::parse(line_no, col, format!("invalid integer in {tok:?}")))?;
        match key {
            "n" => n = Some(parsed),
            "k" => k = Some(parsed),
            other => {
                return Err(Error::parse(
                    line_no,
                    col,
                    format!("unknown header key {other:?}"),
                ))
            }
        }
    }
    match (n, k) {
        (Some(n), Some(k)) if n >= 1 => Ok((n, k)),
        (Some(_), Some(_)) => Err(Error::parse(line_no, 1, "block length n must be positive")),
        _ => Err(Error::parse(line_no, 1, "header must define both n and k")),
    }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let skip = rest.len() - rest.trim_start().len();
        rest = &rest[skip..];
        offset += skip;
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let tok = &rest[..end];
        let col = offset + 1;
        rest = &rest[end..];
        offset += end;
        Some((col, tok))
    })
}

/// Natural log of a positive big integer, accurate to a few ulps.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("top 64 bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gf2::{reed_muller_generator, BitVec, DEFAULT_ENUMERATION_LIMIT};

    const HAMMING_FILE: &str = "n=7 k=4\n0 1\n3 7\n4 7\n7 1\n";

    fn hamming74() -> GeneratorMatrix {
        GeneratorMatrix::from_strs(&["1000110", "0100101", "0010011", "0001111"]).unwrap()
    }

    fn as_pairs(d: &WeightDistribution) -> Vec<(usize, u64)> {
        d.iter().map(|(w, a)| (w, a.to_u64().unwrap())).collect()
    }

    #[test]
    fn hamming_from_matrix() {
        let d = WeightDistribution::from_matrix(&hamming74(), DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(as_pairs(&d), vec![(0, 1), (3, 7), (4, 7), (7, 1)]);
        assert_eq!(d.min_distance(), Some(3));
        assert!(d.is_full_rank());
    }

    #[test]
    fn parity_and_identity() {
        let d = WeightDistribution::from_matrix(&GeneratorMatrix::parity(9), 28).unwrap();
        assert_eq!(as_pairs(&d), vec![(0, 1), (9, 1)]);

        let k = 6;
        let d = WeightDistribution::from_matrix(&GeneratorMatrix::identity(k), 28).unwrap();
        let binom = [1, 6, 15, 20, 15, 6, 1];
        assert_eq!(
            as_pairs(&d),
            binom.iter().enumerate().map(|(w, &c)| (w, c)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rank_deficient_generator_keeps_row_count() {
        let g = GeneratorMatrix::from_strs(&["110", "110"]).unwrap();
        let d = WeightDistribution::from_matrix(&g, 28).unwrap();
        assert_eq!((d.rank(), d.rows()), (1, 2));
        assert!(!d.is_full_rank());
        assert_eq!(as_pairs(&d), vec![(0, 1), (2, 1)]);
    }

    #[test]
    fn parse_hamming_file() {
        let d: WeightDistribution = format!("# [7,4,3] Hamming\n{HAMMING_FILE}").parse().unwrap();
        let e = WeightDistribution::from_matrix(&hamming74(), 28).unwrap();
        assert_eq!(d, e);
        assert_eq!(d.to_text(), HAMMING_FILE);
    }

    #[test]
    fn parse_rejects_bad_sums_and_a0() {
        let bad_sum = "n=7 k=4\n0 1\n3 7\n4 7\n";
        assert!(matches!(bad_sum.parse::<WeightDistribution>(), Err(Error::Validation(_))));
        let bad_a0 = "n=7 k=4\n0 2\n3 7\n4 6\n7 1\n";
        assert!(matches!(bad_a0.parse::<WeightDistribution>(), Err(Error::Validation(_))));
        let too_heavy = "n=7 k=4\n0 1\n3 7\n4 7\n8 1\n";
        assert!(matches!(too_heavy.parse::<WeightDistribution>(), Err(Error::Validation(_))));
        let dup = "n=7 k=4\n0 1\n3 7\n3 7\n7 1\n";
        assert!(matches!(dup.parse::<WeightDistribution>(), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_reports_positions() {
        match "n=7 k=4\n0 1\n3 x7\n".parse::<WeightDistribution>() {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("{other:?}"),
        }
        match "k=4\n".parse::<WeightDistribution>() {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!("".parse::<WeightDistribution>().is_err());
    }

    #[test]
    fn partial_tables_need_the_flag() {
        let truncated = "n=7 k=4\n0 1\n3 7\n";
        assert!(truncated.parse::<WeightDistribution>().is_err());
        let d = parse_weights(truncated, true).unwrap();
        assert!(d.is_partial());
        let full = parse_weights(HAMMING_FILE, true).unwrap();
        assert!(!full.is_partial());
        // overfull tables are never accepted
        assert!(parse_weights("n=3 k=1\n0 1\n3 1\n2 1\n", true).is_err());
    }

    #[test]
    fn min_distance_of_zero_code() {
        let d = WeightDistribution::from_counts(5, 0, [(0, BigUint::one())]).unwrap();
        assert_eq!(d.min_distance(), None);
    }

    #[test]
    fn big_counts_and_logs() {
        let g = reed_muller_generator(2, 5).unwrap();
        let d = WeightDistribution::from_matrix(&g, 28).unwrap();
        assert_eq!(d.min_distance(), Some(8));
        assert_eq!(d.count(8), BigUint::from(620u32));

        let huge = BigUint::one() << 200u32;
        let ln = ln_biguint(&huge);
        assert!((ln - 200.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let x = BigUint::parse_bytes(b"5193595576952890822", 10).unwrap();
        assert!((ln_biguint(&x) - 5193595576952890822f64.ln()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn random_generators_sum_to_two_to_rank(seed in any::<u64>(), k in 1usize..=12, n in 1usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = GeneratorMatrix::random(k, n, &mut rng);
            let d = WeightDistribution::from_matrix(&g, DEFAULT_ENUMERATION_LIMIT).unwrap();
            prop_assert_eq!(d.total(), BigUint::one() << g.rank());
            prop_assert_eq!(d.count(0), BigUint::one());
            let back: WeightDistribution = d.to_text().parse().unwrap();
            prop_assert_eq!(as_pairs(&back), as_pairs(&d));
        }

        #[test]
        fn invariant_under_span_preserving_row_ops(seed in any::<u64>(), ops in proptest::collection::vec((0usize..8, 0usize..8), 0..10)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = GeneratorMatrix::random(8, 14, &mut rng);
            let mut rows: Vec<BitVec> = g.rows().to_vec();
            for (a, b) in ops {
                if a != b {
                    let src = rows[b].clone();
                    rows[a].xor_assign(&src);
                    rows.swap(a, b);
                }
            }
            let h = GeneratorMatrix::new(rows).unwrap();
            let dg = WeightDistribution::from_matrix(&g, 28).unwrap();
            let dh = WeightDistribution::from_matrix(&h, 28).unwrap();
            prop_assert_eq!(as_pairs(&dg), as_pairs(&dh));
        }
    }
}
