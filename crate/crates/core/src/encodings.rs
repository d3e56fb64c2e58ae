//! Integer encodings used by the comparison operators: binomial coefficients, constant-weight
//! codes, point encodings and range covers over the binary prefix tree of `[2^n]`.
//!
//! Prefix-tree levels are indexed from the leaves: a node `v` at level `i` covers the leaves
//! `[v * 2^i, (v + 1) * 2^i - 1]`, and level `n` holds the root.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("value {value} does not fit in {bits} bits")]
    OutOfDomain { value: u64, bits: u32 },
    #[error("value {0} has no codeword: the code is too short")]
    CodeTooShort(u64),
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(u64, u64),
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),
}

pub type Result<T> = std::result::Result<T, EncodingError>;

/// `C(n, k)` in arbitrary precision; zero when `k > n`.
pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Smallest code length `l` with `C(l, h) >= 2^n`.
pub fn cw_min_length(n: u32, h: usize) -> usize {
    assert!(h >= 1, "weight must be positive");
    let target = BigUint::one() << n;
    let fits = |l: usize| binom(l as u64, h as u64) >= target;
    // C(l, h) grows with l: gallop to an upper bound, then bisect
    let mut hi = h;
    while !fits(hi) {
        hi *= 2;
    }
    let mut lo = h;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// A constant-weight codeword, or the all-zero Null word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CwCode {
    /// Code length `l`.
    pub len: usize,
    /// Hamming weight `h` of non-Null words.
    pub weight: usize,
    /// Positions of the one bits, strictly decreasing. Empty for Null.
    pub ones: Vec<usize>,
}

impl CwCode {
    pub fn null(len: usize, weight: usize) -> Self {
        Self { len, weight, ones: Vec::new() }
    }

    pub fn is_null(&self) -> bool {
        self.ones.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.ones.contains(&i)
    }

    pub fn bits(&self) -> Vec<bool> {
        let mut b = vec![false; self.len];
        for &i in &self.ones {
            b[i] = true;
        }
        b
    }

    /// Inner product with another word of the same length.
    pub fn overlap(&self, other: &CwCode) -> usize {
        self.ones.iter().filter(|i| other.ones.contains(i)).count()
    }
}

impl std::fmt::Display for CwCode {
    /// Most significant position first, so `{1, 0}` in a length-4 code prints as `0011`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in (0..self.len).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Combinadic encoder for `CW(l, h)` with a precomputed binomial table.
///
/// Table entries saturate at `u128::MAX`; inputs are below `2^64`, so a saturated entry
/// compares exactly like the true coefficient.
#[derive(Clone, Debug)]
pub struct CwEncoder {
    len: usize,
    weight: usize,
    /// `table[w][m] = C(m, w)` for `m < len`, `w <= weight`.
    table: Vec<Vec<u128>>,
    capacity: BigUint,
}

impl CwEncoder {
    pub fn new(len: usize, weight: usize) -> Result<Self> {
        if weight == 0 || weight > len {
            return Err(EncodingError::InvalidCode(format!("CW({len}, {weight})")));
        }
        let mut table = vec![vec![0u128; len]; weight + 1];
        for m in 0..len {
            table[0][m] = 1;
            for w in 1..=weight {
                table[w][m] = if m == 0 { 0 } else { table[w][m - 1].saturating_add(table[w - 1][m - 1]) };
            }
        }
        Ok(Self { len, weight, table, capacity: binom(len as u64, weight as u64) })
    }

    /// Encoder of minimal length for `n`-bit values.
    pub fn for_precision(n: u32, weight: usize) -> Result<Self> {
        Self::new(cw_min_length(n, weight), weight)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Number of distinct non-Null codewords, `C(l, h)`.
    pub fn capacity(&self) -> &BigUint {
        &self.capacity
    }

    /// Encodes `x` (or Null for `None`).
    pub fn encode(&self, x: Option<u64>) -> Result<CwCode> {
        let Some(x) = x else {
            return Ok(CwCode::null(self.len, self.weight));
        };
        if BigUint::from(x) >= self.capacity {
            return Err(EncodingError::CodeTooShort(x));
        }
        let mut r = x as u128;
        let mut w = self.weight;
        let mut hi = self.len;
        let mut ones = Vec::with_capacity(self.weight);
        while w > 0 {
            // largest m < hi with C(m, w) <= r; C(m, w) is nondecreasing in m
            let row = &self.table[w];
            let m = row[..hi].partition_point(|&c| c <= r) - 1;
            ones.push(m);
            r -= row[m];
            w -= 1;
            hi = m;
        }
        Ok(CwCode { len: self.len, weight: self.weight, ones })
    }
}

/// Encodes `x` with `CW(l, h)`.
pub fn cw_encode(x: Option<u64>, len: usize, weight: usize) -> Result<CwCode> {
    CwEncoder::new(len, weight)?.encode(x)
}

/// One optional prefix node per level, levels `0..=n` (leaves to root).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrefixEncoding {
    pub n: u32,
    pub levels: Vec<Option<u64>>,
}

impl PrefixEncoding {
    /// Leaves covered by the non-Null nodes, as inclusive intervals from low level to high.
    pub fn covered(&self) -> Vec<(u64, u64)> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (v << i, ((v + 1) << i) - 1)))
            .collect()
    }
}

fn check_domain(x: u64, n: u32) -> Result<()> {
    if n < 64 && x >> n != 0 {
        return Err(EncodingError::OutOfDomain { value: x, bits: n });
    }
    Ok(())
}

/// One-sided uniform range cover of `[x, 2^n - 1]`.
///
/// The levels used are the set bits of `2^n - x`, taken from high to low; a node at level
/// `j` is `2^(n-j) - 1 - sum_{k in K} 2^(k-j)` where `K` holds the levels already taken.
pub fn ourc(x: u64, n: u32) -> Result<PrefixEncoding> {
    assert!(n < 64);
    check_domain(x, n)?;
    let mut levels = vec![None; n as usize + 1];
    if x == 0 {
        levels[n as usize] = Some(0);
        return Ok(PrefixEncoding { n, levels });
    }
    let span = (1u64 << n) - x;
    let mut taken: Vec<u32> = Vec::new();
    for j in (0..n).rev().filter(|&j| span >> j & 1 == 1) {
        let above: u64 = taken.iter().map(|&k| 1u64 << (k - j)).sum();
        levels[j as usize] = Some((1u64 << (n - j)) - 1 - above);
        taken.push(j);
    }
    Ok(PrefixEncoding { n, levels })
}

/// All ancestors of leaf `y`, one per level including the root: entry `i` is `y >> i`.
pub fn point_encoding(y: u64, n: u32) -> Result<PrefixEncoding> {
    assert!(n < 64);
    check_domain(y, n)?;
    Ok(PrefixEncoding { n, levels: (0..=n).map(|i| Some(y >> i)).collect() })
}

/// Number of levels where both encodings hold the same node; `I[a <= b]` for
/// `ourc(a)` against `point_encoding(b)`.
pub fn ourc_pe_inclusion(cover: &PrefixEncoding, point: &PrefixEncoding) -> u64 {
    assert_eq!(cover.n, point.n);
    cover
        .levels
        .iter()
        .zip(&point.levels)
        .filter(|(c, p)| c.is_some() && c == p)
        .count() as u64
}

/// Canonical (best) cover of `[a, b]` from nodes below the root: at most two nodes per level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeCover {
    pub n: u32,
    /// `levels[i]` lists the nodes taken at level `i`, ascending.
    pub levels: Vec<Vec<u64>>,
}

impl RangeCover {
    pub fn nodes(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.levels.iter().enumerate().flat_map(|(i, vs)| vs.iter().map(move |&v| (i as u32, v)))
    }

    /// Pads every level to exactly two entries; padding is Null and matches nothing.
    pub fn uniform(&self) -> UniformRangeCover {
        let entries = self
            .levels
            .iter()
            .flat_map(|vs| [vs.first().copied(), vs.get(1).copied()])
            .collect();
        UniformRangeCover { n: self.n, entries }
    }
}

/// Uniform range cover: entries `2i` and `2i + 1` belong to level `i`, for `i < n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformRangeCover {
    pub n: u32,
    pub entries: Vec<Option<u64>>,
}

pub fn best_range_cover(a: u64, b: u64, n: u32) -> Result<RangeCover> {
    assert!((1..64).contains(&n));
    check_domain(a, n)?;
    check_domain(b, n)?;
    if a > b {
        return Err(EncodingError::EmptyInterval(a, b));
    }
    let mut levels = vec![Vec::new(); n as usize];
    fn walk(level: u32, v: u64, a: u64, b: u64, out: &mut [Vec<u64>]) {
        let (lo, hi) = (v << level, ((v + 1) << level) - 1);
        if hi < a || lo > b {
            return;
        }
        if a <= lo && hi <= b {
            out[level as usize].push(v);
            return;
        }
        walk(level - 1, 2 * v, a, b, out);
        walk(level - 1, 2 * v + 1, a, b, out);
    }
    walk(n - 1, 0, a, b, &mut levels);
    walk(n - 1, 1, a, b, &mut levels);
    Ok(RangeCover { n, levels })
}

pub fn uniform_range_cover(a: u64, b: u64, n: u32) -> Result<UniformRangeCover> {
    Ok(best_range_cover(a, b, n)?.uniform())
}

/// `I[c in [a, b]]` from a uniform cover of `[a, b]` and `point_encoding(c)`, using at most
/// `2n` equality tests.
pub fn rc_pe_inclusion(rc: &UniformRangeCover, pe: &PrefixEncoding) -> u64 {
    assert_eq!(rc.n, pe.n);
    let mut hits = 0;
    for i in 0..rc.n as usize {
        for e in &rc.entries[2 * i..2 * i + 2] {
            hits += u64::from(e.is_some() && *e == pe.levels[i]);
        }
    }
    hits
}

/// Convenience for callers holding a `BigUint` that is known to fit.
pub fn binom_u64(n: u64, k: u64) -> Option<u64> {
    binom(n, k).to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(4, 2), BigUint::from(6u32));
        assert_eq!(binom(0, 0), BigUint::one());
        assert_eq!(binom(23, 2), BigUint::from(253u32));
        assert_eq!(binom(24, 2), BigUint::from(276u32));
        assert_eq!(binom(3, 5), BigUint::zero());
        assert_eq!(binom_u64(60, 30), Some(118264581564861424));
    }

    #[test]
    fn min_lengths() {
        assert_eq!(cw_min_length(8, 2), 24);
        assert_eq!(cw_min_length(1, 1), 2);
        assert_eq!(cw_min_length(8, 4), 11);
    }

    #[test]
    fn cw_examples() {
        assert_eq!(cw_encode(None, 4, 2).unwrap().to_string(), "0000");
        assert_eq!(cw_encode(Some(0), 4, 2).unwrap().to_string(), "0011");
        assert_eq!(cw_encode(Some(5), 4, 2).unwrap().to_string(), "1100");
        assert!(cw_encode(Some(6), 4, 2).is_err());
    }

    #[test]
    fn ourc_examples() {
        assert_eq!(ourc(0, 3).unwrap().levels, vec![None, None, None, Some(0)]);
        assert_eq!(ourc(4, 3).unwrap().levels, vec![None, None, Some(1), None]);
        assert_eq!(ourc(3, 3).unwrap().levels, vec![Some(3), None, Some(1), None]);
        assert!(ourc(8, 3).is_err());
    }

    #[test]
    fn point_encoding_examples() {
        let lv = |y| point_encoding(y, 3).unwrap().levels.into_iter().map(Option::unwrap).collect::<Vec<_>>();
        assert_eq!(lv(5), vec![5, 2, 1, 0]);
        assert_eq!(lv(0), vec![0, 0, 0, 0]);
        assert_eq!(lv(6), vec![6, 3, 1, 0]);
    }

    #[test]
    fn range_cover_examples() {
        let rc = best_range_cover(0, 4, 3).unwrap();
        assert_eq!(rc.nodes().collect::<Vec<_>>(), vec![(0, 4), (2, 0)]);
        let full = best_range_cover(0, 15, 4).unwrap();
        assert_eq!(full.nodes().collect::<Vec<_>>(), vec![(3, 0), (3, 1)]);
        let point = uniform_range_cover(5, 5, 4).unwrap();
        assert_eq!(point.entries, vec![Some(5), None, None, None, None, None, None, None]);
        assert!(best_range_cover(3, 2, 3).is_err());
        let u = uniform_range_cover(0, 4, 3).unwrap();
        assert_eq!(rc_pe_inclusion(&u, &point_encoding(2, 3).unwrap()), 1);
        assert_eq!(rc_pe_inclusion(&u, &point_encoding(6, 3).unwrap()), 0);
    }
}
