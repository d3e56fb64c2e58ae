//! Private comparison of a client value (encrypted) against a server value (plaintext).
//!
//! * Folklore: bitwise comparison with recursive doubling over slots (batched mode).
//! * XCMP / XCMP0 / XXCMP: monomial encodings `X^a` in polynomial mode.
//! * RCC: one-sided range covers with constant-weight equality (batched mode).

use crate::encodings::{ourc, point_encoding, CwEncoder, EncodingError};
use pdte_he::backend::Result as HeResult;
use pdte_he::plain::invmod;
use pdte_he::{mul_many, HeBackend, HeError, KeyRequest, Mode, PolyPlain, SlotVector, Tier};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("{count} comparisons exceed the capacity of {capacity}")]
    Capacity { count: usize, capacity: usize },
    #[error("value {value} is out of range for {what}")]
    Range { value: u64, what: &'static str },
    #[error("layout mismatch: {0}")]
    Layout(String),
    #[error("{0} is not invertible modulo the plaintext modulus")]
    NotInvertible(u64),
}

pub type Result<T> = std::result::Result<T, CompareError>;

fn neg_mod(x: u64, p: u64) -> u64 {
    (p - x % p) % p
}

// ---------------------------------------------------------------------------------------
// Sliding-window sums over slots

/// Left-rotation amounts used by [`window_sum`].
pub fn window_sum_rotations(len: usize) -> Vec<i64> {
    let mut out = Vec::new();
    let mut m = 1;
    while 2 * m <= len {
        out.push(-(m as i64));
        m *= 2;
    }
    let mut offset = 0;
    for j in (0..usize::BITS).rev() {
        if len >> j & 1 == 1 {
            if offset > 0 {
                out.push(-(offset as i64));
            }
            offset += 1 << j;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Right-rotation amounts used by [`spread_sum`].
pub fn spread_sum_rotations(len: usize) -> Vec<i64> {
    window_sum_rotations(len).into_iter().map(|k| -k).collect()
}

fn signed_window_sum<B: HeBackend>(b: &B, ct: &B::Ct, len: usize, sign: i64) -> HeResult<B::Ct> {
    assert!(len >= 1);
    // pow[j] holds windows of length 2^j
    let mut pow = vec![ct.clone()];
    while 2usize << (pow.len() - 1) <= len {
        let last = pow.last().unwrap();
        let m = 1i64 << (pow.len() - 1);
        let next = b.add(last, &b.rotate(last, sign * m)?)?;
        pow.push(next);
    }
    let mut acc: Option<B::Ct> = None;
    let mut offset = 0usize;
    for j in (0..pow.len()).rev() {
        if len >> j & 1 == 0 {
            continue;
        }
        let part = if offset == 0 { pow[j].clone() } else { b.rotate(&pow[j], sign * offset as i64)? };
        acc = Some(match acc {
            None => part,
            Some(a) => b.add(&a, &part)?,
        });
        offset += 1 << j;
    }
    Ok(acc.expect("len >= 1"))
}

/// Slot `s` of the result is `sum_{i < len} ct[s + i]` (indices mod `N/2`).
pub fn window_sum<B: HeBackend>(b: &B, ct: &B::Ct, len: usize) -> HeResult<B::Ct> {
    signed_window_sum(b, ct, len, -1)
}

/// Slot `s` of the result is `sum_{i < len} ct[s - i]`: copies an isolated slot into the
/// `len - 1` slots after it.
pub fn spread_sum<B: HeBackend>(b: &B, ct: &B::Ct, len: usize) -> HeResult<B::Ct> {
    signed_window_sum(b, ct, len, 1)
}

// ---------------------------------------------------------------------------------------
// Folklore

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// `I[encrypted < plain]`
    Less,
    /// `I[encrypted > plain]`
    Greater,
}

/// Slots per folklore comparison: `n` rounded up to a power of two.
pub fn folklore_block(n: u32) -> usize {
    (n as usize).next_power_of_two()
}

pub fn folklore_capacity(slots: usize, n: u32) -> usize {
    slots / folklore_block(n)
}

pub fn folklore_key_request(n: u32) -> KeyRequest {
    let mut req = KeyRequest { relin: true, ..Default::default() };
    let mut m = 1;
    while m < folklore_block(n) {
        req.rotate(-(m as i64), Tier::Top);
        m *= 2;
    }
    req
}

/// Bits of `values[c]`, most significant first, in slots `c * block ..`; padding bits are zero.
pub fn folklore_encode(values: &[u64], n: u32, slots: usize) -> Result<SlotVector> {
    let block = folklore_block(n);
    let cap = slots / block;
    if values.len() > cap {
        return Err(CompareError::Capacity { count: values.len(), capacity: cap });
    }
    let mut v = vec![0u64; slots];
    for (c, &x) in values.iter().enumerate() {
        if n < 64 && x >> n != 0 {
            return Err(CompareError::Range { value: x, what: "folklore operand" });
        }
        for i in 0..n as usize {
            v[c * block + i] = x >> (n as usize - 1 - i) & 1;
        }
    }
    Ok(SlotVector { slots: v })
}

/// Slot `c * block` of the result holds `I[a_c < t_c]` (or `>`); other slots are garbage.
///
/// Depth is `ceil(log2 n)`: the per-bit terms are plaintext-linear and each doubling round
/// costs one product.
pub fn folklore_cmp<B: HeBackend>(b: &B, query: &B::Ct, thresholds: &[u64], n: u32, order: Order) -> Result<B::Ct> {
    let p = b.plain_modulus();
    let slots = b.slots();
    let t = folklore_encode(thresholds, n, slots)?;
    // eq = a (2t - 1) + (1 - t); lt = t - a t; gt = a - a t
    let eq_mul = SlotVector { slots: t.slots.iter().map(|&x| if x == 1 { 1 } else { p - 1 }).collect() };
    let eq_add = SlotVector { slots: t.slots.iter().map(|&x| 1 - x).collect() };
    let mut eq = b.add_plain(&b.mul_plain(query, &b.encode_slots(&eq_mul)?)?, &b.encode_slots(&eq_add)?)?;
    let mut cmp = match order {
        Order::Less => {
            let m = SlotVector { slots: t.slots.iter().map(|&x| neg_mod(x, p)).collect() };
            b.add_plain(&b.mul_plain(query, &b.encode_slots(&m)?)?, &b.encode_slots(&t)?)?
        }
        Order::Greater => {
            let m = SlotVector { slots: t.slots.iter().map(|&x| 1 - x).collect() };
            b.mul_plain(query, &b.encode_slots(&m)?)?
        }
    };
    let block = folklore_block(n);
    let mut m = 1;
    while m < block {
        let shifted = b.rotate(&cmp, -(m as i64))?;
        cmp = b.add(&cmp, &b.mul(&eq, &shifted)?)?;
        if 2 * m < block {
            eq = b.mul(&eq, &b.rotate(&eq, -(m as i64))?)?;
        }
        m *= 2;
    }
    Ok(cmp)
}

pub fn folklore_lt<B: HeBackend>(b: &B, query: &B::Ct, thresholds: &[u64], n: u32) -> Result<B::Ct> {
    folklore_cmp(b, query, thresholds, n, Order::Less)
}

pub fn folklore_gt<B: HeBackend>(b: &B, query: &B::Ct, thresholds: &[u64], n: u32) -> Result<B::Ct> {
    folklore_cmp(b, query, thresholds, n, Order::Greater)
}

// ---------------------------------------------------------------------------------------
// XCMP family (polynomial mode)

fn check_poly<B: HeBackend>(b: &B, ct: &B::Ct) -> Result<()> {
    let found = b.mode(ct);
    if found != Mode::Polynomial {
        return Err(HeError::ModeMismatch { expected: Mode::Polynomial, found }.into());
    }
    Ok(())
}

fn with_filler<B: HeBackend>(b: &B, ct: &B::Ct, constant: u64) -> Result<B::Ct> {
    let mut r = b.random_vec(b.params().degree, false);
    r[0] = constant;
    Ok(b.add_plain(ct, &b.encode_poly(&PolyPlain { coeffs: r })?)?)
}

/// `T = 1/2 X^{-t} (1 + X + ... + X^{N-1})`.
pub fn xcmp_leq_poly(t: usize, n: usize, p: u64) -> PolyPlain {
    let half = invmod(2, p).expect("odd plaintext modulus");
    let coeffs = (0..n).map(|j| if j < n - t { half } else { p - half }).collect();
    PolyPlain { coeffs }
}

/// `T = -(X + ... + X^{N-t-1})`.
pub fn xcmp0_poly(t: usize, n: usize, p: u64) -> PolyPlain {
    let coeffs = (0..n).map(|j| if j >= 1 && j < n - t { p - 1 } else { 0 }).collect();
    PolyPlain { coeffs }
}

/// Constant term of the result is `I[a <= t]` for a query encrypting `X^a`.
pub fn xcmp_leq<B: HeBackend>(b: &B, query: &B::Ct, t: u64) -> Result<B::Ct> {
    check_poly(b, query)?;
    let n = b.params().degree;
    if t >= n as u64 {
        return Err(CompareError::Range { value: t, what: "XCMP threshold" });
    }
    let p = b.plain_modulus();
    let prod = b.mul_plain(query, &b.encode_poly(&xcmp_leq_poly(t as usize, n, p))?)?;
    with_filler(b, &prod, invmod(2, p).unwrap())
}

/// Constant term of the result is `I[a > t]` for a query encrypting `X^a`.
pub fn xcmp0_gt<B: HeBackend>(b: &B, query: &B::Ct, t: u64) -> Result<B::Ct> {
    check_poly(b, query)?;
    let n = b.params().degree;
    if t >= n as u64 {
        return Err(CompareError::Range { value: t, what: "XCMP threshold" });
    }
    let prod = b.mul_plain(query, &b.encode_poly(&xcmp0_poly(t as usize, n, b.plain_modulus()))?)?;
    with_filler(b, &prod, 0)
}

/// Base-`N` digits of `x`, least significant first.
pub fn limb_digits(x: u64, n: usize, k: usize) -> Result<Vec<usize>> {
    let mut digits = Vec::with_capacity(k);
    let mut r = x as u128;
    for _ in 0..k {
        digits.push((r % n as u128) as usize);
        r /= n as u128;
    }
    if r != 0 {
        return Err(CompareError::Range { value: x, what: "limb decomposition" });
    }
    Ok(digits)
}

/// Limbs needed for `bits`-bit values over a ring of degree `n`.
pub fn limb_count(bits: u32, n: usize) -> usize {
    let log_n = n.trailing_zeros();
    (bits.div_ceil(log_n) as usize).max(1)
}

/// Encryptions of `X^{a_i}` for the base-`N` digits of `a`, least significant first.
#[derive(Clone, Debug)]
pub struct LimbQuery<C> {
    pub limbs: Vec<C>,
}

pub fn encrypt_limbs<B: HeBackend>(b: &B, x: u64, k: usize) -> Result<LimbQuery<B::Ct>> {
    let n = b.params().degree;
    let limbs = limb_digits(x, n, k)?
        .into_iter()
        .map(|d| b.encrypt_poly(&PolyPlain::monomial(n, d as i64, b.plain_modulus())))
        .collect::<HeResult<_>>()?;
    Ok(LimbQuery { limbs })
}

pub fn xxcmp_key_request() -> KeyRequest {
    KeyRequest { relin: true, expansion: true, rotations: Vec::new() }
}

/// Constant term is `I[a > t]`: `sum_i gt_i * prod_{j > i} eq_j`, each term a balanced
/// product, so depth is `ceil(log2 k)` and `k(k-1)/2` products are used.
pub fn xxcmp_gt<B: HeBackend>(b: &B, q: &LimbQuery<B::Ct>, t: u64) -> Result<B::Ct> {
    let k = q.limbs.len();
    let n = b.params().degree;
    let digits = limb_digits(t, n, k)?;
    let gt: Vec<B::Ct> = q.limbs.iter().zip(&digits).map(|(c, &d)| xcmp0_gt(b, c, d as u64)).collect::<Result<_>>()?;
    let eq: Vec<B::Ct> =
        q.limbs.iter().zip(&digits).skip(1).map(|(c, &d)| b.expand_at(c, d)).collect::<HeResult<_>>()?;
    let mut terms = Vec::with_capacity(k);
    for (i, g) in gt.into_iter().enumerate() {
        let mut factors = vec![g];
        factors.extend(eq[i..].iter().cloned());
        terms.push(mul_many(b, &factors)?);
    }
    Ok(pdte_he::add_many(b, &terms)?)
}

// ---------------------------------------------------------------------------------------
// Constant-weight equality and RCC (batched mode)

/// `h! * C(h', h)` with `h' = sum_i x_i y_i`: the product `prod_{i<h} (h' - i)` before the
/// `1/h!` scaling, which callers fold into a later plaintext product.
pub fn cw_eq_unscaled<B: HeBackend>(b: &B, x: &[B::Ct], y: &[B::Pt], h: usize) -> Result<B::Ct> {
    if x.len() != y.len() || x.is_empty() {
        return Err(CompareError::Layout(format!("{} ciphertexts against {} plaintexts", x.len(), y.len())));
    }
    let prods = x.iter().zip(y).map(|(c, p)| b.mul_plain(c, p)).collect::<HeResult<Vec<_>>>()?;
    let hw = pdte_he::add_many(b, &prods)?;
    let p = b.plain_modulus();
    let factors: Vec<B::Ct> = (0..h as u64).map(|i| b.add_scalar(&hw, neg_mod(i, p))).collect();
    Ok(mul_many(b, &factors)?)
}

/// `h!^{-1} mod p`.
pub fn inv_factorial(h: usize, p: u64) -> Result<u64> {
    let f = (1..=h as u64).fold(1u64, |acc, i| pdte_he::plain::mulmod(acc, i, p));
    invmod(f, p).ok_or(CompareError::NotInvertible(f))
}

/// Per slot: 1 if the codewords are equal, 0 if they differ or either is Null.
pub fn arith_cw_eq<B: HeBackend>(b: &B, x: &[B::Ct], y: &[B::Pt], h: usize) -> Result<B::Ct> {
    let e = cw_eq_unscaled(b, x, y, h)?;
    Ok(b.mul_scalar(&e, inv_factorial(h, b.plain_modulus())?))
}

/// Comparisons per batched ciphertext group: each occupies `n + 1` slots.
pub fn rcc_capacity(slots: usize, n: u32) -> usize {
    slots / (n as usize + 1)
}

fn layout(values: &[u64], n: u32, enc: &CwEncoder, slots: usize, point: bool) -> Result<Vec<SlotVector>> {
    let block = n as usize + 1;
    let cap = rcc_capacity(slots, n);
    if values.len() > cap {
        return Err(CompareError::Capacity { count: values.len(), capacity: cap });
    }
    let mut out = vec![vec![0u64; slots]; enc.len()];
    for (c, &v) in values.iter().enumerate() {
        let pe = if point { point_encoding(v, n)? } else { ourc(v, n)? };
        for (lvl, node) in pe.levels.iter().enumerate() {
            for &bit in &enc.encode(*node)?.ones {
                out[bit][c * block + lvl] = 1;
            }
        }
    }
    Ok(out.into_iter().map(|slots| SlotVector { slots }).collect())
}

/// Plaintext `i` holds bit `i` of every OURC node codeword: slot `c (n+1) + j` is level `j`
/// of value `c`. Null levels and unused slots are zero.
pub fn ourc_encode_packed(values: &[u64], n: u32, enc: &CwEncoder, slots: usize) -> Result<Vec<SlotVector>> {
    layout(values, n, enc, slots, false)
}

/// Mirrored layout of the point encodings of `thresholds`.
pub fn pe_encode_packed(thresholds: &[u64], n: u32, enc: &CwEncoder, slots: usize) -> Result<Vec<SlotVector>> {
    layout(thresholds, n, enc, slots, true)
}

#[derive(Clone, Debug)]
pub struct PackedOurcQuery<C> {
    pub cts: Vec<C>,
    pub n: u32,
    pub h: usize,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct PackedPePlain<P> {
    pub pts: Vec<P>,
    pub n: u32,
    pub h: usize,
    pub count: usize,
}

pub fn encrypt_ourc_query<B: HeBackend>(
    b: &B,
    values: &[u64],
    n: u32,
    enc: &CwEncoder,
) -> Result<PackedOurcQuery<B::Ct>> {
    let cts = ourc_encode_packed(values, n, enc, b.slots())?
        .iter()
        .map(|v| b.encrypt_slots(v))
        .collect::<HeResult<_>>()?;
    Ok(PackedOurcQuery { cts, n, h: enc.weight(), count: values.len() })
}

pub fn encode_pe_plain<B: HeBackend>(
    b: &B,
    thresholds: &[u64],
    n: u32,
    enc: &CwEncoder,
) -> Result<PackedPePlain<B::Pt>> {
    let pts = pe_encode_packed(thresholds, n, enc, b.slots())?
        .iter()
        .map(|v| b.encode_slots(v))
        .collect::<HeResult<_>>()?;
    Ok(PackedPePlain { pts, n, h: enc.weight(), count: thresholds.len() })
}

pub fn rcc_key_request(n: u32) -> KeyRequest {
    let mut req = KeyRequest { relin: true, ..Default::default() };
    for k in window_sum_rotations(n as usize + 1) {
        req.rotate(k, Tier::Top);
    }
    req
}

/// Slot `c (n + 1)` of the result is `I[a_c <= t_c]`; every other slot is zero.
/// Depth is `ceil(log2 h)`.
pub fn rcc_compare<B: HeBackend>(b: &B, q: &PackedOurcQuery<B::Ct>, t: &PackedPePlain<B::Pt>) -> Result<B::Ct> {
    if q.n != t.n || q.h != t.h || q.cts.len() != t.pts.len() {
        return Err(CompareError::Layout("query and thresholds use different codes".into()));
    }
    let theta = cw_eq_unscaled(b, &q.cts, &t.pts, q.h)?;
    let block = q.n as usize + 1;
    let sum = window_sum(b, &theta, block)?;
    let scale = inv_factorial(q.h, b.plain_modulus())?;
    let mut mask = vec![0u64; b.slots()];
    for c in 0..q.count.max(t.count) {
        mask[c * block] = scale;
    }
    Ok(b.mul_plain(&sum, &b.encode_slots(&SlotVector { slots: mask })?)?)
}

/// Hamming weight with the lowest modelled evaluation cost among `1..=max(1, n/2)` whose
/// code length stays within `max_len` ciphertexts.
///
/// The model charges `l` plaintext products at `L` primes and `h - 1` relinearised products
/// at `L^2`, with `L` the chain length for depth `ceil(log2 h)`; the weights come from
/// measured ratios of the RLWE backend.
pub fn default_hamming_weight(n: u32, max_len: usize) -> usize {
    let upper = (n as usize / 2).max(1);
    let cost = |h: usize| {
        let len = crate::encodings::cw_min_length(n, h);
        let depth = ceil_log2(h);
        let limbs = 3 + depth.div_ceil(2);
        (len * limbs + 180 * (h - 1) * limbs * limbs, len)
    };
    let mut best: Option<(usize, usize)> = None;
    for h in 1..=upper {
        let (c, len) = cost(h);
        if len > max_len {
            continue;
        }
        if best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, h));
        }
    }
    best.map(|(_, h)| h).unwrap_or(upper)
}

/// Default bound on the code length, i.e. query ciphertexts per group.
pub const MAX_CODE_LENGTH: usize = 128;

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}
