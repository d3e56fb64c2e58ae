//! Amortized cost of one private comparison.

use crate::record::{published_capacity, BenchRecord};
use crate::{BenchError, Result};
use pdte_core::comparators::{
    encode_pe_plain, encrypt_limbs, encrypt_ourc_query, folklore_block, folklore_capacity, folklore_encode,
    folklore_key_request, folklore_lt, rcc_capacity, rcc_compare, rcc_key_request, xxcmp_gt, xxcmp_key_request,
    MAX_CODE_LENGTH,
};
use pdte_core::encodings::cw_min_length;
use pdte_core::pdte::{PdteParams, Protocol};
use pdte_protocol::WireBackend;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct CmpConfig {
    pub protocols: Vec<Protocol>,
    pub precisions: Vec<u32>,
    pub trials: usize,
    /// RCC weights to sweep; `None` tries every weight up to `n / 2` (at most 8) whose code
    /// fits in 128 bits.
    pub hamming_weights: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for CmpConfig {
    fn default() -> Self {
        Self {
            protocols: Protocol::ALL.to_vec(),
            precisions: vec![8, 12, 16, 20, 24, 28, 32, 36],
            trials: 10,
            hamming_weights: None,
            seed: 1,
        }
    }
}

pub fn weight_sweep(n: u32) -> Vec<usize> {
    let top = (n as usize / 2).clamp(1, 8);
    (1..=top).filter(|&h| cw_min_length(n, h) <= MAX_CODE_LENGTH).collect()
}

struct Point {
    protocol: Protocol,
    n: u32,
    h: usize,
    capacity: usize,
}

impl Point {
    fn record<B: WireBackend>(&self, trial: usize, ns: u64, q: usize, r: usize, depth: usize) -> BenchRecord {
        let batched = self.protocol != Protocol::Xxcmp;
        BenchRecord {
            experiment: "cmp".into(),
            protocol: self.protocol,
            n: self.n,
            h: self.h,
            attributes: self.capacity,
            nodes: 0,
            backend: B::KIND,
            trial,
            wall_ns: ns,
            query_bytes: q,
            response_bytes: r,
            comparisons: self.capacity,
            amortized_ns: ns as f64 / self.capacity as f64,
            max_depth: depth,
            threads: 1,
            capacity: self.capacity,
            published_capacity: if batched { published_capacity(self.n) } else { None },
        }
    }
}

fn wrong(protocol: Protocol, n: u32, a: u64, b: u64) -> BenchError {
    BenchError::Wrong(format!("{protocol} comparison of {a} and {b} at n = {n}"))
}

fn rcc<B: WireBackend>(n: u32, h: usize, trials: usize, rng: &mut ChaCha20Rng) -> Result<Vec<BenchRecord>> {
    let params = PdteParams::new(Protocol::Rcc, n, 1).with_hamming_weight(h);
    let enc = params.encoder()?;
    let b = B::generate(params.backend_params(), params.mode(), &rcc_key_request(n), None)?;
    let cap = rcc_capacity(b.slots(), n);
    let point = Point { protocol: Protocol::Rcc, n, h, capacity: cap };
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let a: Vec<u64> = (0..cap).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let t: Vec<u64> = (0..cap).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let q = encrypt_ourc_query(&b, &a, n, &enc)?;
        let start = Instant::now();
        let pe = encode_pe_plain(&b, &t, n, &enc)?;
        let c = rcc_compare(&b, &q, &pe)?;
        let ns = start.elapsed().as_nanos() as u64;
        let slots = b.decrypt_slots(&c)?.slots;
        for i in 0..cap {
            if slots[i * (n as usize + 1)] != u64::from(a[i] <= t[i]) {
                return Err(wrong(Protocol::Rcc, n, a[i], t[i]));
            }
        }
        let qb = q.cts.iter().map(|c| b.serialize_ct(c).len()).sum();
        out.push(point.record::<B>(trial, ns, qb, b.serialize_ct(&c).len(), b.depth(&c)));
    }
    Ok(out)
}

fn folklore<B: WireBackend>(n: u32, trials: usize, rng: &mut ChaCha20Rng) -> Result<Vec<BenchRecord>> {
    let params = PdteParams::new(Protocol::Folklore, n, 1);
    let b = B::generate(params.backend_params(), params.mode(), &folklore_key_request(n), None)?;
    let cap = folklore_capacity(b.slots(), n);
    let point = Point { protocol: Protocol::Folklore, n, h: 0, capacity: cap };
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let a: Vec<u64> = (0..cap).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let t: Vec<u64> = (0..cap).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let q = b.encrypt_slots(&folklore_encode(&a, n, b.slots())?)?;
        let start = Instant::now();
        let c = folklore_lt(&b, &q, &t, n)?;
        let ns = start.elapsed().as_nanos() as u64;
        let slots = b.decrypt_slots(&c)?.slots;
        for i in 0..cap {
            if slots[i * folklore_block(n)] != u64::from(a[i] < t[i]) {
                return Err(wrong(Protocol::Folklore, n, a[i], t[i]));
            }
        }
        out.push(point.record::<B>(trial, ns, b.serialize_ct(&q).len(), b.serialize_ct(&c).len(), b.depth(&c)));
    }
    Ok(out)
}

fn xxcmp<B: WireBackend>(n: u32, trials: usize, rng: &mut ChaCha20Rng) -> Result<Vec<BenchRecord>> {
    let params = PdteParams::new(Protocol::Xxcmp, n, 1);
    let b = B::generate(params.backend_params(), params.mode(), &xxcmp_key_request(), None)?;
    let k = params.limbs();
    let point = Point { protocol: Protocol::Xxcmp, n, h: 0, capacity: 1 };
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let (a, t) = (rng.gen_range(0..1u64 << n), rng.gen_range(0..1u64 << n));
        let q = encrypt_limbs(&b, a, k)?;
        let start = Instant::now();
        let c = xxcmp_gt(&b, &q, t)?;
        let ns = start.elapsed().as_nanos() as u64;
        if b.decrypt_poly(&c)?.coeffs[0] != u64::from(a > t) {
            return Err(wrong(Protocol::Xxcmp, n, a, t));
        }
        let qb = q.limbs.iter().map(|c| b.serialize_ct(c).len()).sum();
        out.push(point.record::<B>(trial, ns, qb, b.serialize_ct(&c).len(), b.depth(&c)));
    }
    Ok(out)
}

/// Times one packed comparison call per trial and checks every packed result.
pub fn bench_comparison<B: WireBackend>(cfg: &CmpConfig) -> Result<Vec<BenchRecord>> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for &protocol in &cfg.protocols {
        for &n in &cfg.precisions {
            match protocol {
                Protocol::Rcc => {
                    let weights = cfg.hamming_weights.clone().unwrap_or_else(|| weight_sweep(n));
                    for h in weights {
                        out.extend(rcc::<B>(n, h, cfg.trials, &mut rng)?);
                    }
                }
                Protocol::Folklore => out.extend(folklore::<B>(n, cfg.trials, &mut rng)?),
                Protocol::Xxcmp => out.extend(xxcmp::<B>(n, cfg.trials, &mut rng)?),
            }
        }
    }
    Ok(out)
}
