//! Cleartext backend: computes the exact message of every operation and tracks depth.

use crate::backend::{HeBackend, Result, Tier};
use crate::error::HeError;
use crate::params::{BackendParams, Mode};
use crate::plain::{invmod, mulmod, PolyPlain, SlotVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::sync::Mutex;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimCt {
    pub mode: Mode,
    pub depth: usize,
    pub data: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimPt {
    pub mode: Mode,
    pub data: Vec<u64>,
}

pub struct Simulator {
    params: BackendParams,
    rng: Mutex<ChaCha20Rng>,
}

const MAGIC: &[u8; 4] = b"SIMC";

impl Simulator {
    pub fn new(params: BackendParams, seed: u64) -> Result<Self> {
        params.validate(Mode::Polynomial)?;
        Ok(Self { params, rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed)) })
    }

    /// Seeded from `PDTE_SEED` when set, otherwise from OS entropy.
    pub fn from_env(params: BackendParams) -> Result<Self> {
        let seed = std::env::var("PDTE_SEED")
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or_else(rand::random);
        Self::new(params, seed)
    }

    fn p(&self) -> u64 {
        self.params.plain_modulus
    }

    fn check_len(&self, mode: Mode, len: usize) -> Result<()> {
        let expected = match mode {
            Mode::Polynomial => self.params.degree,
            Mode::Batched => self.params.degree / 2,
        };
        if len != expected {
            return Err(HeError::Length { expected, found: len });
        }
        Ok(())
    }

    fn same_mode(a: Mode, b: Mode) -> Result<()> {
        if a != b {
            return Err(HeError::ModeMismatch { expected: a, found: b });
        }
        Ok(())
    }

    fn ring_mul(&self, mode: Mode, a: &[u64], b: &[u64]) -> Vec<u64> {
        let p = self.p();
        match mode {
            Mode::Batched => a.iter().zip(b).map(|(&x, &y)| mulmod(x, y, p)).collect(),
            Mode::Polynomial => {
                PolyPlain { coeffs: a.to_vec() }.mul(&PolyPlain { coeffs: b.to_vec() }, p).coeffs
            }
        }
    }

    fn reduce_all(&self, data: &[u64]) -> Vec<u64> {
        let p = self.p();
        data.iter().map(|&x| x % p).collect()
    }
}

impl HeBackend for Simulator {
    type Ct = SimCt;
    type Pt = SimPt;
    type Hoisted = SimCt;
    type Lazy = SimCt;

    fn name(&self) -> &'static str {
        "sim"
    }

    fn params(&self) -> &BackendParams {
        &self.params
    }

    fn encrypt_poly(&self, m: &PolyPlain) -> Result<SimCt> {
        self.check_len(Mode::Polynomial, m.coeffs.len())?;
        Ok(SimCt { mode: Mode::Polynomial, depth: 0, data: self.reduce_all(&m.coeffs) })
    }

    fn encrypt_slots(&self, m: &SlotVector) -> Result<SimCt> {
        self.params.validate(Mode::Batched)?;
        self.check_len(Mode::Batched, m.slots.len())?;
        Ok(SimCt { mode: Mode::Batched, depth: 0, data: self.reduce_all(&m.slots) })
    }

    fn decrypt_poly(&self, ct: &SimCt) -> Result<PolyPlain> {
        Self::same_mode(Mode::Polynomial, ct.mode)?;
        Ok(PolyPlain { coeffs: ct.data.clone() })
    }

    fn decrypt_slots(&self, ct: &SimCt) -> Result<SlotVector> {
        Self::same_mode(Mode::Batched, ct.mode)?;
        Ok(SlotVector { slots: ct.data.clone() })
    }

    fn encode_poly(&self, m: &PolyPlain) -> Result<SimPt> {
        self.check_len(Mode::Polynomial, m.coeffs.len())?;
        Ok(SimPt { mode: Mode::Polynomial, data: self.reduce_all(&m.coeffs) })
    }

    fn encode_slots(&self, m: &SlotVector) -> Result<SimPt> {
        self.params.validate(Mode::Batched)?;
        self.check_len(Mode::Batched, m.slots.len())?;
        Ok(SimPt { mode: Mode::Batched, data: self.reduce_all(&m.slots) })
    }

    fn mode(&self, ct: &SimCt) -> Mode {
        ct.mode
    }

    fn depth(&self, ct: &SimCt) -> usize {
        ct.depth
    }

    fn add(&self, a: &SimCt, b: &SimCt) -> Result<SimCt> {
        Self::same_mode(a.mode, b.mode)?;
        let p = self.p();
        Ok(SimCt {
            mode: a.mode,
            depth: a.depth.max(b.depth),
            data: a.data.iter().zip(&b.data).map(|(&x, &y)| (x + y) % p).collect(),
        })
    }

    fn sub(&self, a: &SimCt, b: &SimCt) -> Result<SimCt> {
        self.add(a, &self.neg(b))
    }

    fn neg(&self, a: &SimCt) -> SimCt {
        let p = self.p();
        SimCt { mode: a.mode, depth: a.depth, data: a.data.iter().map(|&x| (p - x) % p).collect() }
    }

    fn add_plain(&self, a: &SimCt, pt: &SimPt) -> Result<SimCt> {
        Self::same_mode(a.mode, pt.mode)?;
        let p = self.p();
        Ok(SimCt {
            mode: a.mode,
            depth: a.depth,
            data: a.data.iter().zip(&pt.data).map(|(&x, &y)| (x + y) % p).collect(),
        })
    }

    fn sub_plain(&self, a: &SimCt, pt: &SimPt) -> Result<SimCt> {
        Self::same_mode(a.mode, pt.mode)?;
        let p = self.p();
        Ok(SimCt {
            mode: a.mode,
            depth: a.depth,
            data: a.data.iter().zip(&pt.data).map(|(&x, &y)| (x + p - y) % p).collect(),
        })
    }

    fn mul_plain(&self, a: &SimCt, pt: &SimPt) -> Result<SimCt> {
        Self::same_mode(a.mode, pt.mode)?;
        Ok(SimCt { mode: a.mode, depth: a.depth, data: self.ring_mul(a.mode, &a.data, &pt.data) })
    }

    fn add_scalar(&self, a: &SimCt, c: u64) -> SimCt {
        let p = self.p();
        let c = c % p;
        let mut data = a.data.clone();
        match a.mode {
            Mode::Polynomial => data[0] = (data[0] + c) % p,
            Mode::Batched => data.iter_mut().for_each(|x| *x = (*x + c) % p),
        }
        SimCt { mode: a.mode, depth: a.depth, data }
    }

    fn mul_scalar(&self, a: &SimCt, c: u64) -> SimCt {
        let p = self.p();
        SimCt { mode: a.mode, depth: a.depth, data: a.data.iter().map(|&x| mulmod(x, c % p, p)).collect() }
    }

    fn mul(&self, a: &SimCt, b: &SimCt) -> Result<SimCt> {
        Self::same_mode(a.mode, b.mode)?;
        let depth = a.depth.max(b.depth) + 1;
        if depth > self.params.depth_budget {
            return Err(HeError::DepthExceeded { depth, budget: self.params.depth_budget });
        }
        Ok(SimCt { mode: a.mode, depth, data: self.ring_mul(a.mode, &a.data, &b.data) })
    }

    fn rotate(&self, a: &SimCt, k: i64) -> Result<SimCt> {
        Self::same_mode(Mode::Batched, a.mode)?;
        let v = SlotVector { slots: a.data.clone() }.rotate(k);
        Ok(SimCt { mode: a.mode, depth: a.depth, data: v.slots })
    }

    fn hoist(&self, a: &SimCt) -> Result<SimCt> {
        Self::same_mode(Mode::Batched, a.mode)?;
        Ok(a.clone())
    }

    fn rotate_hoisted(&self, h: &SimCt, k: i64) -> Result<SimCt> {
        self.rotate(h, k)
    }

    fn lazy(&self, a: &SimCt) -> SimCt {
        a.clone()
    }

    fn lazy_rotate(&self, h: &SimCt, k: i64) -> Result<SimCt> {
        self.rotate(h, k)
    }

    fn lazy_add(&self, acc: &mut SimCt, b: &SimCt) -> Result<()> {
        *acc = self.add(acc, b)?;
        Ok(())
    }

    fn lazy_sub(&self, acc: &mut SimCt, b: &SimCt) -> Result<()> {
        *acc = self.sub(acc, b)?;
        Ok(())
    }

    fn lazy_add_scalar(&self, acc: &mut SimCt, c: u64) {
        *acc = self.add_scalar(acc, c);
    }

    fn lazy_neg(&self, acc: &mut SimCt) {
        *acc = self.neg(acc);
    }

    fn lazy_mul_plain(&self, a: &SimCt, p: &SimPt) -> Result<SimCt> {
        self.mul_plain(a, p)
    }

    fn lazy_finish(&self, a: &SimCt) -> SimCt {
        a.clone()
    }

    fn expand_at(&self, a: &SimCt, k: usize) -> Result<SimCt> {
        Self::same_mode(Mode::Polynomial, a.mode)?;
        let n = self.params.degree;
        if k >= n {
            return Err(HeError::OutOfRange { index: k, limit: n });
        }
        // the trace realisation multiplies by N and immediately by N^{-1}; both need p odd
        invmod(n as u64, self.p()).ok_or_else(|| HeError::InvalidParams("N not invertible mod p".into()))?;
        let mut data = vec![0u64; n];
        data[0] = a.data[k];
        Ok(SimCt { mode: a.mode, depth: a.depth, data })
    }

    fn lower(&self, a: &SimCt, _tier: Tier) -> SimCt {
        a.clone()
    }

    fn random_vec(&self, len: usize, nonzero: bool) -> Vec<u64> {
        let p = self.p();
        let lo = u64::from(nonzero);
        let mut rng = self.rng.lock().unwrap();
        (0..len).map(|_| rng.gen_range(lo..p)).collect()
    }

    fn serialize_ct(&self, ct: &SimCt) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + ct.data.len() * 8);
        out.extend_from_slice(MAGIC);
        out.push(match ct.mode {
            Mode::Polynomial => 0,
            Mode::Batched => 1,
        });
        out.extend_from_slice(&(ct.depth as u32).to_le_bytes());
        out.extend_from_slice(&(ct.data.len() as u32).to_le_bytes());
        for &x in &ct.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    fn deserialize_ct(&self, bytes: &[u8]) -> Result<SimCt> {
        let bad = |m: &str| HeError::Malformed(m.to_string());
        if bytes.len() < 13 || &bytes[..4] != MAGIC {
            return Err(bad("not a simulator ciphertext"));
        }
        let mode = match bytes[4] {
            0 => Mode::Polynomial,
            1 => Mode::Batched,
            _ => return Err(bad("unknown mode")),
        };
        let depth = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let len = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        if bytes.len() != 13 + 8 * len {
            return Err(bad("length mismatch"));
        }
        self.check_len(mode, len)?;
        let p = self.p();
        let data: Vec<u64> =
            bytes[13..].chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        if data.iter().any(|&x| x >= p) {
            return Err(bad("coefficient out of range"));
        }
        Ok(SimCt { mode, depth, data })
    }
}
