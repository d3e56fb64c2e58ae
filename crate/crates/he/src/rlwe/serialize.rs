//! Versioned binary containers for ciphertexts and key material.
//!
//! Every blob starts with a four-byte tag and a little-endian `u16` version. Residues are
//! stored in the fewest whole bytes that hold the limb's modulus.

use super::backend::{EvalKeys, RlweBackend, RlweCt};
use super::context::{ChainSpec, Context};
use super::eval::Ciphertext;
use super::keys::{KsKey, SecretKey};
use super::modulus::Modulus;
use super::rns::RnsPoly;
use crate::backend::Result;
use crate::error::HeError;
use crate::params::{BackendParams, Mode};
use std::sync::Arc;

pub const VERSION: u16 = 1;
const CT_TAG: &[u8; 4] = b"RLWC";
const EVAL_TAG: &[u8; 4] = b"RLWK";
const SECRET_TAG: &[u8; 4] = b"RLWS";

struct Writer(Vec<u8>);

impl Writer {
    fn new(tag: &[u8; 4]) -> Self {
        let mut v = tag.to_vec();
        v.extend_from_slice(&VERSION.to_le_bytes());
        Self(v)
    }
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn limb(&mut self, limb: &[u64], m: &Modulus) {
        let w = width(m);
        for &x in limb {
            self.0.extend_from_slice(&x.to_le_bytes()[..w]);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn malformed(msg: &str) -> HeError {
    HeError::Malformed(msg.to_string())
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], tag: &[u8; 4]) -> Result<Self> {
        if buf.len() < 6 || &buf[..4] != tag {
            return Err(malformed("unexpected blob tag"));
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != VERSION {
            return Err(malformed(&format!("unsupported version {version}")));
        }
        Ok(Self { buf, pos: 6 })
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(malformed("truncated blob"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn seed(&mut self) -> Result<[u8; 32]> {
        Ok(self.take(32)?.try_into().unwrap())
    }
    fn limb(&mut self, n: usize, m: &Modulus) -> Result<Vec<u64>> {
        let w = width(m);
        let raw = self.take(n * w)?;
        let mut out = Vec::with_capacity(n);
        for c in raw.chunks_exact(w) {
            let mut b = [0u8; 8];
            b[..w].copy_from_slice(c);
            let x = u64::from_le_bytes(b);
            if x >= m.value() {
                return Err(malformed("residue out of range"));
            }
            out.push(x);
        }
        Ok(out)
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(malformed("trailing bytes"));
        }
        Ok(())
    }
}

fn width(m: &Modulus) -> usize {
    m.bits().div_ceil(8) as usize
}

fn mode_byte(m: Mode) -> u8 {
    match m {
        Mode::Polynomial => 0,
        Mode::Batched => 1,
    }
}

fn byte_mode(b: u8) -> Result<Mode> {
    match b {
        0 => Ok(Mode::Polynomial),
        1 => Ok(Mode::Batched),
        _ => Err(malformed("unknown mode")),
    }
}

pub fn write_ct(ctx: &Context, ct: &RlweCt) -> Vec<u8> {
    let mut w = Writer::new(CT_TAG);
    let c = &ct.ct;
    w.u8(mode_byte(ct.mode));
    w.u32(ct.depth as u32);
    w.u8(c.level as u8);
    w.u8(c.parts.len() as u8);
    let seeded = c.parts.len() == 2 && c.seed.is_some() && c.level == ctx.max_level();
    w.u8(u8::from(seeded));
    if seeded {
        w.bytes(c.seed.as_ref().unwrap());
    }
    for (pi, part) in c.parts.iter().enumerate() {
        if seeded && pi == 1 {
            continue;
        }
        for (limb, m) in part.limbs.iter().zip(&ctx.q) {
            w.limb(limb, m);
        }
    }
    w.0
}

pub fn read_ct(ctx: &Context, bytes: &[u8]) -> Result<RlweCt> {
    let mut r = Reader::new(bytes, CT_TAG)?;
    let mode = byte_mode(r.u8()?)?;
    let depth = r.u32()? as usize;
    let level = r.u8()? as usize;
    let nparts = r.u8()? as usize;
    let seeded = r.u8()? == 1;
    if level == 0 || level > ctx.max_level() || !(2..=3).contains(&nparts) {
        return Err(malformed("bad ciphertext header"));
    }
    let seed = if seeded { Some(r.seed()?) } else { None };
    let mut parts = Vec::with_capacity(nparts);
    for pi in 0..nparts {
        if seeded && pi == 1 {
            continue;
        }
        let limbs = (0..level).map(|i| r.limb(ctx.n, &ctx.q[i])).collect::<Result<Vec<_>>>()?;
        parts.push(RnsPoly { limbs });
    }
    r.finish()?;
    let ct = match seed {
        Some(s) => {
            if level != ctx.max_level() || nparts != 2 {
                return Err(malformed("seeded ciphertext must be fresh"));
            }
            ctx.expand_seeded(parts.pop().unwrap(), s)
        }
        None => Ciphertext { parts, level, seed: None },
    };
    Ok(RlweCt { ct, mode, depth })
}

fn write_header(w: &mut Writer, params: &BackendParams, chain_mode: Mode, spec: &ChainSpec) {
    w.u32(params.degree as u32);
    w.u64(params.plain_modulus);
    w.u32(params.depth_budget as u32);
    w.u32(params.security_level);
    w.u8(mode_byte(chain_mode));
    w.u8(spec.q_bits.len() as u8);
    for &b in &spec.q_bits {
        w.u8(b as u8);
    }
    w.u8(spec.special_bits as u8);
}

fn read_header(r: &mut Reader) -> Result<(BackendParams, Mode, ChainSpec)> {
    let degree = r.u32()? as usize;
    let plain_modulus = r.u64()?;
    let depth_budget = r.u32()? as usize;
    let security_level = r.u32()?;
    let chain_mode = byte_mode(r.u8()?)?;
    let nq = r.u8()? as usize;
    let q_bits = (0..nq).map(|_| r.u8().map(u32::from)).collect::<Result<Vec<_>>>()?;
    let special_bits = r.u8()? as u32;
    let params = BackendParams { degree, plain_modulus, depth_budget, security_level };
    let spec = params.rlwe_chain(chain_mode)?;
    if spec.q_bits != q_bits || spec.special_bits != special_bits {
        return Err(malformed("modulus chain does not match the parameters"));
    }
    Ok((params, chain_mode, spec))
}

fn write_key(w: &mut Writer, ctx: &Context, key: &KsKey) {
    w.u8(key.level as u8);
    w.bytes(&key.seed);
    let mut moduli = ctx.q[..key.level].to_vec();
    moduli.push(ctx.sp);
    for d in &key.k0 {
        for (limb, m) in d.limbs.iter().zip(&moduli) {
            w.limb(limb, m);
        }
    }
}

fn read_key(r: &mut Reader, ctx: &Context) -> Result<KsKey> {
    let level = r.u8()? as usize;
    if level == 0 || level > ctx.max_level() {
        return Err(malformed("bad key level"));
    }
    let seed = r.seed()?;
    let moduli = ctx.ks_moduli(level);
    let mut k0 = Vec::with_capacity(level);
    for _ in 0..level {
        let limbs = moduli.iter().map(|m| r.limb(ctx.n, m)).collect::<Result<Vec<_>>>()?;
        k0.push(RnsPoly { limbs });
    }
    let k1 = KsKey::expand_k1(ctx, level, &seed);
    Ok(KsKey { level, seed, k0, k1 })
}

/// Public evaluation material: parameters, relinearisation and Galois keys.
pub fn write_eval_keys(b: &RlweBackend) -> Vec<u8> {
    use crate::backend::HeBackend;
    let ctx = b.context();
    let mut w = Writer::new(EVAL_TAG);
    write_header(&mut w, b.params(), b.chain_mode(), &ctx.spec);
    let keys = b.eval_keys();
    match &keys.relin {
        Some(k) => {
            w.u8(1);
            write_key(&mut w, ctx, k);
        }
        None => w.u8(0),
    }
    let mut gs: Vec<_> = keys.galois.keys().copied().collect();
    gs.sort();
    w.u32(gs.len() as u32);
    for g in gs {
        w.u32(g as u32);
        write_key(&mut w, ctx, &keys.galois[&g]);
    }
    w.0
}

pub fn write_secret_key(b: &RlweBackend) -> Result<Vec<u8>> {
    use crate::backend::HeBackend;
    let sk = b.secret_key().ok_or(HeError::NoSecretKey)?;
    let mut w = Writer::new(SECRET_TAG);
    write_header(&mut w, b.params(), b.chain_mode(), &b.context().spec);
    for &c in &sk.coeffs {
        w.u8(c as i8 as u8);
    }
    Ok(w.0)
}

/// Rebuilds a backend from evaluation keys and, optionally, the secret key.
pub fn read_backend(eval: &[u8], secret: Option<&[u8]>) -> Result<RlweBackend> {
    let mut r = Reader::new(eval, EVAL_TAG)?;
    let (params, chain_mode, spec) = read_header(&mut r)?;
    let ctx = Arc::new(Context::new(spec));
    let mut keys = EvalKeys::default();
    if r.u8()? == 1 {
        keys.relin = Some(read_key(&mut r, &ctx)?);
    }
    let count = r.u32()?;
    for _ in 0..count {
        let g = r.u32()? as usize;
        if g % 2 == 0 || g >= 2 * ctx.n {
            return Err(malformed("bad Galois element"));
        }
        keys.galois.insert(g, read_key(&mut r, &ctx)?);
    }
    r.finish()?;
    let sk = match secret {
        None => None,
        Some(bytes) => {
            let mut r = Reader::new(bytes, SECRET_TAG)?;
            let (p2, m2, _) = read_header(&mut r)?;
            if p2 != params || m2 != chain_mode {
                return Err(malformed("secret key parameters differ from evaluation keys"));
            }
            let raw = r.take(ctx.n)?;
            r.finish()?;
            let coeffs: Vec<i64> = raw.iter().map(|&b| b as i8 as i64).collect();
            if coeffs.iter().any(|c| c.abs() > 1) {
                return Err(malformed("secret key is not ternary"));
            }
            Some(SecretKey::from_coeffs(&ctx, coeffs))
        }
    };
    Ok(RlweBackend::from_parts(params, chain_mode, ctx, keys, sk))
}
