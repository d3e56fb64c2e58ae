//! The RLWE backend behind the common evaluation contract.

use super::context::{ChainSpec, Context};
use super::eval::{Ciphertext, Decomposed, ExtCiphertext, PlainNtt};
use super::keys::{KsKey, SecretKey};
use crate::backend::{HeBackend, KeyRequest, Result, Tier};
use crate::error::HeError;
use crate::params::{BackendParams, Mode};
use crate::plain::{invmod, PolyPlain, SlotVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RlweCt {
    pub ct: Ciphertext,
    pub mode: Mode,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct RlwePt {
    mode: Mode,
    coeffs: Arc<Vec<u64>>,
    ntt: Arc<OnceLock<PlainNtt>>,
}

pub struct RlweHoisted {
    ct: RlweCt,
    decomposed: Mutex<HashMap<usize, Arc<Decomposed>>>,
}

#[derive(Clone, Debug)]
pub struct RlweLazy {
    ext: ExtCiphertext,
    mode: Mode,
    depth: usize,
}

#[derive(Clone, Default)]
pub struct EvalKeys {
    pub relin: Option<KsKey>,
    pub galois: HashMap<usize, KsKey>,
}

impl EvalKeys {
    pub fn num_keys(&self) -> usize {
        self.galois.len() + usize::from(self.relin.is_some())
    }
}

#[derive(Clone)]
pub struct RlweBackend {
    params: BackendParams,
    chain_mode: Mode,
    ctx: Arc<Context>,
    keys: Arc<EvalKeys>,
    sk: Option<Arc<SecretKey>>,
    rng: Arc<Mutex<ChaCha20Rng>>,
}

impl RlweBackend {
    /// Builds the context for `params` (chain chosen for `chain_mode`) and generates keys.
    pub fn generate(params: BackendParams, chain_mode: Mode, req: &KeyRequest, seed: Option<u64>) -> Result<Self> {
        let spec = params.rlwe_chain(chain_mode)?;
        let ctx = Arc::new(Context::new(spec));
        let mut rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        let sk = SecretKey::generate(&ctx, &mut rng);
        let keys = Self::make_keys(&ctx, &params, &sk, req, &mut rng);
        Ok(Self {
            params,
            chain_mode,
            ctx,
            keys: Arc::new(keys),
            sk: Some(Arc::new(sk)),
            rng: Arc::new(Mutex::new(rng)),
        })
    }

    /// Same parameters and secret key with a different set of evaluation keys.
    pub fn with_keys(&self, req: &KeyRequest) -> Result<Self> {
        let sk = self.sk.as_ref().ok_or(HeError::NoSecretKey)?;
        let keys = {
            let mut rng = self.rng.lock().unwrap();
            Self::make_keys(&self.ctx, &self.params, sk, req, &mut *rng)
        };
        Ok(Self { keys: Arc::new(keys), ..self.clone() })
    }

    fn make_keys(ctx: &Context, params: &BackendParams, sk: &SecretKey, req: &KeyRequest, rng: &mut ChaCha20Rng) -> EvalKeys {
        let mut keys = EvalKeys::default();
        if req.relin && params.depth_budget > 0 {
            keys.relin = Some(ctx.relin_key(sk, rng));
        }
        let mut wanted: HashMap<usize, usize> = HashMap::new();
        if req.expansion {
            for g in ctx.trace_galois() {
                wanted.insert(g, ctx.max_level());
            }
        }
        for &(k, tier) in &req.rotations {
            let g = ctx.rotation_galois(k);
            if g == 1 {
                continue;
            }
            let level = tier_level(ctx, tier);
            let e = wanted.entry(g).or_insert(level);
            *e = (*e).max(level);
        }
        let mut gs: Vec<_> = wanted.into_iter().collect();
        gs.sort();
        for (g, level) in gs {
            keys.galois.insert(g, ctx.galois_key(sk, g, level, rng));
        }
        keys
    }

    /// Assembles a backend from transported parts.
    pub fn from_parts(
        params: BackendParams,
        chain_mode: Mode,
        ctx: Arc<Context>,
        keys: EvalKeys,
        sk: Option<SecretKey>,
    ) -> Self {
        Self {
            params,
            chain_mode,
            ctx,
            keys: Arc::new(keys),
            sk: sk.map(Arc::new),
            rng: Arc::new(Mutex::new(ChaCha20Rng::from_entropy())),
        }
    }

    /// A copy holding only public material.
    pub fn public_view(&self) -> Self {
        Self { sk: None, rng: Arc::new(Mutex::new(ChaCha20Rng::from_entropy())), ..self.clone() }
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.ctx.spec
    }

    pub fn chain_mode(&self) -> Mode {
        self.chain_mode
    }

    pub fn eval_keys(&self) -> &EvalKeys {
        &self.keys
    }

    pub fn secret_key(&self) -> Option<&SecretKey> {
        self.sk.as_deref()
    }

    pub fn has_secret_key(&self) -> bool {
        self.sk.is_some()
    }

    /// Remaining noise budget in bits; requires the secret key.
    pub fn noise_budget(&self, ct: &RlweCt) -> Result<f64> {
        let sk = self.sk.as_ref().ok_or(HeError::NoSecretKey)?;
        Ok(self.ctx.noise_budget(sk, &ct.ct))
    }

    pub fn level(&self, ct: &RlweCt) -> usize {
        ct.ct.level
    }

    fn same_mode(a: Mode, b: Mode) -> Result<()> {
        if a != b {
            return Err(HeError::ModeMismatch { expected: a, found: b });
        }
        Ok(())
    }

    fn check_len(&self, mode: Mode, len: usize) -> Result<()> {
        let expected = match mode {
            Mode::Polynomial => self.ctx.n,
            Mode::Batched => self.ctx.n / 2,
        };
        if len != expected {
            return Err(HeError::Length { expected, found: len });
        }
        Ok(())
    }

    fn encrypt_coeffs(&self, coeffs: &[u64], mode: Mode) -> Result<RlweCt> {
        let sk = self.sk.as_ref().ok_or(HeError::NoSecretKey)?;
        let mut rng = self.rng.lock().unwrap();
        Ok(RlweCt { ct: self.ctx.encrypt_sk(sk, coeffs, &mut *rng), mode, depth: 0 })
    }

    fn decrypt_coeffs(&self, ct: &RlweCt) -> Result<Vec<u64>> {
        let sk = self.sk.as_ref().ok_or(HeError::NoSecretKey)?;
        Ok(self.ctx.decrypt(sk, &ct.ct))
    }

    fn plain_ntt<'a>(&self, p: &'a RlwePt) -> &'a PlainNtt {
        p.ntt.get_or_init(|| self.ctx.plain_ntt(&p.coeffs, self.ctx.max_level(), true))
    }

    fn rotation_key(&self, k: i64) -> Result<Option<(usize, &KsKey)>> {
        let g = self.ctx.rotation_galois(k);
        if g == 1 {
            return Ok(None);
        }
        self.keys
            .galois
            .get(&g)
            .map(|key| Some((g, key)))
            .ok_or_else(|| HeError::MissingKey(format!("rotation by {k}")))
    }

    fn relin(&self) -> Result<&KsKey> {
        self.keys.relin.as_ref().ok_or_else(|| HeError::MissingKey("relinearisation".into()))
    }

    fn decomposition(&self, h: &RlweHoisted, level: usize) -> Arc<Decomposed> {
        let mut cache = h.decomposed.lock().unwrap();
        cache
            .entry(level)
            .or_insert_with(|| {
                let low = self.ctx.mod_switch_to(&h.ct.ct, level);
                Arc::new(self.ctx.decompose_ct(&low))
            })
            .clone()
    }

    fn align_lazy(&self, a: &mut RlweLazy, b: &RlweLazy) -> RlweLazy {
        if a.ext.level == b.ext.level {
            return b.clone();
        }
        let l = a.ext.level.min(b.ext.level);
        let relift = |x: &RlweLazy| {
            let ct = self.ctx.mod_switch_to(&self.ctx.ext_mod_down(&x.ext), l);
            RlweLazy { ext: self.ctx.ext_from(&ct), mode: x.mode, depth: x.depth }
        };
        if a.ext.level > l {
            *a = relift(a);
            b.clone()
        } else {
            relift(b)
        }
    }
}

fn tier_level(ctx: &Context, tier: Tier) -> usize {
    match tier {
        Tier::Top => ctx.max_level(),
        Tier::Mid => ctx.max_level().min(2),
        Tier::Low => 1,
    }
}

impl HeBackend for RlweBackend {
    type Ct = RlweCt;
    type Pt = RlwePt;
    type Hoisted = RlweHoisted;
    type Lazy = RlweLazy;

    fn name(&self) -> &'static str {
        "rlwe"
    }

    fn params(&self) -> &BackendParams {
        &self.params
    }

    fn encrypt_poly(&self, m: &PolyPlain) -> Result<RlweCt> {
        self.check_len(Mode::Polynomial, m.coeffs.len())?;
        self.encrypt_coeffs(&m.coeffs, Mode::Polynomial)
    }

    fn encrypt_slots(&self, m: &SlotVector) -> Result<RlweCt> {
        self.params.validate(Mode::Batched)?;
        self.check_len(Mode::Batched, m.slots.len())?;
        self.encrypt_coeffs(&self.ctx.encode_slots(&m.slots), Mode::Batched)
    }

    fn decrypt_poly(&self, ct: &RlweCt) -> Result<PolyPlain> {
        Self::same_mode(Mode::Polynomial, ct.mode)?;
        Ok(PolyPlain { coeffs: self.decrypt_coeffs(ct)? })
    }

    fn decrypt_slots(&self, ct: &RlweCt) -> Result<SlotVector> {
        Self::same_mode(Mode::Batched, ct.mode)?;
        Ok(SlotVector { slots: self.ctx.decode_slots(&self.decrypt_coeffs(ct)?) })
    }

    fn encode_poly(&self, m: &PolyPlain) -> Result<RlwePt> {
        self.check_len(Mode::Polynomial, m.coeffs.len())?;
        let t = self.ctx.t.value();
        Ok(RlwePt {
            mode: Mode::Polynomial,
            coeffs: Arc::new(m.coeffs.iter().map(|&c| c % t).collect()),
            ntt: Arc::new(OnceLock::new()),
        })
    }

    fn encode_slots(&self, m: &SlotVector) -> Result<RlwePt> {
        self.params.validate(Mode::Batched)?;
        self.check_len(Mode::Batched, m.slots.len())?;
        Ok(RlwePt {
            mode: Mode::Batched,
            coeffs: Arc::new(self.ctx.encode_slots(&m.slots)),
            ntt: Arc::new(OnceLock::new()),
        })
    }

    fn mode(&self, ct: &RlweCt) -> Mode {
        ct.mode
    }

    fn depth(&self, ct: &RlweCt) -> usize {
        ct.depth
    }

    fn add(&self, a: &RlweCt, b: &RlweCt) -> Result<RlweCt> {
        Self::same_mode(a.mode, b.mode)?;
        Ok(RlweCt { ct: self.ctx.add(&a.ct, &b.ct), mode: a.mode, depth: a.depth.max(b.depth) })
    }

    fn sub(&self, a: &RlweCt, b: &RlweCt) -> Result<RlweCt> {
        Self::same_mode(a.mode, b.mode)?;
        Ok(RlweCt { ct: self.ctx.sub(&a.ct, &b.ct), mode: a.mode, depth: a.depth.max(b.depth) })
    }

    fn neg(&self, a: &RlweCt) -> RlweCt {
        RlweCt { ct: self.ctx.neg(&a.ct), mode: a.mode, depth: a.depth }
    }

    fn add_plain(&self, a: &RlweCt, p: &RlwePt) -> Result<RlweCt> {
        Self::same_mode(a.mode, p.mode)?;
        Ok(RlweCt { ct: self.ctx.add_plain(&a.ct, &p.coeffs), mode: a.mode, depth: a.depth })
    }

    fn sub_plain(&self, a: &RlweCt, p: &RlwePt) -> Result<RlweCt> {
        Self::same_mode(a.mode, p.mode)?;
        let t = self.ctx.t.value();
        let neg: Vec<u64> = p.coeffs.iter().map(|&c| (t - c) % t).collect();
        Ok(RlweCt { ct: self.ctx.add_plain(&a.ct, &neg), mode: a.mode, depth: a.depth })
    }

    fn mul_plain(&self, a: &RlweCt, p: &RlwePt) -> Result<RlweCt> {
        Self::same_mode(a.mode, p.mode)?;
        let ntt = self.plain_ntt(p);
        Ok(RlweCt { ct: self.ctx.mul_plain(&a.ct, ntt), mode: a.mode, depth: a.depth })
    }

    fn add_scalar(&self, a: &RlweCt, c: u64) -> RlweCt {
        RlweCt { ct: self.ctx.add_scalar(&a.ct, c), mode: a.mode, depth: a.depth }
    }

    fn mul_scalar(&self, a: &RlweCt, c: u64) -> RlweCt {
        RlweCt { ct: self.ctx.mul_scalar(&a.ct, c), mode: a.mode, depth: a.depth }
    }

    fn mul(&self, a: &RlweCt, b: &RlweCt) -> Result<RlweCt> {
        Self::same_mode(a.mode, b.mode)?;
        let depth = a.depth.max(b.depth) + 1;
        if depth > self.params.depth_budget {
            return Err(HeError::DepthExceeded { depth, budget: self.params.depth_budget });
        }
        Ok(RlweCt { ct: self.ctx.mul(&a.ct, &b.ct, self.relin()?), mode: a.mode, depth })
    }

    fn rotate(&self, a: &RlweCt, k: i64) -> Result<RlweCt> {
        Self::same_mode(Mode::Batched, a.mode)?;
        match self.rotation_key(k)? {
            None => Ok(a.clone()),
            Some((g, key)) => Ok(RlweCt { ct: self.ctx.apply_galois(&a.ct, g, key), mode: a.mode, depth: a.depth }),
        }
    }

    fn hoist(&self, a: &RlweCt) -> Result<RlweHoisted> {
        Self::same_mode(Mode::Batched, a.mode)?;
        Ok(RlweHoisted { ct: a.clone(), decomposed: Mutex::new(HashMap::new()) })
    }

    fn rotate_hoisted(&self, h: &RlweHoisted, k: i64) -> Result<RlweCt> {
        let lazy = self.lazy_rotate(h, k)?;
        Ok(self.lazy_finish(&lazy))
    }

    fn lazy(&self, a: &RlweCt) -> RlweLazy {
        RlweLazy { ext: self.ctx.ext_from(&a.ct), mode: a.mode, depth: a.depth }
    }

    fn lazy_rotate(&self, h: &RlweHoisted, k: i64) -> Result<RlweLazy> {
        match self.rotation_key(k)? {
            None => Ok(self.lazy(&h.ct)),
            Some((g, key)) => {
                let level = h.ct.ct.level.min(key.level);
                let dec = self.decomposition(h, level);
                let low = self.ctx.mod_switch_to(&h.ct.ct, level);
                let ext = self.ctx.galois_hoisted_ext(&low, &dec, g, key);
                Ok(RlweLazy { ext, mode: h.ct.mode, depth: h.ct.depth })
            }
        }
    }

    fn lazy_add(&self, acc: &mut RlweLazy, b: &RlweLazy) -> Result<()> {
        Self::same_mode(acc.mode, b.mode)?;
        let b = self.align_lazy(acc, b);
        self.ctx.ext_add_assign(&mut acc.ext, &b.ext);
        acc.depth = acc.depth.max(b.depth);
        Ok(())
    }

    fn lazy_sub(&self, acc: &mut RlweLazy, b: &RlweLazy) -> Result<()> {
        Self::same_mode(acc.mode, b.mode)?;
        let b = self.align_lazy(acc, b);
        self.ctx.ext_sub_assign(&mut acc.ext, &b.ext);
        acc.depth = acc.depth.max(b.depth);
        Ok(())
    }

    fn lazy_add_scalar(&self, acc: &mut RlweLazy, c: u64) {
        self.ctx.ext_add_scalar(&mut acc.ext, c);
    }

    fn lazy_neg(&self, acc: &mut RlweLazy) {
        self.ctx.ext_neg_assign(&mut acc.ext);
    }

    fn lazy_mul_plain(&self, a: &RlweLazy, p: &RlwePt) -> Result<RlweLazy> {
        Self::same_mode(a.mode, p.mode)?;
        let ntt = self.plain_ntt(p);
        Ok(RlweLazy { ext: self.ctx.ext_mul_plain(&a.ext, ntt), mode: a.mode, depth: a.depth })
    }

    fn lazy_finish(&self, a: &RlweLazy) -> RlweCt {
        RlweCt { ct: self.ctx.ext_mod_down(&a.ext), mode: a.mode, depth: a.depth }
    }

    fn expand_at(&self, a: &RlweCt, k: usize) -> Result<RlweCt> {
        Self::same_mode(Mode::Polynomial, a.mode)?;
        let n = self.ctx.n;
        if k >= n {
            return Err(HeError::OutOfRange { index: k, limit: n });
        }
        for g in self.ctx.trace_galois() {
            if !self.keys.galois.contains_key(&g) {
                return Err(HeError::MissingKey("coefficient expansion".into()));
            }
        }
        let shifted = self.ctx.mul_monomial(&a.ct, -(k as i64));
        let traced = self.ctx.trace(&shifted, &self.keys.galois);
        let n_inv = invmod(n as u64, self.ctx.t.value())
            .ok_or_else(|| HeError::InvalidParams("N not invertible mod p".into()))?;
        Ok(RlweCt { ct: self.ctx.mul_scalar(&traced, n_inv), mode: a.mode, depth: a.depth })
    }

    fn lower(&self, a: &RlweCt, tier: Tier) -> RlweCt {
        let level = tier_level(&self.ctx, tier).min(a.ct.level);
        RlweCt { ct: self.ctx.mod_switch_to(&a.ct, level), mode: a.mode, depth: a.depth }
    }

    fn random_vec(&self, len: usize, nonzero: bool) -> Vec<u64> {
        let p = self.ctx.t.value();
        let lo = u64::from(nonzero);
        let mut rng = self.rng.lock().unwrap();
        (0..len).map(|_| rng.gen_range(lo..p)).collect()
    }

    fn serialize_ct(&self, ct: &RlweCt) -> Vec<u8> {
        super::serialize::write_ct(&self.ctx, ct)
    }

    fn deserialize_ct(&self, bytes: &[u8]) -> Result<RlweCt> {
        super::serialize::read_ct(&self.ctx, bytes)
    }
}
