//! Secret keys, key-switching keys and sampling.

use super::context::Context;
use super::modulus::Modulus;
use super::rns::RnsPoly;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type Seed = [u8; 32];

const CBD_K: u32 = 21;

pub fn sample_ternary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1i64..=1)).collect()
}

/// Centered binomial noise with standard deviation `sqrt(21/2)`.
pub fn sample_error<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<i64> {
    let mask = (1u64 << CBD_K) - 1;
    (0..n)
        .map(|_| {
            let w = rng.next_u64();
            (w & mask).count_ones() as i64 - ((w >> 32) & mask).count_ones() as i64
        })
        .collect()
}

/// Uniform polynomial in evaluation form derived from a seed, one limb per modulus.
pub fn expand_uniform(seed: &Seed, moduli: &[Modulus], n: usize) -> RnsPoly {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let limbs = moduli
        .iter()
        .map(|m| {
            let shift = 64 - m.bits();
            (0..n)
                .map(|_| loop {
                    let x = rng.next_u64() >> shift;
                    if x < m.value() {
                        break x;
                    }
                })
                .collect()
        })
        .collect();
    RnsPoly { limbs }
}

/// Small signed polynomial reduced and transformed into each limb.
pub fn small_to_ntt(ctx: &Context, coeffs: &[i64], moduli: &[Modulus], with_special: bool) -> RnsPoly {
    let mut tables: Vec<&super::ntt::NttTable> = ctx.q_ntt[..moduli.len() - with_special as usize].iter().collect();
    if with_special {
        tables.push(&ctx.sp_ntt);
    }
    let limbs = moduli
        .iter()
        .zip(tables)
        .map(|(m, tbl)| {
            let mut v: Vec<u64> = coeffs.iter().map(|&c| m.reduce_i64(c)).collect();
            tbl.forward(&mut v);
            v
        })
        .collect();
    RnsPoly { limbs }
}

#[derive(Clone)]
pub struct SecretKey {
    pub coeffs: Vec<i64>,
    /// Evaluation form over every ciphertext prime followed by the special prime.
    pub ntt: RnsPoly,
}

impl SecretKey {
    pub fn generate<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Self {
        let coeffs = sample_ternary(rng, ctx.n);
        Self::from_coeffs(ctx, coeffs)
    }

    pub fn from_coeffs(ctx: &Context, coeffs: Vec<i64>) -> Self {
        let moduli = ctx.ks_moduli(ctx.max_level());
        let ntt = small_to_ntt(ctx, &coeffs, &moduli, true);
        Self { coeffs, ntt }
    }

    /// Limbs `0..l` of the key, plus the special limb when requested.
    pub fn limbs(&self, l: usize, with_special: bool) -> RnsPoly {
        let mut limbs: Vec<Vec<u64>> = self.ntt.limbs[..l].to_vec();
        if with_special {
            limbs.push(self.ntt.limbs.last().unwrap().clone());
        }
        RnsPoly { limbs }
    }
}

/// Hybrid key-switching key with one digit per ciphertext prime and a single special prime.
/// Limbs of each component are ordered `q_0..q_{L-1}, P` where `L` is the key level.
#[derive(Clone)]
pub struct KsKey {
    pub level: usize,
    pub seed: Seed,
    pub k0: Vec<RnsPoly>,
    pub k1: Vec<RnsPoly>,
}

impl KsKey {
    /// Key switching from `from` (given in evaluation form over the key basis) to `sk`.
    pub fn generate<R: RngCore + ?Sized>(
        ctx: &Context,
        sk: &SecretKey,
        from: &RnsPoly,
        level: usize,
        rng: &mut R,
    ) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let moduli = ctx.ks_moduli(level);
        let s = sk.limbs(level, true);
        let mut seed_rng = ChaCha20Rng::from_seed(seed);
        let mut k0 = Vec::with_capacity(level);
        let mut k1 = Vec::with_capacity(level);
        for i in 0..level {
            let mut digit_seed = [0u8; 32];
            seed_rng.fill_bytes(&mut digit_seed);
            let a = expand_uniform(&digit_seed, &moduli, ctx.n);
            let e = small_to_ntt(ctx, &sample_error(rng, ctx.n), &moduli, true);
            let mut b = a.clone();
            b.mul_assign(&s, &moduli);
            b.neg_assign(&moduli);
            b.add_assign(&e, &moduli);
            // gadget: P on limb i only
            let qi = moduli[i];
            let p_mod = qi.reduce(ctx.sp.value());
            for (x, y) in b.limbs[i].iter_mut().zip(&from.limbs[i]) {
                *x = qi.add(*x, qi.mul(p_mod, *y));
            }
            k0.push(b);
            k1.push(a);
        }
        Self { level, seed, k0, k1 }
    }

    /// Rebuilds the uniform halves from the seed.
    pub fn expand_k1(ctx: &Context, level: usize, seed: &Seed) -> Vec<RnsPoly> {
        let moduli = ctx.ks_moduli(level);
        let mut seed_rng = ChaCha20Rng::from_seed(*seed);
        (0..level)
            .map(|_| {
                let mut digit_seed = [0u8; 32];
                seed_rng.fill_bytes(&mut digit_seed);
                expand_uniform(&digit_seed, &moduli, ctx.n)
            })
            .collect()
    }
}
