//! Encryption, decryption and homomorphic evaluation in evaluation (NTT) form.

use super::context::Context;
use super::keys::{expand_uniform, sample_error, small_to_ntt, KsKey, SecretKey, Seed};
use super::modulus::Modulus;
use super::rns::{crt_centered, RnsPoly};
use num_bigint::BigUint;
use rand::RngCore;
use std::collections::HashMap;

/// A ciphertext whose components are in evaluation form over `q_0..q_{level-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub parts: Vec<RnsPoly>,
    pub level: usize,
    /// Present while the second component is still the untouched seed expansion.
    pub seed: Option<Seed>,
}

/// A plaintext lifted to the centered range and transformed into evaluation form.
#[derive(Clone, Debug)]
pub struct PlainNtt {
    pub level: usize,
    pub limbs: RnsPoly,
    pub special: Option<Vec<u64>>,
}

/// A ciphertext held over the extended basis `q_0..q_{level-1}, P`, scaled by `P`.
#[derive(Clone, Debug)]
pub struct ExtCiphertext {
    pub c0: RnsPoly,
    pub c1: RnsPoly,
    pub level: usize,
}

/// Key-switching digits of one polynomial, in evaluation form over the extended basis.
#[derive(Clone, Debug)]
pub struct Decomposed {
    pub level: usize,
    pub digits: Vec<RnsPoly>,
}

fn center_lift(x: u64, from: &Modulus, to: &Modulus) -> u64 {
    let half = from.value() >> 1;
    if x <= half {
        to.reduce(x)
    } else {
        to.neg(to.reduce(from.value() - x))
    }
}

impl Context {
    fn moduli(&self, l: usize) -> &[Modulus] {
        &self.q[..l]
    }

    fn forward_limbs(&self, p: &mut RnsPoly) {
        for (limb, tbl) in p.limbs.iter_mut().zip(&self.q_ntt) {
            tbl.forward(limb);
        }
    }

    fn inverse_limbs(&self, p: &mut RnsPoly) {
        for (limb, tbl) in p.limbs.iter_mut().zip(&self.q_ntt) {
            tbl.inverse(limb);
        }
    }

    /// Lifts plaintext coefficients (mod t) to centered integers.
    fn centered_plain(&self, coeffs: &[u64]) -> Vec<i64> {
        coeffs.iter().map(|&c| self.t.center(self.t.reduce(c))).collect()
    }

    /// `Delta * m` at level `l` in evaluation form.
    fn scaled_plain(&self, coeffs: &[u64], l: usize) -> RnsPoly {
        let delta = &self.level(l).delta;
        let mut limbs = Vec::with_capacity(l);
        for i in 0..l {
            let qi = self.q[i];
            let d = delta[i];
            let ds = qi.shoup(d);
            let mut v: Vec<u64> =
                coeffs.iter().map(|&c| qi.mul_shoup(qi.reduce(self.t.reduce(c)), d, ds)).collect();
            self.q_ntt[i].forward(&mut v);
            limbs.push(v);
        }
        RnsPoly { limbs }
    }

    pub fn plain_ntt(&self, coeffs: &[u64], level: usize, with_special: bool) -> PlainNtt {
        let c = self.centered_plain(coeffs);
        let limbs = small_to_ntt(self, &c, &self.q[..level], false);
        let special = with_special.then(|| {
            let mut v: Vec<u64> = c.iter().map(|&x| self.sp.reduce_i64(x)).collect();
            self.sp_ntt.forward(&mut v);
            v
        });
        PlainNtt { level, limbs, special }
    }

    pub fn fresh_seed<R: RngCore + ?Sized>(rng: &mut R) -> Seed {
        let mut s = [0u8; 32];
        rng.fill_bytes(&mut s);
        s
    }

    /// Symmetric encryption with a seed-derived uniform component.
    pub fn encrypt_sk<R: RngCore + ?Sized>(&self, sk: &SecretKey, coeffs: &[u64], rng: &mut R) -> Ciphertext {
        let l = self.max_level();
        let seed = Self::fresh_seed(rng);
        let moduli = self.moduli(l);
        let a = expand_uniform(&seed, moduli, self.n);
        let e = small_to_ntt(self, &sample_error(rng, self.n), moduli, false);
        let mut c0 = a.clone();
        c0.mul_assign(&sk.limbs(l, false), moduli);
        c0.neg_assign(moduli);
        c0.add_assign(&e, moduli);
        c0.add_assign(&self.scaled_plain(coeffs, l), moduli);
        Ciphertext { parts: vec![c0, a], level: l, seed: Some(seed) }
    }

    /// Rebuilds the seeded component of a ciphertext received without it.
    pub fn expand_seeded(&self, c0: RnsPoly, seed: Seed) -> Ciphertext {
        let l = c0.num_limbs();
        let a = expand_uniform(&seed, self.moduli(l), self.n);
        Ciphertext { parts: vec![c0, a], level: l, seed: Some(seed) }
    }

    /// Phase `c0 + c1 s (+ c2 s^2)` in coefficient form at the ciphertext's level.
    fn phase(&self, sk: &SecretKey, ct: &Ciphertext) -> RnsPoly {
        let l = ct.level;
        let moduli = self.moduli(l);
        let s = sk.limbs(l, false);
        let mut acc = ct.parts[ct.parts.len() - 1].clone();
        for part in ct.parts[..ct.parts.len() - 1].iter().rev() {
            acc.mul_assign(&s, moduli);
            acc.add_assign(part, moduli);
        }
        self.inverse_limbs(&mut acc);
        acc
    }

    pub fn decrypt(&self, sk: &SecretKey, ct: &Ciphertext) -> Vec<u64> {
        let low = self.mod_switch_to(ct, 1);
        let v = self.phase(sk, &low);
        let q0 = self.q[0].value() as u128;
        let t = self.t.value() as u128;
        v.limbs[0]
            .iter()
            .map(|&x| (((x as u128 * t + q0 / 2) / q0) % t) as u64)
            .collect()
    }

    /// Remaining noise budget in bits (0 when decryption is no longer reliable).
    pub fn noise_budget(&self, sk: &SecretKey, ct: &Ciphertext) -> f64 {
        let v = self.phase(sk, ct);
        let moduli = self.moduli(ct.level);
        let big_q = super::rns::product(moduli);
        let t = self.t.value();
        let mut worst = BigUint::from(0u32);
        let mut residues = vec![0u64; ct.level];
        for c in 0..self.n {
            for (i, m) in moduli.iter().enumerate() {
                residues[i] = m.mul(v.limbs[i][c], m.reduce(t));
            }
            let (mag, _) = crt_centered(&residues, moduli);
            if mag > worst {
                worst = mag;
            }
        }
        let q_bits = big_q.bits() as f64;
        let w_bits = if worst.bits() == 0 { 0.0 } else { log2_big(&worst) };
        (q_bits - w_bits - 1.0).max(0.0)
    }

    fn align(&self, a: &Ciphertext, b: &Ciphertext) -> (Ciphertext, Ciphertext) {
        let l = a.level.min(b.level);
        (self.mod_switch_to(a, l), self.mod_switch_to(b, l))
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        let (mut x, y) = self.align(a, b);
        let moduli = self.moduli(x.level);
        if y.parts.len() > x.parts.len() {
            let mut y2 = y.clone();
            for (p, q) in y2.parts.iter_mut().zip(&x.parts) {
                p.add_assign(q, moduli);
            }
            y2.seed = None;
            return y2;
        }
        for (p, q) in x.parts.iter_mut().zip(&y.parts) {
            p.add_assign(q, moduli);
        }
        x.seed = None;
        x
    }

    pub fn neg(&self, a: &Ciphertext) -> Ciphertext {
        let mut x = a.clone();
        for p in x.parts.iter_mut() {
            p.neg_assign(self.moduli(a.level));
        }
        x.seed = None;
        x
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        self.add(a, &self.neg(b))
    }

    pub fn add_plain(&self, a: &Ciphertext, coeffs: &[u64]) -> Ciphertext {
        let mut x = a.clone();
        let m = self.scaled_plain(coeffs, a.level);
        x.parts[0].add_assign(&m, self.moduli(a.level));
        x
    }

    /// Adds the constant polynomial `c`.
    pub fn add_scalar(&self, a: &Ciphertext, c: u64) -> Ciphertext {
        let mut x = a.clone();
        let delta = &self.level(a.level).delta;
        let c = self.t.reduce(c);
        for (i, limb) in x.parts[0].limbs.iter_mut().enumerate() {
            let qi = self.q[i];
            let v = qi.mul(qi.reduce(c), delta[i]);
            for y in limb.iter_mut() {
                *y = qi.add(*y, v);
            }
        }
        x
    }

    pub fn mul_scalar(&self, a: &Ciphertext, c: u64) -> Ciphertext {
        let ci = self.t.center(self.t.reduce(c));
        let scalars: Vec<u64> = self.moduli(a.level).iter().map(|m| m.reduce_i64(ci)).collect();
        let mut x = a.clone();
        for p in x.parts.iter_mut() {
            p.mul_scalar_assign(&scalars, self.moduli(a.level));
        }
        x.seed = None;
        x
    }

    pub fn mul_plain(&self, a: &Ciphertext, p: &PlainNtt) -> Ciphertext {
        let a = self.mod_switch_to(a, a.level.min(p.level));
        let l = a.level;
        let moduli = self.moduli(l);
        let pl = RnsPoly { limbs: p.limbs.limbs[..l].to_vec() };
        let mut x = a;
        for part in x.parts.iter_mut() {
            part.mul_assign(&pl, moduli);
        }
        x.seed = None;
        x
    }

    /// Drops the last prime of the chain, dividing by it with rounding.
    pub fn mod_switch_down(&self, a: &Ciphertext) -> Ciphertext {
        let l = a.level;
        assert!(l > 1, "cannot switch below one prime");
        let last = self.q[l - 1];
        let inv = &self.level(l).last_inv;
        let mut parts = Vec::with_capacity(a.parts.len());
        for part in &a.parts {
            let mut top = part.limbs[l - 1].clone();
            self.q_ntt[l - 1].inverse(&mut top);
            let mut limbs = Vec::with_capacity(l - 1);
            for i in 0..l - 1 {
                let qi = self.q[i];
                let mut lift: Vec<u64> = top.iter().map(|&x| center_lift(x, &last, &qi)).collect();
                self.q_ntt[i].forward(&mut lift);
                let w = inv[i];
                let ws = qi.shoup(w);
                let out: Vec<u64> = part.limbs[i]
                    .iter()
                    .zip(&lift)
                    .map(|(&x, &y)| qi.mul_shoup(qi.sub(x, y), w, ws))
                    .collect();
                limbs.push(out);
            }
            parts.push(RnsPoly { limbs });
        }
        Ciphertext { parts, level: l - 1, seed: None }
    }

    pub fn mod_switch_to(&self, a: &Ciphertext, level: usize) -> Ciphertext {
        assert!(level >= 1 && level <= a.level, "invalid target level");
        let mut x = a.clone();
        while x.level > level {
            x = self.mod_switch_down(&x);
        }
        x
    }

    /// Key-switching digits of a coefficient-form polynomial at level `l`.
    /// `ntt_form` may supply the evaluation form of the same polynomial to skip transforms.
    pub fn decompose(&self, coeff: &RnsPoly, ntt_form: Option<&RnsPoly>, l: usize) -> Decomposed {
        let ks = self.ks_moduli(l);
        let tables = self.ks_tables(l);
        let mut digits = Vec::with_capacity(l);
        for i in 0..l {
            let qi = self.q[i];
            let src = &coeff.limbs[i];
            let mut limbs = Vec::with_capacity(l + 1);
            for (j, (m, tbl)) in ks.iter().zip(&tables).enumerate() {
                if j == i {
                    match ntt_form {
                        Some(f) => limbs.push(f.limbs[i].clone()),
                        None => {
                            let mut v = src.clone();
                            tbl.forward(&mut v);
                            limbs.push(v);
                        }
                    }
                    continue;
                }
                let mut v: Vec<u64> = src.iter().map(|&x| center_lift(x, &qi, m)).collect();
                tbl.forward(&mut v);
                limbs.push(v);
            }
            digits.push(RnsPoly { limbs });
        }
        Decomposed { level: l, digits }
    }

    /// Inner product of (optionally permuted) digits with a key, over the extended basis.
    fn ks_inner(&self, dec: &Decomposed, key: &KsKey, perm: Option<&[usize]>) -> (RnsPoly, RnsPoly) {
        let l = dec.level;
        assert!(key.level >= l, "key level below ciphertext level");
        let ks = self.ks_moduli(l);
        let n = self.n;
        let mut acc0 = RnsPoly::zero(n, l + 1);
        let mut acc1 = RnsPoly::zero(n, l + 1);
        for j in 0..=l {
            let kj = if j == l { key.level } else { j };
            let m = ks[j];
            let mut lo0 = vec![0u128; n];
            let mut lo1 = vec![0u128; n];
            for (i, d) in dec.digits.iter().enumerate() {
                let dl = &d.limbs[j];
                let k0 = &key.k0[i].limbs[kj];
                let k1 = &key.k1[i].limbs[kj];
                match perm {
                    Some(p) => {
                        for c in 0..n {
                            let x = dl[p[c]] as u128;
                            lo0[c] += x * k0[c] as u128;
                            lo1[c] += x * k1[c] as u128;
                        }
                    }
                    None => {
                        for c in 0..n {
                            let x = dl[c] as u128;
                            lo0[c] += x * k0[c] as u128;
                            lo1[c] += x * k1[c] as u128;
                        }
                    }
                }
                // keep accumulators bounded: at most 8 products of 62-bit words per reduction
                if i % 8 == 7 {
                    for c in 0..n {
                        lo0[c] = m.reduce_u128(lo0[c]) as u128;
                        lo1[c] = m.reduce_u128(lo1[c]) as u128;
                    }
                }
            }
            for c in 0..n {
                acc0.limbs[j][c] = m.reduce_u128(lo0[c]);
                acc1.limbs[j][c] = m.reduce_u128(lo1[c]);
            }
        }
        (acc0, acc1)
    }

    /// Divides an extended-basis polynomial by `P` with rounding, returning level-`l` limbs.
    pub fn mod_down(&self, p: &RnsPoly, l: usize) -> RnsPoly {
        let mut top = p.limbs[l].clone();
        self.sp_ntt.inverse(&mut top);
        let mut limbs = Vec::with_capacity(l);
        for i in 0..l {
            let qi = self.q[i];
            let mut lift: Vec<u64> = top.iter().map(|&x| center_lift(x, &self.sp, &qi)).collect();
            self.q_ntt[i].forward(&mut lift);
            let w = self.p_inv[i];
            let ws = qi.shoup(w);
            limbs.push(
                p.limbs[i].iter().zip(&lift).map(|(&x, &y)| qi.mul_shoup(qi.sub(x, y), w, ws)).collect(),
            );
        }
        RnsPoly { limbs }
    }

    pub fn relinearize(&self, a: &Ciphertext, rlk: &KsKey) -> Ciphertext {
        if a.parts.len() == 2 {
            return a.clone();
        }
        let l = a.level;
        let mut c2 = a.parts[2].clone();
        self.inverse_limbs(&mut c2);
        let dec = self.decompose(&c2, Some(&a.parts[2]), l);
        let (k0, k1) = self.ks_inner(&dec, rlk, None);
        let moduli = self.moduli(l);
        let mut c0 = a.parts[0].clone();
        let mut c1 = a.parts[1].clone();
        c0.add_assign(&self.mod_down(&k0, l), moduli);
        c1.add_assign(&self.mod_down(&k1, l), moduli);
        Ciphertext { parts: vec![c0, c1], level: l, seed: None }
    }

    /// Ciphertext product followed by relinearisation.
    pub fn mul(&self, a: &Ciphertext, b: &Ciphertext, rlk: &KsKey) -> Ciphertext {
        let (a, b) = self.align(a, b);
        assert!(a.parts.len() == 2 && b.parts.len() == 2);
        let l = a.level;
        let lt = self.level(l);
        let moduli = self.moduli(l);
        let r_mod = &self.aux[..l + 1];
        let r_ntt = &self.aux_ntt[..l + 1];

        let to_aux = |p: &RnsPoly| -> (RnsPoly, RnsPoly) {
            let mut coeff = p.clone();
            self.inverse_limbs(&mut coeff);
            let mut ext = RnsPoly { limbs: lt.to_aux.convert(&coeff.limbs) };
            for (limb, tbl) in ext.limbs.iter_mut().zip(r_ntt) {
                tbl.forward(limb);
            }
            (p.clone(), ext)
        };
        let (a0q, a0r) = to_aux(&a.parts[0]);
        let (a1q, a1r) = to_aux(&a.parts[1]);
        let (b0q, b0r) = to_aux(&b.parts[0]);
        let (b1q, b1r) = to_aux(&b.parts[1]);

        let tensor = |x0: &RnsPoly, x1: &RnsPoly, y0: &RnsPoly, y1: &RnsPoly, m: &[Modulus]| {
            let mut d0 = x0.clone();
            d0.mul_assign(y0, m);
            let mut d1 = x0.clone();
            d1.mul_assign(y1, m);
            d1.fma_assign(x1, y0, m);
            let mut d2 = x1.clone();
            d2.mul_assign(y1, m);
            [d0, d1, d2]
        };
        let dq = tensor(&a0q, &a1q, &b0q, &b1q, moduli);
        let dr = tensor(&a0r, &a1r, &b0r, &b1r, r_mod);

        let mut parts = Vec::with_capacity(3);
        for (mut pq, mut pr) in dq.into_iter().zip(dr) {
            self.inverse_limbs(&mut pq);
            for (limb, tbl) in pr.limbs.iter_mut().zip(r_ntt) {
                tbl.inverse(limb);
            }
            let scaled = lt.scale.apply(&pq.limbs, &pr.limbs);
            let mut back = RnsPoly { limbs: lt.from_aux.convert(&scaled) };
            self.forward_limbs(&mut back);
            parts.push(back);
        }
        let ct = Ciphertext { parts, level: l, seed: None };
        self.relinearize(&ct, rlk)
    }

    /// Applies `X -> X^g` to a two-component ciphertext.
    pub fn apply_galois(&self, a: &Ciphertext, g: usize, key: &KsKey) -> Ciphertext {
        let a = self.mod_switch_to(a, a.level.min(key.level));
        let dec = self.decompose_ct(&a);
        self.galois_hoisted(&a, &dec, g, key)
    }

    pub fn decompose_ct(&self, a: &Ciphertext) -> Decomposed {
        let mut c1 = a.parts[1].clone();
        self.inverse_limbs(&mut c1);
        self.decompose(&c1, Some(&a.parts[1]), a.level)
    }

    /// Automorphism reusing a precomputed decomposition of `a.parts[1]`.
    pub fn galois_hoisted(&self, a: &Ciphertext, dec: &Decomposed, g: usize, key: &KsKey) -> Ciphertext {
        let ext = self.galois_hoisted_ext(a, dec, g, key);
        self.ext_mod_down(&ext)
    }

    /// As [`Context::galois_hoisted`] but leaves the result over the extended basis.
    pub fn galois_hoisted_ext(&self, a: &Ciphertext, dec: &Decomposed, g: usize, key: &KsKey) -> ExtCiphertext {
        let l = a.level;
        assert_eq!(dec.level, l);
        let perm = self.galois_perm(g);
        let (mut k0, k1) = self.ks_inner(dec, key, Some(&perm));
        // c0 lifted by P: on q limbs multiply by P, on the P limb it vanishes
        for i in 0..l {
            let qi = self.q[i];
            let pm = qi.reduce(self.sp.value());
            let ps = qi.shoup(pm);
            let src = &a.parts[0].limbs[i];
            for (c, x) in k0.limbs[i].iter_mut().enumerate() {
                *x = qi.add(*x, qi.mul_shoup(src[perm[c]], pm, ps));
            }
        }
        ExtCiphertext { c0: k0, c1: k1, level: l }
    }

    pub fn ext_from(&self, a: &Ciphertext) -> ExtCiphertext {
        let l = a.level;
        let mut c0 = RnsPoly::zero(self.n, l + 1);
        let mut c1 = RnsPoly::zero(self.n, l + 1);
        for i in 0..l {
            let qi = self.q[i];
            let pm = qi.reduce(self.sp.value());
            let ps = qi.shoup(pm);
            for c in 0..self.n {
                c0.limbs[i][c] = qi.mul_shoup(a.parts[0].limbs[i][c], pm, ps);
                c1.limbs[i][c] = qi.mul_shoup(a.parts[1].limbs[i][c], pm, ps);
            }
        }
        ExtCiphertext { c0, c1, level: l }
    }

    pub fn ext_add_assign(&self, a: &mut ExtCiphertext, b: &ExtCiphertext) {
        let ks = self.ks_moduli(a.level);
        a.c0.add_assign(&b.c0, &ks);
        a.c1.add_assign(&b.c1, &ks);
    }

    pub fn ext_sub_assign(&self, a: &mut ExtCiphertext, b: &ExtCiphertext) {
        let ks = self.ks_moduli(a.level);
        a.c0.sub_assign(&b.c0, &ks);
        a.c1.sub_assign(&b.c1, &ks);
    }

    /// Adds the constant `c` (mod t) to an extended ciphertext.
    pub fn ext_add_scalar(&self, a: &mut ExtCiphertext, c: u64) {
        let l = a.level;
        let delta = &self.level(l).delta;
        let c = self.t.reduce(c);
        for i in 0..l {
            let qi = self.q[i];
            let v = qi.mul(qi.mul(qi.reduce(c), delta[i]), qi.reduce(self.sp.value()));
            for y in a.c0.limbs[i].iter_mut() {
                *y = qi.add(*y, v);
            }
        }
    }

    pub fn ext_neg_assign(&self, a: &mut ExtCiphertext) {
        let ks = self.ks_moduli(a.level);
        a.c0.neg_assign(&ks);
        a.c1.neg_assign(&ks);
    }

    pub fn ext_mul_plain(&self, a: &ExtCiphertext, p: &PlainNtt) -> ExtCiphertext {
        let l = a.level;
        assert!(p.level >= l, "plaintext level too low");
        let special = p.special.as_ref().expect("plaintext lacks the special limb");
        let mut limbs: Vec<Vec<u64>> = p.limbs.limbs[..l].to_vec();
        limbs.push(special.clone());
        let pl = RnsPoly { limbs };
        let ks = self.ks_moduli(l);
        let mut out = a.clone();
        out.c0.mul_assign(&pl, &ks);
        out.c1.mul_assign(&pl, &ks);
        out
    }

    pub fn ext_mod_down(&self, a: &ExtCiphertext) -> Ciphertext {
        let l = a.level;
        Ciphertext { parts: vec![self.mod_down(&a.c0, l), self.mod_down(&a.c1, l)], level: l, seed: None }
    }

    /// Multiplies by the monomial `X^k` (any integer `k`, negacyclic).
    pub fn mul_monomial(&self, a: &Ciphertext, k: i64) -> Ciphertext {
        let two_n = 2 * self.n as i64;
        let k = k.rem_euclid(two_n) as usize;
        let mut mono = vec![0u64; self.n];
        if k < self.n {
            mono[k] = 1;
        } else {
            mono[k - self.n] = self.t.value() - 1;
        }
        let p = self.plain_ntt(&mono, a.level, false);
        self.mul_plain(a, &p)
    }

    /// Scaled trace: coefficient `0` multiplied by `n`, every other coefficient cleared.
    pub fn trace(&self, a: &Ciphertext, keys: &HashMap<usize, KsKey>) -> Ciphertext {
        let mut x = a.clone();
        for g in self.trace_galois() {
            let key = keys.get(&g).expect("missing trace key");
            let y = self.apply_galois(&x, g, key);
            let xl = self.mod_switch_to(&x, y.level);
            x = self.add(&xl, &y);
        }
        x
    }

    /// Key switching key for `X -> X^g`.
    pub fn galois_key<R: RngCore + ?Sized>(&self, sk: &SecretKey, g: usize, level: usize, rng: &mut R) -> KsKey {
        let perm = self.galois_perm(g);
        let from = sk.limbs(level, true).permute(&perm);
        KsKey::generate(self, sk, &from, level, rng)
    }

    pub fn relin_key<R: RngCore + ?Sized>(&self, sk: &SecretKey, rng: &mut R) -> KsKey {
        let level = self.max_level();
        let moduli = self.ks_moduli(level);
        let mut s2 = sk.limbs(level, true);
        let s = s2.clone();
        s2.mul_assign(&s, &moduli);
        KsKey::generate(self, sk, &s2, level, rng)
    }

    /// Encodes a slot vector of length `n/2` into plaintext coefficients; both rows carry it.
    pub fn encode_slots(&self, values: &[u64]) -> Vec<u64> {
        let mut rows = Vec::with_capacity(self.n);
        rows.extend_from_slice(values);
        rows.extend_from_slice(values);
        self.encode_rows(&rows)
    }

    /// Encodes `n` values laid out as two rows of `n/2` slots.
    pub fn encode_rows(&self, values: &[u64]) -> Vec<u64> {
        let tbl = self.t_ntt.as_ref().expect("plaintext modulus does not support batching");
        assert_eq!(values.len(), self.n);
        let mut a = vec![0u64; self.n];
        for (j, &v) in values.iter().enumerate() {
            a[self.slot_index[j]] = self.t.reduce(v);
        }
        tbl.inverse(&mut a);
        a
    }

    pub fn decode_rows(&self, coeffs: &[u64]) -> Vec<u64> {
        let tbl = self.t_ntt.as_ref().expect("plaintext modulus does not support batching");
        let mut a = coeffs.to_vec();
        tbl.forward(&mut a);
        self.slot_index.iter().map(|&k| a[k]).collect()
    }

    pub fn decode_slots(&self, coeffs: &[u64]) -> Vec<u64> {
        let mut rows = self.decode_rows(coeffs);
        rows.truncate(self.n / 2);
        rows
    }
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.iter_u64_digits().next().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    (top.iter_u64_digits().next().unwrap() as f64).log2() + shift as f64
}
