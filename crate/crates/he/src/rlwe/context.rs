//! Precomputed tables for one BFV parameter set.

use super::modulus::{ntt_primes, Modulus};
use super::ntt::{automorphism_ntt_permutation, bit_reverse, NttTable};
use super::rns::{big_mod, product, BaseConverter, ScaleDown};
use num_bigint::BigUint;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Bit sizes of the ciphertext primes (lowest level first) and of the special prime.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChainSpec {
    pub degree: usize,
    pub plain_modulus: u64,
    pub q_bits: Vec<u32>,
    pub special_bits: u32,
}

impl ChainSpec {
    pub fn total_bits(&self) -> u32 {
        self.q_bits.iter().sum::<u32>() + self.special_bits
    }
}

pub(crate) struct LevelTables {
    pub delta: Vec<u64>,
    pub to_aux: BaseConverter,
    pub scale: ScaleDown,
    pub from_aux: BaseConverter,
    /// `q_{l-1}^{-1} mod q_i` for the primes that survive a modulus switch.
    pub last_inv: Vec<u64>,
}

pub struct Context {
    pub spec: ChainSpec,
    pub n: usize,
    pub log_n: u32,
    pub t: Modulus,
    pub t_ntt: Option<NttTable>,
    pub q: Vec<Modulus>,
    pub q_ntt: Vec<NttTable>,
    pub sp: Modulus,
    pub sp_ntt: NttTable,
    pub aux: Vec<Modulus>,
    pub aux_ntt: Vec<NttTable>,
    pub(crate) levels: Vec<LevelTables>,
    /// `P^{-1} mod q_i`.
    pub(crate) p_inv: Vec<u64>,
    /// Batched slot `j` (row-major over two rows of `n/2`) to bit-reversed evaluation index.
    pub(crate) slot_index: Vec<usize>,
    perms: RwLock<HashMap<usize, Arc<Vec<usize>>>>,
}

impl Context {
    pub fn new(spec: ChainSpec) -> Self {
        let n = spec.degree;
        assert!(n.is_power_of_two() && n >= 8, "degree must be a power of two >= 8");
        assert!(!spec.q_bits.is_empty(), "at least one ciphertext prime");
        let mut used: Vec<u64> = Vec::new();
        let mut q_vals = Vec::new();
        for &b in &spec.q_bits {
            let p = ntt_primes(b, n, 1, &used)[0];
            used.push(p);
            q_vals.push(p);
        }
        let sp_val = ntt_primes(spec.special_bits, n, 1, &used)[0];
        used.push(sp_val);
        let aux_vals = ntt_primes(61, n, spec.q_bits.len() + 1, &used);

        let q: Vec<Modulus> = q_vals.iter().map(|&v| Modulus::new(v)).collect();
        let sp = Modulus::new(sp_val);
        let aux: Vec<Modulus> = aux_vals.iter().map(|&v| Modulus::new(v)).collect();
        let t = Modulus::new(spec.plain_modulus);
        let t_ntt = if (spec.plain_modulus - 1) % (2 * n as u64) == 0 {
            Some(NttTable::new(t, n))
        } else {
            None
        };

        let mut levels = Vec::new();
        for l in 1..=q.len() {
            let ql = &q[..l];
            let big_q = product(ql);
            let delta_big: BigUint = &big_q / spec.plain_modulus;
            let delta = ql.iter().map(|m| big_mod(&delta_big, m)).collect();
            let r = &aux[..l + 1];
            let last = q[l - 1];
            let last_inv = q[..l - 1]
                .iter()
                .map(|m| m.inv(m.reduce(last.value())).expect("distinct primes"))
                .collect();
            levels.push(LevelTables {
                delta,
                to_aux: BaseConverter::new(ql, r),
                scale: ScaleDown::new(ql, r, spec.plain_modulus),
                from_aux: BaseConverter::new(r, ql),
                last_inv,
            });
        }
        let p_inv = q.iter().map(|m| m.inv(m.reduce(sp_val)).unwrap()).collect();

        let log_n = n.trailing_zeros();
        let half = n / 2;
        let two_n = 2 * n;
        let mut slot_index = vec![0usize; n];
        let mut e = 1usize;
        for i in 0..half {
            slot_index[i] = bit_reverse((e - 1) / 2, log_n);
            let e1 = two_n - e;
            slot_index[half + i] = bit_reverse((e1 - 1) / 2, log_n);
            e = (e * 3) % two_n;
        }

        Self {
            n,
            log_n,
            t,
            t_ntt,
            q_ntt: q.iter().map(|&m| NttTable::new(m, n)).collect(),
            sp_ntt: NttTable::new(sp, n),
            aux_ntt: aux.iter().map(|&m| NttTable::new(m, n)).collect(),
            q,
            sp,
            aux,
            levels,
            p_inv,
            slot_index,
            spec,
            perms: RwLock::new(HashMap::new()),
        }
    }

    pub fn max_level(&self) -> usize {
        self.q.len()
    }

    pub(crate) fn level(&self, l: usize) -> &LevelTables {
        &self.levels[l - 1]
    }

    /// Moduli of the key-switching basis at level `l`: `q_0..q_{l-1}, P`.
    pub fn ks_moduli(&self, l: usize) -> Vec<Modulus> {
        let mut v = self.q[..l].to_vec();
        v.push(self.sp);
        v
    }

    pub fn ks_tables(&self, l: usize) -> Vec<&NttTable> {
        let mut v: Vec<&NttTable> = self.q_ntt[..l].iter().collect();
        v.push(&self.sp_ntt);
        v
    }

    /// NTT-domain permutation for `X -> X^g`, cached.
    pub fn galois_perm(&self, g: usize) -> Arc<Vec<usize>> {
        if let Some(p) = self.perms.read().unwrap().get(&g) {
            return p.clone();
        }
        let p = Arc::new(automorphism_ntt_permutation(self.n, g));
        self.perms.write().unwrap().insert(g, p.clone());
        p
    }

    /// Galois element moving slot `i - k` to slot `i` (right rotation by `k`).
    pub fn rotation_galois(&self, k: i64) -> usize {
        let half = (self.n / 2) as i64;
        let r = (-k).rem_euclid(half) as u64;
        let two_n = Modulus::new(2 * self.n as u64);
        two_n.pow(3, r) as usize
    }

    /// Galois elements for the full trace, in application order.
    pub fn trace_galois(&self) -> Vec<usize> {
        (0..self.log_n).map(|i| (self.n >> i) + 1).collect()
    }
}
