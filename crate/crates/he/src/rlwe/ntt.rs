//! Negacyclic number-theoretic transform over `Z_q[X]/(X^N + 1)`.
//!
//! Forward output is in bit-reversed order: entry `k` holds the evaluation at
//! `psi^(2 * brv(k) + 1)` where `psi` is the chosen primitive `2N`-th root.

use super::modulus::{primitive_root_of_unity, Modulus};

#[derive(Clone, Debug)]
pub struct NttTable {
    q: Modulus,
    n: usize,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    psi_inv_rev: Vec<u64>,
    psi_inv_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

pub(crate) fn bit_reverse(x: usize, log_n: u32) -> usize {
    if log_n == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - log_n)
    }
}

impl NttTable {
    pub fn new(q: Modulus, n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2);
        let log_n = n.trailing_zeros();
        let psi = primitive_root_of_unity(&q, 2 * n as u64);
        let psi_inv = q.inv(psi).expect("root is invertible");
        let mut psi_rev = vec![0u64; n];
        let mut psi_inv_rev = vec![0u64; n];
        let mut pw = 1u64;
        let mut pw_inv = 1u64;
        for i in 0..n {
            let r = bit_reverse(i, log_n);
            psi_rev[r] = pw;
            psi_inv_rev[r] = pw_inv;
            pw = q.mul(pw, psi);
            pw_inv = q.mul(pw_inv, psi_inv);
        }
        let psi_rev_shoup = psi_rev.iter().map(|&w| q.shoup(w)).collect();
        let psi_inv_rev_shoup = psi_inv_rev.iter().map(|&w| q.shoup(w)).collect();
        let n_inv = q.inv(n as u64).expect("n invertible");
        Self {
            q,
            n,
            psi_rev,
            psi_rev_shoup,
            psi_inv_rev,
            psi_inv_rev_shoup,
            n_inv,
            n_inv_shoup: q.shoup(n_inv),
        }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.q
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// In-place forward transform; input and output reduced to `[0, q)`.
    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q.value();
        let two_q = 2 * q;
        let n = self.n;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t >>= 1;
            for i in 0..m {
                let j1 = 2 * i * t;
                let w = self.psi_rev[m + i];
                let ws = self.psi_rev_shoup[m + i];
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    // values live in [0, 4q)
                    let mut u = *x;
                    if u >= two_q {
                        u -= two_q;
                    }
                    let v = self.q.mul_shoup_lazy(*y, w, ws);
                    *x = u + v;
                    *y = u + two_q - v;
                }
            }
            m <<= 1;
        }
        for x in a.iter_mut() {
            let mut v = *x;
            if v >= two_q {
                v -= two_q;
            }
            if v >= q {
                v -= q;
            }
            *x = v;
        }
    }

    /// In-place inverse transform; input and output reduced to `[0, q)`.
    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q.value();
        let two_q = 2 * q;
        let n = self.n;
        let mut t = 1;
        let mut m = n >> 1;
        while m >= 1 {
            let mut j1 = 0;
            for i in 0..m {
                let w = self.psi_inv_rev[m + i];
                let ws = self.psi_inv_rev_shoup[m + i];
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    // values live in [0, 2q)
                    let u = *x;
                    let v = *y;
                    let mut s = u + v;
                    if s >= two_q {
                        s -= two_q;
                    }
                    *x = s;
                    *y = self.q.mul_shoup_lazy(u + two_q - v, w, ws);
                }
                j1 += 2 * t;
            }
            t <<= 1;
            m >>= 1;
        }
        for x in a.iter_mut() {
            *x = self.q.mul_shoup(*x, self.n_inv, self.n_inv_shoup);
        }
    }
}

/// Index permutation realising `X -> X^g` on bit-reversed NTT vectors:
/// `out[k] = in[perm[k]]`.
pub fn automorphism_ntt_permutation(n: usize, galois: usize) -> Vec<usize> {
    let log_n = n.trailing_zeros();
    let two_n = 2 * n;
    (0..n)
        .map(|k| {
            let e = 2 * bit_reverse(k, log_n) + 1;
            let e2 = (e * galois) % two_n;
            bit_reverse((e2 - 1) / 2, log_n)
        })
        .collect()
}

/// Applies `X -> X^g` to a coefficient-form polynomial modulo `q`.
pub fn automorphism_coeff(a: &[u64], galois: usize, q: &Modulus) -> Vec<u64> {
    let n = a.len();
    let two_n = 2 * n;
    let mut out = vec![0u64; n];
    for (i, &c) in a.iter().enumerate() {
        let j = (i * galois) % two_n;
        if j < n {
            out[j] = c;
        } else {
            out[j - n] = q.neg(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::modulus::ntt_primes;
    use super::*;

    fn negacyclic_mul(a: &[u64], b: &[u64], q: &Modulus) -> Vec<u64> {
        let n = a.len();
        let mut out = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let p = q.mul(a[i], b[j]);
                if i + j < n {
                    out[i + j] = q.add(out[i + j], p);
                } else {
                    out[i + j - n] = q.sub(out[i + j - n], p);
                }
            }
        }
        out
    }

    #[test]
    fn roundtrip_and_convolution() {
        for &bits in &[17u32, 40, 61] {
            let n = 64;
            let p = if bits == 17 { 65537 } else { ntt_primes(bits, n, 1, &[])[0] };
            let q = Modulus::new(p);
            let table = NttTable::new(q, n);
            let a: Vec<u64> = (0..n as u64).map(|i| (i * 7919 + 3) % p).collect();
            let b: Vec<u64> = (0..n as u64).map(|i| (i * i * 31 + 11) % p).collect();
            let mut fa = a.clone();
            table.forward(&mut fa);
            let mut back = fa.clone();
            table.inverse(&mut back);
            assert_eq!(back, a);
            let mut fb = b.clone();
            table.forward(&mut fb);
            let mut prod: Vec<u64> = fa.iter().zip(&fb).map(|(x, y)| q.mul(*x, *y)).collect();
            table.inverse(&mut prod);
            assert_eq!(prod, negacyclic_mul(&a, &b, &q));
        }
    }

    #[test]
    fn automorphism_in_ntt_domain_matches_coefficients() {
        let n = 32;
        let q = Modulus::new(ntt_primes(40, n, 1, &[])[0]);
        let table = NttTable::new(q, n);
        let a: Vec<u64> = (0..n as u64).map(|i| i * 1000 + 1).collect();
        for g in [3usize, 5, 9, 2 * n - 1] {
            let mut expect = automorphism_coeff(&a, g, &q);
            table.forward(&mut expect);
            let mut fa = a.clone();
            table.forward(&mut fa);
            let perm = automorphism_ntt_permutation(n, g);
            let got: Vec<u64> = perm.iter().map(|&k| fa[k]).collect();
            assert_eq!(got, expect, "galois {g}");
        }
    }
}
