//! Cleartext message spaces: `Z_p[X]/(X^N + 1)` and `Z_p^{N/2}`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolyPlain {
    pub coeffs: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotVector {
    pub slots: Vec<u64>,
}

impl PolyPlain {
    pub fn zero(n: usize) -> Self {
        Self { coeffs: vec![0; n] }
    }

    /// The monomial `X^k`, reduced negacyclically for any integer `k`.
    pub fn monomial(n: usize, k: i64, p: u64) -> Self {
        let mut out = Self::zero(n);
        let e = k.rem_euclid(2 * n as i64) as usize;
        if e < n {
            out.coeffs[e] = 1;
        } else {
            out.coeffs[e - n] = p - 1;
        }
        out
    }

    pub fn constant(n: usize, c: u64) -> Self {
        let mut out = Self::zero(n);
        out.coeffs[0] = c;
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &Self, p: u64) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + b) % p).collect() }
    }

    pub fn sub(&self, other: &Self, p: u64) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + p - b) % p).collect() }
    }

    pub fn scale(&self, c: u64, p: u64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&a| mulmod(a, c, p)).collect() }
    }

    /// Negacyclic product; cost is linear in the dense length times the sparser operand's support.
    pub fn mul(&self, other: &Self, p: u64) -> Self {
        let n = self.coeffs.len();
        let nz_a = self.coeffs.iter().filter(|&&c| c != 0).count();
        let nz_b = other.coeffs.iter().filter(|&&c| c != 0).count();
        let (dense, sparse) = if nz_a <= nz_b { (other, self) } else { (self, other) };
        let mut acc = vec![0u64; n];
        for (j, &s) in sparse.coeffs.iter().enumerate() {
            if s == 0 {
                continue;
            }
            for (i, &d) in dense.coeffs.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                let v = mulmod(s, d, p);
                let k = i + j;
                if k < n {
                    acc[k] = (acc[k] + v) % p;
                } else {
                    acc[k - n] = (acc[k - n] + p - v) % p;
                }
            }
        }
        Self { coeffs: acc }
    }
}

impl SlotVector {
    pub fn zero(len: usize) -> Self {
        Self { slots: vec![0; len] }
    }

    pub fn filled(len: usize, v: u64) -> Self {
        Self { slots: vec![v; len] }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Output slot `i` takes input slot `i - k` (circular).
    pub fn rotate(&self, k: i64) -> Self {
        let n = self.slots.len() as i64;
        Self { slots: (0..n).map(|i| self.slots[(i - k).rem_euclid(n) as usize]).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        Self { slots: self.slots.iter().zip(&other.slots).map(|(&a, &b)| f(a, b)).collect() }
    }
}

#[inline]
pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    r
}

/// Inverse modulo a prime.
pub fn invmod(a: u64, p: u64) -> Option<u64> {
    (a % p != 0).then(|| powmod(a, p - 2, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negacyclic_law_exhaustive_n8() {
        let p = 17;
        for i in 0..8i64 {
            for j in 0..8i64 {
                let prod = PolyPlain::monomial(8, i, p).mul(&PolyPlain::monomial(8, j, p), p);
                let want = if i + j < 8 {
                    PolyPlain::monomial(8, i + j, p)
                } else {
                    PolyPlain::monomial(8, i + j - 8, p).scale(p - 1, p)
                };
                assert_eq!(prod, want, "X^{i} * X^{j}");
            }
        }
    }

    #[test]
    fn x2_times_x7_wraps() {
        let p = 17;
        let prod = PolyPlain::monomial(8, 2, p).mul(&PolyPlain::monomial(8, 7, p), p);
        let mut want = PolyPlain::zero(8);
        want.coeffs[1] = 16;
        assert_eq!(prod, want);
    }

    #[test]
    fn rotation_direction() {
        let v = SlotVector { slots: vec![1, 0, 0, 0] };
        assert_eq!(v.rotate(1).slots, vec![0, 1, 0, 0]);
        assert_eq!(v.rotate(3).rotate(1), v);
    }
}
