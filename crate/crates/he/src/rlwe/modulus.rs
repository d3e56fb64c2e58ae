//! Word-sized prime moduli with Barrett and Shoup reduction.

/// A prime modulus below 2^62 together with its reduction constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus {
    value: u64,
    barrett: u128,
}

impl Modulus {
    pub fn new(value: u64) -> Self {
        assert!(value > 1 && value < (1 << 62), "modulus out of range");
        let barrett = u128::MAX / value as u128;
        Self { value, barrett }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bits(&self) -> u32 {
        64 - self.value.leading_zeros()
    }

    /// Reduces any u128 below `value^2 * 4` (in practice any product of two reduced words).
    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let xl = x as u64 as u128;
        let xh = x >> 64;
        let ml = self.barrett as u64 as u128;
        let mh = self.barrett >> 64;
        let t0 = (xl * ml) >> 64;
        let t1 = xl * mh;
        let t2 = xh * ml;
        let t3 = xh * mh;
        let mid = t0 + (t1 as u64 as u128) + (t2 as u64 as u128);
        let q_est = t3 + (t1 >> 64) + (t2 >> 64) + (mid >> 64);
        let mut r = x.wrapping_sub(q_est.wrapping_mul(self.value as u128)) as u64;
        while r >= self.value {
            r -= self.value;
        }
        r
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x >= self.value {
            x % self.value
        } else {
            x
        }
    }

    /// Reduces a signed integer into `[0, q)`.
    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.value as i64);
        r as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    /// Precomputes `floor(w * 2^64 / q)` for repeated multiplication by `w`.
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// `a * w mod q` given the Shoup constant of `w`; result in `[0, 2q)`.
    #[inline]
    pub fn mul_shoup_lazy(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let qhat = ((a as u128 * w_shoup as u128) >> 64) as u64;
        a.wrapping_mul(w).wrapping_sub(qhat.wrapping_mul(self.value))
    }

    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let r = self.mul_shoup_lazy(a, w, w_shoup);
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut result = 1u64;
        let mut b = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        result
    }

    /// Inverse modulo a prime; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = self.reduce(a);
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.value - 2))
        }
    }

    /// Maps `[0, q)` to the centered representative in `(-q/2, q/2]`.
    #[inline]
    pub fn center(&self, a: u64) -> i64 {
        if a > self.value / 2 {
            a as i64 - self.value as i64
        } else {
            a as i64
        }
    }
}

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Returns `count` distinct primes of exactly `bits` bits congruent to 1 mod `2n`,
/// scanning downward from `2^bits`, skipping any in `exclude`.
pub fn ntt_primes(bits: u32, n: usize, count: usize, exclude: &[u64]) -> Vec<u64> {
    let step = 2 * n as u64;
    let upper = 1u64 << bits;
    let mut candidate = upper - step + 1;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        assert!(candidate > (1u64 << (bits - 1)), "ran out of {bits}-bit NTT primes");
        if is_prime(candidate) && !exclude.contains(&candidate) {
            out.push(candidate);
        }
        candidate -= step;
    }
    out
}

/// Finds a primitive `order`-th root of unity modulo the prime `q` (order a power of two).
pub fn primitive_root_of_unity(q: &Modulus, order: u64) -> u64 {
    assert_eq!((q.value() - 1) % order, 0, "order does not divide q-1");
    let cofactor = (q.value() - 1) / order;
    for g in 2..q.value() {
        let w = q.pow(g, cofactor);
        if q.pow(w, order / 2) == q.value() - 1 {
            return w;
        }
    }
    unreachable!("prime field always has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrett_matches_naive() {
        let q = Modulus::new((1 << 61) - 1);
        let mut x: u64 = 0x1234_5678_9abc_def0 % q.value();
        for _ in 0..1000 {
            let y = x.wrapping_mul(6364136223846793005).wrapping_add(1) % q.value();
            assert_eq!(q.mul(x, y), ((x as u128 * y as u128) % q.value() as u128) as u64);
            x = y;
        }
    }

    #[test]
    fn shoup_matches_mul() {
        let q = Modulus::new(ntt_primes(60, 4096, 1, &[])[0]);
        let w = 123456789012345 % q.value();
        let ws = q.shoup(w);
        for a in [0, 1, 2, q.value() - 1, 987654321] {
            assert_eq!(q.mul_shoup(a, w, ws), q.mul(a, w));
        }
    }

    #[test]
    fn primes_and_roots() {
        assert!(is_prime(65537));
        assert!(!is_prime(65535));
        let ps = ntt_primes(50, 8192, 3, &[]);
        for p in &ps {
            assert!(is_prime(*p));
            assert_eq!(p % 16384, 1);
            let m = Modulus::new(*p);
            let w = primitive_root_of_unity(&m, 16384);
            assert_eq!(m.pow(w, 8192), p - 1);
        }
    }
}
