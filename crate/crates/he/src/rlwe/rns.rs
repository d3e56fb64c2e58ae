//! Residue-number-system helpers: polynomials over a product of word primes and
//! fast base conversion with floating-point overflow correction.

use super::modulus::Modulus;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// A polynomial stored limb-by-limb, one vector of `n` residues per modulus.
/// Whether the limbs are in coefficient or evaluation form is tracked by the caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsPoly {
    pub limbs: Vec<Vec<u64>>,
}

impl RnsPoly {
    pub fn zero(n: usize, limbs: usize) -> Self {
        Self { limbs: vec![vec![0u64; n]; limbs] }
    }

    pub fn num_limbs(&self) -> usize {
        self.limbs.len()
    }

    pub fn add_assign(&mut self, other: &RnsPoly, moduli: &[Modulus]) {
        for ((a, b), q) in self.limbs.iter_mut().zip(&other.limbs).zip(moduli) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = q.add(*x, *y);
            }
        }
    }

    pub fn sub_assign(&mut self, other: &RnsPoly, moduli: &[Modulus]) {
        for ((a, b), q) in self.limbs.iter_mut().zip(&other.limbs).zip(moduli) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = q.sub(*x, *y);
            }
        }
    }

    pub fn neg_assign(&mut self, moduli: &[Modulus]) {
        for (a, q) in self.limbs.iter_mut().zip(moduli) {
            for x in a.iter_mut() {
                *x = q.neg(*x);
            }
        }
    }

    /// Pointwise product (both operands in evaluation form).
    pub fn mul_assign(&mut self, other: &RnsPoly, moduli: &[Modulus]) {
        for ((a, b), q) in self.limbs.iter_mut().zip(&other.limbs).zip(moduli) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = q.mul(*x, *y);
            }
        }
    }

    /// `self += a * b` pointwise.
    pub fn fma_assign(&mut self, a: &RnsPoly, b: &RnsPoly, moduli: &[Modulus]) {
        for (((acc, x), y), q) in self.limbs.iter_mut().zip(&a.limbs).zip(&b.limbs).zip(moduli) {
            for ((z, u), v) in acc.iter_mut().zip(x).zip(y) {
                *z = q.add(*z, q.mul(*u, *v));
            }
        }
    }

    /// Multiplies limb `i` by the scalar `scalars[i]`.
    pub fn mul_scalar_assign(&mut self, scalars: &[u64], moduli: &[Modulus]) {
        for ((a, &s), q) in self.limbs.iter_mut().zip(scalars).zip(moduli) {
            let ss = q.shoup(s);
            for x in a.iter_mut() {
                *x = q.mul_shoup(*x, s, ss);
            }
        }
    }

    pub fn truncate(&mut self, limbs: usize) {
        self.limbs.truncate(limbs);
    }

    pub fn permute(&self, perm: &[usize]) -> RnsPoly {
        RnsPoly {
            limbs: self.limbs.iter().map(|l| perm.iter().map(|&k| l[k]).collect()).collect(),
        }
    }
}

pub fn product(moduli: &[Modulus]) -> BigUint {
    moduli.iter().fold(BigUint::one(), |acc, q| acc * q.value())
}

pub fn big_mod(x: &BigUint, q: &Modulus) -> u64 {
    (x % q.value()).to_u64().expect("residue fits a word")
}

/// Converts a value known by its residues modulo `from` into residues modulo `to`,
/// interpreting the input as the centered representative in `[-Q/2, Q/2)`.
#[derive(Clone, Debug)]
pub struct BaseConverter {
    from: Vec<Modulus>,
    to: Vec<Modulus>,
    qhat_inv: Vec<u64>,
    qhat_inv_shoup: Vec<u64>,
    qhat_mod_to: Vec<Vec<u64>>,
    q_mod_to: Vec<u64>,
    inv_from_f64: Vec<f64>,
}

impl BaseConverter {
    pub fn new(from: &[Modulus], to: &[Modulus]) -> Self {
        let q = product(from);
        let mut qhat_inv = Vec::new();
        let mut qhat_mod_to = Vec::new();
        for qi in from {
            let qhat = &q / qi.value();
            let r = big_mod(&qhat, qi);
            qhat_inv.push(qi.inv(r).expect("coprime moduli"));
            qhat_mod_to.push(to.iter().map(|m| big_mod(&qhat, m)).collect());
        }
        let qhat_inv_shoup = from.iter().zip(&qhat_inv).map(|(m, &w)| m.shoup(w)).collect();
        Self {
            from: from.to_vec(),
            to: to.to_vec(),
            qhat_inv,
            qhat_inv_shoup,
            qhat_mod_to,
            q_mod_to: to.iter().map(|m| big_mod(&q, m)).collect(),
            inv_from_f64: from.iter().map(|m| 1.0 / m.value() as f64).collect(),
        }
    }

    /// `input[i]` holds coefficient residues modulo `from[i]`; returns one limb per `to` modulus.
    pub fn convert(&self, input: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let n = input[0].len();
        let k = self.from.len();
        let mut out = vec![vec![0u64; n]; self.to.len()];
        let mut y = vec![0u64; k];
        for c in 0..n {
            let mut frac = 0.0f64;
            for i in 0..k {
                let v = self.from[i].mul_shoup(input[i][c], self.qhat_inv[i], self.qhat_inv_shoup[i]);
                y[i] = v;
                frac += v as f64 * self.inv_from_f64[i];
            }
            let v = frac.round() as u64;
            for (j, m) in self.to.iter().enumerate() {
                let mut acc: u128 = 0;
                for i in 0..k {
                    acc += y[i] as u128 * self.qhat_mod_to[i][j] as u128;
                }
                let s = m.reduce_u128(acc);
                out[j][c] = m.sub(s, m.mul(m.reduce(v), self.q_mod_to[j]));
            }
        }
        out
    }
}

/// Computes `round(t * x / Q)` into the auxiliary basis `R`, given `x` in `Q ∪ R`.
#[derive(Clone, Debug)]
pub struct ScaleDown {
    q: Vec<Modulus>,
    r: Vec<Modulus>,
    omega: Vec<Vec<u64>>,
    theta: Vec<f64>,
    t_qinv_mod_r: Vec<u64>,
}

impl ScaleDown {
    pub fn new(q: &[Modulus], r: &[Modulus], t: u64) -> Self {
        let qp = product(q);
        let rp = product(r);
        let qr = &qp * &rp;
        let mut omega = Vec::new();
        let mut theta = Vec::new();
        for qi in q {
            let khat = &qr / qi.value();
            let c = qi.inv(big_mod(&khat, qi)).expect("coprime");
            // t * R * c / q_i split into integer and fractional parts
            let num = BigUint::from(t) * &rp * c;
            let int = &num / qi.value();
            let rem = (&num % qi.value()).to_u64().unwrap();
            omega.push(r.iter().map(|m| big_mod(&int, m)).collect());
            theta.push(rem as f64 / qi.value() as f64);
        }
        let t_qinv_mod_r = r
            .iter()
            .map(|m| {
                let qinv = m.inv(big_mod(&qp, m)).expect("coprime");
                m.mul(m.reduce(t), qinv)
            })
            .collect();
        Self { q: q.to_vec(), r: r.to_vec(), omega, theta, t_qinv_mod_r }
    }

    /// `x_q[i]` residues modulo `q[i]`, `x_r[j]` modulo `r[j]` (coefficient form).
    pub fn apply(&self, x_q: &[Vec<u64>], x_r: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let n = x_q[0].len();
        let mut out = vec![vec![0u64; n]; self.r.len()];
        for c in 0..n {
            let mut frac = 0.0f64;
            for (i, limb) in x_q.iter().enumerate() {
                frac += limb[c] as f64 * self.theta[i];
            }
            let rounded = frac.round() as u64;
            for (j, m) in self.r.iter().enumerate() {
                let mut acc: u128 = 0;
                for (i, limb) in x_q.iter().enumerate() {
                    acc += limb[c] as u128 * self.omega[i][j] as u128;
                }
                let s = m.reduce_u128(acc);
                let s = m.add(s, m.reduce(rounded));
                out[j][c] = m.add(s, m.mul(x_r[j][c], self.t_qinv_mod_r[j]));
            }
        }
        let _ = &self.q;
        out
    }
}

/// Exact CRT reconstruction of one coefficient as a centered big integer magnitude and sign.
pub fn crt_centered(residues: &[u64], moduli: &[Modulus]) -> (BigUint, bool) {
    let q = product(moduli);
    let mut acc = BigUint::zero();
    for (r, m) in residues.iter().zip(moduli) {
        let qhat = &q / m.value();
        let inv = m.inv(big_mod(&qhat, m)).unwrap();
        acc += qhat * m.mul(*r, inv);
    }
    acc %= &q;
    let half = &q >> 1;
    if acc > half {
        (&q - acc, true)
    } else {
        (acc, false)
    }
}
