//! Backend parameters and the mapping from a depth budget to a concrete modulus chain.

use crate::error::HeError;
use crate::rlwe::context::ChainSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Polynomial,
    Batched,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackendParams {
    /// Ring degree `N`.
    pub degree: usize,
    /// Plaintext modulus `p`.
    pub plain_modulus: u64,
    /// Maximum ciphertext-ciphertext multiplicative depth.
    pub depth_budget: usize,
    /// Target security in bits.
    pub security_level: u32,
}

/// Largest `log2(QP)` giving 128-bit security for a ternary secret, per ring degree.
pub const MAX_LOG_QP_128: [(usize, u32); 6] =
    [(1024, 27), (2048, 54), (4096, 109), (8192, 218), (16384, 438), (32768, 881)];

impl BackendParams {
    pub fn new(degree: usize, plain_modulus: u64, depth_budget: usize) -> Self {
        Self { degree, plain_modulus, depth_budget, security_level: 128 }
    }

    pub fn slots(&self) -> usize {
        self.degree / 2
    }

    pub fn supports_batching(&self) -> bool {
        (self.plain_modulus - 1) % (2 * self.degree as u64) == 0
    }

    pub fn validate(&self, mode: Mode) -> Result<(), HeError> {
        if !self.degree.is_power_of_two() || self.degree < 2 {
            return Err(HeError::InvalidParams(format!("degree {} is not a power of two", self.degree)));
        }
        if !crate::rlwe::modulus::is_prime(self.plain_modulus) {
            return Err(HeError::InvalidParams(format!("plaintext modulus {} is not prime", self.plain_modulus)));
        }
        if mode == Mode::Batched && !self.supports_batching() {
            return Err(HeError::InvalidParams(format!(
                "batching needs p = 1 mod 2N (p = {}, N = {})",
                self.plain_modulus, self.degree
            )));
        }
        Ok(())
    }

    /// Concrete prime chain for the RLWE backend.
    ///
    /// From `N = 16384` batched chains use 60-bit primes: three for depth 0, then one more
    /// prime per two levels of depth (a relinearised product costs about 30 bits).
    /// Smaller rings split the whole security bound evenly over the primes instead.
    pub fn rlwe_chain(&self, mode: Mode) -> Result<ChainSpec, HeError> {
        self.validate(mode)?;
        let n = self.degree;
        let bound = MAX_LOG_QP_128
            .iter()
            .find(|(d, _)| *d == n)
            .map(|(_, b)| *b)
            .ok_or_else(|| HeError::InvalidParams(format!("no security table entry for N = {n}")))?;
        let d = self.depth_budget as u32;
        let (q_bits, special_bits) = if mode == Mode::Batched && n >= 16384 {
            let count = 3 + d.div_ceil(2);
            (vec![60u32; count as usize], 61u32)
        } else {
            let count = 2 + d.div_ceil(2).max(u32::from(n >= 8192));
            let per = (bound / (count + 1)).min(60);
            (vec![per; count as usize], (bound - per * count).min(61))
        };
        let spec = ChainSpec { degree: n, plain_modulus: self.plain_modulus, q_bits, special_bits };
        if self.security_level >= 128 && spec.total_bits() > bound {
            return Err(HeError::InvalidParams(format!(
                "depth {} needs {} modulus bits at N = {n}, above the {bound}-bit bound",
                self.depth_budget,
                spec.total_bits()
            )));
        }
        Ok(spec)
    }
}
