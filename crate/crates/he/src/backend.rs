//! The evaluation contract shared by every backend.

use crate::error::HeError;
use crate::params::{BackendParams, Mode};
use crate::plain::{PolyPlain, SlotVector};

pub type Result<T> = std::result::Result<T, HeError>;

/// Coarse position in the modulus chain where a ciphertext or a rotation key lives.
/// Backends without a chain ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Tier {
    /// One prime: only plaintext-scalar work remains.
    Low,
    /// Two primes: rotations and plaintext masks remain, no ciphertext products.
    Mid,
    /// Full chain.
    Top,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KeyRequest {
    /// Relinearisation key for ciphertext products.
    pub relin: bool,
    /// Keys for coefficient extraction in polynomial mode.
    pub expansion: bool,
    /// Right-rotation amounts and the tier at which each is applied.
    pub rotations: Vec<(i64, Tier)>,
}

impl KeyRequest {
    pub fn rotate(&mut self, k: i64, tier: Tier) {
        self.rotations.push((k, tier));
    }

    pub fn merge(&mut self, other: &KeyRequest) {
        self.relin |= other.relin;
        self.expansion |= other.expansion;
        self.rotations.extend_from_slice(&other.rotations);
    }
}

/// Homomorphic operations over `R_p` (polynomial mode) and `Z_p^{N/2}` (batched mode).
///
/// Every ciphertext carries its mode and the number of ciphertext products on its deepest
/// path. Operations never mutate their inputs.
pub trait HeBackend: Send + Sync {
    type Ct: Clone + Send + Sync;
    type Pt: Clone + Send + Sync;
    /// A ciphertext prepared for several rotations.
    type Hoisted: Send + Sync;
    /// An accumulator that may defer backend-internal rescaling.
    type Lazy: Clone + Send + Sync;

    fn name(&self) -> &'static str;
    fn params(&self) -> &BackendParams;

    fn slots(&self) -> usize {
        self.params().degree / 2
    }

    fn plain_modulus(&self) -> u64 {
        self.params().plain_modulus
    }

    fn encrypt_poly(&self, m: &PolyPlain) -> Result<Self::Ct>;
    fn encrypt_slots(&self, m: &SlotVector) -> Result<Self::Ct>;
    fn decrypt_poly(&self, ct: &Self::Ct) -> Result<PolyPlain>;
    fn decrypt_slots(&self, ct: &Self::Ct) -> Result<SlotVector>;
    fn encode_poly(&self, m: &PolyPlain) -> Result<Self::Pt>;
    fn encode_slots(&self, m: &SlotVector) -> Result<Self::Pt>;

    fn mode(&self, ct: &Self::Ct) -> Mode;
    fn depth(&self, ct: &Self::Ct) -> usize;

    fn add(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct>;
    fn sub(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct>;
    fn neg(&self, a: &Self::Ct) -> Self::Ct;
    fn add_plain(&self, a: &Self::Ct, p: &Self::Pt) -> Result<Self::Ct>;
    fn sub_plain(&self, a: &Self::Ct, p: &Self::Pt) -> Result<Self::Ct>;
    fn mul_plain(&self, a: &Self::Ct, p: &Self::Pt) -> Result<Self::Ct>;
    /// Adds `c` to the constant coefficient (polynomial) or to every slot (batched).
    fn add_scalar(&self, a: &Self::Ct, c: u64) -> Self::Ct;
    fn mul_scalar(&self, a: &Self::Ct, c: u64) -> Self::Ct;
    fn mul(&self, a: &Self::Ct, b: &Self::Ct) -> Result<Self::Ct>;

    /// Right rotation: output slot `i` holds input slot `i - k mod N/2`.
    fn rotate(&self, a: &Self::Ct, k: i64) -> Result<Self::Ct>;
    fn hoist(&self, a: &Self::Ct) -> Result<Self::Hoisted>;
    fn rotate_hoisted(&self, h: &Self::Hoisted, k: i64) -> Result<Self::Ct>;

    fn lazy(&self, a: &Self::Ct) -> Self::Lazy;
    fn lazy_rotate(&self, h: &Self::Hoisted, k: i64) -> Result<Self::Lazy>;
    fn lazy_add(&self, acc: &mut Self::Lazy, b: &Self::Lazy) -> Result<()>;
    fn lazy_sub(&self, acc: &mut Self::Lazy, b: &Self::Lazy) -> Result<()>;
    fn lazy_add_scalar(&self, acc: &mut Self::Lazy, c: u64);
    fn lazy_neg(&self, acc: &mut Self::Lazy);
    fn lazy_mul_plain(&self, a: &Self::Lazy, p: &Self::Pt) -> Result<Self::Lazy>;
    fn lazy_finish(&self, a: &Self::Lazy) -> Self::Ct;

    /// Polynomial mode: the constant coefficient of the result is coefficient `k` of the input.
    /// Other coefficients are unspecified.
    fn expand_at(&self, a: &Self::Ct, k: usize) -> Result<Self::Ct>;

    /// Moves a ciphertext down to `tier` if it currently sits higher.
    fn lower(&self, a: &Self::Ct, tier: Tier) -> Self::Ct;

    /// Uniform elements of `Z_p` (or of `Z_p \ {0}` when `nonzero`).
    fn random_vec(&self, len: usize, nonzero: bool) -> Vec<u64>;

    fn serialize_ct(&self, ct: &Self::Ct) -> Vec<u8>;
    fn deserialize_ct(&self, bytes: &[u8]) -> Result<Self::Ct>;
}

/// Sum of a non-empty list using a balanced tree of additions.
pub fn add_many<B: HeBackend>(b: &B, cts: &[B::Ct]) -> Result<B::Ct> {
    match cts.len() {
        0 => Err(HeError::Length { expected: 1, found: 0 }),
        1 => Ok(cts[0].clone()),
        n => {
            let (l, r) = cts.split_at(n / 2);
            b.add(&add_many(b, l)?, &add_many(b, r)?)
        }
    }
}

/// Product of a non-empty list using a balanced tree, so depth grows by `ceil(log2 len)`.
pub fn mul_many<B: HeBackend>(b: &B, cts: &[B::Ct]) -> Result<B::Ct> {
    match cts.len() {
        0 => Err(HeError::Length { expected: 1, found: 0 }),
        1 => Ok(cts[0].clone()),
        n => {
            let (l, r) = cts.split_at(n / 2);
            b.mul(&mul_many(b, l)?, &mul_many(b, r)?)
        }
    }
}
