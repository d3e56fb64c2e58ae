//! Private decision tree evaluation.
//!
//! The client encrypts its attribute vector, the server walks its tree homomorphically and
//! returns one masked pair per leaf: `(r_x * s, r_y * s + v)` where `s` is the path cost of
//! the leaf. Exactly one leaf has cost zero, and its second component is the label.

mod batched;
pub mod model;
mod sumpath;
mod xxcmp;

pub use batched::{bsgs_split, BlockLayout, Plan, Round};
pub use model::{random_tree, stump, synth_tree, validate, DecisionTreeModel, ModelError, Node, NodeJson, NodeKind, TreeJson, Violation};
pub use sumpath::{sumpath, sumpath_clear, Side};

use crate::comparators::{ceil_log2, default_hamming_weight, limb_count, CompareError, MAX_CODE_LENGTH};
use crate::encodings::{CwEncoder, EncodingError};
use pdte_he::{BackendParams, HeBackend, HeError, KeyRequest, Mode};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdteError {
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("parameter mismatch: {0}")]
    Mismatch(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no leaf has zero path cost")]
    NoZeroLeaf,
    #[error("{0} leaves have zero path cost")]
    MultipleZeroLeaves(usize),
}

pub type Result<T> = std::result::Result<T, PdteError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Polynomial-mode monomial comparison with limb decomposition.
    Xxcmp,
    /// Batched range-cover comparison with constant-weight codes.
    Rcc,
    /// Batched bitwise comparison, the baseline.
    Folklore,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Xxcmp, Protocol::Rcc, Protocol::Folklore];

    pub fn mode(self) -> Mode {
        match self {
            Protocol::Xxcmp => Mode::Polynomial,
            Protocol::Rcc | Protocol::Folklore => Mode::Batched,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Xxcmp => "xxcmp",
            Protocol::Rcc => "rcc",
            Protocol::Folklore => "folklore",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = PdteError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xxcmp" => Ok(Protocol::Xxcmp),
            "rcc" => Ok(Protocol::Rcc),
            "folklore" => Ok(Protocol::Folklore),
            other => Err(PdteError::Params(format!("unknown protocol {other:?}"))),
        }
    }
}

pub const PLAIN_MODULUS: u64 = 65537;
pub const BATCHED_DEGREE: usize = 16384;

/// Ring degree for polynomial mode: one 4096 limb up to 12 bits, 8192 limbs beyond.
pub fn polynomial_degree(precision: u32) -> usize {
    if precision <= 12 {
        4096
    } else {
        8192
    }
}

/// Public hyperparameters both parties agree on before any key is generated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdteParams {
    pub protocol: Protocol,
    pub precision: u32,
    pub num_attributes: usize,
    /// Codeword weight; only meaningful for RCC.
    pub hamming_weight: usize,
    pub degree: usize,
    pub plain_modulus: u64,
}

impl PdteParams {
    pub fn new(protocol: Protocol, precision: u32, num_attributes: usize) -> Self {
        let (degree, hamming_weight) = match protocol {
            Protocol::Xxcmp => (polynomial_degree(precision), 0),
            Protocol::Rcc => (BATCHED_DEGREE, default_hamming_weight(precision, MAX_CODE_LENGTH)),
            Protocol::Folklore => (BATCHED_DEGREE, 0),
        };
        Self { protocol, precision, num_attributes, hamming_weight, degree, plain_modulus: PLAIN_MODULUS }
    }

    pub fn with_hamming_weight(mut self, h: usize) -> Self {
        self.hamming_weight = h;
        self
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn mode(&self) -> Mode {
        self.protocol.mode()
    }

    pub fn slots(&self) -> usize {
        self.degree / 2
    }

    pub fn limbs(&self) -> usize {
        limb_count(self.precision, self.degree)
    }

    /// Ciphertext-product depth of one comparison, which is also the depth of every output.
    pub fn depth(&self) -> usize {
        match self.protocol {
            Protocol::Xxcmp => ceil_log2(self.limbs()),
            Protocol::Rcc => ceil_log2(self.hamming_weight),
            Protocol::Folklore => ceil_log2(crate::comparators::folklore_block(self.precision)),
        }
    }

    pub fn backend_params(&self) -> BackendParams {
        BackendParams::new(self.degree, self.plain_modulus, self.depth())
    }

    pub fn encoder(&self) -> Result<CwEncoder> {
        Ok(CwEncoder::for_precision(self.precision, self.hamming_weight)?)
    }

    /// Slots occupied by one comparison in batched mode.
    pub fn block_width(&self) -> usize {
        match self.protocol {
            Protocol::Rcc => self.precision as usize + 1,
            Protocol::Folklore => crate::comparators::folklore_block(self.precision),
            Protocol::Xxcmp => 1,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots() / self.block_width()
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.num_attributes, self.capacity())
    }

    /// Ciphertexts per query.
    pub fn query_ciphertexts(&self) -> Result<usize> {
        Ok(match self.protocol {
            Protocol::Xxcmp => self.num_attributes * self.limbs(),
            Protocol::Rcc => self.layout().groups.len() * self.encoder()?.len(),
            Protocol::Folklore => self.layout().groups.len(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PdteError::Params(m));
        if !(1..=63).contains(&self.precision) {
            return fail(format!("precision {} outside 1..=63", self.precision));
        }
        if self.num_attributes == 0 {
            return fail("at least one attribute is required".into());
        }
        self.backend_params().validate(self.mode())?;
        match self.protocol {
            Protocol::Rcc => {
                if self.hamming_weight == 0 {
                    return fail("hamming weight must be positive".into());
                }
                self.encoder()?;
                if self.capacity() == 0 {
                    return fail("a comparison block does not fit in one ciphertext".into());
                }
            }
            Protocol::Folklore => {
                if self.capacity() == 0 {
                    return fail("a comparison block does not fit in one ciphertext".into());
                }
            }
            Protocol::Xxcmp => {
                if self.precision > 63 || self.limbs() > 16 {
                    return fail("too many limbs".into());
                }
            }
        }
        Ok(())
    }

    /// Every evaluation key the server needs. Depends only on these hyperparameters.
    pub fn key_request(&self) -> KeyRequest {
        match self.protocol {
            Protocol::Xxcmp => crate::comparators::xxcmp_key_request(),
            Protocol::Rcc | Protocol::Folklore => batched::key_request(self),
        }
    }

    pub fn check_model(&self, m: &DecisionTreeModel) -> Result<()> {
        if m.precision != self.precision {
            return Err(PdteError::Mismatch(format!("model precision {} vs {}", m.precision, self.precision)));
        }
        if m.num_attributes != self.num_attributes {
            return Err(PdteError::Mismatch(format!(
                "model has {} attributes, parameters {}",
                m.num_attributes, self.num_attributes
            )));
        }
        if let Some(v) = m.leaf_values().into_iter().find(|&v| v >= self.plain_modulus) {
            return Err(PdteError::Mismatch(format!("leaf value {v} is not below {}", self.plain_modulus)));
        }
        Ok(())
    }

    pub fn check_attributes(&self, x: &[u64]) -> Result<()> {
        if x.len() != self.num_attributes {
            return Err(PdteError::Mismatch(format!("{} attributes supplied, {} expected", x.len(), self.num_attributes)));
        }
        if let Some(&v) = x.iter().find(|&&v| v >> self.precision != 0) {
            return Err(PdteError::Mismatch(format!("attribute {v} does not fit in {} bits", self.precision)));
        }
        Ok(())
    }
}

/// Encrypted attribute vector. `groups` holds limbs per attribute (XXCMP) or ciphertexts per
/// slot group (RCC, folklore).
#[derive(Clone, Debug)]
pub struct Query<C> {
    pub groups: Vec<Vec<C>>,
}

impl<C> Query<C> {
    pub fn ciphertexts(&self) -> impl Iterator<Item = &C> {
        self.groups.iter().flatten()
    }
}

/// Masked leaf outputs in canonical leaf order. Polynomial mode uses one ciphertext per leaf
/// (constant coefficient); batched mode packs leaf `i` into slot `i % slots` of entry
/// `i / slots`.
#[derive(Clone, Debug)]
pub struct Response<C> {
    pub leaves: usize,
    pub x: Vec<C>,
    pub y: Vec<C>,
}

pub fn encrypt_query<B: HeBackend>(b: &B, params: &PdteParams, x: &[u64]) -> Result<Query<B::Ct>> {
    params.check_attributes(x)?;
    match params.protocol {
        Protocol::Xxcmp => xxcmp::encrypt_query(b, params, x),
        Protocol::Rcc | Protocol::Folklore => batched::encrypt_query(b, params, x),
    }
}

/// Where the server's time went.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalStats {
    /// Encrypted comparison results produced: one per node in polynomial mode, one per round
    /// of batched comparisons otherwise.
    pub comparison_ciphertexts: usize,
    pub comparison_time: Duration,
    pub total_time: Duration,
}

/// Server side: evaluates `model` on an encrypted query.
pub fn evaluate<B: HeBackend>(
    b: &B,
    params: &PdteParams,
    model: &DecisionTreeModel,
    query: &Query<B::Ct>,
) -> Result<Response<B::Ct>> {
    evaluate_with_stats(b, params, model, query).map(|(r, _)| r)
}

pub fn evaluate_with_stats<B: HeBackend>(
    b: &B,
    params: &PdteParams,
    model: &DecisionTreeModel,
    query: &Query<B::Ct>,
) -> Result<(Response<B::Ct>, EvalStats)> {
    params.check_model(model)?;
    let start = Instant::now();
    let mut stats = EvalStats::default();
    let response = match params.protocol {
        Protocol::Xxcmp => xxcmp::evaluate(b, params, model, query, &mut stats),
        Protocol::Rcc | Protocol::Folklore => batched::evaluate(b, params, model, query, &mut stats),
    }?;
    stats.total_time = start.elapsed();
    Ok((response, stats))
}

pub fn xxcmp_pdte<B: HeBackend>(b: &B, params: &PdteParams, m: &DecisionTreeModel, q: &Query<B::Ct>) -> Result<Response<B::Ct>> {
    expect_protocol(params, Protocol::Xxcmp)?;
    evaluate(b, params, m, q)
}

pub fn rcc_pdte<B: HeBackend>(b: &B, params: &PdteParams, m: &DecisionTreeModel, q: &Query<B::Ct>) -> Result<Response<B::Ct>> {
    expect_protocol(params, Protocol::Rcc)?;
    evaluate(b, params, m, q)
}

pub fn folklore_pdte<B: HeBackend>(
    b: &B,
    params: &PdteParams,
    m: &DecisionTreeModel,
    q: &Query<B::Ct>,
) -> Result<Response<B::Ct>> {
    expect_protocol(params, Protocol::Folklore)?;
    evaluate(b, params, m, q)
}

fn expect_protocol(params: &PdteParams, p: Protocol) -> Result<()> {
    if params.protocol != p {
        return Err(PdteError::Mismatch(format!("parameters are for {}, not {p}", params.protocol)));
    }
    Ok(())
}

/// Decrypted `(x, y)` pairs in canonical leaf order.
pub fn decrypt_response<B: HeBackend>(b: &B, resp: &Response<B::Ct>) -> Result<Vec<(u64, u64)>> {
    if resp.x.len() != resp.y.len() {
        return Err(PdteError::Mismatch("response halves differ in length".into()));
    }
    let mut out = Vec::with_capacity(resp.leaves);
    if resp.x.is_empty() {
        return Ok(out);
    }
    match b.mode(&resp.x[0]) {
        Mode::Polynomial => {
            if resp.x.len() != resp.leaves {
                return Err(PdteError::Mismatch("one ciphertext pair per leaf expected".into()));
            }
            for (x, y) in resp.x.iter().zip(&resp.y) {
                out.push((b.decrypt_poly(x)?.coeffs[0], b.decrypt_poly(y)?.coeffs[0]));
            }
        }
        Mode::Batched => {
            let slots = b.slots();
            if resp.x.len() != resp.leaves.div_ceil(slots) {
                return Err(PdteError::Mismatch("packed response has the wrong number of ciphertexts".into()));
            }
            for (x, y) in resp.x.iter().zip(&resp.y) {
                let (xs, ys) = (b.decrypt_slots(x)?.slots, b.decrypt_slots(y)?.slots);
                let take = (resp.leaves - out.len()).min(slots);
                out.extend(xs.into_iter().zip(ys).take(take));
            }
        }
    }
    Ok(out)
}

/// Index and label of the unique leaf whose masked cost decrypts to zero.
pub fn decode_leaf<B: HeBackend>(b: &B, resp: &Response<B::Ct>) -> Result<(usize, u64)> {
    let pairs = decrypt_response(b, resp)?;
    let zeros: Vec<usize> = pairs.iter().enumerate().filter(|(_, (x, _))| *x == 0).map(|(i, _)| i).collect();
    match zeros.as_slice() {
        [] => Err(PdteError::NoZeroLeaf),
        [i] => Ok((*i, pairs[*i].1)),
        many => Err(PdteError::MultipleZeroLeaves(many.len())),
    }
}

pub fn decode_result<B: HeBackend>(b: &B, resp: &Response<B::Ct>) -> Result<u64> {
    Ok(decode_leaf(b, resp)?.1)
}
