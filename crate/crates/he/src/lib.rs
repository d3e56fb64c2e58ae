//! Homomorphic evaluation backends behind one contract: a bit-exact cleartext simulator
//! and a levelled RLWE implementation (BFV with full-RNS arithmetic).

pub mod backend;
pub mod error;
pub mod params;
pub mod plain;
pub mod rlwe;
pub mod sim;
pub mod testing;

pub use backend::{add_many, mul_many, HeBackend, KeyRequest, Tier};
pub use error::HeError;
pub use params::{BackendParams, Mode};
pub use plain::{PolyPlain, SlotVector};
pub use rlwe::backend::{RlweBackend, RlweCt};
pub use sim::Simulator;
