pub mod backend;
pub mod context;
pub mod eval;
pub mod keys;
pub mod modulus;
pub mod ntt;
pub mod rns;
pub mod serialize;
