//! Private comparison operators and private decision tree evaluation over the
//! homomorphic backends of `pdte-he`.

pub mod comparators;
pub mod encodings;
pub mod pdte;
