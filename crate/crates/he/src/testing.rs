//! Random circuits over the evaluation contract, used to cross-check backends.
//!
//! Generated circuits stay within the depth budget and within a coarse noise estimate
//! (bits of growth per operation), so any backend whose parameters honour the budget
//! must decrypt them to exactly the simulator's values.

use crate::backend::{HeBackend, Result};
use crate::params::Mode;
use crate::plain::{PolyPlain, SlotVector};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub enum Op {
    Add(usize, usize),
    Sub(usize, usize),
    Neg(usize),
    AddPlain(usize, usize),
    SubPlain(usize, usize),
    MulPlain(usize, usize),
    AddScalar(usize, u64),
    MulScalar(usize, u64),
    Mul(usize, usize),
    Rotate(usize, i64),
    /// Several rotations of one value sharing a single preparation.
    RotateMany(usize, Vec<i64>),
    /// `sum_j plain_j * Rot_{k_j}(v) + c`, accumulated without intermediate rescaling.
    LazySum(usize, Vec<(i64, usize)>, u64),
    Expand(usize, usize),
}

#[derive(Clone, Debug)]
pub struct Circuit {
    pub mode: Mode,
    pub inputs: Vec<Vec<u64>>,
    pub plains: Vec<Vec<u64>>,
    pub ops: Vec<Op>,
}

#[derive(Clone, Copy)]
struct Meta {
    depth: usize,
    noise: u32,
}

/// Noise growth estimates in bits.
const FRESH: u32 = 10;
const PLAIN_MUL: u32 = 23;
const SCALAR_MUL: u32 = 17;
const PRODUCT: u32 = 31;
const EXPAND: u32 = 18;
const ROTATE_FLOOR: u32 = 14;

pub struct CircuitShape {
    pub mode: Mode,
    pub degree: usize,
    pub plain_modulus: u64,
    pub depth_budget: usize,
    pub rotations: Vec<i64>,
    pub ops: usize,
    /// Noise estimate above which an operation is not emitted.
    pub noise_limit: u32,
}

pub fn random_circuit<R: Rng>(rng: &mut R, shape: &CircuitShape) -> Circuit {
    let p = shape.plain_modulus;
    let len = match shape.mode {
        Mode::Polynomial => shape.degree,
        Mode::Batched => shape.degree / 2,
    };
    let rand_vec = |rng: &mut R| -> Vec<u64> {
        match rng.gen_range(0..4) {
            // sparse and small messages exercise the negacyclic wrap and mask patterns
            0 => {
                let mut v = vec![0u64; len];
                for _ in 0..3 {
                    v[rng.gen_range(0..len)] = rng.gen_range(0..p);
                }
                v
            }
            1 => (0..len).map(|_| rng.gen_range(0..2)).collect(),
            _ => (0..len).map(|_| rng.gen_range(0..p)).collect(),
        }
    };
    let n_inputs = rng.gen_range(1..=3);
    let inputs: Vec<Vec<u64>> = (0..n_inputs).map(|_| rand_vec(rng)).collect();
    let plains: Vec<Vec<u64>> = (0..3).map(|_| rand_vec(rng)).collect();
    let mut meta: Vec<Meta> = vec![Meta { depth: 0, noise: FRESH }; n_inputs];
    let mut ops = Vec::new();
    let limit = shape.noise_limit;
    let mut attempts = 0;
    while ops.len() < shape.ops && attempts < shape.ops * 20 {
        attempts += 1;
        let a = rng.gen_range(0..meta.len());
        let b = rng.gen_range(0..meta.len());
        let (ma, mb) = (meta[a], meta[b]);
        let joined = Meta { depth: ma.depth.max(mb.depth), noise: ma.noise.max(mb.noise) + 1 };
        let choice = rng.gen_range(0..13);
        let (op, out): (Op, Vec<Meta>) = match choice {
            0 => (Op::Add(a, b), vec![joined]),
            1 => (Op::Sub(a, b), vec![joined]),
            2 => (Op::Neg(a), vec![ma]),
            3 => (Op::AddPlain(a, rng.gen_range(0..plains.len())), vec![ma]),
            4 => (Op::SubPlain(a, rng.gen_range(0..plains.len())), vec![ma]),
            5 => (
                Op::MulPlain(a, rng.gen_range(0..plains.len())),
                vec![Meta { depth: ma.depth, noise: ma.noise + PLAIN_MUL }],
            ),
            6 => (Op::AddScalar(a, rng.gen_range(0..p)), vec![ma]),
            7 => (Op::MulScalar(a, rng.gen_range(0..p)), vec![Meta { depth: ma.depth, noise: ma.noise + SCALAR_MUL }]),
            8 => {
                if joined.depth >= shape.depth_budget {
                    continue;
                }
                (Op::Mul(a, b), vec![Meta { depth: joined.depth + 1, noise: joined.noise + PRODUCT }])
            }
            9 | 10 | 11 if shape.mode == Mode::Batched && !shape.rotations.is_empty() => {
                let rot_meta = Meta { depth: ma.depth, noise: ma.noise.max(ROTATE_FLOOR) + 1 };
                let k = *shape.rotations.choose(rng).unwrap();
                match choice {
                    9 => (Op::Rotate(a, k), vec![rot_meta]),
                    10 => {
                        let ks: Vec<i64> = (0..rng.gen_range(1..4)).map(|_| *shape.rotations.choose(rng).unwrap()).collect();
                        let m = vec![rot_meta; ks.len()];
                        (Op::RotateMany(a, ks), m)
                    }
                    _ => {
                        let terms: Vec<(i64, usize)> = (0..rng.gen_range(1..4))
                            .map(|_| (*shape.rotations.choose(rng).unwrap(), rng.gen_range(0..plains.len())))
                            .collect();
                        (
                            Op::LazySum(a, terms, rng.gen_range(0..p)),
                            vec![Meta { depth: ma.depth, noise: ma.noise.max(ROTATE_FLOOR) + PLAIN_MUL + 2 }],
                        )
                    }
                }
            }
            12 if shape.mode == Mode::Polynomial => (
                Op::Expand(a, rng.gen_range(0..len)),
                vec![Meta { depth: ma.depth, noise: ma.noise + EXPAND }],
            ),
            _ => continue,
        };
        if out.iter().any(|m| m.noise > limit) {
            continue;
        }
        ops.push(op);
        meta.extend(out);
    }
    Circuit { mode: shape.mode, inputs, plains, ops }
}

/// Evaluates a circuit and decrypts every value produced (inputs included).
pub fn run<B: HeBackend>(b: &B, c: &Circuit) -> Result<Vec<Vec<u64>>> {
    let enc = |v: &Vec<u64>| match c.mode {
        Mode::Polynomial => b.encrypt_poly(&PolyPlain { coeffs: v.clone() }),
        Mode::Batched => b.encrypt_slots(&SlotVector { slots: v.clone() }),
    };
    let encode = |v: &Vec<u64>| match c.mode {
        Mode::Polynomial => b.encode_poly(&PolyPlain { coeffs: v.clone() }),
        Mode::Batched => b.encode_slots(&SlotVector { slots: v.clone() }),
    };
    let mut vals: Vec<B::Ct> = c.inputs.iter().map(enc).collect::<Result<_>>()?;
    let pts: Vec<B::Pt> = c.plains.iter().map(encode).collect::<Result<_>>()?;
    for op in &c.ops {
        match op {
            Op::Add(x, y) => vals.push(b.add(&vals[*x], &vals[*y])?),
            Op::Sub(x, y) => vals.push(b.sub(&vals[*x], &vals[*y])?),
            Op::Neg(x) => vals.push(b.neg(&vals[*x])),
            Op::AddPlain(x, p) => vals.push(b.add_plain(&vals[*x], &pts[*p])?),
            Op::SubPlain(x, p) => vals.push(b.sub_plain(&vals[*x], &pts[*p])?),
            Op::MulPlain(x, p) => vals.push(b.mul_plain(&vals[*x], &pts[*p])?),
            Op::AddScalar(x, s) => vals.push(b.add_scalar(&vals[*x], *s)),
            Op::MulScalar(x, s) => vals.push(b.mul_scalar(&vals[*x], *s)),
            Op::Mul(x, y) => vals.push(b.mul(&vals[*x], &vals[*y])?),
            Op::Rotate(x, k) => vals.push(b.rotate(&vals[*x], *k)?),
            Op::RotateMany(x, ks) => {
                let h = b.hoist(&vals[*x])?;
                for k in ks {
                    let r = b.rotate_hoisted(&h, *k)?;
                    vals.push(r);
                }
            }
            Op::LazySum(x, terms, s) => {
                let h = b.hoist(&vals[*x])?;
                let mut acc: Option<B::Lazy> = None;
                for (k, p) in terms {
                    let t = b.lazy_mul_plain(&b.lazy_rotate(&h, *k)?, &pts[*p])?;
                    match acc.as_mut() {
                        None => acc = Some(t),
                        Some(a) => b.lazy_add(a, &t)?,
                    }
                }
                let mut acc = acc.expect("at least one term");
                b.lazy_add_scalar(&mut acc, *s);
                vals.push(b.lazy_finish(&acc));
            }
            Op::Expand(x, k) => vals.push(b.expand_at(&vals[*x], *k)?),
        }
    }
    vals.iter()
        .map(|v| match c.mode {
            Mode::Polynomial => b.decrypt_poly(v).map(|p| p.coeffs),
            Mode::Batched => b.decrypt_slots(v).map(|s| s.slots),
        })
        .collect()
}

/// Maximum ciphertext-product depth reached by a circuit.
pub fn max_depth(c: &Circuit) -> usize {
    let mut depth: Vec<usize> = vec![0; c.inputs.len()];
    for op in &c.ops {
        match op {
            Op::Add(x, y) | Op::Sub(x, y) => depth.push(depth[*x].max(depth[*y])),
            Op::Mul(x, y) => depth.push(depth[*x].max(depth[*y]) + 1),
            Op::RotateMany(x, ks) => {
                let d = depth[*x];
                depth.extend(std::iter::repeat(d).take(ks.len()));
            }
            Op::Neg(x)
            | Op::AddPlain(x, _)
            | Op::SubPlain(x, _)
            | Op::MulPlain(x, _)
            | Op::AddScalar(x, _)
            | Op::MulScalar(x, _)
            | Op::Rotate(x, _)
            | Op::LazySum(x, _, _)
            | Op::Expand(x, _) => depth.push(depth[*x]),
        }
    }
    depth.into_iter().max().unwrap_or(0)
}
