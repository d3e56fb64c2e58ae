//! Batched-mode evaluation shared by RCC and the folklore baseline.
//!
//! The client fills every comparison block of a ciphertext group, repeating its attributes
//! cyclically, so the server can place each decision node in its own block. One comparison
//! round answers one node per block; a tree with more nodes on an attribute than copies of it
//! takes several rounds on the same query.
//!
//! Per round the block-start bits are masked out (folding in the `1/h!` of RCC) and spread
//! over their whole block, the result is lowered, and each node's block is brought to the
//! front with baby-step/giant-step keys (giants hoisted and left lazy). Path costs are then
//! valid in every slot of the first block, so a run of leaves is masked into distinct front
//! slots with lazy plaintext products and finished once; runs are packed by a rotation tree.

use super::model::{DecisionTreeModel, Node};
use super::sumpath::{sumpath, Side};
use super::{EvalStats, PdteError, PdteParams, Protocol, Query, Response, Result};
use crate::comparators::{
    cw_eq_unscaled, encode_pe_plain, encrypt_ourc_query, folklore_encode, folklore_gt, folklore_key_request,
    inv_factorial, spread_sum, spread_sum_rotations, window_sum, window_sum_rotations,
};
use pdte_he::{HeBackend, KeyRequest, SlotVector, Tier};
use std::collections::HashMap;
use std::time::Instant;

/// Assignment of attributes to comparison blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub capacity: usize,
    /// `groups[g][j]` is the attribute held by block `j` of group `g`.
    pub groups: Vec<Vec<usize>>,
}

impl BlockLayout {
    pub fn new(num_attributes: usize, capacity: usize) -> Self {
        assert!(capacity > 0 && num_attributes > 0);
        let count = num_attributes.div_ceil(capacity);
        let per = num_attributes.div_ceil(count);
        let groups = (0..count)
            .map(|g| {
                let start = g * per;
                let len = per.min(num_attributes - start);
                (0..capacity).map(|j| start + j % len).collect()
            })
            .collect();
        Self { capacity, groups }
    }

    fn locate(&self, attr: usize) -> (usize, Vec<usize>) {
        for (g, blocks) in self.groups.iter().enumerate() {
            let copies: Vec<usize> = (0..blocks.len()).filter(|&j| blocks[j] == attr).collect();
            if !copies.is_empty() {
                return (g, copies);
            }
        }
        panic!("attribute {attr} is not in the layout");
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub group: usize,
    /// One threshold per block; unused blocks compare against zero and are ignored.
    pub thresholds: Vec<u64>,
}

/// Which round and block answers each decision node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub rounds: Vec<Round>,
    pub placement: Vec<Option<(usize, usize)>>,
}

impl Plan {
    pub fn new(m: &DecisionTreeModel, layout: &BlockLayout) -> Self {
        let mut rounds: Vec<Round> = Vec::new();
        let mut round_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut where_: HashMap<usize, (usize, Vec<usize>)> = HashMap::new();
        let mut placement = vec![None; m.nodes.len()];
        for i in m.decision_nodes() {
            let Node::Decision { attr, threshold, .. } = m.nodes[i] else { unreachable!() };
            let (group, copies) = where_.entry(attr).or_insert_with(|| layout.locate(attr)).clone();
            let r = seen.entry(attr).or_insert(0);
            let (round, block) = (*r / copies.len(), copies[*r % copies.len()]);
            *r += 1;
            let idx = *round_index.entry((group, round)).or_insert_with(|| {
                rounds.push(Round { group, thresholds: vec![0; layout.capacity] });
                rounds.len() - 1
            });
            rounds[idx].thresholds[block] = threshold;
            placement[i] = Some((idx, block));
        }
        Self { rounds, placement }
    }
}

/// Baby-step size and giant-step count covering `capacity` blocks.
pub fn bsgs_split(capacity: usize) -> (usize, usize) {
    let baby = (capacity as f64).sqrt().ceil() as usize;
    let baby = baby.max(1);
    (baby, capacity.div_ceil(baby))
}

pub(super) fn key_request(params: &PdteParams) -> KeyRequest {
    let w = params.block_width() as i64;
    let mut req = match params.protocol {
        Protocol::Rcc => {
            let mut r = KeyRequest { relin: true, ..Default::default() };
            for k in window_sum_rotations(params.block_width()) {
                r.rotate(k, Tier::Mid);
            }
            r
        }
        _ => folklore_key_request(params.precision),
    };
    for k in spread_sum_rotations(params.block_width()) {
        req.rotate(k, Tier::Mid);
    }
    let (baby, giants) = bsgs_split(params.capacity());
    for j in 1..baby {
        req.rotate(-(j as i64) * w, Tier::Mid);
    }
    for g in 1..giants {
        req.rotate(-((g * baby) as i64) * w, Tier::Mid);
    }
    let mut shift = 1;
    while shift < params.slots() {
        req.rotate(shift as i64, Tier::Low);
        shift *= 2;
    }
    req
}

pub(super) fn encrypt_query<B: HeBackend>(b: &B, params: &PdteParams, x: &[u64]) -> Result<Query<B::Ct>> {
    check_slots(b, params)?;
    let layout = params.layout();
    let mut groups = Vec::with_capacity(layout.groups.len());
    for blocks in &layout.groups {
        let values: Vec<u64> = blocks.iter().map(|&a| x[a]).collect();
        groups.push(match params.protocol {
            Protocol::Rcc => encrypt_ourc_query(b, &values, params.precision, &params.encoder()?)?.cts,
            _ => vec![b.encrypt_slots(&folklore_encode(&values, params.precision, b.slots())?)?],
        });
    }
    Ok(Query { groups })
}

fn check_slots<B: HeBackend>(b: &B, params: &PdteParams) -> Result<()> {
    if b.slots() != params.slots() || b.plain_modulus() != params.plain_modulus {
        return Err(PdteError::Mismatch("backend does not match the parameters".into()));
    }
    Ok(())
}

/// Accumulates runs of `2^base` front slots into packed ciphertexts: run `i` of a chunk
/// lands at slot `i * 2^base`.
struct Packer<'a, B: HeBackend> {
    b: &'a B,
    base: u32,
    slots: usize,
    stack: Vec<(u32, B::Ct)>,
    count: usize,
    chunks: Vec<B::Ct>,
}

impl<B: HeBackend> Packer<'_, B> {
    fn push(&mut self, ct: B::Ct) -> Result<()> {
        self.stack.push((self.base, ct));
        while self.stack.len() >= 2 && self.stack[self.stack.len() - 1].0 == self.stack[self.stack.len() - 2].0 {
            let (lvl, later) = self.stack.pop().unwrap();
            let (_, earlier) = self.stack.pop().unwrap();
            let merged = self.b.add(&earlier, &self.b.rotate(&later, 1 << lvl)?)?;
            self.stack.push((lvl + 1, merged));
        }
        self.count += 1 << self.base;
        if self.count == self.slots {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let Some((_, mut acc)) = self.stack.pop() else { return Ok(()) };
        while let Some((lvl, earlier)) = self.stack.pop() {
            acc = self.b.add(&earlier, &self.b.rotate(&acc, 1 << lvl)?)?;
        }
        self.chunks.push(acc);
        self.count = 0;
        Ok(())
    }
}

pub(super) fn evaluate<B: HeBackend>(
    b: &B,
    params: &PdteParams,
    m: &DecisionTreeModel,
    query: &Query<B::Ct>,
    stats: &mut EvalStats,
) -> Result<Response<B::Ct>> {
    check_slots(b, params)?;
    let layout = params.layout();
    let per_group = match params.protocol {
        Protocol::Rcc => params.encoder()?.len(),
        _ => 1,
    };
    if query.groups.len() != layout.groups.len() || query.groups.iter().any(|g| g.len() != per_group) {
        return Err(PdteError::Mismatch(format!(
            "expected {} groups of {per_group} ciphertexts",
            layout.groups.len()
        )));
    }
    let p = b.plain_modulus();
    let n = params.precision;
    let w = params.block_width();
    let slots = b.slots();
    let plan = Plan::new(m, &layout);

    // comparison rounds: mu * c at block starts, then c across each block
    let (mu, c_side) = match params.protocol {
        Protocol::Rcc => (inv_factorial(params.hamming_weight, p)?, Side::Right),
        _ => (1, Side::Left),
    };
    let mut starts = vec![0u64; slots];
    for j in 0..params.capacity() {
        starts[j * w] = mu;
    }
    let starts = b.encode_slots(&SlotVector { slots: starts })?;
    let compare_start = Instant::now();
    let mut rounds = Vec::with_capacity(plan.rounds.len());
    for round in &plan.rounds {
        let cts = &query.groups[round.group];
        let ct = match params.protocol {
            Protocol::Rcc => {
                let enc = params.encoder()?;
                let pe = encode_pe_plain(b, &round.thresholds, n, &enc)?;
                let theta = b.lower(&cw_eq_unscaled(b, cts, &pe.pts, params.hamming_weight)?, Tier::Mid);
                window_sum(b, &theta, w)?
            }
            _ => b.lower(&folklore_gt(b, &cts[0], &round.thresholds, n)?, Tier::Mid),
        };
        rounds.push(spread_sum(b, &b.mul_plain(&ct, &starts)?, w)?);
    }
    stats.comparison_ciphertexts = rounds.len();
    stats.comparison_time = compare_start.elapsed();

    let (baby, _) = bsgs_split(params.capacity());
    let mut babies: HashMap<(usize, usize), B::Hoisted> = HashMap::new();
    let zero = b.lower(&b.mul_scalar(&query.groups[0][0], 0), Tier::Mid);
    // leaves are gathered in runs of `run` front slots
    let run = 1usize << (usize::BITS - 1 - w.leading_zeros());
    let fronts = (0..run)
        .map(|r| {
            let mut e = vec![0u64; slots];
            e[r] = 1;
            b.encode_slots(&SlotVector { slots: e })
        })
        .collect::<pdte_he::backend::Result<Vec<_>>>()?;
    let total = m.leaves().len();
    let mut packer = Packer { b, base: run.trailing_zeros(), slots, stack: Vec::new(), count: 0, chunks: Vec::new() };
    let mut current: Option<B::Lazy> = None;

    sumpath(
        m,
        b.lazy(&zero),
        |i| {
            let (round, block) = plan.placement[i].expect("decision nodes are placed");
            let (g, j) = (block / baby, block % baby);
            if !babies.contains_key(&(round, j)) {
                let base = if j == 0 { rounds[round].clone() } else { b.rotate(&rounds[round], -((j * w) as i64))? };
                babies.insert((round, j), b.hoist(&base)?);
            }
            Ok::<_, PdteError>(b.lazy_rotate(&babies[&(round, j)], -((g * baby * w) as i64))?)
        },
        |s, c, side| {
            let mut next = s.clone();
            if side == c_side {
                b.lazy_add(&mut next, c)?;
            } else {
                b.lazy_sub(&mut next, c)?;
                b.lazy_add_scalar(&mut next, 1);
            }
            Ok(next)
        },
        |i, s| {
            let masked = b.lazy_mul_plain(&s, &fronts[i % run])?;
            match current.as_mut() {
                None => current = Some(masked),
                Some(acc) => b.lazy_add(acc, &masked)?,
            }
            if i % run == run - 1 || i + 1 == total {
                let acc = current.take().expect("run has a leaf");
                packer.push(b.lower(&b.lazy_finish(&acc), Tier::Low))?;
            }
            Ok(())
        },
    )?;
    packer.flush()?;

    let values = m.leaf_values();
    let mut x = Vec::with_capacity(packer.chunks.len());
    let mut y = Vec::with_capacity(packer.chunks.len());
    for (c, packed) in packer.chunks.iter().enumerate() {
        let mut v = vec![0u64; slots];
        for (s, &val) in values.iter().skip(c * slots).take(slots).enumerate() {
            v[s] = val;
        }
        let rx = b.encode_slots(&SlotVector { slots: b.random_vec(slots, true) })?;
        let ry = b.encode_slots(&SlotVector { slots: b.random_vec(slots, false) })?;
        x.push(b.mul_plain(packed, &rx)?);
        y.push(b.add_plain(&b.mul_plain(packed, &ry)?, &b.encode_slots(&SlotVector { slots: v })?)?);
    }
    Ok(Response { leaves: values.len(), x, y })
}
