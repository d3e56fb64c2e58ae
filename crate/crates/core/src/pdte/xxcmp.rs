//! Polynomial-mode evaluation: one XXCMP per decision node, one output pair per leaf.

use super::model::{DecisionTreeModel, Node};
use super::sumpath::{sumpath, Side};
use super::{EvalStats, PdteError, PdteParams, Query, Response, Result};
use crate::comparators::{encrypt_limbs, limb_digits, xcmp0_poly};
use pdte_he::{add_many, mul_many, HeBackend, PolyPlain, Tier};
use std::collections::HashMap;
use std::time::Instant;

pub(super) fn encrypt_query<B: HeBackend>(b: &B, params: &PdteParams, x: &[u64]) -> Result<Query<B::Ct>> {
    let k = params.limbs();
    let groups = x.iter().map(|&v| encrypt_limbs(b, v, k).map(|q| q.limbs)).collect::<std::result::Result<_, _>>()?;
    Ok(Query { groups })
}

/// Per-query state shared between nodes.
///
/// A node compares with `sum_i Z_i * T(d_i) + R`, where `Z_i = X^{a_i} * prod_{j > i} eq_j`
/// and `T(d)` is the XCMP0 polynomial. The equality bits are exact scalars, so this equals the
/// usual `sum_i gt_i * prod_{j > i} eq_j` in the constant coefficient at the same depth, and
/// every ciphertext product depends only on the attribute and the higher digits: it is
/// computed once per query. `R` is a fresh filler per node.
struct Evaluator<'a, B: HeBackend> {
    b: &'a B,
    query: &'a Query<B::Ct>,
    degree: usize,
    plains: HashMap<usize, B::Pt>,
    equal: HashMap<(usize, usize, usize), B::Ct>,
    prefixed: HashMap<(usize, usize, Vec<usize>), B::Ct>,
}

impl<B: HeBackend> Evaluator<'_, B> {
    fn plain(&mut self, digit: usize) -> Result<&B::Pt> {
        if !self.plains.contains_key(&digit) {
            let pt = self.b.encode_poly(&xcmp0_poly(digit, self.degree, self.b.plain_modulus()))?;
            self.plains.insert(digit, pt);
        }
        Ok(&self.plains[&digit])
    }

    fn eq_limb(&mut self, attr: usize, limb: usize, digit: usize) -> Result<B::Ct> {
        let key = (attr, limb, digit);
        if let Some(c) = self.equal.get(&key) {
            return Ok(c.clone());
        }
        let c = self.b.expand_at(&self.query.groups[attr][limb], digit)?;
        self.equal.insert(key, c.clone());
        Ok(c)
    }

    /// `X^{a_limb} * prod_{j > limb} eq_j` for the given higher digits.
    fn prefixed(&mut self, attr: usize, limb: usize, higher: &[usize]) -> Result<B::Ct> {
        let key = (attr, limb, higher.to_vec());
        if let Some(c) = self.prefixed.get(&key) {
            return Ok(c.clone());
        }
        let mut factors = vec![self.query.groups[attr][limb].clone()];
        for (j, &d) in higher.iter().enumerate() {
            factors.push(self.eq_limb(attr, limb + 1 + j, d)?);
        }
        let c = mul_many(self.b, &factors)?;
        self.prefixed.insert(key, c.clone());
        Ok(c)
    }

    /// `I[x_attr > t]` in the constant coefficient.
    fn compare(&mut self, attr: usize, t: u64) -> Result<B::Ct> {
        let k = self.query.groups[attr].len();
        let digits = limb_digits(t, self.degree, k)?;
        let mut terms = Vec::with_capacity(k);
        for i in 0..k {
            let z = self.prefixed(attr, i, &digits[i + 1..])?;
            terms.push(self.b.mul_plain(&z, self.plain(digits[i])?)?);
        }
        let mut r = self.b.random_vec(self.degree, false);
        r[0] = 0;
        Ok(self.b.add_plain(&add_many(self.b, &terms)?, &self.b.encode_poly(&PolyPlain { coeffs: r })?)?)
    }
}

pub(super) fn evaluate<B: HeBackend>(
    b: &B,
    params: &PdteParams,
    m: &DecisionTreeModel,
    query: &Query<B::Ct>,
    stats: &mut EvalStats,
) -> Result<Response<B::Ct>> {
    let k = params.limbs();
    if query.groups.len() != params.num_attributes || query.groups.iter().any(|g| g.len() != k) {
        return Err(PdteError::Mismatch(format!("expected {} attributes of {k} limbs", params.num_attributes)));
    }
    let mut ev = Evaluator {
        b,
        query,
        degree: b.params().degree,
        plains: HashMap::new(),
        equal: HashMap::new(),
        prefixed: HashMap::new(),
    };
    let zero = b.lower(&b.mul_scalar(&query.groups[0][0], 0), Tier::Mid);
    let leaves = m.leaves();
    let values = m.leaf_values();
    let masks_x = b.random_vec(leaves.len(), true);
    let masks_y = b.random_vec(leaves.len(), false);
    let mut x = Vec::with_capacity(leaves.len());
    let mut y = Vec::with_capacity(leaves.len());
    sumpath(
        m,
        None,
        |i| match m.nodes[i] {
            Node::Decision { attr, threshold, .. } => {
                let start = Instant::now();
                let c = b.lower(&ev.compare(attr, threshold)?, Tier::Mid);
                stats.comparison_ciphertexts += 1;
                stats.comparison_time += start.elapsed();
                Ok(c)
            }
            Node::Leaf { .. } => unreachable!(),
        },
        |s: &Option<B::Ct>, c: &B::Ct, side| {
            // the left edge costs I[x > t], the right edge 1 - I[x > t]
            let cost = match side {
                Side::Left => c.clone(),
                Side::Right => b.add_scalar(&b.neg(c), 1),
            };
            Ok::<_, PdteError>(Some(match s {
                None => cost,
                Some(s) => b.add(s, &cost)?,
            }))
        },
        |i, s| {
            let s = s.unwrap_or_else(|| zero.clone());
            x.push(b.lower(&b.mul_scalar(&s, masks_x[i]), Tier::Low));
            y.push(b.lower(&b.add_scalar(&b.mul_scalar(&s, masks_y[i]), values[i]), Tier::Low));
            Ok(())
        },
    )?;
    Ok(Response { leaves: leaves.len(), x, y })
}
