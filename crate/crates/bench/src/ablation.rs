//! End-to-end PDTE runs swept over the attribute count or the tree size.

use crate::record::BenchRecord;
use crate::{BenchError, Result};
use pdte_core::pdte::{synth_tree, DecisionTreeModel, PdteParams, Protocol};
use pdte_protocol::{Client, Envelope, Server, WireBackend};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Attributes,
    Nodes,
}

impl Axis {
    pub fn experiment(self) -> &'static str {
        match self {
            Axis::Attributes => "attrs",
            Axis::Nodes => "nodes",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.experiment())
    }
}

impl FromStr for Axis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attrs" | "attributes" => Ok(Axis::Attributes),
            "nodes" => Ok(Axis::Nodes),
            other => Err(BenchError::Usage(format!("unknown ablation axis {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AblationConfig {
    pub axis: Axis,
    pub protocols: Vec<Protocol>,
    pub precisions: Vec<u32>,
    pub trials: usize,
    /// Attribute counts for the attributes axis.
    pub attributes: Vec<usize>,
    /// Tree depths for the nodes axis, counting the leaf level: depth `d` has `2^(d-1) - 1`
    /// decision nodes.
    pub depths: Vec<u32>,
    pub seed: u64,
}

impl AblationConfig {
    pub fn new(axis: Axis) -> Self {
        Self {
            axis,
            protocols: Protocol::ALL.to_vec(),
            precisions: vec![8, 16, 26],
            trials: 10,
            attributes: vec![5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100],
            depths: (2..=11).collect(),
            seed: 1,
        }
    }
}

/// Attribute count of the fixed tree on the nodes axis.
pub const NODES_AXIS_ATTRIBUTES: usize = 32;
/// Depth of the fixed 31-node tree on the attributes axis.
pub const ATTRS_AXIS_DEPTH: u32 = 6;

/// Runs `trials` private evaluations of `model` and checks each against the clear result.
/// Wall time covers server evaluation only; byte counts are whole serialized frames.
pub fn bench_pdte_point<B: WireBackend>(
    experiment: &str,
    params: &PdteParams,
    model: &DecisionTreeModel,
    trials: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<BenchRecord>> {
    let client = Client::new(params.clone(), B::keygen(params, Some(rng.gen()))?)?;
    let server = Server::<B>::new(params.clone(), model.clone())?;
    server.add_keys(client.public_keys())?;
    let nodes = model.decision_nodes().len();
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let x: Vec<u64> = (0..params.num_attributes).map(|_| rng.gen_range(0..1u64 << params.precision)).collect();
        let q = client.query_envelope(&x)?;
        let (r, stats) =
            server.respond_with_stats(&q).map_err(|e| BenchError::Wrong(format!("server refused the query: {}", e.message)))?;
        let got = client.decode_response(&r)?;
        let want = model.eval_clear(&x)?;
        if got != want {
            return Err(BenchError::Wrong(format!("{} returned {got}, expected {want}", params.protocol)));
        }
        let b = client.backend();
        let depth = r
            .x
            .iter()
            .chain(&r.y)
            .map(|blob| b.deserialize_ct(blob).map(|c| b.depth(&c)))
            .collect::<std::result::Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let ns = stats.total_time.as_nanos() as u64;
        out.push(BenchRecord {
            experiment: experiment.to_string(),
            protocol: params.protocol,
            n: params.precision,
            h: if params.protocol == Protocol::Rcc { params.hamming_weight } else { 0 },
            attributes: params.num_attributes,
            nodes,
            backend: B::KIND,
            trial,
            wall_ns: ns,
            query_bytes: q.to_frame().encoded_len(),
            response_bytes: r.to_frame().encoded_len(),
            comparisons: nodes,
            amortized_ns: ns as f64 / nodes.max(1) as f64,
            max_depth: depth,
            threads: 1,
            capacity: if params.protocol == Protocol::Xxcmp { 1 } else { params.capacity() },
            published_capacity: None,
        });
    }
    Ok(out)
}

pub fn bench_pdte_ablation<B: WireBackend>(cfg: &AblationConfig) -> Result<Vec<BenchRecord>> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for &protocol in &cfg.protocols {
        for &n in &cfg.precisions {
            match cfg.axis {
                Axis::Attributes => {
                    for &a in &cfg.attributes {
                        let params = PdteParams::new(protocol, n, a);
                        let model = synth_tree(ATTRS_AXIS_DEPTH, n, a, rng.gen());
                        out.extend(bench_pdte_point::<B>("attrs", &params, &model, cfg.trials, &mut rng)?);
                    }
                }
                Axis::Nodes => {
                    for &d in &cfg.depths {
                        let params = PdteParams::new(protocol, n, NODES_AXIS_ATTRIBUTES);
                        let model = synth_tree(d, n, NODES_AXIS_ATTRIBUTES, rng.gen());
                        out.extend(bench_pdte_point::<B>("nodes", &params, &model, cfg.trials, &mut rng)?);
                    }
                }
            }
        }
    }
    Ok(out)
}
