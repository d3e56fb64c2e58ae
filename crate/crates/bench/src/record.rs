use crate::stats::{mean, stddev};
use pdte_core::pdte::Protocol;
use pdte_protocol::BackendKind;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// One measured trial. Column order in the CSV follows the field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub protocol: Protocol,
    pub n: u32,
    pub h: usize,
    pub attributes: usize,
    pub nodes: usize,
    pub backend: BackendKind,
    pub trial: usize,
    pub wall_ns: u64,
    pub query_bytes: usize,
    pub response_bytes: usize,
    /// Comparisons answered by the timed computation.
    pub comparisons: usize,
    /// `wall_ns / comparisons`.
    pub amortized_ns: f64,
    pub max_depth: usize,
    pub threads: usize,
    /// Comparisons one ciphertext can hold at this precision (batched protocols).
    pub capacity: usize,
    /// Published parallel-comparison count at this precision, for side-by-side reading.
    pub published_capacity: Option<usize>,
}

pub const COLUMNS: [&str; 17] = [
    "experiment",
    "protocol",
    "n",
    "h",
    "attributes",
    "nodes",
    "backend",
    "trial",
    "wall_ns",
    "query_bytes",
    "response_bytes",
    "comparisons",
    "amortized_ns",
    "max_depth",
    "threads",
    "capacity",
    "published_capacity",
];

/// Published parallel-comparison counts per precision, kept beside our own capacity.
pub fn published_capacity(n: u32) -> Option<usize> {
    const ROWS: [(u32, usize); 8] = [(8, 963), (12, 655), (16, 496), (20, 399), (24, 334), (28, 287), (32, 252), (36, 224)];
    ROWS.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)
}

/// Writes the header even when there are no records.
pub fn write_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(COLUMNS)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(r: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Mean and spread over the trials of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub experiment: String,
    pub protocol: Protocol,
    pub n: u32,
    pub h: usize,
    pub attributes: usize,
    pub nodes: usize,
    pub backend: BackendKind,
    pub trials: usize,
    pub mean_ns: f64,
    pub stddev_ns: f64,
    pub mean_amortized_ns: f64,
    pub stddev_amortized_ns: f64,
    pub query_bytes: usize,
    pub response_bytes: usize,
    pub max_depth: usize,
    pub best_weight: bool,
}

type Key = (String, Protocol, u32, usize, usize, usize, BackendKind);

fn key(r: &BenchRecord) -> Key {
    (r.experiment.clone(), r.protocol, r.n, r.h, r.attributes, r.nodes, r.backend)
}

/// Groups trials by configuration, in order of first appearance. Among RCC rows that differ
/// only in `h`, the fastest amortized one is flagged.
pub fn summarize(records: &[BenchRecord]) -> Vec<Summary> {
    let mut order: Vec<Key> = Vec::new();
    for r in records {
        let k = key(r);
        if !order.contains(&k) {
            order.push(k);
        }
    }
    let mut out: Vec<Summary> = order
        .into_iter()
        .map(|k| {
            let rows: Vec<&BenchRecord> = records.iter().filter(|r| key(r) == k).collect();
            let wall: Vec<f64> = rows.iter().map(|r| r.wall_ns as f64).collect();
            let amort: Vec<f64> = rows.iter().map(|r| r.amortized_ns).collect();
            Summary {
                experiment: k.0,
                protocol: k.1,
                n: k.2,
                h: k.3,
                attributes: k.4,
                nodes: k.5,
                backend: k.6,
                trials: rows.len(),
                mean_ns: mean(&wall),
                stddev_ns: stddev(&wall),
                mean_amortized_ns: mean(&amort),
                stddev_amortized_ns: stddev(&amort),
                query_bytes: rows.iter().map(|r| r.query_bytes).max().unwrap_or(0),
                response_bytes: rows.iter().map(|r| r.response_bytes).max().unwrap_or(0),
                max_depth: rows.iter().map(|r| r.max_depth).max().unwrap_or(0),
                best_weight: false,
            }
        })
        .collect();
    for i in 0..out.len() {
        if out[i].protocol != Protocol::Rcc {
            continue;
        }
        let same = |s: &Summary| {
            (&s.experiment, s.protocol, s.n, s.attributes, s.nodes, s.backend)
                == (&out[i].experiment, out[i].protocol, out[i].n, out[i].attributes, out[i].nodes, out[i].backend)
        };
        let best = out.iter().filter(|s| same(s)).map(|s| s.mean_amortized_ns).fold(f64::INFINITY, f64::min);
        out[i].best_weight = out[i].mean_amortized_ns == best;
    }
    out
}

fn ms(ns: f64) -> f64 {
    ns / 1e6
}

pub fn summary_text(summaries: &[Summary]) -> String {
    let mut s = String::new();
    for x in summaries {
        let _ = writeln!(
            s,
            "{} {} {} n={} h={} attrs={} nodes={}: {:.3} ± {:.3} ms over {} trials; amortized {:.4} ± {:.4} ms; query {} B, response {} B; depth {}{}",
            x.experiment,
            x.protocol,
            x.backend,
            x.n,
            x.h,
            x.attributes,
            x.nodes,
            ms(x.mean_ns),
            ms(x.stddev_ns),
            x.trials,
            ms(x.mean_amortized_ns),
            ms(x.stddev_amortized_ns),
            x.query_bytes,
            x.response_bytes,
            x.max_depth,
            if x.best_weight { " (best h)" } else { "" },
        );
    }
    s
}

/// Writes `<name>.csv` and `<name>.summary.txt` into `dir`; returns the summary.
pub fn emit_report(records: &[BenchRecord], dir: &Path, name: &str) -> io::Result<String> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join(format!("{name}.csv")))?;
    write_csv(records, io::BufWriter::new(file)).map_err(io::Error::other)?;
    let text = summary_text(&summarize(records));
    fs::write(dir.join(format!("{name}.summary.txt")), &text)?;
    Ok(text)
}
