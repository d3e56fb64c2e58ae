use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pdte_bench::{bench_comparison, bench_pdte_ablation, emit_report, read_csv, AblationConfig, Axis, CmpConfig, Experiment};
use pdte_core::pdte::{random_tree, synth_tree, validate, DecisionTreeModel, PdteParams, Protocol, TreeJson};
use pdte_he::{RlweBackend, Simulator};
use pdte_protocol::{BackendKind, Client, KeyConfig, KeyDir, Server, WireBackend};
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "pdte", version, about = "Private decision tree evaluation: keys, client, server and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key set: params.json, public.keys (shareable) and secret.key (client only).
    Keygen {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "sim")]
        backend: BackendKind,
        #[arg(long, default_value = "pdte-keys")]
        keys: PathBuf,
        /// Replace an existing secret key.
        #[arg(long)]
        force: bool,
    },
    /// Serve a model over TCP, or answer one offline query directory and exit.
    Serve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        backend: Option<BackendKind>,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Preload the public key set from this directory.
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long)]
        offline_dir: Option<PathBuf>,
    },
    /// Classify one attribute vector; prints the class value.
    Query {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        backend: Option<BackendKind>,
        /// Key directory; keys are generated here on first use.
        #[arg(long, default_value = "pdte-keys")]
        keys: PathBuf,
        /// Attribute vector as a CSV row or a JSON array.
        #[arg(long)]
        attrs: Option<PathBuf>,
        #[arg(long)]
        server: Option<String>,
        /// Write keys.bin and query.bin here instead of connecting.
        #[arg(long)]
        offline_dir: Option<PathBuf>,
        /// With --offline-dir: read response.bin and print the result.
        #[arg(long, requires = "offline_dir")]
        decode: bool,
    },
    /// Run a benchmark and write <experiment>.csv and <experiment>.summary.txt.
    Bench {
        #[arg(long)]
        experiment: Experiment,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        #[arg(long, default_value = "sim")]
        backend: BackendKind,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated protocols (default: all).
        #[arg(long, value_delimiter = ',')]
        protocol: Vec<Protocol>,
        /// Comma-separated precisions (default depends on the experiment).
        #[arg(long, value_delimiter = ',')]
        precision: Vec<u32>,
        /// RCC weights for the cmp experiment (default: sweep).
        #[arg(long, value_delimiter = ',')]
        hamming_weight: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Externally measured records (same CSV schema) to include in the report.
        #[arg(long)]
        merge: Vec<PathBuf>,
    },
    /// Write a synthetic tree as JSON.
    TreeGen {
        /// Levels including the leaves; a balanced tree of depth d has 2^(d-1) - 1 decision nodes.
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        precision: u32,
        #[arg(long)]
        attributes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Unbalanced random shape no deeper than `depth`.
        #[arg(long)]
        random: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a tree JSON file and list every violation.
    TreeValidate {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct ParamArgs {
    /// JSON parameter file (PdteParams, or a key directory's params.json).
    #[arg(long, conflicts_with_all = ["protocol", "precision", "hamming_weight", "attributes", "degree"])]
    params: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long)]
    hamming_weight: Option<usize>,
    /// Number of client attributes.
    #[arg(long)]
    attributes: Option<usize>,
    /// Ring degree override.
    #[arg(long)]
    degree: Option<usize>,
}

impl ParamArgs {
    fn given(&self) -> bool {
        self.params.is_some() || self.protocol.is_some()
    }

    /// `fallback` supplies precision and attribute count when the flags leave them out.
    fn resolve(&self, fallback: Option<(u32, usize)>) -> Result<PdteParams> {
        let params = if let Some(path) = &self.params {
            read_params(path)?
        } else {
            let protocol = self.protocol.ok_or_else(|| anyhow!("--protocol or --params is required"))?;
            let precision = self.precision.or(fallback.map(|f| f.0)).ok_or_else(|| anyhow!("--precision is required"))?;
            let attributes = self.attributes.or(fallback.map(|f| f.1)).ok_or_else(|| anyhow!("--attributes is required"))?;
            let mut p = PdteParams::new(protocol, precision, attributes);
            if let Some(h) = self.hamming_weight {
                if protocol != Protocol::Rcc {
                    bail!("--hamming-weight only applies to rcc");
                }
                p = p.with_hamming_weight(h);
            }
            if let Some(d) = self.degree {
                p = p.with_degree(d);
            }
            p
        };
        params.validate()?;
        Ok(params)
    }
}

fn read_params(path: &Path) -> Result<PdteParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(cfg) = serde_json::from_str::<KeyConfig>(&text) {
        return Ok(cfg.params);
    }
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_model(path: &Path) -> Result<DecisionTreeModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    DecisionTreeModel::from_json_str(&text).with_context(|| format!("loading {}", path.display()))
}

/// A JSON array, or the first all-numeric CSV row (a header row is skipped).
fn parse_attrs(text: &str) -> Result<Vec<u64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).context("attributes must be a JSON array of non-negative integers");
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(t.as_bytes());
    for rec in rdr.records() {
        let rec = rec?;
        let vals: std::result::Result<Vec<u64>, _> = rec.iter().filter(|f| !f.is_empty()).map(str::parse).collect();
        match vals {
            Ok(v) if !v.is_empty() => return Ok(v),
            _ => continue,
        }
    }
    bail!("no row of non-negative integers found")
}

fn read_attrs(path: Option<&Path>) -> Result<Vec<u64>> {
    let path = path.ok_or_else(|| anyhow!("--attrs is required"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_attrs(&text).with_context(|| format!("parsing {}", path.display()))
}

macro_rules! dispatch {
    ($kind:expr, $f:ident ( $($arg:expr),* )) => {
        match $kind {
            BackendKind::Sim => $f::<Simulator>($($arg),*),
            BackendKind::Rlwe => $f::<RlweBackend>($($arg),*),
        }
    };
}

fn keygen_cmd<B: WireBackend>(params: &PdteParams, dir: &Path, force: bool) -> Result<()> {
    let b = pdte_protocol::keygen::<B>(params, dir, force, None)?;
    let c = Client::new(params.clone(), b)?;
    println!("wrote {} keys to {} ({} public bytes)", B::KIND, dir.display(), c.public_keys().len());
    Ok(())
}

fn serve_cmd<B: WireBackend>(
    params: PdteParams,
    model: DecisionTreeModel,
    keys: Option<&Path>,
    listen: &str,
    offline: Option<&Path>,
) -> Result<()> {
    let server = Server::<B>::new(params.clone(), model)?;
    if let Some(dir) = keys {
        let kd = KeyDir::new(dir);
        kd.load_public::<B>(&params)?;
        server.add_keys(&kd.public()?)?;
    }
    if let Some(dir) = offline {
        let kind = server.process_dir(dir)?;
        println!("wrote {:?} frame to {}", kind, dir.join(pdte_protocol::RESPONSE_BLOB).display());
        return Ok(());
    }
    let listener = TcpListener::bind(listen).with_context(|| format!("binding {listen}"))?;
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;
    Arc::new(server).serve(listener)?;
    Ok(())
}

fn query_cmd<B: WireBackend>(
    params: &PdteParams,
    dir: &Path,
    attrs: Option<&Path>,
    server: Option<&str>,
    offline: Option<&Path>,
    decode: bool,
) -> Result<()> {
    let client = Client::new(params.clone(), pdte_protocol::load_or_generate::<B>(params, dir)?)?;
    match (offline, server) {
        (Some(d), _) if decode => println!("{}", client.read_offline(d)?),
        (Some(d), _) => {
            client.write_offline(d, &read_attrs(attrs)?)?;
            eprintln!("wrote keys.bin and query.bin to {}", d.display());
        }
        (None, Some(addr)) => {
            let x = read_attrs(attrs)?;
            println!("{}", client.query(addr, &x)?);
        }
        (None, None) => bail!("pass --server ADDR or --offline-dir DIR"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Keygen { params, backend, keys, force } => {
            let p = params.resolve(None)?;
            dispatch!(backend, keygen_cmd(&p, &keys, force))?;
        }
        Command::Serve { params, model, backend, listen, keys, offline_dir } => {
            let m = read_model(&model)?;
            let cfg = match (&keys, params.given()) {
                (Some(dir), false) => Some(KeyDir::new(dir).config()?),
                _ => None,
            };
            let p = match &cfg {
                Some(c) => c.params.clone(),
                None => params.resolve(Some((m.precision, m.num_attributes)))?,
            };
            let kind = backend.or(cfg.map(|c| c.backend)).unwrap_or(BackendKind::Sim);
            dispatch!(kind, serve_cmd(p, m, keys.as_deref(), &listen, offline_dir.as_deref()))?;
        }
        Command::Query { params, backend, keys, attrs, server, offline_dir, decode } => {
            let kd = KeyDir::new(&keys);
            let (p, kind) = if kd.has_secret() {
                let cfg = kd.config()?;
                if params.given() && params.resolve(None)? != cfg.params {
                    bail!("keys in {} were generated for other parameters", keys.display());
                }
                if backend.is_some_and(|b| b != cfg.backend) {
                    bail!("keys in {} are {} keys", keys.display(), cfg.backend);
                }
                (cfg.params, cfg.backend)
            } else {
                let n = if params.attributes.is_none() && params.params.is_none() {
                    Some(read_attrs(attrs.as_deref())?.len())
                } else {
                    None
                };
                let fallback = match (params.precision, n) {
                    (Some(prec), Some(n)) => Some((prec, n)),
                    _ => None,
                };
                (params.resolve(fallback)?, backend.unwrap_or(BackendKind::Sim))
            };
            dispatch!(kind, query_cmd(&p, &keys, attrs.as_deref(), server.as_deref(), offline_dir.as_deref(), decode))?;
        }
        Command::Bench { experiment, out, backend, trials, protocol, precision, hamming_weight, seed, merge } => {
            let mut records = match experiment {
                Experiment::Cmp => {
                    let mut cfg = CmpConfig { seed, ..Default::default() };
                    if !protocol.is_empty() {
                        cfg.protocols = protocol;
                    }
                    if !precision.is_empty() {
                        cfg.precisions = precision;
                    }
                    if !hamming_weight.is_empty() {
                        cfg.hamming_weights = Some(hamming_weight);
                    }
                    cfg.trials = trials.unwrap_or(cfg.trials);
                    dispatch!(backend, bench_comparison(&cfg))?
                }
                Experiment::Attrs | Experiment::Nodes => {
                    let axis = if experiment == Experiment::Attrs { Axis::Attributes } else { Axis::Nodes };
                    let mut cfg = AblationConfig::new(axis);
                    cfg.seed = seed;
                    if !protocol.is_empty() {
                        cfg.protocols = protocol;
                    }
                    if !precision.is_empty() {
                        cfg.precisions = precision;
                    }
                    cfg.trials = trials.unwrap_or(cfg.trials);
                    dispatch!(backend, bench_pdte_ablation(&cfg))?
                }
            };
            for path in &merge {
                let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
                records.extend(read_csv(file).with_context(|| format!("parsing {}", path.display()))?);
            }
            print!("{}", emit_report(&records, &out, experiment.as_str())?);
        }
        Command::TreeGen { depth, precision, attributes, seed, random, out } => {
            if !(1..=20).contains(&depth) || attributes == 0 || !(1..=63).contains(&precision) {
                bail!("need 1 <= depth <= 20, attributes >= 1 and 1 <= precision <= 63");
            }
            let tree = if random {
                random_tree(depth, precision, attributes, seed)
            } else {
                synth_tree(depth, precision, attributes, seed)
            };
            let json = tree.to_json_string();
            match out {
                Some(path) => fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
        }
        Command::TreeValidate { model } => {
            let text = fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let tree: TreeJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", model.display()))?;
            let violations = validate(&tree);
            if !violations.is_empty() {
                for v in &violations {
                    println!("{v}");
                }
                return Ok(ExitCode::FAILURE);
            }
            let m = DecisionTreeModel::from_json(&tree)?;
            let decisions = m.decision_nodes().len();
            println!("ok: {} decision nodes, {} leaves", decisions, m.nodes.len() - decisions);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
