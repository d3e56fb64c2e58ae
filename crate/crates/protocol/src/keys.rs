//! Key generation and the on-disk key set.
//!
//! A key directory holds `params.json`, the shareable `public.keys` and the client-only
//! `secret.key`.

use crate::{BackendKind, Error, Result};
use pdte_core::pdte::PdteParams;
use pdte_he::rlwe::serialize::{read_backend, write_eval_keys, write_secret_key};
use pdte_he::{BackendParams, HeBackend, HeError, KeyRequest, Mode, RlweBackend, Simulator};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const PARAMS_FILE: &str = "params.json";
pub const PUBLIC_FILE: &str = "public.keys";
pub const SECRET_FILE: &str = "secret.key";

/// A backend whose key material can cross the wire.
pub trait WireBackend: HeBackend + Sized + 'static {
    const KIND: BackendKind;

    /// Fresh keys with exactly the evaluation keys in `req`.
    fn generate(params: BackendParams, mode: Mode, req: &KeyRequest, seed: Option<u64>) -> Result<Self>;

    /// Fresh keys for `params`, including every evaluation key the server will need.
    fn keygen(params: &PdteParams, seed: Option<u64>) -> Result<Self> {
        Self::generate(params.backend_params(), params.mode(), &params.key_request(), seed)
    }

    fn public_blob(&self) -> Vec<u8>;
    fn secret_blob(&self) -> Result<Vec<u8>>;
    fn from_blobs(params: &PdteParams, public: &[u8], secret: Option<&[u8]>) -> Result<Self>;
}

const SIM_PUBLIC: &[u8; 4] = b"SIMK";
const SIM_SECRET: &[u8; 4] = b"SIMS";

fn sim_header(tag: &[u8; 4], bp: &BackendParams) -> Vec<u8> {
    let mut v = tag.to_vec();
    v.extend_from_slice(&1u16.to_le_bytes());
    for x in [bp.degree as u64, bp.plain_modulus, bp.depth_budget as u64] {
        v.extend_from_slice(&x.to_le_bytes());
    }
    v
}

fn seed_from_env() -> Option<u64> {
    std::env::var("PDTE_SEED").ok().and_then(|s| s.parse().ok())
}

/// The simulator has no key material: the public set only pins the parameters and the
/// "secret" is the client's randomness seed.
impl WireBackend for Simulator {
    const KIND: BackendKind = BackendKind::Sim;

    fn generate(params: BackendParams, _: Mode, _: &KeyRequest, seed: Option<u64>) -> Result<Self> {
        let seed = seed.or_else(seed_from_env).unwrap_or_else(rand::random);
        Ok(Simulator::new(params, seed)?)
    }

    fn public_blob(&self) -> Vec<u8> {
        sim_header(SIM_PUBLIC, self.params())
    }

    fn secret_blob(&self) -> Result<Vec<u8>> {
        let seed = self.random_vec(4, false).iter().fold(0u64, |acc, &r| (acc << 16) ^ r);
        let mut v = SIM_SECRET.to_vec();
        v.extend_from_slice(&1u16.to_le_bytes());
        v.extend_from_slice(&seed.to_le_bytes());
        Ok(v)
    }

    fn from_blobs(params: &PdteParams, public: &[u8], secret: Option<&[u8]>) -> Result<Self> {
        if public != sim_header(SIM_PUBLIC, &params.backend_params()).as_slice() {
            return Err(Error::Keys("simulator key set does not match the parameters".into()));
        }
        let seed = match secret {
            Some(s) if s.len() == 14 && &s[..4] == SIM_SECRET => u64::from_le_bytes(s[6..].try_into().unwrap()),
            Some(_) => return Err(Error::Keys("malformed simulator secret".into())),
            None => seed_from_env().unwrap_or_else(rand::random),
        };
        Ok(Simulator::new(params.backend_params(), seed)?)
    }
}

impl WireBackend for RlweBackend {
    const KIND: BackendKind = BackendKind::Rlwe;

    fn generate(params: BackendParams, mode: Mode, req: &KeyRequest, seed: Option<u64>) -> Result<Self> {
        Ok(RlweBackend::generate(params, mode, req, seed)?)
    }

    fn public_blob(&self) -> Vec<u8> {
        write_eval_keys(self)
    }

    fn secret_blob(&self) -> Result<Vec<u8>> {
        Ok(write_secret_key(self)?)
    }

    fn from_blobs(params: &PdteParams, public: &[u8], secret: Option<&[u8]>) -> Result<Self> {
        let b = read_backend(public, secret)?;
        if b.params() != &params.backend_params() || b.chain_mode() != params.mode() {
            return Err(Error::Keys("RLWE key set does not match the parameters".into()));
        }
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyConfig {
    pub backend: BackendKind,
    pub params: PdteParams,
}

#[derive(Clone, Debug)]
pub struct KeyDir {
    pub root: PathBuf,
}

impl KeyDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has_secret(&self) -> bool {
        self.path(SECRET_FILE).exists()
    }

    pub fn config(&self) -> Result<KeyConfig> {
        let text = fs::read_to_string(self.path(PARAMS_FILE))?;
        serde_json::from_str(&text).map_err(|e| Error::Keys(format!("{}: {e}", PARAMS_FILE)))
    }

    pub fn public(&self) -> Result<Vec<u8>> {
        Ok(fs::read(self.path(PUBLIC_FILE))?)
    }

    /// Writes a full key set; refuses to replace an existing secret key unless `force`.
    pub fn store<B: WireBackend>(&self, params: &PdteParams, b: &B, force: bool) -> Result<()> {
        if self.has_secret() && !force {
            return Err(Error::Keys(format!("{} already exists; pass --force to replace it", self.path(SECRET_FILE).display())));
        }
        fs::create_dir_all(&self.root)?;
        let cfg = KeyConfig { backend: B::KIND, params: params.clone() };
        fs::write(self.path(PARAMS_FILE), serde_json::to_string_pretty(&cfg).expect("config serializes"))?;
        fs::write(self.path(PUBLIC_FILE), b.public_blob())?;
        fs::write(self.path(SECRET_FILE), b.secret_blob()?)?;
        Ok(())
    }

    /// Client view: public set plus secret key.
    pub fn load_client<B: WireBackend>(&self, params: &PdteParams) -> Result<B> {
        self.check(params, B::KIND)?;
        let secret = fs::read(self.path(SECRET_FILE))?;
        B::from_blobs(params, &self.public()?, Some(&secret))
    }

    /// Server view: public set only.
    pub fn load_public<B: WireBackend>(&self, params: &PdteParams) -> Result<B> {
        self.check(params, B::KIND)?;
        B::from_blobs(params, &self.public()?, None)
    }

    fn check(&self, params: &PdteParams, kind: BackendKind) -> Result<()> {
        let cfg = self.config()?;
        if cfg.backend != kind || &cfg.params != params {
            return Err(Error::Keys(format!("keys in {} were generated for other parameters", self.root.display())));
        }
        Ok(())
    }
}

/// Generates and stores a key set.
pub fn keygen<B: WireBackend>(params: &PdteParams, out: &Path, force: bool, seed: Option<u64>) -> Result<B> {
    params.validate()?;
    let dir = KeyDir::new(out);
    if dir.has_secret() && !force {
        return Err(Error::Keys(format!("{} already exists; pass --force to replace it", dir.path(SECRET_FILE).display())));
    }
    let b = B::keygen(params, seed)?;
    dir.store(params, &b, force)?;
    Ok(b)
}

/// Loads the client keys in `dir`, generating them first if there are none.
pub fn load_or_generate<B: WireBackend>(params: &PdteParams, dir: &Path) -> Result<B> {
    let kd = KeyDir::new(dir);
    if kd.has_secret() {
        kd.load_client(params)
    } else {
        keygen(params, dir, false, None)
    }
}

impl From<HeError> for Error {
    fn from(e: HeError) -> Self {
        Error::Pdte(e.into())
    }
}
