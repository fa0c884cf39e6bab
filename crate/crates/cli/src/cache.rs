//! On-disk ground-state cache.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "TJGS" | u32 format | [u8; 32] key | u32 N | u32 n_up | u32 n_dn | u64 dim
//! | f64 energy | f64 residual | u8 degenerate | u64 iterations
//! | f64 × dim amplitudes | [u8; 32] SHA-256 of everything before
//! ```

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tjent::basis::{enumerate_sector, ModelParams, SectorBasis};
use tjent::eigensolver::{global_ground, minimal_sz_params, GroundState, SolverConfig};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"TJGS";
pub const FORMAT_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "TJENT_CACHE_DIR";

const HEADER_LEN: usize = 4 + 4 + 32 + 4 * 3 + 8 + 8 + 8 + 1 + 8;

/// Digest over everything that can change the stored vector.
pub fn cache_key(p: &ModelParams, cfg: &SolverConfig) -> [u8; 32] {
    let material = format!(
        "N={}\nn_up={}\nn_dn={}\nj={:016x}\nboundary={}\ndensity_term={}\ntol={:016x}\nmax_iter={}\nseed={}\nrestart={}\nversion={}\n",
        p.n_sites,
        p.n_up,
        p.n_dn,
        p.j_over_t.to_bits(),
        p.boundary,
        p.density_term,
        cfg.tol.to_bits(),
        cfg.max_iter,
        cfg.seed,
        cfg.restart_after,
        tjent::VERSION,
    );
    Sha256::digest(material.as_bytes()).into()
}

pub fn encode(key: &[u8; 32], p: &ModelParams, gs: &GroundState<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * gs.amplitudes.len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    for v in [p.n_sites, p.n_up, p.n_dn] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(gs.amplitudes.len() as u64).to_le_bytes());
    out.extend_from_slice(&gs.energy.to_le_bytes());
    out.extend_from_slice(&gs.residual_norm.to_le_bytes());
    out.push(gs.degenerate as u8);
    out.extend_from_slice(&(gs.iterations as u64).to_le_bytes());
    for a in &gs.amplitudes {
        out.extend_from_slice(&a.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let b: [u8; K] = self.buf[self.pos..self.pos + K].try_into().unwrap();
        self.pos += K;
        b
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8], key: &[u8; 32], p: &ModelParams) -> Result<GroundState<f64>, String> {
    if bytes.len() < HEADER_LEN + 32 {
        return Err(format!("{} bytes is shorter than the header", bytes.len()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err("digest mismatch".into());
    }
    let mut r = Reader { buf: body, pos: 0 };
    if &r.take::<4>() != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32();
    if version != FORMAT_VERSION {
        return Err(format!("format version {version}, expected {FORMAT_VERSION}"));
    }
    if &r.take::<32>() != key {
        return Err("key mismatch".into());
    }
    let sector = (r.u32() as usize, r.u32() as usize, r.u32() as usize);
    if sector != (p.n_sites, p.n_up, p.n_dn) {
        return Err(format!("sector {sector:?} does not match the request"));
    }
    let dim = r.u64() as usize;
    if body.len() != HEADER_LEN + 8 * dim {
        return Err(format!("payload holds {} bytes for dimension {dim}", body.len()));
    }
    let energy = r.f64();
    let residual_norm = r.f64();
    let degenerate = r.take::<1>()[0] != 0;
    let iterations = r.u64() as usize;
    let amplitudes = (0..dim).map(|_| r.f64()).collect();
    Ok(GroundState {
        energy,
        amplitudes,
        sector: Some((p.n_up, p.n_dn)),
        residual_norm,
        degenerate,
        iterations,
        ritz_history: Vec::new(),
    })
}

/// Ground-state store; a cache without a directory never hits.
#[derive(Debug, Clone)]
pub struct GroundStateCache {
    dir: Option<PathBuf>,
}

/// A solved grid point and whether it came from disk.
pub struct Solved {
    pub basis: SectorBasis,
    pub state: GroundState<f64>,
    pub cache_hit: bool,
}

impl GroundStateCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(&self, key: &[u8; 32]) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.tjgs", hex::encode(key))))
    }

    /// `Ok(None)` on a miss, an error if the entry exists but fails validation.
    pub fn load(&self, p: &ModelParams, cfg: &SolverConfig) -> CliResult<Option<GroundState<f64>>> {
        let key = cache_key(p, cfg);
        let Some(path) = self.path_for(&key) else {
            return Ok(None);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::io(path, e)),
        };
        decode(&bytes, &key, p)
            .map(Some)
            .map_err(|reason| CliError::CorruptCache { path, reason })
    }

    /// Writes to a temporary file in the cache directory, then renames it into place.
    pub fn store(&self, p: &ModelParams, cfg: &SolverConfig, gs: &GroundState<f64>) -> CliResult<()> {
        let key = cache_key(p, cfg);
        let (Some(dir), Some(path)) = (self.dir.as_ref(), self.path_for(&key)) else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
        tmp.write_all(&encode(&key, p, gs)).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        Ok(())
    }

    /// Serves the ground state of the minimal-|Sz| sector of `params` from
    /// disk when possible, solving and storing it otherwise.
    pub fn solve(&self, params: &ModelParams, cfg: &SolverConfig) -> CliResult<Solved> {
        let sector = minimal_sz_params(params);
        match self.load(&sector, cfg) {
            Ok(Some(state)) => {
                let basis = enumerate_sector(&sector)?;
                if basis.dim() == state.amplitudes.len() {
                    return Ok(Solved {
                        basis,
                        state,
                        cache_hit: true,
                    });
                }
                log::warn!("cached vector has the wrong dimension; recomputing");
            }
            Ok(None) => {}
            Err(e @ CliError::CorruptCache { .. }) => log::warn!("{e}; recomputing"),
            Err(e) => return Err(e),
        }
        let (basis, state) = global_ground::<f64>(&sector, cfg)?;
        self.store(&sector, cfg, &state)?;
        Ok(Solved {
            basis,
            state,
            cache_hit: false,
        })
    }
}
