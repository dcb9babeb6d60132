//! File formats: state snapshots (JSON), norm series (CSV) and the
//! binary noise-path dump for cross-implementation replay.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use swave_core::{Field, NoisePath, NoiseSpec, PairState, SpectralGrid};

use crate::error::{Error, Result};
use crate::report::fmt17;

/// Flat snapshot of a pair state in canonical mode order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub dim: usize,
    pub n_per_axis: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Snapshot {
    pub fn of(state: &PairState) -> Self {
        Self {
            dim: state.grid().dim(),
            n_per_axis: state.grid().n_per_axis(),
            u: state.u().coeffs().to_vec(),
            v: state.v().coeffs().to_vec(),
        }
    }

    pub fn into_state(self) -> Result<PairState> {
        let grid = SpectralGrid::new(self.dim, self.n_per_axis)?;
        let u = Field::from_coeffs(&grid, self.u)?;
        let v = Field::from_coeffs(&grid, self.v)?;
        Ok(PairState::new(u, v)?)
    }
}

pub fn write_snapshot(path: &Path, state: &PairState) -> Result<()> {
    let json = serde_json::to_string(&Snapshot::of(state))?;
    fs::write(path, json)?;
    Ok(())
}

/// Norm time series writer with fixed 17-digit floats.
pub struct NormSeriesCsv {
    rows: String,
}

impl NormSeriesCsv {
    pub fn new() -> Self {
        Self {
            rows: String::from("step,time,h1_norm,h_norm\n"),
        }
    }

    pub fn push(&mut self, step: usize, time: f64, state: &PairState) {
        self.rows.push_str(&format!(
            "{},{},{},{}\n",
            step,
            fmt17(time),
            fmt17(state.product_norm(1.0)),
            fmt17(state.product_norm(0.0))
        ));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.rows)?;
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.rows
    }
}

impl Default for NormSeriesCsv {
    fn default() -> Self {
        Self::new()
    }
}

const NOISE_MAGIC: &[u8; 8] = b"SWNOISE1";

/// Binary dump layout, all little-endian: magic `SWNOISE1`, `u32` dim,
/// `u32` modes per axis, `u64` reference step count, `f64` horizon,
/// `f64` covariance decay, `u64` seed, then `m_ref * modes` increments
/// as `f64`, step-major and mode-minor.
pub fn write_noise_dump(path: &Path, noise: &NoisePath) -> Result<()> {
    let grid = noise.spec().grid();
    let mut out = Vec::with_capacity(48 + 8 * noise.increments().len());
    out.extend_from_slice(NOISE_MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&(noise.m_ref() as u64).to_le_bytes());
    out.extend_from_slice(&noise.t_end().to_le_bytes());
    out.extend_from_slice(&noise.spec().delta().to_le_bytes());
    out.extend_from_slice(&noise.seed().to_le_bytes());
    for x in noise.increments() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_noise_dump(path: &Path) -> Result<NoisePath> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 48 || &bytes[..8] != NOISE_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a noise dump (bad magic or truncated header)",
            path.display()
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dim = u32_at(8) as usize;
    let n_per_axis = u32_at(12) as usize;
    let m_ref = u64_at(16) as usize;
    let t_end = f64_at(24);
    let delta = f64_at(32);
    let seed = u64_at(40);

    let grid = SpectralGrid::new(dim, n_per_axis)?;
    let spec = NoiseSpec::new(&grid, delta)?;
    let expected = m_ref
        .checked_mul(grid.modes())
        .ok_or_else(|| Error::Format("noise dump header overflows".into()))?;
    let payload = &bytes[48..];
    if payload.len() != 8 * expected {
        return Err(Error::Format(format!(
            "noise dump payload holds {} bytes, expected {}",
            payload.len(),
            8 * expected
        )));
    }
    let increments: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if m_ref == 0 {
        return Err(Error::Format("noise dump has no steps".into()));
    }
    let tau_ref = t_end / m_ref as f64;
    Ok(NoisePath::from_increments(
        spec, t_end, tau_ref, increments, seed,
    )?)
}
