//! Trace-class Q-Wiener increments with covariance `Q = Lambda^(-delta)`,
//! coupled across time and space resolutions and fully deterministic.
//!
//! A path stores modal Brownian increments at the finest stepsize: entry
//! `(step, mode)` is `sqrt(q_m tau_ref) xi` with `xi` standard normal.
//! Draws come from one ChaCha12 substream per mode, keyed by the mode's
//! multi-index, not its flat position. In consequence a path restricted
//! to a coarser grid carries bit-identical draws on the shared modes, and
//! regenerating a path from `(seed, spec, t_end, tau_ref)` is bit-exact
//! regardless of thread count.
//!
//! Coarser time resolutions reuse the same Brownian path by summing
//! constituent increments. Summation is pairwise over the dyadic step
//! hierarchy, so coarsening commutes with further coarsening without any
//! floating-point discrepancy.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::{Field, SpectralGrid};

/// Fixed avalanche mixer for deriving substream seeds; also used by
/// callers to derive per-sample seeds from one master seed.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    math::mix64(a, b)
}

/// Modal covariance `q_m = lambda_m^(-delta)` for `delta > 1 + dim/2`,
/// the decay needed for a trace-class driving noise in the energy space.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    grid: Arc<SpectralGrid>,
    delta: f64,
    q: Vec<f64>,
    hs_partial: f64,
}

impl NoiseSpec {
    pub fn new(grid: &Arc<SpectralGrid>, delta: f64) -> Result<Self> {
        let threshold = 1.0 + grid.dim() as f64 / 2.0;
        if delta.is_nan() || delta <= threshold {
            return Err(Error::InvalidParameter(format!(
                "covariance decay delta = {delta} must exceed 1 + dim/2 = {threshold} for a \
                 trace-class noise with finite energy injection"
            )));
        }
        let q: Vec<f64> = grid
            .eigenvalues()
            .iter()
            .map(|&lam| math::powf(lam, -delta))
            .collect();
        let hs_partial = grid
            .eigenvalues()
            .iter()
            .map(|&lam| math::powf(lam, 1.0 - delta))
            .sum();
        Ok(Self {
            grid: Arc::clone(grid),
            delta,
            q,
            hs_partial,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Partial Hilbert-Schmidt sum `sum_m lambda_m^(1-delta)` over the
    /// retained modes; bounded in the grid size exactly when the decay
    /// condition holds.
    pub fn hs_partial(&self) -> f64 {
        self.hs_partial
    }
}

/// Modal Brownian increments at the finest time resolution.
#[derive(Debug, Clone)]
pub struct NoisePath {
    spec: NoiseSpec,
    t_end: f64,
    tau_ref: f64,
    m_ref: usize,
    seed: u64,
    /// step-major, mode-minor; length `m_ref * modes`
    increments: Vec<f64>,
}

impl NoisePath {
    /// Draw a path over `[0, t_end]` at stepsize `tau_ref = t_end / m_ref`
    /// with `m_ref` a power of two.
    pub fn sample(spec: &NoiseSpec, t_end: f64, tau_ref: f64, seed: u64) -> Result<Self> {
        let m_ref = checked_ratio(t_end, tau_ref).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "reference stepsize {tau_ref} does not divide the horizon {t_end}"
            ))
        })?;
        if !m_ref.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "reference step count {m_ref} must be a power of two"
            )));
        }
        let modes = spec.grid().modes();
        let mut increments = alloc::vec![0.0; m_ref * modes];
        for mode in 0..modes {
            let (j, k) = spec.grid().multi_index(mode);
            let stream = mix_seed(mix_seed(seed, j as u64), k as u64);
            let mut rng = ChaCha12Rng::seed_from_u64(stream);
            let scale = math::sqrt(spec.q()[mode] * tau_ref);
            for step in 0..m_ref {
                let xi: f64 = StandardNormal.sample(&mut rng);
                increments[step * modes + mode] = scale * xi;
            }
        }
        Ok(Self {
            spec: spec.clone(),
            t_end,
            tau_ref,
            m_ref,
            seed,
            increments,
        })
    }

    /// Wrap precomputed increments (replay from a dump, test fixtures).
    pub fn from_increments(
        spec: NoiseSpec,
        t_end: f64,
        tau_ref: f64,
        increments: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let m_ref = checked_ratio(t_end, tau_ref).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "reference stepsize {tau_ref} does not divide the horizon {t_end}"
            ))
        })?;
        if !m_ref.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "reference step count {m_ref} must be a power of two"
            )));
        }
        if increments.len() != m_ref * spec.grid().modes() {
            return Err(Error::InvalidArgument(format!(
                "increment array length {} does not match {} steps x {} modes",
                increments.len(),
                m_ref,
                spec.grid().modes()
            )));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(String::from(
                "noise increments must be finite",
            )));
        }
        Ok(Self {
            spec,
            t_end,
            tau_ref,
            m_ref,
            seed,
            increments,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn tau_ref(&self) -> f64 {
        self.tau_ref
    }

    pub fn m_ref(&self) -> usize {
        self.m_ref
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Modal increments of reference step `step`.
    pub fn increment(&self, step: usize) -> &[f64] {
        let modes = self.spec.grid().modes();
        &self.increments[step * modes..(step + 1) * modes]
    }

    /// Amplitude-scaled copy of the path (`0.0` silences the noise).
    pub fn scaled(&self, factor: f64) -> NoisePath {
        let mut out = self.clone();
        for x in &mut out.increments {
            *x *= factor;
        }
        out
    }

    /// Increments of the same Brownian path at a coarser stepsize `tau`,
    /// obtained by pairwise summation over the dyadic hierarchy.
    pub fn coarsen(&self, tau: f64) -> Result<Vec<Field>> {
        let ratio = checked_ratio(tau, self.tau_ref).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "stepsize {tau} is not a multiple of the reference stepsize {}",
                self.tau_ref
            ))
        })?;
        if !self.m_ref.is_multiple_of(ratio) {
            return Err(Error::InvalidArgument(format!(
                "stepsize {tau} does not divide the horizon {}",
                self.t_end
            )));
        }
        debug_assert!(ratio.is_power_of_two());
        let modes = self.spec.grid().modes();
        let mut current = self.increments.clone();
        let mut steps = self.m_ref;
        while steps > self.m_ref / ratio {
            steps /= 2;
            for s in 0..steps {
                for m in 0..modes {
                    current[s * modes + m] =
                        current[2 * s * modes + m] + current[(2 * s + 1) * modes + m];
                }
            }
            current.truncate(steps * modes);
        }
        let grid = self.spec.grid();
        Ok(current
            .chunks(modes)
            .map(|chunk| Field::from_coeffs_unchecked(grid, chunk.to_vec()))
            .collect())
    }

    /// The same draws restricted to a coarser mode set.
    pub fn restrict_to_grid(&self, coarse: &Arc<SpectralGrid>) -> Result<NoisePath> {
        let fine = self.spec.grid();
        if coarse.dim() != fine.dim() || coarse.n_per_axis() > fine.n_per_axis() {
            return Err(Error::InvalidArgument(String::from(
                "restriction target must be a nested coarser grid",
            )));
        }
        let spec = NoiseSpec::new(coarse, self.spec.delta())?;
        let nc = coarse.n_per_axis();
        let nf = fine.n_per_axis();
        let modes_c = coarse.modes();
        let modes_f = fine.modes();
        let mut increments = Vec::with_capacity(self.m_ref * modes_c);
        for step in 0..self.m_ref {
            let row = &self.increments[step * modes_f..(step + 1) * modes_f];
            match fine.dim() {
                1 => increments.extend_from_slice(&row[..nc]),
                _ => {
                    for j in 0..nc {
                        increments.extend_from_slice(&row[j * nf..j * nf + nc]);
                    }
                }
            }
        }
        Ok(NoisePath {
            spec,
            t_end: self.t_end,
            tau_ref: self.tau_ref,
            m_ref: self.m_ref,
            seed: self.seed,
            increments,
        })
    }
}

/// `a / b` when it is (very nearly) a positive integer.
fn checked_ratio(a: f64, b: f64) -> Option<usize> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return None;
    }
    let ratio = a / b;
    let rounded = math::round(ratio);
    if rounded < 1.0 || math::abs(ratio - rounded) > 1e-9 * rounded {
        return None;
    }
    Some(rounded as usize)
}
