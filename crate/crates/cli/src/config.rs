//! Run configuration: a JSON file with flag overrides, validated before
//! any computation; unknown keys are rejected. Stepsizes are given as
//! base-two exponents (`tau = 2^k`), matching the dyadic meshes the
//! noise coupling requires.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    ErrorTimePolicy, ExperimentPlan, ModelConfig, NonlinearityKind, Resolutions, SolverOptions,
    SpatialComparison,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Bernoulli bits over the eigenvalues, zero velocity.
    Random,
    Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub nonlinearity: NonlinearityKind,
    pub delta: f64,
    pub t_end: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub workers: Option<usize>,

    // temporal study
    #[serde(default)]
    pub n_per_axis: Option<usize>,
    #[serde(default)]
    pub tau_ladder_log2: Option<Vec<i32>>,
    #[serde(default)]
    pub tau_ref_log2: Option<i32>,

    // spatial study
    #[serde(default)]
    pub n_ladder: Option<Vec<usize>>,
    #[serde(default)]
    pub n_ref: Option<usize>,
    #[serde(default)]
    pub spatial_comparison: Option<SpatialComparison>,

    // single-path simulation and the spatial study's fixed stepsize
    #[serde(default)]
    pub tau_log2: Option<i32>,
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    #[serde(default = "default_initial")]
    pub initial: InitialKind,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,

    // error measurement
    #[serde(default)]
    pub policy: Option<ErrorTimePolicy>,
    #[serde(default = "default_true")]
    pub record_h_norm: bool,

    // nonlinear solver
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_max_iter")]
    pub fp_max_iter: usize,
    #[serde(default = "default_true")]
    pub newton_fallback: bool,
    #[serde(default = "default_linear_tol")]
    pub linear_tol: f64,
    #[serde(default = "default_true")]
    pub enforce_stepsize_rule: bool,

    // growth-condition checker
    #[serde(default = "default_check_range")]
    pub check_range: (f64, f64),
    #[serde(default = "default_check_samples")]
    pub check_samples: usize,
}

fn default_seed() -> u64 {
    42
}
fn default_samples() -> usize {
    200
}
fn default_noise_scale() -> f64 {
    1.0
}
fn default_initial() -> InitialKind {
    InitialKind::Random
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_fp_tol() -> f64 {
    1e-12
}
fn default_fp_max_iter() -> usize {
    50
}
fn default_linear_tol() -> f64 {
    1e-13
}
fn default_check_range() -> (f64, f64) {
    (-10.0, 10.0)
}
fn default_check_samples() -> usize {
    20001
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Config(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be positive".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::Config("noise_scale must be a nonnegative number".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            fp_tol: self.fp_tol,
            fp_max_iter: self.fp_max_iter,
            newton_fallback: self.newton_fallback,
            linear_tol: self.linear_tol,
            enforce_stepsize_rule: self.enforce_stepsize_rule,
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            nonlinearity: self.nonlinearity,
            delta: self.delta,
            t_end: self.t_end,
        }
    }

    pub fn temporal_plan(&self) -> Result<ExperimentPlan> {
        let n_per_axis = self
            .n_per_axis
            .ok_or_else(|| Error::Config("temporal study needs n_per_axis".into()))?;
        let ladder = self
            .tau_ladder_log2
            .as_ref()
            .ok_or_else(|| Error::Config("temporal study needs tau_ladder_log2".into()))?;
        let tau_ref_log2 = self
            .tau_ref_log2
            .ok_or_else(|| Error::Config("temporal study needs tau_ref_log2".into()))?;
        Ok(ExperimentPlan {
            dim: self.dim,
            model: self.model(),
            resolutions: Resolutions::Temporal {
                n_per_axis,
                tau_ladder: ladder.iter().map(|&k| exp2(k)).collect(),
                tau_ref: exp2(tau_ref_log2),
            },
            samples: self.samples,
            seed: self.seed,
            record_h_norm: self.record_h_norm,
            policy: self.policy.unwrap_or(ErrorTimePolicy::SupOverCommonMesh),
            solver: self.solver(),
        })
    }

    pub fn spatial_plan(&self) -> Result<ExperimentPlan> {
        let n_ladder = self
            .n_ladder
            .clone()
            .ok_or_else(|| Error::Config("spatial study needs n_ladder".into()))?;
        let n_ref = self
            .n_ref
            .ok_or_else(|| Error::Config("spatial study needs n_ref".into()))?;
        let tau_log2 = self
            .tau_log2
            .ok_or_else(|| Error::Config("spatial study needs tau_log2".into()))?;
        Ok(ExperimentPlan {
            dim: self.dim,
            model: self.model(),
            resolutions: Resolutions::Spatial {
                tau: exp2(tau_log2),
                n_ladder,
                n_ref,
                comparison: self
                    .spatial_comparison
                    .unwrap_or(SpatialComparison::EmbeddedInReference),
            },
            samples: self.samples,
            seed: self.seed,
            record_h_norm: self.record_h_norm,
            // the spatial rate statements hold per fixed time
            policy: self.policy.unwrap_or(ErrorTimePolicy::TerminalTime),
            solver: self.solver(),
        })
    }

    /// Stepsize for single-path simulation.
    pub fn simulate_tau(&self) -> Result<f64> {
        self.tau_log2
            .map(exp2)
            .ok_or_else(|| Error::Config("simulate needs tau_log2".into()))
    }
}

fn exp2(k: i32) -> f64 {
    2f64.powi(k)
}

/// Built-in study configurations.
///
/// The `paper-*` presets carry the full published experiment sizes; the
/// `desk-*` variants shrink the sample count (and the grid for `d2`) to
/// laptop scale while keeping the model parameters.
pub fn preset(name: &str) -> Option<RunConfig> {
    let base = RunConfig {
        dim: 1,
        nonlinearity: NonlinearityKind::Cubic,
        delta: 1.505,
        t_end: 1.0,
        seed: default_seed(),
        samples: 1000,
        workers: None,
        n_per_axis: None,
        tau_ladder_log2: None,
        tau_ref_log2: None,
        n_ladder: None,
        n_ref: None,
        spatial_comparison: None,
        tau_log2: None,
        noise_scale: 1.0,
        initial: InitialKind::Random,
        snapshot_stride: 1,
        policy: None,
        record_h_norm: true,
        fp_tol: default_fp_tol(),
        fp_max_iter: default_fp_max_iter(),
        newton_fallback: true,
        linear_tol: default_linear_tol(),
        enforce_stepsize_rule: true,
        check_range: default_check_range(),
        check_samples: default_check_samples(),
    };
    let time_ladder = Some(vec![-4, -5, -6, -7, -8, -9]);
    match name {
        "paper-d1-time" => Some(RunConfig {
            n_per_axis: Some(100),
            tau_ladder_log2: time_ladder,
            tau_ref_log2: Some(-10),
            ..base
        }),
        "paper-d2-time" => Some(RunConfig {
            dim: 2,
            delta: 2.005,
            n_per_axis: Some(30),
            tau_ladder_log2: time_ladder,
            tau_ref_log2: Some(-10),
            ..base
        }),
        "desk-d2-time" => Some(RunConfig {
            dim: 2,
            delta: 2.005,
            samples: 100,
            n_per_axis: Some(16),
            tau_ladder_log2: time_ladder,
            tau_ref_log2: Some(-10),
            ..base
        }),
        "paper-d1-space" => Some(RunConfig {
            tau_log2: Some(-5),
            n_ladder: Some(vec![16, 32, 64, 128, 256, 512]),
            n_ref: Some(1024),
            ..base
        }),
        // artifact extension: the published spatial study covers d = 1
        "desk-d2-space" => Some(RunConfig {
            dim: 2,
            delta: 2.005,
            samples: 100,
            tau_log2: Some(-5),
            n_ladder: Some(vec![4, 8, 16]),
            n_ref: Some(32),
            ..base
        }),
        "desk-d1-sim" => Some(RunConfig {
            n_per_axis: Some(100),
            tau_log2: Some(-8),
            snapshot_stride: 32,
            ..base
        }),
        _ => None,
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "paper-d1-time",
        "paper-d2-time",
        "desk-d2-time",
        "paper-d1-space",
        "desk-d2-space",
        "desk-d1-sim",
    ]
}
