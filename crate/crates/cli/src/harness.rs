//! Mean-square convergence studies in time and space with coupled noise,
//! rate fitting and moment monitoring.
//!
//! Estimator shape: for each resolution and each common mesh time the
//! harness forms the RMS over samples, `(S^-1 sum_s |e_s(t)|^2)^(1/2)`,
//! and only then applies the time policy (sup over the common mesh, or
//! the terminal time). Rates are least-squares slopes on a log2-log2
//! plot, against the stepsize in time and against the largest retained
//! eigenvalue in space.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use swave_core::{
    integrate, mix_seed, CollocationPlan, Field, NoisePath, NoiseSpec, NonlinearitySpec,
    PairState, SpectralGrid,
};

use crate::error::{Error, Result};
use crate::pool::run_samples;
use crate::report::{RateFit, RatePoint, RateReport, RateSeries};

/// Salt words separating the independent random draws of one sample.
const INIT_SALT: u64 = 0x494e_4954;
const NOISE_SALT: u64 = 0x4e4f_4953;

/// Sub-seeds for one sample: `(initial state, noise path)`, derived from
/// the master seed through the fixed mixer.
pub fn sample_seeds(master: u64, sample: usize) -> (u64, u64) {
    let seed_s = mix_seed(master, sample as u64);
    (mix_seed(seed_s, INIT_SALT), mix_seed(seed_s, NOISE_SALT))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Cubic,
    Linear,
    Zero,
    Exp,
    Square,
}

impl NonlinearityKind {
    pub fn spec(self) -> NonlinearitySpec {
        match self {
            NonlinearityKind::Cubic => NonlinearitySpec::cubic(),
            NonlinearityKind::Linear => NonlinearitySpec::linear(),
            NonlinearityKind::Zero => NonlinearitySpec::zero(),
            // nominal constants: both exist to demonstrate failing checks
            NonlinearityKind::Exp => NonlinearitySpec::new(
                f64::exp,
                f64::exp,
                f64::exp,
                2.0,
                1.0,
                1.0,
                1.0,
                1.0,
                None,
            )
            .expect("static spec"),
            NonlinearityKind::Square => NonlinearitySpec::new(
                |v| v * v,
                |v| 2.0 * v,
                |_| 2.0,
                2.0,
                1.0,
                1.0,
                2.0,
                2.0,
                Some(2),
            )
            .expect("static spec"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NonlinearityKind::Cubic => "cubic",
            NonlinearityKind::Linear => "linear",
            NonlinearityKind::Zero => "zero",
            NonlinearityKind::Exp => "exp",
            NonlinearityKind::Square => "square",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorTimePolicy {
    /// Sup over the common mesh of per-time RMS errors.
    SupOverCommonMesh,
    /// RMS error at the final time only.
    TerminalTime,
}

impl ErrorTimePolicy {
    pub fn name(self) -> &'static str {
        match self {
            ErrorTimePolicy::SupOverCommonMesh => "sup",
            ErrorTimePolicy::TerminalTime => "terminal",
        }
    }
}

/// How the spatial study compares a coarse run against the reference.
/// The default embeds the coarse state into the reference space by zero
/// padding, so the error includes the reference's unresolved tail; the
/// projected variant measures inside the coarse mode set only, isolating
/// the resolved-mode error. With the rough Bernoulli-over-eigenvalues
/// initial displacement the tail decays slower than the resolved error,
/// and the two variants show different rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialComparison {
    ProjectedReference,
    EmbeddedInReference,
}

impl SpatialComparison {
    pub fn name(self) -> &'static str {
        match self {
            SpatialComparison::ProjectedReference => "projected-reference",
            SpatialComparison::EmbeddedInReference => "embedded-in-reference",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub nonlinearity: NonlinearityKind,
    pub delta: f64,
    pub t_end: f64,
}

/// Nonlinear-solver settings threaded into every integration of a study.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub newton_fallback: bool,
    pub linear_tol: f64,
    pub enforce_stepsize_rule: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let template = swave_core::SchemeConfig::new(1.0);
        Self {
            fp_tol: template.fp_tol,
            fp_max_iter: template.fp_max_iter,
            newton_fallback: template.newton_fallback,
            linear_tol: template.linear_tol,
            enforce_stepsize_rule: template.enforce_stepsize_rule,
        }
    }
}

impl SolverOptions {
    pub fn scheme(&self, tau: f64) -> swave_core::SchemeConfig {
        let mut cfg = swave_core::SchemeConfig::new(tau);
        cfg.fp_tol = self.fp_tol;
        cfg.fp_max_iter = self.fp_max_iter;
        cfg.newton_fallback = self.newton_fallback;
        cfg.linear_tol = self.linear_tol;
        cfg.enforce_stepsize_rule = self.enforce_stepsize_rule;
        cfg
    }
}

#[derive(Debug, Clone)]
pub enum Resolutions {
    Temporal {
        n_per_axis: usize,
        tau_ladder: Vec<f64>,
        tau_ref: f64,
    },
    Spatial {
        tau: f64,
        n_ladder: Vec<usize>,
        n_ref: usize,
        comparison: SpatialComparison,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub dim: usize,
    pub model: ModelConfig,
    pub resolutions: Resolutions,
    pub samples: usize,
    pub seed: u64,
    /// Record the base product norm alongside the energy norm.
    pub record_h_norm: bool,
    pub policy: ErrorTimePolicy,
    pub solver: SolverOptions,
}

impl ExperimentPlan {
    fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidPlan(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidPlan("need at least one sample".into()));
        }
        if self.model.t_end.is_nan() || self.model.t_end <= 0.0 {
            return Err(Error::InvalidPlan("t_end must be positive".into()));
        }
        match &self.resolutions {
            Resolutions::Temporal {
                n_per_axis,
                tau_ladder,
                tau_ref,
            } => {
                if *n_per_axis == 0 {
                    return Err(Error::InvalidPlan("n_per_axis must be positive".into()));
                }
                if tau_ladder.is_empty() {
                    return Err(Error::InvalidPlan("empty stepsize ladder".into()));
                }
                for &tau in tau_ladder {
                    if tau < *tau_ref - 1e-12 {
                        return Err(Error::InvalidPlan(format!(
                            "ladder stepsize {tau} finer than the reference {tau_ref}"
                        )));
                    }
                    if !divides(self.model.t_end, tau) || !divides(tau, *tau_ref) {
                        return Err(Error::InvalidPlan(format!(
                            "ladder stepsize {tau} must divide the horizon and be a multiple \
                             of the reference stepsize"
                        )));
                    }
                }
                if !divides(self.model.t_end, *tau_ref) {
                    return Err(Error::InvalidPlan(
                        "reference stepsize must divide the horizon".into(),
                    ));
                }
            }
            Resolutions::Spatial {
                tau,
                n_ladder,
                n_ref,
                ..
            } => {
                if n_ladder.is_empty() {
                    return Err(Error::InvalidPlan("empty mode-count ladder".into()));
                }
                if n_ladder.iter().any(|&n| n == 0 || n > *n_ref) {
                    return Err(Error::InvalidPlan(
                        "every ladder mode count must be positive and at most the reference"
                            .into(),
                    ));
                }
                if !divides(self.model.t_end, *tau) {
                    return Err(Error::InvalidPlan(
                        "the fixed stepsize must divide the horizon".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn divides(whole: f64, part: f64) -> bool {
    if !(part > 0.0 && whole > 0.0) {
        return false;
    }
    let ratio = whole / part;
    (ratio - ratio.round()).abs() <= 1e-9 * ratio.round().max(1.0)
}

#[derive(Clone, Copy)]
struct NormSpec {
    name: &'static str,
    beta: f64,
}

fn norm_list(record_h: bool) -> Vec<NormSpec> {
    let mut norms = vec![NormSpec {
        name: "h1",
        beta: 1.0,
    }];
    if record_h {
        norms.push(NormSpec {
            name: "h",
            beta: 0.0,
        });
    }
    norms
}

fn pair_error_norm(du: &Field, dv: &Field, beta: f64) -> f64 {
    let a = du.sobolev_norm(beta);
    let b = dv.sobolev_norm(beta - 1.0);
    (a * a + b * b).sqrt()
}

/// errors[ladder][norm][time]
type SampleErrors = Vec<Vec<Vec<f64>>>;

/// Temporal rate study: one reference trajectory per sample at the finest
/// stepsize, coarse runs on the summed increments of the same path, and
/// errors against the reference at every common mesh time.
pub fn temporal_study(plan: &ExperimentPlan, workers: usize) -> Result<RateReport> {
    plan.validate()?;
    let started = Instant::now();
    let (n_per_axis, tau_ladder, tau_ref) = match &plan.resolutions {
        Resolutions::Temporal {
            n_per_axis,
            tau_ladder,
            tau_ref,
        } => (*n_per_axis, tau_ladder.clone(), *tau_ref),
        Resolutions::Spatial { .. } => {
            return Err(Error::InvalidPlan(
                "temporal_study needs temporal resolutions".into(),
            ))
        }
    };

    let grid = SpectralGrid::new(plan.dim, n_per_axis)?;
    let noise_spec = NoiseSpec::new(&grid, plan.model.delta)?;
    let fspec = plan.model.nonlinearity.spec();
    let t_end = plan.model.t_end;
    let norms = norm_list(plan.record_h_norm);

    let per_sample = run_samples(plan.samples, workers, |s| -> Result<SampleErrors> {
        let study_err = |context: String| Error::Study { sample: s, context };
        let plan_c = CollocationPlan::new(&grid, &fspec)?;
        let (init_seed, noise_seed) = sample_seeds(plan.seed, s);
        let x0 = PairState::random_initial(&grid, init_seed);
        let path = NoisePath::sample(&noise_spec, t_end, tau_ref, noise_seed)?;

        let mut ref_states = Vec::with_capacity(path.m_ref());
        let cfg_ref = plan.solver.scheme(tau_ref);
        integrate(&x0, &path, &fspec, &plan_c, &cfg_ref, |_, _, st| {
            ref_states.push(st.clone())
        })
        .map_err(|e| study_err(format!("reference run at tau={tau_ref}: {e}")))?;

        let mut out = Vec::with_capacity(tau_ladder.len());
        for &tau in &tau_ladder {
            let stride = (tau / tau_ref).round() as usize;
            let cfg = plan.solver.scheme(tau);
            let mut series: Vec<Vec<f64>> = norms.iter().map(|_| Vec::new()).collect();
            integrate(&x0, &path, &fspec, &plan_c, &cfg, |m, _, st| {
                let r = &ref_states[m * stride - 1];
                let du = st.u() - r.u();
                let dv = st.v() - r.v();
                for (slot, norm) in series.iter_mut().zip(&norms) {
                    slot.push(pair_error_norm(&du, &dv, norm.beta));
                }
            })
            .map_err(|e| study_err(format!("ladder run at tau={tau}: {e}")))?;
            out.push(series);
        }
        Ok(out)
    })?;

    let abscissae = tau_ladder.clone();
    let series = reduce_to_series(
        &per_sample,
        &abscissae,
        &norms,
        plan.policy,
        None,
        Refinement::SmallerAbscissa,
    );

    Ok(RateReport {
        study: "temporal",
        dim: plan.dim,
        nonlinearity: plan.model.nonlinearity.name(),
        delta: plan.model.delta,
        t_end,
        samples: plan.samples,
        seed: plan.seed,
        abscissa: "tau",
        mode_truncation: "tensor-per-axis",
        n_per_axis: Some(n_per_axis),
        tau: None,
        reference_tau: Some(tau_ref),
        reference_n: None,
        spatial_comparison: None,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        series,
    })
}

/// Spatial rate study: one reference trajectory per sample on the fine
/// grid, coarse runs on nested grids driven by the mode-restricted path
/// and the projected initial state.
pub fn spatial_study(plan: &ExperimentPlan, workers: usize) -> Result<RateReport> {
    plan.validate()?;
    let started = Instant::now();
    let (tau, n_ladder, n_ref, comparison) = match &plan.resolutions {
        Resolutions::Spatial {
            tau,
            n_ladder,
            n_ref,
            comparison,
        } => (*tau, n_ladder.clone(), *n_ref, *comparison),
        Resolutions::Temporal { .. } => {
            return Err(Error::InvalidPlan(
                "spatial_study needs spatial resolutions".into(),
            ))
        }
    };

    let grid_ref = SpectralGrid::new(plan.dim, n_ref)?;
    let noise_ref = NoiseSpec::new(&grid_ref, plan.model.delta)?;
    let fspec = plan.model.nonlinearity.spec();
    let t_end = plan.model.t_end;
    let norms = norm_list(plan.record_h_norm);
    let grids: Vec<Arc<SpectralGrid>> = n_ladder
        .iter()
        .map(|&n| SpectralGrid::new(plan.dim, n))
        .collect::<std::result::Result<_, _>>()?;

    let per_sample = run_samples(plan.samples, workers, |s| -> Result<SampleErrors> {
        let study_err = |context: String| Error::Study { sample: s, context };
        let (init_seed, noise_seed) = sample_seeds(plan.seed, s);
        let x0 = PairState::random_initial(&grid_ref, init_seed);
        let path = NoisePath::sample(&noise_ref, t_end, tau, noise_seed)?;

        let plan_ref = CollocationPlan::new(&grid_ref, &fspec)?;
        let cfg = plan.solver.scheme(tau);
        let mut ref_states = Vec::with_capacity(path.m_ref());
        integrate(&x0, &path, &fspec, &plan_ref, &cfg, |_, _, st| {
            ref_states.push(st.clone())
        })
        .map_err(|e| study_err(format!("reference run at n={n_ref}: {e}")))?;

        let mut out = Vec::with_capacity(grids.len());
        for grid_n in &grids {
            let plan_n = CollocationPlan::new(grid_n, &fspec)?;
            let path_n = path.restrict_to_grid(grid_n)?;
            let x0_n = x0.project(grid_n)?;
            let mut series: Vec<Vec<f64>> = norms.iter().map(|_| Vec::new()).collect();
            let mut observer_err = None;
            integrate(&x0_n, &path_n, &fspec, &plan_n, &cfg, |m, _, st| {
                if observer_err.is_some() {
                    return;
                }
                let r = &ref_states[m - 1];
                let diff = match comparison {
                    SpatialComparison::ProjectedReference => {
                        r.project(grid_n).map(|rp| (st.u() - rp.u(), st.v() - rp.v()))
                    }
                    SpatialComparison::EmbeddedInReference => st
                        .embed(&grid_ref)
                        .map(|se| (se.u() - r.u(), se.v() - r.v())),
                };
                match diff {
                    Ok((du, dv)) => {
                        for (slot, norm) in series.iter_mut().zip(&norms) {
                            slot.push(pair_error_norm(&du, &dv, norm.beta));
                        }
                    }
                    Err(e) => observer_err = Some(e),
                }
            })
            .map_err(|e| {
                study_err(format!("ladder run at n={}: {e}", grid_n.n_per_axis()))
            })?;
            if let Some(e) = observer_err {
                return Err(e.into());
            }
            out.push(series);
        }
        Ok(out)
    })?;

    let abscissae: Vec<f64> = grids.iter().map(|g| g.max_eigenvalue()).collect();
    let series = reduce_to_series(
        &per_sample,
        &abscissae,
        &norms,
        plan.policy,
        Some(2.0),
        Refinement::LargerAbscissa,
    );

    Ok(RateReport {
        study: "spatial",
        dim: plan.dim,
        nonlinearity: plan.model.nonlinearity.name(),
        delta: plan.model.delta,
        t_end,
        samples: plan.samples,
        seed: plan.seed,
        abscissa: "lambda_n",
        mode_truncation: "tensor-per-axis",
        n_per_axis: None,
        tau: Some(tau),
        reference_tau: None,
        reference_n: Some(n_ref),
        spatial_comparison: Some(comparison.name()),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        series,
    })
}

/// Reduce per-sample error series to per-point RMS values with Monte
/// Carlo standard errors, apply the time policy, fit the log-log slope
/// and run the monotone-refinement check.
/// Which way along the abscissa a study refines: temporal ladders refine
/// toward smaller stepsizes, spatial ladders toward larger eigenvalues.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Refinement {
    SmallerAbscissa,
    LargerAbscissa,
}

fn reduce_to_series(
    per_sample: &[SampleErrors],
    abscissae: &[f64],
    norms: &[NormSpec],
    policy: ErrorTimePolicy,
    lambda_to_axis_factor: Option<f64>,
    refinement: Refinement,
) -> Vec<RateSeries> {
    let samples = per_sample.len();
    let ladder_len = abscissae.len();
    let mut out = Vec::with_capacity(norms.len());

    for (ni, norm) in norms.iter().enumerate() {
        let mut points = Vec::with_capacity(ladder_len);
        for li in 0..ladder_len {
            let times = per_sample[0][li][ni].len();
            // RMS over samples at each common time, then the time policy
            let mut best = (0usize, f64::NEG_INFINITY);
            let mut mean_sqs = Vec::with_capacity(times);
            for t in 0..times {
                let mean_sq: f64 = per_sample
                    .iter()
                    .map(|s| {
                        let e = s[li][ni][t];
                        e * e
                    })
                    .sum::<f64>()
                    / samples as f64;
                if mean_sq > best.1 {
                    best = (t, mean_sq);
                }
                mean_sqs.push(mean_sq);
            }
            let t_pick = match policy {
                ErrorTimePolicy::SupOverCommonMesh => best.0,
                ErrorTimePolicy::TerminalTime => times - 1,
            };
            let mean_sq = mean_sqs[t_pick];
            let rms = mean_sq.sqrt();
            // delta method: se(rms) = se(mean of squares) / (2 rms)
            let mc_stderr = if samples > 1 && rms > 0.0 {
                let var_sq: f64 = per_sample
                    .iter()
                    .map(|s| {
                        let e = s[li][ni][t_pick];
                        (e * e - mean_sq).powi(2)
                    })
                    .sum::<f64>()
                    / (samples - 1) as f64;
                (var_sq / samples as f64).sqrt() / (2.0 * rms)
            } else {
                0.0
            };
            points.push(RatePoint {
                abscissa: abscissae[li],
                rms_error: rms,
                mc_stderr,
            });
        }

        let mut warnings = Vec::new();
        // statistical monotone-refinement check, coarsest point first
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            let cmp = points[a]
                .abscissa
                .partial_cmp(&points[b].abscissa)
                .expect("finite abscissae");
            match refinement {
                Refinement::SmallerAbscissa => cmp.reverse(),
                Refinement::LargerAbscissa => cmp,
            }
        });
        for w in order.windows(2) {
            let (a, b) = (&points[w[0]], &points[w[1]]);
            if b.rms_error > a.rms_error + 2.0 * (a.mc_stderr + b.mc_stderr) {
                warnings.push(format!(
                    "rms error rose from {:.3e} to {:.3e} while refining (abscissa {:.6} -> \
                     {:.6}), beyond two standard errors",
                    a.rms_error, b.rms_error, a.abscissa, b.abscissa
                ));
            }
        }

        let fit = match fit_rate_from_points(&points) {
            Ok((fit, mut fit_warnings)) => {
                warnings.append(&mut fit_warnings);
                Some(fit)
            }
            Err(e) => {
                warnings.push(format!("no rate fit: {e}"));
                None
            }
        };
        let slope_per_axis_n =
            fit.and_then(|f| lambda_to_axis_factor.map(|factor| f.slope * factor));

        out.push(RateSeries {
            norm: norm.name,
            policy: policy.name(),
            points,
            fit,
            slope_per_axis_n,
            warnings,
        });
    }
    out
}

fn fit_rate_from_points(points: &[RatePoint]) -> Result<(RateFit, Vec<String>)> {
    fit_rate(
        &points
            .iter()
            .map(|p| (p.abscissa, p.rms_error))
            .collect::<Vec<_>>(),
    )
}

/// Ordinary least squares on `(log2 abscissa, log2 error)`. Zero errors
/// are excluded with a warning; fewer than three usable points is an
/// error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<(RateFit, Vec<String>)> {
    let mut warnings = Vec::new();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(a, e)| *a > 0.0 && *e > 0.0)
        .map(|&(a, e)| (a.log2(), e.log2()))
        .collect();
    if usable.len() < points.len() {
        warnings.push(format!(
            "excluded {} zero-error point(s) from the rate fit",
            points.len() - usable.len()
        ));
    }
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fitting needs at least 3 positive points, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = usable
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all abscissae coincide; no slope to fit".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = usable.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = usable
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((
        RateFit {
            slope,
            intercept,
            r_squared,
        },
        warnings,
    ))
}

/// Records `product_norm(state, beta)^power` along one trajectory; the
/// empirical stand-in for the moment bounds of the continuous problem.
#[derive(Debug, Clone)]
pub struct MomentMonitor {
    beta: f64,
    power: i32,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl MomentMonitor {
    pub fn new(beta: f64, power: i32) -> Self {
        Self {
            beta,
            power,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn record(&mut self, _m: usize, t: f64, state: &PairState) {
        self.times.push(t);
        self.values.push(state.product_norm(self.beta).powi(self.power));
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Study-level aggregation for monitors: per-time sample means, then the
/// maximum over time.
pub fn max_of_time_means(per_sample: &[Vec<f64>]) -> f64 {
    if per_sample.is_empty() || per_sample[0].is_empty() {
        return 0.0;
    }
    let times = per_sample[0].len();
    let s = per_sample.len() as f64;
    (0..times)
        .map(|t| per_sample.iter().map(|v| v[t]).sum::<f64>() / s)
        .fold(0.0, f64::max)
}
