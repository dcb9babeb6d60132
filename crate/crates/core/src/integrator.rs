//! Modified implicit exponential Euler stepping of the Galerkin system.
//!
//! One step from `X_m = (u_m, v_m)` with modal noise increment `dW`:
//!
//! ```text
//! Y   = E(tau) (u_m, v_m + dW)          // exact group transport
//! u'  = Y_u                             // displacement is explicit
//! v'  solves  v = Y_v + tau P_N f(v)    // implicit damping
//! ```
//!
//! The implicit equation is solved by fixed-point iteration seeded with
//! `Y_v`; if the iteration stalls, a Newton branch with a matrix-free
//! conjugate-gradient inner solve takes over. Under the stepsize rule
//! `tau <= 1/(6 max(0, c1))` the Newton operator `I - tau F'(v)` is
//! uniformly positive definite, so the solve is well posed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::nonlinearity::{CollocationPlan, NonlinearitySpec};
use crate::semigroup::apply_semigroup;
use crate::spectral::{Field, PairState};

/// Stepsize and nonlinear-solver settings for one integration.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub tau: f64,
    /// Relative residual tolerance of the implicit solve.
    pub fp_tol: f64,
    /// Iteration cap shared by the fixed-point and Newton branches.
    pub fp_max_iter: usize,
    pub newton_fallback: bool,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub linear_tol: f64,
    /// Reject stepsizes above `1/(6 c1)` when the slope bound is positive.
    pub enforce_stepsize_rule: bool,
}

impl SchemeConfig {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            fp_tol: 1e-12,
            fp_max_iter: 50,
            newton_fallback: true,
            linear_tol: 1e-13,
            enforce_stepsize_rule: true,
        }
    }

    pub fn validate(&self, spec: &NonlinearitySpec) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "stepsize must be positive and finite, got {}",
                self.tau
            )));
        }
        let tol_bad = |t: f64| t.is_nan() || t <= 0.0;
        if tol_bad(self.fp_tol) || tol_bad(self.linear_tol) || self.fp_max_iter == 0 {
            return Err(Error::InvalidConfig(String::from(
                "solver tolerances must be positive and the iteration cap nonzero",
            )));
        }
        if self.enforce_stepsize_rule && spec.c1() > 0.0 {
            let cap = 1.0 / (6.0 * spec.c1());
            if self.tau > cap {
                return Err(Error::InvalidConfig(format!(
                    "stepsize {} violates the rule tau <= 1/(6 c1) = {cap} for the implicit \
                     damping solve",
                    self.tau
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverBranch {
    FixedPoint,
    Newton,
}

/// What the implicit solve did for one step.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    /// Damping evaluations spent across both branches.
    pub iterations: usize,
    /// `|v - Y_v - tau P_N f(v)|_0` of the accepted iterate.
    pub final_residual: f64,
    pub branch: SolverBranch,
    pub warnings: Vec<String>,
}

/// Advance one step. The displacement update is explicit and identical
/// whichever solver branch runs; only the velocity solve iterates.
pub fn step(
    x: &PairState,
    dw: &Field,
    spec: &NonlinearitySpec,
    plan: &CollocationPlan,
    cfg: &SchemeConfig,
) -> Result<(PairState, StepDiagnostics)> {
    cfg.validate(spec)?;
    if !x.grid().same_layout(dw.grid()) || !x.grid().same_layout(plan.grid()) {
        return Err(Error::InvalidArgument(String::from(
            "state, noise increment and plan must share one grid",
        )));
    }
    let v_in = x.v() + dw;
    let propagated = apply_semigroup(
        &PairState::from_parts_unchecked(x.u().clone(), v_in),
        cfg.tau,
    );
    let (u_next, y_v) = propagated.into_parts();
    let (v_next, diag) = solve_implicit(&y_v, cfg.tau, spec, plan, cfg)?;
    Ok((PairState::from_parts_unchecked(u_next, v_next), diag))
}

/// Solve `v = y_v + tau P_N f(v)` to the residual contract
/// `|v - y_v - tau P_N f(v)|_0 <= fp_tol (1 + |v|_0)`.
pub fn solve_implicit(
    y_v: &Field,
    tau: f64,
    spec: &NonlinearitySpec,
    plan: &CollocationPlan,
    cfg: &SchemeConfig,
) -> Result<(Field, StepDiagnostics)> {
    let mut warnings = Vec::new();
    let mut v = y_v.clone();
    let mut fv = spec.apply(&v, plan)?;
    let mut evals = 1usize;
    let mut prev_resid = f64::INFINITY;
    let mut stall_streak = 0usize;
    let mut warned_stall = false;

    while evals <= cfg.fp_max_iter {
        // candidate v' = y + tau F(v); its residual needs F(v'), which the
        // next sweep reuses, so each sweep costs one damping evaluation
        let mut v_next = y_v.clone();
        v_next.axpy(tau, &fv);
        let fv_next = spec.apply(&v_next, plan)?;
        evals += 1;
        let resid = implicit_residual(y_v, tau, &v_next, &fv_next);
        if resid <= cfg.fp_tol * (1.0 + v_next.sobolev_norm(0.0)) {
            return Ok((
                v_next,
                StepDiagnostics {
                    iterations: evals,
                    final_residual: resid,
                    branch: SolverBranch::FixedPoint,
                    warnings,
                },
            ));
        }
        // a diverging iterate overflows long before the stall counter
        // matters; restart Newton from y_v instead of the garbage iterate
        let blown = !resid.is_finite() || resid > 1e100;
        if blown {
            if cfg.newton_fallback {
                warnings.push(String::from(
                    "fixed-point iteration diverged; restarted with Newton",
                ));
                return newton_solve(y_v, tau, spec, plan, cfg, y_v.clone(), evals, warnings);
            }
            return Err(Error::NonConvergence {
                step: None,
                diagnostics: StepDiagnostics {
                    iterations: evals,
                    final_residual: resid,
                    branch: SolverBranch::FixedPoint,
                    warnings,
                },
            });
        }
        if resid > 0.9 * prev_resid {
            stall_streak += 1;
        } else {
            stall_streak = 0;
        }
        prev_resid = resid;
        v = v_next;
        fv = fv_next;
        if stall_streak >= 5 {
            if cfg.newton_fallback {
                warnings.push(String::from(
                    "fixed-point iteration stalled; switched to Newton",
                ));
                return newton_solve(y_v, tau, spec, plan, cfg, v, evals, warnings);
            }
            if !warned_stall {
                warnings.push(String::from(
                    "fixed-point iteration stalled and the Newton fallback is disabled",
                ));
                warned_stall = true;
            }
            stall_streak = 0;
        }
    }

    if cfg.newton_fallback {
        warnings.push(String::from(
            "fixed-point iteration hit the cap; switched to Newton",
        ));
        return newton_solve(y_v, tau, spec, plan, cfg, v, evals, warnings);
    }
    Err(Error::NonConvergence {
        step: None,
        diagnostics: StepDiagnostics {
            iterations: evals,
            final_residual: prev_resid,
            branch: SolverBranch::FixedPoint,
            warnings,
        },
    })
}

fn implicit_residual(y_v: &Field, tau: f64, v: &Field, fv: &Field) -> f64 {
    let mut r = y_v.clone();
    r.axpy(tau, fv);
    r.l2_distance(v)
}

#[allow(clippy::too_many_arguments)]
fn newton_solve(
    y_v: &Field,
    tau: f64,
    spec: &NonlinearitySpec,
    plan: &CollocationPlan,
    cfg: &SchemeConfig,
    start: Field,
    evals_so_far: usize,
    mut warnings: Vec<String>,
) -> Result<(Field, StepDiagnostics)> {
    let mut v = start;
    let mut evals = evals_so_far;
    let cap = evals_so_far + cfg.fp_max_iter;

    let mut fv = spec.apply(&v, plan)?;
    evals += 1;
    loop {
        // g(v) = y + tau F(v) - v
        let mut g = y_v.clone();
        g.axpy(tau, &fv);
        g.axpy(-1.0, &v);
        let rnorm = g.sobolev_norm(0.0);
        if rnorm <= cfg.fp_tol * (1.0 + v.sobolev_norm(0.0)) {
            return Ok((
                v,
                StepDiagnostics {
                    iterations: evals,
                    final_residual: rnorm,
                    branch: SolverBranch::Newton,
                    warnings,
                },
            ));
        }
        if evals >= cap {
            return Err(Error::NonConvergence {
                step: None,
                diagnostics: StepDiagnostics {
                    iterations: evals,
                    final_residual: rnorm,
                    branch: SolverBranch::Newton,
                    warnings,
                },
            });
        }

        // (I - tau F'(v)) s = g, matrix-free CG; SPD under the stepsize rule
        let apply_op = |w: &Field| -> Result<Field> {
            let jw = spec.apply_jacobian(&v, w, plan)?;
            let mut out = w.clone();
            out.axpy(-tau, &jw);
            Ok(out)
        };
        let (s, cg_evals) = conjugate_gradient(apply_op, &g, cfg.linear_tol)?;
        evals += cg_evals;

        // backtrack on the residual norm
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut v_try = v.clone();
            v_try.axpy(alpha, &s);
            let fv_try = spec.apply(&v_try, plan)?;
            evals += 1;
            let r_try = implicit_residual(y_v, tau, &v_try, &fv_try);
            if r_try < rnorm {
                v = v_try;
                fv = fv_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            warnings.push(String::from("Newton line search failed to reduce the residual"));
            return Err(Error::NonConvergence {
                step: None,
                diagnostics: StepDiagnostics {
                    iterations: evals,
                    final_residual: rnorm,
                    branch: SolverBranch::Newton,
                    warnings,
                },
            });
        }
    }
}

/// Plain conjugate gradients on a symmetric positive definite operator;
/// returns the solution and the number of operator applications.
fn conjugate_gradient(
    apply_op: impl Fn(&Field) -> Result<Field>,
    b: &Field,
    rel_tol: f64,
) -> Result<(Field, usize)> {
    let bnorm = b.sobolev_norm(0.0);
    let mut x = Field::zero(b.grid());
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.inner(&r);
    let max_iter = 2 * b.coeffs().len() + 50;
    for k in 0..max_iter {
        let ap = apply_op(&p)?;
        let denom = p.inner(&ap);
        if denom <= 0.0 {
            return Err(Error::InvalidConfig(String::from(
                "Newton linear operator lost positive definiteness; stepsize too large",
            )));
        }
        let alpha = rs / denom;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rs_new = r.inner(&r);
        if crate::math::sqrt(rs_new) <= rel_tol * bnorm {
            return Ok((x, k + 1));
        }
        let beta = rs_new / rs;
        rs = rs_new;
        let mut p_next = r.clone();
        p_next.axpy(beta, &p);
        p = p_next;
    }
    Err(Error::InvalidConfig(String::from(
        "conjugate gradients exhausted its iteration budget",
    )))
}

/// Integrate `M = t_end / tau` steps, consuming the path's increments
/// coarsened to the configured stepsize. The observer runs after every
/// accepted step with `(step index, time, state)` and must not mutate the
/// state; failures abort with the step index attached.
pub fn integrate(
    x0: &PairState,
    path: &NoisePath,
    spec: &NonlinearitySpec,
    plan: &CollocationPlan,
    cfg: &SchemeConfig,
    mut observer: impl FnMut(usize, f64, &PairState),
) -> Result<PairState> {
    cfg.validate(spec)?;
    if !x0.grid().same_layout(path.spec().grid()) {
        return Err(Error::InvalidArgument(String::from(
            "initial state and noise path must share one grid",
        )));
    }
    let increments = path.coarsen(cfg.tau)?;
    let mut state = x0.clone();
    for (m, dw) in increments.iter().enumerate() {
        let (next, _diag) = step(&state, dw, spec, plan, cfg).map_err(|e| e.at_step(m))?;
        state = next;
        observer(m + 1, (m + 1) as f64 * cfg.tau, &state);
    }
    Ok(state)
}
