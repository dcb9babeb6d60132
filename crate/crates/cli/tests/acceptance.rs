//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured quantities. Monte Carlo criteria pin
//! their seeds, sample counts and tolerance windows here; nothing is
//! calibrated at runtime.

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use swave::harness::{
    sample_seeds, spatial_study, temporal_study, ErrorTimePolicy, ExperimentPlan, ModelConfig,
    NonlinearityKind, Resolutions, SolverOptions, SpatialComparison,
};
use swave::pool::run_samples;
use swave::report::RateReport;
use swave_core::semigroup::apply_semigroup;
use swave_core::{
    integrate, step, CollocationPlan, Field, NoisePath, NoiseSpec, NonlinearitySpec, PairState,
    SpectralGrid,
};

fn workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_01_temporal_rate_d1() {
    let plan = ExperimentPlan {
        dim: 1,
        model: ModelConfig {
            nonlinearity: NonlinearityKind::Cubic,
            delta: 1.505,
            t_end: 1.0,
        },
        resolutions: Resolutions::Temporal {
            n_per_axis: 100,
            tau_ladder: (4..=9).map(|j| pow2(-j)).collect(),
            tau_ref: pow2(-10),
        },
        samples: 200,
        seed: 42,
        record_h_norm: false,
        policy: ErrorTimePolicy::SupOverCommonMesh,
        solver: SolverOptions::default(),
    };
    let report = temporal_study(&plan, workers()).unwrap();
    let fit = report.series_named("h1").unwrap().fit.unwrap();
    let pass = (0.85..=1.15).contains(&fit.slope) && fit.r_squared >= 0.98;
    println!(
        "criterion 1 (temporal rate, d=1, energy norm): {} slope = {:.4} (window [0.85, 1.15]), \
         r2 = {:.4} (>= 0.98)",
        verdict(pass),
        fit.slope,
        fit.r_squared
    );
    assert!(pass);
}

#[test]
#[ignore = "slow: the pinned d=2 configuration takes tens of minutes at full sample count"]
fn criterion_02_temporal_rate_d2() {
    let plan = ExperimentPlan {
        dim: 2,
        model: ModelConfig {
            nonlinearity: NonlinearityKind::Cubic,
            delta: 2.005,
            t_end: 1.0,
        },
        resolutions: Resolutions::Temporal {
            n_per_axis: 16,
            tau_ladder: (4..=9).map(|j| pow2(-j)).collect(),
            tau_ref: pow2(-10),
        },
        samples: 100,
        seed: 42,
        record_h_norm: false,
        policy: ErrorTimePolicy::SupOverCommonMesh,
        solver: SolverOptions::default(),
    };
    let report = temporal_study(&plan, workers()).unwrap();
    let fit = report.series_named("h1").unwrap().fit.unwrap();
    let pass = (0.80..=1.15).contains(&fit.slope);
    println!(
        "criterion 2 (temporal rate, d=2, energy norm): {} slope = {:.4} (window [0.80, 1.15]), \
         r2 = {:.4}",
        verdict(pass),
        fit.slope,
        fit.r_squared
    );
    assert!(pass);
}

/// Criteria 3 and 4 read one spatial study (the stated configuration).
fn spatial_d1_report() -> &'static RateReport {
    static REPORT: OnceLock<RateReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let plan = ExperimentPlan {
            dim: 1,
            model: ModelConfig {
                nonlinearity: NonlinearityKind::Cubic,
                delta: 1.505,
                t_end: 1.0,
            },
            resolutions: Resolutions::Spatial {
                tau: pow2(-5),
                n_ladder: vec![16, 32, 64, 128, 256, 512],
                n_ref: 1024,
                comparison: SpatialComparison::EmbeddedInReference,
            },
            samples: 200,
            seed: 42,
            record_h_norm: true,
            policy: ErrorTimePolicy::TerminalTime,
            solver: SolverOptions::default(),
        };
        spatial_study(&plan, workers()).unwrap()
    })
}

#[test]
fn criterion_03_spatial_rate_d1_energy_norm() {
    let fit = spatial_d1_report()
        .series_named("h1")
        .unwrap()
        .fit
        .unwrap();
    let pass = (-0.65..=-0.40).contains(&fit.slope);
    println!(
        "criterion 3 (spatial rate, d=1, energy norm vs lambda_N): {} slope = {:.4} \
         (window [-0.65, -0.40]), r2 = {:.4}",
        verdict(pass),
        fit.slope,
        fit.r_squared
    );
    assert!(pass);
}

#[test]
fn criterion_04_spatial_rate_d1_base_norm() {
    let fit = spatial_d1_report()
        .series_named("h")
        .unwrap()
        .fit
        .unwrap();
    let pass = (-1.25..=-0.80).contains(&fit.slope);
    println!(
        "criterion 4 (spatial rate, d=1, base norm vs lambda_N): {} slope = {:.4} \
         (window [-1.25, -0.80]), r2 = {:.4}",
        verdict(pass),
        fit.slope,
        fit.r_squared
    );
    assert!(pass);
}

#[test]
fn criterion_05_linear_equation_modal_variances() {
    // f = 0, zero initial data: terminal modal variances against the
    // closed-form stochastic-convolution values
    let t_end = 1.0;
    let tau = pow2(-10);
    let samples = 2000;
    let grid = SpectralGrid::new(1, 8).unwrap();
    let noise = NoiseSpec::new(&grid, 1.505).unwrap();
    let fspec = NonlinearitySpec::zero();

    let finals: Vec<(Vec<f64>, Vec<f64>)> = run_samples(samples, workers(), |s| {
        let plan = CollocationPlan::new(&grid, &fspec)?;
        let (_, noise_seed) = sample_seeds(42, s);
        let path = NoisePath::sample(&noise, t_end, tau, noise_seed)?;
        let cfg = SolverOptions::default().scheme(tau);
        let end = integrate(
            &PairState::zero(&grid),
            &path,
            &fspec,
            &plan,
            &cfg,
            |_, _, _| {},
        )?;
        Ok((
            end.u().coeffs()[..5].to_vec(),
            end.v().coeffs()[..5].to_vec(),
        ))
    })
    .unwrap();

    let mut all_pass = true;
    for mode in 0..5 {
        let lam = grid.eigenvalue(mode);
        let w = lam.sqrt();
        let q = noise.q()[mode];
        let osc = (2.0 * w * t_end).sin() / (4.0 * w);
        let want_u = q * (t_end / 2.0 - osc) / lam;
        let want_v = q * (t_end / 2.0 + osc);

        let var = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> f64| {
            let mean: f64 = finals.iter().map(|f| pick(f)).sum::<f64>() / samples as f64;
            finals
                .iter()
                .map(|f| (pick(f) - mean).powi(2))
                .sum::<f64>()
                / (samples - 1) as f64
        };
        let got_u = var(&|f| f.0[mode]);
        let got_v = var(&|f| f.1[mode]);
        let rel = (2.0 / (samples - 1) as f64).sqrt();
        let ok_u = (got_u - want_u).abs() <= 3.0 * want_u * rel;
        let ok_v = (got_v - want_v).abs() <= 3.0 * want_v * rel;
        if !(ok_u && ok_v) {
            all_pass = false;
        }
        println!(
            "  mode {}: var(u) {:.4e} vs {:.4e} [{}], var(v) {:.4e} vs {:.4e} [{}]",
            mode + 1,
            got_u,
            want_u,
            verdict(ok_u),
            got_v,
            want_v,
            verdict(ok_v)
        );
    }
    println!(
        "criterion 5 (linear-equation modal variances, 3 standard errors): {}",
        verdict(all_pass)
    );
    assert!(all_pass);
}

#[test]
fn criterion_06_group_isometry_and_composition() {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let mut worst_iso = 0.0f64;
    let mut worst_comp = 0.0f64;
    for _ in 0..100 {
        let dim = if rng.random::<bool>() { 1 } else { 2 };
        let n = if dim == 1 {
            1 + rng.random_range(0..60)
        } else {
            1 + rng.random_range(0..10)
        };
        let grid = SpectralGrid::new(dim, n).unwrap();
        let coeffs = |rng: &mut ChaCha12Rng| -> Vec<f64> {
            (0..grid.modes()).map(|_| rng.random::<f64>() - 0.5).collect()
        };
        let x = PairState::new(
            Field::from_coeffs(&grid, coeffs(&mut rng)).unwrap(),
            Field::from_coeffs(&grid, coeffs(&mut rng)).unwrap(),
        )
        .unwrap();
        let s = 2.0 * rng.random::<f64>();
        let t = 2.0 * rng.random::<f64>();

        for gamma in [0.0, 1.0, 2.0] {
            let before = x.product_norm(gamma);
            let after = apply_semigroup(&x, t).product_norm(gamma);
            worst_iso = worst_iso.max((after - before).abs() / before);
        }
        let once = apply_semigroup(&x, s + t);
        let twice = apply_semigroup(&apply_semigroup(&x, s), t);
        let du = once.u() - twice.u();
        let dv = once.v() - twice.v();
        let diff = (du.sobolev_norm(1.0).powi(2) + dv.sobolev_norm(0.0).powi(2)).sqrt();
        worst_comp = worst_comp.max(diff / once.product_norm(1.0));
    }
    let pass = worst_iso <= 1e-12 && worst_comp <= 1e-12;
    println!(
        "criterion 6 (group isometry and composition on 100 random states): {} \
         worst isometry drift {:.2e}, worst composition drift {:.2e} (<= 1e-12)",
        verdict(pass),
        worst_iso,
        worst_comp
    );
    assert!(pass);
}

#[test]
fn criterion_07_sine_cosine_difference_bounds() {
    // per-mode |sin(t w) - sin(s w)| w^(-gamma) <= 2 (t-s)^gamma and the
    // cosine analogue, for 10^4 random (s, t, gamma, grid) tuples
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    let mut checked = 0usize;
    let mut pass = true;
    for _ in 0..10_000 {
        let dim = if rng.random::<bool>() { 1 } else { 2 };
        let n = if dim == 1 {
            1 + rng.random_range(0..128)
        } else {
            1 + rng.random_range(0..16)
        };
        let grid = SpectralGrid::new(dim, n).unwrap();
        let gamma: f64 = rng.random();
        let a = 2.0 * rng.random::<f64>();
        let b = 2.0 * rng.random::<f64>();
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let bound = 2.0 * f64::powf(t - s, gamma) * (1.0 + 1e-12);
        for &lam in grid.eigenvalues() {
            let w = lam.sqrt();
            let wg = w.powf(-gamma);
            if ((t * w).sin() - (s * w).sin()).abs() * wg > bound
                || ((t * w).cos() - (s * w).cos()).abs() * wg > bound
            {
                pass = false;
            }
            checked += 1;
        }
    }
    println!(
        "criterion 7 (sine/cosine increment bounds, 10^4 tuples, {checked} mode checks): {}",
        verdict(pass)
    );
    assert!(pass);
}

/// Composite-Simpson projection of `f(v)`, independent of the transforms.
fn simpson_projection(v: &Field, f: impl Fn(f64) -> f64, intervals: usize) -> Vec<f64> {
    let n = v.grid().n_per_axis();
    let h = 1.0 / intervals as f64;
    let fx: Vec<f64> = (0..=intervals)
        .map(|i| {
            let x = i as f64 * h;
            let vx: f64 = v
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c * SQRT_2 * ((k + 1) as f64 * PI * x).sin())
                .sum();
            f(vx)
        })
        .collect();
    (1..=n)
        .map(|j| {
            let g = |i: usize| fx[i] * SQRT_2 * (j as f64 * PI * i as f64 * h).sin();
            let mut acc = g(0) + g(intervals);
            let mut i = 1;
            while i < intervals {
                acc += 4.0 * g(i);
                i += 2;
            }
            let mut i = 2;
            while i < intervals {
                acc += 2.0 * g(i);
                i += 2;
            }
            acc * h / 3.0
        })
        .collect()
}

#[test]
fn criterion_08_damping_exactness_and_jacobian() {
    let spec = NonlinearitySpec::cubic();
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    let mut worst = 0.0f64;

    // 60 random fields in dimension one against composite Simpson
    for _ in 0..60 {
        let n = 1 + rng.random_range(0..64);
        let grid = SpectralGrid::new(1, n).unwrap();
        let plan = CollocationPlan::new(&grid, &spec).unwrap();
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let v = Field::from_coeffs(&grid, coeffs).unwrap();
        let fast = spec.apply(&v, &plan).unwrap();
        let oracle = simpson_projection(&v, |y| y - y * y * y, 2048 * n.max(4));
        for (got, want) in fast.coeffs().iter().zip(&oracle) {
            worst = worst.max((got - want).abs());
        }
    }

    // 40 random fields in dimension two against a dense oversampled plan
    for _ in 0..40 {
        let n = 1 + rng.random_range(0..16);
        let grid = SpectralGrid::new(2, n).unwrap();
        let fast_plan = CollocationPlan::new(&grid, &spec).unwrap();
        let dense_plan = CollocationPlan::with_quadrature(&grid, &spec, 3 * n + 4).unwrap();
        let coeffs: Vec<f64> = (0..grid.modes()).map(|_| rng.random::<f64>() - 0.5).collect();
        let v = Field::from_coeffs(&grid, coeffs).unwrap();
        let a = spec.apply(&v, &fast_plan).unwrap();
        let b = spec.apply(&v, &dense_plan).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            worst = worst.max((x - y).abs());
        }
    }
    let exact_pass = worst < 1e-10;

    // derivative action against finite differences, observed order >= 0.9
    let grid = SpectralGrid::new(1, 24).unwrap();
    let plan = CollocationPlan::new(&grid, &spec).unwrap();
    let coeffs = |rng: &mut ChaCha12Rng| -> Vec<f64> {
        (0..24).map(|_| rng.random::<f64>() - 0.5).collect()
    };
    let v = Field::from_coeffs(&grid, coeffs(&mut rng)).unwrap();
    let w = Field::from_coeffs(&grid, coeffs(&mut rng)).unwrap();
    let jw = spec.apply_jacobian(&v, &w, &plan).unwrap();
    let errs: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&h| {
            let mut vp = v.clone();
            vp.axpy(h, &w);
            let mut diff = spec.apply(&vp, &plan).unwrap();
            diff.axpy(-1.0, &spec.apply(&v, &plan).unwrap());
            diff.axpy(-h, &jw);
            diff.sobolev_norm(0.0) / h
        })
        .collect();
    let mut min_order = f64::INFINITY;
    for k in 0..errs.len() - 1 {
        min_order = min_order.min((errs[k] / errs[k + 1]).log10());
    }
    let jac_pass = min_order >= 0.9;

    let pass = exact_pass && jac_pass;
    println!(
        "criterion 8 (cubic damping exactness and derivative action): {} worst coefficient \
         deviation {:.2e} (< 1e-10), observed finite-difference order {:.3} (>= 0.9)",
        verdict(pass),
        worst,
        min_order
    );
    assert!(pass);
}

#[test]
fn criterion_09_step_residual_and_stepsize_rule() {
    let grid = SpectralGrid::new(1, 32).unwrap();
    let spec = NonlinearitySpec::cubic();
    let plan = CollocationPlan::new(&grid, &spec).unwrap();
    let noise = NoiseSpec::new(&grid, 1.505).unwrap();
    let tau = 1.0 / 64.0;
    let cfg = SolverOptions::default().scheme(tau);
    let path = NoisePath::sample(&noise, 1.0, tau, 909).unwrap();

    let mut state = PairState::random_initial(&grid, 910);
    let mut worst_ratio = 0.0f64;
    for dw in path.coarsen(tau).unwrap() {
        let (next, _) = step(&state, &dw, &spec, &plan, &cfg).unwrap();
        // recompute the full update residual independently of the solver
        let transported = apply_semigroup(
            &PairState::new(state.u().clone(), state.v() + &dw).unwrap(),
            tau,
        );
        let fv = spec.apply(next.v(), &plan).unwrap();
        let mut res_v = next.v().clone();
        res_v.axpy(-1.0, transported.v());
        res_v.axpy(-tau, &fv);
        let mut res_u = next.u().clone();
        res_u.axpy(-1.0, transported.u());
        let res = (res_u.sobolev_norm(1.0).powi(2) + res_v.sobolev_norm(0.0).powi(2)).sqrt();
        let bound = 10.0 * cfg.fp_tol * (1.0 + next.product_norm(1.0));
        worst_ratio = worst_ratio.max(res / bound);
        state = next;
    }
    let residual_pass = worst_ratio <= 1.0;

    // tau above 1/(6 c1) with the cubic damping must be rejected
    let refused = step(
        &state,
        &Field::zero(&grid),
        &spec,
        &plan,
        &SolverOptions::default().scheme(0.2),
    );
    let rule_pass = matches!(refused, Err(swave_core::Error::InvalidConfig(_)));

    let pass = residual_pass && rule_pass;
    println!(
        "criterion 9 (scheme residual contract and stepsize rule): {} worst residual/bound \
         ratio {:.3e} (<= 1), oversized stepsize rejected: {}",
        verdict(pass),
        worst_ratio,
        rule_pass
    );
    assert!(pass);
}

#[test]
fn criterion_10_byte_determinism_across_workers() {
    let dir = std::env::temp_dir().join(format!("swave-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("study.json");
    std::fs::write(
        &config_path,
        r#"{"dim":1,"nonlinearity":"cubic","delta":1.505,"t_end":1.0,"samples":6,
           "n_per_axis":16,"tau_ladder_log2":[-3,-4,-5],"tau_ref_log2":-7,"seed":1010}"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for workers in [1usize, 4, 8] {
        let out_dir = dir.join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_swave"))
            .args([
                "rate-time",
                "--config",
                config_path.to_str().unwrap(),
                "--workers",
                &workers.to_string(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "workers={workers}: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(out_dir.join("rate_time_points.csv")).unwrap());
    }
    let pass = outputs[0] == outputs[1] && outputs[0] == outputs[2];
    println!(
        "criterion 10 (byte-identical points CSV across 1/4/8 workers): {}",
        verdict(pass)
    );
    std::fs::remove_dir_all(&dir).ok();
    assert!(pass);
}
