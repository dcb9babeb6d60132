use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swave::config::{preset, preset_names, InitialKind, RunConfig};
use swave::error::{Error, Result};
use swave::harness::{self, sample_seeds, MomentMonitor};
use swave::io::{write_noise_dump, write_snapshot, NormSeriesCsv};
use swave::report::RateReport;
use swave_core::{
    check_assumptions, integrate, CollocationPlan, NoisePath, NoiseSpec, PairState, SpectralGrid,
};

#[derive(Parser)]
#[command(
    name = "swave",
    version,
    about = "Spectral Galerkin solver and convergence harness for the stochastic wave \
             equation with nonlinear damping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single path; write state snapshots and a norm series
    Simulate(SimulateArgs),
    /// Temporal mean-square convergence study (rate in the stepsize)
    RateTime(CommonArgs),
    /// Spatial mean-square convergence study (rate in the eigenvalue cut)
    RateSpace(CommonArgs),
    /// Verify the damping growth conditions and the noise decay
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration name
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Master seed override (flag beats SWAVE_SEED beats config)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count override
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads (default: available cores); outputs do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the consumed noise path as a binary dump
    #[arg(long, value_name = "PATH")]
    dump_noise: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::RateTime(args) => cmd_rate(args, StudyCmd::Time),
        Command::RateSpace(args) => cmd_rate(args, StudyCmd::Space),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "pass either --config or --preset, not both".into(),
            ))
        }
        (Some(path), None) => RunConfig::from_file(path)?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}' (available: {})",
                preset_names().join(", ")
            ))
        })?,
        (None, None) => {
            return Err(Error::Config("need --config FILE or --preset NAME".into()))
        }
    };
    if let Ok(seed) = std::env::var("SWAVE_SEED") {
        cfg.seed = seed
            .parse()
            .map_err(|_| Error::Config("SWAVE_SEED must be an unsigned integer".into()))?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = common.samples {
        cfg.samples = samples;
    }
    if let Some(workers) = common.workers {
        cfg.workers = Some(workers);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn worker_count(cfg: &RunConfig) -> usize {
    cfg.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

enum StudyCmd {
    Time,
    Space,
}

fn cmd_rate(args: CommonArgs, which: StudyCmd) -> Result<ExitCode> {
    let cfg = load_config(&args)?;
    let workers = worker_count(&cfg);
    let (report, stem) = match which {
        StudyCmd::Time => (
            harness::temporal_study(&cfg.temporal_plan()?, workers)?,
            "rate_time",
        ),
        StudyCmd::Space => (
            harness::spatial_study(&cfg.spatial_plan()?, workers)?,
            "rate_space",
        ),
    };

    fs::create_dir_all(&args.out)?;
    let json_path = args.out.join(format!("{stem}_report.json"));
    let csv_path = args.out.join(format!("{stem}_points.csv"));
    fs::write(&json_path, report.to_json_pretty()?)?;
    fs::write(&csv_path, report.points_csv())?;

    print_report_summary(&report);
    println!("{}", json_path.display());
    println!("{}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn print_report_summary(report: &RateReport) {
    for series in &report.series {
        match &series.fit {
            Some(fit) => {
                let mut line = format!(
                    "slope({}, {}, vs {}) = {:+.4}  r2 = {:.4}",
                    series.norm, series.policy, report.abscissa, fit.slope, fit.r_squared
                );
                if let Some(per_axis) = series.slope_per_axis_n {
                    line.push_str(&format!("  per-axis-N slope = {per_axis:+.4}"));
                }
                println!("{line}");
            }
            None => println!(
                "slope({}, {}): not fitted ({} points)",
                series.norm,
                series.policy,
                series.points.len()
            ),
        }
        for w in &series.warnings {
            eprintln!("warning [{}]: {w}", series.norm);
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.common)?;
    let tau = cfg.simulate_tau()?;
    let n = cfg
        .n_per_axis
        .ok_or_else(|| Error::Config("simulate needs n_per_axis".into()))?;

    let grid = SpectralGrid::new(cfg.dim, n)?;
    let fspec = cfg.nonlinearity.spec();
    let plan = CollocationPlan::new(&grid, &fspec)?;
    let noise_spec = NoiseSpec::new(&grid, cfg.delta)?;
    let (init_seed, noise_seed) = sample_seeds(cfg.seed, 0);
    let path = NoisePath::sample(&noise_spec, cfg.t_end, tau, noise_seed)?.scaled(cfg.noise_scale);
    let x0 = match cfg.initial {
        InitialKind::Random => PairState::random_initial(&grid, init_seed),
        InitialKind::Zero => PairState::zero(&grid),
    };
    let scheme = cfg.solver().scheme(tau);

    fs::create_dir_all(&args.common.out)?;
    let mut norms = NormSeriesCsv::new();
    let mut monitor = MomentMonitor::new(1.0, 2);
    norms.push(0, 0.0, &x0);
    write_snapshot(&snapshot_path(&args.common.out, 0), &x0)?;

    let stride = cfg.snapshot_stride;
    let mut io_err: Option<Error> = None;
    let final_state = integrate(&x0, &path, &fspec, &plan, &scheme, |m, t, st| {
        monitor.record(m, t, st);
        if m % stride == 0 && io_err.is_none() {
            norms.push(m, t, st);
            if let Err(e) = write_snapshot(&snapshot_path(&args.common.out, m), st) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e);
    }

    let steps = path.m_ref();
    if steps % stride != 0 {
        norms.push(steps, cfg.t_end, &final_state);
        write_snapshot(&snapshot_path(&args.common.out, steps), &final_state)?;
    }
    let norms_path = args.common.out.join("norms.csv");
    norms.write(&norms_path)?;
    if let Some(dump) = &args.dump_noise {
        write_noise_dump(dump, &path)?;
        println!("{}", dump.display());
    }

    println!(
        "integrated {steps} steps of size {tau:.6e}; final energy norm {:.6e}, peak {:.6e}",
        final_state.product_norm(1.0),
        monitor.max_value().sqrt()
    );
    println!("{}", norms_path.display());
    Ok(ExitCode::SUCCESS)
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.json"))
}

fn cmd_check(args: CommonArgs) -> Result<ExitCode> {
    let cfg = load_config(&args)?;
    let spec = cfg.nonlinearity.spec();
    let report = check_assumptions(&spec, cfg.check_range, cfg.check_samples)?;

    println!(
        "{:<28} {:>14} {:>14} {:>8}",
        "check", "declared", "observed", "result"
    );
    let mut all_passed = true;
    for c in &report.checks {
        all_passed &= c.passed;
        println!(
            "{:<28} {:>14.6e} {:>14.6e} {:>8}",
            c.name,
            c.declared,
            c.observed,
            if c.passed { "pass" } else { "FAIL" }
        );
    }

    // trace-class decay of the noise covariance
    let threshold = 1.0 + cfg.dim as f64 / 2.0;
    let grid = SpectralGrid::new(cfg.dim, cfg.n_per_axis.unwrap_or(64))?;
    match NoiseSpec::new(&grid, cfg.delta) {
        Ok(noise) => {
            println!(
                "{:<28} {:>14.6e} {:>14.6e} {:>8}",
                "noise-decay", threshold, cfg.delta, "pass"
            );
            println!(
                "{:<28} {:>14} {:>14.6e} {:>8}",
                "noise-trace-partial",
                "-",
                noise.hs_partial(),
                "info"
            );
        }
        Err(e) => {
            all_passed = false;
            println!(
                "{:<28} {:>14.6e} {:>14.6e} {:>8}",
                "noise-decay", threshold, cfg.delta, "FAIL"
            );
            eprintln!("noise-decay: {e}");
        }
    }

    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
