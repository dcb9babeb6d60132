//! Randomized property suites tying the modules together: norm and
//! projection estimates, group-action invariants, and quadrature-oracle
//! checks of the pseudospectral damping.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use swave_core::semigroup::{apply_cosine, apply_semigroup, apply_sine};
use swave_core::{CollocationPlan, Field, NonlinearitySpec, PairState, SpectralGrid};

fn random_field(grid: &Arc<SpectralGrid>, rng: &mut ChaCha12Rng, amp: f64) -> Field {
    let coeffs = (0..grid.modes())
        .map(|_| amp * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    Field::from_coeffs(grid, coeffs).unwrap()
}

fn random_pair(grid: &Arc<SpectralGrid>, rng: &mut ChaCha12Rng) -> PairState {
    PairState::new(
        random_field(grid, rng, 1.0),
        random_field(grid, rng, 1.0),
    )
    .unwrap()
}

#[test]
fn norm_interleaving_in_the_smallest_eigenvalue() {
    let mut rng = ChaCha12Rng::seed_from_u64(100);
    for (dim, n) in [(1, 17), (1, 64), (2, 6)] {
        let grid = SpectralGrid::new(dim, n).unwrap();
        let lam_min = grid.eigenvalues()[0];
        for _ in 0..50 {
            let f = random_field(&grid, &mut rng, 2.0);
            for (alpha, beta) in [(-1.0, 0.5), (0.0, 1.0), (1.0, 2.0), (-2.0, 2.0)] {
                let lhs = f.sobolev_norm(alpha);
                let rhs = lam_min.powf((alpha - beta) / 2.0) * f.sobolev_norm(beta);
                assert!(lhs <= rhs * (1.0 + 1e-12), "alpha {alpha} beta {beta}");
            }
        }
    }
}

#[test]
fn projection_error_bounded_by_excluded_eigenvalue() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for (dim, n_fine, n_coarse) in [(1, 48, 7), (1, 64, 32), (2, 8, 3)] {
        let fine = SpectralGrid::new(dim, n_fine).unwrap();
        let coarse = SpectralGrid::new(dim, n_coarse).unwrap();
        let lam_star = fine.min_excluded_eigenvalue(n_coarse).unwrap();
        for _ in 0..40 {
            let f = random_field(&fine, &mut rng, 1.0);
            let tail = &f - &f.project(&coarse).unwrap().embed(&fine).unwrap();
            let err = tail.sobolev_norm(0.0);
            for kappa in [1.0, 2.0] {
                let bound = lam_star.powf(-kappa / 2.0) * f.sobolev_norm(kappa);
                assert!(err <= bound * (1.0 + 1e-12), "dim {dim} kappa {kappa}");
            }
        }
    }
}

#[test]
fn group_action_is_an_isometry_and_a_group() {
    let mut rng = ChaCha12Rng::seed_from_u64(102);
    for _ in 0..30 {
        let dim = if rng.random::<bool>() { 1 } else { 2 };
        let n = if dim == 1 {
            1 + rng.random_range(0..40)
        } else {
            1 + rng.random_range(0..7)
        };
        let grid = SpectralGrid::new(dim, n).unwrap();
        let x = random_pair(&grid, &mut rng);
        let s = 2.0 * rng.random::<f64>();
        let t = 2.0 * rng.random::<f64>();

        for gamma in [0.0, 1.0, 2.0] {
            let before = x.product_norm(gamma);
            let after = apply_semigroup(&x, t).product_norm(gamma);
            assert!(
                (after - before).abs() <= 1e-12 * before.max(1e-300),
                "gamma {gamma}: {before} vs {after}"
            );
        }

        let once = apply_semigroup(&x, s + t);
        let twice = apply_semigroup(&apply_semigroup(&x, s), t);
        let diff = (once.u() - twice.u()).sobolev_norm(1.0).powi(2)
            + (once.v() - twice.v()).sobolev_norm(0.0).powi(2);
        let scale = once.product_norm(1.0);
        assert!(diff.sqrt() <= 1e-12 * scale.max(1e-300));
    }
}

#[test]
fn sine_cosine_increments_obey_the_difference_bound() {
    // per mode: |sin(t w) - sin(s w)| w^(-gamma) <= 2 (t - s)^gamma for
    // gamma in [0, 1], and the cosine analogue
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    for _ in 0..2000 {
        let dim = if rng.random::<bool>() { 1 } else { 2 };
        let n = if dim == 1 {
            1 + rng.random_range(0..64)
        } else {
            1 + rng.random_range(0..12)
        };
        let grid = SpectralGrid::new(dim, n).unwrap();
        let gamma: f64 = rng.random();
        let a = 2.0 * rng.random::<f64>();
        let b = 2.0 * rng.random::<f64>();
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let bound = 2.0 * (t - s).powf(gamma);
        for &lam in grid.eigenvalues() {
            let w = lam.sqrt();
            let ds = ((t * w).sin() - (s * w).sin()).abs() * w.powf(-gamma);
            let dc = ((t * w).cos() - (s * w).cos()).abs() * w.powf(-gamma);
            assert!(ds <= bound * (1.0 + 1e-12), "sine: {ds} vs {bound}");
            assert!(dc <= bound * (1.0 + 1e-12), "cosine: {dc} vs {bound}");
        }
    }
}

#[test]
fn cosine_sine_blocks_commute_with_embedding() {
    let mut rng = ChaCha12Rng::seed_from_u64(104);
    let fine = SpectralGrid::new(2, 6).unwrap();
    let coarse = SpectralGrid::new(2, 4).unwrap();
    for _ in 0..20 {
        let f = random_field(&coarse, &mut rng, 1.0);
        let t = rng.random::<f64>();
        assert_eq!(
            apply_cosine(&f.embed(&fine).unwrap(), t),
            apply_cosine(&f, t).embed(&fine).unwrap()
        );
        assert_eq!(
            apply_sine(&f.embed(&fine).unwrap(), t),
            apply_sine(&f, t).embed(&fine).unwrap()
        );
    }
}

/// Composite-Simpson projection of `f(v)` onto the sine basis; fully
/// independent of the transform machinery.
fn simpson_projection(
    v: &Field,
    f: impl Fn(f64) -> f64,
    intervals: usize,
) -> Vec<f64> {
    assert_eq!(v.grid().dim(), 1);
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
fn cubic_damping_matches_simpson_quadrature() {
    let mut rng = ChaCha12Rng::seed_from_u64(105);
    let spec = NonlinearitySpec::cubic();
    for _ in 0..8 {
        let n = 1 + rng.random_range(0..24);
        let grid = SpectralGrid::new(1, n).unwrap();
        let plan = CollocationPlan::new(&grid, &spec).unwrap();
        let v = random_field(&grid, &mut rng, 0.8);
        let fast = spec.apply(&v, &plan).unwrap();
        let oracle = simpson_projection(&v, |y| y - y * y * y, 2048 * n.max(4));
        for (got, want) in fast.coeffs().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10, "n {n}: {got} vs {want}");
        }
    }
}

#[test]
fn cubic_damping_dim2_matches_dense_oversampled_plan() {
    // independent check of the fast path: a deliberately odd, larger node
    // count forces the dense kernel, a different code path entirely
    let mut rng = ChaCha12Rng::seed_from_u64(106);
    let spec = NonlinearitySpec::cubic();
    for n in [2usize, 5, 8] {
        let grid = SpectralGrid::new(2, n).unwrap();
        let fast_plan = CollocationPlan::new(&grid, &spec).unwrap();
        let dense_plan = CollocationPlan::with_quadrature(&grid, &spec, 3 * n + 4).unwrap();
        for _ in 0..4 {
            let v = random_field(&grid, &mut rng, 0.7);
            let a = spec.apply(&v, &fast_plan).unwrap();
            let b = spec.apply(&v, &dense_plan).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).abs() < 1e-11, "n {n}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn damping_satisfies_the_one_sided_bound() {
    // <F(v) - F(w), v - w> <= c1 |v - w|^2 in the L^2 pairing
    let mut rng = ChaCha12Rng::seed_from_u64(107);
    let spec = NonlinearitySpec::cubic();
    for (dim, n) in [(1, 20), (2, 5)] {
        let grid = SpectralGrid::new(dim, n).unwrap();
        let plan = CollocationPlan::new(&grid, &spec).unwrap();
        for _ in 0..25 {
            let v = random_field(&grid, &mut rng, 1.5);
            let w = random_field(&grid, &mut rng, 1.5);
            let dv = &v - &w;
            let df = &spec.apply(&v, &plan).unwrap() - &spec.apply(&w, &plan).unwrap();
            let lhs = df.inner(&dv);
            let rhs = spec.c1() * dv.sobolev_norm(0.0).powi(2);
            assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn jacobian_action_is_linear_and_self_adjoint() {
    let mut rng = ChaCha12Rng::seed_from_u64(108);
    let spec = NonlinearitySpec::cubic();
    let grid = SpectralGrid::new(1, 16).unwrap();
    let plan = CollocationPlan::new(&grid, &spec).unwrap();
    for _ in 0..20 {
        let v = random_field(&grid, &mut rng, 1.0);
        let w = random_field(&grid, &mut rng, 1.0);
        let z = random_field(&grid, &mut rng, 1.0);

        // linearity in the direction argument
        let mut combo = w.clone();
        combo.axpy(1.7, &z);
        let lhs = spec.apply_jacobian(&v, &combo, &plan).unwrap();
        let mut rhs = spec.apply_jacobian(&v, &w, &plan).unwrap();
        rhs.axpy(1.7, &spec.apply_jacobian(&v, &z, &plan).unwrap());
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert!((a - b).abs() < 1e-11);
        }

        // multiplication by f'(v) is self-adjoint in L^2
        let jw = spec.apply_jacobian(&v, &w, &plan).unwrap();
        let jz = spec.apply_jacobian(&v, &z, &plan).unwrap();
        assert!((jw.inner(&z) - w.inner(&jz)).abs() < 1e-11);
    }
}

#[test]
fn jacobian_consistent_with_finite_differences() {
    let mut rng = ChaCha12Rng::seed_from_u64(109);
    let spec = NonlinearitySpec::cubic();
    let grid = SpectralGrid::new(1, 12).unwrap();
    let plan = CollocationPlan::new(&grid, &spec).unwrap();
    let v = random_field(&grid, &mut rng, 1.0);
    let w = random_field(&grid, &mut rng, 1.0);
    let jw = spec.apply_jacobian(&v, &w, &plan).unwrap();

    let hs = [1e-3, 1e-4, 1e-5];
    let errs: Vec<f64> = hs
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
    // observed order of the secant error, one fitted slope per decade
    for k in 0..errs.len() - 1 {
        let order = (errs[k] / errs[k + 1]).log10();
        assert!(order >= 0.9, "order {order} between h={} and h={}", hs[k], hs[k + 1]);
    }
}
