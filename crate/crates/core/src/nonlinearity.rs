//! Pointwise damping operator `F(v)(x) = f(v(x))`, its Galerkin
//! projection, derivative action and a growth-condition checker.
//!
//! `F` is evaluated pseudospectrally: synthesize point values at sine
//! collocation nodes, apply `f` pointwise, transform back and truncate.
//! For polynomial `f` of degree `d` the plan pads the quadrature to at
//! least `d * N` nodes per axis, which makes the projected result exact
//! (no aliasing); non-polynomial `f` gets a documented approximation and
//! the plan reports `exact_projection() == false`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_complex::Complex64;

use crate::dst::{next_fast_size, SineKernel};
use crate::error::{Error, Result};
use crate::math;
use crate::spectral::{Field, SpectralGrid};

const SQRT_2: f64 = core::f64::consts::SQRT_2;

pub type ScalarFn = fn(f64) -> f64;

/// A scalar damping function together with the growth data the scheme
/// relies on: one-sided slope bound `c1` (`f'(v) <= c1`), growth exponent
/// `gamma >= 2` and the companion constants `c0`, `c2`, `c3`.
#[derive(Clone, Copy)]
pub struct NonlinearitySpec {
    f: ScalarFn,
    f_prime: ScalarFn,
    f_double_prime: ScalarFn,
    gamma: f64,
    c0: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    degree: Option<usize>,
}

impl core::fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("gamma", &self.gamma)
            .field("c0", &self.c0)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("c3", &self.c3)
            .field("degree", &self.degree)
            .finish()
    }
}

impl NonlinearitySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f: ScalarFn,
        f_prime: ScalarFn,
        f_double_prime: ScalarFn,
        gamma: f64,
        c0: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        degree: Option<usize>,
    ) -> Result<Self> {
        if gamma.is_nan() || gamma < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "growth exponent gamma must be at least 2, got {gamma}"
            )));
        }
        if !(c0 > 0.0 && c2 > 0.0 && c3 > 0.0) || !c1.is_finite() {
            return Err(Error::InvalidParameter(String::from(
                "growth constants c0, c2, c3 must be positive and c1 finite",
            )));
        }
        Ok(Self {
            f,
            f_prime,
            f_double_prime,
            gamma,
            c0,
            c1,
            c2,
            c3,
            degree,
        })
    }

    /// The cubic double-well damping `f(v) = v - v^3`.
    pub fn cubic() -> Self {
        Self {
            f: |v| v - v * v * v,
            f_prime: |v| 1.0 - 3.0 * v * v,
            f_double_prime: |v| -6.0 * v,
            gamma: 3.0,
            c0: 1.0,
            c1: 1.0,
            c2: 3.0,
            c3: 6.0,
            degree: Some(3),
        }
    }

    /// Linear damping `f(v) = v`.
    pub fn linear() -> Self {
        Self {
            f: |v| v,
            f_prime: |_| 1.0,
            f_double_prime: |_| 0.0,
            gamma: 2.0,
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            degree: Some(1),
        }
    }

    /// No damping, `f = 0`; turns the scheme into the linear wave update.
    pub fn zero() -> Self {
        Self {
            f: |_| 0.0,
            f_prime: |_| 0.0,
            f_double_prime: |_| 0.0,
            gamma: 2.0,
            c0: 1.0,
            c1: 0.0,
            c2: 1.0,
            c3: 1.0,
            degree: Some(0),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        (self.f)(v)
    }

    pub fn eval_prime(&self, v: f64) -> f64 {
        (self.f_prime)(v)
    }

    pub fn eval_double_prime(&self, v: f64) -> f64 {
        (self.f_double_prime)(v)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// One-sided slope bound; enters the stepsize rule `tau <= 1/(6 c1)`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    /// Projected damping `P_N F(v)` through the plan's collocation nodes.
    pub fn apply(&self, v: &Field, plan: &CollocationPlan) -> Result<Field> {
        plan.check_field(v)?;
        plan.check_exactness(self)?;
        let mut sc = plan.scratch.borrow_mut();
        let sc = &mut *sc;
        plan.synth_into(v, &mut sc.values_a, &mut sc.row_in, &mut sc.row_out, &mut sc.complex);
        for x in sc.values_a.iter_mut() {
            *x = (self.f)(*x);
        }
        plan.analyze_into(
            &mut sc.values_a,
            v.grid(),
            &mut sc.row_in,
            &mut sc.row_out,
            &mut sc.complex,
        )
    }

    /// Derivative action `P_N (f'(v) w)`; linear in `w`.
    pub fn apply_jacobian(&self, v: &Field, w: &Field, plan: &CollocationPlan) -> Result<Field> {
        plan.check_field(v)?;
        plan.check_field(w)?;
        plan.check_exactness(self)?;
        let mut sc = plan.scratch.borrow_mut();
        let sc = &mut *sc;
        plan.synth_into(v, &mut sc.values_a, &mut sc.row_in, &mut sc.row_out, &mut sc.complex);
        plan.synth_into(w, &mut sc.values_b, &mut sc.row_in, &mut sc.row_out, &mut sc.complex);
        for (a, b) in sc.values_a.iter_mut().zip(&sc.values_b) {
            *a = (self.f_prime)(*a) * b;
        }
        plan.analyze_into(
            &mut sc.values_a,
            v.grid(),
            &mut sc.row_in,
            &mut sc.row_out,
            &mut sc.complex,
        )
    }
}

struct Scratch {
    values_a: Vec<f64>,
    values_b: Vec<f64>,
    row_in: Vec<f64>,
    row_out: Vec<f64>,
    complex: Vec<Complex64>,
}

/// Sine-collocation workspace for one grid: node count, transform kernel
/// and reusable buffers.
///
/// A plan is cheap to build and not `Sync`; give each worker thread its
/// own plan and evaluations run in parallel without contention.
pub struct CollocationPlan {
    grid: Arc<SpectralGrid>,
    m_quad: usize,
    exact_projection: bool,
    kernel: SineKernel,
    scratch: RefCell<Scratch>,
}

impl core::fmt::Debug for CollocationPlan {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CollocationPlan")
            .field("dim", &self.grid.dim())
            .field("n_per_axis", &self.grid.n_per_axis())
            .field("m_quad", &self.m_quad)
            .field("exact_projection", &self.exact_projection)
            .finish()
    }
}

impl CollocationPlan {
    /// Size the quadrature automatically: the smallest fast transform
    /// length covering `degree * N` nodes per axis for polynomial `f`
    /// (exact projection), or `4 N` for general `f`.
    pub fn new(grid: &Arc<SpectralGrid>, spec: &NonlinearitySpec) -> Result<Self> {
        let n = grid.n_per_axis();
        let target = match spec.degree() {
            Some(d) => n.max(d * n),
            None => n.max(4 * n),
        };
        Self::with_quadrature(grid, spec, next_fast_size(target))
    }

    /// Build a plan with an explicit per-axis node count.
    pub fn with_quadrature(
        grid: &Arc<SpectralGrid>,
        spec: &NonlinearitySpec,
        m_quad: usize,
    ) -> Result<Self> {
        let n = grid.n_per_axis();
        if m_quad < n {
            return Err(Error::InvalidConfig(format!(
                "quadrature size {m_quad} below the mode count {n} per axis"
            )));
        }
        if let Some(d) = spec.degree() {
            if m_quad < d * n {
                return Err(Error::InvalidConfig(format!(
                    "quadrature size {m_quad} too small for exact projection of a degree-{d} \
                     polynomial on {n} modes per axis (needs at least {})",
                    d * n
                )));
            }
        }
        let exact_projection = spec.degree().is_some();
        let values_len = m_quad.pow(grid.dim() as u32);
        Ok(Self {
            grid: Arc::clone(grid),
            m_quad,
            exact_projection,
            kernel: SineKernel::new(m_quad),
            scratch: RefCell::new(Scratch {
                values_a: vec![0.0; values_len],
                values_b: vec![0.0; values_len],
                row_in: vec![0.0; m_quad],
                row_out: vec![0.0; m_quad],
                complex: Vec::new(),
            }),
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn m_quad(&self) -> usize {
        self.m_quad
    }

    /// Whether the plan projects the declared nonlinearity without
    /// aliasing error.
    pub fn exact_projection(&self) -> bool {
        self.exact_projection
    }

    /// Collocation node `x_i = (i+1)/(M+1)` along one axis, `i < M`.
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 / (self.m_quad + 1) as f64
    }

    /// Point values of the field at the tensor collocation nodes.
    pub fn synthesize(&self, f: &Field) -> Result<Vec<f64>> {
        self.check_field(f)?;
        let mut sc = self.scratch.borrow_mut();
        let sc = &mut *sc;
        let mut out = vec![0.0; self.m_quad.pow(self.grid.dim() as u32)];
        self.synth_into_buf(f, &mut out, &mut sc.row_in, &mut sc.row_out, &mut sc.complex);
        Ok(out)
    }

    /// Exact inverse of [`CollocationPlan::synthesize`] on the span of the
    /// first `m_quad` modes, truncated onto `target`.
    pub fn analyze(&self, values: &[f64], target: &Arc<SpectralGrid>) -> Result<Field> {
        let expect = self.m_quad.pow(self.grid.dim() as u32);
        if values.len() != expect {
            return Err(Error::InvalidArgument(format!(
                "value count {} does not match the plan's {} nodes",
                values.len(),
                expect
            )));
        }
        if target.dim() != self.grid.dim() || target.n_per_axis() > self.m_quad {
            return Err(Error::InvalidArgument(String::from(
                "analysis target must share the plan dimension and fit under m_quad",
            )));
        }
        let mut sc = self.scratch.borrow_mut();
        let sc = &mut *sc;
        sc.values_a.clear();
        sc.values_a.extend_from_slice(values);
        let mut buf = core::mem::take(&mut sc.values_a);
        let out = self.analyze_buf(&mut buf, target, &mut sc.row_in, &mut sc.row_out, &mut sc.complex);
        sc.values_a = buf;
        Ok(out)
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if !f.grid().same_layout(&self.grid) {
            return Err(Error::InvalidArgument(String::from(
                "field grid does not match the collocation plan",
            )));
        }
        Ok(())
    }

    fn check_exactness(&self, spec: &NonlinearitySpec) -> Result<()> {
        if let Some(d) = spec.degree() {
            if self.m_quad < d * self.grid.n_per_axis() {
                return Err(Error::InvalidConfig(format!(
                    "plan with m_quad {} cannot project a degree-{d} polynomial on {} modes \
                     per axis exactly",
                    self.m_quad,
                    self.grid.n_per_axis()
                )));
            }
        }
        Ok(())
    }

    fn synth_into(
        &self,
        f: &Field,
        out: &mut Vec<f64>,
        row_in: &mut [f64],
        row_out: &mut [f64],
        complex: &mut Vec<Complex64>,
    ) {
        out.clear();
        out.resize(self.m_quad.pow(self.grid.dim() as u32), 0.0);
        self.synth_into_buf(f, out, row_in, row_out, complex);
    }

    fn synth_into_buf(
        &self,
        f: &Field,
        out: &mut [f64],
        row_in: &mut [f64],
        row_out: &mut [f64],
        complex: &mut Vec<Complex64>,
    ) {
        let n = self.grid.n_per_axis();
        let m = self.m_quad;
        match self.grid.dim() {
            1 => {
                row_in[..n].copy_from_slice(f.coeffs());
                row_in[n..].fill(0.0);
                self.kernel.apply(row_in, out, complex);
                for x in out.iter_mut() {
                    *x *= SQRT_2;
                }
            }
            _ => {
                out.fill(0.0);
                // pass along the inner (second) axis; rows beyond N stay zero
                for j in 0..n {
                    row_in[..n].copy_from_slice(&f.coeffs()[j * n..(j + 1) * n]);
                    row_in[n..].fill(0.0);
                    self.kernel.apply(row_in, &mut out[j * m..(j + 1) * m], complex);
                }
                // pass along the outer (first) axis
                for i in 0..m {
                    for j in 0..m {
                        row_in[j] = out[j * m + i];
                    }
                    self.kernel.apply(row_in, row_out, complex);
                    for j in 0..m {
                        out[j * m + i] = 2.0 * row_out[j];
                    }
                }
            }
        }
    }

    fn analyze_into(
        &self,
        values: &mut [f64],
        target: &Arc<SpectralGrid>,
        row_in: &mut [f64],
        row_out: &mut [f64],
        complex: &mut Vec<Complex64>,
    ) -> Result<Field> {
        Ok(self.analyze_buf(values, target, row_in, row_out, complex))
    }

    fn analyze_buf(
        &self,
        values: &mut [f64],
        target: &Arc<SpectralGrid>,
        row_in: &mut [f64],
        row_out: &mut [f64],
        complex: &mut Vec<Complex64>,
    ) -> Field {
        let m = self.m_quad;
        let nt = target.n_per_axis();
        match self.grid.dim() {
            1 => {
                row_in.copy_from_slice(values);
                self.kernel.apply(row_in, values, complex);
                let scale = SQRT_2 / (m + 1) as f64;
                let coeffs = values[..nt].iter().map(|&c| c * scale).collect();
                Field::from_coeffs_unchecked(target, coeffs)
            }
            _ => {
                for j in 0..m {
                    row_in.copy_from_slice(&values[j * m..(j + 1) * m]);
                    self.kernel.apply(row_in, &mut values[j * m..(j + 1) * m], complex);
                }
                for i in 0..m {
                    for j in 0..m {
                        row_in[j] = values[j * m + i];
                    }
                    self.kernel.apply(row_in, row_out, complex);
                    for j in 0..m {
                        values[j * m + i] = row_out[j];
                    }
                }
                let scale = 2.0 / ((m + 1) as f64 * (m + 1) as f64);
                let mut coeffs = Vec::with_capacity(nt * nt);
                for j in 0..nt {
                    coeffs.extend(values[j * m..j * m + nt].iter().map(|&c| c * scale));
                }
                Field::from_coeffs_unchecked(target, coeffs)
            }
        }
    }
}

/// One growth inequality: declared constant, tightest constant observed on
/// the sample, and whether the declaration covers it.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub declared: f64,
    pub observed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluate the four growth inequalities on an equispaced sample of
/// `[lo, hi]` and report the tightest admissible constants against the
/// declared ones. When a polynomial degree is declared, a divided
/// difference spot-check verifies it. Violations are reported, not thrown.
pub fn check_assumptions(
    spec: &NonlinearitySpec,
    range: (f64, f64),
    samples: usize,
) -> Result<AssumptionReport> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(String::from(
            "check range must be a finite interval",
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(String::from(
            "need at least 2 sample points",
        )));
    }

    let gamma = spec.gamma();
    let mut c0_obs = f64::NEG_INFINITY;
    let mut c1_obs = f64::NEG_INFINITY;
    let mut c2_obs = f64::NEG_INFINITY;
    let mut c3_obs = f64::NEG_INFINITY;
    for i in 0..samples {
        let v = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let av = math::abs(v);
        c0_obs = c0_obs.max(v * spec.eval(v) / (1.0 + v * v));
        let fp = spec.eval_prime(v);
        c1_obs = c1_obs.max(fp);
        c2_obs = c2_obs.max(math::abs(fp) / (1.0 + math::powf(av, gamma - 1.0)));
        c3_obs = c3_obs.max(
            math::abs(spec.eval_double_prime(v)) / (1.0 + math::powf(av, gamma - 2.0)),
        );
    }

    let covers = |declared: f64, observed: f64| {
        observed <= declared + 1e-9 * declared.abs().max(1.0)
    };
    let mut checks = vec![
        AssumptionCheck {
            name: "bounded-growth",
            declared: spec.c0(),
            observed: c0_obs,
            passed: covers(spec.c0(), c0_obs),
        },
        AssumptionCheck {
            name: "one-sided-slope",
            declared: spec.c1(),
            observed: c1_obs,
            passed: covers(spec.c1(), c1_obs),
        },
        AssumptionCheck {
            name: "derivative-growth",
            declared: spec.c2(),
            observed: c2_obs,
            passed: covers(spec.c2(), c2_obs),
        },
        AssumptionCheck {
            name: "second-derivative-growth",
            declared: spec.c3(),
            observed: c3_obs,
            passed: covers(spec.c3(), c3_obs),
        },
    ];

    if let Some(d) = spec.degree() {
        // the (d+1)-th divided difference of a degree-d polynomial vanishes
        let count = d + 2;
        let h = (hi - lo) / (count - 1) as f64;
        let xs: Vec<f64> = (0..count).map(|i| lo + h * i as f64).collect();
        let mut dd: Vec<f64> = xs.iter().map(|&x| spec.eval(x)).collect();
        let scale = dd.iter().fold(1.0_f64, |acc, &y| acc.max(math::abs(y)));
        for level in 1..count {
            for i in 0..count - level {
                dd[i] = (dd[i + 1] - dd[i]) / (xs[i + level] - xs[i]);
            }
        }
        let threshold = 1e-7 * scale / math::powf(h, (d + 1) as f64);
        checks.push(AssumptionCheck {
            name: "polynomial-degree",
            declared: threshold,
            observed: math::abs(dd[0]),
            passed: math::abs(dd[0]) <= threshold,
        });
    }

    Ok(AssumptionReport { checks })
}
