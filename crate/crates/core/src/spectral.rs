//! Dirichlet sine eigenbasis on the unit interval/square, coefficient
//! containers, fractional Sobolev norms and the Galerkin projection.
//!
//! The basis is fixed to `e_j(x) = sqrt(2) sin(j pi x)` on `(0,1)`,
//! orthonormal in `L^2`, tensorized for dimension two. A function is
//! represented by its coefficient vector in this basis; all operators in
//! the method are diagonal here, so grids precompute the eigenvalue table
//! once and everything else is a scan over coefficients.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::math;

/// Eigenbasis of the Dirichlet Laplacian on `(0,1)^dim`, `dim` in {1, 2}.
///
/// For `dim == 1` mode `j` has eigenvalue `(j pi)^2`, `j = 1..=N`. For
/// `dim == 2` mode `(j, k)` has eigenvalue `pi^2 (j^2 + k^2)` and the
/// coefficient layout is row-major over `(j, k)` with `j` outermost.
/// The retained mode set in dimension two is the tensor block
/// `{1..N} x {1..N}`, not the first `N^2` eigenvalues by size.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    dim: usize,
    n_per_axis: usize,
    eigenvalues: Vec<f64>,
}

impl SpectralGrid {
    /// Build the grid and precompute its eigenvalue table.
    pub fn new(dim: usize, n_per_axis: usize) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if n_per_axis == 0 {
            return Err(Error::InvalidArgument(String::from(
                "n_per_axis must be at least 1",
            )));
        }
        let n = n_per_axis;
        let eigenvalues = match dim {
            1 => (1..=n)
                .map(|j| {
                    let w = j as f64 * PI;
                    w * w
                })
                .collect(),
            _ => {
                let mut ev = Vec::with_capacity(n * n);
                for j in 1..=n {
                    for k in 1..=n {
                        ev.push(PI * PI * ((j * j + k * k) as f64));
                    }
                }
                ev
            }
        };
        Ok(Arc::new(Self {
            dim,
            n_per_axis,
            eigenvalues,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    /// Total number of retained modes, `N^dim`.
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, mode: usize) -> f64 {
        self.eigenvalues[mode]
    }

    /// Largest retained eigenvalue; the spatial-rate abscissa.
    pub fn max_eigenvalue(&self) -> f64 {
        match self.dim {
            1 => self.eigenvalues[self.modes() - 1],
            _ => self.eigenvalues[self.modes() - 1],
        }
    }

    /// Smallest eigenvalue excluded by truncating this grid to `coarse_n`
    /// modes per axis.
    pub fn min_excluded_eigenvalue(&self, coarse_n: usize) -> Option<f64> {
        if coarse_n >= self.n_per_axis {
            return None;
        }
        let next = (coarse_n + 1) as f64;
        Some(match self.dim {
            1 => (next * PI) * (next * PI),
            // cheapest excluded multi-index is (1, N_c + 1)
            _ => PI * PI * (1.0 + next * next),
        })
    }

    /// Two grids share a layout when dimension and per-axis size agree.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n_per_axis == other.n_per_axis
    }

    /// Multi-index `(j, k)` of a flat mode index; `k = 0` in dimension one.
    pub fn multi_index(&self, mode: usize) -> (usize, usize) {
        match self.dim {
            1 => (mode + 1, 0),
            _ => (mode / self.n_per_axis + 1, mode % self.n_per_axis + 1),
        }
    }
}

/// Coefficient vector of a function in the span of the retained sine modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<f64>,
}

impl Field {
    pub fn zero(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![0.0; grid.modes()],
        }
    }

    /// Wrap a coefficient vector, checking length and finiteness.
    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::InvalidArgument(format!(
                "coefficient count {} does not match grid with {} modes",
                coeffs.len(),
                grid.modes()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(String::from(
                "field coefficients must be finite",
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Arc<SpectralGrid>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.modes());
        Self {
            grid: Arc::clone(grid),
            coeffs,
        }
    }

    /// Fractional Sobolev norm `(sum_m lambda_m^alpha c_m^2)^(1/2)`.
    pub fn sobolev_norm(&self, alpha: f64) -> f64 {
        let mut acc = 0.0;
        for (c, &lam) in self.coeffs.iter().zip(self.grid.eigenvalues()) {
            acc += eig_weight(lam, alpha) * c * c;
        }
        math::sqrt(acc)
    }

    /// Diagonal scaling by `lambda_m^s`; `s = 0` is the identity.
    pub fn lambda_pow(&self, s: f64) -> Field {
        if s == 0.0 {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.eigenvalues())
            .map(|(c, &lam)| c * math::powf(lam, s))
            .collect();
        Self::from_coeffs_unchecked(&self.grid, coeffs)
    }

    /// Galerkin projection onto a coarser grid: keep the coefficients whose
    /// multi-index lies in the coarse tensor block.
    pub fn project(&self, coarse: &Arc<SpectralGrid>) -> Result<Field> {
        check_nested(coarse, &self.grid)?;
        let nc = coarse.n_per_axis();
        let nf = self.grid.n_per_axis();
        let coeffs = match self.grid.dim() {
            1 => self.coeffs[..nc].to_vec(),
            _ => {
                let mut out = Vec::with_capacity(nc * nc);
                for j in 0..nc {
                    out.extend_from_slice(&self.coeffs[j * nf..j * nf + nc]);
                }
                out
            }
        };
        Ok(Field::from_coeffs_unchecked(coarse, coeffs))
    }

    /// Zero-padding right inverse of [`Field::project`].
    pub fn embed(&self, fine: &Arc<SpectralGrid>) -> Result<Field> {
        check_nested(&self.grid, fine)?;
        let nc = self.grid.n_per_axis();
        let nf = fine.n_per_axis();
        let mut coeffs = vec![0.0; fine.modes()];
        match self.grid.dim() {
            1 => coeffs[..nc].copy_from_slice(&self.coeffs),
            _ => {
                for j in 0..nc {
                    coeffs[j * nf..j * nf + nc].copy_from_slice(&self.coeffs[j * nc..(j + 1) * nc]);
                }
            }
        }
        Ok(Field::from_coeffs_unchecked(fine, coeffs))
    }

    /// `self + scale * other`, in place. Panics on mismatched grids.
    pub fn axpy(&mut self, scale: f64, other: &Field) {
        assert!(
            self.grid.same_layout(&other.grid),
            "axpy requires matching grids"
        );
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += scale * b;
        }
    }

    /// Euclidean distance of coefficient vectors (the `L^2` distance).
    pub fn l2_distance(&self, other: &Field) -> f64 {
        debug_assert!(self.grid.same_layout(&other.grid));
        let mut acc = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            let d = a - b;
            acc += d * d;
        }
        math::sqrt(acc)
    }

    /// L^2 inner product (Parseval: plain dot product of coefficients).
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert!(self.grid.same_layout(&other.grid));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }
}

#[inline]
fn eig_weight(lam: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        lam
    } else if alpha == 2.0 {
        lam * lam
    } else if alpha == -1.0 {
        1.0 / lam
    } else if alpha == -2.0 {
        1.0 / (lam * lam)
    } else {
        math::powf(lam, alpha)
    }
}

fn check_nested(coarse: &Arc<SpectralGrid>, fine: &Arc<SpectralGrid>) -> Result<()> {
    if coarse.dim() != fine.dim() {
        return Err(Error::InvalidArgument(format!(
            "grid dimensions differ: {} vs {}",
            coarse.dim(),
            fine.dim()
        )));
    }
    if coarse.n_per_axis() > fine.n_per_axis() {
        return Err(Error::InvalidArgument(format!(
            "coarse grid ({} modes per axis) exceeds fine grid ({})",
            coarse.n_per_axis(),
            fine.n_per_axis()
        )));
    }
    Ok(())
}

impl core::ops::Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        assert!(
            self.grid.same_layout(&rhs.grid),
            "field addition requires matching grids"
        );
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Field::from_coeffs_unchecked(&self.grid, coeffs)
    }
}

impl core::ops::Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        assert!(
            self.grid.same_layout(&rhs.grid),
            "field subtraction requires matching grids"
        );
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Field::from_coeffs_unchecked(&self.grid, coeffs)
    }
}

/// The pair `X = (u, v)` of displacement and velocity on one grid; the
/// state advanced by the time stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    u: Field,
    v: Field,
}

impl PairState {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if !u.grid().same_layout(v.grid()) {
            return Err(Error::InvalidArgument(String::from(
                "displacement and velocity must share one grid",
            )));
        }
        Ok(Self { u, v })
    }

    pub fn zero(grid: &Arc<SpectralGrid>) -> Self {
        Self {
            u: Field::zero(grid),
            v: Field::zero(grid),
        }
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn v(&self) -> &Field {
        &self.v
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.u.grid()
    }

    pub fn into_parts(self) -> (Field, Field) {
        (self.u, self.v)
    }

    pub(crate) fn from_parts_unchecked(u: Field, v: Field) -> Self {
        debug_assert!(u.grid().same_layout(v.grid()));
        Self { u, v }
    }

    /// Product-space norm `(|u|_beta^2 + |v|_(beta-1)^2)^(1/2)`; `beta = 0`
    /// is the base energy pairing.
    pub fn product_norm(&self, beta: f64) -> f64 {
        let nu = self.u.sobolev_norm(beta);
        let nv = self.v.sobolev_norm(beta - 1.0);
        math::sqrt(nu * nu + nv * nv)
    }

    pub fn project(&self, coarse: &Arc<SpectralGrid>) -> Result<Self> {
        Ok(Self {
            u: self.u.project(coarse)?,
            v: self.v.project(coarse)?,
        })
    }

    pub fn embed(&self, fine: &Arc<SpectralGrid>) -> Result<Self> {
        Ok(Self {
            u: self.u.embed(fine)?,
            v: self.v.embed(fine)?,
        })
    }

    /// Initial state with displacement coefficients `b_m / lambda_m` for
    /// Bernoulli bits `b_m` drawn from the seeded generator, and zero
    /// velocity. Deterministic in `seed`.
    pub fn random_initial(grid: &Arc<SpectralGrid>, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Self::initial_from_bits(grid, |_| rng.random::<bool>())
    }

    /// Deterministic variant of [`PairState::random_initial`] with caller
    /// supplied bits, in canonical mode order.
    pub fn initial_from_bits(grid: &Arc<SpectralGrid>, mut bit: impl FnMut(usize) -> bool) -> Self {
        let coeffs = grid
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(m, &lam)| if bit(m) { 1.0 / lam } else { 0.0 })
            .collect();
        Self {
            u: Field::from_coeffs_unchecked(grid, coeffs),
            v: Field::zero(grid),
        }
    }
}
