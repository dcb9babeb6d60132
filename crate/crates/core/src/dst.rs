//! Type-I discrete sine transforms backing the collocation plans.
//!
//! The raw kernel maps `x_1..x_M` to `y_j = sum_i x_i sin(pi i j / (M+1))`
//! over the nodes `i/(M+1)`. It is its own inverse up to the factor
//! `(M+1)/2`, which gives quadrature-exact analysis on band-limited data.
//!
//! When `M + 1` is a power of two the kernel runs through a radix-2 FFT of
//! length `2(M+1)` on the odd extension of the input. Other lengths fall
//! back to a dense `O(M^2)` evaluation with exact integer angle reduction;
//! the dense path doubles as the correctness oracle for the fast one.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;

pub(crate) struct SineKernel {
    m: usize,
    backend: Backend,
}

enum Backend {
    Fft(Fft),
    /// `sines[k] = sin(pi k / (M+1))` for `k < 2(M+1)`; the dense loop
    /// reduces `i*j mod 2(M+1)` in integers, so angles never grow.
    Dense {
        sines: Vec<f64>,
    },
}

impl SineKernel {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let backend = if (m + 1).is_power_of_two() && m > 1 {
            Backend::Fft(Fft::new(2 * (m + 1)))
        } else {
            Self::dense_backend(m)
        };
        Self { m, backend }
    }

    /// Dense kernel regardless of size; used as the test oracle.
    #[cfg(test)]
    pub fn new_dense(m: usize) -> Self {
        assert!(m >= 1);
        Self {
            m,
            backend: Self::dense_backend(m),
        }
    }

    fn dense_backend(m: usize) -> Backend {
        let period = 2 * (m + 1);
        let sines = (0..period)
            .map(|k| math::sin(PI * k as f64 / (m + 1) as f64))
            .collect();
        Backend::Dense { sines }
    }

    /// `out[j] = sum_i input[i] sin(pi (i+1)(j+1) / (M+1))`, zero-based.
    pub fn apply(&self, input: &[f64], out: &mut [f64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(input.len(), self.m);
        debug_assert_eq!(out.len(), self.m);
        match &self.backend {
            Backend::Fft(fft) => {
                let l = fft.len();
                scratch.clear();
                scratch.resize(l, Complex64::new(0.0, 0.0));
                for (i, &x) in input.iter().enumerate() {
                    scratch[i + 1].re = x;
                    scratch[l - 1 - i].re = -x;
                }
                fft.forward(scratch);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = -0.5 * scratch[j + 1].im;
                }
            }
            Backend::Dense { sines } => {
                let period = 2 * (self.m + 1);
                for (j, o) in out.iter_mut().enumerate() {
                    let step = j + 1;
                    let mut k = 0usize;
                    let mut acc = 0.0;
                    for &x in input {
                        k += step;
                        if k >= period {
                            k -= period;
                        }
                        acc += x * sines[k];
                    }
                    *o = acc;
                }
            }
        }
    }
}

/// Iterative radix-2 complex FFT with a precomputed twiddle table.
pub(crate) struct Fft {
    len: usize,
    /// `twiddles[k] = exp(-2 pi i k / len)` for `k < len / 2`.
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two() && len >= 2);
        let twiddles = (0..len / 2)
            .map(|k| {
                let ang = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(math::cos(ang), math::sin(ang))
            })
            .collect();
        Self { len, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn forward(&self, a: &mut [Complex64]) {
        let n = self.len;
        debug_assert_eq!(a.len(), n);

        // bit-reversal permutation
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }

        let mut span = 2usize;
        while span <= n {
            let half = span / 2;
            let stride = n / span;
            let mut start = 0;
            while start < n {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let u = a[start + k];
                    let t = a[start + k + half] * w;
                    a[start + k] = u + t;
                    a[start + k + half] = u - t;
                }
                start += span;
            }
            span <<= 1;
        }
    }
}

/// Smallest `M >= min` with `M + 1` a power of two (the fast DST sizes).
pub(crate) fn next_fast_size(min: usize) -> usize {
    let mut p = 2usize;
    while p - 1 < min.max(1) {
        p <<= 1;
    }
    p - 1
}
