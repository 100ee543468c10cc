//! Isotropic periodic grids on tori of side 2π.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("points per axis must be even and at least 8, got {0}")]
    Points(usize),
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

/// Grid descriptor for `T^d` with `N` points per axis.
///
/// Axis 0 is the shear direction `x`; axes 1 and 2 are `y` and `z`. Values are
/// stored row-major with `x` fastest. Cloning is cheap: FFT plans are shared
/// and immutable once the grid is built.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n_points", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Eq for TorusGrid {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

impl TorusGrid {
    pub fn new(dim: usize, n_points: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(GridError::Points(n_points));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            dim,
            n: n_points,
            plans: Arc::new(Plans {
                forward,
                inverse,
                scratch_len,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Total number of grid points, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|T^d| = (2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Signed wavenumber of storage index `j`, in `{-N/2+1, ..., N/2}`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, k: i64) -> bool {
        k == (self.n / 2) as i64
    }

    /// Per-axis storage indices of flat index `idx` (unused axes are 0).
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rest = idx;
        for slot in out.iter_mut().take(self.dim) {
            *slot = rest % self.n;
            rest /= self.n;
        }
        out
    }

    #[inline]
    pub fn ravel(&self, ijk: [usize; 3]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim).rev() {
            idx = idx * self.n + ijk[axis];
        }
        idx
    }

    /// Physical coordinates of flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let ijk = self.unravel(idx);
        [ijk[0] as f64 * h, ijk[1] as f64 * h, ijk[2] as f64 * h]
    }

    /// Signed wave vector of flat spectral index `idx` (unused axes are 0).
    #[inline]
    pub fn wave_vector(&self, idx: usize) -> [i64; 3] {
        let ijk = self.unravel(idx);
        let mut k = [0; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(ijk[axis]);
        }
        k
    }

    /// Coordinates of one axis, `j·2π/N` for `j < N`.
    pub fn axis_coordinates(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| j as f64 * h).collect()
    }

    /// Unnormalised multi-dimensional DFT over every axis, in place.
    pub(crate) fn transform(&self, data: &mut [Complex64], direction: Direction) {
        debug_assert_eq!(data.len(), self.len());
        let fft = match direction {
            Direction::Forward => &self.plans.forward,
            Direction::Inverse => &self.plans.inverse,
        };
        let n = self.n;
        WORK.with(|work| {
            let mut work = work.borrow_mut();
            let (scratch, batch) = &mut *work;
            scratch.resize(self.plans.scratch_len, Complex64::default());
            // axis 0 is contiguous
            fft.process_with_scratch(data, scratch);
            if self.dim == 1 {
                return;
            }
            // other axes: gather lines into a contiguous batch, transform, scatter
            batch.resize(data.len(), Complex64::default());
            for axis in 1..self.dim {
                let stride = n.pow(axis as u32);
                let outer = self.len() / (stride * n);
                for o in 0..outer {
                    for j in 0..n {
                        let src = o * stride * n + j * stride;
                        for inner in 0..stride {
                            batch[(o * stride + inner) * n + j] = data[src + inner];
                        }
                    }
                }
                fft.process_with_scratch(&mut batch[..data.len()], scratch);
                for o in 0..outer {
                    for j in 0..n {
                        let dst = o * stride * n + j * stride;
                        for inner in 0..stride {
                            data[dst + inner] = batch[(o * stride + inner) * n + j];
                        }
                    }
                }
            }
        });
    }
}

thread_local! {
    /// Per-thread FFT scratch and transpose buffers.
    static WORK: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}
