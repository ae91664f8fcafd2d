//! 2-D FFT with a fixed normalization and centering contract.
//!
//! Every spectrum in this crate is stored DC-centered: the zero-frequency
//! bin sits at index `(rows / 2, cols / 2)`. The forward transform is
//! unnormalized and the inverse carries the full `1/(rows * cols)` factor,
//! so `inverse_spectrum(spectrum(x)) == x` and Parseval reads
//! `sum |x|^2 == sum |X|^2 / (rows * cols)`.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Planned 2-D FFT for one array shape.
pub struct Fft2 {
    rows: usize,
    cols: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            fwd_row: planner.plan_fft_forward(cols),
            fwd_col: planner.plan_fft_forward(rows),
            inv_row: planner.plan_fft_inverse(cols),
            inv_col: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Unnormalized forward transform in natural (unshifted) index order.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.transform(data, true);
    }

    /// Inverse transform with the `1/(rows*cols)` normalization, natural order.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.transform(data, false);
        let norm = 1.0 / (self.rows * self.cols) as f64;
        data.mapv_inplace(|v| v * norm);
    }

    /// DC-centered spectrum of `field`.
    pub fn spectrum(&self, field: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = field.clone();
        self.forward(&mut out);
        fftshift(&out)
    }

    /// Field from a DC-centered spectrum.
    pub fn inverse_spectrum(&self, spectrum: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = ifftshift(spectrum);
        self.inverse(&mut out);
        out
    }

    fn transform(&self, data: &mut Array2<Complex64>, forward: bool) {
        assert_eq!(data.dim(), (self.rows, self.cols), "Fft2 shape mismatch");
        let (row_fft, col_fft) = if forward {
            (&self.fwd_row, &self.fwd_col)
        } else {
            (&self.inv_row, &self.inv_col)
        };
        for mut row in data.rows_mut() {
            let slice = row.as_slice_mut().expect("row-major layout");
            row_fft.process(slice);
        }
        let mut scratch = vec![Complex64::default(); self.rows];
        for j in 0..self.cols {
            for i in 0..self.rows {
                scratch[i] = data[[i, j]];
            }
            col_fft.process(&mut scratch);
            for i in 0..self.rows {
                data[[i, j]] = scratch[i];
            }
        }
    }
}

/// Move DC from index 0 to the grid center `floor(n/2)` on both axes.
pub fn fftshift(data: &Array2<Complex64>) -> Array2<Complex64> {
    roll(data, data.nrows() / 2, data.ncols() / 2)
}

/// Inverse of [`fftshift`] (identical for even sizes).
pub fn ifftshift(data: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = data.dim();
    roll(data, r - r / 2, c - c / 2)
}

/// Circular shift by `(dr, dc)` toward increasing indices.
pub fn roll(data: &Array2<Complex64>, dr: usize, dc: usize) -> Array2<Complex64> {
    let (rows, cols) = data.dim();
    let mut out = Array2::default((rows, cols));
    for i in 0..rows {
        let ti = (i + dr) % rows;
        for j in 0..cols {
            out[[ti, (j + dc) % cols]] = data[[i, j]];
        }
    }
    out
}
