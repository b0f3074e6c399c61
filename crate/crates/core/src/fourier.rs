//! Lens Fourier transforms between focal planes on centred grids.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::ComplexField;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

/// In-place 2-D DFT of a row-major `(ny, nx)` array, unnormalized.
pub(crate) fn fft2_inplace(data: &mut Array2<Complex64>) {
    let (ny, nx) = data.dim();
    let row_fft = plan(nx);
    {
        let buf = data
            .as_slice_mut()
            .expect("field arrays are standard layout");
        row_fft.process(buf);
    }
    let col_fft = plan(ny);
    let mut t = data.t().as_standard_layout().into_owned();
    col_fft.process(t.as_slice_mut().expect("owned transpose is contiguous"));
    data.assign(&t.t());
}

/// `(-1)^(i+j)` checkerboard, which moves the DFT origin to sample n/2 on
/// both sides of the transform for even n.
fn checkerboard(data: &mut Array2<Complex64>, scale: f64) {
    for ((j, i), a) in data.indexed_iter_mut() {
        if (i + j) % 2 == 1 {
            *a = -*a * scale;
        } else {
            *a *= scale;
        }
    }
}

/// Field in the back focal plane of a thin lens, given the field in its
/// front focal plane:
///
/// `U(u, v) = 1/(λf) ∫∫ A(x, y) exp(-i2π(xu + yv)/(λf)) dx dy`
///
/// The constant `-i` of the physical lens is dropped, so two successive
/// transforms give a pure point reflection. Output pitch is `λf/(n·pitch)`
/// per axis and power is conserved.
pub fn lens_fourier(field: ComplexField, focal_length: f64, wavelength: f64) -> Result<ComplexField> {
    if !(focal_length.is_finite() && focal_length > 0.0) {
        return Err(Error::param("focal_length", format!("{focal_length} must be > 0")));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::param("wavelength", format!("{wavelength} must be > 0")));
    }
    let grid = *field.grid();
    let out_grid = grid.fourier_dual(focal_length, wavelength);
    let mut data = field.into_data();
    checkerboard(&mut data, 1.0);
    fft2_inplace(&mut data);
    let mut scale = grid.cell_area() / (wavelength * focal_length);
    if (grid.nx / 2 + grid.ny / 2) % 2 == 1 {
        scale = -scale;
    }
    checkerboard(&mut data, scale);
    Ok(ComplexField::from_parts(out_grid, data))
}

/// [`lens_fourier`] restricted to one axis, in place on a line of samples.
/// Unitary on its own; returns the output pitch `λf/(n·pitch)`.
pub(crate) fn lens_fourier_1d(line: &mut [Complex64], pitch: f64, focal_length: f64, wavelength: f64) -> f64 {
    let n = line.len();
    for a in line.iter_mut().skip(1).step_by(2) {
        *a = -*a;
    }
    plan(n).process(line);
    let mut scale = pitch / (wavelength * focal_length).sqrt();
    if (n / 2) % 2 == 1 {
        scale = -scale;
    }
    for (i, a) in line.iter_mut().enumerate() {
        *a *= if i % 2 == 1 { -scale } else { scale };
    }
    wavelength * focal_length / (n as f64 * pitch)
}
