//! Sampled complex fields, phase-only screens and the elementary operations
//! that act on them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};
use crate::profile::LineProfile;

/// Intensity below this fraction of the field's peak counts as dark when
/// checking screen sampling.
const ILLUMINATION_FLOOR: f64 = 1e-6;

/// Complex amplitude sampled on a [`GridSpec`]. Intensity is `|amplitude|²`.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: GridSpec,
    data: Array2<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, data: Array2<Complex64>) -> Result<Self> {
        if data.dim() != (grid.ny, grid.nx) {
            return Err(Error::InvalidGrid(format!(
                "array shape {:?} does not match grid {}",
                data.dim(),
                grid
            )));
        }
        Ok(ComplexField { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField {
            grid,
            data: Array2::zeros((grid.ny, grid.nx)),
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let data = Array2::from_shape_fn((grid.ny, grid.nx), |(j, i)| f(grid.x(i), grid.y(j)));
        ComplexField { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub(crate) fn from_parts(grid: GridSpec, data: Array2<Complex64>) -> Self {
        debug_assert_eq!(data.dim(), (grid.ny, grid.nx));
        ComplexField { grid, data }
    }

    /// Σ|a|²·pitch_x·pitch_y.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.data.mapv(|a| a.norm_sqr())
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.data.mapv_inplace(|a| a * factor);
        self
    }

    /// Rescaled to unit power.
    pub fn normalized(self) -> Result<Self> {
        let p = self.power();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::param("field", format!("cannot normalize power {p}")));
        }
        Ok(self.scaled(Complex64::new(1.0 / p.sqrt(), 0.0)))
    }
}

#[derive(Debug, Clone)]
enum Profile {
    Map(Array2<f64>),
    Along { axis: Axis, values: Vec<f64> },
}

/// Real phase map applied as multiplication by `exp(i·phase)`.
///
/// Screens whose values are stored modulo 2π (`wrapped`) are exempt from the
/// sampling check, since their raw jumps are not phase gradients.
#[derive(Debug, Clone)]
pub struct PhaseScreen {
    grid: GridSpec,
    profile: Profile,
    wrapped: bool,
    singular: Vec<(usize, usize)>,
    mask: OnceLock<Array2<Complex64>>,
}

impl PhaseScreen {
    pub fn from_map(grid: GridSpec, phase: Array2<f64>) -> Result<Self> {
        if phase.dim() != (grid.ny, grid.nx) {
            return Err(Error::InvalidGrid(format!(
                "phase shape {:?} does not match grid {}",
                phase.dim(),
                grid
            )));
        }
        Ok(PhaseScreen {
            grid,
            profile: Profile::Map(phase),
            wrapped: false,
            singular: Vec::new(),
            mask: OnceLock::new(),
        })
    }

    /// A screen that varies along `axis` only.
    pub fn along_axis(grid: GridSpec, axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len(axis) {
            return Err(Error::InvalidGrid(format!(
                "{} phase samples for an axis of {}",
                values.len(),
                grid.len(axis)
            )));
        }
        Ok(PhaseScreen {
            grid,
            profile: Profile::Along { axis, values },
            wrapped: false,
            singular: Vec::new(),
            mask: OnceLock::new(),
        })
    }

    pub fn wrapped(mut self, wrapped: bool) -> Self {
        self.wrapped = wrapped;
        self
    }

    pub(crate) fn with_singular(mut self, samples: Vec<(usize, usize)>) -> Self {
        self.singular = samples;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_wrapped(&self) -> bool {
        self.wrapped
    }

    /// Samples `(ix, iy)` where the defining formula is singular and a fixed
    /// value was substituted.
    pub fn singular_samples(&self) -> &[(usize, usize)] {
        &self.singular
    }

    /// The varying axis and its samples, for screens built with
    /// [`PhaseScreen::along_axis`].
    pub fn axis_profile(&self) -> Option<(Axis, &[f64])> {
        match &self.profile {
            Profile::Along { axis, values } => Some((*axis, values)),
            Profile::Map(_) => None,
        }
    }

    #[inline]
    pub fn phase_at(&self, ix: usize, iy: usize) -> f64 {
        match &self.profile {
            Profile::Map(m) => m[[iy, ix]],
            Profile::Along { axis: Axis::X, values } => values[ix],
            Profile::Along { axis: Axis::Y, values } => values[iy],
        }
    }

    pub fn to_array(&self) -> Array2<f64> {
        match &self.profile {
            Profile::Map(m) => m.clone(),
            Profile::Along { .. } => {
                Array2::from_shape_fn((self.grid.ny, self.grid.nx), |(j, i)| self.phase_at(i, j))
            }
        }
    }

    /// Same screen with every phase multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> PhaseScreen {
        let profile = match &self.profile {
            Profile::Map(m) => Profile::Map(m.mapv(|p| p * factor)),
            Profile::Along { axis, values } => Profile::Along {
                axis: *axis,
                values: values.iter().map(|p| p * factor).collect(),
            },
        };
        PhaseScreen {
            grid: self.grid,
            profile,
            wrapped: self.wrapped,
            singular: self.singular.clone(),
            mask: OnceLock::new(),
        }
    }

    /// Largest phase step between neighbouring samples anywhere on the screen.
    pub fn max_increment(&self) -> f64 {
        self.max_increment_where(|_, _| true).0
    }

    fn step(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if self.wrapped {
            (d - 2.0 * PI * (d / (2.0 * PI)).round()).abs()
        } else {
            d.abs()
        }
    }

    fn max_increment_where(&self, lit: impl Fn(usize, usize) -> bool) -> (f64, (usize, usize)) {
        let mut best = (0.0, (0, 0));
        match &self.profile {
            Profile::Along { axis, values } => {
                for (k, w) in values.windows(2).enumerate() {
                    let d = self.step(w[0], w[1]);
                    if d > best.0 {
                        best = match axis {
                            Axis::X => (d, (k, 0)),
                            Axis::Y => (d, (0, k)),
                        };
                    }
                }
            }
            Profile::Map(m) => {
                let (ny, nx) = m.dim();
                for j in 0..ny {
                    for i in 0..nx {
                        let here = m[[j, i]];
                        let lit_here = lit(i, j);
                        if i + 1 < nx && (lit_here || lit(i + 1, j)) {
                            let d = self.step(here, m[[j, i + 1]]);
                            if d > best.0 && !self.is_singular(i, j) && !self.is_singular(i + 1, j) {
                                best = (d, (i, j));
                            }
                        }
                        if j + 1 < ny && (lit_here || lit(i, j + 1)) {
                            let d = self.step(here, m[[j + 1, i]]);
                            if d > best.0 && !self.is_singular(i, j) && !self.is_singular(i, j + 1) {
                                best = (d, (i, j));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn is_singular(&self, i: usize, j: usize) -> bool {
        self.singular.iter().any(|&s| s == (i, j))
    }

    /// Reports the largest phase step over the illuminated part of `field`
    /// when it exceeds π.
    pub fn sampling_warning(&self, field: &ComplexField) -> Option<SamplingWarning> {
        let intensity = field.intensity();
        let peak = intensity.iter().cloned().fold(0.0, f64::max);
        let floor = peak * ILLUMINATION_FLOOR;
        let (max_step, at) = self.max_increment_where(|i, j| intensity[[j, i]] > floor);
        (max_step > PI).then_some(SamplingWarning {
            max_increment: max_step,
            at,
        })
    }

    fn mask(&self) -> &Array2<Complex64> {
        self.mask.get_or_init(|| match &self.profile {
            Profile::Map(m) => m.mapv(|p| Complex64::from_polar(1.0, p)),
            Profile::Along { .. } => unreachable!("axis screens are applied row-wise"),
        })
    }
}

/// A phase screen steps by more than π between neighbouring illuminated
/// samples, so it aliases on this grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWarning {
    pub max_increment: f64,
    /// `(ix, iy)` of the offending step.
    pub at: (usize, usize),
}

impl fmt::Display for SamplingWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase screen under-sampled: step of {:.3} rad (> π) at sample {:?}",
            self.max_increment, self.at
        )
    }
}

/// Multiplies `field` by `exp(i·phase)`; sampling problems are logged.
pub fn apply_phase_screen(field: ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    let (out, warning) = apply_phase_screen_checked(field, screen)?;
    if let Some(w) = warning {
        log::warn!("{w}");
    }
    Ok(out)
}

/// Like [`apply_phase_screen`] but hands the sampling check back to the caller.
pub fn apply_phase_screen_checked(
    mut field: ComplexField,
    screen: &PhaseScreen,
) -> Result<(ComplexField, Option<SamplingWarning>)> {
    field.grid.ensure_matches(&screen.grid, "apply_phase_screen")?;
    let warning = if screen.wrapped {
        None
    } else {
        screen.sampling_warning(&field)
    };
    match &screen.profile {
        Profile::Map(_) => {
            Zip::from(&mut field.data)
                .and(screen.mask())
                .for_each(|a, &m| *a *= m);
        }
        Profile::Along { axis, values } => {
            let phasors: Vec<Complex64> = values.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
            match axis {
                Axis::X => {
                    for mut row in field.data.rows_mut() {
                        for (a, m) in row.iter_mut().zip(&phasors) {
                            *a *= m;
                        }
                    }
                }
                Axis::Y => {
                    for (mut row, m) in field.data.rows_mut().into_iter().zip(&phasors) {
                        row.mapv_inplace(|a| a * m);
                    }
                }
            }
        }
    }
    Ok((field, warning))
}

/// Ideal coherent imaging with lateral magnification `magnification`.
///
/// Coordinates scale by |m| and amplitudes by 1/|m|, so power is unchanged.
/// A negative magnification also inverts the image through the origin.
pub fn image(field: ComplexField, magnification: f64) -> Result<ComplexField> {
    if magnification == 0.0 || !magnification.is_finite() {
        return Err(Error::param("magnification", "must be finite and non-zero"));
    }
    let m = magnification.abs();
    let grid = GridSpec::new(
        field.grid.nx,
        field.grid.ny,
        field.grid.pitch_x * m,
        field.grid.pitch_y * m,
    )?;
    let field = if magnification < 0.0 {
        rotate_180(field)
    } else {
        field
    };
    let mut data = field.data;
    if m != 1.0 {
        data.mapv_inplace(|a| a / m);
    }
    Ok(ComplexField { grid, data })
}

/// Point reflection `a(x, y) -> a(-x, -y)` on the centred grid.
pub fn rotate_180(field: ComplexField) -> ComplexField {
    let (ny, nx) = field.data.dim();
    let src = &field.data;
    let data = Array2::from_shape_fn((ny, nx), |(j, i)| src[[(ny - j) % ny, (nx - i) % nx]]);
    ComplexField {
        grid: field.grid,
        data,
    }
}

/// ⟨A|B⟩ = Σ conj(A)·B·pitch_x·pitch_y, accumulated in double precision.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    a.grid.ensure_matches(&b.grid, "inner_product")?;
    let s = Zip::from(&a.data)
        .and(&b.data)
        .fold(Complex64::new(0.0, 0.0), |acc, x, y| acc + x.conj() * y);
    Ok(s * a.grid.cell_area())
}

/// Intensity along `axis`: either the central line, or the sum across the
/// other axis times its pitch (a line density that integrates to power).
pub fn line_profile(field: &ComplexField, axis: Axis, integrate_other_axis: bool) -> LineProfile {
    let g = &field.grid;
    let values: Vec<f64> = match (axis, integrate_other_axis) {
        (Axis::X, false) => field.data.row(g.ny / 2).iter().map(|a| a.norm_sqr()).collect(),
        (Axis::Y, false) => field.data.column(g.nx / 2).iter().map(|a| a.norm_sqr()).collect(),
        (Axis::X, true) => field
            .data
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|a| a.norm_sqr()).sum::<f64>() * g.pitch_y)
            .collect(),
        (Axis::Y, true) => field
            .data
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|a| a.norm_sqr()).sum::<f64>() * g.pitch_x)
            .collect(),
    };
    LineProfile::new(g.coords(axis), g.pitch(axis), values)
}

/// Crops or zero-pads about the origin to `nx × ny` samples, keeping the pitch.
pub fn resize_canvas(field: &ComplexField, nx: usize, ny: usize) -> Result<ComplexField> {
    let g = field.grid;
    let grid = GridSpec::new(nx, ny, g.pitch_x, g.pitch_y)?;
    let off_x = (g.nx / 2) as isize - (nx / 2) as isize;
    let off_y = (g.ny / 2) as isize - (ny / 2) as isize;
    let mut data = Array2::zeros((ny, nx));
    for j in 0..ny {
        let sj = j as isize + off_y;
        if sj < 0 || sj >= g.ny as isize {
            continue;
        }
        for i in 0..nx {
            let si = i as isize + off_x;
            if si >= 0 && si < g.nx as isize {
                data[[j, i]] = field.data[[sj as usize, si as usize]];
            }
        }
    }
    Ok(ComplexField { grid, data })
}
