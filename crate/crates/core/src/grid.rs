//! Uniform sampling grids with the origin at the central sample.

use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance used when comparing pitches that went through a chain
/// of `λf/(n·pitch)` conversions.
const PITCH_RTOL: f64 = 1e-9;

/// Array axis of a 2-D field. Arrays are stored row-major with shape
/// `(ny, nx)`, so `X` indexes columns and `Y` indexes rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

/// Sample counts and physical spacing of a 2-D grid.
///
/// Sample `i` along an axis sits at `(i - n/2) * pitch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub pitch_x: f64,
    pub pitch_y: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, pitch_x: f64, pitch_y: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 64 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}, must be even and at least 64"
                )));
            }
        }
        for (name, p) in [("pitch_x", pitch_x), ("pitch_y", pitch_y)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {p}, must be > 0")));
            }
        }
        Ok(GridSpec {
            nx,
            ny,
            pitch_x,
            pitch_y,
        })
    }

    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch)
    }

    pub fn len(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn pitch(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.pitch_x,
            Axis::Y => self.pitch_y,
        }
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.len(axis) as f64 * self.pitch(axis)
    }

    /// Largest |coordinate| reachable on the positive side along `axis`.
    pub fn half_extent(&self, axis: Axis) -> f64 {
        (self.len(axis) / 2 - 1) as f64 * self.pitch(axis)
    }

    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        (i as f64 - (self.len(axis) / 2) as f64) * self.pitch(axis)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.pitch_x
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.pitch_y
    }

    pub fn coords(&self, axis: Axis) -> Vec<f64> {
        (0..self.len(axis)).map(|i| self.coord(axis, i)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.pitch_x * self.pitch_y
    }

    /// Grid of the back focal plane of a lens of focal length `focal_length`
    /// with this grid in its front focal plane.
    pub fn fourier_dual(&self, focal_length: f64, wavelength: f64) -> GridSpec {
        let lf = wavelength * focal_length;
        GridSpec {
            nx: self.nx,
            ny: self.ny,
            pitch_x: lf / (self.nx as f64 * self.pitch_x),
            pitch_y: lf / (self.ny as f64 * self.pitch_y),
        }
    }

    /// Same sample counts and pitches, up to floating-point rounding of the
    /// pitch chain.
    pub fn matches(&self, other: &GridSpec) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= PITCH_RTOL * a.abs().max(b.abs());
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.pitch_x, other.pitch_x)
            && close(self.pitch_y, other.pitch_y)
    }

    pub(crate) fn ensure_matches(&self, other: &GridSpec, context: &'static str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                context,
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} @ {:.6e} x {:.6e} m",
            self.nx, self.ny, self.pitch_x, self.pitch_y
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(GridSpec::square(32, 1e-6).is_err());
        assert!(GridSpec::square(65, 1e-6).is_err());
        assert!(GridSpec::square(64, 0.0).is_err());
        assert!(GridSpec::square(64, 1e-6).is_ok());
    }

    #[test]
    fn origin_is_central_sample() {
        let g = GridSpec::new(64, 128, 2.0, 3.0).unwrap();
        assert_eq!(g.x(32), 0.0);
        assert_eq!(g.y(64), 0.0);
        assert_eq!(g.x(0), -64.0);
        assert_eq!(g.extent(Axis::Y), 384.0);
    }

    #[test]
    fn dual_of_dual_restores_pitch() {
        let g = GridSpec::square(256, 8e-6).unwrap();
        let back = g.fourier_dual(0.3, 632.8e-9).fourier_dual(0.3, 632.8e-9);
        assert!(back.matches(&g));
    }
}
