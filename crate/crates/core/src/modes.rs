//! OAM modes and the mutually unbiased angular (ANG) modes built from them.
//!
//! All modes share one Gaussian ring envelope, so every mode illuminates the
//! log-polar optics over the same radii.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Axis, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Oam,
    Ang,
}

/// One member of the OAM basis (`index` = ℓ in [-L, L]) or the ANG basis
/// (`index` = j in [0, 2L]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSpec {
    pub kind: ModeKind,
    pub index: i32,
    pub max_l: u32,
}

impl ModeSpec {
    pub fn oam(l: i32, max_l: u32) -> Result<Self> {
        let spec = ModeSpec {
            kind: ModeKind::Oam,
            index: l,
            max_l,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ang(j: i32, max_l: u32) -> Result<Self> {
        let spec = ModeSpec {
            kind: ModeKind::Ang,
            index: j,
            max_l,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.max_l as i32;
        let ok = match self.kind {
            ModeKind::Oam => (-l..=l).contains(&self.index),
            ModeKind::Ang => (0..=2 * l).contains(&self.index),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange(format!("{self} with L = {l}")))
        }
    }

    /// Position of this mode in its basis, 0..2L+1.
    pub fn basis_position(&self) -> usize {
        match self.kind {
            ModeKind::Oam => (self.index + self.max_l as i32) as usize,
            ModeKind::Ang => self.index as usize,
        }
    }

    /// The whole basis of `kind`, ordered by [`ModeSpec::basis_position`].
    pub fn basis(kind: ModeKind, max_l: u32) -> Vec<ModeSpec> {
        let l = max_l as i32;
        let indices: Vec<i32> = match kind {
            ModeKind::Oam => (-l..=l).collect(),
            ModeKind::Ang => (0..=2 * l).collect(),
        };
        indices
            .into_iter()
            .map(|index| ModeSpec { kind, index, max_l })
            .collect()
    }

    pub fn basis_size(&self) -> usize {
        2 * self.max_l as usize + 1
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModeKind::Oam => write!(f, "OAM l={}", self.index),
            ModeKind::Ang => write!(f, "ANG j={}", self.index),
        }
    }
}

/// Gaussian ring `exp(-(r - r0)²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSpec {
    pub ring_radius: f64,
    pub ring_width: f64,
}

impl EnvelopeSpec {
    pub fn new(ring_radius: f64, ring_width: f64) -> Result<Self> {
        if !(ring_radius > 0.0 && ring_width > 0.0) {
            return Err(Error::param(
                "envelope",
                format!("r0 = {ring_radius}, sigma = {ring_width}; both must be > 0"),
            ));
        }
        Ok(EnvelopeSpec {
            ring_radius,
            ring_width,
        })
    }

    pub fn check_fits(&self, grid: &GridSpec) -> Result<()> {
        let outer = self.ring_radius + 3.0 * self.ring_width;
        let half = grid.half_extent(Axis::X).min(grid.half_extent(Axis::Y));
        if outer > half {
            return Err(Error::EnvelopeTooLarge(format!(
                "r0 + 3σ = {outer:.4e} m exceeds grid half-extent {half:.4e} m"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn amplitude(&self, r: f64) -> f64 {
        let d = (r - self.ring_radius) / self.ring_width;
        (-d * d).exp()
    }
}

/// `exp(-(r-r0)²/σ²)·exp(iℓ·atan2(y, x))` at unit power.
pub fn make_oam(spec: ModeSpec, envelope: &EnvelopeSpec, grid: &GridSpec) -> Result<ComplexField> {
    if spec.kind != ModeKind::Oam {
        return Err(Error::ModeOutOfRange(format!("{spec} passed to make_oam")));
    }
    spec.validate()?;
    envelope.check_fits(grid)?;
    let l = spec.index as f64;
    ComplexField::from_fn(*grid, |x, y| {
        Complex64::from_polar(envelope.amplitude(x.hypot(y)), l * y.atan2(x))
    })
    .normalized()
}

/// Expansion coefficients of ANG mode `j` over ℓ = -L..=L:
/// `exp(-i2πjℓ/(2L+1))/√(2L+1)`.
pub fn ang_coefficients(j: i32, max_l: u32) -> Result<Vec<Complex64>> {
    let spec = ModeSpec {
        kind: ModeKind::Ang,
        index: j,
        max_l,
    };
    spec.validate()?;
    let d = spec.basis_size() as f64;
    let l = max_l as i32;
    Ok((-l..=l)
        .map(|ell| Complex64::from_polar(1.0 / d.sqrt(), -2.0 * PI * (j * ell) as f64 / d))
        .collect())
}

/// Coefficient-weighted sum of the OAM modes at unit power.
///
/// Evaluated per sample as `envelope · Σ c_ℓ e^{iℓφ}`, which is the same
/// linear combination as summing [`make_oam`] outputs.
pub fn make_ang(spec: ModeSpec, envelope: &EnvelopeSpec, grid: &GridSpec) -> Result<ComplexField> {
    if spec.kind != ModeKind::Ang {
        return Err(Error::ModeOutOfRange(format!("{spec} passed to make_ang")));
    }
    let coeffs = ang_coefficients(spec.index, spec.max_l)?;
    envelope.check_fits(grid)?;
    let l = spec.max_l as i32;
    ComplexField::from_fn(*grid, |x, y| {
        let phi = y.atan2(x);
        let step = Complex64::from_polar(1.0, phi);
        let mut e = Complex64::from_polar(1.0, -(l as f64) * phi);
        let mut sum = Complex64::new(0.0, 0.0);
        for c in &coeffs {
            sum += c * e;
            e *= step;
        }
        sum * envelope.amplitude(x.hypot(y))
    })
    .normalized()
}

pub fn make_mode(spec: ModeSpec, envelope: &EnvelopeSpec, grid: &GridSpec) -> Result<ComplexField> {
    match spec.kind {
        ModeKind::Oam => make_oam(spec, envelope, grid),
        ModeKind::Ang => make_ang(spec, envelope, grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner_product;

    fn setup() -> (GridSpec, EnvelopeSpec) {
        let grid = GridSpec::square(256, 3.2e-5).unwrap();
        (grid, EnvelopeSpec::new(2e-3, 5e-4).unwrap())
    }

    #[test]
    fn index_ranges() {
        assert!(ModeSpec::oam(12, 12).is_ok());
        assert!(ModeSpec::oam(-13, 12).is_err());
        assert!(ModeSpec::ang(24, 12).is_ok());
        assert!(ModeSpec::ang(25, 12).is_err());
        assert!(ModeSpec::ang(-1, 12).is_err());
        assert!(ang_coefficients(25, 12).is_err());
        assert_eq!(ModeSpec::basis(ModeKind::Oam, 12).len(), 25);
    }

    #[test]
    fn envelope_must_fit() {
        let grid = GridSpec::square(64, 1e-5).unwrap();
        let env = EnvelopeSpec::new(2e-3, 5e-4).unwrap();
        let err = make_oam(ModeSpec::oam(1, 12).unwrap(), &env, &grid).unwrap_err();
        assert!(matches!(err, Error::EnvelopeTooLarge(_)));
    }

    #[test]
    fn l0_is_real_nonnegative() {
        let (grid, env) = setup();
        let f = make_oam(ModeSpec::oam(0, 12).unwrap(), &env, &grid).unwrap();
        assert!(f.data().iter().all(|a| a.im == 0.0 && a.re >= 0.0));
        assert!((f.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn winding_number() {
        let (grid, env) = setup();
        let f = make_oam(ModeSpec::oam(3, 12).unwrap(), &env, &grid).unwrap();
        // Walk a closed circle of radius r0 sample by sample, summing wrapped
        // phase differences.
        let r0 = env.ring_radius;
        let n = 720;
        let at = |t: f64| {
            let (x, y) = (r0 * t.cos(), r0 * t.sin());
            let i = (x / grid.pitch_x).round() as isize + 128;
            let j = (y / grid.pitch_y).round() as isize + 128;
            f.data()[[j as usize, i as usize]]
        };
        let mut total = 0.0;
        for k in 0..n {
            let a = at(2.0 * PI * k as f64 / n as f64);
            let b = at(2.0 * PI * (k + 1) as f64 / n as f64);
            total += (b * a.conj()).arg();
        }
        assert!((total - 6.0 * PI).abs() < 1e-9, "{total}");
    }

    #[test]
    fn coefficients() {
        let c = ang_coefficients(0, 12).unwrap();
        assert_eq!(c.len(), 25);
        assert!(c.iter().all(|z| (z.norm() - 0.2).abs() < 1e-15 && z.arg().abs() < 1e-15));
        for j in 0..25 {
            let cj = ang_coefficients(j, 12).unwrap();
            assert!(cj.iter().all(|z| (z.norm() - 0.2).abs() < 1e-15));
            for k in 0..25 {
                let ck = ang_coefficients(k, 12).unwrap();
                let g: Complex64 = cj.iter().zip(&ck).map(|(a, b)| a.conj() * b).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((g - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ang_is_linear_combination() {
        let (grid, env) = setup();
        let j = 7;
        let ang = make_ang(ModeSpec::ang(j, 12).unwrap(), &env, &grid).unwrap();
        let coeffs = ang_coefficients(j, 12).unwrap();
        let mut sum = ndarray::Array2::<Complex64>::zeros((256, 256));
        for (c, l) in coeffs.iter().zip(-12..=12) {
            let f = make_oam(ModeSpec::oam(l, 12).unwrap(), &env, &grid).unwrap();
            sum.scaled_add(*c, f.data());
        }
        let combo = ComplexField::new(grid, sum).unwrap().normalized().unwrap();
        let diff = ang.data() - combo.data();
        let err = diff.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.cell_area();
        assert!(err.sqrt() < 1e-12);
        let overlap = inner_product(&combo, &ang).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }
}
