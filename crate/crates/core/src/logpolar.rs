//! Log-polar unwrapping: two phase elements separated by a lens map the ring
//! `(r, φ)` onto the strip `(u, v) = (-a·ln(r/b), a·φ)`, turning an azimuthal
//! phase `e^{iℓφ}` into the linear tilt `e^{iℓv/a}`.
//!
//! On the `(u, v)` plane `u` runs along [`Axis::X`] and `v` along [`Axis::Y`].

use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{apply_phase_screen_checked, ComplexField, PhaseScreen, SamplingWarning};
use crate::fourier::lens_fourier;
use crate::grid::{Axis, GridSpec};
use crate::modes::EnvelopeSpec;

/// Parameters of the log-polar mapper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptics {
    /// Sets the unwrapped strip width `2πa` (m).
    pub a: f64,
    /// Radius mapped to `u = 0` (m).
    pub b: f64,
    /// Focal length of the lens between the two elements (m).
    pub focal_length: f64,
    pub wavelength: f64,
}

impl TransformOptics {
    pub fn new(a: f64, b: f64, focal_length: f64, wavelength: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("f", focal_length), ("wavelength", wavelength)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "optics",
                    reason: format!("{name} = {v} must be > 0"),
                });
            }
        }
        Ok(TransformOptics {
            a,
            b,
            focal_length,
            wavelength,
        })
    }

    /// `a` that makes the strip span `fraction` of the `(u, v)` grid
    /// produced from `input` by a lens of focal length `focal_length`. The
    /// largest per-sample step of φ1 along `y` is then `π·fraction`.
    pub fn a_for_strip_fraction(input: &GridSpec, focal_length: f64, wavelength: f64, fraction: f64) -> f64 {
        let uv = input.fourier_dual(focal_length, wavelength);
        fraction * uv.extent(Axis::Y) / (2.0 * PI)
    }

    /// `2πa/(λf)`, the common prefactor of both elements.
    pub fn k(&self) -> f64 {
        2.0 * PI * self.a / (self.wavelength * self.focal_length)
    }

    pub fn strip_width(&self) -> f64 {
        2.0 * PI * self.a
    }

    /// Geometric image `(u, v)` of the input point `(x, y)`.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (-self.a * (x.hypot(y) / self.b).ln(), self.a * y.atan2(x))
    }

    /// `u` interval covered by the envelope's `r0 ± 3σ` annulus.
    pub fn annulus_u_range(&self, envelope: &EnvelopeSpec) -> (f64, f64) {
        let outer = envelope.ring_radius + 3.0 * envelope.ring_width;
        let inner = (envelope.ring_radius - 3.0 * envelope.ring_width).max(1e-3 * envelope.ring_radius);
        (-self.a * (outer / self.b).ln(), -self.a * (inner / self.b).ln())
    }
}

/// `(2πa/λf)·[y·atan2(y, x) - x·ln(r/b) + x]`, with 0 at the origin.
pub fn unwrapper_phase_value(optics: &TransformOptics, x: f64, y: f64) -> f64 {
    let r = x.hypot(y);
    if r == 0.0 {
        return 0.0;
    }
    optics.k() * (y * y.atan2(x) - x * (r / optics.b).ln() + x)
}

/// `-(2πab/λf)·exp(-u/a)·cos(v/a)`.
pub fn corrector_phase_value(optics: &TransformOptics, u: f64, v: f64) -> f64 {
    -optics.k() * optics.b * (-u / optics.a).exp() * (v / optics.a).cos()
}

/// First element on the input plane. The sample at r = 0 gets phase 0 and
/// is listed in [`PhaseScreen::singular_samples`].
pub fn unwrapper_phase(grid: &GridSpec, optics: &TransformOptics) -> PhaseScreen {
    let phase = Array2::from_shape_fn((grid.ny, grid.nx), |(j, i)| {
        unwrapper_phase_value(optics, grid.x(i), grid.y(j))
    });
    PhaseScreen::from_map(*grid, phase)
        .expect("shape built from grid")
        .with_singular(vec![(grid.nx / 2, grid.ny / 2)])
}

/// Second element on the `(u, v)` plane, removing the residual phase left
/// by the stationary-phase mapping.
pub fn corrector_phase(grid_uv: &GridSpec, optics: &TransformOptics) -> PhaseScreen {
    let phase = Array2::from_shape_fn((grid_uv.ny, grid_uv.nx), |(j, i)| {
        corrector_phase_value(optics, grid_uv.x(i), grid_uv.y(j))
    });
    PhaseScreen::from_map(*grid_uv, phase).expect("shape built from grid")
}

/// Both log-polar elements, built for one input grid.
#[derive(Debug, Clone)]
pub struct UnwrapStage {
    pub optics: TransformOptics,
    pub screen1: PhaseScreen,
    pub screen2: PhaseScreen,
}

impl UnwrapStage {
    pub fn new(input: &GridSpec, optics: TransformOptics) -> Result<Self> {
        let uv = input.fourier_dual(optics.focal_length, optics.wavelength);
        let width = optics.strip_width();
        let extent = uv.extent(Axis::Y);
        if width > extent {
            return Err(Error::ExceedsGrid {
                what: "unwrapped strip",
                reason: format!("strip width 2πa = {width:.4e} m exceeds (u,v) grid extent {extent:.4e} m"),
            });
        }
        Ok(UnwrapStage {
            optics,
            screen1: unwrapper_phase(input, &optics),
            screen2: corrector_phase(&uv, &optics),
        })
    }

    pub fn input_grid(&self) -> &GridSpec {
        self.screen1.grid()
    }

    pub fn output_grid(&self) -> &GridSpec {
        self.screen2.grid()
    }

    /// Rejects envelopes whose annulus would land outside the `(u, v)` grid.
    pub fn check_envelope(&self, envelope: &EnvelopeSpec) -> Result<()> {
        let (lo, hi) = self.optics.annulus_u_range(envelope);
        let half = self.output_grid().half_extent(Axis::X);
        if lo < -half || hi > half {
            return Err(Error::ExceedsGrid {
                what: "unwrapped annulus",
                reason: format!("u range [{lo:.4e}, {hi:.4e}] m outside ±{half:.4e} m"),
            });
        }
        Ok(())
    }
}

/// φ1 → lens → φ2. Returns the `(u, v)` field and any sampling warnings.
pub fn unwrap_checked(field: ComplexField, stage: &UnwrapStage) -> Result<(ComplexField, Vec<SamplingWarning>)> {
    let mut warnings = Vec::new();
    let (f, w) = apply_phase_screen_checked(field, &stage.screen1)?;
    warnings.extend(w);
    let f = lens_fourier(f, stage.optics.focal_length, stage.optics.wavelength)?;
    let (f, w) = apply_phase_screen_checked(f, &stage.screen2)?;
    warnings.extend(w);
    Ok((f, warnings))
}

pub fn unwrap(field: ComplexField, stage: &UnwrapStage) -> Result<ComplexField> {
    let (f, warnings) = unwrap_checked(field, stage)?;
    for w in warnings {
        log::warn!("unwrap: {w}");
    }
    Ok(f)
}

/// Phase statistics of an unwrapped strip over `|v| <= fraction·W/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPhase {
    /// Least-squares slope of the u-summed phase along v (rad/m).
    pub slope: f64,
    /// Intensity-weighted rms of the phase about its mean (rad).
    pub rms_flat: f64,
    /// Intensity-weighted rms about the fitted linear ramp (rad).
    pub rms_about_fit: f64,
}

pub fn strip_phase(field: &ComplexField, strip_width: f64, fraction: f64) -> StripPhase {
    let g = field.grid();
    let half = 0.5 * fraction * strip_width;
    let rows: Vec<usize> = (0..g.ny).filter(|&j| g.y(j).abs() <= half).collect();
    let data = field.data();

    // Flatness over the 2-D region.
    let mut ref_phasor = Complex64::new(0.0, 0.0);
    for &j in &rows {
        for a in data.row(j) {
            ref_phasor += a * a.norm();
        }
    }
    let ref_phase = ref_phasor.arg();
    let (mut w_sum, mut d2) = (0.0, 0.0);
    for &j in &rows {
        for a in data.row(j) {
            let w = a.norm_sqr();
            let d = (a * Complex64::from_polar(1.0, -ref_phase)).arg();
            w_sum += w;
            d2 += w * d * d;
        }
    }
    let rms_flat = (d2 / w_sum).sqrt();

    // Phase of the u-summed line, unwrapped along v, weighted line fit.
    let mut v = Vec::with_capacity(rows.len());
    let mut phase = Vec::with_capacity(rows.len());
    let mut weight = Vec::with_capacity(rows.len());
    let mut prev: Option<f64> = None;
    for &j in &rows {
        let z: Complex64 = data.row(j).iter().map(|a| a * a.norm()).sum();
        let p = match prev {
            None => z.arg(),
            Some(pp) => pp + (z.arg() - pp + PI).rem_euclid(2.0 * PI) - PI,
        };
        prev = Some(p);
        v.push(g.y(j));
        phase.push(p);
        weight.push(z.norm());
    }
    let sw: f64 = weight.iter().sum();
    let mv = v.iter().zip(&weight).map(|(x, w)| x * w).sum::<f64>() / sw;
    let mp = phase.iter().zip(&weight).map(|(x, w)| x * w).sum::<f64>() / sw;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ((x, p), w) in v.iter().zip(&phase).zip(&weight) {
        sxy += w * (x - mv) * (p - mp);
        sxx += w * (x - mv) * (x - mv);
    }
    let slope = sxy / sxx;
    let resid = v
        .iter()
        .zip(&phase)
        .zip(&weight)
        .map(|((x, p), w)| w * (p - mp - slope * (x - mv)).powi(2))
        .sum::<f64>()
        / sw;
    StripPhase {
        slope,
        rms_flat,
        rms_about_fit: resid.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn optics() -> TransformOptics {
        TransformOptics::new(1.26e-3, 2e-3, 0.3, 632.8e-9).unwrap()
    }

    #[test]
    fn phi1_on_axis() {
        let o = optics();
        let expected = 2.0 * PI * o.a * o.b / (o.wavelength * o.focal_length);
        assert!((unwrapper_phase_value(&o, o.b, 0.0) - expected).abs() < 1e-12 * expected);
        assert_eq!(unwrapper_phase_value(&o, 0.0, 0.0), 0.0);
    }

    #[test]
    fn phi1_continuous_across_cut_from_above() {
        let o = optics();
        let limit = o.k() * (-o.b);
        let mut last = f64::INFINITY;
        for e in 1..8 {
            let y = 10f64.powi(-3 - e);
            let d = (unwrapper_phase_value(&o, -o.b, y) - limit).abs();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-6 * limit.abs());
        // The arctangent term tends to π·y.
        let y = 1e-9;
        let with_term = unwrapper_phase_value(&o, -o.b, y);
        assert!((with_term - o.k() * (PI * y - o.b)).abs() < 1e-9);
    }

    #[test]
    fn phi1_gradient_is_the_geometric_map() {
        let o = optics();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let scale = o.wavelength * o.focal_length / (2.0 * PI);
        for _ in 0..100 {
            let r = rng.random_range(0.3..2.0) * o.b;
            // Stay clear of the cut, where ∂/∂y is discontinuous.
            let t = rng.random_range(-3.0..3.0);
            let (x, y) = (r * f64::cos(t), r * f64::sin(t));
            let h = 1e-4 * o.b;
            let dx = (unwrapper_phase_value(&o, x + h, y) - unwrapper_phase_value(&o, x - h, y)) / (2.0 * h);
            let dy = (unwrapper_phase_value(&o, x, y + h) - unwrapper_phase_value(&o, x, y - h)) / (2.0 * h);
            let (u, v) = o.map(x, y);
            assert!((scale * dx - u).abs() <= 1e-4 * u.abs().max(1e-3 * o.a), "u {u} vs {}", scale * dx);
            assert!((scale * dy - v).abs() <= 1e-4 * v.abs().max(1e-3 * o.a), "v {v} vs {}", scale * dy);
        }
    }

    #[test]
    fn phi2_values() {
        let o = optics();
        let kb = 2.0 * PI * o.a * o.b / (o.wavelength * o.focal_length);
        assert!((corrector_phase_value(&o, 0.0, 0.0) + kb).abs() < 1e-12 * kb);
        assert!(corrector_phase_value(&o, 0.0, PI * o.a / 2.0).abs() < 1e-12 * kb);
    }

    #[test]
    fn strip_wider_than_grid_is_rejected() {
        let grid = GridSpec::square(256, 8e-6).unwrap();
        let wide = TransformOptics::new(1.0, 2e-3, 0.3, 632.8e-9).unwrap();
        let err = UnwrapStage::new(&grid, wide).unwrap_err();
        assert!(err.to_string().contains("strip width"), "{err}");
    }

    #[test]
    fn central_sample_is_flagged() {
        let grid = GridSpec::square(64, 1e-4).unwrap();
        let s = unwrapper_phase(&grid, &optics());
        assert_eq!(s.singular_samples(), &[(32, 32)]);
        assert_eq!(s.phase_at(32, 32), 0.0);
    }
}
