//! The complete sorters: log-polar unwrapping, optional fan-out copying with
//! phase correction, and focusing onto a detector divided into one bin per
//! basis mode.
//!
//! OAM: mode → unwrap → L1 → fan-out → FT → corrector → L2 → detector.
//! ANG: mode → unwrap → unit imaging → fan-out → FT → corrector → L2.
//!
//! Copies, bins and the fan-out all run along [`Axis::Y`] (the `v` axis of
//! the unwrapped strip). Binning integrates over the whole X extent.

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fanout::{build_phase_corrector, fanout_phase, order_spectrum, FanoutDesign, OrderSpectrum};
use crate::field::{apply_phase_screen_checked, image, resize_canvas, ComplexField, PhaseScreen, SamplingWarning};
use crate::fourier::{lens_fourier, lens_fourier_1d};
use crate::grid::{Axis, GridSpec};
use crate::logpolar::{unwrap_checked, TransformOptics, UnwrapStage};
use crate::modes::{make_mode, EnvelopeSpec, ModeKind, ModeSpec};
use crate::profile::LineProfile;

pub const DEFAULT_GRID_N: usize = 1024;
pub const DEFAULT_PITCH: f64 = 8e-6;
pub const DEFAULT_WAVELENGTH: f64 = 632.8e-9;
pub const DEFAULT_RING_RADIUS: f64 = 2.3e-3;
/// Unwrapped strip width as a fraction of the `(u, v)` grid.
pub const DEFAULT_STRIP_FRACTION: f64 = 0.9;
pub const DEFAULT_FOCAL_LENGTH: f64 = 0.3;
pub const DEFAULT_MAX_L: u32 = 12;

/// Column power below this fraction of the strongest column is skipped in
/// the line-by-line detector computation.
const COLUMN_FLOOR: f64 = 1e-18;

/// Everything needed to build a [`Sorter`].
#[derive(Debug, Clone, PartialEq)]
pub struct SorterConfig {
    pub input: GridSpec,
    pub envelope: EnvelopeSpec,
    pub optics: TransformOptics,
    pub fanout: Option<FanoutDesign>,
    pub path: ModeKind,
    /// Fourier lens between the unwrapper and the fan-out (OAM only).
    pub f_l1: f64,
    /// Fourier lens after the fan-out.
    pub f_ft: f64,
    /// Final focusing lens.
    pub f_l2: f64,
    pub max_l: u32,
    /// Samples kept along `u` (X) and `v` (Y) after unwrapping. Cropping `u`
    /// and padding `v` keeps the pitch and leaves room for the copies.
    pub canvas: (usize, usize),
}

impl SorterConfig {
    /// Standard geometry on an `n × n` grid with an 8.192 mm field of view:
    /// ring radius 2.3 mm = b, width r0/4, all lenses 0.3 m, strip width
    /// 0.9 of the `(u, v)` grid, canvas `(n/2) × 32n`, no fan-out.
    ///
    /// The wide strip matters: the residual phase a vortex picks up in the
    /// log-polar map grows like ℓ²/(strip fraction · ring radius in samples),
    /// and at high |ℓ| it leaks power into the neighbouring bins.
    pub fn standard(path: ModeKind, n: usize) -> Result<Self> {
        let input = GridSpec::square(n, DEFAULT_PITCH * DEFAULT_GRID_N as f64 / n as f64)?;
        let envelope = EnvelopeSpec::new(DEFAULT_RING_RADIUS, DEFAULT_RING_RADIUS / 4.0)?;
        let a = TransformOptics::a_for_strip_fraction(&input, DEFAULT_FOCAL_LENGTH, DEFAULT_WAVELENGTH, DEFAULT_STRIP_FRACTION);
        let optics = TransformOptics::new(a, DEFAULT_RING_RADIUS, DEFAULT_FOCAL_LENGTH, DEFAULT_WAVELENGTH)?;
        Ok(SorterConfig {
            input,
            envelope,
            optics,
            fanout: None,
            path,
            f_l1: DEFAULT_FOCAL_LENGTH,
            f_ft: DEFAULT_FOCAL_LENGTH,
            f_l2: DEFAULT_FOCAL_LENGTH,
            max_l: DEFAULT_MAX_L,
            canvas: (n / 2, 32 * n),
        })
    }

    pub fn with_fanout(mut self, design: Option<FanoutDesign>) -> Self {
        self.fanout = design;
        self
    }

    pub fn basis_size(&self) -> usize {
        2 * self.max_l as usize + 1
    }

    /// Angular separation a fan-out must have for this path: copies tile
    /// the strip edge to edge (OAM), or shift the focused spot comb by a
    /// whole basis (ANG).
    pub fn required_separation(&self) -> f64 {
        let w = self.optics.strip_width();
        match self.path {
            ModeKind::Oam => w / self.f_l1,
            ModeKind::Ang => self.basis_size() as f64 * self.optics.wavelength / w,
        }
    }

    /// Copy displacement `s·f_FT` in the corrector plane.
    pub fn copy_pitch(&self) -> f64 {
        self.required_separation() * self.f_ft
    }

    /// Lateral magnification of the strip from the `(u, v)` plane to the
    /// corrector plane.
    pub fn chain_magnification(&self) -> f64 {
        match self.path {
            ModeKind::Oam => -self.f_ft / self.f_l1,
            ModeKind::Ang => 1.0,
        }
    }

    pub fn copies(&self) -> usize {
        self.fanout.as_ref().map_or(0, |d| d.copies())
    }
}

/// Contiguous detector bins along Y, one per basis mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    /// `centers[k]` belongs to basis position `k`.
    pub centers: Vec<f64>,
    pub width: f64,
}

impl BinLayout {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        (self.centers[k] - 0.5 * self.width, self.centers[k] + 0.5 * self.width)
    }

    /// Lowest and highest coordinate covered by any bin.
    pub fn span(&self) -> (f64, f64) {
        let lo = self.centers.iter().cloned().fold(f64::MAX, f64::min);
        let hi = self.centers.iter().cloned().fold(f64::MIN, f64::max);
        (lo - 0.5 * self.width, hi + 0.5 * self.width)
    }

    /// Power of `profile` inside each bin.
    pub fn integrate(&self, profile: &LineProfile) -> Vec<f64> {
        (0..self.count())
            .map(|k| {
                let (lo, hi) = self.edges(k);
                profile.integrate(lo, hi)
            })
            .collect()
    }

    fn evenly_spaced(positions: impl Iterator<Item = i32>, pitch: f64) -> Self {
        BinLayout {
            centers: positions.map(|i| i as f64 * pitch).collect(),
            width: pitch.abs(),
        }
    }
}

/// Detector field plus any sampling warnings raised on the way.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub field: ComplexField,
    pub warnings: Vec<SamplingWarning>,
}

/// `p[[k, j]]` = P(detect bin k | sent mode j), normalized per column over
/// the in-bin power.
#[derive(Debug, Clone)]
pub struct CrosstalkMatrix {
    pub modes: Vec<ModeSpec>,
    pub p: Array2<f64>,
    /// Raw in-bin powers; `p` is each column divided by its sum.
    pub in_bin: Array2<f64>,
    /// In-bin power over total detector power, per sent mode.
    pub captured_fraction: Vec<f64>,
}

impl CrosstalkMatrix {
    pub fn from_in_bin(modes: Vec<ModeSpec>, in_bin: Array2<f64>, totals: &[f64]) -> Result<Self> {
        let mut p = in_bin.clone();
        let mut captured_fraction = Vec::with_capacity(modes.len());
        for (j, mode) in modes.iter().enumerate() {
            let sum: f64 = in_bin.column(j).sum();
            if !(sum > 0.0) {
                return Err(Error::DegenerateColumn { mode: mode.to_string() });
            }
            p.column_mut(j).mapv_inplace(|v| v / sum);
            captured_fraction.push((sum / totals[j]).min(1.0));
        }
        Ok(CrosstalkMatrix {
            modes,
            p,
            in_bin,
            captured_fraction,
        })
    }
}

/// Detector line-outs (integrated over X) with the bin layout they were
/// measured against.
#[derive(Debug, Clone)]
pub struct FocalProfiles {
    pub modes: Vec<ModeSpec>,
    pub profiles: Vec<LineProfile>,
    pub bins: BinLayout,
}

/// A built sorter. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Sorter {
    config: SorterConfig,
    unwrap: UnwrapStage,
    canvas_grid: GridSpec,
    fanout_grid: GridSpec,
    corrector_grid: GridSpec,
    detector_grid: GridSpec,
    fanout_screen: Option<PhaseScreen>,
    corrector: Option<PhaseScreen>,
    spectrum: Option<OrderSpectrum>,
    bins: BinLayout,
}

fn axis_phasors(screen: &Option<PhaseScreen>) -> Option<Vec<Complex64>> {
    screen.as_ref().map(|s| {
        let (_, values) = s.axis_profile().expect("fan-out screens vary along one axis");
        values.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    })
}

impl Sorter {
    pub fn new(config: SorterConfig) -> Result<Self> {
        for (name, f) in [("f_l1", config.f_l1), ("f_ft", config.f_ft), ("f_l2", config.f_l2)] {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::param(name, format!("{f} must be > 0")));
            }
        }
        config.envelope.check_fits(&config.input)?;
        let unwrap = UnwrapStage::new(&config.input, config.optics)?;
        unwrap.check_envelope(&config.envelope)?;

        let uv = *unwrap.output_grid();
        let (nu, nv) = config.canvas;
        let canvas_grid = GridSpec::new(nu, nv, uv.pitch_x, uv.pitch_y)?;
        let (u_lo, u_hi) = config.optics.annulus_u_range(&config.envelope);
        let half_u = canvas_grid.half_extent(Axis::X);
        if u_lo < -half_u || u_hi > half_u {
            return Err(Error::ExceedsGrid {
                what: "canvas",
                reason: format!("annulus u range [{u_lo:.4e}, {u_hi:.4e}] m outside ±{half_u:.4e} m"),
            });
        }
        if config.optics.strip_width() > canvas_grid.extent(Axis::Y) {
            return Err(Error::ExceedsGrid {
                what: "canvas",
                reason: "strip wider than the canvas along v".into(),
            });
        }
        let wavelength = config.optics.wavelength;
        let fanout_grid = match config.path {
            ModeKind::Oam => canvas_grid.fourier_dual(config.f_l1, wavelength),
            ModeKind::Ang => canvas_grid,
        };
        let corrector_grid = fanout_grid.fourier_dual(config.f_ft, wavelength);
        let detector_grid = corrector_grid.fourier_dual(config.f_l2, wavelength);

        let (fanout_screen, corrector, spectrum) = match &config.fanout {
            None => (None, None, None),
            Some(design) => {
                let required = config.required_separation();
                if ((design.separation - required) / required).abs() > 1e-9 {
                    return Err(Error::Chain(format!(
                        "fan-out separation {:.6e} rad, this geometry needs {required:.6e} rad",
                        design.separation
                    )));
                }
                if ((design.wavelength - wavelength) / wavelength).abs() > 1e-12 {
                    return Err(Error::Chain(format!(
                        "fan-out wavelength {:.6e} m differs from optics wavelength {wavelength:.6e} m",
                        design.wavelength
                    )));
                }
                let screen = fanout_phase(&fanout_grid, design, Axis::Y)?;
                let corrector = build_phase_corrector(design, config.copy_pitch(), &corrector_grid, Axis::Y)?;
                let spectrum = order_spectrum(design, (3 * design.half_orders).max(1))?;
                (Some(screen), Some(corrector), Some(spectrum))
            }
        };

        let mut sorter = Sorter {
            config,
            unwrap,
            canvas_grid,
            fanout_grid,
            corrector_grid,
            detector_grid,
            fanout_screen,
            corrector,
            spectrum,
            bins: BinLayout {
                centers: Vec::new(),
                width: 0.0,
            },
        };
        sorter.bins = sorter.plan_bins()?;
        Ok(sorter)
    }

    pub fn config(&self) -> &SorterConfig {
        &self.config
    }

    pub fn bins(&self) -> &BinLayout {
        &self.bins
    }

    pub fn unwrap_stage(&self) -> &UnwrapStage {
        &self.unwrap
    }

    pub fn canvas_grid(&self) -> &GridSpec {
        &self.canvas_grid
    }

    pub fn fanout_grid(&self) -> &GridSpec {
        &self.fanout_grid
    }

    pub fn corrector_grid(&self) -> &GridSpec {
        &self.corrector_grid
    }

    pub fn detector_grid(&self) -> &GridSpec {
        &self.detector_grid
    }

    pub fn fanout_screen(&self) -> Option<&PhaseScreen> {
        self.fanout_screen.as_ref()
    }

    pub fn corrector(&self) -> Option<&PhaseScreen> {
        self.corrector.as_ref()
    }

    pub fn spectrum(&self) -> Option<&OrderSpectrum> {
        self.spectrum.as_ref()
    }

    /// Analytic spot pitch on the detector per unit mode index.
    pub fn analytic_pitch(&self) -> f64 {
        let c = &self.config;
        let w = c.optics.strip_width();
        match c.path {
            ModeKind::Oam => c.optics.wavelength * c.f_l2 / (w * c.chain_magnification()),
            ModeKind::Ang => -(w / c.basis_size() as f64) * c.f_l2 / c.f_ft,
        }
    }

    /// Bin centres along Y. OAM bins follow the tilt-to-spot law; the ANG
    /// pitch is measured from the simulated j = 0 and j = 1 spots.
    fn plan_bins(&self) -> Result<BinLayout> {
        let l = self.config.max_l as i32;
        let analytic = self.analytic_pitch();
        let bins = match self.config.path {
            ModeKind::Oam => BinLayout::evenly_spaced(-l..=l, analytic),
            ModeKind::Ang => {
                let half = 0.5 * analytic.abs();
                let p0 = self.detector_profile(ModeSpec::ang(0, self.config.max_l)?)?;
                let p1 = self.detector_profile(ModeSpec::ang(1, self.config.max_l)?)?;
                let measured = p1.centroid_within(analytic, half) - p0.centroid_within(0.0, half);
                if !(((measured - analytic) / analytic).abs() < 0.1) {
                    return Err(Error::Chain(format!(
                        "ANG spot pitch {measured:.4e} m is far from the expected {analytic:.4e} m"
                    )));
                }
                // Positions of j > L wrap to the negative side of the strip.
                BinLayout::evenly_spaced((0..=2 * l).map(|j| if j > l { j - (2 * l + 1) } else { j }), measured)
            }
        };
        let (lo, hi) = bins.span();
        let half = self.detector_grid.half_extent(Axis::Y);
        if lo < -half || hi > half {
            return Err(Error::ExceedsGrid {
                what: "detector bins",
                reason: format!("bins span [{lo:.4e}, {hi:.4e}] m, detector half-extent {half:.4e} m"),
            });
        }
        Ok(bins)
    }

    fn unwrapped(&self, mode: ModeSpec) -> Result<(ComplexField, Vec<SamplingWarning>)> {
        let field = make_mode(mode, &self.config.envelope, &self.config.input)?;
        unwrap_checked(field, &self.unwrap)
    }

    /// Full 2-D propagation of `mode` to the detector plane.
    pub fn run_pipeline(&self, mode: ModeSpec) -> Result<PipelineOutput> {
        let c = &self.config;
        let lambda = c.optics.wavelength;
        let (uv, mut warnings) = self.unwrapped(mode)?;
        let canvas = resize_canvas(&uv, c.canvas.0, c.canvas.1)?;
        let mut field = match c.path {
            ModeKind::Oam => lens_fourier(canvas, c.f_l1, lambda)?,
            ModeKind::Ang => image(canvas, 1.0)?,
        };
        if let Some(screen) = &self.fanout_screen {
            let (f, w) = apply_phase_screen_checked(field, screen)?;
            warnings.extend(w);
            field = f;
        }
        field = lens_fourier(field, c.f_ft, lambda)?;
        if let Some(screen) = &self.corrector {
            let (f, w) = apply_phase_screen_checked(field, screen)?;
            warnings.extend(w);
            field = f;
        }
        field = lens_fourier(field, c.f_l2, lambda)?;
        self.detector_grid.ensure_matches(field.grid(), "detector")?;
        Ok(PipelineOutput { field, warnings })
    }

    /// Detector intensity integrated over X, computed line by line.
    ///
    /// Every stage after the canvas acts along Y only, and the X transforms
    /// are unitary, so each `u` column can be carried through 1-D transforms
    /// on its own; summing `|a|²` over columns gives exactly the X-integrated
    /// profile of [`Sorter::run_pipeline`].
    pub fn detector_profile(&self, mode: ModeSpec) -> Result<LineProfile> {
        let (uv, warnings) = self.unwrapped(mode)?;
        for w in warnings {
            log::warn!("{mode}: {w}");
        }
        Ok(self.profile_from_unwrapped(&uv))
    }

    fn profile_from_unwrapped(&self, uv: &ComplexField) -> LineProfile {
        let c = &self.config;
        let lambda = c.optics.wavelength;
        let g = uv.grid();
        let (nu, nv) = c.canvas;
        let off_u = (g.nx / 2) as isize - (nu / 2) as isize;
        let off_v = (g.ny / 2) as isize - (nv / 2) as isize;
        let data = uv.data();
        let columns: Vec<usize> = (0..nu)
            .filter_map(|i| {
                let si = i as isize + off_u;
                (si >= 0 && si < g.nx as isize).then_some(si as usize)
            })
            .collect();
        let powers: Vec<f64> = columns
            .iter()
            .map(|&si| data.column(si).iter().map(|a| a.norm_sqr()).sum())
            .collect();
        let floor = powers.iter().cloned().fold(0.0, f64::max) * COLUMN_FLOOR;
        let fan = axis_phasors(&self.fanout_screen);
        let cor = axis_phasors(&self.corrector);

        let mut intensity = vec![0.0; nv];
        let mut line = vec![Complex64::new(0.0, 0.0); nv];
        for (&si, &p) in columns.iter().zip(&powers) {
            if p <= floor {
                continue;
            }
            line.fill(Complex64::new(0.0, 0.0));
            let col = data.column(si);
            for (j, a) in line.iter_mut().enumerate() {
                let sj = j as isize + off_v;
                if sj >= 0 && sj < g.ny as isize {
                    *a = col[sj as usize];
                }
            }
            let mut pitch = g.pitch_y;
            if c.path == ModeKind::Oam {
                pitch = lens_fourier_1d(&mut line, pitch, c.f_l1, lambda);
            }
            if let Some(f) = &fan {
                line.iter_mut().zip(f).for_each(|(a, m)| *a *= m);
            }
            pitch = lens_fourier_1d(&mut line, pitch, c.f_ft, lambda);
            if let Some(f) = &cor {
                line.iter_mut().zip(f).for_each(|(a, m)| *a *= m);
            }
            lens_fourier_1d(&mut line, pitch, c.f_l2, lambda);
            for (acc, a) in intensity.iter_mut().zip(&line) {
                *acc += a.norm_sqr();
            }
        }
        intensity.iter_mut().for_each(|v| *v *= g.pitch_x);
        LineProfile::new(
            self.detector_grid.coords(Axis::Y),
            self.detector_grid.pitch_y,
            intensity,
        )
    }

    /// Conditional detection matrix for the whole basis of the sorter's path.
    pub fn crosstalk(&self) -> Result<CrosstalkMatrix> {
        Ok(self.crosstalk_with_profiles()?.0)
    }

    /// [`Sorter::crosstalk`] together with the detector profiles it was
    /// binned from.
    pub fn crosstalk_with_profiles(&self) -> Result<(CrosstalkMatrix, FocalProfiles)> {
        let modes = ModeSpec::basis(self.config.path, self.config.max_l);
        let profiles = self.focal_profiles(&modes)?;
        let n = modes.len();
        let mut in_bin = Array2::zeros((self.bins.count(), n));
        let mut totals = Vec::with_capacity(n);
        for (j, profile) in profiles.profiles.iter().enumerate() {
            for (k, v) in self.bins.integrate(profile).into_iter().enumerate() {
                in_bin[[k, j]] = v;
            }
            totals.push(profile.total());
        }
        Ok((CrosstalkMatrix::from_in_bin(modes, in_bin, &totals)?, profiles))
    }

    pub fn focal_profiles(&self, modes: &[ModeSpec]) -> Result<FocalProfiles> {
        let profiles = modes
            .par_iter()
            .map(|&m| self.detector_profile(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(FocalProfiles {
            modes: modes.to_vec(),
            profiles,
            bins: self.bins.clone(),
        })
    }
}

/// Centroid of `profile` within the bin-sized window around `center`.
pub fn spot_centroid(profile: &LineProfile, center: f64, window: f64) -> f64 {
    profile.centroid_within(center, 0.5 * window)
}

/// Full width between the first minima around the strongest sample within
/// half a bin of `center`.
pub fn spot_first_zero_width(profile: &LineProfile, center: f64, window: f64) -> Option<f64> {
    let peak = profile.peak_near(center, 0.5 * window);
    profile.first_zero_width(peak)
}

/// Ideal first-zero width `2λf/W'` of a focused strip of width `W'`.
pub fn sinc_first_zero_width(wavelength: f64, focal_length: f64, width: f64) -> f64 {
    2.0 * wavelength * focal_length / width
}
