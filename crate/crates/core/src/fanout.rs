//! Periodic phase-only fan-out gratings that split a beam into `2N+1`
//! equal copies, their diffraction-order spectra, a search for efficient
//! uniform designs, and the piecewise phase corrector that re-phases the
//! copies once they are spatially separated.
//!
//! The grating phase is
//!
//! ```text
//! Ψ(x) = arg Σ_{m=-N..N} γ_m · exp(i(2π s/λ · m x + α_m))
//! ```
//!
//! and its orders are `c_m = (1/d) ∫_0^d e^{iΨ(x)} e^{-i2πmx/d} dx` with
//! period `d = λ/s`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::PhaseScreen;
use crate::grid::{Axis, GridSpec};
use crate::optimize::{nelder_mead, NelderMead};

/// Parameters of one fan-out grating. `gamma[k]` and `alpha[k]` belong to
/// order `m = k - N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanoutDesign {
    pub half_orders: usize,
    /// Angular separation between neighbouring copies (rad).
    pub separation: f64,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub wavelength: f64,
}

impl FanoutDesign {
    /// Builds a design, rescaling `gamma` so that its largest entry is 1.
    pub fn new(half_orders: usize, separation: f64, gamma: Vec<f64>, alpha: Vec<f64>, wavelength: f64) -> Result<Self> {
        let len = 2 * half_orders + 1;
        if gamma.len() != len || alpha.len() != len {
            return Err(Error::param(
                "fanout",
                format!("expected {len} gamma and alpha values, got {} and {}", gamma.len(), alpha.len()),
            ));
        }
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("fanout", "gamma must be finite and >= 0, alpha finite"));
        }
        let max = gamma.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(Error::param("fanout", "all gamma are zero"));
        }
        if !(separation > 0.0 && wavelength > 0.0) {
            return Err(Error::param("fanout", "separation and wavelength must be > 0"));
        }
        Ok(FanoutDesign {
            half_orders,
            separation,
            gamma: gamma.into_iter().map(|g| g / max).collect(),
            alpha,
            wavelength,
        })
    }

    /// Single-order design: a uniform phase of zero.
    pub fn trivial(separation: f64, wavelength: f64) -> Self {
        FanoutDesign {
            half_orders: 0,
            separation,
            gamma: vec![1.0],
            alpha: vec![0.0],
            wavelength,
        }
    }

    pub fn copies(&self) -> usize {
        2 * self.half_orders + 1
    }

    /// Grating period `λ/s` (m).
    pub fn period(&self) -> f64 {
        self.wavelength / self.separation
    }

    /// `Σ γ_m e^{i(2πmt + α_m)}` at fractional position `t = x/d`.
    #[inline]
    fn phasor(&self, t: f64) -> Complex64 {
        let n = self.half_orders as i64;
        self.gamma
            .iter()
            .zip(&self.alpha)
            .zip(-n..=n)
            .map(|((g, a), m)| Complex64::from_polar(*g, 2.0 * PI * m as f64 * t + a))
            .sum()
    }

    /// Ψ at position `x` (m), in (-π, π].
    pub fn phase_at(&self, x: f64) -> f64 {
        self.phasor(x / self.period()).arg()
    }

    #[inline]
    fn unit_phasor(&self, t: f64) -> Complex64 {
        let z = self.phasor(t);
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    }
}

/// Renders Ψ along `axis`, constant along the other axis.
pub fn fanout_phase(grid: &GridSpec, design: &FanoutDesign, axis: Axis) -> Result<PhaseScreen> {
    let pitch = grid.pitch(axis);
    let period = design.period();
    if period <= 2.0 * pitch {
        return Err(Error::UnresolvablePeriod { period, pitch });
    }
    if period < 8.0 * pitch {
        log::warn!(
            "fan-out period spans only {:.1} samples; 8 or more recommended",
            period / pitch
        );
    }
    let values = grid.coords(axis).into_iter().map(|c| design.phase_at(c)).collect();
    Ok(PhaseScreen::along_axis(*grid, axis, values)?.wrapped(true))
}

/// Diffraction orders `c_m` for `|m| <= max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSpectrum {
    pub max_order: usize,
    pub half_orders: usize,
    /// `coeffs[k]` is order `m = k - max_order`.
    pub coeffs: Vec<Complex64>,
    /// `Σ_{|m|<=N} |c_m|²`.
    pub efficiency: f64,
    /// `(max - min)/mean` of `|c_m|²` over `|m| <= N`.
    pub uniformity_error: f64,
}

impl OrderSpectrum {
    fn from_coeffs(coeffs: Vec<Complex64>, max_order: usize, half_orders: usize) -> Self {
        let signal: Vec<f64> = (max_order - half_orders..=max_order + half_orders)
            .map(|k| coeffs[k].norm_sqr())
            .collect();
        let (efficiency, uniformity_error) = efficiency_and_uniformity(&signal);
        OrderSpectrum {
            max_order,
            half_orders,
            coeffs,
            efficiency,
            uniformity_error,
        }
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        self.coeffs[(m + self.max_order as i64) as usize]
    }

    /// Σ |c_m|² over every computed order.
    pub fn total_power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn efficiency_and_uniformity(signal: &[f64]) -> (f64, f64) {
    let eff: f64 = signal.iter().sum();
    let max = signal.iter().cloned().fold(f64::MIN, f64::max);
    let min = signal.iter().cloned().fold(f64::MAX, f64::min);
    let mean = eff / signal.len() as f64;
    (eff, if mean > 0.0 { (max - min) / mean } else { f64::INFINITY })
}

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Scan resolution for locating phase discontinuities.
const SCAN_SAMPLES: usize = 4096;
/// Longest quadrature panel, as a fraction of the period.
const MAX_PANEL: f64 = 1.0 / 512.0;

/// Points in [0, 1) where the phasor direction flips, i.e. where Σ passes
/// through (or close to) zero and Ψ jumps.
fn discontinuities(design: &FanoutDesign) -> Vec<f64> {
    let z: Vec<Complex64> = (0..=SCAN_SAMPLES)
        .map(|i| design.phasor(i as f64 / SCAN_SAMPLES as f64))
        .collect();
    let mut out = Vec::new();
    for i in 0..SCAN_SAMPLES {
        let (za, zb) = (z[i], z[i + 1]);
        if (za * zb.conj()).re > 0.0 {
            continue;
        }
        // Bisect on the sign of the projection onto the left phasor.
        let reference = if za.norm() > 0.0 { za } else { design.phasor((i as f64 - 0.5) / SCAN_SAMPLES as f64) };
        let (mut lo, mut hi) = (i as f64 / SCAN_SAMPLES as f64, (i + 1) as f64 / SCAN_SAMPLES as f64);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if (design.phasor(mid) * reference.conj()).re > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        if out.last().is_none_or(|&last: &f64| t - last > 1e-15) && t < 1.0 {
            out.push(t);
        }
    }
    out
}

/// `(node, weight)` pairs of a composite Gauss–Legendre rule on [0, 1]
/// with panel edges at every discontinuity of e^{iΨ}.
fn quadrature_rule(design: &FanoutDesign) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    edges.extend(discontinuities(design).into_iter().filter(|&t| t > 0.0));
    edges.push(1.0);
    let mut rule = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, wt) in GL8 {
                rule.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * wt));
            }
        }
    }
    rule
}

/// Computes `c_m` for `|m| <= max_order` by composite Gauss–Legendre
/// quadrature over one period (at least 4096 nodes, split at phase jumps).
pub fn order_spectrum(design: &FanoutDesign, max_order: usize) -> Result<OrderSpectrum> {
    if max_order < 3 * design.half_orders {
        return Err(Error::param(
            "max_order",
            format!("{max_order} < 3N = {}", 3 * design.half_orders),
        ));
    }
    let rule = quadrature_rule(design);
    let m_max = max_order as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * max_order + 1];
    for &(t, w) in &rule {
        let u = design.unit_phasor(t) * w;
        let step = Complex64::from_polar(1.0, -2.0 * PI * t);
        let mut e = Complex64::from_polar(1.0, 2.0 * PI * m_max as f64 * t);
        for c in coeffs.iter_mut() {
            *c += u * e;
            e *= step;
        }
    }
    Ok(OrderSpectrum::from_coeffs(coeffs, max_order, design.half_orders))
}

/// Fast objective for the search: uniform sampling, orders |m| <= N only.
struct CheapSpectrum {
    n: usize,
    samples: usize,
    /// `basis[m + N][s] = e^{i2πms/S}`.
    basis: Vec<Vec<Complex64>>,
}

impl CheapSpectrum {
    fn new(n: usize, samples: usize) -> Self {
        let basis = (-(n as i64)..=n as i64)
            .map(|m| {
                (0..samples)
                    .map(|s| Complex64::from_polar(1.0, 2.0 * PI * (m * s as i64) as f64 / samples as f64))
                    .collect()
            })
            .collect();
        CheapSpectrum { n, samples, basis }
    }

    fn signal(&self, gamma: &[f64], alpha: &[f64]) -> Vec<f64> {
        let weights: Vec<Complex64> = gamma
            .iter()
            .zip(alpha)
            .map(|(g, a)| Complex64::from_polar(*g, *a))
            .collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); 2 * self.n + 1];
        for s in 0..self.samples {
            let z: Complex64 = weights.iter().zip(&self.basis).map(|(w, b)| w * b[s]).sum();
            let r = z.norm();
            let u = if r > 0.0 { z / r } else { Complex64::new(1.0, 0.0) };
            for (a, b) in acc.iter_mut().zip(&self.basis) {
                *a += u * b[s].conj();
            }
        }
        let scale = 1.0 / (self.samples as f64 * self.samples as f64);
        acc.iter().map(|c| c.norm_sqr() * scale).collect()
    }
}

/// Settings for [`optimize_fanout`].
#[derive(Debug, Clone)]
pub struct FanoutSearch {
    pub starts: usize,
    pub seed: u64,
    /// Uniformity target; the objective penalizes the excess tenfold.
    pub uniformity_target: f64,
    /// Designs with efficiency below this are reported as failures.
    pub efficiency_floor: f64,
}

impl Default for FanoutSearch {
    fn default() -> Self {
        FanoutSearch {
            starts: 64,
            seed: 0,
            uniformity_target: 0.02,
            efficiency_floor: 0.90,
        }
    }
}

/// An optimized design with its high-resolution spectrum.
#[derive(Debug, Clone)]
pub struct FanoutSolution {
    pub design: FanoutDesign,
    pub spectrum: OrderSpectrum,
}

fn unpack(params: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    // params = [γ_0, γ_1, .., γ_N, α_{-N}, .., α_N]; γ_{-m} = γ_m.
    let gamma = (-(n as i64)..=n as i64)
        .map(|m| params[m.unsigned_abs() as usize].abs())
        .collect();
    let alpha = params[n + 1..].to_vec();
    (gamma, alpha)
}

fn score(eff: f64, unif: f64, target: f64) -> f64 {
    eff - 10.0 * (unif - target).max(0.0)
}

/// Searches `{γ_m, α_m}` (with `γ_{-m} = γ_m`) for an efficient, uniform
/// `copies`-way splitter with angular separation `separation`.
///
/// Multi-start Nelder–Mead on the objective
/// `efficiency - 10·max(0, uniformity_error - target)`, followed by a
/// polish of the best candidates against the quadrature spectrum.
/// Deterministic for a given `search.seed`.
pub fn optimize_fanout(copies: usize, separation: f64, wavelength: f64, search: &FanoutSearch) -> Result<FanoutSolution> {
    if copies % 2 == 0 || copies == 0 {
        return Err(Error::param("copies", format!("{copies} must be odd")));
    }
    if copies == 1 {
        let design = FanoutDesign::trivial(separation, wavelength);
        let spectrum = order_spectrum(&design, 1)?;
        return Ok(FanoutSolution { design, spectrum });
    }
    let n = copies / 2;
    let dim = 3 * n + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let starts: Vec<Vec<f64>> = (0..search.starts.max(1))
        .map(|_| {
            (0..dim)
                .map(|k| if k <= n { rng.random_range(0.3..1.0) } else { rng.random_range(0.0..2.0 * PI) })
                .collect()
        })
        .collect();
    let mut steps = vec![0.15; n + 1];
    steps.extend(std::iter::repeat_n(0.6, 2 * n + 1));

    let cheap = CheapSpectrum::new(n, 256);
    let target = search.uniformity_target;
    let cheap_cost = |p: &[f64]| {
        let (g, a) = unpack(p, n);
        let (eff, unif) = efficiency_and_uniformity(&cheap.signal(&g, &a));
        -score(eff, unif, target)
    };
    let settings = NelderMead {
        max_evals: 3000 * dim,
        tolerance: 1e-11,
        restarts: 2,
    };
    let mut found: Vec<(f64, usize, Vec<f64>)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            let (x, fx) = nelder_mead(&cheap_cost, x0, &steps, &settings);
            (fx, k, x)
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let accurate_cost = |p: &[f64]| {
        let (g, a) = unpack(p, n);
        match FanoutDesign::new(n, separation, g, a, wavelength).and_then(|d| order_spectrum(&d, 3 * n)) {
            Ok(s) => -score(s.efficiency, s.uniformity_error, target),
            Err(_) => f64::INFINITY,
        }
    };
    let polish = NelderMead {
        max_evals: 400 * dim,
        tolerance: 1e-12,
        restarts: 1,
    };
    let polish_steps: Vec<f64> = steps.iter().map(|s| s * 0.05).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, _, x) in found.iter().take(4) {
        let (x, fx) = nelder_mead(&accurate_cost, x, &polish_steps, &polish);
        if best.as_ref().is_none_or(|(bf, _)| fx < *bf) {
            best = Some((fx, x));
        }
    }
    let (_, x) = best.expect("at least one start");
    let (gamma, alpha) = unpack(&x, n);
    let alpha = alpha.into_iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
    let design = FanoutDesign::new(n, separation, gamma, alpha, wavelength)?;
    let spectrum = order_spectrum(&design, 3 * n)?;
    if spectrum.efficiency < search.efficiency_floor {
        return Err(Error::OptimizationFailed {
            efficiency: spectrum.efficiency,
            uniformity: spectrum.uniformity_error,
            best: Box::new(design),
        });
    }
    Ok(FanoutSolution { design, spectrum })
}

/// Piecewise-constant screen giving window `m` (centred at `m·copy_pitch`,
/// width `copy_pitch`) the phase `-arg(c_m)` for `|m| <= N`, zero elsewhere.
pub fn build_phase_corrector(design: &FanoutDesign, copy_pitch: f64, grid: &GridSpec, axis: Axis) -> Result<PhaseScreen> {
    if !(copy_pitch > 0.0) {
        return Err(Error::param("copy_pitch", "must be > 0"));
    }
    let n = design.half_orders as i64;
    let reach = (n as f64 + 0.5) * copy_pitch;
    let half = grid.half_extent(axis);
    if reach > half {
        return Err(Error::ExceedsGrid {
            what: "corrector windows",
            reason: format!("windows reach ±{reach:.4e} m, grid half-extent is {half:.4e} m"),
        });
    }
    let spectrum = order_spectrum(design, (3 * design.half_orders).max(1))?;
    let values = grid
        .coords(axis)
        .into_iter()
        .map(|c| {
            let m = (c / copy_pitch).round() as i64;
            if m.abs() <= n {
                -spectrum.coefficient(m).arg()
            } else {
                0.0
            }
        })
        .collect();
    Ok(PhaseScreen::along_axis(*grid, axis, values)?.wrapped(true))
}

/// Structured text form of a design and its spectrum: `key = value` lines,
/// preceded by `header` lines verbatim.
pub fn design_to_text(design: &FanoutDesign, spectrum: &OrderSpectrum, status: &str, header: &str) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(", ");
    let mut s = String::from(header);
    let _ = writeln!(s, "status = {status}");
    let _ = writeln!(s, "copies = {}", design.copies());
    let _ = writeln!(s, "separation_rad = {:.17e}", design.separation);
    let _ = writeln!(s, "wavelength_m = {:.17e}", design.wavelength);
    let _ = writeln!(s, "gamma = {}", join(&design.gamma));
    let _ = writeln!(s, "alpha = {}", join(&design.alpha));
    let _ = writeln!(s, "efficiency = {:.12}", spectrum.efficiency);
    let _ = writeln!(s, "uniformity_error = {:.12}", spectrum.uniformity_error);
    let _ = writeln!(s, "spectrum_max_order = {}", spectrum.max_order);
    for (k, c) in spectrum.coeffs.iter().enumerate() {
        let m = k as i64 - spectrum.max_order as i64;
        let _ = writeln!(s, "order[{m}] = {:.15e}, {:.15e}", c.re, c.im);
    }
    s
}

/// Reads the design back from [`design_to_text`] output.
pub fn design_from_text(text: &str) -> Result<FanoutDesign> {
    let mut fields = std::collections::HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &'static str| fields.get(k).ok_or_else(|| Error::param("design", format!("missing `{k}`")));
    let num = |k: &'static str| -> Result<f64> {
        get(k)?.parse().map_err(|e| Error::param("design", format!("`{k}`: {e}")))
    };
    let list = |k: &'static str| -> Result<Vec<f64>> {
        get(k)?
            .split(',')
            .map(|x| x.trim().parse().map_err(|e| Error::param("design", format!("`{k}`: {e}"))))
            .collect()
    };
    let copies = num("copies")? as usize;
    FanoutDesign::new(copies / 2, num("separation_rad")?, list("gamma")?, list("alpha")?, num("wavelength_m")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::fft2_inplace;
    use ndarray::Array2;

    const LAMBDA: f64 = 632.8e-9;

    /// Orders of one period rendered on a grid, via FFT.
    fn fft_orders(design: &FanoutDesign, samples: usize, max_order: i64) -> Vec<Complex64> {
        let d = design.period();
        let grid = GridSpec::new(samples, 64, d / samples as f64, 1.0).unwrap();
        let screen = fanout_phase(&grid, design, Axis::X).unwrap();
        let mut data = Array2::from_shape_fn((64, samples), |(j, i)| Complex64::from_polar(1.0, screen.phase_at(i, j)));
        fft2_inplace(&mut data);
        // Row transform of a column-constant image lands in row 0, scaled by 64.
        // Grid starts at x = -d/2, which contributes (-1)^m.
        (-max_order..=max_order)
            .map(|m| {
                let k = m.rem_euclid(samples as i64) as usize;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                data[[0, k]] * sign / (64.0 * samples as f64)
            })
            .collect()
    }

    #[test]
    fn single_term_is_constant() {
        let d = FanoutDesign::new(0, 1e-3, vec![1.0], vec![0.7], LAMBDA).unwrap();
        let grid = GridSpec::square(64, 1e-5).unwrap();
        let s = fanout_phase(&grid, &d, Axis::Y).unwrap();
        for j in 0..64 {
            assert!((s.phase_at(3, j) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn periodic() {
        let d = FanoutDesign::new(2, 2e-3, vec![0.4, 0.9, 1.0, 0.7, 0.2], vec![0.1, 2.0, -1.0, 0.5, 3.0], LAMBDA).unwrap();
        let p = d.period();
        for k in 0..50 {
            let x = k as f64 * 1.3e-6 - 3e-5;
            let a = d.phase_at(x);
            let b = d.phase_at(x + p);
            let diff = (a - b + PI).rem_euclid(2.0 * PI) - PI;
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn unresolvable_period_rejected() {
        let d = FanoutDesign::new(1, 0.1, vec![1.0; 3], vec![0.0; 3], LAMBDA).unwrap();
        let grid = GridSpec::square(64, d.period() / 1.5).unwrap();
        assert!(matches!(fanout_phase(&grid, &d, Axis::X), Err(Error::UnresolvablePeriod { .. })));
    }

    #[test]
    fn binary_design_matches_closed_form() {
        // γ = (1,1,1), α = 0: Ψ is 0 on |t| < 1/3 and π elsewhere, so
        // c_0 = 1/3 and c_m = 2 sin(2πm/3)/(πm).
        let d = FanoutDesign::new(1, 1e-3, vec![1.0; 3], vec![0.0; 3], LAMBDA).unwrap();
        let s = order_spectrum(&d, 6).unwrap();
        for m in -6i64..=6 {
            let exact = if m == 0 {
                1.0 / 3.0
            } else {
                2.0 * (2.0 * PI * m as f64 / 3.0).sin() / (PI * m as f64)
            };
            let c = s.coefficient(m);
            assert!((c - Complex64::new(exact, 0.0)).norm() < 1e-10, "m={m}: {c} vs {exact}");
        }
        // Uniform sampling converges only as 1/S across the jumps.
        let f = fft_orders(&d, 1 << 16, 1);
        for (k, m) in (-1i64..=1).enumerate() {
            assert!((f[k] - s.coefficient(m)).norm() < 1e-4);
        }
    }

    #[test]
    fn smooth_design_quadrature_equals_fft() {
        let d = FanoutDesign::new(1, 1e-3, vec![0.3, 1.0, 0.3], vec![0.4, 0.0, -0.2], LAMBDA).unwrap();
        let s = order_spectrum(&d, 6).unwrap();
        let f = fft_orders(&d, 4096, 6);
        for (k, m) in (-6i64..=6).enumerate() {
            assert!((f[k] - s.coefficient(m)).norm() < 1e-10);
        }
    }

    #[test]
    fn trivial_spectrum() {
        let d = FanoutDesign::trivial(1e-3, LAMBDA);
        let s = order_spectrum(&d, 3).unwrap();
        assert!((s.coefficient(0).norm_sqr() - 1.0).abs() < 1e-14);
        for m in [-3i64, -2, -1, 1, 2, 3] {
            assert!(s.coefficient(m).norm_sqr() < 1e-12);
        }
        assert!(order_spectrum(&FanoutDesign::new(2, 1e-3, vec![1.0; 5], vec![0.0; 5], LAMBDA).unwrap(), 5).is_err());
    }

    #[test]
    fn corrector_windows() {
        let d = FanoutDesign::new(1, 1e-3, vec![0.5, 1.0, 0.5], vec![0.3, 1.1, -0.4], LAMBDA).unwrap();
        let spec = order_spectrum(&d, 3).unwrap();
        let grid = GridSpec::new(64, 512, 1.0, 1.0).unwrap();
        let c = build_phase_corrector(&d, 100.0, &grid, Axis::Y).unwrap();
        let at = |y: f64| c.phase_at(0, (y + 256.0) as usize);
        assert!((at(0.0) + spec.coefficient(0).arg()).abs() < 1e-15);
        assert!((at(-120.0) + spec.coefficient(-1).arg()).abs() < 1e-15);
        assert!((at(149.0) + spec.coefficient(1).arg()).abs() < 1e-15);
        assert_eq!(at(151.0), 0.0);
        assert!(build_phase_corrector(&d, 200.0, &grid, Axis::Y).is_err());

        let doubled = c.scaled(2.0);
        for j in 0..512 {
            assert_eq!(doubled.phase_at(0, j), 2.0 * c.phase_at(0, j));
        }
    }

    #[test]
    fn corrector_is_zero_for_real_positive_orders() {
        let d = FanoutDesign::trivial(1e-3, LAMBDA);
        let grid = GridSpec::square(64, 1.0).unwrap();
        let c = build_phase_corrector(&d, 10.0, &grid, Axis::X).unwrap();
        assert!(c.to_array().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn design_text_roundtrip() {
        let d = FanoutDesign::new(1, 2.5e-3, vec![0.5, 1.0, 0.5], vec![0.3, 1.1, -0.4], LAMBDA).unwrap();
        let s = order_spectrum(&d, 3).unwrap();
        let text = design_to_text(&d, &s, "OK", "# header\n");
        assert_eq!(design_from_text(&text).unwrap(), d);
    }

    #[test]
    fn copies_one_is_trivial() {
        let sol = optimize_fanout(1, 1e-3, LAMBDA, &FanoutSearch::default()).unwrap();
        assert_eq!(sol.design.copies(), 1);
        assert!((sol.spectrum.efficiency - 1.0).abs() < 1e-12);
        assert!(optimize_fanout(4, 1e-3, LAMBDA, &FanoutSearch::default()).is_err());
    }

    #[test]
    fn three_copy_search_is_deterministic() {
        let search = FanoutSearch {
            starts: 8,
            seed: 5,
            ..FanoutSearch::default()
        };
        let a = optimize_fanout(3, 1e-3, LAMBDA, &search).unwrap();
        let b = optimize_fanout(3, 1e-3, LAMBDA, &search).unwrap();
        assert_eq!(a.design, b.design);
        // Optimal continuous-phase triplicator is ~0.9256 efficient.
        assert!(a.spectrum.efficiency > 0.92, "{}", a.spectrum.efficiency);
        assert!(a.spectrum.uniformity_error <= 0.02 + 1e-9);
    }
}
