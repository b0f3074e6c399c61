//! The four subcommands. Each computes everything first and writes its
//! artifacts afterwards; a failed write removes whatever was already
//! written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use oamsort_core::export::{field_phase_image, heatmap_image, intensity_image, screen_phase_image, write_png, Image8};
use oamsort_core::fanout::{build_phase_corrector, design_to_text, fanout_phase, optimize_fanout, order_spectrum, FanoutSearch};
use oamsort_core::metrics::{max_neighbour_leakage, mutual_information, neighbour_fraction, separation_efficiency};
use oamsort_core::modes::make_mode;
use oamsort_core::{Axis, CrosstalkMatrix, Error, FanoutDesign, FocalProfiles, GridSpec, ModeKind, ModeSpec, Sorter, SorterConfig};

use crate::config::{path_name, RunConfig};

pub const VERSION: &str = concat!("oamsort ", env!("CARGO_PKG_VERSION"));

/// Why a command stopped, which decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Validation(Error),
    Runtime(Error),
    Optimization(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Optimization(_) => 3,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) | Failure::Optimization(e) => e,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e)
}

/// Files written by one command. Unless committed, they are deleted when
/// this goes out of scope.
struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    fn new(dir: &Path) -> Outcome<Self> {
        fs::create_dir_all(dir).map_err(|source| {
            runtime(Error::Io {
                path: dir.to_path_buf(),
                source,
            })
        })?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn text(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|source| runtime(Error::Io { path, source }))
    }

    fn png(&mut self, name: &str, image: &Image8, config: &RunConfig) -> Outcome<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        let text = config.to_text();
        write_png(&path, image, &[("Software", VERSION), ("Config", &text)]).map_err(runtime)
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn header(command: &str, config: &RunConfig) -> String {
    format!("# {VERSION} {command}\n{}", config.embedded())
}

fn sorter_config(config: &RunConfig) -> Outcome<SorterConfig> {
    config.sorter_config().map_err(Failure::Validation)
}

fn search(config: &RunConfig) -> FanoutSearch {
    FanoutSearch {
        starts: config.starts,
        seed: config.seed,
        ..Default::default()
    }
}

/// The optimized fan-out for `config.copies`, or `None` without copies.
fn design_for(config: &RunConfig, geometry: &SorterConfig) -> Outcome<Option<FanoutDesign>> {
    if config.copies == 0 {
        return Ok(None);
    }
    optimize_fanout(config.copies, geometry.required_separation(), geometry.optics.wavelength, &search(config))
        .map(|s| Some(s.design))
        .map_err(|e| match e {
            e @ Error::OptimizationFailed { .. } => Failure::Optimization(e),
            e => Failure::Validation(e),
        })
}

fn build_sorter(config: &RunConfig) -> Outcome<Sorter> {
    let geometry = sorter_config(config)?;
    let design = design_for(config, &geometry)?;
    Sorter::new(geometry.with_fanout(design)).map_err(Failure::Validation)
}

fn mode_label(mode: &ModeSpec) -> String {
    match mode.kind {
        ModeKind::Oam => format!("l={}", mode.index),
        ModeKind::Ang => format!("j={}", mode.index),
    }
}

fn crosstalk_csv(x: &CrosstalkMatrix, head: &str) -> String {
    let mut s = String::from(head);
    s.push_str("sent");
    for m in &x.modes {
        let _ = write!(s, ",{}", mode_label(m));
    }
    s.push('\n');
    for (j, m) in x.modes.iter().enumerate() {
        s.push_str(&mode_label(m));
        for k in 0..x.modes.len() {
            let _ = write!(s, ",{:.9e}", x.p[[k, j]]);
        }
        s.push('\n');
    }
    s
}

/// Profiles on the detector axis, limited to the bins plus two bin widths
/// either side, with the bin edges listed in the header.
fn profiles_csv(fp: &FocalProfiles, basis: &[ModeSpec], head: &str) -> String {
    let mut s = String::from(head);
    for (k, m) in basis.iter().enumerate() {
        let (lo, hi) = fp.bins.edges(k);
        let _ = writeln!(s, "# bin {} = [{lo:.9e}, {hi:.9e}] m", mode_label(m));
    }
    s.push_str("coordinate_m");
    for m in &fp.modes {
        let _ = write!(s, ",{}", mode_label(m));
    }
    s.push('\n');
    let (lo, hi) = fp.bins.span();
    let margin = 2.0 * fp.bins.width;
    let Some(first) = fp.profiles.first() else {
        return s;
    };
    for (i, &c) in first.coords.iter().enumerate() {
        if c < lo - margin || c > hi + margin {
            continue;
        }
        let _ = write!(s, "{c:.9e}");
        for p in &fp.profiles {
            let _ = write!(s, ",{:.9e}", p.values[i]);
        }
        s.push('\n');
    }
    s
}

/// What `run` measured.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub separation_efficiency: f64,
    pub mutual_information: f64,
    pub files: Vec<PathBuf>,
}

pub fn run(config: &RunConfig) -> Outcome<RunSummary> {
    let sorter = build_sorter(config)?;
    let (x, profiles) = sorter.crosstalk_with_profiles().map_err(runtime)?;
    let basis = x.modes.clone();

    let eff = separation_efficiency(&x.p);
    let mi = mutual_information(&x.p);
    let head = header("run", config);
    let mut report = head.clone();
    let _ = writeln!(report, "path = {}", path_name(config.path));
    let _ = writeln!(report, "copies = {}", config.copies);
    let _ = writeln!(report, "separation_efficiency = {eff:.6}");
    let _ = writeln!(report, "mutual_information_bits = {mi:.6}");
    let _ = writeln!(report, "neighbour_fraction = {:.6}", neighbour_fraction(&x.p));
    let _ = writeln!(report, "max_neighbour_leakage = {:.6}", max_neighbour_leakage(&x.p));
    if let Some(spec) = sorter.spectrum() {
        let _ = writeln!(report, "fanout_efficiency = {:.6}", spec.efficiency);
        let _ = writeln!(report, "fanout_uniformity_error = {:.6}", spec.uniformity_error);
    }
    let _ = writeln!(report, "bin_width_m = {:.9e}", sorter.bins().width);
    for (m, c) in basis.iter().zip(&x.captured_fraction) {
        let _ = writeln!(report, "captured_fraction[{}] = {c:.6}", mode_label(m));
    }

    let mut out = Artifacts::new(&config.out_dir)?;
    out.text("crosstalk.csv", &crosstalk_csv(&x, &head))?;
    out.png("crosstalk.png", &heatmap_image(&x.p), config)?;
    out.text("report.txt", &report)?;
    out.text("profiles.csv", &profiles_csv(&profiles, &basis, &head))?;
    if let (Some(design), Some(spec)) = (&sorter.config().fanout, sorter.spectrum()) {
        out.text("fanout.design", &design_to_text(design, spec, "ok", &head))?;
    }
    Ok(RunSummary {
        separation_efficiency: eff,
        mutual_information: mi,
        files: out.commit(),
    })
}

/// Focal line-outs of the seven modes whose bins sit nearest the detector
/// centre.
pub fn profiles(config: &RunConfig) -> Outcome<Vec<PathBuf>> {
    let sorter = build_sorter(config)?;
    let basis = ModeSpec::basis(config.path, config.max_l);
    let centers = &sorter.bins().centers;
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| centers[a].abs().total_cmp(&centers[b].abs()));
    let mut picked: Vec<usize> = order.into_iter().take(7).collect();
    picked.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let modes: Vec<ModeSpec> = picked.iter().map(|&k| basis[k]).collect();
    let fp = sorter.focal_profiles(&modes).map_err(runtime)?;

    let mut out = Artifacts::new(&config.out_dir)?;
    out.text("profiles.csv", &profiles_csv(&fp, &basis, &header("profiles", config)))?;
    Ok(out.commit())
}

/// Phase images of a fan-out and its corrector on windows of the sorter's
/// grids.
fn element_images(sorter: &Sorter, design: &FanoutDesign) -> Outcome<(Image8, Image8)> {
    let fg = sorter.fanout_grid();
    let window = GridSpec::new(512, 512, fg.pitch_x, fg.pitch_y).map_err(runtime)?;
    let fan = fanout_phase(&window, design, Axis::Y).map_err(runtime)?;
    let cg = sorter.corrector_grid();
    let copy_pitch = sorter.config().copy_pitch();
    let span = 2.0 * (design.half_orders as f64 + 1.0) * copy_pitch;
    let window = GridSpec::new(256, 1024, cg.pitch_x, span / 1024.0).map_err(runtime)?;
    let cor = build_phase_corrector(design, copy_pitch, &window, Axis::Y).map_err(runtime)?;
    Ok((screen_phase_image(&fan), screen_phase_image(&cor)))
}

/// What `fanout-opt` produced.
#[derive(Debug, Clone)]
pub struct FanoutSummary {
    pub efficiency: f64,
    pub uniformity_error: f64,
    pub files: Vec<PathBuf>,
}

pub fn fanout_opt(config: &RunConfig) -> Outcome<FanoutSummary> {
    if config.copies == 0 {
        return Err(Failure::Validation(Error::Config(vec![oamsort_core::ConfigDiagnostic {
            key: "copies".into(),
            message: "fanout-opt needs an odd number of copies".into(),
        }])));
    }
    let geometry = sorter_config(config)?;
    let head = header("fanout-opt", config);
    let solution = match optimize_fanout(config.copies, geometry.required_separation(), geometry.optics.wavelength, &search(config)) {
        Ok(s) => s,
        Err(Error::OptimizationFailed { efficiency, uniformity, best }) => {
            // Keep the best design for inspection, then report the failure.
            let spec = order_spectrum(&best, 3 * best.half_orders.max(1)).map_err(runtime)?;
            let mut out = Artifacts::new(&config.out_dir)?;
            out.text("fanout.design", &design_to_text(&best, &spec, "FAILED", &head))?;
            out.commit();
            return Err(Failure::Optimization(Error::OptimizationFailed { efficiency, uniformity, best }));
        }
        Err(e) => return Err(Failure::Validation(e)),
    };
    let sorter = Sorter::new(geometry.with_fanout(Some(solution.design.clone()))).map_err(Failure::Validation)?;
    let (fan, cor) = element_images(&sorter, &solution.design)?;

    let mut out = Artifacts::new(&config.out_dir)?;
    out.text("fanout.design", &design_to_text(&solution.design, &solution.spectrum, "ok", &head))?;
    out.png("fanout_phase.png", &fan, config)?;
    out.png("corrector_phase.png", &cor, config)?;
    Ok(FanoutSummary {
        efficiency: solution.spectrum.efficiency,
        uniformity_error: solution.spectrum.uniformity_error,
        files: out.commit(),
    })
}

/// Intensity and phase images of a spread of OAM and ANG modes.
pub fn modes(config: &RunConfig) -> Outcome<Vec<PathBuf>> {
    let geometry = sorter_config(config)?;
    let l = config.max_l as i32;
    let mut picks: Vec<ModeSpec> = Vec::new();
    for ell in [-l, -l / 2, 0, l / 2, l] {
        picks.push(ModeSpec::oam(ell, config.max_l).map_err(Failure::Validation)?);
    }
    let d = 2 * l + 1;
    for j in [0, d / 4, d / 2, 3 * d / 4, d - 1] {
        picks.push(ModeSpec::ang(j, config.max_l).map_err(Failure::Validation)?);
    }
    picks.dedup();
    let mut images = Vec::new();
    for m in &picks {
        let field = make_mode(*m, &geometry.envelope, &geometry.input).map_err(runtime)?;
        let stem = match m.kind {
            ModeKind::Oam => format!("mode_oam_l{}", m.index),
            ModeKind::Ang => format!("mode_ang_j{}", m.index),
        };
        images.push((format!("{stem}_intensity.png"), intensity_image(&field)));
        images.push((format!("{stem}_phase.png"), field_phase_image(&field)));
    }
    let mut out = Artifacts::new(&config.out_dir)?;
    for (name, image) in &images {
        out.png(name, image, config)?;
    }
    Ok(out.commit())
}
