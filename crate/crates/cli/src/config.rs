//! Flat `key = value` run configuration.
//!
//! `#` starts a comment. A file that contains `#@ key = value` lines (as
//! every artifact written by this tool does) is read from those lines only,
//! so an artifact can be fed back as the config that produced it. On those
//! lines a trailing `# default` marks a value that was not given explicitly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use oamsort_core::logpolar::{TransformOptics, UnwrapStage};
use oamsort_core::sorter::{DEFAULT_FOCAL_LENGTH, DEFAULT_GRID_N, DEFAULT_MAX_L, DEFAULT_PITCH, DEFAULT_RING_RADIUS, DEFAULT_STRIP_FRACTION, DEFAULT_WAVELENGTH};
use oamsort_core::{ConfigDiagnostic, EnvelopeSpec, Error, GridSpec, ModeKind, Result, SorterConfig};

pub const EMBED_PREFIX: &str = "#@ ";
const DEFAULT_MARK: &str = "default";

/// Keys in the order they are echoed.
pub const KEYS: &[&str] = &[
    "grid_n", "pitch", "wavelength", "r0", "sigma", "a", "b", "f", "f_l1", "f_ft", "f_l2", "copies", "path", "max_l",
    "seed", "starts", "canvas_nu", "canvas_nv", "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub pitch: f64,
    pub wavelength: f64,
    pub r0: f64,
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    /// Focal length between the two log-polar elements.
    pub f: f64,
    pub f_l1: f64,
    pub f_ft: f64,
    pub f_l2: f64,
    /// 0 disables the fan-out; otherwise odd.
    pub copies: usize,
    pub path: ModeKind,
    pub max_l: u32,
    pub seed: u64,
    /// Random starts of the fan-out search.
    pub starts: usize,
    pub canvas_nu: usize,
    pub canvas_nv: usize,
    pub out_dir: PathBuf,
    /// Keys given explicitly; everything else was defaulted.
    pub explicit: BTreeSet<String>,
}

/// Explicit values before derived defaults are filled in.
#[derive(Default)]
struct Raw {
    grid_n: Option<usize>,
    pitch: Option<f64>,
    wavelength: Option<f64>,
    r0: Option<f64>,
    sigma: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    f: Option<f64>,
    f_l1: Option<f64>,
    f_ft: Option<f64>,
    f_l2: Option<f64>,
    copies: Option<usize>,
    path: Option<ModeKind>,
    max_l: Option<u32>,
    seed: Option<u64>,
    starts: Option<usize>,
    canvas_nu: Option<usize>,
    canvas_nv: Option<usize>,
    out_dir: Option<PathBuf>,
    /// Keys whose embedded line carried the default marker.
    defaulted: BTreeSet<String>,
}

fn diag(key: &str, message: impl Into<String>) -> ConfigDiagnostic {
    ConfigDiagnostic {
        key: key.to_string(),
        message: message.into(),
    }
}

pub fn parse_path(value: &str) -> Option<ModeKind> {
    match value.to_ascii_lowercase().as_str() {
        "oam" => Some(ModeKind::Oam),
        "ang" => Some(ModeKind::Ang),
        _ => None,
    }
}

pub fn path_name(path: ModeKind) -> &'static str {
    match path {
        ModeKind::Oam => "oam",
        ModeKind::Ang => "ang",
    }
}

/// `(line number, content, marked default)` for every config line.
fn config_lines(text: &str) -> Vec<(usize, String, bool)> {
    let split = |l: &str| {
        let (body, comment) = l.split_once('#').unwrap_or((l, ""));
        (body.to_string(), comment.trim() == DEFAULT_MARK)
    };
    let embedded: Vec<_> = text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| l.strip_prefix(EMBED_PREFIX).map(|rest| (i + 1, split(rest))))
        .map(|(i, (body, default))| (i, body, default))
        .collect();
    if !embedded.is_empty() {
        return embedded;
    }
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, split(l).0, false))
        .collect()
}

fn parse_raw(text: &str, diags: &mut Vec<ConfigDiagnostic>) -> Raw {
    let mut raw = Raw::default();
    let mut seen = BTreeSet::new();
    for (line_no, line, defaulted) in config_lines(text) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            diags.push(diag(&format!("line {line_no}"), format!("expected `key = value`, got `{line}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) && KEYS.contains(&key) {
            diags.push(diag(key, format!("given more than once (line {line_no})")));
            continue;
        }
        if defaulted {
            raw.defaulted.insert(key.to_string());
        }
        macro_rules! num {
            ($field:ident) => {
                match value.parse() {
                    Ok(v) => raw.$field = Some(v),
                    Err(e) => diags.push(diag(key, format!("`{value}`: {e}"))),
                }
            };
        }
        match key {
            "grid_n" => num!(grid_n),
            "pitch" => num!(pitch),
            "wavelength" => num!(wavelength),
            "r0" => num!(r0),
            "sigma" => num!(sigma),
            "a" => num!(a),
            "b" => num!(b),
            "f" => num!(f),
            "f_l1" => num!(f_l1),
            "f_ft" => num!(f_ft),
            "f_l2" => num!(f_l2),
            "copies" => num!(copies),
            "max_l" => num!(max_l),
            "seed" => num!(seed),
            "starts" => num!(starts),
            "canvas_nu" => num!(canvas_nu),
            "canvas_nv" => num!(canvas_nv),
            "path" => match parse_path(value) {
                Some(p) => raw.path = Some(p),
                None => diags.push(diag(key, format!("`{value}` must be `oam` or `ang`"))),
            },
            "out_dir" => raw.out_dir = Some(PathBuf::from(value)),
            _ => diags.push(diag(key, "unknown key")),
        }
    }
    raw
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub copies: Option<usize>,
    pub path: Option<ModeKind>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Parses, applies overrides and defaults, and validates. Every problem is
/// reported against its key.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut diags = Vec::new();
    let mut raw = parse_raw(text, &mut diags);
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = overrides.$field.clone() {
                raw.$field = Some(v);
                raw.defaulted.remove(stringify!($field));
            })*
        };
    }
    apply!(copies, path, seed, out_dir);
    if !diags.is_empty() {
        return Err(Error::Config(diags));
    }
    let config = resolve(raw);
    let diags = config.validate();
    if diags.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(diags))
    }
}

pub fn parse_config_file(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

fn resolve(raw: Raw) -> RunConfig {
    let mut explicit = BTreeSet::new();
    macro_rules! mark {
        ($($field:ident),*) => {
            $(if raw.$field.is_some() && !raw.defaulted.contains(stringify!($field)) {
                explicit.insert(stringify!($field).to_string());
            })*
        };
    }
    mark!(grid_n, pitch, wavelength, r0, sigma, a, b, f, f_l1, f_ft, f_l2, copies, path, max_l, seed, starts, canvas_nu, canvas_nv, out_dir);

    let grid_n = raw.grid_n.unwrap_or(DEFAULT_GRID_N);
    let pitch = raw.pitch.unwrap_or(DEFAULT_PITCH);
    let wavelength = raw.wavelength.unwrap_or(DEFAULT_WAVELENGTH);
    let r0 = raw.r0.unwrap_or(DEFAULT_RING_RADIUS);
    let f = raw.f.unwrap_or(DEFAULT_FOCAL_LENGTH);
    // The strip default needs a valid grid; validation reports bad grids.
    let a = raw.a.unwrap_or_else(|| match GridSpec::square(grid_n, pitch) {
        Ok(g) => TransformOptics::a_for_strip_fraction(&g, f, wavelength, DEFAULT_STRIP_FRACTION),
        Err(_) => f64::NAN,
    });
    RunConfig {
        grid_n,
        pitch,
        wavelength,
        r0,
        sigma: raw.sigma.unwrap_or(r0 / 4.0),
        a,
        b: raw.b.unwrap_or(r0),
        f,
        f_l1: raw.f_l1.unwrap_or(DEFAULT_FOCAL_LENGTH),
        f_ft: raw.f_ft.unwrap_or(DEFAULT_FOCAL_LENGTH),
        f_l2: raw.f_l2.unwrap_or(DEFAULT_FOCAL_LENGTH),
        copies: raw.copies.unwrap_or(7),
        path: raw.path.unwrap_or(ModeKind::Oam),
        max_l: raw.max_l.unwrap_or(DEFAULT_MAX_L),
        seed: raw.seed.unwrap_or(0),
        starts: raw.starts.unwrap_or(64),
        canvas_nu: raw.canvas_nu.unwrap_or(grid_n / 2),
        canvas_nv: raw.canvas_nv.unwrap_or(32 * grid_n),
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        explicit,
    }
}

impl RunConfig {
    /// All defaults.
    pub fn defaults() -> Self {
        resolve(Raw::default())
    }

    fn validate(&self) -> Vec<ConfigDiagnostic> {
        let mut d = Vec::new();
        for (key, v) in [
            ("pitch", self.pitch),
            ("wavelength", self.wavelength),
            ("r0", self.r0),
            ("sigma", self.sigma),
            ("a", self.a),
            ("b", self.b),
            ("f", self.f),
            ("f_l1", self.f_l1),
            ("f_ft", self.f_ft),
            ("f_l2", self.f_l2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                d.push(diag(key, format!("{v} must be a positive number")));
            }
        }
        for (key, n) in [("grid_n", self.grid_n), ("canvas_nu", self.canvas_nu), ("canvas_nv", self.canvas_nv)] {
            if n < 64 || n % 2 != 0 {
                d.push(diag(key, format!("{n} must be even and at least 64")));
            }
        }
        if self.copies != 0 && self.copies % 2 == 0 {
            d.push(diag("copies", format!("{}: copies must be odd or 0", self.copies)));
        }
        if self.max_l == 0 {
            d.push(diag("max_l", "must be at least 1"));
        }
        if self.starts == 0 {
            d.push(diag("starts", "must be at least 1"));
        }
        if !d.is_empty() {
            return d;
        }

        let grid = match GridSpec::square(self.grid_n, self.pitch) {
            Ok(g) => g,
            Err(e) => return vec![diag("grid_n", e.to_string())],
        };
        match EnvelopeSpec::new(self.r0, self.sigma).and_then(|e| e.check_fits(&grid)) {
            Ok(()) => {}
            Err(e) => d.push(diag("r0", e.to_string())),
        }
        let optics = match TransformOptics::new(self.a, self.b, self.f, self.wavelength) {
            Ok(o) => o,
            Err(e) => {
                d.push(diag("a", e.to_string()));
                return d;
            }
        };
        let stage = match UnwrapStage::new(&grid, optics) {
            Ok(s) => s,
            Err(e) => {
                d.push(diag("a", e.to_string()));
                return d;
            }
        };
        if d.is_empty() {
            let envelope = EnvelopeSpec::new(self.r0, self.sigma).expect("checked above");
            if let Err(e) = stage.check_envelope(&envelope) {
                d.push(diag("b", e.to_string()));
            }
            let (u_lo, u_hi) = optics.annulus_u_range(&envelope);
            let half_u = 0.5 * self.canvas_nu as f64 * stage.output_grid().pitch_x;
            if u_lo < -half_u || u_hi > half_u {
                d.push(diag(
                    "canvas_nu",
                    format!("annulus spans u in [{u_lo:.4e}, {u_hi:.4e}] m, canvas covers ±{half_u:.4e} m"),
                ));
            }
            let half_v = 0.5 * self.canvas_nv as f64 * stage.output_grid().pitch_y;
            if optics.strip_width() > 2.0 * half_v {
                d.push(diag("canvas_nv", format!("strip width {:.4e} m exceeds the canvas", optics.strip_width())));
            }
        }
        d
    }

    /// Sorter geometry without a fan-out.
    pub fn sorter_config(&self) -> Result<SorterConfig> {
        let input = GridSpec::square(self.grid_n, self.pitch)?;
        Ok(SorterConfig {
            input,
            envelope: EnvelopeSpec::new(self.r0, self.sigma)?,
            optics: TransformOptics::new(self.a, self.b, self.f, self.wavelength)?,
            fanout: None,
            path: self.path,
            f_l1: self.f_l1,
            f_ft: self.f_ft,
            f_l2: self.f_l2,
            max_l: self.max_l,
            canvas: (self.canvas_nu, self.canvas_nv),
        })
    }

    fn value(&self, key: &str) -> String {
        match key {
            "grid_n" => self.grid_n.to_string(),
            "pitch" => self.pitch.to_string(),
            "wavelength" => self.wavelength.to_string(),
            "r0" => self.r0.to_string(),
            "sigma" => self.sigma.to_string(),
            "a" => self.a.to_string(),
            "b" => self.b.to_string(),
            "f" => self.f.to_string(),
            "f_l1" => self.f_l1.to_string(),
            "f_ft" => self.f_ft.to_string(),
            "f_l2" => self.f_l2.to_string(),
            "copies" => self.copies.to_string(),
            "path" => path_name(self.path).to_string(),
            "max_l" => self.max_l.to_string(),
            "seed" => self.seed.to_string(),
            "starts" => self.starts.to_string(),
            "canvas_nu" => self.canvas_nu.to_string(),
            "canvas_nv" => self.canvas_nv.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Every key but `out_dir` as `key = value`, one per line, with
    /// defaulted keys marked. Floats print in shortest round-trip form, so
    /// parsing this text gives back the same config. The output directory
    /// is left out so that a re-run elsewhere writes identical artifacts.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS.iter().filter(|k| **k != "out_dir") {
            let _ = write!(s, "{key} = {}", self.value(key));
            if !self.explicit.contains(*key) {
                let _ = write!(s, " # {DEFAULT_MARK}");
            }
            s.push('\n');
        }
        s
    }

    /// [`RunConfig::to_text`] with each line behind [`EMBED_PREFIX`].
    pub fn embedded(&self) -> String {
        self.to_text().lines().map(|l| format!("{EMBED_PREFIX}{l}\n")).collect()
    }
}
