//! Run configuration and its text format: `key = value` lines grouped under
//! `[section]` headers, `#` comments, values are numbers, words or comma
//! separated lists. Every key can also be set from the command line as
//! `section.key=value`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::grid::read_columns;
use crate::spectral::{PotentialKind, PotentialSpec};

/// Environment variable overriding the output directory.
pub const OUTPUT_ENV: &str = "NLSLAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
    pub stretch: f64,
}

impl GridSpec {
    pub fn new(r_max: f64, n: usize, stretch: f64) -> Self {
        Self { r_max, n, stretch }
    }

    /// Same node density near the origin on a box `factor` times larger.
    pub fn enlarged(&self, factor: f64) -> Self {
        Self { r_max: self.r_max * factor, n: (self.n as f64 * factor).round() as usize, stretch: self.stretch }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatumRecipe {
    /// Ground-branch soliton Φ[z], z > 0.
    Soliton { z: f64 },
    /// Excited soliton at ω, dilated by S^t₂.
    Excited { omega: f64, scale_t: f64 },
    /// amplitude · α Q(α r)
    ScaledQ { alpha: f64, amplitude: f64 },
    /// amplitude · exp(−(r − center)²/width²)
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// Field file in the three-column text format.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    /// S^t₂ ladder through excited solitons.
    Ladder,
    /// Small multiples of φ₀ plus random bumps.
    Small,
    /// Random bump superpositions.
    Random,
}

impl FromStr for SweepFamily {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ladder" => Ok(SweepFamily::Ladder),
            "small" => Ok(SweepFamily::Small),
            "random" => Ok(SweepFamily::Random),
            other => Err(LabError::Config(format!("unknown sweep family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSpec {
    pub dt0: f64,
    pub dt_min: f64,
    pub t_max: f64,
    pub theta: f64,
    pub sample_interval: f64,
    pub sample_steps: usize,
    pub window: f64,
    pub virial_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub gate: f64,
    pub growth_factor: f64,
    pub drift_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub z_step: f64,
    pub z_max: f64,
    pub excited_omegas: Vec<f64>,
    pub defocusing_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub count: usize,
    pub omegas: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Required relative gap below 𝓔₁(M).
    pub margin: f64,
    pub amplitude: f64,
    pub sensitivity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub potential: PotentialSpec,
    pub sigma: Sigma,
    /// Grid for time evolution and the sweep.
    pub grid: GridSpec,
    /// Grid for Q and the excited branch.
    pub soliton_grid: GridSpec,
    /// Grid for the ground-branch bifurcation study.
    pub ground_grid: GridSpec,
    /// Grid for the defocusing branch.
    pub defocusing_grid: GridSpec,
    pub time: TimeSpec,
    pub thresholds: Thresholds,
    pub data: DatumRecipe,
    pub branch: BranchSpec,
    pub sweep: SweepSpec,
    pub output: PathBuf,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            potential: PotentialSpec::gaussian_well(5.0, 1.0),
            sigma: Sigma::Focusing,
            grid: GridSpec::new(100.0, 8000, 2000.0),
            soliton_grid: GridSpec::new(30.0, 32000, 500.0),
            ground_grid: GridSpec::new(40.0, 16000, 20.0),
            defocusing_grid: GridSpec::new(250.0, 16000, 50.0),
            time: TimeSpec {
                dt0: 1e-2,
                dt_min: 1e-10,
                t_max: 50.0,
                theta: 0.1,
                sample_interval: 0.1,
                sample_steps: 25,
                window: 5.0,
                virial_radius: 10.0,
            },
            thresholds: Thresholds { gate: 1.0, growth_factor: 20.0, drift_bound: 1e-4 },
            data: DatumRecipe::Soliton { z: 0.5 },
            branch: BranchSpec {
                z_step: 0.05,
                z_max: 2.6,
                excited_omegas: vec![2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 400.0],
                defocusing_points: 20,
            },
            sweep: SweepSpec {
                family: SweepFamily::Ladder,
                count: 40,
                omegas: vec![20.0, 50.0],
                t_min: 0.2,
                t_max: 0.6,
                margin: 0.05,
                amplitude: 0.05,
                sensitivity: true,
            },
            output: PathBuf::from("nlslab-out"),
            parallel: true,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| LabError::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(LabError::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

/// Raw `[data]` keys, resolved into a recipe once the whole file is read.
#[derive(Debug, Clone, Default)]
struct DataKeys {
    kind: Option<String>,
    z: Option<f64>,
    omega: Option<f64>,
    scale_t: Option<f64>,
    alpha: Option<f64>,
    amplitude: Option<f64>,
    width: Option<f64>,
    center: Option<f64>,
    file: Option<PathBuf>,
}

impl DataKeys {
    fn from_recipe(r: &DatumRecipe) -> Self {
        let mut k = DataKeys::default();
        match r {
            DatumRecipe::Soliton { z } => {
                k.kind = Some("soliton".into());
                k.z = Some(*z);
            }
            DatumRecipe::Excited { omega, scale_t } => {
                k.kind = Some("excited".into());
                k.omega = Some(*omega);
                k.scale_t = Some(*scale_t);
            }
            DatumRecipe::ScaledQ { alpha, amplitude } => {
                k.kind = Some("scaled_q".into());
                k.alpha = Some(*alpha);
                k.amplitude = Some(*amplitude);
            }
            DatumRecipe::Gaussian { amplitude, width, center } => {
                k.kind = Some("gaussian".into());
                k.amplitude = Some(*amplitude);
                k.width = Some(*width);
                k.center = Some(*center);
            }
            DatumRecipe::File { path } => {
                k.kind = Some("file".into());
                k.file = Some(path.clone());
            }
        }
        k
    }

    fn resolve(&self) -> Result<DatumRecipe> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| LabError::Config(format!("data.{name} is required")));
        match self.kind.as_deref().unwrap_or("soliton") {
            "soliton" => Ok(DatumRecipe::Soliton { z: need(self.z, "z")? }),
            "excited" => Ok(DatumRecipe::Excited { omega: need(self.omega, "omega")?, scale_t: self.scale_t.unwrap_or(0.0) }),
            "scaled_q" => Ok(DatumRecipe::ScaledQ { alpha: need(self.alpha, "alpha")?, amplitude: self.amplitude.unwrap_or(1.0) }),
            "gaussian" => Ok(DatumRecipe::Gaussian {
                amplitude: need(self.amplitude, "amplitude")?,
                width: self.width.unwrap_or(1.0),
                center: self.center.unwrap_or(0.0),
            }),
            "file" => Ok(DatumRecipe::File {
                path: self.file.clone().ok_or_else(|| LabError::Config("data.file is required".into()))?,
            }),
            other => Err(LabError::Config(format!("unknown data kind {other:?}"))),
        }
    }
}

/// Parser state: config under construction plus pieces resolved at the end.
struct Builder {
    cfg: RunConfig,
    data: DataKeys,
    potential_file: Option<PathBuf>,
    base_dir: Option<PathBuf>,
}

impl Builder {
    fn new(cfg: RunConfig, base_dir: Option<PathBuf>) -> Self {
        let data = DataKeys::from_recipe(&cfg.data);
        Self { cfg, data, potential_file: None, base_dir }
    }

    fn path(&self, v: &str) -> PathBuf {
        let p = PathBuf::from(v);
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        }
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let k = full.as_str();
        let c = &mut self.cfg;
        let grid = |g: &mut GridSpec, key: &str| -> Result<()> {
            match key {
                "r_max" => g.r_max = num(k, v)?,
                "n" => g.n = num(k, v)?,
                "stretch" => g.stretch = num(k, v)?,
                _ => return Err(LabError::Config(format!("unknown key {k}"))),
            }
            Ok(())
        };
        match (section, key) {
            ("", "seed") => c.seed = num(k, v)?,
            ("", "parallel") => c.parallel = boolean(k, v)?,
            ("potential", "kind") => {
                c.potential.kind = match v {
                    "gaussian" => PotentialKind::GaussianWell,
                    "exponential" => PotentialKind::ExponentialWell,
                    "tabulated" => PotentialKind::Tabulated,
                    "free" => {
                        c.potential.depth = 0.0;
                        PotentialKind::GaussianWell
                    }
                    other => return Err(LabError::Config(format!("unknown potential kind {other:?}"))),
                }
            }
            ("potential", "depth") => c.potential.depth = num(k, v)?,
            ("potential", "width") => c.potential.width = num(k, v)?,
            ("potential", "file") => self.potential_file = Some(self.path(v)),
            ("model", "sigma") => c.sigma = v.parse().map_err(|_| LabError::Config(format!("{k}: bad sign {v:?}")))?,
            ("grid", key) => grid(&mut c.grid, key)?,
            ("soliton_grid", key) => grid(&mut c.soliton_grid, key)?,
            ("ground_grid", key) => grid(&mut c.ground_grid, key)?,
            ("defocusing_grid", key) => grid(&mut c.defocusing_grid, key)?,
            ("time", "dt0") => c.time.dt0 = num(k, v)?,
            ("time", "dt_min") => c.time.dt_min = num(k, v)?,
            ("time", "t_max") => c.time.t_max = num(k, v)?,
            ("time", "theta") => c.time.theta = num(k, v)?,
            ("time", "sample_interval") => c.time.sample_interval = num(k, v)?,
            ("time", "sample_steps") => c.time.sample_steps = num(k, v)?,
            ("time", "window") => c.time.window = num(k, v)?,
            ("time", "virial_radius") => c.time.virial_radius = num(k, v)?,
            ("thresholds", "gate") => c.thresholds.gate = num(k, v)?,
            ("thresholds", "growth_factor") => c.thresholds.growth_factor = num(k, v)?,
            ("thresholds", "drift_bound") => c.thresholds.drift_bound = num(k, v)?,
            ("data", "kind") => self.data.kind = Some(v.to_string()),
            ("data", "z") => self.data.z = Some(num(k, v)?),
            ("data", "omega") => self.data.omega = Some(num(k, v)?),
            ("data", "scale_t") => self.data.scale_t = Some(num(k, v)?),
            ("data", "alpha") => self.data.alpha = Some(num(k, v)?),
            ("data", "amplitude") => self.data.amplitude = Some(num(k, v)?),
            ("data", "width") => self.data.width = Some(num(k, v)?),
            ("data", "center") => self.data.center = Some(num(k, v)?),
            ("data", "file") => self.data.file = Some(self.path(v)),
            ("branch", "z_step") => c.branch.z_step = num(k, v)?,
            ("branch", "z_max") => c.branch.z_max = num(k, v)?,
            ("branch", "excited_omegas") => c.branch.excited_omegas = list(k, v)?,
            ("branch", "defocusing_points") => c.branch.defocusing_points = num(k, v)?,
            ("sweep", "family") => c.sweep.family = v.parse()?,
            ("sweep", "count") => c.sweep.count = num(k, v)?,
            ("sweep", "omegas") => c.sweep.omegas = list(k, v)?,
            ("sweep", "t_min") => c.sweep.t_min = num(k, v)?,
            ("sweep", "t_max") => c.sweep.t_max = num(k, v)?,
            ("sweep", "margin") => c.sweep.margin = num(k, v)?,
            ("sweep", "amplitude") => c.sweep.amplitude = num(k, v)?,
            ("sweep", "sensitivity") => c.sweep.sensitivity = boolean(k, v)?,
            ("output", "dir") => c.output = PathBuf::from(v),
            _ => return Err(LabError::Config(format!("unknown key {k}"))),
        }
        Ok(())
    }

    fn finish(mut self) -> Result<RunConfig> {
        self.cfg.data = self.data.resolve()?;
        if let Some(p) = self.potential_file.take() {
            let text = std::fs::read_to_string(&p).map_err(|e| LabError::Io(format!("{}: {e}", p.display())))?;
            let table = read_columns(&text)?;
            let r = table.rows.iter().map(|row| row[0]).collect();
            let v = table.rows.iter().map(|row| row[1]).collect();
            self.cfg.potential = PotentialSpec::tabulated(r, v)?;
        } else if self.cfg.potential.kind == PotentialKind::Tabulated {
            return Err(LabError::Config("potential.kind = tabulated requires potential.file".into()));
        }
        self.cfg.validate()?;
        Ok(self.cfg)
    }
}

impl RunConfig {
    /// Parse the text format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[], None)
    }

    /// Parse text, then apply `section.key=value` overrides.
    pub fn parse_with(text: &str, overrides: &[String], base_dir: Option<&Path>) -> Result<Self> {
        let mut b = Builder::new(RunConfig::default(), base_dir.map(Path::to_path_buf));
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| LabError::Config(format!("line {}: unterminated section header", lineno + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            b.set(&section, key.trim(), value.trim())
                .map_err(|e| LabError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        for o in overrides {
            let (path, value) = o
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("override {o:?} is not key=value")))?;
            let (sec, key) = path.trim().rsplit_once('.').unwrap_or(("", path.trim()));
            b.set(sec, key, value.trim())?;
        }
        b.finish()
    }

    /// Read a config file; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_with(&text, overrides, path.parent())
    }

    /// Output directory, honouring the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        let positive = [
            ("time.dt0", self.time.dt0),
            ("time.dt_min", self.time.dt_min),
            ("time.t_max", self.time.t_max),
            ("time.theta", self.time.theta),
            ("time.sample_interval", self.time.sample_interval),
            ("time.window", self.time.window),
            ("time.virial_radius", self.time.virial_radius),
            ("thresholds.gate", self.thresholds.gate),
            ("thresholds.growth_factor", self.thresholds.growth_factor),
            ("thresholds.drift_bound", self.thresholds.drift_bound),
            ("branch.z_step", self.branch.z_step),
            ("branch.z_max", self.branch.z_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LabError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, g) in [
            ("grid", self.grid),
            ("soliton_grid", self.soliton_grid),
            ("ground_grid", self.ground_grid),
            ("defocusing_grid", self.defocusing_grid),
        ] {
            if !(g.r_max > 0.0) || g.n < 16 || !(g.stretch >= 1.0) {
                return Err(LabError::Config(format!("{name}: need r_max > 0, n >= 16, stretch >= 1")));
            }
        }
        if !(self.sweep.margin >= 0.0 && self.sweep.margin < 1.0) {
            return Err(LabError::Config("sweep.margin must lie in [0, 1)".into()));
        }
        if !(self.sweep.t_min > 0.0 && self.sweep.t_max > self.sweep.t_min) {
            return Err(LabError::Config("sweep needs 0 < t_min < t_max".into()));
        }
        if self.sweep.omegas.is_empty() || self.sweep.omegas.iter().any(|w| !(*w > 0.0)) {
            return Err(LabError::Config("sweep.omegas must be positive".into()));
        }
        Ok(())
    }

    /// The configuration in its own text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = |s: &mut String, name: &str, g: &GridSpec| {
            let _ = writeln!(s, "\n[{name}]\nr_max = {}\nn = {}\nstretch = {}", g.r_max, g.n, g.stretch);
        };
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "seed = {}\nparallel = {}", self.seed, self.parallel);
        let kind = match self.potential.kind {
            PotentialKind::GaussianWell => "gaussian",
            PotentialKind::ExponentialWell => "exponential",
            PotentialKind::Tabulated => "tabulated",
        };
        let _ = writeln!(s, "\n[potential]\nkind = {kind}\ndepth = {}\nwidth = {}", self.potential.depth, self.potential.width);
        let _ = writeln!(s, "\n[model]\nsigma = {}", self.sigma);
        g(&mut s, "grid", &self.grid);
        g(&mut s, "soliton_grid", &self.soliton_grid);
        g(&mut s, "ground_grid", &self.ground_grid);
        g(&mut s, "defocusing_grid", &self.defocusing_grid);
        let t = &self.time;
        let _ = writeln!(
            s,
            "\n[time]\ndt0 = {}\ndt_min = {}\nt_max = {}\ntheta = {}\nsample_interval = {}\nsample_steps = {}\nwindow = {}\nvirial_radius = {}",
            t.dt0, t.dt_min, t.t_max, t.theta, t.sample_interval, t.sample_steps, t.window, t.virial_radius
        );
        let th = &self.thresholds;
        let _ = writeln!(
            s,
            "\n[thresholds]\ngate = {}\ngrowth_factor = {}\ndrift_bound = {}",
            th.gate, th.growth_factor, th.drift_bound
        );
        let _ = writeln!(s, "\n[data]");
        match &self.data {
            DatumRecipe::Soliton { z } => {
                let _ = writeln!(s, "kind = soliton\nz = {z}");
            }
            DatumRecipe::Excited { omega, scale_t } => {
                let _ = writeln!(s, "kind = excited\nomega = {omega}\nscale_t = {scale_t}");
            }
            DatumRecipe::ScaledQ { alpha, amplitude } => {
                let _ = writeln!(s, "kind = scaled_q\nalpha = {alpha}\namplitude = {amplitude}");
            }
            DatumRecipe::Gaussian { amplitude, width, center } => {
                let _ = writeln!(s, "kind = gaussian\namplitude = {amplitude}\nwidth = {width}\ncenter = {center}");
            }
            DatumRecipe::File { path } => {
                let _ = writeln!(s, "kind = file\nfile = {}", path.display());
            }
        }
        let b = &self.branch;
        let _ = writeln!(
            s,
            "\n[branch]\nz_step = {}\nz_max = {}\nexcited_omegas = {}\ndefocusing_points = {}",
            b.z_step,
            b.z_max,
            join(&b.excited_omegas),
            b.defocusing_points
        );
        let w = &self.sweep;
        let family = match w.family {
            SweepFamily::Ladder => "ladder",
            SweepFamily::Small => "small",
            SweepFamily::Random => "random",
        };
        let _ = writeln!(
            s,
            "\n[sweep]\nfamily = {family}\ncount = {}\nomegas = {}\nt_min = {}\nt_max = {}\nmargin = {}\namplitude = {}\nsensitivity = {}",
            w.count,
            join(&w.omegas),
            w.t_min,
            w.t_max,
            w.margin,
            w.amplitude,
            w.sensitivity
        );
        let _ = writeln!(s, "\n[output]\ndir = {}", self.output.display());
        s
    }
}
