//! Run configuration, read from TOML. Unknown keys are rejected.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profile::ProfileKind;
use crate::sdf::{DataSource, EpsSchedule};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Profile,
    Green,
    Sdf,
    Evolve,
    Spectrum,
    Verify,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Profile => "profile",
            Stage::Green => "green",
            Stage::Sdf => "sdf",
            Stage::Evolve => "evolve",
            Stage::Spectrum => "spectrum",
            Stage::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.v_min, self.v_max, self.h)
    }
}

/// Initial vorticity: a two-column CSV (v, f0) on a uniform grid, or a Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub file: Option<PathBuf>,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    /// σ_k for modes |k| ≤ k† = 5; larger modes use 0
    pub sigma: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { file: None, center: 0.0, width: 1.0, amplitude: 1.0, sigma: 1.0 }
    }
}

impl DataConfig {
    pub fn source(&self) -> Result<DataSource> {
        match &self.file {
            Some(path) => read_data_csv(path),
            None => {
                if !(self.width > 0.0) {
                    return Err(Error::Config(format!("data.width must be positive, got {}", self.width)));
                }
                Ok(DataSource::gaussian(self.center, self.width, self.amplitude))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvolveMethod {
    Repr,
    Timestep,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub w: f64,
    pub h: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { w: -12.0, h: 1.0 / 32.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub method: EvolveMethod,
    pub times: Vec<f64>,
    /// centers v* of the Φ*(v − v*) windows
    pub windows: Vec<f64>,
    /// range of w nodes in the representation formula
    pub w_range: (f64, f64),
    pub dt: f64,
    /// nodes written to CSV and used for comparisons
    pub report_window: (f64, f64),
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            method: EvolveMethod::Both,
            times: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            windows: (-10..=6).map(f64::from).collect(),
            w_range: (-14.0, 8.0),
            dt: 0.1,
            report_window: (-10.0, 6.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapPoint {
    pub w: f64,
    /// ε in units of e^{−2|w|}
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub grid: GridConfig,
    pub lap: Vec<LapPoint>,
    pub lap_h: f64,
    pub k_star: i64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            grid: GridConfig { h: 1.0 / 32.0, v_min: -12.0, v_max: 12.0 },
            lap: Vec::new(),
            lap_h: 1.0 / 16.0,
            k_star: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// half-width around the source excluded from the PV residual
    pub pv_exclusion: f64,
    /// verify: relative L² tolerance of the |k| = 1 comparison
    pub oracle_rel_l2: f64,
    /// verify: relative derivative-jump tolerance
    pub jump_rel: f64,
    /// verify: PV residual tolerance relative to max|Θ|
    pub pv_rel: f64,
    /// verify: first ε (in units of e^{−2|w|}) of the schedule used for the
    /// jump and PV checks; the default schedule leaves an extrapolation floor
    /// near 1e−3 in the PV residual
    pub verify_eps0: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { pv_exclusion: crate::sdf::PV_EXCLUSION, oracle_rel_l2: 1e-3, jump_rel: 5e-2, pv_rel: 1e-3, verify_eps0: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub stages: Vec<Stage>,
    pub profile: ProfileKind,
    pub grid: GridConfig,
    pub modes: Vec<i64>,
    pub w_list: Vec<f64>,
    pub eps: EpsSchedule,
    pub data: DataConfig,
    pub green: GreenConfig,
    pub evolve: EvolveConfig,
    pub spectrum: SpectrumConfig,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stages: vec![Stage::Profile, Stage::Green, Stage::Sdf, Stage::Evolve, Stage::Spectrum],
            profile: ProfileKind::Algebraic,
            grid: GridConfig { h: 1.0 / 64.0, v_min: -16.0, v_max: 12.0 },
            modes: vec![2],
            w_list: vec![-2.0, 0.0, 2.0],
            eps: EpsSchedule::default(),
            data: DataConfig::default(),
            green: GreenConfig::default(),
            evolve: EvolveConfig::default(),
            spectrum: SpectrumConfig::default(),
            tolerances: Tolerances::default(),
            out: PathBuf::from("out"),
            threads: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.spectrum.grid.build()?;
        if self.modes.contains(&0) {
            return Err(Error::Config("mode k = 0 is not allowed".into()));
        }
        if self.eps.levels < 1 || !(self.eps.base > 1.0) || !(self.eps.eps0 > 0.0) {
            return Err(Error::Config("eps needs eps0 > 0, base > 1 and levels ≥ 1".into()));
        }
        if self.evolve.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("evolve.times must be nonnegative".into()));
        }
        if let Some(0) = self.threads {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Reads (v, f0) pairs; the v column must be uniformly spaced.
pub fn read_data_csv(path: &Path) -> Result<DataSource> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut vs = Vec::new();
    let mut fs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(v), Some(f)) => {
                vs.push(v);
                fs.push(f);
            }
            // a header row is allowed in front
            _ if line == 0 && vs.is_empty() => continue,
            _ => return Err(Error::Data(format!("{}: row {} is not two numbers", path.display(), line + 1))),
        }
    }
    if vs.len() < 2 {
        return Err(Error::Data(format!("{}: need at least two rows", path.display())));
    }
    let h = (vs[vs.len() - 1] - vs[0]) / (vs.len() - 1) as f64;
    if !(h > 0.0) || vs.windows(2).any(|p| ((p[1] - p[0]) - h).abs() > 1e-6 * h) {
        return Err(Error::Data(format!("{}: v column must be increasing and uniformly spaced", path.display())));
    }
    let grid = Grid::new(vs[0], vs[vs.len() - 1], h)?;
    if grid.n != fs.len() {
        return Err(Error::Data(format!("{}: spacing does not divide the range", path.display())));
    }
    Ok(DataSource::Samples { grid, values: fs })
}
