//! Run configuration, read from a TOML file.
//!
//! ```toml
//! preset = "ref1"          # or "ref2"
//! branch_id = 0
//! out_dir = "out"
//!
//! [params]                 # overrides on top of the preset
//! kappa = 4.0
//!
//! [grid]
//! n = 400
//!
//! [time]
//! t_end = 30.0
//! dt = 0.01                # omitted: min(0.01, h/(4 max(1, lambda2)))
//! output_interval = 0.25   # or an explicit `output_times = [...]`
//!
//! [initial]
//! kind = "sine"            # or "zero"
//! filter_boundary_mode = false
//!
//! [layer]
//! n_layer = 400            # x_max omitted: 20/|kappa|
//! tail_eta = 2.5
//!
//! [rates]
//! locations = [0.5]        # t0/t1 omitted: last half of the run
//!
//! [sweep]
//! parameter = "sigma_hat"
//! lo = 0.05
//! hi = 0.5
//! count = 10
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tumour_core::constitutive::PARAMETER_NAMES;
use tumour_core::perturbation::{default_dt, Grid, MIN_CELLS};
use tumour_core::ModelParameters;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Ref1,
    Ref2,
}

impl Preset {
    pub fn parameters(self) -> ModelParameters {
        match self {
            Preset::Ref1 => ModelParameters::ref1(),
            Preset::Ref2 => ModelParameters::ref2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub output_interval: f64,
    pub output_times: Option<Vec<f64>>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_end: 30.0,
            dt: None,
            output_interval: 0.25,
            output_times: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    Sine,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Shift `R̃(0)` so that the growing boundary mode is not excited.
    pub filter_boundary_mode: bool,
    /// Probe time of the filter; defaults to `t_end`.
    pub probe_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerConfig {
    pub x_max: Option<f64>,
    pub n_layer: usize,
    /// Exponent of the tail-integral example in the layer report.
    pub tail_eta: f64,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            x_max: None,
            n_layer: 400,
            tail_eta: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    /// Interior `ξ` stations for the outer rates.
    pub locations: Vec<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            t0: None,
            t1: None,
            locations: vec![0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * k as f64
                }
            })
            .collect()
    }

    fn validate(&self) -> CliResult<()> {
        if !PARAMETER_NAMES.contains(&self.parameter.as_str()) {
            return Err(CliError::Config(format!(
                "unknown sweep parameter `{}`",
                self.parameter
            )));
        }
        if self.count == 0 || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(CliError::Config(format!(
                "sweep needs finite bounds and at least one point, got {}:{}:{}",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }
}

/// `name=lo:hi:n`
impl FromStr for SweepSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("sweep must look like name=lo:hi:n, got `{s}`"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let spec = SweepSpec {
            parameter: name.trim().to_string(),
            lo: parts[0].trim().parse().map_err(|_| bad())?,
            hi: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub branch_id: usize,
    /// Base-state scan resolution; omitted uses the library default.
    #[serde(default)]
    pub scan_points: Option<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub layer: LayerConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::default(),
            params: BTreeMap::new(),
            branch_id: 0,
            scan_points: None,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            initial: InitialConfig::default(),
            layer: LayerConfig::default(),
            rates: RatesConfig::default(),
            sweep: None,
            out_dir: default_out_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Preset with the `[params]` overrides applied and validated.
    pub fn model(&self) -> CliResult<ModelParameters> {
        let mut p = self.preset.parameters();
        for (name, &value) in &self.params {
            p.set(name, value).map_err(|e| CliError::Config(e.to_string()))?;
        }
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.model()?;
        if self.grid.n < MIN_CELLS {
            return Err(CliError::Config(format!(
                "grid.n must be at least {MIN_CELLS}, got {}",
                self.grid.n
            )));
        }
        let t = &self.time;
        if !(t.t_end > 0.0) {
            return Err(CliError::Config(format!(
                "time.t_end must be positive, got {}",
                t.t_end
            )));
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0) {
                return Err(CliError::Config(format!("time.dt must be positive, got {dt}")));
            }
        }
        match &t.output_times {
            Some(times) => {
                if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(CliError::Config(
                        "time.output_times must be nonempty and ascending".into(),
                    ));
                }
                if times.iter().any(|&s| !(0.0..=t.t_end).contains(&s)) {
                    return Err(CliError::Config("time.output_times must lie in [0, t_end]".into()));
                }
            }
            None => {
                if !(t.output_interval > 0.0) {
                    return Err(CliError::Config("time.output_interval must be positive".into()));
                }
            }
        }
        if self.rates.locations.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(CliError::Config("rates.locations must lie in [0, 1]".into()));
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// Output times including `t = 0` and `t_end`.
    pub fn output_times(&self) -> Vec<f64> {
        let t_end = self.time.t_end;
        if let Some(times) = &self.time.output_times {
            return times.clone();
        }
        let step = self.time.output_interval;
        let count = (t_end / step + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
        if t_end - times[times.len() - 1] > 1e-9 * t_end {
            times.push(t_end);
        } else {
            let last = times.len() - 1;
            times[last] = t_end;
        }
        times
    }

    pub fn dt(&self, grid: &Grid, lambda2: f64) -> f64 {
        self.time.dt.unwrap_or_else(|| default_dt(grid, lambda2))
    }
}
