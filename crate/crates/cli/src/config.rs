use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ixy_core::analysis::{Anchor, Coordination, PhaseGrid, EP_BRACKET, EP_TOLERANCE};
use ixy_core::numeric::{linspace, logspace};
use ixy_core::{AnisotropyMode, ModeRange, ModelParams, ThetaKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Dispersion,
    ExceptionalPoint,
    EpTable,
    QfiDynamics,
    TimeScaling,
    SizeScaling,
    StationaryScaling,
    Ratio,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Dispersion => "dispersion",
            Experiment::ExceptionalPoint => "exceptional-point",
            Experiment::EpTable => "ep-table",
            Experiment::QfiDynamics => "qfi-dynamics",
            Experiment::TimeScaling => "time-scaling",
            Experiment::SizeScaling => "size-scaling",
            Experiment::StationaryScaling => "stationary-scaling",
            Experiment::Ratio => "ratio",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

/// Coordination number: a fixed integer or `"N/2"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZSpec {
    Fixed(usize),
    HalfChain,
}

impl ZSpec {
    pub fn coordination(self) -> Coordination {
        match self {
            ZSpec::Fixed(z) => Coordination::Fixed(z),
            ZSpec::HalfChain => Coordination::HalfChain,
        }
    }

    pub fn resolve(self, n: usize) -> usize {
        self.coordination().resolve(n)
    }
}

impl fmt::Display for ZSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZSpec::Fixed(z) => write!(f, "{z}"),
            ZSpec::HalfChain => f.write_str("N/2"),
        }
    }
}

impl Serialize for ZSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ZSpec::Fixed(z) => s.serialize_u64(*z as u64),
            ZSpec::HalfChain => s.serialize_str("N/2"),
        }
    }
}

impl<'de> Deserialize<'de> for ZSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d).map_err(|_| serde::de::Error::custom("Z must be a positive integer or \"N/2\""))? {
            Raw::Int(z) => Ok(ZSpec::Fixed(z)),
            Raw::Text(s) if s.trim() == "N/2" => Ok(ZSpec::HalfChain),
            Raw::Text(s) => {
                s.trim().parse().map(ZSpec::Fixed).map_err(|_| {
                    serde::de::Error::custom(format!("Z must be a positive integer or \"N/2\", got {s:?}"))
                })
            }
        }
    }
}

/// A sample grid: an explicit list, or `{"log": [lo, hi, n]}` / `{"linear": [lo, hi, n]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Spaced(Spacing),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Spacing {
    Log(f64, f64, usize),
    Linear(f64, f64, usize),
}

impl Grid {
    pub fn log(lo: f64, hi: f64, n: usize) -> Self {
        Grid::Spaced(Spacing::Log(lo, hi, n))
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Spaced(Spacing::Log(lo, hi, n)) => logspace(*lo, *hi, *n),
            Grid::Spaced(Spacing::Linear(lo, hi, n)) => linspace(*lo, *hi, *n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub n: usize,
    pub z: ZSpec,
    pub alpha: f64,
    pub gamma: f64,
    pub h: f64,
    pub anisotropy: AnisotropyMode,
    pub mode_range: ModeRange,
    pub theta: ThetaKind,
    /// Sample times for `qfi-dynamics`.
    pub times: Grid,
    pub transient_times: Grid,
    pub long_times: Grid,
    /// Evolution time of the size sweep.
    pub t_eval: f64,
    pub sizes: Vec<usize>,
    pub stationary_sizes: Vec<usize>,
    pub dh_list: Vec<f64>,
    pub alpha_list: Vec<f64>,
    pub z_list: Vec<ZSpec>,
    pub anchor: Anchor,
    pub ep_grid: PhaseGrid,
    pub ep_bracket: (f64, f64),
    pub ep_tolerance: f64,
    /// Bisection tolerance of the exceptional anchor in stationary sweeps.
    pub anchor_tolerance: f64,
    /// Finite-difference step of the stationary QFI; `null` picks `1e-6 max(1, |theta|)`.
    pub fd_step: Option<f64>,
    pub ratio_window: (f64, f64),
    pub ratio_points: usize,
    pub oracle_sizes: Vec<usize>,
    pub oracle_times: Vec<f64>,
    pub oracle_tolerance: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 1024,
            z: ZSpec::Fixed(1),
            alpha: 1.5,
            gamma: 0.3,
            h: -0.7,
            anisotropy: AnisotropyMode::NonHermitian,
            mode_range: ModeRange::Full,
            theta: ThetaKind::Field,
            times: Grid::log(0.05, 1000.0, 241),
            transient_times: Grid::log(0.1, 0.5, 60),
            long_times: Grid::log(200.0, 1000.0, 60),
            t_eval: 200.0,
            sizes: vec![128, 256, 512, 1024, 2048, 4096],
            stationary_sizes: vec![1024, 2048, 4096, 8192],
            dh_list: vec![-1e-1, -1e-2, -1e-3, -1e-4, -1e-5, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            alpha_list: vec![0.5, 1.0, 1.5, 2.0],
            z_list: vec![ZSpec::Fixed(1), ZSpec::Fixed(2), ZSpec::Fixed(4), ZSpec::HalfChain],
            anchor: Anchor::ExceptionalPoint,
            ep_grid: PhaseGrid::Continuum,
            ep_bracket: EP_BRACKET,
            ep_tolerance: EP_TOLERANCE,
            anchor_tolerance: 1e-12,
            fd_step: None,
            ratio_window: (200.0, 1000.0),
            ratio_points: 801,
            oracle_sizes: vec![6],
            oracle_times: vec![0.5, 1.0, 2.0],
            oracle_tolerance: 1e-8,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults with the per-experiment adjustments applied.
    pub fn defaults_for(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment: Some(experiment),
            ..Self::default()
        };
        match experiment {
            Experiment::EpTable | Experiment::ExceptionalPoint => {
                c.gamma = 0.5;
                c.z_list = [1, 2, 4, 7]
                    .map(ZSpec::Fixed)
                    .into_iter()
                    .chain([ZSpec::HalfChain])
                    .collect();
            }
            Experiment::StationaryScaling => {
                c.gamma = 0.5;
                c.z = ZSpec::Fixed(2);
            }
            Experiment::OracleCheck => {
                c.z_list = vec![ZSpec::Fixed(1), ZSpec::Fixed(2)];
            }
            _ => {}
        }
        c
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment.expect("experiment resolved before running")
    }

    /// Model parameters with `z` resolved against `n`.
    pub fn params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            z: self.z.resolve(self.n),
            alpha: self.alpha,
            gamma: self.gamma,
            h: self.h,
            anisotropy: self.anisotropy,
            mode_range: self.mode_range,
        }
    }

    /// Checks the fields the selected experiment reads. Errors name the offending key.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let bad = |key: &str, msg: String| Err((key.to_string(), msg));
        let even = |key: &str, ns: &[usize]| -> Result<(), (String, String)> {
            if ns.is_empty() {
                return bad(key, "list is empty".into());
            }
            match ns.iter().find(|&&n| n < 4 || n % 2 != 0) {
                Some(n) => bad(key, format!("system sizes must be even and >= 4, got {n}")),
                None => Ok(()),
            }
        };
        let nonempty_grid = |key: &str, g: &Grid| -> Result<(), (String, String)> {
            let v = g.values();
            if v.is_empty() {
                return bad(key, "grid is empty".into());
            }
            if let Some(t) = v.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                return bad(key, format!("times must be finite and >= 0, got {t}"));
            }
            Ok(())
        };
        let zs = |key: &str, zs: &[ZSpec], ns: &[usize]| -> Result<(), (String, String)> {
            if zs.is_empty() {
                return bad(key, "list is empty".into());
            }
            for &z in zs {
                for &n in ns {
                    let zr = z.resolve(n);
                    if zr < 1 || zr > n / 2 {
                        return bad(key, format!("Z = {z} resolves to {zr}, outside 1..=N/2 for N = {n}"));
                    }
                }
            }
            Ok(())
        };

        even("n", &[self.n])?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha", format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !self.gamma.is_finite() {
            return bad("gamma", "gamma must be finite".into());
        }
        if !self.h.is_finite() {
            return bad("h", "h must be finite".into());
        }
        if !(self.ep_tolerance > 0.0) {
            return bad("ep_tolerance", format!("must be > 0, got {}", self.ep_tolerance));
        }
        if !(self.anchor_tolerance > 0.0) {
            return bad(
                "anchor_tolerance",
                format!("must be > 0, got {}", self.anchor_tolerance),
            );
        }
        if let Some(s) = self.fd_step {
            if !(s > 0.0) {
                return bad("fd_step", format!("must be > 0, got {s}"));
            }
        }

        match self.experiment() {
            Experiment::Dispersion | Experiment::Ratio => zs("z", &[self.z], &[self.n])?,
            Experiment::ExceptionalPoint => zs("z", &[self.z], &[self.n])?,
            Experiment::EpTable => {
                if self.alpha_list.is_empty() {
                    return bad("alpha_list", "list is empty".into());
                }
                zs("z_list", &self.z_list, &[self.n])?;
            }
            Experiment::QfiDynamics => {
                nonempty_grid("times", &self.times)?;
                zs("z_list", &self.z_list, &[self.n])?;
            }
            Experiment::TimeScaling => {
                nonempty_grid("transient_times", &self.transient_times)?;
                nonempty_grid("long_times", &self.long_times)?;
                zs("z_list", &self.z_list, &[self.n])?;
            }
            Experiment::SizeScaling => {
                even("sizes", &self.sizes)?;
                zs("z", &[self.z], &self.sizes)?;
                if !(self.t_eval > 0.0) {
                    return bad("t_eval", format!("must be > 0, got {}", self.t_eval));
                }
            }
            Experiment::StationaryScaling => {
                even("stationary_sizes", &self.stationary_sizes)?;
                zs("z", &[self.z], &self.stationary_sizes)?;
                if self.dh_list.is_empty() {
                    return bad("dh_list", "list is empty".into());
                }
            }
            Experiment::OracleCheck => {
                even("oracle_sizes", &self.oracle_sizes)?;
                if let Some(n) = self
                    .oracle_sizes
                    .iter()
                    .find(|&&n| n > ixy_core::oracle::MAX_DENSE_SITES)
                {
                    return bad(
                        "oracle_sizes",
                        format!(
                            "dense oracle is limited to N <= {}, got {n}",
                            ixy_core::oracle::MAX_DENSE_SITES
                        ),
                    );
                }
                zs("z_list", &self.z_list, &self.oracle_sizes)?;
                if self.oracle_times.is_empty() {
                    return bad("oracle_times", "list is empty".into());
                }
            }
        }
        if self.experiment() == Experiment::Ratio {
            let (t0, t1) = self.ratio_window;
            if !(t0 > 0.0 && t1 > t0) {
                return bad("ratio_window", format!("need 0 < t0 < t1, got [{t0}, {t1}]"));
            }
            if self.ratio_points < 2 {
                return bad("ratio_points", "need at least 2 points".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// 1-based line of the first occurrence of `"key"` in the config text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                b.insert(k, v);
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses `key=value`; the value is read as JSON when possible and as a string otherwise.
fn parse_set(item: &str) -> Result<(String, Value), ConfigError> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("--set {item:?}: expected key=value")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Resolves the configuration from defaults, an optional file and `--set` overrides.
pub fn resolve(
    experiment: Option<Experiment>,
    file: Option<&Path>,
    sets: &[String],
    out: Option<&Path>,
) -> Result<ExperimentConfig, ConfigError> {
    let (text, from_file) = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("{}: cannot read config: {e}", path.display())))?;
            // Deserializing the text directly reports syntax, type and unknown-key errors with a line number.
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| ConfigError(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
            let raw: Value = serde_json::from_str(&text).expect("text already parsed");
            (text, Some(raw))
        }
        None => (String::new(), None),
    };
    let origin = file
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<defaults>".into());

    let mut overrides = serde_json::Map::new();
    for item in sets {
        let (k, v) = parse_set(item)?;
        overrides.insert(k, v);
    }
    if let Some(e) = experiment {
        overrides.insert("experiment".into(), serde_json::to_value(e).expect("enum serializes"));
    }
    if let Some(o) = out {
        overrides.insert("output_dir".into(), Value::String(o.display().to_string()));
    }

    let chosen = overrides
        .get("experiment")
        .or_else(|| from_file.as_ref().and_then(|f| f.get("experiment")))
        .cloned();
    let experiment: Experiment = match chosen {
        Some(v) => serde_json::from_value(v).map_err(|e| ConfigError(format!("experiment: {e}")))?,
        None => {
            return Err(ConfigError(
                "no experiment given (positional argument or \"experiment\" key)".into(),
            ))
        }
    };

    let mut value = serde_json::to_value(ExperimentConfig::defaults_for(experiment)).expect("config serializes");
    if let Some(f) = from_file {
        merge(&mut value, f);
    }
    for (k, v) in overrides.clone() {
        merge(&mut value, Value::Object([(k, v)].into_iter().collect()));
    }
    let config: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| ConfigError(format!("--set overrides: {e}")))?;

    config.validate().map_err(|(key, msg)| {
        if overrides.contains_key(&key) {
            ConfigError(format!("--set {key}: {msg}"))
        } else {
            match key_line(&text, &key) {
                Some(line) => ConfigError(format!("{origin}:{line}: {key}: {msg}")),
                None => ConfigError(format!("{origin}: {key}: {msg}")),
            }
        }
    })?;
    Ok(config)
}
