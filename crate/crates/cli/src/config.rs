//! Run configuration: one TOML file with `system`, `nonlinearity`,
//! `disturbance`, `initial`, `numerics` and `output` tables. Keys follow the
//! symbol names (`a`, `l`, `C`, `P`, `B`, `D`, `sigma`, `L`, `d_inf`, ...).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use certkit_core::certificate::NonlinearitySpec;
use certkit_core::functions::Profile;
use certkit_core::galerkin_sim::{Disturbance, InitialData, Scheme, Signal, SimConfig, Waveform};
use certkit_core::green_bvp::CouplingProblem;
use certkit_core::system::CascadeSystem;
use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The bundled worked-example configuration.
pub const EXAMPLE_CFG: &str = include_str!("../configs/example.cfg");

/// A spatial profile: a built-in function or a two-column `z,value` CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    Builtin(Profile),
    File(PathBuf),
}

impl ProfileSource {
    fn resolve(&self, base: &Path) -> Result<Profile> {
        match self {
            ProfileSource::Builtin(p) => Ok(p.clone()),
            ProfileSource::File(path) => read_samples(&base.join(path)),
        }
    }
}

impl Serialize for ProfileSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProfileSource::Builtin(p) => p.serialize(s),
            ProfileSource::File(path) => {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("file", path)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for ProfileSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = toml::Value::deserialize(d)?;
        if let Some(path) = v.as_table().and_then(|t| t.get("file")) {
            if v.as_table().is_some_and(|t| t.len() != 1) {
                return Err(D::Error::custom("a `file` profile takes no other keys"));
            }
            let path = path.as_str().ok_or_else(|| D::Error::custom("`file` must be a path string"))?;
            return Ok(ProfileSource::File(path.into()));
        }
        Profile::deserialize(v).map(ProfileSource::Builtin).map_err(D::Error::custom)
    }
}

fn read_samples(path: &Path) -> Result<Profile> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading samples {}", path.display()))?;
    let (mut z, mut values) = (vec![], vec![]);
    for (i, row) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (zi, vi) = row.with_context(|| format!("{}: bad row {}", path.display(), i + 2))?;
        z.push(zi);
        values.push(vi);
    }
    Ok(Profile::Samples { z, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub a: f64,
    pub l: f64,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<ProfileSource>,
    #[serde(rename = "D")]
    pub d: Vec<ProfileSource>,
}

/// Both boundary signals share the level `d_inf` and the ramp time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceBlock {
    #[serde(default)]
    pub d_inf: f64,
    #[serde(default)]
    pub ramp: f64,
    #[serde(default = "zero_wave")]
    pub d1: Waveform,
    #[serde(default = "zero_wave")]
    pub d2: Waveform,
}

fn zero_wave() -> Waveform {
    Waveform::Zero
}

impl Default for DisturbanceBlock {
    fn default() -> Self {
        Self { d_inf: 0.0, ramp: 0.0, d1: Waveform::Zero, d2: Waveform::Zero }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default = "zero_profile")]
    pub phi: ProfileSource,
    /// Empty means `x0 = 0`.
    #[serde(default)]
    pub x0: Vec<f64>,
}

fn zero_profile() -> ProfileSource {
    ProfileSource::Builtin(Profile::constant(0.0))
}

impl Default for InitialBlock {
    fn default() -> Self {
        Self { phi: zero_profile(), x0: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Direct,
    Green,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    /// Certificate grid nodes.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(rename = "N", default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default = "default_samples")]
    pub audit_samples: usize,
    /// Relative slack on the Lyapunov bound along trajectories.
    #[serde(default = "default_v_slack")]
    pub v_slack: f64,
}

fn default_m() -> usize {
    401
}
fn default_modes() -> usize {
    48
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t() -> f64 {
    50.0
}
fn default_record() -> usize {
    10
}
fn default_samples() -> usize {
    2000
}
fn default_v_slack() -> f64 {
    0.05
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self {
            m: default_m(),
            modes: default_modes(),
            dt: default_dt(),
            t_end: default_t(),
            scheme: Scheme::default(),
            record_every: default_record(),
            solver: Solver::default(),
            audit_samples: default_samples(),
            v_slack: default_v_slack(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    "certkit-out".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub disturbance: DisturbanceBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A parsed configuration plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config = RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn example() -> Self {
        Self { config: RunConfig::example(), base: PathBuf::new() }
    }
}

/// Names accepted by [`RunConfig::with_param`].
pub const SWEEP_PARAMS: &[&str] = &[
    "p", "c", "b", "d", "a", "l", "sigma", "alpha", "q", "L", "c0", "zeta", "delta1", "delta2", "d_inf", "ramp",
    "m", "N", "dt", "T",
];

impl RunConfig {
    /// Parse and validate; every problem found is listed.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow!("invalid configuration: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn example() -> Self {
        Self::parse(EXAMPLE_CFG).expect("bundled example configuration is valid")
    }

    pub fn n(&self) -> usize {
        self.system.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = vec![];
        let s = &self.system;
        let n = self.n();
        if !(s.a.is_finite() && s.a > 0.0) {
            errs.push(format!("system.a: must be positive, got {}", s.a));
        }
        if !(s.l.is_finite() && s.l > 0.0) {
            errs.push(format!("system.l: must be positive, got {}", s.l));
        }
        if n == 0 {
            errs.push("system.C: must be a nonempty square matrix".into());
        }
        for (name, m) in [("C", &s.c), ("P", &s.p)] {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                errs.push(format!("system.{name}: must be {n}x{n}"));
            } else if m.iter().flatten().any(|v| !v.is_finite()) {
                errs.push(format!("system.{name}: entries must be finite"));
            }
        }
        if s.p.len() == n && s.p.iter().all(|r| r.len() == n) {
            let asym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).any(|(i, j)| s.p[i][j] != s.p[j][i]);
            if asym {
                errs.push("system.P: must be symmetric".into());
            }
        }
        for (name, v) in [("B", &s.b), ("D", &s.d)] {
            if v.len() != n {
                errs.push(format!("system.{name}: needs {n} profiles, got {}", v.len()));
            }
        }
        if let Err(e) = self.nonlinearity.validate() {
            errs.push(format!("nonlinearity: {e}"));
        }
        if let Err(e) = self.nonlinearity.x.validate(n) {
            errs.push(format!("nonlinearity.X: {e}"));
        }
        let d = &self.disturbance;
        if !(d.d_inf.is_finite() && d.d_inf >= 0.0) {
            errs.push(format!("disturbance.d_inf: must be nonnegative, got {}", d.d_inf));
        } else if let Err(e) = self.disturbances().validate() {
            errs.push(format!("disturbance: {e}"));
        }
        if !self.initial.x0.is_empty() && self.initial.x0.len() != n {
            errs.push(format!("initial.x0: needs {n} entries, got {}", self.initial.x0.len()));
        }
        let nm = &self.numerics;
        if nm.m < 3 || nm.m % 2 == 0 {
            errs.push(format!("numerics.m: must be odd and >= 3, got {}", nm.m));
        }
        if nm.modes == 0 {
            errs.push("numerics.N: must be at least 1".into());
        }
        if let Err(e) = self.sim_config().validate() {
            errs.push(format!("numerics: {e}"));
        }
        if !(nm.v_slack.is_finite() && nm.v_slack >= 0.0) {
            errs.push(format!("numerics.v_slack: must be nonnegative, got {}", nm.v_slack));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  - {}", errs.join("\n  - "))
        }
    }

    pub fn p_matrix(&self) -> DMatrix<f64> {
        matrix(&self.system.p)
    }

    pub fn system(&self, base: &Path) -> Result<CascadeSystem> {
        let s = &self.system;
        let resolve = |v: &[ProfileSource]| v.iter().map(|p| p.resolve(base)).collect::<Result<Vec<_>>>();
        Ok(CascadeSystem::new(s.a, s.l, matrix(&s.c), resolve(&s.b)?, resolve(&s.d)?)?)
    }

    pub fn problem(&self, system: &CascadeSystem) -> Result<CouplingProblem> {
        Ok(system.coupling_problem(self.p_matrix(), self.numerics.m)?)
    }

    pub fn disturbances(&self) -> Disturbance {
        let d = &self.disturbance;
        let signal = |w: &Waveform| {
            let amp = if matches!(w, Waveform::Zero) { 0.0 } else { d.d_inf };
            Signal::new(w.clone(), amp, d.ramp)
        };
        Disturbance { d1: signal(&d.d1), d2: signal(&d.d2) }
    }

    pub fn initial_data(&self, base: &Path) -> Result<InitialData> {
        let x0 = if self.initial.x0.is_empty() { vec![0.0; self.n()] } else { self.initial.x0.clone() };
        Ok(InitialData { phi: self.initial.phi.resolve(base)?, x0 })
    }

    pub fn sim_config(&self) -> SimConfig {
        let nm = &self.numerics;
        let mut c = SimConfig::new(nm.modes, nm.dt, nm.t_end);
        c.scheme = nm.scheme;
        c.record_every = nm.record_every;
        c
    }

    /// Same system and nonlinearity as the bundled worked example.
    pub fn is_worked_example(&self) -> bool {
        let ex = Self::example();
        self.system == ex.system && self.nonlinearity == ex.nonlinearity
    }

    /// Copy with one named parameter replaced. `p`, `c` set `P`, `C` to multiples
    /// of the identity; `b`, `d` make every component of `B`, `D` constant.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let n = self.n();
        let scaled_identity = |v: f64| (0..n).map(|i| (0..n).map(|j| if i == j { v } else { 0.0 }).collect()).collect();
        let constant = |v: f64| vec![ProfileSource::Builtin(Profile::constant(v)); n];
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                bail!("parameter `{name}` takes nonnegative integers, got {value}")
            }
        };
        let nl = &mut c.nonlinearity;
        match name {
            "p" | "P" => c.system.p = scaled_identity(value),
            "c" | "C" => c.system.c = scaled_identity(value),
            "b" | "B" => c.system.b = constant(value),
            "d" | "D" => c.system.d = constant(value),
            "a" => c.system.a = value,
            "l" => c.system.l = value,
            "sigma" => nl.sigma = value,
            "alpha" => nl.alpha = value,
            "q" => nl.q = value,
            "L" => nl.lipschitz = value,
            "c0" => nl.c0 = value,
            "zeta" => nl.zeta = value,
            "delta1" => nl.delta1 = value,
            "delta2" => nl.delta2 = value,
            "d_inf" => c.disturbance.d_inf = value,
            "ramp" => c.disturbance.ramp = value,
            "m" => c.numerics.m = count()?,
            "N" => c.numerics.modes = count()?,
            "dt" => c.numerics.dt = value,
            "T" => c.numerics.t_end = value,
            _ => bail!("unknown sweep parameter `{name}` (known: {})", SWEEP_PARAMS.join(", ")),
        }
        c.validate().with_context(|| format!("{name} = {value}"))?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}
