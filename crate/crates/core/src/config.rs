//! Run configuration: a flat JSON document resolved against documented defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::StripGrid;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the output root of every run.
pub const OUTPUT_ROOT_ENV: &str = "HYDROSTRIP_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeOrder {
    First,
    Second,
}

/// Treatment of the horizontally averaged flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanFlow {
    /// Pressure gradient has zero horizontal mean; the mean flow diffuses freely.
    ZeroMeanGradient,
    /// The vertical flux `∫_0^1 u dy` of the mean flow is held fixed.
    FixedFlux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InitialData {
    /// `u_0 = amplitude · sin(πy)`, `T_0 = 0`.
    Heat { amplitude: f64 },
    /// Random-phase data decaying like `e^{-a|k|}` in `1 <= |k| <= band`,
    /// first `modes` sine modes, scaled so the weighted `B^{1/2}` size is `amplitude`
    /// (defaulting to the smallness budget).
    AnalyticBand {
        amplitude: Option<f64>,
        band: usize,
        modes: usize,
        seed: u64,
    },
    /// Load `u` and `T` from snapshot files.
    Snapshot { u: PathBuf, temp: PathBuf },
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: StripGrid,
    pub eps: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub initial: InitialData,
    pub a: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub r: f64,
    pub output_dir: PathBuf,
    pub sample_every: usize,
    pub dealias: bool,
    pub hydrostatic_split: bool,
    pub order: SchemeOrder,
    pub mean_flow: MeanFlow,
    /// Budget constant for the time-derivative estimate's initial-data condition.
    pub c1: f64,
    /// Smallness constant: data are small when their weighted size is below `c0 · a`.
    pub c0: f64,
    pub stiffness_safety: f64,
}

const KNOWN_KEYS: &[&str] = &[
    "nx",
    "ny",
    "lx",
    "eps",
    "dt",
    "horizon",
    "family",
    "amplitude",
    "band",
    "modes",
    "seed",
    "snapshot_u",
    "snapshot_t",
    "a",
    "lambda",
    "mu",
    "r",
    "output_dir",
    "sample_every",
    "dealias",
    "hydrostatic_split",
    "order",
    "mean_flow",
    "c1",
    "c0",
    "stiffness_safety",
];

const REQUIRED_KEYS: &[&str] = &["nx", "ny", "horizon", "family"];

#[derive(Deserialize)]
#[serde(untagged)]
enum EpsSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    nx: usize,
    ny: usize,
    lx: Option<f64>,
    eps: Option<EpsSpec>,
    dt: Option<f64>,
    horizon: f64,
    family: String,
    amplitude: Option<f64>,
    band: Option<usize>,
    modes: Option<usize>,
    seed: Option<u64>,
    snapshot_u: Option<PathBuf>,
    snapshot_t: Option<PathBuf>,
    a: Option<f64>,
    lambda: Option<f64>,
    mu: Option<f64>,
    r: Option<f64>,
    output_dir: Option<PathBuf>,
    sample_every: Option<usize>,
    dealias: Option<bool>,
    hydrostatic_split: Option<bool>,
    order: Option<u8>,
    mean_flow: Option<MeanFlow>,
    c1: Option<f64>,
    c0: Option<f64>,
    stiffness_safety: Option<f64>,
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Parses a JSON document; unknown keys, missing required keys and
    /// constraint violations are reported with the key name.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        let map: &Map<String, Value> = value
            .as_object()
            .ok_or_else(|| Error::config("<document>", "expected a JSON object"))?;
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::config(key.clone(), "unknown key"));
            }
        }
        for key in REQUIRED_KEYS {
            if !map.contains_key(*key) {
                return Err(Error::config(*key, "missing required key"));
            }
        }
        for (key, v) in map {
            let single = Value::Object(Map::from_iter([(key.clone(), v.clone())]));
            if let Err(e) = probe_type(single) {
                return Err(Error::config(key.clone(), e));
            }
        }
        let raw: RawConfig =
            serde_json::from_value(value).map_err(|e| Error::config("<document>", e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let lx = positive("lx", raw.lx.unwrap_or(2.0 * PI))?;
        let grid = StripGrid::new(raw.nx, raw.ny, lx).map_err(|e| Error::config("nx/ny", e.to_string()))?;
        let eps = match raw.eps {
            None => vec![0.1],
            Some(EpsSpec::One(e)) => vec![e],
            Some(EpsSpec::Many(v)) => v,
        };
        if eps.is_empty() {
            return Err(Error::config("eps", "empty list"));
        }
        for &e in &eps {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::config("eps", format!("{e} not in (0, 1]")));
            }
        }
        if eps.len() > 1 && eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("eps", "list must be strictly decreasing"));
        }
        let dt = positive("dt", raw.dt.unwrap_or(1e-3))?;
        if !(raw.horizon >= 0.0 && raw.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be nonnegative"));
        }
        let a = positive("a", raw.a.unwrap_or(0.5))?;
        let r = raw.r.unwrap_or(PI * PI / 2.0);
        if !(r > 0.0 && r < PI * PI) {
            return Err(Error::config("r", format!("{r} not in (0, π²)")));
        }
        if let Some(l) = raw.lambda {
            positive("lambda", l)?;
        }
        if let Some(m) = raw.mu {
            positive("mu", m)?;
        }
        let initial = match raw.family.as_str() {
            "heat" => InitialData::Heat {
                amplitude: raw.amplitude.unwrap_or(1.0),
            },
            "analytic-band" => {
                let band = raw.band.unwrap_or(8);
                let modes = raw.modes.unwrap_or(8);
                if band == 0 || band > grid.dealias_cutoff() {
                    return Err(Error::config(
                        "band",
                        format!("must lie in 1..={}", grid.dealias_cutoff()),
                    ));
                }
                if modes == 0 || modes >= grid.ny() {
                    return Err(Error::config("modes", format!("must lie in 1..{}", grid.ny())));
                }
                if let Some(amp) = raw.amplitude {
                    positive("amplitude", amp)?;
                }
                InitialData::AnalyticBand {
                    amplitude: raw.amplitude,
                    band,
                    modes,
                    seed: raw.seed.unwrap_or(2024),
                }
            }
            "snapshot" => InitialData::Snapshot {
                u: raw
                    .snapshot_u
                    .ok_or_else(|| Error::config("snapshot_u", "required for family snapshot"))?,
                temp: raw
                    .snapshot_t
                    .ok_or_else(|| Error::config("snapshot_t", "required for family snapshot"))?,
            },
            other => {
                return Err(Error::config(
                    "family",
                    format!("unknown family `{other}` (heat, analytic-band, snapshot)"),
                ))
            }
        };
        let order = match raw.order.unwrap_or(1) {
            1 => SchemeOrder::First,
            2 => SchemeOrder::Second,
            o => return Err(Error::config("order", format!("{o} not in {{1, 2}}"))),
        };
        let sample_every = raw.sample_every.unwrap_or(10);
        if sample_every == 0 {
            return Err(Error::config("sample_every", "must be at least 1"));
        }
        Ok(Self {
            grid,
            eps,
            dt,
            horizon: raw.horizon,
            initial,
            a,
            lambda: raw.lambda,
            mu: raw.mu,
            r,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
            sample_every,
            dealias: raw.dealias.unwrap_or(true),
            hydrostatic_split: raw.hydrostatic_split.unwrap_or(true),
            order,
            mean_flow: raw.mean_flow.unwrap_or(MeanFlow::ZeroMeanGradient),
            c1: positive("c1", raw.c1.unwrap_or(0.1))?,
            c0: positive("c0", raw.c0.unwrap_or(0.1))?,
            stiffness_safety: positive("stiffness_safety", raw.stiffness_safety.unwrap_or(1.0))?,
        })
    }

    /// Baseline configuration for programmatic use.
    pub fn new(grid: StripGrid, horizon: f64, initial: InitialData) -> Self {
        Self {
            grid,
            eps: vec![0.1],
            dt: 1e-3,
            horizon,
            initial,
            a: 0.5,
            lambda: None,
            mu: None,
            r: PI * PI / 2.0,
            output_dir: PathBuf::from("runs"),
            sample_every: 10,
            dealias: true,
            hydrostatic_split: true,
            order: SchemeOrder::First,
            mean_flow: MeanFlow::ZeroMeanGradient,
            c1: 0.1,
            c0: 0.1,
            stiffness_safety: 1.0,
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.eps.len() > 1
    }

    /// Number of steps covering the horizon (last step may overshoot by < dt·1e-9).
    pub fn num_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Hex sha256 of the canonical resolved JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Output root, honouring the environment override.
    pub fn output_root(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root),
            _ => self.output_dir.clone(),
        }
    }
}

/// Type-checks a single key so type errors carry the key name.
fn probe_type(single: Value) -> std::result::Result<(), String> {
    #[derive(Deserialize)]
    #[allow(dead_code)]
    struct Probe {
        nx: Option<usize>,
        ny: Option<usize>,
        lx: Option<f64>,
        eps: Option<EpsSpec>,
        dt: Option<f64>,
        horizon: Option<f64>,
        family: Option<String>,
        amplitude: Option<f64>,
        band: Option<usize>,
        modes: Option<usize>,
        seed: Option<u64>,
        snapshot_u: Option<PathBuf>,
        snapshot_t: Option<PathBuf>,
        a: Option<f64>,
        lambda: Option<f64>,
        mu: Option<f64>,
        r: Option<f64>,
        output_dir: Option<PathBuf>,
        sample_every: Option<usize>,
        dealias: Option<bool>,
        hydrostatic_split: Option<bool>,
        order: Option<u8>,
        mean_flow: Option<MeanFlow>,
        c1: Option<f64>,
        c0: Option<f64>,
        stiffness_safety: Option<f64>,
    }
    serde_json::from_value::<Probe>(single)
        .map(|_| ())
        .map_err(|e| e.to_string())
}
