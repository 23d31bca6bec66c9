//! Flat `key=value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. The canonical form written by [`ExperimentConfig::to_kv`]
//! lists every key in a fixed order with defaults filled in; its SHA-256 is
//! the config hash.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HarnessError, Result};
use crate::embed::Selector;
use crate::measures::MeasureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Chain,
    Flow,
    Embed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Chain => "chain",
            Mode::Flow => "flow",
            Mode::Embed => "embed",
        })
    }
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Mode::Chain),
            "flow" => Ok(Mode::Flow),
            "embed" => Ok(Mode::Embed),
            _ => Err(HarnessError::Config(format!(
                "mode must be chain, flow or embed, got {s:?}"
            ))),
        }
    }
}

pub const KEYS: [&str; 11] = [
    "measure",
    "mode",
    "n",
    "t",
    "eps",
    "thresholds",
    "replicates",
    "seed",
    "snapshots",
    "selector",
    "first_replicate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub measure: MeasureSpec,
    pub mode: Mode,
    /// Sample size: chain and embed block count, paintbox size in flow mode
    /// (0 skips the paintbox).
    pub n: usize,
    /// Horizon (chain, flow) or reference time T (embed).
    pub t: f64,
    /// Strictly decreasing truncation levels (flow).
    pub eps_grid: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Chain snapshot times; empty means `[t]`.
    pub snapshots: Vec<f64>,
    pub selector: Selector,
    /// Index of the first replicate, for splitting a campaign.
    pub first_replicate: u64,
}

impl ExperimentConfig {
    pub fn new(measure: MeasureSpec, mode: Mode, seed: u64) -> Self {
        Self {
            measure,
            mode,
            n: 10,
            t: 1.0,
            eps_grid: vec![0.01],
            thresholds: vec![0.01],
            replicates: 1000,
            seed,
            snapshots: Vec::new(),
            selector: Selector::NonSingleton,
            first_replicate: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.replicates < 1 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return bad(format!("t must be finite and nonnegative, got {}", self.t));
        }
        if self.eps_grid.is_empty() {
            return bad("eps grid is empty".into());
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("eps values must lie in (0, 1)".into());
        }
        if self.eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("eps grid must be strictly decreasing".into());
        }
        if self.thresholds.iter().any(|&h| !(h >= 0.0)) {
            return bad("thresholds must be nonnegative".into());
        }
        match self.mode {
            Mode::Chain | Mode::Embed if self.n < 2 => return bad(format!("n must be at least 2, got {}", self.n)),
            Mode::Flow if !(self.t > 0.0) => return bad("flow mode needs t > 0".into()),
            _ => {}
        }
        if let Some(s) = self.snapshots.iter().find(|&&s| !(s >= 0.0 && s <= self.t)) {
            return bad(format!("snapshot time {s} outside [0, {}]", self.t));
        }
        Ok(())
    }

    /// Snapshot times actually used in chain mode.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.snapshots.is_empty() {
            vec![self.t]
        } else {
            self.snapshots.clone()
        }
    }

    /// Canonical text form, one `key=value` per line in [`KEYS`] order.
    pub fn to_kv(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let selector = match self.selector {
            Selector::NonSingleton => "nonsingleton",
            Selector::All => "all",
        };
        let values = [
            self.measure.to_string(),
            self.mode.to_string(),
            self.n.to_string(),
            self.t.to_string(),
            list(&self.eps_grid),
            list(&self.thresholds),
            self.replicates.to_string(),
            self.seed.to_string(),
            list(&self.snapshots),
            selector.to_string(),
            self.first_replicate.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Hex SHA-256 of [`Self::to_kv`].
    pub fn hash(&self) -> String {
        sha256_hex(self.to_kv().as_bytes())
    }

    /// Build from parsed pairs; `measure` and `seed` are required.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(HarnessError::Config(format!("unknown key {k:?}")));
        }
        let get = |k: &str| map.get(k).map(|s| s.trim());
        let measure: MeasureSpec = get("measure")
            .ok_or_else(|| HarnessError::Config("missing key measure".into()))?
            .parse()?;
        let mode = get("mode").map_or(Ok(Mode::Chain), str::parse)?;
        let seed = parse_num::<u64>(
            "seed",
            get("seed").ok_or_else(|| HarnessError::Config("missing key seed".into()))?,
        )?;
        let mut c = Self::new(measure, mode, seed);
        if let Some(v) = get("n") {
            c.n = parse_num("n", v)?;
        }
        if let Some(v) = get("t") {
            c.t = parse_num("t", v)?;
        }
        if let Some(v) = get("eps") {
            c.eps_grid = parse_list("eps", v)?;
        }
        if let Some(v) = get("thresholds") {
            c.thresholds = parse_list("thresholds", v)?;
        }
        if let Some(v) = get("replicates") {
            c.replicates = parse_num("replicates", v)?;
        }
        if let Some(v) = get("snapshots") {
            c.snapshots = parse_list("snapshots", v)?;
        }
        if let Some(v) = get("selector") {
            c.selector = match v {
                "nonsingleton" => Selector::NonSingleton,
                "all" => Selector::All,
                _ => {
                    return Err(HarnessError::Config(format!(
                        "selector must be nonsingleton or all, got {v:?}"
                    )))
                }
            };
        }
        if let Some(v) = get("first_replicate") {
            c.first_replicate = parse_num("first_replicate", v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for ExperimentConfig {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_map(&parse_kv(s)?)
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_num(key, x.trim())).collect()
}

/// Parse `key=value` lines. Later duplicates override earlier ones.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key=value", no + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
