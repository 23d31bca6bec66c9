//! Monte Carlo campaigns: replicate management, estimators with standard
//! errors, oracle comparisons and the dichotomy-evidence experiment.
//!
//! Replicate i of a campaign with root seed s draws only from the streams
//! `split(s, i, lane)`, so replicates can run in any order and on any number of
//! threads. Per-replicate values are kept keyed by replicate index and reduced
//! in index order, which makes the report of a campaign identical to the merge
//! of its halves.

mod config;
mod evidence;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::chain::{simulate_chain_with, transition_probabilities, ChainError, RateTable, MAX_ORACLE_N};
use crate::embed::{first_induced, stratify, EmbedError, FirstInduced};
use crate::flow::{simulate_flow, FlowError, FlowRequest, FlowStreams};
use crate::measures::{classify, merger_rate, nu_first_moment, nu_tail_mass, MeasureError};
use crate::numfmt::fmt17;
use crate::partition::Partition;
use crate::rng::{split, Lane};
use crate::stats::{chi_square_test, MeanSe};

pub use config::{parse_kv, sha256_hex, ExperimentConfig, Mode, KEYS};
pub use evidence::{dichotomy_evidence, Check, EvidenceConfig, EvidenceRow, EvidenceTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("cannot merge campaigns: {0}")]
    Merge(String),
    #[error("regime {0} has no dichotomy experiment; coming down from infinity is decided by mu*")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Mean of one statistic over the replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation / √replicates.
    pub se: f64,
    pub replicates: usize,
}

/// Comparison of simulated output against an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Oracle value for mean comparisons.
    pub oracle: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    /// Canonical config text.
    pub config: String,
    pub regime: Option<String>,
    pub warnings: Vec<String>,
    pub estimates: Vec<Estimate>,
    pub tests: Vec<TestRow>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl McReport {
    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn test(&self, name: &str) -> Option<&TestRow> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Comment header: tool version, config hash, seed, resolved config.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# lcoal {}", self.tool_version);
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        let _ = writeln!(out, "# seed={}", self.seed);
        for line in self.config.lines() {
            let _ = writeln!(out, "# {line}");
        }
        if let Some(r) = &self.regime {
            let _ = writeln!(out, "# regime={r}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# WARNING: {w}");
        }
        out
    }

    /// CSV with columns `statistic,kind,value,se,count`.
    ///
    /// `kind` is `mean` for estimates; tests give a `statistic`, a `p_value`
    /// and, for mean comparisons, an `oracle` row.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push_str("statistic,kind,value,se,count\n");
        for e in &self.estimates {
            let _ = writeln!(
                out,
                "{},mean,{},{},{}",
                e.name,
                fmt17(e.mean),
                fmt17(e.se),
                e.replicates
            );
        }
        for t in &self.tests {
            let _ = writeln!(out, "{},statistic,{},,{}", t.name, fmt17(t.statistic), t.samples);
            let _ = writeln!(out, "{},p_value,{},,{}", t.name, fmt17(t.p_value), t.samples);
            if let Some(o) = t.oracle {
                let _ = writeln!(out, "{},oracle,{},,{}", t.name, fmt17(o), t.samples);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// What one replicate produced besides its scalar values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    None,
    /// Chain state at t.
    Partition(Partition),
    Induced(Option<FirstInduced>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: u64,
    /// Aligned with [`Campaign::names`].
    pub values: Vec<f64>,
    pub sample: Sample,
}

/// Raw per-replicate output of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub config: ExperimentConfig,
    pub names: Vec<String>,
    /// Sorted by replicate index.
    pub records: Vec<ReplicateRecord>,
    pub runtime: Duration,
}

fn at(label: &str, key: &str, x: f64) -> String {
    format!("{label}[{key}={x}]")
}

fn statistic_names(c: &ExperimentConfig) -> Vec<String> {
    let mut names = Vec::new();
    match c.mode {
        Mode::Chain => {
            for s in c.snapshot_times() {
                for label in ["blocks", "singletons", "nonsingletons", "unmerged12"] {
                    names.push(at(label, "t", s));
                }
            }
            names.push("events".into());
        }
        Mode::Flow => {
            for &eps in &c.eps_grid {
                for label in ["points", "dust", "holes", "case_a"] {
                    names.push(at(label, "eps", eps));
                }
                for &h in &c.thresholds {
                    names.push(format!("census[eps={eps},threshold={h}]"));
                }
            }
            if c.n > 0 {
                for label in ["blocks", "singletons", "nonsingletons"] {
                    names.push(format!("{label}[n={}]", c.n));
                }
            }
            names.push("dust_product_error".into());
        }
        Mode::Embed => {
            names.push("selected_blocks".into());
            names.push("has_dynamics".into());
        }
    }
    names
}

struct Prepared {
    table: Option<RateTable>,
}

fn replicate(c: &ExperimentConfig, prep: &Prepared, index: u64) -> Result<ReplicateRecord> {
    let mut values = Vec::new();
    let sample = match c.mode {
        Mode::Chain => {
            let table = prep.table.as_ref().expect("chain table");
            let snaps = c.snapshot_times();
            let traj = simulate_chain_with(table, c.n, c.t, &snaps, &mut split(c.seed, index, Lane::Chain))?;
            for (_, p) in &traj.snapshots {
                values.push(p.num_blocks() as f64);
                values.push(p.singleton_count() as f64);
                values.push(p.nonsingleton_count() as f64);
                values.push(f64::from(u8::from(!p.same_block(1, 2))));
            }
            values.push(traj.events.len() as f64);
            Sample::Partition(traj.partition_at(c.t))
        }
        Mode::Flow => {
            let req = FlowRequest {
                t: c.t,
                eps_grid: c.eps_grid.clone(),
                thresholds: c.thresholds.clone(),
                paint_n: (c.n > 0).then_some(c.n),
                track: false,
            };
            let r = simulate_flow(&c.measure, &req, FlowStreams::new(c.seed, index))?;
            let mut err: f64 = 0.0;
            for l in &r.levels {
                values.extend([l.points as f64, l.dust, l.holes as f64, l.case_a as f64]);
                values.extend(l.census.iter().map(|&(_, k)| k as f64));
                err = err.max((l.dust - l.dust_product).abs());
            }
            if let Some(p) = r.levels.last().and_then(|l| l.partition.as_ref()) {
                values.extend([
                    p.num_blocks() as f64,
                    p.singleton_count() as f64,
                    p.nonsingleton_count() as f64,
                ]);
            }
            values.push(err);
            Sample::None
        }
        Mode::Embed => {
            let table = prep.table.as_ref().expect("chain table");
            let first = first_induced(table, c.n, c.t, c.selector, &mut split(c.seed, index, Lane::Chain))?;
            values.push(first.map_or(0.0, |f| f.l as f64));
            values.push(f64::from(u8::from(first.is_some())));
            Sample::Induced(first)
        }
    };
    Ok(ReplicateRecord { index, values, sample })
}

impl Campaign {
    /// Run replicates `first_replicate .. first_replicate + replicates`.
    pub fn run(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let prep = Prepared {
            table: matches!(config.mode, Mode::Chain | Mode::Embed).then(|| RateTable::new(&config.measure, config.n)),
        };
        let lo = config.first_replicate;
        let hi = lo + config.replicates as u64;
        let records = (lo..hi)
            .into_par_iter()
            .map(|i| replicate(config, &prep, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            names: statistic_names(config),
            records,
            runtime: start.elapsed(),
        })
    }

    /// Join two campaigns over adjacent replicate ranges of the same config.
    pub fn merge(self, other: Campaign) -> Result<Campaign> {
        let (a, b) = if self.config.first_replicate <= other.config.first_replicate {
            (self, other)
        } else {
            (other, self)
        };
        let mut ca = a.config.clone();
        let mut cb = b.config.clone();
        let end_a = ca.first_replicate + ca.replicates as u64;
        if end_a != cb.first_replicate {
            return Err(HarnessError::Merge(format!(
                "replicate ranges do not abut: first ends at {end_a}, second starts at {}",
                cb.first_replicate
            )));
        }
        let replicates = ca.replicates + cb.replicates;
        cb.first_replicate = ca.first_replicate;
        cb.replicates = ca.replicates;
        if ca != cb {
            return Err(HarnessError::Merge("configurations differ".into()));
        }
        ca.replicates = replicates;
        let mut records = a.records;
        records.extend(b.records);
        Ok(Campaign {
            config: ca,
            names: a.names,
            records,
            runtime: a.runtime + b.runtime,
        })
    }

    /// One JSON object per replicate.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let values: serde_json::Map<String, serde_json::Value> = self
                .names
                .iter()
                .zip(&r.values)
                .map(|(k, &v)| (k.clone(), serde_json::json!(v)))
                .collect();
            let mut obj = serde_json::json!({ "replicate": r.index, "values": values });
            match &r.sample {
                Sample::Partition(p) => obj["partition"] = serde_json::json!(p.to_string()),
                Sample::Induced(f) => obj["first_induced"] = serde_json::json!(f),
                Sample::None => {}
            }
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }

    /// Reduce to a report. Values are summed in replicate-index order.
    pub fn finalize(&self) -> Result<McReport> {
        let c = &self.config;
        let reps = self.records.len();
        let mut warnings = Vec::new();
        let regime = match classify(&c.measure) {
            Ok(b) => Some(b.label.to_string()),
            Err(e @ MeasureError::Inconclusive { .. }) => {
                warnings.push(format!("classification inconclusive: {e}"));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let estimates: Vec<Estimate> = self
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let col: Vec<f64> = self.records.iter().map(|r| r.values[j]).collect();
                let est = MeanSe::of(&col);
                Estimate {
                    name: name.clone(),
                    mean: est.mean,
                    se: est.se,
                    replicates: reps,
                }
            })
            .collect();
        let mut tests = Vec::new();
        let mean_of = |name: &str| estimates.iter().find(|e| e.name == name).expect("named estimate");
        match c.mode {
            Mode::Chain => {
                let l22 = merger_rate(&c.measure, 2, 2)?;
                for s in c.snapshot_times() {
                    let e = mean_of(&at("unmerged12", "t", s));
                    tests.push(z_test(&at("unmerged12", "t", s), e, (-l22 * s).exp()));
                }
                if c.n <= MAX_ORACLE_N && c.t.is_finite() {
                    let law = transition_probabilities(&c.measure, c.n, c.t)?;
                    let mut counts = vec![0u64; law.len()];
                    for r in &self.records {
                        if let Sample::Partition(p) = &r.sample {
                            let idx = law.keys().position(|q| q == p).expect("state in oracle");
                            counts[idx] += 1;
                        }
                    }
                    let probs: Vec<f64> = law.values().copied().collect();
                    let res = chi_square_test(&counts, &probs);
                    tests.push(TestRow {
                        name: at("partition_law", "t", c.t),
                        statistic: res.statistic,
                        p_value: res.p_value,
                        oracle: None,
                        samples: reps,
                    });
                }
            }
            Mode::Flow => {
                for &eps in &c.eps_grid {
                    let oracle = (-c.t * nu_first_moment(&c.measure, eps)?).exp();
                    tests.push(z_test(
                        &at("dust", "eps", eps),
                        mean_of(&at("dust", "eps", eps)),
                        oracle,
                    ));
                    let oracle = c.t * nu_tail_mass(&c.measure, eps)?;
                    tests.push(z_test(
                        &at("points", "eps", eps),
                        mean_of(&at("points", "eps", eps)),
                        oracle,
                    ));
                }
            }
            Mode::Embed => {
                let table = RateTable::new(&c.measure, c.n);
                let outcomes: Vec<&FirstInduced> = self
                    .records
                    .iter()
                    .filter_map(|r| match &r.sample {
                        Sample::Induced(Some(f)) => Some(f),
                        _ => None,
                    })
                    .collect();
                let (strata, skipped) = stratify(&table, outcomes)?;
                for s in strata {
                    tests.push(TestRow {
                        name: format!("induced_wait_ks[l={}]", s.l),
                        statistic: s.ks_statistic,
                        p_value: s.ks_p,
                        oracle: Some(1.0 / s.rate),
                        samples: s.samples,
                    });
                    if let (Some(stat), Some(p)) = (s.size_chi_square, s.size_p) {
                        tests.push(TestRow {
                            name: format!("induced_size_chi2[l={}]", s.l),
                            statistic: stat,
                            p_value: p,
                            oracle: None,
                            samples: s.samples,
                        });
                    }
                }
                for (l, k) in skipped {
                    warnings.push(format!("stratum l={l} skipped: {k} samples"));
                }
            }
        }
        Ok(McReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: c.seed,
            config_hash: c.hash(),
            config: c.to_kv(),
            regime,
            warnings,
            estimates,
            tests,
            runtime: self.runtime,
        })
    }
}

/// Two-sided z-test of an estimate against an exact mean.
fn z_test(name: &str, e: &Estimate, oracle: f64) -> TestRow {
    let (statistic, p_value) = if e.se > 0.0 {
        let z = (e.mean - oracle) / e.se;
        let normal = Normal::standard();
        (z, 2.0 * normal.sf(z.abs()))
    } else {
        let p = if e.mean == oracle { 1.0 } else { 0.0 };
        (0.0, p)
    };
    TestRow {
        name: name.to_string(),
        statistic,
        p_value,
        oracle: Some(oracle),
        samples: e.replicates,
    }
}

/// Run a campaign and reduce it to a report.
pub fn run(config: &ExperimentConfig) -> Result<McReport> {
    Campaign::run(config)?.finalize()
}
