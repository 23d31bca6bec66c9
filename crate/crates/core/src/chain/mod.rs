//! Exact simulation of the restricted coalescent Π⁽ⁿ⁾.
//!
//! With i blocks the chain waits an Exp(R_i) time, R_i = Σ_k C(i,k)λ_{i,k},
//! picks the merger size k with probability C(i,k)λ_{i,k}/R_i and merges a
//! uniform k-subset of the current blocks.
//!
//! Trajectory export is one event per line: `time k i1,i2,... blocks_after`,
//! where the indices are 0-based positions in the canonical block order just
//! before the event.

mod oracle;

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{merger_weight, MeasureError, MeasureSpec};
use crate::numfmt::fmt17;
use crate::partition::{MergeState, Partition, PartitionError};
use crate::rng::open01;

pub use oracle::{
    rate_matrix, transition_probabilities, transition_probabilities_uniformized, RateMatrix, MAX_ORACLE_N,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rate matrix limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, ChainError>;

/// Merger weights for one block count i.
#[derive(Debug, Clone)]
pub struct RateRow {
    /// `weights[k - 2]` = C(i,k)λ_{i,k}.
    pub weights: Vec<f64>,
    cumulative: Vec<f64>,
    /// R_i.
    pub total: f64,
}

impl RateRow {
    fn new(m: &MeasureSpec, i: usize) -> Result<Self> {
        let weights = (2..=i as u64)
            .map(|k| merger_weight(m, i as u64, k))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            weights,
            total: acc,
            cumulative,
        })
    }

    /// Probability of a k-merger given an event.
    pub fn size_probability(&self, k: usize) -> f64 {
        self.weights[k - 2] / self.total
    }

    fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let target = open01(rng) * self.total;
        let pos = self.cumulative.partition_point(|&c| c <= target);
        // skip trailing zero-weight sizes reached through rounding
        let pos = pos.min(self.cumulative.len() - 1);
        let pos = (0..=pos).rev().find(|&p| self.weights[p] > 0.0).unwrap_or(pos);
        pos + 2
    }
}

/// Lazily filled table of rate rows for i = 2..=n, shareable across threads.
#[derive(Debug)]
pub struct RateTable {
    measure: MeasureSpec,
    rows: Vec<OnceLock<RateRow>>,
}

impl RateTable {
    pub fn new(m: &MeasureSpec, n: usize) -> Self {
        Self {
            measure: m.clone(),
            rows: (0..=n).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    pub fn max_blocks(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, i: usize) -> Result<&RateRow> {
        if i < 2 || i >= self.rows.len() {
            return Err(ChainError::InvalidArgument(format!(
                "block count {i} outside 2..={}",
                self.max_blocks()
            )));
        }
        let cell = &self.rows[i];
        if let Some(r) = cell.get() {
            return Ok(r);
        }
        let row = RateRow::new(&self.measure, i)?;
        Ok(cell.get_or_init(|| row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEvent {
    pub time: f64,
    /// Canonical 0-based indices of the merged blocks, increasing.
    pub merged: Vec<usize>,
    /// Number of blocks after the event.
    pub blocks_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrajectory {
    pub n: usize,
    pub t_end: f64,
    pub events: Vec<ChainEvent>,
    /// `(time, state)` in the order the times were requested.
    pub snapshots: Vec<(f64, Partition)>,
    /// The chain stopped because R_i = 0 with i ≥ 2 blocks.
    pub frozen: bool,
}

impl ChainTrajectory {
    /// State at time t, by replaying events with time ≤ t.
    pub fn partition_at(&self, t: f64) -> Partition {
        let mut state = MergeState::singletons(self.n);
        for e in self.events.iter().take_while(|e| e.time <= t) {
            state.merge(&e.merged).expect("recorded events are valid");
        }
        state.to_partition()
    }

    /// Block count at time t.
    pub fn blocks_at(&self, t: f64) -> usize {
        self.events
            .iter()
            .take_while(|e| e.time <= t)
            .last()
            .map_or(self.n, |e| e.blocks_after)
    }

    pub fn snapshot(&self, t: f64) -> Option<&Partition> {
        self.snapshots.iter().find(|(s, _)| *s == t).map(|(_, p)| p)
    }

    /// Line-delimited export.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let idx: Vec<String> = e.merged.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(
                out,
                "{} {} {} {}",
                fmt17(e.time),
                e.merged.len(),
                idx.join(","),
                e.blocks_after
            );
        }
        out
    }
}

/// Simulate Π⁽ⁿ⁾ on [0, t_end] (t_end may be infinite) from the all-singleton
/// state.
pub fn simulate_chain<R: Rng + ?Sized>(
    m: &MeasureSpec,
    n: usize,
    t_end: f64,
    snapshot_times: &[f64],
    rng: &mut R,
) -> Result<ChainTrajectory> {
    let table = RateTable::new(m, n.max(2));
    simulate_chain_with(&table, n, t_end, snapshot_times, rng)
}

/// As [`simulate_chain`], reusing a precomputed rate table.
pub fn simulate_chain_with<R: Rng + ?Sized>(
    table: &RateTable,
    n: usize,
    t_end: f64,
    snapshot_times: &[f64],
    rng: &mut R,
) -> Result<ChainTrajectory> {
    if n < 2 {
        return Err(ChainError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if n > table.max_blocks() {
        return Err(ChainError::InvalidArgument(format!(
            "rate table covers {} blocks, chain needs {n}",
            table.max_blocks()
        )));
    }
    if !(t_end >= 0.0) {
        return Err(ChainError::InvalidArgument(format!(
            "t_end must be nonnegative, got {t_end}"
        )));
    }
    if let Some(&s) = snapshot_times.iter().find(|&&s| !(s >= 0.0 && s <= t_end)) {
        return Err(ChainError::InvalidArgument(format!(
            "snapshot time {s} outside [0, {t_end}]"
        )));
    }
    let mut order: Vec<usize> = (0..snapshot_times.len()).collect();
    order.sort_by(|&a, &b| snapshot_times[a].total_cmp(&snapshot_times[b]));
    let mut taken: Vec<Option<Partition>> = vec![None; snapshot_times.len()];
    let mut next_snap = 0;

    let mut state = MergeState::singletons(n);
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut frozen = false;
    let mut pool: Vec<usize> = Vec::with_capacity(n);
    loop {
        let i = state.num_blocks();
        if i < 2 {
            break;
        }
        let row = table.row(i)?;
        if !(row.total > 0.0) {
            frozen = true;
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        let next = t + wait / row.total;
        while next_snap < order.len() && snapshot_times[order[next_snap]] < next {
            taken[order[next_snap]] = Some(state.to_partition());
            next_snap += 1;
        }
        if next > t_end {
            break;
        }
        let k = row.sample_size(rng);
        pool.clear();
        pool.extend(0..i);
        for j in 0..k {
            let pick = rng.random_range(j..i);
            pool.swap(j, pick);
        }
        let mut merged = pool[..k].to_vec();
        merged.sort_unstable();
        state.merge(&merged)?;
        t = next;
        events.push(ChainEvent {
            time: t,
            merged,
            blocks_after: state.num_blocks(),
        });
    }
    let last = state.to_partition();
    for slot in taken.iter_mut().filter(|s| s.is_none()) {
        *slot = Some(last.clone());
    }
    let snapshots = snapshot_times
        .iter()
        .zip(taken)
        .map(|(&s, p)| (s, p.expect("every snapshot filled")))
        .collect();
    if frozen {
        log::info!(
            "chain frozen with {} blocks: total merger rate is zero",
            state.num_blocks()
        );
    }
    Ok(ChainTrajectory {
        n,
        t_end,
        events,
        snapshots,
        frozen,
    })
}

#[cfg(test)]
mod tests;
