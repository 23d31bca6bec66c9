//! The coalescent induced on block representatives.
//!
//! At a reference time T the least element of each selected block of Π_T is a
//! representative w₁ < w₂ < ... < w_l. Replaying the base events after T, the
//! induced partition of {1..l} joins i and j when wᵢ and wⱼ share a base block.
//! The induced process is again a coalescent with the same merger rates.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{simulate_chain_with, ChainError, ChainEvent, ChainTrajectory, RateTable};
use crate::measures::MeasureSpec;
use crate::partition::MergeState;
use crate::rng::{split, Lane};
use crate::stats::{chi_square_test, ks_test, TestResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("only {0} selected blocks at the reference time; need at least 2")]
    TooFewBlocks(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Selector {
    /// Blocks with at least two elements.
    #[default]
    NonSingleton,
    All,
}

impl Selector {
    fn keeps(&self, block: &[u32]) -> bool {
        match self {
            Selector::NonSingleton => block.len() > 1,
            Selector::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedEvent {
    pub time: f64,
    /// Least representative element of each merged induced block.
    pub merged_representatives: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedProcess {
    pub base_trajectory: ChainTrajectory,
    pub reference_time: f64,
    /// w₁ < ... < w_l.
    pub representatives: Vec<u32>,
    pub induced_events: Vec<InducedEvent>,
    /// The induced process as a trajectory on {1..l} (element i stands for wᵢ).
    pub induced: ChainTrajectory,
    /// Base events after T that touched fewer than two induced blocks.
    pub dropped: usize,
}

impl EmbeddedProcess {
    /// Number of induced blocks at time t ≥ T.
    pub fn induced_blocks_at(&self, t: f64) -> usize {
        self.induced.blocks_at(t)
    }
}

/// Induced process of `traj` at reference time `t_ref`.
pub fn embed(traj: &ChainTrajectory, t_ref: f64, selector: Selector) -> Result<EmbeddedProcess> {
    if !(t_ref >= 0.0 && t_ref <= traj.t_end) {
        return Err(EmbedError::InvalidArgument(format!(
            "reference time {t_ref} outside [0, {}]",
            traj.t_end
        )));
    }
    let mut base = MergeState::singletons(traj.n);
    let split_at = traj.events.partition_point(|e| e.time <= t_ref);
    for e in &traj.events[..split_at] {
        base.merge(&e.merged).map_err(ChainError::from)?;
    }
    let mut representatives: Vec<u32> = base
        .blocks()
        .iter()
        .filter(|b| selector.keeps(b))
        .map(|b| b[0])
        .collect();
    representatives.sort_unstable();
    let l = representatives.len();
    if l < 2 {
        return Err(EmbedError::TooFewBlocks(l));
    }
    // rep_index[e - 1] = Some(i) when element e is wᵢ₊₁
    let mut rep_index: Vec<Option<usize>> = vec![None; traj.n];
    for (i, &w) in representatives.iter().enumerate() {
        rep_index[w as usize - 1] = Some(i);
    }
    let mut induced = MergeState::singletons(l);
    let mut induced_events = Vec::new();
    let mut events = Vec::new();
    let mut dropped = 0;
    for e in &traj.events[split_at..] {
        // least representative index inside each participating base block
        let mut touched: Vec<usize> = e
            .merged
            .iter()
            .filter_map(|&bi| {
                base.blocks()[bi]
                    .iter()
                    .filter_map(|&x| rep_index[x as usize - 1])
                    .min()
            })
            .collect();
        base.merge(&e.merged).map_err(ChainError::from)?;
        if touched.len() < 2 {
            dropped += 1;
            log::debug!(
                "base event at {} touches {} induced blocks; dropped",
                e.time,
                touched.len()
            );
            continue;
        }
        touched.sort_unstable();
        let positions: Vec<usize> = touched
            .iter()
            .map(|&r| {
                induced
                    .blocks()
                    .iter()
                    .position(|b| b.contains(&(r as u32 + 1)))
                    .expect("every representative lies in an induced block")
            })
            .collect();
        let mut merged_representatives: Vec<u32> = positions
            .iter()
            .map(|&p| representatives[induced.blocks()[p][0] as usize - 1])
            .collect();
        merged_representatives.sort_unstable();
        let mut merged = positions;
        merged.sort_unstable();
        induced.merge(&merged).map_err(ChainError::from)?;
        induced_events.push(InducedEvent {
            time: e.time,
            merged_representatives,
        });
        events.push(ChainEvent {
            time: e.time,
            merged,
            blocks_after: induced.num_blocks(),
        });
    }
    Ok(EmbeddedProcess {
        base_trajectory: traj.clone(),
        reference_time: t_ref,
        representatives,
        induced_events,
        induced: ChainTrajectory {
            n: l,
            t_end: traj.t_end,
            events,
            snapshots: Vec::new(),
            frozen: traj.frozen,
        },
        dropped,
    })
}

/// Comparison of the first induced event against a fresh l-block coalescent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub l: usize,
    pub samples: usize,
    /// R_l.
    pub rate: f64,
    pub mean_wait: f64,
    pub ks_statistic: f64,
    pub ks_p: f64,
    /// Absent when l = 2 (a single possible size).
    pub size_chi_square: Option<f64>,
    pub size_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedRateReport {
    pub n: usize,
    pub reference_time: f64,
    pub replicates: usize,
    pub selector: Selector,
    pub strata: Vec<Stratum>,
    /// `(l, samples)` for strata below the sample minimum.
    pub skipped: Vec<(usize, usize)>,
    /// Replicates with fewer than two selected blocks at T.
    pub no_dynamics: usize,
}

/// Minimum samples for a stratum to be tested.
pub const MIN_STRATUM: usize = 100;

/// First induced event of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstInduced {
    /// Selected blocks at T.
    pub l: usize,
    /// Time from T to the first induced event.
    pub wait: f64,
    /// Induced blocks merged by it.
    pub size: usize,
}

/// Simulate one base chain and report its first induced event, or `None`
/// when fewer than two blocks are selected at `t_ref`.
pub fn first_induced<R: Rng + ?Sized>(
    table: &RateTable,
    n: usize,
    t_ref: f64,
    selector: Selector,
    rng: &mut R,
) -> Result<Option<FirstInduced>> {
    let traj = simulate_chain_with(table, n, f64::INFINITY, &[], rng)?;
    match embed(&traj, t_ref, selector) {
        Ok(emb) => Ok(emb.induced_events.first().map(|e| FirstInduced {
            l: emb.representatives.len(),
            wait: e.time - t_ref,
            size: e.merged_representatives.len(),
        })),
        Err(EmbedError::TooFewBlocks(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Group first induced events by l and test each stratum with at least
/// [`MIN_STRATUM`] samples. Returns tested strata and `(l, samples)` of the
/// skipped ones.
pub fn stratify<'a>(
    table: &RateTable,
    outcomes: impl IntoIterator<Item = &'a FirstInduced>,
) -> Result<(Vec<Stratum>, Vec<(usize, usize)>)> {
    let mut by_l: BTreeMap<usize, (Vec<f64>, Vec<u64>)> = BTreeMap::new();
    for o in outcomes {
        let entry = by_l.entry(o.l).or_insert_with(|| (Vec::new(), vec![0; o.l + 1]));
        entry.0.push(o.wait);
        entry.1[o.size] += 1;
    }
    let mut strata = Vec::new();
    let mut skipped = Vec::new();
    for (l, (waits, sizes)) in by_l {
        if waits.len() < MIN_STRATUM {
            skipped.push((l, waits.len()));
            continue;
        }
        let row = table.row(l)?;
        let rate = row.total;
        let ks: TestResult = ks_test(&waits, |x| 1.0 - (-rate * x).exp());
        let (size_chi_square, size_p) = if l > 2 {
            let probs: Vec<f64> = (2..=l).map(|k| row.size_probability(k)).collect();
            let r = chi_square_test(&sizes[2..], &probs);
            (Some(r.statistic), Some(r.p_value))
        } else {
            (None, None)
        };
        strata.push(Stratum {
            l,
            samples: waits.len(),
            rate,
            mean_wait: waits.iter().sum::<f64>() / waits.len() as f64,
            ks_statistic: ks.statistic,
            ks_p: ks.p_value,
            size_chi_square,
            size_p,
        });
    }
    Ok((strata, skipped))
}

/// Simulate `replicates` base chains, embed at `t_ref`, and test the first
/// induced event of each block-count stratum.
pub fn induced_rate_test(
    m: &MeasureSpec,
    n: usize,
    t_ref: f64,
    replicates: usize,
    root_seed: u64,
    selector: Selector,
) -> Result<InducedRateReport> {
    if replicates == 0 {
        return Err(EmbedError::InvalidArgument("replicates must be positive".into()));
    }
    let table = RateTable::new(m, n.max(2));
    let outcomes: Vec<Option<FirstInduced>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| first_induced(&table, n, t_ref, selector, &mut split(root_seed, rep, Lane::Chain)))
        .collect::<Result<_>>()?;
    let no_dynamics = outcomes.iter().filter(|o| o.is_none()).count();
    let (strata, skipped) = stratify(&table, outcomes.iter().flatten())?;
    Ok(InducedRateReport {
        n,
        reference_time: t_ref,
        replicates,
        selector,
        strata,
        skipped,
        no_dynamics,
    })
}

/// Draw a reference time as the empirical median of the first event time.
pub fn median_first_event_time<R: Rng + ?Sized>(m: &MeasureSpec, n: usize, samples: usize, rng: &mut R) -> Result<f64> {
    let table = RateTable::new(m, n.max(2));
    let mut times: Vec<f64> = (0..samples.max(1))
        .map(|_| {
            simulate_chain_with(&table, n, f64::INFINITY, &[], rng)
                .map(|t| t.events.first().map_or(f64::INFINITY, |e| e.time))
        })
        .collect::<std::result::Result<_, _>>()?;
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::simulate_chain;
    use crate::partition::Partition;

    fn traj(n: usize, events: Vec<(f64, Vec<usize>)>) -> ChainTrajectory {
        let mut state = MergeState::singletons(n);
        let events = events
            .into_iter()
            .map(|(time, merged)| {
                state.merge(&merged).unwrap();
                ChainEvent {
                    time,
                    merged,
                    blocks_after: state.num_blocks(),
                }
            })
            .collect();
        ChainTrajectory {
            n,
            t_end: f64::INFINITY,
            events,
            snapshots: vec![],
            frozen: false,
        }
    }

    #[test]
    fn hand_traced_example() {
        // {1,2},{3,4} at T, then both merge
        let tr = traj(4, vec![(0.1, vec![0, 1]), (0.2, vec![1, 2]), (0.5, vec![0, 1])]);
        assert_eq!(tr.partition_at(0.3), "1,2|3,4".parse::<Partition>().unwrap());
        let emb = embed(&tr, 0.3, Selector::NonSingleton).unwrap();
        assert_eq!(emb.representatives, vec![1, 3]);
        assert_eq!(emb.induced_events.len(), 1);
        assert_eq!(emb.induced_events[0].merged_representatives, vec![1, 3]);
        assert_eq!(emb.induced_events[0].time, 0.5);
    }

    #[test]
    fn no_events_after_reference() {
        let tr = traj(4, vec![(0.1, vec![0, 1]), (0.2, vec![1, 2])]);
        let emb = embed(&tr, 0.3, Selector::NonSingleton).unwrap();
        assert!(emb.induced_events.is_empty());
        assert!(matches!(
            embed(&tr, 0.15, Selector::NonSingleton),
            Err(EmbedError::TooFewBlocks(1))
        ));
    }

    #[test]
    fn all_blocks_at_zero_is_identity() {
        let m = MeasureSpec::beta(0.5).unwrap();
        let mut rng = split(41, 0, Lane::Chain);
        for _ in 0..50 {
            let tr = simulate_chain(&m, 12, f64::INFINITY, &[], &mut rng).unwrap();
            let emb = embed(&tr, 0.0, Selector::All).unwrap();
            assert_eq!(emb.representatives, (1..=12).collect::<Vec<u32>>());
            assert_eq!(emb.induced.events, tr.events);
            assert_eq!(emb.dropped, 0);
        }
    }

    #[test]
    fn induced_block_count_matches_replay() {
        let m = MeasureSpec::uniform();
        let mut rng = split(42, 0, Lane::Chain);
        for _ in 0..200 {
            let tr = simulate_chain(&m, 20, f64::INFINITY, &[], &mut rng).unwrap();
            let t_ref = tr.events[tr.events.len() / 3].time;
            let emb = match embed(&tr, t_ref, Selector::NonSingleton) {
                Ok(e) => e,
                Err(EmbedError::TooFewBlocks(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            for e in tr.events.iter().filter(|e| e.time >= t_ref) {
                let base = tr.partition_at(e.time);
                let with_rep = base
                    .blocks()
                    .iter()
                    .filter(|b| b.iter().any(|x| emb.representatives.contains(x)))
                    .count();
                assert_eq!(emb.induced_blocks_at(e.time), with_rep);
            }
            let again = embed(&tr, t_ref, Selector::NonSingleton).unwrap();
            assert_eq!(again, emb);
        }
    }

    #[test]
    fn beta_size_law_l3() {
        let m = MeasureSpec::uniform();
        let table = RateTable::new(&m, 3);
        assert!((table.row(3).unwrap().size_probability(3) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn kingman_induced_rates() {
        let m = MeasureSpec::kingman();
        let report = induced_rate_test(&m, 6, 0.15, 20_000, 43, Selector::NonSingleton).unwrap();
        assert!(!report.strata.is_empty());
        for s in &report.strata {
            let l = s.l as f64;
            assert!((s.rate - l * (l - 1.0) / 2.0).abs() < 1e-12);
            assert!(s.ks_p > 0.001, "{s:?}");
            if let Some(p) = s.size_p {
                assert!(p > 0.001);
            }
        }
    }

    #[test]
    fn beta_induced_rates_all_selector() {
        let m = MeasureSpec::uniform();
        let report = induced_rate_test(&m, 5, 0.3, 20_000, 44, Selector::All).unwrap();
        for s in &report.strata {
            assert!(s.ks_p > 0.001, "{s:?}");
            if let Some(p) = s.size_p {
                assert!(p > 0.001, "{s:?}");
            }
        }
    }
}
