//! Poisson-driven flow of bridges.
//!
//! Points (t, x) of a Poisson process with intensity dt ⊗ ν on (0, t] × (eps, 1)
//! are composed as simple bridges in increasing time order. Lowering eps adds
//! an independent layer of points with marks in (eps_new, eps], so one path is
//! observed at every truncation level.
//!
//! Every point carries an id. The jump location of the point's simple bridge
//! is read from a counter-addressed stream keyed by that id, so a point keeps
//! its location at every level it appears in. Paintbox uniforms come from a
//! separate lane and are likewise shared across levels.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{compose_tracked, paintbox_from_uniforms, BridgeError, CompositionCase, FiniteBridge};
use crate::measures::{nu_interval_mass, nu_tail_mass, MeasureError, MeasureSpec, NuSampler};
use crate::partition::Partition;
use crate::rng::{open01, split, KeyedUniforms, Lane, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;

/// Redraws allowed when a location hits a hole boundary.
const MAX_ATTEMPTS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonPoint {
    pub time: f64,
    pub x: f64,
    pub id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonPointSet {
    horizon: f64,
    eps: f64,
    points: Vec<PoissonPoint>,
    next_id: u64,
}

impl PoissonPointSet {
    pub fn empty(horizon: f64, eps: f64) -> Self {
        Self {
            horizon,
            eps,
            points: Vec::new(),
            next_id: 0,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Points sorted by time.
    pub fn points(&self) -> &[PoissonPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn add_layer<R: Rng + ?Sized>(&mut self, m: &MeasureSpec, lo: f64, hi: f64, rng: &mut R) -> Result<()> {
        let mass = if hi >= 1.0 {
            nu_tail_mass(m, lo)?
        } else {
            nu_interval_mass(m, lo, hi)?
        };
        let mean = self.horizon * mass;
        let count = if mean > 0.0 {
            let d = Poisson::new(mean).map_err(|e| FlowError::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
            d.sample(rng) as u64
        } else {
            0
        };
        if count == 0 {
            return Ok(());
        }
        let sampler = NuSampler::new(m, lo, hi.min(1.0))?;
        let mut times: HashSet<u64> = self.points.iter().map(|p| p.time.to_bits()).collect();
        for _ in 0..count {
            let time = loop {
                let s = self.horizon * open01(rng);
                if times.insert(s.to_bits()) {
                    break s;
                }
            };
            let x = sampler.sample(rng);
            self.points.push(PoissonPoint {
                time,
                x,
                id: self.next_id,
            });
            self.next_id += 1;
        }
        self.points.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(())
    }
}

fn check_level(t: f64, eps: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FlowError::InvalidArgument(format!(
            "horizon must be positive and finite, got {t}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FlowError::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Points of M on (0, t] × (eps, 1).
pub fn sample_points<R: Rng + ?Sized>(m: &MeasureSpec, t: f64, eps: f64, rng: &mut R) -> Result<PoissonPointSet> {
    check_level(t, eps)?;
    let mut p = PoissonPointSet::empty(t, eps);
    p.add_layer(m, eps, 1.0, rng)?;
    Ok(p)
}

/// `p` plus an independent layer with marks in (eps_new, p.eps].
pub fn refine_points<R: Rng + ?Sized>(
    p: &PoissonPointSet,
    m: &MeasureSpec,
    eps_new: f64,
    rng: &mut R,
) -> Result<PoissonPointSet> {
    check_level(p.horizon, eps_new)?;
    if !(eps_new < p.eps) {
        return Err(FlowError::InvalidArgument(format!(
            "refinement needs eps_new < {}, got {eps_new}",
            p.eps
        )));
    }
    let mut out = p.clone();
    out.eps = eps_new;
    out.add_layer(m, eps_new, p.eps, rng)?;
    Ok(out)
}

/// Bookkeeping for one composition step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub x: f64,
    pub id: u64,
    /// Jump location used.
    pub u: f64,
    /// Number of redraws after boundary collisions.
    pub redraws: u32,
    pub case: CompositionCase,
    /// Dust of the bridge composed so far, before this event.
    pub dust_before: f64,
    /// Dust remap of u with respect to that prefix bridge.
    pub remap: f64,
    /// Index of the created hole in case A.
    pub new_hole: Option<usize>,
    pub child_map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowBuild {
    pub bridge: FiniteBridge,
    pub case_a: usize,
    pub redraws: u32,
    /// Present only for tracked builds.
    pub events: Option<Vec<EventRecord>>,
}

/// Compose the simple bridges of `p` in time order.
pub fn build_flow_bridge(p: &PoissonPointSet, locations: &mut KeyedUniforms, track: bool) -> Result<FlowBuild> {
    let mut bridge = FiniteBridge::identity();
    let mut events = track.then(Vec::new);
    let mut case_a = 0;
    let mut total_redraws = 0;
    for pt in &p.points {
        let mut attempt = 0;
        let (tracked, u) = loop {
            let u = locations.get(pt.id, attempt);
            match compose_tracked(&bridge, pt.x, u) {
                Ok(t) => break (t, u),
                Err(BridgeError::BoundaryCollision { .. }) if attempt + 1 < MAX_ATTEMPTS => {
                    log::warn!("point {} hit a hole boundary at u = {u}; redrawing", pt.id);
                    attempt += 1;
                }
                Err(e) => return Err(e.into()),
            }
        };
        total_redraws += attempt;
        if tracked.case == CompositionCase::A {
            case_a += 1;
        }
        if let Some(ev) = events.as_mut() {
            ev.push(EventRecord {
                time: pt.time,
                x: pt.x,
                id: pt.id,
                u,
                redraws: attempt,
                case: tracked.case,
                dust_before: bridge.dust(),
                remap: bridge.dust_remap(u),
                new_hole: tracked.new_hole.map(|(i, _)| i),
                child_map: tracked.child_map.clone(),
            });
        }
        bridge = tracked.result;
    }
    Ok(FlowBuild {
        bridge,
        case_a,
        redraws: total_redraws,
        events,
    })
}

/// `(threshold, number of holes of size ≥ threshold)`.
pub fn hole_census(b: &FiniteBridge, thresholds: &[f64]) -> Vec<(f64, usize)> {
    let mut sizes: Vec<f64> = b.holes().iter().map(|h| h.size).collect();
    sizes.sort_by(f64::total_cmp);
    thresholds
        .iter()
        .map(|&th| (th, sizes.len() - sizes.partition_point(|&s| s < th)))
        .collect()
}

/// One check of the hole lower bound at level j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub j: u32,
    /// Final holes of size ≥ D_final / j.
    pub holes: usize,
    /// Events with x > 1/j whose remapped location fell below the prefix dust.
    pub bound: usize,
}

impl LowerBound {
    pub fn holds(&self) -> bool {
        self.holes >= self.bound
    }
}

/// For each j: #{holes of the final bridge with size ≥ D_final/j} against
/// #{events with x > 1/j and U < dust before the event}.
pub fn lower_bound_check(events: &[EventRecord], bridge: &FiniteBridge, js: &[u32]) -> Vec<LowerBound> {
    let d = bridge.dust();
    js.iter()
        .map(|&j| {
            // relative slack of a few ulps: child sizes and D_final are
            // products of the same factors rounded in different orders
            let threshold = d / j as f64 * (1.0 - 1e-12);
            let holes = bridge.holes().iter().filter(|h| h.size >= threshold).count();
            let bound = events
                .iter()
                .filter(|e| e.x > 1.0 / j as f64 && e.remap < e.dust_before)
                .count();
            LowerBound { j, holes, bound }
        })
        .collect()
}

/// Random streams of one flow replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowStreams {
    pub root: u64,
    pub replicate: u64,
}

impl FlowStreams {
    pub fn new(root: u64, replicate: u64) -> Self {
        Self { root, replicate }
    }

    pub fn points(&self) -> SimRng {
        split(self.root, self.replicate, Lane::Points)
    }

    pub fn locations(&self) -> KeyedUniforms {
        KeyedUniforms::new(self.root, self.replicate, Lane::Locations)
    }

    pub fn paintbox(&self) -> SimRng {
        split(self.root, self.replicate, Lane::Paintbox)
    }

    /// The n paintbox uniforms shared by every level.
    pub fn paintbox_uniforms(&self, n: usize) -> Vec<f64> {
        let mut rng = self.paintbox();
        (0..n).map(|_| rng.random::<f64>()).collect()
    }
}

/// What to compute along a coupled truncation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRequest {
    pub t: f64,
    /// Strictly decreasing truncation levels.
    pub eps_grid: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Paintbox size; `None` skips partitions.
    pub paint_n: Option<usize>,
    /// Keep the event log of the finest level.
    pub track: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub eps: f64,
    pub points: usize,
    pub dust: f64,
    /// Π(1 − xᵢ) over the level's points, multiplied in time order.
    pub dust_product: f64,
    pub holes: usize,
    pub case_a: usize,
    pub census: Vec<(f64, usize)>,
    pub partition: Option<Partition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// Bridge at the finest level.
    pub bridge: FiniteBridge,
    pub levels: Vec<LevelSummary>,
    /// Event log of the finest level, when requested.
    pub events: Option<Vec<EventRecord>>,
}

impl FlowResult {
    pub fn dust_by_level(&self) -> Vec<(f64, f64)> {
        self.levels.iter().map(|l| (l.eps, l.dust)).collect()
    }

    pub fn point_count_by_level(&self) -> Vec<(f64, usize)> {
        self.levels.iter().map(|l| (l.eps, l.points)).collect()
    }

    /// Census of the finest bridge.
    pub fn hole_census(&self, thresholds: &[f64]) -> Vec<(f64, usize)> {
        hole_census(&self.bridge, thresholds)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(FlowError::InvalidArgument("eps grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(FlowError::InvalidArgument(
            "eps grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// One coupled path observed at every level of `req.eps_grid`.
pub fn simulate_flow(m: &MeasureSpec, req: &FlowRequest, streams: FlowStreams) -> Result<FlowResult> {
    validate_grid(&req.eps_grid)?;
    let mut points_rng = streams.points();
    let mut locations = streams.locations();
    let uniforms = req.paint_n.map(|n| streams.paintbox_uniforms(n));
    let mut levels = Vec::with_capacity(req.eps_grid.len());
    let mut points: Option<PoissonPointSet> = None;
    let mut last = None;
    for (idx, &eps) in req.eps_grid.iter().enumerate() {
        let p = match points.take() {
            None => sample_points(m, req.t, eps, &mut points_rng)?,
            Some(prev) => refine_points(&prev, m, eps, &mut points_rng)?,
        };
        let finest = idx + 1 == req.eps_grid.len();
        let build = build_flow_bridge(&p, &mut locations, req.track && finest)?;
        let dust_product = p.points.iter().fold(1.0, |acc, pt| acc * (1.0 - pt.x));
        levels.push(LevelSummary {
            eps,
            points: p.len(),
            dust: build.bridge.dust(),
            dust_product,
            holes: build.bridge.holes().len(),
            case_a: build.case_a,
            census: hole_census(&build.bridge, &req.thresholds),
            partition: uniforms.as_ref().map(|v| paintbox_from_uniforms(&build.bridge, v)),
        });
        points = Some(p);
        last = Some(build);
    }
    let last = last.expect("grid is nonempty");
    Ok(FlowResult {
        bridge: last.bridge,
        levels,
        events: last.events,
    })
}

/// Paintbox partition of {1..n} from the bridge truncated at eps.
pub fn flow_partition(m: &MeasureSpec, t: f64, eps: f64, n: usize, streams: FlowStreams) -> Result<Partition> {
    if n < 1 {
        return Err(FlowError::InvalidArgument("n must be at least 1".into()));
    }
    let p = sample_points(m, t, eps, &mut streams.points())?;
    let build = build_flow_bridge(&p, &mut streams.locations(), false)?;
    Ok(paintbox_from_uniforms(&build.bridge, &streams.paintbox_uniforms(n)))
}

#[cfg(test)]
mod tests;
