//! Finite bridges stored structurally: a dust slope plus an ordered jump list.
//!
//! A finite bridge is b(y) = s₀·y + Σ sᵢ 1{uᵢ ≤ y} with s₀ + Σ sᵢ = 1. Every
//! quantity here (holes, inverse, composition, paintbox) is computed from the
//! jump records, never by scanning a sampled curve.
//!
//! Composition follows the convention (f ∘ g)(x) = g(f(x)): `compose(first,
//! second)` applies `first`, then `second`.
//!
//! Text form: `"slope;u1:s1,u2:s2,..."` with 17 significant digits.

mod render;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kahan::compensated_sum;
use crate::numfmt::fmt17;
use crate::partition::Partition;

pub use render::render_svg;

/// Tolerance on slope + Σ sizes = 1.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("simple bridge jump size {0} outside (0, 1)")]
    BadJumpSize(f64),
    #[error("jump location {0} outside [0, 1)")]
    BadLocation(f64),
    #[error("invalid bridge: {0}")]
    Invalid(String),
    #[error("location {u} coincides with the right end of hole {hole}")]
    BoundaryCollision { u: f64, hole: usize },
    #[error("cannot parse bridge: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BridgeError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
}

/// A maximal interval [lo, hi) missing from the range of a bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub lo: f64,
    pub hi: f64,
    /// The jump size that produced the hole (exact, unlike `hi - lo`).
    pub size: f64,
}

impl Hole {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v < self.hi
    }

    /// Right end ∂H.
    pub fn boundary(&self) -> f64 {
        self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBridge {
    slope: f64,
    jumps: Vec<Jump>,
    /// `holes[j]` is produced by `jumps[j]`.
    holes: Vec<Hole>,
}

impl FiniteBridge {
    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            jumps: Vec::new(),
            holes: Vec::new(),
        }
    }

    /// Validate and build. Jumps are sorted; locations must be distinct.
    pub fn new(slope: f64, jumps: Vec<Jump>) -> Result<Self> {
        if !(0.0..=1.0).contains(&slope) {
            return Err(BridgeError::Invalid(format!("slope {slope} outside [0, 1]")));
        }
        let mut jumps = jumps;
        for j in &jumps {
            if !(j.location >= 0.0 && j.location < 1.0) {
                return Err(BridgeError::BadLocation(j.location));
            }
            if !(j.size > 0.0) {
                return Err(BridgeError::Invalid(format!("jump size {} not positive", j.size)));
            }
        }
        jumps.sort_by(|a, b| a.location.total_cmp(&b.location));
        if jumps.windows(2).any(|w| w[0].location == w[1].location) {
            return Err(BridgeError::Invalid("jump locations not distinct".into()));
        }
        let total = compensated_sum(std::iter::once(slope).chain(jumps.iter().map(|j| j.size)));
        if (total - 1.0).abs() > MASS_TOL {
            return Err(BridgeError::Invalid(format!("slope + sizes = {total}, expected 1")));
        }
        Ok(Self::from_sorted(slope, jumps))
    }

    fn from_sorted(slope: f64, jumps: Vec<Jump>) -> Self {
        let mut holes = Vec::with_capacity(jumps.len());
        let mut before = 0.0;
        let mut comp = 0.0;
        for j in &jumps {
            let lo = slope * j.location + (before + comp);
            holes.push(Hole {
                lo,
                hi: lo + j.size,
                size: j.size,
            });
            // Neumaier update of the prefix sum of sizes
            let t = before + j.size;
            if before.abs() >= j.size.abs() {
                comp += (before - t) + j.size;
            } else {
                comp += (j.size - t) + before;
            }
            before = t;
        }
        Self { slope, jumps, holes }
    }

    /// b_x(y) = (1 − x)y + x·1{u ≤ y}.
    pub fn simple(x: f64, u: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(BridgeError::BadJumpSize(x));
        }
        if !(u >= 0.0 && u < 1.0) {
            return Err(BridgeError::BadLocation(u));
        }
        Ok(Self::from_sorted(1.0 - x, vec![Jump { location: u, size: x }]))
    }

    /// The dust coefficient s₀.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// One hole per jump, sorted by `lo`.
    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    /// 𝒟(b): the dust, equal to the lower Lipschitz constant s₀.
    pub fn dust(&self) -> f64 {
        self.slope
    }

    /// Σ 𝒮(H) + 𝒟(b), compensated; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(std::iter::once(self.slope).chain(self.jumps.iter().map(|j| j.size)))
    }

    /// Index of the hole containing `v`, if any.
    pub fn hole_index(&self, v: f64) -> Option<usize> {
        let j = self.holes.partition_point(|h| h.hi <= v);
        (j < self.holes.len() && self.holes[j].lo <= v).then_some(j)
    }

    /// b(y).
    pub fn evaluate(&self, y: f64) -> f64 {
        let count = self.jumps.partition_point(|j| j.location <= y);
        if y >= 1.0 {
            return 1.0;
        }
        if count == 0 {
            self.slope * y
        } else {
            // hole end of the last jump at or before y, plus the linear part after it
            let h = &self.holes[count - 1];
            h.hi + self.slope * (y - self.jumps[count - 1].location)
        }
    }

    /// b(y⁻).
    pub fn evaluate_left(&self, y: f64) -> f64 {
        let count = self.jumps.partition_point(|j| j.location < y);
        if count == 0 {
            self.slope * y
        } else {
            let h = &self.holes[count - 1];
            h.hi + self.slope * (y - self.jumps[count - 1].location)
        }
    }

    /// Right-continuous inverse b⁻¹(v) = inf{z : b(z) > v}, with inf ∅ = 1.
    pub fn inverse(&self, v: f64) -> f64 {
        if v >= 1.0 {
            return 1.0;
        }
        if let Some(j) = self.hole_index(v) {
            return self.jumps[j].location;
        }
        // v lies on the range: count holes entirely below v
        let before = self.holes.partition_point(|h| h.hi <= v);
        if self.slope == 0.0 {
            // only reachable through rounding at a hole boundary
            return self.jumps.get(before).map_or(1.0, |j| j.location);
        }
        let (start_v, start_y) = if before == 0 {
            (0.0, 0.0)
        } else {
            (self.holes[before - 1].hi, self.jumps[before - 1].location)
        };
        let y = start_y + (v - start_v) / self.slope;
        let upper = self.jumps.get(before).map_or(1.0, |j| j.location);
        y.clamp(start_y, upper)
    }

    /// Remap f: dust segments stacked onto [0, 𝒟(b)), holes
    /// stacked after. f(V) is uniform when V is, and f(v) < 𝒟(b) iff v lies
    /// in no hole.
    pub fn dust_remap(&self, v: f64) -> f64 {
        if v >= 1.0 {
            return 1.0;
        }
        let before = self.holes.partition_point(|h| h.hi <= v);
        let sizes_before = compensated_sum(self.jumps[..before].iter().map(|j| j.size));
        match self.hole_index(v) {
            Some(j) => {
                let f = self.slope + sizes_before + (v - self.holes[j].lo);
                f.clamp(self.slope, prev_float(1.0))
            }
            None => {
                let f = (v - sizes_before).max(0.0);
                if self.slope > 0.0 {
                    f.min(prev_float(self.slope))
                } else {
                    f
                }
            }
        }
    }
}

fn prev_float(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        x
    }
}

/// A case-A location lands in dust; case B lands inside a hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompositionCase {
    A,
    B { hole: usize },
}

/// Outcome of composing with one more simple bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracked {
    pub result: FiniteBridge,
    pub case: CompositionCase,
    /// `child_map[i]` is the index in `result.holes()` of the child of hole i.
    pub child_map: Vec<usize>,
    /// Index and value of the hole created in case A.
    pub new_hole: Option<(usize, Hole)>,
}

/// Structural composition: `result(y) = second(first(y))`.
///
/// Each jump of `first` keeps its location and takes `second`'s increment
/// over its hole (closed at both ends). Each jump of `second` landing in the
/// dust of `first`'s range is pulled back to a new jump location.
pub fn compose(first: &FiniteBridge, second: &FiniteBridge) -> FiniteBridge {
    let a = first.slope;
    let c = second.slope;
    let mut sizes: Vec<f64> = first.jumps.iter().map(|j| c * j.size).collect();
    let mut extra: Vec<Jump> = Vec::new();
    let holes = &first.holes;
    for w in &second.jumps {
        let j = holes.partition_point(|h| h.hi < w.location);
        if j < holes.len() && holes[j].lo <= w.location {
            sizes[j] += w.size;
            continue;
        }
        if a == 0.0 {
            // no dust: the gap is a rounding artefact between adjacent holes
            let k = j.min(holes.len() - 1);
            log::warn!(
                "jump of second bridge at {} outside all holes of a dustless bridge; merged into hole {k}",
                w.location
            );
            sizes[k] += w.size;
            continue;
        }
        let (start_v, start_y) = if j == 0 {
            (0.0, 0.0)
        } else {
            (holes[j - 1].hi, first.jumps[j - 1].location)
        };
        let y = start_y + (w.location - start_v) / a;
        let upper = first.jumps.get(j).map_or(1.0, |jj| jj.location);
        if j > 0 && y <= start_y {
            log::warn!("pulled-back jump at {y} collides with jump {}; sizes merged", j - 1);
            sizes[j - 1] += w.size;
        } else if y >= upper {
            if j < first.jumps.len() {
                log::warn!("pulled-back jump at {y} collides with jump {j}; sizes merged");
                sizes[j] += w.size;
            } else {
                log::warn!("pulled-back jump at {y} reaches 1; clamped below 1");
                extra.push(Jump {
                    location: prev_float(1.0),
                    size: w.size,
                });
            }
        } else {
            extra.push(Jump {
                location: y,
                size: w.size,
            });
        }
    }
    let mut jumps: Vec<Jump> = first
        .jumps
        .iter()
        .zip(sizes)
        .map(|(j, s)| Jump {
            location: j.location,
            size: s,
        })
        .collect();
    if !extra.is_empty() {
        jumps.extend(extra);
        jumps.sort_by(|p, q| p.location.total_cmp(&q.location));
        let mut merged: Vec<Jump> = Vec::with_capacity(jumps.len());
        for j in jumps {
            match merged.last_mut() {
                Some(last) if last.location == j.location => {
                    log::warn!("coincident jump locations at {}; sizes merged", j.location);
                    last.size += j.size;
                }
                _ => merged.push(j),
            }
        }
        jumps = merged;
    }
    FiniteBridge::from_sorted(a * c, jumps)
}

/// Compose `first` with the simple bridge b_x at location `u` and classify the
/// step (case A: new hole of size x; case B: hole k absorbs the jump).
pub fn compose_tracked(first: &FiniteBridge, x: f64, u: f64) -> Result<Tracked> {
    let simple = FiniteBridge::simple(x, u)?;
    if let Some(k) = first.holes.iter().position(|h| h.hi == u) {
        return Err(BridgeError::BoundaryCollision { u, hole: k });
    }
    let case = match first.hole_index(u) {
        Some(k) => CompositionCase::B { hole: k },
        None => CompositionCase::A,
    };
    let result = compose(first, &simple);
    let (child_map, new_hole) = match case {
        CompositionCase::B { .. } => ((0..first.jumps.len()).collect(), None),
        CompositionCase::A => {
            // the only new jump location; old locations are preserved
            let old = &first.jumps;
            let pos = result
                .jumps
                .iter()
                .zip(old.iter())
                .position(|(r, o)| r.location != o.location)
                .unwrap_or(old.len());
            if result.jumps.len() != old.len() + 1 {
                // the pulled-back location collided with an old jump and was merged
                ((0..old.len()).collect(), None)
            } else {
                let map = (0..old.len()).map(|i| if i < pos { i } else { i + 1 }).collect();
                (map, Some((pos, result.holes[pos])))
            }
        }
    };
    Ok(Tracked {
        result,
        case,
        child_map,
        new_hole,
    })
}

/// Paintbox partition from given uniforms: i ~ j iff Vᵢ, Vⱼ fall in the same
/// hole. Points in the dust are singletons.
pub fn paintbox_from_uniforms(b: &FiniteBridge, uniforms: &[f64]) -> Partition {
    let n = uniforms.len();
    let mut by_hole: Vec<Vec<u32>> = vec![Vec::new(); b.holes.len()];
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    for (i, &v) in uniforms.iter().enumerate() {
        match b.hole_index(v) {
            Some(h) => by_hole[h].push(i as u32 + 1),
            None => blocks.push(vec![i as u32 + 1]),
        }
    }
    blocks.extend(by_hole.into_iter().filter(|b| !b.is_empty()));
    blocks.sort_unstable_by_key(|b| b[0]);
    Partition::from_canonical(n, blocks)
}

/// Paintbox partition of {1..n} from n i.i.d. uniforms.
pub fn paintbox<R: Rng + ?Sized>(b: &FiniteBridge, n: usize, rng: &mut R) -> Partition {
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    paintbox_from_uniforms(b, &uniforms)
}

impl fmt::Display for FiniteBridge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", fmt17(self.slope))?;
        for (i, j) in self.jumps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", fmt17(j.location), fmt17(j.size))?;
        }
        Ok(())
    }
}

impl FromStr for FiniteBridge {
    type Err = BridgeError;

    fn from_str(s: &str) -> Result<Self> {
        let (slope, rest) = s
            .trim()
            .split_once(';')
            .ok_or_else(|| BridgeError::Parse("missing ';'".into()))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| BridgeError::Parse(format!("{t:?}: {e}")))
        };
        let slope = num(slope)?;
        let mut jumps = Vec::new();
        for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (u, s) = item
                .split_once(':')
                .ok_or_else(|| BridgeError::Parse(format!("jump {item:?} lacks ':'")))?;
            jumps.push(Jump {
                location: num(u)?,
                size: num(s)?,
            });
        }
        Self::new(slope, jumps)
    }
}

#[cfg(test)]
mod tests;
