//! Draws from ν restricted to an interval (lo, hi] ⊂ (0, 1], normalised.

use rand::Rng;

use super::{nu_interval_mass, poly_power_integral, MeasureError, MeasureKind, MeasureSpec, Result};
use crate::rng::open01;

#[derive(Debug, Clone)]
enum Inner {
    Atoms {
        locations: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Beta {
        alpha: f64,
        pieces: Vec<BetaPiece>,
        cumulative: Vec<f64>,
    },
    Poly {
        pieces: Vec<PolyPiece>,
        cumulative: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy)]
enum BetaPiece {
    /// (a, b] ⊂ (0, 1/2]: proposal ∝ x^{-1-α}.
    Lower { a: f64, b: f64 },
    /// (a, b] ⊂ [1/2, 1]: proposal ∝ (1-x)^{α-1}.
    Upper { a: f64, b: f64 },
}

#[derive(Debug, Clone)]
struct PolyPiece {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
    mass: f64,
}

/// Reusable sampler for ν on (lo, hi].
#[derive(Debug, Clone)]
pub struct NuSampler {
    lo: f64,
    hi: f64,
    mass: f64,
    inner: Inner,
}

fn cumulate(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let total = *cumulative.last().unwrap();
    let target = open01(rng) * total;
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

impl NuSampler {
    pub fn new(m: &MeasureSpec, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi <= 1.0 && hi > lo) {
            return Err(MeasureError::InvalidArgument(format!(
                "sampling interval ({lo}, {hi}] must satisfy 0 < lo < hi <= 1"
            )));
        }
        let mass = nu_interval_mass(m, lo, hi)?;
        if !(mass > 0.0) {
            return Err(MeasureError::InvalidArgument(format!("nu has no mass on ({lo}, {hi}]")));
        }
        let inner = match m.kind() {
            MeasureKind::Atoms(atoms) => {
                let sel: Vec<_> = atoms.iter().filter(|a| a.location > lo && a.location <= hi).collect();
                let weights: Vec<f64> = sel.iter().map(|a| a.mass / (a.location * a.location)).collect();
                Inner::Atoms {
                    locations: sel.iter().map(|a| a.location).collect(),
                    cumulative: cumulate(&weights),
                }
            }
            MeasureKind::Beta { alpha } => {
                let mut pieces = Vec::new();
                let mut weights = Vec::new();
                if lo < 0.5 {
                    let b = hi.min(0.5);
                    pieces.push(BetaPiece::Lower { a: lo, b });
                    weights.push(nu_interval_mass(m, lo, b)?);
                }
                if hi > 0.5 {
                    let a = lo.max(0.5);
                    pieces.push(BetaPiece::Upper { a, b: hi });
                    weights.push(nu_interval_mass(m, a, hi)?);
                }
                Inner::Beta {
                    alpha: *alpha,
                    pieces,
                    cumulative: cumulate(&weights),
                }
            }
            MeasureKind::PiecewiseDensity(ps) => {
                let pieces: Vec<PolyPiece> = ps
                    .iter()
                    .filter_map(|p| {
                        let a = p.lo.max(lo);
                        let b = p.hi.min(hi);
                        if b > a {
                            let mass = poly_power_integral(&p.coeffs, a, b, -2);
                            (mass > 0.0).then(|| PolyPiece {
                                a,
                                b,
                                coeffs: p.coeffs.clone(),
                                mass,
                            })
                        } else {
                            None
                        }
                    })
                    .collect();
                let weights: Vec<f64> = pieces.iter().map(|p| p.mass).collect();
                Inner::Poly {
                    pieces,
                    cumulative: cumulate(&weights),
                }
            }
        };
        Ok(Self { lo, hi, mass, inner })
    }

    /// ν((lo, hi]).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// One draw in (lo, hi] ∩ (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match &self.inner {
                Inner::Atoms { locations, cumulative } => locations[pick(cumulative, rng)],
                Inner::Beta {
                    alpha,
                    pieces,
                    cumulative,
                } => sample_beta_piece(*alpha, pieces[pick(cumulative, rng)], rng),
                Inner::Poly { pieces, cumulative } => sample_poly_piece(&pieces[pick(cumulative, rng)], rng),
            };
            if x > self.lo && x <= self.hi && x < 1.0 {
                return x;
            }
        }
    }
}

fn sample_beta_piece<R: Rng + ?Sized>(alpha: f64, piece: BetaPiece, rng: &mut R) -> f64 {
    loop {
        match piece {
            BetaPiece::Lower { a, b } => {
                let (pa, pb) = (a.powf(-alpha), b.powf(-alpha));
                let x = (pa - open01(rng) * (pa - pb)).powf(-1.0 / alpha);
                let bound = (1.0 - a).powf(alpha - 1.0).max((1.0 - b).powf(alpha - 1.0));
                if open01(rng) * bound <= (1.0 - x).powf(alpha - 1.0) {
                    return x;
                }
            }
            BetaPiece::Upper { a, b } => {
                let (wa, wb) = ((1.0 - a).powf(alpha), (1.0 - b).powf(alpha));
                let w = (wb + open01(rng) * (wa - wb)).powf(1.0 / alpha);
                let x = 1.0 - w;
                if open01(rng) * a.powf(-1.0 - alpha) <= x.powf(-1.0 - alpha) {
                    return x;
                }
            }
        }
    }
}

fn sample_poly_piece<R: Rng + ?Sized>(p: &PolyPiece, rng: &mut R) -> f64 {
    let target = open01(rng) * p.mass;
    let (mut lo, mut hi) = (p.a, p.b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if poly_power_integral(&p.coeffs, p.a, mid, -2) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One draw from ν restricted to (eps, 1), normalised.
pub fn sample_nu_truncated<R: Rng + ?Sized>(m: &MeasureSpec, eps: f64, rng: &mut R) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    Ok(NuSampler::new(m, eps, 1.0)?.sample(rng))
}
