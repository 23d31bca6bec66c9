//! Driving measures Λ on [0, 1] and the derived ν(dx) = x⁻² Λ(dx).
//!
//! Three representations are supported:
//!
//! * `Beta { alpha }`: Λ is the β(2 − α, α) probability distribution,
//!   α ∈ (0, 2). α = 2 is mapped to Kingman's point mass at 0.
//! * `Atoms`: finitely many point masses at locations in [0, 1).
//! * `PiecewiseDensity`: a polynomial density on each piece of a partition of
//!   a subinterval of [0, 1].
//!
//! Throughout, 0⁰ = 1 at x = 0, so an atom at 0 contributes to λ_{i,k} only
//! when k = 2.

mod classify;
mod moments;
mod sampling;
mod text;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::quadrature;

pub use classify::{classify, Behaviour, Regime};
pub use moments::{
    moment, moment_with_depth, mu_star, ExtendedReal, TailDiagnostics, TailVerdict, DEFAULT_DEPTH, DEFAULT_I_MAX,
};
pub use sampling::{sample_nu_truncated, NuSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("malformed measure: {0}")]
    Malformed(String),
    #[error("unsupported moment order {0} (need n >= -2)")]
    UnsupportedOrder(i32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate measure: {0}")]
    Degenerate(String),
    #[error("inconclusive divergence test for {quantity}: numeric evidence {numeric:?} contradicts closed form (finite = {closed_form_finite})")]
    Inconclusive {
        quantity: String,
        numeric: TailVerdict,
        closed_form_finite: bool,
    },
}

pub type Result<T> = std::result::Result<T, MeasureError>;

/// A point mass of Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Polynomial density Σ c_j x^j on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn density(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    Beta { alpha: f64 },
    Atoms(Vec<Atom>),
    PiecewiseDensity(Vec<Piece>),
}

/// A validated driving measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    kind: MeasureKind,
    total_mass: f64,
}

impl MeasureSpec {
    /// Λ = β(2 − α, α). `alpha == 2` gives Kingman's coalescent.
    pub fn beta(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(MeasureError::Malformed(format!(
                "beta parameter {alpha} outside (0, 2]"
            )));
        }
        if alpha == 2.0 {
            return Ok(Self::kingman());
        }
        Ok(Self {
            kind: MeasureKind::Beta { alpha },
            total_mass: 1.0,
        })
    }

    pub fn atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(MeasureError::Malformed("empty atom list".into()));
        }
        for a in &atoms {
            if !(a.location >= 0.0 && a.location < 1.0) {
                return Err(MeasureError::Malformed(format!(
                    "atom location {} outside [0, 1)",
                    a.location
                )));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(MeasureError::Malformed(format!("atom mass {} not positive", a.mass)));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        // coincident locations are merged
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        let total_mass = merged.iter().map(|a| a.mass).sum();
        Ok(Self {
            kind: MeasureKind::Atoms(merged),
            total_mass,
        })
    }

    /// `breakpoints` b_0 < b_1 < ... < b_m in [0, 1]; `coeffs[j]` is the
    /// polynomial on [b_j, b_{j+1}).
    pub fn piecewise(breakpoints: &[f64], coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 || coeffs.len() != breakpoints.len() - 1 {
            return Err(MeasureError::Malformed(
                "need m+1 breakpoints for m polynomial pieces".into(),
            ));
        }
        if breakpoints[0] < 0.0 || *breakpoints.last().unwrap() > 1.0 {
            return Err(MeasureError::Malformed("breakpoints outside [0, 1]".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeasureError::Malformed("breakpoints not strictly increasing".into()));
        }
        let pieces: Vec<Piece> = breakpoints
            .windows(2)
            .zip(coeffs)
            .map(|(w, c)| Piece {
                lo: w[0],
                hi: w[1],
                coeffs: c,
            })
            .collect();
        for p in &pieces {
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(MeasureError::Malformed("non-finite coefficient".into()));
            }
            // nonnegativity on a fine grid, endpoints included
            for s in 0..=256 {
                let x = p.lo + (p.hi - p.lo) * s as f64 / 256.0;
                if p.density(x) < -1e-12 {
                    return Err(MeasureError::Malformed(format!("density negative at x = {x}")));
                }
            }
        }
        let total_mass = pieces
            .iter()
            .map(|p| poly_power_integral(&p.coeffs, p.lo, p.hi, 0))
            .sum::<f64>();
        if !(total_mass > 0.0) {
            return Err(MeasureError::Malformed("density has zero mass".into()));
        }
        Ok(Self {
            kind: MeasureKind::PiecewiseDensity(pieces),
            total_mass,
        })
    }

    /// Kingman's coalescent: unit point mass at 0.
    pub fn kingman() -> Self {
        Self::atoms(vec![Atom {
            location: 0.0,
            mass: 1.0,
        }])
        .expect("valid")
    }

    /// Lebesgue measure on [0, 1] (Bolthausen–Sznitman).
    pub fn uniform() -> Self {
        Self::beta(1.0).expect("valid")
    }

    /// Λ(dx) = x² dx on [0, 1].
    pub fn x_squared() -> Self {
        Self::piecewise(&[0.0, 1.0], vec![vec![0.0, 0.0, 1.0]]).expect("valid")
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Λ([0, 1]).
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_kingman(&self) -> bool {
        matches!(&self.kind, MeasureKind::Atoms(a) if a.len() == 1 && a[0].location == 0.0)
    }

    /// Mass of the atom at 0 (Kingman component).
    pub fn atom_at_zero(&self) -> f64 {
        match &self.kind {
            MeasureKind::Atoms(atoms) => atoms.iter().filter(|a| a.location == 0.0).map(|a| a.mass).sum(),
            _ => 0.0,
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match &self.kind {
            MeasureKind::Beta { alpha } => format!("beta(alpha={alpha})"),
            MeasureKind::Atoms(atoms) => {
                let parts: Vec<String> = atoms.iter().map(|a| format!("{}:{}", a.location, a.mass)).collect();
                format!("atoms({})", parts.join(","))
            }
            MeasureKind::PiecewiseDensity(pieces) => {
                let parts: Vec<String> = pieces
                    .iter()
                    .map(|p| {
                        let c: Vec<String> = p.coeffs.iter().map(|c| c.to_string()).collect();
                        format!("[{},{}):{}", p.lo, p.hi, c.join(" "))
                    })
                    .collect();
                format!("piecewise({})", parts.join(";"))
            }
        }
    }

    /// ∫ g dΛ over (lo, hi], or over [0, hi] when `lo == 0`.
    ///
    /// `g` must be finite on the integration range; endpoint singularities of
    /// the Beta density are removed by power substitutions.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if !(hi > lo) && !(lo == 0.0 && hi == 0.0) {
            return 0.0;
        }
        match &self.kind {
            MeasureKind::Atoms(atoms) => atoms
                .iter()
                .filter(|a| (a.location > lo || (lo == 0.0 && a.location == 0.0)) && a.location <= hi)
                .map(|a| a.mass * g(a.location))
                .sum(),
            MeasureKind::PiecewiseDensity(pieces) => pieces
                .iter()
                .map(|p| {
                    let a = p.lo.max(lo);
                    let b = p.hi.min(hi);
                    if b > a {
                        quadrature::integrate_default(|x| g(x) * p.density(x), a, b)
                    } else {
                        0.0
                    }
                })
                .sum(),
            MeasureKind::Beta { alpha } => beta_integrate(*alpha, &g, lo, hi),
        }
    }

    /// Closed-form log normaliser ln B(2 − α, α) for the Beta kind.
    fn beta_ln_norm(alpha: f64) -> f64 {
        ln_beta(2.0 - alpha, alpha)
    }

    /// R_m = ∫ (1 − x)^m Λ(dx) = λ_{m+2,2} for m = 0..count.
    pub(crate) fn binomial_tail_moments(&self, count: usize) -> Vec<f64> {
        match &self.kind {
            MeasureKind::Beta { alpha } => {
                // R_m = B(2-α, α+m)/B(2-α, α); ratio (α+m)/(2+m)
                let mut out = Vec::with_capacity(count);
                let mut r = 1.0;
                for m in 0..count {
                    out.push(r);
                    r *= (alpha + m as f64) / (2.0 + m as f64);
                }
                out
            }
            MeasureKind::Atoms(atoms) => (0..count)
                .map(|m| atoms.iter().map(|a| a.mass * pow0(1.0 - a.location, m as f64)).sum())
                .collect(),
            MeasureKind::PiecewiseDensity(_) => (0..count)
                .map(|m| self.integrate_split(|x| (1.0 - x).powi(m as i32), m))
                .collect(),
        }
    }

    /// Integrate a function that is sharply peaked at 0 with width ~ 1/scale
    /// over [0, 1], splitting at dyadic multiples of 1/scale.
    pub(crate) fn integrate_split<G: Fn(f64) -> f64>(&self, g: G, scale: usize) -> f64 {
        let mut cuts = vec![0.0];
        let mut c = 1.0 / (scale.max(1) as f64);
        while c < 1.0 {
            cuts.push(c);
            c *= 4.0;
        }
        cuts.push(1.0);
        cuts.windows(2).map(|w| self.integrate(&g, w[0], w[1])).sum()
    }
}

/// x^p with 0⁰ = 1.
pub(crate) fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// ∫_a^b Σ_j c_j x^{j+shift} dx; infinite when a = 0 and a term is not integrable.
pub(crate) fn poly_power_integral(coeffs: &[f64], a: f64, b: f64, shift: i32) -> f64 {
    let mut total = 0.0;
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let p = j as i32 + shift;
        let term = if p == -1 {
            if a == 0.0 {
                f64::INFINITY
            } else {
                (b / a).ln()
            }
        } else if p < -1 && a == 0.0 {
            f64::INFINITY
        } else {
            let q = (p + 1) as f64;
            (b.powf(q) - a.powf(q)) / q
        };
        total += c * term;
    }
    total
}

/// ∫_lo^hi g(x) x^{1-α}(1-x)^{α-1} dx / B(2-α, α).
fn beta_integrate<G: Fn(f64) -> f64>(alpha: f64, g: &G, lo: f64, hi: f64) -> f64 {
    let a = 1.0 - alpha; // exponent at 0, in (-1, 1)
    let b = alpha - 1.0; // exponent at 1, in (-1, 1)
    let norm = MeasureSpec::beta_ln_norm(alpha).exp();
    let mid = 0.5;
    let mut total = 0.0;
    // lower part [lo, min(hi, 1/2)]
    let l_hi = hi.min(mid);
    if l_hi > lo {
        if lo == 0.0 && a != 0.0 {
            // x = w^{1/(a+1)}: x^a dx = dw/(a+1)
            let e = 1.0 / (a + 1.0);
            let w_hi = l_hi.powf(a + 1.0);
            total += quadrature::integrate_default(
                |w| {
                    let x = w.powf(e);
                    g(x) * (1.0 - x).powf(b)
                },
                0.0,
                w_hi,
            ) * e;
        } else {
            total += quadrature::integrate_default(|x| g(x) * pow0(x, a) * (1.0 - x).powf(b), lo, l_hi);
        }
    }
    // upper part [max(lo, 1/2), hi]
    let u_lo = lo.max(mid);
    if hi > u_lo {
        if hi == 1.0 && b != 0.0 {
            // x = 1 - w^{1/(b+1)}: (1-x)^b dx = -dw/(b+1)
            let e = 1.0 / (b + 1.0);
            let w_hi = (1.0 - u_lo).powf(b + 1.0);
            total += quadrature::integrate_default(
                |w| {
                    let x = 1.0 - w.powf(e);
                    g(x) * x.powf(a)
                },
                0.0,
                w_hi,
            ) * e;
        } else {
            total += quadrature::integrate_default(|x| g(x) * x.powf(a) * (1.0 - x).powf(b), u_lo, hi);
        }
    }
    total / norm
}

/// λ_{i,k} = ∫ x^{k−2}(1−x)^{i−k} Λ(dx).
pub fn merger_rate(m: &MeasureSpec, i: u64, k: u64) -> Result<f64> {
    check_ik(i, k)?;
    let (kk, rest) = ((k - 2) as f64, (i - k) as f64);
    Ok(match m.kind() {
        MeasureKind::Beta { alpha } => {
            (ln_beta(k as f64 - alpha, rest + alpha) - MeasureSpec::beta_ln_norm(*alpha)).exp()
        }
        MeasureKind::Atoms(atoms) => atoms
            .iter()
            .map(|a| a.mass * pow0(a.location, kk) * pow0(1.0 - a.location, rest))
            .sum(),
        MeasureKind::PiecewiseDensity(_) => m.integrate_split(|x| pow0(x, kk) * pow0(1.0 - x, rest), i as usize),
    })
}

/// C(i,k)·λ_{i,k}: total rate of k-mergers among i blocks. Computed in log
/// space so large i does not overflow the binomial coefficient.
pub fn merger_weight(m: &MeasureSpec, i: u64, k: u64) -> Result<f64> {
    check_ik(i, k)?;
    let lnc = ln_binomial(i, k);
    let (kk, rest) = ((k - 2) as f64, (i - k) as f64);
    Ok(match m.kind() {
        MeasureKind::Beta { alpha } => {
            (lnc + ln_beta(k as f64 - alpha, rest + alpha) - MeasureSpec::beta_ln_norm(*alpha)).exp()
        }
        MeasureKind::Atoms(atoms) => atoms
            .iter()
            .map(|a| {
                if a.location == 0.0 {
                    if k == 2 {
                        a.mass * (i * (i - 1) / 2) as f64
                    } else {
                        0.0
                    }
                } else {
                    a.mass * (lnc + kk * a.location.ln() + rest * (-a.location).ln_1p()).exp()
                }
            })
            .sum(),
        MeasureKind::PiecewiseDensity(_) => m.integrate_split(
            |x| {
                if x == 0.0 {
                    if k == 2 {
                        (i * (i - 1) / 2) as f64
                    } else {
                        0.0
                    }
                } else {
                    (lnc + kk * x.ln() + rest * (-x).ln_1p()).exp()
                }
            },
            i as usize,
        ),
    })
}

fn check_ik(i: u64, k: u64) -> Result<()> {
    if i < 2 || k < 2 || k > i {
        return Err(MeasureError::InvalidArgument(format!(
            "merger rate needs 2 <= k <= i, got i = {i}, k = {k}"
        )));
    }
    Ok(())
}

/// ν((lo, hi]) for 0 < lo < hi ≤ 1.
pub fn nu_interval_mass(m: &MeasureSpec, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "nu tail mass needs eps > 0, got {lo}"
        )));
    }
    if !(hi > lo) {
        return Ok(0.0);
    }
    Ok(match m.kind() {
        MeasureKind::PiecewiseDensity(pieces) => pieces
            .iter()
            .map(|p| {
                let a = p.lo.max(lo);
                let b = p.hi.min(hi);
                if b > a {
                    poly_power_integral(&p.coeffs, a, b, -2)
                } else {
                    0.0
                }
            })
            .sum(),
        _ => m.integrate(|x| 1.0 / (x * x), lo, hi),
    })
}

/// ν((eps, 1]) = ∫_eps^1 x⁻² Λ(dx).
pub fn nu_tail_mass(m: &MeasureSpec, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "nu tail mass needs eps in (0, 1), got {eps}"
        )));
    }
    nu_interval_mass(m, eps, 1.0)
}

/// ∫_(eps,1] x ν(dx) = ∫_(eps,1] x⁻¹ Λ(dx): the dust decay rate of the
/// truncated flow.
pub fn nu_first_moment(m: &MeasureSpec, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "truncation level must lie in (0, 1), got {eps}"
        )));
    }
    Ok(match m.kind() {
        MeasureKind::PiecewiseDensity(pieces) => pieces
            .iter()
            .map(|p| {
                let a = p.lo.max(eps);
                let b = p.hi.min(1.0);
                if b > a {
                    poly_power_integral(&p.coeffs, a, b, -1)
                } else {
                    0.0
                }
            })
            .sum(),
        _ => m.integrate(|x| 1.0 / x, eps, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn constructors_validate() {
        assert!(MeasureSpec::beta(0.0).is_err());
        assert!(MeasureSpec::beta(2.5).is_err());
        assert!(MeasureSpec::beta(2.0).unwrap().is_kingman());
        assert!(MeasureSpec::atoms(vec![Atom {
            location: 1.0,
            mass: 1.0
        }])
        .is_err());
        assert!(MeasureSpec::atoms(vec![Atom {
            location: 0.5,
            mass: 0.0
        }])
        .is_err());
        assert!(MeasureSpec::piecewise(&[0.0, 1.0], vec![vec![-1.0]]).is_err());
        assert!(MeasureSpec::piecewise(&[0.0, 0.5, 0.4], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(close(MeasureSpec::x_squared().total_mass(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn merger_rate_examples() {
        let u = MeasureSpec::uniform();
        assert!(close(merger_rate(&u, 3, 2).unwrap(), 0.5, 1e-10));
        assert!(close(merger_rate(&u, 2, 2).unwrap(), 1.0, 1e-10));
        let k = MeasureSpec::kingman();
        assert_eq!(merger_rate(&k, 5, 2).unwrap(), 1.0);
        assert_eq!(merger_rate(&k, 5, 3).unwrap(), 0.0);
        assert!(merger_rate(&u, 3, 4).is_err());
        assert!(merger_rate(&u, 1, 1).is_err());
    }

    #[test]
    fn merger_rate_beta_matches_quadrature() {
        // closed form vs the generic Beta quadrature path
        for &alpha in &[0.3, 0.5, 1.0, 1.5, 1.9] {
            let m = MeasureSpec::beta(alpha).unwrap();
            for i in 2..8u64 {
                for k in 2..=i {
                    let closed = merger_rate(&m, i, k).unwrap();
                    let quad = m.integrate(|x| pow0(x, (k - 2) as f64) * pow0(1.0 - x, (i - k) as f64), 0.0, 1.0);
                    assert!(
                        close(closed, quad, 1e-9),
                        "alpha {alpha} i {i} k {k}: {closed} vs {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn merger_weight_is_binomial_times_rate() {
        for m in [
            MeasureSpec::uniform(),
            MeasureSpec::kingman(),
            MeasureSpec::x_squared(),
            MeasureSpec::beta(0.5).unwrap(),
        ] {
            for i in 2..12u64 {
                for k in 2..=i {
                    let c = (ln_binomial(i, k)).exp();
                    let w = merger_weight(&m, i, k).unwrap();
                    let r = merger_rate(&m, i, k).unwrap();
                    assert!(
                        (w - c * r).abs() <= 1e-9 * w.abs().max(1e-12),
                        "{} {i} {k}",
                        m.describe()
                    );
                }
            }
        }
    }

    #[test]
    fn nu_tail_examples() {
        assert!(close(nu_tail_mass(&MeasureSpec::uniform(), 0.5).unwrap(), 1.0, 1e-8));
        let a = MeasureSpec::atoms(vec![Atom {
            location: 0.3,
            mass: 2.0,
        }])
        .unwrap();
        assert_eq!(nu_tail_mass(&a, 0.5).unwrap(), 0.0);
        let a = MeasureSpec::atoms(vec![Atom {
            location: 0.5,
            mass: 1.0,
        }])
        .unwrap();
        assert_eq!(nu_tail_mass(&a, 0.25).unwrap(), 4.0);
        assert!(nu_tail_mass(&a, 0.0).is_err());
        assert!(nu_tail_mass(&a, -1.0).is_err());
    }

    #[test]
    fn nu_tail_beta_singular_at_one() {
        // alpha = 0.5: density of nu is x^{-1.5}(1-x)^{-0.5}/B(1.5,0.5); compare
        // with a substitution-free Riemann-Stieltjes check via the piecewise kind
        // is not possible, so verify additivity and a closed-form special case.
        let m = MeasureSpec::beta(0.5).unwrap();
        let whole = nu_tail_mass(&m, 0.1).unwrap();
        let split = nu_interval_mass(&m, 0.1, 0.7).unwrap() + nu_interval_mass(&m, 0.7, 1.0).unwrap();
        assert!(close(whole, split, 1e-10));
        // ∫_eps^1 x^{-3/2}(1-x)^{-1/2} dx = 2 sqrt((1-eps)/eps); B(1.5,0.5) = pi/2
        let eps: f64 = 0.1;
        let exact = 2.0 * ((1.0 - eps) / eps).sqrt() / (std::f64::consts::PI / 2.0);
        assert!(close(whole, exact, 1e-10), "{whole} vs {exact}");
    }

    #[test]
    fn nu_first_moment_uniform() {
        // ∫_eps^1 x^{-1} dx = -ln eps
        let v = nu_first_moment(&MeasureSpec::uniform(), 0.25).unwrap();
        assert!(close(v, 4f64.ln(), 1e-10));
        let v = nu_first_moment(&MeasureSpec::x_squared(), 0.25).unwrap();
        assert!(close(v, (1.0 - 0.0625) / 2.0, 1e-14));
    }

    #[test]
    fn binomial_tail_moments_match_rates() {
        for m in [
            MeasureSpec::uniform(),
            MeasureSpec::kingman(),
            MeasureSpec::x_squared(),
            MeasureSpec::beta(1.5).unwrap(),
        ] {
            let r = m.binomial_tail_moments(10);
            for (j, v) in r.iter().enumerate() {
                let lam = merger_rate(&m, j as u64 + 2, 2).unwrap();
                assert!((v - lam).abs() <= 1e-10 * lam.max(1e-12));
            }
        }
    }
}
