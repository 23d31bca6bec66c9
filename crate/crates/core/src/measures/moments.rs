//! Moments μⁿ, the coming-down sum μ*, and the divergence rule.
//!
//! Divergence rule. Improper quantities are examined twice:
//!
//! 1. Numerically. For μⁿ with n < 0 the integral is split into dyadic
//!    contributions over (2^-(j+1), 2^-j], j = 0..depth. For μ* the terms of
//!    the series themselves are used. The numeric verdict is
//!    * `Decays` when the last contribution is below `tol · sum`, or the
//!      geometric ratio of the last contributions is ≤ 0.98 (resp. the local
//!      power-law decay exponent of the series terms is ≥ 1.5);
//!    * `FailsToDecay` when the ratio is ≥ 1 − 1e-6 (resp. exponent ≤ 1.001);
//!    * `Marginal` otherwise.
//! 2. By the closed-form exponent test of the representation (Beta
//!    exponents, an atom at 0, the leading power of a polynomial density).
//!
//! The verdicts are combined: agreement gives the answer, `Marginal` defers
//! to the closed form, and a contradiction is an `Inconclusive` error.

use serde::{Deserialize, Serialize};

use super::{ln_beta, poly_power_integral, pow0, MeasureError, MeasureKind, MeasureSpec, Result};

/// Default number of dyadic levels examined for μⁿ, n < 0.
pub const DEFAULT_DEPTH: usize = 60;
/// Default truncation of the μ* series.
pub const DEFAULT_I_MAX: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailVerdict {
    Decays,
    FailsToDecay,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// Dyadic contributions (moments) or series terms (μ*).
    pub terms: Vec<f64>,
    /// Running sums of `terms`.
    pub partial_sums: Vec<f64>,
    /// Geometric ratio of dyadic contributions, or the local decay exponent
    /// of series terms.
    pub decay: Option<f64>,
    pub numeric: TailVerdict,
    pub closed_form_finite: bool,
    /// Estimated remainder beyond the examined range (finite verdicts).
    pub remainder: Option<f64>,
    /// Relative change of the extrapolated total between the last two
    /// octaves (μ* only).
    pub stability: Option<f64>,
    pub note: String,
}

/// A nonnegative real or +∞, with the evidence behind the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedReal {
    pub value: f64,
    pub diagnostics: Option<TailDiagnostics>,
}

impl ExtendedReal {
    fn finite(value: f64, diagnostics: Option<TailDiagnostics>) -> Self {
        Self { value, diagnostics }
    }

    fn infinite(diagnostics: Option<TailDiagnostics>) -> Self {
        Self {
            value: f64::INFINITY,
            diagnostics,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }
}

fn running_sums(terms: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect()
}

/// Numeric verdict on dyadic contributions.
fn dyadic_verdict(terms: &[f64], tol: f64) -> (TailVerdict, Option<f64>, Option<f64>) {
    let sum: f64 = terms.iter().sum();
    let last = *terms.last().unwrap_or(&0.0);
    if sum == 0.0 || last == 0.0 {
        return (TailVerdict::Decays, None, Some(0.0));
    }
    let tail = &terms[terms.len().saturating_sub(9)..];
    let logs: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    let ratio = if logs.is_empty() {
        None
    } else {
        Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
    };
    if last <= tol * sum {
        let rem = ratio.filter(|&r| r < 1.0).map(|r| last * r / (1.0 - r)).unwrap_or(last);
        return (TailVerdict::Decays, ratio, Some(rem));
    }
    match ratio {
        Some(r) if r >= 1.0 - 1e-6 => (TailVerdict::FailsToDecay, ratio, None),
        Some(r) if r <= 0.98 => (TailVerdict::Decays, ratio, Some(last * r / (1.0 - r))),
        _ => (TailVerdict::Marginal, ratio, None),
    }
}

fn combine(quantity: &str, numeric: TailVerdict, closed_finite: bool) -> Result<bool> {
    match (numeric, closed_finite) {
        (TailVerdict::Decays, true) | (TailVerdict::Marginal, true) => Ok(true),
        (TailVerdict::FailsToDecay, false) | (TailVerdict::Marginal, false) => Ok(false),
        _ => Err(MeasureError::Inconclusive {
            quantity: quantity.to_string(),
            numeric,
            closed_form_finite: closed_finite,
        }),
    }
}

/// Closed-form μⁿ (possibly +∞).
fn closed_form_moment(m: &MeasureSpec, n: i32) -> f64 {
    match m.kind() {
        MeasureKind::Beta { alpha } => {
            let a = 2.0 - alpha + n as f64;
            if a > 0.0 {
                (ln_beta(a, *alpha) - ln_beta(2.0 - alpha, *alpha)).exp()
            } else {
                f64::INFINITY
            }
        }
        MeasureKind::Atoms(atoms) => atoms
            .iter()
            .map(|a| {
                if a.location == 0.0 && n < 0 {
                    f64::INFINITY
                } else {
                    a.mass * pow0(a.location, n as f64)
                }
            })
            .sum(),
        MeasureKind::PiecewiseDensity(pieces) => pieces
            .iter()
            .map(|p| poly_power_integral(&p.coeffs, p.lo, p.hi, n))
            .sum(),
    }
}

fn dyadic_contribution(m: &MeasureSpec, n: i32, j: usize) -> f64 {
    let hi = 0.5f64.powi(j as i32);
    let lo = 0.5 * hi;
    match m.kind() {
        MeasureKind::PiecewiseDensity(pieces) => pieces
            .iter()
            .map(|p| {
                let a = p.lo.max(lo);
                let b = p.hi.min(hi);
                if b > a {
                    poly_power_integral(&p.coeffs, a, b, n)
                } else {
                    0.0
                }
            })
            .sum(),
        _ => m.integrate(|x| x.powi(n), lo, hi),
    }
}

/// μⁿ = ∫ xⁿ Λ(dx) with the default dyadic depth.
pub fn moment(m: &MeasureSpec, n: i32, tol: f64) -> Result<ExtendedReal> {
    moment_with_depth(m, n, tol, DEFAULT_DEPTH)
}

pub fn moment_with_depth(m: &MeasureSpec, n: i32, tol: f64, depth: usize) -> Result<ExtendedReal> {
    if n < -2 {
        return Err(MeasureError::UnsupportedOrder(n));
    }
    if !(tol > 0.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if n >= 0 {
        return Ok(ExtendedReal::finite(closed_form_moment(m, n), None));
    }
    let closed = closed_form_moment(m, n);
    if m.atom_at_zero() > 0.0 {
        let diag = TailDiagnostics {
            terms: vec![],
            partial_sums: vec![],
            decay: None,
            numeric: TailVerdict::FailsToDecay,
            closed_form_finite: false,
            remainder: None,
            stability: None,
            note: "atom at 0 with negative order".into(),
        };
        return Ok(ExtendedReal::infinite(Some(diag)));
    }
    let terms: Vec<f64> = (0..=depth).map(|j| dyadic_contribution(m, n, j)).collect();
    let (numeric, decay, remainder) = dyadic_verdict(&terms, tol);
    let closed_finite = closed.is_finite();
    let finite = combine(&format!("mu^{n}"), numeric, closed_finite)?;
    let diag = TailDiagnostics {
        partial_sums: running_sums(&terms),
        terms,
        decay,
        numeric,
        closed_form_finite: closed_finite,
        remainder: if finite { remainder } else { None },
        stability: None,
        note: if numeric == TailVerdict::Marginal {
            "numeric evidence marginal; closed-form exponent test decides".into()
        } else {
            String::new()
        },
    };
    Ok(if finite {
        ExtendedReal::finite(closed, Some(diag))
    } else {
        ExtendedReal::infinite(Some(diag))
    })
}

/// Closed-form verdict on μ* < ∞.
fn mu_star_closed_form(m: &MeasureSpec) -> bool {
    match m.kind() {
        MeasureKind::Beta { alpha } => *alpha > 1.0,
        MeasureKind::Atoms(_) => m.atom_at_zero() > 0.0,
        // a polynomial density has μ⁻¹ < ∞ or behaves like Lebesgue at 0
        MeasureKind::PiecewiseDensity(_) => false,
    }
}

/// Inner sums S_i = Σ_{k=2}^i (k−1) C(i,k) λ_{i,k} for i = 2..=i_max
/// (index 0 ↔ i = 2), via S_{i+1} = S_i + Σ_{m<i} ∫(1−x)^m Λ(dx).
pub(crate) fn coming_down_sums(m: &MeasureSpec, i_max: usize) -> Vec<f64> {
    let r = m.binomial_tail_moments(i_max.max(3) - 1);
    let mut out = Vec::with_capacity(i_max - 1);
    let mut s = r[0];
    let mut cum = r[0];
    out.push(s);
    for i in 2..i_max {
        // cum = Σ_{m=0}^{i-1} R_m
        cum += r[i - 1];
        s += cum;
        out.push(s);
    }
    out
}

fn power_tail(t_end: f64, end: usize, t_mid: f64, mid: usize) -> Option<(f64, f64)> {
    let p = (t_mid / t_end).ln() / (end as f64 / mid as f64).ln();
    if p > 1.0 {
        Some((p, t_end * end as f64 / (p - 1.0) - 0.5 * t_end))
    } else {
        None
    }
}

/// μ* = Σ_{i≥2} (Σ_{k=2}^i (k−1) C(i,k) λ_{i,k})⁻¹.
pub fn mu_star(m: &MeasureSpec, tol: f64, i_max: usize) -> Result<ExtendedReal> {
    if i_max < 10 {
        return Err(MeasureError::InvalidArgument(format!(
            "i_max must be >= 10, got {i_max}"
        )));
    }
    if !(tol > 0.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let sums = coming_down_sums(m, i_max);
    if let Some(pos) = sums.iter().position(|&s| !(s > 0.0)) {
        return Err(MeasureError::Degenerate(format!(
            "inner sum vanishes at i = {}",
            pos + 2
        )));
    }
    let terms: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    let partial_sums = running_sums(&terms);
    // term index for i is i - 2
    let end = i_max;
    let mid = i_max / 2;
    let quarter = i_max / 4;
    let (t_end, t_mid, t_quarter) = (terms[end - 2], terms[mid - 2], terms[quarter - 2]);
    let (ps_end, ps_mid) = (partial_sums[end - 2], partial_sums[mid - 2]);
    let p_hat = (t_mid / t_end).ln() / (end as f64 / mid as f64).ln();
    let numeric = if p_hat >= 1.5 {
        TailVerdict::Decays
    } else if p_hat <= 1.001 {
        TailVerdict::FailsToDecay
    } else {
        TailVerdict::Marginal
    };
    let closed_finite = mu_star_closed_form(m);
    let finite = combine("mu*", numeric, closed_finite)?;
    let mut diag = TailDiagnostics {
        terms,
        partial_sums,
        decay: Some(p_hat),
        numeric,
        closed_form_finite: closed_finite,
        remainder: None,
        stability: None,
        note: String::new(),
    };
    if !finite {
        return Ok(ExtendedReal::infinite(Some(diag)));
    }
    let (_, tail_end) = power_tail(t_end, end, t_mid, mid).ok_or_else(|| MeasureError::Inconclusive {
        quantity: "mu* extrapolation".into(),
        numeric,
        closed_form_finite: closed_finite,
    })?;
    let total = ps_end + tail_end;
    if let Some((_, tail_mid)) = power_tail(t_mid, mid, t_quarter, quarter) {
        let total_mid = ps_mid + tail_mid;
        diag.stability = Some(((total - total_mid) / total).abs());
    }
    diag.remainder = Some(tail_end);
    if tail_end > tol * total {
        diag.note = format!("extrapolated tail {tail_end:e} exceeds tol * total");
    }
    Ok(ExtendedReal::finite(total, Some(diag)))
}
