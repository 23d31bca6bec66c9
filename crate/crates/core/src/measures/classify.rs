use std::fmt;

use serde::{Deserialize, Serialize};

use super::{moment, mu_star, MeasureSpec, Result, DEFAULT_I_MAX};

/// Behaviour regimes, ordered by increasing rate of small coagulation events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// μ⁻² < ∞: finitely many coagulation events in finite time.
    A,
    /// μ⁻² = ∞, μ⁻¹ < ∞: dust together with infinitely many atomic blocks.
    B,
    /// μ⁻¹ = ∞, μ* = ∞: no dust, infinitely many blocks.
    C,
    /// μ* < ∞: comes down from infinity.
    D,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::A => "A",
            Regime::B => "B",
            Regime::C => "C",
            Regime::D => "D",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behaviour {
    pub label: Regime,
    pub mu_minus1_finite: bool,
    pub mu_minus2_finite: bool,
    pub mu_star_finite: bool,
    /// True when μ* was not computed because μ⁻¹ < ∞ already forces μ* = ∞.
    pub mu_star_implied: bool,
}

const TOL: f64 = 1e-10;

/// Place `m` in one of the regimes A–D.
///
/// μ⁻¹ < ∞ implies μ* = ∞, so μ* is only evaluated when μ⁻¹ = ∞.
pub fn classify(m: &MeasureSpec) -> Result<Behaviour> {
    let mu2 = moment(m, -2, TOL)?;
    let mu1 = moment(m, -1, TOL)?;
    let (mu_star_finite, implied) = if mu1.is_finite() {
        (false, true)
    } else {
        (mu_star(m, TOL, DEFAULT_I_MAX)?.is_finite(), false)
    };
    let label = if mu2.is_finite() {
        Regime::A
    } else if mu1.is_finite() {
        Regime::B
    } else if mu_star_finite {
        Regime::D
    } else {
        Regime::C
    };
    Ok(Behaviour {
        label,
        mu_minus1_finite: mu1.is_finite(),
        mu_minus2_finite: mu2.is_finite(),
        mu_star_finite,
        mu_star_implied: implied,
    })
}
