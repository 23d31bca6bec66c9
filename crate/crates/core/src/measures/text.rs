//! Text form of a measure, used by config files.
//!
//! ```text
//! beta:0.5                 Beta(2 − α, α)
//! atoms:0@1,0.5@0.25       point masses location@mass
//! piecewise:0,0.5,1;1;0,2  breakpoints, then one coefficient list per piece
//! kingman | uniform | x2   presets
//! ```

use std::fmt;
use std::str::FromStr;

use super::{Atom, MeasureError, MeasureKind, MeasureSpec};

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            MeasureKind::Beta { alpha } => write!(f, "beta:{alpha}"),
            MeasureKind::Atoms(atoms) => {
                let parts: Vec<String> = atoms.iter().map(|a| format!("{}@{}", a.location, a.mass)).collect();
                write!(f, "atoms:{}", parts.join(","))
            }
            MeasureKind::PiecewiseDensity(pieces) => {
                let mut breaks: Vec<f64> = pieces.iter().map(|p| p.lo).collect();
                breaks.push(pieces.last().map_or(1.0, |p| p.hi));
                write!(f, "piecewise:{}", join(breaks))?;
                for p in pieces {
                    write!(f, ";{}", join(p.coeffs.iter().copied()))?;
                }
                Ok(())
            }
        }
    }
}

fn number(s: &str) -> Result<f64, MeasureError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| MeasureError::Malformed(format!("not a number: {s:?}")))
}

fn numbers(s: &str) -> Result<Vec<f64>, MeasureError> {
    s.split(',').map(number).collect()
}

impl FromStr for MeasureSpec {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "kingman" => return Ok(MeasureSpec::kingman()),
            "uniform" => return Ok(MeasureSpec::uniform()),
            "x2" => return Ok(MeasureSpec::x_squared()),
            _ => {}
        }
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| MeasureError::Malformed(format!("unknown measure {s:?}")))?;
        match kind.trim() {
            "beta" => MeasureSpec::beta(number(body)?),
            "atoms" => {
                let atoms = body
                    .split(',')
                    .map(|pair| {
                        let (loc, mass) = pair
                            .split_once('@')
                            .ok_or_else(|| MeasureError::Malformed(format!("atom {pair:?} is not location@mass")))?;
                        Ok(Atom {
                            location: number(loc)?,
                            mass: number(mass)?,
                        })
                    })
                    .collect::<Result<Vec<_>, MeasureError>>()?;
                MeasureSpec::atoms(atoms)
            }
            "piecewise" => {
                let mut parts = body.split(';');
                let breaks = numbers(parts.next().unwrap_or(""))?;
                let coeffs = parts.map(numbers).collect::<Result<Vec<_>, _>>()?;
                MeasureSpec::piecewise(&breaks, coeffs)
            }
            other => Err(MeasureError::Malformed(format!("unknown measure kind {other:?}"))),
        }
    }
}
