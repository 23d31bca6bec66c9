//! Generator of Π⁽ⁿ⁾ over all partitions of {1..n} and its matrix exponential.
//!
//! States are ordered by decreasing block count, so every transition goes to a
//! later index and the generator is upper triangular. Products in the
//! scaling-and-squaring exponential only touch the upper triangle.

use std::collections::{BTreeMap, HashMap};

use super::{ChainError, Result};
use crate::measures::{merger_rate, MeasureSpec};
use crate::partition::Partition;

pub const MAX_ORACLE_N: usize = 7;

#[derive(Debug, Clone)]
pub struct RateMatrix {
    states: Vec<Partition>,
    index: HashMap<Partition, usize>,
    /// Row-major dense generator.
    q: Vec<f64>,
}

impl RateMatrix {
    pub fn states(&self) -> &[Partition] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Generator entry q(from, to); `None` if either partition is unknown.
    pub fn rate(&self, from: &Partition, to: &Partition) -> Option<f64> {
        let (a, b) = (self.index_of(from)?, self.index_of(to)?);
        Some(self.q[a * self.len() + b])
    }

    /// Nonzero off-diagonal entries `(from, to, rate)`.
    pub fn entries(&self) -> impl Iterator<Item = (&Partition, &Partition, f64)> + '_ {
        let d = self.len();
        (0..d).flat_map(move |a| {
            (0..d).filter_map(move |b| {
                let r = self.q[a * d + b];
                (a != b && r != 0.0).then(|| (&self.states[a], &self.states[b], r))
            })
        })
    }

    pub fn row_sum(&self, from: usize) -> f64 {
        let d = self.len();
        self.q[from * d..(from + 1) * d].iter().sum()
    }
}

/// Exact generator: π → π' at rate λ_{i,k} when π' merges a specific k-subset
/// of π's i blocks.
pub fn rate_matrix(m: &MeasureSpec, n: usize) -> Result<RateMatrix> {
    if n > MAX_ORACLE_N {
        return Err(ChainError::TooLarge { n, max: MAX_ORACLE_N });
    }
    if n < 1 {
        return Err(ChainError::InvalidArgument("n must be at least 1".into()));
    }
    let mut states = Partition::enumerate(n);
    states.sort_by(|a, b| b.num_blocks().cmp(&a.num_blocks()).then_with(|| a.cmp(b)));
    let index: HashMap<Partition, usize> = states.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let d = states.len();
    let mut lambda: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 2..=n {
        for k in 2..=i {
            lambda.insert((i, k), merger_rate(m, i as u64, k as u64)?);
        }
    }
    let mut q = vec![0.0; d * d];
    for (a, p) in states.iter().enumerate() {
        let i = p.num_blocks();
        let mut out = 0.0;
        for mask in 0u32..(1 << i) {
            let k = mask.count_ones() as usize;
            if k < 2 {
                continue;
            }
            let which: Vec<usize> = (0..i).filter(|&b| mask & (1 << b) != 0).collect();
            let target = p.merge(&which)?;
            let b = index[&target];
            let r = lambda[&(i, k)];
            q[a * d + b] += r;
            out += r;
        }
        q[a * d + a] = -out;
    }
    Ok(RateMatrix { states, index, q })
}

fn upper_matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in i..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            let (brow, crow) = (&b[k * d..(k + 1) * d], &mut c[i * d..(i + 1) * d]);
            for j in k..d {
                crow[j] += aik * brow[j];
            }
        }
    }
    c
}

fn norm_inf(a: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|i| a[i * d..(i + 1) * d].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// exp(A) for upper-triangular A by scaling and squaring with a Taylor core.
fn expm_upper(a: &[f64], d: usize) -> Vec<f64> {
    let norm = norm_inf(a, d);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
    let mut result = vec![0.0; d * d];
    for i in 0..d {
        result[i * d + i] = 1.0;
    }
    let mut term = result.clone();
    for j in 1..=40 {
        term = upper_matmul(&term, &scaled, d);
        let inv = 1.0 / j as f64;
        term.iter_mut().for_each(|x| *x *= inv);
        result.iter_mut().zip(&term).for_each(|(r, t)| *r += t);
        if norm_inf(&term, d) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = upper_matmul(&result, &result, d);
    }
    result
}

/// Law of Π⁽ⁿ⁾_t from the all-singleton state: the singleton row of exp(tQ).
pub fn transition_probabilities(m: &MeasureSpec, n: usize, t: f64) -> Result<BTreeMap<Partition, f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ChainError::InvalidArgument(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    let rm = rate_matrix(m, n)?;
    let d = rm.len();
    let a: Vec<f64> = rm.q.iter().map(|x| x * t).collect();
    let e = expm_upper(&a, d);
    // singletons is the unique state with n blocks, hence index 0
    Ok(rm
        .states
        .iter()
        .cloned()
        .zip(e[..d].iter().map(|p| p.max(0.0)))
        .collect())
}

/// Same law by uniformization: Σ_j Poisson(j; γt) p₀ Pʲ with P = I + Q/γ.
pub fn transition_probabilities_uniformized(m: &MeasureSpec, n: usize, t: f64) -> Result<BTreeMap<Partition, f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ChainError::InvalidArgument(format!(
            "t must be finite and nonnegative, got {t}"
        )));
    }
    let rm = rate_matrix(m, n)?;
    let d = rm.len();
    let gamma = (0..d).map(|i| -rm.q[i * d + i]).fold(0.0, f64::max);
    let mut out = vec![0.0; d];
    if gamma == 0.0 {
        out[0] = 1.0;
    } else {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        let mean = gamma * t;
        // Poisson weights computed in log space to survive large γt
        let mut covered = 0.0;
        let mut j = 0usize;
        loop {
            let w = (-mean + j as f64 * mean.ln() - statrs::function::gamma::ln_gamma(j as f64 + 1.0)).exp();
            let w = if mean == 0.0 {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                w
            };
            out.iter_mut().zip(&v).for_each(|(o, x)| *o += w * x);
            covered += w;
            // past the mode the weights decrease; stop once they are negligible
            if j as f64 > mean && (w < 1e-18 || 1.0 - covered < 1e-15) {
                break;
            }
            let mut next = v.clone();
            for a in 0..d {
                if v[a] == 0.0 {
                    continue;
                }
                for b in a..d {
                    let q = rm.q[a * d + b];
                    if q != 0.0 {
                        next[b] += v[a] * q / gamma;
                    }
                }
            }
            v = next;
            j += 1;
        }
    }
    Ok(rm.states.iter().cloned().zip(out).collect())
}
