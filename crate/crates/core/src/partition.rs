//! Partitions of {1..n} in canonical form (blocks sorted by least element).
//!
//! Text form: blocks separated by `|`, elements by `,`; `"1,2|3"` is
//! {(1,2),(3)}.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("restriction size {m} outside 1..={n}")]
    RestrictOutOfRange { m: usize, n: usize },
    #[error("merge needs at least two distinct block indices, got {0}")]
    TooFewBlocks(usize),
    #[error("block index {index} out of range ({blocks} blocks)")]
    BadIndex { index: usize, blocks: usize },
    #[error("threshold must be >= 1")]
    BadThreshold,
    #[error("cannot parse partition: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PartitionError>;

/// A partition of {1..n}. Blocks are strictly increasing lists and are
/// ordered by least element; `block_of[e - 1]` is the block index of `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<u32>>,
    #[serde(skip)]
    block_of: Vec<u32>,
}

/// Finite-n frequency summary: block proportions (nonincreasing) and dust.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySummary {
    pub sorted_freqs: Vec<f64>,
    pub dust: f64,
    /// Exact numerators over n: `sorted_counts[i] / n` is `sorted_freqs[i]`.
    pub sorted_counts: Vec<usize>,
    pub dust_count: usize,
    pub n: usize,
}

fn index_of(n: usize, blocks: &[Vec<u32>]) -> Vec<u32> {
    let mut idx = vec![0u32; n];
    for (b, block) in blocks.iter().enumerate() {
        for &e in block {
            idx[e as usize - 1] = b as u32;
        }
    }
    idx
}

impl Partition {
    /// Build from arbitrary blocks; they are sorted and checked.
    pub fn new(n: usize, blocks: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 {
            return Err(PartitionError::Invalid("ground set must be nonempty".into()));
        }
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for block in blocks.iter_mut() {
            if block.is_empty() {
                return Err(PartitionError::Invalid("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e == 0 || e as usize > n {
                    return Err(PartitionError::Invalid(format!("element {e} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[e as usize - 1], true) {
                    return Err(PartitionError::Invalid(format!("element {e} repeated")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(PartitionError::Invalid(format!("element {} missing", missing + 1)));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self::from_canonical(n, blocks))
    }

    /// Blocks already canonical; no checks.
    pub(crate) fn from_canonical(n: usize, blocks: Vec<Vec<u32>>) -> Self {
        let block_of = index_of(n, &blocks);
        Self { n, blocks, block_of }
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_canonical(n, (1..=n as u32).map(|e| vec![e]).collect())
    }

    pub fn one_block(n: usize) -> Self {
        Self::from_canonical(n, vec![(1..=n as u32).collect()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `element` (1-based element).
    pub fn block_of(&self, element: u32) -> usize {
        self.block_of[element as usize - 1] as usize
    }

    pub fn same_block(&self, a: u32, b: u32) -> bool {
        self.block_of(a) == self.block_of(b)
    }

    pub fn singleton_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.len() == 1).count()
    }

    pub fn nonsingleton_count(&self) -> usize {
        self.blocks.len() - self.singleton_count()
    }

    /// ι_m: drop elements above `m`, and blocks that become empty.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(PartitionError::RestrictOutOfRange { m, n: self.n });
        }
        if m == self.n {
            return Ok(self.clone());
        }
        let blocks: Vec<Vec<u32>> = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().take_while(|&e| e as usize <= m).collect::<Vec<u32>>())
            .filter(|b| !b.is_empty())
            .collect();
        // least elements are unchanged, so the order stays canonical
        Ok(Self::from_canonical(m, blocks))
    }

    /// Replace the blocks at `which` by their union.
    pub fn merge(&self, which: &[usize]) -> Result<Self> {
        let mut state = MergeState::from_partition(self);
        state.merge(which)?;
        Ok(state.to_partition())
    }

    /// Finite-n frequency estimator: blocks larger than `threshold` give
    /// |b|/n; elements of blocks of size ≤ `threshold` count as dust.
    pub fn summarize(&self, threshold: usize) -> Result<FrequencySummary> {
        if threshold == 0 {
            return Err(PartitionError::BadThreshold);
        }
        let mut sorted_counts: Vec<usize> = self.blocks.iter().map(|b| b.len()).filter(|&s| s > threshold).collect();
        sorted_counts.sort_unstable_by(|a, b| b.cmp(a));
        let dust_count = self.n - sorted_counts.iter().sum::<usize>();
        let n = self.n as f64;
        Ok(FrequencySummary {
            sorted_freqs: sorted_counts.iter().map(|&c| c as f64 / n).collect(),
            dust: dust_count as f64 / n,
            sorted_counts,
            dust_count,
            n: self.n,
        })
    }

    /// Image under a permutation of {1..n} (`perm[e - 1]` is the image of e).
    pub fn permute(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(PartitionError::Invalid("permutation length mismatch".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&e| perm[e as usize - 1]).collect())
            .collect();
        Self::new(self.n, blocks)
    }

    /// All partitions of {1..n} in restricted-growth order.
    pub fn enumerate(n: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut rgs = vec![0usize; n];
        loop {
            let k = rgs.iter().max().unwrap() + 1;
            let mut blocks = vec![Vec::new(); k];
            for (e, &b) in rgs.iter().enumerate() {
                blocks[b].push(e as u32 + 1);
            }
            out.push(Self::from_canonical(n, blocks));
            // next restricted growth string
            let mut i = n - 1;
            loop {
                if i == 0 {
                    return out;
                }
                let max_prefix = *rgs[..i].iter().max().unwrap();
                if rgs[i] <= max_prefix {
                    rgs[i] += 1;
                    for r in rgs.iter_mut().skip(i + 1) {
                        *r = 0;
                    }
                    break;
                }
                i -= 1;
            }
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, e) in b.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    /// Parses the `"1,2|3"` form; n is the largest element.
    fn from_str(s: &str) -> Result<Self> {
        let blocks: Vec<Vec<u32>> = s
            .trim()
            .split('|')
            .map(|b| {
                b.split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<u32>()
                            .map_err(|err| PartitionError::Parse(format!("{e:?}: {err}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = blocks.iter().flatten().copied().max().unwrap_or(0) as usize;
        Self::new(n, blocks)
    }
}

/// Mutable canonical block list used in hot loops (chain simulation, event
/// replay). Merging keeps canonical order: the union takes the slot of the
/// lowest merged index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeState {
    n: usize,
    blocks: Vec<Vec<u32>>,
}

impl MergeState {
    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (1..=n as u32).map(|e| vec![e]).collect(),
        }
    }

    pub fn from_partition(p: &Partition) -> Self {
        Self {
            n: p.n,
            blocks: p.blocks.clone(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn merge(&mut self, which: &[usize]) -> Result<()> {
        let mut idx: Vec<usize> = which.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() < 2 {
            return Err(PartitionError::TooFewBlocks(idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.blocks.len()) {
            return Err(PartitionError::BadIndex {
                index: bad,
                blocks: self.blocks.len(),
            });
        }
        let mut union: Vec<u32> = Vec::new();
        for &i in &idx {
            union.extend_from_slice(&self.blocks[i]);
        }
        union.sort_unstable();
        let keep = idx[0];
        for &i in idx.iter().skip(1).rev() {
            self.blocks.remove(i);
        }
        self.blocks[keep] = union;
        Ok(())
    }

    pub fn to_partition(&self) -> Partition {
        Partition::from_canonical(self.n, self.blocks.clone())
    }
}
