//! History labels and the label sets they are evaluated on.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_from_seed;

/// Outcome string `x = (x_1, …, x_L)`, stored in time order. Displayed and
/// parsed latest-first, `x_L … x_1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryLabel {
    bits: Vec<u8>,
}

impl HistoryLabel {
    /// `bits[k]` is `x_{k+1}`.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidBranch("history length must be at least 1".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidBranch("history bits must be 0 or 1".into()));
        }
        Ok(HistoryLabel { bits })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        HistoryLabel::new(vec![0; len])
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `x_L`.
    pub fn final_bit(&self) -> u8 {
        self.bits[self.bits.len() - 1]
    }

    /// `#₁(x)` over all `L` positions.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Keeps `x_1 … x_{L−1}` and sets `x_L = 0`.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::InvalidBranch(format!("cannot truncate length {} to {len}", self.len())));
        }
        let mut bits = self.bits[..len].to_vec();
        bits[len - 1] = 0;
        Ok(HistoryLabel { bits })
    }
}

impl fmt::Display for HistoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits.iter().rev() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for HistoryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidBranch(format!("unexpected character {c:?} in history label"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        HistoryLabel::new(bits)
    }
}

/// Differing positions among `x_1 … x_{L−1}`.
pub fn hamming(a: &HistoryLabel, b: &HistoryLabel) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("label lengths {} and {} differ", a.len(), b.len())));
    }
    let l = a.len();
    Ok(a.bits[..l - 1].iter().zip(&b.bits[..l - 1]).filter(|(x, y)| x != y).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetProvenance {
    FullTree,
    StratifiedSample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistorySet {
    labels: Vec<HistoryLabel>,
    length: usize,
    provenance: SetProvenance,
    seed: u64,
}

/// Longest history for which full trees are enumerated.
pub const MAX_TREE_LENGTH: usize = 24;

impl HistorySet {
    /// All labels of length `len`, restricted to `x_L = final_bit` when given.
    /// Label `i` has `x_{k+1}` equal to bit `k` of `i`.
    pub fn full_tree(len: usize, final_bit: Option<u8>) -> Result<Self> {
        if len == 0 || len > MAX_TREE_LENGTH {
            return Err(Error::TooLarge(format!("full tree of length {len} (supported 1..={MAX_TREE_LENGTH})")));
        }
        if matches!(final_bit, Some(b) if b > 1) {
            return Err(Error::InvalidInput("final bit must be 0 or 1".into()));
        }
        let free = if final_bit.is_some() { len - 1 } else { len };
        let labels = (0..1usize << free)
            .map(|i| {
                let mut bits: Vec<u8> = (0..free).map(|k| ((i >> k) & 1) as u8).collect();
                if let Some(b) = final_bit {
                    bits.push(b);
                }
                HistoryLabel { bits }
            })
            .collect();
        Ok(HistorySet { labels, length: len, provenance: SetProvenance::FullTree, seed: 0 })
    }

    pub fn from_labels(labels: Vec<HistoryLabel>, provenance: SetProvenance, seed: u64) -> Result<Self> {
        let length = labels.first().map(|l| l.len()).ok_or_else(|| Error::InvalidInput("empty label set".into()))?;
        if labels.iter().any(|l| l.len() != length) {
            return Err(Error::InvalidInput("labels have different lengths".into()));
        }
        Ok(HistorySet { labels, length, provenance, seed })
    }

    pub fn labels(&self) -> &[HistoryLabel] {
        &self.labels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn provenance(&self) -> SetProvenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Cuts every label after `len` steps, sets `x_len = 0` and drops
    /// duplicates, keeping first occurrences.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut labels = Vec::new();
        for l in &self.labels {
            let t = l.truncate(len)?;
            if seen.insert(t.clone()) {
                labels.push(t);
            }
        }
        Ok(HistorySet { labels, length: len, provenance: self.provenance, seed: self.seed })
    }

    /// Labels restricted to `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        HistorySet::from_labels(labels, self.provenance, self.seed)
    }
}

/// Stratified sample of `count` distinct labels of length `l_max`, all ending
/// in 0. Each draw picks `n` uniformly in `0..l_max`, then `n` of the first
/// `l_max − 1` positions uniformly. The all-zeros label and the label with
/// ones everywhere but the final step always come first.
pub fn sample_history_set(l_max: usize, count: usize, seed: u64) -> Result<HistorySet> {
    if l_max == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    let free = l_max - 1;
    let capacity = if free >= usize::BITS as usize - 1 { usize::MAX } else { 1usize << free };
    if count == 0 || count > capacity {
        return Err(Error::InvalidInput(format!("cannot draw {count} distinct labels of length {l_max}")));
    }
    let mut seen = HashSet::new();
    let mut labels = Vec::with_capacity(count);
    let mut push = |l: HistoryLabel, labels: &mut Vec<HistoryLabel>| {
        if labels.len() < count && seen.insert(l.clone()) {
            labels.push(l);
        }
    };
    push(HistoryLabel { bits: vec![0; l_max] }, &mut labels);
    let mut ones = vec![1; l_max];
    ones[free] = 0;
    push(HistoryLabel { bits: ones }, &mut labels);
    let mut rng = rng_from_seed(seed);
    while labels.len() < count {
        let n = rng.random_range(0..l_max);
        let mut bits = vec![0u8; l_max];
        for p in sample(&mut rng, free, n.min(free)).iter() {
            bits[p] = 1;
        }
        push(HistoryLabel { bits }, &mut labels);
    }
    Ok(HistorySet { labels, length: l_max, provenance: SetProvenance::StratifiedSample, seed })
}
