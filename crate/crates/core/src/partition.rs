//! Integer partitions of the qubit count and the indices derived from them.
//!
//! A partition labels one type of N-qubit state: each part is a group of
//! fully entangled qubits. Two derived integers drive the whole
//! classification: the entanglement index `E = n - K1 - 2L + 2` and the
//! separability index `S = 2L + K1`, where `L` counts parts of size >= 2 and
//! `K1` counts singleton parts. They always satisfy `E + S == n + 2`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest n for which partition arithmetic is offered. Enumeration at this
/// size is large but tractable; no statevector is ever allocated here.
pub const MAX_PARTITION_N: usize = 64;

/// A partition of n: positive parts in non-increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Builds a partition from parts in any order. Zero entries are dropped,
    /// the rest sorted non-increasing. Errors if nothing positive remains or
    /// the total exceeds [`MAX_PARTITION_N`].
    pub fn new(parts: impl Into<Vec<usize>>) -> Result<Self> {
        let mut parts: Vec<usize> = parts.into();
        parts.retain(|&p| p > 0);
        if parts.is_empty() {
            return Err(Error::invalid("partition must have at least one positive part"));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let n: usize = parts.iter().sum();
        if n > MAX_PARTITION_N {
            return Err(Error::invalid(format!(
                "partition sums to {n}, above the cap {MAX_PARTITION_N}"
            )));
        }
        Ok(Partition { parts })
    }

    /// The parts, non-increasing.
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Total qubit count (sum of parts).
    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// True for the fully separable partition (1,1,...,1).
    pub fn is_separable(&self) -> bool {
        self.parts[0] == 1
    }

    /// Counts and indices for this partition.
    pub fn stats(&self) -> PartitionStats {
        stats(self)
    }

    /// Parses the CLI grammar: comma-separated positive parts, e.g. `3,1`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts = text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("bad partition part {tok:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Partition::new(parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Vec<usize> {
        p.parts
    }
}

/// Counts and indices attached to one partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    /// Number of parts of size >= 2 (entangled groups), `L`.
    pub entangled_groups: usize,
    /// Number of singleton parts, `K1`.
    pub singletons: usize,
    /// Multiplicity of each part size, `Kk`.
    pub multiplicity: BTreeMap<usize, usize>,
    /// Entanglement index `E = n - K1 - 2L + 2`.
    pub entanglement_index: usize,
    /// Separability index `S = 2L + K1`.
    pub separability_index: usize,
}

/// Computes L, K1, the multiplicity map and both indices for a partition.
pub fn stats(p: &Partition) -> PartitionStats {
    let n = p.n();
    let mut multiplicity = BTreeMap::new();
    for &part in p.parts() {
        *multiplicity.entry(part).or_insert(0usize) += 1;
    }
    let singletons = multiplicity.get(&1).copied().unwrap_or(0);
    let entangled_groups = p.parts().len() - singletons;
    // E = n - K1 - 2L + 2; always in 2..=n for n >= 2, and 2 for (1).
    let entanglement_index = n + 2 - singletons - 2 * entangled_groups;
    let separability_index = 2 * entangled_groups + singletons;
    PartitionStats {
        entangled_groups,
        singletons,
        multiplicity,
        entanglement_index,
        separability_index,
    }
}

/// Streaming enumeration of all partitions of `n` in reverse-lexicographic
/// order: (n), (n-1,1), ..., (1,1,...,1).
pub struct PartitionIter {
    /// Current partition; empty once exhausted. Starts as [n].
    current: Vec<usize>,
    fresh: bool,
}

impl PartitionIter {
    fn new(n: usize) -> Self {
        PartitionIter {
            current: vec![n],
            fresh: true,
        }
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.fresh {
            self.fresh = false;
            return Some(Partition {
                parts: self.current.clone(),
            });
        }
        // Successor in reverse-lexicographic order: find the last part > 1,
        // decrement it, and repack everything after it greedily.
        let cur = &mut self.current;
        let pos = cur.iter().rposition(|&p| p > 1)?;
        let mut remainder: usize = cur[pos..].iter().sum();
        let cap = cur[pos] - 1;
        cur.truncate(pos);
        while remainder > 0 {
            let part = cap.min(remainder);
            cur.push(part);
            remainder -= part;
        }
        Some(Partition { parts: cur.clone() })
    }
}

/// Iterates the partitions of `n` in reverse-lexicographic order without
/// materializing them all.
pub fn partitions_iter(n: usize) -> Result<PartitionIter> {
    if n == 0 || n > MAX_PARTITION_N {
        return Err(Error::invalid(format!(
            "partition count n must be in 1..={MAX_PARTITION_N}, got {n}"
        )));
    }
    Ok(PartitionIter::new(n))
}

/// All partitions of `n` in reverse-lexicographic order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    Ok(partitions_iter(n)?.collect())
}

/// Partitions of `n` grouped by entanglement index, with the fully separable
/// type (1,1,...,1) held out on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classes {
    /// Keys are exactly 2..=n; each partition of n except (1_n) appears once.
    pub by_index: BTreeMap<usize, Vec<Partition>>,
    /// The held-out (1_n) type, bounded by the linear inequality instead.
    pub separable: Partition,
}

/// Groups all partitions of `n >= 2` into the n-1 entanglement classes.
pub fn classes(n: usize) -> Result<Classes> {
    if n < 2 {
        return Err(Error::invalid(format!("classes need n >= 2, got {n}")));
    }
    let mut by_index: BTreeMap<usize, Vec<Partition>> = BTreeMap::new();
    let mut separable = None;
    for p in partitions_iter(n)? {
        if p.is_separable() {
            separable = Some(p);
        } else {
            by_index.entry(p.stats().entanglement_index).or_default().push(p);
        }
    }
    Ok(Classes {
        by_index,
        separable: separable.expect("(1_n) is always enumerated"),
    })
}
