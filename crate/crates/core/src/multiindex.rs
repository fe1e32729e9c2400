//! Finite index sets `I_k^M` of multi-indices and the linear ordering that
//! fixes the parametric basis.
//!
//! Multi-indices are ordered by total degree, ties broken lexicographically
//! on their entries. Under this ordering the strictly lower part of every
//! linear Gram matrix has at most one nonzero per row and per column.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A multi-index stored densely at length `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn zero(len: usize) -> Self {
        Self {
            entries: vec![0; len],
        }
    }

    /// The unit multi-index `e_m` (zero-based slot).
    pub fn unit(len: usize, slot: usize) -> Self {
        let mut entries = vec![0; len];
        entries[slot] = 1;
        Self { entries }
    }

    #[inline]
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&a| a == 0)
    }

    pub fn is_even(&self) -> bool {
        self.entries.iter().all(|&a| a % 2 == 0)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(m, _)| m)
    }

    /// Degree-lex comparison key.
    fn order_key(&self) -> (u32, &[u32]) {
        (self.total_degree(), &self.entries)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// The set `I_k^M` in degree-lex order together with its inverse lookup.
#[derive(Debug, Clone)]
pub struct MultiIndexSet {
    params: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl MultiIndexSet {
    /// Number of parameters `M`.
    pub fn params(&self) -> usize {
        self.params
    }

    /// Maximum total degree `k`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, j: usize) -> &MultiIndex {
        &self.indices[j]
    }

    /// Linear position of `alpha`, if it belongs to the set.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }
}

/// Builds `I_k^M` in degree-lex order; the zero multi-index comes first.
pub fn build_index_set(params: usize, degree: u32) -> Result<MultiIndexSet> {
    if params == 0 {
        return Err(Error::InvalidConfig(
            "index set needs at least one parameter (M >= 1)".into(),
        ));
    }
    let mut indices = Vec::with_capacity(dimension(params, degree).unwrap_or(0));
    let mut current = vec![0u32; params];
    enumerate(&mut current, 0, degree, &mut indices);
    indices.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    let position = indices
        .iter()
        .enumerate()
        .map(|(j, a)| (a.clone(), j))
        .collect();
    Ok(MultiIndexSet {
        params,
        degree,
        indices,
        position,
    })
}

fn enumerate(current: &mut Vec<u32>, slot: usize, budget: u32, out: &mut Vec<MultiIndex>) {
    if slot == current.len() {
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for a in 0..=budget {
        current[slot] = a;
        enumerate(current, slot + 1, budget - a, out);
    }
    current[slot] = 0;
}

/// `binomial(M + k, k)`, the cardinality of `I_k^M`.
pub fn dimension(params: usize, degree: u32) -> Result<usize> {
    if params == 0 {
        return Err(Error::InvalidConfig("M must be at least 1".into()));
    }
    binomial(params as u64 + degree as u64, degree as u64)
}

/// Exact binomial coefficient; overflow of `usize` is reported.
pub fn binomial(n: u64, k: u64) -> Result<usize> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c * (n - k + i) / i stays exact at every step
        c = c
            .checked_mul(n as u128 - k as u128 + i)
            .ok_or_else(|| Error::Overflow(format!("binomial({n}, {k})")))?
            / i;
    }
    usize::try_from(c).map_err(|_| Error::Overflow(format!("binomial({n}, {k})")))
}

/// Linear indices of all multi-indices in `set` whose entries are all even.
pub fn build_even_subset(set: &MultiIndexSet) -> Vec<usize> {
    set.iter()
        .enumerate()
        .filter(|(_, a)| a.is_even())
        .map(|(j, _)| j)
        .collect()
}
