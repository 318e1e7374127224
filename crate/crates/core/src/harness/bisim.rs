//! Strong bisimilarity by partition refinement.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::lts::Lts;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BisimError {
    #[error("the {0} system was truncated; use a bounded check")]
    Truncated(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BisimResult {
    pub bisimilar: bool,
    /// Number of refinement rounds when bounded; `None` for the full check.
    pub bound: Option<usize>,
    /// Equivalence classes over both systems at the end of refinement.
    pub blocks: usize,
}

/// Decides whether the initial states of `a` and `b` are strongly
/// bisimilar. With `bound = Some(k)`, decides `k`-step bisimilarity
/// instead, which only inspects paths of length at most `k`; truncated
/// systems are then allowed as long as they were explored that deep.
pub fn bisim<L: Clone + Ord + Hash>(a: &Lts<L>, b: &Lts<L>, bound: Option<usize>) -> Result<BisimResult, BisimError> {
    if bound.is_none() {
        if a.truncated {
            return Err(BisimError::Truncated("left"));
        }
        if b.truncated {
            return Err(BisimError::Truncated("right"));
        }
    }
    let offset = a.num_states();
    let n = offset + b.num_states();
    let mut succ: Vec<Vec<(L, usize)>> = vec![Vec::new(); n];
    for e in &a.edges {
        succ[e.from].push((e.label.clone(), e.to));
    }
    for e in &b.edges {
        succ[offset + e.from].push((e.label.clone(), offset + e.to));
    }
    let mut block = vec![0usize; n];
    let mut blocks = 1;
    let mut rounds = 0;
    loop {
        if bound.is_some_and(|k| rounds >= k) {
            break;
        }
        let mut ids: HashMap<(usize, BTreeSet<(L, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|s| {
                let sig: BTreeSet<(L, usize)> = succ[s].iter().map(|(l, t)| (l.clone(), block[*t])).collect();
                let fresh = ids.len();
                *ids.entry((block[s], sig)).or_insert(fresh)
            })
            .collect();
        rounds += 1;
        let count = ids.len();
        block = next;
        if count == blocks {
            break;
        }
        blocks = count;
    }
    Ok(BisimResult { bisimilar: block[a.initial] == block[offset + b.initial], bound, blocks })
}
