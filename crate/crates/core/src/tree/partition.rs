use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::profile::StateLabel;

/// Every way to split `pattern_ids` into two nonempty groups, one subset per
/// split (a subset and its complement are the same split).
///
/// Subsets are ordered by size, then lexicographically by their sorted
/// labels; of each complementary pair the one appearing first is kept, so
/// `k` states give `2^(k-1) - 1` candidates.
pub fn enumerate_bipartitions(pattern_ids: &BTreeSet<StateLabel>) -> Result<Vec<BTreeSet<StateLabel>>> {
    let labels: Vec<StateLabel> = pattern_ids.iter().copied().collect();
    let k = labels.len();
    if k < 2 {
        return Err(Error::DegenerateNode(k));
    }
    let full: u32 = (1 << k) - 1;
    let mut subsets: Vec<Vec<StateLabel>> = (1..full)
        .map(|mask| {
            (0..k)
                .filter(|bit| mask & (1 << bit) != 0)
                .map(|bit| labels[bit])
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let mut kept: Vec<BTreeSet<StateLabel>> = Vec::with_capacity(subsets.len() / 2);
    let mut seen: BTreeSet<BTreeSet<StateLabel>> = BTreeSet::new();
    for subset in subsets {
        let set: BTreeSet<StateLabel> = subset.into_iter().collect();
        let complement: BTreeSet<StateLabel> = pattern_ids.difference(&set).copied().collect();
        if seen.contains(&complement) {
            continue;
        }
        seen.insert(set.clone());
        kept.push(set);
    }
    Ok(kept)
}
