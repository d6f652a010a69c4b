use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::sequences::GraspId;
use crate::error::{invalid, Result};
use crate::seed::rng_for;

pub const TRAIN_FRACTION: f64 = 0.7;

/// Grasp-level partition; sequences follow their grasp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<GraspId>,
    pub val: Vec<GraspId>,
}

impl DatasetSplit {
    pub fn is_disjoint(&self) -> bool {
        let train: std::collections::BTreeSet<_> = self.train.iter().collect();
        self.val.iter().all(|id| !train.contains(id))
    }
}

/// Splits grasps 70/30 within each stratum. Every stratum with two or more
/// grasps keeps at least one on each side.
pub fn split_grasps(items: &[(GraspId, usize)], seed: u64) -> Result<DatasetSplit> {
    if items.is_empty() {
        return Err(invalid("no grasps to split"));
    }
    let mut strata: BTreeMap<usize, Vec<GraspId>> = BTreeMap::new();
    for &(id, s) in items {
        strata.entry(s).or_default().push(id);
    }
    let mut split = DatasetSplit { train: Vec::new(), val: Vec::new() };
    for (s, mut ids) in strata {
        ids.sort();
        ids.dedup();
        ids.shuffle(&mut rng_for(seed, &[0x5917, s as u64]));
        let n = ids.len();
        let mut n_train = (n as f64 * TRAIN_FRACTION).round() as usize;
        if n >= 2 {
            n_train = n_train.clamp(1, n - 1);
        }
        split.val.extend_from_slice(&ids[n_train..]);
        ids.truncate(n_train);
        split.train.extend(ids);
    }
    split.train.sort();
    split.val.sort();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(classes: usize, per: usize) -> Vec<(GraspId, usize)> {
        (0..classes)
            .flat_map(|c| (0..per).map(move |g| (GraspId { object_label: c, grasp_idx: g }, c)))
            .collect()
    }

    #[test]
    fn seventy_thirty_per_class() {
        let s = split_grasps(&ids(26, 20), 3).unwrap();
        assert_eq!(s.train.len(), 26 * 14);
        assert_eq!(s.val.len(), 26 * 6);
        assert!(s.is_disjoint());
        assert_eq!(s, split_grasps(&ids(26, 20), 3).unwrap());
        assert_ne!(s, split_grasps(&ids(26, 20), 4).unwrap());
    }

    #[test]
    fn tiny_strata_keep_both_sides() {
        let s = split_grasps(&ids(2, 2), 0).unwrap();
        assert_eq!((s.train.len(), s.val.len()), (2, 2));
        assert!(split_grasps(&[], 0).is_err());
    }
}
