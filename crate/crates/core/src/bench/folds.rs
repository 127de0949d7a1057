//! Subject-level stratified k-fold assignment.
//!
//! Subjects fall into four groups by rim+ lesion count: none, 1-3, 4-6 and
//! more than 6. Each group is shuffled and dealt round-robin into the folds;
//! the dealing cursor carries over between groups so fold sizes also stay
//! within one of each other.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const NUM_GROUPS: usize = 4;

/// Count group of a subject with `rim_count` rim+ lesions.
pub fn count_group(rim_count: u32) -> usize {
    match rim_count {
        0 => 0,
        1..=3 => 1,
        4..=6 => 2,
        _ => 3,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub id: String,
    pub rim_count: u32,
    pub group: usize,
    pub fold: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    /// One entry per subject, in input order.
    pub entries: Vec<FoldEntry>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.fold)
    }

    /// `counts[fold][group]`.
    pub fn group_counts(&self) -> Vec<[usize; NUM_GROUPS]> {
        let mut counts = vec![[0; NUM_GROUPS]; self.k];
        for e in &self.entries {
            counts[e.fold][e.group] += 1;
        }
        counts
    }
}

pub fn stratified_folds(subjects: &[(String, u32)], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    if subjects.len() < k {
        return Err(invalid(format!(
            "{} subjects cannot fill {k} folds",
            subjects.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some((dup, _)) = subjects.iter().find(|(id, _)| !seen.insert(id.as_str())) {
        return Err(invalid(format!("duplicate subject id {dup:?}")));
    }

    let mut members: [Vec<usize>; NUM_GROUPS] = Default::default();
    for (idx, (_, count)) in subjects.iter().enumerate() {
        members[count_group(*count)].push(idx);
    }
    let mut rng = crate::synth::rng(seed);
    let mut fold_of = vec![0; subjects.len()];
    let mut cursor = 0;
    for group in members.iter_mut() {
        group.shuffle(&mut rng);
        for &idx in group.iter() {
            fold_of[idx] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    let entries = subjects
        .iter()
        .zip(fold_of)
        .map(|((id, count), fold)| FoldEntry {
            id: id.clone(),
            rim_count: *count,
            group: count_group(*count),
            fold,
        })
        .collect();
    Ok(FoldAssignment { k, entries })
}
