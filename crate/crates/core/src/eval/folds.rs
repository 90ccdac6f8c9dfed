use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnn::Provenance;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::label::Label;

pub const GROUP_NAMES: [char; 5] = ['A', 'B', 'C', 'D', 'E'];
pub const CASE_IDS: [&str; 5] = ["I", "II", "III", "IV", "V"];

/// What a group draw is keyed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupingMode {
    /// All augmented variants of a source patch share a group.
    #[default]
    BySource,
    /// Every row is drawn independently (augmented copies may leak across groups).
    ByRow,
}

/// Group index (0 = A .. 4 = E) for every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldGroups {
    pub assignment: Vec<usize>,
}

impl FoldGroups {
    pub fn members(&self, group: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == group).collect()
    }
}

/// Assigns rows to groups A-E: per class, the keys are shuffled with `seed` and dealt round-robin.
pub fn partition_groups(provenance: &[Provenance], labels: &[Label], seed: u64, mode: GroupingMode) -> Result<FoldGroups> {
    if provenance.len() != labels.len() {
        return Err(Error::shape(format!("{} provenance records for {} labels", provenance.len(), labels.len())));
    }
    // key -> (class, rows); BTreeMap gives an order independent of row order
    let mut keys: BTreeMap<(String, usize, usize, usize), (Label, Vec<usize>)> = BTreeMap::new();
    for (i, (p, &l)) in provenance.iter().zip(labels).enumerate() {
        let row_part = if mode == GroupingMode::ByRow { i } else { 0 };
        let entry = keys.entry((p.source_id.clone(), p.origin_row, p.origin_col, row_part)).or_insert((l, Vec::new()));
        if entry.0 != l {
            return Err(Error::domain(format!(
                "source patch {}@({},{}) carries both labels",
                p.source_id, p.origin_row, p.origin_col
            )));
        }
        entry.1.push(i);
    }
    let mut assignment = vec![usize::MAX; labels.len()];
    for (stream, class) in [Label::Mass, Label::NonMass].into_iter().enumerate() {
        let mut members: Vec<&Vec<usize>> = keys.values().filter(|(l, _)| *l == class).map(|(_, rows)| rows).collect();
        if members.len() < GROUP_NAMES.len() {
            return Err(Error::domain(format!(
                "class {class} has {} distinct source patches, need at least {}",
                members.len(),
                GROUP_NAMES.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        members.shuffle(&mut rng);
        for (k, rows) in members.into_iter().enumerate() {
            for &r in rows {
                assignment[r] = k % GROUP_NAMES.len();
            }
        }
    }
    Ok(FoldGroups { assignment })
}

/// One rotation: three training groups, one validation group, one test group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitCase {
    pub id: &'static str,
    pub train_groups: [usize; 3],
    pub validation_group: usize,
    pub test_group: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitCase {
    pub fn describe(&self) -> String {
        let train: String = self.train_groups.iter().map(|&g| GROUP_NAMES[g]).collect();
        format!("{}: {train}|{}|{}", self.id, GROUP_NAMES[self.validation_group], GROUP_NAMES[self.test_group])
    }
}

/// Case k trains on groups k, k+1, k+2, validates on k+3 and tests on k+4 (mod 5).
pub fn build_cases(groups: &FoldGroups) -> Vec<SplitCase> {
    (0..5)
        .map(|k| {
            let train_groups = [k, (k + 1) % 5, (k + 2) % 5];
            let (validation_group, test_group) = ((k + 3) % 5, (k + 4) % 5);
            let rows_of = |gs: &[usize]| -> Vec<usize> {
                (0..groups.assignment.len()).filter(|&i| gs.contains(&groups.assignment[i])).collect()
            };
            SplitCase {
                id: CASE_IDS[k],
                train_groups,
                validation_group,
                test_group,
                train: rows_of(&train_groups),
                validation: rows_of(&[validation_group]),
                test: rows_of(&[test_group]),
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupRecord {
    row: usize,
    source_id: String,
    origin_row: usize,
    origin_col: usize,
    label: Label,
    group: char,
}

pub fn write_groups(path: &Path, groups: &FoldGroups, provenance: &[Provenance], labels: &[Label]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, &g) in groups.assignment.iter().enumerate() {
        let p = &provenance[i];
        w.serialize(GroupRecord {
            row: i,
            source_id: p.source_id.clone(),
            origin_row: p.origin_row,
            origin_col: p.origin_col,
            label: labels[i],
            group: GROUP_NAMES[g],
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fsutil::write_atomic(path, |f| std::io::Write::write_all(f, &bytes))
}

pub fn read_groups(path: &Path) -> Result<FoldGroups> {
    let mut r = csv::Reader::from_path(path)?;
    let mut assignment = Vec::new();
    for (i, rec) in r.deserialize::<GroupRecord>().enumerate() {
        let rec = rec?;
        if rec.row != i {
            return Err(Error::format(format!("group file row {} out of order", rec.row)));
        }
        let g = GROUP_NAMES
            .iter()
            .position(|&c| c == rec.group)
            .ok_or_else(|| Error::format(format!("unknown group `{}`", rec.group)))?;
        assignment.push(g);
    }
    Ok(FoldGroups { assignment })
}
