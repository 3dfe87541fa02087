//! Per-group winners maintained under row upserts and deletes.
//!
//! The stored winner of a group is compared against each change. A full scan of
//! the group happens only when the current winner loses its key (it was
//! re-keyed lower, or deleted); every other change costs at most one comparison.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Key, ModelSpec};
use crate::sampler::{compare_candidates, derive_uniform_versioned, GroupWinner, KeyedRow, Row, SeedContext};

/// Which branch of the update rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateCase {
    /// The changed row beats the stored winner (or the group was empty) and
    /// replaces it.
    NewWinner,
    /// A non-winning row changed and still loses: nothing to do.
    Unchanged,
    /// The winning row was re-keyed and still beats its old key.
    WinnerRefreshed,
    /// The winning row was re-keyed below its old key: the group was rescanned.
    WinnerRescanned,
    /// A non-winning row was deleted.
    DeletedNonWinner,
    /// The winning row was deleted and the group rescanned.
    DeletedWinner,
    /// The last row of the group was deleted.
    GroupRemoved,
}

impl UpdateCase {
    pub fn name(self) -> &'static str {
        match self {
            UpdateCase::NewWinner => "case-i",
            UpdateCase::Unchanged => "case-ii",
            UpdateCase::WinnerRefreshed => "case-iii",
            UpdateCase::WinnerRescanned => "case-iv",
            UpdateCase::DeletedNonWinner => "no-rescan",
            UpdateCase::DeletedWinner => "rescan",
            UpdateCase::GroupRemoved => "group-removed",
        }
    }
}

impl fmt::Display for UpdateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cost accounting for one upsert or delete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeReport {
    pub case: UpdateCase,
    /// Candidate comparisons performed, rescan included.
    pub comparisons: u64,
    pub rescanned: bool,
    /// The group's winner after the change; `None` once the group is empty.
    pub winner: Option<GroupWinner>,
}

#[derive(Debug, Clone)]
struct Entry {
    strength: f64,
    uniform: Option<f64>,
    key: Key,
    version: u64,
}

#[derive(Debug, Clone)]
struct Group {
    rows: HashMap<String, Entry>,
    winner: GroupWinner,
}

#[derive(Debug, Clone)]
pub struct DynamicTable {
    spec: ModelSpec,
    ctx: SeedContext,
    groups: BTreeMap<String, Group>,
    /// Upserts seen per `(group, label)`; survives deletes so a re-inserted
    /// row never reuses a draw.
    versions: HashMap<(String, String), u64>,
}

impl DynamicTable {
    pub fn new(spec: ModelSpec, ctx: SeedContext) -> Self {
        DynamicTable {
            spec,
            ctx,
            groups: BTreeMap::new(),
            versions: HashMap::new(),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn ctx(&self) -> SeedContext {
        self.ctx
    }

    /// Inserts or rewrites a row with a freshly drawn key.
    pub fn upsert(&mut self, group_id: &str, label: &str, strength: f64) -> Result<ChangeReport> {
        let version = self
            .versions
            .get(&(group_id.to_owned(), label.to_owned()))
            .copied()
            .unwrap_or(0);
        let u = derive_uniform_versioned(self.ctx, version, group_id, label);
        let key = self
            .spec
            .key(strength, u)
            .map_err(|e| e.at_row(group_id, label))?;
        self.versions.insert((group_id.to_owned(), label.to_owned()), version + 1);
        Ok(self.apply(group_id, label, Entry { strength, uniform: Some(u), key, version }))
    }

    /// Inserts or rewrites a row with a caller-supplied key. The version
    /// counter is left alone.
    pub fn upsert_with_key(&mut self, group_id: &str, label: &str, strength: f64, key: Key) -> ChangeReport {
        let version = self
            .versions
            .get(&(group_id.to_owned(), label.to_owned()))
            .copied()
            .unwrap_or(0);
        self.apply(group_id, label, Entry { strength, uniform: None, key, version })
    }

    fn apply(&mut self, group_id: &str, label: &str, entry: Entry) -> ChangeReport {
        let orientation = self.spec.orientation();
        let key = entry.key;
        let Some(group) = self.groups.get_mut(group_id) else {
            let winner = GroupWinner {
                group_id: group_id.to_owned(),
                label: label.to_owned(),
                key,
                row_count: 1,
            };
            let mut rows = HashMap::new();
            rows.insert(label.to_owned(), entry);
            self.groups.insert(group_id.to_owned(), Group { rows, winner: winner.clone() });
            return ChangeReport {
                case: UpdateCase::NewWinner,
                comparisons: 0,
                rescanned: false,
                winner: Some(winner),
            };
        };

        group.rows.insert(label.to_owned(), entry);
        group.winner.row_count = group.rows.len() as u64;
        let wins = compare_candidates(orientation, &key, label, &group.winner.key, &group.winner.label);

        let (case, comparisons, rescanned) = if group.winner.label != label {
            if wins == Ordering::Greater {
                group.winner.label = label.to_owned();
                group.winner.key = key;
                (UpdateCase::NewWinner, 1, false)
            } else {
                (UpdateCase::Unchanged, 1, false)
            }
        } else if wins != Ordering::Less {
            // Same label: compare against its own previous key.
            group.winner.key = key;
            (UpdateCase::WinnerRefreshed, 1, false)
        } else {
            let scanned = rescan(group, orientation);
            (UpdateCase::WinnerRescanned, 1 + scanned, true)
        };

        ChangeReport {
            case,
            comparisons,
            rescanned,
            winner: Some(group.winner.clone()),
        }
    }

    pub fn delete(&mut self, group_id: &str, label: &str) -> Result<ChangeReport> {
        let not_found = || Error::NotFound {
            group_id: group_id.to_owned(),
            label: label.to_owned(),
        };
        let group = self.groups.get_mut(group_id).ok_or_else(not_found)?;
        group.rows.remove(label).ok_or_else(not_found)?;

        if group.rows.is_empty() {
            self.groups.remove(group_id);
            return Ok(ChangeReport {
                case: UpdateCase::GroupRemoved,
                comparisons: 1,
                rescanned: false,
                winner: None,
            });
        }

        group.winner.row_count = group.rows.len() as u64;
        let report = if group.winner.label != label {
            ChangeReport {
                case: UpdateCase::DeletedNonWinner,
                comparisons: 1,
                rescanned: false,
                winner: Some(group.winner.clone()),
            }
        } else {
            let scanned = rescan(group, self.spec.orientation());
            ChangeReport {
                case: UpdateCase::DeletedWinner,
                comparisons: 1 + scanned,
                rescanned: true,
                winner: Some(group.winner.clone()),
            }
        };
        Ok(report)
    }

    pub fn winner(&self, group_id: &str) -> Option<&GroupWinner> {
        self.groups.get(group_id).map(|g| &g.winner)
    }

    /// All winners, ordered by group id.
    pub fn winners(&self) -> impl Iterator<Item = &GroupWinner> {
        self.groups.values().map(|g| &g.winner)
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn row_count(&self) -> usize {
        self.groups.values().map(|g| g.rows.len()).sum()
    }

    /// The current rows with their keys, grouped by group id and sorted by
    /// label. Rows carry the version their key was drawn from.
    pub fn keyed_rows(&self) -> Vec<KeyedRow> {
        let mut out = Vec::with_capacity(self.row_count());
        for (group_id, group) in &self.groups {
            let mut labels: Vec<&String> = group.rows.keys().collect();
            labels.sort();
            for label in labels {
                let e = &group.rows[label];
                out.push(KeyedRow {
                    row: Row::new(group_id.clone(), label.clone(), e.strength).with_version(e.version),
                    uniform: e.uniform,
                    key: e.key,
                });
            }
        }
        out
    }
}

/// Recomputes a group's winner from its rows; returns comparisons made.
fn rescan(group: &mut Group, orientation: crate::families::Orientation) -> u64 {
    let mut iter = group.rows.iter();
    let (mut best_label, mut best) = iter.next().expect("rescan of an empty group");
    let mut comparisons = 0;
    for (label, entry) in iter {
        comparisons += 1;
        if compare_candidates(orientation, &entry.key, label, &best.key, best_label) == Ordering::Greater {
            best_label = label;
            best = entry;
        }
    }
    group.winner.label = best_label.clone();
    group.winner.key = best.key;
    comparisons
}
