//! Grouped sampling: key every row locally, then keep the extremal key per group.
//!
//! Keying is a per-row map and the winner selection is an associative,
//! commutative merge, so both halves can be split across threads in any way
//! without changing the result.

mod seed;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Key, ModelSpec, Orientation};

pub use seed::{derive_uniform, derive_uniform_versioned, mix64, open_unit, uniform_at, SeedContext};

/// One `(group, label, strength)` record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub group_id: String,
    pub label: String,
    pub strength: f64,
    /// Number of times the row has been rewritten; selects a fresh uniform
    /// per rewrite. Zero for rows that were never updated.
    pub version: u64,
}

impl Row {
    pub fn new(group_id: impl Into<String>, label: impl Into<String>, strength: f64) -> Self {
        Row {
            group_id: group_id.into(),
            label: label.into(),
            strength,
            version: 0,
        }
    }

    pub fn with_version(mut self, version: u64) -> Self {
        self.version = version;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyedRow {
    pub row: Row,
    /// The draw the key was generated from; `None` for injected keys.
    pub uniform: Option<f64>,
    pub key: Key,
}

impl KeyedRow {
    /// Keys a row with a precomputed key instead of a generated one.
    pub fn injected(row: Row, key: Key) -> Self {
        KeyedRow {
            row,
            uniform: None,
            key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupWinner {
    pub group_id: String,
    pub label: String,
    #[serde(serialize_with = "serialize_key")]
    pub key: Key,
    pub row_count: u64,
}

fn serialize_key<S: serde::Serializer>(key: &Key, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(key.value())
}

/// Winners keyed and ordered by group id.
pub type WinnerMap = BTreeMap<String, GroupWinner>;

/// Total order on candidates: key by orientation, ties to the smaller label.
/// `Greater` means `a` is preferred over `b`.
pub fn compare_candidates(
    orientation: Orientation,
    a_key: &Key,
    a_label: &str,
    b_key: &Key,
    b_label: &str,
) -> Ordering {
    let by_key = match orientation {
        Orientation::Max => a_key.cmp(b_key),
        Orientation::Min => b_key.cmp(a_key),
    };
    by_key.then_with(|| b_label.cmp(a_label))
}

/// Rejects tables that repeat a `(group, label)` pair.
pub fn check_unique(rows: &[Row]) -> Result<()> {
    let mut seen = HashSet::with_capacity(rows.len());
    for row in rows {
        if !seen.insert((row.group_id.as_str(), row.label.as_str())) {
            return Err(Error::DuplicateRow {
                group_id: row.group_id.clone(),
                label: row.label.clone(),
            });
        }
    }
    Ok(())
}

pub fn key_row(row: &Row, spec: &ModelSpec, ctx: SeedContext) -> Result<KeyedRow> {
    let u = derive_uniform_versioned(ctx, row.version, &row.group_id, &row.label);
    let key = spec
        .key(row.strength, u)
        .map_err(|e| e.at_row(&row.group_id, &row.label))?;
    Ok(KeyedRow {
        row: row.clone(),
        uniform: Some(u),
        key,
    })
}

pub fn assign_keys(rows: &[Row], spec: &ModelSpec, ctx: SeedContext) -> Result<Vec<KeyedRow>> {
    rows.iter().map(|row| key_row(row, spec, ctx)).collect()
}

/// [`assign_keys`] on the current rayon pool. Reports the first failing row in
/// input order, like the sequential version.
pub fn assign_keys_par(rows: &[Row], spec: &ModelSpec, ctx: SeedContext) -> Result<Vec<KeyedRow>> {
    let keyed: Vec<Result<KeyedRow>> = rows.par_iter().map(|row| key_row(row, spec, ctx)).collect();
    keyed.into_iter().collect()
}

#[derive(Clone, Copy)]
struct Partial {
    best: usize,
    count: u64,
}

type PartialMap<'a> = HashMap<&'a str, Partial>;

fn prefer(keyed: &[KeyedRow], orientation: Orientation, a: usize, b: usize) -> usize {
    let (ra, rb) = (&keyed[a], &keyed[b]);
    match compare_candidates(orientation, &ra.key, &ra.row.label, &rb.key, &rb.row.label) {
        Ordering::Less => b,
        _ => a,
    }
}

fn fold_range<'a>(keyed: &'a [KeyedRow], orientation: Orientation, range: std::ops::Range<usize>) -> PartialMap<'a> {
    let mut acc = PartialMap::new();
    for i in range {
        let group = keyed[i].row.group_id.as_str();
        acc.entry(group)
            .and_modify(|p| {
                p.best = prefer(keyed, orientation, p.best, i);
                p.count += 1;
            })
            .or_insert(Partial { best: i, count: 1 });
    }
    acc
}

fn merge_partials<'a>(
    keyed: &[KeyedRow],
    orientation: Orientation,
    mut a: PartialMap<'a>,
    b: PartialMap<'a>,
) -> PartialMap<'a> {
    for (group, pb) in b {
        a.entry(group)
            .and_modify(|pa| {
                pa.best = prefer(keyed, orientation, pa.best, pb.best);
                pa.count += pb.count;
            })
            .or_insert(pb);
    }
    a
}

fn materialize(keyed: &[KeyedRow], partial: PartialMap<'_>) -> WinnerMap {
    partial
        .into_iter()
        .map(|(group, p)| {
            let row = &keyed[p.best];
            (
                group.to_owned(),
                GroupWinner {
                    group_id: group.to_owned(),
                    label: row.row.label.clone(),
                    key: row.key,
                    row_count: p.count,
                },
            )
        })
        .collect()
}

/// Per-group winner by sequential fold.
pub fn reduce_winners(keyed: &[KeyedRow], orientation: Orientation) -> WinnerMap {
    materialize(keyed, fold_range(keyed, orientation, 0..keyed.len()))
}

/// Per-group winner by rayon fold/reduce on the current pool.
pub fn reduce_winners_par(keyed: &[KeyedRow], orientation: Orientation) -> WinnerMap {
    const CHUNK: usize = 4096;
    let partial = (0..keyed.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| fold_range(keyed, orientation, c * CHUNK..((c + 1) * CHUNK).min(keyed.len())))
        .reduce(PartialMap::new, |a, b| merge_partials(keyed, orientation, a, b));
    materialize(keyed, partial)
}

/// Merges two winner maps computed over disjoint row sets.
pub fn merge_winner_maps(mut a: WinnerMap, b: WinnerMap, orientation: Orientation) -> WinnerMap {
    for (group, wb) in b {
        match a.get_mut(&group) {
            Some(wa) => {
                let count = wa.row_count + wb.row_count;
                if compare_candidates(orientation, &wb.key, &wb.label, &wa.key, &wa.label) == Ordering::Greater {
                    *wa = wb;
                }
                wa.row_count = count;
            }
            None => {
                a.insert(group, wb);
            }
        }
    }
    a
}

pub fn sample(rows: &[Row], spec: &ModelSpec, ctx: SeedContext) -> Result<WinnerMap> {
    let keyed = assign_keys(rows, spec, ctx)?;
    Ok(reduce_winners(&keyed, spec.orientation()))
}

/// Index of the winning row when all `rows` belong to one group; same keys and
/// comparator as [`sample`], without building a winner map. `None` for no rows.
pub fn sample_single_group(rows: &[Row], spec: &ModelSpec, ctx: SeedContext) -> Result<Option<usize>> {
    let orientation = spec.orientation();
    let mut best: Option<(usize, Key)> = None;
    for (i, row) in rows.iter().enumerate() {
        let u = derive_uniform_versioned(ctx, row.version, &row.group_id, &row.label);
        let key = spec
            .key(row.strength, u)
            .map_err(|e| e.at_row(&row.group_id, &row.label))?;
        best = match best {
            Some((b, bk))
                if compare_candidates(orientation, &key, &row.label, &bk, &rows[b].label) != Ordering::Greater =>
            {
                Some((b, bk))
            }
            _ => Some((i, key)),
        };
    }
    Ok(best.map(|(i, _)| i))
}

/// [`sample`] with keying and reduction spread over the current rayon pool.
pub fn sample_par(rows: &[Row], spec: &ModelSpec, ctx: SeedContext) -> Result<WinnerMap> {
    let keyed = assign_keys_par(rows, spec, ctx)?;
    Ok(reduce_winners_par(&keyed, spec.orientation()))
}
