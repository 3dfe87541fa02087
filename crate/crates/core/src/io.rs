//! CSV tables in and winner lists out.
//!
//! Input is comma-separated UTF-8 with a header naming at least `ID`, `QUAL`
//! and `Strength` (any order, case-insensitive). Two optional columns are
//! recognized: `RND2` (alias `KEY`) holding precomputed keys, and `Version`
//! holding the row's rewrite counter. Numbers use a decimal point.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sampler::{Row, WinnerMap};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub rows: Vec<Row>,
    /// Present when the input carried a key column.
    pub keys: Option<Vec<f64>>,
}

struct Columns {
    id: usize,
    qual: usize,
    strength: usize,
    key: Option<usize>,
    version: Option<usize>,
}

impl Columns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let find = |names: &[&str]| {
            header
                .iter()
                .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        };
        let required = |name: &str| {
            find(&[name]).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("header lacks a '{name}' column"),
            })
        };
        Ok(Columns {
            id: required("ID")?,
            qual: required("QUAL")?,
            strength: required("Strength")?,
            key: find(&["RND2", "KEY"]),
            version: find(&["Version"]),
        })
    }
}

fn parse_number(field: &str, what: &str, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what} '{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} '{field}' is not finite"),
        });
    }
    Ok(v)
}

/// Reads a table. An empty input or a header-only input yields no rows.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers().map_err(csv_error)?.clone();
    if header.is_empty() {
        return Ok(Table::default());
    }
    let cols = Columns::from_header(&header)?;
    let mut table = Table {
        rows: Vec::new(),
        keys: cols.key.map(|_| Vec::new()),
    };
    let mut seen = HashSet::new();
    for record in csv.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let id = get(cols.id);
        let qual = get(cols.qual);
        if id.is_empty() || qual.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty ID or QUAL".into(),
            });
        }
        let strength = parse_number(get(cols.strength), "Strength", line)?;
        if !seen.insert((id.to_owned(), qual.to_owned())) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate row ({id}, {qual})"),
            });
        }
        let mut row = Row::new(id, qual, strength);
        if let Some(v) = cols.version {
            row.version = get(v).trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("Version '{}' is not a nonnegative integer", get(v)),
            })?;
        }
        if let (Some(k), Some(keys)) = (cols.key, table.keys.as_mut()) {
            keys.push(parse_number(get(k), "key", line)?);
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        _ => Error::Parse {
            line,
            message: err.to_string(),
        },
    }
}

/// Writes a table in the input dialect. Always writes the `Version` column
/// when any row has a nonzero version.
pub fn write_table<W: Write>(writer: W, table: &Table) -> Result<()> {
    let with_version = table.rows.iter().any(|r| r.version != 0);
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["ID", "QUAL", "Strength"];
    if table.keys.is_some() {
        header.push("RND2");
    }
    if with_version {
        header.push("Version");
    }
    csv.write_record(&header).map_err(csv_error)?;
    for (i, row) in table.rows.iter().enumerate() {
        let mut rec = vec![row.group_id.clone(), row.label.clone(), row.strength.to_string()];
        if let Some(keys) = &table.keys {
            rec.push(keys[i].to_string());
        }
        if with_version {
            rec.push(row.version.to_string());
        }
        csv.write_record(&rec).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

/// One line per group, `ID,QUAL[,KEY]`, in group order; prefixed by the
/// replicate index when `replicate` is given.
pub fn write_winners<W: Write>(writer: W, winners: &WinnerMap, with_key: bool, replicate: Option<u64>) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for w in winners.values() {
        let mut rec = Vec::with_capacity(4);
        if let Some(r) = replicate {
            rec.push(r.to_string());
        }
        rec.push(w.group_id.clone());
        rec.push(w.label.clone());
        if with_key {
            rec.push(w.key.value().to_string());
        }
        csv.write_record(&rec).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_fixture_with_keys() {
        let t = read_table(include_str!("../fixtures/worked_example.csv").as_bytes()).unwrap();
        assert_eq!(t.rows.len(), 14);
        assert_eq!(t.rows[3], Row::new("#1", "RED", 2.0));
        assert_eq!(t.keys.as_ref().unwrap()[3], 5.612483956);
    }

    #[test]
    fn header_only_and_empty_inputs() {
        assert!(read_table("ID,QUAL,Strength\n".as_bytes()).unwrap().rows.is_empty());
        assert!(read_table("".as_bytes()).unwrap().rows.is_empty());
    }

    #[test]
    fn header_is_case_insensitive_and_reorderable() {
        let t = read_table("strength,qual,id,version\n1.5,a,g,3\n".as_bytes()).unwrap();
        assert_eq!(t.rows, vec![Row::new("g", "a", 1.5).with_version(3)]);
        assert!(t.keys.is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_table("ID,QUAL,Strength\ng,a,1\ng,b,oops\n".as_bytes()).unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "Strength 'oops' is not a number".into() });
        let err = read_table("ID,QUAL,Strength\ng,a,1\ng,b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_table("ID,QUAL\ng,a\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_table("ID,QUAL,Strength\ng,a,1\nh,a,2\ng,a,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        assert!(read_table("ID,QUAL,Strength\ng,a,NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn winners_are_header_less_lines() {
        use crate::families::Key;
        use crate::sampler::GroupWinner;
        let mut m = WinnerMap::new();
        m.insert(
            "#1".into(),
            GroupWinner { group_id: "#1".into(), label: "RED".into(), key: Key::new(5.5), row_count: 4 },
        );
        let mut out = Vec::new();
        write_winners(&mut out, &m, false, None).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "#1,RED\n");
        let mut out = Vec::new();
        write_winners(&mut out, &m, true, Some(2)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "2,#1,RED,5.5\n");
    }

    proptest! {
        #[test]
        fn table_round_trip(
            rows in proptest::collection::vec(("[a-z#0-9]{1,6}", "[A-Z ,\"]{1,8}", -1e6f64..1e6, 0u64..5), 0..40),
            with_keys in any::<bool>(),
        ) {
            let mut seen = std::collections::HashSet::new();
            let rows: Vec<Row> = rows
                .into_iter()
                .filter(|(g, l, _, _)| seen.insert((g.clone(), l.trim().to_string())) && !l.trim().is_empty())
                .map(|(g, l, s, v)| Row::new(g, l.trim(), s).with_version(v))
                .collect();
            let keys = with_keys.then(|| rows.iter().map(|r| r.strength * 0.5 - 1.0).collect());
            let table = Table { rows, keys };
            let mut buf = Vec::new();
            write_table(&mut buf, &table).unwrap();
            let back = read_table(buf.as_slice()).unwrap();
            prop_assert_eq!(&back.rows, &table.rows);
            prop_assert_eq!(&back.keys, &table.keys);
            let mut again = Vec::new();
            write_table(&mut again, &back).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
