use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, DatasetError, EventMatrix};

/// Maps raw cell tokens onto the three cell states. The three sets must be
/// disjoint; matching is exact after trimming surrounding whitespace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSchema {
    pub one: BTreeSet<String>,
    pub zero: BTreeSet<String>,
    pub missing: BTreeSet<String>,
}

impl Default for TokenSchema {
    /// `True` → 1, `False`/`Err` → 0, `NaN`/empty → missing.
    fn default() -> Self {
        Self::new(&["True"], &["False", "Err"], &["NaN", ""]).expect("default schema is disjoint")
    }
}

impl TokenSchema {
    pub fn new(one: &[&str], zero: &[&str], missing: &[&str]) -> Result<Self, DatasetError> {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let schema = Self {
            one: set(one),
            zero: set(zero),
            missing: set(missing),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for t in &self.one {
            if self.zero.contains(t) || self.missing.contains(t) {
                return Err(DatasetError::OverlappingSchema(t.clone()));
            }
        }
        if let Some(t) = self.zero.intersection(&self.missing).next() {
            return Err(DatasetError::OverlappingSchema(t.clone()));
        }
        Ok(())
    }

    pub fn parse(&self, token: &str) -> Option<Cell> {
        let t = token.trim();
        if self.one.contains(t) {
            Some(Cell::One)
        } else if self.zero.contains(t) {
            Some(Cell::Zero)
        } else if self.missing.contains(t) {
            Some(Cell::Missing)
        } else {
            None
        }
    }
}

/// Tab if the header line contains a tab, comma otherwise.
pub fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Loads a reads file. A header whose first field is empty marks a leading
/// row-identifier column, which is skipped.
pub fn load_reads(path: impl AsRef<Path>, schema: &TokenSchema) -> Result<EventMatrix, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_reads(file, schema).map(|m| m.with_provenance(path.display().to_string()))
}

pub fn read_reads(reader: impl Read, schema: &TokenSchema) -> Result<EventMatrix, DatasetError> {
    schema.validate()?;
    let mut buffered = BufReader::new(reader);
    let mut header = String::new();
    buffered
        .read_line(&mut header)
        .map_err(|source| DatasetError::Io {
            path: "<input>".into(),
            source,
        })?;
    let header = header.trim_end_matches(['\n', '\r']).to_string();
    if header.is_empty() {
        return Err(DatasetError::EmptyMatrix);
    }
    let delimiter = detect_delimiter(&header);
    let mut header_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .from_reader(header.as_bytes());
    let fields: Vec<String> = match header_reader.records().next() {
        Some(rec) => rec?.iter().map(|s| s.trim().to_string()).collect(),
        None => return Err(DatasetError::EmptyMatrix),
    };
    let skip_index = fields.len() > 1 && fields[0].is_empty();
    let columns: Vec<String> = if skip_index {
        fields[1..].to_vec()
    } else {
        fields
    };
    let n_cols = columns.len();
    let expected = n_cols + usize::from(skip_index);

    let mut body = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(buffered);
    let mut cells = Vec::new();
    for (r, rec) in body.records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) && n_cols > 1 {
            continue;
        }
        if rec.len() != expected {
            return Err(DatasetError::RaggedRow {
                row: r,
                found: rec.len(),
                expected,
            });
        }
        for (c, token) in rec.iter().skip(usize::from(skip_index)).enumerate() {
            let cell = schema.parse(token).ok_or_else(|| DatasetError::UnknownToken {
                token: token.to_string(),
                row: r,
                column: columns[c].clone(),
            })?;
            cells.push(cell);
        }
    }
    EventMatrix::from_cells(columns, cells, "")
}

/// Writes the matrix with canonical tokens `True`/`False`/`NaN`.
pub fn write_reads(m: &EventMatrix, writer: impl Write, delimiter: u8) -> Result<(), DatasetError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    w.write_record(m.columns())?;
    for row in m.rows() {
        w.write_record(row.iter().map(|c| match c {
            Cell::One => "True",
            Cell::Zero => "False",
            Cell::Missing => "NaN",
        }))?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn err_maps_to_zero_and_nan_to_missing() {
        let m = read_reads("a,b,c\nTrue,Err,NaN\n".as_bytes(), &TokenSchema::default()).unwrap();
        assert_eq!(m.row(0), &[Cell::One, Cell::Zero, Cell::Missing]);
    }

    #[test]
    fn empty_data_section_is_rejected() {
        let err = read_reads("a,b\n".as_bytes(), &TokenSchema::default()).unwrap_err();
        assert_eq!(err.to_string(), "no rows");
    }

    #[test]
    fn custom_schema_relabels_tokens() {
        let schema = TokenSchema::new(&["1"], &["0"], &["?"]).unwrap();
        let m = read_reads("x\ty\n1\t?\n0\t1\n".as_bytes(), &schema).unwrap();
        assert_eq!(m.row(0), &[Cell::One, Cell::Missing]);
        assert_eq!(m.row(1), &[Cell::Zero, Cell::One]);
    }

    #[test]
    fn unknown_token_reports_position() {
        let err = read_reads("a,b\nTrue,False\nTrue,maybe\n".as_bytes(), &TokenSchema::default())
            .unwrap_err();
        match err {
            DatasetError::UnknownToken { token, row, column } => {
                assert_eq!(token, "maybe");
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_header_is_rejected() {
        let err = read_reads("a,a\nTrue,False\n".as_bytes(), &TokenSchema::default()).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateLabel(_)));
    }

    #[test]
    fn leading_index_column_is_skipped() {
        let text = "\ted1\ted2\n1582\tNaN\tTrue\n1095\tFalse\tErr\n";
        let m = read_reads(text.as_bytes(), &TokenSchema::default()).unwrap();
        assert_eq!(m.columns(), &["ed1".to_string(), "ed2".to_string()]);
        assert_eq!(m.row(1), &[Cell::Zero, Cell::Zero]);
    }

    #[test]
    fn overlapping_schema_is_rejected() {
        assert!(TokenSchema::new(&["1"], &["1"], &[]).is_err());
    }

    #[test]
    fn canonical_text_round_trips_bit_exactly() {
        let text = "a,b,c\nTrue,False,NaN\nNaN,NaN,True\n";
        let m = read_reads(text.as_bytes(), &TokenSchema::default()).unwrap();
        let mut out = Vec::new();
        write_reads(&m, &mut out, b',').unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
