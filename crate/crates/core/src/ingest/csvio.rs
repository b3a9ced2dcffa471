use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::schema::DatasetSchema;
use crate::error::{Error, Result};
use crate::record::BehaviorRecord;

/// A row that was dropped or kept with a warning. Rows are 1-based data
/// rows (the header is row 0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub row: usize,
    pub kept: bool,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct ReadOutcome {
    pub records: Vec<BehaviorRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn read_csv(path: &Path, schema: &DatasetSchema) -> Result<ReadOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, schema)
}

/// Reads RFC 4180 CSV with a header row. Columns outside the schema are
/// ignored; rows whose transforms fail are dropped with a diagnostic.
pub fn read_csv_from(reader: impl Read, schema: &DatasetSchema) -> Result<ReadOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("csv header: {e}")))?
        .clone();
    let mut positions = Vec::new();
    for col in schema.columns() {
        let pos = headers
            .iter()
            .position(|h| h.trim() == col)
            .ok_or_else(|| Error::SchemaMismatch(format!("header lacks column {col:?}")))?;
        positions.push((col.to_string(), pos));
    }

    let mut out = ReadOutcome::default();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.diagnostics.push(Diagnostic {
                    row: row_no,
                    kept: false,
                    message: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let record_id = match &schema.id_column {
            Some(id) => {
                let pos = positions.iter().find(|(c, _)| c == id).map(|p| p.1);
                pos.and_then(|p| row.get(p))
                    .map(|v| v.trim().to_string())
                    .unwrap_or_default()
            }
            None => format!("row-{row_no}"),
        };
        if record_id.is_empty() {
            out.diagnostics.push(Diagnostic {
                row: row_no,
                kept: false,
                message: "empty record id".into(),
            });
            continue;
        }
        let mut record = BehaviorRecord::new(record_id);
        for (col, pos) in &positions {
            let v = row.get(*pos).unwrap_or("").trim();
            if Some(col) == schema.label_column.as_ref() {
                if !v.is_empty() {
                    record.label = Some(v.to_string());
                }
            } else if Some(col) != schema.id_column.as_ref() && !v.is_empty() {
                record.values.insert(col.clone(), v.to_string());
            }
        }
        match schema.tokenize(&record) {
            Ok(t) => {
                if t.negative_interval {
                    out.diagnostics.push(Diagnostic {
                        row: row_no,
                        kept: true,
                        message: "negative date difference".into(),
                    });
                }
                out.records.push(record);
            }
            Err(e) => out.diagnostics.push(Diagnostic {
                row: row_no,
                kept: false,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Writes records with the schema's column layout.
pub fn write_csv(writer: impl Write, schema: &DatasetSchema, records: &[BehaviorRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let cols = schema.columns();
    let csv_err = |e: csv::Error| Error::Parse(format!("csv write: {e}"));
    w.write_record(&cols).map_err(csv_err)?;
    for r in records {
        let row: Vec<&str> = cols
            .iter()
            .map(|c| {
                if Some(*c) == schema.id_column.as_deref() {
                    r.record_id.as_str()
                } else if Some(*c) == schema.label_column.as_deref() {
                    r.label.as_deref().unwrap_or("")
                } else {
                    r.values.get(*c).map(String::as_str).unwrap_or("")
                }
            })
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(format!("csv flush: {e}")))?;
    Ok(())
}

pub fn write_csv_file(path: &Path, schema: &DatasetSchema, records: &[BehaviorRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), schema, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "DR_NO,Date Rptd,DATE OCC,TIME OCC,AREA,Rpt Dist No,Part 1-2,Crm Cd,Vict Age,Vict Sex,Vict Descent,Premis Cd,Weapon Used Cd,Status,Cross Street";

    fn crime() -> DatasetSchema {
        DatasetSchema::builtin("crime").unwrap()
    }

    #[test]
    fn reads_valid_rows() {
        let data = format!(
            "{HEADER}\n\
             1,01/08/2020 12:00:00 AM,01/08/2020 12:00:00 AM,2230,3,377,1,624,36,F,B,501,400,AA,\n\
             2,01/09/2020 12:00:00 AM,01/01/2020 12:00:00 AM,145,3,377,2,624,0,M,W,101,,IC,\"MAIN, ST\"\n\
             3,01/09/2020 12:00:00 AM,01/01/2020 12:00:00 AM,0,1,101,1,510,20,X,H,101,,IC,\n"
        );
        let out = read_csv_from(data.as_bytes(), &crime()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.diagnostics.is_empty());
        assert_eq!(out.records[0].label.as_deref(), Some("624"));
        assert_eq!(out.records[1].get("Cross Street"), Some("MAIN, ST"));
        assert_eq!(out.records[1].get("Weapon Used Cd"), None);
        assert_eq!(
            out.records.iter().map(|r| r.record_id.as_str()).collect::<Vec<_>>(),
            ["1", "2", "3"]
        );
    }

    #[test]
    fn missing_header_column() {
        let data = HEADER.replace(",Vict Sex", "") + "\n";
        let err = read_csv_from(data.as_bytes(), &crime()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(ref m) if m.contains("Vict Sex")));
    }

    #[test]
    fn bad_date_row_is_dropped() {
        let data = format!(
            "{HEADER}\n\
             1,99/99/2020 12:00:00 AM,01/08/2020 12:00:00 AM,2230,3,377,1,624,36,F,B,501,400,AA,\n\
             2,01/08/2020 12:00:00 AM,01/08/2020 12:00:00 AM,2230,3,377,1,624,36,F,B,501,400,AA,\n"
        );
        let out = read_csv_from(data.as_bytes(), &crime()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].row, 1);
        assert!(!out.diagnostics[0].kept);
    }

    #[test]
    fn negative_interval_is_kept_and_flagged() {
        let data = format!(
            "{HEADER}\n1,01/01/2020 12:00:00 AM,01/08/2020 12:00:00 AM,2230,3,377,1,624,36,F,B,501,400,AA,\n"
        );
        let out = read_csv_from(data.as_bytes(), &crime()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.diagnostics[0].kept);
    }

    #[test]
    fn write_then_read() {
        let data = format!(
            "{HEADER}\n1,01/08/2020 12:00:00 AM,01/08/2020 12:00:00 AM,2230,3,377,1,624,36,F,B,501,400,AA,\"A, B\"\n"
        );
        let schema = crime();
        let out = read_csv_from(data.as_bytes(), &schema).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &schema, &out.records).unwrap();
        let again = read_csv_from(buf.as_slice(), &schema).unwrap();
        assert_eq!(again.records, out.records);
    }

    #[test]
    fn unreadable_file() {
        let err = read_csv(Path::new("/nonexistent/x.csv"), &crime()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
