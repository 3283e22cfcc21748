use std::collections::BTreeSet;
use std::path::Path;

use super::{ExogColumn, ExogKind, Frequency, LongFrame, Record, RoleMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',' }
    }
}

fn is_missing(raw: &str) -> bool {
    matches!(raw.trim(), "" | "NA" | "NaN" | "nan" | "null" | "NULL")
}

fn parse_real(raw: &str, column: &str, line: u64) -> Result<f64> {
    if is_missing(raw) {
        return Ok(f64::NAN);
    }
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: `{raw}` is not a number"),
    })
}

/// Reads a long-format CSV with a header row.
///
/// Missing target or real-valued cells (`""`, `NA`, `NaN`) are loaded as NaN
/// so that [`super::validate_frame`] can report them; they are never imputed.
pub fn load_long_csv(
    path: impl AsRef<Path>,
    roles: &RoleMap,
    frequency: Frequency,
    options: CsvOptions,
) -> Result<LongFrame> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = position(&roles.id)?;
    let ts_col = position(&roles.datetime)?;
    let target_col = position(&roles.target)?;
    let exog_cols = roles
        .exogenous
        .iter()
        .map(|e| position(&e.name))
        .collect::<Result<Vec<_>>>()?;

    // categorical cells are kept raw until the vocabulary is known
    let mut raw_rows: Vec<(Record, Vec<String>)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |i: usize| row.get(i).unwrap_or("");
        let series_id = cell(id_col).trim().to_string();
        if series_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("empty series id in column `{}`", roles.id),
            });
        }
        let timestamp = frequency
            .parse_timestamp(cell(ts_col))
            .map_err(|message| Error::Parse { line, message })?;
        let target = parse_real(cell(target_col), &roles.target, line)?;
        let mut exog = Vec::with_capacity(exog_cols.len());
        let mut cats = Vec::new();
        for (role, &col) in roles.exogenous.iter().zip(&exog_cols) {
            match role.kind {
                ExogKind::Real => exog.push(parse_real(cell(col), &role.name, line)?),
                ExogKind::Categorical => {
                    exog.push(f64::NAN);
                    cats.push(cell(col).trim().to_string());
                }
            }
        }
        raw_rows.push((
            Record {
                series_id,
                timestamp,
                target,
                exog,
            },
            cats,
        ));
    }
    if raw_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let cat_positions: Vec<usize> = roles
        .exogenous
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == ExogKind::Categorical)
        .map(|(i, _)| i)
        .collect();
    let mut vocabularies: Vec<Vec<String>> = Vec::with_capacity(cat_positions.len());
    for k in 0..cat_positions.len() {
        let vocab: BTreeSet<&str> = raw_rows
            .iter()
            .map(|(_, cats)| cats[k].as_str())
            .filter(|v| !is_missing(v))
            .collect();
        vocabularies.push(vocab.into_iter().map(str::to_string).collect());
    }
    let mut records = Vec::with_capacity(raw_rows.len());
    for (mut rec, cats) in raw_rows {
        for (k, &pos) in cat_positions.iter().enumerate() {
            if let Ok(code) = vocabularies[k].binary_search(&cats[k]) {
                rec.exog[pos] = code as f64;
            }
        }
        records.push(rec);
    }

    let mut vocab_iter = vocabularies.into_iter();
    let exogenous = roles
        .exogenous
        .iter()
        .map(|r| ExogColumn {
            name: r.name.clone(),
            kind: r.kind,
            vocabulary: match r.kind {
                ExogKind::Categorical => vocab_iter.next().unwrap_or_default(),
                ExogKind::Real => Vec::new(),
            },
        })
        .collect();
    LongFrame::from_records(frequency, exogenous, records)
}

/// Writes a frame in the long layout [`load_long_csv`] reads, with the
/// column names of `roles`. Categorical values are written as their labels.
pub fn write_long_csv(frame: &LongFrame, roles: &RoleMap, path: impl AsRef<Path>, options: CsvOptions) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut header = vec![roles.id.clone(), roles.datetime.clone(), roles.target.clone()];
    header.extend(frame.exogenous().iter().map(|c| c.name.clone()));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let freq = frame.frequency();
    let cell = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    for s in frame.series() {
        for i in 0..s.len() {
            let mut row = vec![s.id.clone(), freq.format_tick(s.timestamps[i]), cell(s.values[i])];
            for (col, values) in frame.exogenous().iter().zip(&s.exog) {
                let v = values[i];
                row.push(match col.kind {
                    ExogKind::Categorical if !v.is_nan() => col.vocabulary.get(v as usize).cloned().unwrap_or_default(),
                    _ => cell(v),
                });
            }
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
