//! Rank tables and leaderboards over completed sweep cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::validation::{rank_table_lenient, RankCell, RankRow};

pub const DEFAULT_TOP_K: usize = 10;

/// Factors ranked inside every scope; the overall scope adds `model`.
pub const FACTORS: [&str; 5] = ["strategy", "mode", "preprocessing", "datetime_features", "id_features"];

/// Scores of one completed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub cell_id: String,
    pub model: String,
    pub strategy: String,
    pub mode: String,
    pub preprocessing: String,
    pub datetime_features: bool,
    pub id_features: bool,
    /// Mean validation MAE over folds; absent without cross-validation.
    pub val_mae: Option<f64>,
    pub test_mae: f64,
    pub test_mse: f64,
}

impl ReportCell {
    fn rank_cell(&self, with_model: bool) -> RankCell {
        let mut factors = BTreeMap::from([
            ("strategy".to_string(), self.strategy.clone()),
            ("mode".to_string(), self.mode.clone()),
            ("preprocessing".to_string(), self.preprocessing.clone()),
            ("datetime_features".to_string(), self.datetime_features.to_string()),
            ("id_features".to_string(), self.id_features.to_string()),
        ]);
        if with_model {
            factors.insert("model".into(), self.model.clone());
        }
        RankCell {
            factors,
            mae: self.test_mae,
        }
    }
}

/// Rank rows of every factor within one scope (`overall` or a model label).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScope {
    pub scope: String,
    pub rows: Vec<RankRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderEntry {
    pub cell_id: String,
    pub model: String,
    pub strategy: String,
    pub mae: f64,
}

/// Row `rank` of both leaderboards: best by test MAE on the left, best by
/// validation MAE on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderRow {
    pub rank: usize,
    pub by_test: LeaderEntry,
    pub by_val: Option<LeaderEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub cells: usize,
    pub rank_tables: Vec<RankScope>,
    pub leaderboard: Vec<LeaderRow>,
}

/// Mean rank and median test MAE per factor value, ranked within groups of
/// cells that agree on every other factor.
pub fn rank_tables(cells: &[ReportCell]) -> Result<Vec<RankScope>> {
    if cells.is_empty() {
        return Err(Error::EmptyReport);
    }
    let scope = |name: String, rcells: Vec<RankCell>, with_model: bool| -> Result<RankScope> {
        let mut rows = Vec::new();
        if with_model {
            rows.extend(rank_table_lenient(&rcells, "model")?);
        }
        for f in FACTORS {
            rows.extend(rank_table_lenient(&rcells, f)?);
        }
        Ok(RankScope { scope: name, rows })
    };
    let mut out = vec![scope("overall".into(), cells.iter().map(|c| c.rank_cell(true)).collect(), true)?];
    let models: BTreeSet<&str> = cells.iter().map(|c| c.model.as_str()).collect();
    for m in models {
        let sub = cells.iter().filter(|c| c.model == m).map(|c| c.rank_cell(false)).collect();
        out.push(scope(m.to_string(), sub, false)?);
    }
    Ok(out)
}

fn entry(c: &ReportCell, mae: f64) -> LeaderEntry {
    LeaderEntry {
        cell_id: c.cell_id.clone(),
        model: c.model.clone(),
        strategy: c.strategy.clone(),
        mae,
    }
}

/// Top `k` cells (clamped to the number of cells) by test MAE and by
/// validation MAE. Ties fall back to the other MAE, then the cell id.
pub fn leaderboard(cells: &[ReportCell], k: usize) -> Result<Vec<LeaderRow>> {
    if cells.is_empty() {
        return Err(Error::EmptyReport);
    }
    let val = |c: &ReportCell| c.val_mae.unwrap_or(f64::INFINITY);
    let mut by_test: Vec<&ReportCell> = cells.iter().collect();
    by_test.sort_by(|a, b| {
        a.test_mae
            .total_cmp(&b.test_mae)
            .then(val(a).total_cmp(&val(b)))
            .then_with(|| a.cell_id.cmp(&b.cell_id))
    });
    let mut by_val: Vec<&ReportCell> = cells.iter().filter(|c| c.val_mae.is_some()).collect();
    by_val.sort_by(|a, b| {
        val(a)
            .total_cmp(&val(b))
            .then(a.test_mae.total_cmp(&b.test_mae))
            .then_with(|| a.cell_id.cmp(&b.cell_id))
    });
    Ok(by_test
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, c)| LeaderRow {
            rank: i + 1,
            by_test: entry(c, c.test_mae),
            by_val: by_val.get(i).map(|v| entry(v, val(v))),
        })
        .collect())
}

pub fn summarize(cells: &[ReportCell], config_hash: &str, seed: u64, top_k: usize) -> Result<Summary> {
    Ok(Summary {
        config_hash: config_hash.to_string(),
        seed,
        cells: cells.len(),
        rank_tables: rank_tables(cells)?,
        leaderboard: leaderboard(cells, top_k)?,
    })
}

pub const RANK_COLUMNS: [&str; 7] = ["scope", "factor", "value", "mean_rank", "median_mae", "groups", "cells"];
pub const LEADERBOARD_COLUMNS: [&str; 9] = [
    "rank",
    "model",
    "strategy",
    "MAE(test)",
    "model",
    "strategy",
    "MAE(val)",
    "test_cell_id",
    "val_cell_id",
];

fn rank_records(s: &Summary) -> Vec<Vec<String>> {
    s.rank_tables
        .iter()
        .flat_map(|t| {
            t.rows.iter().map(|r| {
                vec![
                    t.scope.clone(),
                    r.factor.clone(),
                    r.value.clone(),
                    r.mean_rank.to_string(),
                    r.median_mae.to_string(),
                    r.groups.to_string(),
                    r.cells.to_string(),
                ]
            })
        })
        .collect()
}

fn leader_records(s: &Summary) -> Vec<Vec<String>> {
    s.leaderboard
        .iter()
        .map(|r| {
            let (vm, vs, vmae, vid) = match &r.by_val {
                Some(v) => (v.model.clone(), v.strategy.clone(), v.mae.to_string(), v.cell_id.clone()),
                None => Default::default(),
            };
            vec![
                r.rank.to_string(),
                r.by_test.model.clone(),
                r.by_test.strategy.clone(),
                r.by_test.mae.to_string(),
                vm,
                vs,
                vmae,
                r.by_test.cell_id.clone(),
                vid,
            ]
        })
        .collect()
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_rank_tables_csv(s: &Summary, path: &Path) -> Result<()> {
    write_file(path, &csv_string(&RANK_COLUMNS, &rank_records(s)))
}

pub fn write_leaderboard_csv(s: &Summary, path: &Path) -> Result<()> {
    write_file(path, &csv_string(&LEADERBOARD_COLUMNS, &leader_records(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Rank tables followed by the leaderboard. The CSV form is two CSV blocks
/// separated by a blank line; both forms print numbers identically.
pub fn render(s: &Summary, format: Format) -> String {
    let ranks = rank_records(s);
    let leaders: Vec<Vec<String>> = leader_records(s).into_iter().map(|mut r| {
        r.truncate(7);
        r
    }).collect();
    match format {
        Format::Csv => {
            let full = leader_records(s);
            format!(
                "{}\n{}",
                csv_string(&RANK_COLUMNS, &ranks),
                csv_string(&LEADERBOARD_COLUMNS, &full)
            )
        }
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "config {} seed {} ({} cells)\n", s.config_hash, s.seed, s.cells);
            for t in &s.rank_tables {
                let rows: Vec<Vec<String>> = ranks
                    .iter()
                    .filter(|r| r[0] == t.scope)
                    .map(|r| r[1..].to_vec())
                    .collect();
                let _ = writeln!(out, "Rank table: {}", t.scope);
                out.push_str(&aligned(&RANK_COLUMNS[1..], &rows));
                out.push('\n');
            }
            let _ = writeln!(out, "Best {} model-strategy combinations", s.leaderboard.len());
            let rows: Vec<Vec<String>> = leaders
                .into_iter()
                .map(|r| r.into_iter().map(|c| if c.is_empty() { "-".into() } else { c }).collect())
                .collect();
            out.push_str(&aligned(&LEADERBOARD_COLUMNS[..7], &rows));
            out
        }
    }
}

#[derive(Debug, Deserialize)]
struct MetricsRow {
    cell_id: String,
    model: String,
    strategy: String,
    mode: String,
    preprocessing: String,
    datetime_features: bool,
    id_features: bool,
    split: String,
    #[serde(rename = "MAE")]
    mae: f64,
    #[serde(rename = "MSE")]
    mse: f64,
}

/// Rebuilds report cells from a `metrics.csv`.
pub fn load_metrics(path: impl AsRef<Path>) -> Result<Vec<ReportCell>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut cells: BTreeMap<String, (ReportCell, Vec<f64>, bool)> = BTreeMap::new();
    for (i, row) in reader.deserialize::<MetricsRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: i as u64 + 2,
            message: e.to_string(),
        })?;
        let entry = cells.entry(row.cell_id.clone()).or_insert_with(|| {
            (
                ReportCell {
                    cell_id: row.cell_id.clone(),
                    model: row.model.clone(),
                    strategy: row.strategy.clone(),
                    mode: row.mode.clone(),
                    preprocessing: row.preprocessing.clone(),
                    datetime_features: row.datetime_features,
                    id_features: row.id_features,
                    val_mae: None,
                    test_mae: f64::NAN,
                    test_mse: f64::NAN,
                },
                Vec::new(),
                false,
            )
        });
        match row.split.as_str() {
            "val" => entry.1.push(row.mae),
            "test" => {
                entry.0.test_mae = row.mae;
                entry.0.test_mse = row.mse;
                entry.2 = true;
            }
            other => {
                return Err(Error::Parse {
                    line: i as u64 + 2,
                    message: format!("unknown split `{other}`"),
                })
            }
        }
    }
    Ok(cells
        .into_values()
        .filter(|(_, _, has_test)| *has_test)
        .map(|(mut c, vals, _)| {
            if !vals.is_empty() {
                c.val_mae = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
            c
        })
        .collect())
}
