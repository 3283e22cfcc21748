use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One experiment cell: its setting for every factor and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCell {
    pub factors: BTreeMap<String, String>,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub factor: String,
    pub value: String,
    pub mean_rank: f64,
    pub median_mae: f64,
    /// Comparison groups the value took part in.
    pub groups: usize,
    /// Cells with this value.
    pub cells: usize,
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Median of a non-empty slice (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Cells grouped by every factor except `factor`, with their in-group
/// ranks. Groups are keyed by the other factors' settings.
pub fn comparison_groups<'a>(cells: &'a [RankCell], factor: &str) -> Vec<Vec<(&'a RankCell, f64)>> {
    let mut groups: BTreeMap<Vec<(&str, &str)>, Vec<&RankCell>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.mae.is_finite() && c.factors.contains_key(factor)) {
        let key = c
            .factors
            .iter()
            .filter(|(k, _)| k.as_str() != factor)
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        groups.entry(key).or_default().push(c);
    }
    groups
        .into_values()
        .map(|g| {
            let maes: Vec<f64> = g.iter().map(|c| c.mae).collect();
            g.into_iter().zip(average_ranks(&maes)).collect()
        })
        .collect()
}

fn build_rows(cells: &[RankCell], factor: &str, groups: &[Vec<(&RankCell, f64)>]) -> Vec<RankRow> {
    let mut ranks: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for g in groups {
        for (c, r) in g {
            ranks.entry(c.factors[factor].as_str()).or_default().push(*r);
        }
    }
    let mut maes: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.mae.is_finite()) {
        if let Some(v) = c.factors.get(factor) {
            maes.entry(v.as_str()).or_default().push(c.mae);
        }
    }
    let mut rows: Vec<RankRow> = maes
        .iter()
        .map(|(value, m)| {
            let r = ranks.get(value).cloned().unwrap_or_default();
            RankRow {
                factor: factor.to_string(),
                value: value.to_string(),
                mean_rank: if r.is_empty() {
                    1.0
                } else {
                    r.iter().sum::<f64>() / r.len() as f64
                },
                median_mae: median(m),
                groups: r.len(),
                cells: m.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.mean_rank.total_cmp(&b.mean_rank).then_with(|| a.value.cmp(&b.value)));
    rows
}

/// Mean rank and median MAE per value of `factor`. Every comparison group
/// (cells equal in all other factors) must hold at least two cells.
pub fn rank_table(cells: &[RankCell], factor: &str) -> Result<Vec<RankRow>> {
    let groups = comparison_groups(cells, factor);
    if groups.is_empty() {
        return Err(Error::EmptyReport);
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        let key: Vec<String> = g[0]
            .0
            .factors
            .iter()
            .filter(|(k, _)| k.as_str() != factor)
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        return Err(Error::DegenerateGroup(key.join(",")));
    }
    Ok(build_rows(cells, factor, &groups))
}

/// Like [`rank_table`], but singleton groups are left out of the ranks.
/// With no comparable group at all every value gets rank 1.
pub fn rank_table_lenient(cells: &[RankCell], factor: &str) -> Result<Vec<RankRow>> {
    let groups: Vec<_> = comparison_groups(cells, factor)
        .into_iter()
        .filter(|g| g.len() >= 2)
        .collect();
    let rows = build_rows(cells, factor, &groups);
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    Ok(rows)
}
