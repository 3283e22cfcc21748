use super::{Mode, StrategyKind, StrategySpec};
use crate::data::{check_alignment, LongFrame};
use crate::error::{Error, Result};
use crate::transforms::{
    last_known_normalize_with, ColumnMeta, ColumnRole, FeatureMatrix, FeatureSchema, HorizonEncoding,
    PipelineState, TargetMeta,
};

/// Training matrices for one strategy: one per model (several for direct).
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyDataset {
    /// Layout of the lag part of every row (without the horizon index).
    pub schema: FeatureSchema,
    pub segments: Vec<FeatureMatrix>,
}

pub(crate) fn channel_names(frame: &LongFrame, mode: Mode) -> Vec<String> {
    if mode.mixes_channels() {
        frame.series_ids().into_iter().map(str::to_string).collect()
    } else {
        vec!["y".to_string()]
    }
}

pub(crate) fn ensure_mode_fits(frame: &LongFrame, mode: Mode) -> Result<()> {
    if mode.requires_alignment() && !check_alignment(frame) {
        return Err(Error::NotAligned);
    }
    Ok(())
}

/// Rows of `width` targets per channel over an already transformed frame,
/// before any row normalization.
pub(crate) fn base_matrix(
    transformed: &LongFrame,
    schema: &FeatureSchema,
    mode: Mode,
    width: usize,
    dropped: usize,
) -> Result<FeatureMatrix> {
    let history = schema.history;
    let targets = schema.target_meta(0, width);
    let mut m = FeatureMatrix::empty(schema.columns(), targets, transformed.frequency().step);
    let too_short = |id: &str, len: usize| Error::SeriesTooShort {
        series: id.to_string(),
        length: len + dropped,
        required: history + width + dropped,
    };
    if mode.mixes_channels() {
        let group: Vec<_> = transformed.series().iter().collect();
        if let Some(s) = group.iter().find(|s| s.len() < history + width) {
            return Err(too_short(&s.id, s.len()));
        }
        schema.build_rows(&group, None, None, 0, width, &mut m)?;
        return Ok(m);
    }
    let vocab = schema.id.as_ref().map(|(_, v)| v);
    for s in transformed.series() {
        if s.len() < history + width {
            log::warn!(
                "series `{}` is too short for history {history} + {width} targets; skipped",
                s.id
            );
            continue;
        }
        let id_index = vocab.map(|v| v.index(&s.id)).transpose()?;
        schema.build_rows(&[s], id_index, Some(&s.id), 0, width, &mut m)?;
    }
    if m.n_rows() == 0 {
        let s = transformed
            .series()
            .iter()
            .min_by_key(|s| s.len())
            .ok_or(Error::EmptyDataset)?;
        return Err(too_short(&s.id, s.len()));
    }
    Ok(m)
}

/// Applies the pipeline's row normalization, if any.
pub(crate) fn normalize_rows(m: FeatureMatrix, state: &PipelineState) -> Result<FeatureMatrix> {
    match state.last_known() {
        Some((mode, apply_to)) => last_known_normalize_with(&m, mode, apply_to),
        None => Ok(m),
    }
}

/// Splits an `H`-wide target block into `H / mh` segments. All segments
/// keep the same rows and features.
pub(crate) fn split_segments(m: &FeatureMatrix, horizon: usize, mh: usize) -> Vec<FeatureMatrix> {
    let n_channels = m.targets.len() / horizon;
    (0..horizon / mh)
        .map(|k| {
            let cols: Vec<usize> = (0..n_channels)
                .flat_map(|c| (c * horizon + k * mh)..(c * horizon + (k + 1) * mh))
                .collect();
            FeatureMatrix {
                targets: cols.iter().map(|&j| m.targets[j]).collect(),
                y: m.y.select_cols(&cols),
                ..m.clone()
            }
        })
        .collect()
}

/// Horizon-index columns appended to every flat-wide row.
pub(crate) fn horizon_columns(encoding: HorizonEncoding, horizon: usize) -> Vec<ColumnMeta> {
    let meta = |name: String| ColumnMeta {
        name,
        role: ColumnRole::HorizonIndex,
        channel: None,
        lag: None,
    };
    match encoding {
        HorizonEncoding::Raw => vec![meta("horizon".into())],
        HorizonEncoding::Onehot => (1..=horizon).map(|k| meta(format!("horizon={k}"))).collect(),
    }
}

pub(crate) fn encode_horizon(encoding: HorizonEncoding, horizon: usize, k: usize, out: &mut Vec<f64>) {
    match encoding {
        HorizonEncoding::Raw => out.push(k as f64),
        HorizonEncoding::Onehot => out.extend((1..=horizon).map(|j| if j == k { 1.0 } else { 0.0 })),
    }
}

/// Flattens an `H`-wide matrix into `N * H` rows with one target per
/// channel and the 1-based horizon index as an extra feature. Rows of the
/// same origin are consecutive, in horizon order.
pub fn flatten_horizon(m: &FeatureMatrix, encoding: HorizonEncoding, horizon: usize) -> FeatureMatrix {
    let n_channels = m.targets.len() / horizon;
    let mut columns = m.columns.clone();
    columns.extend(horizon_columns(encoding, horizon));
    let targets = (0..n_channels)
        .map(|channel| TargetMeta { channel, step: None })
        .collect();
    let mut out = FeatureMatrix::empty(columns, targets, m.step);
    out.normalized = m.normalized;
    let mut row = Vec::with_capacity(out.columns.len());
    let mut y = Vec::with_capacity(n_channels);
    for r in 0..m.n_rows() {
        for k in 1..=horizon {
            row.clear();
            row.extend_from_slice(m.x.row(r));
            encode_horizon(encoding, horizon, k, &mut row);
            y.clear();
            y.extend((0..n_channels).map(|c| m.y.get(r, c * horizon + k - 1)));
            let mut anchor = m.anchors[r].clone();
            anchor.horizon = Some(k);
            out.push(&row, &y, anchor);
        }
    }
    out
}

/// Shapes a normalized base matrix for the strategy.
pub(crate) fn shape(base: FeatureMatrix, strategy: &StrategySpec) -> Vec<FeatureMatrix> {
    match strategy.kind {
        StrategyKind::Recursive | StrategyKind::Mimo => vec![base],
        StrategyKind::Direct => split_segments(&base, strategy.horizon, strategy.model_horizon),
        StrategyKind::FlatWideMimo => vec![flatten_horizon(&base, strategy.horizon_encoding, strategy.horizon)],
    }
}

/// Training matrices for `strategy` over `frame`, transformed with a fitted
/// pipeline.
pub fn build_strategy_dataset(
    frame: &LongFrame,
    state: &PipelineState,
    strategy: &StrategySpec,
    mode: Mode,
) -> Result<StrategyDataset> {
    strategy.validate()?;
    ensure_mode_fits(frame, mode)?;
    let (transformed, _) = state.transform(frame)?;
    let schema = state.schema(channel_names(frame, mode), !mode.mixes_channels());
    let base = base_matrix(&transformed, &schema, mode, strategy.row_width(), state.dropped_points())?;
    let base = normalize_rows(base, state)?;
    Ok(StrategyDataset {
        schema,
        segments: shape(base, strategy),
    })
}
