use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stratcast::data::{Frequency, LongFrame};
use stratcast::transforms::{
    difference_inverse, difference_normalize, last_known_denormalize, last_known_normalize, make_lag_matrix,
    ApplyTo, NormMode, PipelineConfig, PipelineState, ScalerParams, TransformSpec,
};

fn frame(series: Vec<Vec<f64>>) -> LongFrame {
    LongFrame::from_values(
        Frequency::ordinal(1),
        series.into_iter().enumerate().map(|(i, v)| (format!("s{i}"), v)),
    )
    .unwrap()
}

fn panel(min_len: usize, positive: bool) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let value = if positive { 0.1..1e3 } else { -1e3..1e3 };
    prop::collection::vec(prop::collection::vec(value, min_len..min_len + 40), 1..4)
}

fn assert_frames_close(a: &LongFrame, b: &LongFrame, tol: f64) {
    for (s, t) in a.series().iter().zip(b.series()) {
        assert_eq!(s.timestamps, t.timestamps);
        for (x, y) in s.values.iter().zip(&t.values) {
            assert_abs_diff_eq!(x, y, epsilon = tol * (1.0 + x.abs()));
        }
    }
}

proptest! {
    #[test]
    fn scaler_round_trip(series in panel(3, false), pooled in any::<bool>()) {
        let f = frame(series);
        let p = ScalerParams::fit(&f, ApplyTo::Target, pooled);
        assert_frames_close(&f, &p.invert(&p.apply(&f).unwrap()).unwrap(), 1e-9);
    }

    #[test]
    fn scaled_training_data_is_standardized(series in panel(5, false)) {
        let f = frame(series);
        let p = ScalerParams::fit(&f, ApplyTo::Target, false);
        for s in p.apply(&f).unwrap().series() {
            let n = s.values.len() as f64;
            let mean = s.values.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn difference_round_trip(series in panel(2, true), ratio in any::<bool>()) {
        let mode = if ratio { NormMode::Ratio } else { NormMode::Delta };
        let f = frame(series);
        let (d, anchors) = difference_normalize(&f, mode, ApplyTo::Target).unwrap();
        for (s, t) in f.series().iter().zip(d.series()) {
            prop_assert_eq!(t.values.len(), s.values.len() - 1);
        }
        assert_frames_close(&f, &difference_inverse(&d, &anchors, mode, ApplyTo::Target).unwrap(), 1e-9);
    }

    #[test]
    fn last_known_round_trip(series in panel(12, true), ratio in any::<bool>(), history in 1usize..6, mh in 1usize..5) {
        let mode = if ratio { NormMode::Ratio } else { NormMode::Delta };
        let m = make_lag_matrix(&frame(series), history, mh).unwrap();
        let n = last_known_normalize(&m, mode).unwrap();
        let lag0 = m.lag0_column(0).unwrap();
        for r in 0..n.n_rows() {
            let expected = if ratio { 1.0 } else { 0.0 };
            prop_assert!((n.x.get(r, lag0) - expected).abs() < 1e-12);
        }
        let back = last_known_denormalize(&n).unwrap();
        for (a, b) in m.x.as_slice().iter().zip(back.x.as_slice()).chain(m.y.as_slice().iter().zip(back.y.as_slice())) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lag_matrix_matches_windows(series in panel(1, false), history in 1usize..8, mh in 1usize..5) {
        let f = frame(series.clone());
        let Ok(m) = make_lag_matrix(&f, history, mh) else {
            prop_assert!(series.iter().all(|s| s.len() < history + mh));
            return Ok(());
        };
        let mut r = 0;
        for (i, s) in series.iter().enumerate() {
            if s.len() < history + mh {
                continue;
            }
            for start in 0..=s.len() - history - mh {
                prop_assert_eq!(m.x.row(r), &s[start..start + history]);
                prop_assert_eq!(m.y.row(r), &s[start + history..start + history + mh]);
                prop_assert_eq!(m.anchors[r].series_id.clone(), Some(format!("s{i}")));
                r += 1;
            }
        }
        prop_assert_eq!(r, m.n_rows());
        prop_assert!(m.is_leakage_free());
    }

    #[test]
    fn pipeline_inverse_recovers_levels(series in panel(20, true)) {
        // forecasting in transformed space and mapping back is the identity
        // when the "prediction" is the true continuation
        let f = frame(series);
        let cfg = PipelineConfig::new(vec![
            TransformSpec::standard_scaler(),
            TransformSpec::difference(NormMode::Delta),
            TransformSpec::lag(4),
        ])
        .unwrap();
        let train = f.truncate_each(|n| n - 3);
        let state = PipelineState::fit(&cfg, &train).unwrap();
        let (full, _) = state.transform(&f).unwrap();
        let (_, anchors) = state.transform(&train).unwrap();
        for (s, t) in f.series().iter().zip(full.series()) {
            let tail = &t.values[t.values.len() - 3..];
            let back = state.inverse_series(&s.id, tail, &anchors.series[&s.id]).unwrap();
            for (a, b) in back.iter().zip(&s.values[s.values.len() - 3..]) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn ratio_modes_reject_zero() {
    let f = frame(vec![vec![1.0, 0.0, 2.0]]);
    assert!(difference_normalize(&f, NormMode::Ratio, ApplyTo::Target).is_err());
    let m = make_lag_matrix(&frame(vec![vec![1.0, 0.0, 2.0, 3.0]]), 2, 1).unwrap();
    assert!(last_known_normalize(&m, NormMode::Ratio).is_err());
}

#[test]
fn pipeline_ordering_is_checked() {
    use TransformSpec as T;
    assert!(PipelineConfig::new(vec![T::lag(3), T::standard_scaler()]).is_err());
    assert!(PipelineConfig::new(vec![T::last_known(NormMode::Delta), T::lag(3)]).is_err());
    assert!(PipelineConfig::new(vec![T::standard_scaler()]).is_err());
    assert!(PipelineConfig::new(vec![T::lag(3), T::lag(3)]).is_err());
    assert!(PipelineConfig::new(vec![T::standard_scaler(), T::lag(3), T::last_known(NormMode::Delta)]).is_ok());
}
