use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use stratcast::data::{Frequency, LongFrame, Series};
use stratcast::matrix::Matrix;
use stratcast::models::{Learner, ModelSpec, Predictor, TrainingData};
use stratcast::strategies::{fit_forecaster, Mode, StrategySpec};
use stratcast::synthetic::ar1;
use stratcast::transforms::{make_datetime_features, DatePart, NormMode, PipelineConfig, TransformSpec as T};
use stratcast::{Error, Result};

fn ordinal(series: Vec<(&str, Vec<f64>)>) -> LongFrame {
    LongFrame::from_values(Frequency::ordinal(1), series).unwrap()
}

#[test]
fn recursive_ridge_follows_ar1_closed_form() {
    // short enough that the levels stay far from zero
    let values = ar1(0.8, 10.0, 40);
    let last = *values.last().unwrap();
    let frame = ordinal(vec![("a", values)]);
    let fc = fit_forecaster(
        &frame,
        &PipelineConfig::identity(3),
        &StrategySpec::recursive(24, 1).unwrap(),
        Mode::Global,
        &ModelSpec::ridge(1e-10),
    )
    .unwrap();
    let out = fc.forecast(&frame, None).unwrap();
    for (h, v) in out.series[0].values.iter().enumerate() {
        let expected = 0.8f64.powi(h as i32 + 1) * last;
        assert!(((v - expected) / expected).abs() < 1e-6, "h={}: {v} vs {expected}", h + 1);
    }
    assert_eq!(out.series[0].timestamps, (40..64).collect::<Vec<i64>>());
}

/// Ridge wrapper that counts prediction calls.
struct Counting {
    inner: ModelSpec,
    calls: Arc<AtomicUsize>,
}

#[derive(Debug)]
struct CountingPredictor {
    inner: Arc<dyn Predictor>,
    calls: Arc<AtomicUsize>,
}

impl Predictor for CountingPredictor {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }
    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }
    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(x)
    }
}

impl Learner for Counting {
    fn fit(&self, train: &TrainingData<'_>, valid: Option<&TrainingData<'_>>) -> Result<Arc<dyn Predictor>> {
        Ok(Arc::new(CountingPredictor {
            inner: self.inner.fit(train, valid)?,
            calls: self.calls.clone(),
        }))
    }
}

#[test]
fn rec_mimo_iterates_ceil_h_over_mh_times() {
    let frame = ordinal(vec![
        ("a", (0..60).map(|i| (i as f64 * 0.3).sin() + i as f64 * 0.1).collect()),
        ("b", (0..60).map(|i| (i as f64 * 0.2).cos()).collect()),
    ]);
    for (mh, calls) in [(1, 24), (5, 5), (6, 4), (24, 1)] {
        let learner = Counting {
            inner: ModelSpec::ridge(1.0),
            calls: Arc::new(AtomicUsize::new(0)),
        };
        let s = StrategySpec::recursive(24, mh).unwrap();
        let fc = fit_forecaster(&frame, &PipelineConfig::identity(8), &s, Mode::Global, &learner).unwrap();
        let out = fc.forecast(&frame, None).unwrap();
        assert_eq!(learner.calls.load(Ordering::SeqCst), calls, "MH={mh}");
        assert!(out.series.iter().all(|s| s.values.len() == 24));
    }
}

#[test]
fn direct_fits_one_model_per_segment() {
    let frame = ordinal(vec![("a", (0..50).map(|i| i as f64).collect())]);
    let s = StrategySpec::direct(12, 4).unwrap();
    let fc = fit_forecaster(&frame, &PipelineConfig::identity(5), &s, Mode::Global, &ModelSpec::ridge(1e-6)).unwrap();
    assert_eq!(fc.models().len(), 3);
    assert!(fc.models().iter().all(|m| m.n_outputs() == 4));
    let out = fc.forecast(&frame, None).unwrap();
    for (h, v) in out.series[0].values.iter().enumerate() {
        assert!((v - (50 + h) as f64).abs() < 1e-3);
    }
}

#[test]
fn multivariate_mode_needs_aligned_series() {
    let frame = LongFrame::from_series(
        Frequency::ordinal(1),
        Vec::new(),
        vec![
            Series::regular("a", 0, 1, (0..30).map(f64::from).collect()),
            Series::regular("b", 5, 1, (0..30).map(f64::from).collect()),
        ],
    )
    .unwrap();
    let s = StrategySpec::mimo(4).unwrap();
    for mode in [Mode::MultivariateCm, Mode::MultivariateCi] {
        let r = fit_forecaster(&frame, &PipelineConfig::identity(4), &s, mode, &ModelSpec::ridge(1.0));
        assert!(matches!(r, Err(Error::NotAligned)), "{mode}");
    }
    assert!(fit_forecaster(&frame, &PipelineConfig::identity(4), &s, Mode::Global, &ModelSpec::ridge(1.0)).is_ok());
}

#[test]
fn short_context_is_reported() {
    let frame = ordinal(vec![("a", (0..40).map(f64::from).collect())]);
    let s = StrategySpec::mimo(4).unwrap();
    let fc = fit_forecaster(&frame, &PipelineConfig::identity(10), &s, Mode::Global, &ModelSpec::ridge(1.0)).unwrap();
    let short = frame.truncate_each(|_| 5);
    assert!(matches!(fc.forecast(&short, None), Err(Error::InsufficientHistory { .. })));
}

#[test]
fn iso_week_numbers_wrap_at_year_end() {
    // 2020-12-28 is a Monday in ISO week 53
    let start = 18_624;
    let frame = LongFrame::from_series(
        Frequency::weeks(1),
        Vec::new(),
        vec![Series::regular("a", start, 7, vec![1.0; 4])],
    )
    .unwrap();
    let f = make_datetime_features(&frame, &[DatePart::Week, DatePart::Weekday]).unwrap();
    assert_eq!(f[0][0], vec![53.0, 1.0, 2.0, 3.0]);
    assert_eq!(f[0][1], vec![0.0; 4]);
    assert!(matches!(
        make_datetime_features(&ordinal(vec![("a", vec![1.0])]), &[DatePart::Week]),
        Err(Error::OrdinalTimestamps)
    ));
}

/// Seven weekly channels with a shared yearly bump, as in influenza-like
/// illness surveillance data.
fn weekly_panel() -> LongFrame {
    let series = (0..7)
        .map(|c| {
            let values = (0..260)
                .map(|w| {
                    let season = ((w as f64 + c as f64) * std::f64::consts::TAU / 52.0).cos();
                    10.0 + c as f64 + 5.0 * season.max(0.0).powi(3) + 0.01 * w as f64
                })
                .collect();
            Series::regular(format!("ch{c}"), 18_267, 7, values)
        })
        .collect();
    LongFrame::from_series(Frequency::weeks(1), Vec::new(), series).unwrap()
}

#[test]
fn weekly_multichannel_fixture_runs_every_strategy() {
    let frame = weekly_panel();
    let pipeline = PipelineConfig::new(vec![
        T::standard_scaler(),
        T::DatetimeFeatures {
            parts: vec![DatePart::Week],
            lags: 1,
        },
        T::lag(16),
        T::last_known(NormMode::Delta),
    ])
    .unwrap();
    let h = 8;
    for s in [
        StrategySpec::recursive(h, 1).unwrap(),
        StrategySpec::recursive(h, 4).unwrap(),
        StrategySpec::direct(h, 2).unwrap(),
        StrategySpec::mimo(h).unwrap(),
        StrategySpec::flat_wide_mimo(h).unwrap(),
    ] {
        for mode in [Mode::Global, Mode::MultivariateCm, Mode::MultivariateCi] {
            let fc = fit_forecaster(&frame, &pipeline, &s, mode, &ModelSpec::ridge(1.0)).unwrap();
            let out = fc.forecast(&frame, None).unwrap();
            assert_eq!(out.series.len(), 7);
            for sf in &out.series {
                let last = *frame.get(&sf.series_id).unwrap().timestamps.last().unwrap();
                assert_eq!(sf.timestamps, (1..=h as i64).map(|k| last + 7 * k).collect::<Vec<_>>());
                assert!(sf.values.iter().all(|v| v.is_finite() && (0.0..30.0).contains(v)), "{} {mode}", s.kind);
            }
        }
    }
}

#[test]
fn scaled_series_forecasts_map_affinely() {
    let base = stratcast::synthetic::seasonal_panel(&stratcast::synthetic::PanelParams {
        n_series: 3,
        length: 100,
        seed: 9,
        ..Default::default()
    })
    .unwrap();
    let (a, b) = (3.5, -40.0);
    let moved = base
        .map_series(|s| {
            let mut s = s.clone();
            if s.id == "s01" {
                s.values.iter_mut().for_each(|v| *v = a * *v + b);
            }
            Ok(s)
        })
        .unwrap();
    let pipeline = PipelineConfig::new(vec![T::standard_scaler(), T::lag(10)]).unwrap();
    for s in [StrategySpec::recursive(6, 1).unwrap(), StrategySpec::mimo(6).unwrap()] {
        let fit = |f: &LongFrame| {
            fit_forecaster(f, &pipeline, &s, Mode::Global, &ModelSpec::ridge(0.3))
                .unwrap()
                .forecast(f, None)
                .unwrap()
        };
        let (p, q) = (fit(&base), fit(&moved));
        for (x, y) in p.series.iter().zip(&q.series) {
            for (u, v) in x.values.iter().zip(&y.values) {
                let expected = if x.series_id == "s01" { a * u + b } else { *u };
                assert!((v - expected).abs() <= 1e-9 * (1.0 + expected.abs()), "{} {}: {v} vs {expected}", s.kind, x.series_id);
            }
        }
    }
}
