//! Seeded synthetic datasets for tests, demos and the `generate` command.
//!
//! All generators are deterministic in their seed. Calendar series are
//! daily and start on 2020-01-01.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Frequency, LongFrame, Series};
use crate::error::{Error, Result};

/// Day tick of 2020-01-01.
pub const START_DAY: i64 = 18262;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::Constraint(format!("noise sd {sd}: {e}")))
}

fn daily_frame(series: Vec<(String, Vec<f64>)>) -> Result<LongFrame> {
    let series = series
        .into_iter()
        .map(|(id, v)| Series::regular(id, START_DAY, 1, v))
        .collect();
    LongFrame::from_series(Frequency::days(1), Vec::new(), series)
}

fn series_id(i: usize) -> String {
    format!("s{i:02}")
}

/// `x_t = x_{t-1} + d_i + e_t` with a per-series drift `d_i` drawn from
/// `[drift_min, drift_max]` and Gaussian steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomWalkParams {
    pub n_series: usize,
    pub length: usize,
    pub drift_min: f64,
    pub drift_max: f64,
    pub noise: f64,
    pub start: f64,
    pub seed: u64,
}

impl Default for RandomWalkParams {
    fn default() -> Self {
        RandomWalkParams {
            n_series: 5,
            length: 400,
            drift_min: 0.1,
            drift_max: 0.5,
            noise: 1.0,
            start: 100.0,
            seed: 0,
        }
    }
}

pub fn random_walk_with_drift(p: &RandomWalkParams) -> Result<LongFrame> {
    if p.drift_min > p.drift_max {
        return Err(Error::Constraint("drift_min exceeds drift_max".into()));
    }
    let mut r = rng(p.seed);
    let eps = normal(p.noise)?;
    let series = (0..p.n_series)
        .map(|i| {
            let drift = r.random_range(p.drift_min..=p.drift_max);
            let mut x = p.start + r.random_range(0.0..p.start.abs().max(1.0) * 0.5);
            let values = (0..p.length)
                .map(|_| {
                    let v = x;
                    x += drift + eps.sample(&mut r);
                    v
                })
                .collect();
            (series_id(i), values)
        })
        .collect();
    daily_frame(series)
}

/// Noiseless `x_t = phi * x_{t-1}` starting from `x0`.
pub fn ar1(phi: f64, x0: f64, length: usize) -> Vec<f64> {
    std::iter::successors(Some(x0), |x| Some(phi * x)).take(length).collect()
}

/// Aligned panel sharing a common trend and a weekly-style cycle, with
/// per-series level, amplitude, phase and noise. Values stay positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelParams {
    pub n_series: usize,
    pub length: usize,
    pub period: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for PanelParams {
    fn default() -> Self {
        PanelParams {
            n_series: 7,
            length: 300,
            period: 7,
            noise: 0.5,
            seed: 0,
        }
    }
}

pub fn seasonal_panel(p: &PanelParams) -> Result<LongFrame> {
    if p.period == 0 {
        return Err(Error::Constraint("period must be positive".into()));
    }
    let mut r = rng(p.seed);
    let eps = normal(p.noise)?;
    let common_sd = normal(0.3)?;
    let mut common = 0.0;
    let trend: Vec<f64> = (0..p.length)
        .map(|_| {
            common += 0.02 + common_sd.sample(&mut r);
            common
        })
        .collect();
    let w = std::f64::consts::TAU / p.period as f64;
    let series = (0..p.n_series)
        .map(|i| {
            let level = 50.0 + r.random_range(0.0..50.0);
            let amp = r.random_range(2.0..8.0);
            let phase = r.random_range(0.0..std::f64::consts::TAU);
            let load = r.random_range(0.5..1.5);
            let values = (0..p.length)
                .map(|t| level + load * trend[t] + amp * (w * t as f64 + phase).sin() + eps.sample(&mut r))
                .collect();
            (series_id(i), values)
        })
        .collect();
    daily_frame(series)
}
