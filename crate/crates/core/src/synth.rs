//! Seeded synthetic campus scenarios with an afternoon cooling peak.

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::optimizer::SolveError;
use crate::scenario::{no_storage_baseline, Models, Scenario, ScenarioRow};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic parameters: {0}")]
    Invalid(String),
    #[error("synthetic scenario is not servable: {0}")]
    Infeasible(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub start: NaiveDate,
    pub days: usize,
    /// Overnight non-cooling load, MW.
    pub base_mw: f64,
    /// Afternoon rise of the non-cooling load, MW.
    pub base_peak_mw: f64,
    /// Overnight cooling demand, MW.
    pub cool_mw: f64,
    /// Afternoon rise of the cooling demand, MW.
    pub cool_peak_mw: f64,
    pub steam_mw: f64,
    /// Overnight wet-bulb temperature, °C.
    pub twb_c: f64,
    /// Afternoon wet-bulb rise, °C.
    pub twb_peak_c: f64,
    /// Hour of day at which the peak is centred.
    pub peak_hour: f64,
    /// Gaussian width of the peak, hours.
    pub peak_width_h: f64,
    /// Peak amplitude multiplier per day, cycled.
    pub day_scale: Vec<f64>,
    /// Noise standard deviation as a fraction of each amplitude.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2023, 9, 10).unwrap(),
            days: 3,
            base_mw: 33.0,
            base_peak_mw: 7.0,
            cool_mw: 62.0,
            cool_peak_mw: 58.0,
            steam_mw: 10.0,
            twb_c: 21.0,
            twb_peak_c: 4.0,
            peak_hour: 15.0,
            peak_width_h: 4.0,
            day_scale: vec![1.0, 0.94, 0.88],
            noise: 0.02,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Invalid(m.to_string()));
        if self.days == 0 {
            return bad("days must be positive");
        }
        let nonneg = [
            self.base_mw,
            self.base_peak_mw,
            self.cool_mw,
            self.cool_peak_mw,
            self.steam_mw,
            self.twb_peak_c,
            self.noise,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("load levels, amplitudes and noise must be finite and >= 0");
        }
        if !self.twb_c.is_finite() {
            return bad("twb_c must be finite");
        }
        if !(self.peak_width_h.is_finite() && self.peak_width_h > 0.0) {
            return bad("peak_width_h must be positive");
        }
        if !(0.0..24.0).contains(&self.peak_hour) {
            return bad("peak_hour must lie in [0, 24)");
        }
        if self.day_scale.is_empty() || self.day_scale.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("day_scale needs at least one value, all >= 0");
        }
        Ok(())
    }
}

/// Generates the scenario and checks it is servable under default models.
pub fn generate_synthetic(params: &SynthParams) -> Result<Scenario, SynthError> {
    generate_synthetic_for(params, &Models::default())
}

pub fn generate_synthetic_for(params: &SynthParams, models: &Models) -> Result<Scenario, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let start: NaiveDateTime = params.start.and_hms_opt(0, 0, 0).unwrap();
    let mut rows = Vec::with_capacity(params.days * 24);
    for d in 0..params.days {
        let scale = params.day_scale[d % params.day_scale.len()];
        for h in 0..24 {
            let bump = (-((h as f64 - params.peak_hour) / params.peak_width_h).powi(2)).exp();
            let mut level = |base: f64, amp: f64| {
                let a = amp * scale;
                base + a * bump + params.noise * a * unit.sample(&mut rng)
            };
            let p_base = level(params.base_mw, params.base_peak_mw).max(0.0);
            let q_cool = level(params.cool_mw, params.cool_peak_mw).max(0.0);
            let twb = level(params.twb_c, params.twb_peak_c);
            rows.push(ScenarioRow {
                timestamp: start + TimeDelta::hours((d * 24 + h) as i64),
                p_base: round4(p_base),
                q_cool: round4(q_cool),
                q_steam: params.steam_mw,
                twb: round4(twb),
            });
        }
    }
    let s = Scenario {
        name: Some("synthetic campus".into()),
        source: Some("synthetic".into()),
        seed: Some(params.seed),
        rows,
    };
    no_storage_baseline(&s, &models.cop, &models.plant, &models.tes)?;
    Ok(s)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
