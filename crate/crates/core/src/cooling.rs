//! District cooling plant and chilled-water storage.
//!
//! Sign convention: a positive storage flow `q_stor` charges the tank, so the
//! chillers must produce `q_cool + q_stor` and the state of charge rises by
//! `q_stor` MWh over the hour. Time steps are one hour throughout.

use thiserror::Error;

use crate::config::{ConfigError, ConfigFile, ConfigWriter, FlatConfig};

/// Basis order: 1, PLR, TWB, PLR², TWB·PLR, TWB².
pub const COP_TERMS: [&str; 6] = ["1", "plr", "twb", "plr^2", "twb*plr", "twb^2"];

pub const DEFAULT_COP_COEFFICIENTS: [f64; 6] = [11.87, -8.84, -0.17, -6.89, 0.75, -0.01];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoolingError {
    #[error("part load ratio {0} outside [0, 1]")]
    PlrOutOfRange(f64),
    #[error("wet-bulb temperature {twb} °C outside [{min}, {max}]")]
    TwbOutOfRange { twb: f64, min: f64, max: f64 },
    #[error("COP {value:.4} at PLR {plr:.4}, TWB {twb:.2} °C is at or below the floor {floor}")]
    DegenerateCop {
        plr: f64,
        twb: f64,
        value: f64,
        floor: f64,
    },
    #[error("chiller output {q_ch:.3} MW exceeds capacity {q_ch_max:.3} MW")]
    OverCapacity { q_ch: f64, q_ch_max: f64 },
    #[error("discharging {discharge:.3} MW exceeds the {q_cool:.3} MW campus cooling demand")]
    InfeasibleDischarge { q_cool: f64, discharge: f64 },
    #[error("invalid cooling config: {0}")]
    InvalidConfig(String),
}

/// Chiller-system COP as a quadratic in part load ratio and wet-bulb
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct CopModel {
    pub coefficients: [f64; 6],
    pub twb_min: f64,
    pub twb_max: f64,
    pub cop_floor: f64,
}

impl Default for CopModel {
    fn default() -> Self {
        Self {
            coefficients: DEFAULT_COP_COEFFICIENTS,
            twb_min: 10.0,
            twb_max: 30.0,
            cop_floor: 0.5,
        }
    }
}

impl CopModel {
    pub fn with_coefficients(coefficients: [f64; 6]) -> Self {
        Self {
            coefficients,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CoolingError> {
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(CoolingError::InvalidConfig("non-finite COP coefficient".into()));
        }
        if !(self.twb_min.is_finite() && self.twb_max.is_finite() && self.twb_min <= self.twb_max) {
            return Err(CoolingError::InvalidConfig(format!(
                "bad wet-bulb range [{}, {}]",
                self.twb_min, self.twb_max
            )));
        }
        if !self.cop_floor.is_finite() {
            return Err(CoolingError::InvalidConfig("non-finite cop_floor".into()));
        }
        Ok(())
    }

    /// Raw polynomial value, no domain guards.
    pub fn polynomial(&self, plr: f64, twb: f64) -> f64 {
        let (a, b, c) = self.plr_quadratic(twb);
        a + plr * (b + plr * c)
    }

    /// COP at a fixed wet-bulb temperature as `a + b·PLR + c·PLR²`.
    pub fn plr_quadratic(&self, twb: f64) -> (f64, f64, f64) {
        let k = &self.coefficients;
        (
            k[0] + twb * (k[2] + twb * k[5]),
            k[1] + k[4] * twb,
            k[3],
        )
    }

    pub fn check_twb(&self, twb: f64) -> Result<(), CoolingError> {
        if twb.is_finite() && twb >= self.twb_min && twb <= self.twb_max {
            Ok(())
        } else {
            Err(CoolingError::TwbOutOfRange {
                twb,
                min: self.twb_min,
                max: self.twb_max,
            })
        }
    }

    /// Guarded COP: domain checks on both inputs and the floor on the value.
    pub fn cop(&self, plr: f64, twb: f64) -> Result<f64, CoolingError> {
        if !(plr.is_finite() && (0.0..=1.0).contains(&plr)) {
            return Err(CoolingError::PlrOutOfRange(plr));
        }
        self.check_twb(twb)?;
        let value = self.polynomial(plr, twb);
        if value <= self.cop_floor {
            return Err(CoolingError::DegenerateCop {
                plr,
                twb,
                value,
                floor: self.cop_floor,
            });
        }
        Ok(value)
    }

    /// Largest PLR interval inside [0, 1] containing `plr` on which the COP
    /// stays strictly above the floor. `None` if `plr` itself is degenerate.
    pub fn admissible_plr_interval(&self, plr: f64, twb: f64) -> Option<(f64, f64)> {
        let (a, b, c) = self.plr_quadratic(twb);
        let a = a - self.cop_floor;
        let value = a + plr * (b + plr * c);
        if value <= 0.0 {
            return None;
        }
        let mut roots: Vec<f64> = Vec::with_capacity(2);
        if c.abs() < 1e-15 {
            if b.abs() > 0.0 {
                roots.push(-a / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                // Numerically stable quadratic roots.
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                if q != 0.0 {
                    roots.push(q / c);
                    roots.push(a / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        let lo = roots
            .iter()
            .cloned()
            .filter(|r| *r < plr)
            .fold(0.0_f64, f64::max);
        let hi = roots
            .iter()
            .cloned()
            .filter(|r| *r > plr)
            .fold(1.0_f64, f64::min);
        Some((lo, hi))
    }
}

impl ConfigFile for CopModel {
    fn from_flat(cfg: &mut FlatConfig) -> Result<Self, ConfigError> {
        let d = Self::default();
        let mut coefficients = d.coefficients;
        for (i, c) in coefficients.iter_mut().enumerate() {
            *c = cfg.take_or(&format!("c{i}"), *c)?;
        }
        let out = Self {
            coefficients,
            twb_min: cfg.take_or("twb_min", d.twb_min)?,
            twb_max: cfg.take_or("twb_max", d.twb_max)?,
            cop_floor: cfg.take_or("cop_floor", d.cop_floor)?,
        };
        out.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(out)
    }

    fn write_flat(&self, w: &mut ConfigWriter) {
        for (i, c) in self.coefficients.iter().enumerate() {
            w.entry(&format!("c{i}"), c);
        }
        w.entry("twb_min", self.twb_min)
            .entry("twb_max", self.twb_max)
            .entry("cop_floor", self.cop_floor);
    }
}

/// Lumped chilled-water tank and chiller plant capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct TesConfig {
    /// Storage capacity, MWh.
    pub e_max: f64,
    /// Charge and discharge limit, MW.
    pub rate_max: f64,
    pub e_initial: f64,
    pub e_terminal: f64,
    /// Nominal cooling of the chiller plant, MW.
    pub q_ch_max: f64,
}

impl Default for TesConfig {
    fn default() -> Self {
        Self {
            e_max: 175.6,
            rate_max: 31.7,
            e_initial: 175.6,
            e_terminal: 175.6,
            q_ch_max: 156.5,
        }
    }
}

impl TesConfig {
    pub fn validate(&self) -> Result<(), CoolingError> {
        let bad = |m: String| Err(CoolingError::InvalidConfig(m));
        if !(self.e_max.is_finite() && self.e_max > 0.0) {
            return bad(format!("e_max must be positive, got {}", self.e_max));
        }
        if !(self.rate_max.is_finite() && self.rate_max >= 0.0) {
            return bad(format!("rate_max must be >= 0, got {}", self.rate_max));
        }
        if !(self.q_ch_max.is_finite() && self.q_ch_max > 0.0) {
            return bad(format!("q_ch_max must be positive, got {}", self.q_ch_max));
        }
        for (name, e) in [("e_initial", self.e_initial), ("e_terminal", self.e_terminal)] {
            if !(0.0..=self.e_max).contains(&e) {
                return bad(format!("{name} {e} outside [0, {}]", self.e_max));
            }
        }
        Ok(())
    }
}

impl ConfigFile for TesConfig {
    fn from_flat(cfg: &mut FlatConfig) -> Result<Self, ConfigError> {
        let d = Self::default();
        let out = Self {
            e_max: cfg.take_or("e_max", d.e_max)?,
            rate_max: cfg.take_or("rate_max", d.rate_max)?,
            e_initial: cfg.take_or("e_initial", d.e_initial)?,
            e_terminal: cfg.take_or("e_terminal", d.e_terminal)?,
            q_ch_max: cfg.take_or("q_ch_max", d.q_ch_max)?,
        };
        out.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(out)
    }

    fn write_flat(&self, w: &mut ConfigWriter) {
        w.entry("e_max", self.e_max)
            .entry("rate_max", self.rate_max)
            .entry("e_initial", self.e_initial)
            .entry("e_terminal", self.e_terminal)
            .entry("q_ch_max", self.q_ch_max);
    }
}

/// Chiller electrical draw for `q_ch` MW of cooling.
pub fn chiller_power(q_ch: f64, twb: f64, m: &CopModel, tes: &TesConfig) -> Result<f64, CoolingError> {
    if !(q_ch.is_finite() && q_ch >= 0.0) {
        return Err(CoolingError::PlrOutOfRange(q_ch / tes.q_ch_max));
    }
    if q_ch > tes.q_ch_max {
        return Err(CoolingError::OverCapacity {
            q_ch,
            q_ch_max: tes.q_ch_max,
        });
    }
    if q_ch == 0.0 {
        m.check_twb(twb)?;
        return Ok(0.0);
    }
    Ok(q_ch / m.cop(q_ch / tes.q_ch_max, twb)?)
}

/// Chiller output needed to serve `q_cool` while moving `q_stor` into the tank.
pub fn required_chiller_output(q_cool: f64, q_stor: f64) -> Result<f64, CoolingError> {
    let q_ch = q_cool + q_stor;
    if q_ch < 0.0 {
        return Err(CoolingError::InfeasibleDischarge {
            q_cool,
            discharge: -q_stor,
        });
    }
    Ok(q_ch)
}

/// State of charge at the start of each hour plus the final state.
pub fn storage_trajectory(q_stor: &[f64], tes: &TesConfig) -> Vec<f64> {
    let mut e = Vec::with_capacity(q_stor.len() + 1);
    e.push(tes.e_initial);
    let mut level = tes.e_initial;
    for q in q_stor {
        level += q;
        e.push(level);
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageSchedule {
    pub q_stor: Vec<f64>,
    pub e_stor: Vec<f64>,
}

impl StorageSchedule {
    pub fn from_flows(q_stor: Vec<f64>, tes: &TesConfig) -> Self {
        let e_stor = storage_trajectory(&q_stor, tes);
        Self { q_stor, e_stor }
    }

    pub fn zero(hours: usize, tes: &TesConfig) -> Self {
        Self::from_flows(vec![0.0; hours], tes)
    }

    pub fn horizon(&self) -> usize {
        self.q_stor.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `e_stor` must be one entry longer than `q_stor`.
    Length { flows: usize, states: usize },
    Rate { hour: usize, q_stor: f64, limit: f64 },
    Recursion { hour: usize, residual: f64 },
    BelowEmpty { index: usize, e_stor: f64 },
    AboveCapacity { index: usize, e_stor: f64, e_max: f64 },
    Initial { e_stor: f64, expected: f64 },
    Terminal { e_stor: f64, expected: f64 },
}

/// Every storage-side constraint the schedule breaks by more than `tol`.
pub fn check_schedule(s: &StorageSchedule, tes: &TesConfig, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = s.q_stor.len();
    if s.e_stor.len() != n + 1 {
        out.push(Violation::Length {
            flows: n,
            states: s.e_stor.len(),
        });
        return out;
    }
    for (hour, &q) in s.q_stor.iter().enumerate() {
        if !(q.abs() <= tes.rate_max + tol) {
            out.push(Violation::Rate {
                hour,
                q_stor: q,
                limit: tes.rate_max,
            });
        }
        let residual = s.e_stor[hour + 1] - s.e_stor[hour] - q;
        if !(residual.abs() <= tol) {
            out.push(Violation::Recursion { hour, residual });
        }
    }
    for (index, &e) in s.e_stor.iter().enumerate() {
        if !(e >= -tol) {
            out.push(Violation::BelowEmpty { index, e_stor: e });
        }
        if !(e <= tes.e_max + tol) {
            out.push(Violation::AboveCapacity {
                index,
                e_stor: e,
                e_max: tes.e_max,
            });
        }
    }
    if !((s.e_stor[0] - tes.e_initial).abs() <= tol) {
        out.push(Violation::Initial {
            e_stor: s.e_stor[0],
            expected: tes.e_initial,
        });
    }
    if !((s.e_stor[n] - tes.e_terminal).abs() <= tol) {
        out.push(Violation::Terminal {
            e_stor: s.e_stor[n],
            expected: tes.e_terminal,
        });
    }
    out
}
