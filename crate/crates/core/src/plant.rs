//! Combined heat and power plant: heat and mass balance of one gas turbine,
//! its heat recovery steam generator, a steam boiler, the main steam turbine
//! and the supplementary peaking steam turbine.
//!
//! All powers and heat flows are in MW, fuel in MW of fuel heat input.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{ConfigError, ConfigFile, ConfigWriter, FlatConfig};

/// Boiler steam capacity (MW of heat) used when the config omits `cap_sb`.
pub const DEFAULT_BOILER_CAPACITY_MW: f64 = 88.0;

const BISECTION_STEPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid plant config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("electrical demand {demand:.3} MW exceeds plant capacity {capacity:.3} MW")]
    InfeasibleDemand { demand: f64, capacity: f64 },
    #[error("boiler steam {required:.3} MW exceeds boiler capacity {capacity:.3} MW")]
    InfeasibleSteam { required: f64, capacity: f64 },
    #[error("recovered steam {surplus:.3} MW beyond what the steam turbine can use at {demand:.3} MW")]
    SteamSurplus { demand: f64, surplus: f64 },
    #[error("profile lengths differ: baseline {baseline}, optimized {optimized}")]
    Shape { baseline: usize, optimized: usize },
}

/// Component efficiency as an affine function of the unit's load fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub at_zero_load: f64,
    pub slope: f64,
}

impl Efficiency {
    pub const fn constant(value: f64) -> Self {
        Self {
            at_zero_load: value,
            slope: 0.0,
        }
    }

    pub const fn affine(at_zero_load: f64, slope: f64) -> Self {
        Self {
            at_zero_load,
            slope,
        }
    }

    /// Efficiency at `load_fraction`, clamped to [0, 1].
    pub fn at(&self, load_fraction: f64) -> f64 {
        self.at_zero_load + self.slope * load_fraction.clamp(0.0, 1.0)
    }

    fn in_unit_interval(&self) -> bool {
        [self.at(0.0), self.at(1.0)]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0 && *v <= 1.0)
    }
}

impl fmt::Display for Efficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.slope == 0.0 {
            write!(f, "{}", self.at_zero_load)
        } else {
            write!(f, "{}, {}", self.at_zero_load, self.slope)
        }
    }
}

impl FromStr for Efficiency {
    type Err = String;

    /// `0.35` is a constant; `0.30, 0.05` is `0.30 + 0.05 * load_fraction`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p}: {e}"));
        match parts.as_slice() {
            [a] => Ok(Self::constant(num(a)?)),
            [a, b] => Ok(Self::affine(num(a)?, num(b)?)),
            _ => Err(format!("expected one or two numbers, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub cap_gt: f64,
    pub cap_st: f64,
    pub cap_peak: f64,
    /// Electrical load above which the peaking turbine runs.
    pub threshold: f64,
    pub eta_gt: Efficiency,
    pub eta_hrsg: Efficiency,
    pub eta_sb: Efficiency,
    pub eta_st: Efficiency,
    /// Lumped fuel-to-electricity efficiency below the threshold.
    pub eta_cc: f64,
    /// Lumped fuel-to-electricity efficiency of the peaking path.
    pub eta_peak: f64,
    pub max_extraction_fraction: f64,
    pub peaking_margin_mw: f64,
    pub cap_sb: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            cap_gt: 32.0,
            cap_st: 25.0,
            cap_peak: 8.0,
            threshold: 57.0,
            eta_gt: Efficiency::constant(0.35),
            eta_hrsg: Efficiency::constant(0.80),
            eta_sb: Efficiency::constant(0.85),
            eta_st: Efficiency::constant(0.30),
            eta_cc: 0.40,
            eta_peak: 0.20,
            max_extraction_fraction: 1.0,
            peaking_margin_mw: 1.0,
            cap_sb: DEFAULT_BOILER_CAPACITY_MW,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: String| Err(PlantError::InvalidConfig(m));
        for (name, v) in [
            ("cap_gt", self.cap_gt),
            ("cap_st", self.cap_st),
            ("cap_sb", self.cap_sb),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.cap_peak.is_finite() && self.cap_peak >= 0.0) {
            return bad(format!("cap_peak must be >= 0, got {}", self.cap_peak));
        }
        if (self.threshold - (self.cap_gt + self.cap_st)).abs() > 1e-9 * self.threshold.abs().max(1.0)
        {
            return bad(format!(
                "threshold {} must equal cap_gt + cap_st = {}",
                self.threshold,
                self.cap_gt + self.cap_st
            ));
        }
        for (name, eta) in [
            ("eta_gt", self.eta_gt),
            ("eta_hrsg", self.eta_hrsg),
            ("eta_sb", self.eta_sb),
            ("eta_st", self.eta_st),
        ] {
            if !eta.in_unit_interval() {
                return bad(format!("{name} must lie in (0, 1] over the load range, got {eta}"));
            }
        }
        for (name, v) in [("eta_cc", self.eta_cc), ("eta_peak", self.eta_peak)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.max_extraction_fraction) {
            return bad(format!(
                "max_extraction_fraction must lie in [0, 1], got {}",
                self.max_extraction_fraction
            ));
        }
        if !(self.peaking_margin_mw.is_finite() && self.peaking_margin_mw >= 0.0) {
            return bad(format!(
                "peaking_margin_mw must be >= 0, got {}",
                self.peaking_margin_mw
            ));
        }
        Ok(())
    }

    /// Largest electrical load the plant can serve.
    pub fn capacity(&self) -> f64 {
        self.threshold + self.cap_peak
    }

    /// Steam turbine load fraction, main and peaking units lumped.
    fn st_fraction(&self, p_e_st: f64) -> f64 {
        p_e_st / (self.cap_st + self.cap_peak)
    }

    fn gt_fraction(&self, p_e_gt: f64) -> f64 {
        p_e_gt / self.cap_gt
    }

    /// Steam recovered by the HRSG when the gas turbine makes `p_e_gt`.
    fn hrsg_steam(&self, p_e_gt: f64) -> f64 {
        let x = self.gt_fraction(p_e_gt);
        let q_g_gt = p_e_gt / self.eta_gt.at(x);
        (q_g_gt - p_e_gt) * self.eta_hrsg.at(x)
    }

    /// Steam the turbines need to produce `p_e_st`.
    fn st_steam(&self, p_e_st: f64) -> f64 {
        p_e_st / self.eta_st.at(self.st_fraction(p_e_st))
    }
}

impl ConfigFile for PlantConfig {
    fn from_flat(cfg: &mut FlatConfig) -> Result<Self, ConfigError> {
        let d = Self::default();
        let eta = |cfg: &mut FlatConfig, key: &str, default: Efficiency| {
            cfg.take::<Efficiency>(key).map(|v| v.unwrap_or(default))
        };
        let out = Self {
            cap_gt: cfg.take_or("cap_gt", d.cap_gt)?,
            cap_st: cfg.take_or("cap_st", d.cap_st)?,
            cap_peak: cfg.take_or("cap_peak", d.cap_peak)?,
            threshold: cfg.take_or("threshold", d.threshold)?,
            eta_gt: eta(cfg, "eta_gt", d.eta_gt)?,
            eta_hrsg: eta(cfg, "eta_hrsg", d.eta_hrsg)?,
            eta_sb: eta(cfg, "eta_sb", d.eta_sb)?,
            eta_st: eta(cfg, "eta_st", d.eta_st)?,
            eta_cc: cfg.take_or("eta_cc", d.eta_cc)?,
            eta_peak: cfg.take_or("eta_peak", d.eta_peak)?,
            max_extraction_fraction: cfg
                .take_or("max_extraction_fraction", d.max_extraction_fraction)?,
            peaking_margin_mw: cfg.take_or("peaking_margin_mw", d.peaking_margin_mw)?,
            cap_sb: cfg.take_or("cap_sb", d.cap_sb)?,
        };
        out.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(out)
    }

    fn write_flat(&self, w: &mut ConfigWriter) {
        w.entry("cap_gt", self.cap_gt)
            .entry("cap_st", self.cap_st)
            .entry("cap_peak", self.cap_peak)
            .entry("threshold", self.threshold)
            .entry("eta_gt", self.eta_gt)
            .entry("eta_hrsg", self.eta_hrsg)
            .entry("eta_sb", self.eta_sb)
            .entry("eta_st", self.eta_st)
            .entry("eta_cc", self.eta_cc)
            .entry("eta_peak", self.eta_peak)
            .entry("max_extraction_fraction", self.max_extraction_fraction)
            .entry("peaking_margin_mw", self.peaking_margin_mw);
        if self.cap_sb != DEFAULT_BOILER_CAPACITY_MW {
            w.entry("cap_sb", self.cap_sb);
        }
    }
}

/// One hour of plant operation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChpDispatch {
    pub p_e_c: f64,
    pub p_e_gt: f64,
    pub p_e_st_main: f64,
    pub p_e_peak: f64,
    pub q_s_c: f64,
    pub q_s_st: f64,
    pub q_s_hrsg: f64,
    pub q_s_sb: f64,
    pub q_sb_st: f64,
    pub q_ex_st: f64,
    pub q_heat: f64,
    pub q_g_gt: f64,
    pub q_g_sb: f64,
    pub prr: f64,
    pub er: f64,
    /// Load sits within `peaking_margin_mw` below the threshold, where the
    /// peaking turbine would normally be kept on at minimum load.
    pub peaking_standby: bool,
}

impl ChpDispatch {
    /// Steam turbine power, main plus peaking unit.
    pub fn p_e_st(&self) -> f64 {
        self.p_e_st_main + self.p_e_peak
    }

    pub fn total_fuel(&self) -> f64 {
        self.q_g_gt + self.q_g_sb
    }
}

/// Electrical load served by the peaking turbine.
pub fn peaking_power(p_e_c: f64, cfg: &PlantConfig) -> Result<f64, PlantError> {
    if !(p_e_c.is_finite() && p_e_c >= 0.0) {
        return Err(PlantError::InvalidInput(format!(
            "electrical load must be >= 0, got {p_e_c}"
        )));
    }
    if p_e_c > cfg.capacity() {
        return Err(PlantError::InfeasibleDemand {
            demand: p_e_c,
            capacity: cfg.capacity(),
        });
    }
    Ok((p_e_c - cfg.threshold).max(0.0).min(cfg.cap_peak))
}

/// Splits one hour of campus electrical and steam load across the plant.
///
/// The gas turbine is loaded first. Its recovered steam always passes
/// through the steam turbine, so below the knee where the HRSG alone can
/// drive the steam turbine the split is set by that heat balance. Past the
/// knee the gas turbine sits at capacity and boiler steam makes up the
/// difference, first for the main turbine and then for the peaking unit.
/// Campus steam is extracted from the turbine up to
/// `max_extraction_fraction`; the boiler supplies the rest directly.
pub fn dispatch_hour(p_e_c: f64, q_s_c: f64, cfg: &PlantConfig) -> Result<ChpDispatch, PlantError> {
    if !(p_e_c.is_finite() && p_e_c > 0.0) {
        return Err(PlantError::InvalidInput(format!(
            "electrical load must be > 0, got {p_e_c}"
        )));
    }
    if !(q_s_c.is_finite() && q_s_c >= 0.0) {
        return Err(PlantError::InvalidInput(format!(
            "campus steam load must be >= 0, got {q_s_c}"
        )));
    }
    let p_e_peak = peaking_power(p_e_c, cfg)?;
    let p_cc = p_e_c - p_e_peak;

    // g(p_gt) = recovered steam - steam needed by the turbines; increasing in p_gt.
    let balance = |p_gt: f64| cfg.hrsg_steam(p_gt) - cfg.st_steam(p_cc - p_gt + p_e_peak);
    let lo = (p_cc - cfg.cap_st).max(0.0);
    let hi = cfg.cap_gt.min(p_cc);
    let p_e_gt = if balance(hi) <= 0.0 {
        hi
    } else if balance(lo) >= 0.0 {
        let surplus = balance(lo);
        if surplus > 1e-9 * p_e_c.max(1.0) {
            return Err(PlantError::SteamSurplus {
                demand: p_e_c,
                surplus,
            });
        }
        lo
    } else {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if balance(mid) > 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    let p_e_st_main = p_cc - p_e_gt;

    let x_gt = cfg.gt_fraction(p_e_gt);
    let q_g_gt = p_e_gt / cfg.eta_gt.at(x_gt);
    let q_heat = q_g_gt - p_e_gt;
    let q_s_hrsg = q_heat * cfg.eta_hrsg.at(x_gt);

    let p_e_st = p_e_st_main + p_e_peak;
    let mut q_s_st = cfg.st_steam(p_e_st);
    let q_sb_st = if q_s_st >= q_s_hrsg {
        q_s_st - q_s_hrsg
    } else {
        // Bisection leftover at the knee.
        q_s_st = q_s_hrsg;
        0.0
    };

    let er = if q_s_st > 0.0 {
        (q_s_c / q_s_st).min(cfg.max_extraction_fraction)
    } else {
        0.0
    };
    let q_ex_st = q_s_st * er;
    let direct = (q_s_c - q_ex_st).max(0.0);
    let q_s_sb = direct + q_sb_st;
    if q_s_sb > cfg.cap_sb {
        return Err(PlantError::InfeasibleSteam {
            required: q_s_sb,
            capacity: cfg.cap_sb,
        });
    }
    let prr = if q_s_sb > 0.0 { direct / q_s_sb } else { 0.0 };
    let q_g_sb = if q_s_sb > 0.0 {
        q_s_sb / cfg.eta_sb.at(q_s_sb / cfg.cap_sb)
    } else {
        0.0
    };

    let peaking_standby =
        p_e_peak == 0.0 && p_e_c >= cfg.threshold - cfg.peaking_margin_mw;

    Ok(ChpDispatch {
        p_e_c,
        p_e_gt,
        p_e_st_main,
        p_e_peak,
        q_s_c,
        q_s_st,
        q_s_hrsg,
        q_s_sb,
        q_sb_st,
        q_ex_st,
        q_heat,
        q_g_gt,
        q_g_sb,
        prr,
        er,
        peaking_standby,
    })
}

/// Relative residual of each of the ten balance equations, in order:
/// power balance, campus steam, boiler split, turbine steam, GT fuel,
/// GT waste heat, HRSG recovery, boiler fuel, extraction, turbine power.
///
/// Each entry is `|lhs - rhs| / max(|lhs|, 1 MW)`.
pub fn verify_balance(d: &ChpDispatch, cfg: &PlantConfig) -> [f64; 10] {
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(1.0);
    let x_gt = cfg.gt_fraction(d.p_e_gt);
    let p_e_st = d.p_e_st();
    [
        rel(d.p_e_c, p_e_st + d.p_e_gt),
        rel(d.q_s_c, d.q_ex_st + d.q_s_sb * d.prr),
        rel(d.q_s_sb, d.q_s_sb * d.prr + d.q_sb_st),
        rel(d.q_s_st, d.q_s_hrsg + d.q_sb_st),
        rel(d.p_e_gt, d.q_g_gt * cfg.eta_gt.at(x_gt)),
        rel(d.q_heat, d.q_g_gt - d.p_e_gt),
        rel(d.q_s_hrsg, d.q_heat * cfg.eta_hrsg.at(x_gt)),
        rel(d.q_s_sb, d.q_g_sb * cfg.eta_sb.at(d.q_s_sb / cfg.cap_sb)),
        rel(d.q_ex_st, d.q_s_st * d.er),
        rel(p_e_st, d.q_s_st * cfg.eta_st.at(cfg.st_fraction(p_e_st))),
    ]
}

/// Fuel burned to generate `p` MW for one hour under the lumped
/// threshold accounting.
pub fn accounting_fuel(p: f64, cfg: &PlantConfig) -> f64 {
    p.min(cfg.threshold) / cfg.eta_cc + (p - cfg.threshold).max(0.0) / cfg.eta_peak
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelSavings {
    /// Σ (baseline fuel − optimized fuel), MWh of fuel.
    pub saved_mwh: f64,
    /// `saved_mwh` relative to baseline fuel over hours above the threshold.
    pub percent_of_peak_hours: f64,
    /// `saved_mwh` relative to all baseline fuel.
    pub percent_of_total: f64,
    pub per_hour_saved_mwh: Vec<f64>,
    pub per_hour_percent: Vec<f64>,
}

pub fn fuel_savings(
    baseline: &[f64],
    optimized: &[f64],
    cfg: &PlantConfig,
) -> Result<FuelSavings, PlantError> {
    if baseline.len() != optimized.len() {
        return Err(PlantError::Shape {
            baseline: baseline.len(),
            optimized: optimized.len(),
        });
    }
    if let Some(v) = baseline
        .iter()
        .chain(optimized)
        .find(|v| !(v.is_finite() && **v >= 0.0))
    {
        return Err(PlantError::InvalidInput(format!(
            "generation must be finite and >= 0, got {v}"
        )));
    }
    let mut per_hour_saved_mwh = Vec::with_capacity(baseline.len());
    let mut per_hour_percent = Vec::with_capacity(baseline.len());
    let (mut saved, mut base_total, mut base_peak) = (0.0, 0.0, 0.0);
    for (&b, &o) in baseline.iter().zip(optimized) {
        let fb = accounting_fuel(b, cfg);
        let fo = accounting_fuel(o, cfg);
        let s = fb - fo;
        saved += s;
        base_total += fb;
        if b > cfg.threshold {
            base_peak += fb;
        }
        per_hour_saved_mwh.push(s);
        per_hour_percent.push(if fb > 0.0 { 100.0 * s / fb } else { 0.0 });
    }
    let pct = |den: f64| if den > 0.0 { 100.0 * saved / den } else { 0.0 };
    Ok(FuelSavings {
        saved_mwh: saved,
        percent_of_peak_hours: pct(base_peak),
        percent_of_total: pct(base_total),
        per_hour_saved_mwh,
        per_hour_percent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_residual(d: &ChpDispatch, cfg: &PlantConfig) -> f64 {
        verify_balance(d, cfg).iter().cloned().fold(0.0, f64::max)
    }

    #[test]
    fn peaking_threshold_rule() {
        let cfg = PlantConfig::default();
        assert_eq!(peaking_power(57.0, &cfg).unwrap(), 0.0);
        assert_abs_diff_eq!(peaking_power(62.0, &cfg).unwrap(), 5.0, epsilon = 1e-12);
        assert_eq!(peaking_power(0.0, &cfg).unwrap(), 0.0);
        assert_eq!(peaking_power(65.0, &cfg).unwrap(), 8.0);
        assert!(matches!(
            peaking_power(65.5, &cfg),
            Err(PlantError::InfeasibleDemand { .. })
        ));
        assert!(peaking_power(-1.0, &cfg).is_err());
    }

    #[test]
    fn full_combined_cycle_hand_values() {
        let cfg = PlantConfig::default();
        let d = dispatch_hour(57.0, 20.0, &cfg).unwrap();
        assert_abs_diff_eq!(d.p_e_gt, 32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p_e_st_main, 25.0, epsilon = 1e-12);
        assert_eq!(d.p_e_peak, 0.0);
        assert_abs_diff_eq!(d.q_g_gt, 91.428_571_428_571_43, epsilon = 1e-9);
        assert_abs_diff_eq!(d.q_heat, 59.428_571_428_571_43, epsilon = 1e-9);
        assert_abs_diff_eq!(d.q_s_hrsg, 47.542_857_142_857_14, epsilon = 1e-9);
        // 25 / 0.30 through the turbine, boiler makes up what the HRSG cannot.
        assert_abs_diff_eq!(d.q_s_st, 83.333_333_333_333_33, epsilon = 1e-9);
        assert_abs_diff_eq!(d.q_sb_st, 35.790_476_190_476_19, epsilon = 1e-9);
        assert_abs_diff_eq!(d.q_ex_st, 20.0, epsilon = 1e-12);
        assert_eq!(d.prr, 0.0);
        assert!(d.peaking_standby);
        assert!(max_residual(&d, &cfg) <= 1e-12);
    }

    #[test]
    fn part_load_split_follows_hrsg_steam() {
        // Below the knee all turbine steam is recovered heat:
        // p_st = p_gt * (1/0.35 - 1) * 0.8 * 0.3, p_gt + p_st = 30.
        let cfg = PlantConfig::default();
        let d = dispatch_hour(30.0, 0.0, &cfg).unwrap();
        let ratio = (1.0 / 0.35 - 1.0) * 0.8 * 0.3;
        assert_abs_diff_eq!(d.p_e_gt, 30.0 / (1.0 + ratio), epsilon = 1e-9);
        assert_abs_diff_eq!(d.p_e_st_main, 30.0 * ratio / (1.0 + ratio), epsilon = 1e-9);
        assert_eq!(d.p_e_peak, 0.0);
        assert_eq!(d.q_ex_st, 0.0);
        assert_eq!(d.q_s_sb, 0.0);
        assert_eq!(d.q_g_sb, 0.0);
        assert!(max_residual(&d, &cfg) <= 1e-9);
    }

    #[test]
    fn peaking_steam_comes_from_the_boiler() {
        let cfg = PlantConfig::default();
        let at_57 = dispatch_hour(57.0, 10.0, &cfg).unwrap();
        let at_62 = dispatch_hour(62.0, 10.0, &cfg).unwrap();
        assert_abs_diff_eq!(at_62.p_e_gt, 32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_62.p_e_st_main, 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_62.p_e_peak, 5.0, epsilon = 1e-12);
        assert!(at_62.q_g_sb > at_57.q_g_sb);
        // 5 MW at 0.30 needs 16.67 MW more boiler steam.
        assert_abs_diff_eq!(at_62.q_s_sb - at_57.q_s_sb, 5.0 / 0.3, epsilon = 1e-9);
        assert!(!at_62.peaking_standby);
    }

    #[test]
    fn direct_boiler_steam_covers_extraction_limit() {
        let cfg = PlantConfig {
            max_extraction_fraction: 0.2,
            ..PlantConfig::default()
        };
        let d = dispatch_hour(50.0, 30.0, &cfg).unwrap();
        assert_abs_diff_eq!(d.er, 0.2, epsilon = 1e-12);
        assert!(d.prr > 0.0 && d.prr < 1.0);
        assert!(max_residual(&d, &cfg) <= 1e-9);
    }

    #[test]
    fn dispatch_errors() {
        let cfg = PlantConfig::default();
        assert!(matches!(dispatch_hour(0.0, 1.0, &cfg), Err(PlantError::InvalidInput(_))));
        assert!(matches!(dispatch_hour(10.0, -1.0, &cfg), Err(PlantError::InvalidInput(_))));
        assert!(matches!(
            dispatch_hour(70.0, 1.0, &cfg),
            Err(PlantError::InfeasibleDemand { .. })
        ));
        assert!(matches!(
            dispatch_hour(20.0, 200.0, &cfg),
            Err(PlantError::InfeasibleSteam { .. })
        ));
    }

    #[test]
    fn residuals_flag_perturbation() {
        let cfg = PlantConfig::default();
        let mut d = dispatch_hour(30.0, 5.0, &cfg).unwrap();
        d.q_g_gt *= 1.1;
        let r = verify_balance(&d, &cfg);
        assert_abs_diff_eq!(r[4], 0.1, epsilon = 1e-12);
        assert_eq!(verify_balance(&ChpDispatch::default(), &cfg), [0.0; 10]);
    }

    #[test]
    fn affine_efficiencies_still_balance() {
        let cfg = PlantConfig {
            eta_gt: Efficiency::affine(0.28, 0.08),
            eta_hrsg: Efficiency::affine(0.75, 0.05),
            eta_st: Efficiency::affine(0.25, 0.06),
            eta_sb: Efficiency::affine(0.80, 0.06),
            ..PlantConfig::default()
        };
        cfg.validate().unwrap();
        for p in [5.0, 20.0, 40.0, 56.0, 60.0, 64.5] {
            let d = dispatch_hour(p, 12.0, &cfg).unwrap();
            assert!(max_residual(&d, &cfg) <= 1e-9, "p = {p}");
        }
    }

    #[test]
    fn fuel_savings_worked_examples() {
        let cfg = PlantConfig::default();
        let s = fuel_savings(&[61.0], &[58.0], &cfg).unwrap();
        assert_abs_diff_eq!(s.per_hour_percent[0], 100.0 * 15.0 / 162.5, epsilon = 1e-9);
        let s = fuel_savings(&[64.0], &[59.0], &cfg).unwrap();
        assert_abs_diff_eq!(s.per_hour_percent[0], 100.0 * 25.0 / 177.5, epsilon = 1e-9);
        let s = fuel_savings(&[50.0, 60.0], &[50.0, 60.0], &cfg).unwrap();
        assert_eq!(s.saved_mwh, 0.0);
        assert_eq!(s.percent_of_peak_hours, 0.0);
        assert!(matches!(
            fuel_savings(&[1.0], &[1.0, 2.0], &cfg),
            Err(PlantError::Shape { .. })
        ));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = PlantConfig {
            eta_gt: Efficiency::affine(0.3, 0.05),
            ..PlantConfig::default()
        };
        let text = cfg.to_config_string();
        assert!(text.contains("eta_gt = 0.3, 0.05"));
        assert!(!text.contains("cap_sb"));
        assert_eq!(PlantConfig::from_config_str(&text).unwrap(), cfg);
        assert!(PlantConfig::from_config_str("threshold = 60").is_err());
        assert!(PlantConfig::from_config_str("eta_gt = 1.2").is_err());
    }
}
