//! Peak-shaving schedule optimization.
//!
//! The only decision variables are the hourly storage flows. Chiller output,
//! chiller power and total generation follow from them hour by hour, so the
//! problem is a smooth separable objective over a polytope: box bounds per
//! hour, a chain of state-of-charge bounds and one terminal equality.

mod dp;
mod heuristic;
mod ipm;

use rand::Rng;
use thiserror::Error;

use crate::config::{ConfigError, ConfigFile, ConfigWriter, FlatConfig};
use crate::cooling::{self, CoolingError, CopModel, StorageSchedule, TesConfig};
use crate::plant::PlantConfig;

pub use dp::{dp_oracle, dp_oracle_with, DpOptions, DpSolution};
pub use heuristic::{operator_heuristic, operator_heuristic_with, HeuristicWindows};
pub use ipm::solve;

/// Weight of the Σ q² tie-break term the solver adds to the objective.
pub const TIE_BREAK_WEIGHT: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("hour {hour}: {source}")]
    PointInfeasible {
        hour: usize,
        #[source]
        source: CoolingError,
    },
    #[error("hour {hour}: non-finite {what}")]
    NonFinite { hour: usize, what: &'static str },
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("dynamic program needs {cells} cells, cap is {cap}; use coarser steps")]
    Resource { cells: usize, cap: usize },
}

/// Exogenous inputs for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourLoad {
    /// Electrical load other than the chilled-water plant, MW.
    pub p_base: f64,
    /// Campus cooling demand, MW.
    pub q_cool: f64,
    /// Campus steam demand, MW.
    pub q_steam: f64,
    /// Wet-bulb temperature, °C.
    pub twb: f64,
}

#[derive(Debug, Clone)]
pub struct ScheduleProblem {
    pub hours: Vec<HourLoad>,
    pub p_mean: f64,
    pub tes: TesConfig,
    pub cop_model: CopModel,
    pub plant: PlantConfig,
}

impl ScheduleProblem {
    pub fn new(
        hours: Vec<HourLoad>,
        p_mean: f64,
        tes: TesConfig,
        cop_model: CopModel,
        plant: PlantConfig,
    ) -> Result<Self, SolveError> {
        let p = Self {
            hours,
            p_mean,
            tes,
            cop_model,
            plant,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let invalid = |m: String| Err(SolveError::InvalidProblem(m));
        if self.hours.len() < 2 {
            return invalid(format!("horizon must be at least 2 hours, got {}", self.hours.len()));
        }
        if !(self.p_mean.is_finite() && self.p_mean > 0.0) {
            return invalid(format!("p_mean must be positive, got {}", self.p_mean));
        }
        self.tes
            .validate()
            .and_then(|_| self.cop_model.validate())
            .map_err(|e| SolveError::InvalidProblem(e.to_string()))?;
        self.plant
            .validate()
            .map_err(|e| SolveError::InvalidProblem(e.to_string()))?;
        for (t, h) in self.hours.iter().enumerate() {
            let fields = [h.p_base, h.q_cool, h.q_steam, h.twb];
            if fields.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::NonFinite { hour: t, what: "input" });
            }
            if h.p_base < 0.0 || h.q_cool < 0.0 || h.q_steam < 0.0 {
                return invalid(format!("hour {t}: negative load"));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.hours.len()
    }

    fn check_len(&self, q_stor: &[f64]) -> Result<(), SolveError> {
        if q_stor.len() != self.horizon() {
            return Err(SolveError::Shape {
                expected: self.horizon(),
                got: q_stor.len(),
            });
        }
        Ok(())
    }

    /// Chiller power in hour `t` with storage flow `q_stor`, guarded.
    pub fn chiller_power(&self, t: usize, q_stor: f64) -> Result<f64, SolveError> {
        let h = &self.hours[t];
        cooling::required_chiller_output(h.q_cool, q_stor)
            .and_then(|q_ch| cooling::chiller_power(q_ch, h.twb, &self.cop_model, &self.tes))
            .map_err(|source| SolveError::PointInfeasible { hour: t, source })
    }

    /// Total generation in hour `t`: base load plus chiller power.
    pub fn generation(&self, t: usize, q_stor: f64) -> Result<f64, SolveError> {
        Ok(self.hours[t].p_base + self.chiller_power(t, q_stor)?)
    }

    pub fn generation_profile(&self, q_stor: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.check_len(q_stor)?;
        q_stor
            .iter()
            .enumerate()
            .map(|(t, &q)| self.generation(t, q))
            .collect()
    }

    pub(crate) fn curves(&self) -> Result<Vec<HourCurve>, SolveError> {
        self.hours
            .iter()
            .enumerate()
            .map(|(t, h)| {
                self.cop_model
                    .check_twb(h.twb)
                    .map_err(|source| SolveError::PointInfeasible { hour: t, source })?;
                let (a, b, c) = self.cop_model.plr_quadratic(h.twb);
                Ok(HourCurve {
                    p_base: h.p_base,
                    q_cool: h.q_cool,
                    q_ch_max: self.tes.q_ch_max,
                    a,
                    b,
                    c,
                })
            })
            .collect()
    }

    /// Per-hour interval of storage flows for which the chillers stay within
    /// capacity, the COP stays above its floor, the rate limit holds and the
    /// plant can serve the resulting load. Each interval contains 0.
    pub fn hour_bounds(&self) -> Result<Vec<(f64, f64)>, SolveError> {
        let curves = self.curves()?;
        let cap = self.plant.capacity();
        let tes = &self.tes;
        let mut out = Vec::with_capacity(curves.len());
        for (t, (h, curve)) in self.hours.iter().zip(&curves).enumerate() {
            if h.q_cool > tes.q_ch_max {
                return Err(SolveError::Infeasible(format!(
                    "hour {t}: cooling demand {:.3} MW exceeds chiller capacity {:.3} MW",
                    h.q_cool, tes.q_ch_max
                )));
            }
            let plr0 = h.q_cool / tes.q_ch_max;
            let (plr_lo, plr_hi) = if h.q_cool == 0.0 {
                // Zero output draws no power; the interval is the floor-side
                // component reachable from PLR 0 if the COP there is valid.
                self.cop_model
                    .admissible_plr_interval(0.0, h.twb)
                    .unwrap_or((0.0, 0.0))
            } else {
                self.cop_model
                    .admissible_plr_interval(plr0, h.twb)
                    .ok_or_else(|| SolveError::PointInfeasible {
                        hour: t,
                        source: CoolingError::DegenerateCop {
                            plr: plr0,
                            twb: h.twb,
                            value: self.cop_model.polynomial(plr0, h.twb),
                            floor: self.cop_model.cop_floor,
                        },
                    })?
            };
            let mut lo = (-tes.rate_max).max(plr_lo * tes.q_ch_max - h.q_cool);
            let mut hi = tes.rate_max.min(plr_hi * tes.q_ch_max - h.q_cool);
            lo = lo.max(-h.q_cool).min(0.0);
            hi = hi.max(0.0);

            let headroom = cap - h.p_base;
            if curve.power(0.0) > headroom {
                return Err(SolveError::Infeasible(format!(
                    "hour {t}: load {:.3} MW exceeds plant capacity {:.3} MW without storage",
                    curve.power(0.0) + h.p_base,
                    cap
                )));
            }
            if curve.power(hi) > headroom {
                let (mut a, mut b) = (0.0, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if curve.power(mid) > headroom {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                hi = a;
            }
            out.push((lo, hi));
        }
        Ok(out)
    }
}

/// Chiller power as an explicit function of the storage flow for one hour.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HourCurve {
    pub p_base: f64,
    pub q_cool: f64,
    pub q_ch_max: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl HourCurve {
    fn plr(&self, q_stor: f64) -> f64 {
        (self.q_cool + q_stor) / self.q_ch_max
    }

    fn cop(&self, plr: f64) -> f64 {
        self.a + plr * (self.b + plr * self.c)
    }

    pub fn power(&self, q_stor: f64) -> f64 {
        let plr = self.plr(q_stor);
        if plr == 0.0 {
            return 0.0;
        }
        self.q_ch_max * plr / self.cop(plr)
    }

    /// d power / d q_stor.
    pub fn slope(&self, q_stor: f64) -> f64 {
        let plr = self.plr(q_stor);
        let cop = self.cop(plr);
        (self.a - self.c * plr * plr) / (cop * cop)
    }

    /// d² power / d q_stor².
    pub fn curvature(&self, q_stor: f64) -> f64 {
        let plr = self.plr(q_stor);
        let cop = self.cop(plr);
        let dcop = self.b + 2.0 * self.c * plr;
        let num = -2.0 * self.c * plr * cop - 2.0 * (self.a - self.c * plr * plr) * dcop;
        num / (cop * cop * cop * self.q_ch_max)
    }

    pub fn generation(&self, q_stor: f64) -> f64 {
        self.p_base + self.power(q_stor)
    }
}

/// Mean of the previous day's hourly generation.
pub fn p_mean(prev_day_generation: &[f64]) -> Result<f64, SolveError> {
    if prev_day_generation.len() != 24 {
        return Err(SolveError::Shape {
            expected: 24,
            got: prev_day_generation.len(),
        });
    }
    if let Some(t) = prev_day_generation.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(SolveError::InvalidProblem(format!(
            "hour {t}: previous-day generation must be positive"
        )));
    }
    Ok(prev_day_generation.iter().sum::<f64>() / 24.0)
}

/// Σ_t (G(t) − p_mean)², MW².
pub fn objective(q_stor: &[f64], p: &ScheduleProblem) -> Result<f64, SolveError> {
    Ok(p.generation_profile(q_stor)?
        .iter()
        .map(|g| (g - p.p_mean).powi(2))
        .sum())
}

/// Analytic gradient of [`objective`] with respect to the storage flows.
pub fn gradient(q_stor: &[f64], p: &ScheduleProblem) -> Result<Vec<f64>, SolveError> {
    let gen = p.generation_profile(q_stor)?;
    let curves = p.curves()?;
    let mut out = Vec::with_capacity(q_stor.len());
    for (t, ((&q, g), c)) in q_stor.iter().zip(&gen).zip(&curves).enumerate() {
        let d = 2.0 * (g - p.p_mean) * c.slope(q);
        if !d.is_finite() {
            return Err(SolveError::NonFinite { hour: t, what: "gradient" });
        }
        out.push(d);
    }
    Ok(out)
}

/// State-of-charge intervals reachable from the initial state (forward) and
/// from which the terminal state is reachable (backward), indexed 0..=T.
pub(crate) fn soc_corridor(
    bounds: &[(f64, f64)],
    tes: &TesConfig,
) -> Result<Vec<(f64, f64)>, SolveError> {
    let n = bounds.len();
    let mut fwd = Vec::with_capacity(n + 1);
    fwd.push((tes.e_initial, tes.e_initial));
    for (t, &(lo, hi)) in bounds.iter().enumerate() {
        let (a, b) = fwd[t];
        let next = ((a + lo).max(0.0), (b + hi).min(tes.e_max));
        if next.0 > next.1 + 1e-9 {
            return Err(SolveError::Infeasible(format!(
                "storage bounds cannot be met at hour {t}"
            )));
        }
        fwd.push(next);
    }
    let mut bwd = vec![(0.0, 0.0); n + 1];
    bwd[n] = (tes.e_terminal, tes.e_terminal);
    for t in (0..n).rev() {
        let (lo, hi) = bounds[t];
        let (a, b) = bwd[t + 1];
        bwd[t] = ((a - hi).max(0.0), (b - lo).min(tes.e_max));
    }
    let mut out = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let lo = fwd[t].0.max(bwd[t].0);
        let hi = fwd[t].1.min(bwd[t].1);
        if lo > hi + 1e-9 {
            return Err(SolveError::Infeasible(format!(
                "terminal state {:.3} MWh unreachable from {:.3} MWh within {} hours",
                tes.e_terminal, tes.e_initial, n
            )));
        }
        out.push((lo, hi.max(lo)));
    }
    Ok(out)
}

/// Uniformly random feasible schedule: the SOC walks through the feasible
/// corridor, each step drawn from the admissible flow interval shrunk by
/// `margin` (fraction of its width) on both sides.
pub fn sample_feasible_schedule<R: Rng + ?Sized>(
    p: &ScheduleProblem,
    margin: f64,
    rng: &mut R,
) -> Result<StorageSchedule, SolveError> {
    let bounds = p.hour_bounds()?;
    let corridor = soc_corridor(&bounds, &p.tes)?;
    let n = bounds.len();
    let mut q = Vec::with_capacity(n);
    let mut e = p.tes.e_initial;
    for t in 0..n {
        let (lo, hi) = bounds[t];
        let (clo, chi) = corridor[t + 1];
        let a = lo.max(clo - e);
        let b = hi.min(chi - e);
        let step = if t + 1 == n {
            p.tes.e_terminal - e
        } else if b > a {
            let w = b - a;
            rng.random_range((a + margin * w)..=(b - margin * w))
        } else {
            a
        };
        q.push(step);
        e += step;
    }
    Ok(StorageSchedule::from_flows(q, &p.tes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub max_function_evals: usize,
    /// Primal feasibility tolerance, MWh.
    pub feasibility_tol: f64,
    /// Relative objective change treated as stalled.
    pub optimality_tol: f64,
    /// Scaled first-order (KKT) residual required for convergence.
    pub kkt_tol: f64,
    /// Initial barrier parameter.
    pub barrier_init: f64,
    /// Fraction of the average complementarity targeted each iteration.
    pub centering: f64,
    /// Fraction-to-the-boundary factor.
    pub boundary_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            max_function_evals: 100_000,
            feasibility_tol: 1e-6,
            optimality_tol: 1e-8,
            kkt_tol: 1e-8,
            barrier_init: 1.0,
            centering: 0.1,
            boundary_fraction: 0.995,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = [
            ("feasibility_tol", self.feasibility_tol),
            ("optimality_tol", self.optimality_tol),
            ("kkt_tol", self.kkt_tol),
            ("barrier_init", self.barrier_init),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolveError::InvalidProblem(format!("{name} must be positive")));
            }
        }
        if !(self.centering > 0.0 && self.centering < 1.0) {
            return Err(SolveError::InvalidProblem("centering must lie in (0, 1)".into()));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            return Err(SolveError::InvalidProblem(
                "boundary_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.max_iterations == 0 || self.max_function_evals == 0 {
            return Err(SolveError::InvalidProblem("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

impl ConfigFile for SolverOptions {
    fn from_flat(cfg: &mut FlatConfig) -> Result<Self, ConfigError> {
        let d = Self::default();
        let out = Self {
            max_iterations: cfg.take_or("max_iterations", d.max_iterations)?,
            max_function_evals: cfg.take_or("max_function_evals", d.max_function_evals)?,
            feasibility_tol: cfg.take_or("feasibility_tol", d.feasibility_tol)?,
            optimality_tol: cfg.take_or("optimality_tol", d.optimality_tol)?,
            kkt_tol: cfg.take_or("kkt_tol", d.kkt_tol)?,
            barrier_init: cfg.take_or("barrier_init", d.barrier_init)?,
            centering: cfg.take_or("centering", d.centering)?,
            boundary_fraction: cfg.take_or("boundary_fraction", d.boundary_fraction)?,
        };
        out.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(out)
    }

    fn write_flat(&self, w: &mut ConfigWriter) {
        w.entry("max_iterations", self.max_iterations)
            .entry("max_function_evals", self.max_function_evals)
            .entry("feasibility_tol", self.feasibility_tol)
            .entry("optimality_tol", self.optimality_tol)
            .entry("kkt_tol", self.kkt_tol)
            .entry("barrier_init", self.barrier_init)
            .entry("centering", self.centering)
            .entry("boundary_fraction", self.boundary_fraction);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSchedule {
    pub schedule: StorageSchedule,
    /// Σ (G − p_mean)², MW², without the tie-break term.
    pub objective: f64,
    pub p_ch: Vec<f64>,
    pub generation: Vec<f64>,
    pub iterations: usize,
    pub function_evals: usize,
    pub converged: bool,
    /// Final scaled stationarity residual.
    pub kkt_residual: f64,
    /// Final primal infeasibility, MWh.
    pub primal_residual: f64,
}

impl OptimalSchedule {
    pub(crate) fn evaluate(
        p: &ScheduleProblem,
        q_stor: Vec<f64>,
        iterations: usize,
        function_evals: usize,
        converged: bool,
        kkt_residual: f64,
        primal_residual: f64,
    ) -> Result<Self, SolveError> {
        let generation = p.generation_profile(&q_stor)?;
        let p_ch = generation
            .iter()
            .zip(&p.hours)
            .map(|(g, h)| g - h.p_base)
            .collect();
        let objective = generation.iter().map(|g| (g - p.p_mean).powi(2)).sum();
        Ok(Self {
            schedule: StorageSchedule::from_flows(q_stor, &p.tes),
            objective,
            p_ch,
            generation,
            iterations,
            function_evals,
            converged,
            kkt_residual,
            primal_residual,
        })
    }

    pub fn peak(&self) -> f64 {
        self.generation.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::peak_problem;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn p_mean_values() {
        assert_eq!(p_mean(&[50.0; 24]).unwrap(), 50.0);
        let mut split = vec![40.0; 12];
        split.extend(vec![60.0; 12]);
        assert_eq!(p_mean(&split).unwrap(), 50.0);
        split.reverse();
        assert_eq!(p_mean(&split).unwrap(), 50.0);
        assert!(matches!(p_mean(&[50.0; 23]), Err(SolveError::Shape { .. })));
    }

    #[test]
    fn objective_zero_at_flat_profile() {
        let p = peak_problem(6);
        let mut flat = p.clone();
        for h in flat.hours.iter_mut() {
            h.p_base = 40.0;
            h.q_cool = 80.0;
            h.twb = 22.0;
        }
        flat.p_mean = flat.generation(0, 0.0).unwrap();
        assert_abs_diff_eq!(objective(&[0.0; 6], &flat).unwrap(), 0.0, epsilon = 1e-20);
        let g = gradient(&[0.0; 6], &flat).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-8));

        // Two hours straddling the mean by ±1 MW.
        let mut two = flat.clone();
        two.hours.truncate(2);
        let g0 = two.generation(0, 0.0).unwrap();
        two.hours[0].p_base += 1.0;
        two.hours[1].p_base -= 1.0;
        two.p_mean = g0;
        assert_abs_diff_eq!(objective(&[0.0; 2], &two).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn objective_matches_direct_recomputation() {
        let p = peak_problem(8);
        let direct: f64 = p
            .hours
            .iter()
            .map(|h| {
                let plr = h.q_cool / 156.5;
                let cop = 11.87 - 8.84 * plr - 0.17 * h.twb - 6.89 * plr * plr
                    + 0.75 * h.twb * plr
                    - 0.01 * h.twb * h.twb;
                (h.p_base + h.q_cool / cop - p.p_mean).powi(2)
            })
            .sum();
        assert_abs_diff_eq!(objective(&[0.0; 8], &p).unwrap(), direct, epsilon = 1e-9);
        assert!(matches!(objective(&[0.0; 3], &p), Err(SolveError::Shape { .. })));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = peak_problem(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = sample_feasible_schedule(&p, 0.05, &mut rng).unwrap();
            let g = gradient(&s.q_stor, &p).unwrap();
            for t in 0..8 {
                let h = 1e-4;
                let mut up = s.q_stor.clone();
                let mut dn = s.q_stor.clone();
                up[t] += h;
                dn[t] -= h;
                let fd = (objective(&up, &p).unwrap() - objective(&dn, &p).unwrap()) / (2.0 * h);
                assert!((fd - g[t]).abs() / g[t].abs().max(fd.abs()).max(1.0) <= 1e-5);
            }
        }
    }

    #[test]
    fn curvature_matches_slope_differences() {
        let p = peak_problem(4);
        let c = p.curves().unwrap()[1];
        for q in [-20.0, -5.0, 0.0, 12.0, 30.0] {
            let h = 1e-4;
            let fd = (c.slope(q + h) - c.slope(q - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, c.curvature(q), epsilon = 1e-8);
            let fd = (c.power(q + h) - c.power(q - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, c.slope(q), epsilon = 1e-8);
        }
    }

    #[test]
    fn gradient_sign_follows_deviation() {
        let p = peak_problem(8);
        let gen = p.generation_profile(&[0.0; 8]).unwrap();
        let g = gradient(&[0.0; 8], &p).unwrap();
        for t in 0..8 {
            assert_eq!(g[t].signum(), (gen[t] - p.p_mean).signum());
        }
    }

    #[test]
    fn bounds_contain_zero_and_respect_limits() {
        let p = peak_problem(8);
        for (t, (lo, hi)) in p.hour_bounds().unwrap().into_iter().enumerate() {
            assert!(lo <= 0.0 && hi >= 0.0);
            assert!(lo >= -31.7 - 1e-12 && hi <= 31.7 + 1e-12);
            assert!(p.hours[t].q_cool + lo >= 0.0);
        }
        // Hot wet-bulb pushes the low-PLR side under the COP floor.
        let mut hot = p.clone();
        hot.hours[0].twb = 28.5;
        hot.hours[0].q_cool = 40.0;
        let (lo, _) = hot.hour_bounds().unwrap()[0];
        let plr = (40.0 + lo) / 156.5;
        assert_abs_diff_eq!(hot.cop_model.polynomial(plr, 28.5), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn plant_capacity_caps_charging() {
        let mut p = peak_problem(4);
        p.hours[2].p_base = 56.0;
        p.hours[2].q_cool = 40.0;
        let (_, hi) = p.hour_bounds().unwrap()[2];
        assert!(hi < 31.7);
        assert_abs_diff_eq!(p.generation(2, hi).unwrap(), 65.0, epsilon = 1e-9);
    }

    #[test]
    fn corridor_rejects_unbridgeable_terminal() {
        let mut p = peak_problem(4);
        p.tes.e_initial = 0.0;
        assert!(matches!(
            soc_corridor(&p.hour_bounds().unwrap(), &p.tes),
            Err(SolveError::Infeasible(_))
        ));
    }

    #[test]
    fn solver_options_round_trip() {
        let o = SolverOptions {
            max_iterations: 300,
            ..SolverOptions::default()
        };
        assert_eq!(SolverOptions::from_config_str(&o.to_config_string()).unwrap(), o);
        assert!(SolverOptions::from_config_str("feasibility_tol = 0").is_err());
    }
}
