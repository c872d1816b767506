//! Multi-day runs: split a scenario at midnight and solve each day.

use std::ops::Range;

use log::info;
use rayon::prelude::*;
use thiserror::Error;

use crate::cooling::{check_schedule, StorageSchedule};
use crate::optimizer::{
    self, operator_heuristic, OptimalSchedule, ScheduleProblem, SolveError, SolverOptions,
};
use crate::scenario::{no_storage_baseline, Models, Scenario, ScenarioError};

pub const THREADS_ENV: &str = "GRIDSHAVE_THREADS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("day {day}: {source}")]
    Day {
        day: usize,
        #[source]
        source: SolveError,
    },
    #[error("{0}")]
    Schedule(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Where the flat-profile target of each day comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PMeanMode {
    /// Mean of the previous day's rule-based generation; the first day
    /// falls back to its own.
    #[default]
    PreviousDay,
    /// Mean of the same day's rule-based generation.
    SameDay,
}

#[derive(Debug, Clone)]
pub struct DayRun {
    pub day: usize,
    pub range: Range<usize>,
    pub p_mean: f64,
    /// The target had to come from the same day.
    pub p_mean_fallback: bool,
    pub no_storage: Vec<f64>,
    pub heuristic: StorageSchedule,
    pub heuristic_generation: Vec<f64>,
    pub heuristic_objective: f64,
    pub optimized: OptimalSchedule,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub days: Vec<DayRun>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.days.iter().all(|d| d.optimized.converged)
    }

    pub fn concat<F: Fn(&DayRun) -> &[f64]>(&self, f: F) -> Vec<f64> {
        self.days.iter().flat_map(|d| f(d).iter().cloned()).collect()
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn pool() -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| RunError::Pool(e.to_string()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct DayPrep {
    range: Range<usize>,
    problem: ScheduleProblem,
    no_storage: Vec<f64>,
    heuristic: StorageSchedule,
    heuristic_generation: Vec<f64>,
}

fn prepare(s: &Scenario, m: &Models) -> Result<Vec<DayPrep>, RunError> {
    let mut out = Vec::new();
    for (day, range) in s.days()?.into_iter().enumerate() {
        let err = |source| RunError::Day { day, source };
        let sub = Scenario {
            rows: s.rows[range.clone()].to_vec(),
            ..Scenario::default()
        };
        let no_storage = no_storage_baseline(&sub, &m.cop, &m.plant, &m.tes).map_err(err)?;
        let problem = ScheduleProblem::new(
            s.loads(range.clone()),
            mean(&no_storage),
            m.tes.clone(),
            m.cop.clone(),
            m.plant.clone(),
        )
        .map_err(err)?;
        let heuristic = operator_heuristic(&problem).map_err(err)?;
        let heuristic_generation = problem.generation_profile(&heuristic.q_stor).map_err(err)?;
        out.push(DayPrep {
            range,
            problem,
            no_storage,
            heuristic,
            heuristic_generation,
        });
    }
    Ok(out)
}

/// Solves every day of the scenario independently, in parallel.
pub fn run_optimization(
    s: &Scenario,
    m: &Models,
    opts: &SolverOptions,
    mode: PMeanMode,
) -> Result<RunOutcome, RunError> {
    let mut preps = prepare(s, m)?;
    let targets: Vec<(f64, bool)> = (0..preps.len())
        .map(|d| match (mode, d) {
            (PMeanMode::PreviousDay, d) if d > 0 => {
                (optimizer::p_mean(&preps[d - 1].heuristic_generation), false)
            }
            (PMeanMode::PreviousDay, _) => (optimizer::p_mean(&preps[d].heuristic_generation), true),
            (PMeanMode::SameDay, _) => (optimizer::p_mean(&preps[d].heuristic_generation), false),
        })
        .map(|(r, f)| r.map(|v| (v, f)))
        .collect::<Result<_, _>>()
        .map_err(|source| RunError::Day { day: 0, source })?;
    for (prep, &(pm, _)) in preps.iter_mut().zip(&targets) {
        prep.problem.p_mean = pm;
    }
    if mode == PMeanMode::PreviousDay {
        info!("day 1 has no previous day; its target uses the same-day mean");
    }

    let solved: Vec<Result<OptimalSchedule, SolveError>> = pool()?.install(|| {
        preps
            .par_iter()
            .map(|prep| optimizer::solve(&prep.problem, opts))
            .collect()
    });

    let mut days = Vec::with_capacity(preps.len());
    for (day, ((prep, res), (p_mean, fallback))) in
        preps.into_iter().zip(solved).zip(targets).enumerate()
    {
        let optimized = res.map_err(|source| RunError::Day { day, source })?;
        let heuristic_objective = optimizer::objective(&prep.heuristic.q_stor, &prep.problem)
            .map_err(|source| RunError::Day { day, source })?;
        info!(
            "day {}: objective {:.3} (rule-based {:.3}), peak {:.2} MW, {} iterations{}",
            day + 1,
            optimized.objective,
            heuristic_objective,
            optimized.peak(),
            optimized.iterations,
            if optimized.converged { "" } else { ", not converged" }
        );
        days.push(DayRun {
            day,
            range: prep.range,
            p_mean,
            p_mean_fallback: fallback,
            no_storage: prep.no_storage,
            heuristic: prep.heuristic,
            heuristic_generation: prep.heuristic_generation,
            heuristic_objective,
            optimized,
        });
    }
    Ok(RunOutcome { days })
}

/// Evaluates a given storage schedule in place of the optimizer.
pub fn run_fixed_schedule(
    s: &Scenario,
    m: &Models,
    q_stor: &[f64],
    mode: PMeanMode,
) -> Result<RunOutcome, RunError> {
    if q_stor.len() != s.len() {
        return Err(RunError::Schedule(format!(
            "schedule has {} rows, scenario has {}",
            q_stor.len(),
            s.len()
        )));
    }
    let mut preps = prepare(s, m)?;
    let n_days = preps.len();
    let mut days = Vec::with_capacity(n_days);
    let prev_means: Vec<f64> = preps.iter().map(|p| mean(&p.heuristic_generation)).collect();
    for (day, prep) in preps.iter_mut().enumerate() {
        let (p_mean, fallback) = match mode {
            PMeanMode::PreviousDay if day > 0 => (prev_means[day - 1], false),
            PMeanMode::PreviousDay => (prev_means[day], true),
            PMeanMode::SameDay => (prev_means[day], false),
        };
        prep.problem.p_mean = p_mean;
        let q = q_stor[prep.range.clone()].to_vec();
        let sched = StorageSchedule::from_flows(q.clone(), &m.tes);
        let v = check_schedule(&sched, &m.tes, 1e-6);
        if !v.is_empty() {
            return Err(RunError::Schedule(format!("day {}: {:?}", day + 1, v[0])));
        }
        let err = |source| RunError::Day { day, source };
        let optimized = OptimalSchedule::evaluate(&prep.problem, q, 0, 0, true, 0.0, 0.0)
            .map_err(err)?;
        let heuristic_objective =
            optimizer::objective(&prep.heuristic.q_stor, &prep.problem).map_err(err)?;
        days.push(DayRun {
            day,
            range: prep.range.clone(),
            p_mean,
            p_mean_fallback: fallback,
            no_storage: prep.no_storage.clone(),
            heuristic: prep.heuristic.clone(),
            heuristic_generation: prep.heuristic_generation.clone(),
            heuristic_objective,
            optimized,
        });
    }
    Ok(RunOutcome { days })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthParams};

    #[test]
    fn days_match_standalone_solves() {
        let s = generate_synthetic(&SynthParams::default()).unwrap();
        let m = Models::default();
        let opts = SolverOptions::default();
        let all = run_optimization(&s, &m, &opts, PMeanMode::SameDay).unwrap();
        for d in &all.days {
            let one = Scenario {
                rows: s.rows[d.range.clone()].to_vec(),
                ..s.clone()
            };
            let alone = run_optimization(&one, &m, &opts, PMeanMode::SameDay).unwrap();
            assert_eq!(alone.days[0].optimized.objective, d.optimized.objective);
        }
    }

    #[test]
    fn fixed_schedule_of_zeros_reproduces_no_storage() {
        let s = generate_synthetic(&SynthParams::default()).unwrap();
        let m = Models::default();
        let r = run_fixed_schedule(&s, &m, &vec![0.0; s.len()], PMeanMode::SameDay).unwrap();
        for d in &r.days {
            assert_eq!(d.optimized.generation, d.no_storage);
        }
    }
}
