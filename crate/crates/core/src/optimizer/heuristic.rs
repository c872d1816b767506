//! Rule-based operator schedule used as the comparison baseline.
//!
//! Overnight the tank is topped up, the afternoon draws it down evenly, and
//! late evening charging returns it to the terminal state.

use std::ops::Range;

use super::{ScheduleProblem, SolveError};
use crate::cooling::StorageSchedule;

/// Hour-of-day windows, half-open.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicWindows {
    pub morning_charge: Range<usize>,
    pub discharge: Range<usize>,
    pub evening_charge: Range<usize>,
}

impl Default for HeuristicWindows {
    fn default() -> Self {
        Self {
            morning_charge: 0..6,
            discharge: 13..20,
            evening_charge: 22..24,
        }
    }
}

pub fn operator_heuristic(p: &ScheduleProblem) -> Result<StorageSchedule, SolveError> {
    if p.horizon() != 24 {
        return Err(SolveError::Shape {
            expected: 24,
            got: p.horizon(),
        });
    }
    operator_heuristic_with(p, &HeuristicWindows::default())
}

pub fn operator_heuristic_with(
    p: &ScheduleProblem,
    w: &HeuristicWindows,
) -> Result<StorageSchedule, SolveError> {
    p.validate()?;
    let n = p.horizon();
    for r in [&w.morning_charge, &w.discharge, &w.evening_charge] {
        if r.end > n || r.start > r.end {
            return Err(SolveError::InvalidProblem(format!(
                "window {}..{} does not fit a {n}-hour horizon",
                r.start, r.end
            )));
        }
    }
    let tes = &p.tes;
    let bounds = p.hour_bounds()?;
    let mut q = vec![0.0; n];

    let mut e = tes.e_initial;
    for t in w.morning_charge.clone() {
        q[t] = bounds[t].1.min(tes.e_max - e).max(0.0);
        e += q[t];
    }

    // Only discharge what the evening window can put back.
    let refill: f64 = w.evening_charge.clone().map(|t| bounds[t].1).sum();
    let budget = (e - tes.e_terminal + refill).min(e).max(0.0);
    let hours: Vec<usize> = w.discharge.clone().collect();
    let caps: Vec<f64> = hours.iter().map(|&t| -bounds[t].0).collect();
    for (&t, d) in hours.iter().zip(water_fill(budget, &caps)) {
        q[t] = -d;
    }

    let mut e: f64 = tes.e_initial + q.iter().sum::<f64>();
    for t in w.evening_charge.clone() {
        q[t] = bounds[t].1.min(tes.e_terminal - e).max(0.0);
        e += q[t];
    }

    // Shortfall (tank started low): charge in any remaining idle hour.
    let mut short = tes.e_terminal - e;
    if short > 1e-9 {
        let mut idle: Vec<usize> = (0..n).filter(|&t| q[t] == 0.0).collect();
        idle.reverse();
        for t in idle {
            let traj = crate::cooling::storage_trajectory(&q, tes);
            let room = traj[t + 1..]
                .iter()
                .fold(f64::INFINITY, |m, &x| m.min(tes.e_max - x));
            let add = bounds[t].1.min(short).min(room).max(0.0);
            q[t] = add;
            short -= add;
            if short <= 1e-9 {
                break;
            }
        }
    }
    if short > 1e-6 {
        return Err(SolveError::Infeasible(format!(
            "rule-based schedule cannot refill the tank to {:.3} MWh",
            tes.e_terminal
        )));
    }
    Ok(StorageSchedule::from_flows(q, tes))
}

/// Split `total` over slots with individual caps as evenly as possible.
fn water_fill(total: f64, caps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; caps.len()];
    let mut open: Vec<usize> = (0..caps.len()).filter(|&i| caps[i] > 0.0).collect();
    let mut left = total.min(caps.iter().sum());
    while !open.is_empty() && left > 1e-12 {
        let share = left / open.len() as f64;
        let mut still = Vec::with_capacity(open.len());
        for &i in &open {
            let room = caps[i] - out[i];
            if room <= share {
                out[i] = caps[i];
                left -= room;
            } else {
                still.push(i);
            }
        }
        if still.len() == open.len() {
            for &i in &still {
                out[i] += share;
            }
            break;
        }
        open = still;
    }
    out
}
