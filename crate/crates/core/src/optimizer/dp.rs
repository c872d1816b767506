//! Dynamic-programming reference solver on a discretized state of charge.
//!
//! Stage cost depends only on the hour's own flow, so backward recursion over
//! a SOC grid gives the exact optimum over the discrete action set.

use super::{HourCurve, OptimalSchedule, ScheduleProblem, SolveError};

#[derive(Debug, Clone, PartialEq)]
pub struct DpOptions {
    /// Flow grid spacing, MW. Rounded to a whole multiple of `soc_step`.
    pub action_step: f64,
    /// SOC grid spacing, MWh.
    pub soc_step: f64,
    /// Largest value-table size (states × stages) allowed.
    pub max_cells: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            action_step: 0.5,
            soc_step: 0.5,
            max_cells: 20_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub solution: OptimalSchedule,
    /// Estimated gap between the discrete optimum and the continuous one, MW².
    pub grid_error_bound: f64,
    /// Flow spacing actually used, MW.
    pub action_step: f64,
    pub states: usize,
}

pub fn dp_oracle(
    p: &ScheduleProblem,
    action_step: f64,
    soc_step: f64,
) -> Result<DpSolution, SolveError> {
    dp_oracle_with(
        p,
        &DpOptions {
            action_step,
            soc_step,
            ..DpOptions::default()
        },
    )
}

pub fn dp_oracle_with(p: &ScheduleProblem, opts: &DpOptions) -> Result<DpSolution, SolveError> {
    p.validate()?;
    let n = p.horizon();
    if n > 24 {
        return Err(SolveError::InvalidProblem(format!(
            "dynamic program supports at most 24 hours, got {n}"
        )));
    }
    let h = opts.soc_step;
    if !(h.is_finite() && h > 0.0 && opts.action_step.is_finite() && opts.action_step > 0.0) {
        return Err(SolveError::InvalidProblem("grid steps must be positive".into()));
    }
    let tes = &p.tes;
    // Nodes e_max − i·h; the top anchor makes a halved step a refinement.
    let states = (tes.e_max / h + 1e-9).floor() as usize + 1;
    let cells = states.saturating_mul(n + 1);
    if cells > opts.max_cells {
        return Err(SolveError::Resource {
            cells,
            cap: opts.max_cells,
        });
    }
    let node = |e: f64, what: &str| -> Result<usize, SolveError> {
        let i = (tes.e_max - e) / h;
        let r = i.round();
        if (i - r).abs() > 1e-6 || r < 0.0 || r as usize >= states {
            return Err(SolveError::InvalidProblem(format!(
                "{what} state {e} MWh is not on the {h} MWh grid"
            )));
        }
        Ok(r as usize)
    };
    let start = node(tes.e_initial, "initial")?;
    let end = node(tes.e_terminal, "terminal")?;

    let k = ((opts.action_step / h).round() as i64).max(1);
    let da = k as f64 * h;
    let bounds = p.hour_bounds()?;
    let curves = p.curves()?;

    // Actions per hour as signed multiples m of da, with their stage costs.
    let mut actions: Vec<Vec<(i64, f64)>> = Vec::with_capacity(n);
    for t in 0..n {
        let (lo, hi) = bounds[t];
        let m_lo = (lo / da - 1e-9).ceil() as i64;
        let m_hi = (hi / da + 1e-9).floor() as i64;
        let mut list: Vec<(i64, f64)> = (m_lo..=m_hi)
            .map(|m| {
                let q = (m as f64 * da).clamp(lo, hi);
                (m, (curves[t].generation(q) - p.p_mean).powi(2))
            })
            .collect();
        // Smallest |flow| first so exact ties keep the gentler action.
        list.sort_by_key(|&(m, _)| (m.abs(), m));
        actions.push(list);
    }

    let mut value = vec![f64::INFINITY; states];
    value[end] = 0.0;
    let mut policy = vec![i64::MIN; n * states];
    for t in (0..n).rev() {
        let mut next = vec![f64::INFINITY; states];
        for i in 0..states {
            let mut best = f64::INFINITY;
            let mut arg = i64::MIN;
            for &(m, cost) in &actions[t] {
                // Charging moves toward the top node, i.e. a smaller index.
                let j = i as i64 - m * k;
                if j < 0 || j >= states as i64 {
                    continue;
                }
                let v = cost + value[j as usize];
                if v < best {
                    best = v;
                    arg = m;
                }
            }
            next[i] = best;
            policy[t * states + i] = arg;
        }
        value = next;
    }
    if !value[start].is_finite() {
        return Err(SolveError::Infeasible(
            "no grid path reaches the terminal state".into(),
        ));
    }

    let mut q = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n + 1);
    let mut i = start;
    nodes.push(i);
    for t in 0..n {
        let m = policy[t * states + i];
        let (lo, hi) = bounds[t];
        q.push((m as f64 * da).clamp(lo, hi));
        i = (i as i64 - m * k) as usize;
        nodes.push(i);
    }
    let solution = OptimalSchedule::evaluate(p, q, 0, 0, true, 0.0, 0.0)?;
    let grid_error_bound = error_bound(p, &curves, &bounds, &solution.schedule.q_stor, &nodes, states, da);
    Ok(DpSolution {
        solution,
        grid_error_bound,
        action_step: da,
        states,
    })
}

/// Rounding estimate: moving a continuous schedule onto the grid perturbs
/// each flow by at most `da`. Away from active bounds the first-order change
/// cancels (one multiplier on Σ q), leaving ½ M δ² per hour; hours near a
/// bound also pay a first-order term.
fn error_bound(
    p: &ScheduleProblem,
    curves: &[HourCurve],
    bounds: &[(f64, f64)],
    q: &[f64],
    nodes: &[usize],
    states: usize,
    da: f64,
) -> f64 {
    const SAMPLES: usize = 64;
    let mut total = 0.0;
    for (t, c) in curves.iter().enumerate() {
        let (lo, hi) = bounds[t];
        let mut m2: f64 = 0.0;
        let mut m1: f64 = 0.0;
        for s in 0..=SAMPLES {
            let x = lo + (hi - lo) * s as f64 / SAMPLES as f64;
            let dev = c.generation(x) - p.p_mean;
            let slope = c.slope(x);
            m1 = m1.max((2.0 * dev * slope).abs());
            m2 = m2.max((2.0 * slope * slope + 2.0 * dev * c.curvature(x)).abs());
        }
        let delta = da.min(hi - lo);
        total += 0.5 * m2 * delta * delta;
        // An off-grid box bound leaves a sliver the grid cannot use; paying
        // for it here and for the compensating shift in some other hour.
        let gap_hi = hi - (hi / da + 1e-9).floor() * da;
        let gap_lo = (lo / da - 1e-9).ceil() * da - lo;
        if hi - q[t] < da {
            total += 2.0 * m1 * gap_hi.max(0.0);
        }
        if q[t] - lo < da {
            total += 2.0 * m1 * gap_lo.max(0.0);
        }
        // Interior SOC on the top or bottom node means a chain bound may bind.
        let n = nodes.len() - 1;
        let touches = |pos: usize| pos > 0 && pos < n && (nodes[pos] == 0 || nodes[pos] == states - 1);
        if touches(t) || touches(t + 1) {
            total += m1 * delta;
        }
    }
    total
}
