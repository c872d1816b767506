use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use gridshave::optimizer::{objective, ScheduleProblem};
use gridshave::scenario::{ScenarioError, ScenarioRow, SCENARIO_HEADER};
use gridshave::{
    generate_synthetic, load_scenario, no_storage_baseline, run_optimization, Models, PMeanMode,
    RunReport, Scenario, SolverOptions, SynthParams,
};

/// Chiller power straight from the default COP polynomial.
fn chiller_mw(q: f64, twb: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let plr = q / 156.5;
    let cop = 11.87 - 8.84 * plr - 0.17 * twb - 6.89 * plr * plr + 0.75 * twb * plr
        - 0.01 * twb * twb;
    q / cop
}

fn peak(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn rows_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec(
        (0.0..60.0f64, 0.0..150.0f64, 0.0..40.0f64, 10.0..30.0f64),
        1..50,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_load_is_exact(v in rows_strategy(), seed in any::<u64>(), named in any::<bool>()) {
        let t0 = NaiveDate::from_ymd_opt(2023, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let s = Scenario {
            name: named.then(|| "round trip".to_string()),
            source: Some("synthetic".into()),
            seed: Some(seed),
            rows: v
                .iter()
                .enumerate()
                .map(|(i, &(p_base, q_cool, q_steam, twb))| ScenarioRow {
                    timestamp: t0 + Duration::hours(i as i64),
                    p_base,
                    q_cool,
                    q_steam,
                    twb,
                })
                .collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        s.write(&path).unwrap();
        prop_assert_eq!(load_scenario(&path).unwrap(), s);
    }
}

#[test]
fn default_synthetic_peak_is_campus_scale() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    assert_eq!(s.len(), 72);
    let oracle = peak(s.rows.iter().map(|r| r.p_base + chiller_mw(r.q_cool, r.twb)));
    let m = Models::default();
    let lib = peak(no_storage_baseline(&s, &m.cop, &m.plant, &m.tes).unwrap());
    assert!((oracle - lib).abs() < 1e-9);
    assert!((63.0..=68.0).contains(&oracle), "{oracle}");
}

#[test]
fn zero_schedule_objective_matches_direct_sum() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    let m = Models::default();
    let g: Vec<f64> = s.rows[..24]
        .iter()
        .map(|r| r.p_base + chiller_mw(r.q_cool, r.twb))
        .collect();
    let p_mean = 55.0;
    let want: f64 = g.iter().map(|x| (x - p_mean).powi(2)).sum();
    let p = ScheduleProblem::new(s.loads(0..24), p_mean, m.tes, m.cop, m.plant).unwrap();
    let got = objective(&[0.0; 24], &p).unwrap();
    assert!((got - want).abs() <= 1e-9 * want);
}

#[test]
fn heuristic_shaves_about_two_to_four_mw() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    let m = Models::default();
    let run = run_optimization(&s, &m, &SolverOptions::default(), PMeanMode::PreviousDay).unwrap();
    let d = &run.days[0];
    let no_storage = peak(s.rows[d.range.clone()].iter().map(|r| r.p_base + chiller_mw(r.q_cool, r.twb)));
    let gap = no_storage - peak(d.heuristic_generation.iter().cloned());
    // Read to the nearest MW.
    assert!((2.0..=4.0).contains(&gap.round()), "gap {gap:.3} MW");
    for d in &run.days {
        assert!(d.optimized.objective <= objective(&vec![0.0; 24], &problem_for(&s, d, &m)).unwrap());
    }
}

fn problem_for(s: &Scenario, d: &gridshave::runner::DayRun, m: &Models) -> ScheduleProblem {
    ScheduleProblem::new(
        s.loads(d.range.clone()),
        d.p_mean,
        m.tes.clone(),
        m.cop.clone(),
        m.plant.clone(),
    )
    .unwrap()
}

#[test]
fn report_metrics_follow_from_the_csv() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    let m = Models::default();
    let run = run_optimization(&s, &m, &SolverOptions::default(), PMeanMode::PreviousDay).unwrap();
    let report = RunReport::from_outcome(&s, &run, &m.plant).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write_dir(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();

    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "timestamp,baseline_mw,optimized_mw,no_storage_mw,q_stor_mw,e_stor_mwh,p_ch_mw"
    );
    let cols: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(cols.len(), 72);
    let fuel = |p: f64| p.min(57.0) / 0.40 + (p - 57.0).max(0.0) / 0.20;
    let base_peak = peak(cols.iter().map(|c| c[0]));
    let opt_peak = peak(cols.iter().map(|c| c[1]));
    let saved: f64 = cols.iter().map(|c| fuel(c[0]) - fuel(c[1])).sum();
    let total: f64 = cols.iter().map(|c| fuel(c[0])).sum();

    assert!((report.peak_shaved_mw - (base_peak - opt_peak)).abs() < 1e-9);
    assert!((report.fuel.saved_mwh - saved).abs() < 1e-6);
    assert!((report.fuel.percent_of_total - 100.0 * saved / total).abs() < 1e-6);
    // Cumulative savings are of order one percent.
    assert!((0.1..10.0).contains(&report.fuel.percent_of_total), "{}", report.fuel.percent_of_total);
    let eliminated = cols.iter().filter(|c| c[0] > 57.0 && c[1] <= 57.0).count();
    assert_eq!(report.peaking_hours_eliminated, eliminated);

    let reread = RunReport::read(&dir.path().join("report.csv"), &m.plant).unwrap();
    assert_eq!(reread.rows, report.rows);
    assert_eq!(reread.days.len(), 3);
}

#[test]
fn days_are_solved_independently() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    let m = Models::default();
    let opts = SolverOptions::default();
    let all = run_optimization(&s, &m, &opts, PMeanMode::SameDay).unwrap();
    assert_eq!(all.days.len(), 3);
    for d in &all.days {
        let one = Scenario {
            rows: s.rows[d.range.clone()].to_vec(),
            ..s.clone()
        };
        let alone = run_optimization(&one, &m, &opts, PMeanMode::SameDay).unwrap();
        assert_eq!(alone.days[0].optimized.objective, d.optimized.objective);
        assert_eq!(alone.days[0].optimized.schedule, d.optimized.schedule);
    }
}

#[test]
fn previous_day_target_flags_the_first_day() {
    let s = generate_synthetic(&SynthParams::default()).unwrap();
    let run = run_optimization(&s, &Models::default(), &SolverOptions::default(), PMeanMode::PreviousDay)
        .unwrap();
    assert!(run.days[0].p_mean_fallback);
    assert!(!run.days[1].p_mean_fallback);
    let prev = run.days[0].heuristic_generation.iter().sum::<f64>() / 24.0;
    assert!((run.days[1].p_mean - prev).abs() < 1e-12);
}

fn write(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, text).unwrap();
    (dir, path)
}

fn body(rows: &[(usize, f64)]) -> String {
    let mut s = format!("{SCENARIO_HEADER}\n");
    for &(h, q_cool) in rows {
        s.push_str(&format!(
            "2023-07-01T{:02}:00:00,40,{q_cool},10,24\n",
            h
        ));
    }
    s
}

#[test]
fn load_errors_name_the_row() {
    let rows: Vec<(usize, f64)> = (0..12).map(|h| (h, if h == 9 { -5.0 } else { 80.0 })).collect();
    let (_d, p) = write(&body(&rows));
    match load_scenario(&p) {
        Err(ScenarioError::Row { row, .. }) => assert_eq!(row, 10),
        other => panic!("{other:?}"),
    }

    let (_d, p) = write(&body(&[(0, 80.0), (1, 80.0), (1, 80.0)]));
    assert!(matches!(load_scenario(&p), Err(ScenarioError::Monotonic { .. })));

    let (_d, p) = write(&body(&[(0, 80.0), (3, 80.0)]));
    assert!(matches!(load_scenario(&p), Err(ScenarioError::Gap { hours: 3, .. })));

    let (_d, p) = write("timestamp,p_base_mw\n2023-07-01T00:00:00,40\n");
    assert!(matches!(load_scenario(&p), Err(ScenarioError::Header(_))));

    let (_d, p) = write(&body(&[(0, 80.0)]).replace(",80,", ",eighty,"));
    assert!(matches!(load_scenario(&p), Err(ScenarioError::Row { row: 1, .. })));
}
