//! Run reports: per-hour table, peak and fuel metrics, CSV and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::plant::{dispatch_hour, fuel_savings, FuelSavings, PlantConfig, PlantError};
use crate::runner::RunOutcome;
use crate::scenario::Scenario;

pub const REPORT_HEADER: &str =
    "timestamp,baseline_mw,optimized_mw,no_storage_mw,q_stor_mw,e_stor_mwh,p_ch_mw";
pub const SCHEDULE_HEADER: &str = "timestamp,q_stor_mw,e_stor_mwh";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("series lengths differ: {0}")]
    Shape(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub timestamp: NaiveDateTime,
    /// Generation under the rule-based operator schedule, MW.
    pub baseline: f64,
    pub optimized: f64,
    pub no_storage: f64,
    pub q_stor: f64,
    /// Storage level at the end of the hour, MWh.
    pub e_stor: f64,
    pub p_ch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayStats {
    pub day: usize,
    pub p_mean: f64,
    pub p_mean_fallback: bool,
    pub objective: f64,
    pub baseline_objective: f64,
    pub iterations: usize,
    pub function_evals: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub threshold: f64,
    pub baseline_peak: f64,
    pub optimized_peak: f64,
    pub no_storage_peak: f64,
    /// baseline_peak − optimized_peak, MW.
    pub peak_shaved_mw: f64,
    pub peak_shaved_percent: f64,
    pub fuel: FuelSavings,
    /// Hours above the threshold under the baseline but not after optimizing.
    pub peaking_hours_eliminated: usize,
    pub days: Vec<DayStats>,
}

fn max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

impl RunReport {
    pub fn from_rows(
        rows: Vec<ReportRow>,
        days: Vec<DayStats>,
        plant: &PlantConfig,
    ) -> Result<Self, ReportError> {
        let baseline: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
        let optimized: Vec<f64> = rows.iter().map(|r| r.optimized).collect();
        let fuel = fuel_savings(&baseline, &optimized, plant)?;
        let baseline_peak = max(baseline.iter().cloned());
        let optimized_peak = max(optimized.iter().cloned());
        let no_storage_peak = max(rows.iter().map(|r| r.no_storage));
        let peak_shaved_mw = baseline_peak - optimized_peak;
        let peak_shaved_percent = if baseline_peak > 0.0 {
            100.0 * peak_shaved_mw / baseline_peak
        } else {
            0.0
        };
        let peaking_hours_eliminated = rows
            .iter()
            .filter(|r| r.baseline > plant.threshold && r.optimized <= plant.threshold)
            .count();
        Ok(Self {
            rows,
            threshold: plant.threshold,
            baseline_peak,
            optimized_peak,
            no_storage_peak,
            peak_shaved_mw,
            peak_shaved_percent,
            fuel,
            peaking_hours_eliminated,
            days,
        })
    }

    pub fn from_outcome(
        s: &Scenario,
        run: &RunOutcome,
        plant: &PlantConfig,
    ) -> Result<Self, ReportError> {
        let mut rows = Vec::with_capacity(s.len());
        let mut days = Vec::with_capacity(run.days.len());
        for d in &run.days {
            let o = &d.optimized;
            for (i, t) in d.range.clone().enumerate() {
                rows.push(ReportRow {
                    timestamp: s.rows[t].timestamp,
                    baseline: d.heuristic_generation[i],
                    optimized: o.generation[i],
                    no_storage: d.no_storage[i],
                    q_stor: o.schedule.q_stor[i],
                    e_stor: o.schedule.e_stor[i + 1],
                    p_ch: o.p_ch[i],
                });
            }
            days.push(DayStats {
                day: d.day,
                p_mean: d.p_mean,
                p_mean_fallback: d.p_mean_fallback,
                objective: o.objective,
                baseline_objective: d.heuristic_objective,
                iterations: o.iterations,
                function_evals: o.function_evals,
                converged: o.converged,
                kkt_residual: o.kkt_residual,
            });
        }
        if rows.len() != s.len() {
            return Err(ReportError::Shape(format!(
                "{} report rows for {} scenario rows",
                rows.len(),
                s.len()
            )));
        }
        Self::from_rows(rows, days, plant)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for d in &self.days {
            writeln!(
                s,
                "# day {}: p_mean={} fallback={} objective={} baseline_objective={} iterations={} evals={} converged={} kkt={}",
                d.day + 1,
                d.p_mean,
                d.p_mean_fallback,
                d.objective,
                d.baseline_objective,
                d.iterations,
                d.function_evals,
                d.converged,
                d.kkt_residual
            )
            .unwrap();
        }
        s.push_str(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.timestamp.format(TIMESTAMP_FORMAT),
                r.baseline,
                r.optimized,
                r.no_storage,
                r.q_stor,
                r.e_stor,
                r.p_ch
            )
            .unwrap();
        }
        s
    }

    pub fn schedule_csv_string(&self) -> String {
        let mut s = String::from(SCHEDULE_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{},{},{}", r.timestamp.format(TIMESTAMP_FORMAT), r.q_stor, r.e_stor).unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "hours: {}", self.rows.len()).unwrap();
        writeln!(s, "peak without storage: {:.3} MW", self.no_storage_peak).unwrap();
        writeln!(s, "peak, rule-based schedule: {:.3} MW", self.baseline_peak).unwrap();
        writeln!(s, "peak, optimized schedule: {:.3} MW", self.optimized_peak).unwrap();
        writeln!(
            s,
            "peak shaved: {:.3} MW ({:.2}%)",
            self.peak_shaved_mw, self.peak_shaved_percent
        )
        .unwrap();
        writeln!(
            s,
            "fuel saved: {:.3} MWh ({:.3}% of total, {:.2}% of hours above {} MW)",
            self.fuel.saved_mwh, self.fuel.percent_of_total, self.fuel.percent_of_peak_hours, self.threshold
        )
        .unwrap();
        writeln!(s, "peaking hours eliminated: {}", self.peaking_hours_eliminated).unwrap();
        for d in &self.days {
            writeln!(
                s,
                "day {}: p_mean {:.3} MW{}, objective {:.4} (rule-based {:.4}), {} iterations, {} evaluations, kkt {:.2e}, {}",
                d.day + 1,
                d.p_mean,
                if d.p_mean_fallback { " (same-day fallback)" } else { "" },
                d.objective,
                d.baseline_objective,
                d.iterations,
                d.function_evals,
                d.kkt_residual,
                if d.converged { "converged" } else { "NOT converged" }
            )
            .unwrap();
        }
        s
    }

    /// Line chart of the three generation profiles and the threshold.
    pub fn svg(&self) -> String {
        let (w, h) = (900.0, 420.0);
        let (left, right, top, bottom) = (60.0, 20.0, 20.0, 50.0);
        let n = self.rows.len().max(2);
        let all = self
            .rows
            .iter()
            .flat_map(|r| [r.baseline, r.optimized, r.no_storage])
            .chain([self.threshold]);
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (lo, hi) = ((lo - 2.0).floor(), (hi + 2.0).ceil());
        let x = |i: usize| left + (w - left - right) * i as f64 / (n - 1) as f64;
        let y = |v: f64| top + (h - top - bottom) * (hi - v) / (hi - lo).max(1e-9);
        let line = |f: fn(&ReportRow) -> f64| -> String {
            self.rows
                .iter()
                .enumerate()
                .map(|(i, r)| format!("{:.2},{:.2}", x(i), y(f(r))))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<line x1="{left}" y1="{:.2}" x2="{left}" y2="{:.2}" stroke="black"/>"#,
            top,
            h - bottom
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
            h - bottom,
            w - right,
            h - bottom
        )
        .unwrap();
        let mut v = lo;
        while v <= hi {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v}</text>"#,
                left - 6.0,
                y(v) + 4.0
            )
            .unwrap();
            v += ((hi - lo) / 6.0).ceil().max(1.0);
        }
        for i in (0..self.rows.len()).step_by(6) {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{i}</text>"#,
                x(i),
                h - bottom + 16.0
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">hour</text>"#,
            (left + w - right) / 2.0,
            h - 12.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<line id="threshold" x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
            y(self.threshold),
            w - right,
            y(self.threshold)
        )
        .unwrap();
        for (id, color, f) in [
            ("no_storage", "#999999", (|r: &ReportRow| r.no_storage) as fn(&ReportRow) -> f64),
            ("baseline", "#d62728", |r: &ReportRow| r.baseline),
            ("optimized", "#1f77b4", |r: &ReportRow| r.optimized),
        ] {
            writeln!(
                s,
                r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                line(f)
            )
            .unwrap();
        }
        for (i, (label, color)) in [
            ("no storage", "#999999"),
            ("rule-based", "#d62728"),
            ("optimized", "#1f77b4"),
            ("threshold", "gray"),
        ]
        .iter()
        .enumerate()
        {
            let ly = top + 14.0 * (i as f64 + 1.0);
            writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}" font-size="11" fill="{color}">{label}</text>"#,
                w - right - 90.0
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }

    /// Per-hour plant dispatch for the optimized generation.
    pub fn dispatch_csv_string(&self, steam: &[f64], plant: &PlantConfig) -> Result<String, ReportError> {
        if steam.len() != self.rows.len() {
            return Err(ReportError::Shape(format!(
                "{} steam values for {} rows",
                steam.len(),
                self.rows.len()
            )));
        }
        let mut s = String::from(
            "timestamp,p_e_c_mw,p_e_gt_mw,p_e_st_mw,p_e_peak_mw,q_s_c_mw,q_s_st_mw,q_s_hrsg_mw,q_s_sb_mw,q_ex_st_mw,prr_mw,fuel_mw\n",
        );
        for (r, &q) in self.rows.iter().zip(steam) {
            let d = dispatch_hour(r.optimized, q, plant)?;
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.timestamp.format(TIMESTAMP_FORMAT),
                d.p_e_c,
                d.p_e_gt,
                d.p_e_st_main,
                d.p_e_peak,
                d.q_s_c,
                d.q_s_st,
                d.q_s_hrsg,
                d.q_s_sb,
                d.q_ex_st,
                d.prr,
                d.total_fuel()
            )
            .unwrap();
        }
        Ok(s)
    }

    pub fn parse_csv(text: &str, path: &Path, plant: &PlantConfig) -> Result<Self, ReportError> {
        let perr = |row: usize, message: String| ReportError::Parse {
            path: path.to_path_buf(),
            row,
            message,
        };
        let mut days = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# day ") {
                days.push(parse_day(rest).ok_or_else(|| perr(0, format!("bad day line `{line}`")))?);
            } else if !line.starts_with('#') {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd
            .headers()
            .map_err(|e| perr(0, e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != REPORT_HEADER {
            return Err(perr(0, format!("header must be `{REPORT_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| perr(row, e.to_string()))?;
            let timestamp = NaiveDateTime::parse_from_str(&rec[0], TIMESTAMP_FORMAT)
                .map_err(|e| perr(row, e.to_string()))?;
            let num = |c: usize| rec[c].parse::<f64>().map_err(|e| perr(row, e.to_string()));
            rows.push(ReportRow {
                timestamp,
                baseline: num(1)?,
                optimized: num(2)?,
                no_storage: num(3)?,
                q_stor: num(4)?,
                e_stor: num(5)?,
                p_ch: num(6)?,
            });
        }
        Self::from_rows(rows, days, plant)
    }

    pub fn read(path: &Path, plant: &PlantConfig) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, path, plant)
    }

    /// Writes report.csv, schedule.csv, profile.svg and summary.txt.
    pub fn write_dir(&self, dir: &Path) -> Result<(), ReportError> {
        fs::create_dir_all(dir).map_err(|source| ReportError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, body) in [
            ("report.csv", self.to_csv_string()),
            ("schedule.csv", self.schedule_csv_string()),
            ("profile.svg", self.svg()),
            ("summary.txt", self.summary()),
        ] {
            write_file(&dir.join(name), &body)?;
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<(), ReportError> {
    fs::write(path, body).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_day(rest: &str) -> Option<DayStats> {
    let (num, kv) = rest.split_once(':')?;
    let day = num.trim().parse::<usize>().ok()?.checked_sub(1)?;
    let mut get = std::collections::HashMap::new();
    for part in kv.split_whitespace() {
        let (k, v) = part.split_once('=')?;
        get.insert(k, v);
    }
    Some(DayStats {
        day,
        p_mean: get.get("p_mean")?.parse().ok()?,
        p_mean_fallback: get.get("fallback")?.parse().ok()?,
        objective: get.get("objective")?.parse().ok()?,
        baseline_objective: get.get("baseline_objective")?.parse().ok()?,
        iterations: get.get("iterations")?.parse().ok()?,
        function_evals: get.get("evals")?.parse().ok()?,
        converged: get.get("converged")?.parse().ok()?,
        kkt_residual: get.get("kkt")?.parse().ok()?,
    })
}

/// Storage flows from a schedule CSV, one per row.
pub fn read_schedule(path: &Path) -> Result<Vec<f64>, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let perr = |row: usize, message: String| ReportError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let headers = rd.headers().map_err(|e| perr(0, e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "q_stor_mw")
        .ok_or_else(|| perr(0, "missing q_stor_mw column".into()))?;
    rd.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| perr(i + 1, e.to_string()))?;
            rec[col]
                .parse::<f64>()
                .map_err(|e| perr(i + 1, format!("q_stor_mw: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn rows(base: &[f64], opt: &[f64]) -> Vec<ReportRow> {
        let t0 = NaiveDate::from_ymd_opt(2023, 9, 10).unwrap().and_hms_opt(0, 0, 0).unwrap();
        base.iter()
            .zip(opt)
            .enumerate()
            .map(|(i, (&b, &o))| ReportRow {
                timestamp: t0 + chrono::TimeDelta::hours(i as i64),
                baseline: b,
                optimized: o,
                no_storage: b + 1.0,
                q_stor: 0.0,
                e_stor: 175.6,
                p_ch: 10.0,
            })
            .collect()
    }

    #[test]
    fn identical_profiles_shave_nothing() {
        let r = RunReport::from_rows(rows(&[50.0, 60.0], &[50.0, 60.0]), vec![], &PlantConfig::default())
            .unwrap();
        assert_eq!(r.peak_shaved_mw, 0.0);
        assert_eq!(r.fuel.percent_of_total, 0.0);
        assert_eq!(r.peaking_hours_eliminated, 0);
    }

    #[test]
    fn threshold_crossings_counted() {
        let r = RunReport::from_rows(
            rows(&[50.0, 61.0, 59.0], &[52.0, 57.0, 58.0]),
            vec![],
            &PlantConfig::default(),
        )
        .unwrap();
        assert_eq!(r.peaking_hours_eliminated, 1);
        assert_eq!(r.peak_shaved_mw, 3.0);
    }

    #[test]
    fn csv_round_trip() {
        let days = vec![DayStats {
            day: 0,
            p_mean: 51.25,
            p_mean_fallback: true,
            objective: 12.5,
            baseline_objective: 20.0,
            iterations: 17,
            function_evals: 30,
            converged: true,
            kkt_residual: 1e-9,
        }];
        let r = RunReport::from_rows(rows(&[50.0, 61.0], &[52.0, 57.0]), days, &PlantConfig::default())
            .unwrap();
        let back = RunReport::parse_csv(&r.to_csv_string(), Path::new("x"), &PlantConfig::default())
            .unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn svg_has_three_profiles_and_threshold() {
        let r = RunReport::from_rows(rows(&[50.0, 61.0], &[52.0, 57.0]), vec![], &PlantConfig::default())
            .unwrap();
        let svg = r.svg();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(r#"id="threshold""#));
    }
}
