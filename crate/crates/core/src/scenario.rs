//! Hourly scenario files: campus loads and weather.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use chrono::{NaiveDateTime, Timelike};
use log::info;
use thiserror::Error;

use crate::cooling::{self, CopModel, TesConfig};
use crate::optimizer::{HourLoad, SolveError};
use crate::plant::PlantConfig;

pub const SCENARIO_HEADER: &str = "timestamp,p_base_mw,q_cool_mw,q_steam_mw,twb_c";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("header must be `{SCENARIO_HEADER}`, found `{0}`")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: timestamp {timestamp} does not follow the previous row")]
    Monotonic { row: usize, timestamp: NaiveDateTime },
    #[error("row {row}: {hours} h gap before {timestamp}; rows must be hourly")]
    Gap {
        row: usize,
        timestamp: NaiveDateTime,
        hours: i64,
    },
    #[error("scenario has no rows")]
    Empty,
    #[error("{0}")]
    Days(String),
    #[error("metadata line {line}: {message}")]
    Metadata { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioRow {
    pub timestamp: NaiveDateTime,
    pub p_base: f64,
    pub q_cool: f64,
    pub q_steam: f64,
    pub twb: f64,
}

impl ScenarioRow {
    pub fn load(&self) -> HourLoad {
        HourLoad {
            p_base: self.p_base,
            q_cool: self.q_cool,
            q_steam: self.q_steam,
            twb: self.twb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub name: Option<String>,
    pub source: Option<String>,
    pub seed: Option<u64>,
    pub rows: Vec<ScenarioRow>,
}

/// The physical models a run is evaluated against.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub plant: PlantConfig,
    pub cop: CopModel,
    pub tes: TesConfig,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-level checks. Row numbers in errors count data rows from 1.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.rows.is_empty() {
            return Err(ScenarioError::Empty);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let row = i + 1;
            for (name, v) in [
                ("p_base_mw", r.p_base),
                ("q_cool_mw", r.q_cool),
                ("q_steam_mw", r.q_steam),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return Err(ScenarioError::Row {
                        row,
                        message: format!("{name} must be finite and >= 0, got {v}"),
                    });
                }
            }
            if !r.twb.is_finite() {
                return Err(ScenarioError::Row {
                    row,
                    message: format!("twb_c must be finite, got {}", r.twb),
                });
            }
            if i > 0 {
                let prev = self.rows[i - 1].timestamp;
                let hours = (r.timestamp - prev).num_seconds();
                if hours <= 0 {
                    return Err(ScenarioError::Monotonic {
                        row,
                        timestamp: r.timestamp,
                    });
                }
                if hours != 3600 {
                    return Err(ScenarioError::Gap {
                        row,
                        timestamp: r.timestamp,
                        hours: hours / 3600,
                    });
                }
            }
        }
        Ok(())
    }

    /// Row ranges of whole days; the scenario must start at midnight.
    pub fn days(&self) -> Result<Vec<Range<usize>>, ScenarioError> {
        let first = self.rows.first().ok_or(ScenarioError::Empty)?;
        if first.timestamp.time().num_seconds_from_midnight() != 0 {
            return Err(ScenarioError::Days(format!(
                "daily optimization needs a midnight start, first row is {}",
                first.timestamp
            )));
        }
        if self.rows.len() % 24 != 0 {
            return Err(ScenarioError::Days(format!(
                "daily optimization needs whole days, got {} rows",
                self.rows.len()
            )));
        }
        Ok((0..self.rows.len() / 24).map(|d| d * 24..d * 24 + 24).collect())
    }

    pub fn loads(&self, range: Range<usize>) -> Vec<HourLoad> {
        self.rows[range].iter().map(ScenarioRow::load).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut out = Scenario::default();
        let mut body = String::with_capacity(text.len());
        let mut in_header = true;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if in_header && trimmed.starts_with('#') {
                let meta = trimmed.trim_start_matches('#').trim();
                if let Some((k, v)) = meta.split_once(':') {
                    let v = v.trim().to_string();
                    match k.trim() {
                        "name" => out.name = Some(v),
                        "source" => out.source = Some(v),
                        "seed" => {
                            out.seed = Some(v.parse().map_err(|_| ScenarioError::Metadata {
                                line: i + 1,
                                message: format!("seed must be an unsigned integer, got `{v}`"),
                            })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if trimmed.is_empty() && in_header {
                continue;
            }
            in_header = false;
            body.push_str(line);
            body.push('\n');
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| ScenarioError::Header(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != SCENARIO_HEADER {
            return Err(ScenarioError::Header(header));
        }
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| ScenarioError::Row {
                row,
                message: e.to_string(),
            })?;
            let timestamp = parse_timestamp(&rec[0]).ok_or_else(|| ScenarioError::Row {
                row,
                message: format!("timestamp `{}` is not ISO-8601", &rec[0]),
            })?;
            let num = |col: usize, name: &str| -> Result<f64, ScenarioError> {
                rec[col].parse::<f64>().map_err(|_| ScenarioError::Row {
                    row,
                    message: format!("{name} `{}` is not a number", &rec[col]),
                })
            };
            out.rows.push(ScenarioRow {
                timestamp,
                p_base: num(1, "p_base_mw")?,
                q_cool: num(2, "q_cool_mw")?,
                q_steam: num(3, "q_steam_mw")?,
                twb: num(4, "twb_c")?,
            });
        }
        out.validate()?;
        Ok(out)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        if let Some(n) = &self.name {
            writeln!(s, "# name: {n}").unwrap();
        }
        if let Some(src) = &self.source {
            writeln!(s, "# source: {src}").unwrap();
        }
        if let Some(seed) = self.seed {
            writeln!(s, "# seed: {seed}").unwrap();
        }
        s.push_str(SCENARIO_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{}",
                r.timestamp.format(TIMESTAMP_FORMAT),
                r.p_base,
                r.q_cool,
                r.q_steam,
                r.twb
            )
            .unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.to_csv_string()).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let s = Scenario::parse(&text)?;
    let range = |f: fn(&ScenarioRow) -> f64| {
        s.rows
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (pl, ph) = range(|r| r.p_base);
    let (cl, ch) = range(|r| r.q_cool);
    let (tl, th) = range(|r| r.twb);
    info!(
        "{}: {} rows, p_base {pl:.1}..{ph:.1} MW, q_cool {cl:.1}..{ch:.1} MW, twb {tl:.1}..{th:.1} °C",
        path.display(),
        s.len()
    );
    Ok(s)
}

/// Generation with the tank idle: p_base + chiller power at q_cool.
pub fn no_storage_baseline(
    s: &Scenario,
    cop: &CopModel,
    plant: &PlantConfig,
    tes: &TesConfig,
) -> Result<Vec<f64>, SolveError> {
    s.rows
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let p_ch = cooling::chiller_power(r.q_cool, r.twb, cop, tes)
                .map_err(|source| SolveError::PointInfeasible { hour: t, source })?;
            let g = r.p_base + p_ch;
            if g > plant.capacity() {
                return Err(SolveError::Infeasible(format!(
                    "hour {t}: load {g:.3} MW exceeds plant capacity {:.3} MW",
                    plant.capacity()
                )));
            }
            Ok(g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(rows: &[&str]) -> String {
        let mut s = String::from("# name: t\n");
        s.push_str(SCENARIO_HEADER);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn parses_metadata_and_rows() {
        let s = Scenario::parse(&text(&[
            "2023-09-10T00:00:00,35,60,8,21.5",
            "2023-09-10T01:00:00,34.5,58,8,21.2",
        ]))
        .unwrap();
        assert_eq!(s.name.as_deref(), Some("t"));
        assert_eq!(s.len(), 2);
        assert_eq!(s.rows[1].p_base, 34.5);
    }

    #[test]
    fn negative_cooling_cites_row() {
        let mut rows: Vec<String> = (0..12)
            .map(|h| format!("2023-09-10T{h:02}:00:00,35,60,8,21"))
            .collect();
        rows[9] = "2023-09-10T09:00:00,35,-5,8,21".into();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let err = Scenario::parse(&text(&refs)).unwrap_err();
        assert!(matches!(err, ScenarioError::Row { row: 10, .. }), "{err}");
    }

    #[test]
    fn duplicate_timestamp_rejected() {
        let err = Scenario::parse(&text(&[
            "2023-09-10T00:00:00,35,60,8,21",
            "2023-09-10T00:00:00,35,60,8,21",
        ]))
        .unwrap_err();
        assert!(matches!(err, ScenarioError::Monotonic { row: 2, .. }));
    }

    #[test]
    fn gap_rejected() {
        let err = Scenario::parse(&text(&[
            "2023-09-10T00:00:00,35,60,8,21",
            "2023-09-10T03:00:00,35,60,8,21",
        ]))
        .unwrap_err();
        assert!(matches!(err, ScenarioError::Gap { row: 2, hours: 3, .. }));
    }

    #[test]
    fn header_must_match() {
        let bad = "timestamp,p_base,q_cool,q_steam,twb\n2023-09-10T00:00:00,1,1,1,1\n";
        assert!(matches!(Scenario::parse(bad), Err(ScenarioError::Header(_))));
    }

    #[test]
    fn bad_number_cites_row() {
        let err = Scenario::parse(&text(&["2023-09-10T00:00:00,35,abc,8,21"])).unwrap_err();
        assert!(matches!(err, ScenarioError::Row { row: 1, .. }));
    }

    #[test]
    fn idle_baseline_without_cooling_is_base_load() {
        let s = Scenario::parse(&text(&[
            "2023-09-10T00:00:00,35,0,8,21",
            "2023-09-10T01:00:00,36,0,8,21",
        ]))
        .unwrap();
        let m = Models::default();
        let g = no_storage_baseline(&s, &m.cop, &m.plant, &m.tes).unwrap();
        assert_eq!(g, vec![35.0, 36.0]);
    }

    #[test]
    fn days_need_midnight_and_whole_days() {
        let s = Scenario::parse(&text(&["2023-09-10T01:00:00,35,0,8,21"])).unwrap();
        assert!(s.days().is_err());
    }
}
