//! Least-squares fit of the chiller COP surface and ASHRAE Guideline 14
//! calibration metrics.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cooling::{CopModel, COP_TERMS};

pub const SAMPLE_HEADER: [&str; 3] = ["plr", "twb_c", "cop"];
pub const RAW_LOG_HEADER: [&str; 3] = ["q_ch_mw", "p_ch_mw", "twb_c"];

/// Twice the number of coefficients.
pub const MIN_SAMPLES: usize = 12;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    Singular { columns: Vec<&'static str> },
    #[error("series lengths differ: {pred} predicted vs {meas} measured")]
    Shape { pred: usize, meas: usize },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Measured,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopSample {
    pub plr: f64,
    pub twb: f64,
    pub cop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub rows: Vec<CopSample>,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn new(rows: Vec<CopSample>, provenance: Provenance) -> Result<Self, FitError> {
        let set = Self { rows, provenance };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.rows.len() < MIN_SAMPLES {
            return Err(FitError::TooFewRows {
                needed: MIN_SAMPLES,
                got: self.rows.len(),
            });
        }
        for (i, r) in self.rows.iter().enumerate() {
            let row = i + 1;
            if !(r.plr.is_finite() && r.twb.is_finite() && r.cop.is_finite()) {
                return Err(FitError::InvalidRow {
                    row,
                    reason: "non-finite value".into(),
                });
            }
            if !(0.0..=1.0).contains(&r.plr) {
                return Err(FitError::InvalidRow {
                    row,
                    reason: format!("plr {} outside [0, 1]", r.plr),
                });
            }
        }
        Ok(())
    }

    /// Builds samples from hourly plant logs of cooling output, electrical
    /// draw and wet-bulb temperature. Hours with no cooling are skipped.
    pub fn from_raw_logs(
        logs: &[(f64, f64, f64)],
        q_ch_max: f64,
        provenance: Provenance,
    ) -> Result<Self, FitError> {
        let mut rows = Vec::with_capacity(logs.len());
        for (i, &(q_ch, p_ch, twb)) in logs.iter().enumerate() {
            if q_ch <= 0.0 {
                continue;
            }
            if !(p_ch > 0.0) {
                return Err(FitError::InvalidRow {
                    row: i + 1,
                    reason: format!("cooling {q_ch} MW with electrical draw {p_ch} MW"),
                });
            }
            rows.push(CopSample {
                plr: q_ch / q_ch_max,
                twb,
                cop: q_ch / p_ch,
            });
        }
        Self::new(rows, provenance)
    }

    pub fn read_csv(path: &Path) -> Result<Self, FitError> {
        let io = |message: String| FitError::Io {
            path: path.display().to_string(),
            message,
        };
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| io(e.to_string()))?;
        let mut provenance = Provenance::Measured;
        let mut body = String::new();
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix('#') {
                if meta.trim() == "source: synthetic" {
                    provenance = Provenance::Synthetic;
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let rows = read_triples(&body, &SAMPLE_HEADER).map_err(io)?;
        let rows = rows
            .into_iter()
            .map(|(plr, twb, cop)| CopSample { plr, twb, cop })
            .collect();
        Self::new(rows, provenance)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), FitError> {
        let io = |e: std::io::Error| FitError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut out = String::new();
        if self.provenance == Provenance::Synthetic {
            out.push_str("# source: synthetic\n");
        }
        out.push_str(&SAMPLE_HEADER.join(","));
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.plr, r.twb, r.cop);
        }
        File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(io)
    }
}

/// Reads a three-column numeric CSV with the given exact header.
pub fn read_triples(body: &str, header: &[&str; 3]) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.join(",")
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("row {}: {e}", i + 1))?;
        let cell = |j: usize| -> Result<f64, String> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| format!("row {}: `{}` is not a number", i + 1, &rec[j]))
        };
        rows.push((cell(0)?, cell(1)?, cell(2)?));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: CopModel,
    pub cvrmse: f64,
    pub mbe: f64,
    pub n: usize,
    /// ‖measured − predicted‖₂ / ‖measured‖₂.
    pub residual_norm: f64,
}

impl FitReport {
    pub fn metrics_text(&self) -> String {
        format!(
            "samples = {}\ncvrmse_pct = {:.4}\nmbe_pct = {:.4}\nresidual_norm = {:.6e}\n",
            self.n, self.cvrmse, self.mbe, self.residual_norm
        )
    }
}

fn basis_row(plr: f64, twb: f64) -> [f64; 6] {
    [1.0, plr, twb, plr * plr, twb * plr, twb * twb]
}

/// Ordinary least squares on the six quadratic terms, solved through an SVD
/// of the design matrix.
pub fn fit_cop_model(s: &SampleSet) -> Result<FitReport, FitError> {
    s.validate()?;
    let n = s.rows.len();
    let design = DMatrix::from_fn(n, 6, |i, j| basis_row(s.rows[i].plr, s.rows[i].twb)[j]);
    let target = DVector::from_iterator(n, s.rows.iter().map(|r| r.cop));

    // Column equilibration keeps the rank test scale-free.
    let scales: Vec<f64> = (0..6)
        .map(|j| design.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let scaled = DMatrix::from_fn(n, 6, |i, j| design[(i, j)] / scales[j]);
    let svd = scaled.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut collinear = [false; 6];
    let mut deficient = false;
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= RANK_TOL * sigma_max {
            deficient = true;
            let null = v_t.row(k);
            let peak = null.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (j, v) in null.iter().enumerate() {
                if v.abs() > 1e-6 * peak {
                    collinear[j] = true;
                }
            }
        }
    }
    if deficient {
        return Err(FitError::Singular {
            columns: COP_TERMS
                .iter()
                .zip(collinear)
                .filter_map(|(name, hit)| hit.then_some(*name))
                .collect(),
        });
    }
    let solution = svd
        .solve(&target, 0.0)
        .map_err(|e| FitError::UndefinedMetric(e.to_string()))?;
    let mut coefficients = [0.0; 6];
    for j in 0..6 {
        coefficients[j] = solution[j] / scales[j];
    }
    let model = CopModel::with_coefficients(coefficients);
    let pred: Vec<f64> = s
        .rows
        .iter()
        .map(|r| model.polynomial(r.plr, r.twb))
        .collect();
    let meas: Vec<f64> = s.rows.iter().map(|r| r.cop).collect();
    let resid: f64 = meas
        .iter()
        .zip(&pred)
        .map(|(m, p)| (m - p).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = meas.iter().map(|m| m * m).sum::<f64>().sqrt();
    Ok(FitReport {
        cvrmse: cvrmse(&pred, &meas)?,
        mbe: mbe(&pred, &meas)?,
        n,
        residual_norm: if scale > 0.0 { resid / scale } else { resid },
        model,
    })
}

fn check_pair(pred: &[f64], meas: &[f64]) -> Result<(), FitError> {
    if pred.len() != meas.len() {
        return Err(FitError::Shape {
            pred: pred.len(),
            meas: meas.len(),
        });
    }
    Ok(())
}

/// Coefficient of variation of the RMSE, percent, with an `n − 1` divisor.
pub fn cvrmse(pred: &[f64], meas: &[f64]) -> Result<f64, FitError> {
    check_pair(pred, meas)?;
    let n = meas.len();
    if n < 2 {
        return Err(FitError::UndefinedMetric("CVRMSE needs at least two samples".into()));
    }
    let mean = meas.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(FitError::UndefinedMetric("measured mean is zero".into()));
    }
    let sse: f64 = meas.iter().zip(pred).map(|(m, p)| (m - p).powi(2)).sum();
    Ok(100.0 * (sse / (n - 1) as f64).sqrt() / mean)
}

/// Mean bias error, percent. Positive when the model underestimates.
pub fn mbe(pred: &[f64], meas: &[f64]) -> Result<f64, FitError> {
    check_pair(pred, meas)?;
    let total: f64 = meas.iter().sum();
    if meas.is_empty() || total == 0.0 {
        return Err(FitError::UndefinedMetric("measured sum is zero".into()));
    }
    let bias: f64 = meas.iter().zip(pred).map(|(m, p)| m - p).sum();
    Ok(100.0 * bias / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_samples(model: &CopModel) -> SampleSet {
        let mut rows = Vec::new();
        for i in 0..5 {
            for j in 0..4 {
                let plr = 0.2 + 0.2 * i as f64;
                let twb = 15.0 + 4.0 * j as f64;
                rows.push(CopSample {
                    plr,
                    twb,
                    cop: model.polynomial(plr, twb),
                });
            }
        }
        SampleSet::new(rows, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn metric_hand_values() {
        assert_eq!(cvrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let v = cvrmse(&[1.0, 3.0, 1.0, 3.0], &[2.0; 4]).unwrap();
        assert_abs_diff_eq!(v, 100.0 * (4.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 57.735_026_918_962_58, epsilon = 1e-9);
        assert_eq!(mbe(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(mbe(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 50.0, epsilon = 1e-12);
        assert!(mbe(&[3.0, 3.0], &[2.0, 2.0]).unwrap() < 0.0);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(cvrmse(&[1.0], &[1.0, 2.0]), Err(FitError::Shape { .. })));
        assert!(matches!(cvrmse(&[1.0], &[1.0]), Err(FitError::UndefinedMetric(_))));
        assert!(matches!(
            cvrmse(&[1.0, -1.0], &[1.0, -1.0]),
            Err(FitError::UndefinedMetric(_))
        ));
        assert!(matches!(mbe(&[0.0, 0.0], &[1.0, -1.0]), Err(FitError::UndefinedMetric(_))));
    }

    #[test]
    fn recovers_default_surface() {
        let report = fit_cop_model(&grid_samples(&CopModel::default())).unwrap();
        for (got, want) in report.model.coefficients.iter().zip(DEFAULT_COP) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert!(report.cvrmse < 1e-9);
        assert_eq!(report.n, 20);
    }

    const DEFAULT_COP: [f64; 6] = crate::cooling::DEFAULT_COP_COEFFICIENTS;

    #[test]
    fn singular_designs_name_columns() {
        let same = vec![
            CopSample {
                plr: 0.5,
                twb: 20.0,
                cop: 5.0
            };
            20
        ];
        let err = fit_cop_model(&SampleSet::new(same, Provenance::Synthetic).unwrap()).unwrap_err();
        assert!(matches!(err, FitError::Singular { .. }));

        let constant_twb: Vec<CopSample> = (0..20)
            .map(|i| CopSample {
                plr: i as f64 / 19.0,
                twb: 22.0,
                cop: 5.0 + 0.1 * i as f64,
            })
            .collect();
        match fit_cop_model(&SampleSet::new(constant_twb, Provenance::Synthetic).unwrap()) {
            Err(FitError::Singular { columns }) => {
                assert!(columns.contains(&"1"));
                assert!(columns.contains(&"twb"));
                assert!(columns.contains(&"twb^2"));
            }
            other => panic!("expected singular fit, got {other:?}"),
        }
    }

    #[test]
    fn sample_validation() {
        let few = vec![
            CopSample {
                plr: 0.5,
                twb: 20.0,
                cop: 5.0
            };
            3
        ];
        assert!(matches!(
            SampleSet::new(few, Provenance::Measured),
            Err(FitError::TooFewRows { .. })
        ));
        let mut rows = grid_samples(&CopModel::default()).rows;
        rows[4].plr = 1.5;
        assert!(matches!(
            SampleSet::new(rows, Provenance::Measured),
            Err(FitError::InvalidRow { row: 5, .. })
        ));
    }

    #[test]
    fn raw_logs_convert_to_cop() {
        let logs: Vec<(f64, f64, f64)> = (1..=12)
            .map(|i| (10.0 * i as f64, 2.0 * i as f64, 20.0))
            .chain(std::iter::once((0.0, 0.0, 20.0)))
            .collect();
        let set = SampleSet::from_raw_logs(&logs, 156.5, Provenance::Measured).unwrap();
        assert_eq!(set.rows.len(), 12);
        assert_abs_diff_eq!(set.rows[0].cop, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.rows[11].plr, 120.0 / 156.5, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let set = grid_samples(&CopModel::default());
        set.write_csv(&path).unwrap();
        assert_eq!(SampleSet::read_csv(&path).unwrap(), set);
    }
}
