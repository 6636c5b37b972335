//! Run records: one directory per run holding the config snapshot, the
//! iteration or generation trace, the final field or vector, and a summary.
//!
//! All tabular files are UTF-8 comma-separated text with one header line.
//! Floats are written in scientific notation with 17 significant digits, so
//! reading a value back recovers the exact f64.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use ndarray::Array1;
use qcontrol_core::gradient_flow::TerminationReason;
use qcontrol_core::msde::GenerationRecord;
use qcontrol_core::{GradientFlowState64, SpectralField64, UnitSystem64};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Formats one float for record files; parses back to the identical f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// A created run directory; all writes land inside it.
pub struct RunDirectory {
    path: PathBuf,
}

impl RunDirectory {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path)
            .with_context(|| format!("cannot create run directory {}", path.display()))?;
        Ok(RunDirectory {
            path: path.to_path_buf(),
        })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path.join(name);
        let f = File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
        Ok(BufWriter::new(f))
    }

    /// Writes the effective config so the run can be repeated from the
    /// record alone.
    pub fn write_config(&self, config: &RunConfig) -> Result<()> {
        let mut w = self.file("config.toml")?;
        w.write_all(config.snapshot_toml().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Writes the full flow history: objective, step size, and the signed
    /// residual and direction alignment of each constraint.
    pub fn write_flow_trace(&self, state: &GradientFlowState64) -> Result<()> {
        let mut w = self.file("trace.csv")?;
        let n_c = state
            .history
            .first()
            .map_or(0, |r| r.constraint_residuals.len());
        let mut header = String::from("iteration,objective,step_size");
        for k in 0..n_c {
            header.push_str(&format!(",residual_{k}"));
        }
        for k in 0..n_c {
            header.push_str(&format!(",alignment_{k}"));
        }
        header.push_str(",objective_rate,regularized\n");
        w.write_all(header.as_bytes())?;
        for r in &state.history {
            let mut row = format!("{},{},{}", r.iteration, fmt(r.objective), fmt(r.step_size));
            for v in &r.constraint_residuals {
                row.push(',');
                row.push_str(&fmt(*v));
            }
            for v in &r.constraint_alignments {
                row.push(',');
                row.push_str(&fmt(*v));
            }
            row.push_str(&format!(
                ",{},{}\n",
                fmt(r.objective_rate),
                u8::from(r.regularized)
            ));
            w.write_all(row.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the final spectral field: frequency in cm^-1, the (internal
    /// unit) spectral amplitude, and the phase in radians.
    pub fn write_field(&self, field: &SpectralField64, units: &UnitSystem64) -> Result<()> {
        let mut w = self.file("field.csv")?;
        w.write_all(b"omega_invcm,amplitude,phase_rad\n")?;
        let grid = field.grid();
        for j in 0..grid.n_points() {
            let wn = units.angular_frequency_to_wavenumber(grid.value(j));
            w.write_all(
                format!(
                    "{},{},{}\n",
                    fmt(wn),
                    fmt(field.amplitude()[j]),
                    fmt(field.phase()[j])
                )
                .as_bytes(),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the best vector of a population run, one coordinate per row.
    pub fn write_best_vector(&self, v: &Array1<f64>) -> Result<()> {
        let mut w = self.file("best_vector.csv")?;
        w.write_all(b"index,value\n")?;
        for (i, x) in v.iter().enumerate() {
            w.write_all(format!("{i},{}\n", fmt(*x)).as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, summary: &RunSummary) -> Result<()> {
        let mut w = self.file("summary.json")?;
        serde_json::to_writer_pretty(&mut w, summary)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// Streams generation rows as they complete, so a failed run still leaves
/// the trace of every finished generation on disk.
pub struct GenerationTrace {
    writer: BufWriter<File>,
}

impl GenerationTrace {
    pub fn create(dir: &RunDirectory) -> Result<Self> {
        let mut writer = dir.file("trace.csv")?;
        writer.write_all(b"generation,best,average\n")?;
        writer.flush()?;
        Ok(GenerationTrace { writer })
    }

    pub fn push(&mut self, record: &GenerationRecord<f64>) -> Result<()> {
        self.writer.write_all(
            format!(
                "{},{},{}\n",
                record.generation,
                fmt(record.best),
                fmt(record.average)
            )
            .as_bytes(),
        )?;
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct ChirpSummary {
    /// Quadratic phase coefficient, fs^2.
    pub beta0_fs2: f64,
    /// Fitted center frequency, cm^-1.
    pub omega_c_invcm: f64,
    /// Weighted coefficient of determination of the quadratic fit.
    pub r_squared: f64,
}

/// Summary scalars of one run, stored as JSON alongside the trace.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    /// "ok" or "error".
    pub status: String,
    pub problem: String,
    pub optimizer: String,
    pub version: String,
    pub wall_clock_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_objective: Option<f64>,
    /// Accepted iterations (flow) or executed generations (population).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirp: Option<ChirpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunSummary {
    pub fn shell(problem: &str, optimizer: &str) -> Self {
        RunSummary {
            status: "ok".into(),
            problem: problem.into(),
            optimizer: optimizer.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: 0.0,
            final_objective: None,
            iterations: None,
            termination: None,
            constraint_residuals: None,
            chirp: None,
            seed: None,
            message: None,
        }
    }
}

pub fn termination_name(reason: TerminationReason) -> &'static str {
    match reason {
        TerminationReason::Converged => "converged",
        TerminationReason::Stalled => "stalled",
        TerminationReason::IterationLimit => "iteration-limit",
        TerminationReason::VanishingStep => "vanishing-step",
        TerminationReason::VanishingDirection => "vanishing-direction",
    }
}

/// Reads one column of a record CSV back as f64s, skipping the header.
pub fn read_csv_column(path: &Path, column: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cell = line.split(',').nth(column).with_context(|| {
            format!("{} line {} has no column {column}", path.display(), i + 1)
        })?;
        out.push(
            cell.parse::<f64>()
                .with_context(|| format!("{} line {}: bad number {cell:?}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1.0169e-4,
            f64::MIN_POSITIVE,
            1.7e308,
        ] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_column_reader_recovers_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "a,b\n1,2.5e0\n3,-7.25e-1\n").unwrap();
        assert_eq!(read_csv_column(&path, 1).unwrap(), vec![2.5, -0.725]);
        assert!(read_csv_column(&path, 5).is_err());
    }
}
