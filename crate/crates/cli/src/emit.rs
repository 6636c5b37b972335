//! Plot-ready data tables extracted from run records.
//!
//! All outputs are UTF-8 comma-separated text with one header line naming
//! columns and units, values in scientific notation with at least nine
//! significant digits.

use crate::config::{OptimizerKind, ProblemKind, RunConfig};
use crate::record::read_csv_column;
use crate::runner::{load_record_phase, transfer_problem};
use anyhow::{bail, Context, Result};
use ndarray::Array1;
use qcontrol_core::gradient_flow::PhaseControlProblem;
use qcontrol_core::pulse::synthesize;
use qcontrol_core::{SpectralField64, UnitSystem64};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmitKind {
    /// Level populations over time: t_fs, p1, p2, p3.
    Populations,
    /// Objective per accepted flow iteration.
    Objective,
    /// Spectral phase (and amplitude) over frequency.
    Phase,
    /// Temporal field in V/cm.
    Field,
    /// Best and average fitness per generation.
    Generations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// The record's optimized phase.
    Final,
    /// Flat spectral phase (the unshaped pulse).
    Flat,
}

/// Plot floats: 10 significant digits of scientific notation.
fn pfmt(x: f64) -> String {
    format!("{x:.9e}")
}

/// Extracts one table from a record directory; returns the written path.
pub fn emit(
    record: &Path,
    kind: EmitKind,
    profile: Profile,
    out: Option<&Path>,
) -> Result<PathBuf> {
    let config = RunConfig::load(&record.join("config.toml"))
        .with_context(|| format!("{} is not a run record", record.display()))?;
    let out_dir = out.unwrap_or(record);
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    match kind {
        EmitKind::Populations => populations(record, &config, profile, out_dir),
        EmitKind::Objective => objective(record, &config, out_dir),
        EmitKind::Phase => phase(record, out_dir),
        EmitKind::Field => field(record, &config, out_dir),
        EmitKind::Generations => generations(record, &config, out_dir),
    }
}

fn populations(
    record: &Path,
    config: &RunConfig,
    profile: Profile,
    out_dir: &Path,
) -> Result<PathBuf> {
    if config.problem.kind != ProblemKind::RbTransfer {
        bail!(
            "record is a {} run; populations are only defined for rb-transfer",
            config.problem.kind.name()
        );
    }
    let problem = transfer_problem(config)?;
    let n_w = problem.frequency_grid().n_points();
    let phase = match profile {
        Profile::Flat => Array1::zeros(n_w),
        Profile::Final => {
            let p = load_record_phase(record)?;
            if p.len() != n_w {
                bail!(
                    "record field table has {} rows but the grid has {n_w} points",
                    p.len()
                );
            }
            p
        }
    };
    let result = problem.evaluate_transfer(&phase)?;

    let name = match profile {
        Profile::Final => "populations.csv",
        Profile::Flat => "populations_flat.csv",
    };
    let path = out_dir.join(name);
    let mut text = String::from("t_fs,p1,p2,p3\n");
    let grid = problem.time_grid();
    for i in 0..grid.n_points() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            pfmt(grid.value(i)),
            pfmt(result.populations[[i, 0]]),
            pfmt(result.populations[[i, 1]]),
            pfmt(result.populations[[i, 2]]),
        ));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn objective(record: &Path, config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    if config.optimizer.kind != OptimizerKind::GradientFlow {
        bail!("record has no iteration trace; it is a {} run", config.optimizer.kind.name());
    }
    let trace = record.join("trace.csv");
    let iterations = read_csv_column(&trace, 0)?;
    let objectives = read_csv_column(&trace, 1)?;
    let path = out_dir.join("objective.csv");
    let mut text = String::from("iteration,objective\n");
    for (i, j) in iterations.iter().zip(&objectives) {
        text.push_str(&format!("{},{}\n", *i as usize, pfmt(*j)));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn phase(record: &Path, out_dir: &Path) -> Result<PathBuf> {
    let table = record.join("field.csv");
    if !table.exists() {
        bail!(
            "record {} has no field table; population records store best_vector.csv instead",
            record.display()
        );
    }
    let omega = read_csv_column(&table, 0)?;
    let amplitude = read_csv_column(&table, 1)?;
    let phase = read_csv_column(&table, 2)?;
    let path = out_dir.join("phase.csv");
    let mut text = String::from("omega_invcm,amplitude,phase_rad\n");
    for i in 0..omega.len() {
        text.push_str(&format!(
            "{},{},{}\n",
            pfmt(omega[i]),
            pfmt(amplitude[i]),
            pfmt(phase[i])
        ));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn field(record: &Path, config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    if config.problem.kind != ProblemKind::RbTransfer {
        bail!(
            "record is a {} run; the temporal field table needs rb-transfer",
            config.problem.kind.name()
        );
    }
    let table = record.join("field.csv");
    if !table.exists() {
        bail!("record {} has no field table", record.display());
    }
    let problem = transfer_problem(config)?;
    let amplitude = Array1::from(read_csv_column(&table, 1)?);
    let phase = Array1::from(read_csv_column(&table, 2)?);
    let spectral =
        SpectralField64::new(problem.frequency_grid().clone(), amplitude, phase)?;
    let samples = synthesize(&spectral, problem.time_grid());
    let units = UnitSystem64::default();

    let path = out_dir.join("field_time.csv");
    let mut text = String::from("t_fs,field_vcm\n");
    let grid = problem.time_grid();
    for i in 0..grid.n_points() {
        text.push_str(&format!(
            "{},{}\n",
            pfmt(grid.value(i)),
            pfmt(units.field_to_vcm(samples[i]))
        ));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn generations(record: &Path, config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    if config.optimizer.kind != OptimizerKind::Msde {
        bail!("record has no generation trace; it is a {} run", config.optimizer.kind.name());
    }
    let trace = record.join("trace.csv");
    let generations = read_csv_column(&trace, 0)?;
    let best = read_csv_column(&trace, 1)?;
    let average = read_csv_column(&trace, 2)?;
    let path = out_dir.join("generations.csv");
    let mut text = String::from("generation,best,average\n");
    for i in 0..generations.len() {
        text.push_str(&format!(
            "{},{},{}\n",
            generations[i] as usize,
            pfmt(best[i]),
            pfmt(average[i])
        ));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}
