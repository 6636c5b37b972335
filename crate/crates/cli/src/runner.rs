//! Executes configured runs: dispatches to the right problem and optimizer,
//! streams traces into the run directory, and writes the summary.

use crate::config::{
    OptimizerKind, ProblemKind, RunConfig, SweepAxis,
};
use crate::record::{
    termination_name, ChirpSummary, GenerationTrace, RunDirectory, RunSummary,
};
use anyhow::{anyhow, bail, Context, Result};
use ndarray::{Array1, ArrayView1};
use qcontrol_core::gradient_flow::{
    run_gradient_flow, ConstraintSet, FlowOptions, PhaseControlProblem,
};
use qcontrol_core::grid::DEFAULT_TIME_POINTS;
use qcontrol_core::msde::GenerationRecord;
use qcontrol_core::objectives::SurrogateRatio;
use qcontrol_core::pulse::fit_quadratic_phase;
use qcontrol_core::{
    CoreError, FilterFunction64, Population64, SearchSpace64, ShaperProblem64,
    StateTransferProblem64, UnitSystem64,
};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Runs one config (or its whole sweep) and returns the run directories.
pub fn execute(
    mut config: RunConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<Vec<PathBuf>> {
    if let Some(seed) = seed_override {
        match &mut config.msde {
            Some(de) => de.seed = seed,
            None => eprintln!(
                "warning: --seed {seed} ignored; the gradient flow is deterministic"
            ),
        }
    }

    let base: PathBuf = match out_override {
        Some(p) => p.to_path_buf(),
        None => match &config.output.directory {
            Some(d) => PathBuf::from(d),
            None => PathBuf::from("runs").join(config.run_name()),
        },
    };

    match config.sweep.take() {
        None => {
            run_single(&config, &base)?;
            Ok(vec![base])
        }
        Some(sweep) => {
            let mut jobs = Vec::new();
            for &value in &sweep.values {
                let mut sub = config.clone();
                match sweep.axis {
                    SweepAxis::BoxHi => {
                        sub.msde.as_mut().expect("validated").box_hi = Some(value)
                    }
                    SweepAxis::Sigma => {
                        sub.gradient_flow.as_mut().expect("validated").sigma_invcm = value
                    }
                }
                let dir = base.join(format!("{}-{}", sweep.axis.name(), value));
                jobs.push((sub, dir));
            }

            // Independent runs, one thread each, outputs confined per
            // directory.
            let results: Vec<Result<()>> = std::thread::scope(|scope| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|(sub, dir)| scope.spawn(move || run_single(sub, dir)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| match h.join() {
                        Ok(r) => r,
                        Err(_) => Err(anyhow!("sweep worker panicked")),
                    })
                    .collect()
            });
            for ((_, dir), result) in jobs.iter().zip(&results) {
                if let Err(e) = result {
                    bail!("sweep value at {} failed: {e:#}", dir.display());
                }
            }
            Ok(jobs.into_iter().map(|(_, dir)| dir).collect())
        }
    }
}

/// One run into one directory: snapshot first, then execute, then summarize.
/// Failures after the snapshot still leave the partial trace and an error
/// summary behind.
fn run_single(config: &RunConfig, dir: &Path) -> Result<()> {
    let dir = RunDirectory::create(dir)?;
    dir.write_config(config)?;
    let mut summary = RunSummary::shell(
        config.problem.kind.name(),
        config.optimizer.kind.name(),
    );
    let started = Instant::now();

    let outcome = match config.optimizer.kind {
        OptimizerKind::GradientFlow => run_flow(config, &dir, &mut summary),
        OptimizerKind::Msde => run_population(config, &dir, &mut summary),
    };

    summary.wall_clock_s = started.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        summary.status = "error".into();
        summary.message = Some(format!("{e:#}"));
    }
    dir.write_summary(&summary)?;
    outcome
}

fn run_flow(config: &RunConfig, dir: &RunDirectory, summary: &mut RunSummary) -> Result<()> {
    let gf = config.gradient_flow.as_ref().expect("validated");
    let level = config.problem.target_level.expect("validated") as usize - 1;
    let time_points = config.problem.time_points.unwrap_or(DEFAULT_TIME_POINTS);

    let problem = StateTransferProblem64::benchmark(level, time_points)?;
    let constraints = ConstraintSet::endpoint_pair(problem.time_grid());
    let filter = FilterFunction64::from_wavenumber(gf.sigma_invcm, problem.frequency_grid())?;
    let options = FlowOptions {
        max_iterations: gf.max_iterations,
        target_gap: gf.target_gap,
        stall_tolerance: gf.stall_tolerance,
        stall_window: gf.stall_window,
        first_update_max: gf.first_update_max,
        feasibility_fraction: gf.feasibility_fraction,
        ..FlowOptions::default()
    };

    let state = run_gradient_flow(&problem, &constraints, &filter, &options)?;

    dir.write_flow_trace(&state)?;
    let units = UnitSystem64::default();
    dir.write_field(&state.field, &units)?;

    let fit = fit_quadratic_phase(&state.field, true)?;
    summary.final_objective = Some(state.final_objective());
    summary.iterations = Some(state.iteration);
    summary.termination = Some(termination_name(state.termination).into());
    summary.constraint_residuals = Some(
        state
            .history
            .last()
            .expect("history is never empty")
            .constraint_residuals
            .clone(),
    );
    summary.chirp = Some(ChirpSummary {
        beta0_fs2: fit.beta0,
        omega_c_invcm: units.angular_frequency_to_wavenumber(fit.omega_c),
        r_squared: fit.r_squared,
    });
    Ok(())
}

fn run_population(
    config: &RunConfig,
    dir: &RunDirectory,
    summary: &mut RunSummary,
) -> Result<()> {
    let de = config.msde.as_ref().expect("validated");
    summary.seed = Some(de.seed);

    match config.problem.kind {
        ProblemKind::Tpa => {
            let shaper = ShaperProblem64::benchmark()?;
            let space = SearchSpace64::uniform_box(
                shaper.groups(),
                de.box_lo.expect("validated"),
                de.box_hi.expect("validated"),
            )?;
            let mut objective =
                |v: ArrayView1<f64>| shaper.evaluate_tpa(&v.to_owned());
            drive_population(dir, summary, &space, de.np, de.g_max, de.seed, &mut objective)
        }
        ProblemKind::SurrogateRatio => {
            let shaper = ShaperProblem64::benchmark()?;
            let groups = shaper.groups();
            let surrogate = SurrogateRatio::new(
                shaper,
                config.problem.reference_seed.expect("validated"),
            );
            let space = SearchSpace64::uniform_box(
                groups,
                de.box_lo.expect("validated"),
                de.box_hi.expect("validated"),
            )?;
            let mut objective = |v: ArrayView1<f64>| surrogate.evaluate(&v.to_owned());
            drive_population(dir, summary, &space, de.np, de.g_max, de.seed, &mut objective)
        }
        ProblemKind::Sphere => {
            let bound = config.problem.bound.expect("validated");
            let space = SearchSpace64::uniform_box(
                config.problem.dimension.expect("validated"),
                -bound,
                bound,
            )?;
            let mut objective = |v: ArrayView1<f64>| {
                Ok::<f64, CoreError>(-v.iter().map(|x| x * x).sum::<f64>())
            };
            drive_population(dir, summary, &space, de.np, de.g_max, de.seed, &mut objective)
        }
        ProblemKind::RbTransfer => unreachable!("rejected by validation"),
    }
}

/// Steps the population one generation at a time so every finished
/// generation is already on disk if a later evaluation fails.
fn drive_population<F>(
    dir: &RunDirectory,
    summary: &mut RunSummary,
    space: &SearchSpace64,
    np: usize,
    g_max: usize,
    seed: u64,
    objective: &mut F,
) -> Result<()>
where
    F: FnMut(ArrayView1<f64>) -> Result<f64, CoreError>,
{
    let mut trace = GenerationTrace::create(dir)?;
    let mut population = Population64::initialize(space, np, seed, objective)
        .context("population initialization failed")?;
    trace.push(&snapshot(&population))?;

    let mut executed = 0usize;
    let result: Result<()> = (|| {
        for _ in 1..=g_max {
            population.step(space, objective)?;
            executed += 1;
            trace.push(&snapshot(&population))?;
        }
        Ok(())
    })();

    summary.final_objective = Some(population.best_fitness());
    summary.iterations = Some(executed);
    dir.write_best_vector(&population.best_vector())?;
    result
}

fn snapshot(population: &Population64) -> GenerationRecord<f64> {
    GenerationRecord {
        generation: population.generation(),
        best: population.best_fitness(),
        average: population.average_fitness(),
        best_vector: population.best_vector(),
    }
}

/// Rebuilds the transfer benchmark described by a config snapshot.
pub fn transfer_problem(config: &RunConfig) -> Result<StateTransferProblem64> {
    let level = config
        .problem
        .target_level
        .ok_or_else(|| anyhow!("record's config has no target_level"))?
        as usize
        - 1;
    let time_points = config.problem.time_points.unwrap_or(DEFAULT_TIME_POINTS);
    Ok(StateTransferProblem64::benchmark(level, time_points)?)
}

/// Loads the phase column of a record's field table.
pub fn load_record_phase(record: &Path) -> Result<Array1<f64>> {
    let path = record.join("field.csv");
    if !path.exists() {
        bail!(
            "record {} has no field table; population records store best_vector.csv instead",
            record.display()
        );
    }
    Ok(Array1::from(crate::record::read_csv_column(&path, 2)?))
}
