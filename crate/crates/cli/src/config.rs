//! Run configuration: TOML schema, exhaustive validation, and defaults.
//!
//! Physical quantities are entered in the units used throughout the
//! literature on this benchmark (cm^-1, fs, radians) and converted at
//! ingestion by the core unit system.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Which system or test function a run optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Three-level transfer benchmark driven by a shaped spectral phase.
    RbTransfer,
    /// Grouped-pixel shaper maximizing the two-photon-absorption proxy.
    Tpa,
    /// Shaper surrogate mimicking a closed-loop signal-ratio experiment.
    SurrogateRatio,
    /// Negative sphere test function on a symmetric box.
    Sphere,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::RbTransfer => "rb-transfer",
            ProblemKind::Tpa => "tpa",
            ProblemKind::SurrogateRatio => "surrogate-ratio",
            ProblemKind::Sphere => "sphere",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    GradientFlow,
    Msde,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::GradientFlow => "gradient-flow",
            OptimizerKind::Msde => "msde",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Target level label for rb-transfer, matching the level numbering of
    /// the three-level system: 2 or 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_level: Option<u8>,
    /// Time grid nodes for rb-transfer propagation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    /// Reference-phase seed for surrogate-ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_seed: Option<u64>,
    /// Sphere dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Sphere half-width: the box is [-bound, bound] in every coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
}

/// Gradient-flow parameters (paper units where dimensional).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientFlowConfig {
    /// Gaussian filter width in cm^-1.
    pub sigma_invcm: f64,
    pub max_iterations: usize,
    /// Stop once 1 - J falls below this gap.
    #[serde(default = "default_target_gap")]
    pub target_gap: f64,
    #[serde(default = "default_stall_tolerance")]
    pub stall_tolerance: f64,
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
    /// Max-norm of the first accepted update, radians.
    #[serde(default = "default_first_update_max")]
    pub first_update_max: f64,
    /// Endpoint cap as a fraction of the peak temporal field.
    #[serde(default = "default_feasibility_fraction")]
    pub feasibility_fraction: f64,
}

fn default_target_gap() -> f64 {
    1e-4
}
fn default_stall_tolerance() -> f64 {
    1e-10
}
fn default_stall_window() -> usize {
    10
}
fn default_first_update_max() -> f64 {
    0.05
}
fn default_feasibility_fraction() -> f64 {
    1e-3
}

/// Differential-evolution parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsdeConfig {
    pub np: usize,
    pub g_max: usize,
    pub seed: u64,
    /// Search box for the phase problems, radians. The sphere ignores these
    /// and uses its own symmetric bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<f64>,
}

/// Sweep axis: one run per value, all other parameters shared.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Upper edge of the search box (radians); lower edge stays fixed.
    BoxHi,
    /// Filter width sigma in cm^-1.
    Sigma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::BoxHi => "box-hi",
            SweepAxis::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Run directory; created if missing. Overridden by --out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
}

/// A complete run definition as read from one TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_flow: Option<GradientFlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msde: Option<MsdeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses and validates a config file, reporting every violation at once.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            problems: vec![format!("cannot read {}: {e}", path.display())],
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError {
            problems: vec![format!("TOML parse error in {}: {e}", path.display())],
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks completeness and ranges; collects all problems before failing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();

        match self.optimizer.kind {
            OptimizerKind::GradientFlow => {
                if self.problem.kind != ProblemKind::RbTransfer {
                    problems.push(format!(
                        "gradient-flow only drives the rb-transfer problem, not {}",
                        self.problem.kind.name()
                    ));
                }
                if self.msde.is_some() {
                    problems.push("msde table present but optimizer is gradient-flow".into());
                }
                match &self.gradient_flow {
                    None => problems.push("gradient-flow optimizer needs a [gradient_flow] table".into()),
                    Some(gf) => {
                        if !(gf.sigma_invcm > 0.0) {
                            problems.push(format!("sigma_invcm must be positive, got {}", gf.sigma_invcm));
                        }
                        if gf.max_iterations == 0 {
                            problems.push("max_iterations must be at least 1".into());
                        }
                        if !(gf.target_gap > 0.0) {
                            problems.push(format!("target_gap must be positive, got {}", gf.target_gap));
                        }
                        if !(gf.first_update_max > 0.0) {
                            problems.push(format!(
                                "first_update_max must be positive, got {}",
                                gf.first_update_max
                            ));
                        }
                        if !(gf.feasibility_fraction > 0.0) {
                            problems.push(format!(
                                "feasibility_fraction must be positive, got {}",
                                gf.feasibility_fraction
                            ));
                        }
                    }
                }
            }
            OptimizerKind::Msde => {
                if self.gradient_flow.is_some() {
                    problems.push("gradient_flow table present but optimizer is msde".into());
                }
                if self.problem.kind == ProblemKind::RbTransfer {
                    problems.push(
                        "msde does not drive the rb-transfer problem; use gradient-flow".into(),
                    );
                }
                match &self.msde {
                    None => problems.push("msde optimizer needs an [msde] table".into()),
                    Some(de) => {
                        if de.np < 6 {
                            problems.push(format!("np must be at least 6, got {}", de.np));
                        }
                        let needs_box = matches!(
                            self.problem.kind,
                            ProblemKind::Tpa | ProblemKind::SurrogateRatio
                        );
                        match (needs_box, de.box_lo, de.box_hi) {
                            (true, Some(lo), Some(hi)) => {
                                if !(lo < hi) {
                                    problems.push(format!("box_lo {lo} must be below box_hi {hi}"));
                                }
                            }
                            (true, _, _) => problems
                                .push("phase problems need box_lo and box_hi (radians)".into()),
                            (false, Some(_), _) | (false, _, Some(_)) => problems
                                .push("sphere ignores box_lo/box_hi; use bound instead".into()),
                            (false, None, None) => {}
                        }
                    }
                }
            }
        }

        match self.problem.kind {
            ProblemKind::RbTransfer => {
                match self.problem.target_level {
                    Some(2) | Some(3) => {}
                    Some(other) => {
                        problems.push(format!("target_level must be 2 or 3, got {other}"))
                    }
                    None => problems.push("rb-transfer needs target_level (2 or 3)".into()),
                }
                if let Some(tp) = self.problem.time_points {
                    if tp < 16 {
                        problems.push(format!("time_points {tp} is too coarse"));
                    }
                }
                if self.problem.reference_seed.is_some()
                    || self.problem.dimension.is_some()
                    || self.problem.bound.is_some()
                {
                    problems.push(
                        "rb-transfer does not use reference_seed/dimension/bound".into(),
                    );
                }
            }
            ProblemKind::Tpa => {
                if self.problem.target_level.is_some() || self.problem.time_points.is_some() {
                    problems.push("tpa does not use target_level/time_points".into());
                }
                if self.problem.reference_seed.is_some()
                    || self.problem.dimension.is_some()
                    || self.problem.bound.is_some()
                {
                    problems.push("tpa does not use reference_seed/dimension/bound".into());
                }
            }
            ProblemKind::SurrogateRatio => {
                if self.problem.reference_seed.is_none() {
                    problems.push("surrogate-ratio needs reference_seed".into());
                }
                if self.problem.target_level.is_some()
                    || self.problem.time_points.is_some()
                    || self.problem.dimension.is_some()
                    || self.problem.bound.is_some()
                {
                    problems.push(
                        "surrogate-ratio uses only reference_seed of the problem fields".into(),
                    );
                }
            }
            ProblemKind::Sphere => {
                match self.problem.dimension {
                    Some(0) | None => problems.push("sphere needs a positive dimension".into()),
                    Some(_) => {}
                }
                match self.problem.bound {
                    Some(b) if b > 0.0 => {}
                    Some(b) => problems.push(format!("sphere bound must be positive, got {b}")),
                    None => problems.push("sphere needs bound".into()),
                }
                if self.problem.target_level.is_some()
                    || self.problem.time_points.is_some()
                    || self.problem.reference_seed.is_some()
                {
                    problems.push("sphere uses only dimension and bound".into());
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                problems.push("sweep.values must not be empty".into());
            }
            match sweep.axis {
                SweepAxis::BoxHi => {
                    if self.optimizer.kind != OptimizerKind::Msde {
                        problems.push("box-hi sweeps need the msde optimizer".into());
                    }
                    if sweep.values.iter().any(|&v| !(v > 0.0)) {
                        problems.push("box-hi sweep values must be positive".into());
                    }
                }
                SweepAxis::Sigma => {
                    if self.optimizer.kind != OptimizerKind::GradientFlow {
                        problems.push("sigma sweeps need the gradient-flow optimizer".into());
                    }
                    if sweep.values.iter().any(|&v| !(v > 0.0)) {
                        problems.push("sigma sweep values must be positive".into());
                    }
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// The effective config serialized back to TOML for the run snapshot.
    pub fn snapshot_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// A short name for default output directories.
    pub fn run_name(&self) -> String {
        let mut name = format!("{}-{}", self.problem.kind.name(), self.optimizer.kind.name());
        if let Some(level) = self.problem.target_level {
            let _ = write!(name, "-level{level}");
        }
        if let Some(gf) = &self.gradient_flow {
            let _ = write!(name, "-sigma{}", gf.sigma_invcm);
        }
        name
    }
}

/// Every validation problem found in a config, reported together.
#[derive(Debug)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.problems.join("; "))
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
            problems: vec![e.to_string()],
        })?;
        config.validate()?;
        Ok(config)
    }

    #[test]
    fn minimal_flow_config_passes() {
        let config = parse(
            r#"
            [problem]
            kind = "rb-transfer"
            target_level = 2
            [optimizer]
            kind = "gradient-flow"
            [gradient_flow]
            sigma_invcm = 50.0
            max_iterations = 2000
            "#,
        )
        .unwrap();
        assert_eq!(config.gradient_flow.as_ref().unwrap().target_gap, 1e-4);
        assert_eq!(config.run_name(), "rb-transfer-gradient-flow-level2-sigma50");
    }

    #[test]
    fn validation_collects_every_problem() {
        let err = parse(
            r#"
            [problem]
            kind = "rb-transfer"
            target_level = 7
            [optimizer]
            kind = "gradient-flow"
            [gradient_flow]
            sigma_invcm = -3.0
            max_iterations = 0
            "#,
        )
        .unwrap_err();
        assert!(err.problems.len() >= 3, "{:?}", err.problems);
    }

    #[test]
    fn msde_on_rb_transfer_is_rejected() {
        assert!(parse(
            r#"
            [problem]
            kind = "rb-transfer"
            target_level = 2
            [optimizer]
            kind = "msde"
            [msde]
            np = 30
            g_max = 10
            seed = 1
            "#,
        )
        .is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(
            r#"
            [problem]
            kind = "sphere"
            dimension = 10
            bound = 5.0
            typo_field = 1
            [optimizer]
            kind = "msde"
            [msde]
            np = 30
            g_max = 10
            seed = 1
            "#,
        )
        .is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let config = parse(
            r#"
            [problem]
            kind = "surrogate-ratio"
            reference_seed = 99
            [optimizer]
            kind = "msde"
            [msde]
            np = 30
            g_max = 400
            seed = 7
            box_lo = 0.0
            box_hi = 6.283185307179586
            [sweep]
            axis = "box-hi"
            values = [6.283185307179586, 3.141592653589793]
            "#,
        )
        .unwrap();
        let text = config.snapshot_toml();
        let back = parse(&text).unwrap();
        assert_eq!(back.msde.as_ref().unwrap().box_hi, config.msde.as_ref().unwrap().box_hi);
        assert_eq!(back.sweep.as_ref().unwrap().values.len(), 2);
    }
}
