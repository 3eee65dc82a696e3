//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "convergence-space"
//! degree = 2
//! cells = [8, 16, 32, 64]
//! t_end = 0.03
//! initial_condition = { kind = "manufactured" }
//!
//! [physics]
//! a = 0.1
//! gamma = 1e-3
//! eta = 1.0
//! nu_liquid = 1e-3
//! nu_vapor = 1e-3
//! liquid = { alpha = 1.5, beta = 0.6931471805599453, gamma_c = 0.0 }
//! vapor = { alpha = 1.0, beta = 0.0, gamma_c = 0.5 }
//! ```
//!
//! Physical parameters have no defaults. Flux parameters default to the
//! per-degree table, the time step of a spatial study to [`dt_rule`] and the
//! solver settings to [`SolverConfig::default`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::FluxParams;
use crate::stepper::{ConstantState, SolverConfig, TimeGrid};
use crate::thermo::MixtureParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConvergenceSpace,
    ConvergenceTime,
    Energy,
    SingleRun,
}

/// Initial data selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConditionSpec {
    /// Manufactured solution with its sources and boundary data.
    Manufactured,
    /// Liquid slab between two tanh interfaces, no forcing.
    TwoInterface,
    Constant { rho: f64, v: f64, phi: f64 },
}

impl InitialConditionSpec {
    pub fn is_source_free(&self) -> bool {
        !matches!(self, InitialConditionSpec::Manufactured)
    }

    pub fn constant(&self) -> Option<ConstantState> {
        match *self {
            InitialConditionSpec::Constant { rho, v, phi } => Some(ConstantState { rho, v, phi }),
            _ => None,
        }
    }
}

/// One step size or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Single(f64),
    List(Vec<f64>),
}

impl DtSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DtSpec::Single(v) => vec![*v],
            DtSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub degree: usize,
    pub cells: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<DtSpec>,
    pub t_end: f64,
    pub initial_condition: InitialConditionSpec,
    /// Mobilities swept by the energy study; empty means `physics.eta` only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mobilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Per-step nodal dump of all six fields (single runs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_dump: Option<PathBuf>,
    #[serde(default = "one")]
    pub dump_every: usize,
    pub physics: MixtureParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxParams>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn one() -> usize {
    1
}

/// `10^⌊log10(1/N)⌋` for `k ≤ 1` and `10^⌊log10(1/N²)⌋` otherwise.
pub fn dt_rule(k: usize, n_cells: usize) -> f64 {
    let m = if k <= 1 {
        n_cells as u128
    } else {
        (n_cells as u128) * (n_cells as u128)
    };
    // ⌊log10(1/m)⌋ = −⌈log10 m⌉, found on integers to avoid rounding at powers of ten
    let mut e = 0;
    let mut p: u128 = 1;
    while p < m {
        p *= 10;
        e += 1;
    }
    1.0 / 10f64.powi(e)
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Flux parameters in effect: the explicit block or the per-degree table.
    pub fn flux_params(&self) -> Result<FluxParams> {
        match self.flux {
            Some(f) => Ok(f),
            None => FluxParams::for_degree(self.degree).ok_or_else(|| {
                config_err(format!(
                    "no tabulated flux parameters for degree {}; add a [flux] section",
                    self.degree
                ))
            }),
        }
    }

    /// Mobilities to run; the configured list or `physics.eta`.
    pub fn effective_mobilities(&self) -> Vec<f64> {
        if self.mobilities.is_empty() {
            vec![self.physics.eta]
        } else {
            self.mobilities.clone()
        }
    }

    /// Step size for a run on `n_cells` cells when a single step is used.
    pub fn step_for(&self, n_cells: usize) -> f64 {
        match &self.dt {
            Some(DtSpec::Single(v)) => *v,
            Some(DtSpec::List(v)) if v.len() == 1 => v[0],
            _ => dt_rule(self.degree, n_cells),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physics
            .validate()
            .map_err(|e| config_err(format!("[physics]: {e}")))?;
        self.flux_params()?
            .validate()
            .map_err(|e| config_err(format!("[flux]: {e}")))?;
        self.solver
            .validate()
            .map_err(|e| config_err(format!("[solver]: {e}")))?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(config_err(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.cells.is_empty() || self.cells.contains(&0) {
            return Err(config_err("cells must be a non-empty list of positive counts"));
        }
        let unique: BTreeSet<_> = self.cells.iter().collect();
        if unique.len() != self.cells.len() {
            return Err(config_err(format!("duplicate cell counts in {:?}", self.cells)));
        }
        if self.dump_every == 0 {
            return Err(config_err("dump_every must be at least 1"));
        }
        if let Some(m) = self.mobilities.iter().find(|m| !(**m > 0.0)) {
            return Err(config_err(format!("mobilities must be positive, got {m}")));
        }
        if let InitialConditionSpec::Constant { rho, phi, .. } = self.initial_condition {
            if !(rho > 0.0) || !(0.0..=1.0).contains(&phi) {
                return Err(config_err(format!(
                    "constant state needs rho > 0 and phi in [0, 1], got rho = {rho}, phi = {phi}"
                )));
            }
        }

        let dts = self.dt.as_ref().map(DtSpec::values);
        match self.experiment {
            ExperimentKind::ConvergenceSpace => {
                if self.cells.len() < 2 {
                    return Err(config_err("a spatial study needs at least two cell counts"));
                }
                if dts.as_ref().is_some_and(|d| d.len() != 1) {
                    return Err(config_err("a spatial study takes a single dt or none"));
                }
            }
            ExperimentKind::ConvergenceTime => {
                if self.cells.len() != 1 {
                    return Err(config_err("a temporal study runs on exactly one mesh"));
                }
                let unique: BTreeSet<_> = dts.iter().flatten().map(|d| d.to_bits()).collect();
                if dts.as_ref().map_or(0, Vec::len) < 2 || unique.len() < 2 {
                    return Err(config_err("a temporal study needs at least two distinct dt values"));
                }
            }
            ExperimentKind::Energy | ExperimentKind::SingleRun => {
                if self.cells.len() != 1 {
                    return Err(config_err("this experiment runs on exactly one mesh"));
                }
                if dts.as_ref().is_some_and(|d| d.len() != 1) {
                    return Err(config_err("this experiment takes a single dt"));
                }
            }
        }
        if self.experiment == ExperimentKind::Energy && !self.initial_condition.is_source_free() {
            return Err(config_err("the energy study needs source-free initial data"));
        }
        if matches!(
            self.experiment,
            ExperimentKind::ConvergenceSpace | ExperimentKind::ConvergenceTime
        ) && self.initial_condition != InitialConditionSpec::Manufactured
        {
            return Err(config_err("convergence studies need the manufactured solution"));
        }

        let steps: Vec<f64> = match (&self.experiment, dts) {
            (ExperimentKind::ConvergenceTime, Some(d)) => d,
            _ => self.cells.iter().map(|&n| self.step_for(n)).collect(),
        };
        for dt in steps {
            TimeGrid::new(self.t_end, dt).map_err(|_| {
                config_err(format!(
                    "dt = {dt} does not divide t_end = {} into a whole number of steps",
                    self.t_end
                ))
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPACE: &str = r#"
experiment = "convergence-space"
degree = 2
cells = [8, 16, 32]
t_end = 0.03
initial_condition = { kind = "manufactured" }

[physics]
a = 0.1
gamma = 1e-3
eta = 1.0
nu_liquid = 1e-3
nu_vapor = 1e-3
liquid = { alpha = 1.5, beta = 0.6931471805599453, gamma_c = 0.0 }
vapor = { alpha = 1.0, beta = 0.0, gamma_c = 0.5 }
"#;

    #[test]
    fn dt_rule_examples() {
        assert_eq!(dt_rule(1, 64), 0.01);
        assert_eq!(dt_rule(2, 64), 1e-4);
        assert_eq!(dt_rule(0, 10), 0.1);
        assert_eq!(dt_rule(0, 1), 1.0);
        assert_eq!(dt_rule(3, 10), 0.01);
        assert_eq!(dt_rule(0, 11), 0.01);
    }

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = ExperimentConfig::from_toml(SPACE).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::ConvergenceSpace);
        assert_eq!(cfg.physics, MixtureParams::convergence_study());
        assert_eq!(cfg.flux_params().unwrap(), FluxParams::for_degree(2).unwrap());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.step_for(16), 1e-3);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::from_toml(SPACE).unwrap();
        cfg.flux = Some(FluxParams::for_degree(1).unwrap());
        cfg.dt = Some(DtSpec::Single(1e-3));
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    fn edited(from: &str, to: &str) -> Result<ExperimentConfig> {
        assert!(SPACE.contains(from));
        ExperimentConfig::from_toml(&SPACE.replace(from, to))
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(edited("cells = [8, 16, 32]", "cells = [8, 16, 16]").is_err());
        assert!(edited("cells = [8, 16, 32]", "cells = [8]").is_err());
        assert!(edited("t_end = 0.03", "t_end = 0.03\nbogus = 1").is_err());
        assert!(edited("gamma = 1e-3\n", "").is_err());
        assert!(edited("gamma = 1e-3", "gamma = -1e-3").is_err());
        assert!(edited("degree = 2", "degree = 7").is_err());
        // dt = 0.007 does not divide 0.03
        assert!(edited("t_end = 0.03", "t_end = 0.03\ndt = 0.007").is_err());
        assert!(edited("\"manufactured\"", "\"two-interface\"").is_err());
    }

    #[test]
    fn temporal_study_needs_several_steps() {
        let base = SPACE
            .replace("convergence-space", "convergence-time")
            .replace("cells = [8, 16, 32]", "cells = [64]");
        let with = |dt: &str| ExperimentConfig::from_toml(&base.replace("t_end = 0.03", &format!("t_end = 0.03\ndt = {dt}")));
        assert!(with("[1e-2, 5e-3]").is_ok());
        assert!(with("[1e-2]").is_err());
        assert!(with("1e-2").is_err());
        assert!(with("[1e-2, 1e-2]").is_err());
        assert!(with("[1e-2, 7e-3]").is_err());
    }

    #[test]
    fn energy_study_needs_source_free_data() {
        let base = SPACE
            .replace("convergence-space", "energy")
            .replace("cells = [8, 16, 32]", "cells = [32]")
            .replace("t_end = 0.03", "t_end = 0.2\ndt = 1e-3\nmobilities = [1.0, 10.0]");
        assert!(ExperimentConfig::from_toml(&base).is_err());
        let ok = base.replace("{ kind = \"manufactured\" }", "{ kind = \"two-interface\" }");
        let cfg = ExperimentConfig::from_toml(&ok).unwrap();
        assert_eq!(cfg.effective_mobilities(), vec![1.0, 10.0]);
        let c = base.replace(
            "{ kind = \"manufactured\" }",
            "{ kind = \"constant\", rho = 1.0, v = 0.0, phi = 2.0 }",
        );
        assert!(ExperimentConfig::from_toml(&c).is_err());
    }
}
