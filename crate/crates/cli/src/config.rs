use std::path::{Path, PathBuf};

use geovc::document::SystemDoc;
use geovc::integrate::{Dynamics, IntegratorConfig, Tolerances};
use geovc::AlgebraVector;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A complete run description, read from TOML.
///
/// ```toml
/// [system]
/// kind = "se3_homogeneous"
/// m = 1.0
/// k = 0.5
///
/// [initial]
/// xi = [0.8, -0.5, 0.0, -0.5, -0.8, 0.0]
///
/// [integrator]
/// step = 1e-3
/// horizon = 10.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemDoc,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Algebra state; zero when omitted.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    /// Group element, row-major; identity when omitted.
    #[serde(default)]
    pub g: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ClosedLoop,
    Uncontrolled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub step: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default = "rk4")]
    pub scheme: String,
    #[serde(default = "closed_loop")]
    pub mode: Mode,
}

fn one() -> usize {
    1
}

fn rk4() -> String {
    "rk4".into()
}

fn closed_loop() -> Mode {
    Mode::ClosedLoop
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 10.0,
            record_stride: 1,
            scheme: rk4(),
            mode: Mode::ClosedLoop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Monitor tolerances; a missing key keeps the library default, and
/// `energy_rel` is only checked when given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub residual: Option<f64>,
    pub ortho_drift: Option<f64>,
    pub energy_rel: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<(), CliError> {
        let i = &self.integrator;
        if i.scheme != "rk4" {
            return Err(CliError::Config(format!(
                "integrator.scheme: unknown scheme '{}', expected 'rk4'",
                i.scheme
            )));
        }
        if !i.step.is_finite() || i.step <= 0.0 || !i.horizon.is_finite() || i.horizon < i.step {
            return Err(CliError::Config(
                "integrator: step must be positive and horizon at least one step".into(),
            ));
        }
        if i.record_stride == 0 {
            return Err(CliError::Config(
                "integrator.record_stride must be at least 1".into(),
            ));
        }
        let t = &self.tolerances;
        for (name, value) in [
            ("residual", t.residual),
            ("ortho_drift", t.ortho_drift),
            ("energy_rel", t.energy_rel),
        ] {
            if let Some(v) = value {
                if !v.is_finite() || v <= 0.0 {
                    return Err(CliError::Config(format!(
                        "tolerances.{name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.integrator.step, self.integrator.horizon)
            .with_stride(self.integrator.record_stride)
    }

    pub fn dynamics(&self) -> Dynamics {
        match self.integrator.mode {
            Mode::ClosedLoop => Dynamics::ClosedLoop,
            Mode::Uncontrolled => Dynamics::Uncontrolled,
        }
    }

    pub fn monitor_tolerances(&self) -> Tolerances {
        let defaults = Tolerances::default();
        Tolerances {
            constraint_residual: self.tolerances.residual.or(defaults.constraint_residual),
            orthogonality_drift: self.tolerances.ortho_drift.or(defaults.orthogonality_drift),
            relative_energy_drift: self
                .tolerances
                .energy_rel
                .or(defaults.relative_energy_drift),
        }
    }

    pub fn initial_state(&self, dim: usize) -> Result<AlgebraVector, CliError> {
        match &self.initial.xi {
            None => Ok(AlgebraVector::zeros(dim)),
            Some(xi) if xi.len() == dim => Ok(AlgebraVector::from(xi.clone())),
            Some(xi) => Err(CliError::Config(format!(
                "initial.xi has {} entries, the system dimension is {dim}",
                xi.len()
            ))),
        }
    }

    pub fn initial_group(&self, size: usize) -> Result<DMatrix<f64>, CliError> {
        match &self.initial.g {
            None => Ok(DMatrix::identity(size, size)),
            Some(g) if g.len() == size * size => Ok(DMatrix::from_row_slice(size, size, g)),
            Some(g) => Err(CliError::Config(format!(
                "initial.g has {} entries, expected {size}x{size} = {}",
                g.len(),
                size * size
            ))),
        }
    }
}

/// A parsed `PARAM=START:STOP:N` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    /// Evenly spaced values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start + step * i as f64)
            .collect()
    }
}

impl std::str::FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--sweep '{s}': expected PARAM=START:STOP:N"));
        let (param, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad());
        };
        let sweep = Sweep {
            param: param.trim().to_string(),
            start: start.trim().parse().map_err(|_| bad())?,
            stop: stop.trim().parse().map_err(|_| bad())?,
            count: count.trim().parse().map_err(|_| bad())?,
        };
        if sweep.param.is_empty() || sweep.count == 0 {
            return Err(bad());
        }
        Ok(sweep)
    }
}
