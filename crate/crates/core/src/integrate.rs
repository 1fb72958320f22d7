//! Time integration of the reduced dynamics with group reconstruction.
//!
//! The algebra state is advanced by classical RK4 on the closed-loop (or
//! free) field, with the feedback evaluated inside every stage. The group
//! element is then advanced by one exponential step using the updated
//! algebra state.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::algebra::{group_step, AlgebraVector};
use crate::error::{check_dim, Error, Result};
use crate::vnhc::{ControlVector, ControlledSystem};

/// Norm beyond which a run is declared divergent.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
}

/// Which vector field drives the algebra state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Drift plus the constraint-enforcing feedback.
    ClosedLoop,
    /// Drift only, zero controls.
    Uncontrolled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            scheme: Scheme::Rk4,
            record_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// Number of steps `round(T/h)`.
    pub fn steps(&self) -> Result<usize> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(Error::Parameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !self.horizon.is_finite() || self.horizon < self.step {
            return Err(Error::Parameter(format!(
                "horizon {} must be finite and at least one step {}",
                self.horizon, self.step
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Parameter("record stride must be positive".into()));
        }
        let n = (self.horizon / self.step).round();
        if n > (usize::MAX / 2) as f64 {
            return Err(Error::Parameter("too many steps".into()));
        }
        Ok(n as usize)
    }
}

/// Quantities recorded at each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    /// `½⟨ξ, ξ⟩`.
    pub energy: f64,
    /// `max |μᵃ(ξ) − μᵃ(a₀)|`.
    pub constraint_residual: f64,
    /// `‖RᵀR − I‖_F` of the rotation block.
    pub orthogonality_drift: f64,
    pub control_norm: f64,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Halt {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AlgebraVector>,
    pub group_elements: Vec<DMatrix<f64>>,
    pub controls: Vec<ControlVector>,
    pub monitors: Vec<MonitorRecord>,
    /// Set when integration was truncated by a blow-up or non-finite value.
    pub halted: Option<Halt>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&AlgebraVector> {
        self.states.last()
    }

    pub fn max_residual(&self) -> f64 {
        self.monitors
            .iter()
            .map(|m| m.constraint_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_orthogonality_drift(&self) -> f64 {
        self.monitors
            .iter()
            .map(|m| m.orthogonality_drift)
            .fold(0.0, f64::max)
    }
}

fn non_finite(time: f64, what: &str) -> Error {
    Error::Integration {
        time,
        reason: format!("non-finite {what}"),
    }
}

/// One classical Runge-Kutta step. `time` is only used in error reports.
pub fn rk4_step<F>(mut field: F, x: &AlgebraVector, h: f64, time: f64) -> Result<AlgebraVector>
where
    F: FnMut(&AlgebraVector) -> Result<AlgebraVector>,
{
    let mut stage = |y: &AlgebraVector, label: &str| -> Result<AlgebraVector> {
        let k = field(y)?;
        check_dim("vector field output", x.dim(), k.dim())?;
        if !k.is_finite() {
            return Err(non_finite(time, label));
        }
        Ok(k)
    };
    let k1 = stage(x, "stage 1")?;
    let k2 = stage(&(x + &(&k1 * (0.5 * h))), "stage 2")?;
    let k3 = stage(&(x + &(&k2 * (0.5 * h))), "stage 3")?;
    let k4 = stage(&(x + &(&k3 * h)), "stage 4")?;
    let incr = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let next = x + &incr;
    if !next.is_finite() {
        return Err(non_finite(time, "state"));
    }
    Ok(next)
}

/// Integrates `sys` from `(x0, g0)`.
///
/// Divergence (norm above [`BLOW_UP_THRESHOLD`] or a non-finite value) does
/// not return an error: the trajectory is truncated at the last good sample
/// and [`Trajectory::halted`] records why.
pub fn simulate(
    sys: &ControlledSystem,
    dynamics: Dynamics,
    x0: &AlgebraVector,
    g0: &DMatrix<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    sys.algebra().check_vector("initial state", x0)?;
    if !x0.is_finite() {
        return Err(Error::Contract(
            "initial state has non-finite entries".into(),
        ));
    }
    sys.group().check_element(g0)?;
    let steps = cfg.steps()?;
    let h = cfg.step;

    let field = |x: &AlgebraVector| match dynamics {
        Dynamics::ClosedLoop => sys.closed_loop_field(x),
        Dynamics::Uncontrolled => sys.drift(x),
    };
    let control = |x: &AlgebraVector| match dynamics {
        Dynamics::ClosedLoop => sys.control_law(x),
        Dynamics::Uncontrolled => Ok(ControlVector::zeros(sys.input_count())),
    };

    let capacity = steps / cfg.record_stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        group_elements: Vec::with_capacity(capacity),
        controls: Vec::with_capacity(capacity),
        monitors: Vec::with_capacity(capacity),
        halted: None,
    };
    let record =
        |traj: &mut Trajectory, t: f64, x: &AlgebraVector, g: &DMatrix<f64>| -> Result<()> {
            let u = control(x)?;
            let monitor = MonitorRecord {
                energy: sys.energy(x)?,
                constraint_residual: sys.constraint_residual(x)?.amax(),
                orthogonality_drift: sys.group().orthogonality_drift(g),
                control_norm: u.norm(),
            };
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.group_elements.push(g.clone());
            traj.controls.push(u);
            traj.monitors.push(monitor);
            Ok(())
        };

    let mut x = x0.clone();
    let mut g = g0.clone();
    record(&mut traj, 0.0, &x, &g)?;
    for i in 1..=steps {
        let t_prev = (i - 1) as f64 * h;
        let next = match rk4_step(&field, &x, h, t_prev) {
            Ok(next) if next.norm() > BLOW_UP_THRESHOLD => {
                traj.halted = Some(Halt {
                    time: t_prev + h,
                    reason: format!("state norm {:e} exceeds blow-up threshold", next.norm()),
                });
                break;
            }
            Ok(next) => next,
            Err(Error::Integration { time, reason }) => {
                traj.halted = Some(Halt { time, reason });
                break;
            }
            Err(e) => return Err(e),
        };
        g = match group_step(sys.group(), &g, &next, h, sys.trivialization()) {
            Ok(g) => g,
            Err(Error::Integration { reason, .. }) => {
                traj.halted = Some(Halt {
                    time: t_prev + h,
                    reason,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        x = next;
        if i % cfg.record_stride == 0 || i == steps {
            record(&mut traj, i as f64 * h, &x, &g)?;
        }
    }
    Ok(traj)
}

/// Max and mean of one monitored quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorStats {
    pub max: f64,
    pub mean: f64,
}

impl MonitorStats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut max, mut sum, mut count) = (f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            max = max.max(v);
            sum += v;
            count += 1;
        }
        Self {
            max,
            mean: sum / count as f64,
        }
    }
}

/// Pass/fail bounds for [`monitors_report`]. `None` skips the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub constraint_residual: Option<f64>,
    pub orthogonality_drift: Option<f64>,
    /// Bound on `max |E(t) − E(0)| / max(|E(0)|, 1)`.
    pub relative_energy_drift: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constraint_residual: Some(1e-8),
            orthogonality_drift: Some(1e-10),
            relative_energy_drift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorCheck {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSummary {
    pub samples: usize,
    pub energy: MonitorStats,
    pub relative_energy_drift: f64,
    pub constraint_residual: MonitorStats,
    pub orthogonality_drift: MonitorStats,
    pub control_norm: MonitorStats,
    pub checks: Vec<MonitorCheck>,
    pub halted: Option<Halt>,
}

impl MonitorSummary {
    /// All configured checks pass and the run was not truncated.
    pub fn passed(&self) -> bool {
        self.halted.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

pub fn monitors_report(traj: &Trajectory, tolerances: &Tolerances) -> Result<MonitorSummary> {
    if traj.is_empty() {
        return Err(Error::Contract(
            "monitor report of an empty trajectory".into(),
        ));
    }
    let m = &traj.monitors;
    let e0 = m[0].energy;
    let scale = e0.abs().max(1.0);
    let relative_energy_drift = m
        .iter()
        .map(|r| (r.energy - e0).abs() / scale)
        .fold(0.0, f64::max);
    let residual = MonitorStats::of(m.iter().map(|r| r.constraint_residual));
    let ortho = MonitorStats::of(m.iter().map(|r| r.orthogonality_drift));
    let mut checks = Vec::new();
    let mut check = |name, value: f64, tol: Option<f64>| {
        if let Some(tolerance) = tol {
            checks.push(MonitorCheck {
                name,
                value,
                tolerance,
                passed: value <= tolerance,
            });
        }
    };
    check(
        "constraint_residual",
        residual.max,
        tolerances.constraint_residual,
    );
    check(
        "orthogonality_drift",
        ortho.max,
        tolerances.orthogonality_drift,
    );
    check(
        "relative_energy_drift",
        relative_energy_drift,
        tolerances.relative_energy_drift,
    );
    Ok(MonitorSummary {
        samples: traj.len(),
        energy: MonitorStats::of(m.iter().map(|r| r.energy)),
        relative_energy_drift,
        constraint_residual: residual,
        orthogonality_drift: ortho,
        control_norm: MonitorStats::of(m.iter().map(|r| r.control_norm)),
        checks,
        halted: traj.halted.clone(),
    })
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,xi_1..xi_n,u_1..u_m,energy,residual,ortho_drift`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let n = traj.states.first().map_or(0, AlgebraVector::dim);
    let m = traj.controls.first().map_or(0, ControlVector::dim);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("xi_{i}")));
    header.extend((1..=m).map(|a| format!("u_{a}")));
    header.extend(["energy", "residual", "ortho_drift"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..traj.len() {
        let mut row = vec![format_value(traj.times[i])];
        row.extend(traj.states[i].as_slice().iter().map(|v| format_value(*v)));
        row.extend(traj.controls[i].as_slice().iter().map(|v| format_value(*v)));
        let mon = &traj.monitors[i];
        row.push(format_value(mon.energy));
        row.push(format_value(mon.constraint_residual));
        row.push(format_value(mon.orthogonality_drift));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes `t,g_1_1,g_1_2,...` with the group element in row-major order.
pub fn write_group_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    let s = traj.group_elements.first().map_or(0, |g| g.nrows());
    let mut header = vec!["t".to_string()];
    for r in 1..=s {
        for c in 1..=s {
            header.push(format!("g_{r}_{c}"));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for (t, g) in traj.times.iter().zip(&traj.group_elements) {
        let mut row = vec![format_value(*t)];
        for r in 0..s {
            for c in 0..s {
                row.push(format_value(g[(r, c)]));
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
