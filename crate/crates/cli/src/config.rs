//! Run configuration: a UTF-8 JSON document with the physical parameters,
//! initial conditions, and numerical settings of one simulation.
//!
//! Every field has a default reproducing the reference experiment (aluminium
//! sphere of radius 5 cm in motor oil, started at `omega0 = (0, 1, 1)`,
//! `T0 = 300 K`, `S0 = 0`, `h = 0.1 s`), so the empty document `{}` is a
//! valid configuration. Unknown keys are rejected, and validation failures
//! name the offending field path.
//!
//! The default initial attitude is the identity. The advected direction
//! defaults to `R0^T e_3`, which places the center of mass on the positive
//! vertical axis; both can be overridden, and an `r0` that is only
//! approximately orthogonal can be declared repairable via `repair_r0`.

use serde::Deserialize;
use std::path::PathBuf;
use thermotop_core::integrator::{InitialGuess, JacobianMode, SolverSettings};
use thermotop_core::sim::{Method, RunOptions};
use thermotop_core::so3::{Mat3, Rotation, Vec3};
use thermotop_core::systems::{
    DoubleBracketParams, DoubleBracketSystem, HeavyTopParams, HeavyTopSystem, Lambda, ReducedState,
    MOLAR_GAS_CONSTANT,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    #[default]
    HeavyTop,
    DoubleBracket,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeavyTopSection {
    pub radius: f64,
    pub viscosity: f64,
    pub density: f64,
    pub upper_mass_fraction: f64,
    pub gravity: f64,
    pub molar_mass: f64,
    pub gas_constant: f64,
    pub t0: f64,
    pub s0: f64,
}

impl Default for HeavyTopSection {
    fn default() -> Self {
        let p = HeavyTopParams::default();
        Self {
            radius: p.radius,
            viscosity: p.viscosity,
            density: p.density,
            upper_mass_fraction: p.upper_mass_fraction,
            gravity: p.gravity,
            molar_mass: p.molar_mass,
            gas_constant: p.gas_constant,
            t0: p.t0,
            s0: p.s0,
        }
    }
}

impl HeavyTopSection {
    fn to_params(self) -> HeavyTopParams {
        HeavyTopParams {
            radius: self.radius,
            viscosity: self.viscosity,
            density: self.density,
            upper_mass_fraction: self.upper_mass_fraction,
            gravity: self.gravity,
            molar_mass: self.molar_mass,
            gas_constant: self.gas_constant,
            t0: self.t0,
            s0: self.s0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleBracketSection {
    pub inertia: [[f64; 3]; 3],
    pub lambda: f64,
    pub t0: f64,
    pub s0: f64,
    pub heat_capacity: f64,
}

impl Default for DoubleBracketSection {
    fn default() -> Self {
        Self {
            inertia: [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]],
            lambda: 0.3,
            t0: 300.0,
            s0: 0.0,
            heat_capacity: 3.0 * (1.0 / 26.981539e-3) * MOLAR_GAS_CONSTANT,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// Initial attitude, row by row.
    pub r0: [[f64; 3]; 3],
    /// Accept an `r0` that is off the rotation group by round-off and
    /// project it back instead of rejecting it.
    pub repair_r0: bool,
    pub omega0: [f64; 3],
    /// Initial entropy value.
    pub s0: f64,
    /// Advected direction; derived as `R0^T e_3` when absent.
    pub gamma0: Option<[f64; 3]>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            r0: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            repair_r0: false,
            omega0: [0.0, 1.0, 1.0],
            s0: 0.0,
            gamma0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub jacobian_mode: JacobianModeArg,
    pub fd_step: f64,
    pub initial_guess: InitialGuessArg,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            newton_tol: s.newton_tol,
            max_iterations: s.max_iterations,
            jacobian_mode: JacobianModeArg::Analytic,
            fd_step: s.fd_step,
            initial_guess: InitialGuessArg::PreviousOmega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianModeArg {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuessArg {
    PreviousOmega,
    RhsPredictor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Vi,
    Rk2,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Vi => Method::Vi,
            MethodArg::Rk2 => Method::Rk2,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Default CSV destination, overridden by the command line.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemKind,
    pub params: HeavyTopSection,
    pub double_bracket: DoubleBracketSection,
    pub initial: InitialSection,
    pub h: f64,
    pub steps: usize,
    pub method: MethodArg,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemKind::default(),
            params: HeavyTopSection::default(),
            double_bracket: DoubleBracketSection::default(),
            initial: InitialSection::default(),
            h: 0.1,
            steps: 2000,
            method: MethodArg::Vi,
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// A validated configuration, ready to hand to the simulation driver.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub system: PreparedSystem,
    pub initial: ReducedState,
    pub rotation0: Rotation,
    pub options: RunOptions,
    pub output_csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum PreparedSystem {
    HeavyTop(HeavyTopSystem),
    DoubleBracket(DoubleBracketSystem),
}

impl PreparedSystem {
    pub fn heat_capacity(&self) -> f64 {
        match self {
            PreparedSystem::HeavyTop(sys) => sys.derived().heat_capacity,
            PreparedSystem::DoubleBracket(sys) => sys.params().heat_capacity,
        }
    }
}

fn mat_from_rows(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_rows(&[
        Vec3::new(rows[0][0], rows[0][1], rows[0][2]).transpose(),
        Vec3::new(rows[1][0], rows[1][1], rows[1][2]).transpose(),
        Vec3::new(rows[2][0], rows[2][1], rows[2][2]).transpose(),
    ])
}

pub fn from_str(text: &str) -> Result<RunConfig, ConfigError> {
    Ok(serde_json::from_str(text)?)
}

impl RunConfig {
    pub fn prepare(&self) -> Result<PreparedRun, ConfigError> {
        let system = match self.system {
            SystemKind::HeavyTop => PreparedSystem::HeavyTop(
                HeavyTopSystem::from_params(&self.params.to_params()).map_err(|e| {
                    let field = match &e {
                        thermotop_core::systems::SystemsError::InvalidParameter {
                            field, ..
                        } => format!("params.{field}"),
                        _ => "params".to_string(),
                    };
                    invalid(&field, e.to_string())
                })?,
            ),
            SystemKind::DoubleBracket => {
                let db = &self.double_bracket;
                if !(db.lambda >= 0.0 && db.lambda.is_finite()) {
                    return Err(invalid(
                        "double_bracket.lambda",
                        format!("must be nonnegative and finite, got {}", db.lambda),
                    ));
                }
                for (name, value) in [
                    ("double_bracket.t0", db.t0),
                    ("double_bracket.heat_capacity", db.heat_capacity),
                ] {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(invalid(
                            name,
                            format!("must be strictly positive and finite, got {value}"),
                        ));
                    }
                }
                if !db.s0.is_finite() {
                    return Err(invalid("double_bracket.s0", "must be finite"));
                }
                let params = DoubleBracketParams {
                    inertia: mat_from_rows(&db.inertia),
                    lambda: Lambda::Constant(db.lambda),
                    t0: db.t0,
                    s0: db.s0,
                    heat_capacity: db.heat_capacity,
                };
                PreparedSystem::DoubleBracket(
                    DoubleBracketSystem::new(params)
                        .map_err(|e| invalid("double_bracket.inertia", e.to_string()))?,
                )
            }
        };

        let m = mat_from_rows(&self.initial.r0);
        let rotation0 = if self.initial.repair_r0 {
            Rotation::repaired(m)
        } else {
            Rotation::new(m)
        }
        .map_err(|e| invalid("initial.r0", e.to_string()))?;

        let gamma0 = match self.initial.gamma0 {
            Some(g) => Vec3::new(g[0], g[1], g[2]),
            None => rotation0.inverse_rotate(&Vec3::new(0.0, 0.0, 1.0)),
        };
        let omega0 = Vec3::new(
            self.initial.omega0[0],
            self.initial.omega0[1],
            self.initial.omega0[2],
        );
        if !omega0.iter().all(|c| c.is_finite()) {
            return Err(invalid("initial.omega0", "components must be finite"));
        }
        if !self.initial.s0.is_finite() {
            return Err(invalid("initial.s0", "must be finite"));
        }
        let initial = ReducedState::new(omega0, gamma0, self.initial.s0);
        initial
            .validate_gamma_norm()
            .map_err(|e| invalid("initial.gamma0", e.to_string()))?;

        let mut options = RunOptions::new(self.h, self.steps, self.method.into());
        options.solver = SolverSettings {
            newton_tol: self.solver.newton_tol,
            max_iterations: self.solver.max_iterations,
            jacobian_mode: match self.solver.jacobian_mode {
                JacobianModeArg::Analytic => JacobianMode::Analytic,
                JacobianModeArg::FiniteDifference => JacobianMode::FiniteDifference,
            },
            fd_step: self.solver.fd_step,
            initial_guess: match self.solver.initial_guess {
                InitialGuessArg::PreviousOmega => InitialGuess::PreviousOmega,
                InitialGuessArg::RhsPredictor => InitialGuess::RhsPredictor,
            },
        };
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid(
                "h",
                format!("must be strictly positive and finite, got {}", self.h),
            ));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        options
            .solver
            .validate()
            .map_err(|message| invalid("solver", message))?;

        Ok(PreparedRun {
            system,
            initial,
            rotation0,
            options,
            output_csv: self.output.csv.clone(),
        })
    }
}
