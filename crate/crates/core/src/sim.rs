//! Trajectory orchestration: drives one of the time-stepping methods over a
//! fixed number of steps and assembles per-step records plus the run
//! summary.
//!
//! The variational path accumulates entropy with Neumaier compensation. Late
//! in a damped run the per-step entropy increment falls below the rounding
//! unit of the accumulated entropy, so a plain sum would stall while the
//! body still spins; the compensated pair keeps absorbing those increments,
//! and the raw increments are exposed for monotonicity checks that must not
//! depend on the rounding of the running sum.

use crate::continuous::{rk2_step_with, rk4_step, Rk2Variant};
use crate::diagnostics::{record, summarize, DiagnosticsError, RunSummary, TrajectoryRecord};
use crate::integrator::{vi_step, vi_step_generic, IntegratorError, SolverSettings};
use crate::so3::{cay, CayleyMap, Rotation};
use crate::systems::{DoubleBracketSystem, HeavyTopSystem, ReducedState, ThermoSystem};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Vi,
    Rk2,
    Rk4,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Vi => "vi",
            Method::Rk2 => "rk2",
            Method::Rk4 => "rk4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub h: f64,
    pub steps: usize,
    pub method: Method,
    pub solver: SolverSettings,
    pub rk2_variant: Rk2Variant,
}

impl RunOptions {
    pub fn new(h: f64, steps: usize, method: Method) -> Self {
        Self {
            h,
            steps,
            method,
            solver: SolverSettings::default(),
            rk2_variant: Rk2Variant::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(format!("h must be positive and finite, got {}", self.h));
        }
        if self.steps == 0 {
            return Err("steps must be at least 1".to_string());
        }
        self.solver.validate()
    }
}

/// The concrete system a run operates on. The heavy top gets the
/// closed-form implicit step; anything else goes through the generic
/// difference-map residual.
#[derive(Clone, Copy)]
pub enum SystemHandle<'a> {
    HeavyTop(&'a HeavyTopSystem),
    DoubleBracket(&'a DoubleBracketSystem),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid run options: {message}")]
    InvalidOptions { message: String },
    #[error("implicit solver failed at step {step}: {source}")]
    Solver {
        step: usize,
        source: IntegratorError,
    },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    pub summary: RunSummary,
    /// Per-step entropy increments of the variational path, before they are
    /// folded into the running sum; empty for the explicit methods.
    pub entropy_increments: Vec<f64>,
}

/// Neumaier-compensated running sum.
struct CompensatedSum {
    hi: f64,
    lo: f64,
}

impl CompensatedSum {
    fn new(value: f64) -> Self {
        Self { hi: value, lo: 0.0 }
    }

    fn add(&mut self, increment: f64) {
        let t = self.hi + increment;
        if self.hi.abs() >= increment.abs() {
            self.lo += (self.hi - t) + increment;
        } else {
            self.lo += (increment - t) + self.hi;
        }
        self.hi = t;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Run `options.steps` steps of the chosen method from the given initial
/// state and attitude, producing one record per node (including the initial
/// one) and the aggregate summary.
pub fn run(
    initial: &ReducedState,
    rotation0: &Rotation,
    system: SystemHandle<'_>,
    options: &RunOptions,
) -> Result<RunOutput, SimError> {
    options
        .validate()
        .map_err(|message| SimError::InvalidOptions { message })?;
    match system {
        SystemHandle::HeavyTop(sys) => run_impl(
            initial,
            rotation0,
            sys,
            options,
            Some(sys.derived()),
            |st, rotation| vi_step(st, rotation, options.h, sys, &options.solver),
        ),
        SystemHandle::DoubleBracket(sys) => {
            run_impl(initial, rotation0, sys, options, None, |st, rotation| {
                vi_step_generic(st, rotation, options.h, sys, &CayleyMap, &options.solver)
            })
        }
    }
}

fn run_impl<S, F>(
    initial: &ReducedState,
    rotation0: &Rotation,
    sys: &S,
    options: &RunOptions,
    derived: Option<&crate::systems::HeavyTopDerived>,
    mut implicit_step: F,
) -> Result<RunOutput, SimError>
where
    S: ThermoSystem,
    F: FnMut(&ReducedState, &Rotation) -> Result<crate::integrator::DiscreteStep, IntegratorError>,
{
    let start = Instant::now();
    let h = options.h;
    let mut st = *initial;
    let mut rotation = *rotation0;
    let mut max_defect = rotation.orthogonality_defect();
    let mut records = Vec::with_capacity(options.steps + 1);
    records.push(record(&st, &rotation, sys, 0, h, None));
    let mut entropy_increments = Vec::new();
    let mut entropy = CompensatedSum::new(initial.entropy);

    for k in 1..=options.steps {
        let solver_stats = match options.method {
            Method::Vi => {
                let step = implicit_step(&st, &rotation)
                    .map_err(|source| SimError::Solver { step: k, source })?;
                let increment = h * sys.entropy_production_rate(&st);
                entropy_increments.push(increment);
                entropy.add(increment);
                st = ReducedState::new(
                    step.state_next.omega,
                    step.state_next.gamma,
                    entropy.value(),
                );
                rotation = step.rotation_next;
                Some((step.newton_iterations, step.residual_norm))
            }
            Method::Rk2 | Method::Rk4 => {
                let next = match options.method {
                    Method::Rk2 => rk2_step_with(&st, h, sys, options.rk2_variant),
                    _ => rk4_step(&st, h, sys),
                };
                let omega_mid = (st.omega + next.omega) * 0.5;
                // Once a run blows up the midpoint velocity is either
                // non-finite or so large that the Cayley image fails the
                // orthogonality check; from then on the attitude is reported
                // as lost rather than as a stale or garbage rotation.
                rotation = if omega_mid.iter().all(|c| c.is_finite()) {
                    match cay(&(omega_mid * h)) {
                        Ok(turn) => rotation.compose(&turn),
                        Err(_) => Rotation::non_finite(),
                    }
                } else {
                    Rotation::non_finite()
                };
                st = next;
                None
            }
        };
        max_defect = max_defect.max(rotation.orthogonality_defect());
        records.push(record(&st, &rotation, sys, k, h, solver_stats));
    }

    let summary = summarize(
        &records,
        h,
        derived,
        max_defect,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(RunOutput {
        records,
        summary,
        entropy_increments,
    })
}
