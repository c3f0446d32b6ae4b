//! Trajectory-level diagnostics: per-sample records with energy
//! decomposition, drift statistics, the discrete Kelvin-Noether identity,
//! and convergence-order estimation.

use crate::continuous::energy_parts;
use crate::integrator::kelvin_noether_discrete;
use crate::so3::{Rotation, Vec3};
use crate::systems::{HeavyTopDerived, ReducedState, ThermoSystem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need at least two finite records, found {found}")]
    InsufficientData { found: usize },
    #[error("reference step {h_ref} too coarse: must be at most {required} (min h / 20)")]
    ReferenceTooCoarse { h_ref: f64, required: f64 },
    #[error("invalid step list: {message}")]
    InvalidStepList { message: String },
    #[error("integration at h = {h} failed: {message}")]
    IntegrationFailed { h: f64, message: String },
}

/// One time sample of the state together with derived quantities.
///
/// `e_total` is the literal sum `e_kin + e_pot + e_int`, so the
/// decomposition identity holds bitwise. `kn_value` and `com` are present
/// only for systems that transport an advected direction / expose a center
/// of mass; the solver statistics only for implicit steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub omega: Vec3,
    pub gamma: Vec3,
    pub entropy: f64,
    pub temperature: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_int: f64,
    pub e_total: f64,
    pub kn_value: Option<f64>,
    pub pi_norm: f64,
    pub gamma_norm: f64,
    pub com: Option<Vec3>,
    pub newton_iterations: Option<usize>,
    pub residual_norm: Option<f64>,
}

/// Assemble the record for step `k` at time `k h`.
pub fn record<S: ThermoSystem>(
    st: &ReducedState,
    rotation: &Rotation,
    sys: &S,
    k: usize,
    h: f64,
    solver_stats: Option<(usize, f64)>,
) -> TrajectoryRecord {
    let (e_kin, e_pot, e_int) = energy_parts(st, sys);
    let kn_value = sys
        .has_advected_parameter()
        .then(|| kelvin_noether_discrete(&st.gamma, &st.omega, h, sys.inertia()));
    TrajectoryRecord {
        step: k,
        t: k as f64 * h,
        omega: st.omega,
        gamma: st.gamma,
        entropy: st.entropy,
        temperature: sys.temperature(st.entropy),
        e_kin,
        e_pot,
        e_int,
        e_total: e_kin + e_pot + e_int,
        kn_value,
        pi_norm: (sys.inertia() * st.omega).norm(),
        gamma_norm: st.gamma.norm(),
        com: sys.center_of_mass(rotation),
        newton_iterations: solver_stats.map(|(iters, _)| iters),
        residual_norm: solver_stats.map(|(_, res)| res),
    }
}

/// Aggregate statistics over one run.
///
/// All statistics are taken over the maximal leading run of records whose
/// total energy is finite (`finite_records` of them), so a diverging
/// explicit run still yields finite, meaningful numbers; `finite_records`
/// equal to the record count certifies nothing was cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub max_rel_energy_dev: f64,
    /// Least-squares slope of total energy against time, in J/s.
    pub energy_drift_slope: f64,
    pub min_entropy_increment: f64,
    /// Largest Kelvin-Noether identity residual; absent when the system has
    /// no advected direction.
    pub max_kn_identity_residual: Option<f64>,
    pub max_gamma_norm_dev: f64,
    pub max_orthogonality_defect: f64,
    pub wall_clock_seconds: f64,
    pub finite_records: usize,
}

/// Length of the maximal leading run of finite-total-energy records.
pub fn finite_prefix_len(records: &[TrajectoryRecord]) -> usize {
    records
        .iter()
        .position(|r| !r.e_total.is_finite())
        .unwrap_or(records.len())
}

/// Maximum relative total-energy deviation from the initial value, and the
/// least-squares drift slope of energy against time. Statistics run over the
/// finite-energy prefix of the series; fewer than two finite records is an
/// error.
pub fn energy_drift_stats(records: &[TrajectoryRecord]) -> Result<(f64, f64), DiagnosticsError> {
    let n = finite_prefix_len(records);
    if n < 2 {
        return Err(DiagnosticsError::InsufficientData { found: n });
    }
    let records = &records[..n];
    let e0 = records[0].e_total;
    let max_rel_dev = records
        .iter()
        .map(|r| (r.e_total - e0).abs() / e0.abs())
        .fold(0.0f64, f64::max);
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let es: Vec<f64> = records.iter().map(|r| r.e_total).collect();
    Ok((max_rel_dev, least_squares_slope(&ts, &es)))
}

/// Slope of the least-squares line through `(xs, ys)`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    cov / var
}

/// Residuals of the discrete Kelvin-Noether identity along a trajectory:
/// `r_k = I_k - I_{k-1} + gamma h^2 (Gamma_k . omega_k)` for `k >= 1`.
///
/// Along a variational trajectory these sit at solver precision; along a
/// Runge-Kutta trajectory they are ordinary O(h^3) local errors, which is
/// exactly what distinguishes the schemes.
pub fn kn_identity_residuals(
    records: &[TrajectoryRecord],
    h: f64,
    derived: &HeavyTopDerived,
) -> Vec<f64> {
    let n = finite_prefix_len(records);
    records[..n]
        .windows(2)
        .filter_map(|pair| {
            let (prev, cur) = (&pair[0], &pair[1]);
            let i_prev = prev.kn_value?;
            let i_cur = cur.kn_value?;
            Some(i_cur - i_prev + derived.friction_coeff * h * h * cur.gamma.dot(&cur.omega))
        })
        .collect()
}

/// Build the aggregate summary for a run. `max_orthogonality_defect` comes
/// from the caller because records do not carry the rotation matrices.
pub fn summarize(
    records: &[TrajectoryRecord],
    h: f64,
    derived: Option<&HeavyTopDerived>,
    max_orthogonality_defect: f64,
    wall_clock_seconds: f64,
) -> Result<RunSummary, DiagnosticsError> {
    let (max_rel_energy_dev, energy_drift_slope) = energy_drift_stats(records)?;
    let n = finite_prefix_len(records);
    let finite = &records[..n];
    let min_entropy_increment = finite
        .windows(2)
        .map(|pair| pair[1].entropy - pair[0].entropy)
        .fold(f64::INFINITY, f64::min);
    let max_kn_identity_residual = derived.and_then(|d| {
        let residuals = kn_identity_residuals(records, h, d);
        (!residuals.is_empty()).then(|| residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs())))
    });
    let max_gamma_norm_dev = finite
        .iter()
        .map(|r| (r.gamma_norm - 1.0).abs())
        .fold(0.0f64, f64::max);
    Ok(RunSummary {
        max_rel_energy_dev,
        energy_drift_slope,
        min_entropy_increment,
        max_kn_identity_residual,
        max_gamma_norm_dev,
        max_orthogonality_defect,
        wall_clock_seconds,
        finite_records: n,
    })
}

/// Final state of a fine reference trajectory together with the step it was
/// produced at, used to gate convergence studies.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSolution {
    pub state: ReducedState,
    pub h: f64,
}

/// Result of a convergence study: per-step errors against the reference,
/// pairwise local orders, and the global least-squares order.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `(h, error)` pairs in the order of the input list.
    pub errors: Vec<(f64, f64)>,
    /// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive entries.
    pub local_orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log h`.
    pub order: f64,
}

/// Distance between reduced states under the weighted Euclidean norm with
/// weights `(1, 1, 1/heat_capacity)` on `(omega, gamma, S)`; the entropy
/// weight balances units so no single block dominates.
pub fn weighted_state_distance(a: &ReducedState, b: &ReducedState, heat_capacity: f64) -> f64 {
    let ds = (a.entropy - b.entropy) / heat_capacity;
    ((a.omega - b.omega).norm_squared() + (a.gamma - b.gamma).norm_squared() + ds * ds).sqrt()
}

/// Estimate the order of a one-step method from final-state errors against a
/// much finer reference.
///
/// `integrate` maps a step size to the state at the common final time.
/// `h_list` must be strictly descending with at least three entries, and the
/// reference step at most `min(h_list) / 20`. Zero errors (schemes that are
/// exact on the test problem) are floored at the smallest positive double
/// before the log fit.
pub fn convergence_order<F>(
    h_list: &[f64],
    integrate: F,
    reference: &ReferenceSolution,
    heat_capacity: f64,
) -> Result<ConvergenceReport, DiagnosticsError>
where
    F: Fn(f64) -> Result<ReducedState, String>,
{
    if h_list.len() < 3 {
        return Err(DiagnosticsError::InvalidStepList {
            message: format!("need at least 3 step sizes, got {}", h_list.len()),
        });
    }
    if h_list.iter().any(|&h| !h.is_finite() || h <= 0.0) {
        return Err(DiagnosticsError::InvalidStepList {
            message: "step sizes must be positive".to_string(),
        });
    }
    if h_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(DiagnosticsError::InvalidStepList {
            message: "step sizes must be strictly descending".to_string(),
        });
    }
    let h_min = h_list[h_list.len() - 1];
    let required = h_min / 20.0;
    if reference.h > required {
        return Err(DiagnosticsError::ReferenceTooCoarse {
            h_ref: reference.h,
            required,
        });
    }
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let state =
            integrate(h).map_err(|message| DiagnosticsError::IntegrationFailed { h, message })?;
        errors.push((
            h,
            weighted_state_distance(&state, &reference.state, heat_capacity),
        ));
    }
    let local_orders = errors
        .windows(2)
        .map(|w| {
            let (h0, e0) = w[0];
            let (h1, e1) = w[1];
            (e0.max(f64::MIN_POSITIVE) / e1.max(f64::MIN_POSITIVE)).ln() / (h0 / h1).ln()
        })
        .collect();
    let log_h: Vec<f64> = errors.iter().map(|(h, _)| h.ln()).collect();
    let log_e: Vec<f64> = errors
        .iter()
        .map(|(_, e)| e.max(f64::MIN_POSITIVE).ln())
        .collect();
    let order = least_squares_slope(&log_h, &log_e);
    Ok(ConvergenceReport {
        errors,
        local_orders,
        order,
    })
}
