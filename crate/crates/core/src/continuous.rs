//! Continuous reduced dynamics and reference steppers.
//!
//! The right-hand side assembles the momentum balance
//! `d(dl/domega)/dt = coad(omega, dl/domega) - J(gamma, dl/dgamma) + f_ext + f_fr`,
//! the advection law `d(gamma)/dt = gamma x omega`, and the entropy equation
//! `dS/dt = (-<f_fr, omega> + p_H) / T(S)`. The explicit Runge-Kutta steppers
//! integrate this system in R^7 with no constraint projection, deliberately:
//! norm and energy drift of the baselines are quantities of interest.
//!
//! A singular inertia tensor is rejected when the system is constructed, so
//! everything here is total on validated systems.

use crate::so3::Vec3;
use crate::systems::{momentum_map_j, ReducedState, ThermoSystem};

/// Time derivative of a [`ReducedState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub d_omega: Vec3,
    pub d_gamma: Vec3,
    pub d_entropy: f64,
}

/// Selects which two-stage Runge-Kutta scheme [`rk2_step_with`] uses. The
/// default everywhere is Heun; midpoint is kept behind this switch so golden
/// outputs stay tied to one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rk2Variant {
    #[default]
    Heun,
    Midpoint,
}

fn add_scaled(st: &ReducedState, d: &StateDerivative, c: f64) -> ReducedState {
    ReducedState {
        omega: st.omega + d.d_omega * c,
        gamma: st.gamma + d.d_gamma * c,
        entropy: st.entropy + d.d_entropy * c,
    }
}

/// Continuous reduced dynamics of a thermodynamic system on SO(3).
pub fn rhs<S: ThermoSystem>(st: &ReducedState, sys: &S) -> StateDerivative {
    let momentum = sys.dl_domega(st);
    let torque = crate::so3::coad(&st.omega, &momentum)
        - momentum_map_j(&st.gamma, &sys.dl_dgamma(st))
        + sys.force_external(st)
        + sys.force_friction(st);
    StateDerivative {
        d_omega: sys.inertia_inv() * torque,
        d_gamma: if sys.has_advected_parameter() {
            st.gamma.cross(&st.omega)
        } else {
            Vec3::zeros()
        },
        d_entropy: sys.entropy_production_rate(st),
    }
}

/// One step of Heun's method (explicit trapezoidal rule).
pub fn rk2_step<S: ThermoSystem>(st: &ReducedState, h: f64, sys: &S) -> ReducedState {
    rk2_step_with(st, h, sys, Rk2Variant::Heun)
}

/// One two-stage Runge-Kutta step in the requested variant.
pub fn rk2_step_with<S: ThermoSystem>(
    st: &ReducedState,
    h: f64,
    sys: &S,
    variant: Rk2Variant,
) -> ReducedState {
    let k1 = rhs(st, sys);
    match variant {
        Rk2Variant::Heun => {
            let k2 = rhs(&add_scaled(st, &k1, h), sys);
            ReducedState {
                omega: st.omega + (k1.d_omega + k2.d_omega) * (h / 2.0),
                gamma: st.gamma + (k1.d_gamma + k2.d_gamma) * (h / 2.0),
                entropy: st.entropy + (k1.d_entropy + k2.d_entropy) * (h / 2.0),
            }
        }
        Rk2Variant::Midpoint => {
            let k2 = rhs(&add_scaled(st, &k1, h / 2.0), sys);
            add_scaled(st, &k2, h)
        }
    }
}

/// One classical four-stage Runge-Kutta step; the high-accuracy reference for
/// convergence studies.
pub fn rk4_step<S: ThermoSystem>(st: &ReducedState, h: f64, sys: &S) -> ReducedState {
    let k1 = rhs(st, sys);
    let k2 = rhs(&add_scaled(st, &k1, h / 2.0), sys);
    let k3 = rhs(&add_scaled(st, &k2, h / 2.0), sys);
    let k4 = rhs(&add_scaled(st, &k3, h), sys);
    ReducedState {
        omega: st.omega
            + (k1.d_omega + k2.d_omega * 2.0 + k3.d_omega * 2.0 + k4.d_omega) * (h / 6.0),
        gamma: st.gamma
            + (k1.d_gamma + k2.d_gamma * 2.0 + k3.d_gamma * 2.0 + k4.d_gamma) * (h / 6.0),
        entropy: st.entropy
            + (k1.d_entropy + k2.d_entropy * 2.0 + k3.d_entropy * 2.0 + k4.d_entropy) * (h / 6.0),
    }
}

/// Total energy, assembled as kinetic + potential + internal so the
/// decomposition sums exactly by construction. Coincides with the Legendre
/// form `<dl/domega, omega> - l` up to round-off.
pub fn energy<S: ThermoSystem>(st: &ReducedState, sys: &S) -> f64 {
    let (kin, pot, int) = energy_parts(st, sys);
    kin + pot + int
}

/// Kinetic, potential, and internal energy of a state.
pub fn energy_parts<S: ThermoSystem>(st: &ReducedState, sys: &S) -> (f64, f64, f64) {
    let kin = 0.5 * sys.dl_domega(st).dot(&st.omega);
    (
        kin,
        sys.potential_energy(st),
        sys.internal_energy(st.entropy),
    )
}

/// Rate of change of the spatial momentum component `<dl/domega, gamma>`
/// along the flow. The conservative terms cancel in pairs, leaving only the
/// force projection `<f_ext + f_fr, gamma>`; for the heavy top this is
/// `-gamma_fric (gamma . omega)` and vanishes when friction does.
pub fn kelvin_noether_rate<S: ThermoSystem>(st: &ReducedState, sys: &S) -> f64 {
    (sys.force_external(st) + sys.force_friction(st)).dot(&st.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::Mat3;
    use crate::systems::{
        derive_params, DoubleBracketParams, DoubleBracketSystem, HeavyTopParams, HeavyTopSystem,
        Lambda,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn default_system() -> HeavyTopSystem {
        HeavyTopSystem::new(derive_params(&HeavyTopParams::default()).unwrap())
    }

    fn free_body() -> DoubleBracketSystem {
        DoubleBracketSystem::new(DoubleBracketParams {
            inertia: Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)),
            lambda: Lambda::Constant(0.0),
            t0: 300.0,
            s0: 0.0,
            heat_capacity: 100.0,
        })
        .unwrap()
    }

    /// Minimal system whose entropy equation is the linear scalar ODE
    /// dS/dt = rate * S: no friction, heat power chosen as rate * S * T(S).
    struct ScalarEntropySystem {
        inertia: Mat3,
        inertia_inv: Mat3,
        rate: f64,
    }

    impl ScalarEntropySystem {
        fn new(rate: f64) -> Self {
            Self {
                inertia: Mat3::identity(),
                inertia_inv: Mat3::identity(),
                rate,
            }
        }
    }

    impl ThermoSystem for ScalarEntropySystem {
        fn lagrangian(&self, st: &ReducedState) -> f64 {
            0.5 * st.omega.norm_squared() - self.internal_energy(st.entropy)
        }
        fn dl_domega(&self, st: &ReducedState) -> Vec3 {
            st.omega
        }
        fn dl_dgamma(&self, _st: &ReducedState) -> Vec3 {
            Vec3::zeros()
        }
        fn force_friction(&self, _st: &ReducedState) -> Vec3 {
            Vec3::zeros()
        }
        fn heat_power_external(&self, st: &ReducedState) -> f64 {
            self.rate * st.entropy * self.temperature(st.entropy)
        }
        fn temperature(&self, s: f64) -> f64 {
            300.0 * (s / 1000.0).exp()
        }
        fn internal_energy(&self, s: f64) -> f64 {
            1000.0 * self.temperature(s)
        }
        fn inertia(&self) -> &Mat3 {
            &self.inertia
        }
        fn inertia_inv(&self) -> &Mat3 {
            &self.inertia_inv
        }
        fn has_advected_parameter(&self) -> bool {
            false
        }
    }

    #[test]
    fn rhs_vanishes_at_the_hanging_equilibrium() {
        let sys = default_system();
        let st = ReducedState::new(Vec3::zeros(), sys.derived().chi, sys.derived().s0);
        let d = rhs(&st, &sys);
        assert_eq!(d.d_omega, Vec3::zeros());
        assert_eq!(d.d_gamma, Vec3::zeros());
        assert_eq!(d.d_entropy, 0.0);
    }

    #[test]
    fn rhs_reduces_to_the_euler_equations_for_the_free_body() {
        let sys = free_body();
        let st = ReducedState::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        let d = rhs(&st, &sys);
        // Hand-evaluated: inertia^-1 ((I omega) x omega) at omega = (1,2,3).
        assert_abs_diff_eq!(d.d_omega, Vec3::new(-6.0, 3.0, -2.0 / 3.0), epsilon = 1e-14);
        assert_eq!(d.d_gamma, Vec3::zeros());
        assert_eq!(d.d_entropy, 0.0);
    }

    #[test]
    fn rhs_entropy_rate_matches_the_production_formula() {
        let sys = default_system();
        let st = ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        assert_relative_eq!(
            rhs(&st, &sys).d_entropy,
            2.0943951023931957e-6,
            max_relative = 1e-13
        );
    }

    #[test]
    fn rk2_fixes_equilibria_and_solves_the_linear_entropy_ode_exactly_per_stage() {
        let sys = default_system();
        let st = ReducedState::new(Vec3::zeros(), sys.derived().chi, sys.derived().s0);
        let next = rk2_step(&st, 0.1, &sys);
        assert_eq!(next, st);

        // Heun on dS/dt = rate * S reproduces 1 + z + z^2/2 exactly.
        let rate = 0.7;
        let scalar = ScalarEntropySystem::new(rate);
        let st = ReducedState::new(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0), 2.5);
        let h = 0.05;
        let z = rate * h;
        let next = rk2_step(&st, h, &scalar);
        assert_relative_eq!(
            next.entropy,
            st.entropy * (1.0 + z + z * z / 2.0),
            max_relative = 1e-15
        );
        // Midpoint shares the same linear stability polynomial.
        let mid = rk2_step_with(&st, h, &scalar, Rk2Variant::Midpoint);
        assert_relative_eq!(mid.entropy, next.entropy, max_relative = 1e-15);
    }

    #[test]
    fn rk2_matches_an_independent_heun_evaluation() {
        let sys = default_system();
        let st = ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        let h = 0.1;
        let k1 = rhs(&st, &sys);
        let predictor = ReducedState::new(
            st.omega + k1.d_omega * h,
            st.gamma + k1.d_gamma * h,
            st.entropy + k1.d_entropy * h,
        );
        let k2 = rhs(&predictor, &sys);
        let by_hand = ReducedState::new(
            st.omega + (k1.d_omega + k2.d_omega) * (h / 2.0),
            st.gamma + (k1.d_gamma + k2.d_gamma) * (h / 2.0),
            st.entropy + (k1.d_entropy + k2.d_entropy) * (h / 2.0),
        );
        let stepped = rk2_step(&st, h, &sys);
        assert_relative_eq!(stepped.omega, by_hand.omega, max_relative = 1e-15);
        assert_relative_eq!(stepped.gamma, by_hand.gamma, max_relative = 1e-15);
        assert_relative_eq!(stepped.entropy, by_hand.entropy, max_relative = 1e-15);
    }

    fn weighted_distance(a: &ReducedState, b: &ReducedState) -> f64 {
        ((a.omega - b.omega).norm_squared()
            + (a.gamma - b.gamma).norm_squared()
            + (a.entropy - b.entropy).powi(2))
        .sqrt()
    }

    #[test]
    fn rk4_equilibrium_and_local_order() {
        let sys = default_system();
        let eq = ReducedState::new(Vec3::zeros(), sys.derived().chi, sys.derived().s0);
        assert_eq!(rk4_step(&eq, 0.1, &sys), eq);

        // Richardson estimate of the local order on the frictionless top:
        // one step at h versus two at h/2, ratio across a halving of h.
        let free = HeavyTopSystem::new(derive_params(&HeavyTopParams::default()).unwrap())
            .with_friction_coeff(0.0);
        let st = ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        let defect = |h: f64| {
            let one = rk4_step(&st, h, &free);
            let half = rk4_step(&rk4_step(&st, h / 2.0, &free), h / 2.0, &free);
            weighted_distance(&one, &half)
        };
        let order = (defect(0.04) / defect(0.02)).log2();
        assert!(order >= 4.0, "observed local order {order}");
    }

    #[test]
    fn rk2_and_rk4_agree_to_third_order_on_one_step() {
        let sys = default_system();
        let st = ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        let gap = |h: f64| weighted_distance(&rk2_step(&st, h, &sys), &rk4_step(&st, h, &sys));
        let order = (gap(0.04) / gap(0.02)).log2();
        assert!(
            (2.5..=3.5).contains(&order),
            "rk2/rk4 gap shrank with order {order}"
        );
    }

    #[test]
    fn energy_reference_value_and_decomposition() {
        let sys = default_system();
        let d = sys.derived();
        let rest = ReducedState::new(Vec3::zeros(), d.chi, d.s0);
        assert_relative_eq!(
            energy(&rest, &sys),
            d.mgl() + d.heat_capacity * 300.0,
            max_relative = 1e-14
        );
        let st = ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.1, 0.0, 0.99), 1.0);
        let (kin, pot, int) = energy_parts(&st, &sys);
        assert_eq!(energy(&st, &sys), kin + pot + int);
        // Legendre form agrees with the assembled decomposition.
        assert_relative_eq!(
            energy(&st, &sys),
            sys.dl_domega(&st).dot(&st.omega) - sys.lagrangian(&st),
            max_relative = 1e-12
        );
    }

    #[test]
    fn kelvin_noether_rate_examples() {
        let sys = default_system();
        // omega orthogonal to gamma.
        let st = ReducedState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), 0.0);
        assert_eq!(kelvin_noether_rate(&st, &sys), 0.0);
        // Frictionless limit conserves the quantity.
        let free = default_system().with_friction_coeff(0.0);
        let st = ReducedState::new(Vec3::new(0.3, 0.4, 0.5), Vec3::new(0.0, 0.6, 0.8), 0.0);
        assert_eq!(kelvin_noether_rate(&st, &free), 0.0);
    }

    fn small_vec() -> impl Strategy<Value = Vec3> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn unit_vec() -> impl Strategy<Value = Vec3> {
        small_vec().prop_filter_map("nonzero", |v| {
            let n = v.norm();
            (n > 1e-3).then(|| v / n)
        })
    }

    proptest! {
        /// First law at the level of the vector field: the energy gradient is
        /// exactly orthogonal to the flow for the isolated system.
        #[test]
        fn energy_gradient_annihilates_the_rhs(
            omega in small_vec(),
            gamma in unit_vec(),
            s in -20.0..20.0f64,
        ) {
            let sys = default_system();
            let st = ReducedState::new(omega, gamma, s);
            let d = rhs(&st, &sys);
            let kin_rate = sys.dl_domega(&st).dot(&d.d_omega);
            let pot_rate = -sys.dl_dgamma(&st).dot(&d.d_gamma);
            let int_rate = sys.temperature(st.entropy) * d.d_entropy;
            let total = kin_rate + pot_rate + int_rate;
            let scale = kin_rate.abs() + pot_rate.abs() + int_rate.abs();
            prop_assert!(total.abs() <= 1e-12 * scale.max(1e-30));
        }

        #[test]
        fn advection_is_tangent_to_the_sphere(omega in small_vec(), gamma in unit_vec()) {
            let sys = default_system();
            let st = ReducedState::new(omega, gamma, 0.0);
            let d = rhs(&st, &sys);
            prop_assert!(st.gamma.dot(&d.d_gamma).abs() <= 1e-15);
        }

        #[test]
        fn entropy_production_is_nonnegative(omega in small_vec(), s in -20.0..20.0f64) {
            let sys = default_system();
            let st = ReducedState::new(omega, Vec3::new(0.0, 0.0, 1.0), s);
            prop_assert!(rhs(&st, &sys).d_entropy >= 0.0);
        }

        #[test]
        fn momentum_sphere_is_preserved_by_the_double_bracket_flow(
            omega in small_vec(),
            s in -20.0..20.0f64,
        ) {
            let sys = DoubleBracketSystem::new(DoubleBracketParams {
                inertia: Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)),
                lambda: Lambda::Constant(0.5),
                t0: 300.0,
                s0: 0.0,
                heat_capacity: 100.0,
            }).unwrap();
            let st = ReducedState::new(omega, Vec3::new(0.0, 0.0, 1.0), s);
            let d = rhs(&st, &sys);
            let mu = sys.momentum(&st);
            let mu_dot = sys.inertia() * d.d_omega;
            let scale = (mu.norm() * mu_dot.norm()).max(1e-30);
            prop_assert!(mu.dot(&mu_dot).abs() <= 1e-13 * scale);
        }

        /// d/dt <dl/domega, gamma> through the chain rule along the rhs equals
        /// the force projection.
        #[test]
        fn kelvin_noether_rate_matches_the_chain_rule(
            omega in small_vec(),
            gamma in unit_vec(),
            s in -5.0..5.0f64,
        ) {
            let sys = default_system();
            let st = ReducedState::new(omega, gamma, s);
            let d = rhs(&st, &sys);
            let chained = (sys.inertia() * d.d_omega).dot(&st.gamma)
                + sys.dl_domega(&st).dot(&d.d_gamma);
            let rate = kelvin_noether_rate(&st, &sys);
            let scale = 1.0f64.max(chained.abs());
            prop_assert!((chained - rate).abs() <= 1e-12 * scale);
        }
    }
}
