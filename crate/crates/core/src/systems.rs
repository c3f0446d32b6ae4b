//! Reduced thermodynamic systems on SO(3).
//!
//! A system bundles a reduced Lagrangian `l(omega, gamma, S)` with its partial
//! derivatives, friction and external forces, external heat power, and the
//! temperature law `T(S) = dU/dS`. Two instances ship: a heavy top immersed in
//! Stokes flow (viscous torque `-8 pi mu a^3 omega`, Dulong-Petit internal
//! energy) and a double-bracket dissipative rigid body.

use crate::so3::{Mat3, Rotation, Vec3};
use thiserror::Error;

/// Universal molar gas constant, exact in SI units (J / (mol K)).
pub const MOLAR_GAS_CONSTANT: f64 = 8.31446261815324;

/// Below this dimensionless offset the two hemisphere moments cancel and the
/// center of mass sits on the pivot, leaving the symmetry axis undefined.
const LEVER_DEGENERACY_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SystemsError {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },
    /// The hemisphere mass split puts the center of mass exactly on the
    /// pivot, so the symmetry axis direction cannot be derived. The caller
    /// must choose an axis explicitly.
    #[error(
        "center of mass coincides with the pivot (offset {offset:.3e} m); axis direction undefined"
    )]
    DegenerateLever { offset: f64 },
    #[error("inertia tensor is singular or not positive definite")]
    SingularInertia,
    /// Advected direction must stay on the unit sphere at ingestion time.
    #[error("advected direction norm {norm} is outside [1 - 1e-6, 1 + 1e-6]")]
    GammaNorm { norm: f64 },
}

/// Physical parameters of the heavy top in Stokes flow, in SI units.
///
/// Defaults reproduce the reference experiment: an aluminium sphere of radius
/// 5 cm in motor oil, split into a solid upper and a hollow lower hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTopParams {
    /// Sphere radius a (m).
    pub radius: f64,
    /// Dynamic viscosity of the surrounding fluid (kg m^-1 s^-1).
    pub viscosity: f64,
    /// Material density (kg m^-3).
    pub density: f64,
    /// Fraction of the total mass in the upper (solid) hemisphere, in (0, 1).
    pub upper_mass_fraction: f64,
    /// Gravitational acceleration (m s^-2).
    pub gravity: f64,
    /// Molar mass (kg mol^-1).
    pub molar_mass: f64,
    /// Molar gas constant (J mol^-1 K^-1).
    pub gas_constant: f64,
    /// Reference temperature T0 (K) at the reference entropy.
    pub t0: f64,
    /// Reference entropy S0 (J K^-1).
    pub s0: f64,
}

impl Default for HeavyTopParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            viscosity: 0.1,
            density: 2700.0,
            upper_mass_fraction: 0.6,
            gravity: 9.81,
            molar_mass: 26.981539e-3,
            gas_constant: MOLAR_GAS_CONSTANT,
            t0: 300.0,
            s0: 0.0,
        }
    }
}

impl HeavyTopParams {
    /// Checks positivity of every dimensional parameter and the open-interval
    /// constraint on the mass fraction. Error messages carry the field name.
    pub fn validate(&self) -> Result<(), SystemsError> {
        let positive: [(&'static str, f64); 7] = [
            ("radius", self.radius),
            ("viscosity", self.viscosity),
            ("density", self.density),
            ("gravity", self.gravity),
            ("molar_mass", self.molar_mass),
            ("gas_constant", self.gas_constant),
            ("t0", self.t0),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(SystemsError::InvalidParameter {
                    field,
                    message: format!("must be strictly positive and finite, got {value}"),
                });
            }
        }
        if !self.s0.is_finite() {
            return Err(SystemsError::InvalidParameter {
                field: "s0",
                message: format!("must be finite, got {}", self.s0),
            });
        }
        if !(self.upper_mass_fraction > 0.0 && self.upper_mass_fraction < 1.0) {
            return Err(SystemsError::InvalidParameter {
                field: "upper_mass_fraction",
                message: format!(
                    "must lie strictly inside (0, 1), got {}",
                    self.upper_mass_fraction
                ),
            });
        }
        Ok(())
    }
}

/// Quantities derived from [`HeavyTopParams`]: masses, lever arm, inertia,
/// friction coefficient, heat capacity, plus the reference values the
/// dynamics itself consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTopDerived {
    /// Total mass m = (4/3) pi a^3 rho (kg).
    pub mass: f64,
    /// Upper (solid) hemisphere mass (kg).
    pub m1: f64,
    /// Lower (hollow) hemisphere mass (kg).
    pub m2: f64,
    /// Distance from the pivot to the center of mass (m), nonnegative.
    pub lever: f64,
    /// Unit vector from the pivot toward the center of mass, in the body
    /// frame; the sign of the hemisphere offset is folded in here so the
    /// lever stays a length.
    pub chi: Vec3,
    /// Body inertia tensor (kg m^2), diagonal.
    pub inertia: Mat3,
    /// Viscous friction coefficient gamma = 8 pi mu a^3 (N m s).
    pub friction_coeff: f64,
    /// Amount of substance N0 = m / M (mol).
    pub moles: f64,
    /// Dulong-Petit heat capacity c_v = 3 N0 R (J K^-1).
    pub heat_capacity: f64,
    /// Gravitational acceleration (m s^-2), carried through for the dynamics.
    pub gravity: f64,
    /// Reference temperature (K).
    pub t0: f64,
    /// Reference entropy (J K^-1).
    pub s0: f64,
}

impl HeavyTopDerived {
    /// Gravitational torque scale m g l (J).
    pub fn mgl(&self) -> f64 {
        self.mass * self.gravity * self.lever
    }

    /// Temperature law T(S) = T0 exp((S - S0) / c_v).
    pub fn temperature(&self, s: f64) -> f64 {
        temperature(s, self.t0, self.s0, self.heat_capacity)
    }

    /// Internal energy U(S) = c_v T(S); satisfies dU/dS = T.
    pub fn internal_energy(&self, s: f64) -> f64 {
        self.heat_capacity * self.temperature(s)
    }
}

/// Exponential temperature law shared by both shipped models:
/// `T(S) = T0 exp((S - S0) / c_v)`, strictly positive for finite input, with
/// `dT/dS = T / c_v`.
pub fn temperature(s: f64, t0: f64, s0: f64, heat_capacity: f64) -> f64 {
    t0 * ((s - s0) / heat_capacity).exp()
}

/// Computes every derived quantity from the physical parameters.
///
/// The center of mass offset along the symmetry axis is
/// `G_z = (3 m1 / (8 m) - m2 / (2 m)) a`; its magnitude becomes the lever and
/// its sign orients `chi`. An offset below round-off resolution is reported
/// as [`SystemsError::DegenerateLever`] rather than producing an arbitrary
/// axis.
pub fn derive_params(p: &HeavyTopParams) -> Result<HeavyTopDerived, SystemsError> {
    p.validate()?;
    let a = p.radius;
    let mass = 4.0 / 3.0 * std::f64::consts::PI * a.powi(3) * p.density;
    let m1 = p.upper_mass_fraction * mass;
    let m2 = mass - m1;
    // Dimensionless center-of-mass offset of the two-hemisphere composite.
    let coefficient = 3.0 * m1 / (8.0 * mass) - m2 / (2.0 * mass);
    if coefficient.abs() <= LEVER_DEGENERACY_TOL {
        return Err(SystemsError::DegenerateLever {
            offset: coefficient * a,
        });
    }
    let lever = coefficient.abs() * a;
    let chi = Vec3::new(0.0, 0.0, coefficient.signum());
    let a2 = a * a;
    // Sum of the hemisphere inertia tensors about the sphere center.
    let i_transverse = 83.0 / 320.0 * a2 * m1 + a2 * m2 / 12.0;
    let i_axial = 2.0 / 5.0 * a2 * m1 + a2 * m2 / 3.0;
    let inertia = Mat3::from_diagonal(&Vec3::new(i_transverse, i_transverse, i_axial));
    let moles = mass / p.molar_mass;
    Ok(HeavyTopDerived {
        mass,
        m1,
        m2,
        lever,
        chi,
        inertia,
        friction_coeff: 8.0 * std::f64::consts::PI * p.viscosity * a.powi(3),
        moles,
        heat_capacity: 3.0 * moles * p.gas_constant,
        gravity: p.gravity,
        t0: p.t0,
        s0: p.s0,
    })
}

/// Reduced state of a thermodynamic system on SO(3): body angular velocity,
/// advected direction (gravity as seen from the body), entropy.
///
/// The unit-norm constraint on `gamma` is an ingestion-time check
/// ([`ReducedState::validate_gamma_norm`]), not a constructor invariant: the
/// explicit Runge-Kutta baselines intentionally let the norm drift so the
/// drift is observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    /// Body angular velocity (rad/s).
    pub omega: Vec3,
    /// Advected direction, on (or near) the unit sphere.
    pub gamma: Vec3,
    /// Entropy (J/K).
    pub entropy: f64,
}

impl ReducedState {
    pub fn new(omega: Vec3, gamma: Vec3, entropy: f64) -> Self {
        Self {
            omega,
            gamma,
            entropy,
        }
    }

    /// Checks `‖gamma‖ ∈ [1 - 1e-6, 1 + 1e-6]`.
    pub fn validate_gamma_norm(&self) -> Result<(), SystemsError> {
        let norm = self.gamma.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(SystemsError::GammaNorm { norm });
        }
        Ok(())
    }
}

/// Friction multiplier of the double-bracket model: a constant, or a hook
/// depending on the momentum and the entropy.
#[derive(Debug, Clone, Copy)]
pub enum Lambda {
    Constant(f64),
    StateDependent(fn(&Vec3, f64) -> f64),
}

impl Lambda {
    pub fn eval(&self, mu: &Vec3, s: f64) -> f64 {
        match self {
            Lambda::Constant(value) => *value,
            Lambda::StateDependent(f) => f(mu, s),
        }
    }
}

/// Parameters of the double-bracket dissipative rigid body. No advected
/// parameter and no potential: dissipation acts tangentially to the momentum
/// sphere, so coadjoint orbits are preserved exactly.
#[derive(Debug, Clone, Copy)]
pub struct DoubleBracketParams {
    /// Body inertia tensor, symmetric positive definite.
    pub inertia: Mat3,
    /// Friction multiplier, nonnegative.
    pub lambda: Lambda,
    pub t0: f64,
    pub s0: f64,
    pub heat_capacity: f64,
}

impl DoubleBracketParams {
    pub fn temperature(&self, s: f64) -> f64 {
        temperature(s, self.t0, self.s0, self.heat_capacity)
    }
}

/// Viscous Stokes torque `-gamma omega` with `gamma = 8 pi mu a^3`.
pub fn friction_stokes(st: &ReducedState, d: &HeavyTopDerived) -> Vec3 {
    -st.omega * d.friction_coeff
}

/// Double-bracket friction force `lambda mu x (mu x dh/dmu)` evaluated at
/// momentum `mu`, with `dh/dmu = inertia^-1 mu`. Orthogonal to `mu` by
/// construction, and dissipative against `dh/dmu`.
pub fn friction_double_bracket(mu: &Vec3, s: f64, p: &DoubleBracketParams) -> Vec3 {
    let omega_h = p
        .inertia
        .try_inverse()
        .expect("double-bracket inertia validated at system construction")
        * mu;
    mu.cross(&mu.cross(&omega_h)) * p.lambda.eval(mu, s)
}

/// Reduced Lagrangian of the heavy top:
/// `l = (1/2) I omega . omega - m g l gamma . chi - U(S)`.
pub fn lagrangian(st: &ReducedState, d: &HeavyTopDerived) -> f64 {
    0.5 * (d.inertia * st.omega).dot(&st.omega)
        - d.mgl() * st.gamma.dot(&d.chi)
        - d.internal_energy(st.entropy)
}

/// Cotangent-lift momentum map for the sphere orbit: `J(a, p) = a x p`,
/// characterized by `J(a, p) . xi = p . (xi x a)` for every `xi`.
pub fn momentum_map_j(a: &Vec3, p: &Vec3) -> Vec3 {
    a.cross(p)
}

/// Common interface of the reduced thermodynamic systems: the Lagrangian with
/// its partials, forces, heat power, temperature law, and the quantities the
/// steppers and diagnostics need. All methods are pure.
pub trait ThermoSystem {
    fn lagrangian(&self, st: &ReducedState) -> f64;
    /// Partial of the Lagrangian in the velocity slot (the body momentum).
    fn dl_domega(&self, st: &ReducedState) -> Vec3;
    /// Partial in the advected-parameter slot; zero when the system carries
    /// no advected parameter.
    fn dl_dgamma(&self, st: &ReducedState) -> Vec3;
    /// Partial in the entropy slot; equals minus the temperature.
    fn dl_dentropy(&self, st: &ReducedState) -> f64 {
        -self.temperature(st.entropy)
    }
    /// External force; zero for both shipped (isolated) systems.
    fn force_external(&self, _st: &ReducedState) -> Vec3 {
        Vec3::zeros()
    }
    fn force_friction(&self, st: &ReducedState) -> Vec3;
    /// External heat power; zero for both shipped (isolated) systems.
    fn heat_power_external(&self, _st: &ReducedState) -> f64 {
        0.0
    }
    fn temperature(&self, s: f64) -> f64;
    fn internal_energy(&self, s: f64) -> f64;
    /// Potential part of the energy; zero when there is no advected
    /// parameter.
    fn potential_energy(&self, _st: &ReducedState) -> f64 {
        0.0
    }
    fn inertia(&self) -> &Mat3;
    fn inertia_inv(&self) -> &Mat3;
    /// Whether the system transports an advected direction (and hence has a
    /// meaningful Kelvin-Noether quantity and center of mass).
    fn has_advected_parameter(&self) -> bool;
    /// Center of mass in the spatial frame, for systems that have one.
    fn center_of_mass(&self, _r: &Rotation) -> Option<Vec3> {
        None
    }
    /// Internal entropy production `(-<f_fr, omega> + p_H) / T(S)`,
    /// nonnegative whenever friction is dissipative and heat power is
    /// nonnegative.
    fn entropy_production_rate(&self, st: &ReducedState) -> f64 {
        (-self.force_friction(st).dot(&st.omega) + self.heat_power_external(st))
            / self.temperature(st.entropy)
    }
}

/// Heavy top in Stokes flow. Holds the derived parameter bundle and a
/// precomputed inertia inverse; immutable after construction.
#[derive(Debug, Clone, Copy)]
pub struct HeavyTopSystem {
    derived: HeavyTopDerived,
    inertia_inv: Mat3,
}

impl HeavyTopSystem {
    pub fn new(derived: HeavyTopDerived) -> Self {
        let inertia_inv = derived
            .inertia
            .try_inverse()
            .expect("derived inertia is diagonal with positive entries");
        Self {
            derived,
            inertia_inv,
        }
    }

    pub fn from_params(p: &HeavyTopParams) -> Result<Self, SystemsError> {
        Ok(Self::new(derive_params(p)?))
    }

    pub fn derived(&self) -> &HeavyTopDerived {
        &self.derived
    }

    /// Replaces the friction coefficient, zero allowed. This is the one
    /// sanctioned route to the frictionless reduction; the physical parameter
    /// set keeps its strict positivity checks.
    pub fn with_friction_coeff(mut self, friction_coeff: f64) -> Self {
        assert!(friction_coeff >= 0.0 && friction_coeff.is_finite());
        self.derived.friction_coeff = friction_coeff;
        self
    }

    /// Replaces the gravitational acceleration, zero allowed; same rationale
    /// as [`HeavyTopSystem::with_friction_coeff`].
    pub fn with_gravity(mut self, gravity: f64) -> Self {
        assert!(gravity >= 0.0 && gravity.is_finite());
        self.derived.gravity = gravity;
        self
    }
}

impl ThermoSystem for HeavyTopSystem {
    fn lagrangian(&self, st: &ReducedState) -> f64 {
        lagrangian(st, &self.derived)
    }

    fn dl_domega(&self, st: &ReducedState) -> Vec3 {
        self.derived.inertia * st.omega
    }

    fn dl_dgamma(&self, _st: &ReducedState) -> Vec3 {
        -self.derived.chi * self.derived.mgl()
    }

    fn force_friction(&self, st: &ReducedState) -> Vec3 {
        friction_stokes(st, &self.derived)
    }

    fn temperature(&self, s: f64) -> f64 {
        self.derived.temperature(s)
    }

    fn internal_energy(&self, s: f64) -> f64 {
        self.derived.internal_energy(s)
    }

    fn potential_energy(&self, st: &ReducedState) -> f64 {
        self.derived.mgl() * st.gamma.dot(&self.derived.chi)
    }

    fn inertia(&self) -> &Mat3 {
        &self.derived.inertia
    }

    fn inertia_inv(&self) -> &Mat3 {
        &self.inertia_inv
    }

    fn has_advected_parameter(&self) -> bool {
        true
    }

    fn center_of_mass(&self, r: &Rotation) -> Option<Vec3> {
        Some(r.rotate(&self.derived.chi) * self.derived.lever)
    }
}

/// Double-bracket dissipative rigid body: free kinetic Lagrangian, friction
/// tangent to the momentum sphere, no advected parameter.
#[derive(Debug, Clone, Copy)]
pub struct DoubleBracketSystem {
    params: DoubleBracketParams,
    inertia_inv: Mat3,
}

impl DoubleBracketSystem {
    pub fn new(params: DoubleBracketParams) -> Result<Self, SystemsError> {
        let symmetric_defect =
            crate::so3::max_abs_entry(&(params.inertia - params.inertia.transpose()));
        let scale = crate::so3::max_abs_entry(&params.inertia).max(1.0);
        if symmetric_defect > 1e-12 * scale {
            return Err(SystemsError::SingularInertia);
        }
        let inertia_inv = params
            .inertia
            .try_inverse()
            .ok_or(SystemsError::SingularInertia)?;
        // Positive definiteness via the symmetric eigenvalues.
        let eigenvalues = params.inertia.symmetric_eigenvalues();
        if eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(SystemsError::SingularInertia);
        }
        if let Lambda::Constant(l) = params.lambda {
            if !l.is_finite() || l < 0.0 {
                return Err(SystemsError::InvalidParameter {
                    field: "lambda",
                    message: format!("must be nonnegative and finite, got {l}"),
                });
            }
        }
        Ok(Self {
            params,
            inertia_inv,
        })
    }

    pub fn params(&self) -> &DoubleBracketParams {
        &self.params
    }

    /// Body momentum for a given state.
    pub fn momentum(&self, st: &ReducedState) -> Vec3 {
        self.params.inertia * st.omega
    }
}

impl ThermoSystem for DoubleBracketSystem {
    fn lagrangian(&self, st: &ReducedState) -> f64 {
        0.5 * (self.params.inertia * st.omega).dot(&st.omega) - self.internal_energy(st.entropy)
    }

    fn dl_domega(&self, st: &ReducedState) -> Vec3 {
        self.params.inertia * st.omega
    }

    fn dl_dgamma(&self, _st: &ReducedState) -> Vec3 {
        Vec3::zeros()
    }

    fn force_friction(&self, st: &ReducedState) -> Vec3 {
        let mu = self.momentum(st);
        // dh/dmu = inertia^-1 mu = omega for consistent states.
        let omega_h = self.inertia_inv * mu;
        mu.cross(&mu.cross(&omega_h)) * self.params.lambda.eval(&mu, st.entropy)
    }

    fn temperature(&self, s: f64) -> f64 {
        self.params.temperature(s)
    }

    fn internal_energy(&self, s: f64) -> f64 {
        self.params.heat_capacity * self.params.temperature(s)
    }

    fn inertia(&self) -> &Mat3 {
        &self.params.inertia
    }

    fn inertia_inv(&self) -> &Mat3 {
        &self.inertia_inv
    }

    fn has_advected_parameter(&self) -> bool {
        false
    }
}
