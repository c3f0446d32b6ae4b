//! Algebra kernel for SO(3) and its Lie algebra so(3).
//!
//! Algebra elements are stored as vectors in R^3 and identified with skew
//! matrices through the hat map; covectors use the same representation via the
//! dot-product pairing (the hat map is isometric for the trace pairing
//! `<A, B> = tr(A^T B) / 2`). Matrices are materialized only inside operations.
//!
//! The group difference map shipped here is the Cayley map together with its
//! inverse right-trivialized tangent and that tangent's dual, which is all an
//! implicit Lie-algebra stepper needs.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Element of R^3, doubling as an so(3) element (via [`hat`]) and as a
/// covector (via the dot-product pairing). Units depend on context.
pub type Vec3 = Vector3<f64>;

/// Plain 3x3 real matrix.
pub type Mat3 = Matrix3<f64>;

/// Tolerance for the orthogonality and determinant checks of [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-9;

/// Tolerance for the skew-symmetry precondition of [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum So3Error {
    /// Input to [`vee`] was not skew-symmetric within [`SKEW_TOL`].
    #[error("matrix is not skew-symmetric: max |M + M^T| entry = {defect:.3e}")]
    NotSkew { defect: f64 },
    /// A 3x3 linear solve failed. Cannot occur for finite real input to the
    /// Cayley-family maps (their matrices have determinant >= 1); kept as a
    /// guard so the failure mode is typed rather than a panic.
    #[error("singular 3x3 linear solve at xi = ({}, {}, {})", xi.x, xi.y, xi.z)]
    SingularLinearSolve { xi: Vec3 },
    /// Candidate rotation matrix failed the orthogonality check.
    #[error("matrix is not orthogonal: max |R^T R - I| entry = {defect:.3e}")]
    NotOrthogonal { defect: f64 },
    /// Candidate rotation matrix has determinant too far from +1.
    #[error("matrix determinant {det} is not within {ROTATION_TOL:e} of 1")]
    BadDeterminant { det: f64 },
}

/// Largest absolute entry of a matrix. Used as the matrix infinity-style norm
/// for all orthogonality and skewness checks in this crate.
pub fn max_abs_entry(m: &Mat3) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Hat map: `v` to the skew matrix of the cross product, `hat(v) w = v x w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. The input must be skew-symmetric within [`SKEW_TOL`],
/// measured as the largest entry of `M + M^T`.
pub fn vee(m: &Mat3) -> Result<Vec3, So3Error> {
    let defect = max_abs_entry(&(m + m.transpose()));
    if defect > SKEW_TOL {
        return Err(So3Error::NotSkew { defect });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Adjoint action of the algebra on itself: `ad(xi, eta) = xi x eta`,
/// the vector form of the matrix commutator `[hat(xi), hat(eta)]`.
pub fn ad(xi: &Vec3, eta: &Vec3) -> Vec3 {
    xi.cross(eta)
}

/// Coadjoint action: the unique `v` with `v . eta = mu . (xi x eta)` for all
/// `eta`, which works out to `mu x xi`.
pub fn coad(xi: &Vec3, mu: &Vec3) -> Vec3 {
    mu.cross(xi)
}

/// A rotation matrix, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Mat3,
}

impl Rotation {
    /// Validates `‖m^T m - I‖ <= 1e-9` (max-entry norm) and
    /// `det(m) ∈ [1 - 1e-9, 1 + 1e-9]`. Never repairs silently; see
    /// [`Rotation::repaired`] for explicit re-orthonormalization.
    pub fn new(m: Mat3) -> Result<Self, So3Error> {
        let defect = max_abs_entry(&(m.transpose() * m - Mat3::identity()));
        if defect > ROTATION_TOL {
            return Err(So3Error::NotOrthogonal { defect });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::BadDeterminant { det });
        }
        Ok(Self { m })
    }

    /// Gram-Schmidt on the rows, then the usual validation. This is the only
    /// repair path; plain construction never adjusts its input.
    pub fn repaired(m: Mat3) -> Result<Self, So3Error> {
        let r0: Vec3 = m.row(0).transpose();
        let n0 = r0.norm();
        if n0 == 0.0 {
            return Err(So3Error::NotOrthogonal { defect: 1.0 });
        }
        let e0 = r0 / n0;
        let mut r1: Vec3 = m.row(1).transpose();
        r1 -= e0 * e0.dot(&r1);
        let n1 = r1.norm();
        if n1 == 0.0 {
            return Err(So3Error::NotOrthogonal { defect: 1.0 });
        }
        let e1 = r1 / n1;
        let mut r2: Vec3 = m.row(2).transpose();
        r2 -= e0 * e0.dot(&r2) + e1 * e1.dot(&r2);
        let n2 = r2.norm();
        if n2 == 0.0 {
            return Err(So3Error::NotOrthogonal { defect: 1.0 });
        }
        let e2 = r2 / n2;
        Self::new(Mat3::from_rows(&[
            e0.transpose(),
            e1.transpose(),
            e2.transpose(),
        ]))
    }

    pub fn identity() -> Self {
        Self {
            m: Mat3::identity(),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Apply the rotation to a vector.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }

    /// Apply the inverse rotation (the transpose) to a vector.
    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.m.transpose() * v
    }

    /// Matrix product `self * other`. The result is not re-validated: products
    /// of valid rotations stay orthogonal up to round-off, and that drift is a
    /// quantity callers track (see [`Rotation::orthogonality_defect`]) rather
    /// than something silently repaired.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            m: self.m * other.m,
        }
    }

    /// Largest entry of `R^T R - I`; round-off drift monitor.
    pub fn orthogonality_defect(&self) -> f64 {
        max_abs_entry(&(self.m.transpose() * self.m - Mat3::identity()))
    }

    /// All-NaN marker used once a trajectory has left the finite domain, so
    /// downstream records show the divergence instead of a stale attitude.
    pub(crate) fn non_finite() -> Rotation {
        Rotation {
            m: Mat3::from_element(f64::NAN),
        }
    }

    pub fn transposed(&self) -> Rotation {
        Rotation {
            m: self.m.transpose(),
        }
    }
}

/// Cayley map `cay(xi) = (I - hat(xi)/2)^-1 (I + hat(xi)/2)`, a second-order
/// approximation of the matrix exponential that lands exactly on SO(3).
///
/// The solve cannot actually fail: `det(I - hat(xi)/2) = 1 + ‖xi‖^2/4 >= 1`
/// for every real `xi`. The error branch is a typed guard, not a reachable
/// outcome.
pub fn cay(xi: &Vec3) -> Result<Rotation, So3Error> {
    let half = hat(xi) * 0.5;
    let num = Mat3::identity() + half;
    let den = Mat3::identity() - half;
    let inv = den
        .try_inverse()
        .ok_or(So3Error::SingularLinearSolve { xi: *xi })?;
    // The product is orthogonal to machine precision; validation documents it.
    Rotation::new(inv * num)
}

/// Infallible wrapper around [`cay`] for internal hot paths, justified by the
/// determinant bound in its documentation.
pub(crate) fn cay_unchecked(xi: &Vec3) -> Rotation {
    cay(xi).expect("Cayley map is globally nonsingular on so(3)")
}

/// Matrix of the inverse right-trivialized tangent of the Cayley map:
/// `dcay_inv(xi, delta) = M(xi) delta` with
/// `M(xi) = I - hat(xi)/2 + xi xi^T / 4`.
///
/// This is the closed form of the skew sandwich
/// `(I - hat(xi)/2) hat(delta) (I + hat(xi)/2)` pushed back through the hat
/// map; `det M = (1 + ‖xi‖^2/4)^2 >= 1`, so the map is invertible everywhere.
pub fn dcay_inv_mat(xi: &Vec3) -> Mat3 {
    Mat3::identity() - hat(xi) * 0.5 + (xi * xi.transpose()) * 0.25
}

/// Inverse right-trivialized tangent of the Cayley map, linear in `delta`.
pub fn dcay_inv(xi: &Vec3, delta: &Vec3) -> Vec3 {
    // Expanded form of dcay_inv_mat(xi) * delta without building the matrix.
    delta - xi.cross(delta) * 0.5 + xi * (xi.dot(delta) * 0.25)
}

/// Right-trivialized tangent of the Cayley map: the inverse of
/// [`dcay_inv`]`(xi, .)` as a linear map, computed by a 3x3 solve against
/// [`dcay_inv_mat`]. The singular branch is unreachable (determinant >= 1)
/// but typed.
pub fn dcay(xi: &Vec3, delta: &Vec3) -> Result<Vec3, So3Error> {
    let inv = dcay_inv_mat(xi)
        .try_inverse()
        .ok_or(So3Error::SingularLinearSolve { xi: *xi })?;
    Ok(inv * delta)
}

/// Dual of the inverse right-trivialized tangent: `M(xi)^T mu`, which equals
/// `dcay_inv(-xi, mu)` because `M(-xi) = M(xi)^T`. Both routes are exercised
/// against each other in the test suites.
pub fn dcay_inv_star(xi: &Vec3, mu: &Vec3) -> Vec3 {
    mu + xi.cross(mu) * 0.5 + xi * (xi.dot(mu) * 0.25)
}

/// Action of a rotation on an algebra element in vector form; satisfies the
/// equivariance `hat(R xi) = R hat(xi) R^T`.
pub fn ad_rotation(r: &Rotation, xi: &Vec3) -> Vec3 {
    r.rotate(xi)
}

/// A group difference map on SO(3): a local chart `tau` from the algebra to
/// the group with `tau(0) = I`, together with the inverse of its
/// right-trivialized tangent and the dual of that inverse. These three pieces
/// are exactly what the implicit Lie-algebra stepper consumes.
pub trait GroupDifferenceMap {
    fn tau(&self, xi: &Vec3) -> Rotation;
    fn dtau_inv(&self, xi: &Vec3, delta: &Vec3) -> Vec3;
    fn dtau_inv_star(&self, xi: &Vec3, mu: &Vec3) -> Vec3;
}

/// The Cayley instance of [`GroupDifferenceMap`]; the only one shipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct CayleyMap;

impl GroupDifferenceMap for CayleyMap {
    fn tau(&self, xi: &Vec3) -> Rotation {
        cay_unchecked(xi)
    }

    fn dtau_inv(&self, xi: &Vec3, delta: &Vec3) -> Vec3 {
        dcay_inv(xi, delta)
    }

    fn dtau_inv_star(&self, xi: &Vec3, mu: &Vec3) -> Vec3 {
        dcay_inv_star(xi, mu)
    }
}
