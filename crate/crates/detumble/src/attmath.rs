//! Small fixed-size math primitives shared by every other module.
//!
//! All quantities are SI: tesla, A·m², N·m·s, rad/s, meters. Vectors and
//! matrices are `nalgebra` fixed-size types; the attitude quaternion is a
//! thin wrapper that pins down one convention for the whole crate:
//!
//! * scalar-first storage `(w, x, y, z)`,
//! * `rotate` maps **ECI-frame coordinates into body-frame coordinates**
//!   (the quaternion *is* the attitude of the body with respect to ECI).

use nalgebra as na;
use rand::Rng;

pub type Vec3 = na::Vector3<f64>;
pub type Mat3 = na::Matrix3<f64>;
pub type Vec6 = na::Vector6<f64>;
pub type Mat6 = na::Matrix6<f64>;
pub type Quat4 = na::Quaternion<f64>;

/// Skew-symmetric cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Element-wise clamp of `v` into the box `[-limit, limit]`.
pub fn clamp_elementwise(v: &Vec3, limit: &Vec3) -> Vec3 {
    Vec3::new(
        v.x.clamp(-limit.x, limit.x),
        v.y.clamp(-limit.y, limit.y),
        v.z.clamp(-limit.z, limit.z),
    )
}

/// Unit attitude quaternion, ECI -> body.
///
/// Always unit norm: every constructor renormalizes, so integration code can
/// hand in a drifted raw quaternion and get a valid attitude back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuat(na::UnitQuaternion<f64>);

impl UnitQuat {
    pub fn identity() -> Self {
        UnitQuat(na::UnitQuaternion::identity())
    }

    /// Scalar-first components; renormalizes.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        UnitQuat(na::UnitQuaternion::from_quaternion(Quat4::new(w, x, y, z)))
    }

    pub fn from_raw(q: Quat4) -> Self {
        UnitQuat(na::UnitQuaternion::from_quaternion(q))
    }

    pub fn from_axis_angle(axis: &Vec3, angle_rad: f64) -> Self {
        UnitQuat(na::UnitQuaternion::from_axis_angle(
            &na::Unit::new_normalize(*axis),
            angle_rad,
        ))
    }

    /// Uniformly distributed random attitude (4 gaussians, normalized).
    pub fn sample_uniform<R: Rng>(rng: &mut R) -> Self {
        use rand_distr::StandardNormal;
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        UnitQuat::new(w, x, y, z)
    }

    pub fn w(&self) -> f64 {
        self.0.w
    }

    pub fn raw(&self) -> Quat4 {
        *self.0.quaternion()
    }

    pub fn norm(&self) -> f64 {
        self.0.quaternion().norm()
    }

    /// ECI coordinates -> body coordinates.
    pub fn rotate(&self, v_eci: &Vec3) -> Vec3 {
        self.0.transform_vector(v_eci)
    }

    /// Body coordinates -> ECI coordinates.
    pub fn rotate_inv(&self, v_body: &Vec3) -> Vec3 {
        self.0.inverse_transform_vector(v_body)
    }

    /// Kinematics for the ECI->body convention: q̇ = -½ (0, ω_body) ⊗ q.
    ///
    /// Equivalent to Ṙ = -ω̂ R for the rotation matrix R that maps ECI into
    /// body coordinates. The result is a tangent (non-unit) quaternion rate.
    pub fn derivative(&self, omega_body: &Vec3) -> Quat4 {
        let omega_q = Quat4::from_imag(*omega_body);
        -0.5 * (omega_q * self.0.quaternion())
    }

    /// Angle of the relative rotation between two attitudes, radians.
    pub fn angle_to(&self, other: &UnitQuat) -> f64 {
        self.0.angle_to(&other.0)
    }
}
