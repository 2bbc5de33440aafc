//! 12-DOF orbit + attitude propagation with J2, atmospheric drag,
//! magnetorquer torque, orbit-coupled drag torque, and sensor synthesis.
//!
//! Integration is fixed-step RK4 over the state (r, v, q, omega) with the
//! commanded dipole held constant across a step (zero-order hold). The
//! attitude quaternion is renormalized after every step.

use crate::attmath::{skew, Mat3, Quat4, UnitQuat, Vec3};
use crate::geomag::{FieldModel, GeoEpoch};
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earth gravitational parameter, m^3/s^2 (EGM2008).
pub const GM_EARTH: f64 = 3.986_004_418e14;
/// Earth equatorial radius, m (WGS84).
pub const R_EARTH_EQ: f64 = 6_378_137.0;
/// J2 zonal harmonic coefficient (EGM2008).
pub const J2_EARTH: f64 = 1.082_626_68e-3;
/// Earth rotation rate, rad/s; the atmosphere co-rotates at this rate.
pub const EARTH_ROT_RAD_S: f64 = 7.292_115_9e-5;

/// Propagation aborts below this altitude.
pub const ALTITUDE_FLOOR_M: f64 = 100_000.0;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("altitude {altitude_m:.0} m fell below the {floor_m:.0} m floor at t = {t:.1} s")]
    AltitudeFloor {
        altitude_m: f64,
        floor_m: f64,
        t: f64,
    },
    #[error("non-finite state derivative at t = {t:.1} s")]
    NonFiniteDerivative { t: f64 },
    #[error("invalid spacecraft parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geomag(#[from] crate::geomag::GeomagError),
}

/// Physical spacecraft properties. Defaults describe a 1.5U CubeSat with
/// printed-circuit-board magnetorquers in the solar panels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpacecraftParams {
    /// Inertia matrix, kg m^2, body frame; symmetric positive definite.
    pub inertia: Mat3,
    /// Mass, kg.
    pub mass: f64,
    /// Rectangular-prism dimensions, m.
    pub dims: Vec3,
    /// Drag coefficient.
    pub drag_coeff: f64,
    /// Per-axis magnetorquer dipole limits, A m^2.
    pub mu_max: Vec3,
    /// Magnetometer noise, tesla (1-sigma per axis).
    pub magnetometer_noise_t: f64,
    /// Gyro angle-random-walk noise density, rad/s per sqrt(Hz).
    pub gyro_noise_density: f64,
    /// Constant gyro bias magnitude, rad/s; direction drawn per run.
    pub gyro_bias_rad_s: f64,
    /// Center-of-pressure offset from the center of mass, m, body frame.
    pub cp_offset: Vec3,
}

impl Default for SpacecraftParams {
    fn default() -> Self {
        SpacecraftParams {
            inertia: Mat3::new(
                4.5e-3, -3.2e-4, 0.0, //
                -3.2e-4, 5.1e-3, 0.0, //
                0.0, 0.0, 3.7e-3,
            ),
            mass: 1.6,
            dims: Vec3::new(0.075, 0.10, 0.15),
            drag_coeff: 2.2,
            mu_max: Vec3::new(0.070, 0.053, 0.070),
            magnetometer_noise_t: 15e-9,
            gyro_noise_density: 0.005_f64.to_radians(),
            gyro_bias_rad_s: 1.0_f64.to_radians(),
            cp_offset: Vec3::new(0.02, 0.0, 0.0),
        }
    }
}

impl SpacecraftParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let sym_err = (self.inertia - self.inertia.transpose()).abs().max();
        if sym_err > 1e-12 {
            return Err(DynamicsError::InvalidParams(format!(
                "inertia is not symmetric (|J - J'| = {sym_err:.2e})"
            )));
        }
        let eig = self.inertia.symmetric_eigenvalues();
        if eig.min() <= 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "inertia is not positive definite (min eigenvalue {:.2e})",
                eig.min()
            )));
        }
        if self.mu_max.min() <= 0.0 {
            return Err(DynamicsError::InvalidParams(
                "mu_max must be positive element-wise".into(),
            ));
        }
        if self.mass <= 0.0 || self.dims.min() <= 0.0 {
            return Err(DynamicsError::InvalidParams(
                "mass and dimensions must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn inertia_inv(&self) -> Mat3 {
        self.inertia.try_inverse().expect("inertia invertible")
    }

    /// Smallest principal moment of inertia, kg m^2.
    pub fn lambda_min(&self) -> f64 {
        self.inertia.symmetric_eigenvalues().min()
    }
}

/// Simulation state: epoch plus orbital and attitude degrees of freedom.
#[derive(Clone, Copy, Debug)]
pub struct SimState {
    /// Seconds since the J2000.0 epoch.
    pub t: f64,
    /// ECI position, m.
    pub r_eci: Vec3,
    /// ECI velocity, m/s.
    pub v_eci: Vec3,
    /// Attitude quaternion, ECI -> body.
    pub q: UnitQuat,
    /// Body angular velocity, rad/s.
    pub omega_body: Vec3,
}

impl SimState {
    pub fn epoch(&self) -> GeoEpoch {
        GeoEpoch::from_seconds_j2000(self.t)
    }

    pub fn altitude_m(&self) -> f64 {
        self.r_eci.norm() - R_EARTH_EQ
    }

    /// Angular momentum h = J omega in body coordinates, N m s.
    pub fn momentum_body(&self, params: &SpacecraftParams) -> Vec3 {
        params.inertia * self.omega_body
    }

    /// Angular momentum resolved in the inertial frame, N m s.
    pub fn momentum_eci(&self, params: &SpacecraftParams) -> Vec3 {
        self.q.rotate_inv(&self.momentum_body(params))
    }
}

/// Timestamped body-frame sensor readings.
#[derive(Clone, Copy, Debug)]
pub struct SensorSample {
    pub t: f64,
    /// Magnetometer reading, tesla, body frame.
    pub b_meas: Vec3,
    /// Gyro reading, rad/s, body frame (bias and noise corrupted).
    pub omega_meas: Vec3,
}

/// Piecewise-exponential atmosphere: rho = rho0 * exp(-(h - h0)/H) within
/// each band. Standard tabulated values (e.g. Vallado, "Fundamentals of
/// Astrodynamics and Applications", exponential model).
#[derive(Clone, Copy, Debug, Default)]
pub struct Atmosphere;

/// (base altitude km, density kg/m^3, scale height km)
const ATMOSPHERE_TABLE: &[(f64, f64, f64)] = &[
    (0.0, 1.225, 7.249),
    (25.0, 3.899e-2, 6.349),
    (30.0, 1.774e-2, 6.682),
    (40.0, 3.972e-3, 7.554),
    (50.0, 1.057e-3, 8.382),
    (60.0, 3.206e-4, 7.714),
    (70.0, 8.770e-5, 6.549),
    (80.0, 1.905e-5, 5.799),
    (90.0, 3.396e-6, 5.382),
    (100.0, 5.297e-7, 5.877),
    (110.0, 9.661e-8, 7.263),
    (120.0, 2.438e-8, 9.473),
    (130.0, 8.484e-9, 12.636),
    (140.0, 3.845e-9, 16.149),
    (150.0, 2.070e-9, 22.523),
    (180.0, 5.464e-10, 29.740),
    (200.0, 2.789e-10, 37.105),
    (250.0, 7.248e-11, 45.546),
    (300.0, 2.418e-11, 53.628),
    (350.0, 9.518e-12, 53.298),
    (400.0, 3.725e-12, 58.515),
    (450.0, 1.585e-12, 60.828),
    (500.0, 6.967e-13, 63.822),
    (600.0, 1.454e-13, 71.835),
    (700.0, 3.614e-14, 88.667),
    (800.0, 1.170e-14, 124.64),
    (900.0, 5.245e-15, 181.05),
    (1000.0, 3.019e-15, 268.00),
];

impl Atmosphere {
    /// Density at altitude above the equatorial radius, kg/m^3.
    pub fn density(altitude_m: f64) -> f64 {
        let h_km = (altitude_m / 1000.0).max(0.0);
        let row = ATMOSPHERE_TABLE
            .iter()
            .rev()
            .find(|(h0, _, _)| h_km >= *h0)
            .unwrap_or(&ATMOSPHERE_TABLE[0]);
        row.1 * (-(h_km - row.0) / row.2).exp()
    }
}

/// Simulation environment: field model, gravity constants, and perturbation
/// switches. Immutable during a run; safe to share across threads.
#[derive(Clone, Debug)]
pub struct Env {
    pub field: FieldModel,
    pub gm: f64,
    pub j2: f64,
    pub r_eq: f64,
    pub j2_enabled: bool,
    pub drag_force_enabled: bool,
    pub drag_torque_enabled: bool,
}

impl Env {
    pub fn new(field: FieldModel) -> Self {
        Env {
            field,
            gm: GM_EARTH,
            j2: J2_EARTH,
            r_eq: R_EARTH_EQ,
            j2_enabled: true,
            drag_force_enabled: true,
            drag_torque_enabled: true,
        }
    }

    /// Two-body motion only; used by conservation tests.
    pub fn two_body(field: FieldModel) -> Self {
        Env {
            j2_enabled: false,
            drag_force_enabled: false,
            drag_torque_enabled: false,
            ..Env::new(field)
        }
    }
}

/// Drag force in ECI coordinates (and the body-frame torque about the center
/// of mass) from a 6-facet flat-plate model of the prism.
fn drag_force_and_torque(state: &SimState, params: &SpacecraftParams, env: &Env) -> (Vec3, Vec3) {
    let rho = Atmosphere::density(state.altitude_m());
    // atmosphere co-rotates with the Earth
    let v_rel = state.v_eci - Vec3::new(0.0, 0.0, EARTH_ROT_RAD_S).cross(&state.r_eci);
    let speed = v_rel.norm();
    if speed == 0.0 || rho == 0.0 {
        return (Vec3::zeros(), Vec3::zeros());
    }
    let v_hat_body = state.q.rotate(&(v_rel / speed));
    // projected area: opposite facets pair up into |cos| terms
    let (dx, dy, dz) = (params.dims.x, params.dims.y, params.dims.z);
    let area = v_hat_body.x.abs() * dy * dz
        + v_hat_body.y.abs() * dx * dz
        + v_hat_body.z.abs() * dx * dy;
    let f_eci = -0.5 * rho * params.drag_coeff * area * speed * v_rel;
    let f_body = state.q.rotate(&f_eci);
    let torque_body = params.cp_offset.cross(&f_body);
    (f_eci, torque_body)
}

/// Translational acceleration: two-body gravity plus optional J2 and drag.
pub fn orbital_accel(
    state: &SimState,
    params: &SpacecraftParams,
    env: &Env,
) -> Result<Vec3, DynamicsError> {
    let r = state.r_eci.norm();
    if r - env.r_eq < ALTITUDE_FLOOR_M {
        return Err(DynamicsError::AltitudeFloor {
            altitude_m: r - env.r_eq,
            floor_m: ALTITUDE_FLOOR_M,
            t: state.t,
        });
    }
    let mut accel = -env.gm / (r * r * r) * state.r_eci;
    if env.j2_enabled {
        let (x, y, z) = (state.r_eci.x, state.r_eci.y, state.r_eci.z);
        let z2r2 = (z / r) * (z / r);
        let k = -1.5 * env.j2 * env.gm * env.r_eq * env.r_eq / r.powi(5);
        accel += k * Vec3::new(
            x * (1.0 - 5.0 * z2r2),
            y * (1.0 - 5.0 * z2r2),
            z * (3.0 - 5.0 * z2r2),
        );
    }
    if env.drag_force_enabled {
        let (f_eci, _) = drag_force_and_torque(state, params, env);
        accel += f_eci / params.mass;
    }
    Ok(accel)
}

/// Body angular acceleration from the Euler equation:
/// J omega_dot = -omega x (J omega) + mu x B + tau_drag.
pub fn attitude_dynamics(
    state: &SimState,
    params: &SpacecraftParams,
    mu: &Vec3,
    b_body: &Vec3,
    drag_torque_body: &Vec3,
) -> Vec3 {
    let h = params.inertia * state.omega_body;
    let torque = mu.cross(b_body) + drag_torque_body - state.omega_body.cross(&h);
    params.inertia_inv() * torque
}

struct Derivatives {
    r_dot: Vec3,
    v_dot: Vec3,
    q_dot: Quat4,
    w_dot: Vec3,
}

fn derivatives(
    state: &SimState,
    params: &SpacecraftParams,
    env: &Env,
    mu: &Vec3,
) -> Result<Derivatives, DynamicsError> {
    let mut v_dot = orbital_accel(state, params, env)?;
    let b_body = env.field.field_body(&state.q, &state.r_eci, &state.epoch())?;
    let drag_torque = if env.drag_torque_enabled {
        drag_force_and_torque(state, params, env).1
    } else {
        Vec3::zeros()
    };
    if !env.drag_force_enabled {
        // drag force already excluded by orbital_accel; nothing to undo
    }
    let w_dot = attitude_dynamics(state, params, mu, &b_body, &drag_torque);
    if !(v_dot.iter().all(|x| x.is_finite()) && w_dot.iter().all(|x| x.is_finite())) {
        v_dot = Vec3::zeros();
        return Err(DynamicsError::NonFiniteDerivative { t: state.t });
    }
    Ok(Derivatives {
        r_dot: state.v_eci,
        v_dot,
        q_dot: state.q.derivative(&state.omega_body),
        w_dot,
    })
}

fn advance(state: &SimState, d: &Derivatives, dt: f64) -> SimState {
    SimState {
        t: state.t + dt,
        r_eci: state.r_eci + d.r_dot * dt,
        v_eci: state.v_eci + d.v_dot * dt,
        q: UnitQuat::from_raw(state.q.raw() + d.q_dot * dt),
        omega_body: state.omega_body + d.w_dot * dt,
    }
}

/// One classical RK4 step with the dipole command held constant.
pub fn rk4_step(
    state: &SimState,
    params: &SpacecraftParams,
    env: &Env,
    mu_held: &Vec3,
    dt: f64,
) -> Result<SimState, DynamicsError> {
    debug_assert!(dt > 0.0);
    let k1 = derivatives(state, params, env, mu_held)?;
    let k2 = derivatives(&advance(state, &k1, 0.5 * dt), params, env, mu_held)?;
    let k3 = derivatives(&advance(state, &k2, 0.5 * dt), params, env, mu_held)?;
    let k4 = derivatives(&advance(state, &k3, dt), params, env, mu_held)?;
    let combined = Derivatives {
        r_dot: (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot) / 6.0,
        v_dot: (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) / 6.0,
        q_dot: (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot) / 6.0,
        w_dot: (k1.w_dot + 2.0 * k2.w_dot + 2.0 * k3.w_dot + k4.w_dot) / 6.0,
    };
    // UnitQuat::from_raw renormalizes the integrated quaternion
    Ok(advance(state, &combined, dt))
}

/// Run-constant sensor imperfections plus per-sample noise synthesis.
///
/// The gyro bias is a constant vector of configured magnitude in a uniformly
/// random direction, drawn once per run. Gyro noise per sample is
/// density * sqrt(sample rate).
#[derive(Clone, Debug)]
pub struct SensorRig {
    pub gyro_bias: Vec3,
    mag_sigma_t: f64,
    gyro_sigma_rad_s: f64,
}

impl SensorRig {
    pub fn new<R: Rng>(params: &SpacecraftParams, sample_rate_hz: f64, rng: &mut R) -> Self {
        let dir: [f64; 3] = UnitSphere.sample(rng);
        SensorRig {
            gyro_bias: Vec3::from_column_slice(&dir) * params.gyro_bias_rad_s,
            mag_sigma_t: params.magnetometer_noise_t,
            gyro_sigma_rad_s: params.gyro_noise_density * sample_rate_hz.sqrt(),
        }
    }

    /// Noiseless, bias-free rig; used by tests.
    pub fn ideal() -> Self {
        SensorRig {
            gyro_bias: Vec3::zeros(),
            mag_sigma_t: 0.0,
            gyro_sigma_rad_s: 0.0,
        }
    }

    pub fn measure<R: Rng>(
        &self,
        state: &SimState,
        env: &Env,
        rng: &mut R,
    ) -> Result<SensorSample, DynamicsError> {
        let b_true = env.field.field_body(&state.q, &state.r_eci, &state.epoch())?;
        let gauss = |rng: &mut R, sigma: f64| -> Vec3 {
            if sigma == 0.0 {
                return Vec3::zeros();
            }
            let n = Normal::new(0.0, sigma).expect("sigma >= 0");
            Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng))
        };
        Ok(SensorSample {
            t: state.t,
            b_meas: b_true + gauss(rng, self.mag_sigma_t),
            omega_meas: state.omega_body + self.gyro_bias + gauss(rng, self.gyro_sigma_rad_s),
        })
    }
}

/// Monte-Carlo initial-condition distribution: random circular orbits at a
/// fixed altitude, random tumble axis at fixed rate, uniform attitude.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct InitialConditions {
    pub altitude_m: f64,
    /// Inclination sampled uniformly in [min, max), degrees.
    pub inclination_deg: (f64, f64),
    /// Tumble rate magnitude, rad/s.
    pub omega_rad_s: f64,
    /// Run start, decimal year.
    pub epoch_year: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        InitialConditions {
            altitude_m: 400_000.0,
            inclination_deg: (20.0, 160.0),
            omega_rad_s: 30.0_f64.to_radians(),
            epoch_year: 2022.0,
        }
    }
}

impl InitialConditions {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> SimState {
        let a = R_EARTH_EQ + self.altitude_m;
        let inc = rng
            .gen_range(self.inclination_deg.0..self.inclination_deg.1)
            .to_radians();
        let raan: f64 = rng.gen_range(0.0..360.0_f64).to_radians();
        let arg_lat: f64 = rng.gen_range(0.0..360.0_f64).to_radians();
        let speed = (GM_EARTH / a).sqrt();

        let rot = crate::geomag::rot_z(raan)
            * Mat3::new(
                1.0,
                0.0,
                0.0,
                0.0,
                inc.cos(),
                -inc.sin(),
                0.0,
                inc.sin(),
                inc.cos(),
            );
        let r_plane = Vec3::new(arg_lat.cos(), arg_lat.sin(), 0.0) * a;
        let v_plane = Vec3::new(-arg_lat.sin(), arg_lat.cos(), 0.0) * speed;

        let omega_dir: [f64; 3] = UnitSphere.sample(rng);
        SimState {
            t: GeoEpoch::from_decimal_year(self.epoch_year).seconds_j2000(),
            r_eci: rot * r_plane,
            v_eci: rot * v_plane,
            q: UnitQuat::sample_uniform(rng),
            omega_body: Vec3::from_column_slice(&omega_dir) * self.omega_rad_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn circular_state(a: f64, omega_body: Vec3) -> SimState {
        SimState {
            t: GeoEpoch::from_decimal_year(2022.0).seconds_j2000(),
            r_eci: Vec3::new(a, 0.0, 0.0),
            v_eci: Vec3::new(0.0, (GM_EARTH / a).sqrt(), 0.0),
            q: UnitQuat::identity(),
            omega_body,
        }
    }

    #[test]
    fn two_body_accel_along_axis() {
        let a = 6_778_137.0;
        let env = Env::two_body(FieldModel::dipole());
        let params = SpacecraftParams::default();
        let state = circular_state(a, Vec3::zeros());
        let acc = orbital_accel(&state, &params, &env).unwrap();
        assert_relative_eq!(acc.x, -GM_EARTH / (a * a), max_relative = 1e-14);
        assert_eq!(acc.y, 0.0);
        assert_eq!(acc.z, 0.0);
    }

    #[test]
    fn altitude_floor_aborts() {
        let env = Env::two_body(FieldModel::dipole());
        let params = SpacecraftParams::default();
        let mut state = circular_state(6_778_137.0, Vec3::zeros());
        state.r_eci = Vec3::new(R_EARTH_EQ + 50_000.0, 0.0, 0.0);
        assert!(matches!(
            orbital_accel(&state, &params, &env),
            Err(DynamicsError::AltitudeFloor { .. })
        ));
    }

    #[test]
    fn kepler_period_recovered() {
        // circular 400 km orbit, J2/drag off: after one analytic period the
        // position returns to the start within 0.1 s of arc (|v| * 0.1 s)
        let a = 6_778_137.0;
        let env = Env::two_body(FieldModel::dipole());
        let params = SpacecraftParams::default();
        let period = 2.0 * std::f64::consts::PI * (a * a * a / GM_EARTH).sqrt();
        assert_relative_eq!(period, 5553.6, epsilon = 0.5);

        let start = circular_state(a, Vec3::zeros());
        let dt = 0.5;
        let steps = (period / dt).floor() as usize;
        let mut state = start;
        for _ in 0..steps {
            state = rk4_step(&state, &params, &env, &Vec3::zeros(), dt).unwrap();
        }
        let remainder = period - steps as f64 * dt;
        state = rk4_step(&state, &params, &env, &Vec3::zeros(), remainder).unwrap();
        let miss = (state.r_eci - start.r_eci).norm();
        let tol = start.v_eci.norm() * 0.1;
        assert!(miss < tol, "missed start by {miss:.1} m (tol {tol:.1} m)");
    }

    #[test]
    fn drag_opposes_relative_velocity() {
        let a = 6_778_137.0;
        let mut env = Env::new(FieldModel::dipole());
        env.j2_enabled = false;
        let params = SpacecraftParams::default();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut state = circular_state(a, Vec3::zeros());
            state.q = UnitQuat::sample_uniform(&mut rng);
            let (f_eci, _) = drag_force_and_torque(&state, &params, &env);
            let v_rel = state.v_eci - Vec3::new(0.0, 0.0, EARTH_ROT_RAD_S).cross(&state.r_eci);
            // anti-parallel: negative dot, zero cross
            assert!(f_eci.dot(&v_rel) < 0.0);
            assert!(f_eci.cross(&v_rel).norm() < 1e-12 * f_eci.norm() * v_rel.norm());
        }
    }

    #[test]
    fn drag_torque_zero_without_cp_offset() {
        let a = 6_778_137.0;
        let env = Env::new(FieldModel::dipole());
        let mut params = SpacecraftParams::default();
        params.cp_offset = Vec3::zeros();
        let state = circular_state(a, Vec3::zeros());
        let (_, tau) = drag_force_and_torque(&state, &params, &env);
        assert_eq!(tau, Vec3::zeros());
    }

    #[test]
    fn attitude_equilibrium() {
        let params = SpacecraftParams::default();
        let state = circular_state(6_778_137.0, Vec3::zeros());
        let w_dot = attitude_dynamics(
            &state,
            &params,
            &Vec3::zeros(),
            &Vec3::new(3e-5, 0.0, 0.0),
            &Vec3::zeros(),
        );
        assert_eq!(w_dot, Vec3::zeros());
    }

    #[test]
    fn magnetic_torque_examples() {
        // mu parallel to B gives zero torque; perpendicular case is mu x B
        let params = SpacecraftParams::default();
        let state = circular_state(6_778_137.0, Vec3::zeros());
        let b = Vec3::new(0.0, 1e-5, 0.0);
        let w_dot = attitude_dynamics(&state, &params, &(b * 500.0), &b, &Vec3::zeros());
        assert!(w_dot.norm() < 1e-18);

        let mu = Vec3::new(1.0, 0.0, 0.0);
        let torque = params.inertia * attitude_dynamics(&state, &params, &mu, &b, &Vec3::zeros());
        assert_relative_eq!(torque, Vec3::new(0.0, 0.0, 1e-5), max_relative = 1e-12);
    }

    #[test]
    fn magnetic_torque_orthogonal_to_field() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let mu = Vec3::new(
                rng.gen_range(-0.07..0.07),
                rng.gen_range(-0.07..0.07),
                rng.gen_range(-0.07..0.07),
            );
            let b = Vec3::new(
                rng.gen_range(-5e-5..5e-5),
                rng.gen_range(-5e-5..5e-5),
                rng.gen_range(-5e-5..5e-5),
            );
            let tau = mu.cross(&b);
            assert!(tau.dot(&b).abs() < 1e-18_f64.max(1e-12 * tau.norm() * b.norm()));
        }
    }

    #[test]
    fn free_rigid_body_conserves_momentum_vector() {
        // zero dipole, drag off: each inertial component of h within 1e-6
        // relative over one orbit (moderate tumble rate; see step-size note
        // in the acceptance suite)
        let a = 6_778_137.0;
        let env = Env::two_body(FieldModel::dipole());
        let params = SpacecraftParams::default();
        let omega0 = Vec3::new(1.5, -1.0, 2.0) * 1.0_f64.to_radians();
        let mut state = circular_state(a, omega0);
        let h0 = state.momentum_eci(&params);
        let dt = 0.5;
        let steps = (5554.0 / dt) as usize;
        for _ in 0..steps {
            state = rk4_step(&state, &params, &env, &Vec3::zeros(), dt).unwrap();
        }
        let h1 = state.momentum_eci(&params);
        for i in 0..3 {
            assert!(
                (h1[i] - h0[i]).abs() / h0.norm() < 1e-6,
                "component {i}: {} -> {}",
                h0[i],
                h1[i]
            );
        }
    }

    #[test]
    fn two_body_energy_conserved() {
        let a = 6_778_137.0;
        let env = Env::two_body(FieldModel::dipole());
        let params = SpacecraftParams::default();
        let mut state = circular_state(a, Vec3::new(0.01, 0.02, -0.01));
        let energy =
            |s: &SimState| 0.5 * s.v_eci.norm_squared() - GM_EARTH / s.r_eci.norm();
        let e0 = energy(&state);
        for _ in 0..(5554.0 / 0.5) as usize {
            state = rk4_step(&state, &params, &env, &Vec3::zeros(), 0.5).unwrap();
        }
        assert!(((energy(&state) - e0) / e0).abs() < 1e-8);
    }

    #[test]
    fn torque_free_symmetric_top_precession() {
        // axisymmetric J: body-frame transverse rate rotates at
        // sigma = (Ia/It - 1) * omega_z
        let mut params = SpacecraftParams::default();
        params.inertia = Mat3::from_diagonal(&Vec3::new(4.0e-3, 4.0e-3, 6.0e-3));
        let env = Env::two_body(FieldModel::dipole());
        let omega0 = Vec3::new(0.04, 0.0, 0.10);
        let mut state = circular_state(6_778_137.0, omega0);
        let sigma = (6.0e-3 / 4.0e-3 - 1.0) * omega0.z;
        let t_end = 200.0;
        let dt = 0.05;
        for _ in 0..(t_end / dt) as usize {
            state = rk4_step(&state, &params, &env, &Vec3::zeros(), dt).unwrap();
        }
        let angle = sigma * t_end;
        let expected = Vec3::new(0.04 * angle.cos(), 0.04 * angle.sin(), 0.10);
        assert_relative_eq!(state.omega_body, expected, max_relative = 1e-4);
    }

    #[test]
    fn rk4_is_fourth_order() {
        // halving dt shrinks the endpoint error ~16x on a smooth tumble
        let params = SpacecraftParams::default();
        let env = Env::two_body(FieldModel::dipole());
        let omega0 = Vec3::new(0.3, -0.4, 0.5);
        let t_end = 40.0;
        let run = |dt: f64| {
            let mut state = circular_state(6_778_137.0, omega0);
            for _ in 0..(t_end / dt).round() as usize {
                state = rk4_step(&state, &params, &env, &Vec3::zeros(), dt).unwrap();
            }
            state
        };
        let reference = run(0.0125);
        let err = |s: &SimState| (s.omega_body - reference.omega_body).norm();
        let e1 = err(&run(0.8));
        let e2 = err(&run(0.4));
        let ratio = e1 / e2;
        assert!(
            (10.0..25.0).contains(&ratio),
            "order ratio {ratio:.1} (e1={e1:.3e}, e2={e2:.3e})"
        );
    }

    #[test]
    fn measure_noiseless_is_exact() {
        let mut params = SpacecraftParams::default();
        params.magnetometer_noise_t = 0.0;
        params.gyro_noise_density = 0.0;
        params.gyro_bias_rad_s = 0.0;
        let env = Env::new(FieldModel::igrf13());
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let rig = SensorRig::new(&params, 1.0, &mut rng);
        let state = circular_state(6_778_137.0, Vec3::new(0.1, -0.2, 0.3));
        let sample = rig.measure(&state, &env, &mut rng).unwrap();
        let b_true = env
            .field
            .field_body(&state.q, &state.r_eci, &state.epoch())
            .unwrap();
        assert_eq!(sample.b_meas, b_true);
        assert_eq!(sample.omega_meas, state.omega_body);
    }

    #[test]
    fn gyro_bias_is_run_constant() {
        let mut params = SpacecraftParams::default();
        params.magnetometer_noise_t = 0.0;
        params.gyro_noise_density = 0.0;
        let env = Env::new(FieldModel::dipole());
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let rig = SensorRig::new(&params, 1.0, &mut rng);
        assert_relative_eq!(rig.gyro_bias.norm(), 1.0_f64.to_radians(), epsilon = 1e-15);
        let state = circular_state(6_778_137.0, Vec3::new(0.1, -0.2, 0.3));
        let first = rig.measure(&state, &env, &mut rng).unwrap();
        for _ in 0..10 {
            let s = rig.measure(&state, &env, &mut rng).unwrap();
            assert_eq!(s.omega_meas - state.omega_body, first.omega_meas - state.omega_body);
        }
    }

    #[test]
    fn magnetometer_noise_std_matches_spec() {
        let params = SpacecraftParams::default();
        let env = Env::new(FieldModel::dipole());
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let rig = SensorRig::new(&params, 1.0, &mut rng);
        let state = circular_state(6_778_137.0, Vec3::zeros());
        let b_true = env
            .field
            .field_body(&state.q, &state.r_eci, &state.epoch())
            .unwrap();
        let n = 100_000;
        let mut sum_sq = Vec3::zeros();
        for _ in 0..n {
            let s = rig.measure(&state, &env, &mut rng).unwrap();
            let d = s.b_meas - b_true;
            sum_sq += d.component_mul(&d);
        }
        for i in 0..3 {
            let std = (sum_sq[i] / n as f64).sqrt();
            assert_relative_eq!(std, 15e-9, max_relative = 0.03);
        }
    }

    #[test]
    fn measure_is_seed_reproducible() {
        let params = SpacecraftParams::default();
        let env = Env::new(FieldModel::dipole());
        let state = circular_state(6_778_137.0, Vec3::new(0.2, 0.1, -0.3));
        let run = || {
            let mut rng = ChaCha12Rng::seed_from_u64(77);
            let rig = SensorRig::new(&params, 1.0, &mut rng);
            (0..5)
                .map(|_| rig.measure(&state, &env, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = run();
        let b = run();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.b_meas, y.b_meas);
            assert_eq!(x.omega_meas, y.omega_meas);
        }
    }

    #[test]
    fn initial_conditions_match_distribution() {
        let ic = InitialConditions::default();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let a = R_EARTH_EQ + 400_000.0;
        let circ = (GM_EARTH / a).sqrt();
        for _ in 0..10_000 {
            let s = ic.sample(&mut rng);
            assert_relative_eq!(s.r_eci.norm(), a, max_relative = 1e-12);
            assert_relative_eq!(s.v_eci.norm(), circ, max_relative = 1e-12);
            // circular: r.v = 0
            assert!(s.r_eci.dot(&s.v_eci).abs() < 1e-4 * a * circ);
            assert_relative_eq!(
                s.omega_body.norm(),
                30.0_f64.to_radians(),
                max_relative = 1e-12
            );
            // inclination from the orbit normal
            let normal = s.r_eci.cross(&s.v_eci).normalize();
            let inc = normal.z.acos().to_degrees();
            assert!(
                (20.0..160.0).contains(&inc),
                "inclination {inc} outside [20, 160)"
            );
        }
    }

    #[test]
    fn params_validation_catches_bad_inputs() {
        let mut p = SpacecraftParams::default();
        p.validate().unwrap();
        p.mu_max.y = -0.01;
        assert!(p.validate().is_err());

        let mut p = SpacecraftParams::default();
        p.inertia[(0, 1)] = 1.0; // asymmetric
        assert!(p.validate().is_err());
    }
}
