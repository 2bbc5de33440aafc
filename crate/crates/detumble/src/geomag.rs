//! Geomagnetic field evaluation from IGRF spherical-harmonic coefficients.
//!
//! The model is evaluated in geocentric spherical coordinates (no geodetic
//! ellipsoid handling) and rotated between ECEF and ECI with a
//! Greenwich-mean-sidereal-time rotation about the z axis. A degree-1
//! truncation of the same code path doubles as a fast tilted-dipole fallback
//! for tests and quick runs.

use crate::attmath::{Mat3, UnitQuat, Vec3};
use thiserror::Error;

/// IGRF reference sphere radius, meters.
pub const REFERENCE_RADIUS_M: f64 = 6_371_200.0;
/// Evaluations below the polar Earth radius are rejected.
pub const MIN_RADIUS_M: f64 = 6_356_752.0;
/// Highest spherical-harmonic degree carried by the IGRF series.
pub const MAX_DEGREE: usize = 13;
/// Truncation used for simulation runs; field error from the dropped degrees
/// is far below the magnetometer noise floor.
pub const DEFAULT_DEGREE: usize = 10;

const JULIAN_YEAR_S: f64 = 365.25 * 86_400.0;
/// GMST at the J2000.0 epoch (2000-01-01 12:00 UT), radians.
const GMST_J2000_DEG: f64 = 280.460_618_37;
/// Mean rotation rate of the Greenwich meridian, degrees per day.
const GMST_RATE_DEG_PER_DAY: f64 = 360.985_647_366_29;

/// Standard IGRF coefficient table, 1900-2020 main field plus secular
/// variation, in the published whitespace-delimited text layout.
const EMBEDDED_IGRF13: &str = include_str!("../data/igrf13coeffs.txt");

#[derive(Debug, Error)]
pub enum GeomagError {
    #[error("coefficient table line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("coefficient table has no data rows")]
    Empty,
    #[error("invalid field model: {0}")]
    InvalidModel(String),
    #[error("radius {radius_m:.0} m is below the Earth surface")]
    BelowSurface { radius_m: f64 },
}

/// Time tag for field evaluation: seconds since the J2000.0 epoch.
///
/// The decimal-year accessor uses Julian years (365.25 d), so
/// `from_decimal_year` round-trips exactly; sub-day calendar effects are far
/// below the secular-variation resolution of the model.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct GeoEpoch {
    secs_j2000: f64,
}

impl GeoEpoch {
    pub fn from_seconds_j2000(secs: f64) -> Self {
        GeoEpoch { secs_j2000: secs }
    }

    pub fn from_decimal_year(year: f64) -> Self {
        GeoEpoch {
            secs_j2000: (year - 2000.0) * JULIAN_YEAR_S,
        }
    }

    pub fn seconds_j2000(&self) -> f64 {
        self.secs_j2000
    }

    pub fn decimal_year(&self) -> f64 {
        2000.0 + self.secs_j2000 / JULIAN_YEAR_S
    }

    pub fn advanced(&self, dt_s: f64) -> Self {
        GeoEpoch {
            secs_j2000: self.secs_j2000 + dt_s,
        }
    }

    /// Greenwich mean sidereal angle, radians in [0, 2π).
    pub fn gmst_rad(&self) -> f64 {
        let days = self.secs_j2000 / 86_400.0;
        let deg = GMST_J2000_DEG + GMST_RATE_DEG_PER_DAY * days;
        deg.to_radians().rem_euclid(2.0 * std::f64::consts::PI)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldVariant {
    Igrf,
    Dipole,
}

/// Gauss coefficients at a single model epoch plus linear secular-variation
/// rates, Schmidt semi-normalized, in nanotesla.
#[derive(Clone, Debug)]
pub struct FieldModel {
    variant: FieldVariant,
    n_max: usize,
    epoch_year: f64,
    g: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    h: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    g_dot: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    h_dot: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
}

impl FieldModel {
    /// Parse a coefficient table in the standard published layout:
    /// comment lines starting with `#`, one header line whose columns name the
    /// model epochs, then `g|h n m <value per epoch> <sv>` rows. The model is
    /// pinned at the last epoch column with the trailing secular-variation
    /// column as its rate.
    pub fn parse(text: &str) -> Result<Self, GeomagError> {
        Self::parse_truncated(text, MAX_DEGREE)
    }

    /// Same as [`FieldModel::parse`] but truncating at `n_max`.
    pub fn parse_truncated(text: &str, n_max: usize) -> Result<Self, GeomagError> {
        let n_max_req = n_max.min(MAX_DEGREE);
        let mut epoch_year: Option<f64> = None;
        let mut model = FieldModel {
            variant: FieldVariant::Igrf,
            n_max: 0,
            epoch_year: 0.0,
            g: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            h: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            g_dot: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            h_dot: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
        };
        let mut rows = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split_whitespace();
            let first = cols.next().unwrap();
            if first == "c/s" {
                // header: the last parseable float names the model epoch
                epoch_year = trimmed
                    .split_whitespace()
                    .filter_map(|t| t.parse::<f64>().ok())
                    .last();
                continue;
            }
            if first != "g" && first != "h" {
                return Err(GeomagError::Parse {
                    line,
                    reason: format!("expected 'g' or 'h' row, found '{first}'"),
                });
            }
            let parse_usize = |tok: Option<&str>, what: &str| -> Result<usize, GeomagError> {
                tok.ok_or_else(|| GeomagError::Parse {
                    line,
                    reason: format!("missing {what}"),
                })?
                .parse()
                .map_err(|_| GeomagError::Parse {
                    line,
                    reason: format!("unparseable {what}"),
                })
            };
            let n = parse_usize(cols.next(), "degree")?;
            let m = parse_usize(cols.next(), "order")?;
            if n == 0 || n > MAX_DEGREE || m > n {
                return Err(GeomagError::Parse {
                    line,
                    reason: format!("degree/order ({n},{m}) out of range"),
                });
            }
            let values: Result<Vec<f64>, _> = cols.map(|t| t.parse::<f64>()).collect();
            let values = values.map_err(|_| GeomagError::Parse {
                line,
                reason: "unparseable coefficient value".into(),
            })?;
            if values.len() < 2 {
                return Err(GeomagError::Parse {
                    line,
                    reason: "row needs at least one epoch value and a secular-variation value"
                        .into(),
                });
            }
            rows += 1;
            if n > n_max_req {
                continue;
            }
            let main = values[values.len() - 2];
            let sv = values[values.len() - 1];
            if first == "g" {
                model.g[n][m] = main;
                model.g_dot[n][m] = sv;
            } else {
                model.h[n][m] = main;
                model.h_dot[n][m] = sv;
            }
            model.n_max = model.n_max.max(n);
        }

        if rows == 0 {
            return Err(GeomagError::Empty);
        }
        if model.g[1][0] == 0.0 && model.g[1][1] == 0.0 && model.h[1][1] == 0.0 {
            return Err(GeomagError::InvalidModel(
                "degree-1 coefficients are all missing or zero".into(),
            ));
        }
        model.epoch_year = epoch_year.ok_or_else(|| {
            GeomagError::InvalidModel("no 'c/s deg ord <epochs...>' header line found".into())
        })?;
        if !model.finite() {
            return Err(GeomagError::InvalidModel(
                "non-finite coefficient value".into(),
            ));
        }
        Ok(model)
    }

    /// Compiled-in IGRF-13 table at the simulation truncation degree.
    pub fn igrf13() -> Self {
        Self::parse_truncated(EMBEDDED_IGRF13, DEFAULT_DEGREE).expect("embedded IGRF table")
    }

    /// Compiled-in IGRF-13 table at full degree 13.
    pub fn igrf13_full() -> Self {
        Self::parse(EMBEDDED_IGRF13).expect("embedded IGRF table")
    }

    /// Tilted-dipole fallback: the embedded table truncated to degree 1.
    pub fn dipole() -> Self {
        let mut m = Self::parse_truncated(EMBEDDED_IGRF13, 1).expect("embedded IGRF table");
        m.variant = FieldVariant::Dipole;
        m
    }

    /// Axial dipole with only the g(1,0) term; used by analytic tests.
    pub fn dipole_axial(g10_nt: f64, epoch_year: f64) -> Self {
        let mut model = FieldModel {
            variant: FieldVariant::Dipole,
            n_max: 1,
            epoch_year,
            g: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            h: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            g_dot: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
            h_dot: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1],
        };
        model.g[1][0] = g10_nt;
        model
    }

    pub fn variant(&self) -> FieldVariant {
        self.variant
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn epoch_year(&self) -> f64 {
        self.epoch_year
    }

    /// Main-field coefficient g(n,m) at the model epoch, nT.
    pub fn g_nm(&self, n: usize, m: usize) -> f64 {
        self.g[n][m]
    }

    /// Main-field coefficient h(n,m) at the model epoch, nT.
    pub fn h_nm(&self, n: usize, m: usize) -> f64 {
        self.h[n][m]
    }

    fn finite(&self) -> bool {
        for n in 0..=MAX_DEGREE {
            for m in 0..=MAX_DEGREE {
                if !(self.g[n][m].is_finite()
                    && self.h[n][m].is_finite()
                    && self.g_dot[n][m].is_finite()
                    && self.h_dot[n][m].is_finite())
                {
                    return false;
                }
            }
        }
        true
    }

    /// Field vector in ECEF cartesian coordinates, tesla.
    pub fn field_ecef(&self, r_ecef: &Vec3, t: &GeoEpoch) -> Result<Vec3, GeomagError> {
        let r = r_ecef.norm();
        if r < MIN_RADIUS_M {
            return Err(GeomagError::BelowSurface { radius_m: r });
        }
        // geocentric spherical coordinates, colatitude clamped off the poles
        let theta = (r_ecef.z / r).clamp(-1.0, 1.0).acos();
        let theta = theta.clamp(1e-9, std::f64::consts::PI - 1e-9);
        let phi = r_ecef.y.atan2(r_ecef.x);
        let (b_r, b_theta, b_phi) = self.spherical_components(r, theta, phi, t.decimal_year());

        let (st, ct) = (theta.sin(), theta.cos());
        let (sp, cp) = (phi.sin(), phi.cos());
        let r_hat = Vec3::new(st * cp, st * sp, ct);
        let theta_hat = Vec3::new(ct * cp, ct * sp, -st);
        let phi_hat = Vec3::new(-sp, cp, 0.0);
        Ok((b_r * r_hat + b_theta * theta_hat + b_phi * phi_hat) * 1e-9)
    }

    /// Spherical field components (B_r, B_theta, B_phi) in nT at geocentric
    /// radius `r` (m), colatitude `theta`, east longitude `phi`.
    pub fn spherical_components(&self, r: f64, theta: f64, phi: f64, year: f64) -> (f64, f64, f64) {
        let n_max = self.n_max;
        let dt = year - self.epoch_year;
        let (p, dp) = schmidt_legendre(n_max, theta);

        // longitude harmonics by recurrence
        let mut cos_m = [0.0; MAX_DEGREE + 1];
        let mut sin_m = [0.0; MAX_DEGREE + 1];
        cos_m[0] = 1.0;
        sin_m[0] = 0.0;
        if n_max >= 1 {
            cos_m[1] = phi.cos();
            sin_m[1] = phi.sin();
            for m in 2..=n_max {
                cos_m[m] = cos_m[m - 1] * cos_m[1] - sin_m[m - 1] * sin_m[1];
                sin_m[m] = sin_m[m - 1] * cos_m[1] + cos_m[m - 1] * sin_m[1];
            }
        }

        let ratio = REFERENCE_RADIUS_M / r;
        let sin_theta = theta.sin();
        let mut b_r = 0.0;
        let mut b_theta = 0.0;
        let mut b_phi = 0.0;
        let mut rr = ratio * ratio; // (a/r)^(n+2) for n = 0
        for n in 1..=n_max {
            rr *= ratio;
            for m in 0..=n {
                let g = self.g[n][m] + dt * self.g_dot[n][m];
                let h = self.h[n][m] + dt * self.h_dot[n][m];
                let sum = g * cos_m[m] + h * sin_m[m];
                b_r += rr * (n as f64 + 1.0) * sum * p[n][m];
                b_theta -= rr * sum * dp[n][m];
                if m > 0 {
                    b_phi += rr * (m as f64) * (g * sin_m[m] - h * cos_m[m]) * p[n][m] / sin_theta;
                }
            }
        }
        (b_r, b_theta, b_phi)
    }

    /// Field vector in ECI coordinates, tesla. ECEF->ECI uses the GMST-only
    /// rotation (no polar motion or nutation).
    pub fn field_eci(&self, r_eci: &Vec3, t: &GeoEpoch) -> Result<Vec3, GeomagError> {
        let gmst = t.gmst_rad();
        let eci_from_ecef = rot_z(gmst);
        let r_ecef = eci_from_ecef.transpose() * r_eci;
        let b_ecef = self.field_ecef(&r_ecef, t)?;
        Ok(eci_from_ecef * b_ecef)
    }

    /// Field vector in body coordinates, tesla, for an attitude `q` (ECI->body)
    /// at ECI position `r_eci`.
    pub fn field_body(
        &self,
        q: &UnitQuat,
        r_eci: &Vec3,
        t: &GeoEpoch,
    ) -> Result<Vec3, GeomagError> {
        Ok(q.rotate(&self.field_eci(r_eci, t)?))
    }
}

/// Rotation about z by `angle`: maps ECEF coordinates into ECI when `angle`
/// is the Greenwich sidereal angle.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Schmidt semi-normalized associated Legendre functions P(n,m)(cos theta)
/// and their colatitude derivatives dP/dtheta, for n <= n_max.
fn schmidt_legendre(
    n_max: usize,
    theta: f64,
) -> (
    [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
    [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
) {
    let (st, ct) = (theta.sin(), theta.cos());
    let mut p = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    let mut dp = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
    p[0][0] = 1.0;
    for n in 1..=n_max {
        // diagonal term
        let c = if n == 1 {
            1.0
        } else {
            (1.0 - 0.5 / n as f64).sqrt()
        };
        p[n][n] = c * st * p[n - 1][n - 1];
        dp[n][n] = c * (ct * p[n - 1][n - 1] + st * dp[n - 1][n - 1]);
        for m in 0..n {
            let norm = ((n * n - m * m) as f64).sqrt();
            let f1 = (2.0 * n as f64 - 1.0) / norm;
            let f2 = if n >= 2 {
                (((n - 1) * (n - 1)) as f64 - (m * m) as f64).sqrt() / norm
            } else {
                0.0
            };
            let (pm2, dpm2) = if n >= 2 && m <= n - 2 {
                (p[n - 2][m], dp[n - 2][m])
            } else {
                (0.0, 0.0)
            };
            p[n][m] = f1 * ct * p[n - 1][m] - f2 * pm2;
            dp[n][m] = f1 * (ct * dp[n - 1][m] - st * p[n - 1][m]) - f2 * dpm2;
        }
    }
    (p, dp)
}
