//! 15-state error-state Kalman filter.
//!
//! Error vector layout: attitude `dphi` (rad, navigation frame), gyro bias
//! `dw` (rad/s), position `dr` (m), velocity `dv` (m/s), accelerometer bias
//! `da` (m/s^2). Position, velocity and attitude errors are "estimate minus
//! truth"; bias errors are "true bias minus estimated bias", so the
//! correction adds them to the bias estimates.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heading::HeadingMeasurement;
use crate::ins::NavState;
use crate::math::{pade_attitude_correct, skew3, EulerAngles, Mat3, Quaternion, Vec3};

pub const STATE_DIM: usize = 15;
pub const ATT: usize = 0;
pub const GYRO_BIAS: usize = 3;
pub const POS: usize = 6;
pub const VEL: usize = 9;
pub const ACC_BIAS: usize = 12;

/// Largest attitude correction the Padé form is trusted for, rad.
pub const SMALL_ANGLE_LIMIT: f64 = 0.3;

pub type Matrix15 = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type Vector15 = SVector<f64, STATE_DIM>;
pub type Covariance15 = Matrix15;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub attitude: Vec3,
    pub gyro_bias: Vec3,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acc_bias: Vec3,
}

impl ErrorState {
    pub fn from_vector(x: &Vector15) -> Self {
        let block = |i: usize| x.fixed_rows::<3>(i).into_owned();
        Self {
            attitude: block(ATT),
            gyro_bias: block(GYRO_BIAS),
            position: block(POS),
            velocity: block(VEL),
            acc_bias: block(ACC_BIAS),
        }
    }

    pub fn to_vector(&self) -> Vector15 {
        let mut x = Vector15::zeros();
        x.fixed_rows_mut::<3>(ATT).copy_from(&self.attitude);
        x.fixed_rows_mut::<3>(GYRO_BIAS).copy_from(&self.gyro_bias);
        x.fixed_rows_mut::<3>(POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(ACC_BIAS).copy_from(&self.acc_bias);
        x
    }

    pub fn within_small_angle(&self) -> bool {
        self.attitude.norm() < SMALL_ANGLE_LIMIT
    }
}

/// Process and measurement noise, plus the initial covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Gyro white noise, rad/s per sample.
    #[serde(rename = "gyro_noise_dps", with = "crate::config::degrees")]
    pub gyro_noise: f64,
    /// Accelerometer white noise, m/s^2 per sample.
    pub acc_noise: f64,
    /// Gyro bias random walk, rad/s/sqrt(s).
    #[serde(rename = "gyro_bias_walk_dps", with = "crate::config::degrees")]
    pub gyro_bias_walk: f64,
    /// Accelerometer bias random walk, m/s^2/sqrt(s).
    pub acc_bias_walk: f64,
    pub sigma_roll_deg: f64,
    pub sigma_pitch_deg: f64,
    pub sigma_compass_deg: f64,
    pub sigma_hdr_deg: f64,
    /// Zero-velocity pseudo-measurement noise, m/s.
    pub sigma_velocity: f64,
    pub init_tilt_deg: f64,
    pub init_heading_deg: f64,
    /// rad/s.
    #[serde(rename = "init_gyro_bias_dps", with = "crate::config::degrees")]
    pub init_gyro_bias: f64,
    /// m/s^2.
    pub init_acc_bias: f64,
    /// m/s.
    pub init_velocity: f64,
    /// m.
    pub init_position: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            gyro_noise: 0.1f64.to_radians(),
            acc_noise: 0.02,
            gyro_bias_walk: 1e-5,
            acc_bias_walk: 1e-4,
            sigma_roll_deg: 1.0,
            sigma_pitch_deg: 1.0,
            sigma_compass_deg: 5.0,
            sigma_hdr_deg: 2.0,
            sigma_velocity: 0.01,
            init_tilt_deg: 1.0,
            init_heading_deg: 5.0,
            init_gyro_bias: 0.05f64.to_radians(),
            init_acc_bias: 0.05,
            init_velocity: 1e-3,
            init_position: 1e-3,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_roll_deg", self.sigma_roll_deg),
            ("sigma_pitch_deg", self.sigma_pitch_deg),
            ("sigma_compass_deg", self.sigma_compass_deg),
            ("sigma_hdr_deg", self.sigma_hdr_deg),
            ("sigma_velocity", self.sigma_velocity),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("noise.{name} must be > 0, got {value}")));
            }
        }
        let non_negative = [
            ("gyro_noise_dps", self.gyro_noise.to_degrees()),
            ("acc_noise", self.acc_noise),
            ("gyro_bias_walk_dps", self.gyro_bias_walk.to_degrees()),
            ("acc_bias_walk", self.acc_bias_walk),
            ("init_tilt_deg", self.init_tilt_deg),
            ("init_heading_deg", self.init_heading_deg),
            ("init_gyro_bias_dps", self.init_gyro_bias.to_degrees()),
            ("init_acc_bias", self.init_acc_bias),
            ("init_velocity", self.init_velocity),
            ("init_position", self.init_position),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!("noise.{name} must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    pub fn compass_variance(&self) -> f64 {
        self.sigma_compass_deg.to_radians().powi(2)
    }

    pub fn hdr_variance(&self) -> f64 {
        self.sigma_hdr_deg.to_radians().powi(2)
    }

    /// Diagonal process noise for one step of length `dt`.
    pub fn process_noise(&self, dt: f64) -> Matrix15 {
        let mut diag = Vector15::zeros();
        let att = (self.gyro_noise * dt).powi(2);
        let vel = (self.acc_noise * dt).powi(2);
        let bg = self.gyro_bias_walk.powi(2) * dt;
        let ba = self.acc_bias_walk.powi(2) * dt;
        for i in 0..3 {
            diag[ATT + i] = att;
            diag[GYRO_BIAS + i] = bg;
            diag[VEL + i] = vel;
            diag[ACC_BIAS + i] = ba;
        }
        Matrix15::from_diagonal(&diag)
    }

    pub fn initial_covariance(&self) -> Covariance15 {
        let mut diag = Vector15::zeros();
        let tilt = self.init_tilt_deg.to_radians().powi(2);
        diag[ATT] = tilt;
        diag[ATT + 1] = tilt;
        diag[ATT + 2] = self.init_heading_deg.to_radians().powi(2);
        for i in 0..3 {
            diag[GYRO_BIAS + i] = self.init_gyro_bias.powi(2);
            diag[POS + i] = self.init_position.powi(2);
            diag[VEL + i] = self.init_velocity.powi(2);
            diag[ACC_BIAS + i] = self.init_acc_bias.powi(2);
        }
        Matrix15::from_diagonal(&diag)
    }
}

/// Discrete error-state transition for one step.
///
/// `acc_n` is the bias-compensated specific force rotated into the
/// navigation frame; `c_bn` is the body-to-navigation rotation.
pub fn build_phi(c_bn: &Mat3, acc_n: &Vec3, dt: f64) -> Matrix15 {
    let mut phi = Matrix15::identity();
    phi.fixed_view_mut::<3, 3>(ATT, GYRO_BIAS).copy_from(&(c_bn * dt));
    phi.fixed_view_mut::<3, 3>(POS, VEL).copy_from(&(Mat3::identity() * dt));
    phi.fixed_view_mut::<3, 3>(VEL, ATT).copy_from(&(skew3(acc_n) * -dt));
    phi.fixed_view_mut::<3, 3>(VEL, ACC_BIAS).copy_from(&(c_bn * dt));
    phi
}

fn symmetrize(p: &Matrix15) -> Matrix15 {
    (p + p.transpose()) * 0.5
}

/// Removes the heading column of the velocity/attitude block, so that a
/// heading error no longer feeds the velocity error.
pub fn decouple_yaw_from_velocity(phi: &mut Matrix15) {
    for i in 0..3 {
        phi[(VEL + i, ATT + 2)] = 0.0;
    }
}

/// Covariance prediction `Phi P Phi^T + Q`.
pub fn predict(p: &Covariance15, phi: &Matrix15, q: &Matrix15) -> Covariance15 {
    symmetrize(&(phi * p * phi.transpose() + q))
}

/// Sensitivity of (roll, pitch, heading) to a navigation-frame attitude
/// error: `euler(estimate) - euler(truth) ~= J * dphi`.
pub fn euler_error_jacobian(e: &EulerAngles) -> Result<Mat3> {
    let (sp, cp) = e.pitch.sin_cos();
    let (sh, ch) = e.heading.sin_cos();
    let rates_to_rotation = Mat3::new(
        ch * cp, sh, 0.0, //
        -sh * cp, ch, 0.0, //
        -sp, 0.0, -1.0,
    );
    rates_to_rotation
        .try_inverse()
        .ok_or(Error::DegenerateAttitude { pitch: e.pitch })
}

/// Linear measurement `z = H dx + noise` with diagonal noise `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub z: DVector<f64>,
    pub h: DMatrix<f64>,
    pub r: DVector<f64>,
}

impl Measurement {
    pub fn rows(&self) -> usize {
        self.z.len()
    }
}

/// Stacks the stance measurements in the order roll, pitch, heading,
/// velocity. Absent parts are left out.
///
/// * `tilt`: roll and pitch innovations (predicted - accelerometer).
/// * `heading`: gated heading innovation; a `None` source drops the row.
/// * `velocity`: ZUPT innovation (predicted velocity minus zero).
/// * `euler`: predicted attitude, used to map the angle innovations onto
///   the navigation-frame attitude error.
pub fn build_measurement(
    tilt: Option<(f64, f64)>,
    heading: &HeadingMeasurement,
    velocity: Option<Vec3>,
    euler: &EulerAngles,
    noise: &NoiseConfig,
) -> Result<Measurement> {
    let mut z = Vec::with_capacity(6);
    let mut r = Vec::with_capacity(6);
    let mut rows: Vec<[f64; STATE_DIM]> = Vec::with_capacity(6);
    let needs_jacobian = tilt.is_some() || !heading.is_none();
    let jac = if needs_jacobian {
        euler_error_jacobian(euler)?
    } else {
        Mat3::zeros()
    };
    let attitude_row = |i: usize| {
        let mut row = [0.0; STATE_DIM];
        for j in 0..3 {
            row[ATT + j] = jac[(i, j)];
        }
        row
    };
    if let Some((roll, pitch)) = tilt {
        z.extend([roll, pitch]);
        r.extend([
            noise.sigma_roll_deg.to_radians().powi(2),
            noise.sigma_pitch_deg.to_radians().powi(2),
        ]);
        rows.push(attitude_row(0));
        rows.push(attitude_row(1));
    }
    if !heading.is_none() {
        z.push(heading.innovation);
        r.push(heading.variance);
        rows.push(attitude_row(2));
    }
    if let Some(dv) = velocity {
        for i in 0..3 {
            let mut row = [0.0; STATE_DIM];
            row[VEL + i] = 1.0;
            rows.push(row);
            z.push(dv[i]);
            r.push(noise.sigma_velocity.powi(2));
        }
    }
    if z.is_empty() {
        return Err(Error::NoMeasurement);
    }
    let m = z.len();
    let h = DMatrix::from_fn(m, STATE_DIM, |i, j| rows[i][j]);
    Ok(Measurement {
        z: DVector::from_vec(z),
        h,
        r: DVector::from_vec(r),
    })
}

/// Kalman gain and Joseph-form covariance update.
pub fn update(p: &Covariance15, m: &Measurement) -> Result<(ErrorState, Covariance15)> {
    let pd = DMatrix::from_column_slice(STATE_DIM, STATE_DIM, p.as_slice());
    let r = DMatrix::from_diagonal(&m.r);
    let pht = &pd * m.h.transpose();
    let s = &m.h * &pht + &r;
    let s_inv = s
        .cholesky()
        .ok_or(Error::SingularInnovation)?
        .inverse();
    let k = pht * s_inv;
    let dx = &k * &m.z;
    let ikh = DMatrix::<f64>::identity(STATE_DIM, STATE_DIM) - &k * &m.h;
    let joseph = &ikh * pd * ikh.transpose() + &k * r * k.transpose();
    let p_new = symmetrize(&Matrix15::from_column_slice(joseph.as_slice()));
    if !dx.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    Ok((ErrorState::from_vector(&Vector15::from_column_slice(dx.as_slice())), p_new))
}

/// Feeds an estimated error back into the navigation state.
pub fn inject_errors(state: &NavState, dx: &ErrorState) -> NavState {
    let c = pade_attitude_correct(&state.q.to_rotmat(), &dx.attitude);
    let mut q = Quaternion::from_rotmat(&c);
    if q.dot(&state.q) < 0.0 {
        q = Quaternion {
            w: -q.w,
            x: -q.x,
            y: -q.y,
            z: -q.z,
        };
    }
    NavState {
        t: state.t,
        q,
        v: state.v - dx.velocity,
        r: state.r - dx.position,
        bg: state.bg + dx.gyro_bias,
        ba: state.ba + dx.acc_bias,
    }
}
