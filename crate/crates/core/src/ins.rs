//! Strapdown mechanization.

use crate::math::{Quaternion, Vec3};

/// Default local gravity magnitude, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// One IMU reading. `mag` is `None` when the log carries no magnetometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Seconds.
    pub t: f64,
    /// Specific force, m/s^2, body frame.
    pub acc: Vec3,
    /// Angular rate, rad/s, body frame.
    pub gyro: Vec3,
    /// Magnetic field, normalized units, body frame.
    pub mag: Option<Vec3>,
}

/// Full navigation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    pub t: f64,
    /// Body-to-navigation attitude.
    pub q: Quaternion,
    /// Velocity in the navigation frame, m/s.
    pub v: Vec3,
    /// Position in the navigation frame, m.
    pub r: Vec3,
    /// Gyroscope bias estimate, rad/s.
    pub bg: Vec3,
    /// Accelerometer bias estimate, m/s^2.
    pub ba: Vec3,
}

impl Default for NavState {
    fn default() -> Self {
        Self {
            t: 0.0,
            q: Quaternion::identity(),
            v: Vec3::zeros(),
            r: Vec3::zeros(),
            bg: Vec3::zeros(),
            ba: Vec3::zeros(),
        }
    }
}

/// Removes the current bias estimates from a raw sample, returning the
/// compensated specific force and angular rate.
pub fn compensate(sample: &ImuSample, state: &NavState) -> (Vec3, Vec3) {
    (sample.acc - state.ba, sample.gyro - state.bg)
}

/// One mechanization step: attitude first, then velocity with the updated
/// attitude, then position with the updated velocity.
pub fn propagate(state: &NavState, acc: &Vec3, gyro: &Vec3, dt: f64, gravity: f64) -> NavState {
    let q = state.q.propagate(gyro, dt);
    let acc_n = q.to_rotmat() * acc - Vec3::new(0.0, 0.0, gravity);
    let v = state.v + acc_n * dt;
    let r = state.r + v * dt;
    NavState {
        t: state.t + dt,
        q,
        v,
        r,
        ..*state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const G: f64 = STANDARD_GRAVITY;

    fn sample(acc: Vec3, gyro: Vec3) -> ImuSample {
        ImuSample {
            t: 0.0,
            acc,
            gyro,
            mag: None,
        }
    }

    #[test]
    fn compensation_subtracts_biases() {
        let s = sample(Vec3::new(0.0, 0.0, G), Vec3::new(0.01, 0.02, 0.03));
        assert_eq!(compensate(&s, &NavState::default()), (s.acc, s.gyro));

        let state = NavState {
            ba: Vec3::new(0.1, 0.0, 0.0),
            bg: Vec3::new(0.001, -0.002, 0.0),
            ..NavState::default()
        };
        let (a, w) = compensate(&s, &state);
        assert_eq!(a, Vec3::new(-0.1, 0.0, G));
        assert_abs_diff_eq!(a + state.ba, s.acc, epsilon = 1e-15);
        assert_abs_diff_eq!(w + state.bg, s.gyro, epsilon = 1e-15);
    }

    #[test]
    fn level_stationary_has_no_drift() {
        let mut s = NavState {
            v: Vec3::new(0.5, -0.2, 0.0),
            ..NavState::default()
        };
        let v0 = s.v;
        let r0 = s.r;
        for _ in 0..1000 {
            s = propagate(&s, &Vec3::new(0.0, 0.0, G), &Vec3::zeros(), 0.01, G);
        }
        assert_eq!(s.v, v0);
        assert_eq!(s.q, Quaternion::identity());
        assert_abs_diff_eq!(s.r, r0 + v0 * 10.0, epsilon = 1e-9);
    }

    #[test]
    fn single_vertical_step() {
        let s = propagate(
            &NavState::default(),
            &Vec3::new(0.0, 0.0, G + 1.0),
            &Vec3::zeros(),
            0.01,
            G,
        );
        assert_abs_diff_eq!(s.v, Vec3::new(0.0, 0.0, 0.01), epsilon = 1e-15);
        assert_abs_diff_eq!(s.r, Vec3::new(0.0, 0.0, 1e-4), epsilon = 1e-15);
    }

    #[test]
    fn constant_acceleration_while_rotating_about_z() {
        // Yaw at a constant rate while the body-frame force is rotated to
        // keep a fixed 1 m/s^2 northward acceleration in the navigation frame.
        let rate = 0.3;
        let dt = 0.01;
        let mut s = NavState::default();
        for k in 1..=100 {
            let yaw = rate * k as f64 * dt;
            let acc_b = Vec3::new(yaw.cos(), -yaw.sin(), G);
            s = propagate(&s, &acc_b, &Vec3::new(0.0, 0.0, rate), dt, G);
        }
        assert_abs_diff_eq!(s.v, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-3);
    }

    #[test]
    fn velocity_increment_is_linear_in_force() {
        let acc = |k: f64| Vec3::new(0.3 * k, -0.1 * k, G + 0.2 * k);
        let one = propagate(&NavState::default(), &acc(1.0), &Vec3::zeros(), 0.01, G);
        let two = propagate(&NavState::default(), &acc(2.0), &Vec3::zeros(), 0.01, G);
        assert_abs_diff_eq!(two.v, one.v * 2.0, epsilon = 1e-15);
    }
}
