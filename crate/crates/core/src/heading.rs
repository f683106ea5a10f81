//! Complementary attitude corrections applied during stance: accelerometer
//! roll/pitch, tilt-compensated compass heading, heuristic drift reduction
//! (HDR) and the detector-gated choice between compass and HDR.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{wrap_angle, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadingSource {
    Compass,
    Hdr,
    None,
}

impl fmt::Display for HeadingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadingSource::Compass => "compass",
            HeadingSource::Hdr => "hdr",
            HeadingSource::None => "none",
        })
    }
}

/// Heading-error innovation `predicted - measured` with its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingMeasurement {
    /// rad, in `(-pi, pi]`.
    pub innovation: f64,
    /// rad^2.
    pub variance: f64,
    pub source: HeadingSource,
}

impl HeadingMeasurement {
    pub const fn none() -> Self {
        Self {
            innovation: 0.0,
            variance: 0.0,
            source: HeadingSource::None,
        }
    }

    pub fn is_none(&self) -> bool {
        self.source == HeadingSource::None
    }
}

/// Roll and pitch from a quasi-static specific force reading.
pub fn roll_pitch_from_accel(acc: &Vec3, gravity: f64) -> Result<(f64, f64)> {
    let norm = acc.norm();
    if norm <= 0.5 * gravity {
        return Err(Error::LowGravity { norm });
    }
    let roll = acc.y.atan2(acc.z);
    let pitch = -acc.x.atan2(acc.y.hypot(acc.z));
    Ok((roll, pitch))
}

/// Roll and pitch error measurements `predicted - accelerometer`.
pub fn attitude_error_meas(roll_pred: f64, pitch_pred: f64, roll_acc: f64, pitch_acc: f64) -> (f64, f64) {
    (wrap_angle(roll_pred - roll_acc), pitch_pred - pitch_acc)
}

/// Tilt-compensated magnetic heading plus declination, wrapped to `(-pi, pi]`.
pub fn compass_heading(mag: &Vec3, roll: f64, pitch: f64, declination: f64) -> Result<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let north = mag.x * cp + mag.y * sp * sr + mag.z * cr * sp;
    let east = mag.y * cr - mag.z * sr;
    if north.abs() < 1e-12 && east.abs() < 1e-12 {
        return Err(Error::UndefinedHeading);
    }
    Ok(wrap_angle(east.atan2(north) + declination))
}

pub fn compass_error_meas(heading_pred: f64, heading_compass: f64, variance: f64) -> HeadingMeasurement {
    HeadingMeasurement {
        innovation: wrap_angle(heading_pred - heading_compass),
        variance,
        source: HeadingSource::Compass,
    }
}

/// When HDR records a heading into its history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HdrHistoryMode {
    /// One entry per stance: the mean filtered heading of that stance.
    PerStance,
    /// One entry per processed sample.
    PerSample,
}

/// What HDR emits when the walker is turning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveBranch {
    /// Zero innovation with the HDR variance.
    ZeroInnovation,
    /// No heading row at all.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdrConfig {
    /// History length `n`.
    pub window: usize,
    /// Straight-path threshold, degrees.
    pub threshold_deg: f64,
    pub history: HdrHistoryMode,
    pub curve: CurveBranch,
}

impl Default for HdrConfig {
    fn default() -> Self {
        Self {
            window: 4,
            threshold_deg: 2.0,
            history: HdrHistoryMode::PerStance,
            curve: CurveBranch::ZeroInnovation,
        }
    }
}

impl HdrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("hdr.window must be >= 1".into()));
        }
        if !(self.threshold_deg.is_finite() && self.threshold_deg > 0.0) {
            return Err(Error::Config("hdr.threshold_deg must be > 0".into()));
        }
        Ok(())
    }
}

/// Heuristic heading drift reduction over a ring of recent headings.
#[derive(Debug, Clone)]
pub struct HdrState {
    history: VecDeque<f64>,
    window: usize,
    threshold: f64,
    variance: f64,
    curve: CurveBranch,
}

impl HdrState {
    /// `variance` is the HDR measurement variance, rad^2.
    pub fn new(cfg: &HdrConfig, variance: f64) -> Self {
        Self {
            history: VecDeque::with_capacity(cfg.window + 1),
            window: cfg.window,
            threshold: cfg.threshold_deg.to_radians(),
            variance,
            curve: cfg.curve,
        }
    }

    pub fn history(&self) -> impl Iterator<Item = &f64> {
        self.history.iter()
    }

    /// Circular mean of the history, `None` while it is not full.
    pub fn reference(&self) -> Option<f64> {
        if self.history.len() < self.window {
            return None;
        }
        let (s, c) = self
            .history
            .iter()
            .fold((0.0, 0.0), |(s, c), h| (s + h.sin(), c + h.cos()));
        Some(s.atan2(c))
    }

    /// HDR measurement for `heading` against the current history, without
    /// recording it.
    pub fn evaluate(&self, heading: f64) -> HeadingMeasurement {
        let Some(reference) = self.reference() else {
            return HeadingMeasurement::none();
        };
        let delta = wrap_angle(heading - reference);
        if delta.abs() <= self.threshold {
            HeadingMeasurement {
                innovation: delta,
                variance: self.variance,
                source: HeadingSource::Hdr,
            }
        } else {
            match self.curve {
                CurveBranch::ZeroInnovation => HeadingMeasurement {
                    innovation: 0.0,
                    variance: self.variance,
                    source: HeadingSource::Hdr,
                },
                CurveBranch::Skip => HeadingMeasurement::none(),
            }
        }
    }

    pub fn push(&mut self, heading: f64) {
        self.history.push_back(wrap_angle(heading));
        while self.history.len() > self.window {
            self.history.pop_front();
        }
    }

    /// Evaluates `heading` and then appends it to the history.
    pub fn update(&mut self, heading: f64) -> HeadingMeasurement {
        let m = self.evaluate(heading);
        self.push(heading);
        m
    }
}

/// Gate between compass and HDR: pure field selects the compass.
pub fn select_heading(pure_field: bool, compass: HeadingMeasurement, hdr: HeadingMeasurement) -> HeadingMeasurement {
    if pure_field {
        compass
    } else {
        hdr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{rotmat_from_euler, EulerAngles};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    const G: f64 = 9.81;

    #[test]
    fn level_accelerometer() {
        assert_eq!(roll_pitch_from_accel(&Vec3::new(0.0, 0.0, G), G).unwrap(), (0.0, 0.0));
        let (r, p) = roll_pitch_from_accel(&Vec3::new(0.0, G, 0.0), G).unwrap();
        assert_abs_diff_eq!(r, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn tilt_recovered_from_forward_model() {
        let (roll, pitch): (f64, f64) = (0.3, -0.4);
        let a = G * Vec3::new(-pitch.sin(), roll.sin() * pitch.cos(), roll.cos() * pitch.cos());
        let (r, p) = roll_pitch_from_accel(&a, G).unwrap();
        assert_abs_diff_eq!(r, roll, epsilon = 1e-12);
        assert_abs_diff_eq!(p, pitch, epsilon = 1e-12);
    }

    #[test]
    fn low_gravity_is_rejected() {
        assert!(matches!(
            roll_pitch_from_accel(&Vec3::new(0.0, 0.0, 0.4 * G), G),
            Err(Error::LowGravity { .. })
        ));
    }

    #[test]
    fn attitude_errors() {
        assert_eq!(attitude_error_meas(0.2, 0.1, 0.2, 0.1), (0.0, 0.0));
        let (dr, _) = attitude_error_meas(0.1, 0.0, 0.05, 0.0);
        assert_abs_diff_eq!(dr, 0.05, epsilon = 1e-15);
        let (dr, _) = attitude_error_meas(3.13, 0.0, -3.13, 0.0);
        assert_abs_diff_eq!(dr, 6.26 - 2.0 * PI, epsilon = 1e-12);
        assert!((dr + 0.0232).abs() < 1e-4);
    }

    #[test]
    fn compass_north_and_declination() {
        let b = Vec3::new(0.5, 0.0, -0.8);
        assert_eq!(compass_heading(&b, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(compass_heading(&b, 0.0, 0.0, 0.1).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(
            compass_heading(&Vec3::new(0.0, 0.0, 1.0), 0.0, 0.0, 0.0),
            Err(Error::UndefinedHeading)
        );
    }

    #[test]
    fn compass_recovers_heading_through_forward_rotation() {
        let field = Vec3::new(0.45, 0.1, -0.85);
        let field_heading = (field.y).atan2(field.x);
        let truth = EulerAngles::new(0.2, -0.5, 2.0);
        let b = rotmat_from_euler(&truth).transpose() * field;
        let h = compass_heading(&b, truth.roll, truth.pitch, 0.0).unwrap();
        assert_abs_diff_eq!(wrap_angle(h - field_heading), truth.heading, epsilon = 1e-9);
    }

    #[test]
    fn compass_error_wraps() {
        assert_eq!(compass_error_meas(0.3, 0.3, 0.01).innovation, 0.0);
        assert_abs_diff_eq!(compass_error_meas(0.2, 0.1, 0.01).innovation, 0.1, epsilon = 1e-15);
        let m = compass_error_meas(-3.1, 3.1, 0.01);
        assert_abs_diff_eq!(m.innovation, 2.0 * PI - 6.2, epsilon = 1e-12);
        assert!((m.innovation - 0.0832).abs() < 1e-4);
        assert_eq!(m.source, HeadingSource::Compass);
    }

    const HDR_VAR: f64 = 1.2184696791468343e-3;

    fn hdr_with(history: &[f64]) -> HdrState {
        let mut s = HdrState::new(
            &HdrConfig {
                window: history.len(),
                ..HdrConfig::default()
            },
            HDR_VAR,
        );
        history.iter().for_each(|h| s.push(*h));
        s
    }

    #[test]
    fn hdr_fills_before_emitting() {
        let mut s = HdrState::new(&HdrConfig::default(), HDR_VAR);
        for _ in 0..4 {
            assert!(s.update(0.0).is_none());
        }
        let m = s.update(0.0);
        assert_eq!(m.source, HeadingSource::Hdr);
        assert_eq!(m.innovation, 0.0);
        assert_eq!(s.history().count(), 4);
    }

    #[test]
    fn hdr_straight_and_curve_branches() {
        let s = hdr_with(&[0.0; 4]);
        let straight = s.evaluate(0.01);
        assert_abs_diff_eq!(straight.innovation, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(straight.variance, 2f64.to_radians().powi(2), epsilon = 1e-18);
        let curve = s.evaluate(0.5);
        assert_eq!((curve.innovation, curve.source), (0.0, HeadingSource::Hdr));

        let skip = HdrState {
            curve: CurveBranch::Skip,
            ..s
        };
        assert!(skip.evaluate(0.5).is_none());
    }

    #[test]
    fn hdr_mean_is_circular() {
        let s = hdr_with(&[PI - 0.01, -PI + 0.01, PI - 0.01, -PI + 0.01]);
        let m = s.evaluate(PI);
        assert_abs_diff_eq!(m.innovation, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.evaluate(-PI + 0.02).innovation, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn gate_is_a_multiplexer() {
        let c = compass_error_meas(0.2, 0.1, 0.01);
        let h = hdr_with(&[0.0; 4]).evaluate(0.01);
        assert_eq!(select_heading(true, c, h), c);
        assert_eq!(select_heading(false, c, h), h);
        assert!(select_heading(false, c, HeadingMeasurement::none()).is_none());
    }
}
