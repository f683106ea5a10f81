//! Windowed hypothesis tests.
//!
//! * SHOE stance detector: accelerometer deviation from gravity plus gyro
//!   energy, normalized by the sensor noise variances.
//! * Quasi-static magnetic field detector (QMD): a GLRT on the INS-vs-compass
//!   heading difference and the deviation of the field magnitude from its
//!   reference value. Pure field is accepted when the statistic stays below
//!   the threshold.
//! * Classical magnitude-stability QMD, kept as a baseline. It only looks at
//!   the variance of `|B|` and cannot see a constant (hard-iron) offset.
//!
//! All statistics have a batch form (a function of a window slice) and a
//! sliding accumulator that produces the same value per sample.

use std::collections::VecDeque;

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ins::ImuSample;
use crate::math::{wrap_angle, Vec3};

/// Pushes between exact recomputations of a sliding accumulator.
const REFRESH_EVERY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// SHOE window length, samples.
    pub shoe_window: usize,
    /// Accelerometer noise standard deviation, m/s^2.
    pub sigma_acc: f64,
    /// Gyroscope noise standard deviation, rad/s.
    #[serde(rename = "sigma_gyro_dps", with = "crate::config::degrees")]
    pub sigma_gyro: f64,
    pub shoe_threshold: f64,
    /// QMD window length, samples.
    pub qmd_window: usize,
    /// Heading-difference noise standard deviation, rad.
    #[serde(rename = "sigma_heading_deg", with = "crate::config::degrees")]
    pub sigma_heading: f64,
    /// Field-magnitude noise standard deviation, normalized units.
    pub sigma_field: f64,
    pub qmd_threshold: f64,
    /// Reference magnitude of the local field, normalized units.
    pub field_ref: f64,
    /// Variance threshold of the classical detector, normalized units^2.
    pub classical_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let qmd_window = 50;
        let sigma_field = 0.05;
        Self {
            shoe_window: 5,
            sigma_acc: 0.02,
            sigma_gyro: 0.1f64.to_radians(),
            shoe_threshold: 25.0,
            qmd_window,
            sigma_heading: 5f64.to_radians(),
            sigma_field,
            qmd_threshold: qmd_threshold_for(qmd_window, 0.01),
            field_ref: 1.0,
            classical_threshold: classical_threshold_for(qmd_window, sigma_field, 0.01),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_acc", self.sigma_acc),
            ("sigma_gyro_dps", self.sigma_gyro.to_degrees()),
            ("shoe_threshold", self.shoe_threshold),
            ("sigma_heading_deg", self.sigma_heading.to_degrees()),
            ("sigma_field", self.sigma_field),
            ("qmd_threshold", self.qmd_threshold),
            ("field_ref", self.field_ref),
            ("classical_threshold", self.classical_threshold),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("detector.{name} must be > 0, got {value}")));
            }
        }
        if self.shoe_window == 0 || self.qmd_window == 0 {
            return Err(Error::Config("detector windows must hold at least one sample".into()));
        }
        Ok(())
    }
}

/// QMD threshold with false-alarm probability `alpha` on pure field: under
/// the pure-field hypothesis `N * T` is chi-square with `2N` degrees of
/// freedom.
pub fn qmd_threshold_for(window: usize, alpha: f64) -> f64 {
    let dof = 2.0 * window as f64;
    let chi = ChiSquared::new(dof).expect("positive dof");
    chi.inverse_cdf(1.0 - alpha) / window as f64
}

/// Classical-detector variance threshold with false-alarm probability
/// `alpha` for Gaussian magnitude noise of standard deviation `sigma`.
pub fn classical_threshold_for(window: usize, sigma: f64, alpha: f64) -> f64 {
    let dof = (window.max(2) - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive dof");
    sigma * sigma * chi.inverse_cdf(1.0 - alpha) / dof
}

/// SHOE statistic of one window of raw samples.
pub fn shoe_statistic(window: &[ImuSample], cfg: &DetectorConfig, gravity: f64) -> Result<f64> {
    if window.len() != cfg.shoe_window {
        return Err(Error::WindowLength {
            expected: cfg.shoe_window,
            got: window.len(),
        });
    }
    let n = window.len() as f64;
    let mean = window.iter().map(|s| s.acc).sum::<Vec3>() / n;
    let norm = mean.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateWindow);
    }
    let up = mean * (gravity / norm);
    let var_a = cfg.sigma_acc * cfg.sigma_acc;
    let var_g = cfg.sigma_gyro * cfg.sigma_gyro;
    let sum: f64 = window
        .iter()
        .map(|s| (s.acc - up).norm_squared() / var_a + s.gyro.norm_squared() / var_g)
        .sum();
    Ok(sum / n)
}

pub fn is_stance(statistic: f64, cfg: &DetectorConfig) -> bool {
    statistic < cfg.shoe_threshold
}

/// One QMD observation: heading disagreement and field-magnitude deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QmdObservation {
    /// `|psi_ins - psi_compass|`, wrapped to `[0, pi]`, rad.
    pub heading_diff: f64,
    /// `|B| - B_ref`, normalized units.
    pub field_dev: f64,
}

impl QmdObservation {
    pub fn new(ins_heading: f64, compass_heading: f64, field_norm: f64, field_ref: f64) -> Self {
        Self {
            heading_diff: wrap_angle(ins_heading - compass_heading).abs(),
            field_dev: field_norm - field_ref,
        }
    }

    fn energy(&self, cfg: &DetectorConfig) -> f64 {
        self.heading_diff.powi(2) / cfg.sigma_heading.powi(2)
            + self.field_dev.powi(2) / cfg.sigma_field.powi(2)
    }
}

/// GLRT statistic `T = -(2/N) ln L_G` of a QMD window.
pub fn qmd_statistic(window: &[QmdObservation], cfg: &DetectorConfig) -> Result<f64> {
    if window.len() != cfg.qmd_window {
        return Err(Error::WindowLength {
            expected: cfg.qmd_window,
            got: window.len(),
        });
    }
    Ok(window.iter().map(|o| o.energy(cfg)).sum::<f64>() / window.len() as f64)
}

/// `true` for pure magnetic field, `false` for a disturbance.
pub fn qmd_decide(statistic: f64, cfg: &DetectorConfig) -> bool {
    statistic < cfg.qmd_threshold
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Magnitude-stability baseline. `true` when the sample variance of the
/// field magnitudes stays below the threshold.
pub fn classical_qmd(magnitudes: &[f64], cfg: &DetectorConfig) -> Result<bool> {
    if magnitudes.len() != cfg.qmd_window {
        return Err(Error::WindowLength {
            expected: cfg.qmd_window,
            got: magnitudes.len(),
        });
    }
    Ok(sample_variance(magnitudes) < cfg.classical_threshold)
}

/// Offline stance labelling: every window whose SHOE statistic passes marks
/// its samples as stance, plus the sample just before it. An IMU sample
/// describes the interval ending at its timestamp, so a still window over
/// samples `a..=b` means the foot rested from `t[a-1]` to `t[b]`.
pub fn label_stance(samples: &[ImuSample], cfg: &DetectorConfig, gravity: f64) -> Vec<bool> {
    let w = cfg.shoe_window;
    let mut labels = vec![false; samples.len()];
    if samples.len() < w {
        return labels;
    }
    for start in 0..=samples.len() - w {
        let window = &samples[start..start + w];
        if let Ok(t) = shoe_statistic(window, cfg, gravity) {
            if is_stance(t, cfg) {
                labels[start.saturating_sub(1)..start + w]
                    .iter_mut()
                    .for_each(|l| *l = true);
            }
        }
    }
    labels
}

/// Running mean and scatter `sum |x - mean|^2` over a changing set.
#[derive(Debug, Clone, Copy)]
struct Moments<const D: usize> {
    n: usize,
    mean: SVector<f64, D>,
    scatter: f64,
}

impl<const D: usize> Moments<D> {
    fn new() -> Self {
        Self {
            n: 0,
            mean: SVector::zeros(),
            scatter: 0.0,
        }
    }

    fn add(&mut self, x: &SVector<f64, D>) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.scatter += d.dot(&(x - self.mean));
    }

    fn remove(&mut self, x: &SVector<f64, D>) {
        if self.n <= 1 {
            *self = Self::new();
            return;
        }
        let d = x - self.mean;
        self.mean -= d / (self.n - 1) as f64;
        self.scatter = (self.scatter - d.dot(&(x - self.mean))).max(0.0);
        self.n -= 1;
    }

    fn rebuild<'a>(items: impl Iterator<Item = &'a SVector<f64, D>>) -> Self {
        let mut m = Self::new();
        items.for_each(|x| m.add(x));
        m
    }

    fn sum_squares(&self) -> f64 {
        self.scatter + self.n as f64 * self.mean.norm_squared()
    }
}

/// Sliding SHOE detector over the trailing `shoe_window` samples.
#[derive(Debug, Clone)]
pub struct ShoeDetector {
    cfg: DetectorConfig,
    gravity: f64,
    buf: VecDeque<(Vec3, Vec3)>,
    acc: Moments<3>,
    gyro: Moments<3>,
    pushes: usize,
}

impl ShoeDetector {
    pub fn new(cfg: &DetectorConfig, gravity: f64) -> Self {
        Self {
            cfg: cfg.clone(),
            gravity,
            buf: VecDeque::with_capacity(cfg.shoe_window + 1),
            acc: Moments::new(),
            gyro: Moments::new(),
            pushes: 0,
        }
    }

    /// Adds a sample; returns the statistic once the window is full.
    pub fn push(&mut self, acc: Vec3, gyro: Vec3) -> Option<f64> {
        self.buf.push_back((acc, gyro));
        self.acc.add(&acc);
        self.gyro.add(&gyro);
        if self.buf.len() > self.cfg.shoe_window {
            let (a, w) = self.buf.pop_front().expect("non-empty");
            self.acc.remove(&a);
            self.gyro.remove(&w);
        }
        self.pushes += 1;
        if self.pushes.is_multiple_of(REFRESH_EVERY) {
            self.acc = Moments::rebuild(self.buf.iter().map(|(a, _)| a));
            self.gyro = Moments::rebuild(self.buf.iter().map(|(_, w)| w));
        }
        if self.buf.len() < self.cfg.shoe_window {
            return None;
        }
        let n = self.buf.len() as f64;
        let norm = self.acc.mean.norm();
        if norm == 0.0 {
            return None;
        }
        // sum |a_k - g u|^2 = scatter + N (|mean| - g)^2
        let acc_term = (self.acc.scatter + n * (norm - self.gravity).powi(2)) / self.cfg.sigma_acc.powi(2);
        let gyro_term = self.gyro.sum_squares() / self.cfg.sigma_gyro.powi(2);
        Some((acc_term + gyro_term) / n)
    }
}

/// Sliding QMD statistic over the trailing `qmd_window` observations.
#[derive(Debug, Clone)]
pub struct QmdDetector {
    cfg: DetectorConfig,
    buf: VecDeque<f64>,
    sum: f64,
    pushes: usize,
}

impl QmdDetector {
    pub fn new(cfg: &DetectorConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            buf: VecDeque::with_capacity(cfg.qmd_window + 1),
            sum: 0.0,
            pushes: 0,
        }
    }

    pub fn push(&mut self, obs: QmdObservation) -> Option<f64> {
        let e = obs.energy(&self.cfg);
        self.buf.push_back(e);
        self.sum += e;
        if self.buf.len() > self.cfg.qmd_window {
            self.sum -= self.buf.pop_front().expect("non-empty");
        }
        self.pushes += 1;
        if self.pushes.is_multiple_of(REFRESH_EVERY) {
            self.sum = self.buf.iter().sum();
        }
        (self.buf.len() == self.cfg.qmd_window).then(|| self.sum.max(0.0) / self.buf.len() as f64)
    }
}

/// Sliding sample variance of the field magnitude.
#[derive(Debug, Clone)]
pub struct ClassicalQmdDetector {
    window: usize,
    buf: VecDeque<f64>,
    moments: Moments<1>,
    pushes: usize,
}

impl ClassicalQmdDetector {
    pub fn new(cfg: &DetectorConfig) -> Self {
        Self {
            window: cfg.qmd_window,
            buf: VecDeque::with_capacity(cfg.qmd_window + 1),
            moments: Moments::new(),
            pushes: 0,
        }
    }

    /// Adds a magnitude; returns the window's sample variance once full.
    pub fn push(&mut self, magnitude: f64) -> Option<f64> {
        let x = SVector::<f64, 1>::new(magnitude);
        self.buf.push_back(magnitude);
        self.moments.add(&x);
        if self.buf.len() > self.window {
            let old = self.buf.pop_front().expect("non-empty");
            self.moments.remove(&SVector::<f64, 1>::new(old));
        }
        self.pushes += 1;
        if self.pushes.is_multiple_of(REFRESH_EVERY) {
            let items: Vec<_> = self.buf.iter().map(|&m| SVector::<f64, 1>::new(m)).collect();
            self.moments = Moments::rebuild(items.iter());
        }
        if self.buf.len() < self.window {
            return None;
        }
        Some(if self.window < 2 {
            0.0
        } else {
            self.moments.scatter / (self.window - 1) as f64
        })
    }
}
