//! Estimator variants driven one sample at a time.
//!
//! Every sample is mechanized and fed to the detectors. During stance the
//! filter receives accelerometer roll/pitch, a zero-velocity update and, per
//! variant, a heading measurement:
//!
//! | variant    | heading row                                          |
//! |------------|------------------------------------------------------|
//! | `iez`      | none                                                 |
//! | `iez-cqmd` | compass while the magnitude variance is small        |
//! | `aiez`     | compass on pure field, HDR otherwise                 |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::{
    is_stance, qmd_decide, ClassicalQmdDetector, DetectorConfig, QmdDetector, QmdObservation,
    ShoeDetector,
};
use crate::ekf::{self, Covariance15, NoiseConfig, ATT};
use crate::error::{Error, Result};
use crate::heading::{
    attitude_error_meas, compass_error_meas, compass_heading, roll_pitch_from_accel,
    select_heading, HdrConfig, HdrHistoryMode, HdrState, HeadingMeasurement, HeadingSource,
};
use crate::ins::{compensate, propagate, ImuSample, NavState, STANDARD_GRAVITY};
use crate::math::{EulerAngles, Quaternion, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "iez")]
    Iez,
    #[serde(rename = "iez-cqmd")]
    IezClassicalQmd,
    #[serde(rename = "aiez")]
    Aiez,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Iez, Variant::IezClassicalQmd, Variant::Aiez];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Iez => "iez",
            Variant::IezClassicalQmd => "iez-cqmd",
            Variant::Aiez => "aiez",
        }
    }

    pub fn uses_magnetometer(&self) -> bool {
        !matches!(self, Variant::Iez)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected iez, iez-cqmd or aiez)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantConfig {
    pub variant: Variant,
    pub detector: DetectorConfig,
    pub noise: NoiseConfig,
    pub hdr: HdrConfig,
    /// Magnetic declination, degrees.
    pub declination_deg: f64,
    /// m/s^2.
    pub gravity: f64,
    /// Heading used when the variant has no magnetometer, degrees.
    pub initial_heading_deg: f64,
    /// Leading samples averaged for the initial attitude. The walker must be
    /// standing still during them.
    pub align_samples: usize,
    /// Keep the heading column of the velocity/attitude coupling. With noisy
    /// specific force this coupling lets zero-velocity updates shrink the
    /// heading variance, although heading is unobservable without a heading
    /// measurement.
    pub yaw_velocity_coupling: bool,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Aiez,
            detector: DetectorConfig::default(),
            noise: NoiseConfig::default(),
            hdr: HdrConfig::default(),
            declination_deg: 0.0,
            gravity: STANDARD_GRAVITY,
            initial_heading_deg: 0.0,
            align_samples: 50,
            yaw_velocity_coupling: false,
        }
    }
}

impl VariantConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.noise.validate()?;
        self.hdr.validate()?;
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(Error::Config(format!("gravity must be > 0, got {}", self.gravity)));
        }
        if !(self.declination_deg.is_finite() && self.initial_heading_deg.is_finite()) {
            return Err(Error::Config("declination and initial heading must be finite".into()));
        }
        if self.align_samples == 0 {
            return Err(Error::Config("align_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Detector outputs for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorLogRecord {
    pub shoe_statistic: Option<f64>,
    pub qmd_statistic: Option<f64>,
    /// Proposed detector decision, `true` for pure field.
    pub qmd_flag: Option<bool>,
    pub classical_variance: Option<f64>,
    /// Classical detector decision, `true` for pure field.
    pub classical_flag: Option<bool>,
    /// INS heading before any update at this sample, rad.
    pub ins_heading: f64,
    /// Compass heading from the INS roll/pitch, rad.
    pub compass_heading: Option<f64>,
}

/// Filter output after one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    pub euler: EulerAngles,
    pub stance: bool,
    pub heading_source: HeadingSource,
    /// Heading-error variance `P[dphi_z]`, rad^2.
    pub heading_variance: f64,
    pub detectors: DetectorLogRecord,
}

/// One estimator instance.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: VariantConfig,
    state: NavState,
    p: Covariance15,
    shoe: ShoeDetector,
    qmd: QmdDetector,
    classical: ClassicalQmdDetector,
    hdr: HdrState,
    declination: f64,
    last_t: Option<f64>,
    index: usize,
    in_stance: bool,
    // sin/cos sums of the filtered heading over the current stance
    stance_heading: (f64, f64),
}

impl Pipeline {
    /// Builds a pipeline whose initial attitude comes from `align`, a run of
    /// stationary samples (normally the head of the stream).
    pub fn new(cfg: &VariantConfig, align: &[ImuSample]) -> Result<Self> {
        cfg.validate()?;
        if align.is_empty() {
            return Err(Error::EmptyStream);
        }
        let declination = cfg.declination_deg.to_radians();
        let n = align.len() as f64;
        let acc = align.iter().map(|s| s.acc).sum::<Vec3>() / n;
        let (roll, pitch) = roll_pitch_from_accel(&acc, cfg.gravity)?;
        let heading = if cfg.variant.uses_magnetometer() {
            let mut mag = Vec3::zeros();
            for (index, s) in align.iter().enumerate() {
                mag += s.mag.ok_or_else(|| missing_mag(cfg.variant, index))?;
            }
            compass_heading(&(mag / n), roll, pitch, declination)?
        } else {
            cfg.initial_heading_deg.to_radians()
        };
        let state = NavState {
            t: align[0].t,
            q: Quaternion::from_euler(&EulerAngles::new(roll, pitch, heading)),
            ..NavState::default()
        };
        Ok(Self {
            cfg: cfg.clone(),
            state,
            p: cfg.noise.initial_covariance(),
            shoe: ShoeDetector::new(&cfg.detector, cfg.gravity),
            qmd: QmdDetector::new(&cfg.detector),
            classical: ClassicalQmdDetector::new(&cfg.detector),
            hdr: HdrState::new(&cfg.hdr, cfg.noise.hdr_variance()),
            declination,
            last_t: None,
            index: 0,
            in_stance: false,
            stance_heading: (0.0, 0.0),
        })
    }

    pub fn state(&self) -> &NavState {
        &self.state
    }

    pub fn covariance(&self) -> &Covariance15 {
        &self.p
    }

    pub fn config(&self) -> &VariantConfig {
        &self.cfg
    }

    /// Processes one sample and returns the post-update state.
    pub fn step(&mut self, sample: &ImuSample) -> Result<TrajectoryPoint> {
        let index = self.index;
        if let Some(prev) = self.last_t {
            if sample.t.is_nan() || sample.t <= prev {
                return Err(Error::NonMonotonicTime {
                    index,
                    prev,
                    next: sample.t,
                });
            }
        }
        let (acc, gyro) = compensate(sample, &self.state);
        let mut log = DetectorLogRecord {
            shoe_statistic: self.shoe.push(sample.acc, sample.gyro),
            ..DetectorLogRecord::default()
        };
        let stance = log
            .shoe_statistic
            .is_some_and(|t| is_stance(t, &self.cfg.detector));
        if let Some(prev) = self.last_t {
            let dt = sample.t - prev;
            self.state = propagate(&self.state, &acc, &gyro, dt, self.cfg.gravity);
            let c = self.state.q.to_rotmat();
            let mut phi = ekf::build_phi(&c, &(c * acc), dt);
            if !self.cfg.yaw_velocity_coupling {
                ekf::decouple_yaw_from_velocity(&mut phi);
            }
            self.p = ekf::predict(&self.p, &phi, &self.cfg.noise.process_noise(dt));
        } else {
            self.state.t = sample.t;
        }
        self.last_t = Some(sample.t);
        self.index += 1;

        let euler = self.state.q.to_euler()?;
        log.ins_heading = euler.heading;

        let mag = if self.cfg.variant.uses_magnetometer() {
            let mag = sample.mag.ok_or_else(|| missing_mag(self.cfg.variant, index))?;
            let det = &self.cfg.detector;
            let norm = mag.norm();
            let compass = compass_heading(&mag, euler.roll, euler.pitch, self.declination).ok();
            log.compass_heading = compass;
            if let Some(c) = compass {
                log.qmd_statistic = self
                    .qmd
                    .push(QmdObservation::new(euler.heading, c, norm, det.field_ref));
                log.qmd_flag = log.qmd_statistic.map(|t| qmd_decide(t, det));
            }
            log.classical_variance = self.classical.push(norm);
            log.classical_flag = log.classical_variance.map(|v| v < det.classical_threshold);
            Some(mag)
        } else {
            None
        };

        let mut source = HeadingSource::None;
        if stance {
            source = self.stance_update(&acc, mag.as_ref(), &euler, &log)?;
            let h = self.state.q.to_euler()?.heading;
            match self.cfg.hdr.history {
                HdrHistoryMode::PerStance => {
                    self.stance_heading.0 += h.sin();
                    self.stance_heading.1 += h.cos();
                }
                HdrHistoryMode::PerSample => self.hdr.push(h),
            }
        } else if self.in_stance && self.cfg.hdr.history == HdrHistoryMode::PerStance {
            let (s, c) = std::mem::take(&mut self.stance_heading);
            self.hdr.push(s.atan2(c));
        }
        self.in_stance = stance;

        Ok(TrajectoryPoint {
            t: self.state.t,
            r: self.state.r,
            v: self.state.v,
            euler: self.state.q.to_euler()?,
            stance,
            heading_source: source,
            heading_variance: self.p[(ATT + 2, ATT + 2)],
            detectors: log,
        })
    }

    fn stance_update(
        &mut self,
        acc: &Vec3,
        mag: Option<&Vec3>,
        euler: &EulerAngles,
        log: &DetectorLogRecord,
    ) -> Result<HeadingSource> {
        let cfg = &self.cfg;
        let accel_tilt = roll_pitch_from_accel(acc, cfg.gravity).ok();
        let tilt = accel_tilt.map(|(r, p)| attitude_error_meas(euler.roll, euler.pitch, r, p));
        let compass = || -> HeadingMeasurement {
            match (mag, accel_tilt) {
                (Some(m), Some((r, p))) => compass_heading(m, r, p, self.declination)
                    .map(|c| compass_error_meas(euler.heading, c, cfg.noise.compass_variance()))
                    .unwrap_or(HeadingMeasurement::none()),
                _ => HeadingMeasurement::none(),
            }
        };
        let heading = match cfg.variant {
            Variant::Iez => HeadingMeasurement::none(),
            Variant::IezClassicalQmd if log.classical_flag == Some(true) => compass(),
            Variant::IezClassicalQmd => HeadingMeasurement::none(),
            Variant::Aiez => {
                let pure = log.qmd_flag == Some(true);
                let c = if pure { compass() } else { HeadingMeasurement::none() };
                select_heading(pure, c, self.hdr.evaluate(euler.heading))
            }
        };
        let m = ekf::build_measurement(tilt, &heading, Some(self.state.v), euler, &cfg.noise)?;
        let (dx, p) = ekf::update(&self.p, &m)?;
        self.p = p;
        self.state = ekf::inject_errors(&self.state, &dx);
        Ok(heading.source)
    }
}

fn missing_mag(variant: Variant, index: usize) -> Error {
    Error::MissingMagnetometer {
        variant: variant.to_string(),
        index,
    }
}

/// Runs one variant over a whole stream.
pub fn run(stream: &[ImuSample], cfg: &VariantConfig) -> Result<Vec<TrajectoryPoint>> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let align = &stream[..cfg.align_samples.min(stream.len())];
    let mut pipeline = Pipeline::new(cfg, align)?;
    stream.iter().map(|s| pipeline.step(s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Horizontal distance between the final position and the origin, m.
    pub final_position_error: f64,
    /// Vertical offset of the final position, m.
    pub vertical_error: f64,
    pub total_distance: f64,
    pub ttd_error_pct: f64,
}

/// Loop-closure metrics of a trajectory over a route of `total_distance` m.
pub fn metrics(traj: &[TrajectoryPoint], total_distance: f64, origin: &Vec3) -> Result<RunMetrics> {
    if !(total_distance.is_finite() && total_distance > 0.0) {
        return Err(Error::Config(format!("total distance must be > 0, got {total_distance}")));
    }
    let last = traj.last().ok_or(Error::EmptyStream)?;
    Ok(metrics_from_error(last.r - origin, total_distance))
}

pub fn metrics_from_error(offset: Vec3, total_distance: f64) -> RunMetrics {
    let final_position_error = offset.xy().norm();
    RunMetrics {
        final_position_error,
        vertical_error: offset.z,
        total_distance,
        ttd_error_pct: 100.0 * final_position_error / total_distance,
    }
}
