//! Synthetic walks: ground-truth foot motion, ideal IMU signals and sensor
//! corruption.
//!
//! A walk is a sequence of footfalls. The foot rests at each footfall for the
//! stance part of a step and moves to the next one during swing along a
//! minimum-jerk horizontal profile with a vertical bump and a pitch wobble, so
//! velocity and acceleration vanish at both ends of every swing.
//!
//! Positions use the navigation frame of [`crate::math`]: x North, y West,
//! z Up. Headings are clockwise from North and a positive turn is a right
//! turn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ins::{ImuSample, STANDARD_GRAVITY};
use crate::math::{wrap_angle, EulerAngles, Quaternion, Vec3};

/// Largest heading change applied within a single stride, degrees.
const MAX_TURN_PER_STRIDE_DEG: f64 = 60.0;
/// Peak of `s^3 (1 - s)^3 (1 - 2 s)` on `[0, 1]`, reached where
/// `s (1 - s) = 3/14`.
const PITCH_SHAPE_PEAK: f64 = 0.003719038181942104;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSpec {
    /// Stride length, m.
    pub step_length: f64,
    /// Nominal stride duration, s.
    pub step_duration: f64,
    /// Fraction of each stride spent in stance.
    pub stance_fraction: f64,
    /// Peak foot clearance during swing, m.
    pub swing_peak_height: f64,
    /// Peak foot pitch during swing, degrees.
    pub swing_pitch_deg: f64,
    /// Relative stride-duration jitter, uniform in `[-j, j]`.
    pub cadence_jitter: f64,
    /// Standing time before the first and after the last stride, s.
    pub standing_time: f64,
    pub seed: u64,
}

impl Default for GaitSpec {
    fn default() -> Self {
        Self {
            step_length: 1.2,
            step_duration: 1.1,
            stance_fraction: 0.55,
            swing_peak_height: 0.12,
            swing_pitch_deg: 25.0,
            cadence_jitter: 0.05,
            standing_time: 2.0,
            seed: 0,
        }
    }
}

impl GaitSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_length", self.step_length),
            ("step_duration", self.step_duration),
            ("swing_peak_height", self.swing_peak_height),
            ("standing_time", self.standing_time),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("gait.{name} must be > 0, got {v}")));
            }
        }
        if !(self.stance_fraction > 0.2 && self.stance_fraction < 0.8) {
            return Err(Error::Config(format!(
                "gait.stance_fraction must lie in (0.2, 0.8), got {}",
                self.stance_fraction
            )));
        }
        if !(0.0..0.5).contains(&self.cadence_jitter) {
            return Err(Error::Config("gait.cadence_jitter must lie in [0, 0.5)".into()));
        }
        if !(self.swing_pitch_deg.is_finite() && self.swing_pitch_deg.abs() < 80.0) {
            return Err(Error::Config("gait.swing_pitch_deg must lie in (-80, 80)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    /// Straight walk, m.
    Straight(f64),
    /// Heading change, degrees, positive to the right.
    Turn(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub segments: Vec<Segment>,
    /// Snap the final footfall onto the start point.
    #[serde(default)]
    pub closed: bool,
    #[serde(default)]
    pub initial_heading_deg: f64,
}

impl PathSpec {
    pub fn straight(length: f64) -> Self {
        Self {
            segments: vec![Segment::Straight(length)],
            closed: false,
            initial_heading_deg: 0.0,
        }
    }

    /// Closed rectangle walked `laps` times, turning right at every corner.
    pub fn rectangle(length: f64, width: f64, laps: usize) -> Self {
        let mut segments = Vec::new();
        for _ in 0..laps {
            for side in [length, width, length, width] {
                segments.push(Segment::Straight(side));
                segments.push(Segment::Turn(90.0));
            }
        }
        Self {
            segments,
            closed: true,
            initial_heading_deg: 0.0,
        }
    }

    /// Sum of straight segment lengths, m.
    pub fn length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Straight(l) => *l,
                Segment::Turn(_) => 0.0,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            let ok = match s {
                Segment::Straight(l) => l.is_finite() && *l >= 0.0,
                Segment::Turn(a) => a.is_finite(),
            };
            if !ok {
                return Err(Error::Config(format!("invalid path segment {s:?}")));
            }
        }
        if !(self.length().is_finite() && self.length() > 0.0) {
            return Err(Error::Config("path has zero total length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorErrorSpec {
    /// rad/s.
    #[serde(rename = "gyro_bias_dps", with = "crate::config::degrees3")]
    pub gyro_bias: [f64; 3],
    /// m/s^2.
    pub acc_bias: [f64; 3],
    /// rad/s.
    #[serde(rename = "gyro_noise_dps", with = "crate::config::degrees")]
    pub gyro_noise: f64,
    /// m/s^2.
    pub acc_noise: f64,
    /// Normalized field units.
    pub mag_noise: f64,
    pub seed: u64,
}

impl Default for SensorErrorSpec {
    fn default() -> Self {
        Self {
            gyro_bias: [0.0; 3],
            acc_bias: [0.0; 3],
            gyro_noise: 0.0,
            acc_noise: 0.0,
            mag_noise: 0.0,
            seed: 0,
        }
    }
}

impl SensorErrorSpec {
    /// Datasheet-scale MEMS errors with the given seed.
    pub fn mems(seed: u64) -> Self {
        Self {
            gyro_bias: [2e-4, -1.5e-4, 3e-4],
            acc_bias: [0.01, -0.008, 0.012],
            gyro_noise: 0.1f64.to_radians(),
            acc_noise: 0.02,
            mag_noise: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .gyro_bias
            .iter()
            .chain(&self.acc_bias)
            .all(|v| v.is_finite());
        let sigmas = [self.gyro_noise, self.acc_noise, self.mag_noise];
        if !finite || sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("sensor biases must be finite and noise sigmas >= 0".into()));
        }
        Ok(())
    }
}

/// One disturbance zone along the walked path. Exactly one of
/// `hard_offset` and `gradient` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    /// Path distance where the zone begins, m.
    pub start_m: f64,
    /// Path distance where the zone ends, m.
    pub end_m: f64,
    /// Constant field offset, normalized units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_offset: Option<[f64; 3]>,
    /// Offset growth per metre of path from `start_m`, normalized units/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<[f64; 3]>,
}

impl Disturbance {
    pub fn hard(start_m: f64, end_m: f64, offset: [f64; 3]) -> Self {
        Self {
            start_m,
            end_m,
            hard_offset: Some(offset),
            gradient: None,
        }
    }

    pub fn contains(&self, distance: f64) -> bool {
        distance >= self.start_m && distance < self.end_m
    }

    /// Offset at path distance `distance`.
    pub fn offset(&self, distance: f64) -> Vec3 {
        if !self.contains(distance) {
            return Vec3::zeros();
        }
        match (self.hard_offset, self.gradient) {
            (Some(o), _) => Vec3::from(o),
            (None, Some(g)) => Vec3::from(g) * (distance - self.start_m),
            (None, None) => Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagEnvSpec {
    /// Undisturbed field in the navigation frame, normalized units.
    pub field: [f64; 3],
    pub disturbances: Vec<Disturbance>,
}

impl Default for MagEnvSpec {
    fn default() -> Self {
        let dip = 60f64.to_radians();
        Self {
            field: [dip.cos(), 0.0, -dip.sin()],
            disturbances: Vec::new(),
        }
    }
}

impl MagEnvSpec {
    pub fn field(&self) -> Vec3 {
        Vec3::from(self.field)
    }

    /// Field at path distance `distance`, navigation frame.
    pub fn field_at(&self, distance: f64) -> Vec3 {
        self.disturbances
            .iter()
            .fold(self.field(), |b, d| b + d.offset(distance))
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.field();
        if !b.iter().all(|v| v.is_finite()) || b.norm() == 0.0 {
            return Err(Error::Config("magnetic.field must be finite and nonzero".into()));
        }
        if b.xy().norm() < 1e-6 * b.norm() {
            return Err(Error::Config("magnetic.field must not be vertical".into()));
        }
        for d in &self.disturbances {
            if !(d.start_m.is_finite() && d.end_m.is_finite() && d.start_m < d.end_m) {
                return Err(Error::Config(format!(
                    "disturbance interval [{}, {}) is empty",
                    d.start_m, d.end_m
                )));
            }
            if d.hard_offset.is_some() == d.gradient.is_some() {
                return Err(Error::Config(
                    "each disturbance needs exactly one of hard_offset or gradient".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Ground truth at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    pub euler: EulerAngles,
    pub stance: bool,
    /// Path distance covered so far, m.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Footfall {
    r: Vec3,
    /// Unwrapped heading, rad.
    heading: f64,
    distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Stance(usize),
    /// Swing from footfall `i` to `i + 1`.
    Swing(usize),
}

/// Continuous-time foot trajectory.
#[derive(Debug, Clone)]
pub struct Walk {
    footfalls: Vec<Footfall>,
    /// `(start time, phase)`, sorted by time.
    phases: Vec<(f64, Phase)>,
    end: f64,
    height: f64,
    pitch_amplitude: f64,
}

fn footfalls(path: &PathSpec, gait: &GaitSpec) -> Result<Vec<Footfall>> {
    let mut heading = path.initial_heading_deg.to_radians();
    let mut falls = vec![Footfall {
        r: Vec3::zeros(),
        heading,
        distance: 0.0,
    }];
    let mut pending_turn = 0.0;
    let turn_strides = |turn: f64| {
        let k = (turn.abs() / MAX_TURN_PER_STRIDE_DEG.to_radians()).ceil() as usize;
        k.clamp(1, 3)
    };
    for seg in &path.segments {
        match *seg {
            Segment::Turn(angle) => pending_turn += angle.to_radians(),
            Segment::Straight(length) if length > 0.0 => {
                let last = *falls.last().unwrap();
                let strides = ((length / gait.step_length) - 1e-9).ceil().max(1.0) as usize;
                let k = turn_strides(pending_turn).min(strides);
                let start_heading = heading;
                heading += pending_turn;
                let dir = Vec3::new(heading.cos(), -heading.sin(), 0.0);
                for j in 1..=strides {
                    let frac = j as f64 / strides as f64;
                    let h = if pending_turn != 0.0 {
                        start_heading + pending_turn * (j.min(k) as f64 / k as f64)
                    } else {
                        heading
                    };
                    falls.push(Footfall {
                        r: last.r + dir * (length * frac),
                        heading: h,
                        distance: last.distance + length * frac,
                    });
                }
                pending_turn = 0.0;
            }
            Segment::Straight(_) => {}
        }
    }
    if pending_turn != 0.0 {
        // trailing turn: pivot on the spot
        let last = *falls.last().unwrap();
        let k = turn_strides(pending_turn);
        for j in 1..=k {
            falls.push(Footfall {
                heading: last.heading + pending_turn * j as f64 / k as f64,
                ..last
            });
        }
    }
    if path.closed {
        let last = falls.last_mut().unwrap();
        let gap = last.r.norm();
        if gap > 1e-6 * path.length().max(1.0) {
            return Err(Error::Config(format!("path marked closed but ends {gap:.3} m from its start")));
        }
        last.r = Vec3::zeros();
    }
    Ok(falls)
}

// Minimum-jerk blend and its first two derivatives.
fn blend(s: f64) -> (f64, f64, f64) {
    let u = s * (1.0 - s);
    (s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 30.0 * u * u, 60.0 * u * (1.0 - 2.0 * s))
}

// Vertical bump with unit peak at mid swing, and its derivatives.
fn bump(s: f64) -> (f64, f64, f64) {
    let u = s * (1.0 - s);
    let d = 1.0 - 2.0 * s;
    (64.0 * u * u * u, 192.0 * u * u * d, 384.0 * u * (d * d - u))
}

fn pitch_shape(s: f64) -> f64 {
    let u = s * (1.0 - s);
    u * u * u * (1.0 - 2.0 * s) / PITCH_SHAPE_PEAK
}

impl Walk {
    pub fn new(path: &PathSpec, gait: &GaitSpec) -> Result<Self> {
        path.validate()?;
        gait.validate()?;
        let footfalls = footfalls(path, gait)?;
        let mut rng = ChaCha8Rng::seed_from_u64(gait.seed);
        let mut phases = vec![(0.0, Phase::Stance(0))];
        let mut t = gait.standing_time;
        for i in 0..footfalls.len() - 1 {
            let jitter = if gait.cadence_jitter > 0.0 {
                rng.random_range(-gait.cadence_jitter..=gait.cadence_jitter)
            } else {
                0.0
            };
            let duration = gait.step_duration * (1.0 + jitter);
            phases.push((t, Phase::Swing(i)));
            t += duration * (1.0 - gait.stance_fraction);
            phases.push((t, Phase::Stance(i + 1)));
            t += duration * gait.stance_fraction;
        }
        Ok(Self {
            footfalls,
            phases,
            end: t + gait.standing_time,
            height: gait.swing_peak_height,
            pitch_amplitude: gait.swing_pitch_deg.to_radians(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.end
    }

    pub fn strides(&self) -> usize {
        self.footfalls.len() - 1
    }

    /// Total horizontal distance between consecutive footfalls, m.
    pub fn distance(&self) -> f64 {
        self.footfalls.last().map_or(0.0, |f| f.distance)
    }

    fn phase_end(&self, idx: usize) -> f64 {
        self.phases.get(idx + 1).map_or(self.end, |p| p.0)
    }

    /// Truth at time `t`, clamped to the walk's time span. Also returns the
    /// navigation-frame acceleration.
    pub fn eval(&self, t: f64) -> (TruthSample, Vec3) {
        let t = t.clamp(0.0, self.end);
        let idx = self.phases.partition_point(|p| p.0 <= t).saturating_sub(1);
        let (t0, mut phase) = self.phases[idx];
        if let Phase::Swing(i) = phase {
            // lift-off instant still belongs to the stance
            if t == t0 {
                phase = Phase::Stance(i);
            }
        }
        match phase {
            Phase::Stance(i) => {
                let f = self.footfalls[i];
                let truth = TruthSample {
                    t,
                    r: f.r,
                    v: Vec3::zeros(),
                    euler: EulerAngles::new(0.0, 0.0, wrap_angle(f.heading)),
                    stance: true,
                    distance: f.distance,
                };
                (truth, Vec3::zeros())
            }
            Phase::Swing(i) => {
                let (a, b) = (self.footfalls[i], self.footfalls[i + 1]);
                let span = self.phase_end(idx) - t0;
                let s = (t - t0) / span;
                let (h, dh, ddh) = blend(s);
                let (z, dz, ddz) = bump(s);
                let dr = b.r - a.r;
                let up = Vec3::new(0.0, 0.0, self.height);
                let r = a.r + dr * h + up * z;
                let v = (dr * dh + up * dz) / span;
                let acc = (dr * ddh + up * ddz) / (span * span);
                let heading = a.heading + (b.heading - a.heading) * h;
                let truth = TruthSample {
                    t,
                    r,
                    v,
                    euler: EulerAngles::new(0.0, self.pitch_amplitude * pitch_shape(s), wrap_angle(heading)),
                    stance: false,
                    distance: a.distance + (b.distance - a.distance) * h,
                };
                (truth, acc)
            }
        }
    }

    /// Samples the walk at `rate` Hz from `t = 0` to the end of the final
    /// standing period.
    pub fn sample(&self, rate: f64) -> Vec<TruthSample> {
        let n = (self.end * rate + 1e-9).floor() as usize;
        (0..=n).map(|k| self.eval(k as f64 / rate).0).collect()
    }
}

/// Ground-truth stream for `path` walked with `gait`, sampled at `rate` Hz.
pub fn generate_truth(path: &PathSpec, gait: &GaitSpec, rate: f64) -> Result<Vec<TruthSample>> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Config(format!("sample rate must be > 0, got {rate}")));
    }
    Ok(Walk::new(path, gait)?.sample(rate))
}

/// Noise-free IMU stream whose strapdown integration reproduces `truth`.
///
/// The inversion mirrors [`crate::ins::propagate`]: the gyro sample at `k` is
/// the rotation from attitude `k-1` to `k` over `dt`; the specific force is
/// the second difference of the sampled positions, rotated into the body
/// frame at `k`. The first sample assumes the foot is at rest.
pub fn ideal_imu(truth: &[TruthSample], gravity: f64, field: &Vec3) -> Vec<ImuSample> {
    let up = Vec3::new(0.0, 0.0, gravity);
    let mut out = Vec::with_capacity(truth.len());
    let mut prev_q: Option<Quaternion> = None;
    let mut prev_v = Vec3::zeros();
    for (k, s) in truth.iter().enumerate() {
        let q = Quaternion::from_euler(&s.euler);
        let c_nb = q.to_rotmat().transpose();
        let (gyro, acc_n) = match prev_q {
            Some(pq) if k > 0 => {
                let p = &truth[k - 1];
                let dt = s.t - p.t;
                let dq = pq.conjugate().mul(&q);
                let v = (s.r - p.r) / dt;
                let a = (v - prev_v) / dt;
                prev_v = v;
                (dq.to_rotation_vector() / dt, a)
            }
            _ => (Vec3::zeros(), Vec3::zeros()),
        };
        prev_q = Some(q);
        out.push(ImuSample {
            t: s.t,
            acc: c_nb * (acc_n + up),
            gyro,
            mag: Some(c_nb * field),
        });
    }
    out
}

/// Adds biases, white noise and magnetic disturbances to an ideal stream.
/// `truth` must be the stream `ideal` was generated from.
pub fn corrupt(
    ideal: &[ImuSample],
    err: &SensorErrorSpec,
    env: &MagEnvSpec,
    truth: &[TruthSample],
) -> Vec<ImuSample> {
    assert_eq!(ideal.len(), truth.len(), "ideal and truth streams must be aligned");
    let mut rng = ChaCha8Rng::seed_from_u64(err.seed);
    let mut noise = |sigma: f64| -> Vec3 {
        let n: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        Vec3::from(n) * sigma
    };
    let ba = Vec3::from(err.acc_bias);
    let bg = Vec3::from(err.gyro_bias);
    ideal
        .iter()
        .zip(truth)
        .map(|(s, tr)| {
            let acc = s.acc + ba + noise(err.acc_noise);
            let gyro = s.gyro + bg + noise(err.gyro_noise);
            let c_nb = Quaternion::from_euler(&tr.euler).to_rotmat().transpose();
            let mag = c_nb * env.field_at(tr.distance) + noise(err.mag_noise);
            ImuSample {
                t: s.t,
                acc,
                gyro,
                mag: Some(mag),
            }
        })
        .collect()
}

/// A complete simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub path: PathSpec,
    #[serde(default)]
    pub gait: GaitSpec,
    #[serde(default)]
    pub sensor: SensorErrorSpec,
    #[serde(default)]
    pub magnetic: MagEnvSpec,
    /// Hz.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// m/s^2.
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_rate() -> f64 {
    100.0
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

/// Truth and the matching corrupted IMU stream.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: Vec<TruthSample>,
    pub imu: Vec<ImuSample>,
    pub distance: f64,
}

impl Scenario {
    pub fn new(path: PathSpec) -> Self {
        Self {
            path,
            gait: GaitSpec::default(),
            sensor: SensorErrorSpec::default(),
            magnetic: MagEnvSpec::default(),
            rate: default_rate(),
            gravity: default_gravity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.path.validate()?;
        self.gait.validate()?;
        self.sensor.validate()?;
        self.magnetic.validate()?;
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Config(format!("rate must be > 0, got {}", self.rate)));
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(Error::Config(format!("gravity must be > 0, got {}", self.gravity)));
        }
        Ok(())
    }

    pub fn simulate(&self) -> Result<Simulation> {
        self.validate()?;
        let walk = Walk::new(&self.path, &self.gait)?;
        let truth = walk.sample(self.rate);
        let ideal = ideal_imu(&truth, self.gravity, &self.magnetic.field());
        let imu = corrupt(&ideal, &self.sensor, &self.magnetic, &truth);
        Ok(Simulation {
            truth,
            imu,
            distance: walk.distance(),
        })
    }

    /// Straight corridor with a hard-iron zone between `start_m` and
    /// `end_m`. The offset rotates the measured horizontal field by about
    /// 20 degrees and lifts its magnitude by about 0.19.
    pub fn hard_iron_corridor(length: f64, start_m: f64, end_m: f64, seed: u64) -> Self {
        let mut s = Self::new(PathSpec::straight(length));
        s.gait.seed = seed;
        s.sensor = SensorErrorSpec::mems(seed);
        s.magnetic.disturbances = vec![Disturbance::hard(start_m, end_m, HARD_IRON_OFFSET)];
        s
    }

    /// One lap of a 150 m x 100 m rectangle (500 m) with a noticeable
    /// vertical gyro bias and two hard-iron zones on the long sides.
    pub fn loop_walk(seed: u64) -> Self {
        let mut s = Self::new(PathSpec::rectangle(LOOP_LENGTH, LOOP_WIDTH, 1));
        s.gait.seed = seed;
        s.sensor = SensorErrorSpec {
            gyro_bias: [2e-4, -2e-4, LOOP_GYRO_BIAS_Z],
            ..SensorErrorSpec::mems(seed)
        };
        // zones sit inside the first and the third side
        let lap = 2.0 * (LOOP_LENGTH + LOOP_WIDTH);
        let first = 0.4 * LOOP_LENGTH;
        let third = lap - LOOP_WIDTH - 0.5 * LOOP_LENGTH;
        let half = 0.5 * LOOP_ZONE_LENGTH;
        s.magnetic.disturbances = vec![
            Disturbance::hard(first - half, first + half, HARD_IRON_OFFSET),
            // mirrored so that both zones bend the path towards the same side
            Disturbance::hard(third - half, third + half, [0.0, 0.18, -0.2]),
        ];
        s
    }
}

/// Hard-iron offset used by the preset scenarios, normalized units.
pub const HARD_IRON_OFFSET: [f64; 3] = [0.0, -0.18, -0.2];
const LOOP_LENGTH: f64 = 150.0;
const LOOP_WIDTH: f64 = 100.0;
const LOOP_ZONE_LENGTH: f64 = 15.0;
const LOOP_GYRO_BIAS_Z: f64 = 5e-4;

/// Standing still at the origin, facing North, for `seconds`.
pub fn standing_still(
    seconds: f64,
    rate: f64,
    gravity: f64,
    sensor: &SensorErrorSpec,
    env: &MagEnvSpec,
) -> Simulation {
    let n = (seconds * rate + 1e-9).floor() as usize;
    let truth: Vec<TruthSample> = (0..=n)
        .map(|k| TruthSample {
            t: k as f64 / rate,
            r: Vec3::zeros(),
            v: Vec3::zeros(),
            euler: EulerAngles::new(0.0, 0.0, 0.0),
            stance: true,
            distance: 0.0,
        })
        .collect();
    let ideal = ideal_imu(&truth, gravity, &env.field());
    let imu = corrupt(&ideal, sensor, env, &truth);
    Simulation {
        truth,
        imu,
        distance: 0.0,
    }
}
