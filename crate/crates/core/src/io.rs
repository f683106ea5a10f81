//! CSV readers and writers.
//!
//! Every file starts with a `# units:` comment followed by a header row.
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical to the one written. Missing values are empty
//! fields; flags are `0`/`1`. Angles in output logs are degrees.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ins::ImuSample;
use crate::math::Vec3;
use crate::pipeline::{RunMetrics, TrajectoryPoint, Variant};
use crate::synth::TruthSample;

pub const IMU_COLUMNS: [&str; 10] = [
    "t_s", "acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z", "mag_x", "mag_y", "mag_z",
];
pub const IMU_UNITS: &str = "# units: t_s=s acc=m/s^2 gyr=rad/s mag=normalized";

pub const TRUTH_COLUMNS: [&str; 12] = [
    "t_s", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps", "roll_deg", "pitch_deg",
    "heading_deg", "stance", "distance_m",
];

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "t_s", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps", "roll_deg", "pitch_deg",
    "heading_deg", "stance", "heading_source", "heading_var_deg2",
];

pub const DETECTOR_COLUMNS: [&str; 6] = ["t_s", "shoe_T", "stance", "qmd_T", "qmd_flag", "heading_source"];

pub const DETECT_COLUMNS: [&str; 10] = [
    "t_s", "shoe_T", "stance", "qmd_T", "qmd_flag", "cqmd_var", "cqmd_flag", "ins_heading_deg",
    "compass_heading_deg", "heading_source",
];

pub const METRICS_COLUMNS: [&str; 3] = ["variant", "position_error_m", "ttd_error_pct"];

/// Parsed IMU log.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuLog {
    pub samples: Vec<ImuSample>,
    /// Indices `i` where `t[i] - t[i-1]` exceeds twice the median period.
    pub gaps: Vec<usize>,
}

impl ImuLog {
    pub fn has_magnetometer(&self) -> bool {
        self.samples.first().is_some_and(|s| s.mag.is_some())
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

fn field(record: &csv::StringRecord, i: usize, name: &str, line: usize) -> Result<f64> {
    let text = &record[i];
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("column `{name}`: `{text}` is not a finite number"),
        }),
    }
}

/// Reads an IMU log. The header must be the 10-column schema or its first
/// seven columns (no magnetometer).
pub fn parse_imu<R: Read>(input: R) -> Result<ImuLog> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let header_line = rdr.position().line() as usize;
    let names: Vec<&str> = header.iter().collect();
    let width = names.len();
    if !(width == 10 || width == 7) || names[..] != IMU_COLUMNS[..width] {
        return Err(Error::Parse {
            line: header_line.max(1),
            message: format!("header must be `{}` (mag columns optional)", IMU_COLUMNS.join(",")),
        });
    }

    let mut samples: Vec<ImuSample> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        if !rdr.read_record(&mut record).map_err(csv_error)? {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let v: Vec<f64> = (0..width)
            .map(|i| field(&record, i, IMU_COLUMNS[i], line))
            .collect::<Result<_>>()?;
        let sample = ImuSample {
            t: v[0],
            acc: Vec3::new(v[1], v[2], v[3]),
            gyro: Vec3::new(v[4], v[5], v[6]),
            mag: (width == 10).then(|| Vec3::new(v[7], v[8], v[9])),
        };
        if let Some(prev) = samples.last() {
            if sample.t <= prev.t {
                return Err(Error::Parse {
                    line,
                    message: format!("time not strictly increasing ({} -> {})", prev.t, sample.t),
                });
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::EmptyStream);
    }
    let gaps = find_gaps(&samples);
    Ok(ImuLog { samples, gaps })
}

pub fn read_imu(path: &Path) -> Result<ImuLog> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_imu(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn find_gaps(samples: &[ImuSample]) -> Vec<usize> {
    if samples.len() < 3 {
        return Vec::new();
    }
    let dts: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    let nominal = {
        let mut sorted = dts.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    };
    dts.iter()
        .enumerate()
        .filter(|(_, dt)| **dt > 2.0 * nominal)
        .map(|(i, _)| i + 1)
        .collect()
}

fn writer<W: Write>(out: W, units: &str, columns: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = out;
    writeln!(out, "{units}")?;
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    w.write_record(columns).map_err(|e| Error::Io(e.to_string()))?;
    Ok(w)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    inner.flush()?;
    Ok(())
}

fn put(w: &mut csv::Writer<impl Write>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::Io(e.to_string()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn vec_fields(v: &Vec3) -> [String; 3] {
    [v.x.to_string(), v.y.to_string(), v.z.to_string()]
}

/// Writes samples in the format [`parse_imu`] reads. The magnetometer columns
/// are emitted only when every sample carries a reading.
pub fn write_imu<W: Write>(out: W, samples: &[ImuSample]) -> Result<()> {
    let with_mag = !samples.is_empty() && samples.iter().all(|s| s.mag.is_some());
    let cols = if with_mag { &IMU_COLUMNS[..] } else { &IMU_COLUMNS[..7] };
    let mut w = writer(out, IMU_UNITS, cols)?;
    for s in samples {
        let mut row = vec![s.t.to_string()];
        row.extend(vec_fields(&s.acc));
        row.extend(vec_fields(&s.gyro));
        if let (true, Some(m)) = (with_mag, s.mag) {
            row.extend(vec_fields(&m));
        }
        put(&mut w, &row)?;
    }
    finish(w)
}

pub fn write_truth<W: Write>(out: W, truth: &[TruthSample]) -> Result<()> {
    let mut w = writer(out, "# units: s, m, m/s, deg, stance 0/1, m", &TRUTH_COLUMNS)?;
    for s in truth {
        let mut row = vec![s.t.to_string()];
        row.extend(vec_fields(&s.r));
        row.extend(vec_fields(&s.v));
        row.extend([
            s.euler.roll.to_degrees().to_string(),
            s.euler.pitch.to_degrees().to_string(),
            s.euler.heading.to_degrees().to_string(),
            flag(s.stance),
            s.distance.to_string(),
        ]);
        put(&mut w, &row)?;
    }
    finish(w)
}

pub fn write_trajectory<W: Write>(out: W, traj: &[TrajectoryPoint]) -> Result<()> {
    let mut w = writer(out, "# units: s, m, m/s, deg, stance 0/1, source, deg^2", &TRAJECTORY_COLUMNS)?;
    for p in traj {
        let mut row = vec![p.t.to_string()];
        row.extend(vec_fields(&p.r));
        row.extend(vec_fields(&p.v));
        row.extend([
            p.euler.roll.to_degrees().to_string(),
            p.euler.pitch.to_degrees().to_string(),
            p.euler.heading.to_degrees().to_string(),
            flag(p.stance),
            p.heading_source.to_string(),
            p.heading_variance.to_degrees().to_degrees().to_string(),
        ]);
        put(&mut w, &row)?;
    }
    finish(w)
}

/// Reads the positions back from a trajectory file written by
/// [`write_trajectory`].
pub fn parse_trajectory_positions<R: Read>(input: R) -> Result<Vec<(f64, Vec3)>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(Error::Parse { line: 2, message: "not a trajectory file".into() });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != TRAJECTORY_COLUMNS.len() {
            return Err(Error::Parse { line, message: "wrong column count".into() });
        }
        let v: Vec<f64> = (0..4)
            .map(|i| field(&rec, i, TRAJECTORY_COLUMNS[i], line))
            .collect::<Result<_>>()?;
        out.push((v[0], Vec3::new(v[1], v[2], v[3])));
    }
    Ok(out)
}

/// Detector log written by `run`.
pub fn write_detector_log<W: Write>(out: W, traj: &[TrajectoryPoint]) -> Result<()> {
    let mut w = writer(out, "# units: s, dimensionless, 0/1, dimensionless, 0/1, source", &DETECTOR_COLUMNS)?;
    for p in traj {
        let d = &p.detectors;
        put(
            &mut w,
            &[
                p.t.to_string(),
                opt(d.shoe_statistic),
                flag(p.stance),
                opt(d.qmd_statistic),
                opt(d.qmd_flag.map(flag)),
                p.heading_source.to_string(),
            ],
        )?;
    }
    finish(w)
}

/// Extended detector log written by `detect`: both field detectors and the
/// two heading estimates they compare.
pub fn write_detect_log<W: Write>(out: W, traj: &[TrajectoryPoint]) -> Result<()> {
    let mut w = writer(
        out,
        "# units: s, -, 0/1, -, 0/1 (1 = pure field), normalized^2, 0/1 (1 = pure field), deg, deg, source",
        &DETECT_COLUMNS,
    )?;
    for p in traj {
        let d = &p.detectors;
        put(
            &mut w,
            &[
                p.t.to_string(),
                opt(d.shoe_statistic),
                flag(p.stance),
                opt(d.qmd_statistic),
                opt(d.qmd_flag.map(flag)),
                opt(d.classical_variance),
                opt(d.classical_flag.map(flag)),
                d.ins_heading.to_degrees().to_string(),
                opt(d.compass_heading.map(f64::to_degrees)),
                p.heading_source.to_string(),
            ],
        )?;
    }
    finish(w)
}

pub fn write_metrics<W: Write>(out: W, rows: &[(Variant, RunMetrics)]) -> Result<()> {
    let mut w = writer(out, "# units: -, m (horizontal), % of total distance", &METRICS_COLUMNS)?;
    for (variant, m) in rows {
        put(
            &mut w,
            &[
                variant.name().to_string(),
                m.final_position_error.to_string(),
                m.ttd_error_pct.to_string(),
            ],
        )?;
    }
    finish(w)
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> Result<()>,
{
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write(BufWriter::new(file))
}
