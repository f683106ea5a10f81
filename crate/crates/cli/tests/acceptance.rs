//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use aiez_core::detectors::{label_stance, qmd_statistic, DetectorConfig, QmdObservation};
use aiez_core::heading::{compass_heading, HeadingSource};
use aiez_core::ins::{propagate, NavState, STANDARD_GRAVITY};
use aiez_core::math::{
    euler_from_rotmat, pade_attitude_correct, rodrigues, rotmat_from_euler, skew3, wrap_angle, EulerAngles, Mat3,
    Quaternion, Vec3,
};
use aiez_core::pipeline::{metrics, run, TrajectoryPoint, Variant, VariantConfig};
use aiez_core::synth::{
    self, generate_truth, ideal_imu, GaitSpec, MagEnvSpec, PathSpec, Scenario, SensorErrorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const G: f64 = STANDARD_GRAVITY;
const PI: f64 = std::f64::consts::PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
        r.random_range(-scale..scale),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn math_core() -> Outcome {
    let mut r = rng(1);
    let ident = Mat3::identity();
    let mut worst_norm = 0.0f64;
    let mut worst_ortho = 0.0f64;
    let mut worst_cross = 0.0f64;
    let mut worst_pade = 0.0f64;
    let mut worst_pade_ortho = 0.0f64;
    for _ in 0..1000 {
        let e = EulerAngles::new(
            r.random_range(-PI..PI),
            r.random_range(-1.5..1.5),
            r.random_range(-PI..PI),
        );
        let mut q = Quaternion::from_euler(&e);
        let w = random_vec(&mut r, 8.0);
        for _ in 0..200 {
            q = q.propagate(&w, 0.01);
        }
        worst_norm = worst_norm.max((q.norm() - 1.0).abs());
        let c = q.to_rotmat();
        worst_ortho = worst_ortho.max((c.transpose() * c - ident).norm());

        let (a, b) = (random_vec(&mut r, 100.0), random_vec(&mut r, 100.0));
        worst_cross = worst_cross.max((skew3(&a) * b - a.cross(&b)).norm() / (1.0 + a.norm() * b.norm()));

        let d = random_vec(&mut r, 1.0).normalize() * 1e-2;
        let corrected = pade_attitude_correct(&c, &d);
        worst_pade = worst_pade.max((corrected - rodrigues(&-d) * c).norm());
        worst_pade_ortho = worst_pade_ortho.max((corrected.transpose() * corrected - ident).norm());
    }

    let mut worst_euler = 0.0f64;
    let mut grid = 0;
    for roll in (-80..=80).step_by(5) {
        for pitch in (-80..=80).step_by(5) {
            for heading in (-179..=179).step_by(2) {
                let e = EulerAngles::new(
                    f64::from(roll).to_radians(),
                    f64::from(pitch).to_radians(),
                    f64::from(heading).to_radians(),
                );
                let back = euler_from_rotmat(&rotmat_from_euler(&e)).expect("away from gimbal lock");
                let err = (back.roll - e.roll)
                    .abs()
                    .max((back.pitch - e.pitch).abs())
                    .max(wrap_angle(back.heading - e.heading).abs());
                worst_euler = worst_euler.max(err);
                grid += 1;
            }
        }
    }
    let pass = worst_norm <= 1e-9
        && worst_ortho <= 1e-12
        && worst_cross <= 1e-12
        && worst_pade <= 1e-6
        && worst_pade_ortho <= 1e-12
        && worst_euler <= 1e-10;
    outcome(
        pass,
        format!(
            "|q|-1 {worst_norm:.1e}, C'C-I {worst_ortho:.1e}, skew {worst_cross:.1e}, pade-rodrigues {worst_pade:.1e}, \
             pade ortho {worst_pade_ortho:.1e}, euler grid ({grid}) {worst_euler:.1e}"
        ),
    )
}

/// `-(2/N) ln` of the likelihood ratio built from Gaussian densities.
fn glrt_oracle(window: &[QmdObservation], sigma_psi: f64, sigma_b: f64) -> f64 {
    let pdf = |x: f64, s: f64| (-(x * x) / (2.0 * s * s)).exp() / (2.0 * PI * s * s).sqrt();
    let h1: f64 = window
        .iter()
        .map(|o| pdf(o.heading_diff, sigma_psi) * pdf(o.field_dev, sigma_b))
        .product();
    let h0: f64 = window.iter().map(|_| pdf(0.0, sigma_psi) * pdf(0.0, sigma_b)).product();
    -2.0 / window.len() as f64 * (h1 / h0).ln()
}

fn glrt_oracle_equivalence() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cfg = DetectorConfig {
            sigma_heading: r.random_range(2.0..10.0f64).to_radians(),
            sigma_field: r.random_range(0.02..0.1),
            ..DetectorConfig::default()
        };
        // spread of a few sigma keeps the raw density product inside f64 range
        let k = r.random_range(0.3..1.5);
        let (a, b) = (3.0 * k * cfg.sigma_heading, 3.0 * k * cfg.sigma_field);
        let window: Vec<QmdObservation> = (0..cfg.qmd_window)
            .map(|_| {
                let ins = r.random_range(-PI..PI);
                QmdObservation::new(ins, ins + r.random_range(-a..a), 1.0 + r.random_range(-b..b), 1.0)
            })
            .collect();
        let t = qmd_statistic(&window, &cfg).unwrap();
        let oracle = glrt_oracle(&window, cfg.sigma_heading, cfg.sigma_field);
        worst = worst.max((t - oracle).abs());
    }
    outcome(worst <= 1e-9, format!("1000 windows, max |T - oracle| {worst:.1e}"))
}

fn compass_round_trip() -> Outcome {
    let mut r = rng(3);
    let lim = 80f64.to_radians();
    let mut worst = 0.0f64;
    let mut additive = true;
    for _ in 0..10_000 {
        let e = EulerAngles::new(r.random_range(-PI..PI), r.random_range(-lim..=lim), r.random_range(-PI..PI));
        let incl = r.random_range(-lim..=lim);
        let strength = r.random_range(0.2..2.0);
        let field = Vec3::new(incl.cos(), 0.0, -incl.sin()) * strength;
        let body = rotmat_from_euler(&e).transpose() * field;
        let h = compass_heading(&body, e.roll, e.pitch, 0.0).unwrap();
        worst = worst.max(wrap_angle(h - e.heading).abs());
        let decl = r.random_range(-0.5..0.5);
        additive &= compass_heading(&body, e.roll, e.pitch, decl).unwrap() == wrap_angle(h + decl);
    }
    outcome(
        worst <= 1e-9 && additive,
        format!("10^4 attitudes, max heading error {worst:.1e} rad, declination additive: {additive}"),
    )
}

fn inverse_mechanization() -> Outcome {
    let path = PathSpec::rectangle(150.0, 100.0, 1);
    let gait = GaitSpec::default();
    let truth = generate_truth(&path, &gait, 100.0).unwrap();
    let imu = ideal_imu(&truth, G, &MagEnvSpec::default().field());
    let mut state = NavState {
        t: truth[0].t,
        q: Quaternion::from_euler(&truth[0].euler),
        r: truth[0].r,
        v: truth[0].v,
        ..NavState::default()
    };
    let mut worst = 0.0f64;
    for k in 1..imu.len() {
        state = propagate(&state, &imu[k].acc, &imu[k].gyro, imu[k].t - imu[k - 1].t, G);
        worst = worst.max((state.r - truth[k].r).norm());
    }
    let distance = truth.last().unwrap().distance;
    let bound = 1e-3 * distance / 100.0;
    let last = (state.r - truth.last().unwrap().r).norm();
    outcome(
        worst <= bound,
        format!("{distance:.1} m walk, worst position error {worst:.2e} m (bound {bound:.1e} m), final {last:.2e} m"),
    )
}

fn stationary() -> Outcome {
    let sim = synth::standing_still(60.0, 100.0, G, &SensorErrorSpec::mems(5), &MagEnvSpec::default());
    let mut parts = Vec::new();
    let mut pass = true;
    for v in Variant::ALL {
        let traj = run(&sim.imu, &VariantConfig::for_variant(v)).unwrap();
        let err = traj.last().unwrap().r.xy().norm();
        pass &= err <= 0.01;
        parts.push(format!("{v} {:.2} mm", err * 1e3));
    }
    outcome(pass, format!("60 s still: {}", parts.join(", ")))
}

fn stance_detection() -> Outcome {
    let mut s = Scenario::new(PathSpec::straight(600.0));
    s.sensor = SensorErrorSpec::mems(1);
    let sim = s.simulate().unwrap();
    let labels = label_stance(&sim.imu, &DetectorConfig::default(), G);
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (l, t) in labels.iter().zip(&sim.truth) {
        match (*l, t.stance) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let recall = tp as f64 / (tp + fneg) as f64;
    let precision = tp as f64 / (tp + fp) as f64;
    let strides = (sim.distance / s.gait.step_length).round();
    outcome(
        recall >= 0.99 && precision >= 0.99,
        format!("{strides} strides, recall {recall:.4}, precision {precision:.4}"),
    )
}

fn hard_iron_detection() -> Outcome {
    let (start, end) = (30.0, 50.0);
    let scenario = Scenario::hard_iron_corridor(80.0, start, end, 2);
    let cfg = VariantConfig::for_variant(Variant::Aiez);
    let det = &cfg.detector;

    // the zone must shift magnitude by >= 3 sigma_B and heading by >= 3 sigma_psi
    let field = scenario.magnetic.field();
    let disturbed = scenario.magnetic.field_at(0.5 * (start + end));
    let dmag = (disturbed.norm() - field.norm()).abs();
    let dpsi = wrap_angle(disturbed.y.atan2(disturbed.x) - field.y.atan2(field.x)).abs();
    let strong = dmag >= 3.0 * det.sigma_field && dpsi >= 3.0 * det.sigma_heading;

    let sim = scenario.simulate().unwrap();
    let traj = run(&sim.imu, &cfg).unwrap();
    let n = det.qmd_window;
    let (mut windows, mut proposed, mut classical) = (0usize, 0usize, 0usize);
    for (k, p) in traj.iter().enumerate().skip(n - 1) {
        let inside = sim.truth[k + 1 - n..=k].iter().all(|t| (start..end).contains(&t.distance));
        if inside {
            windows += 1;
            proposed += usize::from(p.detectors.qmd_flag == Some(false));
            classical += usize::from(p.detectors.classical_flag == Some(true));
        }
    }
    let p = proposed as f64 / windows as f64;
    let c = classical as f64 / windows as f64;
    outcome(
        strong && windows > 0 && p >= 0.95 && c >= 0.95,
        format!(
            "offset {:.2} sigma_B, {:.1} sigma_psi; {windows} in-zone windows: proposed flags disturbance {:.1}%, classical flags pure {:.1}%",
            dmag / det.sigma_field,
            dpsi / det.sigma_heading,
            100.0 * p,
            100.0 * c
        ),
    )
}

fn loop_ordering() -> Outcome {
    let seeds = 20;
    let mut errors = [Vec::new(), Vec::new(), Vec::new()];
    let mut ttd = Vec::new();
    let mut distance = 0.0;
    for seed in 0..seeds {
        let sim = Scenario::loop_walk(seed).simulate().unwrap();
        distance = sim.distance;
        for (i, v) in Variant::ALL.into_iter().enumerate() {
            let traj = run(&sim.imu, &VariantConfig::for_variant(v)).unwrap();
            let m = metrics(&traj, sim.distance, &Vec3::zeros()).unwrap();
            errors[i].push(m.final_position_error);
            if v == Variant::Aiez {
                ttd.push(m.ttd_error_pct);
            }
        }
    }
    let [iez, cqmd, aiez] = errors.map(median);
    let aiez_ttd = median(ttd);
    outcome(
        aiez < cqmd && cqmd < iez && aiez_ttd <= 0.5,
        format!(
            "{seeds} seeds, {distance:.0} m loop, median error: iez {iez:.2} m, iez-cqmd {cqmd:.2} m, aiez {aiez:.2} m (TTD {aiez_ttd:.3}%)"
        ),
    )
}

fn stance_end_variances(traj: &[TrajectoryPoint]) -> Vec<f64> {
    traj.windows(2)
        .filter(|w| w[0].stance && !w[1].stance)
        .map(|w| w[0].heading_variance)
        .collect()
}

fn heading_variance() -> Outcome {
    let mut s = Scenario::new(PathSpec::straight(100.0));
    s.sensor = SensorErrorSpec::mems(3);
    let sim = s.simulate().unwrap();

    let iez = run(&sim.imu, &VariantConfig::for_variant(Variant::Iez)).unwrap();
    let ends = stance_end_variances(&iez);
    let decreases = ends.windows(2).filter(|w| w[1] < w[0]).count();

    let aiez = run(&sim.imu, &VariantConfig::for_variant(Variant::Aiez)).unwrap();
    let (mut updates, mut drops) = (0usize, 0usize);
    for w in aiez.windows(2) {
        if w[1].heading_source == HeadingSource::Compass {
            updates += 1;
            drops += usize::from(w[1].heading_variance < w[0].heading_variance);
        }
    }
    outcome(
        ends.len() > 50 && decreases == 0 && updates > 0 && drops == updates,
        format!(
            "iez: {} gait cycles, {decreases} decreases ({:.2e} -> {:.2e} rad^2); aiez: variance drops at {drops}/{updates} compass updates",
            ends.len(),
            ends.first().copied().unwrap_or(f64::NAN),
            ends.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn aiez(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_aiez")).args(args).output().expect("binary runs");
    assert!(out.status.success(), "aiez {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Every file under `dir`, relative path and contents, sorted by path.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let pass_through = |i: usize| {
        let root = tmp.path().join(format!("pass{i}"));
        let p = |s: &str| root.join(s).display().to_string();
        aiez(&["simulate", "--preset", "hard-iron", "--seed", "3", "--out", &p("sim")]);
        let (cfg, input) = (p("sim/config.toml"), p("sim/imu.csv"));
        for v in ["iez", "iez-cqmd", "aiez"] {
            aiez(&["run", "--variant", v, "--config", &cfg, "--input", &input, "--out", &p(&format!("run-{v}"))]);
        }
        let table = aiez(&["compare", "--config", &cfg, "--input", &input, "--out", &p("compare")]).stdout;
        aiez(&["detect", "--config", &cfg, "--input", &input, "--out", &p("detect.csv")]);
        let detect_stdout = aiez(&["detect", "--config", &cfg, "--input", &input]).stdout;
        (snapshot(&root), table, detect_stdout)
    };
    let first = pass_through(0);
    let second = pass_through(1);
    let files = first.0.len();
    let identical = first == second;

    let metrics = first.0.iter().find(|(p, _)| p == "compare/metrics.csv").map(|(_, b)| String::from_utf8_lossy(b).to_string());
    let table_ok = metrics.as_deref().is_some_and(|m| {
        let lines: Vec<&str> = m.lines().filter(|l| !l.starts_with('#')).collect();
        lines.len() == 4
            && lines[0] == "variant,position_error_m,ttd_error_pct"
            && lines[1].starts_with("iez,")
            && lines[2].starts_with("iez-cqmd,")
            && lines[3].starts_with("aiez,")
    });
    outcome(
        identical && table_ok && files >= 14,
        format!("simulate/run/compare/detect twice: {files} files and stdout byte-identical: {identical}; 3-row metrics table: {table_ok}"),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 10] = [
        ("math core properties", math_core),
        ("GLRT oracle equivalence", glrt_oracle_equivalence),
        ("compass round trip", compass_round_trip),
        ("inverse mechanization", inverse_mechanization),
        ("stationary ZUPT", stationary),
        ("stance detection", stance_detection),
        ("hard-iron detection", hard_iron_detection),
        ("loop error ordering", loop_ordering),
        ("heading variance", heading_variance),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {:<26} {} ({:.1} s): {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
