//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dopinv_core::elliptic::{assemble, newton_equilibrium, solve_spd, EllipticProblem};
use dopinv_core::forward::{
    contact_voltage, dn_current_flow, dn_pointwise, doping_from_gamma, synthesize_from_gamma,
    DopingBounds, GammaField, MeasurementKind, MeasurementSet, Mobilities,
};
use dopinv_core::grid::{Grid, ScalarField, Segment, Trace};
use dopinv_core::inverse::{
    default_fd_step, gamma_from_phi, gradient_adjoint, gradient_fd, init_phi, reconstruct, Axis,
    InversionConfig, LevelSetState, ReconstructionResult, Shape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "\ncriterion {n} [{name}]: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn criterion_1_equilibrium_constant_solution() {
    let start = Instant::now();
    let g = Grid::new(32).unwrap();
    let c = ScalarField::constant(g, 2.0 * 1f64.sinh());
    let sol = newton_equilibrium(&c, 1e-3, 1e-10).unwrap();
    let dev = sol
        .potential
        .values()
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let t = start.elapsed();
    let pass = dev <= 1e-9 && t < Duration::from_secs(1);
    report(
        1,
        "equilibrium exactness",
        pass,
        &format!("max |V - 1| = {dev:e}, {:.3} s", secs(t)),
    );
}

#[test]
fn criterion_2_analytic_dn_values() {
    let start = Instant::now();
    let g = Grid::new(32).unwrap();
    let mob = Mobilities::new(1.0, 1.0).unwrap();
    let full = contact_voltage(0.5, 0.6, 1.0, g).unwrap();
    let unit = GammaField::new(ScalarField::constant(g, 1.0)).unwrap();
    let trace = dn_pointwise(&unit, &full, mob).unwrap();
    let trace_err = trace
        .values()
        .iter()
        .map(|v| (v - 2.0).abs())
        .fold(0.0, f64::max);
    let flow_err = (dn_current_flow(&unit, &full, mob).unwrap() - 2.0).abs();
    let layered = GammaField::new(ScalarField::from_fn(
        g,
        |_, y| if y < 0.5 { 1.0 } else { 4.0 },
    ))
    .unwrap();
    let layer_err = dn_pointwise(&layered, &full, mob)
        .unwrap()
        .values()
        .iter()
        .map(|v| (v - 2.0).abs())
        .fold(0.0, f64::max);
    let t = start.elapsed();
    let pass =
        trace_err <= 1e-8 && flow_err <= 1e-8 && layer_err <= 1e-6 && t < Duration::from_secs(5);
    let detail = format!(
        "unit trace err {trace_err:e}, current flow err {flow_err:e}, two-layer trace err {layer_err:e}, {:.3} s",
        secs(t)
    );
    report(2, "analytic DN value", pass, &detail);
}

fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn round_trip_error(n: usize) -> f64 {
    let lambda_sq = 0.1;
    let v = |x: f64, y: f64| 0.5 + (PI * x).cos() * (PI * y).cos();
    let c = |x: f64, y: f64| {
        2.0 * v(x, y).sinh() + lambda_sq * 2.0 * PI * PI * (PI * x).cos() * (PI * y).cos()
    };
    let g = Grid::new(n).unwrap();
    let gamma = GammaField::new(ScalarField::from_fn(g, |x, y| v(x, y).exp())).unwrap();
    let back = doping_from_gamma(&gamma, lambda_sq, DopingBounds::default()).unwrap();
    max_diff(back.doping.field(), &ScalarField::from_fn(g, c))
}

fn elliptic_error(n: usize) -> f64 {
    let g = Grid::new(n).unwrap();
    let w = |x: f64, y: f64| (PI * x).cos() * (0.5 * PI * y).cos();
    let a = |x: f64, y: f64| 1.0 + 0.5 * x * y;
    let f = |x: f64, y: f64| {
        let wx = -PI * (PI * x).sin() * (0.5 * PI * y).cos();
        let wy = -0.5 * PI * (PI * x).cos() * (0.5 * PI * y).sin();
        a(x, y) * (-1.25 * PI * PI * w(x, y)) + 0.5 * y * wx + 0.5 * x * wy
    };
    let problem = EllipticProblem {
        coefficient: ScalarField::from_fn(g, a),
        dirichlet_bottom: Trace::from_fn(g, Segment::Gamma0, |x| w(x, 0.0)),
        dirichlet_top: Trace::from_fn(g, Segment::Gamma1, |x| w(x, 1.0)),
        source: ScalarField::from_fn(g, f),
    };
    let sol = solve_spd(&assemble(&problem).unwrap(), 1e-12).unwrap();
    max_diff(&sol, &ScalarField::from_fn(g, w))
}

#[test]
fn criterion_3_discretization_order() {
    let (r16, r32) = (round_trip_error(16), round_trip_error(32));
    let (e16, e32) = (elliptic_error(16), elliptic_error(32));
    let (rt, el) = (rate(r16, r32), rate(e16, e32));
    let pass = rt >= 1.8 && el >= 1.8;
    report(
        3,
        "discretization order",
        pass,
        &format!("round-trip rate {rt:.3}, elliptic rate {el:.3}"),
    );
}

const GAMMA_P: f64 = 0.19;
const GAMMA_N: f64 = 5.2;

fn state(phi: ScalarField) -> LevelSetState {
    LevelSetState::new(phi, GAMMA_P, GAMMA_N, 2.0).unwrap()
}

fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let num: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = b.values().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn criterion_4_gradient_oracle() {
    let start = Instant::now();
    let g = Grid::new(8).unwrap();
    let mob = Mobilities::new(1.0, 0.3).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let circle = |rng: &mut ChaCha8Rng| Shape::Circle {
            center: (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)),
            radius: rng.random_range(0.15..0.35),
        };
        let truth = state(init_phi(g, &circle(&mut rng)).unwrap());
        let kind = if seed % 2 == 0 {
            MeasurementKind::Pointwise
        } else {
            MeasurementKind::CurrentFlow
        };
        let profiles = [contact_voltage(rng.random_range(0.3..0.7), 0.2, 1.0, g).unwrap()];
        let data = synthesize_from_gamma(&gamma_from_phi(&truth), mob, &profiles, kind, 0.02, seed)
            .unwrap();
        let mut phi = init_phi(g, &circle(&mut rng)).unwrap();
        for p in phi.values_mut() {
            *p += rng.random_range(-0.02..0.02);
        }
        let s = state(phi);
        let adj = gradient_adjoint(&s, &data, mob).unwrap();
        let fd = gradient_fd(&s, &data, mob, default_fd_step(s.phi())).unwrap();
        assert!(fd.max_abs() > 0.0, "seed {seed}: empty smoothing band");
        worst = worst.max(rel_l2(&adj, &fd));
    }
    let t = start.elapsed();
    let pass = worst <= 1e-4 && t < Duration::from_secs(30);
    report(
        4,
        "gradient oracle",
        pass,
        &format!(
            "worst relative l2 error {worst:e} over 5 seeds, {:.2} s",
            secs(t)
        ),
    );
}

struct Run {
    initial_symdiff: f64,
    final_symdiff: f64,
    monotone: bool,
    result: ReconstructionResult,
}

fn reconstruct_phantom(truth_shape: &Shape, kind: MeasurementKind) -> Run {
    let g = Grid::new(32).unwrap();
    let mob = Mobilities::new(1.0, 0.3).unwrap();
    let truth = state(init_phi(g, truth_shape).unwrap());
    let profiles = [contact_voltage(0.5, 0.25, 1.0, g).unwrap()];
    let data =
        synthesize_from_gamma(&gamma_from_phi(&truth), mob, &profiles, kind, 0.0, 0).unwrap();
    let init = state(
        init_phi(
            g,
            &Shape::Circle {
                center: (0.5, 0.5),
                radius: 0.25,
            },
        )
        .unwrap(),
    );
    let cfg = InversionConfig {
        step_size: 0.5,
        max_iters: 200,
        kind,
        ..InversionConfig::default()
    };
    let result = reconstruct(&data, &cfg, &init, mob, Some(&truth.indicator())).unwrap();
    let monotone = result
        .records
        .windows(2)
        .all(|w| w[1].residual <= w[0].residual);
    Run {
        initial_symdiff: result.records[0].symdiff_error.unwrap(),
        final_symdiff: result.final_record().symdiff_error.unwrap(),
        monotone,
        result,
    }
}

#[test]
fn criterion_5_single_measurement_reconstruction() {
    let start = Instant::now();
    let run = reconstruct_phantom(
        &Shape::HalfPlane {
            axis: Axis::Y,
            offset: 0.5,
        },
        MeasurementKind::Pointwise,
    );
    let t = start.elapsed();
    let reduction = 1.0 - run.final_symdiff / run.initial_symdiff;
    let pass = reduction >= 0.5 && run.monotone && t < Duration::from_secs(120);
    let detail = format!(
        "symdiff {:.4} -> {:.4} (reduction {:.1}%), residual {:e} -> {:e}, {} iterations, monotone {}, {:.1} s",
        run.initial_symdiff,
        run.final_symdiff,
        100.0 * reduction,
        run.result.records[0].residual,
        run.result.final_record().residual,
        run.result.iterations,
        run.monotone,
        secs(t)
    );
    report(5, "single-measurement reconstruction", pass, &detail);
}

#[test]
fn criterion_6_measurement_information_ordering() {
    let phantoms = [
        (
            "half-plane",
            Shape::HalfPlane {
                axis: Axis::Y,
                offset: 0.5,
            },
        ),
        ("l-shape", Shape::l_shape(0.2, 0.2, 0.8, 0.8, 0.5, 0.5)),
        (
            "disc",
            Shape::Circle {
                center: (0.4, 0.6),
                radius: 0.3,
            },
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, shape) in &phantoms {
        let pw = reconstruct_phantom(shape, MeasurementKind::Pointwise).final_symdiff;
        let cf = reconstruct_phantom(shape, MeasurementKind::CurrentFlow).final_symdiff;
        pass &= cf >= pw;
        parts.push(format!("{name}: current-flow {cf:.4} vs pointwise {pw:.4}"));
    }
    report(
        6,
        "measurement-information ordering",
        pass,
        &parts.join("; "),
    );
}

fn run_invert(config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_dopinv"))
        .args(["invert", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn same_files(a: &Path, b: &Path) -> bool {
    let mut names: Vec<_> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    !names.is_empty()
        && names
            .iter()
            .all(|n| fs::read(a.join(n)).ok() == fs::read(b.join(n)).ok())
}

#[test]
fn criterion_7_determinism_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "grid_n = 16\nphantom = lshape 0.2 0.2 0.8 0.8 0.5 0.5\nnoise_level = 0.01\nseed = 5\nmax_iters = 30\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let codes = (run_invert(&cfg, &a), run_invert(&cfg, &b));
    let identical = codes.0 == codes.1 && same_files(&a, &b);

    let mut exact = true;
    for name in ["phi.txt", "gamma.txt", "indicator.txt", "doping.txt"] {
        let text = fs::read_to_string(a.join(name)).unwrap();
        exact &= ScalarField::from_text(&text).unwrap().to_text() == text;
    }
    let g = Grid::new(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let field = ScalarField::from_fn(g, |x, y| (x - y) * 1e-7 + x.exp() * y.sin());
    let noisy = ScalarField::new(
        g,
        (0..g.len()).map(|_| rng.random_range(-1e9..1e9)).collect(),
    )
    .unwrap();
    for f in [&field, &noisy] {
        exact &= ScalarField::from_text(&f.to_text()).unwrap() == *f;
    }
    let trace = Trace::from_fn(g, Segment::Gamma1, |x| x.powi(3) / 3.0);
    exact &= Trace::from_csv(&trace.to_csv(), Segment::Gamma1).unwrap() == trace;
    let mob = Mobilities::new(1.0, 0.3).unwrap();
    let gamma = GammaField::new(field.map(f64::exp)).unwrap();
    let profiles = [
        contact_voltage(0.5, 0.25, 1.0, g).unwrap(),
        contact_voltage(0.2, 0.1, -0.5, g).unwrap(),
    ];
    for kind in [MeasurementKind::Pointwise, MeasurementKind::CurrentFlow] {
        let set = synthesize_from_gamma(&gamma, mob, &profiles, kind, 0.05, 3).unwrap();
        let sub = dir.path().join(kind.as_str());
        fs::create_dir_all(&sub).unwrap();
        let manifest = set.write_to_dir(&sub).unwrap();
        exact &= MeasurementSet::read_manifest(&manifest).unwrap() == set;
    }
    let pass = identical && exact;
    let detail = format!("repeated invert runs identical: {identical} (exit codes {codes:?}); round trips exact: {exact}");
    report(7, "determinism and format stability", pass, &detail);
}
