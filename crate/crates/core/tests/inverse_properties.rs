use dopinv_core::forward::{
    contact_voltage, synthesize_from_gamma, MeasurementKind, MeasurementSet, Mobilities,
};
use dopinv_core::grid::{Grid, ScalarField};
use dopinv_core::inverse::{
    default_fd_step, gamma_from_phi, gradient_adjoint, gradient_fd, init_phi, reconstruct, Axis,
    InversionConfig, LevelSetState, Shape, StopReason,
};
use proptest::prelude::*;

const GAMMA_P: f64 = 0.2;
const GAMMA_N: f64 = 5.0;

fn state(phi: ScalarField) -> LevelSetState {
    LevelSetState::new(phi, GAMMA_P, GAMMA_N, 2.0).unwrap()
}

fn mob() -> Mobilities {
    Mobilities::new(1.0, 0.3).unwrap()
}

fn data_for(truth: &LevelSetState, kind: MeasurementKind, noise: f64, seed: u64) -> MeasurementSet {
    let g = truth.grid();
    let profiles = [
        contact_voltage(0.5, 0.25, 1.0, g).unwrap(),
        contact_voltage(0.25, 0.15, 1.0, g).unwrap(),
    ];
    synthesize_from_gamma(&gamma_from_phi(truth), mob(), &profiles, kind, noise, seed).unwrap()
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn adjoint_gradient_matches_finite_differences(
        cx in 0.3..0.7f64,
        cy in 0.3..0.7f64,
        r in 0.15..0.35f64,
        wiggle in -0.05..0.05f64,
        noise in 0.0..0.05f64,
        seed in 0..1000u64,
        current_flow in any::<bool>(),
    ) {
        let g = Grid::new(8).unwrap();
        let kind = if current_flow { MeasurementKind::CurrentFlow } else { MeasurementKind::Pointwise };
        let truth = state(init_phi(g, &Shape::HalfPlane { axis: Axis::Y, offset: 0.4 }).unwrap());
        let data = data_for(&truth, kind, noise, seed);
        let phi = ScalarField::from_fn(g, |x, y| r - (x - cx).hypot(y - cy) + wiggle * (7.0 * x + 3.0 * y).sin());
        let s = state(phi);
        let fd = gradient_fd(&s, &data, mob(), default_fd_step(s.phi())).unwrap();
        let adj = gradient_adjoint(&s, &data, mob()).unwrap();
        prop_assume!(fd.max_abs() > 0.0);
        prop_assert!(rel_l2(&adj, &fd) <= 1e-4);
    }

    #[test]
    fn saturated_shift_leaves_gamma_outside_band(shift in 0.0..2.0f64) {
        let g = Grid::new(12).unwrap();
        let s = state(init_phi(g, &Shape::Circle { center: (0.5, 0.5), radius: 0.3 }).unwrap());
        let eps = s.eps();
        let c = 2.0 * eps + s.phi().max_abs() + shift;
        let before = gamma_from_phi(&s);
        let after = gamma_from_phi(&s.with_phi(s.phi().map(|p| p + c)));
        for ((p, a), b) in s.phi().values().iter().zip(before.field().values()).zip(after.field().values()) {
            if *p >= eps {
                prop_assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn zero_residual_gradients_vanish() {
    let g = Grid::new(8).unwrap();
    let truth = state(
        init_phi(
            g,
            &Shape::Circle {
                center: (0.4, 0.6),
                radius: 0.3,
            },
        )
        .unwrap(),
    );
    let data = data_for(&truth, MeasurementKind::Pointwise, 0.0, 0);
    assert!(gradient_adjoint(&truth, &data, mob()).unwrap().max_abs() <= 1e-10);
    let fd = gradient_fd(&truth, &data, mob(), default_fd_step(truth.phi())).unwrap();
    assert!(fd.max_abs() <= 1e-10, "{}", fd.max_abs());
}

#[test]
fn accepted_residuals_do_not_increase() {
    let g = Grid::new(16).unwrap();
    let truth = state(
        init_phi(
            g,
            &Shape::Circle {
                center: (0.4, 0.6),
                radius: 0.3,
            },
        )
        .unwrap(),
    );
    let data = data_for(&truth, MeasurementKind::Pointwise, 0.0, 0);
    let init = state(
        init_phi(
            g,
            &Shape::Circle {
                center: (0.5, 0.5),
                radius: 0.2,
            },
        )
        .unwrap(),
    );
    let cfg = InversionConfig {
        max_iters: 40,
        reinit_every: 10,
        ..Default::default()
    };
    let r = reconstruct(&data, &cfg, &init, mob(), Some(&truth.indicator())).unwrap();
    assert!(r.records.len() > 1);
    assert!(r.records.windows(2).all(|w| w[1].residual <= w[0].residual));
    assert!(r.final_record().residual < r.records[0].residual);
    assert!(r.records.iter().all(|rec| rec.symdiff_error.is_some()));
}

#[test]
fn reconstruction_is_deterministic() {
    let g = Grid::new(12).unwrap();
    let truth = state(init_phi(g, &Shape::l_shape(0.2, 0.2, 0.8, 0.8, 0.5, 0.5)).unwrap());
    let data = data_for(&truth, MeasurementKind::Pointwise, 0.01, 3);
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
        max_iters: 15,
        reinit_every: 5,
        ..Default::default()
    };
    let a = reconstruct(&data, &cfg, &init, mob(), None).unwrap();
    let b = reconstruct(&data, &cfg, &init, mob(), None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.convergence_csv(), b.convergence_csv());
}

#[test]
fn discrepancy_stop_respects_noise_bound() {
    let g = Grid::new(16).unwrap();
    let truth = state(
        init_phi(
            g,
            &Shape::HalfPlane {
                axis: Axis::X,
                offset: 0.45,
            },
        )
        .unwrap(),
    );
    let data = data_for(&truth, MeasurementKind::Pointwise, 0.02, 11);
    let init = state(
        init_phi(
            g,
            &Shape::HalfPlane {
                axis: Axis::X,
                offset: 0.55,
            },
        )
        .unwrap(),
    );
    let cfg = InversionConfig::default();
    let r = reconstruct(&data, &cfg, &init, mob(), None).unwrap();
    assert_eq!(r.stop_reason, StopReason::Discrepancy);
    assert!(r.final_record().residual <= cfg.discrepancy_tau * data.noise_norm());
    assert!(r.records[0].residual > cfg.discrepancy_tau * data.noise_norm());
}
