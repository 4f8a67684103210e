use dopinv_core::elliptic::flux_gamma1;
use dopinv_core::forward::{
    contact_voltage, dn_current_flow, dn_pointwise, equilibrium_gamma, synthesize_data,
    synthesize_from_gamma, ContinuityModel, DopingBounds, DopingField, GammaField, Measurement,
    MeasurementKind, Mobilities,
};
use dopinv_core::grid::{Grid, ScalarField, Segment, Trace};
use proptest::prelude::*;

fn gamma_field(g: Grid, seed: &[f64]) -> GammaField {
    let field = ScalarField::from_fn(g, |x, y| {
        (seed[0] * (3.0 * x).sin() + seed[1] * (2.0 * y).cos() + seed[2] * x * y).exp()
    });
    GammaField::new(field).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pointwise_map_is_linear_in_voltage(
        seed in prop::collection::vec(-1.0..1.0f64, 3),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
        c1 in 0.2..0.8f64,
        c2 in 0.2..0.8f64,
    ) {
        let g = Grid::new(12).unwrap();
        let gamma = gamma_field(g, &seed);
        let mob = Mobilities::new(1.0, 0.3).unwrap();
        let u1 = contact_voltage(c1, 0.15, 1.0, g).unwrap();
        let u2 = contact_voltage(c2, 0.3, -0.5, g).unwrap();
        let combined = dn_pointwise(&gamma, &u1.combine(alpha, &u2, beta), mob).unwrap();
        let t1 = dn_pointwise(&gamma, &u1, mob).unwrap();
        let t2 = dn_pointwise(&gamma, &u2, mob).unwrap();
        let expected: Vec<f64> = t1.values().iter().zip(t2.values()).map(|(a, b)| alpha * a + beta * b).collect();
        prop_assert!(close(combined.values(), &expected, 1e-9));
    }

    #[test]
    fn electron_part_scales_with_mobility(seed in prop::collection::vec(-1.0..1.0f64, 3), s in 0.1..10.0f64) {
        let g = Grid::new(10).unwrap();
        let gamma = gamma_field(g, &seed);
        let u = contact_voltage(0.5, 0.25, 1.0, g).unwrap();
        let electrons = |mu_n: f64| {
            let model = ContinuityModel::new(&gamma, Mobilities::new(mu_n, 1.0).unwrap()).unwrap();
            let state = model.solve(&u).unwrap();
            let ground = Trace::zeros(g, Segment::Gamma1);
            let flux = flux_gamma1(&state.u, model.electron_coefficient(), &ground).unwrap();
            (flux.values().to_vec(), state.u)
        };
        let (base, u_base) = electrons(1.0);
        let (scaled, u_scaled) = electrons(s);
        let expected: Vec<f64> = base.iter().map(|v| s * v).collect();
        prop_assert!(close(&scaled, &expected, 1e-9));
        prop_assert!(close(u_scaled.values(), u_base.values(), 1e-9));
    }

    #[test]
    fn reciprocity_under_gamma_inversion(seed in prop::collection::vec(-1.0..1.0f64, 3), mu_p in 0.1..3.0f64) {
        let g = Grid::new(10).unwrap();
        let gamma = gamma_field(g, &seed);
        let inverse = GammaField::new(gamma.field().map(|v| 1.0 / v)).unwrap();
        let u = contact_voltage(0.4, 0.2, 1.0, g).unwrap();
        let minus_u = u.combine(-1.0, &u, 0.0);
        let t = dn_pointwise(&gamma, &u, Mobilities::new(1.0, mu_p).unwrap()).unwrap();
        let swapped = Mobilities::new(mu_p, 1.0).unwrap();
        let same = dn_pointwise(&inverse, &u, swapped).unwrap();
        prop_assert!(close(same.values(), t.values(), 1e-9));
        let flipped = dn_pointwise(&inverse, &minus_u, swapped).unwrap();
        let negated: Vec<f64> = t.values().iter().map(|v| -v).collect();
        prop_assert!(close(flipped.values(), &negated, 1e-9));
    }
}

#[test]
fn layered_current_flow_matches_series_conductance() {
    let g = Grid::new(32).unwrap();
    let (lo, hi, depth) = (0.3, 5.0, 0.625);
    let gamma = GammaField::new(ScalarField::from_fn(
        g,
        |_, y| if y < depth { lo } else { hi },
    ))
    .unwrap();
    let mob = Mobilities::new(1.0, 0.3).unwrap();
    let full = contact_voltage(0.5, 0.6, 1.0, g).unwrap();
    let series = |a: f64, b: f64| 1.0 / (depth / a + (1.0 - depth) / b);
    let expected = mob.mu_n * series(lo, hi) + mob.mu_p * series(1.0 / lo, 1.0 / hi);
    let flow = dn_current_flow(&gamma, &full, mob).unwrap();
    assert!(
        (flow - expected).abs() <= 1e-9 * expected,
        "{flow} vs {expected}"
    );
}

#[test]
fn noise_has_requested_relative_size() {
    let g = Grid::new(32).unwrap();
    let c = ScalarField::from_fn(g, |_, y| if y > 0.5 { 5.0 } else { -5.0 });
    let doping = DopingField::new(c, DopingBounds::default()).unwrap();
    let profiles = [contact_voltage(0.5, 0.25, 1.0, g).unwrap()];
    let mob = Mobilities::new(1.0, 0.3).unwrap();
    let gamma = equilibrium_gamma(&doping, 1e-3).unwrap();
    let kind = MeasurementKind::Pointwise;
    assert_eq!(
        synthesize_data(&doping, 1e-3, mob, &profiles, kind, 0.01, 7).unwrap(),
        synthesize_from_gamma(&gamma, mob, &profiles, kind, 0.01, 7).unwrap()
    );
    let mut total = 0.0;
    for seed in 0..100 {
        let set = synthesize_from_gamma(&gamma, mob, &profiles, kind, 0.01, seed).unwrap();
        let entry = &set.entries()[0];
        let (Measurement::Pointwise(clean), Measurement::Pointwise(noisy)) =
            (&entry.clean, &entry.noisy)
        else {
            panic!("pointwise data expected");
        };
        let ms: f64 = clean
            .values()
            .iter()
            .zip(noisy.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / g.n() as f64;
        let relative = ms.sqrt() / clean.max_abs();
        assert!(
            (0.005..=0.02).contains(&relative),
            "seed {seed}: {relative}"
        );
        total += relative;
    }
    let mean = total / 100.0;
    assert!((mean - 0.01).abs() < 0.001, "{mean}");
}
