use stratwave::dirac::{constraints, reconstruct_constrained};
use stratwave::energetics::{CcFields, CcParams, SgnParams};
use stratwave::models::{build_model, HamiltonianModel, SgnCanonicalModel, SgnClassicModel, TwoLayerModel};
use stratwave::timeloop::{run, step, IntegratorConfig, Method, DIAGNOSTICS_HEADER};
use stratwave::verify::{gaussian, integrator_comparison, model_gradient_mismatch, random_field, two_layer_conservation_setup};
use stratwave::{Error, Field, Grid, ModelState, PhysicalParams, ScalingRegime, Spectral};

fn max_gap(a: &[Field], b: &[Field]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).max_abs()).fold(0.0, f64::max)
}

#[test]
fn midpoint_drift_is_second_order_and_rk4_drift_is_secular() {
    let (im_coarse, rk_short) = integrator_comparison(0.2, 100.0).unwrap();
    let (im_fine, _) = integrator_comparison(0.1, 100.0).unwrap();
    let ratio = im_coarse / im_fine;
    assert!((3.0..5.0).contains(&ratio), "midpoint dt-halving ratio {ratio}");
    let (_, rk_long) = integrator_comparison(0.2, 400.0).unwrap();
    let growth = rk_long / rk_short;
    assert!((3.0..5.0).contains(&growth), "rk4 growth over 4x time {growth}");
}

#[test]
fn midpoint_is_time_reversible() {
    let (model, ops, state) = two_layer_conservation_setup().unwrap();
    let cfg = IntegratorConfig::new(Method::ImplicitMidpoint, 0.05, 1.0);
    let start: Vec<Field> = state.components().into_iter().cloned().collect();
    let mut s = start.clone();
    for _ in 0..20 {
        s = step(&model, &ops, &s, &cfg, cfg.dt).unwrap().0;
    }
    assert!(max_gap(&s, &start) > 1e-4);
    for _ in 0..20 {
        s = step(&model, &ops, &s, &cfg, -cfg.dt).unwrap().0;
    }
    assert!(max_gap(&s, &start) < 1e-11, "{:e}", max_gap(&s, &start));
}

#[test]
fn canonical_and_lie_poisson_energies_differ_at_order_eps4() {
    let ops = Spectral::new(Grid::new(64, 40.0).unwrap());
    let eta = gaussian(ops.grid(), 0.1, 3.0, 20.0) + 1.0;
    let mu = gaussian(ops.grid(), 0.05, 3.0, 20.0);
    let gaps: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| {
            let p = SgnParams { rho: 1.0, g: 1.0, depth: 1.0, eps };
            let m = stratwave::kinematics::m_from_mu(&eta, &mu);
            let ec = SgnCanonicalModel { params: p }.energy(&ops, &[eta.clone(), mu.clone()]).unwrap().total;
            let el = SgnClassicModel { params: p }.energy(&ops, &[eta.clone(), m]).unwrap().total;
            (ec - el).abs()
        })
        .collect();
    for w in gaps.windows(2) {
        let r = w[0] / w[1];
        assert!((11.0..21.0).contains(&r), "{gaps:?}");
    }
}

#[test]
fn every_runnable_model_has_consistent_gradient() {
    let p = PhysicalParams::new(1.0, 1.5, 1.3, 1.0, 1.0, 8.0).unwrap();
    let lower = ScalingRegime::lower_layer(&p);
    let upper = ScalingRegime::upper_layer(&p, 1.0).unwrap();
    let ops = Spectral::new(Grid::new(64, 30.0).unwrap());
    let f = |seed, mean, amp| random_field(ops.grid(), seed, mean, amp, 4);
    for kind in stratwave::domain::ModelKind::ALL {
        let regime = if kind == stratwave::domain::ModelKind::DeepWater { upper } else { lower };
        let model = build_model(kind, &p, &regime).unwrap();
        let state: Vec<Field> = match kind.id() {
            "two_layer" => vec![f(1, 0.0, 0.2), f(2, 0.0, 0.5)],
            "cc_four" => vec![f(3, 1.3, 0.2), f(4, 0.0, 0.5), f(5, 1.0, 0.2), f(6, 0.0, 0.5)],
            _ => vec![f(7, 1.0, 0.2), f(8, 0.0, 0.5)],
        };
        let mismatch = model_gradient_mismatch(model.as_ref(), &ops, &state).unwrap();
        assert!(mismatch < 1e-6, "{}: {mismatch:e}", kind.id());
    }
}

#[test]
fn reconstructed_states_satisfy_both_constraints_to_order_eps4() {
    let ops = Spectral::new(Grid::new(64, 30.0).unwrap());
    let z = random_field(ops.grid(), 1, 0.0, 0.2, 4);
    let s = random_field(ops.grid(), 2, 0.0, 0.5, 4);
    let mut last = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05] {
        let p = CcParams { rho1: 1.0, rho2: 1.5, g: 1.0, h1: 1.3, h2: 1.0, eps };
        let st = reconstruct_constrained(&ops, &z, &s, &p).unwrap().into_components();
        let c = constraints(&ops, CcFields::from_slice(&st), &p).unwrap();
        assert!(c.max_phi1() < 1e-13);
        let phi2 = c.max_phi2();
        assert!(phi2 < last / 10.0, "{phi2:e} after {last:e}");
        last = phi2;
    }
}

#[test]
fn rest_run_writes_flat_diagnostics() {
    let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 5.0).unwrap();
    let r = ScalingRegime::lower_layer(&p);
    let model = TwoLayerModel::new(&p, &r).unwrap();
    let ops = Spectral::new(Grid::new(32, 40.0).unwrap());
    let st = ModelState::two_layer(Field::zeros(32), Field::zeros(32), &p, &r).unwrap();
    let out = run(&model, &ops, &st, &IntegratorConfig::new(Method::ImplicitMidpoint, 0.1, 1.0)).unwrap();
    assert_eq!(out.diagnostics.relative_energy_drift(), 0.0);
    let mut buf = Vec::new();
    out.diagnostics.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(DIAGNOSTICS_HEADER));
    assert_eq!(lines.count(), 11);
}

#[test]
fn four_field_system_is_not_evolved_directly() {
    let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 5.0).unwrap();
    let r = ScalingRegime::lower_layer(&p);
    let model = build_model(stratwave::domain::ModelKind::CcFour, &p, &r).unwrap();
    let ops = Spectral::new(Grid::new(32, 40.0).unwrap());
    let one = Field::constant(32, 1.0);
    let st = ModelState::from_components(
        stratwave::domain::ModelKind::CcFour,
        vec![&one * 1.5, Field::zeros(32), one, Field::zeros(32)],
    )
    .unwrap();
    let err = run(model.as_ref(), &ops, &st, &IntegratorConfig::new(Method::Rk4, 0.1, 1.0)).unwrap_err();
    assert!(matches!(err.error, Error::InvalidParameter { name: "model", .. }));
}
