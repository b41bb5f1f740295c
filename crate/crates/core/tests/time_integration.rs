mod common;

use common::{maxwellian, relative_sup};
use esbgk_core::bench::{init_riemann, ProblemConfig};
use esbgk_core::grid::{Boundary, PhaseField, SpatialGrid, VelocityGrid};
use esbgk_core::moments::{ModelParams, TauLaw};
use esbgk_core::projection::WeightKind;
use esbgk_core::reconstruction::ReconstructionKind;
use esbgk_core::relaxation::ProjectionMode;
use esbgk_core::time_integration::{step_count, BdfScheme, BdfStartup, DirkTableau, Integrator, SchemeKind, Solver, SolverState};
use esbgk_core::SolverError;

const LOCAL: ProjectionMode = ProjectionMode::On(WeightKind::LocalGaussian);

/// Space-homogeneous, strongly anisotropic initial data on a small periodic grid.
fn homogeneous(nu: f64) -> (Solver, PhaseField) {
    let spatial = SpatialGrid::new(0.0, 1.0, 4, Boundary::Periodic).unwrap();
    let vg = VelocityGrid::new(7.0, 24, 2).unwrap();
    let params = ModelParams::new(nu, 1.0, TauLaw::Constant { tau: 1.0 }, 2).unwrap();
    let solver = Solver::new(spatial.clone(), vg.clone(), params, ReconstructionKind::Qcweno23, LOCAL).unwrap();
    let mut values = vec![0.0; vg.len() * 4];
    for (j, v) in vg.nodes().iter().enumerate() {
        let f = 0.6 * maxwellian(1.0, &[0.8, 0.0], 0.5, v, 2) + 0.4 * maxwellian(1.0, &[-0.6, 0.3], 1.2, v, 2);
        values[j * 4..(j + 1) * 4].fill(f);
    }
    (solver, PhaseField::from_values(spatial, vg, values).unwrap())
}

fn run(solver: &Solver, field: &PhaseField, integrator: &Integrator, dt: f64, t_final: f64) -> Vec<f64> {
    solver.run(field.clone(), integrator, dt, t_final, |_, _| {}).unwrap().field.values
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn observed_order(solver: &Solver, field: &PhaseField, integrator: &Integrator) -> f64 {
    let t = 0.8;
    let f: Vec<Vec<f64>> = [0.05, 0.025, 0.0125].iter().map(|&dt| run(solver, field, integrator, dt, t)).collect();
    (sup_diff(&f[0], &f[1]) / sup_diff(&f[1], &f[2])).log2()
}

#[test]
fn temporal_orders_on_homogeneous_relaxation() {
    // nu = 0 keeps the Gaussian fixed, so the step is a linear ODE solve
    let (solver, field) = homogeneous(0.0);
    let cases = [
        (Integrator::Dirk(DirkTableau::first_order()), 1.0),
        (Integrator::Dirk(DirkTableau::dirk2()), 2.0),
        (Integrator::Dirk(DirkTableau::dirk3()), 3.0),
        (Integrator::Bdf(BdfScheme::bdf2()), 2.0),
        (Integrator::Bdf(BdfScheme::bdf3()), 3.0),
    ];
    for (integrator, order) in cases {
        let p = observed_order(&solver, &field, &integrator);
        assert!((p - order).abs() < 0.2, "{integrator:?}: observed {p}, expected {order}");
    }
}

#[test]
fn es_bgk_anisotropy_relaxes_at_the_prandtl_rate() {
    // for a homogeneous gas the stress anisotropy decays like exp(-(1 - nu) tau t / eps)
    let (solver, field) = homogeneous(-0.5);
    let t = 1.0;
    let out = solver.run(field.clone(), &Integrator::Dirk(DirkTableau::dirk3()), 0.01, t, |_, _| {}).unwrap();
    let aniso = |f: &PhaseField| {
        let m = esbgk_core::moments::compute_moments(&f.cell_slice(0), &f.velocity).unwrap();
        m.stress.m[0][0] - m.stress.m[1][1]
    };
    let ratio = aniso(&out.field) / aniso(&field);
    let expect = (-1.5f64 * t).exp();
    assert!((ratio - expect).abs() < 1e-3 * expect, "{ratio} vs {expect}");
}

#[test]
fn global_maxwellian_is_stationary() {
    let spatial = SpatialGrid::new(-1.0, 1.0, 16, Boundary::Periodic).unwrap();
    let vg = VelocityGrid::new(8.0, 32, 2).unwrap();
    let mut values = vec![0.0; vg.len() * 16];
    for (j, v) in vg.nodes().iter().enumerate() {
        values[j * 16..(j + 1) * 16].fill(maxwellian(1.3, &[0.4, 0.0], 0.9, v, 2));
    }
    let field = PhaseField::from_values(spatial.clone(), vg.clone(), values.clone()).unwrap();
    let params = ModelParams::new(-1.0, 1e-3, TauLaw::Density { c: 1.0 }, 2).unwrap();
    for kind in SchemeKind::ALL {
        let solver = Solver::new(spatial.clone(), vg.clone(), params, kind.default_reconstruction(), LOCAL).unwrap();
        let out = run(&solver, &field, &kind.integrator(BdfStartup::SameOrderDirk), 0.05, 0.3);
        assert!(relative_sup(&out, &values) < 1e-12, "{kind:?}");
    }
}

#[test]
fn one_step_schemes_coincide() {
    let mut c = ProblemConfig::riemann(0.1, SchemeKind::FirstOrder);
    c.n_x = 40;
    c.n_v = 16;
    let spatial = c.spatial_grid().unwrap();
    let vg = c.velocity_grid().unwrap();
    let field = init_riemann(&spatial, &vg).unwrap();
    let solver = Solver::new(spatial, vg, c.model_params().unwrap(), ReconstructionKind::Linear, LOCAL).unwrap();
    let dt = c.time_step().unwrap();
    let mut a = SolverState::new(field.clone());
    let mut b = SolverState::new(field.clone());
    let mut e = SolverState::new(field);
    for _ in 0..4 {
        solver.step_first_order(&mut a, dt).unwrap();
        solver.step_dirk(&mut b, &DirkTableau::first_order(), dt).unwrap();
        solver.step_bdf(&mut e, &BdfScheme::bdf1(), dt).unwrap();
    }
    assert!(relative_sup(&b.field.values, &a.field.values) <= 1e-14);
    assert!(relative_sup(&e.field.values, &a.field.values) <= 1e-14);
}

#[test]
fn bdf_needs_history() {
    let (solver, field) = homogeneous(0.0);
    let mut state = SolverState::new(field);
    let err = solver.step_bdf(&mut state, &BdfScheme::bdf3(), 0.1).unwrap_err();
    assert!(matches!(err, SolverError::InsufficientHistory { needed: 2, available: 0 }));
    // the generic step starts up with a one-step method and then switches
    let integrator = Integrator::Bdf(BdfScheme::bdf3());
    let methods: Vec<&str> = (0..4).map(|_| solver.step(&mut state, &integrator, 0.1).unwrap().method).collect();
    assert_eq!(methods[3], "bdf");
    assert_ne!(methods[0], "bdf");
    assert_ne!(methods[1], "bdf");
}

#[test]
fn changing_the_step_restarts_bdf() {
    let (solver, field) = homogeneous(0.0);
    let integrator = Integrator::Bdf(BdfScheme::bdf2().with_startup(BdfStartup::FirstOrder));
    let mut state = SolverState::new(field);
    solver.step(&mut state, &integrator, 0.1).unwrap();
    assert_eq!(solver.step(&mut state, &integrator, 0.1).unwrap().method, "bdf");
    assert_ne!(solver.step(&mut state, &integrator, 0.05).unwrap().method, "bdf");
}

#[test]
fn run_lands_on_the_final_time() {
    let (solver, field) = homogeneous(0.0);
    let mut steps = 0;
    let state = solver.run(field, &Integrator::Dirk(DirkTableau::dirk2()), 0.3, 1.0, |_, _| steps += 1).unwrap();
    assert_eq!(steps, 4);
    assert!((state.time() - 1.0).abs() < 1e-15);
    assert_eq!(step_count(1.0, 0.25), 4);
    assert_eq!(step_count(1.0 + 1e-13, 0.25), 4);
    assert_eq!(step_count(0.0, 0.25), 0);
    assert!(solver.run(state.field, &Integrator::FirstOrder, 0.1, 0.5, |_, _| {}).is_err());
}

#[test]
fn errors_carry_the_step() {
    let (solver, field) = homogeneous(0.0);
    let spatial = SpatialGrid::new(0.0, 2.0, 4, Boundary::Periodic).unwrap();
    let wrong = PhaseField::from_values(spatial, field.velocity.clone(), field.values.clone()).unwrap();
    let err = solver.run(wrong, &Integrator::FirstOrder, 0.1, 0.2, |_, _| {}).unwrap_err();
    assert!(matches!(err, SolverError::AtStep { step: 1, .. }), "{err:?}");
}

#[test]
fn periodic_runs_conserve() {
    let (solver, field) = homogeneous(-0.5);
    for kind in SchemeKind::ALL {
        let state = solver
            .run(field.clone(), &kind.integrator(BdfStartup::SameOrderDirk), 0.1, 1.0, |_, _| {})
            .unwrap();
        let first = state.ledger.initial();
        let last = state.ledger.last();
        for c in [0, 2] {
            assert!((last[c] - first[c]).abs() < 1e-13 * first[c].abs(), "{kind:?} component {c}");
        }
        for d in &state.ledger.defects {
            assert!(d.iter().all(|x| x.abs() < 1e-13));
        }
    }
}
