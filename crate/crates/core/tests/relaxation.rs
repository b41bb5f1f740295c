mod common;

use common::{discrete_invariants, maxwellian};
use esbgk_core::grid::VelocityGrid;
use esbgk_core::moments::{ModelParams, TauLaw, Tensor};
use esbgk_core::projection::WeightKind;
use esbgk_core::relaxation::{
    convex_update, effective_tensor, field_raw_moments, implicit_stage_update, modified_nu, ProjectionMode, Relaxation, StageContext,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Velocity-major field of `n` cells, each a perturbed, drifting Maxwellian.
fn perturbed_field(vg: &VelocityGrid, n: usize, seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<(f64, [f64; 3], f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.5..2.0),
                [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), 0.0],
                rng.gen_range(0.6..1.4),
            )
        })
        .collect();
    let mut values = vec![0.0; vg.len() * n];
    for (j, v) in vg.nodes().iter().enumerate() {
        for (i, (rho, u, t)) in states.iter().enumerate() {
            let m = maxwellian(*rho, u, *t, v, vg.dim);
            // anisotropic bump keeps the stress away from isotropy
            let bump = 1.0 + amplitude * (v[0] * v[0] - v[1] * v[1]) * (-0.2 * v[0] * v[0]).exp();
            values[j * n + i] = m * bump.max(0.0);
        }
    }
    values
}

fn cell_invariants(values: &[f64], n: usize, cell: usize, vg: &VelocityGrid) -> Vec<f64> {
    let slice: Vec<f64> = (0..vg.len()).map(|j| values[j * n + cell]).collect();
    discrete_invariants(vg.nodes(), vg.dim, vg.cell_volume(), &slice)
}

fn solver(epsilon: f64, projection: ProjectionMode) -> Relaxation {
    let vg = VelocityGrid::new(8.0, 32, 2).unwrap();
    let params = ModelParams::new(-1.0, epsilon, TauLaw::Density { c: 1.3 }, 2).unwrap();
    Relaxation::new(vg, params, projection).unwrap()
}

#[test]
fn modified_nu_limits() {
    assert_eq!(modified_nu(-1.0, 1.0, 2.0, 0.0), -1.0);
    assert!((modified_nu(-1.0, 1e12, 2.0, 0.1) + 1.0).abs() < 1e-12);
    assert!(modified_nu(-1.0, 1e-14, 2.0, 0.1).abs() < 1e-12);
    // closed form: eps nu / (eps + (1 - nu) tau a dt)
    let expect = 0.3 * -0.5 / (0.3 + 1.5 * 2.0 * 0.25);
    assert!((modified_nu(-0.5, 0.3, 2.0, 0.25) - expect).abs() < 1e-16);
}

#[test]
fn effective_tensor_is_isotropic_when_nu_vanishes() {
    let rho = 2.0;
    let u = [0.5, -0.25, 0.0];
    let theta = Tensor::from_rows(2, &[&[1.5, 0.2], &[0.2, 0.5]]);
    let sigma = theta.add(&Tensor::outer(2, &u)).scale(rho);
    let t = effective_tensor(1.0, 0.0, &sigma, rho, &u).unwrap();
    assert!(t.tensor.sub(&Tensor::identity(2)).max_abs() < 1e-15);
    let t = effective_tensor(1.0, 1.0, &sigma, rho, &u).unwrap();
    assert!(t.tensor.sub(&theta).max_abs() < 1e-14);
}

#[test]
fn convex_update_matches_the_fraction() {
    let ctx = StageContext::new(0.1, 0.05).unwrap();
    let tau = 3.0;
    let f = [0.0, 0.4, 1.0, 2.5];
    let g = [1.0, 0.4, 0.2, 0.0];
    let out = implicit_stage_update(&f, &g, tau, &ctx);
    for k in 0..4 {
        let exact = (0.05 * f[k] + tau * 0.1 * g[k]) / (0.05 + tau * 0.1);
        assert!((out[k] - exact).abs() < 1e-15);
    }
    assert!(StageContext::new(-1.0, 1.0).is_err());
    assert!(StageContext::new(1.0, 0.0).is_err());
}

#[test]
fn stage_preserves_cell_invariants() {
    let n = 24;
    for kind in [WeightKind::LocalGaussian, WeightKind::ReferenceMaxwellian, WeightKind::Uniform] {
        let r = solver(0.01, ProjectionMode::On(kind));
        let ft = perturbed_field(&r.vgrid, n, 5, 0.05);
        let out = r.stage(&ft, n, 0.02, false).unwrap();
        for cell in 0..n {
            let before = cell_invariants(&ft, n, cell, &r.vgrid);
            let after = cell_invariants(&out.values, n, cell, &r.vgrid);
            for (a, b) in after.iter().zip(&before) {
                assert!((a - b).abs() < 1e-13 * b.abs().max(1.0), "{kind:?} cell {cell}: {a} vs {b}");
            }
        }
        assert!(out.projection_residual < 1e-13);
    }
}

#[test]
fn unprojected_gaussians_miss_the_invariants() {
    let n = 8;
    let r = solver(1e-8, ProjectionMode::Off);
    // a coarse velocity grid makes the quadrature error visible
    let coarse = Relaxation::new(VelocityGrid::new(5.0, 10, 2).unwrap(), r.params, ProjectionMode::Off).unwrap();
    let ft = perturbed_field(&coarse.vgrid, n, 9, 0.05);
    let out = coarse.stage(&ft, n, 0.1, false).unwrap();
    assert!(out.projection_residual > 1e-6, "{}", out.projection_residual);
    let drift = cell_invariants(&out.values, n, 3, &coarse.vgrid)
        .iter()
        .zip(cell_invariants(&ft, n, 3, &coarse.vgrid))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift > 1e-6);
}

#[test]
fn maxwellian_cells_are_fixed_points() {
    let n = 10;
    let r = solver(0.1, ProjectionMode::On(WeightKind::LocalGaussian));
    let ft = perturbed_field(&r.vgrid, n, 2, 0.0);
    let out = r.stage(&ft, n, 0.05, true).unwrap();
    let scale = ft.iter().copied().fold(0.0, f64::max);
    for (a, b) in out.values.iter().zip(&ft) {
        assert!((a - b).abs() < 1e-10 * scale);
    }
    let q = out.relaxation.unwrap();
    assert!(q.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-9 * scale);
}

#[test]
fn stiff_limit_returns_the_gaussian() {
    let n = 6;
    let r = solver(1e-12, ProjectionMode::On(WeightKind::LocalGaussian));
    let ft = perturbed_field(&r.vgrid, n, 4, 0.08);
    let out = r.stage(&ft, n, 0.1, false).unwrap();
    assert!(out.tensor_deviation() < 1e-8);
    for c in &out.cells {
        assert!(c.nu_prime.abs() < 1e-9);
    }
}

#[test]
fn stage_rejects_a_mismatched_field() {
    let r = solver(1.0, ProjectionMode::Off);
    assert!(r.stage(&[1.0; 10], 3, 0.1, false).is_err());
}

#[test]
fn raw_moments_are_deterministic_across_block_boundaries() {
    let vg = VelocityGrid::new(6.0, 12, 2).unwrap();
    let n = 37;
    let ft = perturbed_field(&vg, n, 1, 0.1);
    let a = field_raw_moments(&ft, n, &vg);
    let b = field_raw_moments(&ft, n, &vg);
    assert_eq!(a, b);
    for (i, m) in a.iter().enumerate() {
        let inv = cell_invariants(&ft, n, i, &vg);
        assert!((m.mass - inv[0]).abs() < 1e-13 * inv[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stage_obeys_the_maximum_principle(
        seed in 0u64..1000,
        eps in prop::sample::select(vec![1e-6, 1e-2, 1.0, 100.0]),
        a_dt in 0.001f64..0.5,
    ) {
        let n = 5;
        let r = solver(eps, ProjectionMode::On(WeightKind::LocalGaussian));
        let ft = perturbed_field(&r.vgrid, n, seed, 0.1);
        let out = r.stage(&ft, n, a_dt, false).unwrap();
        let fmax = ft.iter().copied().fold(0.0, f64::max);
        for (x, f) in out.values.iter().zip(&ft) {
            prop_assert!(*x >= 0.0 || *f < 0.0);
            prop_assert!(*x <= fmax.max(out.gaussian_max));
        }
    }

    #[test]
    fn convex_update_stays_between_endpoints(f in -1.0f64..1.0, g in -1.0f64..1.0, w in 0.0f64..=1.0) {
        let v = convex_update(f, g, w);
        prop_assert!(v >= f.min(g) && v <= f.max(g));
    }
}
