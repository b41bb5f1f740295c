use std::f64::consts::PI;

use esbgk_core::grid::Boundary;
use esbgk_core::reconstruction::{linear_interpolate, reconstruct_shifted, Reconstruction, ReconstructionKind};
use proptest::prelude::*;

const CWENO: [ReconstructionKind; 2] = [ReconstructionKind::Qcweno23, ReconstructionKind::Qcweno35];

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

fn centers(n: usize) -> (f64, Vec<f64>) {
    let dx = 1.0 / n as f64;
    (dx, (0..n).map(|i| (i as f64 + 0.5) * dx).collect())
}

/// Horner evaluation, lowest coefficient first.
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn max_err_sine(kind: ReconstructionKind, n: usize, shift_cells: f64) -> f64 {
    let (dx, xs) = centers(n);
    let f = |x: f64| (2.0 * PI * x).sin();
    let u: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let out = reconstruct_shifted(&u, Boundary::Periodic, shift_cells * dx, dx, kind).unwrap();
    xs.iter().zip(&out).map(|(&x, o)| (o - f(x - shift_cells * dx)).abs()).fold(0.0, f64::max)
}

#[test]
fn measured_orders_on_a_sine() {
    for (kind, floor) in [(ReconstructionKind::Qcweno23, 2.8), (ReconstructionKind::Qcweno35, 4.6)] {
        for shift in [0.3, 1.7, -2.45] {
            let errs: Vec<f64> = [40, 80, 160].iter().map(|&n| max_err_sine(kind, n, shift)).collect();
            for w in errs.windows(2) {
                let rate = (w[0] / w[1]).log2();
                assert!(rate >= floor, "{kind:?} shift {shift}: rate {rate} from {errs:?}");
            }
        }
    }
}

#[test]
fn linear_interpolation_is_second_order() {
    let errs: Vec<f64> = [40, 80, 160].iter().map(|&n| max_err_sine(ReconstructionKind::Linear, n, 0.6)).collect();
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
    }
}

#[test]
fn polynomial_exactness_in_the_interior() {
    let n = 40;
    let (dx, xs) = centers(n);
    for (kind, degree) in [(ReconstructionKind::Qcweno23, 2), (ReconstructionKind::Qcweno35, 4)] {
        let c: Vec<f64> = (0..=degree).map(|k| 1.0 - 0.3 * k as f64).collect();
        let u: Vec<f64> = xs.iter().map(|&x| poly(&c, x)).collect();
        for s in [0.25, 0.5, 0.9, 1.3, -0.7] {
            let out = reconstruct_shifted(&u, Boundary::FreeFlow, s * dx, dx, kind).unwrap();
            for i in 8..n - 8 {
                let exact = poly(&c, xs[i] - s * dx);
                assert!((out[i] - exact).abs() < 1e-12, "{kind:?} s {s} cell {i}: {} vs {exact}", out[i]);
            }
        }
    }
}

#[test]
fn step_overshoot_stays_below_one_percent() {
    let n = 100;
    let dx = 0.01;
    let u: Vec<f64> = (0..n).map(|i| if i < 50 { 1.0 } else { 0.0 }).collect();
    for kind in CWENO {
        for s in [0.1, 0.5, 0.77, 2.3] {
            let out = reconstruct_shifted(&u, Boundary::FreeFlow, s * dx, dx, kind).unwrap();
            let hi = out.iter().copied().fold(f64::MIN, f64::max);
            let lo = out.iter().copied().fold(f64::MAX, f64::min);
            assert!(hi <= 1.01 && lo >= -0.01, "{kind:?} s {s}: range [{lo}, {hi}]");
        }
    }
}

#[test]
fn free_flow_keeps_constants() {
    let u = vec![0.37; 16];
    for kind in CWENO {
        let out = reconstruct_shifted(&u, Boundary::FreeFlow, 3.4 * 0.1, 0.1, kind).unwrap();
        for o in out {
            assert!((o - 0.37).abs() < 1e-15);
        }
    }
}

#[test]
fn reusable_scratch_gives_identical_rows() {
    let n = 33;
    let (dx, xs) = centers(n);
    let u: Vec<f64> = xs.iter().map(|x| (5.0 * x).exp()).collect();
    let rec = Reconstruction::new(ReconstructionKind::Qcweno35, dx);
    let mut scratch = Vec::new();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    rec.shift_row(&u, Boundary::FreeFlow, -1.4, &mut scratch, &mut a).unwrap();
    rec.shift_row(&u, Boundary::FreeFlow, 7.9, &mut scratch, &mut b).unwrap();
    rec.shift_row(&u, Boundary::FreeFlow, -1.4, &mut scratch, &mut b).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_shifts_conserve_the_sum(
        values in prop::collection::vec(0.0f64..10.0, 8..64),
        shift in -12.0f64..12.0,
        kind_ix in 0usize..3,
    ) {
        let kind = [ReconstructionKind::Linear, ReconstructionKind::Qcweno23, ReconstructionKind::Qcweno35][kind_ix];
        let out = reconstruct_shifted(&values, Boundary::Periodic, shift * 0.1, 0.1, kind).unwrap();
        let s0 = sum(&values);
        let tol = 1e-13 * s0.abs().max(values.iter().copied().fold(0.0, f64::max));
        prop_assert!((sum(&out) - s0).abs() <= tol, "{} vs {}", sum(&out), s0);
    }

    #[test]
    fn weights_are_scale_invariant(
        values in prop::collection::vec(-1.0f64..1.0, 12..40),
        shift in -3.0f64..3.0,
        c in 0.01f64..100.0,
    ) {
        for kind in CWENO {
            let base = reconstruct_shifted(&values, Boundary::Periodic, shift, 1.0, kind).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            let out = reconstruct_shifted(&scaled, Boundary::Periodic, shift, 1.0, kind).unwrap();
            for (a, b) in base.iter().zip(&out) {
                prop_assert!((a * c - b).abs() < 1e-12 * c);
            }
        }
    }

    #[test]
    fn linear_interpolation_is_a_convex_combination(
        values in prop::collection::vec(-3.0f64..3.0, 4..30),
        shift in -5.0f64..5.0,
    ) {
        let lo = values.iter().copied().fold(f64::MAX, f64::min);
        let hi = values.iter().copied().fold(f64::MIN, f64::max);
        for bc in [Boundary::Periodic, Boundary::FreeFlow] {
            let out = linear_interpolate(&values, bc, shift, 1.0).unwrap();
            for o in out {
                prop_assert!(o >= lo - 1e-15 && o <= hi + 1e-15);
            }
        }
    }
}
