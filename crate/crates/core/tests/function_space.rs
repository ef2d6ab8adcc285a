mod common;

use common::{c, diff_matrix};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;
use symlab::corpus::BandLimited;
use symlab::function_space::*;
use symlab::operator::PositiveOperator;

fn ap_ladder(a: f64, sizes: &[usize]) -> Vec<f64> {
    sizes
        .iter()
        .map(|&m| {
            let g = Grid::new(vec![1.0], vec![m]).unwrap();
            ap_constant(&Weight::axis_power(&g, vec![a]).unwrap(), 2.0, None).unwrap()
        })
        .collect()
}

const LADDER: [usize; 6] = [64, 128, 256, 512, 1024, 2048];

#[test]
fn transform_round_trip_and_parseval_1d() {
    let start = Instant::now();
    let g = Grid::new(vec![PI], vec![256]).unwrap();
    let sp = ValueSpace::new(4, 2.0).unwrap();
    let u = BandLimited { band: vec![128], decay: 0.0 }.sample(&g, sp, 17, 0).unwrap();
    let s = forward_transform(&u);
    assert!(inverse_transform(&s).rel_diff(&u) < 1e-10);
    let phys: f64 = u.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64;
    let spec: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum();
    assert!((phys - spec).abs() <= 1e-9 * phys);
    let sine = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].sin()), &[c(1.0)]).unwrap();
    let d = spectral_derivative(&sine, &MultiIndex(vec![1])).unwrap();
    for (p, x) in g.points().iter().enumerate() {
        assert!((d.at(p)[0] - c(x[0].cos())).norm() < 1e-9);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn round_trip_3d() {
    let g = Grid::new(vec![1.0, 2.0, 0.5], vec![8, 4, 16]).unwrap();
    let sp = ValueSpace::new(2, 3.0).unwrap();
    let u = BandLimited { band: vec![4, 2, 8], decay: 0.0 }.sample(&g, sp, 1, 2).unwrap();
    assert!(inverse_transform(&forward_transform(&u)).rel_diff(&u) < 1e-12);
}

#[test]
fn spectral_derivative_matches_differentiation_matrix() {
    let g = Grid::new(vec![2.0], vec![32]).unwrap();
    let u = BandLimited { band: vec![16], decay: 0.0 }.sample(&g, ValueSpace::scalar(), 5, 0).unwrap();
    let v = DVector::from_column_slice(u.values());
    for order in 1..=4 {
        let d = spectral_derivative(&u, &MultiIndex(vec![order])).unwrap();
        let dense = diff_matrix(32, 2.0, order).map(c) * &v;
        let want = GridFunction::new(g.clone(), ValueSpace::scalar(), dense.as_slice().to_vec()).unwrap();
        assert!(d.rel_diff(&want) < 1e-9, "order {order}");
    }
}

#[test]
fn mixed_derivative_of_product_wave() {
    let g = Grid::new(vec![PI, PI], vec![16, 32]).unwrap();
    let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c((2.0 * x[0]).sin() * (3.0 * x[1]).cos()), &[c(1.0)]).unwrap();
    let d = spectral_derivative(&u, &MultiIndex(vec![1, 2])).unwrap();
    let want = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(-18.0 * (2.0 * x[0]).cos() * (3.0 * x[1]).cos()), &[c(1.0)]).unwrap();
    assert!(d.rel_diff(&want) < 1e-10);
}

#[test]
fn ap_stable_inside_range() {
    for a in [-0.5, 0.0, 0.5] {
        let v = ap_ladder(a, &LADDER);
        for w in v.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() <= 0.05, "a = {a}: {v:?}");
        }
        assert!(v.iter().all(|&x| x < 1.5));
    }
}

#[test]
fn ap_reference_tables_outside_range() {
    // Independent closed-form evaluation of the midpoint-sampled family maxima.
    let want = [
        (1.1, [3.389108224407, 3.974222899014, 4.601274626648, 5.273311971590, 5.993577210899, 6.765536308053]),
        (1.5, [10.006640037663, 14.484393184721, 20.815950821990, 29.769773438305, 42.432261476766, 60.339676835295]),
    ];
    for (a, table) in want {
        let v = ap_ladder(a, &LADDER);
        for (got, exp) in v.iter().zip(table) {
            assert!((got / exp - 1.0).abs() < 1e-10, "a = {a}: {got} vs {exp}");
        }
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn ap_symmetric_in_sign_for_half_power() {
    let v = ap_ladder(0.5, &[2048]);
    let w = ap_ladder(-0.5, &[2048]);
    assert!((v[0] - 1.320734933359).abs() < 1e-10);
    assert!((w[0] - 1.320734933359).abs() < 1e-10);
}

#[test]
fn require_ap_reports_violation() {
    let g = Grid::new(vec![1.0], vec![256]).unwrap();
    let w = Weight::axis_power(&g, vec![1.5]).unwrap();
    match require_ap(&w, 2.0, 10.0) {
        Err(symlab::Error::ApViolation { constant, bound }) => {
            assert!(constant > 10.0);
            assert_eq!(bound, 10.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn weighted_norm_of_constant_is_weight_integral() {
    let g = Grid::new(vec![1.0], vec![128]).unwrap();
    let w = Weight::axis_power(&g, vec![0.5]).unwrap();
    let u = GridFunction::separable(&g, ValueSpace::scalar(), |_| c(1.0), &[c(1.0)]).unwrap();
    let n = weighted_lp_norm(&u, 2.0, &w).unwrap();
    // Midpoint rule for int_{-1}^{1} |x|^{1/2} dx = 4/3.
    assert!((n * n - 4.0 / 3.0).abs() < 1e-3);
}

#[test]
fn graph_norm_combines_plain_and_lifted_parts() {
    let g = Grid::new(vec![PI], vec![16]).unwrap();
    let sp = ValueSpace::new(2, 2.0).unwrap();
    let a = PositiveOperator::diagonal(vec![4.0, 4.0], sp).unwrap();
    let u = BandLimited::inner_half(&g).sample(&g, sp, 2, 0).unwrap();
    let one = Weight::one(&g);
    let base = weighted_lp_norm(&u, 2.0, &one).unwrap();
    let half = graph_norm(&u, &a, 0.5, 2.0, &one).unwrap();
    assert!((half - 5f64.sqrt() * base).abs() < 1e-12 * base);
}

#[test]
fn degenerate_identity_profile_keeps_grid() {
    let g = Grid::new(vec![PI, 2.0], vec![16, 8]).unwrap();
    let s = degenerate_substitution(&[Degeneracy::One, Degeneracy::One], &g).unwrap();
    assert_eq!(s.tau_grid(), &g);
    for k in 0..2 {
        for &x in s.nodes(k) {
            assert!((s.tau(k, x) - x).abs() < 1e-14);
        }
    }
}

#[test]
fn degenerate_half_power_inverse_and_rejection() {
    let g = Grid::new(vec![1.0], vec![32]).unwrap();
    let s = degenerate_substitution(&[Degeneracy::Power(0.5)], &g).unwrap();
    // tau(x) = 2 sign(x) |x|^{1/2}
    for x in [-0.9, -0.1, 0.0, 0.04, 0.5] {
        let t = s.tau(0, x);
        assert!((t - 2.0 * x.signum() * x.abs().sqrt()).abs() < 1e-10);
        assert!((s.x_of_tau(0, t) - x).abs() < 1e-10);
    }
    let err = degenerate_substitution(&[Degeneracy::Power(1.0)], &g).unwrap_err();
    assert_eq!(err.kind(), "integrability");
}

#[test]
fn mixed_norm_of_separable_series() {
    let g = Grid::new(vec![PI], vec![32]).unwrap();
    let u = GridFunction::separable(&g, ValueSpace::scalar(), |x| c(x[0].cos()), &[c(1.0)]).unwrap();
    let n = 64;
    let dt = 1.0 / n as f64;
    let snaps: Vec<_> = (0..=n).map(|j| u.scale(Complex64::new(j as f64 * dt, 0.0))).collect();
    let ts = TimeSeries::new(dt, snaps).unwrap();
    let one = Weight::one(&g);
    let space = weighted_lp_norm(&u, 2.0, &one).unwrap();
    // (int_0^1 t^2 dt)^{1/2} = 3^{-1/2}; trapezoid error is O(dt^2).
    let got = ts.mixed_norm(2.0, 2.0, &one).unwrap();
    assert!((got / space - 3f64.sqrt().recip()).abs() < 1e-3);
}
