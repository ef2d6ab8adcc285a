use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use symlab::corpus::BandLimited;
use symlab::elliptic::{check_ellipticity, solve_principal, EllipticProblem, PrincipalPart};
use symlab::function_space::*;
use symlab::io;
use symlab::multiplier::{apply_symbol, char_projection, riesz_projection, RieszLike, SymbolTable};
use symlab::operator::{r_bound_estimate, OpValue, PositiveOperator, RBoundOptions};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn l2(u: &GridFunction) -> f64 {
    weighted_lp_norm(u, 2.0, &Weight::one(u.grid())).unwrap()
}

/// A grid of dimension 1..=3 with power-of-two sizes 4..=32.
fn grid() -> impl Strategy<Value = Grid> {
    prop::collection::vec((2u32..=5, 0.25f64..4.0), 1..=3)
        .prop_map(|axes| Grid::new(axes.iter().map(|a| a.1).collect(), axes.iter().map(|a| 1usize << a.0).collect()).unwrap())
}

fn field(g: &Grid, n: usize, seed: u64) -> GridFunction {
    BandLimited { band: g.sizes().iter().map(|m| m / 2).collect(), decay: 0.0 }
        .sample(g, ValueSpace::new(n, 2.0).unwrap(), seed, 0)
        .unwrap()
}

fn smooth_field(g: &Grid, n: usize, seed: u64) -> GridFunction {
    BandLimited::inner_half(g).sample(g, ValueSpace::new(n, 2.0).unwrap(), seed, 0).unwrap()
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let b = DMatrix::from_vec(n, n, v);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn transform_round_trip(g in grid(), n in 1usize..4, seed in any::<u64>()) {
        let u = field(&g, n, seed);
        prop_assert!(inverse_transform(&forward_transform(&u)).rel_diff(&u) < 1e-12);
    }

    #[test]
    fn parseval(g in grid(), seed in any::<u64>()) {
        let u = field(&g, 2, seed);
        let phys: f64 = u.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64;
        let spec: f64 = forward_transform(&u).coeffs().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((phys - spec).abs() <= 1e-10 * phys);
    }

    #[test]
    fn norm_is_homogeneous(g in grid(), seed in any::<u64>(), s in -5.0f64..5.0, p in 1.0f64..4.0) {
        let u = field(&g, 2, seed);
        let one = Weight::one(&g);
        let a = weighted_lp_norm(&u.scale(c(s)), p, &one).unwrap();
        let b = weighted_lp_norm(&u, p, &one).unwrap();
        prop_assert!((a - s.abs() * b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn derivatives_compose(g in grid(), seed in any::<u64>(), a0 in 0u32..3, b0 in 0u32..3) {
        // Away from the Nyquist bin every factor is exact, so D^a D^b = D^{a+b}.
        let u = smooth_field(&g, 1, seed);
        let mut a = vec![0; g.dim()];
        let mut b = vec![0; g.dim()];
        a[0] = a0;
        b[g.dim() - 1] = b0;
        let (a, b) = (MultiIndex(a), MultiIndex(b));
        let two = spectral_derivative(&spectral_derivative(&u, &b).unwrap(), &a).unwrap();
        let one = spectral_derivative(&u, &a.add(&b)).unwrap();
        prop_assert!(two.rel_diff(&one) < 1e-9 || one.max_abs() < 1e-12);
    }

    #[test]
    fn ap_constant_at_least_one(vals in prop::collection::vec(0.01f64..100.0, 16), p in 1.1f64..4.0) {
        let g = Grid::new(vec![1.0], vec![16]).unwrap();
        let w = Weight::tabulated(&g, vals).unwrap();
        prop_assert!(ap_constant(&w, p, None).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn degenerate_inverse(nu in 0.0f64..0.9, x in -0.99f64..0.99) {
        let g = Grid::new(vec![1.0], vec![16]).unwrap();
        let s = degenerate_substitution(&[Degeneracy::Power(nu)], &g).unwrap();
        let t = s.tau(0, x);
        prop_assert!((s.x_of_tau(0, t) - x).abs() < 1e-8);
        prop_assert!(t * x >= 0.0);
    }

    #[test]
    fn fractional_powers_form_a_semigroup(m in spd(3), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let a = PositiveOperator::symmetric(m, 2.0).unwrap();
        let lhs = a.frac_power(s).value().compose(&a.frac_power(t).value()).to_dense(3);
        let rhs = a.frac_power(s + t).value().to_dense(3);
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn resolvent_identity(m in spd(3), r1 in 0.1f64..10.0, t1 in -2.0f64..2.0, r2 in 0.1f64..10.0, t2 in -2.0f64..2.0) {
        let a = PositiveOperator::symmetric(m, 2.0).unwrap();
        let (l, k) = (Complex64::from_polar(r1, t1), Complex64::from_polar(r2, t2));
        let rl = a.resolvent(l).unwrap().to_dense(3);
        let rk = a.resolvent(k).unwrap().to_dense(3);
        let lhs = &rl - &rk;
        let rhs = (&rl * &rk) * (k - l);
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * (rl.norm() + rk.norm()));
    }

    #[test]
    fn ellipticity_angle_of_rotated_laplacian(phi in -1.4f64..1.4) {
        let g = Grid::cube(2, PI, 8).unwrap();
        let a = -Complex64::from_polar(1.0, phi);
        let k = PrincipalPart::new(2, 1, vec![(MultiIndex(vec![2, 0]), a), (MultiIndex(vec![0, 2]), a)]).unwrap();
        let r = check_ellipticity(&k, &g).unwrap();
        prop_assert!((r.phi1 - phi.abs()).abs() < 1e-12);
        prop_assert!((r.m0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn elliptic_solve_is_linear(seed in any::<u64>(), s in -3.0f64..3.0, lam in 0.1f64..50.0) {
        let g = Grid::cube(2, PI, 8).unwrap();
        let sp = ValueSpace::new(3, 2.0).unwrap();
        let prob = EllipticProblem::new(PrincipalPart::laplacian(2), PositiveOperator::dyadic(0.5, sp).unwrap(), c(lam));
        let f = field(&g, 3, seed);
        let h = field(&g, 3, seed ^ 1);
        let lhs = solve_principal(&prob, &f.axpby(c(s), &h, c(1.0)).unwrap()).unwrap();
        let rhs = solve_principal(&prob, &f).unwrap().axpby(c(s), &solve_principal(&prob, &h).unwrap(), c(1.0)).unwrap();
        prop_assert!(lhs.rel_diff(&rhs) < 1e-12);
    }

    #[test]
    fn symbol_application_is_linear(g in grid(), seed in any::<u64>(), s in -3.0f64..3.0) {
        let f = field(&g, 2, seed);
        let h = field(&g, 2, seed.wrapping_add(7));
        let m = RieszLike { axis: 0 };
        let lhs = apply_symbol(&m, &f.axpby(c(s), &h, c(1.0)).unwrap()).unwrap();
        let rhs = apply_symbol(&m, &f).unwrap().axpby(c(s), &apply_symbol(&m, &h).unwrap(), c(1.0)).unwrap();
        prop_assert!(lhs.rel_diff(&rhs) < 1e-12 || rhs.max_abs() < 1e-12);
    }

    #[test]
    fn projections_are_idempotent(g in grid(), seed in any::<u64>(), lo in -3.0f64..0.0, hi in 0.0f64..3.0) {
        let u = field(&g, 1, seed);
        let a = vec![lo; g.dim()];
        let b = vec![hi; g.dim()];
        let once = char_projection(&a, &b, &u).unwrap();
        prop_assert!(char_projection(&a, &b, &once).unwrap().rel_diff(&once) < 1e-12 || once.max_abs() < 1e-12);
        let r = riesz_projection(&u).unwrap();
        prop_assert!(riesz_projection(&r).unwrap().rel_diff(&r) < 1e-12 || r.max_abs() < 1e-12);
    }

    #[test]
    fn plancherel_bound(g in grid(), seed in any::<u64>()) {
        let u = field(&g, 1, seed);
        let t = SymbolTable::new(&RieszLike { axis: g.dim() - 1 }, &g).unwrap();
        prop_assert!(l2(&t.apply(&u).unwrap()) <= t.sup_norm(2.0) * l2(&u) * (1.0 + 1e-12));
    }

    #[test]
    fn r_bound_dominates_members(vals in prop::collection::vec(-3.0f64..3.0, 1..6)) {
        let fam: Vec<OpValue> = vals.iter().map(|&v| OpValue::Diagonal(vec![c(v), c(-v / 2.0)])).collect();
        let sp = ValueSpace::new(2, 2.0).unwrap();
        let e = r_bound_estimate(&fam, sp, &RBoundOptions { vector_draws: 50, ..Default::default() }).unwrap();
        let top = fam.iter().map(|t| t.opnorm(2.0)).fold(0.0, f64::max);
        prop_assert!(e.bound >= top - 1e-12);
    }

    #[test]
    fn grid_function_encoding_round_trips(g in grid(), n in 1usize..4, seed in any::<u64>()) {
        let u = field(&g, n, seed);
        let back = io::decode_grid_function(&io::encode_grid_function(&u)).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn decoders_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = io::decode_grid_function(&bytes);
        let _ = io::decode_weight(&bytes);
        let _ = io::decode_time_series(&bytes);
    }

    #[test]
    fn truncated_encodings_are_rejected(seed in any::<u64>(), cut in 1usize..64) {
        let g = Grid::new(vec![1.0], vec![8]).unwrap();
        let bytes = io::encode_grid_function(&field(&g, 2, seed));
        let cut = cut.min(bytes.len());
        prop_assert!(io::decode_grid_function(&bytes[..bytes.len() - cut]).is_err());
    }
}
