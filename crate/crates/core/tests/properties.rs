use std::f64::consts::{FRAC_PI_2, PI, TAU};

use circreg::energy::{build_kernel, fidelity, functional_eval, mebr, regularizer, FunctionalParams, DEFAULT_TRUNC_TOL};
use circreg::field::{canonicalize_angle, AngleField, GridSpec, Mask};
use circreg::geometry::{chord_dist, geodesic_dist, signed_wrap, Metric};
use circreg::mollifier::{MollifierSpec, Profile};
use circreg::pipeline::{denoise, inpaint, RunOptions};
use circreg::solver::{descend, gradient, DescentConfig};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => 0.0..TAU,
        1 => 0.0..1e-9,
        1 => (TAU - 1e-9)..TAU,
    ]
    .prop_map(|a: f64| canonicalize_angle(a).unwrap())
}

fn field(n: usize) -> impl Strategy<Value = AngleField> {
    prop::collection::vec(angle(), n).prop_map(move |v| AngleField::new(GridSpec::line(n, 1.0).unwrap(), v).unwrap())
}

fn params(p: f64, s: f64, alpha: f64, eps: f64, metric: Metric) -> FunctionalParams {
    let m = MollifierSpec::new(Profile::Gaussian, eps, 1).unwrap();
    FunctionalParams::mollified(p, s, 1.0, alpha, metric, m).unwrap()
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::S1Geodesic), Just(Metric::EuclideanChord)]
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(a in -1e6f64..1e6) {
        let c = canonicalize_angle(a).unwrap();
        prop_assert!((0.0..TAU).contains(&c));
        prop_assert_eq!(canonicalize_angle(c).unwrap(), c);
    }

    #[test]
    fn lifting_contracts(a in -100.0f64..100.0, b in -100.0f64..100.0) {
        prop_assert!(chord_dist(a, b) <= (a - b).abs() + 1e-12);
    }

    #[test]
    fn chord_and_arc_are_equivalent(a in angle(), b in angle()) {
        let (arc, chord) = (geodesic_dist(a, b), chord_dist(a, b));
        prop_assert!(chord <= arc + 1e-12);
        prop_assert!(arc <= FRAC_PI_2 * chord + 1e-12);
    }

    #[test]
    fn geodesic_is_rotation_invariant(a in angle(), b in angle(), c in -20.0f64..20.0) {
        let ra = canonicalize_angle(a + c).unwrap();
        let rb = canonicalize_angle(b + c).unwrap();
        prop_assert!((geodesic_dist(ra, rb) - geodesic_dist(a, b)).abs() < 1e-12);
    }

    #[test]
    fn signed_wrap_is_antisymmetric(a in angle(), b in angle()) {
        let (ab, ba) = (signed_wrap(a, b), signed_wrap(b, a));
        prop_assert!(ab > -PI && ab <= PI);
        if ab == PI {
            prop_assert_eq!(ba, PI);
        } else {
            prop_assert_eq!(ab, -ba);
        }
    }

    #[test]
    fn fidelity_root_is_a_metric(
        a in field(12), b in field(12), c in field(12),
        p in 1.0f64..3.0, m in metric(),
    ) {
        let d = |x: &AngleField, y: &AngleField| mebr(x, y, m, p, None).unwrap();
        let (ab, bc, ac) = (d(&a, &b), d(&b, &c), d(&a, &c));
        let tol = 1e-10 * ab.max(bc).max(ac).max(1e-300);
        prop_assert!((ab - d(&b, &a)).abs() <= tol);
        prop_assert!(ac <= ab + bc + tol);
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(ab == 0.0, a == b);
    }

    #[test]
    fn functional_is_finite_and_geodesic_dominates_chord(
        u in field(20), data in field(20),
        p in 1.0f64..3.0, s in 0.05f64..1.0, eps in 0.02f64..0.5,
    ) {
        let pg = params(p, s, 0.7, eps, Metric::S1Geodesic);
        let k = build_kernel(u.grid(), &pg, DEFAULT_TRUNC_TOL).unwrap();
        let f = functional_eval(&u, &data, None, &pg, &k).unwrap();
        prop_assert!(f.is_finite() && f >= 0.0);
        let geo = regularizer(&u, &k, Metric::S1Geodesic, p).unwrap();
        let chord = regularizer(&u, &k, Metric::EuclideanChord, p).unwrap();
        prop_assert!(chord <= geo * (1.0 + 1e-12));
    }

    #[test]
    fn functional_is_rotation_invariant(u in field(16), data in field(16), c in -10.0f64..10.0, p in 1.0f64..3.0) {
        let pg = params(p, 0.4, 0.5, 0.1, Metric::S1Geodesic);
        let k = build_kernel(u.grid(), &pg, DEFAULT_TRUNC_TOL).unwrap();
        let f = functional_eval(&u, &data, None, &pg, &k).unwrap();
        let g = functional_eval(&u.rotated(c).unwrap(), &data.rotated(c).unwrap(), None, &pg, &k).unwrap();
        prop_assert!((f - g).abs() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn functional_increases_with_alpha(u in field(16), data in field(16), a1 in 0.01f64..1.0, da in 0.01f64..1.0) {
        let p1 = params(1.5, 0.5, a1, 0.1, Metric::S1Geodesic);
        let p2 = p1.with_alpha(a1 + da).unwrap();
        let k = build_kernel(u.grid(), &p1, DEFAULT_TRUNC_TOL).unwrap();
        prop_assume!(regularizer(&u, &k, Metric::S1Geodesic, 1.5).unwrap() > 0.0);
        let f1 = functional_eval(&u, &data, None, &p1, &k).unwrap();
        let f2 = functional_eval(&u, &data, None, &p2, &k).unwrap();
        prop_assert!(f2 > f1);
    }

    #[test]
    fn gradient_vanishes_at_constant_data(c in angle(), p in 1.01f64..3.0, s in 0.05f64..1.0, m in metric()) {
        let g = GridSpec::line(15, 1.0).unwrap();
        let u = AngleField::constant(g, c).unwrap();
        let pr = params(p, s, 1.0, 0.1, m);
        let k = build_kernel(&g, &pr, DEFAULT_TRUNC_TOL).unwrap();
        prop_assert!(gradient(&u, &u, None, &pr, &k).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn descent_commutes_with_rotation(u0 in field(12), data in field(12), c in -10.0f64..10.0) {
        let pr = params(2.0, 0.5, 0.3, 0.1, Metric::S1Geodesic);
        let k = build_kernel(u0.grid(), &pr, DEFAULT_TRUNC_TOL).unwrap();
        let cfg = DescentConfig::new(10, 0.05, 5).unwrap();
        let (a, _) = descend(&u0, &data, None, &pr, &k, &cfg).unwrap();
        let (b, _) = descend(&u0.rotated(c).unwrap(), &data.rotated(c).unwrap(), None, &pr, &k, &cfg).unwrap();
        let a = a.rotated(c).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(geodesic_dist(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn all_known_inpainting_is_denoising(noisy in field(20), seedless_steps in 1usize..15) {
        let pr = params(1.5, 0.3, 0.2, 0.05, Metric::S1Geodesic);
        let cfg = DescentConfig::new(seedless_steps, 0.02, 3).unwrap();
        let mask = Mask::all_known(*noisy.grid());
        let (a, _) = denoise(&noisy, &pr, &cfg, &RunOptions::default()).unwrap();
        let (b, _) = inpaint(&noisy, &mask, &pr, &cfg, &RunOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn masked_fidelity_ignores_unknown_points(u in field(10), v in field(10), w in field(10), p in 1.0f64..3.0) {
        let g = *u.grid();
        let mask = Mask::from_unknown(g, |i| i % 3 == 1).unwrap();
        let mixed: Vec<f64> = (0..10).map(|i| if i % 3 == 1 { w.values()[i] } else { v.values()[i] }).collect();
        let mixed = AngleField::new(g, mixed).unwrap();
        let a = fidelity(&u, &v, Metric::S1Geodesic, p, Some(&mask)).unwrap();
        let b = fidelity(&u, &mixed, Metric::S1Geodesic, p, Some(&mask)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn pair_distance_is_a_metric_on_small_grids() {
    for g in [GridSpec::line(7, 1.3).unwrap(), GridSpec::plane(3, 4, [1.0, 0.7]).unwrap()] {
        let n = g.len();
        for i in 0..n {
            assert_eq!(g.pair_distance(i, i).unwrap(), 0.0);
            for j in 0..n {
                let dij = g.pair_distance(i, j).unwrap();
                assert_eq!(dij, g.pair_distance(j, i).unwrap());
                assert!(i == j || dij > 0.0);
                for k in 0..n {
                    assert!(g.pair_distance(i, k).unwrap() <= dij + g.pair_distance(j, k).unwrap() + 1e-15);
                }
            }
        }
    }
}

#[test]
fn mollifier_profiles_decrease_radially() {
    for profile in [Profile::Gaussian, Profile::Bump] {
        for dim in [1, 2] {
            let m = MollifierSpec::new(profile, 0.3, dim).unwrap();
            let vals: Vec<f64> = (0..200).map(|i| m.eval(i as f64 * 0.002).unwrap()).collect();
            assert!(vals.iter().all(|&v| v >= 0.0));
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
