use std::f64::consts::PI;

use hardy_lab::symbols::{
    mobius_param_compose, phase_eval, phase_quadrature, poisson_eval, symbol_eval,
    symbol_eval_boundary, SymbolSpec,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk_point<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mobius_group_law(a in -0.9..0.9f64, b in -0.9..0.9f64, seed in any::<u64>()) {
        let (ta, tb) = (SymbolSpec::mobius(a), SymbolSpec::mobius(b));
        let tab = SymbolSpec::mobius(mobius_param_compose(a, b));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let z = disk_point(&mut rng, 0.99);
            let lhs = symbol_eval(&ta, symbol_eval(&tb, z).unwrap()).unwrap();
            let rhs = symbol_eval(&tab, z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12, "z={} err={}", z, (lhs - rhs).norm());
        }
    }
}

#[test]
fn phase_matches_boundary_values_and_quadrature() {
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let t = SymbolSpec::mobius(a);
        for k in 0..1024 {
            let x = -PI + 2.0 * PI * (k as f64 + 0.5) / 1024.0;
            let h = phase_eval(a, x);
            let boundary = symbol_eval(&t, Complex64::from_polar(1.0, x)).unwrap();
            assert!(
                (boundary - Complex64::from_polar(1.0, h)).norm() <= 1e-9,
                "a={a} x={x}"
            );
            if k % 16 == 0 {
                assert!(
                    (phase_quadrature(a, x, 1e-11).unwrap() - h).abs() <= 1e-9,
                    "a={a} x={x}"
                );
            }
        }
    }
}

#[test]
fn singular_inner_is_unimodular_away_from_one() {
    for a in [0.25, 1.0, 4.0] {
        let phi = SymbolSpec::SingularInner { a };
        for k in 0..2000 {
            let x = 1e-3 + (PI - 1e-3) * k as f64 / 1999.0;
            for s in [x, -x] {
                let v = symbol_eval_boundary(&phi, s).unwrap();
                assert!((v.norm() - 1.0).abs() <= 1e-12, "a={a} x={s}");
            }
        }
        // away from z = 1 the point-based evaluator agrees
        let z = Complex64::from_polar(1.0, 2.0);
        let d = symbol_eval(&phi, z).unwrap() - symbol_eval_boundary(&phi, 2.0).unwrap();
        assert!(d.norm() <= 1e-13);
    }
}

#[test]
fn test_symbol_power_is_the_binomial_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (m, n) in [(2u32, 1u32), (5, 2), (9, 4), (40, 13)] {
        let phi = SymbolSpec::TestSymbol { m, n };
        for _ in 0..200 {
            let z = disk_point(&mut rng, 1.0);
            let p = symbol_eval(&phi, z).unwrap().powu(n);
            let expect = (z.powu(n) + z.powu(m)) * 0.5;
            assert!((p - expect).norm() <= 1e-12, "m={m} n={n} z={z}");
        }
    }
}

#[test]
fn poisson_kernel_increases_on_half_circle() {
    for a in [0.2, 0.5, 0.8] {
        let mut prev = poisson_eval(a, 0.0);
        assert!((prev - (1.0 - a) / (1.0 + a)).abs() < 1e-15);
        for k in 1..=4096 {
            let v = poisson_eval(a, PI * k as f64 / 4096.0);
            assert!(v > prev, "a={a} k={k}");
            prev = v;
        }
        assert!((prev - (1.0 + a) / (1.0 - a)).abs() < 1e-12);
    }
}

#[test]
fn phase_is_odd_and_fixes_endpoints() {
    for a in [0.3, 0.7] {
        assert_eq!(phase_eval(a, 0.0), 0.0);
        assert!((phase_eval(a, PI) - PI).abs() < 1e-15);
        for x in [0.1, 1.0, 2.5] {
            assert_eq!(phase_eval(a, -x), -phase_eval(a, x));
        }
    }
}

#[test]
fn labels_round_trip() {
    for s in [
        "mobius:a=0.5",
        "rotation:theta=1.25",
        "inner:a=2",
        "monomial:k=3",
        "test:m=7,n=3",
    ] {
        let phi: SymbolSpec = s.parse().unwrap();
        let again: SymbolSpec = phi.label().parse().unwrap();
        assert_eq!(phi, again, "{s}");
    }
}

#[test]
fn invalid_symbols_are_rejected() {
    for s in [
        "mobius:a=1",
        "inner:a=0",
        "monomial:k=0",
        "test:m=2,n=2",
        "bogus",
    ] {
        assert!(s.parse::<SymbolSpec>().is_err(), "{s}");
    }
    let too_big = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.6)];
    assert!(SymbolSpec::custom(too_big).is_err());
}
