use hardy_lab::coeff::{
    column_circle_fft, column_explicit, column_series_power, column_singular_inner, power_columns,
    read_cache, write_cache, Method,
};
use hardy_lab::symbols::{mobius_param_compose, SymbolSpec};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn three_way(phi: &SymbolSpec, n: usize, m: usize) -> (f64, f64) {
    let e = column_explicit(phi, n, m).unwrap();
    let s = column_series_power(phi, n, m).unwrap();
    let f = column_circle_fft(phi, n, m, 1.0, 4 * (m + 1).next_power_of_two()).unwrap();
    (e.relative_distance(&s), e.relative_distance(&f))
}

#[test]
fn three_routes_agree_on_mobius_columns() {
    let syms = [
        SymbolSpec::mobius(0.3),
        SymbolSpec::mobius(-0.6),
        SymbolSpec::Mobius { a: c(0.2, 0.5) },
    ];
    for phi in &syms {
        for n in [1, 2, 7, 40] {
            let (ds, df) = three_way(phi, n, 256);
            assert!(ds <= 1e-9 && df <= 1e-9, "{} n={n}: {ds} {df}", phi.label());
        }
    }
}

#[test]
fn three_routes_agree_on_polynomial_symbols() {
    let syms = [
        SymbolSpec::Monomial { k: 3 },
        SymbolSpec::custom(vec![c(0.1, 0.0), c(0.3, 0.2), c(0.0, -0.25)]).unwrap(),
        SymbolSpec::Rotation { theta: 0.7 },
    ];
    for phi in &syms {
        for n in [1, 2, 5] {
            let (ds, df) = three_way(phi, n, 128);
            assert!(ds <= 1e-9 && df <= 1e-9, "{} n={n}: {ds} {df}", phi.label());
        }
    }
}

// Off multiples of its root order the test symbol has a branch point on the
// circle, which the boundary FFT cannot resolve; the series route still can.
#[test]
fn test_symbol_routes_agree() {
    let phi = SymbolSpec::TestSymbol { m: 5, n: 2 };
    for n in [2, 4, 6] {
        let (ds, df) = three_way(&phi, n, 128);
        assert!(ds <= 1e-9 && df <= 1e-9, "n={n}: {ds} {df}");
    }
    for n in [1, 3] {
        let e = column_explicit(&phi, n, 128).unwrap();
        let s = column_series_power(&phi, n, 128).unwrap();
        assert!(e.relative_distance(&s) <= 1e-9, "n={n}");
    }
}

#[test]
fn inner_columns_satisfy_parseval() {
    let syms = [
        SymbolSpec::mobius(0.7),
        SymbolSpec::Mobius { a: c(-0.1, 0.6) },
        SymbolSpec::Rotation { theta: 2.0 },
        SymbolSpec::Monomial { k: 2 },
    ];
    for phi in &syms {
        for n in [1, 3, 10] {
            let col = column_explicit(phi, n, 1024).unwrap();
            let defect = (1.0 - col.norm_sq()).abs();
            assert!(
                defect <= col.trunc_error + 1e-12,
                "{} n={n}: {defect}",
                phi.label()
            );
        }
    }
    let inner = SymbolSpec::SingularInner { a: 1.0 };
    for n in [1, 4] {
        let col = column_singular_inner(&inner, n, 2048).unwrap();
        let defect = 1.0 - col.norm_sq();
        assert!(
            defect >= -1e-12 && defect <= col.trunc_error + 1e-12,
            "inner n={n}"
        );
    }
}

#[test]
fn real_parameter_gives_real_columns() {
    for a in [0.3, -0.8] {
        let col = column_explicit(&SymbolSpec::mobius(a), 9, 300).unwrap();
        assert!(col.entries.iter().all(|z| z.im == 0.0));
    }
    let col = column_explicit(&SymbolSpec::SingularInner { a: 0.5 }, 3, 200).unwrap();
    assert!(col.entries.iter().all(|z| z.im == 0.0));
}

#[test]
fn composition_matches_group_law_column() {
    let (a, b) = (0.5, -0.3);
    let m = 64;
    let ta_coeffs = column_explicit(&SymbolSpec::mobius(a), 1, 200)
        .unwrap()
        .entries;
    let tb_powers = power_columns(&SymbolSpec::mobius(b), 200, m).unwrap();
    let mut composed = vec![c(0.0, 0.0); m + 1];
    for (ck, col) in ta_coeffs.iter().zip(&tb_powers) {
        for (out, x) in composed.iter_mut().zip(&col.entries) {
            *out += ck * x;
        }
    }
    let direct = column_explicit(&SymbolSpec::mobius(mobius_param_compose(a, b)), 1, m).unwrap();
    for (x, y) in composed.iter().zip(&direct.entries) {
        assert!((x - y).norm() <= 1e-12);
    }
}

#[test]
fn symbols_fixing_zero_give_exact_lower_triangular_columns() {
    let syms = [
        SymbolSpec::Monomial { k: 2 },
        SymbolSpec::TestSymbol { m: 4, n: 3 },
        SymbolSpec::custom(vec![c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.25, 0.1)]).unwrap(),
        SymbolSpec::mobius(0.0),
    ];
    for phi in &syms {
        let cols = power_columns(phi, 20, 80).unwrap();
        for (n, col) in cols.iter().enumerate() {
            assert!(
                col.entries[..n].iter().all(|z| *z == c(0.0, 0.0)),
                "{} n={n}",
                phi.label()
            );
        }
    }
}

#[test]
fn cache_rejects_truncated_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("col.bin");
    let col = column_explicit(&SymbolSpec::mobius(0.4), 5, 63).unwrap();
    write_cache(&path, &col).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(read_cache(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cache_round_trips(
        re in -0.9..0.9f64,
        im in -0.4..0.4f64,
        n in 0usize..40,
        m in 1usize..300,
        fft in any::<bool>(),
    ) {
        prop_assume!(re * re + im * im < 0.95);
        let phi = SymbolSpec::Mobius { a: c(re, im) };
        let col = if fft {
            column_circle_fft(&phi, n, m, 0.9, 4 * (m + 1).next_power_of_two()).unwrap()
        } else {
            column_explicit(&phi, n, m).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("col.bin");
        write_cache(&path, &col).unwrap();
        let back = read_cache(&path).unwrap();
        prop_assert_eq!(back.method, if fft { Method::CircleFft } else { col.method });
        prop_assert_eq!(&back.symbol, &col.symbol);
        prop_assert_eq!(back.n, col.n);
        prop_assert_eq!(back.trunc_error.to_bits(), col.trunc_error.to_bits());
        prop_assert_eq!(back.radius.map(f64::to_bits), col.radius.map(f64::to_bits));
        prop_assert!(back.entries.iter().zip(&col.entries).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn mobius_columns_have_unit_norm(a in -0.95..0.95f64, n in 1usize..64) {
        let col = column_explicit(&SymbolSpec::mobius(a), n, 4096).unwrap();
        prop_assert!((1.0 - col.norm_sq()).abs() <= col.trunc_error + 1e-12);
    }
}
