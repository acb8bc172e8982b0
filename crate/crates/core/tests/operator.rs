use hardy_lab::operator::{
    assemble, band_schur_check, block_decompose, classify, column_norm_ratio, kacnelson_check,
    kernel_growth_fit, kernel_norm, matrix_norm, op_norm, power_norm, split_blocks, DenseMatrix,
    Part, Section,
};
use hardy_lab::symbols::{mobius_param_compose, SymbolSpec};
use hardy_lab::weights::WeightSequence;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weight(spec: &str, horizon: usize) -> WeightSequence {
    WeightSequence::parse(spec, horizon).unwrap()
}

// Random lower-triangular M with γ sorted from exp(U[0, 8)).
fn kacnelson_trial<R: Rng>(rng: &mut R, size: usize) -> (DenseMatrix<f64>, Vec<f64>) {
    let full = DenseMatrix::<f64>::random(size, size, rng);
    let m = full.map_indexed(|i, j, v| if j <= i { v } else { 0.0 });
    let mut gamma: Vec<f64> = (0..size)
        .map(|_| rng.gen_range(0.0..8.0f64).exp())
        .collect();
    gamma.sort_by(f64::total_cmp);
    (m, gamma)
}

#[test]
fn weighted_section_is_similar_to_unweighted() {
    let one = weight("one", 256);
    let syms = [
        SymbolSpec::mobius(0.4),
        SymbolSpec::Mobius {
            a: Complex64::new(0.1, -0.3),
        },
        SymbolSpec::TestSymbol { m: 3, n: 1 },
    ];
    for spec in ["thm32", "power:nu=1.5", "osc"] {
        let b = weight(spec, 256);
        for phi in &syms {
            let wt = assemble(phi, &b, 128).unwrap();
            let plain = assemble(phi, &one, 128).unwrap();
            for m in 0..128 {
                for n in 0..128 {
                    let s = ((b.log(m) - b.log(n)) * 0.5).exp();
                    let d = (wt.entry(m, n) - plain.entry(m, n) * s).norm();
                    assert!(d <= 1e-12 * s.max(1.0), "{spec} {} ({m},{n})", phi.label());
                }
            }
        }
    }
}

#[test]
fn section_norms_grow_with_size() {
    let b = weight("power:nu=1", 1024);
    let phi = SymbolSpec::mobius(0.7);
    let mut prev = 0.0;
    for size in [64, 128, 256, 512] {
        let v = op_norm(&assemble(&phi, &b, size).unwrap(), 1e-10)
            .unwrap()
            .value;
        assert!(v >= prev - 1e-10, "N={size}: {v} < {prev}");
        prev = v;
    }
}

#[test]
fn rotations_are_isometries() {
    for spec in ["one", "thm32", "reich:r=0.5", "osc"] {
        let b = weight(spec, 256);
        for theta in [0.3, 2.0, -1.0] {
            let t = assemble(&SymbolSpec::Rotation { theta }, &b, 200).unwrap();
            let v = op_norm(&t, 1e-12).unwrap().value;
            assert!((v - 1.0).abs() <= 1e-10, "{spec} θ={theta}: {v}");
        }
    }
}

#[test]
fn composition_is_submultiplicative_on_padded_sections() {
    let b = weight("power:nu=1", 512);
    let (a1, a2) = (0.3, -0.45);
    let n = 128;
    let lhs = op_norm(
        &assemble(&SymbolSpec::mobius(mobius_param_compose(a1, a2)), &b, n).unwrap(),
        1e-10,
    )
    .unwrap()
    .value;
    let r1 = op_norm(
        &assemble(&SymbolSpec::mobius(a1), &b, 2 * n).unwrap(),
        1e-10,
    )
    .unwrap()
    .value;
    let r2 = op_norm(
        &assemble(&SymbolSpec::mobius(a2), &b, 2 * n).unwrap(),
        1e-10,
    )
    .unwrap()
    .value;
    assert!(lhs <= r1 * r2 * (1.0 + 1e-9), "{lhs} > {r1} × {r2}");
}

// sup_{k≥1} √k r^{k−1}
fn reich_bound(r: f64) -> f64 {
    (1..200)
        .map(|k| (k as f64).sqrt() * r.powi(k - 1))
        .fold(0.0, f64::max)
}

#[test]
fn reich_columns_respect_the_bound() {
    for r in [0.3, 0.5] {
        let b = WeightSequence::parse(&format!("reich:r={r}"), 8192).unwrap();
        let bound = reich_bound(r);
        let syms = [
            SymbolSpec::Monomial { k: 2 },
            SymbolSpec::TestSymbol { m: 2, n: 1 },
            SymbolSpec::TestSymbol { m: 5, n: 3 },
        ];
        for phi in &syms {
            for n in 0..=512 {
                let c = column_norm_ratio(phi, &b, n).unwrap();
                let v = (c.ratio + c.tail_bound).sqrt();
                assert!(
                    v <= bound + 1e-12,
                    "r={r} {} n={n}: {v} > {bound}",
                    phi.label()
                );
            }
        }
    }
}

#[test]
fn factorial_weight_witness_grows_along_factorials() {
    let b = weight("thm32", 1 << 14);
    let phi = SymbolSpec::mobius(0.5);
    let r: Vec<f64> = [25, 121, 721, 5041]
        .iter()
        .map(|&n| column_norm_ratio(&phi, &b, n).unwrap().ratio)
        .collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
}

#[test]
fn alternating_odd_weight_witness_is_linear() {
    let b = weight("altodd", 1 << 13);
    let phi = SymbolSpec::Monomial { k: 2 };
    for k in [1usize, 10, 100, 1000] {
        let c = column_norm_ratio(&phi, &b, 2 * k + 1).unwrap();
        // φⁿ = z^{2n} lands on an even index, where β = 1
        assert!(
            (c.ratio - (k + 1) as f64).abs() <= 1e-9 * k as f64,
            "k={k}: {}",
            c.ratio
        );
    }
}

#[test]
fn reich_weight_witness_diverges_for_mobius() {
    let b = weight("reich:r=0.3", 4096);
    let phi = SymbolSpec::mobius(0.5);
    let r: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| column_norm_ratio(&phi, &b, n).unwrap().ratio)
        .collect();
    assert!(r.windows(2).all(|w| w[1] > 10.0 * w[0]), "{r:?}");
}

#[test]
fn kernel_growth_matches_closed_forms() {
    let grid = [0.9, 0.99, 0.999, 0.9999];
    let s = kernel_growth_fit(&weight("one", 64), &grid).unwrap();
    assert!((s - 0.5).abs() < 0.01, "{s}");
    let s = kernel_growth_fit(&weight("power:nu=1", 64), &grid).unwrap();
    assert!((s - 1.0).abs() < 0.02, "{s}");
    // ‖K_x‖² = 1/(1 − x²) for the Hardy weight
    let v = kernel_norm(&weight("one", 64), 0.6, 1e-14).unwrap();
    assert!((v - 1.25).abs() < 1e-12);
}

#[test]
fn log_squared_kernel_has_no_stable_slope() {
    let b = weight("logsq:c=1", 64);
    let near = kernel_growth_fit(&b, &[0.9, 0.95, 0.99]).unwrap();
    let nearer = kernel_growth_fit(&b, &[0.99, 0.995, 0.999]).unwrap();
    assert!(nearer > 1.2 * near, "{near} {nearer}");
}

#[test]
fn block_partition_is_exact() {
    let b = weight("power:nu=1", 512);
    let t = assemble(&SymbolSpec::mobius(0.5), &b, 343).unwrap();
    let rep = block_decompose(&t, 7, 1e-10).unwrap();
    assert!(rep.unweighted.partition_exact && rep.weighted.partition_exact);
    assert_eq!(rep.blocks, vec![(0, 7), (7, 49), (49, 343)]);
    for bn in [rep.unweighted, rep.weighted] {
        assert!(bn.d <= bn.a + 1e-9 && bn.r <= bn.a + 1e-9);
    }
    let Section::Real(a) = &t.section else {
        panic!("real section expected")
    };
    let sp = split_blocks(a, 7);
    for (m, n) in [(3, 3), (3, 10), (60, 3), (3, 60), (10, 100), (100, 10)] {
        let p = classify(m, n, 7);
        let nonzero = |x: &DenseMatrix<f64>| x.get(m, n) != 0.0 || a.get(m, n) == 0.0;
        let owner = match p {
            Part::D => &sp.d,
            Part::R => &sp.r,
            Part::S => &sp.s,
            Part::U => &sp.u,
        };
        assert!(nonzero(owner));
    }
    assert_eq!(classify(3, 60, 7), Part::U);
    assert_eq!(classify(10, 100, 7), Part::R);
    assert_eq!(classify(100, 10, 7), Part::S);
}

#[test]
fn identity_splits_into_its_diagonal_block() {
    let t = assemble(&SymbolSpec::Monomial { k: 1 }, &weight("one", 64), 64).unwrap();
    let rep = block_decompose(&t, 4, 1e-12).unwrap();
    let u = rep.unweighted;
    assert!((u.d - 1.0).abs() < 1e-14);
    assert_eq!((u.r, u.s, u.u_hs), (0.0, 0.0, 0.0));
    assert!(block_decompose(&t, 65, 1e-12).is_err());
}

#[test]
fn kacnelson_constant_gamma_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, _) = kacnelson_trial(&mut rng, 32);
    let (lhs, rhs) = kacnelson_check(&m, &[2.5; 32], 1e-12).unwrap();
    assert_eq!(lhs, rhs);
    let (lhs, rhs) = kacnelson_check(
        &DenseMatrix::identity(8),
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        1e-12,
    )
    .unwrap();
    assert!((lhs - 1.0).abs() < 1e-14 && (rhs - 1.0).abs() < 1e-14);
}

#[test]
fn kacnelson_rejects_bad_inputs() {
    let m = DenseMatrix::<f64>::identity(3);
    assert!(kacnelson_check(&m, &[1.0, 0.5, 2.0], 1e-12).is_err());
    let upper = DenseMatrix::from_rows(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
    assert!(kacnelson_check(&upper, &[1.0, 1.0], 1e-12).is_err());
}

#[test]
fn band_schur_holds_for_slowly_oscillating_weight() {
    let b = weight("osc", 4096);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a = DenseMatrix::<f64>::random(48, 48, &mut rng);
        let r = band_schur_check(&a, &b, 2.0, 1e-10).unwrap();
        assert!(r.lhs <= r.rhs * (1.0 + 1e-10), "{} > {}", r.lhs, r.rhs);
    }
}

#[test]
fn band_schur_trivial_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = DenseMatrix::<f64>::random(32, 32, &mut rng);
    let r = band_schur_check(&a, &weight("one", 128), 1.5, 1e-10).unwrap();
    assert!((r.k - 1.0).abs() < 1e-15 && r.lhs <= r.rhs * (1.0 + 1e-10));

    let b = weight("osc", 128);
    let mut single = DenseMatrix::<f64>::zeros(32, 32);
    single.set(20, 12, -0.75);
    let r = band_schur_check(&single, &b, 2.0, 1e-12).unwrap();
    let expect = b.ratio(20, 12).sqrt() * 0.75;
    assert!((r.lhs - expect).abs() <= 1e-14 && r.lhs <= r.k * 0.75);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lanczos_agrees_with_power_iteration(rows in 1usize..40, cols in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::<f64>::random(rows, cols, &mut rng);
        let l = matrix_norm(&a, 1e-12).unwrap().value;
        let p = power_norm(&a, 1e-15, 200_000).unwrap().value;
        prop_assert!((l - p).abs() <= 1e-8 * p.max(1e-300), "{} vs {}", l, p);
    }

    #[test]
    fn complex_lanczos_matches_realification(n in 2usize..24, seed in any::<u64>()) {
        // ‖X + iY‖ equals the norm of the real block matrix [[X, −Y], [Y, X]]
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..n * n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let z = DenseMatrix::from_rows(n, n, vals).unwrap();
        let big = DenseMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let v = z.get(i % n, j % n);
            match (i < n, j < n) {
                (true, true) | (false, false) => v.re,
                (true, false) => -v.im,
                (false, true) => v.im,
            }
        });
        let lz = matrix_norm(&z, 1e-12).unwrap().value;
        let lb = matrix_norm(&big, 1e-12).unwrap().value;
        prop_assert!((lz - lb).abs() <= 1e-9 * lb);
    }

    #[test]
    fn kacnelson_random_trials(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, gamma) = kacnelson_trial(&mut rng, 24);
        let (lhs, rhs) = kacnelson_check(&m, &gamma, 1e-12).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
    }
}
