mod common;

use common::*;
use oparma::io::{model_to_string, noise_to_string, parse_model, parse_noise};
use oparma::laurent::laurent_coeffs;
use oparma::linalg::{c64, match_spectra, CMatrix, CVector, C64};
use oparma::moments::{moment_estimate, MomentKind, Verdict};
use oparma::noise::{Noise, NoisePath};
use oparma::operator::{ArmaModel, Operator, VolterraRule};
use oparma::scenarios::random_hyperbolic_model;
use oparma::simulate::{series_coefficients, simulate_ma, simulate_theorem1, truncation_k};
use oparma::spectral::{hyperbolic_split, riesz_projector, DEFAULT_N_QUAD};
use proptest::prelude::*;
use rand::Rng;

fn structured_operator(kind: usize, d: usize, seed: u64) -> Operator {
    let mut r = rng(seed);
    match kind {
        0 => Operator::weighted_shift_log((0..d.saturating_sub(1)).map(|_| r.random_range(-3.0..1.0)).collect()),
        1 => Operator::multiplication((0..d).map(|_| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()),
        2 => Operator::volterra(d, VolterraRule::LeftEndpoint),
        3 => Operator::volterra(d, VolterraRule::AdamsBashforth2),
        4 => Operator::circular_shift(d),
        5 => Operator::scaled_unilateral_shift(d, c64(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0))),
        6 => Operator::identity(d),
        7 => Operator::zero(d),
        _ => Operator::dense(random_matrix(&mut r, d, 1.0)).unwrap(),
    }
}

fn hyperbolic_operator(d: usize, inner: usize, seed: u64) -> (Operator, Vec<C64>, CMatrix, CMatrix) {
    let mut r = rng(seed);
    let eig = hyperbolic_eigenvalues(&mut r, d, inner.min(d));
    let (a, v, v_inv) = diagonalizable(&mut r, &eig);
    (Operator::dense(a).unwrap(), eig, v, v_inv)
}

fn gaussian_path(d: usize, seed: u64, t_start: i64, count: usize) -> NoisePath {
    Noise::gaussian(vec![1.0; d], seed).window(0, t_start, count)
}

/// Quadrature coefficients on `|k| ≤ K`, with `K` the split truncation, so
/// the range always covers the decay.
fn wide_coefficients(model: &ArmaModel) -> oparma::laurent::LaurentCoeffs {
    let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD).unwrap();
    let k = truncation_k(model, &split).unwrap().max(20) as i64;
    laurent_coeffs(model, -k, k, (4 * k as usize + 1).next_power_of_two()).unwrap()
}

fn max_diff(a: &NoisePath, b: &NoisePath) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).camax()).fold(0.0, f64::max)
}

fn max_entry(a: &NoisePath) -> f64 {
    a.values.iter().map(|x| x.camax()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn structured_apply_matches_dense(kind in 0usize..9, d in 1usize..24, seed in any::<u64>()) {
        let op = structured_operator(kind, d, seed);
        let v = random_vector(&mut rng(seed ^ 1), d);
        let direct = op.apply(&v).unwrap();
        let dense = op.matrix() * &v;
        prop_assert!((&direct - &dense).camax() <= 1e-12 * (1.0 + dense.camax()));
    }

    #[test]
    fn power_norms_are_submultiplicative(kind in 0usize..9, d in 1usize..16, m in 0usize..6, n in 0usize..6, seed in any::<u64>()) {
        let op = structured_operator(kind, d, seed);
        let joint = op.power_norm(m + n).unwrap();
        prop_assert!(joint <= op.power_norm(m).unwrap() * op.power_norm(n).unwrap() * (1.0 + 1e-10) + 1e-300);
        let joint = op.structured_norm(m + n);
        prop_assert!(joint <= op.structured_norm(m) * op.structured_norm(n) * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn spectral_radius_of_normal_matrices(d in 1usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let eig: Vec<C64> = (0..d).map(|_| C64::from_polar(r.random_range(0.5..2.0), r.random_range(0.0..std::f64::consts::TAU))).collect();
        let u = random_matrix(&mut r, d, 1.0).qr().q();
        let a = &u * CMatrix::from_diagonal(&CVector::from_vec(eig.clone())) * u.adjoint();
        let rad = Operator::dense(a).unwrap().spectral_radius(1e-6).unwrap();
        let oracle = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((rad.value - oracle).abs() <= 1e-10 * oracle);
        // ‖A^n‖ = r^n for normal A, so the power ratio is exact up to rounding
        prop_assert!((rad.power_estimate - oracle).abs() <= 1e-8 * oracle);
        prop_assert!(rad.consistent);
    }

    #[test]
    fn projector_is_an_invariant_idempotent(d in 1usize..10, inner in 0usize..10, seed in any::<u64>()) {
        let (op, eig, v, v_inv) = hyperbolic_operator(d, inner, seed);
        let p = riesz_projector(&op, DEFAULT_N_QUAD).unwrap().matrix;
        let scale = 1.0 + spectral_norm(&p);
        prop_assert!(spectral_norm(&(&p * &p - &p)) <= 1e-8 * scale);
        prop_assert!(spectral_norm(&(&p - eigen_projector(&v, &v_inv, &eig))) <= 1e-8 * scale);
        // ran P is A-invariant: (I − P) A P = 0
        let a = op.matrix();
        let id = CMatrix::identity(d, d);
        prop_assert!(spectral_norm(&((&id - &p) * a * &p)) <= 1e-8 * scale * (1.0 + spectral_norm(a)));
    }

    #[test]
    fn projector_is_stable_under_node_doubling(d in 1usize..8, inner in 0usize..8, seed in any::<u64>()) {
        let (op, ..) = hyperbolic_operator(d, inner, seed);
        let p1 = riesz_projector(&op, 256).unwrap();
        let p2 = riesz_projector(&op, 2 * p1.n_quad).unwrap();
        prop_assert!(spectral_norm(&(&p1.matrix - &p2.matrix)) <= 1e-9 * (1.0 + spectral_norm(&p1.matrix)));
    }

    #[test]
    fn split_blocks_carry_the_spectrum(d in 1usize..10, inner in 0usize..10, seed in any::<u64>()) {
        let (op, eig, ..) = hyperbolic_operator(d, inner, seed);
        let split = hyperbolic_split(&op, DEFAULT_N_QUAD).unwrap();
        prop_assert_eq!(split.inner_dim(), inner.min(d));
        prop_assert!(match_spectra(&split.block_eigenvalues().unwrap(), &eig) <= 1e-8 * 3.0);
        prop_assert!(split.r_inner < 1.0 && split.r_outer_inv < 1.0);
    }

    #[test]
    fn causal_and_anticausal_models(d in 1usize..5, seed in any::<u64>(), causal in any::<bool>()) {
        let inner = if causal { d } else { 0 };
        let (op, ..) = hyperbolic_operator(d, inner, seed);
        let model = ArmaModel::ar1(op);
        let coeffs = wide_coefficients(&model);
        let scale = coeffs.norms().iter().cloned().fold(0.0, f64::max);
        let zero_side: Vec<i64> = if causal { (-15..0).collect() } else { (0..=15).collect() };
        for k in zero_side {
            prop_assert!(spectral_norm(coeffs.get(k).unwrap()) <= 1e-12 * scale, "ψ_{} is not zero", k);
        }
    }

    #[test]
    fn simulation_is_linear_in_the_noise(d in 1usize..5, q in 0usize..3, re in -3.0f64..3.0, im in -3.0f64..3.0, seed in any::<u64>()) {
        let (model, _) = random_hyperbolic_model(d, d / 2, q, seed).unwrap();
        let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD).unwrap();
        let k = truncation_k(&model, &split).unwrap();
        let z = gaussian_path(d, seed, -(k as i64), 30 + 2 * k);
        let alpha = c64(re, im);
        let base = simulate_theorem1(&model, &split, &z, 0, 29, Some(k)).unwrap();
        let scaled = simulate_theorem1(&model, &split, &z.scaled(alpha), 0, 29, Some(k)).unwrap();
        let expected = base.path.scaled(alpha);
        prop_assert!(max_diff(&scaled.path, &expected) <= 1e-12 * (1.0 + max_entry(&expected)));
    }

    #[test]
    fn simulation_is_a_function_of_the_noise_path(d in 1usize..5, q in 0usize..3, seed in any::<u64>()) {
        let (model, _) = random_hyperbolic_model(d, d.div_ceil(2), q, seed).unwrap();
        let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD).unwrap();
        let k = truncation_k(&model, &split).unwrap();
        let z = gaussian_path(d, seed, -(k.max(20) as i64), 30 + 2 * k.max(20));
        let first = simulate_theorem1(&model, &split, &z, 0, 29, Some(k)).unwrap();
        let second = simulate_theorem1(&model, &split, &z, 0, 29, Some(k)).unwrap();
        prop_assert!(max_diff(&first.path, &second.path) <= 1e-12 * (1.0 + max_entry(&first.path)));
        let coeffs = wide_coefficients(&model);
        let ma = simulate_ma(&model, &coeffs, &z, 0, 29).unwrap();
        prop_assert!(max_diff(&first.path, &ma.path) <= 1e-6 * (1.0 + max_entry(&first.path)));
    }

    #[test]
    fn series_matches_quadrature_coefficients(d in 1usize..5, q in 0usize..3, seed in any::<u64>()) {
        let (model, _) = random_hyperbolic_model(d, d / 2, q, seed).unwrap();
        let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD).unwrap();
        let series = series_coefficients(&model, &split, 60).unwrap();
        let quad = wide_coefficients(&model);
        for k in -20..=20 {
            let a = series.get(k).unwrap();
            let b = quad.get(k).unwrap();
            prop_assert!(spectral_norm(&(a - b)) <= 1e-8 * (1.0 + spectral_norm(b)), "k = {}", k);
        }
    }

    #[test]
    fn noise_windows_are_addressed_by_time(start in -50i64..50, offset in 0usize..20, len in 1usize..20, seed in any::<u64>(), rep in 0u64..4, kind in 0usize..3) {
        let noise = match kind {
            0 => Noise::gaussian(vec![1.0, 0.5], seed),
            1 => Noise::from_spec(&serde_json::from_value(serde_json::json!({
                "kind": "componentwise_gaussian", "params": {"sigma": [1.0, 2.0]}, "seed": seed
            })).unwrap()).unwrap(),
            _ => Noise::pareto_exp(CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]), 1, seed),
        };
        let long = noise.window_scaled(rep, start, offset + len);
        let short = noise.window_scaled(rep, start + offset as i64, len);
        prop_assert_eq!(&long[offset..], &short[..]);
    }

    #[test]
    fn model_files_round_trip(kinds in proptest::collection::vec(0usize..9, 1..4), d in 1usize..6, seed in any::<u64>()) {
        let ops: Vec<Operator> = kinds.iter().enumerate().map(|(i, &k)| structured_operator(k, d, seed ^ i as u64)).collect();
        let model = ArmaModel::new(ops[..1].to_vec(), ops[1..].iter().cloned().chain([Operator::identity(d)]).collect()).unwrap();
        let back = parse_model(&model_to_string(&model)).unwrap();
        prop_assert_eq!(back.to_json(), model.to_json());
        prop_assert_eq!(back, model);
    }

    #[test]
    fn noise_files_round_trip(seed in any::<u64>(), alpha in 0.2f64..3.0, nesting in 1u32..3) {
        let noises = [
            Noise::gaussian(vec![1.0, alpha], seed),
            Noise::pareto_exp(CVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]), nesting, seed),
            Noise::gamma_inv_tail(CVector::from_vec(vec![c64(1.0, 0.0)]), 16.0 + alpha, seed),
            Noise::point_mass(CVector::from_vec(vec![c64(alpha, -alpha)])),
        ];
        for noise in noises {
            prop_assert_eq!(parse_noise(&noise_to_string(&noise)).unwrap(), noise);
        }
    }
}

#[test]
fn stationary_marginals_are_shift_invariant() {
    let (model, _) = random_hyperbolic_model(3, 2, 1, 41).unwrap();
    let split = hyperbolic_split(&model.ar_ops()[0], DEFAULT_N_QUAD).unwrap();
    let k = truncation_k(&model, &split).unwrap();
    let kk = k as i64;
    let noise = Noise::gaussian(vec![1.0; 3], 5);
    let coeffs = series_coefficients(&model, &split, k).unwrap();
    let replicates = 10_000u64;
    // disjoint replicates for the two times keep the samples independent
    let norms_at = |t: i64, offset: u64| -> (Vec<f64>, Vec<f64>) {
        (0..replicates)
            .map(|rep| {
                let z = noise.window(rep + offset, t - kk, 2 * k + 2);
                let y = |s: i64| -> f64 {
                    let mut acc = CVector::zeros(3);
                    for j in -kk..=kk {
                        acc += coeffs.get(j).unwrap() * z.get(s - j).unwrap();
                    }
                    acc.norm()
                };
                (y(t), y(t + 1))
            })
            .unzip()
    };
    let (a0, a1) = norms_at(0, 0);
    let (b0, b1) = norms_at(5, replicates);
    let crit = ks_critical_1pct(a0.len(), b0.len());
    let ks0 = ks_statistic(&a0, &b0);
    let ks1 = ks_statistic(&a1, &b1);
    assert!(ks0 < crit, "‖Y_t‖: KS {ks0} ≥ {crit}");
    assert!(ks1 < crit, "‖Y_t+1‖: KS {ks1} ≥ {crit}");
}

#[test]
fn moment_verdicts_are_stable_across_seeds() {
    let direction = CVector::from_vec(vec![c64(1.0, 0.0)]);
    for seed in 0..5 {
        let gaussian = Noise::gaussian(vec![1.0], seed);
        let g = moment_estimate(&gaussian, None, MomentKind::LogPlus, 200_000).unwrap();
        assert_eq!(g.finite_verdict, Verdict::Finite, "gaussian log⁺, seed {seed}");
        let pareto = Noise::pareto_exp(direction.clone(), 1, seed);
        let lp = moment_estimate(&pareto, None, MomentKind::LogPlus, 200_000).unwrap();
        assert_eq!(lp.finite_verdict, Verdict::Diverging, "pareto log⁺, seed {seed}");
        let llp = moment_estimate(&pareto, None, MomentKind::LogPlusLogPlus, 200_000).unwrap();
        assert_eq!(llp.finite_verdict, Verdict::Finite, "pareto log⁺log⁺, seed {seed}");
    }
}
