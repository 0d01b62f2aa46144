mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use avqls_core::*;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn alpha_ratio(big_n: usize) -> f64 {
    let alpha = |k: usize| 4.0 * (PI * k as f64 / (2.0 * (big_n + 1) as f64)).sin().powi(2);
    alpha(big_n) / alpha(1)
}

fn spd4(seed: u64) -> PreparedSystem {
    random_prepared(&mut ChaCha8Rng::seed_from_u64(seed), 2)
}

#[test]
fn two_qubit_state_matches_matrix_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cfg = AnsatzConfig::new(2, 1);
    let theta = random_theta(&mut rng, cfg.n_params());
    let fast = apply_ansatz(&cfg, &theta.clone().into()).unwrap();
    let chain = dense_cnot(2, 0, 1) * dense_ry(2, 0, theta[0]) * dense_ry(2, 1, theta[1]);
    let chain = dense_ry(2, 0, theta[2]) * dense_ry(2, 1, theta[3]) * chain;
    let want = chain.column(0).into_owned();
    assert!((fast.amplitudes() - want).amax() < 1e-12);
}

#[test]
fn expansion_reassembles_on_random_spd() {
    let system = spd4(1);
    let model = build_cost_model(&system).unwrap();
    for s in [0.0, 0.3, 1.0] {
        let diff = &model.a_op * (s * s) + &model.b_op * s + &model.c_op - dense_hamiltonian(&system.matrix, s);
        assert!(diff.norm() < 1e-12, "s = {s}: {}", diff.norm());
    }
}

#[test]
fn prepared_diag_single_qubit_cost() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let system = prepare(&a, &DVector::from_vec(vec![1.0, 0.0]), &PrepareOptions::default()).unwrap();
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(1, 0);
    let c = cost(&model, &cfg, &vec![PI / 2.0].into(), 1.0).unwrap();
    assert_relative_eq!(c, oracle_cost(&system.matrix, &cfg, &[PI / 2.0], 1.0), epsilon = 1e-14);
}

#[test]
fn cost_extrapolation_hits_direct_value() {
    let system = spd4(2);
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(2, 1);
    let theta = random_theta(&mut ChaCha8Rng::seed_from_u64(3), cfg.n_params());
    let predicted = cost_extrapolate(&model, &cfg, &theta.clone().into(), 0.2, 0.5).unwrap();
    assert_relative_eq!(predicted, oracle_cost(&system.matrix, &cfg, &theta, 0.7), epsilon = 1e-12);
    assert_eq!(cost_extrapolate(&model, &cfg, &theta.clone().into(), 0.2, 0.0).unwrap(), cost(&model, &cfg, &theta.into(), 0.2).unwrap());
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let system = random_prepared(&mut rng, 3);
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(3, 2);
    let theta = random_theta(&mut rng, cfg.n_params());
    let g = cost_gradient(&model, &cfg, &theta.clone().into(), 0.6).unwrap();
    let fd = fd_gradient(|t| oracle_cost(&system.matrix, &cfg, t, 0.6), &theta, 1e-5);
    assert!((&g - &fd).norm() <= 1e-5 * fd.norm());
}

#[test]
fn hessian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let system = random_prepared(&mut rng, 2);
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(2, 1);
    let theta = random_theta(&mut rng, cfg.n_params());
    let h = cost_hessian(&model, &cfg, &theta.clone().into(), 0.4).unwrap();
    let fd = fd_hessian(|t| oracle_cost(&system.matrix, &cfg, t, 0.4), &theta, 1e-5);
    assert!((h - fd).amax() < 1e-4);
}

#[test]
fn component_hessians_are_symmetric_and_consistent() {
    let system = spd4(6);
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(2, 1);
    let zero = cfg.zero_params();
    let (k, b) = component_hessians(&model, &cfg, &zero).unwrap();
    assert!((&k - k.transpose()).amax() < 1e-10);
    assert!((&b - b.transpose()).amax() < 1e-10);

    let theta: ParameterVector = random_theta(&mut ChaCha8Rng::seed_from_u64(7), cfg.n_params()).into();
    let (k, b) = component_hessians(&model, &cfg, &theta).unwrap();
    let h_c = cost_hessian(&model, &cfg, &theta, 0.0).unwrap();
    for s in [0.25, 0.9] {
        let direct = cost_hessian(&model, &cfg, &theta, s).unwrap();
        assert!((&k * (s * s) + &b * s + &h_c - direct).amax() < 1e-9);
    }
}

#[test]
fn hessian_extrapolation_hits_direct_value() {
    let system = spd4(8);
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(2, 1);
    let theta = random_theta(&mut ChaCha8Rng::seed_from_u64(9), cfg.n_params());
    let bundle = Evaluator::new(&model, &cfg).unwrap().bundle(&theta, 0.1).unwrap();
    let direct = cost_hessian(&model, &cfg, &theta.into(), 0.7).unwrap();
    assert!((hessian_extrapolate(&bundle, 0.1, 0.6) - direct).norm() < 1e-9);
    assert_eq!(bundle.extrapolate(0.0), bundle.h_s);
}

#[test]
fn identity_model_extrapolation_is_flat() {
    let system = prepare(&DMatrix::identity(4, 4), &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), &PrepareOptions::default()).unwrap();
    let model = build_cost_model(&system).unwrap();
    let cfg = AnsatzConfig::new(2, 2);
    let theta = random_theta(&mut ChaCha8Rng::seed_from_u64(10), cfg.n_params());
    let bundle = Evaluator::new(&model, &cfg).unwrap().bundle(&theta, 0.3).unwrap();
    assert!(bundle.k.amax() < 1e-12 && bundle.b.amax() < 1e-12);
    assert!((bundle.extrapolate(0.7) - &bundle.h_s).amax() < 1e-12);
    let c0 = cost_extrapolate(&model, &cfg, &theta.clone().into(), 0.3, 0.0).unwrap();
    let c1 = cost_extrapolate(&model, &cfg, &theta.into(), 0.3, 0.7).unwrap();
    assert_relative_eq!(c0, c1, epsilon = 1e-14);
}

#[test]
fn heat_condition_numbers_follow_closed_form() {
    for n in 1..=6 {
        let (a, b, _) = heat_system(&ConductivityProfile::constant(1.0), &SourceSpec::point(), n).unwrap();
        let system = prepare(&a, &b, &PrepareOptions::default()).unwrap();
        assert!(!system.embedded && system.sign_flipped);
        let want = alpha_ratio(1 << n);
        assert_relative_eq!(system.kappa, want, max_relative = 1e-9);
        assert_relative_eq!(condition_number(&a).unwrap(), want, max_relative = 1e-9);
    }
    assert_relative_eq!(alpha_ratio(2), 3.0, epsilon = 1e-12);
}

#[test]
fn point_source_needs_no_reflection() {
    let (a, b, _) = heat_system(&ConductivityProfile::constant(1.0), &SourceSpec::point(), 3).unwrap();
    assert_eq!(b[0], -1.0);
    let system = prepare(&a, &b, &PrepareOptions::default()).unwrap();
    assert_eq!(system.householder, DMatrix::identity(8, 8));
    assert!((&system.matrix + &a / system.scale).amax() < 1e-15);
}

#[test]
fn parametric_solution_is_ground_state() {
    let system = spd4(11);
    let model = build_cost_model(&system).unwrap();
    let x = solve_parametric(&system.matrix, &system.rhs(), 0.5).unwrap();
    assert!((model.hamiltonian(0.5) * &x).amax() < 1e-10);
}

#[test]
fn symmetric_overlaps_are_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = DMatrix::from_fn(8, 8, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
    let a = &g + g.transpose();
    let x = DVector::from_fn(8, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
    let x = &x / x.norm();
    let total: f64 = eigen_overlaps(&a, &x).unwrap().iter().map(|o| o.weight).sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-10);
}

#[test]
fn flat_source_solution_sits_on_the_softest_mode() {
    let (a, b, _) = heat_system(&ConductivityProfile::constant(1.0), &SourceSpec::exponential(0.0), 4).unwrap();
    let x = classical_solve(&a, &b).unwrap();
    let overlaps = eigen_overlaps(&a, &x).unwrap();
    let softest = overlaps.iter().min_by(|p, q| p.eigenvalue.abs().total_cmp(&q.eigenvalue.abs())).unwrap();
    let heaviest = overlaps.iter().max_by(|p, q| p.weight.total_cmp(&q.weight)).unwrap();
    assert_eq!(softest, heaviest);
    assert!(heaviest.weight > 0.9);
}

#[test]
fn householder_two_by_two() {
    let s = householder(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
    let mapped = &s * DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
    assert!((mapped - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-14);
}
