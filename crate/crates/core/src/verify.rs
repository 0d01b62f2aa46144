//! Quick runtime invariant checks, used by the `verify` CLI subcommand.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{apply_ansatz, AnsatzConfig};
use crate::cost::{build_cost_model, CostModel, Evaluator};
use crate::metrics::solve_parametric;
use crate::problems::{build_source, discretize_heat, householder, prepare, ConductivityProfile, PrepareOptions, SourceSpec};
use crate::schedule::{condition_number, s_of_v, v_bounds, Schedule};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, passed: worst <= tol, detail: format!("worst {worst:.3e} (tol {tol:.0e})") }
}

fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

fn random_model(rng: &mut ChaCha8Rng, dim: usize) -> CostModel {
    let m = DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.4..0.4));
    CostModel::from_matrix(&m).expect("square")
}

/// Runs every check with a fixed seed.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for kappa in [1.0, 10.0, 1e2, 1e3] {
        let (lo, hi) = v_bounds(kappa).expect("valid kappa");
        worst = worst.max(s_of_v(lo, kappa).unwrap().abs()).max((s_of_v(hi, kappa).unwrap() - 1.0).abs());
        let sched = Schedule::default_sequence(kappa, 50).expect("schedule");
        if sched.s_grid.windows(2).any(|w| w[1] <= w[0]) {
            worst = f64::INFINITY;
        }
    }
    out.push(check("schedule endpoints and monotonicity", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        let cfg = AnsatzConfig::new(n, 2);
        let x = apply_ansatz(&cfg, &random_theta(&mut rng, cfg.n_params()).into()).unwrap();
        worst = worst.max((x.amplitudes().norm() - 1.0).abs());
    }
    out.push(check("ansatz norm preservation", worst, 1e-12));

    let (mut worst_c, mut worst_h, mut worst_beta): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..5 {
        let cfg = AnsatzConfig::new(2, 1);
        let model = random_model(&mut rng, 4);
        let ev = Evaluator::new(&model, &cfg).unwrap();
        let theta = random_theta(&mut rng, cfg.n_params());
        let s = rng.random_range(0.0..0.5);
        let ds = rng.random_range(0.0..0.5);
        let direct = ev.cost(&theta, s + ds).unwrap();
        worst_c = worst_c.max((ev.moments(&theta).extrapolate(s, ds) - direct).abs());
        let bundle = ev.bundle(&theta, s).unwrap();
        let later = ev.bundle(&theta, s + ds).unwrap();
        worst_h = worst_h.max((bundle.extrapolate(ds) - &later.h_s).norm());
        let other = ev.with_shift(1.0).bundle(&theta, s).unwrap();
        worst_beta = worst_beta.max((other.h_s - &bundle.h_s).amax()).max((other.grad - &bundle.grad).amax());
    }
    out.push(check("cost extrapolation exactness", worst_c, 1e-9));
    out.push(check("Hessian extrapolation exactness", worst_h, 1e-9));
    out.push(check("parameter-shift angle invariance", worst_beta, 1e-9));

    let mut worst: f64 = 0.0;
    for dim in [2usize, 7, 16, 64] {
        let b = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let s = householder(&b).unwrap();
        let id = DMatrix::<f64>::identity(dim, dim);
        worst = worst
            .max((&s - s.transpose()).amax())
            .max((&s * &s - &id).amax())
            .max((&s * (&b / b.norm()) - crate::linalg::basis_vector(dim, 0)).amax());
    }
    out.push(check("Householder symmetric, involutory, maps b to e_1", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let (a, _) = discretize_heat(&ConductivityProfile::constant(1.0), n).unwrap();
        let big_n = a.nrows();
        let mut ev: Vec<f64> = crate::linalg::sym_eigenvalues(&(-&a / (big_n * big_n) as f64));
        ev.sort_by(f64::total_cmp);
        for (k, e) in ev.iter().enumerate() {
            let want = 4.0 * (std::f64::consts::PI * (k + 1) as f64 / (2.0 * (big_n + 1) as f64)).sin().powi(2);
            worst = worst.max((e - want).abs());
        }
    }
    out.push(check("constant-conductivity spectrum", worst, 1e-9));

    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let (a, _) = discretize_heat(&ConductivityProfile::noisy_constant(1.0, 0.2, rng.random()), n).unwrap();
        let b = build_source(&SourceSpec::exponential(2.0), n);
        let p = prepare(&a, &b, &PrepareOptions::default()).unwrap();
        let model = build_cost_model(&p).unwrap();
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let x = solve_parametric(&p.matrix, &p.rhs(), s).unwrap();
            worst = worst.max(x.dot(&(model.hamiltonian(s) * &x)).abs());
        }
        let kappa_orig = condition_number(&a).unwrap();
        worst = worst.max(((p.kappa - kappa_orig) / kappa_orig).abs() * 1e-2);
    }
    out.push(check("ground-state identity x(s)^T H(s) x(s) = 0", worst, 1e-10));

    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all(7) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
