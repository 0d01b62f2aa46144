//! Limited-memory BFGS with optional box bounds.
//!
//! Unbounded problems use a strong-Wolfe line search (bracketing plus
//! safeguarded cubic zoom). With bounds the step is projected onto the box
//! and accepted by Armijo backtracking; curvature pairs that fail
//! `s.y > 0` are skipped.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    /// Stop when the (projected) gradient infinity-norm drops below this.
    pub gtol: f64,
    pub max_iter: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Optional per-coordinate box `[lo, hi]`.
    pub bounds: Option<(f64, f64)>,
    pub max_line_search: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { gtol: 1e-8, max_iter: 500, memory: 10, bounds: None, max_line_search: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective/gradient pair evaluations.
    pub evaluations: usize,
    pub termination: Termination,
}

impl MinimizeResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Problem<F, G> {
    cost: F,
    grad: G,
    evaluations: usize,
}

impl<F, G> Problem<F, G>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.evaluations += 1;
        ((self.cost)(x), (self.grad)(x))
    }
}

fn project(x: &mut [f64], bounds: Option<(f64, f64)>) {
    if let Some((lo, hi)) = bounds {
        for v in x {
            *v = v.clamp(lo, hi);
        }
    }
}

fn projected_gradient(x: &[f64], g: &[f64], bounds: Option<(f64, f64)>) -> Vec<f64> {
    match bounds {
        None => g.to_vec(),
        Some((lo, hi)) => x
            .iter()
            .zip(g)
            .map(|(&xi, &gi)| if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) { 0.0 } else { gi })
            .collect(),
    }
}

/// Two-loop recursion: returns `-H g`.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

struct Trial {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

fn step_point(x: &[f64], d: &[f64], alpha: f64, bounds: Option<(f64, f64)>) -> Vec<f64> {
    let mut p: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
    project(&mut p, bounds);
    p
}

fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn strong_wolfe<F, G>(
    prob: &mut Problem<F, G>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
    max_evals: usize,
) -> Option<Trial>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let dphi0 = dot(g0, d);
    let mut evals = 0;
    let eval = |prob: &mut Problem<F, G>, alpha: f64| {
        let p = step_point(x, d, alpha, None);
        let (f, g) = prob.eval(&p);
        Trial { alpha, x: p, f, g }
    };
    let mut best: Option<Trial> = None;
    let keep_best = |t: &Trial, best: &mut Option<Trial>| {
        if t.f.is_finite() && t.f < f0 + C1 * t.alpha * dphi0 && best.as_ref().is_none_or(|b| t.f < b.f) {
            *best = Some(Trial { alpha: t.alpha, x: t.x.clone(), f: t.f, g: t.g.clone() });
        }
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, dphi0);
    let mut alpha = alpha0;
    let (lo, hi);
    loop {
        let t = eval(prob, alpha);
        evals += 1;
        keep_best(&t, &mut best);
        let dphi = dot(&t.g, d);
        if !t.f.is_finite() || t.f > f0 + C1 * alpha * dphi0 || (a_prev > 0.0 && t.f >= f_prev) {
            lo = (a_prev, f_prev, d_prev);
            hi = (alpha, t.f, dphi);
            break;
        }
        if dphi.abs() <= -C2 * dphi0 {
            return Some(t);
        }
        if dphi >= 0.0 {
            lo = (alpha, t.f, dphi);
            hi = (a_prev, f_prev, d_prev);
            break;
        }
        if evals >= max_evals {
            return best;
        }
        (a_prev, f_prev, d_prev) = (alpha, t.f, dphi);
        alpha *= 2.0;
    }

    let (mut lo, mut hi) = (lo, hi);
    while evals < max_evals {
        let (a, b) = (lo.0.min(hi.0), lo.0.max(hi.0));
        let width = b - a;
        if width < 1e-16 * b.max(1.0) {
            break;
        }
        let guess = if hi.1.is_finite() { cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2) } else { None };
        let alpha = match guess {
            Some(t) if t > a + 0.1 * width && t < b - 0.1 * width => t,
            _ => 0.5 * (a + b),
        };
        let t = eval(prob, alpha);
        evals += 1;
        keep_best(&t, &mut best);
        let dphi = dot(&t.g, d);
        if !t.f.is_finite() || t.f > f0 + C1 * alpha * dphi0 || t.f >= lo.1 {
            hi = (alpha, t.f, dphi);
        } else {
            if dphi.abs() <= -C2 * dphi0 {
                return Some(t);
            }
            if dphi * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, t.f, dphi);
        }
    }
    best
}

fn projected_backtracking<F, G>(
    prob: &mut Problem<F, G>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
    bounds: Option<(f64, f64)>,
    max_evals: usize,
) -> Option<Trial>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let mut alpha = alpha0;
    for _ in 0..max_evals {
        let p = step_point(x, d, alpha, bounds);
        let moved: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
        let decrease = dot(g0, &moved);
        if decrease >= 0.0 {
            alpha *= 0.5;
            continue;
        }
        let (f, g) = prob.eval(&p);
        if f.is_finite() && f <= f0 + C1 * decrease {
            return Some(Trial { alpha, x: p, f, g });
        }
        alpha *= 0.5;
    }
    None
}

/// Minimizes `cost` from `theta0` using its gradient `grad`.
pub fn minimize<F, G>(cost: F, grad: G, theta0: &[f64], opts: &MinimizeOptions) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let mut prob = Problem { cost, grad, evaluations: 0 };
    let mut x = theta0.to_vec();
    project(&mut x, opts.bounds);
    let (mut f, mut g) = prob.eval(&x);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    let termination = loop {
        let pg = projected_gradient(&x, &g, opts.bounds);
        if inf_norm(&pg) < opts.gtol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }

        let mut d = direction(&g, &pairs);
        if dot(&d, &g) >= 0.0 {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if pairs.is_empty() { (1.0 / dot(&g, &g).sqrt()).min(1.0) } else { 1.0 };

        let trial = match opts.bounds {
            None => strong_wolfe(&mut prob, &x, f, &g, &d, alpha0, opts.max_line_search),
            Some(_) => projected_backtracking(&mut prob, &x, f, &g, &d, alpha0, opts.bounds, opts.max_line_search),
        };
        let Some(t) = trial else {
            if !pairs.is_empty() {
                // Retry once along steepest descent before giving up.
                pairs.clear();
                continue;
            }
            break Termination::LineSearchFailed;
        };

        let s: Vec<f64> = t.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = t.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = t.x;
        f = t.f;
        g = t.g;
        iterations += 1;
    };

    let grad_norm = inf_norm(&projected_gradient(&x, &g, opts.bounds));
    MinimizeResult { theta: x, cost: f, grad_norm, iterations, evaluations: prob.evaluations, termination }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| x.iter().map(|v| (v - 1.0).powi(2)).sum(),
            |x| x.iter().map(|v| 2.0 * (v - 1.0)).collect(),
            &[0.0; 5],
            &MinimizeOptions::default(),
        );
        assert!(r.converged());
        assert!(r.theta.iter().all(|v| (v - 1.0).abs() < 1e-8), "{:?}", r.theta);
    }

    #[test]
    fn single_qubit_cost() {
        let r = minimize(|x| (1.0 - x[0].cos()) / 2.0, |x| vec![x[0].sin() / 2.0], &[0.1], &MinimizeOptions::default());
        assert!(r.converged());
        assert!(r.theta[0].abs() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let r = minimize(f, g, &[-1.2, 1.0], &MinimizeOptions::default());
        assert!((r.theta[0] - 1.0).abs() < 1e-6 && (r.theta[1] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn bounded_quadratic_sticks_to_bound() {
        let opts = MinimizeOptions { bounds: Some((-1.0, 0.5)), ..Default::default() };
        let r = minimize(
            |x| x.iter().map(|v| (v - 1.0).powi(2)).sum(),
            |x| x.iter().map(|v| 2.0 * (v - 1.0)).collect(),
            &[0.0, -3.0],
            &opts,
        );
        assert!(r.converged(), "{r:?}");
        assert!(r.theta.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let opts = MinimizeOptions { max_iter: 2, ..Default::default() };
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]), 200.0 * (x[1] - x[0] * x[0])]
        };
        let r = minimize(f, g, &[-1.2, 1.0], &opts);
        assert_eq!(r.termination, Termination::MaxIterations);
        assert!(!r.converged());
        assert!(r.cost < 24.2);
    }
}
