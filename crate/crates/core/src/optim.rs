//! Box-constrained first-order minimisers with monotone backtracking.
//!
//! Every accepted iterate strictly lowers the objective, so the recorded history is
//! non-increasing. The box `|x_i| ≤ bound` is enforced by clamping each trial point.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Steepest descent with an adaptive step.
    Plain,
    /// Heavy-ball momentum with an adaptive step.
    Momentum,
    /// Limited-memory BFGS.
    Lbfgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub method: Method,
    pub max_iters: usize,
    /// Stop when an accepted step lowers the cost by less than this.
    pub tol: f64,
    /// Stop once the cost falls below this value.
    pub target: Option<f64>,
    /// Box bound on every coordinate.
    pub bound: Option<f64>,
    /// First trial step, as the largest coordinate change.
    pub initial_step: f64,
    pub momentum: f64,
    pub memory: usize,
    pub max_backtracks: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs,
            max_iters: 500,
            tol: 1e-12,
            target: None,
            bound: None,
            initial_step: 1e-2,
            momentum: 0.9,
            memory: 20,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Cost decrease fell below the tolerance.
    Converged,
    TargetReached,
    MaxIters,
    /// No decrease could be found along any trial direction.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub cost: f64,
    /// Cost at the start and after every accepted step.
    pub history: Vec<f64>,
    pub status: Status,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn clamp(x: &mut [f64], bound: Option<f64>) {
    if let Some(b) = bound {
        for v in x {
            *v = v.clamp(-b, b);
        }
    }
}

/// Two-loop recursion: approximate `H⁻¹ g`.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
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
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

/// Minimise `f`, which returns the cost and its gradient.
pub fn minimize(mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: &[f64], opts: &MinimizeOptions) -> MinimizeResult {
    let mut x = x0.to_vec();
    clamp(&mut x, opts.bound);
    let (mut cost, mut grad) = f(&x);
    let mut evaluations = 1;
    let mut history = vec![cost];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut velocity = vec![0.0; x.len()];
    let mut step = opts.initial_step;
    let mut status = Status::MaxIters;

    for _ in 0..opts.max_iters {
        if opts.target.is_some_and(|t| cost <= t) {
            status = Status::TargetReached;
            break;
        }
        let gnorm = inf_norm(&grad);
        if gnorm == 0.0 {
            status = Status::Converged;
            break;
        }
        // descent direction d and first trial scale
        let (dir, mut alpha) = match opts.method {
            Method::Lbfgs if !pairs.is_empty() => {
                let d: Vec<f64> = lbfgs_direction(&grad, &pairs).iter().map(|v| -v).collect();
                if dot(&d, &grad) < 0.0 {
                    (d, 1.0)
                } else {
                    pairs.clear();
                    (grad.iter().map(|g| -g / gnorm).collect(), step)
                }
            }
            _ => (grad.iter().map(|g| -g / gnorm).collect(), step),
        };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut trial: Vec<f64> = match opts.method {
                Method::Momentum => {
                    x.iter().zip(&velocity).zip(&dir).map(|((xi, vi), di)| xi + opts.momentum * vi + alpha * di).collect()
                }
                _ => x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect(),
            };
            clamp(&mut trial, opts.bound);
            let (c, g) = f(&trial);
            evaluations += 1;
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let armijo = cost + 1e-4 * dot(&grad, &moved);
            if c.is_finite() && c < cost && (c <= armijo || opts.method == Method::Momentum) {
                accepted = Some((trial, c, g, moved));
                break;
            }
            alpha *= 0.5;
        }

        let Some((trial, c, g, moved)) = accepted else {
            if !pairs.is_empty() || velocity.iter().any(|v| *v != 0.0) {
                // retry from a clean steepest-descent state before giving up
                pairs.clear();
                velocity.iter_mut().for_each(|v| *v = 0.0);
                step = opts.initial_step;
                continue;
            }
            status = Status::Stalled;
            break;
        };

        let decrease = cost - c;
        match opts.method {
            Method::Lbfgs => {
                let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&moved, &y);
                if sy > 1e-12 * dot(&moved, &moved).sqrt() * dot(&y, &y).sqrt() {
                    pairs.push_back((moved, y, 1.0 / sy));
                    if pairs.len() > opts.memory {
                        pairs.pop_front();
                    }
                }
                step = (alpha * 2.0).min(1.0);
            }
            Method::Momentum => {
                velocity = moved;
                step = alpha * 1.2;
            }
            Method::Plain => step = alpha * 1.5,
        }
        x = trial;
        cost = c;
        grad = g;
        history.push(cost);
        if decrease < opts.tol {
            status = Status::Converged;
            break;
        }
    }
    if status == Status::MaxIters && opts.target.is_some_and(|t| cost <= t) {
        status = Status::TargetReached;
    }
    MinimizeResult { x, cost, history, status, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let c = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (c, g)
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &MinimizeOptions { max_iters: 2000, ..Default::default() });
        assert!(r.cost < 1e-10, "{r:?}");
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn every_method_is_monotone_and_respects_bounds() {
        let quad = |x: &[f64]| -> (f64, Vec<f64>) {
            let c = x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 3.0).powi(2)).sum();
            let g = x.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * (v - 3.0)).collect();
            (c, g)
        };
        for method in [Method::Plain, Method::Momentum, Method::Lbfgs] {
            let opts = MinimizeOptions { method, bound: Some(2.0), max_iters: 300, initial_step: 0.1, ..Default::default() };
            let r = minimize(quad, &[0.0; 4], &opts);
            assert!(r.history.windows(2).all(|w| w[1] <= w[0]), "{method:?}");
            assert!(r.x.iter().all(|v| v.abs() <= 2.0));
            assert!(r.x.iter().all(|v| (v - 2.0).abs() < 1e-3), "{method:?}: {:?}", r.x);
        }
    }

    #[test]
    fn flat_objective_converges() {
        let r = minimize(|_| (1.0, vec![0.0, 0.0]), &[0.0, 0.0], &MinimizeOptions::default());
        assert_eq!(r.status, Status::Converged);
    }
}
