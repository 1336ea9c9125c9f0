//! The saddle-point / beta-model system: fit β so that the expected degrees
//! Σ_k λ_jk of the independent-edge model match a target degree vector t,
//! where λ_jk = logistic(β_j + β_k) on the edges of the host.
//!
//! The solver is damped Newton. The Jacobian of the residual map is 2Q where
//! Q is the weighted signless Laplacian built in [`crate::asymptotic`], so a
//! Cholesky factorization both solves the step and detects bipartite hosts.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graphs::{DegreeSequence, Graph};

/// Arguments |β_j + β_k| are clamped here inside the logistic; beyond this the
/// result is indistinguishable from 0 or 1 at f64 resolution.
const LOGISTIC_CLAMP: f64 = 40.0;

/// Solutions with ‖β‖_∞ beyond this are treated as divergence to the boundary
/// of the degree polytope.
const BOUNDARY_NORM: f64 = 50.0;

const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Error)]
pub enum BetaError {
    #[error("no convergence: best residual {best_residual:.3e}, ‖β‖∞ = {beta_norm:.3e}")]
    NoConvergence { best_residual: f64, beta_norm: f64 },
    #[error("β diverged (‖β‖∞ = {beta_norm:.3e} > {BOUNDARY_NORM}); t lies on or outside the boundary of the degree polytope")]
    Boundary { beta_norm: f64, best_residual: f64 },
    #[error("singular Jacobian: host has a bipartite component {component:?}")]
    SingularJacobian { component: Vec<usize> },
    #[error("degenerate target: Σt must lie strictly between 0 and Σ deg(host)")]
    DegenerateTarget,
    #[error("degree vector has length {got}, host has {want} vertices")]
    LengthMismatch { got: usize, want: usize },
}

/// A solution of the system t_j = Σ_{k: jk∈S} λ_jk.
#[derive(Clone, Debug)]
pub struct BetaSolution {
    pub beta: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    /// Relative density λ = (Σ t_j) / (2|E(S)|).
    pub lambda: f64,
    /// Λ = λ(1−λ).
    pub big_lambda: f64,
    /// ‖r‖_∞ after each accepted step (strictly decreasing).
    pub residual_history: Vec<f64>,
}

impl BetaSolution {
    /// range(β) = max − min, the quantity the enumeration theorem bounds.
    pub fn beta_range(&self) -> f64 {
        let max = self.beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.beta.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iters: 100,
        }
    }
}

/// λ_jk = e^{β_j+β_k} / (1 + e^{β_j+β_k}), numerically stable for large |β|.
pub fn lambda_edge(beta: &[f64], j: usize, k: usize) -> f64 {
    logistic(beta[j] + beta[k])
}

pub(crate) fn logistic(x: f64) -> f64 {
    let x = x.clamp(-LOGISTIC_CLAMP, LOGISTIC_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Residual r_j = −t_j + Σ_{k: jk∈S} λ_jk; zero exactly at a solution.
pub fn residual(host: &Graph, t: &DegreeSequence, beta: &[f64]) -> Vec<f64> {
    let n = host.n();
    let mut r = vec![0.0; n];
    for (j, rj) in r.iter_mut().enumerate() {
        let mut s = -(t.get(j) as f64);
        for k in host.neighbors(j) {
            s += lambda_edge(beta, j, k);
        }
        *rj = s;
    }
    r
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Jacobian of the residual map: 2Q(β), assembled dense.
fn jacobian(host: &Graph, beta: &[f64]) -> DMatrix<f64> {
    let n = host.n();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for (u, v) in host.edges() {
        let lam = lambda_edge(beta, u, v);
        let w = lam * (1.0 - lam);
        j[(u, u)] += w;
        j[(v, v)] += w;
        j[(u, v)] += w;
        j[(v, u)] += w;
    }
    j
}

/// Damped Newton solve of the beta system, starting from the constant vector
/// β^(0) = ½·logit(λ)·1.
///
/// ```
/// use graph_sandwich::beta::{solve_beta, SolveOptions};
/// use graph_sandwich::graphs::{DegreeSequence, Graph};
///
/// let sol = solve_beta(
///     &Graph::complete(5),
///     &DegreeSequence::regular(5, 2).unwrap(),
///     SolveOptions::default(),
/// )
/// .unwrap();
/// assert!(sol.residual_inf <= 1e-10);
/// assert!(sol.beta.iter().all(|b| b.abs() < 1e-12)); // λ = ½ fixed point
/// ```
pub fn solve_beta(
    host: &Graph,
    t: &DegreeSequence,
    opts: SolveOptions,
) -> Result<BetaSolution, BetaError> {
    solve_beta_warm(host, t, None, opts)
}

/// As [`solve_beta`] but optionally warm-started from a previous solution
/// (used by the coupling engine, which refits on a slowly changing host).
pub fn solve_beta_warm(
    host: &Graph,
    t: &DegreeSequence,
    initial: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<BetaSolution, BetaError> {
    let n = host.n();
    if t.len() != n {
        return Err(BetaError::LengthMismatch {
            got: t.len(),
            want: n,
        });
    }
    let m = host.edge_count();
    let sum_t = t.sum();
    if m == 0 || sum_t == 0 || sum_t >= 2 * m {
        return Err(BetaError::DegenerateTarget);
    }
    let lambda = sum_t as f64 / (2.0 * m as f64);
    let beta0 = 0.5 * (lambda / (1.0 - lambda)).ln();
    let mut beta = match initial {
        Some(b) if b.len() == n => b.to_vec(),
        _ => vec![beta0; n],
    };
    let mut r = residual(host, t, &beta);
    let mut r_inf = inf_norm(&r);
    let mut history = vec![r_inf];

    for iter in 1..=opts.max_iters {
        if r_inf <= opts.tol {
            return Ok(BetaSolution {
                residual_inf: r_inf,
                iterations: iter,
                lambda,
                big_lambda: lambda * (1.0 - lambda),
                residual_history: history,
                beta,
            });
        }
        if inf_norm(&beta) > BOUNDARY_NORM {
            return Err(BetaError::Boundary {
                beta_norm: inf_norm(&beta),
                best_residual: r_inf,
            });
        }
        let jac = jacobian(host, &beta);
        let chol = jac.clone().cholesky().ok_or_else(|| {
            match host.bipartite_component() {
                Some(component) => BetaError::SingularJacobian { component },
                None => BetaError::NoConvergence {
                    best_residual: r_inf,
                    beta_norm: inf_norm(&beta),
                },
            }
        })?;
        let step = chol.solve(&DVector::from_column_slice(&r));
        // halve until ‖r‖_∞ strictly decreases
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b - scale * s)
                .collect();
            let cand_r = residual(host, t, &cand);
            let cand_inf = inf_norm(&cand_r);
            if cand_inf < r_inf {
                beta = cand;
                r = cand_r;
                r_inf = cand_inf;
                history.push(r_inf);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(BetaError::NoConvergence {
                best_residual: r_inf,
                beta_norm: inf_norm(&beta),
            });
        }
    }
    if r_inf <= opts.tol {
        return Ok(BetaSolution {
            residual_inf: r_inf,
            iterations: opts.max_iters,
            lambda,
            big_lambda: lambda * (1.0 - lambda),
            residual_history: history,
            beta,
        });
    }
    if inf_norm(&beta) > BOUNDARY_NORM {
        return Err(BetaError::Boundary {
            beta_norm: inf_norm(&beta),
            best_residual: r_inf,
        });
    }
    Err(BetaError::NoConvergence {
        best_residual: r_inf,
        beta_norm: inf_norm(&beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
        let x = 3.0f64.ln();
        assert!((logistic(x) - 0.75).abs() < 1e-12);
        let tail = logistic(-40.0);
        assert!(tail > 0.0 && tail < 1e-17 && tail.is_finite());
    }

    #[test]
    fn residual_at_zero_beta() {
        let k5 = Graph::complete(5);
        let t = DegreeSequence::regular(5, 2).unwrap();
        let r = residual(&k5, &t, &[0.0; 5]);
        assert!(r.iter().all(|x| x.abs() < 1e-15));
        let k4 = Graph::complete(4);
        let t = DegreeSequence::regular(4, 1).unwrap();
        let r = residual(&k4, &t, &[0.0; 4]);
        assert!(r.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn symmetric_fixed_point_converges_immediately() {
        let sol = solve_beta(
            &Graph::complete(5),
            &DegreeSequence::regular(5, 2).unwrap(),
            SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.beta.iter().all(|b| b.abs() < 1e-14));
        assert!((sol.lambda - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regular_recovers_scalar_logit() {
        for (n, d) in [(6usize, 2usize), (7, 4), (9, 6), (10, 3)] {
            let t = DegreeSequence::regular(n, d).unwrap();
            let sol = solve_beta(&Graph::complete(n), &t, SolveOptions::default()).unwrap();
            let lam = d as f64 / (n - 1) as f64;
            let expect = 0.5 * (lam / (1.0 - lam)).ln();
            for b in &sol.beta {
                assert!((b - expect).abs() < 1e-8, "n={n} d={d}: {b} vs {expect}");
            }
            assert!(sol.residual_inf <= 1e-10);
        }
    }

    #[test]
    fn boundary_degree_sequence_fails() {
        // (3,1,1,1) sits on the Erdős–Gallai boundary: the only realization
        // is the star, so β has no finite solution
        let t = DegreeSequence::new(vec![3, 1, 1, 1]).unwrap();
        let err = solve_beta(&Graph::complete(4), &t, SolveOptions::default()).unwrap_err();
        match err {
            BetaError::Boundary { .. } | BetaError::NoConvergence { .. } => {}
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bipartite_host_reports_singular_jacobian() {
        let k2 = Graph::complete(2);
        let t = DegreeSequence::new(vec![1, 1]).unwrap();
        // Σt = 2|E| is degenerate here, so use a 4-cycle with interior t
        let c4 = Graph::cycle(4);
        let t4 = DegreeSequence::new(vec![1, 1, 1, 1]).unwrap();
        let err = solve_beta(&c4, &t4, SolveOptions::default()).unwrap_err();
        match err {
            BetaError::SingularJacobian { component } => assert_eq!(component.len(), 4),
            other => panic!("unexpected error {other}"),
        }
        assert!(solve_beta(&k2, &t, SolveOptions::default()).is_err());
    }

    #[test]
    fn accepted_steps_strictly_decrease_residual() {
        let host = Graph::complete(8);
        let t = DegreeSequence::new(vec![5, 4, 4, 4, 4, 4, 4, 3]).unwrap();
        let sol = solve_beta(&host, &t, SolveOptions::default()).unwrap();
        for w in sol.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(sol.residual_inf <= 1e-10);
    }

    #[test]
    fn complement_antisymmetry() {
        let host = Graph::complete(8);
        let t = DegreeSequence::new(vec![5, 4, 4, 4, 4, 4, 4, 3]).unwrap();
        let s = host.degree_sequence();
        let t_comp: Vec<usize> = (0..8).map(|j| s.get(j) - t.get(j)).collect();
        let t_comp = DegreeSequence::new(t_comp).unwrap();
        let a = solve_beta(&host, &t, SolveOptions::default()).unwrap();
        let b = solve_beta(&host, &t_comp, SolveOptions::default()).unwrap();
        for (x, y) in a.beta.iter().zip(&b.beta) {
            assert!((x + y).abs() < 1e-8);
        }
    }
}
