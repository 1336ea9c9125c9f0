//! The quadratic model Q, Gaussian-moment corrections, and the closed-form
//! saddle-point estimates: the factor count and forced/forbidden-edge
//! probabilities.
//!
//! Q is the weighted signless Laplacian with xᵀQx = ½ Σ_{jk∈S} λ_jk(1−λ_jk)
//! (x_j+x_k)². The Gaussian X has density ∝ e^{−xᵀQx}, i.e. covariance
//! (2Q)⁻¹, and the count estimate is the Laplace approximation around the
//! saddle point with the fourth- and third-order corrections
//! E u(X) − ½ E v²(X) evaluated by Isserlis' theorem.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;
use thiserror::Error;

use crate::beta::{lambda_edge, solve_beta, BetaError, BetaSolution, SolveOptions};
use crate::graphs::{check_a1, DegreeSequence, Graph};

#[derive(Debug, Error)]
pub enum AsymptoticError {
    #[error("Q is not positive definite: host has a bipartite component {component:?}")]
    BipartiteComponent { component: Vec<usize> },
    #[error("Q factorization failed numerically")]
    FactorizationFailed,
    #[error("beta solve failed: {0}")]
    Beta(#[from] BetaError),
    #[error("edge {0}-{1} is not an edge of the host")]
    NotAHostEdge(usize, usize),
    #[error("H+ and H- must be edge-disjoint subgraphs of the host")]
    InvalidSubgraphs,
}

/// The matrix Q of the saddle-point expansion together with its Cholesky
/// factorization and the per-edge weights that built it.
pub struct QuadraticModel {
    n: usize,
    q: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Covariance of X: (2Q)⁻¹.
    cov: DMatrix<f64>,
    edges: Vec<(usize, usize)>,
    lambdas: Vec<f64>,
    /// λ̄ = Σ λ_jk / |E(S)|.
    pub lambda_bar: f64,
    /// Λ = λ̄(1−λ̄).
    pub big_lambda: f64,
}

impl QuadraticModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// log |Q| from the triangular factor.
    pub fn log_det_q(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|x| x.ln())
            .sum::<f64>()
    }

    /// log |2Q| = n·log 2 + log |Q|, the Gaussian normalizer's determinant.
    pub fn log_det_2q(&self) -> f64 {
        self.n as f64 * std::f64::consts::LN_2 + self.log_det_q()
    }

    /// Solves Q x = b via the factorization (two triangular solves).
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Cov(X_j, X_k) where X has density ∝ e^{−xᵀQx}.
    pub fn covariance(&self, j: usize, k: usize) -> f64 {
        self.cov[(j, k)]
    }

    /// σ_{jk,ℓm} = Cov(X_j+X_k, X_ℓ+X_m).
    pub fn sigma(&self, e1: (usize, usize), e2: (usize, usize)) -> f64 {
        let (j, k) = e1;
        let (l, m) = e2;
        self.cov[(j, l)] + self.cov[(j, m)] + self.cov[(k, l)] + self.cov[(k, m)]
    }

    /// Host edges in the order matching [`Self::edge_lambdas`].
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

/// Builds Q from the host and a fitted β. Fails on hosts with a bipartite
/// component (where Q is singular), reporting the offending component.
pub fn build_q(host: &Graph, beta: &[f64]) -> Result<QuadraticModel, AsymptoticError> {
    if let Some(component) = host.bipartite_component() {
        return Err(AsymptoticError::BipartiteComponent { component });
    }
    let n = host.n();
    let edges: Vec<(usize, usize)> = host.edges().collect();
    let lambdas: Vec<f64> = edges
        .iter()
        .map(|&(u, v)| lambda_edge(beta, u, v))
        .collect();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (&(u, v), &lam) in edges.iter().zip(&lambdas) {
        let w = 0.5 * lam * (1.0 - lam);
        q[(u, u)] += w;
        q[(v, v)] += w;
        q[(u, v)] += w;
        q[(v, u)] += w;
    }
    let chol = q
        .clone()
        .cholesky()
        .ok_or(AsymptoticError::FactorizationFailed)?;
    // (2Q)^{-1} column by column through the factorization
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut e = DVector::<f64>::zeros(n);
    for j in 0..n {
        e[j] = 0.5;
        let col = chol.solve(&e);
        cov.set_column(j, &col);
        e[j] = 0.0;
    }
    let lambda_bar = lambdas.iter().sum::<f64>() / edges.len().max(1) as f64;
    Ok(QuadraticModel {
        n,
        q,
        chol,
        cov,
        edges,
        lambdas,
        lambda_bar,
        big_lambda: lambda_bar * (1.0 - lambda_bar),
    })
}

/// E u(X) and E v²(X), the Gaussian correction terms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussianMoments {
    pub eu: f64,
    pub ev2: f64,
}

/// Evaluates E u(X) and E v²(X) by Isserlis' theorem:
/// E(X_j+X_k)⁴ = 3σ²_{jk,jk} and
/// E(X_j+X_k)³(X_ℓ+X_m)³ = 9σ_{jk,jk}σ_{ℓm,ℓm}σ_{jk,ℓm} + 6σ³_{jk,ℓm}.
pub fn gaussian_moments(model: &QuadraticModel, host: &Graph) -> GaussianMoments {
    debug_assert_eq!(model.n(), host.n());
    let edges = model.edges();
    let lambdas = model.edge_lambdas();
    let mut eu = 0.0;
    for (&e, &lam) in edges.iter().zip(lambdas) {
        let s = model.sigma(e, e);
        eu += 0.125 * lam * (1.0 - lam) * (1.0 - 6.0 * lam + 6.0 * lam * lam) * s * s;
    }
    // c_jk = λ(1−λ)(1−2λ)/6; the double loop is O(|E|²) which is fine at the
    // dense desk scale (n up to a few hundred) this module targets
    let coeff: Vec<f64> = lambdas
        .iter()
        .map(|&lam| lam * (1.0 - lam) * (1.0 - 2.0 * lam) / 6.0)
        .collect();
    use rayon::prelude::*;
    let ev2 = (0..edges.len())
        .into_par_iter()
        .map(|a| {
            let ea = edges[a];
            let ca = coeff[a];
            if ca == 0.0 {
                return 0.0;
            }
            let saa = model.sigma(ea, ea);
            let mut acc = 0.0;
            for b in 0..edges.len() {
                let cb = coeff[b];
                if cb == 0.0 {
                    continue;
                }
                let eb = edges[b];
                let sbb = model.sigma(eb, eb);
                let sab = model.sigma(ea, eb);
                acc += ca * cb * (9.0 * saa * sbb * sab + 6.0 * sab * sab * sab);
            }
            acc
        })
        .sum();
    GaussianMoments { eu, ev2 }
}

/// The additive pieces of the log-count estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountComponents {
    /// Σ_{jk∈S} log(1 + e^{β_j+β_k}).
    pub log_prod: f64,
    /// Σ_j t_j β_j.
    pub sum_t_beta: f64,
    /// log |2Q|, the determinant inside the Gaussian normalizer
    /// (2π)^{n/2}|2Q|^{−1/2}.
    pub log_det: f64,
    pub eu: f64,
    pub ev2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountEstimate {
    /// log N(S, t) estimate.
    pub log_n: f64,
    pub components: CountComponents,
    pub lambda: f64,
    pub beta_range: f64,
    /// Advisory: the pseudorandomness condition at γ = 1/8 (warn, don't
    /// refuse).
    pub a1_pass: bool,
}

fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Saddle-point estimate of log N(S, t): fits β, builds Q, and assembles
///
/// log 2 + Σ log(1+e^{β_j+β_k}) − Σ t_jβ_j − (n/2)log(2π) − ½log|2Q|
///       + E u(X) − ½ E v²(X),
///
/// all in log space. The (2π)^{n/2}|2Q|^{−1/2} normalizer is the standard
/// Laplace factor for the Gaussian with precision 2Q.
pub fn estimate_count(host: &Graph, t: &DegreeSequence) -> Result<CountEstimate, AsymptoticError> {
    let sol = solve_beta(host, t, SolveOptions::default())?;
    estimate_count_with(host, t, &sol)
}

/// As [`estimate_count`] but reusing an existing β fit.
pub fn estimate_count_with(
    host: &Graph,
    t: &DegreeSequence,
    sol: &BetaSolution,
) -> Result<CountEstimate, AsymptoticError> {
    let model = build_q(host, &sol.beta)?;
    let moments = gaussian_moments(&model, host);
    let n = host.n() as f64;
    let log_prod: f64 = host
        .edges()
        .map(|(u, v)| log1p_exp(sol.beta[u] + sol.beta[v]))
        .sum();
    let sum_t_beta: f64 = (0..host.n()).map(|j| t.get(j) as f64 * sol.beta[j]).sum();
    let log_det = model.log_det_2q();
    let log_n = std::f64::consts::LN_2 + log_prod - sum_t_beta
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * log_det
        + moments.eu
        - 0.5 * moments.ev2;
    Ok(CountEstimate {
        log_n,
        components: CountComponents {
            log_prod,
            sum_t_beta,
            log_det,
            eu: moments.eu,
            ev2: moments.ev2,
        },
        lambda: sol.lambda,
        beta_range: sol.beta_range(),
        a1_pass: check_a1(host, 0.125).pass,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubgraphEstimate {
    /// Π_{jk∈H⁺} λ_jk · Π_{jk∈H⁻} (1−λ_jk).
    pub p: f64,
    /// The relative-error scale of the estimate:
    /// n^{−1/2} + (‖h‖₂² + ‖t−λs‖_∞‖h‖₁) / (ΛΔ(S)).
    pub error_scale: f64,
}

/// Asymptotic probability that a uniform t-factor contains H⁺ and avoids H⁻.
pub fn estimate_subgraph_probability(
    host: &Graph,
    t: &DegreeSequence,
    h_plus: &Graph,
    h_minus: &Graph,
) -> Result<SubgraphEstimate, AsymptoticError> {
    for (u, v) in h_plus.edges().chain(h_minus.edges()) {
        if !host.has_edge(u, v) {
            return Err(AsymptoticError::NotAHostEdge(u, v));
        }
    }
    if h_plus.edges().any(|(u, v)| h_minus.has_edge(u, v)) {
        return Err(AsymptoticError::InvalidSubgraphs);
    }
    let sol = solve_beta(host, t, SolveOptions::default())?;
    let mut log_p = 0.0;
    for (u, v) in h_plus.edges() {
        log_p += lambda_edge(&sol.beta, u, v).ln();
    }
    for (u, v) in h_minus.edges() {
        log_p += (1.0 - lambda_edge(&sol.beta, u, v)).ln();
    }
    let n = host.n();
    let h: Vec<f64> = (0..n)
        .map(|v| (h_plus.degree(v) + h_minus.degree(v)) as f64)
        .collect();
    let h1: f64 = h.iter().sum();
    let h2sq: f64 = h.iter().map(|x| x * x).sum();
    let t_dev = (0..n)
        .map(|j| (t.get(j) as f64 - sol.lambda * host.degree(j) as f64).abs())
        .fold(0.0, f64::max);
    let scale_den = sol.big_lambda * host.max_degree() as f64;
    let error_scale = (n as f64).powf(-0.5) + (h2sq + t_dev * h1) / scale_den;
    Ok(SubgraphEstimate {
        p: log_p.exp(),
        error_scale,
    })
}

/// λ_{e1}/λ_{e2} under the fitted β: the asymptotic answer to how uneven the
/// conditional edge probabilities of a random factor are.
pub fn conditional_ratio(
    host: &Graph,
    t: &DegreeSequence,
    e1: (usize, usize),
    e2: (usize, usize),
) -> Result<f64, AsymptoticError> {
    for (u, v) in [e1, e2] {
        if !host.has_edge(u, v) {
            return Err(AsymptoticError::NotAHostEdge(u, v));
        }
    }
    let sol = solve_beta(host, t, SolveOptions::default())?;
    Ok(lambda_edge(&sol.beta, e1.0, e1.1) / lambda_edge(&sol.beta, e2.0, e2.1))
}

/// Empirical constants for the entry classes of Q⁻¹: the diagonal scales like
/// 1/(ΛΔ), host-adjacent entries like 1/(ΛΔ²), and the rest like 1/(ΛΔn).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QinvReport {
    pub diag_min_scaled: f64,
    pub diag_max_scaled: f64,
    pub adjacent_max_scaled: f64,
    pub distant_max_scaled: f64,
    pub big_lambda: f64,
    pub max_degree: usize,
}

pub fn check_qinv_structure(model: &QuadraticModel, host: &Graph) -> QinvReport {
    let n = host.n();
    let delta = host.max_degree() as f64;
    let lam = model.big_lambda;
    // Q^{ -1} = 2 · Cov
    let mut diag_min = f64::INFINITY;
    let mut diag_max: f64 = 0.0;
    let mut adj_max: f64 = 0.0;
    let mut far_max: f64 = 0.0;
    for j in 0..n {
        let s = (2.0 * model.covariance(j, j)).abs() * lam * delta;
        diag_min = diag_min.min(s);
        diag_max = diag_max.max(s);
        for k in (j + 1)..n {
            let v = (2.0 * model.covariance(j, k)).abs();
            if host.has_edge(j, k) {
                adj_max = adj_max.max(v * lam * delta * delta);
            } else {
                far_max = far_max.max(v * lam * delta * n as f64);
            }
        }
    }
    QinvReport {
        diag_min_scaled: diag_min,
        diag_max_scaled: diag_max,
        adjacent_max_scaled: adj_max,
        distant_max_scaled: far_max,
        big_lambda: lam,
        max_degree: host.max_degree(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_closed_form_k5() {
        // K_5 at β = 0: Q = (1/8)(3I + J), so diag 0.5 and off-diag 0.125
        let model = build_q(&Graph::complete(5), &[0.0; 5]).unwrap();
        for j in 0..5 {
            for k in 0..5 {
                let expect = if j == k { 0.5 } else { 0.125 };
                assert_relative_eq!(model.q()[(j, k)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn bipartite_host_rejected() {
        let err = build_q(&Graph::complete(2), &[0.0; 2]).unwrap_err();
        match err {
            AsymptoticError::BipartiteComponent { component } => {
                assert_eq!(component, vec![0, 1])
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn k3_eigenvalues() {
        let model = build_q(&Graph::complete(3), &[0.0; 3]).unwrap();
        let mut eigs: Vec<f64> = model.q().clone().symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        assert_relative_eq!(eigs[0], 0.125, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 0.125, epsilon = 1e-12);
        assert_relative_eq!(eigs[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn moments_at_half_lambda() {
        // all λ = ½ makes the odd coefficient vanish identically
        let host = Graph::complete(6);
        let model = build_q(&host, &[0.0; 6]).unwrap();
        let m = gaussian_moments(&model, &host);
        assert_eq!(m.ev2, 0.0);
        assert!(m.eu < 0.0);
    }

    #[test]
    fn qinv_closed_form_k5() {
        // Q = (1/8)(3I+J) inverts to diag 7/3, off-diag −1/3
        let host = Graph::complete(5);
        let model = build_q(&host, &[0.0; 5]).unwrap();
        assert_relative_eq!(2.0 * model.covariance(0, 0), 7.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(2.0 * model.covariance(0, 1), -1.0 / 3.0, epsilon = 1e-10);
        let rep = check_qinv_structure(&model, &host);
        // ΛΔ = 1 here, so the scaled diagonal is exactly 7/3
        assert_relative_eq!(rep.diag_max_scaled, 7.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(rep.adjacent_max_scaled, (1.0 / 3.0) * 4.0, epsilon = 1e-9);
    }

    #[test]
    fn conditional_ratio_symmetry() {
        let host = Graph::complete(6);
        let t = DegreeSequence::regular(6, 3).unwrap();
        let r = conditional_ratio(&host, &t, (0, 1), (0, 1)).unwrap();
        assert_eq!(r, 1.0);
        let r = conditional_ratio(&host, &t, (0, 1), (4, 5)).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn subgraph_estimate_trivial_cases() {
        let host = Graph::complete(8);
        let t = DegreeSequence::regular(8, 4).unwrap();
        let empty = Graph::empty(8);
        let est = estimate_subgraph_probability(&host, &t, &empty, &empty).unwrap();
        assert_eq!(est.p, 1.0);
        assert_relative_eq!(est.error_scale, (8.0f64).powf(-0.5), epsilon = 1e-12);
        let one = Graph::from_edges(8, &[(0, 1)]).unwrap();
        let est = estimate_subgraph_probability(&host, &t, &one, &empty).unwrap();
        assert_relative_eq!(est.p, 4.0 / 7.0, epsilon = 1e-9);
    }
}
