//! The sequential coupling and independent-sampling procedures, their
//! parameter selection, and the two-sided sandwich assembly.
//!
//! A coupling run maintains three growing edge collections: the multigraphs
//! M_ζ and M_0 (which simplify to the binomial marginals G_ζ and G_0) and the
//! simple prefix M_G of the degree-constrained graph G. Each step draws a
//! uniform edge of K_n; M_0 always takes it, M_ζ takes it with probability
//! 1−ζ, and M_G takes it with probability proportional to the conditional
//! probability that the edge appears in a uniform completion. When that
//! conditional probability falls too far below the best candidate's
//! (η > ζ), the run abandons containment and switches to independent
//! sampling. After the final step, M_G is completed to degree sequence d.
//!
//! `prob_engine` implementations supply the conditional probabilities: the
//! exact oracle (small n) or the fitted beta model (everything else).

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::Serialize;
use thiserror::Error;

use crate::beta::{solve_beta_warm, BetaError, SolveOptions};
use crate::graphs::{DegreeSequence, Graph, Multigraph};
use crate::oracle::{self, Budget, OracleError};

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("xi must lie strictly between 0 and 1, got {0}")]
    InfeasibleXi(f64),
    #[error("zeta = C*xi = {0} exceeds 1")]
    InfeasibleZeta(f64),
    #[error("degree sum is odd")]
    OddDegreeSum,
    #[error("degree sequence is not graphical")]
    NotGraphical,
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("beta engine failure: {0}")]
    Beta(#[from] BetaError),
    #[error("could not construct a completion with the required degrees")]
    CompletionFailed,
    #[error("target graph does not have the requested degree sequence")]
    TargetMismatch,
}

/// The tuning constants of a coupling run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CouplingParams {
    pub n: usize,
    pub xi: f64,
    pub c: f64,
    /// ζ = C·ξ.
    pub zeta: f64,
    /// N = n(n−1)/2.
    pub pairs: u64,
    /// M = ½ Σ d_j.
    pub target_edges: u64,
    /// Poisson mean: μ = −N ln(1−p₀).
    pub mu: f64,
    /// p₀ = (1−ξ)M/N.
    pub p0: f64,
    /// p_ζ = 1 − e^{−μ(1−ζ)/N}.
    pub p_zeta: f64,
}

/// Derives (ζ, μ, p₀, p_ζ) from the degree sequence and (ξ, C).
pub fn compute_params(
    d: &DegreeSequence,
    xi: f64,
    c: f64,
) -> Result<CouplingParams, CouplingError> {
    let n = d.len();
    if n < 2 {
        return Err(CouplingError::TooFewVertices(n));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(CouplingError::InfeasibleXi(xi));
    }
    let zeta = c * xi;
    if zeta > 1.0 {
        return Err(CouplingError::InfeasibleZeta(zeta));
    }
    let m = d.edge_count().ok_or(CouplingError::OddDegreeSum)? as u64;
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let p0 = (1.0 - xi) * m as f64 / pairs as f64;
    let mu = -(pairs as f64) * (1.0 - p0).ln();
    let p_zeta = 1.0 - (-mu * (1.0 - zeta) / pairs as f64).exp();
    Ok(CouplingParams {
        n,
        xi,
        c,
        zeta,
        pairs,
        target_edges: m,
        mu,
        p0,
        p_zeta,
    })
}

/// One Poisson(μ) draw by Knuth's multiplication method on ≤30-mean chunks
/// (exact for any μ, and stable across library versions).
pub fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    fn chunk<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
        if mu <= 0.0 {
            return 0;
        }
        let limit = (-mu).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }
    let mut total = 0u64;
    let mut rem = mu;
    while rem > 30.0 {
        total += chunk(rng, 30.0);
        rem -= 30.0;
    }
    total + chunk(rng, rem)
}

/// Number of steps for one run: I ~ Po(μ).
pub fn draw_iterations<R: Rng + ?Sized>(params: &CouplingParams, rng: &mut R) -> u64 {
    poisson_draw(rng, params.mu)
}

/// How the degree-constrained prefix is completed after the last step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompletionMode {
    /// Draw a uniform residual factor in one shot and union it in (the
    /// marginal is identical to the sequential mode, one conditional draw
    /// instead of many).
    FactorSample,
    /// The literal loop: add one edge at a time with probability
    /// proportional to its conditional probability.
    Sequential,
}

/// Conditional edge weights over the edges of the current host, up to a
/// common positive factor.
pub struct EdgeWeights {
    pub edges: Vec<(usize, usize)>,
    pub kind: WeightsKind,
}

pub enum WeightsKind {
    /// Exact counts: w_e = numerators[e] / denominator.
    Exact {
        numerators: Vec<BigUint>,
        denominator: BigUint,
    },
    /// Fitted beta-model probabilities λ_e.
    Approx(Vec<f64>),
}

impl EdgeWeights {
    fn position(&self, e: (usize, usize)) -> Option<usize> {
        self.edges.iter().position(|&x| x == e)
    }

    /// w_e / max_f w_f as f64 (0 when every weight vanishes).
    fn relative(&self, i: usize) -> f64 {
        match &self.kind {
            WeightsKind::Exact { numerators, .. } => {
                let mx = numerators.iter().max().cloned().unwrap_or_default();
                if mx.is_zero() {
                    0.0
                } else {
                    ratio_f64(&numerators[i], &mx)
                }
            }
            WeightsKind::Approx(w) => {
                let mx = w.iter().copied().fold(0.0, f64::max);
                if mx <= 0.0 {
                    0.0
                } else {
                    w[i] / mx
                }
            }
        }
    }

    /// η_e = 1 − w_e/max (η = 1 when all weights vanish).
    pub fn eta(&self, i: usize) -> f64 {
        1.0 - self.relative(i)
    }

    /// max over edges of η, i.e. 1 − min/max.
    pub fn max_eta(&self) -> f64 {
        match &self.kind {
            WeightsKind::Exact { numerators, .. } => {
                let mx = numerators.iter().max().cloned().unwrap_or_default();
                if mx.is_zero() {
                    return 1.0;
                }
                let mn = numerators.iter().min().cloned().unwrap_or_default();
                1.0 - ratio_f64(&mn, &mx)
            }
            WeightsKind::Approx(w) => {
                let mx = w.iter().copied().fold(0.0, f64::max);
                if mx <= 0.0 {
                    return 1.0;
                }
                let mn = w.iter().copied().fold(f64::INFINITY, f64::min);
                1.0 - mn / mx
            }
        }
    }

    fn all_zero(&self) -> bool {
        match &self.kind {
            WeightsKind::Exact { numerators, .. } => numerators.iter().all(Zero::is_zero),
            WeightsKind::Approx(w) => w.iter().all(|&x| x <= 0.0),
        }
    }
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    num_rational::BigRational::new(num.clone().into(), den.clone().into())
        .to_f64()
        .unwrap_or(0.0)
}

/// Per-run scratch owned by the caller; lets the beta engine warm-start its
/// Newton solves from the previous step while the engine itself stays
/// shareable and read-only.
#[derive(Default)]
pub struct EngineState {
    warm_beta: Option<Vec<f64>>,
}

/// Supplier of the conditional probabilities P(e ∈ G(n,d) | M_G), exactly or
/// asymptotically.
pub trait ProbEngine: Sync {
    fn name(&self) -> &'static str;
    fn is_exact(&self) -> bool;

    /// Weights proportional to P(e ∈ G(n,d) | M_G) for every edge of `host`
    /// (the complement of M_G), where `residual` = d − deg(M_G).
    fn edge_weights(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        state: &mut EngineState,
    ) -> Result<EdgeWeights, CouplingError>;

    /// Draws a residual factor of `host` (uniform for the exact engine,
    /// flagged approximate otherwise). Returns (factor, approximate).
    fn complete(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        mode: CompletionMode,
        state: &mut EngineState,
        rng: &mut dyn RngCore,
    ) -> Result<(Graph, bool), CouplingError>;
}

/// Exact-oracle engine; every probability is a ratio of factor counts.
pub struct ExactEngine {
    pub node_budget: u64,
}

impl Default for ExactEngine {
    fn default() -> Self {
        ExactEngine {
            node_budget: Budget::DEFAULT_NODE_LIMIT,
        }
    }
}

impl ProbEngine for ExactEngine {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn edge_weights(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        _state: &mut EngineState,
    ) -> Result<EdgeWeights, CouplingError> {
        let mut budget = Budget::new(self.node_budget);
        let denominator = oracle::count_factors(host, residual, &mut budget)?.0;
        if denominator.is_zero() {
            return Err(CouplingError::Oracle(OracleError::EmptyFactorSet));
        }
        let edges: Vec<(usize, usize)> = host.edges().collect();
        let mut numerators = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if residual.get(u) == 0 || residual.get(v) == 0 {
                numerators.push(BigUint::zero());
                continue;
            }
            let mut h2 = host.clone();
            h2.remove_edge(u, v);
            let mut t2 = residual.as_slice().to_vec();
            t2[u] -= 1;
            t2[v] -= 1;
            let t2 = DegreeSequence::new(t2).expect("in range");
            numerators.push(oracle::count_factors(&h2, &t2, &mut budget)?.0);
        }
        Ok(EdgeWeights {
            edges,
            kind: WeightsKind::Exact {
                numerators,
                denominator,
            },
        })
    }

    fn complete(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        mode: CompletionMode,
        _state: &mut EngineState,
        rng: &mut dyn RngCore,
    ) -> Result<(Graph, bool), CouplingError> {
        let mut budget = Budget::new(self.node_budget);
        match mode {
            CompletionMode::FactorSample => {
                let f = oracle::sample_factor(host, residual, rng, &mut budget)?;
                Ok((f, false))
            }
            CompletionMode::Sequential => {
                // literal loop: pick edges one at a time with probability
                // proportional to their conditional probability
                let mut cur_host = host.clone();
                let mut res = residual.as_slice().to_vec();
                let mut out = Graph::empty(host.n());
                while res.iter().any(|&r| r > 0) {
                    let t = DegreeSequence::new(res.clone()).expect("in range");
                    let mut state = EngineState::default();
                    let w = self.edge_weights(&cur_host, &t, &mut state)?;
                    let WeightsKind::Exact { numerators, .. } = &w.kind else {
                        unreachable!("exact engine yields exact weights");
                    };
                    let total: BigUint = numerators.iter().sum();
                    if total.is_zero() {
                        return Err(CouplingError::CompletionFailed);
                    }
                    let mut x = oracle::rand_biguint_below(rng, &total);
                    let mut chosen = None;
                    for (e, num) in w.edges.iter().zip(numerators) {
                        if &x < num {
                            chosen = Some(*e);
                            break;
                        }
                        x -= num;
                    }
                    let (u, v) = chosen.expect("x < total guarantees a pick");
                    out.insert_edge(u, v);
                    cur_host.remove_edge(u, v);
                    res[u] -= 1;
                    res[v] -= 1;
                }
                Ok((out, false))
            }
        }
    }
}

/// Beta-model engine: conditional probabilities are the fitted λ_e, refreshed
/// every step and warm-started from the previous fit.
pub struct BetaEngine {
    pub opts: SolveOptions,
}

impl Default for BetaEngine {
    fn default() -> Self {
        BetaEngine {
            opts: SolveOptions::default(),
        }
    }
}

impl ProbEngine for BetaEngine {
    fn name(&self) -> &'static str {
        "asymptotic"
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn edge_weights(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        state: &mut EngineState,
    ) -> Result<EdgeWeights, CouplingError> {
        let sol = solve_beta_warm(host, residual, state.warm_beta.as_deref(), self.opts)?;
        let edges: Vec<(usize, usize)> = host.edges().collect();
        let lam: Vec<f64> = edges
            .iter()
            .map(|&(u, v)| crate::beta::lambda_edge(&sol.beta, u, v))
            .collect();
        state.warm_beta = Some(sol.beta);
        Ok(EdgeWeights {
            edges,
            kind: WeightsKind::Approx(lam),
        })
    }

    fn complete(
        &self,
        host: &Graph,
        residual: &DegreeSequence,
        _mode: CompletionMode,
        _state: &mut EngineState,
        rng: &mut dyn RngCore,
    ) -> Result<(Graph, bool), CouplingError> {
        let f = switching_sample(host, residual, rng)?;
        Ok((f, true))
    }
}

/// Approximately uniform residual factor: greedy host-constrained
/// Havel–Hakimi start, then double-edge switchings.
fn switching_sample(
    host: &Graph,
    residual: &DegreeSequence,
    rng: &mut dyn RngCore,
) -> Result<Graph, CouplingError> {
    let n = host.n();
    if residual.sum() == 0 {
        return Ok(Graph::empty(n));
    }
    let mut g = None;
    for attempt in 0..50 {
        if let Some(found) = greedy_factor(host, residual, rng, attempt) {
            g = Some(found);
            break;
        }
    }
    let mut g = g.ok_or(CouplingError::CompletionFailed)?;
    let edges_count = g.edge_count();
    let switches = 20 * edges_count * ((edges_count as f64).ln().ceil() as usize + 1);
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    for _ in 0..switches {
        if edges.len() < 2 {
            break;
        }
        let i = rng.gen_range(0..edges.len());
        let j = rng.gen_range(0..edges.len());
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = edges[j];
        // orientation coin
        let (c, d) = if rng.gen::<bool>() { (c, d) } else { (d, c) };
        if a == c || a == d || b == c || b == d {
            continue;
        }
        if host.has_edge(a, c) && host.has_edge(b, d) && !g.has_edge(a, c) && !g.has_edge(b, d) {
            g.remove_edge(a, b);
            g.remove_edge(c, d);
            g.insert_edge(a, c);
            g.insert_edge(b, d);
            edges[i] = (a.min(c), a.max(c));
            edges[j] = (b.min(d), b.max(d));
        }
    }
    Ok(g)
}

fn greedy_factor(
    host: &Graph,
    residual: &DegreeSequence,
    rng: &mut dyn RngCore,
    attempt: usize,
) -> Option<Graph> {
    let n = host.n();
    let mut res = residual.as_slice().to_vec();
    let mut g = Graph::empty(n);
    loop {
        let v = (0..n).filter(|&v| res[v] > 0).max_by_key(|&v| res[v])?;
        let mut cands: Vec<usize> = host
            .neighbors(v)
            .filter(|&w| res[w] > 0 && !g.has_edge(v, w))
            .collect();
        if cands.len() < res[v] {
            return None;
        }
        if attempt > 0 {
            // random tie-breaking after the deterministic first try
            for i in (1..cands.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                cands.swap(i, j);
            }
        }
        cands.sort_by_key(|&w| std::cmp::Reverse(res[w]));
        let need = res[v];
        for &w in cands.iter().take(need) {
            g.insert_edge(v.min(w), v.max(w));
            res[w] -= 1;
        }
        res[v] = 0;
        if res.iter().all(|&r| r == 0) {
            return Some(g);
        }
    }
}

/// Outcome of one coupling (or independent-sampling) run.
pub struct CouplingOutcome {
    pub g_zeta: Graph,
    pub g: Graph,
    pub g0: Graph,
    pub stats: CouplingStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingStats {
    /// The Poisson-drawn step count I.
    pub iterations: u64,
    /// ι* where IndSample took over, if it did.
    pub ind_sample_at: Option<u64>,
    /// max over steps of (1 − min w / max w) among candidates.
    pub max_eta: f64,
    /// Edges of M_G when the step loop finished (before completion).
    pub prefix_edges: usize,
    /// The completion (or independent draw) was approximate.
    pub approximate: bool,
}

fn unrank_pair(mut idx: u64, n: usize) -> (usize, usize) {
    for u in 0..n {
        let row = (n - 1 - u) as u64;
        if idx < row {
            return (u, u + 1 + idx as usize);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, pairs: u64) -> (usize, usize) {
    unrank_pair(rng.gen_range(0..pairs), n)
}

fn residual_of(d: &DegreeSequence, g: &Graph) -> DegreeSequence {
    let res: Vec<usize> = (0..d.len()).map(|v| d.get(v) - g.degree(v)).collect();
    DegreeSequence::new(res).expect("residual degrees stay in range")
}

/// The sequential coupling procedure: `iterations` steps, then completion.
///
/// Marginals (for I ~ Po(μ)): G ~ G(n,d), G_0 ~ G(n,p₀), G_ζ ~ G(n,p_ζ);
/// G_ζ ⊆ G_0 always, and G_ζ ⊆ G unless IndSample was called.
pub fn coupling_run(
    d: &DegreeSequence,
    iterations: u64,
    zeta: f64,
    engine: &dyn ProbEngine,
    mode: CompletionMode,
    rng: &mut dyn RngCore,
) -> Result<CouplingOutcome, CouplingError> {
    let n = d.len();
    if n < 2 {
        return Err(CouplingError::TooFewVertices(n));
    }
    if !d.is_graphical() {
        return Err(CouplingError::NotGraphical);
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut m_zeta = Multigraph::empty(n);
    let mut m0 = Multigraph::empty(n);
    let mut m_g = Graph::empty(n);
    let mut state = EngineState::default();
    let mut max_eta: f64 = 0.0;

    for iota in 1..=iterations {
        let (u, v) = random_pair(rng, n, pairs);
        if m_g.has_edge(u, v) {
            m0.add_edge(u, v);
            if rng.gen::<f64>() >= zeta {
                m_zeta.add_edge(u, v);
            }
            continue;
        }
        let host = m_g.complement();
        let residual = residual_of(d, &m_g);
        let weights = engine.edge_weights(&host, &residual, &mut state)?;
        max_eta = max_eta.max(weights.max_eta());
        // saturated prefix: every conditional probability is zero, which the
        // eta convention maps to 1, i.e. the IndSample branch
        let eta = if weights.all_zero() {
            1.0
        } else {
            let pos = weights.position((u, v)).expect("chosen edge is a host edge");
            weights.eta(pos)
        };
        if eta > zeta {
            // hand over the pre-step multigraphs; this step is redone by
            // IndSample with a fresh edge draw
            return indsample_run(
                d, m_zeta, m0, iota, iterations, zeta, engine, mode, rng,
                Some(max_eta),
            );
        }
        let a: f64 = rng.gen();
        m0.add_edge(u, v);
        if a > zeta {
            m_g.insert_edge(u, v);
            m_zeta.add_edge(u, v);
        } else if a >= eta {
            m_g.insert_edge(u, v);
        }
        debug_assert!(m_zeta.simplify().is_subgraph_of(&m_g));
        debug_assert!(m_g.is_subgraph_of(&m0.simplify()));
    }

    let host = m_g.complement();
    let residual = residual_of(d, &m_g);
    let prefix_edges = m_g.edge_count();
    let (factor, approximate) = engine.complete(&host, &residual, mode, &mut state, rng)?;
    let g = m_g.union(&factor);
    debug_assert_eq!(g.degree_sequence(), *d);
    Ok(CouplingOutcome {
        g_zeta: m_zeta.simplify(),
        g,
        g0: m0.simplify(),
        stats: CouplingStats {
            iterations,
            ind_sample_at: None,
            max_eta,
            prefix_edges,
            approximate,
        },
    })
}

/// The independent-sampling escape path: resumes the M_ζ/M_0 evolution at
/// step ι and draws G independently and uniformly.
#[allow(clippy::too_many_arguments)]
pub fn indsample_run(
    d: &DegreeSequence,
    mut m_zeta: Multigraph,
    mut m0: Multigraph,
    iota: u64,
    iterations: u64,
    zeta: f64,
    engine: &dyn ProbEngine,
    mode: CompletionMode,
    rng: &mut dyn RngCore,
    max_eta: Option<f64>,
) -> Result<CouplingOutcome, CouplingError> {
    let n = d.len();
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut state = EngineState::default();
    let (g, approximate) = engine.complete(
        &Graph::complete(n),
        d,
        mode,
        &mut state,
        rng,
    )?;
    for _tau in iota..=iterations {
        let (u, v) = random_pair(rng, n, pairs);
        m0.add_edge(u, v);
        if rng.gen::<f64>() >= zeta {
            m_zeta.add_edge(u, v);
        }
    }
    Ok(CouplingOutcome {
        g_zeta: m_zeta.simplify(),
        g,
        g0: m0.simplify(),
        stats: CouplingStats {
            iterations,
            ind_sample_at: Some(iota),
            max_eta: max_eta.unwrap_or(0.0),
            prefix_edges: 0,
            approximate,
        },
    })
}

/// Outcome of the one-sided embedding G_L ⊆ G.
pub struct EmbedOutcome {
    pub g_lower: Graph,
    pub g: Graph,
    pub g0: Graph,
    pub contained: bool,
    pub params: CouplingParams,
    pub stats: CouplingStats,
}

/// Runs the coupling with I ~ Po(μ) and returns G_L := G_ζ with its
/// containment indicator.
pub fn embed_lower(
    d: &DegreeSequence,
    xi: f64,
    c: f64,
    engine: &dyn ProbEngine,
    mode: CompletionMode,
    rng: &mut dyn RngCore,
) -> Result<EmbedOutcome, CouplingError> {
    let params = compute_params(d, xi, c)?;
    let iterations = draw_iterations(&params, rng);
    let outcome = coupling_run(d, iterations, params.zeta, engine, mode, rng)?;
    let contained = outcome.g_zeta.is_subgraph_of(&outcome.g);
    Ok(EmbedOutcome {
        contained,
        g_lower: outcome.g_zeta,
        g: outcome.g,
        g0: outcome.g0,
        params,
        stats: outcome.stats,
    })
}

/// The coupling run conditioned on its degree-constrained output equalling
/// `target`. Used for the upper side of the sandwich: the branch posteriors
/// follow from the uniform conditional law of the completion, and the
/// IndSample trigger is applied to the chosen edge exactly as in the forward
/// run.
pub fn coupling_run_given(
    d: &DegreeSequence,
    target: &Graph,
    iterations: u64,
    zeta: f64,
    engine: &dyn ProbEngine,
    rng: &mut dyn RngCore,
) -> Result<CouplingOutcome, CouplingError> {
    let n = d.len();
    if target.degree_sequence() != *d {
        return Err(CouplingError::TargetMismatch);
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut m_zeta = Multigraph::empty(n);
    let mut m0 = Multigraph::empty(n);
    let mut m_g = Graph::empty(n);
    let mut state = EngineState::default();
    let mut max_eta: f64 = 0.0;
    let mut ind_sample_at = None;

    let mut iota = 1u64;
    while iota <= iterations {
        let residual = residual_of(d, &m_g);
        if residual.sum() == 0 {
            // saturated: every remaining step is a pure M_ζ/M_0 evolution
            ind_sample_at = Some(iota);
            break;
        }
        let host = m_g.complement();
        let weights = engine.edge_weights(&host, &residual, &mut state)?;
        max_eta = max_eta.max(weights.max_eta());
        let (u, v, eta, add_posterior) =
            choose_conditional_edge(&m_g, target, &weights, rng);
        if let Some(eta) = eta {
            if eta > zeta {
                ind_sample_at = Some(iota);
                break;
            }
        }
        match (m_g.has_edge(u, v), eta) {
            (true, _) => {
                m0.add_edge(u, v);
                if rng.gen::<f64>() >= zeta {
                    m_zeta.add_edge(u, v);
                }
            }
            (false, Some(eta)) => {
                // target edge: posterior between "enters M_G" and "skipped"
                let add = rng.gen::<f64>() < add_posterior;
                m0.add_edge(u, v);
                if add {
                    m_g.insert_edge(u, v);
                    // among adding branches, M_ζ joins with (1−ζ)/(1−η)
                    let q = (1.0 - zeta) / (1.0 - eta);
                    if rng.gen::<f64>() < q {
                        m_zeta.add_edge(u, v);
                    }
                }
            }
            (false, None) => {
                // non-target edge: can never enter M_G
                m0.add_edge(u, v);
            }
        }
        iota += 1;
    }
    if let Some(start) = ind_sample_at {
        for _tau in start..=iterations {
            let (u, v) = random_pair(rng, n, pairs);
            m0.add_edge(u, v);
            if rng.gen::<f64>() >= zeta {
                m_zeta.add_edge(u, v);
            }
        }
    }
    Ok(CouplingOutcome {
        g_zeta: m_zeta.simplify(),
        g: target.clone(),
        g0: m0.simplify(),
        stats: CouplingStats {
            iterations,
            ind_sample_at,
            max_eta,
            prefix_edges: m_g.edge_count(),
            approximate: !engine.is_exact(),
        },
    })
}

/// Chooses the step edge under the conditional law and returns
/// (u, v, η if the edge is outside M_G ∩ target-relevant, add posterior).
///
/// Relative weights, in units of the uniform conditional 1/K(M_G):
///   e ∈ M_G: 1;  e ∈ target∖M_G: 1/W + η_e;  otherwise: η_e,
/// where w_e are the engine weights, W = max w, η_e = 1 − w_e/W. For a
/// chosen target edge the posterior of entering M_G is (1/W)/(1/W + η_e).
fn choose_conditional_edge(
    m_g: &Graph,
    target: &Graph,
    weights: &EdgeWeights,
    rng: &mut dyn RngCore,
) -> (usize, usize, Option<f64>, f64) {
    match &weights.kind {
        WeightsKind::Exact {
            numerators,
            denominator,
        } => {
            let a_max = numerators.iter().max().cloned().unwrap_or_default();
            // per-edge integer weights on the common scale A_max:
            //   in M_G: A_max; target: D + A_max − A_e; other: A_max − A_e
            let mut cum: Vec<BigUint> = Vec::with_capacity(weights.edges.len() + 1);
            let mut total = BigUint::zero();
            let n = m_g.n();
            let mut items: Vec<(usize, usize, Option<usize>)> = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if m_g.has_edge(u, v) {
                        total += &a_max;
                        items.push((u, v, None));
                        cum.push(total.clone());
                    }
                }
            }
            for (i, &(u, v)) in weights.edges.iter().enumerate() {
                let w = if target.has_edge(u, v) {
                    denominator + &a_max - &numerators[i]
                } else {
                    &a_max - &numerators[i]
                };
                total += w;
                items.push((u, v, Some(i)));
                cum.push(total.clone());
            }
            let x = oracle::rand_biguint_below(rng, &total);
            let k = cum.partition_point(|c| c <= &x);
            let (u, v, idx) = items[k];
            match idx {
                None => (u, v, None, 0.0),
                Some(i) => {
                    let eta = weights.eta(i);
                    if target.has_edge(u, v) {
                        // D/(D + A_max − A_e)
                        let den = denominator + &a_max - &numerators[i];
                        let post = ratio_f64(denominator, &den);
                        (u, v, Some(eta), post)
                    } else {
                        (u, v, None, 0.0)
                    }
                }
            }
        }
        WeightsKind::Approx(w) => {
            let mx = w.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let inv_w = 1.0 / mx;
            let n = m_g.n();
            let mut items: Vec<(usize, usize, Option<usize>)> = Vec::new();
            let mut cum: Vec<f64> = Vec::new();
            let mut total = 0.0;
            for u in 0..n {
                for v in (u + 1)..n {
                    if m_g.has_edge(u, v) {
                        total += 1.0;
                        items.push((u, v, None));
                        cum.push(total);
                    }
                }
            }
            for (i, &(u, v)) in weights.edges.iter().enumerate() {
                let eta = 1.0 - w[i] / mx;
                let wt = if target.has_edge(u, v) {
                    inv_w + eta
                } else {
                    eta
                };
                total += wt;
                items.push((u, v, Some(i)));
                cum.push(total);
            }
            let x = rng.gen::<f64>() * total;
            let k = cum.partition_point(|&c| c <= x).min(items.len() - 1);
            let (u, v, idx) = items[k];
            match idx {
                None => (u, v, None, 0.0),
                Some(i) => {
                    let eta = 1.0 - w[i] / mx;
                    if target.has_edge(u, v) {
                        (u, v, Some(eta), inv_w / (inv_w + eta))
                    } else {
                        (u, v, None, 0.0)
                    }
                }
            }
        }
    }
}

/// The full two-sided sandwich: a forward run for the lower side and a
/// conditional run on the complement sequence for the upper side, stitched
/// through the shared G.
pub struct SandwichOutcome {
    pub g_lower: Graph,
    pub g: Graph,
    pub g_upper: Graph,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Marginal of G_L: G(n, p₁) with p₁ = p_ζ(d).
    pub p1: f64,
    /// Marginal of G_U: G(n, p₂) with p₂ = 1 − p_ζ(d′).
    pub p2: f64,
    pub lower_stats: CouplingStats,
    pub upper_stats: CouplingStats,
}

pub fn sandwich(
    d: &DegreeSequence,
    xi: f64,
    c: f64,
    engine: &dyn ProbEngine,
    mode: CompletionMode,
    rng: &mut dyn RngCore,
) -> Result<SandwichOutcome, CouplingError> {
    let lower = embed_lower(d, xi, c, engine, mode, rng)?;
    let d_comp = d.complement();
    let params_up = compute_params(&d_comp, xi, c)?;
    let target = lower.g.complement();
    let iterations = draw_iterations(&params_up, rng);
    let upper = coupling_run_given(&d_comp, &target, iterations, params_up.zeta, engine, rng)?;
    let g_upper = upper.g_zeta.complement();
    let lower_ok = lower.contained;
    let upper_ok = lower.g.is_subgraph_of(&g_upper);
    Ok(SandwichOutcome {
        g_lower: lower.g_lower,
        g: lower.g,
        g_upper,
        lower_ok,
        upper_ok,
        p1: lower.params.p_zeta,
        p2: 1.0 - params_up.p_zeta,
        lower_stats: lower.stats,
        upper_stats: upper.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::substream;

    #[test]
    fn params_example() {
        let d = DegreeSequence::regular(5, 2).unwrap();
        let p = compute_params(&d, 0.1, 2.0).unwrap();
        assert_eq!(p.pairs, 10);
        assert_eq!(p.target_edges, 5);
        assert!((p.p0 - 0.45).abs() < 1e-12);
        assert!((p.mu - (-10.0 * (0.55f64).ln())).abs() < 1e-10);
        assert!((p.mu - 5.97837).abs() < 1e-4);
        // zeta = 0 collapses p_zeta to p0
        let p = compute_params(&d, 0.1, 0.0).unwrap();
        assert!((p.p_zeta - p.p0).abs() < 1e-12);
    }

    #[test]
    fn params_errors() {
        let d = DegreeSequence::regular(5, 2).unwrap();
        assert!(matches!(
            compute_params(&d, 0.0, 2.0),
            Err(CouplingError::InfeasibleXi(_))
        ));
        assert!(matches!(
            compute_params(&d, 0.9, 2.0),
            Err(CouplingError::InfeasibleZeta(_))
        ));
        let odd = DegreeSequence::new(vec![2, 2, 2, 2, 1]).unwrap();
        assert!(matches!(
            compute_params(&odd, 0.1, 2.0),
            Err(CouplingError::OddDegreeSum)
        ));
    }

    #[test]
    fn poisson_mean_and_variance() {
        let mut rng = substream(123, 0);
        let mu = 5.97837;
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = poisson_draw(&mut rng, mu) as f64;
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se_mean = (mu / n as f64).sqrt();
        assert!((mean - mu).abs() < 3.0 * se_mean, "mean {mean} vs {mu}");
        // Var of the sample variance of a Poisson is ≈ (μ + 2μ²)/n
        let se_var = ((mu + 2.0 * mu * mu) / n as f64).sqrt();
        assert!((var - mu).abs() < 3.0 * se_var, "var {var} vs {mu}");
        assert_eq!(poisson_draw(&mut rng, 0.0), 0);
    }

    #[test]
    fn unrank_covers_all_pairs() {
        let n = 7;
        let pairs = n * (n - 1) / 2;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..pairs as u64 {
            let (u, v) = unrank_pair(idx, n);
            assert!(u < v && v < n);
            assert!(seen.insert((u, v)));
        }
        assert_eq!(seen.len(), pairs);
    }

    #[test]
    fn zeta_one_never_calls_indsample_and_g_zeta_is_empty() {
        let d = DegreeSequence::regular(6, 3).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(5, 1);
        for _ in 0..20 {
            let out = coupling_run(&d, 12, 1.0, &engine, CompletionMode::FactorSample, &mut rng)
                .unwrap();
            assert!(out.stats.ind_sample_at.is_none());
            assert_eq!(out.g_zeta.edge_count(), 0);
            assert_eq!(out.g.degree_sequence(), d);
        }
    }

    #[test]
    fn full_degree_sequence_yields_complete_graph() {
        let d = DegreeSequence::regular(6, 5).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(6, 2);
        let out = coupling_run(&d, 10, 0.5, &engine, CompletionMode::FactorSample, &mut rng)
            .unwrap();
        assert!(out.stats.ind_sample_at.is_none());
        assert_eq!(out.g, Graph::complete(6));
        // every conditional probability is 1, so eta stays 0
        assert_eq!(out.stats.max_eta, 0.0);
    }

    #[test]
    fn containment_invariants_hold() {
        let d = DegreeSequence::regular(6, 3).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(7, 3);
        for _ in 0..50 {
            let iterations = poisson_draw(&mut rng, 9.8);
            let out = coupling_run(
                &d,
                iterations,
                0.5,
                &engine,
                CompletionMode::FactorSample,
                &mut rng,
            )
            .unwrap();
            assert!(out.g_zeta.is_subgraph_of(&out.g0), "G_ζ ⊆ G_0 must always hold");
            if out.stats.ind_sample_at.is_none() {
                assert!(out.g_zeta.is_subgraph_of(&out.g));
            }
            assert_eq!(out.g.degree_sequence(), d);
        }
    }

    #[test]
    fn indsample_resume_past_end_returns_input() {
        let d = DegreeSequence::regular(5, 2).unwrap();
        let mut mz = Multigraph::empty(5);
        mz.add_edge(0, 1);
        let mut m0 = Multigraph::empty(5);
        m0.add_edge(0, 1);
        m0.add_edge(2, 3);
        let engine = ExactEngine::default();
        let mut rng = substream(9, 4);
        let out = indsample_run(
            &d,
            mz,
            m0,
            11,
            10,
            0.3,
            &engine,
            CompletionMode::FactorSample,
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(out.g_zeta.edge_count(), 1);
        assert_eq!(out.g0.edge_count(), 2);
        assert_eq!(out.g.degree_sequence(), d);
    }

    #[test]
    fn sandwich_flags_match_edgewise_containment() {
        let d = DegreeSequence::regular(6, 3).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(21, 5);
        for _ in 0..25 {
            let out = sandwich(&d, 0.2, 2.0, &engine, CompletionMode::FactorSample, &mut rng)
                .unwrap();
            assert_eq!(out.lower_ok, out.g_lower.is_subgraph_of(&out.g));
            assert_eq!(out.upper_ok, out.g.is_subgraph_of(&out.g_upper));
            assert_eq!(out.g.degree_sequence(), d);
        }
    }

    #[test]
    fn sandwich_degenerate_full_degree() {
        let d = DegreeSequence::regular(5, 4).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(22, 6);
        let out = sandwich(&d, 0.2, 2.0, &engine, CompletionMode::FactorSample, &mut rng)
            .unwrap();
        assert_eq!(out.g, Graph::complete(5));
        assert_eq!(out.g_upper, Graph::complete(5));
        assert!(out.upper_ok);
    }

    #[test]
    fn conditional_run_respects_target() {
        let d = DegreeSequence::regular(6, 3).unwrap();
        let engine = ExactEngine::default();
        let mut rng = substream(23, 7);
        let target = crate::oracle::sample_factor(
            &Graph::complete(6),
            &d,
            &mut rng,
            &mut Budget::default(),
        )
        .unwrap();
        let out = coupling_run_given(&d, &target, 12, 0.4, &engine, &mut rng).unwrap();
        assert_eq!(out.g, target);
        assert!(out.g_zeta.is_subgraph_of(&out.g0));
    }
}
