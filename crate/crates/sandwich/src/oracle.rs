//! Exact ground truth: count t-factors of a host graph, compute exact
//! containment probabilities, and sample t-factors exactly uniformly.
//!
//! Counting is a depth-first elimination over vertices in a fixed order with
//! feasibility pruning (parity of the residual sum, residual degree vs
//! residual host degree) and memoization on the residual-demand vector, which
//! is valid because the order is fixed up front. When the not-yet-eliminated
//! part of the host is complete, vertices become exchangeable and the state
//! collapses to a sorted demand multiset, which is what makes hosts like
//! `K_12` tractable. All arithmetic is exact: big integers for counts,
//! big rationals for probabilities.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::graphs::{DegreeSequence, Graph};

/// Deterministic cap on the number of search nodes a single oracle call may
/// expand.
#[derive(Clone, Debug)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub const DEFAULT_NODE_LIMIT: u64 = 100_000_000;

    pub fn new(limit: u64) -> Budget {
        Budget { limit, used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.used += 1;
        if self.used > self.limit {
            Err(OracleError::BudgetExceeded { used: self.used })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Budget {
        Budget::new(Budget::DEFAULT_NODE_LIMIT)
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search budget exceeded after {used} nodes")]
    BudgetExceeded { used: u64 },
    #[error("the factor set is empty (denominator count is zero)")]
    EmptyFactorSet,
    #[error("degree vector has length {got}, host has {want} vertices")]
    LengthMismatch { got: usize, want: usize },
    #[error("edge {0}-{1} is not an edge of the host")]
    NotAHostEdge(usize, usize),
    #[error("H+ and H- must be edge-disjoint subgraphs of the host")]
    InvalidSubgraphs,
}

/// Exact number of t-factors, an arbitrary-precision nonnegative integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorCount(pub BigUint);

impl FactorCount {
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl std::fmt::Display for FactorCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Ctx<'a> {
    n: usize,
    /// later_nbrs[k][..] = positions (into the suffix starting at k+1) of the
    /// host neighbors of order[k] that come later in the elimination order.
    later_nbrs: Vec<Vec<usize>>,
    /// active_deg[k][i] = host degree of suffix vertex i within the suffix at
    /// level k.
    active_deg: Vec<Vec<u16>>,
    /// complete_from[k]: the host induced on order[k..] is complete.
    complete_from: Vec<bool>,
    memo: HashMap<Box<[u16]>, BigUint>,
    complete_memo: HashMap<Box<[u16]>, BigUint>,
    budget: &'a mut Budget,
}

fn binomial(c: usize, a: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..a {
        acc = acc * BigUint::from(c - i) / BigUint::from(i + 1);
    }
    acc
}

impl Ctx<'_> {
    /// Counting when every remaining pair of vertices is host-adjacent:
    /// vertices with equal demand are exchangeable, so recurse on the sorted
    /// demand multiset.
    fn count_complete(&mut self, demands: &[u16]) -> Result<BigUint, OracleError> {
        self.budget.tick()?;
        let mut sorted: Vec<u16> = demands.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        while sorted.last() == Some(&0) {
            sorted.pop();
        }
        if sorted.is_empty() {
            return Ok(BigUint::one());
        }
        let key: Box<[u16]> = sorted.clone().into_boxed_slice();
        if let Some(hit) = self.complete_memo.get(&key) {
            return Ok(hit.clone());
        }
        let r = sorted[0] as usize;
        let rest = &sorted[1..];
        if r > rest.len() {
            self.complete_memo.insert(key, BigUint::zero());
            return Ok(BigUint::zero());
        }
        // group the remaining demands by value
        let mut groups: Vec<(u16, usize)> = Vec::new();
        for &v in rest {
            match groups.last_mut() {
                Some((val, c)) if *val == v => *c += 1,
                _ => groups.push((v, 1)),
            }
        }
        let rest_owned = rest.to_vec();
        let total = self.sum_group_choices(&groups, &rest_owned, 0, r, &BigUint::one(), &mut Vec::new())?;
        self.complete_memo.insert(key, total.clone());
        Ok(total)
    }

    /// Sum over ways to take `need` connections split across demand groups.
    fn sum_group_choices(
        &mut self,
        groups: &[(u16, usize)],
        rest: &[u16],
        gi: usize,
        need: usize,
        ways: &BigUint,
        taken: &mut Vec<(u16, usize)>,
    ) -> Result<BigUint, OracleError> {
        if gi == groups.len() {
            if need != 0 {
                return Ok(BigUint::zero());
            }
            let mut next: Vec<u16> = Vec::with_capacity(rest.len());
            let mut idx = 0usize;
            for &(val, count) in groups {
                let t = taken
                    .iter()
                    .find(|(v, _)| *v == val)
                    .map(|(_, a)| *a)
                    .unwrap_or(0);
                for _ in 0..t {
                    next.push(val - 1);
                }
                for _ in t..count {
                    next.push(val);
                }
                idx += count;
            }
            debug_assert_eq!(idx, rest.len());
            return Ok(ways * self.count_complete(&next)?);
        }
        let (val, count) = groups[gi];
        let mut total = BigUint::zero();
        let hi = count.min(need);
        for a in 0..=hi {
            if val == 0 && a > 0 {
                break;
            }
            taken.push((val, a));
            let w = ways * binomial(count, a);
            total += self.sum_group_choices(groups, rest, gi + 1, need - a, &w, taken)?;
            taken.pop();
        }
        Ok(total)
    }

    fn count_at(&mut self, k: usize, res: &[u16]) -> Result<BigUint, OracleError> {
        self.budget.tick()?;
        if k == self.n {
            return Ok(BigUint::one());
        }
        if res.iter().all(|&r| r == 0) {
            return Ok(BigUint::one());
        }
        if self.complete_from[k] {
            return self.count_complete(res);
        }
        // residual demand cannot exceed residual host degree at any vertex
        for (i, &r) in res.iter().enumerate() {
            if r > self.active_deg[k][i] {
                return Ok(BigUint::zero());
            }
        }
        let key: Box<[u16]> = res.to_vec().into_boxed_slice();
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let r = res[0] as usize;
        let cands: Vec<usize> = self.later_nbrs[k]
            .iter()
            .copied()
            .filter(|&p| res[p + 1] > 0)
            .collect();
        let total = if r > cands.len() {
            BigUint::zero()
        } else {
            let mut next: Vec<u16> = res[1..].to_vec();
            self.sum_subsets(k, &cands, 0, r, &mut next)?
        };
        self.memo.insert(key, total.clone());
        Ok(total)
    }

    fn sum_subsets(
        &mut self,
        k: usize,
        cands: &[usize],
        start: usize,
        need: usize,
        next: &mut Vec<u16>,
    ) -> Result<BigUint, OracleError> {
        if need == 0 {
            return self.count_at(k + 1, next);
        }
        if cands.len() - start < need {
            return Ok(BigUint::zero());
        }
        let mut total = BigUint::zero();
        for i in start..=(cands.len() - need) {
            let p = cands[i];
            next[p] -= 1;
            total += self.sum_subsets(k, cands, i + 1, need - 1, next)?;
            next[p] += 1;
        }
        Ok(total)
    }
}

fn make_ctx<'a>(
    host: &Graph,
    t: &DegreeSequence,
    budget: &'a mut Budget,
) -> Result<Option<CtxWithRes<'a>>, OracleError> {
    let n = host.n();
    if t.len() != n {
        return Err(OracleError::LengthMismatch {
            got: t.len(),
            want: n,
        });
    }
    if t.sum() % 2 != 0 {
        return Ok(None);
    }
    for v in 0..n {
        if t.get(v) > host.degree(v) {
            return Ok(None);
        }
    }
    // fixed elimination order: most constrained first (smallest slack between
    // host degree and demand), ties by vertex id
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (host.degree(v) - t.get(v), v));
    let pos_in_suffix: Vec<usize> = {
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    };
    let later_nbrs: Vec<Vec<usize>> = (0..n)
        .map(|k| {
            let mut nb: Vec<usize> = host
                .neighbors(order[k])
                .filter(|&w| pos_in_suffix[w] > k)
                .map(|w| pos_in_suffix[w] - (k + 1))
                .collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    let mut active_deg: Vec<Vec<u16>> = vec![Vec::new(); n];
    for k in 0..n {
        active_deg[k] = (k..n)
            .map(|i| {
                host.neighbors(order[i])
                    .filter(|&w| pos_in_suffix[w] >= k)
                    .count() as u16
            })
            .collect();
    }
    let mut complete_from = vec![false; n];
    let mut complete = true;
    for k in (0..n).rev() {
        let suffix_size = n - k;
        if complete {
            complete = active_deg[k][0] as usize == suffix_size - 1
                && (k..n).all(|i| active_deg[k][i - k] as usize == suffix_size - 1);
        }
        complete_from[k] = complete;
    }
    let res0: Vec<u16> = order.iter().map(|&v| t.get(v) as u16).collect();
    let ctx = Ctx {
        n,
        later_nbrs,
        active_deg,
        complete_from,
        memo: HashMap::new(),
        complete_memo: HashMap::new(),
        budget,
    };
    Ok(Some(CtxWithRes { ctx, res0 }))
}

struct CtxWithRes<'a> {
    ctx: Ctx<'a>,
    res0: Vec<u16>,
}

/// Exact number of spanning subgraphs of `host` with degree sequence `t`.
///
/// ```
/// use graph_sandwich::graphs::{DegreeSequence, Graph};
/// use graph_sandwich::oracle::{count_factors, Budget};
///
/// let k4 = Graph::complete(4);
/// let matchings = count_factors(&k4, &DegreeSequence::regular(4, 1).unwrap(),
///                               &mut Budget::default()).unwrap();
/// assert_eq!(matchings.to_string(), "3");
/// ```
pub fn count_factors(
    host: &Graph,
    t: &DegreeSequence,
    budget: &mut Budget,
) -> Result<FactorCount, OracleError> {
    match make_ctx(host, t, budget)? {
        None => Ok(FactorCount(BigUint::zero())),
        Some(CtxWithRes { mut ctx, res0 }) => {
            let v = ctx.count_at(0, &res0)?;
            Ok(FactorCount(v))
        }
    }
}

/// Probability that `edge` appears in a uniformly random t-factor of `host`,
/// as an exact rational: N(host − e, t − 1_e) / N(host, t).
pub fn edge_probability(
    host: &Graph,
    t: &DegreeSequence,
    edge: (usize, usize),
    budget: &mut Budget,
) -> Result<BigRational, OracleError> {
    let (u, v) = edge;
    if !host.has_edge(u, v) {
        return Err(OracleError::NotAHostEdge(u, v));
    }
    let den = count_factors(host, t, budget)?;
    if den.is_zero() {
        return Err(OracleError::EmptyFactorSet);
    }
    if t.get(u) == 0 || t.get(v) == 0 {
        return Ok(BigRational::zero());
    }
    let mut host2 = host.clone();
    host2.remove_edge(u, v);
    let mut t2 = t.as_slice().to_vec();
    t2[u] -= 1;
    t2[v] -= 1;
    let t2 = DegreeSequence::new(t2).expect("decremented degrees stay in range");
    let num = count_factors(&host2, &t2, budget)?;
    Ok(BigRational::new(num.0.into(), den.0.into()))
}

/// Probability that a uniform t-factor of `host` contains every edge of
/// `h_plus` and avoids every edge of `h_minus`, exactly:
/// N(host − H⁺ − H⁻, t − deg(H⁺)) / N(host, t).
pub fn subgraph_probability_exact(
    host: &Graph,
    t: &DegreeSequence,
    h_plus: &Graph,
    h_minus: &Graph,
    budget: &mut Budget,
) -> Result<BigRational, OracleError> {
    for (u, v) in h_plus.edges().chain(h_minus.edges()) {
        if !host.has_edge(u, v) {
            return Err(OracleError::NotAHostEdge(u, v));
        }
    }
    if h_plus.edges().any(|(u, v)| h_minus.has_edge(u, v)) {
        return Err(OracleError::InvalidSubgraphs);
    }
    let den = count_factors(host, t, budget)?;
    if den.is_zero() {
        return Err(OracleError::EmptyFactorSet);
    }
    let mut t2 = t.as_slice().to_vec();
    for v in 0..host.n() {
        let need = h_plus.degree(v);
        if t2[v] < need {
            return Ok(BigRational::zero());
        }
        t2[v] -= need;
    }
    let host2 = host.minus(h_plus).minus(h_minus);
    let t2 = DegreeSequence::new(t2).expect("reduced degrees stay in range");
    let num = count_factors(&host2, &t2, budget)?;
    Ok(BigRational::new(num.0.into(), den.0.into()))
}

/// Uniform big integer below `bound` (rejection sampling on the top word).
pub(crate) fn rand_biguint_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let words = bits.div_ceil(64) as usize;
    let top_mask = if bits % 64 == 0 {
        u64::MAX
    } else {
        (1u64 << (bits % 64)) - 1
    };
    loop {
        let mut digits: Vec<u64> = (0..words).map(|_| rng.gen::<u64>()).collect();
        if let Some(last) = digits.last_mut() {
            *last &= top_mask;
        }
        let x = BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|&w| [(w & 0xffff_ffff) as u32, (w >> 32) as u32])
                .collect::<Vec<u32>>(),
        );
        if &x < bound {
            return x;
        }
    }
}

/// Draws an exactly uniform t-factor of `host`.
///
/// Walks the host edges in a fixed order, including each with its exact
/// conditional probability and conditioning as it goes; the running
/// denominator is carried forward so each step costs one count.
pub fn sample_factor<R: Rng + ?Sized>(
    host: &Graph,
    t: &DegreeSequence,
    rng: &mut R,
    budget: &mut Budget,
) -> Result<Graph, OracleError> {
    let den = count_factors(host, t, budget)?;
    if den.is_zero() {
        return Err(OracleError::EmptyFactorSet);
    }
    let mut den = den.0;
    let mut cur_host = host.clone();
    let mut cur_t = t.as_slice().to_vec();
    let mut out = Graph::empty(host.n());
    let edges: Vec<(usize, usize)> = host.edges().collect();
    for (u, v) in edges {
        if den.is_one() && cur_t.iter().all(|&x| x == 0) {
            break;
        }
        cur_host.remove_edge(u, v);
        let num = if cur_t[u] == 0 || cur_t[v] == 0 {
            BigUint::zero()
        } else {
            let mut t2 = cur_t.clone();
            t2[u] -= 1;
            t2[v] -= 1;
            let t2 = DegreeSequence::new(t2).expect("in range");
            count_factors(&cur_host, &t2, budget)?.0
        };
        let include = if num.is_zero() {
            false
        } else if num == den {
            true
        } else {
            rand_biguint_below(rng, &den) < num
        };
        if include {
            out.insert_edge(u, v);
            cur_t[u] -= 1;
            cur_t[v] -= 1;
            den = num;
        } else {
            den -= num;
        }
    }
    debug_assert!(cur_t.iter().all(|&x| x == 0));
    Ok(out)
}

/// Enumerates every t-factor of `host` (intended for small hosts, e.g. the
/// class enumeration behind chi-square marginal tests).
pub fn enumerate_factors(
    host: &Graph,
    t: &DegreeSequence,
    budget: &mut Budget,
) -> Result<Vec<Graph>, OracleError> {
    if t.len() != host.n() {
        return Err(OracleError::LengthMismatch {
            got: t.len(),
            want: host.n(),
        });
    }
    let mut out = Vec::new();
    if t.sum() % 2 != 0 {
        return Ok(out);
    }
    let edges: Vec<(usize, usize)> = host.edges().collect();
    // suffix_deg[i][v] = degree of v among edges[i..]
    let n = host.n();
    let m = edges.len();
    let mut suffix_deg = vec![vec![0u32; n]; m + 1];
    for i in (0..m).rev() {
        suffix_deg[i] = suffix_deg[i + 1].clone();
        suffix_deg[i][edges[i].0] += 1;
        suffix_deg[i][edges[i].1] += 1;
    }
    fn rec(
        i: usize,
        edges: &[(usize, usize)],
        res: &mut Vec<usize>,
        chosen: &mut Vec<(usize, usize)>,
        suffix_deg: &[Vec<u32>],
        out: &mut Vec<Graph>,
        n: usize,
        budget: &mut Budget,
    ) -> Result<(), OracleError> {
        budget.tick()?;
        if res.iter().zip(&suffix_deg[i]) .any(|(&r, &avail)| r > avail as usize) {
            return Ok(());
        }
        if i == edges.len() {
            if res.iter().all(|&r| r == 0) {
                out.push(Graph::from_edges(n, chosen).expect("chosen edges are valid"));
            }
            return Ok(());
        }
        let (u, v) = edges[i];
        if res[u] > 0 && res[v] > 0 {
            res[u] -= 1;
            res[v] -= 1;
            chosen.push((u, v));
            rec(i + 1, edges, res, chosen, suffix_deg, out, n, budget)?;
            chosen.pop();
            res[u] += 1;
            res[v] += 1;
        }
        rec(i + 1, edges, res, chosen, suffix_deg, out, n, budget)
    }
    let mut res = t.as_slice().to_vec();
    rec(
        0,
        &edges,
        &mut res,
        &mut Vec::new(),
        &suffix_deg,
        &mut out,
        n,
        budget,
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn count(host: &Graph, t: &[usize]) -> BigUint {
        let t = DegreeSequence::new(t.to_vec()).unwrap();
        count_factors(host, &t, &mut Budget::default()).unwrap().0
    }

    #[test]
    fn complete_host_counts() {
        assert_eq!(count(&Graph::complete(4), &[1, 1, 1, 1]), 3u32.into());
        assert_eq!(count(&Graph::complete(4), &[3, 3, 3, 3]), 1u32.into());
        assert_eq!(count(&Graph::complete(6), &[1; 6]), 15u32.into());
        // Hamilton cycles of K_5 with both orientations folded: (5-1)!/2 = 12
        assert_eq!(count(&Graph::complete(5), &[2; 5]), 12u32.into());
        // 2-factors of K_7: one 7-cycle (6!/2 = 360) or a triangle plus a
        // 4-cycle (C(7,3)·1·3 = 105)
        assert_eq!(count(&Graph::complete(7), &[2; 7]), 465u32.into());
        assert_eq!(count(&Graph::complete(8), &[1; 8]), 105u32.into());
    }

    #[test]
    fn parity_and_infeasible() {
        assert!(count(&Graph::complete(4), &[1, 1, 1, 2]).is_zero());
        assert!(count(&Graph::cycle(5), &[2, 2, 2, 2, 1]).is_zero());
        // demand above host degree
        assert!(count(&Graph::cycle(5), &[3, 1, 1, 1, 0]).is_zero());
    }

    #[test]
    fn general_host_counts() {
        // the cycle C_6 has exactly 2 perfect matchings
        assert_eq!(count(&Graph::cycle(6), &[1; 6]), 2u32.into());
        // its only 2-factor is itself
        assert_eq!(count(&Graph::cycle(6), &[2; 6]), 1u32.into());
        // K_8 minus a perfect matching: 3-factors, checked against the
        // complement identity inside the same host
        let mut h = Graph::complete(8);
        for i in 0..4 {
            h.remove_edge(2 * i, 2 * i + 1);
        }
        let a = count(&h, &[3; 8]);
        let b = count(&h, &[6 - 3; 8]);
        assert_eq!(a, b);
        assert!(!a.is_zero());
    }

    #[test]
    fn big_regular_counts() {
        // frozen values, cross-checked against brute-force enumeration for
        // n <= 6 in tests/props.rs; larger ones pin the complete-host DP
        assert_eq!(count(&Graph::complete(6), &[3; 6]), 70u32.into());
        assert_eq!(count(&Graph::complete(8), &[4; 8]), 19355u32.into());
        assert_eq!(count(&Graph::complete(10), &[5; 10]), 66462606u64.into());
        assert_eq!(
            count(&Graph::complete(12), &[6; 12]),
            2977635137862u64.into()
        );
    }

    #[test]
    fn budget_aborts_deterministically() {
        let mut b = Budget::new(10);
        let err = count_factors(
            &Graph::complete(12),
            &DegreeSequence::regular(12, 6).unwrap(),
            &mut b,
        )
        .unwrap_err();
        match err {
            OracleError::BudgetExceeded { used } => assert_eq!(used, 11),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn edge_probability_examples() {
        let k4 = Graph::complete(4);
        let t = DegreeSequence::regular(4, 1).unwrap();
        let p = edge_probability(&k4, &t, (0, 1), &mut Budget::default()).unwrap();
        assert_eq!(p, BigRational::new(1.into(), 3.into()));
        // regular symmetry: d/(n-1) exactly
        for n in [4usize, 5, 6] {
            let kn = Graph::complete(n);
            for d in 1..n {
                if (n * d) % 2 != 0 {
                    continue;
                }
                let t = DegreeSequence::regular(n, d).unwrap();
                let p = edge_probability(&kn, &t, (0, 1), &mut Budget::default()).unwrap();
                assert_eq!(p, BigRational::new((d as u64).into(), ((n - 1) as u64).into()));
            }
        }
        // zero demand at an endpoint
        let t = DegreeSequence::new(vec![0, 1, 1, 0]).unwrap();
        let p = edge_probability(&k4, &t, (0, 1), &mut Budget::default()).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn subgraph_probability_examples() {
        let k4 = Graph::complete(4);
        let t = DegreeSequence::regular(4, 1).unwrap();
        let empty = Graph::empty(4);
        let p = subgraph_probability_exact(&k4, &t, &empty, &empty, &mut Budget::default())
            .unwrap();
        assert_eq!(p, BigRational::one());
        let one_edge = Graph::from_edges(4, &[(0, 1)]).unwrap();
        let p = subgraph_probability_exact(&k4, &t, &empty, &one_edge, &mut Budget::default())
            .unwrap();
        assert_eq!(p, BigRational::new(2.into(), 3.into()));
        let k5 = Graph::complete(5);
        let t5 = DegreeSequence::regular(5, 2).unwrap();
        let path = Graph::from_edges(5, &[(0, 1), (1, 2)]).unwrap();
        let p = subgraph_probability_exact(&k5, &t5, &path, &empty5(), &mut Budget::default())
            .unwrap();
        assert_eq!(p, BigRational::new(2.into(), 12.into()));
    }

    fn empty5() -> Graph {
        Graph::empty(5)
    }

    #[test]
    fn sample_factor_degenerate() {
        let k4 = Graph::complete(4);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let s = sample_factor(
            &k4,
            &k4.degree_sequence(),
            &mut rng,
            &mut Budget::default(),
        )
        .unwrap();
        assert_eq!(s, k4);
        let z = sample_factor(
            &k4,
            &DegreeSequence::regular(4, 0).unwrap(),
            &mut rng,
            &mut Budget::default(),
        )
        .unwrap();
        assert_eq!(z.edge_count(), 0);
    }

    #[test]
    fn sample_factor_matches_demand() {
        let host = Graph::complete(7);
        let t = DegreeSequence::new(vec![3, 2, 2, 4, 1, 1, 1]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = sample_factor(&host, &t, &mut rng, &mut Budget::default()).unwrap();
            assert!(s.is_subgraph_of(&host));
            assert_eq!(s.degree_sequence(), t);
        }
    }

    #[test]
    fn enumerate_matches_count() {
        let host = Graph::complete(6);
        let t = DegreeSequence::regular(6, 3).unwrap();
        let all = enumerate_factors(&host, &t, &mut Budget::default()).unwrap();
        assert_eq!(all.len(), 70);
        let mut seen = std::collections::HashSet::new();
        for g in &all {
            assert_eq!(g.degree_sequence(), t);
            assert!(seen.insert(format!("{g:?}")));
        }
    }

    #[test]
    fn rand_below_is_in_range() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let bound = BigUint::from(1000u32);
        let mut sum = 0u64;
        for _ in 0..2000 {
            let x = rand_biguint_below(&mut rng, &bound);
            assert!(x < bound);
            sum += x.to_u64().unwrap();
        }
        let mean = sum as f64 / 2000.0;
        assert!((mean - 499.5).abs() < 3.0 * (1000.0 / (12.0f64).sqrt()) / (2000.0f64).sqrt());
    }
}
