//! Statistical verification of the distributional claims, plus the exact
//! tail functions and Chernoff-style bounds used to calibrate them.
//!
//! Every test is deterministic given (seed, sample size); thresholds are
//! pre-registered constants, never tuned after looking at the data. The
//! significance level is Bonferroni-corrected across sub-tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::graphs::{DegreeSequence, Graph};
use crate::oracle::{self, Budget};

/// Pre-registered significance level for the whole harness.
pub const ALPHA: f64 = 0.001;

/// Outcome of one statistical check, JSON-serializable.
#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// For bound-style checks: observed − (bound − 3·SE); pass iff ≥ 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_gap: Option<f64>,
    pub pass: bool,
    pub n_samples: u64,
    pub seed: u64,
    /// The effective (Bonferroni-adjusted) level this report was judged at.
    pub alpha: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subtests: Vec<TestReport>,
}

impl TestReport {
    fn leaf(
        name: impl Into<String>,
        statistic: f64,
        p_value: f64,
        alpha: f64,
        n_samples: u64,
        seed: u64,
    ) -> TestReport {
        TestReport {
            name: name.into(),
            statistic,
            p_value: Some(p_value),
            bound_gap: None,
            pass: p_value >= alpha,
            n_samples,
            seed,
            alpha,
            subtests: Vec::new(),
        }
    }
}

/// P(Bin(K, p) ≥ m), exact up to f64 by stable upward summation from the
/// first term.
pub fn binomial_tail(k: u64, p: f64, m: u64) -> f64 {
    assert!((0.0..=1.0).contains(&p));
    if m == 0 {
        return 1.0;
    }
    if m > k {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let kf = k as f64;
    let ln_choose =
        |j: f64| ln_gamma(kf + 1.0) - ln_gamma(j + 1.0) - ln_gamma(kf - j + 1.0);
    let mf = m as f64;
    let mut term = (ln_choose(mf) + mf * p.ln() + (kf - mf) * (1.0 - p).ln()).exp();
    let ratio = p / (1.0 - p);
    let mut acc = 0.0;
    for j in m..=k {
        acc += term;
        let jf = j as f64;
        term *= (kf - jf) / (jf + 1.0) * ratio;
        if term < acc * 1e-18 && jf > kf * p {
            break;
        }
    }
    acc.min(1.0)
}

/// P(Po(μ) ≥ m).
pub fn poisson_tail(mu: f64, m: u64) -> f64 {
    assert!(mu >= 0.0);
    if m == 0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    let mut term = (-mu + mf * mu.ln() - ln_gamma(mf + 1.0)).exp();
    let mut acc = 0.0;
    let mut j = mf;
    loop {
        acc += term;
        j += 1.0;
        term *= mu / j;
        if term < acc * 1e-18 && j > mu {
            break;
        }
    }
    acc.min(1.0)
}

/// The Chernoff-style bounds: 2e^{−ε²pK/(2+ε)} dominates the two-sided
/// binomial deviation and e^{−ε²μ/(2+ε)} the upper Poisson tail at μ = pK.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChernoffBounds {
    pub binomial_two_sided: f64,
    pub poisson_upper: f64,
}

pub fn chernoff_bounds(k: u64, p: f64, eps: f64) -> ChernoffBounds {
    let pk = p * k as f64;
    let e = eps * eps / (2.0 + eps);
    ChernoffBounds {
        binomial_two_sided: 2.0 * (-e * pk).exp(),
        poisson_upper: (-e * pk).exp(),
    }
}

fn chi2_p_value(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df).expect("positive df");
    1.0 - dist.cdf(stat)
}

fn normal_two_sided_p(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    2.0 * (1.0 - n.cdf(z.abs()))
}

fn pair_rank(u: usize, v: usize, n: usize) -> usize {
    debug_assert!(u < v);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

fn edge_mask(g: &Graph) -> u64 {
    let n = g.n();
    assert!(n * (n - 1) / 2 <= 64, "class enumeration needs n(n-1)/2 <= 64");
    g.edges()
        .map(|(u, v)| 1u64 << pair_rank(u, v, n))
        .sum()
}

/// Chi-square goodness of fit of `samples` against the uniform distribution
/// over all labeled graphs with degree sequence `d` (class enumerated
/// exactly; labeled outcomes, no isomorphism reduction).
pub fn verify_uniform_marginal(samples: &[Graph], d: &DegreeSequence, seed: u64) -> TestReport {
    let n = d.len();
    let class = oracle::enumerate_factors(
        &Graph::complete(n),
        d,
        &mut Budget::default(),
    )
    .expect("class enumeration within budget");
    let k = class.len();
    let mut index = std::collections::HashMap::with_capacity(k);
    for (i, g) in class.iter().enumerate() {
        index.insert(edge_mask(g), i);
    }
    let mut counts = vec![0u64; k];
    let mut stray = 0u64;
    for s in samples {
        match index.get(&edge_mask(s)) {
            Some(&i) => counts[i] += 1,
            None => stray += 1,
        }
    }
    let total = samples.len() as f64;
    let expected = total / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let p = if stray > 0 {
        0.0
    } else {
        chi2_p_value(stat, (k - 1) as f64)
    };
    let mut rep = TestReport::leaf(
        format!("uniform_marginal_over_{k}_graphs"),
        stat,
        p,
        ALPHA,
        samples.len() as u64,
        seed,
    );
    rep.pass = stray == 0 && rep.pass;
    rep
}

/// Verifies a G(n,p) marginal: (i) per-edge inclusion frequency, (ii) total
/// edge count against Bin(N, p), (iii) pairwise edge-indicator independence.
pub fn verify_gnp_marginal(samples: &[Graph], p: f64, seed: u64) -> TestReport {
    assert!(!samples.is_empty());
    let n = samples[0].n();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let s = samples.len() as f64;
    let big_n = pairs.len();

    // (i) per-edge frequency, Bonferroni over edges
    let alpha_edges = ALPHA / (3.0 * big_n as f64);
    let mut max_z: f64 = 0.0;
    let mut min_p_edge = 1.0f64;
    let sd = (s * p * (1.0 - p)).sqrt();
    let mut edge_counts = vec![0u64; big_n];
    for g in samples {
        for (u, v) in g.edges() {
            edge_counts[pair_rank(u, v, n)] += 1;
        }
    }
    for &c in &edge_counts {
        let z = (c as f64 - s * p) / sd;
        max_z = max_z.max(z.abs());
        min_p_edge = min_p_edge.min(normal_two_sided_p(z));
    }
    let sub_freq = TestReport::leaf(
        "per_edge_frequency",
        max_z,
        min_p_edge,
        alpha_edges,
        samples.len() as u64,
        seed,
    );

    // (ii) edge-count distribution against Bin(N, p), chi-square with bins
    // merged to expected count >= 5
    let alpha_sub = ALPHA / 3.0;
    let mut hist = vec![0u64; big_n + 1];
    for g in samples {
        hist[g.edge_count()] += 1;
    }
    let pmf: Vec<f64> = (0..=big_n)
        .map(|j| {
            let lj = ln_gamma(big_n as f64 + 1.0)
                - ln_gamma(j as f64 + 1.0)
                - ln_gamma((big_n - j) as f64 + 1.0)
                + j as f64 * p.ln().max(f64::MIN)
                + (big_n - j) as f64 * (1.0 - p).ln().max(f64::MIN);
            lj.exp()
        })
        .collect();
    let mut stat_count = 0.0;
    let mut df_bins = 0usize;
    let mut obs_acc = 0.0;
    let mut exp_acc = 0.0;
    for j in 0..=big_n {
        obs_acc += hist[j] as f64;
        exp_acc += s * pmf[j];
        if exp_acc >= 5.0 && (s - exp_acc) >= -1.0 {
            let diff = obs_acc - exp_acc;
            stat_count += diff * diff / exp_acc;
            df_bins += 1;
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if exp_acc > 0.0 {
        let diff = obs_acc - exp_acc;
        stat_count += diff * diff / exp_acc;
        df_bins += 1;
    }
    let p_count = chi2_p_value(stat_count, (df_bins.saturating_sub(1)) as f64);
    let sub_count = TestReport::leaf(
        "edge_count_binomial",
        stat_count,
        p_count,
        alpha_sub,
        samples.len() as u64,
        seed,
    );

    // (iii) pairwise independence via 2x2 contingency chi-square
    let n_pairs = big_n * (big_n - 1) / 2;
    let alpha_pairs = ALPHA / (3.0 * n_pairs as f64);
    let mut both = vec![0u64; n_pairs];
    let mut masks: Vec<u64> = samples.iter().map(edge_mask).collect();
    masks.sort_unstable(); // deterministic iteration order; counts only below
    let mut idx = 0;
    let mut pair_of = vec![(0usize, 0usize); n_pairs];
    for a in 0..big_n {
        for b in (a + 1)..big_n {
            pair_of[idx] = (a, b);
            idx += 1;
        }
    }
    for &mask in &masks {
        for (i, &(a, b)) in pair_of.iter().enumerate() {
            if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                both[i] += 1;
            }
        }
    }
    let mut max_chi2: f64 = 0.0;
    let mut min_p_pair = 1.0f64;
    for (i, &(a, b)) in pair_of.iter().enumerate() {
        let ca = edge_counts[a] as f64;
        let cb = edge_counts[b] as f64;
        let o11 = both[i] as f64;
        let o10 = ca - o11;
        let o01 = cb - o11;
        let o00 = s - ca - cb + o11;
        let e11 = ca * cb / s;
        let e10 = ca * (s - cb) / s;
        let e01 = (s - ca) * cb / s;
        let e00 = (s - ca) * (s - cb) / s;
        if e11 < 1.0 || e10 < 1.0 || e01 < 1.0 || e00 < 1.0 {
            continue;
        }
        let stat = (o11 - e11).powi(2) / e11
            + (o10 - e10).powi(2) / e10
            + (o01 - e01).powi(2) / e01
            + (o00 - e00).powi(2) / e00;
        max_chi2 = max_chi2.max(stat);
        min_p_pair = min_p_pair.min(chi2_p_value(stat, 1.0));
    }
    let sub_indep = TestReport::leaf(
        "pairwise_independence",
        max_chi2,
        min_p_pair,
        alpha_pairs,
        samples.len() as u64,
        seed,
    );

    let pass = sub_freq.pass && sub_count.pass && sub_indep.pass;
    let p_value = sub_freq
        .p_value
        .unwrap()
        .min(sub_count.p_value.unwrap())
        .min(sub_indep.p_value.unwrap());
    TestReport {
        name: format!("gnp_marginal_p={p:.6}"),
        statistic: max_z.max(stat_count).max(max_chi2),
        p_value: Some(p_value),
        bound_gap: None,
        pass,
        n_samples: samples.len() as u64,
        seed,
        alpha: ALPHA,
        subtests: vec![sub_freq, sub_count, sub_indep],
    }
}

/// Verifies the universal lower bound on coupling failure: any coupling of
/// G(n,p) and G(n,d) must fail containment at least as often as a G(n,p)
/// vertex exceeds degree d, so the empirical failure frequency must reach
/// P(Bin(n−1, p) ≥ d+1) − 3·SE.
pub fn theprop_check(
    n: usize,
    p: f64,
    d: usize,
    failures: u64,
    runs: u64,
    seed: u64,
) -> TestReport {
    assert!(p * (n as f64 - 1.0) <= d as f64 + 1e-9, "requires p(n-1) <= d");
    let bound = binomial_tail(n as u64 - 1, p, d as u64 + 1);
    let se = (bound * (1.0 - bound) / runs as f64).sqrt();
    let freq = failures as f64 / runs as f64;
    let gap = freq - (bound - 3.0 * se);
    TestReport {
        name: format!("coupling_failure_lower_bound_n{n}_d{d}"),
        statistic: freq,
        p_value: None,
        bound_gap: Some(gap),
        pass: gap >= 0.0,
        n_samples: runs,
        seed,
        alpha: ALPHA,
        subtests: Vec::new(),
    }
}

/// Deliberately biased factor sampler (forces edge 0–1 whenever some factor
/// contains it); the negative control that uniformity tests must reject.
pub fn biased_sample_factor<R: rand::Rng + ?Sized>(
    host: &Graph,
    t: &DegreeSequence,
    rng: &mut R,
    budget: &mut Budget,
) -> Result<Graph, oracle::OracleError> {
    if host.has_edge(0, 1) && t.get(0) > 0 && t.get(1) > 0 {
        let mut h2 = host.clone();
        h2.remove_edge(0, 1);
        let mut t2 = t.as_slice().to_vec();
        t2[0] -= 1;
        t2[1] -= 1;
        let t2 = DegreeSequence::new(t2).expect("in range");
        if !oracle::count_factors(&h2, &t2, budget)?.is_zero() {
            let mut f = oracle::sample_factor(&h2, &t2, rng, budget)?;
            f.insert_edge(0, 1);
            return Ok(f);
        }
    }
    oracle::sample_factor(host, t, rng, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::substream;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    #[test]
    fn binomial_tail_small_cases() {
        // P(Bin(4, 1/2) >= 3) = (4 + 1)/16
        assert!((binomial_tail(4, 0.5, 3) - 5.0 / 16.0).abs() < 1e-14);
        assert_eq!(binomial_tail(4, 0.5, 0), 1.0);
        assert_eq!(binomial_tail(4, 0.5, 5), 0.0);
        assert_eq!(poisson_tail(3.0, 0), 1.0);
    }

    fn exact_binomial_tail_rational(k: u64, num: u64, den: u64, m: u64) -> f64 {
        // independent big-rational evaluation of P(Bin(k, num/den) >= m)
        let p = BigRational::new(num.into(), den.into());
        let q = BigRational::one() - &p;
        let mut acc = BigRational::zero();
        for j in m..=k {
            let mut choose = BigRational::one();
            for i in 0..j {
                choose *= BigRational::new(((k - i) as i64).into(), ((i + 1) as i64).into());
            }
            let mut term = choose;
            for _ in 0..j {
                term *= &p;
            }
            for _ in 0..(k - j) {
                term *= &q;
            }
            acc += term;
        }
        acc.to_f64().unwrap()
    }

    #[test]
    fn binomial_tail_matches_big_rational() {
        for k in [5u64, 12, 20, 30] {
            for (num, den) in [(1u64, 2u64), (3, 5), (1, 10), (9, 10)] {
                for m in 0..=k {
                    let exact = exact_binomial_tail_rational(k, num, den, m);
                    let got = binomial_tail(k, num as f64 / den as f64, m);
                    assert!(
                        (got - exact).abs() <= 1e-12 * (1.0 + exact),
                        "k={k} p={num}/{den} m={m}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn tails_are_monotone_in_m() {
        for m in 0..20u64 {
            assert!(binomial_tail(20, 0.3, m) >= binomial_tail(20, 0.3, m + 1));
            assert!(poisson_tail(4.5, m) >= poisson_tail(4.5, m + 1));
        }
    }

    #[test]
    fn chernoff_dominates_exact_tails() {
        for &k in &[10u64, 50, 200] {
            for &p in &[0.1, 0.3, 0.5, 0.7] {
                for &eps in &[0.1, 0.5, 1.0, 2.0] {
                    let b = chernoff_bounds(k, p, eps);
                    let pk = p * k as f64;
                    let hi = (pk * (1.0 + eps)).ceil() as u64;
                    let lo = pk * (1.0 - eps);
                    let upper = binomial_tail(k, p, hi.max(0));
                    let lower = if lo < 0.0 {
                        0.0
                    } else {
                        1.0 - binomial_tail(k, p, lo.floor() as u64 + 1)
                    };
                    assert!(
                        b.binomial_two_sided >= upper + lower - 1e-12,
                        "k={k} p={p} eps={eps}"
                    );
                    let p_tail = poisson_tail(pk, (pk * (1.0 + eps)).ceil() as u64);
                    assert!(b.poisson_upper >= p_tail - 1e-12, "k={k} p={p} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn uniform_marginal_single_graph_class() {
        // d = (n-1)-regular has a single realization, a trivial pass
        let d = DegreeSequence::regular(4, 3).unwrap();
        let samples = vec![Graph::complete(4); 100];
        let rep = verify_uniform_marginal(&samples, &d, 0);
        assert!(rep.pass);
        assert_eq!(rep.statistic, 0.0);
    }

    #[test]
    fn uniform_marginal_rejects_stray_sample() {
        let d = DegreeSequence::regular(4, 1).unwrap();
        let mut samples = vec![Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap(); 50];
        samples.push(Graph::complete(4)); // not in the class
        let rep = verify_uniform_marginal(&samples, &d, 0);
        assert!(!rep.pass);
    }

    #[test]
    fn gnp_marginal_accepts_true_gnp_and_rejects_gnm() {
        let n = 6;
        let p = 0.45;
        let mut rng = substream(1234, 0);
        let mut gnp_samples = Vec::new();
        for _ in 0..4000 {
            let mut g = Graph::empty(n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rand::Rng::gen::<f64>(&mut rng) < p {
                        g.insert_edge(u, v);
                    }
                }
            }
            gnp_samples.push(g);
        }
        let rep = verify_gnp_marginal(&gnp_samples, p, 1234);
        assert!(rep.pass, "true G(n,p) must pass: {rep:?}");

        // G(n,m): fixed edge count has zero variance, sub-test (ii) explodes
        let m_fixed = (p * 15.0).round() as usize;
        let mut gnm_samples = Vec::new();
        for _ in 0..4000 {
            let mut edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            for i in (1..edges.len()).rev() {
                let j = rand::Rng::gen_range(&mut rng, 0..=i);
                edges.swap(i, j);
            }
            gnm_samples.push(Graph::from_edges(n, &edges[..m_fixed]).unwrap());
        }
        let rep = verify_gnp_marginal(&gnm_samples, p, 1234);
        assert!(!rep.pass);
        assert!(!rep.subtests[1].pass, "edge-count sub-test must reject G(n,m)");
    }

    #[test]
    fn theprop_trivial_at_full_degree() {
        // d = n-1 makes the binomial tail zero
        let rep = theprop_check(6, 0.5, 5, 0, 1000, 0);
        assert!(rep.pass);
        assert_eq!(rep.bound_gap, Some(0.0));
    }

    #[test]
    fn theprop_bound_value() {
        // n=6, d=3, p=3/5: bound = P(Bin(5, 0.6) >= 4) = 5·0.6⁴·0.4 + 0.6⁵
        let b = binomial_tail(5, 0.6, 4);
        let expect = 5.0 * 0.6f64.powi(4) * 0.4 + 0.6f64.powi(5);
        assert!((b - expect).abs() < 1e-14);
    }
}
