//! Regret bounds evaluated on recorded traces, brute-force checks of the
//! inequalities the EXPN analysis rests on, and the regret ratio.

use rand::Rng;
use serde::Serialize;

use crate::dist::{mix_with_uniform, Distribution, SeedSpec, Stream, StreamKind};
use crate::error::{Error, Result};
use crate::policy::estimator::{expn_estimate, observe_prob, select_regime, theta_beta, Regime};
use crate::sim::RunTrace;

/// Slack allowed by every inequality check.
pub const LEMMA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// Constants are unknown; the value is reported but never asserted.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub inputs: Vec<(String, f64)>,
    pub verdict: Verdict,
    /// Mean and standard error of the empirical regret it was compared to.
    pub empirical: Option<(f64, f64)>,
}

impl BoundReport {
    /// An upper bound on expected regret, compared with a one-sided
    /// two-standard-error allowance.
    pub fn upper(name: &str, value: f64, inputs: Vec<(String, f64)>, mean: f64, se: f64) -> Self {
        let verdict = if mean <= value + 2.0 * se {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self {
            name: name.into(),
            value,
            inputs,
            verdict,
            empirical: Some((mean, se)),
        }
    }

    pub fn informational(name: &str, value: f64, inputs: Vec<(String, f64)>) -> Self {
        Self {
            name: name.into(),
            value,
            inputs,
            verdict: Verdict::Informational,
            empirical: None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("α must exceed 2, got {alpha}")))
    }
}

/// `max_t (2α ln t / Δ − n′(t)Δ)` over `t = 1..`, for one arm, fed one
/// `n′(t)` at a time.
#[derive(Debug, Clone, Copy)]
struct ArmTerm {
    gap: f64,
    best: f64,
}

/// Per-arm UCBN bound:
/// `Σ_{Δ_i>0} (max{max_t (2α ln t/Δ_i − n′_i(t)Δ_i), 0} + α/(α−2))`.
///
/// `n_prime[t - 1][i]` is `n′_i(t)`; the series length is the horizon.
pub fn theorem1_bound(n_prime: &[Vec<u64>], gaps: &[f64], alpha: f64) -> Result<f64> {
    theorem1_bound_iter(n_prime.iter().map(Vec::as_slice), gaps, alpha)
}

fn theorem1_bound_iter<'a, I>(n_prime: I, gaps: &[f64], alpha: f64) -> Result<f64>
where
    I: IntoIterator<Item = &'a [u64]>,
{
    check_alpha(alpha)?;
    if let Some(g) = gaps.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::Parameter(format!("gap {g} outside [0, 1]")));
    }
    let mut terms: Vec<(usize, ArmTerm)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0.0)
        .map(|(i, &g)| (i, ArmTerm { gap: g, best: 0.0 }))
        .collect();
    for (t0, counts) in n_prime.into_iter().enumerate() {
        let ln_t = ((t0 + 1) as f64).ln();
        for (i, term) in &mut terms {
            let v = 2.0 * alpha * ln_t / term.gap - counts[*i] as f64 * term.gap;
            term.best = term.best.max(v);
        }
    }
    let constant = alpha / (alpha - 2.0);
    Ok(terms.iter().map(|(_, t)| t.best + constant).sum())
}

/// [`theorem1_bound`] on `node`'s neighbor counts, rebuilt from the trace
/// without materializing the whole series.
pub fn theorem1_bound_for_node(trace: &RunTrace, node: usize, gaps: &[f64], alpha: f64) -> Result<f64> {
    let mut counts = vec![0u64; trace.arms];
    let mut rows = Vec::with_capacity(trace.horizon);
    // One row at a time would need a lending iterator; rows are K wide so
    // the whole series is small next to the trace itself.
    for t in 1..=trace.horizon {
        for &u in trace.neighbors(node) {
            counts[trace.arm(t, u)] += 1;
        }
        rows.push(counts.clone());
    }
    theorem1_bound(&rows, gaps, alpha)
}

/// Complete-graph UCBN bound `Σ_{Δ_i>0} (2α ln T/(bΔ_i) + α/(α−2))`.
pub fn corollary_complete_bound(b: usize, horizon: usize, gaps: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if b == 0 {
        return Err(Error::Parameter("complete-graph bound needs b ≥ 1".into()));
    }
    let ln_t = (horizon as f64).ln();
    Ok(gaps
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|g| 2.0 * alpha * ln_t / (b as f64 * g) + alpha / (alpha - 2.0))
        .sum())
}

/// `2√((T + Σ_t γ_t) ln K)` for one seed's `γ` series (length `T`).
pub fn theorem2_bound(gammas: &[f64], arms: usize) -> f64 {
    let t = gammas.len() as f64;
    let total: f64 = gammas.iter().sum();
    2.0 * ((t + total) * (arms as f64).ln()).sqrt()
}

/// The fixed-parameter EXPN regret for the regime `Θ` falls in.
pub fn regime_bound(theta: f64, beta: f64, arms: usize, horizon: usize) -> (Regime, f64) {
    let ln_k = (arms as f64).ln();
    let t = horizon as f64;
    let wide = beta + arms as f64 / theta;
    let regime = select_regime(theta, beta, arms, horizon);
    let value = match regime {
        Regime::NeighborExploration => 2.0 * (beta * t * ln_k).sqrt(),
        Regime::RateCap => (beta * t * ln_k).sqrt() + (wide * t * ln_k).sqrt(),
        Regime::OwnExploration => 2.0 * (wide * t * ln_k).sqrt(),
    };
    (regime, value)
}

/// Leader–follower scale `Δ + √((1 + K/(1 + b_max)) T ln K)`, constants omitted.
pub fn centralized_bound_expression(diameter: usize, b_max: usize, arms: usize, horizon: usize) -> f64 {
    let k = arms as f64;
    diameter as f64 + ((1.0 + k / (1.0 + b_max as f64)) * horizon as f64 * k.ln()).sqrt()
}

/// `√(T + Σ_t (K − n_t))` where `n_t` counts the distinct arms neighbors covered.
pub fn lower_bound_coverage(coverage: &[usize], arms: usize) -> f64 {
    let deficit: usize = coverage.iter().map(|&n| arms.saturating_sub(n)).sum();
    (coverage.len() as f64 + deficit as f64).sqrt()
}

/// `√(T + Σ_t γ_t)`.
pub fn lower_bound_gamma(gammas: &[f64]) -> f64 {
    (gammas.len() as f64 + gammas.iter().sum::<f64>()).sqrt()
}

/// Mean regret with neighbors over mean regret without.
pub fn regret_ratio(with_neighbors: f64, alone: f64) -> Result<f64> {
    if !(alone > 0.0) {
        return Err(Error::Parameter(format!("baseline regret must be positive, got {alone}")));
    }
    if !(with_neighbors >= 0.0) {
        return Err(Error::Parameter(format!("regret must be nonnegative, got {with_neighbors}")));
    }
    Ok(with_neighbors / alone)
}

/// `Π (1 − x_i) ≤ 1 / (1 + Σ x_i)`.
pub fn verify_lemma1(x: &[f64]) -> bool {
    let prod: f64 = x.iter().map(|v| 1.0 - v).product();
    let sum: f64 = x.iter().sum();
    prod <= 1.0 / (1.0 + sum) + LEMMA_SLACK
}

/// `Σ_j p_j/p′_j ≤ Σ_j p_j/(p_j + Σ_ℓ q^ℓ_j) + 1`.
pub fn verify_helper(p: &Distribution, qs: &[&Distribution]) -> bool {
    let lhs = info_sum(p, qs);
    lhs <= crate::policy::gamma(p, qs) + 1.0 + LEMMA_SLACK
}

/// `Σ_j p_j / p′_j`, skipping arms with `p_j = 0`.
pub fn info_sum(p: &Distribution, qs: &[&Distribution]) -> f64 {
    (0..p.arms())
        .filter(|&j| p.get(j) > 0.0)
        .map(|j| p.get(j) / observe_prob(p, qs, j))
        .sum()
}

/// `Σ_j p_j/p′_j ≤ β` with `β` from the neighbors' exploration levels.
///
/// Errors if `p` or some `q^i` violates its floor (`η/K`, `ε_i/K`).
pub fn verify_ub(p: &Distribution, qs: &[&Distribution], eps: &[f64], eta: f64) -> Result<bool> {
    let k = p.arms();
    if qs.len() != eps.len() {
        return Err(Error::Parameter(format!("{} neighbors but {} exploration levels", qs.len(), eps.len())));
    }
    if p.min() < eta / k as f64 - LEMMA_SLACK {
        return Err(Error::Parameter(format!("p has mass {} below η/K", p.min())));
    }
    for (q, &e) in qs.iter().zip(eps) {
        if q.min() < e / k as f64 - LEMMA_SLACK {
            return Err(Error::Parameter(format!("neighbor mass {} below ε/K = {}", q.min(), e / k as f64)));
        }
    }
    let (_, beta) = theta_beta(eps, k)?;
    Ok(info_sum(p, qs) <= beta + LEMMA_SLACK)
}

pub const ORACLE_MAX_ARMS: usize = 4;
pub const ORACLE_MAX_NEIGHBORS: usize = 3;

/// Exact `E[ĝ_j]` for every arm by enumerating all `K^(b+1)` joint
/// selections of the agent and its `b` neighbors. `estimator(g_j, p′_j)` is
/// applied to every arm somebody selected; unselected arms contribute 0.
pub fn estimator_expectation_with<F>(p: &Distribution, qs: &[&Distribution], g: &[f64], estimator: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let k = p.arms();
    if k > ORACLE_MAX_ARMS || qs.len() > ORACLE_MAX_NEIGHBORS {
        return Err(Error::Parameter(format!(
            "enumeration limited to K ≤ {ORACLE_MAX_ARMS} and b ≤ {ORACLE_MAX_NEIGHBORS}, got K={k}, b={}",
            qs.len()
        )));
    }
    if g.len() != k || qs.iter().any(|q| q.arms() != k) {
        return Err(Error::Parameter("arm counts disagree".into()));
    }
    let p_prime: Vec<f64> = (0..k).map(|j| observe_prob(p, qs, j)).collect();
    let players = qs.len() + 1;
    let mut expectation = vec![0.0; k];
    let mut choice = vec![0usize; players];
    let outcomes = k.pow(players as u32);
    let mut seen = vec![false; k];
    for code in 0..outcomes {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut prob = p.get(choice[0]);
        for (q, &a) in qs.iter().zip(&choice[1..]) {
            prob *= q.get(a);
        }
        if prob == 0.0 {
            continue;
        }
        seen.iter_mut().for_each(|s| *s = false);
        for &a in &choice {
            seen[a] = true;
        }
        for j in 0..k {
            if seen[j] {
                expectation[j] += prob * estimator(g[j], p_prime[j])?;
            }
        }
    }
    Ok(expectation)
}

/// [`estimator_expectation_with`] for the EXPN estimator `g_j / p′_j`.
pub fn estimator_expectation_oracle(p: &Distribution, qs: &[&Distribution], g: &[f64]) -> Result<Vec<f64>> {
    estimator_expectation_with(p, qs, g, |gj, pp| expn_estimate(gj, true, pp))
}

/// Outcome of one randomized verification suite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    /// The first failing configuration, printable for reproduction.
    pub counterexample: Option<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            ..Self::default()
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

fn verify_stream(seed: u64, suite: u64) -> Stream {
    SeedSpec::new(seed).stream(StreamKind::Verify, suite, 0)
}

/// A random distribution; with probability ~1/4 some entries are zeroed
/// (never all of them) to exercise the boundary.
pub fn random_distribution(rng: &mut Stream, k: usize, full_support: bool) -> Distribution {
    loop {
        let sparse = !full_support && rng.gen_bool(0.25);
        let mut w: Vec<f64> = (0..k)
            .map(|_| {
                if sparse && rng.gen_bool(0.5) {
                    0.0
                } else {
                    -(1.0 - rng.gen::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
            if let Ok(d) = Distribution::new(w) {
                return d;
            }
        }
    }
}

/// Random `(K, p, q^1..q^b, g)` for the enumeration oracle: `K ≤ 4`, `b ≤ 3`,
/// `p` fully supported.
pub fn random_oracle_config(rng: &mut Stream) -> (Distribution, Vec<Distribution>, Vec<f64>) {
    let k = rng.gen_range(2..=ORACLE_MAX_ARMS);
    let b = rng.gen_range(0..=ORACLE_MAX_NEIGHBORS);
    let p = random_distribution(rng, k, true);
    let qs = (0..b).map(|_| random_distribution(rng, k, false)).collect();
    let g = (0..k).map(|_| rng.gen::<f64>()).collect();
    (p, qs, g)
}

/// Checks `|E[ĝ_j] − g_j| ≤ 1e-12` on `samples` random configurations.
/// `negate` flips the estimator's sign, a negative control that must fail.
pub fn run_unbiasedness_suite(samples: usize, seed: u64, negate: bool) -> Result<SuiteOutcome> {
    let mut rng = verify_stream(seed, 0);
    let mut out = SuiteOutcome::new("estimator_unbiasedness");
    let sign = if negate { -1.0 } else { 1.0 };
    for _ in 0..samples {
        let (p, qs, g) = random_oracle_config(&mut rng);
        let refs: Vec<&Distribution> = qs.iter().collect();
        let e = estimator_expectation_with(&p, &refs, &g, |gj, pp| Ok(sign * expn_estimate(gj, true, pp)?))?;
        let ok = e.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-12);
        out.record(ok, || format!("p={:?} q={:?} g={g:?} E[ĝ]={e:?}", p.probs(), qs.iter().map(|q| q.probs()).collect::<Vec<_>>()));
    }
    Ok(out)
}

/// Runs the three inequality checks on `samples` random configurations each
/// (`K ≤ 10`, `b ≤ 5`). Same seed ⇒ same configurations.
pub fn run_lemma_suites(samples: usize, seed: u64) -> Result<[SuiteOutcome; 3]> {
    let mut lemma1 = SuiteOutcome::new("lemma_product");
    let mut rng = verify_stream(seed, 1);
    for _ in 0..samples {
        let n = rng.gen_range(0..=10);
        let x: Vec<f64> = (0..n)
            .map(|_| match rng.gen_range(0..8) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            })
            .collect();
        lemma1.record(verify_lemma1(&x), || format!("x={x:?}"));
    }

    let mut helper = SuiteOutcome::new("lemma_helper");
    let mut rng = verify_stream(seed, 2);
    for _ in 0..samples {
        let k = rng.gen_range(2..=10);
        let b = rng.gen_range(0..=5);
        let p = random_distribution(&mut rng, k, false);
        let qs: Vec<Distribution> = (0..b).map(|_| random_distribution(&mut rng, k, false)).collect();
        let refs: Vec<&Distribution> = qs.iter().collect();
        helper.record(verify_helper(&p, &refs), || {
            format!("p={:?} q={:?}", p.probs(), qs.iter().map(|q| q.probs()).collect::<Vec<_>>())
        });
    }

    let mut ub = SuiteOutcome::new("lemma_ub");
    let mut rng = verify_stream(seed, 3);
    for _ in 0..samples {
        let k = rng.gen_range(2..=10);
        let b = rng.gen_range(0..=5);
        let eta = if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() };
        let p = mix_with_uniform(&random_distribution(&mut rng, k, false), eta)?;
        let eps: Vec<f64> = (0..b).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let qs = eps
            .iter()
            .map(|&e| mix_with_uniform(&random_distribution(&mut rng, k, false), e))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Distribution> = qs.iter().collect();
        let ok = verify_ub(&p, &refs, &eps, eta)?;
        ub.record(ok, || {
            format!("p={:?} eps={eps:?} eta={eta} q={:?}", p.probs(), qs.iter().map(|q| q.probs()).collect::<Vec<_>>())
        });
    }
    Ok([lemma1, helper, ub])
}
