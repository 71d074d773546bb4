//! The neighbor-aware importance-weighted estimator and the quantities its
//! tuning depends on.

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Probability that the agent or at least one neighbor selects `arm`:
/// `1 - (1 - p_j) Π_ℓ (1 - q^ℓ_j)`.
///
/// Evaluated in log space so tiny selection probabilities keep full
/// relative precision.
pub fn observe_prob(own: &Distribution, neighbors: &[&Distribution], arm: usize) -> f64 {
    let log_miss: f64 = std::iter::once(own.get(arm))
        .chain(neighbors.iter().map(|q| q.get(arm)))
        .map(|x| (-x).ln_1p())
        .sum();
    (-log_miss.exp_m1()).clamp(0.0, 1.0)
}

/// `ĝ_j = g_j / p′_j` when some individual selected `j`, else 0.
pub fn expn_estimate(reward: f64, observed: bool, observe_prob: f64) -> Result<f64> {
    if !observed {
        return Ok(0.0);
    }
    if observe_prob <= 0.0 {
        return Err(Error::EstimatorDomain(
            "observed an arm whose observation probability is zero".into(),
        ));
    }
    Ok(reward / observe_prob)
}

/// `γ = Σ_j p_j / (p_j + Σ_ℓ q^ℓ_j)`; arms with `p_j = 0` contribute 0.
pub fn gamma(own: &Distribution, neighbors: &[&Distribution]) -> f64 {
    own.probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(j, &p)| p / (p + neighbors.iter().map(|q| q.get(j)).sum::<f64>()))
        .sum()
}

/// `Θ = Π_i (1 - ε_i/K)` and `β = 1/(1 - (1 - 1/K)Θ) + 1`.
///
/// With no neighbors this is `(1, K + 1)`.
pub fn theta_beta(eps: &[f64], arms: usize) -> Result<(f64, f64)> {
    if arms < 2 {
        return Err(Error::Parameter(format!("K must be at least 2, got {arms}")));
    }
    let k = arms as f64;
    let mut theta = 1.0;
    for &e in eps {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::Parameter(format!("exploration level {e} outside (0, 1]")));
        }
        theta *= 1.0 - e / k;
    }
    Ok((theta, beta_for(theta, arms)))
}

/// Written as `K/(K − (K−1)Θ) + 1` so that `Θ = 1` gives exactly `K + 1`.
pub fn beta_for(theta: f64, arms: usize) -> f64 {
    let k = arms as f64;
    k / (k - (k - 1.0) * theta) + 1.0
}

/// Which row of the fixed-parameter table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `η = 0`, `δ = √(ln K/(βT))`: neighbors explore enough on their own.
    NeighborExploration,
    /// `η = 0`, `δ = 1 - Θ`: the rate sits on its feasibility cap.
    RateCap,
    /// `η > 0`, `δ = √(ln K/((β + K/Θ)T))`: the agent must explore itself.
    OwnExploration,
}

impl Regime {
    pub fn index(self) -> usize {
        match self {
            Regime::NeighborExploration => 1,
            Regime::RateCap => 2,
            Regime::OwnExploration => 3,
        }
    }
}

/// The two thresholds on Θ that separate the regimes:
/// `1 - √(ln K/(βT))` and `1 - √(ln K/((β + K/Θ)T))`.
pub fn regime_thresholds(theta: f64, beta: f64, arms: usize, horizon: usize) -> (f64, f64) {
    let ln_k = (arms as f64).ln();
    let t = horizon as f64;
    let k = arms as f64;
    let lower = 1.0 - (ln_k / (beta * t)).sqrt();
    let upper = 1.0 - (ln_k / ((beta + k / theta) * t)).sqrt();
    (lower, upper)
}

/// Regime selection; boundary ties go to the lower-indexed regime.
pub fn select_regime(theta: f64, beta: f64, arms: usize, horizon: usize) -> Regime {
    let (lower, upper) = regime_thresholds(theta, beta, arms, horizon);
    if theta <= lower {
        Regime::NeighborExploration
    } else if theta <= upper {
        Regime::RateCap
    } else {
        Regime::OwnExploration
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedParams {
    pub eta: f64,
    pub delta: f64,
    pub regime: Regime,
}

/// `δ / (1 - (1 - η/K)Θ)`, which must lie in `[0, 1]`.
pub fn rate_ratio(eta: f64, delta: f64, theta: f64, arms: usize) -> f64 {
    delta / (1.0 - (1.0 - eta / arms as f64) * theta)
}

/// Exploration and update parameters from the fixed-parameter table.
///
/// When the table's `η` exceeds 1 (short horizons) it is clamped to 1 and
/// `δ` is lowered onto the feasibility cap `1 - (1 - η/K)Θ`.
pub fn expn_fixed_params(theta: f64, beta: f64, arms: usize, horizon: usize) -> Result<FixedParams> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Parameter(format!("Θ = {theta} outside (0, 1]")));
    }
    if arms < 2 || horizon == 0 {
        return Err(Error::Parameter(format!("need K >= 2 and T >= 1, got K={arms}, T={horizon}")));
    }
    let k = arms as f64;
    let ln_k = k.ln();
    let t = horizon as f64;
    let regime = select_regime(theta, beta, arms, horizon);
    let (mut eta, mut delta) = match regime {
        Regime::NeighborExploration => (0.0, (ln_k / (beta * t)).sqrt()),
        Regime::RateCap => (0.0, 1.0 - theta),
        Regime::OwnExploration => {
            let root = (ln_k / ((beta + k / theta) * t)).sqrt();
            ((k / theta) * (root + (theta - 1.0)), root)
        }
    };
    eta = eta.clamp(0.0, 1.0);
    let cap = 1.0 - (1.0 - eta / k) * theta;
    if delta > cap {
        delta = cap;
    }
    let ratio = rate_ratio(eta, delta, theta, arms);
    if !(delta > 0.0) || !(-1e-12..=1.0 + 1e-12).contains(&ratio) {
        return Err(Error::Parameter(format!(
            "no feasible (η, δ) for Θ={theta}, β={beta}, K={arms}, T={horizon}"
        )));
    }
    Ok(FixedParams { eta, delta, regime })
}

/// `δ_t = √(ln K / Σ_{c≤t} (1 + γ_c))`.
pub fn expn_adaptive_rate(cumulative: f64, arms: usize) -> Result<f64> {
    if !(cumulative > 0.0) {
        return Err(Error::Parameter(format!(
            "cumulative information must be positive, got {cumulative}"
        )));
    }
    Ok(((arms as f64).ln() / cumulative).sqrt())
}
