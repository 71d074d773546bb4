//! Agent decision rules behind one lifecycle: each round a policy reports
//! the distribution it samples from, then observes its own outcome and one
//! packet per neighbor.

mod exp3;
mod exp3g;
pub mod estimator;
mod expn;
mod scripted;
mod ucb;

use serde::{Deserialize, Serialize};

pub use exp3::{Exp3, Hedge};
pub use exp3g::{exp3g_estimates, independence_number, Exp3g};
pub use estimator::{
    expn_adaptive_rate, expn_estimate, expn_fixed_params, gamma, observe_prob, theta_beta, FixedParams, Regime,
};
pub use expn::{Expn, ExpnRate};
pub use scripted::{CopyFollower, ExplorationSchedule, FixedArm, UniformExplorer};
pub use ucb::{ucb_index, UcbState, Ucbn};

use crate::dist::{Distribution, ObservationPacket, Stream};
use crate::error::{Error, Result};

/// Everything a node learns at the end of round `t`.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub t: usize,
    pub node: usize,
    pub arm: usize,
    pub reward: f64,
    /// One packet per neighbor, ascending by neighbor id.
    pub packets: &'a [ObservationPacket<'a>],
    /// The whole reward vector, present only for full-information policies.
    pub full_rewards: Option<&'a [f64]>,
}

impl<'a> Feedback<'a> {
    pub fn neighbor_distributions(&self) -> Vec<&'a Distribution> {
        self.packets.iter().map(|p| p.distribution).collect()
    }

    /// `(source id, arm, reward)` for the node itself and every neighbor,
    /// ascending by id.
    pub fn observations(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let split = self.packets.partition_point(|p| p.neighbor_id < self.node);
        let before = self.packets[..split].iter();
        let after = self.packets[split..].iter();
        before
            .map(|p| (p.neighbor_id, p.arm, p.reward))
            .chain(std::iter::once((self.node, self.arm, self.reward)))
            .chain(after.map(|p| (p.neighbor_id, p.arm, p.reward)))
    }

    /// Mean reward seen on each arm this round; `None` where nobody pulled it.
    pub fn observed_means(&self, arms: usize) -> Vec<Option<f64>> {
        let mut sums = vec![0.0; arms];
        let mut counts = vec![0u32; arms];
        for (_, arm, reward) in self.observations() {
            sums[arm] += reward;
            counts[arm] += 1;
        }
        sums.into_iter()
            .zip(counts)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect()
    }
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn arms(&self) -> usize;

    /// The distribution this round's arm is drawn from. Called once per round.
    fn distribution(&mut self, t: usize) -> Result<Distribution>;

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()>;

    fn end_round(&mut self, _t: usize) -> Result<()> {
        Ok(())
    }

    /// Draws the round's arm from exactly the distribution it reports.
    fn decide(&mut self, t: usize, rng: &mut Stream) -> Result<(Distribution, usize)> {
        let d = self.distribution(t)?;
        let arm = d.sample(rng);
        Ok((d, arm))
    }

    fn wants_full_information(&self) -> bool {
        false
    }

    /// Sample counters `n′_j` for policies that keep them.
    fn neighbor_counts(&self) -> Option<&[u64]> {
        None
    }

    /// Estimates clamped to keep the update inside its analyzed domain.
    fn anomalies(&self) -> u64 {
        0
    }
}

/// Serializable description of a policy, built once `K` and `T` are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// UCB index over own and neighbor samples.
    Ucbn {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// UCB over own samples only.
    Ucb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    ExpnAdaptive,
    ExpnFixed {
        /// Known neighbor exploration levels `ε_i`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Exp3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    Hedge {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Exp3g,
    FixedArm {
        arm: usize,
    },
    UniformExplorer {
        #[serde(default = "default_explorer_c")]
        c: f64,
        /// Constant exploration level, overriding the decaying schedule.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    CopyFollower {
        parent: usize,
    },
}

fn default_alpha() -> f64 {
    2.5
}

fn default_explorer_c() -> f64 {
    1.0
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Ucbn { .. } => "ucbn",
            PolicySpec::Ucb { .. } => "ucb",
            PolicySpec::ExpnAdaptive => "expn_adaptive",
            PolicySpec::ExpnFixed { .. } => "expn_fixed",
            PolicySpec::Exp3 { .. } => "exp3",
            PolicySpec::Hedge { .. } => "hedge",
            PolicySpec::Exp3g => "exp3g",
            PolicySpec::FixedArm { .. } => "fixed_arm",
            PolicySpec::UniformExplorer { .. } => "uniform_explorer",
            PolicySpec::CopyFollower { .. } => "copy_follower",
        }
    }

    pub fn is_ucb_family(&self) -> bool {
        matches!(self, PolicySpec::Ucbn { .. } | PolicySpec::Ucb { .. })
    }

    pub fn build(&self, arms: usize, horizon: usize) -> Result<Box<dyn Policy>> {
        if arms < 2 {
            return Err(Error::Parameter(format!("K must be at least 2, got {arms}")));
        }
        Ok(match self {
            PolicySpec::Ucbn { alpha } => Box::new(Ucbn::new(arms, *alpha)?),
            PolicySpec::Ucb { alpha } => Box::new(Ucbn::isolated(arms, *alpha)?),
            PolicySpec::ExpnAdaptive => Box::new(Expn::adaptive(arms)),
            PolicySpec::ExpnFixed {
                eps,
                theta,
                eta,
                delta,
            } => {
                let theta = match (theta, eps) {
                    (Some(theta), _) => *theta,
                    (None, Some(eps)) => theta_beta(eps, arms)?.0,
                    (None, None) => 1.0,
                };
                let (eta, delta) = match (eta, delta) {
                    (Some(eta), Some(delta)) => (*eta, *delta),
                    (None, None) => {
                        let beta = estimator::beta_for(theta, arms);
                        let p = expn_fixed_params(theta, beta, arms, horizon)?;
                        (p.eta, p.delta)
                    }
                    _ => {
                        return Err(Error::Parameter(
                            "expn_fixed needs both eta and delta, or neither".into(),
                        ))
                    }
                };
                Box::new(Expn::fixed(arms, eta, delta)?)
            }
            PolicySpec::Exp3 { eta } => {
                let eta = eta.unwrap_or_else(|| Exp3::default_eta(arms, horizon));
                Box::new(Exp3::new(arms, eta)?)
            }
            PolicySpec::Hedge { delta } => {
                let delta = delta.unwrap_or_else(|| Hedge::default_delta(arms, horizon));
                Box::new(Hedge::new(arms, delta)?)
            }
            PolicySpec::Exp3g => Box::new(Exp3g::new(arms)),
            PolicySpec::FixedArm { arm } => Box::new(FixedArm::new(arms, *arm)?),
            PolicySpec::UniformExplorer { c, epsilon } => {
                let schedule = match epsilon {
                    Some(e) => ExplorationSchedule::Constant(*e),
                    None => ExplorationSchedule::Decaying { c: *c },
                };
                Box::new(UniformExplorer::new(arms, schedule)?)
            }
            PolicySpec::CopyFollower { parent } => Box::new(CopyFollower::new(arms, *parent)),
        })
    }
}
