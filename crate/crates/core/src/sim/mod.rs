//! The synchronous round engine.
//!
//! Each round every node draws its arm, the environment pays out, and every
//! node then sees its own outcome plus one packet per neighbor before the
//! next round starts. Nodes never read anything from non-neighbors.

mod trace;

use std::sync::Arc;

use log::debug;
use rayon::prelude::*;

pub use trace::{
    checkpoints, csv_header, pseudo_regret, write_csv, write_csv_rows, CheckpointMode, RunTrace, CSV_HEADER_FIXED,
    DENSE_CHECKPOINT_LIMIT,
};

use crate::dist::{Distribution, ObservationPacket, SeedSpec, Stream, StreamKind};
use crate::env::{make_minimax_tape, Environment};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::policy::{gamma, Feedback, Policy, PolicySpec};
use trace::RegretMeter;

/// One fully specified run.
#[derive(Debug, Clone)]
pub struct Episode {
    pub env: Environment,
    pub network: Network,
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub replication: u64,
    /// Keep every node's per-round distribution in the trace.
    pub record_distributions: bool,
}

struct Agent {
    policy: Box<dyn Policy>,
    policy_rng: Stream,
    reward_rng: Stream,
}

pub fn run_episode(ep: &Episode) -> Result<RunTrace> {
    let n = ep.network.nodes();
    let k = ep.env.arms();
    if ep.policies.len() != n {
        return Err(Error::Parameter(format!(
            "network has {n} nodes but {} policies were given",
            ep.policies.len()
        )));
    }
    if ep.horizon == 0 {
        return Err(Error::Parameter("horizon must be at least 1".into()));
    }
    let meter = RegretMeter::new(&ep.env, ep.horizon)?;
    let mut agents = ep
        .policies
        .iter()
        .enumerate()
        .map(|(v, spec)| {
            Ok(Agent {
                policy: spec.build(k, ep.horizon)?,
                policy_rng: ep.seeds.policy_stream(ep.replication, v),
                reward_rng: ep.seeds.reward_stream(ep.replication, v),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = n * ep.horizon;
    let mut trace = RunTrace {
        horizon: ep.horizon,
        nodes: n,
        arms: k,
        master_seed: ep.seeds.master_seed,
        replication: ep.replication,
        policy_names: agents.iter().map(|a| a.policy.name()).collect(),
        ucb_nodes: ep.policies.iter().map(PolicySpec::is_ucb_family).collect(),
        neighbors: (0..n).map(|v| ep.network.neighbors(v).to_vec()).collect(),
        actions: Vec::with_capacity(cells),
        rewards: Vec::with_capacity(cells),
        gammas: Vec::with_capacity(cells),
        cum_regret: Vec::with_capacity(cells),
        distributions: ep.record_distributions.then(|| Vec::with_capacity(cells)),
        anomalies: vec![0; n],
    };
    let mut regret = vec![0.0; n];
    let mut dists: Vec<Distribution> = Vec::with_capacity(n);
    let mut arms = vec![0usize; n];
    let mut rewards = vec![0.0; n];
    let mut full: Vec<Option<Vec<f64>>> = vec![None; n];

    for t in 1..=ep.horizon {
        dists.clear();
        for (v, agent) in agents.iter_mut().enumerate() {
            let (d, a) = agent.policy.decide(t, &mut agent.policy_rng)?;
            if d.arms() != k || a >= k {
                return Err(Error::Protocol {
                    round: t,
                    msg: format!("node {v} produced arm {a} from a {}-arm distribution", d.arms()),
                });
            }
            dists.push(d);
            arms[v] = a;
        }

        let row = match &ep.env {
            Environment::Adversarial(tape) => Some(tape.row(t)?),
            Environment::Stochastic(_) => None,
        };
        for (v, agent) in agents.iter_mut().enumerate() {
            let wants_full = agent.policy.wants_full_information();
            match (&ep.env, row) {
                (Environment::Adversarial(_), Some(row)) => {
                    rewards[v] = row[arms[v]];
                    full[v] = wants_full.then(|| row.to_vec());
                }
                (Environment::Stochastic(spec), _) => {
                    if wants_full {
                        let all = (0..k)
                            .map(|j| spec.draw(j, &mut agent.reward_rng))
                            .collect::<Result<Vec<f64>>>()?;
                        rewards[v] = all[arms[v]];
                        full[v] = Some(all);
                    } else {
                        rewards[v] = spec.draw(arms[v], &mut agent.reward_rng)?;
                    }
                }
                _ => unreachable!("adversarial rounds always have a tape row"),
            }
        }

        for (v, agent) in agents.iter_mut().enumerate() {
            let packets = ep
                .network
                .neighbors(v)
                .iter()
                .map(|&u| ObservationPacket::new(u, arms[u], rewards[u], &dists[u]))
                .collect::<Result<Vec<_>>>()?;
            let feedback = Feedback {
                t,
                node: v,
                arm: arms[v],
                reward: rewards[v],
                packets: &packets,
                full_rewards: full[v].as_deref(),
            };
            agent.policy.observe(&feedback)?;
            agent.policy.end_round(t)?;

            let neighbor_dists: Vec<&Distribution> = packets.iter().map(|p| p.distribution).collect();
            regret[v] += meter.increment(t, arms[v])?;
            trace.actions.push(arms[v] as u32);
            trace.rewards.push(rewards[v]);
            trace.gammas.push(gamma(&dists[v], &neighbor_dists));
            trace.cum_regret.push(regret[v]);
        }
        if let Some(store) = trace.distributions.as_mut() {
            store.extend(dists.iter().cloned());
        }
    }
    for (v, agent) in agents.iter().enumerate() {
        trace.anomalies[v] = agent.policy.anomalies();
        if trace.anomalies[v] > 0 {
            debug!("node {v}: {} clamped estimates", trace.anomalies[v]);
        }
    }
    Ok(trace)
}

/// Where an episode's bandit comes from.
#[derive(Debug, Clone)]
pub enum EnvSource {
    /// The same environment for every replication.
    Fixed(Environment),
    /// A fresh frozen-Bernoulli tape per replication, drawn from the
    /// replication's tape stream.
    MinimaxTape {
        arms: usize,
        good_arm: usize,
        good_mean: f64,
        other_mean: f64,
    },
}

impl EnvSource {
    pub fn arms(&self) -> usize {
        match self {
            EnvSource::Fixed(env) => env.arms(),
            EnvSource::MinimaxTape { arms, .. } => *arms,
        }
    }

    pub fn materialize(&self, seeds: SeedSpec, replication: u64, horizon: usize) -> Result<Environment> {
        match self {
            EnvSource::Fixed(env) => Ok(env.clone()),
            EnvSource::MinimaxTape {
                arms,
                good_arm,
                good_mean,
                other_mean,
            } => {
                let mut rng = seeds.stream(StreamKind::Tape, replication, 0);
                let tape = make_minimax_tape(*arms, horizon, *good_arm, *good_mean, *other_mean, &mut rng)?;
                Ok(Environment::Adversarial(Arc::new(tape)))
            }
        }
    }
}

/// An episode minus its replication index.
#[derive(Debug, Clone)]
pub struct EpisodeTemplate {
    pub env: EnvSource,
    pub network: Network,
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub seeds: SeedSpec,
    pub record_distributions: bool,
}

impl EpisodeTemplate {
    pub fn episode(&self, replication: u64) -> Result<Episode> {
        Ok(Episode {
            env: self.env.materialize(self.seeds, replication, self.horizon)?,
            network: self.network.clone(),
            policies: self.policies.clone(),
            horizon: self.horizon,
            seeds: self.seeds,
            replication,
            record_distributions: self.record_distributions,
        })
    }

    /// Same template on a different network with a uniform policy.
    pub fn with_network(&self, network: Network, policy: PolicySpec) -> Self {
        let n = network.nodes();
        Self {
            network,
            policies: vec![policy; n],
            ..self.clone()
        }
    }
}

/// Runs every replication and reduces each trace with `reduce` as soon as it
/// finishes, so only the reductions are held in memory. Results come back in
/// the order of `replications` regardless of scheduling.
pub fn replicate<R, F>(template: &EpisodeTemplate, replications: &[u64], workers: usize, reduce: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&Episode, &RunTrace) -> Result<R> + Sync,
{
    if replications.is_empty() {
        return Err(Error::Parameter("need at least one replication".into()));
    }
    let one = |r: &u64| -> Result<R> {
        let ep = template.episode(*r)?;
        let trace = run_episode(&ep)?;
        reduce(&ep, &trace)
    };
    if workers <= 1 {
        return replications.iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
    pool.install(|| replications.par_iter().map(one).collect())
}

/// Sample mean and standard error (`n − 1` denominator; 0 for one sample).
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pointwise mean and standard error across equally long series.
pub fn aggregate(series: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = series.first().map(Vec::len).ok_or_else(|| Error::Parameter("nothing to aggregate".into()))?;
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::Parameter("series differ in length".into()));
    }
    let mut column = Vec::with_capacity(series.len());
    let mut means = Vec::with_capacity(len);
    let mut ses = Vec::with_capacity(len);
    for i in 0..len {
        column.clear();
        column.extend(series.iter().map(|s| s[i]));
        let (m, se) = mean_se(&column);
        means.push(m);
        ses.push(se);
    }
    Ok((means, ses))
}

/// Leader is the max-degree node; everyone else follows a BFS parent toward it.
pub fn assign_centralized_roles(network: &Network) -> Result<(usize, Vec<Option<usize>>)> {
    let leader = network.max_degree_node()?;
    Ok((leader, network.bfs_parent_tree(leader)?))
}

/// Leader runs `leader`; every other node copies its parent.
pub fn centralized_policies(network: &Network, leader: PolicySpec) -> Result<Vec<PolicySpec>> {
    let (root, parents) = assign_centralized_roles(network)?;
    Ok(parents
        .iter()
        .enumerate()
        .map(|(v, p)| match p {
            Some(parent) => PolicySpec::CopyFollower { parent: *parent },
            None => {
                debug_assert_eq!(v, root);
                leader.clone()
            }
        })
        .collect())
}
