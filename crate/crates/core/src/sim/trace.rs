use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, RoundRecord};
use crate::env::Environment;
use crate::error::{Error, Result};

/// Everything that happened in one episode, stored round-major
/// (`index = (t - 1) * nodes + node`).
///
/// Neighbor-selection counters `n′` are not stored; they are a pure function
/// of the neighbors' actions and are rebuilt on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub horizon: usize,
    pub nodes: usize,
    pub arms: usize,
    pub master_seed: u64,
    pub replication: u64,
    pub policy_names: Vec<&'static str>,
    pub(crate) ucb_nodes: Vec<bool>,
    pub(crate) neighbors: Vec<Vec<usize>>,
    pub(crate) actions: Vec<u32>,
    pub(crate) rewards: Vec<f64>,
    pub(crate) gammas: Vec<f64>,
    pub(crate) cum_regret: Vec<f64>,
    pub(crate) distributions: Option<Vec<Distribution>>,
    pub anomalies: Vec<u64>,
}

impl RunTrace {
    fn at(&self, t: usize, node: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon && node < self.nodes);
        (t - 1) * self.nodes + node
    }

    pub fn arm(&self, t: usize, node: usize) -> usize {
        self.actions[self.at(t, node)] as usize
    }

    pub fn reward(&self, t: usize, node: usize) -> f64 {
        self.rewards[self.at(t, node)]
    }

    pub fn gamma(&self, t: usize, node: usize) -> f64 {
        self.gammas[self.at(t, node)]
    }

    pub fn cum_regret(&self, t: usize, node: usize) -> f64 {
        self.cum_regret[self.at(t, node)]
    }

    pub fn distribution(&self, t: usize, node: usize) -> Option<&Distribution> {
        let i = self.at(t, node);
        self.distributions.as_ref().map(|d| &d[i])
    }

    pub fn is_ucb_node(&self, node: usize) -> bool {
        self.ucb_nodes[node]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn actions(&self, node: usize) -> Vec<usize> {
        (1..=self.horizon).map(|t| self.arm(t, node)).collect()
    }

    pub fn regret_series(&self, node: usize) -> Vec<f64> {
        (1..=self.horizon).map(|t| self.cum_regret(t, node)).collect()
    }

    pub fn gamma_series(&self, node: usize) -> Vec<f64> {
        (1..=self.horizon).map(|t| self.gamma(t, node)).collect()
    }

    pub fn final_regret(&self, node: usize) -> f64 {
        self.cum_regret(self.horizon, node)
    }

    /// `n′_j(t)` for every round: how often `node`'s neighbors selected each
    /// arm in rounds `1..=t`. Indexed `[t - 1][arm]`.
    pub fn n_prime_series(&self, node: usize) -> Vec<Vec<u64>> {
        let mut counts = vec![0u64; self.arms];
        let mut out = Vec::with_capacity(self.horizon);
        for t in 1..=self.horizon {
            for &u in &self.neighbors[node] {
                counts[self.arm(t, u)] += 1;
            }
            out.push(counts.clone());
        }
        out
    }

    /// Number of distinct arms selected by `node`'s neighbors in round `t`.
    pub fn neighbor_coverage(&self, t: usize, node: usize) -> usize {
        let mut seen = vec![false; self.arms];
        for &u in &self.neighbors[node] {
            seen[self.arm(t, u)] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Round `t` in record form. `n′` is rebuilt from rounds `1..=t`.
    pub fn round(&self, t: usize) -> RoundRecord {
        let n_prime = (0..self.nodes)
            .map(|v| {
                let mut counts = vec![0u64; self.arms];
                for s in 1..=t {
                    for &u in &self.neighbors[v] {
                        counts[self.arm(s, u)] += 1;
                    }
                }
                counts
            })
            .collect();
        RoundRecord {
            t,
            arms: (0..self.nodes).map(|v| self.arm(t, v)).collect(),
            rewards: (0..self.nodes).map(|v| self.reward(t, v)).collect(),
            gammas: (0..self.nodes).map(|v| self.gamma(t, v)).collect(),
            n_prime,
            distributions: self
                .distributions
                .as_ref()
                .map(|d| d[(t - 1) * self.nodes..t * self.nodes].to_vec()),
        }
    }
}

/// Cumulative pseudo-regret of `actions` (one per round from `t = 1`).
///
/// Stochastic: `Σ (μ* − μ_{a(s)})` over the true means. Adversarial:
/// `Σ (g_{j*}(s) − g_{a(s)}(s))` with `j*` the best column over the first
/// `actions.len()` rounds of the tape.
pub fn pseudo_regret(env: &Environment, actions: &[usize]) -> Result<Vec<f64>> {
    let increments = RegretMeter::new(env, actions.len())?;
    let mut total = 0.0;
    actions
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            total += increments.increment(i + 1, a)?;
            Ok(total)
        })
        .collect()
}

/// Per-round regret increments against the best fixed arm.
#[derive(Debug, Clone)]
pub(crate) struct RegretMeter<'a> {
    env: &'a Environment,
    best: usize,
    gaps: Vec<f64>,
}

impl<'a> RegretMeter<'a> {
    pub(crate) fn new(env: &'a Environment, horizon: usize) -> Result<Self> {
        match env {
            Environment::Stochastic(s) => Ok(Self {
                env,
                best: crate::env::argmax_lowest(s.means()),
                gaps: s.gaps(),
            }),
            Environment::Adversarial(tape) => {
                if tape.horizon() < horizon {
                    return Err(Error::Parameter(format!(
                        "tape covers {} rounds, episode needs {horizon}",
                        tape.horizon()
                    )));
                }
                let mut sums = vec![0.0; tape.arms()];
                for t in 1..=horizon {
                    for (s, g) in sums.iter_mut().zip(tape.row(t)?) {
                        *s += g;
                    }
                }
                Ok(Self {
                    env,
                    best: crate::env::argmax_lowest(&sums),
                    gaps: Vec::new(),
                })
            }
        }
    }

    pub(crate) fn increment(&self, t: usize, arm: usize) -> Result<f64> {
        match self.env {
            Environment::Stochastic(_) => self.gaps.get(arm).copied().ok_or(Error::OutOfRange {
                what: "arm",
                index: arm,
                limit: self.gaps.len(),
            }),
            Environment::Adversarial(tape) => {
                let row = tape.row(t)?;
                Ok(row[self.best] - row[arm])
            }
        }
    }
}

/// Which rounds are written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointMode {
    /// Every round when `T ≤ 10⁴`, geometric otherwise.
    #[default]
    Auto,
    All,
    Geometric,
}

pub const DENSE_CHECKPOINT_LIMIT: usize = 10_000;

/// Rounds to log: all of `1..=T`, or `{⌈1.05^k⌉} ∪ {T}`.
pub fn checkpoints(horizon: usize, mode: CheckpointMode) -> Vec<usize> {
    let dense = match mode {
        CheckpointMode::All => true,
        CheckpointMode::Geometric => false,
        CheckpointMode::Auto => horizon <= DENSE_CHECKPOINT_LIMIT,
    };
    if dense {
        return (1..=horizon).collect();
    }
    let mut out = Vec::new();
    let mut x = 1.0f64;
    loop {
        let t = x.ceil() as usize;
        if t > horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        x *= 1.05;
    }
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

pub const CSV_HEADER_FIXED: &str = "run_id,seed,node,t,arm,reward,cum_regret,gamma";

pub fn csv_header(arms: usize) -> String {
    let mut h = CSV_HEADER_FIXED.to_string();
    for j in 0..arms {
        h.push_str(&format!(",n_prime_{j}"));
    }
    h
}

/// Appends the trace's rows at the given checkpoints (no header).
/// `n_prime_*` cells are left empty for nodes outside the UCB family.
pub fn write_csv_rows<W: Write>(
    trace: &RunTrace,
    run_id: &str,
    seed: u64,
    checkpoints: &[usize],
    out: &mut W,
) -> Result<()> {
    let mut counts = vec![vec![0u64; trace.arms]; trace.nodes];
    let mut next = checkpoints.iter().peekable();
    let mut line = String::new();
    for t in 1..=trace.horizon {
        for v in 0..trace.nodes {
            for &u in trace.neighbors(v) {
                counts[v][trace.arm(t, u)] += 1;
            }
        }
        if next.peek() != Some(&&t) {
            continue;
        }
        next.next();
        for v in 0..trace.nodes {
            line.clear();
            line.push_str(&format!(
                "{run_id},{seed},{v},{t},{},{},{},{}",
                trace.arm(t, v),
                trace.reward(t, v),
                trace.cum_regret(t, v),
                trace.gamma(t, v)
            ));
            for j in 0..trace.arms {
                line.push(',');
                if trace.is_ucb_node(v) {
                    line.push_str(&counts[v][j].to_string());
                }
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
    }
    Ok(())
}

pub fn write_csv<W: Write>(trace: &RunTrace, run_id: &str, checkpoints: &[usize], mut out: W) -> Result<()> {
    writeln!(out, "{}", csv_header(trace.arms))?;
    write_csv_rows(trace, run_id, trace.replication, checkpoints, &mut out)
}
