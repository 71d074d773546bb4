//! Non-learning neighbors: clumsy fixed-arm agents, ε-greedy explorers and
//! distribution copiers.

use crate::dist::{mix_with_uniform, Distribution};
use crate::error::{Error, Result};
use crate::policy::{Feedback, Policy};

#[derive(Debug, Clone)]
pub struct FixedArm {
    dist: Distribution,
}

impl FixedArm {
    pub fn new(arms: usize, arm: usize) -> Result<Self> {
        Ok(Self {
            dist: Distribution::one_hot(arms, arm)?,
        })
    }
}

impl Policy for FixedArm {
    fn name(&self) -> &'static str {
        "fixed_arm"
    }

    fn arms(&self) -> usize {
        self.dist.arms()
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        Ok(self.dist.clone())
    }

    fn observe(&mut self, _feedback: &Feedback<'_>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationSchedule {
    Constant(f64),
    /// `ε_t = min(1, c·K·ln(t+1)·t^{-0.9})`.
    Decaying { c: f64 },
}

impl ExplorationSchedule {
    pub fn epsilon(&self, t: usize, arms: usize) -> f64 {
        match *self {
            ExplorationSchedule::Constant(e) => e,
            ExplorationSchedule::Decaying { c } => {
                let t = t.max(1) as f64;
                (c * arms as f64 * (t + 1.0).ln() * t.powf(-0.9)).min(1.0)
            }
        }
    }
}

/// Plays the empirically best own arm (unpulled arms first), exploring
/// uniformly with probability `ε_t`.
#[derive(Debug, Clone)]
pub struct UniformExplorer {
    schedule: ExplorationSchedule,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl UniformExplorer {
    pub fn new(arms: usize, schedule: ExplorationSchedule) -> Result<Self> {
        match schedule {
            ExplorationSchedule::Constant(e) if !(0.0..=1.0).contains(&e) => {
                return Err(Error::Parameter(format!("ε must lie in [0, 1], got {e}")))
            }
            ExplorationSchedule::Decaying { c } if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::Parameter(format!("schedule constant must be positive, got {c}")))
            }
            _ => {}
        }
        Ok(Self {
            schedule,
            counts: vec![0; arms],
            sums: vec![0.0; arms],
        })
    }

    fn greedy(&self) -> usize {
        if let Some(j) = self.counts.iter().position(|&n| n == 0) {
            return j;
        }
        let means: Vec<f64> = self.sums.iter().zip(&self.counts).map(|(s, &n)| s / n as f64).collect();
        crate::env::argmax_lowest(&means)
    }
}

impl Policy for UniformExplorer {
    fn name(&self) -> &'static str {
        "uniform_explorer"
    }

    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn distribution(&mut self, t: usize) -> Result<Distribution> {
        let eps = self.schedule.epsilon(t, self.arms());
        mix_with_uniform(&Distribution::one_hot(self.arms(), self.greedy())?, eps)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        self.counts[feedback.arm] += 1;
        self.sums[feedback.arm] += feedback.reward;
        Ok(())
    }
}

/// Plays whatever its parent played in the previous round.
#[derive(Debug, Clone)]
pub struct CopyFollower {
    arms: usize,
    parent: usize,
    last_seen: Option<Distribution>,
}

impl CopyFollower {
    pub fn new(arms: usize, parent: usize) -> Self {
        Self {
            arms,
            parent,
            last_seen: None,
        }
    }

    pub fn parent(&self) -> usize {
        self.parent
    }
}

impl Policy for CopyFollower {
    fn name(&self) -> &'static str {
        "copy_follower"
    }

    fn arms(&self) -> usize {
        self.arms
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        match &self.last_seen {
            Some(d) => Ok(d.clone()),
            None => Distribution::uniform(self.arms),
        }
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let packet = feedback
            .packets
            .iter()
            .find(|p| p.neighbor_id == self.parent)
            .ok_or_else(|| Error::Protocol {
                round: feedback.t,
                msg: format!("node {} follows {}, which is not a neighbor", feedback.node, self.parent),
            })?;
        self.last_seen = Some(packet.distribution.clone());
        Ok(())
    }
}
