use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::policy::{Feedback, Policy};

/// `μ̂ + √(α ln t / (2n))`, or `+∞` for an arm with no samples.
pub fn ucb_index(mean: f64, samples: u64, t: f64, alpha: f64) -> f64 {
    if samples == 0 {
        return f64::INFINITY;
    }
    mean + (alpha * t.ln() / (2.0 * samples as f64)).sqrt()
}

/// Sample counts and reward sums per arm.
///
/// Means are kept as exact `sum / n` rather than running averages so agents
/// that saw the same samples in the same order hold bit-identical state.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbState {
    pub counts: Vec<u64>,
    pub neighbor_counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub alpha: f64,
}

impl UcbState {
    pub fn new(arms: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(Error::Parameter(format!("UCB confidence α must exceed 2, got {alpha}")));
        }
        Ok(Self {
            counts: vec![0; arms],
            neighbor_counts: vec![0; arms],
            sums: vec![0.0; arms],
            alpha,
        })
    }

    pub fn mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    pub fn record(&mut self, arm: usize, reward: f64, from_neighbor: bool) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        if from_neighbor {
            self.neighbor_counts[arm] += 1;
        }
    }

    /// Lowest-index maximizer of the UCB index.
    pub fn best_arm(&self, t: usize) -> usize {
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for j in 0..self.counts.len() {
            let u = ucb_index(self.mean(j), self.counts[j], t as f64, self.alpha);
            if u > best_index {
                best = j;
                best_index = u;
            }
        }
        best
    }
}

/// UCB that folds every observed sample, own or neighbor, into one pool.
/// With `share_neighbors = false` it is the classic single-agent UCB.
#[derive(Debug, Clone)]
pub struct Ucbn {
    state: UcbState,
    share_neighbors: bool,
}

impl Ucbn {
    pub fn new(arms: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            state: UcbState::new(arms, alpha)?,
            share_neighbors: true,
        })
    }

    pub fn isolated(arms: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            state: UcbState::new(arms, alpha)?,
            share_neighbors: false,
        })
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }
}

impl Policy for Ucbn {
    fn name(&self) -> &'static str {
        if self.share_neighbors {
            "ucbn"
        } else {
            "ucb"
        }
    }

    fn arms(&self) -> usize {
        self.state.counts.len()
    }

    fn distribution(&mut self, t: usize) -> Result<Distribution> {
        Distribution::one_hot(self.arms(), self.state.best_arm(t))
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        if self.share_neighbors {
            for (id, arm, reward) in feedback.observations() {
                self.state.record(arm, reward, id != feedback.node);
            }
        } else {
            self.state.record(feedback.arm, feedback.reward, false);
        }
        Ok(())
    }

    fn neighbor_counts(&self) -> Option<&[u64]> {
        Some(&self.state.neighbor_counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ObservationPacket, SeedSpec};

    #[test]
    fn index_values() {
        assert_eq!(ucb_index(0.3, 0, 5.0, 2.5), f64::INFINITY);
        // ln t = 1: 0.5 + sqrt(2/16) = 0.5 + 0.35355339059327373
        let u = ucb_index(0.5, 8, std::f64::consts::E, 2.0);
        assert!((u - 0.853_553_390_593_273_8).abs() < 1e-15);
        let far = ucb_index(0.4, 1_000_000_000, 100.0, 2.5);
        assert!((far - 0.4).abs() < 1e-3);
    }

    #[test]
    fn alpha_must_exceed_two() {
        assert!(Ucbn::new(3, 2.0).is_err());
        assert!(Ucbn::new(3, 2.5).is_ok());
    }

    #[test]
    fn own_and_neighbor_samples_pool() {
        let mut p = Ucbn::new(3, 2.5).unwrap();
        let d = Distribution::one_hot(3, 0).unwrap();
        let packets = [ObservationPacket::new(1, 0, 0.0, &d).unwrap()];
        p.observe(&Feedback {
            t: 1,
            node: 0,
            arm: 0,
            reward: 1.0,
            packets: &packets,
            full_rewards: None,
        })
        .unwrap();
        assert_eq!(p.state().counts[0], 2);
        assert_eq!(p.state().mean(0), 0.5);
        assert_eq!(p.state().neighbor_counts[0], 1);

        let mut lone = Ucbn::new(3, 2.5).unwrap();
        lone.observe(&Feedback {
            t: 1,
            node: 0,
            arm: 0,
            reward: 1.0,
            packets: &[],
            full_rewards: None,
        })
        .unwrap();
        assert_eq!(lone.state().counts[0], 1);
        assert_eq!(lone.state().mean(0), 1.0);
    }

    #[test]
    fn b_neighbors_on_same_arm_add_b_plus_one() {
        let b = 4;
        let d = Distribution::one_hot(2, 1).unwrap();
        let packets: Vec<_> = (1..=b).map(|i| ObservationPacket::new(i, 1, 1.0, &d).unwrap()).collect();
        let mut p = Ucbn::new(2, 2.5).unwrap();
        p.observe(&Feedback {
            t: 1,
            node: 0,
            arm: 1,
            reward: 0.0,
            packets: &packets,
            full_rewards: None,
        })
        .unwrap();
        assert_eq!(p.state().counts[1], b as u64 + 1);
        assert_eq!(p.state().neighbor_counts[1], b as u64);
    }

    #[test]
    fn selection_rules() {
        let mut p = Ucbn::new(4, 2.5).unwrap();
        let d = p.distribution(1).unwrap();
        assert!(d.is_one_hot_at(0));
        for arm in [0, 1, 3] {
            p.state.record(arm, 1.0, false);
        }
        assert!(p.distribution(4).unwrap().is_one_hot_at(2));
    }

    #[test]
    fn isolated_ignores_packets() {
        let mut p = Ucbn::isolated(2, 2.5).unwrap();
        let mut rng = SeedSpec::new(1).policy_stream(0, 0);
        let d = Distribution::one_hot(2, 1).unwrap();
        let packets = [ObservationPacket::new(7, 1, 1.0, &d).unwrap()];
        crate::policy::testing::step(&mut p, 1, &mut rng, |_| 0.0, &packets);
        assert_eq!(p.state().counts, vec![1, 0]);
        assert_eq!(p.state().neighbor_counts, vec![0, 0]);
    }
}
