use log::debug;

use crate::dist::{mix_with_uniform, normalize_from_log_weights, Distribution};
use crate::error::{Error, Result};
use crate::policy::estimator::{expn_adaptive_rate, expn_estimate, gamma, observe_prob};
use crate::policy::{Feedback, Policy};

/// How EXPN sets its exploration floor `η` and update rate `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpnRate {
    /// Constant `(η, δ)`, typically from the regime table.
    Fixed { eta: f64, delta: f64 },
    /// `η = 0` and `δ_t = √(ln K / Σ_{c≤t}(1 + γ_c))`, recomputed after
    /// every round and used for the next one. Weights follow the estimated
    /// losses `L̂_j = Σ 1{j seen}/p′_j − Ĝ_j`, i.e. `p_j ∝ exp(−δ_t L̂_j)`.
    Adaptive,
}

/// Exponential weights over the neighbor-aware importance-weighted gains.
#[derive(Debug, Clone)]
pub struct Expn {
    arms: usize,
    rate: ExpnRate,
    gains: Vec<f64>,
    /// `Σ_s 1{j observed}/p′_j(s)`, the estimate of `t` itself.
    seen: Vec<f64>,
    delta: f64,
    /// `Σ_c (1 + γ_c)` so far.
    information: f64,
    anomalies: u64,
    current: Option<Distribution>,
}

impl Expn {
    pub fn adaptive(arms: usize) -> Self {
        Self {
            arms,
            rate: ExpnRate::Adaptive,
            gains: vec![0.0; arms],
            seen: vec![0.0; arms],
            // Irrelevant at t = 1 since every gain is still zero.
            delta: 1.0,
            information: 0.0,
            anomalies: 0,
            current: None,
        }
    }

    pub fn fixed(arms: usize, eta: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Parameter(format!("η must lie in [0, 1], got {eta}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("δ must be positive, got {delta}")));
        }
        Ok(Self {
            arms,
            rate: ExpnRate::Fixed { eta, delta },
            gains: vec![0.0; arms],
            seen: vec![0.0; arms],
            delta,
            information: 0.0,
            anomalies: 0,
            current: None,
        })
    }

    pub fn rate(&self) -> ExpnRate {
        self.rate
    }

    /// Cumulative estimated gains `Ĝ_j`.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// The `δ` the next distribution will use.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        match self.rate {
            ExpnRate::Fixed { eta, .. } => eta,
            ExpnRate::Adaptive => 0.0,
        }
    }

    /// Cumulative estimated losses `L̂_j`.
    pub fn losses(&self) -> Vec<f64> {
        self.seen.iter().zip(&self.gains).map(|(s, g)| s - g).collect()
    }

    fn weights_distribution(&self) -> Result<Distribution> {
        let log_w: Vec<f64> = match self.rate {
            ExpnRate::Fixed { .. } => self.gains.iter().map(|g| self.delta * g).collect(),
            ExpnRate::Adaptive => self.losses().iter().map(|l| -self.delta * l).collect(),
        };
        mix_with_uniform(&normalize_from_log_weights(&log_w)?, self.eta())
    }
}

impl Policy for Expn {
    fn name(&self) -> &'static str {
        match self.rate {
            ExpnRate::Fixed { .. } => "expn_fixed",
            ExpnRate::Adaptive => "expn_adaptive",
        }
    }

    fn arms(&self) -> usize {
        self.arms
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        let d = self.weights_distribution()?;
        self.current = Some(d.clone());
        Ok(d)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let own = self.current.take().ok_or_else(|| Error::Protocol {
            round: feedback.t,
            msg: "observe called before the round's distribution was drawn".into(),
        })?;
        let neighbors = feedback.neighbor_distributions();
        for (j, reward) in feedback.observed_means(self.arms).into_iter().enumerate() {
            let Some(reward) = reward else { continue };
            let p_prime = observe_prob(&own, &neighbors, j);
            let mut g_hat = expn_estimate(reward, true, p_prime)?;
            self.seen[j] += 1.0 / p_prime;
            if let ExpnRate::Fixed { delta, .. } = self.rate {
                if delta * g_hat > 1.0 {
                    debug!("round {}: clamping estimate {g_hat} on arm {j} to 1/δ", feedback.t);
                    g_hat = 1.0 / delta;
                    self.anomalies += 1;
                }
            }
            self.gains[j] += g_hat;
        }
        if self.rate == ExpnRate::Adaptive {
            self.information += 1.0 + gamma(&own, &neighbors);
            self.delta = expn_adaptive_rate(self.information, self.arms)?;
        }
        Ok(())
    }

    fn anomalies(&self) -> u64 {
        self.anomalies
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ObservationPacket;

    fn feedback<'a>(arm: usize, reward: f64, packets: &'a [ObservationPacket<'a>]) -> Feedback<'a> {
        Feedback {
            t: 1,
            node: 0,
            arm,
            reward,
            packets,
            full_rewards: None,
        }
    }

    #[test]
    fn first_round_is_uniform() {
        let mut p = Expn::adaptive(4);
        assert_eq!(p.distribution(1).unwrap().probs(), &[0.25; 4]);
        let mut f = Expn::fixed(3, 0.0, 0.1).unwrap();
        let d = f.distribution(1).unwrap();
        assert!(d.probs().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn lone_agent_uses_classical_estimator() {
        let mut p = Expn::adaptive(2);
        p.distribution(1).unwrap();
        p.observe(&feedback(1, 0.6, &[])).unwrap();
        // p′ = p = 0.5
        assert_eq!(p.gains(), &[0.0, 1.2]);
        // γ = K = 2, δ_1 = √(ln 2 / 3)
        assert!((p.delta() - (2f64.ln() / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_agent_expected_increment_is_the_gain() {
        // Both uniform over K = 2, shared g = (1, 0); enumerate the 4 joint actions.
        let g = [1.0, 0.0];
        let q = Distribution::uniform(2).unwrap();
        let mut expected = [0.0; 2];
        for own in 0..2 {
            for other in 0..2 {
                let mut p = Expn::adaptive(2);
                p.distribution(1).unwrap();
                let packets = [ObservationPacket::new(1, other, g[other], &q).unwrap()];
                p.observe(&feedback(own, g[own], &packets)).unwrap();
                for j in 0..2 {
                    expected[j] += 0.25 * p.gains()[j];
                }
            }
        }
        assert!((expected[0] - 1.0).abs() < 1e-12);
        assert!(expected[1].abs() < 1e-12);
    }

    #[test]
    fn fixed_variant_clamps_and_counts() {
        let mut p = Expn::fixed(2, 0.0, 1.0).unwrap();
        p.distribution(1).unwrap();
        p.observe(&feedback(0, 1.0, &[])).unwrap();
        assert_eq!(p.gains()[0], 1.0);
        assert_eq!(p.anomalies(), 1);
    }

    #[test]
    fn observe_without_decide_is_a_protocol_error() {
        let mut p = Expn::adaptive(2);
        assert!(matches!(p.observe(&feedback(0, 1.0, &[])), Err(Error::Protocol { .. })));
    }

    #[test]
    fn adaptive_rate_is_nonincreasing() {
        let mut p = Expn::adaptive(3);
        let mut rng = crate::dist::SeedSpec::new(3).policy_stream(0, 0);
        let mut last = f64::INFINITY;
        for t in 1..200 {
            crate::policy::testing::step(&mut p, t, &mut rng, |a| if a == 2 { 1.0 } else { 0.3 }, &[]);
            assert!(p.delta() <= last);
            last = p.delta();
        }
        assert!(p.gains().iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(Expn::fixed(2, 1.5, 0.1).is_err());
        assert!(Expn::fixed(2, 0.1, 0.0).is_err());
    }
}
