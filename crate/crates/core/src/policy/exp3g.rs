use crate::dist::{normalize_from_log_weights, Distribution};
use crate::error::{Error, Result};
use crate::policy::{Feedback, Policy};

/// Arm-network baseline: the arms neighbors pulled (`A_t`) are observed for
/// free, the own arm through its self-loop. Neighbor distributions are not
/// used. Weights follow estimated losses, `p_j ∝ exp(−δ_t L̂_j)` with
/// `L̂_j = Σ 1{j observed}/O_j − Ĝ_j`.
#[derive(Debug, Clone)]
pub struct Exp3g {
    gains: Vec<f64>,
    /// `Σ_s 1{j observed}/O_j(s)`.
    seen: Vec<f64>,
    delta: f64,
    /// `Σ_s α_s`.
    independence: f64,
    current: Option<Distribution>,
}

impl Exp3g {
    pub fn new(arms: usize) -> Self {
        Self {
            gains: vec![0.0; arms],
            seen: vec![0.0; arms],
            delta: 1.0,
            independence: 0.0,
            current: None,
        }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// `K + 1 − |A_t|`, or `K` when nobody else pulled anything.
pub fn independence_number(arms: usize, neighbor_arms: usize) -> usize {
    if neighbor_arms == 0 {
        arms
    } else {
        arms + 1 - neighbor_arms
    }
}

/// `ĝ_j = g_j` on `A_t`, `g/p_j` on an own arm outside `A_t`, else 0.
pub fn exp3g_estimates(p: &Distribution, own_arm: usize, own_reward: f64, in_a: &[Option<f64>]) -> Vec<f64> {
    (0..p.arms())
        .map(|j| match in_a[j] {
            Some(g) => g,
            None if j == own_arm => own_reward / p.get(j),
            None => 0.0,
        })
        .collect()
}

impl Policy for Exp3g {
    fn name(&self) -> &'static str {
        "exp3g"
    }

    fn arms(&self) -> usize {
        self.gains.len()
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        let log_w: Vec<f64> = self
            .seen
            .iter()
            .zip(&self.gains)
            .map(|(s, g)| -self.delta * (s - g))
            .collect();
        let d = normalize_from_log_weights(&log_w)?;
        self.current = Some(d.clone());
        Ok(d)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let p = self.current.take().ok_or_else(|| Error::Protocol {
            round: feedback.t,
            msg: "observe called before the round's distribution was drawn".into(),
        })?;
        let arms = self.arms();
        let mut in_a = vec![None; arms];
        let mut sums = vec![(0.0, 0u32); arms];
        for pk in feedback.packets {
            sums[pk.arm].0 += pk.reward;
            sums[pk.arm].1 += 1;
        }
        // Rewards are shared in the adversarial setting; average in case they are not.
        for (j, (s, c)) in sums.iter().enumerate() {
            if *c > 0 {
                let own = if feedback.arm == j { (feedback.reward, 1) } else { (0.0, 0) };
                in_a[j] = Some((s + own.0) / (*c + own.1) as f64);
            }
        }
        let covered = in_a.iter().filter(|x| x.is_some()).count();
        for (g, e) in self.gains.iter_mut().zip(exp3g_estimates(&p, feedback.arm, feedback.reward, &in_a)) {
            *g += e;
        }
        for (j, s) in self.seen.iter_mut().enumerate() {
            if in_a[j].is_some() {
                *s += 1.0;
            } else if j == feedback.arm {
                *s += 1.0 / p.get(j);
            }
        }
        self.independence += independence_number(arms, covered) as f64;
        self.delta = ((arms as f64).ln() / self.independence).sqrt();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ObservationPacket;

    #[test]
    fn independence_number_cases() {
        assert_eq!(independence_number(5, 5), 1);
        assert_eq!(independence_number(5, 0), 5);
        assert_eq!(independence_number(5, 2), 4);
    }

    #[test]
    fn estimator_example() {
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let in_a = [None, Some(1.0), None];
        assert_eq!(exp3g_estimates(&p, 0, 1.0, &in_a), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn full_coverage_round() {
        let mut pol = Exp3g::new(3);
        pol.distribution(1).unwrap();
        let q = Distribution::uniform(3).unwrap();
        let packets: Vec<_> = (0..3).map(|j| ObservationPacket::new(j + 1, j, 0.5, &q).unwrap()).collect();
        pol.observe(&Feedback {
            t: 1,
            node: 0,
            arm: 0,
            reward: 0.5,
            packets: &packets,
            full_rewards: None,
        })
        .unwrap();
        assert_eq!(pol.gains(), &[0.5, 0.5, 0.5]);
        // α_1 = 1
        assert!((pol.delta() - 3f64.ln().sqrt()).abs() < 1e-15);
    }
}
