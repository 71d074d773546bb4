use crate::dist::{mix_with_uniform, normalize_from_log_weights, Distribution};
use crate::error::{Error, Result};
use crate::policy::{Feedback, Policy};

/// Single-agent EXP3: uniform mixing `η`, update rate `η/K`, and the
/// estimator `g/p_j` on the pulled arm only. Neighbor packets are ignored.
#[derive(Debug, Clone)]
pub struct Exp3 {
    eta: f64,
    log_weights: Vec<f64>,
    current: Option<Distribution>,
}

impl Exp3 {
    /// `min(1, √(K ln K / ((e − 1)T)))`.
    pub fn default_eta(arms: usize, horizon: usize) -> f64 {
        let k = arms as f64;
        let t = horizon.max(1) as f64;
        (k * k.ln() / ((std::f64::consts::E - 1.0) * t)).sqrt().min(1.0)
    }

    pub fn new(arms: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Parameter(format!("EXP3 η must lie in (0, 1], got {eta}")));
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; arms],
            current: None,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Policy for Exp3 {
    fn name(&self) -> &'static str {
        "exp3"
    }

    fn arms(&self) -> usize {
        self.log_weights.len()
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        let d = mix_with_uniform(&normalize_from_log_weights(&self.log_weights)?, self.eta)?;
        self.current = Some(d.clone());
        Ok(d)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let p = self.current.take().ok_or_else(|| Error::Protocol {
            round: feedback.t,
            msg: "observe called before the round's distribution was drawn".into(),
        })?;
        let k = self.arms() as f64;
        let g_hat = feedback.reward / p.get(feedback.arm);
        self.log_weights[feedback.arm] += self.eta / k * g_hat;
        Ok(())
    }
}

/// Full-information exponential weights: every arm's reward is revealed.
#[derive(Debug, Clone)]
pub struct Hedge {
    delta: f64,
    log_weights: Vec<f64>,
}

impl Hedge {
    /// `√(8 ln K / T)`.
    pub fn default_delta(arms: usize, horizon: usize) -> f64 {
        (8.0 * (arms as f64).ln() / horizon.max(1) as f64).sqrt()
    }

    pub fn new(arms: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("Hedge δ must be positive, got {delta}")));
        }
        Ok(Self {
            delta,
            log_weights: vec![0.0; arms],
        })
    }
}

impl Policy for Hedge {
    fn name(&self) -> &'static str {
        "hedge"
    }

    fn arms(&self) -> usize {
        self.log_weights.len()
    }

    fn distribution(&mut self, _t: usize) -> Result<Distribution> {
        normalize_from_log_weights(&self.log_weights)
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let rewards = feedback.full_rewards.ok_or_else(|| Error::Protocol {
            round: feedback.t,
            msg: "hedge needs the full reward vector".into(),
        })?;
        for (w, g) in self.log_weights.iter_mut().zip(rewards) {
            *w += self.delta * g;
        }
        Ok(())
    }

    fn wants_full_information(&self) -> bool {
        true
    }
}
