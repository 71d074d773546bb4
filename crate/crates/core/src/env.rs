//! Reward sources: Bernoulli bandits drawn independently per agent, and
//! oblivious adversarial tapes shared exactly by every agent.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bernoulli arms with means `μ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSpec {
    means: Vec<f64>,
}

impl StochasticSpec {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::Parameter(format!(
                "a bandit needs at least 2 arms, got {}",
                means.len()
            )));
        }
        if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::Parameter(format!("mean {m} outside [0, 1]")));
        }
        Ok(Self { means })
    }

    /// One good arm and `k - 1` identical others.
    pub fn minimax(k: usize, good_arm: usize, good_mean: f64, other_mean: f64) -> Result<Self> {
        check_minimax(k, good_arm, good_mean, other_mean)?;
        let mut means = vec![other_mean; k];
        means[good_arm] = good_mean;
        Self::new(means)
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn best_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Δ_i = μ* - μ_i`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.means.iter().map(|m| best - m).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        let mean = *self.means.get(arm).ok_or(Error::OutOfRange {
            what: "arm",
            index: arm,
            limit: self.arms(),
        })?;
        Ok(bernoulli(mean, rng))
    }
}

fn bernoulli<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    if u < mean {
        1.0
    } else {
        0.0
    }
}

fn check_minimax(k: usize, good_arm: usize, good_mean: f64, other_mean: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::Parameter(format!("K must be at least 2, got {k}")));
    }
    if good_arm >= k {
        return Err(Error::OutOfRange {
            what: "good_arm",
            index: good_arm,
            limit: k,
        });
    }
    if !(0.0 <= other_mean && other_mean <= good_mean && good_mean <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 <= other_mean <= good_mean <= 1, got other_mean={other_mean}, good_mean={good_mean}"
        )));
    }
    Ok(())
}

/// Independent Bernoulli draw for one agent at one round.
pub fn stochastic_draw<R: Rng + ?Sized>(spec: &StochasticSpec, arm: usize, rng: &mut R) -> Result<f64> {
    spec.draw(arm, rng)
}

/// A `T × K` reward matrix fixed before any agent acts.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialTape {
    horizon: usize,
    arms: usize,
    rewards: Vec<f64>,
    column_sums: Vec<f64>,
}

impl AdversarialTape {
    /// `rewards` is row-major: round `t` (1-based) occupies
    /// `rewards[(t-1)*K .. t*K]`.
    pub fn new(horizon: usize, arms: usize, rewards: Vec<f64>) -> Result<Self> {
        if arms < 2 {
            return Err(Error::Parameter(format!("K must be at least 2, got {arms}")));
        }
        if horizon == 0 {
            return Err(Error::Parameter("tape horizon must be at least 1".into()));
        }
        if rewards.len() != horizon * arms {
            return Err(Error::Parameter(format!(
                "tape has {} entries, expected {horizon}x{arms}",
                rewards.len()
            )));
        }
        if let Some(g) = rewards.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::Parameter(format!("tape reward {g} outside [0, 1]")));
        }
        let mut column_sums = vec![0.0; arms];
        for row in rewards.chunks_exact(arms) {
            for (s, g) in column_sums.iter_mut().zip(row) {
                *s += g;
            }
        }
        Ok(Self {
            horizon,
            arms,
            rewards,
            column_sums,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn column_sums(&self) -> &[f64] {
        &self.column_sums
    }

    /// The full reward vector `g(t)`.
    pub fn row(&self, t: usize) -> Result<&[f64]> {
        if t == 0 || t > self.horizon {
            return Err(Error::OutOfRange {
                what: "round",
                index: t,
                limit: self.horizon,
            });
        }
        Ok(&self.rewards[(t - 1) * self.arms..t * self.arms])
    }

    pub fn reward(&self, t: usize, arm: usize) -> Result<f64> {
        if arm >= self.arms {
            return Err(Error::OutOfRange {
                what: "arm",
                index: arm,
                limit: self.arms,
            });
        }
        Ok(self.row(t)?[arm])
    }

    /// Plain-text form: a `T K` header, then one line of `K` rewards per round.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.horizon, self.arms)?;
        for row in self.rewards.chunks_exact(self.arms) {
            let line: Vec<String> = row.iter().map(|g| g.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (horizon, arms) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing \"T K\" header".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad header field {s:?}: {e}"),
                })
            };
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "header must be \"T K\"".into(),
                });
            }
            break (parse(fields[0])?, parse(fields[1])?);
        };
        let mut rewards = Vec::with_capacity(horizon * arms);
        let mut rows = 0;
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = rewards.len();
            for field in line.split_whitespace() {
                let g: f64 = field.parse().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad reward {field:?}: {e}"),
                })?;
                rewards.push(g);
            }
            if rewards.len() - before != arms {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {arms} rewards, found {}", rewards.len() - before),
                });
            }
            rows += 1;
        }
        if rows != horizon {
            return Err(Error::Parse {
                line: rows + 1,
                msg: format!("header promises {horizon} rounds, found {rows}"),
            });
        }
        Self::new(horizon, arms, rewards)
    }
}

/// Frozen Bernoulli realizations: `good_arm` at `good_mean`, every other arm
/// at `other_mean`. Draws are made round by round, arm by arm.
pub fn make_minimax_tape<R: Rng + ?Sized>(
    arms: usize,
    horizon: usize,
    good_arm: usize,
    good_mean: f64,
    other_mean: f64,
    rng: &mut R,
) -> Result<AdversarialTape> {
    check_minimax(arms, good_arm, good_mean, other_mean)?;
    let mut rewards = Vec::with_capacity(arms * horizon);
    for _ in 0..horizon {
        for j in 0..arms {
            let mean = if j == good_arm { good_mean } else { other_mean };
            rewards.push(bernoulli(mean, rng));
        }
    }
    AdversarialTape::new(horizon, arms, rewards)
}

pub fn tape_reward(tape: &AdversarialTape, t: usize, arm: usize) -> Result<f64> {
    tape.reward(t, arm)
}

/// The bandit every node plays against.
#[derive(Debug, Clone)]
pub enum Environment {
    Stochastic(StochasticSpec),
    Adversarial(Arc<AdversarialTape>),
}

impl Environment {
    pub fn arms(&self) -> usize {
        match self {
            Environment::Stochastic(s) => s.arms(),
            Environment::Adversarial(t) => t.arms(),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Environment::Stochastic(_))
    }

    /// `(j*, benchmark)`: the best fixed arm in expectation (lowest index on
    /// ties) and its cumulative value over `horizon` rounds.
    pub fn best_arm(&self, horizon: usize) -> (usize, f64) {
        match self {
            Environment::Stochastic(s) => {
                let j = argmax_lowest(s.means());
                (j, horizon as f64 * s.means()[j])
            }
            Environment::Adversarial(t) => {
                let j = argmax_lowest(t.column_sums());
                (j, t.column_sums()[j])
            }
        }
    }
}

pub fn best_arm(env: &Environment, horizon: usize) -> (usize, f64) {
    env.best_arm(horizon)
}

pub(crate) fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    best
}
