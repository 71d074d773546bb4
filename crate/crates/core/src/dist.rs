//! Probability vectors over arms, the per-neighbor observation packet, and
//! the seeding contract shared by every other module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random stream owned by exactly one consumer (an agent, a reward source,
/// a tape generator).
pub type Stream = ChaCha8Rng;

/// Absolute tolerance on the sum of a [`Distribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Drift above this is reported when a distribution is re-normalized.
const DRIFT_WARNING: f64 = 1e-6;

/// A probability vector over `K >= 2` arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates `probs` and re-normalizes it when the sum has drifted.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 arms, got {}",
                probs.len()
            )));
        }
        for (j, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("entry {j} is {p}")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        let drift = (sum - 1.0).abs();
        if drift > 1e-12 {
            if drift > DRIFT_WARNING {
                log::warn!("re-normalizing distribution with sum {sum}");
            }
            for p in &mut probs {
                *p /= sum;
            }
        }
        for p in &mut probs {
            *p = p.min(1.0);
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Parameter(format!("K must be at least 2, got {k}")));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    /// Point mass at `arm`; the distribution deterministic agents report.
    pub fn one_hot(k: usize, arm: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Parameter(format!("K must be at least 2, got {k}")));
        }
        if arm >= k {
            return Err(Error::OutOfRange {
                what: "arm",
                index: arm,
                limit: k,
            });
        }
        let mut probs = vec![0.0; k];
        probs[arm] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn arms(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_one_hot_at(&self, arm: usize) -> bool {
        self.probs
            .iter()
            .enumerate()
            .all(|(j, &p)| if j == arm { p == 1.0 } else { p == 0.0 })
    }

    /// Draws an arm by inverse CDF over exactly one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                cum += p;
                last_positive = j;
                if u < cum {
                    return j;
                }
            }
        }
        // u landed in the rounding gap above the final cumulative sum
        last_positive
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// `p_j ∝ exp(log_weights[j])`, evaluated after subtracting the maximum.
pub fn normalize_from_log_weights(log_weights: &[f64]) -> Result<Distribution> {
    if let Some(bad) = log_weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("non-finite log-weight {bad}")));
    }
    if log_weights.len() < 2 {
        return Err(Error::InvalidWeights(format!(
            "need at least 2 arms, got {}",
            log_weights.len()
        )));
    }
    let m = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_weights.iter().map(|w| (w - m).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Distribution::new(probs)
}

/// `(1 - eta) * d + eta / K`.
pub fn mix_with_uniform(d: &Distribution, eta: f64) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Parameter(format!("eta must lie in [0, 1], got {eta}")));
    }
    if eta == 0.0 {
        return Ok(d.clone());
    }
    let floor = eta / d.arms() as f64;
    let probs = d
        .probs
        .iter()
        .map(|&p| ((1.0 - eta) * p + floor).max(floor))
        .collect();
    Distribution::new(probs)
}

/// What a node learns about one neighbor at the end of a round.
#[derive(Debug, Clone, Copy)]
pub struct ObservationPacket<'a> {
    pub neighbor_id: usize,
    pub arm: usize,
    pub reward: f64,
    /// The distribution the neighbor sampled `arm` from this round.
    pub distribution: &'a Distribution,
}

impl<'a> ObservationPacket<'a> {
    pub fn new(
        neighbor_id: usize,
        arm: usize,
        reward: f64,
        distribution: &'a Distribution,
    ) -> Result<Self> {
        if arm >= distribution.arms() {
            return Err(Error::OutOfRange {
                what: "arm",
                index: arm,
                limit: distribution.arms(),
            });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::Parameter(format!("reward {reward} outside [0, 1]")));
        }
        if distribution.get(arm) <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "neighbor {neighbor_id} reported zero mass on its own arm {arm}"
            )));
        }
        Ok(Self {
            neighbor_id,
            arm,
            reward,
            distribution,
        })
    }
}

/// One round of a run, assembled from a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub arms: Vec<usize>,
    pub rewards: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Per-node per-arm count of neighbor selections through round `t`.
    pub n_prime: Vec<Vec<u64>>,
    pub distributions: Option<Vec<Distribution>>,
}

/// Which consumer a derived stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Policy,
    Reward,
    Tape,
    Verify,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Policy => 1,
            StreamKind::Reward => 2,
            StreamKind::Tape => 3,
            StreamKind::Verify => 4,
        }
    }
}

/// Master seed from which every substream is derived.
///
/// The substream for `(kind, replication, agent)` is a ChaCha8 stream keyed
/// by the master seed with a stream id hashed from the triple, so distinct
/// triples never share state and the same spec always replays the same run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn stream(&self, kind: StreamKind, replication: u64, agent: u64) -> Stream {
        let mut rng = Stream::seed_from_u64(self.master_seed);
        let id = splitmix64(splitmix64(splitmix64(kind.tag()) ^ replication) ^ agent);
        rng.set_stream(id);
        rng
    }

    pub fn policy_stream(&self, replication: u64, agent: usize) -> Stream {
        self.stream(StreamKind::Policy, replication, agent as u64)
    }

    pub fn reward_stream(&self, replication: u64, agent: usize) -> Stream {
        self.stream(StreamKind::Reward, replication, agent as u64)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identical_log_weights_give_uniform() {
        let d = normalize_from_log_weights(&[0.0, 0.0, 0.0]).unwrap();
        assert!(close(d.probs(), &[1.0 / 3.0; 3], 1e-15));
    }

    #[test]
    fn log_two_offset_gives_one_third_two_thirds() {
        for x in [-50.0, 0.0, 3.7, 700.0] {
            let d = normalize_from_log_weights(&[x, x + 2f64.ln()]).unwrap();
            assert!(close(d.probs(), &[1.0 / 3.0, 2.0 / 3.0], 1e-12));
        }
    }

    #[test]
    fn large_log_weights_do_not_overflow() {
        // 1/(1+e) evaluated to 20 digits independently: 0.26894142136999512075
        let d = normalize_from_log_weights(&[1000.0, 1001.0]).unwrap();
        assert!((d.get(0) - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!((d.get(1) - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn non_finite_log_weights_rejected() {
        assert!(matches!(
            normalize_from_log_weights(&[0.0, f64::NAN]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(normalize_from_log_weights(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn mixing_endpoints_and_affine_value() {
        let d = Distribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(mix_with_uniform(&d, 0.0).unwrap().probs(), &[1.0, 0.0]);
        assert_eq!(mix_with_uniform(&d, 1.0).unwrap().probs(), &[0.5, 0.5]);
        let d = Distribution::new(vec![0.9, 0.1]).unwrap();
        let m = mix_with_uniform(&d, 0.2).unwrap();
        // 0.8*0.9 + 0.1 = 0.82, 0.8*0.1 + 0.1 = 0.18
        assert!(close(m.probs(), &[0.82, 0.18], 1e-15));
    }

    #[test]
    fn mixing_rejects_out_of_range_eta() {
        let d = Distribution::uniform(3).unwrap();
        assert!(matches!(mix_with_uniform(&d, -0.1), Err(Error::Parameter(_))));
        assert!(mix_with_uniform(&d, 1.5).is_err());
    }

    #[test]
    fn construction_renormalizes_and_rejects() {
        let d = Distribution::new(vec![0.5, 0.5 + 1e-7]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Distribution::new(vec![1.0]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn point_mass_always_sampled() {
        let d = Distribution::one_hot(3, 2).unwrap();
        let mut rng = SeedSpec::new(9).policy_stream(0, 0);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 2));
    }

    #[test]
    fn uniform_frequencies_within_binomial_band() {
        // sd of a frequency at p = 1/4 over 1e6 draws is 4.33e-4; 3 sd < 0.005
        let d = Distribution::uniform(4).unwrap();
        let mut rng = SeedSpec::new(2024).policy_stream(0, 0);
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.005, "{counts:?}");
        }
    }

    #[test]
    fn sample_consumes_one_variate() {
        let d = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut a = SeedSpec::new(5).policy_stream(1, 1);
        let mut b = a.clone();
        d.sample(&mut a);
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn streams_replay_and_differ() {
        let s = SeedSpec::new(77);
        let draw = |mut r: Stream| (0..8).map(|_| r.gen::<u64>()).collect::<Vec<_>>();
        assert_eq!(draw(s.policy_stream(3, 4)), draw(s.policy_stream(3, 4)));
        assert_ne!(draw(s.policy_stream(3, 4)), draw(s.policy_stream(4, 3)));
        assert_ne!(draw(s.policy_stream(0, 0)), draw(s.reward_stream(0, 0)));
        assert_ne!(
            draw(s.policy_stream(0, 0)),
            draw(SeedSpec::new(78).policy_stream(0, 0))
        );
    }

    #[test]
    fn packet_requires_mass_on_reported_arm() {
        let d = Distribution::one_hot(3, 1).unwrap();
        assert!(ObservationPacket::new(0, 1, 0.5, &d).is_ok());
        assert!(ObservationPacket::new(0, 2, 0.5, &d).is_err());
        assert!(ObservationPacket::new(0, 1, 1.5, &d).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalization_is_shift_invariant(
                w in prop::collection::vec(-30.0f64..30.0, 2..12),
                c in -1e3f64..1e3,
            ) {
                let a = normalize_from_log_weights(&w).unwrap();
                let shifted: Vec<f64> = w.iter().map(|x| x + c).collect();
                let b = normalize_from_log_weights(&shifted).unwrap();
                for (x, y) in a.probs().iter().zip(b.probs()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }

            #[test]
            fn mixing_respects_floor(
                w in prop::collection::vec(0.0f64..1.0, 2..12),
                eta in 0.0f64..=1.0,
            ) {
                prop_assume!(w.iter().sum::<f64>() > 1e-6);
                let d = Distribution::new(w).unwrap();
                let m = mix_with_uniform(&d, eta).unwrap();
                let floor = eta / d.arms() as f64;
                prop_assert!(m.min() >= floor - 1e-15);
                prop_assert!((m.probs().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
            }
        }
    }
}
