//! Experiment configuration: one TOML file per experiment.
//!
//! ```toml
//! schema_version = 1
//! horizon = 20000
//! master_seed = 2024
//! replications = 20
//!
//! [env]
//! type = "adversarial"
//! arms = 10
//!
//! [network]
//! topology = "complete"
//! nodes = 5
//!
//! [agents]
//! policy = { kind = "expn_adaptive" }
//!
//! [[variant]]
//! name = "exp3"
//! network = { topology = "single" }
//! agents = { policy = { kind = "exp3" } }
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use netbandit::env::{AdversarialTape, Environment, StochasticSpec};
use netbandit::graph::Network;
use netbandit::policy::PolicySpec;
use netbandit::sim::{centralized_policies, CheckpointMode, EnvSource, EpisodeTemplate};
use netbandit::SeedSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPLICATIONS: usize = 50;
pub const DEFAULT_RUN_NAME: &str = "main";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub horizon: usize,
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Explicit replication indices; overrides `replications`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub checkpoint: CheckpointMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub env: EnvConfig,
    pub network: NetworkConfig,
    pub agents: AgentsConfig,
    #[serde(default, rename = "variant", skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantConfig>,
}

fn default_name() -> String {
    DEFAULT_RUN_NAME.into()
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_good_mean() -> f64 {
    0.7
}

fn default_other_mean() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    /// Bernoulli arms: explicit `means`, or one good arm among equals.
    Stochastic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        means: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<usize>,
        #[serde(default)]
        good_arm: usize,
        #[serde(default = "default_good_mean")]
        good_mean: f64,
        #[serde(default = "default_other_mean")]
        other_mean: f64,
    },
    /// A frozen reward tape: read from `tape`, or drawn per replication.
    Adversarial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tape: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<usize>,
        #[serde(default)]
        good_arm: usize,
        #[serde(default = "default_good_mean")]
        good_mean: f64,
        #[serde(default = "default_other_mean")]
        other_mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkConfig {
    Single,
    Complete { nodes: usize },
    Cycle { nodes: usize },
    Star { nodes: usize },
    Regular { nodes: usize, degree: usize, seed: u64 },
    EdgeList { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// Policy for every node not overridden (the leader, when centralized).
    pub policy: PolicySpec,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub centralized: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<NodeOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeOverride {
    pub node: usize,
    pub policy: PolicySpec,
}

/// Another arm of the same experiment: same bandit and seeds, its own
/// agents and optionally its own network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    pub agents: AgentsConfig,
}

/// A runnable piece of the experiment.
#[derive(Debug, Clone)]
pub struct Run {
    pub name: String,
    pub template: EpisodeTemplate,
    /// Node → policy label, for grouping curves.
    pub labels: Vec<&'static str>,
    pub centralized: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// The experiment itself, without where its results go.
    pub fn canonical(&self) -> Self {
        Self {
            output: None,
            ..self.clone()
        }
    }

    /// Short digest of the canonical serialization; names the output directory.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().to_toml().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn replication_indices(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.replications as u64).collect(),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let EnvConfig::Adversarial { tape: Some(p), .. } = &mut self.env {
            fix(p);
        }
        if let NetworkConfig::EdgeList { path } = &mut self.network {
            fix(path);
        }
        for v in &mut self.variants {
            if let Some(NetworkConfig::EdgeList { path }) = &mut v.network {
                fix(path);
            }
        }
    }

    /// Checks that need no file access.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.horizon == 0 {
            return bad("horizon", "must be at least 1".into());
        }
        if self.replication_indices().is_empty() {
            return bad("replications", "need at least one replication".into());
        }
        let mut names = vec![self.name.as_str()];
        for v in &self.variants {
            if names.contains(&v.name.as_str()) {
                return bad("variant.name", format!("duplicate run name {:?}", v.name));
            }
            names.push(&v.name);
        }
        for n in names {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
                return bad("name", format!("{n:?} must be non-empty [A-Za-z0-9_.-]"));
            }
        }
        match &self.env {
            EnvConfig::Stochastic { means: Some(_), arms: Some(_), .. } => {
                bad("env", "give either means or arms, not both".into())
            }
            EnvConfig::Stochastic { means: None, arms: None, .. } => bad("env", "needs means or arms".into()),
            EnvConfig::Adversarial { tape: Some(_), arms: Some(_), .. } => {
                bad("env", "give either tape or arms, not both".into())
            }
            EnvConfig::Adversarial { tape: None, arms: None, .. } => bad("env", "needs tape or arms".into()),
            _ => Ok(()),
        }
    }

    pub fn env_source(&self) -> Result<EnvSource, CliError> {
        let field = |e: netbandit::Error| CliError::Config(format!("env: {e}"));
        Ok(match &self.env {
            EnvConfig::Stochastic {
                means,
                arms,
                good_arm,
                good_mean,
                other_mean,
            } => {
                let spec = match (means, arms) {
                    (Some(m), _) => StochasticSpec::new(m.clone()),
                    (None, Some(k)) => StochasticSpec::minimax(*k, *good_arm, *good_mean, *other_mean),
                    (None, None) => unreachable!("checked in validate"),
                }
                .map_err(field)?;
                EnvSource::Fixed(Environment::Stochastic(spec))
            }
            EnvConfig::Adversarial {
                tape,
                arms,
                good_arm,
                good_mean,
                other_mean,
            } => match (tape, arms) {
                (Some(path), _) => {
                    let file = fs::File::open(path)
                        .map_err(|e| CliError::Config(format!("env.tape: cannot open {}: {e}", path.display())))?;
                    let tape = AdversarialTape::read_from(std::io::BufReader::new(file)).map_err(field)?;
                    if tape.horizon() < self.horizon {
                        return Err(CliError::Config(format!(
                            "env.tape: {} rounds, horizon is {}",
                            tape.horizon(),
                            self.horizon
                        )));
                    }
                    EnvSource::Fixed(Environment::Adversarial(Arc::new(tape)))
                }
                (None, Some(k)) => {
                    // Validate the means once up front.
                    StochasticSpec::minimax(*k, *good_arm, *good_mean, *other_mean).map_err(field)?;
                    EnvSource::MinimaxTape {
                        arms: *k,
                        good_arm: *good_arm,
                        good_mean: *good_mean,
                        other_mean: *other_mean,
                    }
                }
                (None, None) => unreachable!("checked in validate"),
            },
        })
    }

    /// The main run followed by every variant.
    pub fn runs(&self) -> Result<Vec<Run>, CliError> {
        let env = self.env_source()?;
        let mut out = Vec::with_capacity(1 + self.variants.len());
        let mut push = |name: &str, net_cfg: &NetworkConfig, agents: &AgentsConfig, field: &str| {
            let network = net_cfg.build().map_err(|e| CliError::Config(format!("{field}network: {e}")))?;
            let policies = agents.policies(&network, field)?;
            for (v, p) in policies.iter().enumerate() {
                p.build(env.arms(), self.horizon)
                    .map_err(|e| CliError::Config(format!("{field}agents (node {v}): {e}")))?;
            }
            out.push(Run {
                name: name.into(),
                labels: policies.iter().map(PolicySpec::label).collect(),
                centralized: agents.centralized,
                template: EpisodeTemplate {
                    env: env.clone(),
                    network,
                    policies,
                    horizon: self.horizon,
                    seeds: SeedSpec::new(self.master_seed),
                    record_distributions: false,
                },
            });
            Ok::<(), CliError>(())
        };
        push(&self.name, &self.network, &self.agents, "")?;
        for (i, v) in self.variants.iter().enumerate() {
            let field = format!("variant[{i}].");
            push(&v.name, v.network.as_ref().unwrap_or(&self.network), &v.agents, &field)?;
        }
        Ok(out)
    }
}

impl NetworkConfig {
    pub fn build(&self) -> netbandit::Result<Network> {
        match self {
            NetworkConfig::Single => Ok(Network::single()),
            NetworkConfig::Complete { nodes } => Network::complete(*nodes),
            NetworkConfig::Cycle { nodes } => Network::cycle(*nodes),
            NetworkConfig::Star { nodes } => Network::star(*nodes),
            NetworkConfig::Regular { nodes, degree, seed } => Network::regular_random(*nodes, *degree, *seed),
            NetworkConfig::EdgeList { path } => {
                let file = fs::File::open(path)?;
                Network::from_edge_list(std::io::BufReader::new(file))
            }
        }
    }

    /// Same topology on `nodes` nodes, where that makes sense.
    pub fn with_nodes(&self, nodes: usize) -> Option<Self> {
        Some(match self {
            NetworkConfig::Complete { .. } => NetworkConfig::Complete { nodes },
            NetworkConfig::Cycle { .. } => NetworkConfig::Cycle { nodes },
            NetworkConfig::Star { .. } => NetworkConfig::Star { nodes },
            NetworkConfig::Regular { degree, seed, .. } => NetworkConfig::Regular {
                nodes,
                degree: *degree,
                seed: *seed,
            },
            NetworkConfig::Single | NetworkConfig::EdgeList { .. } => return None,
        })
    }
}

impl AgentsConfig {
    pub fn policies(&self, network: &Network, field: &str) -> Result<Vec<PolicySpec>, CliError> {
        let n = network.nodes();
        let mut policies = if self.centralized {
            centralized_policies(network, self.policy.clone())
                .map_err(|e| CliError::Config(format!("{field}agents.centralized: {e}")))?
        } else {
            vec![self.policy.clone(); n]
        };
        for (i, o) in self.overrides.iter().enumerate() {
            if o.node >= n {
                return Err(CliError::Config(format!(
                    "{field}agents.overrides[{i}].node: node {} does not exist (network has {n})",
                    o.node
                )));
            }
            policies[o.node] = o.policy.clone();
        }
        for (v, p) in policies.iter().enumerate() {
            if let PolicySpec::CopyFollower { parent } = p {
                if !network.neighbors(v).contains(parent) {
                    return Err(CliError::Config(format!(
                        "{field}agents: node {v} copies {parent}, which is not a neighbor"
                    )));
                }
            }
        }
        Ok(policies)
    }
}
