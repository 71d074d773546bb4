//! Multi-agent bandits on a social network.
//!
//! Every node of a [`graph::Network`] runs a [`policy::Policy`] against a
//! shared bandit ([`env::Environment`]). After each round a node sees the
//! arm, reward and sampling distribution of each of its neighbors, and
//! nothing else. [`sim::run_episode`] drives the synchronous rounds and
//! records a [`sim::RunTrace`]; the [`analysis`] module evaluates regret
//! bounds against those traces and checks the supporting inequalities.

pub mod analysis;
pub mod dist;
pub mod env;
pub mod error;
pub mod graph;
pub mod policy;
pub mod sim;

pub use dist::{Distribution, ObservationPacket, RoundRecord, SeedSpec, Stream};
pub use error::{Error, Result};
