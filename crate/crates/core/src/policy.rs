use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Multi-user scheduling rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Largest weighted residual energy `r_i H̄_i`.
    ThroughputOriented,
    /// Largest normalized accumulated energy with a waiting-time deadline.
    FairnessOriented,
    /// Fixed cyclic order.
    RoundRobin,
    /// Uniform choice over all IoDs.
    RandomSelection,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::ThroughputOriented,
        PolicyKind::FairnessOriented,
        PolicyKind::RoundRobin,
        PolicyKind::RandomSelection,
    ];

    /// Whether a Markov-chain model exists for this policy.
    pub fn is_analyzable(self) -> bool {
        matches!(self, PolicyKind::ThroughputOriented | PolicyKind::FairnessOriented)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            PolicyKind::ThroughputOriented => "throughput",
            PolicyKind::FairnessOriented => "fairness",
            PolicyKind::RoundRobin => "rr",
            PolicyKind::RandomSelection => "rs",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "throughput" | "to" | "throughput-oriented" => Ok(PolicyKind::ThroughputOriented),
            "fairness" | "fo" | "fairness-oriented" => Ok(PolicyKind::FairnessOriented),
            "rr" | "round-robin" => Ok(PolicyKind::RoundRobin),
            "rs" | "random" | "random-selection" => Ok(PolicyKind::RandomSelection),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}
