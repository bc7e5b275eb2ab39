//! Simulated computational grid: virtual organizations, nodes with
//! rational processing power, replica placement, a locality-aware
//! resource broker, and a deterministic discrete-event simulation that
//! schedules extraction jobs, injects node failures and reruns work that
//! a failed node took down with it.
//!
//! Time is exact rational arithmetic throughout, so makespans can be
//! compared with `==` rather than tolerances. All scheduling decisions,
//! tie-breaks and event orderings are total, which makes a run a pure
//! function of (jobs, grid, placement, failure plan, seed).

mod broker;
mod config;
mod exec;
mod parallel;
mod sim;

pub use broker::{broker_select, place_replicas, BrokerDenial, NodeState, Selection};
pub use config::parse_grid_config;
pub use exec::{
    execute_job, run_extractor, run_once, ExecutionContext, Extractor, OpExtractor,
    RegulationViolation, SentenceStream,
};
pub use parallel::run_parallel;
pub use sim::{
    events_tsv, jobs_tsv, random_failure_plan, run_simulation, run_simulation_with, EventKind,
    EventRecord, JobRecord, JobStatus, SimReport,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::patterns::{MatchSpan, PairMode, PairTable, PatternRule};

/// Simulated clock value. Exact rational arithmetic: no rounding, no
/// tolerance comparisons.
pub type SimTime = BigRational;

/// SimTime from an integer number of time units.
pub fn sim_time(units: i64) -> SimTime {
    BigRational::from_integer(BigInt::from(units))
}

/// SimTime from a ratio of integers.
pub fn sim_ratio(numer: i64, denom: i64) -> SimTime {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub type NodeId = String;

/// A named group of users that jobs run under. An empty member set means
/// the organization is open to any user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualOrg {
    pub name: String,
    pub members: BTreeSet<String>,
}

impl VirtualOrg {
    pub fn admits(&self, user: &str) -> bool {
        self.members.is_empty() || self.members.contains(user)
    }
}

/// A grid node: processing power in tokens per time unit, storage for
/// replicas in bytes, and the organizations it serves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub node_id: NodeId,
    pub power: BigRational,
    pub storage: u64,
    pub vos: BTreeSet<String>,
}

/// A planned outage: the node is unavailable during `[t_down, t_up)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureEvent {
    pub node: NodeId,
    pub t_down: SimTime,
    pub t_up: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub vos: BTreeMap<String, VirtualOrg>,
    pub nodes: BTreeMap<NodeId, NodeSpec>,
    /// Replica transfer rate in bytes per time unit.
    pub bandwidth: BigRational,
    pub failures: Vec<FailureEvent>,
}

impl Grid {
    /// Whether `cert` grants access for a job submitted to `vo`.
    pub fn authorize(&self, cert: &Certificate, vo: &str) -> bool {
        cert.valid
            && cert.vo == vo
            && self
                .vos
                .get(vo)
                .is_some_and(|org| org.admits(&cert.user))
    }
}

/// Proof of identity a submission carries. Invalid or mismatched
/// certificates fail jobs with `ACCESS_DENIED` before any scheduling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub user: String,
    pub vo: String,
    pub valid: bool,
}

/// What a job computes over its shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractionOp {
    Pairs(PairMode),
    Pattern(PatternRule),
}

impl fmt::Display for ExtractionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionOp::Pairs(mode) => write!(f, "pairs:{mode}"),
            ExtractionOp::Pattern(rule) => write!(f, "pattern:{rule}"),
        }
    }
}

/// One unit of grid work: run `op` over the shard named `shard_id` on
/// behalf of `vo`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub job_id: String,
    pub shard_id: String,
    pub vo: String,
    pub op: ExtractionOp,
}

/// The single artifact a job emits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobOutput {
    Pairs(PairTable),
    Matches(Vec<MatchSpan>),
}

/// Where each shard's replicas live, in placement order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReplicaPlacement {
    replicas: BTreeMap<String, Vec<NodeId>>,
}

impl ReplicaPlacement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, shard_id: impl Into<String>, nodes: Vec<NodeId>) {
        self.replicas.insert(shard_id.into(), nodes);
    }

    pub fn nodes_for(&self, shard_id: &str) -> &[NodeId] {
        self.replicas
            .get(shard_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn holds(&self, node_id: &str, shard_id: &str) -> bool {
        self.nodes_for(shard_id).iter().any(|n| n == node_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[NodeId])> {
        self.replicas.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("replication factor must be at least 1")]
    ZeroReplication,
    #[error(
        "shard {shard_id}: only {placed} of {wanted} replicas placeable (insufficient node storage or nodes)"
    )]
    Placement {
        shard_id: String,
        placed: usize,
        wanted: usize,
    },
    #[error("job {job_id}: unknown shard {shard_id}")]
    UnknownShard { job_id: String, shard_id: String },
    #[error("duplicate job id {job_id}")]
    DuplicateJobId { job_id: String },
    #[error(transparent)]
    Regulation(#[from] exec::RegulationViolation),
}
