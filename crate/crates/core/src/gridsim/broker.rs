//! Replica placement and the resource broker.
//!
//! Placement stages shard replicas onto node storage before any job
//! runs. The broker picks an execution node for one job given the
//! current node states; it prefers replica-holding nodes strictly, and
//! only when no holder is eligible does it fall back to a node that must
//! first fetch the shard over the network.

use std::collections::BTreeMap;

use num_rational::BigRational;

use super::{Grid, GridError, Job, NodeId, ReplicaPlacement, SimTime};
use crate::corpus::Shard;

/// Broker-visible view of one node at a scheduling instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub up: bool,
    /// When the node's work queue drains; never in the past at the
    /// instant of the scheduling pass.
    pub busy_until: SimTime,
}

/// Broker verdict: where the job runs and whether the shard must be
/// transferred there first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub node_id: NodeId,
    pub transfer: bool,
}

/// Why the broker returned no node. `NoEligibleNode` is not final: a
/// node coming back up can make the job schedulable later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrokerDenial {
    NoEligibleNode,
}

/// Stage `replication` replicas of every shard onto node storage.
///
/// Shards are placed in input order. Each replica goes to the node with
/// the most remaining storage (ties by node id ascending) among nodes
/// that are up at time zero, have room for the shard's serialized bytes,
/// and do not already hold a replica of it. The first shard that cannot
/// reach the requested replica count aborts placement.
pub fn place_replicas(
    shards: &[Shard],
    grid: &Grid,
    replication: usize,
) -> Result<ReplicaPlacement, GridError> {
    if replication == 0 {
        return Err(GridError::ZeroReplication);
    }
    let down_at_zero: Vec<&str> = grid
        .failures
        .iter()
        .filter(|f| f.t_down == BigRational::from_integer(0.into()))
        .map(|f| f.node.as_str())
        .collect();
    let mut free: BTreeMap<&str, u64> = grid
        .nodes
        .values()
        .filter(|n| !down_at_zero.contains(&n.node_id.as_str()))
        .map(|n| (n.node_id.as_str(), n.storage))
        .collect();
    let mut placement = ReplicaPlacement::new();
    for shard in shards {
        let mut holders: Vec<NodeId> = Vec::new();
        for _ in 0..replication {
            let pick = free
                .iter()
                .filter(|(id, room)| {
                    **room >= shard.byte_size() && !holders.iter().any(|h| h == **id)
                })
                // most free storage first, node id breaks ties
                .max_by(|(a_id, a_room), (b_id, b_room)| {
                    a_room.cmp(b_room).then_with(|| b_id.cmp(a_id))
                })
                .map(|(id, _)| id.to_string());
            match pick {
                Some(id) => {
                    *free.get_mut(id.as_str()).expect("picked from map") -= shard.byte_size();
                    holders.push(id);
                }
                None => {
                    return Err(GridError::Placement {
                        shard_id: shard.shard_id().to_string(),
                        placed: holders.len(),
                        wanted: replication,
                    });
                }
            }
        }
        placement.insert(shard.shard_id(), holders);
    }
    Ok(placement)
}

/// Choose the node a job runs on.
///
/// Eligible nodes are up and serve the job's organization. Replica
/// locality is strict: while any eligible node holds the shard, nodes
/// without it are not considered. Within a group the earliest-available
/// node wins (`busy_until` ascending), faster nodes break ties (power
/// descending), node id breaks the rest. A non-local selection carries
/// `transfer: true`; the caller charges the shard transfer to the job.
pub fn broker_select(
    grid: &Grid,
    states: &BTreeMap<NodeId, NodeState>,
    job: &Job,
    placement: &ReplicaPlacement,
) -> Result<Selection, BrokerDenial> {
    let eligible = |local: bool| {
        grid.nodes
            .values()
            .filter(move |node| {
                let state = &states[&node.node_id];
                state.up
                    && node.vos.contains(&job.vo)
                    && placement.holds(&node.node_id, &job.shard_id) == local
            })
            .min_by(|a, b| {
                let sa = &states[&a.node_id];
                let sb = &states[&b.node_id];
                sa.busy_until
                    .cmp(&sb.busy_until)
                    .then_with(|| b.power.cmp(&a.power))
                    .then_with(|| a.node_id.cmp(&b.node_id))
            })
    };
    if let Some(node) = eligible(true) {
        return Ok(Selection {
            node_id: node.node_id.clone(),
            transfer: false,
        });
    }
    if let Some(node) = eligible(false) {
        return Ok(Selection {
            node_id: node.node_id.clone(),
            transfer: true,
        });
    }
    Err(BrokerDenial::NoEligibleNode)
}
