//! Plain-text grid description.
//!
//! ```text
//! # comment
//! vo bio members=ada,grace
//! vo open
//! node n0 power=3 storage=1048576 vos=bio,open
//! node n1 power=5/2 storage=1048576 vos=bio
//! bandwidth 1024
//! fail n1 10 25
//! ```
//!
//! `power` and `bandwidth` are rationals (`p` or `p/q`) in tokens and
//! bytes per time unit; `fail` declares an outage over `[t_down, t_up)`.
//! Omitting `bandwidth` leaves the default of 1 byte per time unit.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{FailureEvent, Grid, GridError, NodeSpec, SimTime, VirtualOrg};

fn err(line: usize, msg: impl Into<String>) -> GridError {
    GridError::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    match text.split_once('/') {
        Some((numer, denom)) => {
            let numer: BigInt = numer.parse().ok()?;
            let denom: BigInt = denom.parse().ok()?;
            if denom.is_zero() {
                return None;
            }
            Some(BigRational::new(numer, denom))
        }
        None => {
            let numer: BigInt = text.parse().ok()?;
            Some(BigRational::from_integer(numer))
        }
    }
}

fn parse_list(text: &str) -> BTreeSet<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parse a grid config. Node lines may reference only organizations
/// declared above them; failure intervals for one node must not overlap.
pub fn parse_grid_config(text: &str) -> Result<Grid, GridError> {
    let mut vos: BTreeMap<String, VirtualOrg> = BTreeMap::new();
    let mut nodes: BTreeMap<String, NodeSpec> = BTreeMap::new();
    let mut bandwidth: Option<BigRational> = None;
    let mut failures: Vec<FailureEvent> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = trimmed.split_whitespace();
        let keyword = words.next().expect("non-blank line");
        let rest: Vec<&str> = words.collect();
        match keyword {
            "vo" => {
                let name = rest
                    .first()
                    .ok_or_else(|| err(line, "vo needs a name"))?
                    .to_string();
                let mut members = BTreeSet::new();
                for field in &rest[1..] {
                    match field.split_once('=') {
                        Some(("members", list)) => members = parse_list(list),
                        _ => return Err(err(line, format!("unrecognized vo field {field:?}"))),
                    }
                }
                if vos
                    .insert(
                        name.clone(),
                        VirtualOrg {
                            name: name.clone(),
                            members,
                        },
                    )
                    .is_some()
                {
                    return Err(err(line, format!("duplicate vo {name:?}")));
                }
            }
            "node" => {
                let node_id = rest
                    .first()
                    .ok_or_else(|| err(line, "node needs an id"))?
                    .to_string();
                let mut power: Option<BigRational> = None;
                let mut storage: Option<u64> = None;
                let mut node_vos: Option<BTreeSet<String>> = None;
                for field in &rest[1..] {
                    let (key, value) = field
                        .split_once('=')
                        .ok_or_else(|| err(line, format!("expected key=value, got {field:?}")))?;
                    match key {
                        "power" => {
                            let p = parse_rational(value)
                                .ok_or_else(|| err(line, format!("bad power {value:?}")))?;
                            if p <= BigRational::zero() {
                                return Err(err(line, "power must be positive"));
                            }
                            power = Some(p);
                        }
                        "storage" => {
                            storage = Some(value.parse().map_err(|_| {
                                err(line, format!("bad storage {value:?}"))
                            })?);
                        }
                        "vos" => {
                            let list = parse_list(value);
                            if list.is_empty() {
                                return Err(err(line, "node must serve at least one vo"));
                            }
                            for vo in &list {
                                if !vos.contains_key(vo) {
                                    return Err(err(line, format!("unknown vo {vo:?}")));
                                }
                            }
                            node_vos = Some(list);
                        }
                        other => {
                            return Err(err(line, format!("unrecognized node field {other:?}")))
                        }
                    }
                }
                let spec = NodeSpec {
                    node_id: node_id.clone(),
                    power: power.ok_or_else(|| err(line, "node needs power="))?,
                    storage: storage.ok_or_else(|| err(line, "node needs storage="))?,
                    vos: node_vos.ok_or_else(|| err(line, "node needs vos="))?,
                };
                if nodes.insert(node_id.clone(), spec).is_some() {
                    return Err(err(line, format!("duplicate node {node_id:?}")));
                }
            }
            "bandwidth" => {
                let value = rest
                    .first()
                    .ok_or_else(|| err(line, "bandwidth needs a rate"))?;
                let rate = parse_rational(value)
                    .ok_or_else(|| err(line, format!("bad bandwidth {value:?}")))?;
                if rate <= BigRational::zero() {
                    return Err(err(line, "bandwidth must be positive"));
                }
                if bandwidth.replace(rate).is_some() {
                    return Err(err(line, "bandwidth declared twice"));
                }
            }
            "fail" => {
                let [node, t_down, t_up] = rest.as_slice() else {
                    return Err(err(line, "fail needs: fail <node> <t_down> <t_up>"));
                };
                if !nodes.contains_key(*node) {
                    return Err(err(line, format!("unknown node {node:?}")));
                }
                let t_down: SimTime = parse_rational(t_down)
                    .ok_or_else(|| err(line, format!("bad time {t_down:?}")))?;
                let t_up: SimTime = parse_rational(t_up)
                    .ok_or_else(|| err(line, format!("bad time {t_up:?}")))?;
                if t_down < BigRational::zero() || t_down >= t_up {
                    return Err(err(line, "fail requires 0 <= t_down < t_up"));
                }
                failures.push(FailureEvent {
                    node: node.to_string(),
                    t_down,
                    t_up,
                });
            }
            other => return Err(err(line, format!("unrecognized directive {other:?}"))),
        }
    }

    for (i, a) in failures.iter().enumerate() {
        for b in failures.iter().skip(i + 1) {
            if a.node == b.node && a.t_down < b.t_up && b.t_down < a.t_up {
                return Err(GridError::Config {
                    line: 0,
                    msg: format!("overlapping failure intervals for node {:?}", a.node),
                });
            }
        }
    }

    Ok(Grid {
        vos,
        nodes,
        bandwidth: bandwidth.unwrap_or_else(|| BigRational::from_integer(BigInt::from(1))),
        failures,
    })
}
