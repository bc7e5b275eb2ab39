//! Deterministic discrete-event simulation of one grid run.
//!
//! Scheduling is eager greedy list scheduling: a pass walks the pending
//! jobs in submission order and asks the broker for a node; the job is
//! queued there immediately with a precomputed start and end, and the
//! node's availability horizon advances. Passes run at time zero and
//! whenever a node changes state. A node going down aborts everything in
//! its queue (the running job counts a retry, merely queued ones do
//! not), and the orphaned jobs are rescheduled at once.
//!
//! Determinism: simultaneous events process completions first, then
//! outages, then recoveries, and equal (time, class) pairs in insertion
//! order. Aborted assignments leave stale completion events in the heap;
//! a per-job generation counter voids them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    broker_select, run_once, Certificate, ExecutionContext, Extractor, FailureEvent, Grid,
    GridError, Job, JobOutput, NodeId, NodeState, OpExtractor, RegulationViolation,
    ReplicaPlacement, SimTime,
};
use crate::corpus::Shard;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Assign,
    Complete,
    Abort,
    Requeue,
    Down,
    Up,
    NoResource,
    AccessDenied,
    RegulationViolation,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Assign => "ASSIGN",
            EventKind::Complete => "COMPLETE",
            EventKind::Abort => "ABORT",
            EventKind::Requeue => "REQUEUE",
            EventKind::Down => "DOWN",
            EventKind::Up => "UP",
            EventKind::NoResource => "NO_RESOURCE",
            EventKind::AccessDenied => "ACCESS_DENIED",
            EventKind::RegulationViolation => "REGULATION_VIOLATION",
        }
    }
}

/// One line of the simulation log, in processing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
    pub details: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Completed,
    NoResource,
    AccessDenied,
    RegulationViolation,
}

impl JobStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            JobStatus::Completed => "COMPLETED",
            JobStatus::NoResource => "NO_RESOURCE",
            JobStatus::AccessDenied => "ACCESS_DENIED",
            JobStatus::RegulationViolation => "REGULATION_VIOLATION",
        }
    }
}

/// Final accounting for one job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobRecord {
    pub job_id: String,
    pub shard_id: String,
    pub status: JobStatus,
    pub node: Option<NodeId>,
    pub start: Option<SimTime>,
    pub end: Option<SimTime>,
    pub retries: u64,
    pub transferred: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    /// Latest completion time over all completed jobs; zero when none
    /// completed.
    pub makespan: SimTime,
    pub events: Vec<EventRecord>,
    /// One record per submitted job, in submission order.
    pub jobs: Vec<JobRecord>,
    pub total_retries: u64,
    pub violations: u64,
}

impl SimReport {
    pub fn all_completed(&self) -> bool {
        self.jobs.iter().all(|j| j.status == JobStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    Completion {
        node: NodeId,
        job_index: usize,
        generation: u64,
    },
    Down {
        node: NodeId,
    },
    Up {
        node: NodeId,
    },
}

const PRIO_COMPLETION: u8 = 0;
const PRIO_DOWN: u8 = 1;
const PRIO_UP: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
struct QueuedEvent {
    time: SimTime,
    prio: u8,
    seq: u64,
    payload: Payload,
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse so the earliest event pops first
        other
            .time
            .cmp(&self.time)
            .then_with(|| other.prio.cmp(&self.prio))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct ScheduledEntry {
    job_index: usize,
    start: SimTime,
}

#[derive(Debug, Clone)]
struct SimNode {
    up: bool,
    busy_until: SimTime,
    queue: VecDeque<ScheduledEntry>,
}

#[derive(Debug, Clone)]
struct SimJob {
    pending: bool,
    generation: u64,
    retries: u64,
    status: Option<JobStatus>,
    node: Option<NodeId>,
    start: Option<SimTime>,
    end: Option<SimTime>,
    transferred: bool,
}

/// The job body used for every job of a normal run: the declared
/// extraction operation under regulation enforcement.
pub fn standard_runner(
    job: &Job,
    ctx: &mut ExecutionContext<'_>,
) -> Result<(), RegulationViolation> {
    OpExtractor(&job.op).run(ctx)
}

/// Simulate a run with the standard extraction for every job.
///
/// Returns the report plus the outputs of completed jobs in submission
/// order. Failed jobs (denied, starved or in violation) appear in the
/// report, not as an error.
pub fn run_simulation(
    jobs: &[Job],
    grid: &Grid,
    placement: &ReplicaPlacement,
    shards: &BTreeMap<String, Shard>,
    cert: &Certificate,
) -> Result<(SimReport, Vec<(String, JobOutput)>), GridError> {
    run_simulation_with(jobs, grid, placement, shards, cert, &mut standard_runner)
}

/// [`run_simulation`] with a caller-supplied job body, letting tests run
/// non-standard extractors under the same scheduler and enforcement.
pub fn run_simulation_with(
    jobs: &[Job],
    grid: &Grid,
    placement: &ReplicaPlacement,
    shards: &BTreeMap<String, Shard>,
    cert: &Certificate,
    runner: &mut dyn FnMut(&Job, &mut ExecutionContext<'_>) -> Result<(), RegulationViolation>,
) -> Result<(SimReport, Vec<(String, JobOutput)>), GridError> {
    for job in jobs {
        if !shards.contains_key(&job.shard_id) {
            return Err(GridError::UnknownShard {
                job_id: job.job_id.clone(),
                shard_id: job.shard_id.clone(),
            });
        }
    }
    {
        let mut seen = std::collections::BTreeSet::new();
        for job in jobs {
            if !seen.insert(job.job_id.as_str()) {
                return Err(GridError::DuplicateJobId {
                    job_id: job.job_id.clone(),
                });
            }
        }
    }

    let mut nodes: BTreeMap<NodeId, SimNode> = grid
        .nodes
        .keys()
        .map(|id| {
            (
                id.clone(),
                SimNode {
                    up: true,
                    busy_until: BigRational::zero(),
                    queue: VecDeque::new(),
                },
            )
        })
        .collect();
    let mut sim_jobs: Vec<SimJob> = jobs
        .iter()
        .map(|_| SimJob {
            pending: true,
            generation: 0,
            retries: 0,
            status: None,
            node: None,
            start: None,
            end: None,
            transferred: false,
        })
        .collect();

    fn push_event(
        heap: &mut BinaryHeap<QueuedEvent>,
        heap_seq: &mut u64,
        time: SimTime,
        prio: u8,
        payload: Payload,
    ) {
        heap.push(QueuedEvent {
            time,
            prio,
            seq: *heap_seq,
            payload,
        });
        *heap_seq += 1;
    }

    fn record(log: &mut Vec<EventRecord>, time: &SimTime, kind: EventKind, details: String) {
        let seq = log.len() as u64;
        log.push(EventRecord {
            time: time.clone(),
            seq,
            kind,
            details,
        });
    }

    let mut heap: BinaryHeap<QueuedEvent> = BinaryHeap::new();
    let mut heap_seq: u64 = 0;

    for failure in &grid.failures {
        push_event(
            &mut heap,
            &mut heap_seq,
            failure.t_down.clone(),
            PRIO_DOWN,
            Payload::Down {
                node: failure.node.clone(),
            },
        );
        push_event(
            &mut heap,
            &mut heap_seq,
            failure.t_up.clone(),
            PRIO_UP,
            Payload::Up {
                node: failure.node.clone(),
            },
        );
    }

    let mut log: Vec<EventRecord> = Vec::new();
    let zero = BigRational::zero();
    // access control happens once, before any scheduling
    for (i, job) in jobs.iter().enumerate() {
        if !grid.authorize(cert, &job.vo) {
            sim_jobs[i].pending = false;
            sim_jobs[i].status = Some(JobStatus::AccessDenied);
            record(
                &mut log,
                &zero,
                EventKind::AccessDenied,
                format!("job={} user={} vo={}", job.job_id, cert.user, job.vo),
            );
        }
    }

    let schedule_pass = |now: &SimTime,
                         nodes: &mut BTreeMap<NodeId, SimNode>,
                         sim_jobs: &mut Vec<SimJob>,
                         heap: &mut BinaryHeap<QueuedEvent>,
                         heap_seq: &mut u64,
                         log: &mut Vec<EventRecord>| {
        // the broker sees availability clamped to the present: an idle
        // node is available now, not at its last completion time
        let mut states: BTreeMap<NodeId, NodeState> = nodes
            .iter()
            .map(|(id, n)| {
                (
                    id.clone(),
                    NodeState {
                        up: n.up,
                        busy_until: n.busy_until.clone().max(now.clone()),
                    },
                )
            })
            .collect();
        for (i, job) in jobs.iter().enumerate() {
            if !sim_jobs[i].pending {
                continue;
            }
            let Ok(selection) = broker_select(grid, &states, job, placement) else {
                continue;
            };
            let shard = &shards[&job.shard_id];
            let node_spec = &grid.nodes[&selection.node_id];
            let mut duration =
                BigRational::from_integer(shard.token_count().into()) / node_spec.power.clone();
            if selection.transfer {
                duration += BigRational::from_integer(shard.byte_size().into())
                    / grid.bandwidth.clone();
            }
            let state = states.get_mut(&selection.node_id).expect("known node");
            let start = state.busy_until.clone();
            let end = start.clone() + duration;
            state.busy_until = end.clone();
            let sim_node = nodes.get_mut(&selection.node_id).expect("known node");
            sim_node.busy_until = end.clone();
            sim_node.queue.push_back(ScheduledEntry {
                job_index: i,
                start: start.clone(),
            });
            heap.push(QueuedEvent {
                time: end.clone(),
                prio: PRIO_COMPLETION,
                seq: *heap_seq,
                payload: Payload::Completion {
                    node: selection.node_id.clone(),
                    job_index: i,
                    generation: sim_jobs[i].generation,
                },
            });
            *heap_seq += 1;
            sim_jobs[i].pending = false;
            sim_jobs[i].node = Some(selection.node_id.clone());
            sim_jobs[i].start = Some(start.clone());
            sim_jobs[i].end = Some(end.clone());
            sim_jobs[i].transferred = selection.transfer;
            record(
                log,
                now,
                EventKind::Assign,
                format!(
                    "job={} node={} start={} end={} transfer={}",
                    job.job_id, selection.node_id, start, end, selection.transfer
                ),
            );
        }
    };

    schedule_pass(&zero, &mut nodes, &mut sim_jobs, &mut heap, &mut heap_seq, &mut log);

    let mut outputs: Vec<Option<JobOutput>> = jobs.iter().map(|_| None).collect();
    let mut makespan = BigRational::zero();
    let mut violations: u64 = 0;
    let mut last_time = BigRational::zero();

    while let Some(event) = heap.pop() {
        let now = event.time.clone();
        if now > last_time {
            last_time = now.clone();
        }
        match event.payload {
            Payload::Completion {
                node,
                job_index,
                generation,
            } => {
                if sim_jobs[job_index].generation != generation {
                    // assignment was aborted after this event was queued
                    continue;
                }
                let sim_node = nodes.get_mut(&node).expect("known node");
                let pos = sim_node
                    .queue
                    .iter()
                    .position(|e| e.job_index == job_index)
                    .expect("completing job sits in its node queue");
                sim_node.queue.remove(pos);
                let job = &jobs[job_index];
                let shard = &shards[&job.shard_id];
                let result = run_once(&job.job_id, shard, |ctx| runner(job, ctx));
                match result {
                    Ok(output) => {
                        outputs[job_index] = Some(output);
                        sim_jobs[job_index].status = Some(JobStatus::Completed);
                        if now > makespan {
                            makespan = now.clone();
                        }
                        record(
                            &mut log,
                            &now,
                            EventKind::Complete,
                            format!("job={} node={}", job.job_id, node),
                        );
                    }
                    Err(violation) => {
                        violations += 1;
                        sim_jobs[job_index].status = Some(JobStatus::RegulationViolation);
                        record(
                            &mut log,
                            &now,
                            EventKind::RegulationViolation,
                            format!("job={} rule={}", job.job_id, violation_rule(&violation)),
                        );
                    }
                }
            }
            Payload::Down { node } => {
                record(&mut log, &now, EventKind::Down, format!("node={node}"));
                let sim_node = nodes.get_mut(&node).expect("known node");
                sim_node.up = false;
                sim_node.busy_until = now.clone();
                let orphans: Vec<ScheduledEntry> = sim_node.queue.drain(..).collect();
                for entry in orphans {
                    let job = &jobs[entry.job_index];
                    sim_jobs[entry.job_index].generation += 1;
                    sim_jobs[entry.job_index].pending = true;
                    if entry.start < now {
                        // work already underway is lost and must be redone
                        sim_jobs[entry.job_index].retries += 1;
                        record(
                            &mut log,
                            &now,
                            EventKind::Abort,
                            format!("job={} node={}", job.job_id, node),
                        );
                    } else {
                        record(
                            &mut log,
                            &now,
                            EventKind::Requeue,
                            format!("job={} node={}", job.job_id, node),
                        );
                    }
                }
                schedule_pass(&now, &mut nodes, &mut sim_jobs, &mut heap, &mut heap_seq, &mut log);
            }
            Payload::Up { node } => {
                record(&mut log, &now, EventKind::Up, format!("node={node}"));
                let sim_node = nodes.get_mut(&node).expect("known node");
                sim_node.up = true;
                sim_node.busy_until = now.clone();
                schedule_pass(&now, &mut nodes, &mut sim_jobs, &mut heap, &mut heap_seq, &mut log);
            }
        }
    }

    for (i, job) in jobs.iter().enumerate() {
        if sim_jobs[i].pending {
            sim_jobs[i].pending = false;
            sim_jobs[i].status = Some(JobStatus::NoResource);
            record(
                &mut log,
                &last_time,
                EventKind::NoResource,
                format!("job={}", job.job_id),
            );
        }
    }

    let job_records: Vec<JobRecord> = jobs
        .iter()
        .zip(&sim_jobs)
        .map(|(job, s)| JobRecord {
            job_id: job.job_id.clone(),
            shard_id: job.shard_id.clone(),
            status: s.status.expect("every job reaches a final status"),
            node: s.node.clone(),
            start: s.start.clone(),
            end: s.end.clone(),
            retries: s.retries,
            transferred: s.transferred,
        })
        .collect();
    let total_retries = sim_jobs.iter().map(|s| s.retries).sum();
    let report = SimReport {
        makespan,
        events: log,
        jobs: job_records,
        total_retries,
        violations,
    };
    let outputs: Vec<(String, JobOutput)> = jobs
        .iter()
        .zip(outputs)
        .filter_map(|(job, out)| out.map(|o| (job.job_id.clone(), o)))
        .collect();
    Ok((report, outputs))
}

fn violation_rule(violation: &RegulationViolation) -> &'static str {
    match violation {
        RegulationViolation::DoubleRead { .. } => "read-once",
        RegulationViolation::DoubleEmit { .. } => "single-output",
        RegulationViolation::MissingOutput { .. } => "single-output",
    }
}

/// Draw a failure plan: `count` distinct nodes (chosen by seeded shuffle)
/// each get one outage with `t_down` uniform in `[0, horizon)` and a
/// duration uniform in `[1, horizon]`. At most one outage per node, so
/// plans are always overlap-free.
pub fn random_failure_plan(
    seed: u64,
    node_ids: &[NodeId],
    count: usize,
    horizon: u64,
) -> Vec<FailureEvent> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<NodeId> = node_ids.to_vec();
    ids.shuffle(&mut rng);
    ids.truncate(count.min(node_ids.len()));
    ids.iter()
        .map(|node| {
            let t_down = rng.random_range(0..horizon);
            let duration = rng.random_range(1..=horizon);
            FailureEvent {
                node: node.clone(),
                t_down: BigRational::from_integer(t_down.into()),
                t_up: BigRational::from_integer((t_down + duration).into()),
            }
        })
        .collect()
}

/// Event log as `time<TAB>seq<TAB>kind<TAB>details` lines.
pub fn events_tsv(report: &SimReport) -> String {
    let mut out = String::new();
    for e in &report.events {
        writeln!(out, "{}\t{}\t{}\t{}", e.time, e.seq, e.kind.as_str(), e.details)
            .expect("string write");
    }
    out
}

/// Job table as tab-separated lines:
/// `job_id shard_id status node start end retries transferred`,
/// `-` for fields a failed job never got.
pub fn jobs_tsv(report: &SimReport) -> String {
    let mut out = String::new();
    for j in &report.jobs {
        let opt = |v: &Option<SimTime>| v.as_ref().map_or("-".to_string(), |t| t.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            j.job_id,
            j.shard_id,
            j.status.as_str(),
            j.node.as_deref().unwrap_or("-"),
            opt(&j.start),
            opt(&j.end),
            j.retries,
            j.transferred
        )
        .expect("string write");
    }
    out
}
