//! Local multi-threaded execution of the same jobs the simulator
//! schedules. No clock, no failures: every job runs exactly once under
//! the same regulation enforcement, and outputs come back in submission
//! order, so a parallel run and a simulated run produce identical merged
//! results.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{execute_job, GridError, Job, JobOutput};
use crate::corpus::Shard;

/// Execute all jobs on a thread pool. Output order is submission order
/// regardless of which job finishes first.
pub fn run_parallel(
    jobs: &[Job],
    shards: &BTreeMap<String, Shard>,
) -> Result<Vec<(String, JobOutput)>, GridError> {
    for job in jobs {
        if !shards.contains_key(&job.shard_id) {
            return Err(GridError::UnknownShard {
                job_id: job.job_id.clone(),
                shard_id: job.shard_id.clone(),
            });
        }
    }
    jobs.par_iter()
        .map(|job| {
            let shard = &shards[&job.shard_id];
            let output = execute_job(job, shard)?;
            Ok((job.job_id.clone(), output))
        })
        .collect()
}
