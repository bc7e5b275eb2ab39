//! Job execution under the grid's two regulations: a job may read its
//! input stream exactly once, and it must emit exactly one output
//! artifact. Both are enforced structurally here rather than trusted to
//! extractor code.

use thiserror::Error;

use super::{ExtractionOp, Job, JobOutput};
use crate::corpus::{SentenceCtx, Shard};
use crate::patterns::{extract_pairs_from, match_pattern_from};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegulationViolation {
    #[error("REGULATION_VIOLATION job {job_id}: input stream read more than once")]
    DoubleRead { job_id: String },
    #[error("REGULATION_VIOLATION job {job_id}: more than one output artifact emitted")]
    DoubleEmit { job_id: String },
    #[error("REGULATION_VIOLATION job {job_id}: finished without emitting an output artifact")]
    MissingOutput { job_id: String },
}

/// Single-pass sentence stream over a shard.
pub struct SentenceStream<'a> {
    inner: Box<dyn Iterator<Item = SentenceCtx<'a>> + 'a>,
}

impl<'a> Iterator for SentenceStream<'a> {
    type Item = SentenceCtx<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.next()
    }
}

/// What an extractor sees of its job: the job id, a take-once input
/// stream and an emit-once output slot.
pub struct ExecutionContext<'a> {
    job_id: String,
    shard: &'a Shard,
    stream_taken: bool,
    output: Option<JobOutput>,
}

impl<'a> ExecutionContext<'a> {
    pub fn new(job_id: impl Into<String>, shard: &'a Shard) -> Self {
        ExecutionContext {
            job_id: job_id.into(),
            shard,
            stream_taken: false,
            output: None,
        }
    }

    pub fn job_id(&self) -> &str {
        &self.job_id
    }

    /// Hand out the input stream. The second call is a violation.
    pub fn take_stream(&mut self) -> Result<SentenceStream<'a>, RegulationViolation> {
        if self.stream_taken {
            return Err(RegulationViolation::DoubleRead {
                job_id: self.job_id.clone(),
            });
        }
        self.stream_taken = true;
        Ok(SentenceStream {
            inner: Box::new(self.shard.sentence_contexts()),
        })
    }

    /// Deposit the job's single output artifact. The second call is a
    /// violation.
    pub fn emit(&mut self, output: JobOutput) -> Result<(), RegulationViolation> {
        if self.output.is_some() {
            return Err(RegulationViolation::DoubleEmit {
                job_id: self.job_id.clone(),
            });
        }
        self.output = Some(output);
        Ok(())
    }

    fn into_output(self) -> Result<JobOutput, RegulationViolation> {
        self.output.ok_or(RegulationViolation::MissingOutput {
            job_id: self.job_id,
        })
    }
}

/// Extraction code that runs inside a job. Implementations receive the
/// context and must take the stream once and emit once.
pub trait Extractor {
    fn run(&self, ctx: &mut ExecutionContext<'_>) -> Result<(), RegulationViolation>;
}

/// Run one closure as a job body under regulation enforcement.
pub fn run_once(
    job_id: &str,
    shard: &Shard,
    body: impl FnOnce(&mut ExecutionContext<'_>) -> Result<(), RegulationViolation>,
) -> Result<JobOutput, RegulationViolation> {
    let mut ctx = ExecutionContext::new(job_id, shard);
    body(&mut ctx)?;
    ctx.into_output()
}

/// The standard extractor: runs an [`ExtractionOp`] in one pass.
pub struct OpExtractor<'op>(pub &'op ExtractionOp);

impl Extractor for OpExtractor<'_> {
    fn run(&self, ctx: &mut ExecutionContext<'_>) -> Result<(), RegulationViolation> {
        let stream = ctx.take_stream()?;
        let output = match self.0 {
            ExtractionOp::Pairs(mode) => JobOutput::Pairs(extract_pairs_from(stream, *mode)),
            ExtractionOp::Pattern(rule) => {
                JobOutput::Matches(match_pattern_from(stream, rule))
            }
        };
        ctx.emit(output)
    }
}

/// Run any extractor under regulation enforcement.
pub fn run_extractor(
    job_id: &str,
    shard: &Shard,
    extractor: &dyn Extractor,
) -> Result<JobOutput, RegulationViolation> {
    run_once(job_id, shard, |ctx| extractor.run(ctx))
}

/// Run a job's declared operation over its shard.
pub fn execute_job(job: &Job, shard: &Shard) -> Result<JobOutput, RegulationViolation> {
    run_extractor(&job.job_id, shard, &OpExtractor(&job.op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_vertical;
    use crate::patterns::{extract_pairs, parse_pattern, PairMode};

    fn shard() -> Shard {
        let v = "#doc d1 t\nmucca\tmucca\tNOUN\npazza\tpazzo\tADJ\n\n";
        Shard::new("s0", "t", parse_vertical(v).unwrap()).unwrap()
    }

    fn job(op: ExtractionOp) -> Job {
        Job {
            job_id: "j0".to_string(),
            shard_id: "s0".to_string(),
            vo: "v".to_string(),
            op,
        }
    }

    #[test]
    fn standard_pair_job_equals_direct_extraction() {
        let shard = shard();
        let out = execute_job(&job(ExtractionOp::Pairs(PairMode::NounAdj)), &shard).unwrap();
        assert_eq!(
            out,
            JobOutput::Pairs(extract_pairs(&shard, PairMode::NounAdj))
        );
    }

    #[test]
    fn standard_pattern_job_reports_spans() {
        let rule = parse_pattern("NOUN ADJ").unwrap();
        let out = execute_job(&job(ExtractionOp::Pattern(rule)), &shard()).unwrap();
        match out {
            JobOutput::Matches(spans) => {
                assert_eq!(spans.len(), 1);
                assert_eq!(spans[0].doc_id, "d1");
            }
            other => panic!("unexpected output {other:?}"),
        }
    }

    struct DoubleReader;

    impl Extractor for DoubleReader {
        fn run(&self, ctx: &mut ExecutionContext<'_>) -> Result<(), RegulationViolation> {
            let first = ctx.take_stream()?;
            let count = first.count();
            // a second pass to "double-check" the count is exactly what
            // the read-once regulation forbids
            let second = ctx.take_stream()?;
            assert_eq!(second.count(), count);
            ctx.emit(JobOutput::Pairs(Default::default()))
        }
    }

    #[test]
    fn second_stream_take_is_a_violation() {
        let err = run_extractor("j0", &shard(), &DoubleReader).unwrap_err();
        assert_eq!(
            err,
            RegulationViolation::DoubleRead {
                job_id: "j0".to_string()
            }
        );
    }

    struct DoubleEmitter;

    impl Extractor for DoubleEmitter {
        fn run(&self, ctx: &mut ExecutionContext<'_>) -> Result<(), RegulationViolation> {
            let stream = ctx.take_stream()?;
            let table = extract_pairs_from(stream, PairMode::NounAdj);
            ctx.emit(JobOutput::Pairs(table.clone()))?;
            ctx.emit(JobOutput::Pairs(table))
        }
    }

    #[test]
    fn second_emit_is_a_violation() {
        let err = run_extractor("j0", &shard(), &DoubleEmitter).unwrap_err();
        assert_eq!(
            err,
            RegulationViolation::DoubleEmit {
                job_id: "j0".to_string()
            }
        );
    }

    struct SilentExtractor;

    impl Extractor for SilentExtractor {
        fn run(&self, ctx: &mut ExecutionContext<'_>) -> Result<(), RegulationViolation> {
            let _ = ctx.take_stream()?;
            Ok(())
        }
    }

    #[test]
    fn finishing_without_output_is_a_violation() {
        let err = run_extractor("j0", &shard(), &SilentExtractor).unwrap_err();
        assert_eq!(
            err,
            RegulationViolation::MissingOutput {
                job_id: "j0".to_string()
            }
        );
    }
}
