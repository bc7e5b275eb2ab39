//! Linguistic pattern mining over a simulated computational grid.
//!
//! A corpus of annotated documents is split into shards, replicated
//! across virtual nodes, and mined by single-pass extraction jobs that a
//! resource broker schedules under a deterministic discrete-event clock.
//! Per-shard results merge into one table, so a distributed run yields
//! byte-identical reports to a sequential one.
//!
//! Layering, bottom up:
//! - [`corpus`]: annotated tokens and documents, the vertical text
//!   format, sharding, and a seeded generator with planted ground truth.
//! - [`patterns`]: pair extraction, a bounded-gap pattern DSL, KWIC
//!   concordances, and positional co-occurrence profiles.
//! - [`aggregate`]: order-insensitive merging and the frequency report.
//! - [`terms`]: frequency filtering with a single-modifier exception,
//!   multiword flagging, and diachronic series.
//! - [`gridsim`]: replica placement, the resource broker, the simulator
//!   with failure handling, and a local-parallel executor.
//! - [`pipeline`]: end-to-end runs tying the layers together.

pub mod aggregate;
pub mod corpus;
pub mod gridsim;
pub mod patterns;
pub mod pipeline;
pub mod terms;
