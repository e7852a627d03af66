//! BoaT: a small query language and single-machine analytics engine for
//! county/grid transportation sensor data.
//!
//! A dataset is a hierarchy of counties, each holding a list of grids
//! (spatial cells); every grid optionally links to weather and speed
//! record blocks keyed by day. Programs declare aggregated outputs,
//! traverse the hierarchy, and are evaluated once per county, in
//! parallel, with emissions folded through mergeable aggregators so the
//! result is independent of the worker count.
//!
//! Crate layout follows the pipeline:
//!
//! * [`domain`] — county/grid/record types, calendar utilities, validation
//! * [`lang`] — lexer, parser, pretty-printer and type checker for `.boat` programs
//! * [`agg`] — the six mergeable output aggregators and finalized tables
//! * [`storage`] — the `.btd` binary dataset format with lazy block loads
//! * [`engine`] — parallel evaluation over county partitions plus renderers
//! * [`ingest`] — CSV feeds and the seeded synthetic generator
//! * [`corpus`] — the bundled task programs and their oracle harness

pub mod agg;
pub mod corpus;
pub mod domain;
pub mod engine;
pub mod ingest;
pub mod lang;
pub mod storage;
