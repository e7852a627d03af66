//! Execution engine: evaluates a type-checked program once per county
//! (the map phase, run in parallel over a worker pool) and folds every
//! emission through the output aggregators (the reduce phase).
//!
//! Scheduling is dynamic — workers pull counties from a shared queue —
//! but per-county aggregator states are merged in canonical order
//! (ascending county code) and finalized once, so the rendered output
//! is byte-identical for any worker count.

mod eval;
mod reference;
mod render;
mod run;
mod value;

pub use eval::EvalError;
pub use reference::run_reference;
pub use render::{parse_json, render_output, OutputFormat};
pub use run::{plan, run, EngineError, ExecutionPlan};

pub(crate) use value::{CountyVal, GridVal, Value};
