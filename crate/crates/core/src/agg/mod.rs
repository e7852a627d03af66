//! The six output aggregators: mergeable reductions with deterministic
//! finalization, optionally partitioned by a string index.
//!
//! Each map task folds emissions into private [`AggregatorState`]s;
//! after all tasks finish, states are merged in canonical county order
//! and finalized into [`OutputTable`]s. Merging is commutative and
//! associative up to finalized output: exactly for the order-based
//! kinds (maximum/minimum/top/quantile), within 1e-9 relative for the
//! moment-based kinds (mean/stdev).

mod state;
mod table;
mod value;

pub use state::{AggError, AggKind, AggSpec, AggregatorState};
pub use table::{OutputTable, TableRow};
pub use value::ScalarValue;
