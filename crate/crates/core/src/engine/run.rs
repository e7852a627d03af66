use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::agg::{AggSpec, AggregatorState, OutputTable, ScalarValue};
use crate::lang::{OutputSig, Ty, TypedProgram};
use crate::storage::Dataset;

use super::eval::{eval_county, EmitSink, EvalError, TaskCtx};
use super::value::CountyVal;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("execution plan needs at least one worker")]
    NoWorkers,
    #[error("county {code} ({name}): {source}")]
    CountyFailed {
        code: String,
        name: String,
        #[source]
        source: EvalError,
    },
    #[error("internal aggregation error: {0}")]
    Internal(String),
}

/// An immutable plan: one map unit per county, evaluated by up to
/// `workers` threads.
pub struct ExecutionPlan<'a> {
    typed: &'a TypedProgram,
    dataset: &'a Dataset,
    counties: Vec<Arc<CountyVal>>,
    workers: usize,
}

impl ExecutionPlan<'_> {
    pub fn map_units(&self) -> usize {
        self.counties.len()
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

pub fn plan<'a>(
    typed: &'a TypedProgram,
    dataset: &'a Dataset,
    workers: usize,
) -> Result<ExecutionPlan<'a>, EngineError> {
    if workers == 0 {
        return Err(EngineError::NoWorkers);
    }
    let counties = CountyVal::from_domain(&dataset.counties());
    Ok(ExecutionPlan { typed, dataset, counties, workers })
}

/// Per-task sink: one aggregator state per output variable, with
/// emission values widened to the declared types.
struct StateSink {
    states: BTreeMap<String, (OutputSig, AggregatorState)>,
}

impl StateSink {
    fn new(typed: &TypedProgram) -> StateSink {
        let states = typed
            .outputs
            .iter()
            .map(|(name, sig)| {
                let spec = AggSpec::new(sig.kind, sig.arg).expect("validated at typecheck");
                (name.clone(), (sig.clone(), AggregatorState::new(spec, sig.indexed)))
            })
            .collect();
        StateSink { states }
    }
}

/// Int emissions widen to float where the declaration says so.
fn widen(value: ScalarValue, declared: &Ty) -> ScalarValue {
    match (value, declared) {
        (ScalarValue::Int(v), Ty::Float) => ScalarValue::Float(v as f64),
        (v, _) => v,
    }
}

impl EmitSink for StateSink {
    fn emit(
        &mut self,
        output: &str,
        index: Option<String>,
        value: ScalarValue,
        weight: Option<ScalarValue>,
    ) -> Result<(), String> {
        let (sig, state) = self
            .states
            .get_mut(output)
            .ok_or_else(|| format!("emission to unknown output {output:?}"))?;
        let value = widen(value, &sig.value_ty);
        let weight = match (weight, &sig.weight_ty) {
            (Some(w), Some(ty)) => Some(widen(w, ty)),
            (None, _) if sig.kind == crate::agg::AggKind::Top => None,
            // Weight-less maximum/minimum rank the value by itself.
            (None, _) => Some(value.clone()),
            (w, None) => w,
        };
        let weight = match sig.kind {
            crate::agg::AggKind::Maximum | crate::agg::AggKind::Minimum => weight,
            crate::agg::AggKind::Top => weight,
            _ => None,
        };
        state.emit(index.as_deref(), value, weight).map_err(|e| e.to_string())
    }
}

/// Evaluates the plan: map over counties in parallel, merge per-county
/// states in ascending county-code order, finalize each output once.
/// Output is byte-identical for any worker count.
pub fn run(plan: &ExecutionPlan<'_>) -> Result<BTreeMap<String, OutputTable>, EngineError> {
    let n = plan.counties.len();
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<StateSink, EvalError>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..plan.workers.min(n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    return;
                }
                let mut sink = StateSink::new(plan.typed);
                let result = {
                    let mut ctx = TaskCtx::new(plan.dataset, &mut sink);
                    eval_county(plan.typed, &plan.counties[i], &mut ctx)
                };
                *results[i].lock().unwrap() = Some(result.map(|()| sink));
            });
        }
    });

    // Canonical merge order: ascending county code (the county list is
    // already sorted). The first failure in that order is reported, so
    // diagnostics are deterministic too.
    let mut merged: BTreeMap<String, (OutputSig, AggregatorState)> = BTreeMap::new();
    for (i, slot) in results.into_iter().enumerate() {
        let result = slot.into_inner().unwrap().expect("every county was scheduled");
        let sink = result.map_err(|source| EngineError::CountyFailed {
            code: plan.counties[i].code.to_string(),
            name: plan.counties[i].name.to_string(),
            source,
        })?;
        for (name, (sig, state)) in sink.states {
            match merged.entry(name) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert((sig, state));
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    e.get_mut().1.merge(state).map_err(|e| EngineError::Internal(e.to_string()))?;
                }
            }
        }
    }

    Ok(merged
        .into_iter()
        .map(|(name, (_, state))| {
            let rows = state.finalize();
            (name.clone(), OutputTable { name, rows })
        })
        .collect())
}
