//! The tree-walking evaluator for one county. Strict evaluation with
//! explicit absence: optional fields that are missing yield `Absent`,
//! which propagates through operators, makes `def` false, and turns
//! emissions into no-ops. Division by zero is a hard error; an index
//! out of bounds is a hard error unless it happens under `def` or in a
//! `foreach` condition.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::agg::ScalarValue;
use crate::domain::parse_date;
use crate::lang::{BinOp, Pos, TClause, TExpr, TExprKind, TStmt, Ty, TypedProgram};
use crate::storage::{Dataset, StorageError};

use super::value::{CountyVal, Value};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {}: division by zero", pos.line)]
    DivideByZero { pos: Pos },
    #[error("line {}: index {index} out of bounds (length {len})", pos.line)]
    IndexOutOfBounds { pos: Pos, index: i64, len: usize },
    #[error("line {}: integer overflow", pos.line)]
    Overflow { pos: Pos },
    #[error("line {}: {detail}", pos.line)]
    BadDate { pos: Pos, detail: String },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("line {}: internal type error: {detail}", pos.line)]
    TypeError { pos: Pos, detail: String },
}

/// Where emissions go. The parallel engine folds them into aggregator
/// states; the reference interpreter records them verbatim.
pub(crate) trait EmitSink {
    fn emit(
        &mut self,
        output: &str,
        index: Option<String>,
        value: ScalarValue,
        weight: Option<ScalarValue>,
    ) -> Result<(), String>;
}

pub(crate) struct TaskCtx<'a> {
    pub dataset: &'a Dataset,
    pub sink: &'a mut dyn EmitSink,
    scopes: Vec<HashMap<&'a str, Value>>,
}

impl<'a> TaskCtx<'a> {
    pub fn new(dataset: &'a Dataset, sink: &'a mut dyn EmitSink) -> TaskCtx<'a> {
        TaskCtx { dataset, sink, scopes: vec![HashMap::new()] }
    }

    fn get(&self, name: &str) -> Value {
        for scope in self.scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return v.clone();
            }
        }
        unreachable!("type checker guarantees {name:?} is bound")
    }

    fn bind(&mut self, name: &'a str, value: Value) {
        self.scopes.last_mut().unwrap().insert(name, value);
    }

    fn set(&mut self, name: &str, value: Value) {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return;
            }
        }
        unreachable!("type checker guarantees assignment target {name:?} exists")
    }
}

/// Runs the whole program body for one county.
pub(crate) fn eval_county<'a>(
    typed: &'a TypedProgram,
    county: &Arc<CountyVal>,
    ctx: &mut TaskCtx<'a>,
) -> Result<(), EvalError> {
    ctx.scopes.truncate(0);
    ctx.scopes.push(HashMap::new());
    ctx.bind(&typed.input_var, Value::County(Arc::clone(county)));
    exec_block(&typed.stmts, ctx)
}

fn exec_block<'a>(stmts: &'a [TStmt], ctx: &mut TaskCtx<'a>) -> Result<(), EvalError> {
    for stmt in stmts {
        exec_stmt(stmt, ctx)?;
    }
    Ok(())
}

fn exec_stmt<'a>(stmt: &'a TStmt, ctx: &mut TaskCtx<'a>) -> Result<(), EvalError> {
    match stmt {
        TStmt::VarDecl { name, expr } => {
            let value = eval(expr, ctx, false)?;
            ctx.bind(name, value);
            Ok(())
        }
        TStmt::Assign { name, expr, .. } => {
            let value = eval(expr, ctx, false)?;
            ctx.set(name, value);
            Ok(())
        }
        TStmt::ForEach { var, array, cond, body, .. } => {
            let list = eval(array, ctx, false)?;
            let len = match list.list_len() {
                Some(len) => len,
                // An absent root has no elements to scan.
                None if list.is_absent() => 0,
                None => {
                    return Err(EvalError::TypeError {
                        pos: array.pos,
                        detail: "foreach scan target is not a list".into(),
                    })
                }
            };
            for i in 0..len {
                ctx.scopes.push(HashMap::new());
                ctx.bind(var, Value::Int(i as i64));
                // Conditions are filters: absence means "skip", so the
                // whole condition evaluates leniently.
                let keep = matches!(eval(cond, ctx, true)?, Value::Bool(true));
                if keep {
                    exec_block(body, ctx)?;
                }
                ctx.scopes.pop();
            }
            Ok(())
        }
        TStmt::Visit { target, clauses, .. } => {
            let county = match eval(target, ctx, false)? {
                Value::County(c) => c,
                other => {
                    return Err(EvalError::TypeError {
                        pos: target.pos,
                        detail: format!("visit target must be a County, got {other:?}"),
                    })
                }
            };
            for clause in clauses {
                if clause.on == Ty::County {
                    run_clause(clause, Value::County(Arc::clone(&county)), ctx)?;
                }
            }
            for grid in county.grids.iter() {
                for clause in clauses {
                    if clause.on == Ty::Grid {
                        run_clause(clause, Value::Grid(Arc::clone(grid)), ctx)?;
                    }
                }
            }
            Ok(())
        }
        TStmt::Emit { output, index, value, weight, pos } => {
            let index_val = match index {
                Some(ix) => match eval(ix, ctx, false)? {
                    Value::Absent => return Ok(()),
                    Value::Str(s) => Some(s.to_string()),
                    other => {
                        return Err(EvalError::TypeError {
                            pos: ix.pos,
                            detail: format!("emission index must be a string, got {other:?}"),
                        })
                    }
                },
                None => None,
            };
            let raw = eval(value, ctx, false)?;
            if raw.is_absent() {
                return Ok(()); // aggregations skip absent values
            }
            let scalar = to_scalar(raw, value.pos)?;
            let weight_val = match weight {
                Some(w) => {
                    let raw = eval(w, ctx, false)?;
                    if raw.is_absent() {
                        return Ok(());
                    }
                    Some(to_scalar(raw, w.pos)?)
                }
                None => None,
            };
            ctx.sink
                .emit(output, index_val, scalar, weight_val)
                .map_err(|detail| EvalError::TypeError { pos: *pos, detail })
        }
        TStmt::ExprStmt { expr } => {
            eval(expr, ctx, false)?;
            Ok(())
        }
    }
}

fn run_clause<'a>(
    clause: &'a TClause,
    node: Value,
    ctx: &mut TaskCtx<'a>,
) -> Result<(), EvalError> {
    ctx.scopes.push(HashMap::new());
    ctx.bind(&clause.var, node);
    let result = exec_block(&clause.body, ctx);
    ctx.scopes.pop();
    result
}

fn to_scalar(value: Value, pos: Pos) -> Result<ScalarValue, EvalError> {
    match value {
        Value::Int(v) => Ok(ScalarValue::Int(v)),
        Value::Float(v) => Ok(ScalarValue::Float(v)),
        Value::Str(s) => Ok(ScalarValue::Str(s.to_string())),
        other => Err(EvalError::TypeError {
            pos,
            detail: format!("expected a scalar emission value, got {other:?}"),
        }),
    }
}

/// Evaluates one expression. With `lenient` set (inside `def` and
/// foreach conditions) an out-of-bounds index yields `Absent` instead
/// of an error.
pub(crate) fn eval(expr: &TExpr, ctx: &mut TaskCtx<'_>, lenient: bool) -> Result<Value, EvalError> {
    match &expr.kind {
        TExprKind::Int(v) => Ok(Value::Int(*v)),
        TExprKind::Float(v) => Ok(Value::Float(*v)),
        TExprKind::Str(s) => Ok(Value::Str(Arc::from(s.as_str()))),
        TExprKind::Bool(b) => Ok(Value::Bool(*b)),
        TExprKind::Local(name) => Ok(ctx.get(name)),
        TExprKind::Field { recv, name, .. } => {
            let recv_val = eval(recv, ctx, lenient)?;
            if recv_val.is_absent() {
                return Ok(Value::Absent);
            }
            field_value(recv_val, name, expr.pos, ctx)
        }
        TExprKind::IndexOp { recv, index } => {
            let recv_val = eval(recv, ctx, lenient)?;
            let index_val = eval(index, ctx, lenient)?;
            if recv_val.is_absent() || index_val.is_absent() {
                return Ok(Value::Absent);
            }
            let i = match index_val {
                Value::Int(i) => i,
                other => {
                    return Err(EvalError::TypeError {
                        pos: expr.pos,
                        detail: format!("index must be an int, got {other:?}"),
                    })
                }
            };
            let len = recv_val.list_len().ok_or_else(|| EvalError::TypeError {
                pos: expr.pos,
                detail: "indexed value is not a list".into(),
            })?;
            if i < 0 || i as usize >= len {
                return if lenient {
                    Ok(Value::Absent)
                } else {
                    Err(EvalError::IndexOutOfBounds { pos: expr.pos, index: i, len })
                };
            }
            let i = i as usize;
            Ok(match recv_val {
                Value::Grids(grids) => Value::Grid(Arc::clone(&grids[i])),
                Value::WeatherList(records) => Value::WeatherRec(records, i),
                Value::SpeedList(records) => Value::SpeedRec(records, i),
                _ => unreachable!("list_len filtered non-lists"),
            })
        }
        TExprKind::GetWeather { grid, date } => {
            let (grid_val, day) = match get_call_args(grid, date, ctx, lenient, expr.pos)? {
                Some(args) => args,
                None => return Ok(Value::Absent),
            };
            if !grid_val.has_weather {
                // No link: nothing was ever recorded for this grid.
                return Ok(Value::WeatherList(Arc::new(Vec::new())));
            }
            let records = ctx.dataset.get_weather(grid_val.id, day)?;
            Ok(Value::WeatherList(Arc::new(records)))
        }
        TExprKind::GetSpeed { grid, date } => {
            let (grid_val, day) = match get_call_args(grid, date, ctx, lenient, expr.pos)? {
                Some(args) => args,
                None => return Ok(Value::Absent),
            };
            if !grid_val.has_speed {
                return Ok(Value::SpeedList(Arc::new(Vec::new())));
            }
            let records = ctx.dataset.get_speed(grid_val.id, day)?;
            Ok(Value::SpeedList(Arc::new(records)))
        }
        TExprKind::Def(inner) => {
            let value = eval(inner, ctx, true)?;
            Ok(Value::Bool(!value.is_absent()))
        }
        TExprKind::Binary { op, lhs, rhs } => {
            let l = eval(lhs, ctx, lenient)?;
            let r = eval(rhs, ctx, lenient)?;
            if l.is_absent() || r.is_absent() {
                return Ok(Value::Absent);
            }
            binary(*op, l, r, expr.pos)
        }
    }
}

fn get_call_args(
    grid: &TExpr,
    date: &TExpr,
    ctx: &mut TaskCtx<'_>,
    lenient: bool,
    pos: Pos,
) -> Result<Option<(Arc<super::GridVal>, crate::domain::DayIndex)>, EvalError> {
    let grid_val = match eval(grid, ctx, lenient)? {
        Value::Absent => return Ok(None),
        Value::Grid(g) => g,
        other => {
            return Err(EvalError::TypeError {
                pos,
                detail: format!("first argument must be a Grid, got {other:?}"),
            })
        }
    };
    let date_val = match eval(date, ctx, lenient)? {
        Value::Absent => return Ok(None),
        Value::Str(s) => s,
        other => {
            return Err(EvalError::TypeError {
                pos,
                detail: format!("date argument must be a string, got {other:?}"),
            })
        }
    };
    let day = parse_date(&date_val)
        .map_err(|e| EvalError::BadDate { pos, detail: e.to_string() })?;
    Ok(Some((grid_val, day)))
}

fn field_value(
    recv: Value,
    name: &str,
    pos: Pos,
    ctx: &mut TaskCtx<'_>,
) -> Result<Value, EvalError> {
    let opt_float = |v: Option<f64>| v.map(Value::Float).unwrap_or(Value::Absent);
    let value = match (&recv, name) {
        (Value::County(c), "countyCode") => Value::Str(Arc::clone(&c.code)),
        (Value::County(c), "countyName") => Value::Str(Arc::clone(&c.name)),
        (Value::County(c), "grid") => Value::Grids(Arc::clone(&c.grids)),
        (Value::Grid(g), "id") => Value::Int(g.id as i64),
        (Value::Grid(g), "lat") => Value::Float(g.lat),
        (Value::Grid(g), "lon") => Value::Float(g.lon),
        (Value::Grid(g), "location") => Value::Str(Arc::clone(&g.location)),
        (Value::Grid(g), "weatherRoot") => {
            if !g.has_weather {
                Value::Absent
            } else {
                // Resolving the link materializes every day for the grid.
                let mut all = Vec::new();
                for day in ctx.dataset.weather_days(g.id) {
                    all.extend(ctx.dataset.get_weather(g.id, day)?);
                }
                Value::WeatherList(Arc::new(all))
            }
        }
        (Value::Grid(g), "speedRoot") => {
            if !g.has_speed {
                Value::Absent
            } else {
                let mut all = Vec::new();
                for day in ctx.dataset.speed_days(g.id) {
                    all.extend(ctx.dataset.get_speed(g.id, day)?);
                }
                Value::SpeedList(Arc::new(all))
            }
        }
        (Value::WeatherList(w), "weather") => Value::WeatherList(Arc::clone(w)),
        (Value::SpeedList(s), "speeds") => Value::SpeedList(Arc::clone(s)),
        (Value::WeatherRec(list, i), _) => {
            let r = &list[*i];
            match name {
                "tmpc" => opt_float(r.tmpc),
                "wawa" => Value::Str(Arc::from(r.wawa.as_str())),
                "ptype" => Value::Str(Arc::from(r.ptype.as_str())),
                "dwpc" => opt_float(r.dwpc),
                "smps" => opt_float(r.smps),
                "drct" => opt_float(r.drct),
                "vsby" => opt_float(r.vsby),
                "roadtmpc" => opt_float(r.roadtmpc),
                "srad" => opt_float(r.srad),
                "snwd" => opt_float(r.snwd),
                "pcpn" => opt_float(r.pcpn),
                "time" => Value::Int(r.time),
                other => {
                    return Err(EvalError::TypeError {
                        pos,
                        detail: format!("weather record has no field {other:?}"),
                    })
                }
            }
        }
        (Value::SpeedRec(list, i), _) => {
            let r = &list[*i];
            match name {
                "detectorcode" => Value::Str(Arc::from(r.detectorcode.as_str())),
                "vtype" => Value::Str(Arc::from(r.vtype.as_str())),
                "speed" => Value::Float(r.speed),
                "reference" => Value::Float(r.reference),
                "time" => Value::Int(r.time),
                "roadname" => Value::Str(Arc::from(r.roadname.as_str())),
                other => {
                    return Err(EvalError::TypeError {
                        pos,
                        detail: format!("speed record has no field {other:?}"),
                    })
                }
            }
        }
        (recv, name) => {
            return Err(EvalError::TypeError {
                pos,
                detail: format!("no field {name:?} on {recv:?}"),
            })
        }
    };
    Ok(value)
}

fn binary(op: BinOp, l: Value, r: Value, pos: Pos) -> Result<Value, EvalError> {
    use BinOp::*;
    if op.is_comparison() {
        let result = match (&l, &r) {
            (Value::Int(a), Value::Int(b)) => compare(op, a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => compare(op, a.as_bytes().cmp(b.as_bytes())),
            (Value::Bool(a), Value::Bool(b)) => match op {
                Eq => a == b,
                Ne => a != b,
                _ => {
                    return Err(EvalError::TypeError {
                        pos,
                        detail: "ordering comparison on bools".into(),
                    })
                }
            },
            _ => {
                let (a, b) = (as_f64(&l, pos)?, as_f64(&r, pos)?);
                match op {
                    Lt => a < b,
                    Le => a <= b,
                    Gt => a > b,
                    Ge => a >= b,
                    Eq => a == b,
                    Ne => a != b,
                    _ => unreachable!(),
                }
            }
        };
        return Ok(Value::Bool(result));
    }
    match (&l, &r) {
        (Value::Int(a), Value::Int(b)) => {
            let result = match op {
                Add => a.checked_add(*b),
                Sub => a.checked_sub(*b),
                Mul => a.checked_mul(*b),
                Div => {
                    if *b == 0 {
                        return Err(EvalError::DivideByZero { pos });
                    }
                    a.checked_div(*b)
                }
                _ => unreachable!(),
            };
            result.map(Value::Int).ok_or(EvalError::Overflow { pos })
        }
        _ => {
            let (a, b) = (as_f64(&l, pos)?, as_f64(&r, pos)?);
            let v = match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivideByZero { pos });
                    }
                    a / b
                }
                _ => unreachable!(),
            };
            Ok(Value::Float(v))
        }
    }
}

fn compare(op: BinOp, ord: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        BinOp::Lt => ord == Less,
        BinOp::Le => ord != Greater,
        BinOp::Gt => ord == Greater,
        BinOp::Ge => ord != Less,
        BinOp::Eq => ord == Equal,
        BinOp::Ne => ord != Equal,
        _ => unreachable!(),
    }
}

fn as_f64(v: &Value, pos: Pos) -> Result<f64, EvalError> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(EvalError::TypeError {
            pos,
            detail: format!("expected a number, got {other:?}"),
        }),
    }
}
