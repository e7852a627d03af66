//! Type checker: resolves identifiers and field accesses against the
//! domain schema, validates output declarations and emissions, fixes
//! each `foreach` condition's scan array, and records which record
//! kinds the program loads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Expr, Pos, Program, Stmt};
use super::types::{field_of, Ty};
use crate::agg::AggKind;
use crate::domain::parse_date;

/// Signature of one declared output variable.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSig {
    pub kind: AggKind,
    pub arg: Option<u64>,
    pub indexed: bool,
    pub value_ty: Ty,
    pub weight_ty: Option<Ty>,
}

/// A program with every expression annotated by its resolved type,
/// ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub input_var: String,
    pub outputs: BTreeMap<String, OutputSig>,
    pub stmts: Vec<TStmt>,
    pub needs_weather: bool,
    pub needs_speed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmt {
    VarDecl { name: String, expr: TExpr },
    Assign { name: String, expr: TExpr, pos: Pos },
    /// `array` is the condition's scan array, evaluated once per loop;
    /// it never mentions the loop variable.
    ForEach { var: String, array: TExpr, cond: TExpr, body: Vec<TStmt>, pos: Pos },
    Visit { target: TExpr, clauses: Vec<TClause>, pos: Pos },
    Emit {
        output: String,
        index: Option<TExpr>,
        value: TExpr,
        weight: Option<TExpr>,
        pos: Pos,
    },
    ExprStmt { expr: TExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TClause {
    pub on: Ty, // County or Grid
    pub var: String,
    pub body: Vec<TStmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub ty: Ty,
    pub pos: Pos,
    pub kind: TExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Local(String),
    Field { recv: Box<TExpr>, name: &'static str, optional: bool },
    IndexOp { recv: Box<TExpr>, index: Box<TExpr> },
    GetWeather { grid: Box<TExpr>, date: Box<TExpr> },
    GetSpeed { grid: Box<TExpr>, date: Box<TExpr> },
    Def(Box<TExpr>),
    Binary { op: BinOp, lhs: Box<TExpr>, rhs: Box<TExpr> },
}

impl TExpr {
    fn mentions(&self, var: &str) -> bool {
        match &self.kind {
            TExprKind::Local(name) => name == var,
            TExprKind::Field { recv, .. } => recv.mentions(var),
            TExprKind::IndexOp { recv, index } => recv.mentions(var) || index.mentions(var),
            TExprKind::GetWeather { grid, date } | TExprKind::GetSpeed { grid, date } => {
                grid.mentions(var) || date.mentions(var)
            }
            TExprKind::Def(inner) => inner.mentions(var),
            TExprKind::Binary { lhs, rhs, .. } => lhs.mentions(var) || rhs.mentions(var),
            _ => false,
        }
    }

    /// Structural equality ignoring positions.
    fn same_shape(&self, other: &TExpr) -> bool {
        if self.ty != other.ty {
            return false;
        }
        match (&self.kind, &other.kind) {
            (TExprKind::Int(a), TExprKind::Int(b)) => a == b,
            (TExprKind::Float(a), TExprKind::Float(b)) => a == b,
            (TExprKind::Str(a), TExprKind::Str(b)) => a == b,
            (TExprKind::Bool(a), TExprKind::Bool(b)) => a == b,
            (TExprKind::Local(a), TExprKind::Local(b)) => a == b,
            (
                TExprKind::Field { recv: ra, name: na, .. },
                TExprKind::Field { recv: rb, name: nb, .. },
            ) => na == nb && ra.same_shape(rb),
            (
                TExprKind::IndexOp { recv: ra, index: ia },
                TExprKind::IndexOp { recv: rb, index: ib },
            ) => ra.same_shape(rb) && ia.same_shape(ib),
            (
                TExprKind::GetWeather { grid: ga, date: da },
                TExprKind::GetWeather { grid: gb, date: db },
            )
            | (
                TExprKind::GetSpeed { grid: ga, date: da },
                TExprKind::GetSpeed { grid: gb, date: db },
            ) => ga.same_shape(gb) && da.same_shape(db),
            (TExprKind::Def(a), TExprKind::Def(b)) => a.same_shape(b),
            (
                TExprKind::Binary { op: oa, lhs: la, rhs: ra },
                TExprKind::Binary { op: ob, lhs: lb, rhs: rb },
            ) => oa == ob && la.same_shape(lb) && ra.same_shape(rb),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {}:{}: {kind}", pos.line, pos.col)]
pub struct CheckError {
    pub pos: Pos,
    pub kind: CheckErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckErrorKind {
    NoInput,
    MultipleInputs,
    InputNotCounty { found: String },
    UnknownType { name: String },
    UnknownAggregator { name: String },
    BadAggregatorArgument { detail: String },
    BadOutputDecl { detail: String },
    DuplicateName { name: String },
    UnknownIdent { name: String },
    WriteOnlyOutput { name: String },
    UnknownField { ty: Ty, name: String },
    NotAList { ty: Ty },
    TypeMismatch { expected: String, found: String },
    UnknownOutput { name: String },
    EmitMismatch { detail: String },
    UnknownCall { name: String },
    CallArity { name: String, expected: usize, found: usize },
    BadDateLiteral { detail: String },
    ConditionNoArray,
    AmbiguousCondition,
    BadAssignTarget { name: String },
    BadVisit { detail: String },
}

impl fmt::Display for CheckErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CheckErrorKind::*;
        match self {
            NoInput => write!(f, "program has no input declaration"),
            MultipleInputs => write!(f, "program declares more than one input"),
            InputNotCounty { found } => write!(f, "input must be County, found {}", found),
            UnknownType { name } => write!(f, "unknown type {:?}", name),
            UnknownAggregator { name } => write!(f, "unknown aggregator {:?}", name),
            BadAggregatorArgument { detail } => write!(f, "{}", detail),
            BadOutputDecl { detail } => write!(f, "{}", detail),
            DuplicateName { name } => write!(f, "{:?} is already declared", name),
            UnknownIdent { name } => write!(f, "unknown identifier {:?}", name),
            WriteOnlyOutput { name } => {
                write!(f, "output variable {:?} is write-only; it cannot be read", name)
            }
            UnknownField { ty, name } => write!(f, "{} has no field {:?}", ty, name),
            NotAList { ty } => write!(f, "{} cannot be indexed", ty),
            TypeMismatch { expected, found } => {
                write!(f, "expected {}, found {}", expected, found)
            }
            UnknownOutput { name } => write!(f, "emission to undeclared output {:?}", name),
            EmitMismatch { detail } => write!(f, "{}", detail),
            UnknownCall { name } => write!(f, "unknown function {:?}", name),
            CallArity { name, expected, found } => {
                write!(f, "{} takes {} arguments, found {}", name, expected, found)
            }
            BadDateLiteral { detail } => write!(f, "{}", detail),
            ConditionNoArray => {
                write!(f, "foreach condition must index an array with the loop variable")
            }
            AmbiguousCondition => {
                write!(f, "foreach condition must index exactly one array with the loop variable")
            }
            BadAssignTarget { name } => write!(f, "cannot assign to {:?}", name),
            BadVisit { detail } => write!(f, "{}", detail),
        }
    }
}

fn err(pos: Pos, kind: CheckErrorKind) -> CheckError {
    CheckError { pos, kind }
}

struct Checker {
    outputs: BTreeMap<String, OutputSig>,
    scopes: Vec<HashMap<String, Ty>>,
    input_var: Option<String>,
    needs_weather: bool,
    needs_speed: bool,
}

/// Checks a parsed program against the domain schema.
pub fn typecheck(program: &Program) -> Result<TypedProgram, CheckError> {
    let mut c = Checker {
        outputs: BTreeMap::new(),
        scopes: vec![HashMap::new()],
        input_var: None,
        needs_weather: false,
        needs_speed: false,
    };
    let stmts = c.block(&program.stmts, true)?;
    let input_var = match c.input_var {
        Some(name) => name,
        None => {
            let pos = program.stmts.first().map(Stmt::pos).unwrap_or_default();
            return Err(err(pos, CheckErrorKind::NoInput));
        }
    };
    Ok(TypedProgram {
        input_var,
        outputs: c.outputs,
        stmts,
        needs_weather: c.needs_weather,
        needs_speed: c.needs_speed,
    })
}

impl Checker {
    fn lookup(&self, name: &str) -> Option<&Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, name: &str, ty: Ty, pos: Pos) -> Result<(), CheckError> {
        if self.outputs.contains_key(name)
            || self.scopes.last().unwrap().contains_key(name)
            || self.input_var.as_deref() == Some(name)
        {
            return Err(err(pos, CheckErrorKind::DuplicateName { name: name.into() }));
        }
        self.scopes.last_mut().unwrap().insert(name.to_string(), ty);
        Ok(())
    }

    fn resolve_type(&self, name: &str, pos: Pos) -> Result<Ty, CheckError> {
        Ty::from_name(name).ok_or_else(|| err(pos, CheckErrorKind::UnknownType { name: name.into() }))
    }

    fn block(&mut self, stmts: &[Stmt], top_level: bool) -> Result<Vec<TStmt>, CheckError> {
        let mut out = Vec::new();
        for stmt in stmts {
            if !top_level && matches!(stmt, Stmt::Input { .. } | Stmt::Output { .. }) {
                return Err(err(
                    stmt.pos(),
                    CheckErrorKind::BadOutputDecl {
                        detail: "input/output declarations must be at the top level".into(),
                    },
                ));
            }
            if let Some(t) = self.statement(stmt)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    fn statement(&mut self, stmt: &Stmt) -> Result<Option<TStmt>, CheckError> {
        match stmt {
            Stmt::Input { name, ty, pos } => {
                if self.input_var.is_some() {
                    return Err(err(*pos, CheckErrorKind::MultipleInputs));
                }
                let resolved = self.resolve_type(ty, *pos)?;
                if resolved != Ty::County {
                    return Err(err(*pos, CheckErrorKind::InputNotCounty { found: ty.clone() }));
                }
                if self.outputs.contains_key(name) || self.lookup(name).is_some() {
                    return Err(err(*pos, CheckErrorKind::DuplicateName { name: name.clone() }));
                }
                self.input_var = Some(name.clone());
                self.scopes[0].insert(name.clone(), Ty::County);
                Ok(None)
            }
            Stmt::Output { name, agg, arg, index_ty, value_ty, weight_ty, pos } => {
                self.output_decl(name, agg, *arg, index_ty, value_ty, weight_ty, *pos)?;
                Ok(None)
            }
            Stmt::VarDecl { name, expr, pos } => {
                let texpr = self.expr(expr)?;
                self.declare(name, texpr.ty.clone(), *pos)?;
                Ok(Some(TStmt::VarDecl { name: clone_name(name), expr: texpr }))
            }
            Stmt::Assign { name, expr, pos } => {
                let texpr = self.expr(expr)?;
                if self.outputs.contains_key(name) || self.input_var.as_deref() == Some(name) {
                    return Err(err(*pos, CheckErrorKind::BadAssignTarget { name: name.clone() }));
                }
                let var_ty = self
                    .lookup(name)
                    .cloned()
                    .ok_or_else(|| err(*pos, CheckErrorKind::UnknownIdent { name: name.clone() }))?;
                if !assignable(&var_ty, &texpr.ty) {
                    return Err(err(
                        expr.pos(),
                        CheckErrorKind::TypeMismatch {
                            expected: var_ty.to_string(),
                            found: texpr.ty.to_string(),
                        },
                    ));
                }
                Ok(Some(TStmt::Assign { name: name.clone(), expr: texpr, pos: *pos }))
            }
            Stmt::ForEach { var, var_ty, cond, body, pos } => {
                let resolved = self.resolve_type(var_ty, *pos)?;
                if resolved != Ty::Int {
                    return Err(err(
                        *pos,
                        CheckErrorKind::TypeMismatch {
                            expected: "int loop variable".into(),
                            found: resolved.to_string(),
                        },
                    ));
                }
                self.scopes.push(HashMap::new());
                self.declare(var, Ty::Int, *pos)?;
                let tcond = self.expr(cond)?;
                if tcond.ty != Ty::Bool {
                    return Err(err(
                        cond.pos(),
                        CheckErrorKind::TypeMismatch {
                            expected: "bool condition".into(),
                            found: tcond.ty.to_string(),
                        },
                    ));
                }
                let array = scan_array(&tcond, var, cond.pos())?;
                let tbody = self.block(body, false)?;
                self.scopes.pop();
                Ok(Some(TStmt::ForEach {
                    var: var.clone(),
                    array,
                    cond: tcond,
                    body: tbody,
                    pos: *pos,
                }))
            }
            Stmt::Visit { target, clauses, pos } => {
                let ttarget = self.expr(target)?;
                if ttarget.ty != Ty::County {
                    return Err(err(
                        target.pos(),
                        CheckErrorKind::BadVisit {
                            detail: format!("visit target must be County, found {}", ttarget.ty),
                        },
                    ));
                }
                let mut tclauses = Vec::new();
                for clause in clauses {
                    let on = self.resolve_type(&clause.ty, clause.pos)?;
                    if on != Ty::County && on != Ty::Grid {
                        return Err(err(
                            clause.pos,
                            CheckErrorKind::BadVisit {
                                detail: format!(
                                    "before clauses may name County or Grid, found {}",
                                    on
                                ),
                            },
                        ));
                    }
                    self.scopes.push(HashMap::new());
                    self.declare(&clause.var, on.clone(), clause.pos)?;
                    let body = self.block(&clause.body, false)?;
                    self.scopes.pop();
                    tclauses.push(TClause { on, var: clause.var.clone(), body });
                }
                Ok(Some(TStmt::Visit { target: ttarget, clauses: tclauses, pos: *pos }))
            }
            Stmt::Emit { output, index, value, weight, pos } => {
                self.emit(output, index.as_ref(), value, weight.as_ref(), *pos).map(Some)
            }
            Stmt::ExprStmt { expr, .. } => {
                let texpr = self.expr(expr)?;
                Ok(Some(TStmt::ExprStmt { expr: texpr }))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn output_decl(
        &mut self,
        name: &str,
        agg: &str,
        arg: Option<i64>,
        index_ty: &Option<String>,
        value_ty: &str,
        weight_ty: &Option<String>,
        pos: Pos,
    ) -> Result<(), CheckError> {
        let kind = AggKind::from_name(agg)
            .ok_or_else(|| err(pos, CheckErrorKind::UnknownAggregator { name: agg.into() }))?;
        let arg = match arg {
            Some(n) if n >= 1 => Some(n as u64),
            Some(n) => {
                return Err(err(
                    pos,
                    CheckErrorKind::BadAggregatorArgument {
                        detail: format!("{} argument must be positive, found {}", kind, n),
                    },
                ))
            }
            None => None,
        };
        crate::agg::AggSpec::new(kind, arg).map_err(|e| {
            err(pos, CheckErrorKind::BadAggregatorArgument { detail: e.to_string() })
        })?;

        let indexed = match index_ty {
            None => false,
            Some(ix) => {
                let resolved = self.resolve_type(ix, pos)?;
                if resolved != Ty::Str {
                    return Err(err(
                        pos,
                        CheckErrorKind::BadOutputDecl {
                            detail: format!("index type must be string, found {}", resolved),
                        },
                    ));
                }
                true
            }
        };

        let value = self.resolve_type(value_ty, pos)?;
        let weight = match weight_ty {
            None => None,
            Some(w) => Some(self.resolve_type(w, pos)?),
        };

        let detail = |d: String| err(pos, CheckErrorKind::BadOutputDecl { detail: d });
        match kind {
            AggKind::Mean | AggKind::Stdev | AggKind::Quantile => {
                if !value.is_numeric() {
                    return Err(detail(format!("{} aggregates numeric values, found {}", kind, value)));
                }
                if weight.is_some() {
                    return Err(detail(format!("{} does not take a weight", kind)));
                }
            }
            AggKind::Maximum | AggKind::Minimum => {
                if !value.is_scalar() {
                    return Err(detail(format!("{} values must be scalar, found {}", kind, value)));
                }
                match &weight {
                    Some(w) if !w.is_numeric() => {
                        return Err(detail(format!("{} weight must be numeric, found {}", kind, w)))
                    }
                    Some(_) => {}
                    // Without a declared weight the value ranks itself.
                    None if !value.is_numeric() => {
                        return Err(detail(format!(
                            "{} of {} requires a weight declaration",
                            kind, value
                        )))
                    }
                    None => {}
                }
            }
            AggKind::Top => {
                if !value.is_scalar() {
                    return Err(detail(format!("top values must be scalar, found {}", value)));
                }
                if let Some(w) = &weight {
                    if *w != Ty::Int {
                        return Err(detail(format!("top weight must be int, found {}", w)));
                    }
                }
            }
        }

        if self.lookup(name).is_some() || self.input_var.as_deref() == Some(name) {
            return Err(err(pos, CheckErrorKind::DuplicateName { name: name.into() }));
        }
        let sig = OutputSig { kind, arg, indexed, value_ty: value, weight_ty: weight };
        if self.outputs.insert(name.to_string(), sig).is_some() {
            return Err(err(pos, CheckErrorKind::DuplicateName { name: name.into() }));
        }
        Ok(())
    }

    fn emit(
        &mut self,
        output: &str,
        index: Option<&Expr>,
        value: &Expr,
        weight: Option<&Expr>,
        pos: Pos,
    ) -> Result<TStmt, CheckError> {
        let sig = self
            .outputs
            .get(output)
            .cloned()
            .ok_or_else(|| err(pos, CheckErrorKind::UnknownOutput { name: output.into() }))?;
        let mismatch = |d: String| err(pos, CheckErrorKind::EmitMismatch { detail: d });

        let tindex = match (sig.indexed, index) {
            (true, Some(ix)) => {
                let t = self.expr(ix)?;
                if t.ty != Ty::Str {
                    return Err(mismatch(format!("index must be string, found {}", t.ty)));
                }
                Some(t)
            }
            (true, None) => {
                return Err(mismatch(format!("output {:?} is indexed; emission needs an index", output)))
            }
            (false, Some(_)) => {
                return Err(mismatch(format!("output {:?} is not indexed", output)))
            }
            (false, None) => None,
        };

        let tvalue = self.expr(value)?;
        let value_ok = match sig.kind {
            // Moment folds accept any numeric emission.
            AggKind::Mean | AggKind::Stdev => tvalue.ty.is_numeric(),
            _ => tvalue.ty == sig.value_ty || (tvalue.ty == Ty::Int && sig.value_ty == Ty::Float),
        };
        if !value_ok {
            return Err(err(
                value.pos(),
                CheckErrorKind::EmitMismatch {
                    detail: format!(
                        "output {:?} takes {} values, found {}",
                        output, sig.value_ty, tvalue.ty
                    ),
                },
            ));
        }

        let tweight = match (&sig.weight_ty, weight) {
            (Some(declared), Some(w)) => {
                let t = self.expr(w)?;
                let ok = t.ty == *declared || (t.ty == Ty::Int && *declared == Ty::Float);
                if !ok {
                    return Err(err(
                        w.pos(),
                        CheckErrorKind::EmitMismatch {
                            detail: format!("weight must be {}, found {}", declared, t.ty),
                        },
                    ));
                }
                Some(t)
            }
            (Some(_), None) if sig.kind == AggKind::Top => None, // defaults to 1
            (Some(declared), None) => {
                return Err(mismatch(format!(
                    "output {:?} declares weight {}; emission needs a weight",
                    output, declared
                )))
            }
            (None, Some(_)) => {
                return Err(mismatch(format!("output {:?} declares no weight", output)))
            }
            (None, None) => None,
        };

        Ok(TStmt::Emit { output: output.to_string(), index: tindex, value: tvalue, weight: tweight, pos })
    }

    fn expr(&mut self, expr: &Expr) -> Result<TExpr, CheckError> {
        let pos = expr.pos();
        match expr {
            Expr::Int(v, _) => Ok(TExpr { ty: Ty::Int, pos, kind: TExprKind::Int(*v) }),
            Expr::Float(v, _) => Ok(TExpr { ty: Ty::Float, pos, kind: TExprKind::Float(*v) }),
            Expr::Str(v, _) => Ok(TExpr { ty: Ty::Str, pos, kind: TExprKind::Str(v.clone()) }),
            Expr::Bool(v, _) => Ok(TExpr { ty: Ty::Bool, pos, kind: TExprKind::Bool(*v) }),
            Expr::Ident(name, _) => {
                if let Some(ty) = self.lookup(name) {
                    Ok(TExpr { ty: ty.clone(), pos, kind: TExprKind::Local(name.clone()) })
                } else if self.outputs.contains_key(name) {
                    Err(err(pos, CheckErrorKind::WriteOnlyOutput { name: name.clone() }))
                } else {
                    Err(err(pos, CheckErrorKind::UnknownIdent { name: name.clone() }))
                }
            }
            Expr::Field(recv, field, _) => {
                let trecv = self.expr(recv)?;
                let info = field_of(&trecv.ty, field).ok_or_else(|| {
                    err(pos, CheckErrorKind::UnknownField { ty: trecv.ty.clone(), name: field.clone() })
                })?;
                if info.canonical == "weatherRoot" {
                    self.needs_weather = true;
                }
                if info.canonical == "speedRoot" {
                    self.needs_speed = true;
                }
                Ok(TExpr {
                    ty: info.ty,
                    pos,
                    kind: TExprKind::Field {
                        recv: Box::new(trecv),
                        name: info.canonical,
                        optional: info.optional,
                    },
                })
            }
            Expr::Index(recv, idx, _) => {
                let trecv = self.expr(recv)?;
                let elem = match &trecv.ty {
                    Ty::List(inner) => inner.as_ref().clone(),
                    other => return Err(err(pos, CheckErrorKind::NotAList { ty: other.clone() })),
                };
                let tidx = self.expr(idx)?;
                if tidx.ty != Ty::Int {
                    return Err(err(
                        idx.pos(),
                        CheckErrorKind::TypeMismatch {
                            expected: "int index".into(),
                            found: tidx.ty.to_string(),
                        },
                    ));
                }
                Ok(TExpr {
                    ty: elem,
                    pos,
                    kind: TExprKind::IndexOp { recv: Box::new(trecv), index: Box::new(tidx) },
                })
            }
            Expr::Call(name, args, _) => self.call(name, args, pos),
            Expr::Def(inner, _) => {
                let tinner = self.expr(inner)?;
                Ok(TExpr { ty: Ty::Bool, pos, kind: TExprKind::Def(Box::new(tinner)) })
            }
            Expr::Binary(op, lhs, rhs, _) => {
                let tl = self.expr(lhs)?;
                let tr = self.expr(rhs)?;
                let ty = binary_type(*op, &tl.ty, &tr.ty).ok_or_else(|| {
                    err(
                        pos,
                        CheckErrorKind::TypeMismatch {
                            expected: format!("matching operands for '{}'", op.symbol()),
                            found: format!("{} and {}", tl.ty, tr.ty),
                        },
                    )
                })?;
                Ok(TExpr {
                    ty,
                    pos,
                    kind: TExprKind::Binary { op: *op, lhs: Box::new(tl), rhs: Box::new(tr) },
                })
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], pos: Pos) -> Result<TExpr, CheckError> {
        let (is_weather, result_ty) = match name {
            "getweather" => (true, Ty::WeatherRoot),
            "getspeed" => (false, Ty::SpeedRoot),
            _ => return Err(err(pos, CheckErrorKind::UnknownCall { name: name.into() })),
        };
        if args.len() != 2 {
            return Err(err(
                pos,
                CheckErrorKind::CallArity { name: name.into(), expected: 2, found: args.len() },
            ));
        }
        let grid = self.expr(&args[0])?;
        if grid.ty != Ty::Grid {
            return Err(err(
                args[0].pos(),
                CheckErrorKind::TypeMismatch { expected: "Grid".into(), found: grid.ty.to_string() },
            ));
        }
        let date = self.expr(&args[1])?;
        if date.ty != Ty::Str {
            return Err(err(
                args[1].pos(),
                CheckErrorKind::TypeMismatch {
                    expected: "string date".into(),
                    found: date.ty.to_string(),
                },
            ));
        }
        // Literal dates are validated now; dynamic ones at run time.
        if let TExprKind::Str(text) = &date.kind {
            parse_date(text).map_err(|e| {
                err(args[1].pos(), CheckErrorKind::BadDateLiteral { detail: e.to_string() })
            })?;
        }
        if is_weather {
            self.needs_weather = true;
            Ok(TExpr {
                ty: result_ty,
                pos,
                kind: TExprKind::GetWeather { grid: Box::new(grid), date: Box::new(date) },
            })
        } else {
            self.needs_speed = true;
            Ok(TExpr {
                ty: result_ty,
                pos,
                kind: TExprKind::GetSpeed { grid: Box::new(grid), date: Box::new(date) },
            })
        }
    }
}

fn clone_name(name: &str) -> String {
    name.to_string()
}

fn assignable(var: &Ty, expr: &Ty) -> bool {
    var == expr || (*var == Ty::Float && *expr == Ty::Int)
}

fn binary_type(op: BinOp, lhs: &Ty, rhs: &Ty) -> Option<Ty> {
    use BinOp::*;
    match op {
        Add | Sub | Mul | Div => match (lhs, rhs) {
            (Ty::Int, Ty::Int) => Some(Ty::Int),
            (a, b) if a.is_numeric() && b.is_numeric() => Some(Ty::Float),
            _ => None,
        },
        Lt | Le | Gt | Ge => match (lhs, rhs) {
            (a, b) if a.is_numeric() && b.is_numeric() => Some(Ty::Bool),
            (Ty::Str, Ty::Str) => Some(Ty::Bool),
            _ => None,
        },
        Eq | Ne => match (lhs, rhs) {
            (a, b) if a.is_numeric() && b.is_numeric() => Some(Ty::Bool),
            (Ty::Str, Ty::Str) | (Ty::Bool, Ty::Bool) => Some(Ty::Bool),
            _ => None,
        },
    }
}

/// Finds the single array the condition scans: every index operation
/// whose subscript mentions the loop variable must target one
/// structurally identical list expression, and that expression must
/// not itself depend on the loop variable.
fn scan_array(cond: &TExpr, var: &str, pos: Pos) -> Result<TExpr, CheckError> {
    let mut arrays: Vec<&TExpr> = Vec::new();
    collect_scanned(cond, var, &mut arrays);
    let first = match arrays.first() {
        None => return Err(err(pos, CheckErrorKind::ConditionNoArray)),
        Some(first) => *first,
    };
    if arrays.iter().any(|a| !a.same_shape(first)) {
        return Err(err(pos, CheckErrorKind::AmbiguousCondition));
    }
    if first.mentions(var) {
        return Err(err(pos, CheckErrorKind::AmbiguousCondition));
    }
    Ok(first.clone())
}

fn collect_scanned<'a>(expr: &'a TExpr, var: &str, out: &mut Vec<&'a TExpr>) {
    match &expr.kind {
        TExprKind::IndexOp { recv, index } => {
            if index.mentions(var) {
                out.push(recv);
            }
            collect_scanned(recv, var, out);
            collect_scanned(index, var, out);
        }
        TExprKind::Field { recv, .. } => collect_scanned(recv, var, out),
        TExprKind::GetWeather { grid, date } | TExprKind::GetSpeed { grid, date } => {
            collect_scanned(grid, var, out);
            collect_scanned(date, var, out);
        }
        TExprKind::Def(inner) => collect_scanned(inner, var, out),
        TExprKind::Binary { lhs, rhs, .. } => {
            collect_scanned(lhs, var, out);
            collect_scanned(rhs, var, out);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_source;

    fn check(src: &str) -> Result<TypedProgram, CheckError> {
        typecheck(&parse_source(src).unwrap())
    }

    const SPEED_BODY: &str = "visit (p, visitor {
        before n: Grid -> {
            speedRoot := getspeed(n, \"5-11-2017\");
            foreach (s : int; def(speedRoot.speeds[s])) {
                average[p.countyName] << speedRoot.speeds[s].speed;
            }
        }
    });";

    #[test]
    fn speed_program_needs_speed_loads_only() {
        let src = format!(
            "p: County = input;\naverage: output mean[string] of int;\n{}",
            SPEED_BODY
        );
        let typed = check(&src).unwrap();
        assert!(typed.needs_speed);
        assert!(!typed.needs_weather);
        let sig = &typed.outputs["average"];
        assert_eq!(sig.kind, AggKind::Mean);
        assert!(sig.indexed);
    }

    #[test]
    fn string_emitted_to_numeric_mean_is_an_error() {
        let e = check("p: County = input;\nm: output mean of int;\nm << p.countyName;")
            .unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::EmitMismatch { .. }));
        assert_eq!(e.pos.line, 3);
    }

    #[test]
    fn undeclared_output_is_an_error() {
        let e = check("p: County = input;\navg << 1;").unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::UnknownOutput { .. }));
    }

    #[test]
    fn emit_to_indexed_output_requires_index() {
        let src = "p: County = input;\nmax: output maximum(1)[string] of string weight float;\nmax << p.countyName weight 1.0;";
        let e = check(src).unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::EmitMismatch { .. }));
    }

    #[test]
    fn index_on_plain_output_is_an_error() {
        let src = "p: County = input;\nm: output mean of float;\nm[p.countyName] << 1.0;";
        assert!(check(src).is_err());
    }

    #[test]
    fn outputs_are_write_only() {
        let src = "p: County = input;\nm: output mean of float;\nx := m + 1.0;";
        let e = check(src).unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::WriteOnlyOutput { .. }));
    }

    #[test]
    fn aggregator_argument_rules_apply() {
        assert!(check("p: County = input;\nq: output quantile(1) of float;").is_err());
        assert!(check("p: County = input;\nq: output quantile(4) of float;").is_ok());
        assert!(check("p: County = input;\nm: output maximum(0) of float;").is_err());
        assert!(check("p: County = input;\nm: output mean(2) of float;").is_err());
    }

    #[test]
    fn unknown_aggregator_reported() {
        let e = check("p: County = input;\nm: output median of float;").unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::UnknownAggregator { .. }));
    }

    #[test]
    fn foreach_condition_must_index_an_array() {
        let src = "p: County = input;\nforeach (i : int; i < 3) { i++; }";
        let e = check(src).unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::ConditionNoArray));
    }

    #[test]
    fn foreach_condition_with_two_arrays_is_ambiguous() {
        let src = "p: County = input;
foreach (i : int; p.grid[i].lat < p.grid[i].weatherRoot.weather[i].time) { i++; }";
        let e = check(src).unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::AmbiguousCondition));
    }

    #[test]
    fn integer_division_stays_integer() {
        let typed = check("p: County = input;\nx := 7 / 2;\ny := 7.0 / 2;").unwrap();
        let TStmt::VarDecl { expr, .. } = &typed.stmts[0] else { panic!() };
        assert_eq!(expr.ty, Ty::Int);
        let TStmt::VarDecl { expr, .. } = &typed.stmts[1] else { panic!() };
        assert_eq!(expr.ty, Ty::Float);
    }

    #[test]
    fn date_literals_validated_at_check_time() {
        let src = "p: County = input;
visit (p, visitor { before n: Grid -> { w := getweather(n, \"13-40-2017\"); } });";
        let e = check(src).unwrap_err();
        assert!(matches!(e.kind, CheckErrorKind::BadDateLiteral { .. }));
    }

    #[test]
    fn input_must_be_county_and_unique() {
        assert!(matches!(check("x := 1;").unwrap_err().kind, CheckErrorKind::NoInput));
        assert!(matches!(
            check("p: Grid = input;").unwrap_err().kind,
            CheckErrorKind::InputNotCounty { .. }
        ));
        assert!(matches!(
            check("p: County = input;\nq: County = input;").unwrap_err().kind,
            CheckErrorKind::MultipleInputs
        ));
    }

    #[test]
    fn top_weight_must_be_int() {
        assert!(check("p: County = input;\nt: output top(5) of string weight float;").is_err());
        assert!(check("p: County = input;\nt: output top(5) of string weight int;").is_ok());
    }

    #[test]
    fn shadowing_in_inner_scope_is_allowed() {
        let src = "p: County = input;
x := 1;
foreach (i : int; def(p.grid[i])) {
    x := 2.0;
    x = 3.0;
}";
        assert!(check(src).is_ok());
    }

    #[test]
    fn field_aliases_resolve() {
        let src = "p: County = input;
foreach (i : int; def(p.grids[i])) {
    w := getweather(p.grids[i], \"5-11-2017\");
    foreach (j : int; def(w.weatherRecords[j])) {
        t := w.weatherRecords[j].time;
    }
}";
        assert!(check(src).is_ok());
    }
}
