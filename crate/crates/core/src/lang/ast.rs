/// Source position, 1-based. Positions are ignored by [`Program::stripped`]
/// so structural comparisons survive reformatting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `p: County = input;`
    Input { name: String, ty: String, pos: Pos },
    /// `max: output maximum(1)[string] of string weight float;`
    Output {
        name: String,
        agg: String,
        arg: Option<i64>,
        index_ty: Option<String>,
        value_ty: String,
        weight_ty: Option<String>,
        pos: Pos,
    },
    /// `sum := 0.0;`
    VarDecl { name: String, expr: Expr, pos: Pos },
    /// `sum = sum + x;` — `count++;` parses as `count = count + 1;`
    Assign { name: String, expr: Expr, pos: Pos },
    /// `foreach (i : int; cond) body`
    ForEach { var: String, var_ty: String, cond: Expr, body: Vec<Stmt>, pos: Pos },
    /// `visit (expr, visitor { before n: Grid -> { ... } ... });`
    Visit { target: Expr, clauses: Vec<BeforeClause>, pos: Pos },
    /// `max[key] << value weight w;`
    Emit { output: String, index: Option<Expr>, value: Expr, weight: Option<Expr>, pos: Pos },
    /// A bare expression followed by `;`.
    ExprStmt { expr: Expr, pos: Pos },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeforeClause {
    pub var: String,
    pub ty: String,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64, Pos),
    Float(f64, Pos),
    Str(String, Pos),
    Bool(bool, Pos),
    Ident(String, Pos),
    /// `recv.field`
    Field(Box<Expr>, String, Pos),
    /// `recv[index]`
    Index(Box<Expr>, Box<Expr>, Pos),
    /// `name(args...)` — builtins only.
    Call(String, Vec<Expr>, Pos),
    /// `def(expr)` presence test.
    Def(Box<Expr>, Pos),
    Binary(BinOp, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Int(_, p)
            | Expr::Float(_, p)
            | Expr::Str(_, p)
            | Expr::Bool(_, p)
            | Expr::Ident(_, p)
            | Expr::Field(_, _, p)
            | Expr::Index(_, _, p)
            | Expr::Call(_, _, p)
            | Expr::Def(_, p)
            | Expr::Binary(_, _, _, p) => *p,
        }
    }

    /// Copy with every position zeroed, for structural comparison.
    pub fn stripped(&self) -> Expr {
        let z = Pos::default();
        match self {
            Expr::Int(v, _) => Expr::Int(*v, z),
            Expr::Float(v, _) => Expr::Float(*v, z),
            Expr::Str(v, _) => Expr::Str(v.clone(), z),
            Expr::Bool(v, _) => Expr::Bool(*v, z),
            Expr::Ident(v, _) => Expr::Ident(v.clone(), z),
            Expr::Field(e, f, _) => Expr::Field(Box::new(e.stripped()), f.clone(), z),
            Expr::Index(e, i, _) => Expr::Index(Box::new(e.stripped()), Box::new(i.stripped()), z),
            Expr::Call(n, args, _) => {
                Expr::Call(n.clone(), args.iter().map(Expr::stripped).collect(), z)
            }
            Expr::Def(e, _) => Expr::Def(Box::new(e.stripped()), z),
            Expr::Binary(op, l, r, _) => {
                Expr::Binary(*op, Box::new(l.stripped()), Box::new(r.stripped()), z)
            }
        }
    }
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::Input { pos, .. }
            | Stmt::Output { pos, .. }
            | Stmt::VarDecl { pos, .. }
            | Stmt::Assign { pos, .. }
            | Stmt::ForEach { pos, .. }
            | Stmt::Visit { pos, .. }
            | Stmt::Emit { pos, .. }
            | Stmt::ExprStmt { pos, .. } => *pos,
        }
    }

    fn stripped(&self) -> Stmt {
        let z = Pos::default();
        match self {
            Stmt::Input { name, ty, .. } => Stmt::Input { name: name.clone(), ty: ty.clone(), pos: z },
            Stmt::Output { name, agg, arg, index_ty, value_ty, weight_ty, .. } => Stmt::Output {
                name: name.clone(),
                agg: agg.clone(),
                arg: *arg,
                index_ty: index_ty.clone(),
                value_ty: value_ty.clone(),
                weight_ty: weight_ty.clone(),
                pos: z,
            },
            Stmt::VarDecl { name, expr, .. } => {
                Stmt::VarDecl { name: name.clone(), expr: expr.stripped(), pos: z }
            }
            Stmt::Assign { name, expr, .. } => {
                Stmt::Assign { name: name.clone(), expr: expr.stripped(), pos: z }
            }
            Stmt::ForEach { var, var_ty, cond, body, .. } => Stmt::ForEach {
                var: var.clone(),
                var_ty: var_ty.clone(),
                cond: cond.stripped(),
                body: body.iter().map(Stmt::stripped).collect(),
                pos: z,
            },
            Stmt::Visit { target, clauses, .. } => Stmt::Visit {
                target: target.stripped(),
                clauses: clauses
                    .iter()
                    .map(|c| BeforeClause {
                        var: c.var.clone(),
                        ty: c.ty.clone(),
                        body: c.body.iter().map(Stmt::stripped).collect(),
                        pos: z,
                    })
                    .collect(),
                pos: z,
            },
            Stmt::Emit { output, index, value, weight, .. } => Stmt::Emit {
                output: output.clone(),
                index: index.as_ref().map(Expr::stripped),
                value: value.stripped(),
                weight: weight.as_ref().map(Expr::stripped),
                pos: z,
            },
            Stmt::ExprStmt { expr, .. } => Stmt::ExprStmt { expr: expr.stripped(), pos: z },
        }
    }
}

impl Program {
    /// Copy with all source positions zeroed.
    pub fn stripped(&self) -> Program {
        Program { stmts: self.stmts.iter().map(Stmt::stripped).collect() }
    }
}
