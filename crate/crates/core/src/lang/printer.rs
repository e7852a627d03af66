//! Canonical pretty-printer. `parse(print(ast))` is structurally
//! identical to `ast` (positions aside), which the corpus round-trip
//! tests rely on.

use std::fmt::Write;

use super::ast::{BinOp, Expr, Program, Stmt};

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.stmts {
        print_stmt(&mut out, stmt, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    indent(out, level);
    match stmt {
        Stmt::Input { name, ty, .. } => {
            let _ = writeln!(out, "{}: {} = input;", name, ty);
        }
        Stmt::Output { name, agg, arg, index_ty, value_ty, weight_ty, .. } => {
            let _ = write!(out, "{}: output {}", name, agg);
            if let Some(arg) = arg {
                let _ = write!(out, "({})", arg);
            }
            if let Some(ix) = index_ty {
                let _ = write!(out, "[{}]", ix);
            }
            let _ = write!(out, " of {}", value_ty);
            if let Some(w) = weight_ty {
                let _ = write!(out, " weight {}", w);
            }
            out.push_str(";\n");
        }
        Stmt::VarDecl { name, expr, .. } => {
            let _ = writeln!(out, "{} := {};", name, print_expr(expr));
        }
        Stmt::Assign { name, expr, .. } => {
            let _ = writeln!(out, "{} = {};", name, print_expr(expr));
        }
        Stmt::ForEach { var, var_ty, cond, body, .. } => {
            let _ = writeln!(out, "foreach ({} : {}; {}) {{", var, var_ty, print_expr(cond));
            for s in body {
                print_stmt(out, s, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::Visit { target, clauses, .. } => {
            let _ = writeln!(out, "visit ({}, visitor {{", print_expr(target));
            for clause in clauses {
                indent(out, level + 1);
                let _ = writeln!(out, "before {}: {} -> {{", clause.var, clause.ty);
                for s in &clause.body {
                    print_stmt(out, s, level + 2);
                }
                indent(out, level + 1);
                out.push_str("}\n");
            }
            indent(out, level);
            out.push_str("});\n");
        }
        Stmt::Emit { output, index, value, weight, .. } => {
            let _ = write!(out, "{}", output);
            if let Some(ix) = index {
                let _ = write!(out, "[{}]", print_expr(ix));
            }
            let _ = write!(out, " << {}", print_expr(value));
            if let Some(w) = weight {
                let _ = write!(out, " weight {}", print_expr(w));
            }
            out.push_str(";\n");
        }
        Stmt::ExprStmt { expr, .. } => {
            let _ = writeln!(out, "{};", print_expr(expr));
        }
    }
}

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary(op, ..) if op.is_comparison() => 1,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 2,
        Expr::Binary(..) => 3,
        _ => 4,
    }
}

fn print_child(child: &Expr, parent_prec: u8, is_right: bool) -> String {
    let p = precedence(child);
    // Operators are left-associative, so a right child at equal
    // precedence needs parentheses to reparse identically.
    let needs_parens = p < parent_prec || (is_right && p == parent_prec);
    if needs_parens {
        format!("({})", print_expr(child))
    } else {
        print_expr(child)
    }
}

fn print_expr(expr: &Expr) -> String {
    match expr {
        Expr::Int(v, _) => v.to_string(),
        Expr::Float(v, _) => {
            // Keep a decimal point so the literal re-lexes as a float.
            if v.fract() == 0.0 {
                format!("{:.1}", v)
            } else {
                format!("{}", v)
            }
        }
        Expr::Str(s, _) => {
            let escaped: String = s
                .chars()
                .flat_map(|c| match c {
                    '"' => vec!['\\', '"'],
                    '\\' => vec!['\\', '\\'],
                    '\n' => vec!['\\', 'n'],
                    '\t' => vec!['\\', 't'],
                    other => vec![other],
                })
                .collect();
            format!("\"{}\"", escaped)
        }
        Expr::Bool(v, _) => v.to_string(),
        Expr::Ident(name, _) => name.clone(),
        Expr::Field(recv, field, _) => format!("{}.{}", print_child(recv, 4, false), field),
        Expr::Index(recv, idx, _) => {
            format!("{}[{}]", print_child(recv, 4, false), print_expr(idx))
        }
        Expr::Call(name, args, _) => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            format!("{}({})", name, args.join(", "))
        }
        Expr::Def(inner, _) => format!("def({})", print_expr(inner)),
        Expr::Binary(op, lhs, rhs, _) => {
            let prec = precedence(expr);
            format!("{} {} {}", print_child(lhs, prec, false), op.symbol(), print_child(rhs, prec, true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_source;

    fn round_trip(src: &str) {
        let ast = parse_source(src).unwrap();
        let printed = print_program(&ast);
        let reparsed = parse_source(&printed)
            .unwrap_or_else(|e| panic!("printed program failed to parse: {e}\n{printed}"));
        assert_eq!(ast.stripped(), reparsed.stripped(), "print/reparse mismatch for:\n{printed}");
    }

    #[test]
    fn round_trips_core_statement_forms() {
        round_trip("p: County = input;");
        round_trip("max: output maximum(1)[string] of string weight float;");
        round_trip("avg: output mean of float;");
        round_trip("x := 1 + 2 * 3;");
        round_trip("x = (1 + 2) * 3;");
        round_trip("count++;");
        round_trip("foreach (i : int; def(p.grid[i])) { x = x + p.grid[i].id; }");
        round_trip("visit (p, visitor {\n before n: Grid -> { y := getspeed(n, \"5-11-2017\"); }\n});");
        round_trip("max[p.countyName] << p.countyName weight sum / count;");
        round_trip("f(a, b, 1.5);");
    }

    #[test]
    fn parenthesization_preserves_structure() {
        round_trip("x := 1 - (2 - 3);");
        round_trip("x := (1 - 2) - 3;");
        round_trip("x := 2 * (3 + 4);");
        round_trip("x := 100.0 * a / b;");
        round_trip("x := a < b - c;");
    }

    #[test]
    fn whole_floats_keep_their_point() {
        let ast = parse_source("x := 2.0;").unwrap();
        assert_eq!(print_program(&ast), "x := 2.0;\n");
    }
}
