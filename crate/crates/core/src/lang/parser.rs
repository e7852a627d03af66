use thiserror::Error;

use super::ast::{BeforeClause, BinOp, Expr, Pos, Program, Stmt};
use super::lexer::tokenize;
use super::token::{Token, TokenKind};
use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub expected: Vec<String>,
    pub found: String,
    pub line: u32,
    pub col: u32,
}

/// Convenience: tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

/// Parses a token sequence into a program. No error recovery: the
/// first syntax error aborts with its expected-token set and position.
pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut stmts = Vec::new();
    while !p.at_end() {
        stmts.push(p.statement()?);
    }
    Ok(Program { stmts })
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.tokens.get(self.pos).map(|t| t.kind)
    }

    fn peek_kind_at(&self, offset: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| t.kind)
    }

    fn here(&self) -> Pos {
        match self.tokens.get(self.pos) {
            Some(t) => Pos { line: t.line, col: t.col },
            None => self
                .tokens
                .last()
                .map(|t| Pos { line: t.line, col: t.col + 1 })
                .unwrap_or(Pos { line: 1, col: 1 }),
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let pos = self.here();
        let found = match self.tokens.get(self.pos) {
            Some(t) if t.kind == TokenKind::Ident => format!("identifier {:?}", t.lexeme),
            Some(t) => t.kind.describe().to_string(),
            None => "end of input".to_string(),
        };
        ParseError {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
            line: pos.line,
            col: pos.col,
        }
    }

    fn advance(&mut self) -> &'a Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'a Token, ParseError> {
        if self.peek_kind() == Some(kind) {
            Ok(self.advance())
        } else {
            Err(self.error(&[kind.describe()]))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        if self.peek_kind() == Some(TokenKind::Ident) {
            let t = self.advance();
            Ok((t.lexeme.clone(), Pos { line: t.line, col: t.col }))
        } else {
            Err(self.error(&[what]))
        }
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::KwForeach) => self.foreach_stmt(),
            Some(TokenKind::KwVisit) => self.visit_stmt(),
            Some(TokenKind::Ident) => match self.peek_kind_at(1) {
                Some(TokenKind::Colon) => self.declaration(),
                Some(TokenKind::Declare) => self.var_decl(),
                Some(TokenKind::Assign) => self.assignment(),
                Some(TokenKind::PlusPlus) => self.increment(),
                Some(TokenKind::EmitOp) => self.emit_stmt(),
                Some(TokenKind::LBracket) if self.bracket_precedes_emit() => self.emit_stmt(),
                _ => self.expr_stmt(),
            },
            Some(_) => self.expr_stmt(),
            None => Err(self.error(&["statement"])),
        }
    }

    /// Looks past `ident [ ... ]` for `<<`, to tell an indexed emit
    /// from an expression statement.
    fn bracket_precedes_emit(&self) -> bool {
        debug_assert_eq!(self.peek_kind_at(1), Some(TokenKind::LBracket));
        let mut depth = 0usize;
        let mut i = self.pos + 1;
        while let Some(t) = self.tokens.get(i) {
            match t.kind {
                TokenKind::LBracket => depth += 1,
                TokenKind::RBracket => {
                    depth -= 1;
                    if depth == 0 {
                        return self.tokens.get(i + 1).map(|t| t.kind) == Some(TokenKind::EmitOp);
                    }
                }
                _ => {}
            }
            i += 1;
        }
        false
    }

    /// `ident :` — either an input declaration or an output declaration.
    fn declaration(&mut self) -> Result<Stmt, ParseError> {
        let (name, pos) = self.expect_ident("identifier")?;
        self.expect(TokenKind::Colon)?;
        if self.peek_kind() == Some(TokenKind::KwOutput) {
            self.advance();
            let (agg, _) = self.expect_ident("aggregator name")?;
            let mut arg = None;
            if self.eat(TokenKind::LParen) {
                let t = self.expect(TokenKind::Int)?;
                arg = Some(t.lexeme.parse::<i64>().expect("lexer-validated integer"));
                self.expect(TokenKind::RParen)?;
            }
            let mut index_ty = None;
            if self.eat(TokenKind::LBracket) {
                index_ty = Some(self.expect_ident("index type")?.0);
                self.expect(TokenKind::RBracket)?;
            }
            self.expect(TokenKind::KwOf)?;
            let (value_ty, _) = self.expect_ident("value type")?;
            let mut weight_ty = None;
            if self.eat(TokenKind::KwWeight) {
                weight_ty = Some(self.expect_ident("weight type")?.0);
            }
            self.expect(TokenKind::Semi)?;
            Ok(Stmt::Output { name, agg, arg, index_ty, value_ty, weight_ty, pos })
        } else {
            let (ty, _) = self.expect_ident("type name")?;
            self.expect(TokenKind::Assign)?;
            self.expect(TokenKind::KwInput)?;
            self.expect(TokenKind::Semi)?;
            Ok(Stmt::Input { name, ty, pos })
        }
    }

    fn var_decl(&mut self) -> Result<Stmt, ParseError> {
        let (name, pos) = self.expect_ident("identifier")?;
        self.expect(TokenKind::Declare)?;
        let expr = self.expression()?;
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::VarDecl { name, expr, pos })
    }

    fn assignment(&mut self) -> Result<Stmt, ParseError> {
        let (name, pos) = self.expect_ident("identifier")?;
        self.expect(TokenKind::Assign)?;
        let expr = self.expression()?;
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::Assign { name, expr, pos })
    }

    /// `count++;` is sugar for `count = count + 1;`.
    fn increment(&mut self) -> Result<Stmt, ParseError> {
        let (name, pos) = self.expect_ident("identifier")?;
        self.expect(TokenKind::PlusPlus)?;
        self.expect(TokenKind::Semi)?;
        let expr = Expr::Binary(
            BinOp::Add,
            Box::new(Expr::Ident(name.clone(), pos)),
            Box::new(Expr::Int(1, pos)),
            pos,
        );
        Ok(Stmt::Assign { name, expr, pos })
    }

    fn emit_stmt(&mut self) -> Result<Stmt, ParseError> {
        let (output, pos) = self.expect_ident("output name")?;
        let mut index = None;
        if self.eat(TokenKind::LBracket) {
            index = Some(self.expression()?);
            self.expect(TokenKind::RBracket)?;
        }
        self.expect(TokenKind::EmitOp)?;
        let value = self.expression()?;
        let mut weight = None;
        if self.eat(TokenKind::KwWeight) {
            weight = Some(self.expression()?);
        }
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::Emit { output, index, value, weight, pos })
    }

    fn expr_stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.here();
        let expr = self.expression()?;
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::ExprStmt { expr, pos })
    }

    fn foreach_stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.here();
        self.expect(TokenKind::KwForeach)?;
        self.expect(TokenKind::LParen)?;
        let (var, _) = self.expect_ident("loop variable")?;
        self.expect(TokenKind::Colon)?;
        let (var_ty, _) = self.expect_ident("type name")?;
        self.expect(TokenKind::Semi)?;
        let cond = self.expression()?;
        self.expect(TokenKind::RParen)?;
        let body = self.block_or_single()?;
        Ok(Stmt::ForEach { var, var_ty, cond, body, pos })
    }

    fn visit_stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.here();
        self.expect(TokenKind::KwVisit)?;
        self.expect(TokenKind::LParen)?;
        let target = self.expression()?;
        self.expect(TokenKind::Comma)?;
        self.expect(TokenKind::KwVisitor)?;
        self.expect(TokenKind::LBrace)?;
        let mut clauses = Vec::new();
        while !self.eat(TokenKind::RBrace) {
            let cpos = self.here();
            self.expect(TokenKind::KwBefore)?;
            let (var, _) = self.expect_ident("clause variable")?;
            self.expect(TokenKind::Colon)?;
            let (ty, _) = self.expect_ident("type name")?;
            self.expect(TokenKind::Arrow)?;
            self.expect(TokenKind::LBrace)?;
            let body = self.block_rest()?;
            clauses.push(BeforeClause { var, ty, body, pos: cpos });
        }
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::Visit { target, clauses, pos })
    }

    /// Either `{ stmt* }` or a single brace-less statement.
    fn block_or_single(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if self.eat(TokenKind::LBrace) {
            self.block_rest()
        } else {
            Ok(vec![self.statement()?])
        }
    }

    /// Statements up to the matching `}` (the `{` is already consumed).
    fn block_rest(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        loop {
            if self.eat(TokenKind::RBrace) {
                return Ok(stmts);
            }
            if self.at_end() {
                return Err(self.error(&["'}'", "statement"]));
            }
            stmts.push(self.statement()?);
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Lt) => BinOp::Lt,
                Some(TokenKind::Le) => BinOp::Le,
                Some(TokenKind::Gt) => BinOp::Gt,
                Some(TokenKind::Ge) => BinOp::Ge,
                Some(TokenKind::EqEq) => BinOp::Eq,
                Some(TokenKind::Ne) => BinOp::Ne,
                _ => return Ok(lhs),
            };
            let pos = self.here();
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.here();
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            let pos = self.here();
            self.advance();
            let rhs = self.postfix()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.primary()?;
        loop {
            match self.peek_kind() {
                Some(TokenKind::Dot) => {
                    let pos = self.here();
                    self.advance();
                    let (field, _) = self.expect_ident("field name")?;
                    expr = Expr::Field(Box::new(expr), field, pos);
                }
                Some(TokenKind::LBracket) => {
                    let pos = self.here();
                    self.advance();
                    let idx = self.expression()?;
                    self.expect(TokenKind::RBracket)?;
                    expr = Expr::Index(Box::new(expr), Box::new(idx), pos);
                }
                _ => return Ok(expr),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.peek_kind() {
            Some(TokenKind::Int) => {
                let t = self.advance();
                Ok(Expr::Int(t.lexeme.parse().expect("lexer-validated integer"), pos))
            }
            Some(TokenKind::Float) => {
                let t = self.advance();
                Ok(Expr::Float(t.lexeme.parse().expect("lexer-validated float"), pos))
            }
            Some(TokenKind::Str) => {
                let t = self.advance();
                Ok(Expr::Str(t.lexeme.clone(), pos))
            }
            Some(TokenKind::KwTrue) => {
                self.advance();
                Ok(Expr::Bool(true, pos))
            }
            Some(TokenKind::KwFalse) => {
                self.advance();
                Ok(Expr::Bool(false, pos))
            }
            Some(TokenKind::KwDef) => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let inner = self.expression()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Def(Box::new(inner), pos))
            }
            Some(TokenKind::Ident) => {
                let t = self.advance();
                if self.eat(TokenKind::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(TokenKind::RParen) {
                        loop {
                            args.push(self.expression()?);
                            if self.eat(TokenKind::RParen) {
                                break;
                            }
                            self.expect(TokenKind::Comma)?;
                        }
                    }
                    Ok(Expr::Call(t.lexeme.clone(), args, pos))
                } else {
                    Ok(Expr::Ident(t.lexeme.clone(), pos))
                }
            }
            Some(TokenKind::LParen) => {
                self.advance();
                let inner = self.expression()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Program {
        parse_source(src).unwrap_or_else(|e| panic!("{src:?}: {e}"))
    }

    #[test]
    fn input_declaration() {
        let p = parse_ok("p: County = input;");
        assert_eq!(p.stmts.len(), 1);
        assert!(matches!(&p.stmts[0], Stmt::Input { name, ty, .. } if name == "p" && ty == "County"));
    }

    #[test]
    fn output_declaration_full_form() {
        let p = parse_ok("max: output maximum(1)[string] of string weight float;");
        match &p.stmts[0] {
            Stmt::Output { name, agg, arg, index_ty, value_ty, weight_ty, .. } => {
                assert_eq!(name, "max");
                assert_eq!(agg, "maximum");
                assert_eq!(*arg, Some(1));
                assert_eq!(index_ty.as_deref(), Some("string"));
                assert_eq!(value_ty, "string");
                assert_eq!(weight_ty.as_deref(), Some("float"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn increment_desugars_to_assignment() {
        let p = parse_ok("count++;");
        let direct = parse_ok("count = count + 1;");
        assert_eq!(p.stripped(), direct.stripped());
    }

    #[test]
    fn missing_semicolon_reports_expected_set() {
        let err = match parse_source("max << x weight 3.0") {
            Err(FrontendError::Parse(e)) => e,
            other => panic!("unexpected {other:?}"),
        };
        assert!(err.expected.contains(&"';'".to_string()));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn braceless_foreach_body() {
        let p = parse_ok("foreach (i : int; def(p.grid[i])) x++;");
        match &p.stmts[0] {
            Stmt::ForEach { body, .. } => assert_eq!(body.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn indexed_emit_vs_expression_statement() {
        let p = parse_ok("max[p.countyName] << 1.0 weight 2.0;");
        assert!(matches!(&p.stmts[0], Stmt::Emit { index: Some(_), weight: Some(_), .. }));
        // Not an emit: plain expression statement.
        let q = parse_ok("f(arr[i]);");
        assert!(matches!(&q.stmts[0], Stmt::ExprStmt { .. }));
    }

    #[test]
    fn precedence_groups_multiplication_first() {
        let p = parse_ok("x := 1 + 2 * 3 < 10;");
        let Stmt::VarDecl { expr, .. } = &p.stmts[0] else { panic!() };
        let Expr::Binary(BinOp::Lt, lhs, _, _) = expr else { panic!("top must be <") };
        let Expr::Binary(BinOp::Add, _, addr, _) = lhs.as_ref() else { panic!("lhs must be +") };
        assert!(matches!(addr.as_ref(), Expr::Binary(BinOp::Mul, _, _, _)));
    }

    #[test]
    fn visit_with_before_clause() {
        let p = parse_ok(
            "visit(p, visitor {\n    before n: Grid -> {\n        x := n.id;\n    }\n});",
        );
        match &p.stmts[0] {
            Stmt::Visit { clauses, .. } => {
                assert_eq!(clauses.len(), 1);
                assert_eq!(clauses[0].ty, "Grid");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
