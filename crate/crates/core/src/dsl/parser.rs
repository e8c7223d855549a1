use std::collections::BTreeMap;

use crate::dictionary::Dimension;
use crate::record::Value;

use super::ast::{
    Constants, MetaPredicate, Operand, PredicateExpr, Script, SetExpr, Span, Statement,
};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Parses a cascade script.
pub fn parse_script(source: &str) -> Result<Script, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0, constants: BTreeMap::new(), set_refs: Vec::new() };
    p.script()
}

/// Parses a standalone predicate (as used in tree files). Set names must be
/// present in `constants`.
pub fn parse_predicate(text: &str, constants: &Constants) -> Result<PredicateExpr, ParseError> {
    let tokens: Vec<Token> = tokenize(text)?
        .into_iter()
        .filter(|t| !matches!(t.tok, Tok::Newline | Tok::Comment(_)))
        .collect();
    let mut p = Parser { tokens, pos: 0, constants: constants.clone(), set_refs: Vec::new() };
    let expr = p.expr()?;
    p.expect(|t| matches!(t, Tok::Eof), "end of predicate")?;
    p.check_set_refs()?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    constants: Constants,
    set_refs: Vec<(String, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            column: t.col,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, pred: impl Fn(&Tok) -> bool, expected: &str) -> Result<Token, ParseError> {
        if pred(&self.peek().tok) {
            Ok(self.advance())
        } else {
            Err(self.error_here(expected))
        }
    }

    /// Consumes an optional trailing comment and the end of the line.
    fn end_of_line(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek().tok, Tok::Comment(_)) {
            self.advance();
        }
        if matches!(self.peek().tok, Tok::Eof) {
            return Ok(());
        }
        self.expect(|t| matches!(t, Tok::Newline), "end of line").map(|_| ())
    }

    fn script(&mut self) -> Result<Script, ParseError> {
        let mut statements = Vec::new();
        // Comment lines seen since the last construct, as (line, text).
        let mut comments: Vec<(usize, String)> = Vec::new();
        let final_action;
        loop {
            let tok = self.peek().clone();
            match tok.tok {
                Tok::Newline => {
                    self.advance();
                }
                Tok::Comment(text) => {
                    self.advance();
                    if tok.line_start {
                        comments.push((tok.line, text));
                    }
                }
                Tok::Name(_) if matches!(self.peek_at(1), Tok::Assign) => {
                    if !statements.is_empty() {
                        return Err(self.error_here("statement or final `return`"));
                    }
                    self.constant_def()?;
                    comments.clear();
                }
                Tok::DocBlock(_) | Tok::If => {
                    let label = nearest_comment_block(&comments);
                    comments.clear();
                    statements.push(self.statement(label)?);
                }
                Tok::Return => {
                    self.advance();
                    final_action = self.bool_literal()?;
                    self.end_of_line()?;
                    break;
                }
                Tok::Eof => return Err(ParseError::MissingFinalAction { line: tok.line }),
                _ => return Err(self.error_here("statement or final `return`")),
            }
        }
        loop {
            match self.peek().tok {
                Tok::Newline | Tok::Comment(_) => {
                    self.advance();
                }
                Tok::Eof => break,
                _ => return Err(self.error_here("end of script after final `return`")),
            }
        }
        self.check_set_refs()?;
        Ok(Script::new(std::mem::take(&mut self.constants), statements, final_action))
    }

    fn check_set_refs(&self) -> Result<(), ParseError> {
        for (name, line) in &self.set_refs {
            if !self.constants.contains_key(name) {
                return Err(ParseError::UndefinedSetRef { line: *line, name: name.clone() });
            }
        }
        Ok(())
    }

    fn constant_def(&mut self) -> Result<(), ParseError> {
        let name_tok = self.advance();
        let Tok::Name(name) = name_tok.tok else { unreachable!() };
        self.advance(); // `=`
        if self.constants.contains_key(&name) {
            return Err(ParseError::DuplicateConstant { line: name_tok.line, name });
        }
        if !matches!(self.peek().tok, Tok::LBrace) {
            return Err(self.error_here("set literal `{...}`"));
        }
        let values = self.set_literal()?;
        self.constants.insert(name, values);
        self.end_of_line()
    }

    fn bool_literal(&mut self) -> Result<bool, ParseError> {
        match self.peek().tok {
            Tok::Literal(Value::Boolean(b)) => {
                self.advance();
                Ok(b)
            }
            _ => Err(self.error_here("`True` or `False`")),
        }
    }

    fn statement(&mut self, mut label: String) -> Result<Statement, ParseError> {
        let start_line = self.peek().line;
        let mut meta = Vec::new();
        if let Tok::DocBlock(body) = self.peek().tok.clone() {
            meta = parse_validation_block(&body, start_line)?;
            self.advance();
            self.end_of_line()?;
            let mut between = Vec::new();
            loop {
                let t = self.peek().clone();
                match t.tok {
                    Tok::Newline => {
                        self.advance();
                    }
                    Tok::Comment(text) => {
                        self.advance();
                        between.push((t.line, text));
                    }
                    _ => break,
                }
            }
            if label.is_empty() {
                label = nearest_comment_block(&between);
            }
        }
        let if_tok = self.expect(|t| matches!(t, Tok::If), "`if` after validation block")?;
        let predicate = self.expr()?;
        self.expect(|t| matches!(t, Tok::Colon), "`:`")?;
        self.end_of_line()?;
        while matches!(self.peek().tok, Tok::Newline) || self.is_comment_line() {
            self.advance();
        }
        let ret = self.peek().clone();
        if !matches!(ret.tok, Tok::Return) {
            return Err(self.error_here(
                "`return True` or `return False` (nested conditionals are not supported)",
            ));
        }
        if ret.col <= if_tok.col {
            return Err(ParseError::Syntax {
                line: ret.line,
                column: ret.col,
                expected: "action indented under its `if`".into(),
                found: "`return` at the same indentation".into(),
            });
        }
        self.advance();
        let action = self.bool_literal()?;
        let end_line = ret.line;
        self.end_of_line()?;
        // Code indented under the `if` after its action would be a nested body.
        let mut i = self.pos;
        while matches!(self.tokens[i].tok, Tok::Newline) {
            i += 1;
        }
        let next = &self.tokens[i];
        if next.col > if_tok.col && !matches!(next.tok, Tok::Eof | Tok::Comment(_)) {
            return Err(ParseError::Syntax {
                line: next.line,
                column: next.col,
                expected: "one action per statement (nested conditionals are not supported)".into(),
                found: next.tok.describe(),
            });
        }
        Ok(Statement {
            index: 0,
            label,
            meta_predicates: meta,
            predicate,
            action,
            span: Span { start_line, if_line: if_tok.line, end_line },
        })
    }

    fn is_comment_line(&self) -> bool {
        matches!(self.peek().tok, Tok::Comment(_)) && self.peek().line_start
    }

    fn expr(&mut self) -> Result<PredicateExpr, ParseError> {
        let mut children = vec![self.and_expr()?];
        while matches!(self.peek().tok, Tok::Or) {
            self.advance();
            children.push(self.and_expr()?);
        }
        Ok(PredicateExpr::or(children))
    }

    fn and_expr(&mut self) -> Result<PredicateExpr, ParseError> {
        let mut children = vec![self.not_expr()?];
        while matches!(self.peek().tok, Tok::And) {
            self.advance();
            children.push(self.not_expr()?);
        }
        Ok(PredicateExpr::and(children))
    }

    fn not_expr(&mut self) -> Result<PredicateExpr, ParseError> {
        if matches!(self.peek().tok, Tok::Not) {
            self.advance();
            let inner = self.not_expr()?;
            return Ok(PredicateExpr::Not(Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<PredicateExpr, ParseError> {
        if matches!(self.peek().tok, Tok::LParen) {
            self.advance();
            let inner = self.expr()?;
            self.expect(|t| matches!(t, Tok::RParen), "`)`")?;
            if matches!(self.peek().tok, Tok::Op(_) | Tok::In)
                || matches!((&self.peek().tok, self.peek_at(1)), (Tok::Not, Tok::In))
            {
                return Err(self.error_here("comparison operands to be annotations or literals"));
            }
            return Ok(inner);
        }
        let first = self.operand()?;
        match self.peek().tok {
            Tok::Op(_) => {
                let mut operands = vec![first];
                let mut ops = Vec::new();
                while let Tok::Op(op) = self.peek().tok {
                    self.advance();
                    ops.push(op);
                    operands.push(self.operand()?);
                }
                Ok(PredicateExpr::Compare { operands, ops })
            }
            Tok::In => {
                self.advance();
                let set = self.set_expr()?;
                Ok(PredicateExpr::Membership { operand: first, set, negated: false })
            }
            Tok::Not if matches!(self.peek_at(1), Tok::In) => {
                self.advance();
                self.advance();
                let set = self.set_expr()?;
                Ok(PredicateExpr::Membership { operand: first, set, negated: true })
            }
            _ => Ok(match first {
                Operand::Var(name) => PredicateExpr::Var(name),
                Operand::Const(v) => PredicateExpr::Const(v),
            }),
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Name(name) => {
                if self.constants.contains_key(&name) {
                    return Err(ParseError::ConstantCollision { line: t.line, name });
                }
                self.advance();
                Ok(Operand::Var(name))
            }
            Tok::Literal(v) => {
                self.advance();
                Ok(Operand::Const(v))
            }
            _ => Err(self.error_here("annotation name or literal")),
        }
    }

    fn set_expr(&mut self) -> Result<SetExpr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::LBrace => Ok(SetExpr::Literal(self.set_literal()?)),
            Tok::Name(name) => {
                self.advance();
                self.set_refs.push((name.clone(), t.line));
                Ok(SetExpr::Ref(name))
            }
            _ => Err(self.error_here("set literal or set name")),
        }
    }

    fn set_literal(&mut self) -> Result<Vec<Value>, ParseError> {
        self.expect(|t| matches!(t, Tok::LBrace), "`{`")?;
        let mut values = Vec::new();
        loop {
            match self.peek().tok.clone() {
                Tok::RBrace => {
                    self.advance();
                    return Ok(values);
                }
                Tok::Literal(v) => {
                    self.advance();
                    values.push(v);
                    match self.peek().tok {
                        Tok::Comma => {
                            self.advance();
                        }
                        Tok::RBrace => {}
                        _ => return Err(self.error_here("`,` or `}`")),
                    }
                }
                _ => return Err(self.error_here("literal or `}`")),
            }
        }
    }
}

/// Joins the last run of consecutive comment lines into one label.
fn nearest_comment_block(comments: &[(usize, String)]) -> String {
    let Some(&(mut prev_line, _)) = comments.last() else { return String::new() };
    let mut start = comments.len() - 1;
    while start > 0 && comments[start - 1].0 + 1 == prev_line {
        start -= 1;
        prev_line = comments[start].0;
    }
    comments[start..]
        .iter()
        .map(|(_, t)| t.as_str())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_validation_block(body: &str, first_line: usize) -> Result<Vec<MetaPredicate>, ParseError> {
    let mut out = Vec::new();
    for (offset, raw) in body.split('\n').enumerate() {
        let line = first_line + offset;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let column = raw.len() - raw.trim_start().len() + 1;
        let syntax = |expected: &str| ParseError::Syntax {
            line,
            column,
            expected: expected.to_string(),
            found: format!("`{text}`"),
        };
        let Some(rest) = text.strip_prefix('@') else {
            return Err(syntax("`@dimension(value)`"));
        };
        let name_len =
            rest.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(rest.len());
        let (name, after) = rest.split_at(name_len);
        let Some(arg) = after.trim_start().strip_prefix('(').and_then(|a| a.strip_suffix(')'))
        else {
            return Err(syntax("`@dimension(value)`"));
        };
        let arg = arg.trim();
        let quoted = arg.len() >= 2
            && ((arg.starts_with('"') && arg.ends_with('"'))
                || (arg.starts_with('\'') && arg.ends_with('\'')));
        let inner = if quoted { &arg[1..arg.len() - 1] } else { arg };
        if inner.trim().is_empty()
            || inner.contains(['(', ')', '"', '\'', '\n'])
            || (!quoted && arg.contains(['"', '\'']))
        {
            return Err(syntax("a bare or quoted classification value"));
        }
        let dimension: Dimension = name
            .parse()
            .map_err(|_| ParseError::UnknownDirective { line, name: name.to_string() })?;
        out.push(MetaPredicate::new(dimension, arg));
    }
    Ok(out)
}
