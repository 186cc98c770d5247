use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::ParseError;

const MAX_DEPTH: usize = 200;

const KEYWORDS: &[&str] = &[
    "in", "nin", "neq", "or", "neg", "implies", "foreach", "exists", "subset", "true", "false",
];

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser::new(toks);
    let program = p.program()?;
    validate(&program)?;
    Ok(program)
}

/// Parses a single formula (no trailing period required).
pub fn parse_formula(src: &str) -> Result<SFormula, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser::new(toks);
    let f = p.formula()?;
    p.eat(&Tok::Dot);
    p.expect_end()?;
    validate_formula(&f)?;
    Ok(f)
}

pub fn parse_term(src: &str) -> Result<STerm, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser::new(toks);
    let t = p.term()?;
    p.expect_end()?;
    Ok(t)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    depth: usize,
    /// Positions where `term rel term` is known to fail.
    rel_fail: HashSet<usize>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(toks: Vec<(Tok, Span)>) -> Self {
        Parser {
            toks,
            pos: 0,
            depth: 0,
            rel_fail: HashSet::new(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        match self.toks.get(self.pos) {
            Some((_, s)) => *s,
            None => self
                .toks
                .last()
                .map(|(_, s)| Span {
                    line: s.line,
                    col: s.col + 1,
                })
                .unwrap_or(Span { line: 1, col: 1 }),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::at(self.span(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        match self.peek() {
            Some(t) => self.err(format!("expected {wanted}, found {}", t.describe())),
            None => self.err(format!("expected {wanted}, found end of input")),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, wanted: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_end(&self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.unexpected("end of input"),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Runs `f`, restoring the position if it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let (pos, depth) = (self.pos, self.depth);
        let r = f(self);
        if r.is_err() {
            self.pos = pos;
            self.depth = depth;
        }
        r
    }

    // -- program ----------------------------------------------------------

    fn program(&mut self) -> PResult<Program> {
        let mut definitions = Vec::new();
        loop {
            if self.peek().is_none() {
                return self.err("missing query");
            }
            match self.attempt(Self::definition_head) {
                Ok((name, params, span)) => {
                    let body = self.formula()?;
                    self.expect(&Tok::Dot, "`.` after definition")?;
                    definitions.push(Definition {
                        name,
                        params,
                        body,
                        span,
                    });
                }
                Err(_) => break,
            }
        }
        let query = self.formula()?;
        self.eat(&Tok::Dot);
        self.expect_end()?;
        Ok(Program { definitions, query })
    }

    fn definition_head(&mut self) -> PResult<(String, Vec<String>, Span)> {
        let span = self.span();
        let name = match self.peek() {
            Some(Tok::Ident(n)) if !KEYWORDS.contains(&n.as_str()) => n.clone(),
            _ => return self.unexpected("definition name"),
        };
        self.pos += 1;
        self.expect(&Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                match self.peek() {
                    Some(Tok::Var(v)) => {
                        params.push(v.clone());
                        self.pos += 1;
                    }
                    _ => return self.unexpected("parameter variable"),
                }
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma, "`,` or `)`")?;
            }
        }
        self.expect(&Tok::ColonDash, "`:-`")?;
        Ok((name, params, span))
    }

    // -- formulas ---------------------------------------------------------

    fn formula(&mut self) -> PResult<SFormula> {
        self.enter()?;
        let lhs = self.disj()?;
        let out = if self.eat_kw("implies") {
            let rhs = self.formula()?;
            SFormula::implies(lhs, rhs)
        } else {
            lhs
        };
        self.leave();
        Ok(out)
    }

    fn disj(&mut self) -> PResult<SFormula> {
        self.enter()?;
        let lhs = self.conj()?;
        let out = if self.eat_kw("or") {
            SFormula::or(lhs, self.disj()?)
        } else {
            lhs
        };
        self.leave();
        Ok(out)
    }

    fn conj(&mut self) -> PResult<SFormula> {
        self.enter()?;
        let lhs = self.unit()?;
        let out = if self.eat(&Tok::Amp) {
            SFormula::and(lhs, self.conj()?)
        } else {
            lhs
        };
        self.leave();
        Ok(out)
    }

    fn unit(&mut self) -> PResult<SFormula> {
        self.enter()?;
        let out = self.unit_inner();
        self.leave();
        out
    }

    fn unit_inner(&mut self) -> PResult<SFormula> {
        if let Some(Tok::Ident(w)) = self.peek() {
            match w.as_str() {
                "true" => {
                    self.pos += 1;
                    return Ok(SFormula::True);
                }
                "false" => {
                    self.pos += 1;
                    return Ok(SFormula::False);
                }
                "neg" => {
                    self.pos += 1;
                    self.expect(&Tok::LParen, "`(` after `neg`")?;
                    let f = self.formula()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    return Ok(SFormula::neg(f));
                }
                "foreach" => return self.quant(QKind::Forall),
                "exists" => return self.quant(QKind::Exists),
                "subset" => return self.subset(),
                _ => {}
            }
        }
        let start = self.pos;
        let first_err = if self.rel_fail.contains(&start) {
            ParseError::at(self.span(), "expected relation")
        } else {
            match self.attempt(Self::relation) {
                Ok(f) => return Ok(f),
                Err(e) => {
                    self.rel_fail.insert(start);
                    e
                }
            }
        };
        if self.peek() == Some(&Tok::LParen) {
            let r = self.attempt(|p| {
                p.pos += 1;
                let f = p.formula()?;
                p.expect(&Tok::RParen, "`)`")?;
                Ok(f)
            });
            return match r {
                Ok(f) => Ok(f),
                Err(e) => Err(furthest(first_err, e)),
            };
        }
        if let (Some(Tok::Ident(name)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            if !KEYWORDS.contains(&name.as_str()) {
                let name = name.clone();
                let span = self.span();
                self.pos += 2;
                let args = self.term_list(&Tok::RParen)?;
                return Ok(SFormula::Call(name, args, span));
            }
        }
        Err(first_err)
    }

    fn relation(&mut self) -> PResult<SFormula> {
        let lhs = self.term()?;
        let rel = match self.peek() {
            Some(Tok::Eq) => Rel::Eq,
            Some(Tok::Le) => Rel::Le,
            Some(Tok::Lt) => Rel::Lt,
            Some(Tok::Ge) => Rel::Ge,
            Some(Tok::Gt) => Rel::Gt,
            Some(Tok::Ident(w)) if w == "neq" => Rel::Neq,
            Some(Tok::Ident(w)) if w == "in" => Rel::In,
            Some(Tok::Ident(w)) if w == "nin" => Rel::Nin,
            _ => return self.unexpected("relation (=, neq, in, nin, =<, <, >=, >)"),
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(SFormula::Rel(rel, lhs, rhs))
    }

    fn term_list(&mut self, close: &Tok) -> PResult<Vec<STerm>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma, "`,`")?;
        }
    }

    fn quant(&mut self, kind: QKind) -> PResult<SFormula> {
        self.pos += 1;
        self.expect(&Tok::LParen, "`(`")?;
        let (binders, bracketed) = match self.attempt(Self::binder_list) {
            Ok(b) => (b, true),
            Err(_) => {
                let ctrl = self.ctrl()?;
                if !self.eat_kw("in") {
                    return self.unexpected("`in`");
                }
                let dom = self.term()?;
                (vec![(ctrl, dom)], false)
            }
        };
        self.expect(&Tok::Comma, "`,`")?;
        let ext = self.attempt(|p| {
            let locals = p.locals()?;
            p.expect(&Tok::Comma, "`,`")?;
            let filter = p.formula()?;
            p.expect(&Tok::Comma, "`,`")?;
            let fpreds = p.formula()?;
            p.expect(&Tok::RParen, "`)`")?;
            Ok((locals, filter, fpreds))
        });
        let (ext, filter) = match ext {
            Ok((locals, filter, fpreds)) => (Some((locals, Box::new(fpreds))), filter),
            Err(_) => {
                let filter = self.formula()?;
                self.expect(&Tok::RParen, "`)`")?;
                (None, filter)
            }
        };
        Ok(SFormula::Quant(Quant {
            kind,
            binders,
            bracketed,
            ext,
            filter: Box::new(filter),
        }))
    }

    fn binder_list(&mut self) -> PResult<Vec<(SCtrl, STerm)>> {
        self.expect(&Tok::LBrack, "`[`")?;
        let mut out = Vec::new();
        loop {
            let c = self.ctrl()?;
            if !self.eat_kw("in") {
                return self.unexpected("`in`");
            }
            out.push((c, self.term()?));
            if self.eat(&Tok::RBrack) {
                return Ok(out);
            }
            self.expect(&Tok::Comma, "`,`")?;
        }
    }

    fn locals(&mut self) -> PResult<Vec<String>> {
        self.expect(&Tok::LBrack, "`[`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrack) {
            return Ok(out);
        }
        loop {
            match self.peek() {
                Some(Tok::Var(v)) => {
                    out.push(v.clone());
                    self.pos += 1;
                }
                _ => return self.unexpected("variable"),
            }
            if self.eat(&Tok::RBrack) {
                return Ok(out);
            }
            self.expect(&Tok::Comma, "`,`")?;
        }
    }

    fn ctrl(&mut self) -> PResult<SCtrl> {
        self.enter()?;
        let span = self.span();
        let out = match self.peek() {
            Some(Tok::Var(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(SCtrl::Var(v, span))
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let a = self.ctrl()?;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.ctrl()?;
                self.expect(&Tok::RBrack, "`]`")?;
                Ok(SCtrl::Pair(Box::new(a), Box::new(b)))
            }
            _ => self.unexpected("control variable or `[`"),
        };
        self.leave();
        out
    }

    fn subset(&mut self) -> PResult<SFormula> {
        let span = self.span();
        self.pos += 1;
        self.expect(&Tok::LParen, "`(`")?;
        let lhs = self.term()?;
        self.expect(&Tok::Comma, "`,`")?;
        let ris = match self.attempt(|p| {
            p.expect(&Tok::LBrace, "`{`")?;
            let ctrl = p.ctrl()?;
            p.expect(&Tok::Colon, "`:`")?;
            let dom = p.term()?;
            p.expect(&Tok::Bar, "`|`")?;
            let filter = p.formula()?;
            p.expect(&Tok::RBrace, "`}`")?;
            Ok(SRis {
                ctrl,
                dom,
                filter: Box::new(filter),
            })
        }) {
            Ok(r) => r,
            Err(_) => {
                return Err(ParseError::at(
                    span,
                    "subset(A, B) requires B to be an intensional set {X : A | F} over A; \
                     only restricted universal quantification is expressible",
                ))
            }
        };
        self.expect(&Tok::RParen, "`)`")?;
        if ris.dom != lhs {
            return Err(ParseError::at(
                span,
                "subset(A, {X : D | F}) requires the domain D to be A itself",
            ));
        }
        Ok(SFormula::Subset(lhs, ris))
    }

    // -- terms ------------------------------------------------------------

    fn term(&mut self) -> PResult<STerm> {
        self.enter()?;
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => ArithOp::Add,
                Some(Tok::Minus) => ArithOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = STerm::Arith(op, Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn product(&mut self) -> PResult<STerm> {
        let mut lhs = self.primary()?;
        while self.eat(&Tok::Star) {
            let rhs = self.primary()?;
            lhs = STerm::Arith(ArithOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<STerm> {
        self.enter()?;
        let out = self.primary_inner();
        self.leave();
        out
    }

    fn primary_inner(&mut self) -> PResult<STerm> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(STerm::Var(v, span))
            }
            Some(Tok::Ident(a)) => {
                if KEYWORDS.contains(&a.as_str()) {
                    return self.unexpected("term");
                }
                if self.peek_at(1) == Some(&Tok::LParen) {
                    return self.err(format!("`{a}(...)` is not a term"));
                }
                self.pos += 1;
                Ok(STerm::Atom(a))
            }
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(STerm::Int(n))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Int(n)) => {
                        let n = -*n;
                        self.pos += 1;
                        Ok(STerm::Int(n))
                    }
                    _ => self.unexpected("integer after `-`"),
                }
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let a = self.term()?;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.term()?;
                self.expect(&Tok::RBrack, "`]`")?;
                Ok(STerm::pair(a, b))
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                if self.eat(&Tok::RBrace) {
                    return Ok(STerm::empty());
                }
                let mut elems = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    elems.push(self.term()?);
                }
                let tail = if self.eat(&Tok::Slash) {
                    Some(Box::new(self.term()?))
                } else {
                    None
                };
                self.expect(&Tok::RBrace, "`}`")?;
                Ok(STerm::Set(elems, tail))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.unexpected("term"),
        }
    }
}

/// Keeps the error that got further into the input.
fn furthest(a: ParseError, b: ParseError) -> ParseError {
    if (b.line, b.col) > (a.line, a.col) {
        b
    } else {
        a
    }
}

// -- validation -------------------------------------------------------------

fn validate(p: &Program) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for d in &p.definitions {
        if !seen.insert(d.name.as_str()) {
            return Err(ParseError::at(d.span, format!("predicate `{}` defined twice", d.name)));
        }
        let params: BTreeSet<_> = d.params.iter().collect();
        if params.len() != d.params.len() {
            return Err(ParseError::at(
                d.span,
                format!("repeated parameter in definition of `{}`", d.name),
            ));
        }
        validate_formula(&d.body)?;
    }
    validate_formula(&p.query)?;

    let mut graph: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for d in &p.definitions {
        let mut calls = Vec::new();
        collect_calls(&d.body, &mut calls);
        graph.insert(
            d.name.as_str(),
            calls.into_iter().filter(|c| seen.contains(c)).collect(),
        );
    }
    if let Some(cycle) = find_cycle(&graph) {
        let span = p.definition(cycle[0]).map(|d| d.span).unwrap_or_default();
        return Err(ParseError::at(
            span,
            format!("recursive definitions are not supported: {}", cycle.join(" -> ")),
        ));
    }
    Ok(())
}

fn collect_calls<'a>(f: &'a SFormula, out: &mut Vec<&'a str>) {
    match f {
        SFormula::Call(n, _, _) => out.push(n),
        SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
            collect_calls(a, out);
            collect_calls(b, out);
        }
        SFormula::Neg(a) => collect_calls(a, out),
        SFormula::Quant(q) => {
            collect_calls(&q.filter, out);
            if let Some((_, fp)) = &q.ext {
                collect_calls(fp, out);
            }
        }
        SFormula::Subset(_, r) => collect_calls(&r.filter, out),
        SFormula::True | SFormula::False | SFormula::Rel(..) => {}
    }
}

fn find_cycle<'a>(graph: &BTreeMap<&'a str, Vec<&'a str>>) -> Option<Vec<&'a str>> {
    fn dfs<'a>(
        n: &'a str,
        graph: &BTreeMap<&'a str, Vec<&'a str>>,
        stack: &mut Vec<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> Option<Vec<&'a str>> {
        if let Some(i) = stack.iter().position(|s| *s == n) {
            let mut cyc = stack[i..].to_vec();
            cyc.push(n);
            return Some(cyc);
        }
        if done.contains(n) {
            return None;
        }
        stack.push(n);
        for m in graph.get(n).into_iter().flatten() {
            if let Some(c) = dfs(m, graph, stack, done) {
                return Some(c);
            }
        }
        stack.pop();
        done.insert(n);
        None
    }
    let mut done = BTreeSet::new();
    for n in graph.keys() {
        if let Some(c) = dfs(n, graph, &mut Vec::new(), &mut done) {
            return Some(c);
        }
    }
    None
}

fn validate_formula(f: &SFormula) -> Result<(), ParseError> {
    match f {
        SFormula::Quant(q) => {
            let mut bound: Vec<String> = Vec::new();
            for (c, _) in &q.binders {
                check_ctrl(c, &mut bound)?;
            }
            if let Some((locals, fp)) = &q.ext {
                for l in locals {
                    if bound.contains(l) {
                        return Err(ParseError::at(
                            Span::default(),
                            format!("local `{l}` clashes with a control variable"),
                        ));
                    }
                    bound.push(l.clone());
                }
                validate_formula(fp)?;
            }
            validate_formula(&q.filter)
        }
        SFormula::Subset(_, r) => {
            check_ctrl(&r.ctrl, &mut Vec::new())?;
            validate_formula(&r.filter)
        }
        SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
            validate_formula(a)?;
            validate_formula(b)
        }
        SFormula::Neg(a) => validate_formula(a),
        SFormula::True | SFormula::False | SFormula::Rel(..) | SFormula::Call(..) => Ok(()),
    }
}

fn check_ctrl(c: &SCtrl, seen: &mut Vec<String>) -> Result<(), ParseError> {
    match c {
        SCtrl::Var(v, span) => {
            if seen.contains(v) {
                return Err(ParseError::at(
                    *span,
                    format!("control variable `{v}` occurs twice"),
                ));
            }
            seen.push(v.clone());
            Ok(())
        }
        SCtrl::Pair(a, b) => {
            check_ctrl(a, seen)?;
            check_ctrl(b, seen)
        }
    }
}
