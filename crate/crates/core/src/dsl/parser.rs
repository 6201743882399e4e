use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::engine::{CtfEvent, CtfQuery};
use crate::model::{
    validate, BinOp, Endogenous, ExogenousFactor, Expr, FiniteDomain, Intervention, Scm, ScmDef, Table, Violation,
};
use crate::scalar::{lcm_denominators, parse_rational, Rational};

#[derive(Debug, Clone)]
enum RawExpr {
    Const(i64),
    Var(String, SourceSpan),
    Not(Box<RawExpr>),
    Bin(BinOp, Box<RawExpr>, Box<RawExpr>),
    Table {
        inputs: Vec<(String, SourceSpan)>,
        entries: BTreeMap<Vec<i64>, i64>,
    },
    /// `Bern(a + b * x)`, or `Bern(a)` when `x` is absent.
    Bern {
        a: Rational,
        b: Rational,
        x: Option<(String, SourceSpan)>,
        span: SourceSpan,
    },
}

struct ExoDecl {
    name: String,
    span: SourceSpan,
    support: FiniteDomain,
    pmf: Vec<Rational>,
}

struct VarDecl {
    name: String,
    span: SourceSpan,
    domain: FiniteDomain,
    expr: RawExpr,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: tokenize(text)?, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String, expected: &[&str]) -> ParseError {
        ParseError { span: self.peek().span, message, expected: expected.iter().map(|s| s.to_string()).collect() }
    }

    fn expect(&mut self, tok: Tok, context: &str) -> PResult<SourceSpan> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            let found = self.peek().tok.to_string();
            Err(self.error_here(format!("expected {tok} {context}, found {found}"), &[&tok.to_string()]))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, context: &str) -> PResult<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            other => {
                let found = other.to_string();
                Err(self.error_here(format!("expected identifier {context}, found {found}"), &["identifier"]))
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<SourceSpan> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.bump().span),
            other => {
                let found = other.to_string();
                Err(self.error_here(format!("expected `{kw}`, found {found}"), &[kw]))
            }
        }
    }

    fn int(&mut self, context: &str) -> PResult<i64> {
        match &self.peek().tok {
            Tok::Number(s) => {
                let parsed = s.parse::<i64>();
                let span = self.peek().span;
                match parsed {
                    Ok(v) => {
                        self.bump();
                        Ok(v)
                    }
                    Err(_) => Err(ParseError {
                        span,
                        message: format!("expected integer {context}, found `{s}`"),
                        expected: vec!["integer".into()],
                    }),
                }
            }
            other => {
                let found = other.to_string();
                Err(self.error_here(format!("expected integer {context}, found {found}"), &["integer"]))
            }
        }
    }

    /// `p/q`, integer or decimal literal.
    fn rational(&mut self, context: &str) -> PResult<(Rational, SourceSpan)> {
        let Tok::Number(first) = self.peek().tok.clone() else {
            let found = self.peek().tok.to_string();
            return Err(self.error_here(format!("expected probability {context}, found {found}"), &["rational"]));
        };
        let start = self.bump().span;
        let mut text = first;
        let mut span = start;
        if self.peek().tok == Tok::Slash {
            self.bump();
            let Tok::Number(den) = self.peek().tok.clone() else {
                return Err(self.error_here("expected denominator after `/`".into(), &["integer"]));
            };
            let end = self.bump().span;
            text = format!("{text}/{den}");
            span.length = end.offset + end.length - start.offset;
        }
        let value = parse_rational(&text).map_err(|e| ParseError { span, message: e.to_string(), expected: vec![] })?;
        Ok((value, span))
    }

    fn model(&mut self) -> PResult<(String, SourceSpan, Vec<ExoDecl>, Vec<VarDecl>)> {
        self.keyword("model")?;
        let (name, name_span) = self.ident("after `model`")?;
        self.expect(Tok::LBrace, "to open the model body")?;
        let mut exos = Vec::new();
        let mut vars = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(k) if k == "exo" => exos.push(self.exo()?),
                Tok::Ident(k) if k == "var" => vars.push(self.var()?),
                other => {
                    let found = other.to_string();
                    return Err(
                        self.error_here(format!("expected a declaration or `}}`, found {found}"), &["exo", "var", "}"])
                    );
                }
            }
        }
        if self.peek().tok != Tok::Eof {
            let found = self.peek().tok.to_string();
            return Err(self.error_here(format!("unexpected {found} after the model body"), &["end of input"]));
        }
        Ok((name, name_span, exos, vars))
    }

    fn exo(&mut self) -> PResult<ExoDecl> {
        self.keyword("exo")?;
        let (name, span) = self.ident("after `exo`")?;
        self.expect(Tok::Tilde, "after the exogenous name")?;
        let (dist, dist_span) = self.ident("naming a distribution")?;
        let domain_err =
            |e: crate::model::DomainError| ParseError { span: dist_span, message: e.to_string(), expected: vec![] };
        let (support, pmf) = match dist.as_str() {
            "bernoulli" => {
                self.expect(Tok::LParen, "after `bernoulli`")?;
                let (p, _) = self.rational("in `bernoulli`")?;
                self.expect(Tok::RParen, "to close `bernoulli`")?;
                let q = Rational::from_integer(1.into()) - p.clone();
                (FiniteDomain::binary(), vec![q, p])
            }
            "uniform" => {
                self.expect(Tok::LParen, "after `uniform`")?;
                let lo = self.int("as the lower end of `uniform`")?;
                self.expect(Tok::Comma, "between `uniform` bounds")?;
                let hi = self.int("as the upper end of `uniform`")?;
                self.expect(Tok::RParen, "to close `uniform`")?;
                if hi < lo {
                    return Err(ParseError {
                        span: dist_span,
                        message: format!("`uniform({lo}, {hi})` has an empty range"),
                        expected: vec![],
                    });
                }
                let support = FiniteDomain::range(lo, hi).map_err(domain_err)?;
                let n = support.len() as i64;
                (support, vec![Rational::new(1.into(), n.into()); n as usize])
            }
            "pmf" => {
                self.expect(Tok::LBrace, "after `pmf`")?;
                let mut pairs = Vec::new();
                loop {
                    let v = self.int("as a support value")?;
                    self.expect(Tok::Colon, "after a support value")?;
                    let (p, _) = self.rational("as a mass")?;
                    pairs.push((v, p));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "to close `pmf`")?;
                let support = FiniteDomain::new(pairs.iter().map(|(v, _)| *v)).map_err(domain_err)?;
                pairs.sort_by_key(|(v, _)| *v);
                (support, pairs.into_iter().map(|(_, p)| p).collect())
            }
            other => {
                return Err(ParseError {
                    span: dist_span,
                    message: format!("unknown distribution `{other}`"),
                    expected: vec!["bernoulli".into(), "uniform".into(), "pmf".into()],
                })
            }
        };
        Ok(ExoDecl { name, span, support, pmf })
    }

    fn var(&mut self) -> PResult<VarDecl> {
        self.keyword("var")?;
        let (name, span) = self.ident("after `var`")?;
        self.expect(Tok::Colon, "before the domain")?;
        let open = self.expect(Tok::LBrace, "to open the domain")?;
        let mut values = vec![self.int("in the domain")?];
        while self.eat(&Tok::Comma) {
            values.push(self.int("in the domain")?);
        }
        self.expect(Tok::RBrace, "to close the domain")?;
        let domain = FiniteDomain::new(values).map_err(|e| ParseError {
            span: open,
            message: format!("domain of `{name}`: {e}"),
            expected: vec![],
        })?;
        self.expect(Tok::Equals, "before the mechanism")?;
        let expr = self.expr()?;
        Ok(VarDecl { name, span, domain, expr })
    }

    fn expr(&mut self) -> PResult<RawExpr> {
        let tok = self.peek().clone();
        match tok.tok {
            Tok::Number(_) => Ok(RawExpr::Const(self.int("as a constant")?)),
            Tok::Ident(name) => {
                if self.peek_at(1) != &Tok::LParen {
                    self.bump();
                    return Ok(RawExpr::Var(name, tok.span));
                }
                self.bump();
                self.bump();
                let e = match name.as_str() {
                    "not" => RawExpr::Not(Box::new(self.expr()?)),
                    "table" => self.table_body()?,
                    "bern" => self.bern_body(tok.span)?,
                    kw => match BinOp::from_keyword(kw) {
                        Some(op) => {
                            let a = self.expr()?;
                            self.expect(Tok::Comma, &format!("between `{kw}` operands"))?;
                            let b = self.expr()?;
                            RawExpr::Bin(op, Box::new(a), Box::new(b))
                        }
                        None => {
                            return Err(ParseError {
                                span: tok.span,
                                message: format!("unknown function `{kw}`"),
                                expected: vec![
                                    "not", "and", "or", "xor", "eq", "ge", "lt", "add", "sub", "mul", "table", "bern",
                                ]
                                .into_iter()
                                .map(String::from)
                                .collect(),
                            })
                        }
                    },
                };
                self.expect(Tok::RParen, &format!("to close `{name}`"))?;
                Ok(e)
            }
            other => {
                let found = other.to_string();
                Err(self.error_here(format!("expected an expression, found {found}"), &["integer", "identifier"]))
            }
        }
    }

    fn table_body(&mut self) -> PResult<RawExpr> {
        let mut inputs = vec![self.ident("as a table input")?];
        while self.eat(&Tok::Comma) {
            inputs.push(self.ident("as a table input")?);
        }
        self.expect(Tok::Semi, "after the table inputs")?;
        let mut entries = BTreeMap::new();
        loop {
            let open = self.expect(Tok::LParen, "to open a table row")?;
            let mut key = vec![self.int("in a table row")?];
            while self.eat(&Tok::Comma) {
                key.push(self.int("in a table row")?);
            }
            self.expect(Tok::RParen, "to close a table row")?;
            self.expect(Tok::Arrow, "after a table row")?;
            let out = self.int("as a table output")?;
            if key.len() != inputs.len() {
                return Err(ParseError {
                    span: open,
                    message: format!("table row has {} values but the table has {} inputs", key.len(), inputs.len()),
                    expected: vec![],
                });
            }
            if entries.insert(key.clone(), out).is_some() {
                return Err(ParseError {
                    span: open,
                    message: format!("table row {key:?} repeated"),
                    expected: vec![],
                });
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(RawExpr::Table { inputs, entries })
    }

    fn bern_body(&mut self, span: SourceSpan) -> PResult<RawExpr> {
        let (a, _) = self.rational("in `bern`")?;
        if !self.eat(&Tok::Comma) {
            return Ok(RawExpr::Bern { a, b: Rational::zero(), x: None, span });
        }
        let (b, _) = self.rational("as the `bern` slope")?;
        self.expect(Tok::Comma, "before the `bern` input")?;
        let x = self.ident("as the `bern` input")?;
        Ok(RawExpr::Bern { a, b, x: Some(x), span })
    }
}

struct Lowering<'a> {
    taken: BTreeSet<String>,
    domains: BTreeMap<String, FiniteDomain>,
    aux: Vec<ExogenousFactor<Rational>>,
    refs: &'a mut Vec<(String, String, SourceSpan)>,
    owner: String,
}

impl Lowering<'_> {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = format!("U_{base}");
        let mut k = 2;
        while self.taken.contains(&name) {
            name = format!("U_{base}_{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn lower(&mut self, e: RawExpr) -> PResult<Expr> {
        Ok(match e {
            RawExpr::Const(c) => Expr::Const(c),
            RawExpr::Var(n, span) => {
                self.refs.push((self.owner.clone(), n.clone(), span));
                Expr::Var(n)
            }
            RawExpr::Not(e) => Expr::not(self.lower(*e)?),
            RawExpr::Bin(op, a, b) => Expr::binary(op, self.lower(*a)?, self.lower(*b)?),
            RawExpr::Table { inputs, entries } => {
                for (n, span) in &inputs {
                    self.refs.push((self.owner.clone(), n.clone(), *span));
                }
                Expr::Table(Table { inputs: inputs.into_iter().map(|(n, _)| n).collect(), entries })
            }
            RawExpr::Bern { a, b, x, span } => self.desugar_bern(a, b, x, span)?,
        })
    }

    /// `Bern(a + b x)` becomes `lt(U, A + B x)` with `U` uniform over
    /// `{0..L-1}`, `L` the lcm of the denominators, `A = aL`, `B = bL`.
    fn desugar_bern(
        &mut self,
        a: Rational,
        b: Rational,
        x: Option<(String, SourceSpan)>,
        span: SourceSpan,
    ) -> PResult<Expr> {
        let err = |message: String| ParseError { span, message, expected: vec![] };
        let xs: Vec<i64> = match &x {
            None => vec![0],
            Some((name, xspan)) => {
                self.refs.push((self.owner.clone(), name.clone(), *xspan));
                match self.domains.get(name) {
                    Some(d) => d.values().to_vec(),
                    None => {
                        return Err(ParseError {
                            span: *xspan,
                            message: format!("unknown variable `{name}` in `bern` of `{}`", self.owner),
                            expected: vec![],
                        })
                    }
                }
            }
        };
        for v in &xs {
            let p = a.clone() + b.clone() * Rational::from_integer((*v).into());
            if p.is_negative() || p > Rational::from_integer(1.into()) {
                return Err(err(format!("`bern` parameter leaves [0, 1] at input value {v}")));
            }
        }
        let l: BigInt = lcm_denominators([&a, &b]);
        let to_i64 = |r: Rational| -> PResult<i64> {
            r.to_integer().to_i64().ok_or_else(|| err("`bern` parameter needs too fine a grid".into()))
        };
        let lr = Rational::from_integer(l.clone());
        let big_a = to_i64(a * lr.clone())?;
        let big_b = to_i64(b * lr)?;
        let l = l.to_i64().filter(|l| *l <= 1_000_000).ok_or_else(|| err("`bern` grid too large".into()))?;
        let u = self.fresh(&self.owner.clone());
        self.aux.push(ExogenousFactor::uniform(u.clone(), 0, l - 1));
        let threshold = match x {
            None => Expr::Const(big_a),
            Some((name, _)) => {
                let slope = |k: i64| {
                    if k == 1 {
                        Expr::var(name.clone())
                    } else {
                        Expr::binary(BinOp::Mul, Expr::Const(k), Expr::var(name.clone()))
                    }
                };
                if big_b == 0 {
                    Expr::Const(big_a)
                } else if big_a == 0 && big_b > 0 {
                    slope(big_b)
                } else if big_b > 0 {
                    Expr::binary(BinOp::Add, Expr::Const(big_a), slope(big_b))
                } else {
                    Expr::binary(BinOp::Sub, Expr::Const(big_a), slope(-big_b))
                }
            }
        };
        Ok(Expr::binary(BinOp::Lt, Expr::var(u), threshold))
    }
}

/// Parses and validates a model. All semantic problems are reported, each
/// with the span of the offending declaration or reference.
pub fn parse_model(text: &str) -> Result<Scm<Rational>, Vec<ParseError>> {
    let mut p = Parser::new(text).map_err(|e| vec![e])?;
    let (name, name_span, exos, vars) = p.model().map_err(|e| vec![e])?;

    let mut taken: BTreeSet<String> = exos.iter().map(|e| e.name.clone()).collect();
    taken.extend(vars.iter().map(|v| v.name.clone()));
    let mut domains: BTreeMap<String, FiniteDomain> = BTreeMap::new();
    for e in &exos {
        domains.entry(e.name.clone()).or_insert_with(|| e.support.clone());
    }
    for v in &vars {
        domains.entry(v.name.clone()).or_insert_with(|| v.domain.clone());
    }
    let mut refs = Vec::new();
    let mut errors = Vec::new();
    let mut lowering = Lowering { taken, domains, aux: Vec::new(), refs: &mut refs, owner: String::new() };
    let mut endogenous = Vec::new();
    let mut decl_spans: Vec<(String, SourceSpan)> = Vec::new();
    for e in &exos {
        decl_spans.push((e.name.clone(), e.span));
    }
    for v in vars {
        decl_spans.push((v.name.clone(), v.span));
        lowering.owner = v.name.clone();
        match lowering.lower(v.expr) {
            Ok(expr) => endogenous.push(Endogenous::new(v.name, v.domain, expr)),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut exogenous: Vec<ExogenousFactor<Rational>> =
        exos.into_iter().map(|e| ExogenousFactor::new(e.name, e.support, e.pmf)).collect();
    exogenous.extend(lowering.aux);
    let def = ScmDef { name, exogenous, endogenous };

    let report = validate(&def);
    if !report.ok() {
        let decl_span = |n: &str| decl_spans.iter().find(|(m, _)| m == n).map(|(_, s)| *s).unwrap_or(name_span);
        for v in &report.violations {
            let span = match v {
                Violation::NoVariables => name_span,
                Violation::DuplicateName(n) => {
                    decl_spans.iter().filter(|(m, _)| m == n).nth(1).map(|(_, s)| *s).unwrap_or(name_span)
                }
                Violation::PmfShape { factor }
                | Violation::NegativeMass { factor, .. }
                | Violation::NotNormalized { factor, .. } => decl_span(factor),
                Violation::UnknownReference { variable, name } => refs
                    .iter()
                    .find(|(o, r, _)| o == variable && r == name)
                    .map(|(_, _, s)| *s)
                    .unwrap_or_else(|| decl_span(variable)),
                Violation::Cycle(c) => decl_span(c.first().map(String::as_str).unwrap_or("")),
                Violation::OutOfDomain { variable, .. } | Violation::Evaluation { variable, .. } => decl_span(variable),
            };
            errors.push(ParseError { span, message: v.to_string(), expected: vec![] });
        }
        return Err(errors);
    }
    Scm::build(def).map_err(|e| vec![ParseError { span: name_span, message: e.to_string(), expected: vec![] }])
}

/// Parses `P(Y[X=x]=y, ... | Z=z, ...)`.
pub fn parse_query(text: &str) -> Result<CtfQuery, ParseError> {
    let mut p = Parser::new(text)?;
    p.keyword("P")?;
    p.expect(Tok::LParen, "after `P`")?;
    let mut events = Vec::new();
    let mut seen: BTreeSet<(String, Intervention)> = BTreeSet::new();
    loop {
        let (var, span) = p.ident("naming an event variable")?;
        let mut ctx = Intervention::new();
        if p.eat(&Tok::LBracket) {
            loop {
                let (x, xspan) = p.ident("naming an intervened variable")?;
                p.expect(Tok::Equals, "in an intervention")?;
                let v = p.int("as an intervention value")?;
                if ctx.0.insert(x.clone(), v).is_some() {
                    return Err(ParseError {
                        span: xspan,
                        message: format!("`{x}` intervened twice in one context"),
                        expected: vec![],
                    });
                }
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
            p.expect(Tok::RBracket, "to close the intervention")?;
        }
        p.expect(Tok::Equals, "after the event variable")?;
        let value = p.int("as an event value")?;
        if !seen.insert((var.clone(), ctx.clone())) {
            return Err(ParseError {
                span,
                message: format!("duplicate event for `{var}` in the same context"),
                expected: vec![],
            });
        }
        events.push(CtfEvent::new(var, value, ctx));
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    let mut conditioning = Vec::new();
    if p.eat(&Tok::Pipe) {
        loop {
            let (var, span) = p.ident("naming a conditioning variable")?;
            p.expect(Tok::Equals, "after the conditioning variable")?;
            let value = p.int("as a conditioning value")?;
            if conditioning.iter().any(|(v, _): &(String, i64)| v == &var) {
                return Err(ParseError {
                    span,
                    message: format!("duplicate conditioning event for `{var}`"),
                    expected: vec![],
                });
            }
            conditioning.push((var, value));
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(Tok::RParen, "to close the query")?;
    if p.peek().tok != Tok::Eof {
        let found = p.peek().tok.to_string();
        return Err(p.error_here(format!("unexpected {found} after the query"), &["end of input"]));
    }
    Ok(CtfQuery::new(events, conditioning))
}
