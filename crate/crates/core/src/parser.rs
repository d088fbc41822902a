//! Reader and writer for the plain-text `.POMDP` problem format.
//!
//! Supported: the `discount`, `values`, `states`, `actions`, `observations`,
//! `start` (vector, `uniform`, single state, `include`/`exclude`) preamble and
//! `T:`, `O:`, `R:` entries in single-entry, row and matrix forms, with `*`
//! wildcards, `uniform`/`identity` keywords, and named or numeric ids.
//! Rewards given per `(a, s, s', z)` are reduced to `R(s, a)` by expectation.

use std::fmt;
use std::fmt::Write as _;

use crate::pomdp::{BeliefState, Names, Pomdp};

/// Row sums may deviate from 1 by this much before the file is rejected.
/// Published benchmark files print six decimals and drift by a few 1e-6.
pub const ROW_SUM_TOL: f64 = 1e-5;

/// Dense `(a, s, s', z)` reward expansion is refused above this many cells.
const MAX_REWARD_CELLS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "line {}: {sev}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ParsedPomdp {
    pub pomdp: Pomdp,
    pub warnings: Vec<ParseDiagnostic>,
}

/// Parses a problem file. On failure every diagnostic is returned, errors
/// first-to-last in file order.
pub fn parse_pomdp(text: &str) -> Result<ParsedPomdp, Vec<ParseDiagnostic>> {
    let tokens = tokenize(text);
    let mut p = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        discount: None,
        cost: false,
        states: None,
        actions: None,
        observations: None,
        start: None,
        tables: None,
    };
    if let Err(d) = p.run() {
        p.diags.push(d);
    }
    p.finish()
}

struct Token<'a> {
    text: &'a str,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        for piece in content.split_whitespace() {
            let mut rest = piece;
            while let Some(idx) = rest.find(':') {
                if idx > 0 {
                    out.push(Token {
                        text: &rest[..idx],
                        line,
                    });
                }
                out.push(Token { text: ":", line });
                rest = &rest[idx + 1..];
            }
            if !rest.is_empty() {
                out.push(Token { text: rest, line });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Dim {
    count: usize,
    names: Option<Vec<String>>,
}

impl Dim {
    fn lookup(&self, tok: &str) -> Option<usize> {
        if let Some(names) = &self.names {
            if let Some(i) = names.iter().position(|n| n == tok) {
                return Some(i);
            }
        }
        tok.parse::<usize>().ok().filter(|&i| i < self.count)
    }
}

#[derive(Clone, Copy)]
enum Kind {
    State,
    Action,
    Observation,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::State => "state",
            Kind::Action => "action",
            Kind::Observation => "observation",
        }
    }
}

#[derive(Clone, Copy)]
enum Id {
    All,
    One(usize),
}

impl Id {
    fn range(self, n: usize) -> std::ops::Range<usize> {
        match self {
            Id::All => 0..n,
            Id::One(i) => i..i + 1,
        }
    }
}

enum StartSpec {
    Vector(Vec<f64>, usize),
    Uniform,
    State(usize),
    Include(Vec<usize>),
    Exclude(Vec<usize>),
}

struct Tables {
    ns: usize,
    na: usize,
    nz: usize,
    trans: Vec<f64>,
    obs: Vec<f64>,
    /// `(a, s, s', z)` rewards, `None` until the first `R:` entry.
    reward: Option<Vec<f64>>,
    trans_line: Vec<usize>,
    obs_line: Vec<usize>,
}

impl Tables {
    fn t(&mut self, a: usize, s: usize, s2: usize) -> &mut f64 {
        &mut self.trans[(a * self.ns + s) * self.ns + s2]
    }

    fn o(&mut self, a: usize, s2: usize, z: usize) -> &mut f64 {
        &mut self.obs[(a * self.ns + s2) * self.nz + z]
    }

    fn r(&mut self, a: usize, s: usize, s2: usize, z: usize) -> &mut f64 {
        let (ns, nz) = (self.ns, self.nz);
        let table = self.reward.get_or_insert_with(|| vec![0.0; self.na * ns * ns * nz]);
        &mut table[((a * ns + s) * ns + s2) * nz + z]
    }
}

const KEYWORDS: &[&str] = &[
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    diags: Vec<ParseDiagnostic>,
    discount: Option<f64>,
    cost: bool,
    states: Option<Dim>,
    actions: Option<Dim>,
    observations: Option<Dim>,
    start: Option<(StartSpec, usize)>,
    tables: Option<Tables>,
}

type Step<T> = Result<T, ParseDiagnostic>;

fn error(line: usize, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic {
        line,
        message: message.into(),
        severity: Severity::Error,
    }
}

impl<'a> Parser<'a> {
    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |t| t.line)
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|t| t.text)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a str> {
        self.tokens.get(self.pos + offset).map(|t| t.text)
    }

    fn next(&mut self) -> Step<&'a str> {
        let line = self.line();
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| error(line, "unexpected end of file"))?;
        self.pos += 1;
        Ok(tok.text)
    }

    fn expect_colon(&mut self) -> Step<()> {
        let line = self.line();
        match self.next()? {
            ":" => Ok(()),
            other => Err(error(line, format!("expected ':' but found '{other}'"))),
        }
    }

    fn at_directive(&self) -> bool {
        match self.peek() {
            Some(kw) if KEYWORDS.contains(&kw) => match self.peek_at(1) {
                Some(":") => true,
                Some("include") | Some("exclude") => kw == "start",
                _ => false,
            },
            _ => false,
        }
    }

    fn number(&mut self) -> Step<f64> {
        let line = self.line();
        let tok = self.next()?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(error(line, format!("expected a number but found '{tok}'"))),
        }
    }

    fn numbers(&mut self, count: usize) -> Step<Vec<f64>> {
        (0..count).map(|_| self.number()).collect()
    }

    /// Tokens up to the next directive (exclusive).
    fn list(&mut self) -> Vec<&'a str> {
        let mut out = Vec::new();
        while self.pos < self.tokens.len() && !self.at_directive() {
            out.push(self.tokens[self.pos].text);
            self.pos += 1;
        }
        out
    }

    fn dim(&self, kind: Kind) -> Step<&Dim> {
        let d = match kind {
            Kind::State => &self.states,
            Kind::Action => &self.actions,
            Kind::Observation => &self.observations,
        };
        d.as_ref().ok_or_else(|| {
            error(
                self.line(),
                format!("{}s must be declared before use", kind.label()),
            )
        })
    }

    fn id(&mut self, kind: Kind) -> Step<Id> {
        let line = self.line();
        let tok = self.next()?;
        if tok == "*" {
            return Ok(Id::All);
        }
        let dim = self.dim(kind)?;
        dim.lookup(tok)
            .map(Id::One)
            .ok_or_else(|| error(line, format!("unknown {} '{tok}'", kind.label())))
    }

    fn run(&mut self) -> Step<()> {
        while self.pos < self.tokens.len() {
            let line = self.line();
            let kw = self.next()?;
            match kw {
                "discount" => {
                    self.expect_colon()?;
                    let v = self.number()?;
                    self.discount = Some(v);
                }
                "values" => {
                    self.expect_colon()?;
                    match self.next()? {
                        "reward" => self.cost = false,
                        "cost" => {
                            self.cost = true;
                            self.diags.push(ParseDiagnostic {
                                line,
                                message: "values: cost; rewards are negated".into(),
                                severity: Severity::Warning,
                            });
                        }
                        other => {
                            return Err(error(line, format!("unknown values type '{other}'")))
                        }
                    }
                }
                "states" | "actions" | "observations" => {
                    self.expect_colon()?;
                    let items = self.list();
                    let dim = match items.as_slice() {
                        [] => return Err(error(line, format!("empty {kw} declaration"))),
                        [one] if one.parse::<usize>().is_ok() => {
                            let count = one.parse::<usize>().unwrap();
                            if count == 0 {
                                return Err(error(line, format!("{kw} count must be positive")));
                            }
                            Dim { count, names: None }
                        }
                        names => Dim {
                            count: names.len(),
                            names: Some(names.iter().map(|s| s.to_string()).collect()),
                        },
                    };
                    let slot = match kw {
                        "states" => &mut self.states,
                        "actions" => &mut self.actions,
                        _ => &mut self.observations,
                    };
                    if slot.is_some() {
                        return Err(error(line, format!("{kw} declared twice")));
                    }
                    *slot = Some(dim);
                }
                "start" => self.start_directive(line)?,
                "T" => {
                    self.expect_colon()?;
                    self.ensure_tables(line)?;
                    self.transition_entry(line)?;
                }
                "O" => {
                    self.expect_colon()?;
                    self.ensure_tables(line)?;
                    self.observation_entry(line)?;
                }
                "R" => {
                    self.expect_colon()?;
                    self.ensure_tables(line)?;
                    self.reward_entry(line)?;
                }
                other => return Err(error(line, format!("unexpected token '{other}'"))),
            }
        }
        Ok(())
    }

    fn start_directive(&mut self, line: usize) -> Step<()> {
        let ns = self.dim(Kind::State)?.count;
        let mode = self.next()?;
        let spec = match mode {
            ":" => {
                let items = self.list();
                match items.as_slice() {
                    ["uniform"] => StartSpec::Uniform,
                    [one] if !(ns == 1 && one.contains('.')) => {
                        let id = self
                            .states
                            .as_ref()
                            .and_then(|d| d.lookup(one))
                            .ok_or_else(|| error(line, format!("unknown start state '{one}'")))?;
                        StartSpec::State(id)
                    }
                    vals if vals.len() == ns => {
                        let mut probs = Vec::with_capacity(ns);
                        for v in vals {
                            match v.parse::<f64>() {
                                Ok(x) if x.is_finite() => probs.push(x),
                                _ => {
                                    return Err(error(
                                        line,
                                        format!("bad start probability '{v}'"),
                                    ))
                                }
                            }
                        }
                        StartSpec::Vector(probs, line)
                    }
                    vals => {
                        return Err(error(
                            line,
                            format!("start vector has {} entries, expected {ns}", vals.len()),
                        ))
                    }
                }
            }
            "include" | "exclude" => {
                self.expect_colon()?;
                let items = self.list();
                let dim = self.dim(Kind::State)?;
                let mut ids = Vec::new();
                for it in items {
                    ids.push(
                        dim.lookup(it)
                            .ok_or_else(|| error(line, format!("unknown state '{it}'")))?,
                    );
                }
                if mode == "include" {
                    StartSpec::Include(ids)
                } else {
                    StartSpec::Exclude(ids)
                }
            }
            other => return Err(error(line, format!("unexpected '{other}' after start"))),
        };
        self.start = Some((spec, line));
        Ok(())
    }

    fn ensure_tables(&mut self, line: usize) -> Step<()> {
        if self.tables.is_some() {
            return Ok(());
        }
        let ns = self.dim(Kind::State)?.count;
        let na = self.dim(Kind::Action)?.count;
        let nz = self.dim(Kind::Observation)?.count;
        na.checked_mul(ns)
            .and_then(|x| x.checked_mul(ns))
            .and_then(|x| x.checked_mul(nz))
            .filter(|&c| c <= MAX_REWARD_CELLS)
            .ok_or_else(|| error(line, "model too large"))?;
        self.tables = Some(Tables {
            ns,
            na,
            nz,
            trans: vec![0.0; na * ns * ns],
            obs: vec![0.0; na * ns * nz],
            reward: None,
            trans_line: vec![0; na * ns],
            obs_line: vec![0; na * ns],
        });
        Ok(())
    }

    fn transition_entry(&mut self, line: usize) -> Step<()> {
        let a = self.id(Kind::Action)?;
        let t = self.tables.as_ref().unwrap();
        let (ns, na) = (t.ns, t.na);
        if self.peek() != Some(":") {
            let values = match self.peek() {
                Some("identity") => {
                    self.pos += 1;
                    (0..ns * ns)
                        .map(|i| if i / ns == i % ns { 1.0 } else { 0.0 })
                        .collect()
                }
                Some("uniform") => {
                    self.pos += 1;
                    vec![1.0 / ns as f64; ns * ns]
                }
                _ => self.numbers(ns * ns)?,
            };
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s in 0..ns {
                    t.trans_line[a * ns + s] = line;
                    for s2 in 0..ns {
                        *t.t(a, s, s2) = values[s * ns + s2];
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let s = self.id(Kind::State)?;
        if self.peek() != Some(":") {
            let row = match self.peek() {
                Some("uniform") => {
                    self.pos += 1;
                    vec![1.0 / ns as f64; ns]
                }
                _ => self.numbers(ns)?,
            };
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s in s.range(ns) {
                    t.trans_line[a * ns + s] = line;
                    for (s2, &v) in row.iter().enumerate() {
                        *t.t(a, s, s2) = v;
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let s2 = self.id(Kind::State)?;
        let v = self.number()?;
        let t = self.tables.as_mut().unwrap();
        for a in a.range(na) {
            for s in s.range(ns) {
                t.trans_line[a * ns + s] = line;
                for s2 in s2.range(ns) {
                    *t.t(a, s, s2) = v;
                }
            }
        }
        Ok(())
    }

    fn observation_entry(&mut self, line: usize) -> Step<()> {
        let a = self.id(Kind::Action)?;
        let t = self.tables.as_ref().unwrap();
        let (ns, na, nz) = (t.ns, t.na, t.nz);
        if self.peek() != Some(":") {
            let values = match self.peek() {
                Some("uniform") => {
                    self.pos += 1;
                    vec![1.0 / nz as f64; ns * nz]
                }
                Some("identity") if ns == nz => {
                    self.pos += 1;
                    (0..ns * nz)
                        .map(|i| if i / nz == i % nz { 1.0 } else { 0.0 })
                        .collect()
                }
                _ => self.numbers(ns * nz)?,
            };
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s2 in 0..ns {
                    t.obs_line[a * ns + s2] = line;
                    for z in 0..nz {
                        *t.o(a, s2, z) = values[s2 * nz + z];
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let s2 = self.id(Kind::State)?;
        if self.peek() != Some(":") {
            let row = match self.peek() {
                Some("uniform") => {
                    self.pos += 1;
                    vec![1.0 / nz as f64; nz]
                }
                _ => self.numbers(nz)?,
            };
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s2 in s2.range(ns) {
                    t.obs_line[a * ns + s2] = line;
                    for (z, &v) in row.iter().enumerate() {
                        *t.o(a, s2, z) = v;
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let z = self.id(Kind::Observation)?;
        let v = self.number()?;
        let t = self.tables.as_mut().unwrap();
        for a in a.range(na) {
            for s2 in s2.range(ns) {
                t.obs_line[a * ns + s2] = line;
                for z in z.range(nz) {
                    *t.o(a, s2, z) = v;
                }
            }
        }
        Ok(())
    }

    fn reward_entry(&mut self, line: usize) -> Step<()> {
        let a = self.id(Kind::Action)?;
        let t = self.tables.as_ref().unwrap();
        let (ns, na, nz) = (t.ns, t.na, t.nz);
        if self.peek() != Some(":") {
            return Err(error(line, "R: entries need at least a start state"));
        }
        self.pos += 1;
        let s = self.id(Kind::State)?;
        if self.peek() != Some(":") {
            let values = self.numbers(ns * nz)?;
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s in s.range(ns) {
                    for s2 in 0..ns {
                        for z in 0..nz {
                            *t.r(a, s, s2, z) = values[s2 * nz + z];
                        }
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let s2 = self.id(Kind::State)?;
        if self.peek() != Some(":") {
            let row = self.numbers(nz)?;
            let t = self.tables.as_mut().unwrap();
            for a in a.range(na) {
                for s in s.range(ns) {
                    for s2 in s2.range(ns) {
                        for (z, &v) in row.iter().enumerate() {
                            *t.r(a, s, s2, z) = v;
                        }
                    }
                }
            }
            return Ok(());
        }
        self.pos += 1;
        let z = self.id(Kind::Observation)?;
        let v = self.number()?;
        let t = self.tables.as_mut().unwrap();
        for a in a.range(na) {
            for s in s.range(ns) {
                for s2 in s2.range(ns) {
                    for z in z.range(nz) {
                        *t.r(a, s, s2, z) = v;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ParsedPomdp, Vec<ParseDiagnostic>> {
        if self.diags.iter().any(|d| d.severity == Severity::Error) {
            return Err(self.diags);
        }
        let end = self.line();
        let Some(discount) = self.discount else {
            self.diags.push(error(end, "missing discount"));
            return Err(self.diags);
        };
        if !(discount > 0.0 && discount < 1.0) {
            self.diags.push(error(
                end,
                format!("discount {discount} must lie strictly between 0 and 1"),
            ));
            return Err(self.diags);
        }
        if self.tables.is_none() {
            if let Err(d) = self.ensure_tables(end) {
                self.diags.push(d);
                return Err(self.diags);
            }
        }
        let mut t = self.tables.take().unwrap();
        let (ns, na, nz) = (t.ns, t.na, t.nz);

        let mut errors = Vec::new();
        for a in 0..na {
            for s in 0..ns {
                let row = &mut t.trans[(a * ns + s) * ns..(a * ns + s + 1) * ns];
                if let Some(msg) = normalize_row(row) {
                    errors.push(error(
                        t.trans_line[a * ns + s].max(1),
                        format!("transition row for (s={s}, a={a}) {msg}"),
                    ));
                }
                let row = &mut t.obs[(a * ns + s) * nz..(a * ns + s + 1) * nz];
                if let Some(msg) = normalize_row(row) {
                    errors.push(error(
                        t.obs_line[a * ns + s].max(1),
                        format!("observation row for (s'={s}, a={a}) {msg}"),
                    ));
                }
            }
        }
        if !errors.is_empty() {
            self.diags.extend(errors);
            return Err(self.diags);
        }

        let sign = if self.cost { -1.0 } else { 1.0 };
        let mut reward = vec![0.0; ns * na];
        if let Some(r4) = &t.reward {
            for a in 0..na {
                for s in 0..ns {
                    let mut total = 0.0;
                    for s2 in 0..ns {
                        let p = t.trans[(a * ns + s) * ns + s2];
                        if p == 0.0 {
                            continue;
                        }
                        let base = ((a * ns + s) * ns + s2) * nz;
                        let inner: f64 = (0..nz)
                            .map(|z| t.obs[(a * ns + s2) * nz + z] * r4[base + z])
                            .sum();
                        total += p * inner;
                    }
                    reward[s * na + a] = sign * total;
                }
            }
        }

        let start = match self.start.take() {
            None | Some((StartSpec::Uniform, _)) => BeliefState::uniform(ns),
            Some((StartSpec::State(s), _)) => BeliefState::point(ns, s),
            Some((StartSpec::Vector(mut probs, line), _)) => {
                if let Some(msg) = normalize_row(&mut probs) {
                    self.diags.push(error(line, format!("start distribution {msg}")));
                    return Err(self.diags);
                }
                BeliefState::new(probs).expect("normalized")
            }
            Some((StartSpec::Include(ids), line)) => {
                let mut w = vec![0.0; ns];
                for i in ids {
                    w[i] = 1.0;
                }
                match BeliefState::from_weights(w) {
                    Ok(b) => b,
                    Err(_) => {
                        self.diags.push(error(line, "start include list is empty"));
                        return Err(self.diags);
                    }
                }
            }
            Some((StartSpec::Exclude(ids), line)) => {
                let mut w = vec![1.0; ns];
                for i in ids {
                    w[i] = 0.0;
                }
                match BeliefState::from_weights(w) {
                    Ok(b) => b,
                    Err(_) => {
                        self.diags.push(error(line, "start exclude list covers every state"));
                        return Err(self.diags);
                    }
                }
            }
        };

        let names = Names {
            states: self.states.and_then(|d| d.names),
            actions: self.actions.and_then(|d| d.names),
            observations: self.observations.and_then(|d| d.names),
        };
        let built = Pomdp::new(ns, na, nz, t.trans, t.obs, reward, discount)
            .and_then(|p| p.with_start(start))
            .map(|p| p.with_names(names));
        match built {
            Ok(pomdp) => Ok(ParsedPomdp {
                pomdp,
                warnings: self.diags,
            }),
            Err(e) => {
                self.diags.push(error(end, e.to_string()));
                Err(self.diags)
            }
        }
    }
}

/// Checks a probability row against [`ROW_SUM_TOL`] and rescales it to sum
/// to exactly one. Returns a description of the problem if it is rejected.
fn normalize_row(row: &mut [f64]) -> Option<String> {
    if let Some(v) = row.iter().find(|v| **v < 0.0) {
        return Some(format!("has negative entry {v}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Some(format!("sums to {sum}, not 1"));
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    None
}

/// Serializes a model in the same format, with `R(s, a)` written per
/// `(a, s)` pair. Numbers use the shortest representation that round-trips.
pub fn write_pomdp(p: &Pomdp) -> String {
    let (ns, na, nz) = (p.num_states(), p.num_actions(), p.num_observations());
    let mut out = String::new();
    let _ = writeln!(out, "discount: {:?}", p.discount());
    out.push_str("values: reward\n");
    let dim = |out: &mut String, label: &str, names: &Option<Vec<String>>, n: usize| {
        match names {
            Some(names) => {
                let _ = writeln!(out, "{label}: {}", names.join(" "));
            }
            None => {
                let _ = writeln!(out, "{label}: {n}");
            }
        }
    };
    dim(&mut out, "states", &p.names().states, ns);
    dim(&mut out, "actions", &p.names().actions, na);
    dim(&mut out, "observations", &p.names().observations, nz);
    out.push_str("start:");
    for v in p.start().probs() {
        let _ = write!(out, " {v:?}");
    }
    out.push('\n');
    for a in 0..na {
        let _ = writeln!(out, "T: {a}");
        for s in 0..ns {
            let row: Vec<String> = (0..ns).map(|s2| format!("{:?}", p.transition(s, a, s2))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    for a in 0..na {
        let _ = writeln!(out, "O: {a}");
        for s2 in 0..ns {
            let row: Vec<String> = p.observation_row(a, s2).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    for a in 0..na {
        for s in 0..ns {
            let _ = writeln!(out, "R: {a} : {s} : * : * {:?}", p.reward(s, a));
        }
    }
    out
}
