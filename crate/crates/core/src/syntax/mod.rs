//! Binary session types: abstract syntax, well-formedness, substitution.
//!
//! The surface grammar is
//!
//! ```text
//! P ::= "1" | ("!" | "?") IDENT ["." P] | P "(+)" P | P "+" P
//!     | "rec" IDENT "." P | IDENT | "(" P ")"
//! ```
//!
//! `(+)` is internal choice over outputs, `+` is external choice over inputs.
//! A choice is a homogeneous n-ary node; mixing the two operators at one level
//! is rejected. `rec` extends as far to the right as possible.

mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use parse::{parse, ParseError};

/// An action label: an input `a`, an output `ā`, or the success output `✓`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Action {
    In(String),
    Out(String),
    Tick,
}

impl Action {
    /// The co-action. `✓` has none.
    pub fn co(&self) -> Option<Action> {
        match self {
            Action::In(a) => Some(Action::Out(a.clone())),
            Action::Out(a) => Some(Action::In(a.clone())),
            Action::Tick => None,
        }
    }

    /// Output polarity; `✓` counts as an output.
    pub fn is_output(&self) -> bool {
        !matches!(self, Action::In(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::In(a) => write!(f, "?{a}"),
            Action::Out(a) => write!(f, "!{a}"),
            Action::Tick => f.write_str("✓"),
        }
    }
}

impl From<Action> for String {
    fn from(a: Action) -> String {
        a.to_string()
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name_ok = |n: &str| parse::is_identifier(n);
        if s == "✓" || s == "tick" {
            Ok(Action::Tick)
        } else if let Some(n) = s.strip_prefix('?').filter(|n| name_ok(n)) {
            Ok(Action::In(n.to_string()))
        } else if let Some(n) = s.strip_prefix('!').filter(|n| name_ok(n)) {
            Ok(Action::Out(n.to_string()))
        } else {
            Err(format!("not an action label: `{s}`"))
        }
    }
}

impl TryFrom<String> for Action {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One branch `α.P` of a choice; the polarity of `α` is carried by the
/// enclosing choice node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Branch {
    pub action: String,
    pub cont: SessionType,
}

impl Branch {
    pub fn new(action: impl Into<String>, cont: SessionType) -> Self {
        Branch { action: action.into(), cont }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionType {
    /// `1`
    Success,
    /// `⊕ āᵢ.Pᵢ`
    Internal(Vec<Branch>),
    /// `Σ aᵢ.Pᵢ`
    External(Vec<Branch>),
    Rec(String, Box<SessionType>),
    Var(String),
    /// `[ā]P`, a one-place buffer holding `ā`. Only produced by the
    /// turn-based semantics.
    Buffer(String, Box<SessionType>),
    /// `0`, reached after firing `✓`. Only produced by the turn-based semantics.
    Stuck,
}

impl SessionType {
    /// `!a.cont`
    pub fn output(action: impl Into<String>, cont: SessionType) -> Self {
        SessionType::Internal(vec![Branch::new(action, cont)])
    }

    /// `?a.cont`
    pub fn input(action: impl Into<String>, cont: SessionType) -> Self {
        SessionType::External(vec![Branch::new(action, cont)])
    }

    pub fn rec(var: impl Into<String>, body: SessionType) -> Self {
        SessionType::Rec(var.into(), Box::new(body))
    }

    pub fn var(name: impl Into<String>) -> Self {
        SessionType::Var(name.into())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            SessionType::Success | SessionType::Stuck => {}
            SessionType::Internal(bs) | SessionType::External(bs) => {
                for b in bs {
                    b.cont.collect_free(bound, out);
                }
            }
            SessionType::Rec(x, body) => {
                bound.push(x);
                body.collect_free(bound, out);
                bound.pop();
            }
            SessionType::Var(x) => {
                if !bound.contains(&x.as_str()) {
                    out.insert(x.clone());
                }
            }
            SessionType::Buffer(_, p) => p.collect_free(bound, out),
        }
    }

    fn all_binders(&self, out: &mut BTreeSet<String>) {
        match self {
            SessionType::Internal(bs) | SessionType::External(bs) => {
                bs.iter().for_each(|b| b.cont.all_binders(out))
            }
            SessionType::Rec(x, body) => {
                out.insert(x.clone());
                body.all_binders(out);
            }
            SessionType::Buffer(_, p) => p.all_binders(out),
            _ => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-avoiding substitution `self{var ↦ replacement}`.
    pub fn subst(&self, var: &str, replacement: &SessionType) -> SessionType {
        let repl_free = replacement.free_vars();
        self.subst_inner(var, replacement, &repl_free)
    }

    fn subst_inner(&self, var: &str, repl: &SessionType, repl_free: &BTreeSet<String>) -> Self {
        match self {
            SessionType::Success => SessionType::Success,
            SessionType::Stuck => SessionType::Stuck,
            SessionType::Var(x) if x == var => repl.clone(),
            SessionType::Var(x) => SessionType::Var(x.clone()),
            SessionType::Internal(bs) => SessionType::Internal(subst_branches(bs, var, repl, repl_free)),
            SessionType::External(bs) => SessionType::External(subst_branches(bs, var, repl, repl_free)),
            SessionType::Buffer(a, p) => {
                SessionType::Buffer(a.clone(), Box::new(p.subst_inner(var, repl, repl_free)))
            }
            SessionType::Rec(y, _) if y == var => self.clone(),
            SessionType::Rec(y, body) => {
                if repl_free.contains(y) && body.free_vars().contains(var) {
                    let mut avoid = repl_free.clone();
                    avoid.extend(body.free_vars());
                    body.all_binders(&mut avoid);
                    avoid.insert(var.to_string());
                    let fresh = fresh_name(y, &avoid);
                    let renamed = body.subst(y, &SessionType::Var(fresh.clone()));
                    SessionType::Rec(fresh, Box::new(renamed.subst_inner(var, repl, repl_free)))
                } else {
                    SessionType::Rec(y.clone(), Box::new(body.subst_inner(var, repl, repl_free)))
                }
            }
        }
    }

    /// One recursion unfolding `rec x.P ↦ P{x ↦ rec x.P}`; `None` if `self`
    /// is not a `rec` node.
    pub fn unfold(&self) -> Option<SessionType> {
        match self {
            SessionType::Rec(x, body) => Some(body.subst(x, self)),
            _ => None,
        }
    }

    /// Unfolds leading `rec` binders until the head is not a `rec`.
    /// Terminates on guarded terms.
    pub fn unfold_head(&self) -> SessionType {
        let mut t = self.clone();
        while let Some(next) = t.unfold() {
            t = next;
        }
        t
    }

    pub fn has_recursion(&self) -> bool {
        match self {
            SessionType::Rec(..) => true,
            SessionType::Internal(bs) | SessionType::External(bs) => {
                bs.iter().any(|b| b.cont.has_recursion())
            }
            SessionType::Buffer(_, p) => p.has_recursion(),
            _ => false,
        }
    }

    /// Minimum number of action prefixes on any path from a `rec x` binder to
    /// an occurrence of `x`; `None` if the term has no recursive call.
    pub fn min_guard(&self) -> Option<usize> {
        fn walk(t: &SessionType, open: &mut Vec<(String, usize)>, best: &mut Option<usize>) {
            match t {
                SessionType::Var(x) => {
                    if let Some((_, g)) = open.iter().rev().find(|(y, _)| y == x) {
                        *best = Some(best.map_or(*g, |b| b.min(*g)));
                    }
                }
                SessionType::Rec(x, body) => {
                    open.push((x.clone(), 0));
                    walk(body, open, best);
                    open.pop();
                }
                SessionType::Internal(bs) | SessionType::External(bs) => {
                    for b in bs {
                        open.iter_mut().for_each(|(_, g)| *g += 1);
                        walk(&b.cont, open, best);
                        open.iter_mut().for_each(|(_, g)| *g -= 1);
                    }
                }
                SessionType::Buffer(_, p) => walk(p, open, best),
                SessionType::Success | SessionType::Stuck => {}
            }
        }
        let mut best = None;
        walk(self, &mut Vec::new(), &mut best);
        best
    }

    /// Nesting depth of prefixes along the longest path, ignoring binders.
    pub fn prefix_depth(&self) -> usize {
        match self {
            SessionType::Internal(bs) | SessionType::External(bs) => {
                1 + bs.iter().map(|b| b.cont.prefix_depth()).max().unwrap_or(0)
            }
            SessionType::Rec(_, p) | SessionType::Buffer(_, p) => p.prefix_depth(),
            _ => 0,
        }
    }

    /// The dual type: internal and external choices swapped.
    pub fn dual(&self) -> SessionType {
        match self {
            SessionType::Internal(bs) => SessionType::External(dual_branches(bs)),
            SessionType::External(bs) => SessionType::Internal(dual_branches(bs)),
            SessionType::Rec(x, p) => SessionType::Rec(x.clone(), Box::new(p.dual())),
            SessionType::Buffer(a, p) => SessionType::Buffer(a.clone(), Box::new(p.dual())),
            t => t.clone(),
        }
    }

    pub fn pretty(&self) -> String {
        print::pretty(self)
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl FromStr for SessionType {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn subst_branches(
    bs: &[Branch],
    var: &str,
    repl: &SessionType,
    repl_free: &BTreeSet<String>,
) -> Vec<Branch> {
    bs.iter()
        .map(|b| Branch::new(b.action.clone(), b.cont.subst_inner(var, repl, repl_free)))
        .collect()
}

fn dual_branches(bs: &[Branch]) -> Vec<Branch> {
    bs.iter().map(|b| Branch::new(b.action.clone(), b.cont.dual())).collect()
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded name supply")
}

/// Which well-formedness rule a subterm breaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", content = "name", rename_all = "kebab-case")]
pub enum Rule {
    FreeVariable(String),
    UnguardedRecursion(String),
    DuplicateAction(String),
    EmptyChoice,
    /// `[ā]P` or `0` in a source term.
    RuntimeForm,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::FreeVariable(x) => write!(f, "free variable `{x}`"),
            Rule::UnguardedRecursion(x) => write!(f, "unguarded recursion on `{x}`"),
            Rule::DuplicateAction(a) => write!(f, "duplicate action `{a}` in choice"),
            Rule::EmptyChoice => f.write_str("empty choice"),
            Rule::RuntimeForm => f.write_str("buffer or stuck state in a source term"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    #[serde(flatten)]
    pub rule: Rule,
    pub subterm: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in `{}`", self.rule, self.subterm)
    }
}

/// Checks closedness, guardedness, and branch distinctness. An empty report
/// means the term is a well-formed source session type.
pub fn validate(t: &SessionType) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_in(t, &mut Vec::new(), &mut out);
    out
}

fn validate_in<'a>(t: &'a SessionType, bound: &mut Vec<&'a str>, out: &mut Vec<Violation>) {
    let mut report = |rule: Rule| out.push(Violation { rule, subterm: t.pretty() });
    match t {
        SessionType::Success => {}
        SessionType::Stuck => report(Rule::RuntimeForm),
        SessionType::Buffer(_, p) => {
            report(Rule::RuntimeForm);
            validate_in(p, bound, out);
        }
        SessionType::Var(x) => {
            if !bound.contains(&x.as_str()) {
                report(Rule::FreeVariable(x.clone()));
            }
        }
        SessionType::Rec(x, body) => {
            if unguarded(body, x) {
                report(Rule::UnguardedRecursion(x.clone()));
            }
            bound.push(x);
            validate_in(body, bound, out);
            bound.pop();
        }
        SessionType::Internal(bs) | SessionType::External(bs) => {
            if bs.is_empty() {
                report(Rule::EmptyChoice);
            }
            let mut seen = BTreeSet::new();
            for b in bs {
                if !seen.insert(b.action.as_str()) {
                    report(Rule::DuplicateAction(b.action.clone()));
                }
            }
            for b in bs {
                validate_in(&b.cont, bound, out);
            }
        }
    }
}

/// Does `x` occur in `t` without passing through a prefix?
fn unguarded(t: &SessionType, x: &str) -> bool {
    match t {
        SessionType::Var(y) => y == x,
        SessionType::Rec(y, body) => y != x && unguarded(body, x),
        _ => false,
    }
}
