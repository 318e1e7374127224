//! Synchronous and turn-based operational semantics of `P ∥ Q`, and the
//! compliance checks built on them.
//!
//! The synchronous system commits internal choices and unfolds recursion as
//! silent steps; communication is a handshake between a committed output and
//! a matching input. The turn-based system writes outputs into a one-place
//! buffer that the partner reads, fires `✓` from `1` into `0`, and unfolds
//! recursion implicitly.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::lts::{explore, Exploration, Limits};
use crate::syntax::{validate, Action, Branch, SessionType, Violation};

pub const DEFAULT_STATE_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum OpsemError {
    #[error("{side} session type is not well formed: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    IllFormed { side: Side, violations: Vec<Violation> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// `left ∥ right`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub left: SessionType,
    pub right: SessionType,
}

impl Configuration {
    pub fn new(left: SessionType, right: SessionType) -> Self {
        Configuration { left, right }
    }

    fn get(&self, side: Side) -> &SessionType {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    fn with(&self, side: Side, t: SessionType) -> Self {
        match side {
            Side::Left => Configuration::new(t, self.right.clone()),
            Side::Right => Configuration::new(self.left.clone(), t),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ∥ {}", self.left.pretty(), self.right.pretty())
    }
}

/// A silent step of the synchronous system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// `ā.P ⊕ Q → ā.P`
    Commit { side: Side, action: String },
    /// `rec x.P → P{x ↦ rec x.P}`
    Unfold { side: Side },
    /// Committed `ā` on `sender` meets `a` on the other side.
    Sync { sender: Side, action: String },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Commit { side, action } => write!(f, "τ commit !{action} ({side})"),
            Step::Unfold { side } => write!(f, "τ unfold ({side})"),
            Step::Sync { sender, action } => write!(f, "τ sync {action} ({sender} sends)"),
        }
    }
}

const SIDES: [Side; 2] = [Side::Left, Side::Right];

fn other(side: Side) -> Side {
    match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    }
}

/// Successors of `c` in the synchronous semantics. An empty result means `c`
/// is stuck.
pub fn step_fig1(c: &Configuration) -> Vec<(Step, Configuration)> {
    let mut out = Vec::new();
    for side in SIDES {
        match c.get(side) {
            SessionType::Internal(bs) if bs.len() > 1 => {
                for b in bs {
                    let committed = SessionType::Internal(vec![b.clone()]);
                    out.push((Step::Commit { side, action: b.action.clone() }, c.with(side, committed)));
                }
            }
            t @ SessionType::Rec(..) => {
                out.push((Step::Unfold { side }, c.with(side, t.unfold().expect("rec node"))));
            }
            _ => {}
        }
    }
    for sender in SIDES {
        let receiver = other(sender);
        if let (SessionType::Internal(out_bs), SessionType::External(in_bs)) = (c.get(sender), c.get(receiver)) {
            if let [Branch { action, cont }] = out_bs.as_slice() {
                if let Some(rb) = in_bs.iter().find(|b| &b.action == action) {
                    let next = c.with(sender, cont.clone()).with(receiver, rb.cont.clone());
                    out.push((Step::Sync { sender, action: action.clone() }, next));
                }
            }
        }
    }
    out
}

/// Successors of `c` in the turn-based semantics, labelled by the fired
/// action.
pub fn step_turn(c: &Configuration) -> Vec<(Action, Configuration)> {
    let mut out = Vec::new();
    for side in SIDES {
        let me = c.get(side).unfold_head();
        match &me {
            SessionType::Success => out.push((Action::Tick, c.with(side, SessionType::Stuck))),
            SessionType::Internal(bs) => {
                for b in bs {
                    let buffered = SessionType::Buffer(b.action.clone(), Box::new(b.cont.clone()));
                    out.push((Action::Out(b.action.clone()), c.with(side, buffered)));
                }
            }
            SessionType::External(bs) => {
                if let SessionType::Buffer(a, rest) = c.get(other(side)) {
                    if let Some(b) = bs.iter().find(|b| &b.action == a) {
                        let next = c.with(side, b.cont.clone()).with(other(side), (**rest).clone());
                        out.push((Action::In(a.clone()), next));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

pub fn explore_fig1(c: &Configuration, limits: Limits) -> Exploration<Configuration, Step> {
    explore(c.clone(), limits, step_fig1, |c| c.to_string())
}

pub fn explore_turn(c: &Configuration, limits: Limits) -> Exploration<Configuration, Action> {
    explore(c.clone(), limits, step_turn, |c| c.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Compliant,
    NonCompliant,
    /// The state limit was hit before a counterexample was found.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    Synchronous,
    TurnBased,
}

/// Outcome of a compliance check. Only stuck states are constrained, so a
/// system that cycles forever without getting stuck is compliant; `cyclic`
/// records whether the explored system has such cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplianceReport {
    pub verdict: Verdict,
    /// Step labels of a shortest path to a bad stuck state.
    pub witness: Vec<String>,
    pub truncated: bool,
    pub semantics: Semantics,
    pub states: usize,
    pub cyclic: bool,
    /// Set when the check only covered paths up to this many steps.
    pub bounded_depth: Option<usize>,
}

impl ComplianceReport {
    pub fn is_compliant(&self) -> bool {
        self.verdict == Verdict::Compliant
    }
}

fn check_well_formed(p: &SessionType, q: &SessionType) -> Result<(), OpsemError> {
    for (side, t) in [(Side::Left, p), (Side::Right, q)] {
        let violations = validate(t);
        if !violations.is_empty() {
            return Err(OpsemError::IllFormed { side, violations });
        }
    }
    Ok(())
}

fn report<L: Clone + fmt::Display>(
    ex: &Exploration<Configuration, L>,
    semantics: Semantics,
    bounded_depth: Option<usize>,
    done: impl Fn(&SessionType) -> bool,
) -> ComplianceReport {
    // BFS discovery order is nondecreasing in depth, so the first bad stuck
    // state has a shortest witness.
    let bad = ex.stuck_states().find(|&s| !done(&ex.nodes[s].left));
    let verdict = match bad {
        Some(_) => Verdict::NonCompliant,
        None if ex.lts.truncated && bounded_depth.is_none() => Verdict::Indeterminate,
        None => Verdict::Compliant,
    };
    ComplianceReport {
        verdict,
        witness: bad.map(|s| ex.path_to(s).iter().map(|l| l.to_string()).collect()).unwrap_or_default(),
        truncated: ex.lts.truncated,
        semantics,
        states: ex.lts.num_states(),
        cyclic: ex.lts.has_cycle(),
        bounded_depth,
    }
}

/// `p` is compliant with `q` iff every reachable stuck configuration of the
/// synchronous system has `1` on the left.
pub fn check_compliance(p: &SessionType, q: &SessionType, state_limit: usize) -> Result<ComplianceReport, OpsemError> {
    check_well_formed(p, q)?;
    let ex = explore_fig1(&Configuration::new(p.clone(), q.clone()), Limits::states(state_limit));
    Ok(report(&ex, Semantics::Synchronous, None, |t| *t == SessionType::Success))
}

/// Turn-based reformulation: every reachable stuck configuration has `0` on
/// the left.
pub fn check_compliance_turn(p: &SessionType, q: &SessionType, state_limit: usize) -> Result<ComplianceReport, OpsemError> {
    check_well_formed(p, q)?;
    let ex = explore_turn(&Configuration::new(p.clone(), q.clone()), Limits::states(state_limit));
    Ok(report(&ex, Semantics::TurnBased, None, |t| *t == SessionType::Stuck))
}

/// Turn-based check restricted to stuck states at most `depth` steps from the
/// start. Used to compare against depth-bounded event structures.
pub fn check_compliance_turn_within(
    p: &SessionType,
    q: &SessionType,
    state_limit: usize,
    depth: usize,
) -> Result<ComplianceReport, OpsemError> {
    check_well_formed(p, q)?;
    let limits = Limits { max_states: state_limit, max_depth: Some(depth) };
    let ex = explore_turn(&Configuration::new(p.clone(), q.clone()), limits);
    Ok(report(&ex, Semantics::TurnBased, Some(depth), |t| *t == SessionType::Stuck))
}
