//! Cross-checks between the operational, denotational and game views of a
//! pair of session types, over single pairs and random corpora.

pub mod bisim;
pub mod corpus;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estructure::Participant;
use crate::game::{compose_session_contracts, eager_winning, find_winning_strategy, GameError};
use crate::lts::{Limits, Lts};
use crate::opsem::{
    check_compliance, check_compliance_turn, check_compliance_turn_within, explore_turn, Configuration, OpsemError,
    Verdict, DEFAULT_STATE_LIMIT,
};
use crate::syntax::{Action, SessionType};

pub use bisim::{bisim, BisimError, BisimResult};
pub use corpus::{corpus_pairs, random_session_type, CorpusSpec, Role};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Opsem(#[from] OpsemError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
    #[error("state limit {0} reached")]
    StateLimit(usize),
}

/// The two transition systems compared for a pair: the turn-based one and
/// the event-labelled one of the composed denotation.
#[derive(Debug, Clone)]
pub struct SystemPair {
    pub turn: Lts<Action>,
    pub events: Lts<Action>,
    /// Depth up to which both systems are meaningful, for recursive pairs.
    pub horizon: Option<usize>,
}

pub fn systems(p: &SessionType, q: &SessionType, unroll_depth: usize) -> Result<SystemPair, HarnessError> {
    let c = compose_session_contracts(p, "A", q, "B", unroll_depth)?;
    // A k-step comparison only looks k steps deep, so recursive pairs are
    // explored no further than their horizon.
    let limits = Limits { max_states: DEFAULT_STATE_LIMIT, max_depth: c.horizon };
    let ts = explore_turn(&Configuration::new(p.clone(), q.clone()), limits);
    let ets = c.es.ets_within(limits);
    let full = |truncated: bool, states: usize| !truncated || (c.horizon.is_some() && states < DEFAULT_STATE_LIMIT);
    if !full(ts.lts.truncated, ts.lts.num_states()) || !full(ets.lts.truncated, ets.lts.num_states()) {
        return Err(HarnessError::StateLimit(DEFAULT_STATE_LIMIT));
    }
    Ok(SystemPair { turn: ts.lts, events: c.es.relabel(&ets.lts), horizon: c.horizon })
}

/// Bisimilarity of the turn-based and event-labelled systems; bounded by
/// the contract horizon for recursive pairs.
pub fn theorem1_check(p: &SessionType, q: &SessionType, unroll_depth: usize) -> Result<BisimResult, HarnessError> {
    let s = systems(p, q, unroll_depth)?;
    Ok(bisim(&s.turn, &s.events, s.horizon)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theorem2Report {
    pub compliance: Verdict,
    pub eager: bool,
    /// Compliance and the eager verdict coincide.
    pub agree: bool,
    /// Whether a winning strategy exists, checked when compliant.
    pub agreement: Option<bool>,
    pub bounded: bool,
    pub horizon: Option<usize>,
    pub counterexample: Vec<String>,
}

/// Compliance of `p` with `q` against the eager strategy of the `p` side.
/// Recursive pairs compare both up to the contract horizon, using the
/// turn-based checker whose steps are one event each.
pub fn theorem2_check(p: &SessionType, q: &SessionType, unroll_depth: usize) -> Result<Theorem2Report, HarnessError> {
    let c = compose_session_contracts(p, "A", q, "B", unroll_depth)?;
    let a = Participant::new("A");
    let compliance = match c.horizon {
        Some(h) => check_compliance_turn_within(p, q, DEFAULT_STATE_LIMIT, h)?,
        None => check_compliance(p, q, DEFAULT_STATE_LIMIT)?,
    };
    if compliance.verdict == Verdict::Indeterminate {
        return Err(HarnessError::StateLimit(DEFAULT_STATE_LIMIT));
    }
    let eager = eager_winning(&c, &a)?;
    let compliant = compliance.is_compliant();
    let agreement = if compliant { Some(find_winning_strategy(&c, &a)?.winning) } else { None };
    Ok(Theorem2Report {
        compliance: compliance.verdict,
        eager: eager.winning,
        agree: compliant == eager.winning,
        agreement,
        bounded: c.horizon.is_some(),
        horizon: c.horizon,
        counterexample: eager.counterexample.iter().map(|e| e.to_string()).collect(),
    })
}

/// The synchronous and turn-based compliance checkers agree.
pub fn lemma1_check(p: &SessionType, q: &SessionType) -> Result<(Verdict, Verdict), HarnessError> {
    let sync = check_compliance(p, q, DEFAULT_STATE_LIMIT)?;
    let turn = check_compliance_turn(p, q, DEFAULT_STATE_LIMIT)?;
    Ok((sync.verdict, turn.verdict))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub check: String,
    pub p: String,
    pub q: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub seed: u64,
    pub recursive: bool,
    pub unroll_depth: usize,
    pub pairs: usize,
    pub compliant: usize,
    pub theorem1_agreements: usize,
    pub lemma1_agreements: usize,
    pub theorem2_agreements: usize,
    pub corollary1_agreements: usize,
    pub failures: Vec<Failure>,
}

impl CorpusSummary {
    pub fn failures_of(&self, check: &str) -> usize {
        self.failures.iter().filter(|f| f.check == check).count()
    }
}

#[derive(Debug, Default)]
struct Outcome {
    compliant: bool,
    theorem1: bool,
    lemma1: bool,
    theorem2: bool,
    corollary1: bool,
    failures: Vec<Failure>,
}

fn check_pair(spec: &CorpusSpec, index: usize, p: &SessionType, q: &SessionType) -> Outcome {
    let mut out = Outcome::default();
    let fail = |check: &str, detail: String| Failure {
        index,
        seed: spec.seed,
        check: check.into(),
        p: p.pretty(),
        q: q.pretty(),
        detail,
    };
    match theorem1_check(p, q, spec.unroll_depth) {
        Ok(r) if r.bisimilar => out.theorem1 = true,
        Ok(r) => out.failures.push(fail("theorem1", format!("not bisimilar (bound {:?})", r.bound))),
        Err(e) => out.failures.push(fail("theorem1", e.to_string())),
    }
    match lemma1_check(p, q) {
        Ok((s, t)) if s == t => out.lemma1 = true,
        Ok((s, t)) => out.failures.push(fail("lemma1", format!("synchronous {s:?}, turn-based {t:?}"))),
        Err(e) => out.failures.push(fail("lemma1", e.to_string())),
    }
    match theorem2_check(p, q, spec.unroll_depth) {
        Ok(r) => {
            out.compliant = r.compliance == Verdict::Compliant;
            if r.agree {
                out.theorem2 = true;
            } else {
                let detail = format!(
                    "compliance {:?}, eager winning {}, counterexample [{}]",
                    r.compliance,
                    r.eager,
                    r.counterexample.join(" ")
                );
                out.failures.push(fail("theorem2", detail));
            }
            match r.agreement {
                Some(false) => out.failures.push(fail("corollary1", "compliant but no winning strategy".into())),
                _ => out.corollary1 = true,
            }
        }
        Err(e) => out.failures.push(fail("theorem2", e.to_string())),
    }
    out
}

/// Runs every check on every pair of the corpus, in parallel. The summary
/// does not depend on scheduling.
pub fn run_corpus(spec: &CorpusSpec) -> CorpusSummary {
    let pairs = corpus_pairs(spec);
    let outcomes: Vec<Outcome> = pairs.par_iter().enumerate().map(|(i, (p, q))| check_pair(spec, i, p, q)).collect();
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    CorpusSummary {
        seed: spec.seed,
        recursive: spec.allow_recursion,
        unroll_depth: spec.unroll_depth,
        pairs: pairs.len(),
        compliant: count(|o| o.compliant),
        theorem1_agreements: count(|o| o.theorem1),
        lemma1_agreements: count(|o| o.lemma1),
        theorem2_agreements: count(|o| o.theorem2),
        corollary1_agreements: count(|o| o.corollary1),
        failures: outcomes.into_iter().flat_map(|o| o.failures).collect(),
    }
}
