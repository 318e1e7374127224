//! Contracts, plays and strategies over event structures.

mod arena;
mod solve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::denote::{denote, denote_par, DenoteEnv, DenoteError, EventNamer, Parity};
use crate::estructure::{EsError, EventId, EventStructure, Participant};
use crate::syntax::{validate, Action, SessionType, Violation};

pub use arena::Arena;
pub use solve::{
    eager_winning, eager_winning_by_search, find_winning_strategy, strategy_is_winning, GameVerdict, StrategyKind,
};

/// Upper bound on distinct histories visited by one search.
pub const DEFAULT_HISTORY_LIMIT: usize = 2_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("participant {0} has no payoff")]
    UndefinedPayoff(Participant),
    #[error("participant {0} owns enabled events but has no payoff")]
    MissingPayoff(Participant),
    #[error("contracts both assign payoffs to {0}")]
    NotComposable(Participant),
    #[error("both session types belong to {0}")]
    SameParticipant(Participant),
    #[error("event {event} at position {position} cannot fire")]
    InvalidPlay { position: usize, event: EventId },
    #[error("ill-formed session type: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    IllFormed(Vec<Violation>),
    #[error("search visited more than {0} histories")]
    TooLarge(usize),
    #[error(transparent)]
    Denote(#[from] DenoteError),
    #[error(transparent)]
    Es(#[from] EsError),
}

/// How a participant's payoff is decided. The only kind: a finite play pays
/// off iff it contains one of the participant's `✓` events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoffKind {
    Success,
}

/// Partial map from participants to payoffs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PayoffSpec(pub BTreeMap<Participant, PayoffKind>);

impl PayoffSpec {
    pub fn success(who: &Participant) -> Self {
        PayoffSpec(BTreeMap::from([(who.clone(), PayoffKind::Success)]))
    }

    pub fn get(&self, who: &Participant) -> Option<PayoffKind> {
        self.0.get(who).copied()
    }

    /// Whether the finite play with event set `history` pays off for `who`.
    pub fn pays(&self, es: &EventStructure, who: &Participant, history: &BTreeSet<EventId>) -> Option<bool> {
        match self.get(who)? {
            PayoffKind::Success => Some(history.iter().any(|id| {
                es.event(id).is_some_and(|ev| &ev.participant == who && ev.label == Action::Tick)
            })),
        }
    }
}

/// An event structure with payoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contract {
    pub es: EventStructure,
    pub payoffs: PayoffSpec,
    /// Plays of this length or longer are not evaluated. Set for contracts
    /// built from recursive types, whose denotation is truncated.
    pub horizon: Option<usize>,
    /// Recursion unrolling depth the contract was built with, if it matters.
    pub bounded_depth: Option<usize>,
}

impl Contract {
    pub fn new(es: EventStructure, payoffs: PayoffSpec) -> Result<Self, GameError> {
        for en in es.enablings() {
            let owner = &es.event(&en.target).expect("generator targets exist").participant;
            if payoffs.get(owner).is_none() {
                return Err(GameError::MissingPayoff(owner.clone()));
            }
        }
        Ok(Contract { es, payoffs, horizon: None, bounded_depth: None })
    }

    /// The empty contract: no events, no payoffs.
    pub fn empty() -> Self {
        Contract { es: EventStructure::empty(), payoffs: PayoffSpec::default(), horizon: None, bounded_depth: None }
    }

    /// Participants that own events or have a payoff.
    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut ps = self.es.participants();
        ps.extend(self.payoffs.0.keys().cloned());
        ps
    }

    pub fn with_horizon(mut self, horizon: Option<usize>, bounded_depth: Option<usize>) -> Self {
        self.horizon = horizon;
        self.bounded_depth = bounded_depth;
        self
    }
}

/// Contracts compose when no participant has a payoff in both.
pub fn composable(c1: &Contract, c2: &Contract) -> bool {
    c1.payoffs.0.keys().all(|p| !c2.payoffs.0.contains_key(p))
}

/// Componentwise union of two composable contracts. Synchronisation is not
/// added: inputs of one side are not enabled by outputs of the other. Use
/// [`compose_session_contracts`] for the synchronised composition.
pub fn compose(c1: &Contract, c2: &Contract) -> Result<Contract, GameError> {
    if let Some(p) = c1.payoffs.0.keys().find(|p| c2.payoffs.0.contains_key(*p)) {
        return Err(GameError::NotComposable(p.clone()));
    }
    let es = c1.es.union(&c2.es)?;
    let mut payoffs = c1.payoffs.clone();
    payoffs.0.extend(c2.payoffs.0.iter().map(|(k, v)| (k.clone(), *v)));
    let horizon = match (c1.horizon, c2.horizon) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let depth = c1.bounded_depth.or(c2.bounded_depth);
    Ok(Contract { es, payoffs, horizon, bounded_depth: depth })
}

fn check_type(t: &SessionType) -> Result<(), GameError> {
    let v = validate(t);
    if v.is_empty() {
        Ok(())
    } else {
        Err(GameError::IllFormed(v))
    }
}

/// Plays shorter than this are unaffected by truncating each recursion at
/// `unroll_depth` copies: reaching a missing copy takes at least
/// `unroll_depth` guards' worth of one participant's events.
pub fn horizon_for(types: &[&SessionType], unroll_depth: usize) -> Option<usize> {
    let guard = types.iter().filter_map(|t| t.min_guard()).min()?;
    Some(unroll_depth * guard)
}

/// The single-participant contract of a session type.
pub fn contract_of(
    t: &SessionType,
    who: &str,
    parity: Parity,
    unroll_depth: usize,
) -> Result<Contract, GameError> {
    check_type(t)?;
    let namer = EventNamer::new(who, parity);
    let es = denote(t, &namer, &DenoteEnv::new(), unroll_depth)?;
    let horizon = horizon_for(&[t], unroll_depth);
    let c = Contract::new(es, PayoffSpec::success(&namer.participant))?;
    Ok(c.with_horizon(horizon, horizon.map(|_| unroll_depth)))
}

/// The contract of two session types run against each other: the event
/// structure is the synchronised parallel composition, and each side's
/// payoff is reaching its own `✓`. `a` gets odd event ids, `b` even ones.
pub fn compose_session_contracts(
    p: &SessionType,
    a: &str,
    q: &SessionType,
    b: &str,
    unroll_depth: usize,
) -> Result<Contract, GameError> {
    if a == b {
        return Err(GameError::SameParticipant(Participant::new(a)));
    }
    let ca = contract_of(p, a, Parity::Odd, unroll_depth)?;
    let cb = contract_of(q, b, Parity::Even, unroll_depth)?;
    let es = denote_par(&ca.es, &cb.es)?;
    let mut payoffs = ca.payoffs;
    payoffs.0.extend(cb.payoffs.0);
    let horizon = horizon_for(&[p, q], unroll_depth);
    Ok(Contract::new(es, payoffs)?.with_horizon(horizon, horizon.map(|_| unroll_depth)))
}

/// A finite play: a sequence of distinct events, each fireable after its
/// predecessors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Play(pub Vec<EventId>);

impl Play {
    pub fn new(es: &EventStructure, seq: Vec<EventId>) -> Result<Play, GameError> {
        let mut h = BTreeSet::new();
        for (position, e) in seq.iter().enumerate() {
            if !es.can_fire(&h, e) {
                return Err(GameError::InvalidPlay { position, event: e.clone() });
            }
            h.insert(e.clone());
        }
        Ok(Play(seq))
    }

    /// Parses ids like `e1 e2 e3` (commas allowed).
    pub fn parse(es: &EventStructure, text: &str) -> Result<Play, String> {
        let seq = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<EventId>())
            .collect::<Result<Vec<_>, _>>()?;
        Play::new(es, seq).map_err(|e| e.to_string())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The prefix `σᵢ` of the first `i` events.
    pub fn prefix(&self, i: usize) -> &[EventId] {
        &self.0[..i]
    }

    /// `⌊σ⌋`, the set of events of the play.
    pub fn events(&self) -> BTreeSet<EventId> {
        self.0.iter().cloned().collect()
    }
}

impl fmt::Display for Play {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "⟨{}⟩", ids.join(" "))
    }
}

/// A strategy for one participant. Explicit strategies prescribe by the set
/// of events played so far; unlisted histories prescribe nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Eager(Participant),
    Explicit { participant: Participant, moves: BTreeMap<BTreeSet<EventId>, BTreeSet<EventId>> },
}

/// One entry of a serialised explicit strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub prefix: Vec<EventId>,
    pub prescribe: Vec<EventId>,
}

impl Strategy {
    pub fn participant(&self) -> &Participant {
        match self {
            Strategy::Eager(p) | Strategy::Explicit { participant: p, .. } => p,
        }
    }

    pub fn explicit(participant: Participant) -> Self {
        Strategy::Explicit { participant, moves: BTreeMap::new() }
    }

    /// Adds a prescription for the history `prefix` (order irrelevant).
    pub fn prescribe(mut self, prefix: &[EventId], events: &[EventId]) -> Self {
        if let Strategy::Explicit { moves, .. } = &mut self {
            moves.insert(prefix.iter().cloned().collect(), events.iter().cloned().collect());
        }
        self
    }

    /// Serialised form: one entry per history, sorted by history.
    pub fn entries(&self) -> Vec<StrategyEntry> {
        match self {
            Strategy::Eager(_) => Vec::new(),
            Strategy::Explicit { moves, .. } => moves
                .iter()
                .map(|(h, s)| StrategyEntry { prefix: h.iter().cloned().collect(), prescribe: s.iter().cloned().collect() })
                .collect(),
        }
    }

    pub fn from_entries(participant: Participant, entries: &[StrategyEntry]) -> Self {
        let moves = entries
            .iter()
            .map(|en| (en.prefix.iter().cloned().collect(), en.prescribe.iter().cloned().collect()))
            .collect();
        Strategy::Explicit { participant, moves }
    }
}

/// Own events of `who` that can fire after `history`.
pub fn fireable_own(es: &EventStructure, history: &BTreeSet<EventId>, who: &Participant) -> BTreeSet<EventId> {
    es.events().filter(|ev| &ev.participant == who && es.can_fire(history, &ev.id)).map(|ev| ev.id.clone()).collect()
}

/// `Σ(σ)` for a play given by its events so far. Explicit prescriptions are
/// restricted to events that can actually extend the play.
pub fn prescribed(s: &Strategy, es: &EventStructure, history: &[EventId]) -> BTreeSet<EventId> {
    let h: BTreeSet<EventId> = history.iter().cloned().collect();
    let own = fireable_own(es, &h, s.participant());
    match s {
        Strategy::Eager(_) => own,
        Strategy::Explicit { moves, .. } => moves.get(&h).map(|m| m.intersection(&own).cloned().collect()).unwrap_or_default(),
    }
}

/// Every event of the strategy's participant was prescribed when played.
pub fn conforms(es: &EventStructure, play: &Play, s: &Strategy) -> bool {
    let who = s.participant();
    play.0.iter().enumerate().all(|(i, e)| {
        es.event(e).is_none_or(|ev| &ev.participant != who) || prescribed(s, es, play.prefix(i)).contains(e)
    })
}

/// Fairness of a finite play, by direct evaluation of the quantifiers: an
/// event prescribed at every prefix from `i` to the end must occur at or
/// after position `i`.
pub fn is_fair(es: &EventStructure, play: &Play, s: &Strategy) -> bool {
    let n = play.len();
    let prescriptions: Vec<BTreeSet<EventId>> = (0..=n).map(|j| prescribed(s, es, play.prefix(j))).collect();
    (0..=n).all(|i| {
        let persistent = prescriptions[i..].iter().skip(1).fold(prescriptions[i].clone(), |acc, p| &acc & p);
        persistent.iter().all(|e| play.0[i..].contains(e))
    })
}

/// Innocence of `who` in a finite play: every own event that becomes
/// fireable at some prefix is later played or conflicted. Events already
/// played or conflicted at that prefix impose nothing.
pub fn innocent(es: &EventStructure, play: &Play, who: &Participant) -> bool {
    let n = play.len();
    (0..=n).all(|i| {
        let h: BTreeSet<EventId> = play.prefix(i).iter().cloned().collect();
        fireable_own(es, &h, who)
            .iter()
            .all(|e| play.0[i..].iter().any(|x| x == e || es.in_conflict(x, e)))
    })
}

/// Whether `who` wins the finite play: either everybody is innocent and
/// `who`'s payoff holds, or `who` is innocent and somebody else is not.
pub fn winning_play(c: &Contract, play: &Play, who: &Participant) -> Result<bool, GameError> {
    let h = play.events();
    let pays = c.payoffs.pays(&c.es, who, &h).ok_or_else(|| GameError::UndefinedPayoff(who.clone()))?;
    if !innocent(&c.es, play, who) {
        return Ok(false);
    }
    let others_culpable = c.participants().iter().filter(|p| *p != who).any(|p| !innocent(&c.es, play, p));
    Ok(others_culpable || pays)
}
