//! Labelled event structures in generator form.
//!
//! An enabling relation is stored as a finite set of generators `(X₀, e)`.
//! The saturated relation is recovered by subset query:
//! `X ⊢ e` iff `CF(X)` and some generator `(X₀, e)` has `X₀ ⊆ X`.
//! Generators whose premise is not conflict-free are kept; they can never
//! fire since every superset of their premise is in conflict.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lts::{explore, Exploration, Limits, Lts};
use crate::syntax::Action;

/// Event identifier `e<index>`, with one `_<k>` suffix per enclosing
/// recursion unrolling level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId {
    pub index: u32,
    pub unroll: Vec<u32>,
}

impl EventId {
    pub fn new(index: u32) -> Self {
        EventId { index, unroll: Vec::new() }
    }
}

/// Shorthand for the unsuffixed id `e<n>`.
pub fn e(n: u32) -> EventId {
    EventId::new(n)
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.index)?;
        for k in &self.unroll {
            write!(f, "_{k}")?;
        }
        Ok(())
    }
}

impl FromStr for EventId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("not an event id: `{s}`");
        let rest = s.strip_prefix('e').ok_or_else(bad)?;
        let mut parts = rest.split('_');
        let index = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let unroll = parts.map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        Ok(EventId { index, unroll })
    }
}

impl Serialize for EventId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Participant(pub String);

impl Participant {
    pub fn new(name: impl Into<String>) -> Self {
        Participant(name.into())
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub participant: Participant,
    pub label: Action,
}

/// A generator `premise ⊢ target`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Enabling {
    pub premise: BTreeSet<EventId>,
    pub target: EventId,
}

impl Enabling {
    pub fn new(premise: impl IntoIterator<Item = EventId>, target: EventId) -> Self {
        Enabling { premise: premise.into_iter().collect(), target }
    }
}

impl fmt::Display for Enabling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.premise.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}} ⊢ {}", ids.join(","), self.target)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EsError {
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("event {0} declared twice")]
    DuplicateEvent(EventId),
    #[error("event {0} in conflict with itself")]
    SelfConflict(EventId),
    #[error("event structures share events: {0:?}")]
    Overlap(Vec<EventId>),
    #[error("chain is not increasing at position {0}")]
    NotAChain(usize),
    #[error("empty chain")]
    EmptyChain,
    #[error("malformed event structure JSON: {0}")]
    Json(String),
}

/// A labelled event structure `⟨E, #, ⊢, ℓ⟩` with participant-tagged events.
/// All components are ordered sets, so equal structures have equal
/// canonical forms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventStructure {
    events: BTreeMap<EventId, Event>,
    /// Unordered pairs stored with the smaller id first.
    conflicts: BTreeSet<(EventId, EventId)>,
    enablings: BTreeSet<Enabling>,
}

impl EventStructure {
    /// The empty structure, least element of the approximation order.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn add_event(&mut self, ev: Event) -> Result<(), EsError> {
        if self.events.contains_key(&ev.id) {
            return Err(EsError::DuplicateEvent(ev.id));
        }
        self.events.insert(ev.id.clone(), ev);
        Ok(())
    }

    pub fn add_conflict(&mut self, a: EventId, b: EventId) -> Result<(), EsError> {
        self.require(&a)?;
        self.require(&b)?;
        if a == b {
            return Err(EsError::SelfConflict(a));
        }
        self.conflicts.insert(if a < b { (a, b) } else { (b, a) });
        Ok(())
    }

    pub fn add_enabling(&mut self, en: Enabling) -> Result<(), EsError> {
        self.require(&en.target)?;
        for p in &en.premise {
            self.require(p)?;
        }
        self.enablings.insert(en);
        Ok(())
    }

    fn require(&self, id: &EventId) -> Result<(), EsError> {
        if self.events.contains_key(id) {
            Ok(())
        } else {
            Err(EsError::UnknownEvent(id.clone()))
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.events.values()
    }

    pub fn event(&self, id: &EventId) -> Option<&Event> {
        self.events.get(id)
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.events.contains_key(id)
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn conflicts(&self) -> impl Iterator<Item = &(EventId, EventId)> {
        self.conflicts.iter()
    }

    pub fn enablings(&self) -> impl Iterator<Item = &Enabling> {
        self.enablings.iter()
    }

    pub fn label(&self, id: &EventId) -> Option<&Action> {
        self.events.get(id).map(|e| &e.label)
    }

    pub fn in_conflict(&self, a: &EventId, b: &EventId) -> bool {
        let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        self.conflicts.contains(&key)
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        self.events.values().map(|e| e.participant.clone()).collect()
    }

    /// `CF(xs)`: no two events of `xs` are in conflict.
    pub fn conflict_free<'a>(&self, xs: impl IntoIterator<Item = &'a EventId>) -> Result<bool, EsError> {
        let xs: Vec<&EventId> = xs.into_iter().collect();
        for x in &xs {
            self.require(x)?;
        }
        Ok(self.cf_unchecked(xs.iter().copied()))
    }

    fn cf_unchecked<'a>(&self, xs: impl Iterator<Item = &'a EventId> + Clone) -> bool {
        // Conflicts are usually far fewer than pairs of a history.
        let set: BTreeSet<&EventId> = xs.collect();
        !self.conflicts.iter().any(|(a, b)| set.contains(a) && set.contains(b))
    }

    /// The saturated enabling relation: `history ⊢ e`.
    pub fn enabled(&self, history: &BTreeSet<EventId>, e: &EventId) -> bool {
        self.cf_unchecked(history.iter())
            && self.enablings.iter().any(|en| &en.target == e && en.premise.is_subset(history))
    }

    /// `e` can extend a play with event set `history`: enabled, not yet
    /// fired, and not in conflict with anything fired.
    pub fn can_fire(&self, history: &BTreeSet<EventId>, e: &EventId) -> bool {
        !history.contains(e)
            && self.contains(e)
            && history.iter().all(|h| !self.in_conflict(h, e))
            && self.enabled(history, e)
    }

    /// Events with an empty-premise generator.
    pub fn initial_events(&self) -> BTreeSet<EventId> {
        self.enablings.iter().filter(|en| en.premise.is_empty()).map(|en| en.target.clone()).collect()
    }

    /// The residual structure after firing `e`: `e` and its conflicts leave;
    /// generators for removed targets, or whose premise conflicts with `e`,
    /// are dropped; `e` is erased from the remaining premises.
    pub fn remainder(&self, e: &EventId) -> Result<EventStructure, EsError> {
        self.require(e)?;
        let gone: BTreeSet<&EventId> =
            std::iter::once(e).chain(self.events.keys().filter(|x| self.in_conflict(x, e))).collect();
        let events = self.events.iter().filter(|(k, _)| !gone.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
        // Pairs touching an event in conflict with `e` go too, so that `#`
        // stays a relation on the remaining events.
        let conflicts = self.conflicts.iter().filter(|(a, b)| !gone.contains(a) && !gone.contains(b)).cloned().collect();
        let enablings = self
            .enablings
            .iter()
            .filter(|en| !gone.contains(&en.target))
            .filter(|en| self.cf_unchecked(en.premise.iter().chain(std::iter::once(e))))
            .map(|en| Enabling { premise: en.premise.iter().filter(|p| *p != e).cloned().collect(), target: en.target.clone() })
            .collect();
        Ok(EventStructure { events, conflicts, enablings })
    }

    /// Componentwise union `⟨E ∪ E′, # ∪ #′, ⊢ ∪ ⊢′, ℓ ∪ ℓ′⟩`. Events with the
    /// same id must agree.
    pub fn union(&self, other: &EventStructure) -> Result<EventStructure, EsError> {
        let mut out = self.clone();
        for (id, ev) in &other.events {
            match out.events.get(id) {
                Some(mine) if mine != ev => return Err(EsError::Overlap(vec![id.clone()])),
                _ => {
                    out.events.insert(id.clone(), ev.clone());
                }
            }
        }
        out.conflicts.extend(other.conflicts.iter().cloned());
        out.enablings.extend(other.enablings.iter().cloned());
        Ok(out)
    }

    /// The approximation order `self ⊴ other`, checked on the saturated
    /// relations: containment with label agreement, conflict reflection, and
    /// enabling reflection on `self`'s events.
    pub fn is_leq(&self, other: &EventStructure) -> bool {
        let events_ok = self.events.iter().all(|(id, ev)| other.events.get(id) == Some(ev));
        if !events_ok || !self.conflicts.is_subset(&other.conflicts) {
            return false;
        }
        let reflects_conflict = other
            .conflicts
            .iter()
            .filter(|(a, b)| self.contains(a) && self.contains(b))
            .all(|c| self.conflicts.contains(c));
        if !reflects_conflict {
            return false;
        }
        // With conflicts agreeing on `self`'s events, saturated containment
        // reduces to: every live generator of one side is covered by a
        // generator of the other with a smaller-or-equal premise.
        let covered = |es: &EventStructure, en: &Enabling| {
            es.enablings.iter().any(|g| g.target == en.target && g.premise.is_subset(&en.premise))
        };
        let contained = self
            .enablings
            .iter()
            .filter(|en| self.cf_unchecked(en.premise.iter()))
            .all(|en| covered(other, en));
        let reflected = other
            .enablings
            .iter()
            .filter(|en| self.contains(&en.target) && en.premise.iter().all(|p| self.contains(p)))
            .filter(|en| other.cf_unchecked(en.premise.iter()))
            .all(|en| covered(self, en));
        contained && reflected
    }

    /// Least upper bound of a `⊴`-chain: componentwise union.
    pub fn lub(chain: &[EventStructure]) -> Result<EventStructure, EsError> {
        let (first, rest) = chain.split_first().ok_or(EsError::EmptyChain)?;
        let mut acc = first.clone();
        for (i, w) in chain.windows(2).enumerate() {
            if !w[0].is_leq(&w[1]) {
                return Err(EsError::NotAChain(i + 1));
            }
        }
        for es in rest {
            acc = acc.union(es)?;
        }
        Ok(acc)
    }

    /// Compact canonical text: equal structures give equal keys.
    pub fn canonical_key(&self) -> String {
        let evs: Vec<String> = self.events.values().map(|e| format!("{}:{}:{}", e.id, e.participant, e.label)).collect();
        let cfs: Vec<String> = self.conflicts.iter().map(|(a, b)| format!("{a}#{b}")).collect();
        let ens: Vec<String> = self.enablings.iter().map(|en| en.to_string()).collect();
        format!("[{}] [{}] [{}]", evs.join(" "), cfs.join(" "), ens.join(" "))
    }

    /// The event-labelled transition system: states are remainders, with an
    /// edge `e` wherever `∅ ⊢ e`.
    pub fn ets(&self, state_limit: usize) -> Exploration<EventStructure, EventId> {
        self.ets_within(Limits::states(state_limit))
    }

    /// The event-labelled system explored under `limits`; states at the
    /// depth bound are kept but not expanded.
    pub fn ets_within(&self, limits: Limits) -> Exploration<EventStructure, EventId> {
        explore(
            self.clone(),
            limits,
            |es| {
                es.initial_events()
                    .into_iter()
                    .map(|e| {
                        let next = es.remainder(&e).expect("initial events exist");
                        (e, next)
                    })
                    .collect()
            },
            |es| es.canonical_key(),
        )
    }

    /// Relabels an event-labelled system by `ℓ`.
    pub fn relabel(&self, lts: &Lts<EventId>) -> Lts<Action> {
        lts.map_labels(|e| self.label(e).cloned().expect("edge events belong to the structure"))
    }

    /// DOT rendering of the event-labelled system with `eᵢ / ℓ(eᵢ)` edges.
    pub fn ets_dot(&self, lts: &Lts<EventId>, name: &str) -> String {
        lts.to_dot_with(name, |e| match self.label(e) {
            Some(l) => format!("{e} / {l}"),
            None => e.to_string(),
        })
    }

    pub fn to_json(&self) -> EsJson {
        EsJson {
            events: self.events.values().cloned().collect(),
            conflicts: self.conflicts.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            enablings: self.enablings.iter().cloned().collect(),
        }
    }

    pub fn from_json(j: &EsJson) -> Result<EventStructure, EsError> {
        let mut es = EventStructure::empty();
        for ev in &j.events {
            es.add_event(ev.clone())?;
        }
        for [a, b] in &j.conflicts {
            es.add_conflict(a.clone(), b.clone())?;
        }
        for en in &j.enablings {
            es.add_enabling(en.clone())?;
        }
        Ok(es)
    }
}

/// Serialised form: `{events: [{id, participant, label}], conflicts: [[id,id]],
/// enablings: [{premise: [id…], target: id}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsJson {
    pub events: Vec<Event>,
    pub conflicts: Vec<[EventId; 2]>,
    pub enablings: Vec<Enabling>,
}

impl Serialize for EventStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EventStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = EsJson::deserialize(d)?;
        EventStructure::from_json(&j).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for EventStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_key())
    }
}
