use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use crate::estructure::{EventId, Participant};
use crate::syntax::Action;

use super::{Contract, GameError};

/// A contract with events numbered densely, so histories are bit sets.
#[derive(Debug, Clone)]
pub struct Arena {
    pub ids: Vec<EventId>,
    index: HashMap<EventId, usize>,
    pub participants: Vec<Participant>,
    owner: Vec<usize>,
    tick: Vec<bool>,
    conflicts: Vec<FixedBitSet>,
    /// Conflict-free generator premises per target.
    premises: Vec<Vec<FixedBitSet>>,
    has_payoff: Vec<bool>,
}

pub type History = FixedBitSet;

impl Arena {
    pub fn new(c: &Contract) -> Arena {
        let ids: Vec<EventId> = c.es.events().map(|e| e.id.clone()).collect();
        let n = ids.len();
        let index: HashMap<EventId, usize> = ids.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let participants: Vec<Participant> = c.participants().into_iter().collect();
        let pidx = |p: &Participant| participants.iter().position(|q| q == p).expect("participant listed");
        let owner = c.es.events().map(|e| pidx(&e.participant)).collect();
        let tick = c.es.events().map(|e| e.label == Action::Tick).collect();
        let mut conflicts = vec![FixedBitSet::with_capacity(n); n];
        for (a, b) in c.es.conflicts() {
            conflicts[index[a]].insert(index[b]);
            conflicts[index[b]].insert(index[a]);
        }
        let mut premises = vec![Vec::new(); n];
        for en in c.es.enablings() {
            let mut set = FixedBitSet::with_capacity(n);
            for p in &en.premise {
                set.insert(index[p]);
            }
            if set.ones().all(|i| conflicts[i].is_disjoint(&set)) {
                premises[index[&en.target]].push(set);
            }
        }
        let has_payoff = participants.iter().map(|p| c.payoffs.get(p).is_some()).collect();
        Arena { ids, index, participants, owner, tick, conflicts, premises, has_payoff }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn empty_history(&self) -> History {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn participant_index(&self, who: &Participant) -> Result<usize, GameError> {
        match self.participants.iter().position(|p| p == who) {
            Some(i) if self.has_payoff[i] => Ok(i),
            _ => Err(GameError::UndefinedPayoff(who.clone())),
        }
    }

    pub fn event_index(&self, id: &EventId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn owner(&self, e: usize) -> usize {
        self.owner[e]
    }

    /// `e` is not played, not in conflict with `h`, and has a generator
    /// premise inside `h`. Assumes `h` is conflict-free.
    pub fn fireable(&self, h: &History, e: usize) -> bool {
        !h.contains(e) && self.conflicts[e].is_disjoint(h) && self.premises[e].iter().any(|p| p.is_subset(h))
    }

    pub fn fireable_all<'a>(&'a self, h: &'a History) -> impl Iterator<Item = usize> + 'a {
        (0..self.len()).filter(move |&e| self.fireable(h, e))
    }

    pub fn fireable_of<'a>(&'a self, h: &'a History, who: usize) -> impl Iterator<Item = usize> + 'a {
        self.fireable_all(h).filter(move |&e| self.owner[e] == who)
    }

    /// Whether `who` wins if the play stops at `h`, given that `who` has
    /// nothing fireable there: `who` is then innocent and wins iff it has
    /// reached its own `✓` or somebody else is culpable.
    pub fn stop_wins(&self, h: &History, who: usize) -> bool {
        h.ones().any(|e| self.owner[e] == who && self.tick[e]) || self.fireable_all(h).any(|e| self.owner[e] != who)
    }

    pub fn with(&self, h: &History, e: usize) -> History {
        let mut next = h.clone();
        next.insert(e);
        next
    }

    pub fn to_ids(&self, h: &History) -> BTreeSet<EventId> {
        h.ones().map(|i| self.ids[i].clone()).collect()
    }

    pub fn from_ids<'a>(&self, ids: impl IntoIterator<Item = &'a EventId>) -> Option<History> {
        let mut h = self.empty_history();
        for id in ids {
            h.insert(self.event_index(id)?);
        }
        Some(h)
    }
}
