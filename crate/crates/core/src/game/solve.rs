use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::estructure::{EventId, Participant};

use super::arena::{Arena, History};
use super::{Contract, GameError, Strategy, StrategyEntry, DEFAULT_HISTORY_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Eager,
    Synthesized,
    Explicit,
}

/// Outcome of checking or searching for a strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameVerdict {
    pub participant: Participant,
    pub strategy: StrategyKind,
    pub winning: bool,
    /// A shortest fair conforming play that `participant` does not win.
    /// Empty when winning, and for searches.
    pub counterexample: Vec<EventId>,
    /// Recursion unrolling depth, for contracts of recursive types.
    pub bounded_depth: Option<usize>,
    /// Plays of this length or longer were not evaluated.
    pub horizon: Option<usize>,
    /// Whether some history at the horizon was left unexplored.
    pub truncated: bool,
    pub histories: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prescriptions: Option<Vec<StrategyEntry>>,
    #[serde(skip)]
    pub found: Option<Strategy>,
}

impl GameVerdict {
    fn new(c: &Contract, who: &Participant, kind: StrategyKind) -> Self {
        GameVerdict {
            participant: who.clone(),
            strategy: kind,
            winning: true,
            counterexample: Vec::new(),
            bounded_depth: c.bounded_depth,
            horizon: c.horizon,
            truncated: false,
            histories: 0,
            prescriptions: None,
            found: None,
        }
    }
}

fn beyond(c: &Contract, h: &History) -> bool {
    c.horizon.is_some_and(|k| h.count_ones(..) >= k)
}

/// Checks that every fair play conforming to `s` is won by its participant.
/// Explores histories breadth-first, so a reported counterexample is
/// shortest.
pub fn strategy_is_winning(c: &Contract, s: &Strategy) -> Result<GameVerdict, GameError> {
    let arena = Arena::new(c);
    let who = arena.participant_index(s.participant())?;
    let (kind, explicit) = match s {
        Strategy::Eager(_) => (StrategyKind::Eager, None),
        Strategy::Explicit { moves, .. } => {
            let mut table = HashMap::new();
            for (h, m) in moves {
                let (Some(h), Some(m)) = (arena.from_ids(h), arena.from_ids(m)) else { continue };
                table.insert(h, m);
            }
            (StrategyKind::Explicit, Some(table))
        }
    };
    let mut verdict = GameVerdict::new(c, s.participant(), kind);
    let root = arena.empty_history();
    let mut parent: HashMap<History, Option<(History, usize)>> = HashMap::from([(root.clone(), None)]);
    let mut queue = VecDeque::from([root]);
    while let Some(h) = queue.pop_front() {
        if beyond(c, &h) {
            verdict.truncated = true;
            continue;
        }
        let own: Vec<usize> = arena.fireable_of(&h, who).collect();
        let chosen: Vec<usize> = match &explicit {
            None => own.clone(),
            Some(table) => table.get(&h).map_or_else(Vec::new, |m| own.iter().copied().filter(|&e| m.contains(e)).collect()),
        };
        if chosen.is_empty() && !(own.is_empty() && arena.stop_wins(&h, who)) {
            verdict.winning = false;
            verdict.counterexample = trace(&arena, &parent, &h);
            break;
        }
        let others = arena.fireable_all(&h).filter(|&e| arena.owner(e) != who);
        for e in others.chain(chosen) {
            let next = arena.with(&h, e);
            if !parent.contains_key(&next) {
                if parent.len() >= DEFAULT_HISTORY_LIMIT {
                    return Err(GameError::TooLarge(DEFAULT_HISTORY_LIMIT));
                }
                parent.insert(next.clone(), Some((h.clone(), e)));
                queue.push_back(next);
            }
        }
    }
    verdict.histories = parent.len();
    Ok(verdict)
}

fn trace(arena: &Arena, parent: &HashMap<History, Option<(History, usize)>>, h: &History) -> Vec<EventId> {
    let mut out = Vec::new();
    let mut cur = h.clone();
    while let Some(Some((prev, e))) = parent.get(&cur) {
        out.push(arena.ids[*e].clone());
        cur = prev.clone();
    }
    out.reverse();
    out
}

/// Whether the eager strategy, which prescribes every fireable own event, is
/// winning for `who`.
pub fn eager_winning(c: &Contract, who: &Participant) -> Result<GameVerdict, GameError> {
    strategy_is_winning(c, &Strategy::Eager(who.clone()))
}

/// Which moves the searching player may prescribe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Policy {
    /// Everything fireable, as the eager strategy does.
    All,
    /// Any single fireable event, or nothing.
    Choose,
}

struct Search<'a> {
    c: &'a Contract,
    arena: &'a Arena,
    who: usize,
    policy: Policy,
    memo: HashMap<History, bool>,
    truncated: bool,
}

impl Search<'_> {
    /// Whether `who` can win from every fair continuation of a play with
    /// event set `h`. Depends on the play only through `h`: fireability and
    /// the stop condition are functions of the event set.
    fn value(&mut self, h: &History) -> Result<bool, GameError> {
        if beyond(self.c, h) {
            self.truncated = true;
            return Ok(true);
        }
        if let Some(&v) = self.memo.get(h) {
            return Ok(v);
        }
        if self.memo.len() >= DEFAULT_HISTORY_LIMIT {
            return Err(GameError::TooLarge(DEFAULT_HISTORY_LIMIT));
        }
        let (others, own): (Vec<usize>, Vec<usize>) =
            self.arena.fireable_all(h).partition(|&e| self.arena.owner(e) != self.who);
        let mut v = true;
        for e in others {
            if !self.value(&self.arena.with(h, e))? {
                v = false;
                break;
            }
        }
        if v {
            v = if own.is_empty() {
                self.arena.stop_wins(h, self.who)
            } else {
                match self.policy {
                    Policy::All => self.all(h, &own)?,
                    Policy::Choose => self.pick(h, &own)?.is_some(),
                }
            };
        }
        self.memo.insert(h.clone(), v);
        Ok(v)
    }

    fn all(&mut self, h: &History, own: &[usize]) -> Result<bool, GameError> {
        for &e in own {
            if !self.value(&self.arena.with(h, e))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn pick(&mut self, h: &History, own: &[usize]) -> Result<Option<usize>, GameError> {
        for &e in own {
            if self.value(&self.arena.with(h, e))? {
                return Ok(Some(e));
            }
        }
        Ok(None)
    }
}

/// The eager check computed by the same memoised search as
/// [`find_winning_strategy`], with the player forced to prescribe everything.
pub fn eager_winning_by_search(c: &Contract, who: &Participant) -> Result<bool, GameError> {
    let arena = Arena::new(c);
    let who = arena.participant_index(who)?;
    let mut s = Search { c, arena: &arena, who, policy: Policy::All, memo: HashMap::new(), truncated: false };
    s.value(&arena.empty_history())
}

/// Searches for a strategy winning for `who`.
///
/// Prescribing one event at a time loses nothing: a prescription is good iff
/// each prescribed event leads to a winning history, and a singleton made of
/// any one of them is good too. Prescribing nothing is only fair when the
/// play may stop, which requires `who` to have nothing fireable.
pub fn find_winning_strategy(c: &Contract, who: &Participant) -> Result<GameVerdict, GameError> {
    let arena = Arena::new(c);
    let idx = arena.participant_index(who)?;
    let mut s = Search { c, arena: &arena, who: idx, policy: Policy::Choose, memo: HashMap::new(), truncated: false };
    let mut verdict = GameVerdict::new(c, who, StrategyKind::Synthesized);
    let root = arena.empty_history();
    verdict.winning = s.value(&root)?;
    if verdict.winning {
        let mut strategy = Strategy::explicit(who.clone());
        let mut seen = HashSet::from([root.clone()]);
        let mut queue = VecDeque::from([root]);
        while let Some(h) = queue.pop_front() {
            if beyond(c, &h) {
                continue;
            }
            let (mut next, own): (Vec<usize>, Vec<usize>) = arena.fireable_all(&h).partition(|&e| arena.owner(e) != idx);
            if !own.is_empty() {
                let e = s.pick(&h, &own)?.expect("winning histories have a winning move");
                let prefix: Vec<EventId> = arena.to_ids(&h).into_iter().collect();
                strategy = strategy.prescribe(&prefix, &[arena.ids[e].clone()]);
                next.push(e);
            }
            for e in next {
                let n = arena.with(&h, e);
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
        verdict.prescriptions = Some(strategy.entries());
        verdict.found = Some(strategy);
    }
    verdict.truncated = s.truncated;
    verdict.histories = s.memo.len();
    Ok(verdict)
}
