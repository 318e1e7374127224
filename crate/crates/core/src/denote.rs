//! Event-structure denotations of session types.
//!
//! Events are named after the pre-order position of the prefix or `1` that
//! produced them: position `k` becomes `e(2k+1)` for the first participant
//! and `e(2k+2)` for the second. Copies made while unrolling recursion carry
//! an extra suffix recording where the copy was made, so the `n`-th
//! approximant is a sub-structure of the `n+1`-th on concrete ids.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use thiserror::Error;

use crate::estructure::{Enabling, EsError, Event, EventId, EventStructure, Participant};
use crate::syntax::{Action, Branch, SessionType};

pub const DEFAULT_UNROLL_DEPTH: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DenoteError {
    #[error("free variable `{0}` has no binding")]
    FreeVariable(String),
    #[error("runtime form `{0}` has no denotation")]
    RuntimeForm(String),
    #[error("participants share events: {0:?}")]
    Overlap(Vec<EventId>),
    #[error("composition would have {0} generators, over the limit of {MAX_COMPOSED_GENERATORS}")]
    TooLarge(u128),
    #[error(transparent)]
    Es(#[from] EsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

/// Assigns ids to the events of one participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventNamer {
    pub participant: Participant,
    pub parity: Parity,
}

impl EventNamer {
    pub fn new(participant: impl Into<String>, parity: Parity) -> Self {
        EventNamer { participant: Participant::new(participant), parity }
    }

    pub fn id(&self, position: u32, unroll: &[u32]) -> EventId {
        let offset = match self.parity {
            Parity::Odd => 1,
            Parity::Even => 2,
        };
        EventId { index: 2 * position + offset, unroll: unroll.to_vec() }
    }
}

/// Bindings of recursion variables to event structures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DenoteEnv {
    pub bindings: BTreeMap<String, EventStructure>,
}

impl DenoteEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, var: impl Into<String>, es: EventStructure) -> Self {
        self.bindings.insert(var.into(), es);
        self
    }
}

/// `⟦t⟧` for the participant of `namer`, unrolling each recursion at most
/// `unroll_depth` times.
pub fn denote(t: &SessionType, namer: &EventNamer, env: &DenoteEnv, unroll_depth: usize) -> Result<EventStructure, DenoteError> {
    let scope = env.bindings.iter().map(|(k, v)| (k.clone(), Binding::Fixed(Rc::new(v.clone())))).collect();
    let w = Walker { namer, depth: unroll_depth };
    let mut counters = Counters::default();
    w.walk(t, &mut counters, &[], &scope)
}

/// The `depth`-th approximant `Γ^depth(∅)` of `rec var . body`.
pub fn fix_approx(
    var: &str,
    body: &SessionType,
    namer: &EventNamer,
    env: &DenoteEnv,
    depth: usize,
) -> Result<EventStructure, DenoteError> {
    denote(&SessionType::rec(var, body.clone()), namer, env, depth)
}

/// Parallel composition: every generator of one side is extended with a
/// co-labelled partner for each premise event, and inputs additionally with
/// a co-labelled sender. Generators whose premises are in conflict are kept;
/// they never fire.
pub fn denote_par(left: &EventStructure, right: &EventStructure) -> Result<EventStructure, DenoteError> {
    let shared: Vec<EventId> = left.events().filter(|e| right.contains(&e.id)).map(|e| e.id.clone()).collect();
    if !shared.is_empty() {
        return Err(DenoteError::Overlap(shared));
    }
    let size: u128 = [(left, right), (right, left)]
        .iter()
        .flat_map(|(mine, other)| mine.enablings().map(move |en| premise_count(mine, other, en)))
        .sum();
    if size > MAX_COMPOSED_GENERATORS as u128 {
        return Err(DenoteError::TooLarge(size));
    }
    let mut out = EventStructure::empty();
    for ev in left.events().chain(right.events()) {
        out.add_event(ev.clone())?;
    }
    for (a, b) in left.conflicts().chain(right.conflicts()) {
        out.add_conflict(a.clone(), b.clone())?;
    }
    for (mine, other) in [(left, right), (right, left)] {
        for en in mine.enablings() {
            for premise in synchronised_premises(mine, other, en) {
                out.add_enabling(Enabling { premise, target: en.target.clone() })?;
            }
        }
    }
    Ok(out)
}

/// Bound on the generators of a parallel composition. Each generator is a
/// choice of partner per premise event, so deeply unrolled types with many
/// recursive calls multiply out quickly.
pub const MAX_COMPOSED_GENERATORS: usize = 1_000_000;

fn premise_count(mine: &EventStructure, other: &EventStructure, en: &Enabling) -> u128 {
    let count = |l: &Action| partners(other, l).len() as u128;
    let label = |id: &EventId| mine.label(id).expect("generator events exist");
    let matchers = en.premise.iter().fold(1u128, |n, x| n.saturating_mul(count(label(x))));
    let target = label(&en.target);
    if target.is_output() {
        matchers
    } else {
        matchers.saturating_mul(count(target))
    }
}

fn partners(other: &EventStructure, label: &Action) -> Vec<EventId> {
    match label.co() {
        Some(co) => other.events().filter(|e| e.label == co).map(|e| e.id.clone()).collect(),
        None => Vec::new(),
    }
}

fn synchronised_premises(mine: &EventStructure, other: &EventStructure, en: &Enabling) -> Vec<BTreeSet<EventId>> {
    let label = |id: &EventId| mine.label(id).expect("generator events exist");
    let mut premises = vec![en.premise.clone()];
    for x in &en.premise {
        let choices = partners(other, label(x));
        premises = premises
            .iter()
            .flat_map(|p| {
                choices.iter().map(move |y| {
                    let mut q = p.clone();
                    q.insert(y.clone());
                    q
                })
            })
            .collect();
    }
    let target = label(&en.target);
    if target.is_output() {
        return premises;
    }
    let senders = partners(other, target);
    premises
        .iter()
        .flat_map(|p| {
            senders.iter().map(move |s| {
                let mut q = p.clone();
                q.insert(s.clone());
                q
            })
        })
        .collect()
}

/// `⟦p⟧_a ∥ ⟦q⟧_b` with `a` named odd and `b` even.
pub fn denote_pair(
    p: &SessionType,
    a: &str,
    q: &SessionType,
    b: &str,
    unroll_depth: usize,
) -> Result<EventStructure, DenoteError> {
    let env = DenoteEnv::new();
    let left = denote(p, &EventNamer::new(a, Parity::Odd), &env, unroll_depth)?;
    let right = denote(q, &EventNamer::new(b, Parity::Even), &env, unroll_depth)?;
    denote_par(&left, &right)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    /// Pre-order index of prefixes and `1`s.
    position: u32,
    /// Pre-order index of variable occurrences.
    occurrence: u32,
}

#[derive(Debug, Clone)]
enum Binding {
    Fixed(Rc<EventStructure>),
    Rec(Rc<RecFrame>),
}

#[derive(Debug)]
struct RecFrame {
    var: String,
    body: SessionType,
    start: Counters,
    scope: Scope,
    /// Unrolling level of the copy currently being built.
    level: usize,
}

type Scope = BTreeMap<String, Binding>;

struct Walker<'a> {
    namer: &'a EventNamer,
    depth: usize,
}

impl Walker<'_> {
    fn walk(&self, t: &SessionType, at: &mut Counters, stack: &[u32], scope: &Scope) -> Result<EventStructure, DenoteError> {
        match t {
            SessionType::Success => {
                let id = self.fresh(at, stack);
                let mut es = EventStructure::empty();
                self.add(&mut es, id.clone(), Action::Tick)?;
                es.add_enabling(Enabling::new([], id))?;
                Ok(es)
            }
            SessionType::Internal(bs) => self.choice(bs, Action::Out, at, stack, scope),
            SessionType::External(bs) => self.choice(bs, Action::In, at, stack, scope),
            SessionType::Var(x) => {
                let occurrence = at.occurrence;
                at.occurrence += 1;
                match scope.get(x) {
                    None => Err(DenoteError::FreeVariable(x.clone())),
                    Some(Binding::Fixed(es)) => Ok((**es).clone()),
                    Some(Binding::Rec(frame)) if frame.level + 1 >= self.depth => Ok(EventStructure::empty()),
                    Some(Binding::Rec(frame)) => {
                        let mut copy = stack.to_vec();
                        copy.push(occurrence + 1);
                        self.unroll(frame, frame.level + 1, &copy)
                    }
                }
            }
            SessionType::Rec(x, body) => {
                let start = *at;
                let (positions, occurrences) = sizes(body);
                at.position += positions;
                at.occurrence += occurrences;
                if self.depth == 0 {
                    return Ok(EventStructure::empty());
                }
                let frame = RecFrame { var: x.clone(), body: (**body).clone(), start, scope: scope.clone(), level: 0 };
                let mut copy = stack.to_vec();
                copy.push(0);
                self.unroll(&frame, 0, &copy)
            }
            SessionType::Buffer(..) | SessionType::Stuck => Err(DenoteError::RuntimeForm(t.pretty())),
        }
    }

    fn unroll(&self, frame: &RecFrame, level: usize, stack: &[u32]) -> Result<EventStructure, DenoteError> {
        let inner = Rc::new(RecFrame {
            var: frame.var.clone(),
            body: frame.body.clone(),
            start: frame.start,
            scope: frame.scope.clone(),
            level,
        });
        let mut scope = frame.scope.clone();
        scope.insert(frame.var.clone(), Binding::Rec(inner));
        let mut at = frame.start;
        self.walk(&frame.body, &mut at, stack, &scope)
    }

    fn choice(
        &self,
        bs: &[Branch],
        polarity: fn(String) -> Action,
        at: &mut Counters,
        stack: &[u32],
        scope: &Scope,
    ) -> Result<EventStructure, DenoteError> {
        let mut out = EventStructure::empty();
        let mut heads = Vec::new();
        for b in bs {
            let id = self.fresh(at, stack);
            let cont = self.walk(&b.cont, at, stack, scope)?;
            let branch = self.prefix(id, polarity(b.action.clone()), &cont)?;
            heads.push(branch.initial_events());
            out = out.union(&branch)?;
        }
        for (i, hi) in heads.iter().enumerate() {
            for hj in &heads[i + 1..] {
                for a in hi {
                    for b in hj {
                        out.add_conflict(a.clone(), b.clone())?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `α.P`: the new event is initial and becomes the sole premise of the
    /// initial events of `P`.
    fn prefix(&self, id: EventId, label: Action, cont: &EventStructure) -> Result<EventStructure, DenoteError> {
        let mut es = EventStructure::empty();
        self.add(&mut es, id.clone(), label)?;
        for ev in cont.events() {
            es.add_event(ev.clone())?;
        }
        for (a, b) in cont.conflicts() {
            es.add_conflict(a.clone(), b.clone())?;
        }
        es.add_enabling(Enabling::new([], id.clone()))?;
        for en in cont.enablings() {
            let en = if en.premise.is_empty() { Enabling::new([id.clone()], en.target.clone()) } else { en.clone() };
            es.add_enabling(en)?;
        }
        Ok(es)
    }

    fn fresh(&self, at: &mut Counters, stack: &[u32]) -> EventId {
        let id = self.namer.id(at.position, stack);
        at.position += 1;
        id
    }

    fn add(&self, es: &mut EventStructure, id: EventId, label: Action) -> Result<(), DenoteError> {
        es.add_event(Event { id, participant: self.namer.participant.clone(), label })?;
        Ok(())
    }
}

/// Number of event positions and variable occurrences in `t`.
fn sizes(t: &SessionType) -> (u32, u32) {
    match t {
        SessionType::Success => (1, 0),
        SessionType::Var(_) => (0, 1),
        SessionType::Internal(bs) | SessionType::External(bs) => bs.iter().fold((0, 0), |(p, o), b| {
            let (bp, bo) = sizes(&b.cont);
            (p + 1 + bp, o + bo)
        }),
        SessionType::Rec(_, body) => sizes(body),
        SessionType::Buffer(_, p) => sizes(p),
        SessionType::Stuck => (0, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estructure::e;
    use crate::syntax::parse;

    fn a() -> EventNamer {
        EventNamer::new("A", Parity::Odd)
    }

    fn b() -> EventNamer {
        EventNamer::new("B", Parity::Even)
    }

    fn den(src: &str, n: &EventNamer, depth: usize) -> EventStructure {
        denote(&parse(src).unwrap(), n, &DenoteEnv::new(), depth).unwrap()
    }

    fn gens(es: &EventStructure) -> BTreeSet<(Vec<u32>, u32)> {
        es.enablings().map(|en| (en.premise.iter().map(|p| p.index).collect(), en.target.index)).collect()
    }

    fn g(list: &[(&[u32], u32)]) -> BTreeSet<(Vec<u32>, u32)> {
        list.iter()
            .map(|(p, t)| {
                let mut p = p.to_vec();
                p.sort();
                (p, *t)
            })
            .collect()
    }

    #[test]
    fn success_is_one_tick_event() {
        let es = den("1", &a(), 0);
        assert_eq!(es.num_events(), 1);
        assert_eq!(es.label(&e(1)), Some(&Action::Tick));
        assert_eq!(gens(&es), g(&[(&[], 1)]));
    }

    #[test]
    fn worked_example_client() {
        let es = den("!a (+) !b.!a", &a(), 6);
        assert_eq!(es, crate::estructure::fixtures::worked_p());
    }

    #[test]
    fn worked_example_server() {
        let es = den("?a.?b + ?b.?a + ?c", &b(), 6);
        let ids: Vec<u32> = es.events().map(|e| e.id.index).collect();
        assert_eq!(ids, vec![2, 4, 6, 8, 10, 12, 14, 16]);
        let cf: Vec<(u32, u32)> = es.conflicts().map(|(x, y)| (x.index, y.index)).collect();
        assert_eq!(cf, vec![(2, 8), (2, 14), (8, 14)]);
        assert_eq!(
            gens(&es),
            g(&[(&[], 2), (&[], 8), (&[], 14), (&[2], 4), (&[4], 6), (&[8], 10), (&[10], 12), (&[14], 16)])
        );
        assert_eq!(es.label(&e(10)), Some(&Action::In("a".into())));
        assert_eq!(es.label(&e(14)), Some(&Action::In("c".into())));
        assert_eq!(es.label(&e(16)), Some(&Action::Tick));
    }

    #[test]
    fn worked_example_composition() {
        let es = denote_pair(&parse("!a (+) !b.!a").unwrap(), "A", &parse("?a.?b + ?b.?a + ?c").unwrap(), "B", 6).unwrap();
        let want = g(&[
            (&[], 1),
            (&[], 5),
            (&[1, 2], 3),
            (&[1, 10], 3),
            (&[5, 8], 7),
            (&[5, 4], 7),
            (&[2, 7], 9),
            (&[7, 10], 9),
            (&[1], 2),
            (&[7], 2),
            (&[1, 2, 5], 4),
            (&[7, 2, 5], 4),
            (&[4, 5], 6),
            (&[5], 8),
            (&[8, 5, 1], 10),
            (&[8, 5, 7], 10),
            (&[10, 1], 12),
            (&[10, 7], 12),
        ]);
        assert_eq!(gens(&es), want);
        assert_eq!(es.num_events(), 13);
        assert_eq!(es.conflicts().count(), 4);
    }

    #[test]
    fn composition_of_successes() {
        let es = denote_par(&den("1", &a(), 0), &den("1", &b(), 0)).unwrap();
        assert_eq!(gens(&es), g(&[(&[], 1), (&[], 2)]));
    }

    #[test]
    fn composition_rejects_overlap() {
        let p = den("1", &a(), 0);
        assert!(matches!(denote_par(&p, &p), Err(DenoteError::Overlap(_))));
    }

    #[test]
    fn free_variable_is_an_error() {
        let r = denote(&SessionType::var("x"), &a(), &DenoteEnv::new(), 3);
        assert_eq!(r, Err(DenoteError::FreeVariable("x".into())));
    }

    #[test]
    fn environment_bindings_are_used() {
        let env = DenoteEnv::new().bind("x", den("1", &EventNamer::new("A", Parity::Odd), 0));
        let es = denote(&parse("!a.x").unwrap(), &EventNamer::new("A", Parity::Odd), &env, 0);
        // The prefix takes position 0, colliding with the bound event e1.
        assert!(es.is_err());
        let env = DenoteEnv::new().bind("x", den("!z.1", &a(), 0).remainder(&e(1)).unwrap());
        let es = denote(&parse("?q.x").unwrap(), &EventNamer::new("A", Parity::Even), &env, 0).unwrap();
        assert_eq!(gens(&es), g(&[(&[], 2), (&[2], 3)]));
    }

    #[test]
    fn approximants_of_a_loop() {
        let body = parse("!a.x").unwrap();
        let env = DenoteEnv::new();
        assert_eq!(fix_approx("x", &body, &a(), &env, 0).unwrap(), EventStructure::empty());
        let one = fix_approx("x", &body, &a(), &env, 1).unwrap();
        assert_eq!(one.num_events(), 1);
        assert_eq!(one.initial_events().len(), 1);
        assert_eq!(one.enablings().count(), 1);
        let two = fix_approx("x", &body, &a(), &env, 2).unwrap();
        let three = fix_approx("x", &body, &a(), &env, 3).unwrap();
        assert!(one.is_leq(&two) && two.is_leq(&three) && one.is_leq(&three));
        assert_eq!(EventStructure::lub(&[one.clone(), two.clone()]).unwrap(), two);
        let ids: Vec<String> = three.events().map(|e| e.id.to_string()).collect();
        assert_eq!(ids, vec!["e1_0", "e1_0_1", "e1_0_1_1"]);
    }

    #[test]
    fn several_occurrences_get_distinct_copies() {
        let es = den("rec x . !a.x (+) !b.x", &a(), 3);
        // 2 + 4 + 8 events along the three levels.
        assert_eq!(es.num_events(), 14);
        for d in 0..4 {
            let lo = den("rec x . !a.x (+) !b.x", &a(), d);
            let hi = den("rec x . !a.x (+) !b.x", &a(), d + 1);
            assert!(lo.is_leq(&hi), "depth {d}");
        }
    }

    #[test]
    fn outer_variable_inside_inner_loop() {
        let src = "rec x . !a.(rec y . ?b.y + ?c.x)";
        for d in 0..4 {
            let lo = den(src, &a(), d);
            let hi = den(src, &a(), d + 1);
            assert!(lo.is_leq(&hi), "depth {d}");
        }
    }

    #[test]
    fn numbering_after_a_loop_is_depth_independent() {
        let shallow = den("!s.(rec x . !a.x) (+) !t", &a(), 1);
        let deep = den("!s.(rec x . !a.x) (+) !t", &a(), 4);
        assert!(shallow.contains(&e(5)) && deep.contains(&e(5)));
        assert_eq!(shallow.label(&e(5)), Some(&Action::Out("t".into())));
    }

    #[test]
    fn labels_follow_polarity() {
        let es = den("!a.?b.1", &a(), 0);
        let labels: Vec<String> = es.events().map(|e| e.label.to_string()).collect();
        assert_eq!(labels, vec!["!a", "?b", "✓"]);
        assert!(es.events().all(|e| e.participant == Participant::new("A")));
    }
}
