//! The history-keyed strategy search against a literal search over
//! sequence-keyed strategies, built only from the play-level definitions.

use std::collections::BTreeSet;

use session_games::estructure::{EventId, Participant};
use session_games::game::{
    compose_session_contracts, eager_winning, eager_winning_by_search, find_winning_strategy, fireable_own, strategy_is_winning,
    winning_play, Contract, Play,
};
use session_games::harness::{corpus_pairs, CorpusSpec};

fn fireable(c: &Contract, seq: &[EventId]) -> Vec<EventId> {
    let h: BTreeSet<EventId> = seq.iter().cloned().collect();
    c.es.events().filter(|ev| c.es.can_fire(&h, &ev.id)).map(|ev| ev.id.clone()).collect()
}

/// Whether some choice of prescriptions at `seq` and all its extensions
/// makes every fair conforming play through `seq` winning for `who`. A
/// finite play is fair iff nothing is prescribed at its end; `eager` forces
/// the prescription to be every fireable own event.
fn literal_value(c: &Contract, who: &Participant, seq: &mut Vec<EventId>, eager: bool) -> bool {
    let h: BTreeSet<EventId> = seq.iter().cloned().collect();
    let own: Vec<EventId> = fireable_own(&c.es, &h, who).into_iter().collect();
    let others: Vec<EventId> = fireable(c, seq).into_iter().filter(|x| !own.contains(x)).collect();
    let follow = |seq: &mut Vec<EventId>, x: &EventId| {
        seq.push(x.clone());
        let v = literal_value(c, who, seq, eager);
        seq.pop();
        v
    };
    if !others.iter().all(|x| follow(seq, x)) {
        return false;
    }
    let subsets: Vec<u32> = if eager { vec![(1u32 << own.len()) - 1] } else { (0..1u32 << own.len()).collect() };
    subsets.into_iter().any(|mask| {
        let chosen: Vec<&EventId> = own.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, x)| x).collect();
        let stop_ok = !chosen.is_empty() || winning_play(c, &Play(seq.clone()), who).unwrap();
        stop_ok && chosen.into_iter().all(|x| follow(seq, x))
    })
}

fn small_contracts() -> Vec<(String, Contract)> {
    let spec = CorpusSpec { seed: 11, count: 150, max_depth: 3, ..CorpusSpec::default() };
    corpus_pairs(&spec)
        .into_iter()
        .map(|(p, q)| (format!("{p} | {q}"), compose_session_contracts(&p, "A", &q, "B", 0).unwrap()))
        .collect()
}

#[test]
fn search_matches_sequence_keyed_strategies() {
    let mut winnable = 0;
    for (name, c) in small_contracts() {
        for who in [Participant::new("A"), Participant::new("B")] {
            let v = find_winning_strategy(&c, &who).unwrap();
            assert_eq!(v.winning, literal_value(&c, &who, &mut Vec::new(), false), "{name} for {who}");
            if let Some(s) = v.found {
                winnable += 1;
                assert!(strategy_is_winning(&c, &s).unwrap().winning, "{name} for {who}");
            }
        }
    }
    assert!(winnable > 0);
}

#[test]
fn eager_check_matches_sequence_keyed_eager_play() {
    for (name, c) in small_contracts() {
        for who in [Participant::new("A"), Participant::new("B")] {
            let v = eager_winning(&c, &who).unwrap();
            assert_eq!(v.winning, literal_value(&c, &who, &mut Vec::new(), true), "{name} for {who}");
            if !v.winning {
                let play = Play::new(&c.es, v.counterexample.clone()).unwrap();
                assert!(!winning_play(&c, &play, &who).unwrap(), "{name} for {who}");
            }
        }
    }
}

#[test]
fn eager_check_matches_the_search_on_the_corpus() {
    let spec = CorpusSpec { seed: 42, count: 500, ..CorpusSpec::default() };
    for (p, q) in corpus_pairs(&spec) {
        let c = compose_session_contracts(&p, "A", &q, "B", spec.unroll_depth).unwrap();
        for who in [Participant::new("A"), Participant::new("B")] {
            assert_eq!(eager_winning(&c, &who).unwrap().winning, eager_winning_by_search(&c, &who).unwrap(), "{p} | {q} for {who}");
        }
    }
}
