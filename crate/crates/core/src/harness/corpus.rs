//! Reproducible random session types.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::syntax::{Branch, SessionType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    /// Syntactic budget: a one-branch prefix costs 1, a proper choice 2,
    /// and `rec` nothing.
    pub max_depth: usize,
    pub max_branch: usize,
    pub allow_recursion: bool,
    pub unroll_depth: usize,
    pub alphabet: Vec<String>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 42,
            count: 500,
            max_depth: 5,
            max_branch: 3,
            allow_recursion: false,
            unroll_depth: 4,
            alphabet: ["a", "b", "c"].map(String::from).to_vec(),
        }
    }
}

impl CorpusSpec {
    pub fn recursive(seed: u64, count: usize, unroll_depth: usize) -> Self {
        CorpusSpec { seed, count, max_depth: 4, max_branch: 2, allow_recursion: true, unroll_depth, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Starts with an internal choice.
    Client,
    /// Starts with an external choice.
    Server,
}

/// A well-formed random type drawn from `spec.seed` alone.
pub fn random_session_type(spec: &CorpusSpec, role: Role) -> SessionType {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate(&mut rng, spec, role)
}

/// Most `rec` binders per generated type; more make the unrolled
/// denotations large without adding much.
const MAX_BINDERS: usize = 1;

pub(crate) fn generate(rng: &mut impl Rng, spec: &CorpusSpec, role: Role) -> SessionType {
    let mut g = Gen { rng, spec, binders: 0 };
    g.term(spec.max_depth, Some(role == Role::Client), &mut Vec::new(), true)
}

struct Gen<'a, R> {
    rng: &'a mut R,
    spec: &'a CorpusSpec,
    binders: usize,
}

/// A bound variable and whether a prefix separates it from its binder.
type Scope = Vec<(String, bool)>;

impl<R: Rng> Gen<'_, R> {
    fn term(&mut self, budget: usize, internal: Option<bool>, scope: &mut Scope, top: bool) -> SessionType {
        let guarded: Vec<String> = scope.iter().filter(|(_, g)| *g).map(|(x, _)| x.clone()).collect();
        if self.spec.allow_recursion && self.binders < MAX_BINDERS && budget >= 1 && (top || self.rng.gen_bool(0.3)) {
            self.binders += 1;
            let x = format!("x{}", scope.len());
            scope.push((x.clone(), false));
            let body = self.choice(budget, internal, scope);
            scope.pop();
            return SessionType::rec(x, body);
        }
        if budget == 0 || (!top && self.rng.gen_bool(0.2)) {
            return match guarded.choose(self.rng) {
                Some(x) if self.rng.gen_bool(0.5) => SessionType::var(x.clone()),
                _ => SessionType::Success,
            };
        }
        if !top && !guarded.is_empty() && self.rng.gen_bool(0.25) {
            return SessionType::var(guarded.choose(self.rng).unwrap().clone());
        }
        self.choice(budget, internal, scope)
    }

    /// A choice of the given polarity (random if `None`); needs budget ≥ 1.
    fn choice(&mut self, budget: usize, internal: Option<bool>, scope: &mut Scope) -> SessionType {
        let internal = internal.unwrap_or_else(|| self.rng.gen_bool(0.5));
        let max = if budget >= 2 { self.spec.max_branch.min(self.spec.alphabet.len()) } else { 1 };
        let n = if max <= 1 { 1 } else { self.rng.gen_range(1..=max) };
        let cost = if n == 1 { 1 } else { 2 };
        let actions: Vec<String> = self.spec.alphabet.choose_multiple(self.rng, n).cloned().collect();
        let saved: Vec<bool> = scope.iter().map(|(_, g)| *g).collect();
        scope.iter_mut().for_each(|(_, g)| *g = true);
        let branches = actions.into_iter().map(|a| Branch::new(a, self.term(budget - cost, None, scope, false))).collect();
        scope.iter_mut().zip(saved).for_each(|((_, g), s)| *g = s);
        if internal {
            SessionType::Internal(branches)
        } else {
            SessionType::External(branches)
        }
    }
}

/// Applies one random local change that keeps `t` well formed; may leave
/// it unchanged.
pub(crate) fn mutate(rng: &mut impl Rng, t: &SessionType, alphabet: &[String]) -> SessionType {
    let sites = count_choices(t);
    if sites == 0 {
        return t.clone();
    }
    let target = rng.gen_range(0..sites);
    let kind = rng.gen_range(0..4);
    let mut seen = 0;
    rewrite(t, target, &mut seen, &mut |bs: &mut Vec<Branch>, rng: &mut dyn rand::RngCore| {
        let i = rng.gen_range(0..bs.len());
        match kind {
            0 if bs.len() > 1 => {
                bs.remove(i);
            }
            1 => {
                let unused: Vec<&String> = alphabet.iter().filter(|a| bs.iter().all(|b| &b.action != *a)).collect();
                if let Some(a) = unused.choose(rng) {
                    bs.push(Branch::new((*a).clone(), SessionType::Success));
                }
            }
            2 => bs[i].cont = SessionType::Success,
            _ => {
                let unused: Vec<&String> = alphabet.iter().filter(|a| bs.iter().all(|b| &b.action != *a)).collect();
                if let Some(a) = unused.choose(rng) {
                    bs[i].action = (*a).clone();
                }
            }
        }
    }, rng)
}

fn count_choices(t: &SessionType) -> usize {
    match t {
        SessionType::Internal(bs) | SessionType::External(bs) => 1 + bs.iter().map(|b| count_choices(&b.cont)).sum::<usize>(),
        SessionType::Rec(_, p) | SessionType::Buffer(_, p) => count_choices(p),
        _ => 0,
    }
}

fn rewrite(
    t: &SessionType,
    target: usize,
    seen: &mut usize,
    f: &mut dyn FnMut(&mut Vec<Branch>, &mut dyn rand::RngCore),
    rng: &mut dyn rand::RngCore,
) -> SessionType {
    match t {
        SessionType::Internal(bs) | SessionType::External(bs) => {
            let here = *seen == target;
            *seen += 1;
            let mut bs: Vec<Branch> =
                bs.iter().map(|b| Branch::new(b.action.clone(), rewrite(&b.cont, target, seen, f, rng))).collect();
            if here {
                f(&mut bs, rng);
            }
            if matches!(t, SessionType::Internal(_)) {
                SessionType::Internal(bs)
            } else {
                SessionType::External(bs)
            }
        }
        SessionType::Rec(x, p) => SessionType::rec(x.clone(), rewrite(p, target, seen, f, rng)),
        _ => t.clone(),
    }
}

/// The pairs of a corpus: clients against random servers or against
/// perturbed duals of themselves, in equal parts.
pub fn corpus_pairs(spec: &CorpusSpec) -> Vec<(SessionType, SessionType)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|i| {
            let p = generate(&mut rng, spec, Role::Client);
            let q = if i % 2 == 0 { generate(&mut rng, spec, Role::Server) } else { mutate(&mut rng, &p.dual(), &spec.alphabet) };
            (p, q)
        })
        .collect()
}
