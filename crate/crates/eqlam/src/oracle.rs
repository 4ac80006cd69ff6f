//! Brute-force breadth-first rewriting search on plain terms.
//!
//! The oracle explores single-position rewrites: user rules in their
//! allowed directions, plus β and η in both directions when enabled.
//! β-expansion abstracts any depth-normalized subterm shape, so paths that
//! need an intermediate redex (rewrite rules phrased on unreduced forms)
//! are found too. Results are shortest traces, deduplicated by term.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::pattern::{rewrite_at, RuleSpec};
use crate::term::{beta_step, eta_step, shift_term, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Number of BFS layers to explore.
    pub max_depth: usize,
    /// Largest term the search will enqueue (node count).
    pub max_term_size: usize,
    /// Total number of distinct states before giving up.
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_depth: 12, max_term_size: 64, max_states: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: String,
    pub forward: bool,
    pub position: Vec<usize>,
    pub term: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state limit exceeded after {states} states")]
    LimitExceeded { states: usize },
}

/// Replace occurrences of `u` (depth-adjusted) in `t` by the bound variable
/// and lift the remaining free variables, so that
/// `beta_step(App(Lam(_, abstract_term(t, u)), u)) == t`.
fn abstract_term(t: &Term, u: &Term, depth: u32) -> Term {
    if let Ok(shifted) = shift_term(u, depth as i64, 0) {
        if *t == shifted {
            return Term::bvar(depth);
        }
    }
    match t {
        Term::Bvar { index, tag } if *index >= depth => {
            Term::Bvar { index: index + 1, tag: tag.clone() }
        }
        Term::Bvar { .. } | Term::Sym(_) | Term::Lit(_) | Term::Eps => t.clone(),
        Term::App(f, a) => Term::app(abstract_term(f, u, depth), abstract_term(a, u, depth)),
        Term::Lam(ty, b) => {
            Term::lam(abstract_term(ty, u, depth), abstract_term(b, u, depth + 1))
        }
        Term::All(ty, b) => {
            Term::all(abstract_term(ty, u, depth), abstract_term(b, u, depth + 1))
        }
        Term::Let(ty, v, b) => Term::let_(
            abstract_term(ty, u, depth),
            abstract_term(v, u, depth),
            abstract_term(b, u, depth + 1),
        ),
    }
}

/// Depth-normalized shapes of all subterms of `t` that do not capture a
/// variable bound inside `t`: candidates for β-expansion arguments.
fn subterm_shapes(t: &Term) -> BTreeSet<Term> {
    fn go(t: &Term, depth: u32, out: &mut BTreeSet<Term>) {
        // Shifting down by the occurrence depth fails exactly when the
        // subterm mentions a variable bound inside `t`; those are skipped.
        if let Ok(normalized) = shift_term(t, -(depth as i64), 0) {
            out.insert(normalized);
        }
        for (i, c) in t.children().into_iter().enumerate() {
            go(c, depth + t.binder_offset(i), out);
        }
    }
    let mut out = BTreeSet::new();
    go(t, 0, &mut out);
    out
}

/// Every term reachable from `t` in one rewrite, with the step that got there.
fn neighbors(
    t: &Term,
    rules: &[RuleSpec],
    enable_beta: bool,
    enable_eta: bool,
    max_term_size: usize,
    arg_soup: &BTreeSet<Term>,
    expansions: bool,
) -> Vec<(TraceStep, Term)> {
    let mut out = Vec::new();
    let positions = t.positions();
    let mut push = |rule: &str, forward: bool, pos: &[usize], term: Term| {
        if term.size() <= max_term_size {
            out.push((
                TraceStep {
                    rule: rule.to_string(),
                    forward,
                    position: pos.to_vec(),
                    term: term.clone(),
                },
                term,
            ));
        }
    };

    if enable_beta {
        for pos in &positions {
            let sub = t.subterm(pos).expect("position from positions()");
            if let Some(reduced) = beta_step(sub) {
                let next = t.replace_at(pos, reduced).expect("valid position");
                push("beta", true, pos, next);
            }
            if expansions {
                // Expansion arguments: shapes from this subterm, plus
                // shapes from the endpoints so redexes that discard their
                // argument (the body never uses the binder) are reachable.
                let mut args = subterm_shapes(sub);
                args.extend(arg_soup.iter().cloned());
                for arg in args {
                    let body = abstract_term(sub, &arg, 0);
                    let expanded = Term::app(Term::lam(Term::sym("_"), body), arg);
                    let next = t.replace_at(pos, expanded).expect("valid position");
                    push("beta", false, pos, next);
                }
            }
        }
    }
    if enable_eta {
        for pos in &positions {
            let sub = t.subterm(pos).expect("position from positions()");
            if let Some(reduced) = eta_step(sub) {
                let next = t.replace_at(pos, reduced).expect("valid position");
                push("eta", true, pos, next);
            }
            if expansions {
                let lifted = shift_term(sub, 1, 0).expect("positive shift cannot underflow");
                let expanded = Term::lam(Term::sym("_"), Term::app(lifted, Term::bvar(0)));
                let next = t.replace_at(pos, expanded).expect("valid position");
                push("eta", false, pos, next);
            }
        }
    }
    for rule in rules {
        for pos in &positions {
            if rule.directions.allows_forward() {
                if let Some(next) = rewrite_at(t, pos, &rule.lhs, &rule.rhs) {
                    push(&rule.name, true, pos, next);
                }
            }
            if rule.directions.allows_backward() {
                if let Some(next) = rewrite_at(t, pos, &rule.rhs, &rule.lhs) {
                    push(&rule.name, false, pos, next);
                }
            }
        }
    }
    out
}

/// Breadth-first search from `start` to `goal`. Returns a shortest trace,
/// `Ok(None)` when the goal is unreachable within the depth bound, and
/// `Err(LimitExceeded)` when the state budget runs out first.
///
/// Runs in two tiers: reductions only, then (when β or η is enabled and
/// the first tier exhausted the space) with β/η expansions as well. The
/// expansion tier is vastly wider, and most reachable goals do not need
/// it.
pub fn oracle_search(
    start: &Term,
    goal: &Term,
    rules: &[RuleSpec],
    enable_beta: bool,
    enable_eta: bool,
    limits: &OracleLimits,
) -> Result<Option<Vec<TraceStep>>, OracleError> {
    assert!(start.is_let_free() && goal.is_let_free(), "oracle inputs must be let-free");
    if start == goal {
        return Ok(Some(Vec::new()));
    }
    match bfs(start, goal, rules, enable_beta, enable_eta, limits, false)? {
        Some(trace) => Ok(Some(trace)),
        None if enable_beta || enable_eta => {
            bfs(start, goal, rules, enable_beta, enable_eta, limits, true)
        }
        None => Ok(None),
    }
}

fn bfs(
    start: &Term,
    goal: &Term,
    rules: &[RuleSpec],
    enable_beta: bool,
    enable_eta: bool,
    limits: &OracleLimits,
    expansions: bool,
) -> Result<Option<Vec<TraceStep>>, OracleError> {
    let mut arg_soup = BTreeSet::new();
    if enable_beta && expansions {
        arg_soup.extend(subterm_shapes(start));
        arg_soup.extend(subterm_shapes(goal));
    }

    let mut ids: HashMap<Term, usize> = HashMap::new();
    let mut parents: Vec<Option<(usize, TraceStep)>> = Vec::new();
    let mut queue: VecDeque<(usize, Term, usize)> = VecDeque::new();

    ids.insert(start.clone(), 0);
    parents.push(None);
    queue.push_back((0, start.clone(), 0));

    while let Some((id, term, depth)) = queue.pop_front() {
        if depth >= limits.max_depth {
            continue;
        }
        for (step, next) in neighbors(
            &term,
            rules,
            enable_beta,
            enable_eta,
            limits.max_term_size,
            &arg_soup,
            expansions,
        ) {
            if ids.contains_key(&next) {
                continue;
            }
            let next_id = ids.len();
            if next_id >= limits.max_states {
                return Err(OracleError::LimitExceeded { states: next_id });
            }
            ids.insert(next.clone(), next_id);
            parents.push(Some((id, step)));
            if next == *goal {
                let mut trace = Vec::new();
                let mut cur = next_id;
                while let Some((prev, step)) = &parents[cur] {
                    trace.push(step.clone());
                    cur = *prev;
                }
                trace.reverse();
                return Ok(Some(trace));
            }
            queue.push_back((next_id, next, depth + 1));
        }
    }
    Ok(None)
}
