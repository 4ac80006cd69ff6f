//! Explanation extraction and independent replay checking.
//!
//! Every rewrite application records a witness edge between two concrete
//! terms (the instantiated trigger and output); β/η applications record a
//! single atomic edge between the redex and its reduct. Explaining an
//! equality is a breadth-first path search over the witness terms of the
//! proved class, where two terms with the same head and classwise-equal
//! children can additionally be connected by recursively explaining their
//! children (congruence, flattened into positioned steps).
//!
//! Substitution-internal unions carry no witnesses. A path that would need
//! one simply does not exist and extraction reports the explanation as
//! incomplete; the caller surfaces that outcome instead of fabricating
//! steps.
//!
//! `replay_check` re-derives every step with the plain-term rewriting
//! semantics and never consults the e-graph.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::egraph::{EClassId, EGraph};
use crate::parse::{parse_term, ParseError};
use crate::pattern::{rewrite_at, RuleSpec};
use crate::term::{beta_step, eta_step, Term};

/// One positioned rewrite in an explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// User rule name, or the reserved names "beta" / "eta".
    pub rule: String,
    pub forward: bool,
    /// Child-index path from the root (App: fn=0, arg=1; binders: type=0,
    /// body=1).
    pub position: Vec<usize>,
    /// The whole term after this step.
    pub result: Term,
}

/// A linear chain of rewrites from `start` to the goal's right-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub start: Term,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("explanation incomplete: {0}")]
    Incomplete(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum EdgeKind {
    Rule { name: String, forward: bool },
    Beta,
    Eta,
}

#[derive(Debug, Clone)]
struct ProofEdge {
    l: usize,
    r: usize,
    kind: EdgeKind,
}

/// Term-level witness log. Terms are registered with the raw class id they
/// were added under; canonicalization happens at query time.
#[derive(Debug, Clone, Default)]
pub(crate) struct ProofLog {
    terms: Vec<Term>,
    ids: HashMap<Term, usize>,
    class_of: Vec<EClassId>,
    edges: Vec<ProofEdge>,
    adj: HashMap<usize, Vec<usize>>,
}

impl ProofLog {
    pub(crate) fn register(&mut self, t: &Term, class: EClassId) {
        if self.ids.contains_key(t) {
            return;
        }
        let pid = self.terms.len();
        self.terms.push(t.clone());
        self.ids.insert(t.clone(), pid);
        self.class_of.push(class);
    }

    pub(crate) fn pid(&self, t: &Term) -> Option<usize> {
        self.ids.get(t).copied()
    }

    pub(crate) fn record_edge(&mut self, l: &Term, r: &Term, kind: EdgeKind) {
        let (l, r) = match (self.pid(l), self.pid(r)) {
            (Some(l), Some(r)) => (l, r),
            _ => panic!("proof edge endpoints must be registered before recording"),
        };
        let idx = self.edges.len();
        self.edges.push(ProofEdge { l, r, kind });
        self.adj.entry(l).or_default().push(idx);
        self.adj.entry(r).or_default().push(idx);
    }
}

#[derive(Debug, Clone)]
enum Move {
    /// Traverse a witness edge; `forward` is the traversal orientation
    /// (from `l` to `r`).
    Edge(usize, bool),
    /// Same head, classwise-equal children: rewrite inside the children.
    Congruence,
}

struct Explainer<'g> {
    g: &'g EGraph,
    /// Canonical class -> registered member pids, ascending.
    members: HashMap<EClassId, Vec<usize>>,
    memo: HashMap<(usize, usize), Option<Vec<Step>>>,
    /// Pairs currently being searched. A congruence hop that needs the
    /// pair it is nested under would describe an infinite step chain, so
    /// such routes are cut; failures caused by a cut are not memoized
    /// because they may succeed in a later context.
    in_progress: HashSet<(usize, usize)>,
    cut_hit: bool,
}

impl<'g> Explainer<'g> {
    fn new(g: &'g EGraph) -> Explainer<'g> {
        let mut members: HashMap<EClassId, Vec<usize>> = HashMap::new();
        for (pid, &raw) in g.proof.class_of.iter().enumerate() {
            members.entry(g.find(raw)).or_default().push(pid);
        }
        Explainer { g, members, memo: HashMap::new(), in_progress: HashSet::new(), cut_hit: false }
    }

    fn term(&self, pid: usize) -> &Term {
        &self.g.proof.terms[pid]
    }

    /// Steps taking `term(a)` to `term(b)` inside one class, or `None`
    /// when every route crosses a witness-free union.
    fn connect(&mut self, a: usize, b: usize) -> Option<Vec<Step>> {
        if a == b {
            return Some(Vec::new());
        }
        if let Some(hit) = self.memo.get(&(a, b)) {
            return hit.clone();
        }
        if self.in_progress.contains(&(a, b)) {
            self.cut_hit = true;
            return None;
        }
        self.in_progress.insert((a, b));
        let outer_cut = self.cut_hit;
        self.cut_hit = false;
        let result = self.search(a, b);
        let cut_here = self.cut_hit;
        self.cut_hit = outer_cut || cut_here;
        self.in_progress.remove(&(a, b));
        if result.is_some() || !cut_here {
            self.memo.insert((a, b), result.clone());
        }
        result
    }

    fn search(&mut self, a: usize, b: usize) -> Option<Vec<Step>> {
        let class = self.g.find(self.g.proof.class_of[a]);
        let verts = self.members.get(&class)?.clone();
        let mut prev: HashMap<usize, (usize, Move)> = HashMap::new();
        let mut queue = VecDeque::new();
        queue.push_back(a);
        prev.insert(a, (a, Move::Congruence));
        let mut found = false;
        'bfs: while let Some(u) = queue.pop_front() {
            // Witness edges first, in recording (timestamp) order.
            if let Some(edge_ids) = self.g.proof.adj.get(&u) {
                for &ei in edge_ids {
                    let edge = &self.g.proof.edges[ei];
                    let (v, fwd) = if edge.l == u { (edge.r, true) } else { (edge.l, false) };
                    if prev.contains_key(&v) {
                        continue;
                    }
                    prev.insert(v, (u, Move::Edge(ei, fwd)));
                    if v == b {
                        found = true;
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
            // Congruence hops to same-shaped members.
            for &v in &verts {
                if v == u || prev.contains_key(&v) {
                    continue;
                }
                if !self.congruent_terms(u, v) {
                    continue;
                }
                if self.child_steps(u, v).is_none() {
                    continue;
                }
                prev.insert(v, (u, Move::Congruence));
                if v == b {
                    found = true;
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        if !found {
            return None;
        }
        // Reconstruct the pid path, then flatten it to steps.
        let mut path = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[&cur].0;
            path.push(cur);
        }
        path.reverse();
        let mut steps = Vec::new();
        let mut cur_term = self.term(a).clone();
        for window in path.windows(2) {
            let (from, to) = (window[0], window[1]);
            match prev[&to].1.clone() {
                Move::Edge(ei, fwd) => {
                    let edge = &self.g.proof.edges[ei];
                    let (rule, forward) = match (&edge.kind, fwd) {
                        (EdgeKind::Rule { name, forward }, true) => (name.clone(), *forward),
                        (EdgeKind::Rule { name, forward }, false) => (name.clone(), !*forward),
                        (EdgeKind::Beta, f) => ("beta".to_string(), f),
                        (EdgeKind::Eta, f) => ("eta".to_string(), f),
                    };
                    cur_term = self.term(to).clone();
                    steps.push(Step {
                        rule,
                        forward,
                        position: Vec::new(),
                        result: cur_term.clone(),
                    });
                }
                Move::Congruence => {
                    let subs = self.child_steps(from, to).expect("checked during search");
                    for (child_idx, child_steps) in subs {
                        for s in child_steps {
                            let mut position = vec![child_idx];
                            position.extend(s.position.iter().copied());
                            cur_term = cur_term
                                .replace_at(&[child_idx], s.result.clone())
                                .expect("valid child index");
                            steps.push(Step {
                                rule: s.rule.clone(),
                                forward: s.forward,
                                position,
                                result: cur_term.clone(),
                            });
                        }
                    }
                    debug_assert_eq!(&cur_term, self.term(to));
                }
            }
        }
        Some(steps)
    }

    fn congruent_terms(&self, u: usize, v: usize) -> bool {
        let (tu, tv) = (self.term(u), self.term(v));
        let same_head = matches!(
            (tu, tv),
            (Term::App(..), Term::App(..))
                | (Term::Lam(..), Term::Lam(..))
                | (Term::All(..), Term::All(..))
        );
        if !same_head {
            return false;
        }
        tu.children().iter().zip(tv.children()).all(|(cu, cv)| {
            match (self.g.proof.pid(cu), self.g.proof.pid(cv)) {
                (Some(pu), Some(pv)) => {
                    let cu_class = self.g.find(self.g.proof.class_of[pu]);
                    let cv_class = self.g.find(self.g.proof.class_of[pv]);
                    cu_class == cv_class
                }
                _ => false,
            }
        })
    }

    /// Per-child connection steps for a congruence hop, skipping children
    /// that are already syntactically equal.
    fn child_steps(&mut self, u: usize, v: usize) -> Option<Vec<(usize, Vec<Step>)>> {
        let pairs: Vec<(usize, usize, usize)> = {
            let (tu, tv) = (self.term(u), self.term(v));
            tu.children()
                .iter()
                .zip(tv.children())
                .enumerate()
                .filter(|(_, (cu, cv))| cu != &cv)
                .map(|(i, (cu, cv))| {
                    let pu = self.g.proof.pid(cu).expect("children are registered");
                    let pv = self.g.proof.pid(cv).expect("children are registered");
                    (i, pu, pv)
                })
                .collect()
        };
        let mut out = Vec::new();
        for (i, pu, pv) in pairs {
            let steps = self.connect(pu, pv)?;
            out.push((i, steps));
        }
        Some(out)
    }
}

/// Extract a linear explanation for `find(lhs) == find(rhs)`, running from
/// `start` to `goal` (both must be encoded members of the proved class).
pub fn explain(
    g: &EGraph,
    lhs: EClassId,
    rhs: EClassId,
    start: &Term,
    goal: &Term,
) -> Result<Explanation, ExplainError> {
    assert_eq!(g.find(lhs), g.find(rhs), "explain requires a proved equality");
    let start_pid = g
        .proof
        .pid(start)
        .ok_or_else(|| ExplainError::Incomplete("start term was never encoded".into()))?;
    let goal_pid = g
        .proof
        .pid(goal)
        .ok_or_else(|| ExplainError::Incomplete("goal term was never encoded".into()))?;
    let mut explainer = Explainer::new(g);
    match explainer.connect(start_pid, goal_pid) {
        Some(steps) => Ok(Explanation { start: start.clone(), steps }),
        None => Err(ExplainError::Incomplete(
            "the proof crosses a substitution-internal union with no recorded witness".into(),
        )),
    }
}

/// Outcome of replaying an explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayVerdict {
    Accepted,
    Rejected { step: usize, reason: String },
}

impl ReplayVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ReplayVerdict::Accepted)
    }
}

/// Re-derive one step on plain terms. Rules may replay in either direction
/// regardless of their declared saturation direction: a recorded equality
/// is symmetric.
pub fn replay_step(current: &Term, step: &Step, rules: &[RuleSpec]) -> Result<Term, String> {
    let sub = current
        .subterm(&step.position)
        .ok_or_else(|| format!("position {:?} is invalid", step.position))?;
    let next = match step.rule.as_str() {
        "beta" | "eta" => {
            let reduce = if step.rule == "beta" { beta_step } else { eta_step };
            if step.forward {
                let reduced =
                    reduce(sub).ok_or_else(|| format!("no {} redex at position", step.rule))?;
                current.replace_at(&step.position, reduced).expect("valid position")
            } else {
                let expanded = step
                    .result
                    .subterm(&step.position)
                    .ok_or_else(|| format!("position {:?} invalid in result", step.position))?;
                let reduced = reduce(expanded)
                    .ok_or_else(|| format!("result is not a {}-expansion", step.rule))?;
                if reduced != *sub {
                    return Err(format!("{}-expansion does not reduce back", step.rule));
                }
                current
                    .replace_at(&step.position, expanded.clone())
                    .expect("valid position")
            }
        }
        name => {
            let rule = rules
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| format!("unknown rule '{name}'"))?;
            if step.forward {
                rewrite_at(current, &step.position, &rule.lhs, &rule.rhs)
                    .ok_or_else(|| format!("rule '{name}' does not match at position"))?
            } else {
                // A backward step is the same equation instance read the
                // other way: rewriting the claimed result forward must
                // reproduce the current term. This stays checkable even
                // when the rule's right side drops metavariables.
                let forward = rewrite_at(&step.result, &step.position, &rule.lhs, &rule.rhs)
                    .ok_or_else(|| format!("rule '{name}' does not match the result"))?;
                if forward != *current {
                    return Err(format!(
                        "rule '{name}' applied to the result does not give the current term"
                    ));
                }
                step.result.clone()
            }
        }
    };
    if next != step.result {
        return Err("step result does not match the derived term".to_string());
    }
    Ok(next)
}

/// Replay an explanation against the stated goal without consulting any
/// e-graph state. The goal sides must already be normalized the same way
/// the prover normalized them.
pub fn replay_check(
    explanation: &Explanation,
    rules: &[RuleSpec],
    goal_lhs: &Term,
    goal_rhs: &Term,
) -> ReplayVerdict {
    if explanation.start != *goal_lhs {
        return ReplayVerdict::Rejected {
            step: 0,
            reason: "start term differs from the goal left-hand side".to_string(),
        };
    }
    let mut current = explanation.start.clone();
    for (i, step) in explanation.steps.iter().enumerate() {
        match replay_step(&current, step, rules) {
            Ok(next) => current = next,
            Err(reason) => return ReplayVerdict::Rejected { step: i, reason },
        }
    }
    if current != *goal_rhs {
        return ReplayVerdict::Rejected {
            step: explanation.steps.len(),
            reason: "final term differs from the goal right-hand side".to_string(),
        };
    }
    ReplayVerdict::Accepted
}

#[derive(Serialize, Deserialize)]
struct StepWire {
    rule: String,
    dir: String,
    pos: Vec<usize>,
    result: String,
}

#[derive(Serialize, Deserialize)]
struct ExplanationWire {
    start: String,
    steps: Vec<StepWire>,
}

#[derive(Debug, Error)]
pub enum ExplanationFormatError {
    #[error("malformed explanation json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed term in explanation: {0}")]
    Term(#[from] ParseError),
    #[error("direction must be \"fwd\" or \"bwd\", found {0:?}")]
    Direction(String),
}

impl Explanation {
    pub fn to_json(&self) -> String {
        let wire = ExplanationWire {
            start: self.start.to_string(),
            steps: self
                .steps
                .iter()
                .map(|s| StepWire {
                    rule: s.rule.clone(),
                    dir: if s.forward { "fwd" } else { "bwd" }.to_string(),
                    pos: s.position.clone(),
                    result: s.result.to_string(),
                })
                .collect(),
        };
        serde_json::to_string(&wire).expect("explanation serializes")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json()).expect("round-trips")
    }

    pub fn from_json(text: &str) -> Result<Explanation, ExplanationFormatError> {
        let wire: ExplanationWire = serde_json::from_str(text)?;
        let mut steps = Vec::new();
        for s in wire.steps {
            let forward = match s.dir.as_str() {
                "fwd" => true,
                "bwd" => false,
                other => return Err(ExplanationFormatError::Direction(other.to_string())),
            };
            steps.push(Step {
                rule: s.rule,
                forward,
                position: s.pos,
                result: parse_term(&s.result)?,
            });
        }
        Ok(Explanation { start: parse_term(&wire.start)?, steps })
    }
}

/// Ordered map used in reports; re-exported here to keep the JSON layer in
/// one place.
pub type RuleApplications = BTreeMap<String, u64>;
