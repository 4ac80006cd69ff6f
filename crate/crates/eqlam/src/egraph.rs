//! The e-graph: hashconsed e-nodes over e-classes, union-find with
//! justification recording, congruence rebuilding, and a may-free-variable
//! analysis used by the capture-avoidance machinery.
//!
//! Invariant maintenance follows the usual deferred scheme: `union` leaves
//! the graph congruence-broken and `rebuild` restores it, merging congruent
//! parents and re-running the analysis to fixpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::explain::ProofLog;
use crate::term::Term;

/// Identifier of an e-class. Canonical ids satisfy `find(id) == id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EClassId(pub(crate) u32);

impl EClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An e-node: a term constructor whose children are e-classes.
/// `Let` has no counterpart here; lets are eliminated before encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ENode {
    Bvar { index: u32, tag: Option<String> },
    App(EClassId, EClassId),
    Lam(EClassId, EClassId),
    All(EClassId, EClassId),
    Sym(String),
    Lit(u64),
    Eps,
}

impl ENode {
    pub fn children(&self) -> Vec<EClassId> {
        match self {
            ENode::App(a, b) | ENode::Lam(a, b) | ENode::All(a, b) => vec![*a, *b],
            _ => vec![],
        }
    }

    /// Binder depth added for the child at `idx` (body of a binder).
    pub fn binder_offset(&self, idx: usize) -> u32 {
        match self {
            ENode::Lam(..) | ENode::All(..) if idx == 1 => 1,
            _ => 0,
        }
    }

    pub fn map_children(&self, mut f: impl FnMut(EClassId) -> EClassId) -> ENode {
        match self {
            ENode::App(a, b) => ENode::App(f(*a), f(*b)),
            ENode::Lam(a, b) => ENode::Lam(f(*a), f(*b)),
            ENode::All(a, b) => ENode::All(f(*a), f(*b)),
            _ => self.clone(),
        }
    }

    fn dump_fmt(&self) -> String {
        match self {
            ENode::Bvar { index, tag: None } => format!("(bvar {index})"),
            ENode::Bvar { index, tag: Some(tag) } => format!("(bvar {index} : \"{tag}\")"),
            ENode::App(a, b) => format!("(app {a} {b})"),
            ENode::Lam(a, b) => format!("(lam {a} {b})"),
            ENode::All(a, b) => format!("(all {a} {b})"),
            ENode::Sym(s) => format!("(sym {s})"),
            ENode::Lit(n) => format!("(lit {n})"),
            ENode::Eps => "(eps)".to_string(),
        }
    }
}

/// Why two classes were merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Rule { name: String, forward: bool },
    Congruence,
    Beta,
    Eta,
    SubstInternal,
}

#[derive(Debug, Clone)]
pub struct UnionRecord {
    pub a: EClassId,
    pub b: EClassId,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("terms must be let-free before encoding; run zeta reduction first")]
    LetNotEliminated,
}

#[derive(Debug, Clone, Default)]
pub struct EClass {
    nodes: Vec<ENode>,
    parents: Vec<(ENode, EClassId)>,
    free_vars: BTreeSet<u32>,
}

impl EClass {
    pub fn nodes(&self) -> &[ENode] {
        &self.nodes
    }

    pub fn free_vars(&self) -> &BTreeSet<u32> {
        &self.free_vars
    }
}

/// May-free analysis transfer function: an over-approximation of the
/// indices free at the root of any term the node can represent.
fn make_free_vars(node: &ENode, data: impl Fn(EClassId) -> BTreeSet<u32>) -> BTreeSet<u32> {
    match node {
        ENode::Bvar { index, .. } => [*index].into_iter().collect(),
        ENode::Sym(_) | ENode::Lit(_) | ENode::Eps => BTreeSet::new(),
        ENode::App(f, a) => data(*f).union(&data(*a)).copied().collect(),
        ENode::Lam(t, b) | ENode::All(t, b) => {
            let mut out = data(*t);
            out.extend(data(*b).iter().filter(|&&i| i >= 1).map(|&i| i - 1));
            out
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EGraph {
    uf: Vec<u32>,
    classes: Vec<Option<EClass>>,
    memo: HashMap<ENode, EClassId>,
    pending: Vec<EClassId>,
    analysis_pending: Vec<EClassId>,
    unions: Vec<UnionRecord>,
    nodes_added: u64,
    pub(crate) proof: ProofLog,
    pub(crate) subst_cache: HashMap<(EClassId, crate::subst::NormSigma), EClassId>,
}

impl EGraph {
    pub fn new() -> EGraph {
        EGraph::default()
    }

    fn assert_known(&self, id: EClassId) {
        assert!(
            (id.0 as usize) < self.uf.len(),
            "stale e-class id {id}: not issued by this graph"
        );
    }

    /// Canonical representative of `id`.
    pub fn find(&self, id: EClassId) -> EClassId {
        self.assert_known(id);
        let mut cur = id.0;
        while self.uf[cur as usize] != cur {
            cur = self.uf[cur as usize];
        }
        EClassId(cur)
    }

    fn find_mut(&mut self, id: EClassId) -> EClassId {
        let root = self.find(id);
        // Path compression.
        let mut cur = id.0;
        while self.uf[cur as usize] != root.0 {
            let next = self.uf[cur as usize];
            self.uf[cur as usize] = root.0;
            cur = next;
        }
        root
    }

    fn canonicalize(&self, node: &ENode) -> ENode {
        node.map_children(|c| self.find(c))
    }

    pub fn class(&self, id: EClassId) -> &EClass {
        let id = self.find(id);
        self.classes[id.index()].as_ref().expect("canonical id has a class")
    }

    /// Canonical classes in id order.
    pub fn classes(&self) -> impl Iterator<Item = (EClassId, &EClass)> {
        self.classes
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (EClassId(i as u32), c)))
    }

    pub fn num_classes(&self) -> usize {
        self.classes.iter().filter(|c| c.is_some()).count()
    }

    /// Total number of distinct e-nodes ever hashconsed (monotone).
    pub fn nodes_added(&self) -> u64 {
        self.nodes_added
    }

    pub fn union_log(&self) -> &[UnionRecord] {
        &self.unions
    }

    pub fn class_free_vars(&self, id: EClassId) -> &BTreeSet<u32> {
        self.class(id).free_vars()
    }

    /// Hashcons lookup without mutation; `None` if the node is absent.
    pub fn lookup(&self, node: &ENode) -> Option<EClassId> {
        let node = self.canonicalize(node);
        self.memo.get(&node).map(|&id| self.find(id))
    }

    /// The class representing `t` structurally, without mutation.
    /// `None` if some spine node of `t` is not hashconsed.
    pub fn lookup_term(&self, t: &Term) -> Option<EClassId> {
        let node = match t {
            Term::Let(..) => return None,
            Term::Bvar { index, tag } => ENode::Bvar { index: *index, tag: tag.clone() },
            Term::App(f, a) => ENode::App(self.lookup_term(f)?, self.lookup_term(a)?),
            Term::Lam(ty, b) => ENode::Lam(self.lookup_term(ty)?, self.lookup_term(b)?),
            Term::All(ty, b) => ENode::All(self.lookup_term(ty)?, self.lookup_term(b)?),
            Term::Sym(s) => ENode::Sym(s.clone()),
            Term::Lit(n) => ENode::Lit(*n),
            Term::Eps => ENode::Eps,
        };
        self.lookup(&node)
    }

    pub(crate) fn record_proof_edge(
        &mut self,
        l: &Term,
        r: &Term,
        kind: crate::explain::EdgeKind,
    ) {
        self.proof.record_edge(l, r, kind);
    }

    /// Add an e-node, returning its class. Idempotent on represented nodes.
    pub fn add(&mut self, node: ENode) -> EClassId {
        let node = self.canonicalize(&node);
        if let Some(&id) = self.memo.get(&node) {
            return self.find_mut(id);
        }
        let id = EClassId(self.uf.len() as u32);
        self.uf.push(id.0);
        let free_vars = make_free_vars(&node, |c| self.class(c).free_vars.clone());
        self.classes.push(Some(EClass {
            nodes: vec![node.clone()],
            parents: Vec::new(),
            free_vars,
        }));
        for child in node.children() {
            let child = self.find(child);
            self.classes[child.index()]
                .as_mut()
                .expect("canonical child")
                .parents
                .push((node.clone(), id));
        }
        self.memo.insert(node, id);
        self.nodes_added += 1;
        id
    }

    /// Encode a let-free term, registering it with the proof log.
    pub fn add_term(&mut self, t: &Term) -> Result<EClassId, EncodeError> {
        let id = match t {
            Term::Let(..) => return Err(EncodeError::LetNotEliminated),
            Term::Bvar { index, tag } => {
                self.add(ENode::Bvar { index: *index, tag: tag.clone() })
            }
            Term::App(f, a) => {
                let f = self.add_term(f)?;
                let a = self.add_term(a)?;
                self.add(ENode::App(f, a))
            }
            Term::Lam(ty, b) => {
                let ty = self.add_term(ty)?;
                let b = self.add_term(b)?;
                self.add(ENode::Lam(ty, b))
            }
            Term::All(ty, b) => {
                let ty = self.add_term(ty)?;
                let b = self.add_term(b)?;
                self.add(ENode::All(ty, b))
            }
            Term::Sym(s) => self.add(ENode::Sym(s.clone())),
            Term::Lit(n) => self.add(ENode::Lit(*n)),
            Term::Eps => self.add(ENode::Eps),
        };
        self.proof.register(t, id);
        Ok(id)
    }

    /// Merge the classes of `a` and `b`. The smaller id becomes canonical.
    pub fn union(&mut self, a: EClassId, b: EClassId, justification: Justification) -> EClassId {
        let ra = self.find_mut(a);
        let rb = self.find_mut(b);
        if ra == rb {
            return ra;
        }
        self.subst_cache.clear();
        self.unions.push(UnionRecord { a: ra, b: rb, justification });
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.uf[child.index()] = root.0;
        let child_class = self.classes[child.index()].take().expect("canonical id has a class");
        let root_class = self.classes[root.index()].as_mut().expect("canonical id has a class");
        root_class.nodes.extend(child_class.nodes);
        root_class.parents.extend(child_class.parents);
        // Parents on either side are stale whenever the two analyses
        // disagreed at all: the side whose set was smaller has parents
        // whose data misses the other side's indices.
        let sides_differed = root_class.free_vars != child_class.free_vars;
        root_class.free_vars.extend(child_class.free_vars);
        self.pending.push(root);
        if sides_differed {
            self.analysis_pending.push(root);
        }
        root
    }

    /// Restore congruence closure and the analysis fixpoint.
    pub fn rebuild(&mut self) {
        while !self.pending.is_empty() || !self.analysis_pending.is_empty() {
            while let Some(class) = self.pending.pop() {
                self.repair(self.find(class));
            }
            while let Some(class) = self.analysis_pending.pop() {
                self.propagate_free_vars(self.find(class));
            }
        }
    }

    fn repair(&mut self, id: EClassId) {
        let parents = {
            let class = self.classes[id.index()].as_mut().expect("canonical id");
            std::mem::take(&mut class.parents)
        };
        let mut new_parents: Vec<(ENode, EClassId)> = Vec::new();
        let mut seen: HashMap<ENode, EClassId> = HashMap::new();
        for (pnode, pclass) in parents {
            self.memo.remove(&pnode);
            let canon = self.canonicalize(&pnode);
            let pclass = self.find_mut(pclass);
            if let Some(&prev) = self.memo.get(&canon) {
                if self.find(prev) != pclass {
                    self.union(prev, pclass, Justification::Congruence);
                }
            }
            let pclass = self.find(pclass);
            self.memo.insert(canon.clone(), pclass);
            match seen.get(&canon) {
                Some(&other) if self.find(other) == pclass => {}
                _ => {
                    seen.insert(canon.clone(), pclass);
                    new_parents.push((canon, pclass));
                }
            }
        }
        let id = self.find(id);
        // Deduplicate the node list under the current canonicalization.
        let class = self.classes[id.index()].as_mut().expect("canonical id");
        let nodes = std::mem::take(&mut class.nodes);
        let mut seen_nodes: BTreeSet<ENode> = BTreeSet::new();
        let mut canon_nodes = Vec::new();
        let canon: Vec<ENode> = nodes
            .iter()
            .map(|n| n.map_children(|c| Self::find_in(&self.uf, c)))
            .collect();
        for n in canon {
            if seen_nodes.insert(n.clone()) {
                canon_nodes.push(n);
            }
        }
        let class = self.classes[id.index()].as_mut().expect("canonical id");
        class.nodes = canon_nodes;
        class.parents.extend(new_parents);
    }

    fn find_in(uf: &[u32], id: EClassId) -> EClassId {
        let mut cur = id.0;
        while uf[cur as usize] != cur {
            cur = uf[cur as usize];
        }
        EClassId(cur)
    }

    fn propagate_free_vars(&mut self, id: EClassId) {
        let parents: Vec<(ENode, EClassId)> =
            self.classes[id.index()].as_ref().expect("canonical id").parents.clone();
        for (pnode, pclass) in parents {
            let new = make_free_vars(&self.canonicalize(&pnode), |c| {
                self.class(c).free_vars.clone()
            });
            let pclass = self.find(pclass);
            let class = self.classes[pclass.index()].as_mut().expect("canonical id");
            let before = class.free_vars.len();
            class.free_vars.extend(new);
            if class.free_vars.len() != before {
                self.analysis_pending.push(pclass);
            }
        }
    }

    /// All terms of size at most `max_size` represented by the class.
    pub fn extract_terms(&self, id: EClassId, max_size: usize) -> BTreeSet<Term> {
        assert!(max_size >= 1, "max_size must be positive");
        let mut memo: HashMap<(EClassId, usize), BTreeSet<Term>> = HashMap::new();
        self.extract_rec(self.find(id), max_size, &mut memo)
    }

    fn extract_rec(
        &self,
        id: EClassId,
        budget: usize,
        memo: &mut HashMap<(EClassId, usize), BTreeSet<Term>>,
    ) -> BTreeSet<Term> {
        let id = self.find(id);
        if budget == 0 {
            return BTreeSet::new();
        }
        if let Some(hit) = memo.get(&(id, budget)) {
            return hit.clone();
        }
        // Seed the memo so cyclic classes bottom out at smaller budgets.
        memo.insert((id, budget), BTreeSet::new());
        let mut out = BTreeSet::new();
        for node in self.class(id).nodes() {
            match node {
                ENode::Bvar { index, tag } => {
                    out.insert(Term::Bvar { index: *index, tag: tag.clone() });
                }
                ENode::Sym(s) => {
                    out.insert(Term::Sym(s.clone()));
                }
                ENode::Lit(n) => {
                    out.insert(Term::Lit(*n));
                }
                ENode::Eps => {
                    out.insert(Term::Eps);
                }
                ENode::App(a, b) | ENode::Lam(a, b) | ENode::All(a, b) => {
                    if budget < 3 {
                        continue;
                    }
                    let lefts = self.extract_rec(*a, budget - 2, memo);
                    for left in &lefts {
                        let remaining = budget - 1 - left.size();
                        if remaining == 0 {
                            continue;
                        }
                        let rights = self.extract_rec(*b, remaining, memo);
                        for right in &rights {
                            out.insert(match node {
                                ENode::App(..) => Term::app(left.clone(), right.clone()),
                                ENode::Lam(..) => Term::lam(left.clone(), right.clone()),
                                _ => Term::all(left.clone(), right.clone()),
                            });
                        }
                    }
                }
            }
        }
        memo.insert((id, budget), out.clone());
        out
    }

    /// Smallest representative of every class whose best size is at most
    /// `max_size`. Sizes converge in an integer fixpoint first; terms are
    /// materialized once per qualifying class, following minimal nodes
    /// (which cannot cycle: a node's cost strictly exceeds its children's).
    pub fn extract_smallest_table(&self, max_size: usize) -> BTreeMap<EClassId, Term> {
        let mut cost: Vec<Option<u32>> = vec![None; self.uf.len()];
        let node_cost = |cost: &[Option<u32>], node: &ENode| -> Option<u32> {
            let mut total = 1u32;
            for child in node.children() {
                total = total.saturating_add(cost[self.find(child).index()]?);
            }
            Some(total)
        };
        loop {
            let mut changed = false;
            for (id, class) in self.classes() {
                for node in class.nodes() {
                    if let Some(c) = node_cost(&cost, node) {
                        if cost[id.index()].is_none_or(|cur| c < cur) {
                            cost[id.index()] = Some(c);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        fn build(
            g: &EGraph,
            cost: &[Option<u32>],
            id: EClassId,
            memo: &mut HashMap<EClassId, Term>,
        ) -> Term {
            let id = g.find(id);
            if let Some(t) = memo.get(&id) {
                return t.clone();
            }
            let target = cost[id.index()].expect("materializing a costed class");
            let mut best_node: Option<&ENode> = None;
            for node in g.class(id).nodes() {
                let c = {
                    let mut total = Some(1u32);
                    for child in node.children() {
                        total = total
                            .and_then(|t| Some(t.saturating_add(cost[g.find(child).index()]?)));
                    }
                    total
                };
                if c == Some(target) {
                    match best_node {
                        Some(cur) if *cur <= *node => {}
                        _ => best_node = Some(node),
                    }
                }
            }
            let node = best_node.expect("some node realizes the minimal cost");
            let term = match node {
                ENode::Bvar { index, tag } => Term::Bvar { index: *index, tag: tag.clone() },
                ENode::Sym(s) => Term::Sym(s.clone()),
                ENode::Lit(n) => Term::Lit(*n),
                ENode::Eps => Term::Eps,
                ENode::App(a, b) => {
                    Term::app(build(g, cost, *a, memo), build(g, cost, *b, memo))
                }
                ENode::Lam(a, b) => {
                    Term::lam(build(g, cost, *a, memo), build(g, cost, *b, memo))
                }
                ENode::All(a, b) => {
                    Term::all(build(g, cost, *a, memo), build(g, cost, *b, memo))
                }
            };
            memo.insert(id, term.clone());
            term
        }

        let mut memo = HashMap::new();
        let mut out = BTreeMap::new();
        for (id, _) in self.classes() {
            if let Some(c) = cost[id.index()] {
                if c as usize <= max_size {
                    out.insert(id, build(self, &cost, id, &mut memo));
                }
            }
        }
        out
    }

    /// Line-oriented debug dump: one `class <id>: nodes | fv={..}` per class.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, class) in self.classes() {
            let mut nodes: Vec<String> = class.nodes().iter().map(|n| n.dump_fmt()).collect();
            nodes.sort();
            let fv: Vec<String> =
                class.free_vars().iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "class {}: {} | fv={{{}}}\n",
                id,
                nodes.join(" "),
                fv.join(",")
            ));
        }
        out
    }
}
