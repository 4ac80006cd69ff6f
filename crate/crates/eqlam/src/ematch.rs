//! Pattern matching over e-classes, and the validity guards that abort
//! matches binding semantically different or locally bound variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::egraph::{EClassId, EGraph, ENode};
use crate::pattern::Pattern;

/// One way a pattern embeds into the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchBinding {
    pub root: EClassId,
    /// Metavariable -> matched class (canonical at match time).
    pub assignment: BTreeMap<String, EClassId>,
    /// Metavariable -> binder depths of its occurrences in the pattern.
    pub depths: BTreeMap<String, BTreeSet<u32>>,
}

/// Guard decision for a candidate match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchDecision {
    Valid,
    /// A metavariable with possibly-free variables occurs under multiple
    /// distinct binder depths: syntactically equal, semantically different.
    AbortCase1,
    /// A metavariable may refer to a variable bound inside the pattern.
    AbortCase2,
}

fn match_class(
    g: &EGraph,
    p: &Pattern,
    class: EClassId,
    binds: &BTreeMap<String, EClassId>,
) -> Vec<BTreeMap<String, EClassId>> {
    let class = g.find(class);
    match p {
        Pattern::Var(x) => match binds.get(x) {
            Some(&prev) if g.find(prev) == class => vec![binds.clone()],
            Some(_) => vec![],
            None => {
                let mut b = binds.clone();
                b.insert(x.clone(), class);
                vec![b]
            }
        },
        Pattern::Bvar { index, tag } => {
            let hit = g.class(class).nodes().iter().any(|n| {
                matches!(n, ENode::Bvar { index: ni, tag: nt } if ni == index && nt == tag)
            });
            if hit {
                vec![binds.clone()]
            } else {
                vec![]
            }
        }
        Pattern::Sym(s) => {
            let hit = g
                .class(class)
                .nodes()
                .iter()
                .any(|n| matches!(n, ENode::Sym(ns) if ns == s));
            if hit {
                vec![binds.clone()]
            } else {
                vec![]
            }
        }
        Pattern::Lit(v) => {
            let hit =
                g.class(class).nodes().iter().any(|n| matches!(n, ENode::Lit(nv) if nv == v));
            if hit {
                vec![binds.clone()]
            } else {
                vec![]
            }
        }
        Pattern::Eps => {
            let hit = g.class(class).nodes().iter().any(|n| matches!(n, ENode::Eps));
            if hit {
                vec![binds.clone()]
            } else {
                vec![]
            }
        }
        Pattern::App(pf, pa) => {
            let mut out = Vec::new();
            for node in g.class(class).nodes() {
                if let ENode::App(cf, ca) = node {
                    for b1 in match_class(g, pf, *cf, binds) {
                        out.extend(match_class(g, pa, *ca, &b1));
                    }
                }
            }
            out
        }
        Pattern::Lam(pt, pb) => {
            let mut out = Vec::new();
            for node in g.class(class).nodes() {
                if let ENode::Lam(ct, cb) = node {
                    for b1 in match_class(g, pt, *ct, binds) {
                        out.extend(match_class(g, pb, *cb, &b1));
                    }
                }
            }
            out
        }
        Pattern::All(pt, pb) => {
            let mut out = Vec::new();
            for node in g.class(class).nodes() {
                if let ENode::All(ct, cb) = node {
                    for b1 in match_class(g, pt, *ct, binds) {
                        out.extend(match_class(g, pb, *cb, &b1));
                    }
                }
            }
            out
        }
        // Lets never occur in the graph.
        Pattern::Let(..) => vec![],
    }
}

/// Largest number of bindings one search will return; a deterministic
/// truncation that keeps degenerate patterns over dense graphs bounded.
const MATCH_CAP: usize = 10_000;

/// All bindings of `p` against every class of a rebuilt graph, in
/// deterministic (class id, assignment) order, truncated at [`MATCH_CAP`].
pub fn ematch(g: &EGraph, p: &Pattern) -> Vec<MatchBinding> {
    let depths = p.metavar_depths();
    let mut out = Vec::new();
    for (root, _) in g.classes() {
        let mut seen: BTreeSet<Vec<(String, EClassId)>> = BTreeSet::new();
        for assignment in match_class(g, p, root, &BTreeMap::new()) {
            let key: Vec<(String, EClassId)> =
                assignment.iter().map(|(k, &v)| (k.clone(), v)).collect();
            if seen.insert(key) {
                out.push(MatchBinding { root, assignment, depths: depths.clone() });
                if out.len() >= MATCH_CAP {
                    return out;
                }
            }
        }
    }
    out
}

/// The dynamic-rewrite guards. Case 1 is checked first: a metavariable
/// occurring at two distinct depths whose class may contain free variables
/// is aborted even when the deeper check would also fire.
pub fn validate_match(g: &EGraph, m: &MatchBinding) -> MatchDecision {
    for (var, depths) in &m.depths {
        let class = m.assignment[var];
        let free = g.class_free_vars(class);
        if depths.len() >= 2 && !free.is_empty() {
            return MatchDecision::AbortCase1;
        }
    }
    for (var, depths) in &m.depths {
        let class = m.assignment[var];
        let free = g.class_free_vars(class);
        let max_depth = depths.iter().max().copied().unwrap_or(0);
        if free.iter().any(|&i| i < max_depth) {
            return MatchDecision::AbortCase2;
        }
    }
    MatchDecision::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_pattern, parse_term};

    fn add(g: &mut EGraph, s: &str) -> EClassId {
        g.add_term(&parse_term(s).unwrap()).unwrap()
    }

    #[test]
    fn locally_bound_trigger_found_and_aborted() {
        // (λ 0̂) 1 matched by (app (lam _ ?x) (lit 1)): binding ?x ↦ 0̂
        // at depth 1 must be found, then aborted as case 2.
        let mut g = EGraph::new();
        let root = add(&mut g, "(app (lam _ (bvar 0)) (lit 1))");
        g.rebuild();
        let p = parse_pattern("(app (lam _ ?x) (lit 1))").unwrap();
        let ms = ematch(&g, &p);
        let hits: Vec<_> = ms.iter().filter(|m| g.find(m.root) == g.find(root)).collect();
        assert_eq!(hits.len(), 1);
        let m = hits[0];
        assert_eq!(m.depths["x"], [1].into_iter().collect());
        let bvar = add(&mut g, "(bvar 0)");
        assert_eq!(g.find(m.assignment["x"]), g.find(bvar));
        assert_eq!(validate_match(&g, m), MatchDecision::AbortCase2);
    }

    #[test]
    fn universal_pattern_matches_every_class() {
        let mut g = EGraph::new();
        add(&mut g, "(app f (lit 1))");
        g.rebuild();
        let p = parse_pattern("?x").unwrap();
        assert_eq!(ematch(&g, &p).len(), g.num_classes());
    }

    #[test]
    fn two_binder_aliasing_aborts_as_case1() {
        // λ(λ ?x) ?x against λ(λ 0̂) 0̂: the shared 0̂ node matches both
        // occurrences at depths {1,2}; case 1 fires before case 2.
        let mut g = EGraph::new();
        add(&mut g, "(lam _ (app (lam _ (bvar 0)) (bvar 0)))");
        g.rebuild();
        let p = parse_pattern("(lam _ (app (lam _ ?x) ?x))").unwrap();
        let ms = ematch(&g, &p);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].depths["x"], [1, 2].into_iter().collect());
        assert_eq!(validate_match(&g, &ms[0]), MatchDecision::AbortCase1);
    }

    #[test]
    fn closed_class_at_any_depth_is_valid() {
        let mut g = EGraph::new();
        add(&mut g, "(lam _ (app (lam _ (lit 3)) (lit 3)))");
        g.rebuild();
        let p = parse_pattern("(lam _ (app (lam _ ?x) ?x))").unwrap();
        let ms = ematch(&g, &p);
        assert_eq!(ms.len(), 1);
        assert_eq!(validate_match(&g, &ms[0]), MatchDecision::Valid);
    }

    #[test]
    fn nested_locally_bound_term_aborts() {
        // ?x ↦ g 0̂ under one binder: not itself a variable, but its class
        // may be free at 0, which the may-free guard still aborts.
        let mut g = EGraph::new();
        add(&mut g, "(app (lam _ (app g (bvar 0))) (lit 1))");
        g.rebuild();
        let p = parse_pattern("(app (lam _ ?x) (lit 1))").unwrap();
        let ms = ematch(&g, &p);
        assert_eq!(ms.len(), 1);
        assert_eq!(validate_match(&g, &ms[0]), MatchDecision::AbortCase2);
    }

    #[test]
    fn repeated_metavar_requires_same_class() {
        let mut g = EGraph::new();
        add(&mut g, "(app (app plus a) a)");
        add(&mut g, "(app (app plus a) b)");
        g.rebuild();
        let p = parse_pattern("(app (app plus ?x) ?x)").unwrap();
        let ms = ematch(&g, &p);
        assert_eq!(ms.len(), 1, "only the aa instance matches");
    }

    #[test]
    fn matches_appear_after_congruence_union() {
        let mut g = EGraph::new();
        let fa = add(&mut g, "(app f a)");
        add(&mut g, "(app g (app f b))");
        let a = add(&mut g, "a");
        let b = add(&mut g, "b");
        g.union(a, b, crate::egraph::Justification::Congruence);
        g.rebuild();
        // (app g ?x) with ?x now bound to the merged f-class.
        let p = parse_pattern("(app g ?x)").unwrap();
        let ms = ematch(&g, &p);
        assert_eq!(ms.len(), 1);
        assert_eq!(g.find(ms[0].assignment["x"]), g.find(fa));
    }

    #[test]
    fn ematch_bindings_are_sound_against_extraction() {
        // Instantiating the pattern with extracted members of the bound
        // classes yields terms present in the root class's extract set.
        let mut g = EGraph::new();
        add(&mut g, "(app (app plus (app f a)) (lit 0))");
        g.rebuild();
        let p = parse_pattern("(app (app plus ?x) (lit 0))").unwrap();
        for m in ematch(&g, &p) {
            let root_terms = g.extract_terms(m.root, 12);
            for member in g.extract_terms(m.assignment["x"], 6) {
                let mut binds = std::collections::BTreeMap::new();
                binds.insert("x".to_string(), member);
                let inst = crate::pattern::instantiate(&p, &binds).unwrap();
                assert!(root_terms.contains(&inst));
            }
        }
    }
}
