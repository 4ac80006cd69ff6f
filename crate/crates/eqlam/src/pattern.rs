//! Pattern terms with metavariables, and capture-avoiding matching and
//! instantiation on plain terms.
//!
//! Matching normalizes every binding to the depth of the match root: a
//! metavariable occurring under `d` pattern binders that matches a subterm
//! `u` binds `shift(u, -d)`. The shift fails if `u` refers to a variable
//! bound within the pattern itself, which rejects exactly the matches the
//! validity guards abort on the e-graph side. Instantiation shifts each
//! binding back up by the occurrence depth.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::{shift_term, Term};

/// A term with metavariable holes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Var(String),
    Bvar { index: u32, tag: Option<String> },
    App(Box<Pattern>, Box<Pattern>),
    Lam(Box<Pattern>, Box<Pattern>),
    All(Box<Pattern>, Box<Pattern>),
    Let(Box<Pattern>, Box<Pattern>, Box<Pattern>),
    Sym(String),
    Lit(u64),
    Eps,
}

/// An equational rewrite rule over patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
    pub directions: Directions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directions {
    Forward,
    Backward,
    Both,
}

impl Directions {
    pub fn allows_forward(self) -> bool {
        matches!(self, Directions::Forward | Directions::Both)
    }

    pub fn allows_backward(self) -> bool {
        matches!(self, Directions::Backward | Directions::Both)
    }
}

impl Pattern {
    /// Convert to a plain term; `None` if any metavariable occurs.
    pub fn into_term(self) -> Option<Term> {
        Some(match self {
            Pattern::Var(_) => return None,
            Pattern::Bvar { index, tag } => Term::Bvar { index, tag },
            Pattern::App(f, a) => Term::app(f.into_term()?, a.into_term()?),
            Pattern::Lam(t, b) => Term::lam(t.into_term()?, b.into_term()?),
            Pattern::All(t, b) => Term::all(t.into_term()?, b.into_term()?),
            Pattern::Let(t, v, b) => Term::let_(t.into_term()?, v.into_term()?, b.into_term()?),
            Pattern::Sym(s) => Term::Sym(s),
            Pattern::Lit(n) => Term::Lit(n),
            Pattern::Eps => Term::Eps,
        })
    }

    pub fn from_term(t: &Term) -> Pattern {
        match t {
            Term::Bvar { index, tag } => Pattern::Bvar { index: *index, tag: tag.clone() },
            Term::App(f, a) => Pattern::App(
                Box::new(Pattern::from_term(f)),
                Box::new(Pattern::from_term(a)),
            ),
            Term::Lam(ty, b) => Pattern::Lam(
                Box::new(Pattern::from_term(ty)),
                Box::new(Pattern::from_term(b)),
            ),
            Term::All(ty, b) => Pattern::All(
                Box::new(Pattern::from_term(ty)),
                Box::new(Pattern::from_term(b)),
            ),
            Term::Let(ty, v, b) => Pattern::Let(
                Box::new(Pattern::from_term(ty)),
                Box::new(Pattern::from_term(v)),
                Box::new(Pattern::from_term(b)),
            ),
            Term::Sym(s) => Pattern::Sym(s.clone()),
            Term::Lit(n) => Pattern::Lit(*n),
            Term::Eps => Pattern::Eps,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Pattern::Var(_) => false,
            Pattern::App(f, a) => f.is_ground() && a.is_ground(),
            Pattern::Lam(t, b) | Pattern::All(t, b) => t.is_ground() && b.is_ground(),
            Pattern::Let(t, v, b) => t.is_ground() && v.is_ground() && b.is_ground(),
            _ => true,
        }
    }

    pub fn contains_let(&self) -> bool {
        match self {
            Pattern::Let(..) => true,
            Pattern::App(f, a) => f.contains_let() || a.contains_let(),
            Pattern::Lam(t, b) | Pattern::All(t, b) => t.contains_let() || b.contains_let(),
            _ => false,
        }
    }

    /// Metavariable names in first-occurrence order.
    pub fn metavars(&self) -> Vec<String> {
        fn go(p: &Pattern, out: &mut Vec<String>) {
            match p {
                Pattern::Var(x) => {
                    if !out.iter().any(|y| y == x) {
                        out.push(x.clone());
                    }
                }
                Pattern::App(f, a) => {
                    go(f, out);
                    go(a, out);
                }
                Pattern::Lam(t, b) | Pattern::All(t, b) => {
                    go(t, out);
                    go(b, out);
                }
                Pattern::Let(t, v, b) => {
                    go(t, out);
                    go(v, out);
                    go(b, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Binder depths of each metavariable's occurrences.
    pub fn metavar_depths(&self) -> BTreeMap<String, BTreeSet<u32>> {
        fn go(p: &Pattern, depth: u32, out: &mut BTreeMap<String, BTreeSet<u32>>) {
            match p {
                Pattern::Var(x) => {
                    out.entry(x.clone()).or_default().insert(depth);
                }
                Pattern::App(f, a) => {
                    go(f, depth, out);
                    go(a, depth, out);
                }
                Pattern::Lam(t, b) | Pattern::All(t, b) => {
                    go(t, depth, out);
                    go(b, depth + 1, out);
                }
                Pattern::Let(t, v, b) => {
                    go(t, depth, out);
                    go(v, depth, out);
                    go(b, depth + 1, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeMap::new();
        go(self, 0, &mut out);
        out
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pattern::Var(x) => write!(f, "?{x}"),
            Pattern::Bvar { index, tag: None } => write!(f, "(bvar {index})"),
            Pattern::Bvar { index, tag: Some(tag) } => write!(f, "(bvar {index} : \"{tag}\")"),
            Pattern::App(fun, arg) => write!(f, "(app {fun} {arg})"),
            Pattern::Lam(ty, b) => write!(f, "(lam {ty} {b})"),
            Pattern::All(ty, b) => write!(f, "(all {ty} {b})"),
            Pattern::Let(ty, v, b) => write!(f, "(let {ty} {v} {b})"),
            Pattern::Sym(s) => write!(f, "{s}"),
            Pattern::Lit(n) => write!(f, "(lit {n})"),
            Pattern::Eps => write!(f, "eps"),
        }
    }
}

/// Match `pattern` against `term`. Bindings are normalized to the match
/// root's depth; a match binding a pattern-locally-bound variable fails.
pub fn match_term(pattern: &Pattern, term: &Term) -> Option<BTreeMap<String, Term>> {
    fn go(
        p: &Pattern,
        t: &Term,
        depth: u32,
        binds: &mut BTreeMap<String, Term>,
    ) -> bool {
        match (p, t) {
            (Pattern::Var(x), _) => {
                let normalized = match shift_term(t, -(depth as i64), 0) {
                    Ok(v) => v,
                    // The subterm mentions a variable bound inside the
                    // pattern; that is an invalid (locally bound) match.
                    Err(_) => return false,
                };
                match binds.get(x) {
                    Some(prev) => *prev == normalized,
                    None => {
                        binds.insert(x.clone(), normalized);
                        true
                    }
                }
            }
            (Pattern::Bvar { index, tag }, Term::Bvar { index: ti, tag: tt }) => {
                index == ti && tag == tt
            }
            (Pattern::App(pf, pa), Term::App(tf, ta)) => {
                go(pf, tf, depth, binds) && go(pa, ta, depth, binds)
            }
            (Pattern::Lam(pt, pb), Term::Lam(tt, tb))
            | (Pattern::All(pt, pb), Term::All(tt, tb)) => {
                go(pt, tt, depth, binds) && go(pb, tb, depth + 1, binds)
            }
            (Pattern::Let(pt, pv, pb), Term::Let(tt, tv, tb)) => {
                go(pt, tt, depth, binds)
                    && go(pv, tv, depth, binds)
                    && go(pb, tb, depth + 1, binds)
            }
            (Pattern::Sym(a), Term::Sym(b)) => a == b,
            (Pattern::Lit(a), Term::Lit(b)) => a == b,
            (Pattern::Eps, Term::Eps) => true,
            _ => false,
        }
    }
    let mut binds = BTreeMap::new();
    if go(pattern, term, 0, &mut binds) {
        Some(binds)
    } else {
        None
    }
}

/// Instantiate `pattern` with root-depth bindings, lifting each binding by
/// its occurrence depth. `None` if a metavariable is unbound.
pub fn instantiate(pattern: &Pattern, binds: &BTreeMap<String, Term>) -> Option<Term> {
    fn go(p: &Pattern, binds: &BTreeMap<String, Term>, depth: u32) -> Option<Term> {
        Some(match p {
            Pattern::Var(x) => {
                let t = binds.get(x)?;
                shift_term(t, depth as i64, 0).expect("positive shift cannot underflow")
            }
            Pattern::Bvar { index, tag } => Term::Bvar { index: *index, tag: tag.clone() },
            Pattern::App(f, a) => Term::app(go(f, binds, depth)?, go(a, binds, depth)?),
            Pattern::Lam(t, b) => Term::lam(go(t, binds, depth)?, go(b, binds, depth + 1)?),
            Pattern::All(t, b) => Term::all(go(t, binds, depth)?, go(b, binds, depth + 1)?),
            Pattern::Let(t, v, b) => Term::let_(
                go(t, binds, depth)?,
                go(v, binds, depth)?,
                go(b, binds, depth + 1)?,
            ),
            Pattern::Sym(s) => Term::Sym(s.clone()),
            Pattern::Lit(n) => Term::Lit(*n),
            Pattern::Eps => Term::Eps,
        })
    }
    go(pattern, binds, 0)
}

/// Rewrite the subterm of `t` at `pos` by `lhs -> rhs`; `None` if the
/// pattern does not match there or the path is invalid.
pub fn rewrite_at(t: &Term, pos: &[usize], lhs: &Pattern, rhs: &Pattern) -> Option<Term> {
    let sub = t.subterm(pos)?;
    let binds = match_term(lhs, sub)?;
    let replacement = instantiate(rhs, &binds)?;
    t.replace_at(pos, replacement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_pattern, parse_term};

    #[test]
    fn match_binds_and_instantiates() {
        let p = parse_pattern("(app (app plus ?x) (lit 0))").unwrap();
        let t = parse_term("(app (app plus (lit 7)) (lit 0))").unwrap();
        let binds = match_term(&p, &t).unwrap();
        assert_eq!(binds["x"], Term::Lit(7));
        let out = instantiate(&parse_pattern("?x").unwrap(), &binds).unwrap();
        assert_eq!(out, Term::Lit(7));
    }

    #[test]
    fn locally_bound_match_fails() {
        // (λ ?x) 1 against (λ 0̂) 1: ?x would capture the λ's own variable.
        let p = parse_pattern("(app (lam _ ?x) (lit 1))").unwrap();
        let t = parse_term("(app (lam _ (bvar 0)) (lit 1))").unwrap();
        assert!(match_term(&p, &t).is_none());
    }

    #[test]
    fn free_var_binding_normalizes_depth() {
        // λ(λ ?x) 0 against λ(λ 4̂) 0 binds ?x to 2̂ (4 minus two binders).
        let p = parse_pattern("(lam _ (app (lam _ ?x) (lit 0)))").unwrap();
        let t = parse_term("(lam _ (app (lam _ (bvar 4)) (lit 0)))").unwrap();
        let binds = match_term(&p, &t).unwrap();
        assert_eq!(binds["x"], Term::bvar(2));
        // Rewriting to λ ?x re-lifts by one: λ 3̂.
        let rhs = parse_pattern("(lam _ ?x)").unwrap();
        let out = rewrite_at(&t, &[], &p, &rhs).unwrap();
        assert_eq!(out, parse_term("(lam _ (bvar 3))").unwrap());
    }

    #[test]
    fn repeated_metavar_requires_equal_bindings() {
        let p = parse_pattern("(app ?x ?x)").unwrap();
        let good = parse_term("(app f f)").unwrap();
        let bad = parse_term("(app f g)").unwrap();
        assert!(match_term(&p, &good).is_some());
        assert!(match_term(&p, &bad).is_none());
    }

    #[test]
    fn repeated_metavar_at_distinct_depths_normalizes() {
        // λ(λ ?x) ?x against λ(λ 0̂) 0̂: both occurrences are locally bound,
        // so matching must fail rather than conflate them.
        let p = parse_pattern("(lam _ (app (lam _ ?x) ?x))").unwrap();
        let t = parse_term("(lam _ (app (lam _ (bvar 0)) (bvar 0)))").unwrap();
        assert!(match_term(&p, &t).is_none());
    }

    #[test]
    fn rewrite_at_nested_position() {
        let rule_lhs = parse_pattern("(app (app plus ?x) (lit 0))").unwrap();
        let rule_rhs = parse_pattern("?x").unwrap();
        let t = parse_term("(app f (app (app plus (lit 3)) (lit 0)))").unwrap();
        let out = rewrite_at(&t, &[1], &rule_lhs, &rule_rhs).unwrap();
        assert_eq!(out, parse_term("(app f (lit 3))").unwrap());
    }

    #[test]
    fn metavar_depths_computed_per_occurrence() {
        let p = parse_pattern("(lam _ (app (lam _ ?x) ?x))").unwrap();
        let depths = p.metavar_depths();
        assert_eq!(depths["x"], [1, 2].into_iter().collect());
    }
}
