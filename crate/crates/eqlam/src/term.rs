//! The plain expression language: de Bruijn terms with binder types,
//! shifting, capture-avoiding substitution, and the ζ/β/η reductions.
//!
//! Everything in this module is pure and e-graph-free. The replay checker
//! and the search oracle are built on top of it, so it doubles as the
//! trusted base of the whole crate.

use std::fmt;

use thiserror::Error;

/// A λ-calculus expression with de Bruijn indices.
///
/// `Bvar` optionally carries a type tag (the canonical print of a closed
/// binder type); tagged and untagged variables are distinct terms.
/// `Sym` and `Lit` are uninterpreted constants, `Eps` is the erasure
/// constant that stands in for erased proof terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Bvar { index: u32, tag: Option<String> },
    App(Box<Term>, Box<Term>),
    Lam(Box<Term>, Box<Term>),
    All(Box<Term>, Box<Term>),
    Let(Box<Term>, Box<Term>, Box<Term>),
    Sym(String),
    Lit(u64),
    Eps,
}

/// Shifting a de Bruijn index below zero.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("de Bruijn index {index} shifted below zero (offset {offset})")]
pub struct UnderflowError {
    pub index: u32,
    pub offset: i64,
}

impl Term {
    pub fn bvar(index: u32) -> Term {
        Term::Bvar { index, tag: None }
    }

    pub fn sym(name: impl Into<String>) -> Term {
        Term::Sym(name.into())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn lam(ty: Term, body: Term) -> Term {
        Term::Lam(Box::new(ty), Box::new(body))
    }

    pub fn all(ty: Term, body: Term) -> Term {
        Term::All(Box::new(ty), Box::new(body))
    }

    pub fn let_(ty: Term, value: Term, body: Term) -> Term {
        Term::Let(Box::new(ty), Box::new(value), Box::new(body))
    }

    /// Number of nodes in the tree. Tags do not count.
    pub fn size(&self) -> usize {
        match self {
            Term::Bvar { .. } | Term::Sym(_) | Term::Lit(_) | Term::Eps => 1,
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Lam(t, b) | Term::All(t, b) => 1 + t.size() + b.size(),
            Term::Let(t, v, b) => 1 + t.size() + v.size() + b.size(),
        }
    }

    /// Child subterms in position order (App: fn, arg; binders: type, body).
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Bvar { .. } | Term::Sym(_) | Term::Lit(_) | Term::Eps => vec![],
            Term::App(f, a) => vec![f, a],
            Term::Lam(t, b) | Term::All(t, b) => vec![t, b],
            Term::Let(t, v, b) => vec![t, v, b],
        }
    }

    /// How many binders the child at `idx` sits under, relative to this node.
    pub fn binder_offset(&self, idx: usize) -> u32 {
        match self {
            Term::Lam(..) | Term::All(..) if idx == 1 => 1,
            Term::Let(..) if idx == 2 => 1,
            _ => 0,
        }
    }

    /// The subterm at a child-index path, if the path is valid.
    pub fn subterm(&self, pos: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in pos {
            cur = match (cur, i) {
                (Term::App(f, _), 0) => f,
                (Term::App(_, a), 1) => a,
                (Term::Lam(t, _), 0) | (Term::All(t, _), 0) | (Term::Let(t, _, _), 0) => t,
                (Term::Lam(_, b), 1) | (Term::All(_, b), 1) => b,
                (Term::Let(_, v, _), 1) => v,
                (Term::Let(_, _, b), 2) => b,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Replace the subterm at `pos` with `new`, if the path is valid.
    pub fn replace_at(&self, pos: &[usize], new: Term) -> Option<Term> {
        if pos.is_empty() {
            return Some(new);
        }
        let (i, rest) = (pos[0], &pos[1..]);
        Some(match (self, i) {
            (Term::App(f, a), 0) => Term::App(Box::new(f.replace_at(rest, new)?), a.clone()),
            (Term::App(f, a), 1) => Term::App(f.clone(), Box::new(a.replace_at(rest, new)?)),
            (Term::Lam(t, b), 0) => Term::Lam(Box::new(t.replace_at(rest, new)?), b.clone()),
            (Term::Lam(t, b), 1) => Term::Lam(t.clone(), Box::new(b.replace_at(rest, new)?)),
            (Term::All(t, b), 0) => Term::All(Box::new(t.replace_at(rest, new)?), b.clone()),
            (Term::All(t, b), 1) => Term::All(t.clone(), Box::new(b.replace_at(rest, new)?)),
            (Term::Let(t, v, b), 0) => {
                Term::Let(Box::new(t.replace_at(rest, new)?), v.clone(), b.clone())
            }
            (Term::Let(t, v, b), 1) => {
                Term::Let(t.clone(), Box::new(v.replace_at(rest, new)?), b.clone())
            }
            (Term::Let(t, v, b), 2) => {
                Term::Let(t.clone(), v.clone(), Box::new(b.replace_at(rest, new)?))
            }
            _ => return None,
        })
    }

    /// All child-index paths of the term, root first, in preorder.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![(self, Vec::new())];
        while let Some((t, pos)) = stack.pop() {
            out.push(pos.clone());
            let kids = t.children();
            for (i, k) in kids.into_iter().enumerate().rev() {
                let mut p = pos.clone();
                p.push(i);
                stack.push((k, p));
            }
        }
        out
    }

    /// True if no `Let` node occurs anywhere in the term.
    pub fn is_let_free(&self) -> bool {
        match self {
            Term::Let(..) => false,
            _ => self.children().iter().all(|c| c.is_let_free()),
        }
    }

    /// The leftmost symbol of the application spine, if any.
    pub fn spine_head(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            Term::App(f, _) => f.spine_head(),
            _ => None,
        }
    }
}

/// Shift every variable that is free at or above `cutoff` by `offset`.
///
/// A `Bvar` with raw index `i` at binder depth `d` inside `t` is shifted
/// iff `i - d >= cutoff`; its tag rides along unchanged. Errors when a
/// shifted index would drop below zero.
pub fn shift_term(t: &Term, offset: i64, cutoff: u32) -> Result<Term, UnderflowError> {
    fn go(t: &Term, offset: i64, cutoff: u32, depth: u32) -> Result<Term, UnderflowError> {
        Ok(match t {
            Term::Bvar { index, tag } => {
                let free = *index as i64 - depth as i64;
                if free >= cutoff as i64 {
                    let shifted = *index as i64 + offset;
                    if shifted < 0 {
                        return Err(UnderflowError { index: *index, offset });
                    }
                    Term::Bvar { index: shifted as u32, tag: tag.clone() }
                } else {
                    t.clone()
                }
            }
            Term::App(f, a) => Term::app(go(f, offset, cutoff, depth)?, go(a, offset, cutoff, depth)?),
            Term::Lam(ty, b) => {
                Term::lam(go(ty, offset, cutoff, depth)?, go(b, offset, cutoff, depth + 1)?)
            }
            Term::All(ty, b) => {
                Term::all(go(ty, offset, cutoff, depth)?, go(b, offset, cutoff, depth + 1)?)
            }
            Term::Let(ty, v, b) => Term::let_(
                go(ty, offset, cutoff, depth)?,
                go(v, offset, cutoff, depth)?,
                go(b, offset, cutoff, depth + 1)?,
            ),
            Term::Sym(_) | Term::Lit(_) | Term::Eps => t.clone(),
        })
    }
    if offset == 0 {
        return Ok(t.clone());
    }
    go(t, offset, cutoff, 0)
}

/// Instantiate the variable bound by the innermost binder: `body[0 := arg]`.
///
/// Free variables of `body` above the binder come down by one; free
/// variables of `arg` go up by the depth of each insertion point.
pub fn open_term(body: &Term, arg: &Term) -> Term {
    fn go(t: &Term, arg: &Term, depth: u32) -> Term {
        match t {
            Term::Bvar { index, .. } if *index == depth => {
                // Lifting a closed-or-wellformed arg cannot underflow.
                shift_term(arg, depth as i64, 0).expect("positive shift cannot underflow")
            }
            Term::Bvar { index, tag } if *index > depth => {
                Term::Bvar { index: index - 1, tag: tag.clone() }
            }
            Term::Bvar { .. } => t.clone(),
            Term::App(f, a) => Term::app(go(f, arg, depth), go(a, arg, depth)),
            Term::Lam(ty, b) => Term::lam(go(ty, arg, depth), go(b, arg, depth + 1)),
            Term::All(ty, b) => Term::all(go(ty, arg, depth), go(b, arg, depth + 1)),
            Term::Let(ty, v, b) => {
                Term::let_(go(ty, arg, depth), go(v, arg, depth), go(b, arg, depth + 1))
            }
            Term::Sym(_) | Term::Lit(_) | Term::Eps => t.clone(),
        }
    }
    go(body, arg, 0)
}

/// One β-step at the root: `(λτ. b) a  →  b[0 := a]`.
pub fn beta_step(t: &Term) -> Option<Term> {
    match t {
        Term::App(f, a) => match f.as_ref() {
            Term::Lam(_, body) => Some(open_term(body, a)),
            _ => None,
        },
        _ => None,
    }
}

/// One η-step at the root: `λτ. f 0̂  →  f` provided `0 ∉ fvars(f)`.
pub fn eta_step(t: &Term) -> Option<Term> {
    match t {
        Term::Lam(_, body) => match body.as_ref() {
            Term::App(f, a) => match a.as_ref() {
                Term::Bvar { index: 0, .. } if !fvars_term(f).contains(&0) => {
                    Some(shift_term(f, -1, 1).expect("0 is not free, shift cannot underflow"))
                }
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Eliminate every `Let` bottom-up: `let τ := v in b` becomes `b[0 := v]`.
pub fn zeta_reduce(t: &Term) -> Term {
    match t {
        Term::Let(_, v, b) => {
            let v = zeta_reduce(v);
            let b = zeta_reduce(b);
            // The value may itself have produced lets inside b's substitution
            // sites; both are already let-free here, so one open suffices.
            open_term(&b, &v)
        }
        Term::App(f, a) => Term::app(zeta_reduce(f), zeta_reduce(a)),
        Term::Lam(ty, b) => Term::lam(zeta_reduce(ty), zeta_reduce(b)),
        Term::All(ty, b) => Term::all(zeta_reduce(ty), zeta_reduce(b)),
        Term::Bvar { .. } | Term::Sym(_) | Term::Lit(_) | Term::Eps => t.clone(),
    }
}

/// Replace every maximal subterm whose spine head is in `proof_heads` by ε.
pub fn erase_proofs(t: &Term, proof_heads: &std::collections::BTreeSet<String>) -> Term {
    if proof_heads.is_empty() {
        return t.clone();
    }
    if let Some(head) = t.spine_head() {
        if proof_heads.contains(head) {
            return Term::Eps;
        }
    }
    match t {
        Term::App(f, a) => Term::app(erase_proofs(f, proof_heads), erase_proofs(a, proof_heads)),
        Term::Lam(ty, b) => Term::lam(erase_proofs(ty, proof_heads), erase_proofs(b, proof_heads)),
        Term::All(ty, b) => Term::all(erase_proofs(ty, proof_heads), erase_proofs(b, proof_heads)),
        Term::Let(ty, v, b) => Term::let_(
            erase_proofs(ty, proof_heads),
            erase_proofs(v, proof_heads),
            erase_proofs(b, proof_heads),
        ),
        _ => t.clone(),
    }
}

/// The set of de Bruijn indices free at the root of `t`.
pub fn fvars_term(t: &Term) -> std::collections::BTreeSet<u32> {
    fn go(t: &Term, depth: u32, out: &mut std::collections::BTreeSet<u32>) {
        match t {
            Term::Bvar { index, .. } => {
                if *index >= depth {
                    out.insert(index - depth);
                }
            }
            Term::App(f, a) => {
                go(f, depth, out);
                go(a, depth, out);
            }
            Term::Lam(ty, b) | Term::All(ty, b) => {
                go(ty, depth, out);
                go(b, depth + 1, out);
            }
            Term::Let(ty, v, b) => {
                go(ty, depth, out);
                go(v, depth, out);
                go(b, depth + 1, out);
            }
            Term::Sym(_) | Term::Lit(_) | Term::Eps => {}
        }
    }
    let mut out = std::collections::BTreeSet::new();
    go(t, 0, &mut out);
    out
}

/// Tag each bound variable whose binder type is closed with the canonical
/// print of that type. Variables under open (parameterized) binder types
/// stay untagged, as do variables with no binder in scope.
pub fn annotate_bound_vars(t: &Term) -> Term {
    fn go(t: &Term, env: &mut Vec<Option<String>>) -> Term {
        match t {
            Term::Bvar { index, tag } => {
                let inherited = env
                    .iter()
                    .rev()
                    .nth(*index as usize)
                    .cloned()
                    .flatten();
                Term::Bvar { index: *index, tag: inherited.or_else(|| tag.clone()) }
            }
            Term::App(f, a) => Term::app(go(f, env), go(a, env)),
            Term::Lam(ty, b) | Term::All(ty, b) => {
                let ty2 = go(ty, env);
                let entry = if fvars_term(ty).is_empty() { Some(ty.to_string()) } else { None };
                env.push(entry);
                let b2 = go(b, env);
                env.pop();
                match t {
                    Term::Lam(..) => Term::lam(ty2, b2),
                    _ => Term::all(ty2, b2),
                }
            }
            Term::Let(ty, v, b) => {
                let ty2 = go(ty, env);
                let v2 = go(v, env);
                let entry = if fvars_term(ty).is_empty() { Some(ty.to_string()) } else { None };
                env.push(entry);
                let b2 = go(b, env);
                env.pop();
                Term::let_(ty2, v2, b2)
            }
            Term::Sym(_) | Term::Lit(_) | Term::Eps => t.clone(),
        }
    }
    go(t, &mut Vec::new())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Bvar { index, tag: None } => write!(f, "(bvar {index})"),
            Term::Bvar { index, tag: Some(tag) } => write!(f, "(bvar {index} : \"{tag}\")"),
            Term::App(fun, arg) => write!(f, "(app {fun} {arg})"),
            Term::Lam(ty, b) => write!(f, "(lam {ty} {b})"),
            Term::All(ty, b) => write!(f, "(all {ty} {b})"),
            Term::Let(ty, v, b) => write!(f, "(let {ty} {v} {b})"),
            Term::Sym(s) => write!(f, "{s}"),
            Term::Lit(n) => write!(f, "(lit {n})"),
            Term::Eps => write!(f, "eps"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn heads(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn shift_uncapture_example() {
        // Shifting 4̂ down by one above cutoff 2, the un-capture fix.
        let t = Term::bvar(4);
        assert_eq!(shift_term(&t, -1, 2).unwrap(), Term::bvar(3));
    }

    #[test]
    fn shift_zero_is_identity() {
        let t = Term::lam(Term::sym("_"), Term::app(Term::bvar(0), Term::bvar(3)));
        assert_eq!(shift_term(&t, 0, 0).unwrap(), t);
        assert_eq!(shift_term(&t, 0, 7).unwrap(), t);
    }

    #[test]
    fn shift_under_binder() {
        // λ.1̂ shifted by +1 at cutoff 0: the body var is free (1-1 >= 0).
        let t = Term::lam(Term::sym("_"), Term::bvar(1));
        let expect = Term::lam(Term::sym("_"), Term::bvar(2));
        assert_eq!(shift_term(&t, 1, 0).unwrap(), expect);
    }

    #[test]
    fn shift_underflow_reported() {
        let t = Term::bvar(0);
        let err = shift_term(&t, -1, 0).unwrap_err();
        assert_eq!(err.index, 0);
    }

    #[test]
    fn beta_basic() {
        // (λ. plus 0̂ 0) 1 → plus 1 0
        let plus = |a: Term, b: Term| Term::app(Term::app(Term::sym("plus"), a), b);
        let t = Term::app(
            Term::lam(Term::sym("_"), plus(Term::bvar(0), Term::Lit(0))),
            Term::Lit(1),
        );
        assert_eq!(beta_step(&t).unwrap(), plus(Term::Lit(1), Term::Lit(0)));
    }

    #[test]
    fn beta_no_redex() {
        assert_eq!(beta_step(&Term::sym("f")), None);
        assert_eq!(beta_step(&Term::app(Term::sym("f"), Term::Lit(1))), None);
    }

    #[test]
    fn beta_lifts_argument_under_binder() {
        // (λ. λ. 1̂) 0̂ → λ. 1̂ : the arg 0̂ is lifted by one under the inner λ.
        let t = Term::app(
            Term::lam(Term::sym("_"), Term::lam(Term::sym("_"), Term::bvar(1))),
            Term::bvar(0),
        );
        let expect = Term::lam(Term::sym("_"), Term::bvar(1));
        assert_eq!(beta_step(&t).unwrap(), expect);
    }

    #[test]
    fn eta_closed_function() {
        let t = Term::lam(Term::sym("_"), Term::app(Term::sym("f"), Term::bvar(0)));
        assert_eq!(eta_step(&t).unwrap(), Term::sym("f"));
    }

    #[test]
    fn eta_side_condition_blocks() {
        let t = Term::lam(Term::sym("_"), Term::app(Term::bvar(0), Term::bvar(0)));
        assert_eq!(eta_step(&t), None);
    }

    #[test]
    fn eta_shifts_free_function() {
        let t = Term::lam(Term::sym("_"), Term::app(Term::bvar(1), Term::bvar(0)));
        assert_eq!(eta_step(&t).unwrap(), Term::bvar(0));
    }

    #[test]
    fn zeta_simple() {
        let t = Term::let_(
            Term::sym("_"),
            Term::Lit(3),
            Term::app(Term::sym("f"), Term::bvar(0)),
        );
        assert_eq!(zeta_reduce(&t), Term::app(Term::sym("f"), Term::Lit(3)));
    }

    #[test]
    fn zeta_identity_without_let() {
        let t = Term::lam(Term::sym("_"), Term::app(Term::bvar(0), Term::Lit(2)));
        assert_eq!(zeta_reduce(&t), t);
    }

    #[test]
    fn zeta_nested() {
        // (let _ 1 (let _ 0̂ 0̂)) → 1
        let t = Term::let_(
            Term::sym("_"),
            Term::Lit(1),
            Term::let_(Term::sym("_"), Term::bvar(0), Term::bvar(0)),
        );
        assert_eq!(zeta_reduce(&t), Term::Lit(1));
    }

    #[test]
    fn zeta_output_is_let_free() {
        let t = Term::let_(
            Term::sym("_"),
            Term::let_(Term::sym("_"), Term::Lit(1), Term::bvar(0)),
            Term::let_(Term::sym("_"), Term::bvar(0), Term::app(Term::bvar(0), Term::bvar(1))),
        );
        assert!(zeta_reduce(&t).is_let_free());
    }

    #[test]
    fn erase_whole_spine() {
        let t = Term::app(Term::sym("congrArg"), Term::sym("x"));
        assert_eq!(erase_proofs(&t, &heads(&["congrArg"])), Term::Eps);
    }

    #[test]
    fn erase_empty_heads_is_identity() {
        let t = Term::app(Term::sym("h"), Term::Lit(1));
        assert_eq!(erase_proofs(&t, &heads(&[])), t);
    }

    #[test]
    fn erase_inner_subterm() {
        let t = Term::app(Term::sym("f"), Term::app(Term::sym("h"), Term::Lit(1)));
        let expect = Term::app(Term::sym("f"), Term::Eps);
        assert_eq!(erase_proofs(&t, &heads(&["h"])), expect);
    }

    #[test]
    fn fvars_cases() {
        assert_eq!(fvars_term(&Term::bvar(4)), [4].into_iter().collect());
        let closed = Term::lam(Term::sym("_"), Term::bvar(0));
        assert!(fvars_term(&closed).is_empty());
        let t = Term::lam(Term::sym("_"), Term::app(Term::bvar(0), Term::bvar(2)));
        assert_eq!(fvars_term(&t), [1].into_iter().collect());
    }

    #[test]
    fn annotate_closed_binder_type() {
        let t = Term::lam(Term::sym("Nat"), Term::bvar(0));
        let out = annotate_bound_vars(&t);
        let expect = Term::lam(
            Term::sym("Nat"),
            Term::Bvar { index: 0, tag: Some("Nat".to_string()) },
        );
        assert_eq!(out, expect);
    }

    #[test]
    fn annotate_no_binders_unchanged() {
        let t = Term::app(Term::sym("f"), Term::Lit(1));
        assert_eq!(annotate_bound_vars(&t), t);
    }

    #[test]
    fn annotate_open_binder_type_stays_untagged() {
        // λ x : A. λ y : List x. y — the inner binder type is open.
        let inner = Term::lam(
            Term::app(Term::sym("List"), Term::bvar(0)),
            Term::bvar(0),
        );
        let t = Term::lam(Term::sym("A"), inner);
        let out = annotate_bound_vars(&t);
        match &out {
            Term::Lam(_, b) => match b.as_ref() {
                Term::Lam(_, inner_b) => {
                    assert_eq!(**inner_b, Term::bvar(0), "inner var must stay untagged");
                }
                other => panic!("unexpected body {other:?}"),
            },
            other => panic!("unexpected term {other:?}"),
        }
    }

    #[test]
    fn positions_and_replace_roundtrip() {
        let t = Term::app(
            Term::lam(Term::sym("_"), Term::bvar(0)),
            Term::app(Term::sym("g"), Term::Lit(2)),
        );
        for pos in t.positions() {
            let sub = t.subterm(&pos).unwrap().clone();
            assert_eq!(t.replace_at(&pos, sub).unwrap(), t);
        }
    }
}
