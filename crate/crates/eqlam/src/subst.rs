//! Substitution on e-classes: given a class and a substitution descriptor,
//! extend the graph with a class representing the substituted version of
//! every represented term.
//!
//! The traversal is a depth-first walk that constructs substitute classes
//! bottom-up. A child that is still in progress signals a cycle; the node
//! is parked in a waiting list keyed by its blockers and reconsidered
//! whenever a new substitute class is created, cascading to fixpoint.
//! Every cycle in a graph built by add/union contains a node whose children
//! bottom out, so the scheduler always drains.
//!
//! Unions discovered during the walk (several nodes contributing to one
//! substitute class, or collisions with existing classes) are deferred to
//! the end of the invocation so canonical ids stay stable while the memo
//! is live.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::egraph::{EClassId, EGraph, ENode, Justification};
use crate::term::UnderflowError;

/// A substitution descriptor: plain index shifting, or β-style replacement
/// of the variable bound at the redex with an argument class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sigma {
    Shift { offset: i64, cutoff: u32 },
    Beta { arg: EClassId },
}

/// A σ with the traversal depth folded in, used as the memo key. Two
/// shift applications at different depths are the same substitution iff
/// their effective cutoffs agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormSigma {
    Shift { offset: i64, cutoff: u32 },
    Beta { arg: EClassId, depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error(transparent)]
    Underflow(#[from] UnderflowError),
    #[error("substitution work budget exceeded")]
    BudgetExceeded,
}

/// What σ does to one variable occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaAction {
    Index(u32),
    Class(EClassId),
}

/// Apply σ to a variable of raw index `idx` at binder depth `depth`.
pub fn apply_sigma(
    g: &mut EGraph,
    sigma: Sigma,
    idx: u32,
    depth: u32,
) -> Result<SigmaAction, SubstError> {
    match sigma {
        Sigma::Shift { offset, cutoff } => {
            if idx as i64 - depth as i64 >= cutoff as i64 {
                let shifted = idx as i64 + offset;
                if shifted < 0 {
                    return Err(UnderflowError { index: idx, offset }.into());
                }
                Ok(SigmaAction::Index(shifted as u32))
            } else {
                Ok(SigmaAction::Index(idx))
            }
        }
        Sigma::Beta { arg } => {
            if idx > depth {
                Ok(SigmaAction::Index(idx - 1))
            } else if idx < depth {
                Ok(SigmaAction::Index(idx))
            } else {
                let lifted = subst(g, arg, Sigma::Shift { offset: depth as i64, cutoff: 0 })?;
                Ok(SigmaAction::Class(lifted))
            }
        }
    }
}

type Key = (EClassId, NormSigma);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    InProgress,
    Done(EClassId),
}

#[derive(Debug, Clone)]
enum ChildRef {
    Ready(EClassId),
    Blocked(Key),
}

/// A substitute contribution that could not be built yet.
#[derive(Debug, Clone)]
enum PendingShape {
    App(ChildRef, ChildRef),
    Lam(ChildRef, ChildRef),
    All(ChildRef, ChildRef),
    /// The whole contribution is another substitute class (β argument).
    Alias(Key),
}

#[derive(Debug, Clone)]
struct WaitingNode {
    owner: Key,
    shape: PendingShape,
    blockers: BTreeSet<Key>,
}

/// One substitution invocation: DFS state, waiting list and deferred unions.
pub struct Substituter<'g> {
    g: &'g mut EGraph,
    memo: HashMap<Key, Status>,
    waiting: Vec<WaitingNode>,
    deferred_unions: Vec<(EClassId, EClassId)>,
    /// Classes finished by the waiting-list scheduler (not by direct DFS),
    /// recorded for inspection in tests.
    cascade_completions: Vec<(Key, EClassId)>,
    /// Remaining (class, depth) visits before the invocation gives up.
    /// Saturation treats an exhausted budget as an abandoned rewrite;
    /// deep binder chains in degenerate graphs stay bounded this way.
    budget: u32,
}

enum Built {
    Ready(EClassId),
    Pending(PendingShape, BTreeSet<Key>),
}

impl<'g> Substituter<'g> {
    pub fn new(g: &'g mut EGraph) -> Substituter<'g> {
        Substituter {
            g,
            memo: HashMap::new(),
            waiting: Vec::new(),
            deferred_unions: Vec::new(),
            cascade_completions: Vec::new(),
            budget: 50_000,
        }
    }

    fn key(&self, class: EClassId, sigma: Sigma, depth: u32) -> Key {
        let norm = match sigma {
            Sigma::Shift { offset, cutoff } => {
                NormSigma::Shift { offset, cutoff: cutoff + depth }
            }
            Sigma::Beta { arg } => NormSigma::Beta { arg: self.g.find(arg), depth },
        };
        (self.g.find(class), norm)
    }

    /// σ is the identity on every term of the class at this depth: no
    /// possibly-free index is touched.
    fn is_identity(&self, class: EClassId, sigma: Sigma, depth: u32) -> bool {
        let free = self.g.class_free_vars(class);
        match sigma {
            Sigma::Shift { offset: 0, .. } => true,
            Sigma::Shift { offset: _, cutoff } => {
                free.iter().all(|&i| (i as i64) - (depth as i64) < cutoff as i64)
            }
            Sigma::Beta { .. } => free.iter().all(|&i| i < depth),
        }
    }

    fn subst_class(
        &mut self,
        class: EClassId,
        sigma: Sigma,
        depth: u32,
    ) -> Result<Option<EClassId>, SubstError> {
        let class = self.g.find(class);
        if self.is_identity(class, sigma, depth) {
            return Ok(Some(class));
        }
        let key = self.key(class, sigma, depth);
        if let Some(&cached) = self.g.subst_cache.get(&key) {
            return Ok(Some(self.g.find(cached)));
        }
        match self.memo.get(&key) {
            Some(Status::Done(id)) => return Ok(Some(*id)),
            Some(Status::InProgress) => return Ok(None),
            None => {}
        }
        self.budget = self.budget.checked_sub(1).ok_or(SubstError::BudgetExceeded)?;
        self.memo.insert(key, Status::InProgress);

        let nodes: Vec<ENode> = self.g.class(class).nodes().to_vec();
        let mut created: Option<EClassId> = None;
        for node in nodes {
            match self.build_node(&node, sigma, depth)? {
                Built::Ready(contrib) => match created {
                    None => {
                        // A cascade may have finished this key while we
                        // recursed; merge rather than overwrite.
                        if let Some(Status::Done(existing)) = self.memo.get(&key).copied() {
                            self.deferred_unions.push((existing, contrib));
                            created = Some(existing);
                        } else {
                            self.memo.insert(key, Status::Done(contrib));
                            created = Some(contrib);
                            self.process_waiting(key);
                        }
                    }
                    Some(first) => {
                        if first != contrib {
                            self.deferred_unions.push((first, contrib));
                        }
                    }
                },
                Built::Pending(shape, blockers) => {
                    self.waiting.push(WaitingNode { owner: key, shape, blockers });
                }
            }
        }
        match created {
            Some(id) => Ok(Some(id)),
            None => match self.memo.get(&key) {
                Some(Status::Done(id)) => Ok(Some(*id)),
                _ => Ok(None),
            },
        }
    }

    fn child(
        &mut self,
        class: EClassId,
        sigma: Sigma,
        depth: u32,
        blockers: &mut BTreeSet<Key>,
    ) -> Result<ChildRef, SubstError> {
        match self.subst_class(class, sigma, depth)? {
            Some(id) => Ok(ChildRef::Ready(id)),
            None => {
                let key = self.key(class, sigma, depth);
                blockers.insert(key);
                Ok(ChildRef::Blocked(key))
            }
        }
    }

    fn build_node(&mut self, node: &ENode, sigma: Sigma, depth: u32) -> Result<Built, SubstError> {
        match node {
            ENode::Bvar { index, tag } => {
                let action = match sigma {
                    Sigma::Shift { offset, cutoff } => {
                        if *index as i64 - depth as i64 >= cutoff as i64 {
                            let shifted = *index as i64 + offset;
                            if shifted < 0 {
                                return Err(UnderflowError { index: *index, offset }.into());
                            }
                            SigmaAction::Index(shifted as u32)
                        } else {
                            SigmaAction::Index(*index)
                        }
                    }
                    Sigma::Beta { arg } => {
                        if *index > depth {
                            SigmaAction::Index(index - 1)
                        } else if *index < depth {
                            SigmaAction::Index(*index)
                        } else {
                            // Replace with the argument lifted by the depth.
                            let lift = Sigma::Shift { offset: depth as i64, cutoff: 0 };
                            let mut blockers = BTreeSet::new();
                            return Ok(match self.child(arg, lift, 0, &mut blockers)? {
                                ChildRef::Ready(id) => Built::Ready(id),
                                ChildRef::Blocked(key) => {
                                    Built::Pending(PendingShape::Alias(key), blockers)
                                }
                            });
                        }
                    }
                };
                match action {
                    SigmaAction::Index(i) => {
                        Ok(Built::Ready(self.g.add(ENode::Bvar { index: i, tag: tag.clone() })))
                    }
                    SigmaAction::Class(id) => Ok(Built::Ready(id)),
                }
            }
            ENode::Sym(_) | ENode::Lit(_) | ENode::Eps => Ok(Built::Ready(self.g.add(node.clone()))),
            ENode::App(f, a) => {
                let mut blockers = BTreeSet::new();
                let cf = self.child(*f, sigma, depth, &mut blockers)?;
                let ca = self.child(*a, sigma, depth, &mut blockers)?;
                self.assemble(PendingShape::App(cf, ca), blockers)
            }
            ENode::Lam(t, b) => {
                let mut blockers = BTreeSet::new();
                let ct = self.child(*t, sigma, depth, &mut blockers)?;
                let cb = self.child(*b, sigma, depth + 1, &mut blockers)?;
                self.assemble(PendingShape::Lam(ct, cb), blockers)
            }
            ENode::All(t, b) => {
                let mut blockers = BTreeSet::new();
                let ct = self.child(*t, sigma, depth, &mut blockers)?;
                let cb = self.child(*b, sigma, depth + 1, &mut blockers)?;
                self.assemble(PendingShape::All(ct, cb), blockers)
            }
        }
    }

    fn assemble(&mut self, shape: PendingShape, blockers: BTreeSet<Key>) -> Result<Built, SubstError> {
        if blockers.is_empty() {
            Ok(Built::Ready(self.construct(&shape)))
        } else {
            Ok(Built::Pending(shape, blockers))
        }
    }

    fn resolve(&self, child: &ChildRef) -> EClassId {
        match child {
            ChildRef::Ready(id) => *id,
            ChildRef::Blocked(key) => match self.memo.get(key) {
                Some(Status::Done(id)) => *id,
                other => panic!("blocked child resolved before completion: {other:?}"),
            },
        }
    }

    fn construct(&mut self, shape: &PendingShape) -> EClassId {
        match shape {
            PendingShape::App(f, a) => {
                let (f, a) = (self.resolve(f), self.resolve(a));
                self.g.add(ENode::App(f, a))
            }
            PendingShape::Lam(t, b) => {
                let (t, b) = (self.resolve(t), self.resolve(b));
                self.g.add(ENode::Lam(t, b))
            }
            PendingShape::All(t, b) => {
                let (t, b) = (self.resolve(t), self.resolve(b));
                self.g.add(ENode::All(t, b))
            }
            PendingShape::Alias(key) => match self.memo.get(key) {
                Some(Status::Done(id)) => *id,
                other => panic!("alias resolved before completion: {other:?}"),
            },
        }
    }

    /// Reconsider waiting nodes after `finished` completed, constructing
    /// every node whose blockers are all done; cascades to fixpoint.
    /// Returns the classes newly completed by the cascade.
    fn process_waiting(&mut self, finished: Key) -> Vec<EClassId> {
        let mut newly = Vec::new();
        let mut queue = vec![finished];
        while let Some(done_key) = queue.pop() {
            let mut still_waiting = Vec::new();
            let nodes = std::mem::take(&mut self.waiting);
            for mut wn in nodes {
                wn.blockers.remove(&done_key);
                if wn.blockers.is_empty() {
                    let contrib = self.construct(&wn.shape);
                    match self.memo.get(&wn.owner).copied() {
                        Some(Status::Done(existing)) => {
                            if existing != contrib {
                                self.deferred_unions.push((existing, contrib));
                            }
                        }
                        _ => {
                            self.memo.insert(wn.owner, Status::Done(contrib));
                            self.cascade_completions.push((wn.owner, contrib));
                            newly.push(contrib);
                            queue.push(wn.owner);
                        }
                    }
                } else {
                    still_waiting.push(wn);
                }
            }
            self.waiting.extend(still_waiting);
        }
        newly
    }

    fn finish(mut self, root: EClassId) -> EClassId {
        assert!(
            self.waiting.is_empty(),
            "waiting e-nodes left over; the graph violates the cycle-breaking property"
        );
        for (a, b) in std::mem::take(&mut self.deferred_unions) {
            self.g.union(a, b, Justification::SubstInternal);
        }
        // Deferred unions cleared the cross-invocation cache; refill it
        // with this invocation's results under current canonical ids.
        let entries: Vec<(Key, EClassId)> = self
            .memo
            .iter()
            .filter_map(|(&(class, norm), status)| match status {
                Status::Done(id) => Some(((class, norm), *id)),
                Status::InProgress => None,
            })
            .collect();
        for ((class, norm), id) in entries {
            let class = self.g.find(class);
            let norm = match norm {
                NormSigma::Beta { arg, depth } => {
                    NormSigma::Beta { arg: self.g.find(arg), depth }
                }
                shift => shift,
            };
            let id = self.g.find(id);
            self.g.subst_cache.insert((class, norm), id);
        }
        self.g.rebuild();
        self.g.find(root)
    }
}

/// Extend `g` with a class representing `σ'(e)` for every term `e`
/// represented by `class`. Existing equalities are preserved; the graph
/// only grows. Terminates on cyclic classes.
pub fn subst(g: &mut EGraph, class: EClassId, sigma: Sigma) -> Result<EClassId, SubstError> {
    let mut sub = Substituter::new(g);
    let root = sub
        .subst_class(class, sigma, 0)?
        .expect("root class has no finite representative");
    Ok(sub.finish(root))
}

/// η on classes: shift every free variable down past the removed binder.
pub fn eta_class(g: &mut EGraph, class: EClassId) -> Result<EClassId, SubstError> {
    subst(g, class, Sigma::Shift { offset: -1, cutoff: 1 })
}

/// β on classes: substitute the argument for the binder variable of `body`.
pub fn beta_class(g: &mut EGraph, body: EClassId, arg: EClassId) -> Result<EClassId, SubstError> {
    subst(g, body, Sigma::Beta { arg })
}
