//! Simple types, occurs-check unification and type inference.
//!
//! Types under construction live in a [`TypeStore`]: an arena of nodes where
//! a variable node is either unbound or points at another node. Bindings are
//! logged on a trail so the store can be rolled back to any [`Snapshot`],
//! which is what lets the enumerator backtrack and the sampler abort.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::term::Term;

/// Handle of a node in a [`TypeStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TyId(u32);

impl TyId {
    pub fn raw(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Var(Option<TyId>),
    Arrow(TyId, TyId),
}

/// Store state that [`TypeStore::rollback`] can return to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Snapshot {
    nodes: usize,
    trail: usize,
}

/// Binding environment for type variables with trail-based undo.
///
/// Rolling back to a snapshot discards every node allocated after it, so
/// handles issued after the snapshot must not be used afterwards. Handles
/// that are still live are never reissued.
#[derive(Debug, Clone, Default)]
pub struct TypeStore {
    nodes: Vec<Node>,
    trail: Vec<TyId>,
}

impl TypeStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        TypeStore {
            nodes: Vec::with_capacity(n),
            trail: Vec::with_capacity(n),
        }
    }

    /// Drop every node and binding.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.trail.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of variables currently bound.
    pub fn bound_count(&self) -> usize {
        self.trail.len()
    }

    pub fn fresh_var(&mut self) -> TyId {
        self.push(Node::Var(None))
    }

    pub fn arrow(&mut self, from: TyId, to: TyId) -> TyId {
        self.push(Node::Arrow(from, to))
    }

    fn push(&mut self, node: Node) -> TyId {
        let id = u32::try_from(self.nodes.len()).expect("type store exhausted 32-bit handles");
        self.nodes.push(node);
        TyId(id)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            nodes: self.nodes.len(),
            trail: self.trail.len(),
        }
    }

    pub fn rollback(&mut self, snap: Snapshot) {
        while self.trail.len() > snap.trail {
            let v = self.trail.pop().unwrap();
            self.nodes[v.0 as usize] = Node::Var(None);
        }
        self.nodes.truncate(snap.nodes);
    }

    /// Follow variable bindings to a representative: an unbound variable or
    /// an arrow.
    pub fn resolve(&self, mut t: TyId) -> TyId {
        while let Node::Var(Some(next)) = self.nodes[t.0 as usize] {
            t = next;
        }
        t
    }

    pub fn is_unbound_var(&self, t: TyId) -> bool {
        matches!(self.nodes[self.resolve(t).0 as usize], Node::Var(None))
    }

    fn occurs(&self, v: TyId, t: TyId) -> bool {
        let t = self.resolve(t);
        if t == v {
            return true;
        }
        match self.nodes[t.0 as usize] {
            Node::Var(_) => false,
            Node::Arrow(a, b) => self.occurs(v, a) || self.occurs(v, b),
        }
    }

    fn bind(&mut self, v: TyId, t: TyId) {
        self.nodes[v.0 as usize] = Node::Var(Some(t));
        self.trail.push(v);
    }

    /// Unify with occurs check. On failure the store is left exactly as it
    /// was before the call.
    pub fn unify(&mut self, a: TyId, b: TyId) -> bool {
        let snap = self.snapshot();
        if self.unify_inner(a, b) {
            true
        } else {
            self.rollback(snap);
            false
        }
    }

    fn unify_inner(&mut self, a: TyId, b: TyId) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        if a == b {
            return true;
        }
        match (self.nodes[a.0 as usize], self.nodes[b.0 as usize]) {
            (Node::Var(_), _) => {
                if self.occurs(a, b) {
                    return false;
                }
                self.bind(a, b);
                true
            }
            (_, Node::Var(_)) => {
                if self.occurs(b, a) {
                    return false;
                }
                self.bind(b, a);
                true
            }
            (Node::Arrow(a1, a2), Node::Arrow(b1, b2)) => {
                self.unify_inner(a1, b1) && self.unify_inner(a2, b2)
            }
        }
    }

    /// Fully resolved copy of `t`, detached from the store.
    pub fn extract(&self, t: TyId) -> SimpleType {
        let t = self.resolve(t);
        match self.nodes[t.0 as usize] {
            Node::Var(_) => SimpleType::Var(t.0),
            Node::Arrow(a, b) => SimpleType::arrow(self.extract(a), self.extract(b)),
        }
    }

    pub fn display(&self, t: TyId) -> String {
        self.extract(t).to_string()
    }

    /// Number of arrow/variable steps needed to fully resolve `t`; used to
    /// check that resolution always terminates.
    #[cfg(test)]
    fn resolve_steps(&self, t: TyId) -> usize {
        let mut steps = 0;
        let mut t = t;
        while let Node::Var(Some(next)) = self.nodes[t.0 as usize] {
            t = next;
            steps += 1;
        }
        steps
    }
}

/// A resolved simple type. Variables carry the store handle they were
/// resolved to; only [`fmt::Display`] renames them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleType {
    Var(u32),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(from: SimpleType, to: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(from), Box::new(to))
    }

    /// Canonical copy with variables renumbered 0, 1, 2, … in order of first
    /// occurrence, left to right.
    pub fn canonical(&self) -> SimpleType {
        fn go(t: &SimpleType, names: &mut HashMap<u32, u32>) -> SimpleType {
            match t {
                SimpleType::Var(v) => {
                    let next = names.len() as u32;
                    SimpleType::Var(*names.entry(*v).or_insert(next))
                }
                SimpleType::Arrow(a, b) => {
                    let a = go(a, names);
                    let b = go(b, names);
                    SimpleType::arrow(a, b)
                }
            }
        }
        go(self, &mut HashMap::new())
    }
}

/// Variable name for the `i`-th distinct variable: `A`..`Z`, then `A1`..`Z1`, …
pub fn var_name(i: u32) -> String {
    let letter = char::from(b'A' + (i % 26) as u8);
    match i / 26 {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

/// Renders with variables lettered by first occurrence and `->` right
/// associative. A top-level arrow is wrapped in parentheses, so the output
/// reads `(A->B->A)` for an arrow and `A` for a bare variable.
impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &SimpleType, out: &mut String) {
            match t {
                SimpleType::Var(v) => out.push_str(&var_name(*v)),
                SimpleType::Arrow(a, b) => {
                    if matches!(**a, SimpleType::Arrow(..)) {
                        out.push('(');
                        go(a, out);
                        out.push(')');
                    } else {
                        go(a, out);
                    }
                    out.push_str("->");
                    go(b, out);
                }
            }
        }
        let canon = self.canonical();
        let mut out = String::new();
        go(&canon, &mut out);
        if matches!(canon, SimpleType::Arrow(..)) {
            write!(f, "({out})")
        } else {
            f.write_str(&out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("index {0} is free")]
    FreeIndex(u32),
    #[error("term is not simply typable")]
    Untypable,
}

/// Principal type of a closed term.
pub fn infer_type(t: &Term) -> Result<SimpleType, InferError> {
    infer_with(t, false)
}

/// Principal type of a possibly open term. Each free index refers to an
/// implicit outer binder with its own type variable, shared by every
/// occurrence of that index.
pub fn infer_type_open(t: &Term) -> Result<SimpleType, InferError> {
    infer_with(t, true)
}

fn infer_with(t: &Term, open: bool) -> Result<SimpleType, InferError> {
    struct Infer {
        store: TypeStore,
        env: Vec<TyId>,
        ambient: Vec<TyId>,
        open: bool,
    }

    impl Infer {
        fn binder(&mut self, k: u32) -> Result<TyId, InferError> {
            let k = k as usize;
            if k < self.env.len() {
                return Ok(self.env[self.env.len() - 1 - k]);
            }
            if !self.open {
                return Err(InferError::FreeIndex(k as u32));
            }
            let j = k - self.env.len();
            while self.ambient.len() <= j {
                let v = self.store.fresh_var();
                self.ambient.push(v);
            }
            Ok(self.ambient[j])
        }

        fn go(&mut self, t: &Term) -> Result<TyId, InferError> {
            match t {
                Term::Index(k) => self.binder(*k),
                Term::Abs(body) => {
                    let x = self.store.fresh_var();
                    self.env.push(x);
                    let b = self.go(body);
                    self.env.pop();
                    Ok(self.store.arrow(x, b?))
                }
                Term::App(fun, arg) => {
                    let f = self.go(fun)?;
                    let a = self.go(arg)?;
                    let r = self.store.fresh_var();
                    let want = self.store.arrow(a, r);
                    if self.store.unify(f, want) {
                        Ok(r)
                    } else {
                        Err(InferError::Untypable)
                    }
                }
            }
        }
    }

    let mut cx = Infer {
        store: TypeStore::new(),
        env: Vec::new(),
        ambient: Vec::new(),
        open,
    };
    let ty = cx.go(t)?;
    Ok(cx.store.extract(ty))
}
