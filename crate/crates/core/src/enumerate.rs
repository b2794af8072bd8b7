//! Exhaustive generation and exact counting.
//!
//! Generation is a depth-first search in continuation-passing style. Each
//! node tries, in order, an index (`0` first, then longer successor chains),
//! an abstraction, then an application, and hands the remaining unit budget
//! to a continuation that builds the rest of the term. For the typable
//! classes every choice also unifies the demanded type against the
//! constructor's shape, so untypable partial terms are cut off as soon as
//! they appear. Store snapshots are taken at each choice point and rolled
//! back when the choice is exhausted.

use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::term::{Term, TermClass};
use crate::types::{SimpleType, TyId, TypeStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Index(u32),
    Abs,
    App,
}

/// A term found by the enumerator, viewed in place. Building the owned
/// [`Term`] or [`SimpleType`] is left to the caller so that counting stays
/// allocation free.
pub struct Solution<'a> {
    toks: &'a [Tok],
    store: &'a TypeStore,
    root: Option<TyId>,
}

impl Solution<'_> {
    pub fn term(&self) -> Term {
        fn build(toks: &[Tok], pos: &mut usize) -> Term {
            let tok = toks[*pos];
            *pos += 1;
            match tok {
                Tok::Index(k) => Term::Index(k),
                Tok::Abs => Term::abs(build(toks, pos)),
                Tok::App => {
                    let fun = build(toks, pos);
                    let arg = build(toks, pos);
                    Term::app(fun, arg)
                }
            }
        }
        build(self.toks, &mut 0)
    }

    /// Principal type, for the typable classes.
    pub fn ty(&self) -> Option<SimpleType> {
        self.root.map(|r| self.store.extract(r))
    }
}

type Sink<'s> = dyn FnMut(&Solution<'_>) -> ControlFlow<()> + 's;

// One enclosing binder. Frames form parent-linked lists so a continuation
// can return to the binder scope of the node that created it.
#[derive(Debug, Clone, Copy)]
struct Frame {
    ty: Option<TyId>,
    parent: Option<usize>,
    depth: u32,
}

struct Gen<'s> {
    closed: bool,
    typed: bool,
    nf: bool,
    store: TypeStore,
    frames: Vec<Frame>,
    // innermost enclosing binder
    scope: Option<usize>,
    // types of free indices, nearest first (plain typable classes)
    ambient: Vec<TyId>,
    toks: Vec<Tok>,
    root: Option<TyId>,
    sink: &'s mut Sink<'s>,
    stopped: bool,
}

impl<'s> Gen<'s> {
    fn depth(&self) -> u32 {
        self.scope.map_or(0, |f| self.frames[f].depth)
    }

    fn binder(&mut self, k: u32) -> TyId {
        let mut frame = self.scope;
        let mut k = k as usize;
        while let Some(f) = frame {
            if k == 0 {
                return self.frames[f].ty.expect("typed frame");
            }
            k -= 1;
            frame = self.frames[f].parent;
        }
        let j = k;
        while self.ambient.len() <= j {
            let v = self.store.fresh_var();
            self.ambient.push(v);
        }
        self.ambient[j]
    }

    /// Generate a term of type `ty` using at most `budget` units (exactly
    /// `budget` when `exact`), then call `cont` with what is left. With
    /// `neutral` set the term may not be an abstraction.
    fn term(
        &mut self,
        ty: Option<TyId>,
        budget: u32,
        exact: bool,
        neutral: bool,
        cont: &mut dyn FnMut(&mut Gen<'s>, u32),
    ) {
        self.indices(ty, budget, exact, cont);
        if !neutral && budget >= 1 {
            self.abstraction(ty, budget, exact, cont);
        }
        if budget >= 2 {
            self.application(ty, budget, exact, cont);
        }
    }

    fn indices(
        &mut self,
        ty: Option<TyId>,
        budget: u32,
        exact: bool,
        cont: &mut dyn FnMut(&mut Gen<'s>, u32),
    ) {
        let first = if exact { budget } else { 0 };
        for k in first..=budget {
            if self.stopped || (self.closed && k >= self.depth()) {
                return;
            }
            match ty {
                None => {
                    self.toks.push(Tok::Index(k));
                    cont(self, budget - k);
                    self.toks.pop();
                }
                Some(ty) => {
                    let snap = self.store.snapshot();
                    let ambient = self.ambient.len();
                    let b = self.binder(k);
                    if self.store.unify(ty, b) {
                        self.toks.push(Tok::Index(k));
                        cont(self, budget - k);
                        self.toks.pop();
                    }
                    self.ambient.truncate(ambient);
                    self.store.rollback(snap);
                }
            }
        }
    }

    fn abstraction(
        &mut self,
        ty: Option<TyId>,
        budget: u32,
        exact: bool,
        cont: &mut dyn FnMut(&mut Gen<'s>, u32),
    ) {
        if self.stopped {
            return;
        }
        let snap = self.store.snapshot();
        let (x, body_ty) = match ty {
            None => (None, None),
            Some(ty) => {
                let x = self.store.fresh_var();
                let xs = self.store.fresh_var();
                let arrow = self.store.arrow(x, xs);
                // binds against fresh variables only, cannot fail
                let ok = self.store.unify(ty, arrow);
                debug_assert!(ok);
                (Some(x), Some(xs))
            }
        };
        let outer = self.scope;
        let mark = self.frames.len();
        self.frames.push(Frame {
            ty: x,
            parent: outer,
            depth: self.depth() + 1,
        });
        self.scope = Some(mark);
        self.toks.push(Tok::Abs);
        self.term(body_ty, budget - 1, exact, false, cont);
        self.toks.pop();
        self.scope = outer;
        self.frames.truncate(mark);
        self.store.rollback(snap);
    }

    fn application(
        &mut self,
        ty: Option<TyId>,
        budget: u32,
        exact: bool,
        cont: &mut dyn FnMut(&mut Gen<'s>, u32),
    ) {
        if self.stopped {
            return;
        }
        let snap = self.store.snapshot();
        let (fun_ty, arg_ty) = match ty {
            None => (None, None),
            Some(ty) => {
                let x = self.store.fresh_var();
                (Some(self.store.arrow(x, ty)), Some(x))
            }
        };
        self.toks.push(Tok::App);
        let neutral = self.nf;
        let scope = self.scope;
        self.term(
            fun_ty,
            budget - 2,
            false,
            neutral,
            &mut |g: &mut Gen<'s>, rest| {
                // the argument lives in the application's scope, not the
                // function's
                let inner = std::mem::replace(&mut g.scope, scope);
                g.term(arg_ty, rest, exact, false, cont);
                g.scope = inner;
            },
        );
        self.toks.pop();
        self.store.rollback(snap);
    }
}

/// Visit every term of `class` with the given unit size, in generation
/// order. Returning [`ControlFlow::Break`] from `visit` stops the search.
pub fn for_each_term<F>(class: TermClass, units: u32, mut visit: F)
where
    F: FnMut(&Solution<'_>) -> ControlFlow<()>,
{
    let sink: &mut Sink<'_> = &mut visit;
    let mut g = Gen {
        closed: class.is_closed(),
        typed: class.is_typable(),
        nf: class.is_normal_form(),
        store: TypeStore::with_capacity(64),
        frames: Vec::with_capacity(units as usize + 1),
        scope: None,
        ambient: Vec::new(),
        toks: Vec::with_capacity(units as usize + 1),
        root: None,
        sink,
        stopped: false,
    };
    let root = g.typed.then(|| g.store.fresh_var());
    g.root = root;
    g.term(root, units, true, false, &mut |g: &mut Gen<'_>, rest| {
        debug_assert_eq!(rest, 0);
        let sol = Solution {
            toks: &g.toks,
            store: &g.store,
            root: g.root,
        };
        if (g.sink)(&sol).is_break() {
            g.stopped = true;
        }
    });
}

/// All terms of `class` with the given unit size, in generation order,
/// paired with their principal types for the typable classes.
pub fn enumerate(class: TermClass, units: u32) -> Vec<(Term, Option<SimpleType>)> {
    let mut out = Vec::new();
    for_each_term(class, units, |s| {
        out.push((s.term(), s.ty()));
        ControlFlow::Continue(())
    });
    out
}

/// Number of terms of `class` with the given natural size, by running the
/// generator.
pub fn count_by_enumeration(class: TermClass, natural_size: u32) -> u64 {
    let Some(units) = natural_size.checked_sub(1) else {
        return 0;
    };
    let mut n = 0u64;
    for_each_term(class, units, |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

/// Number of terms of `class` with the given natural size. The untyped
/// classes use [`count_dp`]; the typable ones have no size-local recurrence
/// and are counted by generation.
pub fn count(class: TermClass, natural_size: u32) -> BigUint {
    match count_dp(class, natural_size) {
        Ok(n) => n,
        Err(_) => BigUint::from(count_by_enumeration(class, natural_size)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no counting recurrence for class `{0}`")]
pub struct NoRecurrence(pub TermClass);

/// Counts for the untyped classes by dynamic programming over the unit
/// budget (and binder depth, for closed terms).
pub fn count_dp(class: TermClass, natural_size: u32) -> Result<BigUint, NoRecurrence> {
    let Some(units) = natural_size.checked_sub(1) else {
        return match class {
            TermClass::Plain | TermClass::Closed | TermClass::PlainNF => Ok(BigUint::zero()),
            other => Err(NoRecurrence(other)),
        };
    };
    let units = units as usize;
    match class {
        TermClass::Plain => Ok(plain_counts(units).swap_remove(units)),
        TermClass::PlainNF => Ok(normal_form_counts(units).0.swap_remove(units)),
        TermClass::Closed => Ok(closed_count(units)),
        other => Err(NoRecurrence(other)),
    }
}

/// `counts[u]` = plain terms of unit size `u`, for `u` in `0..=max`.
pub fn plain_counts(max: usize) -> Vec<BigUint> {
    let mut p: Vec<BigUint> = Vec::with_capacity(max + 1);
    for u in 0..=max {
        // the index of value u
        let mut n = BigUint::from(1u32);
        if u >= 1 {
            n += &p[u - 1];
        }
        if u >= 2 {
            for i in 0..=u - 2 {
                n += &p[i] * &p[u - 2 - i];
            }
        }
        p.push(n);
    }
    p
}

/// Normal forms and neutral terms (`(nf, neutral)`) by unit size, `0..=max`.
pub fn normal_form_counts(max: usize) -> (Vec<BigUint>, Vec<BigUint>) {
    let mut nf: Vec<BigUint> = Vec::with_capacity(max + 1);
    let mut neutral: Vec<BigUint> = Vec::with_capacity(max + 1);
    for u in 0..=max {
        let mut m = BigUint::from(1u32);
        if u >= 2 {
            for i in 0..=u - 2 {
                m += &neutral[i] * &nf[u - 2 - i];
            }
        }
        let mut n = m.clone();
        if u >= 1 {
            n += &nf[u - 1];
        }
        neutral.push(m);
        nf.push(n);
    }
    (nf, neutral)
}

fn closed_count(units: usize) -> BigUint {
    // table[u][d]: terms of unit size u whose free indices are all < d.
    // Depth never usefully exceeds the unit budget.
    let dmax = units + 1;
    let mut table: Vec<Vec<BigUint>> = Vec::with_capacity(units + 1);
    for u in 0..=units {
        let mut row = Vec::with_capacity(dmax + 1);
        for d in 0..=dmax {
            let mut n = if u < d {
                BigUint::from(1u32)
            } else {
                BigUint::zero()
            };
            if u >= 1 {
                n += &table[u - 1][(d + 1).min(dmax)];
            }
            if u >= 2 {
                for i in 0..=u - 2 {
                    n += &table[i][d] * &table[u - 2 - i][d];
                }
            }
            row.push(n);
        }
        table.push(row);
    }
    table[units][0].clone()
}

/// One row of the density comparison between simply-typed terms and
/// simply-typed normal forms.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub size: u32,
    /// closed simply-typed terms
    pub typed: BigUint,
    /// plain terms per closed simply-typed term
    pub plain_ratio: Option<f64>,
    /// closed simply-typed normal forms
    pub typed_nf: BigUint,
    /// plain normal forms per closed simply-typed normal form
    pub nf_ratio: Option<f64>,
    /// `plain_ratio / nf_ratio`
    pub ratio: Option<f64>,
}

fn ratio(num: &BigUint, den: &BigUint) -> Option<f64> {
    if den.is_zero() {
        None
    } else {
        Some(num.to_f64()? / den.to_f64()?)
    }
}

pub fn density_row(size: u32) -> DensityRow {
    let typed = count(TermClass::ClosedTypable, size);
    let typed_nf = count(TermClass::ClosedTypableNF, size);
    let plain_ratio = ratio(&count(TermClass::Plain, size), &typed);
    let nf_ratio = ratio(&count(TermClass::PlainNF, size), &typed_nf);
    let ratio = match (plain_ratio, nf_ratio) {
        (Some(b), Some(d)) if d != 0.0 => Some(b / d),
        _ => None,
    };
    DensityRow {
        size,
        typed,
        plain_ratio,
        typed_nf,
        nf_ratio,
        ratio,
    }
}

/// Rows for natural sizes `1..=upto`.
pub fn density_table(upto: u32) -> Vec<DensityRow> {
    (1..=upto).map(density_row).collect()
}

/// Three decimals, truncated toward zero (`5.6666…` prints as `5.666`).
pub fn format_ratio(r: Option<f64>) -> String {
    match r {
        Some(x) => format!("{:.3}", (x * 1000.0 + 1e-9).trunc() / 1000.0),
        None => "NA".to_string(),
    }
}
