//! Boltzmann samplers with anticipated rejection for closed simply-typed
//! terms and closed simply-typed normal forms.
//!
//! An attempt grows a term top-down. Every decision consumes one uniform
//! draw and compares it against cumulative thresholds. Type inference runs
//! alongside construction, and the attempt is abandoned the moment the
//! partial term is known to be unusable: an index with no binder above it,
//! an occurs-check failure, or a unit counter about to pass `max_units`.
//! Attempts that complete below `min_units` are rejected as well. Nothing is
//! retried inside an attempt; [`Sampler::sample`] simply starts over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{self, Family, Thresholds};
use crate::term::Term;
use crate::types::{SimpleType, TyId, TypeStore};

/// Recursion depth of an attempt is bounded by its unit budget.
pub const MAX_UNITS_LIMIT: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerClass {
    /// closed simply-typed terms
    Typed,
    /// closed simply-typed normal forms
    TypedNF,
}

impl SamplerClass {
    pub fn name(self) -> &'static str {
        match self {
            SamplerClass::Typed => "typed",
            SamplerClass::TypedNF => "typed-nf",
        }
    }

    pub fn family(self) -> Family {
        match self {
            SamplerClass::Typed => Family::Plain,
            SamplerClass::TypedNF => Family::NormalForm,
        }
    }
}

impl std::str::FromStr for SamplerClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "typed" => Ok(SamplerClass::Typed),
            "typed-nf" => Ok(SamplerClass::TypedNF),
            other => Err(format!("unknown sampler class `{other}`")),
        }
    }
}

/// How the normal-form sampler walks its grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NfMode {
    /// Separate normal-form and neutral states; an application's function
    /// position is always neutral, so no redex can be built.
    #[default]
    GrammarFaithful,
    /// One state using the lambda and index thresholds cumulatively for
    /// every node, application children included, then reject any completed
    /// term that contains a redex.
    PaperFlattened,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub class: SamplerClass,
    /// accept when `min_units <= unit size <= max_units`
    pub min_units: u32,
    pub max_units: u32,
    /// attempts before giving up
    pub max_steps: u64,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub nf_mode: NfMode,
}

/// Calibration target (natural size) behind the default thresholds.
pub const DEFAULT_TARGET_SIZE: f64 = 120.0;

impl SamplerConfig {
    /// Defaults: units in `[120, 150]`, `10^7` attempts, thresholds tuned
    /// for expected natural size 120.
    pub fn typed(seed: u64) -> Self {
        SamplerConfig {
            class: SamplerClass::Typed,
            min_units: 120,
            max_units: 150,
            max_steps: 10_000_000,
            thresholds: default_thresholds(Family::Plain),
            seed,
            nf_mode: NfMode::GrammarFaithful,
        }
    }

    /// Defaults: units in `[60, 80]`, `10^7` attempts, thresholds tuned for
    /// expected natural size 120.
    pub fn typed_nf(seed: u64) -> Self {
        SamplerConfig {
            class: SamplerClass::TypedNF,
            min_units: 60,
            max_units: 80,
            max_steps: 10_000_000,
            thresholds: default_thresholds(Family::NormalForm),
            seed,
            nf_mode: NfMode::GrammarFaithful,
        }
    }

    pub fn for_class(class: SamplerClass, seed: u64) -> Self {
        match class {
            SamplerClass::Typed => Self::typed(seed),
            SamplerClass::TypedNF => Self::typed_nf(seed),
        }
    }

    pub fn with_units(mut self, min_units: u32, max_units: u32) -> Self {
        self.min_units = min_units;
        self.max_units = max_units;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        let bad = |m: String| Err(SampleError::InvalidConfig(m));
        if self.min_units > self.max_units {
            return bad(format!(
                "min units {} exceed max units {}",
                self.min_units, self.max_units
            ));
        }
        if self.max_units > MAX_UNITS_LIMIT {
            return bad(format!("max units must not exceed {MAX_UNITS_LIMIT}"));
        }
        if self.max_steps == 0 {
            return bad("max steps must be positive".into());
        }
        if self.thresholds.family() != self.class.family() {
            return bad(format!(
                "{} thresholds cannot drive the {} sampler",
                self.thresholds.family(),
                self.class.name()
            ));
        }
        if !self.thresholds.is_valid() {
            return bad("thresholds must lie in (0,1) and increase".into());
        }
        Ok(())
    }
}

/// Thresholds tuned for [`DEFAULT_TARGET_SIZE`].
pub fn default_thresholds(family: Family) -> Thresholds {
    analytic::solve_for_target(family, DEFAULT_TARGET_SIZE, analytic::DEFAULT_TOLERANCE)
        .expect("default calibration target is reachable")
        .thresholds
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("no term found within {attempts} attempts")]
    Exhausted { attempts: u64 },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleResult {
    #[serde(serialize_with = "as_text")]
    pub term: Term,
    #[serde(rename = "type")]
    pub ty: String,
    pub natural_size: u64,
    pub steps: u64,
    pub seed: u64,
}

fn as_text<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

/// Uniform reals in `[0, 1)`.
pub trait RandomSource {
    fn draw(&mut self) -> f64;
}

/// ChaCha8 stream seeded from a 64-bit value; draws are the generator's
/// standard 53-bit `f64` in `[0, 1)`. Identical seeds give identical draw
/// sequences on every platform.
#[derive(Debug, Clone)]
pub struct SeededSource(ChaCha8Rng);

impl SeededSource {
    pub fn new(seed: u64) -> Self {
        SeededSource(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl RandomSource for SeededSource {
    fn draw(&mut self) -> f64 {
        self.0.gen::<f64>()
    }
}

/// Replays a fixed list of draws, then repeats the last one forever.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    draws: Vec<f64>,
    pos: usize,
}

impl ScriptedSource {
    pub fn new(draws: impl Into<Vec<f64>>) -> Self {
        let draws = draws.into();
        assert!(!draws.is_empty());
        ScriptedSource { draws, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl RandomSource for ScriptedSource {
    fn draw(&mut self) -> f64 {
        let r = self.draws[self.pos.min(self.draws.len() - 1)];
        self.pos += 1;
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Index(u32),
    Abs,
    App,
}

/// Reason an attempt was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abort {
    /// an index was requested with no binder left above it
    Unbound,
    /// occurs-check unification failed
    Untypable,
    /// the unit counter would pass `max_units`
    TooLarge,
    /// completed below `min_units`
    TooSmall,
    /// completed with a redex (paper-flattened normal-form mode)
    Redex,
}

/// A successful attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub term: Term,
    pub ty: SimpleType,
    pub units: u32,
}

/// One sampler instance: configuration, draw source and scratch state.
/// Each attempt starts from an empty store.
#[derive(Debug, Clone)]
pub struct Sampler<R = SeededSource> {
    config: SamplerConfig,
    rng: R,
    store: TypeStore,
    env: Vec<TyId>,
    toks: Vec<Tok>,
    units: u32,
}

impl Sampler<SeededSource> {
    pub fn new(config: SamplerConfig) -> Result<Self, SampleError> {
        let rng = SeededSource::new(config.seed);
        Self::with_source(config, rng)
    }
}

impl<R: RandomSource> Sampler<R> {
    pub fn with_source(config: SamplerConfig, rng: R) -> Result<Self, SampleError> {
        config.validate()?;
        Ok(Sampler {
            config,
            rng,
            store: TypeStore::with_capacity(1024),
            env: Vec::with_capacity(256),
            toks: Vec::with_capacity(256),
            units: 0,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn source(&self) -> &R {
        &self.rng
    }

    /// Run attempts until one succeeds or `max_steps` are spent.
    pub fn sample(&mut self) -> Result<SampleResult, SampleError> {
        self.sample_while(|| true)
    }

    /// Like [`Sampler::sample`], but checks `keep_going` before every
    /// attempt and stops early once it returns false.
    pub fn sample_while(
        &mut self,
        mut keep_going: impl FnMut() -> bool,
    ) -> Result<SampleResult, SampleError> {
        let mut steps = 0;
        while steps < self.config.max_steps && keep_going() {
            steps += 1;
            if let Ok(a) = self.attempt() {
                return Ok(SampleResult {
                    ty: a.ty.to_string(),
                    natural_size: u64::from(a.units) + 1,
                    term: a.term,
                    steps,
                    seed: self.config.seed,
                });
            }
        }
        Err(SampleError::Exhausted { attempts: steps })
    }

    /// One attempt from scratch.
    pub fn attempt(&mut self) -> Result<Attempt, Abort> {
        self.store.clear();
        self.env.clear();
        self.toks.clear();
        self.units = 0;
        let root = self.store.fresh_var();
        match (self.config.class, self.config.thresholds) {
            (
                SamplerClass::Typed,
                Thresholds::Plain {
                    index,
                    lambda,
                    leaf,
                },
            ) => self.typed(root, index, lambda, leaf)?,
            (
                SamplerClass::TypedNF,
                Thresholds::NormalForm {
                    lambda,
                    index,
                    leaf,
                },
            ) => match self.config.nf_mode {
                NfMode::GrammarFaithful => self.normal_form(root, lambda, index, leaf)?,
                NfMode::PaperFlattened => {
                    self.flattened(root, lambda, index, leaf)?;
                    if self.has_redex() {
                        return Err(Abort::Redex);
                    }
                }
            },
            _ => unreachable!("validated config pairs class and thresholds"),
        }
        if self.units < self.config.min_units {
            return Err(Abort::TooSmall);
        }
        Ok(Attempt {
            term: self.built_term(),
            ty: self.store.extract(root),
            units: self.units,
        })
    }

    /// Claim one unit, unless that would pass `max_units`.
    fn next_unit(&mut self) -> Result<(), Abort> {
        if self.units < self.config.max_units {
            self.units += 1;
            Ok(())
        } else {
            Err(Abort::TooLarge)
        }
    }

    fn unify(&mut self, a: TyId, b: TyId) -> Result<(), Abort> {
        if self.store.unify(a, b) {
            Ok(())
        } else {
            Err(Abort::Untypable)
        }
    }

    fn abstraction(&mut self, ty: TyId) -> Result<TyId, Abort> {
        self.next_unit()?;
        let x = self.store.fresh_var();
        let xs = self.store.fresh_var();
        let arrow = self.store.arrow(x, xs);
        self.unify(ty, arrow)?;
        self.env.push(x);
        self.toks.push(Tok::Abs);
        Ok(xs)
    }

    /// Single-state sampler: `r < index` index, `r < lambda` abstraction,
    /// otherwise application.
    fn typed(&mut self, ty: TyId, index: f64, lambda: f64, leaf: f64) -> Result<(), Abort> {
        let r = self.rng.draw();
        if r < index {
            self.pick_index(ty, leaf)
        } else if r < lambda {
            let body = self.abstraction(ty)?;
            self.typed(body, index, lambda, leaf)?;
            self.env.pop();
            Ok(())
        } else {
            self.toks.push(Tok::App);
            self.next_unit()?;
            let x = self.store.fresh_var();
            let fun = self.store.arrow(x, ty);
            self.typed(fun, index, lambda, leaf)?;
            self.next_unit()?;
            self.typed(x, index, lambda, leaf)
        }
    }

    /// Single-state normal-form sampler: `r < lambda` abstraction,
    /// `r < index` index, otherwise application.
    fn flattened(&mut self, ty: TyId, lambda: f64, index: f64, leaf: f64) -> Result<(), Abort> {
        let r = self.rng.draw();
        if r < lambda {
            let body = self.abstraction(ty)?;
            self.flattened(body, lambda, index, leaf)?;
            self.env.pop();
            Ok(())
        } else if r < index {
            self.pick_index(ty, leaf)
        } else {
            self.toks.push(Tok::App);
            self.next_unit()?;
            let x = self.store.fresh_var();
            let fun = self.store.arrow(x, ty);
            self.flattened(fun, lambda, index, leaf)?;
            self.next_unit()?;
            self.flattened(x, lambda, index, leaf)
        }
    }

    /// Normal-form state: abstraction with probability `lambda`, else a
    /// neutral term.
    fn normal_form(&mut self, ty: TyId, lambda: f64, index: f64, leaf: f64) -> Result<(), Abort> {
        let r = self.rng.draw();
        if r < lambda {
            let body = self.abstraction(ty)?;
            self.normal_form(body, lambda, index, leaf)?;
            self.env.pop();
            Ok(())
        } else {
            self.neutral(ty, lambda, index, leaf)
        }
    }

    /// Neutral state: index with probability `index`, else an application
    /// of a neutral term to a normal form.
    fn neutral(&mut self, ty: TyId, lambda: f64, index: f64, leaf: f64) -> Result<(), Abort> {
        let r = self.rng.draw();
        if r < index {
            self.pick_index(ty, leaf)
        } else {
            let at = self.toks.len();
            self.toks.push(Tok::App);
            self.next_unit()?;
            let x = self.store.fresh_var();
            let fun = self.store.arrow(x, ty);
            self.neutral(fun, lambda, index, leaf)?;
            debug_assert_ne!(self.toks[at + 1], Tok::Abs);
            self.next_unit()?;
            self.normal_form(x, lambda, index, leaf)
        }
    }

    /// Walk outward through the binders: stop at the current one with
    /// probability `leaf` and unify its type with `ty`, otherwise spend a
    /// unit on a successor and move one binder out.
    fn pick_index(&mut self, ty: TyId, leaf: f64) -> Result<(), Abort> {
        let mut k = 0usize;
        loop {
            let r = self.rng.draw();
            if k >= self.env.len() {
                return Err(Abort::Unbound);
            }
            if r < leaf {
                let binder = self.env[self.env.len() - 1 - k];
                self.unify(ty, binder)?;
                self.toks.push(Tok::Index(k as u32));
                return Ok(());
            }
            self.next_unit()?;
            k += 1;
        }
    }

    fn has_redex(&self) -> bool {
        self.toks
            .windows(2)
            .any(|w| w[0] == Tok::App && w[1] == Tok::Abs)
    }

    fn built_term(&self) -> Term {
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
        build(&self.toks, &mut 0)
    }

    /// Constructors emitted by the last attempt, in preorder (including
    /// partial output of an aborted attempt). An `App` directly followed by
    /// an `Abs` is a redex.
    pub fn partial_shape(&self) -> impl Iterator<Item = char> + '_ {
        self.toks.iter().map(|t| match t {
            Tok::Index(_) => 'i',
            Tok::Abs => 'l',
            Tok::App => 'a',
        })
    }
}

/// Sample with a fresh [`SeededSource`] seeded from the config.
pub fn sample(config: &SamplerConfig) -> Result<SampleResult, SampleError> {
    Sampler::new(config.clone())?.sample()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::infer_type;

    fn scripted(class: SamplerClass, draws: &[f64]) -> Sampler<ScriptedSource> {
        let config = SamplerConfig::for_class(class, 0).with_units(0, 10);
        Sampler::with_source(config, ScriptedSource::new(draws.to_vec())).unwrap()
    }

    #[test]
    fn default_thresholds_match_calibration() {
        match default_thresholds(Family::Plain) {
            Thresholds::Plain {
                index,
                lambda,
                leaf,
            } => {
                assert!((index - 0.35700035696434995).abs() < 1e-12);
                assert!((lambda - 0.6525813160382378).abs() < 1e-12);
                assert!((leaf - 0.7044190409261122).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scripted_identity() {
        // abstraction, index, leaf
        let mut s = scripted(SamplerClass::Typed, &[0.5, 0.1, 0.1]);
        let a = s.attempt().unwrap();
        assert_eq!(a.term.to_string(), "l(0)");
        assert_eq!(a.ty.to_string(), "(A->A)");
        assert_eq!(a.units, 1);
        assert_eq!(s.source().consumed(), 3);
    }

    #[test]
    fn index_without_binder_aborts() {
        let mut s = scripted(SamplerClass::Typed, &[0.1, 0.1]);
        assert_eq!(s.attempt().unwrap_err(), Abort::Unbound);
        // successor chain running off the end of the environment
        let mut s = scripted(SamplerClass::Typed, &[0.5, 0.1, 0.9, 0.1]);
        assert_eq!(s.attempt().unwrap_err(), Abort::Unbound);
    }

    #[test]
    fn self_application_fails_occurs_check() {
        // l(a(0,0)): abstraction, application, index+leaf, index+leaf
        let mut s = scripted(SamplerClass::Typed, &[0.5, 0.9, 0.1, 0.1, 0.1, 0.1]);
        assert_eq!(s.attempt().unwrap_err(), Abort::Untypable);
        assert_eq!(s.source().consumed(), 6);
    }

    #[test]
    fn pick_index_walks_binders() {
        // l(l(s(0))): two abstractions, index, skip one binder, leaf
        let mut s = scripted(SamplerClass::Typed, &[0.5, 0.5, 0.1, 0.9, 0.1]);
        let a = s.attempt().unwrap();
        assert_eq!(a.term.to_string(), "l(l(s(0)))");
        assert_eq!(a.ty.to_string(), "(A->B->A)");
        assert_eq!(a.units, 3);
    }

    #[test]
    fn size_bounds_abort() {
        let config = SamplerConfig::typed(0).with_units(0, 1);
        let mut s = Sampler::with_source(config, ScriptedSource::new(vec![0.5])).unwrap();
        assert_eq!(s.attempt().unwrap_err(), Abort::TooLarge);
        let config = SamplerConfig::typed(0).with_units(5, 10);
        let mut s = Sampler::with_source(config, ScriptedSource::new(vec![0.5, 0.1, 0.1])).unwrap();
        assert_eq!(s.attempt().unwrap_err(), Abort::TooSmall);
    }

    #[test]
    fn nf_states() {
        // normal-form state: 0.2 < x picks abstraction; then 0.5 >= x enters
        // the neutral state, whose draw 0.1 picks an index, leaf 0.1
        let mut s = scripted(SamplerClass::TypedNF, &[0.2, 0.5, 0.1, 0.1]);
        let a = s.attempt().unwrap();
        assert_eq!(a.term.to_string(), "l(0)");
        // neutral application: function in neutral state cannot be an
        // abstraction even when the draw would pick one in the other state
        let mut s = scripted(
            SamplerClass::TypedNF,
            &[0.2, 0.5, 0.9, 0.1, 0.1, 0.2, 0.5, 0.1, 0.1],
        );
        let a = s.attempt().unwrap();
        assert_eq!(a.term.to_string(), "l(a(0,l(0)))");
        assert_eq!(a.ty.to_string(), "(((A->A)->B)->B)");
    }

    #[test]
    fn flattened_mode_rejects_redexes() {
        let mut config = SamplerConfig::typed_nf(0).with_units(0, 10);
        config.nf_mode = NfMode::PaperFlattened;
        // l(a(l(0),l(0))) is typable but has a redex
        let draws = [0.1, 0.9, 0.1, 0.4, 0.1, 0.1, 0.4, 0.1];
        let mut s = Sampler::with_source(config, ScriptedSource::new(draws.to_vec())).unwrap();
        assert_eq!(s.attempt().unwrap_err(), Abort::Redex);
        assert_eq!(s.partial_shape().collect::<String>(), "lalili");
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::typed(0).with_units(5, 4).validate().is_err());
        assert!(SamplerConfig::typed(0)
            .with_max_steps(0)
            .validate()
            .is_err());
        assert!(SamplerConfig::typed(0)
            .with_units(0, MAX_UNITS_LIMIT + 1)
            .validate()
            .is_err());
        let mut c = SamplerConfig::typed(0);
        c.thresholds = default_thresholds(Family::NormalForm);
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeded_runs_are_reproducible_and_valid() {
        let config = SamplerConfig::typed(7).with_units(10, 20);
        let a = sample(&config).unwrap();
        let b = sample(&config).unwrap();
        assert_eq!(a, b);
        assert!(a.term.is_closed());
        assert_eq!(infer_type(&a.term).unwrap().to_string(), a.ty);
        assert!((11..=21).contains(&a.natural_size));
        assert_eq!(a.seed, 7);
    }

    #[test]
    fn raising_the_budget_keeps_the_result() {
        let config = SamplerConfig::typed(3).with_units(8, 12);
        let a = sample(&config).unwrap();
        let b = sample(&config.clone().with_max_steps(a.steps)).unwrap();
        let c = sample(&config.clone().with_max_steps(a.steps * 10)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        if a.steps > 1 {
            let e = sample(&config.with_max_steps(a.steps - 1)).unwrap_err();
            assert_eq!(
                e,
                SampleError::Exhausted {
                    attempts: a.steps - 1
                }
            );
        }
    }
}
