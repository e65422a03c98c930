//! Evaluation budget and higher-type values: fuel accounting, recursion-depth
//! guard, and keyed natural-number functions.

use crate::num::Nat;
use num_traits::{ToPrimitive, Zero};
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("fuel exceeded after {applications} applications at stage `{stage}` ({reason})")]
    FuelExceeded {
        applications: u64,
        stage: String,
        reason: String,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("indeterminate comparison: {0}")]
    Indeterminate(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Eval<T> = Result<T, EvalError>;

impl EvalError {
    pub fn is_fuel(&self) -> bool {
        matches!(self, EvalError::FuelExceeded { .. })
    }
}

/// Shared per-invocation budget. Every functional application costs one unit.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: Cell<u64>,
    depth: Cell<usize>,
    max_depth: usize,
    max_depth_seen: Cell<usize>,
    stage: RefCell<String>,
}

pub const DEFAULT_MAX_DEPTH: usize = 20_000;

impl Budget {
    pub fn new(limit: u64) -> Rc<Self> {
        Self::with_depth(limit, DEFAULT_MAX_DEPTH)
    }

    pub fn with_depth(limit: u64, max_depth: usize) -> Rc<Self> {
        Rc::new(Budget {
            limit,
            used: Cell::new(0),
            depth: Cell::new(0),
            max_depth,
            max_depth_seen: Cell::new(0),
            stage: RefCell::new("start".into()),
        })
    }

    /// A budget large enough to never trigger in desk-scale tests.
    pub fn unlimited() -> Rc<Self> {
        Self::new(u64::MAX)
    }

    pub fn from_nat(limit: &Nat) -> Rc<Self> {
        Self::new(limit.to_u64().unwrap_or(u64::MAX))
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used.get().min(self.limit)
    }

    pub fn max_depth_seen(&self) -> usize {
        self.max_depth_seen.get()
    }

    pub fn stage(&self) -> String {
        self.stage.borrow().clone()
    }

    pub fn set_stage(&self, s: impl Into<String>) {
        *self.stage.borrow_mut() = s.into();
    }

    fn exceeded(&self, reason: impl Into<String>) -> EvalError {
        EvalError::FuelExceeded {
            applications: self.used.get(),
            stage: self.stage(),
            reason: reason.into(),
        }
    }

    pub fn charge(&self, units: u64) -> Eval<()> {
        let u = self.used.get().saturating_add(units);
        if u > self.limit {
            self.used.set(self.limit);
            return Err(self.exceeded("fuel"));
        }
        self.used.set(u);
        Ok(())
    }

    pub fn tick(&self) -> Eval<()> {
        self.charge(1)
    }

    /// Fails early when at least `units` further applications are certain to be
    /// needed and fewer remain.
    pub fn require(&self, units: &Nat, what: &str) -> Eval<()> {
        let rem = Nat::from(self.remaining());
        if units > &rem {
            self.used.set(self.limit);
            return Err(self.exceeded(format!("{what} needs at least {units} applications")));
        }
        Ok(())
    }

    pub fn enter(&self) -> Eval<DepthGuard<'_>> {
        let d = self.depth.get() + 1;
        if d > self.max_depth {
            return Err(self.exceeded(format!("recursion depth limit {}", self.max_depth)));
        }
        self.depth.set(d);
        if d > self.max_depth_seen.get() {
            self.max_depth_seen.set(d);
        }
        Ok(DepthGuard(self))
    }
}

pub struct DepthGuard<'a>(&'a Budget);

impl Drop for DepthGuard<'_> {
    fn drop(&mut self) {
        self.0.depth.set(self.0.depth.get() - 1);
    }
}

static NEXT_KEY: AtomicU64 = AtomicU64::new(1);

/// A fresh key for a closure with no structural description.
pub fn fresh_key() -> u64 {
    NEXT_KEY.fetch_add(1, Ordering::Relaxed) | (1 << 63)
}

/// Structural key from any hashable description.
pub fn key_of<H: Hash + ?Sized>(h: &H) -> u64 {
    let mut s = DefaultHasher::new();
    h.hash(&mut s);
    s.finish() & !(1 << 63)
}

type NatFnInner = Rc<dyn Fn(&Nat) -> Eval<Nat>>;

/// A function ℕ→ℕ paired with a structural key.
#[derive(Clone)]
pub struct NatFn {
    key: u64,
    f: NatFnInner,
    budget: Option<Rc<Budget>>,
}

impl std::fmt::Debug for NatFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NatFn#{:x}", self.key)
    }
}

impl NatFn {
    /// Uncounted function (constants, tables, user data).
    pub fn pure(key: u64, f: impl Fn(&Nat) -> Eval<Nat> + 'static) -> Self {
        NatFn {
            key,
            f: Rc::new(f),
            budget: None,
        }
    }

    /// Counted functional: every call ticks fuel and tracks depth.
    pub fn counted(
        budget: &Rc<Budget>,
        key: u64,
        f: impl Fn(&Nat) -> Eval<Nat> + 'static,
    ) -> Self {
        NatFn {
            key,
            f: Rc::new(f),
            budget: Some(budget.clone()),
        }
    }

    /// Counted and memoized on the argument.
    pub fn memoized(
        budget: &Rc<Budget>,
        key: u64,
        f: impl Fn(&Nat) -> Eval<Nat> + 'static,
    ) -> Self {
        let memo: RefCell<HashMap<Nat, Nat>> = RefCell::new(HashMap::new());
        Self::counted(budget, key, move |n| {
            if let Some(v) = memo.borrow().get(n) {
                return Ok(v.clone());
            }
            let v = f(n)?;
            memo.borrow_mut().insert(n.clone(), v.clone());
            Ok(v)
        })
    }

    pub fn constant(c: Nat) -> Self {
        let key = key_of(&("const", &c));
        NatFn::pure(key, move |_| Ok(c.clone()))
    }

    pub fn zero() -> Self {
        Self::constant(Nat::zero())
    }

    pub fn from_fn(key: u64, f: impl Fn(&Nat) -> Nat + 'static) -> Self {
        NatFn::pure(key, move |n| Ok(f(n)))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn call(&self, n: &Nat) -> Eval<Nat> {
        match &self.budget {
            Some(b) => {
                b.tick()?;
                let _g = b.enter()?;
                (self.f)(n)
            }
            None => (self.f)(n),
        }
    }

    pub fn call_u64(&self, n: u64) -> Eval<Nat> {
        self.call(&Nat::from(n))
    }

    /// Pointwise maximum.
    pub fn max(&self, other: &NatFn) -> NatFn {
        let (a, b) = (self.clone(), other.clone());
        NatFn::pure(key_of(&("max", a.key, b.key)), move |n| {
            let x = a.call(n)?;
            let y = b.call(n)?;
            Ok(if x >= y { x } else { y })
        })
    }
}

/// Runs `f` on a thread with a large stack; deep lazy recursions need it.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(f)
        .expect("spawn evaluation thread")
        .join()
        .expect("evaluation thread panicked")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fuel_runs_out() {
        let b = Budget::new(3);
        assert!(b.tick().is_ok());
        assert!(b.charge(2).is_ok());
        let e = b.tick().unwrap_err();
        assert!(e.is_fuel());
    }

    #[test]
    fn require_is_a_lower_bound_check() {
        let b = Budget::new(10);
        assert!(b.require(&Nat::from(10u32), "x").is_ok());
        assert!(b.require(&Nat::from(11u32), "x").is_err());
    }

    #[test]
    fn depth_guard_limits_recursion() {
        let b = Budget::with_depth(u64::MAX, 5);
        fn rec(b: &Budget, n: usize) -> Eval<usize> {
            let _g = b.enter()?;
            if n == 0 {
                Ok(0)
            } else {
                rec(b, n - 1).map(|x| x + 1)
            }
        }
        assert_eq!(rec(&b, 4).unwrap(), 4);
        assert!(rec(&b, 10).is_err());
        assert_eq!(b.max_depth_seen(), 5);
    }

    #[test]
    fn memoized_calls_once() {
        let b = Budget::unlimited();
        let hits = Rc::new(Cell::new(0));
        let h = hits.clone();
        let f = NatFn::memoized(&b, 1, move |n| {
            h.set(h.get() + 1);
            Ok(n + 1u32)
        });
        assert_eq!(f.call_u64(3).unwrap(), Nat::from(4u32));
        assert_eq!(f.call_u64(3).unwrap(), Nat::from(4u32));
        assert_eq!(hits.get(), 1);
    }
}
