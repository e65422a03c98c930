//! Stage tuples, their dual tuples and the predicate A, in a short-circuit
//! form for case distinctions and a clause-by-clause form for re-verification.

use crate::eval::{fresh_key, key_of, Eval, EvalError, NatFn};
use crate::num::{ceil_nat, fmt_q, nat_to_q, qi, Nat, Q};
use crate::schemas::PointSeq;
use crate::spaces::{Interval, Point};
use num_traits::Zero;
use serde::Serialize;
use std::rc::Rc;

type StageInner = Rc<dyn Fn(&Nat, &Point, &NatFn, &Nat) -> Eval<Nat>>;

/// A functional `(r, z, L̃, m̃) ↦ ℕ` with a structural key.
#[derive(Clone)]
pub struct StageFn {
    pub key: u64,
    f: StageInner,
}

impl std::fmt::Debug for StageFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StageFn#{:x}", self.key)
    }
}

impl StageFn {
    pub fn new(key: u64, f: impl Fn(&Nat, &Point, &NatFn, &Nat) -> Eval<Nat> + 'static) -> Self {
        StageFn { key, f: Rc::new(f) }
    }

    pub fn zero() -> Self {
        StageFn::new(key_of("stage-zero"), |_, _, _, _| Ok(Nat::zero()))
    }

    pub fn call(&self, r: &Nat, z: &Point, l: &NatFn, m: &Nat) -> Eval<Nat> {
        (self.f)(r, z, l, m)
    }
}

/// `(Ũ, Ñ, p, y, L, m)`.
#[derive(Clone, Debug)]
pub struct StageTuple {
    pub ut: StageFn,
    pub nt: StageFn,
    pub p: Nat,
    pub y: Point,
    pub l: NatFn,
    pub m: Nat,
}

impl StageTuple {
    pub fn key(&self) -> u64 {
        key_of(&(self.ut.key, self.nt.key, &self.p, &self.y, self.l.key(), &self.m))
    }

    /// Same five components, last one replaced.
    pub fn with_m(&self, m: Nat) -> StageTuple {
        StageTuple { m, ..self.clone() }
    }

    pub fn summary(&self) -> StageSummary {
        StageSummary {
            p: self.p.to_string(),
            y: self.y.to_strings(),
            m: self.m.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub p: String,
    pub y: Vec<String>,
    pub m: String,
}

/// `(r, z, L̃, m̃, u)`; an Ω value is this plus the number `n`.
#[derive(Clone, Debug)]
pub struct DualTuple {
    pub r: Nat,
    pub z: Point,
    pub lt: NatFn,
    pub mt: Nat,
    pub u: Nat,
}

impl DualTuple {
    pub fn trivial(z: Point) -> Self {
        DualTuple {
            r: Nat::zero(),
            z,
            lt: NatFn::zero(),
            mt: Nat::zero(),
            u: Nat::zero(),
        }
    }
}

type OmegaInner = Rc<dyn Fn(&StageTuple) -> Eval<(DualTuple, Nat)>>;

/// A pair `(g, f)` taking a stage tuple to `(r, z, L̃, m̃, u)` and `n`.
#[derive(Clone)]
pub struct Omega {
    pub key: u64,
    f: OmegaInner,
}

impl Omega {
    pub fn new(f: impl Fn(&StageTuple) -> Eval<(DualTuple, Nat)> + 'static) -> Self {
        Omega {
            key: fresh_key(),
            f: Rc::new(f),
        }
    }

    pub fn call(&self, w: &StageTuple) -> Eval<(DualTuple, Nat)> {
        (self.f)(w)
    }
}

fn cmp_le(a: &Interval, b: &Interval, what: &str) -> Eval<bool> {
    a.le(b)
        .ok_or_else(|| EvalError::Indeterminate(format!("{what}: comparison undecided within slack")))
}

fn dist(x: &dyn PointSeq, n: &Nat, y: &Point) -> Eval<Interval> {
    x.dist_sq_to(n, y)
}

/// `k = ⌈4/δ⌉`.
pub fn k_of(delta: &Q) -> Nat {
    ceil_nat(&(qi(4) / delta))
}

/// The predicate A, short-circuiting; used for case distinctions.
pub fn evaluate_a(x: &dyn PointSeq, b: u64, delta: &Q, w: &StageTuple, q: &DualTuple, t: &Nat) -> Eval<bool> {
    let k = k_of(delta);
    let k1 = nat_to_q(&(&k + 1u32));
    let top = Nat::from(b * b) * (&k + 1u32);
    let d4 = delta / qi(4);
    if w.p > top {
        return Ok(false);
    }
    let pk = nat_to_q(&w.p) / &k1;
    let i1 = &q.u + w.l.call(&q.u)?;
    if !cmp_le(&Interval::exact(&pk - &d4), &dist(x, &i1, &w.y)?, "A lower clause")? {
        return Ok(false);
    }
    if !cmp_le(&dist(x, t, &w.y)?, &Interval::exact(&pk + &d4), "A upper clause")? {
        return Ok(false);
    }
    // the implication
    if q.r > top {
        return Ok(true);
    }
    let rk = nat_to_q(&q.r) / &k1;
    let j = w.ut.call(&q.r, &q.z, &q.lt, &q.mt)?;
    let i2 = &j + q.lt.call(&j)?;
    if !cmp_le(&Interval::exact(&rk - &d4), &dist(x, &i2, &q.z)?, "A antecedent lower")? {
        return Ok(true);
    }
    let i3 = &q.mt + w.nt.call(&q.r, &q.z, &q.lt, &q.mt)?;
    if !cmp_le(&dist(x, &i3, &q.z)?, &Interval::exact(&rk + &d4), "A antecedent upper")? {
        return Ok(true);
    }
    Ok(pk <= rk + delta / qi(2))
}

/// Every clause of A with its evaluated sides.
#[derive(Clone, Debug, Serialize)]
pub struct ATranscript {
    pub label: String,
    pub delta: String,
    pub k: String,
    pub t: String,
    pub p_in_range: bool,
    pub lower: Clause,
    pub upper: Clause,
    pub r_in_range: bool,
    pub ante_lower: Clause,
    pub ante_upper: Clause,
    pub conclusion: Clause,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Clause {
    pub index: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

fn clause(index: &Nat, lhs: Interval, rhs: Interval, what: &str) -> Eval<Clause> {
    let holds = cmp_le(&lhs, &rhs, what)?;
    let show = |i: &Interval| if i.is_exact() { fmt_q(&i.lo) } else { format!("[{}, {}]", fmt_q(&i.lo), fmt_q(&i.hi)) };
    Ok(Clause {
        index: index.to_string(),
        lhs: show(&lhs),
        rhs: show(&rhs),
        holds,
    })
}

/// Brute-force evaluation of A: every clause is computed, nothing skipped.
pub fn a_transcript(
    label: &str,
    x: &dyn PointSeq,
    b: u64,
    delta: &Q,
    w: &StageTuple,
    q: &DualTuple,
    t: &Nat,
) -> Eval<ATranscript> {
    let k = k_of(delta);
    let k1 = nat_to_q(&(&k + 1u32));
    let top = Nat::from(b) * Nat::from(b) * (&k + 1u32);
    let d4 = delta / qi(4);
    let pk = nat_to_q(&w.p) / &k1;
    let rk = nat_to_q(&q.r) / &k1;

    let i1 = &q.u + w.l.call(&q.u)?;
    let lower = clause(&i1, Interval::exact(&pk - &d4), dist(x, &i1, &w.y)?, "A lower clause")?;
    let upper = clause(t, dist(x, t, &w.y)?, Interval::exact(&pk + &d4), "A upper clause")?;

    let j = w.ut.call(&q.r, &q.z, &q.lt, &q.mt)?;
    let i2 = &j + q.lt.call(&j)?;
    let ante_lower = clause(&i2, Interval::exact(&rk - &d4), dist(x, &i2, &q.z)?, "A antecedent lower")?;
    let i3 = &q.mt + w.nt.call(&q.r, &q.z, &q.lt, &q.mt)?;
    let ante_upper = clause(&i3, dist(x, &i3, &q.z)?, Interval::exact(&rk + &d4), "A antecedent upper")?;
    let conclusion = clause(
        &Nat::zero(),
        Interval::exact(pk.clone()),
        Interval::exact(&rk + delta / qi(2)),
        "A conclusion",
    )?;

    let p_in_range = w.p <= top;
    let r_in_range = q.r <= top;
    let antecedent = r_in_range && ante_lower.holds && ante_upper.holds;
    let holds = p_in_range && lower.holds && upper.holds && (!antecedent || conclusion.holds);
    Ok(ATranscript {
        label: label.into(),
        delta: fmt_q(delta),
        k: k.to_string(),
        t: t.to_string(),
        p_in_range,
        lower,
        upper,
        r_in_range,
        ante_lower,
        ante_upper,
        conclusion,
        holds,
    })
}
