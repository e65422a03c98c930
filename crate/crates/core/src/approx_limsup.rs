//! ε-approximate limsups: the counterfunction-parameterized witness functionals
//! W, J, P, N, T; the rank-combination step; and exhaustive searchers.

use crate::eval::{key_of, Budget, Eval, EvalError, NatFn};
use crate::num::{fmt_q, monus, nat, nat_to_q, nat_to_u64, qi, Nat, Q};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// A bounded sequence of nonnegative rationals.
pub trait SequenceOracle {
    fn value(&self, n: &Nat) -> Eval<Q>;
    fn bound(&self) -> Nat;

    /// `value` with the `[0, B]` contract enforced.
    fn at(&self, n: &Nat) -> Eval<Q> {
        let v = self.value(n)?;
        if v < Q::zero() || v > nat_to_q(&self.bound()) {
            return Err(EvalError::Contract(format!(
                "oracle value {} at index {n} outside [0, {}]",
                fmt_q(&v),
                self.bound()
            )));
        }
        Ok(v)
    }
}

/// `prefix ++ cycle ++ cycle ++ …`
#[derive(Clone, Debug)]
pub struct EventuallyPeriodic {
    pub prefix: Vec<Q>,
    pub cycle: Vec<Q>,
    pub bound: Nat,
}

impl EventuallyPeriodic {
    pub fn periodic(cycle: Vec<Q>, bound: Nat) -> Self {
        EventuallyPeriodic {
            prefix: vec![],
            cycle,
            bound,
        }
    }

    /// The limsup: the largest value on the cycle.
    pub fn true_limsup(&self) -> Q {
        self.cycle.iter().max().cloned().unwrap_or_else(Q::zero)
    }
}

impl SequenceOracle for EventuallyPeriodic {
    fn value(&self, n: &Nat) -> Eval<Q> {
        let pre = self.prefix.len();
        if let Some(i) = n.to_usize().filter(|&i| i < pre) {
            return Ok(self.prefix[i].clone());
        }
        if self.cycle.is_empty() {
            return Err(EvalError::Contract("empty cycle".into()));
        }
        let off = (n - nat(pre as u64)) % nat(self.cycle.len() as u64);
        Ok(self.cycle[off.to_usize().unwrap()].clone())
    }

    fn bound(&self) -> Nat {
        self.bound.clone()
    }
}

/// An oracle from a closure, memoized.
pub struct FnOracle {
    f: Box<dyn Fn(&Nat) -> Eval<Q>>,
    bound: Nat,
    memo: RefCell<HashMap<Nat, Q>>,
}

impl FnOracle {
    pub fn new(bound: Nat, f: impl Fn(&Nat) -> Eval<Q> + 'static) -> Self {
        FnOracle {
            f: Box::new(f),
            bound,
            memo: RefCell::new(HashMap::new()),
        }
    }
}

impl SequenceOracle for FnOracle {
    fn value(&self, n: &Nat) -> Eval<Q> {
        if let Some(v) = self.memo.borrow().get(n) {
            return Ok(v.clone());
        }
        let v = (self.f)(n)?;
        self.memo.borrow_mut().insert(n.clone(), v.clone());
        Ok(v)
    }

    fn bound(&self) -> Nat {
        self.bound.clone()
    }
}

type CounterInner = Rc<dyn Fn(&NatFn, &Nat, &Nat) -> Eval<Nat>>;

/// A counterfunction `(ℕ→ℕ, ℕ, ℕ) → ℕ`.
#[derive(Clone)]
pub struct Counterfn {
    pub name: String,
    f: CounterInner,
}

impl std::fmt::Debug for Counterfn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Counterfn({})", self.name)
    }
}

impl Counterfn {
    pub fn new(name: impl Into<String>, f: impl Fn(&NatFn, &Nat, &Nat) -> Eval<Nat> + 'static) -> Self {
        Counterfn {
            name: name.into(),
            f: Rc::new(f),
        }
    }

    pub fn constant(c: u64) -> Self {
        Counterfn::new(format!("const {c}"), move |_, _, _| Ok(nat(c)))
    }

    /// Lookup table indexed by the middle argument, cycling.
    pub fn table(vals: Vec<u64>) -> Self {
        let name = format!("table {vals:?}");
        Counterfn::new(name, move |_, y, _| {
            if vals.is_empty() {
                return Ok(Nat::zero());
            }
            let i = (y % nat(vals.len() as u64)).to_usize().unwrap();
            Ok(nat(vals[i]))
        })
    }

    pub fn call(&self, f: &NatFn, y: &Nat, n: &Nat) -> Eval<Nat> {
        (self.f)(f, y, n)
    }
}

#[derive(Clone, Debug)]
pub struct LimsupWitness {
    pub p: Nat,
    pub n: NatFn,
    pub t: Nat,
    /// Set when no `p ≤ B(k+1)` met the index condition.
    pub fallback: bool,
}

/// The W and J chains of one invocation.
pub struct LimsupRun {
    pub s: Nat,
    ws: Vec<NatFn>,
    js: Vec<Nat>,
}

impl LimsupRun {
    pub fn w(&self, n: &Nat) -> &NatFn {
        &self.ws[n.to_usize().expect("stage index")]
    }

    pub fn j(&self, n: &Nat) -> &Nat {
        &self.js[n.to_usize().expect("stage index")]
    }
}

/// Builds `W(0..=S+1)` and `J(0..=S+1)` for `S = B(k+1)`.
pub fn limsup_chains(
    bound: &Nat,
    k: &Nat,
    u: &Counterfn,
    m: &Counterfn,
    budget: &Rc<Budget>,
) -> Eval<LimsupRun> {
    let s = bound * (k + 1u32);
    // J(S+1) alone needs S+1 applications of M.
    budget.require(&(&s + 1u32), "limsup J-chain")?;
    let len = s
        .to_usize()
        .ok_or_else(|| EvalError::Contract("limsup stage count exceeds memory".into()))?
        + 2;
    let tag = key_of(&("limsup", bound, k, &u.name, &m.name));
    let memo: Rc<RefCell<HashMap<(usize, Nat), Nat>>> = Rc::new(RefCell::new(HashMap::new()));
    let mut ws = Vec::with_capacity(len);
    ws.push(NatFn::zero());
    for n in 0..len - 1 {
        let prev = ws[n].clone();
        let (u, memo, b) = (u.clone(), memo.clone(), budget.clone());
        let stage = nat(n as u64);
        ws.push(NatFn::counted(budget, key_of(&("W", tag, n + 1)), move |y| {
            if let Some(v) = memo.borrow().get(&(n + 1, y.clone())) {
                return Ok(v.clone());
            }
            b.tick()?;
            let v = u.call(&prev, y, &stage)?;
            memo.borrow_mut().insert((n + 1, y.clone()), v.clone());
            Ok(v)
        }));
    }
    let mut js = Vec::with_capacity(len);
    js.push(Nat::zero());
    for n in 0..len - 1 {
        let sn = monus(&s, &nat(n as u64));
        budget.tick()?;
        let v = m.call(&ws[sn.to_usize().unwrap()], &js[n], &sn)?;
        js.push(v);
    }
    Ok(LimsupRun { s, ws, js })
}

/// The witness `(P, N, T)` for `B`, `k`, the oracle `a` and counterfunctions `U`, `M`.
pub fn eps_limsup_witness(
    bound: &Nat,
    k: &Nat,
    a: &dyn SequenceOracle,
    u: &Counterfn,
    m: &Counterfn,
    budget: &Rc<Budget>,
) -> Eval<LimsupWitness> {
    let prev_stage = budget.stage();
    budget.set_stage("limsup");
    let run = limsup_chains(bound, k, u, m, budget)?;
    let k1 = nat_to_q(&(k + 1u32));
    let s = run.s.clone();
    let mut p = Nat::zero();
    let mut found = None;
    while p <= s {
        let j1 = run.j(&(&s + 1u32 - &p)).clone();
        let i1 = &j1 + run.w(&p).call(&j1)?;
        let c1 = a.at(&i1)? > (nat_to_q(&p) - qi(1)) / &k1;
        if c1 {
            let j0 = run.j(&(&s - &p)).clone();
            let i2 = &j0 + run.w(&(&p + 1u32)).call(&j0)?;
            if a.at(&i2)? <= nat_to_q(&p) / &k1 {
                found = Some(p.clone());
                break;
            }
        }
        p += 1u32;
    }
    let fallback = found.is_none();
    if fallback {
        eprintln!("warning: limsup index search found no p ≤ {s}; using P = 0 (oracle contract suspect)");
    }
    let p = found.unwrap_or_default();
    budget.set_stage(prev_stage);
    Ok(LimsupWitness {
        n: run.w(&p).clone(),
        t: run.j(&(&s - &p)).clone(),
        p,
        fallback,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PostCheck {
    pub m_value: String,
    pub u_value: String,
    pub lhs_i: String,
    pub rhs_i: String,
    pub lhs_ii: String,
    pub rhs_ii: String,
    pub holds_i: bool,
    pub holds_ii: bool,
    pub in_range: bool,
}

impl PostCheck {
    pub fn holds(&self) -> bool {
        self.holds_i && self.holds_ii && self.in_range
    }
}

/// Re-evaluates the two conclusions from scratch.
pub fn verify_postconditions(
    bound: &Nat,
    k: &Nat,
    a: &dyn SequenceOracle,
    u: &Counterfn,
    m: &Counterfn,
    w: &LimsupWitness,
) -> Eval<PostCheck> {
    let k1 = nat_to_q(&(k + 1u32));
    let pq = nat_to_q(&w.p);
    let mv = m.call(&w.n, &w.t, &w.p)?;
    let uv = u.call(&w.n, &w.t, &w.p)?;
    let lhs_i = a.at(&(&mv + w.n.call(&mv)?))?;
    let rhs_i = (&pq - qi(1)) / &k1;
    let lhs_ii = a.at(&(&w.t + &uv))?;
    let rhs_ii = (&pq + qi(1)) / &k1;
    Ok(PostCheck {
        m_value: mv.to_string(),
        u_value: uv.to_string(),
        holds_i: lhs_i >= rhs_i,
        holds_ii: lhs_ii <= rhs_ii,
        in_range: w.p <= bound * (k + 1u32),
        lhs_i: fmt_q(&lhs_i),
        rhs_i: fmt_q(&rhs_i),
        lhs_ii: fmt_q(&lhs_ii),
        rhs_ii: fmt_q(&rhs_ii),
    })
}

/// `j + j' + m(N + j + j')`.
pub fn combine_ranks(j: &Nat, j2: &Nat, m: &NatFn, n: &Nat) -> Eval<Nat> {
    let s = j + j2;
    Ok(&s + m.call(&(n + &s))?)
}

/// `U(N,T,P)`: the first `l ≤ window` with `a(T+l) > (P+1)/(k+1)`, else 0.
pub fn upper_searcher(a: Rc<dyn SequenceOracle>, k: Nat, window: u64) -> Counterfn {
    Counterfn::new(format!("upper-search {window}"), move |_n, t, p| {
        let lim = (nat_to_q(p) + qi(1)) / nat_to_q(&(&k + 1u32));
        for l in 0..=window {
            if a.at(&(t + l))? > lim {
                return Ok(nat(l));
            }
        }
        Ok(Nat::zero())
    })
}

/// `M(N,T,P)`: the first `n ∈ [from, from+window]` with `a(n+N(n)) < (P−1)/(k+1)`,
/// else `from`.
pub fn lower_searcher(a: Rc<dyn SequenceOracle>, k: Nat, from: u64, window: u64) -> Counterfn {
    Counterfn::new(format!("lower-search {from}+{window}"), move |nf, _t, p| {
        let lim = (nat_to_q(p) - qi(1)) / nat_to_q(&(&k + 1u32));
        for i in from..=from + window {
            let n = nat(i);
            if a.at(&(&n + nf.call(&n)?))? < lim {
                return Ok(n);
            }
        }
        Ok(nat(from))
    })
}

/// A random counterfunction from a fixed pool of shapes; outputs stay small.
pub fn random_counterfunction<R: Rng>(rng: &mut R) -> Counterfn {
    let c = rng.gen_range(0..7u64);
    let md = rng.gen_range(2..9u64);
    match rng.gen_range(0..7) {
        0 => Counterfn::constant(c),
        1 => Counterfn::table((0..5).map(|_| rng.gen_range(0..9)).collect()),
        2 => Counterfn::new(format!("f(y)+{c} mod {md}"), move |f, y, _| Ok((f.call(y)? + c) % md)),
        3 => Counterfn::new(format!("(y+n+{c}) mod {md}"), move |_, y, n| Ok((y + n + c) % md)),
        4 => Counterfn::new(format!("f(f(y) mod {md})"), move |f, y, _| {
            let inner = f.call(y)? % md;
            Ok(f.call(&inner)? % (md + 3))
        }),
        5 => Counterfn::new(format!("f(y+1)+n mod {md}"), move |f, y, n| Ok((f.call(&(y + 1u32))? + n) % md)),
        _ => Counterfn::new(format!("{c}·y mod {md}"), move |_, y, _| Ok((y * c) % md)),
    }
}

/// A random eventually periodic oracle with values in `{0, 1/den, …, B}`.
pub fn random_oracle<R: Rng>(rng: &mut R, bound: u64, max_prefix: usize, max_cycle: usize) -> EventuallyPeriodic {
    let den = rng.gen_range(1..=6i64);
    let hi = bound as i64 * den;
    let np = rng.gen_range(0..=max_prefix);
    let nc = rng.gen_range(1..=max_cycle);
    let prefix: Vec<Q> = (0..np).map(|_| crate::num::q(rng.gen_range(0..=hi), den)).collect();
    let cycle: Vec<Q> = (0..nc).map(|_| crate::num::q(rng.gen_range(0..=hi), den)).collect();
    EventuallyPeriodic {
        prefix,
        cycle,
        bound: nat(bound),
    }
}

/// `|P/(k+1) − L| ≤ 1/(k+1)` against the exact limsup.
pub fn soundness_gap(p: &Nat, k: &Nat, limsup: &Q) -> (Q, bool) {
    let k1 = nat_to_q(&(k + 1u32));
    let gap = nat_to_q(p) / &k1 - limsup;
    let gap = if gap < Q::zero() { -gap } else { gap };
    let ok = gap <= Q::from_integer(1.into()) / k1;
    (gap, ok)
}

pub fn nat_u64(n: &Nat) -> u64 {
    nat_to_u64(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn run(a: &EventuallyPeriodic, b: u64, k: u64, u: &Counterfn, m: &Counterfn) -> (LimsupWitness, PostCheck) {
        let budget = Budget::unlimited();
        let w = eps_limsup_witness(&nat(b), &nat(k), a, u, m, &budget).unwrap();
        let c = verify_postconditions(&nat(b), &nat(k), a, u, m, &w).unwrap();
        (w, c)
    }

    #[test]
    fn zero_sequence_gives_zero() {
        let a = EventuallyPeriodic::periodic(vec![q(0, 1)], nat(1));
        let (w, c) = run(&a, 1, 3, &Counterfn::constant(2), &Counterfn::constant(5));
        assert_eq!(w.p, nat(0));
        assert!(c.holds());
    }

    #[test]
    fn half_sequence_gives_two() {
        let a = EventuallyPeriodic::periodic(vec![q(1, 2)], nat(1));
        let (w, c) = run(&a, 1, 3, &Counterfn::constant(0), &Counterfn::constant(0));
        assert_eq!(w.p, nat(2));
        assert!(!w.fallback);
        assert!(c.holds());
    }

    #[test]
    fn oracle_contract_violation() {
        let a = EventuallyPeriodic::periodic(vec![q(3, 1)], nat(1));
        let budget = Budget::unlimited();
        let e = eps_limsup_witness(&nat(1), &nat(3), &a, &Counterfn::constant(0), &Counterfn::constant(0), &budget);
        assert!(matches!(e, Err(EvalError::Contract(_))));
    }

    #[test]
    fn fuel_precheck() {
        let a = EventuallyPeriodic::periodic(vec![q(0, 1)], nat(1));
        let budget = Budget::new(3);
        let e = eps_limsup_witness(&nat(4), &nat(8), &a, &Counterfn::constant(0), &Counterfn::constant(0), &budget);
        assert!(e.unwrap_err().is_fuel());
    }

    #[test]
    fn combine_ranks_examples() {
        assert_eq!(combine_ranks(&nat(0), &nat(0), &NatFn::zero(), &nat(5)).unwrap(), nat(0));
        assert_eq!(combine_ranks(&nat(1), &nat(2), &NatFn::constant(nat(3)), &nat(0)).unwrap(), nat(6));
    }

    #[test]
    fn combine_ranks_property_on_periodic() {
        // a = (1/2, 0), b = (0, 1/2), c ≡ 1/2: limsups 1/2, 1/2, 1/2 and q, q' ≤ r + ε/2.
        let eps = q(1, 2);
        let a = EventuallyPeriodic::periodic(vec![q(1, 2), q(0, 1)], nat(1));
        let b = EventuallyPeriodic::periodic(vec![q(0, 1), q(1, 2)], nat(1));
        let c = EventuallyPeriodic::periodic(vec![q(1, 2)], nat(1));
        // a, b stay ≤ 1/2 + ε/4 from j = j' = 0; c is ≥ 1/2 − ε/4 everywhere: m ≡ 0.
        for n in 0..20u64 {
            let k = combine_ranks(&nat(0), &nat(0), &NatFn::zero(), &nat(n)).unwrap();
            let idx = nat(n) + k;
            assert!(a.at(&idx).unwrap() <= c.at(&idx).unwrap() + &eps);
            assert!(b.at(&idx).unwrap() <= c.at(&idx).unwrap() + &eps);
        }
    }

    #[test]
    fn searchers_give_sound_witness() {
        let a: Rc<dyn SequenceOracle> = Rc::new(EventuallyPeriodic {
            prefix: vec![q(1, 1), q(1, 1), q(1, 1)],
            cycle: vec![q(0, 1), q(1, 4), q(1, 2)],
            bound: nat(1),
        });
        let k = nat(7);
        let u = upper_searcher(a.clone(), k.clone(), 6);
        let m = lower_searcher(a.clone(), k.clone(), 3, 6);
        let budget = Budget::unlimited();
        let w = eps_limsup_witness(&nat(1), &k, a.as_ref(), &u, &m, &budget).unwrap();
        assert!(verify_postconditions(&nat(1), &k, a.as_ref(), &u, &m, &w).unwrap().holds());
        assert!(soundness_gap(&w.p, &k, &q(1, 2)).1);
    }

    #[test]
    fn recursion_depth_bounded_by_stage_count() {
        let a = EventuallyPeriodic::periodic(vec![q(1, 3), q(2, 3)], nat(2));
        let budget = Budget::unlimited();
        let u = Counterfn::new("f(y)+1", |f, y, _| Ok(f.call(y)? + 1u32));
        eps_limsup_witness(&nat(2), &nat(4), &a, &u, &Counterfn::constant(1), &budget).unwrap();
        assert!(budget.max_depth_seen() <= 2 * 5 + 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn postconditions_hold_for_random_draws(seed in any::<u64>(), b in 1u64..=4, k in 0u64..=8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_oracle(&mut rng, b, 4, 5);
            let u = random_counterfunction(&mut rng);
            let m = random_counterfunction(&mut rng);
            let (w, c) = run(&a, b, k, &u, &m);
            prop_assert!(!w.fallback);
            prop_assert!(c.holds(), "{:?} {:?} {:?}", u, m, c);
        }
    }
}
