//! The concrete counterfunctions fed to Φ, and the end-to-end realizer run
//! producing the metastability witness `N = k' + f₀'(w,k,w',k')`.

use super::constants::ConstantsBundle;
use super::phi::{phi_realizer, GOne, GThree, GTwo, Index, PhiInputs, PhiOutput, PhiSummary, PsiFn, Rate, Reseq};
use super::predicate::{k_of, DualTuple, StageFn, StageTuple};
use super::psi::{exact_dist, psi_realizer, require_exact, verify_psi, PsiContext};
use crate::approx_limsup::{eps_limsup_witness, Counterfn, FnOracle};
use crate::eval::{fresh_key, Budget, Eval, EvalError, NatFn};
use crate::num::{ceil_div_sqrt, ceil_nat, fmt_q, nat, nat_to_q, q_min, qi, Nat, Q};
use crate::schemas::{s_selector, DistCached, PointSeq, Reindexed};
use crate::spaces::{MapInstance, Point};
use num_traits::Zero;
use serde::Serialize;
use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

type Nu1 = Rc<dyn Fn(&Nat, &Nat) -> Eval<Q>>;

/// The four constants the constructions consume. `nu1(c, d)` receives the
/// already selected second index.
#[derive(Clone)]
pub struct Claim2Constants {
    pub eps: Q,
    pub delta: Q,
    pub u: Q,
    pub nu2: Q,
    pub nu1: Nu1,
    pub label: String,
}

impl Claim2Constants {
    pub fn from_bundle(c: &ConstantsBundle) -> Self {
        let cb = c.clone();
        Claim2Constants {
            eps: c.eps.clone(),
            delta: c.delta.clone(),
            u: c.u.clone(),
            nu2: c.nu2.clone(),
            nu1: Rc::new(move |a, d| cb.nu1(a, d)),
            label: "derived".into(),
        }
    }

    /// Caller-chosen constants: exercises the machinery, proves nothing about ε.
    pub fn custom(eps: Q, delta: Q, u: Q, nu1: Q, nu2: Q) -> Self {
        Claim2Constants {
            eps,
            delta,
            u,
            nu2,
            nu1: Rc::new(move |_, _| Ok(nu1.clone())),
            label: "custom".into(),
        }
    }
}

/// The data of one resolvent-path instance.
#[derive(Clone)]
pub struct RealizerInstance {
    pub x: Rc<dyn PointSeq>,
    pub anchor: Point,
    /// `h_T`, used for the points `(v + h_T v)/2`.
    pub h_t: MapInstance,
    pub g: NatFn,
    pub alpha: NatFn,
    pub b: u64,
}

/// Limsup of `‖seq_n − z‖²` with counterfunctions that first test the
/// `(v₁(m), m)` escape and then walk the candidate `(Ñ, Ũ)` pairs.
fn g_construct(
    seq: Rc<dyn PointSeq>,
    b: u64,
    z: Point,
    dlim: &Q,
    m: Nat,
    cands: Vec<(StageFn, StageFn)>,
    budget: &Rc<Budget>,
) -> Eval<(DualTuple, Nat)> {
    let k = k_of(dlim);
    let k1 = nat_to_q(&(&k + 1u32));
    let top = nat(b * b) * (&k + 1u32);
    let (s2, z2) = (seq.clone(), z.clone());
    let oracle = FnOracle::new(nat(b * b), move |n| exact_dist(s2.as_ref(), n, &z2));
    let memo: Rc<RefCell<HashMap<(u64, Nat, Nat), (Nat, Nat)>>> = Rc::new(RefCell::new(HashMap::new()));
    let sel: Rc<dyn Fn(&NatFn, &Nat, &Nat) -> Eval<(Nat, Nat)>> = {
        let (z, m, memo, seq) = (z.clone(), m.clone(), memo.clone(), seq.clone());
        Rc::new(move |v1, v2, v3| {
            let key = (v1.key(), v2.clone(), v3.clone());
            if let Some(r) = memo.borrow().get(&key) {
                return Ok(r.clone());
            }
            let lo = (nat_to_q(v3) - qi(1)) / &k1;
            let hi = (nat_to_q(v3) + qi(1)) / &k1;
            let in_range = v3 <= &top;
            let vm = v1.call(&m)?;
            let first = in_range
                && exact_dist(seq.as_ref(), &(&m + &vm), &z)? >= lo
                && exact_dist(seq.as_ref(), &(v2 + &vm), &z)? <= hi;
            let out = if !first {
                (vm, m.clone())
            } else {
                let mut chosen = None;
                for (i, (nt, ut)) in cands.iter().enumerate() {
                    let uval = ut.call(v3, &z, v1, v2)?;
                    let nval = nt.call(v3, &z, v1, v2)?;
                    if i + 1 == cands.len() {
                        chosen = Some((nval, uval));
                        break;
                    }
                    let ok = in_range
                        && exact_dist(seq.as_ref(), &(&uval + v1.call(&uval)?), &z)? >= lo
                        && exact_dist(seq.as_ref(), &(v2 + &nval), &z)? <= hi;
                    if !ok {
                        chosen = Some((nval, uval));
                        break;
                    }
                }
                chosen.expect("at least one candidate")
            };
            memo.borrow_mut().insert(key, out.clone());
            Ok(out)
        })
    };
    let tag = fresh_key();
    let (su, sm) = (sel.clone(), sel);
    let ucf = Counterfn::new(format!("g-U#{tag:x}"), move |f, y, n| Ok(su(f, y, n)?.0));
    let mcf = Counterfn::new(format!("g-M#{tag:x}"), move |f, y, n| Ok(sm(f, y, n)?.1));
    let w = eps_limsup_witness(&nat(b * b), &k, &oracle, &ucf, &mcf, budget)?;
    let n = w.n.call(&m)?;
    Ok((
        DualTuple {
            r: w.p,
            z,
            lt: w.n,
            mt: w.t,
            u: Nat::zero(),
        },
        n,
    ))
}

fn memo1<T: Clone + 'static>(f: impl Fn(&StageTuple) -> Eval<T> + 'static) -> Rc<dyn Fn(&StageTuple) -> Eval<T>> {
    let memo: RefCell<HashMap<u64, T>> = RefCell::new(HashMap::new());
    Rc::new(move |a| {
        if let Some(v) = memo.borrow().get(&a.key()) {
            return Ok(v.clone());
        }
        let v = f(a)?;
        memo.borrow_mut().insert(a.key(), v.clone());
        Ok(v)
    })
}

fn memo2<T: Clone + 'static>(
    f: impl Fn(&StageTuple, &StageTuple) -> Eval<T> + 'static,
) -> Rc<dyn Fn(&StageTuple, &StageTuple) -> Eval<T>> {
    let memo: RefCell<HashMap<(u64, u64), T>> = RefCell::new(HashMap::new());
    Rc::new(move |a, b| {
        let key = (a.key(), b.key());
        if let Some(v) = memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = f(a, b)?;
        memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    })
}

fn memo3(f: impl Fn(&StageTuple, &StageTuple, &StageTuple) -> Eval<(DualTuple, Nat)> + 'static) -> GThree {
    let memo: RefCell<HashMap<(u64, u64, u64), (DualTuple, Nat)>> = RefCell::new(HashMap::new());
    Rc::new(move |a, b, c| {
        let key = (a.key(), b.key(), c.key());
        if let Some(v) = memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = f(a, b, c)?;
        memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    })
}

fn half_step(h_t: &MapInstance, v: &Point) -> Eval<Point> {
    let hv = h_t.apply(v).map_err(|e| EvalError::Solver(e.to_string()))?;
    Ok(v.midpoint(&hv))
}

/// The tuple `(u, u', g-vectors, f-vectors, ι, φ)`.
pub fn claim2_instantiation(inst: &RealizerInstance, c: &Claim2Constants, budget: &Rc<Budget>) -> Eval<PhiInputs> {
    require_exact(inst.x.as_ref())?;
    let b = inst.b;
    let x = DistCached::wrap(inst.x.clone());

    let phi: Reseq = {
        let (x, g) = (x.clone(), inst.g.clone());
        let memo: RefCell<HashMap<Point, Rc<dyn PointSeq>>> = RefCell::new(HashMap::new());
        Rc::new(move |w| {
            if let Some(s) = memo.borrow().get(&w.y) {
                return Ok(s.clone());
            }
            let s = DistCached::wrap(Rc::new(Reindexed {
                base: x.clone(),
                p: w.y.clone(),
                g: g.clone(),
            }));
            memo.borrow_mut().insert(w.y.clone(), s.clone());
            Ok(s)
        })
    };

    let g0: GOne = {
        let (x, anchor, c, budget) = (x.clone(), inst.anchor.clone(), c.clone(), budget.clone());
        memo1(move |w| {
            let z = w.y.lerp(&anchor, &c.delta);
            g_construct(x.clone(), b, z, &c.u, w.m.clone(), vec![(w.nt.clone(), w.ut.clone())], &budget)
        })
    };
    let g0p: GTwo = {
        let (phi, anchor, c, budget) = (phi.clone(), inst.anchor.clone(), c.clone(), budget.clone());
        memo2(move |w, wp| {
            let z = wp.y.lerp(&anchor, &c.delta);
            g_construct(phi(w)?, b, z, &c.u, wp.m.clone(), vec![(wp.nt.clone(), wp.ut.clone())], &budget)
        })
    };

    // ν₁(w, k̃, k̃') with k̃ = k + f₀(w,k), k̃' = k' + f₀'(w,k,w',k')
    let nu1_at: Rate = {
        let (x, g, g0, g0p, c) = (x.clone(), inst.g.clone(), g0.clone(), g0p.clone(), c.clone());
        memo2(move |w, wp| {
            let kt = &w.m + g0(w)?.1;
            let ktp = &wp.m + g0p(w, wp)?.1;
            let d = s_selector(&w.y, &g, x.as_ref(), &ktp)?;
            (c.nu1)(&kt, &d)
        })
    };
    let u_prime: Rate = {
        let (nu1_at, nu2) = (nu1_at.clone(), c.nu2.clone());
        Rc::new(move |w, wp| Ok(q_min(&(nu1_at(w, wp)? / qi(2)), &nu2)))
    };
    let iota: Index = {
        let (nu1_at, alpha) = (nu1_at.clone(), inst.alpha.clone());
        Rc::new(move |w, wp| {
            let n1 = nu1_at(w, wp)?;
            let a = ceil_div_sqrt(&qi(2 * b as i64), &n1);
            let bb = ceil_nat(&(qi(8 * (b * b) as i64) / &n1));
            alpha.call(&if a > bb { a } else { bb })
        })
    };

    let g1: GThree = {
        let (x, h_t, up, budget) = (x.clone(), inst.h_t.clone(), u_prime.clone(), budget.clone());
        memo3(move |w, wp, v| {
            let z = half_step(&h_t, &v.y)?;
            g_construct(x.clone(), b, z, &up(w, wp)?, v.m.clone(), vec![(v.nt.clone(), v.ut.clone())], &budget)
        })
    };
    let g2: GThree = {
        let (x, up, u, budget) = (x.clone(), u_prime.clone(), c.u.clone(), budget.clone());
        memo3(move |w, wp, v| {
            let z = v.y.midpoint(&w.y);
            let d = q_min(&u, &up(w, wp)?);
            let cands = vec![(w.nt.clone(), w.ut.clone()), (v.nt.clone(), v.ut.clone())];
            g_construct(x.clone(), b, z, &d, v.m.clone(), cands, &budget)
        })
    };
    // primed variants: same pattern on x^w, with w' in place of w
    let g1p: GThree = {
        let (phi, h_t, up, budget) = (phi.clone(), inst.h_t.clone(), u_prime.clone(), budget.clone());
        memo3(move |w, wp, v| {
            let z = half_step(&h_t, &v.y)?;
            g_construct(phi(w)?, b, z, &up(w, wp)?, v.m.clone(), vec![(v.nt.clone(), v.ut.clone())], &budget)
        })
    };
    let g2p: GThree = {
        let (phi, up, u, budget) = (phi.clone(), u_prime.clone(), c.u.clone(), budget.clone());
        memo3(move |w, wp, v| {
            let z = v.y.midpoint(&wp.y);
            let d = q_min(&u, &up(w, wp)?);
            let cands = vec![(wp.nt.clone(), wp.ut.clone()), (v.nt.clone(), v.ut.clone())];
            g_construct(phi(w)?, b, z, &d, v.m.clone(), cands, &budget)
        })
    };

    Ok(PhiInputs {
        x,
        b,
        u: c.u.clone(),
        u_prime,
        g0,
        g0p,
        g1,
        g2,
        g1p,
        g2p,
        iota,
        phi,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizerReport {
    pub constants: String,
    pub epsilon: String,
    pub u: String,
    pub witness_n: String,
    pub g_of_n: String,
    pub gap_sq: String,
    pub endpoint_holds: bool,
    pub psi_calls_verified: u64,
    pub applications: u64,
    pub phi: PhiSummary,
}

pub struct RealizerRun {
    pub output: PhiOutput,
    pub report: RealizerReport,
    pub witness: Nat,
}

/// Ψ wrapper that re-verifies every returned stage with the clause-by-clause evaluator.
pub fn checked_psi(b: u64, z1: Point, budget: &Rc<Budget>, counter: Rc<Cell<u64>>) -> PsiFn {
    let budget = budget.clone();
    Rc::new(move |x, eps, om| {
        let ctx = PsiContext {
            b,
            z1: z1.clone(),
            budget: budget.clone(),
        };
        let out = psi_realizer(&ctx, x.clone(), eps, om)?;
        let tr = verify_psi("psi", x.as_ref(), b, eps, &out)?;
        if !tr.holds {
            return Err(EvalError::Contract(format!("returned stage fails A at ε = {}", fmt_q(eps))));
        }
        counter.set(counter.get() + 1);
        Ok(out)
    })
}

/// The whole realizer: constants → Φ inputs → Φ → witness and its endpoint check.
pub fn run_realizer(inst: &RealizerInstance, c: &Claim2Constants, budget: &Rc<Budget>) -> Eval<RealizerRun> {
    budget.set_stage("realizer");
    let inputs = claim2_instantiation(inst, c, budget)?;
    let counter = Rc::new(Cell::new(0));
    let psi = checked_psi(inst.b, inst.anchor.clone(), budget, counter.clone());
    let out = phi_realizer(&inputs, &psi)?;
    let n = &out.kp + (inputs.g0p)(&out.w, &out.wp)?.1;
    let gn = inst.g.call(&n)?;
    let gap = exact_dist(inst.x.as_ref(), &n, &inst.x.point(&(&n + &gn))?)?;
    let holds = gap <= &c.eps * &c.eps;
    let report = RealizerReport {
        constants: c.label.clone(),
        epsilon: fmt_q(&c.eps),
        u: fmt_q(&c.u),
        witness_n: n.to_string(),
        g_of_n: gn.to_string(),
        gap_sq: fmt_q(&gap),
        endpoint_holds: holds,
        psi_calls_verified: counter.get(),
        applications: budget.used(),
        phi: out.summary(),
    };
    Ok(RealizerRun {
        output: out,
        report,
        witness: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::schemas::{resolvent_sequence, Schedule};
    use crate::spaces::{h_map, map_library, SolverOptions, Space};

    pub(crate) fn affine_instance(g: NatFn) -> RealizerInstance {
        let space = Space::hilbert_box(1);
        let map = map_library("affine-1d", &serde_json::json!({"slope": "-2", "intercept": "1"})).unwrap();
        let anchor = Point(vec![qi(0)]);
        let sched = Schedule::canonical();
        let x: Rc<dyn PointSeq> = Rc::new(resolvent_sequence(&space, &map, &anchor, &sched, &SolverOptions::default()));
        RealizerInstance {
            x,
            anchor,
            h_t: h_map(&map).unwrap(),
            g,
            alpha: sched.alpha_fn(),
            b: 1,
        }
    }

    #[test]
    fn custom_constants_all_eight_checks() {
        let inst = affine_instance(NatFn::constant(nat(5)));
        let c = Claim2Constants::custom(q(1, 2), q(1, 4), qi(4), qi(8), qi(4));
        let budget = Budget::new(5_000_000);
        let run = run_realizer(&inst, &c, &budget).unwrap();
        assert_eq!(run.output.transcripts.len(), 8);
        assert!(run.output.transcripts.iter().all(|t| t.holds));
        assert!(run.output.h >= run.output.iota);
        assert_eq!(run.output.l, &run.output.k + &run.output.v.m);
        assert!(run.report.psi_calls_verified >= 4);
    }

    #[test]
    fn derived_constants_exhaust_fuel() {
        let inst = affine_instance(NatFn::constant(nat(5)));
        let gamma = Schedule::canonical().gamma_fn();
        let id = crate::moduli::Modulus::identity(crate::moduli::Role::Continuity);
        let eta = crate::moduli::Modulus::hilbert_eta(64);
        let tau = crate::moduli::Modulus::identity(crate::moduli::Role::Smoothness);
        let bundle = ConstantsBundle::new(1, &q(1, 2), &eta, &tau, &id, &gamma).unwrap();
        let c = Claim2Constants::from_bundle(&bundle);
        let err = run_realizer(&inst, &c, &Budget::new(100_000_000)).err().unwrap();
        assert!(err.is_fuel(), "{err}");
    }
}
