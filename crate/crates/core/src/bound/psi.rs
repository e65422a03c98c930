//! Realizer for the "least limsup up to ε/2" statement: iterate the level
//! functionals built from Ω and stop at the first stage where A holds.

use super::predicate::{a_transcript, evaluate_a, k_of, ATranscript, DualTuple, Omega, StageFn, StageTuple};
use crate::approx_limsup::{eps_limsup_witness, Counterfn, FnOracle};
use crate::eval::{fresh_key, key_of, Budget, Eval, EvalError, NatFn};
use crate::num::{ceil_nat, fmt_q, nat, qi, Nat, Q};
use crate::schemas::PointSeq;
use crate::spaces::Point;
use num_traits::ToPrimitive;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

pub struct PsiContext {
    pub b: u64,
    /// The arbitrary starting point of the descent.
    pub z1: Point,
    pub budget: Rc<Budget>,
}

#[derive(Clone, Debug)]
pub struct PsiOutcome {
    pub stage: StageTuple,
    /// Ω at the returned stage.
    pub dual: DualTuple,
    pub n: Nat,
    pub i: usize,
    pub index_bound: usize,
    pub k: Nat,
    pub limsup_fallback: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiSummary {
    pub i: usize,
    pub index_bound: usize,
    pub k: String,
    pub p: String,
    pub m: String,
}

impl PsiOutcome {
    pub fn summary(&self) -> PsiSummary {
        PsiSummary {
            i: self.i,
            index_bound: self.index_bound,
            k: self.k.to_string(),
            p: self.stage.p.to_string(),
            m: self.stage.m.to_string(),
        }
    }
}

/// `‖x_n − z‖²` as an exact rational.
pub fn exact_dist(x: &dyn PointSeq, n: &Nat, z: &Point) -> Eval<Q> {
    let iv = x.dist_sq_to(n, z)?;
    if !iv.is_exact() {
        return Err(EvalError::Indeterminate(format!("distance at index {n} is not exact")));
    }
    Ok(iv.lo)
}

pub fn require_exact(x: &dyn PointSeq) -> Eval<()> {
    if !x.space().is_hilbert() {
        return Err(EvalError::Domain("realizer mode needs the exact p = 2 path; use bound-only mode".into()));
    }
    Ok(())
}

type LevelMemo = Rc<RefCell<HashMap<(usize, u64), (Nat, Nat)>>>;

fn levels(omega: &Omega, count: usize, budget: &Rc<Budget>) -> Vec<(StageFn, StageFn)> {
    let run = fresh_key();
    let memo: LevelMemo = Rc::new(RefCell::new(HashMap::new()));
    let mut out = vec![(StageFn::zero(), StageFn::zero())];
    for x in 0..count {
        let (pm, pu) = out[x].clone();
        let eval: Rc<dyn Fn(&Nat, &Point, &NatFn, &Nat) -> Eval<(Nat, Nat)>> = {
            let (omega, memo, budget) = (omega.clone(), memo.clone(), budget.clone());
            Rc::new(move |p, y, l, m| {
                let key = (x, key_of(&(p, y, l.key(), m)));
                if let Some(v) = memo.borrow().get(&key) {
                    return Ok(v.clone());
                }
                budget.tick()?;
                let _g = budget.enter()?;
                let st = StageTuple {
                    ut: pm.clone(),
                    nt: pu.clone(),
                    p: p.clone(),
                    y: y.clone(),
                    l: l.clone(),
                    m: m.clone(),
                };
                let (d, n) = omega.call(&st)?;
                let v = (d.u, n);
                memo.borrow_mut().insert(key, v.clone());
                Ok(v)
            })
        };
        let e2 = eval.clone();
        let mk = StageFn::new(key_of(&("psi-M", run, x + 1)), move |p, y, l, m| Ok(eval(p, y, l, m)?.0));
        let uk = StageFn::new(key_of(&("psi-U", run, x + 1)), move |p, y, l, m| Ok(e2(p, y, l, m)?.1));
        out.push((mk, uk));
    }
    out
}

/// `Ψ(x, ε, Ω)`.
pub fn psi_realizer(ctx: &PsiContext, x: Rc<dyn PointSeq>, eps: &Q, omega: &Omega) -> Eval<PsiOutcome> {
    require_exact(x.as_ref())?;
    let b = ctx.b;
    let budget = &ctx.budget;
    let big_i = ceil_nat(&(qi(2 * (b * b) as i64) / eps));
    budget.require(&big_i, "descent stages")?;
    let big_i = big_i
        .to_usize()
        .ok_or_else(|| EvalError::Contract("stage count exceeds memory".into()))?;
    let k = k_of(eps);
    let lv = levels(omega, big_i + 1, budget);

    let (top_m, top_u) = lv[big_i + 1].clone();
    let z1 = ctx.z1.clone();
    let xs = x.clone();
    let zz = z1.clone();
    let oracle = FnOracle::new(nat(b * b), move |n| exact_dist(xs.as_ref(), n, &zz));
    let tag = fresh_key();
    let (za, zb) = (z1.clone(), z1.clone());
    let ucf = Counterfn::new(format!("psi-Ubar#{tag:x}"), move |f, y, n| top_u.call(n, &za, f, y));
    let mcf = Counterfn::new(format!("psi-Mbar#{tag:x}"), move |f, y, n| top_m.call(n, &zb, f, y));
    let w = eps_limsup_witness(&nat(b * b), &k, &oracle, &ucf, &mcf, budget)?;

    let mut st = StageTuple {
        ut: lv[big_i].0.clone(),
        nt: lv[big_i].1.clone(),
        p: w.p.clone(),
        y: z1,
        l: w.n.clone(),
        m: w.t.clone(),
    };
    for i in 0..big_i {
        budget.tick()?;
        let (d, n) = omega.call(&st)?;
        let t = &st.m + &n;
        if evaluate_a(x.as_ref(), b, eps, &st, &d, &t)? {
            return Ok(PsiOutcome {
                stage: st,
                dual: d,
                n,
                i,
                index_bound: big_i,
                k,
                limsup_fallback: w.fallback,
            });
        }
        let (m, u) = lv[big_i - (i + 1)].clone();
        st = StageTuple {
            ut: m,
            nt: u,
            p: d.r,
            y: d.z,
            l: d.lt,
            m: d.mt,
        };
    }
    Err(EvalError::Contract(format!(
        "no stage below {big_i} satisfies A at ε = {}",
        fmt_q(eps)
    )))
}

/// Re-checks the returned stage with the clause-by-clause evaluator.
pub fn verify_psi(label: &str, x: &dyn PointSeq, b: u64, eps: &Q, out: &PsiOutcome) -> Eval<ATranscript> {
    a_transcript(label, x, b, eps, &out.stage, &out.dual, &(&out.stage.m + &out.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{nat_to_q, q};
    use crate::spaces::Space;

    struct Closed(Space);

    impl PointSeq for Closed {
        fn point(&self, n: &Nat) -> Eval<Point> {
            let v = nat_to_q(n);
            Ok(Point(vec![&v / (qi(3) * &v + qi(1))]))
        }
        fn space(&self) -> &Space {
            &self.0
        }
    }

    struct Const(Space, Point);

    impl PointSeq for Const {
        fn point(&self, _: &Nat) -> Eval<Point> {
            Ok(self.1.clone())
        }
        fn space(&self) -> &Space {
            &self.0
        }
    }

    fn ctx(z1: Point) -> PsiContext {
        PsiContext {
            b: 1,
            z1,
            budget: Budget::new(1_000_000),
        }
    }

    #[test]
    fn constant_sequence_constant_omega() {
        let y = Point(vec![q(1, 2)]);
        let x: Rc<dyn PointSeq> = Rc::new(Const(Space::hilbert_box(1), y.clone()));
        let om = Omega::new(|_| {
            Ok((
                DualTuple {
                    r: nat(2),
                    z: Point(vec![qi(1)]),
                    lt: NatFn::constant(nat(3)),
                    mt: nat(4),
                    u: nat(1),
                },
                nat(5),
            ))
        });
        let c = ctx(Point(vec![qi(0)]));
        let out = psi_realizer(&c, x.clone(), &qi(1), &om).unwrap();
        assert!(out.i < out.index_bound);
        assert!(out.stage.p <= nat(5));
        assert!(verify_psi("const", x.as_ref(), 1, &qi(1), &out).unwrap().holds);
    }

    #[test]
    fn adversarial_omega_still_verified() {
        // Ω proposes points whose limsup looks smaller, using the stage data
        let x: Rc<dyn PointSeq> = Rc::new(Closed(Space::hilbert_box(1)));
        for eps in [qi(1), q(1, 2)] {
            let xs = x.clone();
            let om = Omega::new(move |st| {
                let z = Point(vec![q(1, 3)]);
                let far = st.l.call(&st.m)? + &st.m + 1u32;
                let _ = xs.point(&far)?;
                Ok((
                    DualTuple {
                        r: nat(0),
                        z,
                        lt: NatFn::from_fn(7, |n| n + 1u32),
                        mt: st.m.clone() + 1u32,
                        u: st.p.clone(),
                    },
                    far,
                ))
            });
            let c = ctx(Point(vec![qi(1)]));
            let out = psi_realizer(&c, x.clone(), &eps, &om).unwrap();
            assert!(verify_psi("adv", x.as_ref(), 1, &eps, &out).unwrap().holds);
        }
    }
}
