//! Φ: from any Ψ meeting its contract and the eight counterfunction families,
//! the ten-tuple (w, k, w', k', v, v', l, l', h, h') with all eight A-instances.

use super::predicate::{a_transcript, evaluate_a, ATranscript, DualTuple, Omega, StageTuple};
use super::psi::PsiOutcome;
use crate::eval::{Eval, EvalError};
use crate::num::{Nat, Q};
use crate::schemas::PointSeq;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

pub type PsiFn = Rc<dyn Fn(Rc<dyn PointSeq>, &Q, &Omega) -> Eval<PsiOutcome>>;
pub type GOne = Rc<dyn Fn(&StageTuple) -> Eval<(DualTuple, Nat)>>;
pub type GTwo = Rc<dyn Fn(&StageTuple, &StageTuple) -> Eval<(DualTuple, Nat)>>;
pub type GThree = Rc<dyn Fn(&StageTuple, &StageTuple, &StageTuple) -> Eval<(DualTuple, Nat)>>;
pub type Rate = Rc<dyn Fn(&StageTuple, &StageTuple) -> Eval<Q>>;
pub type Index = Rc<dyn Fn(&StageTuple, &StageTuple) -> Eval<Nat>>;
pub type Reseq = Rc<dyn Fn(&StageTuple) -> Eval<Rc<dyn PointSeq>>>;

/// The inputs of Φ. Stage tuples carry their number in `m`:
/// `(w,k)` is one tuple, `(v,h)` another.
#[derive(Clone)]
pub struct PhiInputs {
    pub x: Rc<dyn PointSeq>,
    pub b: u64,
    pub u: Q,
    pub u_prime: Rate,
    pub g0: GOne,
    pub g0p: GTwo,
    pub g1: GThree,
    pub g2: GThree,
    pub g1p: GThree,
    pub g2p: GThree,
    pub iota: Index,
    pub phi: Reseq,
}

#[derive(Clone, Debug)]
pub struct PhiOutput {
    pub w: StageTuple,
    pub wp: StageTuple,
    pub v: StageTuple,
    pub vp: StageTuple,
    pub k: Nat,
    pub kp: Nat,
    pub l: Nat,
    pub lp: Nat,
    pub h: Nat,
    pub hp: Nat,
    pub iota: Nat,
    pub transcripts: Vec<ATranscript>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiSummary {
    pub k: String,
    pub k_prime: String,
    pub l: String,
    pub l_prime: String,
    pub h: String,
    pub h_prime: String,
    pub iota: String,
    pub checks: Vec<ATranscript>,
}

impl PhiOutput {
    pub fn summary(&self) -> PhiSummary {
        PhiSummary {
            k: self.k.to_string(),
            k_prime: self.kp.to_string(),
            l: self.l.to_string(),
            l_prime: self.lp.to_string(),
            h: self.h.to_string(),
            h_prime: self.hp.to_string(),
            iota: self.iota.to_string(),
            checks: self.transcripts.clone(),
        }
    }
}

type Shuffle = Rc<dyn Fn(&StageTuple, &StageTuple, &StageTuple) -> Eval<(DualTuple, Nat)>>;

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

pub fn phi_realizer(inp: &PhiInputs, psi: &PsiFn) -> Eval<PhiOutput> {
    let x = inp.x.clone();
    let b = inp.b;

    // Ξ-shuffled families; the third argument carries h̃ (resp. h̃') in `m`.
    let shuffle = |g: GThree, shift: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat>, add: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat>| -> Shuffle {
        let iota = inp.iota.clone();
        Rc::new(move |w, wp, v| {
            let s = shift(w, wp, v, &iota)?;
            let a = add(w, wp, v, &iota)?;
            let (d, n) = g(w, wp, &v.with_m(&v.m + s))?;
            Ok((d, a + n))
        })
    };
    let xi1: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat> = |w, wp, _, i| i(w, wp);
    let xi2: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat> = |w, _, _, _| Ok(w.m.clone());
    let xi2p: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat> = |_, wp, _, _| Ok(wp.m.clone());
    let xi0: fn(&StageTuple, &StageTuple, &StageTuple, &Index) -> Eval<Nat> = |_, _, v, _| Ok(v.m.clone());
    let gt1 = shuffle(inp.g1.clone(), xi1, xi1);
    let gt2 = shuffle(inp.g2.clone(), xi2, xi2);
    let gt3 = shuffle(inp.g2.clone(), xi2, xi0);
    let gt1p = shuffle(inp.g1p.clone(), xi1, xi1);
    let gt2p = shuffle(inp.g2p.clone(), xi2p, xi2p);
    let gt3p = shuffle(inp.g2p.clone(), xi2p, xi0);

    // (g_v, f_v) and a_v
    let g_v: Shuffle = {
        let (x, up, gt1, gt2) = (x.clone(), inp.u_prime.clone(), gt1.clone(), gt2.clone());
        Rc::new(move |w, wp, v| {
            let (d, n) = gt1(w, wp, v)?;
            if !evaluate_a(x.as_ref(), b, &up(w, wp)?, v, &d, &(&v.m + &n))? {
                return Ok((d, n));
            }
            gt2(w, wp, v)
        })
    };
    let a_v = {
        let (x, up, psi) = (x.clone(), inp.u_prime.clone(), psi.clone());
        memo2(move |w, wp| {
            let (w2, wp2, gv) = (w.clone(), wp.clone(), g_v.clone());
            let om = Omega::new(move |s| gv(&w2, &wp2, s));
            Ok(psi(x.clone(), &up(w, wp)?, &om)?.stage)
        })
    };

    // (g_{v'}, f_{v'}) and a_{v'}
    let g_vp: Shuffle = {
        let (phi, up, gt1p, gt2p) = (inp.phi.clone(), inp.u_prime.clone(), gt1p.clone(), gt2p.clone());
        Rc::new(move |w, wp, v| {
            let (d, n) = gt1p(w, wp, v)?;
            if !evaluate_a(phi(w)?.as_ref(), b, &up(w, wp)?, v, &d, &(&v.m + &n))? {
                return Ok((d, n));
            }
            gt2p(w, wp, v)
        })
    };
    let a_vp = {
        let (phi, up, psi) = (inp.phi.clone(), inp.u_prime.clone(), psi.clone());
        memo2(move |w, wp| {
            let (w2, wp2, g) = (w.clone(), wp.clone(), g_vp.clone());
            let om = Omega::new(move |s| g(&w2, &wp2, s));
            Ok(psi(phi(w)?, &up(w, wp)?, &om)?.stage)
        })
    };

    // (g_{w'}, f_{w'}) and a_{w'}
    let g_wp: GTwo = {
        let (phi, g0p, a_vp, u) = (inp.phi.clone(), inp.g0p.clone(), a_vp.clone(), inp.u.clone());
        Rc::new(move |w, wp| {
            let (d, n) = g0p(w, wp)?;
            if !evaluate_a(phi(w)?.as_ref(), b, &u, wp, &d, &(&wp.m + &n))? {
                return Ok((d, n));
            }
            gt3p(w, wp, &a_vp(w, wp)?)
        })
    };
    let a_wp: Rc<dyn Fn(&StageTuple) -> Eval<StageTuple>> = {
        let (phi, psi, u) = (inp.phi.clone(), psi.clone(), inp.u.clone());
        let memo: RefCell<HashMap<u64, StageTuple>> = RefCell::new(HashMap::new());
        Rc::new(move |w| {
            if let Some(s) = memo.borrow().get(&w.key()) {
                return Ok(s.clone());
            }
            let (w2, g) = (w.clone(), g_wp.clone());
            let om = Omega::new(move |s| g(&w2, s));
            let out = psi(phi(w)?, &u, &om)?.stage;
            memo.borrow_mut().insert(w.key(), out.clone());
            Ok(out)
        })
    };

    // (g_w, f_w)
    let g_w: GOne = {
        let (x, g0, a_wp, a_v, u) = (x.clone(), inp.g0.clone(), a_wp.clone(), a_v.clone(), inp.u.clone());
        Rc::new(move |w| {
            let (d, n) = g0(w)?;
            if !evaluate_a(x.as_ref(), b, &u, w, &d, &(&w.m + &n))? {
                return Ok((d, n));
            }
            let wp = a_wp(w)?;
            let v = a_v(w, &wp)?;
            gt3(w, &wp, &v)
        })
    };

    let om = {
        let g = g_w.clone();
        Omega::new(move |s| g(s))
    };
    let w = psi(x.clone(), &inp.u, &om)?.stage;
    let wp = a_wp(&w)?;
    let v = a_v(&w, &wp)?;
    let vp = a_vp(&w, &wp)?;

    let iota = (inp.iota)(&w, &wp)?;
    let (k, kp) = (w.m.clone(), wp.m.clone());
    let h = &v.m + &iota;
    let hp = &vp.m + &iota;
    let l = &k + &v.m;
    let lp = &kp + &vp.m;

    let xw = (inp.phi)(&w)?;
    let up = (inp.u_prime)(&w, &wp)?;
    let u = inp.u.clone();
    let mut tr = Vec::new();
    let mut check = |label: &str, seq: &dyn PointSeq, delta: &Q, st: &StageTuple, (d, n): (DualTuple, Nat), base: &Nat| -> Eval<()> {
        tr.push(a_transcript(label, seq, b, delta, st, &d, &(base + n))?);
        Ok(())
    };
    check("(i)", x.as_ref(), &u, &w, (inp.g0)(&w)?, &k)?;
    check("(ii)", xw.as_ref(), &u, &wp, (inp.g0p)(&w, &wp)?, &kp)?;
    check("(iii)", x.as_ref(), &up, &v, (inp.g1)(&w, &wp, &v.with_m(h.clone()))?, &h)?;
    let g2l = (inp.g2)(&w, &wp, &v.with_m(l.clone()))?;
    check("(iv)", x.as_ref(), &up, &v, g2l.clone(), &l)?;
    check("(v)", x.as_ref(), &u, &w, g2l, &l)?;
    check("(vi)", xw.as_ref(), &up, &vp, (inp.g1p)(&w, &wp, &vp.with_m(hp.clone()))?, &hp)?;
    let g2pl = (inp.g2p)(&w, &wp, &vp.with_m(lp.clone()))?;
    check("(vii)", xw.as_ref(), &up, &vp, g2pl.clone(), &lp)?;
    check("(viii)", xw.as_ref(), &u, &wp, g2pl, &lp)?;

    let failed: Vec<String> = tr.iter().filter(|t| !t.holds).map(|t| t.label.clone()).collect();
    if !failed.is_empty() {
        return Err(EvalError::Contract(format!("A-instances {failed:?} fail after construction")));
    }
    Ok(PhiOutput {
        w: w.clone(),
        wp,
        v,
        vp,
        k,
        kp,
        l,
        lp,
        h,
        hp,
        iota,
        transcripts: tr,
    })
}
