//! The majorized cascade: starred limsup functionals, Ψ*, the starred
//! counterfunction families and the final bound Θ(ε, g) = Θ'(ε/2, g).
//!
//! Points are majorized by `b`, so every value here is a natural number or a
//! function built from naturals.

use super::constants::ConstantsBundle;
use super::majorize::{alpha_m, g_m};
use crate::eval::{fresh_key, key_of, Budget, Eval, EvalError, NatFn};
use crate::moduli::Modulus;
use crate::num::{ceil_div_sqrt, ceil_nat, fmt_q, nat, q_min, qi, Nat, Q};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

type StarInner = Rc<dyn Fn(&Nat, &Nat, &NatFn, &Nat) -> Eval<Nat>>;

/// A stage functional `(p, y, L, m) ↦ ℕ` with `y` majorized by a natural.
#[derive(Clone)]
pub struct StarFn {
    key: u64,
    f: StarInner,
}

impl StarFn {
    pub fn new(key: u64, f: impl Fn(&Nat, &Nat, &NatFn, &Nat) -> Eval<Nat> + 'static) -> Self {
        StarFn { key, f: Rc::new(f) }
    }

    pub fn zero() -> Self {
        StarFn::new(key_of("star-zero"), |_, _, _, _| Ok(Nat::zero()))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn call(&self, p: &Nat, y: &Nat, l: &NatFn, m: &Nat) -> Eval<Nat> {
        (self.f)(p, y, l, m)
    }
}

/// Starred stage tuple `(M̃, Ũ, p, y, L, m)`.
#[derive(Clone)]
pub struct Star {
    pub mf: StarFn,
    pub uf: StarFn,
    pub p: Nat,
    pub y: Nat,
    pub l: NatFn,
    pub m: Nat,
}

impl Star {
    /// Omits `L`: no starred Ω below ever evaluates the `L` component.
    pub fn key(&self) -> u64 {
        key_of(&(self.mf.key, self.uf.key, &self.p, &self.y, &self.m))
    }

    fn with_m(&self, m: Nat) -> Star {
        Star { m, ..self.clone() }
    }
}

/// Starred Ω output `(r, z, L̃, m̃, u)`; the sixth component travels beside it.
#[derive(Clone)]
pub struct StarDual {
    pub r: Nat,
    pub z: Nat,
    pub lt: NatFn,
    pub mt: Nat,
    pub u: Nat,
}

type Out = (StarDual, Nat);
type StarOmega = Rc<dyn Fn(&Star) -> Eval<Out>>;
type Cf = (u64, Rc<dyn Fn(&NatFn, &Nat, &Nat) -> Eval<Nat>>);

fn nmax(a: Nat, b: Nat) -> Nat {
    if a >= b {
        a
    } else {
        b
    }
}

fn out_max((a, n): Out, (b, m): Out) -> Out {
    (
        StarDual {
            r: nmax(a.r, b.r),
            z: nmax(a.z, b.z),
            lt: a.lt.max(&b.lt),
            mt: nmax(a.mt, b.mt),
            u: nmax(a.u, b.u),
        },
        nmax(n, m),
    )
}

type Nu1Single = Rc<dyn Fn(&Nat) -> Eval<Q>>;

/// The constants the cascade consumes, already taken at the inner ε.
#[derive(Clone)]
pub struct ThetaConstants {
    pub b: u64,
    pub eps: Q,
    pub u: Q,
    pub nu2: Q,
    /// `c ↦ ½ψ(θ̃(β(c)))`.
    pub nu1_single: Nu1Single,
    pub label: String,
}

impl ThetaConstants {
    pub fn from_bundle(c: &ConstantsBundle) -> Self {
        let cb = c.clone();
        ThetaConstants {
            b: c.b,
            eps: c.eps.clone(),
            u: c.u.clone(),
            nu2: c.nu2.clone(),
            nu1_single: Rc::new(move |n| cb.nu1_single(n)),
            label: "derived".into(),
        }
    }

    /// Toy constants for exercising the cascade; they certify nothing.
    pub fn custom(b: u64, u: Q, nu2: Q, nu1_single: impl Fn(&Nat) -> Q + 'static) -> Self {
        ThetaConstants {
            b,
            eps: Q::zero(),
            u,
            nu2,
            nu1_single: Rc::new(move |c| Ok(nu1_single(c))),
            label: "custom".into(),
        }
    }
}

#[derive(Clone)]
pub struct BoundParams {
    pub b: u64,
    pub eta: Modulus,
    pub tau: Modulus,
    pub theta: Modulus,
    pub alpha: NatFn,
    pub gamma: NatFn,
    pub eps: Q,
    pub g: NatFn,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaOutcome {
    pub theta: String,
    pub k_prime: String,
    pub f0: String,
    pub applications: u64,
    pub max_depth: usize,
    pub stage: String,
    pub constants: String,
    #[serde(skip)]
    pub value: Nat,
}

struct Cx {
    b: u64,
    bb: Nat,
    c: ThetaConstants,
    gm: NatFn,
    am: NatFn,
    budget: Rc<Budget>,
    wmemo: RefCell<HashMap<u64, Nat>>,
    lsmemo: RefCell<HashMap<u64, (NatFn, Nat)>>,
    lvmemo: RefCell<HashMap<u64, (Nat, Nat)>>,
    nu1_prefix: RefCell<Vec<Q>>,
    gmemo: RefCell<HashMap<u64, Out>>,
    psimemo: RefCell<HashMap<u64, Star>>,
}

type Ctx = Rc<Cx>;

fn to_usize(n: &Nat, what: &str) -> Eval<usize> {
    n.to_usize()
        .ok_or_else(|| EvalError::Contract(format!("{what} {n} exceeds addressable memory")))
}

/// Entries per memo table before it is dropped and refilled on demand.
const MEMO_CAP: usize = 400_000;

fn memo_get<V: Clone>(m: &RefCell<HashMap<u64, V>>, k: u64, f: impl FnOnce() -> Eval<V>) -> Eval<V> {
    if let Some(v) = m.borrow().get(&k) {
        return Ok(v.clone());
    }
    let v = f()?;
    let mut t = m.borrow_mut();
    if t.len() >= MEMO_CAP {
        t.clear();
    }
    t.insert(k, v.clone());
    Ok(v)
}

/// `W*(n)` as a function; evaluation recurses down to `W*(0) = O`.
fn w_star(cx: &Ctx, u: &Cf, n: Nat) -> NatFn {
    if n.is_zero() {
        return NatFn::zero();
    }
    let (cx2, u2) = (cx.clone(), u.clone());
    let key = key_of(&("W*", u.0, &n));
    NatFn::counted(&cx.budget, key, move |y| {
        memo_get(&cx2.wmemo, key_of(&(key, y)), || {
            let prev = &n - 1u32;
            (u2.1)(&w_star(&cx2, &u2, prev.clone()), y, &prev)
        })
    })
}

/// `(N*, T*) U* M* k*`.
fn nt_star(cx: &Ctx, u: &Cf, m: &Cf, k: &Nat) -> Eval<(NatFn, Nat)> {
    memo_get(&cx.lsmemo, key_of(&("NT*", u.0, m.0, k)), || {
        let s = &cx.bb * (k + 1u32);
        cx.budget.require(&s, "starred limsup recursion")?;
        let n = w_star(cx, u, s.clone());
        let mut j = Nat::zero();
        for _ in 0..to_usize(&s, "limsup length")? {
            cx.budget.tick()?;
            j = (m.1)(&n, &j, &s)?;
        }
        Ok((n, j))
    })
}

/// The level functionals `(M*, U*)(Ω*, x)` for `x ≤ count`.
fn levels(cx: &Ctx, okey: u64, omega: &StarOmega, count: usize) -> Vec<(StarFn, StarFn)> {
    let mut out = vec![(StarFn::zero(), StarFn::zero())];
    for x in 0..count {
        let (pm, pu) = out[x].clone();
        let eval: Rc<dyn Fn(&Nat, &Nat, &NatFn, &Nat) -> Eval<(Nat, Nat)>> = {
            let (cx, omega) = (cx.clone(), omega.clone());
            Rc::new(move |p, y, l, m| {
                memo_get(&cx.lvmemo, key_of(&(okey, x, p, y, m)), || {
                    cx.budget.tick()?;
                    let _g = cx.budget.enter()?;
                    let st = Star {
                        mf: pm.clone(),
                        uf: pu.clone(),
                        p: p.clone(),
                        y: y.clone(),
                        l: l.clone(),
                        m: m.clone(),
                    };
                    let (d, n) = omega(&st)?;
                    if !d.u.is_zero() {
                        return Err(EvalError::Contract(format!("M* level {} is {} instead of 0", x + 1, d.u)));
                    }
                    Ok((d.u, n))
                })
            })
        };
        // Every starred Ω returns 0 in its fifth slot (asserted above on each
        // evaluated call), so the M-levels are read off without evaluating Ω.
        let mk = StarFn::new(key_of("M*-zero"), |_, _, _, _| Ok(Nat::zero()));
        let uk = StarFn::new(key_of(&("U*", okey, x + 1)), move |p, y, l, m| Ok(eval(p, y, l, m)?.1));
        out.push((mk, uk));
    }
    out
}

/// `Ψ*(l*, Ω*) = Ψ̃*(l*, Ω*, I*(l*))`.
fn psi_star(cx: &Ctx, l: &Nat, omega: StarOmega) -> Eval<Star> {
    let okey = fresh_key();
    let b = nat(cx.b);
    let big_i = &cx.bb * (l + 1u32) * 2u32;
    cx.budget.require(&big_i, "Ψ* stages")?;
    let n_i = to_usize(&big_i, "stage count")?;
    let lv = levels(cx, okey, &omega, n_i + 1);
    let (tm, tu) = lv[n_i + 1].clone();
    let (bu, bm) = (b.clone(), b.clone());
    let ubar: Cf = (
        key_of(&("Ubar*", okey)),
        Rc::new(move |f, y, n| tu.call(n, &bu, f, y)),
    );
    let mbar: Cf = (
        key_of(&("Mbar*", okey)),
        Rc::new(move |f, y, n| tm.call(n, &bm, f, y)),
    );
    let (n0, t0) = nt_star(cx, &ubar, &mbar, &(l * 4u32 + 3u32))?;
    let (mi, ui) = lv[n_i].clone();
    let s0 = Star {
        mf: mi.clone(),
        uf: ui.clone(),
        p: &cx.bb * (l + 1u32) * 4u32,
        y: b,
        l: n0,
        m: t0,
    };
    let mut s = s0.clone();
    for x in 0..n_i {
        cx.budget.tick()?;
        let (d, _) = omega(&s)?;
        if !d.u.is_zero() {
            return Err(EvalError::Contract(format!("Ω*₅ is {} at stage {x}", d.u)));
        }
        let next = Star {
            mf: mi.clone(),
            uf: ui.clone(),
            p: nmax(s0.p.clone(), d.r),
            y: nmax(s0.y.clone(), d.z),
            l: s0.l.max(&d.lt),
            m: nmax(s0.m.clone(), d.mt),
        };
        if next.p < s.p || next.y < s.y || next.m < s.m {
            return Err(EvalError::Contract(format!("Ψ̃* not monotone at stage {}", x + 1)));
        }
        s = next;
    }
    Ok(s)
}

fn cf_u1(cx: &Ctx, w: &Star) -> Cf {
    let (w, b) = (w.clone(), nat(cx.b));
    (
        key_of(&("U1*", w.key())),
        Rc::new(move |f, y, n| Ok(nmax(f.call(&w.m)?, w.uf.call(n, &b, f, y)?))),
    )
}

fn cf_m1(cx: &Ctx, w: &Star) -> Cf {
    let (w, b) = (w.clone(), nat(cx.b));
    (
        key_of(&("M1*", w.key())),
        Rc::new(move |f, y, n| Ok(nmax(w.m.clone(), w.mf.call(n, &b, f, y)?))),
    )
}

/// `(U₂*, M₂*)` over `w̄` and `v`, with the rank taken from `v.m`.
fn cf_2(cx: &Ctx, w: &Star, v: &Star) -> (Cf, Cf) {
    let b = nat(cx.b);
    let (w1, v1, b1) = (w.clone(), v.clone(), b.clone());
    let u: Cf = (
        key_of(&("U2*", w.key(), v.key())),
        Rc::new(move |f, y, n| {
            let a = nmax(f.call(&v1.m)?, w1.uf.call(n, &b1, f, y)?);
            Ok(nmax(a, v1.uf.call(n, &b1, f, y)?))
        }),
    );
    let (w2, v2) = (w.clone(), v.clone());
    let m: Cf = (
        key_of(&("M2*", w.key(), v.key())),
        Rc::new(move |f, y, n| {
            let a = nmax(v2.m.clone(), w2.mf.call(n, &b, f, y)?);
            Ok(nmax(a, v2.mf.call(n, &b, f, y)?))
        }),
    );
    (u, m)
}

/// `(b²(kk+1), b, N*, T*, 0)` with `f = N*(rank)`.
fn g_shape(cx: &Ctx, u: &Cf, m: &Cf, kk: &Nat, rank: &Nat) -> Eval<Out> {
    let (n, t) = nt_star(cx, u, m, kk)?;
    let f = n.call(rank)?;
    Ok((
        StarDual {
            r: &cx.bb * (kk + 1u32),
            z: nat(cx.b),
            lt: n,
            mt: t,
            u: Nat::zero(),
        },
        f,
    ))
}

fn g0(cx: &Ctx, w: &Star) -> Eval<Out> {
    memo_get(&cx.gmemo, key_of(&("g0*", w.key())), || {
        let kk = ceil_nat(&(qi(4) / &cx.c.u));
        g_shape(cx, &cf_u1(cx, w), &cf_m1(cx, w), &kk, &w.m)
    })
}

/// `½ min_{c ≤ bound} ψ(θ̃(β(c)))`, via a cached running minimum.
fn nu1_star(cx: &Ctx, m: &Nat, n: &Nat) -> Eval<Q> {
    let reach = nmax(m.clone(), n + cx.gm.call(n)?);
    cx.budget.require(&reach, "ν₁* minimum")?;
    let top = to_usize(&reach, "ν₁* range")?;
    let mut pre = cx.nu1_prefix.borrow_mut();
    while pre.len() <= top {
        cx.budget.tick()?;
        let v = (cx.c.nu1_single)(&nat(pre.len() as u64))?;
        let next = match pre.last() {
            Some(p) => q_min(p, &v),
            None => v,
        };
        pre.push(next);
    }
    Ok(pre[top].clone())
}

fn k_tilde(cx: &Ctx, w: &Star) -> Eval<Nat> {
    Ok(&w.m + g0(cx, w)?.1)
}

fn nu1_at(cx: &Ctx, w: &Star, wp: &Star) -> Eval<Q> {
    nu1_star(cx, &k_tilde(cx, w)?, &k_tilde(cx, wp)?)
}

fn u_prime(cx: &Ctx, w: &Star, wp: &Star) -> Eval<Q> {
    Ok(q_min(&(nu1_at(cx, w, wp)? / qi(2)), &cx.c.nu2))
}

fn iota(cx: &Ctx, w: &Star, wp: &Star) -> Eval<Nat> {
    let n1 = nu1_at(cx, w, wp)?;
    let b = cx.b as i64;
    let a = ceil_div_sqrt(&qi(2 * b), &n1);
    let c = ceil_nat(&(qi(8 * b * b) / &n1));
    cx.am.call(&nmax(a, c))
}

fn g1(cx: &Ctx, w: &Star, wp: &Star, v: &Star) -> Eval<Out> {
    memo_get(&cx.gmemo, key_of(&("g1*", w.key(), wp.key(), v.key())), || {
        let kk = ceil_nat(&(qi(4) / u_prime(cx, w, wp)?));
        g_shape(cx, &cf_u1(cx, v), &cf_m1(cx, v), &kk, &v.m)
    })
}

/// `wbar` is `w` for the unprimed family and `w'` for the primed one.
fn g2(cx: &Ctx, wbar: &Star, w: &Star, wp: &Star, v: &Star) -> Eval<Out> {
    memo_get(&cx.gmemo, key_of(&("g2*", wbar.key(), w.key(), wp.key(), v.key())), || {
        let kk = ceil_nat(&(qi(4) / q_min(&cx.c.u, &u_prime(cx, w, wp)?)));
        let (u, m) = cf_2(cx, wbar, v);
        g_shape(cx, &u, &m, &kk, &v.m)
    })
}

#[derive(Clone, Copy)]
enum Fam {
    One,
    Two,
    TwoPrimed,
}

#[derive(Clone, Copy)]
enum Xi {
    Iota,
    K,
    Kp,
    H,
}

fn xi(cx: &Ctx, s: Xi, w: &Star, wp: &Star, v: &Star) -> Eval<Nat> {
    match s {
        Xi::Iota => iota(cx, w, wp),
        Xi::K => Ok(w.m.clone()),
        Xi::Kp => Ok(wp.m.clone()),
        Xi::H => Ok(v.m.clone()),
    }
}

/// `Ξ(ξ, ξ')(g, f)`.
fn shuffled(cx: &Ctx, fam: Fam, s: Xi, sp: Xi, w: &Star, wp: &Star, v: &Star) -> Eval<Out> {
    let shift = xi(cx, s, w, wp, v)?;
    let add = xi(cx, sp, w, wp, v)?;
    let v2 = v.with_m(&v.m + shift);
    let (d, n) = match fam {
        Fam::One => g1(cx, w, wp, &v2)?,
        Fam::Two => g2(cx, w, w, wp, &v2)?,
        Fam::TwoPrimed => g2(cx, wp, w, wp, &v2)?,
    };
    Ok((d, add + n))
}

fn ceil_inv(v: &Q) -> Nat {
    ceil_nat(&(qi(1) / v))
}

fn a_v(cx: &Ctx, w: &Star, wp: &Star, primed: bool) -> Eval<Star> {
    memo_get(&cx.psimemo, key_of(&("a_v*", primed, w.key(), wp.key())), || {
        let l = ceil_inv(&u_prime(cx, w, wp)?);
        let (cx2, w2, wp2) = (cx.clone(), w.clone(), wp.clone());
        let om: StarOmega = Rc::new(move |s| {
            let a = shuffled(&cx2, Fam::One, Xi::Iota, Xi::Iota, &w2, &wp2, s)?;
            let b = if primed {
                shuffled(&cx2, Fam::TwoPrimed, Xi::Kp, Xi::Kp, &w2, &wp2, s)?
            } else {
                shuffled(&cx2, Fam::Two, Xi::K, Xi::K, &w2, &wp2, s)?
            };
            Ok(out_max(a, b))
        });
        cx.budget.set_stage(if primed { "a_v'*" } else { "a_v*" });
        psi_star(cx, &l, om)
    })
}

fn a_wp(cx: &Ctx, w: &Star) -> Eval<Star> {
    memo_get(&cx.psimemo, key_of(&("a_w'*", w.key())), || {
        let l = ceil_inv(&cx.c.u);
        let (cx2, w2) = (cx.clone(), w.clone());
        let om: StarOmega = Rc::new(move |s| {
            let a = g0(&cx2, s)?;
            let v = a_v(&cx2, &w2, s, true)?;
            let b = shuffled(&cx2, Fam::TwoPrimed, Xi::Kp, Xi::H, &w2, s, &v)?;
            Ok(out_max(a, b))
        });
        cx.budget.set_stage("a_w'*");
        psi_star(cx, &l, om)
    })
}

fn cascade(cx: &Ctx) -> Eval<(Nat, Nat)> {
    let l = ceil_inv(&cx.c.u);
    let cx2 = cx.clone();
    let om: StarOmega = Rc::new(move |w| {
        let a = g0(&cx2, w)?;
        let wp = a_wp(&cx2, w)?;
        let v = a_v(&cx2, w, &wp, false)?;
        let b = shuffled(&cx2, Fam::Two, Xi::K, Xi::H, w, &wp, &v)?;
        Ok(out_max(a, b))
    });
    cx.budget.set_stage("Ψ*(g_w*)");
    let w = psi_star(cx, &l, om)?;
    let wp = a_wp(cx, &w)?;
    cx.budget.set_stage("f₀*(w'*, k'*)");
    let f0 = g0(cx, &wp)?.1;
    Ok((wp.m, f0))
}

fn context(c: &ThetaConstants, g: &NatFn, alpha: &NatFn, budget: &Rc<Budget>) -> Ctx {
    Rc::new(Cx {
        b: c.b,
        bb: nat(c.b * c.b),
        c: c.clone(),
        gm: g_m(g),
        am: alpha_m(alpha),
        budget: budget.clone(),
        wmemo: RefCell::default(),
        lsmemo: RefCell::default(),
        lvmemo: RefCell::default(),
        nu1_prefix: RefCell::default(),
        gmemo: RefCell::default(),
        psimemo: RefCell::default(),
    })
}

/// `Θ'` for the given constants: `k'* + f₀*(w'*, k'*)`.
pub fn theta_prime(c: &ThetaConstants, g: &NatFn, alpha: &NatFn, budget: &Rc<Budget>) -> Eval<ThetaOutcome> {
    if c.b == 0 {
        return Err(EvalError::Domain("b must be positive".into()));
    }
    let cx = context(c, g, alpha, budget);
    let r = cascade(&cx);
    // memo entries hold closures over the context; drop them to break the cycle
    cx.lsmemo.borrow_mut().clear();
    cx.gmemo.borrow_mut().clear();
    cx.psimemo.borrow_mut().clear();
    let (kp, f0) = r?;
    let value = &kp + &f0;
    Ok(ThetaOutcome {
        theta: value.to_string(),
        k_prime: kp.to_string(),
        f0: f0.to_string(),
        applications: budget.used(),
        max_depth: budget.max_depth_seen(),
        stage: "done".into(),
        constants: format!("{} (u = {})", c.label, fmt_q(&c.u)),
        value,
    })
}

/// The constants at the inner precision ε/2.
pub fn theta_constants(p: &BoundParams) -> Eval<ThetaConstants> {
    let half = &p.eps / qi(2);
    let bundle = ConstantsBundle::new(p.b, &half, &p.eta, &p.tau, &p.theta, &p.gamma)?;
    Ok(ThetaConstants::from_bundle(&bundle))
}

/// `Θ(ε, g) = Θ'(ε/2, g)`.
pub fn theta_bound(p: &BoundParams, fuel: &Nat) -> Eval<ThetaOutcome> {
    if fuel.is_zero() {
        return Err(EvalError::Domain("fuel must be positive".into()));
    }
    if p.eps <= Q::zero() || p.eps > qi(2) {
        return Err(EvalError::Domain(format!("ε = {} outside (0, 2]", fmt_q(&p.eps))));
    }
    let budget = Budget::from_nat(fuel);
    budget.set_stage("constants");
    let c = theta_constants(p)?;
    theta_prime(&c, &p.g, &p.alpha, &budget)
}

/// Default fuel for bound evaluation.
pub fn default_fuel() -> Nat {
    nat(1_000_000_000)
}
