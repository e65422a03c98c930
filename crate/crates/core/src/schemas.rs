//! Iterative sequences: the resolvent path with its schedule data, the
//! reindexing selector, Halpern and Bruck iterations, harmonic rate data.

use crate::eval::{Eval, EvalError, NatFn};
use crate::num::{ceil_nat, fmt_q, nat, nat_to_q, parse_q, q, qi, Nat, Q};
use crate::spaces::{resolvent_point, Interval, MapInstance, Point, SolverOptions, Space};
use num_traits::{One, ToPrimitive, Zero};
use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::rc::Rc;

/// A memoized sequence of points in a space.
pub trait PointSeq {
    fn point(&self, n: &Nat) -> Eval<Point>;
    fn space(&self) -> &Space;

    fn point_u64(&self, n: u64) -> Eval<Point> {
        self.point(&nat(n))
    }

    /// `‖x_n − z‖²` as an interval (exact on the Hilbert path).
    fn dist_sq_to(&self, n: &Nat, z: &Point) -> Eval<Interval> {
        let x = self.point(n)?;
        self.space().dist_sq(&x, z).map_err(|e| EvalError::Domain(e.to_string()))
    }
}

type QFn = Rc<dyn Fn(&Nat) -> Q>;
type NFn = Rc<dyn Fn(&Nat) -> Nat>;

/// `(t_n, α, γ)`.
#[derive(Clone)]
pub struct Schedule {
    pub name: String,
    t: QFn,
    alpha: NFn,
    gamma: NFn,
}

impl std::fmt::Debug for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Schedule({})", self.name)
    }
}

impl Schedule {
    pub fn new(
        name: impl Into<String>,
        t: impl Fn(&Nat) -> Q + 'static,
        alpha: impl Fn(&Nat) -> Nat + 'static,
        gamma: impl Fn(&Nat) -> Nat + 'static,
    ) -> Self {
        Schedule {
            name: name.into(),
            t: Rc::new(t),
            alpha: Rc::new(alpha),
            gamma: Rc::new(gamma),
        }
    }

    /// `t_n = 1 − 1/(n+1)`, `α(n) = n`, `γ(n) = n+1`. `t_0 = 0` puts `x_0` at the anchor.
    pub fn canonical() -> Self {
        Schedule::new(
            "canonical",
            |n| nat_to_q(n) / nat_to_q(&(n + 1u32)),
            |n| n.clone(),
            |n| n + 1u32,
        )
    }

    /// `t_n = 1 − 1/(n+2)`, `α(n) = n`, `γ(n) = n+2`: every term in (0,1).
    pub fn shifted() -> Self {
        Schedule::new(
            "shifted",
            |n| nat_to_q(&(n + 1u32)) / nat_to_q(&(n + 2u32)),
            |n| n.clone(),
            |n| n + 2u32,
        )
    }

    /// CSV rows `t[,alpha,gamma]` for `n = 0, 1, …`; indices past the table use
    /// the shifted schedule.
    pub fn from_table(path: &Path) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| e.to_string())?;
        let mut rows: Vec<(Q, Option<Nat>, Option<Nat>)> = vec![];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let Ok(t) = parse_q(&rec[0]) else {
                if rows.is_empty() {
                    continue;
                }
                return Err(format!("bad schedule row {rec:?}"));
            };
            let a = rec.get(1).and_then(|s| s.parse::<Nat>().ok());
            let g = rec.get(2).and_then(|s| s.parse::<Nat>().ok());
            rows.push((t, a, g));
        }
        let rows = Rc::new(rows);
        let fb = Schedule::shifted();
        let (r1, r2, r3) = (rows.clone(), rows.clone(), rows);
        let (f1, f2, f3) = (fb.clone(), fb.clone(), fb);
        Ok(Schedule::new(
            format!("table:{}", path.display()),
            move |n| match n.to_usize().and_then(|i| r1.get(i)) {
                Some(r) => r.0.clone(),
                None => f1.t(n),
            },
            move |n| match n.to_usize().and_then(|i| r2.get(i)).and_then(|r| r.1.clone()) {
                Some(a) => a,
                None => f2.alpha(n).max(nat(r2.len() as u64)),
            },
            move |n| match n.to_usize().and_then(|i| r3.get(i)).and_then(|r| r.2.clone()) {
                Some(g) => g,
                None => f3.gamma(n),
            },
        ))
    }

    pub fn t(&self, n: &Nat) -> Q {
        (self.t)(n)
    }

    pub fn alpha(&self, n: &Nat) -> Nat {
        (self.alpha)(n)
    }

    pub fn gamma(&self, n: &Nat) -> Nat {
        (self.gamma)(n)
    }

    pub fn alpha_fn(&self) -> NatFn {
        let a = self.alpha.clone();
        NatFn::from_fn(crate::eval::key_of(&("alpha", &self.name)), move |n| a(n))
    }

    pub fn gamma_fn(&self) -> NatFn {
        let g = self.gamma.clone();
        NatFn::from_fn(crate::eval::key_of(&("gamma", &self.name)), move |n| g(n))
    }

    /// Checks `t_m ≥ 1 − 1/(n+1)` for `m ∈ [α(n), α(n)+lookahead]` and
    /// `t_n ≤ 1 − 1/γ(n)`, `0 ≤ t_n < 1` for `n ∈ [from, to]`. Returns violations.
    pub fn check_contracts(&self, from: u64, to: u64, lookahead: u64) -> Vec<String> {
        let mut out = vec![];
        for n in from..=to {
            let nn = nat(n);
            let tn = self.t(&nn);
            if tn < Q::zero() || tn >= Q::one() {
                out.push(format!("t_{n} = {} outside [0,1)", fmt_q(&tn)));
            }
            let g = self.gamma(&nn);
            if g.is_zero() || tn > Q::one() - Q::one() / nat_to_q(&g) {
                out.push(format!("t_{n} > 1 − 1/γ({n})"));
            }
            let lo = Q::one() - q(1, n as i64 + 1);
            let a = self.alpha(&nn);
            for m in 0..=lookahead {
                let mm = &a + m;
                if self.t(&mm) < lo {
                    out.push(format!("t_{mm} < 1 − 1/{} though {mm} ≥ α({n})", n + 1));
                    break;
                }
            }
        }
        out
    }
}

/// `n ↦ x_{t_n}`, memoized.
pub struct ResolventPath {
    pub space: Space,
    pub map: MapInstance,
    pub anchor: Point,
    pub schedule: Schedule,
    pub opts: SolverOptions,
    memo: RefCell<HashMap<Nat, Point>>,
}

pub fn resolvent_sequence(space: &Space, map: &MapInstance, x: &Point, schedule: &Schedule, opts: &SolverOptions) -> ResolventPath {
    ResolventPath {
        space: space.clone(),
        map: map.clone(),
        anchor: x.clone(),
        schedule: schedule.clone(),
        opts: opts.clone(),
        memo: RefCell::new(HashMap::new()),
    }
}

impl ResolventPath {
    /// `‖x_n − Tx_n‖`.
    pub fn residual(&self, n: &Nat) -> Eval<Interval> {
        let x = self.point(n)?;
        let tx = self.map.apply(&x).map_err(|e| EvalError::Solver(e.to_string()))?;
        self.space.norm(&x.sub(&tx)).map_err(|e| EvalError::Domain(e.to_string()))
    }

    /// `‖x_n − Tx_n‖ ≤ (1−t_n)·b + 2·tol`.
    pub fn residual_law_holds(&self, n: &Nat) -> Eval<bool> {
        let r = self.residual(n)?;
        let bound = (Q::one() - self.schedule.t(n)) * qi(self.space.b as i64) + qi(2) * &self.opts.tol;
        Ok(r.hi <= bound)
    }
}

impl PointSeq for ResolventPath {
    fn point(&self, n: &Nat) -> Eval<Point> {
        if let Some(p) = self.memo.borrow().get(n) {
            return Ok(p.clone());
        }
        let t = self.schedule.t(n);
        let p = resolvent_point(&self.space, &self.map, &self.anchor, &t, &self.opts)
            .map_err(|e| EvalError::Solver(format!("index {n}: {e}")))?;
        self.memo.borrow_mut().insert(n.clone(), p.clone());
        Ok(p)
    }

    fn space(&self) -> &Space {
        &self.space
    }
}

/// `s_{p,g}(n)`: `n` if `‖x_{n+g(n)} − p‖ ≤ ‖x_n − p‖`, else `n + g(n)`.
pub fn s_selector(p: &Point, g: &NatFn, seq: &dyn PointSeq, n: &Nat) -> Eval<Nat> {
    let m = n + g.call(n)?;
    let far = seq.dist_sq_to(&m, p)?;
    let near = seq.dist_sq_to(n, p)?;
    match far.le(&near) {
        Some(true) => Ok(n.clone()),
        Some(false) => Ok(m),
        None => Err(EvalError::Indeterminate(format!("selector comparison at n = {n}"))),
    }
}

/// `x^p_n = x_{s_{p,g}(n)}`.
pub struct Reindexed {
    pub base: Rc<dyn PointSeq>,
    pub p: Point,
    pub g: NatFn,
}

impl Reindexed {
    pub fn index(&self, n: &Nat) -> Eval<Nat> {
        s_selector(&self.p, &self.g, self.base.as_ref(), n)
    }
}

impl PointSeq for Reindexed {
    fn point(&self, n: &Nat) -> Eval<Point> {
        let i = self.index(n)?;
        self.base.point(&i)
    }

    fn space(&self) -> &Space {
        self.base.space()
    }
}

/// Memoizes `‖x_n − z‖²` on top of another sequence.
pub struct DistCached {
    inner: Rc<dyn PointSeq>,
    memo: RefCell<HashMap<(Nat, Point), Interval>>,
}

impl DistCached {
    pub fn wrap(inner: Rc<dyn PointSeq>) -> Rc<dyn PointSeq> {
        Rc::new(DistCached {
            inner,
            memo: RefCell::new(HashMap::new()),
        })
    }
}

impl PointSeq for DistCached {
    fn point(&self, n: &Nat) -> Eval<Point> {
        self.inner.point(n)
    }

    fn space(&self) -> &Space {
        self.inner.space()
    }

    fn dist_sq_to(&self, n: &Nat, z: &Point) -> Eval<Interval> {
        let key = (n.clone(), z.clone());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = self.inner.dist_sq_to(n, z)?;
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }
}

/// A sequence given by a one-step recursion, memoized as a growing prefix.
pub struct IterSeq {
    space: Space,
    offset: u64,
    step: Box<dyn Fn(u64, &Point) -> Eval<Point>>,
    terms: RefCell<Vec<Point>>,
    /// Prefix cap; indices past it are refused.
    pub max_index: u64,
}

impl IterSeq {
    fn new(space: &Space, offset: u64, first: Point, step: impl Fn(u64, &Point) -> Eval<Point> + 'static) -> Self {
        IterSeq {
            space: space.clone(),
            offset,
            step: Box::new(step),
            terms: RefCell::new(vec![first]),
            max_index: 1_000_000,
        }
    }
}

impl PointSeq for IterSeq {
    fn point(&self, n: &Nat) -> Eval<Point> {
        let n = n
            .to_u64()
            .filter(|&v| v >= self.offset && v <= self.max_index)
            .ok_or_else(|| EvalError::Domain(format!("iteration index {n} out of range")))?;
        let i = (n - self.offset) as usize;
        loop {
            let len = self.terms.borrow().len();
            if len > i {
                return Ok(self.terms.borrow()[i].clone());
            }
            let last = self.terms.borrow()[len - 1].clone();
            let next = (self.step)(self.offset + len as u64 - 1, &last)?;
            self.terms.borrow_mut().push(next);
        }
    }

    fn space(&self) -> &Space {
        &self.space
    }
}

fn apply(map: &MapInstance, x: &Point) -> Eval<Point> {
    map.apply(x).map_err(|e| EvalError::Solver(e.to_string()))
}

/// `x_{n+1} = λ_{n+1}u + (1−λ_{n+1})Tx_n`, starting at `x_0`.
pub fn halpern(space: &Space, map: &MapInstance, x0: &Point, u: &Point, rates: &HalpernRates) -> IterSeq {
    let (map, u, lam) = (map.clone(), u.clone(), rates.lambda.clone());
    IterSeq::new(space, 0, x0.clone(), move |n, x| {
        let l = lam(n + 1);
        Ok(apply(&map, x)?.lerp(&u, &l))
    })
}

/// `x_{n+1} = (1−λ_n)x_n + λ_nTx_n − λ_nθ_n(x_n − x_1)`, indexed from 1.
pub fn bruck(
    space: &Space,
    map: &MapInstance,
    x1: &Point,
    lambda: impl Fn(u64) -> Q + 'static,
    theta: impl Fn(u64) -> Q + 'static,
) -> IterSeq {
    let (map, x1c) = (map.clone(), x1.clone());
    IterSeq::new(space, 1, x1.clone(), move |n, x| {
        let (l, th) = (lambda(n), theta(n));
        if &l * (Q::one() + &th) > Q::one() {
            return Err(EvalError::Contract(format!("λ_{n}(1+θ_{n}) > 1")));
        }
        let tx = apply(&map, x)?;
        Ok(x.lerp(&tx, &l).sub(&x.sub(&x1c).scale(&(&l * &th))))
    })
}

/// Shipped Bruck parameter presets `(name, λ, θ)`.
pub fn bruck_presets() -> Vec<(&'static str, fn(u64) -> Q, fn(u64) -> Q)> {
    fn harm(n: u64) -> Q {
        q(1, n as i64 + 1)
    }
    fn half(_: u64) -> Q {
        q(1, 2)
    }
    fn harm2(n: u64) -> Q {
        q(1, n as i64 + 2)
    }
    vec![("harmonic", harm, harm), ("half-harmonic", half, harm), ("harmonic-shifted", harm, harm2)]
}

/// Bruck feasibility `λ_n(1+θ_n) ≤ 1` on `1..=n_max`; the first failing index.
pub fn bruck_feasible(lambda: impl Fn(u64) -> Q, theta: impl Fn(u64) -> Q, n_max: u64) -> Result<(), u64> {
    for n in 1..=n_max {
        if lambda(n) * (Q::one() + theta(n)) > Q::one() {
            return Err(n);
        }
    }
    Ok(())
}

/// `λ_n` with the divergence, decay and variation rates `β₁, β₂, β₃`.
#[derive(Clone)]
pub struct HalpernRates {
    pub lambda: Rc<dyn Fn(u64) -> Q>,
    pub beta1: Rc<dyn Fn(u64) -> Nat>,
    pub beta2: Rc<dyn Fn(&Q) -> Nat>,
    pub beta3: Rc<dyn Fn(&Q) -> Nat>,
}

/// `λ_n = 1/(n+1)`, `β₁(n) = ⌈e^{n+1}⌉`, `β₂(ε) = β₃(ε) = ⌈1/ε⌉`.
pub fn wittmann_rates_harmonic() -> HalpernRates {
    HalpernRates {
        lambda: Rc::new(|n| q(1, n as i64 + 1)),
        beta1: Rc::new(|n| {
            let e = ((n + 1) as f64).exp().ceil();
            Nat::from(e as u128)
        }),
        beta2: Rc::new(|e| ceil_nat(&(Q::one() / e))),
        beta3: Rc::new(|e| ceil_nat(&(Q::one() / e))),
    }
}

impl HalpernRates {
    /// Checks the three rate contracts for `n ≤ n_max` and `ε ∈ {1/j : j ≤ inv_eps_max}`.
    pub fn check(&self, n_max: u64, inv_eps_max: u64, tail_len: u64) -> Vec<String> {
        let mut out = vec![];
        for n in 0..=n_max {
            let b1 = (self.beta1)(n).to_u64().unwrap_or(u64::MAX);
            let s: Q = (0..=b1).map(|i| (self.lambda)(i)).sum();
            if s < qi(n as i64) {
                out.push(format!("β₁({n}) = {b1}: partial sum below {n}"));
            }
        }
        for j in 1..=inv_eps_max {
            let eps = q(1, j as i64);
            let b2 = (self.beta2)(&eps).to_u64().unwrap();
            if (b2..b2 + tail_len).any(|m| (self.lambda)(m) > eps) {
                out.push(format!("β₂(1/{j}) = {b2}: some λ_m > ε"));
            }
            let b3 = (self.beta3)(&eps).to_u64().unwrap();
            let var: Q = (b3..b3 + tail_len)
                .map(|i| {
                    let d = (self.lambda)(i + 1) - (self.lambda)(i);
                    if d < Q::zero() {
                        -d
                    } else {
                        d
                    }
                })
                .sum();
            if var > eps {
                out.push(format!("β₃(1/{j}) = {b3}: variation tail exceeds ε"));
            }
        }
        out
    }
}

/// Writes `n, x_1..x_d, residual` rows.
pub fn export_sequence_csv(seq: &dyn PointSeq, map: &MapInstance, n_max: u64, out: &mut dyn Write) -> Eval<()> {
    let io = |e: std::io::Error| EvalError::Domain(e.to_string());
    let d = seq.space().dim;
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["n".to_string()];
    head.extend((0..d).map(|i| format!("x{i}")));
    head.push("residual".into());
    w.write_record(&head).map_err(|e| EvalError::Domain(e.to_string()))?;
    for n in 0..=n_max {
        let x = match seq.point_u64(n) {
            Ok(x) => x,
            Err(EvalError::Domain(_)) if n == 0 => continue,
            Err(e) => return Err(e),
        };
        let tx = apply(map, &x)?;
        let r = seq.space().norm(&x.sub(&tx)).map_err(|e| EvalError::Domain(e.to_string()))?;
        let mut row = vec![n.to_string()];
        row.extend(x.to_strings());
        row.push(format!("{:e}", r.mid_f64()));
        w.write_record(&row).map_err(|e| EvalError::Domain(e.to_string()))?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::map_library;
    use serde_json::json;

    fn affine_path() -> ResolventPath {
        let m = map_library("affine-1d", &json!({"slope": -2, "intercept": 1})).unwrap();
        resolvent_sequence(&Space::hilbert_box(1), &m, &Point(vec![qi(0)]), &Schedule::canonical(), &SolverOptions::default())
    }

    #[test]
    fn canonical_schedule_values() {
        let s = Schedule::canonical();
        assert_eq!(s.t(&nat(0)), qi(0));
        assert_eq!(s.alpha(&nat(5)), nat(5));
        assert_eq!(s.gamma(&nat(5)), nat(6));
        assert!(s.check_contracts(1, 100, 20).is_empty());
        assert!(Schedule::shifted().check_contracts(0, 100, 20).is_empty());
        assert_eq!(Schedule::shifted().t(&nat(0)), q(1, 2));
    }

    #[test]
    fn bad_schedule_detected() {
        let s = Schedule::new("bad", |_| q(1, 2), |n| n.clone(), |n| n + 1u32);
        assert!(!s.check_contracts(1, 10, 5).is_empty());
    }

    #[test]
    fn table_schedule() {
        let p = std::env::temp_dir().join("metastab_sched.csv");
        std::fs::write(&p, "t,alpha,gamma\n1/2,0,2\n2/3,1,3\n").unwrap();
        let s = Schedule::from_table(&p).unwrap();
        assert_eq!(s.t(&nat(1)), q(2, 3));
        assert_eq!(s.t(&nat(5)), q(6, 7));
        assert!(s.check_contracts(0, 50, 10).is_empty());
    }

    #[test]
    fn affine_path_closed_form() {
        let p = affine_path();
        for n in 0..50u64 {
            assert_eq!(p.point_u64(n).unwrap(), Point(vec![q(n as i64, 3 * n as i64 + 1)]));
            assert!(p.residual_law_holds(&nat(n)).unwrap());
        }
    }

    #[test]
    fn fixed_anchor_gives_constant_path() {
        let m = map_library("affine-1d", &json!({"slope": -2, "intercept": 1})).unwrap();
        let p = resolvent_sequence(&Space::hilbert_box(1), &m, &Point(vec![q(1, 3)]), &Schedule::canonical(), &SolverOptions::default());
        for n in 0..10 {
            assert_eq!(p.point_u64(n).unwrap(), Point(vec![q(1, 3)]));
        }
    }

    #[test]
    fn selector_cases() {
        let p = affine_path();
        let one = NatFn::constant(nat(1));
        for n in 0..10u64 {
            assert_eq!(s_selector(&Point(vec![qi(0)]), &one, &p, &nat(n)).unwrap(), nat(n + 1));
            assert_eq!(s_selector(&Point(vec![q(1, 3)]), &one, &p, &nat(n)).unwrap(), nat(n));
            assert_eq!(s_selector(&Point(vec![qi(0)]), &NatFn::zero(), &p, &nat(n)).unwrap(), nat(n));
        }
    }

    #[test]
    fn halpern_first_step() {
        let m = map_library("affine-1d", &json!({"slope": "1/2"})).unwrap();
        let one = Point(vec![qi(1)]);
        let h = halpern(&Space::hilbert_box(1), &m, &one, &one, &wittmann_rates_harmonic());
        assert_eq!(h.point_u64(1).unwrap(), Point(vec![q(3, 4)]));
        // x₂ = (1/3)·1 + (2/3)·(3/8), x₃ = (1/4)·1 + (3/4)·(x₂/2)
        assert_eq!(h.point_u64(2).unwrap(), Point(vec![q(7, 12)]));
        assert_eq!(h.point_u64(3).unwrap(), Point(vec![q(7, 32) + q(1, 4)]));
        let fp = Point(vec![qi(0)]);
        let c = halpern(&Space::hilbert_box(1), &m, &fp, &fp, &wittmann_rates_harmonic());
        assert_eq!(c.point_u64(5).unwrap(), fp);
    }

    #[test]
    fn harmonic_rates() {
        let r = wittmann_rates_harmonic();
        assert!(r.check(5, 20, 200).is_empty());
        assert_eq!((r.lambda)(r.beta2.as_ref()(&q(1, 10)).to_u64().unwrap()), q(1, 11));
        assert_eq!((r.beta3)(&q(1, 10)), nat(10));
    }

    #[test]
    fn bruck_identity_and_affine() {
        let sp = Space::hilbert_box(1);
        let id = map_library("affine-1d", &json!({"slope": 1})).unwrap();
        let b = bruck(&sp, &id, &Point(vec![q(1, 2)]), |_| q(1, 2), |_| q(1, 10));
        assert_eq!(b.point_u64(4).unwrap(), Point(vec![q(1, 2)]));
        let m = map_library("affine-1d", &json!({"slope": -2, "intercept": 1})).unwrap();
        let fp = bruck(&sp, &m, &Point(vec![q(1, 3)]), |n| q(1, n as i64 + 1), |n| q(1, n as i64 + 1));
        assert_eq!(fp.point_u64(6).unwrap(), Point(vec![q(1, 3)]));
        let bad = bruck(&sp, &m, &Point(vec![qi(0)]), |_| qi(1), |_| q(1, 2));
        assert!(matches!(bad.point_u64(2), Err(EvalError::Contract(_))));
        for (name, l, t) in bruck_presets() {
            assert!(bruck_feasible(l, t, 1000).is_ok(), "{name}");
        }
    }

    #[test]
    fn export_csv_has_header() {
        let p = affine_path();
        let mut buf = vec![];
        export_sequence_csv(&p, &p.map, 3, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,x0,residual\n0,0/1,"));
    }
}
