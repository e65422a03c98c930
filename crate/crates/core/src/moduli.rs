//! Moduli of convexity, smoothness and continuity; the derived moduli ψ, ω, θ̃;
//! and seeded samplers that certify user-supplied moduli.

use crate::num::{parse_q, q, q_max, q_min, qi, sqrt_bounds, Q};
use crate::spaces::{sample_cube, sample_unit_sphere, Interval, Point, Space};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("`{name}` evaluated outside its domain at ε = {eps}")]
    Domain { name: String, eps: String },
    #[error("`{name}` returned a non-positive value at ε = {eps}")]
    NonPositive { name: String, eps: String },
    #[error("modulus table: {0}")]
    Table(String),
    #[error("unknown modulus preset `{0}`")]
    UnknownPreset(String),
}

/// Which domain a modulus is declared on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Domain (0,2].
    Convexity,
    /// Domain (0,∞).
    Smoothness,
    /// Domain (0,∞).
    Continuity,
}

/// A positive-rational-valued function on positive rationals.
#[derive(Clone)]
pub struct Modulus {
    name: String,
    role: Role,
    f: Rc<dyn Fn(&Q) -> Q>,
}

impl std::fmt::Debug for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Modulus({})", self.name)
    }
}

impl Modulus {
    pub fn new(name: impl Into<String>, role: Role, f: impl Fn(&Q) -> Q + 'static) -> Self {
        Modulus {
            name: name.into(),
            role,
            f: Rc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn eval(&self, eps: &Q) -> Result<Q, ModulusError> {
        let out_of_domain = !eps.is_positive() || (self.role == Role::Convexity && eps > &qi(2));
        if out_of_domain {
            return Err(ModulusError::Domain {
                name: self.name.clone(),
                eps: crate::num::fmt_q(eps),
            });
        }
        let v = (self.f)(eps);
        if !v.is_positive() {
            return Err(ModulusError::NonPositive {
                name: self.name.clone(),
                eps: crate::num::fmt_q(eps),
            });
        }
        Ok(v)
    }

    pub fn identity(role: Role) -> Self {
        Modulus::new("identity", role, |e| e.clone())
    }

    /// `ε ↦ c·ε`.
    pub fn linear(c: Q, role: Role) -> Self {
        Modulus::new(format!("linear({})", crate::num::fmt_q(&c)), role, move |e| e * &c)
    }

    pub fn constant(c: Q, role: Role) -> Self {
        Modulus::new(format!("const({})", crate::num::fmt_q(&c)), role, move |_| c.clone())
    }

    /// Pointwise `c·self`.
    pub fn scaled(&self, c: Q) -> Self {
        let inner = self.clone();
        Modulus::new(format!("{}·{}", crate::num::fmt_q(&c), self.name), self.role, move |e| {
            (inner.f)(e) * &c
        })
    }

    /// Rational lower bound of the Hilbert modulus `1 − √(1−ε²/4)`, bracketed to
    /// `2^-bits`; never below the closed lower bound `ε²/8`.
    pub fn hilbert_eta(bits: u32) -> Self {
        Modulus::new("hilbert-eta", Role::Convexity, move |e| hilbert_eta_lower(e, bits))
    }

    /// Step function through tabulated `(ε, value)` points.
    pub fn from_table(name: impl Into<String>, role: Role, mut pts: Vec<(Q, Q)>) -> Result<Self, ModulusError> {
        if pts.is_empty() {
            return Err(ModulusError::Table("empty table".into()));
        }
        pts.sort_by(|a, b| a.0.cmp(&b.0));
        if pts.iter().any(|(e, v)| !e.is_positive() || !v.is_positive()) {
            return Err(ModulusError::Table("entries must be positive".into()));
        }
        Ok(Modulus::new(name, role, move |e| {
            match pts.iter().rev().find(|(x, _)| x <= e) {
                Some((_, v)) => v.clone(),
                // Below the first tabulated point: report a zero so eval flags it.
                None => Q::zero(),
            }
        }))
    }

    /// Loads a two-column CSV `epsilon,value` (header optional).
    pub fn load_table(path: &Path, role: Role) -> Result<Self, ModulusError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| ModulusError::Table(e.to_string()))?;
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ModulusError::Table(e.to_string()))?;
            if rec.len() < 2 {
                return Err(ModulusError::Table("expected two columns".into()));
            }
            match (parse_q(&rec[0]), parse_q(&rec[1])) {
                (Ok(e), Ok(v)) => pts.push((e, v)),
                _ if pts.is_empty() => continue, // header line
                _ => return Err(ModulusError::Table(format!("bad row {:?}", rec))),
            }
        }
        Modulus::from_table(format!("table:{}", path.display()), role, pts)
    }

    /// Resolves a preset key: `hilbert-eta`, `identity-tau`, `identity-theta`,
    /// `table:<path>`, `linear:<c>`, `const:<c>`.
    pub fn preset(key: &str, role: Role) -> Result<Self, ModulusError> {
        match key {
            "hilbert-eta" => Ok(Modulus::hilbert_eta(128)),
            "identity-tau" | "identity-theta" | "identity" => Ok(Modulus::identity(role)),
            _ => {
                if let Some(p) = key.strip_prefix("table:") {
                    Modulus::load_table(Path::new(p), role)
                } else if let Some(c) = key.strip_prefix("linear:") {
                    let c = parse_q(c).map_err(|_| ModulusError::UnknownPreset(key.into()))?;
                    Ok(Modulus::linear(c, role))
                } else if let Some(c) = key.strip_prefix("const:") {
                    let c = parse_q(c).map_err(|_| ModulusError::UnknownPreset(key.into()))?;
                    Ok(Modulus::constant(c, role))
                } else {
                    Err(ModulusError::UnknownPreset(key.into()))
                }
            }
        }
    }
}

fn hilbert_eta_lower(eps: &Q, bits: u32) -> Q {
    let e2 = eps * eps;
    let floor = &e2 / qi(8);
    let inner = qi(1) - &e2 / qi(4);
    if !inner.is_positive() {
        return qi(1);
    }
    let (_, hi) = sqrt_bounds(&inner, bits);
    q_max(&(qi(1) - hi), &floor)
}

/// `ψ_{b,η}(ε) = min((min(ε/2, (ε²/72b)·η²(ε/2b)))²/4, (ε²/48)·η²(ε/2b))`.
pub fn psi(b: u64, eta: &Modulus, eps: &Q) -> Result<Q, ModulusError> {
    if !eps.is_positive() || eps > &qi(2) {
        return Err(ModulusError::Domain {
            name: "psi".into(),
            eps: crate::num::fmt_q(eps),
        });
    }
    let bq = qi(b as i64);
    let e2 = eps * eps;
    let h = eta.eval(&(eps / (qi(2) * &bq)))?;
    let h2 = &h * &h;
    let inner = q_min(&(eps / qi(2)), &(&e2 / (qi(72) * &bq) * &h2));
    Ok(q_min(&(&inner * &inner / qi(4)), &(&e2 / qi(48) * &h2)))
}

/// `ω_τ(b,ε) = (r₁²/12r₂)·τ(r₁/2r₂)` with `r₁ = min(ε,2)`, `r₂ = max(b,1)`.
pub fn omega(b: u64, tau: &Modulus, eps: &Q) -> Result<Q, ModulusError> {
    if !eps.is_positive() {
        return Err(ModulusError::Domain {
            name: "omega".into(),
            eps: crate::num::fmt_q(eps),
        });
    }
    let r1 = q_min(eps, &qi(2));
    let r2 = qi(b.max(1) as i64);
    let t = tau.eval(&(&r1 / (qi(2) * &r2)))?;
    Ok(&r1 * &r1 / (qi(12) * &r2) * t)
}

/// `θ̃(ε) = min(ε/4, θ(ε/2))`.
pub fn theta_tilde(theta: &Modulus, eps: &Q) -> Result<Q, ModulusError> {
    Ok(q_min(&(eps / qi(4)), &theta.eval(&(eps / qi(2)))?))
}

pub fn psi_modulus(b: u64, eta: &Modulus) -> Modulus {
    let eta = eta.clone();
    Modulus::new(format!("psi[{b},{}]", eta.name()), Role::Convexity, move |e| {
        psi(b, &eta, e).unwrap_or_else(|_| Q::zero())
    })
}

pub fn omega_modulus(b: u64, tau: &Modulus) -> Modulus {
    let tau = tau.clone();
    Modulus::new(format!("omega[{b},{}]", tau.name()), Role::Continuity, move |e| {
        omega(b, &tau, e).unwrap_or_else(|_| Q::zero())
    })
}

pub fn theta_tilde_modulus(theta: &Modulus) -> Modulus {
    let th = theta.clone();
    Modulus::new(format!("theta~[{}]", th.name()), Role::Continuity, move |e| {
        theta_tilde(&th, e).unwrap_or_else(|_| Q::zero())
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub x: Point,
    pub y: Point,
    pub epsilon: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub modulus: String,
    pub samples: usize,
    pub checked: usize,
    pub indeterminate: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A point of norm ≤ r: exact sphere points on the Hilbert path, otherwise a
/// cube sample divided by a certified upper bound of its norm.
fn sample_on_sphere(space: &Space, rng: &mut ChaCha8Rng, r: &Q) -> Point {
    if space.is_hilbert() {
        return sample_unit_sphere(rng, space.dim).scale(r);
    }
    loop {
        let c = sample_cube(rng, space.dim, &qi(1));
        if c.is_zero() {
            continue;
        }
        let n = space.norm(&c).expect("dimension");
        return c.scale(&(r / &n.hi));
    }
}

fn sample_in_ball(space: &Space, rng: &mut ChaCha8Rng, r: &Q) -> Point {
    loop {
        let c = sample_cube(rng, space.dim, r);
        let n = space.norm_sq(&c).expect("dimension");
        if n.le(&Interval::exact(r * r)) == Some(true) {
            return c;
        }
    }
}

/// Checks `‖(x+y)/2‖ ≤ 1 − η(ε)` on seeded pairs in the unit ball with
/// `‖x−y‖ ≥ ε`, taking ε as a rational lower bound of `‖x−y‖`.
pub fn validate_convexity_modulus(space: &Space, eta: &Modulus, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ValidationReport {
        modulus: eta.name().to_string(),
        samples,
        checked: 0,
        indeterminate: 0,
        violations: vec![],
    };
    let one = qi(1);
    for i in 0..samples {
        let x = match i % 3 {
            0 => sample_in_ball(space, &mut rng, &one),
            _ => sample_on_sphere(space, &mut rng, &one),
        };
        let y = if i % 5 == 0 {
            x.scale(&qi(-1))
        } else if i % 3 == 2 {
            sample_on_sphere(space, &mut rng, &one)
        } else {
            sample_in_ball(space, &mut rng, &one)
        };
        let d = space.norm(&x.sub(&y)).expect("dimension");
        let eps = q_min(&d.lo, &qi(2));
        if !eps.is_positive() {
            continue;
        }
        let Ok(h) = eta.eval(&eps) else {
            rep.indeterminate += 1;
            continue;
        };
        rep.checked += 1;
        let rhs = &one - &h;
        let mid = space.norm(&x.midpoint(&y)).expect("dimension");
        let verdict = if rhs.is_negative() {
            Some(false)
        } else {
            mid.le(&Interval::exact(rhs.clone()))
        };
        match verdict {
            Some(true) => {}
            Some(false) => rep.violations.push(Violation {
                x: x.clone(),
                y: y.clone(),
                epsilon: crate::num::fmt_q(&eps),
                detail: format!("‖(x+y)/2‖ ≈ {:.6} > 1−η(ε) = {:.6}", mid.mid_f64(), crate::num::q_to_f64(&rhs)),
            }),
            None => rep.indeterminate += 1,
        }
    }
    rep
}

/// Checks `‖x+y‖ + ‖x−y‖ ≤ 2 + ε‖y‖` for `‖x‖ = 1`, `‖y‖ ≤ τ(ε)` on seeded samples.
pub fn validate_smoothness_modulus(space: &Space, tau: &Modulus, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ValidationReport {
        modulus: tau.name().to_string(),
        samples,
        checked: 0,
        indeterminate: 0,
        violations: vec![],
    };
    for i in 0..samples {
        let eps = q(rng.gen_range(1..=32), 16);
        let Ok(t) = tau.eval(&eps) else {
            rep.indeterminate += 1;
            continue;
        };
        let x = sample_on_sphere(space, &mut rng, &qi(1));
        let s = q(rng.gen_range(1..=64), 64);
        let y = if i % 4 == 0 {
            // Axis-aligned direction.
            let mut c = Point::zeros(space.dim);
            c.0[rng.gen_range(0..space.dim)] = &t * &s;
            c
        } else {
            sample_on_sphere(space, &mut rng, &(&t * &s))
        };
        rep.checked += 1;
        let lhs = space
            .norm(&x.add(&y))
            .expect("dimension")
            .add(&space.norm(&x.sub(&y)).expect("dimension"));
        let rhs = space
            .norm(&y)
            .expect("dimension")
            .scale(&eps)
            .add(&Interval::exact(qi(2)));
        match lhs.le(&rhs) {
            Some(true) => {}
            Some(false) => rep.violations.push(Violation {
                x,
                y,
                epsilon: crate::num::fmt_q(&eps),
                detail: format!("{:.9} > {:.9}", lhs.mid_f64(), rhs.mid_f64()),
            }),
            None => rep.indeterminate += 1,
        }
    }
    rep
}

fn report(name: String, samples: usize) -> ValidationReport {
    ValidationReport {
        modulus: name,
        samples,
        checked: 0,
        indeterminate: 0,
        violations: vec![],
    }
}

fn record(rep: &mut ValidationReport, verdict: Option<bool>, x: &Point, y: &Point, eps: &Q, detail: impl FnOnce() -> String) {
    match verdict {
        Some(true) => {}
        Some(false) => rep.violations.push(Violation {
            x: x.clone(),
            y: y.clone(),
            epsilon: crate::num::fmt_q(eps),
            detail: detail(),
        }),
        None => rep.indeterminate += 1,
    }
}

/// Two-point inequality `‖(x+y)/2‖² + ψ(ε) ≤ ½‖x‖² + ½‖y‖²` for `‖x‖,‖y‖ ≤ b`,
/// ε a rational lower bound of `‖x−y‖` capped at 2.
pub fn validate_psi_two_point(space: &Space, b: u64, eta: &Modulus, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = report(format!("psi[{b},{}]", eta.name()), samples);
    let r = qi(b as i64);
    for i in 0..samples {
        let x = if i % 2 == 0 {
            sample_on_sphere(space, &mut rng, &r)
        } else {
            sample_in_ball(space, &mut rng, &r)
        };
        let y = if i % 7 == 0 {
            x.scale(&qi(-1))
        } else {
            sample_in_ball(space, &mut rng, &r)
        };
        let d2 = space.norm_sq(&x.sub(&y)).expect("dimension");
        if !d2.lo.is_positive() {
            continue;
        }
        let eps = q_min(&crate::num::round_dyadic(&sqrt_bounds(&d2.lo, 24).0, 24), &qi(2));
        if !eps.is_positive() {
            continue;
        }
        let Ok(ps) = psi(b, eta, &eps) else {
            rep.indeterminate += 1;
            continue;
        };
        rep.checked += 1;
        let half = q(1, 2);
        let lhs = space.norm_sq(&x.midpoint(&y)).expect("dimension").add(&Interval::exact(ps));
        let rhs = space
            .norm_sq(&x)
            .expect("dimension")
            .add(&space.norm_sq(&y).expect("dimension"))
            .scale(&half);
        record(&mut rep, lhs.le(&rhs), &x, &y, &eps, || format!("{:.12} > {:.12}", lhs.mid_f64(), rhs.mid_f64()));
    }
    rep
}

/// Duality-map contract: `‖x−y‖ ≤ ω(b,ε)` with `‖x‖,‖y‖ ≤ b` implies
/// `‖j(x)−j(y)‖ ≤ ε`. Compared on squares where the dual vectors are exact.
pub fn validate_omega_contract(space: &Space, b: u64, tau: &Modulus, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = report(format!("omega[{b},{}]", tau.name()), samples);
    let r = qi(b as i64);
    let r2 = &r * &r;
    for _ in 0..samples {
        let eps = q(rng.gen_range(1..=64), 16);
        let Ok(w) = omega(b, tau, &eps) else {
            rep.indeterminate += 1;
            continue;
        };
        let x = sample_in_ball(space, &mut rng, &r);
        let len = &w * q(rng.gen_range(0..=64), 64);
        let step = sample_on_sphere(space, &mut rng, &len);
        let y = x.add(&step);
        if space.norm_sq(&y).expect("dimension").le(&Interval::exact(r2.clone())) != Some(true) {
            continue;
        }
        rep.checked += 1;
        let jd = space.dual_sub(
            &space.duality_map(&x).expect("dimension"),
            &space.duality_map(&y).expect("dimension"),
        );
        let verdict = if jd.0.iter().all(Interval::is_exact) && space.is_hilbert() {
            let s: Q = jd.0.iter().map(|v| &v.lo * &v.lo).sum();
            Some(s <= &eps * &eps)
        } else {
            space.dual_norm(&jd).le(&Interval::exact(eps.clone()))
        };
        record(&mut rep, verdict, &x, &y, &eps, || format!("‖j(x)−j(y)‖ ≈ {:.9}", space.dual_norm(&jd).mid_f64()));
    }
    rep
}

/// `‖x+y‖² ≤ ‖x‖² + 2⟨y, j(x+y)⟩` on seeded pairs in the ball of radius b.
pub fn validate_norm_lemma(space: &Space, b: u64, samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = report("lemma".into(), samples);
    let r = qi(b as i64);
    for _ in 0..samples {
        let x = sample_in_ball(space, &mut rng, &r);
        let y = sample_in_ball(space, &mut rng, &r);
        rep.checked += 1;
        let s = x.add(&y);
        let lhs = space.norm_sq(&s).expect("dimension");
        let j = space.duality_map(&s).expect("dimension");
        let rhs = space
            .norm_sq(&x)
            .expect("dimension")
            .add(&space.pairing(&y, &j).expect("dimension").scale(&qi(2)));
        record(&mut rep, lhs.le(&rhs), &x, &y, &Q::zero(), || format!("{:.12} > {:.12}", lhs.mid_f64(), rhs.mid_f64()));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::FeasibleSet;

    fn eucl(d: usize) -> Space {
        Space::new(d, qi(2), 1, FeasibleSet::Ball { radius: qi(1) }).unwrap()
    }

    #[test]
    fn psi_with_unit_eta_is_1_over_1296() {
        // ε/2b = 1 and η(1) = 1 give min((1/18)²/4, 1/12).
        let one = Modulus::constant(qi(1), Role::Convexity);
        assert_eq!(psi(1, &one, &qi(2)).unwrap(), q(1, 1296));
    }

    #[test]
    fn psi_with_hilbert_eta_matches_interval_value() {
        // Hilbert η(1) = 1 − √3/2; the rational lower bound stays within 2^-100.
        let v = psi(1, &Modulus::hilbert_eta(128), &qi(2)).unwrap();
        let h = 1.0 - 3f64.sqrt() / 2.0;
        let expect = ((4.0 / 72.0) * h * h).powi(2) / 4.0;
        assert!((crate::num::q_to_f64(&v) - expect).abs() < 1e-15);
        assert!(v < q(1, 1296));
    }

    #[test]
    fn psi_linear_eta_example() {
        let eta = Modulus::linear(q(1, 8), Role::Convexity);
        let h2 = q(1, 32) * q(1, 32);
        let inner = q_min(&q(1, 2), &(q(1, 144) * &h2));
        let expect = q_min(&(&inner * &inner / qi(4)), &(q(1, 48) * &h2));
        assert_eq!(psi(2, &eta, &qi(1)).unwrap(), expect);
    }

    #[test]
    fn psi_domain() {
        let eta = Modulus::hilbert_eta(64);
        assert!(psi(1, &eta, &qi(3)).is_err());
        assert!(psi(1, &eta, &qi(0)).is_err());
    }

    #[test]
    fn omega_examples() {
        let id = Modulus::identity(Role::Smoothness);
        assert_eq!(omega(1, &id, &qi(2)).unwrap(), q(1, 3));
        assert_eq!(omega(1, &id, &qi(4)).unwrap(), q(1, 3));
        assert_eq!(omega(3, &id, &qi(1)).unwrap(), q(1, 216));
    }

    #[test]
    fn theta_tilde_examples() {
        let id = Modulus::identity(Role::Continuity);
        assert_eq!(theta_tilde(&id, &qi(1)).unwrap(), q(1, 4));
        assert_eq!(theta_tilde(&id, &qi(4)).unwrap(), qi(1));
        let small = Modulus::linear(q(1, 100), Role::Continuity);
        assert_eq!(theta_tilde(&small, &qi(1)).unwrap(), q(1, 200));
    }

    #[test]
    fn hilbert_eta_is_a_lower_bound() {
        let eta = Modulus::hilbert_eta(64);
        for k in 1..=20 {
            let e = q(k, 10);
            let v = crate::num::q_to_f64(&eta.eval(&e).unwrap());
            let ef = k as f64 / 10.0;
            let exact = 1.0 - (1.0 - ef * ef / 4.0).sqrt();
            assert!(v <= exact + 1e-15 && v > exact - 1e-12, "ε={ef}");
        }
        assert_eq!(eta.eval(&qi(2)).unwrap(), qi(1));
    }

    #[test]
    fn convexity_validation() {
        let s = eucl(2);
        assert!(validate_convexity_modulus(&s, &Modulus::hilbert_eta(96), 1000, 1).passed());
        let tiny = Modulus::constant(q(1, 1_000_000_000), Role::Convexity);
        assert!(validate_convexity_modulus(&s, &tiny, 300, 2).passed());
        let bad = Modulus::identity(Role::Convexity);
        let r = validate_convexity_modulus(&s, &bad, 200, 3);
        assert!(!r.passed());
    }

    #[test]
    fn eta_equal_eps_fails_on_antipodal_pair() {
        let s = eucl(2);
        let x = Point::from_ints(&[1, 0]);
        let y = Point::from_ints(&[-1, 0]);
        let mid = s.norm(&x.midpoint(&y)).unwrap();
        let rhs = qi(1) - Modulus::identity(Role::Convexity).eval(&qi(2)).unwrap();
        assert!(rhs < mid.lo || rhs.is_negative());
    }

    #[test]
    fn smoothness_validation() {
        let s = eucl(2);
        let id = Modulus::identity(Role::Smoothness);
        let r = validate_smoothness_modulus(&s, &id, 1000, 4);
        assert!(r.passed(), "{:?}", r.violations.first());
        let half = id.scaled(q(1, 2));
        assert!(validate_smoothness_modulus(&s, &half, 500, 5).passed());
        let l1 = Space::new(2, qi(1), 1, FeasibleSet::Ball { radius: qi(1) }).unwrap();
        assert!(!validate_smoothness_modulus(&l1, &id, 200, 6).passed());
    }

    #[test]
    fn table_step_semantics() {
        let m = Modulus::from_table(
            "t",
            Role::Smoothness,
            vec![(q(1, 2), q(1, 10)), (qi(1), q(1, 5))],
        )
        .unwrap();
        assert_eq!(m.eval(&q(3, 4)).unwrap(), q(1, 10));
        assert_eq!(m.eval(&qi(1)).unwrap(), q(1, 5));
        assert_eq!(m.eval(&qi(7)).unwrap(), q(1, 5));
        assert!(m.eval(&q(1, 4)).is_err());
    }

    #[test]
    fn presets_resolve() {
        assert!(Modulus::preset("hilbert-eta", Role::Convexity).is_ok());
        assert!(Modulus::preset("identity-tau", Role::Smoothness).is_ok());
        assert!(Modulus::preset("identity-theta", Role::Continuity).is_ok());
        assert!(Modulus::preset("nope", Role::Continuity).is_err());
        let dir = std::env::temp_dir().join("metastab_mod_table.csv");
        std::fs::write(&dir, "epsilon,value\n1/4,1/100\n1,1/10\n").unwrap();
        let m = Modulus::preset(&format!("table:{}", dir.display()), Role::Smoothness).unwrap();
        assert_eq!(m.eval(&q(1, 2)).unwrap(), q(1, 100));
    }

    #[test]
    fn derived_inequalities_hold_exactly() {
        for d in 1..=3 {
            let s = eucl(d);
            let eta = Modulus::hilbert_eta(96);
            let tau = Modulus::identity(Role::Smoothness);
            for b in [1, 2] {
                let r = validate_psi_two_point(&s, b, &eta, 300, d as u64);
                assert!(r.passed() && r.indeterminate == 0 && r.checked > 250, "{r:?}");
                let r = validate_omega_contract(&s, b, &tau, 300, d as u64);
                assert!(r.passed() && r.checked > 100, "{r:?}");
                let r = validate_norm_lemma(&s, b, 300, d as u64);
                assert!(r.passed() && r.indeterminate == 0, "{r:?}");
            }
        }
    }

}
