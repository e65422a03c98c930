//! The ε-indexed constants ν₄, δ, p, ν₂ and the rank-dependent β, q, ν₁, u.

use crate::eval::{Eval, EvalError, NatFn};
use crate::moduli::{omega, psi, theta_tilde, Modulus, ModulusError};
use crate::num::{fmt_q, nat_to_q, q_min, qi, Nat, Q};
use num_traits::Signed;
use serde::Serialize;

pub(crate) fn md(e: ModulusError) -> EvalError {
    EvalError::Domain(e.to_string())
}

/// Everything the constants depend on besides `(c, d)`.
#[derive(Clone)]
pub struct ConstantsBundle {
    pub b: u64,
    pub eps: Q,
    pub eta: Modulus,
    pub tau: Modulus,
    pub theta: Modulus,
    pub gamma: NatFn,
    pub nu4: Q,
    pub delta: Q,
    pub p_const: Q,
    pub nu2: Q,
    pub u: Q,
}

impl std::fmt::Debug for ConstantsBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ConstantsBundle{{b={}, eps={}, u={}}}", self.b, fmt_q(&self.eps), fmt_q(&self.u))
    }
}

pub fn nu4(b: u64, tau: &Modulus, eps: &Q) -> Eval<Q> {
    let bq = qi(b as i64);
    let e2 = eps * eps;
    let a = &e2 * &e2 / (qi(9216) * &bq * &bq);
    let w = omega(b, tau, &(&e2 / (qi(96) * &bq))).map_err(md)?;
    Ok(q_min(&q_min(&a, &(&w * &w)), &(&e2 / qi(16))))
}

pub fn delta(b: u64, tau: &Modulus, nu4: &Q) -> Eval<Q> {
    let bq = qi(b as i64);
    let w = omega(b, tau, &(nu4 / (qi(3) * &bq))).map_err(md)?;
    Ok(q_min(&(w / bq), &crate::num::q(1, 4)))
}

pub fn p_const(nu4: &Q, eps: &Q) -> Q {
    q_min(&(nu4 / qi(3)), &(eps * eps / qi(96)))
}

pub fn nu2(b: u64, eta: &Modulus, tau: &Modulus, p: &Q) -> Eval<Q> {
    let w = omega(b, tau, &(p / (qi(2 * b as i64)))).map_err(md)?;
    Ok(psi(b, eta, &w).map_err(md)? / qi(2))
}

impl ConstantsBundle {
    pub fn new(b: u64, eps: &Q, eta: &Modulus, tau: &Modulus, theta: &Modulus, gamma: &NatFn) -> Eval<Self> {
        if b == 0 {
            return Err(EvalError::Domain("b must be at least 1".into()));
        }
        if !eps.is_positive() || eps > &qi(2) {
            return Err(EvalError::Domain(format!("epsilon {} outside (0,2]", fmt_q(eps))));
        }
        let n4 = nu4(b, tau, eps)?;
        let d = delta(b, tau, &n4)?;
        let p = p_const(&n4, eps);
        let n2 = nu2(b, eta, tau, &p)?;
        let u = q_min(&(qi(2) * &n4 * &d / qi(3)), &n2);
        Ok(ConstantsBundle {
            b,
            eps: eps.clone(),
            eta: eta.clone(),
            tau: tau.clone(),
            theta: theta.clone(),
            gamma: gamma.clone(),
            nu4: n4,
            delta: d,
            p_const: p,
            nu2: n2,
            u,
        })
    }

    /// `β(c) = p / (2bγ(c))`.
    pub fn beta(&self, c: &Nat) -> Eval<Q> {
        let g = self.gamma.call(c)?;
        if g == Nat::from(0u32) {
            return Err(EvalError::Contract(format!("gamma({c}) = 0")));
        }
        Ok(&self.p_const / (qi(2 * self.b as i64) * nat_to_q(&g)))
    }

    /// `q = min{β(c), β(d)}`; the caller passes the already selected index `d`.
    pub fn q_const(&self, c: &Nat, d: &Nat) -> Eval<Q> {
        Ok(q_min(&self.beta(c)?, &self.beta(d)?))
    }

    /// `ν₁ = ½ψ(θ̃(q))`.
    pub fn nu1(&self, c: &Nat, d: &Nat) -> Eval<Q> {
        let t = theta_tilde(&self.theta, &self.q_const(c, d)?).map_err(md)?;
        Ok(psi(self.b, &self.eta, &t).map_err(md)? / qi(2))
    }

    /// `½ψ(θ̃(β(c)))`, the summand minimized by the majorant of ν₁.
    pub fn nu1_single(&self, c: &Nat) -> Eval<Q> {
        let t = theta_tilde(&self.theta, &self.beta(c)?).map_err(md)?;
        Ok(psi(self.b, &self.eta, &t).map_err(md)? / qi(2))
    }

    pub fn report(&self) -> ConstantsReport {
        ConstantsReport {
            b: self.b,
            epsilon: fmt_q(&self.eps),
            nu4: fmt_q(&self.nu4),
            delta: fmt_q(&self.delta),
            p: fmt_q(&self.p_const),
            nu2: fmt_q(&self.nu2),
            u: fmt_q(&self.u),
            u_f64: crate::num::q_to_f64(&self.u),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub b: u64,
    pub epsilon: String,
    pub nu4: String,
    pub delta: String,
    pub p: String,
    pub nu2: String,
    pub u: String,
    pub u_f64: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::Role;
    use crate::num::q;

    fn hilbert(eps: Q) -> ConstantsBundle {
        let gamma = NatFn::from_fn(1, |n| n + 1u32);
        ConstantsBundle::new(
            1,
            &eps,
            &Modulus::hilbert_eta(64),
            &Modulus::identity(Role::Smoothness),
            &Modulus::identity(Role::Continuity),
            &gamma,
        )
        .unwrap()
    }

    #[test]
    fn nu4_fixture_double_entry() {
        let c = hilbert(qi(1));
        // independent entry: ω(1, 1/96) with τ = id is (1/96)²/12 · (1/192)
        let w = q(1, 96) * q(1, 96) / qi(12) * q(1, 192);
        let expect = q_min(&q_min(&q(1, 9216), &(&w * &w)), &q(1, 16));
        assert_eq!(c.nu4, expect);
        assert_eq!(c.nu4, &w * &w);
    }

    #[test]
    fn all_positive_and_q_below_beta() {
        let c = hilbert(qi(1));
        for v in [&c.nu4, &c.delta, &c.p_const, &c.nu2, &c.u] {
            assert!(v.is_positive());
        }
        for (a, d) in [(0u32, 3u32), (5, 1), (7, 7)] {
            let (a, d) = (Nat::from(a), Nat::from(d));
            assert!(c.q_const(&a, &d).unwrap() <= c.beta(&a).unwrap());
            assert!(c.nu1(&a, &d).unwrap().is_positive());
        }
    }

    #[test]
    fn domain_errors() {
        let gamma = NatFn::from_fn(1, |n| n + 1u32);
        let id = Modulus::identity(Role::Continuity);
        assert!(ConstantsBundle::new(1, &qi(3), &id, &id, &id, &gamma).is_err());
        assert!(ConstantsBundle::new(0, &qi(1), &id, &id, &id, &gamma).is_err());
    }
}
