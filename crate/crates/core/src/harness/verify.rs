//! Empirical metastability scan.

use crate::eval::{Eval, NatFn};
use crate::num::{nat, nat_to_u64, Nat, Q};
use crate::schemas::PointSeq;

/// Does `‖x_m − x_n‖ ≤ ε` hold for all `m, n ∈ [a, a + len]`? Squared norms;
/// off the exact path a pair passes when the lower end of its bracket does.
pub fn interval_is_stable(seq: &dyn PointSeq, eps: &Q, a: u64, len: u64) -> Eval<bool> {
    let e2 = eps * eps;
    let pts = (a..=a + len).map(|i| seq.point_u64(i)).collect::<Eval<Vec<_>>>()?;
    let sp = seq.space();
    let ok = |i: usize, j: usize| -> Eval<bool> {
        let d = sp.dist_sq(&pts[i], &pts[j]).map_err(|e| crate::eval::EvalError::Solver(e.to_string()))?;
        Ok(d.lo <= e2)
    };
    let last = pts.len() - 1;
    // The endpoint pair fails most often; try it first.
    if !ok(0, last)? {
        return Ok(false);
    }
    for i in 0..=last {
        for j in i + 1..=last {
            if !ok(i, j)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `‖x_N − x_{N+g(N)}‖ ≤ ε` only.
pub fn endpoint_is_stable(seq: &dyn PointSeq, eps: &Q, n: &Nat, g: &NatFn) -> Eval<bool> {
    let gn = g.call(n)?;
    let d = seq.dist_sq_to(&(n + gn), &seq.point(n)?)?;
    Ok(d.lo <= eps * eps)
}

/// The least `N ≤ horizon` with `‖x_m − x_n‖ ≤ ε` for all `m, n ∈ [N, N+g(N)]`.
pub fn verify_metastability(seq: &dyn PointSeq, eps: &Q, g: &NatFn, horizon: u64) -> Eval<Option<u64>> {
    for n in 0..=horizon {
        let len = nat_to_u64(&g.call(&nat(n))?);
        if interval_is_stable(seq, eps, n, len)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// The least `N ≤ horizon` passing the endpoint inequality alone.
pub fn least_endpoint_rank(seq: &dyn PointSeq, eps: &Q, g: &NatFn, horizon: u64) -> Eval<Option<u64>> {
    for n in 0..=horizon {
        if endpoint_is_stable(seq, eps, &nat(n), g)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}
