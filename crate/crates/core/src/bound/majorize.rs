//! Running-maximum majorants of number-theoretic functions.

use crate::eval::{key_of, Eval, NatFn};
use crate::num::Nat;
use num_traits::{ToPrimitive, Zero};
use std::cell::RefCell;

/// `f^M(n) = max_{i ≤ n} f(i)`, computed from a growing cached prefix.
pub fn majorant(f: &NatFn) -> NatFn {
    let f = f.clone();
    let prefix: RefCell<Vec<Nat>> = RefCell::new(Vec::new());
    NatFn::pure(key_of(&("majorant", f.key())), move |n| {
        let Some(n) = n.to_usize() else {
            return Err(crate::eval::EvalError::Domain(format!("majorant argument {n} too large")));
        };
        loop {
            let len = prefix.borrow().len();
            if len > n {
                return Ok(prefix.borrow()[n].clone());
            }
            let v = f.call_u64(len as u64)?;
            let prev = if len == 0 { Nat::zero() } else { prefix.borrow()[len - 1].clone() };
            prefix.borrow_mut().push(if v > prev { v } else { prev });
        }
    })
}

pub fn g_m(g: &NatFn) -> NatFn {
    majorant(g)
}

pub fn alpha_m(alpha: &NatFn) -> NatFn {
    majorant(alpha)
}

/// `true` when `f^M ≥ h^M` on `0..=n`.
pub fn dominates_on(f: &NatFn, h: &NatFn, n: u64) -> Eval<bool> {
    let (fm, hm) = (majorant(f), majorant(h));
    for i in 0..=n {
        if fm.call_u64(i)? < hm.call_u64(i)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::nat;
    use proptest::prelude::*;

    fn table(v: Vec<u64>) -> NatFn {
        NatFn::pure(key_of(&v), move |n| Ok(nat(v[n.to_usize().unwrap() % v.len()])))
    }

    #[test]
    fn running_max_example() {
        let g = table(vec![3, 1, 2]);
        assert_eq!(g_m(&g).call_u64(2).unwrap(), nat(3));
        assert_eq!(g_m(&g).call_u64(1).unwrap(), nat(3));
    }

    #[test]
    fn monotone_is_fixed() {
        let g = NatFn::from_fn(9, |n| n * 2u32);
        let m = g_m(&g);
        for i in 0..50 {
            assert_eq!(m.call_u64(i).unwrap(), g.call_u64(i).unwrap());
        }
    }

    proptest! {
        #[test]
        fn majorant_laws(v in proptest::collection::vec(0u64..100, 1..20)) {
            let g = table(v.clone());
            let m = g_m(&g);
            let mm = g_m(&m);
            let mut last = nat(0);
            for i in 0..(2 * v.len() as u64) {
                let x = m.call_u64(i).unwrap();
                prop_assert!(x >= g.call_u64(i).unwrap());
                prop_assert!(x >= last);
                prop_assert_eq!(mm.call_u64(i).unwrap(), x.clone());
                last = x;
            }
        }
    }
}
