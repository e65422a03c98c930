//! Seeded batches for the ε-limsup functional: postconditions on random
//! instances, and soundness against the exact limsup with searching
//! counterfunctions.

use crate::approx_limsup::{
    eps_limsup_witness, lower_searcher, random_counterfunction, random_oracle, soundness_gap, upper_searcher,
    verify_postconditions, EventuallyPeriodic, SequenceOracle,
};
use crate::eval::{Budget, Eval};
use crate::num::{fmt_q, nat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::rc::Rc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupCase {
    pub kind: String,
    pub bound: u64,
    pub k: u64,
    pub oracle: String,
    pub u: String,
    pub m: String,
    pub p: String,
    pub fallback: bool,
    /// Postconditions (i), (ii) and `P ≤ B(k+1)`.
    pub postconditions: bool,
    /// `|P/(k+1) − limsup|`, soundness cases only.
    pub gap: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupBatch {
    pub seed: u64,
    pub cases: Vec<LimsupCase>,
    pub passed: usize,
    pub failed: usize,
}

fn describe(a: &EventuallyPeriodic) -> String {
    let f = |v: &[crate::num::Q]| v.iter().map(fmt_q).collect::<Vec<_>>().join(",");
    format!("prefix[{}] cycle[{}]", f(&a.prefix), f(&a.cycle))
}

/// Random oracle with `B ≤ 4`, `k ≤ 8` and random counterfunctions.
pub fn contract_case(rng: &mut ChaCha8Rng) -> Eval<LimsupCase> {
    let b = rng.gen_range(1..=4u64);
    let k = rng.gen_range(0..=8u64);
    let a = random_oracle(rng, b, 4, 5);
    let u = random_counterfunction(rng);
    let m = random_counterfunction(rng);
    let budget = Budget::unlimited();
    let w = eps_limsup_witness(&nat(b), &nat(k), &a, &u, &m, &budget)?;
    let c = verify_postconditions(&nat(b), &nat(k), &a, &u, &m, &w)?;
    Ok(LimsupCase {
        kind: "contract".into(),
        bound: b,
        k,
        oracle: describe(&a),
        u: u.name.clone(),
        m: m.name.clone(),
        p: w.p.to_string(),
        fallback: w.fallback,
        postconditions: c.holds(),
        gap: None,
        passed: c.holds(),
    })
}

/// Eventually periodic oracle, counterfunctions that search a full period.
pub fn soundness_case(rng: &mut ChaCha8Rng) -> Eval<LimsupCase> {
    let b = rng.gen_range(1..=4u64);
    let k = rng.gen_range(0..=8u64);
    let a = random_oracle(rng, b, 4, 5);
    let span = (a.prefix.len() + a.cycle.len()) as u64;
    let limsup = a.true_limsup();
    let desc = describe(&a);
    let a: Rc<dyn SequenceOracle> = Rc::new(a);
    let u = upper_searcher(a.clone(), nat(k), span);
    let m = lower_searcher(a.clone(), nat(k), span, 4 * span + 8);
    let budget = Budget::unlimited();
    let w = eps_limsup_witness(&nat(b), &nat(k), a.as_ref(), &u, &m, &budget)?;
    let c = verify_postconditions(&nat(b), &nat(k), a.as_ref(), &u, &m, &w)?;
    let (gap, sound) = soundness_gap(&w.p, &nat(k), &limsup);
    Ok(LimsupCase {
        kind: "soundness".into(),
        bound: b,
        k,
        oracle: desc,
        u: u.name.clone(),
        m: m.name.clone(),
        p: w.p.to_string(),
        fallback: w.fallback,
        postconditions: c.holds(),
        gap: Some(fmt_q(&gap)),
        passed: sound && c.holds(),
    })
}

pub fn limsup_batch(seed: u64, contract: usize, soundness: usize) -> Eval<LimsupBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(contract + soundness);
    for _ in 0..contract {
        cases.push(contract_case(&mut rng)?);
    }
    for _ in 0..soundness {
        cases.push(soundness_case(&mut rng)?);
    }
    let passed = cases.iter().filter(|c| c.passed).count();
    Ok(LimsupBatch {
        seed,
        failed: cases.len() - passed,
        passed,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batch_passes_and_is_reproducible() {
        let a = limsup_batch(7, 20, 20).unwrap();
        assert_eq!(a.failed, 0, "{:?}", a.cases.iter().find(|c| !c.passed));
        assert_eq!(a, limsup_batch(7, 20, 20).unwrap());
        assert!(a.cases.iter().filter(|c| c.kind == "soundness").all(|c| c.gap.is_some()));
    }
}
