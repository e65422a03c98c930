//! Counterfunction specs: `const:c`, `table:a,b,c`, `affine:a,c`, `id`, `argmax-gap:G`.

use crate::eval::{fresh_key, key_of, Eval, NatFn};
use crate::num::{nat, Nat};
use crate::schemas::PointSeq;
use num_traits::ToPrimitive;
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GSpec {
    Const(u64),
    /// Values for n = 0, 1, …; the last one repeats.
    Table(Vec<u64>),
    /// `n ↦ a·n + c`.
    Affine(u64, u64),
    Id,
    /// `n ↦ argmax_{0≤i≤G} ‖x_{n+i} − x_n‖` (least maximizer).
    ArgmaxGap(u64),
}

impl FromStr for GSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("`{t}` is not a natural number in g spec `{s}`"));
        if s == "id" || s == "n" {
            return Ok(GSpec::Id);
        }
        if let Ok(c) = s.parse::<u64>() {
            return Ok(GSpec::Const(c));
        }
        let (head, rest) = s.split_once(':').ok_or_else(|| format!("unknown g spec `{s}`"))?;
        match head {
            "const" => Ok(GSpec::Const(num(rest)?)),
            "table" => {
                let v = rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                if v.is_empty() {
                    return Err("empty table".into());
                }
                Ok(GSpec::Table(v))
            }
            "affine" => {
                let (a, c) = rest.split_once(',').ok_or_else(|| format!("affine needs `a,c`, got `{rest}`"))?;
                Ok(GSpec::Affine(num(a)?, num(c)?))
            }
            "argmax-gap" => Ok(GSpec::ArgmaxGap(num(rest)?)),
            _ => Err(format!("unknown g spec `{s}`")),
        }
    }
}

impl fmt::Display for GSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GSpec::Const(c) => write!(f, "const:{c}"),
            GSpec::Table(v) => {
                let s: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "table:{}", s.join(","))
            }
            GSpec::Affine(a, c) => write!(f, "affine:{a},{c}"),
            GSpec::Id => write!(f, "id"),
            GSpec::ArgmaxGap(g) => write!(f, "argmax-gap:{g}"),
        }
    }
}

impl GSpec {
    /// The counterfunction itself; `argmax-gap` reads the sequence.
    pub fn natfn(&self, seq: &Rc<dyn PointSeq>) -> NatFn {
        match self {
            GSpec::ArgmaxGap(g) => {
                let (seq, g) = (seq.clone(), *g);
                let memo: RefCell<HashMap<Nat, Nat>> = RefCell::default();
                NatFn::pure(fresh_key(), move |n| {
                    if let Some(v) = memo.borrow().get(n) {
                        return Ok(v.clone());
                    }
                    let v = argmax_gap(seq.as_ref(), n, g)?;
                    memo.borrow_mut().insert(n.clone(), v.clone());
                    Ok(v)
                })
            }
            GSpec::Table(v) => Self::table_fn(v.clone()),
            _ => self.majorant(),
        }
    }

    /// A pointwise majorant that does not read the sequence. Equal to the
    /// function itself except for `argmax-gap` (constant G) and tables
    /// (running maximum).
    pub fn majorant(&self) -> NatFn {
        let key = key_of(&("g", self.to_string()));
        match self {
            GSpec::Const(c) => NatFn::constant(nat(*c)),
            GSpec::Table(v) => {
                let mut m = 0;
                let run: Vec<u64> = v
                    .iter()
                    .map(|&x| {
                        m = m.max(x);
                        m
                    })
                    .collect();
                NatFn::from_fn(key, move |n| {
                    let i = n.to_usize().unwrap_or(usize::MAX);
                    nat(*run.get(i).unwrap_or(run.last().expect("nonempty")))
                })
            }
            GSpec::Affine(a, c) => {
                let (a, c) = (*a, *c);
                NatFn::from_fn(key, move |n| n * a + c)
            }
            GSpec::Id => NatFn::from_fn(key, Nat::clone),
            GSpec::ArgmaxGap(g) => NatFn::constant(nat(*g)),
        }
    }

    /// The table values themselves (not the running max).
    fn table_fn(v: Vec<u64>) -> NatFn {
        NatFn::from_fn(key_of(&("g-table", &v)), move |n| {
            let i = n.to_usize().unwrap_or(usize::MAX);
            nat(*v.get(i).unwrap_or(v.last().expect("nonempty")))
        })
    }
}

fn argmax_gap(seq: &dyn PointSeq, n: &Nat, g: u64) -> Eval<Nat> {
    let xn = seq.point(n)?;
    let mut best = (crate::spaces::Interval::exact(num_traits::Zero::zero()), 0u64);
    for i in 1..=g {
        let d = seq.dist_sq_to(&(n + i), &xn)?;
        if d.lo > best.0.hi || (d.is_exact() && best.0.is_exact() && d.lo > best.0.lo) {
            best = (d, i);
        }
    }
    Ok(nat(best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemas::{resolvent_sequence, Schedule};
    use crate::spaces::{map_library, Point, SolverOptions, Space};

    fn affine_seq() -> Rc<dyn PointSeq> {
        let map = map_library("affine-1d", &serde_json::json!({"slope": "-2", "intercept": "1"})).unwrap();
        Rc::new(resolvent_sequence(
            &Space::hilbert_box(1),
            &map,
            &Point::from_ints(&[0]),
            &Schedule::canonical(),
            &SolverOptions::default(),
        ))
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["const:5", "table:1,2,3", "affine:2,1", "id", "argmax-gap:7"] {
            assert_eq!(s.parse::<GSpec>().unwrap().to_string(), s);
        }
        assert_eq!("5".parse::<GSpec>().unwrap(), GSpec::Const(5));
        assert_eq!("n".parse::<GSpec>().unwrap(), GSpec::Id);
        assert!("table:".parse::<GSpec>().is_err());
        assert!("affine:1".parse::<GSpec>().is_err());
        assert!("cubic:1".parse::<GSpec>().is_err());
    }

    #[test]
    fn values() {
        let s = affine_seq();
        let t = "table:4,1,3".parse::<GSpec>().unwrap();
        let f = t.natfn(&s);
        assert_eq!(f.call_u64(1).unwrap(), nat(1));
        assert_eq!(f.call_u64(9).unwrap(), nat(3));
        let m = t.majorant();
        assert_eq!(m.call_u64(1).unwrap(), nat(4));
        assert_eq!("affine:2,1".parse::<GSpec>().unwrap().natfn(&s).call_u64(5).unwrap(), nat(11));
        assert_eq!(GSpec::Id.natfn(&s).call_u64(6).unwrap(), nat(6));
    }

    #[test]
    fn argmax_gap_on_increasing_sequence_is_far_end() {
        // n/(3n+1) increases, so the farthest point in the window is the last.
        let s = affine_seq();
        let g = GSpec::ArgmaxGap(4).natfn(&s);
        assert_eq!(g.call_u64(0).unwrap(), nat(4));
        assert_eq!(g.call_u64(3).unwrap(), nat(4));
        assert_eq!(GSpec::ArgmaxGap(4).majorant().call_u64(3).unwrap(), nat(4));
        assert_eq!(GSpec::ArgmaxGap(0).natfn(&s).call_u64(3).unwrap(), nat(0));
    }
}
