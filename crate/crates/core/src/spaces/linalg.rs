//! Exact dense linear algebra over ℚ.

use crate::num::Q;
use num_traits::{One, Zero};

pub type Mat = Vec<Vec<Q>>;

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

pub fn mat_vec(a: &Mat, x: &[Q]) -> Vec<Q> {
    a.iter().map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|r| (0..n).map(|j| r.iter().zip(b).map(|(u, row)| u * &row[j]).sum()).collect())
        .collect()
}

/// `α·A + β·B`
pub fn lin_comb(alpha: &Q, a: &Mat, beta: &Q, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(u, v)| alpha * u + beta * v).collect())
        .collect()
}

/// Solves `A x = rhs` by Gauss–Jordan elimination; `None` if singular.
pub fn solve(a: &Mat, rhs: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, w) in m[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * w;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Inverse via column solves.
pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let id = identity(n);
    let cols: Option<Vec<Vec<Q>>> = (0..n)
        .map(|j| {
            let e: Vec<Q> = id.iter().map(|r| r[j].clone()).collect();
            solve(a, &e)
        })
        .collect();
    let cols = cols?;
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};
    use proptest::prelude::*;

    #[test]
    fn rotation_solve() {
        let a = vec![vec![q(3, 5), q(-4, 5)], vec![q(4, 5), q(3, 5)]];
        let x = solve(&a, &[qi(1), qi(0)]).unwrap();
        assert_eq!(x, vec![q(3, 5), q(-4, 5)]);
        assert!(solve(&vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]], &[qi(1), qi(1)]).is_none());
    }

    proptest! {
        #[test]
        fn solve_then_multiply(e in proptest::collection::vec(-9i64..10, 9), b in proptest::collection::vec(-9i64..10, 3)) {
            let a: Mat = (0..3).map(|i| (0..3).map(|j| qi(e[3*i+j])).collect()).collect();
            let rhs: Vec<Q> = b.iter().map(|&v| qi(v)).collect();
            if let Some(x) = solve(&a, &rhs) {
                prop_assert_eq!(mat_vec(&a, &x), rhs);
            }
        }
    }
}
