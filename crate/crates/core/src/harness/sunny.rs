//! The variational inequality of the sunny retraction, with Qx approximated by
//! the resolvent point at `t_close`, and the metric projection onto Fix(T) for
//! affine maps on the Hilbert path.

use crate::num::{fmt_q, q_to_f64, qi, Q};
use crate::spaces::linalg::{mat_vec, solve, Mat};
use crate::spaces::{resolvent_point, Interval, MapInstance, MapKind, Point, SolverOptions, Space};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunnyEntry {
    pub anchor: Point,
    pub qx: Point,
    pub fixed_point: Point,
    /// `⟨x − Qx, j(p − Qx)⟩`, upper end of its bracket.
    pub pairing: String,
    /// `slack − pairing`; nonnegative when the entry passes.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEntry {
    pub anchor: Point,
    pub qx: Point,
    pub projection: Point,
    pub distance: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunnyReport {
    pub t_close: String,
    pub tol: String,
    pub slack: String,
    pub entries: Vec<SunnyEntry>,
    /// Samples with `‖p − Tp‖ > tol`.
    pub rejected: Vec<Point>,
    pub projections: Vec<ProjectionEntry>,
    pub passed: bool,
}

/// Slack for the pairing: `4·b·tol`.
pub fn sunny_slack(b: u64, tol: &Q) -> Q {
    qi(4) * qi(b as i64) * tol
}

fn sp<T>(r: Result<T, crate::spaces::SpaceError>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

pub fn check_sunny(
    space: &Space,
    map: &MapInstance,
    anchors: &[Point],
    fixed_points: &[Point],
    t_close: &Q,
    opts: &SolverOptions,
) -> Result<SunnyReport, String> {
    let tol = opts.tol.clone();
    let slack = sunny_slack(space.b, &tol);
    let mut accepted = vec![];
    let mut rejected = vec![];
    for p in fixed_points {
        let r = sp(space.norm_sq(&p.sub(&sp(map.apply(p))?)))?;
        if r.le(&Interval::exact(&tol * &tol)) == Some(true) {
            accepted.push(p.clone());
        } else {
            rejected.push(p.clone());
        }
    }
    let mut entries = vec![];
    for x in anchors {
        let qx = sp(resolvent_point(space, map, x, t_close, opts))?;
        let d = x.sub(&qx);
        for p in &accepted {
            let j = sp(space.duality_map(&p.sub(&qx)))?;
            let v = sp(space.pairing(&d, &j))?;
            let passed = v.lo <= slack;
            entries.push(SunnyEntry {
                anchor: x.clone(),
                qx: qx.clone(),
                fixed_point: p.clone(),
                pairing: fmt_q(&v.hi),
                margin: q_to_f64(&(&slack - &v.hi)),
                passed,
            });
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(SunnyReport {
        t_close: fmt_q(t_close),
        tol: fmt_q(&tol),
        slack: fmt_q(&slack),
        entries,
        rejected,
        projections: vec![],
        passed,
    })
}

/// Rows of the reduced row echelon form of `[M | r]` that carry a pivot; `None`
/// when the system is inconsistent.
fn rref_rows(m: &Mat, r: &[Q]) -> Option<(Mat, Vec<Q>)> {
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .zip(r)
        .map(|(row, v)| {
            let mut row = row.clone();
            row.push(v.clone());
            row
        })
        .collect();
    let mut lead = 0;
    for c in 0..cols {
        let Some(piv) = (lead..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(lead, piv);
        let p = a[lead][c].clone();
        for v in a[lead].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = a[lead].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != lead && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, w) in row.iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * w;
                }
            }
        }
        lead += 1;
    }
    if a[lead..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    a.truncate(lead);
    let rhs = a.iter_mut().map(|row| row.pop().expect("augmented")).collect();
    Some((a, rhs))
}

/// Metric projection of `x` onto `{y : A y + c = y}` in ℓ², ignoring the
/// feasible set. `None` for non-affine maps or an empty fixed-point set.
pub fn affine_fix_projection(map: &MapInstance, x: &Point) -> Option<Point> {
    let MapKind::Affine { a, c } = &map.kind else {
        return None;
    };
    let n = a.len();
    // (A − I) y = −c
    let m: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { &a[i][j] - Q::one() } else { a[i][j].clone() }).collect())
        .collect();
    let r: Vec<Q> = c.iter().map(|v| -v).collect();
    let (rows, rhs) = rref_rows(&m, &r)?;
    if rows.is_empty() {
        return Some(x.clone());
    }
    // x − Rᵀ (R Rᵀ)⁻¹ (R x − r)
    let gram: Mat = rows
        .iter()
        .map(|u| rows.iter().map(|v| u.iter().zip(v).map(|(s, t)| s * t).sum()).collect())
        .collect();
    let resid: Vec<Q> = mat_vec(&rows, &x.0).iter().zip(&rhs).map(|(s, t)| s - t).collect();
    let lam = solve(&gram, &resid)?;
    let corr: Vec<Q> = (0..n).map(|j| rows.iter().zip(&lam).map(|(row, l)| &row[j] * l).sum()).collect();
    Some(Point(x.0.iter().zip(&corr).map(|(s, t)| s - t).collect()))
}

/// Adds projection comparisons for every anchor (Hilbert path, affine maps).
pub fn compare_with_projection(
    report: &mut SunnyReport,
    space: &Space,
    map: &MapInstance,
    anchors: &[Point],
    t_close: &Q,
    opts: &SolverOptions,
    within: &Q,
) -> Result<(), String> {
    if !space.is_hilbert() {
        return Ok(());
    }
    for x in anchors {
        let Some(px) = affine_fix_projection(map, x) else {
            continue;
        };
        let qx = sp(resolvent_point(space, map, x, t_close, opts))?;
        let d2 = sp(space.dist_sq_exact(&qx, &px))?;
        let ok = d2 <= within * within;
        report.projections.push(ProjectionEntry {
            anchor: x.clone(),
            qx,
            projection: px,
            distance: q_to_f64(&d2).sqrt(),
            within: ok,
        });
        report.passed &= ok;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::spaces::{map_library, FeasibleSet};
    use proptest::prelude::*;
    use serde_json::json;

    fn projection() -> MapInstance {
        map_library("coordinate-projection", &json!({"dim": 2, "zero": [1]})).unwrap()
    }

    #[test]
    fn projection_instance_hand_values() {
        let sp = Space::hilbert_box(2);
        let x = Point::from_ratios(&[(1, 2), (1, 1)]);
        assert_eq!(affine_fix_projection(&projection(), &x).unwrap(), Point::from_ratios(&[(1, 2), (0, 1)]));
        let fps: Vec<Point> = (0..=4).map(|s| Point::from_ratios(&[(s, 4), (0, 1)])).collect();
        let mut r = check_sunny(&sp, &projection(), &[x.clone()], &fps, &q(999, 1000), &SolverOptions::default()).unwrap();
        assert!(r.passed && r.rejected.is_empty() && r.entries.len() == 5);
        // Qx ≈ (1/2, 1−t) and the pairing is −t(1−t).
        assert_eq!(r.entries[0].pairing, fmt_q(&(-q(999, 1000) * q(1, 1000))));
        compare_with_projection(&mut r, &sp, &projection(), &[x], &q(999, 1000), &SolverOptions::default(), &q(1, 100)).unwrap();
        assert!(r.passed && r.projections[0].distance < 1e-2);
    }

    #[test]
    fn rotation_instance() {
        let sp = Space::new(2, qi(2), 1, FeasibleSet::Ball { radius: qi(1) }).unwrap();
        let rot = map_library("rational-rotation", &json!({"cos": "3/5", "sin": "4/5"})).unwrap();
        let anchors = [Point::from_ratios(&[(1, 2), (1, 3)]), Point::from_ratios(&[(-3, 5), (1, 5)])];
        let mut r = check_sunny(&sp, &rot, &anchors, &[Point::zeros(2)], &q(999, 1000), &SolverOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        compare_with_projection(&mut r, &sp, &rot, &anchors, &q(999, 1000), &SolverOptions::default(), &q(1, 100)).unwrap();
        assert_eq!(r.projections[0].projection, Point::zeros(2));
        assert!(r.passed);
    }

    #[test]
    fn non_fixed_samples_are_rejected() {
        let sp = Space::hilbert_box(2);
        let r = check_sunny(&sp, &projection(), &[Point::zeros(2)], &[Point::from_ratios(&[(1, 2), (1, 2)])], &q(1, 2), &SolverOptions::default()).unwrap();
        assert_eq!(r.rejected.len(), 1);
        assert!(r.entries.is_empty() && r.passed);
    }

    #[test]
    fn anchor_in_fix_gives_zero_pairing() {
        let sp = Space::hilbert_box(2);
        let x = Point::from_ratios(&[(1, 3), (0, 1)]);
        let r = check_sunny(&sp, &projection(), &[x.clone()], &[Point::from_ratios(&[(1, 1), (0, 1)])], &q(1, 2), &SolverOptions::default()).unwrap();
        assert_eq!(r.entries[0].qx, x);
        assert_eq!(r.entries[0].pairing, "0/1");
    }

    #[test]
    fn inconsistent_fix_is_none() {
        // y ↦ y + 1 has no fixed point.
        let shift = map_library("affine-1d", &json!({"slope": 1, "intercept": 1})).unwrap();
        assert!(affine_fix_projection(&shift, &Point::from_ints(&[0])).is_none());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_fixed(a in -8i64..8, b in -8i64..8, k in 1i64..8) {
            // T = (P + I)/2 with P the projection: Fix(T) is the bottom edge line.
            let t = map_library("convex-combination", &json!({
                "maps": [{"name": "coordinate-projection", "params": {"dim": 2, "zero": [1]}},
                         {"name": "coordinate-projection", "params": {"dim": 2, "zero": []}}],
                "weights": ["1/2", "1/2"]})).unwrap();
            let x = Point::from_ratios(&[(a, k), (b, k)]);
            let p = affine_fix_projection(&t, &x).unwrap();
            prop_assert_eq!(t.apply(&p).unwrap(), p.clone());
            prop_assert_eq!(affine_fix_projection(&t, &p).unwrap(), p.clone());
            // x − Px is orthogonal to the fixed line direction (1, 0).
            prop_assert!(x.sub(&p).0[0].is_zero());
        }
    }
}
