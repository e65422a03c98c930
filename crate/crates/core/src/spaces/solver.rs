//! Resolvent points `x_t = tTx_t + (1−t)x` and the maps `f_T`, `g_T`, `h_T`.

use super::linalg::{self, Mat};
use super::maps::{pl_eval, pl_slopes, MapClass, MapInstance, MapKind};
use super::{Interval, Point, Space, SpaceError};
use crate::num::{q_to_f64, qi, Q};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::rc::Rc;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: Q,
    /// Iteration cap for the floating-point strategies.
    pub budget: u64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: Q::new(1.into(), 1_000_000_000i64.into()),
            budget: 1_000_000,
            seed: 0,
        }
    }
}

/// `‖z − (tTz + (1−t)x)‖` as an interval.
pub fn resolvent_residual(space: &Space, t_map: &MapInstance, x: &Point, t: &Q, z: &Point) -> Result<Interval, SpaceError> {
    let tz = t_map.apply(z)?;
    let rhs = tz.lerp(x, &(Q::one() - t));
    space.norm(&z.sub(&rhs))
}

fn norm_f64(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn resolvent_point(space: &Space, t_map: &MapInstance, x: &Point, t: &Q, opts: &SolverOptions) -> Result<Point, SpaceError> {
    space.check(x)?;
    if t.is_zero() {
        return Ok(x.clone());
    }
    if t < &Q::zero() || t >= &Q::one() {
        return Err(SpaceError::BadParams("t must lie in [0,1)".into()));
    }
    let omt = Q::one() - t;
    match &t_map.kind {
        MapKind::Affine { a, c } => {
            // (I − tA) z = t c + (1−t) x
            let n = x.dim();
            let m = linalg::lin_comb(&Q::one(), &linalg::identity(n), &-t.clone(), a);
            let rhs: Vec<Q> = c.iter().zip(&x.0).map(|(ci, xi)| t * ci + &omt * xi).collect();
            linalg::solve(&m, &rhs).map(Point).ok_or(SpaceError::Singular)
        }
        MapKind::PiecewiseLinear1d {
            knots,
            left_slope,
            right_slope,
        } => {
            // z − tT(z) is strictly increasing; solve on each linear piece.
            let x0 = &x.0[0];
            let phi = |z: &Q| z - t * pl_eval(knots, left_slope, right_slope, z) - &omt * x0;
            let slopes = pl_slopes(knots, left_slope, right_slope);
            let mut bps: Vec<Option<Q>> = vec![None];
            bps.extend(knots.iter().map(|k| Some(k.0.clone())));
            bps.push(None);
            for (i, s) in slopes.iter().enumerate() {
                let (lo, hi) = (&bps[i], &bps[i + 1]);
                let anchor = lo.clone().or_else(|| hi.clone()).unwrap();
                // phi(z) = phi(anchor) + (1 − t s)(z − anchor) on the piece.
                let z = &anchor - phi(&anchor) / (Q::one() - t * s);
                let in_lo = lo.as_ref().is_none_or(|l| &z >= l);
                let in_hi = hi.as_ref().is_none_or(|h| &z <= h);
                if in_lo && in_hi {
                    return Ok(Point(vec![z]));
                }
            }
            Err(SpaceError::Singular)
        }
        MapKind::Custom(_) => custom_resolvent(space, t_map, x, t, opts),
    }
}

fn custom_resolvent(space: &Space, t_map: &MapInstance, x: &Point, t: &Q, opts: &SolverOptions) -> Result<Point, SpaceError> {
    let tf = q_to_f64(t);
    let xf = x.to_f64();
    let tol = q_to_f64(&opts.tol);
    let step = |z: &[f64]| -> Vec<f64> {
        let tz = t_map.apply_f64(z);
        tz.iter().zip(&xf).map(|(a, b)| tf * a + (1.0 - tf) * b).collect()
    };
    let resid = |z: &[f64]| -> f64 {
        let s = step(z);
        norm_f64(&z.iter().zip(&s).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let accept = |z: Vec<f64>| -> Option<Point> {
        let p = Point::from_f64(&z);
        let r = resolvent_residual(space, t_map, x, t, &p).ok()?;
        (r.hi <= opts.tol).then_some(p)
    };
    let mut best = (xf.clone(), resid(&xf));
    let note = |z: &Vec<f64>, r: f64, best: &mut (Vec<f64>, f64)| {
        if r < best.1 {
            *best = (z.clone(), r);
        }
    };
    let b = space.b as f64;
    // Picard for nonexpansive T: contraction factor t.
    if t_map.class == MapClass::Nonexpansive {
        let n = ((tol * (1.0 - tf) / b).ln() / tf.ln()).ceil().max(1.0) as u64;
        let mut z = xf.clone();
        for _ in 0..n.min(opts.budget) {
            z = step(&z);
        }
        let r = resid(&z);
        note(&z, r, &mut best);
        if let Some(p) = accept(z) {
            return Ok(p);
        }
    }
    // Damped iteration for Lipschitz pseudocontractions.
    let l = t_map.lipschitz.as_ref().map(q_to_f64).unwrap_or(1.0);
    let lam = (1.0 - tf) / ((1.0 + l) * (1.0 + l));
    let mut z = best.0.clone();
    for i in 0..opts.budget {
        let s = step(&z);
        z = z.iter().zip(&s).map(|(a, b)| (1.0 - lam) * a + lam * b).collect();
        if i % 64 == 0 {
            let r = resid(&z);
            note(&z, r, &mut best);
            if r <= tol / 4.0 {
                break;
            }
        }
    }
    let r = resid(&z);
    note(&z, r, &mut best);
    if let Some(p) = accept(z) {
        return Ok(p);
    }
    if x.dim() == 1 {
        // z − tT(z) − (1−t)x is increasing in z.
        let phi = |z: f64| z - step(&[z])[0];
        let (mut lo, mut hi) = (-4.0 * b - xf[0].abs(), 4.0 * b + xf[0].abs());
        if phi(lo) <= 0.0 && phi(hi) >= 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = vec![0.5 * (lo + hi)];
            let r = resid(&z);
            note(&z, r, &mut best);
            if let Some(p) = accept(z) {
                return Ok(p);
            }
        }
    } else if x.dim() <= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..8 {
            let mut z: Vec<f64> = (0..x.dim()).map(|_| rng.gen_range(-b..=b)).collect();
            for _ in 0..opts.budget / 8 {
                let s = step(&z);
                z = z.iter().zip(&s).map(|(a, b)| (1.0 - lam) * a + lam * b).collect();
            }
            let r = resid(&z);
            note(&z, r, &mut best);
            if let Some(p) = accept(z) {
                return Ok(p);
            }
        }
    }
    Err(SpaceError::Nonconvergence {
        best: best.0,
        residual: best.1,
    })
}

/// `f_T(x) = 2x − Tx`.
pub fn f_map(t_map: &MapInstance, x: &Point) -> Result<Point, SpaceError> {
    Ok(x.scale(&qi(2)).sub(&t_map.apply(x)?))
}

/// The unique `x` with `f_T(x) = y`.
pub fn g_map(t_map: &MapInstance, y: &Point, opts: &SolverOptions) -> Result<Point, SpaceError> {
    match &t_map.kind {
        MapKind::Affine { a, c } => {
            let n = y.dim();
            let m = linalg::lin_comb(&qi(2), &linalg::identity(n), &-Q::one(), a);
            let rhs: Vec<Q> = y.0.iter().zip(c).map(|(u, v)| u + v).collect();
            linalg::solve(&m, &rhs).map(Point).ok_or(SpaceError::Singular)
        }
        MapKind::PiecewiseLinear1d { .. } => {
            let h = h_map(t_map)?;
            h.apply(y)
        }
        MapKind::Custom(_) => {
            let l = t_map.lipschitz.as_ref().map(q_to_f64).unwrap_or(1.0);
            let lam = 1.0 / ((2.0 + l) * (2.0 + l));
            let yf = y.to_f64();
            let tol = q_to_f64(&opts.tol);
            let mut z = yf.clone();
            let mut r = f64::INFINITY;
            for _ in 0..opts.budget {
                let tz = t_map.apply_f64(&z);
                let d: Vec<f64> = z.iter().zip(&tz).zip(&yf).map(|((a, b), c)| 2.0 * a - b - c).collect();
                r = norm_f64(&d);
                if r <= tol / 4.0 {
                    break;
                }
                z = z.iter().zip(&d).map(|(a, b)| a - lam * b).collect();
            }
            if r <= tol {
                Ok(Point::from_f64(&z))
            } else {
                Err(SpaceError::Nonconvergence { best: z, residual: r })
            }
        }
    }
}

/// `h_T = T` for nonexpansive `T`, otherwise `g_T`.
pub fn h_map(t_map: &MapInstance) -> Result<MapInstance, SpaceError> {
    if t_map.class == MapClass::Nonexpansive {
        return Ok(t_map.clone());
    }
    let name = format!("h[{}]", t_map.name);
    match &t_map.kind {
        MapKind::Affine { a, c } => {
            let n = c.len();
            let m: Mat = linalg::lin_comb(&qi(2), &linalg::identity(n), &-Q::one(), a);
            let b = linalg::inverse(&m).ok_or(SpaceError::Singular)?;
            let bc = linalg::mat_vec(&b, c);
            let mut h = MapInstance::affine(name, b, bc, MapClass::Nonexpansive);
            h.lipschitz = Some(Q::one());
            h.theta = crate::moduli::Modulus::identity(crate::moduli::Role::Continuity);
            Ok(h)
        }
        MapKind::PiecewiseLinear1d {
            knots,
            left_slope,
            right_slope,
        } => {
            // f_T is increasing piecewise linear; invert by swapping knot coordinates.
            let inv: Vec<(Q, Q)> = knots.iter().map(|(x, y)| (qi(2) * x - y, x.clone())).collect();
            let l = Q::one() / (qi(2) - left_slope);
            let r = Q::one() / (qi(2) - right_slope);
            let mut h = super::maps::piecewise_linear(inv, l, r)?;
            h.name = name;
            Ok(h)
        }
        MapKind::Custom(_) => {
            let inner = t_map.clone();
            let opts = SolverOptions {
                tol: Q::new(1.into(), 1_000_000_000_000i64.into()),
                ..SolverOptions::default()
            };
            Ok(MapInstance {
                name,
                kind: MapKind::Custom(Rc::new(move |y: &[f64]| {
                    match g_map(&inner, &Point::from_f64(y), &opts) {
                        Ok(p) => p.to_f64(),
                        Err(SpaceError::Nonconvergence { best, .. }) => best,
                        Err(_) => y.to_vec(),
                    }
                })),
                class: MapClass::Nonexpansive,
                theta: crate::moduli::Modulus::identity(crate::moduli::Role::Continuity),
                lipschitz: Some(Q::one()),
            })
        }
    }
}

/// A seeded point of the feasible set.
pub fn sample_in_set<R: Rng>(space: &Space, rng: &mut R) -> Point {
    match &space.set {
        super::FeasibleSet::Box { lo, hi } => {
            const DEN: i64 = 1 << 10;
            Point(
                (0..space.dim)
                    .map(|_| lo + (hi - lo) * crate::num::q(rng.gen_range(0..=DEN), DEN))
                    .collect(),
            )
        }
        super::FeasibleSet::Ball { radius } => loop {
            let c = super::sample_cube(rng, space.dim, radius);
            if space.contains(&c) {
                return c;
            }
        },
    }
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct MapCheck {
    pub samples: usize,
    pub nonexpansive_violations: usize,
    pub pseudocontraction_violations: usize,
    /// Disagreements between the pairing form and `t‖x−y‖ ≤ ‖(t+1)(x−y) − (Tx−Ty)‖`.
    pub form_disagreements: usize,
    pub indeterminate: usize,
}

/// Samples pairs in C and checks the declared class of `T`.
pub fn check_map(space: &Space, t_map: &MapInstance, samples: usize, seed: u64) -> Result<MapCheck, SpaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = MapCheck {
        samples,
        ..MapCheck::default()
    };
    let ts = [crate::num::q(1, 4), qi(1), qi(4)];
    for _ in 0..samples {
        let x = sample_in_set(space, &mut rng);
        let y = sample_in_set(space, &mut rng);
        let (tx, ty) = (t_map.apply(&x)?, t_map.apply(&y)?);
        let d = x.sub(&y);
        let td = tx.sub(&ty);
        let nd = space.norm(&d)?;
        if t_map.class == MapClass::Nonexpansive {
            match space.norm(&td)?.le(&nd) {
                Some(true) => {}
                Some(false) => out.nonexpansive_violations += 1,
                None => out.indeterminate += 1,
            }
        }
        let pair = space.pairing(&td, &space.duality_map(&d)?)?;
        let pc = pair.le(&space.norm_sq(&d)?);
        match pc {
            Some(false) => out.pseudocontraction_violations += 1,
            None => out.indeterminate += 1,
            Some(true) => {}
        }
        let eq_form = ts.iter().map(|t| {
            let rhs = space.norm(&d.scale(&(t + Q::one())).sub(&td)).ok()?;
            nd.scale(t).le(&rhs)
        });
        let all: Option<Vec<bool>> = eq_form.collect();
        match (pc, all) {
            (Some(p), Some(v)) => {
                if v.iter().all(|&b| b) != p && p {
                    out.form_disagreements += 1;
                }
            }
            _ => out.indeterminate += 1,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::spaces::{map_library, FeasibleSet};
    use serde_json::json;

    fn line() -> Space {
        Space::hilbert_box(1)
    }

    fn affine() -> MapInstance {
        map_library("affine-1d", &json!({"slope": -2, "intercept": 1})).unwrap()
    }

    #[test]
    fn affine_resolvent_closed_form() {
        let z = resolvent_point(&line(), &affine(), &Point(vec![qi(0)]), &q(1, 2), &SolverOptions::default()).unwrap();
        assert_eq!(z, Point(vec![q(1, 4)]));
        for n in 1..20 {
            let t = q(n, n + 1);
            let z = resolvent_point(&line(), &affine(), &Point(vec![qi(0)]), &t, &SolverOptions::default()).unwrap();
            assert_eq!(z.0[0], q(n, 3 * n + 1));
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        let fp = Point(vec![q(1, 3)]);
        for t in [q(1, 7), q(9, 10)] {
            assert_eq!(resolvent_point(&line(), &affine(), &fp, &t, &SolverOptions::default()).unwrap(), fp);
        }
    }

    #[test]
    fn rotation_resolvent_exact() {
        let s = Space::new(2, qi(2), 1, FeasibleSet::Ball { radius: qi(1) }).unwrap();
        let r = map_library("rational-rotation", &json!({"cos": "3/5", "sin": "4/5"})).unwrap();
        let x = Point::from_ints(&[1, 0]);
        let t = q(9, 10);
        let z = resolvent_point(&s, &r, &x, &t, &SolverOptions::default()).unwrap();
        let res = resolvent_residual(&s, &r, &x, &t, &z).unwrap();
        assert!(res.lo.is_zero() && res.hi.is_zero());
    }

    #[test]
    fn f_g_h_on_affine() {
        let a = affine();
        assert_eq!(f_map(&a, &Point(vec![q(1, 2)])).unwrap(), Point(vec![qi(1)]));
        assert_eq!(g_map(&a, &Point(vec![qi(0)]), &SolverOptions::default()).unwrap(), Point(vec![q(1, 4)]));
        let h = h_map(&a).unwrap();
        assert_eq!(h.apply(&Point(vec![q(1, 3)])).unwrap(), Point(vec![q(1, 3)]));
        assert_eq!(h.apply(&Point(vec![qi(1)])).unwrap(), Point(vec![q(1, 2)]));
        let id = map_library("affine-1d", &json!({"slope": 1})).unwrap();
        assert_eq!(g_map(&id, &Point(vec![q(2, 7)]), &SolverOptions::default()).unwrap(), Point(vec![q(2, 7)]));
        let rot = map_library("rational-rotation", &json!({"cos": "3/5", "sin": "4/5"})).unwrap();
        let y = Point::from_ints(&[1, 2]);
        let gx = g_map(&rot, &y, &SolverOptions::default()).unwrap();
        assert_eq!(f_map(&rot, &gx).unwrap(), y);
    }

    #[test]
    fn piecewise_linear_paths() {
        let m = map_library("piecewise-linear-1d", &json!({"knots": [[0, 1], ["1/2", 0], [1, "1/4"]]})).unwrap();
        let x = Point(vec![qi(0)]);
        for t in [q(1, 3), q(3, 4), q(99, 100)] {
            let z = resolvent_point(&line(), &m, &x, &t, &SolverOptions::default()).unwrap();
            let r = resolvent_residual(&line(), &m, &x, &t, &z).unwrap();
            assert!(r.hi.is_zero());
        }
        let h = h_map(&m).unwrap();
        for k in 0..=8 {
            let y = Point(vec![q(k, 8)]);
            let g = h.apply(&y).unwrap();
            assert_eq!(f_map(&m, &g).unwrap(), y);
        }
    }

    #[test]
    fn custom_solver_matches_exact() {
        let f = super::super::maps::custom_map("neg2", |v| vec![1.0 - 2.0 * v[0]], MapClass::Pseudocontraction, qi(2));
        let z = resolvent_point(&line(), &f, &Point(vec![qi(0)]), &q(1, 2), &SolverOptions::default()).unwrap();
        assert!((z.to_f64()[0] - 0.25).abs() < 1e-8);
        let g = g_map(&f, &Point(vec![qi(0)]), &SolverOptions::default()).unwrap();
        assert!((g.to_f64()[0] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn nonconvergence_reports_best() {
        let f = super::super::maps::custom_map("neg2", |v| v.iter().map(|c| 1.0 - 2.0 * c).collect(), MapClass::Pseudocontraction, qi(2));
        let opts = SolverOptions {
            tol: Q::new(1.into(), 10i64.pow(18).into()),
            budget: 3,
            seed: 0,
        };
        let r = resolvent_point(&Space::new(2, qi(2), 1, FeasibleSet::Ball { radius: qi(1) }).unwrap(), &f, &Point::from_ints(&[0, 0]), &q(1, 2), &opts);
        assert!(r.is_err());
    }

    #[test]
    fn library_class_checks() {
        let sq = Space::hilbert_box(2);
        for (name, p) in [
            ("coordinate-projection", json!({})),
            ("rational-rotation", json!({"cos": "3/5", "sin": "4/5"})),
        ] {
            let m = map_library(name, &p).unwrap();
            let c = check_map(&sq, &m, 300, 1).unwrap();
            assert_eq!(c.nonexpansive_violations + c.pseudocontraction_violations + c.form_disagreements, 0, "{name}");
        }
        let c = check_map(&line(), &affine(), 300, 2).unwrap();
        assert_eq!(c.pseudocontraction_violations + c.form_disagreements, 0);
        let h = h_map(&affine()).unwrap();
        let c = check_map(&line(), &h, 300, 3).unwrap();
        assert_eq!(c.nonexpansive_violations, 0);
    }
}
