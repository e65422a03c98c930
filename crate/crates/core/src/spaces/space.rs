use super::point::Point;
use super::SpaceError;
use crate::num::{f64_to_q, q, q_to_f64, qi, sqrt_bounds, Q};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Bits of precision for rational square-root brackets.
pub const SQRT_BITS: u32 = 96;

/// A real number known to lie in `[lo, hi]`; exact when `lo == hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn exact(v: Q) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    /// An `f64` value widened by `slack·max(1,|v|)` on both sides.
    pub fn approx(v: f64, slack: f64) -> Self {
        let w = slack * v.abs().max(1.0);
        Interval {
            lo: f64_to_q(v - w),
            hi: f64_to_q(v + w),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn mid_f64(&self) -> f64 {
        (q_to_f64(&self.lo) + q_to_f64(&self.hi)) / 2.0
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn scale(&self, s: &Q) -> Interval {
        let (a, b) = (&self.lo * s, &self.hi * s);
        if s.is_negative() {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        Interval {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        }
    }

    /// Certified `self ≤ o`: `Some(true)` / `Some(false)` when decided, `None` when the
    /// brackets overlap.
    pub fn le(&self, o: &Interval) -> Option<bool> {
        if self.hi <= o.lo {
            Some(true)
        } else if self.lo > o.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn sqrt(&self) -> Interval {
        let lo = if self.lo.is_positive() {
            sqrt_bounds(&self.lo, SQRT_BITS).0
        } else {
            Q::zero()
        };
        let hi = if self.hi.is_positive() {
            sqrt_bounds(&self.hi, SQRT_BITS).1
        } else {
            Q::zero()
        };
        Interval { lo, hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeasibleSet {
    /// Coordinatewise box `[lo, hi]`.
    Box {
        #[serde(with = "super::point::qstr")]
        lo: Q,
        #[serde(with = "super::point::qstr")]
        hi: Q,
    },
    /// Closed ball of the given radius around the origin.
    Ball {
        #[serde(with = "super::point::qstr")]
        radius: Q,
    },
}

/// ℓ^p on ℚ^d with a norm/diameter bound `b` and a feasible set.
#[derive(Clone, Debug)]
pub struct Space {
    pub dim: usize,
    pub p: Q,
    pub b: u64,
    pub set: FeasibleSet,
    /// Relative slack for the non-exact (p ∉ {1,2}) path.
    pub slack: f64,
}

/// A dual vector; exact coordinates on the Hilbert path.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint(pub Vec<Interval>);

impl Space {
    pub fn new(dim: usize, p: Q, b: u64, set: FeasibleSet) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::BadParams("dim must be positive".into()));
        }
        if p < qi(1) {
            return Err(SpaceError::BadParams("p must be ≥ 1".into()));
        }
        if b == 0 {
            return Err(SpaceError::BadParams("b must be a positive integer".into()));
        }
        Ok(Space {
            dim,
            p,
            b,
            set,
            slack: 1e-12,
        })
    }

    /// Euclidean space on the unit box `[0,1]^d` with `b = ⌈√d⌉`.
    pub fn hilbert_box(dim: usize) -> Self {
        let b = (dim as f64).sqrt().ceil() as u64;
        Space::new(
            dim,
            qi(2),
            b.max(1),
            FeasibleSet::Box {
                lo: Q::zero(),
                hi: Q::one(),
            },
        )
        .unwrap()
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == qi(2)
    }

    pub fn check(&self, x: &Point) -> Result<(), SpaceError> {
        if x.dim() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn p_f64(&self) -> f64 {
        q_to_f64(&self.p)
    }

    /// `‖x‖_p` in floating point.
    fn norm_f64(&self, x: &[f64]) -> f64 {
        let p = self.p_f64();
        let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }

    /// Squared norm: exact rational for p ∈ {1, 2}.
    pub fn norm_sq(&self, x: &Point) -> Result<Interval, SpaceError> {
        self.check(x)?;
        if self.is_hilbert() {
            return Ok(Interval::exact(x.dot(x)));
        }
        if self.p == qi(1) {
            let s: Q = x.0.iter().map(|c| c.abs()).sum();
            return Ok(Interval::exact(&s * &s));
        }
        let n = self.norm_f64(&x.to_f64());
        Ok(Interval::approx(n * n, self.slack))
    }

    /// Norm as a certified bracket.
    pub fn norm(&self, x: &Point) -> Result<Interval, SpaceError> {
        self.check(x)?;
        if self.is_hilbert() {
            return Ok(Interval::exact(x.dot(x)).sqrt());
        }
        if self.p == qi(1) {
            return Ok(Interval::exact(x.0.iter().map(|c| c.abs()).sum()));
        }
        Ok(Interval::approx(self.norm_f64(&x.to_f64()), self.slack))
    }

    pub fn dist_sq(&self, x: &Point, y: &Point) -> Result<Interval, SpaceError> {
        self.norm_sq(&x.sub(y))
    }

    /// Exact squared distance on the Hilbert path.
    pub fn dist_sq_exact(&self, x: &Point, y: &Point) -> Result<Q, SpaceError> {
        if !self.is_hilbert() {
            return Err(SpaceError::NotExact);
        }
        self.check(x)?;
        let d = x.sub(y);
        Ok(d.dot(&d))
    }

    /// Normalized duality map `j(x)_i = ‖x‖^{2−p}|x_i|^{p−1}sign(x_i)`.
    pub fn duality_map(&self, x: &Point) -> Result<DualPoint, SpaceError> {
        self.check(x)?;
        if self.is_hilbert() {
            return Ok(DualPoint(x.0.iter().cloned().map(Interval::exact).collect()));
        }
        if x.is_zero() {
            return Ok(DualPoint(vec![Interval::exact(Q::zero()); self.dim]));
        }
        if self.p == qi(1) {
            // A selection of the (set-valued) ℓ¹ duality map.
            let n: Q = x.0.iter().map(|c| c.abs()).sum();
            return Ok(DualPoint(
                x.0.iter()
                    .map(|c| Interval::exact(&n * c.signum()))
                    .collect(),
            ));
        }
        let p = self.p_f64();
        let xf = x.to_f64();
        let n = self.norm_f64(&xf);
        Ok(DualPoint(
            xf.iter()
                .map(|&v| {
                    let j = n.powf(2.0 - p) * v.abs().powf(p - 1.0) * v.signum();
                    Interval::approx(j, self.slack * 4.0)
                })
                .collect(),
        ))
    }

    /// `⟨x, j⟩`.
    pub fn pairing(&self, x: &Point, j: &DualPoint) -> Result<Interval, SpaceError> {
        self.check(x)?;
        let mut acc = Interval::exact(Q::zero());
        for (c, v) in x.0.iter().zip(&j.0) {
            acc = acc.add(&v.scale(c));
        }
        Ok(acc)
    }

    /// Dual norm `‖j‖_{p/(p−1)}`.
    pub fn dual_norm(&self, j: &DualPoint) -> Interval {
        if self.is_hilbert() && j.0.iter().all(Interval::is_exact) {
            let s: Q = j.0.iter().map(|v| &v.lo * &v.lo).sum();
            return Interval::exact(s).sqrt();
        }
        if self.p == qi(1) {
            // ℓ^∞ norm.
            let lo = j.0.iter().map(|v| v.lo.abs().min(v.hi.abs())).max();
            let hi = j.0.iter().map(|v| v.lo.abs().max(v.hi.abs())).max();
            return Interval {
                lo: lo.unwrap_or_else(Q::zero),
                hi: hi.unwrap_or_else(Q::zero),
            };
        }
        let p = self.p_f64();
        let qexp = p / (p - 1.0);
        let v: Vec<f64> = j.0.iter().map(|i| i.mid_f64()).collect();
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let n = if m == 0.0 {
            0.0
        } else {
            m * v.iter().map(|x| (x.abs() / m).powf(qexp)).sum::<f64>().powf(1.0 / qexp)
        };
        Interval::approx(n, self.slack * 8.0)
    }

    pub fn dual_sub(&self, a: &DualPoint, b: &DualPoint) -> DualPoint {
        DualPoint(a.0.iter().zip(&b.0).map(|(x, y)| x.sub(y)).collect())
    }

    pub fn contains(&self, x: &Point) -> bool {
        if x.dim() != self.dim {
            return false;
        }
        match &self.set {
            FeasibleSet::Box { lo, hi } => x.0.iter().all(|c| c >= lo && c <= hi),
            FeasibleSet::Ball { radius } => self
                .norm(x)
                .map(|n| n.le(&Interval::exact(radius.clone())) == Some(true))
                .unwrap_or(false),
        }
    }

    /// A seeded rational point, uniform on the dyadic grid of `[-r, r]^d`.
    pub fn sample_cube<R: Rng>(&self, rng: &mut R, r: &Q) -> Point {
        sample_cube(rng, self.dim, r)
    }
}

pub fn sample_cube<R: Rng>(rng: &mut R, dim: usize, r: &Q) -> Point {
    const DEN: i64 = 1 << 12;
    Point(
        (0..dim)
            .map(|_| q(rng.gen_range(-DEN..=DEN), DEN) * r)
            .collect(),
    )
}

/// An exact rational point on the Euclidean unit sphere (inverse stereographic
/// projection of a rational point).
pub fn sample_unit_sphere<R: Rng>(rng: &mut R, dim: usize) -> Point {
    if dim == 1 {
        return Point(vec![if rng.gen_bool(0.5) { qi(1) } else { qi(-1) }]);
    }
    let s = sample_cube(rng, dim - 1, &qi(2));
    let n2 = s.dot(&s);
    let den = &n2 + qi(1);
    let mut c: Vec<Q> = s.0.iter().map(|v| qi(2) * v / &den).collect();
    c.push((&n2 - qi(1)) / &den);
    Point(c)
}
