//! Self-maps of the feasible set: a small library of exactly representable
//! nonexpansive maps and pseudocontractions.

use super::linalg::{self, Mat};
use super::{Point, SpaceError};
use crate::moduli::{Modulus, Role};
use crate::num::{parse_q, q_max, qi, Q};
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::Value;
use std::rc::Rc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapClass {
    Nonexpansive,
    Pseudocontraction,
}

/// `f64` closure for maps with no exact form.
pub type F64Map = Rc<dyn Fn(&[f64]) -> Vec<f64>>;

#[derive(Clone)]
pub enum MapKind {
    /// `x ↦ A x + c`.
    Affine { a: Mat, c: Vec<Q> },
    /// Linear interpolation through sorted knots, extended linearly with the
    /// given slopes outside the knot range.
    PiecewiseLinear1d {
        knots: Vec<(Q, Q)>,
        left_slope: Q,
        right_slope: Q,
    },
    /// Evaluated in floating point.
    Custom(F64Map),
}

#[derive(Clone)]
pub struct MapInstance {
    pub name: String,
    pub kind: MapKind,
    pub class: MapClass,
    pub theta: Modulus,
    pub lipschitz: Option<Q>,
}

impl std::fmt::Debug for MapInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MapInstance({}, {:?})", self.name, self.class)
    }
}

impl MapInstance {
    pub fn affine(name: impl Into<String>, a: Mat, c: Vec<Q>, class: MapClass) -> Self {
        let l = linf_operator_bound(&a);
        MapInstance {
            name: name.into(),
            kind: MapKind::Affine { a, c },
            class,
            theta: lipschitz_theta(&l),
            lipschitz: Some(l),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, MapKind::Custom(_))
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            MapKind::Affine { c, .. } => Some(c.len()),
            MapKind::PiecewiseLinear1d { .. } => Some(1),
            MapKind::Custom(_) => None,
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point, SpaceError> {
        if let Some(d) = self.dim() {
            if d != x.dim() {
                return Err(SpaceError::DimensionMismatch {
                    expected: d,
                    got: x.dim(),
                });
            }
        }
        Ok(match &self.kind {
            MapKind::Affine { a, c } => {
                Point(linalg::mat_vec(a, &x.0).into_iter().zip(c).map(|(u, v)| u + v).collect())
            }
            MapKind::PiecewiseLinear1d {
                knots,
                left_slope,
                right_slope,
            } => Point(vec![pl_eval(knots, left_slope, right_slope, &x.0[0])]),
            MapKind::Custom(f) => Point::from_f64(&f(&x.to_f64())),
        })
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Custom(f) => f(x),
            _ => self.apply(&Point::from_f64(x)).map(|p| p.to_f64()).unwrap_or_default(),
        }
    }
}

/// Piecewise-linear evaluation; knots sorted by abscissa.
pub fn pl_eval(knots: &[(Q, Q)], left: &Q, right: &Q, x: &Q) -> Q {
    let (x0, y0) = &knots[0];
    if x <= x0 {
        return y0 + left * (x - x0);
    }
    for w in knots.windows(2) {
        let ((a, fa), (b, fb)) = (&w[0], &w[1]);
        if x <= b {
            return fa + (fb - fa) / (b - a) * (x - a);
        }
    }
    let (xn, yn) = knots.last().unwrap();
    yn + right * (x - xn)
}

/// Segment slopes including the two extensions.
pub fn pl_slopes(knots: &[(Q, Q)], left: &Q, right: &Q) -> Vec<Q> {
    let mut s = vec![left.clone()];
    for w in knots.windows(2) {
        s.push((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0));
    }
    s.push(right.clone());
    s
}

/// Max row-sum norm. Exact for the diagonal and 1-D maps; orthogonal and
/// combined maps overwrite it.
fn linf_operator_bound(a: &Mat) -> Q {
    a.iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<Q>())
        .max()
        .unwrap_or_else(Q::zero)
}

fn lipschitz_theta(l: &Q) -> Modulus {
    let l = q_max(l, &qi(1));
    Modulus::linear(Q::one() / l, Role::Continuity)
}

fn param_q(params: &Value, key: &str, default: Option<Q>) -> Result<Q, SpaceError> {
    match params.get(key) {
        None | Some(Value::Null) => {
            default.ok_or_else(|| SpaceError::BadParams(format!("missing parameter `{key}`")))
        }
        Some(v) => value_q(v).ok_or_else(|| SpaceError::BadParams(format!("parameter `{key}` is not a rational"))),
    }
}

pub fn value_q(v: &Value) -> Option<Q> {
    match v {
        Value::String(s) => parse_q(s).ok(),
        Value::Number(n) => parse_q(&n.to_string()).ok(),
        _ => None,
    }
}

/// Builds a library map from its name and JSON parameters.
pub fn map_library(name: &str, params: &Value) -> Result<MapInstance, SpaceError> {
    match name {
        "affine-1d" => {
            let s = param_q(params, "slope", None)?;
            let c = param_q(params, "intercept", Some(Q::zero()))?;
            let class = if s.abs() <= qi(1) {
                MapClass::Nonexpansive
            } else if s <= qi(1) {
                MapClass::Pseudocontraction
            } else {
                return Err(SpaceError::BadParams("slope > 1 is not a pseudocontraction".into()));
            };
            let mut m = MapInstance::affine("affine-1d", vec![vec![s]], vec![c], class);
            m.name = format!("affine-1d({},{})", params.get("slope").unwrap_or(&Value::Null), params.get("intercept").unwrap_or(&Value::Null));
            Ok(m)
        }
        "rational-rotation" => {
            let c = param_q(params, "cos", None)?;
            let s = param_q(params, "sin", None)?;
            if &c * &c + &s * &s != qi(1) {
                return Err(SpaceError::BadParams("cos² + sin² must equal 1".into()));
            }
            let a = vec![vec![c.clone(), -s.clone()], vec![s, c]];
            let mut m = MapInstance::affine("rational-rotation", a, vec![Q::zero(), Q::zero()], MapClass::Nonexpansive);
            m.lipschitz = Some(qi(1));
            m.theta = lipschitz_theta(&qi(1));
            Ok(m)
        }
        "coordinate-projection" => {
            let dim = params.get("dim").and_then(Value::as_u64).unwrap_or(2) as usize;
            let zero: Vec<usize> = match params.get("zero") {
                Some(Value::Array(v)) => v.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect(),
                _ => vec![dim - 1],
            };
            if dim == 0 || zero.iter().any(|&i| i >= dim) {
                return Err(SpaceError::BadParams("projection index out of range".into()));
            }
            let mut a = linalg::identity(dim);
            for &i in &zero {
                a[i][i] = Q::zero();
            }
            Ok(MapInstance::affine("coordinate-projection", a, vec![Q::zero(); dim], MapClass::Nonexpansive))
        }
        "convex-combination" => {
            let maps = params
                .get("maps")
                .and_then(Value::as_array)
                .ok_or_else(|| SpaceError::BadParams("`maps` must be a list".into()))?;
            let weights = params
                .get("weights")
                .and_then(Value::as_array)
                .ok_or_else(|| SpaceError::BadParams("`weights` must be a list".into()))?;
            if maps.len() != weights.len() || maps.is_empty() {
                return Err(SpaceError::BadParams("maps and weights differ in length".into()));
            }
            let ws: Vec<Q> = weights
                .iter()
                .map(|w| value_q(w).ok_or_else(|| SpaceError::BadParams("weight".into())))
                .collect::<Result<_, _>>()?;
            if ws.iter().any(|w| w.is_negative()) || ws.iter().sum::<Q>() != qi(1) {
                return Err(SpaceError::BadParams("weights must be nonnegative and sum to 1".into()));
            }
            let mut acc: Option<(Mat, Vec<Q>)> = None;
            let mut class = MapClass::Nonexpansive;
            let mut lip = Q::zero();
            for (spec, w) in maps.iter().zip(&ws) {
                let n = spec.get("name").and_then(Value::as_str).unwrap_or("");
                let m = map_library(n, spec.get("params").unwrap_or(&Value::Null))?;
                let MapKind::Affine { a, c } = m.kind else {
                    return Err(SpaceError::BadParams("convex-combination needs affine parts".into()));
                };
                if m.class == MapClass::Pseudocontraction {
                    class = MapClass::Pseudocontraction;
                }
                lip += w * m.lipschitz.unwrap_or_else(Q::one);
                acc = Some(match acc {
                    None => (
                        linalg::lin_comb(w, &a, &Q::zero(), &a),
                        c.iter().map(|v| v * w).collect(),
                    ),
                    Some((a0, c0)) => {
                        if a0.len() != a.len() {
                            return Err(SpaceError::BadParams("parts differ in dimension".into()));
                        }
                        (
                            linalg::lin_comb(&Q::one(), &a0, w, &a),
                            c0.iter().zip(&c).map(|(u, v)| u + v * w).collect(),
                        )
                    }
                });
            }
            let (a, c) = acc.unwrap();
            let mut m = MapInstance::affine("convex-combination", a, c, class);
            m.lipschitz = Some(lip.clone());
            m.theta = lipschitz_theta(&lip);
            Ok(m)
        }
        "piecewise-linear-1d" => {
            let raw = params
                .get("knots")
                .and_then(Value::as_array)
                .ok_or_else(|| SpaceError::BadParams("`knots` must be a list of pairs".into()))?;
            let mut knots = Vec::new();
            for k in raw {
                let pair = k.as_array().filter(|p| p.len() == 2);
                let (x, y) = pair
                    .and_then(|p| Some((value_q(&p[0])?, value_q(&p[1])?)))
                    .ok_or_else(|| SpaceError::BadParams("knot must be [x, y]".into()))?;
                knots.push((x, y));
            }
            knots.sort_by(|a, b| a.0.cmp(&b.0));
            if knots.is_empty() || knots.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(SpaceError::BadParams("knots need distinct abscissae".into()));
            }
            let left = param_q(params, "left_slope", Some(Q::zero()))?;
            let right = param_q(params, "right_slope", Some(Q::zero()))?;
            piecewise_linear(knots, left, right)
        }
        _ => Err(SpaceError::UnknownMap(name.to_string())),
    }
}

pub fn piecewise_linear(knots: Vec<(Q, Q)>, left: Q, right: Q) -> Result<MapInstance, SpaceError> {
    let slopes = pl_slopes(&knots, &left, &right);
    // 1-D: difference quotients are averages of slopes.
    let class = if slopes.iter().all(|s| s.abs() <= qi(1)) {
        MapClass::Nonexpansive
    } else if slopes.iter().all(|s| s <= &qi(1)) {
        MapClass::Pseudocontraction
    } else {
        return Err(SpaceError::BadParams("a slope exceeds 1".into()));
    };
    let l = slopes.iter().map(|s| s.abs()).max().unwrap();
    Ok(MapInstance {
        name: "piecewise-linear-1d".into(),
        kind: MapKind::PiecewiseLinear1d {
            knots,
            left_slope: left,
            right_slope: right,
        },
        class,
        theta: lipschitz_theta(&l),
        lipschitz: Some(l),
    })
}

/// A floating-point map with declared class and Lipschitz constant.
pub fn custom_map(name: &str, f: impl Fn(&[f64]) -> Vec<f64> + 'static, class: MapClass, lipschitz: Q) -> MapInstance {
    MapInstance {
        name: name.into(),
        kind: MapKind::Custom(Rc::new(f)),
        class,
        theta: lipschitz_theta(&lipschitz),
        lipschitz: Some(lipschitz),
    }
}
