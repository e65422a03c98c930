use crate::num::{fmt_q, parse_q, q_to_f64, Q};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A vector of exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Point(pub Vec<Q>);

impl Point {
    pub fn zeros(dim: usize) -> Self {
        Point(vec![Q::zero(); dim])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Point(v.iter().map(|&x| crate::num::qi(x)).collect())
    }

    pub fn from_ratios(v: &[(i64, i64)]) -> Self {
        Point(v.iter().map(|&(n, d)| crate::num::q(n, d)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: &Q) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// `(1−λ)·self + λ·o`
    pub fn lerp(&self, o: &Point, lambda: &Q) -> Point {
        let one_minus = Q::from_integer(1.into()) - lambda;
        Point(
            self.0
                .iter()
                .zip(&o.0)
                .map(|(a, b)| a * &one_minus + b * lambda)
                .collect(),
        )
    }

    pub fn midpoint(&self, o: &Point) -> Point {
        self.lerp(o, &crate::num::q(1, 2))
    }

    pub fn dot(&self, o: &Point) -> Q {
        self.0.iter().zip(&o.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> Q {
        self.0.iter().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(q_to_f64).collect()
    }

    pub fn from_f64(v: &[f64]) -> Point {
        Point(v.iter().map(|&x| crate::num::f64_to_q(x)).collect())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(fmt_q).collect()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Coord {
            S(String),
            I(i64),
            F(f64),
        }
        let raw: Vec<Coord> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|c| match c {
                Coord::S(s) => parse_q(&s).map_err(serde::de::Error::custom),
                Coord::I(i) => Ok(crate::num::qi(i)),
                Coord::F(x) => parse_q(&x.to_string()).map_err(serde::de::Error::custom),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Point)
    }
}

/// Serde adapter for a single rational as `"num/den"`.
pub mod qstr {
    use super::*;
    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        fmt_q(v).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum R {
            S(String),
            I(i64),
            F(f64),
        }
        match R::deserialize(d)? {
            R::S(s) => parse_q(&s).map_err(serde::de::Error::custom),
            R::I(i) => Ok(crate::num::qi(i)),
            R::F(x) => parse_q(&x.to_string()).map_err(serde::de::Error::custom),
        }
    }
}

/// Serde adapter for an optional rational.
pub mod qstr_opt {
    use super::*;
    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(fmt_q).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        let o: Option<String> = Option::deserialize(d)?;
        o.map(|s| parse_q(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn json_round_trip() {
        let p = Point::from_ratios(&[(1, 3), (-2, 5)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["1/3","-2/5"]"#);
        let back: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let loose: Point = serde_json::from_str(r#"[1, "0.5"]"#).unwrap();
        assert_eq!(loose, Point(vec![q(1, 1), q(1, 2)]));
    }

    #[test]
    fn arithmetic() {
        let a = Point::from_ints(&[1, 2]);
        let b = Point::from_ints(&[3, -2]);
        assert_eq!(a.add(&b), Point::from_ints(&[4, 0]));
        assert_eq!(a.midpoint(&b), Point::from_ints(&[2, 0]));
        assert_eq!(a.dot(&b), crate::num::qi(-1));
    }
}
