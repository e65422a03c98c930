//! Exact rational and natural-number helpers shared by every module.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational.
pub type Q = BigRational;
/// Arbitrary-precision natural number (the `BigCount` of the bound).
pub type Nat = BigUint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse rational `{0}`")]
pub struct ParseRationalError(pub String);

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn nat(n: u64) -> Nat {
    Nat::from(n)
}

pub fn nat_to_q(n: &Nat) -> Q {
    Q::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()))
}

/// `n` as `u64`, saturating.
pub fn nat_to_u64(n: &Nat) -> u64 {
    n.to_u64().unwrap_or(u64::MAX)
}

/// Parses `"a/b"`, `"a"`, or a finite decimal such as `"0.125"` or `"1e-3"`.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| err())?;
        let b: BigInt = b.trim().parse().map_err(|_| err())?;
        if b.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(a, b));
    }
    let (mant, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(err());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp)
        .parse()
        .map_err(|_| err())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10u32);
    let mut v = if scale >= 0 {
        Q::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        v = -v;
    }
    Ok(v)
}

/// Canonical `"num/den"` rendering.
pub fn fmt_q(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

/// Ceiling of a nonnegative rational as a natural; negative inputs give 0.
pub fn ceil_nat(v: &Q) -> Nat {
    if !v.is_positive() {
        return Nat::zero();
    }
    let c = v.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

pub fn floor_nat(v: &Q) -> Nat {
    if !v.is_positive() {
        return Nat::zero();
    }
    v.floor().to_integer().to_biguint().unwrap_or_default()
}

pub fn q_min(a: &Q, b: &Q) -> Q {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn q_max(a: &Q, b: &Q) -> Q {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn q_to_f64(v: &Q) -> f64 {
    // Scale to keep precision for very small or very large magnitudes.
    let n = v.numer();
    let d = v.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = nb - db;
    if shift.abs() < 900 && nb < 1000 && db < 1000 {
        return n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN);
    }
    // Bring both to ~60 significant bits.
    let ns = (nb - 60).max(0) as u64;
    let ds = (db - 60).max(0) as u64;
    let nn = (n >> ns).to_f64().unwrap_or(0.0);
    let dd = (d >> ds).to_f64().unwrap_or(1.0);
    nn / dd * 2f64.powi((ns as i64 - ds as i64) as i32)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_q(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

/// Rounds `v` to the dyadic grid `2^-bits` (toward zero); keeps iterates small.
pub fn round_dyadic(v: &Q, bits: u32) -> Q {
    let scale = BigInt::one() << bits;
    let scaled = (v * Q::from_integer(scale.clone())).trunc().to_integer();
    Q::new(scaled, scale)
}

/// Integer square root floor for naturals.
pub fn isqrt(n: &Nat) -> Nat {
    n.sqrt()
}

/// Rational bracket `lo ≤ √v ≤ hi` with `hi − lo ≤ 2^-bits` (v ≥ 0).
pub fn sqrt_bounds(v: &Q, bits: u32) -> (Q, Q) {
    assert!(!v.is_negative(), "sqrt of negative rational");
    if v.is_zero() {
        return (Q::zero(), Q::zero());
    }
    // floor(√(v·4^bits)) / 2^bits is a lower bound, +1 ulp an upper bound.
    let scale = BigInt::one() << (2 * bits);
    let scaled = (v * Q::from_integer(scale)).floor().to_integer();
    let r = scaled.to_biguint().unwrap_or_default().sqrt();
    let den = BigInt::one() << bits;
    let lo = Q::new(BigInt::from_biguint(Sign::Plus, r.clone()), den.clone());
    let mut hi = Q::new(BigInt::from_biguint(Sign::Plus, r + 1u32), den);
    if &(&lo * &lo) == v {
        hi = lo.clone();
    }
    (lo, hi)
}

/// Exact `⌈c / √v⌉` for `c ≥ 0`, `v > 0`: the least natural N with N²·v ≥ c².
pub fn ceil_div_sqrt(c: &Q, v: &Q) -> Nat {
    assert!(v.is_positive());
    if !c.is_positive() {
        return Nat::zero();
    }
    let target = c * c / v; // N² ≥ target
    let t = ceil_nat(&target);
    let mut n = t.sqrt();
    while nat_to_q(&(&n * &n)) < target {
        n += 1u32;
    }
    while !n.is_zero() {
        let m = &n - 1u32;
        if nat_to_q(&(&m * &m)) >= target {
            n = m;
        } else {
            break;
        }
    }
    n
}

pub fn is_integer(v: &Q) -> bool {
    v.denom().is_one()
}

/// `a ∸ b` on naturals.
pub fn monus(a: &Nat, b: &Nat) -> Nat {
    if a > b {
        a - b
    } else {
        Nat::zero()
    }
}

pub fn gcd_nat(a: &Nat, b: &Nat) -> Nat {
    a.gcd(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q("-6/8").unwrap(), q(-3, 4));
        assert_eq!(parse_q("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_q("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_q("7").unwrap(), qi(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn sqrt_bracket() {
        let (lo, hi) = sqrt_bounds(&qi(2), 40);
        assert!(&lo * &lo <= qi(2) && &hi * &hi >= qi(2));
        assert!(&hi - &lo <= Q::new(BigInt::one(), BigInt::one() << 40));
        let (lo, hi) = sqrt_bounds(&q(9, 16), 10);
        assert_eq!(lo, q(3, 4));
        assert_eq!(hi, q(3, 4));
    }

    #[test]
    fn ceil_div_sqrt_exact() {
        // ⌈2/√(1/4)⌉ = 4, ⌈2/√(1/5)⌉ = ⌈2√5⌉ = 5
        assert_eq!(ceil_div_sqrt(&qi(2), &q(1, 4)), nat(4));
        assert_eq!(ceil_div_sqrt(&qi(2), &q(1, 5)), nat(5));
        assert_eq!(ceil_div_sqrt(&qi(1), &q(1, 2)), nat(2));
    }

    #[test]
    fn ceil_and_monus() {
        assert_eq!(ceil_nat(&q(7, 2)), nat(4));
        assert_eq!(ceil_nat(&qi(3)), nat(3));
        assert_eq!(ceil_nat(&q(-1, 2)), nat(0));
        assert_eq!(monus(&nat(3), &nat(5)), nat(0));
        assert_eq!(monus(&nat(5), &nat(3)), nat(2));
    }
}
