//! Exact rational arithmetic shared by the polytope, Markov and realization
//! modules.
//!
//! `Rational` is an arbitrary-precision fraction. Vectors of rationals
//! (`RatVector`) carry homology classes divided by periods. Textual form is
//! `p/q` (or a bare integer), which is what every file format in this crate
//! uses for exact entries.

pub mod lp;

use std::fmt;
use std::ops::{Add, Index, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q`, `-p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| ParseRationalError::Malformed(t.to_string()))?;
    let d = BigInt::from_str(den).map_err(|_| ParseRationalError::Malformed(t.to_string()))?;
    if d.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(t.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// `p/q` in lowest terms, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Closest-ish rational to `x` with denominator `den` (floor rounding).
pub fn from_f64_with_denominator(x: f64, den: i64) -> Rational {
    ratio((x * den as f64).floor() as i64, den)
}

/// A vector of exact rationals, typically an element of `H_1(S, Q)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatVector(pub Vec<Rational>);

impl RatVector {
    pub fn zeros(dim: usize) -> Self {
        RatVector(vec![Rational::zero(); dim])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        RatVector(v.iter().map(|&x| int(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        RatVector(self.0.iter().map(|x| x * s).collect())
    }

    pub fn div_int(&self, d: i64) -> Self {
        let d = int(d);
        RatVector(self.0.iter().map(|x| x / &d).collect())
    }

    /// Max-norm.
    pub fn norm_inf(&self) -> Rational {
        self.0
            .iter()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn dist_inf(&self, other: &RatVector) -> Rational {
        (self - other).norm_inf()
    }

    pub fn dot(&self, other: &RatVector) -> Rational {
        self.0
            .iter()
            .zip(&other.0)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    /// Comma-separated `p/q` entries, the CLI target syntax.
    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .map(format_rational)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_list(s: &str) -> Result<Self, ParseRationalError> {
        s.split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>, _>>()
            .map(RatVector)
    }
}

impl Index<usize> for RatVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl Add for &RatVector {
    type Output = RatVector;
    fn add(self, rhs: &RatVector) -> RatVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        RatVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &RatVector {
    type Output = RatVector;
    fn sub(self, rhs: &RatVector) -> RatVector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        RatVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_text())
    }
}

impl fmt::Display for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_text())
    }
}

impl Serialize for RatVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(format_rational).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()
            .map(RatVector)
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a single rational stored as a `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        format_rational(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(serde::de::Error::custom)
    }
}

/// Rank and a row-echelon basis of the span of `rows` (exact Gaussian
/// elimination). Returned rows are scaled to integer entries.
pub fn row_basis(rows: &[RatVector]) -> Vec<RatVector> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let dim = first.dim();
    let mut m: Vec<Vec<Rational>> = rows.iter().map(|r| r.0.clone()).collect();
    let mut basis = Vec::new();
    let mut row = 0;
    for col in 0..dim {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let piv = m[row][col].clone();
        for x in m[row].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in 0..dim {
                    let d = &f * &m[row][j];
                    m[i][j] -= d;
                }
            }
        }
        row += 1;
        if row == m.len() {
            break;
        }
    }
    for r in m.into_iter().take(row) {
        basis.push(clear_denominators(&RatVector(r)));
    }
    basis
}

/// Multiplies by the lcm of denominators so all entries become integers.
pub fn clear_denominators(v: &RatVector) -> RatVector {
    use num::Integer;
    let l = v
        .0
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.scale(&Rational::from_integer(l))
}

/// Solves the square or overdetermined system `a x = b` exactly; `None` if
/// inconsistent or underdetermined.
pub fn solve_exact(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let piv = m[row][col].clone();
        for x in m[row].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..rows {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in 0..=cols {
                    let d = &f * &m[row][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if (row..rows).any(|i| !m[i][cols].is_zero()) || pivots.len() < cols {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][cols].clone();
    }
    Some(x)
}
