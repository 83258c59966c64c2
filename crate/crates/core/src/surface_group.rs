//! Words in the fundamental group of a closed orientable surface of genus g.
//!
//! Generators are ordered `a1, b1, ..., ag, bg`; letter `2i-1` is `a_i`,
//! letter `2i` is `b_i`, and a negative letter is the inverse. The group is
//! presented by the single relator `[a1,b1]...[ag,bg]`, but words are only
//! freely reduced: no relator rewriting is attempted here.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::RatVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter index {index} out of range for genus {genus}")]
    InvalidIndex { index: i32, genus: usize },
    #[error("unrecognized token `{0}`")]
    BadToken(String),
    #[error("genus must be at least 1")]
    ZeroGenus,
    #[error("genus mismatch: {0} vs {1}")]
    GenusMismatch(usize, usize),
    #[error("operation undefined for the identity word")]
    Identity,
}

/// A freely reduced word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord {
    genus: usize,
    letters: Vec<i32>,
}

fn check_letter(genus: usize, x: i32) -> Result<(), WordError> {
    if x == 0 || x.unsigned_abs() as usize > 2 * genus {
        Err(WordError::InvalidIndex { index: x, genus })
    } else {
        Ok(())
    }
}

fn push_reduced(out: &mut Vec<i32>, x: i32) {
    if out.last() == Some(&-x) {
        out.pop();
    } else {
        out.push(x);
    }
}

/// Freely reduces a raw letter sequence.
pub fn free_reduce(genus: usize, letters: &[i32]) -> Result<GroupWord, WordError> {
    if genus == 0 {
        return Err(WordError::ZeroGenus);
    }
    let mut out = Vec::with_capacity(letters.len());
    for &x in letters {
        check_letter(genus, x)?;
        push_reduced(&mut out, x);
    }
    Ok(GroupWord {
        genus,
        letters: out,
    })
}

impl GroupWord {
    pub fn new(genus: usize, letters: &[i32]) -> Result<Self, WordError> {
        free_reduce(genus, letters)
    }

    pub fn identity(genus: usize) -> Self {
        GroupWord {
            genus,
            letters: Vec::new(),
        }
    }

    /// `a_i` for `i` in `1..=g`.
    pub fn a(genus: usize, i: usize) -> Self {
        GroupWord {
            genus,
            letters: vec![2 * i as i32 - 1],
        }
    }

    /// `b_i` for `i` in `1..=g`.
    pub fn b(genus: usize, i: usize) -> Self {
        GroupWord {
            genus,
            letters: vec![2 * i as i32],
        }
    }

    /// The surface relator `[a1,b1]...[ag,bg]`, freely reduced (it already is).
    pub fn relator(genus: usize) -> Self {
        let mut letters = Vec::with_capacity(4 * genus);
        for i in 1..=genus as i32 {
            let (a, b) = (2 * i - 1, 2 * i);
            letters.extend_from_slice(&[a, b, -a, -b]);
        }
        GroupWord { genus, letters }
    }

    /// Parses whitespace-separated tokens like `a1 B1 a2`. Uppercase means
    /// inverse. The empty string and `1` denote the identity.
    pub fn parse(genus: usize, s: &str) -> Result<Self, WordError> {
        let mut raw = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" || tok == "e" {
                continue;
            }
            let mut chars = tok.chars();
            let head = chars.next().ok_or_else(|| WordError::BadToken(tok.into()))?;
            let idx: i32 = chars
                .as_str()
                .parse()
                .map_err(|_| WordError::BadToken(tok.into()))?;
            if idx < 1 {
                return Err(WordError::BadToken(tok.into()));
            }
            let x = match head {
                'a' => 2 * idx - 1,
                'b' => 2 * idx,
                'A' => -(2 * idx - 1),
                'B' => -(2 * idx),
                _ => return Err(WordError::BadToken(tok.into())),
            };
            raw.push(x);
        }
        free_reduce(genus, &raw)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    fn same_genus(&self, other: &GroupWord) {
        assert_eq!(self.genus, other.genus, "genus mismatch");
    }

    pub fn compose(&self, other: &GroupWord) -> GroupWord {
        self.same_genus(other);
        let mut out = self.letters.clone();
        for &x in &other.letters {
            push_reduced(&mut out, x);
        }
        GroupWord {
            genus: self.genus,
            letters: out,
        }
    }

    pub fn invert(&self) -> GroupWord {
        GroupWord {
            genus: self.genus,
            letters: self.letters.iter().rev().map(|x| -x).collect(),
        }
    }

    /// `c w c^-1`.
    pub fn conjugate(&self, c: &GroupWord) -> GroupWord {
        c.compose(self).compose(&c.invert())
    }

    pub fn pow(&self, k: i64) -> GroupWord {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut out = GroupWord::identity(self.genus);
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }

    /// Strips matching first/last letters; the result is conjugate to `self`.
    pub fn cyclic_reduce(&self) -> GroupWord {
        let l = &self.letters;
        let (mut i, mut j) = (0usize, l.len());
        while j >= i + 2 && l[i] == -l[j - 1] {
            i += 1;
            j -= 1;
        }
        GroupWord {
            genus: self.genus,
            letters: l[i..j].to_vec(),
        }
    }

    /// Returns `(u, k)` with the cyclic reduction of `self` equal to `u^k`
    /// and `u` not a proper power.
    pub fn primitive_root(&self) -> Result<(GroupWord, usize), WordError> {
        let c = self.cyclic_reduce();
        if c.is_identity() {
            return Err(WordError::Identity);
        }
        let p = smallest_period(&c.letters);
        let n = c.len();
        let k = n / p;
        Ok((
            GroupWord {
                genus: self.genus,
                letters: c.letters[..p].to_vec(),
            },
            k,
        ))
    }

    pub fn is_primitive(&self) -> Result<bool, WordError> {
        Ok(self.primitive_root()?.1 == 1)
    }

    /// Signed letter counts, ordered `(a1, b1, ..., ag, bg)`.
    pub fn abelianize(&self) -> HomologyVector {
        let mut v = vec![0i64; 2 * self.genus];
        for &x in &self.letters {
            let k = x.unsigned_abs() as usize - 1;
            v[k] += x.signum() as i64;
        }
        HomologyVector(v)
    }

    /// Canonical representative of the conjugacy class in the free group:
    /// the lexicographically least rotation of the cyclic reduction.
    pub fn cyclic_normal_form(&self) -> GroupWord {
        let c = self.cyclic_reduce();
        let n = c.len();
        let mut best = c.letters.clone();
        for r in 1..n {
            let rot: Vec<i32> = c.letters[r..].iter().chain(&c.letters[..r]).copied().collect();
            if rot < best {
                best = rot;
            }
        }
        GroupWord {
            genus: self.genus,
            letters: best,
        }
    }
}

/// Smallest `p` dividing `n = s.len()` such that `s` is `s[..p]` repeated.
fn smallest_period(s: &[i32]) -> usize {
    let n = s.len();
    let mut fail = vec![0usize; n + 1];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    let p = n - fail[n];
    if n % p == 0 {
        p
    } else {
        n
    }
}

fn letter_name(x: i32) -> String {
    let k = x.unsigned_abs() as i32;
    let idx = (k + 1) / 2;
    let c = match (k % 2 == 1, x > 0) {
        (true, true) => 'a',
        (false, true) => 'b',
        (true, false) => 'A',
        (false, false) => 'B',
    };
    format!("{c}{idx}")
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let s: Vec<String> = self.letters.iter().map(|&x| letter_name(x)).collect();
        write!(f, "{}", s.join(" "))
    }
}

impl Serialize for GroupWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Debug for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupWord({self})")
    }
}

/// An integral homology class in `H_1(S, Z) = Z^{2g}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyVector(pub Vec<i64>);

impl HomologyVector {
    pub fn zeros(genus: usize) -> Self {
        HomologyVector(vec![0; 2 * genus])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn to_rat(&self) -> RatVector {
        RatVector::from_ints(&self.0)
    }

    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl Add for &HomologyVector {
    type Output = HomologyVector;
    fn add(self, rhs: &HomologyVector) -> HomologyVector {
        assert_eq!(self.0.len(), rhs.0.len(), "dimension mismatch");
        HomologyVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> GroupWord {
        GroupWord::parse(2, s).unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert!(GroupWord::new(2, &[1, -1]).unwrap().is_identity());
        assert_eq!(GroupWord::new(2, &[1, 2, -2, 3]).unwrap().letters(), &[1, 3]);
        assert!(matches!(
            GroupWord::new(2, &[5]),
            Err(WordError::InvalidIndex { index: 5, .. })
        ));
        assert!(GroupWord::parse(2, "a3").is_err());
        assert!(GroupWord::parse(2, "c1").is_err());
    }

    #[test]
    fn parse_display_roundtrip() {
        let x = w("a1 B1 a2 b2");
        assert_eq!(x.to_string(), "a1 B1 a2 b2");
        assert_eq!(x.letters(), &[1, -2, 3, 4]);
        assert_eq!(w("a1 B1 a2 A2").to_string(), "a1 B1");
        assert_eq!(w("").to_string(), "1");
    }

    #[test]
    fn cyclic_reduction() {
        assert_eq!(w("a1 b1 A1").cyclic_reduce(), w("b1"));
        assert_eq!(w("b1").cyclic_reduce(), w("b1"));
    }

    #[test]
    fn abelianization() {
        assert!(GroupWord::relator(2).abelianize().is_zero());
        assert!(GroupWord::relator(3).abelianize().is_zero());
        assert_eq!(w("a1 a1 a1 B2 B2").abelianize().0, vec![3, 0, 0, -2]);
    }

    #[test]
    fn primitivity() {
        assert!(w("a1").is_primitive().unwrap());
        assert!(!w("a1 b1 a1 b1 a1 b1").is_primitive().unwrap());
        assert!(!w("a1 b1 b1 A1").is_primitive().unwrap());
        assert!(w("a1 b1 a1 B1").is_primitive().unwrap());
        assert_eq!(w("").is_primitive(), Err(WordError::Identity));
        let (root, k) = w("b2 a1 a1 B2").primitive_root().unwrap();
        assert_eq!((root, k), (w("a1"), 2));
    }

    #[test]
    fn group_laws() {
        let x = w("a1 b2 A2");
        assert!(x.compose(&x.invert()).is_identity());
        assert_eq!(x.invert().invert(), x);
        assert_eq!(x.pow(3).len(), 9);
        assert_eq!(x.pow(-1), x.invert());
        assert_eq!(x.conjugate(&w("b1")).abelianize(), x.abelianize());
    }

    #[test]
    fn normal_form_is_conjugation_invariant() {
        let x = w("a1 b1 a2");
        assert_eq!(x.cyclic_normal_form(), x.conjugate(&w("B2 a1")).cyclic_normal_form());
    }
}
