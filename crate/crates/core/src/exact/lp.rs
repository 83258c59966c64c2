//! Exact two-phase simplex with Bland's rule.
//!
//! Problems are given in equality form `A x = b, x >= 0`. Every solve first
//! runs over `Ratio<i128>` with checked arithmetic; on overflow it restarts
//! over arbitrary-precision rationals, so the answer is always exact.

use std::fmt::Debug;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::traits::{CheckedDiv, CheckedMul, CheckedSub};
use num::{One, Signed, ToPrimitive, Zero};

use super::Rational;

/// Outcome of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

/// Scalar field with fallible operations; `None` signals overflow.
trait Field: Clone + PartialOrd + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn div(&self, o: &Self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
}

type Small = Ratio<i128>;

impl Field for Small {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Field for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

fn to_small(r: &Rational) -> Option<Small> {
    // Keep headroom: entries above 2^40 make products likely to overflow.
    let n = r.numer().to_i64()?;
    let d = r.denom().to_i64()?;
    if n.unsigned_abs() > (1u64 << 40) || d > (1i64 << 40) {
        return None;
    }
    Some(Small::new(n as i128, d as i128))
}

fn from_small(s: &Small) -> Rational {
    Rational::new(BigInt::from(*s.numer()), BigInt::from(*s.denom()))
}

struct Overflow;

enum Status {
    Optimal,
    Unbounded,
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    obj: Vec<F>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<F: Field> Tableau<F> {
    fn pivot(&mut self, r: usize, c: usize) -> Result<(), Overflow> {
        let piv = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x = x.div(&piv).ok_or(Overflow)?;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = x.sub(&f.mul(p).ok_or(Overflow)?).ok_or(Overflow)?;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (x, p) in self.obj.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = x.sub(&f.mul(p).ok_or(Overflow)?).ok_or(Overflow)?;
                }
            }
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Runs simplex iterations with entering columns restricted to
    /// `0..allowed`.
    fn run(&mut self, allowed: usize) -> Result<Status, Overflow> {
        let rhs = self.ncols;
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return Ok(Status::Optimal);
            };
            let mut best: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let q = row[rhs].div(&row[c]).ok_or(Overflow)?;
                let better = match &best {
                    None => true,
                    Some((bi, bq)) => q < *bq || (q == *bq && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, q));
                }
            }
            match best {
                None => return Ok(Status::Unbounded),
                Some((r, _)) => self.pivot(r, c)?,
            }
        }
    }
}

enum RawOutcome<F> {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<F>, value: F },
}

fn solve<F: Field>(
    c: Option<&[F]>,
    a: &[Vec<F>],
    b: &[F],
) -> Result<RawOutcome<F>, Overflow> {
    let m = a.len();
    let n = a.first().map_or(c.map_or(0, <[F]>::len), Vec::len);
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
        let neg = bi.is_negative();
        let mut row = Vec::with_capacity(ncols + 1);
        for x in ai {
            row.push(if neg {
                F::zero().sub(x).ok_or(Overflow)?
            } else {
                x.clone()
            });
        }
        for k in 0..m {
            row.push(if k == i { F::one() } else { F::zero() });
        }
        row.push(if neg {
            F::zero().sub(bi).ok_or(Overflow)?
        } else {
            bi.clone()
        });
        rows.push(row);
    }
    let mut obj = vec![F::zero(); ncols + 1];
    for row in &rows {
        for j in 0..n {
            obj[j] = obj[j].sub(&row[j]).ok_or(Overflow)?;
        }
        obj[ncols] = obj[ncols].sub(&row[ncols]).ok_or(Overflow)?;
    }
    let mut t = Tableau {
        rows,
        obj,
        basis: (n..n + m).collect(),
        ncols,
    };
    t.run(n)?;
    if t.obj[ncols].is_negative() {
        return Ok(RawOutcome::Infeasible);
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, j)?;
                i += 1;
            } else {
                t.rows.remove(i);
                t.basis.remove(i);
            }
        } else {
            i += 1;
        }
    }
    let Some(c) = c else {
        let mut x = vec![F::zero(); n];
        for (row, &bv) in t.rows.iter().zip(&t.basis) {
            x[bv] = row[ncols].clone();
        }
        return Ok(RawOutcome::Optimal { x, value: F::zero() });
    };
    let mut obj = vec![F::zero(); ncols + 1];
    for j in 0..n {
        obj[j] = F::zero().sub(&c[j]).ok_or(Overflow)?;
    }
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        if obj[bv].is_zero() {
            continue;
        }
        let f = obj[bv].clone();
        for (x, p) in obj.iter_mut().zip(row) {
            *x = x.sub(&f.mul(p).ok_or(Overflow)?).ok_or(Overflow)?;
        }
    }
    t.obj = obj;
    match t.run(n)? {
        Status::Unbounded => Ok(RawOutcome::Unbounded),
        Status::Optimal => {
            let mut x = vec![F::zero(); n];
            for (row, &bv) in t.rows.iter().zip(&t.basis) {
                x[bv] = row[ncols].clone();
            }
            Ok(RawOutcome::Optimal {
                x,
                value: t.obj[ncols].clone(),
            })
        }
    }
}

fn solve_any(c: Option<&[Rational]>, a: &[Vec<Rational>], b: &[Rational]) -> LpOutcome {
    let small = (|| {
        let a: Vec<Vec<Small>> = a
            .iter()
            .map(|r| r.iter().map(to_small).collect::<Option<Vec<_>>>())
            .collect::<Option<_>>()?;
        let b: Vec<Small> = b.iter().map(to_small).collect::<Option<_>>()?;
        let c: Option<Vec<Small>> = match c {
            Some(c) => Some(c.iter().map(to_small).collect::<Option<_>>()?),
            None => None,
        };
        solve(c.as_deref(), &a, &b).ok()
    })();
    let raw = match small {
        Some(RawOutcome::Infeasible) => return LpOutcome::Infeasible,
        Some(RawOutcome::Unbounded) => return LpOutcome::Unbounded,
        Some(RawOutcome::Optimal { x, value }) => {
            return LpOutcome::Optimal {
                x: x.iter().map(from_small).collect(),
                value: from_small(&value),
            }
        }
        None => solve(c, a, b),
    };
    match raw {
        Ok(RawOutcome::Infeasible) => LpOutcome::Infeasible,
        Ok(RawOutcome::Unbounded) => LpOutcome::Unbounded,
        Ok(RawOutcome::Optimal { x, value }) => LpOutcome::Optimal { x, value },
        Err(Overflow) => unreachable!("arbitrary precision cannot overflow"),
    }
}

/// Finds some `x >= 0` with `a x = b`.
pub fn feasible(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    match solve_any(None, a, b) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Maximizes `c . x` subject to `a x = b`, `x >= 0`.
pub fn maximize(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> LpOutcome {
    solve_any(Some(c), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    #[test]
    fn simple_feasibility() {
        // x + y = 1, x - y = 1/2
        let a = vec![vec![int(1), int(1)], vec![int(1), int(-1)]];
        let x = feasible(&a, &[int(1), ratio(1, 2)]).unwrap();
        assert_eq!(x, vec![ratio(3, 4), ratio(1, 4)]);
        assert!(feasible(&a, &[int(1), int(2)]).is_none());
    }

    #[test]
    fn maximize_with_slack() {
        // max x + y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = vec![
            vec![int(1), int(2), int(1), int(0)],
            vec![int(3), int(1), int(0), int(1)],
        ];
        let c = vec![int(1), int(1), int(0), int(0)];
        match maximize(&c, &a, &[int(4), int(6)]) {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, ratio(14, 5));
                assert_eq!(&x[..2], &[ratio(8, 5), ratio(6, 5)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let a = vec![vec![int(1), int(-1)]];
        assert_eq!(maximize(&[int(1), int(0)], &a, &[int(0)]), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        assert!(feasible(&a, &[int(1), int(2)]).is_some());
    }

    #[test]
    fn huge_entries_fall_back_to_bigint() {
        let big = Rational::new(BigInt::from(10).pow(30u32), BigInt::from(7));
        let a = vec![vec![big.clone(), int(1)]];
        let x = feasible(&a, &[big.clone()]).unwrap();
        assert_eq!(&x[0] * &big + &x[1], big);
    }
}
