//! Sparse Gaussian elimination over exact rationals or `f64`.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::Rational;

pub trait Scalar: Clone + Debug + Signed + PartialOrd {
    /// Too small to serve as a pivot.
    fn negligible(&self) -> bool;
    fn from_rational(r: &Rational) -> Self;
}

impl Scalar for Rational {
    fn negligible(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Scalar for f64 {
    fn negligible(&self) -> bool {
        self.abs() < 1e-13
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

/// A sparse row: column index to nonzero coefficient.
pub type SparseRow<T> = BTreeMap<usize, T>;

/// Solves `A x = b` for square `A` given by rows, pivoting on the largest
/// magnitude entry of each column.
pub fn solve<T: Scalar>(mut rows: Vec<SparseRow<T>>, mut rhs: Vec<T>) -> Result<Vec<T>> {
    let n = rows.len();
    assert_eq!(rhs.len(), n);
    // Rows that still contain a given column, kept in sync with fill-in.
    let mut col_rows: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    for (i, row) in rows.iter().enumerate() {
        for &j in row.keys() {
            assert!(j < n, "column out of range");
            col_rows[j].insert(i);
        }
    }
    let mut done = vec![false; n];
    let mut pivot_row = vec![usize::MAX; n];
    for k in 0..n {
        let pivot = col_rows[k]
            .iter()
            .copied()
            .filter(|&i| !done[i])
            .filter(|&i| !rows[i][&k].negligible())
            .fold(None::<usize>, |best, i| match best {
                Some(b) if rows[b][&k].abs() >= rows[i][&k].abs() => Some(b),
                _ => Some(i),
            })
            .ok_or(Error::SingularSystem)?;
        done[pivot] = true;
        pivot_row[k] = pivot;
        let prow = rows[pivot].clone();
        let pval = prow[&k].clone();
        let targets: Vec<usize> = col_rows[k].iter().copied().filter(|&i| !done[i]).collect();
        for i in targets {
            let factor = rows[i][&k].clone() / pval.clone();
            for (&j, a) in &prow {
                let row = &mut rows[i];
                let updated = row.get(&j).cloned().unwrap_or_else(T::zero) - factor.clone() * a.clone();
                if j == k || updated.is_zero() {
                    row.remove(&j);
                    col_rows[j].remove(&i);
                } else {
                    row.insert(j, updated);
                    col_rows[j].insert(i);
                }
            }
            let r = rhs[i].clone() - factor * rhs[pivot].clone();
            rhs[i] = r;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let row = &rows[pivot_row[k]];
        let mut acc = rhs[pivot_row[k]].clone();
        for (&j, a) in row {
            if j != k {
                acc = acc - a.clone() * x[j].clone();
            }
        }
        x[k] = acc / row[&k].clone();
    }
    Ok(x)
}
