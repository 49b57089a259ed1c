//! Row-sparse matrices over the exact scalar types.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;

use crate::homogeneous::HomogeneousRational;
use crate::polynomial::Polynomial;
use crate::rational::Rational;

/// Scalar types that can populate a [`SparseMatrix`].
pub trait Entry: Clone + fmt::Debug {
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
}

impl Entry for Polynomial {
    fn is_zero(&self) -> bool {
        Polynomial::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Polynomial::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Polynomial::mul(self, other)
    }
    fn scale(&self, c: &Rational) -> Self {
        Polynomial::scale(self, c)
    }
}

impl Entry for HomogeneousRational {
    fn is_zero(&self) -> bool {
        HomogeneousRational::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        HomogeneousRational::add(self, other).canonical()
    }
    fn mul(&self, other: &Self) -> Self {
        HomogeneousRational::mul(self, other).canonical()
    }
    fn scale(&self, c: &Rational) -> Self {
        HomogeneousRational::scale(self, c)
    }
}

impl Entry for Rational {
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Rational) -> Self {
        self * c
    }
}

/// Matrix stored as one ordered map per row; zero entries are never kept.
#[derive(Clone)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<BTreeMap<usize, T>>,
}

impl<T: Entry> SparseMatrix<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            data: vec![BTreeMap::new(); rows],
        }
    }

    /// `value` times the identity.
    pub fn diagonal(size: usize, value: &T) -> Self {
        let mut m = Self::new(size, size);
        for i in 0..size {
            m.insert(i, i, value.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Adds `value` to entry `(i, j)`.
    pub fn insert(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        let row = &mut self.data[i];
        let sum = match row.get(&j) {
            Some(old) => old.add(&value),
            None => value,
        };
        if sum.is_zero() {
            row.remove(&j);
        } else {
            row.insert(j, sum);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        self.data[i].get(&j)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &T)> {
        self.data[i].iter().map(|(&j, v)| (j, v))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, v)| (i, j, v)))
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|row| row.values().all(Entry::is_zero))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = Self::new(self.rows, other.cols);
        for (i, row) in self.data.iter().enumerate() {
            for (&k, a) in row {
                for (&j, b) in &other.data[k] {
                    out.insert(i, j, a.mul(b));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix shape mismatch");
        let mut out = self.clone();
        for (i, j, v) in other.entries() {
            out.insert(i, j, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|v| v.scale(c))
    }

    pub fn map<U: Entry>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        let mut out = SparseMatrix::new(self.rows, self.cols);
        for (i, j, v) in self.entries() {
            out.insert(i, j, f(v));
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::new(self.cols, self.rows);
        for (i, j, v) in self.entries() {
            out.insert(j, i, v.clone());
        }
        out
    }

    /// Sum of the diagonal; `None` when every diagonal entry is zero.
    pub fn trace(&self) -> Option<T> {
        let mut acc: Option<T> = None;
        for i in 0..self.rows.min(self.cols) {
            if let Some(v) = self.get(i, i) {
                acc = Some(match acc {
                    Some(a) => a.add(v),
                    None => v.clone(),
                });
            }
        }
        acc
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Option<T> {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols), "matrix shape mismatch");
        let mut acc: Option<T> = None;
        for (i, row) in self.data.iter().enumerate() {
            for (&k, a) in row {
                if let Some(b) = other.get(k, i) {
                    let p = a.mul(b);
                    acc = Some(match acc {
                        Some(s) => s.add(&p),
                        None => p,
                    });
                }
            }
        }
        acc
    }

    /// Entrywise equality, treating absent entries as zero.
    pub fn equals(&self, other: &Self) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.sub(other).is_zero()
    }
}

impl<T: Entry> fmt::Debug for SparseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} [", self.rows, self.cols)?;
        for (i, j, v) in self.entries() {
            writeln!(f, "  ({i},{j}): {v:?}")?;
        }
        write!(f, "]")
    }
}
