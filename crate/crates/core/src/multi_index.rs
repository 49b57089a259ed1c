//! Multi-indices: exponent vectors driving every derivative and monomial.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use smallvec::SmallVec;

use crate::rational::{factorial, from_biguint, Rational};

/// Exponent vector over `n` coordinates.
///
/// Ordered graded-lexicographically: total order first, then the exponent
/// of the first coordinate, and so on. `BTreeMap<MultiIndex, _>` therefore
/// iterates from the lowest to the highest monomial in grlex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u8; 24]>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n);
        m.0[i] = 1;
        m
    }

    pub fn from_slice(exps: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(exps))
    }

    pub fn from_usizes(exps: &[usize]) -> Self {
        MultiIndex(
            exps.iter()
                .map(|&e| u8::try_from(e).expect("exponent exceeds 255"))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α|`
    pub fn order(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.0.iter().map(|&e| e as u32).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.checked_add(*b).expect("exponent overflow"))
                .collect(),
        )
    }

    /// `self - other`, or `None` unless `other <= self` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<SmallVec<_>>>()
            .map(MultiIndex)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn with(&self, i: usize, value: u8) -> Self {
        let mut m = self.clone();
        m.0[i] = value;
        m
    }

    pub fn incremented(&self, i: usize) -> Self {
        self.with(i, self.0[i] + 1)
    }

    /// Concatenation `(self, other)` as one index over `dim + other.dim`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Splits into the first `k` coordinates and the rest.
    pub fn split_at(&self, k: usize) -> (Self, Self) {
        (
            MultiIndex::from_slice(&self.0[..k]),
            MultiIndex::from_slice(&self.0[k..]),
        )
    }

    /// Relabels coordinates: coordinate `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.dim());
        for (i, &e) in self.0.iter().enumerate() {
            out.0[perm[i]] = e;
        }
        out
    }

    pub fn factorial(&self) -> BigUint {
        mi_factorial(self)
    }

    /// Every multi-index of dimension `n` and order exactly `k`, in
    /// descending lexicographic order.
    pub fn all_of_order(n: usize, k: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u8; n];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
            let n = cur.len();
            if n == 0 {
                if left == 0 {
                    out.push(MultiIndex::from_slice(cur));
                }
                return;
            }
            if pos == n - 1 {
                cur[pos] = left as u8;
                out.push(MultiIndex::from_slice(cur));
                cur[pos] = 0;
                return;
            }
            for e in (0..=left).rev() {
                cur[pos] = e as u8;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, k, &mut cur, &mut out);
        out
    }

    /// Every multi-index `γ` with `γ <= self` componentwise.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(self.dim())];
        for i in 0..self.dim() {
            let mut next = Vec::with_capacity(out.len() * (self.0[i] as usize + 1));
            for m in &out {
                for e in 0..=self.0[i] {
                    next.push(m.with(i, e));
                }
            }
            out = next;
        }
        out
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.as_slice().cmp(other.0.as_slice()))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// `α! = α₁!⋯αₙ!`
pub fn mi_factorial(alpha: &MultiIndex) -> BigUint {
    alpha
        .0
        .iter()
        .fold(BigUint::one(), |acc, &e| acc * factorial(e as u32))
}

/// Leibniz rule bookkeeping: all `(α', α'', α!/(α'!α''!))` with
/// `α' + α'' = α`.
pub fn leibniz_splits(alpha: &MultiIndex) -> Vec<(MultiIndex, MultiIndex, Rational)> {
    let total = mi_factorial(alpha);
    alpha
        .lower_set()
        .into_iter()
        .map(|first| {
            let second = alpha.checked_sub(&first).expect("lower set element");
            let coeff = from_biguint(&total / (mi_factorial(&first) * mi_factorial(&second)));
            (first, second, coeff)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(mi_factorial(&mi(&[0, 0, 0, 0])), BigUint::from(1u32));
        assert_eq!(mi_factorial(&mi(&[1, 1])), BigUint::from(1u32));
        assert_eq!(mi_factorial(&mi(&[3, 2])), BigUint::from(12u32));
    }

    #[test]
    fn leibniz_order_one() {
        let mut splits = leibniz_splits(&mi(&[1, 0]));
        splits.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            splits,
            vec![
                (mi(&[0, 0]), mi(&[1, 0]), int(1)),
                (mi(&[1, 0]), mi(&[0, 0]), int(1)),
            ]
        );
    }

    #[test]
    fn leibniz_binomial_row() {
        let mut splits = leibniz_splits(&mi(&[2]));
        splits.sort_by(|a, b| a.0.cmp(&b.0));
        let coeffs: Vec<_> = splits.into_iter().map(|s| s.2).collect();
        assert_eq!(coeffs, vec![int(1), int(2), int(1)]);
    }

    #[test]
    fn leibniz_mixed() {
        let splits = leibniz_splits(&mi(&[1, 1]));
        assert_eq!(splits.len(), 4);
        assert!(splits.iter().all(|s| s.2 == int(1)));
    }

    #[test]
    fn enumerate_order() {
        let all = MultiIndex::all_of_order(3, 2);
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|m| m.order() == 2));
        assert_eq!(MultiIndex::all_of_order(0, 0).len(), 1);
        assert_eq!(MultiIndex::all_of_order(0, 1).len(), 0);
    }

    #[test]
    fn grlex_order() {
        assert!(mi(&[0, 2]) > mi(&[1, 0]));
        assert!(mi(&[2, 0]) > mi(&[1, 1]));
        assert!(mi(&[1, 1]) > mi(&[0, 2]));
    }

    mod props {
        use super::*;
        use num_bigint::BigUint;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn leibniz_coefficients_sum_to_power_of_two(e in proptest::collection::vec(0u8..4, 1..4)) {
                let alpha = MultiIndex::from_slice(&e);
                let sum: Rational = leibniz_splits(&alpha).into_iter().map(|s| s.2).sum();
                let expected = from_biguint(BigUint::from(1u32) << alpha.order());
                prop_assert_eq!(sum, expected);
            }
        }
    }
}
