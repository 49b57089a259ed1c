//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::multi_index::MultiIndex;
use crate::rational::{from_biguint, int, Rational};

/// Which coordinates a polynomial is written in.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum VarSpace {
    /// Base-point coordinates `x`.
    X,
    /// Cotangent variable `ξ`.
    Xi,
    /// Taylor displacement `u`.
    U,
    /// Taylor displacement `v`.
    V,
    /// Concatenation of several blocks (e.g. `(ξ, η)` or `(ξ, u)`).
    Product,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    space: VarSpace,
    nvars: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Polynomial {
    pub fn zero(space: VarSpace, nvars: usize) -> Self {
        Polynomial {
            space,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: VarSpace, nvars: usize, c: Rational) -> Self {
        Self::monomial(space, MultiIndex::zeros(nvars), c)
    }

    pub fn one(space: VarSpace, nvars: usize) -> Self {
        Self::constant(space, nvars, Rational::one())
    }

    pub fn monomial(space: VarSpace, exps: MultiIndex, c: Rational) -> Self {
        let mut p = Self::zero(space, exps.dim());
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    /// The coordinate function `t_i`.
    pub fn var(space: VarSpace, nvars: usize, i: usize) -> Self {
        Self::monomial(space, MultiIndex::unit(nvars, i), Rational::one())
    }

    /// `Σ t_i²` over the given block of variables.
    pub fn norm_squared(space: VarSpace, nvars: usize, offset: usize, len: usize) -> Self {
        let mut p = Self::zero(space, nvars);
        for i in offset..offset + len {
            let mut e = MultiIndex::zeros(nvars);
            e = e.with(i, 2);
            p.add_term(e, Rational::one());
        }
        p
    }

    /// `Σ a_i b_i` for two blocks of variables.
    pub fn inner(space: VarSpace, nvars: usize, first: usize, second: usize, len: usize) -> Self {
        let mut p = Self::zero(space, nvars);
        for i in 0..len {
            let e = MultiIndex::zeros(nvars)
                .with(first + i, 1)
                .with(second + i, 1);
            p.add_term(e, Rational::one());
        }
        p
    }

    pub fn from_terms(
        space: VarSpace,
        nvars: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Rational)>,
    ) -> Self {
        let mut p = Self::zero(space, nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn space(&self) -> VarSpace {
        self.space
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn with_space(mut self, space: VarSpace) -> Self {
        self.space = space;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<MultiIndex, Rational> {
        self.terms
    }

    pub fn coeff(&self, exps: &MultiIndex) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Highest term in grlex order.
    pub fn leading_term(&self) -> Option<(&MultiIndex, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, exps: MultiIndex, c: Rational) {
        assert_eq!(exps.dim(), self.nvars, "monomial dimension mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomial dimension mismatch ({:?} vs {:?})",
            self.space, other.space
        );
        assert_eq!(self.space, other.space, "polynomial variable-space mismatch");
    }

    pub fn add_assign_ref(&mut self, other: &Self) {
        self.check_compatible(other);
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    /// `self += c · other`
    pub fn add_scaled(&mut self, other: &Self, c: &Rational) {
        self.check_compatible(other);
        if c.is_zero() {
            return;
        }
        for (e, v) in &other.terms {
            self.add_term(e.clone(), v * c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &int(-1));
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&int(-1))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.space, self.nvars);
        }
        Polynomial {
            space: self.space,
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = Self::zero(self.space, self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, exps: &MultiIndex, c: &Rational) -> Self {
        let mut out = Self::zero(self.space, self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.add(exps), v * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.space, self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `∂/∂t_i`
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.space, self.nvars);
        for (e, c) in &self.terms {
            let k = e.get(i);
            if k > 0 {
                out.add_term(e.with(i, k - 1), c * int(k as i64));
            }
        }
        out
    }

    /// `∂^α`, computed monomial by monomial with falling factorials.
    pub fn partial_multi(&self, alpha: &MultiIndex) -> Self {
        let mut out = Self::zero(self.space, self.nvars);
        for (e, c) in &self.terms {
            if let Some(rest) = e.checked_sub(alpha) {
                let mut factor = num_bigint::BigUint::one();
                for i in 0..self.nvars {
                    for j in 0..alpha.get(i) {
                        factor *= (e.get(i) - j) as u32;
                    }
                }
                out.add_term(rest, c * from_biguint(factor));
            }
        }
        out
    }

    /// All `α` with `∂^α self ≠ 0` possible, i.e. the down-closure of the
    /// exponent set.
    pub fn derivative_support(&self) -> std::collections::BTreeSet<MultiIndex> {
        let mut out = std::collections::BTreeSet::new();
        for e in self.terms.keys() {
            if out.contains(e) {
                continue;
            }
            out.extend(e.lower_set());
        }
        out
    }

    /// Substitutes `t → t + s`: the result lives in the product space of
    /// `(t, s)` with `2·nvars` variables.
    pub fn substitute_shift(&self) -> Self {
        let n = self.nvars;
        let mut out = Self::zero(VarSpace::Product, 2 * n);
        for (e, c) in &self.terms {
            for (kept, moved, binom) in crate::multi_index::leibniz_splits(e) {
                out.add_term(kept.concat(&moved), c * binom);
            }
        }
        out
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.order()).max()
    }

    /// `Some(d)` when every term has order `d`; `None` for the zero
    /// polynomial or a non-homogeneous one.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|e| e.order());
        let d = it.next()?;
        it.all(|o| o == d).then_some(d)
    }

    pub fn evaluate(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, x) in point.iter().enumerate() {
                let k = e.get(i);
                if k > 0 {
                    t *= num_traits::pow(x.clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    /// Division by `|t|² = Σ t_i²` over all variables: `(quotient, remainder)`
    /// with no remainder term divisible by `t_1²`. The remainder vanishes
    /// exactly when `|t|²` divides `self`.
    pub fn div_rem_norm_squared(&self) -> (Self, Self) {
        let n = self.nvars;
        let mut quotient = Self::zero(self.space, n);
        let mut remainder = Self::zero(self.space, n);
        let mut work = self.terms.clone();
        while let Some((e, c)) = work.pop_last() {
            if n > 0 && e.get(0) >= 2 {
                let q = e.with(0, e.get(0) - 2);
                // subtract c·t^q·(t_2² + … + t_n²); the t_1² part is the popped term
                for i in 1..n {
                    let key = q.with(i, q.get(i) + 2);
                    let entry = work.entry(key.clone()).or_insert_with(Rational::zero);
                    *entry -= &c;
                    if entry.is_zero() {
                        work.remove(&key);
                    }
                }
                quotient.add_term(q, c);
            } else {
                remainder.add_term(e, c);
            }
        }
        (quotient, remainder)
    }

    /// Restriction to a block of variables by setting the others to zero
    /// and keeping only `keep` coordinates.
    pub fn restrict(&self, offset: usize, len: usize, space: VarSpace) -> Self {
        let mut out = Self::zero(space, len);
        for (e, c) in &self.terms {
            let outside = (0..self.nvars)
                .filter(|&i| i < offset || i >= offset + len)
                .all(|i| e.get(i) == 0);
            if outside {
                out.add_term(
                    MultiIndex::from_slice(&e.exponents()[offset..offset + len]),
                    c.clone(),
                );
            }
        }
        out
    }

    /// Embeds into a larger space, placing these variables at `offset`.
    pub fn embed(&self, space: VarSpace, nvars: usize, offset: usize) -> Self {
        let mut out = Self::zero(space, nvars);
        for (e, c) in &self.terms {
            let mut big = MultiIndex::zeros(nvars);
            for i in 0..self.nvars {
                big = big.with(offset + i, e.get(i));
            }
            out.add_term(big, c.clone());
        }
        out
    }

    /// Relabels coordinates: variable `i` becomes variable `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_terms(
            self.space,
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.permuted(perm), c.clone())),
        )
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let name = match self.space {
            VarSpace::X => "x",
            VarSpace::Xi => "ξ",
            VarSpace::U => "u",
            VarSpace::V => "v",
            VarSpace::Product => "t",
        };
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &p) in e.exponents().iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·{name}{}", i + 1)?,
                    _ => write!(f, "·{name}{}^{p}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(VarSpace::X, n, i)
    }

    #[test]
    fn addition_cancels() {
        let xi = |i| Polynomial::var(VarSpace::Xi, 2, i);
        let sum = xi(0).add(&xi(1)).add(&xi(1).neg());
        assert_eq!(sum, xi(0));
    }

    #[test]
    fn derivative_of_monomial() {
        let p = x(2, 0).pow(2).mul(&x(2, 1));
        let expected = x(2, 0).mul(&x(2, 1)).scale(&int(2));
        assert_eq!(p.partial(0), expected);
        assert_eq!(
            p.partial_multi(&MultiIndex::from_slice(&[2, 1])),
            Polynomial::constant(VarSpace::X, 2, int(2))
        );
        assert!(p.partial_multi(&MultiIndex::from_slice(&[3, 0])).is_zero());
    }

    #[test]
    fn shift_binomial() {
        let p = Polynomial::var(VarSpace::Xi, 1, 0).pow(2);
        let shifted = p.substitute_shift();
        let t = |i| Polynomial::var(VarSpace::Product, 2, i);
        let expected = t(0)
            .pow(2)
            .add(&t(0).mul(&t(1)).scale(&int(2)))
            .add(&t(1).pow(2));
        assert_eq!(shifted, expected);
    }

    #[test]
    fn division_by_norm() {
        let s = Polynomial::norm_squared(VarSpace::Xi, 3, 0, 3);
        let q = Polynomial::var(VarSpace::Xi, 3, 1).mul(&Polynomial::var(VarSpace::Xi, 3, 2));
        let (quot, rem) = s.mul(&q).div_rem_norm_squared();
        assert_eq!(quot, q);
        assert!(rem.is_zero());
        let (_, rem) = q.div_rem_norm_squared();
        assert_eq!(rem, q);
    }

    #[test]
    #[should_panic]
    fn mismatched_spaces_panic() {
        let _ = x(2, 0).add(&Polynomial::var(VarSpace::Xi, 2, 0));
    }

    #[test]
    fn evaluation() {
        let p = x(2, 0).pow(2).sub(&x(2, 1));
        assert_eq!(p.evaluate(&[ratio(1, 2), int(3)]), ratio(-11, 4));
    }
}
