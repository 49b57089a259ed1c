//! Constant-coefficient bilinear differential forms
//! `Σ A_{a,b} (∂^a f)(∂^b h)` keyed by multi-index pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{mi_factorial, MultiIndex};
use crate::polynomial::Polynomial;
use crate::rational::{from_biguint, int, ratio, Rational};
use crate::sphere::SphereConvention;

/// Which derivatives the coefficients multiply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Partials {
    /// Plain partial derivatives `∂`.
    #[default]
    #[serde(rename = "ordinary")]
    Ordinary,
    /// `D = -i∂`.
    #[serde(rename = "D")]
    D,
}

impl Partials {
    pub fn name(self) -> &'static str {
        match self {
            Partials::Ordinary => "ordinary",
            Partials::D => "D",
        }
    }
}

impl fmt::Display for Partials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Partials {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordinary" => Ok(Partials::Ordinary),
            "D" | "d" => Ok(Partials::D),
            other => Err(Error::Parse(format!("unknown partials convention `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearFormCoefficients {
    pub n: usize,
    pub partials: Partials,
    pub convention: SphereConvention,
    /// Every coefficient carries the factor `π^pi_power`.
    pub pi_power: u32,
    entries: BTreeMap<(MultiIndex, MultiIndex), Rational>,
}

impl BilinearFormCoefficients {
    pub fn new(n: usize, partials: Partials, convention: SphereConvention, pi_power: u32) -> Self {
        BilinearFormCoefficients {
            n,
            partials,
            convention,
            pi_power,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `c` to the coefficient of `(∂^a f)(∂^b h)`.
    pub fn insert(&mut self, a: MultiIndex, b: MultiIndex, c: Rational) {
        assert!(a.dim() == self.n && b.dim() == self.n, "multi-index dimension mismatch");
        let key = (a, b);
        let sum = self.entries.get(&key).cloned().unwrap_or_default() + c;
        if sum.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, sum);
        }
    }

    pub fn get(&self, a: &MultiIndex, b: &MultiIndex) -> Rational {
        self.entries
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &Rational)> {
        self.entries.iter().map(|((a, b), c)| (a, b, c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every key has `|a|, |b| ≥ 1` and `|a| + |b| = n`.
    pub fn keys_well_formed(&self) -> bool {
        self.entries.keys().all(|(a, b)| {
            a.order() >= 1 && b.order() >= 1 && (a.order() + b.order()) as usize == self.n
        })
    }

    /// `A_{a,b} = A_{b,a}` for every key.
    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|((a, b), c)| self.entries.get(&(b.clone(), a.clone())) == Some(c))
    }

    /// Relabels coordinates: index `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::new(self.n, self.partials, self.convention, self.pi_power);
        for ((a, b), c) in &self.entries {
            out.insert(a.permuted(perm), b.permuted(perm), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::new(self.n, self.partials, self.convention, self.pi_power);
        for ((a, b), v) in &self.entries {
            out.insert(a.clone(), b.clone(), v * c);
        }
        out
    }

    /// The constant `c` with `self = c · other`, if one exists and `other`
    /// is nonzero.
    pub fn ratio_to(&self, other: &Self) -> Option<Rational> {
        if self.n != other.n || self.len() != other.len() || other.is_empty() {
            return None;
        }
        let (key, value) = other.entries.iter().next()?;
        let c = self.entries.get(key)? / value;
        other
            .entries
            .iter()
            .all(|(k, v)| self.entries.get(k) == Some(&(v * &c)))
            .then_some(c)
    }

    /// Rewrites the coefficients for the other choice of derivatives:
    /// `(D^a f)(D^b h) = (-i)^{|a|+|b|}(∂^a f)(∂^b h) = (-1)^{n/2}(∂^a f)(∂^b h)`.
    pub fn with_partials(&self, target: Partials) -> Result<Self> {
        if target == self.partials {
            return Ok(self.clone());
        }
        if self.n % 2 == 1 {
            return Err(Error::OddDimension(self.n));
        }
        let sign = if (self.n / 2).is_multiple_of(2) { int(1) } else { int(-1) };
        let mut out = self.scale(&sign);
        out.partials = target;
        Ok(out)
    }

    /// `Σ A_{a,b} (∂^a f)(∂^b h)` with ordinary derivatives.
    pub fn contract(&self, f: &Polynomial, h: &Polynomial) -> Result<Polynomial> {
        let form = self.with_partials(Partials::Ordinary)?;
        let mut out = Polynomial::zero(f.space(), f.nvars());
        for ((a, b), c) in &form.entries {
            let term = f.partial_multi(a).mul(&h.partial_multi(b));
            out.add_scaled(&term, c);
        }
        Ok(out)
    }

    /// The contraction at `f = x^a`, `h = x^b` with `|a| + |b| = n`, which is
    /// the constant `A_{a,b} a! b!`.
    pub fn monomial_value(&self, a: &MultiIndex, b: &MultiIndex) -> Rational {
        self.get(a, b) * from_biguint(mi_factorial(a) * mi_factorial(b))
    }
}

/// `Σ_i ∂_i f ∂_i h`
pub fn dirichlet_form(n: usize) -> BilinearFormCoefficients {
    let mut out = BilinearFormCoefficients::new(n, Partials::Ordinary, SphereConvention::MassOne, 0);
    for i in 0..n {
        out.insert(MultiIndex::unit(n, i), MultiIndex::unit(n, i), int(1));
    }
    out
}

/// `-f_{ijj}h_i - ½f_{ii}h_{jj} - f_{ij}h_{ij} - f_i h_{ijj}` summed over
/// repeated indices.
pub fn fourth_order_reference(n: usize) -> BilinearFormCoefficients {
    let mut out = BilinearFormCoefficients::new(n, Partials::Ordinary, SphereConvention::MassOne, 0);
    let e = |i: usize| MultiIndex::unit(n, i);
    for i in 0..n {
        for j in 0..n {
            let ijj = e(i).add(&e(j)).add(&e(j));
            let ij = e(i).add(&e(j));
            let ii = e(i).add(&e(i));
            let jj = e(j).add(&e(j));
            out.insert(ijj.clone(), e(i), int(-1));
            out.insert(ii, jj, ratio(-1, 2));
            out.insert(ij.clone(), ij, int(-1));
            out.insert(e(i), ijj, int(-1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn reference_expression_values() {
        let r = fourth_order_reference(4);
        let (e0, e1) = (mi(&[1, 0, 0, 0]), mi(&[0, 1, 0, 0]));
        assert_eq!(r.get(&mi(&[3, 0, 0, 0]), &e0), int(-1));
        assert_eq!(r.get(&mi(&[1, 2, 0, 0]), &e0), int(-1));
        assert_eq!(r.get(&mi(&[2, 0, 0, 0]), &mi(&[2, 0, 0, 0])), ratio(-3, 2));
        assert_eq!(r.get(&mi(&[2, 0, 0, 0]), &mi(&[0, 2, 0, 0])), ratio(-1, 2));
        assert_eq!(r.get(&mi(&[1, 1, 0, 0]), &mi(&[1, 1, 0, 0])), int(-2));
        assert_eq!(r.get(&e1, &mi(&[0, 3, 0, 0])), int(-1));
        assert!(r.is_symmetric());
        assert!(r.keys_well_formed());
    }

    #[test]
    fn partials_conversion() {
        let d = dirichlet_form(2);
        let flipped = d.with_partials(Partials::D).unwrap();
        assert_eq!(flipped.ratio_to(&d), Some(int(-1)));
        let d4 = fourth_order_reference(4);
        assert_eq!(d4.with_partials(Partials::D).unwrap().ratio_to(&d4), Some(int(1)));
        assert!(dirichlet_form(3).with_partials(Partials::D).is_err());
    }

    #[test]
    fn contraction() {
        let d = dirichlet_form(2);
        let x = Polynomial::var(crate::VarSpace::X, 2, 0);
        let y = Polynomial::var(crate::VarSpace::X, 2, 1);
        assert!(d.contract(&x, &y).unwrap().is_zero());
        let xy = x.mul(&y);
        // ∇(xy)·∇x = y
        assert_eq!(d.contract(&xy, &x).unwrap(), y);
        assert_eq!(d.monomial_value(&mi(&[1, 0]), &mi(&[1, 0])), int(1));
    }

    #[test]
    fn parse_names() {
        assert_eq!("D".parse::<Partials>().unwrap(), Partials::D);
        assert_eq!("ordinary".parse::<Partials>().unwrap(), Partials::Ordinary);
        assert!("weird".parse::<Partials>().is_err());
    }
}
