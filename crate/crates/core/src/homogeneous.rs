//! Homogeneous rational functions `p(ξ)/|ξ|^{2k}` in the cotangent variable.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::multi_index::MultiIndex;
use crate::polynomial::{Polynomial, VarSpace};
use crate::rational::{int, Rational};

/// `numerator(ξ) / |ξ|^{2·pole}` with a numerator homogeneous of degree
/// `degree + 2·pole`.
///
/// Representations are not forced to be canonical; arithmetic keeps
/// whatever pole falls out and [`HomogeneousRational::canonical`] removes
/// the common `|ξ|²` factors. Equality compares canonical forms.
trait PipeInto {
    fn pipe_into(self, pole: u32) -> (Polynomial, u32);
}

impl PipeInto for Polynomial {
    fn pipe_into(self, pole: u32) -> (Polynomial, u32) {
        (self, pole)
    }
}

#[derive(Clone)]
pub struct HomogeneousRational {
    numerator: Polynomial,
    pole: u32,
    degree: i32,
}

fn norm_squared(n: usize) -> Polynomial {
    Polynomial::norm_squared(VarSpace::Xi, n, 0, n)
}

fn norm_power(n: usize, k: u32) -> Polynomial {
    // |ξ|^{2k} by repeated squaring is not worth it at these sizes
    norm_squared(n).pow(k)
}

impl HomogeneousRational {
    pub fn zero(n: usize, degree: i32) -> Self {
        HomogeneousRational {
            numerator: Polynomial::zero(VarSpace::Xi, n),
            pole: 0,
            degree,
        }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        HomogeneousRational {
            numerator: Polynomial::constant(VarSpace::Xi, n, c),
            pole: 0,
            degree: 0,
        }
    }

    /// Builds `numerator / |ξ|^{2·pole}`; the net degree is read off the
    /// numerator, which must be homogeneous and nonzero.
    pub fn new(numerator: Polynomial, pole: u32) -> Self {
        let d = numerator
            .homogeneous_degree()
            .expect("numerator must be a nonzero homogeneous polynomial");
        Self::with_degree(numerator, pole, d as i32 - 2 * pole as i32)
    }

    /// Like [`HomogeneousRational::new`] but with an explicit net degree,
    /// which also covers the zero function.
    pub fn with_degree(numerator: Polynomial, pole: u32, degree: i32) -> Self {
        assert_eq!(numerator.space(), VarSpace::Xi, "numerator must be in ξ");
        if let Some(d) = numerator.homogeneous_degree() {
            assert_eq!(
                d as i32,
                degree + 2 * pole as i32,
                "numerator degree inconsistent with net degree"
            );
        } else {
            assert!(numerator.is_zero(), "numerator must be homogeneous");
        }
        HomogeneousRational {
            numerator,
            pole,
            degree,
        }
    }

    /// `|ξ|^{-2k}`
    pub fn inverse_norm_power(n: usize, k: u32) -> Self {
        Self::with_degree(Polynomial::one(VarSpace::Xi, n), k, -2 * k as i32)
    }

    /// `ξ^γ`
    pub fn xi_monomial(exps: MultiIndex, c: Rational) -> Self {
        let d = exps.order() as i32;
        let p = Polynomial::monomial(VarSpace::Xi, exps, c);
        if p.is_zero() {
            return Self::zero(p.nvars(), d);
        }
        Self::with_degree(p, 0, d)
    }

    pub fn dim(&self) -> usize {
        self.numerator.nvars()
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn pole(&self) -> u32 {
        self.pole
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Minimal pole: divides `|ξ|²` out of the numerator while it divides.
    pub fn canonical(&self) -> Self {
        let mut numerator = self.numerator.clone();
        let mut pole = self.pole;
        if numerator.is_zero() {
            pole = 0;
        }
        while pole > 0 {
            let (q, r) = numerator.div_rem_norm_squared();
            if !r.is_zero() {
                break;
            }
            numerator = q;
            pole -= 1;
        }
        HomogeneousRational {
            numerator,
            pole,
            degree: self.degree,
        }
    }

    /// Same function written over `|ξ|^{2·pole}` with `pole >= self.pole`.
    pub fn raised_to(&self, pole: u32) -> Self {
        assert!(pole >= self.pole);
        if pole == self.pole {
            return self.clone();
        }
        HomogeneousRational {
            numerator: self.numerator.mul(&norm_power(self.dim(), pole - self.pole)),
            pole,
            degree: self.degree,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "adding symbols of different degree");
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let pole = self.pole.max(other.pole);
        let mut numerator = self.raised_to(pole).numerator;
        numerator.add_assign_ref(&other.raised_to(pole).numerator);
        HomogeneousRational {
            numerator,
            pole,
            degree: self.degree,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&int(-1))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        HomogeneousRational {
            numerator: self.numerator.scale(c),
            pole: if c.is_zero() { 0 } else { self.pole },
            degree: self.degree,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.dim(), self.degree + other.degree);
        }
        HomogeneousRational {
            numerator: self.numerator.mul(&other.numerator),
            pole: self.pole + other.pole,
            degree: self.degree + other.degree,
        }
    }

    /// `∂/∂ξ_i` by the quotient rule, returned in canonical form.
    pub fn partial_xi(&self, i: usize) -> Self {
        assert!(i < self.dim(), "coordinate index out of range");
        let n = self.dim();
        if self.is_zero() {
            return Self::zero(n, self.degree - 1);
        }
        // (∂p·|ξ|² − 2k·ξ_i·p) / |ξ|^{2(k+1)}
        let mut numerator = self.numerator.partial(i).mul(&norm_squared(n));
        let k = self.pole as i64;
        if k > 0 {
            let xi_i = Polynomial::var(VarSpace::Xi, n, i);
            numerator.add_scaled(&xi_i.mul(&self.numerator), &int(-2 * k));
        }
        HomogeneousRational {
            numerator,
            pole: self.pole + 1,
            degree: self.degree - 1,
        }
        .canonical()
    }

    pub fn partial_multi(&self, alpha: &MultiIndex) -> Self {
        let mut out = self.clone();
        for i in 0..alpha.dim() {
            for _ in 0..alpha.get(i) {
                out = out.partial_xi(i);
            }
        }
        out
    }

    pub fn evaluate(&self, xi: &[Rational]) -> Rational {
        let num = self.numerator.evaluate(xi);
        if self.pole == 0 {
            return num;
        }
        let norm: Rational = xi.iter().map(|x| x * x).sum();
        assert!(!norm.is_zero(), "evaluation at ξ = 0");
        num / num_traits::pow(norm, self.pole as usize)
    }

    /// Multiplicative inverse when it is again of the form `p/|ξ|^{2k}`:
    /// the numerator must be a constant times a power of `|ξ|²`, or any
    /// monomial when n = 1.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.dim();
        // strip every |ξ|² factor, even past pole 0
        let mut numerator = self.numerator.clone();
        let mut stripped = 0u32;
        loop {
            let (q, r) = numerator.div_rem_norm_squared();
            if !r.is_zero() {
                break;
            }
            numerator = q;
            stripped += 1;
        }
        if numerator.len() != 1 {
            return None;
        }
        let (e, coeff) = numerator.terms().next().map(|(e, v)| (e.clone(), v.clone()))?;
        if !e.is_zero() && n != 1 {
            return None;
        }
        // self = coeff·ξ^e·|ξ|^{2(stripped - pole)}; the inverse has |ξ|-power
        // 2(pole - stripped) - |e|
        let power = 2 * (self.pole as i64 - stripped as i64) - e.order() as i64;
        let inv = coeff.recip();
        let out = if n == 1 {
            let (num_exp, pole) = if power >= 0 {
                (power, 0)
            } else {
                (-power, (-power) as u32)
            };
            Polynomial::monomial(VarSpace::Xi, MultiIndex::from_slice(&[num_exp as u8]), inv)
                .pipe_into(pole)
        } else if power >= 0 {
            norm_power(n, (power / 2) as u32).scale(&inv).pipe_into(0)
        } else {
            Polynomial::constant(VarSpace::Xi, n, inv).pipe_into((-power / 2) as u32)
        };
        Some(HomogeneousRational {
            numerator: out.0,
            pole: out.1,
            degree: -self.degree,
        })
    }

    /// Relabels `ξ` coordinates.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        HomogeneousRational {
            numerator: self.numerator.permuted(perm),
            pole: self.pole,
            degree: self.degree,
        }
    }
}

impl PartialEq for HomogeneousRational {
    fn eq(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        if self.degree != other.degree {
            return false;
        }
        let pole = self.pole.max(other.pole);
        self.raised_to(pole).numerator == other.raised_to(pole).numerator
    }
}

impl Eq for HomogeneousRational {}

impl fmt::Debug for HomogeneousRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pole == 0 {
            write!(f, "[{}]", self.numerator)
        } else {
            write!(f, "[{}]·|ξ|^-{}", self.numerator, 2 * self.pole)
        }
    }
}

/// Lazily summed homogeneous rationals of one net degree.
///
/// Summands are grouped by pole and only merged (and canonicalized) in
/// [`HrAccumulator::finish`], which avoids re-expanding `|ξ|^{2k}` on every
/// addition.
#[derive(Clone, Debug)]
pub struct HrAccumulator {
    n: usize,
    degree: i32,
    by_pole: BTreeMap<u32, Polynomial>,
}

impl HrAccumulator {
    pub fn new(n: usize, degree: i32) -> Self {
        HrAccumulator {
            n,
            degree,
            by_pole: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, value: &HomogeneousRational) {
        self.add_scaled(value, &Rational::one());
    }

    pub fn add_scaled(&mut self, value: &HomogeneousRational, c: &Rational) {
        if value.is_zero() || c.is_zero() {
            return;
        }
        assert_eq!(value.degree, self.degree, "accumulating mixed degrees");
        self.by_pole
            .entry(value.pole)
            .or_insert_with(|| Polynomial::zero(VarSpace::Xi, self.n))
            .add_scaled(&value.numerator, c);
    }

    /// Adds `c·ξ^γ/|ξ|^{2·pole}`.
    pub fn add_monomial(&mut self, exps: MultiIndex, pole: u32, c: Rational) {
        debug_assert_eq!(exps.order() as i32 - 2 * pole as i32, self.degree);
        self.by_pole
            .entry(pole)
            .or_insert_with(|| Polynomial::zero(VarSpace::Xi, self.n))
            .add_term(exps, c);
    }

    /// Pole-by-pole parts, without merging.
    pub fn parts(&self) -> impl Iterator<Item = (u32, &Polynomial)> {
        self.by_pole.iter().map(|(k, p)| (*k, p))
    }

    pub fn finish(self) -> HomogeneousRational {
        let top = match self.by_pole.keys().next_back() {
            Some(&k) => k,
            None => return HomogeneousRational::zero(self.n, self.degree),
        };
        let mut numerator = Polynomial::zero(VarSpace::Xi, self.n);
        for (k, p) in self.by_pole {
            if p.is_zero() {
                continue;
            }
            if k == top {
                numerator.add_assign_ref(&p);
            } else {
                numerator.add_assign_ref(&p.mul(&norm_power(self.n, top - k)));
            }
        }
        HomogeneousRational {
            numerator,
            pole: top,
            degree: self.degree,
        }
        .canonical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn xi(n: usize, i: usize) -> Polynomial {
        Polynomial::var(VarSpace::Xi, n, i)
    }

    #[test]
    fn derivative_of_inverse_norm() {
        let s = HomogeneousRational::inverse_norm_power(3, 1);
        let expected = HomogeneousRational::new(xi(3, 0).scale(&int(-2)), 2);
        let d = s.partial_xi(0);
        assert_eq!(d, expected);
        assert_eq!(d.pole(), 2);
        assert_eq!(d.degree(), -3);
    }

    #[test]
    fn derivative_of_other_coordinate_vanishes() {
        let h = HomogeneousRational::new(xi(2, 1), 0);
        assert!(h.partial_xi(0).is_zero());
    }

    #[test]
    fn quotient_rule_example() {
        // ∂_{ξ1}(ξ1²/|ξ|²) = 2ξ1ξ2²/|ξ|⁴ in two dimensions
        let h = HomogeneousRational::new(xi(2, 0).pow(2), 1);
        let expected = HomogeneousRational::new(xi(2, 0).mul(&xi(2, 1).pow(2)).scale(&int(2)), 2);
        let d = h.partial_xi(0);
        assert_eq!(d, expected);
        assert_eq!(d.numerator(), expected.numerator());
    }

    #[test]
    fn canonical_removes_norm_factors() {
        let n = 3;
        let s = norm_squared(n);
        let h = HomogeneousRational::new(s.mul(&s).mul(&xi(n, 2)), 3);
        let c = h.canonical();
        assert_eq!(c.pole(), 1);
        assert_eq!(c.numerator(), &xi(n, 2));
        assert_eq!(c, h);
    }

    #[test]
    fn inverses() {
        let s = HomogeneousRational::new(norm_squared(2).scale(&int(3)), 0);
        let inv = s.inverse().unwrap();
        assert_eq!(s.mul(&inv), HomogeneousRational::constant(2, int(1)));
        assert!(HomogeneousRational::new(xi(2, 0), 0).inverse().is_none());
        let one_dim = HomogeneousRational::new(xi(1, 0).pow(3), 1);
        assert_eq!(
            one_dim.mul(&one_dim.inverse().unwrap()),
            HomogeneousRational::constant(1, int(1))
        );
    }

    #[test]
    fn accumulator_merges_poles() {
        let n = 2;
        let mut acc = HrAccumulator::new(n, 0);
        acc.add(&HomogeneousRational::new(xi(n, 0).pow(2), 1));
        acc.add(&HomogeneousRational::new(xi(n, 1).pow(2), 1));
        let done = acc.finish();
        assert_eq!(done.pole(), 0);
        assert_eq!(done, HomogeneousRational::constant(n, int(1)));
    }

    #[test]
    fn evaluation() {
        let h = HomogeneousRational::new(xi(2, 0), 1);
        assert_eq!(h.evaluate(&[int(1), int(2)]), ratio(1, 5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_hr(n: usize) -> impl Strategy<Value = HomogeneousRational> {
            let deg = 0u32..4;
            (deg, 0u32..3, proptest::collection::vec(-4i64..5, 1..6), any::<u64>()).prop_map(
                move |(d, pole, coeffs, seed)| {
                    let monos = MultiIndex::all_of_order(n, d);
                    let mut p = Polynomial::zero(VarSpace::Xi, n);
                    for (k, c) in coeffs.iter().enumerate() {
                        let idx = (seed as usize).wrapping_add(k * 7) % monos.len();
                        p.add_term(monos[idx].clone(), int(*c));
                    }
                    HomogeneousRational::with_degree(p, pole, d as i32 - 2 * pole as i32)
                },
            )
        }

        fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
            proptest::collection::vec((1i64..9, 1i64..5), n)
                .prop_map(|v| v.into_iter().map(|(a, b)| ratio(a, b)).collect())
        }

        proptest! {
            #[test]
            fn euler_identity(h in arb_hr(3)) {
                // Σ ξ_i ∂_i h = d·h
                let n = 3;
                let mut acc = HrAccumulator::new(n, h.degree());
                for i in 0..n {
                    acc.add(&HomogeneousRational::new(xi(n, i), 0).mul(&h.partial_xi(i)));
                }
                prop_assert_eq!(acc.finish(), h.scale(&int(h.degree() as i64)));
            }

            #[test]
            fn canonical_is_unique(h in arb_hr(2), extra in 0u32..3) {
                let raised = h.raised_to(h.pole() + extra).canonical();
                let direct = h.canonical();
                prop_assert_eq!(raised.numerator(), direct.numerator());
                prop_assert_eq!(raised.pole(), direct.pole());
            }

            #[test]
            fn derivative_matches_central_differences(h in arb_hr(2), p in point(2), i in 0usize..2) {
                // second-order convergence of the central difference toward the exact derivative
                let exact = h.partial_xi(i).evaluate(&p);
                let errs: Vec<f64> = [ratio(1, 100), ratio(1, 200), ratio(1, 400)]
                    .iter()
                    .map(|step| {
                        let mut plus = p.clone();
                        let mut minus = p.clone();
                        plus[i] += step;
                        minus[i] -= step;
                        let fd = (h.evaluate(&plus) - h.evaluate(&minus)) / (step * int(2));
                        let e: f64 = num_traits::ToPrimitive::to_f64(&(fd - &exact)).unwrap();
                        e.abs()
                    })
                    .collect();
                if errs[0] > 1e-12 {
                    let order1 = (errs[0] / errs[1]).log2();
                    let order2 = (errs[1] / errs[2]).log2();
                    prop_assert!(order1 >= 1.9 && order2 >= 1.9, "orders {order1} {order2}");
                }
            }
        }
    }
}
