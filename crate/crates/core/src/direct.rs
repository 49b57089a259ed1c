//! Coefficients of the flat form obtained by composing symbols directly:
//! for every monomial pair `f = x^a`, `h = x^b` the residue density of
//! `[F,f][F,h]` is the constant `A_{a,b} a! b!`.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bilinear::{BilinearFormCoefficients, Partials};
use crate::error::{Error, Result};
use crate::multi_index::{mi_factorial, MultiIndex};
use crate::polynomial::{Polynomial, VarSpace};
use crate::rational::{from_biguint, Rational};
use crate::sphere::{omega_flat_coefficients, SphereConvention};
use crate::symbol::{flat_sign_symbol, integrate_scalar, ProductEngine};

/// All `(a, b)` with `|a|, |b| ≥ 1` and `|a| + |b| = n`, in grlex order.
pub fn monomial_pairs(n: usize) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = Vec::new();
    for k in 1..n {
        for a in MultiIndex::all_of_order(n, k as u32) {
            for b in MultiIndex::all_of_order(n, (n - k) as u32) {
                out.push((a.clone(), b));
            }
        }
    }
    out
}

fn monomial(a: &MultiIndex) -> Polynomial {
    Polynomial::monomial(VarSpace::X, a.clone(), Rational::from_integer(1.into()))
}

/// Runs the direct pipeline on every monomial pair.
pub fn direct_coefficients(
    n: usize,
    convention: SphereConvention,
    partials: Partials,
) -> Result<BilinearFormCoefficients> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let sign = flat_sign_symbol(n, n / 2, n - 2)?;
    let engine = ProductEngine::new(&sign)?;
    let pairs = monomial_pairs(n);
    let values: Vec<Result<(Rational, u32)>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let trace = engine.trace_at_origin(&monomial(a), &monomial(b), n)?;
            let density = integrate_scalar(&trace, convention);
            if !density.im.is_zero() {
                return Err(Error::Inconsistent(format!(
                    "imaginary residue density for a = {a:?}, b = {b:?}"
                )));
            }
            let value = density.re.coeff(&MultiIndex::zeros(n));
            let norm = from_biguint(mi_factorial(a) * mi_factorial(b));
            Ok((value / norm, density.pi_power))
        })
        .collect();
    let mut pi_power = crate::sphere::convention_factor(n, convention).pi_power;
    let mut out = BilinearFormCoefficients::new(n, Partials::Ordinary, convention, pi_power);
    for ((a, b), value) in pairs.into_iter().zip(values) {
        let (c, p) = value?;
        pi_power = p;
        out.insert(a, b, c);
    }
    out.pi_power = pi_power;
    out.with_partials(partials)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossCheckEntry {
    pub a: MultiIndex,
    pub b: MultiIndex,
    pub direct: Rational,
    pub taylor: Rational,
}

impl CrossCheckEntry {
    pub fn agrees(&self) -> bool {
        self.direct == self.taylor
    }
}

#[derive(Clone, Debug)]
pub struct CrossCheckReport {
    pub n: usize,
    pub convention: SphereConvention,
    /// One row per monomial pair, including pairs where both sides vanish.
    pub entries: Vec<CrossCheckEntry>,
    pub taylor_time: Duration,
    pub direct_time: Duration,
}

impl CrossCheckReport {
    pub fn mismatches(&self) -> usize {
        self.entries.iter().filter(|e| !e.agrees()).count()
    }

    pub fn nonzero_keys(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| !num_traits::Zero::is_zero(&e.taylor))
            .count()
    }

    pub fn passed(&self) -> bool {
        self.mismatches() == 0
    }
}

/// Computes the coefficient map with both pipelines and compares every key.
pub fn crosscheck(n: usize, convention: SphereConvention) -> Result<CrossCheckReport> {
    let start = Instant::now();
    let taylor = omega_flat_coefficients(n, convention, Partials::Ordinary)?;
    let taylor_time = start.elapsed();
    let start = Instant::now();
    let direct = direct_coefficients(n, convention, Partials::Ordinary)?;
    let direct_time = start.elapsed();
    let entries = monomial_pairs(n)
        .into_iter()
        .map(|(a, b)| CrossCheckEntry {
            direct: direct.get(&a, &b),
            taylor: taylor.get(&a, &b),
            a,
            b,
        })
        .collect();
    Ok(CrossCheckReport {
        n,
        convention,
        entries,
        taylor_time,
        direct_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::dirichlet_form;

    #[test]
    fn pair_counts() {
        assert_eq!(monomial_pairs(2).len(), 4);
        // orders (1,3),(2,2),(3,1) in four variables: 4·20 + 10·10 + 20·4
        assert_eq!(monomial_pairs(4).len(), 260);
        assert!(monomial_pairs(4)
            .iter()
            .all(|(a, b)| a.order() >= 1 && b.order() >= 1 && a.order() + b.order() == 4));
    }

    #[test]
    fn direct_two_dimensional() {
        let d = direct_coefficients(2, SphereConvention::MassOne, Partials::D).unwrap();
        assert_eq!(d.ratio_to(&dirichlet_form(2)), Some(Rational::from_integer(4.into())));
    }

    #[test]
    fn crosscheck_two_and_four() {
        for n in [2, 4] {
            let report = crosscheck(n, SphereConvention::MassOne).unwrap();
            assert!(report.passed(), "n = {n}: {} mismatches", report.mismatches());
            assert!(report.nonzero_keys() > 0);
        }
    }

    #[test]
    fn surface_convention_scales() {
        let r = crosscheck(2, SphereConvention::SurfaceArea).unwrap();
        assert!(r.passed());
    }

    #[test]
    #[ignore = "several minutes in release mode"]
    fn crosscheck_six() {
        let report = crosscheck(6, SphereConvention::MassOne).unwrap();
        eprintln!("taylor {:?}, direct {:?}", report.taylor_time, report.direct_time);
        assert!(report.passed(), "{} mismatches", report.mismatches());
    }

    #[test]
    fn rejects_odd() {
        assert!(matches!(
            direct_coefficients(3, SphereConvention::MassOne, Partials::Ordinary),
            Err(Error::OddDimension(3))
        ));
    }
}
