//! Exact integration over the unit sphere and the Taylor-expansion route to
//! the flat-space coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bilinear::{BilinearFormCoefficients, Partials};
use crate::error::Error;
use crate::exterior::trace_pair;
use crate::homogeneous::{HomogeneousRational, HrAccumulator};
use crate::multi_index::{leibniz_splits, MultiIndex};
use crate::rational::{double_factorial, factorial, from_biguint, int, Rational};

/// Normalization of the measure on `S^{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereConvention {
    /// Total measure one; every monomial integral is rational.
    #[default]
    MassOne,
    /// Total measure `2π^{n/2}/Γ(n/2)`.
    SurfaceArea,
}

impl SphereConvention {
    pub fn name(self) -> &'static str {
        match self {
            SphereConvention::MassOne => "mass-one",
            SphereConvention::SurfaceArea => "surface-area",
        }
    }
}

impl fmt::Display for SphereConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SphereConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "mass-one" => Ok(SphereConvention::MassOne),
            "surface-area" | "surface" => Ok(SphereConvention::SurfaceArea),
            other => Err(Error::Parse(format!("unknown sphere convention `{other}`"))),
        }
    }
}

/// `coeff · π^pi_power`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiMultiple {
    pub coeff: Rational,
    pub pi_power: u32,
}

impl PiMultiple {
    pub fn rational(coeff: Rational) -> Self {
        PiMultiple { coeff, pi_power: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.coeff.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(self.pi_power as i32)
    }
}

/// Surface area of `S^{n-1}` as a rational multiple of `π^{⌊n/2⌋}`.
pub fn sphere_area(n: usize) -> PiMultiple {
    assert!(n >= 1, "sphere dimension must be positive");
    let k = (n / 2) as u32;
    let coeff = if n.is_multiple_of(2) {
        int(2) / from_biguint(factorial(k - 1))
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        int(2) * from_biguint(num_bigint::BigUint::from(4u32).pow(k) * factorial(k))
            / from_biguint(factorial(2 * k))
    };
    PiMultiple { coeff, pi_power: k }
}

/// Factor converting a mass-one integral into the given convention.
pub fn convention_factor(n: usize, convention: SphereConvention) -> PiMultiple {
    match convention {
        SphereConvention::MassOne => PiMultiple::rational(Rational::one()),
        SphereConvention::SurfaceArea => sphere_area(n),
    }
}

/// `∫ ξ^α` over `S^{n-1}` with total measure one:
/// `Π(αᵢ-1)!! / Π_{j<|α|/2}(n+2j)`, or zero if some exponent is odd.
pub fn mass_one_monomial_integral(alpha: &MultiIndex) -> Rational {
    if alpha.exponents().iter().any(|&e| e % 2 == 1) {
        return Rational::zero();
    }
    let n = alpha.dim() as i64;
    let numer = alpha
        .exponents()
        .iter()
        .fold(Rational::one(), |acc, &e| acc * from_biguint(double_factorial(e as i64 - 1)));
    let half = alpha.order() as i64 / 2;
    let denom = (0..half).fold(Rational::one(), |acc, j| acc * int(n + 2 * j));
    numer / denom
}

pub fn monomial_sphere_integral(alpha: &MultiIndex, convention: SphereConvention) -> PiMultiple {
    let factor = convention_factor(alpha.dim(), convention);
    PiMultiple {
        coeff: mass_one_monomial_integral(alpha) * factor.coeff,
        pi_power: factor.pi_power,
    }
}

/// Mass-one sphere integral of `p(ξ)/|ξ|^{2k}`; the denominator is one on
/// the sphere.
pub fn mass_one_integral(value: &HomogeneousRational) -> Rational {
    value
        .numerator()
        .terms()
        .map(|(e, c)| c * mass_one_monomial_integral(e))
        .sum()
}

/// Power series in two displacement blocks `(u, v)` with coefficients
/// rational in `ξ`: `Σ c_{β,δ}(ξ) u^β v^δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorPolynomial {
    n: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), HomogeneousRational>,
}

impl TaylorPolynomial {
    pub fn new(n: usize) -> Self {
        TaylorPolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &HomogeneousRational)> {
        self.terms.iter().map(|((b, d), v)| (b, d, v))
    }

    pub fn get(&self, beta: &MultiIndex, delta: &MultiIndex) -> Option<&HomogeneousRational> {
        self.terms.get(&(beta.clone(), delta.clone()))
    }

    pub fn insert(&mut self, beta: MultiIndex, delta: MultiIndex, value: HomogeneousRational) {
        let key = (beta, delta);
        let sum = match self.terms.get(&key) {
            Some(old) => old.add(&value).canonical(),
            None => value.canonical(),
        };
        if sum.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    /// Keeps the keys satisfying `keep`.
    pub fn filtered(&self, keep: impl Fn(&MultiIndex, &MultiIndex) -> bool) -> Self {
        TaylorPolynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|((b, d), _)| keep(b, d))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Exponents of the invariants `(⟨ξ,u⟩, ⟨ξ,v⟩, |u|², |v|², ⟨u,v⟩)`.
type Invariant = [u32; 5];
type InvariantSeries = BTreeMap<Invariant, Rational>;

const INVARIANT_WEIGHTS: Invariant = [1, 1, 2, 2, 2];

fn weight(e: &Invariant) -> u32 {
    e.iter().zip(INVARIANT_WEIGHTS).map(|(a, w)| a * w).sum()
}

fn series_mul(a: &InvariantSeries, b: &InvariantSeries, max_weight: u32) -> InvariantSeries {
    let mut out = InvariantSeries::new();
    for (ea, ca) in a {
        let wa = weight(ea);
        for (eb, cb) in b {
            if wa + weight(eb) > max_weight {
                continue;
            }
            let mut e = *ea;
            for k in 0..5 {
                e[k] += eb[k];
            }
            *out.entry(e).or_insert_with(Rational::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn unit(k: usize) -> Invariant {
    let mut e = [0; 5];
    e[k] = 1;
    e
}

/// `Σ_k (-(2t + s))^k` up to the given weight.
fn geometric(linear: usize, square: usize, max_weight: u32) -> InvariantSeries {
    let step: InvariantSeries = [(unit(linear), int(-2)), (unit(square), int(-1))].into();
    let mut power: InvariantSeries = [([0; 5], Rational::one())].into();
    let mut out = power.clone();
    for _ in 0..max_weight {
        power = series_mul(&power, &step, max_weight);
        for (e, c) in &power {
            *out.entry(*e).or_insert_with(Rational::zero) += c;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `a⟨ξ+u,ξ+v⟩²|ξ+u|⁻²|ξ+v|⁻² + b` with `|ξ|` set to one; a monomial of
/// total invariant degree `K` carries `|ξ|^{-2K}` once `|ξ|` is restored.
fn psi_invariant_series(a: &Rational, b: &Rational, max_weight: u32) -> InvariantSeries {
    let inner: InvariantSeries = [
        ([0; 5], Rational::one()),
        (unit(0), Rational::one()),
        (unit(1), Rational::one()),
        (unit(4), Rational::one()),
    ]
    .into();
    let square = series_mul(&inner, &inner, max_weight);
    let mut out = series_mul(
        &series_mul(&square, &geometric(0, 2, max_weight), max_weight),
        &geometric(1, 3, max_weight),
        max_weight,
    );
    for c in out.values_mut() {
        *c *= a;
    }
    *out.entry([0; 5]).or_insert_with(Rational::zero) += b;
    out.retain(|_, c| !c.is_zero());
    out
}

/// `(Σ_k t_k)^p = Σ_{|γ|=p} (p!/γ!) t^γ`
fn multinomial_terms(n: usize, p: u32) -> Vec<(MultiIndex, Rational)> {
    let top = from_biguint(factorial(p));
    MultiIndex::all_of_order(n, p)
        .into_iter()
        .map(|g| {
            let c = &top / from_biguint(g.factorial());
            (g, c)
        })
        .collect()
}

/// Expands one invariant monomial into `(u, v)` keys with `ξ`-numerators.
fn expand_invariant(
    n: usize,
    e: &Invariant,
    c: &Rational,
    sink: &mut BTreeMap<(MultiIndex, MultiIndex), HrAccumulator>,
) {
    let [i, j, p, q, w] = *e;
    let pole = i + j + p + q + w;
    let degree = -(weight(e) as i32);
    let xs = multinomial_terms(n, i);
    let ys = multinomial_terms(n, j);
    let ps = multinomial_terms(n, p);
    let qs = multinomial_terms(n, q);
    let ws = multinomial_terms(n, w);
    for (g, cg) in &xs {
        for (m, cm) in &ys {
            let xi = g.add(m);
            let c_gm = c * cg * cm;
            for (r, cr) in &ps {
                let u0 = g.add(r).add(r);
                for (s, cs) in &qs {
                    let v0 = m.add(s).add(s);
                    let c_rs = &c_gm * cr * cs;
                    for (t, ct) in &ws {
                        let key = (u0.add(t), v0.add(t));
                        sink.entry(key)
                            .or_insert_with(|| HrAccumulator::new(n, degree))
                            .add_monomial(xi.clone(), pole, &c_rs * ct);
                    }
                }
            }
        }
    }
}

fn expand_series(n: usize, series: &InvariantSeries, keep: impl Fn(&Invariant) -> bool) -> TaylorPolynomial {
    let mut sink = BTreeMap::new();
    for (e, c) in series {
        if keep(e) {
            expand_invariant(n, e, c, &mut sink);
        }
    }
    let mut out = TaylorPolynomial::new(n);
    for (key, acc) in sink {
        let v = acc.finish();
        if !v.is_zero() {
            out.terms.insert(key, v);
        }
    }
    out
}

fn trace_constants(n: usize, l: usize) -> Result<(Rational, Rational), Error> {
    let pair = trace_pair(n, l)?;
    Ok((pair.a, pair.b))
}

/// Taylor series of `ψ(ξ+u, ξ+v)` to total order `depth` in `(u, v)`, where
/// `ψ(ξ,η) = tr(σ(ξ)σ(η))` for the sign operator on `l`-forms.
pub fn psi_expansion(n: usize, l: usize, depth: u32) -> Result<TaylorPolynomial, Error> {
    let (a, b) = trace_constants(n, l)?;
    let series = psi_invariant_series(&a, &b, depth);
    Ok(expand_series(n, &series, |_| true))
}

/// The order-`n` stratum of the Taylor series at `η = ξ`, without the keys
/// that involve only `u` or only `v`.
pub fn t_prime_n(n: usize, l: usize) -> Result<TaylorPolynomial, Error> {
    let (a, b) = trace_constants(n, l)?;
    let series = psi_invariant_series(&a, &b, n as u32);
    Ok(expand_series(n, &series, |e| {
        let [i, j, p, q, w] = *e;
        weight(e) == n as u32 && i + 2 * p + w >= 1 && j + 2 * q + w >= 1
    }))
}

/// `T′(ξ,ξ,u+v,v) - T′(ξ,ξ,v,v)`.
pub fn phi(n: usize, l: usize) -> Result<TaylorPolynomial, Error> {
    let t = t_prime_n(n, l)?;
    let mut out = TaylorPolynomial::new(n);
    for (beta, delta, value) in t.terms() {
        for (kept, moved, c) in leibniz_splits(beta) {
            if kept.is_zero() {
                continue;
            }
            out.insert(kept, moved.add(delta), value.scale(&c));
        }
    }
    Ok(out)
}

/// Coefficients `A_{a,b}` of the flat-space form, obtained by integrating
/// the coefficients of [`phi`] over the unit sphere, for forms of degree
/// `n/2`.
pub fn omega_flat_coefficients(
    n: usize,
    convention: SphereConvention,
    partials: Partials,
) -> Result<BilinearFormCoefficients, Error> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let phi = phi(n, n / 2)?;
    let factor = convention_factor(n, convention);
    let mut out = BilinearFormCoefficients::new(n, Partials::D, convention, factor.pi_power);
    for (a, b, value) in phi.terms() {
        out.insert(a.clone(), b.clone(), mass_one_integral(value) * &factor.coeff);
    }
    out.with_partials(partials)
}
