//! Exact Fourier arithmetic on the flat torus `T^n = (ℝ/2πℤ)^n`, used to
//! evaluate `∫ f₀ Ω(f₁, f₂)` and its Hochschild coboundary.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bilinear::{BilinearFormCoefficients, Partials};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::rational::{int, ratio, to_fraction_string, Rational};

/// `re + i·im` with rational parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational { re, im: Rational::zero() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::real(Rational::one())
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn neg(&self) -> Self {
        GaussianRational::new(-&self.re, -&self.im)
    }

    pub fn mul(&self, o: &Self) -> Self {
        GaussianRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn scale(&self, c: &Rational) -> Self {
        GaussianRational::new(&self.re * c, &self.im * c)
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -&self.im)
    }

    /// Multiplies by `i^k`.
    pub fn times_i_power(&self, k: u32) -> Self {
        match k % 4 {
            0 => self.clone(),
            1 => GaussianRational::new(-&self.im, self.re.clone()),
            2 => self.neg(),
            _ => GaussianRational::new(self.im.clone(), -&self.re),
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", to_fraction_string(&self.re), to_fraction_string(&self.im))
    }
}

/// Finite Fourier series `Σ c_κ e^{i⟨κ,x⟩}` on `T^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrigPolynomial {
    n: usize,
    modes: BTreeMap<Vec<i64>, GaussianRational>,
}

impl TrigPolynomial {
    pub fn zero(n: usize) -> Self {
        TrigPolynomial { n, modes: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: GaussianRational) -> Self {
        Self::mode(vec![0; n], c)
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, GaussianRational::one())
    }

    pub fn mode(freq: Vec<i64>, c: GaussianRational) -> Self {
        let mut out = Self::zero(freq.len());
        out.add_mode(freq, c);
        out
    }

    /// `cos(x_i)`
    pub fn cos(n: usize, i: usize) -> Self {
        let half = GaussianRational::real(ratio(1, 2));
        let mut k = vec![0; n];
        k[i] = 1;
        let mut out = Self::mode(k.clone(), half.clone());
        k[i] = -1;
        out.add_mode(k, half);
        out
    }

    /// `sin(x_i)`
    pub fn sin(n: usize, i: usize) -> Self {
        let mut k = vec![0; n];
        k[i] = 1;
        let mut out = Self::mode(k.clone(), GaussianRational::new(int(0), ratio(-1, 2)));
        k[i] = -1;
        out.add_mode(k, GaussianRational::new(int(0), ratio(1, 2)));
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = (&[i64], &GaussianRational)> {
        self.modes.iter().map(|(k, c)| (k.as_slice(), c))
    }

    pub fn coeff(&self, freq: &[i64]) -> GaussianRational {
        self.modes.get(freq).cloned().unwrap_or_default()
    }

    pub fn add_mode(&mut self, freq: Vec<i64>, c: GaussianRational) {
        assert_eq!(freq.len(), self.n, "frequency dimension mismatch");
        let sum = self.modes.get(&freq).cloned().unwrap_or_default().add(&c);
        if sum.is_zero() {
            self.modes.remove(&freq);
        } else {
            self.modes.insert(freq, sum);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.modes {
            out.add_mode(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&GaussianRational::real(int(-1))))
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.modes {
            out.add_mode(k.clone(), v.mul(c));
        }
        out
    }

    /// Pointwise product: frequencies add.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.modes {
            for (l, d) in &o.modes {
                let sum = k.iter().zip(l).map(|(a, b)| a + b).collect();
                out.add_mode(sum, c.mul(d));
            }
        }
        out
    }

    /// `∂_i`
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.modes {
            out.add_mode(k.clone(), c.times_i_power(1).scale(&int(k[i])));
        }
        out
    }

    /// True when the series is the expansion of a real-valued function.
    pub fn is_real(&self) -> bool {
        self.modes.iter().all(|(k, c)| {
            let minus: Vec<i64> = k.iter().map(|v| -v).collect();
            self.coeff(&minus) == c.conj()
        })
    }
}

/// `coeff · (2π)^two_pi_power`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusIntegral {
    pub coeff: GaussianRational,
    pub two_pi_power: u32,
}

impl TorusIntegral {
    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }
}

/// `∫_{T^n} p dx`, the zero mode times `(2π)^n`.
pub fn torus_integral(p: &TrigPolynomial) -> TorusIntegral {
    TorusIntegral {
        coeff: p.coeff(&vec![0; p.n]),
        two_pi_power: p.n as u32,
    }
}

fn check_dims(omega: &BilinearFormCoefficients, fs: &[&TrigPolynomial]) -> Result<()> {
    match fs.iter().find(|f| f.n != omega.n) {
        Some(f) => Err(Error::DimensionMismatch(format!(
            "trigonometric polynomial in {} variables, form in {}",
            f.n, omega.n
        ))),
        None => Ok(()),
    }
}

/// `Σ A_{a,b} ∂^a f ∂^b h` evaluated mode by mode; the factor `π^pi_power`
/// of the form is left implicit.
pub fn apply_bilinear(
    omega: &BilinearFormCoefficients,
    f: &TrigPolynomial,
    h: &TrigPolynomial,
) -> Result<TrigPolynomial> {
    check_dims(omega, &[f, h])?;
    let form = omega.with_partials(Partials::Ordinary)?;
    let entries: Vec<_> = form.entries().collect();
    let mut out = TrigPolynomial::zero(omega.n);
    for (k, c) in &f.modes {
        for (l, d) in &h.modes {
            let mut symbol = GaussianRational::zero();
            for (a, b, value) in &entries {
                let term = monomial_value(k, a) * monomial_value(l, b) * *value;
                symbol = symbol.add(&GaussianRational::real(term).times_i_power(a.order() + b.order()));
            }
            if symbol.is_zero() {
                continue;
            }
            let sum = k.iter().zip(l).map(|(x, y)| x + y).collect();
            out.add_mode(sum, c.mul(d).mul(&symbol));
        }
    }
    Ok(out)
}

fn monomial_value(k: &[i64], a: &MultiIndex) -> Rational {
    k.iter()
        .zip(a.exponents())
        .fold(Rational::one(), |acc, (&x, &e)| acc * int(x.pow(e as u32)))
}

/// `∫ f₀ Ω(f₁, f₂)`
pub fn pairing(
    omega: &BilinearFormCoefficients,
    f0: &TrigPolynomial,
    f1: &TrigPolynomial,
    f2: &TrigPolynomial,
) -> Result<TorusIntegral> {
    check_dims(omega, &[f0])?;
    Ok(torus_integral(&f0.mul(&apply_bilinear(omega, f1, f2)?)))
}

/// `φ(f₀f₁,f₂,f₃) − φ(f₀,f₁f₂,f₃) + φ(f₀,f₁,f₂f₃) − φ(f₃f₀,f₁,f₂)` for
/// `φ(f₀,f₁,f₂) = ∫ f₀ Ω(f₁,f₂)`.
pub fn hochschild_b(
    omega: &BilinearFormCoefficients,
    f: [&TrigPolynomial; 4],
) -> Result<TorusIntegral> {
    let [f0, f1, f2, f3] = f;
    check_dims(omega, &f)?;
    let terms = [
        pairing(omega, &f0.mul(f1), f2, f3)?,
        pairing(omega, f0, &f1.mul(f2), f3)?,
        pairing(omega, f0, f1, &f2.mul(f3))?,
        pairing(omega, &f3.mul(f0), f1, f2)?,
    ];
    let coeff = terms[0]
        .coeff
        .sub(&terms[1].coeff)
        .add(&terms[2].coeff)
        .sub(&terms[3].coeff);
    Ok(TorusIntegral {
        coeff,
        two_pi_power: omega.n as u32,
    })
}

/// `∫ f₀ (Ω(f,h) − Ω(h,f))`
pub fn symmetry_integral_check(
    omega: &BilinearFormCoefficients,
    f0: &TrigPolynomial,
    f: &TrigPolynomial,
    h: &TrigPolynomial,
) -> Result<TorusIntegral> {
    check_dims(omega, &[f0, f, h])?;
    let diff = apply_bilinear(omega, f, h)?.sub(&apply_bilinear(omega, h, f)?);
    Ok(torus_integral(&f0.mul(&diff)))
}

/// Shape of the random test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomTrigConfig {
    /// Frequencies are drawn from `[-max_frequency, max_frequency]^n`.
    pub max_frequency: i64,
    pub max_modes: usize,
    pub max_numerator: i64,
    pub max_denominator: i64,
}

impl Default for RandomTrigConfig {
    fn default() -> Self {
        RandomTrigConfig {
            max_frequency: 2,
            max_modes: 3,
            max_numerator: 5,
            max_denominator: 4,
        }
    }
}

fn random_rational<R: Rng>(rng: &mut R, cfg: &RandomTrigConfig) -> Rational {
    ratio(
        rng.gen_range(-cfg.max_numerator..=cfg.max_numerator),
        rng.gen_range(1..=cfg.max_denominator),
    )
}

pub fn random_trig<R: Rng>(rng: &mut R, n: usize, cfg: &RandomTrigConfig) -> TrigPolynomial {
    let count = rng.gen_range(1..=cfg.max_modes.max(1));
    let mut out = TrigPolynomial::zero(n);
    for _ in 0..count {
        let freq = (0..n)
            .map(|_| rng.gen_range(-cfg.max_frequency..=cfg.max_frequency))
            .collect();
        let c = GaussianRational::new(random_rational(rng, cfg), random_rational(rng, cfg));
        out.add_mode(freq, c);
    }
    out
}

/// Per-trial generator, independent of the order in which trials run.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialResult {
    pub trial: u64,
    pub hochschild: GaussianRational,
    pub symmetry: GaussianRational,
}

impl TrialResult {
    pub fn passed(&self) -> bool {
        self.hochschild.is_zero() && self.symmetry.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleReport {
    pub n: usize,
    pub seed: u64,
    pub config: RandomTrigConfig,
    pub trials: Vec<TrialResult>,
}

impl CocycleReport {
    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| !t.passed()).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Evaluates the coboundary and the symmetry defect on `trials` random
/// quadruples.
pub fn run_cocycle_trials(
    omega: &BilinearFormCoefficients,
    seed: u64,
    trials: u64,
    config: RandomTrigConfig,
) -> Result<CocycleReport> {
    let n = omega.n;
    let results: Result<Vec<TrialResult>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let f: Vec<TrigPolynomial> = (0..4).map(|_| random_trig(&mut rng, n, &config)).collect();
            let hochschild = hochschild_b(omega, [&f[0], &f[1], &f[2], &f[3]])?.coeff;
            let symmetry = symmetry_integral_check(omega, &f[0], &f[1], &f[2])?.coeff;
            Ok(TrialResult {
                trial,
                hochschild,
                symmetry,
            })
        })
        .collect();
    Ok(CocycleReport {
        n,
        seed,
        config,
        trials: results?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::{dirichlet_form, fourth_order_reference};
    use crate::sphere::{omega_flat_coefficients, SphereConvention};

    fn g(re: i64, im: i64) -> GaussianRational {
        GaussianRational::new(int(re), int(im))
    }

    #[test]
    fn torus_integrals() {
        let mut k = vec![0; 3];
        k[0] = 1;
        assert!(torus_integral(&TrigPolynomial::mode(k, g(1, 0))).is_zero());
        let one = torus_integral(&TrigPolynomial::one(3));
        assert_eq!(one.coeff, g(1, 0));
        assert_eq!(one.two_pi_power, 3);
        let c = TrigPolynomial::cos(2, 0);
        assert_eq!(torus_integral(&c.mul(&c)).coeff, GaussianRational::real(ratio(1, 2)));
    }

    #[test]
    fn trig_identities() {
        let (c, s) = (TrigPolynomial::cos(2, 0), TrigPolynomial::sin(2, 0));
        assert_eq!(c.mul(&c).add(&s.mul(&s)), TrigPolynomial::one(2));
        assert_eq!(s.partial(0), c);
        assert!(c.is_real() && s.is_real());
        assert!(!TrigPolynomial::mode(vec![1, 0], g(1, 0)).is_real());
    }

    #[test]
    fn dirichlet_on_cosines() {
        let c = TrigPolynomial::cos(2, 0);
        let s = TrigPolynomial::sin(2, 0);
        let out = apply_bilinear(&dirichlet_form(2), &c, &c).unwrap();
        assert_eq!(out, s.mul(&s));
    }

    #[test]
    fn units_are_annihilated() {
        let mut rng = trial_rng(7, 0);
        let cfg = RandomTrigConfig::default();
        let omega = fourth_order_reference(4);
        let f = random_trig(&mut rng, 4, &cfg);
        let one = TrigPolynomial::one(4);
        assert!(apply_bilinear(&omega, &one, &f).unwrap().is_zero());
        assert!(apply_bilinear(&omega, &f, &one).unwrap().is_zero());
        let h = random_trig(&mut rng, 4, &cfg);
        let k = random_trig(&mut rng, 4, &cfg);
        let omega4 = omega_flat_coefficients(4, SphereConvention::MassOne, Partials::Ordinary).unwrap();
        for slot in 0..4 {
            let mut fs = [&f, &h, &k, &f];
            fs[slot] = &one;
            assert!(hochschild_b(&omega4, fs).unwrap().is_zero());
        }
    }

    #[test]
    fn integration_by_parts() {
        let mut rng = trial_rng(11, 3);
        for _ in 0..20 {
            let p = random_trig(&mut rng, 3, &RandomTrigConfig::default());
            for i in 0..3 {
                assert!(torus_integral(&p.partial(i)).is_zero());
            }
        }
    }

    #[test]
    fn bilinearity() {
        let mut rng = trial_rng(5, 1);
        let cfg = RandomTrigConfig::default();
        let omega = omega_flat_coefficients(2, SphereConvention::MassOne, Partials::Ordinary).unwrap();
        let (f, f2, h) = (
            random_trig(&mut rng, 2, &cfg),
            random_trig(&mut rng, 2, &cfg),
            random_trig(&mut rng, 2, &cfg),
        );
        let c = GaussianRational::new(ratio(2, 3), ratio(-1, 5));
        let lhs = apply_bilinear(&omega, &f.scale(&c).add(&f2), &h).unwrap();
        let rhs = apply_bilinear(&omega, &f, &h)
            .unwrap()
            .scale(&c)
            .add(&apply_bilinear(&omega, &f2, &h).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cocycle_trials_vanish() {
        for n in [2, 4] {
            let omega = omega_flat_coefficients(n, SphereConvention::MassOne, Partials::Ordinary).unwrap();
            let report = run_cocycle_trials(&omega, 42, 25, RandomTrigConfig::default()).unwrap();
            assert!(report.passed(), "n = {n}: {} failures", report.failures());
        }
    }

    #[test]
    fn non_cocycle_is_detected() {
        // f'' h'' in one variable is not a Hochschild cocycle.
        let mut omega = BilinearFormCoefficients::new(1, Partials::Ordinary, SphereConvention::MassOne, 0);
        omega.insert(MultiIndex::from_slice(&[2]), MultiIndex::from_slice(&[2]), int(1));
        let report = run_cocycle_trials(&omega, 1, 10, RandomTrigConfig::default()).unwrap();
        assert!(report.failures() > 0);
    }

    #[test]
    fn reproducible() {
        let omega = dirichlet_form(2);
        let a = run_cocycle_trials(&omega, 9, 5, RandomTrigConfig::default()).unwrap();
        let b = run_cocycle_trials(&omega, 9, 5, RandomTrigConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch() {
        let r = apply_bilinear(&dirichlet_form(2), &TrigPolynomial::one(3), &TrigPolynomial::one(2));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
