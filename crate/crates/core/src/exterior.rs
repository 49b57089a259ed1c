//! Exterior and interior multiplication on `Λ^m(ℝⁿ)*`, the leading symbol
//! of the sign operator and its trace constants.
//!
//! Basis `m`-forms `e_{j₁} ∧ ⋯ ∧ e_{j_m}` are indexed by strictly
//! increasing subsets of `{0, …, n-1}` listed lexicographically, which for a
//! fixed `m` is the graded-lexicographic order. Every matrix and sign below
//! is relative to that ordering.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::homogeneous::HomogeneousRational;
use crate::matrix::SparseMatrix;
use crate::multi_index::MultiIndex;
use crate::polynomial::{Polynomial, VarSpace};
use crate::rational::{binomial, exact_sqrt, int, pow, Rational};

/// Matrix with entries rational in `ξ`.
pub type SymbolicMatrix = SparseMatrix<HomogeneousRational>;

/// Matrix with polynomial entries, possibly in several covector blocks.
pub type PolyMatrix = SparseMatrix<Polynomial>;

#[derive(Clone, Debug)]
pub struct FormBasis {
    n: usize,
    m: usize,
    subsets: Vec<Vec<usize>>,
    position: HashMap<Vec<usize>, usize>,
}

impl FormBasis {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m > n {
            return Err(Error::DegreeOutOfRange { n, m });
        }
        let mut subsets = Vec::new();
        let mut cur = Vec::with_capacity(m);
        fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == m {
                out.push(cur.clone());
                return;
            }
            for j in start..n {
                cur.push(j);
                rec(j + 1, n, m, cur, out);
                cur.pop();
            }
        }
        rec(0, n, m, &mut cur, &mut subsets);
        let position = subsets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(FormBasis {
            n,
            m,
            subsets,
            position,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn index_of(&self, subset: &[usize]) -> Option<usize> {
        self.position.get(subset).copied()
    }
}

/// `e_j ∧ e_S = sign · e_T`: the nonzero entries `(T, S, j, sign)` of the
/// exterior multiplication `Λ^m → Λ^{m+1}`.
fn wedge_entries(n: usize, m: usize) -> Result<Vec<(usize, usize, usize, i64)>> {
    if m >= n {
        return Err(Error::DegreeOutOfRange { n, m });
    }
    let source = FormBasis::new(n, m)?;
    let target = FormBasis::new(n, m + 1)?;
    let mut out = Vec::new();
    for (s_idx, s) in source.subsets().iter().enumerate() {
        for j in 0..n {
            if s.contains(&j) {
                continue;
            }
            let before = s.iter().filter(|&&k| k < j).count();
            let mut t = s.clone();
            t.insert(before, j);
            let t_idx = target.index_of(&t).expect("subset in basis");
            let sign = if before % 2 == 0 { 1 } else { -1 };
            out.push((t_idx, s_idx, j, sign));
        }
    }
    Ok(out)
}

/// `ε_m(t)` with `t` the block of variables `offset..offset+n` of a
/// polynomial ring in `nvars` variables.
pub fn epsilon_polynomial(
    n: usize,
    m: usize,
    space: VarSpace,
    nvars: usize,
    offset: usize,
) -> Result<PolyMatrix> {
    let rows = binomial(n as i64, m as i64 + 1) as usize;
    let cols = binomial(n as i64, m as i64) as usize;
    let mut out = PolyMatrix::new(rows, cols);
    for (t, s, j, sign) in wedge_entries(n, m)? {
        out.insert(t, s, Polynomial::var(space, nvars, offset + j).scale(&int(sign)));
    }
    Ok(out)
}

/// `ι_m(t): Λ^m → Λ^{m-1}`, the transpose of `ε_{m-1}(t)`.
pub fn iota_polynomial(
    n: usize,
    m: usize,
    space: VarSpace,
    nvars: usize,
    offset: usize,
) -> Result<PolyMatrix> {
    if m == 0 || m > n {
        return Err(Error::DegreeOutOfRange { n, m });
    }
    Ok(epsilon_polynomial(n, m - 1, space, nvars, offset)?.transpose())
}

/// `ε_{m-1}(t)ι_m(t) - ι_{m+1}(t)ε_m(t)` on `Λ^m`, i.e. `|t|²` times the
/// leading symbol of the sign operator.
pub fn sign_numerator(
    n: usize,
    m: usize,
    space: VarSpace,
    nvars: usize,
    offset: usize,
) -> Result<PolyMatrix> {
    if m > n {
        return Err(Error::DegreeOutOfRange { n, m });
    }
    let size = binomial(n as i64, m as i64) as usize;
    let mut out = PolyMatrix::new(size, size);
    if m > 0 {
        let e = epsilon_polynomial(n, m - 1, space, nvars, offset)?;
        let i = iota_polynomial(n, m, space, nvars, offset)?;
        out = out.add(&e.mul(&i));
    }
    if m < n {
        let i = iota_polynomial(n, m + 1, space, nvars, offset)?;
        let e = epsilon_polynomial(n, m, space, nvars, offset)?;
        out = out.sub(&i.mul(&e));
    }
    Ok(out)
}

fn to_symbolic(p: &PolyMatrix, pole: u32) -> SymbolicMatrix {
    p.map(|entry| HomogeneousRational::new(entry.clone(), pole).canonical())
}

/// `ε(ξ): Λ^m → Λ^{m+1}`.
pub fn epsilon_matrix(n: usize, m: usize) -> Result<SymbolicMatrix> {
    Ok(to_symbolic(&epsilon_polynomial(n, m, VarSpace::Xi, n, 0)?, 0))
}

/// `ι(ξ): Λ^m → Λ^{m-1}`.
pub fn iota_matrix(n: usize, m: usize) -> Result<SymbolicMatrix> {
    Ok(to_symbolic(&iota_polynomial(n, m, VarSpace::Xi, n, 0)?, 0))
}

/// Leading symbol of the sign operator on `m`-forms,
/// `|ξ|^{-2}(ε_{m-1}ι_m - ι_{m+1}ε_m)`.
pub fn leading_symbol_f(n: usize, m: usize) -> Result<SymbolicMatrix> {
    Ok(to_symbolic(&sign_numerator(n, m, VarSpace::Xi, n, 0)?, 1))
}

/// `C(n,m) - C(n,m-1) + ⋯ + (-1)^m C(n,0)`, the coefficient of `⟨ξ,η⟩` in
/// `tr(ι_{m+1}(η)ε_m(ξ))`.
pub fn alternating_binomial_sum(n: usize, m: usize) -> Rational {
    let mut acc = 0i64;
    for j in 0..=m as i64 {
        let term = binomial(n as i64, m as i64 - j);
        acc += if j % 2 == 0 { term } else { -term };
    }
    int(acc)
}

/// `tr(ι_{m+1}(η)ε_m(ξ))` as a polynomial in `(ξ, η)`.
pub fn interior_exterior_trace(n: usize, m: usize) -> Result<Polynomial> {
    let nvars = 2 * n;
    let e = epsilon_polynomial(n, m, VarSpace::Product, nvars, 0)?;
    let i = iota_polynomial(n, m + 1, VarSpace::Product, nvars, n)?;
    Ok(i
        .trace_of_product(&e)
        .unwrap_or_else(|| Polynomial::zero(VarSpace::Product, nvars)))
}

/// Constants of `tr(σ(ξ)σ(η)) = a⟨ξ,η⟩²/(|ξ|²|η|²) + b` on `m`-forms,
/// together with the alternating binomial sum at the same degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracePair {
    pub n: usize,
    pub m: usize,
    pub a: Rational,
    pub b: Rational,
    pub alternating: Rational,
}

impl TracePair {
    /// `C(n-2,m-2) + C(n-2,m) - 2C(n-2,m-1)`
    pub fn closed_form_b(n: usize, m: usize) -> Rational {
        let (n, m) = (n as i64, m as i64);
        int(binomial(n - 2, m - 2) + binomial(n - 2, m) - 2 * binomial(n - 2, m - 1))
    }
}

/// Computes `tr(N(ξ)N(η))` for the sign numerator `N` and matches it
/// exactly against `a⟨ξ,η⟩² + b|ξ|²|η|²`.
pub fn trace_pair(n: usize, m: usize) -> Result<TracePair> {
    if n == 0 || m > n {
        return Err(Error::DegreeOutOfRange { n, m });
    }
    let nvars = 2 * n;
    let space = VarSpace::Product;
    let left = sign_numerator(n, m, space, nvars, 0)?;
    let right = sign_numerator(n, m, space, nvars, n)?;
    let trace = left
        .trace_of_product(&right)
        .unwrap_or_else(|| Polynomial::zero(space, nvars));

    let diag_key = MultiIndex::zeros(nvars).with(0, 2).with(n, 2);
    let a_plus_b = trace.coeff(&diag_key);
    let b = if n >= 2 {
        trace.coeff(&MultiIndex::zeros(nvars).with(0, 2).with(n + 1, 2))
    } else {
        TracePair::closed_form_b(n, m)
    };
    let a = &a_plus_b - &b;

    let inner = Polynomial::inner(space, nvars, 0, n, n);
    let norms = Polynomial::norm_squared(space, nvars, 0, n)
        .mul(&Polynomial::norm_squared(space, nvars, n, n));
    let ansatz = inner.pow(2).scale(&a).add(&norms.scale(&b));
    if ansatz != trace {
        return Err(Error::Inconsistent(format!(
            "trace on {m}-forms in dimension {n} does not have the two-term form"
        )));
    }
    Ok(TracePair {
        n,
        m,
        a,
        b,
        alternating: alternating_binomial_sum(n, m),
    })
}

/// `tr(ε_{m-1}(t₁)ι_m(t₂)ε_{m-1}(t₃)ι_m(t₄))` over four covector blocks
/// given by their offsets in a `4n`-variable ring.
fn four_block_trace(n: usize, m: usize, blocks: [usize; 4]) -> Result<Polynomial> {
    let nvars = 4 * n;
    let space = VarSpace::Product;
    let e1 = epsilon_polynomial(n, m - 1, space, nvars, blocks[0])?;
    let i2 = iota_polynomial(n, m, space, nvars, blocks[1])?;
    let e3 = epsilon_polynomial(n, m - 1, space, nvars, blocks[2])?;
    let i4 = iota_polynomial(n, m, space, nvars, blocks[3])?;
    Ok(e1
        .mul(&i2)
        .trace_of_product(&e3.mul(&i4))
        .unwrap_or_else(|| Polynomial::zero(space, nvars)))
}

/// Checks the four-variable trace recursion relating degree `m + 1` to
/// degree `m` as an exact polynomial identity.
pub fn trace_recursion_holds(n: usize, m: usize) -> bool {
    if m == 0 || m >= n {
        return false;
    }
    let (xi1, xi2, eta1, eta2) = (0, n, 2 * n, 3 * n);
    let nvars = 4 * n;
    let space = VarSpace::Product;
    let (Ok(lhs), Ok(base)) = (
        four_block_trace(n, m + 1, [eta1, xi2, xi1, eta2]),
        four_block_trace(n, m, [xi1, xi2, eta1, eta2]),
    ) else {
        return false;
    };
    let coupling = int(2) * alternating_binomial_sum(n, m) - int(binomial(n as i64, m as i64));
    let correction = Polynomial::inner(space, nvars, xi1, xi2, n)
        .mul(&Polynomial::inner(space, nvars, eta1, eta2, n))
        .scale(&coupling);
    lhs == base.add(&correction)
}

/// Base case of the recursion: at degree one the four-block trace equals
/// `⟨t₄,t₁⟩⟨t₂,t₃⟩`.
pub fn trace_recursion_base_holds(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let (xi1, xi2, eta1, eta2) = (0, n, 2 * n, 3 * n);
    let nvars = 4 * n;
    let space = VarSpace::Product;
    let Ok(trace) = four_block_trace(n, 1, [xi1, xi2, eta1, eta2]) else {
        return false;
    };
    let expected = Polynomial::inner(space, nvars, eta2, xi1, n)
        .mul(&Polynomial::inner(space, nvars, xi2, eta1, n));
    trace == expected
}

/// One row of the trace table on `m`-forms: the alternating binomial sum
/// `A`, the constants `a`, `b` of [`TracePair`], and the constant value of
/// `tr σ(ξ)` for the leading symbol of `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub n: usize,
    pub m: usize,
    pub alternating: Rational,
    pub a: Rational,
    pub b: Rational,
    pub sign_trace: Rational,
}

/// Builds a table row from brute-force matrix traces and checks each entry
/// against its closed form; any disagreement is an error.
pub fn trace_row(n: usize, m: usize) -> Result<TraceRow> {
    let pair = trace_pair(n, m)?;
    let binom = int(binomial(n as i64, m as i64));
    let mismatch = |what: &str| Error::Inconsistent(format!("{what} disagrees at n = {n}, m = {m}"));

    let alternating = if m < n {
        let tr = interior_exterior_trace(n, m)?;
        let key = MultiIndex::zeros(2 * n).with(0, 1).with(n, 1);
        let brute = tr.coeff(&key);
        let expected = Polynomial::inner(VarSpace::Product, 2 * n, 0, n, n).scale(&brute);
        if tr != expected {
            return Err(mismatch("interior-exterior trace"));
        }
        brute
    } else {
        int(0)
    };
    if alternating != alternating_binomial_sum(n, m) {
        return Err(mismatch("alternating binomial sum"));
    }
    if pair.b != TracePair::closed_form_b(n, m) || &pair.a + &pair.b != binom {
        return Err(mismatch("trace pair"));
    }

    let num = sign_numerator(n, m, VarSpace::Xi, n, 0)?;
    let tr = num.trace().unwrap_or_else(|| Polynomial::zero(VarSpace::Xi, n));
    let sign_trace = tr.coeff(&MultiIndex::zeros(n).with(0, 2));
    if tr != Polynomial::norm_squared(VarSpace::Xi, n, 0, n).scale(&sign_trace) {
        return Err(mismatch("leading symbol trace"));
    }
    let below = if m == 0 { int(0) } else { alternating_binomial_sum(n, m - 1) };
    if sign_trace != int(2) * below - &binom {
        return Err(mismatch("leading symbol trace"));
    }
    Ok(TraceRow {
        n,
        m,
        alternating,
        a: pair.a,
        b: pair.b,
        sign_trace,
    })
}

/// Rows `m = 0..=n`.
pub fn trace_table(n: usize) -> Result<Vec<TraceRow>> {
    (0..=n).map(|m| trace_row(n, m)).collect()
}

/// A number `coeff · (√s)^root` for a fixed positive rational `s`; perfect
/// squares are folded into the coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledRoot {
    pub coeff: Rational,
    pub root: bool,
}

impl ScaledRoot {
    /// `s^{half_exponent / 2}`
    pub fn power(s: &Rational, half_exponent: i32) -> Self {
        let whole = half_exponent.div_euclid(2);
        let odd = half_exponent.rem_euclid(2) == 1;
        let coeff = pow(s, whole);
        match (odd, exact_sqrt(s)) {
            (true, Some(r)) => ScaledRoot {
                coeff: coeff * r,
                root: false,
            },
            (odd, _) => ScaledRoot { coeff, root: odd },
        }
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        ScaledRoot {
            coeff: &self.coeff * c,
            root: self.root && !c.is_zero(),
        }
    }

    pub fn mul(&self, other: &Self, s: &Rational) -> Self {
        let mut coeff = &self.coeff * &other.coeff;
        if self.root && other.root {
            coeff *= s;
        }
        ScaledRoot {
            coeff,
            root: self.root != other.root,
        }
    }
}

/// Hodge star `Λ^{n-k} → Λ^k` for the metric `s·δ`, with rows indexed by
/// the `k`-form basis and columns by the `(n-k)`-form basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HodgeStar {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<(usize, usize, ScaledRoot)>,
}

fn permutation_sign(order: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[i] > order[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Builds the star from `α ∧ ⋆β = g(α,β) vol_g`: on covectors the metric
/// `s·δ` pairs basis `p`-forms to `s^{-p}`, and `vol_g = s^{n/2} e_{0⋯n-1}`.
pub fn hodge_star(n: usize, k: usize, s: &Rational) -> Result<HodgeStar> {
    if k > n {
        return Err(Error::DegreeOutOfRange { n, m: k });
    }
    if *s <= Rational::zero() {
        return Err(Error::InvalidArgument("metric scale must be positive".into()));
    }
    let p = n - k;
    let source = FormBasis::new(n, p)?;
    let target = FormBasis::new(n, k)?;
    let pairing = ScaledRoot::power(s, -2 * p as i32);
    let volume = ScaledRoot::power(s, n as i32);
    let mut entries = Vec::new();
    for (col, beta) in source.subsets().iter().enumerate() {
        let complement: Vec<usize> = (0..n).filter(|j| !beta.contains(j)).collect();
        let row = target.index_of(&complement).expect("complement in basis");
        let mut order = beta.clone();
        order.extend_from_slice(&complement);
        // e_β ∧ (c e_{β^c}) = c·sign·vol_δ must equal s^{-p}·s^{n/2}·vol_δ
        let sign = int(permutation_sign(&order));
        let value = pairing.mul(&volume, s).scaled(&sign.recip());
        entries.push((row, col, value));
    }
    Ok(HodgeStar { n, k, entries })
}

/// Outcome of comparing the star of `s·δ` with the star of `δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HodgeScaling {
    pub factor: ScaledRoot,
    /// `⋆_{s·δ} = s^{(2k-n)/2} ⋆_δ` entrywise.
    pub law_holds: bool,
    /// `⋆_{s·δ} = ⋆_δ` entrywise.
    pub unchanged: bool,
}

pub fn hodge_star_scaling(n: usize, k: usize, s: &Rational) -> Result<HodgeScaling> {
    let flat = hodge_star(n, k, &Rational::one())?;
    let scaled = hodge_star(n, k, s)?;
    let factor = ScaledRoot::power(s, 2 * k as i32 - n as i32);
    let law_holds = flat.entries.len() == scaled.entries.len()
        && flat
            .entries
            .iter()
            .zip(&scaled.entries)
            .all(|((r1, c1, v1), (r2, c2, v2))| {
                r1 == r2 && c1 == c2 && factor.scaled(&v1.coeff) == *v2
            });
    let unchanged = flat.entries.iter().zip(&scaled.entries).all(|(a, b)| a == b);
    Ok(HodgeScaling {
        factor,
        law_holds,
        unchanged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn xi_sq_identity(n: usize, m: usize) -> SymbolicMatrix {
        let size = binomial(n as i64, m as i64) as usize;
        SymbolicMatrix::diagonal(size, &HomogeneousRational::constant(n, Rational::one()))
    }

    #[test]
    fn basis_sizes_and_order() {
        let b = FormBasis::new(4, 2).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.subsets()[0], vec![0, 1]);
        assert_eq!(b.subsets()[5], vec![2, 3]);
        assert!(FormBasis::new(2, 3).is_err());
    }

    #[test]
    fn epsilon_small_cases() {
        let e0 = epsilon_matrix(2, 0).unwrap();
        assert_eq!(e0.nonzero_count(), 2);
        let x1 = HomogeneousRational::xi_monomial(MultiIndex::unit(2, 0), int(1));
        let x2 = HomogeneousRational::xi_monomial(MultiIndex::unit(2, 1), int(1));
        assert_eq!(e0.get(0, 0), Some(&x1));
        assert_eq!(e0.get(1, 0), Some(&x2));
        // ε(ξ)e₁ = ξ₂ e₂∧e₁ = -ξ₂ e₁∧e₂
        let e1 = epsilon_matrix(2, 1).unwrap();
        assert_eq!(e1.get(0, 0), Some(&x2.neg()));
        assert_eq!(e1.get(0, 1), Some(&x1));
        assert_eq!(epsilon_matrix(3, 1).unwrap().nonzero_count(), 6);
        assert!(epsilon_matrix(2, 2).is_err());
    }

    #[test]
    fn iota_small_case() {
        let i1 = iota_matrix(2, 1).unwrap();
        let x1 = HomogeneousRational::xi_monomial(MultiIndex::unit(2, 0), int(1));
        assert_eq!(i1.get(0, 0), Some(&x1));
        assert!(iota_matrix(2, 0).is_err());
    }

    #[test]
    fn nilpotent_and_anticommutation() {
        for n in 1..=6usize {
            for m in 0..n.saturating_sub(1) {
                let e = epsilon_matrix(n, m).unwrap();
                let e_next = epsilon_matrix(n, m + 1).unwrap();
                assert!(e_next.mul(&e).is_zero(), "ε² ≠ 0 at n={n} m={m}");
                let i = iota_matrix(n, m + 2).unwrap();
                let i_next = iota_matrix(n, m + 1).unwrap();
                assert!(i_next.mul(&i).is_zero(), "ι² ≠ 0 at n={n} m={m}");
            }
            for m in 0..=n {
                let nvars = 2 * n;
                let sp = VarSpace::Product;
                let size = binomial(n as i64, m as i64) as usize;
                let mut sum = PolyMatrix::new(size, size);
                if m > 0 {
                    let e = epsilon_polynomial(n, m - 1, sp, nvars, 0).unwrap();
                    let i = iota_polynomial(n, m, sp, nvars, n).unwrap();
                    sum = sum.add(&e.mul(&i));
                }
                if m < n {
                    let i = iota_polynomial(n, m + 1, sp, nvars, n).unwrap();
                    let e = epsilon_polynomial(n, m, sp, nvars, 0).unwrap();
                    sum = sum.add(&i.mul(&e));
                }
                let inner = Polynomial::inner(sp, nvars, 0, n, n);
                assert!(
                    sum.equals(&PolyMatrix::diagonal(size, &inner)),
                    "anticommutator fails at n={n} m={m}"
                );
            }
        }
    }

    #[test]
    fn difference_squares_to_minus_norm() {
        let (n, m) = (4, 2);
        let block = epsilon_matrix(n, m - 1)
            .unwrap()
            .mul(&iota_matrix(n, m).unwrap())
            .add(&iota_matrix(n, m + 1).unwrap().mul(&epsilon_matrix(n, m).unwrap()))
            .scale(&int(-1));
        let norm = HomogeneousRational::new(Polynomial::norm_squared(VarSpace::Xi, n, 0, n), 0);
        let size = binomial(n as i64, m as i64) as usize;
        assert!(block.equals(&SymbolicMatrix::diagonal(size, &norm.neg())));
    }

    #[test]
    fn leading_symbol_at_unit_covector() {
        let f = leading_symbol_f(2, 1).unwrap();
        let at = |i: usize, j: usize| {
            f.get(i, j)
                .map(|v| v.evaluate(&[int(1), int(0)]))
                .unwrap_or_else(Rational::zero)
        };
        assert_eq!(at(0, 0), int(1));
        assert_eq!(at(1, 1), int(-1));
        assert_eq!(at(0, 1), int(0));
        assert_eq!(at(1, 0), int(0));
    }

    #[test]
    fn leading_symbol_squares_to_identity() {
        for n in 1..=6usize {
            for m in 0..=n {
                let f = leading_symbol_f(n, m).unwrap();
                assert!(f.mul(&f).equals(&xi_sq_identity(n, m)), "F² ≠ 1 at n={n} m={m}");
            }
        }
    }

    #[test]
    fn leading_symbol_trace() {
        let t = leading_symbol_f(4, 2).unwrap().trace();
        assert!(t.is_none_or(|v| v.is_zero()));
        for n in 1..=8usize {
            for m in 0..=n {
                let num = sign_numerator(n, m, VarSpace::Xi, n, 0).unwrap();
                let tr = num.trace().unwrap_or_else(|| Polynomial::zero(VarSpace::Xi, n));
                let expected = if m == 0 {
                    -int(1)
                } else {
                    int(2) * alternating_binomial_sum(n, m - 1) - int(binomial(n as i64, m as i64))
                };
                let norm = Polynomial::norm_squared(VarSpace::Xi, n, 0, n);
                assert_eq!(tr, norm.scale(&expected), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn alternating_sum_examples() {
        assert_eq!(alternating_binomial_sum(7, 0), int(1));
        assert_eq!(alternating_binomial_sum(4, 1), int(3));
        assert_eq!(alternating_binomial_sum(4, 2), int(3));
        for n in 1..=6 {
            for m in 0..n {
                let tr = interior_exterior_trace(n, m).unwrap();
                let inner = Polynomial::inner(VarSpace::Product, 2 * n, 0, n, n);
                assert_eq!(tr, inner.scale(&alternating_binomial_sum(n, m)));
            }
        }
    }

    #[test]
    fn trace_pair_examples() {
        let p = trace_pair(2, 1).unwrap();
        assert_eq!((p.a, p.b), (int(4), int(-2)));
        let p = trace_pair(4, 2).unwrap();
        assert_eq!((p.a, p.b), (int(8), int(-2)));
        assert_eq!(p.alternating, int(3));
    }

    #[test]
    fn trace_pair_closed_forms() {
        for n in 1..=8usize {
            for m in 0..=n {
                let p = trace_pair(n, m).unwrap();
                assert_eq!(&p.a + &p.b, int(binomial(n as i64, m as i64)), "n={n} m={m}");
                assert_eq!(p.b, TracePair::closed_form_b(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn trace_table_rows() {
        let row = trace_row(4, 2).unwrap();
        assert_eq!((row.a, row.b, row.sign_trace), (int(8), int(-2), int(0)));
        let row = trace_row(2, 1).unwrap();
        assert_eq!((row.a, row.b, row.sign_trace), (int(4), int(-2), int(0)));
        assert_eq!(trace_table(3).unwrap().len(), 4);
        assert!(trace_row(0, 0).is_err());
    }

    #[test]
    fn trace_recursion() {
        assert!(trace_recursion_base_holds(3));
        assert!(trace_recursion_holds(4, 1));
        assert!(trace_recursion_holds(4, 2));
        for n in 2..=5 {
            assert!(trace_recursion_base_holds(n));
            for m in 1..n {
                assert!(trace_recursion_holds(n, m), "n={n} m={m}");
            }
        }
        assert!(!trace_recursion_holds(4, 4));
    }

    #[test]
    fn hodge_examples() {
        for s in [int(2), int(9), ratio(1, 3)] {
            let r = hodge_star_scaling(2, 1, &s).unwrap();
            assert!(r.law_holds && r.unchanged);
        }
        let r = hodge_star_scaling(4, 2, &int(9)).unwrap();
        assert!(r.law_holds && r.unchanged);
        let r = hodge_star_scaling(4, 1, &int(4)).unwrap();
        assert!(r.law_holds && !r.unchanged);
        assert_eq!(r.factor, ScaledRoot { coeff: ratio(1, 4), root: false });
        assert!(hodge_star_scaling(2, 1, &int(0)).is_err());
    }

    #[test]
    fn hodge_scaling_all_degrees() {
        for n in 1..=6usize {
            for k in 0..=n {
                for s in [int(2), int(4), ratio(5, 3)] {
                    let r = hodge_star_scaling(n, k, &s).unwrap();
                    assert!(r.law_holds, "n={n} k={k}");
                    assert_eq!(r.unchanged, 2 * k == n, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn hodge_star_squares_to_sign() {
        // ⋆⋆ = (-1)^{k(n-k)} for the flat metric
        for n in 1..=5usize {
            for k in 0..=n {
                let a = hodge_star(n, k, &Rational::one()).unwrap();
                let b = hodge_star(n, n - k, &Rational::one()).unwrap();
                let mut first = SparseMatrix::<Rational>::new(
                    binomial(n as i64, k as i64) as usize,
                    binomial(n as i64, (n - k) as i64) as usize,
                );
                for (r, c, v) in &a.entries {
                    first.insert(*r, *c, v.coeff.clone());
                }
                let mut second = SparseMatrix::<Rational>::new(first.cols(), first.rows());
                for (r, c, v) in &b.entries {
                    second.insert(*r, *c, v.coeff.clone());
                }
                let sign = if (k * (n - k)) % 2 == 0 { 1 } else { -1 };
                assert!(second
                    .mul(&first)
                    .equals(&SparseMatrix::diagonal(first.cols(), &int(sign))));
            }
        }
    }
}
