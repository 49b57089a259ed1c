//! Graded symbol expansions with polynomial dependence on `x`.
//!
//! A symbol entry is a finite sum `Σ x^e · i^p · s_{e,p}(ξ)` with `p ∈ {0,1}`
//! and `s_{e,p}` homogeneous rational in `ξ`. Powers of `i` coming from
//! `D_x = -i∂_x` and from the symbols of `d` and `δ` are folded into the
//! phase bit and a sign, so no complex coefficients appear.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exterior::{epsilon_polynomial, iota_polynomial};
use crate::homogeneous::{HomogeneousRational, HrAccumulator};
use crate::matrix::SparseMatrix;
use crate::multi_index::{mi_factorial, MultiIndex};
use crate::polynomial::{Polynomial, VarSpace};
use crate::rational::{from_biguint, int, Rational};
use crate::sphere::{convention_factor, mass_one_integral, SphereConvention};

/// Multiplies `i^phase` by `i^k`; returns the new phase bit and a sign.
fn shift_phase(phase: u8, k: u32) -> (u8, i64) {
    match (phase as u32 + k) % 4 {
        0 => (0, 1),
        1 => (1, 1),
        2 => (0, -1),
        _ => (1, -1),
    }
}

/// `Π e_i!/(e_i-α_i)!`, the coefficient of `∂^α x^e`.
fn falling_factorial(e: &MultiIndex, alpha: &MultiIndex) -> Rational {
    let mut acc = 1u64;
    let mut out = Rational::one();
    for i in 0..e.dim() {
        for t in 0..alpha.get(i) as u64 {
            acc *= e.get(i) as u64 - t;
            if acc > 1 << 40 {
                out *= int(acc as i64);
                acc = 1;
            }
        }
    }
    out * int(acc as i64)
}

/// One symbol entry: homogeneous of a fixed degree in `ξ`, polynomial in `x`.
#[derive(Clone)]
pub struct SymbolScalar {
    n: usize,
    degree: i32,
    parts: BTreeMap<(MultiIndex, u8), HomogeneousRational>,
}

impl SymbolScalar {
    pub fn zero(n: usize, degree: i32) -> Self {
        SymbolScalar {
            n,
            degree,
            parts: BTreeMap::new(),
        }
    }

    pub fn from_hr(value: HomogeneousRational) -> Self {
        Self::term(MultiIndex::zeros(value.dim()), 0, value)
    }

    /// `x^e · i^phase · value`
    pub fn term(x_exps: MultiIndex, phase: u8, value: HomogeneousRational) -> Self {
        let n = value.dim();
        assert_eq!(x_exps.dim(), n, "x and ξ dimensions differ");
        let mut out = Self::zero(n, value.degree());
        let (phase, sign) = shift_phase(phase, 0);
        out.add_part(x_exps, phase, value.scale(&int(sign)));
        out
    }

    /// An `x`-polynomial as a symbol of degree zero.
    pub fn from_x_polynomial(f: &Polynomial) -> Self {
        let n = f.nvars();
        let mut out = Self::zero(n, 0);
        for (e, c) in f.terms() {
            out.add_part(e.clone(), 0, HomogeneousRational::constant(n, c.clone()));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> impl Iterator<Item = (&MultiIndex, u8, &HomogeneousRational)> {
        self.parts.iter().map(|((e, p), v)| (e, *p, v))
    }

    fn add_part(&mut self, x_exps: MultiIndex, phase: u8, value: HomogeneousRational) {
        if value.is_zero() {
            return;
        }
        assert_eq!(value.degree(), self.degree, "adding symbols of different degree");
        let key = (x_exps, phase);
        let sum = match self.parts.get(&key) {
            Some(old) => old.add(&value),
            None => value,
        };
        if sum.is_zero() {
            self.parts.remove(&key);
        } else {
            self.parts.insert(key, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        let mut out = self.clone();
        for ((e, p), v) in &other.parts {
            out.add_part(e.clone(), *p, v.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&int(-1))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n, self.degree);
        }
        SymbolScalar {
            n: self.n,
            degree: self.degree,
            parts: self.parts.iter().map(|(k, v)| (k.clone(), v.scale(c))).collect(),
        }
    }

    /// Multiplies by `i^k`.
    pub fn times_i_power(&self, k: u32) -> Self {
        let mut out = Self::zero(self.n, self.degree);
        for ((e, p), v) in &self.parts {
            let (phase, sign) = shift_phase(*p, k);
            out.add_part(e.clone(), phase, v.scale(&int(sign)));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n, self.degree + other.degree);
        for ((e1, p1), v1) in &self.parts {
            for ((e2, p2), v2) in &other.parts {
                let (phase, sign) = shift_phase(*p1, *p2 as u32);
                let mut v = v1.mul(v2);
                if sign < 0 {
                    v = v.neg();
                }
                out.add_part(e1.add(e2), phase, v);
            }
        }
        out
    }

    /// `∂_ξ^α`
    pub fn partial_xi(&self, alpha: &MultiIndex) -> Self {
        let mut out = Self::zero(self.n, self.degree - alpha.order() as i32);
        for ((e, p), v) in &self.parts {
            out.add_part(e.clone(), *p, v.partial_multi(alpha));
        }
        out
    }

    /// `D_x^α = (-i)^{|α|} ∂_x^α`
    pub fn d_x(&self, alpha: &MultiIndex) -> Self {
        let mut out = Self::zero(self.n, self.degree);
        let shift = 3 * alpha.order();
        for ((e, p), v) in &self.parts {
            let Some(rest) = e.checked_sub(alpha) else {
                continue;
            };
            let (phase, sign) = shift_phase(*p, shift);
            let c = falling_factorial(e, alpha) * int(sign);
            out.add_part(rest, phase, v.scale(&c));
        }
        out
    }

    /// Exponents `e` of the `x`-monomials present.
    pub fn x_exponents(&self) -> impl Iterator<Item = &MultiIndex> {
        self.parts.keys().map(|(e, _)| e)
    }

    /// The value at `x = 0`.
    pub fn at_origin(&self) -> Self {
        let zero = MultiIndex::zeros(self.n);
        SymbolScalar {
            n: self.n,
            degree: self.degree,
            parts: self
                .parts
                .iter()
                .filter(|((e, _), _)| *e == zero)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn canonical(&self) -> Self {
        SymbolScalar {
            n: self.n,
            degree: self.degree,
            parts: self.parts.iter().map(|(k, v)| (k.clone(), v.canonical())).collect(),
        }
    }

    /// The `ξ`-part when the entry is real and independent of `x`.
    pub fn as_constant_hr(&self) -> Option<HomogeneousRational> {
        match self.parts.len() {
            0 => Some(HomogeneousRational::zero(self.n, self.degree)),
            1 => {
                let ((e, p), v) = self.parts.iter().next()?;
                (e.is_zero() && *p == 0).then(|| v.clone())
            }
            _ => None,
        }
    }
}

impl PartialEq for SymbolScalar {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.sub(other).is_zero()
    }
}

impl fmt::Debug for SymbolScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        for (i, ((e, p), v)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let unit = if *p == 1 { "i·" } else { "" };
            write!(f, "{unit}x^{e}·({v:?})")?;
        }
        Ok(())
    }
}

impl crate::matrix::Entry for SymbolScalar {
    fn is_zero(&self) -> bool {
        SymbolScalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        SymbolScalar::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        SymbolScalar::mul(self, other).canonical()
    }
    fn scale(&self, c: &Rational) -> Self {
        SymbolScalar::scale(self, c)
    }
}

/// A homogeneous matrix-valued symbol of fixed order.
pub type SymbolTerm = SparseMatrix<SymbolScalar>;

fn term_partial_xi(t: &SymbolTerm, alpha: &MultiIndex) -> SymbolTerm {
    t.map(|v| v.partial_xi(alpha))
}

fn term_d_x(t: &SymbolTerm, alpha: &MultiIndex) -> SymbolTerm {
    t.map(|v| v.d_x(alpha))
}

fn term_times_scalar(t: &SymbolTerm, s: &SymbolScalar) -> SymbolTerm {
    t.map(|v| s.mul(v).canonical())
}

/// Every `α` with `D_x^α t` possibly nonzero.
fn x_support(t: &SymbolTerm) -> BTreeSet<MultiIndex> {
    let mut tops = BTreeSet::new();
    for (_, _, v) in t.entries() {
        tops.extend(v.x_exponents().cloned());
    }
    let mut out = BTreeSet::new();
    for e in tops {
        if !out.contains(&e) {
            out.extend(e.lower_set());
        }
    }
    out
}

fn inverse_factorial(alpha: &MultiIndex) -> Rational {
    from_biguint(mi_factorial(alpha)).recip()
}

/// Result of asking an expansion for its term of a given order.
#[derive(Debug)]
pub enum Lookup<'a> {
    Term(&'a SymbolTerm),
    Zero,
    Unknown,
}

/// `σ_k + σ_{k-1} + ⋯` stored from the leading order downwards.
///
/// With `truncation = Some(t)` the orders `k, …, t` are known and every
/// order below `t` is unknown; with `None` the listed terms are exact and
/// all lower orders vanish.
#[derive(Clone)]
pub struct SymbolExpansion {
    n: usize,
    rows: usize,
    cols: usize,
    leading: i32,
    terms: Vec<SymbolTerm>,
    truncation: Option<i32>,
}

impl SymbolExpansion {
    pub fn new(
        n: usize,
        leading: i32,
        terms: Vec<SymbolTerm>,
        truncation: Option<i32>,
    ) -> Result<Self> {
        let (rows, cols) = match terms.first() {
            Some(t) => (t.rows(), t.cols()),
            None => return Err(Error::InvalidArgument("an expansion needs a leading term".into())),
        };
        for (k, t) in terms.iter().enumerate() {
            if (t.rows(), t.cols()) != (rows, cols) {
                return Err(Error::DimensionMismatch("terms of different shapes".into()));
            }
            let order = leading - k as i32;
            for (_, _, v) in t.entries() {
                if v.dim() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "entry in dimension {} inside a dimension-{n} expansion",
                        v.dim()
                    )));
                }
                if v.degree() != order {
                    return Err(Error::WrongOrder {
                        expected: order,
                        found: v.degree(),
                    });
                }
            }
        }
        if let Some(t) = truncation {
            if leading - t + 1 != terms.len() as i32 {
                return Err(Error::InvalidArgument(format!(
                    "{} terms do not span orders {leading}..={t}",
                    terms.len()
                )));
            }
        }
        Ok(SymbolExpansion {
            n,
            rows,
            cols,
            leading,
            terms,
            truncation,
        })
    }

    /// `f·I` as an exact order-zero symbol.
    pub fn function(f: &Polynomial, size: usize) -> Self {
        let n = f.nvars();
        let mut t = SymbolTerm::new(size, size);
        let s = SymbolScalar::from_x_polynomial(f);
        if !s.is_zero() {
            for i in 0..size {
                t.insert(i, i, s.clone());
            }
        }
        SymbolExpansion {
            n,
            rows: size,
            cols: size,
            leading: 0,
            terms: vec![t],
            truncation: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn leading_order(&self) -> i32 {
        self.leading
    }

    pub fn truncation(&self) -> Option<i32> {
        self.truncation
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    /// Lowest order stored (known, possibly zero).
    pub fn lowest_stored(&self) -> i32 {
        self.leading - self.terms.len() as i32 + 1
    }

    pub fn term(&self, order: i32) -> Lookup<'_> {
        if order > self.leading {
            return Lookup::Zero;
        }
        let k = (self.leading - order) as usize;
        match self.terms.get(k) {
            Some(t) => Lookup::Term(t),
            None if self.truncation.is_some() => Lookup::Unknown,
            None => Lookup::Zero,
        }
    }

    fn known_term(&self, order: i32) -> Result<Option<&SymbolTerm>> {
        match self.term(order) {
            Lookup::Term(t) => Ok(Some(t)),
            Lookup::Zero => Ok(None),
            Lookup::Unknown => Err(Error::InsufficientDepth {
                needed: order,
                truncation: self.truncation.unwrap_or(order),
            }),
        }
    }

    /// Whether both expansions agree at every order where both are known.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if (self.n, self.rows, self.cols) != (other.n, other.rows, other.cols) {
            return false;
        }
        let top = self.leading.max(other.leading);
        let bottom = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => a.max(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => self.lowest_stored().min(other.lowest_stored()),
        };
        (bottom..=top).all(|order| match (self.term(order), other.term(order)) {
            (Lookup::Term(a), Lookup::Term(b)) => a.equals(b),
            (Lookup::Term(a), Lookup::Zero) | (Lookup::Zero, Lookup::Term(a)) => a.is_zero(),
            (Lookup::Zero, Lookup::Zero) => true,
            _ => true,
        })
    }

    /// Whether every known order vanishes, except `order 0` which must equal
    /// the identity.
    pub fn is_identity(&self) -> bool {
        let id = SymbolExpansion::function(&Polynomial::one(VarSpace::X, self.n), self.rows);
        self.rows == self.cols && self.agrees_with(&id)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, &Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, &int(-1))
    }

    fn combine(&self, other: &Self, c: &Rational) -> Result<Self> {
        if (self.n, self.rows, self.cols) != (other.n, other.rows, other.cols) {
            return Err(Error::DimensionMismatch("adding expansions of different shapes".into()));
        }
        let leading = self.leading.max(other.leading);
        let truncation = match (self.truncation, other.truncation) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let lowest = truncation
            .unwrap_or_else(|| self.lowest_stored().min(other.lowest_stored()));
        let mut terms = Vec::new();
        for order in (lowest..=leading).rev() {
            let mut t = SymbolTerm::new(self.rows, self.cols);
            if let Lookup::Term(a) = self.term(order) {
                t = t.add(a);
            }
            if let Lookup::Term(b) = other.term(order) {
                t = t.add(&b.scale(c));
            }
            terms.push(t);
        }
        Ok(SymbolExpansion {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            leading,
            terms,
            truncation,
        })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        out.terms = self.terms.iter().map(|t| t.scale(c)).collect();
        out
    }
}

impl fmt::Debug for SymbolExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "SymbolExpansion(n={}, {}x{}, leading={}, truncation={:?})",
            self.n, self.rows, self.cols, self.leading, self.truncation
        )?;
        for (k, t) in self.terms.iter().enumerate() {
            writeln!(f, "order {}: {t:?}", self.leading - k as i32)?;
        }
        Ok(())
    }
}

/// `σ(P₁P₂) = Σ_α (1/α!) ∂_ξ^α σ(P₁) · D_x^α σ(P₂)`, kept down to the lowest
/// order where both inputs are known.
pub fn compose(a: &SymbolExpansion, b: &SymbolExpansion) -> Result<SymbolExpansion> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!(
            "composing symbols in dimensions {} and {}",
            a.n, b.n
        )));
    }
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "composing {}x{} with {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (k1, k2) = (a.leading, b.leading);
    let truncation = match (a.truncation, b.truncation) {
        (Some(t1), Some(t2)) => Some((t1 + k2).max(k1 + t2)),
        (Some(t1), None) => Some(t1 + k2),
        (None, Some(t2)) => Some(k1 + t2),
        (None, None) => None,
    };
    let leading = k1 + k2;
    let mut acc: BTreeMap<i32, SymbolTerm> = BTreeMap::new();
    for (j, tb) in b.terms.iter().enumerate() {
        let ob = k2 - j as i32;
        let support = x_support(tb);
        for alpha in &support {
            let d_tb = term_d_x(tb, alpha);
            if d_tb.is_zero() {
                continue;
            }
            let weight = inverse_factorial(alpha);
            for (i, ta) in a.terms.iter().enumerate() {
                let order = k1 - i as i32 + ob - alpha.order() as i32;
                if truncation.is_some_and(|t| order < t) {
                    continue;
                }
                let product = term_partial_xi(ta, alpha).mul(&d_tb).scale(&weight);
                let slot = acc
                    .entry(order)
                    .or_insert_with(|| SymbolTerm::new(a.rows, b.cols));
                *slot = slot.add(&product);
            }
        }
    }
    let lowest = truncation.unwrap_or_else(|| {
        acc.iter()
            .find(|(_, t)| !t.is_zero())
            .map_or(leading, |(o, _)| *o)
            .min(leading)
    });
    let terms = (lowest..=leading)
        .rev()
        .map(|order| {
            acc.remove(&order)
                .map(|t| t.map(SymbolScalar::canonical))
                .unwrap_or_else(|| SymbolTerm::new(a.rows, b.cols))
        })
        .collect();
    Ok(SymbolExpansion {
        n: a.n,
        rows: a.rows,
        cols: b.cols,
        leading,
        terms,
        truncation,
    })
}

/// `σ_{-k}([S,f]) = Σ_{1≤|β|≤k} (1/β!) D_x^β f · ∂_ξ^β σ^S_{-(k-|β|)}` for an
/// order-zero `S` and a polynomial `f`.
pub fn commutator_with_function(s: &SymbolExpansion, f: &Polynomial) -> Result<SymbolExpansion> {
    if s.leading != 0 {
        return Err(Error::WrongOrder {
            expected: 0,
            found: s.leading,
        });
    }
    if f.nvars() != s.n {
        return Err(Error::DimensionMismatch("function and symbol dimensions differ".into()));
    }
    let truncation = s.truncation.map(|t| t - 1);
    let lowest = truncation
        .unwrap_or_else(|| s.lowest_stored() - f.total_degree().unwrap_or(0) as i32)
        .min(-1);
    let derivatives: Vec<(MultiIndex, SymbolScalar)> = f
        .derivative_support()
        .into_iter()
        .filter(|b| !b.is_zero())
        .map(|beta| {
            let dbf = SymbolScalar::from_x_polynomial(f)
                .d_x(&beta)
                .scale(&inverse_factorial(&beta));
            (beta, dbf)
        })
        .collect();
    let mut terms = Vec::new();
    for k in 1..=(-lowest) {
        let mut t = SymbolTerm::new(s.rows, s.cols);
        for (beta, dbf) in &derivatives {
            let b = beta.order() as i32;
            if b > k {
                continue;
            }
            if let Some(sj) = s.known_term(-(k - b))? {
                t = t.add(&term_times_scalar(&term_partial_xi(sj, beta), dbf));
            }
        }
        terms.push(t);
    }
    Ok(SymbolExpansion {
        n: s.n,
        rows: s.rows,
        cols: s.cols,
        leading: -1,
        terms,
        truncation,
    })
}

type XiKey = (usize, MultiIndex);
type MixedKey = (usize, MultiIndex, MultiIndex);

fn memo<K: std::hash::Hash + Eq, V>(
    map: &Mutex<HashMap<K, Arc<V>>>,
    key: K,
    make: impl FnOnce() -> V,
) -> Arc<V> {
    if let Some(v) = map.lock().expect("cache lock").get(&key) {
        return v.clone();
    }
    let v = Arc::new(make());
    map.lock().expect("cache lock").entry(key).or_insert(v).clone()
}

/// Evaluates the order `-n` part of `σ([S,f][S,h])` for one order-zero
/// symbol `S` and many pairs `(f, h)`, sharing the derivatives of `S` and
/// the traces of their products across calls and threads.
pub struct ProductEngine<'a> {
    s: &'a SymbolExpansion,
    supports: Vec<BTreeSet<MultiIndex>>,
    x_independent: bool,
    xi: Mutex<HashMap<XiKey, Arc<SymbolTerm>>>,
    mixed: Mutex<HashMap<MixedKey, Arc<SymbolTerm>>>,
    traces: Mutex<HashMap<(XiKey, MixedKey), Arc<SymbolScalar>>>,
}

impl<'a> ProductEngine<'a> {
    pub fn new(s: &'a SymbolExpansion) -> Result<Self> {
        if s.leading != 0 {
            return Err(Error::WrongOrder {
                expected: 0,
                found: s.leading,
            });
        }
        let supports: Vec<_> = s.terms.iter().map(x_support).collect();
        let x_independent = supports.iter().all(|sup| sup.iter().all(MultiIndex::is_zero));
        Ok(ProductEngine {
            s,
            supports,
            x_independent,
            xi: Mutex::default(),
            mixed: Mutex::default(),
            traces: Mutex::default(),
        })
    }

    fn left(&self, key: &XiKey) -> Arc<SymbolTerm> {
        memo(&self.xi, key.clone(), || term_partial_xi(&self.s.terms[key.0], &key.1))
    }

    fn right(&self, key: &MixedKey) -> Arc<SymbolTerm> {
        memo(&self.mixed, key.clone(), || {
            term_partial_xi(&term_d_x(&self.s.terms[key.0], &key.1), &key.2)
        })
    }

    fn trace_of(&self, left: &XiKey, right: &MixedKey) -> Arc<SymbolScalar> {
        memo(&self.traces, (left.clone(), right.clone()), || {
            let r = self.right(right);
            let l = self.left(left);
            l.trace_of_product(&r)
                .map(|t| t.canonical())
                .unwrap_or_else(|| SymbolScalar::zero(self.s.n, l_degree(&l, &r)))
        })
    }

    /// The order `-order` term of `σ([S,f][S,h])`:
    /// `Σ 1/(α′!α″!β!δ!) D^β f · D^{α″+δ} h · ∂^{α′+α″+β}σ_{-j} · ∂^δ D^{α′} σ_{-k}`
    /// over `|α′|+|α″|+|β|+|δ|+j+k = order` with `|β|, |δ| ≥ 1`.
    ///
    /// Requires `S` to be known down to order `-(order-2)`.
    pub fn product(&self, f: &Polynomial, h: &Polynomial, order: usize) -> Result<SymbolTerm> {
        check_product_inputs(self.s, f, h, order)?;
        let mut out = SymbolTerm::new(self.s.rows, self.s.cols);
        for sm in order_minus_n_summands(self.s, f, h, order, &self.supports) {
            let right = self.right(&sm.right);
            if right.is_zero() {
                continue;
            }
            let left = self.left(&sm.left);
            out = out.add(&term_times_scalar(&left.mul(&right), &sm.weight));
        }
        Ok(out.map(SymbolScalar::canonical))
    }

    /// Matrix trace of [`ProductEngine::product`].
    pub fn trace(&self, f: &Polynomial, h: &Polynomial, order: usize) -> Result<SymbolScalar> {
        check_product_inputs(self.s, f, h, order)?;
        let mut out = SymbolScalar::zero(self.s.n, -(order as i32));
        for sm in order_minus_n_summands(self.s, f, h, order, &self.supports) {
            let tr = self.trace_of(&sm.left, &sm.right);
            if !tr.is_zero() {
                out = out.add(&sm.weight.mul(&tr));
            }
        }
        Ok(out.canonical())
    }

    /// [`ProductEngine::trace`] evaluated at `x = 0`. When `S` does not
    /// depend on `x`, summands whose weight vanishes at the origin are
    /// skipped.
    pub fn trace_at_origin(
        &self,
        f: &Polynomial,
        h: &Polynomial,
        order: usize,
    ) -> Result<SymbolScalar> {
        if !self.x_independent {
            return Ok(self.trace(f, h, order)?.at_origin());
        }
        check_product_inputs(self.s, f, h, order)?;
        let mut out = SymbolScalar::zero(self.s.n, -(order as i32));
        for sm in order_minus_n_summands(self.s, f, h, order, &self.supports) {
            let weight = sm.weight.at_origin();
            if weight.is_zero() {
                continue;
            }
            let tr = self.trace_of(&sm.left, &sm.right);
            if !tr.is_zero() {
                out = out.add(&weight.mul(&tr));
            }
        }
        Ok(out.canonical())
    }
}

fn l_degree(l: &SymbolTerm, r: &SymbolTerm) -> i32 {
    let d = |t: &SymbolTerm| t.entries().next().map_or(0, |(_, _, v)| v.degree());
    d(l) + d(r)
}

/// One summand family of the order `-n` formula: scalar weight, the
/// indices `(j, ξ-derivative)` of the left factor and
/// `(k, x-derivative, ξ-derivative)` of the right factor.
struct ProductSummand {
    weight: SymbolScalar,
    left: XiKey,
    right: MixedKey,
}

fn order_minus_n_summands(
    s: &SymbolExpansion,
    f: &Polynomial,
    h: &Polynomial,
    order: usize,
    supports: &[BTreeSet<MultiIndex>],
) -> Vec<ProductSummand> {
    let n = s.n;
    let fs = SymbolScalar::from_x_polynomial(f);
    let hs = SymbolScalar::from_x_polynomial(h);
    let depth = s.terms.len();
    let mut out = Vec::new();
    for beta in f.derivative_support() {
        if beta.is_zero() || beta.order() as usize > order {
            continue;
        }
        let dbf = fs.d_x(&beta);
        for gamma in h.derivative_support() {
            if gamma.is_zero() || (beta.order() + gamma.order()) as usize > order {
                continue;
            }
            let dgh = hs.d_x(&gamma);
            let base = dbf.mul(&dgh);
            if base.is_zero() {
                continue;
            }
            let rest = order - (beta.order() + gamma.order()) as usize;
            for delta in gamma.lower_set() {
                if delta.is_zero() {
                    continue;
                }
                let alpha2 = gamma.checked_sub(&delta).expect("lower set");
                let outer = inverse_factorial(&beta)
                    * inverse_factorial(&delta)
                    * inverse_factorial(&alpha2);
                for j in 0..=rest.min(depth.saturating_sub(1)) {
                    for k in 0..=(rest - j).min(depth.saturating_sub(1)) {
                        let a1 = (rest - j - k) as u32;
                        for alpha1 in MultiIndex::all_of_order(n, a1) {
                            if !supports[k].contains(&alpha1) {
                                continue;
                            }
                            let left = alpha1.add(&alpha2).add(&beta);
                            out.push(ProductSummand {
                                weight: base.scale(&(&outer * inverse_factorial(&alpha1))),
                                left: (j, left),
                                right: (k, alpha1.clone(), delta.clone()),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_product_inputs(
    s: &SymbolExpansion,
    f: &Polynomial,
    h: &Polynomial,
    order: usize,
) -> Result<()> {
    if s.leading != 0 {
        return Err(Error::WrongOrder {
            expected: 0,
            found: s.leading,
        });
    }
    if f.nvars() != s.n || h.nvars() != s.n {
        return Err(Error::DimensionMismatch("function and symbol dimensions differ".into()));
    }
    let needed = -(order as i32 - 2).max(0);
    if let Some(t) = s.truncation {
        if t > needed {
            return Err(Error::InsufficientDepth {
                needed,
                truncation: t,
            });
        }
    }
    Ok(())
}

/// The order `-order` term of `σ([S,f][S,h])`; see [`ProductEngine::product`].
pub fn sigma_minus_n_product(
    s: &SymbolExpansion,
    f: &Polynomial,
    h: &Polynomial,
    order: usize,
) -> Result<SymbolTerm> {
    ProductEngine::new(s)?.product(f, h, order)
}

/// Matrix trace of [`sigma_minus_n_product`], computed without forming the
/// matrix product.
pub fn sigma_minus_n_trace(
    s: &SymbolExpansion,
    f: &Polynomial,
    h: &Polynomial,
    order: usize,
) -> Result<SymbolScalar> {
    ProductEngine::new(s)?.trace(f, h, order)
}

/// Inverts a matrix of `x`-independent real symbols by exact Gaussian
/// elimination, pivoting only on entries whose inverse is again of the
/// form `p/|ξ|^{2k}`.
pub fn invert_leading(p: &SymbolTerm) -> Result<SymbolTerm> {
    let size = p.rows();
    if p.cols() != size {
        return Err(Error::DimensionMismatch("inverting a non-square symbol".into()));
    }
    let n = match p.entries().next() {
        Some((_, _, v)) => v.dim(),
        None => return Err(Error::NonInvertible),
    };
    let mut a: Vec<Vec<Option<HomogeneousRational>>> = vec![vec![None; size]; size];
    for (i, j, v) in p.entries() {
        a[i][j] = Some(v.as_constant_hr().ok_or(Error::NonInvertible)?);
    }
    let degree = p.entries().next().map(|(_, _, v)| v.degree()).unwrap_or(0);
    let one = HomogeneousRational::constant(n, Rational::one());
    let mut inv: Vec<Vec<Option<HomogeneousRational>>> = (0..size)
        .map(|i| (0..size).map(|j| (i == j).then(|| one.clone())).collect())
        .collect();
    let axpy = |row: &mut Vec<Option<HomogeneousRational>>,
                pivot: &[Option<HomogeneousRational>],
                factor: &HomogeneousRational| {
        for (slot, pv) in row.iter_mut().zip(pivot) {
            let Some(pv) = pv else { continue };
            let delta = factor.mul(pv).neg();
            *slot = match slot.take() {
                Some(old) => {
                    let s = old.add(&delta).canonical();
                    (!s.is_zero()).then_some(s)
                }
                None => Some(delta.canonical()),
            };
        }
    };
    for col in 0..size {
        let pivot_row = (col..size)
            .find(|&r| a[r][col].as_ref().and_then(|v| v.inverse()).is_some())
            .ok_or(Error::NonInvertible)?;
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pinv = a[col][col].as_ref().and_then(|v| v.inverse()).expect("pivot");
        for slot in a[col].iter_mut().chain(inv[col].iter_mut()) {
            if let Some(v) = slot.take() {
                *slot = Some(v.mul(&pinv).canonical());
            }
        }
        let (pivot_a, pivot_inv) = (a[col].clone(), inv[col].clone());
        for r in 0..size {
            if r == col {
                continue;
            }
            if let Some(factor) = a[r][col].clone() {
                axpy(&mut a[r], &pivot_a, &factor);
                axpy(&mut inv[r], &pivot_inv, &factor);
            }
        }
    }
    let mut out = SymbolTerm::new(size, size);
    for (i, row) in inv.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            if let Some(v) = v {
                debug_assert_eq!(v.degree(), -degree);
                out.insert(i, j, SymbolScalar::from_hr(v));
            }
        }
    }
    Ok(out)
}

fn check_order(t: &SymbolTerm, order: i32) -> Result<()> {
    for (_, _, v) in t.entries() {
        if v.degree() != order {
            return Err(Error::WrongOrder {
                expected: order,
                found: v.degree(),
            });
        }
    }
    Ok(())
}

/// Second-order operator symbol `p₂ + p₁ + p₀` as an exact expansion.
pub fn second_order_expansion(
    n: usize,
    p2: &SymbolTerm,
    p1: &SymbolTerm,
    p0: &SymbolTerm,
) -> Result<SymbolExpansion> {
    check_order(p2, 2)?;
    check_order(p1, 1)?;
    check_order(p0, 0)?;
    SymbolExpansion::new(n, 2, vec![p2.clone(), p1.clone(), p0.clone()], None)
}

/// Right parametrix of `p₂ + p₁ + p₀`: `r₋₂ = p₂⁻¹` and, for `m ≥ 3`,
/// `r₋ₘ = -p₂⁻¹ Σ (1/α!) ∂_ξ^α p_j · D_x^α r₋ₘ′` over `j ∈ {0,1,2}`,
/// `2 ≤ m′ < m` and `|α| = j + m - 2 - m′`.
///
/// Returns `r₋₂, …, r₋₍depth+2₎`; composing the operator with the result is
/// then the identity down to order `-depth`.
pub fn delta_inverse_symbols(
    n: usize,
    p2: &SymbolTerm,
    p1: &SymbolTerm,
    p0: &SymbolTerm,
    depth: usize,
) -> Result<SymbolExpansion> {
    let p = second_order_expansion(n, p2, p1, p0)?;
    let p2_inv = invert_leading(p2)?;
    let size = p2.rows();
    let parts = [p2, p1, p0];
    let mut r: Vec<SymbolTerm> = vec![p2_inv.clone()];
    let mut supports = vec![x_support(&p2_inv)];
    for m in 3..=(depth + 2) {
        let mut sum = SymbolTerm::new(size, size);
        for m_prev in 2..m {
            let rm = &r[m_prev - 2];
            for (offset, pj) in parts.iter().enumerate() {
                let j = 2 - offset;
                let a = j + m - 2;
                if a < m_prev {
                    continue;
                }
                let a = (a - m_prev) as u32;
                for alpha in MultiIndex::all_of_order(n, a) {
                    if !supports[m_prev - 2].contains(&alpha) {
                        continue;
                    }
                    let d_r = term_d_x(rm, &alpha);
                    if d_r.is_zero() {
                        continue;
                    }
                    let lhs = term_partial_xi(pj, &alpha);
                    sum = sum.add(&lhs.mul(&d_r).scale(&inverse_factorial(&alpha)));
                }
            }
        }
        let next = p2_inv.mul(&sum).scale(&int(-1)).map(SymbolScalar::canonical);
        supports.push(x_support(&next));
        r.push(next);
    }
    debug_assert_eq!(p.rows(), size);
    SymbolExpansion::new(n, -2, r, Some(-(depth as i32 + 2)))
}

/// Symbol of `QΔ⁻¹` for `Q = q₂ + q₁ + q₀`, known down to order `-depth`.
#[allow(clippy::too_many_arguments)]
pub fn f_symbols(
    n: usize,
    q: [&SymbolTerm; 3],
    p: [&SymbolTerm; 3],
    depth: usize,
) -> Result<SymbolExpansion> {
    let qe = second_order_expansion(n, q[0], q[1], q[2])?;
    let r = delta_inverse_symbols(n, p[0], p[1], p[2], depth)?;
    compose(&qe, &r)
}

/// `σ(d) = iε(ξ)` on `m`-forms.
pub fn flat_exterior_derivative(n: usize, m: usize) -> Result<SymbolExpansion> {
    let e = epsilon_polynomial(n, m, VarSpace::Xi, n, 0)?;
    let t = e.map(|v| SymbolScalar::term(MultiIndex::zeros(n), 1, HomogeneousRational::new(v.clone(), 0)));
    SymbolExpansion::new(n, 1, vec![t], None)
}

/// `σ(δ) = -iι(ξ)` on `m`-forms.
pub fn flat_codifferential(n: usize, m: usize) -> Result<SymbolExpansion> {
    let i = iota_polynomial(n, m, VarSpace::Xi, n, 0)?;
    let t = i.map(|v| {
        SymbolScalar::term(MultiIndex::zeros(n), 1, HomogeneousRational::new(v.neg(), 0))
    });
    SymbolExpansion::new(n, 1, vec![t], None)
}

/// `σ(dδ)` and `σ(δd)` on `m`-forms, each `None` where it is zero.
fn flat_second_order_parts(
    n: usize,
    m: usize,
) -> Result<(Option<SymbolExpansion>, Option<SymbolExpansion>)> {
    if m > n {
        return Err(Error::DegreeOutOfRange { n, m });
    }
    let d_delta = if m > 0 {
        Some(compose(&flat_exterior_derivative(n, m - 1)?, &flat_codifferential(n, m)?)?)
    } else {
        None
    };
    let delta_d = if m < n {
        Some(compose(&flat_codifferential(n, m + 1)?, &flat_exterior_derivative(n, m)?)?)
    } else {
        None
    };
    Ok((d_delta, delta_d))
}

fn combine_parts(
    n: usize,
    m: usize,
    parts: (Option<SymbolExpansion>, Option<SymbolExpansion>),
    sign: i64,
) -> Result<SymbolExpansion> {
    match parts {
        (Some(a), Some(b)) => a.combine(&b, &int(sign)),
        (Some(a), None) => Ok(a),
        (None, Some(b)) => Ok(b.scale(&int(sign))),
        (None, None) => Err(Error::DegreeOutOfRange { n, m }),
    }
}

/// `σ(dδ + δd)` on `m`-forms in flat space.
pub fn flat_laplacian(n: usize, m: usize) -> Result<SymbolExpansion> {
    combine_parts(n, m, flat_second_order_parts(n, m)?, 1)
}

/// `σ(dδ - δd)` on `m`-forms in flat space.
pub fn flat_sign_numerator(n: usize, m: usize) -> Result<SymbolExpansion> {
    combine_parts(n, m, flat_second_order_parts(n, m)?, -1)
}

/// The stored term of the given order, or zero when it is absent.
pub fn order_term(e: &SymbolExpansion, order: i32) -> SymbolTerm {
    match e.term(order) {
        Lookup::Term(t) => t.clone(),
        _ => SymbolTerm::new(e.rows(), e.cols()),
    }
}

/// Full symbol of the flat sign operator on `m`-forms, known down to order
/// `-depth`.
pub fn flat_sign_symbol(n: usize, m: usize, depth: usize) -> Result<SymbolExpansion> {
    let q = flat_sign_numerator(n, m)?;
    let p = flat_laplacian(n, m)?;
    let (q2, q1, q0) = (order_term(&q, 2), order_term(&q, 1), order_term(&q, 0));
    let (p2, p1, p0) = (order_term(&p, 2), order_term(&p, 1), order_term(&p, 0));
    f_symbols(n, [&q2, &q1, &q0], [&p2, &p1, &p0], depth)
}

/// Residue density `∫_{|ξ|=1} tr σ₋ₙ(x,ξ)`, split into real and imaginary
/// `x`-polynomials, each multiplied by `π^pi_power`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Density {
    pub re: Polynomial,
    pub im: Polynomial,
    pub pi_power: u32,
}

impl Density {
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Integrates an order `-n` scalar symbol over the unit sphere.
pub fn integrate_scalar(s: &SymbolScalar, convention: SphereConvention) -> Density {
    let n = s.dim();
    let factor = convention_factor(n, convention);
    let mut re = Polynomial::zero(VarSpace::X, n);
    let mut im = Polynomial::zero(VarSpace::X, n);
    for (e, phase, v) in s.parts() {
        let c = mass_one_integral(v) * &factor.coeff;
        if phase == 0 {
            re.add_term(e.clone(), c);
        } else {
            im.add_term(e.clone(), c);
        }
    }
    Density {
        re,
        im,
        pi_power: factor.pi_power,
    }
}

pub fn wres_density(p: &SymbolExpansion, convention: SphereConvention) -> Result<Density> {
    if p.rows != p.cols {
        return Err(Error::DimensionMismatch("residue of a non-square symbol".into()));
    }
    let n = p.n;
    let scalar = match p.known_term(-(n as i32))? {
        Some(t) => t
            .trace()
            .unwrap_or_else(|| SymbolScalar::zero(n, -(n as i32))),
        None => SymbolScalar::zero(n, -(n as i32)),
    };
    Ok(integrate_scalar(&scalar, convention))
}

/// Seeded random symbols for exercising the calculus on inputs that do not
/// come from a metric.
pub mod synthetic {
    use rand::Rng;

    use super::*;

    /// Random homogeneous rational function of net degree `degree` with pole
    /// at most `max_pole`.
    pub fn random_hr<R: Rng>(rng: &mut R, n: usize, degree: i32, max_pole: u32) -> HomogeneousRational {
        let min_pole = if degree < 0 { ((-degree + 1) / 2) as u32 } else { 0 };
        let pole = rng.gen_range(min_pole..=max_pole.max(min_pole));
        let num_degree = (degree + 2 * pole as i32) as u32;
        let monomials = MultiIndex::all_of_order(n, num_degree);
        let mut acc = HrAccumulator::new(n, degree);
        for _ in 0..rng.gen_range(1..=3) {
            let e = monomials[rng.gen_range(0..monomials.len())].clone();
            let c = int(rng.gen_range(-3..=3));
            acc.add_monomial(e, pole, c);
        }
        acc.finish()
    }

    pub fn random_x_exponent<R: Rng>(rng: &mut R, n: usize, max_degree: u32) -> MultiIndex {
        let d = rng.gen_range(0..=max_degree);
        let all = MultiIndex::all_of_order(n, d);
        all[rng.gen_range(0..all.len())].clone()
    }

    /// Random entry of the given order with `x`-degree at most `max_x`.
    pub fn random_scalar<R: Rng>(rng: &mut R, n: usize, order: i32, max_x: u32) -> SymbolScalar {
        let mut out = SymbolScalar::zero(n, order);
        for _ in 0..rng.gen_range(1..=2) {
            let e = random_x_exponent(rng, n, max_x);
            let phase = rng.gen_range(0..2);
            out = out.add(&SymbolScalar::term(e, phase, random_hr(rng, n, order, 1)));
        }
        out
    }

    pub fn random_term<R: Rng>(
        rng: &mut R,
        n: usize,
        size: usize,
        order: i32,
        max_x: u32,
    ) -> SymbolTerm {
        let mut t = SymbolTerm::new(size, size);
        for i in 0..size {
            for j in 0..size {
                if rng.gen_bool(0.7) {
                    t.insert(i, j, random_scalar(rng, n, order, max_x));
                }
            }
        }
        t
    }

    /// Truncated expansion with `depth + 1` random terms from `leading` down.
    pub fn random_expansion<R: Rng>(
        rng: &mut R,
        n: usize,
        size: usize,
        leading: i32,
        depth: usize,
        max_x: u32,
    ) -> SymbolExpansion {
        let terms = (0..=depth)
            .map(|k| random_term(rng, n, size, leading - k as i32, max_x))
            .collect();
        SymbolExpansion::new(n, leading, terms, Some(leading - depth as i32))
            .expect("well-formed random expansion")
    }

    /// Real, `x`-independent invertible leading part: `|ξ|²` times an
    /// invertible integer matrix that is upper triangular with unit diagonal.
    pub fn random_elliptic_leading<R: Rng>(rng: &mut R, n: usize, size: usize) -> SymbolTerm {
        let norm = HomogeneousRational::new(Polynomial::norm_squared(VarSpace::Xi, n, 0, n), 0);
        let mut t = SymbolTerm::new(size, size);
        for i in 0..size {
            t.insert(i, i, SymbolScalar::from_hr(norm.clone()));
            for j in i + 1..size {
                let c = rng.gen_range(-2..=2);
                if c != 0 {
                    t.insert(i, j, SymbolScalar::from_hr(norm.scale(&int(c))));
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::synthetic::*;
    use super::*;
    use crate::exterior::leading_symbol_f;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xpoly(n: usize, terms: &[(&[u8], i64)]) -> Polynomial {
        Polynomial::from_terms(
            VarSpace::X,
            n,
            terms.iter().map(|(e, c)| (MultiIndex::from_slice(e), int(*c))),
        )
    }

    fn hr_term(t: &SparseMatrix<HomogeneousRational>) -> SymbolTerm {
        t.map(|v| SymbolScalar::from_hr(v.clone()))
    }

    fn flat_f(n: usize, m: usize) -> SymbolExpansion {
        SymbolExpansion::new(n, 0, vec![hr_term(&leading_symbol_f(n, m).unwrap())], None).unwrap()
    }

    #[test]
    fn phase_bookkeeping() {
        let n = 1;
        let x = xpoly(n, &[(&[1], 1)]);
        let s = SymbolScalar::from_x_polynomial(&x);
        // D_x x = -i
        let d = s.d_x(&MultiIndex::unit(1, 0));
        let expected = SymbolScalar::term(MultiIndex::zeros(1), 1, HomogeneousRational::constant(1, int(-1)));
        assert_eq!(d, expected);
        // (-i)(-i) = -1
        assert_eq!(d.mul(&d), SymbolScalar::from_hr(HomogeneousRational::constant(1, int(-1))));
    }

    #[test]
    fn function_times_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_expansion(&mut rng, 2, 2, 0, 3, 2);
        let f = xpoly(2, &[(&[1, 0], 2), (&[0, 2], -1)]);
        let lhs = compose(&SymbolExpansion::function(&f, 2), &t).unwrap();
        let fs = SymbolScalar::from_x_polynomial(&f);
        let terms = t.terms().iter().map(|m| term_times_scalar(m, &fs)).collect();
        let rhs = SymbolExpansion::new(2, 0, terms, t.truncation()).unwrap();
        assert!(lhs.agrees_with(&rhs));
        assert_eq!(lhs.truncation(), Some(-3));
    }

    #[test]
    fn flat_inverse_composition() {
        let n = 2;
        let lap = flat_laplacian(n, 0).unwrap();
        let inv = SymbolExpansion::new(
            n,
            -2,
            vec![hr_term(&SparseMatrix::diagonal(1, &HomogeneousRational::inverse_norm_power(n, 1)))],
            None,
        )
        .unwrap();
        let c = compose(&lap, &inv).unwrap();
        assert!(c.is_identity());
        assert_eq!(c.truncation(), None);
        assert_eq!(c.terms().len(), 1);
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_expansion(&mut rng, 2, 2, 0, 3, 2);
        let b = random_expansion(&mut rng, 2, 2, 0, 3, 2);
        let c = random_expansion(&mut rng, 2, 2, 0, 3, 2);
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        assert_eq!(left.truncation(), Some(-3));
        assert!(left.agrees_with(&right));
        assert!(!left.terms()[3].is_zero());
    }

    #[test]
    fn commutator_of_constant_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_expansion(&mut rng, 2, 2, 0, 3, 2);
        let c = commutator_with_function(&s, &xpoly(2, &[(&[0, 0], 5)])).unwrap();
        assert!(c.terms().iter().all(|t| t.is_zero()));
    }

    #[test]
    fn commutator_with_coordinate() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = random_expansion(&mut rng, n, 2, 0, 3, 0);
        s.terms.iter_mut().for_each(|t| *t = t.map(SymbolScalar::at_origin));
        let c = commutator_with_function(&s, &xpoly(n, &[(&[1, 0], 1)])).unwrap();
        let e1 = MultiIndex::unit(n, 0);
        for k in 1..=4 {
            let Lookup::Term(t) = c.term(-k) else { panic!("missing order") };
            let Lookup::Term(src) = s.term(-(k - 1)) else { panic!("missing order") };
            let minus_i = SymbolScalar::term(MultiIndex::zeros(n), 1, HomogeneousRational::constant(n, int(-1)));
            let expected = term_times_scalar(&term_partial_xi(src, &e1), &minus_i);
            assert!(t.equals(&expected));
        }
    }

    #[test]
    fn commutator_matches_composition_difference() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_expansion(&mut rng, n, 2, 0, 3, 2);
        let f = xpoly(n, &[(&[1, 1], 1)]);
        let fe = SymbolExpansion::function(&f, 2);
        let diff = compose(&s, &fe).unwrap().sub(&compose(&fe, &s).unwrap()).unwrap();
        let c = commutator_with_function(&s, &f).unwrap();
        assert!(c.agrees_with(&diff));
        assert_eq!(c.truncation(), Some(-4));
    }

    #[test]
    fn product_vanishes_for_constant_function() {
        let s = flat_f(2, 1);
        let one = xpoly(2, &[(&[0, 0], 1)]);
        let x = xpoly(2, &[(&[1, 0], 1)]);
        assert!(sigma_minus_n_product(&s, &one, &x, 2).unwrap().is_zero());
        assert!(sigma_minus_n_product(&s, &x, &one, 2).unwrap().is_zero());
    }

    fn product_matches_composition(s: &SymbolExpansion, f: &Polynomial, h: &Polynomial, order: usize) {
        let cf = commutator_with_function(s, f).unwrap();
        let ch = commutator_with_function(s, h).unwrap();
        let full = compose(&cf, &ch).unwrap();
        let Lookup::Term(expected) = full.term(-(order as i32)) else {
            panic!("order not available");
        };
        let got = sigma_minus_n_product(s, f, h, order).unwrap();
        assert!(got.equals(expected));
        let tr = sigma_minus_n_trace(s, f, h, order).unwrap();
        let expected_tr = expected.trace().unwrap_or_else(|| SymbolScalar::zero(s.dim(), -(order as i32)));
        assert_eq!(tr, expected_tr);
    }

    #[test]
    fn product_formula_flat() {
        let n = 2;
        product_matches_composition(
            &flat_f(n, 1),
            &xpoly(n, &[(&[1, 0], 1)]),
            &xpoly(n, &[(&[0, 1], 1)]),
            2,
        );
        product_matches_composition(
            &flat_f(n, 1),
            &xpoly(n, &[(&[2, 1], 1), (&[0, 1], 3)]),
            &xpoly(n, &[(&[1, 1], -2)]),
            2,
        );
        let n = 4;
        product_matches_composition(
            &flat_f(n, 2),
            &xpoly(n, &[(&[2, 0, 0, 0], 1), (&[0, 1, 0, 0], 1)]),
            &xpoly(n, &[(&[1, 0, 1, 0], 1), (&[0, 0, 0, 1], 1)]),
            4,
        );
    }

    #[test]
    fn product_formula_synthetic() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let s = random_expansion(&mut rng, n, 2, 0, 2, 2);
        let f = xpoly(n, &[(&[1, 1], 1), (&[2, 0], 2)]);
        let h = xpoly(n, &[(&[0, 2], 1), (&[1, 0], -1)]);
        product_matches_composition(&s, &f, &h, 2);
        product_matches_composition(&s, &f, &h, 3);
    }

    #[test]
    fn product_depth_requirement() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_expansion(&mut rng, n, 1, 0, 1, 1);
        let f = xpoly(n, &[(&[1, 0, 0, 0], 1)]);
        let err = sigma_minus_n_product(&s, &f, &f, 4).unwrap_err();
        assert_eq!(err, Error::InsufficientDepth { needed: -2, truncation: -1 });
    }

    #[test]
    fn flat_delta_inverse_is_leading_only() {
        let n = 2;
        let p = flat_laplacian(n, 1).unwrap();
        let r = delta_inverse_symbols(n, &order_term(&p, 2), &order_term(&p, 1), &order_term(&p, 0), 4)
            .unwrap();
        let expected = SparseMatrix::diagonal(2, &HomogeneousRational::inverse_norm_power(n, 1));
        let Lookup::Term(r2) = r.term(-2) else { panic!() };
        assert!(r2.equals(&hr_term(&expected)));
        for k in 3..=6 {
            let Lookup::Term(t) = r.term(-k) else { panic!() };
            assert!(t.is_zero());
        }
    }

    #[test]
    fn synthetic_scalar_parametrix() {
        // p = ξ² + (x²+1)·iξ + x, a scalar operator on the line
        let n = 1;
        let xi = MultiIndex::unit(1, 0);
        let p2 = SymbolTerm::diagonal(1, &SymbolScalar::from_hr(HomogeneousRational::xi_monomial(xi.clone().with(0, 2), int(1))));
        let lin = HomogeneousRational::xi_monomial(xi, int(1));
        let p1s = SymbolScalar::term(MultiIndex::from_slice(&[2]), 1, lin.clone())
            .add(&SymbolScalar::term(MultiIndex::zeros(1), 1, lin));
        let p1 = SymbolTerm::diagonal(1, &p1s);
        let p0 = SymbolTerm::diagonal(1, &SymbolScalar::from_x_polynomial(&xpoly(1, &[(&[1], 1)])));
        let r = delta_inverse_symbols(n, &p2, &p1, &p0, 4).unwrap();
        let p = second_order_expansion(n, &p2, &p1, &p0).unwrap();
        let c = compose(&p, &r).unwrap();
        assert_eq!(c.truncation(), Some(-4));
        assert!(c.is_identity());
        assert!(r.terms().iter().skip(1).any(|t| !t.is_zero()));
    }

    #[test]
    fn synthetic_matrix_parametrix() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p2 = random_elliptic_leading(&mut rng, n, 2);
        let p1 = random_term(&mut rng, n, 2, 1, 1);
        let p0 = random_term(&mut rng, n, 2, 0, 1);
        let r = delta_inverse_symbols(n, &p2, &p1, &p0, 4).unwrap();
        let p = second_order_expansion(n, &p2, &p1, &p0).unwrap();
        let c = compose(&p, &r).unwrap();
        assert_eq!(c.truncation(), Some(-4));
        assert!(c.is_identity());
    }

    #[test]
    fn non_invertible_leading_part() {
        let mut p2 = SymbolTerm::new(2, 2);
        let sq = SymbolScalar::from_hr(HomogeneousRational::xi_monomial(MultiIndex::from_slice(&[2]), int(1)));
        p2.insert(0, 0, sq.clone());
        p2.insert(0, 1, sq.clone());
        p2.insert(1, 0, sq.clone());
        p2.insert(1, 1, sq);
        assert_eq!(invert_leading(&p2).unwrap_err(), Error::NonInvertible);
    }

    #[test]
    fn flat_sign_symbol_has_no_lower_terms() {
        for (n, m) in [(2usize, 1usize), (4, 2)] {
            let f = flat_sign_symbol(n, m, 3).unwrap();
            let Lookup::Term(t0) = f.term(0) else { panic!() };
            assert!(t0.equals(&hr_term(&leading_symbol_f(n, m).unwrap())));
            for k in 1..=3 {
                let Lookup::Term(t) = f.term(-k) else { panic!() };
                assert!(t.is_zero(), "n={n} m={m} order {}", -k);
            }
        }
    }

    #[test]
    fn synthetic_sign_symbol_leading_term() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let p2 = random_elliptic_leading(&mut rng, n, 2);
        let p1 = random_term(&mut rng, n, 2, 1, 1);
        let p0 = random_term(&mut rng, n, 2, 0, 1);
        let q2 = random_term(&mut rng, n, 2, 2, 0);
        let q1 = random_term(&mut rng, n, 2, 1, 1);
        let q0 = random_term(&mut rng, n, 2, 0, 1);
        let f = f_symbols(n, [&q2, &q1, &q0], [&p2, &p1, &p0], 2).unwrap();
        let Lookup::Term(t0) = f.term(0) else { panic!() };
        assert!(t0.equals(&q2.mul(&invert_leading(&p2).unwrap())));
    }

    #[test]
    fn density_basics() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let low = random_expansion(&mut rng, n, 2, -3, 1, 1);
        assert!(wres_density(&low, SphereConvention::MassOne).unwrap().is_zero());

        let p = random_expansion(&mut rng, n, 2, 0, 2, 1);
        let f = xpoly(n, &[(&[1, 0], 1), (&[1, 1], 2)]);
        let fp = compose(&SymbolExpansion::function(&f, 2), &p).unwrap();
        let d = wres_density(&p, SphereConvention::MassOne).unwrap();
        let fd = wres_density(&fp, SphereConvention::MassOne).unwrap();
        assert_eq!(fd.re, d.re.mul(&f.clone().with_space(VarSpace::X)));
        assert_eq!(fd.im, d.im.mul(&f));

        let shallow = random_expansion(&mut rng, n, 2, 0, 1, 1);
        assert!(matches!(
            wres_density(&shallow, SphereConvention::MassOne),
            Err(Error::InsufficientDepth { .. })
        ));
    }

    #[test]
    fn density_is_linear() {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_expansion(&mut rng, n, 2, 0, 2, 1);
        let b = random_expansion(&mut rng, n, 2, 0, 2, 1);
        let sum = a.add(&b.scale(&int(3))).unwrap();
        let da = wres_density(&a, SphereConvention::MassOne).unwrap();
        let db = wres_density(&b, SphereConvention::MassOne).unwrap();
        let ds = wres_density(&sum, SphereConvention::MassOne).unwrap();
        assert_eq!(ds.re, da.re.add(&db.re.scale(&int(3))));
        assert_eq!(ds.im, da.im.add(&db.im.scale(&int(3))));
    }
}
