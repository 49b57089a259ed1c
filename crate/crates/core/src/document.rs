//! Serialized coefficient tables and their text and LaTeX renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bilinear::{BilinearFormCoefficients, Partials};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::rational::{parse_parts, Rational};
use crate::sphere::SphereConvention;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub num: String,
    pub den: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub engine_version: String,
    pub pipeline: String,
    /// Every coefficient is multiplied by `π^pi_power`.
    #[serde(default)]
    pub pi_power: u32,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// The machine-readable coefficient table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub dim: usize,
    pub convention: String,
    pub partials: String,
    pub entries: Vec<DocumentEntry>,
    pub meta: DocumentMeta,
}

impl OutputDocument {
    pub fn from_coefficients(form: &BilinearFormCoefficients, pipeline: &str) -> Self {
        let entries = form
            .entries()
            .map(|(a, b, c)| DocumentEntry {
                a: a.exponents().iter().map(|&e| e as u32).collect(),
                b: b.exponents().iter().map(|&e| e as u32).collect(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect();
        OutputDocument {
            dim: form.n,
            convention: form.convention.name().to_string(),
            partials: form.partials.name().to_string(),
            entries,
            meta: DocumentMeta {
                engine_version: ENGINE_VERSION.to_string(),
                pipeline: pipeline.to_string(),
                pi_power: form.pi_power,
                extra: BTreeMap::new(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rebuilds the coefficient map, validating every entry.
    pub fn to_coefficients(&self) -> Result<BilinearFormCoefficients> {
        let convention: SphereConvention = self.convention.parse()?;
        let partials: Partials = self.partials.parse()?;
        let mut out = BilinearFormCoefficients::new(self.dim, partials, convention, self.meta.pi_power);
        for entry in &self.entries {
            let a = self.multi_index(&entry.a)?;
            let b = self.multi_index(&entry.b)?;
            out.insert(a, b, parse_parts(&entry.num, &entry.den)?);
        }
        Ok(out)
    }

    fn multi_index(&self, exps: &[u32]) -> Result<MultiIndex> {
        if exps.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "multi-index of length {} in dimension {}",
                exps.len(),
                self.dim
            )));
        }
        let small: Option<Vec<u8>> = exps.iter().map(|&e| u8::try_from(e).ok()).collect();
        small
            .map(|v| MultiIndex::from_slice(&v))
            .ok_or_else(|| Error::Parse("multi-index exponent out of range".into()))
    }
}

/// Parses a JSON document all the way to a coefficient map.
pub fn parse_document(text: &str) -> Result<BilinearFormCoefficients> {
    OutputDocument::from_json(text)?.to_coefficients()
}

fn fraction(c: &Rational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// One row per coefficient: `a  b  num/den`.
pub fn render_text(form: &BilinearFormCoefficients) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# dim {}  convention {}  partials {}  factor pi^{}",
        form.n, form.convention, form.partials, form.pi_power
    );
    let _ = writeln!(out, "# {} nonzero coefficients", form.len());
    for (a, b, c) in form.entries() {
        let _ = writeln!(out, "{:?}\t{:?}\t{}", a.exponents(), b.exponents(), fraction(c));
    }
    out
}

/// Index-contraction pattern: `cross` indices shared by both factors,
/// `left`/`right` repeated pairs inside `f`/`h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Contraction {
    pub left: usize,
    pub right: usize,
    pub cross: usize,
}

impl Contraction {
    fn orders(self) -> (usize, usize) {
        (2 * self.left + self.cross, 2 * self.right + self.cross)
    }

    /// All patterns with `order` derivatives in total and at least one on
    /// each factor.
    pub fn all(order: usize) -> Vec<Contraction> {
        let mut out = Vec::new();
        if order % 2 == 1 {
            return out;
        }
        for cross in 0..=order / 2 {
            let pairs = order / 2 - cross;
            for left in 0..=pairs {
                let c = Contraction { left, right: pairs - left, cross };
                let (p, q) = c.orders();
                if p >= 1 && q >= 1 {
                    out.push(c);
                }
            }
        }
        out.sort_by_key(|c| (std::cmp::Reverse(c.orders().0), c.cross));
        out
    }

    /// The coefficient map of `Σ f_{I} h_{J}` summed over repeated indices.
    pub fn coefficients(self, n: usize) -> BTreeMap<(MultiIndex, MultiIndex), Rational> {
        let slots = self.cross + self.left + self.right;
        let mut out: BTreeMap<_, Rational> = BTreeMap::new();
        let mut idx = vec![0usize; slots];
        loop {
            let mut a = vec![0u8; n];
            let mut b = vec![0u8; n];
            for (s, &i) in idx.iter().enumerate() {
                if s < self.cross {
                    a[i] += 1;
                    b[i] += 1;
                } else if s < self.cross + self.left {
                    a[i] += 2;
                } else {
                    b[i] += 2;
                }
            }
            *out.entry((MultiIndex::from_slice(&a), MultiIndex::from_slice(&b)))
                .or_insert_with(Rational::zero) += Rational::one();
            let mut pos = 0;
            loop {
                if pos == slots {
                    return out;
                }
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    fn subscripts(self) -> (String, String) {
        const LETTERS: &[u8] = b"ijklmpqrstuvw";
        let letter = |k: usize| (LETTERS[k % LETTERS.len()] as char).to_string();
        let mut f = String::new();
        let mut h = String::new();
        for k in 0..self.cross {
            f.push_str(&letter(k));
            h.push_str(&letter(k));
        }
        for k in 0..self.left {
            f.push_str(&letter(self.cross + k).repeat(2));
        }
        for k in 0..self.right {
            h.push_str(&letter(self.cross + self.left + k).repeat(2));
        }
        (f, h)
    }
}

/// Writes the form as a combination of index contractions, if it is one.
pub fn contraction_decomposition(form: &BilinearFormCoefficients) -> Option<Vec<(Contraction, Rational)>> {
    let n = form.n;
    let mut orders = form.entries().map(|(a, b, _)| (a.order() + b.order()) as usize);
    let order = orders.next().unwrap_or(n);
    if orders.any(|o| o != order) {
        return None;
    }
    let patterns = Contraction::all(order);
    let basis: Vec<_> = patterns.iter().map(|p| p.coefficients(n)).collect();
    let mut keys: Vec<(MultiIndex, MultiIndex)> =
        form.entries().map(|(a, b, _)| (a.clone(), b.clone())).collect();
    for map in &basis {
        keys.extend(map.keys().cloned());
    }
    keys.sort();
    keys.dedup();
    let cols = patterns.len();
    let mut rows: Vec<Vec<Rational>> = keys
        .iter()
        .map(|k| {
            let mut row: Vec<Rational> = basis
                .iter()
                .map(|m| m.get(k).cloned().unwrap_or_else(Rational::zero))
                .collect();
            row.push(form.get(&k.0, &k.1));
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let factor = row[c].clone();
                for (v, p) in row.iter_mut().zip(&pivot).skip(c) {
                    *v -= &factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    let mut out = Vec::new();
    for (i, &c) in pivots.iter().enumerate() {
        if !rows[i][cols].is_zero() {
            out.push((patterns[c], rows[i][cols].clone()));
        }
    }
    Some(out)
}

fn latex_coefficient(c: &Rational, first: bool) -> String {
    let sign = if c.is_negative() {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let abs = c.abs();
    let body = if abs.is_one() {
        String::new()
    } else if abs.is_integer() {
        abs.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", abs.numer(), abs.denom())
    };
    if first {
        format!("{sign}{body}")
    } else {
        format!(" {sign} {body}")
    }
}

fn latex_factor(symbol: &str, sub: &str, partials: Partials) -> String {
    match partials {
        Partials::Ordinary => format!("{symbol}_{{;{sub}}}"),
        Partials::D => format!("D_{{{sub}}}{symbol}"),
    }
}

/// LaTeX for `Σ A_{a,b} ∂^a f ∂^b h`, grouped into index contractions when
/// the form is rotation invariant and listed term by term otherwise.
pub fn render_latex(form: &BilinearFormCoefficients) -> String {
    let mut terms = Vec::new();
    match contraction_decomposition(form) {
        Some(parts) => {
            for (pattern, c) in parts {
                let (f, h) = pattern.subscripts();
                let body = format!(
                    "{}\\,{}",
                    latex_factor("f", &f, form.partials),
                    latex_factor("h", &h, form.partials)
                );
                terms.push((c, body));
            }
        }
        None => {
            let explicit = |m: &MultiIndex| -> String {
                m.exponents()
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &e)| std::iter::repeat_n((i + 1).to_string(), e as usize))
                    .collect()
            };
            for (a, b, c) in form.entries() {
                let body = format!(
                    "{}\\,{}",
                    latex_factor("f", &explicit(a), form.partials),
                    latex_factor("h", &explicit(b), form.partials)
                );
                terms.push((c.clone(), body));
            }
        }
    }
    let mut out = format!("\\Omega_{{{}}}(f,h) = ", form.n);
    if terms.is_empty() {
        out.push('0');
        return out;
    }
    if form.pi_power > 0 {
        let _ = write!(out, "\\pi^{{{}}}\\left(", form.pi_power);
    }
    for (i, (c, body)) in terms.iter().enumerate() {
        let coeff = latex_coefficient(c, i == 0);
        let sep = if coeff.ends_with(|ch: char| ch.is_ascii_digit() || ch == '}') {
            "\\,"
        } else {
            ""
        };
        let _ = write!(out, "{coeff}{sep}{body}");
    }
    if form.pi_power > 0 {
        out.push_str("\\right)");
    }
    out.push_str("\\,dx");
    out
}

/// Rescales so that the contraction expansion has the given leading
/// coefficient; used to compare with reference displays.
pub fn normalized_by(form: &BilinearFormCoefficients, target: &Rational) -> Option<BilinearFormCoefficients> {
    let parts = contraction_decomposition(form)?;
    let (_, lead) = parts.first()?;
    Some(form.scale(&(target / lead)))
}
